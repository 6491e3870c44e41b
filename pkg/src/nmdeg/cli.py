"""Scenario-driven command line: parse a JSON scenario, integrate, analyze, report.

Commands::

    nmdeg run <scenario.json> [--out DIR] [--jobs N] [--reproducible] [--export-trajectory]
    nmdeg validate <scenario.json>
    nmdeg list-models

Exit codes: 0 success, 2 schema error, 3 the integrated map failed the
complete-positivity admission check, 4 numerical failure.

Scenario schema (version 1)::

    {
      "schema": 1,
      "name": "eternal",
      "model": "pauli",                  # dephasing | pauli | pump_decay | custom
      "rates": {"gamma1": {"kind": "constant", "value": 1.0}, ...},
      "grid": {"t_max": 10.0, "steps": 10000},
      "analyses": {"nmd": {}, "measures": {"k": [1], "restarts": 64, "seed": 42}, ...},
      "tolerances": {"tol_psd": 1e-9, ...}   # optional overrides
    }

Rate kinds: constant{value}, sinusoid{a,w,phase}, exp_poly{coeffs,decay},
tanh{amplitude,frequency}, tabulated{t,v}, sum{terms}, scale{factor,term}.
The custom model replaces "rates" with "generator": {"dim", "hamiltonian",
"channels": [{"operator", "rate"}]} where complex matrices are nested
[re, im] pairs.

Reports are deterministic for a fixed seed; ``--reproducible`` additionally
drops the wall-clock stamp so repeated runs are byte-identical. CSV output
uses 17 significant digits, comma separators, and LF line endings.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import bloch as bl
from . import divisibility as dv
from . import evolution as ev
from . import generators as gen
from . import operators as ops
from . import witnesses as wit
from .config import DEFAULT, Tolerances, override
from .errors import (
    InvalidInputError,
    NumericalFailureError,
    ScenarioError,
    SingularMapError,
)

SCHEMA_VERSION = 1
MODELS = ("dephasing", "pauli", "pump_decay", "custom")
ANALYSES = ("divisibility", "nmd", "measures", "blp", "entropy", "bloch", "volume")
RATE_KEYS = {
    "dephasing": ("gamma",),
    "pauli": ("gamma1", "gamma2", "gamma3"),
    "pump_decay": ("gamma_plus", "gamma_minus"),
}
DEFAULT_GRID = {"t_max": 10.0, "steps": 10000}
DEFAULT_RESTARTS = 64
DEFAULT_SEED = 42
TOLERANCE_KEYS = (
    "tol_herm",
    "tol_trace",
    "tol_psd",
    "tol_admission",
    "quad_tol",
    "cond_max",
    "kink_factor",
)

MODEL_DESCRIPTIONS = {
    "dephasing": "single-channel qubit decoherence along z; rate key: gamma",
    "pauli": "three-channel random-unitary qubit model; rate keys: gamma1, gamma2, gamma3",
    "pump_decay": "two-level gain/loss model; rate keys: gamma_plus, gamma_minus",
    "custom": "explicit generator: dim, hamiltonian, channels with per-channel rates",
}


@dataclasses.dataclass(frozen=True)
class Scenario:
    """A fully resolved scenario (defaults applied, rates constructed)."""

    name: str
    model: str
    rates: dict[str, gen.RateFunction]
    generator: gen.GeneratorSpec
    grid: ev.TimeGrid
    analyses: dict[str, dict]
    tolerances: Tolerances
    seed: int
    raw: dict


def _require(mapping: dict, key: str, where: str = ""):
    if key not in mapping:
        prefix = f"{where}." if where else ""
        raise ScenarioError(f"missing field: {prefix}{key}")
    return mapping[key]


def _complex_matrix_from_json(data, where: str) -> np.ndarray:
    try:
        arr = np.asarray(data, dtype=float)
    except (TypeError, ValueError):
        raise ScenarioError(f"{where}: expected nested [re, im] pairs") from None
    if arr.ndim != 3 or arr.shape[2] != 2 or arr.shape[0] != arr.shape[1]:
        raise ScenarioError(f"{where}: expected shape (d, d, 2) of [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


def parse_scenario(data: dict, source: str = "<scenario>") -> Scenario:
    """Validate a raw scenario dict and resolve defaults; ScenarioError on failure."""
    if not isinstance(data, dict):
        raise ScenarioError("scenario must be a JSON object")
    schema = data.get("schema", SCHEMA_VERSION)
    if schema != SCHEMA_VERSION:
        raise ScenarioError(f"schema: unsupported version {schema}")
    model = _require(data, "model")
    if model not in MODELS:
        raise ScenarioError(f"model: unknown model '{model}' (expected one of {', '.join(MODELS)})")
    name = data.get("name", Path(source).stem)

    rates: dict[str, gen.RateFunction] = {}
    if model == "custom":
        gspec_data = _require(data, "generator")
        dim = int(_require(gspec_data, "dim", "generator"))
        ham = _complex_matrix_from_json(
            _require(gspec_data, "hamiltonian", "generator"), "generator.hamiltonian"
        )
        channels = []
        for i, ch in enumerate(_require(gspec_data, "channels", "generator")):
            op = _complex_matrix_from_json(
                _require(ch, "operator", f"generator.channels[{i}]"),
                f"generator.channels[{i}].operator",
            )
            rate = gen.rate_from_dict(
                _require(ch, "rate", f"generator.channels[{i}]"),
                f"generator.channels[{i}].rate",
            )
            channels.append((op, rate))
            rates[f"channel{i}"] = rate
        try:
            generator = gen.GeneratorSpec(dim, ham, tuple(channels))
        except ScenarioError:
            raise
        except Exception as exc:
            raise ScenarioError(f"generator: {exc}") from None
    else:
        rate_specs = _require(data, "rates")
        if not isinstance(rate_specs, dict):
            raise ScenarioError("rates: expected an object")
        for key in RATE_KEYS[model]:
            spec = _require(rate_specs, key, "rates")
            rates[key] = gen.rate_from_dict(spec, f"rates.{key}")
        unknown = set(rate_specs) - set(RATE_KEYS[model])
        if unknown:
            raise ScenarioError(f"rates: unexpected keys {sorted(unknown)} for model '{model}'")
        if model == "dephasing":
            generator = gen.dephasing_spec(rates["gamma"])
        elif model == "pauli":
            generator = gen.pauli_spec(rates["gamma1"], rates["gamma2"], rates["gamma3"])
        else:
            generator = gen.pump_decay_spec(rates["gamma_plus"], rates["gamma_minus"])

    grid_data = {**DEFAULT_GRID, **data.get("grid", {})}
    try:
        grid = ev.TimeGrid(t_max=float(grid_data["t_max"]), steps=int(grid_data["steps"]))
    except (InvalidInputError, ValueError, TypeError) as exc:
        raise ScenarioError(f"grid: {exc}") from None

    analyses_data = data.get("analyses", {"nmd": {}})
    if not isinstance(analyses_data, dict):
        raise ScenarioError("analyses: expected an object")
    analyses: dict[str, dict] = {}
    for key, params in analyses_data.items():
        if key not in ANALYSES:
            raise ScenarioError(f"analyses: unknown analysis '{key}'")
        if params is True or params is None:
            params = {}
        if not isinstance(params, dict):
            raise ScenarioError(f"analyses.{key}: expected an object")
        analyses[key] = dict(params)
    ks = analyses.get("measures", {}).get("k", [1])
    if any(int(k) > generator.dim for k in ks):
        raise ScenarioError(f"analyses.measures.k: values must be <= dim {generator.dim}")

    tol_overrides = data.get("tolerances", {})
    if not isinstance(tol_overrides, dict):
        raise ScenarioError("tolerances: expected an object")
    unknown = set(tol_overrides) - set(TOLERANCE_KEYS)
    if unknown:
        raise ScenarioError(f"tolerances: unknown keys {sorted(unknown)}")
    tolerances = override(DEFAULT, **{k: float(v) for k, v in tol_overrides.items()})

    seed = int(analyses.get("measures", {}).get("seed", data.get("seed", DEFAULT_SEED)))
    env_seed = os.environ.get("NMDEG_SEED")
    if env_seed is not None:
        try:
            seed = int(env_seed)
        except ValueError:
            raise ScenarioError(f"NMDEG_SEED: not an integer: {env_seed!r}") from None

    return Scenario(
        name=name,
        model=model,
        rates=rates,
        generator=generator,
        grid=grid,
        analyses=analyses,
        tolerances=tolerances,
        seed=seed,
        raw=data,
    )


def load_scenario(path: str | Path) -> Scenario:
    text = Path(path).read_text()
    if not text.strip():
        data = {}
    else:
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return parse_scenario(data, source=str(path))


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _write_csv(path: Path, header: list[str], columns: list[np.ndarray]) -> None:
    rows = len(columns[0])
    lines = [",".join(header)]
    for i in range(rows):
        lines.append(",".join(_fmt(float(col[i])) for col in columns))
    _atomic_write(path, "\n".join(lines) + "\n")


def _atomic_write(path: Path, text: str) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _intervals(times: np.ndarray, mask: np.ndarray) -> list[list[float]]:
    """Compress a boolean per-step mask into [t_start, t_end] intervals."""
    out: list[list[float]] = []
    start = None
    for i, flag in enumerate(mask):
        if flag and start is None:
            start = times[i]
        elif not flag and start is not None:
            out.append([float(start), float(times[i])])
            start = None
    if start is not None:
        out.append([float(start), float(times[len(mask)])])
    return out


def _scan_summary(steps: list[dv.StepVerdict], times: np.ndarray) -> dict:
    mask = np.array([s.verdict is not None and s.verdict.violated for s in steps])
    floors = [s.verdict.floor for s in steps if s.verdict is not None]
    return {
        "violations": int(mask.sum()),
        "violation_intervals": _intervals(times, mask),
        "floor_min": float(min(floors)) if floors else 0.0,
        "skipped_steps": [s.index for s in steps if s.skipped],
    }


def _criteria_table(scenario: Scenario, times: np.ndarray) -> dict | None:
    sample = times[:: max(1, len(times) // 200)]
    if scenario.model in ("pauli", "dephasing"):
        if scenario.model == "dephasing":
            zero = gen.ConstantRate(0.0)
            g1, g2, g3 = zero, zero, scenario.rates["gamma"]
        else:
            g1, g2, g3 = (scenario.rates[k] for k in RATE_KEYS["pauli"])
        rows = [dv.pauli_criteria(g1, g2, g3, float(t)) for t in sample]
        return {
            "family": "pauli",
            "t": [float(t) for t in sample],
            "cp": [r.cp for r in rows],
            "p": [r.p for r in rows],
            "volume": [r.volume for r in rows],
        }
    if scenario.model == "pump_decay":
        gp, gm = (scenario.rates[k] for k in RATE_KEYS["pump_decay"])
        rows = [dv.pump_decay_criteria(gp, gm, float(t)) for t in sample]
        return {
            "family": "pump_decay",
            "t": [float(t) for t in sample],
            "legit_integrals": [r.legit_integrals for r in rows],
            "cp_div": [r.cp_div for r in rows],
            "p_div": [r.p_div for r in rows],
        }
    return None


def _rate_flags(scenario: Scenario) -> dict:
    flags = {}
    tabulated_extrapolation = False
    gamma_at_t_max = {}
    for key, rate in scenario.rates.items():
        if isinstance(rate, gen.TabulatedRate) and rate.extrapolates_beyond(scenario.grid.t_max):
            tabulated_extrapolation = True
        gamma_at_t_max[key] = gen.gamma_integral(rate, scenario.grid.t_max)
    flags["tabulated_extrapolation"] = tabulated_extrapolation
    flags["gamma_integral_at_t_max"] = gamma_at_t_max
    flags["asymptotic_recoherence"] = bool(
        gamma_at_t_max and all(abs(v) < 1e-6 for v in gamma_at_t_max.values())
    )
    return flags


def run_scenario(
    scenario: Scenario,
    out_dir: str | Path,
    jobs: int = 1,
    reproducible: bool = False,
    export_trajectory: bool = False,
) -> tuple[dict, int]:
    """Integrate, admit, analyze, and write report.json plus requested CSVs.

    Returns (report, exit_code); the report is written even when admission
    fails so the rejection is inspectable.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    tol = scenario.tolerances
    report: dict = {
        "schema": SCHEMA_VERSION,
        "name": scenario.name,
        "model": scenario.model,
        "grid": {"t_max": scenario.grid.t_max, "steps": scenario.grid.steps},
        "seed": scenario.seed,
        "jobs": jobs,
    }
    if not reproducible:
        report["generated_at"] = datetime.now(timezone.utc).isoformat()

    traj = ev.integrate(scenario.generator, scenario.grid)
    times = traj.times
    report["flags"] = _rate_flags(scenario)

    admission = dv.admit_trajectory(traj, tol=tol.tol_admission)
    report["admission"] = {
        "legitimate": admission.legitimate,
        "choi_floor": admission.choi_floor,
        "worst_node": admission.worst_node,
        "worst_time": float(times[admission.worst_node]),
        "tolerance": admission.tolerance,
    }
    if not admission.legitimate:
        report["error"] = (
            "not a legitimate dynamical map: Choi floor "
            f"{admission.choi_floor:.3e} at t={times[admission.worst_node]:.6g}"
        )
        _write_report(out, report)
        return report, 3

    analyses = scenario.analyses
    criteria = _criteria_table(scenario, times)
    if criteria is not None:
        report["criteria"] = criteria

    nmd_report = None
    if "nmd" in analyses or "divisibility" in analyses:
        params = analyses.get("nmd", analyses.get("divisibility", {}))
        budget = int(params.get("budget", DEFAULT_RESTARTS))
        iterations = int(params.get("iterations", 500))
        ks = [int(k) for k in analyses.get("divisibility", {}).get("k", range(1, traj.dim + 1))]
        scans = {}

        def run_scan(k: int):
            return k, dv.scan_divisibility(
                traj, k, tol=tol.tol_psd, budget=budget, iterations=iterations,
                seed=scenario.seed + 1 + k, cond_max=tol.cond_max,
            )

        if jobs > 1:
            with ThreadPoolExecutor(max_workers=jobs) as pool:
                scans = dict(pool.map(run_scan, range(1, traj.dim + 1)))
        else:
            scans = dict(run_scan(k) for k in range(1, traj.dim + 1))

        if "divisibility" in analyses:
            report["divisibility"] = {
                str(k): _scan_summary(scans[k], times) for k in ks if k in scans
            }
        if "nmd" in analyses:
            per_k: dict[int, bool] = {}
            failed_below = False
            violation_mask = {}
            for k in sorted(scans):
                bad = [s for s in scans[k] if s.verdict is not None and s.verdict.violated]
                per_k[k] = not bad and not failed_below
                failed_below = failed_below or bool(bad)
                violation_mask[k] = np.array(
                    [s.verdict is not None and s.verdict.violated for s in scans[k]]
                )
            best = max([k for k, ok in per_k.items() if ok], default=0)
            degree = traj.dim - best
            classification = (
                "markovian"
                if degree == 0
                else "essentially_non_markovian"
                if degree == traj.dim
                else "weakly_non_markovian"
            )
            nmd_report = {
                "per_k_divisible": {str(k): bool(v) for k, v in per_k.items()},
                "degree": degree,
                "classification": classification,
                "violation_intervals": {
                    str(k): _intervals(times, violation_mask[k]) for k in sorted(violation_mask)
                },
                "violation_counts": {str(k): int(violation_mask[k].sum()) for k in violation_mask},
                "skipped_steps": sorted(
                    {s.index for steps in scans.values() for s in steps if s.skipped}
                ),
            }
            report["nmd"] = nmd_report

    if "measures" in analyses:
        params = analyses["measures"]
        ks = sorted(int(k) for k in params.get("k", [1]))
        restarts = int(params.get("restarts", DEFAULT_RESTARTS))
        evals = int(params.get("evals_per_restart", 400))
        measures = []
        previous_best: list[tuple[int, np.ndarray]] = []
        for k in ks:
            inits = [
                wit.embed_witness(x, k_from, k, traj.dim)
                for k_from, x in previous_best
                if k_from <= k
            ]
            est = wit.measure_mk(
                traj,
                k,
                restarts=restarts,
                seed=scenario.seed,
                evals_per_restart=evals,
                init_witnesses=inits or None,
                tol=tol,
            )
            previous_best.append((k, est.best.x))
            measures.append(
                {
                    "k": k,
                    "value": est.value,
                    "n_plus": est.best.n_plus,
                    "n_minus_abs": est.best.n_minus_abs,
                    "restarts_used": est.restarts_used,
                    "kink_count": est.best.kink_count,
                    "truncated_at_t_max": est.truncated_at_t_max,
                    "tail_norm_remaining": float(
                        wit.norm_series_batch(
                            wit.extended_maps(traj, k), wit._vec_batch(est.best.x)
                        )[-1, 0]
                    ),
                }
            )
            flow_csv = out / f"flow_k{k}.csv"
            series = est.best.flow
            _write_csv(flow_csv, ["t", "lambda"], [series.times, series.values])
        report["measures"] = measures

    if "blp" in analyses:
        params = analyses["blp"]
        result = wit.blp_pair_search(
            traj,
            restarts=int(params.get("restarts", 16)),
            seed=scenario.seed + 7,
            evals_per_restart=int(params.get("evals_per_restart", 200)),
        )
        backflow = result.sigma_max > float(params.get("threshold", 1e-4))
        blp_block = {
            "sigma_max": result.sigma_max,
            "t_at_max": result.t,
            "backflow_detected": bool(backflow),
            "rho1_bloch": list(_bloch_tuple(result.rho1)),
            "rho2_bloch": list(_bloch_tuple(result.rho2)),
        }
        if nmd_report is not None:
            blp_block["backflow_implies_essential_ok"] = bool(
                (not backflow) or nmd_report["classification"] == "essentially_non_markovian"
            )
        report["blp"] = blp_block

    if "entropy" in analyses:
        params = analyses["entropy"]
        block: dict = {"unital": wit.is_unital(traj)}
        if block["unital"] and traj.dim == 2:
            found = wit.search_entropy_decrease(
                traj, samples=int(params.get("samples", 200)), seed=scenario.seed + 11
            )
            block.update(
                {
                    "min_entropy_flow": found.value,
                    "t_at_min": found.t,
                    "negative_flow_found": bool(found.value < -1e-5),
                }
            )
        else:
            block["note"] = "entropy monitor requires a unital qubit trajectory"
        rel = wit.search_relative_entropy_increase(
            traj, pairs=int(params.get("pairs", 50)), seed=scenario.seed + 13
        )
        block["max_relative_entropy_flow"] = rel.value
        block["relative_entropy_increase_found"] = bool(rel.value > 1e-5)
        report["entropy"] = block

    if "bloch" in analyses or "volume" in analyses:
        params = analyses.get("bloch", {})
        x0 = params.get("initial_bloch", [0.6, 0.0, 0.8])
        rho0 = bl.from_bloch(np.asarray(x0, dtype=float))
        series = bl.bloch_series(traj, rho0)
        if scenario.model == "dephasing":
            zero = gen.ConstantRate(0.0)
            rate_triple = (zero, zero, scenario.rates["gamma"])
        elif scenario.model == "pauli":
            rate_triple = tuple(scenario.rates[k] for k in RATE_KEYS["pauli"])
        else:
            rate_triple = None
        cols = [times, series[:, 0], series[:, 1], series[:, 2]]
        header = ["t", "x1", "x2", "x3"]
        if rate_triple is not None:
            t_series = np.array(
                [bl.pauli_relaxation_times(*rate_triple, float(t)) for t in times]
            )
            vol = bl.volume_ratio_series(*rate_triple, times)
            cols += [t_series[:, 0], t_series[:, 1], t_series[:, 2], vol]
            header += ["T1", "T2", "T3", "volume_ratio"]
            report["volume"] = {
                "ratio_at_t_max": float(vol[-1]),
                "monotone_decreasing": bool(np.all(np.diff(vol) <= 1e-12)),
            }
        elif scenario.model == "pump_decay":
            gp, gm = (scenario.rates[k] for k in RATE_KEYS["pump_decay"])
            pd = [bl.pump_decay_bloch(gp, gm, float(t)) for t in times]
            cols += [
                np.array([p.t_perp for p in pd]),
                np.array([p.t_perp for p in pd]),
                np.array([p.t_par for p in pd]),
            ]
            header += ["T1", "T2", "T3"]
        if "bloch" in analyses:
            _write_csv(out / "bloch.csv", header, cols)

    if export_trajectory:
        _export_trajectory_csv(out / "trajectory.csv", traj)

    _write_report(out, report)
    return report, 0


def _bloch_tuple(rho: np.ndarray) -> tuple[float, float, float]:
    b = bl.to_bloch(rho)
    return (b.x1, b.x2, b.x3)


def _export_trajectory_csv(path: Path, traj: ev.MapTrajectory) -> None:
    times = traj.times
    if traj.dim == 2:
        basis = ops.hermitian_basis_matrices(2) * np.sqrt(2.0)  # I, sx, sy, sz
        diag = np.empty((traj.n_nodes, 4))
        for j, s in enumerate(basis):
            out = np.einsum("npq,q->np", traj.maps, ops.vec(s), optimize=True)
            evolved = out.reshape(traj.n_nodes, 2, 2).transpose(0, 2, 1)
            diag[:, j] = 0.5 * np.einsum("nij,ji->n", evolved, s).real
        _write_csv(
            path,
            ["t", "pauli_d0", "pauli_d1", "pauli_d2", "pauli_d3"],
            [times] + [diag[:, j] for j in range(4)],
        )
        return
    q2 = traj.maps.shape[1]
    header = ["t"]
    cols = [times]
    for r in range(q2):
        for c in range(q2):
            header += [f"re_{r}_{c}", f"im_{r}_{c}"]
            cols += [traj.maps[:, r, c].real, traj.maps[:, r, c].imag]
    _write_csv(path, header, cols)


def _write_report(out: Path, report: dict) -> None:
    _atomic_write(out / "report.json", json.dumps(_jsonable(report), indent=2, sort_keys=True) + "\n")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, float) and not np.isfinite(obj):
        raise NumericalFailureError(f"non-finite value in report: {obj}")
    return obj


def bundled_scenarios() -> dict[str, Path]:
    """Name -> path of the scenario files shipped with the package."""
    root = Path(__file__).parent / "scenarios"
    return {p.stem: p for p in sorted(root.glob("*.json"))}


def cmd_run(args) -> int:
    try:
        scenario = load_scenario(args.scenario)
    except ScenarioError as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return 2
    try:
        report, code = run_scenario(
            scenario,
            args.out,
            jobs=args.jobs,
            reproducible=args.reproducible,
            export_trajectory=args.export_trajectory,
        )
    except (NumericalFailureError, SingularMapError, InvalidInputError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 4
    if code == 3:
        print(f"admission failure: {report['error']}", file=sys.stderr)
        return 3
    summary = []
    if "nmd" in report:
        summary.append(
            f"degree={report['nmd']['degree']} ({report['nmd']['classification']})"
        )
    for m in report.get("measures", []):
        summary.append(f"M{m['k']}={m['value']:.4f}")
    print(f"{scenario.name}: " + (", ".join(summary) if summary else "done"))
    return 0


def cmd_validate(args) -> int:
    try:
        scenario = load_scenario(args.scenario)
    except ScenarioError as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return 2
    resolved = {
        "name": scenario.name,
        "model": scenario.model,
        "grid": {"t_max": scenario.grid.t_max, "steps": scenario.grid.steps},
        "rates": {k: gen.rate_to_dict(r) for k, r in scenario.rates.items()},
        "analyses": scenario.analyses,
        "seed": scenario.seed,
    }
    print(json.dumps(resolved, indent=2, sort_keys=True))
    return 0


def cmd_list_models(args) -> int:
    print("models:")
    for model in MODELS:
        print(f"  {model:11s} {MODEL_DESCRIPTIONS[model]}")
    bundled = bundled_scenarios()
    if bundled:
        print("bundled scenarios:")
        for name, path in bundled.items():
            print(f"  {name:13s} {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nmdeg",
        description="Simulate time-local quantum master equations and grade their non-Markovianity.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a scenario and write report.json + CSVs")
    run_p.add_argument("scenario", help="path to a scenario JSON file")
    run_p.add_argument("--out", default="out", help="output directory (default: ./out)")
    run_p.add_argument("--jobs", type=int, default=1, help="worker threads for independent scans")
    run_p.add_argument(
        "--reproducible",
        action="store_true",
        help="omit wall-clock metadata so repeated runs are byte-identical",
    )
    run_p.add_argument(
        "--export-trajectory", action="store_true", help="also write trajectory.csv"
    )
    run_p.set_defaults(func=cmd_run)

    val_p = sub.add_parser("validate", help="validate a scenario file without running it")
    val_p.add_argument("scenario", help="path to a scenario JSON file")
    val_p.set_defaults(func=cmd_validate)

    lm_p = sub.add_parser("list-models", help="list model families and bundled scenarios")
    lm_p.set_defaults(func=cmd_list_models)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
