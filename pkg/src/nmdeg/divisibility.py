"""k-positivity of propagators, divisibility scans, and the non-Markovianity degree.

A map on a d-level system is k-positive iff its Choi matrix has nonnegative
expectation on every vector of Schmidt rank <= k. Violations are certified
exactly: a returned certificate is a concrete low-rank vector whose
expectation is negative, so "violated" is a proof while "positive" is only
"positive within the search budget" (deciding k-positivity exactly is
intractable in general). At ``k == dim`` the Schmidt constraint is vacuous
and scans use the exact Choi-eigenvalue oracle instead of the optimizer.

Degree bookkeeping: a trajectory that is m-divisible but not (m+1)-divisible
on the grid gets degree ``n - m``; degree 0 is Markovian, degree n means even
stepwise positivity fails somewhere.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_simpson

from .config import DEFAULT
from .errors import BudgetError, DimensionMismatchError, InvalidInputError
from . import operators as ops
from .evolution import MapTrajectory, adjacent_propagators
from .generators import RateFunction

STATUS_POSITIVE = "positive_within_budget"
STATUS_VIOLATED = "violated"


@dataclass(frozen=True)
class Certificate:
    """Normalized vector of Schmidt rank <= k with negative Choi expectation."""

    vector: np.ndarray
    value: float
    k: int

    def expectation(self, choi_entries: np.ndarray) -> float:
        v = self.vector
        return float(np.real(v.conj() @ choi_entries @ v))


@dataclass(frozen=True)
class KPositivityVerdict:
    k: int
    status: str
    floor: float
    certificate: Certificate | None = None

    @property
    def violated(self) -> bool:
        return self.status == STATUS_VIOLATED


@dataclass(frozen=True)
class StepVerdict:
    """Per-step scan outcome; ``skipped`` flags an ill-conditioned base node."""

    index: int
    t: float
    verdict: KPositivityVerdict | None
    skipped: bool = False
    condition_number: float = float("nan")


@dataclass(frozen=True)
class NMDReport:
    per_k_divisible: dict[int, bool]
    degree: int
    classification: str
    violation_times: tuple[tuple[float, int], ...]
    skipped_steps: tuple[int, ...] = ()

    CLASSES = ("markovian", "weakly_non_markovian", "essentially_non_markovian")


@dataclass(frozen=True)
class AdmissionReport:
    """Global complete-positivity check of the trajectory itself."""

    legitimate: bool
    choi_floor: float
    worst_node: int
    tolerance: float


def _choi_of_superoperator(v) -> tuple[np.ndarray, int]:
    if isinstance(v, ops.Superoperator):
        if v.dim_in != v.dim_out:
            raise DimensionMismatchError("k-positivity test requires a square map")
        return ops.choi_matrix_of(v.matrix, v.dim_in), v.dim_in
    if isinstance(v, ops.ChoiMatrix):
        return v.entries, v.dim
    m = np.asarray(v, dtype=complex)
    d = round(m.shape[0] ** 0.5) if m.ndim == 2 else 0
    if m.ndim != 2 or m.shape[0] != m.shape[1] or d * d != m.shape[0]:
        raise DimensionMismatchError("expected a Superoperator or a (d^2, d^2) matrix")
    return ops.choi_matrix_of(m, d), d


def is_completely_positive(v, tol: float = DEFAULT.tol_psd) -> KPositivityVerdict:
    """Exact complete-positivity verdict from the Choi eigenvalue floor."""
    c, d = _choi_of_superoperator(v)
    vals, vecs = np.linalg.eigh(c)
    floor = float(vals[0])
    if floor < -tol:
        cert = Certificate(vector=np.ascontiguousarray(vecs[:, 0]), value=floor, k=d)
        return KPositivityVerdict(k=d, status=STATUS_VIOLATED, floor=floor, certificate=cert)
    return KPositivityVerdict(k=d, status=STATUS_POSITIVE, floor=floor)


def is_k_positive(
    v,
    k: int,
    budget: int = 64,
    tol: float = DEFAULT.tol_psd,
    iterations: int = 500,
    seed: int = 0,
) -> KPositivityVerdict:
    """One-sided k-positivity verdict by multistart projected-gradient descent.

    Minimizes the Choi expectation over normalized vectors assembled from k
    product-term pairs; ``budget`` restarts, renormalization after every step,
    step halving on non-decrease.
    """
    c, d = _choi_of_superoperator(v)
    if not 1 <= k <= d:
        raise InvalidInputError(f"k must be in [1, {d}], got {k}")
    if budget <= 0:
        raise BudgetError(f"budget must be positive, got {budget}")
    floors, vectors = min_schmidt_expectation(
        c[None, :, :], d, k, budget=budget, iterations=iterations, seed=seed
    )
    floor = float(floors[0])
    if floor < -tol:
        cert = Certificate(vector=vectors[0], value=floor, k=k)
        return KPositivityVerdict(k=k, status=STATUS_VIOLATED, floor=floor, certificate=cert)
    return KPositivityVerdict(k=k, status=STATUS_POSITIVE, floor=floor)


def min_schmidt_expectation(
    chois: np.ndarray,
    d: int,
    k: int,
    budget: int,
    iterations: int = 500,
    seed: int = 0,
    chunk: int = 200_000,
) -> tuple[np.ndarray, np.ndarray]:
    """Batched minimization of <psi|C|psi> over Schmidt-rank-<=k unit vectors.

    ``chois`` has shape (S, d^2, d^2); returns (floors (S,), vectors (S, d^2)).
    Each descent runs on parameters (a_i, b_i), i < k, with psi = sum_i a_i
    (tensor) b_i; every reported floor is the exact expectation of the
    returned unit vector, so floors can never undershoot the true minimum.
    """
    s_total = chois.shape[0]
    rng = np.random.default_rng(seed)
    floors = np.empty(s_total)
    vectors = np.empty((s_total, d * d), dtype=complex)
    per = max(1, chunk // max(1, budget * k * d))
    for start in range(0, s_total, per):
        sl = slice(start, min(start + per, s_total))
        f, v = _min_schmidt_chunk(chois[sl], d, k, budget, iterations, rng)
        floors[sl] = f
        vectors[sl] = v
    return floors, vectors


def _min_schmidt_chunk(c, d, k, budget, iterations, rng):
    s = c.shape[0]
    b = budget
    shape = (s, b, k, d)
    a = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    bb = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    eta = np.full((s, b), 0.5)

    def assemble(aa, bbb):
        psi = np.einsum("sbki,sbkm->sbim", aa, bbb, optimize=True).reshape(s, b, d * d)
        norm = np.sqrt(np.einsum("sbp,sbp->sb", psi.conj(), psi).real)
        norm = np.maximum(norm, 1e-300)
        scale = np.sqrt(norm)[:, :, None, None]
        return aa / scale, bbb / scale, psi / norm[:, :, None]

    def rayleigh(psi):
        cpsi = np.einsum("spq,sbq->sbp", c, psi, optimize=True)
        return np.einsum("sbp,sbp->sb", psi.conj(), cpsi).real, cpsi

    a, bb, psi = assemble(a, bb)
    f, cpsi = rayleigh(psi)
    best_f = f.copy()
    best_psi = psi.copy()

    for _ in range(iterations):
        resid = (cpsi - f[:, :, None] * psi).reshape(s, b, d, d)
        ga = np.einsum("sbim,sbkm->sbki", resid, bb.conj(), optimize=True)
        gb = np.einsum("sbim,sbki->sbkm", resid, a.conj(), optimize=True)
        step = eta[:, :, None, None]
        a_try = a - step * ga
        b_try = bb - step * gb
        a_try, b_try, psi_try = assemble(a_try, b_try)
        f_try, cpsi_try = rayleigh(psi_try)
        improved = f_try < f - 1e-15
        imp4 = improved[:, :, None, None]
        a = np.where(imp4, a_try, a)
        bb = np.where(imp4, b_try, bb)
        psi = np.where(improved[:, :, None], psi_try, psi)
        cpsi = np.where(improved[:, :, None], cpsi_try, cpsi)
        f = np.where(improved, f_try, f)
        eta = np.where(improved, eta, eta * 0.5)
        better = f < best_f
        best_f = np.where(better, f, best_f)
        best_psi = np.where(better[:, :, None], psi, best_psi)
        if eta.max() < 1e-9:
            break

    pick = np.argmin(best_f, axis=1)
    rows = np.arange(s)
    return best_f[rows, pick], best_psi[rows, pick]


def scan_divisibility(
    traj: MapTrajectory,
    k: int,
    tol: float = DEFAULT.tol_psd,
    budget: int = 64,
    iterations: int = 500,
    seed: int = 0,
    cond_max: float = DEFAULT.cond_max,
) -> list[StepVerdict]:
    """Verdict for every adjacent-step propagator V(t + dt, t).

    Ill-conditioned base nodes are flagged as skipped gaps, not failures.
    """
    if not 1 <= k <= traj.dim:
        raise InvalidInputError(f"k must be in [1, {traj.dim}], got {k}")
    if budget <= 0:
        raise BudgetError(f"budget must be positive, got {budget}")
    v, skipped = adjacent_propagators(traj, cond_max=cond_max)
    chois = ops.choi_batch(v, traj.dim)
    ts = traj.times[:-1]
    if k == traj.dim:
        vals, vecs = np.linalg.eigh(chois)
        floors = vals[:, 0]
        vectors = vecs[:, :, 0]
    else:
        active = ~skipped
        floors = np.zeros(chois.shape[0])
        vectors = np.zeros((chois.shape[0], traj.dim**2), dtype=complex)
        if active.any():
            fl, ve = min_schmidt_expectation(
                chois[active], traj.dim, k, budget=budget, iterations=iterations, seed=seed
            )
            floors[active] = fl
            vectors[active] = ve
    out = []
    for i in range(chois.shape[0]):
        if skipped[i]:
            out.append(
                StepVerdict(
                    index=i,
                    t=float(ts[i]),
                    verdict=None,
                    skipped=True,
                    condition_number=float(traj.condition_numbers[i]),
                )
            )
            continue
        floor = float(floors[i])
        if floor < -tol:
            cert = Certificate(vector=vectors[i], value=floor, k=k)
            verdict = KPositivityVerdict(k=k, status=STATUS_VIOLATED, floor=floor, certificate=cert)
        else:
            verdict = KPositivityVerdict(k=k, status=STATUS_POSITIVE, floor=floor)
        out.append(
            StepVerdict(
                index=i,
                t=float(ts[i]),
                verdict=verdict,
                condition_number=float(traj.condition_numbers[i]),
            )
        )
    return out


def nmd(
    traj: MapTrajectory,
    tol: float = DEFAULT.tol_psd,
    budget: int = 64,
    iterations: int = 500,
    seed: int = 0,
    cond_max: float = DEFAULT.cond_max,
) -> NMDReport:
    """Degree and classification from per-k divisibility scans.

    A violation certified at level k is inherited by every level above it
    (the same certificate applies), which keeps the per-k verdicts monotone
    even if a higher-k search would have missed the witness.
    """
    n = traj.dim
    per_k: dict[int, bool] = {}
    violations: list[tuple[float, int]] = []
    skipped_steps: set[int] = set()
    failed_below = False
    for k in range(1, n + 1):
        steps = scan_divisibility(
            traj, k, tol=tol, budget=budget, iterations=iterations, seed=seed, cond_max=cond_max
        )
        bad = [s for s in steps if s.verdict is not None and s.verdict.violated]
        skipped_steps.update(s.index for s in steps if s.skipped)
        divisible = not bad and not failed_below
        per_k[k] = divisible
        violations.extend((s.t, k) for s in bad)
        failed_below = failed_below or bool(bad)
    best = max([k for k, ok in per_k.items() if ok], default=0)
    degree = n - best
    if degree == 0:
        classification = "markovian"
    elif degree == n:
        classification = "essentially_non_markovian"
    else:
        classification = "weakly_non_markovian"
    return NMDReport(
        per_k_divisible=per_k,
        degree=degree,
        classification=classification,
        violation_times=tuple(sorted(violations)),
        skipped_steps=tuple(sorted(skipped_steps)),
    )


def admit_trajectory(traj: MapTrajectory, tol: float = DEFAULT.tol_admission) -> AdmissionReport:
    """Check that every node map is completely positive (Choi floor >= -tol)."""
    chois = ops.choi_batch(traj.maps, traj.dim)
    floors = np.linalg.eigvalsh(chois)[:, 0]
    worst = int(np.argmin(floors))
    floor = float(floors[worst])
    return AdmissionReport(
        legitimate=bool(floor >= -tol), choi_floor=floor, worst_node=worst, tolerance=tol
    )


@dataclass(frozen=True)
class PauliCriteria:
    """Pointwise rate inequalities for the three-channel qubit model."""

    cp: bool      # all rates nonnegative (stepwise complete positivity)
    p: bool       # all pairwise rate sums nonnegative (stepwise positivity)
    volume: bool  # total rate sum nonnegative (accessible volume shrinks)


def pauli_criteria(
    gamma1: RateFunction, gamma2: RateFunction, gamma3: RateFunction, t: float
) -> PauliCriteria:
    g = np.array([float(gamma1(t)), float(gamma2(t)), float(gamma3(t))])
    pairwise = np.array([g[1] + g[2], g[0] + g[2], g[0] + g[1]])
    return PauliCriteria(
        cp=bool(np.all(g >= 0.0)),
        p=bool(np.all(pairwise >= 0.0)),
        volume=bool(g.sum() >= 0.0),
    )


@dataclass(frozen=True)
class PumpDecayCriteria:
    """Divisibility and legitimacy conditions for the gain/loss qubit model."""

    legit_integrals: bool  # 0 <= int gamma_pm e^Gamma <= e^Gamma - 1 up to t
    cp_div: bool           # both rates nonnegative at t
    p_div: bool            # rate sum nonnegative at t


def pump_decay_criteria(
    gamma_plus: RateFunction,
    gamma_minus: RateFunction,
    t: float,
    n_quad: int = 2000,
) -> PumpDecayCriteria:
    gp = float(gamma_plus(t))
    gm = float(gamma_minus(t))
    if t == 0.0:
        legit = True
    else:
        fine = np.linspace(0.0, t, 2 * n_quad + 1)
        vp = np.asarray(gamma_plus(fine), dtype=float)
        vm = np.asarray(gamma_minus(fine), dtype=float)
        big_gamma = cumulative_simpson(vp + vm, x=fine, initial=0.0)
        weight = np.exp(big_gamma)
        ip = float(cumulative_simpson(vp * weight, x=fine, initial=0.0)[-1])
        im = float(cumulative_simpson(vm * weight, x=fine, initial=0.0)[-1])
        upper = float(np.exp(big_gamma[-1]) - 1.0)
        slack = 1e-9 * max(1.0, abs(upper))
        legit = bool(
            -slack <= ip <= upper + slack and -slack <= im <= upper + slack
        )
    return PumpDecayCriteria(
        legit_integrals=legit,
        cp_div=bool(gp >= 0.0 and gm >= 0.0),
        p_div=bool(gp + gm >= 0.0),
    )
