"""Trace-norm flows, witness optimization, and entropy monitors.

The flow of a Hermitian operator X at ancilla level k is the time derivative
of ``t -> || (id_k tensor M_t)(X) ||_1``, estimated on the trajectory grid by
central differences (one-sided at the boundaries). Trace-norm derivatives can
be discontinuous at singular-value crossings, so nodes where the one-sided
derivatives disagree by more than ``kink_factor * dt`` carry a kink flag;
they enter the positive/negative flow integrals through their one-sided
pieces, which for the trapezoid rule below reduces exactly to the sum of
norm increments.

Measures: ``measure_mk`` maximizes (total norm increase) / (total norm
decrease) over traceless unit-trace-norm witnesses by seeded multistart
pattern search; the reported value is a lower bound for the supremum,
truncated at t_max.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import DEFAULT, Tolerances
from .errors import (
    BudgetError,
    DegenerateInputError,
    DimensionMismatchError,
    InvalidInputError,
    NotApplicableError,
)
from . import operators as ops
from .evolution import MapTrajectory


@dataclass(frozen=True)
class FlowSeries:
    """Sampled flow with kink flags; values[i] is the derivative at node i."""

    times: np.ndarray
    values: np.ndarray
    kinks: np.ndarray

    @property
    def kink_count(self) -> int:
        return int(self.kinks.sum())


@dataclass(frozen=True)
class WitnessResult:
    """A witness in canonical gauge (traceless, unit trace norm) with its flow budget."""

    x: np.ndarray
    n_plus: float
    n_minus_abs: float
    ratio: float
    flow: FlowSeries = field(repr=False)

    @property
    def kink_count(self) -> int:
        return self.flow.kink_count


@dataclass(frozen=True)
class MeasureEstimate:
    """Lower bound on the level-k measure; ``value == best.ratio``."""

    k: int
    value: float
    best: WitnessResult
    restarts_used: int
    truncated_at_t_max: bool = True


@dataclass(frozen=True)
class BlpSearchResult:
    sigma_max: float
    node: int
    t: float
    rho1: np.ndarray
    rho2: np.ndarray


@dataclass(frozen=True)
class StateSearchResult:
    """Most extreme flow found by random state (pair) search."""

    value: float
    node: int
    t: float
    state: np.ndarray
    second_state: np.ndarray | None = None


def extended_maps(traj: MapTrajectory, k: int, max_extended_dim: int = DEFAULT.max_extended_dim) -> np.ndarray:
    """Stack of ``id_k tensor M_t`` matrices over the grid, shape (n, (kd)^2, (kd)^2)."""
    d = traj.dim
    if k < 1:
        raise InvalidInputError(f"k must be >= 1, got {k}")
    if k == 1:
        return traj.maps
    if k * d > max_extended_dim:
        raise InvalidInputError(f"extended dimension {k * d} exceeds {max_extended_dim}")
    m4 = traj.maps.reshape(traj.n_nodes, d, d, d, d)
    eye = np.eye(k)
    n = np.einsum("bB,ncrCR,aA->nbcarBCAR", eye, m4, eye, optimize=True)
    q = k * d
    return np.ascontiguousarray(n.reshape(traj.n_nodes, q * q, q * q))


def norm_series_batch(ext_maps: np.ndarray, xvecs: np.ndarray) -> np.ndarray:
    """Trace norms of evolved Hermitian operators.

    ``ext_maps``: (n, q^2, q^2); ``xvecs``: (c, q^2) column-stacked operators.
    Returns (n, c). Evolved operators stay Hermitian, so eigenvalue-based
    norms apply.
    """
    n, q2, _ = ext_maps.shape
    q = round(q2**0.5)
    out = np.einsum("npq,cq->ncp", ext_maps, xvecs, optimize=True)
    herm = out.reshape(n, -1, q, q).transpose(0, 1, 3, 2)  # unvec: column-major
    return ops.hermitian_trace_norms(herm)


def flows_from_norms(g: np.ndarray, dt: float, kink_factor: float = DEFAULT.kink_factor):
    """Central-difference flows plus kink flags from a norm series (axis 0)."""
    lam = np.empty_like(g)
    lam[0] = (g[1] - g[0]) / dt
    lam[-1] = (g[-1] - g[-2]) / dt
    lam[1:-1] = (g[2:] - g[:-2]) / (2.0 * dt)
    left = (g[1:-1] - g[:-2]) / dt
    right = (g[2:] - g[1:-1]) / dt
    kinks = np.zeros(g.shape, dtype=bool)
    kinks[1:-1] = np.abs(right - left) > kink_factor * dt
    return lam, kinks


def _vec_batch(x: np.ndarray) -> np.ndarray:
    """Column-stack one operator or a stack of operators into row vectors."""
    if x.ndim == 2:
        return ops.vec(x)[None, :]
    q = x.shape[-1]
    return x.transpose(0, 2, 1).reshape(x.shape[0], q * q)


def _check_witness_dim(traj: MapTrajectory, x: np.ndarray, k: int) -> np.ndarray:
    m = ops._as_complex_matrix(x)
    q = k * traj.dim
    if m.shape != (q, q):
        raise DimensionMismatchError(f"witness shape {m.shape} != ({q}, {q}) for k={k}")
    return m


def flow_profile(traj: MapTrajectory, x, k: int = 1) -> FlowSeries:
    """Full flow series of a Hermitian operator at ancilla level k."""
    m = _check_witness_dim(traj, x, k)
    ext = extended_maps(traj, k)
    g = norm_series_batch(ext, _vec_batch(m))[:, 0]
    lam, kinks = flows_from_norms(g, traj.dt)
    return FlowSeries(times=traj.times, values=lam, kinks=kinks)


def flow_lambda(traj: MapTrajectory, x, k: int, i_t: int) -> float:
    """Flow at a single grid node (central difference; one-sided at the ends)."""
    series = flow_profile(traj, x, k)
    if not 0 <= i_t < traj.n_nodes:
        raise InvalidInputError(f"node {i_t} out of range")
    return float(series.values[i_t])


def _integrate_parts(lam: np.ndarray, dt: float) -> tuple[float, float]:
    n_plus = float(np.trapezoid(np.clip(lam, 0.0, None), dx=dt, axis=0))
    n_minus = float(np.trapezoid(np.clip(-lam, 0.0, None), dx=dt, axis=0))
    return n_plus, n_minus


def n_plus_minus(traj: MapTrajectory, x, k: int = 1) -> tuple[float, float]:
    """Total norm increase and decrease (absolute) over [0, t_max].

    Trapezoidal integration of the positive/negative flow parts; with the
    central/one-sided difference scheme used here the difference
    ``n_plus - n_minus_abs`` telescopes exactly to ``g(t_max) - g(0)``.
    """
    series = flow_profile(traj, x, k)
    return _integrate_parts(series.values, traj.dt)


def _ratios_from_norms(g: np.ndarray, dt: float, ratio_floor: float) -> np.ndarray:
    """Backflow ratios for a batch of norm series, shape (n, c) -> (c,)."""
    lam = np.empty_like(g)
    lam[0] = (g[1] - g[0]) / dt
    lam[-1] = (g[-1] - g[-2]) / dt
    lam[1:-1] = (g[2:] - g[:-2]) / (2.0 * dt)
    n_plus = np.trapezoid(np.clip(lam, 0.0, None), dx=dt, axis=0)
    n_minus = np.trapezoid(np.clip(-lam, 0.0, None), dx=dt, axis=0)
    return np.where(n_minus > ratio_floor, n_plus / np.maximum(n_minus, ratio_floor), 0.0)


class _RatioObjective:
    """Batched witness -> backflow-ratio map over the traceless Hermitian basis."""

    def __init__(self, traj: MapTrajectory, k: int, tol: Tolerances = DEFAULT, chunk: int = 4_000_000):
        self.ext = extended_maps(traj, k)
        self.dt = traj.dt
        q = k * traj.dim
        basis = ops.hermitian_basis_matrices(q)[1:]  # traceless part
        self.basis_vecs = _vec_batch(basis)
        self.n_params = self.basis_vecs.shape[0]
        self.ratio_floor = tol.ratio_floor
        self.max_cand = max(1, chunk // (self.ext.shape[0] * q * q))

    def x_vectors(self, coords: np.ndarray) -> np.ndarray:
        coords = np.atleast_2d(coords)
        norms = np.linalg.norm(coords, axis=1, keepdims=True)
        coords = coords / np.maximum(norms, 1e-300)
        return coords @ self.basis_vecs

    def __call__(self, coords: np.ndarray) -> np.ndarray:
        xv = self.x_vectors(coords)
        out = np.empty(xv.shape[0])
        for s in range(0, xv.shape[0], self.max_cand):
            sl = slice(s, min(s + self.max_cand, xv.shape[0]))
            g = norm_series_batch(self.ext, xv[sl])
            out[sl] = _ratios_from_norms(g, self.dt, self.ratio_floor)
        return out


def pattern_search_maximize(
    objective,
    starts: np.ndarray,
    step0: float,
    evals_per_restart: int,
    min_step: float = 1e-4,
):
    """Lockstep coordinate pattern search over a batch of restarts.

    ``objective`` maps (m, p) parameter rows to (m,) values; each restart
    polls +/- step along every coordinate, moves to the best improving
    candidate, and halves its step when no poll improves.
    """
    x = np.array(starts, dtype=float)
    b, p = x.shape
    f = objective(x)
    steps = np.full(b, float(step0))
    evals = 0
    while evals < evals_per_restart and steps.max() > min_step:
        offsets = np.concatenate([np.eye(p), -np.eye(p)])  # (2p, p)
        cands = x[:, None, :] + steps[:, None, None] * offsets[None, :, :]
        fc = objective(cands.reshape(b * 2 * p, p)).reshape(b, 2 * p)
        best_idx = np.argmax(fc, axis=1)
        best_val = fc[np.arange(b), best_idx]
        improved = best_val > f + 1e-15
        x[improved] = cands[np.arange(b), best_idx][improved]
        f[improved] = best_val[improved]
        steps[~improved] *= 0.5
        evals += 2 * p
    return x, f


def measure_mk(
    traj: MapTrajectory,
    k: int,
    restarts: int = 64,
    seed: int = 42,
    evals_per_restart: int = 400,
    init_witnesses: list[np.ndarray] | None = None,
    tol: Tolerances = DEFAULT,
) -> MeasureEstimate:
    """Multistart maximization of the backflow ratio over level-k witnesses.

    Deterministic under a fixed seed. ``init_witnesses`` seeds extra restarts
    (e.g. embeddings of lower-level optima), which preserves the measure
    hierarchy across levels. The result is a lower bound for the supremum,
    truncated at t_max.
    """
    if restarts <= 0:
        raise BudgetError(f"restarts must be positive, got {restarts}")
    obj = _RatioObjective(traj, k, tol=tol)
    rng = np.random.default_rng(seed)
    starts = rng.standard_normal((restarts, obj.n_params))
    extra = []
    for w in init_witnesses or []:
        m = _check_witness_dim(traj, np.asarray(w, dtype=complex), k)
        coords = np.real(obj.basis_vecs.conj() @ ops.vec(m))
        extra.append(coords)
    if extra:
        starts = np.vstack([np.array(extra), starts])
    starts /= np.maximum(np.linalg.norm(starts, axis=1, keepdims=True), 1e-300)
    xs, fs = pattern_search_maximize(obj, starts, step0=0.5, evals_per_restart=evals_per_restart)
    best_row = int(np.argmax(fs))
    coords = xs[best_row] / np.linalg.norm(xs[best_row])
    x_mat = ops.unvec(obj.x_vectors(coords)[0], k * traj.dim)
    x_mat = 0.5 * (x_mat + x_mat.conj().T)
    x_mat /= ops.trace_norm(x_mat)  # canonical gauge
    series = flow_profile(traj, x_mat, k)
    n_plus, n_minus = _integrate_parts(series.values, traj.dt)
    ratio = n_plus / n_minus if n_minus > tol.ratio_floor else 0.0
    best = WitnessResult(x=x_mat, n_plus=n_plus, n_minus_abs=n_minus, ratio=ratio, flow=series)
    return MeasureEstimate(
        k=k, value=ratio, best=best, restarts_used=starts.shape[0]
    )


def embed_witness(x: np.ndarray, k_from: int, k_to: int, dim: int) -> np.ndarray:
    """Embed a level-k witness into level k' > k as the top-left ancilla block."""
    if k_to < k_from:
        raise InvalidInputError("can only embed into a larger ancilla")
    x = np.asarray(x, dtype=complex)
    small = x.reshape(k_from, dim, k_from, dim)
    out = np.zeros((k_to, dim, k_to, dim), dtype=complex)
    out[:k_from, :, :k_from, :] = small
    return out.reshape(k_to * dim, k_to * dim)


def blp_sigma(traj: MapTrajectory, rho1, rho2, i_t: int) -> float:
    """Time derivative of the trace distance between two evolved states."""
    r1 = ops._as_complex_matrix(rho1)
    r2 = ops._as_complex_matrix(rho2)
    delta = r1 - r2
    if ops.trace_norm(delta) < 1e-14:
        raise DegenerateInputError("blp_sigma requires two distinct states")
    return flow_lambda(traj, delta, 1, i_t)


def blp_pair_search(
    traj: MapTrajectory,
    restarts: int = 16,
    seed: int = 0,
    evals_per_restart: int = 200,
) -> BlpSearchResult:
    """Maximize the trace-distance flow over pairs of pure qubit states.

    Pairs are parametrized by Bloch angles; the objective is the largest
    interior non-kink flow value along the trajectory.
    """
    if traj.dim != 2:
        raise NotApplicableError("Bloch-angle pair search is defined for qubits")
    if restarts <= 0:
        raise BudgetError(f"restarts must be positive, got {restarts}")
    maps = traj.maps
    dt = traj.dt

    def states(angles: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        th1, ph1, th2, ph2 = angles[:, 0], angles[:, 1], angles[:, 2], angles[:, 3]

        def bloch(th, ph):
            x = np.sin(th) * np.cos(ph)
            y = np.sin(th) * np.sin(ph)
            z = np.cos(th)
            rho = np.zeros((th.size, 2, 2), dtype=complex)
            rho[:, 0, 0] = 0.5 * (1 + z)
            rho[:, 1, 1] = 0.5 * (1 - z)
            rho[:, 0, 1] = 0.5 * (x - 1j * y)
            rho[:, 1, 0] = 0.5 * (x + 1j * y)
            return rho

        return bloch(th1, ph1), bloch(th2, ph2)

    def objective(angles: np.ndarray) -> np.ndarray:
        r1, r2 = states(np.atleast_2d(angles))
        delta = _vec_batch(r1 - r2)
        g = norm_series_batch(maps, delta)
        lam, kinks = flows_from_norms(g, dt)
        interior = lam[1:-1]
        interior = np.where(kinks[1:-1], -np.inf, interior)
        return interior.max(axis=0)

    rng = np.random.default_rng(seed)
    starts = rng.uniform(0.0, np.pi, (restarts, 4))
    starts[:, 1] *= 2.0
    starts[:, 3] *= 2.0
    xs, fs = pattern_search_maximize(objective, starts, step0=0.6, evals_per_restart=evals_per_restart)
    best = int(np.argmax(fs))
    r1, r2 = states(xs[best][None, :])
    delta = _vec_batch(r1[0] - r2[0])
    g = norm_series_batch(maps, delta)
    lam, kinks = flows_from_norms(g, dt)
    interior = np.where(kinks[1:-1], -np.inf, lam[1:-1])
    node = int(np.argmax(interior)) + 1
    return BlpSearchResult(
        sigma_max=float(fs[best]),
        node=node,
        t=float(traj.times[node]),
        rho1=r1[0],
        rho2=r2[0],
    )


def _entropies(rhos: np.ndarray) -> np.ndarray:
    """Von Neumann entropies of a stack of states (natural log)."""
    vals = np.linalg.eigvalsh(rhos)
    vals = np.clip(vals, 0.0, None)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(vals > 0.0, vals * np.log(vals), 0.0)
    return -terms.sum(axis=-1)


def evolve_states(traj: MapTrajectory, rhos: np.ndarray) -> np.ndarray:
    """Apply every node map to a stack of states: result (n_nodes, c, d, d)."""
    vecs = _vec_batch(rhos if rhos.ndim == 3 else rhos[None, :, :])
    out = np.einsum("npq,cq->ncp", traj.maps, vecs, optimize=True)
    d = traj.dim
    return out.reshape(traj.n_nodes, -1, d, d).transpose(0, 1, 3, 2)


def is_unital(traj: MapTrajectory, tol: float = DEFAULT.tol_trace) -> bool:
    eye = ops.vec(np.eye(traj.dim))
    defect = traj.maps @ eye - eye
    return bool(np.abs(defect).max() <= tol * traj.dim)


def entropy_flow(traj: MapTrajectory, rho, i_t: int) -> float:
    """Entropy derivative at a node for unital qubit trajectories.

    Negative values beyond tolerance certify failure of stepwise positivity.
    """
    if traj.dim != 2 or not is_unital(traj):
        raise NotApplicableError("entropy monitor requires a unital qubit trajectory")
    r = ops._as_complex_matrix(rho)
    if r.shape != (2, 2):
        raise DimensionMismatchError("expected a qubit state")
    s = _entropies(evolve_states(traj, r[None, :, :])[:, 0])
    return _node_derivative(s, traj.dt, i_t)


def entropy_flow_series(traj: MapTrajectory, rhos: np.ndarray) -> np.ndarray:
    """Entropy flows for a stack of states, shape (n_nodes, c)."""
    if traj.dim != 2 or not is_unital(traj):
        raise NotApplicableError("entropy monitor requires a unital qubit trajectory")
    s = _entropies(evolve_states(traj, rhos))
    lam, _ = flows_from_norms(s, traj.dt)
    return lam


def _node_derivative(series: np.ndarray, dt: float, i_t: int) -> float:
    n = series.shape[0]
    if not 0 <= i_t < n:
        raise InvalidInputError(f"node {i_t} out of range")
    if i_t == 0:
        return float((series[1] - series[0]) / dt)
    if i_t == n - 1:
        return float((series[-1] - series[-2]) / dt)
    return float((series[i_t + 1] - series[i_t - 1]) / (2.0 * dt))


def _log_matrices(rhos: np.ndarray, rank_tol: float) -> tuple[np.ndarray, np.ndarray]:
    """Matrix logs of a stack of PSD matrices plus a defined-mask (full rank)."""
    vals, vecs = np.linalg.eigh(rhos)
    defined = vals[..., 0] > rank_tol
    safe = np.clip(vals, rank_tol * 1e-3, None)
    logs = np.einsum("...ij,...j,...kj->...ik", vecs, np.log(safe), vecs.conj(), optimize=True)
    return logs, defined


def relative_entropy_series(
    traj: MapTrajectory, rho1, rho2, rank_tol: float = DEFAULT.rank_tol
) -> np.ndarray:
    """S(M_t rho1 || M_t rho2) per node; NaN where the second argument is rank-deficient."""
    r1 = ops._as_complex_matrix(rho1)
    r2 = ops._as_complex_matrix(rho2)
    e1 = evolve_states(traj, r1[None, :, :])[:, 0]
    e2 = evolve_states(traj, r2[None, :, :])[:, 0]
    vals1 = np.linalg.eigvalsh(e1)
    vals1 = np.clip(vals1, 0.0, None)
    with np.errstate(divide="ignore", invalid="ignore"):
        t1 = np.where(vals1 > 0.0, vals1 * np.log(vals1), 0.0).sum(axis=-1)
    log2, defined = _log_matrices(e2, rank_tol)
    t2 = np.einsum("nij,nji->n", e1, log2, optimize=True).real
    out = t1 - t2
    out[~defined] = np.nan
    return out


def relative_entropy_flow(
    traj: MapTrajectory, rho1, rho2, i_t: int, rank_tol: float = DEFAULT.rank_tol
) -> float:
    """Derivative of the relative entropy between two evolved states.

    Returns NaN when any node entering the finite difference has a
    rank-deficient second argument (undefined-at-node flag). A positive value
    witnesses failure of 2-divisibility.
    """
    s = relative_entropy_series(traj, rho1, rho2, rank_tol=rank_tol)
    value = _node_derivative(s, traj.dt, i_t)
    return value


def search_entropy_decrease(
    traj: MapTrajectory, samples: int = 200, seed: int = 0, max_radius: float = 0.98
) -> StateSearchResult:
    """Random search for a state whose entropy decreases somewhere (unital qubits)."""
    rng = np.random.default_rng(seed)
    direction = rng.standard_normal((samples, 3))
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    radius = max_radius * rng.uniform(0.1, 1.0, samples) ** (1.0 / 3.0)
    xyz = direction * radius[:, None]
    rhos = np.zeros((samples, 2, 2), dtype=complex)
    rhos[:, 0, 0] = 0.5 * (1 + xyz[:, 2])
    rhos[:, 1, 1] = 0.5 * (1 - xyz[:, 2])
    rhos[:, 0, 1] = 0.5 * (xyz[:, 0] - 1j * xyz[:, 1])
    rhos[:, 1, 0] = 0.5 * (xyz[:, 0] + 1j * xyz[:, 1])
    flows = entropy_flow_series(traj, rhos)[1:-1]  # interior nodes
    flat = int(np.argmin(flows))
    node, col = np.unravel_index(flat, flows.shape)
    return StateSearchResult(
        value=float(flows[node, col]),
        node=int(node) + 1,
        t=float(traj.times[int(node) + 1]),
        state=rhos[col],
    )


def search_relative_entropy_increase(
    traj: MapTrajectory, pairs: int = 100, seed: int = 0, rank_tol: float = 1e-10
) -> StateSearchResult:
    """Random pair search for increasing relative entropy (2-divisibility witness)."""
    rng = np.random.default_rng(seed)
    d = traj.dim
    best = StateSearchResult(value=-np.inf, node=0, t=0.0, state=np.eye(d) / d)
    for _ in range(pairs):
        r1 = _random_mixed(rng, d)
        r2 = _random_mixed(rng, d, floor=0.05)
        series = relative_entropy_series(traj, r1, r2, rank_tol=rank_tol)
        lam, _ = flows_from_norms(series, traj.dt)
        interior = lam[1:-1]
        finite = np.isfinite(interior)
        if not finite.any():
            continue
        vals = np.where(finite, interior, -np.inf)
        node = int(np.argmax(vals))
        if vals[node] > best.value:
            best = StateSearchResult(
                value=float(vals[node]),
                node=node + 1,
                t=float(traj.times[node + 1]),
                state=r1,
                second_state=r2,
            )
    return best


def _random_mixed(rng: np.random.Generator, d: int, floor: float = 0.0) -> np.ndarray:
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    rho = g @ g.conj().T
    rho /= np.trace(rho).real
    if floor > 0.0:
        rho = (1 - floor * d) * rho + floor * np.eye(d)
    return rho
