"""Integration of the superoperator equation of motion and propagator extraction.

``integrate`` runs classical fixed-step 4th-order Runge-Kutta on
``dM/dt = L(t) M`` over a uniform grid; fixed step because every downstream
finite difference (trace-norm flows, divisibility scans) shares the same
grid. After each step the map is projected back to exact trace preservation
(affine correction on the trace row) so roundoff drift cannot contaminate
trace-norm derivatives.

Propagators ``V(t, s) = M_t M_s^{-1}`` are obtained by linear solve; nodes
whose map is worse conditioned than ``cond_max`` raise ``SingularMapError``
instead of returning garbage.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import DEFAULT, Tolerances
from .errors import InvalidInputError, NumericalFailureError, SingularMapError
from . import operators as ops
from .generators import GeneratorSpec, RateFunction, gamma_integral, liouvillian_parts


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid on [0, t_max] with ``steps`` intervals (steps + 1 nodes)."""

    t_max: float
    steps: int

    def __post_init__(self):
        if not (self.t_max > 0 and np.isfinite(self.t_max)):
            raise InvalidInputError(f"t_max must be positive and finite, got {self.t_max}")
        if self.steps < 2:
            raise InvalidInputError(f"steps must be >= 2, got {self.steps}")

    @property
    def dt(self) -> float:
        return self.t_max / self.steps

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.t_max, self.steps + 1)

    @property
    def n_nodes(self) -> int:
        return self.steps + 1


@dataclass(frozen=True)
class MapTrajectory:
    """Time-indexed dynamical map on a uniform grid.

    ``maps`` stacks the superoperator matrices, shape (n_nodes, d^2, d^2);
    ``maps[0]`` is the identity and every node is trace-preserving exactly
    (post projection). ``condition_numbers[i]`` is the 2-norm condition
    number of ``maps[i]``.
    """

    grid: TimeGrid
    dim: int
    maps: np.ndarray
    condition_numbers: np.ndarray = field(repr=False)

    @property
    def n_nodes(self) -> int:
        return self.maps.shape[0]

    @property
    def times(self) -> np.ndarray:
        return self.grid.times

    @property
    def dt(self) -> float:
        return self.grid.dt

    def superoperator(self, i: int) -> ops.Superoperator:
        return ops.Superoperator(self.maps[i], trace_preserving=True)


def integrate(g: GeneratorSpec, grid: TimeGrid) -> MapTrajectory:
    """Integrate ``dM/dt = L(t) M`` from the identity over ``grid`` (RK4)."""
    d = g.dim
    q = d * d
    ts = grid.times
    dt = grid.dt
    mids = ts[:-1] + 0.5 * dt

    h_part, diss = liouvillian_parts(g)
    l_nodes = np.broadcast_to(h_part, (ts.size, q, q)).copy()
    l_mids = np.broadcast_to(h_part, (mids.size, q, q)).copy()
    for (_, rate), dmat in zip(g.channels, diss):
        rn = np.asarray(rate(ts), dtype=float)
        rm = np.asarray(rate(mids), dtype=float)
        if not (np.all(np.isfinite(rn)) and np.all(np.isfinite(rm))):
            raise InvalidInputError("rate evaluation failure: non-finite rate on the grid")
        l_nodes += rn[:, None, None] * dmat
        l_mids += rm[:, None, None] * dmat

    maps = np.empty((ts.size, q, q), dtype=complex)
    m = np.eye(q, dtype=complex)
    maps[0] = m
    for i in range(grid.steps):
        k1 = l_nodes[i] @ m
        k2 = l_mids[i] @ (m + 0.5 * dt * k1)
        k3 = l_mids[i] @ (m + 0.5 * dt * k2)
        k4 = l_nodes[i + 1] @ (m + dt * k3)
        m = m + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        m = ops.project_trace_preserving(m, d)
        maps[i + 1] = m
    if not np.all(np.isfinite(maps)):
        raise NumericalFailureError("integration produced non-finite map entries")

    sv = np.linalg.svd(maps, compute_uv=False)
    with np.errstate(divide="ignore"):
        cond = np.where(sv[:, -1] > 0, sv[:, 0] / sv[:, -1], np.inf)
    maps.setflags(write=False)
    cond.setflags(write=False)
    return MapTrajectory(grid=grid, dim=d, maps=maps, condition_numbers=cond)


def propagator(
    traj: MapTrajectory,
    i_s: int,
    i_t: int,
    cond_max: float = DEFAULT.cond_max,
) -> ops.Superoperator:
    """Intermediate map V with ``M_{i_t} = V M_{i_s}``, via linear solve."""
    n = traj.n_nodes
    if not (0 <= i_s < n and 0 <= i_t < n):
        raise InvalidInputError(f"grid indices ({i_s}, {i_t}) out of range [0, {n})")
    if i_t < i_s:
        raise InvalidInputError("propagator requires i_t >= i_s")
    cond = float(traj.condition_numbers[i_s])
    if not np.isfinite(cond) or cond > cond_max:
        raise SingularMapError(
            f"map at node {i_s} has condition number {cond:.3e} > {cond_max:.1e}; "
            "propagator undefined there",
            condition_number=cond,
        )
    if i_s == i_t:
        return ops.Superoperator.identity(traj.dim)
    v = np.linalg.solve(traj.maps[i_s].T, traj.maps[i_t].T).T
    v = ops.project_trace_preserving(v, traj.dim)
    return ops.Superoperator(v, trace_preserving=True)


def adjacent_propagators(
    traj: MapTrajectory, cond_max: float = DEFAULT.cond_max
) -> tuple[np.ndarray, np.ndarray]:
    """All one-step propagators ``V(t_{i+1}, t_i)`` at once.

    Returns ``(stack, skipped)``: stack has shape (steps, d^2, d^2); skipped
    marks steps whose base node exceeds ``cond_max`` (their stack entry is the
    identity placeholder and must be ignored).
    """
    base = traj.maps[:-1]
    target = traj.maps[1:]
    skipped = ~np.isfinite(traj.condition_numbers[:-1]) | (
        traj.condition_numbers[:-1] > cond_max
    )
    q = base.shape[1]
    safe = np.where(skipped[:, None, None], np.broadcast_to(np.eye(q), base.shape), base)
    v = np.linalg.solve(np.transpose(safe, (0, 2, 1)), np.transpose(target, (0, 2, 1)))
    v = np.transpose(v, (0, 2, 1))
    v[skipped] = np.eye(q)
    w = ops.vec(np.eye(traj.dim)).real
    defect = w[None, :] - np.einsum("p,npq->nq", w, v).real
    v = v + np.einsum("p,nq->npq", w / traj.dim, defect)
    return v, skipped


def analytic_dephasing_map(gamma: RateFunction, t: float) -> ops.Superoperator:
    """Closed-form pure-decoherence map: off-diagonals damped by exp(-Gamma(t))."""
    e = np.exp(-gamma_integral(gamma, t))
    if not np.isfinite(e):
        raise InvalidInputError("rate integral diverges; map undefined")
    return ops.Superoperator(np.diag([1.0, e, e, 1.0]).astype(complex), trace_preserving=True)


def pauli_coordinate_eigenvalues(
    gamma1: RateFunction, gamma2: RateFunction, gamma3: RateFunction, t: float
) -> np.ndarray:
    """Damping factors of the three Pauli coordinates for the three-channel model."""
    g = [gamma_integral(x, t) for x in (gamma1, gamma2, gamma3)]
    return np.exp(np.array([-(g[1] + g[2]), -(g[0] + g[2]), -(g[0] + g[1])]))


def pauli_mixing_probabilities(lams: np.ndarray) -> np.ndarray:
    """Mixing weights p_alpha of the random-unitary form from the coordinate factors."""
    l1, l2, l3 = lams
    return 0.25 * np.array(
        [
            1.0 + l1 + l2 + l3,
            1.0 + l1 - l2 - l3,
            1.0 - l1 + l2 - l3,
            1.0 - l1 - l2 + l3,
        ]
    )


def analytic_pauli_map(
    gamma1: RateFunction, gamma2: RateFunction, gamma3: RateFunction, t: float
) -> ops.Superoperator:
    """Closed-form three-channel qubit map ``rho -> sum_a p_a sigma_a rho sigma_a``."""
    p = pauli_mixing_probabilities(pauli_coordinate_eigenvalues(gamma1, gamma2, gamma3, t))
    m = sum(pa * np.kron(s.T, s) for pa, s in zip(p, ops.PAULI))
    return ops.Superoperator(m, trace_preserving=True)
