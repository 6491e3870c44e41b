"""Qubit Bloch-vector view: conversions, local relaxation times, volume decay.

Convention: sigma_z = diag(1, -1); the excited level sits at index 0 (Bloch
z = +1) and the ground level at index 1 (Bloch z = -1). One documented test
pins this orientation so the gain/loss model's longitudinal drift has the
right sign.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidStateError, NotApplicableError
from . import operators as ops
from .evolution import MapTrajectory
from .generators import RateFunction, cumulative_gamma_integral, gamma_integral
from .witnesses import evolve_states


@dataclass(frozen=True)
class BlochVector:
    x1: float
    x2: float
    x3: float

    def asarray(self) -> np.ndarray:
        return np.array([self.x1, self.x2, self.x3])

    @property
    def radius(self) -> float:
        return float(np.linalg.norm(self.asarray()))


def to_bloch(rho) -> BlochVector:
    m = ops._as_complex_matrix(rho)
    if m.shape != (2, 2):
        raise NotApplicableError("Bloch view is defined for qubits")
    return BlochVector(
        float(np.trace(ops.SIGMA_X @ m).real),
        float(np.trace(ops.SIGMA_Y @ m).real),
        float(np.trace(ops.SIGMA_Z @ m).real),
    )


def from_bloch(x) -> ops.DensityMatrix:
    v = x.asarray() if isinstance(x, BlochVector) else np.asarray(x, dtype=float)
    if v.shape != (3,):
        raise InvalidStateError("expected three Bloch components")
    if np.linalg.norm(v) > 1.0 + 1e-12:
        raise InvalidStateError(f"Bloch vector norm {np.linalg.norm(v)} exceeds 1")
    m = 0.5 * (ops.SIGMA_0 + v[0] * ops.SIGMA_X + v[1] * ops.SIGMA_Y + v[2] * ops.SIGMA_Z)
    return ops.DensityMatrix(m)


def pauli_relaxation_times(
    gamma1: RateFunction, gamma2: RateFunction, gamma3: RateFunction, t: float
) -> tuple[float, float, float]:
    """Signed inverse pairwise rate sums; +/-inf flags a vanishing sum.

    All three nonnegative iff the map is stepwise positive at t.
    """
    g = np.array([float(gamma1(t)), float(gamma2(t)), float(gamma3(t))])
    sums = np.array([g[1] + g[2], g[0] + g[2], g[0] + g[1]])
    with np.errstate(divide="ignore"):
        times = np.where(sums != 0.0, 1.0 / np.where(sums != 0.0, sums, 1.0), np.inf)
    return float(times[0]), float(times[1]), float(times[2])


def cp_triangle(t1: float, t2: float, t3: float) -> bool:
    """Triangle inequalities on inverse relaxation times.

    Together with nonnegative times this is equivalent to all three local
    rates being nonnegative (stepwise complete positivity).
    """
    r = np.array([_inv(t1), _inv(t2), _inv(t3)])
    return bool(
        r[0] + r[1] >= r[2] and r[0] + r[2] >= r[1] and r[1] + r[2] >= r[0]
    )


def _inv(t: float) -> float:
    return 0.0 if np.isinf(t) else 1.0 / t


def volume_ratio(
    gamma1: RateFunction, gamma2: RateFunction, gamma3: RateFunction, t: float
) -> float:
    """Accessible-volume decay index exp(-(Gamma1 + Gamma2 + Gamma3)).

    Its log-derivative is minus the total rate sum, so it decreases exactly
    while the volume condition holds.
    """
    total = sum(gamma_integral(g, t) for g in (gamma1, gamma2, gamma3))
    return float(np.exp(-total))


def volume_ratio_series(
    gamma1: RateFunction, gamma2: RateFunction, gamma3: RateFunction, times: np.ndarray
) -> np.ndarray:
    total = sum(cumulative_gamma_integral(g, times) for g in (gamma1, gamma2, gamma3))
    return np.exp(-total)


@dataclass(frozen=True)
class PumpDecayBloch:
    """Transverse/longitudinal relaxation data of the gain/loss model."""

    t_perp: float
    t_par: float
    delta: float
    p_divisible: bool


def pump_decay_bloch(gamma_plus: RateFunction, gamma_minus: RateFunction, t: float) -> PumpDecayBloch:
    gp = float(gamma_plus(t))
    gm = float(gamma_minus(t))
    total = gm + gp
    t_perp = 2.0 / total if total != 0.0 else float("inf")
    t_par = t_perp / 2.0
    return PumpDecayBloch(
        t_perp=t_perp, t_par=t_par, delta=gp - gm, p_divisible=bool(total >= 0.0)
    )


def bloch_series(traj: MapTrajectory, rho0) -> np.ndarray:
    """Bloch coordinates of an evolved state at every node, shape (n_nodes, 3)."""
    if traj.dim != 2:
        raise NotApplicableError("Bloch view is defined for qubits")
    r0 = ops._as_complex_matrix(rho0)
    states = evolve_states(traj, r0[None, :, :])[:, 0]
    out = np.empty((traj.n_nodes, 3))
    out[:, 0] = np.einsum("nij,ji->n", states, ops.SIGMA_X).real
    out[:, 1] = np.einsum("nij,ji->n", states, ops.SIGMA_Y).real
    out[:, 2] = np.einsum("nij,ji->n", states, ops.SIGMA_Z).real
    return out
