"""Numerical tolerances and resource limits, overridable per call or via the CLI."""

from __future__ import annotations

from dataclasses import dataclass, replace


@dataclass(frozen=True)
class Tolerances:
    """Default tolerance budget shared across the package.

    All eigenvalue-floor comparisons are relative to the matrix 2-norm
    (scaled by ``max(1, norm)``); trace and Hermiticity checks likewise.
    """

    tol_herm: float = 1e-10      # Hermiticity defect
    tol_trace: float = 1e-9      # trace preservation / unit trace
    tol_psd: float = 1e-9        # eigenvalue floor for positivity checks
    tol_admission: float = 1e-8  # Choi floor for admitting a trajectory as a legitimate map
    quad_tol: float = 1e-10      # absolute quadrature tolerance for rate integrals
    cond_max: float = 1e8        # propagator extraction refuses worse-conditioned nodes
    max_extended_dim: int = 64   # ancilla extension bound: k * dim <= max_extended_dim
    kink_factor: float = 10.0    # kink threshold = kink_factor * dt on one-sided derivative gap
    tol_ratio: float = 1e-6      # allowed numerical overshoot of measure ratios above 1
    ratio_floor: float = 1e-9    # below this total norm decrease the measure ratio is 0
    rank_tol: float = 1e-12      # full-rank threshold for entropy arguments


DEFAULT = Tolerances()


def override(base: Tolerances = DEFAULT, **changes) -> Tolerances:
    """Return a copy of ``base`` with the given fields replaced."""
    return replace(base, **changes)
