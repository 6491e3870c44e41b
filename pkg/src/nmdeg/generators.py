"""Time-local generators in GKSL form with time-dependent rates.

The dissipator convention is ``gamma(t) * (V rho V^dag - {V^dag V, rho}/2)``
per channel. The named qubit models fold their global 1/2 prefactor into the
noise operator, ``V = sigma_k / sqrt(2)``, so that the integrated dephasing
and three-channel maps have Pauli-coordinate eigenvalues
``exp(-(Gamma_j + Gamma_l))`` with ``Gamma_k(t) = int_0^t gamma_k``.

Basis labeling for the gain/loss model: index 0 is the excited level, index 1
the ground level; ``sigma_plus = |excited><ground|`` pumps upward. A
dedicated test pins this orientation against the Bloch picture
(ground state at Bloch z = -1).
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_simpson, quad

from .config import DEFAULT
from .errors import DimensionMismatchError, InvalidInputError, ScenarioError
from . import operators as ops


class RateFunction(ABC):
    """Real-valued rate gamma(t), evaluable on scalars and arrays."""

    @abstractmethod
    def __call__(self, t):
        ...

    def breakpoints(self) -> tuple[float, ...]:
        """Interior non-smooth points, used to split quadrature intervals."""
        return ()


@dataclass(frozen=True)
class ConstantRate(RateFunction):
    value: float

    def __call__(self, t):
        return np.full_like(np.asarray(t, dtype=float), self.value) if np.ndim(t) else float(self.value)


@dataclass(frozen=True)
class SinusoidRate(RateFunction):
    """``a * sin(w t + phase)``."""

    amplitude: float
    angular_frequency: float
    phase: float = 0.0

    def __call__(self, t):
        return self.amplitude * np.sin(self.angular_frequency * np.asarray(t, dtype=float) + self.phase)


@dataclass(frozen=True)
class ExpPolyRate(RateFunction):
    """``(sum_i coeffs[i] t^i) * exp(-decay * t)``."""

    coeffs: tuple[float, ...]
    decay: float = 0.0

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        poly = np.polynomial.polynomial.polyval(t, np.asarray(self.coeffs, dtype=float))
        return poly * np.exp(-self.decay * t)


@dataclass(frozen=True)
class TanhRate(RateFunction):
    """``amplitude * tanh(frequency * t)``."""

    amplitude: float
    frequency: float = 1.0

    def __call__(self, t):
        return self.amplitude * np.tanh(self.frequency * np.asarray(t, dtype=float))


@dataclass(frozen=True)
class TabulatedRate(RateFunction):
    """Linear interpolation of samples; constant extrapolation at the edges."""

    times: tuple[float, ...]
    values: tuple[float, ...]

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if t.ndim != 1 or t.shape != v.shape or t.size < 2:
            raise InvalidInputError("tabulated rate needs matching 1-D times/values with >= 2 samples")
        if not np.all(np.diff(t) > 0):
            raise InvalidInputError("tabulated rate times must be strictly increasing")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(v))):
            raise InvalidInputError("tabulated rate has non-finite samples")
        object.__setattr__(self, "times", tuple(float(x) for x in t))
        object.__setattr__(self, "values", tuple(float(x) for x in v))

    def __call__(self, t):
        out = np.interp(np.asarray(t, dtype=float), self.times, self.values)
        return out if np.ndim(t) else float(out)

    def breakpoints(self) -> tuple[float, ...]:
        return self.times

    def extrapolates_beyond(self, t_max: float) -> bool:
        return t_max > self.times[-1]


@dataclass(frozen=True)
class SumRate(RateFunction):
    terms: tuple[RateFunction, ...]

    def __call__(self, t):
        return sum(term(t) for term in self.terms)

    def breakpoints(self) -> tuple[float, ...]:
        pts: list[float] = []
        for term in self.terms:
            pts.extend(term.breakpoints())
        return tuple(sorted(set(pts)))


@dataclass(frozen=True)
class ScaledRate(RateFunction):
    factor: float
    term: RateFunction

    def __call__(self, t):
        return self.factor * self.term(t)

    def breakpoints(self) -> tuple[float, ...]:
        return self.term.breakpoints()


def rate_from_dict(spec: dict, where: str = "rate") -> RateFunction:
    """Build a rate from its JSON scenario form; raises ScenarioError on bad input."""
    if not isinstance(spec, dict):
        raise ScenarioError(f"{where}: expected an object, got {type(spec).__name__}")
    kind = spec.get("kind")
    if kind is None:
        raise ScenarioError(f"missing field: {where}.kind")
    try:
        if kind == "constant":
            return ConstantRate(float(spec["value"]))
        if kind == "sinusoid":
            return SinusoidRate(float(spec["a"]), float(spec["w"]), float(spec.get("phase", 0.0)))
        if kind == "exp_poly":
            return ExpPolyRate(tuple(float(c) for c in spec["coeffs"]), float(spec.get("decay", 0.0)))
        if kind == "tanh":
            return TanhRate(float(spec["amplitude"]), float(spec.get("frequency", 1.0)))
        if kind == "tabulated":
            return TabulatedRate(tuple(spec["t"]), tuple(spec["v"]))
        if kind == "sum":
            terms = spec["terms"]
            if not isinstance(terms, list) or not terms:
                raise ScenarioError(f"{where}.terms: expected a non-empty list")
            return SumRate(tuple(rate_from_dict(t, f"{where}.terms[{i}]") for i, t in enumerate(terms)))
        if kind == "scale":
            return ScaledRate(float(spec["factor"]), rate_from_dict(spec["term"], f"{where}.term"))
    except KeyError as exc:
        raise ScenarioError(f"missing field: {where}.{exc.args[0]}") from None
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"{where}: {exc}") from None
    raise ScenarioError(f"{where}: unknown rate kind '{kind}'")


def rate_to_dict(rate: RateFunction) -> dict:
    if isinstance(rate, ConstantRate):
        return {"kind": "constant", "value": rate.value}
    if isinstance(rate, SinusoidRate):
        return {"kind": "sinusoid", "a": rate.amplitude, "w": rate.angular_frequency, "phase": rate.phase}
    if isinstance(rate, ExpPolyRate):
        return {"kind": "exp_poly", "coeffs": list(rate.coeffs), "decay": rate.decay}
    if isinstance(rate, TanhRate):
        return {"kind": "tanh", "amplitude": rate.amplitude, "frequency": rate.frequency}
    if isinstance(rate, TabulatedRate):
        return {"kind": "tabulated", "t": list(rate.times), "v": list(rate.values)}
    if isinstance(rate, SumRate):
        return {"kind": "sum", "terms": [rate_to_dict(t) for t in rate.terms]}
    if isinstance(rate, ScaledRate):
        return {"kind": "scale", "factor": rate.factor, "term": rate_to_dict(rate.term)}
    raise InvalidInputError(f"cannot serialize rate of type {type(rate).__name__}")


@dataclass(frozen=True)
class GeneratorSpec:
    """GKSL generator data: Hamiltonian plus (noise operator, rate) channels."""

    dim: int
    hamiltonian: np.ndarray
    channels: tuple[tuple[np.ndarray, RateFunction], ...]

    def __post_init__(self):
        h = np.array(self.hamiltonian, dtype=complex)
        if h.shape != (self.dim, self.dim):
            raise DimensionMismatchError(f"hamiltonian shape {h.shape} != ({self.dim}, {self.dim})")
        if not ops.is_hermitian(h):
            raise InvalidInputError("hamiltonian must be Hermitian")
        h.setflags(write=False)
        object.__setattr__(self, "hamiltonian", h)
        fixed = []
        for v, rate in self.channels:
            v = np.array(v, dtype=complex)
            if v.shape != (self.dim, self.dim):
                raise DimensionMismatchError(f"noise operator shape {v.shape} != ({self.dim}, {self.dim})")
            if not np.all(np.isfinite(v)):
                raise InvalidInputError("noise operator has non-finite entries")
            v.setflags(write=False)
            fixed.append((v, rate))
        object.__setattr__(self, "channels", tuple(fixed))


def dephasing_spec(gamma: RateFunction) -> GeneratorSpec:
    """Pure qubit decoherence: single sigma_z channel, zero Hamiltonian."""
    return GeneratorSpec(2, np.zeros((2, 2)), ((ops.SIGMA_Z / np.sqrt(2.0), gamma),))


def pauli_spec(gamma1: RateFunction, gamma2: RateFunction, gamma3: RateFunction) -> GeneratorSpec:
    """Random-unitary qubit model: one channel per Pauli axis."""
    return GeneratorSpec(
        2,
        np.zeros((2, 2)),
        (
            (ops.SIGMA_X / np.sqrt(2.0), gamma1),
            (ops.SIGMA_Y / np.sqrt(2.0), gamma2),
            (ops.SIGMA_Z / np.sqrt(2.0), gamma3),
        ),
    )


def pump_decay_spec(gamma_plus: RateFunction, gamma_minus: RateFunction) -> GeneratorSpec:
    """Two-level gain/loss model: sigma_plus pumping and sigma_minus decay channels."""
    return GeneratorSpec(
        2,
        np.zeros((2, 2)),
        ((ops.SIGMA_PLUS, gamma_plus), (ops.SIGMA_MINUS, gamma_minus)),
    )


def generator_action(g: GeneratorSpec, rho, t: float) -> np.ndarray:
    """Evaluate ``L_t(rho)``: commutator part plus weighted dissipators.

    The output is traceless (the flow preserves trace) and Hermitian for
    Hermitian input with real rates.
    """
    if t < 0:
        raise InvalidInputError("time must be nonnegative")
    m = ops._as_complex_matrix(rho)
    if m.shape != (g.dim, g.dim):
        raise DimensionMismatchError(f"state shape {m.shape} != ({g.dim}, {g.dim})")
    out = -1.0j * (g.hamiltonian @ m - m @ g.hamiltonian)
    for v, rate in g.channels:
        w = float(rate(t))
        if not np.isfinite(w):
            raise InvalidInputError(f"rate evaluated to non-finite value at t={t}")
        vdv = v.conj().T @ v
        out = out + w * (v @ m @ v.conj().T - 0.5 * (vdv @ m + m @ vdv))
    return out


def liouvillian_parts(g: GeneratorSpec) -> tuple[np.ndarray, np.ndarray]:
    """Rate-independent pieces of the generator superoperator.

    Returns ``(h_part, dissipators)`` with ``L(t) = h_part + sum_a gamma_a(t)
    dissipators[a]``; shapes (d^2, d^2) and (n_channels, d^2, d^2).
    """
    d = g.dim
    eye = np.eye(d, dtype=complex)
    h = g.hamiltonian
    h_part = -1.0j * (np.kron(eye, h) - np.kron(h.T, eye))
    diss = []
    for v, _ in g.channels:
        vdv = v.conj().T @ v
        diss.append(np.kron(v.conj(), v) - 0.5 * (np.kron(eye, vdv) + np.kron(vdv.T, eye)))
    if not diss:
        diss = [np.zeros((d * d, d * d), dtype=complex)]
        return h_part, np.stack(diss)[:0]
    return h_part, np.stack(diss)


def generator_superoperator(g: GeneratorSpec, t: float) -> ops.Superoperator:
    """Matrix of ``generator_action`` at fixed t (column-stacking convention)."""
    h_part, diss = liouvillian_parts(g)
    m = h_part.copy()
    for (_, rate), dmat in zip(g.channels, diss):
        m += float(rate(t)) * dmat
    return ops.Superoperator(m)


def gamma_integral(gamma: RateFunction, t: float, quad_tol: float = DEFAULT.quad_tol) -> float:
    """``Gamma(t) = int_0^t gamma`` by adaptive quadrature (exact for tabulated rates)."""
    if t < 0:
        raise InvalidInputError("time must be nonnegative")
    if t == 0:
        return 0.0
    if isinstance(gamma, TabulatedRate):
        return _tabulated_integral(gamma, t)
    pts = [p for p in gamma.breakpoints() if 0.0 < p < t]

    def integrand(s: float) -> float:
        v = float(gamma(s))
        if not np.isfinite(v):
            raise InvalidInputError(f"rate is non-finite at t={s}")
        return v

    value, _ = quad(
        integrand,
        0.0,
        t,
        epsabs=quad_tol,
        epsrel=1e-12,
        limit=max(200, 10 * len(pts) + 50),
        points=pts or None,
    )
    if not np.isfinite(value):
        raise InvalidInputError(f"rate integral is non-finite on [0, {t}]")
    return float(value)


def _tabulated_integral(gamma: TabulatedRate, t: float) -> float:
    # exact integral of the piecewise-linear interpolant with flat extrapolation
    knots = np.asarray(gamma.times)
    vals = np.asarray(gamma.values)
    grid = np.concatenate(([0.0], knots[(knots > 0.0) & (knots < t)], [t]))
    mid = gamma(grid)
    return float(np.trapezoid(np.asarray(mid), grid))


def cumulative_gamma_integral(gamma: RateFunction, times: np.ndarray) -> np.ndarray:
    """``Gamma`` sampled on a uniform grid via composite Simpson (O(dt^4))."""
    times = np.asarray(times, dtype=float)
    if isinstance(gamma, TabulatedRate):
        return np.array([_tabulated_integral(gamma, t) if t > 0 else 0.0 for t in times])
    refine = 8
    fine = np.linspace(times[0], times[-1], refine * (times.size - 1) + 1)
    vals = np.asarray(gamma(fine), dtype=float)
    if not np.all(np.isfinite(vals)):
        raise InvalidInputError("rate evaluated to non-finite values on the grid")
    cum = cumulative_simpson(vals, x=fine, initial=0.0)
    return cum[::refine]
