"""Finite-dimensional operator algebra.

Conventions (fixed once, relied on everywhere):

* Vectorization is column-stacking: ``vec(X)[r + c*d] = X[r, c]``, so the
  matrix of ``X -> A X B`` is ``B.T (kron) A``.
* Ancilla extensions put the ancilla first: ``extend(k, phi)`` is the matrix
  of ``id_k (tensor) phi`` acting on operators over C^k (tensor) C^d with basis
  ``|a> (tensor) |r>`` indexed ``a*d + r``.
* The Choi matrix is ``(id (tensor) phi)`` applied to the unnormalized
  maximally entangled projector ``sum_ij |ii><jj|``; it is positive
  semidefinite iff the map is completely positive.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import DEFAULT, Tolerances
from .errors import DimensionMismatchError, InvalidInputError, InvalidStateError

SIGMA_0 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
SIGMA_PLUS = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)   # |excited><ground|
SIGMA_MINUS = np.array([[0.0, 0.0], [1.0, 0.0]], dtype=complex)  # |ground><excited|
PAULI = (SIGMA_0, SIGMA_X, SIGMA_Y, SIGMA_Z)


def _as_complex_matrix(x) -> np.ndarray:
    """Coerce wrapper types or array-likes to a complex ndarray."""
    if isinstance(x, (HermitianOperator, DensityMatrix, ChoiMatrix)):
        return x.entries
    if isinstance(x, Superoperator):
        return x.matrix
    return np.asarray(x, dtype=complex)


def _spectral_scale(m: np.ndarray) -> float:
    return max(1.0, float(np.linalg.norm(m, 2)))


def is_hermitian(m, tol: float = DEFAULT.tol_herm) -> bool:
    m = _as_complex_matrix(m)
    return bool(np.linalg.norm(m - m.conj().T, 2) <= tol * _spectral_scale(m))


def vec(x: np.ndarray) -> np.ndarray:
    """Column-stacking vectorization."""
    return np.asarray(x, dtype=complex).flatten(order="F")


def unvec(v: np.ndarray, dim: int) -> np.ndarray:
    return np.asarray(v, dtype=complex).reshape((dim, dim), order="F")


@dataclass(frozen=True)
class HermitianOperator:
    """A Hermitian matrix; the carrier for observables and witnesses."""

    entries: np.ndarray
    tol: Tolerances = field(default=DEFAULT, repr=False, compare=False)

    def __post_init__(self):
        m = np.array(self.entries, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionMismatchError(f"expected a square matrix, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise InvalidInputError("matrix has non-finite entries")
        if not is_hermitian(m, self.tol.tol_herm):
            raise InvalidInputError("matrix is not Hermitian within tolerance")
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class DensityMatrix:
    """A quantum state: Hermitian, unit trace, positive semidefinite."""

    entries: np.ndarray
    tol: Tolerances = field(default=DEFAULT, repr=False, compare=False)

    def __post_init__(self):
        m = np.array(self.entries, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionMismatchError(f"expected a square matrix, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise InvalidInputError("matrix has non-finite entries")
        if not is_hermitian(m, self.tol.tol_herm):
            raise InvalidStateError("state is not Hermitian within tolerance")
        if abs(np.trace(m) - 1.0) > self.tol.tol_trace:
            raise InvalidStateError(f"state trace {np.trace(m)} is not 1 within tolerance")
        floor = float(np.linalg.eigvalsh(m).min())
        if floor < -self.tol.tol_psd * _spectral_scale(m):
            raise InvalidStateError(f"state has eigenvalue {floor} below the PSD floor")
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class Superoperator:
    """Matrix of a linear map on operators, acting on column-vectorized input.

    ``matrix`` has shape ``(dim_out**2, dim_in**2)``. When ``trace_preserving``
    is set the trace row identity ``vec(I)^dag M = vec(I)^dag`` is verified.
    """

    matrix: np.ndarray
    trace_preserving: bool = False
    tol: Tolerances = field(default=DEFAULT, repr=False, compare=False)

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.ndim != 2:
            raise DimensionMismatchError("superoperator matrix must be 2-D")
        if not np.all(np.isfinite(m)):
            raise InvalidInputError("superoperator has non-finite entries")
        d_out = round(m.shape[0] ** 0.5)
        d_in = round(m.shape[1] ** 0.5)
        if d_out * d_out != m.shape[0] or d_in * d_in != m.shape[1]:
            raise DimensionMismatchError(f"shape {m.shape} is not (d_out^2, d_in^2)")
        if self.trace_preserving:
            w_out = vec(np.eye(d_out))
            w_in = vec(np.eye(d_in))
            defect = np.linalg.norm(w_out.conj() @ m - w_in.conj())
            if defect > self.tol.tol_trace * _spectral_scale(m):
                raise InvalidInputError(
                    f"trace-preservation defect {defect} exceeds tolerance"
                )
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim_in(self) -> int:
        return round(self.matrix.shape[1] ** 0.5)

    @property
    def dim_out(self) -> int:
        return round(self.matrix.shape[0] ** 0.5)

    @classmethod
    def identity(cls, dim: int) -> "Superoperator":
        return cls(np.eye(dim * dim, dtype=complex), trace_preserving=True)


@dataclass(frozen=True)
class ChoiMatrix:
    """Choi matrix of a map on a d-dimensional system (ancilla-first convention)."""

    entries: np.ndarray
    tol: Tolerances = field(default=DEFAULT, repr=False, compare=False)

    def __post_init__(self):
        m = np.array(self.entries, dtype=complex)
        d = round(m.shape[0] ** 0.5) if m.ndim == 2 else 0
        if m.ndim != 2 or m.shape[0] != m.shape[1] or d * d != m.shape[0]:
            raise DimensionMismatchError(f"Choi matrix shape {m.shape} is not (d^2, d^2)")
        if not is_hermitian(m, self.tol.tol_herm):
            raise InvalidInputError("Choi matrix is not Hermitian within tolerance")
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)

    @property
    def dim(self) -> int:
        return round(self.entries.shape[0] ** 0.5)

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.entries)

    def is_completely_positive(self, tol: float | None = None) -> bool:
        tol = self.tol.tol_psd if tol is None else tol
        return bool(self.eigenvalues().min() >= -tol * _spectral_scale(self.entries))


def trace_norm(x) -> float:
    """Sum of singular values of ``x`` (for Hermitian input: sum of |eigenvalues|).

    Computed by SVD rather than a matrix square root for robustness near rank
    deficiency.
    """
    m = _as_complex_matrix(x)
    if m.ndim != 2:
        raise DimensionMismatchError("trace_norm expects a matrix")
    if not np.all(np.isfinite(m)):
        raise InvalidInputError("trace_norm input has non-finite entries")
    return float(np.linalg.svd(m, compute_uv=False).sum())


def hermitian_trace_norms(batch: np.ndarray) -> np.ndarray:
    """Trace norms of a stack of Hermitian matrices, shape ``(..., d, d)``.

    Uses closed-form eigenvalues for qubits and batched ``eigvalsh`` otherwise;
    agrees with :func:`trace_norm` on Hermitian input.
    """
    batch = np.asarray(batch)
    d = batch.shape[-1]
    if d == 2:
        a = batch[..., 0, 0].real
        dd = batch[..., 1, 1].real
        b = batch[..., 0, 1]
        half_tr = 0.5 * (a + dd)
        disc = np.sqrt(0.25 * (a - dd) ** 2 + np.abs(b) ** 2)
        return np.abs(half_tr + disc) + np.abs(half_tr - disc)
    return np.abs(np.linalg.eigvalsh(batch)).sum(axis=-1)


def apply(phi: Superoperator, x) -> np.ndarray:
    """Apply a superoperator to an operator; returns the output matrix."""
    m = _as_complex_matrix(x)
    if m.shape != (phi.dim_in, phi.dim_in):
        raise DimensionMismatchError(
            f"operator shape {m.shape} does not match superoperator input dim {phi.dim_in}"
        )
    return unvec(phi.matrix @ vec(m), phi.dim_out)


def extend(k: int, phi: Superoperator, max_extended_dim: int = DEFAULT.max_extended_dim) -> Superoperator:
    """Superoperator of ``id_k (tensor) phi`` on (k*dim)-dimensional operators."""
    if k < 1:
        raise InvalidInputError(f"extension factor must be >= 1, got {k}")
    if phi.dim_in != phi.dim_out:
        raise DimensionMismatchError("extension requires a square map")
    d = phi.dim_in
    if k == 1:
        return phi
    if k * d > max_extended_dim:
        raise InvalidInputError(
            f"extended dimension {k * d} exceeds max_extended_dim={max_extended_dim}"
        )
    n = extend_matrix(k, phi.matrix, d)
    return Superoperator(n, trace_preserving=phi.trace_preserving)


def extend_matrix(k: int, m: np.ndarray, d: int) -> np.ndarray:
    """Matrix of ``id_k (tensor) phi`` given the (d^2, d^2) matrix of phi.

    Composite vec index order, slowest to fastest, is (col-ancilla,
    col-system, row-ancilla, row-system).
    """
    m4 = m.reshape(d, d, d, d)  # [c_out, r_out, c_in, r_in]
    eye = np.eye(k)
    n = np.einsum("bB,crCR,aA->bcarBCAR", eye, m4, eye, optimize=True)
    q = k * d
    return np.ascontiguousarray(n.reshape(q * q, q * q))


def choi(phi: Superoperator) -> ChoiMatrix:
    """Choi matrix of a square map; PSD iff the map is completely positive."""
    if phi.dim_in != phi.dim_out:
        raise DimensionMismatchError("Choi matrix requires dim_in == dim_out")
    return ChoiMatrix(choi_matrix_of(phi.matrix, phi.dim_in))


def choi_matrix_of(m: np.ndarray, d: int) -> np.ndarray:
    """Choi matrix entries from a (d^2, d^2) superoperator matrix.

    ``C[(i,m),(j,n)] = phi(|i><j|)[m,n]``, a pure index reshuffle under the
    column-stacking convention.
    """
    return np.ascontiguousarray(m.reshape(d, d, d, d).transpose(3, 1, 2, 0).reshape(d * d, d * d))


def choi_batch(mats: np.ndarray, d: int) -> np.ndarray:
    """Vectorized :func:`choi_matrix_of` over a stack of shape (n, d^2, d^2)."""
    n = mats.shape[0]
    return np.ascontiguousarray(
        mats.reshape(n, d, d, d, d).transpose(0, 4, 2, 3, 1).reshape(n, d * d, d * d)
    )


def hermitian_basis(d: int) -> list[HermitianOperator]:
    """Hilbert-Schmidt-orthonormal Hermitian basis of the d x d matrices.

    The first element is proportional to the identity; the remaining d^2 - 1
    are traceless. For d = 2 this is the Pauli basis over sqrt(2).
    """
    if d < 1:
        raise InvalidInputError("dimension must be >= 1")
    return [HermitianOperator(m) for m in hermitian_basis_matrices(d)]


def hermitian_basis_matrices(d: int) -> np.ndarray:
    """Stacked basis matrices, shape (d^2, d, d); see :func:`hermitian_basis`."""
    mats = [np.eye(d, dtype=complex) / np.sqrt(d)]
    for i in range(d):
        for j in range(i + 1, d):
            sym = np.zeros((d, d), dtype=complex)
            sym[i, j] = sym[j, i] = 1.0 / np.sqrt(2.0)
            mats.append(sym)
            anti = np.zeros((d, d), dtype=complex)
            anti[i, j] = -1.0j / np.sqrt(2.0)
            anti[j, i] = 1.0j / np.sqrt(2.0)
            mats.append(anti)
    for l in range(1, d):
        diag = np.zeros((d, d), dtype=complex)
        norm = 1.0 / np.sqrt(l * (l + 1))
        for j in range(l):
            diag[j, j] = norm
        diag[l, l] = -l * norm
        mats.append(diag)
    return np.stack(mats)


def conjugation_superoperator(a: np.ndarray) -> Superoperator:
    """Superoperator of ``X -> A X A^dag``."""
    a = np.asarray(a, dtype=complex)
    return Superoperator(np.kron(a.conj(), a))


def project_trace_preserving(m: np.ndarray, d: int) -> np.ndarray:
    """Affine correction on the trace row so that ``vec(I)^dag M = vec(I)^dag`` exactly."""
    w = vec(np.eye(d)).real
    defect = w - w @ m
    return m + np.outer(w, defect) / d
