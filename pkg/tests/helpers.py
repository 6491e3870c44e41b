"""Shared random-object generators and small oracles for the test suite."""

from __future__ import annotations

import numpy as np

from nmdeg import operators as ops


def random_hermitian(rng: np.random.Generator, d: int) -> np.ndarray:
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return 0.5 * (g + g.conj().T)


def random_traceless_hermitian(rng: np.random.Generator, d: int) -> np.ndarray:
    h = random_hermitian(rng, d)
    return h - np.trace(h) * np.eye(d) / d


def random_density(rng: np.random.Generator, d: int, floor: float = 0.0) -> np.ndarray:
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    rho = g @ g.conj().T
    rho /= np.trace(rho).real
    if floor > 0.0:
        rho = (1.0 - floor * d) * rho + floor * np.eye(d)
    return rho


def random_pure(rng: np.random.Generator, d: int) -> np.ndarray:
    v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    v /= np.linalg.norm(v)
    return np.outer(v, v.conj())


def random_kraus_channel(rng: np.random.Generator, d: int, n_kraus: int = 3) -> np.ndarray:
    """Superoperator matrix of a random CPTP map (normalized Kraus family)."""
    a = rng.standard_normal((n_kraus, d, d)) + 1j * rng.standard_normal((n_kraus, d, d))
    s = np.einsum("kij,kil->jl", a.conj(), a)
    vals, vecs = np.linalg.eigh(s)
    inv_sqrt = vecs @ np.diag(1.0 / np.sqrt(vals)) @ vecs.conj().T
    kraus = a @ inv_sqrt
    m = sum(np.kron(k.conj(), k) for k in kraus)
    return m


def transpose_superoperator(d: int) -> np.ndarray:
    """Matrix of the transposition map (positive but not completely positive)."""
    m = np.zeros((d * d, d * d))
    for r in range(d):
        for c in range(d):
            m[r + c * d, c + r * d] = 1.0
    return m


def random_tp_hermiticity_preserving(rng: np.random.Generator, d: int) -> np.ndarray:
    """Trace-preserving Hermiticity-preserving map, frequently not CP."""
    base = random_kraus_channel(rng, d)
    other = random_kraus_channel(rng, d)
    x = rng.uniform(0.0, 1.5)
    return (1.0 - x) * base + x * transpose_superoperator(d) @ other


def pauli_coords(m) -> np.ndarray:
    """Superoperator in the normalized Pauli coordinate basis (qubits)."""
    mat = m.matrix if isinstance(m, ops.Superoperator) else m
    basis = ops.hermitian_basis_matrices(2)
    out = np.empty((4, 4), dtype=complex)
    for i, bi in enumerate(basis):
        for j, bj in enumerate(basis):
            out[i, j] = np.trace(bi.conj().T @ ops.unvec(mat @ ops.vec(bj), 2))
    return out
