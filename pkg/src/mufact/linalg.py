"""Dense linear-algebra kernels shared by the rest of the package.

Everything here is a thin, convention-pinning layer over numpy's LAPACK
bindings: Hermitian eigendecompositions are returned in descending order,
polar decompositions produce a unitary factor even for singular input, and
all randomness flows through explicitly seeded generators.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NoConvergence, NotHermitian, NotPSD, ShapeMismatch

ComplexMatrix = np.ndarray
Seed = int

HERM_TOL = 1e-10
PSD_FLOOR = 1e-10


def as_matrix(a) -> ComplexMatrix:
    """Coerce input to a 2-d complex ndarray, rejecting other shapes."""
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2:
        raise ShapeMismatch(f"expected a 2-d array, got shape {m.shape}")
    return m


def frob(a) -> float:
    return float(np.linalg.norm(np.asarray(a)))


def dagger(a: ComplexMatrix) -> ComplexMatrix:
    return np.conj(np.asarray(a)).T


@dataclass
class EigenSystem:
    """Eigenvalues in descending order with matching eigenvector columns."""

    values: np.ndarray
    vectors: ComplexMatrix


@dataclass
class PolarParts:
    """Factors of X = unitary_factor @ psd_factor."""

    unitary_factor: ComplexMatrix
    psd_factor: ComplexMatrix


def herm_eig(a) -> EigenSystem:
    """Eigendecomposition of a Hermitian matrix, eigenvalues descending.

    The input must satisfy ||A - A*||_F <= 1e-10 * (1 + ||A||_F); anything
    less symmetric raises NotHermitian rather than being silently averaged.
    """
    m = as_matrix(a)
    if m.shape[0] != m.shape[1]:
        raise ShapeMismatch(f"expected a square matrix, got shape {m.shape}")
    if frob(m - dagger(m)) > HERM_TOL * (1.0 + frob(m)):
        raise NotHermitian("matrix is not Hermitian within tolerance")
    try:
        vals, vecs = np.linalg.eigh(m)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise NoConvergence(str(exc)) from exc
    order = slice(None, None, -1)  # eigh is ascending
    return EigenSystem(values=vals[order].copy(), vectors=vecs[:, order].copy())


def svd(x) -> tuple[ComplexMatrix, np.ndarray, ComplexMatrix]:
    """Singular value decomposition X = P @ diag(s) @ Qh, s descending."""
    m = as_matrix(x)
    try:
        p, s, qh = np.linalg.svd(m)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise NoConvergence(str(exc)) from exc
    return p, s, qh


def polar(x) -> PolarParts:
    """Polar decomposition X = U @ P with U unitary and P PSD.

    The unitary factor is P_svd @ Qh, which stays unitary even when X is
    singular; in particular polar(0) has unitary factor I.
    """
    m = as_matrix(x)
    if m.shape[0] != m.shape[1]:
        raise ShapeMismatch(f"polar factor needs a square matrix, got {m.shape}")
    p, s, qh = svd(m)
    u = p @ qh
    psd = dagger(qh) @ (s[:, None] * qh)
    return PolarParts(unitary_factor=u, psd_factor=psd)


def sqrt_psd(a) -> ComplexMatrix:
    """Principal square root of a PSD matrix.

    Eigenvalues in [-1e-10 * (1 + ||A||_F), 0) are clamped to zero; anything
    below that floor raises NotPSD.
    """
    es = herm_eig(a)
    floor = -PSD_FLOOR * (1.0 + frob(a))
    if es.values.min(initial=0.0) < floor:
        raise NotPSD(f"eigenvalue {es.values.min():.3e} below PSD floor")
    vals = np.clip(es.values, 0.0, None)
    v = es.vectors
    return (v * np.sqrt(vals)) @ dagger(v)


def kron(a, b) -> ComplexMatrix:
    return np.kron(as_matrix(a), as_matrix(b))


def op_norm(x) -> float:
    """Largest singular value."""
    m = as_matrix(x)
    if m.size == 0:
        return 0.0
    return float(np.linalg.svd(m, compute_uv=False)[0])


def rng_from_seed(seed: Seed, key: tuple[int, ...] = ()) -> np.random.Generator:
    """Deterministic generator for a seed plus a split key.

    Distinct keys give independent streams, and the stream for a given
    (seed, key) pair does not depend on which other keys were drawn first.
    """
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))


def random_haar_unitary(d: int, rng: np.random.Generator) -> ComplexMatrix:
    """Haar-distributed d x d unitary.

    QR of a complex Ginibre matrix, with the R diagonal phase-normalised so
    the distribution is exactly Haar rather than QR-convention dependent.
    """
    z = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    q, r = np.linalg.qr(z)
    diag = np.diagonal(r).copy()
    diag[diag == 0] = 1.0
    return q * (diag / np.abs(diag))


def random_correlation(k: int, rng: np.random.Generator) -> ComplexMatrix:
    """Random k x k correlation matrix (PSD with unit diagonal).

    Gram matrix of k independent complex Gaussian vectors in C^k, each
    normalised to unit length.
    """
    v = rng.standard_normal((k, k)) + 1j * rng.standard_normal((k, k))
    v /= np.linalg.norm(v, axis=0)
    return dagger(v) @ v
