"""Channels on block-structured spaces: ensembles, Choi matrices, averages.

Conventions used throughout:

- A matrix on the composite space is stored as a k x k grid of d x d blocks,
  so the flat index of (block row i, inner row r) is i*d + r and the kron
  realisation of (grid part A, block part B) is np.kron(A, B).
- tr_d denotes the normalised trace Tr/d, so that tr_d(I_d) = 1.
- The Choi matrix of a map T on k x k matrices is the k x k grid whose
  (i, j) block is T(E_ij).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DimensionTooLarge,
    MufactError,
    NotCP,
    NotUnitary,
    ShapeMismatch,
)
from .linalg import ComplexMatrix, as_matrix, dagger, frob, herm_eig

WEIGHT_TOL = 1e-12
UNITARY_TOL = 1e-10
CHANNEL_TOL = 1e-9
KRAUS_CUTOFF = 1e-10


# ---------------------------------------------------------------------------
# block layout helpers


def to_blocks(m, d: int, k: int) -> np.ndarray:
    """View a dk x dk matrix as a (k, k, d, d) array of blocks."""
    a = as_matrix(m)
    if a.shape != (d * k, d * k):
        raise ShapeMismatch(f"expected shape {(d * k, d * k)}, got {a.shape}")
    return a.reshape(k, d, k, d).transpose(0, 2, 1, 3)


def from_blocks(blocks) -> ComplexMatrix:
    """Inverse of to_blocks: assemble a (k, k, d, d) array into a matrix."""
    b = np.asarray(blocks, dtype=complex)
    if b.ndim != 4 or b.shape[0] != b.shape[1] or b.shape[2] != b.shape[3]:
        raise ShapeMismatch(f"expected a (k, k, d, d) array, got {b.shape}")
    k, d = b.shape[0], b.shape[2]
    return b.transpose(0, 2, 1, 3).reshape(d * k, d * k)


def compress(m, d: int, k: int) -> ComplexMatrix:
    """k x k matrix of normalised block traces: out[i, j] = tr_d(M_ij)."""
    blocks = to_blocks(m, d, k)
    return np.trace(blocks, axis1=2, axis2=3) / d


def embed(b, d: int) -> ComplexMatrix:
    """Lift a k x k matrix B to the composite space as I_d (x) B."""
    a = as_matrix(b)
    return np.kron(a, np.eye(d))


@dataclass
class BlockOperator:
    """A dk x dk matrix together with its block structure."""

    matrix: ComplexMatrix
    d: int
    k: int

    def __post_init__(self):
        self.matrix = as_matrix(self.matrix)
        if self.matrix.shape != (self.d * self.k,) * 2:
            raise ShapeMismatch(
                f"matrix shape {self.matrix.shape} does not match d={self.d}, k={self.k}"
            )

    def block(self, i: int, j: int) -> ComplexMatrix:
        d = self.d
        return self.matrix[i * d:(i + 1) * d, j * d:(j + 1) * d]

    def blocks(self) -> np.ndarray:
        return to_blocks(self.matrix, self.d, self.k)


# ---------------------------------------------------------------------------
# channel representations


@dataclass
class KrausChannel:
    """Completely positive map X -> sum_i A_i X A_i*."""

    kraus: list

    def __post_init__(self):
        self.kraus = [as_matrix(a) for a in self.kraus]
        if not self.kraus:
            raise ShapeMismatch("channel needs at least one Kraus operator")
        shape = self.kraus[0].shape
        if any(a.shape != shape for a in self.kraus):
            raise ShapeMismatch("Kraus operators must share a common shape")

    @property
    def dim(self) -> int:
        return self.kraus[0].shape[1]

    def apply(self, x) -> ComplexMatrix:
        m = as_matrix(x)
        out = np.zeros((self.kraus[0].shape[0],) * 2, dtype=complex)
        for a in self.kraus:
            out += a @ m @ dagger(a)
        return out

    def tp_residual(self) -> float:
        s = sum(dagger(a) @ a for a in self.kraus)
        return frob(s - np.eye(self.dim))

    def unital_residual(self) -> float:
        s = sum(a @ dagger(a) for a in self.kraus)
        return frob(s - np.eye(self.kraus[0].shape[0]))

    def is_tp(self, tol: float = CHANNEL_TOL) -> bool:
        return self.tp_residual() <= tol

    def is_unital(self, tol: float = CHANNEL_TOL) -> bool:
        return self.unital_residual() <= tol


@dataclass
class ChoiMatrix:
    """Choi matrix of a map on k x k matrices: block (i, j) holds T(E_ij)."""

    matrix: ComplexMatrix
    k: int

    def __post_init__(self):
        self.matrix = as_matrix(self.matrix)
        if self.matrix.shape != (self.k * self.k,) * 2:
            raise ShapeMismatch(
                f"Choi of a map on {self.k}x{self.k} matrices must be "
                f"{self.k ** 2}x{self.k ** 2}, got {self.matrix.shape}"
            )

    def block(self, i: int, j: int) -> ComplexMatrix:
        k = self.k
        return self.matrix[i * k:(i + 1) * k, j * k:(j + 1) * k]

    def apply(self, x) -> ComplexMatrix:
        m = as_matrix(x)
        if m.shape != (self.k, self.k):
            raise ShapeMismatch(f"expected a {self.k}x{self.k} input, got {m.shape}")
        blocks = to_blocks(self.matrix, self.k, self.k)
        return np.einsum("ij,ijrs->rs", m, blocks)

    def cp_residual(self) -> float:
        vals = herm_eig(self.matrix).values
        return float(max(0.0, -vals.min()))

    def is_cp(self, tol: float = CHANNEL_TOL) -> bool:
        return self.cp_residual() <= tol * (1.0 + frob(self.matrix))


@dataclass
class MixedUnitaryEnsemble:
    """Convex combination of unitary conjugations X -> sum_m p_m U_m X U_m*."""

    weights: np.ndarray
    unitaries: np.ndarray

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float).reshape(-1)
        self.unitaries = np.asarray(self.unitaries, dtype=complex)
        if self.unitaries.ndim != 3 or self.unitaries.shape[1] != self.unitaries.shape[2]:
            raise ShapeMismatch(
                f"unitaries must be a stack of square matrices, got {self.unitaries.shape}"
            )
        if len(self.weights) != self.unitaries.shape[0]:
            raise ShapeMismatch("weight count does not match unitary count")

    @property
    def size(self) -> int:
        return len(self.weights)

    @property
    def dim(self) -> int:
        return self.unitaries.shape[1]

    def check(self, weight_tol: float = WEIGHT_TOL, unitary_tol: float = UNITARY_TOL):
        """Raise unless weights form a positive convex combination of unitaries."""
        total = float(np.sum(self.weights))
        if abs(total - 1.0) > weight_tol:
            raise MufactError(f"weights sum to {total!r}, expected 1")
        if self.weights.min(initial=1.0) <= 0.0:
            raise MufactError("weights must be strictly positive")
        eye = np.eye(self.dim)
        for m, u in enumerate(self.unitaries):
            if frob(dagger(u) @ u - eye) > unitary_tol:
                raise NotUnitary(f"ensemble member {m} is not unitary within tolerance")
        return self

    def apply(self, x) -> ComplexMatrix:
        m = as_matrix(x)
        return np.einsum(
            "m,mab,bc,mdc->ad", self.weights, self.unitaries, m, np.conj(self.unitaries)
        )


@dataclass
class SchurSymbol:
    """Symbol of a Schur multiplier; a correlation matrix when check() passes."""

    c: ComplexMatrix

    def __post_init__(self):
        self.c = as_matrix(self.c)
        if self.c.shape[0] != self.c.shape[1]:
            raise ShapeMismatch(f"symbol must be square, got {self.c.shape}")

    @property
    def k(self) -> int:
        return self.c.shape[0]

    def check(self, diag_tol: float = 1e-10):
        """Raise unless c is PSD with unit diagonal."""
        es = herm_eig(self.c)  # rejects non-Hermitian input
        if es.values.min() < -1e-10 * (1.0 + frob(self.c)):
            raise NotCP(f"symbol has eigenvalue {es.values.min():.3e}")
        off = np.abs(np.diagonal(self.c) - 1.0).max()
        if off > diag_tol:
            raise MufactError(f"diagonal deviates from 1 by {off:.3e}")
        return self

    def apply(self, x) -> ComplexMatrix:
        return schur_apply(self.c, x)


@dataclass
class ChannelReport:
    """Outcome of verify_channel: flags plus the residuals behind them."""

    dim: int
    cp: bool
    tp: bool
    unital: bool
    cp_residual: float
    tp_residual: float
    unital_residual: float


@dataclass
class DeltaCompression:
    """Result of delta_compress: the compressed map and, when the input was a
    mixed-unitary ensemble, the composed ensemble realising the lifted map."""

    choi: ChoiMatrix
    channel: KrausChannel
    composed: MixedUnitaryEnsemble | None = field(default=None)


# ---------------------------------------------------------------------------
# basic operations


def schur_apply(c, x) -> ComplexMatrix:
    """Entrywise product of symbol and input."""
    a, m = as_matrix(c), as_matrix(x)
    if a.shape != m.shape:
        raise ShapeMismatch(f"symbol shape {a.shape} does not match input {m.shape}")
    return a * m


def weyl_unitaries(d: int) -> np.ndarray:
    """The d^2 Weyl unitaries S^a D^b, ordered lexicographically by (a, b).

    S is the cyclic shift e_j -> e_{j+1 mod d} and D = diag(w, w^2, ..., w^d)
    with w = exp(2*pi*i/d).
    """
    if d < 1:
        raise ShapeMismatch("dimension must be at least 1")
    w = np.exp(2j * np.pi / d)
    s = np.zeros((d, d), dtype=complex)
    for j in range(d):
        s[(j + 1) % d, j] = 1.0
    dmat = np.diag(w ** np.arange(1, d + 1))
    out = np.empty((d * d, d, d), dtype=complex)
    sa = np.eye(d, dtype=complex)
    for a in range(d):
        wab = sa.copy()
        for b in range(d):
            out[a * d + b] = wab
            wab = wab @ dmat
        sa = s @ sa
    return out


def depolarizing_ensemble(d: int) -> MixedUnitaryEnsemble:
    """Uniform Weyl ensemble realising X -> tr_d(X) * I_d."""
    ws = weyl_unitaries(d)
    return MixedUnitaryEnsemble(np.full(d * d, 1.0 / (d * d)), ws).check()


def apply_ensemble(ensemble: MixedUnitaryEnsemble, x) -> ComplexMatrix:
    return ensemble.apply(x)


def _as_apply(t, dim: int | None = None):
    """Normalise a channel-like object to (apply callable, input dimension)."""
    if isinstance(t, (KrausChannel, MixedUnitaryEnsemble)):
        return t.apply, t.dim
    if isinstance(t, ChoiMatrix):
        return t.apply, t.k
    if isinstance(t, SchurSymbol):
        return t.apply, t.k
    if callable(t):
        if dim is None:
            raise ShapeMismatch("input dimension required for a bare callable")
        return t, dim
    raise TypeError(f"cannot interpret {type(t).__name__} as a channel")


def choi_of(t, dim: int | None = None) -> ChoiMatrix:
    """Assemble the Choi matrix of a map by applying it to every E_ij."""
    apply, k = _as_apply(t, dim)
    blocks = np.empty((k, k, k, k), dtype=complex)
    e = np.zeros((k, k), dtype=complex)
    for i in range(k):
        for j in range(k):
            e[i, j] = 1.0
            blocks[i, j] = apply(e)
            e[i, j] = 0.0
    return ChoiMatrix(from_blocks(blocks), k)


def kraus_from_choi(choi: ChoiMatrix, cutoff: float = KRAUS_CUTOFF) -> KrausChannel:
    """Kraus operators from the spectral decomposition of a Choi matrix.

    Eigenvalues at or below `cutoff` are dropped. For the (i, r) composite
    index used here an eigenvector reshapes to a matrix whose transpose is
    the Kraus operator.
    """
    es = herm_eig(choi.matrix)
    k = choi.k
    kraus = []
    for lam, v in zip(es.values, es.vectors.T):
        if lam <= cutoff:
            break  # eigenvalues are descending
        kraus.append(np.sqrt(lam) * v.reshape(k, k).T)
    if not kraus:
        kraus = [np.zeros((k, k), dtype=complex)]
    return KrausChannel(kraus)


def verify_channel(t, dim: int | None = None) -> ChannelReport:
    """Check complete positivity, trace preservation and unitality.

    All three are read off the Choi matrix, so any channel-like input works.
    """
    choi = t if isinstance(t, ChoiMatrix) else choi_of(t, dim)
    k = choi.k
    cp_res = choi.cp_residual()
    tp_mat = np.array(
        [[np.trace(choi.block(i, j)) for j in range(k)] for i in range(k)]
    )
    tp_res = frob(tp_mat - np.eye(k))
    unital_res = frob(sum(choi.block(i, i) for i in range(k)) - np.eye(k))
    scale = 1.0 + frob(choi.matrix)
    return ChannelReport(
        dim=k,
        cp=cp_res <= CHANNEL_TOL * scale,
        tp=tp_res <= CHANNEL_TOL,
        unital=unital_res <= CHANNEL_TOL,
        cp_residual=cp_res,
        tp_residual=tp_res,
        unital_residual=unital_res,
    )


# ---------------------------------------------------------------------------
# lifted maps on the composite space


def lift_schur(c, d: int, x) -> ComplexMatrix:
    """Action of the depolarising-tensor-Schur map on a composite matrix.

    Block (i, j) of the input is sent to c_ij * tr_d(X_ij) * I_d.
    """
    a = as_matrix(c)
    k = a.shape[0]
    m = compress(x, d, k)
    return np.kron(a * m, np.eye(d))


def lift_channel(t, d: int, x, dim: int | None = None) -> ComplexMatrix:
    """Action of (depolarise the blocks) tensor (T on the grid)."""
    apply, k = _as_apply(t, dim)
    m = compress(x, d, k)
    return np.kron(apply(m), np.eye(d))


def delta_apply(x, d: int, k: int) -> ComplexMatrix:
    """Blockwise depolarisation: each block X_ij becomes tr_d(X_ij) * I_d."""
    return np.kron(compress(x, d, k), np.eye(d))


def delta_compress(phi, d: int, k: int) -> DeltaCompression:
    """Compress a channel on the composite space to a map on the grid.

    T(B)_ij = tr_d( Phi(I_d (x) B)_ij ). When phi is a mixed-unitary
    ensemble, also return the composed ensemble obtained by sandwiching each
    member between Weyl unitaries on the block factor; it realises the
    lifted map of T with d^2 * M * d^2 members of weight p_m / d^4.
    """
    apply, n = _as_apply(phi, d * k)
    if n != d * k:
        raise ShapeMismatch(f"channel acts on dimension {n}, expected {d * k}")
    blocks = np.empty((k, k, k, k), dtype=complex)
    e = np.zeros((k, k), dtype=complex)
    for i in range(k):
        for j in range(k):
            e[i, j] = 1.0
            blocks[i, j] = compress(apply(embed(e, d)), d, k)
            e[i, j] = 0.0
    choi = ChoiMatrix(from_blocks(blocks), k)
    channel = kraus_from_choi(choi)

    composed = None
    if isinstance(phi, MixedUnitaryEnsemble):
        lifted = np.stack([np.kron(np.eye(k), w) for w in weyl_unitaries(d)])
        n_w = d * d
        m_in = phi.size
        total = n_w * m_in * n_w
        weights = np.empty(total)
        unitaries = np.empty((total, d * k, d * k), dtype=complex)
        idx = 0
        for post in lifted:
            for p_m, v in zip(phi.weights, phi.unitaries):
                pv = post @ v
                for pre in lifted:
                    weights[idx] = p_m / (n_w * n_w)
                    unitaries[idx] = pv @ pre
                    idx += 1
        composed = MixedUnitaryEnsemble(weights, unitaries).check()
    return DeltaCompression(choi=choi, channel=channel, composed=composed)


# ---------------------------------------------------------------------------
# diagonal biaverages


def d_biaverage(t, dim: int | None = None, cp_tol: float = CHANNEL_TOL) -> ComplexMatrix:
    """Symbol of the two-sided diagonal-unitary average of a CP map.

    Averaging D* T(D . D') D'* over independent diagonal unitaries leaves a
    Schur multiplier with symbol b_ij = [T(E_ij)]_ij; this reads the symbol
    off the Choi matrix and raises NotCP if that matrix is not PSD.
    """
    choi = t if isinstance(t, ChoiMatrix) else choi_of(t, dim)
    scale = 1.0 + frob(choi.matrix)
    if choi.cp_residual() > cp_tol * scale:
        raise NotCP("Choi matrix has a negative eigenvalue beyond tolerance")
    k = choi.k
    idx = np.arange(k) * k + np.arange(k)  # composite index of (i, i)
    return choi.matrix[np.ix_(idx, idx)].copy()


def biaverage_pm_oracle(t, dim: int | None = None, max_k: int = 8) -> ComplexMatrix:
    """Diagonal biaverage computed literally from +-1 sign matrices.

    Enumerates all 2^k sign diagonals on each side, averages the conjugated
    action on every E_ij over the 4^k sign pairs, checks the result is
    supported on E_ij alone and reads off the coefficient. Matching the
    continuous-average symbol exactly is the point: +-1 signs already have
    the second moments the torus average uses.
    """
    apply, k = _as_apply(t, dim)
    if k > max_k:
        raise DimensionTooLarge(f"sign enumeration capped at k={max_k}, got k={k}")
    n = 1 << k
    signs = 1.0 - 2.0 * (
        (np.arange(n)[:, None] >> np.arange(k)[None, :]) & 1
    )  # all 2^k sign vectors, one per row
    second = (signs.T @ signs) / n  # E[s_a s_b] over the enumeration
    b = np.empty((k, k), dtype=complex)
    e = np.zeros((k, k), dtype=complex)
    for i in range(k):
        for j in range(k):
            e[i, j] = 1.0
            y = apply(e)
            e[i, j] = 0.0
            avg = second[i][:, None] * y * second[j][None, :]
            b[i, j] = avg[i, j]
            avg[i, j] = 0.0
            if np.abs(avg).max() > 1e-12 * (1.0 + np.abs(y).max()):
                raise MufactError("sign biaverage is not a Schur multiplier")
    return b
