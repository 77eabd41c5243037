"""Block-diagonal finite-dimensional operator algebra.

A finite-dimensional C*-algebra is represented as a direct sum of full
matrix blocks.  Elements carry one dense complex matrix per block.  The
tracial reference state tau is encoded by per-block central weights
lambda_k >= 0 with sum_k lambda_k * m_k = 1, i.e. its density matrix with
respect to the canonical (unnormalised) trace is  D_tau = (+)_k lambda_k I_k.

All spectral calculus (eigendecomposition, spectral projections, log/exp)
lives here.  Matrices that are exactly diagonal take a fast path that skips
the dense eigensolver; this keeps volume-12 spin-chain sweeps (dimension
4096) tractable for diagonal states.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, PositivityError, ShapeError

# Tolerances, fixed once for the whole toolkit.
SYM_TOL = 1e-8        # reject inputs with ||a - a*|| larger than this
EPS_SPEC = 1e-12      # spectral-interval boundary tolerance
EPS_FLOOR = 1e-14     # eigenvalues at or below this count as exact zeros
PROJ_TOL = 1e-10      # idempotence / 0-1 spectrum tolerance for projections


@dataclass(frozen=True)
class BlockAlgebra:
    """Direct sum of full matrix blocks with a tracial state.

    block_dims[k] is the matrix size of block k, central_weights[k] the
    density of tau on that block.  The canonical trace of the identity is
    sum(block_dims); tau of the identity is sum(w_k * m_k) = 1.
    """

    block_dims: tuple[int, ...]
    central_weights: tuple[float, ...]

    def __post_init__(self):
        if len(self.block_dims) != len(self.central_weights):
            raise ShapeError("one central weight per block required")
        if not self.block_dims:
            raise ShapeError("algebra needs at least one block")
        if any(m < 1 for m in self.block_dims):
            raise ShapeError("block dimensions must be >= 1")
        if any(w < 0 for w in self.central_weights):
            raise ShapeError("central weights must be >= 0")
        total = sum(w * m for w, m in zip(self.central_weights, self.block_dims))
        if abs(total - 1.0) > 1e-9:
            raise ShapeError(
                f"central weights do not normalise tau: sum w_k m_k = {total!r}"
            )

    @classmethod
    def full(cls, dim: int) -> "BlockAlgebra":
        """Single full matrix block with the normalised trace."""
        return cls((dim,), (1.0 / dim,))

    @classmethod
    def uniform(cls, block_dims: tuple[int, ...] | list[int]) -> "BlockAlgebra":
        """Multi-block algebra with tau = normalised canonical trace."""
        dims = tuple(int(m) for m in block_dims)
        total = sum(dims)
        return cls(dims, tuple(1.0 / total for _ in dims))

    @property
    def n_blocks(self) -> int:
        return len(self.block_dims)

    @property
    def total_dim(self) -> int:
        """Linear dimension of the algebra, sum of squared block sizes."""
        return sum(m * m for m in self.block_dims)

    @property
    def canonical_rank(self) -> int:
        """Canonical trace of the identity, sum of block sizes."""
        return sum(self.block_dims)

    def identity(self) -> "HermitianElement":
        return HermitianElement(self, [np.eye(m, dtype=complex) for m in self.block_dims])

    def zero(self) -> "HermitianElement":
        return HermitianElement(
            self, [np.zeros((m, m), dtype=complex) for m in self.block_dims]
        )

    def trace_density(self) -> "HermitianElement":
        """Density matrix of tau: (+)_k lambda_k I_k."""
        return HermitianElement(
            self,
            [w * np.eye(m, dtype=complex) for w, m in zip(self.central_weights, self.block_dims)],
        )

    def log_trace_density(self) -> "HermitianElement":
        """log D_tau, defined blockwise as log(lambda_k) I_k.

        Raises DomainError if any block has weight 0 (tau not faithful there).
        """
        if any(w <= EPS_FLOOR for w in self.central_weights):
            raise DomainError("tau weight vanishes on a block; log undefined")
        return HermitianElement(
            self,
            [
                math.log(w) * np.eye(m, dtype=complex)
                for w, m in zip(self.central_weights, self.block_dims)
            ],
        )


def _as_block(mat, dim: int) -> np.ndarray:
    b = np.asarray(mat, dtype=complex)
    if b.shape != (dim, dim):
        raise ShapeError(f"block has shape {b.shape}, expected {(dim, dim)}")
    return b


@dataclass
class HermitianElement:
    """Self-adjoint element of a BlockAlgebra, one dense matrix per block."""

    algebra: BlockAlgebra
    blocks: list[np.ndarray]

    def __post_init__(self):
        if len(self.blocks) != self.algebra.n_blocks:
            raise ShapeError("one matrix per block required")
        self.blocks = [_as_block(b, m) for b, m in zip(self.blocks, self.algebra.block_dims)]

    def hermiticity_defect(self) -> float:
        return max(
            float(np.abs(b - b.conj().T).max()) if b.size else 0.0 for b in self.blocks
        )

    def canonical_trace(self) -> float:
        """Tr_B a = sum of plain matrix traces."""
        return float(sum(np.trace(b).real for b in self.blocks))

    def tau(self) -> float:
        """tau(a) = sum_k lambda_k Tr a_k."""
        return float(
            sum(
                w * np.trace(b).real
                for w, b in zip(self.algebra.central_weights, self.blocks)
            )
        )

    def pair(self, other: "HermitianElement") -> float:
        """Canonical-trace pairing Tr_B(self x other); the expectation of
        `other` when `self` is a density matrix."""
        self._check_same_algebra(other)
        return float(
            sum(np.trace(a @ b).real for a, b in zip(self.blocks, other.blocks))
        )

    def norm(self) -> float:
        """Operator norm, max |eigenvalue| over blocks."""
        out = 0.0
        for b in self.blocks:
            if _is_diagonal(b):
                out = max(out, float(np.abs(np.diagonal(b)).max()))
            else:
                out = max(out, float(np.abs(np.linalg.eigvalsh(_symmetrize(b))).max()))
        return out

    def _check_same_algebra(self, other: "HermitianElement"):
        if self.algebra != other.algebra:
            raise ShapeError("elements live in different algebras")

    def __add__(self, other: "HermitianElement") -> "HermitianElement":
        self._check_same_algebra(other)
        return HermitianElement(
            self.algebra, [a + b for a, b in zip(self.blocks, other.blocks)]
        )

    def __sub__(self, other: "HermitianElement") -> "HermitianElement":
        self._check_same_algebra(other)
        return HermitianElement(
            self.algebra, [a - b for a, b in zip(self.blocks, other.blocks)]
        )

    def __rmul__(self, scalar) -> "HermitianElement":
        return HermitianElement(self.algebra, [scalar * b for b in self.blocks])

    def __matmul__(self, other: "HermitianElement") -> "HermitianElement":
        """Blockwise matrix product (not Hermitian in general)."""
        self._check_same_algebra(other)
        return HermitianElement(
            self.algebra, [a @ b for a, b in zip(self.blocks, other.blocks)]
        )

    def commutator_norm(self, other: "HermitianElement") -> float:
        self._check_same_algebra(other)
        return max(
            float(np.abs(a @ b - b @ a).max())
            for a, b in zip(self.blocks, other.blocks)
        )


class Projection(HermitianElement):
    """Orthogonal projection; same storage as HermitianElement."""

    def validate(self, tol: float = PROJ_TOL) -> "Projection":
        for b in self.blocks:
            if float(np.abs(b @ b - b).max()) > tol:
                raise ShapeError("not idempotent within tolerance")
            if float(np.abs(b - b.conj().T).max()) > tol:
                raise ShapeError("not self-adjoint within tolerance")
        return self

    def rank(self) -> int:
        """Canonical trace rounded to the nearest integer."""
        tr = self.canonical_trace()
        r = round(tr)
        if abs(tr - r) > 1e-8:
            raise ShapeError(f"non-integer canonical trace {tr!r} for a projection")
        return int(r)


@dataclass(frozen=True)
class Interval:
    """Real interval with independent open/closed endpoint flags.

    Membership uses the boundary rule: an eigenvalue within EPS_SPEC of an
    endpoint is classified as if it sat exactly on the endpoint, so the
    endpoint flag alone decides.  Infinite endpoints are allowed.
    """

    lo: float
    hi: float
    lo_closed: bool = False
    hi_closed: bool = False

    @classmethod
    def open(cls, lo: float, hi: float) -> "Interval":
        return cls(lo, hi, False, False)

    @classmethod
    def closed(cls, lo: float, hi: float) -> "Interval":
        return cls(lo, hi, True, True)

    @classmethod
    def at_most(cls, t: float) -> "Interval":
        """Half line (-inf, t]."""
        return cls(-math.inf, t, False, True)

    @classmethod
    def at_least(cls, t: float) -> "Interval":
        """Half line [t, +inf)."""
        return cls(t, math.inf, True, False)

    @classmethod
    def everything(cls) -> "Interval":
        return cls(-math.inf, math.inf, False, False)

    def contains(self, x: float, eps: float = EPS_SPEC) -> bool:
        if math.isfinite(self.lo) and abs(x - self.lo) <= eps:
            return self.lo_closed
        if math.isfinite(self.hi) and abs(x - self.hi) <= eps:
            return self.hi_closed
        return self.lo < x < self.hi

    def mask(self, values: np.ndarray, eps: float = EPS_SPEC) -> np.ndarray:
        """Vectorised membership for an array of eigenvalues."""
        v = np.asarray(values, dtype=float)
        out = (v > self.lo) & (v < self.hi)
        if math.isfinite(self.lo):
            at_lo = np.abs(v - self.lo) <= eps
            out = np.where(at_lo, self.lo_closed, out)
        if math.isfinite(self.hi):
            at_hi = np.abs(v - self.hi) <= eps
            out = np.where(at_hi, self.hi_closed, out)
        return out


def _symmetrize(b: np.ndarray) -> np.ndarray:
    return (b + b.conj().T) / 2.0


def _is_diagonal(b: np.ndarray) -> bool:
    # Exact test; off-diagonal nonzeros make count_nonzero(b) exceed the
    # diagonal count.  Avoids allocating a dim^2 scratch copy.
    return int(np.count_nonzero(b)) == int(np.count_nonzero(np.diagonal(b)))


@dataclass
class _BlockEigen:
    """Eigen data for one block, eigenvalues descending.

    vectors is None for diagonal blocks; then perm[i] is the standard-basis
    index carrying values[i].  For dense blocks, vectors[:, i] is the
    eigenvector of values[i].
    """

    values: np.ndarray
    vectors: np.ndarray | None = None
    perm: np.ndarray | None = None

    @property
    def dim(self) -> int:
        return len(self.values)

    def projector(self, mask: np.ndarray) -> np.ndarray:
        mask = np.asarray(mask, dtype=bool)
        d = self.dim
        if self.vectors is None:
            p = np.zeros((d, d), dtype=complex)
            idx = self.perm[mask]
            p[idx, idx] = 1.0
            return p
        v = self.vectors[:, mask]
        return v @ v.conj().T

    def apply(self, fvals: np.ndarray) -> np.ndarray:
        """Matrix with the same eigenvectors and eigenvalues fvals[i]."""
        d = self.dim
        if self.vectors is None:
            out = np.zeros((d, d), dtype=complex)
            out[self.perm, self.perm] = fvals
            return out
        return (self.vectors * fvals) @ self.vectors.conj().T

    def minimal_projector(self, i: int) -> np.ndarray:
        d = self.dim
        if self.vectors is None:
            p = np.zeros((d, d), dtype=complex)
            j = int(self.perm[i])
            p[j, j] = 1.0
            return p
        v = self.vectors[:, [i]]
        return v @ v.conj().T


@dataclass
class EigenDecomposition:
    """Per-block eigen data of a Hermitian element.

    Eigenvalues are descending within each block; ties keep the stable
    original index order, so "top r" selections are deterministic.
    """

    algebra: BlockAlgebra
    blocks: list[_BlockEigen]

    def eigenvalues(self, k: int) -> np.ndarray:
        return self.blocks[k].values

    def all_eigenvalues(self) -> np.ndarray:
        return np.concatenate([be.values for be in self.blocks])

    def projector(self, masks: list[np.ndarray]) -> Projection:
        return Projection(
            self.algebra, [be.projector(m) for be, m in zip(self.blocks, masks)]
        )

    def select(self, interval: Interval) -> Projection:
        return self.projector([interval.mask(be.values) for be in self.blocks])

    def apply(self, f) -> HermitianElement:
        return HermitianElement(
            self.algebra, [be.apply(f(be.values)) for be in self.blocks]
        )

    def reconstruct(self) -> HermitianElement:
        return self.apply(lambda v: v)

    def minimal_projector(self, k: int, i: int) -> Projection:
        """Rank-one projector for eigenvalue i of block k (zero elsewhere)."""
        mats = [np.zeros((m, m), dtype=complex) for m in self.algebra.block_dims]
        mats[k] = self.blocks[k].minimal_projector(i)
        return Projection(self.algebra, mats)


def eigendecompose(a: HermitianElement) -> EigenDecomposition:
    """Eigendecompose a Hermitian element, descending per block.

    The input is symmetrised as (a + a*)/2 first; inputs whose Hermiticity
    defect exceeds SYM_TOL are rejected so that numerical noise from matrix
    products cannot silently change spectra.
    """
    defect = a.hermiticity_defect()
    if defect > SYM_TOL:
        raise ShapeError(f"element not Hermitian: defect {defect:.3e} > {SYM_TOL:g}")
    out = []
    for b in a.blocks:
        if _is_diagonal(b):
            diag = np.diagonal(b).real.copy()
            order = np.argsort(-diag, kind="stable")
            out.append(_BlockEigen(values=diag[order], perm=order))
        else:
            w, v = np.linalg.eigh(_symmetrize(b))
            order = np.argsort(-w, kind="stable")
            out.append(_BlockEigen(values=w[order], vectors=v[:, order]))
    return EigenDecomposition(a.algebra, out)


def spectral_projection(a: HermitianElement, interval: Interval) -> Projection:
    """Sum of eigenprojectors of `a` with eigenvalue in the interval.

    An interval disjoint from the spectrum yields the zero projection.
    """
    return eigendecompose(a).select(interval)


def matrix_exp(a: HermitianElement) -> HermitianElement:
    """exp(a) by eigenvalue functional calculus."""
    return eigendecompose(a).apply(np.exp)


def matrix_log(d: HermitianElement) -> HermitianElement:
    """log(d) for positive semidefinite d, taken on the support.

    Eigenvalues at or below EPS_FLOOR count as exact zeros and contribute
    nothing (the 0 log 0 = 0 convention); eigenvalues below -EPS_FLOOR
    but above the positivity tolerance are floored.  The zero element has
    no support and is rejected.
    """
    eig = eigendecompose(d)
    low = min(float(be.values.min()) for be in eig.blocks)
    if low < -1e-10:
        raise PositivityError(f"negative eigenvalue {low:.3e} in matrix_log input")
    if max(float(be.values.max()) for be in eig.blocks) <= EPS_FLOOR:
        raise DomainError("matrix_log of the zero element")

    def f(vals: np.ndarray) -> np.ndarray:
        out = np.zeros_like(vals)
        support = vals > EPS_FLOOR
        out[support] = np.log(vals[support])
        return out

    return eig.apply(f)


def support_projection(d: HermitianElement) -> Projection:
    """Projection onto the range of a positive semidefinite element."""
    eig = eigendecompose(d)
    return eig.projector([be.values > EPS_FLOOR for be in eig.blocks])
