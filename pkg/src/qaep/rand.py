"""Seeded random element generators for property sweeps."""

from __future__ import annotations

import numpy as np

from .blockop import BlockAlgebra, HermitianElement, Projection, eigendecompose


def rand_hermitian(rng: np.random.Generator, dim: int, scale: float = 1.0) -> np.ndarray:
    a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return scale * (a + a.conj().T) / 2


def rand_density(rng: np.random.Generator, dim: int) -> np.ndarray:
    a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    d = a @ a.conj().T
    return d / np.trace(d).real


def rand_unit_vector(rng: np.random.Generator, dim: int) -> np.ndarray:
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return v / np.linalg.norm(v)


def rand_block_algebra(
    rng: np.random.Generator, max_blocks: int = 4, max_block_dim: int = 6
) -> BlockAlgebra:
    n_blocks = int(rng.integers(1, max_blocks + 1))
    dims = tuple(int(rng.integers(1, max_block_dim + 1)) for _ in range(n_blocks))
    raw = rng.uniform(0.2, 1.0, size=n_blocks)
    total = float(sum(r * m for r, m in zip(raw, dims)))
    weights = tuple(float(r / total) for r in raw)
    return BlockAlgebra(dims, weights)


def rand_element(rng: np.random.Generator, algebra: BlockAlgebra) -> HermitianElement:
    return HermitianElement(
        algebra, [rand_hermitian(rng, m) for m in algebra.block_dims]
    )


def rand_density_element(rng: np.random.Generator, algebra: BlockAlgebra) -> HermitianElement:
    """Blockwise positive element with canonical trace one."""
    blocks = []
    for m in algebra.block_dims:
        a = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
        blocks.append(a @ a.conj().T)
    total = sum(float(np.trace(b).real) for b in blocks)
    return HermitianElement(algebra, [b / total for b in blocks])


def rand_projection_element(
    rng: np.random.Generator, algebra: BlockAlgebra, allow_zero: bool = True
) -> Projection:
    """Random-subspace projection with an independent random rank per block."""
    eig = eigendecompose(rand_element(rng, algebra))
    masks = []
    for m in algebra.block_dims:
        low = 0 if allow_zero else min(1, m)
        r = int(rng.integers(low, m + 1))
        mask = np.zeros(m, dtype=bool)
        mask[:r] = True
        masks.append(mask)
    return eig.projector(masks)
