"""Entropy functionals and the mean-entropy limit.

All entropies are in nats.  Densities are taken with respect to the
canonical trace of their block algebra, so the von Neumann entropy is
-sum beta log beta over all block eigenvalues and the relative entropy of
two positive functionals is Tr D1 (log D1 - log D2) on the support of D1,
with +inf on support violation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .blockop import EPS_FLOOR, HermitianElement, eigendecompose
from .chain import ChainModel
from .errors import InvariantError, PositivityError, ShapeError
from .states import StateModel

POSITIVITY_TOL = 1e-10


def _clean_eigenvalues(values: np.ndarray, what: str) -> np.ndarray:
    low = float(values.min()) if values.size else 0.0
    if low < -POSITIVITY_TOL:
        raise PositivityError(f"{what} has eigenvalue {low:.3e}")
    return np.clip(values, 0.0, None)


def von_neumann_entropy(dens: HermitianElement) -> float:
    """-Tr D log D with the 0 log 0 = 0 convention, in nats."""
    tr = dens.canonical_trace()
    if abs(tr - 1.0) > 1e-8:
        raise ShapeError(f"density has canonical trace {tr!r}, expected 1")
    out = 0.0
    for be in eigendecompose(dens).blocks:
        w = _clean_eigenvalues(be.values, "density")
        w = w[w > EPS_FLOOR]
        out -= float((w * np.log(w)).sum())
    return out


def relative_entropy(d1: HermitianElement, d2: HermitianElement) -> float:
    """Tr D1 (log D1 - log D2) on supp D1; +inf when supp D1 leaks out of
    supp D2.  Defined for positive functionals, nonnegative on states."""
    d1._check_same_algebra(d2)
    eig1 = eigendecompose(d1)
    eig2 = eigendecompose(d2)
    total = 0.0
    for k, (be1, be2) in enumerate(zip(eig1.blocks, eig2.blocks)):
        w1 = _clean_eigenvalues(be1.values, "first argument")
        w2 = _clean_eigenvalues(be2.values, "second argument")
        kernel2 = w2 <= EPS_FLOOR
        if kernel2.any():
            leak = float(
                np.trace(d1.blocks[k] @ be2.projector(kernel2)).real
            )
            if leak > 1e-12:
                return math.inf
        sup1 = w1 > EPS_FLOOR
        total += float((w1[sup1] * np.log(w1[sup1])).sum())
        log2_vals = np.where(kernel2, 0.0, np.log(np.where(kernel2, 1.0, w2)))
        log_d2 = be2.apply(log2_vals)
        total -= float(np.trace(d1.blocks[k] @ log_d2).real)
    return total


@dataclass
class MeanEntropyEstimate:
    """Per-volume entropy densities and their extrapolated limit."""

    n_values: list[int]
    entropies: list[float]          # S_n
    densities: list[float]          # s_n = S_n / n
    increments: list[float]         # S_{n+1} - S_n along the range
    raw: float                      # s at the largest volume
    increment: float                # last increment, primary estimator
    two_point: float                # (S_last - S_first) / (n_last - n_first)
    limit: float
    method: str

    def to_rows(self) -> list[dict]:
        rows = []
        for i, n in enumerate(self.n_values):
            rows.append(
                {
                    "n": n,
                    "entropy": self.entropies[i],
                    "entropy_per_n": self.densities[i],
                    "increment": self.increments[i - 1] if i > 0 else float("nan"),
                }
            )
        return rows

    def to_dict(self) -> dict:
        return {
            "raw": self.raw,
            "increment": self.increment,
            "two_point": self.two_point,
            "limit": self.limit,
            "method": self.method,
            "rows": self.to_rows(),
        }


def mean_entropy(state: StateModel, n_range) -> MeanEntropyEstimate:
    """Entropy-per-volume sweep with three limit estimators.

    The last increment S_{n+1} - S_n is the primary estimator: it is exact
    for products and converges geometrically for primitive finitely
    correlated states.  The raw ratio and a two-point 1/n fit are recorded
    alongside.
    """
    ns = sorted(int(n) for n in n_range)
    if not ns:
        raise ShapeError("empty volume range")
    entropies = []
    for n in ns:
        dens = state.restrict(n)
        s_n = von_neumann_entropy(dens)
        cap = math.log(dens.algebra.canonical_rank)
        if s_n > cap + 1e-9:
            raise InvariantError(f"entropy {s_n} exceeds log dim {cap} at n={n}")
        entropies.append(s_n)
    densities = [s / n for s, n in zip(entropies, ns)]
    increments = [
        (entropies[i + 1] - entropies[i]) / (ns[i + 1] - ns[i])
        for i in range(len(ns) - 1)
    ]
    raw = densities[-1]
    if len(ns) >= 2:
        increment = increments[-1]
        two_point = (entropies[-1] - entropies[0]) / (ns[-1] - ns[0])
        limit, method = increment, "increment"
    else:
        increment = two_point = raw
        limit, method = raw, "raw"
    return MeanEntropyEstimate(
        ns, entropies, densities, increments, raw, increment, two_point, limit, method
    )


@dataclass
class LambdaTauReport:
    """Scalar value of -(1/n) log D_tau per volume and its limit."""

    n_values: list[int]
    values: list[float]
    scalar_residuals: list[float]
    limit: float

    def to_rows(self) -> list[dict]:
        return [
            {"n": n, "value": v, "scalar_residual": r}
            for n, v, r in zip(self.n_values, self.values, self.scalar_residuals)
        ]


def lambda_tau(model: ChainModel, n_range, tol: float = 1e-12) -> LambdaTauReport:
    """-(1/n) log D_tau projected to a scalar, per volume.

    The scalar residual is the spread of -(1/n) log(weight) across blocks;
    it exceeds the tolerance only for invalid models and then raises.
    """
    ns = sorted(int(n) for n in n_range)
    values, residuals = [], []
    for n in ns:
        alg = model.local_algebra(n)
        per_block = [-math.log(w) / n for w in alg.central_weights]
        val = sum(per_block) / len(per_block)
        res = max(per_block) - min(per_block) if len(per_block) > 1 else 0.0
        if res > tol:
            raise InvariantError(
                f"-(1/n) log D_tau is not scalar at n={n}: spread {res:.3e}"
            )
        values.append(val)
        residuals.append(res)
    if len(ns) >= 2:
        limit = (ns[-1] * values[-1] - ns[-2] * values[-2]) / (ns[-1] - ns[-2])
    else:
        limit = values[-1]
    return LambdaTauReport(ns, values, residuals, limit)


def relative_entropy_to_trace(model: ChainModel, dens: HermitianElement) -> float:
    """S(omega|_n, tau|_n) for a volume-n density, via the central weights."""
    n = model.volume_of_dim(dens.blocks[0].shape[0])
    return relative_entropy(dens, model.local_algebra(n).trace_density())


def subadditivity_check(
    model: ChainModel, state: StateModel, m: int, n: int
) -> float:
    """Slack of the block-subadditivity bound for the relative entropy.

    Checks S(omega|_n, tau|_n) >= floor(n / (m + n0)) S(omega|_m, tau|_m)
    and returns the left side minus the right side; nonnegative up to
    numerical noise for every shift-invariant state.
    """
    n0 = model.commute_dist
    blocks = n // (m + n0)
    big = relative_entropy_to_trace(model, state.restrict(n))
    small = relative_entropy_to_trace(model, state.restrict(m))
    return big - blocks * small
