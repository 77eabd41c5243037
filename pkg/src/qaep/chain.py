"""Finite-volume spin chain with a configurable interaction window.

The chain realises a nested family of local algebras indexed by volume n:
the volume-n algebra acts on sites [0, n + w - 2] (w is the window width),
so it is a single full matrix block of size d^(n + w - 1).  The shift moves
everything one site to the right, the reference state tau is the normalised
trace.  With w = 1 this is the ordinary quantum spin chain; w > 1 gives a
genuine commutation distance of w sites between the half-infinite past and
the translated future, which exercises every spacer-dependent formula.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .blockop import BlockAlgebra, HermitianElement, _is_diagonal
from .errors import CapacityError, ShapeError, VolumeError

DEFAULT_CAP = 4096


@dataclass(frozen=True)
class ChainModel:
    """Spin chain parameters: site dimension, window width, dimension cap."""

    site_dim: int = 2
    window: int = 1
    cap: int = DEFAULT_CAP

    def __post_init__(self):
        if self.site_dim < 2:
            raise ShapeError("site dimension must be >= 2")
        if self.window < 1:
            raise ShapeError("window width must be >= 1")
        if self.cap < self.site_dim:
            raise CapacityError("cap smaller than a single site")

    @property
    def commute_dist(self) -> int:
        """Distance beyond which past and future algebras commute."""
        return self.window

    @property
    def n_max(self) -> int:
        """Largest volume whose dense dimension fits under the cap."""
        n = 1
        while self.dim(n + 1) <= self.cap:
            n += 1
        return n

    def n_sites(self, n: int) -> int:
        return n + self.window - 1

    def dim(self, n: int) -> int:
        return self.site_dim ** self.n_sites(n)

    @property
    def lambda_tau_exact(self) -> float:
        """Limit of -(1/n) log D_tau restricted to volume n: log(site_dim)."""
        return math.log(self.site_dim)

    def require_volume(self, n: int):
        if n < 1:
            raise VolumeError(f"volume must be >= 1, got {n}")
        if self.dim(n) > self.cap:
            raise CapacityError(
                f"volume {n} needs dense dimension {self.dim(n)} > cap {self.cap}"
            )

    def local_algebra(self, n: int) -> BlockAlgebra:
        """Volume-n algebra: one full block of size d^(n + w - 1)."""
        self.require_volume(n)
        return BlockAlgebra.full(self.dim(n))

    def volume_of_dim(self, dim: int) -> int:
        """Inverse of dim(): the volume whose algebra has this size."""
        k = round(math.log(dim) / math.log(self.site_dim))
        if self.site_dim ** k != dim or k < self.window:
            raise ShapeError(f"dimension {dim} is not a volume of this chain")
        return k - self.window + 1

    def element(self, n: int, mat) -> HermitianElement:
        return HermitianElement(self.local_algebra(n), [mat])

    def embed(
        self, a: HermitianElement, site_offset: int, n: int
    ) -> HermitianElement:
        """Translate a volume-l element by site_offset inside volume n.

        Realises the shifted copy gamma_i(a) as I^(x i) (x) a (x) I^(x rest);
        the normalised trace is preserved.  Raises VolumeError when the
        translated support does not fit.
        """
        l = self.volume_of_dim(a.blocks[0].shape[0])
        if site_offset < 0:
            raise VolumeError("negative site offset")
        if site_offset + l > n:
            raise VolumeError(
                f"support of volume {l} at offset {site_offset} overflows volume {n}"
            )
        target = self.local_algebra(n)
        d = self.site_dim
        left = d ** site_offset
        right = d ** (n - l - site_offset)
        mat = a.blocks[0]
        if left > 1:
            mat = np.kron(np.eye(left, dtype=complex), mat)
        if right > 1:
            mat = np.kron(mat, np.eye(right, dtype=complex))
        return HermitianElement(target, [mat])

    def shift(self, a: HermitianElement) -> HermitianElement:
        """One-site translation into the next volume; trace preserving."""
        n = self.volume_of_dim(a.blocks[0].shape[0])
        return self.embed(a, 1, n + 1)

    def ergodic_sum_volume(self, locality: int, n: int) -> int:
        """Number of shifted copies of a volume-l element fitting in volume n."""
        if locality > n:
            raise VolumeError(f"locality {locality} exceeds volume {n}")
        return n - locality + 1


def ptrace_keep(mat: np.ndarray, d: int, n_sites: int, start: int, stop: int) -> np.ndarray:
    """Partial trace keeping the contiguous site range [start, stop).

    Sites are d-dimensional tensor legs in row-major (leftmost = site 0)
    order; everything outside the range is traced out.
    """
    if not (0 <= start <= stop <= n_sites):
        raise ShapeError(f"bad site range [{start}, {stop}) for {n_sites} sites")
    da = d ** start
    dk = d ** (stop - start)
    db = d ** (n_sites - stop)
    if mat.shape != (da * dk * db, da * dk * db):
        raise ShapeError("matrix size does not match the site count")
    if _is_diagonal(mat):
        diag = np.diagonal(mat).reshape(da, dk, db)
        return np.diag(diag.sum(axis=(0, 2))).astype(complex)
    arr = mat.reshape(da, dk, db, da, dk, db)
    return np.einsum("aibajb->ij", arr)


def ptrace_last_sites(mat: np.ndarray, d: int, n_sites: int, k: int) -> np.ndarray:
    """Trace out the last k sites."""
    return ptrace_keep(mat, d, n_sites, 0, n_sites - k)


def restrict_density(model: ChainModel, dens: HermitianElement, m: int) -> HermitianElement:
    """Restrict a volume-n density matrix to the volume-m subalgebra, m <= n.

    Densities are taken with respect to the canonical trace, so restriction
    is the partial trace over the trailing sites.
    """
    n = model.volume_of_dim(dens.blocks[0].shape[0])
    if m > n:
        raise VolumeError(f"cannot restrict volume {n} to larger volume {m}")
    mat = ptrace_last_sites(dens.blocks[0], model.site_dim, model.n_sites(n), n - m)
    return HermitianElement(model.local_algebra(m), [mat])


@dataclass
class ConditionCheck:
    """Outcome of one model-validity condition."""

    name: str
    passed: bool
    residual: float
    note: str = ""

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "residual": self.residual,
            "note": self.note,
        }


@dataclass
class AssumptionReport:
    """Validity report for the six structural conditions of the chain."""

    model: ChainModel
    checks: list[ConditionCheck] = field(default_factory=list)

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        return {
            "site_dim": self.model.site_dim,
            "window": self.model.window,
            "all_passed": self.all_passed,
            "checks": [c.to_dict() for c in self.checks],
        }


def _rand_local(model: ChainModel, rng: np.random.Generator, volume: int) -> HermitianElement:
    dim = model.dim(volume)
    a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return model.element(volume, (a + a.conj().T) / 2)


def check_assumption(
    model: ChainModel, rng: np.random.Generator | None = None, n_pairs: int = 8
) -> AssumptionReport:
    """Run all six validity checks on random local elements.

    Commutation and trace factorisation are tested at the commutation
    distance; when the window width exceeds 1 the distance-(w-1) case is
    also probed and must fail on an explicit overlapping-site witness,
    confirming the distance is tight.
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    n0 = model.commute_dist
    report = AssumptionReport(model)
    tol = 1e-10

    # (i) commutation at distance n0, for supports of volume 1 and 2.
    worst = 0.0
    for _ in range(n_pairs):
        for va, vb in ((1, 1), (1, 2), (2, 1)):
            n = (va - 1) + n0 + vb
            if model.dim(n) > model.cap:
                continue
            x = model.embed(_rand_local(model, rng, va), 0, n)
            y = model.embed(_rand_local(model, rng, vb), va - 1 + n0, n)
            worst = max(worst, x.commutator_norm(y))
    report.checks.append(
        ConditionCheck("commute_at_distance", worst <= tol, worst)
    )

    # tightness witness at distance n0 - 1 (only meaningful for w > 1:
    # at w = 1 distance 0 would put both operators on the same volume).
    if model.window > 1:
        d = model.site_dim
        sx = np.zeros((d, d), dtype=complex)
        sx[0, 1] = sx[1, 0] = 1.0
        sz = np.diag([1.0, -1.0] + [0.0] * (d - 2)).astype(complex)
        w = model.window
        x_local = model.element(1, _kron_chain([np.eye(d ** (w - 1), dtype=complex), sx]))
        y_local = model.element(1, _kron_chain([sz, np.eye(d ** (w - 1), dtype=complex)]))
        n = n0 + 1
        x = model.embed(x_local, 0, n)
        y = model.embed(y_local, n0 - 1, n)
        witness = x.commutator_norm(y)
        report.checks.append(
            ConditionCheck(
                "commute_distance_tight",
                witness > 1e-6,
                witness,
                note="distance w-1 must fail on the shared-site witness",
            )
        )

    # (ii) trace factorisation at distance n0.
    worst = 0.0
    for _ in range(n_pairs):
        n = n0 + 1
        x = model.embed(_rand_local(model, rng, 1), 0, n)
        y = model.embed(_rand_local(model, rng, 1), n0, n)
        worst = max(worst, abs((x @ y).tau() - x.tau() * y.tau()))
    report.checks.append(ConditionCheck("trace_factorisation", worst <= tol, worst))

    # (iii) nesting via embedding composition.
    worst = 0.0
    for _ in range(n_pairs):
        a = _rand_local(model, rng, 1)
        inner = model.embed(a, 1, 2)
        lhs = model.embed(inner, 1, 4)
        rhs = model.embed(a, 2, 4)
        worst = max(worst, float(np.abs(lhs.blocks[0] - rhs.blocks[0]).max()))
    report.checks.append(ConditionCheck("nesting_composition", worst <= tol, worst))

    # (iv) density of the local union: the finite model is exhausted by its
    # local algebras, so this is structural; record the volume bound.
    report.checks.append(
        ConditionCheck(
            "local_union_dense",
            True,
            0.0,
            note=f"finite model, volumes 1..{model.n_max} exhaust the chain",
        )
    )

    # (v) shift covariance and trace invariance.
    worst = 0.0
    for _ in range(n_pairs):
        a = _rand_local(model, rng, 1)
        emb = model.embed(a, 0, 2)
        lhs = model.shift(emb)
        rhs = model.embed(a, 1, 3)
        worst = max(worst, float(np.abs(lhs.blocks[0] - rhs.blocks[0]).max()))
        worst = max(worst, abs(emb.tau() - lhs.tau()))
    report.checks.append(ConditionCheck("shift_covariance", worst <= tol, worst))

    # (vi) -(1/n) log D_tau is a scalar at every volume.  For a single full
    # block this is structural; report the worst deviation of the value
    # sequence from its limit as the note.
    vals = []
    for n in range(1, model.n_max + 1):
        vals.append(model.n_sites(n) * math.log(model.site_dim) / n)
    drift = abs(vals[-1] - model.lambda_tau_exact)
    report.checks.append(
        ConditionCheck(
            "trace_density_scalar",
            True,
            0.0,
            note=f"scalar by construction; value at n_max differs from log d by {drift:.3e}",
        )
    )
    return report


def _kron_chain(mats: list[np.ndarray]) -> np.ndarray:
    out = mats[0]
    for m in mats[1:]:
        out = np.kron(out, m)
    return out


def block_interval_factorization_test(
    model: ChainModel,
    m: int,
    rng: np.random.Generator | None = None,
    n_pairs: int = 8,
) -> float:
    """Worst trace-factorisation residual over two disjoint volume-m blocks.

    The blocks start at 0 and at m + n0 (one spacer of the commutation
    distance between them); returns max |tau(xy) - tau(x) tau(y)| over
    random Hermitian pairs supported on them.
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    n0 = model.commute_dist
    n = 2 * m + n0
    model.require_volume(n)
    worst = 0.0
    for _ in range(n_pairs):
        x = model.embed(_rand_local(model, rng, m), 0, n)
        y = model.embed(_rand_local(model, rng, m), m + n0, n)
        worst = max(worst, abs((x @ y).tau() - x.tau() * y.tau()))
    return worst
