"""Finite-volume pressure, exact oracles, and the variational inequality.

The pressure of a local observable is the volume limit of
(1/n) log tau(exp(-H_n)) where H_n sums the shifted copies of the
observable.  Two summation conventions are carried side by side: the bulk
sum keeps every copy inside volume n (n - l + 1 terms), the full sum uses n
copies and lives in volume n + l - 1.  Both have the same limit; the
report shows both.

Exact oracles: a one-site observable has constant finite-volume pressure
log(Tr e^{-a} / d); a two-site diagonal observable on the plain chain has
the log Perron eigenvalue of the d x d transfer matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .blockop import HermitianElement, eigendecompose
from .chain import ChainModel
from .entropy import mean_entropy, von_neumann_entropy
from .errors import DomainError, VolumeError
from .states import GibbsBlockState, StateModel
from .typicality import ergodic_average


def _log_tau_exp_minus(h: HermitianElement) -> float:
    """log tau(e^{-h}) via the eigenvalues of h, stably."""
    alg = h.algebra
    total = -math.inf
    for k, be in enumerate(eigendecompose(h).blocks):
        lw = math.log(alg.central_weights[k])
        vals = -be.values + lw
        m = float(vals.max())
        total = _logaddexp(total, m + math.log(float(np.exp(vals - m).sum())))
    return total


def _logaddexp(a: float, b: float) -> float:
    if a == -math.inf:
        return b
    if b == -math.inf:
        return a
    m = max(a, b)
    return m + math.log(math.exp(a - m) + math.exp(b - m))


def bulk_hamiltonian(model: ChainModel, a: HermitianElement, n: int) -> HermitianElement:
    """Sum of the n - l + 1 shifted copies of a inside volume n."""
    l = model.volume_of_dim(a.blocks[0].shape[0])
    if l > n:
        raise VolumeError(f"locality {l} exceeds volume {n}")
    avg = ergodic_average(model, a, n)
    return float(n) * avg


@dataclass
class PressurePoint:
    """Finite-volume pressure in both summation conventions."""

    n: int
    bulk: float
    full: float                    # nan when volume n + l - 1 exceeds the cap

    def to_dict(self) -> dict:
        return {"n": self.n, "bulk": self.bulk, "full": self.full}


def finite_volume_pressure(model: ChainModel, a: HermitianElement, n: int) -> PressurePoint:
    """(1/n) log tau(exp(-H_n)) for both H_n conventions."""
    l = model.volume_of_dim(a.blocks[0].shape[0])
    bulk = _log_tau_exp_minus(bulk_hamiltonian(model, a, n)) / n
    full = math.nan
    if model.dim(n + l - 1) <= model.cap:
        m = n + l - 1
        h = float(m) * ergodic_average(model, a, m)
        full = _log_tau_exp_minus(h) / n
    return PressurePoint(n, bulk, full)


@dataclass
class PressureReport:
    """Pressure sweep with extrapolation and optional oracle comparison."""

    points: list[PressurePoint]
    raw: float
    increment: float
    two_point: float
    limit: float
    oracle: float | None = None
    oracle_gaps: list[float] = field(default_factory=list)

    @property
    def oracle_gap(self) -> float | None:
        return abs(self.limit - self.oracle) if self.oracle is not None else None

    def to_dict(self) -> dict:
        out = {
            "raw": self.raw,
            "increment": self.increment,
            "two_point": self.two_point,
            "limit": self.limit,
            "oracle": self.oracle,
            "oracle_gap": self.oracle_gap,
            "rows": [],
        }
        for i, p in enumerate(self.points):
            row = p.to_dict()
            row["oracle_gap"] = self.oracle_gaps[i] if self.oracle_gaps else float("nan")
            out["rows"].append(row)
        return out


def pressure_limit(
    model: ChainModel, a: HermitianElement, n_range, oracle: float | None = "auto"
) -> PressureReport:
    """Sweep finite-volume pressures and extrapolate the limit.

    The primary estimator is the last increment of log tau(exp(-H_n)) along
    the bulk convention; raw ratio and two-point fit are recorded.  With
    oracle="auto" an exact oracle is attached when one applies.
    """
    ns = sorted(int(n) for n in n_range)
    points = [finite_volume_pressure(model, a, n) for n in ns]
    log_z = [p.n * p.bulk for p in points]
    raw = points[-1].bulk
    if len(ns) >= 2:
        increment = (log_z[-1] - log_z[-2]) / (ns[-1] - ns[-2])
        two_point = (log_z[-1] - log_z[0]) / (ns[-1] - ns[0])
    else:
        increment = two_point = raw
    limit = increment
    if oracle == "auto":
        oracle = oracle_pressure(model, a)
    gaps = [abs(p.bulk - oracle) for p in points] if oracle is not None else []
    return PressureReport(points, raw, increment, two_point, limit, oracle, gaps)


def one_site_pressure_oracle(model: ChainModel, a: HermitianElement) -> float:
    """Exact pressure of a one-site observable: log(Tr e^{-a} / d).

    The shifted copies commute, so the finite-volume pressure equals this
    at every volume."""
    if model.volume_of_dim(a.blocks[0].shape[0]) != 1 or model.window != 1:
        raise DomainError("oracle applies to one-site observables on a plain chain")
    w = np.linalg.eigvalsh((a.blocks[0] + a.blocks[0].conj().T) / 2)
    return float(np.log(np.exp(-w).sum() / model.site_dim))


def transfer_matrix_oracle(model: ChainModel, a: HermitianElement) -> float:
    """Exact pressure of a two-site diagonal observable on the plain chain:
    log of the Perron eigenvalue of M[s, s'] = (1/d) exp(-a(s, s'))."""
    if model.window != 1:
        raise DomainError("transfer oracle applies to window width 1")
    if model.volume_of_dim(a.blocks[0].shape[0]) != 2:
        raise DomainError("transfer oracle applies to two-site observables")
    mat = a.blocks[0]
    diag = np.diagonal(mat)
    if int(np.count_nonzero(mat)) != int(np.count_nonzero(diag)):
        raise DomainError("transfer oracle applies to diagonal observables")
    d = model.site_dim
    m = np.exp(-diag.real.reshape(d, d)) / d
    eigs = np.linalg.eigvals(m)
    perron = float(np.max(eigs.real))
    if perron <= 0:
        raise DomainError("transfer matrix has no positive Perron eigenvalue")
    return math.log(perron)


def oracle_pressure(model: ChainModel, a: HermitianElement) -> float | None:
    """Exact pressure when a closed form applies, else None."""
    try:
        return one_site_pressure_oracle(model, a)
    except DomainError:
        pass
    try:
        return transfer_matrix_oracle(model, a)
    except DomainError:
        return None


@dataclass
class VariationalRecord:
    """One candidate state against one observable."""

    name: str
    mean_entropy: float
    omega_a: float
    gap: float                     # P(a) - (s(omega) - omega(a) - lambda_tau)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "mean_entropy": self.mean_entropy,
            "omega_a": self.omega_a,
            "gap": self.gap,
        }


def variational_inequality(
    model: ChainModel,
    candidates: list[tuple[str, StateModel]],
    a: HermitianElement,
    pressure: float | None = None,
    n_range=None,
    entropy_range=None,
) -> list[VariationalRecord]:
    """Gap of every shift-invariant candidate in the variational bound
    P(a) >= s(omega) - omega(a) - lambda_tau, sorted ascending.

    The pressure is taken from an exact oracle when one applies, otherwise
    extrapolated over n_range."""
    if pressure is None:
        pressure = oracle_pressure(model, a)
        if pressure is None:
            if n_range is None:
                raise DomainError("no oracle applies; provide n_range or pressure")
            pressure = pressure_limit(model, a, n_range, oracle=None).limit
    lam = model.lambda_tau_exact
    if entropy_range is None:
        entropy_range = range(2, min(model.n_max, 8) + 1)
    records = []
    for name, state in candidates:
        if isinstance(state, GibbsBlockState):
            s = state.mean_entropy_exact()
        else:
            s = mean_entropy(state, entropy_range).limit
        omega_a = state.expectation(a)
        gap = pressure - (s - omega_a - lam)
        records.append(VariationalRecord(name, s, omega_a, gap))
    records.sort(key=lambda r: r.gap)
    return records


def product_state_grid(model: ChainModel, points: int) -> list[tuple[str, StateModel]]:
    """Diagonal product states with first weight swept over (0, 1); the
    remaining weight is spread uniformly.  Includes the trace state."""
    from .states import ProductState

    d = model.site_dim
    out = []
    for i in range(points):
        p = (i + 1) / (points + 1)
        diag = [p] + [(1 - p) / (d - 1)] * (d - 1)
        out.append((f"grid_p{p:.4f}", ProductState(model, np.diag(diag))))
    return out


def product_gibbs_candidate(model: ChainModel, a: HermitianElement) -> StateModel:
    """The product state with single-site density e^{-a}/Tr e^{-a}; the
    exact optimiser of the variational bound for one-site observables."""
    from .states import ProductState

    if model.volume_of_dim(a.blocks[0].shape[0]) != 1:
        raise DomainError("product Gibbs candidate needs a one-site observable")
    mat = a.blocks[0]
    w, v = np.linalg.eigh((mat + mat.conj().T) / 2)
    g = (v * np.exp(-w)) @ v.conj().T
    return ProductState(model, g / np.trace(g).real)


@dataclass
class PeriodEntropyRecord:
    """Per-period entropy of a periodic block-product state."""

    n_blocks: int
    shift: int
    ratio: float                   # S(A_{k p}) / k
    increment: float | None        # S(A_{k p}) - S(A_{(k-1) p}); exact
    value: float                   # increment when available, else ratio

    def to_dict(self) -> dict:
        return {
            "n_blocks": self.n_blocks,
            "shift": self.shift,
            "ratio": self.ratio,
            "increment": self.increment,
            "value": self.value,
        }


def period_mean_entropy(
    state: GibbsBlockState, n_blocks: int, shift: int = 0
) -> PeriodEntropyRecord:
    """Entropy per period of the (possibly shifted) periodic product state.

    The one-period increment is exact as soon as two periods fit in the
    cap, because the boundary cut pattern repeats exactly; the plain ratio
    is exact only for the unshifted state."""
    p = state.period
    model = state.model
    if n_blocks < 1:
        raise VolumeError("need at least one period")
    model.require_volume(n_blocks * p)
    s_k = von_neumann_entropy(state.periodic_restrict(n_blocks * p, shift))
    ratio = s_k / n_blocks
    increment = None
    if n_blocks >= 2:
        s_prev = von_neumann_entropy(state.periodic_restrict((n_blocks - 1) * p, shift))
        increment = s_k - s_prev
    return PeriodEntropyRecord(
        n_blocks, shift, ratio, increment, increment if increment is not None else ratio
    )


@dataclass
class GibbsBoundRecord:
    """Finite-block Gibbs lower bound on the mean entropy."""

    block_size: int
    period: int
    locality: int
    norm_a: float
    s_closed: float                # closed form: (S(G) + spacer log d) / p
    s_direct: float                # direct per-period entropy computation
    cross_residual: float
    psi_a: float
    pressure: float
    rhs: float                     # P + lambda + psi(a) - 2 ||a|| (n0 + l) / p
    slack: float                   # s_closed - rhs

    def to_dict(self) -> dict:
        return {
            "block_size": self.block_size,
            "period": self.period,
            "locality": self.locality,
            "norm_a": self.norm_a,
            "s_closed": self.s_closed,
            "s_direct": self.s_direct,
            "cross_residual": self.cross_residual,
            "psi_a": self.psi_a,
            "pressure": self.pressure,
            "rhs": self.rhs,
            "slack": self.slack,
        }


def gibbs_lower_bound(
    model: ChainModel,
    block_size: int,
    a: HermitianElement,
    pressure: float | None = None,
    n_range=None,
) -> GibbsBoundRecord:
    """Evaluate the Gibbs-block lower bound on the mean entropy.

    The shift average of the periodic Gibbs product must satisfy

        s(psi) >= P(a) + lambda_tau + psi(a) - 2 ||a|| (n0 + l) / (m + n0).

    The mean entropy enters through its exact closed form; a direct
    per-period entropy computation cross-checks it.  The slack shrinks as
    the block grows, which is how the variational supremum is approached.
    """
    state = GibbsBlockState(model, block_size, a)
    if pressure is None:
        pressure = oracle_pressure(model, a)
        if pressure is None:
            if n_range is None:
                raise DomainError("no oracle applies; provide n_range or pressure")
            pressure = pressure_limit(model, a, n_range, oracle=None).limit
    p = state.period
    s_closed = state.mean_entropy_exact()

    # Direct route: per-period increments averaged over every shift when
    # two periods fit under the cap, else the unshifted one-period ratio.
    if model.dim(2 * p) <= model.cap:
        vals = [period_mean_entropy(state, 2, shift=i).value for i in range(p)]
        s_direct = sum(vals) / (len(vals) * p)
    else:
        s_direct = period_mean_entropy(state, 1, shift=0).value / p

    psi_a = state.expectation(a)
    norm_a = a.norm()
    lam = model.lambda_tau_exact
    n0 = model.commute_dist
    rhs = pressure + lam + psi_a - 2.0 * norm_a * (n0 + state.locality) / p
    return GibbsBoundRecord(
        block_size=block_size,
        period=p,
        locality=state.locality,
        norm_a=norm_a,
        s_closed=s_closed,
        s_direct=s_direct,
        cross_residual=abs(s_closed - s_direct),
        psi_a=psi_a,
        pressure=pressure,
        rhs=rhs,
        slack=s_closed - rhs,
    )
