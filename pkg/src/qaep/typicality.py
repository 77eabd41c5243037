"""Typical projections and deviation bounds for ergodic chain states.

Everything here is driven by the joint spectrum of the volume-n density
D_omega and the central trace density D_tau: per block, D_tau is a scalar,
so the relative information operator

    R_n = (1/n) (log D_omega - log D_tau)

is diagonal in the eigenbasis of D_omega with eigenvalues
(log beta - log weight)/n.  Kernel directions of D_omega carry the value
-inf: they are excluded from every finite open window and contribute zero
omega-mass to half-line projections.  Projections assembled from this
spectrum commute with D_omega and D_tau by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .blockop import (
    EPS_FLOOR,
    EPS_SPEC,
    EigenDecomposition,
    HermitianElement,
    Interval,
    Projection,
    eigendecompose,
    spectral_projection,
)
from .chain import ChainModel
from .errors import ShapeError, VolumeError
from .states import StateModel


@dataclass
class DeviationParameters:
    """Window and threshold parameters for the deviation suite."""

    delta: float
    delta_prime: float
    t: float | None = None
    epsilon: float | None = None

    def __post_init__(self):
        if self.delta <= 0 or self.delta_prime <= 0:
            raise ShapeError("delta and delta_prime must be positive")
        if self.epsilon is not None:
            ratio = self.delta_prime / (self.delta_prime + self.delta)
            if not ratio < self.epsilon:
                raise ShapeError(
                    f"delta_prime/(delta_prime+delta) = {ratio:.6g} must be < epsilon"
                )


@dataclass
class RelInfoSpectrum:
    """Joint spectral data of (D_omega, D_tau) at one volume.

    Per block: beta are the eigenvalues of D_omega (descending), rel the
    matching eigenvalues of the relative information operator (-inf on the
    kernel of D_omega), log_weight the log of the block's central weight.
    """

    model: ChainModel
    n: int
    eig: EigenDecomposition
    betas: list[np.ndarray]
    rels: list[np.ndarray]
    log_weights: list[float]

    @property
    def algebra(self):
        return self.eig.algebra

    def lambda_window_blocks(self, interval: Interval) -> list[bool]:
        """Which blocks have (1/n) log(weight) inside the interval."""
        return [interval.contains(lw / self.n) for lw in self.log_weights]

    def masks_for(self, interval: Interval, block_filter=None) -> list[np.ndarray]:
        masks = []
        for k, rel in enumerate(self.rels):
            m = interval.mask(rel)
            if block_filter is not None and not block_filter[k]:
                m = np.zeros_like(m)
            masks.append(m)
        return masks

    def omega_mass(self, masks) -> float:
        return float(sum((b[m]).sum() for b, m in zip(self.betas, masks)))

    def tau_mass(self, masks) -> float:
        return float(
            sum(
                math.exp(lw) * int(m.sum())
                for lw, m in zip(self.log_weights, masks)
            )
        )

    def canonical_rank(self, masks) -> int:
        return int(sum(int(m.sum()) for m in masks))

    def eig_extremes(self, masks) -> tuple[float, float]:
        """Min and max eigenvalue of D_omega over the selected directions;
        (nan, nan) when the selection is empty."""
        sel = [b[m] for b, m in zip(self.betas, masks)]
        vals = np.concatenate(sel) if sel else np.array([])
        if vals.size == 0:
            return (math.nan, math.nan)
        return (float(vals.min()), float(vals.max()))

    def weighted_rel_sum(self, masks) -> float:
        """sum beta * rel over the selection, kernel directions excluded
        (the 0 log 0 = 0 convention)."""
        out = 0.0
        for b, r, m in zip(self.betas, self.rels, masks):
            keep = m & np.isfinite(r)
            out += float((b[keep] * r[keep]).sum())
        return out

    def projector(self, masks) -> Projection:
        return self.eig.projector(masks)

    def full_masks(self) -> list[np.ndarray]:
        return [np.ones_like(b, dtype=bool) for b in self.betas]


def rel_info_spectrum(model: ChainModel, state: StateModel, n: int) -> RelInfoSpectrum:
    """Diagonalise D_omega at volume n and attach relative-information data."""
    dens = state.restrict(n)
    eig = eigendecompose(dens)
    betas, rels, log_weights = [], [], []
    for k, be in enumerate(eig.blocks):
        beta = np.clip(be.values, 0.0, None)
        lw = math.log(eig.algebra.central_weights[k])
        rel = np.full(beta.shape, -math.inf)
        support = beta > EPS_FLOOR
        rel[support] = (np.log(beta[support]) - lw) / n
        betas.append(beta)
        rels.append(rel)
        log_weights.append(lw)
    return RelInfoSpectrum(model, n, eig, betas, rels, log_weights)


def relative_information_operator(
    model: ChainModel, state: StateModel, n: int
) -> HermitianElement:
    """R_n = (1/n)(log D_omega - log D_tau) as an element, zero on the
    kernel of D_omega (the support convention of the matrix log)."""
    spec = rel_info_spectrum(model, state, n)
    mats = []
    for be, rel in zip(spec.eig.blocks, spec.rels):
        finite = np.where(np.isfinite(rel), rel, 0.0)
        mats.append(be.apply(finite))
    return HermitianElement(spec.algebra, mats)


def lower_deviation(model: ChainModel, state: StateModel, t: float, n: int) -> float:
    """omega of the spectral projection of R_n onto (-inf, t]."""
    spec = rel_info_spectrum(model, state, n)
    masks = spec.masks_for(Interval.at_most(t))
    return spec.omega_mass(masks)


def ergodic_average(model: ChainModel, a: HermitianElement, n: int) -> HermitianElement:
    """t_n(a) = (1/n) sum of the n - l + 1 shifted copies of a inside
    volume n."""
    l = model.volume_of_dim(a.blocks[0].shape[0])
    if l > n:
        raise VolumeError(f"locality {l} exceeds volume {n}")
    diag = np.diagonal(a.blocks[0])
    if int(np.count_nonzero(a.blocks[0])) == int(np.count_nonzero(diag)):
        if diag.size and float(np.abs(diag.imag).max()) > 1e-8:
            raise ShapeError("diagonal observable has a complex diagonal")
        return _ergodic_average_diagonal(model, diag.real, l, n)
    alg = model.local_algebra(n)
    acc = alg.zero()
    for i in range(n - l + 1):
        acc = acc + model.embed(a, i, n)
    return (1.0 / n) * acc


def _ergodic_average_diagonal(
    model: ChainModel, adiag: np.ndarray, l: int, n: int
) -> HermitianElement:
    """Diagonal fast path: accumulate the shifted diagonals as vectors."""
    d = model.site_dim
    total_sites = model.n_sites(n)
    block_sites = model.n_sites(l)
    acc = np.zeros(d ** total_sites)
    for i in range(n - l + 1):
        v = adiag
        if i > 0:
            v = np.kron(np.ones(d ** i), v)
        right = total_sites - block_sites - i
        if right > 0:
            v = np.kron(v, np.ones(d ** right))
        acc += v
    return HermitianElement(
        model.local_algebra(n), [np.diag(acc / n).astype(complex)]
    )


def window_projection(
    model: ChainModel, state: StateModel, a: HermitianElement, delta: float, n: int
) -> Projection:
    """Spectral projection of the ergodic average onto the open window of
    half-width delta around omega(a)."""
    if delta <= 0:
        raise ShapeError("delta must be positive")
    mean = state.expectation(a)
    avg = ergodic_average(model, a, n)
    return spectral_projection(avg, Interval.open(mean - delta, mean + delta))


@dataclass
class WindowReport:
    """Per-volume record for the ergodic-window projection."""

    n: int
    omega_f: float
    tau_f: float
    log_tau_rate: float            # (1/n) log tau(F); -inf for F = 0
    pressure_bound: float          # P_n(bulk) + omega(a) + delta
    bound_slack: float             # pressure_bound - log_tau_rate

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "omega_f": self.omega_f,
            "tau_f": self.tau_f,
            "log_tau_rate": self.log_tau_rate,
            "pressure_bound": self.pressure_bound,
            "bound_slack": self.bound_slack,
        }


def window_report(
    model: ChainModel,
    state: StateModel,
    a: HermitianElement,
    delta: float,
    n: int,
    pressure_n: float,
) -> WindowReport:
    """Evaluate omega(F_n), tau(F_n) and the finite-volume trace bound
    (1/n) log tau(F_n) <= P_n + omega(a) + delta, which holds exactly
    whenever F_n is nonzero."""
    f = window_projection(model, state, a, delta, n)
    omega_f = state.restrict(n).pair(f)
    tau_f = f.tau()
    rate = math.log(tau_f) / n if tau_f > 0 else -math.inf
    bound = pressure_n + state.expectation(a) + delta
    return WindowReport(n, omega_f, tau_f, rate, bound, bound - rate)


def kyfan_projection(fixed_rank: Projection, dens: HermitianElement) -> Projection:
    """Projection of the same per-block rank as fixed_rank built from the
    top eigenvectors of dens.

    Guarantees, each exact by construction: it commutes with dens, its
    per-block canonical trace equals that of fixed_rank, and its pairing
    with dens dominates that of fixed_rank (the fixed-rank extremal
    property of sums of top eigenvalues).
    """
    fixed_rank.validate()
    fixed_rank._check_same_algebra(dens)
    eig = eigendecompose(dens)
    masks = []
    for k, be in enumerate(eig.blocks):
        r = int(round(float(np.trace(fixed_rank.blocks[k]).real)))
        mask = np.zeros(be.dim, dtype=bool)
        mask[:r] = True               # eigenvalues are descending
        masks.append(mask)
    return eig.projector(masks)


def typicality_windows(
    model: ChainModel, s: float, delta: float
) -> tuple[Interval, Interval]:
    """The two open windows defining the typical projection: one for the
    relative information spectrum, one for (1/n) log D_tau, both of
    half-width delta/3."""
    lam = model.lambda_tau_exact
    center = -s + lam
    rel_window = Interval.open(center - delta / 3, center + delta / 3)
    lam_window = Interval.open(-lam - delta / 3, -lam + delta / 3)
    return rel_window, lam_window


def _typical_masks(
    model: ChainModel, spec: RelInfoSpectrum, s: float, delta: float
) -> tuple[list[np.ndarray], bool]:
    rel_window, lam_window = typicality_windows(model, s, delta)
    block_ok = spec.lambda_window_blocks(lam_window)
    return spec.masks_for(rel_window, block_ok), any(block_ok)


def typical_projection(
    model: ChainModel, state: StateModel, delta: float, n: int, s: float
) -> Projection:
    """The typical projection at volume n: the product of the relative
    information window with the log-trace-density window, both open with
    half-width delta/3.  Commutes with D_omega and D_tau by construction."""
    if delta <= 0:
        raise ShapeError("delta must be positive")
    spec = rel_info_spectrum(model, state, n)
    masks, _ = _typical_masks(model, spec, s, delta)
    return spec.projector(masks)


@dataclass
class TypicalityRow:
    """Per-volume record of the typical-projection diagnostics."""

    n: int
    omega_pn: float
    rank: int
    lower_bound: float             # rank bound e^{n(s - delta)}
    upper_bound: float             # rank bound e^{n(s + delta)}
    eig_min: float
    eig_max: float
    eig_lower: float               # e^{-n(s + delta)}
    eig_upper: float               # e^{-n(s - delta)}
    lambda_window_nonzero: bool
    bounds_ok: bool                # eigenvalue extremes inside their bounds
    rank_ok: bool                  # canonical rank inside its bounds
    omega_pn_finite_s: float       # variant windows centred at s_n
    rank_finite_s: int

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "omega_pn": self.omega_pn,
            "rank": self.rank,
            "lower_bound": self.lower_bound,
            "upper_bound": self.upper_bound,
            "eig_min": self.eig_min,
            "eig_max": self.eig_max,
            "eig_lower": self.eig_lower,
            "eig_upper": self.eig_upper,
            "lambda_window_nonzero": self.lambda_window_nonzero,
            "bounds_ok": self.bounds_ok,
            "rank_ok": self.rank_ok,
            "omega_pn_finite_s": self.omega_pn_finite_s,
            "rank_finite_s": self.rank_finite_s,
        }


@dataclass
class TypicalityReport:
    """Sweep of the typical projection over a volume range.

    The projection mass omega(p_n) is reported as a trend toward 1.  The
    eigenvalue bounds hold at every volume by construction and are asserted
    per row; the rank bounds are marked from the first volume where they
    hold, and `rank_ok_from` requires persistence through the end of the
    range.
    """

    s_used: float
    delta: float
    ergodicity_certified: bool
    ergodicity_detail: str
    rows: list[TypicalityRow] = field(default_factory=list)

    @property
    def rank_ok_from(self) -> int | None:
        ok_flags = [r.rank_ok for r in self.rows]
        for i in range(len(ok_flags)):
            if all(ok_flags[i:]):
                return self.rows[i].n
        return None

    @property
    def omega_increased(self) -> bool:
        return bool(self.rows) and self.rows[-1].omega_pn > self.rows[0].omega_pn

    @property
    def all_bounds_ok(self) -> bool:
        return all(r.bounds_ok for r in self.rows)

    def to_dict(self) -> dict:
        return {
            "s_used": self.s_used,
            "delta": self.delta,
            "ergodicity_certified": self.ergodicity_certified,
            "ergodicity_detail": self.ergodicity_detail,
            "rank_ok_from": self.rank_ok_from,
            "omega_increased": self.omega_increased,
            "all_bounds_ok": self.all_bounds_ok,
            "rows": [r.to_dict() for r in self.rows],
        }


def verify_typicality(
    model: ChainModel,
    state: StateModel,
    delta: float,
    n_range,
    s: float,
) -> TypicalityReport:
    """Sweep the typical-projection diagnostics over a volume range.

    `s` is the mean entropy used to centre the windows (normally the
    extrapolated estimate); a variant recomputed with the finite-volume
    entropy density of each n is recorded in every row.
    """
    cert = state.ergodicity_certificate()
    report = TypicalityReport(s, delta, cert.certified, cert.detail)
    for n in sorted(int(n) for n in n_range):
        spec = rel_info_spectrum(model, state, n)
        masks, lam_ok = _typical_masks(model, spec, s, delta)
        omega_pn = spec.omega_mass(masks)
        rank = spec.canonical_rank(masks)
        eig_min, eig_max = spec.eig_extremes(masks)
        rank_lower = math.exp(n * (s - delta))
        rank_upper = math.exp(n * (s + delta))
        eig_lower = math.exp(-n * (s + delta))
        eig_upper = math.exp(-n * (s - delta))
        empty = rank == 0
        bounds_ok = empty or (
            eig_min >= eig_lower - EPS_SPEC and eig_max <= eig_upper + EPS_SPEC
        )
        rank_ok = rank_lower <= rank <= rank_upper

        # Variant: windows centred at the finite-volume entropy density.
        sup = [np.isfinite(r) for r in spec.rels]
        s_n = -sum(
            float((b[m] * np.log(b[m])).sum()) for b, m in zip(spec.betas, sup)
        ) / n
        masks_fin, _ = _typical_masks(model, spec, s_n, delta)
        report.rows.append(
            TypicalityRow(
                n=n,
                omega_pn=omega_pn,
                rank=rank,
                lower_bound=rank_lower,
                upper_bound=rank_upper,
                eig_min=eig_min,
                eig_max=eig_max,
                eig_lower=eig_lower,
                eig_upper=eig_upper,
                lambda_window_nonzero=lam_ok,
                bounds_ok=bool(bounds_ok),
                rank_ok=bool(rank_ok),
                omega_pn_finite_s=spec.omega_mass(masks_fin),
                rank_finite_s=spec.canonical_rank(masks_fin),
            )
        )
    return report


@dataclass
class UpperDeviationRecord:
    """Finite-volume record of the two-sided deviation argument."""

    n: int
    omega_q_minus: float
    omega_q_plus: float
    q_minus_rel_info: float        # (1/n) omega(Q^- (log D_omega - log D_tau))
    omega_rel_info: float          # omega(R_n)
    chain_residual: float          # exact finite-volume inequality slack
    asymptotic_bound: float        # delta' / (delta' + delta)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "omega_q_minus": self.omega_q_minus,
            "omega_q_plus": self.omega_q_plus,
            "q_minus_rel_info": self.q_minus_rel_info,
            "omega_rel_info": self.omega_rel_info,
            "chain_residual": self.chain_residual,
            "asymptotic_bound": self.asymptotic_bound,
        }


def upper_deviation_argument(
    model: ChainModel,
    state: StateModel,
    delta: float,
    delta_prime: float,
    n: int,
    s: float,
) -> UpperDeviationRecord:
    """Masses of the two deviation projections and the exact finite-volume
    inequality linking them.

    Q^- selects relative-information eigenvalues <= -s + lambda - delta',
    Q^+ those >= -s + lambda + delta.  Splitting omega(R_n) over the three
    spectral regions gives

        omega(R_n) >= low_term + (omega(Q^-) - 1)(s - lambda + delta')
                           + (delta + delta') omega(Q^+)

    exactly at every volume; chain_residual is the left minus the right
    side.  The Q^- relative-information term must tend to zero along
    the volume sweep.
    """
    params = DeviationParameters(delta=delta, delta_prime=delta_prime)
    lam = model.lambda_tau_exact
    spec = rel_info_spectrum(model, state, n)
    lo = -s + lam - params.delta_prime
    hi = -s + lam + params.delta
    minus_masks = spec.masks_for(Interval.at_most(lo))
    plus_masks = spec.masks_for(Interval.at_least(hi))
    omega_minus = spec.omega_mass(minus_masks)
    omega_plus = spec.omega_mass(plus_masks)
    low_term = spec.weighted_rel_sum(minus_masks)
    omega_rel = spec.weighted_rel_sum(spec.full_masks())
    rhs = (
        low_term
        + (omega_minus - 1.0) * (s - lam + params.delta_prime)
        + (params.delta + params.delta_prime) * omega_plus
    )
    return UpperDeviationRecord(
        n=n,
        omega_q_minus=omega_minus,
        omega_q_plus=omega_plus,
        q_minus_rel_info=low_term,
        omega_rel_info=omega_rel,
        chain_residual=omega_rel - rhs,
        asymptotic_bound=params.delta_prime / (params.delta_prime + params.delta),
    )
