"""Shift-invariant state models producing finite-volume density matrices.

Three families cover the test spectrum:

* ProductState: i.i.d. over sites, always ergodic.
* FinitelyCorrelatedState: generated by a completely positive transfer map
  on a finite bond space (Kraus form); ergodicity is certified through the
  primitivity gap of the transfer map.
* GibbsBlockState: the shift average of a periodic product of finite-volume
  Gibbs densities separated by one trace-state spacer site per period; the
  near-optimiser family for the variational inequality.

Restrictions are densities with respect to the canonical trace on the
volume-n algebra (n + w - 1 sites for window width w) and are marginal
consistent across volumes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .blockop import HermitianElement, matrix_exp
from .chain import ChainModel, ptrace_keep
from .errors import DomainError, PositivityError, ShapeError, VolumeError


@dataclass
class ErgodicityCertificate:
    certified: bool
    gap: float
    detail: str = ""

    def to_dict(self) -> dict:
        return {"certified": self.certified, "gap": self.gap, "detail": self.detail}


class StateModel:
    """Common surface: restrict / expectation over a fixed chain."""

    model: ChainModel

    def restrict(self, n: int) -> HermitianElement:
        raise NotImplementedError

    def density_matrix(self, n: int) -> np.ndarray:
        return self.restrict(n).blocks[0]

    def expectation(self, a: HermitianElement, offset: int = 0) -> float:
        """omega(gamma_offset(a)) computed against the smallest covering volume."""
        l = self.model.volume_of_dim(a.blocks[0].shape[0])
        n = offset + l
        dens = self.restrict(n)
        return dens.pair(self.model.embed(a, offset, n))

    def ergodicity_certificate(self) -> ErgodicityCertificate:
        raise NotImplementedError

    def marginal_residual(self, n: int) -> float:
        """Consistency of restrict(n+1) with restrict(n) under the last-site
        partial trace."""
        big = self.density_matrix(n + 1)
        d = self.model.site_dim
        sites = self.model.n_sites(n + 1)
        reduced = ptrace_keep(big, d, sites, 0, sites - 1)
        return float(np.abs(reduced - self.density_matrix(n)).max())


def _check_density(mat: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    mat = np.asarray(mat, dtype=complex)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ShapeError("density matrix must be square")
    if float(np.abs(mat - mat.conj().T).max()) > tol:
        raise ShapeError("density matrix not Hermitian")
    w = np.linalg.eigvalsh((mat + mat.conj().T) / 2)
    if float(w.min()) < -tol:
        raise PositivityError(f"density matrix has eigenvalue {w.min():.3e}")
    tr = float(np.trace(mat).real)
    if abs(tr - 1.0) > 1e-8:
        raise ShapeError(f"density matrix trace {tr!r} != 1")
    return mat / tr


def _kron_power_diag(diag: np.ndarray, k: int) -> np.ndarray:
    out = np.ones(1)
    for _ in range(k):
        out = np.outer(out, diag).ravel()
    return out


class ProductState(StateModel):
    """I.i.d. product of one single-site density matrix."""

    def __init__(self, model: ChainModel, phi):
        self.model = model
        self.phi = _check_density(phi)
        if self.phi.shape[0] != model.site_dim:
            raise ShapeError("single-site density does not match the site dimension")
        self._diag = (
            np.diagonal(self.phi).real.copy()
            if int(np.count_nonzero(self.phi))
            == int(np.count_nonzero(np.diagonal(self.phi)))
            else None
        )

    def restrict(self, n: int) -> HermitianElement:
        self.model.require_volume(n)
        k = self.model.n_sites(n)
        if self._diag is not None:
            mat = np.diag(_kron_power_diag(self._diag, k)).astype(complex)
        else:
            mat = self.phi
            for _ in range(k - 1):
                mat = np.kron(mat, self.phi)
        return HermitianElement(self.model.local_algebra(n), [mat])

    def site_entropy(self) -> float:
        """Exact single-site entropy in nats."""
        w = np.linalg.eigvalsh(self.phi)
        w = w[w > 1e-15]
        return float(-(w * np.log(w)).sum())

    def ergodicity_certificate(self) -> ErgodicityCertificate:
        return ErgodicityCertificate(True, 1.0, "product state, mixing")


class MixtureState(StateModel):
    """Convex mixture of state models over the same chain."""

    def __init__(self, components: list[StateModel], weights: list[float]):
        if len(components) != len(weights) or not components:
            raise ShapeError("one weight per component required")
        if any(w < 0 for w in weights) or abs(sum(weights) - 1.0) > 1e-12:
            raise ShapeError("weights must be a probability vector")
        models = {id(c.model) for c in components}
        if len(models) != 1:
            raise ShapeError("components must share one chain model")
        self.model = components[0].model
        self.components = components
        self.weights = [float(w) for w in weights]

    def restrict(self, n: int) -> HermitianElement:
        mats = [c.density_matrix(n) for c in self.components]
        mat = sum(w * m for w, m in zip(self.weights, mats))
        return HermitianElement(self.model.local_algebra(n), [mat])

    def ergodicity_certificate(self) -> ErgodicityCertificate:
        return ErgodicityCertificate(False, 0.0, "proper mixtures are not ergodic")


def _cesaro_fixed_point(mat: np.ndarray, seed: np.ndarray, iters: int = 64) -> np.ndarray:
    """Approximate fixed vector of a spectral-radius-1 matrix, then project
    onto the exact eigenvalue-1 eigenspace for a machine-precision residual."""
    avg = np.zeros_like(seed, dtype=complex)
    v = seed.astype(complex)
    for _ in range(iters):
        avg += v
        v = mat @ v
    avg /= iters
    w, vecs = np.linalg.eig(mat)
    sel = np.abs(w - 1.0) < 1e-8
    if not sel.any():
        raise DomainError("transfer map has no eigenvalue-1 fixed point")
    basis = vecs[:, sel]
    coef, *_ = np.linalg.lstsq(basis, avg, rcond=None)
    return basis @ coef


def _fixed_point_density(mat: np.ndarray, b: int, seed_mat: np.ndarray) -> np.ndarray:
    """Hermitian positive trace-one fixed point of a bond-space map."""
    v = _cesaro_fixed_point(mat, seed_mat.reshape(-1))
    rho = v.reshape(b, b)
    tr = np.trace(rho)
    if abs(tr) < 1e-12:
        raise DomainError("transfer fixed point has vanishing trace")
    rho = rho * (tr.conjugate() / abs(tr))
    rho = (rho + rho.conj().T) / 2
    w = np.linalg.eigvalsh(rho)
    if float(w.min()) < -1e-8 * max(1.0, float(w.max())):
        raise PositivityError("transfer fixed point is not positive")
    return rho / np.trace(rho).real


class FinitelyCorrelatedState(StateModel):
    """Translation-invariant state generated by a bond-space transfer map.

    The raw Kraus tensors K[alpha, s] (one b x b matrix per Kraus index and
    physical index) are normalised on construction: the Heisenberg transfer
    map  B -> sum K* B K  is rescaled to spectral radius 1 and gauged with
    its positive fixed point so that it becomes unital; the Schroedinger
    fixed point then supplies the boundary density.  The primitivity gap of
    the normalised map is the ergodicity certificate.
    """

    def __init__(self, model: ChainModel, kraus):
        self.model = model
        K = np.asarray(kraus, dtype=complex)
        if K.ndim != 4 or K.shape[1] != model.site_dim or K.shape[2] != K.shape[3]:
            raise ShapeError(
                "kraus tensors must have shape (n_kraus, site_dim, bond, bond)"
            )
        self.bond_dim = int(K.shape[2])
        b = self.bond_dim

        # Heisenberg transfer matrix on row-major vec(B): sum K* (x) K^T.
        heis = np.zeros((b * b, b * b), dtype=complex)
        for alpha in range(K.shape[0]):
            for s in range(K.shape[1]):
                a = K[alpha, s]
                heis += np.kron(a.conj().T, a.T)
        radius = float(np.abs(np.linalg.eigvals(heis)).max())
        if radius <= 1e-14:
            raise DomainError("transfer map is zero")
        K = K / math.sqrt(radius)
        heis /= radius

        e = _fixed_point_density(heis, b, np.eye(b))
        w_e = np.linalg.eigvalsh(e)
        if float(w_e.min()) < 1e-12:
            raise DomainError("transfer fixed point not faithful; cannot gauge")
        x = _herm_sqrt(e)
        x_inv = np.linalg.inv(x)
        self.kraus = np.einsum("ab,qsbc,cd->qsad", x, K, x_inv)

        schro = np.zeros((b * b, b * b), dtype=complex)
        for alpha in range(self.kraus.shape[0]):
            for s in range(self.kraus.shape[1]):
                a = self.kraus[alpha, s]
                schro += np.kron(a, a.conj())
        self.sigma = _fixed_point_density(schro, b, np.eye(b) / b)

        mods = np.sort(np.abs(np.linalg.eigvals(schro)))[::-1]
        peripheral = int((mods > 1.0 - 1e-9).sum())
        self.gap = float(1.0 - mods[1]) if len(mods) > 1 else 1.0
        self._certified = peripheral == 1 and self.gap > 1e-9
        self._detail = (
            f"primitivity gap {self.gap:.6g}"
            if self._certified
            else f"{peripheral} peripheral eigenvalues, gap {self.gap:.3g}"
        )

    @classmethod
    def from_markov_chain(cls, model: ChainModel, transition) -> "FinitelyCorrelatedState":
        """Classical stationary Markov measure as a finitely correlated state.

        transition[i, j] is the probability of moving from symbol i to j;
        the construction stores the previous symbol in the bond space, so
        finite-volume densities are diagonal with path-measure weights.
        """
        T = np.asarray(transition, dtype=float)
        d = model.site_dim
        if T.shape != (d, d) or (T < -1e-12).any():
            raise ShapeError("transition matrix must be nonnegative d x d")
        if np.abs(T.sum(axis=1) - 1.0).max() > 1e-10:
            raise ShapeError("transition matrix rows must sum to 1")
        kraus = np.zeros((d, d, d, d), dtype=complex)
        for j in range(d):
            for s in range(d):
                kraus[j, s, s, j] = math.sqrt(T[j, s])
        return cls(model, kraus)

    def restrict(self, n: int) -> HermitianElement:
        self.model.require_volume(n)
        sites = self.model.n_sites(n)
        K = self.kraus
        b = self.bond_dim
        # M[i, j] = sum over Kraus paths of (path_i) sigma (path_j)^*,
        # one site appended per step; the final site is contracted with the
        # bond trace directly so the largest intermediate stays one site
        # short of the output dimension.
        M = np.einsum("qsax,xy,qtcy->stac", K, self.sigma, K.conj(), optimize=True)
        M = M.reshape(self.model.site_dim, self.model.site_dim, b, b)
        for _ in range(sites - 2):
            M = np.einsum("qsax,ijxy,qtcy->isjtac", K, M, K.conj(), optimize=True)
            dd = M.shape[0] * M.shape[1]
            M = M.reshape(dd, dd, b, b)
        if sites == 1:
            mat = np.einsum("staa->st", M)
        else:
            mat = np.einsum("qsax,ijxy,qtay->isjt", K, M, K.conj(), optimize=True)
            dd = mat.shape[0] * mat.shape[1]
            mat = mat.reshape(dd, dd)
        mat = (mat + mat.conj().T) / 2
        mat /= np.trace(mat).real
        return HermitianElement(self.model.local_algebra(n), [mat])

    def ergodicity_certificate(self) -> ErgodicityCertificate:
        return ErgodicityCertificate(self._certified, self.gap, self._detail)


def _herm_sqrt(mat: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(mat)
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ v.conj().T


class GibbsBlockState(StateModel):
    """Shift average of a periodic product of finite-volume Gibbs blocks.

    The underlying periodic state puts the Gibbs density of the summed
    shifted observable on each length-m block and the trace state on the
    single spacer site closing each period of m + n0 algebra units; the
    shift average over one period is translation invariant.
    """

    def __init__(self, model: ChainModel, block_size: int, observable: HermitianElement):
        self.model = model
        self.block_size = int(block_size)
        self.observable = observable
        self.locality = model.volume_of_dim(observable.blocks[0].shape[0])
        if self.locality > self.block_size:
            raise VolumeError("observable does not fit inside one block")
        self.period = self.block_size + model.commute_dist
        self.block_sites = model.n_sites(self.block_size)
        self.spacer_sites = self.period - self.block_sites

        alg_m = model.local_algebra(self.block_size)
        h = alg_m.zero()
        for i in range(self.block_size - self.locality + 1):
            h = h + model.embed(observable, i, self.block_size)
        g = matrix_exp(-1.0 * h)
        self.block_density = g.blocks[0] / np.trace(g.blocks[0]).real

    def block_entropy(self) -> float:
        """Entropy of one Gibbs block in nats."""
        w = np.linalg.eigvalsh(self.block_density)
        w = w[w > 1e-15]
        return float(-(w * np.log(w)).sum())

    def mean_entropy_exact(self) -> float:
        """Per-unit mean entropy of the shift average: the per-period
        entropy (block plus spacer sites) divided by the period."""
        spacer = self.spacer_sites * math.log(self.model.site_dim)
        return (self.block_entropy() + spacer) / self.period

    def periodic_density_on_sites(self, start: int, stop: int) -> np.ndarray:
        """Density of the periodic product state on absolute sites
        [start, stop); boundary blocks are partial traced exactly."""
        if stop <= start:
            raise ShapeError("empty site range")
        d = self.model.site_dim
        p = self.period
        bw = self.block_sites
        factors = []
        j0 = start // p
        j1 = (stop - 1) // p
        for j in range(j0, j1 + 1):
            blk_lo, blk_hi = j * p, j * p + bw
            lo, hi = max(blk_lo, start), min(blk_hi, stop)
            if lo < hi:
                if lo == blk_lo and hi == blk_hi:
                    factors.append(self.block_density)
                else:
                    factors.append(
                        ptrace_keep(self.block_density, d, bw, lo - blk_lo, hi - blk_lo)
                    )
            for site in range(blk_hi, (j + 1) * p):
                if start <= site < stop:
                    factors.append(np.eye(d, dtype=complex) / d)
        out = factors[0]
        for f in factors[1:]:
            out = np.kron(out, f)
        return out

    def restrict(self, n: int) -> HermitianElement:
        """Density of the shift-averaged state: the mean of the periodic
        density over one period of window placements."""
        self.model.require_volume(n)
        sites = self.model.n_sites(n)
        mat = sum(
            self.periodic_density_on_sites(i, i + sites) for i in range(self.period)
        ) / self.period
        return HermitianElement(self.model.local_algebra(n), [mat])

    def periodic_restrict(self, n: int, offset: int = 0) -> HermitianElement:
        """Density of the unaveraged periodic state shifted by offset."""
        self.model.require_volume(n)
        sites = self.model.n_sites(n)
        mat = self.periodic_density_on_sites(offset, offset + sites)
        return HermitianElement(self.model.local_algebra(n), [mat])

    def ergodicity_certificate(self) -> ErgodicityCertificate:
        return ErgodicityCertificate(
            False, 0.0, "period average; no primitivity certificate"
        )
