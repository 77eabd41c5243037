"""Classical probability oracles for the diagonal test states.

Everything here is elementary combinatorics over path weights: binomial
sums for i.i.d. measures, exhaustive path enumeration for Markov measures.
No operator machinery is imported; these computations stand on their own
so they can certify the spectral pipeline independently.

The window membership rule is re-implemented locally with the same
published boundary tolerance (1e-12): a value within tolerance of an
endpoint is classified by the endpoint flag alone.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

_EPS = 1e-12


def _in_open(x: float, lo: float, hi: float) -> bool:
    if abs(x - lo) <= _EPS or abs(x - hi) <= _EPS:
        return False
    return lo < x < hi


def _at_most(x: float, t: float) -> bool:
    if abs(x - t) <= _EPS:
        return True
    return x < t


def _at_least(x: float, t: float) -> bool:
    if abs(x - t) <= _EPS:
        return True
    return x > t


@dataclass
class ClassicalAepRow:
    """Typical-set data computed from a classical measure."""

    n: int
    omega: float
    rank: int
    eig_min: float
    eig_max: float

    def close_to(self, omega: float, rank: int, eig_min: float, eig_max: float,
                 tol: float = 1e-10) -> bool:
        if self.rank != rank:
            return False
        if abs(self.omega - omega) > tol:
            return False
        if self.rank == 0:
            return True
        return abs(self.eig_min - eig_min) <= tol and abs(self.eig_max - eig_max) <= tol


def binomial_classes(n: int, p: float):
    """(count, probability-per-string) for each number k of p-symbols."""
    q = 1.0 - p
    for k in range(n + 1):
        yield math.comb(n, k), p ** k * q ** (n - k)


def binomial_aep_row(n: int, p: float, s: float, delta: float,
                     lam: float = math.log(2.0)) -> ClassicalAepRow:
    """Typical-set row for the i.i.d. (p, 1-p) measure on n binary sites.

    Selection matches the two-window construction: the per-string rate
    log(prob)/n + lam must fall in the open window of half-width delta/3
    around lam - s, and the flat-measure rate -lam must fall in the open
    window of half-width delta/3 around -lam (always true here).
    """
    if not _in_open(-lam, -lam - delta / 3, -lam + delta / 3):
        return ClassicalAepRow(n, 0.0, 0, math.nan, math.nan)
    lo, hi = -s + lam - delta / 3, -s + lam + delta / 3
    omega, rank = 0.0, 0
    emin, emax = math.inf, -math.inf
    for count, prob in binomial_classes(n, p):
        r = math.log(prob) / n + lam
        if _in_open(r, lo, hi):
            omega += count * prob
            rank += count
            emin = min(emin, prob)
            emax = max(emax, prob)
    if rank == 0:
        return ClassicalAepRow(n, 0.0, 0, math.nan, math.nan)
    return ClassicalAepRow(n, omega, rank, emin, emax)


def binomial_lower_deviation(n: int, p: float, t: float,
                             lam: float = math.log(2.0)) -> float:
    """Mass of strings whose rate log(prob)/n + lam is at most t."""
    total = 0.0
    for count, prob in binomial_classes(n, p):
        if _at_most(math.log(prob) / n + lam, t):
            total += count * prob
    return total


def binomial_deviation_masses(n: int, p: float, lo: float, hi: float,
                              lam: float = math.log(2.0)) -> tuple[float, float]:
    """Masses of the lower (rate <= lo) and upper (rate >= hi) tails."""
    low = up = 0.0
    for count, prob in binomial_classes(n, p):
        r = math.log(prob) / n + lam
        if _at_most(r, lo):
            low += count * prob
        if _at_least(r, hi):
            up += count * prob
    return low, up


def binomial_window_masses(n: int, a0: float, a1: float, p: float,
                           mean: float, delta: float) -> tuple[float, float]:
    """(omega(F), tau(F)) for the ergodic-average window of a one-site
    diagonal observable diag(a0, a1) under the i.i.d. (p, 1-p) measure."""
    omega = tau = 0.0
    q = 1.0 - p
    for k in range(n + 1):
        avg = (k * a0 + (n - k) * a1) / n
        if _in_open(avg, mean - delta, mean + delta):
            omega += math.comb(n, k) * p ** k * q ** (n - k)
            tau += math.comb(n, k) / 2.0 ** n
    return omega, tau


def markov_stationary(transition) -> np.ndarray:
    """Stationary distribution of a row-stochastic matrix."""
    T = np.asarray(transition, dtype=float)
    w, v = np.linalg.eig(T.T)
    idx = int(np.argmin(np.abs(w - 1.0)))
    pi = np.abs(v[:, idx].real)
    return pi / pi.sum()


def markov_entropy_rate(transition) -> float:
    """Entropy rate of the stationary chain, - sum pi_i T_ij log T_ij."""
    T = np.asarray(transition, dtype=float)
    pi = markov_stationary(T)
    out = 0.0
    for i in range(T.shape[0]):
        for j in range(T.shape[1]):
            if T[i, j] > 0:
                out -= pi[i] * T[i, j] * math.log(T[i, j])
    return out


def markov_path_weights(n: int, transition) -> np.ndarray:
    """Stationary path-measure weights over all d^n paths, in the row-major
    site order used by the operator side."""
    T = np.asarray(transition, dtype=float)
    d = T.shape[0]
    pi = markov_stationary(T)
    out = np.empty(d ** n)
    for idx, path in enumerate(itertools.product(range(d), repeat=n)):
        w = pi[path[0]]
        for a, b in zip(path, path[1:]):
            w *= T[a, b]
        out[idx] = w
    return out


def markov_aep_row(n: int, transition, s: float, delta: float,
                   lam: float | None = None) -> ClassicalAepRow:
    """Typical-set row for the stationary Markov path measure."""
    T = np.asarray(transition, dtype=float)
    d = T.shape[0]
    lam = math.log(d) if lam is None else lam
    if not _in_open(-lam, -lam - delta / 3, -lam + delta / 3):
        return ClassicalAepRow(n, 0.0, 0, math.nan, math.nan)
    lo, hi = -s + lam - delta / 3, -s + lam + delta / 3
    omega, rank = 0.0, 0
    emin, emax = math.inf, -math.inf
    for prob in markov_path_weights(n, T):
        if prob <= 0.0:
            continue
        r = math.log(prob) / n + lam
        if _in_open(r, lo, hi):
            omega += prob
            rank += 1
            emin = min(emin, prob)
            emax = max(emax, prob)
    if rank == 0:
        return ClassicalAepRow(n, 0.0, 0, math.nan, math.nan)
    return ClassicalAepRow(n, omega, rank, emin, emax)


def markov_lower_deviation(n: int, transition, t: float,
                           lam: float | None = None) -> float:
    """Mass of paths whose rate log(prob)/n + lam is at most t."""
    T = np.asarray(transition, dtype=float)
    lam = math.log(T.shape[0]) if lam is None else lam
    total = 0.0
    for prob in markov_path_weights(n, T):
        if prob > 0.0 and _at_most(math.log(prob) / n + lam, t):
            total += prob
    return total


def markov_block_entropy(n: int, transition) -> float:
    """Exact entropy of the n-site marginal: H(pi) + (n - 1) h."""
    T = np.asarray(transition, dtype=float)
    pi = markov_stationary(T)
    h_pi = float(-(pi[pi > 0] * np.log(pi[pi > 0])).sum())
    return h_pi + (n - 1) * markov_entropy_rate(T)
