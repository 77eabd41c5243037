import math

import numpy as np
import pytest

from qaep.oracles import (
    binomial_aep_row,
    binomial_classes,
    binomial_lower_deviation,
    binomial_window_masses,
    markov_block_entropy,
    markov_entropy_rate,
    markov_path_weights,
    markov_stationary,
)

T_SYM = [[0.9, 0.1], [0.1, 0.9]]
T_ASYM = [[0.8, 0.2], [0.3, 0.7]]


class TestBinomial:
    def test_classes_sum_to_one(self):
        total = sum(c * p for c, p in binomial_classes(10, 0.3))
        assert total == pytest.approx(1.0, abs=1e-12)

    def test_aep_row_small_case_by_hand(self):
        # n = 7, p = 0.9, delta = 0.3: only the one-flip class is selected
        s = -(0.9 * math.log(0.9) + 0.1 * math.log(0.1))
        row = binomial_aep_row(7, 0.9, s, 0.3)
        assert row.rank == 7
        assert row.omega == pytest.approx(7 * 0.9 ** 6 * 0.1, abs=1e-14)
        assert row.eig_min == row.eig_max == pytest.approx(0.9 ** 6 * 0.1)

    def test_lower_deviation_complement(self):
        # t above every rate gives mass 1
        got = binomial_lower_deviation(6, 0.9, 10.0)
        assert got == pytest.approx(1.0, abs=1e-12)

    def test_lower_deviation_hand_value(self):
        s = -(0.9 * math.log(0.9) + 0.1 * math.log(0.1))
        t = math.log(2) - s - 0.2
        # classes k <= 4 qualify at n = 6 (rate of the k-flip class)
        want = sum(
            math.comb(6, k) * 0.9 ** k * 0.1 ** (6 - k) for k in range(5)
        )
        assert binomial_lower_deviation(6, 0.9, t) == pytest.approx(want, abs=1e-14)

    def test_window_masses_extremes(self):
        omega, tau = binomial_window_masses(6, 1.0, 0.0, 0.9, 0.9, 2.0)
        assert omega == pytest.approx(1.0, abs=1e-12)
        assert tau == pytest.approx(1.0, abs=1e-12)


class TestMarkov:
    def test_stationary_symmetric(self):
        pi = markov_stationary(T_SYM)
        assert pi == pytest.approx([0.5, 0.5], abs=1e-12)

    def test_stationary_asymmetric(self):
        pi = markov_stationary(T_ASYM)
        assert pi == pytest.approx([0.6, 0.4], abs=1e-12)

    def test_entropy_rate_symmetric(self):
        want = -(0.9 * math.log(0.9) + 0.1 * math.log(0.1))
        assert markov_entropy_rate(T_SYM) == pytest.approx(want, abs=1e-12)

    def test_path_weights_normalised(self):
        for n in (1, 3, 5):
            assert markov_path_weights(n, T_ASYM).sum() == pytest.approx(1.0, abs=1e-12)

    def test_path_weight_value(self):
        w = markov_path_weights(3, T_SYM)
        # path 0 -> 0 -> 1 sits at index 0b001
        assert w[1] == pytest.approx(0.5 * 0.9 * 0.1, abs=1e-14)

    def test_block_entropy_matches_direct_sum(self):
        for n in (2, 4, 6):
            w = markov_path_weights(n, T_ASYM)
            direct = float(-(w[w > 0] * np.log(w[w > 0])).sum())
            assert markov_block_entropy(n, T_ASYM) == pytest.approx(direct, abs=1e-10)
