import math

import numpy as np
import pytest

from qaep.chain import ChainModel
from qaep.errors import DomainError
from qaep.pressure import (
    finite_volume_pressure,
    gibbs_lower_bound,
    one_site_pressure_oracle,
    oracle_pressure,
    period_mean_entropy,
    pressure_limit,
    product_gibbs_candidate,
    product_state_grid,
    transfer_matrix_oracle,
    variational_inequality,
)
from qaep.rand import rand_hermitian
from qaep.states import FinitelyCorrelatedState, GibbsBlockState, ProductState

LAM = math.log(2)


@pytest.fixture
def model():
    return ChainModel(2, 1)


@pytest.fixture
def rng():
    return np.random.default_rng(17)


def ising(model, j=1.0):
    sz = np.diag([1.0, -1.0])
    return model.element(2, -j * np.kron(sz, sz))


class TestFiniteVolumePressure:
    def test_zero_observable(self, model):
        a = model.element(1, np.zeros((2, 2)))
        for n in (1, 4, 8):
            pt = finite_volume_pressure(model, a, n)
            assert pt.bulk == pytest.approx(0.0, abs=1e-12)
            assert pt.full == pytest.approx(0.0, abs=1e-12)

    def test_scalar_observable(self, model):
        c = 0.7
        a = model.element(1, c * np.eye(2))
        pt = finite_volume_pressure(model, a, 6)
        assert pt.bulk == pytest.approx(-c, abs=1e-12)

    def test_one_site_closed_form(self, model):
        a = model.element(1, np.diag([1.0, -1.0]))
        want = math.log((math.exp(-1.0) + math.exp(1.0)) / 2)
        for n in range(1, 13):
            assert finite_volume_pressure(model, a, n).bulk == pytest.approx(
                want, abs=1e-12
            )

    def test_conventions_close(self, model, rng):
        a = model.element(2, rand_hermitian(rng, 4))
        n = 8
        pt = finite_volume_pressure(model, a, n)
        # conventions differ by at most (l - 1) ||a|| / n plus edge effects
        assert abs(pt.bulk - pt.full) <= 2 * a.norm() * 2 / n

    def test_full_convention_nan_at_cap(self):
        # the n-copy convention needs volume n + l - 1; at the cap it is
        # reported as nan while the bulk value stays available
        model = ChainModel(2, 1, cap=64)
        sz = np.diag([1.0, -1.0])
        a = model.element(2, -np.kron(sz, sz))
        pt = finite_volume_pressure(model, a, model.n_max)
        assert math.isnan(pt.full)
        assert math.isfinite(pt.bulk)

    def test_scalar_shift_covariance(self, model, rng):
        a_mat = rand_hermitian(rng, 2)
        a = model.element(1, a_mat)
        shifted = model.element(1, a_mat + 0.5 * np.eye(2))
        p1 = finite_volume_pressure(model, a, 6).bulk
        p2 = finite_volume_pressure(model, shifted, 6).bulk
        assert p2 == pytest.approx(p1 - 0.5, abs=1e-10)


class TestOracles:
    def test_zero_transfer(self, model):
        a = model.element(2, np.zeros((4, 4)))
        assert transfer_matrix_oracle(model, a) == pytest.approx(0.0, abs=1e-12)

    def test_ising_log_cosh(self, model):
        got = transfer_matrix_oracle(model, ising(model))
        assert got == pytest.approx(math.log(math.cosh(1.0)), abs=1e-12)

    def test_non_diagonal_rejected(self, model):
        sx = np.array([[0.0, 1.0], [1.0, 0.0]])
        with pytest.raises(DomainError):
            transfer_matrix_oracle(model, model.element(2, np.kron(sx, sx)))

    def test_one_site_oracle_any_basis(self, model):
        sx = np.array([[0.0, 1.0], [1.0, 0.0]])
        a = model.element(1, 0.7 * sx)
        want = math.log((math.exp(-0.7) + math.exp(0.7)) / 2)
        assert one_site_pressure_oracle(model, a) == pytest.approx(want, abs=1e-12)
        assert finite_volume_pressure(model, a, 6).bulk == pytest.approx(want, abs=1e-10)

    def test_dispatcher(self, model, rng):
        assert oracle_pressure(model, model.element(1, np.diag([1.0, 0.0]))) is not None
        assert oracle_pressure(model, ising(model)) is not None
        sx = np.array([[0.0, 1.0], [1.0, 0.0]])
        assert oracle_pressure(model, model.element(2, np.kron(sx, sx))) is None


class TestPressureLimit:
    def test_ising_extrapolation(self, model):
        rep = pressure_limit(model, ising(model), range(4, 13))
        assert rep.oracle == pytest.approx(math.log(math.cosh(1.0)), abs=1e-12)
        assert rep.oracle_gap < 0.02
        gaps = rep.oracle_gaps
        assert all(gaps[i + 1] < gaps[i] for i in range(len(gaps) - 1))

    def test_monotone_in_observable(self, model):
        # a <= b entrywise on the diagonal implies P(a) >= P(b)
        a = model.element(1, np.diag([0.0, 0.0]))
        b = model.element(1, np.diag([0.5, 0.2]))
        pa = pressure_limit(model, a, range(2, 7)).limit
        pb = pressure_limit(model, b, range(2, 7)).limit
        assert pa >= pb - 1e-12

    def test_translation_covariance(self, model):
        # the pressure of a shifted copy matches once volumes are matched:
        # extrapolated limits agree, finite volumes differ by O(||a|| / n)
        a = ising(model)
        shifted = model.embed(a, 1, 3)
        p_a = pressure_limit(model, a, range(4, 11), oracle=None)
        p_s = pressure_limit(model, shifted, range(4, 11), oracle=None)
        assert p_s.limit == pytest.approx(p_a.limit, abs=1e-9)
        for pt_a, pt_s in zip(p_a.points, p_s.points):
            assert abs(pt_a.bulk - pt_s.bulk) <= 2 * a.norm() / pt_a.n + 1e-9

    def test_norm_continuity(self, model, rng):
        for _ in range(5):
            a_mat = rand_hermitian(rng, 4)
            b_mat = rand_hermitian(rng, 4)
            a, b = model.element(2, a_mat), model.element(2, b_mat)
            pa = pressure_limit(model, a, range(3, 8), oracle=None).limit
            pb = pressure_limit(model, b, range(3, 8), oracle=None).limit
            assert abs(pa - pb) <= (a - b).norm() + 1e-9


class TestVariational:
    def test_trace_state_zero_observable(self, model):
        records = variational_inequality(
            model,
            [("tau", ProductState(model, np.eye(2) / 2))],
            model.element(1, np.zeros((2, 2))),
        )
        assert records[0].gap == pytest.approx(0.0, abs=1e-12)

    def test_product_gibbs_attains_optimum(self, model):
        a = model.element(1, np.diag([1.0, -1.0]))
        cand = product_gibbs_candidate(model, a)
        records = variational_inequality(model, [("gibbs", cand)], a)
        assert abs(records[0].gap) <= 1e-9

    def test_grid_all_nonnegative(self, model):
        grid = product_state_grid(model, 20)
        records = variational_inequality(model, grid, ising(model))
        assert all(r.gap >= -1e-9 for r in records)

    def test_finer_grid_tightens(self, model):
        a = ising(model)
        coarse = variational_inequality(model, product_state_grid(model, 5), a)
        fine = variational_inequality(model, product_state_grid(model, 25), a)
        assert fine[0].gap <= coarse[0].gap + 1e-12

    def test_fcs_candidates(self, model):
        fcs = FinitelyCorrelatedState.from_markov_chain(model, [[0.9, 0.1], [0.1, 0.9]])
        records = variational_inequality(
            model, [("markov", fcs)], ising(model), entropy_range=range(2, 9)
        )
        assert records[0].gap >= -1e-9


class TestPeriodMeanEntropy:
    def test_trace_blocks(self, model):
        gb = GibbsBlockState(model, 2, model.element(1, np.zeros((2, 2))))
        rec = period_mean_entropy(gb, 2)
        assert rec.value == pytest.approx(gb.period * LAM, abs=1e-10)

    def test_exact_at_one_and_two_blocks(self, model):
        gb = GibbsBlockState(model, 2, ising(model))
        want = gb.block_entropy() + LAM
        assert period_mean_entropy(gb, 1).ratio == pytest.approx(want, abs=1e-10)
        assert period_mean_entropy(gb, 2).value == pytest.approx(want, abs=1e-10)

    def test_shift_spread_vanishes(self, model):
        gb = GibbsBlockState(model, 2, ising(model))
        vals = [period_mean_entropy(gb, 2, shift=i).value for i in range(gb.period)]
        assert max(vals) - min(vals) <= 1e-9

    def test_shifted_ratio_differs_but_increment_exact(self, model):
        gb = GibbsBlockState(model, 2, ising(model))
        rec = period_mean_entropy(gb, 2, shift=1)
        want = gb.block_entropy() + LAM
        assert rec.increment == pytest.approx(want, abs=1e-10)


class TestGibbsLowerBound:
    def test_zero_observable_equality(self, model):
        rec = gibbs_lower_bound(model, 2, model.element(1, np.zeros((2, 2))))
        assert rec.slack == pytest.approx(0.0, abs=1e-10)
        assert rec.cross_residual < 1e-10

    def test_one_site_field(self, model):
        rec = gibbs_lower_bound(model, 4, model.element(1, np.diag([1.0, -1.0])))
        assert rec.slack >= -1e-9
        assert rec.cross_residual < 1e-6

    def test_ising_slack_shrinks(self, model):
        recs = {m: gibbs_lower_bound(model, m, ising(model)) for m in (2, 4, 6)}
        for rec in recs.values():
            assert rec.slack >= -1e-9
            assert rec.cross_residual < 1e-6
        assert recs[6].slack < recs[4].slack < recs[2].slack

    def test_variational_sandwich(self, model):
        # the Gibbs family squeezes the pressure from above:
        # max_candidates(s - omega(a)) - lam <= P <= that max + slack term
        a = ising(model)
        p = transfer_matrix_oracle(model, a)
        rec = gibbs_lower_bound(model, 6, a, pressure=p)
        candidates = product_state_grid(model, 20)
        best = max(
            r.mean_entropy - r.omega_a
            for r in variational_inequality(model, candidates, a, pressure=p)
        )
        best = max(best, rec.s_closed - rec.psi_a)
        assert best - LAM <= p + 1e-9
        slack_term = 2 * rec.norm_a * (model.commute_dist + rec.locality) / rec.period
        assert p <= best - LAM + slack_term + 1e-9
