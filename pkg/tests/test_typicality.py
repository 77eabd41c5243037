import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from qaep.blockop import BlockAlgebra, HermitianElement, Projection
from qaep.chain import ChainModel
from qaep.errors import ShapeError, VolumeError
from qaep.oracles import (
    binomial_aep_row,
    binomial_lower_deviation,
    binomial_window_masses,
)
from qaep.pressure import finite_volume_pressure
from qaep.rand import rand_block_algebra, rand_density_element, rand_projection_element
from qaep.states import ProductState
from qaep.typicality import (
    DeviationParameters,
    ergodic_average,
    kyfan_projection,
    lower_deviation,
    relative_information_operator,
    typical_projection,
    upper_deviation_argument,
    verify_typicality,
    window_projection,
    window_report,
)

LAM = math.log(2)


@pytest.fixture
def model():
    return ChainModel(2, 1)


@pytest.fixture
def prod9(model):
    return ProductState(model, np.diag([0.9, 0.1]))


@pytest.fixture
def trace_state(model):
    return ProductState(model, np.eye(2) / 2)


@pytest.fixture
def rng():
    return np.random.default_rng(2024)


class TestRelativeInformation:
    def test_trace_state_gives_zero(self, model, trace_state):
        r = relative_information_operator(model, trace_state, 4)
        assert np.abs(r.blocks[0]).max() < 1e-12

    def test_diagonal_closed_form(self, model, prod9):
        n = 5
        r = relative_information_operator(model, prod9, n)
        got = sorted(np.diagonal(r.blocks[0]).real)
        want = sorted(
            math.log(0.9 ** k * 0.1 ** (n - k)) / n + LAM
            for k in range(n + 1)
            for _ in range(math.comb(n, k))
        )
        assert_allclose(got, want, atol=1e-12)

    def test_commutes_with_trace_density(self, model, prod9):
        r = relative_information_operator(model, prod9, 3)
        d_tau = model.local_algebra(3).trace_density()
        assert r.commutator_norm(d_tau) == 0.0


class TestLowerDeviation:
    def test_trace_state_zero_mass(self, model, trace_state):
        for n in (2, 4, 6):
            assert lower_deviation(model, trace_state, -0.1, n) == pytest.approx(0.0)

    def test_binomial_oracle(self, model, prod9):
        s = prod9.site_entropy()
        t = LAM - s - 0.2
        for n in (4, 8, 12):
            got = lower_deviation(model, prod9, t, n)
            assert got == pytest.approx(binomial_lower_deviation(n, 0.9, t), abs=1e-10)

    def test_complement_regime(self, model, prod9):
        s = prod9.site_entropy()
        t = LAM - s + 0.3
        vals = [lower_deviation(model, prod9, t, n) for n in (4, 8, 12)]
        assert vals[-1] > 0.9
        assert vals[-1] > vals[0]


class TestErgodicAverage:
    def test_identity(self, model):
        a = model.local_algebra(1).identity()
        out = ergodic_average(model, a, 4)
        assert_allclose(out.blocks[0], np.eye(16), atol=1e-12)

    def test_two_site_formula(self, model):
        a = model.element(1, np.diag([1.0, 0.0]))
        out = ergodic_average(model, a, 2)
        expected = (
            np.kron(np.diag([1.0, 0.0]), np.eye(2))
            + np.kron(np.eye(2), np.diag([1.0, 0.0]))
        ) / 2
        assert_allclose(out.blocks[0], expected, atol=1e-12)

    def test_spectrum_of_diagonal_average(self, model):
        a0, a1, n = 2.0, -1.0, 5
        a = model.element(1, np.diag([a0, a1]))
        vals = sorted(set(np.round(np.diagonal(ergodic_average(model, a, n).blocks[0]).real, 10)))
        want = sorted(set(round((k * a0 + (n - k) * a1) / n, 10) for k in range(n + 1)))
        assert vals == want

    def test_norm_bound(self, model, rng):
        from qaep.rand import rand_hermitian

        a = model.element(2, rand_hermitian(rng, 4))
        n = 6
        out = ergodic_average(model, a, n)
        assert out.norm() <= a.norm() * (n - 2 + 1) / n + 1e-10

    def test_locality_check(self, model):
        a = model.element(2, np.eye(4))
        with pytest.raises(VolumeError):
            ergodic_average(model, a, 1)

    def test_dense_matches_diagonal_path(self, model, rng):
        # the diagonal fast path must agree with the generic embed sum
        a_diag = np.diag([0.3, -0.7])
        a = model.element(1, a_diag)
        fast = ergodic_average(model, a, 4)
        alg = model.local_algebra(4)
        slow = alg.zero()
        for i in range(4):
            slow = slow + model.embed(a, i, 4)
        slow = (1.0 / 4) * slow
        assert np.abs(fast.blocks[0] - slow.blocks[0]).max() < 1e-12


class TestWindowProjection:
    def test_identity_observable(self, model, prod9):
        a = model.local_algebra(1).identity()
        f = window_projection(model, prod9, a, 0.5, 6)
        assert_allclose(f.blocks[0], np.eye(64), atol=1e-12)

    def test_binomial_window(self, model, prod9):
        a = model.element(1, np.diag([1.0, 0.0]))
        n, delta = 8, 0.15
        f = window_projection(model, prod9, a, delta, n)
        omega_f = prod9.restrict(n).pair(f)
        want_omega, want_tau = binomial_window_masses(n, 1.0, 0.0, 0.9, 0.9, delta)
        assert omega_f == pytest.approx(want_omega, abs=1e-10)
        assert f.tau() == pytest.approx(want_tau, abs=1e-10)

    def test_trace_bound_holds(self, model, prod9):
        a = model.element(1, np.diag([1.0, 0.0]))
        for n in (4, 8, 12):
            pn = finite_volume_pressure(model, a, n).bulk
            rep = window_report(model, prod9, a, 0.15, n, pn)
            assert rep.bound_slack >= -1e-10

    def test_mass_grows_with_volume(self, model, prod9):
        a = model.element(1, np.diag([1.0, 0.0]))
        rep4 = window_report(model, prod9, a, 0.15, 4,
                             finite_volume_pressure(model, a, 4).bulk)
        rep12 = window_report(model, prod9, a, 0.15, 12,
                              finite_volume_pressure(model, a, 12).bulk)
        assert rep12.omega_f > rep4.omega_f


class TestKyFan:
    def test_identity_fixed(self, model):
        alg = BlockAlgebra.full(3)
        d = HermitianElement(alg, [np.diag([0.5, 0.3, 0.2])])
        q = kyfan_projection(Projection(alg, [np.eye(3)]), d)
        assert_allclose(q.blocks[0], np.eye(3), atol=1e-12)

    def test_hand_case(self):
        alg = BlockAlgebra.full(3)
        d = HermitianElement(alg, [np.diag([0.5, 0.3, 0.2])])
        f = Projection(alg, [np.diag([0.0, 1.0, 0.0])])
        q = kyfan_projection(f, d)
        assert_allclose(q.blocks[0], np.diag([1.0, 0.0, 0.0]), atol=1e-12)
        assert d.pair(q) == pytest.approx(0.5)

    def test_not_a_projection_rejected(self):
        alg = BlockAlgebra.full(2)
        d = HermitianElement(alg, [np.diag([0.6, 0.4])])
        with pytest.raises(ShapeError):
            kyfan_projection(Projection(alg, [np.diag([0.5, 0.0])]), d)

    def test_triple_guarantee_random(self, rng):
        for _ in range(50):
            alg = rand_block_algebra(rng)
            d = rand_density_element(rng, alg)
            f = rand_projection_element(rng, alg)
            q = kyfan_projection(f, d)
            q.validate()
            for k in range(alg.n_blocks):
                assert round(np.trace(q.blocks[k]).real) == round(
                    np.trace(f.blocks[k]).real
                )
            assert q.commutator_norm(d) < 1e-10
            assert d.pair(q) >= d.pair(f) - 1e-10


class TestDeviationBoundMechanism:
    """The finite-volume route to the lower-deviation bound: the ergodic
    window F, its fixed-rank companion Q built from the density's top
    eigenvectors, and the mass estimate

        omega(Proj[R_n <= t]) <= e^{n t} tau(Q) + omega(1 - Q),

    which holds exactly whenever Proj and Q commute (both are built in the
    eigenbasis of the density here)."""

    def test_chain_at_finite_volume(self, model, prod9):
        a = model.element(1, np.diag([1.0, 0.0]))
        s = prod9.site_entropy()
        t = LAM - s - 0.2
        delta = 0.1
        for n in (4, 6, 8):
            dens = prod9.restrict(n)
            f = window_projection(model, prod9, a, delta, n)
            q = kyfan_projection(f, dens)
            mass = lower_deviation(model, prod9, t, n)
            bound = math.exp(n * t) * q.tau() + (1.0 - dens.pair(q))
            assert mass <= bound + 1e-10
            assert dens.pair(q) >= dens.pair(f) - 1e-10

    def test_bound_decays_along_volumes(self, model, prod9):
        a = model.element(1, np.diag([1.0, 0.0]))
        s = prod9.site_entropy()
        t = LAM - s - 0.2
        masses = [lower_deviation(model, prod9, t, n) for n in (4, 8, 12)]
        assert masses[-1] < masses[0]


class TestTypicalProjection:
    def test_trace_state_full(self, model, trace_state):
        for n in (2, 4, 6):
            p = typical_projection(model, trace_state, 0.2, n, s=LAM)
            assert p.rank() == 2 ** n

    def test_binomial_selection(self, model, prod9):
        s = prod9.site_entropy()
        n, delta = 10, 0.3
        p = typical_projection(model, prod9, delta, n, s=s)
        row = binomial_aep_row(n, 0.9, s, delta)
        assert p.rank() == row.rank
        assert prod9.restrict(n).pair(p) == pytest.approx(row.omega, abs=1e-10)

    def test_is_projection_and_commutes(self, model, prod9):
        s = prod9.site_entropy()
        p = typical_projection(model, prod9, 0.3, 7, s=s)
        p.validate()
        assert p.commutator_norm(prod9.restrict(7)) == 0.0
        assert p.commutator_norm(model.local_algebra(7).trace_density()) == 0.0

    def test_window_two_small_volume_empty(self):
        # at small volumes the trace-density window misses for w = 2
        model = ChainModel(2, 2)
        st = ProductState(model, np.diag([0.9, 0.1]))
        p = typical_projection(model, st, 0.3, 2, s=st.site_entropy())
        assert p.rank() == 0


class TestMarkovOracle:
    """Diagonal Markov states must reproduce the classical path measure in
    every reported quantity."""

    T = [[0.9, 0.1], [0.1, 0.9]]

    @pytest.fixture
    def markov(self, model):
        from qaep.states import FinitelyCorrelatedState

        return FinitelyCorrelatedState.from_markov_chain(model, self.T)

    def test_typicality_rows(self, model, markov):
        from qaep.oracles import markov_aep_row, markov_entropy_rate

        s = markov_entropy_rate(self.T)
        rep = verify_typicality(model, markov, 0.4, range(4, 9), s=s)
        for row in rep.rows:
            orc = markov_aep_row(row.n, self.T, s, 0.4)
            assert orc.close_to(row.omega_pn, row.rank, row.eig_min, row.eig_max), row.n

    def test_lower_deviation(self, model, markov):
        from qaep.oracles import markov_entropy_rate, markov_lower_deviation

        s = markov_entropy_rate(self.T)
        t = LAM - s - 0.2
        for n in (4, 6, 8):
            got = lower_deviation(model, markov, t, n)
            assert got == pytest.approx(markov_lower_deviation(n, self.T, t), abs=1e-10)


class TestVerifyTypicality:
    def test_trace_state_rows(self, model, trace_state):
        rep = verify_typicality(model, trace_state, 0.2, range(2, 7), s=LAM)
        for row in rep.rows:
            assert row.omega_pn == pytest.approx(1.0, abs=1e-12)
            assert row.rank == 2 ** row.n
            assert row.bounds_ok and row.rank_ok
        assert rep.rank_ok_from == 2

    def test_matches_oracle_at_every_volume(self, model, prod9):
        s = prod9.site_entropy()
        rep = verify_typicality(model, prod9, 0.3, range(4, 11), s=s)
        for row in rep.rows:
            orc = binomial_aep_row(row.n, 0.9, s, 0.3)
            assert orc.close_to(row.omega_pn, row.rank, row.eig_min, row.eig_max), row.n

    def test_certificate_recorded(self, model, prod9):
        rep = verify_typicality(model, prod9, 0.3, [4], s=prod9.site_entropy())
        assert rep.ergodicity_certified

    def test_finite_s_variant_present(self, model, prod9):
        rep = verify_typicality(model, prod9, 0.3, [8], s=prod9.site_entropy())
        row = rep.rows[0]
        # for an i.i.d. product the finite-volume entropy equals the limit,
        # so the variant windows coincide
        assert row.omega_pn_finite_s == pytest.approx(row.omega_pn, abs=1e-12)
        assert row.rank_finite_s == row.rank


class TestUpperDeviation:
    def test_trace_state_masses_vanish(self, model, trace_state):
        rec = upper_deviation_argument(model, trace_state, 0.3, 0.1, 4, s=LAM)
        assert rec.omega_q_minus == pytest.approx(0.0)
        assert rec.omega_q_plus == pytest.approx(0.0)
        assert rec.q_minus_rel_info == pytest.approx(0.0)

    def test_binomial_masses(self, model, prod9):
        from qaep.oracles import binomial_deviation_masses

        s = prod9.site_entropy()
        delta, dp = 0.3, 0.1
        for n in (6, 12):
            rec = upper_deviation_argument(model, prod9, delta, dp, n, s=s)
            lo, hi = -s + LAM - dp, -s + LAM + delta
            want_minus, want_plus = binomial_deviation_masses(n, 0.9, lo, hi)
            assert rec.omega_q_minus == pytest.approx(want_minus, abs=1e-10)
            assert rec.omega_q_plus == pytest.approx(want_plus, abs=1e-10)

    def test_chain_inequality_exact(self, model, prod9, rng):
        s = prod9.site_entropy()
        for n in (3, 6, 9, 12):
            rec = upper_deviation_argument(model, prod9, 0.3, 0.1, n, s=s)
            assert rec.chain_residual >= -1e-10

    def test_q_minus_term_shrinks(self, model, prod9):
        s = prod9.site_entropy()
        r6 = upper_deviation_argument(model, prod9, 0.3, 0.1, 6, s=s)
        r12 = upper_deviation_argument(model, prod9, 0.3, 0.1, 12, s=s)
        assert abs(r12.q_minus_rel_info) < abs(r6.q_minus_rel_info)

    def test_parameter_validation(self):
        with pytest.raises(ShapeError):
            DeviationParameters(delta=0.0, delta_prime=0.1)
        with pytest.raises(ShapeError):
            DeviationParameters(delta=0.1, delta_prime=0.5, epsilon=0.5)
        DeviationParameters(delta=0.4, delta_prime=0.1, epsilon=0.3)
