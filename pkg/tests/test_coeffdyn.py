import functools
import warnings

import numpy as np
import pytest

from tdscatter import coeffdyn as cd
from tdscatter import eigenbasis as eb
from tdscatter import model
from tdscatter.errors import RegimeWarning, StepSizeError

PP = model.PhysParams(eta=0.2)
OMEGA0 = 7.0 * 2.0 * np.pi / 0.3
FIG3 = model.BarrierSpec(model.DELTA, 5.0, alpha=1.0, omega0=OMEGA0)
SQUARE = model.BarrierSpec(model.SQUARE, 6.8, a=1.0, alpha=0.5, omega0=20.0)
Q_SQ = 4.2426406871192848  # gamma_q = 4 for V0 = 6.8, eta = 0.2
K_SQ = 3.0                 # gamma_k = 5


@pytest.fixture(scope="module")
def kg_delta():
    return model.kgrid_with_source(50.0, 40.5, 62.0, 1.0, 13)


@pytest.fixture(scope="module")
def kg_square():
    width = (Q_SQ - K_SQ) / 2.0
    return model.kgrid_with_source(Q_SQ, 0.2, 8.0, width, 13)


@pytest.fixture(scope="module")
def square_table(kg_square):
    return cd.build_matrix_table(SQUARE, PP, kg_square)


class TestRhsDelta:
    def test_zero_at_t0(self, kg_delta):
        f0 = cd.eigenstate_initial_field(kg_delta, 50.0)
        assert np.abs(cd.rhs_delta(f0, 0.0, FIG3, PP)).max() == 0.0

    def test_zero_for_static_barrier(self, kg_delta):
        static = model.BarrierSpec(model.DELTA, 5.0)
        f0 = cd.eigenstate_initial_field(kg_delta, 50.0)
        assert np.abs(cd.rhs_delta(f0, 0.37, static, PP)).max() == 0.0

    def test_direction_independent(self, kg_delta):
        f0 = cd.eigenstate_initial_field(kg_delta, 50.0)
        rhs = cd.rhs_delta(f0, 0.01, FIG3, PP)
        assert np.abs(rhs[0] - rhs[1]).max() == 0.0
        assert np.abs(rhs).max() > 0

    def test_matches_general_path(self, kg_delta):
        table = cd.build_matrix_table(FIG3, PP, kg_delta)
        b = np.exp(1j * kg_delta.k)[None, :] * np.array([[1.0], [0.5]])
        f = cd.CoefficientField(kgrid=kg_delta, b=b.astype(complex), source_q=50.0)
        r1 = cd.rhs_delta(f, 0.013, FIG3, PP)
        r2 = cd.rhs_general(f, 0.013, table, PP)
        assert np.abs(r1 - r2).max() < 1e-12 * np.abs(r1).max()


class TestRhsGeneral:
    def test_zero_for_static(self, kg_square):
        static = model.BarrierSpec(model.SQUARE, 6.8, a=1.0)
        table = cd.build_matrix_table(static, PP, kg_square)
        f0 = cd.eigenstate_initial_field(kg_square, Q_SQ)
        assert np.abs(cd.rhs_general(f0, 0.2, table, PP)).max() == 0.0

    def test_square_channels_differ(self, kg_square, square_table):
        f0 = cd.eigenstate_initial_field(kg_square, Q_SQ)
        rhs = cd.rhs_general(f0, 0.01, square_table, PP)
        scale = np.abs(rhs).max()
        assert np.abs(rhs[0] - rhs[1]).max() > 0.01 * scale

    def test_grid_mismatch(self, kg_square, square_table):
        other = model.kgrid_with_source(Q_SQ, 0.3, 7.0, (Q_SQ - K_SQ) / 2.0, 13)
        f0 = cd.eigenstate_initial_field(other, Q_SQ)
        with pytest.raises(ValueError, match="k-grid"):
            cd.rhs_general(f0, 0.01, square_table, PP)


class TestMatrixElement:
    def test_delta_direction_blind(self):
        t = 0.011
        vals = []
        for s1 in ("+", "-"):
            for s2 in ("+", "-"):
                sk = eb.make_state(FIG3, PP, 47.0, s1)
                sl = eb.make_state(FIG3, PP, 53.0, s2)
                vals.append(cd.matrix_element(FIG3, t, sk, sl, PP))
        spread = max(abs(v - vals[0]) for v in vals)
        assert spread < 1e-14 * abs(vals[0])

    def test_delta_factorized_form(self):
        # generic evaluation at x = 0 equals conj(D_k) dlam D_l
        t = 0.02
        beta = FIG3.beta(PP)
        dlam = float(model.lambda_at(FIG3, t)) - FIG3.lambda0
        _, dk = eb.delta_amplitudes(47.0, beta)
        _, dl = eb.delta_amplitudes(53.0, beta)
        sk = eb.make_state(FIG3, PP, 47.0, "+")
        sl = eb.make_state(FIG3, PP, 53.0, "-")
        got = cd.matrix_element(FIG3, t, sk, sl, PP)
        assert got == pytest.approx(np.conj(dk) * dlam * dl, rel=1e-13)

    def test_hermiticity(self):
        t = 0.07
        sk = eb.make_state(SQUARE, PP, K_SQ, "-")
        sl = eb.make_state(SQUARE, PP, Q_SQ, "+")
        m_kl = cd.matrix_element(SQUARE, t, sk, sl, PP)
        m_lk = cd.matrix_element(SQUARE, t, sl, sk, PP)
        assert m_kl == pytest.approx(np.conj(m_lk), rel=1e-12)

    def test_square_quadrature_self_convergence(self):
        sk = eb.make_state(SQUARE, PP, K_SQ, "-")
        sl = eb.make_state(SQUARE, PP, Q_SQ, "+")
        base = cd.profile_element(SQUARE, PP, sk, sl)
        fine = cd.profile_element(SQUARE, PP, sk, sl, refine=2)
        assert abs(fine - base) / abs(fine) < 1e-9
        # and the guarded variant accepts it
        cd.matrix_element(SQUARE, 0.03, sk, sl, PP, check_convergence=True)

    def test_table_hermitian(self, square_table):
        p = square_table.profile
        for s in range(2):
            for r in range(2):
                assert np.allclose(p[s, r], np.conj(p[r, s].T), rtol=0, atol=1e-13)


class TestIntegrate:
    def test_zero_rhs_constant(self, kg_delta):
        b0 = np.ones((2, kg_delta.n), dtype=complex)
        f0 = cd.CoefficientField(kgrid=kg_delta, b=b0)
        traj = cd.integrate(lambda f, t: np.zeros_like(f.b), f0, [0.1, 0.2], 1e-2)
        assert np.array_equal(traj.b[-1], b0)

    def test_fourth_order_self_convergence(self, kg_delta):
        f0 = cd.eigenstate_initial_field(kg_delta, 50.0)
        rhs = functools.partial(cd.rhs_delta, barrier=FIG3, pp=PP)
        dt = 2e-4
        b1 = cd.integrate(rhs, f0, [0.02], dt).b[-1]
        b2 = cd.integrate(rhs, f0, [0.02], dt / 2).b[-1]
        b4 = cd.integrate(rhs, f0, [0.02], dt / 4).b[-1]
        ratio = np.abs(b1 - b2).max() / np.abs(b2 - b4).max()
        assert 8.0 < ratio < 32.0

    def test_step_size_rejection(self, kg_delta):
        f0 = cd.eigenstate_initial_field(kg_delta, 50.0)
        rhs = functools.partial(cd.rhs_delta, barrier=FIG3, pp=PP)
        rate = cd.phase_rate_bound(kg_delta, FIG3, PP)
        with pytest.raises(StepSizeError):
            cd.integrate(rhs, f0, [0.1], dt=1.0 / rate, max_phase_rate=rate)

    def test_probability_conserved_delta(self, kg_delta):
        f0 = cd.eigenstate_initial_field(kg_delta, 50.0)
        rhs = functools.partial(cd.rhs_delta, barrier=FIG3, pp=PP)
        traj = cd.integrate(rhs, f0, np.linspace(0.02, 0.1, 5), 5e-5)
        assert np.abs(traj.b[-1]).max() > 1e-3  # dynamics actually happened
        assert cd.probability_defect(traj) < 1e-10

    def test_probability_conserved_square(self, kg_square, square_table):
        f0 = cd.eigenstate_initial_field(kg_square, Q_SQ)
        rhs = functools.partial(cd.rhs_general, table=square_table, pp=PP)
        traj = cd.integrate(rhs, f0, np.linspace(0.05, 0.25, 5), 2e-4)
        assert cd.probability_defect(traj) < 1e-10


class TestSigmaSymmetry:
    def test_delta_defect_vanishes(self, kg_delta):
        table = cd.build_matrix_table(FIG3, PP, kg_delta)
        f0 = cd.eigenstate_initial_field(kg_delta, 50.0)
        rhs = functools.partial(cd.rhs_general, table=table, pp=PP)
        traj = cd.integrate(rhs, f0, np.linspace(0.02, 0.1, 5), 5e-5)
        assert np.abs(traj.b[-1]).max() > 1e-3
        assert cd.sigma_symmetry_defect(traj) < 1e-10

    def test_square_defect_order_of_coefficients(self, kg_square, square_table):
        f0 = cd.eigenstate_initial_field(kg_square, Q_SQ)
        rhs = functools.partial(cd.rhs_general, table=square_table, pp=PP)
        traj = cd.integrate(rhs, f0, [0.02, 0.05], 1e-4)
        scale = np.abs(traj.b[-1]).max()
        assert cd.sigma_symmetry_defect(traj) > 0.1 * scale

    def test_static_barrier_trivially_zero(self, kg_delta):
        static = model.BarrierSpec(model.DELTA, 5.0)
        f0 = cd.eigenstate_initial_field(kg_delta, 50.0)
        rhs = functools.partial(cd.rhs_delta, barrier=static, pp=PP)
        traj = cd.integrate(rhs, f0, [0.05, 0.1], 1e-3)
        assert np.abs(traj.b).max() == 0.0
        assert cd.sigma_symmetry_defect(traj) == 0.0


class TestShortTime:
    def test_quadratic_law_exact_ratio(self):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RegimeWarning)
            c1 = cd.short_time_c_minus(51.0, 50.0, 1e-4, FIG3, PP)
            c2 = cd.short_time_c_minus(51.0, 50.0, 2e-4, FIG3, PP)
        assert abs(c2 / c1 - 4.0) < 1e-12

    def test_zero_without_modulation(self):
        static = model.BarrierSpec(model.DELTA, 5.0)
        assert cd.short_time_c_minus(51.0, 50.0, 1e-4, static, PP) == 0.0

    def test_regime_warning(self):
        with pytest.warns(RegimeWarning):
            cd.short_time_c_minus(51.0, 50.0, 0.1, FIG3, PP)

    def test_square_matches_ode_route(self, kg_square, square_table):
        t = 3e-4
        f0 = cd.eigenstate_initial_field(kg_square, Q_SQ)
        rhs = functools.partial(cd.rhs_general, table=square_table, pp=PP)
        traj = cd.integrate(rhs, f0, [t], t / 40.0)
        ik = int(np.argmin(np.abs(kg_square.k - K_SQ)))
        est = cd.short_time_c_minus(K_SQ, Q_SQ, t, SQUARE, PP)
        assert abs(abs(est) / abs(traj.b[-1, 1, ik]) - 1.0) < 0.05


class TestFirstOrderRatio:
    def test_time_independent_for_product_modulation(self):
        times = np.linspace(0.02, 0.3, 8)
        ratios = np.array([
            abs(cd.first_order_coeff(K_SQ, "-", Q_SQ, t, SQUARE, PP))
            / abs(cd.first_order_coeff(K_SQ, "+", Q_SQ, t, SQUARE, PP))
            for t in times])
        assert ratios.max() / ratios.min() - 1.0 < 0.01

    def test_delta_ratio_is_one(self):
        cm = cd.first_order_coeff(51.0, "-", 50.0, 0.1, FIG3, PP)
        cp = cd.first_order_coeff(51.0, "+", 50.0, 0.1, FIG3, PP)
        assert abs(cm / cp) == pytest.approx(1.0, rel=1e-13)

    def test_short_time_limit_consistency(self):
        # first_order_coeff must reduce to the quadratic estimate as t -> 0
        t = 2e-5
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RegimeWarning)
            quad_est = cd.short_time_c_minus(K_SQ, Q_SQ, t, SQUARE, PP)
        full = cd.first_order_coeff(K_SQ, "-", Q_SQ, t, SQUARE, PP)
        assert abs(full / quad_est - 1.0) < 1e-3


class TestRatioEstimate:
    def test_equal_gamma_limit_removable(self):
        gamma, a = 4.0, 1.0
        lim = cd.ratio_estimate(gamma, gamma, a)
        near = cd.ratio_estimate(gamma + 1e-10, gamma, a)
        assert lim == pytest.approx((2 * a / (2 * gamma)) * np.exp(-2 * gamma * a), rel=1e-12)
        assert near == pytest.approx(lim, rel=1e-8)

    def test_monotone_decreasing_in_width(self):
        vals = [cd.ratio_estimate(5.0, 4.0, a) for a in np.linspace(0.75, 1.6, 9)]
        assert all(v2 < v1 for v1, v2 in zip(vals, vals[1:]))

    def test_width_sweep_rate_matches(self):
        # full matrix-element ratio vs the opacity-shape estimate, gamma a in [3, 6]
        gk = float(eb.decay_rate(K_SQ, 6.8, PP.eta))
        gq = float(eb.decay_rate(Q_SQ, 6.8, PP.eta))
        avals = np.linspace(0.75, 1.2, 7)
        log_meas, log_est = [], []
        for a in avals:
            bar = model.BarrierSpec(model.SQUARE, 6.8, a=float(a))
            skm = eb.make_state(bar, PP, K_SQ, "-")
            skp = eb.make_state(bar, PP, K_SQ, "+")
            sq = eb.make_state(bar, PP, Q_SQ, "+")
            log_meas.append(np.log(abs(cd.profile_element(bar, PP, skm, sq)
                                       / cd.profile_element(bar, PP, skp, sq))))
            log_est.append(np.log(cd.ratio_estimate(gk, gq, a)))
        rate_meas = np.polyfit(avals, log_meas, 1)[0]
        rate_est = np.polyfit(avals, log_est, 1)[0]
        assert abs(rate_meas / rate_est - 1.0) < 0.10
