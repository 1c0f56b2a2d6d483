import functools

import mpmath as mp
import numpy as np
import pytest

from _oracles import oracle_erf
from tdscatter import coeffdyn as cd
from tdscatter import eigenbasis as eb
from tdscatter import model
from tdscatter import perturb1 as p1
from tdscatter.errors import EnvelopeError

PP = model.PhysParams(eta=0.2)
OMEGA0 = 7.0 * 2.0 * np.pi / 0.3
PACKET = model.GaussianPacket(x0=-3.0, sigma0=0.2, k0=50.0)
FIG4 = model.BarrierSpec(model.DELTA, 3.0, alpha=0.1, omega0=OMEGA0)


class TestComplexErf:
    def test_zero(self):
        assert p1.complex_erf(0.0) == 0.0

    def test_odd_and_reflection(self):
        z = 1.3 - 0.8j
        assert p1.complex_erf(-z) == pytest.approx(-p1.complex_erf(z), rel=1e-14)
        assert p1.complex_erf(np.conj(z)) == pytest.approx(np.conj(p1.complex_erf(z)),
                                                           rel=1e-14)

    def test_real_values_vs_series_oracle(self):
        for x in (0.5, 1.0, 2.0):
            ref = complex(oracle_erf(x))
            assert abs(complex(p1.complex_erf(x)) - ref) / abs(ref) < 1e-13

    def test_complex_values_vs_oracle(self):
        for z in (0.7 + 2.1j, -3.0 + 9.5j, 7.5 - 10.0j):
            ref = complex(oracle_erf(z))
            assert abs(complex(p1.complex_erf(z)) - ref) / abs(ref) < 1e-12

    def test_envelope_error(self):
        with pytest.raises(EnvelopeError):
            p1.complex_erf(1.0 + 31.0j)


class TestTimeBracket:
    def test_removable_singularity(self):
        assert p1.time_bracket(0.0, 0.7) == pytest.approx(0.7j, rel=1e-15)

    def test_full_oscillation(self):
        t = 0.3
        theta = 2 * np.pi / t
        assert abs(p1.time_bracket(theta, t)) < 1e-15 * t

    def test_tiny_theta_vs_extended_precision(self):
        theta, t = 1e-9, 1.0
        mp.mp.dps = 50
        ref = complex((mp.e ** (1j * mp.mpf(theta) * t) - 1) / mp.mpf(theta))
        mp.mp.dps = 15
        got = complex(p1.time_bracket(theta, t))
        assert abs(got - ref) / abs(ref) < 1e-12

    def test_matches_direct_formula_at_moderate_theta(self):
        theta, t = 37.0, 0.21
        direct = (np.exp(1j * theta * t) - 1.0) / theta
        assert complex(p1.time_bracket(theta, t)) == pytest.approx(direct, rel=1e-13)


@pytest.fixture(scope="module")
def params():
    return p1.FirstOrderParams(packet=PACKET, barrier=FIG4, pp=PP)


class TestC1Coeff:
    def test_zero_at_t0(self, params):
        vals = p1.c1_coeff(params.lgrid.k[::100], 0.0, params)
        assert np.abs(vals).max() == 0.0

    def test_zero_without_modulation(self):
        static = model.BarrierSpec(model.DELTA, 3.0, alpha=0.0, omega0=OMEGA0)
        pr = p1.FirstOrderParams(packet=PACKET, barrier=static, pp=PP)
        assert abs(p1.c1_coeff(50.0, 0.1, pr)) == 0.0

    def test_exactly_linear_in_alpha(self, params):
        double = model.BarrierSpec(model.DELTA, 3.0, alpha=0.2, omega0=OMEGA0)
        pr2 = p1.FirstOrderParams(packet=PACKET, barrier=double, pp=PP,
                                  lgrid=params.lgrid)
        k = params.lgrid.k[::50]
        a = np.asarray(p1.c1_coeff(k, 0.1, params))
        b = np.asarray(p1.c1_coeff(k, 0.1, pr2))
        assert np.array_equal(b, 2.0 * a)

    def test_square_barrier_rejected(self):
        sq = model.BarrierSpec(model.SQUARE, 6.8, a=1.0, alpha=0.1, omega0=OMEGA0)
        with pytest.raises(ValueError):
            p1.FirstOrderParams(packet=PACKET, barrier=sq, pp=PP)


@pytest.fixture(scope="module")
def ode_reference(params):
    """First-order reference: coefficient response from the exact ODE route."""
    kg = params.lgrid
    b0 = eb.project_packet_grid(PACKET, kg, FIG4, PP)
    field0 = cd.CoefficientField(kgrid=kg, b=b0)
    rate = cd.phase_rate_bound(kg, FIG4, PP)
    rhs = functools.partial(cd.rhs_delta, barrier=FIG4, pp=PP)
    traj = cd.integrate(rhs, field0, [0.25], 0.09 / rate, max_phase_rate=rate)
    return traj.b[-1] - b0


class TestAgainstOdeRoute:
    def test_relative_gap_small(self, params, ode_reference):
        c1 = p1.c1_coeff(params.lgrid.k, 0.25, params)
        w = params.lgrid.w
        gap = np.sqrt(np.sum(w * np.abs(ode_reference[0] - c1) ** 2)
                      / np.sum(w * np.abs(ode_reference[0]) ** 2))
        assert gap < 0.03

    def test_fitted_global_constant_is_one(self, params, ode_reference):
        # overall normalization cross-check between the two routes
        c1 = p1.c1_coeff(params.lgrid.k, 0.25, params)
        const = p1.fit_global_constant(c1, ode_reference[0], weights=params.lgrid.w)
        assert abs(const - 1.0) < 0.03

    def test_gap_scales_linearly_in_alpha(self):
        # the leftover is second order: halving alpha halves the relative gap
        gaps = []
        for alpha in (0.1, 0.05, 0.025):
            barrier = model.BarrierSpec(model.DELTA, 3.0, alpha=alpha, omega0=OMEGA0)
            pr = p1.FirstOrderParams(packet=PACKET, barrier=barrier, pp=PP)
            kg = pr.lgrid
            b0 = eb.project_packet_grid(PACKET, kg, barrier, PP)
            field0 = cd.CoefficientField(kgrid=kg, b=b0)
            rate = cd.phase_rate_bound(kg, barrier, PP)
            rhs = functools.partial(cd.rhs_delta, barrier=barrier, pp=PP)
            resp = cd.integrate(rhs, field0, [0.25], 0.09 / rate).b[-1] - b0
            c1 = p1.c1_coeff(kg.k, 0.25, pr)
            gaps.append(float(np.sqrt(np.sum(kg.w * np.abs(resp[0] - c1) ** 2)
                                      / np.sum(kg.w * np.abs(resp[0]) ** 2))))
        assert 1.85 < gaps[0] / gaps[1] < 2.15
        assert 1.85 < gaps[1] / gaps[2] < 2.15


class TestReconstruct:
    def test_zero_coefficients(self, params):
        kg = params.lgrid
        c1 = p1.FirstOrderCoeffs(kgrid=kg, t=0.1, c1=np.zeros(kg.n, complex),
                                 params=params)
        out = p1.reconstruct_psi1(np.linspace(-5, 5, 11), 0.1, c1, FIG4.beta(PP))
        assert np.abs(out).max() == 0.0

    def test_pointwise_alpha_linearity(self, params):
        double = model.BarrierSpec(model.DELTA, 3.0, alpha=0.2, omega0=OMEGA0)
        pr2 = p1.FirstOrderParams(packet=PACKET, barrier=double, pp=PP,
                                  lgrid=params.lgrid)
        x = np.linspace(-4, 4, 401)
        f1 = p1.reconstruct_psi1(x, 0.2, p1.c1_field(params.lgrid, 0.2, params),
                                 FIG4.beta(PP))
        f2 = p1.reconstruct_psi1(x, 0.2, p1.c1_field(params.lgrid, 0.2, pr2),
                                 FIG4.beta(PP))
        assert np.array_equal(f2, 2.0 * f1)

    def test_combination_equals_channel_sum(self, params):
        # the reconstruction kernel must equal psi_k^+ + psi_k^-; this pins
        # the sign of the phase factor in front of exp(ik|x|)
        beta = FIG4.beta(PP)
        k = 37.0
        xs = np.array([-2.3, -0.7, 0.4, 1.9])
        sp = eb.make_state(FIG4, PP, k, "+")
        sm = eb.make_state(FIG4, PP, k, "-")
        direct = eb.eval_eigenstate(sp, xs) + eb.eval_eigenstate(sm, xs)
        A, D = eb.delta_amplitudes(k, beta)
        kernel = np.exp(-1j * k * np.abs(xs)) + (A + D) * np.exp(1j * k * np.abs(xs))
        phase = np.exp(2j * np.arctan(k / beta))
        assert np.allclose(kernel, direct, rtol=0, atol=1e-14)
        assert A + D == pytest.approx(-phase, rel=1e-13)

    def test_reconstruction_matches_eigenbasis_superposition(self, params):
        kg = params.lgrid
        c1 = p1.c1_field(kg, 0.2, params)
        x = np.linspace(-3, 3, 301)
        fast = p1.reconstruct_psi1(x, 0.2, c1, FIG4.beta(PP))
        coeffs = np.stack([c1.c1, c1.c1])
        general = eb.reconstruct_field(kg, coeffs, FIG4, PP, x, t=0.2)
        assert np.allclose(fast, general, rtol=1e-10, atol=1e-14)
