"""Fundamental diagram, nondimensionalization and the ODE right-hand side."""

import mpmath as mp
import numpy as np
import pytest

from kkwaves.model import (
    DomainError,
    ModelParams,
    PhysicalConstants,
    rhs,
    rhs_jacobian,
    rhs_param_derivs,
    ve_dq_dv,
    ve_derivs,
    ve_of_r,
    ve_of_v,
)

from conftest import FAMILY_A, params_at

# high-precision evaluation of 1/(1+e^(-25/6)) - 3.72e-6, frozen from mpmath
VE_AT_ZERO = 0.9847291261196256


def mp_ve(r):
    return 1 / (1 + mp.e ** ((mp.mpf(r) - mp.mpf("0.25")) / mp.mpf("0.06"))) \
        - mp.mpf("3.72e-6")


class TestFundamentalDiagram:
    def test_center_value(self):
        assert ve_of_r(0.25) == pytest.approx(0.5 - 3.72e-6, abs=1e-15)

    def test_high_density_limit(self):
        assert ve_of_r(1e9) == pytest.approx(-3.72e-6, abs=1e-20)
        assert ve_of_r(60.0) == pytest.approx(-3.72e-6, abs=1e-12)

    def test_zero_density_against_mpmath(self):
        mp.mp.dps = 30
        assert float(mp_ve(0)) == pytest.approx(VE_AT_ZERO, abs=1e-16)
        assert ve_of_r(0.0) == pytest.approx(VE_AT_ZERO, abs=1e-15)

    def test_total_function_no_overflow(self):
        vals = ve_of_r(np.array([-1e6, -10.0, 0.0, 0.5, 10.0, 1e6]))
        assert np.all(np.isfinite(vals))
        assert np.all(vals > -3.72e-6 - 1e-18)
        assert np.all(vals < 1.0)

    def test_strictly_decreasing(self):
        r = np.linspace(-0.5, 2.0, 400)
        v = ve_of_r(r)
        assert np.all(np.diff(v) < 0)


class TestCompositionWithFlux:
    def test_symmetric_center(self):
        p = ModelParams(q_g=0.1, v_g=0.2)
        assert ve_of_v(p, 0.2) == pytest.approx(0.5 - 3.72e-6, abs=1e-15)

    def test_v_and_vg_interchangeable(self):
        p1 = ModelParams(q_g=0.17, v_g=0.28)
        p2 = ModelParams(q_g=0.17, v_g=0.05)
        assert ve_of_v(p1, 0.05) == ve_of_v(p2, 0.28)

    def test_cusp_fixed_point(self):
        p = ModelParams(q_g=0.316762381, v_g=0.752937578)
        assert ve_of_v(p, 0.300464598) == pytest.approx(0.300464598, abs=1e-8)

    def test_domain_error(self):
        p = ModelParams(q_g=0.1, v_g=-0.5)
        with pytest.raises(DomainError):
            ve_of_v(p, 0.2)
        with pytest.raises(DomainError):
            ve_derivs(p, 0.2, 1)

    def test_strictly_increasing_in_v(self):
        p = ModelParams(q_g=0.2, v_g=0.1)
        v = np.linspace(0.0, 1.0, 300)
        assert np.all(np.diff(ve_of_v(p, v)) > 0)


class TestDerivatives:
    def test_orders_against_finite_differences(self):
        rng = np.random.default_rng(7)
        p = ModelParams(q_g=0.15, v_g=0.25)
        vs = rng.uniform(0.02, 0.9, 120)
        h = 1e-4
        for v in vs:
            f = lambda x: ve_of_v(p, x)
            fd1 = (f(v + h) - f(v - h)) / (2 * h)
            fd2 = (f(v + h) - 2 * f(v) + f(v - h)) / h**2
            fd3 = (f(v + 2 * h) - 2 * f(v + h) + 2 * f(v - h) - f(v - 2 * h)) / (2 * h**3)
            scale1 = max(abs(fd1), 1.0)
            assert ve_derivs(p, v, 1) == pytest.approx(fd1, abs=1e-6 * scale1)
            assert ve_derivs(p, v, 2) == pytest.approx(fd2, rel=1e-4, abs=1e-4)
            assert ve_derivs(p, v, 3) == pytest.approx(fd3, rel=5e-4, abs=5e-2)

    def test_fd_error_is_second_order(self):
        p = ModelParams(q_g=0.15, v_g=0.25)
        v = 0.31
        exact = ve_derivs(p, v, 1)
        errs = []
        for h in (1e-3, 5e-4, 2.5e-4):
            fd = (ve_of_v(p, v + h) - ve_of_v(p, v - h)) / (2 * h)
            errs.append(abs(fd - exact))
        assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.2)
        assert errs[1] / errs[2] == pytest.approx(4.0, rel=0.2)

    def test_invalid_order(self):
        p = ModelParams()
        with pytest.raises(ValueError):
            ve_derivs(p, 0.3, 4)

    def test_mixed_partial_against_fd(self):
        p = ModelParams(q_g=0.15, v_g=0.25)
        v = 0.4
        h = 1e-6
        fd = (ve_derivs(p.with_values(q_g=p.q_g + h), v, 1)
              - ve_derivs(p.with_values(q_g=p.q_g - h), v, 1)) / (2 * h)
        assert ve_dq_dv(p, v) == pytest.approx(fd, rel=1e-6)


class TestRhs:
    def test_vanishes_at_equilibrium(self):
        # residual 2.1e-10 at the published family-A point propagates
        # through the relaxation term only
        p = params_at(FAMILY_A)
        out = rhs(p, (FAMILY_A["v_c"], 0.0))
        assert out[0] == 0.0
        assert abs(out[1]) < 1e-12

    def test_zero_damping_when_theta_matches(self):
        p = ModelParams(q_g=0.14, v_g=0.2, theta0=0.36)
        v, y = 0.4, 0.07  # v + v_g = 0.6, theta0 = 0.6^2
        out = rhs(p, (v, y))
        expected = -p.mu * p.q_g * (ve_of_v(p, v) - v) / (v + p.v_g)
        assert out[1] == pytest.approx(expected, abs=1e-16)

    def test_against_independent_evaluation(self):
        # direct transcription of the two components in mpmath
        mp.mp.dps = 30
        p = ModelParams(q_g=0.15, v_g=0.25, theta0=0.2)
        v, y = mp.mpf("0.37"), mp.mpf("-0.045")
        u = v + mp.mpf("0.25")
        ve = mp_ve(mp.mpf("0.15") / u)
        dy = (mp.mpf("0.2") * mp.mpf("0.15") * (1 - mp.mpf("0.2") / u**2) * y
              - (1 / mp.mpf(700)) * mp.mpf("0.15") * (ve - v) / u)
        out = rhs(p, (0.37, -0.045))
        assert out[0] == pytest.approx(-0.045, abs=1e-18)
        assert out[1] == pytest.approx(float(dy), abs=1e-14)

    def test_jacobian_against_fd(self):
        p = ModelParams(q_g=0.13, v_g=0.21, theta0=0.16)
        v, y = 0.3, 0.02
        J = rhs_jacobian(p, v, y)
        h = 1e-7
        fd_v = (rhs(p, (v + h, y)) - rhs(p, (v - h, y))) / (2 * h)
        fd_y = (rhs(p, (v, y + h)) - rhs(p, (v, y - h))) / (2 * h)
        assert np.allclose(J[:, 0], fd_v, rtol=1e-6, atol=1e-10)
        assert np.allclose(J[:, 1], fd_y, rtol=1e-6, atol=1e-10)

    @pytest.mark.parametrize("name", ["q_g", "v_g"])
    def test_param_derivs_against_fd(self, name):
        p = ModelParams(q_g=0.13, v_g=0.21, theta0=0.16)
        v, y = 0.3, 0.02
        h = 1e-7
        d = rhs_param_derivs(p, v, y, name)
        fd = (rhs(p.with_values(**{name: getattr(p, name) + h}), (v, y))
              - rhs(p.with_values(**{name: getattr(p, name) - h}), (v, y))) / (2 * h)
        assert np.allclose(d, fd, rtol=1e-6, atol=1e-10)


class TestNondimensionalization:
    def test_reference_constants(self, consts):
        assert consts.lam == pytest.approx(0.2, abs=1e-15)
        assert consts.mu == pytest.approx(1.0 / 700.0, rel=1e-15)
        assert consts.theta0 == pytest.approx(0.16, abs=1e-15)

    def test_tau_is_stored_in_hours(self):
        # 30 s = 1/120 h is what makes mu come out to 1/700
        c = PhysicalConstants(tau=30.0 / 3600.0)
        assert c.mu == pytest.approx(1.0 / 700.0, rel=1e-15)

    def test_from_physical_consistency(self, consts):
        p = ModelParams.from_physical(consts, q_g=0.1, v_g=0.3)
        assert p.consistent_with(consts)
        assert p.theta0 == pytest.approx(0.16)

    def test_positivity_enforced(self):
        with pytest.raises(ValueError):
            PhysicalConstants(rho_max=-1.0)
        with pytest.raises(ValueError):
            ModelParams(q_g=0.0)
