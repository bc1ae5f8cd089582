"""Hopf frequency, both Lyapunov-coefficient routes, GH curve, BT/DBT data."""

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from kkwaves.equilibria import (
    cusp_point,
    fold_curve,
    fold_vg_bounds,
    interior_equilibrium,
)
from kkwaves.model import ModelParams, rhs, ve_derivs
from kkwaves.normalforms import (
    NearBogdanovTakens,
    bt_nondegeneracy,
    bt_points_at_theta0,
    dbt_coefficients,
    gh_curve,
    gh_point_from_r,
    gh_vg_of_qg,
    hopf_point_at,
    l1_at_params,
    lyapunov_l1,
    lyapunov_l1_via_g,
    omega0,
)

from conftest import FAMILY_A, FAMILY_B, params_at

# closed-form l1 at the published Hopf points, frozen from a 40-digit
# mpmath evaluation of the formula
L1_FAMILY_A = -3171.254156921371
L1_FAMILY_B = -12.43600250901193
OMEGA0_FAMILY_A = 0.0042745455512995740
OMEGA0_FAMILY_B = 0.0239257081366569694


def delta_samples(n, region, rng_seed=11):
    """Deterministic points of the upper (+1) or lower (-1) cusp subregion."""
    rng = np.random.default_rng(rng_seed)
    out = []
    while len(out) < n:
        q = rng.uniform(0.03, 0.312)
        lo, hi = fold_vg_bounds(q)
        v_gh = gh_vg_of_qg(q)
        if region > 0:
            vg = v_gh + rng.uniform(0.08, 0.92) * (hi - v_gh)
        else:
            vg = lo + rng.uniform(0.08, 0.92) * (v_gh - lo)
        out.append((q, vg))
    return out


class TestOmega0:
    def test_family_a_value(self):
        p = params_at(FAMILY_A)
        assert omega0(p, FAMILY_A["v_c"]) == pytest.approx(OMEGA0_FAMILY_A, rel=1e-12)

    def test_matches_eigenvalues(self):
        from kkwaves.equilibria import classify
        for point in (FAMILY_A, FAMILY_B):
            p = params_at(point)
            om = omega0(p, point["v_c"])
            e = classify(p, point["v_c"], resid_tol=1e-8)
            assert abs(e.eigenvalues[0].imag) == pytest.approx(om, rel=1e-12)

    def test_bt_limit(self):
        # omega0 -> 0 as the slope excess vanishes along the Hopf locus
        bts = bt_points_at_theta0(0.16)
        q_bt = bts[-1]["q_g"]
        oms = []
        for dq in (1e-3, 1e-4, 1e-5):
            p, v_c = hopf_point_at(q_bt - dq, 0.16)
            oms.append(omega0(p, v_c))
        assert oms[0] > oms[1] > oms[2]
        assert oms[2] < 1e-3

    def test_requires_slope_above_one(self):
        p = params_at(FAMILY_B)
        saddle_v = 0.0012222740  # outer root, ve' < 1
        with pytest.raises(ValueError):
            omega0(p, saddle_v)


class TestLyapunovClosedForm:
    def test_published_points(self):
        pa = params_at(FAMILY_A)
        pb = params_at(FAMILY_B)
        assert lyapunov_l1(pa, FAMILY_A["v_c"]) == pytest.approx(L1_FAMILY_A, rel=1e-12)
        assert lyapunov_l1(pb, FAMILY_B["v_c"]) == pytest.approx(L1_FAMILY_B, rel=1e-12)

    def test_both_published_points_are_stable_side(self):
        assert lyapunov_l1(params_at(FAMILY_A), FAMILY_A["v_c"]) < 0
        assert lyapunov_l1(params_at(FAMILY_B), FAMILY_B["v_c"]) < 0

    def test_zero_on_gh_locus(self):
        q = 0.15
        vg = gh_vg_of_qg(q)
        assert abs(l1_at_params(ModelParams(q_g=q, v_g=vg))) < 1e-10

    def test_positive_below_gh(self):
        for q, vg in delta_samples(10, region=-1):
            assert l1_at_params(ModelParams(q_g=q, v_g=vg)) > 0

    def test_near_bt_guard(self):
        bts = bt_points_at_theta0(0.16)
        p, v_c = hopf_point_at(bts[-1]["q_g"] - 1e-12, 0.16)
        with pytest.raises(NearBogdanovTakens):
            lyapunov_l1(p, v_c)


class TestLyapunovGRoute:
    def test_two_routes_agree_at_published_points(self):
        for point in (FAMILY_A, FAMILY_B):
            p = params_at(point)
            a = lyapunov_l1(p, point["v_c"])
            b = lyapunov_l1_via_g(p, point["v_c"]).ell1
            assert abs(a - b) <= 1e-10 * abs(a)

    def test_two_routes_agree_on_100_interior_points(self):
        rng = np.random.default_rng(5)
        n_checked = 0
        while n_checked < 100:
            q = rng.uniform(0.03, 0.312)
            lo, hi = fold_vg_bounds(q)
            vg = lo + rng.uniform(0.1, 0.9) * (hi - lo)
            p = ModelParams(q_g=q, v_g=vg)
            e = interior_equilibrium(p)
            a = lyapunov_l1(p, e.v_c)
            b = lyapunov_l1_via_g(p, e.v_c).ell1
            assert abs(a - b) <= 1e-10 * abs(a), (q, vg)
            n_checked += 1

    def test_g11_purely_imaginary_with_expected_value(self):
        p = params_at(FAMILY_B)
        v_c = FAMILY_B["v_c"]
        hd = lyapunov_l1_via_g(p, v_c)
        assert hd.g11.real == pytest.approx(0.0, abs=1e-18)
        u = v_c + p.v_g
        om = hd.omega0
        ve2 = ve_derivs(p, v_c, 2)
        expected = -(2 * om**2 - p.mu * p.q_g * ve2) / (2 * om * u)
        assert hd.g11.imag == pytest.approx(expected, rel=1e-12)

    def test_eigenvector_normalization(self):
        p = params_at(FAMILY_B)
        om = omega0(p, FAMILY_B["v_c"])
        q = np.array([1.0, 1j * om])
        pvec = 0.5 * np.array([1.0, 1j / om])
        assert np.conj(pvec) @ q == pytest.approx(1.0, abs=1e-15)


class TestGhCurve:
    def test_limits_to_cusp(self):
        # linear approach: |h(q) - v_g*| tracks q* - q
        K = cusp_point()
        d4 = abs(gh_vg_of_qg(K.q_g * (1 - 1e-4)) - K.v_g)
        d3 = abs(gh_vg_of_qg(K.q_g * (1 - 1e-3)) - K.v_g)
        assert d4 < 1e-3
        assert d4 < 0.2 * d3

    def test_residuals_on_curve(self):
        curve = gh_curve(q_g_range=(0.05, 0.31), n_points=12)
        assert len(curve) == 12
        for pt in curve.points:
            assert abs(pt["ell1"]) < 1e-10

    def test_matches_r_parametrization(self):
        # independent route: the locus parametrized by scaled density
        for r in (0.281, 0.29, 0.298):
            q, vg = gh_point_from_r(r)
            assert gh_vg_of_qg(q) == pytest.approx(vg, abs=1e-12)

    def test_monotone_l1_crossing_on_vertical_lines(self):
        # l1 decreases through zero in v_g: negative above, positive below,
        # at most one sign change per line
        for q in np.linspace(0.04, 0.3, 20):
            lo, hi = fold_vg_bounds(q)
            vgh = gh_vg_of_qg(q)
            vgs = np.linspace(lo + 0.05 * (hi - lo), hi - 0.05 * (hi - lo), 25)
            vals = np.array([l1_at_params(ModelParams(q_g=q, v_g=v)) for v in vgs])
            signs = np.sign(vals)
            flips = np.nonzero(signs[:-1] != signs[1:])[0]
            assert len(flips) == 1
            assert np.all(vals[vgs < vgh] > 0)
            assert np.all(vals[vgs > vgh] < 0)


class TestBtNondegeneracy:
    def test_degenerate_at_cusp(self):
        K = cusp_point()
        p = ModelParams(q_g=K.q_g, v_g=K.v_g)
        ve2, mixed = bt_nondegeneracy(p, K.v_c)
        assert abs(ve2) < 1e-9
        assert abs(mixed) > 1e-3

    def test_nonzero_along_lower_branch(self):
        pts = [fp for fp in fold_curve(q_g_range=(0.05, 0.30), n_points=10)
               if fp.branch.value == "gamma_minus"][:10]
        for fp in pts:
            if abs(fp.q_g - cusp_point().q_g) < 1e-6:
                continue
            p = ModelParams(q_g=fp.q_g, v_g=fp.v_g)
            ve2, mixed = bt_nondegeneracy(p, fp.v_c)
            assert abs(ve2) > 1e-3
            assert abs(mixed) > 1e-3

    def test_mixed_partial_against_fd(self):
        fp = [f for f in fold_curve(q_g_range=(0.2, 0.2), n_points=1)
              if f.branch.value == "gamma_minus"][0]
        p = ModelParams(q_g=fp.q_g, v_g=fp.v_g)
        _, mixed = bt_nondegeneracy(p, fp.v_c)
        h = 1e-6
        fd = (ve_derivs(p.with_values(q_g=p.q_g + h), fp.v_c, 1)
              - ve_derivs(p.with_values(q_g=p.q_g - h), fp.v_c, 1)) / (2 * h)
        assert mixed == pytest.approx(fd, abs=1e-6)

    def test_precondition(self):
        p = params_at(FAMILY_B)
        with pytest.raises(ValueError):
            bt_nondegeneracy(p, FAMILY_B["v_c"])


class TestDbtCoefficients:
    def test_saddle_case(self):
        d = dbt_coefficients(cusp_point())
        assert d.a3 > 0
        assert d.b2 > 0
        assert d.saddle_case is True

    def test_arithmetic_from_published_inputs(self):
        # a3 = -(1/700)(0.316762381)(-11.317691591)/(6*1.053402176)
        expected_a3 = -(1.0 / 700.0) * 0.316762381 * (-11.317691591) \
            / (6.0 * 1.053402176)
        d = dbt_coefficients(cusp_point())
        assert d.a3 == pytest.approx(expected_a3, rel=1e-8)
        expected_b2 = 2.0 * 0.2 * 0.316762381 / 1.053402176
        assert d.b2 == pytest.approx(expected_b2, rel=1e-8)

    def test_rejects_non_cusp(self):
        from kkwaves.equilibria import CuspPoint
        with pytest.raises(ValueError):
            dbt_coefficients(CuspPoint(q_g=0.2, v_g=0.3, v_c=0.3, theta_BT=0.36))


class TestSignRegions:
    def test_negative_on_upper_positive_on_lower(self):
        for q, vg in delta_samples(100, region=+1, rng_seed=23):
            assert l1_at_params(ModelParams(q_g=q, v_g=vg)) < 0, (q, vg)
        for q, vg in delta_samples(100, region=-1, rng_seed=29):
            assert l1_at_params(ModelParams(q_g=q, v_g=vg)) > 0, (q, vg)


class TestAmplitudeOracle:
    def test_supercritical_cycle_attracts_from_both_sides(self):
        # below the Hopf locus in the stable region the focus is unstable
        # and a stable cycle surrounds it; direct time integration started
        # inside and outside must converge to the same amplitude
        p = ModelParams(q_g=0.129876055, v_g=0.171062221, theta0=0.16)
        e = interior_equilibrium(p)
        assert e.b > 0  # unstable focus inside the cycle
        T = 262.62

        def amp_after(r0, spins):
            sol = solve_ivp(lambda z, s: rhs(p, s), (0, spins * T),
                            [e.v_c + r0, 0.0], rtol=1e-10, atol=1e-12,
                            dense_output=True)
            zs = np.linspace((spins - 3) * T, spins * T, 600)
            vs = sol.sol(zs)[0]
            return 0.5 * (vs.max() - vs.min())

        inner = amp_after(0.005, 70)
        outer = amp_after(0.12, 50)
        assert inner > 0.045         # grew away from the unstable focus
        assert outer < 0.10          # decayed toward the cycle
        assert inner == pytest.approx(outer, rel=0.1)
