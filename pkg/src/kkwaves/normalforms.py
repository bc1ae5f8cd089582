"""Normal-form quantities at Hopf and Takens-Bogdanov points.

The first Lyapunov coefficient is computed two independent ways: a closed
form in terms of ve' and ve'' at the equilibrium, and the full
normal-form reduction through the bilinear/trilinear terms of the Taylor
expansion and the complex coefficients g20, g11, g21. The two routes must
agree to 1e-10 relative; their disagreement is reported, never hidden.

All Hopf quantities enforce the variance convention theta0 = (v_c+v_g)^2
internally (the linear damping b vanishes there, so the equilibrium has
purely imaginary eigenvalues +-i*omega0).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .curves import BifurcationCurve
from .equilibria import (
    CuspPoint,
    FoldBranch,
    _cusp_r,
    _newton_bisect,
    cusp_point,
    fold_qg_of_r,
    fold_u_of_r,
    fold_vg_bounds,
    interior_equilibrium,
)
from .model import ModelParams, ve_dq_dv, ve_derivs, ve_of_r, ve_of_r_derivs, ve_of_v

OMEGA0_MIN = 1e-6  # refuse l1 evaluation below this frequency


class NearBogdanovTakens(ValueError):
    """l1 diverges like 1/omega0^3; evaluation this close to a BT point is refused."""


@dataclass(frozen=True)
class HopfData:
    omega0: float
    ell1: float
    g20: complex
    g11: complex
    g21: complex


@dataclass(frozen=True)
class DbtData:
    a3: float
    b2: float
    saddle_case: bool


def _hopf_setup(p: ModelParams, v_c: float) -> tuple[float, float]:
    """(u, omega0) at the equilibrium, checking ve'(v_c) > 1."""
    u = v_c + p.v_g
    ve1 = ve_derivs(p, v_c, 1)
    if not ve1 > 1.0:
        raise ValueError(f"ve'(v_c)={ve1} must exceed 1 for a Hopf point")
    om2 = p.mu * p.q_g * (ve1 - 1.0) / u
    return u, float(np.sqrt(om2))


def omega0(p: ModelParams, v_c: float) -> float:
    """Hopf frequency: omega0^2 = mu*q_g*(ve'(v_c)-1)/(v_c+v_g)."""
    return _hopf_setup(p, v_c)[1]


def lyapunov_l1(p: ModelParams, v_c: float) -> float:
    """First Lyapunov coefficient at (v_c, 0), closed form.

    Negative means the bifurcating cycle is stable (supercritical Hopf).
    """
    u, om = _hopf_setup(p, v_c)
    if om < OMEGA0_MIN:
        raise NearBogdanovTakens(
            f"omega0={om:.3e} < {OMEGA0_MIN}: too close to a BT point for l1")
    ve1 = ve_derivs(p, v_c, 1)
    ve2 = ve_derivs(p, v_c, 2)
    pref = -p.lam * p.mu * p.q_g**2 / (2.0 * om**3 * u**2)
    return pref * ((ve1 - 1.0) / u + ve2)


def lyapunov_l1_via_g(p: ModelParams, v_c: float) -> HopfData:
    """First Lyapunov coefficient through the normal-form coefficients.

    Builds the quadratic and cubic terms B, C of the Taylor expansion at
    the equilibrium (their first components vanish identically), projects
    onto the eigenvectors q = (1, i*omega0), pbar = (1, i/omega0)/2 with
    <p, q> = 1, and evaluates

        l1 = Re(i*g20*g11 + omega0*g21) / (2*omega0^2).
    """
    u, om = _hopf_setup(p, v_c)
    if om < OMEGA0_MIN:
        raise NearBogdanovTakens(
            f"omega0={om:.3e} < {OMEGA0_MIN}: too close to a BT point for l1")
    ve2 = ve_derivs(p, v_c, 2)
    ve3 = ve_derivs(p, v_c, 3)
    h = 1.0 / u
    theta = u * u  # Hopf convention theta0 = (v_c+v_g)^2

    # second/third partials of the y' component at the equilibrium
    f_vv = (2.0 * om**2 - p.mu * p.q_g * ve2) / u
    f_vy = 2.0 * p.lam * p.q_g * h
    f_vvv = ((3.0 * p.mu * p.q_g * ve2 / u) - p.mu * p.q_g * ve3
             - 6.0 * om**2 / u) / u
    f_vvy = -6.0 * p.lam * p.q_g * h**4 * theta

    def B2(x1, x2, y1, y2):
        return f_vv * x1 * y1 + f_vy * (x1 * y2 + y1 * x2)

    def C2(x1, x2, y1, y2, z1, z2):
        return (f_vvv * x1 * y1 * z1
                + f_vvy * (x1 * y1 * z2 + x2 * y1 * z1 + x1 * y2 * z1))

    q1, q2 = 1.0, 1j * om
    pbar2 = -0.5j / om  # conj of the adjoint eigenvector's 2nd component

    g20 = pbar2 * B2(q1, q2, q1, q2)
    g11 = pbar2 * B2(q1, q2, np.conj(q1), np.conj(q2))
    g21 = pbar2 * C2(q1, q2, q1, q2, np.conj(q1), np.conj(q2))
    ell1 = float(np.real(1j * g20 * g11 + om * g21) / (2.0 * om**2))
    return HopfData(omega0=om, ell1=ell1, g20=complex(g20), g11=complex(g11),
                    g21=complex(g21))


def l1_at_params(p: ModelParams, refuse_near_bt: bool = True) -> float:
    """l1 at the interior equilibrium of (q_g, v_g), BT variance convention."""
    e = interior_equilibrium(p)
    if not refuse_near_bt:
        u, om = _hopf_setup(p, e.v_c)
        ve1 = ve_derivs(p, e.v_c, 1)
        ve2 = ve_derivs(p, e.v_c, 2)
        return -p.lam * p.mu * p.q_g**2 / (2 * om**3 * u**2) * ((ve1 - 1) / u + ve2)
    return lyapunov_l1(p, e.v_c)


def _l1_bracket_expr(q_g: float, v_g: float) -> float:
    """(ve'(v_c)-1)/u + ve''(v_c) at the interior root; same zero set as l1.

    l1 = -(positive prefactor) * this expression, so root finding on it
    avoids the 1/omega0^3 blowup near the fold curve.
    """
    p = ModelParams(q_g=q_g, v_g=v_g)
    e = interior_equilibrium(p)
    u = e.v_c + v_g
    return (ve_derivs(p, e.v_c, 1) - 1.0) / u + ve_derivs(p, e.v_c, 2)


def gh_vg_of_qg(q_g: float, xtol: float = 1e-15) -> float:
    """v_g on the Bautin locus l1 = 0 at fixed q_g, by bracketed root finding.

    The bracket spans the cusp-region interior between the two fold
    branches, where the expression runs from negative (lower) to positive
    (upper) and crosses zero exactly once.
    """
    lo, hi = fold_vg_bounds(q_g)
    span = hi - lo
    for inset in (1e-6, 1e-4, 1e-3, 1e-2):
        a = lo + inset * span
        b = hi - inset * span
        try:
            fa = _l1_bracket_expr(q_g, a)
            fb = _l1_bracket_expr(q_g, b)
        except ValueError:
            continue
        if fa * fb < 0:
            return brentq(lambda vg: _l1_bracket_expr(q_g, vg), a, b,
                          xtol=xtol, rtol=8.9e-16)
    raise RuntimeError(f"could not bracket the l1=0 crossing at q_g={q_g}")


def gh_curve(q_g_range: tuple[float, float] | None = None, n_points: int = 100,
             lam: float = 0.2, mu: float = 1.0 / 700.0) -> BifurcationCurve:
    """The Bautin (generalized Hopf) locus l1(q_g, v_g) = 0.

    Sampled in q_g up to the cusp flux q_g*; the curve limits to the cusp
    point K. Each returned point records the residual l1 value.
    """
    K = cusp_point()
    if q_g_range is None:
        q_g_range = (0.02, K.q_g)
    q_lo, q_hi = q_g_range
    if not 0.0 < q_lo <= q_hi <= K.q_g + 1e-12:
        raise ValueError(f"q_g_range must lie within (0, {K.q_g:.9f}]")

    curve = BifurcationCurve(kind="gh", meta={"lam": lam, "mu": mu})
    for q in np.linspace(q_lo, min(q_hi, K.q_g * (1 - 1e-9)), n_points):
        try:
            v_g = gh_vg_of_qg(float(q))
        except (RuntimeError, ValueError):
            continue
        p = ModelParams(lam=lam, mu=mu, q_g=float(q), v_g=v_g)
        e = interior_equilibrium(p)
        try:
            ell1 = lyapunov_l1(p, e.v_c)
        except NearBogdanovTakens:
            ell1 = np.nan
        curve.points.append({"q_g": float(q), "v_g": v_g, "v_c": e.v_c,
                             "ell1": ell1})
    return curve


def gh_point_from_r(r: float) -> tuple[float, float]:
    """(q_g, v_g) on the Bautin locus from its scaled-density parametrization.

    On l1 = 0 the equilibrium satisfies u = ve_r'(r)*r + ve_r''(r)*r^2;
    independent of the production root-finding route, used to cross-check it.
    """
    u = float(ve_of_r_derivs(r, 1) * r + ve_of_r_derivs(r, 2) * r**2)
    if u <= 0:
        raise ValueError(f"r={r} is outside the Bautin locus parametrization")
    return u * r, u - float(ve_of_r(r))


def bt_nondegeneracy(p: ModelParams, v_c: float, fold_tol: float = 1e-8) -> tuple[float, float]:
    """(ve''(v_c), d^2 ve/(dq_g dv)) at a fold point; both must be nonzero
    for a nondegenerate Takens-Bogdanov point."""
    if abs(ve_of_v(p, v_c) - v_c) > fold_tol or abs(ve_derivs(p, v_c, 1) - 1.0) > fold_tol:
        raise ValueError("point does not satisfy the fold conditions")
    return ve_derivs(p, v_c, 2), ve_dq_dv(p, v_c)


def dbt_coefficients(cusp: CuspPoint, lam: float = 0.2,
                     mu: float = 1.0 / 700.0) -> DbtData:
    """Cubic normal-form coefficients at the degenerate TB point.

    a3 = -mu*q_g*ve'''(v_c)/(6*(v_c+v_g)), b2 = 2*lam*q_g/(v_c+v_g);
    a3 > 0 is the saddle case of the codimension-three unfolding.
    """
    p = ModelParams(lam=lam, mu=mu, q_g=cusp.q_g, v_g=cusp.v_g)
    if (abs(ve_of_v(p, cusp.v_c) - cusp.v_c) > 1e-8
            or abs(ve_derivs(p, cusp.v_c, 1) - 1.0) > 1e-6
            or abs(ve_derivs(p, cusp.v_c, 2)) > 1e-5):
        raise ValueError("cusp record does not satisfy the cusp conditions")
    u = cusp.v_c + cusp.v_g
    a3 = -mu * cusp.q_g * ve_derivs(p, cusp.v_c, 3) / (6.0 * u)
    b2 = 2.0 * lam * cusp.q_g / u
    return DbtData(a3=float(a3), b2=float(b2), saddle_case=bool(a3 > 0))


# --- Hopf-locus geometry at fixed theta0 ------------------------------------

def hopf_point_at(q_g: float, theta0: float, lam: float = 0.2,
                  mu: float = 1.0 / 700.0) -> tuple[ModelParams, float]:
    """The Hopf point on the fixed-theta0 Hopf locus at given q_g.

    With theta0 fixed, b = 0 forces v_c + v_g = sqrt(theta0), so the locus
    is the explicit graph v_g = sqrt(theta0) - ve_r(q_g/sqrt(theta0)).
    Returns the parameter record and the equilibrium v_c.
    """
    u = float(np.sqrt(theta0))
    v_c = float(ve_of_r(q_g / u))
    p = ModelParams(lam=lam, mu=mu, theta0=theta0, q_g=q_g, v_g=u - v_c)
    if not ve_derivs(p, v_c, 1) > 1.0:
        raise ValueError(f"q_g={q_g} is outside the Hopf locus for theta0={theta0}")
    return p, v_c


def bt_points_at_theta0(theta0: float) -> list[dict]:
    """Takens-Bogdanov points of the fold curve for a fixed theta0.

    These are the fold points where (v_c+v_g)^2 = theta0; at theta0 below
    the cusp value there is one on each branch, and they bound the
    fixed-theta0 Hopf locus in q_g.
    """
    target = float(np.sqrt(theta0))
    r_star = _cusp_r()
    out = []
    for branch, r_lo, r_hi in ((FoldBranch.LOWER_GAMMA_MINUS, 1e-4, r_star),
                               (FoldBranch.UPPER_GAMMA_PLUS, r_star, 3.0)):
        rr = np.linspace(r_lo, r_hi, 2000)
        uu = fold_u_of_r(rr) - target
        s = np.sign(uu)
        for i in np.nonzero(s[:-1] * s[1:] < 0)[0]:
            f = lambda r: float(fold_u_of_r(r)) - target
            fp = lambda r: float(-ve_of_r_derivs(r, 2) * r - ve_of_r_derivs(r, 1))
            r_sol = _newton_bisect(f, fp, rr[i], rr[i + 1], tol=1e-14)
            u = float(fold_u_of_r(r_sol))
            v_c = float(ve_of_r(r_sol))
            out.append({"q_g": float(fold_qg_of_r(r_sol)), "v_g": u - v_c,
                        "v_c": v_c, "branch": branch, "r": float(r_sol)})
    return sorted(out, key=lambda d: d["q_g"])
