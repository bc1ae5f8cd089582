"""Pseudo-arclength continuation of Hopf curves and limit-cycle families.

Hopf curves at a frozen variance theta0 are traced as the solution set of

    ve(v_c) - v_c = 0,    v_c + v_g - sqrt(theta0) = 0

in (q_g, v_g, v_c); the second equation is the vanishing of the linear
damping b. The curve runs between two Takens-Bogdanov points on the fold
curve, where ve'(v_c) crosses 1, and carries exactly one generalized-Hopf
(Bautin) point where the first Lyapunov coefficient changes sign.

Limit cycles are continued as multiple-shooting boundary-value problems
(see shooting); families of fixed period are traced through (q_g, v_g)
and provide long-period proxies for the homoclinic curve.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .curves import BifurcationCurve, CurveLabel
from .model import (
    ModelParams,
    PhysicalConstants,
    rhs,
    ve_derivs,
    ve_of_r_derivs,
    ve_of_v,
)
from .normalforms import (
    NearBogdanovTakens,
    bt_points_at_theta0,
    hopf_point_at,
    lyapunov_l1,
    omega0,
)
from .shooting import CycleCorrector, LimitCycle, build_cycle, hopf_ellipse_nodes

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class StepPolicy:
    """Arclength step adaptation: grow on easy correctors, shrink on failure."""

    initial: float = 2e-3
    max_step: float = 5e-3
    min_step: float = 1e-6
    grow: float = 1.5
    shrink: float = 0.5
    max_points: int = 2000
    easy_iters: int = 3


@dataclass
class CycleFamily(BifurcationCurve):
    """A BifurcationCurve of cycles; retains the converged cycle objects."""

    cycles: list[LimitCycle] = field(default_factory=list)


# --- Hopf-curve continuation -------------------------------------------------

def _hopf_slave(q_g: float, v_g: float, v_c: float, sqrt_theta0: float,
                tol: float = 1e-12, max_iter: int = 30) -> tuple[float, float]:
    """Solve the Hopf-locus conditions for (v_g, v_c) at fixed q_g.

    The 2x2 Newton matrix has unit determinant identically, so the solve
    is well conditioned even at the BT endpoints.
    """
    for _ in range(max_iter):
        p = ModelParams(q_g=q_g, v_g=v_g)
        F1 = ve_of_v(p, v_c) - v_c
        F2 = v_c + v_g - sqrt_theta0
        if max(abs(F1), abs(F2)) < tol:
            return v_g, v_c
        ve1 = ve_derivs(p, v_c, 1)
        # J = [[ve1, ve1-1], [1, 1]], det = 1
        dv_g = -(F1 - (ve1 - 1.0) * F2)
        dv_c = -(F2 * ve1 - F1)
        v_g += dv_g
        v_c += dv_c
    raise RuntimeError("Hopf slave solve did not converge")


def _hopf_curve_point(q_g: float, v_g: float, v_c: float, lam: float, mu: float,
                      theta0: float) -> dict:
    p = ModelParams(lam=lam, mu=mu, theta0=theta0, q_g=q_g, v_g=v_g)
    ve1 = ve_derivs(p, v_c, 1)
    point = {"q_g": q_g, "v_g": v_g, "v_c": v_c, "ve1": ve1,
             "omega0": np.nan, "ell1": np.nan}
    if ve1 > 1.0:
        point["omega0"] = omega0(p, v_c)
        try:
            point["ell1"] = lyapunov_l1(p, v_c)
        except NearBogdanovTakens:
            pass
    return point


def _refine_bt_on_locus(q_lo: float, q_hi: float, start: dict,
                        sqrt_theta0: float) -> dict:
    """BT endpoint: the q_g in [q_lo, q_hi] where ve'(v_c) = 1 on the locus."""
    v_g, v_c = start["v_g"], start["v_c"]
    state = {"v_g": v_g, "v_c": v_c}

    def slope(q):
        state["v_g"], state["v_c"] = _hopf_slave(q, state["v_g"], state["v_c"],
                                                 sqrt_theta0)
        p = ModelParams(q_g=q, v_g=state["v_g"])
        return ve_derivs(p, state["v_c"], 1) - 1.0

    q_bt = brentq(slope, q_lo, q_hi, xtol=1e-14)
    v_g, v_c = _hopf_slave(q_bt, state["v_g"], state["v_c"], sqrt_theta0)
    return {"q_g": float(q_bt), "v_g": v_g, "v_c": v_c, "ve1": 1.0,
            "omega0": 0.0, "ell1": np.nan}


def _refine_gh_on_locus(q_lo: float, q_hi: float, start: dict, lam: float,
                        mu: float, sqrt_theta0: float,
                        tol: float = 1e-8) -> dict:
    """Bisection in q_g for the sign change of l1 along the Hopf locus."""
    state = {"v_g": start["v_g"], "v_c": start["v_c"]}

    def ell1_at(q):
        state["v_g"], state["v_c"] = _hopf_slave(q, state["v_g"], state["v_c"],
                                                 sqrt_theta0)
        p = ModelParams(lam=lam, mu=mu, q_g=q, v_g=state["v_g"])
        return lyapunov_l1(p, state["v_c"])

    f_lo = ell1_at(q_lo)
    for _ in range(200):
        q_mid = 0.5 * (q_lo + q_hi)
        f_mid = ell1_at(q_mid)
        if abs(f_mid) < tol:
            break
        if f_lo * f_mid < 0:
            q_hi = q_mid
        else:
            q_lo, f_lo = q_mid, f_mid
    else:
        raise RuntimeError("GH bisection stalled")
    v_g, v_c = _hopf_slave(q_mid, state["v_g"], state["v_c"], sqrt_theta0)
    return _hopf_curve_point(q_mid, v_g, v_c, lam, mu, sqrt_theta0**2)


def _hopf_bordered_correct(X_pred: np.ndarray, w: np.ndarray, s_th: float,
                           tol: float = 1e-12, max_iter: int = 25) -> np.ndarray:
    """Bordered Newton for the Hopf-locus system with an arclength row.

    Unknowns X = (q_g, v_g, v_c); equations are the two locus conditions
    plus <w, X - X_pred> = 0.
    """
    X = X_pred.copy()
    for _ in range(max_iter):
        q_g, v_g, v_c = X
        p = ModelParams(q_g=q_g, v_g=v_g)
        u = v_c + v_g
        F = np.array([ve_of_v(p, v_c) - v_c,
                      v_c + v_g - s_th,
                      w @ (X - X_pred)])
        if np.max(np.abs(F)) < tol:
            return X
        ve1 = ve_derivs(p, v_c, 1)
        dve_dq = float(ve_of_r_derivs(q_g / u, 1)) / u
        J = np.array([[dve_dq, ve1, ve1 - 1.0],
                      [0.0, 1.0, 1.0],
                      w])
        X = X - np.linalg.solve(J, F)
    raise RuntimeError("bordered Hopf corrector did not converge")


def continue_hopf(start: dict, step_policy: StepPolicy | None = None,
                  lam: float = 0.2, mu: float = 1.0 / 700.0,
                  theta0: float | None = None) -> BifurcationCurve:
    """Trace the fixed-theta0 Hopf curve through parameter space.

    start must carry q_g, v_g, v_c with v_c + v_g = sqrt(theta0) (a BT
    point of the fold curve, or any Hopf point on the locus); theta0 is
    frozen from the start point unless given. The polyline runs between
    the two BT endpoints, both labeled, with the single GH point labeled
    where the first Lyapunov coefficient changes sign.
    """
    pol = step_policy or StepPolicy()
    u0 = start["v_c"] + start["v_g"]
    th0 = u0**2 if theta0 is None else theta0
    s_th = float(np.sqrt(th0))

    # secant predictor / bordered corrector march; each direction returns
    # its points, the last of which is the first one past the BT endpoint
    def march(q0, v_g0, v_c0, direction):
        pts = []
        ds = pol.initial
        X = np.array([q0, v_g0, v_c0])
        tangent = np.array([direction, 0.0, 0.0])
        while len(pts) < pol.max_points:
            w = tangent / np.linalg.norm(tangent)
            try:
                X_new = _hopf_bordered_correct(X + ds * w, w, s_th)
            except (RuntimeError, ValueError, np.linalg.LinAlgError):
                ds *= pol.shrink
                if ds < pol.min_step:
                    break
                continue
            tangent = X_new - X
            X = X_new
            pts.append(_hopf_curve_point(X[0], X[1], X[2], lam, mu, th0))
            if pts[-1]["ve1"] <= 1.0:
                break  # crossed the BT endpoint
            ds = min(ds * pol.grow, pol.max_step)
        return pts

    p_start = ModelParams(lam=lam, mu=mu, q_g=start["q_g"], v_g=start["v_g"])
    ve1_start = ve_derivs(p_start, start["v_c"], 1)
    fwd = march(start["q_g"], start["v_g"], start["v_c"], +1.0)
    back = march(start["q_g"], start["v_g"], start["v_c"], -1.0)
    points = list(reversed(back))
    if ve1_start > 1.0:
        points.append(_hopf_curve_point(start["q_g"], start["v_g"],
                                        start["v_c"], lam, mu, th0))
    points.extend(fwd)
    interior = [pt for pt in points if pt["ve1"] > 1.0]
    if not interior:
        raise RuntimeError("no Hopf points found from the given start")

    # refine both BT endpoints: ve'(v_c) = 1 bracketed on the locus between
    # the outermost interior point and the first crossed (or offset) one
    def bracket_for(end_pt, neighbors, fallback_off):
        crossed = [pt["q_g"] for pt in neighbors if pt["ve1"] <= 1.0]
        if crossed:
            return crossed[0]
        return end_pt["q_g"] + fallback_off

    lo_pt, hi_pt = interior[0], interior[-1]
    bt_left = _refine_bt_on_locus(
        max(bracket_for(lo_pt, points[:1], -pol.max_step), 1e-9),
        lo_pt["q_g"], lo_pt, s_th)
    bt_right = _refine_bt_on_locus(
        hi_pt["q_g"], bracket_for(hi_pt, points[-1:], pol.max_step),
        hi_pt, s_th)
    points = [bt_left] + interior + [bt_right]

    curve = BifurcationCurve(kind="hopf", points=points,
                             meta={"theta0": th0, "lam": lam, "mu": mu})
    curve.labels.append(CurveLabel(index=0, kind="BT"))
    curve.labels.append(CurveLabel(index=len(points) - 1, kind="BT"))

    # GH: sign changes of l1 between consecutive interior points
    ell = curve.column("ell1")
    for i in range(1, len(points) - 2):
        a, b = ell[i], ell[i + 1]
        if np.isfinite(a) and np.isfinite(b) and a * b < 0:
            gh = _refine_gh_on_locus(points[i]["q_g"], points[i + 1]["q_g"],
                                     points[i], lam, mu, s_th)
            # insert the refined point into the polyline
            points.insert(i + 1, gh)
            curve.labels = [CurveLabel(lab.index + 1 if lab.index > i else lab.index,
                                       lab.kind) for lab in curve.labels]
            curve.labels.append(CurveLabel(index=i + 1, kind="GH"))
            break
    curve.points = points
    curve.labels.sort(key=lambda lab: lab.index)
    return curve


# --- limit cycles ------------------------------------------------------------

def cycle_from_hopf(q_g: float, theta0: float, amplitude_step: float = 0.01,
                    free_param: str = "v_g", M: int = 20,
                    lam: float = 0.2, mu: float = 1.0 / 700.0) -> LimitCycle:
    """Small-amplitude cycle grown off the Hopf point at q_g on the locus.

    Seeds the linear ellipse of amplitude amplitude_step, then corrects
    with the period and one model parameter free; the parameter moves to
    the nearby value where a cycle of that amplitude exists.
    """
    p, v_c = hopf_point_at(q_g, theta0, lam=lam, mu=mu)
    om = omega0(p, v_c)
    if lyapunov_l1(p, v_c) == 0.0:
        raise ValueError("cannot grow a cycle from a degenerate (GH) Hopf point")
    nodes, T = hopf_ellipse_nodes(v_c, om, amplitude_step, M)
    corr = CycleCorrector(M=M)
    tangent = np.array([0.0, -1.0])
    p2, nodes2, T2, mono, res = corr.solve(
        p, nodes, T, free_T=True, free_params=(free_param,),
        phase_ref=(nodes[0], tangent), pin_v=v_c + amplitude_step)
    return build_cycle(p2, nodes2, T2, mono, res)


def _family_point(p: ModelParams, cyc: LimitCycle) -> dict:
    return {"q_g": p.q_g, "v_g": p.v_g, "period": cyc.period,
            "amplitude": cyc.amplitude,
            "multiplier": cyc.floquet_multiplier,
            "stability": cyc.stability.value,
            "min_v": float(cyc.mesh_v.min()), "max_v": float(cyc.mesh_v.max())}


def fixed_period_family(seed_q_g: float, theta0: float, target_period: float,
                        n_steps: int = 25, step: float = 2e-4,
                        max_step: float = 2e-3, M: int = 20,
                        eps_seed: float = 2e-3,
                        lam: float = 0.2, mu: float = 1.0 / 700.0,
                        stop_amplitude: float | None = None) -> CycleFamily:
    """Family of cycles of exactly target_period traced through (q_g, v_g).

    The family anchors at the Hopf point whose linear period matches
    target_period; the anchor is located on the fixed-theta0 locus near
    seed_q_g, a first cycle is corrected at small pinned amplitude, and
    the family is then continued by pseudo-arclength in
    (nodes, q_g, v_g) with the period held fixed. Turning points of q_g
    along the family are labeled LPC.
    """
    bts = [bt for bt in bt_points_at_theta0(theta0)]
    if not bts:
        raise ValueError(f"no BT points at theta0={theta0}")
    q_lo = min(bt["q_g"] for bt in bts)
    q_hi = max(bt["q_g"] for bt in bts)

    def period_mismatch(q):
        p, v_c = hopf_point_at(q, theta0, lam=lam, mu=mu)
        return 2.0 * np.pi / omega0(p, v_c) - target_period

    # the linear period diverges at both BT endpoints and dips in between;
    # anchor on the same side of the dip as the seed
    qs = np.linspace(q_lo + 1e-6, q_hi - 1e-6, 400)
    per = np.array([period_mismatch(q) for q in qs])
    sign_flips = np.nonzero(np.sign(per[:-1]) * np.sign(per[1:]) < 0)[0]
    if len(sign_flips) == 0:
        raise ValueError(
            f"no Hopf anchor with period {target_period} at theta0={theta0}")
    i_anchor = min(sign_flips, key=lambda i: abs(qs[i] - seed_q_g))
    q_anchor = brentq(period_mismatch, qs[i_anchor], qs[i_anchor + 1], xtol=1e-15)

    p, v_c = hopf_point_at(q_anchor, theta0, lam=lam, mu=mu)
    nodes, _ = hopf_ellipse_nodes(v_c, omega0(p, v_c), eps_seed, M)
    corr = CycleCorrector(M=M)
    tangent0 = np.array([0.0, -1.0])
    p, nodes, T, mono, res = corr.solve(
        p, nodes, target_period, free_T=False, free_params=("q_g", "v_g"),
        phase_ref=(nodes[0], tangent0), pin_v=v_c + eps_seed)

    fam = CycleFamily(kind="cycle_family",
                      meta={"period": target_period, "theta0": theta0,
                            "lam": lam, "mu": mu, "anchor_q_g": q_anchor})
    cyc = build_cycle(p, nodes, T, mono, res)
    fam.points.append(_family_point(p, cyc))
    fam.cycles.append(cyc)

    def pack(nodes, p):
        return np.concatenate([nodes.ravel(), [p.q_g, p.v_g]])

    X_prev = pack(nodes, p)
    # second point: grow the pinned amplitude slightly to get a secant
    p2, nodes2, T2, mono2, res2 = corr.solve(
        p, nodes, target_period, free_T=False, free_params=("q_g", "v_g"),
        phase_ref=(nodes[0], rhs(p, nodes[0]) / np.linalg.norm(rhs(p, nodes[0]))),
        pin_v=float(nodes[0, 0]) + eps_seed)
    cyc2 = build_cycle(p2, nodes2, T2, mono2, res2)
    fam.points.append(_family_point(p2, cyc2))
    fam.cycles.append(cyc2)
    X = pack(nodes2, p2)
    p, nodes = p2, nodes2

    ds = step
    fails = 0
    while len(fam.points) < n_steps:
        w = X - X_prev
        w /= np.linalg.norm(w)
        X_pred = X + ds * w
        nodes_pred = X_pred[:2 * M].reshape(M, 2)
        p_pred = p.with_values(q_g=float(X_pred[-2]), v_g=float(X_pred[-1]))
        t0 = rhs(p, nodes[0])
        t0 /= np.linalg.norm(t0)
        try:
            p_new, nodes_new, T_new, mono, res = corr.solve(
                p_pred, nodes_pred, target_period, free_T=False,
                free_params=("q_g", "v_g"),
                phase_ref=(nodes[0], t0),
                arclength=(w, X, ds))
        except (RuntimeError, ValueError) as exc:
            ds *= 0.5
            fails += 1
            if ds < 1e-7 or fails > 40:
                log.warning("fixed-period family stopped early: %s", exc)
                break
            continue
        fails = 0
        X_prev, X = X, pack(nodes_new, p_new)
        p, nodes = p_new, nodes_new
        cyc = build_cycle(p, nodes, T_new, mono, res)
        fam.points.append(_family_point(p, cyc))
        fam.cycles.append(cyc)
        ds = min(ds * 1.3, max_step)
        if stop_amplitude is not None and cyc.amplitude >= stop_amplitude:
            break
        if cyc.amplitude < 0.25 * eps_seed:
            break  # collapsed back onto the Hopf locus

    # LPC: turning points of q_g along the family
    q_col = fam.column("q_g")
    dq = np.diff(q_col)
    for i in np.nonzero(dq[:-1] * dq[1:] < 0)[0]:
        fam.labels.append(CurveLabel(index=int(i + 1), kind="LPC"))
    return fam


def continue_cycle_fixed_period(c: LimitCycle, target_period: float,
                                param_path: str = "q_g", n_steps: int = 25,
                                **kw) -> CycleFamily:
    """Fixed-period family through (q_g, v_g) seeded from an existing cycle.

    If the cycle's period differs from target_period, it is first walked
    to the target by a bounded secant iteration in param_path with the
    period left free, then handed to the arclength family tracer.
    """
    M = c.nodes.shape[0]
    corr = CycleCorrector(M=M)
    p, nodes, T = c.params, c.nodes, c.period
    for _ in range(60):
        if abs(T - target_period) <= 1e-9 * target_period:
            break
        # Newton in the pinned-amplitude BVP with T fixed at a value moved
        # a bounded fraction toward the target
        T_goal = T + np.clip(target_period - T, -0.05 * T, 0.05 * T)
        t0 = rhs(p, nodes[0])
        t0 /= np.linalg.norm(t0)
        p, nodes, T, mono, res = corr.solve(
            p, nodes, T_goal, free_T=False, free_params=(param_path,),
            phase_ref=(nodes[0], t0))
    else:
        raise RuntimeError("could not reach the target period")
    seed = fixed_period_family(p.q_g, p.theta0, target_period,
                               n_steps=n_steps, M=M, **kw)
    return seed


def homoclinic_approx(bt: dict, period_cap: float = 2400.0,
                      ladder: tuple[float, ...] | None = None,
                      n_steps: int = 18, **kw) -> CycleFamily:
    """Long-period proxy for the homoclinic curve emerging from a BT point.

    Traces fixed-period families for a ladder of periods up to period_cap
    and returns the longest-period family, documented as an approximation;
    the shorter families are kept in meta["ladder"] so convergence of the
    proxy can be inspected.
    """
    theta0 = (bt["v_c"] + bt["v_g"]) ** 2
    if ladder is None:
        ladder = (period_cap / 4.0, period_cap / 2.0, period_cap)
    fams = []
    for T in ladder:
        fams.append(fixed_period_family(bt["q_g"], theta0, T,
                                        n_steps=n_steps, **kw))
    proxy = fams[-1]
    proxy.meta["is_homoclinic_proxy"] = True
    proxy.meta["period_cap"] = period_cap
    proxy.meta["ladder"] = fams[:-1]
    return proxy


def resonant_road_length(c: LimitCycle, m: int,
                         consts: PhysicalConstants | None = None) -> float:
    """Road length (km) carrying m bumps of this cycle: m*T/rho_max."""
    if m < 1 or int(m) != m:
        raise ValueError("m must be a positive integer")
    rho_max = (consts or PhysicalConstants()).rho_max
    return m * c.period / rho_max
