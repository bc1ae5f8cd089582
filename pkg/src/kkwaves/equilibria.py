"""Critical points of the traveling-wave ODE and the fold curve gamma.

Equilibria are roots of ve(v) - v at y = 0. The fold curve gamma is the
locus where additionally ve'(v_c) = 1 (saddle-node of equilibria); its two
branches meet at the cusp K, where ve''(v_c) = 0 as well.

Internally gamma is parametrized by the scaled density r: on the fold
locus u = v_c + v_g = -ve_r'(r)*r and q_g = u*r, which turns branch
tracking near the cusp into bracketed scalar root finding in r and removes
the fold of the fold curve from the continuation problem.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass

import numpy as np

from .model import (
    DomainError,
    ModelParams,
    ve_derivs,
    ve_of_r,
    ve_of_r_derivs,
    ve_of_v,
)

log = logging.getLogger(__name__)

ROOT_TOL = 1e-12
MAX_NEWTON_ITER = 60


class EquilibriumKind(enum.Enum):
    SADDLE = "saddle"
    STABLE_NODE = "stable_node"
    UNSTABLE_NODE = "unstable_node"
    STABLE_FOCUS = "stable_focus"
    UNSTABLE_FOCUS = "unstable_focus"
    NON_HYPERBOLIC = "non_hyperbolic"


class FoldBranch(enum.Enum):
    UPPER_GAMMA_PLUS = "gamma_plus"
    LOWER_GAMMA_MINUS = "gamma_minus"


@dataclass(frozen=True)
class Equilibrium:
    """A classified critical point (v_c, 0) of the traveling-wave ODE."""

    v_c: float
    eigenvalues: tuple[complex, complex]
    kind: EquilibriumKind
    b: float  # damping trace  lam*q_g*(1 - theta0/u^2)
    c: float  # -mu*q_g*(ve'(v_c)-1)/u; det(A0) = -c


@dataclass(frozen=True)
class FoldPoint:
    q_g: float
    v_g: float
    v_c: float
    branch: FoldBranch
    residual: float


@dataclass(frozen=True)
class CuspPoint:
    q_g: float
    v_g: float
    v_c: float
    theta_BT: float


@dataclass(frozen=True)
class Theta0Policy:
    """Variance convention: a fixed theta0 value, or theta0 = (v_c+v_g)^2.

    The second choice places every equilibrium with ve'(v_c) > 1 on the
    Hopf threshold b = 0 and every fold point at a double-zero eigenvalue.
    """

    kind: str = "fixed"  # "fixed" | "bt"
    value: float | None = 0.16

    def __post_init__(self):
        if self.kind not in ("fixed", "bt"):
            raise ValueError(f"unknown theta0 policy kind {self.kind!r}")
        if self.kind == "fixed" and (self.value is None or self.value <= 0):
            raise ValueError("fixed theta0 policy needs a positive value")

    def resolve(self, v_c: float, v_g: float) -> float:
        if self.kind == "fixed":
            return float(self.value)
        return (v_c + v_g) ** 2

    def describe(self) -> str:
        if self.kind == "fixed":
            return f"theta0=fixed({self.value!r})"
        return "theta0=(v_c+v_g)^2"


def classify(p: ModelParams, v_c: float, resid_tol: float = 1e-9,
             nonhyp_tol: float = 1e-9) -> Equilibrium:
    """Classify the critical point at v_c via the linearization.

    The linear part has trace b and eigenvalues solving l^2 - b*l - c = 0,
    so the slope ve'(v_c) relative to 1 decides saddle vs focus/node and
    the sign of b decides stability. |b| <= nonhyp_tol or ve'(v_c) within
    nonhyp_tol of 1 is reported as non-hyperbolic.
    """
    resid = ve_of_v(p, v_c) - v_c
    if abs(resid) > resid_tol:
        raise ValueError(f"v_c={v_c!r} is not an equilibrium (residual {resid:.3e})")
    u = v_c + p.v_g
    ve1 = ve_derivs(p, v_c, 1)
    b = p.lam * p.q_g * (1.0 - p.theta0 / u**2)
    c = -p.mu * p.q_g * (ve1 - 1.0) / u
    disc = b * b + 4.0 * c
    sq = np.sqrt(complex(disc))
    eig = (complex(b + sq) / 2.0, complex(b - sq) / 2.0)

    if abs(ve1 - 1.0) <= nonhyp_tol or (ve1 > 1.0 and abs(b) <= nonhyp_tol):
        kind = EquilibriumKind.NON_HYPERBOLIC
    elif ve1 < 1.0:
        kind = EquilibriumKind.SADDLE
    elif disc < 0.0:
        kind = EquilibriumKind.STABLE_FOCUS if b < 0 else EquilibriumKind.UNSTABLE_FOCUS
    else:
        kind = EquilibriumKind.STABLE_NODE if b < 0 else EquilibriumKind.UNSTABLE_NODE
    return Equilibrium(v_c=float(v_c), eigenvalues=eig, kind=kind, b=b, c=c)


def _newton_bisect(f, fprime, lo, hi, tol=ROOT_TOL, maxiter=MAX_NEWTON_ITER):
    """Newton iteration safeguarded by a maintained bracket [lo, hi].

    The bracket must satisfy f(lo)*f(hi) <= 0; any Newton step leaving the
    bracket is replaced by bisection.
    """
    flo = f(lo)
    fhi = f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if flo * fhi > 0:
        raise ValueError("root not bracketed")
    x = 0.5 * (lo + hi)
    for _ in range(maxiter):
        fx = f(x)
        if abs(fx) < tol:
            return x
        if flo * fx < 0:
            hi = x
        else:
            lo, flo = x, fx
        dfx = fprime(x)
        x_new = x - fx / dfx if dfx != 0.0 else np.nan
        x = x_new if lo < x_new < hi else 0.5 * (lo + hi)
    raise RuntimeError(f"bracketed Newton failed to reach |f|<{tol} in {maxiter} steps")


def default_v_range(p: ModelParams) -> tuple[float, float]:
    """Default equilibrium search interval: the physical span of the diagram."""
    lo = max(1e-6 - p.v_g, 0.0)
    hi = 1.1
    if lo >= hi:
        raise DomainError(f"no admissible v range for v_g={p.v_g}")
    return lo, hi


def find_equilibria(p: ModelParams, v_range: tuple[float, float] | None = None,
                    n_scan: int = 2000, tol: float = ROOT_TOL) -> list[Equilibrium]:
    """All roots of ve(v) - v in v_range, refined and classified.

    Roots are located by sign changes on a scan grid and polished by a
    bracketed Newton iteration to |ve(v)-v| < tol. Tangential double roots
    (on the fold curve) are picked up from interior extrema of the
    residual. Result is sorted by v_c; an empty list is legal.
    """
    lo, hi = default_v_range(p) if v_range is None else v_range
    if lo + p.v_g <= 0 or hi + p.v_g <= 0:
        raise DomainError("v_range must satisfy v + v_g > 0")
    grid = np.linspace(lo, hi, n_scan + 1)
    res = ve_of_v(p, grid) - grid

    def g(v):
        return ve_of_v(p, v) - v

    def gp(v):
        return ve_derivs(p, v, 1) - 1.0

    roots: list[float] = []
    sign = np.sign(res)
    for i in np.nonzero(sign[:-1] * sign[1:] < 0)[0]:
        roots.append(_newton_bisect(g, gp, grid[i], grid[i + 1], tol=tol))
    for i in np.nonzero(res == 0.0)[0]:
        roots.append(float(grid[i]))

    # tangential (fold) roots: extrema of the residual with value ~ 0
    slope = ve_derivs(p, grid, 1) - 1.0
    ssign = np.sign(slope)
    for i in np.nonzero(ssign[:-1] * ssign[1:] < 0)[0]:
        ve2 = lambda v: ve_derivs(p, v, 2)
        v_ext = _newton_bisect(gp, ve2, grid[i], grid[i + 1], tol=1e-13)
        if abs(g(v_ext)) < 1e-10:
            roots.append(v_ext)

    roots.sort()
    dedup: list[float] = []
    for v in roots:
        if not dedup or abs(v - dedup[-1]) > 1e-9:
            dedup.append(v)
    return [classify(p, v, resid_tol=1e-8) for v in dedup]


def interior_equilibrium(p: ModelParams) -> Equilibrium:
    """The unique equilibrium with ve'(v_c) > 1 (interior of the cusp region)."""
    eqs = [e for e in find_equilibria(p) if ve_derivs(p, e.v_c, 1) > 1.0]
    if len(eqs) != 1:
        raise ValueError(
            f"expected one interior equilibrium at (q_g={p.q_g}, v_g={p.v_g}), "
            f"found {len(eqs)}")
    return eqs[0]


def dvc_dvg(p: ModelParams, v_c: float) -> float:
    """Sensitivity of the equilibrium to the wave speed: -ve'/(ve'-1)."""
    ve1 = ve_derivs(p, v_c, 1)
    if abs(ve1 - 1.0) < 1e-12:
        raise DomainError("dvc_dvg is singular on the fold curve (ve'(v_c)=1)")
    return -ve1 / (ve1 - 1.0)


# --- fold curve gamma, parametrized by scaled density r ---------------------

def fold_u_of_r(r):
    """u = v_c + v_g along the fold locus."""
    return -ve_of_r_derivs(r, 1) * np.asarray(r, dtype=float)


def fold_qg_of_r(r):
    """q_g along the fold locus: q_g = -ve_r'(r) * r^2."""
    return -ve_of_r_derivs(r, 1) * np.asarray(r, dtype=float) ** 2


def _cusp_r(tol: float = 1e-14) -> float:
    """r at the cusp: stationary point of q_g(r), i.e. ve_r''*r + 2*ve_r' = 0."""
    f = lambda r: ve_of_r_derivs(r, 2) * r + 2.0 * ve_of_r_derivs(r, 1)
    fp = lambda r: ve_of_r_derivs(r, 3) * r + 3.0 * ve_of_r_derivs(r, 2)
    return _newton_bisect(f, fp, 0.26, 0.35, tol=tol)


def _fold_point_from_r(r: float) -> tuple[float, float, float]:
    u = float(fold_u_of_r(r))
    q_g = u * r
    v_c = float(ve_of_r(r))
    return q_g, u - v_c, v_c


def _fold_residual(q_g: float, v_g: float, v_c: float) -> float:
    p = ModelParams(q_g=q_g, v_g=v_g)
    return max(abs(ve_of_v(p, v_c) - v_c), abs(ve_derivs(p, v_c, 1) - 1.0))


def _polish_fold(q_g: float, v_g: float, v_c: float,
                 tol: float = 1e-12, maxiter: int = 20) -> tuple[float, float]:
    """Newton on the 2-system {ve(v_c)-v_c, ve'(v_c)-1} in (v_g, v_c) at fixed q_g."""
    x = np.array([v_g, v_c])
    for _ in range(maxiter):
        p = ModelParams(q_g=q_g, v_g=x[0])
        f1 = ve_of_v(p, x[1]) - x[1]
        ve1 = ve_derivs(p, x[1], 1)
        f2 = ve1 - 1.0
        if max(abs(f1), abs(f2)) < tol:
            return float(x[0]), float(x[1])
        ve2 = ve_derivs(p, x[1], 2)
        # d ve/d v_g = ve'(v) by the v/v_g symmetry
        J = np.array([[ve1, ve1 - 1.0], [ve2, ve2]])
        x = x - np.linalg.solve(J, np.array([f1, f2]))
    raise RuntimeError("fold-point Newton did not converge")


def cusp_point(tol: float = 1e-12) -> CuspPoint:
    """The cusp K of the fold curve.

    Solves {ve(v_c)=v_c, ve'(v_c)=1, ve''(v_c)=0} in (q_g, v_g, v_c) by
    Newton with an analytic Jacobian, started from a coarse scan of the
    r-parametrized fold locus. Verifies ve'''(v_c) < 0.
    """
    # starting guess: maximize q_g(r) on a coarse grid
    rr = np.linspace(0.05, 0.8, 400)
    r0 = rr[int(np.argmax(fold_qg_of_r(rr)))]
    x = np.array(_fold_point_from_r(float(r0)))  # (q_g, v_g, v_c)

    for _ in range(MAX_NEWTON_ITER):
        q_g, v_g, v_c = x
        p = ModelParams(q_g=q_g, v_g=v_g)
        u = v_c + v_g
        r = q_g / u
        e1, e2, e3 = (ve_of_r_derivs(r, k) for k in (1, 2, 3))
        ve1 = ve_derivs(p, v_c, 1)
        ve2 = ve_derivs(p, v_c, 2)
        ve3 = ve_derivs(p, v_c, 3)
        F = np.array([ve_of_v(p, v_c) - v_c, ve1 - 1.0, ve2])
        if np.max(np.abs(F)) < tol:
            break
        J = np.array([
            [e1 / u, ve1, ve1 - 1.0],
            [-(e2 * r + e1) / u**2, ve2, ve2],
            [(e3 * r**2 + 4.0 * e2 * r + 2.0 * e1) / u**3, ve3, ve3],
        ])
        x = x - np.linalg.solve(J, F)
    else:
        raise RuntimeError("cusp Newton did not converge from the scan start")

    q_g, v_g, v_c = (float(t) for t in x)
    p = ModelParams(q_g=q_g, v_g=v_g)
    if not ve_derivs(p, v_c, 3) < 0.0:
        raise RuntimeError("cusp candidate has ve'''(v_c) >= 0")
    return CuspPoint(q_g=q_g, v_g=v_g, v_c=v_c, theta_BT=(v_c + v_g) ** 2)


def fold_curve(theta0_policy: Theta0Policy | None = None,
               q_g_range: tuple[float, float] | None = None,
               n_points: int = 200) -> list[FoldPoint]:
    """Both branches of the fold curve gamma, sampled in q_g.

    For each sampled q_g the fold system is solved per branch: a bracketed
    solve in the r parametrization provides the start (the previous point's
    r when available), then the 2-equation Newton in (v_g, v_c) polishes.
    Points whose polish diverges are skipped and logged. The two branches
    meet at the cusp, which is appended to both.

    theta0_policy is recorded by callers that export the curve; the fold
    conditions themselves do not involve theta0.
    """
    del theta0_policy  # fold geometry is independent of the variance convention
    K = cusp_point()
    r_star = _cusp_r()
    q_star = K.q_g
    if q_g_range is None:
        q_g_range = (0.02, q_star)
    q_lo, q_hi = q_g_range
    if not 0.0 < q_lo <= q_hi <= q_star * (1.0 + 1e-12):
        raise ValueError(f"q_g_range must lie in (0, {q_star:.9f}]")

    qs = np.linspace(q_lo, min(q_hi, q_star), n_points)
    points: list[FoldPoint] = []
    specs = [
        (FoldBranch.LOWER_GAMMA_MINUS, 1e-4, r_star),
        (FoldBranch.UPPER_GAMMA_PLUS, r_star, 2.0),
    ]
    dphi = lambda r: float(-ve_of_r_derivs(r, 2) * r**2 - 2.0 * ve_of_r_derivs(r, 1) * r)
    for branch, r_lo, r_hi in specs:
        for q in qs:
            if q >= q_star:
                continue
            try:
                f = lambda r: float(fold_qg_of_r(r)) - q
                r_sol = _newton_bisect(f, dphi, r_lo, r_hi, tol=1e-14)
                _, v_g0, v_c0 = _fold_point_from_r(r_sol)
                v_g, v_c = _polish_fold(q, v_g0, v_c0)
                if abs(v_g - v_g0) > 1e-6 or abs(v_c - v_c0) > 1e-6:
                    # the unguarded 2-D Newton hopped branches; the
                    # r-parametrized start is already converged, keep it
                    v_g, v_c = v_g0, v_c0
            except (ValueError, RuntimeError) as exc:
                log.warning("fold point at q_g=%.6f (%s) skipped: %s",
                            q, branch.value, exc)
                continue
            points.append(FoldPoint(q_g=float(q), v_g=v_g, v_c=v_c, branch=branch,
                                    residual=_fold_residual(q, v_g, v_c)))
        points.append(FoldPoint(q_g=K.q_g, v_g=K.v_g, v_c=K.v_c, branch=branch,
                                residual=_fold_residual(K.q_g, K.v_g, K.v_c)))
    return points


def fold_vg_bounds(q_g: float) -> tuple[float, float]:
    """v_g of the lower and upper fold branch at fixed q_g < q_g*.

    These bound the cusp region Delta: (q_g, v_g) is inside Delta iff
    v_g lies strictly between them.
    """
    r_star = _cusp_r()
    q_star = float(fold_qg_of_r(r_star))
    if not 0.0 < q_g < q_star:
        raise ValueError(f"q_g must lie in (0, {q_star:.9f})")
    f = lambda r: float(fold_qg_of_r(r)) - q_g
    dphi = lambda r: float(-ve_of_r_derivs(r, 2) * r**2 - 2.0 * ve_of_r_derivs(r, 1) * r)
    out = []
    for r_lo, r_hi in ((1e-4, r_star), (r_star, 2.0)):
        r_sol = _newton_bisect(f, dphi, r_lo, r_hi, tol=1e-14)
        _, v_g, _ = _fold_point_from_r(r_sol)
        out.append(v_g)
    lo, hi = sorted(out)
    return lo, hi


def in_delta(q_g: float, v_g: float) -> bool:
    """True if (q_g, v_g) lies strictly inside the cusp region Delta."""
    try:
        lo, hi = fold_vg_bounds(q_g)
    except ValueError:
        return False
    return lo < v_g < hi
