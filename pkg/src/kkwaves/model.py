"""Kerner-Konhauser fundamental diagram and the traveling-wave ODE.

The dimensionless fundamental diagram is a falling logistic of the scaled
density r,

    ve(r) = 1/(1 + exp((r - 0.25)/0.06)) - 3.72e-6,

and traveling-wave profiles of the traffic PDE solve the planar system

    v' = y
    y' = lam*q_g*(1 - theta0/(v+v_g)^2)*y - mu*q_g*(ve(v) - v)/(v+v_g)

in the comoving coordinate z, where the scaled density is slaved to the
velocity through the flux relation r = q_g/(v + v_g).

Derivatives of ve up to third order are closed-form (chain rule through the
logistic); they feed bifurcation tests where finite-difference noise would
corrupt sign decisions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Fundamental-diagram shape constants (dimensionless).
SIGMOID_CENTER = 0.25
SIGMOID_WIDTH = 0.06
SIGMOID_OFFSET = 3.72e-6

_A = 1.0 / SIGMOID_WIDTH  # inner slope factor of the logistic


class DomainError(ValueError):
    """Raised when an evaluation point violates v + v_g > 0 (or similar)."""


@dataclass(frozen=True)
class PhysicalConstants:
    """Dimensional model constants (km, h, veh units).

    tau is stored in hours; command-line front ends accept seconds and
    convert before constructing this record.
    """

    rho_max: float = 140.0   # jam density, veh/km
    V_max: float = 120.0     # free-flow speed, km/h
    tau: float = 1.0 / 120.0  # relaxation time, h (30 s)
    eta_0: float = 600.0     # viscosity analogue, veh*km/h
    Theta_0: float = 2304.0  # velocity variance, km^2/h^2

    def __post_init__(self):
        for name in ("rho_max", "V_max", "tau", "eta_0", "Theta_0"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be strictly positive")

    @property
    def lam(self) -> float:
        return self.V_max / self.eta_0

    @property
    def mu(self) -> float:
        return 1.0 / (self.rho_max * self.eta_0 * self.tau)

    @property
    def theta0(self) -> float:
        return self.Theta_0 / self.V_max**2


@dataclass(frozen=True)
class ModelParams:
    """Dimensionless parameter record for the traveling-wave ODE."""

    lam: float = 0.2
    mu: float = 1.0 / 700.0
    theta0: float = 0.16
    q_g: float = 0.1
    v_g: float = 0.3

    def __post_init__(self):
        if self.lam <= 0 or self.mu <= 0 or self.theta0 <= 0 or self.q_g <= 0:
            raise ValueError("lam, mu, theta0, q_g must be strictly positive")

    @classmethod
    def from_physical(cls, consts: PhysicalConstants, q_g: float, v_g: float,
                      theta0: float | None = None) -> "ModelParams":
        """Build dimensionless parameters from dimensional constants.

        theta0 defaults to Theta_0/V_max^2; pass an explicit value to apply
        a different variance convention at fixed physical constants.
        """
        return cls(lam=consts.lam, mu=consts.mu,
                   theta0=consts.theta0 if theta0 is None else theta0,
                   q_g=q_g, v_g=v_g)

    def with_values(self, **kw) -> "ModelParams":
        d = dict(lam=self.lam, mu=self.mu, theta0=self.theta0,
                 q_g=self.q_g, v_g=self.v_g)
        d.update(kw)
        return ModelParams(**d)

    def consistent_with(self, consts: PhysicalConstants, rtol: float = 1e-12) -> bool:
        """Check lam = V_max/eta_0 and mu = 1/(rho_max*eta_0*tau)."""
        return (abs(self.lam - consts.lam) <= rtol * consts.lam
                and abs(self.mu - consts.mu) <= rtol * consts.mu)


@dataclass(frozen=True)
class PhasePoint:
    """State (v, y) of the traveling-wave ODE; y = dv/dz."""

    v: float
    y: float

    def as_array(self) -> np.ndarray:
        return np.array([self.v, self.y])


def _sigmoid(x):
    # overflow-safe 1/(1+exp(x)) for any real x
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    pos = x >= 0
    ex = np.exp(-x[pos])
    out[pos] = ex / (1.0 + ex)
    out[~pos] = 1.0 / (1.0 + np.exp(x[~pos]))
    return out


def ve_of_r(r):
    """Dimensionless equilibrium speed at scaled density r.

    Total function of any real r; values lie in (-3.72e-6, 1). The small
    negative offset of the diagram is kept verbatim, without clamping.
    """
    r_arr = np.asarray(r, dtype=float)
    val = _sigmoid(_A * (r_arr - SIGMOID_CENTER)) - SIGMOID_OFFSET
    return float(val) if np.isscalar(r) or r_arr.ndim == 0 else val


def ve_of_r_derivs(r, order: int = 1):
    """n-th derivative of ve_of_r with respect to r, n in 1..3.

    Closed forms follow from s' = -a*s*(1-s) for the logistic s with inner
    slope a = 1/0.06.
    """
    if order not in (1, 2, 3):
        raise ValueError(f"order must be 1, 2 or 3, got {order}")
    r_arr = np.asarray(r, dtype=float)
    s = _sigmoid(_A * (r_arr - SIGMOID_CENTER))
    sp = s * (1.0 - s)
    if order == 1:
        val = -_A * sp
    elif order == 2:
        val = _A**2 * sp * (1.0 - 2.0 * s)
    else:
        val = -_A**3 * sp * (1.0 - 6.0 * s + 6.0 * s * s)
    return float(val) if np.isscalar(r) or r_arr.ndim == 0 else val


def _check_u(p: ModelParams, v) -> np.ndarray:
    u = np.asarray(v, dtype=float) + p.v_g
    if np.any(u <= 0.0):
        raise DomainError(f"v + v_g must be positive (v_g={p.v_g})")
    return u


def ve_of_v(p: ModelParams, v):
    """Equilibrium speed as a function of wave-frame velocity v.

    Evaluates ve_of_r at the slaved density r = q_g/(v+v_g); v_g and v only
    enter through their sum, so they can be swapped freely.
    """
    u = _check_u(p, v)
    val = ve_of_r(p.q_g / u)
    return float(val) if np.isscalar(v) else val


def ve_derivs(p: ModelParams, v, order: int = 1):
    """Exact d^n ve/dv^n at v, n in 1..3, via the chain rule through r(v).

    r = q_g/(v+v_g) gives r' = -q_g/(v+v_g)^2, r'' = 2 q_g/(v+v_g)^3,
    r''' = -6 q_g/(v+v_g)^4.
    """
    if order not in (1, 2, 3):
        raise ValueError(f"order must be 1, 2 or 3, got {order}")
    u = _check_u(p, v)
    r = p.q_g / u
    r1 = -p.q_g / u**2
    e1 = ve_of_r_derivs(r, 1)
    if order == 1:
        val = e1 * r1
    else:
        r2 = 2.0 * p.q_g / u**3
        e2 = ve_of_r_derivs(r, 2)
        if order == 2:
            val = e2 * r1**2 + e1 * r2
        else:
            r3 = -6.0 * p.q_g / u**4
            e3 = ve_of_r_derivs(r, 3)
            val = e3 * r1**3 + 3.0 * e2 * r1 * r2 + e1 * r3
    return float(val) if np.isscalar(v) else val


def ve_dq_dv(p: ModelParams, v):
    """Mixed partial d^2 ve/(dq_g dv); one of the fold nondegeneracy tests."""
    u = _check_u(p, v)
    r = p.q_g / u
    val = -(ve_of_r_derivs(r, 2) * r + ve_of_r_derivs(r, 1)) / u**2
    return float(val) if np.isscalar(v) else val


def rhs(p: ModelParams, s) -> np.ndarray:
    """Right-hand side of the traveling-wave ODE at state s = (v, y)."""
    if isinstance(s, PhasePoint):
        v, y = s.v, s.y
    else:
        v, y = s
    u = _check_u(p, v)
    ve = ve_of_r(p.q_g / u)
    dy = (p.lam * p.q_g * (1.0 - p.theta0 / u**2) * y
          - p.mu * p.q_g * (ve - v) / u)
    return np.array([y, float(dy)])


def rhs_jacobian(p: ModelParams, v: float, y: float) -> np.ndarray:
    """Jacobian of rhs with respect to (v, y)."""
    u = float(_check_u(p, v))
    ve = ve_of_v(p, v)
    ve1 = ve_derivs(p, v, 1)
    df2_dv = (2.0 * p.lam * p.q_g * p.theta0 / u**3 * y
              - p.mu * p.q_g * ((ve1 - 1.0) / u - (ve - v) / u**2))
    df2_dy = p.lam * p.q_g * (1.0 - p.theta0 / u**2)
    return np.array([[0.0, 1.0], [df2_dv, df2_dy]])


def rhs_param_derivs(p: ModelParams, v: float, y: float, param: str) -> np.ndarray:
    """Partial derivative of rhs with respect to q_g or v_g at fixed state."""
    u = float(_check_u(p, v))
    ve = ve_of_v(p, v)
    if param == "q_g":
        # d(ve)/d(q_g) = ve_r'(r)/u at fixed v
        dve_dq = ve_of_r_derivs(p.q_g / u, 1) / u
        df2 = (p.lam * (1.0 - p.theta0 / u**2) * y
               - p.mu * (ve - v) / u
               - p.mu * p.q_g * dve_dq / u)
    elif param == "v_g":
        # v_g and v are interchangeable in ve, so d(ve)/d(v_g) = ve'(v)
        ve1 = ve_derivs(p, v, 1)
        df2 = (2.0 * p.lam * p.q_g * p.theta0 / u**3 * y
               - p.mu * p.q_g * (ve1 / u - (ve - v) / u**2))
    else:
        raise ValueError(f"unknown continuation parameter {param!r}")
    return np.array([0.0, df2])
