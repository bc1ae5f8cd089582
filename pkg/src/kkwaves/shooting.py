"""Periodic orbits of the traveling-wave ODE by multiple shooting.

A cycle of period T is represented by M nodes on the orbit, each the start
of a segment covering 1/M of the rescaled time sigma = z/T. All segments
are integrated simultaneously (one stacked ODE solve per Newton sweep)
together with the variational equations, giving exact Jacobian blocks
with respect to the nodes, the period and any free model parameters.

Multiple shooting is used instead of single shooting because the
long-period cycles spend most of their period near a saddle, where the
single-shot transition matrix is hopelessly ill-conditioned.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .model import ModelParams, ve_of_r, ve_of_r_derivs

CLOSURE_TOL = 1e-10


class CycleStability(enum.Enum):
    STABLE = "stable"
    UNSTABLE = "unstable"
    NEUTRAL = "neutral"


@dataclass
class LimitCycle:
    """A converged periodic orbit.

    mesh_z/mesh_v/mesh_y hold a dense sampling over one period (first and
    last point coincide); nodes are the shooting nodes that define the
    solution.
    """

    period: float
    params: ModelParams
    nodes: np.ndarray           # (M, 2)
    mesh_z: np.ndarray
    mesh_v: np.ndarray
    mesh_y: np.ndarray
    floquet_multiplier: float
    stability: CycleStability
    closure_residual: float
    monodromy: np.ndarray = field(repr=False, default=None)

    @property
    def amplitude(self) -> float:
        return float(self.mesh_v.max() - self.mesh_v.min())

    def v_axis_crossings(self) -> int:
        """Transversal y = 0 crossings over one period (2 for minimal period)."""
        y = self.mesh_y[:-1]  # drop duplicated endpoint
        s = np.sign(y)
        s = s[s != 0]
        return int(np.sum(s[1:] != s[:-1]) + (s[0] != s[-1]))


def _fields(p: ModelParams, v: np.ndarray, y: np.ndarray, param_names: tuple[str, ...]):
    """RHS, Jacobian entries and parameter derivatives, vectorized over nodes."""
    u = v + p.v_g
    r = p.q_g / u
    ve = ve_of_r(r)
    e1 = ve_of_r_derivs(r, 1)
    ve1 = e1 * (-p.q_g / u**2)
    lamq = p.lam * p.q_g
    muq = p.mu * p.q_g
    damp = lamq * (1.0 - p.theta0 / u**2)

    f1 = y
    f2 = damp * y - muq * (ve - v) / u
    j21 = 2.0 * lamq * p.theta0 / u**3 * y - muq * ((ve1 - 1.0) / u - (ve - v) / u**2)
    j22 = damp

    dparams = []
    for name in param_names:
        if name == "q_g":
            dve_dq = e1 / u
            d2 = (p.lam * (1.0 - p.theta0 / u**2) * y
                  - p.mu * (ve - v) / u - muq * dve_dq / u)
        elif name == "v_g":
            d2 = (2.0 * lamq * p.theta0 / u**3 * y
                  - muq * (ve1 / u - (ve - v) / u**2))
        else:
            raise ValueError(f"unsupported free parameter {name!r}")
        dparams.append(d2)
    return f1, f2, j21, j22, dparams


def _sweep(p: ModelParams, nodes: np.ndarray, T: float,
           param_names: tuple[str, ...] = (), rtol: float = 1e-11,
           atol: float = 1e-12, dense_per_segment: int = 0):
    """Integrate all M segments plus variational terms over sigma in [0, 1/M].

    Returns (end_states (M,2), Phi (M,2,2), xi (M,2), etas (M,n,2), dense)
    where dense is None or (z, v, y) sampled along the orbit.
    """
    M = nodes.shape[0]
    n = len(param_names)

    def unpack(Y):
        k = 0
        st = Y[k:k + 2 * M].reshape(M, 2); k += 2 * M
        Phi = Y[k:k + 4 * M].reshape(M, 2, 2); k += 4 * M
        xi = Y[k:k + 2 * M].reshape(M, 2); k += 2 * M
        eta = Y[k:].reshape(M, n, 2) if n else None
        return st, Phi, xi, eta

    def rhs(_s, Y):
        st, Phi, xi, eta = unpack(Y)
        v, y = st[:, 0], st[:, 1]
        f1, f2, j21, j22, dps = _fields(p, v, y, param_names)
        dst = np.column_stack([f1, f2]) * T
        # J @ Phi with J = [[0, 1], [j21, j22]] per segment
        dPhi = np.empty_like(Phi)
        dPhi[:, 0, :] = Phi[:, 1, :]
        dPhi[:, 1, :] = j21[:, None] * Phi[:, 0, :] + j22[:, None] * Phi[:, 1, :]
        dPhi *= T
        dxi = np.empty_like(xi)
        dxi[:, 0] = T * xi[:, 1] + f1
        dxi[:, 1] = T * (j21 * xi[:, 0] + j22 * xi[:, 1]) + f2
        parts = [dst.ravel(), dPhi.ravel(), dxi.ravel()]
        if n:
            deta = np.empty_like(eta)
            for k in range(n):
                deta[:, k, 0] = T * eta[:, k, 1]
                deta[:, k, 1] = T * (j21 * eta[:, k, 0] + j22 * eta[:, k, 1]
                                     + dps[k])
            parts.append(deta.ravel())
        return np.concatenate(parts)

    Y0 = np.concatenate([
        nodes.ravel(),
        np.tile(np.eye(2).ravel(), M),
        np.zeros(2 * M),
        np.zeros(2 * M * n),
    ])
    h = 1.0 / M
    t_eval = np.linspace(0.0, h, dense_per_segment + 1) if dense_per_segment else None
    sol = solve_ivp(rhs, (0.0, h), Y0, method="DOP853", rtol=rtol, atol=atol,
                    t_eval=t_eval, dense_output=False)
    if not sol.success:
        raise RuntimeError(f"segment integration failed: {sol.message}")
    st, Phi, xi, eta = unpack(sol.y[:, -1])
    dense = None
    if dense_per_segment:
        # per-sample states, reassembled into one pass around the orbit
        seg = sol.y[:2 * M, :].reshape(M, 2, -1)   # (M, 2, npts)
        z = np.concatenate([(i * h + sol.t[:-1]) * T for i in range(M)] + [[T]])
        v = np.concatenate([seg[i, 0, :-1] for i in range(M)] + [[seg[-1, 0, -1]]])
        y = np.concatenate([seg[i, 1, :-1] for i in range(M)] + [[seg[-1, 1, -1]]])
        dense = (z, v, y)
    return st, Phi, xi, (eta if n else np.zeros((M, 0, 2))), dense


@dataclass
class CycleCorrector:
    """Newton corrector for the multiple-shooting system.

    Unknowns: the M nodes, plus the period if free_T, плус any named model
    parameters. Constraint rows (phase anchor, amplitude pin, arclength)
    must make the system square: count = free_T + len(free_params).
    """

    M: int = 20
    rtol: float = 1e-11
    atol: float = 1e-12
    tol: float = CLOSURE_TOL
    max_iter: int = 14

    def solve(self, p: ModelParams, nodes: np.ndarray, T: float, *,
              free_T: bool = False, free_params: tuple[str, ...] = (),
              phase_ref: tuple[np.ndarray, np.ndarray] | None = None,
              pin_v: float | None = None,
              arclength: tuple[np.ndarray, np.ndarray, float] | None = None):
        """Return (p, nodes, T, monodromy, residual) of the corrected cycle.

        phase_ref = (s0_ref, tangent) anchors the phase; pin_v fixes the
        v-coordinate of node 0; arclength = (w, X_ref, ds) appends the
        pseudo-arclength row <w, X - X_ref> - ds = 0.
        """
        M = self.M
        n = len(free_params)
        n_extra = int(free_T) + n
        n_constraints = int(phase_ref is not None) + int(pin_v is not None) \
            + int(arclength is not None)
        if n_constraints != n_extra:
            raise ValueError("corrector system is not square")
        nodes = nodes.copy()
        pvals = np.array([getattr(p, name) for name in free_params])

        def pack():
            parts = [nodes.ravel()]
            if free_T:
                parts.append([T])
            parts.append(pvals)
            return np.concatenate(parts)

        def residual_and_jac():
            ends, Phi, xi, eta, _ = _sweep(p, nodes, T, free_params,
                                           self.rtol, self.atol)
            nx = 2 * M + n_extra
            F = np.zeros(nx)
            J = np.zeros((nx, nx))
            for i in range(M):
                ip1 = (i + 1) % M
                F[2 * i:2 * i + 2] = ends[i] - nodes[ip1]
                J[2 * i:2 * i + 2, 2 * i:2 * i + 2] = Phi[i]
                J[2 * i:2 * i + 2, 2 * ip1:2 * ip1 + 2] -= np.eye(2)
                col = 2 * M
                if free_T:
                    J[2 * i:2 * i + 2, col] = xi[i]
                    col += 1
                for k in range(n):
                    J[2 * i:2 * i + 2, col + k] = eta[i, k]
            row = 2 * M
            if phase_ref is not None:
                s_ref, tangent = phase_ref
                F[row] = tangent @ (nodes[0] - s_ref)
                J[row, 0:2] = tangent
                row += 1
            if pin_v is not None:
                F[row] = nodes[0, 0] - pin_v
                J[row, 0] = 1.0
                row += 1
            if arclength is not None:
                w, X_ref, ds = arclength
                F[row] = w @ (pack() - X_ref) - ds
                J[row, :] = w
                row += 1
            return F, J, Phi

        F, J, Phi = residual_and_jac()
        res = np.max(np.abs(F))
        it = 0
        while res >= self.tol:
            if it >= self.max_iter:
                raise RuntimeError(
                    f"cycle corrector did not converge (residual {res:.3e})")
            it += 1
            try:
                dX = np.linalg.solve(J, -F)
            except np.linalg.LinAlgError as exc:
                raise RuntimeError(f"singular corrector Jacobian: {exc}") from None
            # damped update: backtrack until the residual decreases
            lam_damp = 1.0
            base = (nodes.copy(), T, pvals.copy())
            for _bt in range(8):
                nodes = base[0] + lam_damp * dX[:2 * M].reshape(M, 2)
                col = 2 * M
                T = base[1] + lam_damp * dX[col] if free_T else base[1]
                col += int(free_T)
                pvals = base[2] + lam_damp * dX[col:col + n]
                p = p.with_values(**dict(zip(free_params, pvals)))
                try:
                    F_new, J_new, Phi = residual_and_jac()
                except (RuntimeError, ValueError):
                    lam_damp *= 0.5
                    continue
                if np.max(np.abs(F_new)) < res or lam_damp < 1.0 / 64:
                    F, J = F_new, J_new
                    res = np.max(np.abs(F))
                    break
                lam_damp *= 0.5
            else:
                raise RuntimeError("corrector line search failed")

        monodromy = np.eye(2)
        for i in range(M):
            monodromy = Phi[i] @ monodromy
        return p, nodes, float(T), monodromy, float(res)


def nontrivial_multiplier(monodromy: np.ndarray) -> float:
    """The nontrivial Floquet multiplier: det(monodromy)/(trivial multiplier 1)."""
    return float(np.linalg.det(monodromy))


def stability_from_multiplier(mult: float, tol: float = 1e-7) -> CycleStability:
    if abs(mult) < 1.0 - tol:
        return CycleStability.STABLE
    if abs(mult) > 1.0 + tol:
        return CycleStability.UNSTABLE
    return CycleStability.NEUTRAL


def build_cycle(p: ModelParams, nodes: np.ndarray, T: float,
                monodromy: np.ndarray, residual: float,
                dense_per_segment: int = 32,
                rtol: float = 1e-11, atol: float = 1e-12) -> LimitCycle:
    """Assemble a LimitCycle record, densely sampling the orbit."""
    _, _, _, _, dense = _sweep(p, nodes, T, (), rtol, atol,
                               dense_per_segment=dense_per_segment)
    z, v, y = dense
    mult = nontrivial_multiplier(monodromy)
    return LimitCycle(period=float(T), params=p, nodes=nodes.copy(),
                      mesh_z=z, mesh_v=v, mesh_y=y,
                      floquet_multiplier=mult,
                      stability=stability_from_multiplier(mult),
                      closure_residual=residual, monodromy=monodromy)


def hopf_ellipse_nodes(v_c: float, om: float, eps: float, M: int) -> tuple[np.ndarray, float]:
    """Shooting nodes on the linearized Hopf ellipse of amplitude eps.

    The linear flow at the Hopf point is v = v_c + eps*cos(om*z),
    y = -eps*om*sin(om*z); returns (nodes, T) with T = 2*pi/om.
    """
    ph = 2.0 * np.pi * np.arange(M) / M
    nodes = np.column_stack([v_c + eps * np.cos(ph), -eps * om * np.sin(ph)])
    return nodes, 2.0 * np.pi / om
