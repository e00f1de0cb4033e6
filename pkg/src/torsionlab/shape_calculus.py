"""Hadamard first variations along normal boundary velocities, and descent on F_tau.

A velocity is a function ``V(theta)`` (BoundaryFunction or callable) giving the
normal speed at the boundary point ``X(theta) = c + rho(theta) e_theta`` of the
star-shaped core.  Boundary integrals use ``ds = |X'(theta)| dtheta``.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .errors import DegenerateGradient, LineSearchFailure
from .fem import FemField, boundary_flux, interpolate_onto, solve_poisson
from .functionals import (DEFAULT_H, PenaltyParams, ResolventContext, distance_sq, h_penalty,
                          h_penalty_slope, volume_penalty)
from .geometry import (TWO_PI, BoundaryFunction, StarDomain, classical_barycenter,
                       mesh_star_domain, rings_for, truncated_barycenter, volume,
                       volume_normalize)

DEGENERATE_GRAD = 1e-6


def _velocity(v):
    if isinstance(v, BoundaryFunction) or callable(v):
        return v
    c = float(v)
    return lambda t: np.full(np.shape(t), c)


def flow_domain(domain: StarDomain, velocity, t: float, K: int = 160) -> StarDomain:
    """Domain after moving the core boundary by ``t V nu``, to first order in ``t``.

    The radial function becomes ``rho + t V |X'| / rho`` (the radial component of
    the displacement), projected onto Fourier order ``K``; this is linear in ``t``
    so central differences of a functional converge at second order.
    """
    V = _velocity(velocity)
    n = 4 * K + 4
    th = TWO_PI * np.arange(n) / n
    rho = domain.radial(th)
    _, speed = domain.outward_normal(th)
    return domain.with_radial(BoundaryFunction.from_samples(rho + t * V(th) * speed / rho, K))


def _angular_quadrature(domain: StarDomain, velocity, n=None):
    V = _velocity(velocity)
    K = max(domain.radial.order, getattr(V, "order", 0))
    th = domain.quadrature_angles(n or max(256, 4 * K + 16))
    _, speed = domain.outward_normal(th)
    return th, V(th), speed * TWO_PI / th.size


def d_volume(domain: StarDomain, velocity) -> float:
    """``int_{dOmega} V ds``."""
    _, v, ds = _angular_quadrature(domain, velocity)
    return float(np.sum(v * ds))


def d_barycenter(domain: StarDomain, velocity) -> np.ndarray:
    """``int_{dOmega} A_Omega V ds`` with ``A_Omega = (x - x_Omega) / |Omega|``."""
    th, v, ds = _angular_quadrature(domain, velocity)
    X = domain.boundary_points(th)
    A = (X - truncated_barycenter(domain)) / volume(domain)
    return np.sum(A * (v * ds)[:, None], axis=0)


# ---------------------------------------------------------------------------
# Boundary normal derivatives
# ---------------------------------------------------------------------------

def normal_derivative(u: FemField, rhs, domain: StarDomain, method: str = "flux") -> np.ndarray:
    """Outward ``du/dnu`` of a Dirichlet solution at the core boundary vertices.

    ``flux``: variationally consistent flux (residual over boundary mass).
    ``richardson``: one-sided differences at 1, 2, 3 ring spacings inward,
    extrapolated to the boundary.  ``element``: mean P1 gradient of the
    boundary triangles around each vertex.
    """
    mesh = u.mesh
    loop = mesh.boundary_loops[0]
    th = mesh.boundary_angles
    nu, _ = domain.outward_normal(th)
    if method == "flux":
        return boundary_flux(u, rhs, loop)
    if method == "richardson":
        X = mesh.vertices[loop]
        d = domain.radial(th) / (loop.size // 6)
        w1, w2, w3 = (u(X - k * d[:, None] * nu) for k in (1, 2, 3))
        return -(18.0 * w1 - 9.0 * w2 + 2.0 * w3) / (6.0 * d)
    if method == "element":
        G = u.element_gradients()
        pos = np.full(mesh.n_vertices, -1)
        pos[loop] = np.arange(loop.size)
        acc = np.zeros((loop.size, 2))
        cnt = np.zeros(loop.size)
        for c in range(3):
            idx = pos[mesh.triangles[:, c]]
            m = idx >= 0
            np.add.at(acc, idx[m], G[m])
            np.add.at(cnt, idx[m], 1.0)
        return np.sum(acc / cnt[:, None] * nu, axis=1)
    raise ValueError(f"unknown method {method!r}")


def _boundary_frame(mesh, domain: StarDomain):
    th = mesh.boundary_angles
    nu, speed = domain.outward_normal(th)
    return th, mesh.vertices[mesh.boundary_loops[0]], nu, speed * TWO_PI / th.size


# ---------------------------------------------------------------------------
# Adjoint potentials
# ---------------------------------------------------------------------------

def adjoint_p(mesh, u_f: FemField) -> FemField:
    """``-Lap p = u_f`` in the meshed domain, ``p = 0`` on its boundary."""
    return solve_poisson(mesh, u_f)


def adjoint_p1(mesh, u_f: FemField, u_ball_f: FemField) -> FemField:
    """``-Lap p1 = u_Omega^f - u_B^f`` on the domain mesh (ball field zero-extended)."""
    return solve_poisson(mesh, u_f - interpolate_onto(u_ball_f, mesh))


def _ball_normal_integral(p2: FemField, rhs2, ub: FemField, f, center) -> np.ndarray:
    bm = ub.mesh
    loop = bm.boundary_loops[0]
    th = bm.boundary_angles
    nu = np.stack([np.cos(th), np.sin(th)], -1)
    prod = boundary_flux(p2, rhs2, loop) * boundary_flux(ub, f, loop)
    return np.sum(prod[:, None] * nu, axis=0) * TWO_PI / th.size


def vector_V(ball_center, f, u_omega: FemField, mesh_h: float = DEFAULT_H,
             ball_mesh=None) -> np.ndarray:
    """``int_{dB} dp2/dnu du_B/dnu nu ds`` with ``-Lap p2 = u_Omega^f - u_B^f`` in ``B``."""
    if ball_mesh is None:
        ball_mesh = mesh_star_domain(StarDomain.disk(1.0, ball_center), mesh_h)
    ub = solve_poisson(ball_mesh, f)
    rhs2 = interpolate_onto(u_omega, ball_mesh) - ub
    p2 = solve_poisson(ball_mesh, rhs2)
    return _ball_normal_integral(p2, rhs2, ub, f, ball_center)


# ---------------------------------------------------------------------------
# Densities
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class BoundaryDensity:
    """Boundary samples of the first-variation ingredients at the mesh boundary angles.

    Normal derivatives are signed (outward); for the torsion function and
    nonnegative forcings they are negative, and ``dn_p1 * dn_u`` is the
    product ``|grad p1| |grad u^f|`` whenever the two share a sign.
    """

    theta: np.ndarray
    points: np.ndarray
    normal: np.ndarray
    weights: np.ndarray
    dn_w: np.ndarray
    dn_u: np.ndarray | None = None
    dn_p1: np.ndarray | None = None
    A: np.ndarray | None = None
    V: np.ndarray | None = None
    beta_sq: float | None = None
    tor: float | None = None

    @property
    def grad_w_sq(self) -> np.ndarray:
        return self.dn_w ** 2

    @property
    def distance_density(self) -> np.ndarray:
        """``|grad p1| |grad u^f| - V . A_Omega`` per sample."""
        return self.dn_p1 * self.dn_u - self.A @ self.V


def torsion_density(domain: StarDomain, mesh_h: float = DEFAULT_H, context=None,
                    method: str = "flux") -> BoundaryDensity:
    ctx = context or ResolventContext(domain, mesh_h)
    th, X, nu, wts = _boundary_frame(ctx.mesh, domain)
    dn_w = normal_derivative(ctx.torsion, 1.0, domain, method)
    return BoundaryDensity(th, X, nu, wts, dn_w, tor=ctx.tor)


def boundary_density(domain: StarDomain, f=1.0, mesh_h: float = DEFAULT_H, context=None,
                     check_bound: bool = True) -> BoundaryDensity:
    """All boundary data entering the torsion and beta^2 variations."""
    ctx = context or ResolventContext(domain, mesh_h)
    th, X, nu, wts = _boundary_frame(ctx.mesh, domain)
    dn_w = boundary_flux(ctx.torsion, 1.0)
    u, ub = ctx.fields(f, check_bound)
    rhs1 = u - interpolate_onto(ub, ctx.mesh)
    p1 = solve_poisson(ctx.mesh, rhs1)
    dn_p1 = boundary_flux(p1, rhs1)
    dn_u = boundary_flux(u, f)
    rhs2 = interpolate_onto(u, ctx.ball_mesh) - ub
    p2 = solve_poisson(ctx.ball_mesh, rhs2)
    V = _ball_normal_integral(p2, rhs2, ub, f, ctx.center)
    A = (X - ctx.center) / volume(domain)
    b2 = distance_sq(u, ub)
    return BoundaryDensity(th, X, nu, wts, dn_w, dn_u, dn_p1, A, V, b2, ctx.tor)


def d_torsion(domain: StarDomain, velocity, mesh_h: float = DEFAULT_H, method: str = "flux",
              density: BoundaryDensity | None = None) -> float:
    """``-1/2 int_{dOmega} |grad w|^2 V ds``."""
    dens = density or torsion_density(domain, mesh_h, method=method)
    if np.min(np.abs(dens.dn_w)) < DEGENERATE_GRAD:
        raise DegenerateGradient(f"|grad w| = {np.min(np.abs(dens.dn_w)):.3g} on the boundary")
    v = _velocity(velocity)(dens.theta)
    return float(-0.5 * np.sum(dens.grad_w_sq * v * dens.weights))


def d_beta_sq(domain: StarDomain, f, velocity, mesh_h: float = DEFAULT_H,
              density: BoundaryDensity | None = None, check_bound: bool = True) -> float:
    """``2 int_{dOmega} (|grad p1| |grad u^f| - V . A_Omega) V_n ds``."""
    dens = density or boundary_density(domain, f, mesh_h, check_bound=check_bound)
    v = _velocity(velocity)(dens.theta)
    return float(2.0 * np.sum(dens.distance_density * v * dens.weights))


# ---------------------------------------------------------------------------
# Euler-Lagrange data and the shape gradient
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ShapeGradient:
    """``g = -1/2 |grad w|^2 + tau C_Omega (|grad p1||grad u| - V.A)`` at boundary angles."""

    theta: np.ndarray
    values: np.ndarray
    density: BoundaryDensity = field(repr=False)
    c_omega: float = 0.0

    def as_fourier(self, K: int = 12) -> BoundaryFunction:
        return BoundaryFunction.from_samples(self.values, K)

    def truncation_error(self, K: int = 12) -> float:
        return float(np.max(np.abs(self.as_fourier(K)(self.theta) - self.values)))


def shape_gradient(domain: StarDomain, f, params: PenaltyParams, mesh_h: float = DEFAULT_H,
                   context=None, check_bound: bool = True) -> ShapeGradient:
    dens = boundary_density(domain, f, mesh_h, context, check_bound)
    c = float(h_penalty_slope(dens.beta_sq, params.a))
    g = -0.5 * dens.grad_w_sq + params.tau * c * dens.distance_density
    return ShapeGradient(dens.theta, g, dens, c)


def el_residual(domain: StarDomain, f=1.0, params: PenaltyParams = PenaltyParams(),
                mesh_h: float = DEFAULT_H, gradient: ShapeGradient | None = None,
                K: int | None = 12) -> float:
    """``(max - min) / mean`` of ``1/2 |grad w|^2 - tau C (|grad p1||grad u| - V.A)`` on the boundary.

    The density is first projected onto Fourier order ``K`` (the descent space):
    vertex-level consistent fluxes carry an O(h) mesh-pattern oscillation that
    says nothing about criticality.  ``K=None`` uses the raw samples.
    """
    sg = gradient or shape_gradient(domain, f, params, mesh_h)
    lhs = -sg.values if K is None else -sg.as_fourier(K)(sg.theta)
    return float((lhs.max() - lhs.min()) / abs(lhs.mean()))


# ---------------------------------------------------------------------------
# Optimizer
# ---------------------------------------------------------------------------

def hausdorff_to_ball(domain: StarDomain, n: int = 2048):
    """``min_c max_theta ||X(theta) - c| - 1|``: boundary distance to the nearest unit circle."""
    th = TWO_PI * np.arange(n) / n
    X = domain.boundary_points(th)

    def dist(c):
        return float(np.max(np.abs(np.linalg.norm(X - c, axis=1) - 1.0)))

    x0 = classical_barycenter(domain)
    res = optimize.minimize(dist, x0, method="Nelder-Mead",
                            options={"xatol": 1e-9, "fatol": 1e-12,
                                     "initial_simplex": np.array([x0, x0 + [0.02, 0], x0 + [0, 0.02]])})
    return min(float(res.fun), dist(x0)), np.asarray(res.x)


@dataclass(frozen=True)
class OptimizerOptions:
    mesh_h: float = 0.03
    max_iters: int = 60
    K: int = 12
    max_move: float = 0.02
    min_step: float = 1e-8
    energy_tol: float = 1e-10
    grad_tol: float = 5e-3
    armijo: float = 1e-4


@dataclass(frozen=True)
class TraceRow:
    iter: int
    energy: float
    residual: float
    barycenter_norm: float
    hausdorff: float
    step: float


def write_trace(trace, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iter", "energy", "residual", "barycenter_norm", "hausdorff", "step"])
        for r in trace:
            w.writerow([r.iter, f"{r.energy:.15e}", f"{r.residual:.10e}",
                        f"{r.barycenter_norm:.10e}", f"{r.hausdorff:.10e}", f"{r.step:.10e}"])


class _Evaluator:
    """Energy and gradient on meshes with frozen topology along the run."""

    def __init__(self, domain, f, params, opts):
        self.f, self.params, self.opts = f, params, opts
        self.rings = rings_for(domain.max_radius() * 1.05, opts.mesh_h)
        self.ball_rings = rings_for(1.0, opts.mesh_h)

    def context(self, domain):
        return ResolventContext(domain, self.opts.mesh_h, self.rings, self.ball_rings)

    def energy(self, domain, ctx=None):
        ctx = ctx or self.context(domain)
        val = ctx.tor + float(volume_penalty(volume(domain), self.params.eta))
        if self.params.tau > 0:
            val += self.params.tau * float(h_penalty(ctx.beta_sq(self.f, False), self.params.a))
        return float(val)


def minimize_energy(initial: StarDomain, f=1.0, params: PenaltyParams = PenaltyParams(),
                    opts: OptimizerOptions = OptimizerOptions(), callback=None):
    """Projected gradient descent on ``F_tau`` over the radial function.

    Each step moves ``rho <- rho - s (P_K g - L)`` with ``P_K`` the Fourier filter
    and ``L`` removing the first-order area change, then rescales to area pi
    exactly; ``s`` is chosen by Armijo backtracking.  Returns ``(domain, trace)``.
    """
    ev = _Evaluator(initial, f, params, opts)
    dom = volume_normalize(initial)
    ctx = ev.context(dom)
    E = ev.energy(dom, ctx)
    trace = []
    step_prev = None
    for it in range(opts.max_iters + 1):
        sg = shape_gradient(dom, f, params, opts.mesh_h, context=ctx, check_bound=False)
        res = el_residual(dom, f, params, gradient=sg)
        haus, _ = hausdorff_to_ball(dom)
        bary = float(np.linalg.norm(truncated_barycenter(dom) - dom.center))
        trace.append(TraceRow(it, E, res, bary, haus, 0.0 if step_prev is None else step_prev))
        if callback is not None:
            callback(it, dom, trace[-1])
        if it == opts.max_iters:
            break
        th = sg.theta
        ghat = sg.as_fourier(opts.K)
        rho = dom.radial(th)
        gs = ghat(th)
        L = float(np.sum(rho * gs) / np.sum(rho))
        direction = ghat - BoundaryFunction.constant(L)
        dvals = direction(th)
        scale = float(np.max(np.abs(dvals)))
        if scale <= opts.grad_tol * abs(L):
            break  # stationary up to the Lagrange multiplier
        pred = float(np.sum(sg.values * rho * dvals) * TWO_PI / th.size)  # -dF/ds
        s = opts.max_move / scale
        if step_prev is not None:
            s = min(s, 2.0 * step_prev)
        accepted = None
        while s >= opts.min_step:
            trial = volume_normalize(dom.with_radial(dom.radial - direction * s))
            tctx = ev.context(trial)
            Et = ev.energy(trial, tctx)
            if Et <= E - opts.armijo * s * pred and Et < E:
                accepted = (trial, tctx, Et)
                break
            s *= 0.5
        if accepted is None:
            if pred * opts.max_move / scale < opts.energy_tol * 100:
                break
            raise LineSearchFailure(f"no decrease for steps down to {opts.min_step:g} at iteration {it}")
        dom, ctx, E_new = accepted
        step_prev = s
        done = E - E_new < opts.energy_tol
        E = E_new
        if done:
            sg = shape_gradient(dom, f, params, opts.mesh_h, context=ctx, check_bound=False)
            haus, _ = hausdorff_to_ball(dom)
            trace.append(TraceRow(it + 1, E, el_residual(dom, f, params, gradient=sg),
                                  float(np.linalg.norm(truncated_barycenter(dom) - dom.center)),
                                  haus, s))
            if callback is not None:
                callback(it + 1, dom, trace[-1])
            break
    return dom, trace
