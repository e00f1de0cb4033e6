"""Nearly spherical sets ``{(1 + phi(x)) x : x in dB}``: H^{1/2} norms, the spectral gap
of the torsion deficit, the resolvent (Fuglede-type) comparison and the Taylor
expansion of ``tor`` at the ball.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from . import closed_forms
from .errors import InvalidConfig, NotNormalized
from .fem import FemField, torsional_rigidity
from .functionals import DEFAULT_H, beta_sq, discrete_bias
from .geometry import (TWO_PI, BoundaryFunction, StarDomain, classical_barycenter,
                       mesh_star_domain, volume)

NORMALIZE_TOL = 1e-8
GAP_C1_MAX = 0.05


def _moments(phi: BoundaryFunction, th):
    r = 1.0 + phi(th)
    c, s = np.cos(th), np.sin(th)
    area = 0.5 * np.mean(r ** 2) * TWO_PI
    mx = np.mean(r ** 3 * c) * TWO_PI / 3.0
    my = np.mean(r ** 3 * s) * TWO_PI / 3.0
    return np.array([area - np.pi, mx, my]), r, c, s


@dataclass(frozen=True, eq=False)
class NearlySpherical:
    """Perturbation ``phi`` of the unit circle with ``||phi||_{C^0} < 1``."""

    phi: BoundaryFunction
    normalized: bool = False

    def __post_init__(self):
        if self.phi.c0_norm() >= 1.0:
            raise InvalidConfig("||phi||_C0 must be below 1")

    @classmethod
    def normalize(cls, phi: BoundaryFunction, tol: float = 1e-12, max_iter: int = 50) -> "NearlySpherical":
        """Adjust ``a0, a1, b1`` by Newton so that area is pi and barycenter is 0."""
        K = max(phi.order, 1)
        a, b = np.pad(phi.a, (0, K - phi.order)), np.pad(phi.b, (0, K - phi.order))
        a0 = phi.a0
        th = TWO_PI * np.arange(max(256, 6 * K + 16)) / max(256, 6 * K + 16)
        for _ in range(max_iter):
            cur = BoundaryFunction(a0, a, b)
            F, r, c, s = _moments(cur, th)
            if np.max(np.abs(F)) < tol:
                break
            # columns: d/da0, d/da1 (cos), d/db1 (sin)
            J = np.empty((3, 3))
            for j, basis in enumerate((np.ones_like(th), c, s)):
                J[0, j] = np.mean(r * basis) * TWO_PI
                J[1, j] = np.mean(r ** 2 * c * basis) * TWO_PI
                J[2, j] = np.mean(r ** 2 * s * basis) * TWO_PI
            d = np.linalg.solve(J, -F)
            a0 += d[0]
            a = a.copy()
            b = b.copy()
            a[0] += d[1]
            b[0] += d[2]
        out = cls(BoundaryFunction(a0, a, b), True)
        out.check_normalized()
        return out

    def domain(self) -> StarDomain:
        return StarDomain.from_phi(self.phi)

    def check_normalized(self, tol: float = NORMALIZE_TOL) -> None:
        dom = self.domain()
        dv = abs(volume(dom) - np.pi)
        db = float(np.linalg.norm(classical_barycenter(dom)))
        if dv > tol or db > tol:
            raise NotNormalized(f"|area - pi| = {dv:.3g}, |barycenter| = {db:.3g}")


def harmonic_extension(phi: BoundaryFunction, mesh=None, mesh_h: float = DEFAULT_H) -> FemField:
    """``sum r^k (a_k cos k theta + b_k sin k theta) + a0`` at the vertices of a unit-disk mesh."""
    if mesh is None:
        mesh = mesh_star_domain(StarDomain.disk(), mesh_h)
    x, y = mesh.vertices.T
    z = x + 1j * y
    vals = np.full(z.shape, phi.a0, dtype=float)
    zk = np.ones_like(z)
    for k in range(1, phi.order + 1):
        zk = zk * z  # r^k e^{ik theta}
        vals += phi.a[k - 1] * zk.real + phi.b[k - 1] * zk.imag
    return FemField(mesh, vals)


def h_half_norm_sq(phi: BoundaryFunction) -> float:
    """Full ``H^1(B)`` norm squared of the harmonic extension.

    Mode ``k >= 1`` contributes ``(pi k + pi / (2k + 2)) (a_k^2 + b_k^2)``
    (gradient and L^2 parts); the constant contributes ``pi a0^2``.
    """
    k = np.arange(1, phi.order + 1)
    w = np.pi * k + np.pi / (2 * k + 2)
    return float(np.pi * phi.a0 ** 2 + np.sum(w * (phi.a ** 2 + phi.b ** 2)))


def dirichlet_energy_extension(phi: BoundaryFunction) -> float:
    """``int_B |grad H(phi)|^2 = pi sum k (a_k^2 + b_k^2)``."""
    k = np.arange(1, phi.order + 1)
    return float(np.pi * np.sum(k * (phi.a ** 2 + phi.b ** 2)))


# ---------------------------------------------------------------------------
# Checks
# ---------------------------------------------------------------------------

def _as_nearly(phi) -> NearlySpherical:
    return phi if isinstance(phi, NearlySpherical) else NearlySpherical(phi)


@dataclass(frozen=True)
class GapCheck:
    deficit: float
    bound: float
    ratio: float
    slack: float
    holds: bool


def check_spectral_gap(phi, mesh_h: float = 0.02, slack: float | None = None,
                       enforce_c1: bool = False) -> GapCheck:
    """Torsion deficit of a normalized nearly spherical set vs ``||phi||^2_{H^{1/2}} / 128``.

    The deficit uses the exact ball value; ``slack`` defaults to twice the
    FEM torsion bias on the unit disk at this resolution.  The inequality is
    only claimed for ``||phi||_{C^1} <= 0.05``; ``enforce_c1`` turns that
    regime into a hard precondition.
    """
    ns = _as_nearly(phi)
    ns.check_normalized()
    if enforce_c1 and ns.phi.c1_norm() > GAP_C1_MAX + 1e-12:
        raise InvalidConfig(f"||phi||_C1 = {ns.phi.c1_norm():.4g} exceeds {GAP_C1_MAX}")
    tor = torsional_rigidity(mesh_star_domain(ns.domain(), mesh_h))
    deficit = tor - closed_forms.ball_torsional_rigidity(2, 1.0)
    bound = h_half_norm_sq(ns.phi) / (32.0 * 2 ** 2)
    if slack is None:
        slack = 2.0 * abs(discrete_bias(mesh_h)[0])
    ratio = deficit / bound if bound > 0 else np.inf
    return GapCheck(float(deficit), float(bound), float(ratio), float(slack),
                    bool(deficit >= bound - slack))


@dataclass(frozen=True)
class FugledeCheck:
    deficit: float
    beta_sq: float
    ratio: float


def check_fuglede(phi, f=1.0, mesh_h: float = 0.02) -> FugledeCheck:
    """Torsion deficit against ``beta_f^2``; their ratio estimates the constant."""
    ns = _as_nearly(phi)
    ns.check_normalized()
    dom = ns.domain()
    mesh = mesh_star_domain(dom, mesh_h)
    tor = torsional_rigidity(mesh)
    deficit = tor - closed_forms.ball_torsional_rigidity(2, 1.0)
    if ns.phi.c0_norm() == 0.0:
        return FugledeCheck(0.0, 0.0, float("nan"))
    b2 = beta_sq(dom, f, mesh_h)
    return FugledeCheck(float(deficit), float(b2), float(deficit / b2) if b2 > 0 else float("inf"))


# ---------------------------------------------------------------------------
# Expansion of tor at the ball
# ---------------------------------------------------------------------------

def taylor_coefficients(phi: BoundaryFunction):
    """``(e'(0), e''(0))`` of ``e(t) = tor((1 + t phi) B)`` in the plane.

    ``e'(0) = -1/(2n^2) int phi`` and
    ``e''(0) = 1/n^2 int_B |grad H phi|^2 + (-1/n + (n-1)/(2n^2)) int phi^2``.
    """
    n = 2
    mean_int = TWO_PI * phi.a0
    sq_int = phi.l2_norm_sq()
    e1 = -mean_int / (2.0 * n * n)
    e2 = dirichlet_energy_extension(phi) / n ** 2 + (-1.0 / n + (n - 1) / (2.0 * n * n)) * sq_int
    return float(e1), float(e2)


@dataclass(frozen=True)
class TaylorReport:
    t_values: list
    values: list
    model: list
    residuals: list
    slope: float
    e1: float
    e2: float
    rings: int

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)


def _tor_flow(phi, t, rings):
    dom = StarDomain.from_phi(phi * t)
    return torsional_rigidity(mesh_star_domain(dom, 1.0 / rings, rings))


def taylor_check(phi: BoundaryFunction, t_values=(0.01, 0.02, 0.04), rings: int = 40) -> TaylorReport:
    """Fit of ``|e(t) - e(0) - t e'(0) - t^2 e''(0)/2|`` against ``t`` (log-log slope).

    ``e`` is evaluated on ring meshes with ``rings`` and ``2 rings`` rings (fixed
    topology along the flow) and Richardson-extrapolated in the mesh size, so the
    O(h^2) error of the quadratic coefficient does not mask the remainder.
    """
    t = np.asarray(t_values, dtype=float)
    if np.any(t <= 0) or np.any(t > 0.05):
        raise InvalidConfig("t values must lie in (0, 0.05]")
    e1, e2 = taylor_coefficients(phi)

    def extrapolated(tt):
        coarse = _tor_flow(phi, tt, rings) - _tor_flow(phi, 0.0, rings)
        fine = _tor_flow(phi, tt, 2 * rings) - _tor_flow(phi, 0.0, 2 * rings)
        return (4.0 * fine - coarse) / 3.0

    vals = np.array([extrapolated(tt) for tt in t])
    model = t * e1 + 0.5 * t ** 2 * e2
    res = np.abs(vals - model)
    slope = float(np.polyfit(np.log(t), np.log(res), 1)[0])
    e0 = closed_forms.ball_torsional_rigidity(2, 1.0)
    return TaylorReport(t.tolist(), (vals + e0).tolist(), (model + e0).tolist(), res.tolist(),
                        slope, e1, e2, rings)
