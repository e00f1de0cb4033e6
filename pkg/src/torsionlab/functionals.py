"""Stability functionals: deficits, resolvent distance, penalties and the energy F_tau."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from functools import cached_property

import numpy as np

from . import closed_forms
from .errors import EmptyDictionary, FNormViolation, InvalidConfig
from .fem import (FemField, l2_distance_sq, cross_l2, quadrature_points, solve_eigen,
                  solve_poisson, torsional_rigidity)
from .geometry import (StarDomain, fraenkel_asymmetry, mesh_star_domain, rings_for,
                       truncated_barycenter, volume, volume_normalize)

OMEGA_2 = np.pi
DEFAULT_H = 0.03
TAU_CAP = 0.1  # the selection argument only needs small tau; larger values are rejected


@dataclass(frozen=True)
class PenaltyParams:
    """Weights of ``F_tau = tor + V_eta(|Omega|) + tau h(beta^2)``."""

    a: float = 1e-3
    tau: float = 1e-3
    eta: float = 0.05

    def __post_init__(self):
        if not 0.0 < self.a <= 1.0:
            raise InvalidConfig(f"a must lie in (0, 1], got {self.a}")
        if self.tau < 0.0:
            raise InvalidConfig(f"tau must be nonnegative, got {self.tau}")
        if self.tau > TAU_CAP:
            raise InvalidConfig(f"tau={self.tau} exceeds the cap {TAU_CAP}")
        if self.eta <= 0.0:
            raise InvalidConfig(f"eta must be positive, got {self.eta}")


def h_penalty(t, a: float):
    """``h(t) = sqrt(a^2 + (a - t)^2)``; minimal (= a) at ``t = a``."""
    if a <= 0:
        raise ValueError("a must be positive")
    return np.sqrt(a * a + (a - np.asarray(t, dtype=float)) ** 2) + 0.0


def h_penalty_slope(t, a: float):
    """``C_Omega = 2 h'(t) = 2 (t - a) / h(t)``, bounded by 2 in absolute value."""
    return 2.0 * (np.asarray(t, dtype=float) - a) / h_penalty(t, a)


def volume_penalty(t, eta: float):
    """Piecewise-linear relaxation of the area constraint ``|Omega| = pi``."""
    if eta <= 0:
        raise ValueError("eta must be positive")
    d = np.asarray(t, dtype=float) - OMEGA_2
    return np.where(d <= 0, eta * d, d / eta) + 0.0


# ---------------------------------------------------------------------------
# Right-hand sides
# ---------------------------------------------------------------------------

def check_rhs_bound(f, mesh, tol: float = 1e-9) -> None:
    """Raise FNormViolation if ``sup |f| > 1`` on vertices and quadrature points."""
    if np.isscalar(f):
        sup = abs(float(f))
    else:
        X, _ = quadrature_points(mesh)
        pts = np.concatenate([mesh.vertices, X.reshape(-1, 2)])
        sup = float(np.max(np.abs(f(pts[:, 0], pts[:, 1]))))
    if sup > 1.0 + tol:
        raise FNormViolation(f"sup|f| = {sup:.6g} exceeds 1")


def bump(center, width: float):
    """Smooth bump ``exp(1 - 1/(1 - |x - c|^2 / s^2))`` supported in ``B_s(c)``, peak 1."""
    cx, cy = center

    def f(x, y):
        q = ((np.asarray(x) - cx) ** 2 + (np.asarray(y) - cy) ** 2) / width ** 2
        out = np.zeros(np.shape(q))
        inside = q < 1.0
        out[inside] = np.exp(1.0 - 1.0 / (1.0 - q[inside]))
        return np.clip(out, 0.0, 1.0)

    f.label = f"bump({cx:g},{cy:g};{width:g})"
    return f


def default_dictionary():
    """Nonnegative test forcings with unit sup-norm bound: two constants and 18 bumps."""
    items = [("const1", 1.0), ("const0.5", 0.5)]
    for s in (0.3, 0.6):
        for cx in (-0.5, 0.0, 0.5):
            for cy in (-0.5, 0.0, 0.5):
                items.append((f"bump({cx:g},{cy:g};{s:g})", bump((cx, cy), s)))
    return items


# ---------------------------------------------------------------------------
# Resolvent pair on Omega and on the ball at its barycenter
# ---------------------------------------------------------------------------

class ResolventContext:
    """Meshes and factorizations for ``Omega`` and ``B(x_Omega)``, reused across forcings."""

    def __init__(self, domain: StarDomain, mesh_h: float = DEFAULT_H, n_rings: int | None = None,
                 ball_rings: int | None = None):
        self.domain = domain
        self.mesh_h = mesh_h
        self.center = truncated_barycenter(domain)
        self.mesh = mesh_star_domain(domain, mesh_h, n_rings)
        if ball_rings is None:
            ball_rings = rings_for(1.0, mesh_h)
        self.ball = StarDomain.disk(1.0, self.center)
        self.ball_mesh = mesh_star_domain(self.ball, mesh_h, ball_rings)

    @cached_property
    def torsion(self) -> FemField:
        return solve_poisson(self.mesh, 1.0)

    @cached_property
    def tor(self) -> float:
        return torsional_rigidity(self.torsion)

    def fields(self, f, check_bound: bool = True):
        if check_bound:
            check_rhs_bound(f, self.mesh)
            check_rhs_bound(f, self.ball_mesh)
        # constant forcings reuse the torsion function
        u = self.torsion * float(f) if np.isscalar(f) else solve_poisson(self.mesh, f)
        return u, solve_poisson(self.ball_mesh, f)

    def beta_sq(self, f, check_bound: bool = True, method: str = "mesh") -> float:
        u, ub = self.fields(f, check_bound)
        return distance_sq(u, ub, method)


def distance_sq(u: FemField, v: FemField, method: str = "mesh") -> float:
    if method == "mesh":
        return l2_distance_sq(u, v)
    if method == "grid":
        return cross_l2(u, v)
    raise ValueError(f"unknown method {method!r}")


def _require_unit_volume(domain: StarDomain, tol: float = 1e-3):
    vol = volume(domain)
    if abs(vol - OMEGA_2) > tol:
        raise InvalidConfig(f"domain area {vol:.6g} is not pi within {tol}")


def beta_sq(domain: StarDomain, f=1.0, mesh_h: float = DEFAULT_H, check_bound: bool = True,
            require_unit_volume: bool = True, method: str = "mesh",
            n_rings: int | None = None) -> float:
    """``int_{R^2} |u_Omega^f - u_{B(x_Omega)}^f|^2`` with both solutions zero-extended.

    ``method="mesh"`` integrates the cross term on the domain mesh (default);
    ``method="grid"`` uses the background-grid midpoint rule of ``cross_l2``.
    ``n_rings`` pins the domain mesh topology (see ``mesh_star_domain``).
    """
    if require_unit_volume:
        _require_unit_volume(domain)
    return ResolventContext(domain, mesh_h, n_rings).beta_sq(f, check_bound, method)


def resolvent_distance_profile(domain: StarDomain, dictionary=None, mesh_h: float = DEFAULT_H,
                               context: ResolventContext | None = None):
    """``[(label, beta_f)]`` over the dictionary."""
    items = default_dictionary() if dictionary is None else list(dictionary)
    if not items:
        raise EmptyDictionary("dictionary of forcings is empty")
    items = [it if isinstance(it, tuple) else (getattr(it, "label", repr(it)), it) for it in items]
    ctx = context or ResolventContext(domain, mesh_h)
    return [(name, float(np.sqrt(ctx.beta_sq(f)))) for name, f in items]


def resolvent_distance_lb(domain: StarDomain, dictionary=None, mesh_h: float = DEFAULT_H,
                          context: ResolventContext | None = None) -> float:
    """Lower bound on ``||(-Lap)_Omega^{-1} - (-Lap)_{B(x_Omega)}^{-1}||_{L^inf -> L^2}``.

    Only the listed forcings are tried, so the true operator norm may be larger.
    """
    return max(v for _, v in resolvent_distance_profile(domain, dictionary, mesh_h, context))


def energy(domain: StarDomain, f=1.0, params: PenaltyParams = PenaltyParams(),
           mesh_h: float = DEFAULT_H, context: ResolventContext | None = None,
           check_bound: bool = True) -> float:
    """``F_tau = tor + V_eta(|Omega|) + tau h(beta_f^2)``."""
    ctx = context or ResolventContext(domain, mesh_h)
    val = ctx.tor + float(volume_penalty(volume(domain), params.eta))
    if params.tau > 0:
        val += params.tau * float(h_penalty(ctx.beta_sq(f, check_bound), params.a))
    return float(val)


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------

def discrete_bias(mesh_h: float):
    """FEM minus exact values on the unit disk: ``(tor bias, lambda_1 bias)``."""
    m = mesh_star_domain(StarDomain.disk(), mesh_h)
    tor_b = torsional_rigidity(m) - closed_forms.ball_torsional_rigidity(2, 1.0)
    lam_b = float(solve_eigen(m, 1).eigenvalues[0]) - closed_forms.disk_eigenvalue(1)
    return float(tor_b), float(lam_b)


@dataclass(frozen=True)
class StabilityReport:
    fk_deficit: float
    sv_deficit: float
    beta_sq: float
    asymmetry: float
    barycenter: tuple
    resolvent_lb: float
    mesh_h: float
    sv_bias: float
    fk_bias: float

    def to_dict(self) -> dict:
        d = asdict(self)
        d["barycenter"] = list(self.barycenter)
        return d

    def to_json(self, path=None) -> str:
        text = json.dumps(self.to_dict(), indent=2, sort_keys=True)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text + "\n")
        return text

    @classmethod
    def from_dict(cls, d: dict) -> "StabilityReport":
        d = dict(d)
        d["barycenter"] = tuple(d["barycenter"])
        return cls(**d)


def stability_report(domain: StarDomain, f=1.0, mesh_h: float = DEFAULT_H, dictionary=None,
                     check_bound: bool = True) -> StabilityReport:
    """Faber-Krahn and Saint-Venant deficits against exact ball values, plus beta, alpha, x_Omega.

    ``sv_bias``/``fk_bias`` are the same FEM-minus-exact gaps measured on the
    unit disk at this resolution, for consumers that want to subtract them.
    """
    _require_unit_volume(domain)
    ctx = ResolventContext(domain, mesh_h)
    lam1 = float(solve_eigen(ctx.mesh, 1).eigenvalues[0])
    fk = lam1 - closed_forms.disk_eigenvalue(1)
    sv = ctx.tor - closed_forms.ball_torsional_rigidity(2, 1.0)
    b2 = ctx.beta_sq(f, check_bound)
    alpha = fraenkel_asymmetry(domain if abs(volume(domain) - OMEGA_2) <= 1e-6
                               else volume_normalize(domain))
    lb = resolvent_distance_lb(domain, dictionary, mesh_h, context=ctx)
    tb, lb_bias = discrete_bias(mesh_h)
    return StabilityReport(float(fk), float(sv), float(b2), float(alpha),
                           tuple(float(c) for c in ctx.center), float(lb), float(mesh_h),
                           tb, lb_bias)

