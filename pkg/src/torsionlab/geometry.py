"""Star-shaped planar domains, their meshes, and measure-theoretic quantities.

A :class:`StarDomain` is described by a center and a radial function
``rho(theta) > 0`` stored as a truncated Fourier series
(:class:`BoundaryFunction`).  Optional disjoint auxiliary disks allow the
multi-component configurations used in the satellite example.

Meshes are produced by pushing a fixed, quasi-uniform triangulation of the
unit disk (concentric rings with ``6 i`` points on ring ``i``) through the
radial map ``(s, theta) -> center + s * rho(theta) * (cos theta, sin theta)``.
The construction is deterministic and depends smoothly on ``rho``, which keeps
discrete functionals differentiable under boundary perturbations.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy import integrate, interpolate, optimize

from .errors import DegenerateMesh, NoConvergence, NonPositiveRadius

TWO_PI = 2.0 * np.pi


def _frozen(arr) -> np.ndarray:
    out = np.array(arr, dtype=float)
    out.setflags(write=False)
    return out


# ---------------------------------------------------------------------------
# Boundary functions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BoundaryFunction:
    """Real trigonometric polynomial ``a0 + sum_k a_k cos(k t) + b_k sin(k t)``."""

    a0: float
    a: np.ndarray = field(default_factory=lambda: _frozen([]))
    b: np.ndarray = field(default_factory=lambda: _frozen([]))

    def __post_init__(self):
        a = np.atleast_1d(np.asarray(self.a, dtype=float))
        b = np.atleast_1d(np.asarray(self.b, dtype=float))
        K = max(a.size, b.size)
        a = np.pad(a, (0, K - a.size))
        b = np.pad(b, (0, K - b.size))
        object.__setattr__(self, "a0", float(self.a0))
        object.__setattr__(self, "a", _frozen(a))
        object.__setattr__(self, "b", _frozen(b))

    # constructors -------------------------------------------------------
    @classmethod
    def constant(cls, c: float) -> "BoundaryFunction":
        return cls(c)

    @classmethod
    def mode(cls, k: int, amp: float = 1.0, kind: str = "cos") -> "BoundaryFunction":
        """``amp * cos(k t)`` (or ``sin``); ``k = 0`` gives a constant."""
        if k == 0:
            return cls(amp if kind == "cos" else 0.0)
        coeffs = np.zeros(k)
        coeffs[k - 1] = amp
        if kind == "cos":
            return cls(0.0, coeffs, np.zeros(k))
        return cls(0.0, np.zeros(k), coeffs)

    @classmethod
    def from_samples(cls, values, K: int | None = None) -> "BoundaryFunction":
        """Project equispaced samples on ``[0, 2 pi)`` onto order ``K``."""
        values = np.asarray(values, dtype=float)
        N = values.size
        c = np.fft.rfft(values) / N
        kmax = (N - 1) // 2 if K is None else min(K, (N - 1) // 2)
        a0 = c[0].real
        a = 2.0 * c[1:kmax + 1].real
        b = -2.0 * c[1:kmax + 1].imag
        return cls(a0, a, b)

    @classmethod
    def from_callable(cls, func, K: int = 64) -> "BoundaryFunction":
        N = 4 * K + 4
        theta = TWO_PI * np.arange(N) / N
        return cls.from_samples(func(theta), K)

    # evaluation ---------------------------------------------------------
    @property
    def order(self) -> int:
        return int(self.a.size)

    def __call__(self, theta):
        theta = np.asarray(theta, dtype=float)
        out = np.full(theta.shape, self.a0)
        for k in range(1, self.order + 1):
            ak, bk = self.a[k - 1], self.b[k - 1]
            if ak != 0.0:
                out = out + ak * np.cos(k * theta)
            if bk != 0.0:
                out = out + bk * np.sin(k * theta)
        return out

    def derivative(self) -> "BoundaryFunction":
        k = np.arange(1, self.order + 1)
        return BoundaryFunction(0.0, k * self.b, -k * self.a)

    def truncate(self, K: int) -> "BoundaryFunction":
        return BoundaryFunction(self.a0, self.a[:K], self.b[:K])

    def c0_norm(self, n: int = 4096) -> float:
        theta = TWO_PI * np.arange(max(n, 8 * self.order + 8)) / max(n, 8 * self.order + 8)
        return float(np.max(np.abs(self(theta))))

    def c1_norm(self, n: int = 4096) -> float:
        return max(self.c0_norm(n), self.derivative().c0_norm(n))

    def l2_norm_sq(self) -> float:
        """``int_0^{2pi} g^2 dt`` (exact, Parseval)."""
        return float(TWO_PI * self.a0 ** 2 + np.pi * (np.sum(self.a ** 2) + np.sum(self.b ** 2)))

    def mean(self) -> float:
        return self.a0

    # arithmetic ---------------------------------------------------------
    def __add__(self, other):
        if not isinstance(other, BoundaryFunction):
            return BoundaryFunction(self.a0 + float(other), self.a, self.b)
        K = max(self.order, other.order)
        a = np.pad(self.a, (0, K - self.order)) + np.pad(other.a, (0, K - other.order))
        b = np.pad(self.b, (0, K - self.order)) + np.pad(other.b, (0, K - other.order))
        return BoundaryFunction(self.a0 + other.a0, a, b)

    __radd__ = __add__

    def __neg__(self):
        return BoundaryFunction(-self.a0, -self.a, -self.b)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, s: float):
        s = float(s)
        return BoundaryFunction(s * self.a0, s * self.a, s * self.b)

    __rmul__ = __mul__

    def to_dict(self) -> dict:
        return {"a0": self.a0, "a": self.a.tolist(), "b": self.b.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "BoundaryFunction":
        return cls(d.get("a0", 0.0), d.get("a", []), d.get("b", []))


# ---------------------------------------------------------------------------
# Domains
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Ball:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", _frozen(self.center))
        object.__setattr__(self, "radius", float(self.radius))
        if self.radius <= 0:
            raise NonPositiveRadius(f"ball radius must be positive, got {self.radius}")


def _quad_count(K: int, minimum: int = 256) -> int:
    return max(minimum, 4 * K + 16)


@dataclass(frozen=True)
class StarDomain:
    """Open set star-shaped about ``center``, plus optional disjoint disks."""

    center: np.ndarray
    radial: BoundaryFunction
    balls: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "center", _frozen(np.reshape(self.center, 2)))
        object.__setattr__(self, "balls", tuple(
            b if isinstance(b, Ball) else Ball(*b) for b in self.balls))
        theta = self.quadrature_angles()
        rho = self.radial(theta)
        if np.min(rho) <= 0:
            raise NonPositiveRadius(
                f"radial function is not positive (min {np.min(rho):.3g})")
        rmax = float(np.max(rho))
        for i, bi in enumerate(self.balls):
            if np.linalg.norm(bi.center - self.center) <= rmax + bi.radius:
                raise ValueError(f"auxiliary ball {i} intersects the star-shaped core")
            for bj in self.balls[i + 1:]:
                if np.linalg.norm(bi.center - bj.center) <= bi.radius + bj.radius:
                    raise ValueError("auxiliary balls must be pairwise disjoint")

    # constructors -------------------------------------------------------
    @classmethod
    def disk(cls, radius: float = 1.0, center=(0.0, 0.0)) -> "StarDomain":
        return cls(center, BoundaryFunction(radius))

    @classmethod
    def ellipse(cls, a: float, b: float, center=(0.0, 0.0), K: int = 96) -> "StarDomain":
        """Ellipse with semi-axes ``a`` (along x) and ``b`` (along y)."""
        def rho(t):
            return a * b / np.sqrt((b * np.cos(t)) ** 2 + (a * np.sin(t)) ** 2)
        return cls(center, BoundaryFunction.from_callable(rho, K))

    @classmethod
    def ellipse_eps(cls, eps: float, center=(0.0, 0.0)) -> "StarDomain":
        """Area-``pi`` ellipse ``(1+eps)^2 x^2 + y^2/(1+eps)^2 < 1``."""
        return cls.ellipse(1.0 / (1.0 + eps), 1.0 + eps, center)

    @classmethod
    def from_phi(cls, phi: BoundaryFunction, center=(0.0, 0.0)) -> "StarDomain":
        """Domain with boundary ``{center + (1 + phi(x)) x : |x| = 1}``."""
        return cls(center, phi + 1.0)

    @classmethod
    def satellites(cls, r: float, distance: float = 2.0) -> "StarDomain":
        """Core disk plus two disks of radius ``r`` at ``+-distance e1``, total area pi."""
        core = np.sqrt(1.0 - 2.0 * r * r)
        return cls((0.0, 0.0), BoundaryFunction(core),
                   (Ball((distance, 0.0), r), Ball((-distance, 0.0), r)))

    # geometry -----------------------------------------------------------
    def quadrature_angles(self, n: int | None = None) -> np.ndarray:
        n = _quad_count(self.radial.order) if n is None else n
        return TWO_PI * np.arange(n) / n

    def boundary_points(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        rho = self.radial(theta)
        return self.center + np.stack([rho * np.cos(theta), rho * np.sin(theta)], axis=-1)

    def outward_normal(self, theta):
        """Unit outward normals and speed ``|X'(theta)|`` of the core boundary."""
        theta = np.asarray(theta, dtype=float)
        rho = self.radial(theta)
        drho = self.radial.derivative()(theta)
        c, s = np.cos(theta), np.sin(theta)
        n = np.stack([drho * s + rho * c, -drho * c + rho * s], axis=-1)
        speed = np.sqrt(rho ** 2 + drho ** 2)
        return n / speed[..., None], speed

    def max_radius(self) -> float:
        return float(np.max(self.radial(self.quadrature_angles(1024))))

    def diameter(self) -> float:
        pts = [self.boundary_points(self.quadrature_angles(512))]
        for bl in self.balls:
            t = TWO_PI * np.arange(128) / 128
            pts.append(bl.center + bl.radius * np.stack([np.cos(t), np.sin(t)], -1))
        P = np.concatenate(pts)
        return float(np.linalg.norm(P[:, None, :] - P[None, :, :], axis=-1).max())

    def translated(self, z) -> "StarDomain":
        z = np.asarray(z, dtype=float)
        return StarDomain(self.center + z, self.radial,
                          tuple(Ball(b.center + z, b.radius) for b in self.balls))

    def scaled(self, r: float) -> "StarDomain":
        """Dilation by ``r`` about ``center``."""
        return StarDomain(self.center, self.radial * r,
                          tuple(Ball(self.center + r * (b.center - self.center), r * b.radius)
                                for b in self.balls))

    def with_radial(self, radial: BoundaryFunction) -> "StarDomain":
        return StarDomain(self.center, radial, self.balls)

    def contains(self, pts) -> np.ndarray:
        pts = np.atleast_2d(pts)
        d = pts - self.center
        r = np.hypot(d[:, 0], d[:, 1])
        inside = r < self.radial(np.arctan2(d[:, 1], d[:, 0]))
        for bl in self.balls:
            inside |= np.linalg.norm(pts - bl.center, axis=1) < bl.radius
        return inside

    # serialization ------------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "center": self.center.tolist(),
            "fourier": self.radial.to_dict(),
            "balls": [{"center": b.center.tolist(), "radius": b.radius} for b in self.balls],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "StarDomain":
        balls = tuple(Ball(b["center"], b["radius"]) for b in d.get("balls", []))
        return cls(d.get("center", (0.0, 0.0)), BoundaryFunction.from_dict(d["fourier"]), balls)

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2))

    @classmethod
    def load(cls, path) -> "StarDomain":
        return cls.from_dict(json.loads(Path(path).read_text()))


# ---------------------------------------------------------------------------
# Measure-theoretic quantities
# ---------------------------------------------------------------------------

def volume(domain: StarDomain) -> float:
    """Area: ``1/2 int rho^2 dtheta`` (exact trapezoid) plus disk areas."""
    theta = domain.quadrature_angles()
    rho = domain.radial(theta)
    area = 0.5 * TWO_PI * np.mean(rho ** 2)
    area += sum(np.pi * b.radius ** 2 for b in domain.balls)
    return float(area)


def volume_normalize(domain: StarDomain) -> StarDomain:
    return domain.scaled(np.sqrt(np.pi / volume(domain)))


def _first_moment(domain: StarDomain) -> np.ndarray:
    theta = domain.quadrature_angles()
    rho3 = domain.radial(theta) ** 3
    m = TWO_PI / 3.0 * np.array([np.mean(rho3 * np.cos(theta)), np.mean(rho3 * np.sin(theta))])
    core_area = 0.5 * TWO_PI * np.mean(domain.radial(theta) ** 2)
    moment = m + core_area * domain.center
    for b in domain.balls:
        moment = moment + np.pi * b.radius ** 2 * b.center
    return moment


def classical_barycenter(domain: StarDomain) -> np.ndarray:
    return _first_moment(domain) / volume(domain)


def domain_quadrature(domain: StarDomain, n_theta: int | None = None, n_r: int = 12):
    """Polar tensor quadrature (points, weights) over the whole domain."""
    theta = domain.quadrature_angles(n_theta)
    s, ws = np.polynomial.legendre.leggauss(n_r)
    s, ws = 0.5 * (s + 1.0), 0.5 * ws

    def polar(center, rho_vals, th):
        R = s[None, :] * rho_vals[:, None]
        pts = center + np.stack([R * np.cos(th)[:, None], R * np.sin(th)[:, None]], -1)
        w = (TWO_PI / th.size) * ws[None, :] * s[None, :] * rho_vals[:, None] ** 2
        return pts.reshape(-1, 2), w.ravel()

    pts, w = [polar(domain.center, domain.radial(theta), theta)], []
    w.append(pts[0][1])
    pts[0] = pts[0][0]
    for b in domain.balls:
        th = TWO_PI * np.arange(64) / 64
        p, wb = polar(b.center, np.full(th.size, b.radius), th)
        pts.append(p)
        w.append(wb)
    return np.concatenate(pts), np.concatenate(w)


# --- truncated barycenter --------------------------------------------------

Q_FLAT = 100.0
Q_TABLE_MAX = 1.0e4


def q_second(t):
    """Second derivative of the barycenter profile ``q``."""
    t = np.asarray(t, dtype=float)
    out = np.full(t.shape, 2.0)
    far = t > Q_FLAT
    out[far] = 1.0 / (t[far] ** 2 - Q_FLAT ** 2 + 0.5)
    return out


@lru_cache(maxsize=1)
def _q_table():
    # q'' is integrated twice from t = Q_FLAT, where q = t^2 exactly.
    t = np.linspace(Q_FLAT, Q_TABLE_MAX, 400_001)
    q1 = 2.0 * Q_FLAT + integrate.cumulative_simpson(q_second(t), x=t, initial=0.0)
    q0 = Q_FLAT ** 2 + integrate.cumulative_simpson(q1, x=t, initial=0.0)
    return (interpolate.CubicSpline(t, q0), interpolate.CubicSpline(t, q1))


def q_profile(t):
    """``q(t)``: equal to ``t^2`` up to 100, then convexified with slowly growing slope."""
    t = np.asarray(t, dtype=float)
    out = t ** 2
    far = t > Q_FLAT
    if np.any(far):
        q0, q1 = _q_table()
        tf = np.minimum(t[far], Q_TABLE_MAX)
        out[far] = q0(tf) + q1(Q_TABLE_MAX) * (t[far] - tf)
    return out


def q_first(t):
    t = np.asarray(t, dtype=float)
    out = 2.0 * t
    far = t > Q_FLAT
    if np.any(far):
        _, q1 = _q_table()
        out[far] = q1(np.minimum(t[far], Q_TABLE_MAX))
    return out


def truncated_barycenter(domain: StarDomain, tol: float = 1e-10, max_iter: int = 100) -> np.ndarray:
    """Minimizer of ``x -> int_Omega q(|x - y|) dy`` by damped Newton."""
    pts, w = domain_quadrature(domain)
    area = float(np.sum(w))

    def objective(x):
        return float(np.sum(w * q_profile(np.linalg.norm(x - pts, axis=1))))

    def grad_hess(x):
        d = x - pts
        r = np.linalg.norm(d, axis=1)
        r_safe = np.where(r > 0, r, 1.0)
        u = d / r_safe[:, None]
        q1 = q_first(r)
        ratio = np.where(r > 0, q1 / r_safe, 2.0)
        g = np.sum((w * ratio)[:, None] * d, axis=0)
        q2 = q_second(r)
        uu = u[:, :, None] * u[:, None, :]
        eye = np.eye(2)[None]
        H = np.sum(w[:, None, None] * (q2[:, None, None] * uu + ratio[:, None, None] * (eye - uu)), axis=0)
        return g, H

    x = classical_barycenter(domain)
    for _ in range(max_iter):
        g, H = grad_hess(x)
        if np.linalg.norm(g) <= tol * area:
            return x
        step = -np.linalg.solve(H, g)
        f0, lam = objective(x), 1.0
        while lam > 1e-12 and objective(x + lam * step) > f0 + 1e-4 * lam * g @ step:
            lam *= 0.5
        x = x + lam * step
    g, _ = grad_hess(x)
    if np.linalg.norm(g) <= tol * area:
        return x
    raise NoConvergence(f"truncated barycenter: gradient {np.linalg.norm(g):.3g} after {max_iter} steps")


# --- Fraenkel asymmetry ----------------------------------------------------

def _lens_area(d: float, r1: float, r2: float) -> float:
    if d >= r1 + r2:
        return 0.0
    if d <= abs(r1 - r2):
        return np.pi * min(r1, r2) ** 2
    a1 = r1 ** 2 * np.arccos((d * d + r1 * r1 - r2 * r2) / (2 * d * r1))
    a2 = r2 ** 2 * np.arccos((d * d + r2 * r2 - r1 * r1) / (2 * d * r2))
    k = 0.5 * np.sqrt((-d + r1 + r2) * (d + r1 - r2) * (d - r1 + r2) * (d + r1 + r2))
    return float(a1 + a2 - k)


def ball_overlap(domain: StarDomain, x, radius: float = 1.0, n_theta: int = 8192) -> float:
    """``|Omega cap B_radius(x)|`` via ray/circle intersection in polar coordinates."""
    theta = domain.quadrature_angles(n_theta)
    rho = domain.radial(theta)
    e = np.stack([np.cos(theta), np.sin(theta)], -1)
    d = domain.center - np.asarray(x, dtype=float)
    # |d + t e|^2 = radius^2  ->  t^2 + 2 (d.e) t + |d|^2 - radius^2 = 0
    bcoef = e @ d
    disc = bcoef ** 2 - (d @ d - radius ** 2)
    root = np.sqrt(np.maximum(disc, 0.0))
    t1 = np.maximum(-bcoef - root, 0.0)
    t2 = np.minimum(-bcoef + root, rho)
    seg = np.where((disc > 0) & (t2 > t1), 0.5 * (t2 ** 2 - t1 ** 2), 0.0)
    area = TWO_PI * np.mean(seg)
    for b in domain.balls:
        area += _lens_area(float(np.linalg.norm(b.center - x)), b.radius, radius)
    return float(area)


def symmetric_difference(domain: StarDomain, x, radius: float = 1.0) -> float:
    return volume(domain) + np.pi * radius ** 2 - 2.0 * ball_overlap(domain, x, radius)


def fraenkel_asymmetry(domain: StarDomain, return_center: bool = False):
    """``inf_x |Omega symdiff B_1(x)|`` by Nelder-Mead from the barycenter."""
    vol = volume(domain)
    if abs(vol - np.pi) > 1e-6:
        raise ValueError(f"fraenkel_asymmetry expects unit-ball volume, got {vol:.8f}")
    x0 = classical_barycenter(domain)
    res = optimize.minimize(lambda x: symmetric_difference(domain, x), x0, method="Nelder-Mead",
                            options={"xatol": 1e-7, "fatol": 1e-10, "initial_simplex":
                                     np.array([x0, x0 + [0.05, 0], x0 + [0, 0.05]])})
    best = min(float(res.fun), symmetric_difference(domain, x0))
    value = max(best, 0.0)
    if return_center:
        return value, np.asarray(res.x)
    return value


# ---------------------------------------------------------------------------
# Meshing
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class TriangleMesh:
    """Conforming P1 triangulation.

    ``boundary_loops[c]`` lists the boundary vertices of component ``c``
    counter-clockwise; component 0 is the star-shaped core, whose boundary
    vertices sit at equispaced angles ``boundary_angles``.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    boundary_vertex: np.ndarray
    element_area: np.ndarray
    boundary_loops: tuple = ()
    boundary_angles: np.ndarray | None = None
    h: float = 0.0

    @property
    def n_vertices(self) -> int:
        return int(self.vertices.shape[0])

    @property
    def interior(self) -> np.ndarray:
        return np.flatnonzero(~self.boundary_vertex)

    def area(self) -> float:
        return float(np.sum(self.element_area))

    def element_diameters(self) -> np.ndarray:
        P = self.vertices[self.triangles]
        e = np.stack([P[:, 1] - P[:, 0], P[:, 2] - P[:, 1], P[:, 0] - P[:, 2]], 1)
        return np.linalg.norm(e, axis=2).max(axis=1)

    def export_text(self, path) -> None:
        """Plain text: vertex block ``x y is_boundary`` then triangle block ``i j k``."""
        with open(path, "w") as fh:
            fh.write(f"# vertices {self.n_vertices}\n")
            for (x, y), bnd in zip(self.vertices, self.boundary_vertex):
                fh.write(f"{x:.17g} {y:.17g} {int(bnd)}\n")
            fh.write(f"# triangles {self.triangles.shape[0]}\n")
            for t in self.triangles:
                fh.write(f"{t[0]} {t[1]} {t[2]}\n")


@lru_cache(maxsize=32)
def reference_disk(n_rings: int):
    """Ring triangulation of the unit disk: ``(s, theta, triangles)``.

    Ring ``i`` carries ``6 i`` points at angles ``2 pi j / (6 i)``; consecutive
    rings are stitched by merging their angle sequences.
    """
    s = [np.zeros(1)]
    th = [np.zeros(1)]
    for i in range(1, n_rings + 1):
        m = 6 * i
        s.append(np.full(m, i / n_rings))
        th.append(TWO_PI * np.arange(m) / m)
    offsets = np.cumsum([0] + [x.size for x in s])
    tris = []
    for i in range(n_rings):
        n1 = max(6 * i, 1)
        n2 = 6 * (i + 1)
        o1, o2 = offsets[i], offsets[i + 1]
        a = b = 0
        while a < n1 or b < n2:
            next_a = (a + 1) / n1 if i > 0 else np.inf
            next_b = (b + 1) / n2
            if a < n1 and (b >= n2 or next_a < next_b - 1e-12):
                tris.append((o1 + a % n1, o2 + b % n2, o1 + (a + 1) % n1))
                a += 1
            else:
                tris.append((o1 + a % n1, o2 + b % n2, o2 + (b + 1) % n2))
                b += 1
                if i == 0 and b >= n2:
                    a = n1
    S = np.concatenate(s)
    TH = np.concatenate(th)
    T = np.array(tris, dtype=np.int64)
    for arr in (S, TH, T):
        arr.setflags(write=False)
    return S, TH, T


def _signed_area(V, T):
    P = V[T]
    return 0.5 * ((P[:, 1, 0] - P[:, 0, 0]) * (P[:, 2, 1] - P[:, 0, 1])
                  - (P[:, 2, 0] - P[:, 0, 0]) * (P[:, 1, 1] - P[:, 0, 1]))


RING_DENSITY = 1.3


def rings_for(rmax: float, target_h: float, min_rings: int = 3) -> int:
    # ring spacing rmax / n_rings ~ target_h / 1.3 keeps every edge below 2 target_h
    return max(min_rings, int(np.ceil(RING_DENSITY * rmax / target_h - 1e-9)))


def _map_disk(center, rho_fn, rmax, target_h, n_rings=None):
    if n_rings is None:
        n_rings = rings_for(rmax, target_h)
    S, TH, T = reference_disk(n_rings)
    R = S * rho_fn(TH)
    V = np.asarray(center) + np.stack([R * np.cos(TH), R * np.sin(TH)], -1)
    nb = 6 * n_rings
    loop = np.arange(S.size - nb, S.size)
    return V, T, loop, TH[loop]


def mesh_star_domain(domain: StarDomain, target_h: float, n_rings: int | None = None) -> TriangleMesh:
    """Map the reference ring triangulation through the radial function.

    ``n_rings`` pins the ring count of the core (and so the mesh topology);
    this keeps discrete functionals continuous along a family of domains.
    """
    if target_h <= 0:
        raise ValueError("target_h must be positive")
    if np.any(domain.radial(domain.quadrature_angles()) <= 0):
        raise NonPositiveRadius("radial function must stay positive")
    V, T, loop, angles = _map_disk(domain.center, domain.radial, domain.max_radius(), target_h, n_rings)
    verts, tris, loops = [V], [T], [loop]
    offset = V.shape[0]
    for b in domain.balls:
        Vb, Tb, lb, _ = _map_disk(b.center, lambda t, r=b.radius: np.full_like(t, r),
                                  b.radius, target_h)
        verts.append(Vb)
        tris.append(Tb + offset)
        loops.append(lb + offset)
        offset += Vb.shape[0]
    V = np.concatenate(verts)
    T = np.concatenate(tris)
    area = _signed_area(V, T)
    if np.any(area <= 0):
        raise DegenerateMesh(f"{int(np.sum(area <= 0))} elements with non-positive area")
    bnd = np.zeros(V.shape[0], dtype=bool)
    for lp in loops:
        bnd[lp] = True
    for arr in (V, T, bnd, area):
        arr.setflags(write=False)
    return TriangleMesh(V, T, bnd, area, tuple(loops), _frozen(angles), float(target_h))
