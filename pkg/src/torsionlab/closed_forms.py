"""Analytic reference values that never touch the finite-element stack.

Balls are handled in general dimension ``n``; the ellipse family and the
Bessel spectrum of the disk are planar.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import integrate, special

from .errors import InvalidConfig


def unit_ball_volume(n: int) -> float:
    """``omega_n = pi^{n/2} / Gamma(n/2 + 1)``."""
    return float(np.pi ** (n / 2.0) / special.gamma(n / 2.0 + 1.0))


@dataclass(frozen=True)
class BallSpec:
    dim: int = 2
    radius: float = 1.0
    center: tuple = field(default=None)

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("radius must be positive")
        if self.dim < 1:
            raise ValueError("dimension must be positive")
        c = np.zeros(self.dim) if self.center is None else np.asarray(self.center, dtype=float)
        if c.shape != (self.dim,):
            raise ValueError("center has wrong dimension")
        object.__setattr__(self, "center", tuple(c.tolist()))


def ball_torsion_value(spec: BallSpec, x) -> np.ndarray:
    """Torsion function ``(r^2 - |x - x0|^2) / (2n)`` of the ball, zero outside."""
    x = np.asarray(x, dtype=float)
    d2 = np.sum((x - np.asarray(spec.center)) ** 2, axis=-1)
    return np.where(d2 < spec.radius ** 2, (spec.radius ** 2 - d2) / (2.0 * spec.dim), 0.0)


def ball_torsional_rigidity(dim: int, radius: float = 1.0) -> float:
    """``tor(B_r) = -r^{n+2} omega_n / (2n(n+2))``."""
    return -radius ** (dim + 2) * unit_ball_volume(dim) / (2.0 * dim * (dim + 2))


# ---------------------------------------------------------------------------
# Ellipses E_eps = {(1+eps)^2 x^2 + y^2/(1+eps)^2 < 1}
# ---------------------------------------------------------------------------

def ellipse_axes(eps: float):
    return 1.0 / (1.0 + eps), 1.0 + eps


def ellipse_torsion_constant(eps: float) -> float:
    """``C_eps`` with ``w = C_eps (1 - x^2/a^2 - y^2/b^2)``: ``-Lap w = 2 C (1/a^2 + 1/b^2) = 1``."""
    a, b = ellipse_axes(eps)
    return 1.0 / (2.0 * (a ** -2 + b ** -2))


def ellipse_torsion_function(eps: float, x, y):
    a, b = ellipse_axes(eps)
    q = 1.0 - (x / a) ** 2 - (y / b) ** 2
    return np.where(q > 0, ellipse_torsion_constant(eps) * q, 0.0)


def ellipse_torsion(eps: float):
    """Exact ``(tor(E_eps), tor(E_eps) - tor(B))``.

    ``int_E (1 - x^2/a^2 - y^2/b^2) = pi a b / 2`` and ``C = a^2 b^2 / (2(a^2 + b^2))``,
    so ``tor = -C pi a b / 4 = -pi a^3 b^3 / (8 (a^2 + b^2))``.
    """
    if abs(eps) >= 0.5:
        raise ValueError("|eps| must be below 0.5")
    a, b = ellipse_axes(eps)
    tor = -np.pi * a ** 3 * b ** 3 / (8.0 * (a * a + b * b))
    return float(tor), float(tor - ball_torsional_rigidity(2, 1.0))


def h1_distance_ellipse(eps: float, epsabs: float = 1e-13) -> float:
    """``int_{R^2} |grad w_E - grad w_B|^2`` (zero extension), nested adaptive quadrature in polar form."""
    if abs(eps) >= 0.3:
        raise ValueError("|eps| must be below 0.3")
    if eps == 0:
        return 0.0
    a, b = ellipse_axes(eps)
    C = ellipse_torsion_constant(eps)

    def rho_e(t):
        return a * b / np.hypot(b * np.cos(t), a * np.sin(t))

    def integrand(r, t):
        c, s = np.cos(t), np.sin(t)
        x, y = r * c, r * s
        in_e = (x / a) ** 2 + (y / b) ** 2 < 1.0
        in_b = r < 1.0
        gex, gey = (-2 * C * x / a ** 2, -2 * C * y / b ** 2) if in_e else (0.0, 0.0)
        gbx, gby = (-x / 2, -y / 2) if in_b else (0.0, 0.0)
        return ((gex - gbx) ** 2 + (gey - gby) ** 2) * r

    def radial(t):
        re = rho_e(t)
        lo, hi = sorted((re, 1.0))
        parts = [(0.0, lo), (lo, hi)]
        return sum(integrate.quad(integrand, p, q, args=(t,), epsabs=epsabs, epsrel=1e-12)[0]
                   for p, q in parts if q > p)

    # crossings rho_E(t) = 1 split the angular integral into smooth pieces
    t_star = 0.5 * np.arccos(np.clip((a * a + b * b - 2 * a * a * b * b) / (b * b - a * a), -1, 1))
    breaks = sorted({0.0, t_star, np.pi / 2})
    quarter = sum(integrate.quad(radial, p, q, epsabs=epsabs, epsrel=1e-12, limit=200)[0]
                  for p, q in zip(breaks[:-1], breaks[1:]) if q > p)
    return float(4.0 * quarter)


# ---------------------------------------------------------------------------
# Core ball with two small satellites
# ---------------------------------------------------------------------------

def satellite_core_radius(dim: int, r: float) -> float:
    """Core radius ``1 - rho`` with ``(1 - rho)^n + 2 r^n = 1``."""
    return (1.0 - 2.0 * r ** dim) ** (1.0 / dim)


def satellite_forcing_height(dim: int, r: float, p: float) -> float:
    """``M = 2 |B_r|^{-1/p}`` (as stated for the example's forcing)."""
    return 2.0 * (unit_ball_volume(dim) * r ** dim) ** (-1.0 / p)


def satellite_example(dim: int, r: float, p: float, distance: float = 2.0):
    """Exact ``(tor deficit, beta^2)`` for ``B_{1-rho} u B_r(+-2e1)`` with ``f = M chi_satellites``."""
    if not (0.0 < r < 0.5) or p < 1:
        raise InvalidConfig("need 0 < r < 0.5 and p >= 1")
    core = satellite_core_radius(dim, r)
    if core + r >= distance or 2 * r >= 2 * distance:
        raise InvalidConfig("satellites intersect the core")
    deficit = (ball_torsional_rigidity(dim, core) + 2.0 * ball_torsional_rigidity(dim, r)
               - ball_torsional_rigidity(dim, 1.0))
    M = satellite_forcing_height(dim, r, p)
    # int_{B_r} ((r^2 - |y|^2)/(2n))^2 dy = 2 omega_n r^{n+4} / (n^2 (n+2) (n+4))
    sq = 2.0 * unit_ball_volume(dim) * r ** (dim + 4) / (dim ** 2 * (dim + 2) * (dim + 4))
    return float(deficit), float(2.0 * M * M * sq)


# ---------------------------------------------------------------------------
# Disk spectrum
# ---------------------------------------------------------------------------

def bessel_zero(m: int, l: int, xtol: float = 1e-12) -> float:
    """``l``-th positive zero of ``J_m`` by bracketing on a grid and bisection."""
    if l < 1:
        raise ValueError("l starts at 1")
    step = 0.1
    x = 0.5 if m > 0 else step
    f_prev = special.jv(m, x)
    found = 0
    while True:
        x_next = x + step
        f_next = special.jv(m, x_next)
        if f_prev == 0.0 or np.sign(f_prev) != np.sign(f_next):
            found += 1
            if found == l:
                lo, hi = x, x_next
                flo = f_prev
                while hi - lo > xtol:
                    mid = 0.5 * (lo + hi)
                    fm = special.jv(m, mid)
                    if np.sign(fm) == np.sign(flo):
                        lo, flo = mid, fm
                    else:
                        hi = mid
                return 0.5 * (lo + hi)
        x, f_prev = x_next, f_next


@dataclass(frozen=True)
class DiskMode:
    """Dirichlet eigenmode ``J_m(j r) {cos, sin}(m theta)`` of the unit disk."""

    eigenvalue: float
    m: int
    l: int
    zero: float
    multiplicity: int
    parity: str  # "cos" or "sin" ("cos" for m = 0)
    norm: float  # L2 norm of J_m(j r) trig(m theta) over the disk

    def __call__(self, x, y, center=(0.0, 0.0), radius: float = 1.0):
        """L2-normalized mode of ``B_radius(center)``, zero outside."""
        dx, dy = (np.asarray(x) - center[0]) / radius, (np.asarray(y) - center[1]) / radius
        r = np.hypot(dx, dy)
        t = np.arctan2(dy, dx)
        ang = np.cos(self.m * t) if self.parity == "cos" else np.sin(self.m * t)
        val = special.jv(self.m, self.zero * r) * ang / (self.norm * radius)
        return np.where(r < 1.0, val, 0.0)


@lru_cache(maxsize=None)
def _radial_norm_sq(m: int, zero: float) -> float:
    val, _ = integrate.quad(lambda r: special.jv(m, zero * r) ** 2 * r, 0.0, 1.0,
                            epsabs=1e-14, epsrel=1e-13, limit=200)
    return val


@lru_cache(maxsize=8)
def _disk_modes(count: int):
    cands = []
    for m in range(count + 1):
        for l in range(1, count + 2):
            j = bessel_zero(m, l)
            cands.append((j * j, m, l, j))
            if j > 40:
                break
    cands.sort()
    modes = []
    for lam, m, l, j in cands:
        radial = _radial_norm_sq(m, j)
        ang = 2.0 * np.pi if m == 0 else np.pi
        norm = np.sqrt(radial * ang)
        parities = ("cos",) if m == 0 else ("cos", "sin")
        for par in parities:
            modes.append(DiskMode(lam, m, l, j, 1 if m == 0 else 2, par, norm))
        if len(modes) >= count:
            break
    return tuple(modes[:count])


def disk_eigenpair(k: int) -> DiskMode:
    """``k``-th (1-based) Dirichlet eigenmode of the unit disk, ``k <= 20``."""
    if not 1 <= k <= 20:
        raise ValueError("k must be in 1..20")
    return _disk_modes(20)[k - 1]


def disk_eigenvalue(k: int, radius: float = 1.0) -> float:
    return disk_eigenpair(k).eigenvalue / radius ** 2
