"""Expansion of ball eigenfunctions and their resolvent images in the eigenbasis of a domain.

With ``f = lambda_{B,j} u_{B,j}`` and ``u = u_Omega^f``, the coefficients
``a_k = <u, u_{Omega,k}>`` and ``b_k = <u_{B,j}, u_{Omega,k}>`` satisfy
``lambda_{B,j} b_k = lambda_{Omega,k} a_k``.
"""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from . import closed_forms
from .errors import ClusterMismatch, MultiplicityWarning
from .fem import FemField, SpectralBundle, cross_inner, mass_matrix, solve_eigen, solve_poisson, torsional_rigidity
from .functionals import DEFAULT_H
from .geometry import StarDomain, mesh_star_domain

DEFAULT_KMAX = 20


@dataclass(frozen=True, eq=False)
class TransferData:
    j: int
    a_coeffs: np.ndarray
    b_coeffs: np.ndarray
    lambda_ball: float
    lambdas: np.ndarray
    identity_residual: float
    tail: float  # relative L2 mass of u_Omega^f outside the first K_max modes
    bundle: SpectralBundle = field(repr=False, default=None)
    mesh_h: float = DEFAULT_H

    @property
    def k_max(self) -> int:
        return int(self.a_coeffs.size)

    def to_dict(self) -> dict:
        return {"j": self.j, "a_coeffs": self.a_coeffs.tolist(), "b_coeffs": self.b_coeffs.tolist(),
                "lambda_ball": self.lambda_ball, "lambdas": self.lambdas.tolist(),
                "identity_residual": self.identity_residual, "tail": self.tail,
                "mesh_h": self.mesh_h}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _ball_mode(j: int):
    mode = closed_forms.disk_eigenpair(j)
    return mode, (lambda x, y: mode(x, y))


def compute_transfer(domain: StarDomain, j: int, K_max: int = DEFAULT_KMAX, mesh_h: float = DEFAULT_H,
                     bundle: SpectralBundle | None = None, warn: bool = True) -> TransferData:
    """Coefficients of ``u_Omega^f`` and of ``u_{B,j}|_Omega`` in the domain eigenbasis.

    The forcing is assembled by quadrature of the analytic Bessel mode; ``b_k``
    uses its nodal interpolant on the domain mesh, so the identity residual is an
    interpolation error that shrinks with the mesh size.
    """
    if not 1 <= j <= 6:
        raise ValueError("j must be in 1..6")
    if K_max < j + 4:
        raise ValueError("K_max must be at least j + 4")
    mode, ub = _ball_mode(j)
    if warn and mode.multiplicity > 1:
        warnings.warn(f"ball eigenvalue {j} has multiplicity {mode.multiplicity}; "
                      "use match_multiplicity", MultiplicityWarning, stacklevel=2)
    if bundle is None:
        mesh = mesh_star_domain(domain, mesh_h)
        bundle = solve_eigen(mesh, K_max)
    mesh = bundle.eigenfunctions[0].mesh
    lam_b = mode.eigenvalue
    u = solve_poisson(mesh, lambda x, y: lam_b * ub(x, y))
    M = mass_matrix(mesh)
    U = np.stack([e.values for e in bundle.eigenfunctions[:K_max]], axis=1)
    a = U.T @ (M @ u.values)
    b = U.T @ (M @ ub(mesh.vertices[:, 0], mesh.vertices[:, 1]))
    lams = np.asarray(bundle.eigenvalues[:K_max], dtype=float)
    resid = float(np.max(np.abs(lam_b * b - lams * a)))
    unorm = u.l2_norm_sq()
    tail = float(max(unorm - np.sum(a ** 2), 0.0) / unorm) if unorm > 0 else 0.0
    return TransferData(j, a, b, float(lam_b), lams, resid, tail, bundle, mesh_h)


def _matched_distance(u_omega: FemField, mode) -> float:
    """``min_sign ||u_Omega - u_B||^2_{L^2(R^2)}`` for unit-norm fields."""
    cross = cross_inner(u_omega, lambda x, y: mode(x, y))
    return float(max(u_omega.l2_norm_sq() + 1.0 - 2.0 * abs(cross), 0.0))


@dataclass(frozen=True)
class SimpleMatch:
    distance: float
    deficit: float
    ratio: float  # deficit / distance


def match_simple(data: TransferData, domain: StarDomain | None = None) -> SimpleMatch:
    """Distance between ``u_{Omega,j}`` and the ball mode ``u_{B,j}`` (sign optimized)."""
    mode = closed_forms.disk_eigenpair(data.j)
    if mode.multiplicity > 1:
        raise ValueError("match_simple needs a simple ball eigenvalue")
    u = data.bundle.eigenfunctions[data.j - 1]
    dist = _matched_distance(u, mode)
    deficit = torsional_rigidity(u.mesh) - closed_forms.ball_torsional_rigidity(2, 1.0)
    ratio = deficit / dist if dist > 0 else float("inf")
    return SimpleMatch(dist, float(deficit), float(ratio))


@dataclass(frozen=True, eq=False)
class MultiplicityMatch:
    d: np.ndarray
    residual: float
    residuals: np.ndarray
    gram_offdiag: float  # max off-diagonal |(B B^T)_{kl}| before projection
    b_block: np.ndarray
    deficit: float


def match_multiplicity(domain: StarDomain, cluster=(2, 3), mesh_h: float = DEFAULT_H,
                       K_max: int = DEFAULT_KMAX, bundle: SpectralBundle | None = None) -> MultiplicityMatch:
    """Align the domain eigenfunctions of a ball multiplicity group with the ball modes.

    ``d`` is the polar (nearest orthogonal) factor of the block
    ``B_{kl} = <u_{B,l}, u_{Omega,k}>``; the residual of row ``l`` is
    ``||sum_k d_{lk} u_{B,k} - u_{Omega,l}||^2 = 2 - 2 sum_k d_{lk} B_{lk}``.
    """
    idx = [int(c) for c in cluster]
    modes = [closed_forms.disk_eigenpair(c) for c in idx]
    if len({m.eigenvalue for m in modes}) != 1:
        raise ValueError("cluster indices do not form a ball multiplicity group")
    if bundle is None:
        mesh = mesh_star_domain(domain, mesh_h)
        bundle = solve_eigen(mesh, max(K_max, max(idx) + 2))
    mesh = bundle.eigenfunctions[0].mesh
    deficit = float(torsional_rigidity(mesh) - closed_forms.ball_torsional_rigidity(2, 1.0))
    lam_b = modes[0].eigenvalue
    lams = np.asarray(bundle.eigenvalues)
    inside = lams[[c - 1 for c in idx]]
    # split allowed by first-order perturbation: relative O(sqrt(deficit))
    allow = 10.0 * np.sqrt(max(deficit, 0.0)) + 1e-3
    neighbors = [lams[i] for i in (idx[0] - 2, idx[-1]) if 0 <= i < lams.size]
    if np.max(np.abs(inside - lam_b)) > allow * lam_b or any(
            abs(nb - lam_b) <= np.max(np.abs(inside - lam_b)) for nb in neighbors):
        raise ClusterMismatch(f"domain eigenvalues {inside} do not cluster at {lam_b:.6g}")
    funcs = [bundle.eigenfunctions[c - 1] for c in idx]
    B = np.array([[cross_inner(u, lambda x, y, m=m: m(x, y)) for m in modes] for u in funcs])
    G = B @ B.T
    off = float(np.max(np.abs(G - np.diag(np.diag(G))))) if len(idx) > 1 else 0.0
    d, _ = linalg.polar(B)
    norms = np.array([u.l2_norm_sq() for u in funcs])
    res = norms + 1.0 - 2.0 * np.sum(d * B, axis=1)
    return MultiplicityMatch(d, float(np.max(res)), res, off, B, deficit)
