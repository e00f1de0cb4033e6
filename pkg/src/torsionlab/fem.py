"""P1 finite elements for the Dirichlet Laplacian on a :class:`TriangleMesh`.

Stiffness and (consistent) mass matrices are assembled element-wise in
closed form.  Poisson problems are solved with a sparse LU factorization of
the interior block, eigenpairs with ARPACK's shift-invert Lanczos mode around
zero.  Every field is understood as extended by zero outside its mesh.
"""
from __future__ import annotations

import csv
import weakref
from dataclasses import dataclass

import matplotlib.tri as mtri
import numpy as np
import scipy.sparse as sp
from scipy.sparse import linalg as spla

from .errors import EigenNoConvergence, SingularSystem
from .geometry import TriangleMesh

# 6-point symmetric rule, exact for degree 4 (barycentric coordinates, weights sum to 1)
_QA, _QB = 0.445948490915965, 0.091576213509771
QUAD_BARY = np.array([
    [1 - 2 * _QA, _QA, _QA], [_QA, 1 - 2 * _QA, _QA], [_QA, _QA, 1 - 2 * _QA],
    [1 - 2 * _QB, _QB, _QB], [_QB, 1 - 2 * _QB, _QB], [_QB, _QB, 1 - 2 * _QB],
])
QUAD_W = np.array([0.223381589678011] * 3 + [0.109951743655322] * 3)

CLUSTER_RTOL = 1e-6


class _Operators:
    """Assembled matrices and factorizations attached to one mesh."""

    def __init__(self, mesh: TriangleMesh):
        V, T, area = mesh.vertices, mesh.triangles, mesh.element_area
        n = mesh.n_vertices
        P = V[T]
        # gradients of barycentric coordinates: grad(lambda_i) = rot(edge opposite i) / (2A)
        e0 = P[:, 2] - P[:, 1]
        e1 = P[:, 0] - P[:, 2]
        e2 = P[:, 1] - P[:, 0]
        G = np.stack([e0, e1, e2], 1)[:, :, ::-1] * np.array([-1.0, 1.0]) / (2 * area[:, None, None])
        self.grad_bary = G
        Kloc = area[:, None, None] * np.einsum("eik,ejk->eij", G, G)
        Mloc = area[:, None, None] * (np.ones((3, 3)) + np.eye(3)) / 12.0
        rows = np.repeat(T, 3, axis=1).ravel()
        cols = np.tile(T, (1, 3)).ravel()
        self.K = sp.csr_matrix((Kloc.ravel(), (rows, cols)), shape=(n, n))
        self.M = sp.csr_matrix((Mloc.ravel(), (rows, cols)), shape=(n, n))
        self.interior = mesh.interior
        self.K_II = self.K[self.interior][:, self.interior].tocsc()
        self.M_II = self.M[self.interior][:, self.interior].tocsc()
        self._lu = None
        self._tri = None
        self.mesh_ref = weakref.ref(mesh)

    @property
    def lu(self):
        if self._lu is None:
            try:
                self._lu = spla.splu(self.K_II)
            except RuntimeError as exc:
                raise SingularSystem(str(exc)) from exc
        return self._lu

    @property
    def triangulation(self):
        if self._tri is None:
            mesh = self.mesh_ref()
            self._tri = mtri.Triangulation(mesh.vertices[:, 0], mesh.vertices[:, 1], mesh.triangles)
            self._finder = self._tri.get_trifinder()
        return self._tri


_OPS: "weakref.WeakKeyDictionary[TriangleMesh, _Operators]" = weakref.WeakKeyDictionary()


def operators(mesh: TriangleMesh) -> _Operators:
    ops = _OPS.get(mesh)
    if ops is None:
        ops = _Operators(mesh)
        _OPS[mesh] = ops
    return ops


def stiffness_matrix(mesh: TriangleMesh) -> sp.csr_matrix:
    return operators(mesh).K


def mass_matrix(mesh: TriangleMesh) -> sp.csr_matrix:
    return operators(mesh).M


def quadrature_points(mesh: TriangleMesh):
    """Physical quadrature points ``(n_elem, 6, 2)`` and weights ``(n_elem, 6)``."""
    P = mesh.vertices[mesh.triangles]
    X = np.einsum("qi,eid->eqd", QUAD_BARY, P)
    W = mesh.element_area[:, None] * QUAD_W[None, :]
    return X, W


# ---------------------------------------------------------------------------
# Fields
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class FemField:
    """Nodal P1 field on ``mesh``; zero outside the mesh."""

    mesh: TriangleMesh
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (self.mesh.n_vertices,):
            raise ValueError("one value per vertex required")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __add__(self, other: "FemField") -> "FemField":
        return FemField(self.mesh, self.values + other.values)

    def __sub__(self, other: "FemField") -> "FemField":
        return FemField(self.mesh, self.values - other.values)

    def __mul__(self, s: float) -> "FemField":
        return FemField(self.mesh, float(s) * self.values)

    __rmul__ = __mul__

    def integral(self) -> float:
        return float(np.sum(mass_matrix(self.mesh) @ self.values))

    def l2_norm_sq(self) -> float:
        return float(self.values @ (mass_matrix(self.mesh) @ self.values))

    def inner(self, other: "FemField") -> float:
        if other.mesh is not self.mesh:
            raise ValueError("inner product needs fields on the same mesh; use cross_l2")
        return float(self.values @ (mass_matrix(self.mesh) @ other.values))

    def dirichlet_energy(self) -> float:
        return float(self.values @ (stiffness_matrix(self.mesh) @ self.values))

    def max(self) -> float:
        return float(np.max(self.values))

    def element_gradients(self) -> np.ndarray:
        G = operators(self.mesh).grad_bary
        return np.einsum("eik,ei->ek", G, self.values[self.mesh.triangles])

    def __call__(self, points) -> np.ndarray:
        """Barycentric interpolation at arbitrary points (zero outside the mesh)."""
        pts = np.asarray(points, dtype=float)
        shape = pts.shape[:-1]
        pts = pts.reshape(-1, 2)
        ops = operators(self.mesh)
        tri = ops.triangulation
        interp = mtri.LinearTriInterpolator(tri, self.values, trifinder=ops._finder)
        out = interp(pts[:, 0], pts[:, 1])
        return np.ma.filled(out, 0.0).reshape(shape)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "y", "value"])
            for (x, y), v in zip(self.mesh.vertices, self.values):
                w.writerow([f"{x:.17g}", f"{y:.17g}", f"{v:.17g}"])


def interpolate_onto(field: FemField, mesh: TriangleMesh) -> FemField:
    """Nodal interpolation of a (zero-extended) field onto another mesh."""
    if field.mesh is mesh:
        return field
    return FemField(mesh, field(mesh.vertices))


# ---------------------------------------------------------------------------
# Poisson problems
# ---------------------------------------------------------------------------

def load_vector(mesh: TriangleMesh, rhs) -> np.ndarray:
    """``b_i = int f phi_i`` for a constant, nodal array / FemField, or callable ``f(x, y)``."""
    M = mass_matrix(mesh)
    if isinstance(rhs, FemField):
        if rhs.mesh is not mesh:
            rhs = interpolate_onto(rhs, mesh)
        return M @ rhs.values
    if np.isscalar(rhs):
        return float(rhs) * np.asarray(M.sum(axis=1)).ravel()
    if isinstance(rhs, np.ndarray) and rhs.shape == (mesh.n_vertices,):
        return M @ rhs
    X, W = quadrature_points(mesh)
    fx = np.asarray(rhs(X[..., 0], X[..., 1]), dtype=float)
    fx = np.broadcast_to(fx, W.shape)
    contrib = np.einsum("eq,eq,qi->ei", W, fx, QUAD_BARY)
    return np.bincount(mesh.triangles.ravel(), contrib.ravel(), minlength=mesh.n_vertices)


def solve_poisson(mesh: TriangleMesh, rhs, rtol: float = 1e-10) -> FemField:
    """Galerkin solution of ``-Lap u = f`` in the meshed domain, ``u = 0`` on its boundary."""
    ops = operators(mesh)
    b = load_vector(mesh, rhs)
    bI = b[ops.interior]
    u = np.zeros(mesh.n_vertices)
    if not np.any(bI):
        return FemField(mesh, u)
    uI = ops.lu.solve(bI)
    res = np.linalg.norm(ops.K_II @ uI - bI)
    if not np.isfinite(res) or res > rtol * max(np.linalg.norm(bI), 1e-300) * 1e3:
        raise SingularSystem(f"Poisson residual {res:.3g} too large")
    u[ops.interior] = uI
    return FemField(mesh, u)


def torsion_function(mesh: TriangleMesh) -> FemField:
    return solve_poisson(mesh, 1.0)


def torsional_rigidity(w: FemField | TriangleMesh) -> float:
    """``tor = -1/2 int w`` (negative; balls minimize it at fixed area)."""
    if isinstance(w, TriangleMesh):
        w = torsion_function(w)
    return -0.5 * w.integral()


def boundary_flux(u: FemField, rhs, loop: np.ndarray | None = None) -> np.ndarray:
    """Outward normal derivative of a Dirichlet solution at boundary vertices of ``loop``.

    Uses the variationally consistent flux: the residual ``(K u - b)_i`` at a
    boundary vertex equals ``int_{boundary} du/dnu phi_i``; dividing out the
    boundary mass matrix of the (closed, polygonal) loop yields nodal values.
    """
    mesh = u.mesh
    if loop is None:
        loop = mesh.boundary_loops[0]
    ops = operators(mesh)
    r = (ops.K @ u.values - load_vector(mesh, rhs))[loop]
    P = mesh.vertices[loop]
    seg = np.linalg.norm(np.roll(P, -1, axis=0) - P, axis=1)  # edge i -> i+1
    n = loop.size
    main = (seg + np.roll(seg, 1)) / 3.0
    off = seg / 6.0
    Mb = sp.diags([main, off[:-1], off[:-1]], [0, 1, -1], shape=(n, n), format="lil")
    Mb[0, n - 1] = off[-1]
    Mb[n - 1, 0] = off[-1]
    return spla.spsolve(Mb.tocsc(), r)


# ---------------------------------------------------------------------------
# Eigenproblems
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SpectralBundle:
    """First ``k`` Dirichlet eigenpairs; ``clusters`` hold 0-based index groups."""

    eigenvalues: np.ndarray
    eigenfunctions: tuple
    clusters: tuple

    def cluster_of(self, index: int) -> tuple:
        for c in self.clusters:
            if index in c:
                return c
        raise IndexError(index)


def _clusters(lams, rtol=CLUSTER_RTOL):
    groups, cur = [], [0]
    for i in range(1, len(lams)):
        if abs(lams[i] - lams[cur[-1]]) <= rtol * abs(lams[i]):
            cur.append(i)
        else:
            groups.append(tuple(cur))
            cur = [i]
    groups.append(tuple(cur))
    return tuple(groups)


def _sign_moments(mesh: TriangleMesh):
    x, y = (mesh.vertices - mesh.vertices.mean(axis=0)).T
    return [np.ones_like(x), x, y, x * x - y * y, x * y, x ** 3 - 3 * x * y * y,
            3 * x * x * y - y ** 3, x * x + y * y]


def solve_eigen(mesh: TriangleMesh, k: int, tol: float = 1e-12, maxiter: int = 20000) -> SpectralBundle:
    """Lowest ``k`` eigenpairs of ``K u = lambda M u`` by shift-invert Lanczos at 0."""
    ops = operators(mesh)
    nI = ops.interior.size
    if k < 1 or k >= nI - 1:
        raise ValueError(f"k must be in [1, {nI - 2}]")
    Minv = spla.LinearOperator((nI, nI), matvec=ops.lu.solve, dtype=float)
    v0 = np.ones(nI)
    try:
        lam, vec = spla.eigsh(ops.K_II, k=k, M=ops.M_II, sigma=0.0, which="LM",
                              OPinv=Minv, tol=tol, maxiter=maxiter, v0=v0)
    except spla.ArpackNoConvergence as exc:
        raise EigenNoConvergence(str(exc)) from exc
    order = np.argsort(lam)
    lam, vec = lam[order], vec[:, order]
    moments = _sign_moments(mesh)
    funcs = []
    for i in range(k):
        u = np.zeros(mesh.n_vertices)
        u[ops.interior] = vec[:, i]
        u /= np.sqrt(u @ (ops.M @ u))
        res = np.linalg.norm(ops.K_II @ u[ops.interior] - lam[i] * (ops.M_II @ u[ops.interior]))
        mnorm = np.sqrt(u[ops.interior] @ (ops.M_II @ u[ops.interior]))
        if res > 1e-8 * lam[i] * mnorm * np.sqrt(nI):
            raise EigenNoConvergence(f"eigenpair {i}: residual {res:.3g}")
        for m in moments:
            mom = m @ (ops.M @ u)
            if abs(mom) > 1e-8:
                if mom < 0:
                    u = -u
                break
        funcs.append(FemField(mesh, u))
    lam = np.asarray(lam, dtype=float)
    lam.setflags(write=False)
    return SpectralBundle(lam, tuple(funcs), _clusters(lam))


# ---------------------------------------------------------------------------
# Cross-domain integrals
# ---------------------------------------------------------------------------

def _bbox(mesh: TriangleMesh):
    return mesh.vertices.min(axis=0), mesh.vertices.max(axis=0)


def cross_l2(field_a: FemField, field_b: FemField, resolution: int = 512) -> float:
    """``int_{R^2} (A - B)^2`` for zero-extended fields on possibly different meshes.

    Midpoint rule on a ``resolution x resolution`` grid over the joint bounding box.
    """
    if field_a.mesh is field_b.mesh:
        d = field_a.values - field_b.values
        return float(d @ (mass_matrix(field_a.mesh) @ d))
    lo_a, hi_a = _bbox(field_a.mesh)
    lo_b, hi_b = _bbox(field_b.mesh)
    lo, hi = np.minimum(lo_a, lo_b), np.maximum(hi_a, hi_b)
    xs = lo[0] + (np.arange(resolution) + 0.5) * (hi[0] - lo[0]) / resolution
    ys = lo[1] + (np.arange(resolution) + 0.5) * (hi[1] - lo[1]) / resolution
    X, Y = np.meshgrid(xs, ys)
    pts = np.stack([X.ravel(), Y.ravel()], -1)
    d = field_a(pts) - field_b(pts)
    cell = (hi[0] - lo[0]) * (hi[1] - lo[1]) / resolution ** 2
    return float(np.sum(d * d) * cell)


def cross_inner(field_a: FemField, field_b) -> float:
    """``int A B`` by degree-4 quadrature on ``field_a``'s mesh.

    ``field_b`` may be a FemField on another mesh (evaluated with zero
    extension) or a callable ``g(x, y)``.
    """
    X, W = quadrature_points(field_a.mesh)
    A = np.einsum("qi,ei->eq", QUAD_BARY, field_a.values[field_a.mesh.triangles])
    if isinstance(field_b, FemField):
        B = field_b(X)
    else:
        B = np.asarray(field_b(X[..., 0], X[..., 1]), dtype=float)
    return float(np.sum(W * A * B))


def l2_distance_sq(field_a: FemField, field_b: FemField) -> float:
    """``int (A - B)^2`` as ``|A|^2 + |B|^2 - 2 <A, B>`` with mesh quadrature for the cross term."""
    if field_a.mesh is field_b.mesh:
        return cross_l2(field_a, field_b)
    val = field_a.l2_norm_sq() + field_b.l2_norm_sq() - 2.0 * cross_inner(field_a, field_b)
    return float(max(val, 0.0))
