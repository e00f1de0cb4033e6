import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from torsionlab import closed_forms as cf
from torsionlab.errors import EigenNoConvergence, SingularSystem
from torsionlab.fem import (FemField, boundary_flux, cross_inner, cross_l2, interpolate_onto,
                            l2_distance_sq, load_vector, mass_matrix, quadrature_points,
                            solve_eigen, solve_poisson, stiffness_matrix, torsion_function,
                            torsional_rigidity)
from torsionlab.geometry import StarDomain, mesh_star_domain

EXACT_TOR = -np.pi / 16


def test_matrices_basic_identities(disk_mesh):
    K, M = stiffness_matrix(disk_mesh), mass_matrix(disk_mesh)
    one = np.ones(disk_mesh.n_vertices)
    assert np.allclose(K @ one, 0.0, atol=1e-10)
    assert one @ (M @ one) == pytest.approx(disk_mesh.area(), rel=1e-12)
    assert abs(K - K.T).max() < 1e-12


def test_quadrature_exact_for_quadratics(disk_mesh):
    X, W = quadrature_points(disk_mesh)
    # integral of x^2 over the polygon equals the vertex-based formula for P2 data
    val = np.sum(W * X[..., 0] ** 2)
    assert val == pytest.approx(np.pi / 4, rel=2e-3)


def test_load_vector_forms_agree(disk_mesh):
    b1 = load_vector(disk_mesh, 2.0)
    b2 = load_vector(disk_mesh, np.full(disk_mesh.n_vertices, 2.0))
    b3 = load_vector(disk_mesh, lambda x, y: 2.0 + 0 * x)
    b4 = load_vector(disk_mesh, FemField(disk_mesh, np.full(disk_mesh.n_vertices, 2.0)))
    for b in (b2, b3, b4):
        assert np.allclose(b, b1)


def test_torsion_function_pointwise(disk_mesh):
    w = torsion_function(disk_mesh)
    r2 = np.sum(disk_mesh.vertices ** 2, 1)
    assert np.max(np.abs(w.values - (1 - r2) / 4)) < 2e-4
    assert w.max() == pytest.approx(0.25, rel=1e-3)


def test_torsional_rigidity_convergence():
    hs = [0.08, 0.04, 0.02]
    errs = [abs(torsional_rigidity(mesh_star_domain(StarDomain.disk(), h)) - EXACT_TOR) for h in hs]
    order = np.polyfit(np.log(hs), np.log(errs), 1)[0]
    assert order > 1.8
    assert errs[-1] / abs(EXACT_TOR) < 1e-3


def test_ellipse_torsion_matches_closed_form():
    tor = torsional_rigidity(mesh_star_domain(StarDomain.ellipse_eps(0.1), 0.02))
    assert tor == pytest.approx(cf.ellipse_torsion(0.1)[0], rel=1e-3)


def test_scaling_law():
    # tor(rB) = r^4 tor(B) in the plane
    t1 = torsional_rigidity(mesh_star_domain(StarDomain.disk(1.0), 0.05))
    t2 = torsional_rigidity(mesh_star_domain(StarDomain.disk(2.0), 0.1))
    assert t2 == pytest.approx(16 * t1, rel=1e-10)


def test_adjoint_radial_ode_oracle():
    """-Lap p = exp(-r^2) on the unit disk against a radial BVP solution."""
    f = lambda x, y: np.exp(-(x * x + y * y))

    def ode(r, y):
        return np.vstack([y[1], -y[1] / r - np.exp(-r ** 2)])

    r = np.linspace(1e-6, 1, 200)
    sol = integrate.solve_bvp(ode, lambda a, b: np.array([a[1], b[0]]), r,
                              np.zeros((2, r.size)), tol=1e-10)
    mesh = mesh_star_domain(StarDomain.disk(), 0.02)
    p = solve_poisson(mesh, f)
    rv = np.hypot(*mesh.vertices.T)
    assert np.max(np.abs(p.values - sol.sol(np.maximum(rv, 1e-6))[0])) < 1e-4
    flux = boundary_flux(p, f)
    assert np.mean(flux) == pytest.approx(sol.sol(1.0)[1], rel=1e-3)


def test_boundary_flux_of_torsion(disk_mesh):
    flux = boundary_flux(torsion_function(disk_mesh), 1.0)
    assert np.mean(flux) == pytest.approx(-0.5, rel=1e-3)
    # divergence theorem holds exactly for the consistent flux
    P = disk_mesh.vertices[disk_mesh.boundary_loops[0]]
    assert np.sum(flux) * 2 * np.pi / flux.size == pytest.approx(-disk_mesh.area(), rel=2e-3)


def test_field_algebra_and_evaluation(disk_mesh):
    x, y = disk_mesh.vertices.T
    u = FemField(disk_mesh, x + 2 * y)
    v = FemField(disk_mesh, np.ones_like(x))
    assert np.allclose((u + v).values, x + 2 * y + 1)
    assert np.allclose((2 * u - v).values, 2 * x + 4 * y - 1)
    assert u(np.array([[0.1, 0.2]]))[0] == pytest.approx(0.5, abs=1e-12)
    assert u(np.array([[3.0, 0.0]]))[0] == 0.0
    assert np.allclose(u.element_gradients(), [1.0, 2.0])
    assert u.dirichlet_energy() == pytest.approx(5 * disk_mesh.area(), rel=1e-12)
    with pytest.raises(ValueError):
        FemField(disk_mesh, np.ones(3))


def test_csv_export(tmp_path, disk_mesh):
    p = tmp_path / "w.csv"
    torsion_function(disk_mesh).to_csv(p)
    lines = p.read_text().splitlines()
    assert lines[0] == "x,y,value" and len(lines) == disk_mesh.n_vertices + 1


def test_eigen_disk():
    b = solve_eigen(mesh_star_domain(StarDomain.disk(), 0.03), 6)
    ref = [cf.disk_eigenvalue(k) for k in range(1, 7)]
    assert np.allclose(b.eigenvalues, ref, rtol=5e-3)
    assert (1, 2) in b.clusters and (3, 4) in b.clusters
    assert b.cluster_of(2) == (1, 2)
    M = mass_matrix(b.eigenfunctions[0].mesh)
    U = np.stack([e.values for e in b.eigenfunctions], 1)
    assert np.allclose(U.T @ M @ U, np.eye(6), atol=1e-8)
    assert b.eigenfunctions[0].integral() > 0


def test_eigen_bad_k(disk_mesh):
    with pytest.raises(ValueError):
        solve_eigen(disk_mesh, 0)


def test_eigen_domain_monotonicity():
    # larger domain, smaller first eigenvalue
    l_small = solve_eigen(mesh_star_domain(StarDomain.disk(0.9), 0.04), 1).eigenvalues[0]
    l_big = solve_eigen(mesh_star_domain(StarDomain.disk(1.0), 0.04), 1).eigenvalues[0]
    assert l_big < l_small
    assert l_small == pytest.approx(l_big / 0.81, rel=1e-3)


@pytest.mark.filterwarnings("ignore::scipy.integrate.IntegrationWarning")
def test_cross_integrals_same_and_different_meshes():
    m1 = mesh_star_domain(StarDomain.disk(), 0.03)
    m2 = mesh_star_domain(StarDomain.disk(1.0, (0.2, 0.0)), 0.03)
    w1, w2 = torsion_function(m1), torsion_function(m2)
    assert l2_distance_sq(w1, w1) == pytest.approx(0.0, abs=1e-14)
    d_mesh = l2_distance_sq(w1, w2)
    d_grid = cross_l2(w1, w2)
    # closed form by adaptive quadrature of the exact torsion functions
    wa = lambda x, y: np.maximum(1 - x * x - y * y, 0) / 4
    wb = lambda x, y: np.maximum(1 - (x - 0.2) ** 2 - y * y, 0) / 4
    ref, _ = integrate.dblquad(lambda y, x: (wa(x, y) - wb(x, y)) ** 2, -1, 1.2, -1, 1,
                               epsabs=1e-10)
    assert d_mesh == pytest.approx(ref, rel=1e-2)
    assert d_grid == pytest.approx(ref, rel=2e-2)
    assert cross_inner(w1, wa) == pytest.approx(np.pi / 48, rel=2e-3)


def test_interpolate_onto_identity(disk_mesh):
    w = torsion_function(disk_mesh)
    assert interpolate_onto(w, disk_mesh) is w


@given(st.floats(0.5, 2.0))
def test_poisson_linearity(c):
    m = mesh_star_domain(StarDomain.ellipse_eps(0.1), 0.1)
    a = solve_poisson(m, 1.0)
    b = solve_poisson(m, c)
    assert np.allclose(b.values, c * a.values, rtol=1e-10, atol=1e-14)


def test_zero_rhs_gives_zero(disk_mesh):
    assert np.all(solve_poisson(disk_mesh, 0.0).values == 0.0)


def test_error_types():
    assert issubclass(SingularSystem, Exception)
    assert issubclass(EigenNoConvergence, Exception)
