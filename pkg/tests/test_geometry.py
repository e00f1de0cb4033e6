import numpy as np
import pytest
from hypothesis import given, strategies as st

from torsionlab.errors import DegenerateMesh, NonPositiveRadius
from torsionlab.geometry import (BoundaryFunction, StarDomain, ball_overlap, classical_barycenter,
                                 domain_quadrature, volume,
                                 fraenkel_asymmetry, mesh_star_domain, q_first, q_profile,
                                 q_second, reference_disk, rings_for, symmetric_difference,
                                 truncated_barycenter, volume_normalize)

coef = st.floats(-0.1, 0.1, allow_nan=False)


# -- BoundaryFunction --------------------------------------------------------

def test_mode_evaluation():
    th = np.linspace(0, 2 * np.pi, 17)
    assert np.allclose(BoundaryFunction.mode(3, 0.2)(th), 0.2 * np.cos(3 * th))
    assert np.allclose(BoundaryFunction.mode(2, 0.5, "sin")(th), 0.5 * np.sin(2 * th))
    assert np.allclose(BoundaryFunction.mode(0, 0.7)(th), 0.7)


def test_from_samples_roundtrip():
    f = BoundaryFunction(0.3, [0.1, -0.2, 0.05], [0.0, 0.4, -0.1])
    th = 2 * np.pi * np.arange(64) / 64
    g = BoundaryFunction.from_samples(f(th), 3)
    assert np.allclose(g.a, f.a) and np.allclose(g.b, f.b) and g.a0 == pytest.approx(f.a0)


def test_derivative_matches_finite_difference():
    f = BoundaryFunction(0.0, [0.1, 0.2], [0.3, -0.1])
    th = np.linspace(0, 6, 50)
    h = 1e-6
    fd = (f(th + h) - f(th - h)) / (2 * h)
    assert np.allclose(f.derivative()(th), fd, atol=1e-8)


def test_norms():
    f = BoundaryFunction.mode(2, 0.03)
    assert f.c0_norm() == pytest.approx(0.03)
    assert f.c1_norm() == pytest.approx(0.06)
    assert f.l2_norm_sq() == pytest.approx(np.pi * 0.03 ** 2)


def test_arithmetic_with_different_orders():
    f = BoundaryFunction(1.0, [0.1])
    g = BoundaryFunction(0.0, [0.0, 0.2], [0.0, 0.3])
    th = np.linspace(0, 2 * np.pi, 11)
    assert np.allclose((f + g)(th), f(th) + g(th))
    assert np.allclose((f - g)(th), f(th) - g(th))
    assert np.allclose((g * 3.0)(th), 3 * g(th))
    assert np.allclose((f + 2.0)(th), f(th) + 2.0)


@given(st.lists(coef, min_size=1, max_size=6), st.lists(coef, min_size=1, max_size=6))
def test_parseval(a, b):
    f = BoundaryFunction(0.1, a, b)
    th = 2 * np.pi * np.arange(512) / 512
    assert f.l2_norm_sq() == pytest.approx(np.mean(f(th) ** 2) * 2 * np.pi, rel=1e-10)


# -- StarDomain ---------------------------------------------------------------

def test_nonpositive_radius_rejected():
    with pytest.raises(NonPositiveRadius):
        StarDomain((0, 0), BoundaryFunction(0.5, [0.6]))


def test_satellites_validation():
    with pytest.raises(ValueError):
        StarDomain.satellites(0.3, distance=1.1)


def test_disk_and_ellipse_volume():
    assert volume(StarDomain.disk()) == pytest.approx(np.pi, rel=1e-14)
    assert volume(StarDomain.disk(2.0)) == pytest.approx(4 * np.pi, rel=1e-14)
    for eps in (0.05, 0.1, 0.2):
        assert volume(StarDomain.ellipse_eps(eps)) == pytest.approx(np.pi, rel=1e-10)
    assert volume(StarDomain.satellites(0.1)) == pytest.approx(np.pi, rel=1e-12)


def test_outward_normal_is_unit_and_outward():
    d = StarDomain.ellipse_eps(0.2)
    th = np.linspace(0, 2 * np.pi, 40, endpoint=False)
    nu, speed = d.outward_normal(th)
    assert np.allclose(np.linalg.norm(nu, axis=1), 1.0)
    X = d.boundary_points(th)
    assert np.all(np.sum(nu * X, axis=1) > 0)
    # the normal of an ellipse is parallel to (x/a^2, y/b^2)
    a, b = 1 / 1.2, 1.2
    g = np.stack([X[:, 0] / a ** 2, X[:, 1] / b ** 2], -1)
    g /= np.linalg.norm(g, axis=1)[:, None]
    assert np.allclose(nu, g, atol=1e-10)


def test_contains_and_diameter():
    d = StarDomain.ellipse_eps(0.1)
    assert d.contains(np.array([[0.0, 1.05], [0.0, 0.0]])).tolist() == [True, True]
    assert not d.contains(np.array([[0.95, 0.0]]))[0]
    assert d.diameter() == pytest.approx(2.2, rel=1e-5)


def test_serialization_roundtrip(tmp_path):
    d = StarDomain.satellites(0.1).translated((0.5, -1.0))
    p = tmp_path / "dom.json"
    d.save(p)
    e = StarDomain.load(p)
    assert np.allclose(e.center, d.center)
    assert volume(e) == pytest.approx(volume(d))
    assert len(e.balls) == 2


@given(st.floats(0.3, 3.0))
def test_volume_normalize(s):
    d = StarDomain.ellipse_eps(0.1).scaled(s)
    assert volume(volume_normalize(d)) == pytest.approx(np.pi, rel=1e-12)


# -- barycenters --------------------------------------------------------------

def test_classical_barycenter_of_translated_disk():
    d = StarDomain.disk(0.7, (0.3, -0.4))
    assert np.allclose(classical_barycenter(d), [0.3, -0.4], atol=1e-12)


def test_domain_quadrature_integrates_moments():
    d = StarDomain.ellipse_eps(0.15)
    pts, w = domain_quadrature(d)
    a, b = 1 / 1.15, 1.15
    assert np.sum(w) == pytest.approx(np.pi, rel=1e-10)
    assert np.sum(w * pts[:, 0] ** 2) == pytest.approx(np.pi * a ** 3 * b / 4, rel=1e-9)


def test_barycenter_monte_carlo(rng):
    phi = BoundaryFunction(0.0, [0.15, 0.1, 0.05], [0.0, 0.08, 0.0])
    d = StarDomain.from_phi(phi)
    P = rng.uniform(-1.5, 1.5, size=(400_000, 2))
    inside = d.contains(P)
    mc = P[inside].mean(axis=0)
    assert np.allclose(classical_barycenter(d), mc, atol=5e-3)


def test_q_profile_pieces():
    t = np.array([0.0, 1.0, 50.0, 99.0])
    assert np.allclose(q_profile(t), t ** 2)
    assert np.allclose(q_first(t), 2 * t)
    assert np.allclose(q_second(t), 2.0)
    big = np.array([150.0, 500.0, 2000.0])
    assert np.all(np.diff(q_first(big)) >= 0)
    assert np.all(q_second(big) >= 0)


@given(st.floats(-20, 20), st.floats(-20, 20))
def test_truncated_barycenter_equivariance(x, y):
    d = StarDomain.from_phi(BoundaryFunction(0.0, [0.1, 0.05], [0.02, -0.04]))
    z = np.array([x, y])
    shift = truncated_barycenter(d.translated(z)) - truncated_barycenter(d)
    assert np.allclose(shift, z, atol=1e-9)


def test_truncated_equals_classical_for_small_diameter():
    for d in (StarDomain.ellipse_eps(0.2), StarDomain.satellites(0.1),
              StarDomain.disk(10.0, (3.0, 1.0))):
        assert np.allclose(truncated_barycenter(d), classical_barycenter(d), atol=1e-8)


def test_truncated_barycenter_large_domain_is_finite():
    d = StarDomain.ellipse(120.0, 1.0)
    x = truncated_barycenter(d)
    assert np.all(np.isfinite(x)) and np.linalg.norm(x) < 1e-6


# -- asymmetry ----------------------------------------------------------------

def test_ball_overlap_exact_for_disks():
    d = StarDomain.disk()
    assert ball_overlap(d, (0.0, 0.0)) == pytest.approx(np.pi, rel=1e-6)
    # two unit disks at distance 1: 2 pi/3 - sqrt(3)/2
    assert ball_overlap(d, (1.0, 0.0)) == pytest.approx(2 * np.pi / 3 - np.sqrt(3) / 2, rel=1e-5)
    assert symmetric_difference(d, (0.0, 0.0)) == pytest.approx(0.0, abs=1e-6)


def test_fraenkel_asymmetry_monte_carlo(rng):
    d = StarDomain.ellipse_eps(0.1)
    alpha, c = fraenkel_asymmetry(d, return_center=True)
    P = rng.uniform(-1.2, 1.2, size=(600_000, 2))
    inball = np.linalg.norm(P - c, axis=1) < 1.0
    mc = np.mean(d.contains(P) ^ inball) * 2.4 ** 2
    assert alpha == pytest.approx(mc, rel=0.02)
    assert np.linalg.norm(c) < 1e-4


def test_fraenkel_requires_unit_area():
    with pytest.raises(ValueError):
        fraenkel_asymmetry(StarDomain.disk(2.0))


# -- meshes -------------------------------------------------------------------

def test_reference_disk_counts():
    S, TH, T = reference_disk(5)
    assert S.size == 1 + 3 * 5 * 6
    assert T.shape[0] == 6 * 5 ** 2


@pytest.mark.parametrize("h", [0.1, 0.05, 0.03])
def test_mesh_quality(h):
    d = StarDomain.ellipse_eps(0.2)
    m = mesh_star_domain(d, h)
    assert m.area() == pytest.approx(np.pi, rel=3 * h ** 2)
    assert m.element_diameters().max() <= 2.0 * h
    loop = m.boundary_loops[0]
    assert loop.size == 6 * rings_for(d.max_radius(), h)
    assert np.allclose(np.diff(m.boundary_angles), 2 * np.pi / loop.size)


def test_mesh_with_satellites_has_three_loops():
    m = mesh_star_domain(StarDomain.satellites(0.1), 0.05)
    assert len(m.boundary_loops) == 3
    assert m.area() == pytest.approx(np.pi, rel=5e-3)


def test_fixed_rings_fix_topology():
    a = mesh_star_domain(StarDomain.ellipse_eps(0.05), 0.05, n_rings=20)
    b = mesh_star_domain(StarDomain.ellipse_eps(0.08), 0.05, n_rings=20)
    assert np.array_equal(a.triangles, b.triangles)


def test_mesh_rejects_bad_input():
    with pytest.raises(ValueError):
        mesh_star_domain(StarDomain.disk(), 0.0)


def test_mesh_export(tmp_path):
    m = mesh_star_domain(StarDomain.disk(), 0.3)
    p = tmp_path / "m.txt"
    m.export_text(p)
    lines = p.read_text().splitlines()
    assert lines[0] == f"# vertices {m.n_vertices}"
    assert f"# triangles {m.triangles.shape[0]}" in lines


def test_degenerate_mesh_error_type():
    assert issubclass(DegenerateMesh, Exception)
