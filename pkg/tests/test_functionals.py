import numpy as np
import pytest
from hypothesis import given, strategies as st

from torsionlab import closed_forms as cf
from torsionlab.errors import EmptyDictionary, FNormViolation, InvalidConfig
from torsionlab.functionals import (TAU_CAP, PenaltyParams, ResolventContext, StabilityReport,
                                    beta_sq, bump, check_rhs_bound, default_dictionary,
                                    discrete_bias, energy, h_penalty, h_penalty_slope,
                                    resolvent_distance_lb, resolvent_distance_profile,
                                    stability_report, volume_penalty)
from torsionlab.geometry import (BoundaryFunction, StarDomain, mesh_star_domain, volume,
                                 volume_normalize)


# -- penalties ------------------------------------------------------------------

def test_h_penalty_values():
    a = 1e-3
    assert h_penalty(a, a) == pytest.approx(a)
    assert h_penalty(0.0, a) == pytest.approx(a * np.sqrt(2))
    assert h_penalty(2 * a, a) == pytest.approx(a * np.sqrt(2))


@given(st.floats(0, 1), st.floats(1e-4, 1))
def test_h_penalty_minimum(t, a):
    assert h_penalty(t, a) - a >= -1e-15
    assert abs(h_penalty_slope(t, a)) <= 2.0 + 1e-12


def test_h_penalty_slope_is_twice_derivative():
    a, t, d = 0.01, 0.03, 1e-7
    fd = (h_penalty(t + d, a) - h_penalty(t - d, a)) / (2 * d)
    assert h_penalty_slope(t, a) == pytest.approx(2 * fd, rel=1e-6)


def test_volume_penalty_branches():
    assert volume_penalty(np.pi, 0.05) == 0.0
    assert volume_penalty(np.pi - 0.1, 0.05) == pytest.approx(-0.005)
    assert volume_penalty(np.pi + 0.1, 0.05) == pytest.approx(2.0)


def test_penalty_params_validation():
    PenaltyParams(a=0.5, tau=TAU_CAP)
    for kw in ({"a": 0.0}, {"a": 1.5}, {"tau": -1.0}, {"tau": 0.5}, {"eta": 0.0}):
        with pytest.raises(InvalidConfig):
            PenaltyParams(**kw)


# -- forcings -------------------------------------------------------------------

def test_bump_properties():
    f = bump((0.1, -0.2), 0.3)
    assert f(0.1, -0.2) == pytest.approx(1.0)
    assert f(0.5, 0.5) == 0.0
    assert f.label == "bump(0.1,-0.2;0.3)"


def test_default_dictionary():
    d = default_dictionary()
    assert len(d) == 20
    assert d[0] == ("const1", 1.0)
    assert len({name for name, _ in d}) == 20


def test_rhs_bound_check(disk_mesh):
    check_rhs_bound(1.0, disk_mesh)
    check_rhs_bound(bump((0, 0), 0.5), disk_mesh)
    with pytest.raises(FNormViolation):
        check_rhs_bound(1.5, disk_mesh)
    with pytest.raises(FNormViolation):
        check_rhs_bound(lambda x, y: 2.0 * x, disk_mesh)


# -- beta^2 ---------------------------------------------------------------------

def test_beta_sq_ball_vanishes():
    assert beta_sq(StarDomain.disk(), 1.0, 0.05) == pytest.approx(0.0, abs=1e-14)
    assert beta_sq(StarDomain.disk(), bump((0.3, 0), 0.4), 0.05) == pytest.approx(0.0, abs=1e-14)


def test_beta_sq_requires_unit_volume():
    with pytest.raises(InvalidConfig):
        beta_sq(StarDomain.disk(1.2), 1.0, 0.05)


def test_beta_sq_ellipse_refinement_stability():
    ratios = []
    for h in (0.04, 0.03, 0.02):
        ctx = ResolventContext(StarDomain.ellipse_eps(0.1), h)
        ratios.append((ctx.tor + np.pi / 16) / ctx.beta_sq(1.0))
    assert min(ratios) > 0
    assert max(ratios) / min(ratios) < 1.2


def test_beta_sq_mesh_vs_grid():
    d = StarDomain.ellipse_eps(0.1)
    a = beta_sq(d, 1.0, 0.03, method="mesh")
    b = beta_sq(d, 1.0, 0.03, method="grid")
    assert a == pytest.approx(b, rel=2e-2)
    assert a == pytest.approx(0.0010966, rel=1e-3)  # frozen


def test_beta_sq_translation_equivariance():
    d = volume_normalize(StarDomain.from_phi(BoundaryFunction(0.0, [0.05, 0.04], [0.0, 0.03])))
    f = bump((0.1, 0.0), 0.6)
    z = np.array([0.7, -0.3])
    g = lambda x, y: f(np.asarray(x) - z[0], np.asarray(y) - z[1])
    assert beta_sq(d.translated(z), g, 0.03) == pytest.approx(beta_sq(d, f, 0.03), rel=5e-3)


def test_beta_sq_satellite_bang_bang():
    r, p = 0.1, 2.0
    dom = StarDomain.satellites(r)
    M = cf.satellite_forcing_height(2, r, p)

    def f(x, y):
        x, y = np.asarray(x), np.asarray(y)
        on = (np.hypot(x - 2, y) < r * 1.001) | (np.hypot(x + 2, y) < r * 1.001)
        return np.where(on, M, 0.0)

    val = beta_sq(dom, f, 0.02, check_bound=False)
    assert val == pytest.approx(cf.satellite_example(2, r, p)[1], rel=0.1)
    with pytest.raises(FNormViolation):
        beta_sq(dom, f, 0.02)


def test_beta_lipschitz_consistency():
    """|beta(E) - beta(E')| against |E symdiff E'| + int|u_E - u_E'| for nearby ellipses."""
    from torsionlab.fem import l2_distance_sq

    consts = []
    for e1, e2 in ((0.08, 0.1), (0.1, 0.12), (0.15, 0.17)):
        c1, c2 = (ResolventContext(StarDomain.ellipse_eps(e), 0.03) for e in (e1, e2))
        b1, b2 = np.sqrt(c1.beta_sq(1.0)), np.sqrt(c2.beta_sq(1.0))
        a1, bb1 = 1 / (1 + e1), 1 + e1
        a2, bb2 = 1 / (1 + e2), 1 + e2
        th = np.linspace(0, 2 * np.pi, 4096, endpoint=False)
        r1 = a1 * bb1 / np.hypot(bb1 * np.cos(th), a1 * np.sin(th))
        r2 = a2 * bb2 / np.hypot(bb2 * np.cos(th), a2 * np.sin(th))
        sd = 0.5 * np.mean(np.abs(r1 ** 2 - r2 ** 2)) * 2 * np.pi
        ud = np.sqrt(l2_distance_sq(c1.torsion, c2.torsion))
        consts.append(abs(b1 - b2) / (sd + ud))
    assert np.all(np.isfinite(consts)) and max(consts) < 10.0


# -- dictionary lower bound -------------------------------------------------------

def test_resolvent_lb_ball_and_superset():
    assert resolvent_distance_lb(StarDomain.disk(), mesh_h=0.05) == pytest.approx(0.0, abs=1e-7)
    d = StarDomain.ellipse_eps(0.1)
    ctx = ResolventContext(d, 0.03)
    assert resolvent_distance_lb(d, context=ctx) >= np.sqrt(ctx.beta_sq(1.0)) - 1e-15
    with pytest.raises(EmptyDictionary):
        resolvent_distance_lb(d, [], context=ctx)


def test_resolvent_profile_accepts_bare_callables():
    prof = resolvent_distance_profile(StarDomain.ellipse_eps(0.1), [bump((0, 0), 0.5)], 0.05)
    assert prof[0][0] == "bump(0,0;0.5)" and prof[0][1] > 0


def test_resolvent_lb_quadratic_in_eps():
    eps = np.array([0.05, 0.1, 0.15, 0.2])
    lb2 = [resolvent_distance_lb(StarDomain.ellipse_eps(e), mesh_h=0.04) ** 2 for e in eps]
    slope = np.polyfit(np.log(eps), np.log(lb2), 1)[0]
    assert slope == pytest.approx(2.0, abs=0.2)


# -- energy and reports --------------------------------------------------------

def test_energy_on_ball():
    p = PenaltyParams(a=1e-3, tau=1e-3)
    h = 0.03
    bias = discrete_bias(h)[0]
    val = energy(StarDomain.disk(), 1.0, p, h)
    assert val == pytest.approx(-np.pi / 16 + bias + p.tau * p.a * np.sqrt(2), abs=1e-12)
    val0 = energy(StarDomain.disk(), 1.0, PenaltyParams(tau=0.0), h)
    assert val0 == pytest.approx(-np.pi / 16 + bias, abs=1e-12)


def test_energy_ellipse_above_ball():
    d = StarDomain.ellipse_eps(0.1)
    a = beta_sq(d, 1.0, 0.03)
    p = PenaltyParams(a=a, tau=1e-3)
    assert energy(d, 1.0, p, 0.03) > energy(StarDomain.disk(), 1.0, p, 0.03)


def test_stability_report_ball():
    rep = stability_report(StarDomain.disk(), 1.0, 0.04)
    assert abs(rep.sv_deficit - rep.sv_bias) < 1e-12
    assert abs(rep.fk_deficit - rep.fk_bias) < 1e-10
    assert rep.asymmetry <= 2e-3
    assert rep.beta_sq == pytest.approx(0.0, abs=1e-14)


def test_stability_report_ellipse_and_roundtrip(tmp_path):
    rep = stability_report(StarDomain.ellipse_eps(0.1), 1.0, 0.03)
    assert rep.fk_deficit > 0 and rep.sv_deficit > 0
    C = rep.sv_deficit / rep.fk_deficit  # Kohler-Jobin ordering constant, logged
    print(f"empirical sv/fk constant: {C:.4f}")
    assert 0 < C < 1
    assert rep.asymmetry == pytest.approx(0.3807, rel=2e-3)
    p = tmp_path / "r.json"
    rep.to_json(p)
    import json
    back = StabilityReport.from_dict(json.loads(p.read_text()))
    assert back == rep


def test_stability_report_mode3_positive():
    d = volume_normalize(StarDomain.from_phi(BoundaryFunction.mode(3, 0.05)))
    rep = stability_report(d, 1.0, 0.03)
    assert rep.fk_deficit > 0 and rep.sv_deficit > 0 and rep.beta_sq > 0 and rep.asymmetry > 0


@pytest.mark.parametrize("dom", [StarDomain.ellipse_eps(0.05), StarDomain.satellites(0.1),
                                 StarDomain.disk()])
def test_deficits_nonnegative(dom):
    rep = stability_report(dom, 1.0, 0.04)
    assert rep.sv_deficit >= -1e-6 and rep.fk_deficit >= -1e-6


def test_discrete_bias_shrinks():
    b1, b2 = discrete_bias(0.04), discrete_bias(0.02)
    assert abs(b2[0]) < abs(b1[0]) / 3 and abs(b2[1]) < abs(b1[1]) / 3
    assert volume(StarDomain.disk()) == pytest.approx(np.pi)
    assert mesh_star_domain(StarDomain.disk(), 0.04).n_vertices > 0
