"""Acceptance checks A1-A13 grouped into suites.

Every check returns a ``CheckResult`` carrying the measured quantities, so the
same code backs the test suite and the ``verify`` command.
"""
from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import closed_forms
from .errors import MultiplicityWarning
from .fem import solve_eigen, torsional_rigidity
from .functionals import (PenaltyParams, ResolventContext, beta_sq, default_dictionary,
                          discrete_bias)
from .geometry import (BoundaryFunction, StarDomain, classical_barycenter, mesh_star_domain,
                       rings_for, symmetric_difference, truncated_barycenter, volume,
                       volume_normalize)
from .nearly_spherical import NearlySpherical, check_spectral_gap, taylor_check
from .shape_calculus import (OptimizerOptions, boundary_density, d_barycenter, d_beta_sq,
                             d_torsion, d_volume, flow_domain, minimize_energy)
from .transfer import compute_transfer, match_multiplicity, match_simple


@dataclass
class CheckResult:
    name: str
    passed: bool
    summary: str
    metrics: dict = field(default_factory=dict)
    seconds: float = 0.0

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": bool(self.passed), "summary": self.summary,
                "metrics": _jsonable(self.metrics), "seconds": round(self.seconds, 3)}


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def loglog_slope(x, y) -> float:
    return float(np.polyfit(np.log(np.asarray(x, float)), np.log(np.asarray(y, float)), 1)[0])


def _mode_domain(k: int, amp: float) -> StarDomain:
    return volume_normalize(StarDomain.from_phi(BoundaryFunction.mode(k, amp)))


def stability_family():
    """Ellipses and single-mode perturbed disks used by the resolvent and transfer checks."""
    fam = [(f"ellipse{e:g}", StarDomain.ellipse_eps(e)) for e in (0.05, 0.1, 0.2)]
    fam += [(f"mode{k}", _mode_domain(k, 0.05)) for k in (2, 3, 4, 5)]
    return fam


# ---------------------------------------------------------------------------
# A1-A3, A13: oracles
# ---------------------------------------------------------------------------

def check_a1(hs=(0.04, 0.02, 0.01)) -> CheckResult:
    exact = closed_forms.ball_torsional_rigidity(2, 1.0)
    errs = [abs(torsional_rigidity(mesh_star_domain(StarDomain.disk(), h)) - exact) / abs(exact)
            for h in hs]
    order = loglog_slope(hs, errs)
    at02 = errs[list(hs).index(0.02)]
    ok = at02 < 1e-3 and order >= 1.8 and all(np.diff(errs) < 0)
    return CheckResult("A1", ok, f"rel err {at02:.2e} at h=0.02, order {order:.2f}",
                       {"h": list(hs), "rel_err": errs, "order": order})


def check_a2(h=0.02) -> CheckResult:
    b = solve_eigen(mesh_star_domain(StarDomain.disk(), h), 4)
    lam1 = closed_forms.disk_eigenvalue(1)
    err = abs(b.eigenvalues[0] - lam1) / lam1
    gap = abs(b.eigenvalues[2] - b.eigenvalues[1]) / b.eigenvalues[1]
    clustered = (1, 2) in b.clusters
    ok = err < 5e-3 and gap < 1e-4 and clustered
    return CheckResult("A2", ok, f"lambda1 rel err {err:.2e}, lambda2/3 gap {gap:.1e}",
                       {"lambda": b.eigenvalues.tolist(), "rel_err": err, "gap": gap,
                        "clusters": [list(c) for c in b.clusters]})


def check_a3(h=0.02) -> CheckResult:
    eps = np.geomspace(0.002, 0.02, 6)
    slope = loglog_slope(eps, [closed_forms.ellipse_torsion(e)[1] for e in eps])
    exact = closed_forms.ellipse_torsion(0.1)[1]
    fem = torsional_rigidity(mesh_star_domain(StarDomain.ellipse_eps(0.1), h)) \
        - closed_forms.ball_torsional_rigidity(2, 1.0)
    rel = abs(fem - exact) / exact
    ok = abs(slope - 2.0) <= 0.02 and rel < 0.02
    return CheckResult("A3", ok, f"slope {slope:.4f}, FEM deficit rel err {rel:.2e}",
                       {"eps": eps.tolist(), "slope": slope, "fem_deficit": fem,
                        "exact_deficit": exact, "rel_err": rel})


def check_a13() -> CheckResult:
    doms = {"disk": StarDomain.disk(), "ellipse0.1": StarDomain.ellipse_eps(0.1),
            "mode3": _mode_domain(3, 0.05), "satellites": StarDomain.satellites(0.1),
            "offset_ellipse": StarDomain.ellipse(0.7, 1.3, center=(0.3, -0.2))}
    worst = 0.0
    for d in doms.values():
        worst = max(worst, float(np.linalg.norm(truncated_barycenter(d) - classical_barycenter(d))))
    z = np.array([1.7, -0.4])
    eq = 0.0
    for d in doms.values():
        eq = max(eq, float(np.linalg.norm(truncated_barycenter(d.translated(z))
                                          - truncated_barycenter(d) - z)))
    lips = []
    for (a1, b1), (a2, b2) in (((0.05, 0.02), (0.06, 0.03)), ((0.1, 0.0), (0.1, 0.05)),
                               ((0.15, 0.05), (0.2, 0.02))):
        p, q = _lip_domain(a1, b1), _lip_domain(a2, b2)
        lips.append(float(np.linalg.norm(truncated_barycenter(p) - truncated_barycenter(q)))
                    / _symdiff(p, q))
    C = max(lips)
    ok = worst <= 1e-8 and eq <= 1e-8 and np.isfinite(C)
    return CheckResult("A13", ok, f"max |x_trunc - x_class| {worst:.1e}, Lipschitz C {C:.3f}",
                       {"max_diff": worst, "equivariance": eq, "lipschitz_C": C, "ratios": lips})


def _lip_domain(a: float, b: float) -> StarDomain:
    phi = BoundaryFunction(0.0, [b, a, 0.0], [0.0, 0.0, 0.5 * a])
    return StarDomain.from_phi(phi)


def _symdiff(p: StarDomain, q: StarDomain, n: int = 4096) -> float:
    """``|P symdiff Q|`` for star domains about the same center."""
    th = 2.0 * np.pi * np.arange(n) / n
    return float(0.5 * np.mean(np.abs(p.radial(th) ** 2 - q.radial(th) ** 2)) * 2.0 * np.pi)


# ---------------------------------------------------------------------------
# A4: derivatives
# ---------------------------------------------------------------------------

VELOCITIES = {
    "1": BoundaryFunction.constant(1.0),
    "cos": BoundaryFunction.mode(1, 1.0, "cos"),
    "sin": BoundaryFunction.mode(1, 1.0, "sin"),
    "cos2": BoundaryFunction.mode(2, 1.0, "cos"),
    "cos3": BoundaryFunction.mode(3, 1.0, "cos"),
}
ZERO_FLOOR = 0.1  # fraction of the family's largest derivative used as denominator floor


def derivative_table(h=0.02, t=1e-3, f=1.0):
    """Hadamard values and central differences for every (domain, velocity, functional)."""
    rows = []
    for dname, dom in (("ball", StarDomain.disk()), ("ellipse0.1", StarDomain.ellipse_eps(0.1))):
        rings = rings_for(dom.max_radius(), h)
        dens = boundary_density(dom, f, h)
        for vname, V in VELOCITIES.items():
            dp, dm = flow_domain(dom, V, t), flow_domain(dom, V, -t)
            fd_vol = (volume(dp) - volume(dm)) / (2 * t)
            fd_bar = (truncated_barycenter(dp) - truncated_barycenter(dm)) / (2 * t)
            fd_tor = (torsional_rigidity(mesh_star_domain(dp, h, rings))
                      - torsional_rigidity(mesh_star_domain(dm, h, rings))) / (2 * t)
            fd_b2 = (beta_sq(dp, f, h, require_unit_volume=False, n_rings=rings)
                     - beta_sq(dm, f, h, require_unit_volume=False, n_rings=rings)) / (2 * t)
            bar = d_barycenter(dom, V)
            vals = {"volume": (d_volume(dom, V), fd_vol),
                    "barycenter_x": (bar[0], fd_bar[0]), "barycenter_y": (bar[1], fd_bar[1]),
                    "torsion": (d_torsion(dom, V, density=dens), fd_tor),
                    "beta_sq": (d_beta_sq(dom, f, V, density=dens), fd_b2)}
            for fn, (d, fd) in vals.items():
                rows.append({"domain": dname, "velocity": vname, "functional": fn,
                             "hadamard": float(d), "fd": float(fd)})
    scale = {}
    for r in rows:
        key = r["functional"].split("_")[0]
        scale[key] = max(scale.get(key, 0.0), abs(r["fd"]))
    for r in rows:
        floor = ZERO_FLOOR * scale[r["functional"].split("_")[0]]
        r["rel_err"] = abs(r["hadamard"] - r["fd"]) / max(abs(r["fd"]), floor)
    return rows


def check_a4(h=0.02) -> CheckResult:
    rows = derivative_table(h)
    worst = max(rows, key=lambda r: r["rel_err"])
    ok = worst["rel_err"] <= 5e-3
    return CheckResult("A4", ok, f"max rel err {worst['rel_err']:.2e} "
                       f"({worst['domain']}, {worst['velocity']}, {worst['functional']})",
                       {"rows": rows})


# ---------------------------------------------------------------------------
# A5, A12: nearly spherical sets
# ---------------------------------------------------------------------------

def random_gap_family(n=20, seed=0, c1_max=0.05):
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        a = np.zeros(6)
        b = np.zeros(6)
        a[1:] = rng.normal(size=5)
        b[1:] = rng.normal(size=5)
        phi = BoundaryFunction(0.0, a, b)
        phi = phi * (rng.uniform(0.2, 0.9) * c1_max / phi.c1_norm())
        ns = NearlySpherical.normalize(phi)
        if ns.phi.c1_norm() <= c1_max:
            out.append(ns)
    return out


def check_a5(h=0.02, n=20, seed=0) -> CheckResult:
    slack = 2.0 * abs(discrete_bias(h)[0])
    res = [check_spectral_gap(ns, h, slack=slack, enforce_c1=True) for ns in random_gap_family(n, seed)]
    violations = sum(not r.holds for r in res)
    ratios = [r.ratio for r in res]
    return CheckResult("A5", violations == 0,
                       f"{violations} violations in {n}, min deficit/bound {min(ratios):.2f}",
                       {"ratios": ratios, "deficits": [r.deficit for r in res],
                        "bounds": [r.bound for r in res], "slack": slack})


def check_a12() -> CheckResult:
    slopes = {}
    for k in (2, 3):
        slopes[f"cos{k}"] = taylor_check(BoundaryFunction.mode(k, 1.0)).slope
    ok = all(s >= 2.5 for s in slopes.values())
    return CheckResult("A12", ok, ", ".join(f"{k} slope {v:.2f}" for k, v in slopes.items()), slopes)


# ---------------------------------------------------------------------------
# A6, A9, A10: examples and resolvent stability
# ---------------------------------------------------------------------------

def resolvent_ratios(h):
    rows = []
    exact_ball = closed_forms.ball_torsional_rigidity(2, 1.0)
    dictionary = default_dictionary()
    for name, dom in stability_family():
        ctx = ResolventContext(dom, h)
        b2 = max(ctx.beta_sq(f) for _, f in dictionary)
        sv = ctx.tor - exact_ball
        rows.append({"domain": name, "sv_deficit": sv, "beta_sq": b2, "ratio": sv / b2})
    return rows


def check_a6(h=0.03, h_fine=0.02) -> CheckResult:
    coarse = resolvent_ratios(h)
    fine = resolvent_ratios(h_fine)
    c0 = min(r["ratio"] for r in coarse)
    c1 = min(r["ratio"] for r in fine)
    change = abs(c1 - c0) / c1
    ok = c1 > 0 and c0 > 0 and change < 0.25
    return CheckResult("A6", ok, f"empirical c = {c1:.4f} (coarse {c0:.4f}, change {change:.1%})",
                       {"coarse": coarse, "fine": fine, "c": c1, "change": change})


def check_a9() -> CheckResult:
    eps = np.geomspace(0.02, 0.2, 6)
    h1 = [closed_forms.h1_distance_ellipse(e) for e in eps]
    dfc = [closed_forms.ellipse_torsion(e)[1] for e in eps]
    s1, s2 = loglog_slope(eps, h1), loglog_slope(eps, dfc)
    ok = abs(s1 - 1.0) <= 0.1 and s2 > 1.8
    return CheckResult("A9", ok, f"H1 distance slope {s1:.3f}, deficit slope {s2:.3f}",
                       {"eps": eps.tolist(), "h1": h1, "deficit": dfc, "h1_slope": s1,
                        "deficit_slope": s2})


def check_a10() -> CheckResult:
    n = 3
    r = np.geomspace(0.02, 0.1, 6)
    out = {}
    ok = True
    for p in (1.0, 1.2):
        vals = np.array([closed_forms.satellite_example(n, x, p) for x in r])
        sd, sb = loglog_slope(r, vals[:, 0]), loglog_slope(r, vals[:, 1])
        target = n + 4 - 2 * n / p
        out[f"p{p:g}"] = {"deficit_slope": sd, "beta_slope": sb, "target": target,
                          "ratio": (vals[:, 1] / vals[:, 0]).tolist()}
        ok &= abs(sd - 3.0) <= 0.05 and abs(sb - target) <= 1e-3
    ratio = np.array(out["p1.2"]["ratio"])
    blowup = bool(np.all(np.diff(ratio) < 0))  # beta^2/deficit grows as r decreases
    ok &= blowup
    return CheckResult("A10", bool(ok), "; ".join(
        f"p={k[1:]}: deficit slope {v['deficit_slope']:.3f}, beta slope {v['beta_slope']:.4f}"
        for k, v in out.items()) + f"; p=1.2 ratio blows up: {blowup}", out)


# ---------------------------------------------------------------------------
# A7, A8: transfer
# ---------------------------------------------------------------------------

def check_a7(hs=(0.03, 0.02)) -> CheckResult:
    dom = StarDomain.ellipse_eps(0.05)
    res = {}
    for j in (1, 2):
        res[j] = []
        for h in hs:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", MultiplicityWarning)
                d = compute_transfer(dom, j, 20, h)
            res[j].append(d.identity_residual / d.lambda_ball)
    ok = all(max(v) <= 5e-3 and v[-1] < v[0] for v in res.values())
    return CheckResult("A7", ok, ", ".join(f"j={j}: {v[-1]:.2e} (coarse {v[0]:.2e})"
                                          for j, v in res.items()),
                       {"h": list(hs), "relative_residual": {str(k): v for k, v in res.items()}})


def check_a8(h=0.02) -> CheckResult:
    bias = discrete_bias(h)[0]
    rows = []
    for name, dom in stability_family():
        mesh = mesh_star_domain(dom, h)
        bundle = solve_eigen(mesh, 8)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", MultiplicityWarning)
            simple = match_simple(compute_transfer(dom, 1, 8, bundle=bundle, mesh_h=h))
        mult = match_multiplicity(dom, (2, 3), h, bundle=bundle)
        deficit = simple.deficit - bias
        rows.append({"domain": name, "deficit": deficit, "dist_j1": simple.distance,
                     "dist_23": mult.residual,
                     "C_j1": simple.distance / deficit, "C_23": mult.residual / deficit})
    C = max(max(r["C_j1"], r["C_23"]) for r in rows)
    sweep = []
    for e in (0.02, 0.04, 0.06, 0.08, 0.1):
        dom = StarDomain.ellipse_eps(e)
        bundle = solve_eigen(mesh_star_domain(dom, h), 6)
        s = match_simple(compute_transfer(dom, 1, 6, bundle=bundle, mesh_h=h))
        sweep.append(s.distance / (s.deficit - bias))
    lo, hi = min(sweep), max(sweep)
    ok = np.isfinite(C) and C <= 50.0 and lo > 0 and hi / lo <= 10.0
    return CheckResult("A8", bool(ok), f"C = {C:.3f}; ellipse distance/deficit in [{lo:.3f}, {hi:.3f}]",
                       {"rows": rows, "C": C, "ellipse_ratio": sweep})


# ---------------------------------------------------------------------------
# A11: optimizer
# ---------------------------------------------------------------------------

def check_a11(h=0.03) -> CheckResult:
    start = StarDomain.ellipse_eps(0.1)
    a = beta_sq(start, 1.0, h)
    params = PenaltyParams(a=a, tau=1e-3)
    dom, trace = minimize_energy(start, 1.0, params, OptimizerOptions(mesh_h=h))
    energies = [r.energy for r in trace]
    monotone = bool(np.all(np.diff(energies) < 0))
    last = trace[-1]
    ok = monotone and last.hausdorff <= 1e-2 and last.residual < 5e-2
    return CheckResult("A11", ok, f"{len(trace) - 1} iterations, Hausdorff {last.hausdorff:.2e}, "
                       f"EL residual {last.residual:.2e}, monotone {monotone}",
                       {"energies": energies, "hausdorff": last.hausdorff,
                        "residual": last.residual, "a": a})


# ---------------------------------------------------------------------------
# Suites
# ---------------------------------------------------------------------------

CHECKS = {
    "A1": check_a1, "A2": check_a2, "A3": check_a3, "A4": check_a4, "A5": check_a5,
    "A6": check_a6, "A7": check_a7, "A8": check_a8, "A9": check_a9, "A10": check_a10,
    "A11": check_a11, "A12": check_a12, "A13": check_a13,
}

SUITES = {
    "oracle": ("A1", "A2", "A3", "A13"),
    "derivatives": ("A4",),
    "gap": ("A5", "A12"),
    "transfer": ("A7", "A8"),
    "examples": ("A6", "A9", "A10"),
    "optimizer": ("A11",),
}
SUITES["all"] = tuple(sorted(CHECKS, key=lambda k: int(k[1:])))


def run_check(name: str) -> CheckResult:
    t0 = time.perf_counter()
    res = CHECKS[name]()
    res.seconds = time.perf_counter() - t0
    return res


def run_suite(suite: str):
    if suite not in SUITES:
        raise KeyError(suite)
    return [run_check(n) for n in SUITES[suite]]
