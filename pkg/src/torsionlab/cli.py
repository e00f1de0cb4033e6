"""Command line front end: ``torsionlab {report,sweep,verify,optimize} --config FILE``.

Exit codes: 0 ok, 1 verification failure, 2 configuration error, 3 solver error.
The output directory defaults to ``--out``, then ``$TORSIONLAB_OUT``, then ``.``.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np
from referencing import Registry, Resource

from . import closed_forms
from .errors import (ClusterMismatch, DegenerateGradient, DegenerateMesh, EigenNoConvergence,
                     EmptyDictionary, FNormViolation, InvalidConfig, LineSearchFailure,
                     NoConvergence, NonPositiveRadius, NotNormalized, SingularSystem,
                     TorsionLabError)
from .functionals import DEFAULT_H, PenaltyParams, beta_sq, bump, stability_report
from .geometry import BoundaryFunction, StarDomain, volume, volume_normalize
from .nearly_spherical import NearlySpherical, check_spectral_gap, h_half_norm_sq

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG, EXIT_SOLVER = 0, 1, 2, 3
CONFIG_ERRORS = (InvalidConfig, FNormViolation, EmptyDictionary, NotNormalized, NonPositiveRadius,
                 jsonschema.ValidationError, json.JSONDecodeError, FileNotFoundError, KeyError)
SOLVER_ERRORS = (NoConvergence, SingularSystem, EigenNoConvergence, DegenerateMesh,
                 DegenerateGradient, LineSearchFailure, ClusterMismatch, TorsionLabError)


class ConfigError(Exception):
    pass


# ---------------------------------------------------------------------------
# Schemas
# ---------------------------------------------------------------------------

def _schema_text(name: str) -> dict:
    return json.loads(resources.files("torsionlab").joinpath("schemas", name).read_text())


def _registry() -> Registry:
    files = ("domain.json", "forcing.json")
    return Registry().with_resources(
        (n, Resource.from_contents(_schema_text(n))) for n in files)


def validate(instance, schema_name: str) -> None:
    """Validate against a schema shipped in ``torsionlab/schemas``."""
    schema = _schema_text(schema_name)
    jsonschema.Draft202012Validator(schema, registry=_registry()).validate(instance)


def load_config(path, schema_name: str) -> dict:
    try:
        cfg = json.loads(Path(path).read_text())
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON in {path}: {exc}") from exc
    try:
        validate(cfg, schema_name)
    except jsonschema.ValidationError as exc:
        loc = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"invalid config at {loc}: {exc.message}") from exc
    return cfg


# ---------------------------------------------------------------------------
# Config -> objects
# ---------------------------------------------------------------------------

def build_domain(spec: dict, base: Path = Path(".")) -> StarDomain:
    kind = spec["type"]
    center = tuple(spec.get("center", (0.0, 0.0)))
    if kind == "disk":
        return StarDomain.disk(spec.get("radius", 1.0), center)
    if kind == "ellipse":
        return StarDomain.ellipse_eps(spec["eps"], center)
    if kind == "mode":
        phi = BoundaryFunction.mode(spec["k"], spec["amplitude"])
        if spec.get("normalize", True):
            return NearlySpherical.normalize(phi).domain()
        return StarDomain.from_phi(phi)
    if kind == "fourier":
        phi = BoundaryFunction(spec.get("a0", 0.0), spec.get("a", []), spec.get("b", []))
        if spec.get("normalize", False):
            return NearlySpherical.normalize(phi).domain().translated(center)
        return StarDomain.from_phi(phi, center)
    if kind == "satellites":
        return StarDomain.satellites(spec["r"], spec.get("distance", 2.0))
    if kind == "file":
        p = Path(spec["path"])
        p = p if p.is_absolute() else base / p
        if not p.exists():
            raise ConfigError(f"domain file not found: {p}")
        return StarDomain.load(p)
    raise ConfigError(f"unknown domain type {kind!r}")


def build_forcing(spec):
    if spec is None:
        return 1.0
    if isinstance(spec, (int, float)):
        return float(spec)
    return bump(tuple(spec["center"]), spec["width"])


def _out_dir(arg) -> Path:
    out = Path(arg or os.environ.get("TORSIONLAB_OUT", "."))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path: Path, obj, schema_name: str | None = None) -> None:
    if schema_name:
        validate(obj, schema_name)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.12e}"
    return str(v)


def write_csv(path: Path, rows, columns) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(r.get(c, "")) for c in columns])


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------

def cmd_report(cfg: dict, out: Path, base: Path) -> int:
    dom = build_domain(cfg["domain"], base)
    if cfg.get("normalize_volume", False):
        dom = volume_normalize(dom)
    rep = stability_report(dom, build_forcing(cfg.get("f")), cfg.get("mesh_h", DEFAULT_H))
    _write_json(out / "report.json", rep.to_dict(), "report_output.json")
    print(f"wrote {out / 'report.json'}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------

SWEEP_COLUMNS = {
    "ellipse": ["index", "eps", "sv_deficit", "sv_bias", "sv_deficit_exact", "fk_deficit", "beta_sq",
                "asymmetry", "h1_distance", "failure"],
    "mode": ["index", "k", "amplitude", "sv_deficit", "beta_sq", "h_half_sq", "gap_ratio", "failure"],
    "satellite": ["index", "dim", "p", "r", "deficit", "beta_sq", "ratio", "failure"],
    "random_gap": ["index", "seed", "c1_norm", "deficit", "bound", "ratio", "holds", "failure"],
}


def _sweep_points(cfg: dict):
    fam = cfg["family"]
    if fam == "ellipse":
        return [{"eps": float(e)} for e in cfg.get("eps", [])]
    if fam == "mode":
        return [{"k": int(k), "amplitude": float(a)} for k in cfg.get("k", [])
                for a in cfg.get("amplitude", [])]
    if fam == "satellite":
        return [{"dim": int(cfg.get("dim", 3)), "p": float(p), "r": float(r)}
                for p in cfg.get("p", []) for r in cfg.get("r", [])]
    if fam == "random_gap":
        seed = int(cfg.get("seed", 0))
        return [{"seed": seed, "member": i} for i in range(int(cfg.get("count", 0)))]
    raise ConfigError(f"unknown family {fam!r}")


def _random_phi(seed: int, member: int, c1_max: float) -> NearlySpherical:
    rng = np.random.default_rng([seed, member])
    while True:
        a, b = np.zeros(6), np.zeros(6)
        a[1:], b[1:] = rng.normal(size=5), rng.normal(size=5)
        phi = BoundaryFunction(0.0, a, b)
        phi = phi * (rng.uniform(0.2, 0.9) * c1_max / phi.c1_norm())
        ns = NearlySpherical.normalize(phi)
        if ns.phi.c1_norm() <= c1_max:
            return ns


def sweep_point(job):
    """Evaluate one sweep point; failures are recorded, not raised."""
    index, fam, point, cfg = job
    row = {"index": index, **point}
    row.pop("member", None)
    h = cfg.get("mesh_h", DEFAULT_H)
    f = build_forcing(cfg.get("f"))
    try:
        if fam == "ellipse":
            rep = stability_report(StarDomain.ellipse_eps(point["eps"]), f, h)
            row.update(sv_deficit=rep.sv_deficit, sv_bias=rep.sv_bias, fk_deficit=rep.fk_deficit, beta_sq=rep.beta_sq,
                       asymmetry=rep.asymmetry,
                       sv_deficit_exact=closed_forms.ellipse_torsion(point["eps"])[1],
                       h1_distance=closed_forms.h1_distance_ellipse(point["eps"]))
        elif fam == "mode":
            ns = NearlySpherical.normalize(BoundaryFunction.mode(point["k"], point["amplitude"]))
            gap = check_spectral_gap(ns, h)
            row.update(sv_deficit=gap.deficit, beta_sq=beta_sq(ns.domain(), f, h),
                       h_half_sq=h_half_norm_sq(ns.phi), gap_ratio=gap.ratio)
        elif fam == "satellite":
            d, b2 = closed_forms.satellite_example(point["dim"], point["r"], point["p"])
            row.update(deficit=d, beta_sq=b2, ratio=b2 / d)
        elif fam == "random_gap":
            ns = _random_phi(point["seed"], point["member"], cfg.get("c1_max", 0.05))
            gap = check_spectral_gap(ns, h, enforce_c1=True)
            row.update(c1_norm=ns.phi.c1_norm(), deficit=gap.deficit, bound=gap.bound,
                       ratio=gap.ratio, holds=int(gap.holds))
        row["failure"] = ""
    except (TorsionLabError, ValueError, ArithmeticError) as exc:
        row["failure"] = f"{type(exc).__name__}: {exc}".replace("\n", " ")
    return row


def cmd_sweep(cfg: dict, out: Path, jobs: int) -> int:
    fam = cfg["family"]
    points = _sweep_points(cfg)
    if not points:
        raise ConfigError("sweep grid is empty")
    work = [(i, fam, p, cfg) for i, p in enumerate(points)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(sweep_point, work))  # map keeps parameter order
    else:
        rows = [sweep_point(w) for w in work]
    path = out / f"sweep_{fam}.csv"
    write_csv(path, rows, SWEEP_COLUMNS[fam])
    failed = [r for r in rows if r["failure"]]
    print(f"wrote {path} ({len(rows)} rows, {len(failed)} failed)")
    if failed:
        print(f"{len(failed)} sweep points failed; see the failure column", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------

def cmd_verify(cfg: dict, out: Path) -> int:
    from .verification import SUITES, run_suite

    suite = cfg["suite"]
    if suite not in SUITES:
        raise ConfigError(f"unknown suite {suite!r}; choose from {sorted(SUITES)}")
    results = run_suite(suite)
    payload = {"suite": suite, "passed": all(r.passed for r in results),
               "checks": [r.to_dict() for r in results]}
    _write_json(out / f"verify_{suite}.json", payload, "verify_output.json")
    for r in results:
        print(f"{r.name}: {'PASS' if r.passed else 'FAIL'}  {r.summary}")
    if not payload["passed"]:
        failing = ", ".join(r.name for r in results if not r.passed)
        print(f"failing checks: {failing}", file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


# ---------------------------------------------------------------------------
# optimize
# ---------------------------------------------------------------------------

def cmd_optimize(cfg: dict, out: Path, base: Path) -> int:
    from .shape_calculus import OptimizerOptions, minimize_energy, write_trace

    dom = build_domain(cfg["domain"], base)
    f = build_forcing(cfg.get("f"))
    opts = OptimizerOptions(**cfg.get("options", {}))
    p = dict(cfg.get("params", {}))
    # validate tau and eta before any solve so config errors surface first
    PenaltyParams(**{k: v for k, v in p.items() if k != "a"})
    if abs(volume(dom) - np.pi) > 1e-3:
        raise InvalidConfig("initial domain must have area pi")
    if p.get("a") == "initial":
        p["a"] = beta_sq(dom, f, opts.mesh_h)
    params = PenaltyParams(**p)

    polylines = []
    th = np.linspace(0.0, 2.0 * np.pi, 129)[:-1]

    def record(it, d, row):
        pts = d.boundary_points(th)
        polylines.extend({"iter": it, "vertex": i, "x": float(x), "y": float(y)}
                         for i, (x, y) in enumerate(pts))

    final, trace = minimize_energy(dom, f, params, opts, callback=record)
    _write_json(out / "final_domain.json", final.to_dict(), "optimize_output.json")
    write_trace(trace, out / "trace.csv")
    write_csv(out / "boundaries.csv", polylines, ["iter", "vertex", "x", "y"])
    last = trace[-1]
    print(f"{len(trace) - 1} iterations, energy {last.energy:.10f}, hausdorff {last.hausdorff:.3e}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

SCHEMAS = {"report": "report_config.json", "sweep": "sweep_config.json",
           "verify": "verify_config.json", "optimize": "optimize_config.json"}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="torsionlab", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name in SCHEMAS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, help="JSON config file")
        sp.add_argument("--out", default=None, help="output directory")
        sp.add_argument("--jobs", type=int, default=1, help="worker processes for sweeps")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        if args.jobs < 1:
            raise ConfigError("--jobs must be at least 1")
        cfg = load_config(args.config, SCHEMAS[args.command])
        base = Path(args.config).resolve().parent
        out = _out_dir(args.out)
        if args.command == "report":
            return cmd_report(cfg, out, base)
        if args.command == "sweep":
            return cmd_sweep(cfg, out, args.jobs)
        if args.command == "verify":
            return cmd_verify(cfg, out)
        return cmd_optimize(cfg, out, base)
    except (ConfigError, *CONFIG_ERRORS) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SOLVER_ERRORS as exc:
        print(f"solver error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
