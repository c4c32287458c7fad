"""Scenario-driven command line: ``fpklab {solve,verify,catalog,report}``.

A scenario is a TOML file::

    name = "constant-1d"
    dimension = 1
    theta = 1.0
    seed = 0

    [drift]
    key = "constant"
    params = { c = 0.5 }

    [grid]
    R = 8.0
    n = 801

    [[checks]]
    id = "check_tail"
    regime = "inf"
    t = [2.0, 5.0, 10.0, 100.0]

Unknown keys are rejected.  ``verify`` writes one JSON report and one CSV
table per check plus ``manifest.json``; wall times and the run timestamp go
to ``timing.json`` so that the manifest and reports are byte-identical
across runs with the same configuration and seed.

Exit codes: 0 no check failed, 1 a check failed, 2 configuration error,
3 solver error.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import inspect
import io
import json
import logging
import math
import os
import sys
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from fpklab import __version__, bounds
from fpklab.catalog import CATALOG, available, catalog_drift
from fpklab.errors import ConfigError, FPKLabError, InvalidArgument
from fpklab.norms import orlicz_norm
from fpklab.quad import build_gauss_hermite, build_uniform
from fpklab.report import BoundReport
from fpklab.semigroup import hermite_battery
from fpklab.solver import DensityField, solve

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_SOLVER = 0, 1, 2, 3

# parameter name -> (type tag, default); a default of ... marks a required parameter
CHECKS = {
    "check_tail": {"regime": ("str", ...), "t": ("floats", [2.0, 5.0, 10.0, 100.0]),
                   "m": ("float", None)},
    "check_lsi_apriori": {},
    "check_kantorovich_global": {"p": ("float", 2.0)},
    "check_kantorovich_step": {"p": ("float", 2.0), "t": ("float", 0.2),
                               "h": ("floats", [0.01, 0.05, 0.1])},
    "check_improved_integrability": {"p": ("float", 2.0), "t": ("floats", [0.1, 0.5, 1.0])},
    "check_fisher_monotone": {"t": ("floats", [0.25, 0.5, 1.0])},
    "trace_master_inequality": {"m": ("float", 2.0), "lam": ("float", None),
                                "t": ("floats", list(np.linspace(0.05, 3.0, 12))),
                                "alpha": ("float", 0.05)},
    "check_poincare_interpolation": {"p": ("float", 2.0), "eps": ("float", 0.5),
                                     "count": ("int", 20)},
    "check_gradient_theorem": {"m": ("float", math.inf), "p": ("floats", [2.0, 4.0, 8.0])},
    "check_lp_membership": {"t_range": ("floats", [10.0, 1000.0])},
    "counterexample_coordinate": {"n": ("ints", [1, 3, 5])},
    "check_log_moment_scaling": {"p": ("float", 3.0), "alpha": ("float", 1.0),
                                 "scales": ("floats", [0.25, 0.5, 1.0, 2.0])},
    "check_orlicz_moments": {"m": ("float", 2.0)},
}

TOP_KEYS = {"name", "dimension", "theta", "seed", "drift", "grid", "checks", "output"}
DRIFT_KEYS = {"key", "params"}
GRID_KEYS = {"R", "n", "kind"}
OUTPUT_KEYS = {"dir"}


@dataclass(frozen=True)
class CheckSpec:
    id: str
    params: dict


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    dimension: int
    theta: float
    drift_key: str
    drift_params: dict
    R: float
    n: int
    grid_kind: str = "uniform"
    checks: tuple = ()
    output_dir: str | None = None
    seed: int = 0
    digest: str = ""

    def scaled(self, factor: float) -> "ScenarioConfig":
        """Same scenario with ``n - 1`` multiplied by ``factor`` (kept even)."""
        if not factor > 0:
            raise ConfigError("--grid-scale must be positive")
        n = 2 * max(1, int(round((self.n - 1) * factor / 2))) + 1
        return _replace(self, n=n)


def _replace(cfg: ScenarioConfig, **kw) -> ScenarioConfig:
    d = dict(cfg.__dict__)
    d.update(kw)
    return ScenarioConfig(**d)


@dataclass(frozen=True)
class RunManifest:
    version: str
    config_digest: str
    scenario: str
    seed: int
    checks: tuple
    wall_times: dict = field(default_factory=dict, compare=False)

    def statuses(self) -> list:
        return [c["status"] for c in self.checks]

    def failed(self, strict: bool = False) -> bool:
        bad = {"fail", "inapplicable"} if strict else {"fail"}
        return any(s in bad for s in self.statuses())

    def to_dict(self) -> dict:
        return {"version": self.version, "config_digest": self.config_digest,
                "scenario": self.scenario, "seed": self.seed, "checks": list(self.checks)}


# --- configuration ---------------------------------------------------------

def _unknown(where: str, got: dict, allowed: set):
    extra = sorted(set(got) - allowed)
    if extra:
        raise ConfigError(f"unknown key(s) {', '.join(extra)} in {where}; "
                          f"allowed: {', '.join(sorted(allowed))}")


def _coerce(value, tag: str, where: str):
    try:
        if tag == "str":
            if not isinstance(value, str):
                raise TypeError
            return value
        if tag == "int":
            if isinstance(value, bool) or int(value) != value:
                raise TypeError
            return int(value)
        if tag == "float":
            if isinstance(value, bool):
                raise TypeError
            return float(value)
        if tag in ("floats", "ints"):
            if not isinstance(value, list) or not value:
                raise TypeError
            return [_coerce(v, tag[:-1], where) for v in value]
    except (TypeError, ValueError):
        raise ConfigError(f"{where}: expected {tag}, got {value!r}") from None
    raise AssertionError(tag)


def _check_spec(entry: dict, k: int) -> CheckSpec:
    where = f"checks[{k}]"
    if not isinstance(entry, dict) or "id" not in entry:
        raise ConfigError(f"{where}: each check needs an 'id'")
    cid = entry["id"]
    if cid not in CHECKS:
        raise ConfigError(f"{where}.id: unknown check {cid!r}; available: {', '.join(CHECKS)}")
    schema = CHECKS[cid]
    _unknown(where, entry, set(schema) | {"id"})
    params = {}
    for name, (tag, default) in schema.items():
        if name in entry:
            params[name] = _coerce(entry[name], tag, f"{where}.{name}")
        elif default is ...:
            raise ConfigError(f"{where}.{name}: required for {cid}")
        else:
            params[name] = default
    if cid == "check_tail" and params["regime"] not in bounds.TAIL_REGIMES:
        raise ConfigError(f"{where}.regime: expected one of {', '.join(bounds.TAIL_REGIMES)}")
    return CheckSpec(cid, params)


def parse_config_text(text: str, origin: str = "<config>") -> ScenarioConfig:
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{origin}: {exc}") from None
    _unknown("top level", raw, TOP_KEYS)
    for key in ("name", "dimension", "theta", "drift", "grid"):
        if key not in raw:
            raise ConfigError(f"missing required key {key!r}")
    name = _coerce(raw["name"], "str", "name")
    dim = _coerce(raw["dimension"], "int", "dimension")
    if dim not in (1, 2):
        raise ConfigError(f"dimension: expected 1 or 2, got {dim}")
    theta = _coerce(raw["theta"], "float", "theta")
    if not theta > 0 or not math.isfinite(theta):
        raise ConfigError(f"theta: must be a positive number, got {theta}")
    seed = _coerce(raw.get("seed", 0), "int", "seed")
    if seed < 0:
        raise ConfigError("seed: must be nonnegative")
    drift = raw["drift"]
    if not isinstance(drift, dict):
        raise ConfigError("drift: expected a table")
    _unknown("drift", drift, DRIFT_KEYS)
    key = _coerce(drift.get("key"), "str", "drift.key")
    if key not in available():
        raise ConfigError(f"drift.key: unknown drift {key!r}; available: {', '.join(available())}")
    params = drift.get("params", {})
    if not isinstance(params, dict):
        raise ConfigError("drift.params: expected a table")
    grid = raw["grid"]
    if not isinstance(grid, dict):
        raise ConfigError("grid: expected a table")
    _unknown("grid", grid, GRID_KEYS)
    kind = _coerce(grid.get("kind", "uniform"), "str", "grid.kind")
    if kind not in ("uniform", "gauss-hermite"):
        raise ConfigError("grid.kind: expected 'uniform' or 'gauss-hermite'")
    R = _coerce(grid.get("R", 8.0 / math.sqrt(theta)), "float", "grid.R")
    n = _coerce(grid.get("n", 801 if dim == 1 else 161), "int", "grid.n")
    if not R > 0:
        raise ConfigError("grid.R: must be positive")
    if n < 3:
        raise ConfigError("grid.n: need at least 3 nodes per axis")
    checks = raw.get("checks", [])
    if not isinstance(checks, list):
        raise ConfigError("checks: expected an array of tables")
    specs = tuple(_check_spec(c, k) for k, c in enumerate(checks))
    out = raw.get("output", {})
    _unknown("output", out, OUTPUT_KEYS)
    out_dir = _coerce(out["dir"], "str", "output.dir") if "dir" in out else None
    digest = hashlib.sha256(text.encode()).hexdigest()
    return ScenarioConfig(name, dim, theta, key, dict(params), R, n, kind, specs, out_dir,
                          seed, digest)


def parse_config(path) -> ScenarioConfig:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {p}")
    return parse_config_text(p.read_text(), str(p))


# --- orchestration ---------------------------------------------------------

@dataclass
class Context:
    cfg: ScenarioConfig
    quadrature: object
    drift: object
    density: DensityField


def build_context(cfg: ScenarioConfig, corrupt: float | None = None) -> Context:
    if cfg.grid_kind == "uniform":
        q = build_uniform(cfg.R, cfg.n, cfg.theta, cfg.dimension)
    else:
        q = build_gauss_hermite(cfg.n, cfg.theta, cfg.dimension)
    v = catalog_drift(cfg.drift_key, cfg.drift_params, q.grid)
    f = solve(v, q)
    if corrupt is not None:
        # re-validates the normalization invariant
        f = DensityField(q, f.values * corrupt, f.provenance)
    return Context(cfg, q, v, f)


def _master_phi(ctx: Context, alpha: float):
    x = ctx.quadrature.grid.mesh()[0]
    return np.clip(0.1 + 0.03 * np.tanh(x), alpha, math.exp(-2))


def _scaled_params(key: str, params: dict, c: float) -> dict:
    out = dict(params)
    base = out["c"] if "c" in out else inspect.signature(CATALOG[key]).parameters["c"].default
    out["c"] = [c * b for b in base] if isinstance(base, list) else c * base
    return out


def run_check(ctx: Context, spec: CheckSpec) -> BoundReport:
    f, v, P = ctx.density, ctx.drift, spec.params
    cid = spec.id
    if cid == "check_tail":
        return bounds.check_tail(f, v, P["regime"], P["t"], m=P["m"])
    if cid == "check_lsi_apriori":
        return bounds.check_lsi_apriori(f, v)
    if cid == "check_kantorovich_global":
        return bounds.check_kantorovich_global(f, v, P["p"])
    if cid == "check_kantorovich_step":
        return bounds.check_kantorovich_step(f, v, P["p"], P["t"], P["h"])
    if cid == "check_improved_integrability":
        return bounds.check_improved_integrability(f, P["t"], P["p"])
    if cid == "check_fisher_monotone":
        return bounds.check_fisher_monotone(f, P["t"])
    if cid == "trace_master_inequality":
        lam = P["lam"]
        if lam is None:
            if v.is_zero():
                lam = 0.0
            else:
                lam = orlicz_norm(v.magnitude(), f, f.quadrature, P["m"]).lam
        return bounds.trace_master_inequality(f, lam, P["m"], None, _master_phi(ctx, P["alpha"]),
                                              P["t"], alpha=P["alpha"])
    if cid == "check_poincare_interpolation":
        fns = hermite_battery(f.grid, count=P["count"], seed=ctx.cfg.seed, theta=f.theta)
        return bounds.check_poincare_interpolation(fns, P["p"], P["eps"], f.quadrature)
    if cid == "check_gradient_theorem":
        return bounds.check_gradient_theorem(f, v, P["m"], P["p"])
    if cid == "check_lp_membership":
        return bounds.check_lp_membership(f, v, t_range=tuple(P["t_range"]))
    if cid == "counterexample_coordinate":
        return bounds.check_counterexample(P["n"])
    if cid == "check_log_moment_scaling":
        cfg = ctx.cfg

        def make(c, grid):
            return catalog_drift(cfg.drift_key, _scaled_params(cfg.drift_key, cfg.drift_params, c), grid)

        return bounds.check_log_moment_scaling(make, f.quadrature, P["p"], P["alpha"],
                                               tuple(P["scales"]))
    if cid == "check_orlicz_moments":
        return bounds.check_orlicz_moments(v.magnitude(), f, P["m"])
    raise ConfigError(f"unknown check {cid!r}")


def _atomic_write(path: Path, data: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _g17(x) -> str:
    return "%.17g" % x


def density_csv(f: DensityField) -> str:
    """Header ``x[,y],f``; one row per node in row-major order, 17 significant digits."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    mesh = f.grid.mesh()
    if f.grid.dimension == 1:
        w.writerow(["x", "f"])
        for x, val in zip(mesh[0], f.values):
            w.writerow([_g17(x), _g17(val)])
    else:
        w.writerow(["x", "y", "f"])
        for x, y, val in zip(mesh[0].ravel(), mesh[1].ravel(), f.values.ravel()):
            w.writerow([_g17(x), _g17(y), _g17(val)])
    return buf.getvalue()


def samples_csv(report: BoundReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["param", "lhs", "rhs", "margin"])
    for s in report.samples:
        param = s.param if isinstance(s.param, str) else json.dumps(s.param)
        w.writerow([param, _g17(s.lhs), _g17(s.rhs), _g17(s.margin)])
    return buf.getvalue()


def run(cfg: ScenarioConfig, out_dir: Path, corrupt: float | None = None) -> RunManifest:
    """Solve once, run every configured check, write reports and the manifest."""
    np.random.seed(cfg.seed)
    ctx = build_context(cfg, corrupt)
    entries, times = [], {}
    for k, spec in enumerate(cfg.checks):
        start = time.perf_counter()
        report = run_check(ctx, spec)
        stem = f"{k:02d}_{spec.id}"
        times[stem] = time.perf_counter() - start
        _atomic_write(out_dir / f"{stem}.json", report.to_json())
        _atomic_write(out_dir / f"{stem}.csv", samples_csv(report))
        entries.append({"check": spec.id, "report": f"{stem}.json", "status": report.status,
                        "worst_margin": report.to_dict()["worst_margin"]})
        logger.info("%s: %s", stem, report.status)
    manifest = RunManifest(__version__, cfg.digest, cfg.name, cfg.seed, tuple(entries), times)
    _atomic_write(out_dir / "manifest.json",
                  json.dumps(manifest.to_dict(), indent=2, sort_keys=True) + "\n")
    _atomic_write(out_dir / "timing.json", json.dumps(
        {"timestamp": time.strftime("%Y-%m-%dT%H:%M:%S%z"), "wall_times": times},
        indent=2, sort_keys=True) + "\n")
    return manifest


def merge_manifests(paths) -> dict:
    """Combine several ``manifest.json`` files into one summary."""
    runs = []
    for p in paths:
        p = Path(p)
        if p.is_dir():
            p = p / "manifest.json"
        if not p.is_file():
            raise ConfigError(f"manifest not found: {p}")
        try:
            runs.append(json.loads(p.read_text()))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{p}: not valid JSON ({exc})") from None
    counts = {}
    for r in runs:
        for c in r.get("checks", []):
            counts[c["status"]] = counts.get(c["status"], 0) + 1
    return {"runs": runs, "status_counts": dict(sorted(counts.items()))}


# --- entry point -----------------------------------------------------------

def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fpklab", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"fpklab {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, need_config=True):
        p.add_argument("--config", required=need_config, help="scenario TOML file")
        p.add_argument("--out", help="output directory (overrides output.dir)")
        p.add_argument("--seed", type=int, help="seed for test-function batteries")
        p.add_argument("--grid-scale", type=float, default=1.0,
                       help="multiply the number of grid intervals")
        p.add_argument("--corrupt-density", type=float, default=None, help=argparse.SUPPRESS)

    common(sub.add_parser("solve", help="solve and write the density CSV"))
    p = sub.add_parser("verify", help="solve and run the configured checks")
    common(p)
    p.add_argument("--strict", action="store_true", help="treat inapplicable as failure")
    sub.add_parser("catalog", help="list drifts and checks")
    p = sub.add_parser("report", help="merge run manifests")
    p.add_argument("manifests", nargs="+", help="manifest files or run directories")
    p.add_argument("--out", help="write the merged summary here instead of stdout")
    p.add_argument("--strict", action="store_true", help="treat inapplicable as failure")
    return ap


def _load(args) -> tuple:
    cfg = parse_config(args.config)
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigError("--seed must be nonnegative")
        cfg = _replace(cfg, seed=args.seed)
    if args.grid_scale != 1.0:
        cfg = cfg.scaled(args.grid_scale)
    out = args.out or cfg.output_dir or f"fpklab-{cfg.name}"
    return cfg, Path(out)


def _catalog_text() -> str:
    lines = ["drifts:"] + [f"  {k}" for k in available()] + ["checks:"]
    for cid, schema in CHECKS.items():
        ps = ", ".join(f"{n}={'<required>' if d is ... else d}" for n, (_, d) in schema.items())
        lines.append(f"  {cid}" + (f" ({ps})" if ps else ""))
    return "\n".join(lines) + "\n"


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "catalog":
            sys.stdout.write(_catalog_text())
            return EXIT_OK
        if args.command == "report":
            merged = merge_manifests(args.manifests)
            text = json.dumps(merged, indent=2, sort_keys=True) + "\n"
            if args.out:
                _atomic_write(Path(args.out), text)
            else:
                sys.stdout.write(text)
            bad = {"fail", "inapplicable"} if args.strict else {"fail"}
            return EXIT_FAIL if any(merged["status_counts"].get(s) for s in bad) else EXIT_OK
        cfg, out = _load(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        if args.command == "solve":
            ctx = build_context(cfg, args.corrupt_density)
            _atomic_write(out / "density.csv", density_csv(ctx.density))
            return EXIT_OK
        manifest = run(cfg, out, args.corrupt_density)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FPKLabError, InvalidArgument) as exc:
        print(f"solver error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    for c in manifest.checks:
        print(f"{c['check']}: {c['status']}")
    return EXIT_FAIL if manifest.failed(args.strict) else EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
