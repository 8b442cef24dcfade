"""Batch driver: ``nullvol run <config>``, ``nullvol list-examples``, ``nullvol describe <id>``.

A run writes ``report.json``, ``summary.csv`` (one row per check) and
``volcurve_<id>_<seed>.csv`` files into the output directory, which the
``NULLVOL_OUTPUT_DIR`` environment variable overrides. Exit codes: 0 when
every check passes, 1 when any fails, 2 for an unusable configuration.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import math
import os
import sys
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import catalog
from .ambient import nec_check
from .errors import GeometryError
from .nullframe import frame_residuals, marginally_trapped_check, shape_operator, theta
from .nullspace import (
    NullSpaceMap,
    degeneracy_report,
    focal_report,
    random_inner_variation,
    reparametrize,
    theorem_suite,
    vol_curve_pairs,
)
from .variation import (
    close,
    first_variation_fd,
    first_variation_formula,
    random_characteristic,
    second_variation_characteristic_formula,
    second_variation_fd,
    second_variation_general_formula,
)

OUTPUT_ENV = "NULLVOL_OUTPUT_DIR"
SUITES = ("invariants", "variations", "theorem", "degeneracy")

DEFAULT_TOLERANCES = {
    "frame": 1e-10,
    "trace": 1e-8,
    "mt": 1e-6,
    "first_fd": 1e-6,
    "first_formula": 1e-9,
    "formula_agreement": 1e-6,
    "fd_agreement": 1e-3,
    "second": 1e-4,
    "kernel": 1e-8,
    "focal": 1e-4,
    "nec": 1e-8,
}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    examples: tuple
    quadrature_order: int = 24
    h_g: Optional[float] = None
    h_f: Optional[float] = None
    h_t: Optional[float] = None
    t_samples: int = 9
    seeds: int = 32
    rng_seed: int = 0
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    suites: tuple = SUITES
    output_dir: str = "nullvol-out"

    @property
    def seed_list(self):
        return list(range(self.rng_seed, self.rng_seed + self.seeds))

    def tol(self, name):
        return self.tolerances[name]

    def as_dict(self):
        d = dataclasses.asdict(self)
        d["examples"] = list(self.examples)
        d["suites"] = list(self.suites)
        d.pop("output_dir")
        return d


def _positive(name, value, kind=float, optional=False):
    if value is None and optional:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{name} must be a number")
    value = kind(value)
    if not value > 0 or not math.isfinite(value):
        raise ConfigError(f"{name} must be strictly positive and finite")
    return value


def load_config(path) -> RunConfig:
    """Parse and validate a JSON run configuration; raises :class:`ConfigError`."""
    try:
        raw = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    known = {f.name for f in dataclasses.fields(RunConfig)}
    extra = set(raw) - known
    if extra:
        raise ConfigError(f"unknown config keys: {sorted(extra)}")

    ids = raw.get("examples", "all")
    if ids == "all":
        ids = list(catalog.CATALOG_IDS)
    if not isinstance(ids, list) or not ids or not all(isinstance(i, str) for i in ids):
        raise ConfigError("examples must be 'all' or a non-empty list of ids")
    allowed = set(catalog.CATALOG_IDS) | set(catalog.CONTROL_BUILDERS)
    unknown = [i for i in ids if i not in allowed]
    if unknown:
        raise ConfigError(f"unknown example ids: {unknown}")

    tols = dict(DEFAULT_TOLERANCES)
    over = raw.get("tolerances", {})
    if not isinstance(over, dict):
        raise ConfigError("tolerances must be an object")
    for key, value in over.items():
        name = key[4:] if key.startswith("tol_") else key
        if name not in tols:
            raise ConfigError(f"unknown tolerance {key!r}")
        tols[name] = _positive(f"tolerance {key}", value)

    suites = raw.get("suites", list(SUITES))
    if not isinstance(suites, list) or any(s not in SUITES for s in suites):
        raise ConfigError(f"suites must be a list drawn from {list(SUITES)}")
    out = raw.get("output_dir", "nullvol-out")
    if not isinstance(out, str) or not out:
        raise ConfigError("output_dir must be a non-empty string")
    seeds = raw.get("seeds", 32)
    rng_seed = raw.get("rng_seed", 0)
    if isinstance(rng_seed, bool) or not isinstance(rng_seed, int) or rng_seed < 0:
        raise ConfigError("rng_seed must be a non-negative integer")
    return RunConfig(
        examples=tuple(ids),
        quadrature_order=_positive("quadrature_order", raw.get("quadrature_order", 24), int),
        h_g=_positive("h_g", raw.get("h_g"), optional=True),
        h_f=_positive("h_f", raw.get("h_f"), optional=True),
        h_t=_positive("h_t", raw.get("h_t"), optional=True),
        t_samples=_positive("t_samples", raw.get("t_samples", 9), int),
        seeds=_positive("seeds", seeds, int),
        rng_seed=rng_seed,
        tolerances=tols,
        suites=tuple(s for s in SUITES if s in suites),
        output_dir=out,
    )


# ---------------------------------------------------------------- suites


def _row(table, name, value, tol, passed, **extra):
    return {"table": table, "check": name, "value": float(value), "tol": float(tol), "pass": bool(passed), **extra}


def _apply_steps(rec, cfg: RunConfig):
    if cfg.h_g is not None and not rec.chart.flat:
        chart = dataclasses.replace(rec.chart, h_g=cfg.h_g)
        rec.chart = chart
        rec.immersion.chart = chart
    if cfg.h_f is not None:
        rec.immersion.h_f = cfg.h_f
    return rec


def invariant_rows(rec, grid, cfg: RunConfig):
    imm, frame = rec.immersion, rec.frame
    x = grid.nodes
    rows = []
    fr = frame_residuals(imm, frame, x)
    for key in sorted(fr):
        rows.append(_row("invariants", f"frame_{key}", fr[key], cfg.tol("frame"), fr[key] <= cfg.tol("frame")))
    for sign, label in (("+", "plus"), ("-", "minus")):
        A = shape_operator(imm, frame, x, sign)
        res = float(np.max(np.abs(np.trace(A, axis1=-2, axis2=-1) - theta(imm, frame, x, sign))))
        rows.append(_row("invariants", f"trace_identity_{label}", res, cfg.tol("trace"), res <= cfg.tol("trace")))
    mt = marginally_trapped_check(imm, frame, grid, cfg.tol("mt"))
    expect = rec.marginally_trapped
    rows.append(
        _row("invariants", "marginally_trapped", mt.max_theta_plus, cfg.tol("mt"), mt.passed == expect, expected=expect)
    )
    for fact in catalog.verify(rec, grid):
        rows.append(_row("invariants", f"fact_{fact.name}", fact.residual, fact.tol, fact.passed))
    nec = nec_check(rec.chart, imm.position(x[:: max(1, len(x) // 32)]), tol=cfg.tol("nec"))
    rows.append(_row("invariants", "nec_min", nec.min_value, cfg.tol("nec"), nec.passed))
    return rows


def variation_rows(rec, grid, cfg: RunConfig):
    imm, frame = rec.immersion, rec.frame
    rows = []
    for seed in cfg.seed_list:
        rng = np.random.default_rng(seed)
        spec = random_characteristic(imm.domain, rng, t_range=(-0.25, 0.25))
        first = first_variation_fd(imm, spec, frame, grid, cfg.h_t)
        first_f = first_variation_formula(imm, spec, frame, grid)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            second = second_variation_fd(imm, spec, frame, grid, cfg.h_t)
        terms = second_variation_general_formula(imm, spec, frame, grid)
        eq22 = second_variation_characteristic_formula(imm, spec, frame, grid, check=False)
        agree = close(eq22, terms.total, cfg.tol("formula_agreement"))
        fd_ok = close(eq22, second.value, cfg.tol("fd_agreement"), atol=second.noise_floor)
        vanish = max(abs(terms.trace_squared), abs(terms.acceleration))
        details = {
            "seed": seed,
            "first_fd": first.value,
            "first_fd_noise_floor": first.noise_floor,
            "first_formula": first_f,
            "second_fd": second.value,
            "second_fd_noise_floor": second.noise_floor,
            "eq21_terms": terms.as_dict(),
            "eq22": eq22,
        }
        rows.append(_row("variations", "first_variation_fd", abs(first.value), cfg.tol("first_fd"),
                         abs(first.value) <= cfg.tol("first_fd"), seed=seed, details=details))
        rows.append(_row("variations", "first_variation_formula", abs(first_f), cfg.tol("first_formula"),
                         abs(first_f) <= cfg.tol("first_formula"), seed=seed))
        rows.append(_row("variations", "eq22_vs_eq21", abs(eq22 - terms.total), cfg.tol("formula_agreement"),
                         agree, seed=seed))
        rows.append(_row("variations", "eq22_vs_fd", abs(eq22 - second.value), cfg.tol("fd_agreement"),
                         fd_ok, seed=seed))
        rows.append(_row("variations", "vanishing_terms", vanish, 1e-8, vanish <= 1e-8, seed=seed))
    return rows


def theorem_rows(rec, grid, cfg: RunConfig, curves):
    suite = theorem_suite(
        rec, cfg.seed_list, grid, first_tol=cfg.tol("first_fd"), second_tol=cfg.tol("second")
    )
    rows = []
    nmap = NullSpaceMap(rec.immersion, rec.frame)
    for r in suite.rows:
        rows.append(_row("theorem", "first_variation", abs(r.first_fd), r.first_tol,
                         abs(r.first_fd) <= r.first_tol, seed=r.seed, delta=r.delta))
        worst = max(r.second_fd, r.second_formula)
        rows.append(_row("theorem", "second_variation", worst, r.second_tol, worst <= r.second_tol,
                         seed=r.seed, second_fd=r.second_fd, eq22=r.second_formula))
        iv = random_inner_variation(rec.domain, np.random.default_rng(r.seed))
        spec = reparametrize(nmap, iv, grid, r.delta)
        ts = np.linspace(-r.delta, r.delta, cfg.t_samples)
        curves[(rec.id, r.seed)] = vol_curve_pairs(nmap, spec, ts, grid)
    return rows


def degeneracy_rows(rec, grid, cfg: RunConfig):
    nmap = NullSpaceMap(rec.immersion, rec.frame, t_window=(-2.0, 2.0))
    coarse = rec.domain.grid(4)
    focal = focal_report(nmap, coarse.nodes, nmap.t_window, n_scan=81)
    lo, hi = focal.window
    ts = np.linspace(0.9 * lo, 0.9 * hi, cfg.t_samples)
    samples = degeneracy_report(nmap, grid, ts)
    kernel = max(s.kernel_residual for s in samples)
    regular = all(s.regular for s in samples)
    rows = [
        _row("degeneracy", "rank_n_on_window", 0.0 if regular else 1.0, 0.5, regular, window=[lo, hi]),
        _row("degeneracy", "kernel_residual", kernel, cfg.tol("kernel"), kernel <= cfg.tol("kernel")),
    ]
    if rec.chart.flat:
        rows.append(_row("degeneracy", "focal_vs_prediction", focal.max_mismatch, cfg.tol("focal"),
                         focal.max_mismatch <= cfg.tol("focal")))
    return rows


def run_example(example_id, cfg: RunConfig, curves):
    rec = _apply_steps(catalog.build(example_id), cfg)
    grid = rec.grid(cfg.quadrature_order)
    rows = []
    if "invariants" in cfg.suites:
        rows += invariant_rows(rec, grid, cfg)
    if rec.marginally_trapped:
        if "variations" in cfg.suites:
            rows += variation_rows(rec, grid, cfg)
        if "theorem" in cfg.suites:
            rows += theorem_rows(rec, grid, cfg, curves)
        if "degeneracy" in cfg.suites:
            rows += degeneracy_rows(rec, grid, cfg)
    return rows


# ----------------------------------------------------------------- output


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def render_report(cfg: RunConfig, results: dict) -> str:
    report = {
        "config": cfg.as_dict(),
        "examples": {eid: results[eid] for eid in cfg.examples},
        "passed": all(r["pass"] for rows in results.values() for r in rows),
    }
    return json.dumps(_clean(report), indent=2, sort_keys=True) + "\n"


def render_summary(cfg: RunConfig, results: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["example", "table", "check", "seed", "value", "tol", "pass"])
    for eid in cfg.examples:
        for r in results[eid]:
            w.writerow([eid, r["table"], r["check"], r.get("seed", ""), repr(r["value"]), repr(r["tol"]),
                        "pass" if r["pass"] else "FAIL"])
    return buf.getvalue()


def render_curve(pairs) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "vol"])
    for t, v in pairs:
        w.writerow([repr(float(t)), repr(float(v))])
    return buf.getvalue()


def run(config_path, stderr=None) -> int:
    stderr = stderr if stderr is not None else sys.stderr
    try:
        cfg = load_config(config_path)
    except ConfigError as exc:
        print(f"config error: {exc}", file=stderr)
        return 2
    out = Path(os.environ.get(OUTPUT_ENV) or cfg.output_dir)

    results, curves, timings = {}, {}, {}
    for eid in cfg.examples:
        start = time.perf_counter()
        try:
            results[eid] = run_example(eid, cfg, curves)
        except GeometryError as exc:
            results[eid] = [_row("error", type(exc).__name__, float("nan"), 0.0, False, message=str(exc))]
        timings[eid] = time.perf_counter() - start

    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(render_report(cfg, results))
    (out / "summary.csv").write_text(render_summary(cfg, results))
    for (eid, seed), pairs in sorted(curves.items()):
        (out / f"volcurve_{eid}_{seed}.csv").write_text(render_curve(pairs))
    for eid in cfg.examples:
        print(f"{eid}: {timings[eid]:.1f} s", file=stderr)

    failing = [(eid, r) for eid in cfg.examples for r in results[eid] if not r["pass"]]
    for eid, r in failing:
        seed = f" seed={r['seed']}" if "seed" in r else ""
        print(f"FAIL {eid} {r['table']}/{r['check']}{seed}: {r['value']:.3e} > tol {r['tol']:.1e}", file=stderr)
    return 1 if failing else 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="nullvol", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run the verification suites described by a JSON config")
    p_run.add_argument("config")
    sub.add_parser("list-examples", help="print the catalog ids")
    p_desc = sub.add_parser("describe", help="print one catalog entry as JSON")
    p_desc.add_argument("id")
    args = parser.parse_args(argv)

    if args.command == "run":
        return run(args.config)
    if args.command == "list-examples":
        for eid in catalog.CATALOG_IDS:
            print(eid)
        return 0
    try:
        info = catalog.describe(args.id)
    except KeyError as exc:
        print(exc.args[0], file=sys.stderr)
        return 2
    print(json.dumps(info, indent=2, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
