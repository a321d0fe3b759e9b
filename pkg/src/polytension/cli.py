"""Batch front end: YAML experiment configs in, ``report.json`` and CSV tables out.

Config schema (every section except ``target``, ``grid`` and ``map`` is optional)::

    task: verify            # report | verify | pohozaev | convergence
    seed: 0                 # base seed for variation fields and random maps
    target: {kind: sphere, radius: 1.0}
    grid: {m: 2, lengths: 6.283185307179586, resolutions: 64, mode: periodic,
           scheme: spectral, spectral_cutoff: 0.5}
    map: {family: latitude_profile, params: {theta0: 2.0, k: 6, amplitude: 0.5}}
    metric: {kind: random, seed: 1, amplitude: 0.2}     # or {kind: flat}
    params:
      energies: [E, E4, E4_hat, E4_ES]                  # report
      expected: {E4: 1.23}                              # report, optional oracle values
      checks: [conservation_S4, dual_forms]             # verify
      variations: {count: 5, amplitude: 1.0, kinds: [E4, E4_ES], metric_kinds: [E4hat]}
      R: [3.6]                                          # pohozaev
      mode: fourth
      family: poly21
      levels: [32, 48, 64]                              # convergence
      quantity: conservation_S4
      order_range: [5, 7]
    tolerances: {conservation_S4: 1.0e-8}
    output: {dir: out}

Every tolerance decision goes into the report next to the measured value.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import sys
import time
from contextlib import nullcontext
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
import yaml

from .catalog import map_from_config, random_metric, random_section, random_symmetric
from .errors import ConfigurationError, PolytensionError
from .grid import content_hash, grid_from_config, save_field
from .manifold import target_from_config
from .stress import conservation_residual, stress4, stress4_es, stress4_hat, trace_checks
from .tension import (ENERGIES, curvature_energy_density, curvature_quantities, tau4_es,
                      tau4_hat)
from .calculus import tension
from .verify import (ibp_ledger, map_variation_check, metric_variation_check, pohozaev_report,
                     tension_metric_variation_check)

log = logging.getLogger(__name__)

TASKS = ("report", "verify", "pohozaev", "convergence")
SECTIONS = ("task", "seed", "target", "grid", "map", "metric", "params", "tolerances", "output")

DEFAULT_TOLERANCES = {
    "conservation_S4": 1e-8,
    "conservation_S4ES": 1e-7,
    "dual_forms": 1e-9,
    "antisymmetry": 1e-10,
    "trace": 1e-9,
    "map_variation": 1e-6,
    "metric_variation": 1e-6,
    "tension_metric": 1e-6,
    "degeneracy": 0.0,
    "harmonic": 1e-8,
    "expected": 1e-10,
    "pohozaev": 1e-4,
    "ibp": 1e-4,
    # roundoff floor of eighth-derivative residuals at N ≤ 64 (grows like N⁸ε)
    "saturation": 1e-9,
}

SCHEME_ORDER_SPECTRAL = np.inf
EXIT_PASS, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


# ---------------------------------------------------------------------------
# config


@dataclass
class ExperimentConfig:
    task: str
    target: dict
    grid: dict
    map: dict
    metric: dict | None = None
    params: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)
    seed: int = 0

    @classmethod
    def from_dict(cls, raw):
        if not isinstance(raw, dict):
            raise ConfigurationError("config must be a mapping", path="<root>")
        unknown = sorted(set(raw) - set(SECTIONS))
        if unknown:
            raise ConfigurationError(f"unknown sections {unknown}", path="<root>")
        for key in ("target", "grid", "map"):
            if not isinstance(raw.get(key), dict):
                raise ConfigurationError("required mapping is missing", path=key)
        task = raw.get("task", "report")
        if task not in TASKS:
            raise ConfigurationError(f"unknown task {task!r}; expected one of {TASKS}",
                                     path="task")
        tolerances = dict(raw.get("tolerances") or {})
        for name, value in tolerances.items():
            if name not in DEFAULT_TOLERANCES:
                raise ConfigurationError(f"unknown tolerance {name!r}", path=f"tolerances.{name}")
            if not (isinstance(value, (int, float)) and value >= 0):
                raise ConfigurationError("tolerance must be a non-negative number",
                                         path=f"tolerances.{name}")
        seed = raw.get("seed", 0)
        if not isinstance(seed, int) or isinstance(seed, bool):
            raise ConfigurationError("seed must be an integer", path="seed")
        cfg = cls(task=task, target=dict(raw["target"]), grid=dict(raw["grid"]),
                  map=dict(raw["map"]), metric=raw.get("metric"),
                  params=dict(raw.get("params") or {}), tolerances=tolerances,
                  output=dict(raw.get("output") or {}), seed=seed)
        cfg.validate()
        return cfg

    def tol(self, name):
        return float(self.tolerances.get(name, DEFAULT_TOLERANCES[name]))

    def validate(self):
        mode = self.grid.get("mode", "periodic")
        scheme = self.grid.get("scheme")
        if scheme == "spectral" and mode != "periodic":
            raise ConfigurationError("spectral scheme needs a periodic grid", path="grid.scheme")
        if self.task == "pohozaev" and mode != "compact_support":
            raise ConfigurationError("pohozaev task needs a compact_support grid", path="grid.mode")
        if self.task == "verify":
            checks = self.params.get("checks")
            if not checks:
                raise ConfigurationError("verify task needs a non-empty checks list",
                                         path="params.checks")
            for i, name in enumerate(checks):
                if name not in CHECKS:
                    raise ConfigurationError(f"unknown check {name!r}; expected one of "
                                             f"{tuple(CHECKS)}", path=f"params.checks[{i}]")
        if self.task == "report":
            for i, name in enumerate(self.params.get("energies", ())):
                if name not in ENERGIES:
                    raise ConfigurationError(f"unknown energy {name!r}",
                                             path=f"params.energies[{i}]")
        if self.task == "pohozaev":
            R = self.params.get("R")
            if R is None:
                raise ConfigurationError("pohozaev task needs an R sweep", path="params.R")
        if self.task == "convergence":
            levels = self.params.get("levels") or []
            if len(levels) < 3:
                raise ConfigurationError(f"convergence needs at least 3 refinement levels, "
                                         f"got {len(levels)}", path="params.levels")
            quantity = self.params.get("quantity", "conservation_S4")
            if quantity not in QUANTITIES:
                raise ConfigurationError(f"unknown quantity {quantity!r}; expected one of "
                                         f"{tuple(QUANTITIES)}", path="params.quantity")
            if quantity == "pohozaev" and mode != "compact_support":
                raise ConfigurationError("pohozaev quantity needs a compact_support grid",
                                         path="grid.mode")
        if self.metric is not None:
            kind = self.metric.get("kind") if isinstance(self.metric, dict) else None
            if kind not in ("flat", "random"):
                raise ConfigurationError("metric.kind must be 'flat' or 'random'",
                                         path="metric.kind")

    def to_dict(self):
        out = {"task": self.task, "seed": self.seed, "target": self.target, "grid": self.grid,
               "map": self.map, "params": self.params, "tolerances": self.tolerances,
               "output": self.output}
        if self.metric is not None:
            out["metric"] = self.metric
        return out

    def build(self, resolution=None):
        """Target, grid, metric and map; ``resolution`` overrides the grid's node count."""
        target = _at("target", target_from_config, self.target)
        grid = _at("grid", grid_from_config, self.grid)
        if resolution is not None:
            grid = grid.refined(resolution)
        metric = None
        if self.metric and self.metric.get("kind") == "random":
            spec = {k: v for k, v in self.metric.items() if k != "kind"}
            spec.setdefault("seed", self.seed + 1000)
            metric = _at("metric", random_metric, grid, **spec)
        spec = dict(self.map)
        if spec.get("family") == "random":
            spec["params"] = {"seed": self.seed, **(spec.get("params") or {})}
        phi = map_from_config(grid, target, spec, metric=metric)
        return phi


def _at(path, fn, *args, **kwargs):
    """Call ``fn``; prefix configuration errors that carry no path with ``path``."""
    try:
        return fn(*args, **kwargs)
    except ConfigurationError as exc:
        if exc.path:
            raise
        raise ConfigurationError(str(exc), path=path) from None
    except TypeError as exc:
        raise ConfigurationError(str(exc), path=path) from None


def load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            raw = yaml.safe_load(fh)
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"YAML parse error: {exc}", path=str(path)) from None
    return ExperimentConfig.from_dict(raw)


# ---------------------------------------------------------------------------
# results


def result(check, measured, tolerance, /, **detail):
    measured = float(measured)
    return {"check": check, "measured": measured, "tolerance": float(tolerance),
            "passed": bool(np.isfinite(measured) and measured <= tolerance), "detail": detail}


def _rel(a, b):
    scale = max(float(np.abs(a).max()), float(np.abs(b).max()))
    err = float(np.abs(a - b).max())
    return (err / scale if scale > 0 else 0.0), err, scale


def check_conservation(phi, cfg, law):
    name = f"conservation_{law}"
    _, rep = conservation_residual(phi, law)
    return [result(name, rep.relative, cfg.tol(name), **rep.to_dict())]


def check_dual_forms(phi, cfg):
    a = stress4_hat(phi, "curvature").values
    b = stress4_hat(phi, "omega").values
    rel, err, scale = _rel(a, b)
    return [result("dual_forms", rel, cfg.tol("dual_forms"), max_difference=err, scale=scale)]


def check_antisymmetry(phi, cfg):
    """Pointwise ``⟨Ω₀, τ⟩ + |A|² = 0``, relative to ``max|A|²``."""
    a2 = curvature_energy_density(phi)
    lhs = phi.inner(curvature_quantities(phi)[0], tension(phi)) + a2
    err = float(np.abs(lhs).max())
    scale = float(np.abs(a2).max())
    return [result("antisymmetry", err / scale if scale > 0 else err, cfg.tol("antisymmetry"),
                   max_abs=err, scale=scale)]


def check_trace(phi, cfg):
    rep = trace_checks(phi)
    pw = rep.pointwise_residual / rep.pointwise_scale if rep.pointwise_scale > 0 else 0.0
    tol = cfg.tol("trace")
    return [result("trace", rep.integral_relative, tol, **rep.to_dict()),
            result("trace_pointwise", pw, tol, residual=rep.pointwise_residual,
                   scale=rep.pointwise_scale)]


def _variation_params(cfg):
    v = dict(cfg.params.get("variations") or {})
    return (int(v.get("count", 5)), float(v.get("amplitude", 1.0)), v.get("kmax"),
            list(v.get("kinds", ["E4", "E4_ES"])), list(v.get("metric_kinds", ["E4hat"])))


def check_map_variation(phi, cfg):
    count, amp, kmax, kinds, _ = _variation_params(cfg)
    out = []
    for kind in kinds:
        for i in range(count):
            seed = cfg.seed + i
            V = random_section(phi, seed=seed, kmax=kmax, amplitude=amp)
            rep = map_variation_check(phi, V, kind=kind)
            out.append(result(f"map_variation[{kind},seed={seed}]", rep.mismatch,
                              cfg.tol("map_variation"), **rep.to_dict()))
    return out


def check_metric_variation(phi, cfg):
    count, amp, kmax, _, kinds = _variation_params(cfg)
    out = []
    for which in kinds:
        for i in range(count):
            seed = cfg.seed + i
            omega = random_symmetric(phi.grid, seed=seed, kmax=kmax, amplitude=amp)
            rep = metric_variation_check(phi, omega, which=which)
            out.append(result(f"metric_variation[{which},seed={seed}]", rep.mismatch,
                              cfg.tol("metric_variation"), **rep.to_dict()))
    return out


def check_tension_metric(phi, cfg):
    count, amp, kmax, _, _ = _variation_params(cfg)
    out = []
    for i in range(count):
        seed = cfg.seed + i
        omega = random_symmetric(phi.grid, seed=seed, kmax=kmax, amplitude=amp)
        rep = tension_metric_variation_check(phi, omega)
        out.append(result(f"tension_metric[seed={seed}]", rep.mismatch,
                          cfg.tol("tension_metric"), **rep.to_dict()))
    return out


def check_degeneracy(phi, cfg):
    """Flat targets and m = 1: ``τ̂₄``, ``Ŝ₄``, ``S₄^ES − S₄`` and ``Ê₄`` vanish exactly."""
    if not (phi.target.is_flat or phi.m == 1):
        raise ConfigurationError("degeneracy check needs a flat target or m = 1",
                                 path="params.checks")
    tol = cfg.tol("degeneracy")
    out = [result("degeneracy[E4_hat]", abs(ENERGIES["E4_hat"](phi)), tol)]
    if phi.target.is_flat:
        out.append(result("degeneracy[tau4_hat]", np.abs(tau4_hat(phi)).max(), tol))
        out.append(result("degeneracy[S4_hat]", stress4_hat(phi).max_abs(), tol))
        out.append(result("degeneracy[S4ES-S4]",
                          np.abs(stress4_es(phi).values - stress4(phi).values).max(), tol))
    return out


def check_harmonic(phi, cfg):
    """Harmonic inputs: ``τ₄^ES`` and ``S₄^ES`` at discretization level."""
    tol = cfg.tol("harmonic")
    return [result("harmonic[tau]", np.abs(tension(phi)).max(), tol),
            result("harmonic[tau4_ES]", np.abs(tau4_es(phi)).max(), tol),
            result("harmonic[S4ES]", stress4_es(phi).max_abs(), tol)]


CHECKS = {
    "conservation_S4": lambda phi, cfg: check_conservation(phi, cfg, "S4"),
    "conservation_S4ES": lambda phi, cfg: check_conservation(phi, cfg, "S4ES"),
    "dual_forms": check_dual_forms,
    "antisymmetry": check_antisymmetry,
    "trace": check_trace,
    "map_variation": check_map_variation,
    "metric_variation": check_metric_variation,
    "tension_metric": check_tension_metric,
    "degeneracy": check_degeneracy,
    "harmonic": check_harmonic,
}


def _error_result(name, exc):
    return {"check": name, "measured": None, "tolerance": None, "passed": False,
            "detail": {"error": type(exc).__name__, "message": str(exc)}}


# ---------------------------------------------------------------------------
# tasks


def task_report(phi, cfg):
    names = list(cfg.params.get("energies") or ENERGIES)
    values = {name: float(ENERGIES[name](phi)) for name in names}
    results, tables = [], {"energies": [{"energy": k, "value": v} for k, v in values.items()]}
    for name, value in (cfg.params.get("expected") or {}).items():
        if name not in values:
            raise ConfigurationError(f"expected value for an energy not computed: {name!r}",
                                     path=f"params.expected.{name}")
        value_exp = float(value)
        err = abs(values[name] - value_exp)
        rel = err / abs(value_exp) if value_exp != 0 else err
        results.append(result(f"expected[{name}]", rel, cfg.tol("expected"), computed=values[name],
                              expected=value_exp))
    for name, value in values.items():
        results.append(result(f"finite[{name}]", 0.0 if np.isfinite(value) else np.inf, 0.0,
                              value=value))
    return results, tables, {"energies": values}


def task_verify(phi, cfg):
    results = []
    for name in cfg.params["checks"]:
        try:
            results.extend(CHECKS[name](phi, cfg))
        except PolytensionError as exc:
            log.warning("check %s failed with %s", name, exc)
            results.append(_error_result(name, exc))
    return results, {"checks": [_row(r) for r in results]}, {}


def _row(r):
    return {"check": r["check"], "measured": r["measured"], "tolerance": r["tolerance"],
            "passed": r["passed"]}


def _pohozaev_sweep(cfg):
    R = cfg.params["R"]
    return [float(r) for r in (R if isinstance(R, (list, tuple)) else [R])]


def task_pohozaev(phi, cfg):
    mode = cfg.params.get("mode", "fourth")
    family = cfg.params.get("family", "poly21")
    results, rows, ledger_rows, extra = [], [], [], {}
    for R in _pohozaev_sweep(cfg):
        rep = pohozaev_report(phi, R, mode=mode, family=family)
        d = rep.to_dict()
        extra[f"R={R!r}"] = d
        results.append(result(f"pohozaev[{mode},R={R!r}]", rep.relative, cfg.tol("pohozaev"),
                              lhs=rep.lhs, rhs=rep.rhs, correction=rep.correction,
                              residual=rep.residual, max_term=rep.max_term))
        rows.append({"R": R, "mode": mode, "lhs": rep.lhs, "rhs": rep.rhs,
                     "correction": rep.correction, "residual": rep.residual,
                     "max_term": rep.max_term, "relative": rep.relative})
        for step in ibp_ledger(phi, R, mode=mode, family=family):
            ledger_rows.append({"R": R, **{k: step[k] for k in
                                           ("step", "lhs", "rhs", "residual", "relative",
                                            "flagged")}})
            if step["flagged"]:
                continue  # reported, not judged
            results.append(result(f"ibp[{step['step']},R={R!r}]", step["relative"],
                                  cfg.tol("ibp"), lhs=step["lhs"], rhs=step["rhs"]))
    return results, {"pohozaev": rows, "ibp_ledger": ledger_rows}, {"pohozaev": extra}


def _quantity_conservation(law):
    def measure(phi, cfg):
        return conservation_residual(phi, law)[1].relative
    return measure


def _quantity_pohozaev(phi, cfg):
    R = _pohozaev_sweep(cfg)[0]
    return pohozaev_report(phi, R, mode=cfg.params.get("mode", "fourth"),
                           family=cfg.params.get("family", "poly21")).relative


QUANTITIES = {
    "conservation_S4": _quantity_conservation("S4"),
    "conservation_S4ES": _quantity_conservation("S4ES"),
    "pohozaev": _quantity_pohozaev,
}


def fit_order(levels, residuals):
    """Slope of ``−log residual`` against ``log N`` by least squares."""
    x, y = np.log(np.asarray(levels, float)), np.log(np.asarray(residuals, float))
    return float(-np.polyfit(x, y, 1)[0])


def convergence_table(cfg, build=None):
    """Per-level residuals, saturation flags and the fitted order.

    Levels whose residual is at or below the ``saturation`` tolerance are
    flagged and excluded from the fit.  With fewer than three unsaturated
    levels the order test is skipped and the finest residual is judged
    against the saturation floor instead.
    """
    build = build or cfg.build
    levels = [int(n) for n in cfg.params["levels"]]
    if len(levels) < 3:
        raise ConfigurationError("convergence needs at least 3 refinement levels",
                                 path="params.levels")
    quantity = cfg.params.get("quantity", "conservation_S4")
    measure = QUANTITIES[quantity]
    floor = cfg.tol("saturation")
    rows = []
    for n in levels:
        phi = build(n)
        grid = phi.grid
        value = float(measure(phi, cfg))
        rows.append({"N": n, "residual": value, "saturated": bool(value <= floor)})
        del phi
    scheme_order = SCHEME_ORDER_SPECTRAL if grid.scheme == "spectral" else grid.fd_order
    live = [r for r in rows if not r["saturated"]]
    summary = {"quantity": quantity, "scheme": grid.scheme,
               "scheme_order": None if np.isinf(scheme_order) else scheme_order,
               "saturation_floor": floor}
    results = []
    if len(live) >= 3 and np.isfinite(scheme_order):
        order = fit_order([r["N"] for r in live], [r["residual"] for r in live])
        summary["fitted_order"] = order
        lo, hi = cfg.params.get("order_range", [scheme_order - 1, np.inf])
        ok = bool(lo <= order <= hi)
        results.append({"check": f"convergence_order[{quantity}]", "measured": order,
                        "tolerance": [float(lo), float(hi)], "passed": ok,
                        "detail": {"levels": [r["N"] for r in live], "rule": "order in range"}})
    else:
        reason = ("spectral scheme" if not np.isfinite(scheme_order)
                  else "fewer than 3 levels above the saturation floor")
        summary["fitted_order"] = None
        summary["order_test"] = f"skipped: {reason}"
        finest = rows[-1]["residual"]
        bound = floor if len(live) < 3 else float(cfg.params.get("spectral_bound", floor))
        results.append(result(f"convergence_floor[{quantity}]", finest, bound,
                              rule=f"order test skipped ({reason}); finest residual judged "
                                   f"against the saturation floor"))
    return rows, summary, results


def task_convergence(phi, cfg):
    rows, summary, results = convergence_table(cfg)
    return results, {"convergence": rows}, {"convergence": summary}


TASK_RUNNERS = {"report": task_report, "verify": task_verify, "pohozaev": task_pohozaev,
                "convergence": task_convergence}


# ---------------------------------------------------------------------------
# run


def _canonical(obj):
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), default=_json_default)


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serialisable: {type(obj).__name__}")


def _clean(obj):
    """JSON-safe copy: non-finite floats become strings so the output stays valid JSON."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else repr(v)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    return obj


def run(cfg, out_dir=None, dump_fields=False):
    """Execute the configured task and write the report; returns the report dict."""
    started = datetime.now(timezone.utc).isoformat()
    t0 = time.perf_counter()
    out_dir = Path(out_dir or cfg.output.get("dir", "out"))
    phi = cfg.build()
    hashes = {"config": hashlib.sha256(_canonical(cfg.to_dict()).encode()).hexdigest(),
              "map_values": content_hash(phi.values)}
    if phi.metric is not None and not phi.metric.is_flat:
        hashes["metric"] = content_hash(np.asarray(phi.metric.g))
    error = None
    try:
        results, tables, extra = TASK_RUNNERS[cfg.task](phi, cfg)
    except ConfigurationError:
        raise
    except PolytensionError as exc:
        error = {"error": type(exc).__name__, "message": str(exc), "task": cfg.task}
        results, tables, extra = [_error_result(cfg.task, exc)], {}, {}
    passed = bool(results) and all(r["passed"] for r in results)
    report = {
        "config": cfg.to_dict(),
        "hashes": hashes,
        "grid": phi.grid.to_config(),
        "target": phi.target.label,
        "results": results,
        "extra": extra,
        "summary": {"passed": passed, "n_checks": len(results),
                    "n_failed": sum(not r["passed"] for r in results)},
    }
    if error:
        report["error"] = error
    report = _clean(report)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_tables(out_dir / "tables", tables)
    if dump_fields:
        fdir = out_dir / "fields"
        fdir.mkdir(exist_ok=True)
        dumped = {"map.bin": save_field(fdir / "map.bin", phi.values, phi.grid,
                                        target=phi.target.label)}
        if cfg.task == "verify":
            for law in ("S4", "S4ES"):
                if f"conservation_{law}" in cfg.params.get("checks", ()):
                    name = f"residual_{law}.bin"
                    dumped[name] = save_field(fdir / name, conservation_residual(phi, law)[0],
                                              phi.grid, law=law)
        report["fields"] = dumped
    report["timing"] = {"started": started,
                        "wall_time_s": round(time.perf_counter() - t0, 6)}
    with open(out_dir / "report.json", "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return report


def write_tables(directory, tables):
    for name, rows in tables.items():
        if not rows:
            continue
        directory.mkdir(parents=True, exist_ok=True)
        keys = list(dict.fromkeys(k for row in rows for k in row))
        with open(directory / f"{name}.csv", "w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(fh, fieldnames=keys, lineterminator="\n")
            writer.writeheader()
            for row in rows:
                writer.writerow({k: (repr(v) if isinstance(v, float) else v)
                                 for k, v in row.items()})


def _thread_limit(threads):
    if threads is None:
        return nullcontext()
    from threadpoolctl import threadpool_limits
    return threadpool_limits(limits=int(threads))


def _parser():
    p = argparse.ArgumentParser(prog="polytension",
                                description="Fourth-order tension fields and their identities.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run the task named in a config")
    c = sub.add_parser("convergence", help="refinement study of a config")
    for s in (r, c):
        s.add_argument("config", type=Path)
        s.add_argument("--out", type=Path, default=None, help="output directory")
        s.add_argument("--threads", type=int, default=None, help="BLAS/OpenMP thread limit")
        s.add_argument("--seed", type=int, default=None, help="override the config seed")
        s.add_argument("--dump-fields", action="store_true",
                       help="serialise the map and residual fields")
    return p


def main(argv=None):
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg.seed = args.seed
        if args.command == "convergence":
            cfg.task = "convergence"
            cfg.validate()
        if args.threads is not None and args.threads < 1:
            raise ConfigurationError("must be a positive integer", path="--threads")
        with _thread_limit(args.threads):
            report = run(cfg, args.out, dump_fields=args.dump_fields)
    except (ConfigurationError, OSError) as exc:
        print(f"polytension: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    s = report["summary"]
    for r in report["results"]:
        flag = "PASS" if r["passed"] else "FAIL"
        print(f"{flag} {r['check']}: measured={r['measured']} tolerance={r['tolerance']}")
    print(f"{s['n_checks'] - s['n_failed']}/{s['n_checks']} checks passed")
    return EXIT_PASS if s["passed"] else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
