"""Experiment runner: ``rdslab <command> CONFIG``.

The config is TOML restricted to flat dotted keys, e.g.::

    seed = 7
    system.kind = "billiard"
    system.surface = "h2"
    table.kind = "perturbed_disk"
    table.radius = 1.0
    noise.kind = "uniform_ball"
    noise.epsilon = 0.05
    run.n_steps = 1000000
    run.replicas = 4
    output.path = "out/lyapunov.csv"

Every CSV starts with ``#`` lines carrying the config hash and seed, so each
number can be traced back to (config, seed). Wall-clock timings go to a
``.timing.csv`` sidecar to keep the main artifact byte-reproducible.

Exit codes: 0 ok, 1 config error, 2 runtime error.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import os
import re
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from rdslab import __version__
from rdslab.equidist import BinGrid, chi_square_dependent, chi_square_uniform, density_check
from rdslab.errors import ConfigError, RdsLabError, UnsupportedCombination
from rdslab.geometry import Disk, Ellipse, PerturbedDisk, SurfaceKind, build_table
from rdslab.noise import (Degenerate, RngStream, SingularVertical, UniformBall,
                          WrappedGaussian, describe)
from rdslab.projective import classify_system, invariance_defect, stationary_measure
from rdslab.rds import billiard_system, gv_system, lyapunov, random_orbit, standard_system
from rdslab.toralmaps import KickFunction

COMMANDS = ("lyapunov", "orbit", "projective", "classify", "equidist", "dichotomy")
REQUIRED = object()

# key -> (kind, default); kinds: int, float, str, floats (list of numbers)
SCHEMA = {
    "seed": ("int", 0),
    "system.kind": ("str", REQUIRED),
    "system.surface": ("str", "e2"),
    "system.K": ("float", 1.0),
    "table.kind": ("str", "disk"),
    "table.radius": ("float", 1.0 / (2.0 * math.pi)),
    "table.a": ("float", 1.5),
    "table.b": ("float", 1.0),
    "table.amplitude": ("float", 0.1),
    "table.mode": ("int", 3),
    "kick.v0": ("float", 0.0),
    "kick.cos": ("floats", []),
    "kick.sin": ("floats", []),
    "noise.kind": ("str", "uniform_ball"),
    "noise.epsilon": ("float", 0.05),
    "noise.sigma": ("float", 0.05),
    "noise.density": ("str", "uniform"),
    "run.n_steps": ("int", 1_000_000),
    "run.renorm_interval": ("int", 8),
    "run.burn_in": ("int", 1000),
    "run.replicas": ("int", 1),
    "run.workers": ("int", 0),
    "run.y0": ("floats", [0.1, 0.2]),
    "projective.n_push": ("int", 100_000),
    "projective.radius": ("float", 0.05),
    "classify.grid": ("int", 100),
    "equidist.bins": ("int", 16),
    "equidist.batches": ("int", 50),
    "dichotomy.parameter": ("str", "K"),
    "dichotomy.values": ("floats", [0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0]),
    "output.path": ("str", ""),
}
# keys that cannot change any emitted number
UNHASHED = {"run.workers", "output.path"}

SYSTEM_KINDS = ("billiard", "standard", "gv")
TABLE_KINDS = ("disk", "ellipse", "perturbed_disk")
NOISE_KINDS = ("uniform_ball", "wrapped_gaussian", "singular_vertical", "degenerate")


# -- config -------------------------------------------------------------------
def _flatten(tree, prefix=""):
    out = {}
    for k, v in tree.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flatten(v, key + "."))
        else:
            out[key] = v
    return out


def parse_text(text: str) -> dict:
    """Flat dotted-key dict from config text; syntax errors name the key on the bad line."""
    try:
        tree = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        m = re.search(r"line (\d+)", str(exc))
        lines = text.splitlines()
        key = "?"
        if m:
            idx = int(m.group(1)) - 1
        else:  # "at end of document": blame the last non-blank line
            idx = max((i for i, ln in enumerate(lines) if ln.strip()), default=-1)
        if 0 <= idx < len(lines):
            key = lines[idx].split("=", 1)[0].strip() or "?"
        raise ConfigError(f"{key}: cannot parse config ({exc})") from None
    return _flatten(tree)


def _coerce(key, kind, value):
    if kind == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{key}: expected an integer, got {value!r}")
        return value
    if kind == "float":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{key}: expected a number, got {value!r}")
        if not math.isfinite(value):
            raise ConfigError(f"{key}: must be finite, got {value!r}")
        return float(value)
    if kind == "str":
        if not isinstance(value, str):
            raise ConfigError(f"{key}: expected a string, got {value!r}")
        return value
    if not isinstance(value, list) or not all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
        raise ConfigError(f"{key}: expected a list of numbers, got {value!r}")
    return [float(v) for v in value]


def _require(key, ok, what):
    if not ok:
        raise ConfigError(f"{key}: {what}")


def validate(raw: dict, command: str) -> dict:
    """Apply defaults, reject unknown keys and check every value before any run starts."""
    for key in raw:
        if key not in SCHEMA:
            raise ConfigError(f"{key}: unknown key")
    cfg = {}
    for key, (kind, default) in SCHEMA.items():
        if key in raw:
            cfg[key] = _coerce(key, kind, raw[key])
        elif default is REQUIRED:
            raise ConfigError(f"{key}: required key is missing")
        else:
            cfg[key] = list(default) if isinstance(default, list) else default

    _require("seed", 0 <= cfg["seed"] < 2**64, "must lie in [0, 2^64)")
    _require("system.kind", cfg["system.kind"] in SYSTEM_KINDS, f"must be one of {SYSTEM_KINDS}")
    _require("table.kind", cfg["table.kind"] in TABLE_KINDS, f"must be one of {TABLE_KINDS}")
    _require("noise.kind", cfg["noise.kind"] in NOISE_KINDS, f"must be one of {NOISE_KINDS}")
    _require("noise.density", cfg["noise.density"] in ("uniform", "triangular"),
             "must be 'uniform' or 'triangular'")
    try:
        SurfaceKind.parse(cfg["system.surface"])
    except (ValueError, KeyError):
        raise ConfigError(f"system.surface: unknown surface {cfg['system.surface']!r}") from None
    for key in ("noise.epsilon", "noise.sigma"):
        _require(key, cfg[key] > 0, "must be positive")
    _require("run.n_steps", cfg["run.n_steps"] >= 0, "must be non-negative")
    _require("run.renorm_interval", 1 <= cfg["run.renorm_interval"] <= 64, "must lie in [1, 64]")
    _require("run.burn_in", cfg["run.burn_in"] >= 0, "must be non-negative")
    _require("run.replicas", cfg["run.replicas"] >= 1, "must be at least 1")
    _require("run.workers", cfg["run.workers"] >= 0, "must be non-negative (0 = automatic)")
    _require("run.y0", len(cfg["run.y0"]) == 2, "must have two coordinates")
    _require("projective.n_push", cfg["projective.n_push"] >= 1, "must be positive")
    _require("projective.radius", cfg["projective.radius"] > 0, "must be positive")
    _require("classify.grid", cfg["classify.grid"] >= 64, "must be at least 64")
    _require("equidist.bins", cfg["equidist.bins"] >= 2, "must be at least 2")
    _require("equidist.batches", cfg["equidist.batches"] >= 2, "must be at least 2")
    _require("dichotomy.parameter", cfg["dichotomy.parameter"] in ("K", "amplitude"),
             "must be 'K' or 'amplitude'")
    _require("dichotomy.values", len(cfg["dichotomy.values"]) >= 1, "must not be empty")

    if command in ("lyapunov", "dichotomy"):
        _require("run.n_steps", cfg["run.n_steps"] >= 10_000, "must be at least 10^4 for exponents")
    if command == "projective":
        _require("run.n_steps", cfg["run.n_steps"] >= 100_000, "must be at least 10^5")
    if command == "dichotomy":
        param = cfg["dichotomy.parameter"]
        if param == "K":
            _require("system.kind", cfg["system.kind"] == "standard",
                     "a K sweep needs system.kind = 'standard'")
        else:
            _require("system.kind", cfg["system.kind"] == "billiard",
                     "an amplitude sweep needs system.kind = 'billiard'")
            _require("table.kind", cfg["table.kind"] == "perturbed_disk",
                     "an amplitude sweep needs table.kind = 'perturbed_disk'")
    # build once so that table and noise errors surface as config errors
    overrides = [{}]
    if command == "dichotomy":
        name = "system.K" if cfg["dichotomy.parameter"] == "K" else "table.amplitude"
        overrides = [{name: v} for v in cfg["dichotomy.values"]]
    for extra in overrides:
        make_system({**cfg, **extra})
    return cfg


def _table_key(cfg, exc):
    kind = cfg["table.kind"]
    if kind == "ellipse":
        return "table.b" if cfg["table.b"] > cfg["table.a"] or cfg["table.b"] <= 0 else "table.a"
    if kind == "perturbed_disk" and ("amplitude" in str(exc) or "curvature" in str(exc)):
        return "table.amplitude"
    if "mode" in str(exc):
        return "table.mode"
    return "table.radius"


def make_noise(cfg):
    kind = cfg["noise.kind"]
    if kind == "uniform_ball":
        return UniformBall(cfg["noise.epsilon"])
    if kind == "wrapped_gaussian":
        return WrappedGaussian(cfg["noise.sigma"])
    if kind == "singular_vertical":
        return SingularVertical(cfg["noise.epsilon"], cfg["noise.density"])
    return Degenerate()


def make_system(cfg):
    """RandomSystem described by a validated flat config."""
    noise = make_noise(cfg)
    kind = cfg["system.kind"]
    if kind == "standard":
        return standard_system(cfg["system.K"], noise)
    if kind == "gv":
        kick = KickFunction.trigonometric(cfg["kick.v0"], cfg["kick.cos"], cfg["kick.sin"], name="gv")
        return gv_system(kick, noise)
    surface = SurfaceKind.parse(cfg["system.surface"])
    tk = cfg["table.kind"]
    if tk == "disk":
        spec = Disk(cfg["table.radius"])
    elif tk == "ellipse":
        spec = Ellipse(cfg["table.a"], cfg["table.b"])
    else:
        spec = PerturbedDisk(cfg["table.radius"], cfg["table.amplitude"], cfg["table.mode"])
    try:
        table = build_table(spec, surface)
    except RdsLabError as exc:
        key = "system.surface" if isinstance(exc, UnsupportedCombination) else _table_key(cfg, exc)
        raise ConfigError(f"{key}: {exc}") from None
    except ValueError as exc:
        raise ConfigError(f"{_table_key(cfg, exc)}: {exc}") from None
    return billiard_system(table, noise)


def config_hash(cfg: dict) -> str:
    payload = {k: v for k, v in sorted(cfg.items()) if k not in UNHASHED}
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


# -- workers -------------------------------------------------------------------
def _workers(cfg, n_tasks):
    w = cfg["run.workers"] or min(os.cpu_count() or 1, n_tasks)
    return max(1, min(w, n_tasks))


def run_pool(fn, tasks, cfg):
    """Run ``fn(cfg, *task)`` for every task; results come back sorted by task."""
    tasks = sorted(tasks)
    n = _workers(cfg, len(tasks))
    if n == 1:
        results = [fn(cfg, *t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=n) as pool:
            futures = [pool.submit(fn, cfg, *t) for t in tasks]
            results = [f.result() for f in futures]
    return [r for _, r in sorted(zip(tasks, results))]


def _lyap_task(cfg, replica, extra=()):
    cfg = {**cfg, **dict(extra)}
    system = make_system(cfg)
    t0 = time.perf_counter()
    est = lyapunov(system, cfg["run.y0"], cfg["run.n_steps"], cfg["run.renorm_interval"],
                   RngStream(cfg["seed"], replica), burn_in=cfg["run.burn_in"])
    return {"system": system.name, "noise": describe(system.noise), "lambda_plus": est.lambda_plus,
            "lambda_minus": est.lambda_minus, "std_error": est.std_error,
            "wall": time.perf_counter() - t0}


def _orbit_task(cfg, replica):
    system = make_system(cfg)
    t0 = time.perf_counter()
    pts = random_orbit(system, cfg["run.y0"], cfg["run.n_steps"], RngStream(cfg["seed"], replica))
    return {"points": pts, "wall": time.perf_counter() - t0}


def _projective_task(cfg, replica):
    system = make_system(cfg)
    t0 = time.perf_counter()
    rng = RngStream(cfg["seed"], replica)
    mu = stationary_measure(system, cfg["run.n_steps"], rng, burn_in=cfg["run.burn_in"])
    defect = invariance_defect(system, mu, cfg["projective.n_push"], rng)
    return {"samples": mu.samples, "mass": mu.mass_within(0.0, cfg["projective.radius"]),
            "defect": defect, "wall": time.perf_counter() - t0}


def _equidist_task(cfg, replica):
    system = make_system(cfg)
    t0 = time.perf_counter()
    pts = random_orbit(system, cfg["run.y0"], cfg["run.n_steps"], RngStream(cfg["seed"], replica))[1:]
    grid = BinGrid.from_points(pts, cfg["equidist.bins"], system.periods, system.lows)
    out = {"counts": grid.counts, "empty": density_check(grid), "wall": time.perf_counter() - t0}
    try:
        out["chi2"], out["p"] = chi_square_uniform(grid)
        dep = chi_square_dependent(pts, cfg["equidist.bins"], system.periods, system.lows,
                                   cfg["equidist.batches"])
        out["p_dependent"] = dep.p_value
    except RdsLabError:
        out["chi2"] = out["p"] = out["p_dependent"] = float("nan")
    return out


# -- output ----------------------------------------------------------------------
def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return str(v)


class Artifact:
    """CSV writer with a provenance header."""

    def __init__(self, path: Path, command: str, cfg: dict, digest: str):
        self.path = path
        self.command = command
        self.cfg = cfg
        self.digest = digest

    def write(self, columns, rows, footer=(), suffix=""):
        path = self.path if not suffix else self.path.with_name(self.path.stem + suffix + ".csv")
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            fh.write(f"# rdslab {__version__} {self.command}\n")
            fh.write(f"# config_hash={self.digest}\n")
            fh.write(f"# seed={self.cfg['seed']}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(columns)
            for row in rows:
                w.writerow([_fmt(v) for v in row])
            for line in footer:
                fh.write(f"# {line}\n")
        return path

    def timing(self, walls):
        return self.write(["task", "wall_seconds"], [(k, float(w)) for k, w in walls], suffix=".timing")


def _combine(rows):
    """Mean over replicas and the standard error of that mean."""
    lp = np.mean([r["lambda_plus"] for r in rows])
    lm = np.mean([r["lambda_minus"] for r in rows])
    se = math.sqrt(sum(r["std_error"] ** 2 for r in rows)) / len(rows)
    return float(lp), float(lm), float(se)


def cmd_lyapunov(cfg, art):
    reps = range(cfg["run.replicas"])
    res = run_pool(_lyap_task, [(i,) for i in reps], cfg)
    rows = [(i, r["system"], r["noise"], cfg["run.n_steps"], cfg["run.renorm_interval"],
             r["lambda_plus"], r["lambda_minus"], r["std_error"], cfg["seed"], i)
            for i, r in zip(reps, res)]
    lp, lm, se = _combine(res)
    rows.append(("mean", res[0]["system"], res[0]["noise"], cfg["run.n_steps"],
                 cfg["run.renorm_interval"], lp, lm, se, cfg["seed"], ""))
    art.write(["replica", "system", "noise", "n_steps", "renorm_interval", "lambda_plus",
               "lambda_minus", "std_error", "seed", "worker"], rows)
    art.timing([(i, r["wall"]) for i, r in zip(reps, res)])
    print(f"lambda_plus={lp:.6g} lambda_minus={lm:.6g} std_error={se:.3g}")


def cmd_orbit(cfg, art):
    reps = range(cfg["run.replicas"])
    res = run_pool(_orbit_task, [(i,) for i in reps], cfg)
    rows = ((i, k, float(p[0]), float(p[1])) for i, r in zip(reps, res)
            for k, p in enumerate(r["points"]))
    art.write(["replica", "k", "y1", "y2"], rows)
    art.timing([(i, r["wall"]) for i, r in zip(reps, res)])


def cmd_projective(cfg, art):
    reps = range(cfg["run.replicas"])
    res = run_pool(_projective_task, [(i,) for i in reps], cfg)
    pooled = np.concatenate([r["samples"] for r in res])
    counts, edges = np.histogram(pooled, bins=512, range=(0.0, math.pi))
    centers = 0.5 * (edges[:-1] + edges[1:])
    art.write(["bin_center", "mass"], zip(centers.tolist(), (counts / counts.sum()).tolist()))
    art.write(["replica", "mass_near_e", "radius", "invariance_defect"],
              [(i, r["mass"], cfg["projective.radius"], r["defect"]) for i, r in zip(reps, res)],
              suffix=".summary")
    art.timing([(i, r["wall"]) for i, r in zip(reps, res)])
    for i, r in zip(reps, res):
        print(f"replica {i}: mass_near_e={r['mass']:.6g} invariance_defect={r['defect']:.6g}")


def cmd_classify(cfg, art):
    system = make_system(cfg)
    t0 = time.perf_counter()
    verdict = classify_system(system, cfg["classify.grid"])
    wall = time.perf_counter() - t0
    line = "" if verdict.line is None else verdict.line
    rows = [(verdict.outcome.value, line, f"h{k}", w.point[0], w.point[1], w.trace,
             w.matrix.a11, w.matrix.a12, w.matrix.a21, w.matrix.a22)
            for k, w in enumerate(verdict.witnesses, 1)]
    if not rows:
        rows = [(verdict.outcome.value, line) + ("",) * 8]
    art.write(["outcome", "line", "role", "y1", "y2", "trace", "a11", "a12", "a21", "a22"], rows)
    art.timing([(0, wall)])
    print(verdict.describe())


def cmd_equidist(cfg, art):
    reps = range(cfg["run.replicas"])
    res = run_pool(_equidist_task, [(i,) for i in reps], cfg)
    system = make_system(cfg)
    grid = BinGrid(cfg["equidist.bins"], sum(r["counts"] for r in res), system.periods, system.lows)
    try:
        stat, p = chi_square_uniform(grid)
        summary = f"summary chi2={stat!r} p_value={p!r} empty_fraction={density_check(grid)!r}"
    except RdsLabError as exc:
        summary = f"summary chi2=nan p_value=nan empty_fraction={density_check(grid)!r} ({exc})"
    art.write(["i", "j", "center_y1", "center_y2", "count"], grid.csv_rows(), footer=[summary])
    art.write(["replica", "chi2", "p_value", "p_dependent", "empty_fraction"],
              [(i, r["chi2"], r["p"], r["p_dependent"], r["empty"]) for i, r in zip(reps, res)],
              suffix=".summary")
    art.timing([(i, r["wall"]) for i, r in zip(reps, res)])
    print(summary)


def cmd_dichotomy(cfg, art):
    name = "system.K" if cfg["dichotomy.parameter"] == "K" else "table.amplitude"
    values = cfg["dichotomy.values"]
    tasks = [(j, i) for j in range(len(values)) for i in range(cfg["run.replicas"])]
    res = run_pool(_sweep_task, tasks, cfg)
    rows, walls = [], []
    for j, v in enumerate(values):
        group = [r for (jj, _), r in zip(tasks, res) if jj == j]
        lp, lm, se = _combine(group)
        rows.append((cfg["dichotomy.parameter"], v, lp, lm, se, len(group), cfg["run.n_steps"]))
        walls.extend((f"{j}:{i}", r["wall"]) for i, r in enumerate(group))
        print(f"{name}={v:g}: lambda_plus={lp:.6g} std_error={se:.3g}")
    art.write(["parameter", "value", "lambda_plus", "lambda_minus", "std_error", "replicas",
               "n_steps"], rows)
    art.timing(walls)


def _sweep_task(cfg, j, replica):
    name = "system.K" if cfg["dichotomy.parameter"] == "K" else "table.amplitude"
    return _lyap_task(cfg, replica, ((name, cfg["dichotomy.values"][j]),))


HANDLERS = {"lyapunov": cmd_lyapunov, "orbit": cmd_orbit, "projective": cmd_projective,
            "classify": cmd_classify, "equidist": cmd_equidist, "dichotomy": cmd_dichotomy}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"config error: {message}", file=sys.stderr)
        raise SystemExit(1)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="rdslab", description=__doc__.split("\n")[0])
    p.add_argument("--version", action="version", version=f"rdslab {__version__}")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("config", type=Path, help="flat dotted-key config file")
    p.add_argument("-o", "--output", type=Path, help="CSV path (overrides output.path)")
    return p


def run(command: str, config_path: Path, output: Path | None = None) -> Path:
    """Validate, execute and write artifacts; returns the main CSV path."""
    try:
        text = Path(config_path).read_text()
    except OSError as exc:
        raise ConfigError(f"config: cannot read {config_path} ({exc.strerror})") from None
    cfg = validate(parse_text(text), command)
    if output is not None:
        path = Path(output)
    elif cfg["output.path"]:
        path = Path(cfg["output.path"])
    else:
        path = Path("out") / f"{command}.csv"
    art = Artifact(path, command, cfg, config_hash(cfg))
    HANDLERS[command](cfg, art)
    return path


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        path = run(args.command, args.config, args.output)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - any failure past validation is a runtime error
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
