"""Command line entry point: run, picard, sweep, analyze, selftest.

Exit codes: 0 pass, 1 diagnostic failure, 2 configuration error,
3 numerical blow-up.  Every flag may also be given through an environment
variable with the ``DARCY_EC_`` prefix (flags win).
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from . import io
from .config import ConfigError, RunConfig, canonical_json, config_from_dict, config_hash, \
    parse_config, set_path, to_dict, validate
from .evolution import BlowUp, prepare_initial, run
from .mild import (
    analyticity_radius,
    duhamel_apply,
    ep_norm,
    gevrey_ep_norm,
    iterate_to_fixed_point,
)
from .report import FAIL, FLAG, PASS, VerdictReport, build_verdict, norm_series
from .spectral import GevreyOverflow, SpectralError

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_BLOWUP = 0, 1, 2, 3
ENV_PREFIX = "DARCY_EC_"
GEVREY_A = 0.25


class CliError(Exception):
    def __init__(self, code: int, kind: str, message: str, **extra):
        super().__init__(message)
        self.code, self.kind, self.extra = code, kind, extra

    def payload(self) -> dict:
        return {"error": self.kind, "message": str(self), "exit_code": self.code} | self.extra


# configuration -------------------------------------------------------------

def _env(name: str):
    return os.environ.get(ENV_PREFIX + name)


def _truthy(v) -> bool:
    return str(v).strip().lower() in ("1", "true", "yes", "on")


def resolve_options(args) -> argparse.Namespace:
    """Merge flags with DARCY_EC_* environment variables."""
    o = argparse.Namespace()
    o.config = args.config or _env("CONFIG")
    o.out = args.out or _env("OUT")
    o.workers = args.workers if args.workers is not None else _env("WORKERS")
    o.seed = args.seed if args.seed is not None else _env("SEED")
    o.strict_dealias = args.strict_dealias or _truthy(_env("STRICT_DEALIAS") or "")
    try:
        o.workers = None if o.workers is None else int(o.workers)
        o.seed = None if o.seed is None else int(o.seed)
    except ValueError as exc:
        raise CliError(EXIT_CONFIG, "config", f"flags: {exc}") from None
    return o


def load_config(opts) -> RunConfig:
    if not opts.config:
        raise CliError(EXIT_CONFIG, "config", "flags.config: no config file given")
    try:
        text = Path(opts.config).read_text()
    except OSError as exc:
        raise CliError(EXIT_CONFIG, "config", f"flags.config: {exc}") from None
    try:
        cfg = parse_config(text)
        if opts.seed is not None:
            cfg = replace(cfg, ic=replace(cfg.ic, seed=opts.seed))
        if opts.workers is not None:
            cfg = replace(cfg, workers=opts.workers)
        if opts.strict_dealias:
            cfg = replace(cfg, dealias="padded", strict_nyquist=True)
        validate(cfg)
    except ConfigError as exc:
        raise CliError(EXIT_CONFIG, "config", str(exc)) from None
    return cfg


def _out_dir(opts) -> Path:
    if not opts.out:
        raise CliError(EXIT_CONFIG, "config", "flags.out: no output directory given")
    d = Path(opts.out)
    d.mkdir(parents=True, exist_ok=True)
    return d


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def write_manifest(out: Path, cfg: RunConfig, kind: str):
    files = sorted(p for p in out.rglob("*") if p.is_file() and p.name != "manifest.json")
    io.write_json(out / "manifest.json", {
        "kind": kind, "config_hash": config_hash(cfg), "version": __version__,
        "files": {str(p.relative_to(out)): _sha256(p) for p in files},
    })


# run -----------------------------------------------------------------------

def execute_run(cfg: RunConfig, out: Path) -> tuple[int, VerdictReport]:
    (out / "config.json").write_text(canonical_json(cfg) + "\n")
    try:
        traj = run(cfg)
    except BlowUp as exc:
        raise CliError(EXIT_BLOWUP, "blowup", str(exc), t=exc.t, norms=exc.norms,
                       config_hash=config_hash(cfg)) from None
    io.write_trajectory(out / "snapshots", traj)
    (out / "series.csv").write_text(io.series_csv(norm_series(traj)))
    rep = build_verdict(cfg, traj)
    io.write_json(out / "verdict.json", rep.to_dict())
    write_manifest(out, cfg, "run")
    return (EXIT_OK if rep.passed else EXIT_FAIL), rep


def cmd_run(opts) -> int:
    cfg = load_config(opts)
    code, rep = execute_run(cfg, _out_dir(opts))
    print(json.dumps({"passed": rep.passed, "config_hash": rep.config_hash,
                      "statuses": {k: v["status"] for k, v in rep.entries.items()}},
                     sort_keys=True))
    return code


# picard --------------------------------------------------------------------

PICARD_COLUMNS = ("iteration", "diff", "ep_norm", "factor")


def execute_picard(cfg: RunConfig, out: Path) -> tuple[int, VerdictReport, object]:
    pc = cfg.picard
    rho0 = prepare_initial(cfg)
    res = iterate_to_fixed_point(rho0, cfg.T, pc.p, pc.tol, pc.max_iter, cfg)
    rows = []
    for i, (d, nrm) in enumerate(zip(res.diffs, res.norms)):
        rows.append({"iteration": i + 1, "diff": d, "ep_norm": nrm,
                     "factor": res.factors[i - 1] if i > 0 else float("nan")})
    (out / "picard.csv").write_text(io.table_csv(rows, PICARD_COLUMNS))

    rep = VerdictReport(config_hash=config_hash(cfg))
    rep.add("contraction", PASS if res.contracted else FLAG,
            {"converged": res.converged, "iterations": res.iterations,
             "max_factor": res.max_factor, "factors": res.factors}, pc.tol)
    if res.contracted:
        again = duhamel_apply(res.trajectory, rho0, cfg)
        resid = ep_norm(replace(again, coeffs=again.coeffs - res.trajectory.coeffs), pc.p)
        bound = pc.tol * res.norms[-1]
        rep.add("mild_residual", PASS if resid <= bound else FAIL,
                {"residual": resid, "bound": bound}, pc.tol)
        io.write_trajectory(out / "mild", res.trajectory)
        try:
            gev = gevrey_ep_norm(res.trajectory, GEVREY_A, pc.p)
            rep.add("gevrey", PASS if np.isfinite(gev) else FAIL, {"a": GEVREY_A, "ep_norm": gev})
        except GevreyOverflow as exc:
            rep.add("gevrey", FLAG, {"a": GEVREY_A, "overflow": str(exc)})
        radii = [analyticity_radius(res.trajectory.field(i)) if np.any(res.trajectory.coeffs[i])
                 else float("nan") for i in range(len(res.trajectory))]
        rows = [{"t": t, "radius": r} for t, r in zip(res.trajectory.times, radii)]
        (out / "radius.csv").write_text(io.table_csv(rows, ("t", "radius")))
    io.write_json(out / "picard.json", rep.to_dict())
    return (EXIT_OK if rep.passed else EXIT_FAIL), rep, res


def cmd_picard(opts) -> int:
    cfg = load_config(opts)
    out = _out_dir(opts)
    (out / "config.json").write_text(canonical_json(cfg) + "\n")
    code, rep, res = execute_picard(cfg, out)
    write_manifest(out, cfg, "picard")
    print(json.dumps({"contracted": res.contracted, "iterations": res.iterations,
                      "max_factor": res.max_factor, "config_hash": rep.config_hash},
                     sort_keys=True))
    return code


# sweep ---------------------------------------------------------------------

THRESHOLD_COLUMNS = ("index", "value", "exit_code", "status", "contracted", "max_factor",
                     "iterations", "ep_norm")


def sweep_point(task: tuple) -> dict:
    """Run one sweep point in its own directory; picklable for worker processes."""
    index, value, raw, out = task
    cfg = config_from_dict(raw)
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    row = {"index": index, "value": value}
    try:
        code, rep = execute_run(cfg, out)
        row["status"] = "pass" if rep.passed else "fail"
    except CliError as exc:
        io.write_json(out / "failure.json", exc.payload())
        code = exc.code
        row["status"] = exc.kind
    _, _, res = execute_picard(cfg, out)
    write_manifest(out, cfg, "sweep_point")
    row.update(exit_code=code, contracted=res.contracted, max_factor=res.max_factor,
               iterations=res.iterations, ep_norm=res.norms[-1])
    return row


def cmd_sweep(opts) -> int:
    cfg = load_config(opts)
    out = _out_dir(opts)
    sw = cfg.sweep
    if not sw.values:
        raise CliError(EXIT_CONFIG, "config", "config.sweep.values: empty sweep")
    tasks = []
    for i, v in enumerate(sw.values):
        try:
            point = set_path(cfg, sw.param, v)
        except ConfigError as exc:
            raise CliError(EXIT_CONFIG, "config", str(exc)) from None
        point = replace(point, workers=1, sweep=replace(point.sweep, values=()))
        tasks.append((i, v, to_dict(point), str(out / f"point_{i:03d}")))
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            rows = list(pool.map(sweep_point, tasks))
    else:
        rows = [sweep_point(t) for t in tasks]
    (out / "config.json").write_text(canonical_json(cfg) + "\n")
    (out / "threshold_table.csv").write_text(io.table_csv(rows, THRESHOLD_COLUMNS))
    failed = next((r["value"] for r in rows if not r["contracted"]), None)
    io.write_json(out / "threshold.json", {
        "param": sw.param, "first_non_contracted": failed,
        "config_hash": config_hash(cfg), "version": __version__,
    })
    write_manifest(out, cfg, "sweep")
    print(json.dumps({"points": len(rows), "first_non_contracted": failed}, sort_keys=True))
    return EXIT_OK


# analyze -------------------------------------------------------------------

def analyze_dir(path: Path) -> dict:
    try:
        cfg = parse_config((path / "config.json").read_text())
    except (OSError, ConfigError) as exc:
        raise CliError(EXIT_CONFIG, "config", f"{path}: {exc}") from None
    try:
        traj = io.read_trajectory(path / "snapshots")
    except (io.FormatError, SpectralError, ValueError) as exc:
        raise CliError(EXIT_CONFIG, "format", f"{path}: {exc}") from None
    rep = build_verdict(cfg, traj)
    verdict = io.dumps(rep.to_dict())
    series = io.series_csv(norm_series(traj))
    stored_v = (path / "verdict.json").read_text() if (path / "verdict.json").exists() else None
    stored_s = (path / "series.csv").read_text() if (path / "series.csv").exists() else None
    return {"path": str(path), "passed": rep.passed,
            "verdict_match": verdict == stored_v, "series_match": series == stored_s}


def cmd_analyze(opts) -> int:
    if not opts.paths:
        raise CliError(EXIT_CONFIG, "config", "analyze: no run directories given")
    results = [analyze_dir(Path(p)) for p in opts.paths]
    print(json.dumps(results, sort_keys=True))
    ok = all(r["passed"] and r["verdict_match"] and r["series_match"] for r in results)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_selftest(opts=None) -> int:
    from .selftest import run_selftest
    results = run_selftest()
    return EXIT_OK if all(results.values()) else EXIT_FAIL


# entry ---------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="darcy-ec", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON run configuration")
        p.add_argument("--out", help="output directory")
        p.add_argument("--workers", type=int, default=None, help="parallel sweep workers")
        p.add_argument("--seed", type=int, default=None, help="random initial-data seed (u64)")
        p.add_argument("--strict-dealias", action="store_true",
                       help="padded products and zeroed Nyquist modes")
        return p

    common(sub.add_parser("run", help="time-step one configuration"))
    common(sub.add_parser("picard", help="Picard iteration of the mild formulation"))
    common(sub.add_parser("sweep", help="grid of runs over config.sweep"))
    an = sub.add_parser("analyze", help="recompute verdicts from stored snapshots")
    an.add_argument("paths", nargs="*")
    sub.add_parser("selftest", help="closed-form sanity checks")
    return ap


_COMMANDS = {"run": cmd_run, "picard": cmd_picard, "sweep": cmd_sweep}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out = None
    try:
        if args.command == "selftest":
            return cmd_selftest()
        if args.command == "analyze":
            return cmd_analyze(args)
        opts = resolve_options(args)
        out = opts.out
        return _COMMANDS[args.command](opts)
    except CliError as exc:
        payload = exc.payload()
        print(json.dumps(payload, sort_keys=True, default=str), file=sys.stderr)
        if out and exc.code != EXIT_CONFIG:
            Path(out).mkdir(parents=True, exist_ok=True)
            io.write_json(Path(out) / "failure.json", payload)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
