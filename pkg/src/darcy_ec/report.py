"""Norm series and pass/fail verdicts computed from a stored trajectory.

Everything here is a pure function of the snapshots and the config, so a
verdict recomputed from files on disk matches the original byte for byte.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from . import diagnostics as diag
from .config import RunConfig, config_hash
from .littlewood_paley import make_dyadic_spec
from .mild import analyticity_radius

PASS, FAIL, FLAG = "pass", "fail", "flag"


@dataclass
class VerdictReport:
    entries: dict = field(default_factory=dict)   # name -> {status, params, tolerance}
    config_hash: str = ""
    version: str = __version__

    def add(self, name: str, status: str, params: dict | None = None, tolerance=None):
        if name in self.entries:
            raise ValueError(f"duplicate diagnostic {name!r}")
        self.entries[name] = {"status": status, "params": params or {}, "tolerance": tolerance}

    @property
    def passed(self) -> bool:
        return all(e["status"] != FAIL for e in self.entries.values())

    def to_dict(self) -> dict:
        return {"config_hash": self.config_hash, "version": self.version,
                "passed": self.passed, "diagnostics": self.entries}


def _radius(f) -> float:
    if not np.any(f.coeffs):
        return math.nan
    return analyticity_radius(f)


def norm_series(traj) -> dict:
    g = traj.grid
    spec = make_dyadic_spec(g)
    budget = diag.energy_budget(traj).values
    return {
        "t": traj.times,
        "l2": np.sqrt(diag.sobolev_sq(traj.coeffs, g, 0)),
        "lp4": diag.lp_series(traj, 4),
        "linf": diag.lp_series(traj, math.inf),
        "h_half": np.sqrt(diag.sobolev_sq(traj.coeffs, g, 0.5)),
        "h1": np.sqrt(diag.sobolev_sq(traj.coeffs, g, 1)),
        "h2": np.sqrt(diag.sobolev_sq(traj.coeffs, g, 2)),
        "besov_b1_21": diag.besov_series(traj, 1, 2, 1, spec),
        "energy_residual": np.concatenate([[math.nan], budget]),
        "radius": [_radius(traj.field(i)) for i in range(len(traj))],
    }


def _energy(cfg, traj, rep):
    b = diag.energy_budget(traj)
    worst = b.meta["max"]
    cum = diag.cumulative_energy_inequality(traj)
    rep.add("energy", PASS if worst < cfg.tolerances.energy else FAIL,
            {"max_residual": worst, "cumulative_max": float(cum.max())},
            cfg.tolerances.energy)


def _lp(cfg, traj, rep):
    bad = {}
    for p in cfg.lp_exponents:
        key = "inf" if math.isinf(p) else repr(float(p))
        bad[key] = diag.lp_monotonicity(traj, p, cfg.tolerances.lp)
    ok = not any(bad.values())
    rep.add("lp_monotone", PASS if ok else FAIL,
            {"violations": {k: len(v) for k, v in bad.items()},
             "first": {k: v[:5] for k, v in bad.items()}}, cfg.tolerances.lp)


# the L^inf envelope presumes H^s control for some s > 1; a run whose H^{3/2}
# norm grows past this factor is outside that regime and only flagged
HS_GROWTH_FLAG = 10.0


def _linf(cfg, traj, rep):
    if not np.any(traj.coeffs[0]):
        rep.add("linf_decay", FLAG, {"reason": "zero initial data"})
        return
    fit = diag.linf_decay_fit(traj)
    h15 = np.sqrt(diag.sobolev_sq(traj.coeffs, traj.grid, 1.5))
    growth = float(h15.max() / h15[0])
    status = PASS if fit.passed else FAIL
    if status == FAIL and not (growth <= HS_GROWTH_FLAG):
        status = FLAG
    rep.add("linf_decay", status,
            fit.params | {"residual": fit.residual, "h1.5_growth": growth}, 0.0)


def _mean(cfg, traj, rep):
    worst = float(np.abs(traj.coeffs[:, 0, 0]).max())
    rep.add("mean_zero", PASS if worst < cfg.tolerances.mean else FAIL,
            {"max_abs_mean": worst}, cfg.tolerances.mean)


def _exp_decay(cfg, traj, rep):
    vals = diag.sobolev_sq(traj.coeffs, traj.grid, 0.5)
    if np.any(vals <= 0) or len(traj) < 3:
        rep.add("exp_decay", FLAG, {"reason": "degenerate series"})
        return
    fit = diag.exp_decay_rate(traj.times, vals)
    l2 = diag.exp_decay_rate(traj.times, np.sqrt(diag.sobolev_sq(traj.coeffs, traj.grid, 0)))
    ok = fit.params["rate"] <= -1 and l2.params["rate"] <= -1
    rep.add("exp_decay", PASS if ok else FLAG,
            {"h_half_sq_rate": fit.params["rate"], "l2_rate": l2.params["rate"],
             "window": list(fit.window)}, -1.0)


def _hs(cfg, traj, rep, s=2.0):
    if not np.any(traj.coeffs[0]):
        rep.add("hs_growth", FLAG, {"reason": "zero initial data"})
        return
    fit = diag.hs_growth_check(traj, s)
    rep.add("hs_growth", PASS if fit.passed else FAIL, fit.params)


def _sobolev(cfg, traj, rep):
    g = traj.grid
    params = {f"max_h{s:g}": float(np.sqrt(diag.sobolev_sq(traj.coeffs, g, s)).max())
              for s in (0.5, 1.0, 2.0)}
    ok = all(math.isfinite(v) for v in params.values())
    rep.add("sobolev", PASS if ok else FAIL, params)


_CHECKS = {"energy": _energy, "lp_monotone": _lp, "linf_decay": _linf, "mean_zero": _mean,
           "exp_decay": _exp_decay, "hs_growth": _hs, "sobolev": _sobolev}


def build_verdict(cfg: RunConfig, traj) -> VerdictReport:
    rep = VerdictReport(config_hash=config_hash(cfg))
    for name in cfg.diagnostics:
        _CHECKS[name](cfg, traj, rep)
    return rep
