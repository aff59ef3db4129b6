"""Run configuration: dataclasses, strict JSON parsing, canonical hashing."""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Any


class ConfigError(ValueError):
    """Schema violation; the message starts with the offending key path."""


@dataclass(frozen=True)
class InitialData:
    kind: str = "single_mode"          # single_mode | two_mode | random | file
    amplitude: float = 1.0
    modes: tuple = ()                  # ((m1, m2), ...); empty -> kind default
    seed: int = 0
    width: float = 3.0                 # random: Gaussian spectral envelope
    kmax: int = 8                      # random: band limit in integer modes
    path: str = ""                     # file: snapshot path


@dataclass(frozen=True)
class PicardConfig:
    p: float = 2.0
    tol: float = 1e-10
    max_iter: int = 30
    dt_mild: float = 0.0               # 0 -> T / 100


@dataclass(frozen=True)
class SweepConfig:
    param: str = "ic.amplitude"
    values: tuple = ()


@dataclass(frozen=True)
class Tolerances:
    energy: float = 1e-6
    lp: float = 1e-9
    mean: float = 1e-13


@dataclass(frozen=True)
class RunConfig:
    T: float
    ic: InitialData
    n: int = 64
    L: float = 2 * math.pi
    alpha: float = 1.0
    epsilon: float = 0.0
    mollify_ic: float = 0.0
    dt: float = 1e-3
    adaptive: bool = False
    safety: float = 0.5
    dt_max: float = 1e-2
    snapshot_every: int = 1
    dealias: str = "two_thirds"        # two_thirds | padded
    strict_nyquist: bool = False
    integrator: str = "ifrk4"          # ifrk4 | etdrk4
    diagnostics: tuple = ("energy", "lp_monotone", "linf_decay", "mean_zero")
    lp_exponents: tuple = (2.0, 4.0, math.inf)
    tolerances: Tolerances = field(default_factory=Tolerances)
    picard: PicardConfig = field(default_factory=PicardConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    workers: int = 1

    @property
    def snapshot_interval(self) -> float:
        return self.dt * self.snapshot_every

    @property
    def n_snapshots(self) -> int:
        return round(self.T / self.snapshot_interval)

    def with_overrides(self, **kw) -> "RunConfig":
        return replace(self, **kw)


KNOWN_DIAGNOSTICS = ("energy", "lp_monotone", "linf_decay", "mean_zero",
                     "exp_decay", "hs_growth", "sobolev")
_SECTIONS = {"ic": InitialData, "picard": PicardConfig, "sweep": SweepConfig,
             "tolerances": Tolerances}


def _num(path, v, *, integer=False):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        if not integer and v in ("inf", "Infinity"):
            return math.inf
        raise ConfigError(f"{path}: expected a number, got {v!r}")
    if integer:
        if int(v) != v:
            raise ConfigError(f"{path}: expected an integer, got {v!r}")
        return int(v)
    return float(v)


def _section(path: str, cls, raw: dict) -> Any:
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: expected an object")
    names = {f.name: f for f in cls.__dataclass_fields__.values()}
    kw = {}
    for key, val in raw.items():
        if key not in names:
            raise ConfigError(f"{path}.{key}: unknown key")
        default = names[key].default
        kw[key] = _coerce(f"{path}.{key}", default, val)
    return cls(**kw)


def _coerce(path, default, val):
    if isinstance(default, bool):
        if not isinstance(val, bool):
            raise ConfigError(f"{path}: expected true/false")
        return val
    if isinstance(default, int):
        return _num(path, val, integer=True)
    if isinstance(default, float):
        return _num(path, val)
    if isinstance(default, str):
        if not isinstance(val, str):
            raise ConfigError(f"{path}: expected a string")
        return val
    if isinstance(default, tuple):
        if not isinstance(val, list):
            raise ConfigError(f"{path}: expected a list")
        return tuple(val)
    return val


def parse_config(text: str) -> RunConfig:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config: invalid JSON ({exc})") from None
    return config_from_dict(raw)


def config_from_dict(raw: dict) -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config: expected a JSON object")
    fields = RunConfig.__dataclass_fields__
    kw = {}
    for key, val in raw.items():
        path = f"config.{key}"
        if key not in fields:
            raise ConfigError(f"{path}: unknown key")
        if key in _SECTIONS:
            kw[key] = _section(path, _SECTIONS[key], val)
        elif key == "T":
            kw[key] = _num(path, val)
        else:
            kw[key] = _coerce(path, fields[key].default, val)
    for req in ("T", "ic"):
        if req not in kw:
            raise ConfigError(f"config.{req}: required key missing")
    if "lp_exponents" in kw:
        kw["lp_exponents"] = tuple(_num(f"config.lp_exponents[{i}]", p)
                                   for i, p in enumerate(kw["lp_exponents"]))
    if kw["ic"].modes:
        kw["ic"] = replace(kw["ic"], modes=tuple(
            tuple(m) if isinstance(m, list) else m for m in kw["ic"].modes))
    cfg = RunConfig(**kw)
    validate(cfg)
    return cfg


def validate(cfg: RunConfig) -> None:
    def bad(path, msg):
        raise ConfigError(f"config.{path}: {msg}")

    if cfg.n % 2 or cfg.n < 8:
        bad("n", f"must be an even integer >= 8, got {cfg.n}")
    if not cfg.L > 0:
        bad("L", "must be positive")
    if not 0 < cfg.alpha <= 2:
        bad("alpha", f"must lie in (0, 2], got {cfg.alpha}")
    if cfg.epsilon < 0:
        bad("epsilon", "must be >= 0")
    if cfg.mollify_ic < 0:
        bad("mollify_ic", "must be >= 0")
    if not cfg.T > 0:
        bad("T", "must be positive")
    if not cfg.dt > 0:
        bad("dt", "must be positive")
    if cfg.snapshot_every < 1:
        bad("snapshot_every", "must be >= 1")
    k = cfg.T / cfg.snapshot_interval
    if abs(k - round(k)) > 1e-9 * max(k, 1.0) or round(k) < 1:
        bad("T", "must be a positive multiple of dt * snapshot_every")
    if not 0 < cfg.safety <= 1:
        bad("safety", "must lie in (0, 1]")
    if not cfg.dt_max > 0:
        bad("dt_max", "must be positive")
    if cfg.dealias not in ("two_thirds", "padded"):
        bad("dealias", f"unknown mode {cfg.dealias!r}")
    if cfg.integrator not in ("ifrk4", "etdrk4"):
        bad("integrator", f"unknown integrator {cfg.integrator!r}")
    for i, d in enumerate(cfg.diagnostics):
        if d not in KNOWN_DIAGNOSTICS:
            bad(f"diagnostics[{i}]", f"unknown diagnostic {d!r}")
        if d in cfg.diagnostics[:i]:
            bad(f"diagnostics[{i}]", f"duplicate diagnostic {d!r}")
    for i, p in enumerate(cfg.lp_exponents):
        if p < 2:
            bad(f"lp_exponents[{i}]", "must be >= 2")
    if cfg.workers < 1:
        bad("workers", "must be >= 1")
    ic = cfg.ic
    if ic.kind not in ("single_mode", "two_mode", "random", "file"):
        bad("ic.kind", f"unknown kind {ic.kind!r}")
    if ic.kind == "file" and not ic.path:
        bad("ic.path", "required for kind 'file'")
    for i, m in enumerate(ic.modes):
        if not (isinstance(m, (list, tuple)) and len(m) == 2
                and all(isinstance(x, int) and not isinstance(x, bool) for x in m)):
            bad(f"ic.modes[{i}]", "expected a pair of integers")
        if tuple(m) == (0, 0):
            bad(f"ic.modes[{i}]", "zero mode not allowed (data must be mean-zero)")
        if any(3 * abs(x) >= cfg.n for x in m):
            bad(f"ic.modes[{i}]", "outside the dealiased band")
    if ic.seed < 0 or ic.seed >= 2**64:
        bad("ic.seed", "must be an unsigned 64-bit integer")
    if ic.kind == "random" and 3 * ic.kmax >= cfg.n:
        bad("ic.kmax", "outside the dealiased band")
    pc = cfg.picard
    if not 1 <= pc.p < math.inf:
        bad("picard.p", "must lie in [1, inf)")
    if not pc.tol > 0:
        bad("picard.tol", "must be positive")
    if pc.max_iter < 1:
        bad("picard.max_iter", "must be >= 1")
    if pc.dt_mild < 0:
        bad("picard.dt_mild", "must be >= 0")


def to_dict(cfg: RunConfig) -> dict:
    d = asdict(cfg)
    d["ic"]["modes"] = [list(m) for m in cfg.ic.modes]
    d["lp_exponents"] = ["inf" if math.isinf(p) else float(p) for p in cfg.lp_exponents]
    d["diagnostics"] = list(cfg.diagnostics)
    d["sweep"]["values"] = list(cfg.sweep.values)
    return d


def canonical_json(cfg: RunConfig) -> str:
    return json.dumps(to_dict(cfg), sort_keys=True, separators=(",", ":"))


def config_hash(cfg: RunConfig) -> str:
    return hashlib.sha256(canonical_json(cfg).encode()).hexdigest()


def set_path(cfg: RunConfig, dotted: str, value) -> RunConfig:
    """Return a copy with ``dotted`` (e.g. ``ic.amplitude``) replaced."""
    d = to_dict(cfg)
    node = d
    parts = dotted.split(".")
    for p in parts[:-1]:
        if p not in node or not isinstance(node[p], dict):
            raise ConfigError(f"config.{dotted}: not a configurable path")
        node = node[p]
    if parts[-1] not in node:
        raise ConfigError(f"config.{dotted}: not a configurable path")
    node[parts[-1]] = value
    return config_from_dict(d)
