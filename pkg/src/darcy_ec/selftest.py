"""Fast closed-form checks run by ``darcy-ec selftest``."""
from __future__ import annotations

import math
import tempfile
from pathlib import Path

import numpy as np

from . import constitutive as con
from . import littlewood_paley as lp
from . import mild
from .config import ConfigError, parse_config
from .evolution import run, step
from .io import read_snapshot, write_snapshot
from .spectral import (
    Grid,
    SpectralField,
    apply_fractional_laplacian,
    field_from_function,
    heat_semigroup,
    hermitian_part,
    leray_project,
    riesz_transform,
    sobolev_norm,
)

MINIMAL = '{"n":32,"alpha":1.0,"T":0.1,"dt":0.01,"ic":{"kind":"single_mode"}}'


def _random_field(grid: Grid, rng, band: int = 6) -> SpectralField:
    c = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    m = np.abs(grid.modes)
    c *= (m[:, None] <= band) & (m[None, :] <= band)
    c = hermitian_part(c)
    c[0, 0] = 0
    return SpectralField(grid, c)


def _rel(a, b):
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300))


def check_multipliers():
    g = Grid(32)
    f = field_from_function(g, lambda x, y: np.cos(x))
    ok = _rel(apply_fractional_laplacian(f, 1.0).coeffs, f.coeffs) < 1e-13
    ok &= _rel(heat_semigroup(f, 0.5, 1.0).coeffs, math.exp(-0.5) * f.coeffs) < 1e-13
    r = _random_field(g, np.random.default_rng(1))
    rr = riesz_transform(r)
    back = riesz_transform(rr.x).x.coeffs + riesz_transform(rr.y).y.coeffs
    ok &= _rel(back, -r.coeffs) < 1e-12   # R.R = -I on mean-zero fields
    return bool(ok)


def check_leray():
    g = Grid(32)
    rng = np.random.default_rng(2)
    v = con.VectorField(g, np.stack([_random_field(g, rng).coeffs, _random_field(g, rng).coeffs]))
    pv = leray_project(v)
    div = float(np.abs(pv.divergence().coeffs).max())
    idem = _rel(leray_project(pv).coeffs, pv.coeffs)
    return div < 1e-12 and idem < 1e-13


def check_single_mode():
    g = Grid(32)
    f = field_from_function(g, lambda x, y: np.cos(x))
    u = con.velocity(f)
    cfg = parse_config(MINIMAL)
    out = step(f, 1e-3, cfg)
    return float(np.abs(u.coeffs).max()) < 1e-12 and _rel(out.coeffs, math.exp(-1e-3) * f.coeffs) < 1e-13


def check_run_exact():
    cfg = parse_config(MINIMAL)
    tr = run(cfg)
    l2 = sobolev_norm(tr.field(0), 0), sobolev_norm(tr.final, 0)
    return abs(l2[1] / l2[0] - math.exp(-cfg.T)) < 1e-8 * math.exp(-cfg.T)


def check_partition():
    g = Grid(64)
    spec = lp.make_dyadic_spec(g)
    total = sum(spec.block_symbol(j) for j in spec.shells)
    ok = float(np.abs(total - (g.kmag > 0)).max()) < 1e-12
    f = _random_field(g, np.random.default_rng(3), band=20)
    rec = sum(lp.dyadic_block(f, j, spec).coeffs for j in spec.shells)
    return ok and _rel(rec, f.coeffs) < 1e-12


def check_paraproduct():
    g = Grid(32)
    spec = lp.make_dyadic_spec(g)
    rng = np.random.default_rng(4)
    for _ in range(3):
        f, h = _random_field(g, rng), _random_field(g, rng)
        for j in spec.shells:
            sp = lp.paraproduct_split(f, h, j, spec)
            scale = max(np.linalg.norm(sp.product_block.coeffs), 1e-14)
            if np.linalg.norm(sp.total.coeffs - sp.product_block.coeffs) > 1e-12 * max(scale, 1):
                return False
            if lp.vanishing_terms(f, h, j, spec) > 1e-12:
                return False
    return True


def check_config():
    cfg = parse_config('{"n":64,"alpha":1.0,"T":1.0,"ic":{"kind":"single_mode"}}')
    ok = cfg.dt == 1e-3 and cfg.dealias == "two_thirds"
    for bad in ('{"n":64,"alpha":2.5,"T":1.0,"ic":{"kind":"single_mode"}}',
                '{"n":63,"alpha":1.0,"T":1.0,"ic":{"kind":"single_mode"}}',
                '{"n":64,"alpha":1.0,"T":1.0,"ic":{"kind":"single_mode"},"nn":1}'):
        try:
            parse_config(bad)
            ok = False
        except ConfigError:
            pass
    return ok


def check_snapshot_roundtrip():
    g = Grid(16, 3.0)
    f = _random_field(g, np.random.default_rng(5))
    with tempfile.TemporaryDirectory() as d:
        p = Path(d) / "s.pecf"
        write_snapshot(p, f, 0.25, 1.0, 0.0)
        s = read_snapshot(p)
    return s.grid == g and s.t == 0.25 and np.array_equal(s.field.coeffs, f.coeffs)


def check_mild():
    cfg = parse_config(MINIMAL)
    g = Grid(32)
    res = mild.iterate_to_fixed_point(SpectralField.zeros(g), 1.0, 2.0, 1e-10, 5, cfg)
    ok = res.converged and res.iterations == 1 and not np.any(res.trajectory.coeffs)
    f = field_from_function(g, lambda x, y: np.cos(x))
    static = mild.Trajectory(g, np.array([0.0, 1.0]), np.stack([f.coeffs, f.coeffs]))
    ok &= abs(mild.ep_norm(static, 2.0) - 2 * sobolev_norm(f, 0)) < 1e-12
    return bool(ok)


def check_radius():
    g = Grid(64)
    syn = SpectralField(g, np.exp(-0.5 * g.kabs1).astype(complex))
    return abs(mild.analyticity_radius(syn) - 0.5) < 0.01


CHECKS = [
    ("multipliers", check_multipliers),
    ("leray", check_leray),
    ("single_mode_step", check_single_mode),
    ("single_mode_run", check_run_exact),
    ("dyadic_partition", check_partition),
    ("paraproduct", check_paraproduct),
    ("config_schema", check_config),
    ("snapshot_roundtrip", check_snapshot_roundtrip),
    ("mild_trivial", check_mild),
    ("radius_synthetic", check_radius),
]


def run_selftest(echo=print) -> dict:
    results = {}
    for name, fn in CHECKS:
        try:
            ok = bool(fn())
        except Exception as exc:  # a crash is a failed check, not a crashed selftest
            ok = False
            echo(f"  {name}: raised {exc!r}")
        results[name] = ok
        echo(f"{'PASS' if ok else 'FAIL'} {name}")
    return results
