"""Pseudospectral time integration of the Darcy electroconvection equation.

    d_t rho + div(u rho) + Lambda^alpha rho - eps Lap rho = 0,
    u = -J_eps P(rho R rho)

The stiff linear part is integrated exactly (integrating-factor RK4 by
default, ETDRK4 on request); the transport term is explicit, in divergence
form, with dealiased products.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import InitialData, RunConfig
from .constitutive import Products, transport_coeffs, velocity_coeffs
from .spectral import Grid, SpectralField, hermitian_part, to_physical

CONTOUR_POINTS = 32


class BlowUp(RuntimeError):
    """Non-finite state encountered during integration."""

    def __init__(self, t: float, norms: dict):
        self.t = t
        self.norms = norms
        super().__init__(f"numerical blow-up at t={t:.6g} ({norms})")


@dataclass
class Trajectory:
    grid: Grid
    times: np.ndarray
    coeffs: np.ndarray              # (M, n, n)
    alpha: float = 1.0
    epsilon: float = 0.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        if self.coeffs.shape != (len(self.times),) + self.grid.shape:
            raise ValueError("snapshot array does not match time grid")
        if len(self.times) > 1 and np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")

    def __len__(self):
        return len(self.times)

    def field(self, i: int) -> SpectralField:
        return SpectralField(self.grid, self.coeffs[i])

    @property
    def final(self) -> SpectralField:
        return self.field(-1)

    def scaled(self, c: float) -> "Trajectory":
        return Trajectory(self.grid, self.times, self.coeffs * c, self.alpha, self.epsilon,
                          dict(self.meta))


def grid_of(cfg: RunConfig) -> Grid:
    return Grid(cfg.n, cfg.L)


def mollify(f: SpectralField, eps: float) -> SpectralField:
    """Gaussian mollifier J_eps: multiplier exp(-eps |k|^2)."""
    if eps < 0:
        raise ValueError("eps must be >= 0")
    if eps == 0:
        return f
    return SpectralField(f.grid, np.exp(-eps * f.grid.kmag**2) * f.coeffs)


_DEFAULT_MODES = {"single_mode": ((1, 0),), "two_mode": ((1, 0), (1, 1))}


def initial_data(ic: InitialData, grid: Grid) -> SpectralField:
    """Mean-zero, real initial field described by ``ic``."""
    if ic.kind == "file":
        from .io import read_snapshot
        snap = read_snapshot(ic.path)
        if snap.grid != grid:
            raise ValueError(f"snapshot grid {snap.grid} does not match run grid {grid}")
        c = snap.field.coeffs.copy()
    elif ic.kind == "random":
        rng = np.random.default_rng(ic.seed)
        c = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
        m = grid.modes
        band = (np.abs(m)[:, None] <= ic.kmax) & (np.abs(m)[None, :] <= ic.kmax)
        c = c * band * np.exp(-(grid.kmag / (grid.k_min * ic.width)) ** 2 / 2)
        c = hermitian_part(c)
        c[0, 0] = 0
        c *= ic.amplitude / np.abs(to_physical(c)).max()
    else:
        modes = ic.modes or _DEFAULT_MODES[ic.kind]
        c = np.zeros(grid.shape, complex)
        for m1, m2 in modes:
            c[grid.index(m1, m2)] += 0.5 * ic.amplitude
            c[grid.index(-m1, -m2)] += 0.5 * ic.amplitude
    c[0, 0] = 0
    return SpectralField(grid, c)


def _phi_coeffs(z: np.ndarray, h: float):
    """ETDRK4 coefficients by contour averaging (z = -h L, real)."""
    r = np.exp(1j * np.pi * (np.arange(1, CONTOUR_POINTS + 1) - 0.5) / CONTOUR_POINTS)
    zc = z[..., None] + r
    ez = np.exp(zc)
    q = h * np.mean((np.exp(zc / 2) - 1) / zc, axis=-1).real
    f1 = h * np.mean((-4 - zc + ez * (4 - 3 * zc + zc**2)) / zc**3, axis=-1).real
    f2 = h * np.mean((2 + zc + ez * (zc - 2)) / zc**3, axis=-1).real
    f3 = h * np.mean((-4 - 3 * zc - zc**2 + ez * (4 - zc)) / zc**3, axis=-1).real
    return q, f1, f2, f3


class Stepper:
    """Right-hand side and single steps for a fixed configuration."""

    def __init__(self, cfg: RunConfig, grid: Grid | None = None):
        self.cfg = cfg
        self.grid = grid or grid_of(cfg)
        self.products = Products(self.grid, cfg.dealias)
        k = self.grid.kmag
        self.linear = np.where(k > 0, k ** cfg.alpha, 0.0) + cfg.epsilon * k**2
        self.nonlinear_on = True
        self._cache: dict = {}

    def nonlinear(self, c: np.ndarray) -> np.ndarray:
        if not self.nonlinear_on:
            return np.zeros_like(c)
        return -transport_coeffs(c, self.products, self.cfg.epsilon)

    def rhs(self, c: np.ndarray) -> np.ndarray:
        out = self.nonlinear(c) - self.linear * c
        if not np.all(np.isfinite(out)):
            raise BlowUp(math.nan, {"rhs": "non-finite"})
        return out

    def _factors(self, h: float):
        key = (self.cfg.integrator, h)
        if key not in self._cache:
            e = np.exp(-h * self.linear)
            e2 = np.exp(-0.5 * h * self.linear)
            if self.cfg.integrator == "etdrk4":
                self._cache[key] = (e, e2) + _phi_coeffs(-h * self.linear, h)
            else:
                self._cache[key] = (e, e2)
            if len(self._cache) > 8:
                self._cache.pop(next(iter(self._cache)))
        return self._cache[key]

    def step(self, c: np.ndarray, h: float) -> np.ndarray:
        if self.cfg.integrator == "etdrk4":
            return self._etdrk4(c, h)
        return self._ifrk4(c, h)

    def _ifrk4(self, c, h):
        e, e2 = self._factors(h)
        N = self.nonlinear
        k1 = h * N(c)
        k2 = h * N(e2 * (c + 0.5 * k1))
        k3 = h * N(e2 * c + 0.5 * k2)
        k4 = h * N(e * c + e2 * k3)
        return e * c + (e * k1 + 2 * e2 * (k2 + k3) + k4) / 6

    def _etdrk4(self, c, h):
        e, e2, q, f1, f2, f3 = self._factors(h)
        N = self.nonlinear
        nc = N(c)
        a = e2 * c + q * nc
        na = N(a)
        b = e2 * c + q * na
        nb = N(b)
        d = e2 * a + q * (2 * nb - nc)
        nd = N(d)
        return e * c + f1 * nc + 2 * f2 * (na + nb) + f3 * nd

    def max_speed(self, c: np.ndarray) -> float:
        u, _ = velocity_coeffs(c, self.products, self.cfg.epsilon)
        up = to_physical(u)
        return float(np.sqrt(up[0] ** 2 + up[1] ** 2).max())

    def cfl_dt(self, c: np.ndarray) -> float:
        cfg = self.cfg
        dt = cfg.safety * self.grid.dx / max(self.max_speed(c), 1e-12)
        return min(dt, cfg.dt_max)


def rhs(rho: SpectralField, cfg: RunConfig) -> SpectralField:
    return SpectralField(rho.grid, Stepper(cfg, rho.grid).rhs(rho.coeffs))


def step(rho: SpectralField, dt: float, cfg: RunConfig) -> SpectralField:
    if not dt > 0:
        raise ValueError("dt must be positive")
    out = Stepper(cfg, rho.grid).step(rho.coeffs, dt)
    _check_finite(out, math.nan)
    return SpectralField(rho.grid, out)


def cfl_dt(rho: SpectralField, cfg: RunConfig) -> float:
    return Stepper(cfg, rho.grid).cfl_dt(rho.coeffs)


def _check_finite(c: np.ndarray, t: float):
    if not np.all(np.isfinite(c)):
        raise BlowUp(t, {"finite": False})


def prepare_initial(cfg: RunConfig, grid: Grid | None = None) -> SpectralField:
    grid = grid or grid_of(cfg)
    rho0 = mollify(initial_data(cfg.ic, grid), cfg.mollify_ic)
    c = rho0.coeffs.copy()
    if cfg.strict_nyquist:
        c[grid.nyquist] = 0
    return SpectralField(grid, c)


def run(cfg: RunConfig, rho0: SpectralField | None = None, nonlinear: bool = True) -> Trajectory:
    """Integrate to cfg.T recording a snapshot every ``snapshot_every`` steps."""
    grid = grid_of(cfg)
    stepper = Stepper(cfg, grid)
    stepper.nonlinear_on = nonlinear
    c = (rho0 if rho0 is not None else prepare_initial(cfg, grid)).coeffs.copy()
    n_snap = cfg.n_snapshots
    interval = cfg.T / n_snap
    snaps = np.empty((n_snap + 1,) + grid.shape, complex)
    snaps[0] = c
    times = interval * np.arange(n_snap + 1)
    for i in range(n_snap):
        if cfg.adaptive:
            m = max(1, math.ceil(interval / stepper.cfl_dt(c) - 1e-12))
        else:
            m = cfg.snapshot_every
        h = interval / m
        with np.errstate(over="ignore", invalid="ignore"):  # non-finite values are reported below
            for _ in range(m):
                c = stepper.step(c, h)
        if not np.all(np.isfinite(c)) or np.abs(c).max() > 1e150:
            raise BlowUp(float(times[i + 1]), {
                "l2_prev": float(grid.L * np.sqrt(np.sum(np.abs(snaps[i]) ** 2))),
                "finite": bool(np.all(np.isfinite(c))),
            })
        snaps[i + 1] = c
    return Trajectory(grid, times, snaps, cfg.alpha, cfg.epsilon)
