"""Duhamel iteration for the mild formulation and Gevrey-weighted norms.

Iterates live on a uniform time grid.  Between nodes the Duhamel integral
is evaluated with the exponential trapezoidal rule: the linear kernel
exp(-(t-s)L) is integrated exactly and the transport term is interpolated
linearly in s.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import RunConfig
from .constitutive import Products, velocity_coeffs
from .evolution import Trajectory, grid_of
from .littlewood_paley import DyadicSpec, make_dyadic_spec, time_besov_norm
from .spectral import EXP_LIMIT, GevreyOverflow, Grid, SpectralField

SERIES_CUTOFF = 1.0
SERIES_TERMS = 20
DIVERGED = 1e200


class GridMismatch(ValueError):
    pass


def ep_norm(traj: Trajectory, p: float, spec: DyadicSpec | None = None) -> float:
    """sup-in-time B^{2/p}_{p,1} plus time-integrated B^{2/p+1}_{p,1} (Chemin-Lerner)."""
    if len(traj) == 0:
        raise ValueError("empty trajectory")
    spec = spec or make_dyadic_spec(traj.grid)
    s = 2.0 / p
    return (time_besov_norm(traj, s, p, 1, math.inf, spec)
            + time_besov_norm(traj, s + 1, p, 1, 1, spec))


def linear_symbol(grid: Grid, alpha: float, eps: float) -> np.ndarray:
    k = grid.kmag
    return np.where(k > 0, k**alpha, 0.0) + eps * k**2


def _phi2_series(z: np.ndarray) -> np.ndarray:
    # sum_k (-1)^k (k+1) z^k / (k+2)!, Horner form
    out = np.zeros_like(z)
    for k in range(SERIES_TERMS, -1, -1):
        out = out * (-z) + (k + 1) / math.factorial(k + 2)
    return out


def trapezoid_weights(z: np.ndarray, h: float) -> tuple[np.ndarray, np.ndarray]:
    """Weights (w0, w1) on the left/right node values for one interval.

    With z = hL:
        w0 = h (1 - e^{-z}(1+z)) / z^2
        w1 = h (1 - e^{-z}) / z - w0
    The closed form of w0 cancels badly for small z, so z < 1 uses the
    Taylor series instead.
    """
    z = np.asarray(z, dtype=float)
    small = z < SERIES_CUTOFF
    zs = np.where(z > 0, z, 1.0)
    phi1 = np.where(z > 0, -np.expm1(-zs) / zs, 1.0)
    phi2 = np.where(small, _phi2_series(np.where(small, z, 0.0)),
                    (1 - np.exp(-zs) * (1 + zs)) / zs**2)
    return h * phi2, h * (phi1 - phi2)


def _check_grid(traj: Trajectory, rho0: SpectralField):
    if traj.grid != rho0.grid:
        raise GridMismatch(f"trajectory grid {traj.grid} vs initial data grid {rho0.grid}")
    if abs(traj.times[0]) > 0:
        raise GridMismatch("time grid must start at 0")


def transport_series(u: np.ndarray, rho: Trajectory, prod: Products) -> np.ndarray:
    """Coefficients of div(u rho) at every node; u has shape (M, 2, n, n)."""
    k1, k2 = rho.grid.k_odd
    out = np.empty_like(rho.coeffs)
    for i in range(len(rho)):
        r = prod.filter(rho.coeffs[i])
        flux = prod.spectral(prod.physical(prod.filter(u[i])) * prod.physical(r))
        out[i] = 1j * (k1 * flux[0] + k2 * flux[1])
    return out


def velocity_series(rho: Trajectory, prod: Products, eps: float = 0.0) -> np.ndarray:
    return np.stack([velocity_coeffs(c, prod, eps)[0] for c in rho.coeffs])


def duhamel_integral(nl: np.ndarray, times: np.ndarray, lin: np.ndarray) -> np.ndarray:
    """I(t_i) = int_0^{t_i} exp(-(t_i - s)L) N(s) ds for node values N."""
    out = np.zeros_like(nl)
    cache: dict = {}
    for i, h in enumerate(np.diff(times)):
        key = float(h)
        if key not in cache:
            cache[key] = (np.exp(-h * lin),) + trapezoid_weights(h * lin, h)
        e, w0, w1 = cache[key]
        out[i + 1] = e * out[i] + w0 * nl[i] + w1 * nl[i + 1]
    return out


def duhamel_correction(u: np.ndarray, rho: Trajectory, cfg: RunConfig) -> Trajectory:
    """B(u, rho)(t) = int_0^t exp(-(t-s)L) div(u rho)(s) ds, bilinear in (u, rho)."""
    prod = Products(rho.grid, cfg.dealias)
    nl = transport_series(u, rho, prod)
    lin = linear_symbol(rho.grid, cfg.alpha, cfg.epsilon)
    return Trajectory(rho.grid, rho.times, duhamel_integral(nl, rho.times, lin),
                      cfg.alpha, cfg.epsilon)


def free_evolution(rho0: SpectralField, times, cfg: RunConfig) -> Trajectory:
    lin = linear_symbol(rho0.grid, cfg.alpha, cfg.epsilon)
    times = np.asarray(times, dtype=float)
    coeffs = np.exp(-times[:, None, None] * lin) * rho0.coeffs
    return Trajectory(rho0.grid, times, coeffs, cfg.alpha, cfg.epsilon)


def duhamel_apply(prev: Trajectory, rho0: SpectralField, cfg: RunConfig) -> Trajectory:
    """Next Picard iterate: exp(-tL) rho0 - B(u(prev), prev)."""
    _check_grid(prev, rho0)
    prod = Products(prev.grid, cfg.dealias)
    u = velocity_series(prev, prod, cfg.epsilon)
    corr = duhamel_correction(u, prev, cfg)
    free = free_evolution(rho0, prev.times, cfg)
    return Trajectory(prev.grid, prev.times, free.coeffs - corr.coeffs, cfg.alpha, cfg.epsilon)


def mild_times(T: float, cfg: RunConfig) -> np.ndarray:
    dt = cfg.picard.dt_mild or T / 100
    m = max(1, round(T / dt))
    return np.linspace(0.0, T, m + 1)


@dataclass
class PicardResult:
    trajectory: Trajectory
    factors: list                 # r_n
    diffs: list                   # ||rho^(n) - rho^(n-1)||_{E_p}
    norms: list                   # ||rho^(n)||_{E_p}
    converged: bool
    p: float = 2.0
    meta: dict = field(default_factory=dict)

    @property
    def iterations(self) -> int:
        return len(self.diffs)

    @property
    def contracted(self) -> bool:
        return self.converged and all(r < 1 for r in self.factors)

    @property
    def max_factor(self) -> float:
        return max(self.factors, default=0.0)

    def __iter__(self):
        # allows ``traj, factors = iterate_to_fixed_point(...)``
        yield self.trajectory
        yield self.factors


def iterate_to_fixed_point(rho0: SpectralField, T: float, p: float, tol: float,
                           max_iter: int, cfg: RunConfig,
                           spec: DyadicSpec | None = None) -> PicardResult:
    """Picard iteration from rho^(0) = 0 until the E_p increment drops below tol."""
    if not tol > 0:
        raise ValueError("tol must be positive")
    grid = rho0.grid
    spec = spec or make_dyadic_spec(grid)
    times = mild_times(T, cfg)
    cur = Trajectory(grid, times, np.zeros((len(times),) + grid.shape, complex),
                     cfg.alpha, cfg.epsilon)
    diffs, norms, factors = [], [], []
    converged = False
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(max_iter):
            nxt = duhamel_apply(cur, rho0, cfg)
            d = ep_norm(Trajectory(grid, times, nxt.coeffs - cur.coeffs), p, spec)
            nrm = ep_norm(nxt, p, spec)
            if diffs:
                factors.append(d / diffs[-1] if diffs[-1] > 0 else 0.0)
            diffs.append(d)
            norms.append(nrm)
            cur = nxt
            if not (math.isfinite(d) and math.isfinite(nrm)) or nrm > DIVERGED:
                break
            if d <= tol * nrm:
                converged = True
                break
    return PicardResult(cur, factors, diffs, norms, converged, p)


def nonlinear_bound(rho: Trajectory, p: float, cfg: RunConfig,
                    spec: DyadicSpec | None = None) -> float:
    """||B(u(rho), rho)||_{E_p}."""
    prod = Products(rho.grid, cfg.dealias)
    u = velocity_series(rho, prod, cfg.epsilon)
    return ep_norm(duhamel_correction(u, rho, cfg), p, spec)


@dataclass
class ScanRow:
    scale: float
    contracted: bool
    ep: float
    max_factor: float
    iterations: int
    free_ep: float
    bound: float


@dataclass
class ScanTable:
    rows: list
    threshold: float | None       # smallest scale that failed to contract
    cubic_slope: float | None
    cubic_intercept: float | None

    @property
    def monotone(self) -> bool:
        flags = [r.contracted for r in self.rows]
        return flags == sorted(flags, reverse=True)


def loglog_slope(x, y) -> tuple[float, float]:
    lx, ly = np.log(np.asarray(x, float)), np.log(np.asarray(y, float))
    slope, icpt = np.polyfit(lx, ly, 1)
    return float(slope), float(icpt)


def smallness_scan(profile: SpectralField, scales, T: float, p: float, cfg: RunConfig,
                   tol: float | None = None, max_iter: int | None = None) -> ScanTable:
    scales = [float(s) for s in scales]
    if any(s < 0 for s in scales) or scales != sorted(scales):
        raise ValueError("scales must be non-negative and sorted")
    tol = tol if tol is not None else cfg.picard.tol
    max_iter = max_iter if max_iter is not None else cfg.picard.max_iter
    spec = make_dyadic_spec(profile.grid)
    times = mild_times(T, cfg)
    base = free_evolution(profile, times, cfg)
    rows = []
    with np.errstate(over="ignore", invalid="ignore"):
        for s in scales:
            res = iterate_to_fixed_point(profile * s, T, p, tol, max_iter, cfg, spec)
            free = base.scaled(s)
            rows.append(ScanRow(s, res.contracted, res.norms[-1], res.max_factor,
                                res.iterations, ep_norm(free, p, spec),
                                nonlinear_bound(free, p, cfg, spec)))
    threshold = next((r.scale for r in rows if not r.contracted), None)
    fit_rows = [r for r in rows if r.scale > 0 and r.contracted and r.bound > 0]
    if len(fit_rows) < 2:
        fit_rows = [r for r in rows if r.scale > 0 and r.bound > 0 and math.isfinite(r.bound)]
    slope = icpt = None
    if len(fit_rows) >= 2:
        slope, icpt = loglog_slope([r.free_ep for r in fit_rows], [r.bound for r in fit_rows])
    return ScanTable(rows, threshold, slope, icpt)


# Gevrey ------------------------------------------------------------------

def gevrey_weighted(traj: Trajectory, a: float) -> Trajectory:
    """t -> exp(a t Lambda_1) rho(t)."""
    if not 0 < a <= 0.25:
        raise ValueError(f"Gevrey parameter must lie in (0, 1/4], got {a}")
    g = traj.grid
    worst = a * float(np.max(traj.times)) * float(g.kabs1.max())
    if worst > EXP_LIMIT:
        raise GevreyOverflow(f"Gevrey exponent {worst:.1f} exceeds {EXP_LIMIT}")
    w = np.exp(a * traj.times[:, None, None] * g.kabs1)
    return Trajectory(g, traj.times, w * traj.coeffs, traj.alpha, traj.epsilon)


def gevrey_ep_norm(traj: Trajectory, a: float, p: float,
                   spec: DyadicSpec | None = None) -> float:
    return ep_norm(gevrey_weighted(traj, a), p, spec)


RADIUS_FLOOR = 1e-14
RADIUS_OCTAVES = 3


def shell_envelope(f: SpectralField) -> tuple[np.ndarray, np.ndarray]:
    """Max |coefficient| over each shell |m1| + |m2| = const (m1, m2 integer)."""
    g = f.grid
    m = np.abs(g.modes)
    shell = m[:, None] + m[None, :]
    amp = np.abs(f.coeffs)
    env = np.zeros(shell.max() + 1)
    np.maximum.at(env, shell.ravel(), amp.ravel())
    return np.arange(len(env)), env


def analyticity_radius(f: SpectralField) -> float:
    """Exponential decay rate of the Fourier envelope in |k1| + |k2|.

    Returns nan when fewer than two shells carry energy above the floor.
    """
    shells, env = shell_envelope(f)
    top = env.max(initial=0.0)
    if top == 0:
        raise ValueError("field is zero")
    live = np.nonzero((env > RADIUS_FLOOR * top) & (shells > 0))[0]
    if len(live) < 2:
        return math.nan
    kmax = shells[live[-1]]
    sel = live[shells[live] > kmax / 2**RADIUS_OCTAVES]
    if len(sel) < 2:
        sel = live
    kk = shells[sel] * f.grid.k_min
    slope, _ = np.polyfit(-kk, np.log(env[sel]), 1)
    return max(float(slope), 0.0)


def picard_vs_stepper(res: PicardResult, stepped: Trajectory) -> float:
    """sup_t ||rho_mild - rho_stepped||_{L^2} on the shared nodes."""
    mt, st = res.trajectory.times, stepped.times
    idx = np.searchsorted(st, mt)
    idx = np.clip(idx, 0, len(st) - 1)
    if np.max(np.abs(st[idx] - mt)) > 1e-9 * max(1.0, mt[-1]):
        raise GridMismatch("stepped trajectory lacks the mild time nodes")
    diff = res.trajectory.coeffs - stepped.coeffs[idx]
    g = res.trajectory.grid
    return float(np.max(g.L * np.sqrt(np.sum(np.abs(diff) ** 2, axis=(-2, -1)))))


def initial_for(cfg: RunConfig) -> SpectralField:
    from .evolution import prepare_initial
    return prepare_initial(cfg, grid_of(cfg))
