"""Numerical checks of the energy law, maximum principles and decay laws.

Every verdict compares against constants fitted from the data; no
implicit constant from the analysis is assumed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss

from .littlewood_paley import DyadicSpec, block_lp_norms
from .spectral import SpectralField, lp_norm, to_physical

TRANSIENT_FRACTION = 0.05


@dataclass
class DiagnosticSeries:
    name: str
    times: np.ndarray
    values: np.ndarray
    meta: dict = field(default_factory=dict)


@dataclass
class FitResult:
    model: str                    # exponential | reciprocal-linear | power | ...
    params: dict
    residual: float
    window: tuple
    passed: bool = True


# norm series -------------------------------------------------------------

def _weights(grid, s):
    k = grid.kmag
    return np.where(k > 0, k ** (2 * s), 0.0) if s != 0 else np.ones_like(k)


def sobolev_sq(coeffs: np.ndarray, grid, s: float) -> np.ndarray:
    """||Lambda^s f||_{L^2}^2 for each snapshot (Parseval)."""
    return grid.L**2 * np.sum(_weights(grid, s) * np.abs(coeffs) ** 2, axis=(-2, -1))


def sobolev_series(traj, s: float) -> DiagnosticSeries:
    if s < 0:
        raise ValueError("s must be >= 0")
    vals = np.sqrt(sobolev_sq(traj.coeffs, traj.grid, s))
    return DiagnosticSeries(f"sobolev_{s:g}", traj.times, vals, {"s": s})


def lp_series(traj, p: float) -> np.ndarray:
    vals = to_physical(traj.coeffs)
    area = traj.grid.cell_area
    return np.array([lp_norm(v, p, area) for v in vals])


def besov_series(traj, s: float, p: float, q: float, spec: DyadicSpec) -> np.ndarray:
    norms = block_lp_norms(traj.coeffs, spec, p)
    w = 2.0 ** (s * np.array(list(spec.shells), dtype=float))
    wn = w * norms
    if math.isinf(q):
        return wn.max(axis=-1)
    return np.sum(wn**q, axis=-1) ** (1 / q)


# energy ------------------------------------------------------------------

def _interval_integrals(y: np.ndarray, h: float) -> np.ndarray:
    """Integral of y over each interval; cubic-interpolation stencils (O(h^5))."""
    m = len(y) - 1
    if m < 3:
        return 0.5 * h * (y[:-1] + y[1:])
    out = np.empty(m)
    out[0] = h * (9 * y[0] + 19 * y[1] - 5 * y[2] + y[3]) / 24
    out[-1] = h * (y[-4] - 5 * y[-3] + 19 * y[-2] + 9 * y[-1]) / 24
    out[1:-1] = h * (-y[:-3] + 13 * y[1:-2] + 13 * y[2:-1] - y[3:]) / 24
    return out


def energy_budget(traj) -> DiagnosticSeries:
    """Per-interval residual of 1/2 dE/dt + ||Lambda^{a/2} rho||^2 + eps ||grad rho||^2 = 0.

    values[i] is the residual on [t_i, t_{i+1}], relative to the mean of
    ||rho||^2 + ||Lambda^{1/2} rho||^2 over the interval endpoints.
    """
    g = traj.grid
    t = traj.times
    if len(t) < 2:
        return DiagnosticSeries("energy_residual", t[:0], np.zeros(0), {"max": 0.0})
    h = np.diff(t)
    if not np.allclose(h, h[0], rtol=1e-9, atol=0):
        raise ValueError("energy budget needs a uniform time grid")
    energy = 0.5 * sobolev_sq(traj.coeffs, g, 0)
    dissip = sobolev_sq(traj.coeffs, g, traj.alpha / 2)
    if traj.epsilon:
        dissip = dissip + traj.epsilon * sobolev_sq(traj.coeffs, g, 1)
    integral = _interval_integrals(dissip, h[0])
    resid = (np.diff(energy) + integral) / h[0]
    scale = 2 * energy + sobolev_sq(traj.coeffs, g, 0.5)
    scale = 0.5 * (scale[:-1] + scale[1:])
    rel = np.abs(resid) / np.where(scale > 0, scale, 1.0)
    return DiagnosticSeries("energy_residual", t[1:], rel,
                            {"max": float(rel.max(initial=0.0)), "epsilon": traj.epsilon})


def cumulative_energy_inequality(traj) -> np.ndarray:
    """1/2||rho(t)||^2 + int_0^t ||Lambda^{a/2} rho||^2 - 1/2||rho_0||^2 (should be <= 0)."""
    g = traj.grid
    e = 0.5 * sobolev_sq(traj.coeffs, g, 0)
    if len(traj.times) < 2:
        return e - e[0]
    h = np.diff(traj.times)
    d = sobolev_sq(traj.coeffs, g, traj.alpha / 2)
    if traj.epsilon:
        d = d + traj.epsilon * sobolev_sq(traj.coeffs, g, 1)
    if np.allclose(h, h[0], rtol=1e-9, atol=0):
        pieces = _interval_integrals(d, h[0])
    else:
        pieces = 0.5 * h * (d[1:] + d[:-1])
    return e + np.concatenate([[0.0], np.cumsum(pieces)]) - e[0]


# maximum principles ------------------------------------------------------

def lp_monotonicity(traj, p: float, rtol: float = 1e-9) -> list[int]:
    """Indices where ||rho(t_i)||_p exceeds ||rho(t_{i-1})||_p by more than rtol."""
    if p < 2:
        raise ValueError("p must be >= 2")
    s = lp_series(traj, p)
    bad = np.nonzero(s[1:] > s[:-1] * (1 + rtol))[0] + 1
    return [int(i) for i in bad]


def linf_decay_fit(traj, window: tuple | None = None) -> FitResult:
    """Largest c with 1/||rho(t)||_inf - 1/||rho_0||_inf >= c t on the window."""
    s = lp_series(traj, math.inf)
    if s[0] <= 0:
        raise ValueError("initial sup norm must be positive")
    t = traj.times
    lo, hi = window or (t[0], t[-1])
    sel = (t > t[0]) & (t >= lo) & (t <= hi)
    y = 1 / s[sel] - 1 / s[0]
    tt = t[sel] - t[0]
    if len(tt) == 0:
        return FitResult("reciprocal-linear", {"c": math.nan}, math.nan, (lo, hi), False)
    c = float(np.min(y / tt))
    c_ls = float(np.dot(tt, y) / np.dot(tt, tt))
    resid = float(np.sqrt(np.mean((y - c_ls * tt) ** 2)))
    return FitResult("reciprocal-linear", {"c": c, "c_lsq": c_ls}, resid,
                     (float(lo), float(hi)), bool(c > 0))


def default_window(times) -> tuple:
    t0, t1 = float(times[0]), float(times[-1])
    return (t0 + TRANSIENT_FRACTION * (t1 - t0), t1)


def exp_decay_rate(times, values, window: tuple | None = None) -> FitResult:
    """Least-squares slope of log(values) against t."""
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    lo, hi = window or default_window(times)
    sel = (times >= lo - 1e-12) & (times <= hi + 1e-12)
    v = values[sel]
    if np.any(v <= 0):
        raise ValueError("nonpositive values in fit window")
    if sel.sum() < 2:
        raise ValueError("fit window holds fewer than two samples")
    slope, icpt = np.polyfit(times[sel], np.log(v), 1)
    resid = float(np.sqrt(np.mean((np.log(v) - (slope * times[sel] + icpt)) ** 2)))
    return FitResult("exponential", {"rate": float(slope), "intercept": float(icpt)}, resid,
                     (float(lo), float(hi)))


def hs_growth_check(traj, s: float, alpha: float | None = None) -> FitResult:
    """Fit C1 in ||Lambda^s rho(t)|| <= ||Lambda^s rho_0|| e^{C1 t}; integrate dissipation."""
    alpha = traj.alpha if alpha is None else alpha
    if s <= 0:
        raise ValueError("s must be positive")
    t = traj.times - traj.times[0]
    hs = np.sqrt(sobolev_sq(traj.coeffs, traj.grid, s))
    if hs[0] <= 0:
        raise ValueError("initial H^s norm vanishes")
    pos = t > 0
    with np.errstate(divide="ignore"):
        growth = np.log(hs[pos] / hs[0]) / t[pos]
    c1 = float(growth.max()) if growth.size else -math.inf
    dis = sobolev_sq(traj.coeffs, traj.grid, s + alpha / 2)
    integral = float(np.trapezoid(dis, traj.times))
    ok = bool(np.isfinite(c1) and np.isfinite(integral) and np.all(np.isfinite(hs)))
    return FitResult("exponential-growth", {"C1": c1, "dissipation_integral": integral,
                                            "s": s, "alpha": alpha},
                     0.0, (float(traj.times[0]), float(traj.times[-1])), ok)


# Cordoba-Cordoba ---------------------------------------------------------

def cordoba_positivity(f: SpectralField, p: float) -> float:
    """Grid quadrature of int |f|^{p-2} f Lambda f."""
    if p < 2:
        raise ValueError("p must be >= 2")
    g = f.grid
    vals = f.physical()
    lam = to_physical(g.kmag * f.coeffs)
    return float(np.sum(np.abs(vals) ** (p - 2) * vals * lam) * g.cell_area)


def cordoba_scale(f: SpectralField, p: float) -> float:
    """Natural size of the Cordoba integral: ||f||_p^{p-1} ||Lambda f||_p."""
    g = f.grid
    lam = to_physical(g.kmag * f.coeffs)
    return lp_norm(f.physical(), p, g.cell_area) ** (p - 1) * lp_norm(lam, p, g.cell_area)


# integral inequality -----------------------------------------------------

def _graded_gauss(a: float, b: float, fn, panels: int, order: int = 16,
                  ratio: float | None = None) -> float:
    """Composite Gauss-Legendre on [a, b]; geometric panels shrinking toward a."""
    x, w = leggauss(order)
    if ratio is None:
        edges = np.linspace(a, b, panels + 1)
    else:
        edges = a + (b - a) * np.concatenate([[0.0], ratio ** np.arange(panels - 1, -1, -1.0)])
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
        total += half * np.sum(w * fn(mid + half * x))
    return total


def lemma71_ratio(j: int, t: float, alpha: float, c: float, panels: int = 40) -> float:
    """t^alpha * int_0^t 2^j e^{-c (t-s) 2^j} s^{-alpha} ds.

    [0, t/2]: substitution s = (t/2) sigma^{1/(1-alpha)} removes the s^-alpha
    singularity; [t/2, t]: panels graded toward s = t resolve the layer of
    width 1/(c 2^j).
    """
    if not 0 <= alpha < 1 or c <= 0 or t <= 0:
        raise ValueError("need alpha in [0, 1), c > 0, t > 0")
    lam = c * 2.0**j
    half = 0.5 * t
    beta = 1.0 / (1.0 - alpha)

    def head(sig):
        s = half * sig**beta
        # ds s^-alpha = half^{1-alpha} beta dsigma
        return 2.0**j * np.exp(-lam * (t - s)) * beta * half ** (1 - alpha)

    def tail(w):           # w = t - s in [0, t/2]
        return 2.0**j * np.exp(-lam * w) * (t - w) ** (-alpha)

    a = _graded_gauss(0.0, 1.0, head, panels)
    # smallest panel no wider than the layer width 1/lam
    ratio = min(0.8, max(0.05, (1.0 / (lam * half)) ** (1.0 / (panels - 1))))
    b = _graded_gauss(0.0, half, tail, panels, ratio=ratio)
    return float((a + b) * t**alpha)


def lemma71_bound(alpha: float, c: float) -> float:
    """Explicit majorant 2^alpha/c + 2^alpha / ((1-alpha) c e) of the ratio."""
    return 2**alpha / c + 2**alpha / ((1 - alpha) * c * math.e)


@dataclass
class Lemma71Table:
    alpha: float
    c: float
    j_list: list
    t_list: list
    ratios: np.ndarray             # (len(j_list), len(t_list))
    refined: np.ndarray
    max_rel_change: float
    sup: float

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.sup) and self.max_rel_change < 1e-3)


def lemma71_check(j_list, t_list, alpha: float, c: float, panels: int = 40) -> Lemma71Table:
    r = np.array([[lemma71_ratio(j, t, alpha, c, panels) for t in t_list] for j in j_list])
    rr = np.array([[lemma71_ratio(j, t, alpha, c, 2 * panels) for t in t_list] for j in j_list])
    change = float(np.max(np.abs(rr - r) / np.abs(rr)))
    if not np.all(np.isfinite(rr)):
        raise ArithmeticError("quadrature diverged")
    return Lemma71Table(alpha, c, list(j_list), list(t_list), r, rr, change, float(rr.max()))


# uniqueness --------------------------------------------------------------

def uniqueness_divergence(run_a, run_b) -> DiagnosticSeries:
    """Distance ||rho_a - rho_b||_{L^2} against a fitted Gronwall envelope.

    K(t) = (||rho_a||_{H^{3/2}}^2 + ||rho_b||_{H^{3/2}}^2) ||rho_a||_{H^{3/2}}^2 and
    d(t) <= d(0) exp(C/2 int_0^t K); C is the smallest constant that works.
    """
    if run_a.grid != run_b.grid or not np.array_equal(run_a.times, run_b.times):
        raise ValueError("runs must share grid and time sampling")
    g = run_a.grid
    diff = run_a.coeffs - run_b.coeffs
    identical = bool(np.array_equal(run_a.coeffs, run_b.coeffs))
    d = np.sqrt(sobolev_sq(diff, g, 0))
    ha = sobolev_sq(run_a.coeffs, g, 0) + sobolev_sq(run_a.coeffs, g, 1.5)
    hb = sobolev_sq(run_b.coeffs, g, 0) + sobolev_sq(run_b.coeffs, g, 1.5)
    k = (ha + hb) * ha
    t = run_a.times
    cum_k = np.concatenate([[0.0], np.cumsum(0.5 * np.diff(t) * (k[1:] + k[:-1]))])
    meta = {"identical": identical, "d0": float(d[0])}
    if identical:
        meta.update(C=0.0, passed=True)
        return DiagnosticSeries("divergence", t, d, meta | {"envelope": d.copy()})
    if d[0] == 0:
        meta.update(C=math.nan, passed=False)
        return DiagnosticSeries("divergence", t, d, meta | {"envelope": np.full_like(d, np.nan)})
    pos = cum_k > 0
    needed = 2 * np.log(d[pos] / d[0]) / cum_k[pos]
    c_fit = max(float(needed.max(initial=0.0)), 0.0)
    env = d[0] * np.exp(0.5 * c_fit * cum_k)
    ok = bool(np.isfinite(c_fit) and np.all(d <= env * (1 + 1e-12)))
    rate = exp_decay_rate(t[1:], d[1:], (t[1], t[-1])).params["rate"] if len(t) > 2 else math.nan
    meta.update(C=c_fit, passed=ok, growth_rate=rate)
    return DiagnosticSeries("divergence", t, d, meta | {"envelope": env})


# weighted Besov ----------------------------------------------------------

def weighted_besov_sup(traj, alpha_w: float, beta: float, spec: DyadicSpec) -> float:
    """max_t t^alpha_w ||rho(t)||_{B^beta_{inf,inf}}."""
    if not 0 <= alpha_w < 1 or beta <= 0:
        raise ValueError("need alpha_w in [0, 1) and beta > 0")
    t = traj.times
    if alpha_w > 0 and np.any(t <= 0):
        raise ValueError("trajectory must exclude t = 0 when alpha_w > 0")
    b = besov_series(traj, beta, math.inf, math.inf, spec)
    return float(np.max(t**alpha_w * b))
