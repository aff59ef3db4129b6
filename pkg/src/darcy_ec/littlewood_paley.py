"""Dyadic blocks, low-pass cutoffs, homogeneous Besov norms and paraproducts.

The cutoff profile is the standard smooth step built from exp(-1/x):
equal to 1 on [0, 1/2], 0 on [5/8, inf), nonincreasing in between.
Block j keeps the annulus 2^j (1/2, 5/4) with weight psi(2^-j |k|), where
psi(r) = cutoff(r/2) - cutoff(r).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constitutive import pad
from .spectral import Grid, SpectralError, SpectralField, lp_norm, to_physical, to_spectral

PLATEAU = 0.5
SUPPORT = 0.625


def _bump(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = np.exp(-1.0 / x[pos])
    return out


def smooth_step(x):
    """0 for x <= 0, 1 for x >= 1, C-infinity in between."""
    a = _bump(x)
    b = _bump(1.0 - np.asarray(x, dtype=float))
    return a / (a + b)


def cutoff(r):
    r = np.asarray(r, dtype=float)
    out = 1.0 - smooth_step((r - PLATEAU) / (SUPPORT - PLATEAU))
    out = np.where(r <= PLATEAU, 1.0, out)
    return np.where(r >= SUPPORT, 0.0, out)


def psi(r):
    return cutoff(np.asarray(r, dtype=float) / 2) - cutoff(r)


@dataclass(frozen=True)
class DyadicSpec:
    grid: Grid
    j_min: int
    j_max: int

    @property
    def shells(self) -> range:
        return range(self.j_min, self.j_max + 1)

    def check(self, j: int):
        if not self.j_min <= j <= self.j_max:
            raise SpectralError(f"shell {j} outside [{self.j_min}, {self.j_max}]")

    def block_symbol(self, j: int) -> np.ndarray:
        return psi(self.grid.kmag * 2.0**-j)

    def low_pass_symbol(self, j: int) -> np.ndarray:
        # sum_{l <= j-1} psi(2^-l r) telescopes to cutoff(2^-j r) for r > 0
        k = self.grid.kmag
        return np.where(k > 0, cutoff(k * 2.0**-j), 0.0)

    def active(self, j: int) -> bool:
        k = self.grid.kmag
        return bool(np.any((k > 2.0**j * PLATEAU) & (k < 2.0**j * 1.25)))


def make_dyadic_spec(grid: Grid) -> DyadicSpec:
    j_min = math.floor(math.log2(grid.k_min)) - 1
    j_max = math.ceil(math.log2(grid.k_max)) + 1
    return DyadicSpec(grid, j_min, j_max)


def dyadic_block(f: SpectralField, j: int, spec: DyadicSpec) -> SpectralField:
    spec.check(j)
    return SpectralField(f.grid, spec.block_symbol(j) * f.coeffs)


def low_pass(f: SpectralField, j: int, spec: DyadicSpec) -> SpectralField:
    spec.check(j)
    return SpectralField(f.grid, spec.low_pass_symbol(j) * f.coeffs)


def low_pass_by_blocks(f: SpectralField, j: int, spec: DyadicSpec) -> SpectralField:
    """S_j f as the explicit sum of blocks below j (blocks under j_min vanish)."""
    spec.check(j)
    acc = np.zeros_like(f.coeffs)
    for l in range(spec.j_min, j):
        acc = acc + spec.block_symbol(l) * f.coeffs
    return SpectralField(f.grid, acc)


def block_lp_norms(coeffs: np.ndarray, spec: DyadicSpec, p: float) -> np.ndarray:
    """||Delta_j f||_{L^p} for every shell; coeffs may carry leading batch axes.

    Returns an array of shape (..., number of shells).
    """
    g = spec.grid
    out = []
    for j in spec.shells:
        blk = spec.block_symbol(j) * coeffs
        if p == 2:
            # discrete Parseval: identical to the grid Riemann sum
            out.append(g.L * np.sqrt(np.sum(np.abs(blk) ** 2, axis=(-2, -1))))
        else:
            vals = to_physical(blk)
            a = np.abs(vals)
            if np.isinf(p):
                out.append(a.max(axis=(-2, -1)))
            else:
                out.append((np.sum(a**p, axis=(-2, -1)) * g.cell_area) ** (1.0 / p))
    return np.stack(out, axis=-1)


def _lq(weighted: np.ndarray, q: float) -> np.ndarray:
    if np.isinf(q):
        return weighted.max(axis=-1)
    if q == 1:
        return weighted.sum(axis=-1)
    return np.sum(weighted**q, axis=-1) ** (1.0 / q)


def besov_norm(f: SpectralField, s: float, p: float, q: float, spec: DyadicSpec) -> float:
    norms = block_lp_norms(f.coeffs, spec, p)
    weights = 2.0 ** (s * np.array(list(spec.shells), dtype=float))
    return float(_lq(weights * norms, q))


def time_norm(series: np.ndarray, times: np.ndarray, r: float) -> np.ndarray:
    """L^r(0, T) of series along axis 0: trapezoid for r=1, max for r=inf."""
    if np.isinf(r):
        return series.max(axis=0)
    if r == 1:
        if len(times) == 1:
            return np.zeros(series.shape[1:])
        return np.trapezoid(series, times, axis=0)
    raise ValueError(f"time exponent must be 1 or inf, got {r}")


def time_besov_norm(traj, s: float, p: float, q: float, r: float, spec: DyadicSpec) -> float:
    """Chemin-Lerner norm: time norm inside, dyadic l^q sum outside."""
    if len(traj.times) == 0:
        raise ValueError("empty trajectory")
    norms = block_lp_norms(traj.coeffs, spec, p)       # (M, shells)
    inner = time_norm(norms, np.asarray(traj.times), r)
    weights = 2.0 ** (s * np.array(list(spec.shells), dtype=float))
    return float(_lq(weights * inner, q))


# paraproduct ---------------------------------------------------------------

def padded_spec(spec: DyadicSpec) -> DyadicSpec:
    big = Grid(2 * spec.grid.n, spec.grid.L)
    base = make_dyadic_spec(big)
    return DyadicSpec(big, min(spec.j_min, base.j_min), max(spec.j_max, base.j_max))


@dataclass
class ParaproductSplit:
    """Partial sums of the block decomposition of Delta_j(fg) on the padded grid."""

    high_low: SpectralField     # sum_{k >= j-2} Delta_j(S_{k+1} f Delta_k g)
    low_high: SpectralField     # sum_{k >= j-2} Delta_j(S_k g Delta_k f)
    product_block: SpectralField  # Delta_j(fg), alias-free

    @property
    def total(self) -> SpectralField:
        return self.high_low + self.low_high


def _padded_product(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return to_spectral(to_physical(a) * to_physical(b))


def paraproduct_terms(f: SpectralField, g: SpectralField, j: int, spec: DyadicSpec,
                      swap: bool = False):
    """Per-k terms of the decomposition on the 2n grid.

    Returns (pspec, first, second) where first[k] = Delta_j(S_{k+1} f Delta_k g)
    and second[k] = Delta_j(S_k g Delta_k f) for every shell k of the padded
    spec. ``swap=True`` exchanges the roles of f and g (second identity).
    """
    if f.grid != g.grid:
        raise SpectralError("grid mismatch")
    spec.check(j)
    if swap:
        f, g = g, f
    ps = padded_spec(spec)
    n2 = ps.grid.n
    fp, gp = pad(f.coeffs, n2), pad(g.coeffs, n2)
    bj = ps.block_symbol(j)
    first, second = {}, {}
    for k in ps.shells:
        dk = ps.block_symbol(k)
        first[k] = bj * _padded_product(ps.low_pass_symbol(k + 1) * fp, dk * gp)
        second[k] = bj * _padded_product(ps.low_pass_symbol(k) * gp, dk * fp)
    return ps, first, second


def paraproduct_split(f: SpectralField, g: SpectralField, j: int, spec: DyadicSpec,
                      swap: bool = False) -> ParaproductSplit:
    ps, first, second = paraproduct_terms(f, g, j, spec, swap)
    a = sum(v for k, v in first.items() if k >= j - 2)
    b = sum(v for k, v in second.items() if k >= j - 2)
    n2 = ps.grid.n
    fp, gp = pad(f.coeffs, n2), pad(g.coeffs, n2)
    whole = ps.block_symbol(j) * _padded_product(fp, gp)
    zero = np.zeros((n2, n2), complex)
    return ParaproductSplit(
        SpectralField(ps.grid, zero + a),
        SpectralField(ps.grid, zero + b),
        SpectralField(ps.grid, whole),
    )


def vanishing_terms(f: SpectralField, g: SpectralField, j: int, spec: DyadicSpec) -> float:
    """Largest coefficient among the terms that must vanish.

    Delta_j(S_k g Delta_k f) for k <= j-2 and Delta_j(S_{k+1} f Delta_k g)
    for k <= j-3.
    """
    _, first, second = paraproduct_terms(f, g, j, spec)
    worst = 0.0
    for k, v in second.items():
        if k <= j - 2:
            worst = max(worst, float(np.max(np.abs(v))))
    for k, v in first.items():
        if k <= j - 3:
            worst = max(worst, float(np.max(np.abs(v))))
    return worst


# Bernstein / localisation diagnostics -----------------------------------

def bernstein_ratio(f: SpectralField, j: int, p: float, q: float, spec: DyadicSpec) -> float:
    """||Delta_j f||_q / (2^{2j(1/p - 1/q)} ||Delta_j f||_p)."""
    if not 1 <= p <= q:
        raise ValueError("need 1 <= p <= q")
    blk = dyadic_block(f, j, spec).physical()
    lp = lp_norm(blk, p, f.grid.cell_area)
    if lp == 0:
        raise ValueError(f"block {j} is zero; ratio undefined")
    lq = lp_norm(blk, q, f.grid.cell_area)
    return lq / (2.0 ** (2 * j * (1 / p - 1 / q)) * lp)


def derivative_ratio(f: SpectralField, j: int, order: int, p: float, spec: DyadicSpec) -> float:
    """max_{|a|=order} ||d^a Delta_j f||_p / (2^{j order} ||Delta_j f||_p)."""
    g = f.grid
    blk = dyadic_block(f, j, spec)
    base = lp_norm(blk.physical(), p, g.cell_area)
    if base == 0:
        raise ValueError(f"block {j} is zero; ratio undefined")
    k1, k2 = g.k_odd
    best = 0.0
    for a1 in range(order + 1):
        sym = (1j * k1) ** a1 * (1j * k2) ** (order - a1)
        d = to_physical(sym * blk.coeffs)
        best = max(best, lp_norm(d, p, g.cell_area))
    return best / (2.0 ** (j * order) * base)


def semigroup_ratio(f: SpectralField, j: int, t: float, p: float, spec: DyadicSpec,
                    a: float = 1.0) -> float:
    """||e^{-t Lambda^a} Delta_j f||_p / ||Delta_j f||_p."""
    g = f.grid
    blk = dyadic_block(f, j, spec)
    base = lp_norm(blk.physical(), p, g.cell_area)
    if base == 0:
        raise ValueError(f"block {j} is zero; ratio undefined")
    out = to_physical(np.exp(-t * g.kmag**a) * blk.coeffs)
    return lp_norm(out, p, g.cell_area) / base
