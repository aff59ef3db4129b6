"""Potential, electric field, force, Darcy velocity and pressure.

Physical-space products follow one of two rules:

``"two_thirds"``
    inputs and output restricted to the 2/3-rule band; every binary product
    of band-limited factors is then exact on the retained modes.
``"padded"``
    factors are zero-padded onto a 2n grid (Nyquist line removed first),
    multiplied there alias-free, and truncated back to the n grid.
"""
from __future__ import annotations

import numpy as np

from .spectral import (
    Grid,
    SpectralField,
    VectorField,
    apply_inverse_lambda,
    leray_coeffs,
    to_physical,
    to_spectral,
)

DEALIAS_MODES = ("two_thirds", "padded")


def pad(coeffs: np.ndarray, n_big: int) -> np.ndarray:
    """Embed coefficients into a larger grid, dropping the Nyquist line."""
    n = coeffs.shape[-1]
    h = n // 2
    out = np.zeros(coeffs.shape[:-2] + (n_big, n_big), complex)
    idx = np.r_[0:h, n - h + 1:n]          # modes -h+1 .. h-1
    big = np.r_[0:h, n_big - h + 1:n_big]
    out[..., big[:, None], big[None, :]] = coeffs[..., idx[:, None], idx[None, :]]
    return out


def truncate(coeffs: np.ndarray, n: int) -> np.ndarray:
    """Restrict coefficients to modes -n/2+1 .. n/2-1 of an n grid."""
    n_big = coeffs.shape[-1]
    h = n // 2
    out = np.zeros(coeffs.shape[:-2] + (n, n), complex)
    idx = np.r_[0:h, n - h + 1:n]
    big = np.r_[0:h, n_big - h + 1:n_big]
    out[..., idx[:, None], idx[None, :]] = coeffs[..., big[:, None], big[None, :]]
    return out


class Products:
    """Dealiased products of spectral arrays on one grid."""

    def __init__(self, grid: Grid, mode: str = "two_thirds"):
        if mode not in DEALIAS_MODES:
            raise ValueError(f"unknown dealias mode {mode!r}")
        self.grid = grid
        self.mode = mode
        self.mask = grid.dealias_mask if mode == "two_thirds" else ~grid.nyquist
        self._mollifiers: dict = {}

    def mollifier(self, eps: float):
        if eps not in self._mollifiers:
            self._mollifiers[eps] = mollifier_symbol(self.grid, eps)
        return self._mollifiers[eps]

    def filter(self, c: np.ndarray) -> np.ndarray:
        return c * self.mask

    def physical(self, c: np.ndarray) -> np.ndarray:
        """Physical samples used as a product factor (c must be pre-filtered)."""
        if self.mode == "padded":
            return to_physical(pad(c, 2 * self.grid.n))
        return to_physical(c)

    def spectral(self, values: np.ndarray) -> np.ndarray:
        if self.mode == "padded":
            return truncate(to_spectral(values), self.grid.n)
        return to_spectral(values) * self.mask


def mollifier_symbol(grid: Grid, eps: float) -> np.ndarray | float:
    if eps == 0:
        return 1.0
    return np.exp(-eps * grid.kmag**2)


def force_coeffs(rho: np.ndarray, prod: Products, rho_phys: np.ndarray | None = None):
    """-rho R rho, returned as (force_hat, rho_phys)."""
    rho = prod.filter(rho)
    if rho_phys is None:
        rho_phys = prod.physical(rho)
    riesz = prod.physical(prod.grid.riesz_symbol * rho)
    return prod.spectral(-rho_phys * riesz), rho_phys


def velocity_coeffs(rho: np.ndarray, prod: Products, eps: float = 0.0,
                    rho_phys: np.ndarray | None = None):
    """u = -J_eps P(rho R rho); returns (u_hat, rho_phys)."""
    force, rho_phys = force_coeffs(rho, prod, rho_phys)
    u = leray_coeffs(force, prod.grid) * prod.mollifier(eps)
    return u, rho_phys


def transport_coeffs(rho: np.ndarray, prod: Products, eps: float = 0.0) -> np.ndarray:
    """Spectral coefficients of div(u rho) with u = -J_eps P(rho R rho)."""
    u, rho_phys = velocity_coeffs(rho, prod, eps)
    flux = prod.spectral(prod.physical(u) * rho_phys)
    k1, k2 = prod.grid.k_odd
    return 1j * (k1 * flux[0] + k2 * flux[1])


# field-level API ---------------------------------------------------------

def potential(rho: SpectralField) -> SpectralField:
    return apply_inverse_lambda(rho)


def electric_field(rho: SpectralField) -> VectorField:
    """E = -grad(Lambda^{-1} rho) = -R rho."""
    phi = potential(rho)
    k1, k2 = rho.grid.k_odd
    return VectorField(rho.grid, np.stack([-1j * k1 * phi.coeffs, -1j * k2 * phi.coeffs]))


def force(rho: SpectralField, dealias: str = "two_thirds") -> VectorField:
    potential(rho)  # mean-zero check
    f, _ = force_coeffs(rho.coeffs, Products(rho.grid, dealias))
    return VectorField(rho.grid, f)


def velocity(rho: SpectralField, dealias: str = "two_thirds", eps: float = 0.0) -> VectorField:
    potential(rho)
    u, _ = velocity_coeffs(rho.coeffs, Products(rho.grid, dealias), eps)
    return VectorField(rho.grid, u)


def pressure(rho: SpectralField, dealias: str = "two_thirds") -> SpectralField:
    """Zero-mean p with u + grad p = F."""
    f = force(rho, dealias).coeffs
    g = rho.grid
    k1, k2 = g.k_odd
    return SpectralField(g, -1j * (k1 * f[0] + k2 * f[1]) * g.inv_k2_odd)


def darcy_residual(rho: SpectralField, dealias: str = "two_thirds") -> float:
    """||u + grad p - F|| / ||F|| (0 when F vanishes)."""
    f = force(rho, dealias)
    u = velocity(rho, dealias)
    p = pressure(rho, dealias)
    k1, k2 = rho.grid.k_odd
    grad_p = np.stack([1j * k1 * p.coeffs, 1j * k2 * p.coeffs])
    res = np.sqrt(np.sum(np.abs(u.coeffs + grad_p - f.coeffs) ** 2))
    scale = f.norm()
    return float(res / scale) if scale > 0 else float(res)


def divergence_defect(v: VectorField) -> float:
    """max_k |k . v(k)|."""
    return float(np.max(np.abs(v.divergence().coeffs)))
