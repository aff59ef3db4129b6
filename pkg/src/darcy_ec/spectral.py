"""Periodic grids, transforms and Fourier multipliers on the 2-torus.

Coefficients are stored in the standard FFT layout (axis 0 is the x1
wavenumber, axis 1 the x2 wavenumber) and normalised so that
``cos(k.x)`` has coefficient 1/2 at ``+k`` and ``-k``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.fft as sfft

EXP_LIMIT = 700.0


class SpectralError(ValueError):
    """Invalid input to a spectral operation."""


class GevreyOverflow(SpectralError):
    """Exponential weight exceeds the double-precision range."""


@dataclass(frozen=True)
class Grid:
    n: int
    L: float = 2 * np.pi

    def __post_init__(self):
        if int(self.n) != self.n or self.n % 2 or self.n < 8:
            raise SpectralError(f"n must be an even integer >= 8, got {self.n!r}")
        if not self.L > 0:
            raise SpectralError(f"box length must be positive, got {self.L!r}")

    @property
    def shape(self):
        return (self.n, self.n)

    @property
    def dx(self) -> float:
        return self.L / self.n

    @property
    def cell_area(self) -> float:
        return self.dx**2

    @cached_property
    def modes(self) -> np.ndarray:
        """Integer mode numbers in FFT order, values in [-n/2, n/2)."""
        return np.fft.fftfreq(self.n, 1.0 / self.n).astype(np.int64)

    @cached_property
    def k1(self) -> np.ndarray:
        return (2 * np.pi / self.L) * self.modes[:, None] * np.ones((1, self.n))

    @cached_property
    def k2(self) -> np.ndarray:
        return (2 * np.pi / self.L) * np.ones((self.n, 1)) * self.modes[None, :]

    @cached_property
    def kmag(self) -> np.ndarray:
        return np.hypot(self.k1, self.k2)

    @cached_property
    def kabs1(self) -> np.ndarray:
        """Symbol |k1| + |k2| of the Gevrey generator."""
        return np.abs(self.k1) + np.abs(self.k2)

    @cached_property
    def nyquist(self) -> np.ndarray:
        m = self.modes
        row = m == -self.n // 2
        return row[:, None] | row[None, :]

    @cached_property
    def k_odd(self) -> tuple[np.ndarray, np.ndarray]:
        # odd symbols (ik, ik/|k|) are not conjugate-consistent on the Nyquist
        # line, so the Nyquist component of the wavevector is dropped there
        nyq = self.modes == -self.n // 2
        k1 = np.where(nyq[:, None], 0.0, self.k1)
        k2 = np.where(nyq[None, :], 0.0, self.k2)
        return k1, k2

    @cached_property
    def kmag_odd(self) -> np.ndarray:
        return np.hypot(*self.k_odd)

    @cached_property
    def inv_k2_odd(self) -> np.ndarray:
        k1, k2 = self.k_odd
        k2 = k1 * k1 + k2 * k2
        out = np.zeros_like(k2)
        np.divide(1.0, k2, out=out, where=k2 > 0)
        return out

    @cached_property
    def riesz_symbol(self) -> np.ndarray:
        inv = safe_inverse(self.kmag_odd)
        k1, k2 = self.k_odd
        return np.stack([1j * k1 * inv, 1j * k2 * inv])

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        """2/3-rule mask: keep modes with 3|m_i| < n in both directions."""
        keep = 3 * np.abs(self.modes) < self.n
        return keep[:, None] & keep[None, :]

    @cached_property
    def x(self) -> tuple[np.ndarray, np.ndarray]:
        s = np.arange(self.n) * self.dx
        return np.meshgrid(s, s, indexing="ij")

    @property
    def k_min(self) -> float:
        return 2 * np.pi / self.L

    @property
    def k_max(self) -> float:
        return float(self.kmag.max())

    def index(self, m1: int, m2: int) -> tuple[int, int]:
        """Array index of the integer mode (m1, m2)."""
        return (m1 % self.n, m2 % self.n)


def make_grid(n: int, L: float = 2 * np.pi) -> Grid:
    return Grid(n, float(L))


@dataclass(frozen=True, eq=False)
class PhysicalField:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape != self.grid.shape:
            raise SpectralError(f"shape {self.values.shape} does not match grid {self.grid.shape}")


@dataclass(frozen=True, eq=False)
class SpectralField:
    grid: Grid
    coeffs: np.ndarray

    def __post_init__(self):
        if self.coeffs.shape != self.grid.shape:
            raise SpectralError(f"shape {self.coeffs.shape} does not match grid {self.grid.shape}")

    @classmethod
    def zeros(cls, grid: Grid) -> "SpectralField":
        return cls(grid, np.zeros(grid.shape, complex))

    @property
    def mean(self) -> complex:
        return self.coeffs[0, 0]

    def norm(self) -> float:
        """l2 norm of the coefficient array."""
        return float(np.sqrt(np.sum(np.abs(self.coeffs) ** 2)))

    def physical(self) -> np.ndarray:
        return to_physical(self.coeffs)

    def __add__(self, other):
        _same_grid(self.grid, other.grid)
        return SpectralField(self.grid, self.coeffs + other.coeffs)

    def __sub__(self, other):
        _same_grid(self.grid, other.grid)
        return SpectralField(self.grid, self.coeffs - other.coeffs)

    def __mul__(self, c):
        return SpectralField(self.grid, self.coeffs * c)

    __rmul__ = __mul__

    def __neg__(self):
        return SpectralField(self.grid, -self.coeffs)


@dataclass(frozen=True, eq=False)
class VectorField:
    grid: Grid
    coeffs: np.ndarray  # shape (2, n, n)

    def __post_init__(self):
        if self.coeffs.shape != (2,) + self.grid.shape:
            raise SpectralError("vector field coefficients must have shape (2, n, n)")

    @classmethod
    def from_components(cls, a: SpectralField, b: SpectralField) -> "VectorField":
        _same_grid(a.grid, b.grid)
        return cls(a.grid, np.stack([a.coeffs, b.coeffs]))

    @property
    def x(self) -> SpectralField:
        return SpectralField(self.grid, self.coeffs[0])

    @property
    def y(self) -> SpectralField:
        return SpectralField(self.grid, self.coeffs[1])

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.coeffs) ** 2)))

    def divergence(self) -> SpectralField:
        k1, k2 = self.grid.k_odd
        return SpectralField(self.grid, 1j * (k1 * self.coeffs[0] + k2 * self.coeffs[1]))

    def __add__(self, other):
        _same_grid(self.grid, other.grid)
        return VectorField(self.grid, self.coeffs + other.coeffs)

    def __sub__(self, other):
        _same_grid(self.grid, other.grid)
        return VectorField(self.grid, self.coeffs - other.coeffs)

    def __mul__(self, c):
        return VectorField(self.grid, self.coeffs * c)

    __rmul__ = __mul__

    def __neg__(self):
        return VectorField(self.grid, -self.coeffs)


def _same_grid(a: Grid, b: Grid):
    if a != b:
        raise SpectralError(f"grid mismatch: {a} vs {b}")


# array-level kernels -------------------------------------------------------

def to_spectral(values: np.ndarray) -> np.ndarray:
    n = values.shape[-1]
    return sfft.fft2(values, axes=(-2, -1)) / (n * n)


def to_physical(coeffs: np.ndarray) -> np.ndarray:
    n = coeffs.shape[-1]
    return sfft.ifft2(coeffs, axes=(-2, -1)).real * (n * n)


def hermitian_part(coeffs: np.ndarray) -> np.ndarray:
    """Project onto coefficients of a real field: (c(k) + conj c(-k)) / 2."""
    flipped = np.roll(np.flip(coeffs, axis=(-2, -1)), 1, axis=(-2, -1))
    return 0.5 * (coeffs + np.conj(flipped))


def hermitian_defect(coeffs: np.ndarray) -> float:
    flipped = np.roll(np.flip(coeffs, axis=(-2, -1)), 1, axis=(-2, -1))
    return float(np.max(np.abs(coeffs - np.conj(flipped)), initial=0.0))


def safe_inverse(kmag: np.ndarray) -> np.ndarray:
    out = np.zeros_like(kmag)
    np.divide(1.0, kmag, out=out, where=kmag > 0)
    return out


def leray_coeffs(v: np.ndarray, grid: Grid) -> np.ndarray:
    k1, k2 = grid.k_odd
    proj = (k1 * v[0] + k2 * v[1]) * grid.inv_k2_odd
    return np.stack([v[0] - k1 * proj, v[1] - k2 * proj])


# field-level operations ----------------------------------------------------

def forward_transform(f: PhysicalField) -> SpectralField:
    return SpectralField(f.grid, to_spectral(f.values))


def inverse_transform(f: SpectralField) -> PhysicalField:
    return PhysicalField(f.grid, to_physical(f.coeffs))


def field_from_function(grid: Grid, fn) -> SpectralField:
    """Sample ``fn(x1, x2)`` on the grid and transform."""
    x1, x2 = grid.x
    return SpectralField(grid, to_spectral(np.asarray(fn(x1, x2), dtype=float)))


def apply_fractional_laplacian(f: SpectralField, a: float) -> SpectralField:
    if a < 0:
        raise SpectralError(f"order must be >= 0, got {a}")
    k = f.grid.kmag
    sym = np.where(k > 0, k ** a, 0.0) if a > 0 else (k > 0).astype(float)
    return SpectralField(f.grid, sym * f.coeffs)


def _check_mean_zero(f: SpectralField):
    if abs(f.coeffs[0, 0]) > 1e-13 * max(f.norm(), 1.0):
        raise SpectralError(f"field is not mean-zero (coeff(0) = {f.coeffs[0, 0]!r})")


def apply_inverse_lambda(f: SpectralField) -> SpectralField:
    _check_mean_zero(f)
    return SpectralField(f.grid, safe_inverse(f.grid.kmag) * f.coeffs)


def riesz_transform(f: SpectralField) -> VectorField:
    _check_mean_zero(f)
    return VectorField(f.grid, f.grid.riesz_symbol * f.coeffs)


def gradient(f: SpectralField) -> VectorField:
    k1, k2 = f.grid.k_odd
    return VectorField(f.grid, np.stack([1j * k1 * f.coeffs, 1j * k2 * f.coeffs]))


def leray_project(v: VectorField) -> VectorField:
    return VectorField(v.grid, leray_coeffs(v.coeffs, v.grid))


def heat_semigroup(f: SpectralField, t: float, a: float) -> SpectralField:
    if t < 0:
        raise SpectralError(f"time must be >= 0, got {t}")
    if a <= 0:
        raise SpectralError(f"order must be > 0, got {a}")
    return SpectralField(f.grid, np.exp(-t * f.grid.kmag ** a) * f.coeffs)


def gevrey_weight(f: SpectralField, tau: float) -> SpectralField:
    expo = tau * f.grid.kabs1
    worst = float(np.max(np.abs(expo)))
    if worst > EXP_LIMIT:
        raise GevreyOverflow(f"Gevrey exponent {worst:.1f} exceeds {EXP_LIMIT}")
    return SpectralField(f.grid, np.exp(expo) * f.coeffs)


def lp_norm(values: np.ndarray, p: float, cell_area: float) -> float:
    """Uniform-grid quadrature of the L^p norm; p may be ``inf``."""
    a = np.abs(values)
    if np.isinf(p):
        return float(a.max(initial=0.0))
    if p == 2:
        return float(np.sqrt(np.sum(a * a) * cell_area))
    return float((np.sum(a**p) * cell_area) ** (1.0 / p))


def sobolev_norm(f: SpectralField, s: float) -> float:
    """Homogeneous norm ||Lambda^s f||_{L^2} via Parseval."""
    g = f.grid
    k = g.kmag
    w = np.where(k > 0, k ** (2 * s), 0.0) if s != 0 else np.ones_like(k)
    return float(g.L * np.sqrt(np.sum(w * np.abs(f.coeffs) ** 2)))
