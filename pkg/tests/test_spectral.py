import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from darcy_ec.spectral import (
    GevreyOverflow,
    Grid,
    PhysicalField,
    SpectralError,
    SpectralField,
    VectorField,
    apply_fractional_laplacian,
    apply_inverse_lambda,
    field_from_function,
    forward_transform,
    gevrey_weight,
    gradient,
    heat_semigroup,
    hermitian_defect,
    inverse_transform,
    leray_project,
    lp_norm,
    riesz_transform,
    sobolev_norm,
    to_physical,
    to_spectral,
)

from conftest import random_field


def cos_field(g, a=1, b=0):
    return field_from_function(g, lambda x, y: np.cos(a * x + b * y))


def test_grid_validation():
    for bad in (7, 6, 9.5, 0):
        with pytest.raises(SpectralError):
            Grid(bad)
    with pytest.raises(SpectralError):
        Grid(16, -1.0)


def test_cos_coefficient_normalisation(grid32):
    f = cos_field(grid32)
    c = f.coeffs
    assert c[grid32.index(1, 0)] == pytest.approx(0.5, abs=1e-15)
    assert c[grid32.index(-1, 0)] == pytest.approx(0.5, abs=1e-15)
    c2 = c.copy()
    c2[grid32.index(1, 0)] = c2[grid32.index(-1, 0)] = 0
    assert np.abs(c2).max() < 1e-15


def test_round_trip(grid32, rng):
    v = rng.standard_normal(grid32.shape)
    back = inverse_transform(forward_transform(PhysicalField(grid32, v)))
    assert np.max(np.abs(back.values - v)) < 1e-14


def exact_cos(g, a, b):
    c = np.zeros(g.shape, complex)
    c[g.index(a, b)] = c[g.index(-a, -b)] = 0.5
    return SpectralField(g, c)


def test_fractional_laplacian_on_single_mode(grid32):
    f = exact_cos(grid32, 3, 4)
    for a in (0.5, 1.0, 1.5, 2.0):
        out = apply_fractional_laplacian(f, a)
        assert np.allclose(out.coeffs, 5.0**a * f.coeffs, rtol=1e-13, atol=1e-15)
    with pytest.raises(SpectralError):
        apply_fractional_laplacian(f, -0.5)


def test_fractional_laplacian_kills_mean(grid32):
    c = np.zeros(grid32.shape, complex)
    c[0, 0] = 3.0
    assert not np.any(apply_fractional_laplacian(SpectralField(grid32, c), 1.0).coeffs)


def test_fractional_laplacian_semigroup_law(grid32, rng):
    f = random_field(grid32, rng)
    a = apply_fractional_laplacian(apply_fractional_laplacian(f, 0.3), 0.9)
    b = apply_fractional_laplacian(f, 1.2)
    assert np.allclose(a.coeffs, b.coeffs, rtol=1e-12, atol=1e-14)


def test_inverse_lambda_rejects_mean(grid32):
    c = np.zeros(grid32.shape, complex)
    c[0, 0] = 1.0
    with pytest.raises(SpectralError):
        apply_inverse_lambda(SpectralField(grid32, c))


def test_riesz_of_cos(grid32):
    f = cos_field(grid32)
    r = riesz_transform(f)
    # R_1 cos x1 = -sin x1, R_2 cos x1 = 0
    assert np.allclose(to_physical(r.coeffs[0]), -np.sin(grid32.x[0]), atol=1e-14)
    assert np.abs(r.coeffs[1]).max() < 1e-15


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_riesz_squares_to_minus_identity(seed):
    g = Grid(16)
    f = random_field(g, np.random.default_rng(seed), band=6)
    r = riesz_transform(f)
    back = riesz_transform(r.x).x.coeffs + riesz_transform(r.y).y.coeffs
    assert np.allclose(back, -f.coeffs, atol=1e-13 * max(f.norm(), 1))


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_leray_projector_properties(seed):
    g = Grid(16)
    rng = np.random.default_rng(seed)
    v = VectorField(g, np.stack([random_field(g, rng, band=7).coeffs,
                                 random_field(g, rng, band=7).coeffs]))
    pv = leray_project(v)
    scale = max(v.norm(), 1.0)
    assert np.abs(pv.divergence().coeffs).max() < 1e-13 * scale
    assert np.allclose(leray_project(pv).coeffs, pv.coeffs, atol=1e-14 * scale)
    # gradients are annihilated
    grad = gradient(random_field(g, rng, band=7))
    assert leray_project(grad).norm() < 1e-13 * max(grad.norm(), 1)
    # real fields stay real
    assert hermitian_defect(pv.coeffs[0]) < 1e-14 * scale


def test_heat_semigroup(grid32, rng):
    f = cos_field(grid32, 1, 1)
    out = heat_semigroup(f, 0.7, 1.0)
    assert np.allclose(out.coeffs, math.exp(-0.7 * math.sqrt(2)) * f.coeffs, atol=1e-16)
    g = random_field(grid32, rng)
    two = heat_semigroup(heat_semigroup(g, 0.2, 1.5), 0.3, 1.5)
    assert np.allclose(two.coeffs, heat_semigroup(g, 0.5, 1.5).coeffs, atol=1e-15)
    with pytest.raises(SpectralError):
        heat_semigroup(f, -1.0, 1.0)
    with pytest.raises(SpectralError):
        heat_semigroup(f, 1.0, 0.0)


def test_gevrey_weight_and_overflow(grid32):
    f = cos_field(grid32, 1, 1)
    out = gevrey_weight(f, 0.1)
    assert np.allclose(out.coeffs, math.exp(0.2) * f.coeffs)
    with pytest.raises(GevreyOverflow):
        gevrey_weight(f, 100.0)


def test_lp_norms_of_cos(grid64):
    v = cos_field(grid64).physical()
    area = grid64.cell_area
    # closed forms on [0, 2 pi)^2
    assert lp_norm(v, 2, area) == pytest.approx(math.pi * math.sqrt(2), rel=1e-13)
    assert lp_norm(v, 4, area) == pytest.approx((1.5 * math.pi**2) ** 0.25, rel=1e-13)
    assert lp_norm(v, math.inf, area) == pytest.approx(1.0, rel=1e-15)


def test_sobolev_norm_parseval(grid32, rng):
    f = random_field(grid32, rng)
    assert sobolev_norm(f, 0) == pytest.approx(lp_norm(f.physical(), 2, grid32.cell_area), rel=1e-13)
    g = cos_field(grid32, 3, 4)
    assert sobolev_norm(g, 1.5) == pytest.approx(5**1.5 * math.pi * math.sqrt(2), rel=1e-13)


def test_nyquist_odd_symbols_keep_fields_real(rng):
    g = Grid(16)
    c = rng.standard_normal(g.shape) + 1j * rng.standard_normal(g.shape)
    f = SpectralField(g, to_spectral(to_physical(c)))
    f.coeffs[0, 0] = 0
    r = riesz_transform(f)
    assert hermitian_defect(r.coeffs[0]) < 1e-14
    assert hermitian_defect(gradient(f).coeffs[1]) < 1e-12


def test_grid_mismatch():
    a = SpectralField.zeros(Grid(16))
    b = SpectralField.zeros(Grid(32))
    with pytest.raises(SpectralError):
        a + b
