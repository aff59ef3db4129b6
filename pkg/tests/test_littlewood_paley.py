import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from darcy_ec import littlewood_paley as lp
from darcy_ec.evolution import Trajectory
from darcy_ec.spectral import Grid, SpectralError, SpectralField, field_from_function, sobolev_norm

from conftest import random_field


def exact_cos(g, a, b):
    c = np.zeros(g.shape, complex)
    c[g.index(a, b)] = c[g.index(-a, -b)] = 0.5
    return SpectralField(g, c)


def test_cutoff_profile():
    r = np.linspace(0, 2, 2001)
    phi = lp.cutoff(r)
    assert np.all(phi[r <= 0.5] == 1.0)
    assert np.all(phi[r >= 0.625] == 0.0)
    assert np.all(np.diff(phi) <= 0)
    assert np.all((phi >= 0) & (phi <= 1))


def test_psi_support():
    r = np.linspace(0, 4, 4001)
    ps = lp.psi(r)
    assert np.all(ps[(r <= 0.5) | (r >= 1.25)] == 0.0)
    assert np.all(ps >= 0)
    assert lp.psi(1.0) == 1.0


def test_smooth_step_symmetry():
    x = np.linspace(-0.5, 1.5, 101)
    assert np.allclose(lp.smooth_step(x) + lp.smooth_step(1 - x), 1.0, atol=1e-15)


def test_shell_range_small_grid():
    spec = lp.make_dyadic_spec(Grid(8))
    # k_min = 1, k_max = |(4, 4)| = 4 sqrt 2
    assert spec.j_min == -1
    assert spec.j_max == 4


@settings(max_examples=20, deadline=None)
@given(n=st.sampled_from([8, 16, 32, 64, 128]), L=st.floats(0.5, 50.0))
def test_partition_of_unity(n, L):
    g = Grid(n, L)
    spec = lp.make_dyadic_spec(g)
    total = sum(spec.block_symbol(j) for j in spec.shells)
    assert np.max(np.abs(total - (g.kmag > 0))) < 1e-12


def test_reconstruction(grid64):
    spec = lp.make_dyadic_spec(grid64)
    for seed in range(20):
        f = random_field(grid64, np.random.default_rng(seed), band=31)
        rec = sum(lp.dyadic_block(f, j, spec).coeffs for j in spec.shells)
        assert np.linalg.norm(rec - f.coeffs) < 1e-12 * np.linalg.norm(f.coeffs)


def test_low_pass_matches_block_sum(grid32, rng):
    spec = lp.make_dyadic_spec(grid32)
    f = random_field(grid32, rng)
    for j in spec.shells:
        a = lp.low_pass(f, j, spec).coeffs
        b = lp.low_pass_by_blocks(f, j, spec).coeffs
        assert np.allclose(a, b, atol=1e-14)


def test_block_out_of_range(grid32):
    spec = lp.make_dyadic_spec(grid32)
    with pytest.raises(SpectralError):
        lp.dyadic_block(SpectralField.zeros(grid32), spec.j_max + 1, spec)


def test_besov_single_shell(grid64):
    spec = lp.make_dyadic_spec(grid64)
    f = exact_cos(grid64, 1, 0)
    l2 = sobolev_norm(f, 0)
    for s in (0.0, 1.0, 2.5):
        assert lp.besov_norm(f, s, 2, 1, spec) == pytest.approx(l2, rel=1e-13)
    # |k| = 4 sits in block j = 2 only
    g4 = exact_cos(grid64, 0, 4)
    assert lp.besov_norm(g4, 1.0, 2, 1, spec) == pytest.approx(4 * sobolev_norm(g4, 0), rel=1e-13)
    assert lp.besov_norm(g4, 0, math.inf, math.inf, spec) == pytest.approx(1.0, rel=1e-13)


def test_besov_l2_equivalence(grid64, rng):
    # B^0_{2,2} and L^2 agree up to the overlap constant of the partition
    spec = lp.make_dyadic_spec(grid64)
    f = random_field(grid64, rng)
    ratio = lp.besov_norm(f, 0, 2, 2, spec) / sobolev_norm(f, 0)
    assert 1 / math.sqrt(2) <= ratio <= 1.0 + 1e-12


def test_time_norms():
    t = np.linspace(0, 1, 2001)
    y = np.exp(-t)[:, None]
    assert lp.time_norm(y, t, 1)[0] == pytest.approx(1 - math.exp(-1), rel=1e-7)
    assert lp.time_norm(y, t, math.inf)[0] == 1.0
    with pytest.raises(ValueError):
        lp.time_norm(y, t, 2)


def test_time_besov_on_decaying_mode(grid32):
    spec = lp.make_dyadic_spec(grid32)
    f = field_from_function(grid32, lambda x, y: np.cos(x))
    t = np.linspace(0, 1, 4001)
    traj = Trajectory(grid32, t, np.exp(-t)[:, None, None] * f.coeffs)
    l2 = sobolev_norm(f, 0)
    assert lp.time_besov_norm(traj, 1, 2, 1, math.inf, spec) == pytest.approx(l2, rel=1e-13)
    assert lp.time_besov_norm(traj, 2, 2, 1, 1, spec) == pytest.approx(l2 * (1 - math.exp(-1)),
                                                                      rel=1e-7)


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), swap=st.booleans())
def test_paraproduct_identity(seed, swap):
    g = Grid(16)
    rng = np.random.default_rng(seed)
    f, h = random_field(g, rng, band=7), random_field(g, rng, band=7)
    f, h = f * (1 / f.norm()), h * (1 / h.norm())
    spec = lp.make_dyadic_spec(g)
    for j in spec.shells:
        sp = lp.paraproduct_split(f, h, j, spec, swap)
        ref = sp.product_block.coeffs
        err = np.linalg.norm(sp.total.coeffs - ref)
        assert err <= 1e-12 * max(np.linalg.norm(ref), 1.0)
        assert lp.vanishing_terms(f, h, j, spec) < 1e-12


def test_paraproduct_terms_cover_product(grid32, rng):
    # summing every k-term for both pieces gives Delta_j(fg)
    spec = lp.make_dyadic_spec(grid32)
    f, h = random_field(grid32, rng), random_field(grid32, rng)
    j = 2
    _, first, second = lp.paraproduct_terms(f, h, j, spec)
    full = lp.paraproduct_split(f, h, j, spec).product_block.coeffs
    assert np.allclose(sum(first.values()) + sum(second.values()), full, atol=1e-13)


def test_derivative_and_semigroup_ratios(grid32):
    spec = lp.make_dyadic_spec(grid32)
    f = exact_cos(grid32, 1, 0)
    assert lp.derivative_ratio(f, 0, 1, 2, spec) == pytest.approx(1.0, rel=1e-13)
    assert lp.semigroup_ratio(f, 0, 0.3, 2, spec) == pytest.approx(math.exp(-0.3), rel=1e-13)
    assert lp.bernstein_ratio(f, 0, 2, 2, spec) == pytest.approx(1.0, rel=1e-13)
    with pytest.raises(ValueError):
        lp.semigroup_ratio(f, 3, 0.3, 2, spec)


def test_bernstein_bounded(grid64, rng):
    spec = lp.make_dyadic_spec(grid64)
    f = random_field(grid64, rng, band=31)
    for j in range(0, 5):
        assert lp.bernstein_ratio(f, j, 2, math.inf, spec) < 10.0
        assert lp.derivative_ratio(f, j, 1, 2, spec) < 1.25 + 1e-12
