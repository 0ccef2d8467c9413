import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from smsim.heatpara import (
    HeatCalculus,
    besov_norm,
    bony_remainder,
    commutator_B,
    corrector_F,
    holder_norm,
    intertwined_paraproduct,
    log_gauss_rule,
    p_apply,
    p_symbol,
    paraproduct,
    paraproduct_normalization,
    product_expansion,
    q_apply,
    q_symbol,
    reproducing_defect,
    resonant,
    sobolev_norm,
    truncated_paraproduct,
)
from smsim.torus import GridSpec, from_function, inner, laplacian, product

from test_torus import random_real

seeds = st.integers(0, 2**31 - 1)


def test_normalization_b2():
    assert paraproduct_normalization(2) == pytest.approx(8 / 3)


@pytest.mark.parametrize("b", [2, 3, 4])
def test_normalization_integral(b):
    # c_b int_0^inf Q_t(1)^2 dt/t = 1
    t, w = log_gauss_rule(1e-8, 1e4, 400)
    val = paraproduct_normalization(b) * np.sum(w * q_symbol(t, 1.0, b) ** 2)
    assert val == pytest.approx(1.0, rel=1e-8)


@pytest.mark.parametrize("b", [2, 3, 5])
def test_minus_t_derivative_of_P_is_Q(b):
    lam = np.linspace(0.0, 50.0, 11)
    t, h = 0.3, 1e-6
    dP = (p_symbol(t + h, lam, b) - p_symbol(t - h, lam, b)) / (2 * h)
    assert np.allclose(-t * dP, q_symbol(t, lam, b), atol=1e-7)


def test_semigroup_ranges(grid16):
    f = random_real(grid16, 0)
    with pytest.raises(ValueError):
        q_apply(f, 0.0)
    assert p_apply(f, 0.0) is f
    with pytest.raises(ValueError):
        HeatCalculus(grid16, b=1)


@settings(max_examples=10, deadline=None)
@given(seeds)
def test_reproducing_formula(seed):
    grid = GridSpec(32)
    calc = HeatCalculus(grid)
    assert reproducing_defect(random_real(grid, seed, band=8), calc) < 1e-8


@settings(max_examples=8, deadline=None)
@given(seeds)
def test_bony_decomposition_exact(calc32, seed):
    grid = calc32.grid
    f, g = random_real(grid, seed, band=8), random_real(grid, seed + 7, band=8)
    parts = paraproduct(f, g, calc32) + paraproduct(g, f, calc32) + resonant(f, g, calc32) + bony_remainder(f, g, calc32)
    assert (product(f, g) - parts).sup() < 1e-6 * f.sup() * g.sup()
    assert (product_expansion(f, g, calc32) - product(f, g)).sup() < 1e-6 * f.sup() * g.sup()


@settings(max_examples=8, deadline=None)
@given(seeds)
def test_resonant_symmetric(calc32, seed):
    grid = calc32.grid
    f, g = random_real(grid, seed, band=8), random_real(grid, seed + 1, band=8)
    assert (resonant(f, g, calc32) - resonant(g, f, calc32)).norm() < 1e-12 * resonant(f, g, calc32).norm()


@settings(max_examples=8, deadline=None)
@given(seeds)
def test_intertwining(calc32, seed):
    grid = calc32.grid
    f, g = random_real(grid, seed, band=8), random_real(grid, seed + 3, band=8)
    lhs = laplacian(intertwined_paraproduct(f, g, calc32)).coeffs
    rhs = paraproduct(f, laplacian(g), calc32).coeffs
    nz = grid.ksq > 0
    assert np.linalg.norm((lhs - rhs)[:, nz]) < 1e-8 * np.linalg.norm(rhs[:, nz])


def test_truncation_limits(calc32):
    grid = calc32.grid
    f, g = random_real(grid, 1, band=8), random_real(grid, 2, band=8)
    full = intertwined_paraproduct(f, g, calc32)
    assert (truncated_paraproduct(f, g, 1.0, calc32) - full).norm() < 1e-12 * full.norm()
    small = truncated_paraproduct(f, g, 1e-3, calc32)
    assert small.norm() < full.norm()
    with pytest.raises(ValueError):
        truncated_paraproduct(f, g, 1.5, calc32)


def test_low_high_paraproduct_is_product(calc32):
    grid = calc32.grid
    lo = from_function(lambda x1, x2: np.cos(x1), grid)
    hi = from_function(lambda x1, x2: np.cos(8 * x2), grid)
    exact = product(lo, hi)
    assert (paraproduct(lo, hi, calc32) - exact).norm() < 1e-2 * exact.norm()
    # high-low is small
    assert paraproduct(hi, lo, calc32).norm() < 0.1 * exact.norm()


def test_paraproduct_linear_in_both(calc16, rng):
    grid = calc16.grid
    f, g, h = (random_real(grid, s, band=4) for s in (1, 2, 3))
    a = paraproduct(f + 2.0 * h, g, calc16)
    b = paraproduct(f, g, calc16) + 2.0 * paraproduct(h, g, calc16)
    assert np.allclose(a.coeffs, b.coeffs)


def test_corrector_and_commutator(calc16):
    grid = calc16.grid
    a, b, c = (random_real(grid, s, band=4) for s in (4, 5, 6))
    F = corrector_F(a, b, c, calc16)
    assert F == pytest.approx(inner(a, resonant(b, c, calc16)) - inner(paraproduct(a, b, calc16), c))
    v = random_real(grid, 7, band=4, components=2)
    assert commutator_B(a, v, calc16).is_scalar
    with pytest.raises(ValueError):
        commutator_B(v, v, calc16)


def test_sobolev_norm_weights(grid16):
    f = from_function(lambda x1, x2: np.cos(3 * x1), grid16)
    # two modes of amplitude 1/2 at |k|^2 = 9
    assert sobolev_norm(f, 1.0) == pytest.approx(np.sqrt(0.5 * 10))


def test_besov_norm_variants(calc32):
    f = random_real(calc32.grid, 3, band=8)
    b22 = besov_norm(f, 0.5, 2, 2, calc32).value
    ratio = b22 / sobolev_norm(f, 0.5)
    assert 0.2 < ratio < 5.0
    assert holder_norm(f, -0.2, calc32) > 0
    with pytest.raises(ValueError):
        besov_norm(f, 0.5, 1, 1, calc32)


def test_holder_norm_monotone_in_alpha(calc32):
    f = random_real(calc32.grid, 9, band=12)
    assert holder_norm(f, -0.5, calc32) <= holder_norm(f, 0.5, calc32)
