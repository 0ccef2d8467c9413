import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from smsim.noise import (
    Mollifier,
    build_potential,
    continuum_renorm_slope,
    derive_seed,
    enhance,
    gauge_shift,
    quoted_renorm_constant,
    renorm_constant,
    sample_white_noise,
    wick_square,
    x_alpha_distance,
    zero_potential,
)
from smsim.torus import GridSpec, curl, divergence, from_function, product

seeds = st.integers(0, 2**31 - 1)


def test_noise_deterministic(grid16):
    a = sample_white_noise(5, grid16)
    b = sample_white_noise(5, grid16)
    assert np.array_equal(a.xi.coeffs, b.xi.coeffs)
    assert not np.array_equal(a.xi.coeffs, sample_white_noise(6, grid16).xi.coeffs)
    assert a.xi.real


def test_noise_variance_per_mode():
    grid = GridSpec(64)
    c = np.stack([sample_white_noise(s, grid).xi.coeffs[0] for s in range(40)])
    var = np.mean(np.abs(c[:, 1:5, 1:5]) ** 2)
    assert var == pytest.approx(1 / (2 * np.pi) ** 2, rel=0.1)


def test_derive_seed_distinct():
    seeds_ = {derive_seed(0, i) for i in range(100)}
    assert len(seeds_) == 100
    assert derive_seed(3, 1) == derive_seed(3, 1)


@settings(max_examples=10, deadline=None)
@given(seeds, st.sampled_from(["heat", "sharp"]))
def test_potential_lorentz_gauge(seed, kind):
    grid = GridSpec(32)
    xi = sample_white_noise(seed, grid)
    A = build_potential(xi, Mollifier(kind, 0.125))
    assert np.abs(divergence(A).coeffs).max() < 1e-10
    xe = xi.xi.with_coeffs(xi.xi.coeffs * Mollifier(kind, 0.125).symbol(grid))
    keep = (grid.ksq > 0) & ~grid.nyquist_mask
    assert np.allclose(curl(A).coeffs[0][keep], -xe.coeffs[0][keep])


def test_mollifier_validation(grid16):
    with pytest.raises(ValueError):
        Mollifier("box", 0.1)
    with pytest.raises(ValueError):
        Mollifier("heat", 0.0)
    with pytest.warns(UserWarning):
        Mollifier("heat", 0.05).check_resolved(grid16)


def test_renorm_constant_is_expected_square():
    grid = GridSpec(32)
    moll = Mollifier("heat", 0.25)
    c = renorm_constant(moll, grid)
    # Monte Carlo mean of |A_eps|^2 over seeds and grid points
    vals = [np.mean(np.sum(build_potential(sample_white_noise(s, grid), moll).values() ** 2, axis=0)) for s in range(600)]
    assert np.mean(vals) == pytest.approx(c, rel=0.05)


def test_renorm_constant_monotone_and_slope():
    grid = GridSpec(256)
    eps = [0.25, 0.125, 0.0625]
    cs = [renorm_constant(Mollifier("heat", e), grid) for e in eps]
    assert cs[0] < cs[1] < cs[2]
    slope = (cs[2] - cs[0]) / np.log(4)
    assert slope == pytest.approx(continuum_renorm_slope(), rel=0.05)
    assert quoted_renorm_constant(0.25) < 0


def test_sharp_constant_exact_count():
    # sharp eps=1: modes |k|^2 = 1 (four of them), each contributing 1/|k|^2
    grid = GridSpec(16)
    assert renorm_constant(Mollifier("sharp", 1.0), grid) == pytest.approx(4 / (2 * np.pi) ** 2)
    assert 4 / (2 * np.pi) ** 2 == pytest.approx(1 / np.pi**2)


def test_wick_square_mean(calc32):
    grid = calc32.grid
    moll = Mollifier("heat", 0.125)
    pot = enhance(sample_white_noise(3, grid), moll, 0.9, calc32)
    assert pot.c_eps == pytest.approx(renorm_constant(moll, grid))
    W = wick_square(pot.A, pot.c_eps)
    assert np.allclose(W.coeffs, pot.A2.coeffs)
    raw = enhance(sample_white_noise(3, grid), moll, 0.9, calc32, renormalize=False)
    assert raw.c_eps == 0.0
    assert (raw.A2 - pot.A2).mean()[0].real == pytest.approx(pot.c_eps)
    with pytest.raises(ValueError):
        wick_square(pot.A2, 0.0)


def test_alpha_range(calc16):
    xi = sample_white_noise(1, calc16.grid)
    for bad in (0.5, 1.0):
        with pytest.raises(ValueError):
            enhance(xi, Mollifier("heat", 0.25), bad, calc16)


def test_x_alpha_distance(calc32):
    grid = calc32.grid
    xi = sample_white_noise(1, grid)
    p = enhance(xi, Mollifier("heat", 0.25), 0.9, calc32)
    q = enhance(xi, Mollifier("heat", 0.125), 0.9, calc32)
    assert x_alpha_distance(p, p, calc32) == 0.0
    assert x_alpha_distance(p, q, calc32) == pytest.approx(x_alpha_distance(q, p, calc32))
    z = zero_potential(grid, 0.9, calc32)
    assert x_alpha_distance(p, z, calc32) == pytest.approx(p.x_alpha_norm)


def test_gauge_shift(calc32):
    grid = calc32.grid
    pot = enhance(sample_white_noise(1, grid), Mollifier("heat", 0.25), 0.9, calc32)
    f = from_function(lambda x1, x2: np.cos(x1), grid)
    sh = gauge_shift(pot, f, calc32)
    from smsim.torus import gradient

    gf = gradient(f)
    assert np.allclose(sh.A.coeffs, (pot.A + gf).coeffs)
    expect = pot.A2 + 2.0 * product(pot.A, gf) + product(gf, gf)
    assert np.allclose(sh.A2.coeffs, expect.coeffs)
    rough = from_function(lambda x1, x2: np.cos(10 * x1), grid)
    with pytest.raises(ValueError):
        gauge_shift(pot, rough, calc32)
