"""Acceptance criteria 1-14; each test prints one PASS/FAIL line (collected in the terminal summary)."""

import math
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from smsim.domain import build_domain_map, gamma, phi_s
from smsim.experiments import (
    WEYL_LEVEL,
    band_limited,
    constant_potential,
    linear_fit,
    sanity_spectra,
    smooth_potential,
    symmetry_defect,
    weyl_count,
)
from smsim.heatpara import (
    HeatCalculus,
    bony_remainder,
    holder_norm,
    intertwined_paraproduct,
    paraproduct,
    resonant,
)
from smsim.noise import Mollifier, enhance, renorm_constant, quoted_renorm_constant, sample_white_noise, x_alpha_distance
from smsim.spectra import (
    assemble,
    eigensolve,
    eigenvalue_stability,
    gauge_experiment,
    coercive_shift,
    resolvent_distance,
    sandwich_check,
)
from smsim.torus import GridSpec, from_function, laplacian, product

ALPHA = 0.9
pytestmark = pytest.mark.acceptance


def report(num: int, title: str, passed: bool, detail: str) -> None:
    line = f"CRITERION {num:>2} [{'PASS' if passed else 'FAIL'}] {title}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def budget(elapsed: float, limit: float | None) -> tuple[bool, str]:
    if limit is None:
        return True, f"{elapsed:.1f} s"
    return elapsed < limit, f"{elapsed:.1f} s (budget {limit:g} s)"


@pytest.fixture(scope="module")
def g64():
    return GridSpec(64)


@pytest.fixture(scope="module")
def c64(g64):
    return HeatCalculus(g64)


def _pairs(grid, count, seed):
    rng = np.random.default_rng(seed)
    return [(band_limited(grid, rng, grid.n / 4), band_limited(grid, rng, grid.n / 4)) for _ in range(count)]


def test_c01_bony_exactness(g64, c64):
    t0 = time.perf_counter()
    worst = 0.0
    for f, g in _pairs(g64, 20, 1):
        rest = product(f, g) - paraproduct(f, g, c64) - paraproduct(g, f, c64) - resonant(f, g, c64) - bony_remainder(f, g, c64)
        worst = max(worst, rest.sup() / (f.sup() * g.sup()))
    ok_t, t = budget(time.perf_counter() - t0, 10)
    ok = worst < 1e-6 and ok_t
    report(1, "Bony decomposition exactness", ok, f"max sup defect {worst:.2e} (tol 1e-6), {t}")
    assert ok


def test_c02_intertwining(g64, c64):
    worst = 0.0
    nz = g64.ksq > 0
    for f, g in _pairs(g64, 20, 2):
        lhs = laplacian(intertwined_paraproduct(f, g, c64)).coeffs[:, nz]
        rhs = paraproduct(f, laplacian(g), c64).coeffs[:, nz]
        worst = max(worst, np.linalg.norm(lhs - rhs) / np.linalg.norm(rhs))
    ok = worst < 1e-8
    report(2, "Intertwining Lap P~ = P Lap", ok, f"max relative residual {worst:.2e} (tol 1e-8)")
    assert ok


def test_c03_renorm_divergence():
    t0 = time.perf_counter()
    grid = GridSpec(256)
    ladder = [0.25 / 2**j for j in range(10) if 0.25 / 2**j >= 16 / grid.n - 1e-12]
    cs = [renorm_constant(Mollifier("heat", e), grid) for e in ladder]
    x = np.log(1 / np.asarray(ladder))
    slope, _, r2 = linear_fit(x, cs)
    oracle = (cs[-1] - cs[0]) / (x[-1] - x[0])
    rel = abs(slope / oracle - 1)
    ok_t, t = budget(time.perf_counter() - t0, 5)
    ok = r2 > 0.99 and rel < 0.05 and ok_t
    quoted = ", ".join(f"{quoted_renorm_constant(e):.4f}" for e in ladder)
    report(3, "Renormalization-constant divergence", ok,
           f"R^2 {r2:.6f}, slope {slope:.5f} vs mode-sum {oracle:.5f} ({rel:.1e} rel), "
           f"1/(2pi) = {1 / (2 * np.pi):.5f}; c_eps {', '.join(f'{c:.4f}' for c in cs)} vs quoted {quoted}; {t}")
    assert ok


def test_c04_wick_cauchy():
    t0 = time.perf_counter()
    grid = GridSpec(256)
    calc = HeatCalculus(grid)
    ladder = [1.0, 0.5, 0.25, 0.125, 0.0625]  # 1/eps <= n/16
    good, worst = 0, []
    for seed in range(1, 11):
        xi = sample_white_noise(seed, grid)
        W = [enhance(xi, Mollifier("heat", e), ALPHA, calc).A2 for e in ladder]
        d = [holder_norm(a - b, 2 * ALPHA - 2, calc) for a, b in zip(W, W[1:])]
        good += all(p > q for p, q in zip(d, d[1:]))
        worst.append(max(q / p for p, q in zip(d, d[1:])))
    ok_t, t = budget(time.perf_counter() - t0, 120)
    ok = good >= 8 and ok_t
    report(4, "Wick-square Cauchy convergence", ok,
           f"{good}/10 seeds decreasing (need 8); worst step ratio per seed {min(worst):.2f}..{max(worst):.2f}; {t}")
    assert ok


def test_c05_renorm_ablation():
    grid = GridSpec(128)
    calc = HeatCalculus(grid)
    ladder = [0.25, 0.125, 0.0625, 0.03125]
    ren = eigenvalue_stability(1, grid, ALPHA, ladder, 5, calc, True, "sharp", "lanczos")
    raw = eigenvalue_stability(1, grid, ALPHA, ladder, 5, calc, False, "sharp", "lanczos")
    ren_shrink = float(np.mean(ren.shrink_factors()))
    raw_shrink = float(np.mean(raw.shrink_factors()))
    dc = np.diff(ren.c_eps)
    drift = raw.signed_differences.mean(axis=1)
    rel = np.abs(drift - dc) / np.abs(dc)
    ok = ren_shrink >= 1.3 and raw_shrink < 1.3 and rel.max() <= 0.2
    report(5, "Renormalization ablation (sharp mollifier)", ok,
           f"renormalized shrink {ren_shrink:.2f} (>= 1.3), unrenormalized shrink {raw_shrink:.2f} (< 1.3), "
           f"drift vs c-increment rel err {', '.join(f'{r:.2f}' for r in rel)} (<= 0.2)")
    assert ok


def test_c06_flat_spectrum():
    t0 = time.perf_counter()
    s = sanity_spectra(ALPHA, 32)
    ok_t, t = budget(time.perf_counter() - t0, 30)
    ok = s["flat_error"] < 1e-10 and s["N100"] == 317 and ok_t
    report(6, "Flat-spectrum sanity", ok, f"max error {s['flat_error']:.1e} (tol 1e-10), N(100) = {s['N100']} (317), {t}")
    assert ok


def test_c07_constant_potential():
    grid = GridSpec(32)
    calc = HeatCalculus(grid)
    spec = eigensolve(assemble(constant_potential(grid, ALPHA, calc)), 40, "dense")
    k1, k2 = grid.kvec
    keep = ~grid.nyquist_mask
    exact = np.sort(np.concatenate([((k1 - 1.0) ** 2 + k2**2)[keep], grid.ksq[~keep]]))[:40]
    err = float(np.abs(spec.eigenvalues - exact).max())
    ok = err < 1e-10
    report(7, "Constant-potential closed form", ok, f"max |lambda - ((k1-1)^2 + k2^2)| = {err:.1e} over 40 (tol 1e-10)")
    assert ok


def test_c08_eigenvalue_stability():
    t0 = time.perf_counter()
    grid = GridSpec(128)
    tab = eigenvalue_stability(1, grid, ALPHA, [0.25, 0.125, 0.0625, 0.03125], 10, HeatCalculus(grid), True, "heat", "lanczos")
    sf = tab.shrink_factors()
    ok_t, t = budget(time.perf_counter() - t0, 600)
    ok = float(np.mean(sf)) >= 1.3 and ok_t
    d = tab.differences.mean(axis=1)
    report(8, "Eigenvalue stability under regularization", ok,
           f"mean Cauchy differences {', '.join(f'{x:.4f}' for x in d)}; shrink {', '.join(f'{x:.2f}' for x in sf)}, "
           f"mean {np.mean(sf):.2f} (>= 1.3); {t}")
    assert ok


def test_c09_sandwich(g64, c64):
    lower, slopes = [], []
    for seed in range(1, 6):
        pot = enhance(sample_white_noise(seed, g64), Mollifier("heat", 4 / g64.n), ALPHA, c64)
        spec = eigensolve(assemble(pot), 30, "lanczos")
        rep = sandwich_check(spec, pot, 0.3, None, c64)
        lower.append(bool(np.all(rep.lam >= rep.lower_simple)))
        slopes.append(rep.slope)
    hi = 1.3**2 + 0.2
    ok = all(lower) and all(0.8 <= s <= hi for s in slopes)
    report(9, "Eigenvalue sandwich", ok,
           f"lower bound holds {sum(lower)}/5; slopes {', '.join(f'{s:.3f}' for s in slopes)} in [0.8, {hi:.2f}]")
    assert ok


def test_c10_weyl(g64, c64):
    t0 = time.perf_counter()
    M = weyl_count()
    ratios, tops = [], []
    for seed in range(1, 11):
        pot = enhance(sample_white_noise(seed, g64), Mollifier("heat", 4 / g64.n), ALPHA, c64)
        ev = eigensolve(assemble(pot), M, "dense").eigenvalues
        tops.append(ev[-1])
        ratios.append(np.searchsorted(ev, WEYL_LEVEL + 1e-9, side="right") / WEYL_LEVEL)
    mean = float(np.mean(ratios))
    ok_t, t = budget(time.perf_counter() - t0, 1200)
    ok = abs(mean - math.pi) <= 0.5 and min(tops) >= WEYL_LEVEL and ok_t
    report(10, "Weyl ratio", ok, f"mean N({WEYL_LEVEL:g})/{WEYL_LEVEL:g} = {mean:.4f} (pi +- 0.5), per-seed "
           f"{min(ratios):.3f}..{max(ratios):.3f}, M = {M}; {t}")
    assert ok


def test_c11_gauge(g64, c64):
    g32 = GridSpec(32)
    c32 = HeatCalculus(g32)
    smooth = gauge_experiment(smooth_potential(g32, ALPHA, c32), from_function(lambda a, b: np.cos(a), g32), 20, c32, "dense")
    pot = enhance(sample_white_noise(1, g64), Mollifier("heat", 4 / g64.n), ALPHA, c64)
    rough = gauge_experiment(pot, from_function(lambda a, b: np.cos(a), g64), 20, c64, "lanczos")
    ok = smooth["max_relative_gap"] < 1e-8 and rough["max_relative_gap"] < 1e-6
    report(11, "Gauge covariance", ok,
           f"smooth gap {smooth['max_relative_gap']:.1e} (tol 1e-8), random gap {rough['max_relative_gap']:.1e} (tol 1e-6); "
           f"intertwining residual smooth {smooth['intertwining_residual']:.1e}, random {rough['intertwining_residual']:.1e} (reported)")
    assert ok


@pytest.fixture(scope="module")
def domain64(g64, c64):
    pot = enhance(sample_white_noise(1, g64), Mollifier("heat", 4 / g64.n), ALPHA, c64)
    return pot, build_domain_map(pot, None, c64)


def test_c12_gamma(domain64, g64):
    pot, dm = domain64
    rng = np.random.default_rng(12)
    bound = 1 - dm.m_calibrated * dm.s ** (ALPHA / 2) * pot.x_alpha_norm
    trips, iters, ratios = [], [], []
    for _ in range(20):
        v = band_limited(g64, rng, g64.n / 8, real=False)
        u = gamma(v, dm, tol=1e-12, max_iter=60)
        trips.append((phi_s(u.u, dm) - v).norm() / v.norm())
        iters.append(u.iterations)
        ratios.append(u.u.norm() * bound / v.norm())
    ok = max(trips) < 1e-10 and max(iters) <= 60 and max(ratios) <= 1.0
    report(12, "Gamma machinery", ok,
           f"round trip {max(trips):.1e} (tol 1e-10), iterations <= {max(iters)} (60), "
           f"||Gamma v|| (1 - m s^(a/2) ||A||) / ||v|| <= {max(ratios):.3f} (1), s = {dm.s:g}, s_min = {dm.s_min:.3g}")
    assert ok


def test_c13_symmetry(domain64, g64):
    pot, dm = domain64
    rng = np.random.default_rng(13)
    worst = 0.0
    for _ in range(10):
        u = gamma(band_limited(g64, rng, g64.n / 8, real=False), dm)
        v = gamma(band_limited(g64, rng, g64.n / 8, real=False), dm)
        worst = max(worst, symmetry_defect(u, v, dm, pot))
    ok = worst < 1e-6
    report(13, "Symmetry of H on paracontrolled pairs", ok, f"max defect {worst:.1e} (tol 1e-6)")
    assert ok


def test_c14_resolvent_ladder(g64, c64):
    ladder = [0.5, 0.25, 0.125, 0.0625]
    xi = sample_white_noise(1, g64)
    pots = [enhance(xi, Mollifier("heat", e), ALPHA, c64) for e in ladder]
    k = coercive_shift(pots[-1], 0.3, c64)
    ops = [assemble(p, k) for p in pots]
    ratios = [resolvent_distance(a, b, k) / x_alpha_distance(p, q, c64)
              for a, b, p, q in zip(ops, ops[1:], pots, pots[1:])]
    band = max(ratios) / min(ratios)
    ok = band <= 3.0
    report(14, "Resolvent ladder", ok, f"ratios {', '.join(f'{r:.3e}' for r in ratios)}, band {band:.2f} (<= 3), k = {k:.3e}")
    assert ok
