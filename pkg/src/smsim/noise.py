"""White noise, mollification, Lorentz-gauge potential and Wick renormalization.

Normalization: E[xi_hat(k) conj(xi_hat(k'))] = (2pi)^-2 delta_{kk'}, i.e.
E[<xi, phi><xi, psi>] = int phi psi dx on the 2pi-torus.  On the grid this is
i.i.d. N(0, n^2 / (2pi)^2) samples.

Sign convention: A = perp_grad(Lap^-1 xi) = (-d_2 phi, d_1 phi) gives
d_2 A_1 - d_1 A_2 = -xi on every resolved mode (k != 0, no Nyquist
component); equivalently d_1 A_2 - d_2 A_1 = xi.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace
from typing import Literal

import numpy as np

from .heatpara import HeatCalculus, holder_norm
from .torus import (
    GridSpec,
    TorusField,
    constant,
    curl,
    divergence,
    fft_forward,
    gradient,
    inverse_laplacian,
    multiply,
    perp_gradient,
    product,
)

NOISE_VARIANCE_PER_MODE = 1.0 / (2 * np.pi) ** 2


def derive_seed(master: int, index: int) -> int:
    """Seed for stream ``index`` of a run with master seed ``master`` (SeedSequence splitting)."""
    return int(np.random.SeedSequence([int(master), int(index)]).generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class NoiseSample:
    seed: int
    grid: GridSpec
    xi: TorusField


def sample_white_noise(seed: int, grid: GridSpec) -> NoiseSample:
    rng = np.random.default_rng(int(seed))
    samples = rng.standard_normal((grid.n, grid.n)) * (grid.n / (2 * np.pi))
    return NoiseSample(int(seed), grid, fft_forward(samples, grid, real=True))


def deterministic_noise(xi: TorusField) -> NoiseSample:
    """Wrap a prescribed real field as a noise sample (seed -1)."""
    return NoiseSample(-1, xi.grid, xi)


@dataclass(frozen=True)
class Mollifier:
    """Heat: exp(-eps^2 |k|^2).  Sharp: indicator of |k| <= 1/eps."""

    kind: Literal["heat", "sharp"]
    epsilon: float

    def __post_init__(self) -> None:
        if self.kind not in ("heat", "sharp"):
            raise ValueError(f"mollifier kind must be 'heat' or 'sharp', got {self.kind!r}")
        if not self.epsilon > 0:
            raise ValueError(f"mollifier scale must be positive, got {self.epsilon}")

    def symbol(self, grid: GridSpec) -> np.ndarray:
        if self.kind == "heat":
            return np.exp(-self.epsilon**2 * grid.ksq)
        return (grid.ksq <= 1.0 / self.epsilon**2 + 1e-9).astype(float)

    def check_resolved(self, grid: GridSpec) -> None:
        if grid.n < 4.0 / self.epsilon - 1e-9:
            warnings.warn(
                f"grid n={grid.n} does not resolve mollifier scale eps={self.epsilon} (need n >= 4/eps)",
                stacklevel=3,
            )


def mollify(xi: TorusField, moll: Mollifier) -> TorusField:
    return multiply(xi, moll.symbol(xi.grid))


def build_potential(xi: NoiseSample | TorusField, moll: Mollifier | None = None) -> TorusField:
    """A_eps = perp_grad Lap^-1 (rho_eps * xi), divergence-free."""
    field_ = xi.xi if isinstance(xi, NoiseSample) else xi
    if moll is not None:
        moll.check_resolved(field_.grid)
        field_ = mollify(field_, moll)
    A = perp_gradient(inverse_laplacian(field_))
    _assert_lorentz(A, field_)
    return A


def resolved_mask(grid: GridSpec) -> np.ndarray:
    return (grid.ksq > 0) & ~grid.nyquist_mask


def _assert_lorentz(A: TorusField, xi_eps: TorusField) -> None:
    scale = max(np.abs(xi_eps.coeffs).max(), 1.0)
    div = np.abs(divergence(A).coeffs).max()
    if div > 1e-10 * scale:
        raise AssertionError(f"potential is not divergence-free: {div:.3e}")
    mask = resolved_mask(A.grid)
    defect = np.abs((curl(A).coeffs[0] + xi_eps.coeffs[0])[mask]).max(initial=0.0)
    if defect > 1e-10 * scale:
        raise AssertionError(f"curl(A) != -xi_eps on resolved modes: {defect:.3e}")


def renorm_constant(moll: Mollifier | None, grid: GridSpec) -> float:
    """c_eps = E[A_eps(0) . A_eps(0)] as an exact sum over the grid's modes.

    Equals (2pi)^-2 sum_{k != 0} rho_eps(k)^2 / |k|^2 except that modes with a
    Nyquist component contribute only through their non-Nyquist derivative.
    """
    ksq = grid.ksq
    rho2 = np.ones_like(ksq) if moll is None else moll.symbol(grid) ** 2
    d1, d2 = grid.deriv_symbols
    grad2 = np.abs(d1) ** 2 + np.abs(d2) ** 2
    nz = ksq > 0
    return float(NOISE_VARIANCE_PER_MODE * np.sum(rho2[nz] * grad2[nz] / ksq[nz] ** 2))


def continuum_renorm_slope() -> float:
    """d c_eps / d ln(1/eps) from (2pi)^-2 int_{1<|k|<1/eps} |k|^-2 dk."""
    return 1.0 / (2 * np.pi)


def quoted_renorm_constant(eps: float) -> float:
    """The asymptotic ln(eps) / (4 pi^2) as quoted in the literature (negative for eps < 1)."""
    return float(np.log(eps) / (4 * np.pi**2))


def wick_square(A_eps: TorusField, c_eps: float) -> TorusField:
    """A_eps . A_eps - c_eps, the product taken in real space with 3/2 padding."""
    if A_eps.components != 2:
        raise ValueError("wick_square expects a vector potential")
    return product(A_eps, A_eps) - c_eps


@dataclass(frozen=True)
class EnhancedPotential:
    A: TorusField
    A2: TorusField
    alpha: float
    norm_A: float
    norm_A2: float
    x_alpha_norm: float
    c_eps: float = 0.0
    provenance: dict = field(default_factory=dict, compare=False)

    @property
    def grid(self) -> GridSpec:
        return self.A.grid


def _check_alpha(alpha: float) -> None:
    if not 2.0 / 3.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (2/3, 1), got {alpha}")


def enhanced_from_fields(
    A: TorusField,
    A2: TorusField,
    alpha: float,
    calc: HeatCalculus,
    c_eps: float = 0.0,
    provenance: dict | None = None,
) -> EnhancedPotential:
    """Bundle a prescribed pair (A, A^2) with its X^alpha norms."""
    _check_alpha(alpha)
    if A.components != 2 or not A2.is_scalar:
        raise ValueError("need a vector A and a scalar A^2")
    nA = holder_norm(A, alpha - 1, calc)
    nA2 = holder_norm(A2, 2 * alpha - 2, calc)
    return EnhancedPotential(A, A2, alpha, nA, nA2, nA + nA2, c_eps, dict(provenance or {}))


def enhance(
    xi: NoiseSample,
    moll: Mollifier,
    alpha: float,
    calc: HeatCalculus,
    renormalize: bool = True,
) -> EnhancedPotential:
    """A_eps = (A_eps, A_eps.A_eps - c_eps) with its X^alpha norm.

    ``renormalize=False`` keeps the raw square (c_eps recorded as 0).
    """
    _check_alpha(alpha)
    A = build_potential(xi, moll)
    c = renorm_constant(moll, xi.grid) if renormalize else 0.0
    A2 = wick_square(A, c)
    prov = {"seed": xi.seed, "n": xi.grid.n, "mollifier": moll.kind, "epsilon": moll.epsilon, "renormalized": renormalize}
    return enhanced_from_fields(A, A2, alpha, calc, c, prov)


def x_alpha_distance(p: EnhancedPotential, q: EnhancedPotential, calc: HeatCalculus) -> float:
    """||A_p - A_q||_{C^(alpha-1)} + ||A2_p - A2_q||_{C^(2alpha-2)}."""
    return holder_norm(p.A - q.A, p.alpha - 1, calc) + holder_norm(p.A2 - q.A2, p.alpha * 2 - 2, calc)


def zero_potential(grid: GridSpec, alpha: float, calc: HeatCalculus) -> EnhancedPotential:
    return enhanced_from_fields(constant(grid, 0.0, 2), constant(grid, 0.0), alpha, calc)


def gauge_shift(pot: EnhancedPotential, f: TorusField, calc: HeatCalculus) -> EnhancedPotential:
    """(A + grad f, A^2 + 2 A.grad f + |grad f|^2) for a smooth real f (|k| <= n/8)."""
    if not f.is_scalar:
        raise ValueError("gauge function must be scalar")
    grid = f.grid
    outside = np.sqrt(grid.ksq) > grid.n / 8
    scale = max(np.abs(f.coeffs).max(), 1e-300)
    if np.abs(f.coeffs[0][outside]).max(initial=0.0) > 1e-12 * scale:
        raise ValueError(f"gauge function must be band-limited to |k| <= n/8 = {grid.n // 8}")
    gf = gradient(f)
    A = pot.A + gf
    A2 = pot.A2 + 2.0 * product(pot.A, gf) + product(gf, gf)
    prov = dict(pot.provenance, gauge_shift=True)
    out = enhanced_from_fields(A, A2, pot.alpha, calc, pot.c_eps, prov)
    return out


def with_provenance(pot: EnhancedPotential, **extra) -> EnhancedPotential:
    return replace(pot, provenance=dict(pot.provenance, **extra))
