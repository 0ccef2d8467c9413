"""Heat-semigroup paraproduct calculus with L = -Laplacian.

All operators are Fourier multipliers in |k|^2:

    Q_t^(b)(lam) = (t lam)^b exp(-t lam) / (b-1)!
    P_t^(b)(lam) = p_b(t lam) exp(-t lam),   p_b(x) = sum_{j<b} x^j / j!

and satisfy -t d/dt P_t = Q_t, so f = int_0^1 Q_t f dt/t + P_1 f.

Bilinear operators are integrals over t evaluated with a Gauss-Legendre rule
in log t.  The product expansion

    fg = int_0^1 [Q_t(P_t f P_t g) + P_t(Q_t f P_t g) + P_t(P_t f Q_t g)] dt/t
         + P_1(P_1 f P_1 g)

is split as ``fg = P_f g + P_g f + Pi(f, g) + remainder(f, g)`` with the
paraproduct

    P_f g = c_b int_0^1 Q_t(P_t f . Q_t g) dt/t,   c_b = 4^b ((b-1)!)^2 / (2b-1)!

(c_b makes the low-high symbol tend to 1), the t = 1 boundary term as the
remainder, and the resonant term taking everything else.  Every integrand is
evaluated on the same nodes, so the split is exact up to the quadrature error
of the expansion itself.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from math import factorial

import numpy as np

from .torus import (
    GridSpec,
    TorusField,
    _same_grid,
    divergence,
    inner,
    inverse_laplacian,
    laplacian,
    padded_to_coeffs,
    padded_values,
)

# nodes per chunk in batched transforms; bounds memory at large n
_CHUNK_ELEMS = 2**22


def q_symbol(t, lam, b: int) -> np.ndarray:
    x = np.multiply.outer(np.atleast_1d(t), lam) if np.ndim(t) else t * lam
    return x**b * np.exp(-x) / factorial(b - 1)


def p_symbol(t, lam, b: int) -> np.ndarray:
    x = np.multiply.outer(np.atleast_1d(t), lam) if np.ndim(t) else t * lam
    poly = sum(x**j / factorial(j) for j in range(b))
    return poly * np.exp(-x)


def paraproduct_normalization(b: int) -> float:
    """c_b with c_b * int_0^inf Q_t(lam)^2 dt/t = 1."""
    return 4**b * factorial(b - 1) ** 2 / factorial(2 * b - 1)


@lru_cache(maxsize=None)
def log_gauss_rule(lo: float, hi: float, nodes: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes/weights for int_lo^hi g(t) dt/t in the variable log t."""
    x, w = np.polynomial.legendre.leggauss(nodes)
    a, b = np.log(lo), np.log(hi)
    tau = 0.5 * (b - a) * x + 0.5 * (a + b)
    t = np.exp(tau)
    t.setflags(write=False)
    w = 0.5 * (b - a) * w
    w.setflags(write=False)
    return t, w


@dataclass(frozen=True)
class HeatCalculus:
    """Precomputed multipliers and quadrature for one grid.

    ``nodes`` Gauss-Legendre nodes in log t on ``[t_min, 1]``.
    """

    grid: GridSpec
    b: int = 2
    nodes: int = 96
    t_min: float = 1e-8
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self) -> None:
        if not 2 <= self.b <= 6:
            raise ValueError(f"cancellation order b must be in [2, 6], got {self.b}")
        if self.nodes < 4:
            raise ValueError("need at least 4 quadrature nodes")

    @property
    def t(self) -> np.ndarray:
        return self.rule(1.0)[0]

    @property
    def weights(self) -> np.ndarray:
        return self.rule(1.0)[1]

    @property
    def cb(self) -> float:
        return paraproduct_normalization(self.b)

    def rule(self, s: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
        """Rule for int_0^s; nodes span [s*t_min, s]."""
        return log_gauss_rule(float(s) * self.t_min, float(s), self.nodes)

    def symbols(self, s: float = 1.0) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """(t, w, Q_t(|k|^2), P_t(|k|^2)) with multipliers of shape (nodes, n, n)."""
        key = ("sym", float(s))
        if key not in self._cache:
            t, w = self.rule(s)
            lam = self.grid.ksq
            self._cache[key] = (t, w, q_symbol(t, lam, self.b), p_symbol(t, lam, self.b))
        return self._cache[key]

    @cached_property
    def chunk(self) -> int:
        m = 3 * self.grid.n // 2
        return max(1, _CHUNK_ELEMS // (m * m))

    def q_symbol(self, t: float) -> np.ndarray:
        return q_symbol(t, self.grid.ksq, self.b)

    def p_symbol(self, t: float) -> np.ndarray:
        return p_symbol(t, self.grid.ksq, self.b)


def q_apply(f: TorusField, t: float, b: int = 2) -> TorusField:
    if not 0 < t <= 1:
        raise ValueError(f"Q_t needs t in (0, 1], got {t}")
    return f.with_coeffs(f.coeffs * q_symbol(t, f.grid.ksq, b))


def p_apply(f: TorusField, t: float, b: int = 2) -> TorusField:
    if not 0 <= t <= 1:
        raise ValueError(f"P_t needs t in [0, 1], got {t}")
    if t == 0:
        return f
    return f.with_coeffs(f.coeffs * p_symbol(t, f.grid.ksq, b))


# --- batched bilinear kernels ------------------------------------------------


def _pairs(f: TorusField, g: TorusField) -> tuple[list[tuple[np.ndarray, np.ndarray]], bool]:
    """Component pairing: scalar-scalar, broadcast scalar-vector, or vector dot vector."""
    fc, gc = f.coeffs, g.coeffs
    if f.components == g.components == 2:
        return [(fc[0], gc[0]), (fc[1], gc[1])], True
    if f.components == 1 and g.components == 1:
        return [(fc[0], gc[0])], True
    if f.components == 1:
        return [(fc[0], gc[0]), (fc[0], gc[1])], False
    return [(fc[0], gc[0]), (fc[1], gc[0])], False


def _bilinear(f: TorusField, g: TorusField, calc: HeatCalculus, kernel, s: float = 1.0) -> TorusField:
    grid = _same_grid(f, g)
    if grid != calc.grid:
        raise ValueError("field grid does not match the heat calculus grid")
    pairs, summed = _pairs(f, g)
    outs = [kernel(a, b, calc, s) for a, b in pairs]
    coeffs = np.sum(outs, axis=0)[None] if summed else np.stack(outs)
    return TorusField(grid, coeffs, f.real and g.real, _checked=True)


def _para_kernel(fa: np.ndarray, ga: np.ndarray, calc: HeatCalculus, s: float) -> np.ndarray:
    n = calc.grid.n
    t, w, Q, P = calc.symbols(s)
    out = np.zeros((n, n), complex)
    for lo in range(0, t.size, calc.chunk):
        sl = slice(lo, lo + calc.chunk)
        prod = padded_values(P[sl] * fa, n) * padded_values(Q[sl] * ga, n)
        out += np.einsum("j,jkl->kl", w[sl], Q[sl] * padded_to_coeffs(prod, n))
    return calc.cb * out


def _resonant_kernel(fa: np.ndarray, ga: np.ndarray, calc: HeatCalculus, s: float) -> np.ndarray:
    n = calc.grid.n
    t, w, Q, P = calc.symbols(s)
    cb = calc.cb
    out = np.zeros((n, n), complex)
    for lo in range(0, t.size, calc.chunk):
        sl = slice(lo, lo + calc.chunk)
        Pf, Pg = padded_values(P[sl] * fa, n), padded_values(P[sl] * ga, n)
        Qf, Qg = padded_values(Q[sl] * fa, n), padded_values(Q[sl] * ga, n)
        pp = padded_to_coeffs(Pf * Pg, n)
        mixed = padded_to_coeffs(Qf * Pg + Pf * Qg, n)
        integrand = Q[sl] * pp + P[sl] * mixed - cb * Q[sl] * mixed
        out += np.einsum("j,jkl->kl", w[sl], integrand)
    return out


def _expansion_kernel(fa: np.ndarray, ga: np.ndarray, calc: HeatCalculus, s: float) -> np.ndarray:
    """Quadrature of the three-term product expansion (no split)."""
    n = calc.grid.n
    t, w, Q, P = calc.symbols(s)
    out = np.zeros((n, n), complex)
    for lo in range(0, t.size, calc.chunk):
        sl = slice(lo, lo + calc.chunk)
        Pf, Pg = padded_values(P[sl] * fa, n), padded_values(P[sl] * ga, n)
        Qf, Qg = padded_values(Q[sl] * fa, n), padded_values(Q[sl] * ga, n)
        integrand = Q[sl] * padded_to_coeffs(Pf * Pg, n) + P[sl] * padded_to_coeffs(Qf * Pg + Pf * Qg, n)
        out += np.einsum("j,jkl->kl", w[sl], integrand)
    return out


def _remainder_kernel(fa: np.ndarray, ga: np.ndarray, calc: HeatCalculus, s: float) -> np.ndarray:
    n = calc.grid.n
    P1 = calc.p_symbol(1.0)
    return P1 * padded_to_coeffs(padded_values(P1 * fa, n) * padded_values(P1 * ga, n), n)


def paraproduct(f: TorusField, g: TorusField, calc: HeatCalculus) -> TorusField:
    """P_f g (low-frequency f modulating high-frequency g)."""
    return _bilinear(f, g, calc, _para_kernel)


def resonant(f: TorusField, g: TorusField, calc: HeatCalculus) -> TorusField:
    """Pi(f, g), symmetric in its arguments."""
    return _bilinear(f, g, calc, _resonant_kernel)


def bony_remainder(f: TorusField, g: TorusField, calc: HeatCalculus) -> TorusField:
    """P_1(P_1 f . P_1 g), the smooth t = 1 boundary term."""
    return _bilinear(f, g, calc, _remainder_kernel)


def product_expansion(f: TorusField, g: TorusField, calc: HeatCalculus) -> TorusField:
    """fg rebuilt from the quadrature of the expansion plus the boundary term."""
    return _bilinear(f, g, calc, _expansion_kernel) + bony_remainder(f, g, calc)


def intertwined_paraproduct(f: TorusField, g: TorusField, calc: HeatCalculus) -> TorusField:
    """P~_f g := Lap^{-1} P_f(Lap g), zero mean."""
    return inverse_laplacian(paraproduct(f, laplacian(g), calc))


def truncated_paraproduct(f: TorusField, g: TorusField, s: float, calc: HeatCalculus) -> TorusField:
    """P~^s_f g: the intertwined paraproduct with the t-integral restricted to (0, s]."""
    if not 0 < s <= 1:
        raise ValueError(f"truncation scale must lie in (0, 1], got {s}")
    return inverse_laplacian(_bilinear(f, laplacian(g), calc, _para_kernel, s=s))


def corrector_F(a: TorusField, b_field: TorusField, c: TorusField, calc: HeatCalculus) -> complex:
    """F(a, b, c) = <a, Pi(b, c)> - <P_a b, c>  (real for real inputs)."""
    return inner(a, resonant(b_field, c, calc)) - inner(paraproduct(a, b_field, calc), c)


def commutator_B(a: TorusField, b_vec: TorusField, calc: HeatCalculus) -> TorusField:
    """B(a, b) = div(P_a b) - P_a div(b) for a scalar ``a`` and vector ``b``."""
    if not a.is_scalar:
        raise ValueError("commutator_B expects a scalar first argument")
    if b_vec.components != 2:
        raise ValueError(f"commutator_B expects a 2-component field, got {b_vec.components}")
    return divergence(paraproduct(a, b_vec, calc)) - paraproduct(a, divergence(b_vec), calc)


# --- norms ---------------------------------------------------------------------


@dataclass(frozen=True)
class BesovNormReport:
    alpha: float
    p: float
    q: float
    value: float
    base: float
    per_scale: list[tuple[float, float]]


def _lp(coeffs: np.ndarray, n: int, p: float) -> np.ndarray:
    """L^p norms (p in {2, inf}) over the trailing (n, n) axes; leading axes kept."""
    if p == 2:
        return np.sqrt(np.sum(np.abs(coeffs) ** 2, axis=(-2, -1)))
    vals = np.fft.ifft2(coeffs) * n**2
    return np.abs(vals).max(axis=(-2, -1))


def besov_norm(f: TorusField, alpha: float, p: float, q: float, calc: HeatCalculus) -> BesovNormReport:
    """Discrete B^alpha_{p,q} norm: ||e^{Lap} f||_p plus the scale aggregate of t^{-alpha/2}||Q_t f||_p.

    Supported: (p, q) = (2, 2) (Sobolev) and (inf, inf) (Holder).  Vector
    fields are measured componentwise and summed.
    """
    pq = (float(p), float(q))
    if pq not in ((2.0, 2.0), (np.inf, np.inf)):
        raise ValueError(f"unsupported (p, q) = {pq}; use (2, 2) or (inf, inf)")
    if abs(alpha) >= 2 * calc.b:
        raise ValueError(f"|alpha| must be < 2b = {2 * calc.b}")
    if f.grid != calc.grid:
        raise ValueError("field grid does not match the heat calculus grid")
    n = calc.grid.n
    t, w, Q, _ = calc.symbols(1.0)
    heat1 = np.exp(-calc.grid.ksq)
    total = 0.0
    per_scale = np.zeros(t.size)
    base = 0.0
    for comp in f.coeffs:
        b0 = float(_lp(heat1 * comp, n, pq[0]))
        blocks = np.concatenate(
            [_lp(Q[lo : lo + calc.chunk] * comp, n, pq[0]) for lo in range(0, t.size, calc.chunk)]
        )
        scaled = t ** (-alpha / 2) * blocks
        agg = float(scaled.max()) if pq[1] == np.inf else float(np.sqrt(np.sum(w * scaled**2)))
        total += b0 + agg
        base += b0
        per_scale += scaled
    return BesovNormReport(alpha, pq[0], pq[1], total, base, list(zip(t.tolist(), per_scale.tolist())))


def holder_norm(f: TorusField, alpha: float, calc: HeatCalculus) -> float:
    return besov_norm(f, alpha, np.inf, np.inf, calc).value


def sobolev_norm(f: TorusField, beta: float) -> float:
    """(sum (1+|k|^2)^beta |fhat|^2)^(1/2), summed over components."""
    wgt = (1.0 + f.grid.ksq) ** beta
    return float(np.sqrt(np.sum(wgt * np.abs(f.coeffs) ** 2)))


def reproducing_defect(f: TorusField, calc: HeatCalculus) -> float:
    """||int_0^1 Q_t f dt/t + P_1 f - f|| / ||f|| under the calculus' quadrature."""
    _, w, Q, _ = calc.symbols(1.0)
    mult = np.einsum("j,jkl->kl", w, Q) + calc.p_symbol(1.0)
    return float(np.linalg.norm((mult - 1.0) * f.coeffs) / max(f.norm(), 1e-300))
