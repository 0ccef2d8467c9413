"""Paracontrolled domain of the magnetic Laplacian.

u is paracontrolled when u = P~_u X1 + P~_{grad u} . X2 + u#, with
X1 = Lap^-1 A2 and X2 = Lap^-1 (2i A).  The truncated map
Phi^s(u) = u - P~^s_u X1 - P~^s_{grad u} . X2 is a small perturbation of the
identity for s below the thresholds s_beta(A); Gamma is its inverse, computed
by Neumann iteration.

Operator action (s-independent):
    H u = -Lap Phi^s(u) + R(u) + Psi^s(u),
    R(u) = P_{2iA} grad u + Pi(grad u, 2iA) + P_{A2} u + Pi(u, A2) + boundary terms,
    Psi^s(u) = Lap (P~ - P~^s)_u X1 + Lap (P~ - P~^s)_{grad u} . X2.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .calibration import K_CALIBRATED, M_CALIBRATED
from .heatpara import (
    HeatCalculus,
    bony_remainder,
    corrector_F,
    commutator_B,
    paraproduct,
    resonant,
    sobolev_norm,
    truncated_paraproduct,
)
from .noise import EnhancedPotential
from .torus import TorusField, gradient, inner, inverse_laplacian, laplacian

log = logging.getLogger(__name__)


def beta_star(beta: float, alpha: float) -> float:
    """1 - beta on [0, 1), 2 alpha - beta on [1, 2 alpha)."""
    if 0 <= beta < 1:
        return 1.0 - beta
    if 1 <= beta < 2 * alpha:
        return 2 * alpha - beta
    raise ValueError(f"beta={beta} outside [0, 2 alpha) for alpha={alpha}")


def domain_betas(alpha: float) -> tuple[float, ...]:
    """Regularities used downstream: L2 (Gamma), the form bound, the graph-norm bound."""
    return (0.0, 1.0 - alpha / 4, 2.0 / 3.0 + alpha)


def s_beta(beta: float, alpha: float, x_norm: float, m: float = M_CALIBRATED) -> float:
    """(beta* / (m ||A||_X))^(4 / (2 alpha - beta)); +inf for A = 0."""
    if x_norm == 0:
        return math.inf
    base = beta_star(beta, alpha) / (m * x_norm)
    return float(base ** (4.0 / (2 * alpha - beta)))


def contraction_ratio(s: float, beta: float, alpha: float, x_norm: float, m: float = M_CALIBRATED) -> float:
    """m s^((2 alpha - beta)/4) ||A||_X / beta*: the bound on ||Phi^s - 1||_{H^beta}."""
    return m * s ** ((2 * alpha - beta) / 4) * x_norm / beta_star(beta, alpha)


@dataclass(frozen=True)
class DomainMap:
    X1: TorusField
    X2: TorusField
    s: float
    alpha: float
    calc: HeatCalculus = field(repr=False)
    m_calibrated: float
    s_beta_table: dict
    x_norm: float
    pot: EnhancedPotential = field(repr=False)

    @property
    def grid(self):
        return self.X1.grid

    @property
    def s_min(self) -> float:
        return min(self.s_beta_table.values())


def build_domain_map(pot: EnhancedPotential, s: float | None = None, calc: HeatCalculus | None = None,
                     m: float = M_CALIBRATED, betas: tuple[float, ...] | None = None) -> DomainMap:
    """X1, X2 from the enhanced potential; s defaults to min s_beta / 2 (capped at 1/2)."""
    calc = calc or HeatCalculus(pot.grid)
    betas = domain_betas(pot.alpha) if betas is None else betas
    table = {float(b): s_beta(b, pot.alpha, pot.x_alpha_norm, m) for b in betas}
    s_min = min(table.values())
    if s is None:
        s = min(0.5, s_min / 2)
    if not 0 < s < 1:
        raise ValueError(f"s must lie in (0, 1), got {s}")
    for b, thr in table.items():
        if s >= thr:
            raise ValueError(f"s={s:.3e} violates threshold s_beta={thr:.3e} at beta={b:.4f}")
    X1 = inverse_laplacian(pot.A2)
    X2 = inverse_laplacian(pot.A) * 2j
    return DomainMap(X1, X2, float(s), pot.alpha, calc, m, table, pot.x_alpha_norm, pot)


def _corr(u: TorusField, dm: DomainMap, s: float | None) -> TorusField:
    """P~^s_u X1 + sum_j P~^s_{d_j u} X2_j (s=None: untruncated)."""
    s = 1.0 if s is None else s
    du = gradient(u)
    out = truncated_paraproduct(u, dm.X1, s, dm.calc)
    return out + truncated_paraproduct(du, dm.X2, s, dm.calc)


def phi_s(u: TorusField, dm: DomainMap) -> TorusField:
    if u.grid != dm.grid:
        raise ValueError("field and domain map live on different grids")
    return u - _corr(u, dm, dm.s)


@dataclass(frozen=True)
class ParacontrolledFunction:
    u: TorusField
    u_sharp: TorusField
    s: float
    residual: float
    iterations: int = 0

    def accepted(self, tol: float = 1e-8) -> bool:
        return self.residual < tol * max(self.u.norm(), 1e-300)


class GammaNotConverged(RuntimeError):
    pass


def gamma(u_sharp: TorusField, dm: DomainMap, tol: float = 1e-10, max_iter: int = 60) -> ParacontrolledFunction:
    """Phi^s inverse by u <- u# + (u - Phi^s(u)), stopped on ||Phi^s(u) - u#|| < tol ||u#||."""
    if u_sharp.grid != dm.grid:
        raise ValueError("field and domain map live on different grids")
    scale = max(u_sharp.norm(), 1e-300)
    u = u_sharp
    for it in range(1, max_iter + 1):
        corr = _corr(u, dm, dm.s)
        res = (u - corr - u_sharp).norm()
        if res < tol * scale:
            return ParacontrolledFunction(u, u_sharp, dm.s, res, it)
        u = u_sharp + corr
    corr = _corr(u, dm, dm.s)
    res = (u - corr - u_sharp).norm()
    if res < tol * scale:
        return ParacontrolledFunction(u, u_sharp, dm.s, res, max_iter)
    raise GammaNotConverged(f"Neumann iteration stalled at residual {res:.3e} after {max_iter} steps (s={dm.s:.3e})")


def paracontrolled(u: TorusField, dm: DomainMap) -> ParacontrolledFunction:
    """Wrap an arbitrary (grid-smooth) u with u# = Phi^s(u); residual 0 by construction."""
    return ParacontrolledFunction(u, phi_s(u, dm), dm.s, 0.0, 0)


def resonant_part(u: TorusField, pot: EnhancedPotential, calc: HeatCalculus) -> TorusField:
    """R(u), including the smooth boundary terms of the product expansion."""
    du = gradient(u)
    A2i = pot.A * 2j
    out = paraproduct(A2i, du, calc) + resonant(du, A2i, calc) + bony_remainder(du, A2i, calc)
    return out + paraproduct(pot.A2, u, calc) + resonant(u, pot.A2, calc) + bony_remainder(u, pot.A2, calc)


def psi_s(u: TorusField, dm: DomainMap) -> TorusField:
    return laplacian(_corr(u, dm, None) - _corr(u, dm, dm.s))


def apply_H(u: ParacontrolledFunction, dm: DomainMap, pot: EnhancedPotential | None = None,
            tol: float = 1e-8) -> TorusField:
    pot = dm.pot if pot is None else pot
    if not u.accepted(tol):
        raise ValueError(f"u is not paracontrolled: residual {u.residual:.3e}")
    usharp_s = phi_s(u.u, dm)
    return -laplacian(usharp_s) + resonant_part(u.u, pot, dm.calc) + psi_s(u.u, dm)


# --- constants -------------------------------------------------------------------


def graph_beta(alpha: float) -> float:
    return 0.5 * (4.0 / 3.0 + 2 * alpha)


def m_delta_2(x_norm: float, s: float, alpha: float, delta: float, m: float = M_CALIBRATED,
              k: float = K_CALIBRATED) -> float:
    beta = graph_beta(alpha)
    denom = 1.0 - contraction_ratio(s, beta, alpha, x_norm, m)
    if denom <= 0:
        return math.inf
    t1 = k * s ** ((alpha - 2) / 2) * x_norm
    t2 = k * delta ** (-beta / (2 - beta)) * (x_norm / denom) ** (2 / (2 - beta)) * (1 + s ** (alpha / 2) * x_norm)
    return float(t1 + t2)


def m_delta_1(x_norm: float, s: float, alpha: float, delta: float, m: float = M_CALIBRATED) -> float:
    eta = alpha / 4
    denom = 1.0 - contraction_ratio(s, 1 - eta, alpha, x_norm, m)
    if denom <= 0:
        return math.inf
    t1 = (1 + s ** ((alpha - 2) / 2)) * x_norm
    t2 = delta ** (-(1 - eta) / eta) * (x_norm / denom**2) ** (1 / eta) * (1 + s ** (alpha / 2) * x_norm)
    return float(t1 + t2)


def m_delta_plus(x_norm: float, s: float, alpha: float, delta: float, m: float = M_CALIBRATED) -> float:
    return (1 + delta) * (1 + m * s ** (alpha / 2) * x_norm)


def m_delta_minus(x_norm: float, s: float, alpha: float, delta: float, m: float = M_CALIBRATED) -> float:
    return (1 - delta) / (1 - m * s ** (alpha / 2) * x_norm)


@dataclass(frozen=True)
class DomainConstants:
    s: float
    delta: float
    m: float
    k: float
    m1: float
    m2: float
    m_plus: float
    m_minus: float

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def domain_constants(dm: DomainMap, delta: float) -> DomainConstants:
    a, x, s, m = dm.alpha, dm.x_norm, dm.s, dm.m_calibrated
    return DomainConstants(
        s, delta, m, K_CALIBRATED,
        m_delta_1(x, s, a, delta, m), m_delta_2(x, s, a, delta, m),
        m_delta_plus(x, s, a, delta, m), m_delta_minus(x, s, a, delta, m),
    )


def h2_norm(f: TorusField) -> float:
    return sobolev_norm(f, 2.0)


@dataclass(frozen=True)
class InequalityReport:
    name: str
    lhs: float
    rhs: float

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs * (1 + 1e-12) + 1e-12


def graph_norm_check(u: ParacontrolledFunction, dm: DomainMap, pot: EnhancedPotential | None = None,
                     delta: float = 0.3) -> dict:
    """Both sides of the graph-norm comparison between H u and u#_s in H^2.

    The Fourier-weight H^2 norm satisfies ||f||_{H^2} <= ||Lap f|| + ||f||, so
    1 is added to m_delta^2 (norm-equivalence constant) on both sides.
    """
    Hu = apply_H(u, dm, pot)
    us = phi_s(u.u, dm)
    nH, nS, nu = Hu.norm(), h2_norm(us), u.u.norm()
    c = domain_constants(dm, delta)
    m2 = c.m2 + 1.0
    lower = InequalityReport("lower", (1 - delta) * nS, nH + m2 * nu)
    upper = InequalityReport("upper", nH, (1 + delta) * nS + m2 * nu)
    if not (lower.holds and upper.holds):
        log.warning("graph-norm inequality violated: lower margin %.3e, upper margin %.3e", lower.margin, upper.margin)
    return {"lower": lower, "upper": upper, "constants": c, "norm_Hu": nH, "norm_usharp_H2": nS, "norm_u": nu}


def form_check(u: ParacontrolledFunction, dm: DomainMap, pot: EnhancedPotential | None = None,
               delta: float = 0.3) -> dict:
    """(1 - delta)||grad u#_s||^2 <= Re<u, H u> + m_delta^1 ||u||^2, with F/B diagnostics."""
    pot = dm.pot if pot is None else pot
    thr = dm.s_beta_table.get(1.0 - dm.alpha / 4)
    if thr is not None and dm.s >= thr:
        raise ValueError("form bound needs s < s_{1 - alpha/4}")
    Hu = apply_H(u, dm, pot)
    us = phi_s(u.u, dm)
    grad2 = gradient(us).norm() ** 2
    quad = float(inner(u.u, Hu).real)
    c = domain_constants(dm, delta)
    rep = InequalityReport("form", (1 - delta) * grad2, quad + c.m1 * u.u.norm() ** 2)
    if not rep.holds:
        log.warning("form inequality violated: margin %.3e", rep.margin)
    # corrector and commutator terms of the quadratic-form expansion
    calc = dm.calc
    F_A2 = corrector_F(u.u, u.u, pot.A2, calc)
    du = gradient(u.u)
    B_A = commutator_B(u.u, pot.A * 2j, calc)
    diag = {
        "corrector_F_u_u_A2": complex(F_A2),
        "commutator_B_norm": B_A.norm(),
        "grad_u_norm": du.norm(),
    }
    return {"form": rep, "quadratic_form": quad, "grad_usharp_sq": grad2, "constants": c, "diagnostics": diag}


def lowest_modes(grid, count: int) -> list[tuple[int, int]]:
    """Index pairs (i1, i2) of the ``count`` lowest |k| modes, ties broken deterministically."""
    k1, k2 = grid.kvec
    order = np.lexsort((k2.ravel(), k1.ravel(), grid.ksq.ravel()))[:count]
    n = grid.n
    return [(int(i // n), int(i % n)) for i in order]


def _basis(grid, idx) -> TorusField:
    c = np.zeros((1, grid.n, grid.n), complex)
    c[0][idx] = 1.0
    return TorusField(grid, c, _checked=True)


def gamma_eps_distance(dm: DomainMap, dm_eps: DomainMap, probes: int = 64, tol: float = 1e-12) -> dict:
    """Largest singular value of (Gamma - Gamma_eps) restricted to the lowest ``probes`` modes."""
    if dm.grid != dm_eps.grid:
        raise ValueError("domain maps on different grids")
    if dm.s != dm_eps.s:
        raise ValueError("domain maps built with different s")
    cols = []
    for idx in lowest_modes(dm.grid, probes):
        e = _basis(dm.grid, idx)
        d = gamma(e, dm, tol).u - gamma(e, dm_eps, tol).u
        cols.append(d.coeffs.reshape(-1))
    dist = float(np.linalg.svd(np.array(cols).T, compute_uv=False)[0]) if cols else 0.0
    from .noise import x_alpha_distance

    xd = x_alpha_distance(dm.pot, dm_eps.pot, dm.calc)
    return {"distance": dist, "x_alpha_distance": xd, "ratio": dist / xd if xd > 0 else float("nan")}


def density_defect(dm: DomainMap, dm_eps: DomainMap, probes: int = 16) -> list[float]:
    """||Gamma(Phi^s_eps e_k) - e_k|| for the lowest modes."""
    out = []
    for idx in lowest_modes(dm.grid, probes):
        e = _basis(dm.grid, idx)
        out.append((gamma(phi_s(e, dm_eps), dm).u - e).norm())
    return out
