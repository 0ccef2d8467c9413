"""Regularized magnetic Laplacian H_eps and its spectrum.

H_eps u = -Lap u + i(div(A u) + A.grad u) + A2 u, which equals
(i grad + A)^2 - c_eps when A2 = A.A - c_eps and reduces to
-Lap + 2i A.grad + A2 in the Lorentz gauge.  The symmetric first-order form
keeps the discrete operator exactly Hermitian and gauge covariant.  Products
are 3/2-dealiased.  Modes with a Nyquist component are decoupled (they carry
|k|^2 >= n^2/4 and never enter the low spectrum).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy.sparse.linalg import LinearOperator, cg, eigsh

from .heatpara import HeatCalculus
from .noise import (
    EnhancedPotential,
    Mollifier,
    enhance,
    gauge_shift,
    renorm_constant,
    sample_white_noise,
)
from .torus import GridSpec, TorusField, padded_to_coeffs, padded_values, product_coeffs

log = logging.getLogger(__name__)

DENSE_MAX_N = 64


class EigensolveError(RuntimeError):
    pass


@dataclass
class OperatorHandle:
    pot: EnhancedPotential
    k_shift: float
    _A_pad: np.ndarray = field(repr=False, default=None)
    _W_pad: np.ndarray = field(repr=False, default=None)
    hermiticity_defect: float = float("nan")

    def __post_init__(self) -> None:
        n = self.grid.n
        self._A_pad = padded_values(self.pot.A.coeffs, n).real
        self._W_pad = padded_values(self.pot.A2.coeffs, n)[0].real
        self._keep = ~self.grid.nyquist_mask
        self._ksq = self.grid.ksq

    @property
    def grid(self) -> GridSpec:
        return self.pot.grid

    @property
    def dim(self) -> int:
        return self.grid.n ** 2

    def apply(self, u: np.ndarray) -> np.ndarray:
        """H_eps on coefficient arrays of shape (..., n, n)."""
        n = self.grid.n
        keep = self._keep
        ui = np.where(keep, u, 0.0)
        d1, d2 = self.grid.deriv_symbols
        u_pad = padded_values(ui, n)
        du1 = padded_values(d1 * ui, n)
        du2 = padded_values(d2 * ui, n)
        A1, A2 = self._A_pad
        # i d_j(A_j u) + i A_j d_j u
        flux1 = padded_to_coeffs(A1 * u_pad, n)
        flux2 = padded_to_coeffs(A2 * u_pad, n)
        adv = padded_to_coeffs(A1 * du1 + A2 * du2, n)
        pot = padded_to_coeffs(self._W_pad * u_pad, n)
        out = self._ksq * ui + 1j * (d1 * flux1 + d2 * flux2 + adv) + pot
        return np.where(keep, out, self._ksq * u)

    def matvec(self, x: np.ndarray) -> np.ndarray:
        """H_eps on flattened coefficient vectors, shape (n^2,) or (batch, n^2)."""
        x = np.asarray(x)
        n = self.grid.n
        return self.apply(x.reshape(x.shape[:-1] + (n, n))).reshape(x.shape)

    def apply_field(self, u: TorusField) -> TorusField:
        return TorusField(u.grid, self.apply(u.coeffs[0])[None], _checked=True)

    def linear_operator(self, shift: float = 0.0) -> LinearOperator:
        n2 = self.dim

        def mv(x):
            x = np.asarray(x).reshape(-1)
            return self.matvec(x) + shift * x

        return LinearOperator((n2, n2), matvec=mv, rmatvec=mv, dtype=complex)

    def dense(self, batch: int = 256) -> np.ndarray:
        """Explicit matrix in the grid Fourier basis (column j = H e_j)."""
        n2 = self.dim
        mat = np.empty((n2, n2), complex)
        for lo in range(0, n2, batch):
            hi = min(n2, lo + batch)
            basis = np.zeros((hi - lo, n2), complex)
            basis[np.arange(hi - lo), np.arange(lo, hi)] = 1.0
            cols = self.apply(basis.reshape(hi - lo, self.grid.n, self.grid.n)).reshape(hi - lo, n2)
            mat[:, lo:hi] = cols.T
        return mat

    def resolve(self, v: np.ndarray, rtol: float = 1e-12, maxiter: int = 2000) -> np.ndarray:
        """(H + k_shift)^{-1} v by preconditioned conjugate gradients."""
        n2 = self.dim
        prec = 1.0 / (self._ksq.reshape(-1) + self.k_shift)
        M = LinearOperator((n2, n2), matvec=lambda x: prec * np.asarray(x).reshape(-1), dtype=complex)
        x, info = cg(self.linear_operator(self.k_shift), np.asarray(v).reshape(-1), rtol=rtol, atol=0.0, maxiter=maxiter, M=M)
        if info != 0:
            raise EigensolveError(f"CG did not converge (info={info}); k_shift={self.k_shift} may be too small")
        return x.reshape(np.shape(v))


def hermiticity_defect(op: OperatorHandle, probes: int = 3, seed: int = 0) -> float:
    """max |<Hu,v> - <u,Hv>| / (||u|| ||v||) over band-limited random probes."""
    grid = op.grid
    rng = np.random.default_rng(seed)
    lim = np.sqrt(grid.ksq) <= grid.n / 8
    worst = 0.0
    for _ in range(probes):
        u = (rng.standard_normal(grid.ksq.shape) + 1j * rng.standard_normal(grid.ksq.shape)) * lim
        v = (rng.standard_normal(grid.ksq.shape) + 1j * rng.standard_normal(grid.ksq.shape)) * lim
        d = abs(np.vdot(op.apply(u), v) - np.vdot(u, op.apply(v)))
        worst = max(worst, d / (np.linalg.norm(u) * np.linalg.norm(v)))
    return float(worst)


def lanczos_min_estimate(op: OperatorHandle, steps: int = 20, seed: int = 0) -> float:
    """Lowest Ritz value minus its residual after ``steps`` Lanczos steps."""
    n2 = op.dim
    rng = np.random.default_rng(seed)
    q = rng.standard_normal(n2) + 1j * rng.standard_normal(n2)
    # start from smooth content; the low spectrum lives there
    q = (q.reshape(op.grid.n, op.grid.n) / (1.0 + op.grid.ksq)).reshape(-1)
    Qs = [q / np.linalg.norm(q)]
    alphas, betas = [], []
    for j in range(steps):
        w = op.matvec(Qs[-1])
        a = np.vdot(Qs[-1], w).real
        alphas.append(a)
        basis = np.array(Qs)
        w = w - basis.T @ (basis.conj() @ w)
        w = w - basis.T @ (basis.conj() @ w)
        bnorm = np.linalg.norm(w)
        if bnorm < 1e-12 or j == steps - 1:
            betas.append(bnorm)
            break
        betas.append(bnorm)
        Qs.append(w / bnorm)
    m = len(alphas)
    theta, s = scipy.linalg.eigh_tridiagonal(np.array(alphas), np.array(betas[: m - 1]))
    return float(theta[0] - abs(betas[m - 1] * s[-1, 0]))


def assemble(pot: EnhancedPotential, k_shift: float | None = None, check: bool = True) -> OperatorHandle:
    """Build the H_eps matvec; k_shift defaults to 1 + max(0, -lambda_1 estimate)."""
    op = OperatorHandle(pot, 1.0 if k_shift is None else float(k_shift))
    if k_shift is None:
        op.k_shift = 1.0 + max(0.0, -lanczos_min_estimate(op))
    if check:
        op.hermiticity_defect = hermiticity_defect(op)
        if op.hermiticity_defect > 1e-10:
            raise EigensolveError(f"Hermiticity probe failed: defect {op.hermiticity_defect:.3e}")
    return op


@dataclass
class SpectrumResult:
    eigenvalues: np.ndarray
    count: int
    method: str
    residuals: np.ndarray
    eigenvectors: np.ndarray | None = None
    provenance: dict = field(default_factory=dict)


def eigensolve(op: OperatorHandle, M: int, method: str = "auto", vectors: bool = False, tol: float = 1e-12) -> SpectrumResult:
    """Lowest ``M`` eigenpairs of H_eps.

    ``dense``: full Hermitian diagonalization of the explicit matrix.
    ``lanczos``: implicitly restarted Lanczos on (H + k)^{-1} (shift-invert,
    each inverse applied by preconditioned CG).
    """
    grid = op.grid
    if M > grid.n**2 // 4:
        raise ValueError(f"M={M} exceeds n^2/4 = {grid.n**2 // 4}")
    if method == "auto":
        method = "dense" if grid.n <= 48 else "lanczos"
    if method == "dense":
        if grid.n > DENSE_MAX_N:
            raise ValueError(f"dense path limited to n <= {DENSE_MAX_N}")
        w, V = scipy.linalg.eigh(op.dense(), subset_by_index=[0, M - 1], driver="evr")
    elif method == "lanczos":
        n2 = op.dim
        inv = LinearOperator((n2, n2), matvec=lambda x: op.resolve(x, rtol=tol), dtype=complex)
        try:
            w, V = eigsh(op.linear_operator(), k=M, sigma=-op.k_shift, which="LM", OPinv=inv, tol=tol,
                         v0=_smooth_start(grid), ncv=min(n2, max(2 * M + 1, M + 20)))
        except Exception as exc:  # ARPACK non-convergence
            raise EigensolveError(f"Lanczos failed: {exc}") from exc
        order = np.argsort(w)
        w, V = w[order].real, V[:, order]
    else:
        raise ValueError(f"unknown method {method!r}")
    HV = op.matvec(V.T).T
    res = np.linalg.norm(HV - V * w, axis=0)
    if w[0] <= -op.k_shift:
        raise EigensolveError(f"eigenvalue {w[0]:.4g} below -k_shift; shift invalid")
    bad = res > 1e-8 * np.maximum(1.0, np.abs(w))
    if np.any(bad):
        log.warning("eigen residuals above tolerance for %d pairs (max %.3e)", bad.sum(), res.max())
    prov = dict(op.pot.provenance, n=grid.n, k_shift=op.k_shift)
    return SpectrumResult(np.asarray(w, float), M, method, res, V if vectors else None, prov)


def dense_count(op: OperatorHandle, lam: float) -> int:
    """N(lam) = #{eigenvalues <= lam} from the full dense spectrum (no M cap)."""
    if op.grid.n > DENSE_MAX_N:
        raise ValueError(f"dense path limited to n <= {DENSE_MAX_N}")
    w = scipy.linalg.eigvalsh(op.dense())
    return int(np.searchsorted(np.sort(w), lam + 1e-9 * max(1.0, abs(lam)), side="right"))


def _smooth_start(grid: GridSpec) -> np.ndarray:
    rng = np.random.default_rng(12345)
    v = rng.standard_normal(grid.ksq.shape) / (1.0 + grid.ksq)
    return v.reshape(-1).astype(complex)


# --- spectral diagnostics -------------------------------------------------------


def lattice_count(lam: float) -> int:
    """#{k in Z^2 : |k|^2 <= lam}."""
    r = int(np.floor(np.sqrt(max(lam, 0.0))))
    k = np.arange(-r, r + 1)
    return int(np.sum(k[:, None] ** 2 + k[None, :] ** 2 <= lam + 1e-9))


@dataclass
class WeylTable:
    lam: np.ndarray
    count: np.ndarray
    ratio: np.ndarray

    @property
    def final_ratio(self) -> float:
        return float(self.ratio[-1])


def weyl_counting(spec: SpectrumResult | np.ndarray, min_lambda: float = 40.0, levels: np.ndarray | None = None) -> WeylTable:
    """Counting function N(lam) = #{n : lam_n <= lam} and N(lam)/lam.

    Evaluated at ``levels`` (default: integers 1..floor(lam_max)).  Counts are
    only trustworthy below the largest computed eigenvalue.
    """
    ev = np.sort(np.asarray(spec.eigenvalues if isinstance(spec, SpectrumResult) else spec, float))
    lam_max = ev[-1]
    if lam_max < min_lambda:
        raise ValueError(f"spectrum only reaches {lam_max:.2f}; need lambda_max >= {min_lambda}")
    if levels is None:
        levels = np.arange(1.0, np.floor(lam_max) + 1)
    levels = np.asarray(levels, float)
    counts = np.searchsorted(ev, levels + 1e-9, side="right")
    return WeylTable(levels, counts, counts / levels)


def resolvent_distance(op1: OperatorHandle, op2: OperatorHandle, k_shift: float | None = None,
                       iters: int = 60, rtol: float = 1e-6, seed: int = 0, solve_rtol: float = 1e-12) -> float:
    """||(H1 + k)^{-1} - (H2 + k)^{-1}|| by power iteration on the (Hermitian) difference.

    ``k_shift`` defaults to the larger of the two operators' shifts.
    """
    if op1.grid != op2.grid:
        raise ValueError("operators live on different grids")
    k = max(op1.k_shift, op2.k_shift) if k_shift is None else float(k_shift)
    a = OperatorHandle(op1.pot, k)
    b = OperatorHandle(op2.pot, k)
    grid = op1.grid
    rng = np.random.default_rng(seed)
    v = (rng.standard_normal(grid.ksq.shape) + 1j * rng.standard_normal(grid.ksq.shape)) / (1.0 + grid.ksq)
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(iters):
        w = a.resolve(v, rtol=solve_rtol) - b.resolve(v, rtol=solve_rtol)
        # apply the difference twice per step so +/- eigenvalues do not stall
        w2 = a.resolve(w, rtol=solve_rtol) - b.resolve(w, rtol=solve_rtol)
        nw = np.linalg.norm(w2)
        if nw == 0.0:
            return 0.0
        new = float(np.sqrt(nw))
        v = w2 / nw
        if est and abs(new - est) <= rtol * new:
            est = new
            break
        est = new
    return est


def coercive_shift(pot: EnhancedPotential, delta: float = 0.3, calc: HeatCalculus | None = None,
                   floor: float = 1.0) -> float:
    """A shift k > m_delta^1(A, s) (1% above), as required for the resolvent comparison."""
    from .domain import build_domain_map, domain_constants

    dm = build_domain_map(pot, None, calc or HeatCalculus(pot.grid))
    return max(floor, 1.01 * domain_constants(dm, delta).m1)


def gauge_experiment(pot: EnhancedPotential, f: TorusField, M: int, calc: HeatCalculus,
                     method: str = "auto") -> dict:
    """Compare spectra of H_A and H_{A+grad f}; check H_{A'}(e^{if} u_n) = lambda_n e^{if} u_n."""
    shifted = gauge_shift(pot, f, calc)
    op1, op2 = assemble(pot), assemble(shifted)
    s1 = eigensolve(op1, M, method, vectors=True)
    s2 = eigensolve(op2, M, method)
    rel = np.abs(s1.eigenvalues - s2.eigenvalues) / np.maximum(1.0, np.abs(s1.eigenvalues))
    grid = pot.grid
    n = grid.n
    phase = np.fft.fft2(np.exp(1j * f.values()[0])) / n**2
    worst = 0.0
    for j in range(M):
        pu = product_coeffs(phase, s1.eigenvectors[:, j].reshape(n, n), n)
        r = op2.apply(pu) - s1.eigenvalues[j] * pu
        worst = max(worst, float(np.linalg.norm(r) / np.linalg.norm(pu)))
    return {
        "eigenvalues": s1.eigenvalues.tolist(),
        "eigenvalues_shifted": s2.eigenvalues.tolist(),
        "max_relative_gap": float(rel.max()),
        "intertwining_residual": worst,
    }


def default_ladder(n: int, start: float = 0.25, steps: int | None = None) -> list[float]:
    """Dyadic eps_j = start * 2^-j while the mollifier stays resolved (1/eps <= n/4)."""
    out = []
    eps = start
    while 1.0 / eps <= n / 4 + 1e-9 and (steps is None or len(out) < steps + 1):
        out.append(eps)
        eps /= 2
    return out


@dataclass
class StabilityTable:
    eps: list[float]
    eigenvalues: np.ndarray  # (len(eps), M)
    c_eps: list[float]

    @property
    def differences(self) -> np.ndarray:
        """|lambda_n(eps_j) - lambda_n(eps_{j+1})|, shape (steps, M)."""
        return np.abs(np.diff(self.eigenvalues, axis=0))

    @property
    def signed_differences(self) -> np.ndarray:
        return np.diff(self.eigenvalues, axis=0)

    def shrink_factors(self) -> np.ndarray:
        """Per-step ratio of mean Cauchy differences d_j / d_{j+1}."""
        d = self.differences.mean(axis=1)
        return d[:-1] / d[1:]


def eigenvalue_stability(seed: int, grid: GridSpec, alpha: float, eps_ladder: list[float], M: int,
                         calc: HeatCalculus | None = None, renormalize: bool = True,
                         kind: str = "heat", method: str = "auto") -> StabilityTable:
    """lambda_n(A_eps) along an eps ladder at a fixed noise realization."""
    calc = calc or HeatCalculus(grid)
    xi = sample_white_noise(seed, grid)
    rows, cs = [], []
    for eps in eps_ladder:
        moll = Mollifier(kind, eps)
        pot = enhance(xi, moll, alpha, calc, renormalize=renormalize)
        spec = eigensolve(assemble(pot), M, method)
        rows.append(spec.eigenvalues)
        cs.append(renorm_constant(moll, grid))
    return StabilityTable(list(eps_ladder), np.array(rows), cs)


@dataclass
class SandwichReport:
    n_index: np.ndarray
    lam_flat: np.ndarray
    lam: np.ndarray
    lower_simple: np.ndarray
    lower_full: np.ndarray
    upper: np.ndarray
    slope: float
    constants: dict

    @property
    def lower_holds(self) -> bool:
        return bool(np.all(self.lam >= self.lower_simple) and np.all(self.lam >= self.lower_full))

    @property
    def upper_holds(self) -> bool:
        return bool(np.all(self.lam <= self.upper))

    def slope_in(self, delta: float) -> bool:
        return 0.8 <= self.slope <= (1 + delta) ** 2 + 0.2

    def margins(self) -> dict:
        return {
            "lower_simple": (self.lam - self.lower_simple).tolist(),
            "lower_full": (self.lam - self.lower_full).tolist(),
            "upper": (self.upper - self.lam).tolist(),
        }


def flat_eigenvalues(count: int) -> np.ndarray:
    """Lowest ``count`` eigenvalues of -Lap on the 2pi-torus (lattice |k|^2, with multiplicity)."""
    r = int(np.ceil(np.sqrt(count))) + 2
    while True:
        k = np.arange(-r, r + 1)
        vals = np.sort((k[:, None] ** 2 + k[None, :] ** 2).ravel())
        if vals[count - 1] < r**2:
            return vals[:count].astype(float)
        r *= 2


def sandwich_check(spec: SpectrumResult, pot: EnhancedPotential, delta: float = 0.3, s: float | None = None,
                   calc: HeatCalculus | None = None) -> SandwichReport:
    """Compare lambda_n(A_eps) with the flat lambda_n through the calibrated constants."""
    from .domain import build_domain_map, domain_constants

    dm = build_domain_map(pot, s, calc or HeatCalculus(pot.grid))
    c = domain_constants(dm, delta)
    lam = np.asarray(spec.eigenvalues, float)
    flat = flat_eigenvalues(lam.size)
    lower_simple = flat - c.m1
    lower_full = c.m_minus * flat - c.m1
    upper = c.m_plus * flat + 2 + 2 * c.m * dm.s ** (pot.alpha / 2) * pot.x_alpha_norm + c.m2
    slope = float(np.polyfit(flat, lam, 1)[0])
    return SandwichReport(np.arange(1, lam.size + 1), flat, lam, lower_simple, lower_full, upper, slope, c.as_dict())
