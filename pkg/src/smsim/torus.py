"""Discrete function spaces on the torus [0, 2pi)^2.

Fields are stored as Fourier-series coefficients,

    f(x) = sum_{k in K} fhat(k) exp(i k.x),    K = {-n/2+1, ..., n/2}^2,

so that ``fhat = fft2(samples) / n**2``.  Array axis -2 is x_1, axis -1 is x_2,
and coefficients live in numpy FFT index order (index n/2 holds the mode
+n/2).  L^2 norms and inner products use the normalized measure dx/(2pi)^2,
which makes Parseval read ``mean(|f|^2) == sum(|fhat|^2)``.
"""

from __future__ import annotations

import enum
import struct
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
import scipy.fft as sfft

REAL_TOL = 1e-12


@dataclass(frozen=True)
class GridSpec:
    """Square grid with ``n`` points per axis on [0, 2pi)^2."""

    n: int

    def __post_init__(self) -> None:
        if not isinstance(self.n, (int, np.integer)) or self.n < 16 or self.n % 2:
            raise ValueError(f"grid size must be an even integer >= 16, got {self.n!r}")

    @property
    def spacing(self) -> float:
        return 2 * np.pi / self.n

    @property
    def nyquist(self) -> int:
        return self.n // 2

    @cached_property
    def k1d(self) -> np.ndarray:
        """Integer wavenumbers in FFT index order, with +n/2 at index n/2."""
        k = np.fft.fftfreq(self.n, 1.0 / self.n)
        k[self.n // 2] = self.n // 2
        return k

    @cached_property
    def kvec(self) -> tuple[np.ndarray, np.ndarray]:
        k1, k2 = np.meshgrid(self.k1d, self.k1d, indexing="ij")
        return k1, k2

    @cached_property
    def ksq(self) -> np.ndarray:
        k1, k2 = self.kvec
        return k1**2 + k2**2

    @cached_property
    def nyquist_mask(self) -> np.ndarray:
        """True on modes with a component equal to n/2."""
        k1, k2 = self.kvec
        h = self.n // 2
        return (np.abs(k1) == h) | (np.abs(k2) == h)

    @cached_property
    def deriv_symbols(self) -> tuple[np.ndarray, np.ndarray]:
        """Symbols i*k_axis, zeroed at the Nyquist index so reality is preserved."""
        out = []
        for kk in self.kvec:
            sym = 1j * kk.astype(complex)
            sym[np.abs(kk) == self.n // 2] = 0.0
            out.append(sym)
        return out[0], out[1]

    @cached_property
    def points(self) -> tuple[np.ndarray, np.ndarray]:
        x = np.arange(self.n) * self.spacing
        return np.meshgrid(x, x, indexing="ij")


@dataclass(frozen=True, eq=False)
class TorusField:
    """Scalar (1 component) or vector (2 components) field held in Fourier space.

    ``coeffs`` has shape ``(components, n, n)`` and is read-only after
    construction.  ``real`` flags fields whose samples are real; such fields
    are checked for conjugate symmetry on construction.
    """

    grid: GridSpec
    coeffs: np.ndarray
    real: bool = False
    _checked: bool = field(default=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        c = np.asarray(self.coeffs, dtype=np.complex128)
        if c.ndim == 2:
            c = c[None]
        n = self.grid.n
        if c.ndim != 3 or c.shape[1:] != (n, n) or c.shape[0] not in (1, 2):
            raise ValueError(f"coefficient array of shape {c.shape} does not match grid n={n}")
        c = c.copy() if c is self.coeffs else c
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        if self.real and not self._checked:
            defect = conjugate_symmetry_defect(c)
            scale = max(np.abs(c).max(), 1e-300)
            if defect > 1e-10 * scale:
                raise ValueError(f"field flagged real violates conjugate symmetry by {defect:.3e}")

    @property
    def components(self) -> int:
        return self.coeffs.shape[0]

    @property
    def is_scalar(self) -> bool:
        return self.components == 1

    def component(self, i: int) -> "TorusField":
        return TorusField(self.grid, self.coeffs[i : i + 1], self.real, _checked=True)

    def values(self) -> np.ndarray:
        """Real-space samples, shape ``(components, n, n)``; real dtype for real fields."""
        v = sfft.ifft2(self.coeffs) * self.grid.n**2
        return v.real if self.real else v

    def mean(self) -> np.ndarray:
        return self.coeffs[:, 0, 0]

    def norm(self) -> float:
        """L^2 norm for the normalized measure (all components)."""
        return float(np.sqrt(np.sum(np.abs(self.coeffs) ** 2)))

    def sup(self) -> float:
        """Max of |f| over grid points (pointwise Euclidean norm for vectors)."""
        v = sfft.ifft2(self.coeffs) * self.grid.n**2
        return float(np.sqrt(np.sum(np.abs(v) ** 2, axis=0)).max())

    def with_coeffs(self, coeffs: np.ndarray, real: bool | None = None) -> "TorusField":
        return TorusField(self.grid, coeffs, self.real if real is None else real, _checked=True)

    def _combine(self, other, op) -> "TorusField":
        if isinstance(other, TorusField):
            _same_grid(self, other)
            return TorusField(self.grid, op(self.coeffs, other.coeffs), self.real and other.real, _checked=True)
        other = complex(other)
        return TorusField(self.grid, op(self.coeffs, other), self.real and other.imag == 0, _checked=True)

    def __add__(self, other):
        if not isinstance(other, TorusField):
            return constant(self.grid, other, components=self.components) + self
        return self._combine(other, np.add)

    __radd__ = __add__

    def __sub__(self, other):
        if not isinstance(other, TorusField):
            return self + (-other)
        return self._combine(other, np.subtract)

    def __neg__(self):
        return TorusField(self.grid, -self.coeffs, self.real, _checked=True)

    def __mul__(self, scalar):
        if isinstance(scalar, TorusField):
            raise TypeError("use product() for field products")
        return self._combine(scalar, np.multiply)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return self * (1.0 / scalar)


def _same_grid(*fields: TorusField) -> GridSpec:
    g = fields[0].grid
    for f in fields[1:]:
        if f.grid != g:
            raise ValueError(f"grid mismatch: n={g.n} vs n={f.grid.n}")
    return g


def conjugate_symmetry_defect(coeffs: np.ndarray) -> float:
    """max |c(-k) - conj(c(k))| over the array (index arithmetic mod n)."""
    flipped = np.roll(np.flip(coeffs, axis=(-2, -1)), 1, axis=(-2, -1))
    return float(np.abs(flipped - np.conj(coeffs)).max()) if coeffs.size else 0.0


def constant(grid: GridSpec, value, components: int = 1) -> TorusField:
    c = np.zeros((components, grid.n, grid.n), complex)
    c[:, 0, 0] = value
    return TorusField(grid, c, real=np.isrealobj(value) or complex(value).imag == 0, _checked=True)


def zeros(grid: GridSpec, components: int = 1) -> TorusField:
    return TorusField(grid, np.zeros((components, grid.n, grid.n), complex), real=True, _checked=True)


def fft_forward(samples: np.ndarray, grid: GridSpec, real: bool | None = None) -> TorusField:
    """Fourier-series coefficients of grid samples (shape ``(n,n)`` or ``(c,n,n)``)."""
    s = np.asarray(samples)
    if s.ndim == 2:
        s = s[None]
    if s.shape[-2:] != (grid.n, grid.n) or s.ndim != 3:
        raise ValueError(f"samples of shape {np.shape(samples)} do not match grid n={grid.n}")
    if real is None:
        real = not np.iscomplexobj(s) or bool(np.all(s.imag == 0))
    c = sfft.fft2(s) / grid.n**2
    return TorusField(grid, c, real=real, _checked=True)


def fft_inverse(f: TorusField) -> np.ndarray:
    return f.values()


def from_function(func, grid: GridSpec) -> TorusField:
    """Sample ``func(x1, x2)`` on the grid; ``func`` may return a tuple for vector fields."""
    x1, x2 = grid.points
    out = func(x1, x2)
    if isinstance(out, tuple):
        out = np.stack([np.broadcast_to(o, x1.shape) for o in out])
    else:
        out = np.broadcast_to(out, x1.shape)
    return fft_forward(out, grid)


def multiply(f: TorusField, symbol: np.ndarray, real_symbol: bool = True) -> TorusField:
    """Apply a Fourier multiplier (broadcast over components)."""
    return f.with_coeffs(f.coeffs * symbol, real=f.real and real_symbol)


def derivative(f: TorusField, axis: int) -> TorusField:
    """Spectral partial derivative along axis 1 or 2 (symbol i*k_axis)."""
    if axis not in (1, 2):
        raise ValueError(f"axis must be 1 or 2, got {axis!r}")
    # i*k is odd and purely imaginary, so real fields stay real
    return f.with_coeffs(f.coeffs * f.grid.deriv_symbols[axis - 1])


def gradient(f: TorusField) -> TorusField:
    if not f.is_scalar:
        raise ValueError("gradient expects a scalar field")
    d1, d2 = f.grid.deriv_symbols
    return f.with_coeffs(np.concatenate([f.coeffs * d1, f.coeffs * d2]))


def divergence(v: TorusField) -> TorusField:
    if v.components != 2:
        raise ValueError("divergence expects a 2-component field")
    d1, d2 = v.grid.deriv_symbols
    return v.with_coeffs((v.coeffs[0] * d1 + v.coeffs[1] * d2)[None])


def curl(v: TorusField) -> TorusField:
    """Scalar curl with the convention d_2 v_1 - d_1 v_2."""
    if v.components != 2:
        raise ValueError("curl expects a 2-component field")
    d1, d2 = v.grid.deriv_symbols
    return v.with_coeffs((v.coeffs[0] * d2 - v.coeffs[1] * d1)[None])


def perp_gradient(phi: TorusField) -> TorusField:
    """(-d_2 phi, d_1 phi); divergence-free by construction."""
    if not phi.is_scalar:
        raise ValueError("perp_gradient expects a scalar field")
    d1, d2 = phi.grid.deriv_symbols
    return phi.with_coeffs(np.concatenate([-phi.coeffs * d2, phi.coeffs * d1]))


def laplacian(f: TorusField) -> TorusField:
    return multiply(f, -f.grid.ksq)


class InverseLaplacianMode(enum.Enum):
    EXACT_FOURIER = "exact"
    HEAT_QUASI = "heat"


def inverse_laplacian_symbol(grid: GridSpec, mode: InverseLaplacianMode) -> np.ndarray:
    ksq = grid.ksq
    sym = np.empty_like(ksq)
    nz = ksq > 0
    if mode is InverseLaplacianMode.EXACT_FOURIER:
        sym[nz] = -1.0 / ksq[nz]
        sym[~nz] = 0.0
    elif mode is InverseLaplacianMode.HEAT_QUASI:
        # -int_0^1 exp(-t|k|^2) dt
        sym[nz] = -(-np.expm1(-ksq[nz])) / ksq[nz]
        sym[~nz] = -1.0
    else:
        raise ValueError(f"unknown inverse Laplacian mode {mode!r}")
    return sym


def inverse_laplacian(
    f: TorusField, mode: InverseLaplacianMode = InverseLaplacianMode.EXACT_FOURIER
) -> TorusField:
    return multiply(f, inverse_laplacian_symbol(f.grid, mode))


def inner(f: TorusField, g: TorusField) -> complex:
    """<f, g> = sum_k conj(fhat) ghat, summed over components."""
    _same_grid(f, g)
    return complex(np.vdot(f.coeffs, g.coeffs))


# --- dealiased products -------------------------------------------------------


def _pad_axis(c: np.ndarray, axis: int, n: int, m: int) -> np.ndarray:
    """Embed an n-point spectrum into an m-point one, splitting the Nyquist entry."""
    h = n // 2
    shape = list(c.shape)
    shape[axis] = m
    out = np.zeros(shape, complex)
    src = [slice(None)] * c.ndim
    dst = [slice(None)] * c.ndim
    src[axis], dst[axis] = slice(0, h), slice(0, h)
    out[tuple(dst)] = c[tuple(src)]
    src[axis], dst[axis] = slice(h + 1, n), slice(m - h + 1, m)
    out[tuple(dst)] = c[tuple(src)]
    src[axis] = h
    nyq = c[tuple(src)] / 2
    dst[axis] = h
    out[tuple(dst)] = nyq
    dst[axis] = m - h
    out[tuple(dst)] = nyq
    return out


def _truncate_axis(c: np.ndarray, axis: int, n: int, m: int) -> np.ndarray:
    h = n // 2
    pos = np.take(c, np.arange(0, h), axis=axis)
    nyq = np.take(c, [h], axis=axis) + np.take(c, [m - h], axis=axis)
    neg = np.take(c, np.arange(m - h + 1, m), axis=axis)
    return np.concatenate([pos, nyq, neg], axis=axis)


def pad_coeffs(c: np.ndarray, n: int) -> np.ndarray:
    m = 3 * n // 2
    return _pad_axis(_pad_axis(c, -2, n, m), -1, n, m)


def truncate_coeffs(c: np.ndarray, n: int) -> np.ndarray:
    m = 3 * n // 2
    return _truncate_axis(_truncate_axis(c, -2, n, m), -1, n, m)


def padded_values(c: np.ndarray, n: int) -> np.ndarray:
    """Samples on the 3n/2 grid of the band-limited function with coefficients ``c``."""
    m = 3 * n // 2
    return sfft.ifft2(pad_coeffs(c, n)) * m**2


def padded_to_coeffs(v: np.ndarray, n: int) -> np.ndarray:
    m = 3 * n // 2
    return truncate_coeffs(sfft.fft2(v) / m**2, n)


def product_coeffs(a: np.ndarray, b: np.ndarray, n: int) -> np.ndarray:
    """Coefficients (on K) of the pointwise product, via 3/2 zero padding."""
    return padded_to_coeffs(padded_values(a, n) * padded_values(b, n), n)


def product(f: TorusField, g: TorusField) -> TorusField:
    """Dealiased pointwise product; scalar*vector broadcasts, vector*vector is the dot product."""
    grid = _same_grid(f, g)
    pf, pg = padded_values(f.coeffs, grid.n), padded_values(g.coeffs, grid.n)
    if f.components == 2 and g.components == 2:
        pv = np.sum(pf * pg, axis=0, keepdims=True)
    else:
        pv = pf * pg
    return TorusField(grid, padded_to_coeffs(pv, grid.n), f.real and g.real, _checked=True)


def symmetrize_real(f: TorusField) -> TorusField:
    """Project onto conjugate-symmetric coefficients and flag as real."""
    c = f.coeffs
    flipped = np.roll(np.flip(c, axis=(-2, -1)), 1, axis=(-2, -1))
    return TorusField(f.grid, 0.5 * (c + np.conj(flipped)), real=True, _checked=True)


# --- snapshot format ------------------------------------------------------------

MAGIC = b"TFLD"


def _mode_order(n: int) -> np.ndarray:
    """FFT indices for modes -n/2+1 .. n/2 in ascending order."""
    return np.arange(-n // 2 + 1, n // 2 + 1) % n


def write_snapshot(f: TorusField, path: str | Path) -> None:
    """Write the binary field snapshot: header then (re, im) float64 pairs, k_1 fastest."""
    n = f.grid.n
    order = _mode_order(n)
    # coeffs[c, i1, i2]; row-major with k_1 fastest means iterate (c, k_2, k_1)
    arr = f.coeffs[:, order][:, :, order].transpose(0, 2, 1)
    pairs = np.stack([arr.real, arr.imag], axis=-1).astype("<f8")
    with open(path, "wb") as fh:
        fh.write(MAGIC + struct.pack("<II", n, f.components) + b"\x00" * 4)
        fh.write(pairs.tobytes())


def read_snapshot(path: str | Path, real: bool | None = None) -> TorusField:
    data = Path(path).read_bytes()
    if data[:4] != MAGIC:
        raise ValueError(f"{path}: not a TFLD snapshot")
    n, comps = struct.unpack("<II", data[4:12])
    grid = GridSpec(int(n))
    body = np.frombuffer(data[16:], dtype="<f8")
    if body.size != comps * n * n * 2:
        raise ValueError(f"{path}: payload size {body.size} does not match n={n}, components={comps}")
    arr = body.reshape(comps, n, n, 2)
    arr = (arr[..., 0] + 1j * arr[..., 1]).transpose(0, 2, 1)
    order = _mode_order(n)
    c = np.empty((comps, n, n), complex)
    c[np.ix_(range(comps), order, order)] = arr
    if real is None:
        real = conjugate_symmetry_defect(c) <= REAL_TOL * max(np.abs(c).max(), 1e-300)
    return TorusField(grid, c, real=real, _checked=True)
