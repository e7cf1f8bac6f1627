"""Sampled functions on R^d, Z^d and the torus, with their Fourier transforms.

Normalization
-------------
The Fourier transform is ``f^(xi) = int exp(-2 pi i x.xi) f(x) dx``. On a
:class:`Grid` with points ``x_j = -L + j dx`` (``dx = 2L/N``) it is replaced by
the Riemann sum

    f^(xi_k) = dx^d sum_j exp(-2 pi i x_j.xi_k) f(x_j)

on the dual grid ``xi_k = -N/(4L) + k/(2L)``. Per axis one has
``x_j xi_k = N/4 - j/2 - k/2 + jk/N`` exactly, so

    f^(xi_k) = dx * (-1)^(N/2) * (-1)^k * FFT[(-1)^j f_j]_k

with ``(-1)^(N/2) = exp(-i pi N/2)`` because ``N`` is even. The inverse uses the
conjugate phases and the factor ``1/dx = N dxi``. The dual of the dual grid is
the original grid, so the pair is an exact inverse up to rounding.
"""
from __future__ import annotations

import csv
import logging
import struct
from dataclasses import dataclass, field

import numpy as np

from hysharp import kernels

LOGGER = logging.getLogger(__name__)

HYSF_MAGIC = b"HYSF"
HYSF_VERSION = 1
BOUNDARY_MASS_FLAG = 1e-6


class GridMismatchError(ValueError):
    """Raised when two sampled functions live on different grids."""


def _check_exponent(p):
    if np.isnan(p) or p < 1:
        raise ValueError("invalid exponent")


@dataclass(frozen=True)
class Grid:
    """Uniform grid with ``N`` points per axis on ``[-L, L)^d``."""

    d: int
    L: float
    N: int

    def __post_init__(self):
        if self.d not in (1, 2):
            raise ValueError("grid dimension must be 1 or 2")
        if not self.L > 0:
            raise ValueError("grid half-width must be positive")
        if self.N < 8 or self.N % 2:
            raise ValueError("grid size must be even and at least 8")

    @property
    def dx(self):
        return 2.0 * self.L / self.N

    @property
    def cell(self):
        """Volume element dx^d."""
        return self.dx**self.d

    @property
    def axis(self):
        return -self.L + self.dx * np.arange(self.N)

    @property
    def shape(self):
        return (self.N,) * self.d

    def coords(self):
        """Coordinate arrays, one per axis, each of shape ``self.shape``."""
        if self.d == 1:
            return (self.axis,)
        return tuple(np.meshgrid(self.axis, self.axis, indexing="ij"))

    def radius2(self):
        return sum(c**2 for c in self.coords())

    def dual(self):
        """The frequency grid: spacing 1/(2L), half-width N/(4L)."""
        return Grid(self.d, self.N / (4.0 * self.L), self.N)

    def zero(self):
        return SampledFunction(self, np.zeros(self.shape, dtype=np.complex128))

    def sample(self, func):
        """Evaluate ``func(*coords)`` on the grid."""
        return SampledFunction(self, np.asarray(func(*self.coords()), dtype=np.complex128))


def default_grid(d=1):
    """L=8, N=1024 in one dimension; L=6, N=256 per axis in two."""
    return Grid(1, 8.0, 1024) if d == 1 else Grid(2, 6.0, 256)


@dataclass(frozen=True, eq=False)
class SampledFunction:
    """Complex samples of a function on a :class:`Grid`."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.complex128)
        if vals.shape != self.grid.shape:
            raise ValueError(f"value array shape {vals.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("invalid function")
        vals = vals.copy()
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def _same_grid(self, other):
        if self.grid != other.grid:
            raise GridMismatchError("grid mismatch")

    def __add__(self, other):
        if isinstance(other, SampledFunction):
            self._same_grid(other)
            return SampledFunction(self.grid, self.values + other.values)
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, SampledFunction):
            self._same_grid(other)
            return SampledFunction(self.grid, self.values - other.values)
        return NotImplemented

    def __mul__(self, other):
        if isinstance(other, SampledFunction):
            self._same_grid(other)
            return SampledFunction(self.grid, self.values * other.values)
        return SampledFunction(self.grid, self.values * other)

    __rmul__ = __mul__

    def __neg__(self):
        return SampledFunction(self.grid, -self.values)

    def map(self, func):
        """Apply ``func`` to the value array."""
        return SampledFunction(self.grid, func(self.values))

    def boundary_mass(self, p=2.0, width=1):
        """Fraction of ``|f|^p`` mass on the outermost ``width`` cells of each axis."""
        w = np.abs(self.values) ** p
        total = w.sum()
        if total == 0:
            return 0.0
        mask = np.zeros(self.grid.shape, dtype=bool)
        for ax in range(self.grid.d):
            idx = [slice(None)] * self.grid.d
            idx[ax] = np.r_[0:width, self.grid.N - width:self.grid.N]
            mask[tuple(idx)] = True
        return float(w[mask].sum() / total)

    def boundary_flag(self, p=2.0):
        """True when more than 1e-6 of the mass touches the grid boundary."""
        return self.boundary_mass(p) > BOUNDARY_MASS_FLAG


def lp_norm(f, p):
    """Riemann-sum ``L^p`` norm ``(sum |f|^p dx^d)^(1/p)``."""
    _check_exponent(p)
    if np.isinf(p):
        return float(np.max(np.abs(f.values)))
    a = np.abs(f.values)
    m = a.max()
    if m == 0:
        return 0.0
    # scale out the maximum so huge or tiny values do not over/underflow
    return float(m * (np.sum((a / m) ** p) * f.grid.cell) ** (1.0 / p))


def inner(f, g):
    """``<f, g> = int f conj(g)``."""
    f._same_grid(g)
    return complex(np.vdot(g.values, f.values) * f.grid.cell)


def _signs(n):
    return 1.0 - 2.0 * (np.arange(n) % 2)


def _checkerboard(grid):
    s = _signs(grid.N)
    if grid.d == 1:
        return s
    return np.multiply.outer(s, s)


def _global_phase(grid):
    # exp(-i pi N / 2) per axis; N even so this is +1 or -1
    return (-1.0) ** ((grid.N // 2) * grid.d)


def fourier_transform(f):
    """Transform ``f`` onto the dual grid (see module docstring for the formula)."""
    grid = f.grid
    cb = _checkerboard(grid)
    spec = np.fft.fftn(cb * f.values)
    vals = grid.cell * _global_phase(grid) * cb * spec
    return SampledFunction(grid.dual(), vals)


def inverse_fourier_transform(fhat, grid=None):
    """Inverse of :func:`fourier_transform`.

    ``grid`` is the expected spatial grid; when given it must be the dual of
    ``fhat.grid``.
    """
    target = fhat.grid.dual()
    if grid is not None:
        # N / (4 (N / 4L)) need not round back to L exactly
        if (grid.d, grid.N) != (target.d, target.N) or abs(grid.L - target.L) > 1e-12 * grid.L:
            raise GridMismatchError("grid mismatch")
        target = grid
    cb = _checkerboard(target)
    vals = np.fft.ifftn(cb * fhat.values) * (fhat.grid.N**target.d) * fhat.grid.cell
    vals = _global_phase(target) * cb * vals
    return SampledFunction(target, vals)


def convolve(f, g):
    """Cyclic convolution ``sum_y f(x - y) g(y) dx^d`` via transform-multiply-invert."""
    f._same_grid(g)
    fh = fourier_transform(f)
    gh = fourier_transform(g)
    return inverse_fourier_transform(SampledFunction(fh.grid, fh.values * gh.values), f.grid)


def fourier_at(f, xi):
    """Direct Riemann-sum transform of a 1-d sampled function at arbitrary frequencies."""
    if f.grid.d != 1:
        raise ValueError("fourier_at supports d=1 only")
    xi = np.atleast_1d(np.asarray(xi, dtype=np.float64))
    x = f.grid.axis
    out = np.empty(xi.shape, dtype=np.complex128)
    for i, k in enumerate(xi):
        out[i] = f.grid.dx * np.sum(np.exp(-2j * np.pi * x * k) * f.values)
    return out


# --- Z^d and the torus -----------------------------------------------------


@dataclass(frozen=True, eq=False)
class DiscreteFunction:
    """Finitely supported function on Z^d."""

    support: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        sup = np.asarray(self.support, dtype=np.int64)
        if sup.ndim == 1:
            sup = sup[:, None]
        vals = np.asarray(self.values, dtype=np.complex128).ravel()
        if sup.shape[0] != vals.shape[0]:
            raise ValueError("support and values differ in length")
        if not np.all(np.isfinite(vals)):
            raise ValueError("invalid function")
        if np.unique(sup, axis=0).shape[0] != sup.shape[0]:
            raise ValueError("support points must be distinct")
        sup.setflags(write=False)
        vals.setflags(write=False)
        object.__setattr__(self, "support", sup)
        object.__setattr__(self, "values", vals)

    @property
    def d(self):
        return self.support.shape[1]

    @classmethod
    def from_dict(cls, mapping):
        keys = list(mapping)
        return cls(np.array(keys), np.array([mapping[k] for k in keys]))


def lp_norm_discrete(f, p):
    """``l^p`` norm of a discrete function."""
    _check_exponent(p)
    a = np.abs(f.values)
    if np.isinf(p):
        return float(a.max(initial=0.0))
    return float(np.sum(a**p) ** (1.0 / p))


@dataclass(frozen=True, eq=False)
class TorusFunction:
    """Values on the torus points ``theta_k = k/M``, ``k in {0..M-1}^d``."""

    d: int
    M: int
    values: np.ndarray

    def __post_init__(self):
        if self.M < 8:
            raise ValueError("torus resolution must be at least 8")
        vals = np.asarray(self.values, dtype=np.complex128)
        if vals.shape != (self.M,) * self.d:
            raise ValueError("torus values have the wrong shape")
        if not np.all(np.isfinite(vals)):
            raise ValueError("invalid function")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def points(self):
        t = np.arange(self.M) / self.M
        if self.d == 1:
            return t[:, None]
        a, b = np.meshgrid(t, t, indexing="ij")
        return np.column_stack([a.ravel(), b.ravel()])


def discrete_fourier(f, M):
    """Exact trigonometric sum ``sum_n exp(-2 pi i theta.n) f(n)`` at ``theta = k/M``."""
    torus = TorusFunction(f.d, M, np.zeros((M,) * f.d))
    vals = kernels.trig_sum(f.support, f.values, torus.points())
    return TorusFunction(f.d, M, vals.reshape((M,) * f.d))


def torus_lq_norm(g, q):
    """``(M^-d sum_k |g(theta_k)|^q)^(1/q)``."""
    _check_exponent(q)
    a = np.abs(g.values)
    if np.isinf(q):
        return float(a.max())
    return float(np.mean(a**q) ** (1.0 / q))


# --- serialization -----------------------------------------------------------

_HEADER = struct.Struct("<4sIddd")


def to_bytes(f):
    """Binary layout: magic, version (u32), d, N, L (doubles), then re/im pairs."""
    g = f.grid
    head = _HEADER.pack(HYSF_MAGIC, HYSF_VERSION, float(g.d), float(g.N), float(g.L))
    body = np.empty(f.values.size * 2, dtype="<f8")
    flat = f.values.ravel(order="C")
    body[0::2] = flat.real
    body[1::2] = flat.imag
    return head + body.tobytes()


def from_bytes(data):
    magic, version, d, N, L = _HEADER.unpack_from(data)
    if magic != HYSF_MAGIC:
        raise ValueError("not a HYSF file")
    if version != HYSF_VERSION:
        raise ValueError(f"unsupported HYSF version {version}")
    grid = Grid(int(d), L, int(N))
    body = np.frombuffer(data, dtype="<f8", offset=_HEADER.size)
    if body.size != 2 * grid.N**grid.d:
        raise ValueError("truncated HYSF payload")
    vals = (body[0::2] + 1j * body[1::2]).reshape(grid.shape)
    return SampledFunction(grid, vals)


def save(f, path):
    with open(path, "wb") as fh:
        fh.write(to_bytes(f))


def load(path):
    with open(path, "rb") as fh:
        return from_bytes(fh.read())


def export_csv(f, path):
    """Write rows ``x..., re, im`` in row-major order."""
    coords = [c.ravel() for c in f.grid.coords()]
    names = ["x"] if f.grid.d == 1 else ["x1", "x2"]
    flat = f.values.ravel()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(names + ["re", "im"])
        for i in range(flat.size):
            w.writerow([repr(float(c[i])) for c in coords] + [repr(float(flat[i].real)), repr(float(flat[i].imag))])
