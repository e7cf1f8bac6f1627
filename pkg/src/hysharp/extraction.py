"""Structure extraction for quasi-extremizers and the uncertainty probe.

The pipeline runs a single pass: dyadic level sets of ``|f|``, a popular
level, a popular-sum extraction on its cells, a rank-<=2 progression cover,
and the restriction ``g`` of ``f`` to that progression.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.special import ndtri

from hysharp.additive import (
    ContinuumMultiprogression,
    FiniteSet,
    additive_energy_discrete,
    bsg_extract,
    freiman_cover,
    sumset,
)
from hysharp.constants import ExponentPair, babenko, hy_ratio
from hysharp.gaussian_manifold import Gaussian, gaussian_fourier
from hysharp.grids import SampledFunction, convolve, fourier_transform, inner, lp_norm

LOG2 = math.log(2.0)
WINDOW = 20


# --- level sets --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class LevelSet:
    """``E_k = {2^k <= |f| < 2^(k+1)}`` with ``F_k = 2^-k f 1_{E_k}``."""

    k: int
    mask: np.ndarray
    measure: float
    factor: SampledFunction


@dataclass(frozen=True, eq=False)
class LevelDecomposition:
    levels: list
    tail_mass: float
    total_mass: float
    p: float

    def level(self, k):
        for lv in self.levels:
            if lv.k == k:
                return lv
        raise KeyError(k)

    def reconstruct(self):
        grid = self.levels[0].factor.grid
        out = np.zeros(grid.shape, dtype=np.complex128)
        for lv in self.levels:
            out += 2.0**lv.k * lv.factor.values
        return SampledFunction(grid, out)

    def weighted_mass(self):
        """``sum_k 2^(kp) |E_k|``."""
        return sum(2.0 ** (lv.k * self.p) * lv.measure for lv in self.levels)


def _cell_quadratics(logf):
    """Per-cell coefficients ``(a2, a1, a0)`` of ``log|f|`` in the local variable ``u in [0, 1]``.

    The quadratic through three neighbouring samples is exact when ``log|f|``
    is a quadratic polynomial (Gaussians); cells touching a zero sample fall
    back to ``a2 = a1 = nan``.
    """
    n = logf.size
    j = np.arange(n - 1)
    k = np.clip(j - 1, 0, n - 3)
    y_m, y_0, y_p = logf[k], logf[k + 1], logf[k + 2]
    # samples at local positions u = k - j, k - j + 1, k - j + 2
    s = (k - j).astype(np.float64)
    with np.errstate(invalid="ignore"):
        a2 = 0.5 * (y_p - 2 * y_0 + y_m)
        a1 = (y_0 - y_m) - a2 * (2 * s + 1)
        a0 = y_m - a1 * s - a2 * s * s
    bad = ~(np.isfinite(y_m) & np.isfinite(y_0) & np.isfinite(y_p))
    a2 = np.where(bad, np.nan, a2)
    a1 = np.where(bad, np.nan, a1)
    a0 = np.where(bad, np.nan, a0)
    return a2, a1, a0


def _quad_measure(a2, a1, a0):
    """Measure of ``{u in [0, 1] : a2 u^2 + a1 u + a0 >= 0}``, elementwise."""
    with np.errstate(divide="ignore", invalid="ignore"):
        flat = np.abs(a2) < 1e-14
        lin_root = np.where(a1 != 0, -a0 / np.where(a1 != 0, a1, 1.0), 0.0)
        lin = np.where(
            a1 > 0,
            1.0 - np.clip(lin_root, 0.0, 1.0),
            np.where(a1 < 0, np.clip(lin_root, 0.0, 1.0), (a0 >= 0).astype(float)),
        )
        disc = a1 * a1 - 4 * a2 * a0
        sq = np.sqrt(np.maximum(disc, 0.0))
        den = np.where(flat, 1.0, 2 * a2)
        r1 = (-a1 - sq) / den
        r2 = (-a1 + sq) / den
        lo, hi = np.minimum(r1, r2), np.maximum(r1, r2)
        inside = np.clip(np.minimum(hi, 1.0) - np.maximum(lo, 0.0), 0.0, None)
        quad = np.where(disc <= 0, (a2 > 0).astype(float), np.where(a2 < 0, inside, 1.0 - inside))
    return np.where(flat, lin, quad)


def _superlevel_measure_1d(logf, dx, level, coeffs):
    """``|{log|f| >= level}|`` from the per-cell interpolating quadratics."""
    a2, a1, a0 = coeffs
    good = np.isfinite(a2)
    meas = np.empty(a2.size)
    meas[good] = _quad_measure(a2[good], a1[good], a0[good] - level)
    y0, y1 = logf[:-1][~good], logf[1:][~good]
    meas[~good] = 0.5 * (y0 >= level) + 0.5 * (y1 >= level)
    return float(dx * meas.sum())


def _superlevel_measure(f, level_log, logf, coeffs):
    if f.grid.d == 1:
        return _superlevel_measure_1d(logf, f.grid.dx, level_log, coeffs)
    return float(np.count_nonzero(logf >= level_log) * f.grid.cell)


def level_decompose(f, k_min=None, k_max=None, p=2.0):
    """Dyadic level sets of ``|f|``.

    Grid cells are classified exactly by ``floor(log2 |f|)``; the reported
    measures ``|E_k|`` use sub-cell crossings of the interpolated
    ``log|f|`` in one dimension and cell counts in two. The default window
    is ``[k* - 20, k* + 20]`` around the level of largest ``2^(kp)|E_k|``;
    the ``L^p`` mass outside the window is reported as ``tail_mass``.
    """
    a = np.abs(f.values)
    if not np.any(a):
        raise ValueError("zero function")
    with np.errstate(divide="ignore"):
        logf = np.log(a)
        kk = np.floor(np.log2(a))
    finite = np.isfinite(kk)
    ks = np.unique(kk[finite]).astype(int)
    if k_min is None or k_max is None:
        mass = {k: np.sum(a[kk == k] ** p) for k in ks}
        kstar = max(mass, key=mass.get)
        k_min = kstar - WINDOW if k_min is None else k_min
        k_max = kstar + WINDOW if k_max is None else k_max
    levels = []
    total = float(np.sum(a**p) * f.grid.cell)
    kept = 0.0
    coeffs = _cell_quadratics(logf) if f.grid.d == 1 else None
    upper = _superlevel_measure(f, (k_max + 1) * LOG2, logf, coeffs)
    for k in range(k_max, k_min - 1, -1):
        mask = kk == k
        lower = _superlevel_measure(f, k * LOG2, logf, coeffs)
        if not mask.any() and lower - upper <= 0:
            upper = lower
            continue
        vals = np.where(mask, f.values / 2.0**k, 0.0)
        levels.append(LevelSet(k, mask, max(lower - upper, 0.0), SampledFunction(f.grid, vals)))
        kept += float(np.sum(a[mask] ** p) * f.grid.cell)
        upper = lower
    levels.sort(key=lambda lv: lv.k)
    return LevelDecomposition(levels, max(total - kept, 0.0), total, p)


def gaussian_level_measure(k):
    """``|{2^k <= exp(-pi x^2) < 2^(k+1)}|`` in closed form (k <= -1)."""
    if k >= 0:
        return 0.0
    outer = math.sqrt(-k * LOG2 / math.pi)
    inner_r = math.sqrt(-(k + 1) * LOG2 / math.pi)
    return 2.0 * (outer - inner_r)


# --- popular level triple -----------------------------------------------------------------


def _indicator(mask, grid):
    return SampledFunction(grid, mask.astype(np.complex128))


def select_level_triple(f1, f2, f3, delta, exponents=(1.5, 1.5, 1.5)):
    """Level triple maximizing ``<1_E1 * 1_E2, 1_E3> / prod |E_i|^(1/p_i)``.

    Candidates are popular levels, ``2^(k p_i) |E_{i,k}| >= delta ||f_i||_p^p``,
    with ``|k_i - k_j| <= 20``. Raises "no popular triple" when no candidate
    triple reaches a normalized pairing of ``delta``.
    """
    if abs(sum(1.0 / p for p in exponents) - 2.0) > 1e-12:
        raise ValueError("exponents must satisfy sum 1/p_i = 2")
    fs = (f1, f2, f3)
    grid = f1.grid
    if any(f.grid != grid for f in fs):
        raise ValueError("grid mismatch")
    cands = []
    for f, p in zip(fs, exponents):
        dec = level_decompose(f, p=p)
        norm_p = lp_norm(f, p) ** p
        cells = [(lv.k, lv.mask, float(lv.mask.sum() * grid.cell)) for lv in dec.levels]
        cands.append([c for c in cells if c[2] > 0 and 2.0 ** (c[0] * p) * c[2] >= delta * norm_p])
    best, arg = -1.0, None
    conv_cache = {}
    for k1, m1, e1 in cands[0]:
        for k2, m2, e2 in cands[1]:
            if abs(k1 - k2) > WINDOW:
                continue
            key = (k1, k2)
            if key not in conv_cache:
                conv_cache[key] = convolve(_indicator(m1, grid), _indicator(m2, grid))
            conv = conv_cache[key]
            for k3, m3, e3 in cands[2]:
                if abs(k3 - k1) > WINDOW or abs(k3 - k2) > WINDOW:
                    continue
                pair = inner(conv, _indicator(m3, grid)).real
                score = pair / (e1 ** (1 / exponents[0]) * e2 ** (1 / exponents[1]) * e3 ** (1 / exponents[2]))
                if score > best:
                    best, arg = score, (k1, k2, k3)
    if arg is None or best < delta:
        raise ValueError("no popular triple")
    return arg


# --- power lift ---------------------------------------------------------------------------


def power_lift(f, p, r):
    """``g = |f|^(p/r)``, so that ``||g||_r^r = ||f||_p^p``."""
    if not (1.0 < r < p):
        raise ValueError("r must lie in (1, p)")
    if not np.any(f.values):
        raise ValueError("zero function")
    return SampledFunction(f.grid, np.abs(f.values) ** (p / r))


def power_lift_ratio(g, r):
    """``||g * g||_t / ||g||_r^2`` with ``1/t = 2/r - 1``."""
    t = 1.0 / (2.0 / r - 1.0)
    return lp_norm(convolve(g, g), t) / lp_norm(g, r) ** 2


# --- quasi-extremizer pipeline -------------------------------------------------------------


@dataclass
class StructureReport:
    level: int
    levels: tuple
    extracted: FiniteSet
    progression: ContinuumMultiprogression
    g: SampledFunction
    mass_fraction: float
    flatness: float
    pinned: bool
    lift_ratio: float
    flags: list = field(default_factory=list)

    def to_dict(self):
        return {
            "level": self.level,
            "levels": list(self.levels),
            "extracted_size": len(self.extracted),
            "progression": self.progression.to_dict(),
            "rank": self.progression.rank,
            "mass_fraction": self.mass_fraction,
            "flatness": self.flatness,
            "pinned": self.pinned,
            "lift_ratio": self.lift_ratio,
            "flags": list(self.flags),
        }


class PipelineError(ValueError):
    """A pipeline stage failed; ``stage`` names it."""

    def __init__(self, stage, message):
        super().__init__(f"{stage}: {message}")
        self.stage = stage


def _runs(idx):
    """Maximal runs of consecutive integers as ``(starts, lengths)``."""
    breaks = np.flatnonzero(np.diff(idx) != 1)
    starts = np.r_[idx[0], idx[breaks + 1]]
    ends = np.r_[idx[breaks], idx[-1]]
    return starts, ends - starts + 1


def _level_score(lv, p):
    """``2^(kp)|E_k|`` times the additive-energy density of the level cells."""
    cells = np.flatnonzero(lv.mask)
    if cells.size == 0:
        return 0.0
    S = FiniteSet.of(cells)
    density = additive_energy_discrete(S, S) / len(S) ** 3
    return 2.0 ** (lv.k * p) * cells.size * density


def quasi_extremizer_extract(f, p, eta):
    """Single-pass structure extraction for ``f`` with ``hy_ratio(f) >= eta A_p``.

    The returned ``g`` equals ``f`` on the cells of the selected level that
    lie inside the fitted progression and vanishes elsewhere, so ``g`` is
    dominated by ``f`` pointwise and supported in the progression.
    """
    if f.grid.d != 1:
        raise ValueError("extraction is one-dimensional")
    A = babenko(p)
    ratio = hy_ratio(f, p)
    if ratio < eta * A:
        raise ValueError(f"precondition violated: hy_ratio {ratio:.4f} below eta A_p = {eta * A:.4f}")
    grid = f.grid
    try:
        r = 0.5 * (1.0 + p)
        lift_ratio = power_lift_ratio(power_lift(f, p, r), r)
    except ValueError as exc:
        raise PipelineError("power_lift", str(exc)) from exc
    dec = level_decompose(f, p=p)
    top = max(dec.levels, key=lambda lv: _level_score(lv, p))
    cells = np.flatnonzero(top.mask)
    S = FiniteSet.of(cells)
    try:
        K = 2.0 * len(S) ** 3 / additive_energy_discrete(S, S)
        A1, _, _ = bsg_extract(S, S, K)
    except ValueError as exc:
        raise PipelineError("bsg_extract", str(exc)) from exc
    idx = A1.points[:, 0]
    starts, lengths = _runs(idx)
    flags = []
    if starts.size > 1 and np.all(lengths == lengths[0]) and lengths[0] > 1:
        run = int(lengths[0])
        base = FiniteSet.of(starts)
    else:
        run = 1
        base = A1
    try:
        K2 = len(sumset(base, base)) / len(base)
        P, _ = freiman_cover(base, K2)
    except ValueError as exc:
        raise PipelineError("freiman_cover", str(exc)) from exc
    x0 = grid.axis[0]
    cont = ContinuumMultiprogression(
        [x0 + P.a[0] * grid.dx],
        P.v.astype(np.float64) * grid.dx,
        P.N,
        run * grid.dx,
    )
    covered = np.zeros(grid.N, dtype=bool)
    for start in P.enumerate()[:, 0]:
        covered[start:start + run] = True
    support = covered & top.mask
    g = SampledFunction(grid, np.where(support, f.values, 0.0))
    nf = lp_norm(f, p)
    mass = lp_norm(g, p) / nf
    gmax = float(np.abs(g.values).max(initial=0.0))
    flat = gmax * cont.size ** (1.0 / p) / nf
    vals = np.abs(g.values[support])
    pinned = bool(np.all((vals >= 2.0**top.k) & (vals < 2.0 ** (top.k + 1))))
    if not P.is_proper():
        flags.append("fitted progression is not proper")
    return StructureReport(
        level=top.k,
        levels=tuple(lv.k for lv in dec.levels),
        extracted=A1,
        progression=cont,
        g=g,
        mass_fraction=mass,
        flatness=flat,
        pinned=pinned,
        lift_ratio=lift_ratio,
        flags=flags,
    )


# --- uncertainty probe ----------------------------------------------------------------------


def _gaussian_width(g, p, mass):
    """Shortest interval carrying ``mass`` of ``|g|^p``: ``|g|^p`` is a normal density."""
    a = float(g.params.A[0, 0])
    sigma = 1.0 / math.sqrt(2.0 * p * a)
    return 2.0 * sigma * float(ndtri(0.5 * (1.0 + mass)))


def _shortest_interval(x, density, mass, refine=16, levels=20001):
    """Shortest ``[a, b]`` with ``int_a^b density >= mass * total``.

    The density is refined by a cubic spline before integrating, and the
    window is optimized over its starting CDF level rather than grid nodes.
    """
    if not np.any(density > 0):
        raise ValueError("zero function")
    fine = np.linspace(x[0], x[-1], refine * (x.size - 1) + 1)
    dens = np.clip(CubicSpline(x, density)(fine), 0.0, None)
    df = fine[1] - fine[0]
    cdf = np.r_[0.0, np.cumsum(0.5 * (dens[1:] + dens[:-1]) * df)]
    cdf = cdf / cdf[-1]
    keep = np.r_[True, np.diff(cdf) > 0]
    cdf, fine = cdf[keep], fine[keep]
    c = np.linspace(0.0, 1.0 - mass, levels)
    widths = np.interp(c + mass, cdf, fine) - np.interp(c, cdf, fine)
    return float(widths.min())


def uncertainty_product(f, p, mass=0.9):
    """``(|I|, |J|, |I| |J|)`` for shortest intervals carrying ``mass`` of ``|f|^p`` and ``|f^|^q``.

    ``f`` may be a one-dimensional :class:`Gaussian` (closed form) or a
    sampled function (spline-refined density with a trapezoid CDF).
    """
    if not (0 < mass < 1):
        raise ValueError("mass must lie in (0, 1)")
    q = ExponentPair(p).q
    if isinstance(f, Gaussian):
        if f.d != 1:
            raise ValueError("closed form is one-dimensional")
        I = _gaussian_width(f, p, mass)
        J = _gaussian_width(gaussian_fourier(f), q, mass)
        return I, J, I * J
    if f.grid.d != 1:
        raise ValueError("uncertainty_product is one-dimensional")
    if lp_norm(f, p) == 0:
        raise ValueError("zero function")
    fh = fourier_transform(f)
    I = _shortest_interval(f.grid.axis, np.abs(f.values) ** p, mass)
    J = _shortest_interval(fh.grid.axis, np.abs(fh.values) ** q, mass)
    return I, J, I * J
