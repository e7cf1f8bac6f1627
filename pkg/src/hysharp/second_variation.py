"""Second variation of the Hausdorff-Young functional at a Gaussian.

Contents: the sharp/flat split of a perturbation, the quadratic form ``Q_F``,
the compact operator ``T(phi) = G^t (G^sigma * (G^t phi))`` with
``sigma = (p-1)/(2-p)`` and ``t = (2-p)/2`` together with its Hermite-type
eigenbasis, the two-branch pointwise expansion inequalities with calibrated
constants, and the cutoff family that probes optimality of ``B_{p,d}``.
"""
from __future__ import annotations

import json
import logging
import math
import warnings
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

import numpy as np
from scipy import linalg

from hysharp import kernels
from hysharp.constants import ExponentPair, b_constant, babenko, hy_ratio
from hysharp.grids import (
    Grid,
    SampledFunction,
    convolve,
    default_grid,
    fourier_transform,
    lp_norm,
)
from hysharp.reports import VerificationReport

LOGGER = logging.getLogger(__name__)

TINY = 1e-300
CALIBRATION_P = (1.2, 4.0 / 3.0, 1.5, 1.8)
CALIBRATION_ETAS = (0.01, 0.1, 0.3, 1.0)


def _gauss_power(grid, s):
    """Samples of ``G^s = exp(-s pi |x|^2)``."""
    return np.exp(-s * np.pi * grid.radius2())


# --- sharp / flat split ------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SharpFlatSplit:
    sharp: SampledFunction
    flat: SampledFunction
    eta: float


def split_sharp_flat(f, F, eta):
    """``f_sharp = f`` where ``|f| <= eta |F|``, ``f_flat = f`` elsewhere."""
    if not (0 < eta <= 0.5):
        raise ValueError("eta must lie in (0, 1/2]")
    if f.grid != F.grid:
        raise ValueError("grid mismatch")
    if not np.any(F.values):
        raise ValueError("reference function is identically zero")
    keep = np.abs(f.values) <= eta * np.abs(F.values)
    sharp = np.where(keep, f.values, 0.0)
    flat = np.where(keep, 0.0, f.values)
    return SharpFlatSplit(SampledFunction(f.grid, sharp), SampledFunction(f.grid, flat), eta)


# --- quadratic form -------------------------------------------------------------


def _weighted_squares(num, den, r):
    """Integrands ``(Re num/den)^2 |den|^r`` and ``(Im num/den)^2 |den|^r``, zero where |den| < 1e-300."""
    a = np.abs(den)
    live = a >= TINY
    safe = np.where(live, den, 1.0)
    ratio = np.where(live, num / safe, 0.0)
    w = np.where(live, np.where(live, a, 1.0) ** r, 0.0)
    return ratio.real**2 * w, ratio.imag**2 * w


def controlled_integral(h, F, p):
    """``int |h|^2 |F|^(p-2)``; raises if ``h`` is not dominated by ``F``."""
    a = np.abs(F.values)
    live = a >= TINY
    if np.any(np.abs(h.values[~live]) > 0):
        raise ValueError("h not controlled by F")
    integrand = np.where(live, np.abs(h.values) ** 2 * np.where(live, a, 1.0) ** (p - 2.0), 0.0)
    total = integrand.sum()
    if not np.isfinite(total):
        raise ValueError("h not controlled by F")
    edge = max(1, F.grid.N // 100)
    mask = np.zeros(F.grid.shape, dtype=bool)
    for ax in range(F.grid.d):
        idx = [slice(None)] * F.grid.d
        idx[ax] = np.r_[0:edge, F.grid.N - edge:F.grid.N]
        mask[tuple(idx)] = True
    if total > 0 and integrand[mask].sum() > 1e-6 * total:
        raise ValueError("h not controlled by F")
    return float(total * F.grid.cell)


def quadratic_form(F, h, p):
    """The second-variation form ``Q_F(h)``.

    ``(q-1)/2 ||TF||_q^-q int (Re Th/TF)^2 |TF|^q + 1/2 ||TF||_q^-q int (Im Th/TF)^2 |TF|^q
    - (p-1)/2 ||F||_p^-p int (Re h/F)^2 |F|^p - 1/2 ||F||_p^-p int (Im h/F)^2 |F|^p``
    with ``T`` the Fourier transform.
    """
    if F.grid != h.grid:
        raise ValueError("grid mismatch")
    q = ExponentPair(p).q
    controlled_integral(h, F, p)
    TF = fourier_transform(F)
    Th = fourier_transform(h)
    dual = TF.grid
    nq = np.sum(np.abs(TF.values) ** q) * dual.cell
    npp = np.sum(np.abs(F.values) ** p) * F.grid.cell
    re_t, im_t = _weighted_squares(Th.values, TF.values, q)
    re_x, im_x = _weighted_squares(h.values, F.values, p)
    freq = (0.5 * (q - 1.0) * re_t.sum() + 0.5 * im_t.sum()) * dual.cell / nq
    space = (0.5 * (p - 1.0) * re_x.sum() + 0.5 * im_x.sum()) * F.grid.cell / npp
    return float(freq - space)


# --- the operator T ----------------------------------------------------------------


def operator_exponents(p):
    """``(sigma, t) = ((p-1)/(2-p), (2-p)/2)``."""
    if not (1.0 < p < 2.0):
        raise ValueError("invalid exponent: p must lie in (1, 2)")
    return (p - 1.0) / (2.0 - p), (2.0 - p) / 2.0


def operator_apply(phi, p):
    """``T(phi) = G^t (G^sigma * (G^t phi))`` by pointwise products and grid convolution."""
    sigma, t = operator_exponents(p)
    grid = phi.grid
    Gt = _gauss_power(grid, t)
    Gs = SampledFunction(grid, _gauss_power(grid, sigma))
    inner = convolve(Gs, SampledFunction(grid, Gt * phi.values))
    return SampledFunction(grid, Gt * inner.values)


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    """Nystrom matrix ``K_ij = G^t(x_i) G^sigma(x_i - x_j) G^t(x_j) dx^d``."""

    grid: Grid
    p: float
    K: np.ndarray


def operator_matrix(p, grid):
    sigma, t = operator_exponents(p)
    pts = np.column_stack([c.ravel() for c in grid.coords()])
    K = kernels.gaussian_kernel_matrix(pts, t, sigma, grid.cell)
    return OperatorMatrix(grid, p, K)


def predicted_spectrum(p, k_max, d=1):
    """Eigenvalues ``(p-1)^|alpha| (2-p)^(d/2)`` in decreasing order, with multiplicity."""
    out = []
    n = 0
    while len(out) < k_max:
        mult = math.comb(n + d - 1, d - 1)
        out.extend([(p - 1.0) ** n * (2.0 - p) ** (d / 2.0)] * mult)
        n += 1
    return out[:k_max]


def _top_eigenvalues(K, k):
    n = K.shape[0]
    vals = linalg.eigh(K, eigvals_only=True, subset_by_index=[n - k, n - 1])
    return vals[::-1]


def operator_spectrum(p, k_max, grid=None, dense=False):
    """Top ``k_max`` eigenvalues of the Nystrom matrix, decreasing.

    In two dimensions the matrix is the Kronecker square of the
    one-dimensional matrix on the same axis, so its eigenvalues are the
    pairwise products of the one-dimensional ones; ``dense=True`` forces the
    full ``N^2 x N^2`` matrix instead (feasible only for small ``N``).
    """
    if k_max > 12:
        raise ValueError("k_max must be at most 12")
    grid = default_grid(1) if grid is None else grid
    if grid.N < 256:
        warnings.warn("grid coarser than N=256; eigenvalues may be inaccurate", RuntimeWarning, stacklevel=2)
    if grid.d == 1 or dense:
        return list(_top_eigenvalues(operator_matrix(p, grid).K, k_max))
    axis = Grid(1, grid.L, grid.N)
    e1 = _top_eigenvalues(operator_matrix(p, axis).K, k_max)
    prod = np.sort(np.multiply.outer(e1, e1).ravel())[::-1]
    return list(prod[:k_max])


def spectrum_table(p, k_max, grid=None):
    """Rows ``(k, lambda_computed, lambda_predicted, rel_err)``."""
    grid = default_grid(1) if grid is None else grid
    comp = operator_spectrum(p, k_max, grid)
    pred = predicted_spectrum(p, k_max, grid.d)
    return [(k, c, e, abs(c - e) / e) for k, (c, e) in enumerate(zip(comp, pred))]


# --- Hermite-type eigenbasis ---------------------------------------------------------


@dataclass(frozen=True, eq=False)
class HermitePolynomial:
    """Monic polynomial ``Q_alpha``; ``coeffs[k]`` multiplies ``x^k`` (d=1)."""

    alpha: tuple
    coeffs: np.ndarray

    @property
    def degree(self):
        return len(self.coeffs) - 1

    def __call__(self, x):
        return np.polynomial.polynomial.polyval(x, self.coeffs)


def operator_on_polynomials(n_max, p):
    """Matrix of ``T`` on ``span{x^k G^(p/2)}``, ``k <= n_max`` (d=1).

    Column ``k`` holds the coefficients of ``Q`` with ``T(x^k G^(p/2)) = Q G^(p/2)``,
    built from ``T(G^(p/2)) = (2-p)^(1/2) G^(p/2)`` and the recursion
    ``Q_{xP} = (p-1) x Q_P - (2 pi)^-1 Q_P' + (2 pi)^-1 Q_{P'}``.
    """
    P = np.polynomial.polynomial
    M = np.zeros((n_max + 1, n_max + 1))
    cols = [np.array([math.sqrt(2.0 - p)])]
    for k in range(1, n_max + 1):
        prev = cols[k - 1]
        # Q_{P'} for P = x^(k-1) is (k-1) * column k-2
        lower = (k - 1) * cols[k - 2] if k >= 2 else np.zeros(1)
        new = P.polysub((p - 1.0) * P.polymulx(prev), P.polyder(prev) / (2 * np.pi))
        new = P.polyadd(new, lower / (2 * np.pi))
        cols.append(new)
    for k, col in enumerate(cols):
        M[: len(col), k] = col
    return M


@lru_cache(maxsize=None)
def _hermite_table(n_max, p):
    M = operator_on_polynomials(n_max, p)
    lam = np.diag(M)
    out = []
    for k in range(n_max + 1):
        v = np.zeros(k + 1)
        v[k] = 1.0
        # back substitution for the upper-triangular eigenvector
        for j in range(k - 1, -1, -1):
            v[j] = M[j, j + 1:k + 1] @ v[j + 1:k + 1] / (lam[k] - lam[j])
        out.append(v)
    return tuple(out)


def hermite_polynomials(n_max, p):
    """Monic eigen-polynomials ``Q_0..Q_n_max`` of ``T`` (d=1).

    They coincide with the monic orthogonal polynomials for the weight
    ``exp(-p pi x^2)``, i.e. Gram-Schmidt applied to ``x^n G^(p/2)`` in ``L^2``.
    """
    if n_max > 20:
        raise ValueError("n_max must be at most 20")
    return [HermitePolynomial((k,), c) for k, c in enumerate(_hermite_table(n_max, p))]


def hermite_norm2(k, p):
    """``int Q_k^2 exp(-p pi x^2) dx = k! s^(2k) p^(-1/2)`` with ``s^2 = 1/(2 pi p)``."""
    return math.factorial(k) * (1.0 / (2 * np.pi * p)) ** k / math.sqrt(p)


def _alpha(alpha, d):
    if isinstance(alpha, (int, np.integer)):
        alpha = (int(alpha),) if d == 1 else None
    if alpha is None or len(alpha) != d:
        raise ValueError("multi-index does not match the grid dimension")
    if sum(alpha) > 12:
        raise ValueError("|alpha| must be at most 12")
    return tuple(int(a) for a in alpha)


def _orthonormal_factor(k, p, x):
    """``H_k(x) = Q_k(x)/||Q_k G^(p/2)||_2`` in one variable."""
    Q = hermite_polynomials(max(k, 1), p)[k]
    return Q(x) / math.sqrt(hermite_norm2(k, p))


def eigenfunction(alpha, p, grid):
    """``psi_alpha = H_alpha G^(p/2)`` (unit ``L^2`` norm in the continuum)."""
    alpha = _alpha(alpha, grid.d)
    vals = _gauss_power(grid, p / 2.0)
    for k, x in zip(alpha, grid.coords()):
        vals = vals * _orthonormal_factor(k, p, x)
    return SampledFunction(grid, vals)


def normal_direction(alpha, p, grid):
    """``psi_alpha G^((2-p)/2) = H_alpha G``: the perturbation direction attached to ``psi_alpha``.

    For ``|alpha| >= 3`` it is weighted-orthogonal to all quadratic
    polynomials and so lies in the normal space at ``G``.
    """
    alpha = _alpha(alpha, grid.d)
    vals = _gauss_power(grid, 1.0)
    for k, x in zip(alpha, grid.coords()):
        vals = vals * _orthonormal_factor(k, p, x)
    return SampledFunction(grid, vals)


# --- pointwise expansion inequalities --------------------------------------------


def _real_sweep():
    big = np.linspace(-100.0, 100.0, 400001)
    mags = np.logspace(-4, 2, 60001)
    near = -1.0 + np.concatenate([np.logspace(-9, 0, 9001), -np.logspace(-9, 0, 9001)])
    return np.concatenate([big, mags, -mags, near])


def _complex_sweep():
    r = np.concatenate([np.logspace(-4, 2, 1201)])
    ang = np.linspace(0.0, 2 * np.pi, 1441)[:-1]
    z = np.multiply.outer(r, np.exp(1j * ang)).ravel()
    near = -1.0 + np.multiply.outer(np.logspace(-9, 0, 400), np.exp(1j * ang[::4])).ravel()
    return np.concatenate([z, near])


def _real_ratios(t, p, eta):
    """(C-ratios on |t|<=eta, c-ratios on |t|>eta) for the real inequality."""
    lhs = np.abs(1.0 + t) ** p
    small = (np.abs(t) <= eta) & (t != 0)
    ts = t[small]
    # log1p/expm1 keep the cancellation in the small branch under control
    with np.errstate(divide="ignore"):
        pw = np.expm1(p * np.log1p(ts))
    C_r = (p * ts + 0.5 * p * (p - 1) * ts**2 - pw) / (eta * ts**2)
    tl = t[np.abs(t) > eta]
    c_r = (lhs[np.abs(t) > eta] - 1.0 - p * tl) / (eta ** (2 - p) * np.abs(tl) ** p)
    return C_r, c_r


def _complex_ratios(z, p, eta):
    u, v = z.real, z.imag
    r2 = u * u + v * v
    small = (r2 <= eta * eta) & (r2 > 0)
    us, vs = u[small], v[small]
    with np.errstate(divide="ignore"):
        pw = np.expm1(0.5 * p * np.log1p(2 * us + us**2 + vs**2))
    C_r = (p * us + 0.5 * p * (p - 1) * us**2 + 0.5 * p * vs**2 - pw) / (eta * r2[small])
    big = r2 > eta * eta
    lhs = ((1 + u[big]) ** 2 + v[big] ** 2) ** (0.5 * p)
    c_r = (lhs - 1 - p * u[big]) / (eta ** (2 - p) * r2[big] ** (0.5 * p))
    return C_r, c_r


def calibrate_pointwise(p, etas=CALIBRATION_ETAS):
    """Calibrated constants for both expansion inequalities at exponent ``p``.

    ``c`` is half the infimum of the measured large-branch ratio and ``C``
    twice the supremum of the small-branch ratio over a deterministic sweep.
    """
    t = _real_sweep()
    z = _complex_sweep()
    out = {}
    for name, pts, fn in (("real", t, _real_ratios), ("complex", z, _complex_ratios)):
        sup_C, inf_c = 0.0, np.inf
        for eta in etas:
            C_r, c_r = fn(pts, p, eta)
            sup_C = max(sup_C, float(C_r.max(initial=0.0)))
            inf_c = min(inf_c, float(c_r.min()))
        out[name] = {"c": 0.5 * inf_c, "C": 2.0 * sup_C}
    return out


def calibration_table():
    """Calibrated constants for the standard exponents (regenerates the shipped table)."""
    return {repr(p): calibrate_pointwise(p) for p in CALIBRATION_P}


@lru_cache(maxsize=None)
def _shipped_table():
    text = resources.files("hysharp").joinpath("data/pointwise_constants.json").read_text()
    return json.loads(text)


@lru_cache(maxsize=None)
def calibrated_constants(p, kind="real"):
    """``(c, C)`` for the ``kind`` ("real" or "complex") inequality at exponent ``p``."""
    table = _shipped_table()
    for key, entry in table.items():
        if abs(float(key) - p) < 1e-12:
            return entry[kind]["c"], entry[kind]["C"]
    entry = calibrate_pointwise(p)[kind]
    return entry["c"], entry["C"]


def _rounding_allowance(*terms):
    return 64 * np.finfo(float).eps * (1.0 + sum(np.abs(t) for t in terms))


def check_pointwise_real(t, eta, p, c=None, C=None):
    """Check ``|1+t|^p`` against the two-branch lower bound.

    Returns ``(ok, margin)`` with margin = lhs - rhs; arrays in, arrays out.
    ``ok`` allows a rounding slack of 64 ulp of the magnitudes involved.
    """
    if not (0 < eta <= 1):
        raise ValueError("eta must lie in (0, 1]")
    c0, C0 = calibrated_constants(p, "real")
    c = c0 if c is None else c
    C = C0 if C is None else C
    ta = np.atleast_1d(np.asarray(t, dtype=np.float64))
    margin = kernels.pointwise_real_margin(ta, p, eta, c, C)
    ok = margin >= -_rounding_allowance(np.abs(1 + ta) ** p, p * ta, p * p * ta * ta)
    if np.ndim(t) == 0:
        return bool(ok[0]), float(margin[0])
    return ok, margin


def check_pointwise_complex(z, eta, p, c=None, C=None):
    """Complex analogue of :func:`check_pointwise_real` with quadratic part
    ``p(p-1)/2 (Re z)^2 + p/2 (Im z)^2``."""
    if not (0 < eta <= 1):
        raise ValueError("eta must lie in (0, 1]")
    c0, C0 = calibrated_constants(p, "complex")
    c = c0 if c is None else c
    C = C0 if C is None else C
    za = np.atleast_1d(np.asarray(z, dtype=np.complex128))
    margin = kernels.pointwise_complex_margin(za, p, eta, c, C)
    ok = margin >= -_rounding_allowance(np.abs(1 + za) ** p, p * za.real, p * p * np.abs(za) ** 2)
    if np.ndim(z) == 0:
        return bool(ok[0]), float(margin[0])
    return ok, margin


def pointwise_sweep(p, eta, n, rng):
    """Count violations of both inequalities on ``n`` random samples each.

    Half the samples are uniform (``t`` in [-100, 100], ``z`` in the disc of
    radius 100); half have log-uniform magnitude in [1e-6, 100] to stress the
    small branch and the neighbourhood of ``-1``.
    """
    h = n // 2
    t = np.concatenate([
        rng.uniform(-100, 100, n - h),
        rng.choice([-1.0, 1.0], h) * 10 ** rng.uniform(-6, 2, h),
    ])
    rad = np.concatenate([100 * np.sqrt(rng.uniform(0, 1, n - h)), 10 ** rng.uniform(-6, 2, h)])
    z = rad * np.exp(2j * np.pi * rng.uniform(0, 1, n))
    ok_r, m_r = check_pointwise_real(t, eta, p)
    ok_c, m_c = check_pointwise_complex(z, eta, p)
    return {
        "real_violations": int(np.count_nonzero(~ok_r)),
        "complex_violations": int(np.count_nonzero(~ok_c)),
        "real_min_margin": float(m_r.min()),
        "complex_min_margin": float(m_c.min()),
    }


# --- Taylor substitute and spectral bound ----------------------------------------------


def standard_gaussian(grid):
    return SampledFunction(grid, _gauss_power(grid, 1.0))


def taylor_substitute_check(f, eta, p, F=None, c=None, C=None):
    """Compare the normalized ratio at ``F + f`` with its second-order bound.

    LHS ``= ||(F+f)^||_q / (A_p^d ||F+f||_p)``;
    RHS ``= 1 + Q_F(f_sharp) + C eta ||f_sharp||_p^2/||F||_p^2 - c eta^(2-p) ||f_flat||_p^p/||F||_p^p``.

    Raises when ``Re int f conj(F) |F|^(p-2) != 0``. The smallness regime
    ``||f||_p <= eta^gamma ||F||_p`` with ``gamma = (3-p)/(2-p)`` is reported
    as a flag, not enforced.
    """
    grid = f.grid
    F = standard_gaussian(grid) if F is None else F
    if c is None or C is None:
        c0, C0 = prop_constants(p)
        c = c0 if c is None else c
        C = C0 if C is None else C
    nF = lp_norm(F, p)
    nf = lp_norm(f, p)
    a = np.abs(F.values)
    live = a >= TINY
    w = np.where(live, np.conj(F.values) * np.where(live, a, 1.0) ** (p - 2.0), 0.0)
    first = float(np.sum((f.values * w).real) * grid.cell)
    if abs(first) > 1e-8 * max(nf, 1e-300) * nF ** (p - 1):
        raise ValueError(f"precondition violated: first-variation moment {first:.3e} is not zero")
    gamma = (3.0 - p) / (2.0 - p)
    flags = []
    if nf > eta**gamma * nF:
        flags.append("outside smallness regime ||f|| <= eta^gamma ||F||")
    split = split_sharp_flat(f, F, eta)
    A = babenko(p) ** grid.d
    lhs = hy_ratio(F + f, p) / A if nf > 0 else 1.0
    Qs = quadratic_form(F, split.sharp, p)
    ns = lp_norm(split.sharp, p)
    nb = lp_norm(split.flat, p)
    sharp_term = C * eta * ns**2 / nF**2
    flat_term = c * eta ** (2 - p) * nb**p / nF**p
    rhs = 1.0 + Qs + sharp_term - flat_term
    tol = 1e-12
    return VerificationReport(
        name="taylor_substitute",
        params={"p": p, "eta": eta, "c": c, "C": C},
        computed={
            "lhs": lhs,
            "rhs": rhs,
            "margin": rhs - lhs,
            "Q_sharp": Qs,
            "sharp_term": sharp_term,
            "flat_penalty": flat_term,
            "norm_sharp": ns,
            "norm_flat": nb,
            "first_variation": first,
        },
        reference={"gamma": gamma},
        tolerance=tol,
        passed=bool(lhs <= rhs + tol),
        anchor="ratio(F+f) <= 1 + Q_F(f#) + C eta ||f#||^2/||F||^2 - c eta^(2-p) ||fb||^p/||F||^p",
        flags=flags,
    )


def prop_constants(p):
    """Constants used on the right-hand side of :func:`taylor_substitute_check`.

    The smaller ``c`` and larger ``C`` of the two pointwise calibrations.
    """
    cr, Cr = calibrated_constants(p, "real")
    cc, Cc = calibrated_constants(p, "complex")
    return min(cr, cc), max(Cr, Cc)


def _monomials(d, max_deg):
    out = []
    for n in range(max_deg + 1):
        if d == 1:
            out.append((n,))
        else:
            out.extend((i, n - i) for i in range(n, -1, -1))
    return out


def spectral_bound_check(h, p):
    """Check ``Q_G(h) <= -(2-p)(p-1) p^(d/2)/2 int |h|^2 G^(p-2)`` under the moment conditions.

    Requires ``int h x^alpha G^(p-1) = 0`` for ``|alpha| <= 1`` and
    ``int Re(h) x^alpha G^(p-1) = 0`` for ``|alpha| = 2``; raises otherwise,
    listing the offending moments.
    """
    grid = h.grid
    d = grid.d
    G = standard_gaussian(grid)
    wnorm = controlled_integral(h, G, p)
    Gp1 = _gauss_power(grid, p - 1.0)
    Gp = _gauss_power(grid, p)
    xs = grid.coords()
    bad = []
    for alpha in _monomials(d, 2):
        mono = np.ones(grid.shape)
        for k, x in zip(alpha, xs):
            mono = mono * x**k
        vals = h.values if sum(alpha) <= 1 else h.values.real
        mom = np.sum(vals * mono * Gp1) * grid.cell
        scale = math.sqrt(wnorm * np.sum(mono**2 * Gp) * grid.cell)
        if abs(mom) > 1e-8 * max(scale, 1e-300):
            bad.append((alpha, complex(mom)))
    if bad:
        listing = ", ".join(f"alpha={a}: {m:.3e}" for a, m in bad)
        raise ValueError(f"moment conditions violated: {listing}")
    Q = quadratic_form(G, h, p)
    bound = -0.5 * (2 - p) * (p - 1) * p ** (d / 2) * wnorm
    tol = 1e-6
    return VerificationReport(
        name="spectral_bound",
        params={"p": p, "d": d},
        computed={"Q": Q, "weighted_norm2": wnorm},
        reference={"bound": bound},
        tolerance=tol,
        passed=bool(Q <= bound + tol),
        anchor="Q(h) <= -(2-p)(p-1)p^(d/2)/2 int |h|^2 G^(p-2) under the moment conditions",
    )


# --- sharpness family ----------------------------------------------------------------


def smooth_step(y):
    """C-infinity step: 0 for y <= 0, 1 for y >= 1."""
    y = np.asarray(y, dtype=np.float64)
    a = np.where(y > 0, np.exp(-1.0 / np.where(y > 0, y, 1.0)), 0.0)
    b = np.where(y < 1, np.exp(-1.0 / np.where(y < 1, 1.0 - y, 1.0)), 0.0)
    return a / (a + b)


def plateau_bump(u):
    """Even smooth bump equal to 1 on [-1/2, 1/2] and supported in [-1, 1]."""
    return smooth_step(2.0 * (1.0 - np.abs(u)))


def sharpness_family(eps, rho, p, grid=None):
    """Cut-off perturbation ``eta(x/R) (eps H_3 + c_eps H_1) G``, ``R = rho sqrt(ln(1/eps))``.

    ``c_eps`` makes ``int f x G^(p-1) = 0``; the even moments vanish by oddness.
    """
    grid = default_grid(1) if grid is None else grid
    if grid.d != 1:
        raise ValueError("sharpness family is one-dimensional")
    if not (np.pi * rho**2 < 1):
        raise ValueError("rho must satisfy pi rho^2 < 1")
    if not (0 < eps <= 0.2):
        raise ValueError("eps too large for the cutoff scale (must lie in (0, 0.2])")
    x = grid.axis
    R = rho * math.sqrt(math.log(1.0 / eps))
    cut = plateau_bump(x / R)
    H1 = _orthonormal_factor(1, p, x)
    H3 = _orthonormal_factor(3, p, x)
    G = np.exp(-np.pi * x**2)
    w = cut * x * G**p
    c_eps = -eps * np.sum(H3 * w) / np.sum(H1 * w)
    vals = cut * (eps * H3 + c_eps * H1) * G
    return SampledFunction(grid, vals), float(c_eps)


def deficit_ratio_details(eps, rho, p, grid=None):
    """Deficit ``A_p - ratio(G + f_eps)`` against two normalizations of the weighted norm."""
    f, c_eps = sharpness_family(eps, rho, p, grid)
    grid = f.grid
    G = standard_gaussian(grid)
    total = G + f
    deficit = babenko(p) - hy_ratio(total, p)
    wnorm = controlled_integral(f, G, p)
    npp = lp_norm(total, p) ** p
    return {
        "eps": eps,
        "c_eps": c_eps,
        "deficit": deficit,
        "weighted_norm2": wnorm,
        "ratio": deficit / (wnorm / npp),
        "ratio_unnormalized": deficit / wnorm,
    }


def deficit_ratio(eps, rho, p, grid=None):
    """``(A_p - ratio(G+f)) / (||G+f||_p^-p int |f|^2 G^(p-2))``."""
    return deficit_ratio_details(eps, rho, p, grid)["ratio"]


def richardson_limit(values):
    """Extrapolate ``v(eps) = L + K eps^s`` from values at ``eps, eps/2, eps/4``.

    Returns ``(L, s)``; both are NaN when the differences do not shrink
    geometrically (no positive order can be fitted).
    """
    v1, v2, v3 = values
    d1, d2 = v1 - v2, v2 - v3
    if d2 == 0 or d1 / d2 <= 1.0:
        return float("nan"), float("nan")
    s = math.log2(d1 / d2)
    return v3 - d2 / (2.0**s - 1.0), s


def sharpness_report(eps_values=(0.1, 0.05, 0.025), rho=0.4, p=1.5, grid=None, tol=0.05):
    """Extrapolated deficit ratio against ``B_{p,1}`` (relative tolerance ``tol``)."""
    rows = [deficit_ratio_details(e, rho, p, grid) for e in eps_values]
    ratios = [r["ratio"] for r in rows]
    limit, order = richardson_limit(ratios) if len(ratios) == 3 else (float("nan"), float("nan"))
    raw_limit, raw_order = (
        richardson_limit([r["ratio_unnormalized"] for r in rows]) if len(rows) == 3 else (float("nan"),) * 2
    )
    B = b_constant(p, 1)
    err = abs(limit - B) / B if math.isfinite(limit) else float("inf")
    flags = [] if math.isfinite(limit) else ["no convergent Richardson order"]
    return VerificationReport(
        name="sharpness",
        params={"p": p, "rho": rho, "eps": list(eps_values)},
        computed={
            "ratios": ratios,
            "ratios_unnormalized": [r["ratio_unnormalized"] for r in rows],
            "c_eps_over_eps": [r["c_eps"] / r["eps"] for r in rows],
            "limit": limit,
            "order": order,
            "limit_unnormalized": raw_limit,
            "last_ratio_over_B": ratios[-1] / B,
            "relative_error": err,
        },
        reference={"B": B},
        tolerance=tol,
        passed=bool(err <= tol),
        anchor="deficit / (||G+f||^-p int |f|^2 G^(p-2)) -> B_{p,d} along the cutoff family",
        flags=flags,
    ), rows
