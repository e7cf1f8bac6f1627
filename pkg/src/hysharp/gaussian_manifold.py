"""Gaussians exp(P), the normal-space projection and distances to the manifold.

A quadratic polynomial is written ``P(x) = -x.Ax + b.x + c`` with ``A`` real,
symmetric and positive definite, ``b`` a complex vector and ``c`` a complex
scalar. The tangent space of the manifold at ``g = exp(P)`` is spanned by
``P_i g`` where ``P_i`` runs over the real basis

    -x_m x_n (m <= n),  x_k,  i x_k,  1,  i

and a function ``f`` decomposes as ``g + f_perp`` with ``f_perp`` in the
normal space exactly when ``Re int (f - g) P_i conj(g) |g|^(p-2) = 0`` for
every basis element.
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from hysharp.grids import SampledFunction, lp_norm

LOGGER = logging.getLogger(__name__)

LOG_TINY = np.log(1e-300)
BASIN_THRESHOLD = 0.5


@dataclass(frozen=True, eq=False)
class QuadraticPolynomial:
    """``P(x) = -x.Ax + b.x + c``."""

    A: np.ndarray
    b: np.ndarray
    c: complex

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=np.float64))
        b = np.atleast_1d(np.asarray(self.b, dtype=np.complex128))
        if A.shape != (b.size, b.size):
            raise ValueError("A and b have inconsistent dimensions")
        if np.abs(A - A.T).max() > 1e-14:
            raise ValueError("A must be symmetric")
        if np.linalg.eigvalsh(A).min() <= 0:
            raise ValueError("A must be positive definite")
        A.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", complex(self.c))

    @property
    def d(self):
        return self.b.size

    def evaluate(self, coords):
        """Evaluate on coordinate arrays (one per axis)."""
        out = np.full(np.shape(coords[0]), self.c, dtype=np.complex128)
        for i in range(self.d):
            out += self.b[i] * coords[i]
            for j in range(self.d):
                out -= self.A[i, j] * coords[i] * coords[j]
        return out

    def to_dict(self):
        return {
            "A": self.A.tolist(),
            "b_re": self.b.real.tolist(),
            "b_im": self.b.imag.tolist(),
            "c_re": self.c.real,
            "c_im": self.c.imag,
        }

    @classmethod
    def from_dict(cls, data):
        b = np.asarray(data["b_re"]) + 1j * np.asarray(data["b_im"])
        return cls(np.asarray(data["A"]), b, complex(data["c_re"], data["c_im"]))

    def distance(self, other):
        """Max absolute difference between parameter entries."""
        return max(
            np.abs(self.A - other.A).max(),
            np.abs(self.b - other.b).max(),
            abs(self.c - other.c),
        )


@dataclass(frozen=True, eq=False)
class Gaussian:
    """The function ``exp(P)``."""

    params: QuadraticPolynomial

    @property
    def d(self):
        return self.params.d

    @classmethod
    def from_parts(cls, A, b=None, c=0.0):
        A = np.atleast_2d(np.asarray(A, dtype=np.float64))
        if b is None:
            b = np.zeros(A.shape[0])
        return cls(QuadraticPolynomial(A, b, c))

    @classmethod
    def standard(cls, d=1):
        """``G(x) = exp(-pi |x|^2)``."""
        return cls.from_parts(np.pi * np.eye(d))

    def to_dict(self):
        return self.params.to_dict()

    @classmethod
    def from_dict(cls, data):
        return cls(QuadraticPolynomial.from_dict(data))


def sample(g, grid):
    """Evaluate ``exp(P)`` on ``grid``."""
    if g.d != grid.d:
        raise ValueError("dimension mismatch between Gaussian and grid")
    P = g.params.evaluate(grid.coords())
    if P.real.max() > 700:
        raise OverflowError("Gaussian values overflow double precision")
    return SampledFunction(grid, np.exp(P))


def gaussian_fourier(g):
    """Closed-form transform of ``exp(P)``.

    Completing the square gives ``A^ = pi^2 A^-1``, ``b^ = -i pi A^-1 b`` and
    ``c^ = c + (d/2) ln(pi) - (1/2) ln det A + b.A^-1 b / 4``.
    """
    P = g.params
    Ainv = np.linalg.inv(P.A)
    Ainv = 0.5 * (Ainv + Ainv.T)
    A_hat = np.pi**2 * Ainv
    b_hat = -1j * np.pi * (Ainv @ P.b)
    _, logdet = np.linalg.slogdet(P.A)
    c_hat = P.c + 0.5 * P.d * np.log(np.pi) - 0.5 * logdet + (P.b @ Ainv @ P.b) / 4.0
    return Gaussian(QuadraticPolynomial(A_hat, b_hat, c_hat))


def gaussian_lp_norm(g, p):
    """Closed-form ``||exp(P)||_p``."""
    P = g.params
    Ainv = np.linalg.inv(P.A)
    _, logdet = np.linalg.slogdet(P.A)
    rb = P.b.real
    log_int = (
        p * P.c.real
        + 0.5 * P.d * np.log(np.pi / p)
        - 0.5 * logdet
        + p * (rb @ Ainv @ rb) / 4.0
    )
    return float(np.exp(log_int / p))


def gaussian_hy_ratio(g, p):
    """Closed-form ``||g^||_q / ||g||_p``; equals ``A_p^d`` for every Gaussian."""
    q = p / (p - 1.0)
    return gaussian_lp_norm(gaussian_fourier(g), q) / gaussian_lp_norm(g, p)


def translate(g, a):
    """Parameters of ``x -> g(x - a)``."""
    P = g.params
    a = np.atleast_1d(np.asarray(a, dtype=np.float64))
    b = P.b + 2.0 * P.A @ a
    c = P.c - a @ P.A @ a - P.b @ a
    return Gaussian(QuadraticPolynomial(P.A, b, c))


def modulate(g, xi):
    """Parameters of ``x -> exp(2 pi i x.xi) g(x)``."""
    P = g.params
    xi = np.atleast_1d(np.asarray(xi, dtype=np.float64))
    return Gaussian(QuadraticPolynomial(P.A, P.b + 2j * np.pi * xi, P.c))


def dilate(g, lam, p):
    """Parameters of ``x -> lam^(d/p) g(lam x)`` (an ``L^p`` isometry)."""
    P = g.params
    return Gaussian(
        QuadraticPolynomial(lam**2 * P.A, lam * P.b, P.c + (P.d / p) * np.log(lam))
    )


# --- tangent space -----------------------------------------------------------


def tangent_labels(d):
    labels = [f"-x{m}x{n}" for m in range(d) for n in range(m, d)]
    labels += [f"x{k}" for k in range(d)] + [f"ix{k}" for k in range(d)]
    return labels + ["1", "i"]


def tangent_polynomials(grid):
    """Basis polynomials evaluated on ``grid``, in the order of :func:`tangent_labels`."""
    xs = grid.coords()
    d = grid.d
    polys = [(-xs[m] * xs[n]).astype(np.complex128) for m in range(d) for n in range(m, d)]
    polys += [xs[k].astype(np.complex128) for k in range(d)]
    polys += [1j * xs[k] for k in range(d)]
    polys += [np.ones(grid.shape, dtype=np.complex128), np.full(grid.shape, 1j)]
    return polys


def tangent_basis(g, grid):
    """The functions ``P_i g`` spanning the tangent space at ``g``."""
    gv = sample(g, grid).values
    return [SampledFunction(grid, P * gv) for P in tangent_polynomials(grid)]


def _theta_to_params(theta, d):
    """Map basis coefficients to a QuadraticPolynomial."""
    nq = d * (d + 1) // 2
    A = np.zeros((d, d))
    k = 0
    for m in range(d):
        for n in range(m, d):
            if m == n:
                A[m, m] = theta[k]
            else:
                A[m, n] = A[n, m] = 0.5 * theta[k]
            k += 1
    b = theta[nq:nq + d] + 1j * theta[nq + d:nq + 2 * d]
    c = theta[nq + 2 * d] + 1j * theta[nq + 2 * d + 1]
    return QuadraticPolynomial(A, b, c)


def _params_to_theta(P):
    d = P.d
    quad = [P.A[m, m] if m == n else 2.0 * P.A[m, n] for m in range(d) for n in range(m, d)]
    return np.concatenate([quad, P.b.real, P.b.imag, [P.c.real, P.c.imag]])


def _weights(P_vals, p):
    """``conj(g)|g|^(p-2)`` and ``|g|^p`` from log-values, zeroed where |g| < 1e-300."""
    re = P_vals.real
    live = re > LOG_TINY
    w = np.where(live, np.exp((p - 1.0) * np.where(live, re, 0.0) - 1j * P_vals.imag), 0.0)
    gp = np.where(live, np.exp(p * np.where(live, re, 0.0)), 0.0)
    return w, gp, live


def _residuals(fv, polys, P, grid, p, jacobian=False):
    Pv = P.evaluate(grid.coords())
    g = np.exp(np.minimum(Pv.real, 700)) * np.exp(1j * Pv.imag)
    w, gp, _ = _weights(Pv, p)
    diff = fv - g
    r = np.array([np.sum((diff * Pi * w).real) for Pi in polys]) * grid.cell
    if not jacobian:
        return r
    n = len(polys)
    J = np.empty((n, n))
    for j, Pj in enumerate(polys):
        dw = w * (np.conj(Pj) + (p - 2.0) * Pj.real)
        for i, Pi in enumerate(polys):
            J[i, j] = np.sum((-Pi * Pj * gp + diff * Pi * dw).real)
    return r, J * grid.cell


def normal_residuals(f, g, p):
    """Entries ``Re int (f - g) P_i conj(g) |g|^(p-2)`` over the tangent basis."""
    polys = tangent_polynomials(f.grid)
    Pv = g.params.evaluate(f.grid.coords())
    _, _, live = _weights(Pv, p)
    if not live.all() and np.abs(f.values[~live]).max() > 0:
        warnings.warn("normal residual integrand clamped where |g| < 1e-300", RuntimeWarning, stacklevel=2)
    return _residuals(f.values, polys, g.params, f.grid, p)


# --- initialization ------------------------------------------------------------


def moment_init(f, p):
    """Gaussian matching the centre, covariance, phase slope and ``L^p`` mass of ``f``."""
    grid = f.grid
    xs = [x.ravel() for x in grid.coords()]
    fv = f.values.ravel()
    w = np.abs(fv) ** p
    mass = w.sum()
    if mass == 0:
        raise ValueError("zero function")
    mu = np.array([np.sum(x * w) / mass for x in xs])
    dev = [x - m for x, m in zip(xs, mu)]
    cov = np.array([[np.sum(a * b * w) / mass for b in dev] for a in dev])
    A = np.linalg.inv(cov) / (2.0 * p)
    A = 0.5 * (A + A.T)
    re_b = 2.0 * A @ mu
    # linear phase from averaged neighbour phase increments along each axis
    im_b = np.empty(grid.d)
    vals = f.values
    for ax in range(grid.d):
        a = np.take(vals, np.arange(1, grid.N), axis=ax)
        z = np.take(vals, np.arange(grid.N - 1), axis=ax)
        prod = a * np.conj(z)
        im_b[ax] = np.angle(np.sum(prod)) / grid.dx
    trial = QuadraticPolynomial(A, re_b + 1j * im_b, 0.0)
    carrier = np.exp(-1j * trial.evaluate(grid.coords()).imag).ravel()
    im_c = np.angle(np.sum(fv * carrier * np.abs(fv) ** (p - 1)))
    re_c = np.log(lp_norm(f, p) / gaussian_lp_norm(Gaussian(trial), p))
    return Gaussian(QuadraticPolynomial(A, trial.b, complex(re_c, im_c)))


def _wrap_phase(P):
    c = complex(P.c.real, np.angle(np.exp(1j * P.c.imag)))
    return QuadraticPolynomial(P.A, P.b, c)


# --- projection ------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ProjectionResult:
    """``f = sample(pi) + perp`` with ``perp`` in the normal space at ``pi``."""

    pi: Gaussian
    perp: SampledFunction
    dist_star: float
    converged: bool
    iterations: int
    residual: float
    message: str = ""


def project(f, p, max_iter=200, tol=1e-9, init=None):
    """Newton solve for the Gaussian whose normal residuals against ``f`` vanish.

    Returns ``converged=False`` (no exception) when the start is outside the
    basin (``||f - g_init||_p > 0.5 ||f||_p``) or Newton stalls.
    """
    grid = f.grid
    nf = lp_norm(f, p)
    if nf == 0:
        raise ValueError("zero function")
    g = init if init is not None else moment_init(f, p)
    polys = tangent_polynomials(grid)
    fv = f.values

    def result(P, it, ok, msg):
        g_vals = sample(Gaussian(P), grid).values
        perp = SampledFunction(grid, fv - g_vals)
        r = _residuals(fv, polys, P, grid, p)
        return ProjectionResult(
            Gaussian(_wrap_phase(P)), perp, lp_norm(perp, p), ok, it, float(np.abs(r).max()), msg
        )

    if lp_norm(f - sample(g, grid), p) > BASIN_THRESHOLD * nf:
        return result(g.params, 0, False, "initial guess outside the projection basin")

    P = g.params
    target = tol * nf
    r, J = _residuals(fv, polys, P, grid, p, jacobian=True)
    for it in range(1, max_iter + 1):
        if np.abs(r).max() < target:
            return result(P, it - 1, True, "converged")
        step = np.linalg.lstsq(J, -r, rcond=None)[0]
        theta = _params_to_theta(P)
        base = np.linalg.norm(r)
        alpha = 1.0
        accepted = False
        while alpha > 1e-8:
            try:
                trial = _theta_to_params(theta + alpha * step, grid.d)
            except ValueError:  # left the positive-definite cone
                alpha *= 0.5
                continue
            r_new, J_new = _residuals(fv, polys, trial, grid, p, jacobian=True)
            if np.all(np.isfinite(r_new)) and np.linalg.norm(r_new) < base:
                P, r, J = trial, r_new, J_new
                accepted = True
                break
            alpha *= 0.5
        if not accepted:
            ok = np.abs(r).max() < target
            return result(P, it, ok, "converged" if ok else "line search stalled")
    ok = np.abs(r).max() < target
    return result(P, max_iter, ok, "converged" if ok else "max_iter reached")


def dist_star(f, p):
    return project(f, p).dist_star


# --- distance to the manifold ----------------------------------------------------


@dataclass(frozen=True, eq=False)
class DistanceResult:
    value: float
    gaussian: Gaussian
    start_values: tuple
    disagreement: bool


def _chol_to_params(u, d):
    """Unconstrained vector -> QuadraticPolynomial with A = L L^T."""
    nq = d * (d + 1) // 2
    L = np.zeros((d, d))
    k = 0
    for i in range(d):
        for j in range(i + 1):
            L[i, j] = np.exp(u[k]) if i == j else u[k]
            k += 1
    A = L @ L.T
    b = u[nq:nq + d] + 1j * u[nq + d:nq + 2 * d]
    c = u[nq + 2 * d] + 1j * u[nq + 2 * d + 1]
    return L, QuadraticPolynomial(0.5 * (A + A.T), b, c)


def _params_to_chol(P):
    d = P.d
    L = np.linalg.cholesky(P.A)
    u = []
    for i in range(d):
        for j in range(i + 1):
            u.append(np.log(L[i, j]) if i == j else L[i, j])
    return np.concatenate([u, P.b.real, P.b.imag, [P.c.real, P.c.imag]])


def _dist_objective(u, fv, xs, cell, p, d):
    L, P = _chol_to_params(u, d)
    Pv = P.evaluate(xs)
    re = np.minimum(Pv.real, 700.0)
    g = np.exp(re + 1j * Pv.imag)
    r = fv - g
    a = np.abs(r)
    val = np.sum(a**p) * cell
    # d/du sum |r|^p = sum p |r|^(p-2) Re(conj(r) dr), dr = -g dP
    safe = np.where(a > 0, a, 1.0)
    wt = np.where(a > 0, p * safe ** (p - 2.0), 0.0) * np.conj(r) * (-g)
    grads = []
    y = [sum(L[i, j] * xs[i] for i in range(d)) for j in range(d)]  # (L^T x)_j
    for i in range(d):
        for j in range(i + 1):
            dP = -2.0 * xs[i] * y[j]
            if i == j:
                dP = dP * L[i, i]
            grads.append(np.sum((wt * dP).real) * cell)
    for k in range(d):
        grads.append(np.sum((wt * xs[k]).real) * cell)
    for k in range(d):
        grads.append(np.sum((wt * 1j * xs[k]).real) * cell)
    grads.append(np.sum(wt.real) * cell)
    grads.append(np.sum((wt * 1j).real) * cell)
    return val, np.array(grads)


def dist_to_gaussians(f, p, n_starts=4, rng=None, extra_starts=(), max_iter=3000):
    """Multi-start quasi-Newton estimate of ``inf_g ||f - g||_p``.

    Starts are the moment-matched Gaussian, the projection (when it
    converges), any ``extra_starts`` and random perturbations drawn from
    ``rng``. ``disagreement`` is set when no second start reaches the best
    value to within 1e-6 relative.
    """
    grid = f.grid
    nf = lp_norm(f, p)
    if nf == 0:
        raise ValueError("zero function")
    rng = np.random.default_rng(0) if rng is None else rng
    fv = f.values / nf
    xs = grid.coords()
    unit = SampledFunction(grid, fv)
    starts = []
    try:
        g0 = moment_init(unit, p)
        starts.append(g0.params)
        pr = project(unit, p, init=g0)
        if pr.converged:
            starts.append(pr.pi.params)
    except (ValueError, np.linalg.LinAlgError):
        g0 = Gaussian.standard(grid.d)
        starts.append(g0.params)
    for g in extra_starts:
        P = g.params
        starts.append(QuadraticPolynomial(P.A, P.b, P.c - np.log(nf)))
    base = _params_to_chol(starts[0])
    while len(starts) < n_starts:
        u = base + rng.normal(scale=0.3, size=base.size)
        starts.append(_chol_to_params(u, grid.d)[1])

    best_val, best_P, values = np.inf, None, []
    for P0 in starts:
        u0 = _params_to_chol(P0)
        res = optimize.minimize(
            _dist_objective,
            u0,
            args=(fv, xs, grid.cell, p, grid.d),
            jac=True,
            method="L-BFGS-B",
            options={"maxiter": max_iter, "ftol": 1e-16, "gtol": 1e-14, "maxcor": 30},
        )
        val = max(float(res.fun), 0.0) ** (1.0 / p)
        values.append(val * nf)
        if val < best_val:
            best_val, best_P = val, _chol_to_params(res.x, grid.d)[1]
    values = tuple(values)
    best = best_val * nf
    agree = sum(v <= best + 1e-6 * nf for v in values)
    P = QuadraticPolynomial(best_P.A, best_P.b, best_P.c + np.log(nf))
    return DistanceResult(best, Gaussian(_wrap_phase(P)), values, len(values) > 1 and agree < 2)
