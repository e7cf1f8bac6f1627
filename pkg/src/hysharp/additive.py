"""Additive structure: finite sets, multiprogressions, energies and covers.

Discrete sets live in ``Z^d`` and are stored as sorted integer arrays;
continuum sets in one dimension are finite unions of intervals, handled with
exact piecewise-polynomial arithmetic (``fractions.Fraction`` endpoints give
exact results).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from hysharp import kernels
from hysharp.reports import VerificationReport

SUMSET_CAP = 10**7


# --- finite sets -------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class FiniteSet:
    """Sorted distinct points of ``Z^d``; ``points`` has shape ``(n, d)``."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.int64)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] == 0:
            raise ValueError("a finite set needs at least one point")
        order = np.lexsort(pts.T[::-1])
        pts = pts[order]
        if pts.shape[0] > 1 and np.any(np.all(pts[1:] == pts[:-1], axis=1)):
            raise ValueError("points must be distinct")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @classmethod
    def of(cls, values):
        """Build from any iterable, discarding duplicates."""
        pts = np.asarray(list(values) if not isinstance(values, np.ndarray) else values, dtype=np.int64)
        if pts.ndim == 1:
            pts = pts[:, None]
        return cls(np.unique(pts, axis=0))

    @property
    def d(self):
        return self.points.shape[1]

    def __len__(self):
        return self.points.shape[0]

    def __eq__(self, other):
        return isinstance(other, FiniteSet) and np.array_equal(self.points, other.points)

    def __hash__(self):
        return hash(self.points.tobytes())

    def __contains__(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=np.int64))
        return bool(np.any(np.all(self.points == x, axis=1)))

    def to_list(self):
        if self.d == 1:
            return [int(v) for v in self.points[:, 0]]
        return [tuple(int(c) for c in row) for row in self.points]

    def issuperset(self, other):
        mine = {tuple(r) for r in self.points.tolist()}
        return all(tuple(r) in mine for r in other.points.tolist())

    def negate(self):
        return FiniteSet(-self.points)

    def save(self, path):
        """Newline-delimited integers (whitespace-separated coordinates for d > 1)."""
        with open(path, "w") as fh:
            for row in self.points:
                fh.write(" ".join(str(int(c)) for c in row) + "\n")

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            rows = [line.split() for line in fh if line.strip()]
        return cls.of(np.array([[int(c) for c in r] for r in rows], dtype=np.int64))


def _encode(sets):
    """Mixed-radix encoding of ``Z^d`` sets into integers, valid for their sums."""
    d = sets[0].d
    if any(s.d != d for s in sets):
        raise ValueError("dimension mismatch")
    lo = sum(s.points.min(axis=0) for s in sets)
    hi = sum(s.points.max(axis=0) for s in sets)
    radix = hi - lo + 1
    weights = np.cumprod(np.r_[1, radix[:-1]]).astype(np.int64)
    return weights, radix


def _decode(codes, weights, radix, offset):
    out = np.empty((codes.size, weights.size), dtype=np.int64)
    rest = codes.copy()
    for k in range(weights.size - 1, -1, -1):
        out[:, k], rest = np.divmod(rest, weights[k])
    return out + offset


def _sum_counts(A, B):
    """Representation counts of ``A + B`` as ``(offset, counts, weights, radix)``."""
    weights, radix = _encode([A, B])
    lo_a, lo_b = A.points.min(axis=0), B.points.min(axis=0)
    a = (A.points - lo_a) @ weights
    b = (B.points - lo_b) @ weights
    if int(a.max()) + int(b.max()) + 1 > 20 * SUMSET_CAP:
        raise ValueError("sumset cardinality cap exceeded")
    off, counts = kernels.representation_counts(a, b)
    return off, counts, weights, radix, lo_a + lo_b


def sumset(A, B):
    """``A + B`` by exact enumeration."""
    off, counts, weights, radix, lo = _sum_counts(A, B)
    codes = np.flatnonzero(counts) + off
    if codes.size > SUMSET_CAP:
        raise ValueError("sumset cardinality cap exceeded")
    return FiniteSet(_decode(codes, weights, radix, lo))


def msum(m, A, n, B):
    """``mA - nB``: all sums of ``m`` elements of ``A`` minus ``n`` elements of ``B``."""
    if m < 0 or n < 0 or m + n == 0:
        raise ValueError("need m, n >= 0 with m + n >= 1")
    out = None
    for _ in range(m):
        out = A if out is None else sumset(out, A)
    negB = B.negate()
    for _ in range(n):
        out = negB if out is None else sumset(out, negB)
    return out


def additive_energy_discrete(A, B):
    """``#{a + b = a' + b'} = sum_s r(s)^2``."""
    _, counts, *_ = _sum_counts(A, B)
    return int(np.dot(counts, counts))


# --- continuum sets in one dimension ---------------------------------------------------


def merge_intervals(intervals):
    """Sort and merge a union of closed intervals; empty pieces are dropped."""
    pieces = sorted((lo, hi) for lo, hi in intervals if hi > lo)
    out = []
    for lo, hi in pieces:
        if out and lo <= out[-1][1]:
            out[-1] = (out[-1][0], max(out[-1][1], hi))
        else:
            out.append((lo, hi))
    return out


def measure(intervals):
    return sum(hi - lo for lo, hi in merge_intervals(intervals))


def _is_exact(x):
    return isinstance(x, (int, Fraction)) and not isinstance(x, bool)


def indicator_convolution(A, B, t):
    """``(1_A * 1_B)(t) = |A cap (t - B)|`` at a single point."""
    total = 0
    for alo, ahi in A:
        for blo, bhi in B:
            w = min(ahi, t - blo) - max(alo, t - bhi)
            if w > 0:
                total += w
    return total


def additive_energy_continuum(A, B, exact=None):
    """``||1_A * 1_B||_2^2`` for finite unions of intervals in ``R``.

    The convolution is piecewise linear with breakpoints among the sums of
    endpoints, so the integral of its square is summed exactly segment by
    segment. With integer or ``Fraction`` endpoints (or ``exact=True``) the
    result is a ``Fraction``; otherwise a float.
    """
    A = merge_intervals(A)
    B = merge_intervals(B)
    if not A or not B:
        return 0
    ends = [x for iv in A + B for x in iv]
    if exact is None:
        exact = all(_is_exact(x) for x in ends)
    if exact:
        A = [(Fraction(lo), Fraction(hi)) for lo, hi in A]
        B = [(Fraction(lo), Fraction(hi)) for lo, hi in B]
        bps = sorted({x + y for x in (v for iv in A for v in iv) for y in (v for iv in B for v in iv)})
        ys = [indicator_convolution(A, B, t) for t in bps]
        total = Fraction(0)
        for k in range(len(bps) - 1):
            h = bps[k + 1] - bps[k]
            total += h * (ys[k] ** 2 + ys[k] * ys[k + 1] + ys[k + 1] ** 2) / 3
        return total
    a = np.array(A, dtype=np.float64)
    b = np.array(B, dtype=np.float64)
    bps = np.unique(np.add.outer(a.ravel(), b.ravel()).ravel())
    # overlap |[alo, ahi] cap [t - bhi, t - blo]| summed over all interval pairs
    lo = np.maximum(a[:, 0][None, :, None], bps[:, None, None] - b[:, 1][None, None, :])
    hi = np.minimum(a[:, 1][None, :, None], bps[:, None, None] - b[:, 0][None, None, :])
    ys = np.clip(hi - lo, 0.0, None).sum(axis=(1, 2))
    h = np.diff(bps)
    return float(np.sum(h * (ys[:-1] ** 2 + ys[:-1] * ys[1:] + ys[1:] ** 2) / 3.0))


# --- multiprogressions -----------------------------------------------------------------


def _lattice_indices(N):
    grids = np.meshgrid(*[np.arange(n) for n in N], indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1) if N else np.zeros((1, 0), dtype=np.int64)


@dataclass(frozen=True, eq=False)
class DiscreteMultiprogression:
    """``{a + sum_i n_i v_i : 0 <= n_i < N_i}`` in ``Z^d``."""

    a: np.ndarray
    v: np.ndarray
    N: tuple

    def __post_init__(self):
        a = np.atleast_1d(np.asarray(self.a, dtype=np.int64))
        v = np.asarray(self.v, dtype=np.int64).reshape(len(self.N), a.size)
        if any(int(n) < 1 for n in self.N):
            raise ValueError("lengths must be at least 1")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "N", tuple(int(n) for n in self.N))

    @property
    def rank(self):
        return len(self.N)

    @property
    def d(self):
        return self.a.size

    @property
    def size(self):
        return int(np.prod(self.N, dtype=np.int64)) if self.N else 1

    def enumerate(self):
        """All ``prod N_i`` points, with repetition if the map is not injective."""
        return self.a[None, :] + _lattice_indices(self.N) @ self.v

    def points(self):
        return FiniteSet.of(self.enumerate())

    def is_proper(self):
        """Injectivity of the enumeration map, checked by hashing every point."""
        pts = self.enumerate()
        return len({tuple(r) for r in pts.tolist()}) == self.size

    def contains(self, A):
        return self.points().issuperset(A)

    def to_dict(self):
        return {"a": self.a.tolist(), "v": self.v.tolist(), "N": list(self.N), "s": None}

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)


@dataclass(frozen=True, eq=False)
class ContinuumMultiprogression:
    """``{a + sum_i n_i v_i + [0, s)^d}``, a union of ``prod N_i`` cubes of side ``s``."""

    a: np.ndarray
    v: np.ndarray
    N: tuple
    s: float

    def __post_init__(self):
        a = np.atleast_1d(np.asarray(self.a, dtype=np.float64))
        v = np.asarray(self.v, dtype=np.float64).reshape(len(self.N), a.size)
        if not self.s > 0:
            raise ValueError("cube side must be positive")
        if any(int(n) < 1 for n in self.N):
            raise ValueError("lengths must be at least 1")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "N", tuple(int(n) for n in self.N))

    @property
    def rank(self):
        return len(self.N)

    @property
    def d(self):
        return self.a.size

    @property
    def size(self):
        """``sigma(P) = s^d prod N_i``."""
        return float(self.s**self.d * np.prod(self.N))

    def corners(self):
        return self.a[None, :] + _lattice_indices(self.N) @ self.v

    def range_measure(self, cells_per_side=64):
        """Lebesgue measure of the range: exact for d = 1, rasterized otherwise."""
        c = self.corners()
        if self.d == 1:
            return float(measure([(x, x + self.s) for x in c[:, 0]]))
        h = self.s / cells_per_side
        idx = np.floor((c - c.min(axis=0)) / h + 0.5).astype(np.int64)
        offs = _lattice_indices((cells_per_side,) * self.d)
        cells = (idx[:, None, :] + offs[None, :, :]).reshape(-1, self.d)
        return float(np.unique(cells, axis=0).shape[0] * h**self.d)

    def is_proper(self, cells_per_side=64):
        """Range measure equals ``sigma(P)`` up to one raster cell per cube."""
        tol = self.size / cells_per_side if self.d > 1 else 1e-12 * self.size
        return abs(self.range_measure(cells_per_side) - self.size) <= tol

    def to_dict(self):
        return {"a": self.a.tolist(), "v": self.v.tolist(), "N": list(self.N), "s": self.s}

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, data):
        return cls(data["a"], data["v"] if data["v"] else np.zeros((0, len(data["a"]))), tuple(data["N"]), data["s"])


# --- relatively prime example ---------------------------------------------------------


def example_pq(p, q, delta=0.1, n_lambda=1 << 16):
    """Union and sumset of ``{kp : k < q}`` and ``{kq : k < p}``, plus a dilation search.

    The search scans ``lambda`` over a uniform grid of ``[0, 1)`` and marks
    those with ``max_x ||lambda x||_{R/Z} < delta`` on ``P cup Q``; the report
    records the largest ``||lambda||_{R/Z}`` among them against ``2 delta/(pq)``.
    """
    if p < 2 or q < 2 or p == q or math.gcd(p, q) != 1:
        raise ValueError("p, q must be distinct coprime integers >= 2")
    P = FiniteSet.of([k * p for k in range(q)])
    Q = FiniteSet.of([k * q for k in range(p)])
    union = FiniteSet.of(np.r_[P.points[:, 0], Q.points[:, 0]])
    ssum = sumset(P, Q)
    lams = np.arange(n_lambda) / n_lambda
    dist = kernels.torus_max_dist(lams, union.points[:, 0].astype(np.float64))
    ok = dist < delta
    lam_norm = np.minimum(lams, 1.0 - lams)
    worst = float(lam_norm[ok].max(initial=0.0))
    bound = 2 * delta / (p * q)
    return VerificationReport(
        name="example_pq",
        params={"p": p, "q": q, "delta": delta, "n_lambda": n_lambda},
        computed={
            "union_size": len(union),
            "sumset_size": len(ssum),
            "admissible_count": int(ok.sum()),
            "max_admissible_lambda_norm": worst,
        },
        reference={"union_size": p + q - 1, "sumset_size": p * q, "lambda_bound": bound},
        tolerance=0.0,
        passed=bool(len(union) == p + q - 1 and len(ssum) == p * q and worst <= bound),
        anchor="#(P cup Q) = p+q-1, #(P+Q) = pq, admissible dilations have ||lambda|| <= 2 delta/(pq)",
    )


# --- approximation by Z ------------------------------------------------------------------


@dataclass(frozen=True)
class AffineMap:
    """``x -> lam * x + b`` (``lam`` diagonal in d = 2)."""

    lam: tuple
    b: tuple

    @property
    def jacobian(self):
        return float(np.prod(np.abs(self.lam)))

    def __call__(self, x):
        return np.asarray(x) * np.asarray(self.lam) + np.asarray(self.b)


def _arc_cover(lam, corners, s):
    """Shortest arc of R/Z covering ``lam * (corner + [0, s))``; returns (length, start)."""
    starts = np.sort(np.mod(lam * corners, 1.0))
    w = lam * s
    if w >= 1:
        return 1.0, 0.0
    nxt = np.r_[starts[1:], starts[0] + 1.0]
    gaps = nxt - (starts + w)
    k = int(np.argmax(gaps))
    if gaps[k] <= 0:
        return 1.0, 0.0
    return 1.0 - float(gaps[k]), float(nxt[k] % 1.0)


def _feasible(lam, corners, s, delta):
    # a relative safety margin keeps the strict inequality after rounding
    return _arc_cover(lam, corners, s)[0] < 2 * delta * (1 - 1e-9)


def _rank_candidates(v, lam_max, budget):
    """Dilations making ``lam * v_i`` close to integers.

    Rank 1: ``k / v``. Rank 2: convergent denominators of ``v_2/v_1`` seed a
    box enumeration. Rank 3: Dirichlet box enumeration over the first
    coefficient with the others rounded. The least-squares ``lam`` for each
    integer vector is returned.
    """
    v = np.abs(np.asarray(v, dtype=np.float64))
    v = v[v > 0]
    if v.size == 0:
        return np.array([])
    i0 = int(np.argmax(v))
    kmax = int(min(lam_max * v[i0] + 1, budget))
    k1 = np.arange(1, kmax + 1, dtype=np.float64)
    lam0 = k1 / v[i0]
    if v.size == 1:
        return lam0
    cands = [lam0]
    others = np.delete(v, i0)
    base = np.round(np.multiply.outer(lam0, others))
    for shift in (-1.0, 0.0, 1.0):
        ks = base + shift
        num = k1 * v[i0] + ks @ others
        cands.append(num / (v[i0] ** 2 + others @ others))
    if v.size == 2:
        cands.append(_convergent_candidates(v[i0], others[0], lam_max))
    return np.concatenate(cands)


def _convergent_candidates(v1, v2, lam_max):
    """``lam = q_k / v1`` for continued-fraction denominators ``q_k`` of ``v2/v1``."""
    x = v2 / v1
    qs = []
    h0, h1 = 0, 1
    k0, k1 = 1, 0
    for _ in range(40):
        a = math.floor(x)
        h0, h1 = h1, a * h1 + h0
        k0, k1 = k1, a * k1 + k0
        qs.append(k1)
        frac = x - a
        if frac < 1e-12 or k1 / v1 > lam_max:
            break
        x = 1.0 / frac
    return np.array([q / v1 for q in qs if q > 0], dtype=np.float64)


def _extend(lam, corners, s, delta, lam_max):
    """Push a feasible ``lam`` up to the edge of its feasible interval by bisection."""
    lo, step = lam, max(lam * 1e-3, 1e-12)
    hi = lo + step
    while hi < lam_max and _feasible(hi, corners, s, delta):
        lo, step = hi, 2 * step
        hi = lo + step
    hi = min(hi, lam_max)
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if _feasible(mid, corners, s, delta):
            lo = mid
        else:
            hi = mid
    return lo


def _approx_1d(corners, v, s, delta, budget):
    lam_max = 2 * delta / s
    cands = _rank_candidates(v, lam_max, budget)
    cands = cands[(cands > 0) & (cands < lam_max)]
    flags = []
    if cands.size > budget:
        cands = cands[:budget]
        flags.append("search budget exhausted")
    # rank 0 fallback: shrink the whole hull into an arc of length < 2 delta
    span = corners.max() - corners.min() + s
    best = 2 * delta / span * (1 - 1e-9)
    for lam in np.sort(np.unique(cands))[::-1]:
        if lam <= best:
            break
        if _feasible(lam, corners, s, delta):
            best = lam
            break
    best = _extend(best, corners, s, delta, lam_max)
    length, start = _arc_cover(best, corners, s)
    b = -(start + 0.5 * length)
    b -= math.floor(b + 0.5)
    return best, b, flags


def gap_approximation(P, delta, budget=10**7):
    """Affine ``T`` with ``||T x||_{R^d/Z^d} < delta`` on ``P`` and large Jacobian.

    Works coordinate by coordinate (a diagonal map in d = 2). Reports
    ``|J(T)|`` and the fitted ``c = |J| / delta^(d r + d^2)``.
    """
    if not (0 < delta <= 0.5):
        raise ValueError("delta must lie in (0, 1/2]")
    if P.rank > 3:
        raise ValueError("rank must be at most 3")
    if P.d > 2 or (P.d == 2 and P.rank > 2):
        raise ValueError("supported: d = 1 with rank <= 3, d = 2 with rank <= 2")
    corners = P.corners()
    lams, bs, flags = [], [], []
    for k in range(P.d):
        lam, b, fl = _approx_1d(corners[:, k], P.v[:, k], P.s, delta, budget)
        lams.append(lam)
        bs.append(b)
        flags.extend(fl)
    T = AffineMap(tuple(lams), tuple(bs))
    worst = max_torus_distance(T, P)
    J = T.jacobian
    expo = P.d * P.rank + P.d**2
    report = VerificationReport(
        name="gap_approximation",
        params={"delta": delta, "rank": P.rank, "d": P.d},
        computed={"lambda": list(lams), "b": list(bs), "jacobian": J, "max_distance": worst, "c_fit": J / delta**expo},
        reference={"exponent": expo},
        tolerance=delta,
        passed=bool(worst < delta and J > 0),
        anchor="|J(T)| >= c delta^(d r + d^2) with ||T x||_{R^d/Z^d} < delta on P",
        flags=flags,
    )
    return T, report


def max_torus_distance(T, P, samples_per_cube=65):
    """``max ||T x||`` over a rasterization of ``P`` (cube corners and interior points)."""
    c = P.corners()
    u = np.linspace(0.0, P.s, samples_per_cube, endpoint=False)
    worst = 0.0
    for k in range(P.d):
        y = T.lam[k] * np.add.outer(c[:, k], u).ravel() + T.b[k]
        worst = max(worst, float(np.abs(y - np.floor(y + 0.5)).max()))
    return worst


# --- determinant search ------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class MatrixSample:
    """Matrices drawn from a convex symmetric set ``E`` with a measure estimate."""

    matrices: np.ndarray
    measure: float
    measure_ci: tuple = (0.0, 0.0)

    def __post_init__(self):
        m = np.asarray(self.matrices, dtype=np.float64)
        if m.ndim != 3 or m.shape[1] != m.shape[2]:
            raise ValueError("matrices must have shape (n, d, d)")
        if not np.all(np.isfinite(m)):
            raise ValueError("matrices must be finite")
        if self.measure > 0 and m.shape[0] < 100:
            raise ValueError("sample size must be at least 100")
        object.__setattr__(self, "matrices", m)

    @property
    def d(self):
        return self.matrices.shape[1]

    def scaled(self, factor):
        """The sample of ``factor * E``; the measure scales by ``factor^(d^2)``."""
        k = factor ** (self.d**2)
        return MatrixSample(self.matrices * factor, self.measure * k, tuple(c * k for c in self.measure_ci))


def sample_convex_set(member, d, bound, n, rng, mc_points=10**5):
    """Rejection-sample ``n`` matrices from ``E = {T : member(T)}`` inside ``[-bound, bound]^(d x d)``.

    ``member`` takes an array ``(m, d, d)`` and returns a boolean mask. The
    measure is the Monte Carlo estimate from ``mc_points`` box samples with a
    95% normal-approximation interval.
    """
    D = d * d
    box = (2.0 * bound) ** D
    probe = rng.uniform(-bound, bound, size=(mc_points, d, d))
    frac = float(np.mean(member(probe)))
    half = 1.96 * math.sqrt(frac * (1 - frac) / mc_points)
    out = []
    while sum(len(o) for o in out) < n:
        draw = rng.uniform(-bound, bound, size=(max(4 * n, 1024), d, d))
        out.append(draw[member(draw)])
    mats = np.concatenate(out)[:n]
    return MatrixSample(mats, box * frac, (box * max(frac - half, 0.0), box * (frac + half)))


def ball_sample(d, r, n, rng, mc_points=10**5):
    """Uniform sample of the Frobenius ball of radius ``r``."""
    return sample_convex_set(lambda m: np.sum(m**2, axis=(1, 2)) <= r * r, d, r, n, rng, mc_points)


def ellipsoid_sample(d, axes, n, rng, mc_points=10**5):
    """Uniform sample of ``{T : sum (T_k/axes_k)^2 <= 1}`` (entries in row-major order)."""
    ax = np.asarray(axes, dtype=np.float64).reshape(d, d)
    return sample_convex_set(lambda m: np.sum((m / ax) ** 2, axis=(1, 2)) <= 1.0, d, float(ax.max()), n, rng, mc_points)


def _det(m):
    if m.shape[-1] == 2:
        return m[..., 0, 0] * m[..., 1, 1] - m[..., 0, 1] * m[..., 1, 0]
    if m.shape[-1] == 3:
        return (
            m[..., 0, 0] * (m[..., 1, 1] * m[..., 2, 2] - m[..., 1, 2] * m[..., 2, 1])
            - m[..., 0, 1] * (m[..., 1, 0] * m[..., 2, 2] - m[..., 1, 2] * m[..., 2, 0])
            + m[..., 0, 2] * (m[..., 1, 0] * m[..., 2, 1] - m[..., 1, 1] * m[..., 2, 0])
        )
    raise ValueError("d must be 2 or 3")


@dataclass(frozen=True, eq=False)
class DeterminantResult:
    indices: np.ndarray
    coefficients: np.ndarray
    matrices: np.ndarray
    det: float
    ratio: float
    flags: list = field(default_factory=list)


def _zero_sum_coeffs(K, C, rng):
    while True:
        s = rng.integers(-C, C + 1, size=K)
        s[-1] = -s[:-1].sum()
        if abs(s[-1]) <= C and np.any(s):
            return s


def determinant_search(E, K_max=4, C_max=8, rng=None, n_trials=2000, n_greedy=200):
    """Integer combination ``sum s_j T_j`` with ``sum s_j = 0`` and large ``|det|``.

    Random subsets and coefficients seed the search; the best combination is
    then improved greedily by zero-sum unit moves and element swaps. The
    ratio ``|det| / mu(E)^(1/d)`` is reported.
    """
    if E.d not in (2, 3):
        raise ValueError("d must be 2 or 3")
    if K_max < 2 or C_max < 1:
        raise ValueError("need K_max >= 2 and C_max >= 1")
    rng = np.random.default_rng() if rng is None else rng
    mats = E.matrices
    n = mats.shape[0]
    best = (-1.0, None, None)
    for _ in range(n_trials):
        K = int(rng.integers(2, K_max + 1))
        idx = rng.choice(n, size=min(K, n), replace=False)
        s = _zero_sum_coeffs(idx.size, C_max, rng)
        val = abs(float(_det(np.tensordot(s, mats[idx], axes=1))))
        if val > best[0]:
            best = (val, idx, s)
    val, idx, s = best
    for _ in range(n_greedy):
        improved = False
        for i in range(idx.size):
            for j in range(idx.size):
                if i == j:
                    continue
                t = s.copy()
                t[i] += 1
                t[j] -= 1
                if max(abs(t[i]), abs(t[j])) > C_max:
                    continue
                cand = abs(float(_det(np.tensordot(t, mats[idx], axes=1))))
                if cand > val:
                    val, s, improved = cand, t, True
        k = int(rng.integers(idx.size))
        swap = int(rng.integers(n))
        if swap not in idx:
            trial = idx.copy()
            trial[k] = swap
            cand = abs(float(_det(np.tensordot(s, mats[trial], axes=1))))
            if cand > val:
                val, idx, improved = cand, trial, True
        if not improved:
            break
    flags = []
    if E.measure <= 0:
        flags.append("degenerate set: measure zero")
        ratio = float("nan")
    else:
        ratio = val / E.measure ** (1.0 / E.d)
    if val == 0:
        flags.append("no nonsingular combination found")
    return DeterminantResult(idx, s, mats[idx], val, ratio, flags)


# --- Freiman-type cover -------------------------------------------------------------------


def _rank1_hull(x):
    lo = int(x.min())
    g = int(np.gcd.reduce(x - lo)) if x.size > 1 else 1
    g = max(g, 1)
    return DiscreteMultiprogression([lo], [[g]], (int((x.max() - lo) // g) + 1,))


def _rank2_fit(x, v1, v2):
    y = x - x.min()
    n2, r = np.divmod(y, v2)
    if np.any(r % v1):
        return None
    n1 = r // v1
    P = DiscreteMultiprogression([int(x.min())], [[v1], [v2]], (int(n1.max()) + 1, int(n2.max()) + 1))
    return P


def freiman_cover(A, K, max_generators=60):
    """Proper progression of rank <= 2 containing ``A`` with small size.

    Requires ``|A + A| <= K |A|``. Rank-2 candidates take generator pairs
    among the smallest positive differences in ``A - A``; the rank-1
    candidate is the arithmetic hull. Returns the smallest proper cover and
    its report (flagged when the cover is no better than the hull and the
    hull exceeds ``K |A|``).
    """
    if A.d != 1:
        raise ValueError("freiman_cover works in Z")
    if len(A) > 10**4:
        raise ValueError("|A| must be at most 10^4")
    doubling = len(sumset(A, A)) / len(A)
    if doubling > K:
        raise ValueError(f"precondition violated: |A+A| = {doubling:.3g}|A| exceeds K|A|")
    x = A.points[:, 0]
    best = _rank1_hull(x)
    diffs = np.unique(np.abs(np.subtract.outer(x, x)).ravel())
    diffs = diffs[diffs > 0][:max_generators]
    for i, v1 in enumerate(diffs):
        for v2 in diffs[i + 1:]:
            if v2 % v1 == 0 and v2 // v1 <= 1:
                continue
            P = _rank2_fit(x, int(v1), int(v2))
            if P is None or P.size >= best.size:
                continue
            if P.is_proper():
                best = P
    flags = []
    if best.rank == 1 and best.size > K * len(A):
        flags.append("no rank-2 cover found; returned rank-1 hull")
    report = VerificationReport(
        name="freiman_cover",
        params={"K": K},
        computed={"rank": best.rank, "size": best.size, "size_ratio": best.size / len(A), "doubling": doubling},
        reference={},
        tolerance=0.0,
        passed=bool(best.contains(A) and best.is_proper()),
        anchor="A contained in a proper progression P of bounded rank with sigma(P) <= C_K |A|",
        flags=flags,
    )
    return best, report


# --- Balog-Szemeredi-type extraction ------------------------------------------------------


def bsg_extract(A, B, K):
    """Popular-sum extraction of structured pieces ``A' subset A``, ``B' subset B``.

    Pairs ``(a, b)`` whose sum has at least ``|A|/(2K)`` representations form
    a bipartite graph; ``A'`` and ``B'`` are the sides of its largest
    connected component.
    """
    if A.d != 1 or B.d != 1:
        raise ValueError("bsg_extract works in Z")
    nA, nB = len(A), len(B)
    if max(nA, nB) > K * min(nA, nB):
        raise ValueError("precondition violated: sizes not comparable within K")
    energy = additive_energy_discrete(A, B)
    if energy < nA**3 / K:
        raise ValueError("precondition violated: additive energy below |A|^3/K")
    a = A.points[:, 0]
    b = B.points[:, 0]
    off, counts = kernels.representation_counts(a, b)
    sums = np.add.outer(a, b) - off
    popular = counts[sums] >= nA / (2.0 * K)
    ia, ib = np.nonzero(popular)
    graph = coo_matrix((np.ones(ia.size), (ia, nA + ib)), shape=(nA + nB, nA + nB))
    _, labels = connected_components(graph, directed=False)
    sizes = np.bincount(labels[np.r_[ia, nA + ib]], minlength=labels.max() + 1) if ia.size else None
    if sizes is None:
        raise ValueError("no popular sums")
    comp = int(np.argmax(sizes))
    A2 = FiniteSet.of(a[labels[:nA] == comp])
    B2 = FiniteSet.of(b[labels[nA:] == comp])
    s2 = len(sumset(A2, B2))
    report = VerificationReport(
        name="bsg_extract",
        params={"K": K},
        computed={"size_A": len(A2), "size_B": len(B2), "sumset_size": s2, "energy": energy},
        reference={},
        tolerance=0.0,
        passed=True,
        anchor="large-energy pairs contain A', B' with |A'|,|B'| >~ |A| and |A'+B'| <~ |A|",
    )
    return A2, B2, report


# --- covers in cyclic groups ----------------------------------------------------------------


def _cyclic_sumset(x, y, n):
    """Indicator of ``X + Y`` in ``Z_n`` from indicators ``x, y``."""
    c = np.fft.irfft(np.fft.rfft(x) * np.fft.rfft(y), n)
    return (c > 0.5).astype(np.float64)


def _greedy_cover(S, n):
    uncovered = np.ones(n)
    fs = np.conj(np.fft.rfft(S))
    translates = []
    while uncovered.any():
        # gain[x] = #{s in S : x + s uncovered}
        gain = np.fft.irfft(np.fft.rfft(uncovered) * fs, n)
        x = int(np.argmax(np.round(gain)))
        translates.append(x)
        uncovered[(x + np.flatnonzero(S)) % n] = 0.0
    return translates


def verify_cover(S, translates, n):
    covered = np.zeros(n, dtype=bool)
    idx = np.flatnonzero(S)
    for x in translates:
        covered[(x + idx) % n] = True
    return bool(covered.all())


def kneser_cover(E, n, alpha):
    """Smallest ``N`` such that ``Z_n`` is covered by ``N`` translates of ``NE - NE``.

    ``S_N = NE - NE`` is built by iterated cyclic sumsets; each ``S_N`` is
    covered greedily and the first ``N`` whose cover uses at most ``N``
    translates is returned with the translates (cover verified exhaustively).
    """
    if n > 4096:
        raise ValueError("n must be at most 4096")
    E = np.unique(np.asarray(E, dtype=np.int64) % n)
    if E.size < alpha * n:
        raise ValueError("precondition violated: #E < alpha n")
    ind = np.zeros(n)
    ind[E] = 1.0
    neg = np.roll(ind[::-1], 1)
    plus, minus = ind.copy(), neg.copy()
    sizes = []
    N = 1
    while True:
        S = _cyclic_sumset(plus, minus, n)
        sizes.append(int(S.sum()))
        translates = _greedy_cover(S, n)
        if len(translates) <= N:
            break
        plus = _cyclic_sumset(plus, ind, n)
        minus = _cyclic_sumset(minus, neg, n)
        N += 1
    assert verify_cover(S, translates, n)
    report = VerificationReport(
        name="kneser_cover",
        params={"n": n, "alpha": alpha},
        computed={"N": N, "translates": translates, "sumset_sizes": sizes, "N_over_log": N / math.log(1 + 1 / alpha)},
        reference={},
        tolerance=0.0,
        passed=True,
        anchor="Z_n covered by N translates of NE - NE with N <= C log(1 + 1/alpha)",
    )
    return N, translates, report
