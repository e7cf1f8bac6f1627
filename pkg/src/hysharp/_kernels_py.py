"""Pure numpy reference implementations of the hot loops.

Every function here has a compiled twin in ``_kernels.pyx`` with identical
signature and semantics; ``hysharp.kernels`` picks one at import.
"""
import numpy as np

_CHUNK = 1 << 22


def trig_sum(support, values, theta):
    """Evaluate sum_j values[j] * exp(-2 pi i theta_k . n_j) for every k."""
    support = np.asarray(support, dtype=np.int64)
    values = np.asarray(values, dtype=np.complex128)
    theta = np.asarray(theta, dtype=np.float64)
    out = np.empty(theta.shape[0], dtype=np.complex128)
    step = max(1, _CHUNK // max(1, support.shape[0]))
    for start in range(0, theta.shape[0], step):
        block = theta[start:start + step]
        phase = block @ support.T.astype(np.float64)
        phase -= np.floor(phase)
        out[start:start + step] = np.exp(-2j * np.pi * phase) @ values
    return out


def gaussian_kernel_matrix(points, t, sigma, weight):
    """Matrix G^t(x_i) G^sigma(x_i - x_j) G^t(x_j) * weight."""
    points = np.asarray(points, dtype=np.float64)
    outer = np.exp(-np.pi * t * np.sum(points**2, axis=1))
    diff2 = np.zeros((points.shape[0], points.shape[0]))
    for a in range(points.shape[1]):
        diff2 += np.subtract.outer(points[:, a], points[:, a]) ** 2
    K = outer[:, None] * np.exp(-np.pi * sigma * diff2) * outer[None, :] * weight
    return 0.5 * (K + K.T)


def pointwise_real_margin(t, p, eta, c, C):
    """Margin of the two-branch real expansion inequality at each t."""
    t = np.asarray(t, dtype=np.float64)
    lhs = np.abs(1.0 + t) ** p
    small = np.abs(t) <= eta
    quad = 1.0 + p * t + 0.5 * p * (p - 1.0) * t * t - C * eta * t * t
    large = 1.0 + p * t + c * eta ** (2.0 - p) * np.abs(t) ** p
    return lhs - np.where(small, quad, large)


def pointwise_complex_margin(z, p, eta, c, C):
    """Margin of the two-branch complex expansion inequality at each z."""
    z = np.asarray(z, dtype=np.complex128)
    u, v = z.real, z.imag
    r2 = u * u + v * v
    lhs = ((1.0 + u) ** 2 + v * v) ** (0.5 * p)
    small = r2 <= eta * eta
    quad = 1.0 + p * u + 0.5 * p * (p - 1.0) * u * u + 0.5 * p * v * v - C * eta * r2
    large = 1.0 + p * u + c * eta ** (2.0 - p) * r2 ** (0.5 * p)
    return lhs - np.where(small, quad, large)


def representation_counts(a, b):
    """Return ``(offset, counts)`` with counts[s - offset] = #{a + b = s}."""
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    off = int(a.min() + b.min())
    size = int(a.max() - a.min() + b.max() - b.min() + 1)
    counts = np.zeros(size, dtype=np.int64)
    step = max(1, _CHUNK // max(1, b.size))
    for start in range(0, a.size, step):
        sums = np.add.outer(a[start:start + step], b).ravel() - off
        counts += np.bincount(sums, minlength=size)
    return off, counts


def torus_max_dist(lams, xs):
    """max_j ||lam_k x_j||_{R/Z} for every k."""
    lams = np.asarray(lams, dtype=np.float64)
    xs = np.asarray(xs, dtype=np.float64)
    out = np.empty(lams.size)
    step = max(1, _CHUNK // max(1, xs.size))
    for start in range(0, lams.size, step):
        y = np.multiply.outer(lams[start:start + step], xs)
        out[start:start + step] = np.abs(y - np.floor(y + 0.5)).max(axis=1)
    return out
