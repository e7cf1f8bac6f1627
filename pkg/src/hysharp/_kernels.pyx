# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops. Semantics are defined by ``_kernels_py``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport cos, sin, exp, fabs, pow, floor, sqrt, M_PI

cnp.import_array()


def trig_sum(const long long[:, :] support, const double complex[:] values,
             const double[:, :] theta):
    cdef Py_ssize_t m = support.shape[0]
    cdef Py_ssize_t d = support.shape[1]
    cdef Py_ssize_t K = theta.shape[0]
    out = np.zeros(K, dtype=np.complex128)
    cdef double complex[:] o = out
    cdef Py_ssize_t k, j, a
    cdef double phase, re, im, vr, vi
    for k in range(K):
        re = 0.0
        im = 0.0
        for j in range(m):
            phase = 0.0
            for a in range(d):
                phase += theta[k, a] * <double> support[j, a]
            # reduce mod 1 first: n*theta can be large
            phase = phase - floor(phase)
            phase = -2.0 * M_PI * phase
            vr = values[j].real
            vi = values[j].imag
            re += vr * cos(phase) - vi * sin(phase)
            im += vr * sin(phase) + vi * cos(phase)
        o[k] = re + 1j * im
    return out


def gaussian_kernel_matrix(const double[:, :] points, double t, double sigma,
                           double weight):
    cdef Py_ssize_t n = points.shape[0]
    cdef Py_ssize_t d = points.shape[1]
    out = np.empty((n, n), dtype=np.float64)
    cdef double[:, :] K = out
    cdef double[:] outer = np.empty(n, dtype=np.float64)
    cdef Py_ssize_t i, j, a
    cdef double r2, diff, v
    for i in range(n):
        r2 = 0.0
        for a in range(d):
            r2 += points[i, a] * points[i, a]
        outer[i] = exp(-M_PI * t * r2)
    for i in range(n):
        for j in range(i, n):
            r2 = 0.0
            for a in range(d):
                diff = points[i, a] - points[j, a]
                r2 += diff * diff
            v = outer[i] * exp(-M_PI * sigma * r2) * outer[j] * weight
            K[i, j] = v
            K[j, i] = v
    return out


def pointwise_real_margin(const double[:] t, double p, double eta, double c,
                          double C):
    cdef Py_ssize_t n = t.shape[0]
    out = np.empty(n, dtype=np.float64)
    cdef double[:] o = out
    cdef Py_ssize_t i
    cdef double x, lhs, rhs, ep = pow(eta, 2.0 - p)
    for i in range(n):
        x = t[i]
        lhs = pow(fabs(1.0 + x), p)
        if fabs(x) <= eta:
            rhs = 1.0 + p * x + 0.5 * p * (p - 1.0) * x * x - C * eta * x * x
        else:
            rhs = 1.0 + p * x + c * ep * pow(fabs(x), p)
        o[i] = lhs - rhs
    return out


def pointwise_complex_margin(const double complex[:] z, double p, double eta,
                             double c, double C):
    cdef Py_ssize_t n = z.shape[0]
    out = np.empty(n, dtype=np.float64)
    cdef double[:] o = out
    cdef Py_ssize_t i
    cdef double u, v, r2, lhs, rhs, ep = pow(eta, 2.0 - p)
    for i in range(n):
        u = z[i].real
        v = z[i].imag
        r2 = u * u + v * v
        lhs = pow((1.0 + u) * (1.0 + u) + v * v, 0.5 * p)
        if r2 <= eta * eta:
            rhs = (1.0 + p * u + 0.5 * p * (p - 1.0) * u * u + 0.5 * p * v * v
                   - C * eta * r2)
        else:
            rhs = 1.0 + p * u + c * ep * pow(r2, 0.5 * p)
        o[i] = lhs - rhs
    return out


def representation_counts(const long long[:] a, const long long[:] b):
    cdef Py_ssize_t m = a.shape[0]
    cdef Py_ssize_t k = b.shape[0]
    cdef long long amin = a[0], amax = a[0], bmin = b[0], bmax = b[0]
    cdef Py_ssize_t i, j
    for i in range(m):
        if a[i] < amin:
            amin = a[i]
        if a[i] > amax:
            amax = a[i]
    for j in range(k):
        if b[j] < bmin:
            bmin = b[j]
        if b[j] > bmax:
            bmax = b[j]
    counts = np.zeros(amax - amin + bmax - bmin + 1, dtype=np.int64)
    cdef long long[:] cnt = counts
    cdef long long off = amin + bmin
    for i in range(m):
        for j in range(k):
            cnt[a[i] + b[j] - off] += 1
    return off, counts


def torus_max_dist(const double[:] lams, const double[:] xs):
    cdef Py_ssize_t K = lams.shape[0]
    cdef Py_ssize_t m = xs.shape[0]
    out = np.empty(K, dtype=np.float64)
    cdef double[:] o = out
    cdef Py_ssize_t k, j
    cdef double worst, y, dist
    for k in range(K):
        worst = 0.0
        for j in range(m):
            y = lams[k] * xs[j]
            dist = fabs(y - floor(y + 0.5))
            if dist > worst:
                worst = dist
        o[k] = worst
    return out
