"""Backend selection for the hot numerical loops.

The compiled extension ``hysharp._kernels`` is used when it imports; the
numpy implementations in ``hysharp._kernels_py`` are the fallback. Setting
``HYSHARP_PURE_PYTHON=1`` forces the fallback. Both backends are exposed
through :func:`get_backend` so tests and benchmarks can compare them.
"""
import logging
import os
from types import SimpleNamespace

import numpy as np

from hysharp import _kernels_py

LOGGER = logging.getLogger(__name__)

def _load_compiled():
    try:
        from hysharp import _kernels
    except ImportError:  # extension not built
        return None
    return _kernels


_COMPILED = _load_compiled()

if _COMPILED is not None and os.environ.get("HYSHARP_PURE_PYTHON", "") != "1":
    _ACTIVE = _COMPILED
    BACKEND = "compiled"
else:
    _ACTIVE = _kernels_py
    BACKEND = "python"
LOGGER.debug("kernel backend: %s", BACKEND)


def _coerced(mod):
    """Wrap a backend so every entry point accepts array-likes."""
    f64 = lambda a: np.ascontiguousarray(a, dtype=np.float64)
    c128 = lambda a: np.ascontiguousarray(a, dtype=np.complex128)
    i64 = lambda a: np.ascontiguousarray(a, dtype=np.int64)

    def trig_sum(support, values, theta):
        support = i64(support)
        theta = f64(theta)
        if support.ndim == 1:
            support = support[:, None]
        if theta.ndim == 1:
            theta = theta[:, None]
        return mod.trig_sum(support, c128(values), theta)

    def gaussian_kernel_matrix(points, t, sigma, weight):
        points = f64(points)
        if points.ndim == 1:
            points = points[:, None]
        return mod.gaussian_kernel_matrix(points, float(t), float(sigma), float(weight))

    def pointwise_real_margin(t, p, eta, c, C):
        return mod.pointwise_real_margin(f64(t).ravel(), float(p), float(eta), float(c), float(C))

    def pointwise_complex_margin(z, p, eta, c, C):
        return mod.pointwise_complex_margin(c128(z).ravel(), float(p), float(eta), float(c), float(C))

    def representation_counts(a, b):
        return mod.representation_counts(i64(a).ravel(), i64(b).ravel())

    def torus_max_dist(lams, xs):
        return mod.torus_max_dist(f64(lams).ravel(), f64(xs).ravel())

    return SimpleNamespace(
        name=mod.__name__,
        trig_sum=trig_sum,
        gaussian_kernel_matrix=gaussian_kernel_matrix,
        pointwise_real_margin=pointwise_real_margin,
        pointwise_complex_margin=pointwise_complex_margin,
        representation_counts=representation_counts,
        torus_max_dist=torus_max_dist,
    )


def available_backends():
    """Names of the backends importable in this environment."""
    return ["python"] + (["compiled"] if _COMPILED is not None else [])


def get_backend(name):
    """Return the kernel namespace for backend ``name`` ("python" or "compiled")."""
    if name == "python":
        return _coerced(_kernels_py)
    if name == "compiled":
        if _COMPILED is None:
            raise ImportError("compiled kernels are not built")
        return _coerced(_COMPILED)
    raise ValueError(f"unknown backend {name!r}")


_WRAPPED = _coerced(_ACTIVE)
trig_sum = _WRAPPED.trig_sum
gaussian_kernel_matrix = _WRAPPED.gaussian_kernel_matrix
pointwise_real_margin = _WRAPPED.pointwise_real_margin
pointwise_complex_margin = _WRAPPED.pointwise_complex_margin
representation_counts = _WRAPPED.representation_counts
torus_max_dist = _WRAPPED.torus_max_dist
