import numpy as np
import pytest

from hysharp import kernels

BACKENDS = kernels.available_backends()


@pytest.fixture(params=BACKENDS)
def backend(request):
    return kernels.get_backend(request.param)


def test_compiled_backend_present():
    # the package ships its extension; the fallback must still be selectable
    assert "python" in BACKENDS
    assert kernels.BACKEND in BACKENDS


def test_unknown_backend():
    with pytest.raises(ValueError):
        kernels.get_backend("fortran")


def test_trig_sum(backend):
    support = np.array([0, 1, 3])
    values = np.array([1.0, -2.0, 0.5j])
    theta = np.linspace(0, 1, 7, endpoint=False)
    ref = sum(v * np.exp(-2j * np.pi * theta * n) for n, v in zip(support, values))
    assert np.allclose(backend.trig_sum(support, values, theta), ref, atol=1e-13)


def test_gaussian_kernel_matrix(backend):
    x = np.linspace(-2, 2, 9)
    t, sigma, w = 0.25, 2.0, 0.5
    ref = w * np.exp(-np.pi * t * x[:, None] ** 2) * np.exp(-np.pi * sigma * (x[:, None] - x[None, :]) ** 2) \
        * np.exp(-np.pi * t * x[None, :] ** 2)
    K = backend.gaussian_kernel_matrix(x, t, sigma, w)
    assert K.shape == (9, 9)
    assert np.allclose(K, K.T)
    assert np.allclose(K, ref, rtol=1e-13)


def test_representation_counts(backend):
    a = np.array([0, 1, 2])
    b = np.array([0, 10])
    off, counts = backend.representation_counts(a, b)
    assert off == 0
    assert np.flatnonzero(counts).tolist() == [0, 1, 2, 10, 11, 12]
    off, counts = backend.representation_counts(np.array([-1, 0]), np.array([-1, 0]))
    assert off == -2
    assert counts.tolist() == [1, 2, 1]


def test_torus_max_dist(backend):
    lams = np.array([1.0, 0.5])
    xs = np.array([0.0, 1.2, 2.9])
    # lam = 1: distances 0, 0.2, 0.1; lam = 0.5: 0, 0.4, 0.45
    assert np.allclose(backend.torus_max_dist(lams, xs), [0.2, 0.45])


def test_pointwise_margins_agree_between_backends():
    if len(BACKENDS) < 2:
        pytest.skip("compiled backend not built")
    rng = np.random.default_rng(3)
    t = rng.normal(size=1000) * 3
    z = t + 1j * rng.normal(size=1000)
    py, cy = kernels.get_backend("python"), kernels.get_backend("compiled")
    for eta in (0.01, 0.3):
        assert np.allclose(py.pointwise_real_margin(t, 1.5, eta, 0.1, 0.2),
                           cy.pointwise_real_margin(t, 1.5, eta, 0.1, 0.2), rtol=1e-12, atol=1e-14)
        assert np.allclose(py.pointwise_complex_margin(z, 1.5, eta, 0.1, 0.3),
                           cy.pointwise_complex_margin(z, 1.5, eta, 0.1, 0.3), rtol=1e-12, atol=1e-14)


def test_pointwise_real_margin_formula(backend):
    # large branch at t = 1, eta = 0.1: 2^p - 1 - p - c eta^(2-p) 1
    p, eta, c, C = 1.5, 0.1, 0.1, 0.2
    m = backend.pointwise_real_margin(np.array([1.0]), p, eta, c, C)[0]
    assert m == pytest.approx(2**p - 1 - p - c * eta ** (2 - p), rel=1e-12)
    # small branch at t = 0.05: |1+t|^p - 1 - p t - p(p-1)/2 t^2 + C eta t^2
    t = 0.05
    m = backend.pointwise_real_margin(np.array([t]), p, eta, c, C)[0]
    assert m == pytest.approx((1 + t) ** p - 1 - p * t - 0.5 * p * (p - 1) * t**2 + C * eta * t**2, rel=1e-9)
