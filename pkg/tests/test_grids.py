import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hysharp import grids
from hysharp.grids import (
    DiscreteFunction,
    Grid,
    GridMismatchError,
    SampledFunction,
    convolve,
    discrete_fourier,
    fourier_at,
    fourier_transform,
    inner,
    inverse_fourier_transform,
    lp_norm,
    lp_norm_discrete,
    torus_lq_norm,
)

from conftest import gaussian


def test_grid_validation():
    with pytest.raises(ValueError):
        Grid(3, 1.0, 16)
    with pytest.raises(ValueError):
        Grid(1, 1.0, 7)
    with pytest.raises(ValueError):
        Grid(1, 1.0, 6)
    with pytest.raises(ValueError):
        Grid(1, -1.0, 16)


def test_dual_grid_is_involutive(grid1):
    assert grid1.dual().dual() == grid1
    assert grid1.dual().dx == pytest.approx(1 / 16)


def test_nonfinite_values_rejected(grid1):
    v = np.zeros(grid1.N)
    v[3] = np.nan
    with pytest.raises(ValueError, match="invalid function"):
        SampledFunction(grid1, v)


@pytest.mark.parametrize("a", [0.5, 1.0, 3.0])
def test_gaussian_transform_closed_form(grid1, a):
    # e^{-pi a x^2} -> a^{-1/2} e^{-pi xi^2 / a}
    fh = fourier_transform(gaussian(grid1, a))
    xi = fh.grid.axis
    assert np.abs(fh.values - a**-0.5 * np.exp(-np.pi * xi**2 / a)).max() < 1e-12


def test_transform_of_shifted_modulated_gaussian(grid1):
    # translation by b multiplies by e^{-2 pi i b xi}; modulation shifts by the frequency
    fh = fourier_transform(gaussian(grid1, 1.0, center=0.7, freq=1.25))
    xi = fh.grid.axis
    ref = np.exp(-np.pi * (xi - 1.25) ** 2) * np.exp(-2j * np.pi * 0.7 * (xi - 1.25))
    assert np.abs(fh.values - ref).max() < 1e-10


def test_transform_2d_separates(grid2):
    fh = fourier_transform(gaussian(grid2, 2.0))
    X, Y = fh.grid.coords()
    ref = 0.5 * np.exp(-np.pi * (X**2 + Y**2) / 2.0)
    assert np.abs(fh.values - ref).max() < 1e-10


def test_transform_matches_direct_sum():
    g = Grid(1, 2.0, 16)
    rng = np.random.default_rng(1)
    f = SampledFunction(g, rng.normal(size=16) + 1j * rng.normal(size=16))
    fh = fourier_transform(f)
    assert np.allclose(fh.values, fourier_at(f, fh.grid.axis), atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([8, 16, 64]), st.floats(0.5, 10.0))
def test_inverse_round_trip(seed, n, L):
    rng = np.random.default_rng(seed)
    g = Grid(1, L, n)
    f = SampledFunction(g, rng.normal(size=n) + 1j * rng.normal(size=n))
    back = inverse_fourier_transform(fourier_transform(f), g)
    assert np.allclose(back.values, f.values, atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_plancherel(seed):
    rng = np.random.default_rng(seed)
    g = Grid(1, 3.0, 64)
    f = SampledFunction(g, rng.normal(size=64) + 1j * rng.normal(size=64))
    assert lp_norm(fourier_transform(f), 2.0) == pytest.approx(lp_norm(f, 2.0), rel=1e-12)


def test_inverse_rejects_wrong_grid(grid1):
    fh = fourier_transform(gaussian(grid1))
    with pytest.raises(GridMismatchError):
        inverse_fourier_transform(fh, Grid(1, 4.0, 1024))


@pytest.mark.parametrize("p", [1.2, 1.5, 2.0, 3.0])
def test_lp_norm_of_gaussian(grid1, p):
    assert lp_norm(gaussian(grid1), p) ** p == pytest.approx(p**-0.5, rel=1e-12)


def test_lp_norm_scales_safely(grid1):
    f = gaussian(grid1) * 1e200
    assert lp_norm(f, 1.5) == pytest.approx(1e200 * 1.5 ** (-1 / 3), rel=1e-12)
    assert lp_norm(grid1.zero(), 1.5) == 0.0
    assert lp_norm(f, np.inf) == pytest.approx(1e200)


def test_lp_norm_rejects_small_exponent(grid1):
    with pytest.raises(ValueError):
        lp_norm(gaussian(grid1), 0.5)


def test_convolution_of_gaussians(grid1):
    # e^{-pi x^2} * e^{-pi x^2} = 2^{-1/2} e^{-pi x^2 / 2}
    h = convolve(gaussian(grid1), gaussian(grid1))
    x = grid1.axis
    assert np.abs(h.values - 2**-0.5 * np.exp(-np.pi * x**2 / 2)).max() < 1e-12


def test_mismatched_grids_raise(grid1):
    other = Grid(1, 8.0, 512)
    with pytest.raises(GridMismatchError):
        gaussian(grid1) + gaussian(other)
    with pytest.raises(GridMismatchError):
        inner(gaussian(grid1), gaussian(other))


def test_inner_product_convention(grid1):
    f = gaussian(grid1) * 1j
    assert inner(f, gaussian(grid1)) == pytest.approx(1j * 2**-0.5)


def test_boundary_flag(grid1):
    assert not gaussian(grid1).boundary_flag()
    wide = gaussian(grid1, a=0.01)
    assert wide.boundary_flag()


def test_discrete_fourier_of_pair():
    f = DiscreteFunction.from_dict({(0,): 1.0, (1,): 1.0})
    t = discrete_fourier(f, 64)
    theta = np.arange(64) / 64
    assert np.allclose(t.values, 1 + np.exp(-2j * np.pi * theta))
    # Parseval on the torus
    assert torus_lq_norm(t, 2.0) == pytest.approx(lp_norm_discrete(f, 2.0))


def test_discrete_function_validation():
    with pytest.raises(ValueError):
        DiscreteFunction(np.array([0, 0]), np.array([1.0, 2.0]))
    with pytest.raises(ValueError):
        DiscreteFunction(np.array([0, 1]), np.array([1.0]))


def test_discrete_fourier_2d():
    f = DiscreteFunction(np.array([[0, 0], [1, 2]]), np.array([1.0, -2.0]))
    t = discrete_fourier(f, 8)
    th = np.arange(8) / 8
    a, b = np.meshgrid(th, th, indexing="ij")
    assert np.allclose(t.values, 1 - 2 * np.exp(-2j * np.pi * (a + 2 * b)))


def test_serialization_round_trip(tmp_path, grid2):
    f = gaussian(grid2, 1.3, freq=0.4)
    path = tmp_path / "f.hysf"
    grids.save(f, path)
    g = grids.load(path)
    assert g.grid == f.grid
    assert np.array_equal(g.values, f.values)


def test_serialization_rejects_bad_magic(grid1):
    data = bytearray(grids.to_bytes(gaussian(grid1)))
    data[:4] = b"XXXX"
    with pytest.raises(ValueError, match="not a HYSF"):
        grids.from_bytes(bytes(data))
    with pytest.raises(ValueError, match="truncated"):
        grids.from_bytes(grids.to_bytes(gaussian(grid1))[:-16])


def test_export_csv(tmp_path):
    g = Grid(1, 1.0, 8)
    f = g.sample(lambda x: x + 1j)
    path = tmp_path / "f.csv"
    grids.export_csv(f, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "x,re,im"
    assert len(lines) == 9
    assert [float(v) for v in lines[1].split(",")] == [-1.0, -1.0, 1.0]
