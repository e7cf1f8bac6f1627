import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import brentq
from scipy.stats import norm

from hysharp import extraction as ex
from hysharp import gaussian_manifold as gm
from hysharp.constants import babenko
from hysharp.grids import Grid, SampledFunction, lp_norm

from conftest import gaussian


def level_oracle(k):
    """|{2^k <= e^{-pi x^2} < 2^{k+1}}| from numerically solved crossing points."""
    r = lambda level: brentq(lambda x: math.exp(-math.pi * x * x) - level, 0.0, 20.0) if level < 1 else 0.0
    return 2 * (r(2.0**k) - r(2.0 ** (k + 1)))


def test_gaussian_level_measure_closed_form():
    for k in range(-12, 0):
        assert ex.gaussian_level_measure(k) == pytest.approx(level_oracle(k), rel=1e-10)
    assert ex.gaussian_level_measure(0) == 0.0


def test_level_decomposition_of_gaussian(grid1):
    dec = ex.level_decompose(gaussian(grid1))
    for lv in dec.levels:
        if lv.k < 0:
            assert abs(lv.measure - ex.gaussian_level_measure(lv.k)) < 1e-6
    # levels outside the default +-20 window around the top level are dropped
    assert np.abs(dec.reconstruct().values - gaussian(grid1).values).max() < 2.0**-20
    assert dec.tail_mass < 1e-12 * dec.total_mass


def test_level_sets_partition(grid1):
    rng = np.random.default_rng(0)
    f = SampledFunction(grid1, gaussian(grid1).values * (1 + 0.3 * rng.normal(size=grid1.N)))
    dec = ex.level_decompose(f, k_min=-60, k_max=2)
    masks = np.array([lv.mask for lv in dec.levels])
    assert np.all(masks.sum(axis=0) <= 1)
    for lv in dec.levels:
        a = np.abs(f.values[lv.mask])
        assert np.all((a >= 2.0**lv.k) & (a < 2.0 ** (lv.k + 1)))
    with pytest.raises(KeyError):
        dec.level(100)


def test_level_decompose_zero(grid1):
    with pytest.raises(ValueError):
        ex.level_decompose(grid1.zero())


def test_level_triple_gaussian(grid1):
    G = gaussian(grid1)
    assert ex.select_level_triple(G, G, G, 0.05) == (-1, -1, -1)


def test_level_triple_indicator(grid1):
    ind = grid1.sample(lambda x: (np.abs(x) < 1).astype(float))
    assert ex.select_level_triple(ind, ind, ind, 0.05) == (0, 0, 0)


def test_level_triple_validation(grid1):
    G = gaussian(grid1)
    with pytest.raises(ValueError):
        ex.select_level_triple(G, G, G, 0.05, exponents=(1.5, 1.5, 1.4))
    with pytest.raises(ValueError, match="no popular triple"):
        ex.select_level_triple(G, G, G, 10.0)


@settings(max_examples=30, deadline=None)
@given(st.floats(1.05, 1.95), st.floats(0.1, 0.95))
def test_power_lift_norm_identity(p, frac):
    g = Grid(1, 8.0, 512)
    r = 1 + frac * (p - 1)
    f = gaussian(g, 1.3, center=0.4)
    lifted = ex.power_lift(f, p, r)
    assert lp_norm(lifted, r) ** r == pytest.approx(lp_norm(f, p) ** p, rel=1e-10)


def test_power_lift_ratio_young_bound(grid1):
    # ||g * g||_t <= A_r^2 A_{t'} ||g||_r^2, with equality for Gaussians
    r = 1.25
    t = 1 / (2 / r - 1)
    A = lambda s: s ** (0.5 / s) * (s / (s - 1)) ** (-0.5 * (s - 1) / s)
    C = A(r) ** 2 * A(t / (t - 1))
    G = gaussian(grid1)
    assert ex.power_lift_ratio(G, r) == pytest.approx(C, rel=1e-6)
    f = grid1.sample(lambda x: (np.abs(x) < 1).astype(float))
    assert ex.power_lift_ratio(f, r) < C


def test_power_lift_validation(grid1):
    with pytest.raises(ValueError):
        ex.power_lift(gaussian(grid1), 1.5, 1.6)
    with pytest.raises(ValueError, match="zero function"):
        ex.power_lift(grid1.zero(), 1.5, 1.2)


def test_quasi_extremizer_on_gaussian(grid1):
    rep = ex.quasi_extremizer_extract(gaussian(grid1), 1.5, 0.5)
    assert rep.pinned
    assert rep.mass_fraction > 0.5
    assert rep.progression.rank <= 2
    # g is f restricted to a subset
    G = gaussian(grid1)
    nz = rep.g.values != 0
    assert np.array_equal(rep.g.values[nz], G.values[nz])
    assert set(rep.to_dict()) >= {"level", "rank", "mass_fraction", "flatness", "pinned"}


def test_quasi_extremizer_rank2_structure():
    # a rasterized rank-2 progression of unit-height cells
    g = Grid(1, 8.0, 1024)
    vals = np.zeros(g.N)
    for i in range(4):
        for j in range(3):
            start = 300 + 60 * i + 7 * j
            vals[start:start + 3] = 1.0
    f = SampledFunction(g, vals)
    A = babenko(1.5)
    from hysharp.constants import hy_ratio

    eta = 0.5 * hy_ratio(f, 1.5) / A
    rep = ex.quasi_extremizer_extract(f, 1.5, eta)
    assert rep.progression.rank == 2
    assert rep.mass_fraction == pytest.approx(1.0)


def test_quasi_extremizer_precondition():
    g = Grid(1, 8.0, 1024)
    rng = np.random.default_rng(0)
    noise = g.sample(lambda x: np.where(np.abs(x - 0.5) <= 0.5, rng.normal(size=x.size), 0.0))
    with pytest.raises(ValueError, match="precondition violated"):
        ex.quasi_extremizer_extract(noise, 1.5, 0.75)


def uncertainty_oracle(p, mass=0.9):
    """|I| |J| for the standard Gaussian: |G|^p and |G|^q are normal densities."""
    q = p / (p - 1)
    z = norm.ppf(0.5 * (1 + mass))
    return (2 * z / math.sqrt(2 * math.pi * p)) * (2 * z / math.sqrt(2 * math.pi * q))


@pytest.mark.parametrize("p", [1.2, 1.5, 1.8])
def test_uncertainty_closed_form(p):
    _, _, prod = ex.uncertainty_product(gm.Gaussian.standard(), p)
    assert prod == pytest.approx(uncertainty_oracle(p), rel=1e-12)


def test_uncertainty_invariance():
    p = 1.5
    base = ex.uncertainty_product(gm.Gaussian.standard(), p)[2]
    g = gm.modulate(gm.translate(gm.dilate(gm.Gaussian.standard(), 2.5, p), 1.0), 3.0)
    assert ex.uncertainty_product(g, p)[2] == pytest.approx(base, rel=1e-12)


def test_uncertainty_grid_matches_closed_form(grid1):
    p = 1.5
    _, _, prod = ex.uncertainty_product(gaussian(grid1), p)
    assert prod == pytest.approx(uncertainty_oracle(p), rel=1e-4)


def test_uncertainty_separated_gaussians():
    g = Grid(1, 16.0, 2048)
    single = ex.uncertainty_product(gaussian(g), 1.5)[2]
    pair = g.sample(lambda x: np.exp(-np.pi * (x - 6) ** 2) + np.exp(-np.pi * (x + 6) ** 2))
    assert ex.uncertainty_product(pair, 1.5)[2] > 10 * single


def test_uncertainty_validation(grid1):
    with pytest.raises(ValueError):
        ex.uncertainty_product(gaussian(grid1), 1.5, mass=1.0)
    with pytest.raises(ValueError):
        ex.uncertainty_product(grid1.zero(), 1.5)
