import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hysharp.constants import (
    ExponentPair,
    YoungTriple,
    b_constant,
    babenko,
    conjugate,
    cooperation_check,
    hy_ratio,
    measured_deficit,
    noslacking_check,
    young_bound,
    young_constant,
    young_trilinear,
)
from hysharp.grids import Grid, SampledFunction, lp_norm

from conftest import gaussian


def test_exponent_pair():
    assert ExponentPair(1.5).q == pytest.approx(3.0)
    assert conjugate(4 / 3) == pytest.approx(4.0)
    with pytest.raises(ValueError):
        ExponentPair(1.0)
    with pytest.raises(ValueError):
        ExponentPair(2.5)


def test_babenko_algebraic_values():
    # A_{3/2}^3 = (3/2)^(1) 3^(-1/2) = sqrt(3)/2
    assert babenko(1.5) ** 3 == pytest.approx(math.sqrt(3) / 2, abs=1e-15)
    assert babenko(1.5) == pytest.approx(0.9531843, abs=1e-7)
    # p = 4/3: A^8 = (4/3)^3 / 4
    assert babenko(4 / 3) ** 8 == pytest.approx((4 / 3) ** 3 / 4, rel=1e-14)
    assert babenko(2.0) == pytest.approx(1.0)


@settings(max_examples=100)
@given(st.floats(1.001, 1.999))
def test_babenko_below_one(p):
    assert 0 < babenko(p) < 1


def test_b_constant_values():
    assert b_constant(1.5, 1) == pytest.approx(babenko(1.5) / 8, rel=1e-15)
    assert b_constant(1.5, 1) == pytest.approx(0.1191480, abs=1e-7)
    assert b_constant(4 / 3, 2) == pytest.approx(babenko(4 / 3) ** 2 / 9, rel=1e-14)
    assert b_constant(4 / 3, 2) == pytest.approx(0.0974870, abs=1e-7)


def test_b_constant_degenerate_and_invalid():
    with pytest.warns(RuntimeWarning):
        assert b_constant(2.0) == 0.0
    with pytest.raises(ValueError):
        b_constant(1.0)
    with pytest.raises(ValueError):
        b_constant(1.5, 0)


@pytest.mark.parametrize("p", [1.2, 4 / 3, 1.5, 1.8])
def test_gaussian_attains_constant(grid1, p):
    assert abs(hy_ratio(gaussian(grid1), p) - babenko(p)) < 1e-5


@pytest.mark.parametrize("p", [4 / 3, 1.5])
def test_gaussian_attains_constant_2d(grid2, p):
    assert abs(hy_ratio(gaussian(grid2), p) - babenko(p) ** 2) < 1e-4


def test_hy_ratio_invariances(grid1):
    # dilation, translation and modulation preserve the ratio
    base = hy_ratio(gaussian(grid1), 1.5)
    for f in (gaussian(grid1, 2.0), gaussian(grid1, 1.0, center=1.5), gaussian(grid1, 1.0, freq=2.0)):
        assert hy_ratio(f, 1.5) == pytest.approx(base, abs=1e-9)


def test_hy_ratio_zero_raises(grid1):
    with pytest.raises(ValueError, match="zero function"):
        hy_ratio(grid1.zero(), 1.5)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(1.1, 1.9))
def test_hausdorff_young_holds(seed, p):
    rng = np.random.default_rng(seed)
    g = Grid(1, 8.0, 1024)
    x = g.axis
    k = rng.integers(1, 4)
    vals = sum(
        complex(*rng.normal(size=2)) * np.exp(-np.pi * rng.uniform(0.3, 3) * (x - rng.uniform(-3, 3)) ** 2)
        for _ in range(k)
    )
    f = SampledFunction(g, vals)
    assert hy_ratio(f, p) <= babenko(p) * (1 + 1e-6)
    assert measured_deficit(f, p) >= -1e-6


def test_young_triple_validation():
    YoungTriple(1.5, 1.5, 1.5)
    with pytest.raises(ValueError):
        YoungTriple(1.5, 1.5, 1.4)
    with pytest.raises(ValueError):
        YoungTriple(1.0, 2.0, 2.0)


def test_young_constant_is_product():
    t = YoungTriple(1.5, 1.5, 1.5, 2)
    assert young_constant(t) == pytest.approx(babenko(1.5) ** 6)


def test_young_matched_gaussians(grid1):
    t = YoungTriple(1.5, 1.5, 1.5)
    fs = [gaussian(grid1)] * 3
    assert abs(young_trilinear(*fs)) == pytest.approx(young_bound(*fs, t), rel=1e-5)


def test_young_trilinear_closed_form(grid1):
    # G_a * G_b = (a+b)^{-1/2} G_s with s = ab/(a+b), and <G_s, G_c> = (s+c)^{-1/2}
    a, b, c = 1.0, 2.0, 0.5
    s = a * b / (a + b)
    expected = (a + b) ** -0.5 * (s + c) ** -0.5
    val = young_trilinear(gaussian(grid1, a), gaussian(grid1, b), gaussian(grid1, c))
    assert val == pytest.approx(expected, rel=1e-12)


def test_young_grid_mismatch(grid1):
    from hysharp.grids import GridMismatchError

    with pytest.raises(GridMismatchError):
        young_trilinear(gaussian(grid1), gaussian(grid1), gaussian(Grid(1, 8.0, 512)))


def test_noslacking_disjoint_pieces(grid1):
    g = grid1.sample(lambda x: np.where(np.abs(x) < 2, np.exp(-np.pi * x**2), 0))
    h = grid1.sample(lambda x: np.where(np.abs(x - 4) < 1, 0.05 * np.exp(-np.pi * (x - 4) ** 2), 0))
    rep = noslacking_check(g + h, g, h, 1.5, 0.05)
    assert rep.passed
    assert rep.computed["norm_h_hat"] > 0


def test_noslacking_rejects_overlap(grid1):
    G = gaussian(grid1)
    with pytest.raises(ValueError, match="supports overlap"):
        noslacking_check(G * 2, G, G, 1.5, 0.1)


def test_cooperation_split_of_gaussian(grid1):
    x = grid1.axis
    G = gaussian(grid1)
    inside = np.abs(x) < 1
    sharp = SampledFunction(grid1, np.where(inside, G.values, 0))
    flat = SampledFunction(grid1, np.where(inside, 0, G.values))
    rep = cooperation_check(sharp, flat, 1.5, 1e-3, 0.01)
    assert rep.passed
    assert rep.computed["product_norm"] >= rep.computed["holder_lower_bound"]


def test_cooperation_precondition_reported(grid1):
    G = gaussian(grid1)
    rep = cooperation_check(G, G * 1e-4, 1.5, 1e-3, 0.3)
    assert not rep.passed
    assert any("precondition" in f for f in rep.flags)


def test_lp_norm_identity(grid2):
    for p in (1.2, 1.5, 1.8):
        assert abs(lp_norm(gaussian(grid2), p) ** p - p ** -1.0) < 1e-8
