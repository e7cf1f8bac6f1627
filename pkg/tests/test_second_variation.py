import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hysharp import second_variation as sv
from hysharp.constants import b_constant
from hysharp.grids import Grid, SampledFunction, lp_norm

from conftest import gaussian


# --- sharp / flat split and the quadratic form ------------------------------------------


def test_split_is_pointwise_threshold(grid1):
    G = gaussian(grid1)
    f = sv.normal_direction(3, 1.5, grid1) * 0.05
    s = sv.split_sharp_flat(f, G, 0.1)
    assert np.array_equal((s.sharp + s.flat).values, f.values)
    small = np.abs(f.values) <= 0.1 * np.abs(G.values)
    assert np.all(s.flat.values[small] == 0)
    assert np.all(s.sharp.values[~small] == 0)
    # the flat part lives where |H_3| > eta / eps, i.e. away from the origin
    assert np.all(np.abs(grid1.axis[~small]) > 0.4)


def test_split_validation(grid1):
    G = gaussian(grid1)
    with pytest.raises(ValueError):
        sv.split_sharp_flat(G, G, 0.6)
    with pytest.raises(ValueError):
        sv.split_sharp_flat(G, grid1.zero(), 0.1)


@pytest.mark.parametrize("p", [1.2, 1.5, 1.8])
def test_quadratic_form_on_tangent_directions(grid1, p):
    # h = G gives Th/TG = h/G = 1: Q = (q-1)/2 - (p-1)/2; h = iG gives 1/2 - 1/2 = 0
    G = gaussian(grid1)
    q = p / (p - 1)
    assert sv.quadratic_form(G, G, p) == pytest.approx(0.5 * (q - p), rel=1e-10)
    assert abs(sv.quadratic_form(G, G * 1j, p)) < 1e-10


def test_controlled_integral(grid1):
    G = gaussian(grid1)
    h = sv.normal_direction(3, 1.5, grid1)
    # int |H_3 G|^2 G^(p-2) = int H_3^2 G^p = 1 (H_3 is L^2-normalized against G^p)
    assert sv.controlled_integral(h, G, 1.5) == pytest.approx(1.0, rel=1e-10)
    wide = gaussian(grid1, a=0.2)
    with pytest.raises(ValueError, match="not controlled"):
        sv.controlled_integral(wide, G, 1.5)


# --- operator T --------------------------------------------------------------------------


def test_operator_exponents():
    assert sv.operator_exponents(1.5) == (1.0, 0.25)
    with pytest.raises(ValueError):
        sv.operator_exponents(2.0)


def test_predicted_spectrum_values():
    ref = [0.707107, 0.353553, 0.176777, 0.0883883, 0.0441942, 0.0220971]
    assert np.allclose(sv.predicted_spectrum(1.5, 6), ref, rtol=1e-5)
    # d = 2: multiplicities 1, 2, 3
    pred = sv.predicted_spectrum(1.5, 6, d=2)
    assert pred == pytest.approx([0.5, 0.25, 0.25, 0.125, 0.125, 0.125])


@pytest.mark.parametrize("p", [1.2, 1.5, 1.8])
def test_operator_spectrum_1d(grid1, p):
    rows = sv.spectrum_table(p, 6, grid1)
    assert max(r[3] for r in rows) < 1e-4


def test_operator_spectrum_2d_kronecker_matches_dense():
    g = Grid(2, 5.0, 32)
    with pytest.warns(RuntimeWarning):
        kron = sv.operator_spectrum(1.5, 6, g)
    with pytest.warns(RuntimeWarning):
        dense = sv.operator_spectrum(1.5, 6, g, dense=True)
    assert np.allclose(kron, dense, rtol=1e-10)
    assert np.allclose(kron, sv.predicted_spectrum(1.5, 6, 2), rtol=1e-4)


def test_operator_spectrum_limits(grid1):
    with pytest.raises(ValueError):
        sv.operator_spectrum(1.5, 13, grid1)


@pytest.mark.parametrize("p", [1.2, 1.5, 1.8])
def test_fixed_eigenvector(grid1, p):
    phi = grid1.sample(lambda x: np.exp(-0.5 * p * np.pi * x**2))
    out = sv.operator_apply(phi, p)
    assert np.abs(out.values - math.sqrt(2 - p) * phi.values).max() < 1e-8


def test_operator_matrix_agrees_with_apply():
    g = Grid(1, 6.0, 256)
    rng = np.random.default_rng(0)
    phi = g.sample(lambda x: np.exp(-np.pi * x**2) * (1 + rng.normal(size=x.size) * 0.1))
    K = sv.operator_matrix(1.5, g).K
    assert np.allclose(K @ phi.values, sv.operator_apply(phi, 1.5).values, atol=1e-10)


# --- Hermite eigenbasis -------------------------------------------------------------------


def recurrence_hermite(n_max, p):
    """Monic orthogonal polynomials for exp(-p pi x^2): Q_{n+1} = x Q_n - n/(2 pi p) Q_{n-1}."""
    P = np.polynomial.polynomial
    out = [np.array([1.0]), np.array([0.0, 1.0])]
    for n in range(1, n_max):
        out.append(P.polysub(P.polymulx(out[n]), n / (2 * np.pi * p) * out[n - 1]))
    return out[: n_max + 1]


@pytest.mark.parametrize("p", [1.2, 1.5, 1.8])
def test_hermite_polynomials_match_recurrence(p):
    got = sv.hermite_polynomials(10, p)
    for k, (Q, ref) in enumerate(zip(got, recurrence_hermite(10, p))):
        assert Q.degree == k
        assert np.allclose(Q.coeffs, ref, atol=1e-9 * np.abs(ref).max())


def test_second_hermite_explicit():
    Q = sv.hermite_polynomials(2, 1.5)[2]
    assert np.allclose(Q.coeffs, [-1 / (3 * np.pi), 0.0, 1.0])


def test_hermite_limit():
    with pytest.raises(ValueError):
        sv.hermite_polynomials(21, 1.5)


@pytest.mark.parametrize("p", [1.2, 1.5, 1.8])
def test_eigenfunctions_orthonormal_and_residuals(grid1, p):
    psis = [sv.eigenfunction(k, p, grid1) for k in range(7)]
    gram = np.array([[np.vdot(a.values, b.values).real * grid1.dx for b in psis] for a in psis])
    assert np.abs(gram - np.eye(7)).max() < 1e-10
    for k, psi in enumerate(psis):
        lam = (p - 1) ** k * math.sqrt(2 - p)
        res = sv.operator_apply(psi, p) - psi * lam
        assert lp_norm(res, 2.0) < 1e-6


def test_eigenfunction_2d(grid2):
    psi = sv.eigenfunction((1, 2), 1.5, grid2)
    lam = 0.5**3 * 0.5
    out = sv.operator_apply(psi, 1.5)
    assert np.abs(out.values - lam * psi.values).max() < 1e-8
    with pytest.raises(ValueError):
        sv.eigenfunction(3, 1.5, grid2)


@pytest.mark.parametrize("k", [3, 4, 5])
def test_normal_direction_moments(grid1, k):
    p = 1.5
    h = sv.normal_direction(k, p, grid1)
    x = grid1.axis
    w = np.exp(-(p - 1) * np.pi * x**2)
    for m in range(3):
        assert abs(np.sum(h.values * x**m * w) * grid1.dx) < 1e-12


# --- pointwise expansion inequalities ---------------------------------------------------


def test_calibrated_table_shipped_matches_recalibration():
    fresh = sv.calibrate_pointwise(1.5)
    for kind in ("real", "complex"):
        c, C = sv.calibrated_constants(1.5, kind)
        assert c == pytest.approx(fresh[kind]["c"], rel=1e-12)
        assert C == pytest.approx(fresh[kind]["C"], rel=1e-12)


def test_calibrated_constants_positive():
    for p in sv.CALIBRATION_P:
        for kind in ("real", "complex"):
            c, C = sv.calibrated_constants(p, kind)
            assert c > 0 and C > 0


@settings(max_examples=300, deadline=None)
@given(st.floats(-50, 50), st.sampled_from([0.01, 0.1, 0.3]), st.sampled_from([1.2, 1.5, 1.8]))
def test_real_inequality_property(t, eta, p):
    ok, _ = sv.check_pointwise_real(t, eta, p)
    assert ok


@settings(max_examples=300, deadline=None)
@given(st.floats(-30, 30), st.floats(-30, 30), st.sampled_from([0.01, 0.1, 0.3]), st.sampled_from([1.2, 1.5, 1.8]))
def test_complex_inequality_property(u, v, eta, p):
    ok, _ = sv.check_pointwise_complex(complex(u, v), eta, p)
    assert ok


def test_real_inequality_at_minus_one():
    # |1 + t|^p vanishes at t = -1; the large branch must still hold
    for p in (1.2, 1.5, 1.8):
        ok, margin = sv.check_pointwise_real(-1.0, 0.3, p)
        assert ok and margin > 0


def test_overlarge_constants_are_caught():
    # with c far above the calibrated value the large branch fails near t = -1
    ok, margin = sv.check_pointwise_real(-1.0, 0.1, 1.5, c=10.0)
    assert not ok and margin < 0
    ok, _ = sv.check_pointwise_complex(0.05, 0.1, 1.5, C=-10.0)
    assert not ok


def test_pointwise_sweep_counts():
    rng = np.random.default_rng(1)
    out = sv.pointwise_sweep(1.5, 0.1, 20000, rng)
    assert out["real_violations"] == 0
    assert out["complex_violations"] == 0
    assert out["real_min_margin"] > -1e-12


def test_check_rejects_bad_eta():
    with pytest.raises(ValueError):
        sv.check_pointwise_real(0.1, 0.0, 1.5)


# --- Taylor substitute and spectral bound ----------------------------------------------------


@pytest.mark.parametrize("p", [1.2, 1.5])
def test_taylor_substitute_holds(grid1, p):
    f = sv.normal_direction(3, p, grid1) * 0.01
    rep = sv.taylor_substitute_check(f, 0.1, p)
    assert rep.passed
    assert rep.computed["lhs"] <= rep.computed["rhs"]


def test_taylor_substitute_flags_smallness(grid1):
    f = sv.normal_direction(3, 1.5, grid1) * 0.01
    rep = sv.taylor_substitute_check(f, 0.1, 1.5)
    # ||f||_p exceeds eta^3 ||G||_p here
    assert any("smallness" in flag for flag in rep.flags)
    tiny = sv.normal_direction(3, 1.5, grid1) * 1e-5
    assert not sv.taylor_substitute_check(tiny, 0.1, 1.5).flags


def test_taylor_substitute_with_spikes(grid1):
    # odd spike pair keeps the first variation zero and lands in the flat part
    p = 1.5
    vals = 0.01 * sv.normal_direction(3, p, grid1).values
    x = grid1.axis
    i, j = np.argmin(np.abs(x - 1)), np.argmin(np.abs(x + 1))
    vals = vals.copy()
    vals[i] += 2.0
    vals[j] -= 2.0
    rep = sv.taylor_substitute_check(SampledFunction(grid1, vals), 0.1, p)
    assert rep.passed
    assert rep.computed["flat_penalty"] > 0


def test_taylor_substitute_rejects_first_variation(grid1):
    with pytest.raises(ValueError, match="first-variation"):
        sv.taylor_substitute_check(gaussian(grid1) * 0.01, 0.1, 1.5)


def quadrature_form(k, p):
    """Q_G(H_k G) by exact polynomial algebra and Gauss-Hermite quadrature.

    The transform of P(x) G(x) is R(xi) G(xi) with R obtained by applying
    P -> (i / 2 pi)(P' - 2 pi xi P) once per power of x, since the transform
    of x f is (i / 2 pi) d/dxi of the transform of f.
    """
    P = np.polynomial.polynomial
    q = p / (p - 1)
    Q = recurrence_hermite(k, p)[k] / math.sqrt(sv.hermite_norm2(k, p))
    R = np.zeros(1, dtype=complex)
    term = np.array([1.0 + 0j])
    for n, a in enumerate(Q):
        if n:
            term = (1j / (2 * np.pi)) * P.polysub(P.polyder(term), 2 * np.pi * P.polymulx(term))
        R = P.polyadd(R, a * term)
    t, w = np.polynomial.hermite.hermgauss(40)

    def weighted(poly, s):
        # int poly(x)^2 exp(-s pi x^2) dx with x = t / sqrt(s pi)
        x = t / math.sqrt(s * np.pi)
        return np.sum(w * np.abs(P.polyval(x, poly)) ** 2) / math.sqrt(s * np.pi)

    re_part = weighted(R.real, q)
    im_part = weighted(R.imag, q)
    freq = (0.5 * (q - 1) * re_part + 0.5 * im_part) * math.sqrt(q)
    space = 0.5 * (p - 1) * weighted(Q, p) * math.sqrt(p)
    return freq - space, weighted(Q, p)


@pytest.mark.parametrize("p", [1.2, 1.5, 1.8])
@pytest.mark.parametrize("k", [3, 4, 5, 6])
def test_spectral_bound_on_hermite_directions(grid1, p, k):
    h = sv.normal_direction(k, p, grid1)
    rep = sv.spectral_bound_check(h, p)
    assert rep.passed
    Q_ref, W_ref = quadrature_form(k, p)
    assert rep.computed["Q"] == pytest.approx(Q_ref, rel=1e-9)
    assert rep.computed["weighted_norm2"] == pytest.approx(W_ref, rel=1e-9)
    # strict inequality: these directions do not attain the bound
    assert rep.computed["Q"] / rep.reference["bound"] > 1


def test_spectral_bound_complex_combination(grid1):
    h = sv.normal_direction(3, 1.5, grid1) * (1 + 2j) + sv.normal_direction(5, 1.5, grid1) * 0.5
    assert sv.spectral_bound_check(h, 1.5).passed


def test_spectral_bound_2d(grid2):
    h = sv.normal_direction((3, 0), 1.5, grid2) + sv.normal_direction((1, 2), 1.5, grid2)
    assert sv.spectral_bound_check(h, 1.5).passed


def test_spectral_bound_moment_violation(grid1):
    h = sv.normal_direction(2, 1.5, grid1)
    with pytest.raises(ValueError, match="moment conditions violated"):
        sv.spectral_bound_check(h, 1.5)


# --- sharpness family ---------------------------------------------------------------------


def test_plateau_bump():
    u = np.linspace(-1.5, 1.5, 3001)
    b = sv.plateau_bump(u)
    assert np.all(b[np.abs(u) <= 0.5] == 1.0)
    assert np.all(b[np.abs(u) >= 1.0] == 0.0)
    assert np.all(np.diff(b[u >= 0]) <= 0)
    assert np.allclose(b, b[::-1])


def test_sharpness_family_moments(grid1):
    p = 1.5
    f, c_eps = sv.sharpness_family(0.05, 0.4, p, grid1)
    x = grid1.axis
    w = np.exp(-(p - 1) * np.pi * x**2)
    for m in range(3):
        assert abs(np.sum(f.values * x**m * w) * grid1.dx) < 1e-14
    assert c_eps != 0


def test_sharpness_family_validation(grid1):
    with pytest.raises(ValueError):
        sv.sharpness_family(0.5, 0.4, 1.5, grid1)
    with pytest.raises(ValueError):
        sv.sharpness_family(0.05, 0.6, 1.5, grid1)


def test_deficit_ratio_above_b():
    for eps in (0.1, 0.05, 0.025):
        assert sv.deficit_ratio(eps, 0.4, 1.5) > b_constant(1.5)


def test_richardson_exact_on_power_law():
    vals = [2.0 + 3.0 * e**2 for e in (0.1, 0.05, 0.025)]
    L, s = sv.richardson_limit(vals)
    assert L == pytest.approx(2.0, abs=1e-12)
    assert s == pytest.approx(2.0)


def test_richardson_reports_divergence():
    L, s = sv.richardson_limit([1.0, 0.9, 0.7])
    assert math.isnan(L) and math.isnan(s)


def test_sharpness_report_structure():
    rep, rows = sv.sharpness_report()
    assert len(rows) == 3
    assert rep.reference["B"] == pytest.approx(b_constant(1.5))
    if not rep.passed:
        assert rep.flags or rep.computed["relative_error"] > rep.tolerance
