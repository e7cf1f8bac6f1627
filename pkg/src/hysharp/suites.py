"""Verification suites run by the command line.

Each suite takes a :class:`RunConfig` and returns ``(reports, tables)`` where
``tables`` maps a CSV file stem to ``(header, rows)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from hysharp import additive, extraction, gaussian_manifold as gm, hybrid, second_variation as sv
from hysharp.constants import (
    YoungTriple,
    b_constant,
    babenko,
    hy_ratio,
    young_bound,
    young_trilinear,
)
from hysharp.grids import Grid, fourier_at, lp_norm
from hysharp.reports import VerificationReport, close_report

SUITES = ("constants", "spectrum", "pointwise", "projection", "sharpness", "additive", "hybrid", "extraction")


@dataclass(frozen=True)
class RunConfig:
    suite: str = "all"
    p: tuple = (1.5,)
    d: int = 1
    grid_L: float | None = None
    grid_N: int | None = None
    eta: tuple = (0.01, 0.1, 0.3)
    eps: tuple = (0.1, 0.05, 0.025)
    rho: float = 0.4
    delta: float = 0.1
    seed: int = 0
    tol: float | None = None
    samples: int = 10**6
    jobs: int = 1
    out: str = "out"
    extra: dict = field(default_factory=dict)

    def grid(self):
        if self.grid_L is None and self.grid_N is None:
            return Grid(1, 8.0, 1024) if self.d == 1 else Grid(2, 6.0, 256)
        L = self.grid_L if self.grid_L is not None else (8.0 if self.d == 1 else 6.0)
        N = self.grid_N if self.grid_N is not None else (1024 if self.d == 1 else 256)
        return Grid(self.d, float(L), int(N))

    def validate(self):
        if self.suite not in SUITES + ("all",):
            raise ValueError(f"unknown suite {self.suite!r}")
        if self.d not in (1, 2):
            raise ValueError("d must be 1 or 2")
        for p in self.p:
            if not (1.0 < p < 2.0):
                raise ValueError("p must lie in (1, 2)")
        for e in self.eta:
            if not (0 < e <= 1):
                raise ValueError("eta must lie in (0, 1]")
        for e in self.eps:
            if not (0 < e <= 0.2):
                raise ValueError("eps must lie in (0, 0.2]")
        if not (math.pi * self.rho**2 < 1 and self.rho > 0):
            raise ValueError("rho must satisfy 0 < rho and pi rho^2 < 1")
        if self.jobs < 1:
            raise ValueError("jobs must be positive")
        if self.samples < 1:
            raise ValueError("samples must be positive")
        self.grid()

    def tolerance(self, default):
        return default if self.tol is None else self.tol


def _gauss(grid):
    return grid.sample(lambda *xs: np.exp(-np.pi * sum(x**2 for x in xs)))


# --- suites ------------------------------------------------------------------------------


def suite_constants(cfg):
    grid = cfg.grid()
    G = _gauss(grid)
    reports, rows = [], []
    tol = cfg.tolerance(1e-5 if cfg.d == 1 else 1e-4)
    for p in cfg.p:
        A = babenko(p) ** cfg.d
        r = hy_ratio(G, p)
        reports.append(close_report("gaussian_extremality", r, A, tol, params={"p": p, "d": cfg.d},
                                    anchor="||G^||_q / ||G||_p = A_p^d"))
        npp = lp_norm(G, p) ** p
        reports.append(close_report("gaussian_norm_identity", npp, p ** (-cfg.d / 2), 1e-8,
                                    params={"p": p, "d": cfg.d}, anchor="||G||_p^p = p^(-d/2)"))
        rows.append((p, A, r, b_constant(p, cfg.d)))
    t = YoungTriple(1.5, 1.5, 1.5, 1)
    g1 = Grid(1, 8.0, 1024)
    gs = [g1.sample(lambda x, a=a: np.exp(-a * np.pi * x**2)) for a in (1.0, 1.0, 1.0)]
    val = abs(young_trilinear(*gs))
    bound = young_bound(*gs, t)
    reports.append(close_report("young_matched_triple", val / bound, 1.0, 1e-5, relative=True,
                                params={"exponents": [1.5, 1.5, 1.5]},
                                anchor="|<f1*f2, f3>| = C prod ||f_j||_{p_j} for matched Gaussians"))
    return reports, {"constants": (("p", "A_p^d", "hy_ratio_G", "B_pd"), rows)}


def suite_spectrum(cfg):
    grid = cfg.grid()
    reports, tables = [], {}
    for p in cfg.p:
        k_max = 6
        table = sv.spectrum_table(p, k_max, grid)
        worst = max(r[3] for r in table)
        tol = cfg.tolerance(1e-4)
        reports.append(VerificationReport(
            name="operator_spectrum", params={"p": p, "d": grid.d, "N": grid.N, "L": grid.L},
            computed={"eigenvalues": [r[1] for r in table], "max_rel_err": worst},
            reference={"eigenvalues": [r[2] for r in table]}, tolerance=tol, passed=bool(worst <= tol),
            anchor="lambda_alpha = (p-1)^|alpha| (2-p)^(d/2)"))
        if grid.d == 1:
            res = []
            for k in range(k_max):
                psi = sv.eigenfunction(k, p, grid)
                lam = (p - 1) ** k * math.sqrt(2 - p)
                res.append(lp_norm(sv.operator_apply(psi, p) - psi * lam, 2.0))
            reports.append(VerificationReport(
                name="eigenfunction_residuals", params={"p": p}, computed={"residuals": res},
                reference={"bound": 1e-6}, tolerance=1e-6, passed=bool(max(res) < 1e-6),
                anchor="T psi_alpha = lambda_alpha psi_alpha"))
        phi = grid.sample(lambda *xs: np.exp(-0.5 * p * np.pi * sum(x**2 for x in xs)))
        err = float(np.abs(sv.operator_apply(phi, p).values - (2 - p) ** (grid.d / 2) * phi.values).max())
        reports.append(close_report("fixed_eigenvector", err, 0.0, 1e-8, params={"p": p, "d": grid.d},
                                    anchor="T(G^(p/2)) = (2-p)^(d/2) G^(p/2)"))
        tables[f"spectrum_p{p:g}"] = (("k", "lambda_computed", "lambda_predicted", "rel_err"), table)
    return reports, tables


def suite_pointwise(cfg):
    rng = np.random.default_rng(cfg.seed)
    reports, rows = [], []
    for p in cfg.p:
        for eta in cfg.eta:
            out = sv.pointwise_sweep(p, eta, cfg.samples, rng)
            c, C = sv.calibrated_constants(p, "real")
            cc, Cc = sv.calibrated_constants(p, "complex")
            ok = out["real_violations"] == 0 and out["complex_violations"] == 0
            reports.append(VerificationReport(
                name="pointwise_expansion", params={"p": p, "eta": eta, "samples": cfg.samples},
                computed=out, reference={"real": {"c": c, "C": C}, "complex": {"c": cc, "C": Cc}},
                tolerance=0.0, passed=bool(ok),
                anchor="|1+z|^p >= 1 + p Re z + quadratic - C eta |z|^2 (|z|<=eta); >= 1 + p Re z + c eta^(2-p)|z|^p otherwise"))
            rows.append((p, eta, out["real_violations"], out["complex_violations"],
                         out["real_min_margin"], out["complex_min_margin"]))
    return reports, {"pointwise": (("p", "eta", "real_violations", "complex_violations",
                                    "real_min_margin", "complex_min_margin"), rows)}


def _random_gaussian(rng):
    A = rng.uniform(0.5, 4.0)
    b = complex(rng.uniform(-2, 2), rng.uniform(-6, 6))
    c = complex(rng.uniform(-1, 1), rng.uniform(-math.pi, math.pi))
    return gm.Gaussian.from_parts([[A]], [b], c)


def suite_projection(cfg, n_exact=20):
    grid = Grid(1, 8.0, 1024)
    rng = np.random.default_rng(cfg.seed)
    reports, rows = [], []
    for p in cfg.p:
        worst = 0.0
        for _ in range(n_exact):
            g = _random_gaussian(rng)
            res = gm.project(gm.sample(g, grid), p)
            worst = max(worst, res.pi.params.distance(g.params))
        reports.append(close_report("projection_exact", worst, 0.0, 1e-8, params={"p": p, "n": n_exact},
                                    anchor="f = pi(f) + f_perp is unique; pi(g) = g for Gaussians"))
        h = sv.normal_direction(3, p, grid)
        nh = lp_norm(h, p)
        G = _gauss(grid)
        errs = []
        for eps in (0.1, 0.05, 0.01):
            res = gm.project(G + h * eps, p)
            errs.append(abs(res.dist_star - eps * nh))
            rows.append((p, eps, res.dist_star, eps * nh))
        reports.append(close_report("projection_normal_perturbation", max(errs), 0.0, 1e-5,
                                    params={"p": p}, anchor="dist*(G + eps h) = eps ||h||_p for h normal at G"))
    return reports, {"projection": (("p", "eps", "dist_star", "expected"), rows)}


def suite_sharpness(cfg):
    reports, tables = [], {}
    for p in cfg.p:
        rep, rows = sv.sharpness_report(cfg.eps, cfg.rho, p, tol=cfg.tolerance(0.05))
        reports.append(rep)
        tables[f"sharpness_p{p:g}"] = (
            ("eps", "ratio", "ratio_unnormalized", "c_eps_over_eps", "deficit"),
            [(r["eps"], r["ratio"], r["ratio_unnormalized"], r["c_eps"] / r["eps"], r["deficit"]) for r in rows],
        )
    return reports, tables


def suite_additive(cfg):
    rng = np.random.default_rng(cfg.seed)
    reports = [additive.example_pq(5, 7), additive.example_pq(2, 3)]
    FS = additive.FiniteSet.of
    e1 = additive.additive_energy_discrete(FS([0, 1]), FS([0, 1]))
    reports.append(close_report("energy_discrete", float(e1), 6.0, 0.0, anchor="E(A,B) = sum_s r(s)^2"))
    e2 = additive.additive_energy_continuum([(0, 1)], [(0, 1)])
    reports.append(close_report("energy_continuum", float(e2), 2.0 / 3.0, 1e-12,
                                anchor="E(A,B) = ||1_A * 1_B||_2^2"))
    worst = 0.0
    for _ in range(200):
        A = _random_union(rng)
        B = _random_union(rng)
        e = additive.additive_energy_continuum(A, B)
        worst = max(worst, e / (additive.measure(A) * additive.measure(B)) ** 1.5)
    reports.append(VerificationReport(
        name="energy_young_bound", params={"trials": 200}, computed={"max_ratio": worst},
        reference={"bound": 1.0}, tolerance=0.0, passed=bool(worst <= 1.0),
        anchor="E(A,B) <= |A|^(3/2) |B|^(3/2)"))
    rows = []
    for s in range(10):
        r = np.random.default_rng([cfg.seed, s])
        E = additive.ball_sample(2, float(r.uniform(0.5, 2.0)), 200, r, mc_points=20000)
        res = additive.determinant_search(E, rng=r, n_trials=400)
        rows.append((s, res.det, res.ratio, int(res.coefficients.sum())))
    ok = all(row[3] == 0 and row[2] > 0 for row in rows)
    reports.append(VerificationReport(
        name="determinant_search", params={"sets": len(rows)}, computed={"min_ratio": min(r[2] for r in rows)},
        reference={}, tolerance=0.0, passed=bool(ok),
        anchor="|det(sum s_j T_j)| >= c mu(E)^(1/d) with sum s_j = 0"))
    N, _, rep = additive.kneser_cover(np.arange(0, 100, 2), 100, 0.5)
    reports.append(rep)
    return reports, {"determinant": (("seed", "det", "ratio", "coeff_sum"), rows)}


def _random_union(rng, k_max=5):
    k = int(rng.integers(1, k_max + 1))
    ends = np.sort(rng.uniform(0, 10, 2 * k))
    return [(float(ends[2 * i]), float(ends[2 * i + 1])) for i in range(k)]


def suite_hybrid(cfg):
    reports = []
    g = Grid(1, 8.0, 1024)
    G = _gauss(g)
    for p in cfg.p:
        A = babenko(p)
        F = hybrid.HybridFunction.from_slices({0: G}, g)
        reports.append(close_report("hybrid_single_slice", hybrid.hybrid_hy_ratio(F, p), A, 1e-5,
                                    params={"p": p}, anchor="||F^x||_q <= A_p^d ||F||_p with equality for delta_0 x G"))
    fg = Grid(1, 8.0, 8192)
    rng = np.random.default_rng(cfg.seed)
    coef = rng.normal(size=11)
    f = fg.sample(lambda x: sum(c * _bump(x - n, 0.1) for n, c in zip(range(-5, 6), coef)))
    L = hybrid.lift(f, 0.1)
    th = rng.uniform(0, 1, 7)
    ks = np.arange(-3, 4)
    err = float(np.abs(hybrid.hybrid_fourier_at(L, th, ks + th)
                       - np.array([fourier_at(f, k + t)[0] for k, t in zip(ks, th)])).max())
    reports.append(close_report("lift_diagonal_identity", err, 0.0, 1e-6,
                                anchor="F^x(F)(theta, k + theta) = f^(k + theta)"))
    for p in cfg.p:
        norm_err = abs(hybrid.hybrid_lp_norm(L, p) - lp_norm(f, p))
        reports.append(close_report("lift_norm", norm_err, 0.0, 1e-12, params={"p": p},
                                    anchor="||lift f||_p = ||f||_p"))
    return reports, {}


def _bump(y, w):
    u = np.clip(np.abs(y) / w, 0.0, 1.0)
    return np.where(u < 1, np.exp(-1.0 / np.maximum(1.0 - u**2, 1e-300)), 0.0)


def suite_extraction(cfg):
    reports = []
    g = Grid(1, 8.0, 1024)
    G = _gauss(g)
    dec = extraction.level_decompose(G)
    err = max(abs(lv.measure - extraction.gaussian_level_measure(lv.k)) for lv in dec.levels if lv.k < 0)
    reports.append(close_report("gaussian_level_measures", err, 0.0, 1e-6,
                                anchor="|{2^k <= G < 2^(k+1)}| = 2(sqrt(-k ln2/pi) - sqrt(-(k+1) ln2/pi))"))
    for p in cfg.p:
        rep = extraction.quasi_extremizer_extract(G, p, 0.5)
        reports.append(VerificationReport(
            name="quasi_extremizer_gaussian", params={"p": p, "eta": 0.5}, computed=rep.to_dict(),
            reference={"mass_fraction_min": 0.5}, tolerance=0.0,
            passed=bool(rep.mass_fraction >= 0.5 and rep.pinned),
            anchor="||g||_p >= c ||f||_p, g < f, g < P, ||g||_inf |P|^(1/p) <= C ||f||_p"))
        base = extraction.uncertainty_product(gm.Gaussian.standard(1), p)[2]
        moved = extraction.uncertainty_product(gm.dilate(gm.Gaussian.standard(1), 3.0, p), p)[2]
        reports.append(close_report("uncertainty_dilation", moved, base, 1e-6, params={"p": p},
                                    anchor="|I| |J| is invariant under L^p dilations"))
    return reports, {}


SUITE_FUNCS = {
    "constants": suite_constants,
    "spectrum": suite_spectrum,
    "pointwise": suite_pointwise,
    "projection": suite_projection,
    "sharpness": suite_sharpness,
    "additive": suite_additive,
    "hybrid": suite_hybrid,
    "extraction": suite_extraction,
}


def run_suite(name, cfg):
    return SUITE_FUNCS[name](cfg)
