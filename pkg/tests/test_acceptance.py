"""Acceptance criteria for the tunneling-asymptotics package.

One test per criterion; each prints a PASS/FAIL line with the measured
numbers.  The 1D reference sweep and the 2D strip sweep each run once
(module-scoped fixtures) and are shared by the criteria they back.

Oracle values are produced by independent routes: 1D quadrature of
arccosh(1 + V0/2) for the action, Sturm-sequence bisection in mpmath
for exact eigenvalues of the double-precision operator matrices, dense
diagonalization for spectra, closed forms for the Laplace constants.
"""

import os
import time

import numpy as np
import pytest
from scipy.integrate import quad

from latticetunnel import (LatticeDomain, assemble_operator, box_region,
                           eikonal_solve, load_experiment, run_pipeline,
                           sum_vs_integral, sturm_eigenvalues, symbol_t)
from latticetunnel.pdo_suite import run_suite

HERE = os.path.dirname(__file__)
CFG_1D = os.path.join(HERE, "..", "configs", "double_well_1d.cfg")
CFG_2D = os.path.join(HERE, "..", "configs", "strip_2d.cfg")

V = lambda x: (x * x - 1.0) ** 2
XI = lambda x: np.arccosh(1.0 + V(x) / 2.0)


def _report(num, name, ok, detail):
    print(f"[{'PASS' if ok else 'FAIL'}] criterion {num} ({name}): {detail}")
    assert ok, f"criterion {num} ({name}): {detail}"


@pytest.fixture(scope="module")
def s_oracle():
    val, err = quad(XI, -1.0, 1.0, epsabs=1e-13, limit=200)
    assert err < 1e-10
    return val


@pytest.fixture(scope="module")
def pipe1d(tmp_path_factory):
    cfg = load_experiment(CFG_1D)
    t0 = time.monotonic()
    rep = run_pipeline(cfg, str(tmp_path_factory.mktemp("acc1d")))
    rep.elapsed = time.monotonic() - t0
    rep.cfg = cfg
    return rep


@pytest.fixture(scope="module")
def pipe2d(tmp_path_factory):
    cfg = load_experiment(CFG_2D)
    t0 = time.monotonic()
    rep = run_pipeline(cfg, str(tmp_path_factory.mktemp("acc2d")))
    rep.elapsed = time.monotonic() - t0
    rep.cfg = cfg
    return rep


def test_criterion_1_exponential_law(pipe1d, s_oracle):
    assert [round(1 / r.eps) for r in pipe1d.rows] == [10, 16, 24, 32, 40]
    assert max(pipe1d.cfg.eikonal_grid) <= 4001
    rel = abs(pipe1d.fit.S - s_oracle) / s_oracle
    ok = rel <= 0.01 and pipe1d.fit.r_squared > 0.999 and pipe1d.elapsed < 120.0
    _report(1, "exponential law",
            ok, f"slope {pipe1d.fit.S:.6f} vs oracle {s_oracle:.6f} "
                f"(rel {rel:.2%}), R^2 = {pipe1d.fit.r_squared:.8f}, "
                f"runtime {pipe1d.elapsed:.1f} s")


def test_criterion_2_prefactor_power(pipe1d):
    dev = abs(pipe1d.fit.p - 0.5)
    ok = dev <= 0.15
    _report(2, "prefactor power",
            ok, f"fitted exponent {pipe1d.fit.p:.4f} vs 1/2 (|dev| = {dev:.3f})")


def test_criterion_3_leading_order_magnitude(pipe1d):
    ratios = [r.ratio for r in pipe1d.rows]
    final = ratios[-1]
    tail = [abs(r - 1.0) for r in ratios[-3:]]
    ok = 0.8 <= final <= 1.2 and tail[0] > tail[1] > tail[2]
    _report(3, "leading-order magnitude",
            ok, f"|w_pred/w_exact| at eps=1/40: {final:.4f}; "
                f"|ratio-1| over three smallest eps: "
                f"{', '.join(f'{t:.4f}' for t in tail)}")


def test_criterion_4_interaction_matrix_consistency(pipe1d):
    # exact eigenvalues of the double-precision matrices via Sturm
    # bisection in mpmath: the splitting (~1e-23) sits far below double
    # precision, so this is the only honest reference
    from mpmath import mp, mpf, sqrt as mpsqrt

    eps = 1 / 40
    cfg = pipe1d.cfg
    dom = LatticeDomain(eps, cfg.box)
    H, _ = assemble_operator(cfg.model, dom)
    diag, off = np.diag(H).copy(), np.diag(H, 1).copy()
    lam = sturm_eigenvalues(diag, off, 2, 0.0, 0.3, digits=40)

    mask_j = dom.indicator(box_region(cfg.mask_j_box))
    mask_k = dom.indicator(box_region(cfg.mask_k_box))
    sel_j = np.flatnonzero(mask_j)
    sel_k = np.flatnonzero(mask_k)
    mu_j = sturm_eigenvalues(diag[sel_j], off[sel_j[0]:sel_j[-1]], 1, 0.0, 0.3,
                             digits=40)[0]
    mu_k = sturm_eigenvalues(diag[sel_k], off[sel_k[0]:sel_k[-1]], 1, 0.0, 0.3,
                             digits=40)[0]

    wt = mpf(pipe1d.rows[-1].w_tilde)
    old = mp.dps
    try:
        mp.dps = 40
        avg = (mu_j + mu_k) / 2
        halfdiff = (mu_j - mu_k) / 2
        disc = mpsqrt(halfdiff * halfdiff + wt * wt)
        model = sorted([avg - disc, avg + disc])
        split = lam[1] - lam[0]
        dev = max(abs(model[0] - lam[0]), abs(model[1] - lam[1]))
        ratio = float(dev / split)
    finally:
        mp.dps = old
    ok = ratio <= 0.1
    _report(4, "interaction-matrix consistency",
            ok, f"exact splitting {float(split):.6e}, model splitting "
                f"{float(model[1] - model[0]):.6e}, |deviation|/splitting = {ratio:.2e}")


def test_criterion_5_eikonal_residual(pipe1d):
    model = pipe1d.cfg.model
    res = []
    for n in (1001, 2001, 4001):
        fld = eikonal_solve(model, 0, [[-1.4, 1.4]], n)
        band = fld.interior_mask & (np.abs(fld.axes[0]) <= 1.25)
        res.append(fld.max_residual(band))
    ok = res[-1] <= 5e-3 and res[1] <= 0.55 * res[0] and res[2] <= 0.55 * res[1]
    _report(5, "eikonal residual",
            ok, f"band residuals at n=1001/2001/4001: "
                f"{res[0]:.3e} / {res[1]:.3e} / {res[2]:.3e} "
                f"(ratios {res[1] / res[0]:.2f}, {res[2] / res[1]:.2f})")


def test_criterion_6_pdo_exactness_suite():
    t0 = time.monotonic()
    results = run_suite(seed=2024, instances=20)
    elapsed = time.monotonic() - t0
    ok = elapsed < 30.0
    lines = []
    for name, dev, tol in results:
        ok &= dev <= tol
        lines.append(f"{name} {dev:.2e} (tol {tol:.0e})")
    _report(6, "pdo exactness suite", ok,
            "; ".join(lines) + f"; runtime {elapsed:.1f} s")


def test_criterion_7_lattice_laplace():
    eps_values = [1 / 10, 1 / 16, 1 / 24, 1 / 32, 1 / 40]
    devs = []
    for eps in eps_values:
        n = np.arange(int(np.floor(-14 / eps)), int(np.ceil(14 / eps)) + 1)
        s = np.sqrt(eps) * np.sum(np.exp(-(n * eps) ** 2 / (2 * eps)))
        devs.append(abs(s - np.sqrt(2 * np.pi)))
    gauss_ok = all(dev <= 3 * eps for dev, eps in zip(devs, eps_values))
    f = lambda y: np.cos(y) * np.exp(-y**2 / 2)
    poisson_dev = sum_vs_integral(f, -14.0, 14.0, h=1 / 40)
    ok = gauss_ok and poisson_dev <= 1e-8
    _report(7, "lattice Laplace",
            ok, f"max |eps^(1/2) sum - sqrt(2 pi)| = {max(devs):.2e} "
                f"(<= 3*eps everywhere); sum-vs-integral dev {poisson_dev:.2e}")


def test_criterion_8_manifold_case(pipe2d, s_oracle):
    assert [round(1 / r.eps) for r in pipe2d.rows] == [8, 12, 16]
    grid = pipe2d.cfg.eikonal_grid
    assert max(grid) <= 160 and min(grid) <= 40
    rel = abs(pipe2d.fit.S - s_oracle) / s_oracle
    ell = pipe2d.geometry["ell"]
    # the strip wells are degenerate circles, so the amplitude orders are
    # the measured N_m (= -1/4 structurally), not the point-well value 0
    pred_expo = (1 - ell) / 2 - (pipe2d.orders["N_j"] + pipe2d.orders["N_k"])
    expo_dev = abs(pipe2d.fit.p - pred_expo)
    ratios = [r.ratio for r in pipe2d.rows]
    in_band = all(0.6 <= r <= 1.5 for r in ratios)
    improving = abs(ratios[-1] - 1.0) < abs(ratios[0] - 1.0)
    ok = (rel <= 0.02 and expo_dev <= 0.3 and in_band and improving
          and pipe2d.elapsed < 600.0)
    _report(8, "manifold case",
            ok, f"slope rel dev {rel:.2%}; exponent {pipe2d.fit.p:.3f} vs "
                f"(1-ell)/2 - (N_j+N_k) = {pred_expo:.3f} (|dev| {expo_dev:.3f}); "
                f"ratios {', '.join(f'{r:.3f}' for r in ratios)}; "
                f"runtime {pipe2d.elapsed:.1f} s")


def test_criterion_9_invariant_suites(pipe1d, pipe2d):
    failures = []

    # symmetry of H_eps on both shipped models
    for cfg, eps in ((pipe1d.cfg, 1 / 16), (pipe2d.cfg, 1 / 8)):
        dom = LatticeDomain(eps, cfg.box, periodic=cfg.periodic)
        H, _ = assemble_operator(cfg.model, dom)
        if np.abs(H - H.T).max() > 1e-14:
            failures.append("operator symmetry")

    # argmin / mirror symmetries of the crossing
    if abs(pipe1d.geometry["y0"][0]) > 1e-10:
        failures.append("1d argmin at the origin")
    if pipe1d.rows[-1].mu_j != pytest.approx(pipe1d.rows[-1].mu_k, abs=1e-12):
        failures.append("mirror mu_j = mu_k")
    if pipe2d.geometry["case"] != "manifold" or pipe2d.geometry["ell"] != 1:
        failures.append("strip manifold detection")

    # Gram positivity of the Dirichlet pair (recomputed at eps = 1/16)
    from latticetunnel import select_interval

    cfg = pipe1d.cfg
    dom = LatticeDomain(1 / 16, cfg.box)
    masks = {0: dom.indicator(box_region(cfg.mask_j_box)),
             1: dom.indicator(box_region(cfg.mask_k_box))}
    _, chosen, _ = select_interval(cfg.model, dom, masks, 1 / 16)
    gram = np.array([[chosen[a].vector @ chosen[b].vector for b in (0, 1)]
                     for a in (0, 1)])
    if np.linalg.eigvalsh(gram).min() <= 0:
        failures.append("Gram positivity")

    # triangle inequality on sampled triples of the quadrature metric
    # (the integrand has kinks at the wells: declare them as breakpoints)
    rng = np.random.default_rng(11)

    def dmetric(a, b):
        lo, hi = min(a, b), max(a, b)
        brk = [w for w in (-1.0, 1.0) if lo < w < hi]
        return abs(quad(XI, lo, hi, epsabs=1e-12, limit=300, points=brk or None)[0])

    for _ in range(20):
        x, y, z = rng.uniform(-1.3, 1.3, size=3)
        if dmetric(x, z) > dmetric(x, y) + dmetric(y, z) + 1e-10:
            failures.append(f"triangle inequality at {(x, y, z)}")

    # evenness of t0 on both shipped models
    for cfg in (pipe1d.cfg, pipe2d.cfg):
        m = cfg.model
        d = m.dimension
        for _ in range(10):
            x = rng.uniform(-1, 1, size=d)
            xi = rng.uniform(-np.pi, np.pi, size=d)
            if abs(symbol_t(m, x, xi, order=0) - symbol_t(m, x, -xi, order=0)) > 1e-13:
                failures.append("t0 evenness")

    # empirical sign of the leading-order prediction agrees with the exact
    # interaction on every sweep entry of both shipped configurations
    for rep in (pipe1d, pipe2d):
        for r in rep.rows:
            if np.sign(r.w_pred) != np.sign(r.w_jk):
                failures.append(f"prediction sign at eps={r.eps}")

    ok = not failures
    _report(9, "invariant suites", ok,
            "zero failures" if ok else f"failures: {failures}")
