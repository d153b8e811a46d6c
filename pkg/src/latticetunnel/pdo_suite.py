"""Randomized exactness suite for the periodic-symbol calculus.

Each check draws random finite-Fourier symbols, random lattice
functions and random weights, evaluates an identity that holds exactly
for finite stencils, and reports the worst deviation.  Tolerances are
round-off budgets, not approximation errors.
"""

import numpy as np

from .lattice import LatticeDomain
from .models import double_well_1d
from .pdo import (PeriodicSymbol, conjugate_weight, contour_shift_check,
                  quantize, restriction_check, window_commutator)


def _random_symbol(rng, dim, kind, max_eta=2, n_modes=3):
    four = {}
    for _ in range(n_modes):
        eta = tuple(int(v) for v in rng.integers(-max_eta, max_eta + 1, size=dim))
        amp = rng.normal()
        freq = rng.uniform(0.5, 2.0, size=dim)
        phase = rng.uniform(0, 2 * np.pi)
        if kind == "xy":
            four[eta] = (lambda x, y, _a=amp, _f=freq, _p=phase:
                         _a * np.cos(np.atleast_2d(x) @ _f + _p)
                         * (1.0 + 0.3 * np.sin(np.atleast_2d(y) @ _f)))
        else:
            four[eta] = (lambda x, _a=amp, _f=freq, _p=phase:
                         _a * np.cos(np.atleast_2d(x) @ _f + _p))
    four.setdefault((0,) * dim, 1.0)
    return PeriodicSymbol(four, kind=kind, dim=dim)


def check_restriction(rng, instances):
    worst = 0.0
    for _ in range(instances):
        eps = float(rng.choice([0.1, 0.05, 0.025]))
        domain = LatticeDomain(eps, [[-1.0, 1.0]])
        sym = _random_symbol(rng, 1, "xy")
        k = float(rng.uniform(0.3, 3.0))
        x0 = float(rng.uniform(-0.3, 0.3))
        u = lambda p, _k=k, _x0=x0: (np.cos(_k * np.atleast_2d(p)[:, 0])
                                     * np.exp(-(np.atleast_2d(p)[:, 0] - _x0) ** 2))
        worst = max(worst, restriction_check(sym, u, domain, eps=eps))
    return worst


def check_conjugation(rng, instances):
    worst = 0.0
    for _ in range(instances):
        eps = float(rng.choice([0.1, 0.05]))
        domain = LatticeDomain(eps, [[-1.0, 1.0]])
        sym = _random_symbol(rng, 1, "xy")
        a, b, c = rng.normal(size=3) * [0.4, 0.6, 0.5]
        psi = lambda p, _a=a, _b=b, _c=c: (_a + _b * np.atleast_2d(p)[:, 0]
                                           + _c * np.atleast_2d(p)[:, 0] ** 2)
        u = rng.normal(size=domain.size)
        u[np.abs(domain.points[:, 0]) > 0.7] = 0.0
        conj = conjugate_weight(sym, psi, eps)
        wexp = np.exp(np.asarray(psi(domain.points)) / eps)
        lhs = wexp * quantize(sym, 0.0, u / wexp, domain, eps=eps)
        rhs = quantize(conj, 0.0, u, domain, eps=eps)
        scale = max(1.0, np.abs(lhs).max())
        worst = max(worst, float(np.abs(lhs - rhs).max() / scale))
    return worst


def check_window(rng, instances):
    model = double_well_1d()
    worst = 0.0
    for _ in range(instances):
        eps = float(rng.choice([0.1, 0.05]))
        domain = LatticeDomain(eps, [[-2.0, 2.0]])
        u = rng.normal(size=domain.size)
        u[np.abs(domain.points[:, 0]) > 1.0] = 0.0
        s = float(rng.uniform(-0.5, 0.5))
        c0 = float(rng.uniform(0.5, 2.0))
        formula, dev = window_commutator(model, s, u, domain, eps=eps, c0=c0)
        scale = max(1.0, np.abs(formula).max())
        worst = max(worst, dev / scale)
    return worst


def check_contour(rng, instances):
    worst = 0.0
    for _ in range(instances):
        n = int(rng.integers(1, 5))
        coeffs = {int(k): complex(rng.normal(), rng.normal())
                  for k in rng.integers(-4, 5, size=n)}
        coeffs.setdefault(0, 1.0 + 0j)
        a = float(rng.uniform(-0.8, 0.8))
        worst = max(worst, contour_shift_check(coeffs, a))
    return worst


def run_suite(seed=0, instances=20):
    """Run all checks; returns [(name, worst deviation, tolerance), ...]."""
    rng = np.random.default_rng(seed)
    return [
        ("restriction", check_restriction(rng, instances), 1e-10),
        ("conjugation", check_conjugation(rng, instances), 1e-10),
        ("window_commutator", check_window(rng, instances), 1e-10),
        ("contour_shift", check_contour(rng, instances), 1e-12),
    ]
