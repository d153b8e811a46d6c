"""The periodic-symbol calculus and its exact identities.

Symbols are finite Fourier series in the momentum, so quantization
integrals collapse to stencils with no quadrature error; the calculus
identities (restriction, quantization conversion, weight conjugation,
window commutators, contour shifts) then hold to round-off and are
checked that way.
"""

import numpy as np

from latticetunnel import (LatticeDomain, PeriodicSymbol, apply_operator,
                           conjugate_weight, contour_shift_check,
                           convert_quantization, double_well_1d,
                           lattice_laplace, quantize, restriction_check,
                           sum_vs_integral, window_commutator)

model = double_well_1d()
dom = LatticeDomain(0.1, [[-2, 2]])
rng = np.random.default_rng(0)
u = rng.normal(size=dom.size)
u[np.abs(dom.points[:, 0]) > 1.2] = 0.0

# the model's transfer symbol reproduces the hopping part of H exactly
sym = PeriodicSymbol.from_model(model, eps=dom.eps)
direct = apply_operator(model, dom, u) - model.V0(dom.points) * u
dev = np.abs(quantize(sym, 0.0, u, dom) - direct).max()
print(f"Op^T(t) vs operator action:        {dev:.2e}")

# restriction equivalence on a band-limited smooth function
smooth = lambda p: np.cos(p[:, 0] / dom.eps) * np.exp(-p[:, 0] ** 2)
print(f"restriction commutes:              {restriction_check(sym, smooth, dom):.2e}")

# two-variable -> t-quantization conversion, exact on coefficients
a = PeriodicSymbol({(1,): lambda x, y: np.cos(y[:, 0]),
                    (0,): 1.0}, kind="xy")
a_half, terms = convert_quantization(a, t=0.5, eps=dom.eps)
dev = np.abs(quantize(a_half, 0.5, u, dom) - quantize(a, 0.0, u, dom)).max()
print(f"quantization conversion:           {dev:.2e}")

# exponential-weight conjugation: exact for any smooth weight
psi = lambda p: 0.3 * p[:, 0] ** 2 + 0.1 * np.sin(p[:, 0])
conj = conjugate_weight(sym, psi, eps=dom.eps)
w = np.exp(psi(dom.points) / dom.eps)
dev = np.abs(w * quantize(sym, 0, u / w, dom) - quantize(conj, 0, u, dom)).max()
print(f"weight conjugation identity:       {dev:.2e}")

# Gaussian window commutator: direct vs shifted-argument sinh formula
_, dev = window_commutator(model, s=0.2, u=u, domain=dom, c0=1.0)
print(f"window commutator two routes:      {dev:.2e}")

# periodic contour shift
print(f"contour shift (cos z, a = 0.7):    {contour_shift_check({1: .5, -1: .5}, 0.7):.2e}")

# lattice Laplace method: eps^(1/2) sum e^{-x^2/2eps} -> sqrt(2 pi)
records, J0, slope = lattice_laplace(lambda p: np.ones(p.shape[0]),
                                     lambda p: 0.5 * p[:, 0] ** 2,
                                     [0.0], [1 / 10, 1 / 20, 1 / 40],
                                     [[-12, 12]], hessian=[[1.0]])
print(f"\nlattice Laplace: J0 = {J0:.10f} (sqrt(2 pi) = {np.sqrt(2 * np.pi):.10f})")
for eps, s in records:
    print(f"  eps = 1/{round(1 / eps):<3d} scaled sum = {s:.12f}  dev = {abs(s - J0):.1e}")

f = lambda y: np.cos(y) * np.exp(-y**2 / 2)
print(f"sum-vs-integral (smooth window):   {sum_vs_integral(f, -14, 14, h=1 / 40):.2e}")
