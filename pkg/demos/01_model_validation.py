"""Defining a lattice model and checking its structural hypotheses.

The model fixes the difference operator H u(x) = sum_g a_g(x) u(x+g)
+ V(x) u(x) on every lattice (eps Z)^d at once: hopping offsets are
integer stencil vectors, coefficients and potential are callables.
"""

import numpy as np

from latticetunnel import (LatticeDomain, double_well_1d, kinetic_B,
                           strip_model_2d, symbol_h0tilde, symbol_t,
                           validate_model, xdep_hopping_1d)

model = double_well_1d()
print(f"model: {model.name}, dimension {model.dimension}")
print(f"offsets: {model.hopping.offsets}")
print(f"wells:   {model.potential.wells.ravel()}")

# the transfer symbol and its imaginary-momentum counterpart
x = 0.3
print("\nsymbols at x = 0.3:")
print(f"  t0(x, pi)        = {symbol_t(model, x, np.pi, order=0).real:.6f}   (2 - 2 cos pi = 4)")
print(f"  t0(x, 0)         = {symbol_t(model, x, 0.0, order=0).real:.2e}   (zero sum)")
print(f"  h~0(x, 0.5)      = {symbol_h0tilde(model, x, 0.5):.6f}")
print(f"  kinetic B(x)     = {kinetic_B(model, x).ravel()}")

# sampled hypothesis checks: zero sum, signs, translation symmetry,
# offset span, well nondegeneracy, kinetic positivity, decay surrogate
print("\nvalidation of the reference double well:")
grid = LatticeDomain(0.05, [[-2, 2]])
print(validate_model(model, grid))

print("\nvalidation of the periodic strip (degenerate wells are flagged):")
strip = strip_model_2d()
grid2 = LatticeDomain(0.125, [[0, 1], [-2, 2]], periodic=(True, False))
print(validate_model(strip, grid2))

print("\nan eps-expanded x-dependent hopping family also passes:")
print(validate_model(xdep_hopping_1d(), LatticeDomain(0.05, [[-2, 2]])))
