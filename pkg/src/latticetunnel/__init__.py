"""latticetunnel: tunneling asymptotics for multi-well difference operators
on scaled lattices (eps Z)^d.

The package computes, for a hopping family plus multi-well potential:
hypothesis validation, Dirichlet spectra, Finsler/eikonal distance
fields and minimal geodesics, an exact periodic-symbol calculus, the
exact well-to-well interaction term, and its closed-form leading-order
asymptotics, cross-validated against direct diagonalization.
"""

from .config import ExperimentConfig, load_experiment, load_model
from .finsler import (DistanceField, Geodesic, GeodesicManifold,
                      eikonal_solve, finsler_norm, hamiltonian_flow,
                      manifold_detect, minimal_geodesic, transverse_hessian)
from .lattice import LatticeDomain, apply_operator, assemble_operator, box_region
from .models import (HoppingFamily, ModelSpec, PotentialExpansion,
                     double_well_1d, kinetic_B, product_well_2d, strip_model_2d,
                     symbol_h0tilde, symbol_t, validate_model, xdep_hopping_1d)
from .pdo import (GaussianWindow, PeriodicSymbol, conjugate_weight,
                  contour_shift_check, convert_quantization, lattice_laplace,
                  quantize, restriction_check, sum_vs_integral, window_commutator)
from .pipeline import TunnelingReport, fit_asymptotics, run_pipeline
from .spectral import (EigenPair, SpectralInterval, dirichlet_eigs,
                       harmonic_levels, select_interval, sturm_eigenvalues)
from .tunneling import (AmplitudeField, InteractionResult, amplitude_extract,
                        current_sum, ellipse_region, interaction_exact,
                        interaction_matrix, I0_manifold, I0_point,
                        predict_manifold, predict_point, boundary_band_estimate)

__version__ = "0.1.0"
