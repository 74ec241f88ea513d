"""Resonances of 1-D Schrodinger operators by complex absorbing potentials,
cross-checked against a Birman-Schwinger determinant."""
from .assembly import ExteriorScaling, Grid1D, build_grid, cap_matrix, davies_matrix, laplacian_matrix
from .birman_schwinger import (bs_determinant, bs_matrix, find_resonances, free_kernel, multiplicity,
                               multiplicity_eps, multiplicity_routes, regularized_bs_matrix,
                               weighted_free_resolvent_norm)
from .cap_sweep import RectangleOmega, ResonanceEstimate, SweepConfig, converged_estimates, run_sweep
from .davies import exact_spectrum, resolvent_norm, weighted_cap_resolvent_norm
from .deformation import (DeformationSpec, check_admissible, numerical_range_scan, phi_theta,
                          symbol, symbol_region_margin)
from .eig import eigenvalues, filter_sector, smallest_singular_value, sqrt_sector
from .potentials import Potential, custom, verify_envelope, expwell, factorize, gaussian, sech2, square_well, zero_potential

__version__ = "0.1.0"
