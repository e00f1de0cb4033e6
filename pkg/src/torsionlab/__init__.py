"""Finite element experiments on quantitative Saint-Venant and resolvent stability in the plane."""
from .closed_forms import (ball_torsional_rigidity, disk_eigenpair, disk_eigenvalue,
                           ellipse_torsion, h1_distance_ellipse, satellite_example)
from .errors import TorsionLabError
from .fem import FemField, solve_eigen, solve_poisson, torsion_function, torsional_rigidity
from .functionals import (PenaltyParams, ResolventContext, StabilityReport, beta_sq, energy,
                          resolvent_distance_lb, stability_report)
from .geometry import (BoundaryFunction, StarDomain, TriangleMesh, fraenkel_asymmetry,
                       mesh_star_domain, truncated_barycenter, volume, volume_normalize)
from .nearly_spherical import NearlySpherical, check_spectral_gap, taylor_check
from .shape_calculus import (OptimizerOptions, d_barycenter, d_beta_sq, d_torsion, d_volume,
                             minimize_energy, shape_gradient)
from .transfer import compute_transfer, match_multiplicity, match_simple

__version__ = "0.1.0"
