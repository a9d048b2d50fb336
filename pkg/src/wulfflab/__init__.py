"""Anisotropic Cheeger constants, coupled Cheeger pairs and p-Laplacian eigenvalues on planar lattices."""
from .cheeger import CheegerResult, brute_force_h1, convex_planar_h1_oracle, solve_h1
from .config import ExperimentManifest, SolverConfig
from .eigen import EigenResult, SweepResult, radial_lambda1, solve_lambda1, solve_lambda2, sweep_p
from .errors import ConfigError, SolverError, WulffLabError
from .geometry import GridDomain, GridSubset, Polygon, domain_from_spec
from .norms import NormDescriptor, kappa, verify_identities, wulff_measure, wulff_perimeter
from .partition import CoupledCheegerResult, SubsetPair, brute_force_h2, solve_h2, solve_hk
from .twisted import find_q_tilde, solve_twisted, two_wulff_solution

__version__ = "0.1.0"
