"""Numerical Hardy-type constants for functions with zero spherical average.

Submodules:

``radial``          radial profiles, weights, angular modes and quadrature
``rearrangement``   step functions, decreasing rearrangement, Lorentz norms
``spectral``        finite-element mode problems and sharp-constant traces
``testfunctions``   explicit test families and their Rayleigh quotients
``verifiers``       seeded property suites for the remaining inequalities
``cli``             the ``hardylab`` command
"""

from .radial import (AngularMode, ClassicalBall, ClassicalWholeSpace, CriticalDisk, Grid,
                     RadialProfile, WeightSpec, build_grid, integrate, integrate_adaptive,
                     mode_energy, mode_energy_adaptive, sphere_area)
from .rearrangement import (LorentzParams, StepFunction, decreasing_rearrangement, dilate,
                            lorentz_norm, lp_norm, tail_head_bound, weak_norm)
from .spectral import (ModeProblem, SharpEstimate, minimize_lq_quotient, reduce_mode,
                       sharp_constant, smallest_eigen)
from .testfunctions import (FABall, FAWholeSpace, QuotientReport, UAlpha, ULambda, VM,
                            make_family, quotient, transform_u_lambda)
from .verifiers import (InterpolationTriple, TrialConfig, check_interpolation,
                        exponent_split, holder_failure_ratio, run_suite)

__version__ = "0.1.0"

__all__ = [
    "AngularMode", "ClassicalBall", "ClassicalWholeSpace", "CriticalDisk", "Grid",
    "RadialProfile", "WeightSpec", "build_grid", "integrate", "integrate_adaptive",
    "mode_energy", "mode_energy_adaptive", "sphere_area",
    "LorentzParams", "StepFunction", "decreasing_rearrangement", "dilate", "lorentz_norm",
    "lp_norm", "tail_head_bound", "weak_norm",
    "ModeProblem", "SharpEstimate", "minimize_lq_quotient", "reduce_mode", "sharp_constant",
    "smallest_eigen",
    "FABall", "FAWholeSpace", "QuotientReport", "UAlpha", "ULambda", "VM", "make_family",
    "quotient", "transform_u_lambda",
    "InterpolationTriple", "TrialConfig", "check_interpolation", "exponent_split",
    "holder_failure_ratio", "run_suite",
]
