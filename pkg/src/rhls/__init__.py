"""Reversed weighted HLS numerics on the upper half space and the unit ball."""

from .params import (ExponentSet, conformal_exponents, pohozaev_defect,
                     subcritical_set, validate_exponents)
from .quad import QuadratureRule, build_ball_rule, integrate, mc_integrate
from .functional import (Field, apply_T_operator, bilinear_functional,
                         constant_field, quasi_norm, quotient)
from .special import ConstantBand, angular_constant, constant_band, gamma
from .solver import (SolveReport, SolverOptions, blowup_renormalize,
                     critical_sweep, halfspace_solution, solve_subcritical)
from .verify import CheckReport

__all__ = [
    "ExponentSet", "validate_exponents", "conformal_exponents",
    "pohozaev_defect", "subcritical_set",
    "QuadratureRule", "build_ball_rule", "integrate", "mc_integrate",
    "Field", "constant_field", "quasi_norm", "apply_T_operator",
    "bilinear_functional", "quotient",
    "ConstantBand", "angular_constant", "constant_band", "gamma",
    "SolveReport", "SolverOptions", "solve_subcritical", "critical_sweep",
    "halfspace_solution", "blowup_renormalize", "CheckReport",
]

__version__ = "0.1.0"
