"""Quillen superconnection Chern characters and their residue formula, numerically.

Modules
-------
superalgebra    graded exterior algebra with super-matrix coefficients
geometry        scenarios on S^1 and T^2, symbols, connections, grids
superconnection curvature decomposition, Chern form, direct pairing
holocalc        resolvents and complex powers by contour quadrature
mellin          series terms, entire factors, continuation, residues
harness         verification reports and the command line
oracles         independent reference computations for testing
"""
from .errors import (ConfigError, DomainError, InvariantError, PoleError, SingularityError,
                     StageError, StructureError)
from .geometry import (FourierSeries, Scenario, TestForm, builtin_scenarios, dump_scenario,
                       get_builtin, load_scenario, with_eta)
from .holocalc import FormContour, PowerEvaluator, complex_power, resolvent
from .mellin import (MeromorphicIntegral, SeriesTerm, build_integral, enumerate_terms, gamma,
                     meromorphic_eval, phi_V, residue_at, residue_sum, rhs_pairing)
from .superalgebra import (MixedForm, SuperMatrix, degree_part, exp_form, invert_degree0_dominant,
                           supertrace_form, wedge)
from .superconnection import chern_form, curvature, lhs_pairing, lhs_pairing_outside

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "DomainError", "InvariantError", "PoleError", "SingularityError", "StageError",
    "StructureError",
    "FourierSeries", "Scenario", "TestForm", "builtin_scenarios", "dump_scenario", "get_builtin",
    "load_scenario", "with_eta",
    "FormContour", "PowerEvaluator", "complex_power", "resolvent",
    "MeromorphicIntegral", "SeriesTerm", "build_integral", "enumerate_terms", "gamma",
    "meromorphic_eval", "phi_V", "residue_at", "residue_sum", "rhs_pairing",
    "MixedForm", "SuperMatrix", "degree_part", "exp_form", "invert_degree0_dominant",
    "supertrace_form", "wedge",
    "chern_form", "curvature", "lhs_pairing", "lhs_pairing_outside",
]
