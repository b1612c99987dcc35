"""Numerical toolkit for evolutionary Hamilton-Jacobi equations
u_t + H(x, u, Du) = 0 with u-dependent Hamiltonians on the flat torus.

Two independent solution paths are provided: a variational dynamic
programming semigroup with a Picard fixed-point certificate, and a
monotone Lax-Friedrichs finite-difference oracle, together with minimal
action tables, critical-value estimation, characteristic flows and the
diagnostic battery tying them together.
"""

__version__ = "0.1.0"

from .action import (
    ActionTable,
    CriticalValueResult,
    critical_value,
    min_action,
    normalize,
    peierls_barrier,
)
from .characteristics import (
    CharacteristicState,
    Trajectory,
    dH_law_residual,
    flow,
    match_calibrated,
)
from .errors import ConfigurationError, NumericError
from .fdoracle import LFConfig, lf_final, lf_solve, lf_step
from .legendre import lagrangian_values, legendre_inverse, legendre_transform
from .models import (
    HamiltonianModel,
    PiecewiseLinearMap,
    TrigPotential,
    audit_assumptions,
    eval_H,
    grad_H,
)
from .semigroup import (
    CalibratedCurve,
    ConvergenceReport,
    FixedPointReport,
    check_Ltilde,
    check_properties,
    converge,
    extract_calibrated_curve,
    fixed_point,
    step_T,
    weak_kam_residual,
)
from .torus import Grid, GridField, SpaceTimeField, interp_periodic

__all__ = [
    "ActionTable",
    "CalibratedCurve",
    "CharacteristicState",
    "ConfigurationError",
    "ConvergenceReport",
    "CriticalValueResult",
    "FixedPointReport",
    "Grid",
    "GridField",
    "HamiltonianModel",
    "LFConfig",
    "NumericError",
    "PiecewiseLinearMap",
    "SpaceTimeField",
    "Trajectory",
    "TrigPotential",
    "audit_assumptions",
    "check_Ltilde",
    "check_properties",
    "converge",
    "critical_value",
    "dH_law_residual",
    "eval_H",
    "extract_calibrated_curve",
    "fixed_point",
    "flow",
    "grad_H",
    "interp_periodic",
    "lagrangian_values",
    "legendre_inverse",
    "legendre_transform",
    "lf_final",
    "lf_solve",
    "lf_step",
    "match_calibrated",
    "min_action",
    "normalize",
    "peierls_barrier",
    "step_T",
    "weak_kam_residual",
]
