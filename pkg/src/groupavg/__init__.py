"""Multiplicative averaging of pseudo-representations on finite and circle groupoids."""

from .groupoid import (
    FiniteGroupAction,
    FiniteGroupoid,
    MalformedAction,
    NotInvariant,
    action_groupoid,
    cyclic_group,
    pair_groupoid,
    symmetric_group,
    trivial_groupoid,
)
from .haar import HaarSystem, check_haar, counting_haar, restrict_haar
from .psrep import (
    DegenerateMetric,
    FiberBundle,
    NonInvertible,
    PseudoRep,
    b_norm,
    c_norm,
    delta_cocycle,
    inverse_rep,
    is_nearly_multiplicative,
    operator_norm,
    restrict_rep,
)
from .averaging import (
    GatePrecondition,
    IterationTrace,
    average,
    iterate,
    verify_fundamental_identities,
    verify_step_estimates,
    write_trace_csv,
)
from .bounds import (
    GateViolation,
    check_coupled_decay,
    check_quadratic_decay,
    envelope,
)
from .circle import (
    CircleProfile,
    NonInvertibleNode,
    NonPeriodicProfile,
    ProfileOutOfRange,
    TorusGridFn,
    average_circle,
    discrete_seminorm,
    from_profile,
    group_bundle_average,
    iterate_circle,
    multiplicativity_residual,
)

__version__ = "0.1.0"

__all__ = [
    "FiniteGroupAction",
    "FiniteGroupoid",
    "MalformedAction",
    "NotInvariant",
    "action_groupoid",
    "cyclic_group",
    "pair_groupoid",
    "symmetric_group",
    "trivial_groupoid",
    "HaarSystem",
    "check_haar",
    "counting_haar",
    "restrict_haar",
    "DegenerateMetric",
    "FiberBundle",
    "NonInvertible",
    "PseudoRep",
    "b_norm",
    "c_norm",
    "delta_cocycle",
    "inverse_rep",
    "is_nearly_multiplicative",
    "operator_norm",
    "restrict_rep",
    "GatePrecondition",
    "IterationTrace",
    "average",
    "iterate",
    "verify_fundamental_identities",
    "verify_step_estimates",
    "write_trace_csv",
    "GateViolation",
    "check_coupled_decay",
    "check_quadratic_decay",
    "envelope",
    "CircleProfile",
    "NonInvertibleNode",
    "NonPeriodicProfile",
    "ProfileOutOfRange",
    "TorusGridFn",
    "average_circle",
    "discrete_seminorm",
    "from_profile",
    "group_bundle_average",
    "iterate_circle",
    "multiplicativity_residual",
]
