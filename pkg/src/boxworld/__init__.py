"""Exact-arithmetic toolkit for box world (generalised no-signalling theory)."""

from .errors import (
    BoxWorldError,
    ConditioningError,
    GreedyBlocked,
    InvalidMeasurementError,
    InvalidStateError,
    InvalidTransformationError,
    ShapeError,
    SignatureMismatch,
    SizeGuardError,
)
from .measurements import (
    Measurement,
    SimulationReport,
    TotalArray,
    affine_certificate,
    decompose_separable_effect,
    effects_equivalent,
    outcome_distribution,
    postselect_conditional,
    simulate_postselect,
    total_array,
    validate_measurement,
)
from .protocols import (
    SwapScenario,
    Transformation,
    apply_transformation,
    collapsed_ac_state,
    lambda_decomposition,
    swap_joint_distribution,
    validate_transformation,
    verify_no_swapping,
)
from .states import (
    chsh,
    collapse,
    deterministic_vertices,
    is_local,
    maximally_mixed,
    mix,
    nosig_vertices,
    pr_box,
    validate_state,
)
from .tensor import BoxTensor, dot, make_tensor, marginal, relabel, reorder, tensor_product
from .wiring import (
    BasicTree,
    Decomposition,
    InfeasibilityCertificate,
    Leaf,
    Node,
    counterexample_tripartite,
    enumerate_basic_arrays,
    greedy_decompose,
    lp_decompose,
    randomized_protocol,
    tree_effects,
    tree_total_array,
)

__version__ = "0.1.0"

__all__ = [
    "BoxWorldError",
    "ConditioningError",
    "GreedyBlocked",
    "InvalidMeasurementError",
    "InvalidStateError",
    "InvalidTransformationError",
    "ShapeError",
    "SignatureMismatch",
    "SizeGuardError",
    "Measurement",
    "SimulationReport",
    "TotalArray",
    "affine_certificate",
    "decompose_separable_effect",
    "effects_equivalent",
    "outcome_distribution",
    "postselect_conditional",
    "simulate_postselect",
    "total_array",
    "validate_measurement",
    "SwapScenario",
    "Transformation",
    "apply_transformation",
    "collapsed_ac_state",
    "lambda_decomposition",
    "swap_joint_distribution",
    "validate_transformation",
    "verify_no_swapping",
    "chsh",
    "collapse",
    "deterministic_vertices",
    "is_local",
    "maximally_mixed",
    "mix",
    "nosig_vertices",
    "pr_box",
    "validate_state",
    "BoxTensor",
    "dot",
    "make_tensor",
    "marginal",
    "relabel",
    "reorder",
    "tensor_product",
    "BasicTree",
    "Decomposition",
    "InfeasibilityCertificate",
    "Leaf",
    "Node",
    "counterexample_tripartite",
    "enumerate_basic_arrays",
    "greedy_decompose",
    "lp_decompose",
    "randomized_protocol",
    "tree_effects",
    "tree_total_array",
]
