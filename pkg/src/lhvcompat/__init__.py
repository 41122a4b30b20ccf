"""Hybrid-order Bell inequalities, LHV criteria and white-noise visibilities for Dicke-state mixtures."""

__version__ = "0.1.0"

from .bell import (
    BellExpression,
    CorrelationTerm,
    DeterministicStrategy,
    build_ineq5,
    chsh,
    evaluate_deterministic,
    evaluate_quantum,
    lhv_bound,
    permutation_sum,
)
from .correlations import contract, full_tensor, reconstruct, sector, tensor_component
from .exceptions import LPError, ParameterError, SizeError
from .polytope import (
    Behavior,
    LinearProgram,
    critical_visibility,
    deterministic_behaviors,
    lp_solve,
    quantum_behavior,
    visibility_for_settings,
)
from .seesaw import effective_vector, paper_settings, seesaw_maximize
from .states import (
    DickeSpec,
    dicke_mixture,
    dicke_state,
    flip_all,
    mix_with_white_noise,
    partial_trace,
    white_noise,
)
from .wwzb import closed_form_C2, maximize_C_k, sum_squares_in_planes
