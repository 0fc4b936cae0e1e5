"""Operator frames and K-operator frames on Hilbert C*-modules over M_k(C)."""

from .adjointable import (
    AdjointableOp,
    BlockOperator,
    apply,
    compose,
    douglas_check,
    is_co_isometry,
    op_norm,
    pseudo_inverse,
    surjectivity_bounds,
    ttstar_bounds,
)
from .algebra import AlgebraElement, operator_norm, positive_sqrt, positivity_check
from .frames import (
    FrameBounds,
    KFrameBounds,
    OperatorFamily,
    analysis_apply,
    frame_operator,
    k_optimal_bounds,
    norm_char_probe,
    optimal_bounds,
    synthesis_apply,
    vector_frame_bounds,
)
from .module import ModuleVector, VectorSequence, inner_product, sequence_norm

__version__ = "0.1.0"
