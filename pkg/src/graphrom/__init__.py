"""Non-local calculus on state graphs and sparse stepwise identification of reduced-order models."""

from .basis import (
    DynamicsBasisConfig,
    OperatorBasis,
    TaylorBasisConfig,
    TaylorTerm,
    TermDescriptor,
    build_dynamics_basis,
    build_taylor_basis,
    default_derivatives,
    dynamics_term_count,
    renormalize_for_new_data,
    taylor_term_count,
)
from .calculus import (
    DerivativeCache,
    commutator,
    first_derivative,
    gram_matrices,
    nonlocal_gradient,
    partial_derivative,
    scalar_inner_product,
    unit_vector,
    vector_dot_at,
    verify_unit_norm,
)
from .errorlab import (
    Mesh1D,
    PolySpec,
    convergence_study,
    faulhaber,
    fit_gamma1,
    gamma1_limit,
    harmonic,
    nonlocal_derivative_closed,
    oracle_match_graph_derivative,
)
from .graph import GraphError, StateGraph, StateVector, build_graph, pairwise_distance
from .preprocessing import (
    DataError,
    NormalizationPair,
    TimeSeries,
    backward_euler_derivative,
    find_peaks,
    gaussian_filter,
    scale_and_normalize,
)
from .regression import (
    LossSpec,
    SolverKind,
    SolverSpec,
    StepwiseTrace,
    lasso_fit,
    loo_cross_validate,
    ols_fit,
    ridge_fit,
    stepwise_backward,
    weighted_loss,
)
from .weights import (
    Family,
    WeightSpec,
    ball_volume_surface,
    eval_weight,
    gauss_circle_count,
    gaussian_moment,
    inflection_radius,
    polynomial_moment,
    weight_scale,
)

__version__ = "0.1.0"
