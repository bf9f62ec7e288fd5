"""Directional meta-attributions and pairwise interaction indices for feature attribution.

The central object is the metagame of a target feature: the attribution that
feature receives, viewed as a cooperative game over the other features. Its
Shapley values decompose each first-order attribution into a pure individual
effect and directed contributions from every other feature.
"""

__version__ = "0.1.0"

from .approx import Budget, EstimateWithError, estimate_shapley, meta_attribution_approx, shapley_mc_permutation, shapley_regression
from .coalition import (
    Coalition,
    EvaluationCache,
    FunctionGame,
    Game,
    MaskedModel,
    MobiusExpansion,
    MobiusGame,
    TableGame,
    enumerate_game,
    evaluate_masked,
    mobius_evaluate,
    mobius_transform,
)
from .exceptions import (
    CapacityError,
    EstimationError,
    GameFileError,
    InvalidArgumentError,
    MetagameError,
    MissingCoalitionError,
    UnsupportedCapabilityError,
)
from .first_order import (
    AttributionVector,
    GradientTimesInput,
    IntegratedGradients,
    ShapleyValue,
    get_method,
    grad_times_input,
    integrated_gradients,
    restricted_attribution,
    shapley_value_exact,
)
from .interactions import (
    PairIndex,
    SerialMatrix,
    fsii_via_mobius,
    integrated_hessians,
    serial_shapley,
    sop_pairwise,
    stii_pairwise,
    stii_via_mobius,
    two_shapley_via_mobius,
)
from .meta import (
    DirectionalMatrix,
    ExternalAttributionTable,
    MetaGameOracle,
    attribution_table,
    check_hierarchical_efficiency,
    meta_attribution_exact,
    meta_pair_interaction,
    symmetrize,
)
from .zoo import SymbolicModel, additive_model, product_model, random_mobius_game, random_sparse_polynomial, table1_model

__all__ = [
    "__version__",
    "Budget",
    "EstimateWithError",
    "estimate_shapley",
    "meta_attribution_approx",
    "shapley_mc_permutation",
    "shapley_regression",
    "Coalition",
    "EvaluationCache",
    "FunctionGame",
    "Game",
    "MaskedModel",
    "MobiusExpansion",
    "MobiusGame",
    "TableGame",
    "enumerate_game",
    "evaluate_masked",
    "mobius_evaluate",
    "mobius_transform",
    "CapacityError",
    "EstimationError",
    "GameFileError",
    "InvalidArgumentError",
    "MetagameError",
    "MissingCoalitionError",
    "UnsupportedCapabilityError",
    "AttributionVector",
    "GradientTimesInput",
    "IntegratedGradients",
    "ShapleyValue",
    "get_method",
    "grad_times_input",
    "integrated_gradients",
    "restricted_attribution",
    "shapley_value_exact",
    "PairIndex",
    "SerialMatrix",
    "fsii_via_mobius",
    "integrated_hessians",
    "serial_shapley",
    "sop_pairwise",
    "stii_pairwise",
    "stii_via_mobius",
    "two_shapley_via_mobius",
    "DirectionalMatrix",
    "ExternalAttributionTable",
    "MetaGameOracle",
    "attribution_table",
    "check_hierarchical_efficiency",
    "meta_attribution_exact",
    "meta_pair_interaction",
    "symmetrize",
    "SymbolicModel",
    "additive_model",
    "product_model",
    "random_mobius_game",
    "random_sparse_polynomial",
    "table1_model",
]
