"""Multi-view linear acyclic causal discovery from second-order statistics."""

__version__ = "0.1.0"

from .core import AdjacencySet, MultiViewData, validate_adjacency, validate_dag
from .criteria import CriterionKind, fc_criterion, lr_criterion, pair_score
from .estimators import FitResult, estimate_coefficients, fit_pairwise, median_effects
from .exceptions import (
    CyclicGraphError, DegenerateRowError, DimensionMismatchError, LimvamError,
    NoConvergenceWarning, NonPositiveDefiniteError, ParseError, SampleSizeWarning,
    ShapeMismatchError, SingularSystemError, UnstableTripleError, ZeroDiagonalError,
    ZeroVarianceError,
)
from .ica_limvam import IcaFitResult, fit_ica
from .metrics import b_error, ordering_error, spearman
from .ordering import causal_order, score_matrix
from .shared_ica import ShicaResult, fit_shica
from .synth import GroundTruth, SharedDisturbanceParams, check_assumptions, simulate

__all__ = [
    "AdjacencySet", "MultiViewData", "validate_adjacency", "validate_dag",
    "CriterionKind", "fc_criterion", "lr_criterion", "pair_score",
    "FitResult", "estimate_coefficients", "fit_pairwise", "median_effects",
    "CyclicGraphError", "DegenerateRowError", "DimensionMismatchError", "LimvamError",
    "NoConvergenceWarning", "NonPositiveDefiniteError", "ParseError", "SampleSizeWarning",
    "ShapeMismatchError", "SingularSystemError", "UnstableTripleError", "ZeroDiagonalError",
    "ZeroVarianceError",
    "IcaFitResult", "fit_ica", "b_error", "ordering_error", "spearman",
    "causal_order", "score_matrix", "ShicaResult", "fit_shica",
    "GroundTruth", "SharedDisturbanceParams", "check_assumptions", "simulate",
]
