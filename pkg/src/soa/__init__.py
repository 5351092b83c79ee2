"""Variance-based Shapley and Shapley-Owen attributions for fairness analysis.

Attributions are computed exactly for finite discrete inputs and spectrally,
from a sparse polynomial chaos expansion with a rigorous error bound, for
continuous ones.
"""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ConvergenceError,
    CoverageError,
    EvaluationError,
    InputError,
    ModelEvaluationError,
    ParseError,
    SoaError,
)
from .game import Game, shapley, shapley_owen, shapley_vector  # noqa: E402
from .model import Model, exact_game, parse  # noqa: E402
from .pce import Pce, SparseConfig, build_sparse  # noqa: E402
from .spectral import ElementaryTable, end_to_end, kappa, precompute_table, spectral_shapley_owen  # noqa: E402
from .transform import DistributionSpec, Rosenblatt  # noqa: E402

__all__ = [
    "ConvergenceError", "CoverageError", "EvaluationError", "InputError", "ModelEvaluationError",
    "ParseError", "SoaError", "Game", "shapley", "shapley_owen", "shapley_vector", "Model",
    "exact_game", "parse", "Pce", "SparseConfig", "build_sparse", "ElementaryTable", "end_to_end",
    "kappa", "precompute_table", "spectral_shapley_owen", "DistributionSpec", "Rosenblatt",
]
