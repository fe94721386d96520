"""Supervised model zoo and ranking utilities."""
from .base import (
    DEFAULT_Z_MULTIPLIER,
    FittedModel,
    ForecastSeries,
    LeaderboardRow,
    ModelKind,
    ModelLeaderboard,
    ModelSpec,
    control_intervals,
    default_zoo,
    evaluate_mape,
    evaluate_mpe,
    evaluate_zoo,
    fit,
    make_forecast,
    prediction_correlation,
    rank_models,
    split_chronological,
)
from .cart import CartModel
from .chaid import ChaidModel
from .linear import LinearModel
from .neural import NeuralModel
from .phasewise import PhaseWiseModel, fit_phasewise
from .timeseries import TimeSeriesModel

__all__ = [
    "DEFAULT_Z_MULTIPLIER",
    "FittedModel",
    "ForecastSeries",
    "LeaderboardRow",
    "ModelKind",
    "ModelLeaderboard",
    "ModelSpec",
    "CartModel",
    "ChaidModel",
    "LinearModel",
    "NeuralModel",
    "PhaseWiseModel",
    "TimeSeriesModel",
    "control_intervals",
    "default_zoo",
    "evaluate_mape",
    "evaluate_mpe",
    "evaluate_zoo",
    "fit",
    "fit_phasewise",
    "make_forecast",
    "prediction_correlation",
    "rank_models",
    "split_chronological",
]
