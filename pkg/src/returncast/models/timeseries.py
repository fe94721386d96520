"""Exponential smoothing with a linear trend and optional additive seasonality.

Smoothing weights come from a coarse grid search minimizing in-sample
one-step-ahead squared error; no predictor columns are used, only the
target's own history, so prediction is indexed purely by month.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import FeatureMatrix
from ..errors import ValidationError
from .base import FittedModel, ModelKind, ModelSpec, register_fitter, require_rows

DEFAULT_PERIOD = 12
MIN_ROWS_NONSEASONAL = 4
WEIGHT_GRID = tuple(round(0.05 * i, 2) for i in range(1, 20))


@dataclass(frozen=True)
class _SmoothState:
    sse: float
    fitted: np.ndarray
    level: float
    trend: float
    seasonals: np.ndarray  # last `period` seasonal indices, in month order


def _run_holt(y: np.ndarray, alpha: float, beta: float) -> _SmoothState:
    n = len(y)
    fitted = np.empty(n)
    fitted[0] = y[0]
    level, trend = y[0], y[1] - y[0]
    sse = 0.0
    for t in range(1, n):
        f = level + trend
        fitted[t] = f
        err = y[t] - f
        sse += err * err
        new_level = alpha * y[t] + (1.0 - alpha) * (level + trend)
        trend = beta * (new_level - level) + (1.0 - beta) * trend
        level = new_level
    return _SmoothState(sse, fitted, level, trend, np.zeros(0))


def _run_holt_winters(
    y: np.ndarray, alpha: float, beta: float, gamma: float, period: int
) -> _SmoothState:
    n = len(y)
    fitted = np.empty(n)
    seasonal = np.empty(n)
    first = float(y[:period].mean())
    second = float(y[period : 2 * period].mean())
    level, trend = first, (second - first) / period
    seasonal[:period] = y[:period] - first
    fitted[:period] = y[:period]
    sse = 0.0
    for t in range(period, n):
        f = level + trend + seasonal[t - period]
        fitted[t] = f
        err = y[t] - f
        sse += err * err
        new_level = alpha * (y[t] - seasonal[t - period]) + (1.0 - alpha) * (level + trend)
        seasonal[t] = gamma * (y[t] - new_level) + (1.0 - gamma) * seasonal[t - period]
        trend = beta * (new_level - level) + (1.0 - beta) * trend
        level = new_level
    return _SmoothState(sse, fitted, level, trend, seasonal[n - period :].copy())


class TimeSeriesModel(FittedModel):
    """Prediction is by month index: in-sample months replay the fitted curve,
    later months extrapolate from the final level/trend/seasonal state."""

    def __init__(self, spec: ModelSpec, window, state: _SmoothState, weights, period, seasonal):
        super().__init__(spec, (), window)
        self.state = state
        self.alpha, self.beta, self.gamma = weights
        self.period = period
        self.seasonal = seasonal

    def _check_features(self, matrix: FeatureMatrix) -> None:
        pass  # history-only model; predictor columns are irrelevant

    def _forecast_ahead(self, h: int) -> float:
        value = self.state.level + h * self.state.trend
        if self.seasonal:
            value += self.state.seasonals[(h - 1) % self.period]
        return value

    def _predict_raw(self, matrix: FeatureMatrix) -> np.ndarray:
        n = len(self.state.fitted)
        out = np.empty(len(matrix))
        for row, month in enumerate(matrix.months()):
            i = month - self.training_window.start
            if i < 0:
                raise ValidationError(
                    f"{self.spec.label()}: month {month} precedes training window "
                    f"{self.training_window}"
                )
            out[row] = self.state.fitted[i] if i < n else self._forecast_ahead(i - n + 1)
        return out


def fit_timeseries(spec: ModelSpec, train: FeatureMatrix) -> TimeSeriesModel:
    seasonal = bool(spec.param("seasonal", False))
    period = int(spec.param("period", DEFAULT_PERIOD))
    require_rows(spec.kind, train, 2 * period if seasonal else MIN_ROWS_NONSEASONAL)
    y = train.y

    best: tuple[float, tuple, _SmoothState] | None = None
    if seasonal:
        for a in WEIGHT_GRID:
            for b in WEIGHT_GRID:
                for g in WEIGHT_GRID:
                    state = _run_holt_winters(y, a, b, g, period)
                    if best is None or state.sse < best[0]:
                        best = (state.sse, (a, b, g), state)
    else:
        for a in WEIGHT_GRID:
            for b in WEIGHT_GRID:
                state = _run_holt(y, a, b)
                if best is None or state.sse < best[0]:
                    best = (state.sse, (a, b, 0.0), state)

    _, weights, state = best
    return TimeSeriesModel(spec, train.interval, state, weights, period, seasonal)


register_fitter(ModelKind.TIMESERIES, fit_timeseries)
