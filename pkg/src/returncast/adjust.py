"""Rule-based corrections applied to a forecast before it is reported.

Models extrapolate; these rules anchor the result to reality: recent actuals
rescale a drifting forecast, known seasonality is layered in (dampened while
the generation is still active), and months before the returns onset are
zeroed because hardware cannot come back before it has aged.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import FeatureSeries, GaCalendar, GenerationId, MonthIndex
from .errors import MissingGaError
from .analysis import SeasonalDecomposition
from .ewa import deviation, pad
from .models import ForecastSeries

log = logging.getLogger(__name__)

DEFAULT_PAD_THRESHOLD = 10.0
DEFAULT_FACTOR_BOUNDS = (0.5, 2.0)
DEFAULT_SEASONAL_DAMP = 0.8
DEFAULT_ONSET_MONTHS = 12
DEFAULT_LOOKBACK = 3


@dataclass(frozen=True)
class AdjustmentNote:
    """One applied rule, itemized for the run report."""

    rule: str
    factor: Optional[float]
    months: tuple[MonthIndex, ...]

    def describe(self) -> str:
        span = f"{self.months[0]}..{self.months[-1]}" if self.months else "-"
        if self.factor is None:
            return f"{self.rule} [{span}]"
        return f"{self.rule} x{self.factor:.4f} [{span}]"


@dataclass(frozen=True)
class AdjustResult:
    forecast: ForecastSeries
    notes: tuple[AdjustmentNote, ...]

    def describe(self) -> str:
        return "; ".join(n.describe() for n in self.notes) if self.notes else "none"


def _rebuild(forecast: ForecastSeries, best, lci, uci) -> ForecastSeries:
    return ForecastSeries(
        start=forecast.start,
        best_fit=best,
        lci=lci,
        uci=uci,
        model=forecast.model,
        test_mape=forecast.test_mape,
        test_correlation=forecast.test_correlation,
    )


def _lookback_months(
    forecast: ForecastSeries, actuals: FeatureSeries, decision_point: MonthIndex, lookback: int
) -> list[MonthIndex]:
    """Last `lookback` months before the decision point with both an actual
    and a forecast value."""
    window = forecast.interval.intersect(actuals.interval)
    months = [
        m
        for m in window
        if m < decision_point and np.isfinite(actuals.value_at(m))
    ]
    return months[-lookback:]


def adjust_forecast(
    forecast: ForecastSeries,
    actuals: Optional[FeatureSeries],
    calendar: GaCalendar,
    generation: GenerationId,
    seasonal: Optional[SeasonalDecomposition] = None,
    decision_point: Optional[MonthIndex] = None,
    lookback: int = DEFAULT_LOOKBACK,
    pad_threshold: float = DEFAULT_PAD_THRESHOLD,
    factor_bounds: tuple[float, float] = DEFAULT_FACTOR_BOUNDS,
    seasonal_damp: float = DEFAULT_SEASONAL_DAMP,
    onset_months: int = DEFAULT_ONSET_MONTHS,
) -> AdjustResult:
    """Apply the post-forecast rules in order; every change is itemized.

    The rescale multiplies the entire series (not only future months) so a
    rerun with the same actuals computes a factor of 1 and changes nothing.
    Seasonal injection is a one-shot enrichment: pass the decomposition only
    on the first application.
    """
    best = forecast.best_fit.copy()
    lci = forecast.lci.copy()
    uci = forecast.uci.copy()
    notes: list[AdjustmentNote] = []

    if decision_point is None:
        decision_point = actuals.end if actuals is not None else forecast.start

    # rules 1/2: recent mean absolute deviation beyond threshold -> rescale
    months = (
        _lookback_months(forecast, actuals, decision_point, lookback)
        if actuals is not None
        else []
    )
    if len(months) < lookback:
        log.warning(
            "adjust: only %d of %d lookback months available; skipping rescale",
            len(months), lookback,
        )
    else:
        a = np.array([actuals.value_at(m) for m in months])
        f = np.array([forecast.value_at(m) for m in months])
        if (a == 0.0).all() or f.sum() == 0.0:
            log.warning("adjust: degenerate lookback window; skipping rescale")
        else:
            _, absolute = pad(deviation(a, f), a)
            mean_abs_pad = float(np.nanmean(absolute))
            if mean_abs_pad > pad_threshold:
                raw = float(a.sum() / f.sum())
                factor = float(np.clip(raw, *factor_bounds))
                best *= factor
                lci *= factor
                uci *= factor
                notes.append(
                    AdjustmentNote("rescale", factor, tuple(forecast.months()))
                )
                log.info(
                    "adjust: mean |pad| %.1f%% over %s..%s, rescaling by %.4f",
                    mean_abs_pad, months[0], months[-1], factor,
                )

    # rule 3: layer in seasonality, dampened while the generation is active
    if seasonal is not None:
        nxt = calendar.successor(generation)
        after = calendar.successor(nxt.generation) if nxt is not None else None
        active = after is None or after.ga_month >= decision_point
        damp = seasonal_damp if active else 1.0
        component = np.array([seasonal.seasonal_at(m) * damp for m in forecast.months()])
        best = np.maximum(best + component, 0.0)
        lci = np.maximum(lci + component, 0.0)
        uci = np.maximum(uci + component, 0.0)
        notes.append(AdjustmentNote("seasonal", damp, tuple(forecast.months())))

    # rule 4: no returns before the onset lag after this generation's own GA
    try:
        onset = calendar.ga_month(generation) + onset_months
    except MissingGaError:
        onset = None
        log.warning("adjust: %s has no GA entry; onset clamp skipped", generation)
    if onset is not None and onset > forecast.start:
        cut = min(len(best), onset - forecast.start)
        if cut > 0 and ((best[:cut] != 0.0).any() or (uci[:cut] != 0.0).any()):
            zeroed = [forecast.start + i for i in range(cut)]
            best[:cut] = 0.0
            lci[:cut] = 0.0
            uci[:cut] = 0.0
            notes.append(AdjustmentNote("zero_before_onset", None, tuple(zeroed)))

    return AdjustResult(forecast=_rebuild(forecast, best, lci, uci), notes=tuple(notes))
