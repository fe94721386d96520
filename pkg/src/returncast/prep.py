"""Business-rule filtering and feature transformations.

Returns of generation N are triggered by the launch (GA) of generation N+1,
so the modeling target keeps only post-trigger months while predictors keep
their full history for lagging. New receipts booked in the run-up to the
next launch are unrepresentative and get masked out.
"""
from __future__ import annotations

import numpy as np

from .core import FeatureSeries, GaCalendar, GenerationSeries, MonthInterval, Provenance
from .errors import ValidationError

RECEIPT_EXCLUSION_MONTHS = 6


def filter_post_ga(series: GenerationSeries, calendar: GaCalendar) -> GenerationSeries:
    """Mask gross returns strictly before the next generation's GA.

    Predictor channels are untouched: lagged predictors need pre-trigger
    history to be defined at post-trigger months.
    """
    trigger = calendar.ga_of_next(series.generation)
    if trigger <= series.start:
        return series
    returns = series.gross_returns.copy()
    cut = min(len(returns), trigger - series.start)
    returns[:cut] = np.nan
    if not np.isfinite(returns).any():
        raise ValidationError(
            f"{series.generation}: no post-GA returns (trigger {trigger}, series ends {series.end})"
        )
    return series.replace_channel("gross_returns", returns)


def exclude_prega_receipts(
    series: GenerationSeries, calendar: GaCalendar, months: int = RECEIPT_EXCLUSION_MONTHS
) -> GenerationSeries:
    """Mask new receipts in the window [GA(next) - months, GA(next) - 1]."""
    trigger = calendar.ga_of_next(series.generation)
    window = MonthInterval(trigger - months, trigger).intersect(series.interval)
    if window.is_empty:
        return series
    receipts = series.new_receipts.copy()
    receipts[window.start - series.start : window.end - series.start] = np.nan
    return series.replace_channel("new_receipts", receipts)


def lag(feature: FeatureSeries, k: int) -> FeatureSeries:
    """Shift a series forward: output at month m equals input at m - k."""
    if k < 0:
        raise ValidationError(f"lag must be >= 0, got {k}")
    if k == 0:
        return feature
    return feature.shift(k).with_values(
        feature.values, name=f"{feature.name}_lag_{k}", provenance=Provenance.lagged(k)
    )


def _trailing_mean_run(values: np.ndarray, w: int) -> np.ndarray:
    """Trailing mean of the last w values, shrinking window over the head."""
    csum = np.cumsum(values)
    out = np.empty_like(values)
    for i in range(len(values)):
        lo = max(0, i - w + 1)
        total = csum[i] - (csum[lo - 1] if lo > 0 else 0.0)
        out[i] = total / (i - lo + 1)
    return out


def _per_defined_run(values: np.ndarray, func) -> np.ndarray:
    """Apply func to each contiguous run of defined values; NaN elsewhere.

    A masked month resets the computation: windows never straddle a hole.
    """
    out = np.full(len(values), np.nan)
    mask = np.isfinite(values)
    i = 0
    while i < len(values):
        if not mask[i]:
            i += 1
            continue
        j = i
        while j < len(values) and mask[j]:
            j += 1
        out[i:j] = func(values[i:j])
        i = j
    return out


def moving_average(feature: FeatureSeries, w: int) -> FeatureSeries:
    """Trailing w-month mean; the first w-1 months of a run use the available prefix."""
    if w < 1:
        raise ValidationError(f"moving-average window must be >= 1, got {w}")
    if w == 1:
        return feature
    smoothed = _per_defined_run(feature.values, lambda run: _trailing_mean_run(run, w))
    return feature.with_values(
        smoothed, name=f"{feature.name}_ma_{w}", provenance=Provenance.moving_average(w)
    )


def cumulative_sum(feature: FeatureSeries) -> FeatureSeries:
    """Running sum over defined months, starting at the first defined month."""
    values = feature.values
    out = np.full(len(values), np.nan)
    total = 0.0
    started = False
    for i, v in enumerate(values):
        if np.isfinite(v):
            total += v
            started = True
            out[i] = total
        elif started:
            out[i] = np.nan
    return feature.with_values(
        out, name=f"{feature.name}_cumsum", provenance=Provenance.cumulative_sum()
    )


def map_features(
    source: list[FeatureSeries],
    required: set[str],
    mapping: dict[str, str] | None = None,
) -> list[FeatureSeries]:
    """Rename historical features so they line up with current-generation names.

    The mapping must be injective and, together with unmapped source names,
    cover every required name.
    """
    mapping = dict(mapping or {})
    targets = list(mapping.values())
    if len(set(targets)) != len(targets):
        dupes = sorted({t for t in targets if targets.count(t) > 1})
        raise ValidationError(f"feature mapping is not injective: {dupes[0]!r} mapped twice")

    renamed: list[FeatureSeries] = []
    seen: set[str] = set()
    for s in source:
        new_name = mapping.get(s.name, s.name)
        if new_name in seen:
            raise ValidationError(f"feature mapping collides on name {new_name!r}")
        seen.add(new_name)
        renamed.append(s if new_name == s.name else s.with_values(s.values, name=new_name))

    missing = sorted(set(required) - seen)
    if missing:
        raise ValidationError(f"required features not covered by source or mapping: {missing}")
    return renamed
