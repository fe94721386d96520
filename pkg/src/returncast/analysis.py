"""Statistical analysis: lifecycle phases, genealogy, correlation, seasonality.

The forecasting approach leans on structure rather than volume: a returns
curve has three GA-anchored phases, the best prior generation is found by
correlating GA-aligned histories, and only strongly correlated predictors
are allowed into the models.
"""
from __future__ import annotations

import enum
import logging
from dataclasses import dataclass

import numpy as np

from .core import (
    FeatureSeries,
    GaCalendar,
    GenerationId,
    GenerationSeries,
    MonthIndex,
    MonthInterval,
)
from .errors import NumericError, ValidationError

log = logging.getLogger(__name__)

DEFAULT_RAMP_UP_MONTHS = 15
DEFAULT_PLATEAU_MONTHS = 10
DEFAULT_SEASONAL_PERIOD = 12
MIN_GENEALOGY_OVERLAP = 6
MIN_CORRELATION_POINTS = 3


# ---------------------------------------------------------------- lifecycle


@dataclass(frozen=True)
class LifecyclePhases:
    """GA-anchored partition of a returns series into its three phases."""

    ramp_up: MonthInterval
    plateau: MonthInterval
    ramp_down: MonthInterval

    def __post_init__(self):
        if self.ramp_up.end != self.plateau.start or self.plateau.end != self.ramp_down.start:
            raise ValidationError("lifecycle phases must be contiguous and ordered")

    def phase_of(self, month: MonthIndex) -> str | None:
        for name in ("ramp_up", "plateau", "ramp_down"):
            if month in getattr(self, name):
                return name
        return None

    def __str__(self) -> str:
        return f"ramp_up {self.ramp_up}, plateau {self.plateau}, ramp_down {self.ramp_down}"


def segment_lifecycle(
    returns: FeatureSeries,
    calendar: GaCalendar,
    generation: GenerationId,
    ramp_up_months: int = DEFAULT_RAMP_UP_MONTHS,
    plateau_months: int = DEFAULT_PLATEAU_MONTHS,
) -> LifecyclePhases:
    """Split the post-trigger domain into ramp-up / plateau / ramp-down.

    Ramp-up spans a fixed number of months from the trigger (GA of the next
    generation). Ramp-down starts at GA two generations out when that launch
    is on the calendar, otherwise after a default plateau length. Phases are
    clipped to the series and stay contiguous even when some are empty.
    """
    trigger = calendar.ga_of_next(generation)
    end = returns.end
    domain_start = max(trigger, returns.start)

    nxt = calendar.successor(generation)
    after = calendar.successor(nxt.generation) if nxt is not None else None
    down_start = after.ga_month if after is not None else trigger + (ramp_up_months + plateau_months)

    ramp_up_end = min(trigger + ramp_up_months, end)
    plateau_end = min(max(down_start, ramp_up_end), end)
    return LifecyclePhases(
        ramp_up=MonthInterval(domain_start, ramp_up_end),
        plateau=MonthInterval(ramp_up_end, plateau_end),
        ramp_down=MonthInterval(plateau_end, end),
    )


# -------------------------------------------------------------- correlation


class Strength(enum.Enum):
    WEAK = "Weak"
    MEDIUM = "Medium"
    STRONG = "Strong"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class StrengthThresholds:
    """|r| cut points: below `medium_at` is Weak, at/above `strong_at` is Strong."""

    medium_at: float = 0.15
    strong_at: float = 0.186

    def __post_init__(self):
        if not 0 < self.medium_at < self.strong_at <= 1:
            raise ValidationError(
                f"need 0 < medium_at < strong_at <= 1, got {self.medium_at}, {self.strong_at}"
            )


DEFAULT_THRESHOLDS = StrengthThresholds()


def _paired_defined(a: FeatureSeries, b: FeatureSeries) -> tuple[np.ndarray, np.ndarray]:
    window = a.interval.intersect(b.interval)
    if window.is_empty:
        return np.empty(0), np.empty(0)
    av = a.restrict(window).values
    bv = b.restrict(window).values
    mask = np.isfinite(av) & np.isfinite(bv)
    return av[mask], bv[mask]


def _pearson_arrays(x: np.ndarray, y: np.ndarray, what: str) -> float:
    if len(x) < MIN_CORRELATION_POINTS:
        raise ValidationError(
            f"{what}: need at least {MIN_CORRELATION_POINTS} paired months, got {len(x)}"
        )
    xc = x - x.mean()
    yc = y - y.mean()
    sx = float(np.sqrt((xc * xc).sum()))
    sy = float(np.sqrt((yc * yc).sum()))
    if sx == 0.0 or sy == 0.0:
        raise NumericError(f"{what}: degenerate feature (zero variance on overlap)")
    return float((xc * yc).sum() / (sx * sy))


def pearson(a: FeatureSeries, b: FeatureSeries) -> float:
    """Pearson correlation over the defined overlap of two series."""
    x, y = _paired_defined(a, b)
    return _pearson_arrays(x, y, f"pearson({a.name}, {b.name})")


def classify_strength(r: float, thresholds: StrengthThresholds = DEFAULT_THRESHOLDS) -> Strength:
    """Label a correlation by magnitude; sign is ignored."""
    magnitude = abs(float(r))
    if magnitude > 1.0 + 1e-12:
        raise ValidationError(f"correlation out of range: {r}")
    if magnitude < thresholds.medium_at:
        return Strength.WEAK
    if magnitude < thresholds.strong_at:
        return Strength.MEDIUM
    return Strength.STRONG


@dataclass(frozen=True)
class CorrelationEntry:
    predictor: str
    target: str
    pearson_r: float
    strength: Strength


@dataclass(frozen=True)
class CorrelationTable:
    rows: tuple[CorrelationEntry, ...]

    def __len__(self) -> int:
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)

    def entry(self, predictor: str) -> CorrelationEntry:
        for row in self.rows:
            if row.predictor == predictor:
                return row
        raise KeyError(predictor)

    def strong(self) -> tuple[CorrelationEntry, ...]:
        return tuple(r for r in self.rows if r.strength is Strength.STRONG)


def build_correlation_table(
    predictors: list[FeatureSeries],
    target: FeatureSeries,
    thresholds: StrengthThresholds = DEFAULT_THRESHOLDS,
) -> CorrelationTable:
    """Correlate each predictor with the target over their defined overlap.

    Predictors that are degenerate on the overlap (constant, or too few
    paired months) cannot be modeled and are dropped with a warning.
    """
    rows = []
    for p in sorted(predictors, key=lambda s: s.name):
        try:
            r = pearson(p, target)
        except (NumericError, ValidationError) as exc:
            log.warning("dropping predictor %s: %s", p.name, exc)
            continue
        rows.append(
            CorrelationEntry(
                predictor=p.name,
                target=target.name,
                pearson_r=r,
                strength=classify_strength(r, thresholds),
            )
        )
    return CorrelationTable(rows=tuple(rows))


def select_predictors(table: CorrelationTable) -> set[str]:
    """Keep only strongly correlated predictors; redundancy is the models' problem."""
    selected = {row.predictor for row in table.strong()}
    if not selected:
        log.warning("no strongly correlated predictors; selection is empty")
    return selected


# ---------------------------------------------------------------- genealogy


def _trigger_aligned(
    series: GenerationSeries, calendar: GaCalendar, channel: str
) -> FeatureSeries:
    """Channel re-anchored so that month 0 is the generation's returns trigger."""
    trigger = calendar.ga_of_next(series.generation)
    return series.feature(channel).shift(-trigger.value)


def _aligned_pairs(
    a: GenerationSeries,
    b: GenerationSeries,
    calendar: GaCalendar,
    channel: str,
    post_trigger_only: bool,
) -> tuple[np.ndarray, np.ndarray]:
    fa = _trigger_aligned(a, calendar, channel)
    fb = _trigger_aligned(b, calendar, channel)
    if post_trigger_only:
        horizon = MonthInterval(MonthIndex(0), MonthIndex(10**6))
        fa, fb = fa.restrict(horizon), fb.restrict(horizon)
    return _paired_defined(fa, fb)


def genealogy_match(
    current: GenerationSeries,
    candidates: list[GenerationSeries],
    calendar: GaCalendar,
    min_overlap: int = MIN_GENEALOGY_OVERLAP,
) -> GenerationId:
    """Pick the prior generation whose GA-aligned history best matches `current`.

    Score = mean of the sales correlation (full aligned overlap) and the
    returns correlation (post-trigger overlap). Ties go to the most recent
    candidate by GA month.
    """
    if not candidates:
        raise ValidationError("genealogy match needs at least one candidate")
    scored: list[tuple[float, int, GenerationId]] = []
    for cand in candidates:
        if cand.generation == current.generation:
            continue
        try:
            ret_x, ret_y = _aligned_pairs(current, cand, calendar, "gross_returns", True)
            if len(ret_x) < min_overlap:
                log.warning(
                    "genealogy: %s has only %d aligned return months (need %d)",
                    cand.generation, len(ret_x), min_overlap,
                )
                continue
            sal_x, sal_y = _aligned_pairs(current, cand, calendar, "shipments", False)
            r_returns = _pearson_arrays(ret_x, ret_y, f"returns vs {cand.generation}")
            r_sales = _pearson_arrays(sal_x, sal_y, f"sales vs {cand.generation}")
        except (NumericError, ValidationError) as exc:
            log.warning("genealogy: skipping %s: %s", cand.generation, exc)
            continue
        score = (r_returns + r_sales) / 2.0
        ga = calendar.ga_month(cand.generation)
        scored.append((score, ga.value, cand.generation))
    if not scored:
        raise ValidationError(
            f"no candidate generation has {min_overlap}+ months of aligned overlap "
            f"with {current.generation}"
        )
    scored.sort(key=lambda t: (t[0], t[1]))
    best = scored[-1]
    log.info("genealogy: matched %s to %s (score %.4f)", current.generation, best[2], best[0])
    return best[2]


# -------------------------------------------------------------- seasonality


@dataclass(frozen=True)
class SeasonalDecomposition:
    """Additive split value = trend + seasonal + residual.

    Trend and residual are undefined (NaN) over the half-window edges where
    the centered average has no support.
    """

    trend: FeatureSeries
    seasonal: FeatureSeries
    residual: FeatureSeries
    period: int

    def seasonal_at(self, month: MonthIndex) -> float:
        """Seasonal index for a month, extrapolated by periodicity."""
        offset = (month.value - self.seasonal.start.value) % self.period
        return float(self.seasonal.values[offset])


def _centered_trend(values: np.ndarray, period: int) -> np.ndarray:
    n = len(values)
    trend = np.full(n, np.nan)
    if period % 2 == 1:
        half = period // 2
        for i in range(half, n - half):
            trend[i] = values[i - half : i + half + 1].mean()
    else:
        half = period // 2
        # even period: average of the two straddling windows, so that the
        # window center lands exactly on month i
        for i in range(half, n - half):
            window = values[i - half : i + half + 1].copy()
            window[0] *= 0.5
            window[-1] *= 0.5
            trend[i] = window.sum() / period
    return trend


def decompose_seasonal(
    feature: FeatureSeries, period: int = DEFAULT_SEASONAL_PERIOD
) -> SeasonalDecomposition:
    """Classical additive decomposition with a centered moving-average trend."""
    if period < 2:
        raise ValidationError(f"seasonal period must be >= 2, got {period}")
    values = feature.values
    if len(values) < 2 * period:
        raise ValidationError(
            f"{feature.name}: need >= {2 * period} months for period {period}, have {len(values)}"
        )
    if not feature.defined_mask.all():
        raise ValidationError(f"{feature.name}: seasonal decomposition needs a gap-free series")

    trend = _centered_trend(values, period)
    detrended = values - trend

    # positions keyed to absolute month so January is position 0 for period 12
    positions = (feature.start.value + np.arange(len(values))) % period
    indices = np.zeros(period)
    for pos in range(period):
        at = detrended[(positions == pos) & np.isfinite(detrended)]
        indices[pos] = at.mean() if len(at) else 0.0
    indices -= indices.mean()  # a full cycle of seasonal effects cancels out

    seasonal = indices[positions]
    residual = values - trend - seasonal

    def part(name: str, vals: np.ndarray) -> FeatureSeries:
        return FeatureSeries(name=f"{feature.name}_{name}", start=feature.start, values=vals)

    return SeasonalDecomposition(
        trend=part("trend", trend),
        seasonal=part("seasonal", seasonal),
        residual=part("residual", residual),
        period=period,
    )


# ------------------------------------------------------------ causal flags


@dataclass(frozen=True)
class CausalFactorFlags:
    """Per-generation event markers that annotate (not drive) the forecast.

    GA months come from the calendar; the rest are manual flags for events
    with no operational definition (recorded for the report, optionally used
    as exclusion masks).
    """

    generation: GenerationId
    ga_next: MonthIndex | None
    ga_next2: MonthIndex | None
    fire_sale: frozenset[MonthIndex] = frozenset()
    economic_event: frozenset[MonthIndex] = frozenset()
    engineering_change: frozenset[MonthIndex] = frozenset()
    cross_generation_part: bool = False

    @classmethod
    def derive(
        cls,
        generation: GenerationId,
        calendar: GaCalendar,
        fire_sale: frozenset[MonthIndex] = frozenset(),
        economic_event: frozenset[MonthIndex] = frozenset(),
        engineering_change: frozenset[MonthIndex] = frozenset(),
        cross_generation_part: bool = False,
    ) -> "CausalFactorFlags":
        nxt = calendar.successor(generation)
        after = calendar.successor(nxt.generation) if nxt is not None else None
        return cls(
            generation=generation,
            ga_next=nxt.ga_month if nxt is not None else None,
            ga_next2=after.ga_month if after is not None else None,
            fire_sale=frozenset(fire_sale),
            economic_event=frozenset(economic_event),
            engineering_change=frozenset(engineering_change),
            cross_generation_part=bool(cross_generation_part),
        )

    def annotations(self, month: MonthIndex) -> tuple[str, ...]:
        """Flag names active at a month, in stable order for reporting."""
        out = []
        if self.ga_next == month:
            out.append("ga_next")
        if self.ga_next2 == month:
            out.append("ga_next2")
        if month in self.fire_sale:
            out.append("fire_sale")
        if month in self.economic_event:
            out.append("economic_event")
        if month in self.engineering_change:
            out.append("engineering_change")
        return tuple(out)

    def exclusion_mask(self, interval: MonthInterval) -> np.ndarray:
        """True at months flagged with a manual event inside `interval`."""
        manual = self.fire_sale | self.economic_event | self.engineering_change
        return np.array([m in manual for m in interval], dtype=bool)
