"""End-to-end planning cycle: history in, validated forecast out.

Stage order: pick the donor generation by genealogy, clean and rescale its
history, build lag/average transforms, keep predictors that are strongly
correlated AND observable over the horizon, race the model zoo on a 70/30
chronological split, forecast with the winner, apply adjustment rules, then
validate the previous cycle's forecast (EWA) and persist the record.

Cross-generation transfer works on a shifted time axis: donor and current
months are both rebased so month 0 is each generation's returns trigger,
letting the donor's fitted lifecycle be replayed at the current
generation's age.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .analysis import (
    CorrelationTable,
    LifecyclePhases,
    SeasonalDecomposition,
    build_correlation_table,
    decompose_seasonal,
    genealogy_match,
    segment_lifecycle,
    select_predictors,
)
from .adjust import AdjustResult, adjust_forecast
from .config import AppConfig
from .core import (
    FeatureMatrix,
    FeatureSeries,
    GaCalendar,
    GenerationId,
    GenerationSeries,
    MonthIndex,
    MonthInterval,
    align,
)
from .cycle_store import CycleRecord, CycleStore, PlannerChoice
from .errors import NumericError, ValidationError
from .ewa import EwaInput, EwaReport, run_ewa
from .models import (
    FittedModel,
    ForecastSeries,
    LeaderboardRow,
    ModelKind,
    ModelLeaderboard,
    ModelSpec,
    control_intervals,
    evaluate_mape,
    evaluate_zoo,
    fit,
    fit_phasewise,
    prediction_correlation,
    rank_models,
    split_chronological,
)
from .prep import cumulative_sum, exclude_prega_receipts, filter_post_ga, lag, moving_average
from .preprocess import OutlierReport, detect_outliers, normalization_factor, repair_outliers

log = logging.getLogger(__name__)

PREDICTOR_CHANNELS = ("shipments", "upgrades", "new_receipts")


@dataclass(frozen=True)
class CycleOutcome:
    """Everything one cycle produced, for reporting and persistence."""

    generation: GenerationId
    cycle_month: MonthIndex
    donor: GenerationId
    outliers: tuple[OutlierReport, ...]
    normalization: float
    correlations: CorrelationTable
    selected: tuple[str, ...]
    phases: LifecyclePhases
    leaderboard: ModelLeaderboard
    forecast_raw: ForecastSeries
    forecast: ForecastSeries
    adjustments: AdjustResult
    actuals: FeatureSeries
    previous_forecast: Optional[ForecastSeries]
    ewa: EwaReport
    record: CycleRecord


# ------------------------------------------------------------------ stages


def visible_history(
    history: list[GenerationSeries], cycle_month: MonthIndex
) -> list[GenerationSeries]:
    """What a cycle run at `cycle_month` is allowed to see."""
    out = []
    for s in history:
        if s.start >= cycle_month:
            continue
        out.append(s.truncate(cycle_month))
    if not out:
        raise ValidationError(f"no history visible before {cycle_month}")
    return out


def donor_candidates(
    visible: list[GenerationSeries],
    generation: GenerationId,
    calendar: GaCalendar,
) -> list[GenerationSeries]:
    """Generations usable as history donors: not the current one, and with
    their own returns trigger (a successor launch) on the calendar."""
    candidates = []
    for s in visible:
        if s.generation.name == generation.name:
            continue
        try:
            calendar.ga_of_next(s.generation)
        except ValidationError:
            continue
        candidates.append(s)
    return candidates


def prepare_generation(
    series: GenerationSeries,
    calendar: GaCalendar,
    config: AppConfig,
    repair: bool,
) -> tuple[GenerationSeries, tuple[OutlierReport, ...]]:
    """Outlier repair (donor only), then the business-rule masks."""
    reports: list[OutlierReport] = []
    if repair:
        for channel in ("gross_returns", "new_receipts"):
            feature = series.feature(channel)
            report = detect_outliers(feature, config.preprocess.sigma_multiplier)
            if report.count:
                log.info("%s: repairing %d outlier months in %s",
                         series.generation, report.count, channel)
                repaired = repair_outliers(feature, report, config.preprocess.smoothing_window)
                series = series.replace_channel(channel, repaired.values)
            reports.append(report)
    series = filter_post_ga(series, calendar)
    series = exclude_prega_receipts(series, calendar, config.prep.receipt_exclusion_months)
    return series, tuple(reports)


def normalize_to_current(
    donor: GenerationSeries,
    current: GenerationSeries,
    calendar: GaCalendar,
) -> tuple[GenerationSeries, float]:
    """Scale every donor channel by one volume factor.

    The factor comes from shipments aligned at each generation's own GA:
    shipments are fully observed long before returns exist. One shared
    factor keeps the donor's internal channel ratios intact.
    """
    ga_donor = calendar.ga_month(donor.generation)
    ga_current = calendar.ga_month(current.generation)
    donor_ship = donor.feature("shipments").shift(-ga_donor.value)
    current_ship = current.feature("shipments").shift(-ga_current.value)
    window = donor_ship.interval.intersect(current_ship.interval)
    try:
        factor = normalization_factor(current_ship, donor_ship, window, window)
    except NumericError as exc:
        log.warning("normalization skipped (%s); factor 1.0", exc)
        return donor, 1.0
    scaled = donor
    for channel in ("shipments", "upgrades", "new_receipts", "gross_returns"):
        scaled = scaled.replace_channel(channel, scaled.channel(channel) * factor)
    return scaled, factor


def build_predictors(series: GenerationSeries, config: AppConfig) -> list[FeatureSeries]:
    """Raw channels plus every configured lag, moving average, and running sum."""
    out: list[FeatureSeries] = []
    for channel in PREDICTOR_CHANNELS:
        raw = series.feature(channel)
        out.append(raw)
        for k in config.prep.lags:
            out.append(lag(raw, k))
        for w in config.prep.moving_averages:
            out.append(moving_average(raw, w))
        out.append(cumulative_sum(raw))
    return out


def _rebase(feature: FeatureSeries, trigger: MonthIndex) -> FeatureSeries:
    return feature.shift(-trigger.value)


def rebase_phases(phases: LifecyclePhases, trigger: MonthIndex) -> LifecyclePhases:
    def move(iv: MonthInterval) -> MonthInterval:
        return MonthInterval(iv.start - trigger.value, iv.end - trigger.value)

    return LifecyclePhases(
        ramp_up=move(phases.ramp_up),
        plateau=move(phases.plateau),
        ramp_down=move(phases.ramp_down),
    )


def horizon_available(
    predictors: list[FeatureSeries], horizon: MonthInterval
) -> list[FeatureSeries]:
    """Predictors with a defined value at every horizon month."""
    out = []
    for p in predictors:
        window = p.restrict(horizon)
        if len(window) == len(horizon) and window.defined_mask.all():
            out.append(p)
    return out


def coverage_greedy(
    predictors: list[FeatureSeries], target: FeatureSeries, min_rows: int
) -> list[FeatureSeries]:
    """Admit predictors widest-overlap first while the aligned matrix stays
    at or above the row floor."""
    floor = min(min_rows, align([], target).n_rows)

    def overlap(p: FeatureSeries) -> int:
        return align([p], target).n_rows

    chosen: list[FeatureSeries] = []
    for p in sorted(predictors, key=lambda s: (-overlap(s), s.name)):
        if align(chosen + [p], target).n_rows >= floor:
            chosen.append(p)
    return chosen


def _zoo(config: AppConfig) -> list[ModelSpec]:
    m = config.models
    zoo = [
        ModelSpec(ModelKind.LINEAR),
        ModelSpec(ModelKind.CART, {"min_leaf": m.cart_min_leaf, "max_depth": m.cart_max_depth}),
        ModelSpec(
            ModelKind.CHAID,
            {
                "min_segment": m.chaid_min_segment,
                "merge_alpha": m.chaid_merge_alpha,
                "split_alpha": m.chaid_split_alpha,
            },
        ),
        ModelSpec(
            ModelKind.NEURAL,
            {
                "hidden_units": m.nn_hidden_units,
                "epochs": m.nn_epochs,
                "learning_rate": m.nn_learning_rate,
            },
            seed=m.seed,
        ),
        ModelSpec(ModelKind.TIMESERIES, {"seasonal": m.ts_seasonal, "period": m.ts_period}),
    ]
    if m.include_polynomial:
        zoo.append(ModelSpec(ModelKind.POLYNOMIAL))
    return zoo


def select_for_model(
    table: CorrelationTable, candidates: list[FeatureSeries], cap: int
) -> list[FeatureSeries]:
    """Strong predictors, best first, truncated to the cap; top-correlated
    fallback when nothing clears the bar."""
    strong = select_predictors(table)
    rows = [r for r in table if r.predictor in strong]
    if not rows:
        rows = sorted(table, key=lambda r: -abs(r.pearson_r))[:3]
        if rows:
            log.warning(
                "no strong predictors; falling back to top %d by |r|", len(rows)
            )
    rows = sorted(rows, key=lambda r: (-abs(r.pearson_r), r.predictor))[:cap]
    names = {r.predictor for r in rows}
    return [p for p in candidates if p.name in names]


# --------------------------------------------------------------- the cycle


def run_cycle(
    history: list[GenerationSeries],
    calendar: GaCalendar,
    generation: GenerationId | str,
    cycle_month: MonthIndex,
    store: Optional[CycleStore] = None,
    config: AppConfig = AppConfig(),
    choice: PlannerChoice = PlannerChoice.BEST_FIT,
    persist: bool = True,
) -> CycleOutcome:
    """One complete monthly planning cycle for one generation.

    With `persist` off the store is only read (for the previous cycle's
    record), letting inspection stages re-run without side effects.
    """
    if isinstance(generation, str):
        generation = calendar.resolve(generation)
    trigger = calendar.ga_of_next(generation)

    visible = visible_history(history, cycle_month)
    by_name = {s.generation.name: s for s in visible}
    if generation.name not in by_name:
        raise ValidationError(f"no visible history for {generation.name} before {cycle_month}")
    current_raw = by_name[generation.name]

    candidates = donor_candidates(visible, generation, calendar)
    donor_id = genealogy_match(
        current_raw, candidates, calendar, config.analysis.min_genealogy_overlap
    )
    donor_raw = by_name[donor_id.name]

    current, _ = prepare_generation(current_raw, calendar, config, repair=False)
    donor, outlier_reports = prepare_generation(donor_raw, calendar, config, repair=True)
    donor, norm_factor = normalize_to_current(donor, current, calendar)

    donor_trigger = calendar.ga_of_next(donor_id)
    phases = segment_lifecycle(
        donor.feature("gross_returns"),
        calendar,
        donor_id,
        config.analysis.ramp_up_months,
        config.analysis.plateau_months,
    )

    # transforms, rebased so month 0 is each generation's trigger
    donor_target = _rebase(donor.feature("gross_returns"), donor_trigger)
    donor_preds = [_rebase(p, donor_trigger) for p in build_predictors(donor, config)]
    current_preds = [_rebase(p, trigger) for p in build_predictors(current, config)]

    horizon = MonthInterval(cycle_month, cycle_month + config.pipeline.horizon_months)
    horizon_rel = MonthInterval(horizon.start - trigger.value, horizon.end - trigger.value)

    available_names = {p.name for p in horizon_available(current_preds, horizon_rel)}
    usable = [p for p in donor_preds if p.name in available_names]
    if not usable:
        raise ValidationError(
            f"no predictor is observable across the horizon {horizon}; "
            "shorten the horizon or extend the lag set"
        )
    usable = coverage_greedy(usable, donor_target, config.pipeline.min_matrix_rows)

    table = build_correlation_table(usable, donor_target, config.analysis.strength)
    if not len(table):
        raise ValidationError("every usable predictor is degenerate on the donor history")
    chosen = select_for_model(table, usable, config.pipeline.max_predictors)

    matrix = align(chosen, donor_target)
    if matrix.n_rows < 6:
        raise ValidationError(
            f"aligned donor matrix has only {matrix.n_rows} rows; not enough to train"
        )
    train, test = split_chronological(matrix, config.models.train_fraction)
    leaderboard, fitted = evaluate_zoo(_zoo(config), train, test, config.models.z_multiplier)
    rel_phases = rebase_phases(phases, donor_trigger)
    if config.models.include_phasewise:
        leaderboard, fitted = _add_phasewise(
            leaderboard, fitted, train, test, rel_phases, config
        )

    # horizon predictors: current generation's features at future months
    horizon_matrix = FeatureMatrix(
        start=horizon_rel.start,
        target=None,
        predictors=tuple(
            p.restrict(horizon_rel) for p in current_preds if p.name in matrix.predictor_names
        ),
    )

    forecast_raw = _winner_forecast(
        leaderboard, fitted, matrix, test, horizon_matrix, horizon, rel_phases, config
    )

    seasonal = _donor_seasonality(donor, config)
    adjusted = adjust_forecast(
        forecast_raw,
        actuals=current.feature("gross_returns"),
        calendar=calendar,
        generation=generation,
        seasonal=seasonal,
        decision_point=cycle_month,
        lookback=config.ewa.lookback_months,
        pad_threshold=config.adjust.pad_threshold,
        factor_bounds=(config.adjust.factor_min, config.adjust.factor_max),
        seasonal_damp=config.adjust.seasonal_damp,
        onset_months=config.adjust.onset_months,
    )

    actuals = current.feature("gross_returns")
    previous = store.load_previous_cycle(generation, cycle_month) if store else None
    ewa_report = run_ewa(
        EwaInput(
            cycle_month=cycle_month,
            actuals=actuals,
            current_forecast=adjusted.forecast,
            previous_forecast=previous.forecast if previous else None,
            planner_choice=previous.planner_selected if previous else None,
            planner_series=(
                FeatureSeries(
                    name="planner_selected",
                    start=previous.forecast.start,
                    values=previous.selected_series,
                )
                if previous
                else None
            ),
        ),
        config.ewa,
    )

    record = CycleRecord.create(
        cycle_month=cycle_month,
        generation=generation,
        forecast=adjusted.forecast,
        choice=choice,
        realized_actuals=actuals,
        ewa=ewa_report.to_dict(),
    )
    if store is not None and persist:
        store.store_cycle(record)

    return CycleOutcome(
        generation=generation,
        cycle_month=cycle_month,
        donor=donor_id,
        outliers=outlier_reports,
        normalization=norm_factor,
        correlations=table,
        selected=tuple(p.name for p in chosen),
        phases=phases,
        leaderboard=leaderboard,
        forecast_raw=forecast_raw,
        forecast=adjusted.forecast,
        adjustments=adjusted,
        actuals=actuals,
        previous_forecast=previous.forecast if previous else None,
        ewa=ewa_report,
        record=record,
    )


def _add_phasewise(
    leaderboard: ModelLeaderboard,
    fitted: dict[ModelKind, FittedModel],
    train: FeatureMatrix,
    test: FeatureMatrix,
    rel_phases: LifecyclePhases,
    config: AppConfig,
) -> tuple[ModelLeaderboard, dict[ModelKind, FittedModel]]:
    """Score the phase-split composite alongside the zoo."""
    try:
        model = fit_phasewise(train, rel_phases, period=config.models.ts_period)
        predicted = model.predict(test)
        lci, uci = control_intervals(model, test, test, config.models.z_multiplier)
        row = LeaderboardRow(
            spec=model.spec,
            mape_best_fit=evaluate_mape(test.y, predicted),
            mape_lci=evaluate_mape(test.y, lci),
            mape_uci=evaluate_mape(test.y, uci),
            correlation=prediction_correlation(predicted, test.y),
        )
    except (ValidationError, NumericError) as exc:
        log.warning("skipping phase-split model: %s", exc)
        return leaderboard, fitted
    fitted = dict(fitted)
    fitted[ModelKind.PHASEWISE] = model
    return rank_models(list(leaderboard.rows) + [row]), fitted


def _winner_forecast(
    leaderboard: ModelLeaderboard,
    fitted: dict,
    matrix: FeatureMatrix,
    test: FeatureMatrix,
    horizon_matrix: FeatureMatrix,
    horizon: MonthInterval,
    rel_phases: LifecyclePhases,
    config: AppConfig,
) -> ForecastSeries:
    """Refit the leaderboard winner on the full donor matrix and predict the
    horizon; the control band keeps the held-out residual spread. Falls to
    the next-ranked model if the winner cannot cover the horizon."""
    last_error: Exception | None = None
    for row in leaderboard:
        try:
            split_model = fitted[row.spec.kind]
            residuals = test.y - split_model.predict(test)
            half = config.models.z_multiplier * float(residuals.std())
            if row.spec.kind is ModelKind.PHASEWISE:
                full_model = fit_phasewise(matrix, rel_phases, period=config.models.ts_period)
            else:
                full_model = fit(row.spec, matrix)
            best = full_model.predict(horizon_matrix)
            return ForecastSeries(
                start=horizon.start,
                best_fit=best,
                lci=np.maximum(best - half, 0.0),
                uci=np.maximum(best + half, 0.0),
                model=row.spec,
                test_mape=row.mape_best_fit,
                test_correlation=row.correlation,
            )
        except (ValidationError, NumericError) as exc:
            log.warning("%s cannot forecast the horizon: %s", row.spec.label(), exc)
            last_error = exc
    raise ValidationError(f"no ranked model can forecast the horizon: {last_error}")


def _donor_seasonality(
    donor: GenerationSeries, config: AppConfig
) -> Optional[SeasonalDecomposition]:
    """Seasonal pattern of the donor's returns, when enough history exists.

    The indices are calendar-anchored, so they transfer to the current
    generation's months; volumes already match via normalization.
    """
    if not config.adjust.apply_seasonal:
        return None
    feature = donor.feature("gross_returns")
    mask = feature.defined_mask
    if not mask.any():
        return None
    first, last = int(np.argmax(mask)), len(mask) - int(np.argmax(mask[::-1]))
    window = feature.restrict(
        MonthInterval(feature.start + first, feature.start + last)
    )
    if len(window) < 2 * config.analysis.seasonal_period or not window.defined_mask.all():
        return None
    try:
        return decompose_seasonal(window, config.analysis.seasonal_period)
    except (ValidationError, NumericError) as exc:
        log.warning("seasonal decomposition skipped: %s", exc)
        return None
