"""The cycle report file: one deterministic CSV, sections separated by
blank lines.

Sections, in order: run metadata (field,value), the monthly grid with the
fixed column set, the model leaderboard, the correlation table, lifecycle
phases, flagged outliers, applied adjustments, and EWA statistics.

The monthly grid covers the months the EWA scored (realized actuals against
the previous forecast, with per-month deviation, PAD, and color) followed by
the forecast horizon. Cycle-level values (test MAPE, score, projection,
alert, recommendation) sit on the cycle-month row; every other cell they
would not apply to stays empty. Quarterly subtotal rows follow the monthly
rows, summing forecast bands over each calendar quarter the horizon touches.

Everything is formatted to fixed precision and iterated in a fixed order, so
re-emission from identical inputs is byte-identical.
"""
from __future__ import annotations

import math
from typing import Optional

from .core import MonthIndex
from .errors import ValidationError
from .models import ForecastSeries
from .pipeline import CycleOutcome

MONTHLY_HEADER = (
    "month,actual,best_fit,lci,uci,mape,deviation,pad,color,"
    "score,projection,alert,recommendation,adjustment_notes"
)
LEADERBOARD_HEADER = "algorithm,mape_best_fit,mape_lci,mape_uci,correlation"
CORRELATION_HEADER = "predictor,pearson_r,strength"
PHASES_HEADER = "phase,start,end"
OUTLIERS_HEADER = "outlier_feature,month,value,band_low,band_high"
ADJUSTMENTS_HEADER = "adjustment,factor,months"
EWA_HEADER = "ewa_stat,value"
METADATA_HEADER = "field,value"


def _num(x: Optional[float]) -> str:
    """Fixed-precision cell; absent or undefined values stay empty."""
    if x is None:
        return ""
    x = float(x)
    if not math.isfinite(x):
        return ""
    return f"{x:.4f}"


def _flag(x: Optional[bool]) -> str:
    return "" if x is None else ("true" if x else "false")


def _band_at(forecast: ForecastSeries, month: MonthIndex, band: str) -> Optional[float]:
    if month not in forecast.interval:
        return None
    return float(getattr(forecast, band)[month - forecast.start])


def _quarter_label(month: MonthIndex) -> str:
    return f"{month.year}-Q{month.quarter}"


def render_report(outcome: CycleOutcome) -> str:
    """Render the full report; `emit_report` writes it to a file."""
    lines: list[str] = []

    # --- run metadata
    lines.append(METADATA_HEADER)
    meta = [
        ("cycle", str(outcome.cycle_month)),
        ("generation", outcome.generation.name),
        ("donor", outcome.donor.name),
        ("normalization_factor", _num(outcome.normalization)),
        ("winning_model", outcome.forecast.model.label()),
        ("selected_predictors", ";".join(outcome.selected)),
        ("planner_choice", outcome.record.planner_selected.value),
        ("first_cycle", _flag(outcome.ewa.first_cycle)),
    ]
    lines.extend(f"{k},{v}" for k, v in meta)
    lines.append("")

    # --- monthly grid
    lines.append(MONTHLY_HEADER)
    ewa = outcome.ewa
    scored: dict[MonthIndex, tuple[float, float, Optional[str]]] = {}
    if ewa.step1 is not None:
        for i, m in enumerate(ewa.step1.months):
            color = ewa.step1.colors[i]
            scored[m] = (
                ewa.step1.deviations[i],
                ewa.step1.pad_signed[i],
                color.value if color is not None else None,
            )

    months = sorted(set(scored) | set(outcome.forecast.months()))
    for m in months:
        in_horizon = m in outcome.forecast.interval
        is_cycle_row = m == outcome.cycle_month
        actual = outcome.actuals.value_at(m)
        dev, pad, color = scored.get(m, (None, None, None))
        if in_horizon:
            bands = outcome.forecast
        elif outcome.previous_forecast is not None:
            bands = outcome.previous_forecast
        else:
            bands = None
        notes = ";".join(
            n.describe() for n in outcome.adjustments.notes if m in n.months
        )
        cells = [
            str(m),
            _num(actual) if actual is not None and not math.isnan(actual) else "",
            _num(_band_at(bands, m, "best_fit")) if bands else "",
            _num(_band_at(bands, m, "lci")) if bands else "",
            _num(_band_at(bands, m, "uci")) if bands else "",
            _num(outcome.forecast.test_mape) if is_cycle_row else "",
            _num(dev),
            _num(pad),
            color or "",
            (_num(ewa.score) if ewa.score is not None else "") if is_cycle_row else "",
            _num(ewa.projection) if is_cycle_row else "",
            ewa.alert.value if is_cycle_row else "",
            ewa.recommendation.value if is_cycle_row else "",
            notes if in_horizon else "",
        ]
        lines.append(",".join(cells))

    # quarterly subtotals over the horizon months only
    by_quarter: dict[tuple[int, int], list[MonthIndex]] = {}
    for m in outcome.forecast.months():
        by_quarter.setdefault((m.year, m.quarter), []).append(m)
    for (_, _), q_months in sorted(by_quarter.items()):
        sums = {
            band: sum(_band_at(outcome.forecast, m, band) for m in q_months)
            for band in ("best_fit", "lci", "uci")
        }
        cells = [_quarter_label(q_months[0]), ""]
        cells += [_num(sums["best_fit"]), _num(sums["lci"]), _num(sums["uci"])]
        cells += [""] * 9
        lines.append(",".join(cells))
    lines.append("")

    # --- leaderboard
    lines.append(LEADERBOARD_HEADER)
    for row in outcome.leaderboard:
        lines.append(
            ",".join(
                [
                    row.spec.label(),
                    _num(row.mape_best_fit),
                    _num(row.mape_lci),
                    _num(row.mape_uci),
                    _num(row.correlation),
                ]
            )
        )
    lines.append("")

    # --- correlation analysis
    lines.append(CORRELATION_HEADER)
    for entry in outcome.correlations:
        lines.append(f"{entry.predictor},{_num(entry.pearson_r)},{entry.strength.value}")
    lines.append("")

    # --- donor lifecycle phases
    lines.append(PHASES_HEADER)
    for name in ("ramp_up", "plateau", "ramp_down"):
        iv = getattr(outcome.phases, name)
        lines.append(f"{name},{iv.start},{iv.end}")
    lines.append("")

    # --- flagged outliers
    lines.append(OUTLIERS_HEADER)
    for report in outcome.outliers:
        for month, value in zip(report.months, report.values):
            lines.append(
                f"{report.feature},{month},{_num(value)},"
                f"{_num(report.lower)},{_num(report.upper)}"
            )
    lines.append("")

    # --- applied adjustments
    lines.append(ADJUSTMENTS_HEADER)
    for note in outcome.adjustments.notes:
        span = f"{note.months[0]}..{note.months[-1]}" if note.months else ""
        lines.append(f"{note.rule},{_num(note.factor)},{span}")
    lines.append("")

    # --- EWA statistics
    lines.append(EWA_HEADER)
    six_mean, six_sd = ewa.six_month if ewa.six_month is not None else (None, None)
    stats = [
        ("first_cycle", _flag(ewa.first_cycle)),
        ("alert", ewa.alert.value),
        ("recommendation", ewa.recommendation.value),
        ("score", _num(ewa.score) if ewa.score is not None else ""),
        ("six_month_mean", _num(six_mean)),
        ("six_month_sd", _num(six_sd)),
        ("projection", _num(ewa.projection)),
        ("step1_window_pad", _num(ewa.step1.window_pad) if ewa.step1 else ""),
        ("step2_window_pad", _num(ewa.step2.window_pad) if ewa.step2 else ""),
        ("steps_disagree", _flag(ewa.steps_disagree if not ewa.first_cycle else None)),
    ]
    lines.extend(f"{k},{v}" for k, v in stats)

    return "\n".join(lines) + "\n"


def emit_report(outcome: CycleOutcome, path) -> str:
    text = render_report(outcome)
    validate_report(text)
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise ValidationError(f"cannot write report to {path}: {exc}") from exc
    return text


def _split_sections(text: str) -> list[list[str]]:
    sections, current = [], []
    for line in text.splitlines():
        if line == "":
            if current:
                sections.append(current)
            current = []
        else:
            current.append(line)
    if current:
        sections.append(current)
    return sections


def validate_report(text: str) -> dict:
    """Check the report against its section schema; returns parsed sections.

    Verifies the fixed headers, that every monthly cell parses as a month,
    number, or allowed token, and that quarterly rows equal the sum of their
    constituent monthly forecast rows.
    """
    sections = _split_sections(text)
    headers = [s[0] for s in sections]
    expected = [
        METADATA_HEADER,
        MONTHLY_HEADER,
        LEADERBOARD_HEADER,
        CORRELATION_HEADER,
        PHASES_HEADER,
        OUTLIERS_HEADER,
        ADJUSTMENTS_HEADER,
        EWA_HEADER,
    ]
    if headers != expected:
        raise ValidationError(f"report sections {headers} != expected {expected}")

    metadata = dict(line.split(",", 1) for line in sections[0][1:])
    if "cycle" not in metadata:
        raise ValidationError("report metadata is missing the cycle month")
    cycle_month = MonthIndex.parse(metadata["cycle"])

    monthly = sections[1][1:]
    n_columns = len(MONTHLY_HEADER.split(","))
    month_rows: dict[MonthIndex, list[str]] = {}
    quarter_rows: dict[str, list[str]] = {}
    for line in monthly:
        cells = line.split(",")
        if len(cells) < n_columns:
            raise ValidationError(f"monthly row has {len(cells)} cells: {line!r}")
        label = cells[0]
        if "-Q" in label:
            quarter_rows[label] = cells
        else:
            month_rows[MonthIndex.parse(label)] = cells
        for cell in cells[1:5]:
            if cell:
                float(cell)  # ValueError bubbles as a genuine schema failure
    if not month_rows:
        raise ValidationError("report has no monthly rows")

    # subtotals cover horizon months only, which start at the cycle month
    for label, cells in quarter_rows.items():
        year, q = label.split("-Q")
        member_cols: dict[int, float] = {}
        for m, row in month_rows.items():
            if m.year == int(year) and m.quarter == int(q) and m >= cycle_month:
                for col in (2, 3, 4):
                    if row[col]:
                        member_cols[col] = member_cols.get(col, 0.0) + float(row[col])
        for col in (2, 3, 4):
            if not cells[col]:
                continue
            total = member_cols.get(col, 0.0)
            if abs(float(cells[col]) - total) > 1e-2:
                raise ValidationError(
                    f"{label} column {col} subtotal {cells[col]} != sum {total:.4f}"
                )

    if len(sections[2]) < 2:
        raise ValidationError("leaderboard section is empty")
    return {
        "metadata": metadata,
        "months": {str(m): row for m, row in month_rows.items()},
        "quarters": quarter_rows,
        "leaderboard": sections[2][1:],
        "correlations": sections[3][1:],
        "phases": sections[4][1:],
        "outliers": sections[5][1:],
        "adjustments": sections[6][1:],
        "ewa": dict(line.split(",", 1) for line in sections[7][1:]),
    }
