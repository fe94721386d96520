"""Command-line interface.

Each subcommand runs one stage of the planning pipeline and writes its
artifact files under --out, printing a one-line summary. `run-cycle` chains
every stage for one monthly cycle, persists the cycle record, and writes the
report file. All stages recompute deterministically from the raw inputs, so
any stage can be re-run and inspected on its own.

Exit codes: 0 success, 1 validation error, 2 missing input file,
3 numeric failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .config import AppConfig, load_config
from .core import MonthIndex
from .cycle_store import CycleStore, PlannerChoice
from .errors import NumericError, ValidationError
from .ingest import load_ga_calendar, load_history, write_ga_calendar, write_history
from .pipeline import (
    donor_candidates,
    normalize_to_current,
    prepare_generation,
    run_cycle,
    visible_history,
)
from .analysis import genealogy_match
from .report import emit_report
from .synth import ScenarioSpec, generate

log = logging.getLogger(__name__)

_CHOICES = {"best_fit": PlannerChoice.BEST_FIT, "lci": PlannerChoice.LCI, "uci": PlannerChoice.UCI}


def _add_io_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--history", required=True, help="history CSV (generation_id,month,...)")
    p.add_argument("--ga", required=True, help="GA calendar CSV")
    p.add_argument("--config", default=None, help="INI config file (defaults built in)")
    p.add_argument("--out", default=".", help="output directory (default: current)")


def _add_cycle_flags(p: argparse.ArgumentParser) -> None:
    _add_io_flags(p)
    p.add_argument("--generation", required=True, help="generation to forecast, e.g. gen2")
    p.add_argument("--cycle", required=True, help="cycle month, e.g. 2016-04")
    p.add_argument("--store", default=None, help="cycle store directory (default: <out>/cycles)")
    p.add_argument(
        "--select",
        choices=sorted(_CHOICES),
        default="best_fit",
        help="series the planner commits to (default: best_fit)",
    )


def _require(path: str | Path) -> Path:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"input file not found: {path}")
    return path


def _load(args) -> tuple[list, object, AppConfig]:
    calendar = load_ga_calendar(_require(args.ga))
    history = load_history(_require(args.history), calendar)
    config = load_config(_require(args.config)) if args.config else load_config(None)
    return history, calendar, config


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _run(args, persist: bool):
    history, calendar, config = _load(args)
    store_dir = args.store if args.store else str(Path(args.out) / "cycles")
    store = CycleStore(store_dir)
    outcome = run_cycle(
        history,
        calendar,
        args.generation,
        MonthIndex.parse(args.cycle),
        store=store,
        config=config,
        choice=_CHOICES[args.select],
        persist=persist,
    )
    return outcome, store


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


# ------------------------------------------------------------ subcommands


def cmd_ingest(args) -> int:
    history, calendar, _ = _load(args)
    out = _outdir(args)
    write_history(out / "history.csv", history)
    write_ga_calendar(out / "ga.csv", calendar)
    print(
        f"ingest: {len(history)} generations, {len(calendar.entries())} GA entries -> {out}"
    )
    return 0


def cmd_prepare(args) -> int:
    history, calendar, config = _load(args)
    visible = visible_history(history, MonthIndex.parse(args.cycle))
    generation = calendar.resolve(args.generation)
    by_name = {s.generation.name: s for s in visible}
    if generation.name not in by_name:
        raise ValidationError(f"no visible history for {generation.name}")
    candidates = donor_candidates(visible, generation, calendar)
    donor_id = genealogy_match(
        by_name[generation.name], candidates, calendar, config.analysis.min_genealogy_overlap
    )
    current, _ = prepare_generation(by_name[generation.name], calendar, config, repair=False)
    donor, reports = prepare_generation(by_name[donor_id.name], calendar, config, repair=True)
    donor, factor = normalize_to_current(donor, current, calendar)

    out = _outdir(args)
    write_history(out / "prepared.csv", [donor, current])
    _write_json(
        out / "outliers.json",
        {
            "donor": donor_id.name,
            "normalization_factor": factor,
            "outliers": [
                {
                    "feature": r.feature,
                    "months": [str(m) for m in r.months],
                    "values": list(r.values),
                    "band": [r.lower, r.upper],
                }
                for r in reports
            ],
        },
    )
    flagged = sum(r.count for r in reports)
    print(
        f"prepare: donor {donor_id.name}, factor {factor:.4f}, "
        f"{flagged} outlier months repaired -> {out}"
    )
    return 0


def cmd_analyze(args) -> int:
    outcome, _ = _run(args, persist=False)
    out = _outdir(args)
    _write_json(
        out / "analysis.json",
        {
            "donor": outcome.donor.name,
            "correlations": [
                {"predictor": e.predictor, "pearson_r": e.pearson_r, "strength": e.strength.value}
                for e in outcome.correlations
            ],
            "selected_predictors": list(outcome.selected),
            "phases": {
                name: [str(getattr(outcome.phases, name).start), str(getattr(outcome.phases, name).end)]
                for name in ("ramp_up", "plateau", "ramp_down")
            },
        },
    )
    strong = sum(1 for e in outcome.correlations if e.strength.value == "Strong")
    print(
        f"analyze: donor {outcome.donor.name}, {len(outcome.correlations)} predictors "
        f"({strong} strong, {len(outcome.selected)} selected) -> {out / 'analysis.json'}"
    )
    return 0


def cmd_train(args) -> int:
    outcome, _ = _run(args, persist=False)
    out = _outdir(args)
    _write_json(out / "leaderboard.json", outcome.leaderboard.to_dict())
    winner = outcome.leaderboard.winner
    print(
        f"train: {len(outcome.leaderboard)} models, winner {winner.spec.label()} "
        f"(test MAPE {winner.mape_best_fit:.2f}%) -> {out / 'leaderboard.json'}"
    )
    return 0


def cmd_forecast(args) -> int:
    outcome, _ = _run(args, persist=False)
    out = _outdir(args)
    _write_json(out / "forecast.json", outcome.forecast_raw.to_dict())
    f = outcome.forecast_raw
    print(
        f"forecast: {f.model.label()} over {f.interval}, "
        f"test MAPE {f.test_mape:.2f}% -> {out / 'forecast.json'}"
    )
    return 0


def cmd_ewa(args) -> int:
    outcome, _ = _run(args, persist=False)
    out = _outdir(args)
    _write_json(out / "ewa.json", outcome.ewa.to_dict())
    print(
        f"ewa: alert {outcome.ewa.alert.value}, recommendation "
        f"{outcome.ewa.recommendation.value} -> {out / 'ewa.json'}"
    )
    return 0


def cmd_adjust(args) -> int:
    outcome, _ = _run(args, persist=False)
    out = _outdir(args)
    _write_json(
        out / "adjust.json",
        {
            "forecast": outcome.forecast.to_dict(),
            "notes": [
                {
                    "rule": n.rule,
                    "factor": n.factor,
                    "months": [str(m) for m in n.months],
                }
                for n in outcome.adjustments.notes
            ],
        },
    )
    print(f"adjust: {outcome.adjustments.describe()} -> {out / 'adjust.json'}")
    return 0


def cmd_report(args) -> int:
    outcome, _ = _run(args, persist=False)
    out = _outdir(args)
    emit_report(outcome, out / "report.csv")
    print(f"report: {out / 'report.csv'}")
    return 0


def cmd_run_cycle(args) -> int:
    outcome, store = _run(args, persist=True)
    out = _outdir(args)
    emit_report(outcome, out / "report.csv")
    record_path = store.path_for(outcome.generation, outcome.cycle_month)
    print(
        f"run-cycle: {outcome.generation.name} {outcome.cycle_month} "
        f"winner {outcome.forecast.model.label()} "
        f"(test MAPE {outcome.forecast.test_mape:.2f}%), "
        f"alert {outcome.ewa.alert.value}, {outcome.ewa.recommendation.value} "
        f"-> {out / 'report.csv'}, {record_path}"
    )
    return 0


def cmd_synth(args) -> int:
    spec = ScenarioSpec(
        generations=args.generations,
        seed=args.seed,
        noise_sd=args.noise_sd,
        seasonal_amplitude=args.seasonal_amplitude,
        months_after_final_ga=args.months_after_final_ga,
    )
    series, calendar, _ = generate(spec)
    out = _outdir(args)
    write_history(out / "history.csv", series)
    write_ga_calendar(out / "ga.csv", calendar)
    print(
        f"synth: {spec.generations} generations, seed {spec.seed} "
        f"-> {out / 'history.csv'}, {out / 'ga.csv'}"
    )
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="returncast",
        description="Part-returns forecasting with model ranking and cycle validation.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log stage details")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate and normalize the input CSVs")
    _add_io_flags(p)
    p.set_defaults(func=cmd_ingest)

    for name, func, blurb in [
        ("prepare", cmd_prepare, "clean, mask, and normalize donor history"),
        ("analyze", cmd_analyze, "genealogy, correlations, lifecycle phases"),
        ("train", cmd_train, "fit the model zoo and rank by test MAPE"),
        ("forecast", cmd_forecast, "predict the horizon with the winning model"),
        ("ewa", cmd_ewa, "validate the previous cycle's forecast"),
        ("adjust", cmd_adjust, "apply post-forecast adjustment rules"),
        ("report", cmd_report, "write the cycle report CSV"),
        ("run-cycle", cmd_run_cycle, "run every stage and persist the cycle record"),
    ]:
        p = sub.add_parser(name, help=blurb)
        _add_cycle_flags(p)
        p.set_defaults(func=func)

    p = sub.add_parser("synth", help="generate a synthetic multi-generation scenario")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--generations", type=int, default=4)
    p.add_argument("--noise-sd", type=float, default=0.03, dest="noise_sd")
    p.add_argument(
        "--seasonal-amplitude", type=float, default=0.0, dest="seasonal_amplitude"
    )
    p.add_argument(
        "--months-after-final-ga", type=int, default=8, dest="months_after_final_ga"
    )
    p.add_argument("--out", default=".", help="output directory")
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"{args.command}: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"{args.command}: numeric failure: {exc}", file=sys.stderr)
        return 3
    except ValidationError as exc:
        print(f"{args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
