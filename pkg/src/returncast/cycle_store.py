"""Per-cycle planning records, persisted one JSON file per generation-month.

A deviation check needs last cycle's forecast and what the planner actually
committed to, months after the fact. Records are plain JSON on disk so an
audit can read them without this package.
"""
from __future__ import annotations

import enum
import json
import math
import os
import urllib.parse
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .core import FeatureSeries, GenerationId, MonthIndex
from .errors import ValidationError
from .models import ForecastSeries


class PlannerChoice(enum.Enum):
    BEST_FIT = "BestFit"
    LCI = "LCI"
    UCI = "UCI"

    @property
    def band(self) -> str:
        return {"BestFit": "best_fit", "LCI": "lci", "UCI": "uci"}[self.value]

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class CycleRecord:
    """Everything one planning cycle committed to, plus actuals seen since."""

    cycle_month: MonthIndex
    generation: GenerationId
    forecast: ForecastSeries
    planner_selected: PlannerChoice
    selected_series: np.ndarray
    realized_actuals: Optional[FeatureSeries] = None
    ewa: Optional[dict] = None  # validation summary of this cycle, stored verbatim

    def __post_init__(self):
        arr = np.asarray(self.selected_series, dtype=float).copy()
        arr.flags.writeable = False
        object.__setattr__(self, "selected_series", arr)
        band = getattr(self.forecast, self.planner_selected.band)
        if len(arr) != len(band) or not np.array_equal(arr, band):
            raise ValidationError(
                f"selected series does not match forecast {self.planner_selected.band}"
            )

    @classmethod
    def create(
        cls,
        cycle_month: MonthIndex,
        generation: GenerationId,
        forecast: ForecastSeries,
        choice: PlannerChoice = PlannerChoice.BEST_FIT,
        realized_actuals: Optional[FeatureSeries] = None,
        ewa: Optional[dict] = None,
    ) -> "CycleRecord":
        return cls(
            cycle_month=cycle_month,
            generation=generation,
            forecast=forecast,
            planner_selected=choice,
            selected_series=getattr(forecast, choice.band),
            realized_actuals=realized_actuals,
            ewa=ewa,
        )

    def with_actuals(self, actuals: FeatureSeries) -> "CycleRecord":
        return CycleRecord(
            cycle_month=self.cycle_month,
            generation=self.generation,
            forecast=self.forecast,
            planner_selected=self.planner_selected,
            selected_series=self.selected_series,
            realized_actuals=actuals,
            ewa=self.ewa,
        )

    def to_dict(self) -> dict:
        doc = {
            "cycle_month": str(self.cycle_month),
            "generation": {"name": self.generation.name, "ordinal": self.generation.ordinal},
            "forecast": self.forecast.to_dict(),
            "planner_selected": self.planner_selected.value,
            "selected_series": [float(v) for v in self.selected_series],
        }
        if self.realized_actuals is not None:
            doc["realized_actuals"] = {
                "name": self.realized_actuals.name,
                "start": str(self.realized_actuals.start),
                "values": [
                    None if math.isnan(v) else float(v) for v in self.realized_actuals.values
                ],
            }
        if self.ewa is not None:
            doc["ewa"] = self.ewa
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "CycleRecord":
        actuals = None
        if doc.get("realized_actuals") is not None:
            blob = doc["realized_actuals"]
            actuals = FeatureSeries(
                name=blob["name"],
                start=MonthIndex.parse(blob["start"]),
                values=np.array(
                    [math.nan if v is None else float(v) for v in blob["values"]], dtype=float
                ),
            )
        return cls(
            cycle_month=MonthIndex.parse(doc["cycle_month"]),
            generation=GenerationId(doc["generation"]["name"], int(doc["generation"]["ordinal"])),
            forecast=ForecastSeries.from_dict(doc["forecast"]),
            planner_selected=PlannerChoice(doc["planner_selected"]),
            selected_series=np.array(doc["selected_series"], dtype=float),
            realized_actuals=actuals,
            ewa=doc.get("ewa"),
        )


class CycleStore:
    """Directory store, one `<generation>/<YYYY-MM>.json` per cycle.

    Writes are atomic whole-file replacements; re-storing the same cycle
    month overwrites the old record. Single writer by contract.
    """

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def _generation_dir(self, generation: GenerationId) -> Path:
        return self.root / urllib.parse.quote(generation.name, safe="")

    def _path(self, generation: GenerationId, month: MonthIndex) -> Path:
        return self._generation_dir(generation) / f"{month}.json"

    def path_for(self, generation: GenerationId, month: MonthIndex) -> Path:
        """Where the record for (generation, month) lives (whether or not it exists)."""
        return self._path(generation, month)

    def store_cycle(self, record: CycleRecord) -> Path:
        path = self._path(record.generation, record.cycle_month)
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(".json.tmp")
        tmp.write_text(json.dumps(record.to_dict(), indent=2, sort_keys=True) + "\n")
        os.replace(tmp, path)
        return path

    def load_cycle(self, generation: GenerationId, month: MonthIndex) -> Optional[CycleRecord]:
        path = self._path(generation, month)
        if not path.exists():
            return None
        return CycleRecord.from_dict(json.loads(path.read_text()))

    def list_cycle_months(self, generation: GenerationId) -> list[MonthIndex]:
        folder = self._generation_dir(generation)
        if not folder.is_dir():
            return []
        months = []
        for entry in folder.iterdir():
            if entry.suffix == ".json":
                months.append(MonthIndex.parse(entry.stem))
        return sorted(months)

    def load_previous_cycle(
        self, generation: GenerationId, before: MonthIndex
    ) -> Optional[CycleRecord]:
        """Most recent record strictly before `before`, or None."""
        months = [m for m in self.list_cycle_months(generation) if m < before]
        if not months:
            return None
        return self.load_cycle(generation, max(months))
