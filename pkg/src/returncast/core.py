"""Shared domain types: month calendar, generations, feature series, alignment.

Everything here is an immutable value object; instances are safe to share
across threads. Undefined months inside a series are carried as NaN so that
business-rule exclusions can punch holes without changing series length.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from typing import Iterable, Iterator, Optional, Sequence

import numpy as np

from .errors import MissingGaError, ValidationError

_MONTH_RE = re.compile(r"^(\d{4})-(\d{2})$")
_EPOCH_YEAR = 2000  # month 0 = January 2000


@dataclass(frozen=True, order=True)
class MonthIndex:
    """A calendar month, stored as an integer count of months since 2000-01."""

    value: int

    @classmethod
    def parse(cls, text: str) -> "MonthIndex":
        m = _MONTH_RE.match(text.strip())
        if not m:
            raise ValidationError(f"bad month {text!r}, expected YYYY-MM")
        year, mon = int(m.group(1)), int(m.group(2))
        if not 1 <= mon <= 12:
            raise ValidationError(f"bad month {text!r}: month must be 01..12")
        return cls((year - _EPOCH_YEAR) * 12 + (mon - 1))

    @classmethod
    def of(cls, year: int, month: int) -> "MonthIndex":
        if not 1 <= month <= 12:
            raise ValidationError(f"month must be 01..12, got {month}")
        return cls((year - _EPOCH_YEAR) * 12 + (month - 1))

    @property
    def year(self) -> int:
        return _EPOCH_YEAR + self.value // 12

    @property
    def month(self) -> int:
        return self.value % 12 + 1

    @property
    def quarter(self) -> int:
        return (self.month - 1) // 3 + 1

    def __str__(self) -> str:
        return f"{self.year:04d}-{self.month:02d}"

    def __add__(self, months: int) -> "MonthIndex":
        return MonthIndex(self.value + int(months))

    def __sub__(self, other):
        """MonthIndex - MonthIndex -> int months; MonthIndex - int -> MonthIndex."""
        if isinstance(other, MonthIndex):
            return self.value - other.value
        return MonthIndex(self.value - int(other))


@dataclass(frozen=True)
class MonthInterval:
    """Half-open month range [start, end)."""

    start: MonthIndex
    end: MonthIndex

    def __post_init__(self):
        if self.end < self.start:
            object.__setattr__(self, "end", self.start)  # normalize to empty

    def __len__(self) -> int:
        return self.end - self.start

    def __contains__(self, month: MonthIndex) -> bool:
        return self.start <= month < self.end

    def __iter__(self) -> Iterator[MonthIndex]:
        for v in range(self.start.value, self.end.value):
            yield MonthIndex(v)

    @property
    def is_empty(self) -> bool:
        return len(self) == 0

    def intersect(self, other: "MonthInterval") -> "MonthInterval":
        lo = max(self.start, other.start)
        hi = min(self.end, other.end)
        return MonthInterval(lo, max(lo, hi))

    def __str__(self) -> str:
        return f"[{self.start}, {self.end})"


@dataclass(frozen=True)
class GenerationId:
    """A product generation: name plus its rank within the family."""

    name: str
    ordinal: int = 0

    def __post_init__(self):
        if not self.name:
            raise ValidationError("generation name must be non-empty")

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class GaEntry:
    generation: GenerationId
    family: str
    ga_month: MonthIndex


class GaCalendar:
    """General-availability months per generation, grouped by product family.

    Within a family, GA months must be strictly increasing with ordinal:
    a later generation launches later.
    """

    def __init__(self, entries: Iterable[GaEntry] = ()):
        self._by_name: dict[str, GaEntry] = {}
        self._families: dict[str, list[GaEntry]] = {}
        for e in entries:
            if e.generation.name in self._by_name:
                raise ValidationError(f"duplicate generation {e.generation.name!r} in GA calendar")
            self._by_name[e.generation.name] = e
            self._families.setdefault(e.family, []).append(e)
        for family, group in self._families.items():
            group.sort(key=lambda e: e.generation.ordinal)
            for a, b in zip(group, group[1:]):
                if b.generation.ordinal == a.generation.ordinal:
                    raise ValidationError(
                        f"duplicate ordinal {a.generation.ordinal} in family {family!r}: "
                        f"{a.generation.name}, {b.generation.name}"
                    )
                if b.ga_month <= a.ga_month:
                    raise ValidationError(
                        f"GA months out of order in family {family!r}: "
                        f"{a.generation.name} (GA {a.ga_month}) must precede "
                        f"{b.generation.name} (GA {b.ga_month})"
                    )

    def __len__(self) -> int:
        return len(self._by_name)

    def entries(self) -> list[GaEntry]:
        out: list[GaEntry] = []
        for family in sorted(self._families):
            out.extend(self._families[family])
        return out

    def _entry(self, generation: GenerationId | str) -> GaEntry:
        name = generation if isinstance(generation, str) else generation.name
        try:
            return self._by_name[name]
        except KeyError:
            raise MissingGaError(f"no GA entry for generation {name!r}") from None

    def resolve(self, name: str) -> GenerationId:
        """Canonical GenerationId (with ordinal) for a generation name."""
        return self._entry(name).generation

    def ga_month(self, generation: GenerationId | str) -> MonthIndex:
        return self._entry(generation).ga_month

    def successor(self, generation: GenerationId | str) -> Optional[GaEntry]:
        """Entry of the next generation (ordinal + 1 step) in the same family."""
        entry = self._entry(generation)
        group = self._families[entry.family]
        idx = group.index(entry)
        return group[idx + 1] if idx + 1 < len(group) else None

    def ga_of_next(self, generation: GenerationId | str) -> MonthIndex:
        """GA month of the next generation; this event triggers returns."""
        nxt = self.successor(generation)
        if nxt is None:
            name = generation if isinstance(generation, str) else generation.name
            raise MissingGaError(f"no GA entry for the generation after {name!r}")
        return nxt.ga_month


@dataclass(frozen=True)
class Provenance:
    """How a feature series was derived from its source."""

    kind: str  # raw | lagged | moving_average | cumulative_sum | normalized
    param: Optional[int] = None

    @classmethod
    def raw(cls) -> "Provenance":
        return cls("raw")

    @classmethod
    def lagged(cls, k: int) -> "Provenance":
        return cls("lagged", int(k))

    @classmethod
    def moving_average(cls, w: int) -> "Provenance":
        return cls("moving_average", int(w))

    @classmethod
    def cumulative_sum(cls) -> "Provenance":
        return cls("cumulative_sum")

    @classmethod
    def normalized(cls) -> "Provenance":
        return cls("normalized")

    def __str__(self) -> str:
        return self.kind if self.param is None else f"{self.kind}({self.param})"


def _as_value_array(values: Sequence[float] | np.ndarray) -> np.ndarray:
    arr = np.array(values, dtype=float, copy=True)
    if arr.ndim != 1:
        raise ValidationError("series values must be one-dimensional")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class FeatureSeries:
    """Monthly real-valued series; value i belongs to month start + i.

    NaN marks a month excluded by a business rule (undefined); alignment
    skips undefined months. Infinities are rejected.
    """

    name: str
    start: MonthIndex
    values: np.ndarray
    provenance: Provenance = field(default_factory=Provenance.raw)

    def __post_init__(self):
        if not self.name:
            raise ValidationError("feature name must be non-empty")
        arr = _as_value_array(self.values)
        if np.isinf(arr).any():
            raise ValidationError(f"feature {self.name!r} contains infinite values")
        object.__setattr__(self, "values", arr)

    def __len__(self) -> int:
        return len(self.values)

    @property
    def end(self) -> MonthIndex:
        return self.start + len(self.values)

    @property
    def interval(self) -> MonthInterval:
        return MonthInterval(self.start, self.end)

    def months(self) -> list[MonthIndex]:
        return list(self.interval)

    @property
    def defined_mask(self) -> np.ndarray:
        return np.isfinite(self.values)

    @property
    def defined_count(self) -> int:
        return int(self.defined_mask.sum())

    def value_at(self, month: MonthIndex) -> float:
        if month not in self.interval:
            return float("nan")
        return float(self.values[month - self.start])

    def restrict(self, interval: MonthInterval) -> "FeatureSeries":
        """Slice to the overlap with `interval` (may be empty)."""
        clipped = self.interval.intersect(interval)
        i0 = clipped.start - self.start
        i1 = clipped.end - self.start
        return replace(self, start=clipped.start, values=self.values[i0:i1])

    def shift(self, months: int) -> "FeatureSeries":
        """Same values, domain moved forward by `months`."""
        return replace(self, start=self.start + months)

    def with_values(self, values: np.ndarray | Sequence[float], **changes) -> "FeatureSeries":
        return replace(self, values=_as_value_array(values), **changes)


CHANNELS = ("shipments", "upgrades", "new_receipts", "gross_returns")


@dataclass(frozen=True)
class GenerationSeries:
    """Four aligned monthly channels for one generation, anchored at `start`.

    Loaded data is strictly finite and non-negative; preparation rules may
    later mask individual months to NaN (undefined) without changing length.
    """

    generation: GenerationId
    start: MonthIndex
    shipments: np.ndarray
    upgrades: np.ndarray
    new_receipts: np.ndarray
    gross_returns: np.ndarray

    def __post_init__(self):
        lengths = set()
        for channel in CHANNELS:
            arr = _as_value_array(getattr(self, channel))
            if len(arr) < 1:
                raise ValidationError(f"{self.generation}: channel {channel!r} is empty")
            if np.isinf(arr).any():
                raise ValidationError(f"{self.generation}: channel {channel!r} has infinite values")
            defined = arr[np.isfinite(arr)]
            if (defined < 0).any():
                raise ValidationError(f"{self.generation}: channel {channel!r} has negative values")
            object.__setattr__(self, channel, arr)
            lengths.add(len(arr))
        if len(lengths) != 1:
            raise ValidationError(f"{self.generation}: channels differ in length: {sorted(lengths)}")

    def __len__(self) -> int:
        return len(self.shipments)

    @property
    def end(self) -> MonthIndex:
        return self.start + len(self)

    @property
    def interval(self) -> MonthInterval:
        return MonthInterval(self.start, self.end)

    def channel(self, name: str) -> np.ndarray:
        if name not in CHANNELS:
            raise ValidationError(f"unknown channel {name!r}; expected one of {CHANNELS}")
        return getattr(self, name)

    def feature(self, name: str) -> FeatureSeries:
        """Extract one channel as a raw FeatureSeries."""
        return FeatureSeries(name=name, start=self.start, values=self.channel(name))

    def replace_channel(self, name: str, values: np.ndarray) -> "GenerationSeries":
        self.channel(name)  # validates the name
        return replace(self, **{name: values})

    def truncate(self, before: MonthIndex) -> "GenerationSeries":
        """Keep only months strictly before `before` (the data visible to a cycle)."""
        n = min(len(self), max(0, before - self.start))
        if n < 1:
            raise ValidationError(
                f"{self.generation}: no data before {before} (series starts {self.start})"
            )
        return replace(
            self,
            **{channel: self.channel(channel)[:n] for channel in CHANNELS},
        )


@dataclass(frozen=True)
class FeatureMatrix:
    """Target plus predictors restricted to one contiguous fully-defined range.

    Predictors are kept in name order so that construction is insensitive to
    the input ordering. A prediction-only matrix carries target=None.
    """

    start: MonthIndex
    target: Optional[FeatureSeries]
    predictors: tuple[FeatureSeries, ...]

    def __post_init__(self):
        names = [p.name for p in self.predictors]
        if sorted(names) != names:
            object.__setattr__(self, "predictors", tuple(sorted(self.predictors, key=lambda p: p.name)))
            names = [p.name for p in self.predictors]
        dupes = {n for n in names if names.count(n) > 1}
        if dupes:
            raise ValidationError(f"duplicate feature name {sorted(dupes)[0]!r}")
        if self.target is not None and self.target.name in names:
            raise ValidationError(f"target name {self.target.name!r} collides with a predictor")
        n = self.n_rows
        for s in self.predictors + ((self.target,) if self.target is not None else ()):
            if len(s) != n or s.start != self.start:
                raise ValidationError("matrix series must share start and length")

    @property
    def n_rows(self) -> int:
        if self.target is not None:
            return len(self.target)
        return len(self.predictors[0]) if self.predictors else 0

    def __len__(self) -> int:
        return self.n_rows

    @property
    def is_empty(self) -> bool:
        return self.n_rows == 0

    @property
    def interval(self) -> MonthInterval:
        return MonthInterval(self.start, self.start + self.n_rows)

    def months(self) -> list[MonthIndex]:
        return list(self.interval)

    @property
    def predictor_names(self) -> tuple[str, ...]:
        return tuple(p.name for p in self.predictors)

    @property
    def X(self) -> np.ndarray:
        """Predictor matrix, rows by month, columns in name order."""
        if not self.predictors:
            return np.empty((self.n_rows, 0))
        return np.column_stack([p.values for p in self.predictors])

    @property
    def y(self) -> np.ndarray:
        if self.target is None:
            raise ValidationError("prediction-only matrix has no target")
        return self.target.values

    def slice_rows(self, i0: int, i1: int) -> "FeatureMatrix":
        window = MonthInterval(self.start + i0, self.start + i1)
        return FeatureMatrix(
            start=window.start,
            target=self.target.restrict(window) if self.target is not None else None,
            predictors=tuple(p.restrict(window) for p in self.predictors),
        )


def _longest_true_run(mask: np.ndarray) -> tuple[int, int]:
    """(offset, length) of the longest run of True; ties go to the latest run."""
    best_off, best_len = 0, 0
    run_start = None
    for i, flag in enumerate(list(mask) + [False]):
        if flag and run_start is None:
            run_start = i
        elif not flag and run_start is not None:
            run_len = i - run_start
            if run_len >= best_len:
                best_off, best_len = run_start, run_len
            run_start = None
    return best_off, best_len


def align(series: Iterable[FeatureSeries], target: FeatureSeries) -> FeatureMatrix:
    """Build the maximal contiguous fully-defined matrix of target + predictors.

    Disjoint domains yield an empty matrix, not an error. When exclusion
    holes split the overlap, the longest contiguous run wins (ties go to the
    most recent months). Duplicate feature names are rejected.
    """
    predictors = sorted(series, key=lambda s: s.name)
    seen: set[str] = set()
    for s in predictors:
        if s.name in seen:
            raise ValidationError(f"duplicate feature name {s.name!r}")
        seen.add(s.name)
    if target.name in seen:
        raise ValidationError(f"target name {target.name!r} collides with a predictor")

    def emptied(s: FeatureSeries, at: MonthIndex) -> FeatureSeries:
        return replace(s, start=at, values=np.empty(0))

    window = target.interval
    for s in predictors:
        window = window.intersect(s.interval)
    if not window.is_empty:
        mask = target.restrict(window).defined_mask.copy()
        for s in predictors:
            mask &= s.restrict(window).defined_mask
        off, length = _longest_true_run(mask)
        if length > 0:
            run = MonthInterval(window.start + off, window.start + off + length)
            return FeatureMatrix(
                start=run.start,
                target=target.restrict(run),
                predictors=tuple(p.restrict(run) for p in predictors),
            )
    return FeatureMatrix(
        start=target.start,
        target=emptied(target, target.start),
        predictors=tuple(emptied(p, target.start) for p in predictors),
    )
