"""Small builders shared across test modules."""
from __future__ import annotations

import numpy as np

from returncast.core import (
    FeatureSeries,
    GaCalendar,
    GaEntry,
    GenerationId,
    GenerationSeries,
    MonthIndex,
)


def month(text: str) -> MonthIndex:
    return MonthIndex.parse(text)


def fs(values, start: str = "2010-01", name: str = "f") -> FeatureSeries:
    return FeatureSeries(name=name, start=month(start), values=np.asarray(values, dtype=float))


def family_calendar(*ga_months: str, family: str = "fleet") -> GaCalendar:
    """Calendar with generations gen1, gen2, ... at the given GA months."""
    return GaCalendar(
        GaEntry(
            generation=GenerationId(f"gen{i + 1}", ordinal=i + 1),
            family=family,
            ga_month=month(m),
        )
        for i, m in enumerate(ga_months)
    )


def gen_series(
    name: str,
    start: str,
    returns,
    shipments=None,
    upgrades=None,
    receipts=None,
    ordinal: int = 0,
) -> GenerationSeries:
    ret = np.asarray(returns, dtype=float)
    n = len(ret)

    def channel(values):
        return np.zeros(n) if values is None else np.asarray(values, dtype=float)

    return GenerationSeries(
        generation=GenerationId(name, ordinal=ordinal),
        start=month(start),
        shipments=channel(shipments),
        upgrades=channel(upgrades),
        new_receipts=channel(receipts),
        gross_returns=ret,
    )
