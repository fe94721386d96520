"""Calendar arithmetic, series containers, and matrix alignment."""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from returncast.core import (
    FeatureMatrix,
    FeatureSeries,
    GaEntry,
    GaCalendar,
    GenerationId,
    MonthIndex,
    MonthInterval,
    align,
)
from returncast.errors import MissingGaError, ValidationError

from helpers import family_calendar, fs, gen_series, month


def test_month_index_roundtrip_and_arithmetic():
    m = month("2008-01")
    assert str(m) == "2008-01"
    assert MonthIndex.of(2008, 1) == m
    assert m + 12 == month("2009-01")
    assert month("2008-12") + 1 == month("2009-01")
    assert month("2010-06") - month("2008-06") == 24
    assert month("2010-06") - 6 == month("2009-12")
    assert m.quarter == 1
    assert month("2008-04").quarter == 2
    assert month("2008-12").quarter == 4


def test_month_index_rejects_garbage():
    for bad in ("2008-13", "2008-00", "200801", "not-a-month"):
        with pytest.raises(ValidationError):
            MonthIndex.parse(bad)


def test_month_interval_basics():
    iv = MonthInterval(month("2010-01"), month("2010-04"))
    assert len(iv) == 3
    assert list(iv) == [month("2010-01"), month("2010-02"), month("2010-03")]
    assert month("2010-03") in iv
    assert month("2010-04") not in iv
    empty = MonthInterval(month("2010-01"), month("2010-01"))
    assert empty.is_empty and len(empty) == 0
    # reversed bounds normalize to an empty range, so intersect stays total
    reversed_iv = MonthInterval(month("2010-02"), month("2010-01"))
    assert reversed_iv.is_empty


def test_month_interval_intersect():
    a = MonthInterval(month("2010-01"), month("2010-06"))
    b = MonthInterval(month("2010-04"), month("2010-09"))
    got = a.intersect(b)
    assert got.start == month("2010-04") and got.end == month("2010-06")
    disjoint = a.intersect(MonthInterval(month("2011-01"), month("2011-03")))
    assert disjoint.is_empty


def test_ga_calendar_lookup_and_succession():
    cal = family_calendar("2008-01", "2010-01", "2012-01")
    assert cal.ga_month("gen2") == month("2010-01")
    assert cal.resolve("gen3").ordinal == 3
    assert cal.successor("gen1").generation.name == "gen2"
    assert cal.successor("gen3") is None
    assert cal.ga_of_next("gen2") == month("2012-01")
    with pytest.raises(MissingGaError):
        cal.ga_of_next("gen3")
    with pytest.raises(MissingGaError):
        cal.ga_month("gen9")


def test_ga_calendar_rejects_disorder():
    entries = [
        GaEntry(GenerationId("a", ordinal=1), "fam", month("2010-01")),
        GaEntry(GenerationId("b", ordinal=2), "fam", month("2009-01")),
    ]
    with pytest.raises(ValidationError):
        GaCalendar(entries)
    with pytest.raises(ValidationError):
        GaCalendar(
            [
                GaEntry(GenerationId("a", ordinal=1), "fam", month("2010-01")),
                GaEntry(GenerationId("a", ordinal=2), "fam", month("2011-01")),
            ]
        )


def test_feature_series_access():
    s = fs([1.0, np.nan, 3.0], start="2010-01")
    assert len(s) == 3
    assert list(s.defined_mask) == [True, False, True]
    assert s.defined_count == 2
    assert s.value_at(month("2010-03")) == 3.0
    assert np.isnan(s.value_at(month("2010-02")))
    # out-of-span reads are NaN, not errors: callers probe overlap with it
    assert np.isnan(s.value_at(month("2010-04")))


def test_feature_series_restrict_and_shift():
    s = fs([1, 2, 3, 4], start="2010-01")
    r = s.restrict(MonthInterval(month("2010-02"), month("2010-04")))
    assert r.start == month("2010-02")
    assert list(r.values) == [2.0, 3.0]
    shifted = s.shift(2)
    assert shifted.start == month("2010-03")
    assert list(shifted.values) == list(s.values)


def test_generation_series_validation():
    with pytest.raises(ValidationError):
        gen_series("g", "2010-01", returns=[1, -2, 3])
    g = gen_series("g", "2010-01", returns=[1, 2, 3], shipments=[4, 5, 6])
    assert list(g.channel("shipments")) == [4.0, 5.0, 6.0]
    assert g.feature("gross_returns").name == "gross_returns"
    replaced = g.replace_channel("gross_returns", np.array([9.0, 9.0, 9.0]))
    assert list(replaced.gross_returns) == [9.0, 9.0, 9.0]
    assert list(g.gross_returns) == [1.0, 2.0, 3.0]  # original untouched


def test_generation_series_truncate():
    g = gen_series("g", "2010-01", returns=[1, 2, 3, 4])
    t = g.truncate(month("2010-03"))
    assert len(t) == 2 and t.end == month("2010-03")


def test_feature_matrix_sorts_predictors():
    target = fs([1, 2, 3], name="y")
    m = align([fs([4, 5, 6], name="b"), fs([7, 8, 9], name="a")], target)
    assert m.predictor_names == ("a", "b")
    assert list(m.X[:, 0]) == [7.0, 8.0, 9.0]  # column order follows sorted names
    assert list(m.y) == [1.0, 2.0, 3.0]


def test_feature_matrix_slice_rows():
    target = fs([1, 2, 3, 4], name="y")
    m = align([fs([5, 6, 7, 8], name="x")], target)
    head = m.slice_rows(0, 3)
    tail = m.slice_rows(3, 4)
    assert head.n_rows == 3 and tail.n_rows == 1
    assert tail.start == month("2010-04")
    assert list(head.months()) + list(tail.months()) == list(m.months())


def test_align_rejects_name_collisions():
    with pytest.raises(ValidationError):
        align([fs([1, 2], name="x"), fs([3, 4], name="x")], fs([5, 6], name="y"))
    with pytest.raises(ValidationError):
        align([fs([1, 2], name="y")], fs([5, 6], name="y"))


def test_align_disjoint_is_empty():
    m = align([fs([1, 2], start="2012-01", name="x")], fs([5, 6], start="2010-01", name="y"))
    assert m.is_empty and m.n_rows == 0


def test_align_picks_latest_longest_run():
    # holes split the overlap into runs of 2 and 2; the later run wins the tie
    target = fs([1, 2, np.nan, 4, 5], name="y")
    m = align([fs([1, 1, 1, 1, 1], name="x")], target)
    assert m.months() == [month("2010-04"), month("2010-05")]
    assert list(m.y) == [4.0, 5.0]


@st.composite
def _series_with_holes(draw, name):
    start = draw(st.integers(min_value=0, max_value=6))
    length = draw(st.integers(min_value=1, max_value=14))
    values = draw(
        st.lists(
            st.one_of(st.none(), st.floats(min_value=-50, max_value=50)),
            min_size=length,
            max_size=length,
        )
    )
    arr = np.array([np.nan if v is None else v for v in values], dtype=float)
    return FeatureSeries(name=name, start=month("2010-01") + start, values=arr)


@given(target=_series_with_holes("y"), p1=_series_with_holes("a"), p2=_series_with_holes("b"))
@settings(max_examples=80, deadline=None)
def test_align_matches_brute_force(target, p1, p2):
    got = align([p1, p2], target)

    # oracle: walk every month, find the longest all-defined run, latest on ties
    all_series = [target, p1, p2]
    lo = max(s.start for s in all_series)
    hi = min(s.end for s in all_series)
    best = (0, None)
    run_start, run_len = None, 0
    m = lo
    while m < hi or run_start is not None:
        ok = m < hi and all(np.isfinite(s.value_at(m)) for s in all_series)
        if ok:
            if run_start is None:
                run_start = m
            run_len += 1
        else:
            if run_start is not None and run_len >= best[0]:
                best = (run_len, run_start)
            run_start, run_len = None, 0
        if m >= hi:
            break
        m = m + 1

    if best[0] == 0:
        assert got.is_empty
    else:
        assert got.n_rows == best[0]
        assert got.start == best[1]
        for i, mm in enumerate(got.months()):
            assert got.y[i] == target.value_at(mm)
