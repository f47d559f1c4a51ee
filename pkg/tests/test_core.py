import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mqgraph.core import (
    CsvParseError,
    CsvStructureError,
    MappingError,
    MultivariateSeries,
    QuantileRangeError,
    SeriesTooShortError,
    compute_quantiles,
    load_csv,
    quantile_sequence,
    which_quantile,
)


def order_stat_quantile(values, p):
    # textbook linear interpolation between order statistics, h = (n-1)p
    xs = sorted(values)
    h = (len(xs) - 1) * p
    lo = math.floor(h)
    hi = min(lo + 1, len(xs) - 1)
    return xs[lo] + (h - lo) * (xs[hi] - xs[lo])


def test_load_csv_plain(tmp_path):
    path = tmp_path / "s.csv"
    path.write_text("1,5\n2,6\n3,7\n")
    mts = load_csv(path)
    assert (mts.m, mts.T) == (2, 3)
    assert mts[0].tolist() == [1, 2, 3]
    assert mts[1].tolist() == [5, 6, 7]


def test_load_csv_skips_header(tmp_path):
    path = tmp_path / "s.csv"
    path.write_text("a,b\n1,2\n3,4\n")
    mts = load_csv(path)
    assert (mts.m, mts.T) == (2, 2)


def test_load_csv_reports_bad_cell(tmp_path):
    path = tmp_path / "s.csv"
    path.write_text("1,x\n2,3\n")
    with pytest.raises(CsvParseError) as exc:
        load_csv(path)
    assert (exc.value.row, exc.value.col) == (1, 2)


def test_load_csv_ragged(tmp_path):
    path = tmp_path / "s.csv"
    path.write_text("1,2\n3\n")
    with pytest.raises(CsvStructureError):
        load_csv(path)


def test_load_csv_too_short(tmp_path):
    path = tmp_path / "s.csv"
    path.write_text("x,y\n1,2\n")
    with pytest.raises(SeriesTooShortError):
        load_csv(path)


def test_series_rejects_nan_and_ragged():
    with pytest.raises(MappingError):
        MultivariateSeries([[1.0, np.nan]])
    with pytest.raises(MappingError):
        MultivariateSeries.from_components([[1, 2, 3], [1, 2]])


@pytest.mark.parametrize(
    "ts, eta, expected",
    [
        ([1, 2, 3, 4], 2, [order_stat_quantile([1, 2, 3, 4], 0.5), 4.0]),
        ([7, 7, 7, 7], 4, [7, 7, 7, 7]),
        ([1, 2, 3, 4], 1, [4.0]),
    ],
)
def test_compute_quantiles_examples(ts, eta, expected):
    b = compute_quantiles(ts, eta)
    assert b.boundaries.tolist() == pytest.approx(expected)
    assert b.probs.tolist() == pytest.approx([(i + 1) / eta for i in range(eta)])


def test_median_example_value():
    assert order_stat_quantile([1, 2, 3, 4], 0.5) == 2.5


def test_compute_quantiles_rejects_zero_eta():
    with pytest.raises(MappingError):
        compute_quantiles([1, 2, 3], 0)


@pytest.mark.parametrize(
    "value, boundaries, expected",
    [(1, [2.5, 4.0], 1), (4, [2.5, 4.0], 2), (7, [7, 7, 7, 7], 1)],
)
def test_which_quantile_examples(value, boundaries, expected):
    b = compute_quantiles(boundaries, len(boundaries))
    # rebuild the exact boundaries for the table rows
    b = type(b)(np.asarray(boundaries, dtype=float), b.probs)
    assert which_quantile(value, b) == expected


def test_which_quantile_out_of_range():
    b = compute_quantiles([1, 2, 3, 4], 2)
    with pytest.raises(QuantileRangeError):
        which_quantile(4.5, b)


finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)


@settings(max_examples=300, deadline=None)
@given(st.lists(finite, min_size=2, max_size=60), st.integers(1, 12))
def test_quantiles_match_order_statistics(values, eta):
    b = compute_quantiles(values, eta)
    expected = [order_stat_quantile(values, (i + 1) / eta) for i in range(eta)]
    assert np.allclose(b.boundaries, expected, rtol=1e-9, atol=1e-6)
    assert np.all(np.diff(b.boundaries) >= 0)
    assert b.boundaries[-1] == max(values)


@settings(max_examples=300, deadline=None)
@given(st.lists(finite, min_size=2, max_size=60), st.integers(1, 12))
def test_which_quantile_monotone_and_covers_last(values, eta):
    b = compute_quantiles(values, eta)
    idx = [which_quantile(v, b) for v in values]
    for (va, ia) in zip(values, idx):
        for (vb, ib) in zip(values, idx):
            if va <= vb:
                assert ia <= ib
    # smallest index i with v <= q_i, by linear scan
    for v, i in zip(values, idx):
        assert i == next(k + 1 for k, q in enumerate(b.boundaries) if v <= q)
    assert quantile_sequence(values, b).tolist() == idx
    assert max(idx) <= eta
    # the maximum lands on the first boundary equal to it, which is the last distinct one
    assert idx[values.index(max(values))] == int(np.searchsorted(b.boundaries, max(values))) + 1


@pytest.mark.parametrize("T", range(2, 13))
def test_eta_equals_T_gives_distinct_bins_for_increasing_series(T):
    rng = np.random.default_rng(T)
    values = np.cumsum(rng.uniform(0.1, 1.0, T))
    b = compute_quantiles(values, T)
    idx = [which_quantile(v, b) for v in values]
    assert len(set(idx)) == T
