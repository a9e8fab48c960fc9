"""Batch-series diagnostics: autocorrelation, refill cycles, i.i.d. checks."""

import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sortbatch.batcher import FULL_SORT, PARTIAL_SORT, UNSORTED, BatchPlanConfig, run_epochs
from sortbatch.diagnostics import (
    METRICS,
    BatchSeries,
    autocorrelation,
    cycle_analysis,
    default_max_lag,
    extract_series,
    iid_report,
    iid_report_to_dict,
    policy_iid_report,
    write_iid_report_json,
    write_series_csv,
)

from .helpers import make_corpus
from .test_cost import batch_of


# ---------------------------------------------------------------------------
# extract_series
# ---------------------------------------------------------------------------


def test_extract_padded_src_series():
    batches = [batch_of([2, 1]), batch_of([5, 3], iteration=1), batch_of([3, 3], iteration=2)]
    series = extract_series(batches, "padded_src")
    assert series.values == (2.0, 5.0, 3.0)
    assert series.metric_tag == "padded_src"


def test_extract_mean_src():
    series = extract_series([batch_of([1, 3])], "mean_src")
    assert series.values == (2.0,)


def test_extract_all_registered_metrics():
    batches = [batch_of([2, 4], [1, 5])]
    for tag in METRICS:
        extract_series(batches, tag)


def test_extract_rejects_empty_stream():
    with pytest.raises(ValueError):
        extract_series([], "padded_src")


def test_extract_rejects_unknown_tag():
    with pytest.raises(ValueError, match="unknown metric"):
        extract_series([batch_of([1])], "perplexity")


def test_series_rejects_bad_values():
    with pytest.raises(ValueError):
        BatchSeries((1.0, float("nan")), "padded_src")
    with pytest.raises(ValueError):
        BatchSeries((1.0, -2.0), "padded_src")


# ---------------------------------------------------------------------------
# autocorrelation
# ---------------------------------------------------------------------------


def test_alternating_series_is_anticorrelated():
    series = BatchSeries(tuple(float(1 + i % 2) for i in range(100)), "padded_src")
    result = autocorrelation(series, max_lag=2)
    assert abs(result.lags[1] - (-1.0)) < 0.05
    assert abs(result.lags[2] - 1.0) < 0.05


def test_iid_series_is_uncorrelated():
    rng = np.random.default_rng(0)
    series = BatchSeries(tuple(rng.uniform(0, 10, size=10_000)), "padded_src")
    result = autocorrelation(series, max_lag=1)
    assert abs(result.lags[1]) < 0.05
    assert not result.degenerate


def test_constant_series_degenerate_zero():
    series = BatchSeries((4.0,) * 50, "padded_src")
    result = autocorrelation(series, max_lag=3)
    assert result.degenerate
    assert all(r == 0.0 for r in result.lags.values())


def test_too_short_series_rejected():
    series = BatchSeries((1.0, 2.0, 3.0), "padded_src")
    with pytest.raises(ValueError, match="too short"):
        autocorrelation(series, max_lag=1)
    with pytest.raises(ValueError):
        autocorrelation(series, max_lag=0)


@given(st.lists(st.integers(0, 100).map(float), min_size=8, max_size=60))
@settings(max_examples=60)
def test_autocorr_bounded_and_reversal_symmetric(values):
    series = BatchSeries(tuple(values), "padded_src")
    reverse = BatchSeries(tuple(reversed(values)), "padded_src")
    max_lag = min(4, len(values) - 3)
    fwd = autocorrelation(series, max_lag)
    bwd = autocorrelation(reverse, max_lag)
    for lag in fwd.lags:
        assert -1.0 <= fwd.lags[lag] <= 1.0
        assert math.isclose(fwd.lags[lag], bwd.lags[lag], abs_tol=1e-9)


# ---------------------------------------------------------------------------
# cycle_analysis
# ---------------------------------------------------------------------------


def test_single_cycle_hand_trace():
    corpus = make_corpus([1, 2, 3, 5])
    config = BatchPlanConfig(m=2, k=2, policy=PARTIAL_SORT, seed=0)
    batches = run_epochs(corpus, config)
    assert [b.padded_src for b in batches] == [2, 5]
    report = cycle_analysis(batches, config)
    assert report.cycle_score == 1.0
    assert len(report.cycles) == 1
    assert report.cycles[0].min_padded_src == 2
    assert report.cycles[0].max_padded_src == 5
    assert not report.uninformative


@given(st.integers(0, 2**31), st.integers(1, 4), st.integers(1, 4), st.integers(1, 5))
@settings(max_examples=40, deadline=None)
def test_divisible_epochs_score_exactly_one(seed, m, k, cycles):
    n = m * k * cycles
    corpus = make_corpus([(i * 13 % 17 + 1, i * 7 % 11 + 1) for i in range(n)])
    config = BatchPlanConfig(m=m, k=k, policy=PARTIAL_SORT, seed=seed)
    batches = run_epochs(corpus, config)
    report = cycle_analysis(batches, config)
    assert report.cycle_score == 1.0
    assert all(c.n_batches == k for c in report.cycles)
    assert len(report.cycles) == cycles


def test_k1_cycles_flagged_uninformative():
    corpus = make_corpus([3, 1, 4, 1, 5])
    config = BatchPlanConfig(m=2, k=1, policy=PARTIAL_SORT, seed=1)
    report = cycle_analysis(run_epochs(corpus, config), config)
    assert report.uninformative
    assert report.cycle_score == 1.0


def test_cycle_analysis_rejects_other_policies():
    corpus = make_corpus([1, 2, 3, 4])
    config = BatchPlanConfig(m=2, k=1, policy=UNSORTED, seed=0)
    batches = run_epochs(corpus, config)
    with pytest.raises(ValueError, match="partial_sort"):
        cycle_analysis(batches, config)


def test_cycles_segment_per_epoch():
    corpus = make_corpus([(i % 6 + 1, i % 6 + 1) for i in range(12)])
    config = BatchPlanConfig(m=2, k=3, policy=PARTIAL_SORT, seed=2, epochs=2)
    report = cycle_analysis(run_epochs(corpus, config), config)
    assert len(report.cycles) == 4  # 2 cycles per epoch
    assert [c.epoch for c in report.cycles] == [0, 0, 1, 1]


# ---------------------------------------------------------------------------
# iid_report / policy_iid_report
# ---------------------------------------------------------------------------


def test_default_max_lag_clamps():
    assert default_max_lag(BatchPlanConfig(m=2, k=10, policy=PARTIAL_SORT), 9) == 6
    assert default_max_lag(BatchPlanConfig(m=2, k=10, policy=PARTIAL_SORT), 1000) == 20
    assert default_max_lag(BatchPlanConfig(m=2, k=1, policy=UNSORTED), 1000) == 2


def test_iid_report_structure():
    corpus = make_corpus([(i % 11 + 1, i % 5 + 1) for i in range(64)])
    config = BatchPlanConfig(m=4, k=4, policy=PARTIAL_SORT, seed=0)
    report = iid_report(run_epochs(corpus, config), config)
    assert report.metric_tag == "padded_src"
    assert set(report.autocorr.lags) == set(range(1, 9))
    assert report.cycle is not None and report.cycle.cycle_score == 1.0
    assert report.series_mean > 0


def test_iid_report_no_cycles_outside_partial_sort():
    corpus = make_corpus([(i % 11 + 1, i % 5 + 1) for i in range(64)])
    config = BatchPlanConfig(m=4, k=1, policy=FULL_SORT, seed=0)
    report = iid_report(run_epochs(corpus, config), config)
    assert report.cycle is None


def test_unsorted_series_passes_randomness_sanity():
    corpus = make_corpus([(i * 29 % 40 + 1, i * 31 % 35 + 1) for i in range(6400)])
    config = BatchPlanConfig(m=8, k=1, policy=UNSORTED, seed=0)
    batches = run_epochs(corpus, config)
    report = iid_report(batches, config)
    assert abs(report.autocorr.lags[1]) < 3 / math.sqrt(len(batches))


def test_iid_report_degrades_on_tiny_streams():
    corpus = make_corpus([2, 3, 4])
    config = BatchPlanConfig(m=3, k=1, policy=UNSORTED, seed=0)
    report = iid_report(run_epochs(corpus, config), config)
    assert report.autocorr.lags == {}
    assert report.autocorr.degenerate


def test_policy_iid_report_runs_each_config():
    corpus = make_corpus([(i % 14 + 1, i % 9 + 1) for i in range(128)])
    configs = [
        BatchPlanConfig(m=4, k=1, policy=UNSORTED, seed=0),
        BatchPlanConfig(m=4, k=4, policy=PARTIAL_SORT, seed=0),
    ]
    reports = policy_iid_report(corpus, configs)
    assert len(reports) == 2
    assert reports[0].cycle is None
    assert reports[1].cycle is not None
    with pytest.raises(ValueError):
        policy_iid_report(corpus, [])


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def test_iid_report_json_shape(tmp_path):
    corpus = make_corpus([(i % 7 + 1, i % 7 + 1) for i in range(48)])
    config = BatchPlanConfig(m=3, k=2, policy=PARTIAL_SORT, seed=5)
    report = iid_report(run_epochs(corpus, config), config)
    d = iid_report_to_dict(report)
    assert d["metric_tag"] == "padded_src"
    assert d["cycle"]["cycle_score"] == report.cycle.cycle_score
    assert all(isinstance(k, str) for k in d["lag_autocorrs"])
    path = tmp_path / "iid.json"
    write_iid_report_json(report, path)
    assert json.loads(path.read_text())["config"]["m"] == 3


def test_series_csv_dump(tmp_path):
    series = extract_series([batch_of([2, 1]), batch_of([5, 3], iteration=1)], "padded_src")
    path = tmp_path / "series.csv"
    write_series_csv(series, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "index,padded_src"
    assert lines[1] == "0,2.000000"
    assert len(lines) == 3
