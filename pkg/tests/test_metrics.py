import math
import warnings
from datetime import datetime

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from loadfill.metrics import (
    EvalEvent,
    bias,
    energy_error,
    event_bias,
    event_energy_error,
    event_nrmse,
    metrics_report,
    nrmse,
    overlaps_time_of_day,
    seasonal_bias,
)


def brute_force_nrmse(events):
    """Independent scalar-loop evaluation of the aggregate nRMSE."""
    vals = []
    for y, y_hat in events:
        sq = 0.0
        mag = 0.0
        for a, b in zip(y, y_hat):
            sq += (a - b) ** 2
            mag += abs(a)
        t = len(y)
        vals.append(math.sqrt(sq / t) / (mag / t))
    return sum(vals) / len(vals)


def brute_force_ee(events):
    vals = []
    for y, y_hat in events:
        acc = 0.0
        tot = 0.0
        for a, b in zip(y, y_hat):
            acc += a - b
            tot += a
        vals.append(abs(acc) / tot)
    return sum(vals) / len(vals)


def brute_force_bias(events):
    vals = []
    for y, y_hat in events:
        s = 0.0
        for a, b in zip(y, y_hat):
            s += (a - b) / a
        vals.append(s / len(y) * 100.0)
    return sum(vals) / len(vals)


def random_event_sets(n_sets=100, seed=0):
    rng = np.random.default_rng(seed)
    for _ in range(n_sets):
        n_events = rng.integers(1, 6)
        events = []
        for _ in range(n_events):
            t = rng.integers(2, 20)
            y = rng.uniform(10.0, 200.0, size=t)
            y_hat = y * rng.uniform(0.8, 1.2, size=t)
            events.append((y, y_hat))
        yield events


class TestHandCases:
    def test_nrmse_exact_match_zero(self):
        y = np.array([50.0, 60.0])
        assert event_nrmse(y, y) == 0.0

    def test_nrmse_hand_case(self):
        y = np.array([100.0, 100.0])
        y_hat = np.array([90.0, 110.0])
        assert event_nrmse(y, y_hat) == pytest.approx(0.10)

    def test_ee_cancellation(self):
        y = np.array([100.0, 100.0])
        y_hat = np.array([90.0, 110.0])
        assert event_energy_error(y, y_hat) == 0.0

    def test_ee_hand_case(self):
        y = np.array([100.0, 100.0])
        y_hat = np.array([90.0, 90.0])
        assert event_energy_error(y, y_hat) == pytest.approx(0.10)

    def test_bias_symmetric_errors_cancel(self):
        y = np.array([100.0, 100.0])
        y_hat = np.array([90.0, 110.0])
        assert event_bias(y, y_hat) == pytest.approx(0.0)

    def test_bias_constant_ratio(self):
        y = np.full(7, 80.0)
        assert event_bias(y, 0.98 * y) == pytest.approx(2.0)

    def test_aggregates_are_means(self):
        events = [(np.array([100.0, 100.0]), np.array([90.0, 110.0])), (np.array([50.0]), np.array([50.0]))]
        assert nrmse(events) == pytest.approx(0.05)
        assert energy_error(events) == pytest.approx(0.0)
        assert bias(events) == pytest.approx(0.0)


class TestOracleEquivalence:
    def test_nrmse_matches_brute_force(self):
        for events in random_event_sets(100, seed=1):
            assert nrmse(events) == pytest.approx(brute_force_nrmse(events), rel=1e-9)

    def test_ee_matches_brute_force(self):
        for events in random_event_sets(100, seed=2):
            assert energy_error(events) == pytest.approx(brute_force_ee(events), rel=1e-9)

    def test_bias_matches_brute_force(self):
        for events in random_event_sets(100, seed=3):
            assert bias(events) == pytest.approx(brute_force_bias(events), rel=1e-9, abs=1e-9)


@settings(max_examples=60, deadline=None)
@given(
    scale=st.floats(min_value=1e-3, max_value=1e4),
    seed=st.integers(min_value=0, max_value=1000),
)
def test_metrics_scale_invariance(scale, seed):
    rng = np.random.default_rng(seed)
    y = rng.uniform(10.0, 100.0, size=8)
    y_hat = y * rng.uniform(0.7, 1.3, size=8)
    events = [(y, y_hat)]
    scaled = [(scale * y, scale * y_hat)]
    assert nrmse(scaled) == pytest.approx(nrmse(events), rel=1e-9)
    assert energy_error(scaled) == pytest.approx(energy_error(events), rel=1e-9)
    assert bias(scaled) == pytest.approx(bias(events), rel=1e-9, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(min_value=0, max_value=10000))
def test_nrmse_zero_iff_pointwise_equal(seed):
    rng = np.random.default_rng(seed)
    y = rng.uniform(1.0, 50.0, size=6)
    noise = rng.normal(0, 0.5, size=6)
    value = event_nrmse(y, y + noise)
    if np.allclose(noise, 0):
        assert value == 0.0
    else:
        assert value > 0.0


class TestGuards:
    def test_zero_mean_event_excluded_with_warning(self):
        events = [
            (np.array([0.0, 0.0]), np.array([1.0, 1.0])),
            (np.array([100.0, 100.0]), np.array([90.0, 110.0])),
        ]
        with pytest.warns(UserWarning, match="excluded"):
            assert nrmse(events) == pytest.approx(0.10)

    def test_all_excluded_rejected(self):
        with pytest.raises(ValueError, match="no event"):
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                bias([(np.array([0.0]), np.array([1.0]))])

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError, match="equal-length"):
            event_nrmse(np.ones(3), np.ones(4))


def _event(i, season, hour, dur_steps=8, err=1.02, resolution=15):
    y = np.full(dur_steps, 100.0)
    return EvalEvent(
        event_id=i,
        truth=y,
        estimate=y / err,
        season=season,
        start_time=datetime(2021, 7, 1, hour, 0),
        resolution=resolution,
    )


class TestSeasonalBias:
    def test_noop_filter_equals_plain_bias(self):
        events = [_event(0, "summer", 14), _event(1, "summer", 15)]
        value = seasonal_bias(events, "summer", (0.0, 24.0))
        expected = bias([(e.truth, e.estimate) for e in events])
        assert value == pytest.approx(expected)

    def test_disjoint_season_rejected(self):
        events = [_event(0, "summer", 14)]
        with pytest.raises(ValueError, match="widen"):
            seasonal_bias(events, "winter", (0.0, 24.0))

    def test_subset_matches_recomputation(self):
        keep = [_event(0, "summer", 14, err=1.05), _event(1, "summer", 15, err=1.10)]
        drop = [_event(2, "winter", 14), _event(3, "summer", 2)]
        value = seasonal_bias(keep + drop, "summer", (13.0, 19.0))
        expected = bias([(e.truth, e.estimate) for e in keep])
        assert value == pytest.approx(expected)

    def test_overlap_rule(self):
        assert overlaps_time_of_day((14.0, 17.0), (16.0, 20.0))
        assert not overlaps_time_of_day((14.0, 16.0), (16.0, 20.0))
        with pytest.raises(ValueError):
            overlaps_time_of_day((1.0, 2.0), (20.0, 30.0))


def test_metrics_report_aggregates_match_rows():
    events = [_event(0, "summer", 14, err=1.05), _event(1, "winter", 3, err=0.9)]
    rep = metrics_report(events)
    assert rep.n_events == 2
    assert rep.nrmse == pytest.approx(np.mean([r["nrmse"] for r in rep.per_event]))
    assert rep.ee == pytest.approx(np.mean([r["ee"] for r in rep.per_event]))
    assert rep.bias == pytest.approx(np.mean([r["bias"] for r in rep.per_event]))
