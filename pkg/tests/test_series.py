import io
from datetime import datetime

import numpy as np
import pytest

from loadfill.series import (
    NormStats,
    RawSeries,
    SeriesError,
    denormalize,
    fit_norm_stats,
    ingest_csv,
    normalize,
    resample,
    write_csv,
)


def _csv(rows):
    return "timestamp,load_kw,temperature_c\n" + "\n".join(rows) + "\n"


def test_ingest_identity_case():
    text = _csv(
        [
            "2021-06-01T00:00:00,10.0,20.0",
            "2021-06-01T00:15:00,11.0,20.5",
            "2021-06-01T00:30:00,12.0,21.0",
            "2021-06-01T00:45:00,13.0,21.5",
        ]
    )
    s = ingest_csv(text)
    assert len(s) == 4
    assert s.resolution == 15
    assert not s.missing_flags.any()
    np.testing.assert_allclose(s.load, [10, 11, 12, 13])


def test_ingest_missing_load_sets_flag():
    text = _csv(
        [
            "2021-06-01T00:00:00,10.0,20.0",
            "2021-06-01T00:15:00,11.0,20.5",
            "2021-06-01T00:30:00,,21.0",
            "2021-06-01T00:45:00,13.0,21.5",
        ]
    )
    s = ingest_csv(text)
    np.testing.assert_array_equal(s.missing_flags, [False, False, True, False])
    assert np.isnan(s.load[2])


def test_ingest_rejects_non_monotone_timestamps():
    text = _csv(
        [
            "2021-06-01T00:00:00,10.0,20.0",
            "2021-06-01T00:15:00,11.0,20.5",
            "2021-06-01T00:14:00,12.0,21.0",
        ]
    )
    with pytest.raises(SeriesError, match="step|monotone"):
        ingest_csv(text)


def test_ingest_rejects_inconsistent_step():
    text = _csv(
        [
            "2021-06-01T00:00:00,10.0,20.0",
            "2021-06-01T00:15:00,11.0,20.5",
            "2021-06-01T00:35:00,12.0,21.0",
        ]
    )
    with pytest.raises(SeriesError, match="inconsistent"):
        ingest_csv(text)


def test_ingest_rejects_empty_file():
    with pytest.raises(SeriesError, match="empty"):
        ingest_csv("")
    with pytest.raises(SeriesError, match="empty"):
        ingest_csv("timestamp,load_kw,temperature_c\n")


def test_ingest_interpolates_temperature_gaps():
    text = _csv(
        [
            "2021-06-01T00:00:00,10.0,20.0",
            "2021-06-01T00:15:00,11.0,",
            "2021-06-01T00:30:00,12.0,22.0",
        ]
    )
    s = ingest_csv(text)
    np.testing.assert_allclose(s.temperature, [20.0, 21.0, 22.0])


def test_csv_round_trip():
    text = _csv(
        [
            "2021-06-01T00:00:00,10.0,20.0",
            "2021-06-01T00:15:00,,20.5",
            "2021-06-01T00:30:00,12.0,21.0",
        ]
    )
    s = ingest_csv(text)
    buf = io.StringIO()
    write_csv(s, buf)
    s2 = ingest_csv(buf.getvalue())
    np.testing.assert_array_equal(s.missing_flags, s2.missing_flags)
    np.testing.assert_allclose(s.load[~s.missing_flags], s2.load[~s2.missing_flags])
    np.testing.assert_allclose(s.temperature, s2.temperature, atol=1e-4)


def _minute_series(n=60, start=1.0):
    return RawSeries(
        start_time=datetime(2021, 6, 1),
        resolution=1,
        load=np.arange(start, start + n),
        temperature=np.linspace(20, 21, n),
    )


def test_resample_means_bins():
    s = _minute_series(60)
    r = resample(s, 5)
    # first bin holds 1..5, arithmetic-mean oracle
    assert r.load[0] == pytest.approx(np.mean([1, 2, 3, 4, 5]))
    assert r.load[0] == pytest.approx(3.0)
    assert len(r) == 12
    assert r.resolution == 5
    # oracle for every bin
    np.testing.assert_allclose(r.load, np.arange(60, dtype=float).reshape(12, 5).mean(axis=1) + 1)


def test_resample_identity_target():
    s = _minute_series(30)
    r = resample(s, 1)
    assert r is s


def test_resample_missing_contaminates_bin():
    s = _minute_series(10)
    s.load[3] = np.nan
    s.missing_flags[3] = True
    r = resample(s, 5)
    assert r.missing_flags[0] and not r.missing_flags[1]
    assert np.isnan(r.load[0])


def test_resample_rejects_non_multiple():
    s = RawSeries(datetime(2021, 6, 1), 15, np.ones(8), np.ones(8))
    with pytest.raises(SeriesError, match="multiple"):
        resample(s, 20)


def test_fit_norm_stats_hand_case():
    s = RawSeries(datetime(2021, 6, 1), 30, np.array([90.0, 110.0]), np.array([1.0, 3.0]))
    st = fit_norm_stats(s)
    assert st.load_mean == pytest.approx(100.0)
    assert st.load_std == pytest.approx(10.0)  # population std
    np.testing.assert_allclose(st.norm_load(s.load), [-1.0, 1.0])


def test_fit_norm_stats_rejects_constant():
    s = RawSeries(datetime(2021, 6, 1), 30, np.full(4, 5.0), np.arange(4.0))
    with pytest.raises(SeriesError, match="variance"):
        fit_norm_stats(s)


def test_fit_norm_stats_skips_missing_points():
    load = np.array([90.0, np.nan, 110.0])
    s = RawSeries(datetime(2021, 6, 1), 30, load, np.array([1.0, 2.0, 3.0]))
    st = fit_norm_stats(s)
    assert st.load_mean == pytest.approx(100.0)


def test_normalize_round_trip():
    rng = np.random.default_rng(0)
    x = rng.normal(50, 12, size=200)
    x2 = denormalize(normalize(x, 50.0, 12.0), 50.0, 12.0)
    np.testing.assert_allclose(x2, x, rtol=1e-6)


def test_norm_stats_round_trip_via_methods():
    st = NormStats(40.0, 7.0, 10.0, 4.0)
    rng = np.random.default_rng(1)
    x = rng.normal(40, 7, size=128)
    np.testing.assert_allclose(st.denorm_load(st.norm_load(x)), x, rtol=1e-6)
    np.testing.assert_allclose(st.denorm_temp(st.norm_temp(x)), x, rtol=1e-6)


def test_norm_stats_rejects_zero_std():
    with pytest.raises(SeriesError):
        NormStats(1.0, 0.0, 0.0, 1.0)
