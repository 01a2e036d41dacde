"""Timestamped load/temperature series: ingestion, resampling, normalization.

A series holds a load profile (kW) and one explanatory temperature profile
(deg C) on a fixed time grid. Missing load readings are carried as NaN plus a
boolean flag vector; temperature gaps are linearly interpolated at ingest so
downstream code never sees a temperature hole.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from datetime import datetime, timedelta

import numpy as np

ALLOWED_RESOLUTIONS = (1, 5, 15, 30, 60)

CSV_HEADER = ["timestamp", "load_kw", "temperature_c"]


class SeriesError(ValueError):
    """Raised when a series file or operation violates its contract."""


@dataclass
class RawSeries:
    """Load + temperature series at a fixed resolution.

    ``load`` is NaN wherever ``missing_flags`` is set. All three vectors share
    the same length.
    """

    start_time: datetime
    resolution: int
    load: np.ndarray
    temperature: np.ndarray
    missing_flags: np.ndarray = field(default=None)

    def __post_init__(self):
        self.load = np.asarray(self.load, dtype=np.float64)
        self.temperature = np.asarray(self.temperature, dtype=np.float64)
        if self.missing_flags is None:
            self.missing_flags = np.isnan(self.load)
        self.missing_flags = np.asarray(self.missing_flags, dtype=bool)
        if self.resolution not in ALLOWED_RESOLUTIONS:
            raise SeriesError(f"resolution must be one of {ALLOWED_RESOLUTIONS}, got {self.resolution}")
        n = len(self.load)
        if n == 0:
            raise SeriesError("series is empty")
        if len(self.temperature) != n or len(self.missing_flags) != n:
            raise SeriesError("load, temperature and missing_flags must have identical length")
        if np.isnan(self.temperature).any():
            raise SeriesError("temperature contains gaps; interpolate before constructing the series")

    def __len__(self) -> int:
        return len(self.load)

    @property
    def steps_per_hour(self) -> int:
        return 60 // self.resolution

    @property
    def steps_per_day(self) -> int:
        return 24 * self.steps_per_hour

    def timestamp(self, index: int) -> datetime:
        return self.start_time + timedelta(minutes=self.resolution * int(index))

    def index_of(self, when: datetime) -> int:
        """Exact grid index of a timestamp; rejects off-grid times."""
        delta = (when - self.start_time).total_seconds()
        step = self.resolution * 60
        idx, rem = divmod(delta, step)
        if rem != 0:
            raise SeriesError(f"timestamp {when.isoformat()} is not on the {self.resolution}-min grid")
        idx = int(idx)
        if not 0 <= idx < len(self):
            raise SeriesError(f"timestamp {when.isoformat()} lies outside the series")
        return idx


@dataclass(frozen=True)
class NormStats:
    """Global z-score statistics, fitted on the training range only."""

    load_mean: float
    load_std: float
    temp_mean: float
    temp_std: float

    def __post_init__(self):
        if not (self.load_std > 0 and self.temp_std > 0):
            raise SeriesError(
                f"normalization needs positive spread, got load_std={self.load_std}, temp_std={self.temp_std}"
            )

    def norm_load(self, x):
        return (np.asarray(x, dtype=np.float64) - self.load_mean) / self.load_std

    def denorm_load(self, x):
        return np.asarray(x, dtype=np.float64) * self.load_std + self.load_mean

    def norm_temp(self, x):
        return (np.asarray(x, dtype=np.float64) - self.temp_mean) / self.temp_std

    def denorm_temp(self, x):
        return np.asarray(x, dtype=np.float64) * self.temp_std + self.temp_mean

    def to_dict(self) -> dict:
        return {
            "load_mean": self.load_mean,
            "load_std": self.load_std,
            "temp_mean": self.temp_mean,
            "temp_std": self.temp_std,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NormStats":
        return cls(d["load_mean"], d["load_std"], d["temp_mean"], d["temp_std"])


def _parse_timestamp(text: str, line_no: int) -> datetime:
    try:
        return datetime.fromisoformat(text.strip())
    except ValueError as exc:
        raise SeriesError(f"line {line_no}: bad timestamp {text!r}: {exc}") from None


def ingest_csv(stream) -> RawSeries:
    """Parse a ``timestamp,load_kw,temperature_c`` CSV into a RawSeries.

    Empty load fields become missing flags; temperature gaps are linearly
    interpolated. Rejects files with non-monotone timestamps or an
    inconsistent step size.
    """
    if isinstance(stream, (str, bytes)):
        stream = io.StringIO(stream if isinstance(stream, str) else stream.decode())
    reader = csv.reader(stream)
    try:
        header = next(reader)
    except StopIteration:
        raise SeriesError("empty file") from None
    header = [h.strip().lower() for h in header]
    if header != CSV_HEADER:
        raise SeriesError(f"expected header {','.join(CSV_HEADER)}, got {','.join(header)}")

    times: list[datetime] = []
    loads: list[float] = []
    temps: list[float] = []
    for line_no, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 3:
            raise SeriesError(f"line {line_no}: expected 3 fields, got {len(row)}")
        times.append(_parse_timestamp(row[0], line_no))
        loads.append(float(row[1]) if row[1].strip() else np.nan)
        temps.append(float(row[2]) if row[2].strip() else np.nan)
    if not times:
        raise SeriesError("empty file")

    deltas = {int((b - a).total_seconds()) for a, b in zip(times, times[1:])}
    if len(times) > 1:
        if any(d <= 0 for d in deltas):
            raise SeriesError("non-monotone timestamps")
        if len(deltas) != 1:
            raise SeriesError(f"inconsistent step size: found deltas {sorted(deltas)} seconds")
        step_s = deltas.pop()
        if step_s % 60 != 0 or step_s // 60 not in ALLOWED_RESOLUTIONS:
            raise SeriesError(f"step of {step_s} s is not a supported resolution")
        resolution = step_s // 60
    else:
        resolution = 60  # single row: resolution is undeterminable, assume hourly

    temp = np.asarray(temps, dtype=np.float64)
    bad = np.isnan(temp)
    if bad.all():
        raise SeriesError("temperature column is entirely empty")
    if bad.any():
        idx = np.arange(len(temp), dtype=np.float64)
        temp[bad] = np.interp(idx[bad], idx[~bad], temp[~bad])

    return RawSeries(start_time=times[0], resolution=resolution, load=np.asarray(loads), temperature=temp)


def write_csv(series: RawSeries, stream) -> None:
    """Inverse of :func:`ingest_csv`; missing loads become empty fields."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for i in range(len(series)):
        load = "" if series.missing_flags[i] else f"{series.load[i]:.6f}"
        writer.writerow([series.timestamp(i).isoformat(), load, f"{series.temperature[i]:.4f}"])


def resample(series: RawSeries, target: int) -> RawSeries:
    """Average down to a coarser resolution.

    Each target bin is the arithmetic mean of its constituent steps; a bin is
    missing if any constituent step is missing. A trailing partial bin is
    dropped.
    """
    if target == series.resolution:
        return series
    if target % series.resolution != 0:
        raise SeriesError(f"target {target} min is not a multiple of the source resolution {series.resolution} min")
    if target not in ALLOWED_RESOLUTIONS:
        raise SeriesError(f"target must be one of {ALLOWED_RESOLUTIONS}, got {target}")
    factor = target // series.resolution
    n_bins = len(series) // factor
    if n_bins == 0:
        raise SeriesError("series shorter than one target bin")
    cut = n_bins * factor
    load = series.load[:cut].reshape(n_bins, factor)
    temp = series.temperature[:cut].reshape(n_bins, factor)
    flags = series.missing_flags[:cut].reshape(n_bins, factor).any(axis=1)
    with np.errstate(invalid="ignore"):
        load_mean = load.mean(axis=1)
    load_mean[flags] = np.nan
    return RawSeries(
        start_time=series.start_time,
        resolution=target,
        load=load_mean,
        temperature=temp.mean(axis=1),
        missing_flags=flags,
    )


def fit_norm_stats(series: RawSeries, train_range=None) -> NormStats:
    """Fit z-score statistics over a range of series indices.

    ``train_range`` may be a slice, an index array, or None for the whole
    series. The load statistics use non-missing points only; population
    (ddof=0) standard deviations throughout.
    """
    if train_range is None:
        train_range = slice(None)
    load = series.load[train_range]
    temp = series.temperature[train_range]
    flags = series.missing_flags[train_range]
    load = load[~flags]
    if load.size == 0 or temp.size == 0:
        raise SeriesError("training range holds no observed points")
    load_std = float(load.std())
    temp_std = float(temp.std())
    if load_std <= 0 or temp_std <= 0:
        raise SeriesError(
            "zero variance in training range "
            f"(load_std={load_std}, temp_std={temp_std}); cannot normalize a constant channel"
        )
    return NormStats(float(load.mean()), load_std, float(temp.mean()), temp_std)


def normalize(x, mean: float, std: float):
    """z-score a vector: (x - mean) / std."""
    if std <= 0:
        raise SeriesError(f"std must be positive, got {std}")
    return (np.asarray(x, dtype=np.float64) - mean) / std


def denormalize(x, mean: float, std: float):
    """Invert :func:`normalize`."""
    return np.asarray(x, dtype=np.float64) * std + mean
