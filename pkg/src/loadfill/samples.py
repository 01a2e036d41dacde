"""24-hour training/testing/CVR windows cut from a series.

A sample is one 24-hour window packed as normalized channels: the load with
the event segment zeroed out, the temperature, and a boolean mask that is 1
inside the event. The event always sits at the center of the window so the
surrounding context is balanced. Windows are edge-padded up to the next
multiple of 32 steps (split evenly between the two ends) so every stride-2
stack in the networks divides cleanly.

On disk a sample set is a directory holding ``manifest.json`` plus one
little-endian float32 blob per split in (sample, channel, time) order; see
:data:`CHANNELS` for the channel layout.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from datetime import datetime, timedelta

import numpy as np

from loadfill.series import NormStats, RawSeries, SeriesError, fit_norm_stats

PAD_MULTIPLE = 32
MIN_EVENT_HOURS = 1.0
MAX_EVENT_HOURS = 4.0

# channel layout of the on-disk blobs
CHANNELS = ["load_masked", "temperature", "mask", "truth_or_measured", "prev_day"]

SET_VERSION = 1

SEASONS = ("winter", "spring", "summer", "fall")


def season_of(when: datetime) -> str:
    """Meteorological season: Dec-Feb winter, Mar-May spring, and so on."""
    return SEASONS[(when.month % 12) // 3]


@dataclass(frozen=True)
class EventSpec:
    """Location and kind of the gap inside a (padded) 24-hour window."""

    start_index: int
    length_steps: int
    kind: str = "mask"  # "mask" or "cvr"
    delta_v: float | None = None

    def __post_init__(self):
        if self.kind not in ("mask", "cvr"):
            raise ValueError(f"kind must be 'mask' or 'cvr', got {self.kind!r}")
        if self.start_index < 0 or self.length_steps < 1:
            raise ValueError("event must have start_index >= 0 and length_steps >= 1")
        if self.kind == "cvr":
            if self.delta_v is None or not (0.0 < self.delta_v <= 0.10):
                raise ValueError(f"delta_v must lie in (0, 0.10] for CVR events, got {self.delta_v}")

    @property
    def stop_index(self) -> int:
        return self.start_index + self.length_steps


@dataclass
class Sample:
    """One masked 24-hour window in normalized units.

    ``truth_event`` is the ground-truth load over the event (absent for CVR
    samples, whose counterfactual is unknown); ``measured_event`` is the
    actually metered load over a CVR event. ``prev_day_event`` carries the
    load 24 h before the event when that stretch was clean, for the
    persistence reference restorer.
    """

    load_masked: np.ndarray
    temperature: np.ndarray
    mask: np.ndarray
    event: EventSpec
    season: str
    origin: datetime
    truth_event: np.ndarray | None = None
    measured_event: np.ndarray | None = None
    prev_day_event: np.ndarray | None = None
    origin_index: int = -1
    pad_left: int = 0
    pad_right: int = 0
    resolution: int = 15

    def __post_init__(self):
        self.load_masked = np.asarray(self.load_masked, dtype=np.float32)
        self.temperature = np.asarray(self.temperature, dtype=np.float32)
        self.mask = np.asarray(self.mask, dtype=bool)
        w = len(self.load_masked)
        if len(self.temperature) != w or len(self.mask) != w:
            raise ValueError("channel lengths differ")
        if self.mask.sum() != self.event.length_steps:
            raise ValueError("mask does not contain exactly length_steps ones")
        if not self.mask[self.event.start_index : self.event.stop_index].all():
            raise ValueError("mask ones are not contiguous at the event position")
        if np.any(self.load_masked[self.mask] != 0.0):
            raise ValueError("masked load positions must be zero")
        for name in ("truth_event", "measured_event", "prev_day_event"):
            v = getattr(self, name)
            if v is not None:
                v = np.asarray(v, dtype=np.float32)
                if len(v) != self.event.length_steps:
                    raise ValueError(f"{name} must have length {self.event.length_steps}")
                setattr(self, name, v)

    @property
    def window_len(self) -> int:
        return len(self.load_masked)

    def real_window(self) -> np.ndarray:
        """Full unmasked window: observed outside the event, truth inside."""
        if self.truth_event is None:
            raise ValueError("sample has no ground truth (CVR sample)")
        out = self.load_masked.copy()
        out[self.event.start_index : self.event.stop_index] = self.truth_event
        return out

    def measured_window(self) -> np.ndarray:
        """Window as metered: observed outside, measured (reduced) inside."""
        seg = self.measured_event if self.measured_event is not None else self.truth_event
        if seg is None:
            raise ValueError("sample carries neither measured nor truth segment")
        out = self.load_masked.copy()
        out[self.event.start_index : self.event.stop_index] = seg
        return out

    def event_timestamps(self) -> list[datetime]:
        """Wall-clock time of each event step."""
        first = self.origin + timedelta(minutes=self.resolution * (self.event.start_index - self.pad_left))
        return [first + timedelta(minutes=self.resolution * k) for k in range(self.event.length_steps)]


@dataclass
class SampleSet:
    train: list[Sample]
    validation: list[Sample]
    test: list[Sample]
    cvr: list[Sample]
    stats: NormStats
    resolution: int
    seed: int = 0

    SPLITS = ("train", "validation", "test", "cvr")

    def split(self, name: str) -> list[Sample]:
        if name not in self.SPLITS:
            raise ValueError(f"unknown split {name!r}; expected one of {self.SPLITS}")
        return getattr(self, name)


def padded_window_len(steps_per_day: int) -> int:
    return ((steps_per_day + PAD_MULTIPLE - 1) // PAD_MULTIPLE) * PAD_MULTIPLE


def centered_event_start(window_len: int, length_steps: int) -> int:
    """Start index that centers the event in a window of ``window_len``."""
    return (window_len - length_steps) // 2


def _edge_pad(vec: np.ndarray, left: int, right: int) -> np.ndarray:
    if left == 0 and right == 0:
        return vec
    return np.pad(vec, (left, right), mode="edge")


def _build_sample(
    series: RawSeries,
    stats: NormStats,
    origin_index: int,
    event_start_real: int,
    length_steps: int,
    kind: str,
    delta_v: float | None,
) -> Sample:
    """Cut one window, normalize, zero the event and pad to the model width."""
    w_real = series.steps_per_day
    w_pad = padded_window_len(w_real)
    pad = w_pad - w_real
    pad_left, pad_right = pad // 2, pad - pad // 2

    sl = slice(origin_index, origin_index + w_real)
    load = stats.norm_load(series.load[sl]).astype(np.float32)
    temp = stats.norm_temp(series.temperature[sl]).astype(np.float32)

    seg = slice(event_start_real, event_start_real + length_steps)
    segment = load[seg].copy()
    if np.isnan(segment).any():
        segment = None  # genuinely missing data: nothing to learn or score from
    masked = load.copy()
    masked[seg] = 0.0
    mask = np.zeros(w_real, dtype=bool)
    mask[seg] = True

    # load 24 h before the event, if that stretch is fully observed
    prev = None
    lo = origin_index + event_start_real - w_real
    if lo >= 0:
        prev_sl = slice(lo, lo + length_steps)
        if not series.missing_flags[prev_sl].any():
            prev = stats.norm_load(series.load[prev_sl]).astype(np.float32)

    event = EventSpec(
        start_index=event_start_real + pad_left,
        length_steps=length_steps,
        kind=kind,
        delta_v=delta_v,
    )
    return Sample(
        load_masked=_edge_pad(masked, pad_left, pad_right),
        temperature=_edge_pad(temp, pad_left, pad_right),
        mask=np.pad(mask, (pad_left, pad_right)),
        event=event,
        season=season_of(series.timestamp(origin_index)),
        origin=series.timestamp(origin_index),
        truth_event=segment if kind == "mask" else None,
        measured_event=segment if kind == "cvr" else None,
        prev_day_event=prev,
        origin_index=origin_index,
        pad_left=pad_left,
        pad_right=pad_right,
        resolution=series.resolution,
    )


def make_inference_sample(series: RawSeries, stats: NormStats) -> Sample:
    """Build the sample for a window whose missing run IS the event.

    The series must contain exactly one contiguous run of missing load
    readings, between one and four hours long, with a clean 24-hour window
    around its center. Used to inpaint an ad-hoc window from a CSV with a
    trained model's normalization statistics.
    """
    flagged = np.flatnonzero(series.missing_flags)
    if flagged.size == 0:
        raise SeriesError("window has no missing segment to restore")
    runs = np.split(flagged, np.flatnonzero(np.diff(flagged) > 1) + 1)
    if len(runs) != 1:
        raise SeriesError(f"window has {len(runs)} missing runs; exactly one is restorable")
    run = runs[0]
    length = len(run)
    sph = series.steps_per_hour
    if not (MIN_EVENT_HOURS * sph <= length <= MAX_EVENT_HOURS * sph):
        raise SeriesError(
            f"missing run of {length} steps is outside the supported [1 h, 4 h] range at {series.resolution} min"
        )
    w_real = series.steps_per_day
    start_real = centered_event_start(w_real, length)
    origin = int(run[0]) - start_real
    if origin < 0 or origin + w_real > len(series):
        raise SeriesError("not enough context around the missing run for a centered 24-hour window")
    return _build_sample(series, stats, origin, start_real, length, "mask", None)


def generate_samples(
    series: RawSeries,
    mask_hours_range: tuple[float, float] = (1.0, 4.0),
    shift: int | None = None,
    seed: int = 0,
    exclude: list[tuple[int, int]] | None = None,
    stats: NormStats | None = None,
) -> SampleSet:
    """Slide a 24-hour window over the series and mask its center.

    ``shift`` is in steps and defaults to one hour. Windows that touch a
    missing reading or any ``exclude`` interval (half-open index ranges,
    e.g. CVR event periods) are dropped. Each kept window gets a mask whose
    length is drawn uniformly from the quantized hour range; windows are
    then shuffled under ``seed`` and split 70/15/15 by origin. Normalization
    statistics come from the train split unless ``stats`` is supplied.
    """
    lo_h, hi_h = mask_hours_range
    if not (MIN_EVENT_HOURS <= lo_h <= hi_h <= MAX_EVENT_HOURS):
        raise ValueError(f"mask hours must satisfy {MIN_EVENT_HOURS} <= min <= max <= {MAX_EVENT_HOURS}")
    sph = series.steps_per_hour
    w_real = series.steps_per_day
    if len(series) < w_real:
        raise SeriesError("series holds less than 24 hours of data")
    if shift is None:
        shift = sph
    if shift < 1:
        raise ValueError("shift must be >= 1 step")

    blocked = series.missing_flags.copy()
    for a, b in exclude or []:
        blocked[max(a, 0) : max(b, 0)] = True
    # windows whose [o, o + w_real) range contains any blocked step are out
    bad_cum = np.concatenate([[0], np.cumsum(blocked)])
    origins = [
        o for o in range(0, len(series) - w_real + 1, shift) if bad_cum[o + w_real] - bad_cum[o] == 0
    ]
    if not origins:
        raise SeriesError("no clean 24-hour windows available")

    rng = np.random.default_rng(seed)
    order = rng.permutation(len(origins))
    n = len(origins)
    n_train = int(round(0.70 * n))
    n_val = int(round(0.15 * n))
    split_of = {}
    for pos, idx in enumerate(order):
        if pos < n_train:
            split_of[origins[idx]] = "train"
        elif pos < n_train + n_val:
            split_of[origins[idx]] = "validation"
        else:
            split_of[origins[idx]] = "test"

    if stats is None:
        train_idx = np.concatenate(
            [np.arange(o, o + w_real) for o in origins if split_of[o] == "train"]
        )
        stats = fit_norm_stats(series, np.unique(train_idx))

    lo_steps = int(np.ceil(lo_h * sph))
    hi_steps = int(np.floor(hi_h * sph))
    lengths = rng.integers(lo_steps, hi_steps + 1, size=n)

    out = {"train": [], "validation": [], "test": []}
    for i, o in enumerate(origins):
        length = int(lengths[i])
        start_real = centered_event_start(w_real, length)
        sample = _build_sample(series, stats, o, start_real, length, "mask", None)
        out[split_of[o]].append(sample)

    return SampleSet(
        train=out["train"],
        validation=out["validation"],
        test=out["test"],
        cvr=[],
        stats=stats,
        resolution=series.resolution,
        seed=seed,
    )


def make_cvr_samples(
    series: RawSeries,
    events: list[tuple[datetime, int, float]],
    stats: NormStats,
) -> list[Sample]:
    """Build one sample per CVR event, the event centered in its window.

    ``events`` rows are (start_time, duration_minutes, delta_v). The window
    around each event must be fully observed outside the event itself.
    """
    sph = series.steps_per_hour
    w_real = series.steps_per_day
    samples = []
    for start_time, duration_min, delta_v in events:
        length = duration_min * sph // 60
        if duration_min * sph % 60 != 0:
            raise SeriesError(
                f"event duration {duration_min} min is not a whole number of {series.resolution}-min steps"
            )
        if not (MIN_EVENT_HOURS * 60 <= duration_min <= MAX_EVENT_HOURS * 60):
            raise SeriesError(f"event duration must lie in [1 h, 4 h], got {duration_min} min")
        e0 = series.index_of(start_time)
        start_real = centered_event_start(w_real, length)
        origin = e0 - start_real
        if origin < 0 or origin + w_real > len(series):
            raise SeriesError(f"window around event at {start_time.isoformat()} extends beyond the series")
        flags = series.missing_flags[origin : origin + w_real].copy()
        flags[start_real : start_real + length] = False
        if flags.any():
            raise SeriesError(f"window around event at {start_time.isoformat()} has missing data outside the event")
        samples.append(_build_sample(series, stats, origin, start_real, length, "cvr", delta_v))
    return samples


# ---------------------------------------------------------------------------
# persistence: manifest.json + per-split float32 blobs


def _pack_split(samples: list[Sample]) -> tuple[np.ndarray, list[dict]]:
    if not samples:
        return np.zeros((0,), dtype=np.float32), []
    w = samples[0].window_len
    blob = np.zeros((len(samples), len(CHANNELS), w), dtype=np.float32)
    meta = []
    for i, s in enumerate(samples):
        blob[i, 0] = s.load_masked
        blob[i, 1] = s.temperature
        blob[i, 2] = s.mask.astype(np.float32)
        seg = s.truth_event if s.truth_event is not None else s.measured_event
        aux = s.load_masked.copy()
        aux[s.event.start_index : s.event.stop_index] = seg
        blob[i, 3] = aux
        prev = np.full(w, np.nan, dtype=np.float32)
        if s.prev_day_event is not None:
            prev[s.event.start_index : s.event.stop_index] = s.prev_day_event
        blob[i, 4] = prev
        meta.append(
            {
                "event_start": s.event.start_index,
                "event_length": s.event.length_steps,
                "kind": s.event.kind,
                "delta_v": s.event.delta_v,
                "season": s.season,
                "origin": s.origin.isoformat(),
                "origin_index": s.origin_index,
                "pad_left": s.pad_left,
                "pad_right": s.pad_right,
            }
        )
    return blob, meta


def save_sample_set(sample_set: SampleSet, directory: str) -> None:
    os.makedirs(directory, exist_ok=True)
    manifest = {
        "version": SET_VERSION,
        "resolution": sample_set.resolution,
        "seed": sample_set.seed,
        "stats": sample_set.stats.to_dict(),
        "channels": CHANNELS,
        "counts": {},
        "samples": {},
    }
    for name in ("train", "validation", "test", "cvr"):
        samples = sample_set.split(name)
        blob, meta = _pack_split(samples)
        manifest["counts"][name] = len(samples)
        manifest["samples"][name] = meta
        if len(samples):
            manifest.setdefault("window_len", samples[0].window_len)
        blob.astype("<f4").tofile(os.path.join(directory, f"{name}.bin"))
    with open(os.path.join(directory, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=1)


def load_sample_set(directory: str) -> SampleSet:
    with open(os.path.join(directory, "manifest.json")) as fh:
        manifest = json.load(fh)
    if manifest.get("version") != SET_VERSION:
        raise SeriesError(f"unsupported sample-set version {manifest.get('version')}")
    stats = NormStats.from_dict(manifest["stats"])
    resolution = manifest["resolution"]
    w = manifest.get("window_len", 0)
    splits = {}
    for name in ("train", "validation", "test", "cvr"):
        count = manifest["counts"][name]
        samples = []
        if count:
            blob = np.fromfile(os.path.join(directory, f"{name}.bin"), dtype="<f4")
            blob = blob.reshape(count, len(CHANNELS), w)
            for i, meta in enumerate(manifest["samples"][name]):
                seg = slice(meta["event_start"], meta["event_start"] + meta["event_length"])
                kind = meta["kind"]
                aux = blob[i, 3, seg].copy()
                prev = blob[i, 4, seg].copy()
                samples.append(
                    Sample(
                        load_masked=blob[i, 0],
                        temperature=blob[i, 1],
                        mask=blob[i, 2] > 0.5,
                        event=EventSpec(meta["event_start"], meta["event_length"], kind, meta["delta_v"]),
                        season=meta["season"],
                        origin=datetime.fromisoformat(meta["origin"]),
                        truth_event=aux if kind == "mask" else None,
                        measured_event=aux if kind == "cvr" else None,
                        prev_day_event=None if np.isnan(prev).any() else prev,
                        origin_index=meta["origin_index"],
                        pad_left=meta["pad_left"],
                        pad_right=meta["pad_right"],
                        resolution=resolution,
                    )
                )
        splits[name] = samples
    return SampleSet(
        train=splits["train"],
        validation=splits["validation"],
        test=splits["test"],
        cvr=splits["cvr"],
        stats=stats,
        resolution=resolution,
        seed=manifest["seed"],
    )
