"""Restoration accuracy metrics.

All three metrics compare ground truth y with an estimate over one event
segment, in kW, and aggregate as the plain mean over events:

* nrmse: per-event RMSE divided by the mean absolute truth;
* energy error: absolute accumulated energy difference over the event,
  divided by the event's total energy;
* bias: mean signed relative error, in percent (positive = estimate low).

Each is scale-invariant, so values agree whether events are in kW or MW.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from datetime import datetime, timedelta

import numpy as np


def _as_pair(y, y_hat):
    y = np.asarray(y, dtype=np.float64)
    y_hat = np.asarray(y_hat, dtype=np.float64)
    if y.shape != y_hat.shape or y.ndim != 1 or y.size == 0:
        raise ValueError(f"event vectors must be equal-length 1-D, got {y.shape} vs {y_hat.shape}")
    return y, y_hat


def event_nrmse(y, y_hat) -> float:
    y, y_hat = _as_pair(y, y_hat)
    denom = np.abs(y).mean()
    if denom == 0:
        raise ZeroDivisionError("event truth has zero mean magnitude")
    return float(np.sqrt(np.mean((y - y_hat) ** 2)) / denom)


def event_energy_error(y, y_hat) -> float:
    y, y_hat = _as_pair(y, y_hat)
    denom = y.sum()
    if denom == 0:
        raise ZeroDivisionError("event truth has zero total energy")
    return float(abs((y - y_hat).sum()) / denom)


def event_bias(y, y_hat) -> float:
    """Mean signed relative error of one event, in percent."""
    y, y_hat = _as_pair(y, y_hat)
    if np.any(y == 0):
        raise ZeroDivisionError("event truth contains a zero point")
    return float(np.mean((y - y_hat) / y) * 100.0)


def _aggregate(events, per_event_fn, what: str) -> float:
    values = []
    for i, (y, y_hat) in enumerate(events):
        try:
            values.append(per_event_fn(y, y_hat))
        except ZeroDivisionError as exc:
            warnings.warn(f"event {i} excluded from {what}: {exc}")
    if not values:
        raise ValueError(f"no event admissible for {what}")
    return float(np.mean(values))


def nrmse(events) -> float:
    """Mean per-event normalized RMSE; events are (truth, estimate) pairs."""
    return _aggregate(events, event_nrmse, "nrmse")


def energy_error(events) -> float:
    return _aggregate(events, event_energy_error, "energy error")


def bias(events) -> float:
    return _aggregate(events, event_bias, "bias")


@dataclass
class EvalEvent:
    """One restored test event with the metadata the reports need."""

    event_id: int
    truth: np.ndarray  # kW
    estimate: np.ndarray  # kW
    season: str
    start_time: datetime
    resolution: int

    @property
    def duration_steps(self) -> int:
        return len(self.truth)

    def time_of_day_span(self) -> tuple[float, float]:
        """[start hour, end hour) of the event within its day (may exceed 24)."""
        start = self.start_time.hour + self.start_time.minute / 60.0
        return start, start + self.duration_steps * self.resolution / 60.0


@dataclass
class MetricsReport:
    nrmse: float
    ee: float
    bias: float
    n_events: int
    per_event: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "nrmse": self.nrmse,
            "ee": self.ee,
            "bias_pct": self.bias,
            "n_events": self.n_events,
            "per_event": self.per_event,
        }


def metrics_report(events: list[EvalEvent]) -> MetricsReport:
    """Score a batch of restored events and keep the per-event breakdown."""
    pairs = [(e.truth, e.estimate) for e in events]
    rows = []
    for e in events:
        try:
            rows.append(
                {
                    "event_id": e.event_id,
                    "season": e.season,
                    "duration_steps": e.duration_steps,
                    "nrmse": event_nrmse(e.truth, e.estimate),
                    "ee": event_energy_error(e.truth, e.estimate),
                    "bias": event_bias(e.truth, e.estimate),
                }
            )
        except ZeroDivisionError:
            continue
    return MetricsReport(
        nrmse=nrmse(pairs),
        ee=energy_error(pairs),
        bias=bias(pairs),
        n_events=len(rows),
        per_event=rows,
    )


def overlaps_time_of_day(span: tuple[float, float], window: tuple[float, float]) -> bool:
    """True when an event's hour span intersects a non-wrapping hour window."""
    lo, hi = window
    if not 0 <= lo < hi <= 24:
        raise ValueError(f"time window must satisfy 0 <= lo < hi <= 24, got {window}")
    start, end = span
    return start < hi and end > lo


def seasonal_bias(events: list[EvalEvent], season: str, cvr_time_window: tuple[float, float]) -> float:
    """Bias over the test events matching a season and event-hour window.

    Mirrors how the forecasting bias is removed from CVR estimates: only
    restored test events from the same season whose gap falls in the CVR
    hours say anything about the model's bias during such events.
    """
    subset = [
        e for e in events if e.season == season and overlaps_time_of_day(e.time_of_day_span(), cvr_time_window)
    ]
    if not subset:
        raise ValueError(
            f"no test event in season {season!r} overlapping hours {cvr_time_window}; widen the filters"
        )
    return bias([(e.truth, e.estimate) for e in subset])


def eval_events_from_samples(samples, estimates, stats) -> list[EvalEvent]:
    """Pair test samples with their kW estimates for scoring."""
    out = []
    for i, (s, est) in enumerate(zip(samples, estimates)):
        first_step = s.origin + timedelta(minutes=s.resolution * (s.event.start_index - s.pad_left))
        out.append(
            EvalEvent(
                event_id=i,
                truth=stats.denorm_load(s.truth_event.astype(np.float64)),
                estimate=np.asarray(est, dtype=np.float64),
                season=s.season,
                start_time=first_step,
                resolution=s.resolution,
            )
        )
    return out
