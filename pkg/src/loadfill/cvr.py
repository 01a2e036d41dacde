"""CVR efficacy scoring from restored baselines.

For each voltage-reduction event the restored window serves as the
counterfactual baseline. The raw effect is the mean relative difference
between the metered load and that baseline (negative = load reduced); the
net effect subtracts the model's seasonal forecasting bias; and the CVR
factor divides the net percentage reduction by the percentage voltage
reduction, averaged over events.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime

import numpy as np


def cvr_raw(measured, baseline) -> float:
    """Raw average normalized load reduction of one event, in percent."""
    y = np.asarray(measured, dtype=np.float64)
    y_hat = np.asarray(baseline, dtype=np.float64)
    if y.shape != y_hat.shape or y.size == 0:
        raise ValueError("measured and baseline must be equal-length, nonempty")
    if np.any(y == 0):
        raise ValueError("measured load contains a zero point")
    return float(np.mean((y - y_hat) / y) * 100.0)


def cvr_net(raw_pct: float, seasonal_bias_pct: float) -> float:
    """Net effect once the model's own seasonal bias is removed."""
    return raw_pct - seasonal_bias_pct


def cvr_factor(events: list[tuple[float, float]]) -> float:
    """Mean of net percent reduction over percent voltage reduction.

    ``events`` rows are (net_pct, delta_v) with delta_v a fraction, e.g.
    (-2.0, 0.04) contributes -0.5.
    """
    if not events:
        raise ValueError("no CVR events")
    return float(np.mean([net / (100.0 * dv) for net, dv in events]))


def effect_curve(events: list[tuple[np.ndarray, np.ndarray]]) -> tuple[np.ndarray, np.ndarray]:
    """Mean per-elapsed-step effect across events, with per-step counts.

    Step k averages (measured_k - baseline_k) / measured_k (in percent) over
    the events that last at least k+1 steps, so the tail of the curve rests
    on fewer events when durations differ.
    """
    if not events:
        raise ValueError("no CVR events")
    longest = max(len(y) for y, _ in events)
    sums = np.zeros(longest)
    counts = np.zeros(longest, dtype=int)
    for y, y_hat in events:
        y = np.asarray(y, dtype=np.float64)
        y_hat = np.asarray(y_hat, dtype=np.float64)
        if np.any(y == 0):
            raise ValueError("measured load contains a zero point")
        eff = (y - y_hat) / y * 100.0
        sums[: len(eff)] += eff
        counts[: len(eff)] += 1
    return sums / counts, counts


@dataclass
class CvrEventResult:
    event_id: int
    season: str
    start_time: datetime
    duration_steps: int
    delta_v: float
    cvr_raw: float
    cvr_net: float


@dataclass
class CvrReport:
    events: list[CvrEventResult]
    seasonal_bias_pct: dict[str, float]  # season -> bias applied
    cvr_factor: float
    effect_curve_pct: np.ndarray
    effect_counts: np.ndarray
    resolution: int

    def to_dict(self) -> dict:
        return {
            "cvr_factor": self.cvr_factor,
            "seasonal_bias_pct": self.seasonal_bias_pct,
            "n_events": len(self.events),
            "effect_curve_pct": self.effect_curve_pct.tolist(),
            "effect_counts": self.effect_counts.tolist(),
            "events": [
                {
                    "event_id": e.event_id,
                    "season": e.season,
                    "start_time": e.start_time.isoformat(),
                    "duration_steps": e.duration_steps,
                    "delta_v": e.delta_v,
                    "cvr_raw_pct": e.cvr_raw,
                    "cvr_net_pct": e.cvr_net,
                }
                for e in self.events
            ],
        }


@dataclass
class CvrInputs:
    """Everything needed to score one CVR event."""

    event_id: int
    measured: np.ndarray  # kW during the event
    baseline: np.ndarray  # restored kW during the event
    season: str
    start_time: datetime
    duration_steps: int
    delta_v: float


def cvr_report(inputs: list[CvrInputs], season_bias: dict[str, float], resolution: int) -> CvrReport:
    """Assemble the per-event and aggregate CVR efficacy numbers.

    ``season_bias`` maps each season present among the events to the
    seasonal forecasting bias (percent) measured on restored test events.
    """
    results = []
    for ev in inputs:
        if ev.season not in season_bias:
            raise ValueError(f"no seasonal bias available for season {ev.season!r}")
        raw = cvr_raw(ev.measured, ev.baseline)
        results.append(
            CvrEventResult(
                event_id=ev.event_id,
                season=ev.season,
                start_time=ev.start_time,
                duration_steps=ev.duration_steps,
                delta_v=ev.delta_v,
                cvr_raw=raw,
                cvr_net=cvr_net(raw, season_bias[ev.season]),
            )
        )
    factor = cvr_factor([(r.cvr_net, r.delta_v) for r in results])
    curve, counts = effect_curve([(ev.measured, ev.baseline) for ev in inputs])
    return CvrReport(
        events=results,
        seasonal_bias_pct=dict(season_bias),
        cvr_factor=factor,
        effect_curve_pct=curve,
        effect_counts=counts,
        resolution=resolution,
    )
