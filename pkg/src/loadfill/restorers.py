"""Reference restorers: the sanity baselines any model must beat."""

from __future__ import annotations

import numpy as np

from loadfill.samples import Sample
from loadfill.series import NormStats


def linear_interp(sample: Sample, stats: NormStats) -> np.ndarray:
    """Straight line from the last pre-event to the first post-event value, kW."""
    s, e = sample.event.start_index, sample.event.stop_index
    w = sample.window_len
    if s == 0 or e >= w:
        raise ValueError("event touches the window edge; no context on one side")
    pre = float(sample.load_masked[s - 1])
    post = float(sample.load_masked[e])
    n = sample.event.length_steps
    line = pre + (post - pre) * np.arange(1, n + 1, dtype=np.float64) / (n + 1)
    return stats.denorm_load(line)


def persistence(sample: Sample, stats: NormStats) -> np.ndarray:
    """Load 24 h before the event when that was observed, else the last
    pre-event value held flat, kW."""
    if sample.prev_day_event is not None:
        return stats.denorm_load(sample.prev_day_event.astype(np.float64))
    s = sample.event.start_index
    if s == 0:
        raise ValueError("event starts at the window edge; no pre-event value")
    flat = np.full(sample.event.length_steps, float(sample.load_masked[s - 1]))
    return stats.denorm_load(flat)
