"""Synthetic load/temperature series for testing and demos.

Stands in for utility feeder data: each simulated user contributes a base
load, a two-peak diurnal shape, a piecewise-linear temperature response
(heating below a low threshold, cooling above a high one) and AR(1) noise.
The aggregate over users is what a feeder meter would record, so raising
``n_users`` smooths the profile the way real aggregation does.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime

import numpy as np
from scipy.signal import lfilter

from loadfill.series import RawSeries


@dataclass
class SynthConfig:
    days: int = 30
    resolution: int = 15
    n_users: int = 100
    seed: int = 0
    start_time: datetime = datetime(2021, 1, 1)
    # per-user load shape (kW)
    base_kw: float = 0.5
    morning_peak_kw: float = 0.5
    evening_peak_kw: float = 1.0
    heat_kw_per_deg: float = 0.04
    cool_kw_per_deg: float = 0.06
    heat_below_c: float = 12.0
    cool_above_c: float = 22.0
    # noise
    load_noise_kw: float = 0.08
    ar_rho: float = 0.9
    temp_noise_c: float = 0.6
    # temperature shape (deg C)
    temp_mean_c: float = 14.0
    temp_season_amp_c: float = 9.0
    temp_diurnal_amp_c: float = 5.0

    def __post_init__(self):
        if self.days < 2:
            raise ValueError("days must be >= 2")
        if self.n_users < 1:
            raise ValueError("n_users must be >= 1")


def synth_series(config: SynthConfig) -> RawSeries:
    """Generate a deterministic synthetic series under ``config.seed``."""
    rng = np.random.default_rng(config.seed)
    steps_per_day = 24 * 60 // config.resolution
    n = config.days * steps_per_day
    step_h = config.resolution / 60.0
    hours = (np.arange(n) * step_h) % 24.0
    day_of_year = (np.arange(n) * step_h) / 24.0 + config.start_time.timetuple().tm_yday

    # shared temperature: seasonal + diurnal (peak mid-afternoon) + AR noise
    temp = (
        config.temp_mean_c
        - config.temp_season_amp_c * np.cos(2 * np.pi * day_of_year / 365.0)
        + config.temp_diurnal_amp_c * np.sin(2 * np.pi * (hours - 9.0) / 24.0)
    )
    temp = temp + _ar1(rng, n, config.ar_rho, config.temp_noise_c)

    heating = np.maximum(config.heat_below_c - temp, 0.0)
    cooling = np.maximum(temp - config.cool_above_c, 0.0)

    total = np.zeros(n)
    for _ in range(config.n_users):
        base = config.base_kw * rng.uniform(0.6, 1.4)
        morning = config.morning_peak_kw * rng.uniform(0.5, 1.5)
        evening = config.evening_peak_kw * rng.uniform(0.5, 1.5)
        t_morning = rng.uniform(7.0, 9.0)
        t_evening = rng.uniform(18.0, 20.5)
        profile = (
            base
            + morning * np.exp(-0.5 * ((hours - t_morning) / 1.8) ** 2)
            + evening * np.exp(-0.5 * ((hours - t_evening) / 2.2) ** 2)
            + config.heat_kw_per_deg * rng.uniform(0.5, 1.5) * heating
            + config.cool_kw_per_deg * rng.uniform(0.5, 1.5) * cooling
        )
        profile = profile + _ar1(rng, n, config.ar_rho, config.load_noise_kw)
        total += np.maximum(profile, 0.0)

    return RawSeries(
        start_time=config.start_time,
        resolution=config.resolution,
        load=total,
        temperature=temp,
        missing_flags=np.zeros(n, dtype=bool),
    )


def _ar1(rng: np.random.Generator, n: int, rho: float, sigma: float) -> np.ndarray:
    """AR(1) noise; the draw happens even for sigma=0 so that seeds line up."""
    eps = rng.standard_normal(n) * sigma
    if sigma == 0.0:
        return eps
    return lfilter([1.0], [1.0, -rho], eps)
