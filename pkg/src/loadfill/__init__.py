"""Load profile gap filling and demand-response baseline estimation.

A two-stage generative model (coarse gated-convolution encoder-decoder
followed by an attention-based fine-tuning network, trained adversarially
against a spectral-normalized convolutional critic) restores missing
segments of 24-hour smart-meter load windows from the surrounding load,
the temperature profile, and a mask marking the gap. The same model,
applied to windows that contain a conservation-voltage-reduction (CVR)
event, yields the counterfactual baseline from which CVR efficacy is
scored.
"""

__version__ = "0.1.0"

from loadfill.series import RawSeries, NormStats, ingest_csv, resample, fit_norm_stats
from loadfill.samples import EventSpec, Sample, SampleSet, generate_samples, make_cvr_samples
from loadfill.synth import SynthConfig, synth_series

__all__ = [
    "RawSeries",
    "NormStats",
    "ingest_csv",
    "resample",
    "fit_norm_stats",
    "EventSpec",
    "Sample",
    "SampleSet",
    "generate_samples",
    "make_cvr_samples",
    "SynthConfig",
    "synth_series",
]
