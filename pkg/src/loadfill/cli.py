"""Command-line front end.

Subcommands cover the whole pipeline: synthesize or ingest a series,
prepare masked sample sets, train, inpaint a gap, score restorations
against the reference restorers, and produce CVR efficacy reports. Options
may come from a ``key = value`` config file via --config; explicit flags
win. Every run writes its resolved options as JSON beside its outputs, and
all randomness descends from --seed.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from datetime import datetime

import numpy as np

from loadfill import plots, reports
from loadfill.checkpoint import Checkpoint
from loadfill.cvr import CvrInputs, cvr_report
from loadfill.generator import inpaint_batch
from loadfill.metrics import eval_events_from_samples, metrics_report, nrmse, seasonal_bias
from loadfill.restorers import linear_interp, persistence
from loadfill.samples import (
    Sample,
    generate_samples,
    load_sample_set,
    make_cvr_samples,
    make_inference_sample,
    save_sample_set,
)
from loadfill.series import RawSeries, SeriesError, ingest_csv, resample, write_csv
from loadfill.synth import SynthConfig, synth_series
from loadfill.training import TrainConfig, fit

EVENTS_CSV_HEADER = ["start_time", "duration_min", "delta_v"]


class CliError(ValueError):
    pass


def _parse_mask_hours(text: str) -> tuple[float, float]:
    try:
        lo, hi = text.split(":")
        return float(lo), float(hi)
    except ValueError:
        raise CliError(f"mask-hours must look like MIN:MAX, got {text!r}") from None


def _load_config_file(path: str) -> dict[str, str]:
    if not os.path.exists(path):
        raise CliError(f"config: file not found: {path}")
    out = {}
    with open(path) as fh:
        for line_no, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise CliError(f"config: line {line_no} is not 'key = value': {line!r}")
            key, value = line.split("=", 1)
            out[key.strip().replace("-", "_")] = value.strip()
    return out


def _write_run_config(args: argparse.Namespace, out_path: str) -> None:
    payload = {k: v for k, v in vars(args).items() if k not in ("func", "parser") and not k.startswith("_")}
    payload = {k: (list(v) if isinstance(v, tuple) else v) for k, v in payload.items()}
    if os.path.isdir(out_path) or not os.path.splitext(out_path)[1]:
        os.makedirs(out_path, exist_ok=True)
        path = os.path.join(out_path, "run_config.json")
    else:
        os.makedirs(os.path.dirname(os.path.abspath(out_path)), exist_ok=True)
        path = out_path + ".config.json"
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1, sort_keys=True, default=str)
        fh.write("\n")


def _read_series(path: str) -> RawSeries:
    if not os.path.exists(path):
        raise CliError(f"series: file not found: {path}")
    with open(path) as fh:
        return ingest_csv(fh)


def _read_events_csv(path: str) -> list[tuple[datetime, int, float]]:
    if not os.path.exists(path):
        raise CliError(f"events: file not found: {path}")
    out = []
    with open(path) as fh:
        reader = csv.reader(fh)
        header = [h.strip().lower() for h in next(reader, [])]
        if header != EVENTS_CSV_HEADER:
            raise CliError(f"events: expected header {','.join(EVENTS_CSV_HEADER)}, got {','.join(header)}")
        for line_no, row in enumerate(reader, 2):
            if not row or all(not c.strip() for c in row):
                continue
            try:
                out.append((datetime.fromisoformat(row[0].strip()), int(row[1]), float(row[2])))
            except (ValueError, IndexError) as exc:
                raise CliError(f"events: line {line_no}: {exc}") from None
    if not out:
        raise CliError("events: file holds no events")
    return out


# --------------------------------------------------------------------- synth


def _ensure_parent(path: str) -> None:
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)


def cmd_synth(args) -> int:
    cfg = SynthConfig(days=args.days, resolution=args.resolution, n_users=args.users, seed=args.seed)
    series = synth_series(cfg)
    _ensure_parent(args.out)
    with open(args.out, "w") as fh:
        write_csv(series, fh)
    _write_run_config(args, args.out)
    print(f"wrote {len(series)} rows at {series.resolution}-min resolution to {args.out}")
    return 0


# -------------------------------------------------------------------- ingest


def cmd_ingest(args) -> int:
    series = _read_series(args.csv)
    if args.resolution and args.resolution != series.resolution:
        series = resample(series, args.resolution)
    _ensure_parent(args.out)
    with open(args.out, "w") as fh:
        write_csv(series, fh)
    _write_run_config(args, args.out)
    print(f"wrote {len(series)} rows at {series.resolution}-min resolution to {args.out}")
    return 0


# ------------------------------------------------------------------- prepare


def cmd_prepare(args) -> int:
    series = _read_series(args.series)
    mask_hours = _parse_mask_hours(args.mask_hours)
    events = _read_events_csv(args.cvr_events) if args.cvr_events else []

    exclude = []
    sph = series.steps_per_hour
    for start_time, duration_min, _ in events:
        e0 = series.index_of(start_time)
        exclude.append((e0, e0 + duration_min * sph // 60))

    sample_set = generate_samples(series, mask_hours, shift=args.shift_steps, seed=args.seed, exclude=exclude)
    if events:
        sample_set.cvr = make_cvr_samples(series, events, sample_set.stats)
    save_sample_set(sample_set, args.out)
    _write_run_config(args, args.out)
    counts = {name: len(sample_set.split(name)) for name in ("train", "validation", "test", "cvr")}
    print(f"samples: {counts} -> {args.out}")
    return 0


# --------------------------------------------------------------------- train


def cmd_train(args) -> int:
    sample_set = load_sample_set(args.samples)
    cfg = TrainConfig(
        lr_g=args.lr_g,
        lr_d=args.lr_d,
        lambda_adv=args.lambda_adv,
        lambda_feat=args.lambda_feat,
        batch_size=args.batch,
        max_iters=args.max_iters,
        margin_steps=args.margin_steps,
        d_steps_per_g=args.d_steps,
        seed=args.seed,
        val_interval=args.val_interval,
    )
    ckpt, report = fit(cfg, sample_set, log_every=args.log_every)
    ckpt.save(args.out)
    reports.write_loss_report(report, args.out)
    if len(report):
        plots.plot_losses(report, os.path.join(args.out, "losses.png"))
    _write_run_config(args, args.out)
    print(f"checkpoint at iteration {ckpt.iteration} -> {args.out}")
    return 0


# ------------------------------------------------------------------- inpaint


def _sample_for_inpaint(args, stats) -> Sample:
    if bool(args.window) == bool(args.samples):
        raise CliError("inpaint needs exactly one of --window or --samples/--sample-id")
    if args.window:
        return make_inference_sample(_read_series(args.window), stats)
    sample_set = load_sample_set(args.samples)
    split = sample_set.split(args.split)
    if not 0 <= args.sample_id < len(split):
        raise CliError(f"sample-id: {args.sample_id} outside [0, {len(split)}) for split {args.split!r}")
    return split[args.sample_id]


def cmd_inpaint(args) -> int:
    ckpt = Checkpoint.load(args.checkpoint)
    gen, _ = ckpt.build_models()
    sample = _sample_for_inpaint(args, ckpt.stats)
    estimate = inpaint_batch(gen, [sample], ckpt.stats)[0]
    times = sample.event_timestamps()
    _ensure_parent(args.out)
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["timestamp", "load_kw_estimate"])
        for t, v in zip(times, estimate):
            writer.writerow([t.isoformat(), f"{v:.6f}"])
    window_kw = ckpt.stats.denorm_load(sample.measured_window() if sample.truth_event is not None or sample.measured_event is not None else sample.load_masked)
    event_slice = slice(sample.event.start_index, sample.event.stop_index)
    estimates = {"restored": estimate}
    plots.plot_restorations(
        [(f"event of {sample.event.length_steps} steps at {times[0].isoformat()}", window_kw, event_slice, estimates)],
        args.out.rsplit(".", 1)[0] + ".png",
    )
    _write_run_config(args, args.out)
    print(f"wrote {len(estimate)} restored steps to {args.out}")
    return 0


# ---------------------------------------------------------------------- eval


def cmd_eval(args) -> int:
    ckpt = Checkpoint.load(args.checkpoint)
    gen, _ = ckpt.build_models()
    sample_set = load_sample_set(args.samples)
    samples = sample_set.split(args.split)
    if not samples:
        raise CliError(f"samples: split {args.split!r} is empty")

    stats = ckpt.stats
    model_est = inpaint_batch(gen, samples, stats)
    restorer_est = {
        "model": model_est,
        "linear_interp": [linear_interp(s, stats) for s in samples],
        "persistence": [persistence(s, stats) for s in samples],
    }
    all_reports = {}
    for name, estimates in restorer_est.items():
        events = eval_events_from_samples(samples, estimates, stats)
        rep = metrics_report(events)
        all_reports[name] = rep
        reports.write_metrics_report(rep, args.out, name=f"metrics_{name}")

    summary = {name: {"nrmse": r.nrmse, "ee": r.ee, "bias_pct": r.bias} for name, r in all_reports.items()}
    with open(os.path.join(args.out, "summary.json"), "w") as fh:
        json.dump(summary, fh, indent=1, sort_keys=True)
        fh.write("\n")

    # nRMSE by mask duration, model only
    buckets: dict[str, list] = {}
    for s, est in zip(samples, model_est):
        hours = s.event.length_steps * s.resolution / 60.0
        key = f"{hours:.2g} h"
        buckets.setdefault(key, []).append((stats.denorm_load(s.truth_event.astype(np.float64)), est))
    bucket_scores = {k: nrmse(v) for k, v in sorted(buckets.items(), key=lambda kv: float(kv[0].split()[0]))}
    plots.plot_nrmse_by_duration(bucket_scores, os.path.join(args.out, "nrmse_by_duration.png"))

    cases = []
    for s, est, li in list(zip(samples, model_est, restorer_est["linear_interp"]))[:4]:
        window_kw = stats.denorm_load(s.real_window())
        cases.append(
            (
                f"{s.origin.isoformat()} ({s.event.length_steps} steps)",
                window_kw,
                slice(s.event.start_index, s.event.stop_index),
                {"model": est, "linear": li},
            )
        )
    plots.plot_restorations(cases, os.path.join(args.out, "examples.png"))
    _write_run_config(args, args.out)
    model = all_reports["model"]
    print(f"model nRMSE {model.nrmse:.4f}, EE {model.ee:.4f}, bias {model.bias:+.3f}% over {model.n_events} events")
    return 0


# ----------------------------------------------------------------------- cvr


def cmd_cvr(args) -> int:
    ckpt = Checkpoint.load(args.checkpoint)
    gen, _ = ckpt.build_models()
    sample_set = load_sample_set(args.samples)
    if not sample_set.cvr:
        raise CliError("samples: set holds no CVR samples; prepare with --cvr-events")
    if not sample_set.test:
        raise CliError("samples: set holds no test samples for bias estimation")
    if args.events:
        labeled = _read_events_csv(args.events)
        if len(labeled) != len(sample_set.cvr):
            raise CliError(f"events: file lists {len(labeled)} events but the sample set holds {len(sample_set.cvr)}")

    stats = ckpt.stats
    test_est = inpaint_batch(gen, sample_set.test, stats)
    test_events = eval_events_from_samples(sample_set.test, test_est, stats)

    cvr_samples = sample_set.cvr
    baselines = inpaint_batch(gen, cvr_samples, stats)

    spans = [
        (
            s.origin.hour + s.origin.minute / 60.0 + (s.event.start_index - s.pad_left) * s.resolution / 60.0,
            s.event.length_steps * s.resolution / 60.0,
        )
        for s in cvr_samples
    ]
    lo = max(0.0, min(start % 24 for start, _ in spans))
    hi = min(24.0, max(start % 24 + dur for start, dur in spans))
    window = (lo, hi) if lo < hi else (0.0, 24.0)

    season_bias = {}
    for season in sorted({s.season for s in cvr_samples}):
        season_bias[season] = seasonal_bias(test_events, season, window)

    inputs = []
    for i, (s, baseline) in enumerate(zip(cvr_samples, baselines)):
        first_step = s.event_timestamps()[0]
        inputs.append(
            CvrInputs(
                event_id=i,
                measured=stats.denorm_load(s.measured_event.astype(np.float64)),
                baseline=baseline,
                season=s.season,
                start_time=first_step,
                duration_steps=s.event.length_steps,
                delta_v=s.event.delta_v,
            )
        )
    report = cvr_report(inputs, season_bias, sample_set.resolution)
    reports.write_cvr_report(report, args.out)
    plots.plot_effect_curve(
        report.effect_curve_pct, report.effect_counts, sample_set.resolution, os.path.join(args.out, "effect_curve.png")
    )
    _write_run_config(args, args.out)
    print(
        f"CVR factor {report.cvr_factor:+.3f} over {len(report.events)} events "
        f"(seasonal bias: {', '.join(f'{k}={v:+.3f}%' for k, v in season_bias.items())})"
    )
    return 0


# ------------------------------------------------------------------- parsing


def build_parser() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    parser = argparse.ArgumentParser(prog="loadfill", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    subparsers = {}

    def add_common(p):
        p.add_argument("--config", help="key = value file supplying defaults for any option")
        p.add_argument("--seed", type=int, default=None, help="root seed for all randomness (default 0)")

    p = subparsers["synth"] = sub.add_parser("synth", help="generate a synthetic load/temperature series CSV")
    add_common(p)
    p.add_argument("--days", type=int, default=None, help="number of days (default 30)")
    p.add_argument("--users", type=int, default=None, help="users aggregated into the feeder load (default 100)")
    p.add_argument("--resolution", type=int, default=None, help="minutes per step (default 15)")
    p.add_argument("--out", required=True, help="output series CSV path")
    p.set_defaults(func=cmd_synth)

    p = subparsers["ingest"] = sub.add_parser("ingest", help="validate (and optionally resample) a series CSV")
    add_common(p)
    p.add_argument("--csv", required=True, help="input CSV: timestamp,load_kw,temperature_c")
    p.add_argument("--resolution", type=int, default=None, help="resample to this many minutes per step")
    p.add_argument("--out", required=True, help="output series CSV path")
    p.set_defaults(func=cmd_ingest)

    p = subparsers["prepare"] = sub.add_parser("prepare", help="cut a series into masked 24-hour samples")
    add_common(p)
    p.add_argument("--series", required=True, help="series CSV from synth/ingest")
    p.add_argument("--mask-hours", default=None, help="MIN:MAX mask duration in hours (default 1:4)")
    p.add_argument("--shift-steps", type=int, default=None, help="window shift in steps (default: one hour)")
    p.add_argument("--cvr-events", default=None, help="CSV of CVR events: start_time,duration_min,delta_v")
    p.add_argument("--out", required=True, help="output sample-set directory")
    p.set_defaults(func=cmd_prepare)

    p = subparsers["train"] = sub.add_parser("train", help="train the restoration model on a sample set")
    add_common(p)
    p.add_argument("--samples", required=True, help="sample-set directory from prepare")
    p.add_argument("--max-iters", type=int, default=None, help="training iterations (default 2000)")
    p.add_argument("--batch", type=int, default=None, help="batch size (default 16)")
    p.add_argument("--lr-g", type=float, default=None, help="generator learning rate (default 1e-4)")
    p.add_argument("--lr-d", type=float, default=None, help="critic learning rate (default 1e-4)")
    p.add_argument("--lambda-adv", type=float, default=None, help="adversarial loss weight (default 0.1)")
    p.add_argument("--lambda-feat", type=float, default=None, help="feature-matching loss weight (default 10)")
    p.add_argument("--margin-steps", type=int, default=None, help="content-loss margin (default: half an hour)")
    p.add_argument("--d-steps", type=int, default=None, help="critic updates per generator update (default 1)")
    p.add_argument("--val-interval", type=int, default=None, help="iterations between validation checks (default 100)")
    p.add_argument("--log-every", type=int, default=None, help="print losses every N iterations")
    p.add_argument("--out", required=True, help="output checkpoint directory")
    p.set_defaults(func=cmd_train)

    p = subparsers["inpaint"] = sub.add_parser("inpaint", help="restore one gap with a trained model")
    add_common(p)
    p.add_argument("--checkpoint", required=True, help="checkpoint directory from train")
    p.add_argument("--window", default=None, help="CSV window whose single missing run is the gap")
    p.add_argument("--samples", default=None, help="sample-set directory (with --sample-id)")
    p.add_argument("--sample-id", type=int, default=None, help="index into --split of --samples")
    p.add_argument("--split", default=None, help="split for --sample-id (default test)")
    p.add_argument("--out", required=True, help="output CSV: timestamp,load_kw_estimate")
    p.set_defaults(func=cmd_inpaint)

    p = subparsers["eval"] = sub.add_parser("eval", help="score restorations against the reference restorers")
    add_common(p)
    p.add_argument("--checkpoint", required=True, help="checkpoint directory from train")
    p.add_argument("--samples", required=True, help="sample-set directory from prepare")
    p.add_argument("--split", default=None, help="which split to score (default test)")
    p.add_argument("--out", required=True, help="output report directory")
    p.set_defaults(func=cmd_eval)

    p = subparsers["cvr"] = sub.add_parser("cvr", help="estimate CVR baselines and efficacy")
    add_common(p)
    p.add_argument("--checkpoint", required=True, help="checkpoint directory from train")
    p.add_argument("--samples", required=True, help="sample-set directory holding CVR samples")
    p.add_argument("--events", default=None, help="CVR events CSV for cross-checking the sample set")
    p.add_argument("--out", required=True, help="output report directory")
    p.set_defaults(func=cmd_cvr)

    return parser, subparsers


_HARD_DEFAULTS = {
    "synth": {"days": 30, "users": 100, "resolution": 15, "seed": 0},
    "ingest": {"seed": 0},
    "prepare": {"mask_hours": "1:4", "seed": 0},
    "train": {
        "max_iters": 2000,
        "batch": 16,
        "lr_g": 1e-4,
        "lr_d": 1e-4,
        "lambda_adv": 0.1,
        "lambda_feat": 10.0,
        "d_steps": 1,
        "val_interval": 100,
        "seed": 0,
    },
    "inpaint": {"split": "test", "seed": 0},
    "eval": {"split": "test", "seed": 0},
    "cvr": {"seed": 0},
}


def main(argv=None) -> int:
    parser, subparsers = build_parser()
    args = parser.parse_args(argv)
    try:
        _apply_config_and_defaults(args, subparsers[args.command])
        return args.func(args)
    except (CliError, SeriesError, ValueError, RuntimeError, OSError) as exc:
        print(f"loadfill-error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


def _apply_config_and_defaults(args: argparse.Namespace, subparser: argparse.ArgumentParser) -> None:
    """Unset options fall back to the --config file, then hard defaults."""
    config = _load_config_file(args.config) if getattr(args, "config", None) else {}
    converters = {a.dest: (a.type or str) for a in subparser._actions}
    for key, value in vars(args).copy().items():
        if value is not None:
            continue
        if key in config:
            setattr(args, key, converters.get(key, str)(config[key]))
        elif key in _HARD_DEFAULTS.get(args.command, {}):
            setattr(args, key, _HARD_DEFAULTS[args.command][key])


if __name__ == "__main__":
    sys.exit(main())
