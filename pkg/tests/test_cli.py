import json

import numpy as np
import pytest

from loadfill.cli import main
from loadfill.samples import load_sample_set


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    """One pipeline run shared by the read-only assertions below."""
    root = tmp_path_factory.mktemp("cli")
    series = root / "series.csv"
    events = root / "events.csv"
    samples = root / "samples"
    ckpt = root / "ckpt"

    assert main(["synth", "--days", "12", "--users", "15", "--resolution", "15", "--seed", "5", "--out", str(series)]) == 0

    events.write_text(
        "start_time,duration_min,delta_v\n"
        "2021-01-03T14:00:00,180,0.04\n"
        "2021-01-05T14:00:00,120,0.04\n"
        "2021-01-08T15:00:00,180,0.04\n"
    )
    assert main(
        ["prepare", "--series", str(series), "--mask-hours", "1:4", "--seed", "3", "--cvr-events", str(events), "--out", str(samples)]
    ) == 0
    assert main(["train", "--samples", str(samples), "--max-iters", "0", "--seed", "1", "--out", str(ckpt)]) == 0
    return root


def test_synth_writes_parsable_series(workdir):
    from loadfill.series import ingest_csv

    with open(workdir / "series.csv") as fh:
        s = ingest_csv(fh)
    assert s.resolution == 15
    assert len(s) == 12 * 96
    assert (workdir / "series.csv.config.json").exists()


def test_synth_idempotent(tmp_path):
    out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
    for out in (out1, out2):
        assert main(["synth", "--days", "3", "--users", "4", "--seed", "9", "--out", str(out)]) == 0
    assert out1.read_bytes() == out2.read_bytes()


def test_prepare_splits_and_cvr(workdir):
    ss = load_sample_set(workdir / "samples")
    assert len(ss.cvr) == 3
    assert ss.cvr[0].event.delta_v == 0.04
    assert len(ss.train) > len(ss.test) > 0
    manifest = json.loads((workdir / "samples" / "manifest.json").read_text())
    assert manifest["counts"]["cvr"] == 3
    # no training window overlaps a CVR event
    cvr_ranges = [(s.origin_index + s.event.start_index - s.pad_left, s.event.length_steps) for s in ss.cvr]
    for s in ss.train:
        for start, length in cvr_ranges:
            assert not (s.origin_index < start + length and s.origin_index + 96 > start)


def test_train_zero_iters_checkpoint(workdir):
    assert (workdir / "ckpt" / "manifest.json").exists()
    assert (workdir / "ckpt" / "params.bin").exists()
    assert (workdir / "ckpt" / "losses.csv").exists()
    assert (workdir / "ckpt" / "run_config.json").exists()


def test_eval_reports(workdir, tmp_path):
    out = tmp_path / "eval"
    assert main(["eval", "--checkpoint", str(workdir / "ckpt"), "--samples", str(workdir / "samples"), "--out", str(out)]) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert set(summary) == {"model", "linear_interp", "persistence"}
    for rep in summary.values():
        assert np.isfinite(rep["nrmse"])
    assert (out / "metrics_model.json").exists()
    assert (out / "metrics_model_events.csv").exists()
    assert (out / "metrics_model.txt").exists()
    assert (out / "examples.png").exists()
    assert (out / "nrmse_by_duration.png").exists()
    header = (out / "metrics_model_events.csv").read_text().splitlines()[0]
    assert header == "event_id,season,duration_steps,nrmse,ee,bias,cvr_raw,cvr_net,delta_v"


def test_cvr_reports(workdir, tmp_path):
    out = tmp_path / "cvr"
    assert main(["cvr", "--checkpoint", str(workdir / "ckpt"), "--samples", str(workdir / "samples"), "--out", str(out)]) == 0
    payload = json.loads((out / "cvr.json").read_text())
    assert payload["n_events"] == 3
    assert len(payload["effect_curve_pct"]) == 12  # longest event: 180 min
    assert (out / "cvr_effect_curve.csv").exists()
    assert (out / "effect_curve.png").exists()
    curve_rows = (out / "cvr_effect_curve.csv").read_text().splitlines()
    assert curve_rows[0] == "elapsed_step,elapsed_minutes,mean_effect_pct,n_events"
    assert len(curve_rows) == 13


def test_inpaint_sample_id(workdir, tmp_path):
    out = tmp_path / "seg.csv"
    assert main(
        ["inpaint", "--checkpoint", str(workdir / "ckpt"), "--samples", str(workdir / "samples"), "--sample-id", "0", "--out", str(out)]
    ) == 0
    rows = out.read_text().splitlines()
    ss = load_sample_set(workdir / "samples")
    assert rows[0] == "timestamp,load_kw_estimate"
    assert len(rows) - 1 == ss.test[0].event.length_steps


def test_inpaint_window_csv(workdir, tmp_path):
    # carve a 3h gap into a csv window and restore it
    from loadfill.series import ingest_csv

    with open(workdir / "series.csv") as fh:
        series = ingest_csv(fh)
    lines = (workdir / "series.csv").read_text().splitlines()
    gap_rows = range(1 + 300, 1 + 312)  # 12 steps
    for i in gap_rows:
        t, _, temp = lines[i].split(",")
        lines[i] = f"{t},,{temp}"
    window_csv = tmp_path / "window.csv"
    window_csv.write_text("\n".join(lines) + "\n")
    out = tmp_path / "restored.csv"
    assert main(["inpaint", "--checkpoint", str(workdir / "ckpt"), "--window", str(window_csv), "--out", str(out)]) == 0
    rows = out.read_text().splitlines()
    assert len(rows) - 1 == 12
    assert rows[1].startswith(series.timestamp(300).isoformat())


def test_inpaint_requires_one_source(workdir, tmp_path):
    rc = main(["inpaint", "--checkpoint", str(workdir / "ckpt"), "--out", str(tmp_path / "x.csv")])
    assert rc == 2


def test_missing_file_is_single_line_error(tmp_path, capsys):
    rc = main(["ingest", "--csv", str(tmp_path / "nope.csv"), "--out", str(tmp_path / "out.csv")])
    assert rc == 2
    err = capsys.readouterr().err.strip().splitlines()
    assert len(err) == 1
    assert err[0].startswith("loadfill-error:")


def test_unknown_flag_rejected():
    with pytest.raises(SystemExit) as exc:
        main(["synth", "--bogus", "1", "--out", "x.csv"])
    assert exc.value.code == 2


@pytest.mark.parametrize("cmd", ["synth", "ingest", "prepare", "train", "inpaint", "eval", "cvr"])
def test_help_lists_flags(cmd, capsys):
    with pytest.raises(SystemExit) as exc:
        main([cmd, "--help"])
    assert exc.value.code == 0
    out = capsys.readouterr().out
    assert "--out" in out and "--seed" in out


def test_config_file_supplies_defaults_flags_win(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("days = 4\nusers = 3\nseed = 7\n")
    out1 = tmp_path / "c1.csv"
    assert main(["synth", "--config", str(cfg), "--out", str(out1)]) == 0
    # flag overrides the config file
    out2 = tmp_path / "c2.csv"
    assert main(["synth", "--config", str(cfg), "--days", "2", "--out", str(out2)]) == 0
    n1 = len(out1.read_text().splitlines())
    n2 = len(out2.read_text().splitlines())
    assert n1 == 1 + 4 * 96
    assert n2 == 1 + 2 * 96
    payload = json.loads((out1).with_suffix(".csv.config.json").read_text())
    assert payload["seed"] == 7


def test_resolved_config_written_beside_outputs(workdir):
    payload = json.loads((workdir / "samples" / "run_config.json").read_text())
    assert payload["command"] == "prepare"
    assert payload["mask_hours"] == "1:4"
    assert payload["seed"] == 3
