"""Report serialization: JSON for machines, aligned text for people, CSV rows.

The per-event CSV uses one shared header for accuracy and CVR exports;
columns that do not apply to a row stay empty.
"""

from __future__ import annotations

import csv
import json
import os

from loadfill.cvr import CvrReport
from loadfill.metrics import MetricsReport

EVENT_CSV_HEADER = [
    "event_id",
    "season",
    "duration_steps",
    "nrmse",
    "ee",
    "bias",
    "cvr_raw",
    "cvr_net",
    "delta_v",
]


def _write_json(payload: dict, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1, sort_keys=True)
        fh.write("\n")


def _write_event_csv(rows: list[dict], path: str) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=EVENT_CSV_HEADER, restval="")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _fmt(v) for k, v in row.items() if k in EVENT_CSV_HEADER})


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.6g}"
    return v


def _aligned(rows: list[list[str]]) -> str:
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    return "\n".join("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip() for row in rows)


def write_metrics_report(report: MetricsReport, directory: str, name: str = "metrics") -> None:
    os.makedirs(directory, exist_ok=True)
    _write_json(report.to_dict(), os.path.join(directory, f"{name}.json"))
    _write_event_csv(report.per_event, os.path.join(directory, f"{name}_events.csv"))

    rows = [["metric", "value"]]
    rows.append(["nRMSE", f"{report.nrmse:.4f}"])
    rows.append(["energy error", f"{report.ee:.4f}"])
    rows.append(["bias (%)", f"{report.bias:.3f}"])
    rows.append(["events", str(report.n_events)])
    with open(os.path.join(directory, f"{name}.txt"), "w") as fh:
        fh.write(_aligned(rows) + "\n")


def write_cvr_report(report: CvrReport, directory: str, name: str = "cvr") -> None:
    os.makedirs(directory, exist_ok=True)
    _write_json(report.to_dict(), os.path.join(directory, f"{name}.json"))

    rows = [
        {
            "event_id": e.event_id,
            "season": e.season,
            "duration_steps": e.duration_steps,
            "cvr_raw": e.cvr_raw,
            "cvr_net": e.cvr_net,
            "delta_v": e.delta_v,
        }
        for e in report.events
    ]
    _write_event_csv(rows, os.path.join(directory, f"{name}_events.csv"))

    with open(os.path.join(directory, f"{name}_effect_curve.csv"), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["elapsed_step", "elapsed_minutes", "mean_effect_pct", "n_events"])
        for k, (eff, n) in enumerate(zip(report.effect_curve_pct, report.effect_counts)):
            writer.writerow([k, (k + 1) * report.resolution, f"{eff:.6g}", n])

    text = [["event", "season", "duration", "CVR raw (%)", "CVR net (%)", "dV (%)"]]
    for e in report.events:
        text.append(
            [
                str(e.event_id),
                e.season,
                str(e.duration_steps),
                f"{e.cvr_raw:+.3f}",
                f"{e.cvr_net:+.3f}",
                f"{100 * e.delta_v:.1f}",
            ]
        )
    text.append(["", "", "", "", "CVR factor", f"{report.cvr_factor:+.3f}"])
    with open(os.path.join(directory, f"{name}.txt"), "w") as fh:
        fh.write(_aligned(text) + "\n")


def write_loss_report(report, directory: str, name: str = "losses") -> None:
    os.makedirs(directory, exist_ok=True)
    fields = ["iteration", *report.FIELDS]
    with open(os.path.join(directory, f"{name}.csv"), "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        for row in report.rows():
            writer.writerow({k: (f"{v:.6g}" if isinstance(v, float) else v) for k, v in row.items()})
