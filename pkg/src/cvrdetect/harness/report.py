"""Report rendering: aligned text tables, CSV, and machine-readable JSON."""
from __future__ import annotations

import csv
import io
import json
from pathlib import Path

from .evaluate import EvalReport


def report_json(report: EvalReport) -> str:
    return json.dumps(report.to_json(), sort_keys=True, indent=1) + "\n"


def write_report(report: EvalReport, out_base) -> list[Path]:
    """Write <base>.json / <base>.csv / <base>.txt; returns paths."""
    out_base = Path(out_base)
    out_base.parent.mkdir(parents=True, exist_ok=True)
    paths = []
    j = out_base.with_suffix(".json")
    j.write_text(report_json(report))
    paths.append(j)

    c = out_base.with_suffix(".csv")
    with open(c, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["id", "label", "family", "verdict", "fake_fraction"])
        for v in report.videos:
            w.writerow([v.id, v.label, v.family, v.verdict,
                        f"{v.fake_fraction:.6f}"])
    paths.append(c)

    t = out_base.with_suffix(".txt")
    t.write_text(render_report_text(report))
    paths.append(t)
    return paths


def render_report_text(report: EvalReport) -> str:
    lines = [
        f"split: {report.split}",
        f"video accuracy: {report.video_accuracy:.4f}",
        f"clip accuracy:  {report.clip_accuracy:.4f}",
        "counts: " + " ".join(f"{k}={v}" for k, v in report.counts.items()),
        "per source: " + " ".join(f"{k}={v:.4f}"
                                  for k, v in report.per_source.items()),
        f"weights: a={report.weights['alpha_a']:.3f} "
        f"m={report.weights['alpha_m']:.3f} g={report.weights['alpha_g']:.3f} "
        f"epsilon={report.epsilon}",
    ]
    return "\n".join(lines) + "\n"


def render_protocol_table(results: dict) -> str:
    """One row per expert combination, one column per protocol."""
    protocols = [p for p in ("in_domain", "cross_family")
                 if any(p in row for row in results["rows"].values())]
    header = ["combination"] + protocols
    widths = [12] + [14] * len(protocols)
    out = io.StringIO()
    out.write("  ".join(h.ljust(w) for h, w in zip(header, widths)) + "\n")
    out.write("-" * (sum(widths) + 2 * len(protocols)) + "\n")
    for name, row in results["rows"].items():
        cells = [name.ljust(widths[0])]
        for p, w in zip(protocols, widths[1:]):
            if p in row:
                cells.append(f"{row[p].video_accuracy * 100:6.2f}%".ljust(w))
            else:
                cells.append("-".ljust(w))
        out.write("  ".join(cells) + "\n")
    return out.getvalue()


def protocol_results_json(results: dict) -> str:
    payload = {"seed": results["seed"], "rows": {}}
    for name, row in results["rows"].items():
        entry = {"weights": list(row["weights"])}
        for p in ("in_domain", "cross_family"):
            if p in row:
                entry[p] = row[p].to_json()
        payload["rows"][name] = entry
    return json.dumps(payload, sort_keys=True, indent=1) + "\n"
