"""Reading, writing, and plotting of run artifacts.

Traces are plain CSV with a fixed header; floats are written with repr so
they round-trip losslessly.  Figures are rendered with matplotlib next to
the delimited output.
"""

from __future__ import annotations

import csv
import json
import math
import os
from typing import Optional, Sequence

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

# keep SVG text as text so labels stay greppable
plt.rcParams["svg.fonttype"] = "none"

from .runner import EpochRecord, RunReport

__all__ = [
    "TRACE_FIELDS",
    "PLOT_FLOOR",
    "TraceFormatError",
    "write_trace",
    "read_trace",
    "write_summary",
    "median_curves",
    "write_medians",
    "plot_traces",
]

TRACE_FIELDS = ("epoch", "evals", "wall_s", "best_f", "sigma_prime")
PLOT_FLOOR = 1e-10


class TraceFormatError(ValueError):
    """A trace file that does not parse; points at the offending line."""

    def __init__(self, path: str, line: int, why: str):
        super().__init__(f"{path}:{line}: {why}")
        self.path = path
        self.line = line
        self.why = why


def write_trace(path: str, rows: Sequence[EpochRecord]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(TRACE_FIELDS) + "\n")
        for r in rows:
            fh.write(f"{r.epoch},{r.evals},{r.wall_s!r},{r.best_f!r},{r.sigma_prime!r}\n")


def read_trace(path: str) -> list[EpochRecord]:
    """Parse a trace file back into records, or point at the bad line."""
    rows: list[EpochRecord] = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise TraceFormatError(path, 1, "empty file") from None
        if tuple(header) != TRACE_FIELDS:
            raise TraceFormatError(path, 1,
                                   f"expected header {','.join(TRACE_FIELDS)}")
        for lineno, rec in enumerate(reader, start=2):
            if not rec:
                continue
            if len(rec) != len(TRACE_FIELDS):
                raise TraceFormatError(path, lineno,
                                       f"expected {len(TRACE_FIELDS)} fields, got {len(rec)}")
            try:
                rows.append(EpochRecord(epoch=int(rec[0]), evals=int(rec[1]),
                                        wall_s=float(rec[2]), best_f=float(rec[3]),
                                        sigma_prime=float(rec[4])))
            except ValueError as exc:
                raise TraceFormatError(path, lineno, str(exc)) from None
    return rows


def write_summary(path: str, report: RunReport, config_hash: str,
                  extra: Optional[dict] = None) -> None:
    payload = {
        "f_star": report.f_star,
        "evals": report.total_evals,
        "wall_seconds": report.total_wall_s,
        "config_hash": config_hash,
        "failed_epochs": report.failed_epochs,
        "x_star": None if report.x_star is None else [float(v) for v in report.x_star],
    }
    if extra:
        payload.update(extra)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def median_curves(traces: Sequence[Sequence[EpochRecord]]) -> list[tuple[int, float, float]]:
    """Per-index medians across seeds: (index, median evals, median best-f).

    Shorter runs are extended by carrying their final values forward, the
    usual convention for median convergence curves.
    """
    traces = [t for t in traces if t]
    if not traces:
        return []
    length = max(len(t) for t in traces)
    out = []
    for i in range(length):
        evals = [t[min(i, len(t) - 1)].evals for t in traces]
        bests = [t[min(i, len(t) - 1)].best_f for t in traces]
        out.append((i, float(np.median(evals)), float(np.median(bests))))
    return out


MEDIAN_FIELDS = ("function", "algorithm", "epoch", "median_evals", "median_best_f", "status")


def write_medians(path: str, records: Sequence[dict]) -> None:
    """Write aggregated rows; entries with status != ok mark failed cells."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=MEDIAN_FIELDS)
        writer.writeheader()
        for rec in records:
            writer.writerow({k: rec.get(k, "") for k in MEDIAN_FIELDS})


def _clip_for_log(values: Sequence[float], floor: float) -> tuple[np.ndarray, bool]:
    arr = np.asarray(values, dtype=float)
    clipped = bool(np.any(arr < floor))
    return np.maximum(arr, floor), clipped


def plot_traces(labeled: Sequence[tuple[str, Sequence[EpochRecord]]], out_path: str,
                *, x_axis: str = "evals", floor: float = PLOT_FLOOR,
                title: Optional[str] = None) -> None:
    """Render one labeled best-cost series per trace to an image file.

    The cost axis is logarithmic; values below the floor are clipped (not
    dropped), and the legend says so for any series that was touched.
    """
    if x_axis not in ("evals", "wall_s"):
        raise ValueError("x_axis must be 'evals' or 'wall_s'")
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    for label, rows in labeled:
        xs = [getattr(r, x_axis) for r in rows]
        ys, clipped = _clip_for_log([r.best_f for r in rows], floor)
        if clipped:
            label = f"{label} (clipped at {floor:g})"
        ax.plot(xs, ys, label=label, linewidth=1.4)
    ax.set_yscale("log")
    ax.set_xlabel("evaluations" if x_axis == "evals" else "wall-clock seconds")
    ax.set_ylabel("best cost")
    if title:
        ax.set_title(title)
    ax.grid(True, which="both", alpha=0.25)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(out_path)
    plt.close(fig)
