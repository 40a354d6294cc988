"""CSV writers for per-run traces and the shared summary file."""

from __future__ import annotations

import csv
import threading
from collections.abc import Iterable
from pathlib import Path

from .admm import SolverResult, Variant
from .diagnostics import TRACE_COLUMNS, IterationTrace

SUMMARY_COLUMNS: tuple[str, ...] = (
    "seed",
    "variant",
    "iterations",
    "selected_iter",
    "evals",
    "diag_evals",
    "objective",
    "stat_gap",
    "theta",
    "wall_s",
)

_summary_lock = threading.Lock()


def trace_path(out_dir: Path, seed: int) -> Path:
    return out_dir / f"trace_{seed}.csv"


def write_trace(traces: Iterable[IterationTrace], out_csv: Path) -> Path:
    """Write one row per iteration; the header is written even for empty traces."""

    out_csv.parent.mkdir(parents=True, exist_ok=True)
    with out_csv.open("w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        w.writerows(row.as_row() for row in traces)
    return out_csv


def read_trace(path: Path) -> list[dict[str, str]]:
    with path.open(newline="", encoding="utf-8") as f:
        return list(csv.DictReader(f))


def summary_row(seed: int, variant: Variant, result: SolverResult) -> list[str]:
    gap = "" if result.gap is None else repr(result.gap.total)
    theta = "" if result.theta is None else repr(result.theta)
    return [
        str(seed),
        variant.value,
        str(result.iterations_run),
        str(result.iteration),
        str(result.evals),
        str(result.diag_evals),
        repr(result.objective),
        gap,
        theta,
        f"{result.wall_seconds:.6f}",
    ]


def append_summary(row: list[str], out_csv: Path) -> Path:
    """Append *row* to ``summary.csv``; safe to call from concurrent seed runs."""

    with _summary_lock:
        out_csv.parent.mkdir(parents=True, exist_ok=True)
        new_file = not out_csv.exists() or out_csv.stat().st_size == 0
        with out_csv.open("a", newline="", encoding="utf-8") as f:
            w = csv.writer(f, lineterminator="\n")
            if new_file:
                w.writerow(SUMMARY_COLUMNS)
            w.writerow(row)
    return out_csv
