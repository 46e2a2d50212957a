"""Comparison tables over persisted metrics files."""

from __future__ import annotations

import math
from pathlib import Path
from typing import Sequence

from ..errors import InvalidArgumentError
from ..records import read_metrics_csv, summarize, time_to_threshold


def _scheme_label(path: Path) -> str:
    stem = path.stem
    return stem[len("metrics_"):] if stem.startswith("metrics_") else stem


def compare_rows(
    paths: Sequence[str | Path], threshold: float | None = None
) -> list[dict]:
    """One summary row per metrics file, in input order."""
    if not paths:
        raise InvalidArgumentError("at least one metrics file is required")
    rows = []
    for p in paths:
        path = Path(p)
        data = read_metrics_csv(path)
        summary = summarize(data)
        row = {"run": _scheme_label(path), **summary}
        if threshold is not None:
            row["time_to_threshold_s"] = time_to_threshold(data, threshold)
        rows.append(row)
    return rows


def _fmt(value) -> str:
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf"
        return f"{value:.6g}"
    return str(value)


def compare_report(
    paths: Sequence[str | Path], threshold: float | None = None
) -> str:
    """Deterministic fixed-width table of final loss/accuracy/traffic.

    The time-to-threshold column appears only when a loss threshold is given.
    """
    rows = compare_rows(paths, threshold)
    columns = ["run", "rounds", "t_sim_s", "final_loss", "final_acc", "total_traffic_bits"]
    if threshold is not None:
        columns.append("time_to_threshold_s")
    cells = [[_fmt(row[c]) for c in columns] for row in rows]
    widths = [
        max(len(col), *(len(r[i]) for r in cells)) for i, col in enumerate(columns)
    ]
    lines = [
        "  ".join(col.ljust(w) for col, w in zip(columns, widths)).rstrip(),
        "  ".join("-" * w for w in widths),
    ]
    for r in cells:
        lines.append("  ".join(v.ljust(w) for v, w in zip(r, widths)).rstrip())
    return "\n".join(lines)
