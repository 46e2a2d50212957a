"""Run records: per-round metrics rows, mix events, and result bundles."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import InvalidArgumentError

# Fixed metrics schema; compare_report refuses files that deviate.
CSV_COLUMNS = ("k", "t_sim_s", "loss_global", "acc_test", "traffic_bits", "event")


@dataclass(frozen=True)
class MetricsRecord:
    """One emitted row: state after round k."""

    k: int
    t_sim_s: float
    loss_global: float
    acc_test: float
    traffic_bits: int
    event: str
    per_area_loss: tuple[float, ...] = ()

    def row(self) -> list[str]:
        return [
            str(self.k),
            repr(float(self.t_sim_s)),
            repr(float(self.loss_global)),
            repr(float(self.acc_test)),
            str(self.traffic_bits),
            self.event,
        ]


@dataclass(frozen=True)
class MixEvent:
    """A cross-area merge: area absorbed producer_area's model of age step - operand_step."""

    step: int
    area: int
    operand_step: int
    producer_area: int


@dataclass
class RunResult:
    scheme: str
    records: list[MetricsRecord]
    final_models: list[np.ndarray]
    final_global: np.ndarray
    mix_events: list[MixEvent] = field(default_factory=list)
    idle_ledger: dict[tuple[int, int], float] = field(default_factory=dict)
    report: dict = field(default_factory=dict)
    model_trace: list[list[np.ndarray]] | None = None

    @property
    def total_traffic_bits(self) -> int:
        return sum(r.traffic_bits for r in self.records)

    @property
    def final_loss(self) -> float:
        return self.records[-1].loss_global if self.records else math.nan

    def write_csv(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_COLUMNS)
            for rec in self.records:
                writer.writerow(rec.row())
        return path


def read_metrics_csv(path: str | Path) -> list[dict]:
    """Load a metrics file, enforcing the fixed schema."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader, ()))
        if header != CSV_COLUMNS:
            raise InvalidArgumentError(
                f"{path}: expected columns {CSV_COLUMNS}, found {header}"
            )
        rows = []
        for raw in reader:
            if len(raw) != len(CSV_COLUMNS):
                raise InvalidArgumentError(f"{path}: malformed row {raw}")
            rows.append(
                {
                    "k": int(raw[0]),
                    "t_sim_s": float(raw[1]),
                    "loss_global": float(raw[2]),
                    "acc_test": float(raw[3]),
                    "traffic_bits": int(raw[4]),
                    "event": raw[5],
                }
            )
    return rows


def summarize(rows: Sequence[dict]) -> dict:
    if not rows:
        raise InvalidArgumentError("metrics file has no data rows")
    last = rows[-1]
    return {
        "rounds": last["k"],
        "t_sim_s": last["t_sim_s"],
        "final_loss": last["loss_global"],
        "final_acc": last["acc_test"],
        "total_traffic_bits": sum(r["traffic_bits"] for r in rows),
    }


def time_to_threshold(rows: Sequence[dict], loss_threshold: float) -> float:
    """Simulated seconds until loss_global first drops to the threshold; inf if never."""
    for r in rows:
        if r["loss_global"] <= loss_threshold:
            return r["t_sim_s"]
    return math.inf
