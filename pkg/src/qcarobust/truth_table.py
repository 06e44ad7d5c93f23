"""Truth table construction and row classification."""
from __future__ import annotations

import csv
import enum
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import kernels
from .dataset import CaseMatrix, QCAInputError

MAX_CONDITIONS = 26
# absolute slack on hits - threshold * cases, so 6/7 vs 0.857142857 passes
CONSISTENCY_TOL = 1e-12


class Status(str, enum.Enum):
    PASS = "PASS"
    FAIL = "FAIL"
    REMAINDER = "REMAINDER"


@dataclass(frozen=True)
class TruthRow:
    bits: tuple[int, ...]
    case_count: int
    outcome_count: int
    consistency: float  # nan for remainders
    status: Status

    @property
    def index(self) -> int:
        return bits_to_index(self.bits)


@dataclass(frozen=True)
class TruthTable:
    rows: tuple[TruthRow, ...]
    v: int
    consistency_threshold: float
    conf_n_threshold: int
    condition_names: tuple[str, ...] = ()

    @property
    def thresholds(self) -> tuple[float, int]:
        return self.consistency_threshold, self.conf_n_threshold

    def indices(self, status: Status) -> list[int]:
        return [i for i, r in enumerate(self.rows) if r.status is status]

    def to_csv(self, path) -> None:
        names = self.condition_names or tuple(f"X{j + 1}" for j in range(self.v))
        with Path(path).open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow([*names, "n", "outcome_n", "consistency", "status"])
            for r in self.rows:
                cons = "" if r.case_count == 0 else repr(r.consistency)
                w.writerow([*r.bits, r.case_count, r.outcome_count, cons, r.status.value])


def bits_to_index(bits) -> int:
    idx = 0
    for b in bits:
        idx = (idx << 1) | int(b)
    return idx


def index_to_bits(idx: int, v: int) -> tuple[int, ...]:
    return tuple((idx >> (v - 1 - j)) & 1 for j in range(v))


def check_thresholds(consistency_threshold: float, conf_n_threshold: int) -> None:
    if not 0.0 <= consistency_threshold <= 1.0:
        raise QCAInputError(f"consistency threshold {consistency_threshold} outside [0, 1]")
    if int(conf_n_threshold) != conf_n_threshold or conf_n_threshold < 1:
        raise QCAInputError(f"configurational N threshold must be a positive integer, "
                            f"got {conf_n_threshold}")


def row_passes(case_count: int, outcome_count: int, consistency_threshold: float,
               conf_n_threshold: int) -> bool:
    return (case_count >= conf_n_threshold and case_count > 0
            and outcome_count >= consistency_threshold * case_count - CONSISTENCY_TOL)


def build_truth_table(data: CaseMatrix, consistency_threshold: float,
                      conf_n_threshold: int) -> TruthTable:
    check_thresholds(consistency_threshold, conf_n_threshold)
    if data.v > MAX_CONDITIONS:
        raise QCAInputError(f"at most {MAX_CONDITIONS} conditions supported, got {data.v}")
    counts, hits = kernels.config_counts(data.conditions, data.outcome)
    rows = []
    for idx, (c, h) in enumerate(zip(counts.tolist(), hits.tolist())):
        if c == 0:
            status, cons = Status.REMAINDER, float("nan")
        else:
            cons = h / c
            ok = row_passes(c, h, consistency_threshold, conf_n_threshold)
            status = Status.PASS if ok else Status.FAIL
        rows.append(TruthRow(index_to_bits(idx, data.v), c, h, cons, status))
    return TruthTable(tuple(rows), data.v, float(consistency_threshold),
                      int(conf_n_threshold), data.condition_names)


def passing_rows(table: TruthTable) -> list[TruthRow]:
    return [r for r in table.rows if r.status is Status.PASS]


def table_counts(table: TruthTable) -> tuple[np.ndarray, np.ndarray]:
    counts = np.fromiter((r.case_count for r in table.rows), dtype=np.int64)
    hits = np.fromiter((r.outcome_count for r in table.rows), dtype=np.int64)
    return counts, hits
