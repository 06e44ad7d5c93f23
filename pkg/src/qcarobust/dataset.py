"""Case data ingestion and crisp-set coding."""
from __future__ import annotations

import csv
import math
from fractions import Fraction
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np


class QCAInputError(ValueError):
    """Bad user input: malformed files, non-binary data, thresholds out of range."""


@dataclass(frozen=True, eq=False)
class CaseMatrix:
    condition_names: tuple[str, ...]
    conditions: np.ndarray  # (n, v) uint8
    outcome: np.ndarray  # (n,) uint8
    case_ids: tuple[str, ...]
    outcome_name: str = "OUTCOME"

    def __post_init__(self):
        cond = np.ascontiguousarray(self.conditions)
        out = np.ascontiguousarray(self.outcome)
        if cond.ndim != 2:
            raise QCAInputError("conditions must be a 2-d matrix")
        n, v = cond.shape
        if n < 1 or v < 1:
            raise QCAInputError(f"need at least one case and one condition, got n={n}, v={v}")
        if out.shape != (n,) or len(self.case_ids) != n:
            raise QCAInputError("conditions, outcome and case_ids disagree on row count")
        if len(self.condition_names) != v:
            raise QCAInputError("condition_names length does not match column count")
        if len(set(self.condition_names)) != v:
            raise QCAInputError("duplicate condition names")
        if self.outcome_name in self.condition_names:
            raise QCAInputError(f"condition named like the outcome: {self.outcome_name!r}")
        for label, arr in (("conditions", cond), ("outcome", out)):
            if not np.isin(arr, (0, 1)).all():
                raise QCAInputError(f"non-binary values in {label}")
        cond = cond.astype(np.uint8)
        out = out.astype(np.uint8)
        cond.flags.writeable = False
        out.flags.writeable = False
        object.__setattr__(self, "conditions", cond)
        object.__setattr__(self, "outcome", out)
        object.__setattr__(self, "condition_names", tuple(self.condition_names))
        object.__setattr__(self, "case_ids", tuple(str(c) for c in self.case_ids))

    @property
    def n(self) -> int:
        return self.conditions.shape[0]

    @property
    def v(self) -> int:
        return self.conditions.shape[1]

    def __eq__(self, other):
        if not isinstance(other, CaseMatrix):
            return NotImplemented
        return (self.condition_names == other.condition_names
                and self.outcome_name == other.outcome_name
                and self.case_ids == other.case_ids
                and np.array_equal(self.conditions, other.conditions)
                and np.array_equal(self.outcome, other.outcome))

    @classmethod
    def from_arrays(cls, conditions, outcome, names=None, case_ids=None,
                    outcome_name="OUTCOME") -> "CaseMatrix":
        conditions = np.asarray(conditions)
        if conditions.ndim == 1:
            conditions = conditions[:, None]
        n, v = conditions.shape
        if names is None:
            names = [chr(ord("A") + j) if v <= 26 else f"X{j + 1}" for j in range(v)]
        if case_ids is None:
            case_ids = [str(i + 1) for i in range(n)]
        return cls(tuple(names), conditions, np.asarray(outcome), tuple(case_ids), outcome_name)


@dataclass(frozen=True)
class MarginalProfile:
    condition_probs: tuple[float, ...]
    outcome_prob: float
    n: int

    def __post_init__(self):
        probs = tuple(float(p) for p in self.condition_probs)
        if not probs:
            raise QCAInputError("profile needs at least one condition")
        for p in probs + (float(self.outcome_prob),):
            if not 0.0 <= p <= 1.0 or math.isnan(p):
                raise QCAInputError(f"probability out of [0, 1]: {p}")
        if int(self.n) < 1:
            raise QCAInputError("profile needs n >= 1")
        object.__setattr__(self, "condition_probs", probs)
        object.__setattr__(self, "outcome_prob", float(self.outcome_prob))
        object.__setattr__(self, "n", int(self.n))

    @property
    def v(self) -> int:
        return len(self.condition_probs)

    def to_dict(self) -> dict:
        return {"condition_probs": list(self.condition_probs),
                "outcome_prob": self.outcome_prob, "n": self.n}


def dichotomize_at_mean(values) -> np.ndarray:
    """1 where a value is at or above the column mean, else 0.

    Ties at the mean code as 1.
    """
    x = np.asarray(values, dtype=float)
    if x.size == 0:
        raise QCAInputError("cannot dichotomize an empty vector")
    if not np.isfinite(x).all():
        raise QCAInputError("non-finite value in column to dichotomize")
    # exact rational comparison n*x_i >= sum(x) on the decimals as written
    # (shortest repr), so a value equal to the decimal mean is a tie
    vals = [Fraction(repr(t)) for t in x.tolist()]
    total = sum(vals)
    n = x.size
    return np.fromiter((n * t >= total for t in vals), dtype=np.uint8, count=n)


def code_presence(values, threshold: float) -> np.ndarray:
    if not math.isfinite(threshold):
        raise QCAInputError("presence threshold must be finite")
    x = np.asarray(values, dtype=float)
    if not np.isfinite(x).all():
        raise QCAInputError("non-finite value in column to code")
    return (x >= threshold).astype(np.uint8)


def marginal_profile(data: CaseMatrix) -> MarginalProfile:
    n = data.n
    probs = tuple(int(s) / n for s in data.conditions.sum(axis=0, dtype=np.int64))
    return MarginalProfile(probs, int(data.outcome.sum(dtype=np.int64)) / n, n)


def negate_outcome(data: CaseMatrix) -> CaseMatrix:
    return CaseMatrix(data.condition_names, data.conditions, 1 - data.outcome,
                      data.case_ids, data.outcome_name)


Coder = Callable[[np.ndarray], np.ndarray]


def load_csv(path, outcome_label: str, id_label: str | None = None,
             coding: Mapping[str, Coder] | None = None,
             columns: Sequence[str] | None = None) -> CaseMatrix:
    """Read a case-by-variable CSV into a CaseMatrix.

    ``coding`` maps column names (outcome included) to a function turning the raw
    numeric column into 0/1, e.g. ``dichotomize_at_mean``. Columns without a rule
    must already be binary. ``columns`` restricts and orders the conditions used.
    """
    path = Path(path)
    if not path.is_file():
        raise QCAInputError(f"no such file: {path}")
    coding = dict(coding or {})
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise QCAInputError(f"{path}: empty file, header row required") from None
        rows = [r for r in reader if r and any(c.strip() for c in r)]
    if outcome_label not in header:
        raise QCAInputError(f"{path}: outcome column {outcome_label!r} not found")
    if id_label is not None and id_label not in header:
        raise QCAInputError(f"{path}: id column {id_label!r} not found")
    if len(set(header)) != len(header):
        raise QCAInputError(f"{path}: duplicate column names in header")
    if not rows:
        raise QCAInputError(f"{path}: no data rows")
    unknown = set(coding) - set(header)
    if unknown:
        raise QCAInputError(f"coding rule for unknown column(s): {sorted(unknown)}")

    if columns is None:
        cond_names = [h for h in header if h not in (outcome_label, id_label)]
    else:
        cond_names = list(columns)
        for c in cond_names:
            if c not in header or c in (outcome_label, id_label):
                raise QCAInputError(f"{path}: condition column {c!r} not usable")
    if not cond_names:
        raise QCAInputError(f"{path}: no condition columns")

    pos = {h: i for i, h in enumerate(header)}

    def numeric(col: str) -> np.ndarray:
        out = np.empty(len(rows))
        for r, row in enumerate(rows, start=2):
            cell = row[pos[col]].strip() if pos[col] < len(row) else ""
            if cell == "" or cell.upper() in ("NA", "NAN"):
                raise QCAInputError(f"{path}: missing value at line {r}, column {col!r}")
            try:
                out[r - 2] = float(cell)
            except ValueError:
                raise QCAInputError(
                    f"{path}: non-numeric cell {cell!r} at line {r}, column {col!r}") from None
        return out

    def coded(col: str, what: str) -> np.ndarray:
        raw = numeric(col)
        if col in coding:
            return np.asarray(coding[col](raw), dtype=np.uint8)
        if not np.isin(raw, (0.0, 1.0)).all():
            raise QCAInputError(f"{path}: non-binary {what} in column {col!r}; "
                                "supply a coding rule")
        return raw.astype(np.uint8)

    conditions = np.column_stack([coded(c, "condition") for c in cond_names])
    outcome = coded(outcome_label, "outcome")
    if id_label is None:
        ids = [str(i + 1) for i in range(len(rows))]
    else:
        ids = [row[pos[id_label]].strip() for row in rows]
    return CaseMatrix(tuple(cond_names), conditions, outcome, tuple(ids), outcome_label)


def write_csv(data: CaseMatrix, path, id_label: str = "case_id") -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([id_label, *data.condition_names, data.outcome_name])
        for cid, row, y in zip(data.case_ids, data.conditions, data.outcome):
            w.writerow([cid, *(int(b) for b in row), int(y)])
