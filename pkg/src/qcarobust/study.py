"""Monte Carlo robustness study: QCA on pure noise across data structures and
researcher choices, followed by logistic models of the spurious-result rate."""
from __future__ import annotations

import csv
import io
import itertools
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np

from . import kernels
from .dataset import QCAInputError
from .glm import DesignSpec, GlmFit, all_pairs, build_design, fit_logistic, linear_ci, predict_prob
from .parallel import map_indices
from .random_gen import (STUDY_N_RANGE, STUDY_P_RANGE, STUDY_V_RANGE, stream_rng,
                         uniform_structure_draws)

CONS = "Cons. Threshold"
CONF_N = "Conf. N Threshold"
COMPLEX = "Complex Solution"
SAMPLE = "Sample Size"
NVARS = "Num. Variables"
DIST = "Dependent Variable Dist."
PREDICTORS = (CONS, CONF_N, COMPLEX, SAMPLE, NVARS, DIST)

# record CSV columns, in file order, and the predictor each one feeds
RECORD_COLUMNS = ("consistency_threshold", "conf_n_threshold", "complex_solution",
                  "sample_size", "num_conditions", "outcome_dist", "spurious")
COLUMN_TERMS = dict(zip(RECORD_COLUMNS[:6], PREDICTORS))

MODEL1 = DesignSpec(PREDICTORS)
MODEL2 = DesignSpec(PREDICTORS, all_pairs(PREDICTORS))

MIN_RECORDS = 1000


@dataclass(frozen=True)
class StudyConfig:
    iterations: int = 100_000
    seed: int = 0
    v_range: tuple[int, int] = STUDY_V_RANGE
    n_range: tuple[int, int] = STUDY_N_RANGE
    p_range: tuple[float, float] = STUDY_P_RANGE
    consistency_range: tuple[float, float] = (0.5, 1.0)
    conf_n_range: tuple[int, int] = (1, 6)
    modes: tuple[str, ...] = ("complex", "parsimonious")
    factorial: bool = False
    consistency_step: float = 0.05

    def __post_init__(self):
        if self.iterations < 1:
            raise QCAInputError("iterations must be >= 1")
        for name in ("v_range", "n_range", "p_range", "consistency_range", "conf_n_range"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise QCAInputError(f"empty {name}: {lo}..{hi}")
        if self.v_range[0] < 1 or self.n_range[0] < 1 or self.conf_n_range[0] < 1:
            raise QCAInputError("v, n and conf_n ranges must start at >= 1")
        if not (0 <= self.p_range[0] and self.p_range[1] <= 1):
            raise QCAInputError("p range must lie within [0, 1]")
        if not (0 <= self.consistency_range[0] and self.consistency_range[1] <= 1):
            raise QCAInputError("consistency range must lie within [0, 1]")
        modes = tuple(m.lower() for m in self.modes)
        if not modes or set(modes) - {"complex", "parsimonious"}:
            raise QCAInputError(f"bad solution modes {self.modes}")
        object.__setattr__(self, "modes", tuple(sorted(set(modes))))

    def factorial_grid(self) -> list[tuple[float, int, int]]:
        lo, hi = self.consistency_range
        steps = int(round((hi - lo) / self.consistency_step)) if hi > lo else 0
        cons = [round(lo + k * self.consistency_step, 10) for k in range(steps + 1)]
        ns = range(self.conf_n_range[0], self.conf_n_range[1] + 1)
        cx = [int(m == "complex") for m in self.modes]
        return list(itertools.product(cons, ns, cx))

    def to_dict(self) -> dict:
        return {"iterations": self.iterations, "seed": self.seed,
                "v_range": list(self.v_range), "n_range": list(self.n_range),
                "p_range": list(self.p_range),
                "consistency_range": list(self.consistency_range),
                "conf_n_range": list(self.conf_n_range), "modes": list(self.modes),
                "factorial": self.factorial}


@dataclass(frozen=True)
class StudyRecord:
    consistency_threshold: float
    conf_n_threshold: int
    complex_solution: bool
    sample_size: int
    num_conditions: int
    outcome_dist: float
    spurious: bool


def _choice(config: StudyConfig, index: int, grid) -> tuple[float, int, int]:
    if grid is not None:
        return grid[index % len(grid)]
    rng = stream_rng(config.seed, index, 1)
    lo, hi = config.consistency_range
    cons = float(rng.uniform(lo, hi)) if hi > lo else float(lo)
    conf_n = int(rng.integers(config.conf_n_range[0], config.conf_n_range[1] + 1))
    if len(config.modes) == 2:
        cx = int(rng.integers(0, 2))
    else:
        cx = int(config.modes[0] == "complex")
    return cons, conf_n, cx


def _iteration(config: StudyConfig, grid) -> Callable[[int], np.ndarray]:
    def one(i: int) -> np.ndarray:
        s, draws = uniform_structure_draws(config.v_range, config.n_range, config.p_range,
                                           config.seed, i)
        cons, conf_n, cx = _choice(config, i, grid)
        probs = np.full(s.v + 1, s.p)
        hit = kernels.uniform_indicator(draws, probs, cons, conf_n, bool(cx))
        return np.array([cons, conf_n, cx, s.n, s.v, s.p, hit], dtype=float)
    return one


def run_study_array(config: StudyConfig, threads: int | None = None,
                    chunk: int = 20_000, sink: Callable[[np.ndarray], None] | None = None
                    ) -> np.ndarray:
    """All study iterations as an (iterations, 7) float array in RECORD_COLUMNS order.

    ``sink`` receives each finished chunk in index order, for streaming output.
    """
    grid = config.factorial_grid() if config.factorial else None
    one = _iteration(config, grid)
    parts = []
    for lo in range(0, config.iterations, chunk):
        hi = min(config.iterations, lo + chunk)
        block = map_indices(lambda i: one(lo + i), hi - lo, threads, dtype=float)
        if sink is not None:
            sink(block)
        parts.append(block)
    return np.vstack(parts)


def as_records(arr: np.ndarray) -> list[StudyRecord]:
    return [StudyRecord(float(r[0]), int(r[1]), bool(r[2]), int(r[3]), int(r[4]), float(r[5]),
                        bool(r[6])) for r in arr]


def run_study(config: StudyConfig, threads: int | None = None) -> list[StudyRecord]:
    return as_records(run_study_array(config, threads))


def format_rows(arr: np.ndarray) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    for r in arr.tolist():
        w.writerow([repr(r[0]), int(r[1]), int(r[2]), int(r[3]), int(r[4]), repr(r[5]),
                    int(r[6])])
    return buf.getvalue()


class RecordWriter:
    """Append-only record CSV; header written once, rows flushed per chunk."""

    def __init__(self, path):
        self.path = Path(path)
        self._fh = self.path.open("w", newline="", encoding="utf-8")
        self._fh.write(",".join(RECORD_COLUMNS) + "\n")
        self._fh.flush()

    def __call__(self, block: np.ndarray) -> None:
        self._fh.write(format_rows(block))
        self._fh.flush()

    def close(self):
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_records(path) -> np.ndarray:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != RECORD_COLUMNS:
            raise QCAInputError(f"{path}: unexpected record header {header}")
        rows = [[float(x) for x in r] for r in reader if r]
    return np.array(rows, dtype=float).reshape(-1, len(RECORD_COLUMNS))


def _columns(records) -> dict[str, np.ndarray]:
    if isinstance(records, np.ndarray):
        arr = records
    else:
        arr = np.array([[r.consistency_threshold, r.conf_n_threshold, r.complex_solution,
                         r.sample_size, r.num_conditions, r.outcome_dist, r.spurious]
                        for r in records], dtype=float)
    cols = {term: arr[:, j] for j, term in enumerate(PREDICTORS)}
    cols["spurious"] = arr[:, 6]
    return cols


@dataclass(frozen=True)
class StudyModels:
    model1: GlmFit
    model2: GlmFit
    means: Mapping[str, float] = field(default_factory=dict)

    def __iter__(self):
        return iter((self.model1, self.model2))


def fit_models(records, tol: float = 1e-8, max_iter: int = 50) -> StudyModels:
    """Model 1: six main effects. Model 2: plus all fifteen pairwise products."""
    cols = _columns(records)
    y = cols["spurious"]
    if len(y) < MIN_RECORDS:
        warnings.warn(f"only {len(y)} study records; at least {MIN_RECORDS} recommended",
                      stacklevel=2)
    fits = []
    for spec in (MODEL1, MODEL2):
        X = build_design(cols, spec)
        fits.append(fit_logistic(y, X, tol, max_iter, spec=spec))
    means = {t: float(cols[t].mean()) for t in PREDICTORS}
    return StudyModels(fits[0], fits[1], means)


def predicted_curves(fit: GlmFit, vary: str, panel: str | None, vary_values: Sequence[float],
                     panel_values: Sequence[float] = (), means: Mapping[str, float] | None = None,
                     level: float = 0.95) -> list[dict]:
    """Fitted spuriousness over ``vary`` at each ``panel`` value, others at their means."""
    terms = fit.spec.terms if fit.spec is not None else PREDICTORS
    for name in (vary, panel):
        if name is not None and name not in terms:
            raise QCAInputError(f"unknown predictor {name!r}")
    means = dict(means or {})
    missing = [t for t in terms if t not in means]
    if missing:
        raise QCAInputError(f"no mean supplied for {missing}")
    rows = []
    panels = list(panel_values) if panel is not None else [None]
    for pv in panels:
        for x in vary_values:
            rec = dict(means)
            rec[vary] = float(x)
            if panel is not None:
                rec[panel] = float(pv)
            lo, hi = linear_ci(fit, rec, level)
            rows.append({"panel": panel or "", "panel_value": "" if pv is None else float(pv),
                         "vary": vary, "vary_value": float(x),
                         "probability": predict_prob(fit, rec), "ci_low": lo, "ci_high": hi})
    return rows


VARY_GRIDS = {
    CONS: tuple(round(0.5 + 0.05 * k, 2) for k in range(11)),
    CONF_N: tuple(float(k) for k in range(1, 7)),
    COMPLEX: (0.0, 1.0),
    SAMPLE: tuple(float(k) for k in range(10, 61, 5)),
    NVARS: tuple(float(k) for k in range(1, 7)),
    DIST: tuple(round(0.1 + 0.05 * k, 2) for k in range(17)),
}
PANEL_VALUES = {CONS: (0.5, 0.75, 1.0), CONF_N: (1.0, 3.0, 6.0), COMPLEX: (0.0, 1.0)}


def figure_curves(models: StudyModels) -> dict[str, list[dict]]:
    """Plot data for the four study figures.

    figure1: each predictor varied alone under Model 1. figures 2-4: Model 2 with
    outcome distribution, number of conditions and sample size on the x-axis,
    one panel per researcher-choice variable.
    """
    out = {"figure1": []}
    for term in PREDICTORS:
        out["figure1"] += predicted_curves(models.model1, term, None, VARY_GRIDS[term],
                                           means=models.means)
    for name, x in (("figure2", DIST), ("figure3", NVARS), ("figure4", SAMPLE)):
        rows = predicted_curves(models.model2, x, None, VARY_GRIDS[x], means=models.means)
        for panel in (CONS, CONF_N, COMPLEX):
            rows += predicted_curves(models.model2, x, panel, VARY_GRIDS[x],
                                     PANEL_VALUES[panel], models.means)
        out[name] = rows
    return out


def write_curves(rows: Sequence[dict], path) -> None:
    fields = ["panel", "panel_value", "vary", "vary_value", "probability", "ci_low", "ci_high"]
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fields, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})


def consistency_effect(fit: GlmFit, means: Mapping[str, float], outcome_dist: float) -> float:
    """Change in fitted spuriousness moving consistency 0.5 -> 1 at a given outcome share."""
    rows = predicted_curves(fit, CONS, DIST, (0.5, 1.0), (outcome_dist,), means)
    return rows[1]["probability"] - rows[0]["probability"]
