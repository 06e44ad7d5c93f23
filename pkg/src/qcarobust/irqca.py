"""Threshold recommendation from a fitted spuriousness surface.

Random datasets matching the observed profile are run through QCA at every
(consistency, configurational N) grid point, and a logit of the result indicator
on those two thresholds is inverted per N: the recommendation is the smallest
grid consistency whose fitted spuriousness is at most alpha.

Three surfaces are available. ``cell`` (default) gives every grid cell its own
parameter; ``slope`` fits one consistency slope per N; ``linear`` uses
consistency, N and their product. Spuriousness is flat over consistency ranges
that no small cell can distinguish (above 5/6 with six cases or fewer, only a
perfect row passes), and the smooth surfaces under-predict those plateaus.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from .baqca import DEFAULT_SIMS
from .dataset import MarginalProfile, QCAInputError
from .glm import (DesignSpec, GlmFit, build_design, fit_logistic, jsonable, linear_ci,
                  predict_prob)
from .minimize import Mode
from .parallel import map_indices
from .random_gen import NullModel

CONSISTENCY_GRID = tuple(round(0.5 + 0.05 * k, 2) for k in range(11))
CONF_N_GRID = tuple(range(1, 7))
DEFAULT_ALPHAS = (0.10, 0.05, 0.01, 0.001)
SURFACES = ("cell", "slope", "linear")

CONS = "consistency"
CONF_N = "conf_n"


def _cell(c: float, n: int) -> str:
    return f"cell[{c:.4f},{n}]"


def _level(n: int) -> str:
    return f"conf_n={n}"


@dataclass(frozen=True)
class Grid:
    consistencies: tuple[float, ...] = CONSISTENCY_GRID
    conf_ns: tuple[int, ...] = CONF_N_GRID

    def __post_init__(self):
        cons = tuple(float(c) for c in self.consistencies)
        ns = tuple(int(n) for n in self.conf_ns)
        if not cons or not ns:
            raise QCAInputError("empty threshold grid")
        if any(not 0.0 <= c <= 1.0 for c in cons) or any(n < 1 for n in ns):
            raise QCAInputError("grid thresholds out of range")
        object.__setattr__(self, "consistencies", tuple(sorted(set(cons))))
        object.__setattr__(self, "conf_ns", tuple(sorted(set(ns))))

    def to_dict(self) -> dict:
        return {"consistency": list(self.consistencies), "conf_n": list(self.conf_ns)}


@dataclass(frozen=True)
class Surface:
    """A logit design over the two thresholds, tied to one grid."""
    kind: str
    grid: Grid
    spec: DesignSpec = field(init=False)

    def __post_init__(self):
        if self.kind not in SURFACES:
            raise QCAInputError(f"unknown surface {self.kind!r}; choose from {SURFACES}")
        g = self.grid
        if self.kind == "linear":
            spec = DesignSpec((CONS, CONF_N), ((CONS, CONF_N),))
        elif self.kind == "slope":
            levels = tuple(_level(n) for n in g.conf_ns[1:])
            spec = DesignSpec((CONS,) + levels, tuple((CONS, lv) for lv in levels))
        else:
            spec = DesignSpec(tuple(_cell(c, n) for c in g.consistencies for n in g.conf_ns),
                              intercept=False)
        object.__setattr__(self, "spec", spec)

    def record(self, c: float, n: int) -> dict:
        rec = {CONS: float(c), CONF_N: float(n)}
        if self.kind == "slope":
            for m in self.grid.conf_ns[1:]:
                rec[_level(m)] = float(n == m)
        elif self.kind == "cell":
            if not any(abs(c - g) < 1e-9 for g in self.grid.consistencies) \
                    or n not in self.grid.conf_ns:
                raise QCAInputError(f"({c}, {n}) is not a grid point of the cell surface")
            for gc in self.grid.consistencies:
                for gn in self.grid.conf_ns:
                    rec[_cell(gc, gn)] = float(abs(c - gc) < 1e-9 and n == gn)
        return rec

    def grid_records(self) -> dict:
        rows = [self.record(c, n) for c in self.grid.consistencies for n in self.grid.conf_ns]
        return {k: np.array([r[k] for r in rows]) for k in rows[0]}


class Unattainable:
    """Sentinel: no grid consistency brings fitted spuriousness down to alpha."""

    def __repr__(self):
        return "UNATTAINABLE"

    def __bool__(self):
        return False


UNATTAINABLE = Unattainable()


@dataclass(frozen=True)
class RecommendationRow:
    conf_n: int
    min_consistency: float | Unattainable
    ci_low: float | Unattainable
    ci_high: float | Unattainable
    fitted: float | None = None
    non_monotone: bool = False

    @property
    def attainable(self) -> bool:
        return self.min_consistency is not UNATTAINABLE


@dataclass(frozen=True)
class Recommendation:
    alpha: float
    rows: tuple[RecommendationRow, ...]
    fit: GlmFit
    grid: Grid
    degenerate: str | None = None
    surface: str = "cell"

    def to_dict(self) -> dict:
        def val(x):
            return None if x is UNATTAINABLE else x
        return {
            "alpha": self.alpha,
            "degenerate": self.degenerate,
            "surface": self.surface,
            "separated_fit": self.fit.separated,
            "rows": [{"conf_n": r.conf_n, "min_consistency": val(r.min_consistency),
                      "ci_low": val(r.ci_low), "ci_high": val(r.ci_high),
                      "fitted_probability": r.fitted, "non_monotone": r.non_monotone}
                     for r in self.rows],
        }


@dataclass(frozen=True)
class SweepResult:
    """Per-dataset grid indicators, shape (sims, len(consistencies), len(conf_ns))."""
    indicators: np.ndarray
    grid: Grid
    mode: Mode

    @property
    def rates(self) -> np.ndarray:
        return self.indicators.mean(axis=0)


def sweep(profile: MarginalProfile, mode=Mode.COMPLEX, sims: int = DEFAULT_SIMS,
          seed: int = 0, grid: Grid = Grid(), threads: int | None = None) -> SweepResult:
    mode = Mode.parse(mode)
    model = NullModel(profile, seed)
    probs = model.probs
    cons = np.asarray(grid.consistencies, dtype=float)
    ns = np.asarray(grid.conf_ns, dtype=np.int64)
    complex_mode = mode is Mode.COMPLEX

    def one(i):
        c, h = kernels.uniform_counts(model.draws(i), probs)
        return kernels.grid_indicators(c, h, cons, ns, complex_mode)

    return SweepResult(map_indices(one, sims, threads), grid, mode)


def fit_sweep(result: SweepResult, surface: Surface | str = "cell") -> GlmFit:
    """Grouped-binomial logit over the grid; same estimates as the per-dataset fit."""
    if isinstance(surface, str):
        surface = Surface(surface, result.grid)
    sims = result.indicators.shape[0]
    hits = result.indicators.sum(axis=0, dtype=np.int64).ravel().astype(float)
    X = build_design(surface.grid_records(), surface.spec)
    X2 = np.vstack([X, X])
    y2 = np.concatenate([np.ones(len(hits)), np.zeros(len(hits))])
    w2 = np.concatenate([hits, sims - hits])
    keep = w2 > 0
    return fit_logistic(y2[keep], X2[keep], spec=surface.spec, weights=w2[keep])


def _recorder(surface: Surface | None):
    if surface is None:
        return lambda c, n: {CONS: float(c), CONF_N: float(n)}
    return surface.record


def invert_threshold(fit: GlmFit, conf_n: int, alpha: float,
                     consistencies: Sequence[float] = CONSISTENCY_GRID,
                     surface: Surface | None = None):
    """Smallest grid consistency with fitted spuriousness <= alpha.

    Returns ``(threshold or UNATTAINABLE, non_monotone)``; the flag is set when
    the fitted curve rises anywhere along the consistency grid at this N.
    """
    record = _recorder(surface)
    probs = [predict_prob(fit, record(c, conf_n)) for c in consistencies]
    non_mono = any(b > a + 1e-12 for a, b in zip(probs, probs[1:]))
    return _first_at_most(probs, consistencies, alpha), non_mono


def _first_at_most(values, consistencies, alpha):
    for c, p in zip(consistencies, values):
        if p <= alpha:
            return c
    return UNATTAINABLE


def recommend_from_fit(fit: GlmFit, alphas: Iterable[float], grid: Grid = Grid(),
                       level: float = 0.95, degenerate: str | None = None,
                       surface: Surface | None = None) -> list[Recommendation]:
    record = _recorder(surface)
    out = []
    for alpha in sorted(set(float(a) for a in alphas), reverse=True):
        if not 0.0 < alpha < 1.0:
            raise QCAInputError(f"alpha must lie in (0, 1), got {alpha}")
        rows = []
        for n in grid.conf_ns:
            best, non_mono = invert_threshold(fit, n, alpha, grid.consistencies, surface)
            bands = [linear_ci(fit, record(c, n), level) for c in grid.consistencies]
            # optimistic end uses the lower probability band, conservative end the upper
            lo = _first_at_most([b[0] for b in bands], grid.consistencies, alpha)
            hi = _first_at_most([b[1] for b in bands], grid.consistencies, alpha)
            fitted = None if best is UNATTAINABLE else predict_prob(fit, record(best, n))
            rows.append(RecommendationRow(n, best, lo, hi, fitted, non_mono))
        out.append(Recommendation(alpha, tuple(rows), fit, grid, degenerate,
                                  surface.kind if surface else "linear"))
    return out


def recommend(profile: MarginalProfile, mode=Mode.COMPLEX,
              alphas: Iterable[float] = DEFAULT_ALPHAS, sims: int = DEFAULT_SIMS,
              seed: int = 0, grid: Grid = Grid(), threads: int | None = None,
              surface: str = "cell", level: float = 0.95,
              result: SweepResult | None = None) -> list[Recommendation]:
    if sims < 1:
        raise QCAInputError("sims must be >= 1")
    for a in alphas:
        if not 0.0 < float(a) < 1.0:
            raise QCAInputError(f"alpha must lie in (0, 1), got {a}")
    result = result or sweep(profile, mode, sims, seed, grid, threads)
    surf = Surface(surface, result.grid)
    total = int(result.indicators.sum())
    degenerate = None
    if total == 0:
        degenerate = "no random dataset returned a result at any grid point"
    elif total == result.indicators.size:
        degenerate = "every random dataset returned a result at every grid point"
    fit = fit_sweep(result, surf)
    return recommend_from_fit(fit, alphas, result.grid, level, degenerate, surf)


def curve_rows(fit: GlmFit, grid: Grid = Grid(), level: float = 0.95,
               surface: Surface | None = None) -> list[dict]:
    record = _recorder(surface)
    rows = []
    for n in grid.conf_ns:
        for c in grid.consistencies:
            lo, hi = linear_ci(fit, record(c, n), level)
            rows.append({"conf_n": n, "consistency": c,
                         "fitted_probability": predict_prob(fit, record(c, n)),
                         "ci_low": lo, "ci_high": hi})
    return rows


def write_plot_csv(rows: Sequence[dict], path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, ["conf_n", "consistency", "fitted_probability", "ci_low",
                                "ci_high"], lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})


def _cell_text(x) -> str:
    if x is UNATTAINABLE:
        return "UNATTAINABLE"
    return "" if x is None else repr(x)


def write_recommendation_csv(recs: Sequence[Recommendation], path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["alpha", "conf_n", "min_consistency", "ci_low", "ci_high",
                    "fitted_probability", "non_monotone"])
        for rec in recs:
            for r in rec.rows:
                w.writerow([repr(rec.alpha), r.conf_n, _cell_text(r.min_consistency),
                            _cell_text(r.ci_low), _cell_text(r.ci_high), _cell_text(r.fitted),
                            int(r.non_monotone)])


def recommendations_payload(recs: Sequence[Recommendation]) -> dict:
    payload = {"recommendations": [r.to_dict() for r in recs]}
    if recs:
        payload["grid"] = recs[0].grid.to_dict()
        payload["surface"] = recs[0].surface
        payload["fit"] = recs[0].fit.to_dict()
    return jsonable(payload)
