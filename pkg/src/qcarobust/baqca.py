"""Bootstrapped robustness assessment.

Estimates how often QCA, run at fixed thresholds on random data with the observed
marginals, still returns a solution. The per-dataset check skips minimization:
a solution exists exactly when some row passes and some row is forbidden, since
otherwise the cover is empty or collapses to the tautology. ``tests/test_baqca.py``
checks this against the full solver.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import kernels
from .dataset import MarginalProfile, QCAInputError
from .minimize import Mode
from .parallel import map_indices
from .random_gen import NullModel, generate_dataset, stream_rng
from .truth_table import check_thresholds

DEFAULT_SIMS = 2000
DEFAULT_BOOT = 1000
DEFAULT_LEVEL = 0.95
# Gelman-Rubin style cut-off for the split-trace diagnostic
CONVERGENCE_CUTOFF = 1.1


@dataclass(frozen=True)
class Settings:
    consistency_threshold: float = 0.85
    conf_n_threshold: int = 1
    mode: Mode = Mode.COMPLEX

    def __post_init__(self):
        check_thresholds(self.consistency_threshold, self.conf_n_threshold)
        object.__setattr__(self, "mode", Mode.parse(self.mode))
        object.__setattr__(self, "conf_n_threshold", int(self.conf_n_threshold))
        object.__setattr__(self, "consistency_threshold", float(self.consistency_threshold))

    def to_dict(self) -> dict:
        return {"consistency_threshold": self.consistency_threshold,
                "conf_n_threshold": self.conf_n_threshold, "mode": self.mode.value}


@dataclass(frozen=True)
class Convergence:
    ratio: float
    segments: int
    converged: bool
    segment_means: tuple[float, ...] = ()


@dataclass(frozen=True)
class BaqcaReport:
    point_estimate: float
    ci_low: float
    ci_high: float
    sims: int
    boot: int
    level: float
    indicator_trace: np.ndarray = field(repr=False)
    settings: Settings
    seed: int
    profile: MarginalProfile
    convergence: Convergence | None = None

    @property
    def hits(self) -> int:
        return int(self.indicator_trace.sum())

    def to_dict(self) -> dict:
        conv = None if self.convergence is None else {
            "ratio": _finite_or_none(self.convergence.ratio),
            "segments": self.convergence.segments,
            "converged": self.convergence.converged,
        }
        return {
            "point_estimate": self.point_estimate,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "level": self.level,
            "hits": self.hits,
            "sims": self.sims,
            "boot": self.boot,
            "seed": self.seed,
            "settings": self.settings.to_dict(),
            "profile": self.profile.to_dict(),
            "convergence": conv,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def write_trace(self, path) -> None:
        with Path(path).open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["iteration", "result"])
            for i, b in enumerate(self.indicator_trace.tolist(), start=1):
                w.writerow([i, b])


def _finite_or_none(x: float):
    return x if np.isfinite(x) else None


def simulate_indicators(model: NullModel, settings: Settings, sims: int,
                        threads: int | None = None) -> np.ndarray:
    """0/1 per simulated dataset: did QCA return a solution?"""
    complex_mode = settings.mode is Mode.COMPLEX
    cons, conf_n = settings.consistency_threshold, settings.conf_n_threshold
    probs = model.probs

    if model.permute:
        def one(i):
            d = generate_dataset(model, i)
            c, h = kernels.config_counts(d.conditions, d.outcome)
            return kernels.result_indicator(c, h, cons, conf_n, complex_mode)
    else:
        def one(i):
            return kernels.uniform_indicator(model.draws(i), probs, cons, conf_n, complex_mode)

    return map_indices(one, sims, threads)


def bootstrap_ci(indicator_trace, boot: int = DEFAULT_BOOT, level: float = DEFAULT_LEVEL,
                 seed: int = 0) -> tuple[float, float]:
    """Percentile interval for the mean of a 0/1 trace from ``boot`` resamples."""
    trace = np.asarray(indicator_trace, dtype=np.int64)
    if trace.size == 0:
        raise ValueError("empty indicator trace")
    if not 0.0 < level < 1.0:
        raise ValueError(f"level must be in (0, 1), got {level}")
    if boot < 1:
        raise ValueError("boot must be >= 1")
    rng = stream_rng(seed, 0, 0xB007)
    means = np.empty(boot)
    # row blocks bound memory for long traces
    block = max(1, 2_000_000 // trace.size)
    for lo in range(0, boot, block):
        hi = min(boot, lo + block)
        idx = rng.integers(0, trace.size, size=(hi - lo, trace.size))
        means[lo:hi] = trace[idx].mean(axis=1)
    tail = (1.0 - level) / 2.0
    low, high = np.quantile(means, [tail, 1.0 - tail])
    return float(low), float(high)


def convergence_check(indicator_trace, segments: int = 4) -> Convergence:
    """Split-trace potential scale reduction factor.

    The trace is cut into ``segments`` contiguous pieces treated as chains; the
    ratio compares pooled to within-piece variance and is 1.0 for a constant
    trace, infinite when pieces are internally constant but disagree.
    """
    trace = np.asarray(indicator_trace, dtype=float)
    if trace.size < 100:
        raise ValueError("convergence check needs at least 100 iterations")
    m = trace.size // segments
    chains = trace[: m * segments].reshape(segments, m)
    means = chains.mean(axis=1)
    within = chains.var(axis=1, ddof=1).mean()
    between = m * means.var(ddof=1)
    if within == 0.0:
        ratio = 1.0 if between == 0.0 else float("inf")
    else:
        pooled = (m - 1) / m * within + between / m
        ratio = float(np.sqrt(pooled / within))
    return Convergence(ratio, segments, ratio <= CONVERGENCE_CUTOFF, tuple(means.tolist()))


def assess(profile: MarginalProfile, settings: Settings | None = None,
           sims: int = DEFAULT_SIMS, boot: int = DEFAULT_BOOT, seed: int = 0,
           level: float = DEFAULT_LEVEL, threads: int | None = None,
           model: NullModel | None = None) -> BaqcaReport:
    settings = settings or Settings()
    if sims < 1 or boot < 1:
        raise QCAInputError("sims and boot must both be >= 1")
    model = model or NullModel(profile, seed)
    trace = simulate_indicators(model, settings, sims, threads)
    point = int(trace.sum()) / sims
    low, high = bootstrap_ci(trace, boot, level, seed)
    # percentile bounds can miss the estimate on tiny or extreme traces
    low, high = min(low, point), max(high, point)
    conv = convergence_check(trace) if sims >= 100 else None
    return BaqcaReport(point, low, high, sims, boot, level, trace, settings, seed,
                       profile, conv)
