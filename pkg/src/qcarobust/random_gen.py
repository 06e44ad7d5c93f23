"""Null-model data generation.

Every cell is an independent Bernoulli draw at its column's marginal probability.
Randomness is addressed by ``(seed, stream_index)``: each stream gets its own
generator seeded from a ``SeedSequence`` over both values, so any stream can be
reproduced alone and parallel workers never share state.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import CaseMatrix, MarginalProfile, QCAInputError

# v, n, p bounds of the robustness study sweep
STUDY_V_RANGE = (1, 6)
STUDY_N_RANGE = (10, 60)
STUDY_P_RANGE = (0.1, 0.9)


def stream_rng(seed: int, stream_index: int, *tags: int) -> np.random.Generator:
    if stream_index < 0:
        raise ValueError("stream_index must be non-negative")
    return np.random.Generator(np.random.PCG64(
        np.random.SeedSequence([int(seed) & (2**64 - 1), int(stream_index), *tags])))


@dataclass(frozen=True)
class NullModel:
    profile: MarginalProfile
    seed: int
    permute: bool = False  # sensitivity mode: shuffle observed columns instead
    source: CaseMatrix | None = None

    def __post_init__(self):
        if self.permute and self.source is None:
            raise QCAInputError("column-permutation mode needs the observed data")

    @property
    def probs(self) -> np.ndarray:
        p = self.profile
        return np.array(p.condition_probs + (p.outcome_prob,), dtype=float)

    def draws(self, stream_index: int) -> np.ndarray:
        """Uniform draws, shape (n, v + 1); a cell is 1 iff its draw < column prob."""
        rng = stream_rng(self.seed, stream_index)
        return rng.random((self.profile.n, self.profile.v + 1))


def generate_dataset(model: NullModel, stream_index: int) -> CaseMatrix:
    if model.permute:
        return _permuted(model, stream_index)
    cells = (model.draws(stream_index) < model.probs).astype(np.uint8)
    return CaseMatrix.from_arrays(cells[:, :-1], cells[:, -1],
                                  names=_names(model), outcome_name=_outcome_name(model))


def _names(model: NullModel):
    return model.source.condition_names if model.source is not None else None


def _outcome_name(model: NullModel):
    return model.source.outcome_name if model.source is not None else "OUTCOME"


def _permuted(model: NullModel, stream_index: int) -> CaseMatrix:
    src = model.source
    rng = stream_rng(model.seed, stream_index, 1)
    cols = np.column_stack([src.conditions, src.outcome])
    out = np.empty_like(cols)
    for j in range(cols.shape[1]):
        out[:, j] = rng.permutation(cols[:, j])
    return CaseMatrix.from_arrays(out[:, :-1], out[:, -1], names=src.condition_names,
                                  outcome_name=src.outcome_name)


@dataclass(frozen=True)
class Structure:
    v: int
    n: int
    p: float


def _check_range(name, lo, hi):
    if lo > hi:
        raise QCAInputError(f"empty {name} range: {lo}..{hi}")


def draw_structure(rng: np.random.Generator, v_range=STUDY_V_RANGE, n_range=STUDY_N_RANGE,
                   p_range=STUDY_P_RANGE) -> Structure:
    _check_range("v", *v_range)
    _check_range("n", *n_range)
    _check_range("p", *p_range)
    v = int(rng.integers(v_range[0], v_range[1] + 1))
    n = int(rng.integers(n_range[0], n_range[1] + 1))
    p = float(rng.uniform(p_range[0], p_range[1])) if p_range[1] > p_range[0] else float(p_range[0])
    return Structure(v, n, p)


def uniform_structure_draws(v_range, n_range, p_range, seed: int, stream_index: int):
    """Structure plus the (n, v + 1) uniform draws for one study iteration."""
    rng = stream_rng(seed, stream_index)
    s = draw_structure(rng, v_range, n_range, p_range)
    return s, rng.random((s.n, s.v + 1))


def generate_uniform_structure(v_range=STUDY_V_RANGE, n_range=STUDY_N_RANGE,
                               p_range=STUDY_P_RANGE, seed: int = 0, stream_index: int = 0):
    """Random data whose conditions and outcome all share one drawn marginal p."""
    s, draws = uniform_structure_draws(v_range, n_range, p_range, seed, stream_index)
    cells = (draws < s.p).astype(np.uint8)
    return CaseMatrix.from_arrays(cells[:, :-1], cells[:, -1]), s
