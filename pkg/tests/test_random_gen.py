import numpy as np
import pytest
from scipy import stats

from qcarobust import MarginalProfile, NullModel, QCAInputError, generate_dataset
from qcarobust.random_gen import (STUDY_N_RANGE, STUDY_V_RANGE, draw_structure,
                                  generate_uniform_structure, stream_rng)


def test_degenerate_columns():
    model = NullModel(MarginalProfile((0.0, 1.0), 1.0, 50), seed=3)
    d = generate_dataset(model, 0)
    assert d.conditions[:, 0].sum() == 0
    assert d.conditions[:, 1].sum() == 50
    assert d.outcome.sum() == 50


def test_column_mean_within_three_sigma():
    d = generate_dataset(NullModel(MarginalProfile((0.5,), 0.5, 10_000), seed=11), 0)
    assert abs(d.conditions[:, 0].mean() - 0.5) < 0.015
    assert abs(d.outcome.mean() - 0.5) < 0.015


def test_streams_are_reproducible_and_distinct():
    model = NullModel(MarginalProfile((0.3, 0.6), 0.4, 40), seed=2 ** 63 + 5)
    a, b = generate_dataset(model, 7), generate_dataset(model, 7)
    assert a == b
    assert generate_dataset(model, 8) != a
    assert generate_dataset(NullModel(model.profile, seed=6), 7) != a
    # negative and oversized seeds fold into 64 bits rather than failing
    assert stream_rng(-1, 0).random() == stream_rng(2 ** 64 - 1, 0).random()


def test_point_ranges():
    d, s = generate_uniform_structure((3, 3), (20, 20), (0.5, 0.5), seed=1)
    assert (s.v, s.n, s.p) == (3, 20, 0.5)
    assert d.conditions.shape == (20, 3)


def test_low_p_column_sums():
    sums = []
    for i in range(200):
        d, s = generate_uniform_structure((4, 4), (50, 50), (0.1, 0.1), seed=5, stream_index=i)
        sums.append(d.conditions.sum(axis=0).mean())
    assert abs(np.mean(sums) - 5.0) < 0.3


def test_empty_range_rejected():
    with pytest.raises(QCAInputError, match="empty"):
        generate_uniform_structure((4, 3), (20, 20), (0.5, 0.5))


def test_structure_draws_uniform():
    rng = stream_rng(9, 0)
    draws = [draw_structure(rng) for _ in range(30_000)]
    vs = np.bincount([s.v for s in draws])[STUDY_V_RANGE[0]:]
    ns = np.bincount([s.n for s in draws])[STUDY_N_RANGE[0]:]
    assert len(vs) == 6 and len(ns) == 51
    assert stats.chisquare(vs).pvalue > 0.001
    assert stats.chisquare(ns).pvalue > 0.001
    ps = np.array([s.p for s in draws])
    assert 0.1 <= ps.min() and ps.max() <= 0.9
    assert stats.kstest(ps, stats.uniform(0.1, 0.8).cdf).pvalue > 0.001


def test_independence_of_columns():
    model = NullModel(MarginalProfile((0.3, 0.5, 0.7), 0.4, 200), seed=21)
    rs = []
    for i in range(10_000):
        d = generate_dataset(model, i)
        m = np.column_stack([d.conditions, d.outcome]).astype(float)
        rs.append(np.corrcoef(m, rowvar=False)[np.triu_indices(4, 1)])
    assert np.abs(np.mean(rs, axis=0)).max() < 0.01


def test_marginal_fidelity():
    probs = (0.2, 0.5, 0.8)
    n = 60
    model = NullModel(MarginalProfile(probs, 0.35, n), seed=4)
    sums = np.array([np.r_[d.conditions.sum(axis=0), d.outcome.sum()]
                     for d in (generate_dataset(model, i) for i in range(1000))])
    for j, p in enumerate(probs + (0.35,)):
        observed = np.bincount(sums[:, j], minlength=n + 1)
        expected = stats.binom(n, p).pmf(np.arange(n + 1)) * len(sums)
        # pool sparse tails so the chi-square approximation holds
        keep = expected >= 5
        obs = np.r_[observed[keep], observed[~keep].sum()]
        exp = np.r_[expected[keep], expected[~keep].sum()]
        assert stats.chisquare(obs, exp * obs.sum() / exp.sum()).pvalue > 0.001


def test_permutation_mode_keeps_column_sums():
    from qcarobust import CaseMatrix, marginal_profile
    src = CaseMatrix.from_arrays([[1, 0], [1, 1], [0, 0], [0, 1], [1, 1]], [1, 0, 0, 1, 1])
    model = NullModel(marginal_profile(src), seed=3, permute=True, source=src)
    d = generate_dataset(model, 4)
    assert d.conditions.sum(axis=0).tolist() == src.conditions.sum(axis=0).tolist()
    assert d.outcome.sum() == src.outcome.sum()
    assert generate_dataset(model, 4) == d
