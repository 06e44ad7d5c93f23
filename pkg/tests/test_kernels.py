import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qcarobust import kernels
from qcarobust import _kernels_py as pure

try:
    from qcarobust import _kernels as compiled
except ImportError:  # extension not built
    compiled = None

needs_ext = pytest.mark.skipif(compiled is None, reason="compiled extension not built")


def test_backend_is_reported():
    assert kernels.BACKEND in ("cython", "python")
    assert kernels.pure is pure


@needs_ext
@settings(max_examples=200, deadline=None)
@given(v=st.integers(1, 8), n=st.integers(1, 80), seed=st.integers(0, 2 ** 32),
       cons=st.floats(0, 1), conf_n=st.integers(1, 6), complex_mode=st.booleans())
def test_backends_agree(v, n, seed, cons, conf_n, complex_mode):
    rng = np.random.default_rng(seed)
    draws = rng.random((n, v + 1))
    probs = rng.random(v + 1)
    c1, h1 = compiled.uniform_counts(draws, probs)
    c2, h2 = pure.uniform_counts(draws, probs)
    assert np.array_equal(c1, c2) and np.array_equal(h1, h2)
    cells = (draws < probs).astype(np.uint8)
    c3, h3 = compiled.config_counts(np.ascontiguousarray(cells[:, :-1]),
                                    np.ascontiguousarray(cells[:, -1]))
    assert np.array_equal(c1, c3) and np.array_equal(h1, h3)
    assert (compiled.uniform_indicator(draws, probs, cons, conf_n, complex_mode)
            == pure.uniform_indicator(draws, probs, cons, conf_n, complex_mode))
    grid_c = np.linspace(0.5, 1.0, 11)
    grid_n = np.arange(1, 7, dtype=np.int64)
    assert np.array_equal(compiled.grid_indicators(c1, h1, grid_c, grid_n, complex_mode),
                          pure.grid_indicators(c1, h1, grid_c, grid_n, complex_mode))


@pytest.mark.parametrize("impl", [pure, pytest.param(compiled, marks=needs_ext)],
                         ids=["python", "cython"])
def test_counts_layout(impl):
    cond = np.array([[0, 1], [0, 1], [1, 1]], dtype=np.uint8)
    out = np.array([1, 0, 1], dtype=np.uint8)
    counts, hits = impl.config_counts(cond, out)
    assert counts.tolist() == [0, 2, 0, 1]
    assert hits.tolist() == [0, 1, 0, 1]


@pytest.mark.parametrize("impl", [pure, pytest.param(compiled, marks=needs_ext)],
                         ids=["python", "cython"])
def test_indicator_rules(impl):
    counts = np.array([2, 0, 3, 1], dtype=np.int64)
    hits = np.array([2, 0, 1, 1], dtype=np.int64)
    # rows 0 and 3 pass; complex forbids 1 and 2, parsimonious only 2
    assert impl.result_indicator(counts, hits, 0.9, 1, True)
    assert impl.result_indicator(counts, hits, 0.9, 1, False)
    counts2 = np.array([2, 0, 0, 1], dtype=np.int64)
    hits2 = np.array([2, 0, 0, 1], dtype=np.int64)
    assert impl.result_indicator(counts2, hits2, 0.9, 1, True)
    assert not impl.result_indicator(counts2, hits2, 0.9, 1, False)
    # nothing passes
    assert not impl.result_indicator(counts, hits, 1.0, 4, True)


def test_env_switch_selects_fallback(monkeypatch):
    import importlib
    monkeypatch.setenv("QCAROBUST_PURE", "1")
    mod = importlib.reload(kernels)
    try:
        assert mod.BACKEND == "python"
        assert mod.uniform_indicator is pure.uniform_indicator
    finally:
        monkeypatch.delenv("QCAROBUST_PURE")
        importlib.reload(kernels)
