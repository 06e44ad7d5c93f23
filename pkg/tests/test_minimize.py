import itertools

import numpy as np
import pytest
from hypothesis import example, given, settings, strategies as st

from oracles import exhaustive_minimum, pattern_covers, row_bits
from qcarobust import CaseMatrix, Implicant, Mode, Status, build_truth_table, solve
from qcarobust.minimize import (Literal, minimal_cover, prime_implicants, render_recipe,
                                solve_rows)


def statuses(draw_v, rng):
    return {i: rng.choice(["PASS", "FAIL", "REMAINDER"]) for i in range(2 ** draw_v)}


def check_against_oracle(status, v):
    on = [i for i, s in status.items() if s == "PASS"]
    for parsimonious in (False, True):
        dc = [i for i, s in status.items() if s == "REMAINDER"] if parsimonious else []
        got = solve_rows(on, dc, v)
        want = exhaustive_minimum(status, v, parsimonious)
        if want is None:
            assert got is None
            continue
        assert got is not None
        assert len(got) == want[0]
        assert sum(r.size for r in got) == want[1]
        forbidden = [i for i, s in status.items()
                     if s == "FAIL" or (s == "REMAINDER" and not parsimonious)]
        for i in on:
            assert any(r.covers(i) for r in got)
        for i in forbidden:
            assert not any(r.covers(i) for r in got)


@settings(max_examples=300, deadline=None)
@given(v=st.integers(1, 4), seed=st.integers(0, 2 ** 32))
def test_random_tables_match_exhaustive_search(v, seed):
    rng = np.random.default_rng(seed)
    weights = rng.dirichlet(np.ones(3))
    status = {i: str(rng.choice(["PASS", "FAIL", "REMAINDER"], p=weights))
              for i in range(2 ** v)}
    check_against_oracle(status, v)


def test_exhaustive_v2():
    # every one of the 3^4 status assignments for two conditions
    for combo in itertools.product(["PASS", "FAIL", "REMAINDER"], repeat=4):
        check_against_oracle(dict(enumerate(combo)), 2)


def test_textbook_example():
    # f = sum m(4, 8, 10, 11, 12, 15) + d(9, 14), a standard QM exercise with two
    # minimal covers of 3 recipes / 7 literals; "1--0" < "10--" picks this one
    cover = solve_rows([4, 8, 10, 11, 12, 15], [9, 14], 4)
    assert sorted(r.pattern() for r in cover) == ["-100", "1--0", "1-1-"]


def test_primes_are_maximal_and_legal():
    on, dc = [0, 1, 2, 5, 6, 7], []
    primes = prime_implicants(on, dc, 3)
    allowed = set(on)
    for p in primes:
        assert set(p.minterms()) <= allowed
        for j in p.literals:
            widened = Implicant(p.care & ~(1 << (2 - j)), p.value & ~(1 << (2 - j)), 3)
            assert not set(widened.minterms()) <= allowed
    assert len(primes) == 6  # cyclic core: six two-literal primes


def test_cyclic_core_is_solved_exactly():
    on = [0, 1, 2, 5, 6, 7]
    cover = minimal_cover(prime_implicants(on, [], 3), on)
    assert len(cover) == 3 and sum(r.size for r in cover) == 6


def test_recipes_listed_in_condition_order():
    cover = solve_rows([0b110, 0b111, 0b001, 0b011], [], 3)
    assert [r.pattern() for r in cover] == ["11-", "0-1"]


def test_tie_break_is_deterministic():
    on = [0, 1, 2, 5, 6, 7]
    a = minimal_cover(prime_implicants(on, [], 3), on)
    b = minimal_cover(list(reversed(sorted(prime_implicants(on, [], 3)))), list(reversed(on)))
    assert [r.pattern() for r in a] == [r.pattern() for r in b]


def test_no_pass_rows_is_no_result():
    data = CaseMatrix.from_arrays([[1], [0]], [0, 0])
    assert solve(build_truth_table(data, 0.8, 1), Mode.COMPLEX, data) is None


def test_tautology_is_no_result():
    data = CaseMatrix.from_arrays([[1], [0]], [1, 1])
    table = build_truth_table(data, 0.8, 1)
    assert solve(table, "complex", data) is None
    assert solve(table, "parsimonious", data) is None


def test_parsimonious_uses_remainders():
    # rows 00 -> 0, 11 -> 1, 01 and 10 unobserved
    data = CaseMatrix.from_arrays([[0, 0], [1, 1]], [0, 1], names=["A", "B"])
    table = build_truth_table(data, 0.8, 1)
    cx = solve(table, Mode.COMPLEX, data)
    ps = solve(table, Mode.PARSIMONIOUS, data)
    assert cx.render() == "A * B"
    assert ps.render() == "B"  # A and B tie; pattern order "-1" < "1-" picks B


def test_metrics_and_rendering():
    x = [[1, 0], [1, 0], [1, 1], [0, 1], [0, 0]]
    y = [1, 1, 1, 0, 0]
    data = CaseMatrix.from_arrays(x, y, names=["Rich", "Urban"])
    sol = solve(build_truth_table(data, 0.8, 1), Mode.COMPLEX, data)
    assert sol.render() == "RICH"
    assert sol.overall_coverage == 1.0 and sol.overall_consistency == 1.0
    d = sol.to_dict()
    assert d["recipes"][0]["literals"] == {"Rich": "PRESENT"}
    assert d["thresholds"] == {"consistency": 0.8, "conf_n": 1}
    rec = Implicant.from_literals({0: Literal.PRESENT, 1: Literal.ABSENT}, 2)
    assert render_recipe(rec, ["Rich", "Urban"]) == "RICH * urban"
    assert render_recipe(Implicant(0, 0, 2), ["a", "b"]) == "TRUE"


def test_recipe_coverage_counts_cases():
    x = [[1, 0], [1, 1], [0, 1], [0, 1], [0, 0]]
    y = [1, 1, 1, 0, 0]
    data = CaseMatrix.from_arrays(x, y)
    sol = solve(build_truth_table(data, 0.5, 1), Mode.COMPLEX, data)
    assert sol.render() == "A + B"
    by = {r: m for r, m in zip(sol.render().split(" + "), sol.per_recipe)}
    assert by["A"].consistency == 1.0 and by["A"].raw_coverage == pytest.approx(2 / 3)
    assert by["B"].consistency == pytest.approx(2 / 3)
    assert sol.overall_consistency == pytest.approx(3 / 4)


@pytest.mark.parametrize("v, rows", [(10, 30), (14, 60)])
def test_larger_tables_stay_valid(v, rows):
    rng = np.random.default_rng(v)
    on = sorted(set(rng.integers(0, 2 ** v, rows).tolist()))
    off = sorted(set(rng.integers(0, 2 ** v, rows).tolist()) - set(on))
    dc = sorted(set(range(2 ** v)) - set(on) - set(off))
    for cover in (solve_rows(on, dc, v), solve_rows(on, [], v)):
        for i in on:
            assert any(r.covers(i) for r in cover)
        for i in off:
            assert not any(r.covers(i) for r in cover)
        # no recipe is redundant
        for r in cover:
            rest = [q for q in cover if q is not r]
            assert not all(any(q.covers(i) for q in rest) for i in on)


def test_node_budget_warns_and_stays_valid(monkeypatch):
    import qcarobust.minimize as m
    monkeypatch.setattr(m, "COVER_NODE_LIMIT", 3)
    rng = np.random.default_rng(0)
    v = 8
    on = sorted(set(rng.integers(0, 2 ** v, 60).tolist()))
    off = set(rng.integers(0, 2 ** v, 60).tolist()) - set(on)
    dc = sorted(set(range(2 ** v)) - set(on) - off)
    with pytest.warns(m.MinimizationWarning):
        cover = solve_rows(on, dc, v)
    assert all(any(r.covers(i) for r in cover) for i in on)
    assert not any(r.covers(i) for r in cover for i in off)


def test_prime_generators_agree():
    import qcarobust.minimize as m
    rng = np.random.default_rng(3)
    for _ in range(200):
        v = int(rng.integers(1, 6))
        status = rng.choice(3, size=2 ** v)
        on = {i for i in range(2 ** v) if status[i] == 0}
        dc = {i for i in range(2 ** v) if status[i] == 2}
        assert m._primes_by_merging(on, dc, v) == m._primes_by_transversal(on, dc, v)


def test_implicant_matches_agrees_with_covers():
    imp = Implicant.from_literals({0: Literal.ABSENT, 2: Literal.PRESENT}, 3)
    grid = np.array([row_bits(i, 3) for i in range(8)], dtype=np.uint8)
    assert imp.matches(grid).tolist() == [imp.covers(i) for i in range(8)]
    assert imp.matches(grid).tolist() == [pattern_covers((0, None, 1), row_bits(i, 3))
                                          for i in range(8)]


def pat(*rows):
    return [int(r, 2) for r in rows]


def test_prime_examples():
    assert {p.pattern() for p in prime_implicants(pat("11", "10"), [], 2)} == {"1-"}
    assert {p.pattern() for p in prime_implicants(pat("11"), pat("10", "00"), 2)} == {"1-"}
    assert {p.pattern() for p in prime_implicants(pat("111", "110", "011"), [], 3)} == {"11-", "-11"}


def test_cover_examples():
    a = Implicant.from_literals({0: Literal.PRESENT}, 2)
    assert minimal_cover([a], pat("11", "10")) == [a]
    ab = Implicant.from_literals({0: Literal.PRESENT, 1: Literal.PRESENT}, 3)
    bc = Implicant.from_literals({1: Literal.PRESENT, 2: Literal.PRESENT}, 3)
    ac = Implicant.from_literals({0: Literal.PRESENT, 2: Literal.PRESENT}, 3)
    assert minimal_cover([ab, bc, ac], pat("111", "110", "011")) == [ab, bc]
    with pytest.raises(RuntimeError):
        minimal_cover([ab], pat("011"))


@settings(max_examples=200, deadline=None)
@given(v=st.integers(1, 5), n=st.integers(2, 40), seed=st.integers(0, 2 ** 32),
       cons=st.sampled_from([0.6, 0.75, 0.85, 1.0]), conf_n=st.integers(1, 3))
@example(v=5, n=24, seed=0, cons=0.6, conf_n=1)
def test_solution_invariants(v, n, seed, cons, conf_n):
    rng = np.random.default_rng(seed)
    data = CaseMatrix.from_arrays(rng.random((n, v)) < 0.5, rng.random(n) < 0.5)
    if data.outcome.sum() == 0:
        return
    table = build_truth_table(data, cons, conf_n)
    cx = solve(table, Mode.COMPLEX, data)
    ps = solve(table, Mode.PARSIMONIOUS, data)
    for sol in (cx, ps):
        if sol is None:
            continue
        lits = [set(r.literals.items()) for r in sol.recipes]
        for i, a in enumerate(lits):
            assert not any(i != j and a >= b for j, b in enumerate(lits))
        raw = [m.raw_coverage for m in sol.per_recipe]
        assert max(raw) - 1e-12 <= sol.overall_coverage <= sum(raw) + 1e-12
    if cx is not None and ps is not None:
        # each complex recipe sits inside some parsimonious prime, though not
        # necessarily inside one the minimal cover picked
        primes = prime_implicants(table.indices(Status.PASS), table.indices(Status.REMAINDER), v)
        ps_rows = {m for q in ps.recipes for m in q.minterms()}
        for r in cx.recipes:
            assert any(set(r.literals.items()) >= set(q.literals.items()) for q in primes)
            assert set(r.minterms()) <= ps_rows


def test_metrics_need_positive_cases():
    from qcarobust import QCAInputError, compute_metrics
    data = CaseMatrix.from_arrays([[1], [0]], [0, 0])
    with pytest.raises(QCAInputError, match="coverage undefined"):
        compute_metrics([Implicant.from_literals({0: Literal.PRESENT}, 1)], data)


def test_json_round_trip():
    import json
    data = CaseMatrix.from_arrays([[1, 1], [1, 0], [0, 1]], [1, 0, 0], names=["x", "y"])
    sol = solve(build_truth_table(data, 1.0, 1), "complex", data)
    d = json.loads(sol.to_json())
    assert d["solution"] == "X * Y"
    assert d["mode"] == "complex"
