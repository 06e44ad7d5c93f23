"""Acceptance checks, one PASS/FAIL line each.

Run with ``pytest tests/test_acceptance.py -s`` to see the lines. A failing
criterion fails its test; nothing here is loosened to make it pass.
"""
import json
import math
import time
from pathlib import Path

import numpy as np
import pytest

from oracles import classify, exhaustive_minimum, spurious_probability_one_condition
from qcarobust import (CaseMatrix, MarginalProfile, Mode, Settings, StudyConfig, assess,
                       bootstrap_ci, build_truth_table, fit_models, recommend, solve)
from qcarobust.baqca import simulate_indicators
from qcarobust.cli import main
from qcarobust.glm import DesignSpec, fit_records
from qcarobust.random_gen import NullModel
from qcarobust.study import PREDICTORS, consistency_effect, run_study_array

FIX = Path(__file__).parent / "fixtures"


def report(number: int, ok: bool, detail: str) -> None:
    print(f"\nCRITERION {number}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


# 1 ---------------------------------------------------------------------------

def test_criterion_1_minimization_oracle():
    rng = np.random.default_rng(20240601)
    start = time.perf_counter()
    bad = []
    for t in range(500):
        v = int(rng.integers(1, 5))
        n = int(rng.integers(1, 25))
        conds = (rng.random((n, v)) < rng.uniform(0.2, 0.8)).astype(np.uint8)
        outcome = (rng.random(n) < rng.uniform(0.2, 0.9)).astype(np.uint8)
        cons = float(rng.choice([0.5, 0.75, 0.8, 1.0]))
        conf_n = int(rng.integers(1, 3))
        data = CaseMatrix.from_arrays(conds, outcome)
        table = build_truth_table(data, cons, conf_n)
        status = classify(conds.tolist(), outcome.tolist(), cons, conf_n)
        if {i: row.status.value for i, row in enumerate(table.rows)} != status:
            bad.append((t, "statuses"))
            continue
        for mode in (Mode.COMPLEX, Mode.PARSIMONIOUS):
            par = mode is Mode.PARSIMONIOUS
            got = solve(table, mode, data)
            want = exhaustive_minimum(status, v, par)
            if (got is None) != (want is None):
                bad.append((t, mode.value, "presence"))
                continue
            if got is None:
                continue
            if len(got.recipes) != want[0] or sum(r.size for r in got.recipes) != want[1]:
                bad.append((t, mode.value, "size"))
            for i, s in status.items():
                truth = any(r.covers(i) for r in got.recipes)
                forbidden = s == "FAIL" or (s == "REMAINDER" and not par)
                if (s == "PASS" and not truth) or (forbidden and truth):
                    bad.append((t, mode.value, "evaluation", i))
    elapsed = time.perf_counter() - start
    report(1, not bad and elapsed < 10,
           f"500 tables, {len(bad)} mismatches, {elapsed:.1f}s (limit 10s)")


# 2 ---------------------------------------------------------------------------

def test_criterion_2_analytic_case():
    exact = spurious_probability_one_condition(0.5, 10)
    start = time.perf_counter()
    rep = assess(MarginalProfile((0.5,), 1.0, 10), Settings(1.0, 1, Mode.COMPLEX),
                 sims=20000, seed=2024)
    elapsed = time.perf_counter() - start
    err = abs(rep.point_estimate - exact)
    report(2, err <= 0.001 and elapsed < 30,
           f"estimate {rep.point_estimate:.5f} vs exact {exact:.5f}, |diff| {err:.5f} "
           f"(tol 0.001), {elapsed:.1f}s (limit 30s)")


# 3 ---------------------------------------------------------------------------

def test_criterion_3_bootstrap_width():
    trace = np.zeros(2000, dtype=np.int64)
    trace[:1889] = 1
    np.random.default_rng(3).shuffle(trace)
    start = time.perf_counter()
    lo, hi = bootstrap_ci(trace, boot=1000, seed=11)
    elapsed = time.perf_counter() - start
    half = (hi - lo) / 2
    report(3, abs(half - 0.0085) <= 0.003 and elapsed < 5,
           f"R/sims {trace.mean():.4f}, CI [{lo:.4f}, {hi:.4f}], half-width {half:.4f} "
           f"(target 0.0085 +/- 0.003), {elapsed:.2f}s (limit 5s)")


# 4 and 5 share one 100k-iteration study --------------------------------------

@pytest.fixture(scope="module")
def study_models():
    start = time.perf_counter()
    arr = run_study_array(StudyConfig(iterations=100_000, seed=20240601))
    models = fit_models(arr)
    return models, time.perf_counter() - start


EXPECTED_SIGNS = dict(zip(PREDICTORS, (-1, -1, -1, +1, -1, +1)))


@pytest.mark.slow
def test_criterion_4_model1_signs(study_models):
    models, elapsed = study_models
    fit = models.model1
    got = {t: fit.coef(t) for t in PREDICTORS}
    wrong = [t for t in PREDICTORS if math.copysign(1, got[t]) != EXPECTED_SIGNS[t]]
    detail = ", ".join(f"{t} {got[t]:+.3f}" for t in PREDICTORS)
    report(4, not wrong and elapsed < 600,
           f"{detail}; wrong sign: {wrong or 'none'}; {elapsed:.0f}s (limit 600s)")


@pytest.mark.slow
def test_criterion_5_figure2_shape(study_models):
    models, _ = study_models
    low = consistency_effect(models.model2, models.means, 0.1)
    high = consistency_effect(models.model2, models.means, 0.9)
    # strongly negative at 0.1, near zero or reversed at 0.9
    ok = low < -0.10 and high > -0.05 and low < high
    report(5, ok, f"effect of consistency 0.5->1: {low:+.3f} at outcome 0.1 (need < -0.10), "
                  f"{high:+.3f} at outcome 0.9 (need > -0.05)")


# 6 ---------------------------------------------------------------------------

@pytest.mark.slow
def test_criterion_6_irqca_attainability():
    rng = np.random.default_rng(606)
    sims = 2000
    start = time.perf_counter()
    checks = within = 0
    for k in range(20):
        v = int(rng.integers(1, 6))
        profile = MarginalProfile(tuple(rng.uniform(0.2, 0.8, v).round(3)),
                                  round(float(rng.uniform(0.2, 0.8)), 3),
                                  int(rng.integers(10, 61)))
        recs = recommend(profile, Mode.COMPLEX, sims=sims, seed=1000 + k)
        for rec in recs:
            for row in rec.rows:
                if not row.attainable:
                    continue
                settings = Settings(row.min_consistency, row.conf_n, Mode.COMPLEX)
                model = NullModel(profile, 900_000 + 100 * k + row.conf_n)
                rate = float(simulate_indicators(model, settings, sims).mean())
                bound = rec.alpha + 2 * math.sqrt(rec.alpha * (1 - rec.alpha) / sims)
                checks += 1
                within += rate <= bound
    elapsed = time.perf_counter() - start
    share = within / checks if checks else 0.0
    report(6, checks > 0 and share >= 0.90 and elapsed < 600,
           f"{within}/{checks} recommendations hold ({share:.1%}, need >= 90%), "
           f"{elapsed:.0f}s (limit 600s)")


# 7 ---------------------------------------------------------------------------

def test_criterion_7_glm_fixture():
    fx = json.loads((FIX / "glm_fixture.json").read_text())
    fit = fit_records(fx["rows"], DesignSpec(("x1", "x2", "x3")), "y", tol=1e-12, max_iter=100)
    err = float(np.max(np.abs(fit.coefficients - np.array(fx["coefficients"]))))
    report(7, err <= 1e-5, f"max |coef diff| {err:.2e} (tol 1e-5)")


# 8 ---------------------------------------------------------------------------

COUNTIES = ["--data", str(FIX / "counties.csv"), "--id", "county", "--outcome", "events",
            "--presence", "events=2", "--dichotomize-mean",
            "vote_share,degree_pct,jobless_pct,minority_pct,density"]
COMMANDS = {
    "qca": ["qca", *COUNTIES],
    "assess": ["assess", *COUNTIES, "--sims", "3000", "--boot", "300", "--seed", "8"],
    "recommend": ["recommend", *COUNTIES, "--sims", "400", "--seed", "8"],
    "study": ["study", "--iterations", "5000", "--seed", "8"],
}


def outputs(tmp_path, name, argv, threads):
    out = tmp_path / f"{name}-{threads}"
    code = main([*argv, "--threads", str(threads), "--out", str(out)])
    assert code == 0, (name, code)
    return {p.name: p.read_bytes() for p in sorted(out.iterdir()) if p.name != "manifest.json"}


@pytest.mark.slow
def test_criterion_8_thread_determinism(tmp_path, capsys):
    differing = []
    files = 0
    for name, argv in COMMANDS.items():
        base = outputs(tmp_path, name, argv, 1)
        files += len(base)
        for threads in (2, 8):
            if outputs(tmp_path, name, argv, threads) != base:
                differing.append(f"{name}@{threads}")
    capsys.readouterr()
    report(8, not differing,
           f"{files} primary outputs from {len(COMMANDS)} commands compared at 1/2/8 threads; "
           f"differing: {differing or 'none'}")


# 9 ---------------------------------------------------------------------------

@pytest.mark.slow
def test_criterion_9_marginal_sweep():
    estimates = {}
    for p in (0.3, 0.4, 0.5, 0.6, 0.7):
        profile = MarginalProfile((p,) * 5, 19 / 67, 67)
        rep = assess(profile, Settings(0.85, 1, Mode.COMPLEX), sims=2000, boot=200,
                     seed=int(p * 100))
        estimates[p] = rep.point_estimate
    ok = all(e > 0.85 for e in estimates.values())
    report(9, ok, "estimates " + ", ".join(f"p={p}: {e:.4f}" for p, e in estimates.items())
           + " (need > 0.85 everywhere)")
