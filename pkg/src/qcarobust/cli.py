"""qcarobust command line: qca, assess, recommend, study.

Exit codes: 0 result, 3 no result, 2 input error, 1 internal error.
"""
from __future__ import annotations

import argparse
import datetime as _dt
import hashlib
import json
import os
import secrets
import sys
from pathlib import Path

import numpy as np

from . import __version__, kernels
from .baqca import DEFAULT_BOOT, DEFAULT_SIMS, Settings, assess
from .dataset import (CaseMatrix, QCAInputError, code_presence, dichotomize_at_mean, load_csv,
                      marginal_profile, negate_outcome, write_csv)
from .glm import jsonable
from .irqca import (DEFAULT_ALPHAS, SURFACES, UNATTAINABLE, Surface, curve_rows, recommend,
                    recommendations_payload, write_plot_csv, write_recommendation_csv)
from .minimize import Mode, render_recipe, solve
from .random_gen import NullModel, generate_dataset
from .study import (RecordWriter, StudyConfig, figure_curves, fit_models, run_study_array,
                    write_curves)
from .truth_table import Status, build_truth_table

EXIT_OK, EXIT_INTERNAL, EXIT_INPUT, EXIT_NO_RESULT = 0, 1, 2, 3


def _env(name: str, default, cast=str):
    raw = os.environ.get(f"QCAROBUST_{name}")
    if raw is None or raw == "":
        return default
    try:
        return cast(raw)
    except ValueError:
        raise QCAInputError(f"bad value for QCAROBUST_{name}: {raw!r}") from None


def _range(cast):
    def parse(text: str):
        parts = text.replace("..", ":").split(":")
        if len(parts) == 1:
            parts = parts * 2
        if len(parts) != 2:
            raise argparse.ArgumentTypeError(f"expected LO:HI, got {text!r}")
        try:
            lo, hi = cast(parts[0]), cast(parts[1])
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad range {text!r}") from None
        if lo > hi:
            raise argparse.ArgumentTypeError(f"empty range {text!r}")
        return lo, hi
    return parse


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


SCHEMA_DIR = Path(__file__).with_name("schemas")


def schema(name: str) -> dict:
    """Shipped JSON schema for an output file, e.g. ``schema("report")``."""
    return json.loads((SCHEMA_DIR / f"{name}.schema.json").read_text(encoding="utf-8"))


def _dump(obj) -> str:
    return json.dumps(jsonable(obj), indent=2, sort_keys=True) + "\n"


class Run:
    """Collects output files and writes manifest.json beside them."""

    def __init__(self, args):
        self.args = args
        self.started = _now()
        self.out = Path(args.out) if getattr(args, "out", None) else None
        self.files: list[str] = []
        if self.out is not None:
            self.out.mkdir(parents=True, exist_ok=True)

    def path(self, name: str) -> Path | None:
        if self.out is None:
            return None
        self.files.append(name)
        return self.out / name

    def write_text(self, name: str, text: str) -> None:
        p = self.path(name)
        if p is not None:
            p.write_text(text, encoding="utf-8")

    def finish(self, status: str) -> None:
        if self.out is None:
            return
        flags = {k: v for k, v in vars(self.args).items() if k not in ("func",)}
        inputs = {}
        data = getattr(self.args, "data", None)
        if data:
            inputs[str(data)] = _sha256(data)
        manifest = {
            "command": self.args.command,
            "flags": flags,
            "seed": getattr(self.args, "seed", None),
            "tool": "qcarobust",
            "version": __version__,
            "kernel_backend": kernels.BACKEND,
            "inputs": inputs,
            "outputs": sorted(self.files),
            "status": status,
            "started": self.started,
            "finished": _now(),
        }
        (self.out / "manifest.json").write_text(_dump(manifest), encoding="utf-8")


def _parse_presence(items) -> dict[str, float]:
    rules = {}
    for item in items or []:
        col, sep, thr = item.partition("=")
        if not sep:
            raise QCAInputError(f"--presence expects COL=THRESHOLD, got {item!r}")
        try:
            rules[col.strip()] = float(thr)
        except ValueError:
            raise QCAInputError(f"bad presence threshold in {item!r}") from None
    return rules


def load_data(args) -> CaseMatrix:
    coding = {}
    for col in (args.dichotomize_mean or "").split(","):
        if col.strip():
            coding[col.strip()] = dichotomize_at_mean
    for col, thr in _parse_presence(args.presence).items():
        coding[col] = (lambda t: (lambda x: code_presence(x, t)))(thr)
    columns = [c.strip() for c in args.conditions.split(",")] if args.conditions else None
    data = load_csv(args.data, args.outcome, args.id, coding, columns)
    return negate_outcome(data) if args.negate else data


def _settings(args) -> Settings:
    return Settings(args.consistency, args.conf_n, Mode.parse(args.solution))


def _seed(args) -> int:
    if args.seed is None:
        args.seed = secrets.randbits(63)
        print(f"seed: {args.seed}", file=sys.stderr)
    return args.seed


def _pct(x: float) -> str:
    return "" if x != x else f"{100 * x:.1f}%"


def format_solution_table(sol, title: str = "QCA Results") -> str:
    names = [render_recipe(r, sol.condition_names) for r in sol.recipes]
    width = max([len("Solutions")] + [len(n) for n in names]) + 4
    lines = [title, f"{'Solutions':<{width}}{'Consistency':>12}{'Coverage':>11}",
             "=" * (width + 23)]
    for text, m in zip(names, sol.per_recipe):
        lines.append(f"{text:<{width}}{_pct(m.consistency):>12}{_pct(m.raw_coverage):>11}")
    lines.append("-" * (width + 23))
    lines.append(f"{'Overall':<{width}}{_pct(sol.overall_consistency):>12}"
                 f"{_pct(sol.overall_coverage):>11}")
    c, n = sol.thresholds
    lines.append(f"({sol.mode.value} solution; consistency threshold {c:g}, "
                 f"configurational N threshold {n})")
    return "\n".join(lines)


def cmd_qca(args) -> int:
    run = Run(args)
    data = load_data(args)
    settings = _settings(args)
    table = build_truth_table(data, settings.consistency_threshold, settings.conf_n_threshold)
    p = run.path("truth_table.csv")
    if p is not None:
        table.to_csv(p)
    sol = solve(table, settings.mode, data)
    if sol is None:
        if not table.indices(Status.PASS):
            msg = "no configurations pass thresholds"
        else:
            msg = "solution is the tautology: every configuration is included"
        payload = {"result": None, "message": msg, "mode": settings.mode.value,
                   "thresholds": {"consistency": settings.consistency_threshold,
                                  "conf_n": settings.conf_n_threshold}}
        run.write_text("solution.json", _dump(payload))
        if args.json:
            sys.stdout.write(_dump(payload))
        else:
            print(f"no result: {msg}")
        run.finish("no_result")
        return EXIT_NO_RESULT
    payload = {"result": sol.to_dict(), "n_cases": data.n, "outcome": data.outcome_name,
               "negated": bool(args.negate)}
    run.write_text("solution.json", _dump(payload))
    if args.json:
        sys.stdout.write(_dump(payload))
    else:
        print(format_solution_table(sol, f"QCA Results for {data.outcome_name}"))
    run.finish("ok")
    return EXIT_OK


def format_assessment(report, label: str = "Solution Set") -> str:
    head = f"{'Solutions':<16}{'Probability of Randomness':>27}   {int(round(report.level * 100))}% Confidence Interval"
    lines = [head, "=" * len(head),
             f"{label:<16}{report.point_estimate:>27.4f}   {report.ci_low:.4f}   {report.ci_high:.4f}",
             "-" * len(head)]
    s = report.settings
    lines.append(f"{report.hits} of {report.sims} random datasets returned a result; "
                 f"{report.boot} bootstrap resamples; seed {report.seed}")
    lines.append(f"settings: consistency {s.consistency_threshold:g}, configurational N "
                 f"{s.conf_n_threshold}, {s.mode.value} solution")
    if report.convergence is not None and not report.convergence.converged:
        lines.append(f"warning: split-trace ratio {report.convergence.ratio:.3f} exceeds 1.1; "
                     "increase --sims")
    return "\n".join(lines)


def cmd_assess(args) -> int:
    run = Run(args)
    data = load_data(args)
    seed = _seed(args)
    settings = _settings(args)
    profile = marginal_profile(data)
    model = NullModel(profile, seed, permute=args.permute, source=data)
    if args.dump_dataset:
        idx, _, path = args.dump_dataset.partition(":")
        try:
            write_csv(generate_dataset(model, int(idx)), path)
        except ValueError:
            raise QCAInputError("--dump-dataset expects INDEX:PATH") from None
    report = assess(profile, settings, args.sims, args.boot, seed, args.level, args.threads,
                    model)
    payload = report.to_dict()
    payload["null_model"] = "column-permutation" if args.permute else "independent-bernoulli"
    run.write_text("report.json", _dump(payload))
    if args.trace:
        report.write_trace(args.trace)
    tp = run.path("trace.csv")
    if tp is not None:
        report.write_trace(tp)
    if args.json:
        sys.stdout.write(_dump(payload))
    else:
        print(format_assessment(report))
    run.finish("ok")
    return EXIT_OK


def format_recommendation(rec) -> str:
    lines = [f"alpha = {rec.alpha:g}",
             f"{'Conf. N':>8}{'Min. consistency':>18}{'Interval':>18}{'Fitted p':>10}"]
    footnote = False
    for r in rec.rows:
        def show(x):
            return "—" if x is UNATTAINABLE else f"{x:.2f}"
        if r.min_consistency is UNATTAINABLE or r.ci_high is UNATTAINABLE:
            footnote = True
        fitted = "" if r.fitted is None else f"{r.fitted:.4f}"
        interval = f"{show(r.ci_low)} – {show(r.ci_high)}"
        lines.append(f"{r.conf_n:>8}{show(r.min_consistency):>18}{interval:>18}{fitted:>10}")
    if footnote:
        lines.append("— no consistency threshold on the grid reaches this level")
    if rec.degenerate:
        lines.append(f"note: {rec.degenerate}")
    return "\n".join(lines)


def cmd_recommend(args) -> int:
    run = Run(args)
    data = load_data(args)
    seed = _seed(args)
    profile = marginal_profile(data)
    alphas = args.alpha if args.alpha else list(DEFAULT_ALPHAS)
    recs = recommend(profile, Mode.parse(args.solution), alphas, args.sims, seed,
                     threads=args.threads, surface=args.surface)
    payload = recommendations_payload(recs)
    payload.update({"seed": seed, "sims": args.sims, "mode": Mode.parse(args.solution).value,
                    "profile": profile.to_dict()})
    run.write_text("recommendations.json", _dump(payload))
    p = run.path("recommendations.csv")
    if p is not None:
        write_recommendation_csv(recs, p)
    p = run.path("plot.csv")
    if p is not None and recs:
        write_plot_csv(curve_rows(recs[0].fit, recs[0].grid,
                                  surface=Surface(args.surface, recs[0].grid)), p)
    if args.json:
        sys.stdout.write(_dump(payload))
    else:
        print("\n\n".join(format_recommendation(r) for r in recs))
    run.finish("ok")
    return EXIT_OK


def cmd_study(args) -> int:
    if not args.out:
        raise QCAInputError("study needs --out DIR for its record and model files")
    run = Run(args)
    seed = _seed(args)
    config = StudyConfig(args.iterations, seed, args.v_range, args.n_range, args.p_range,
                         args.consistency_range, args.conf_n_range,
                         tuple(m.strip() for m in args.modes.split(",")), args.factorial)
    with RecordWriter(run.path("records.csv")) as sink:
        arr = run_study_array(config, args.threads, sink=sink)
    rate = float(arr[:, 6].mean())
    summary = {"config": config.to_dict(), "iterations": len(arr), "spurious_rate": rate}
    status = "ok"
    if len(np.unique(arr[:, 6])) < 2:
        summary["models"] = None
        summary["note"] = "spurious indicator is constant; models not fitted"
    else:
        models = fit_models(arr)
        models.model1.to_csv(run.path("model1.csv"))
        models.model2.to_csv(run.path("model2.csv"))
        summary["models"] = {"model1": models.model1.to_dict(),
                             "model2": models.model2.to_dict(), "means": dict(models.means)}
        for name, rows in figure_curves(models).items():
            write_curves(rows, run.path(f"{name}.csv"))
    run.write_text("models.json", _dump(summary))
    if args.json:
        sys.stdout.write(_dump(summary))
    else:
        print(f"{len(arr)} iterations, spurious-result rate {rate:.4f}")
        if summary["models"] is not None:
            print(format_model_table(models))
    run.finish(status)
    return EXIT_OK


def format_model_table(models) -> str:
    m1 = {r["term"]: r for r in models.model1.summary_rows()}
    m2 = {r["term"]: r for r in models.model2.summary_rows()}

    def cell(r):
        if r is None:
            return ""
        stars = "***" if r["p"] < .001 else "**" if r["p"] < .01 else "*" if r["p"] < .05 else ""
        return f"{r['estimate']:.2f}({r['se']:.2f}){stars}"

    width = max(len(t) for t in m2) + 2
    lines = [f"{'Variable':<{width}}{'Model 1':>18}{'Model 2':>18}"]
    for term in m2:
        lines.append(f"{term:<{width}}{cell(m1.get(term)):>18}{cell(m2[term]):>18}")
    lines.append(f"{'AIC':<{width}}{models.model1.aic:>18.0f}{models.model2.aic:>18.0f}")
    return "\n".join(lines)


def _add_data_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--data", required=True, help="case CSV (header row required)")
    p.add_argument("--outcome", required=True, help="outcome column")
    p.add_argument("--id", help="case id column")
    p.add_argument("--conditions", help="comma-separated condition columns (default: all others)")
    p.add_argument("--negate", action="store_true", help="explain the negated outcome")
    p.add_argument("--dichotomize-mean", metavar="COLS",
                   help="comma-separated columns coded 1 at or above their mean")
    p.add_argument("--presence", action="append", metavar="COL=THRESHOLD",
                   help="code COL as 1 when its value is >= THRESHOLD (repeatable)")
    p.add_argument("--consistency", type=float, default=_env("CONSISTENCY", 0.85, float))
    p.add_argument("--conf-n", type=int, default=_env("CONF_N", 1, int))
    p.add_argument("--solution", choices=[m.value for m in Mode],
                   default=_env("SOLUTION", "complex"))


def _add_common(p: argparse.ArgumentParser, seeded: bool = True) -> None:
    p.add_argument("--out", help="directory for output files and manifest.json")
    p.add_argument("--json", action="store_true", help="machine-readable JSON on stdout")
    p.add_argument("--threads", type=int, default=_env("THREADS", 1, int))
    if seeded:
        p.add_argument("--seed", type=int, default=_env("SEED", None, int),
                       help="random seed (default: drawn from the OS and printed)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qcarobust", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"qcarobust {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("qca", help="truth table and minimized solution")
    _add_data_flags(p)
    _add_common(p, seeded=False)
    p.set_defaults(func=cmd_qca)

    p = sub.add_parser("assess", help="probability of a result from random data")
    _add_data_flags(p)
    _add_common(p)
    p.add_argument("--sims", type=int, default=_env("SIMS", DEFAULT_SIMS, int))
    p.add_argument("--boot", type=int, default=_env("BOOT", DEFAULT_BOOT, int))
    p.add_argument("--level", type=float, default=0.95)
    p.add_argument("--permute", action="store_true",
                   help="null model shuffles observed columns instead of Bernoulli draws")
    p.add_argument("--trace", help="write the 0/1 indicator trace to this CSV")
    p.add_argument("--dump-dataset", metavar="INDEX:PATH",
                   help="write simulated dataset INDEX as CSV (debugging)")
    p.set_defaults(func=cmd_assess)

    p = sub.add_parser("recommend", help="minimum thresholds per target spuriousness level")
    _add_data_flags(p)
    _add_common(p)
    p.add_argument("--alpha", type=_floats, help="comma-separated levels "
                   f"(default {','.join(str(a) for a in DEFAULT_ALPHAS)})")
    p.add_argument("--sims", type=int, default=_env("SIMS", DEFAULT_SIMS, int))
    p.add_argument("--surface", choices=SURFACES, default="cell",
                   help="logit surface inverted for the thresholds")
    p.set_defaults(func=cmd_recommend)

    p = sub.add_parser("study", help="Monte Carlo robustness study")
    _add_common(p)
    p.add_argument("--iterations", type=int, default=_env("ITERATIONS", 100_000, int))
    p.add_argument("--v-range", type=_range(int), default=(1, 6), metavar="LO:HI")
    p.add_argument("--n-range", type=_range(int), default=(10, 60), metavar="LO:HI")
    p.add_argument("--p-range", type=_range(float), default=(0.1, 0.9), metavar="LO:HI")
    p.add_argument("--consistency-range", type=_range(float), default=(0.5, 1.0),
                   metavar="LO:HI")
    p.add_argument("--conf-n-range", type=_range(int), default=(1, 6), metavar="LO:HI")
    p.add_argument("--modes", default="complex,parsimonious")
    p.add_argument("--factorial", action="store_true",
                   help="cycle researcher choices over a fixed grid instead of random draws")
    p.set_defaults(func=cmd_study)
    return parser


def main(argv=None) -> int:
    try:
        parser = build_parser()
        try:
            args = parser.parse_args(argv)
        except SystemExit as exc:
            return EXIT_INPUT if exc.code not in (0, None) else EXIT_OK
        return args.func(args)
    except QCAInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:  # noqa: BLE001
        print(f"internal error: {exc!r}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
