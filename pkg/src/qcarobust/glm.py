"""Logistic regression by iteratively reweighted least squares."""
from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from statistics import NormalDist
from typing import Mapping, Sequence

import numpy as np

from .dataset import QCAInputError

SEPARATION_LIMIT = 30.0
DRIFT_LIMIT = 0.1


class DesignWarning(UserWarning):
    pass


@dataclass(frozen=True)
class DesignSpec:
    terms: tuple[str, ...]
    interactions: tuple[tuple[str, str], ...] = ()
    intercept: bool = True

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        object.__setattr__(self, "interactions", tuple(tuple(p) for p in self.interactions))
        for a, b in self.interactions:
            if a not in self.terms or b not in self.terms:
                raise QCAInputError(f"interaction ({a}, {b}) uses a term not among main effects")

    @property
    def column_names(self) -> list[str]:
        names = ["Intercept"] if self.intercept else []
        names += list(self.terms)
        names += [f"{a} * {b}" for a, b in self.interactions]
        return names

    def row(self, record: Mapping[str, float]) -> np.ndarray:
        return build_design([record], self)[0]


def all_pairs(terms: Sequence[str]) -> tuple[tuple[str, str], ...]:
    return tuple((terms[i], terms[j]) for i in range(len(terms))
                 for j in range(i + 1, len(terms)))


def build_design(records, spec: DesignSpec) -> np.ndarray:
    """Design matrix: intercept, main effects, then interaction products.

    ``records`` is a sequence of mappings or a mapping of equal-length columns.
    """
    if isinstance(records, Mapping):
        cols = {}
        for t in spec.terms:
            if t not in records:
                raise QCAInputError(f"missing field {t!r}")
            cols[t] = np.asarray(records[t], dtype=float)
        n = len(next(iter(cols.values()))) if cols else 0
    else:
        records = list(records)
        n = len(records)
        cols = {}
        for t in spec.terms:
            try:
                cols[t] = np.array([float(r[t]) for r in records])
            except KeyError:
                raise QCAInputError(f"missing field {t!r}") from None
    parts = [np.ones(n)] if spec.intercept else []
    parts += [cols[t] for t in spec.terms]
    parts += [cols[a] * cols[b] for a, b in spec.interactions]
    X = np.column_stack(parts) if parts else np.empty((n, 0))
    if spec.intercept and n > 1:
        for j, name in enumerate(spec.column_names[1:], start=1):
            if np.ptp(X[:, j]) == 0:
                warnings.warn(f"design column {name!r} is constant", DesignWarning, stacklevel=2)
    return X


@dataclass(frozen=True)
class GlmFit:
    names: tuple[str, ...]
    coefficients: np.ndarray
    standard_errors: np.ndarray
    covariance: np.ndarray
    deviance: float
    null_deviance: float
    aic: float
    converged: bool
    iterations: int
    nobs: int
    separated: bool = False
    dropped: tuple[str, ...] = ()
    spec: DesignSpec | None = None
    deviance_path: tuple[float, ...] = field(default=(), repr=False)

    @property
    def n_params(self) -> int:
        return len(self.coefficients)

    @property
    def z_values(self) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.coefficients / self.standard_errors

    @property
    def p_values(self) -> np.ndarray:
        nd = NormalDist()
        return np.array([2.0 * (1.0 - nd.cdf(abs(z))) if np.isfinite(z) else float("nan")
                         for z in self.z_values])

    def coef(self, name: str) -> float:
        return float(self.coefficients[self.names.index(name)])

    def design_row(self, record: Mapping[str, float]) -> np.ndarray:
        """Design row restricted to the columns kept in the fit."""
        if self.spec is None:
            raise ValueError("fit has no design spec; pass a design row directly")
        full = self.spec.row(record)
        keep = [self.spec.column_names.index(n) for n in self.names]
        return full[keep]

    def summary_rows(self) -> list[dict]:
        return [{"term": n, "estimate": float(b), "se": float(s), "z": float(z), "p": float(p)}
                for n, b, s, z, p in zip(self.names, self.coefficients, self.standard_errors,
                                         self.z_values, self.p_values)]

    def to_dict(self) -> dict:
        return {"terms": self.summary_rows(), "deviance": self.deviance,
                "null_deviance": self.null_deviance, "aic": self.aic, "nobs": self.nobs,
                "converged": self.converged, "iterations": self.iterations,
                "separated": self.separated, "dropped": list(self.dropped)}

    def to_csv(self, path) -> None:
        with Path(path).open("w", newline="", encoding="utf-8") as fh:
            w = csv.DictWriter(fh, ["term", "estimate", "se", "z", "p"], lineterminator="\n")
            w.writeheader()
            for row in self.summary_rows():
                w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})

    def to_json(self) -> str:
        return json.dumps(jsonable(self.to_dict()), indent=2, sort_keys=True)


def jsonable(obj):
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: jsonable(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [jsonable(v) for v in obj]
    return obj


def _log1pexp(eta):
    return np.logaddexp(0.0, eta)


def _deviance(y, eta, w):
    # -2 loglik for Bernoulli (saturated loglik is 0)
    return float(2.0 * np.sum(w * (_log1pexp(eta) - y * eta)))


def _independent_columns(X: np.ndarray, names: Sequence[str]) -> list[int]:
    keep: list[int] = []
    scale = np.linalg.norm(X, axis=0)
    for j in range(X.shape[1]):
        if scale[j] == 0:
            continue
        cand = keep + [j]
        sub = X[:, cand] / scale[cand]
        if np.linalg.matrix_rank(sub, tol=1e-9 * max(sub.shape)) == len(cand):
            keep.append(j)
    return keep


def logistic(x):
    return 0.5 * (1.0 + np.tanh(0.5 * np.asarray(x, dtype=float)))


def fit_logistic(y, X, tol: float = 1e-8, max_iter: int = 50,
                 names: Sequence[str] | None = None, spec: DesignSpec | None = None,
                 weights=None) -> GlmFit:
    """Maximum-likelihood logit fit by IRLS with step halving.

    Converged when the deviance changes by less than ``tol``. Linearly dependent
    columns are dropped with a warning. Coefficients growing past magnitude 30,
    or still drifting when the deviance has settled, mark the fit as separated;
    it is returned, not raised.
    ``weights`` are case frequencies, so grouped binomial data can be passed as
    one row per (cell, outcome) pair.
    """
    y = np.asarray(y, dtype=float)
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise QCAInputError("design rows must match the response length")
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    if not np.isin(y, (0.0, 1.0)).all():
        raise QCAInputError("response must be 0/1")
    w = np.ones_like(y) if weights is None else np.asarray(weights, dtype=float)
    if names is None:
        names = spec.column_names if spec is not None else [f"x{j}" for j in range(X.shape[1])]
    names = list(names)

    keep = _independent_columns(X, names)
    dropped = tuple(names[j] for j in range(X.shape[1]) if j not in keep)
    if dropped:
        warnings.warn(f"dropping constant or collinear columns: {', '.join(dropped)}",
                      DesignWarning, stacklevel=2)
    Xk = X[:, keep]
    kept_names = tuple(names[j] for j in keep)
    k = Xk.shape[1]

    ybar = float(np.sum(w * y) / np.sum(w))
    if 0.0 < ybar < 1.0:
        null_dev = _deviance(y, np.full_like(y, math.log(ybar / (1 - ybar))), w)
    else:
        null_dev = 0.0

    beta = np.zeros(k)
    eta = Xk @ beta
    dev = _deviance(y, eta, w)
    path = [dev]
    converged = False
    it = 0
    last_step = 0.0
    for it in range(1, max_iter + 1):
        mu = logistic(eta)
        var = np.clip(mu * (1.0 - mu), 1e-12, None)
        ww = w * var
        grad = Xk.T @ (w * (y - mu))
        info = Xk.T @ (Xk * ww[:, None])
        try:
            step = np.linalg.solve(info, grad)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(info, grad, rcond=None)[0]
        t = 1.0
        while True:
            cand = beta + t * step
            cand_eta = Xk @ cand
            cand_dev = _deviance(y, cand_eta, w)
            if cand_dev <= dev + 1e-12 * max(1.0, abs(dev)):
                break
            t *= 0.5
            if t < 1e-10:
                # stalled: keep the current estimate
                cand, cand_eta, cand_dev = beta, eta, dev
                break
        change = dev - cand_dev
        last_step = float(np.max(np.abs(cand - beta), initial=0.0))
        beta, eta, dev = cand, cand_eta, cand_dev
        path.append(dev)
        if abs(change) < tol:
            converged = True
            break
        if np.max(np.abs(beta), initial=0.0) > 10 * SEPARATION_LIMIT:
            break

    mu = logistic(eta)
    info = Xk.T @ (Xk * (w * np.clip(mu * (1.0 - mu), 1e-300, None))[:, None])
    try:
        cov = np.linalg.inv(info)
    except np.linalg.LinAlgError:
        cov = np.linalg.pinv(info)
    se = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    # under quasi-separation the deviance settles while coefficients keep
    # drifting by about one unit per step; a genuine optimum has tiny steps
    separated = bool(np.max(np.abs(beta), initial=0.0) > SEPARATION_LIMIT
                     or last_step > DRIFT_LIMIT)
    nobs = int(round(np.sum(w)))
    return GlmFit(kept_names, beta, se, cov, dev, null_dev, dev + 2 * k, converged, it, nobs,
                  separated, dropped, spec, tuple(path))


def fit_records(records, spec: DesignSpec, response: str, tol: float = 1e-8,
                max_iter: int = 50, weights=None) -> GlmFit:
    X = build_design(records, spec)
    if isinstance(records, Mapping):
        y = np.asarray(records[response], dtype=float)
    else:
        y = np.array([float(r[response]) for r in records])
    return fit_logistic(y, X, tol, max_iter, spec=spec, weights=weights)


def linear_predictor(fit: GlmFit, record) -> tuple[float, float]:
    """(x'b, sqrt(x' Cov x)) for a record mapping or a raw design row."""
    x = fit.design_row(record) if isinstance(record, Mapping) else np.asarray(record, float)
    eta = float(x @ fit.coefficients)
    se = float(math.sqrt(max(0.0, x @ fit.covariance @ x)))
    return eta, se


def predict_prob(fit: GlmFit, record) -> float:
    return float(logistic(linear_predictor(fit, record)[0]))


def linear_ci(fit: GlmFit, record, level: float = 0.95) -> tuple[float, float]:
    eta, se = linear_predictor(fit, record)
    z = NormalDist().inv_cdf(0.5 + level / 2.0)
    return float(logistic(eta - z * se)), float(logistic(eta + z * se))
