"""Boolean minimization of a truth table into causal recipes.

Prime implicants come from Quine-McCluskey merging, or from minimal hitting sets
against the forbidden rows when those are the smaller set. The cover is chosen by
an exact branch-and-bound search (Petrick-equivalent) for up to
``EXACT_COVER_LIMIT`` conditions and by greedy selection plus redundancy pruning
above that.

An implicant is stored as a pair of bitmasks over configuration indices
``(care, value)``: bit ``v-1-j`` of ``care`` is set when condition ``j`` appears
in the recipe and the matching bit of ``value`` gives its required state.
"""
from __future__ import annotations

import enum
import json
import warnings
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .dataset import CaseMatrix, QCAInputError
from .truth_table import Status, TruthTable

EXACT_COVER_LIMIT = 12
# search nodes before the exact cover settles for the best cover found so far;
# a count, not a clock, so truncated results are still reproducible
COVER_NODE_LIMIT = 5_000


class MinimizationWarning(UserWarning):
    pass


class Mode(str, enum.Enum):
    COMPLEX = "complex"
    PARSIMONIOUS = "parsimonious"

    @classmethod
    def parse(cls, value) -> "Mode":
        if isinstance(value, Mode):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise QCAInputError(f"unknown solution mode {value!r}") from None


class Literal(str, enum.Enum):
    PRESENT = "PRESENT"
    ABSENT = "ABSENT"


@dataclass(frozen=True, order=True)
class Implicant:
    care: int
    value: int
    v: int

    @classmethod
    def from_literals(cls, literals: dict[int, Literal], v: int) -> "Implicant":
        care = value = 0
        for j, lit in literals.items():
            if not 0 <= j < v:
                raise QCAInputError(f"literal index {j} out of range for v={v}")
            bit = 1 << (v - 1 - j)
            care |= bit
            if Literal(lit) is Literal.PRESENT:
                value |= bit
        return cls(care, value, v)

    @property
    def literals(self) -> dict[int, Literal]:
        out = {}
        for j in range(self.v):
            bit = 1 << (self.v - 1 - j)
            if self.care & bit:
                out[j] = Literal.PRESENT if self.value & bit else Literal.ABSENT
        return out

    @property
    def size(self) -> int:
        return bin(self.care).count("1")

    @property
    def is_tautology(self) -> bool:
        return self.care == 0

    def covers(self, idx: int) -> bool:
        return (idx & self.care) == self.value

    def minterms(self) -> list[int]:
        free = [1 << k for k in range(self.v) if not self.care & (1 << k)]
        out = []
        for m in range(1 << len(free)):
            idx = self.value
            for k, bit in enumerate(free):
                if m >> k & 1:
                    idx |= bit
            out.append(idx)
        return sorted(out)

    def matches(self, conditions: np.ndarray) -> np.ndarray:
        """Boolean mask of cases (rows of a 0/1 matrix) satisfying the recipe."""
        mask = np.ones(conditions.shape[0], dtype=bool)
        for j, lit in self.literals.items():
            mask &= conditions[:, j] == (1 if lit is Literal.PRESENT else 0)
        return mask

    def sort_key(self) -> tuple:
        # literal pattern as a string over {0, 1, -}, so ties break identically everywhere
        out = []
        for j in range(self.v):
            bit = 1 << (self.v - 1 - j)
            out.append(("1" if self.value & bit else "0") if self.care & bit else "-")
        return tuple(out)

    def display_key(self) -> tuple:
        # recipes on earlier conditions first, presence before absence
        out = []
        for j in range(self.v):
            bit = 1 << (self.v - 1 - j)
            out.append((0 if self.value & bit else 1) if self.care & bit else 2)
        return tuple(out)

    def pattern(self) -> str:
        return "".join(self.sort_key())


def prime_implicants(pass_rows: Iterable[int], dont_care_rows: Iterable[int],
                     v: int) -> set[Implicant]:
    """All maximal implicants of pass ∪ dont_care that cover at least one pass row.

    Rows are configuration indices (condition 0 is the most significant bit).
    """
    on = set(pass_rows)
    dc = set(dont_care_rows)
    if on & dc:
        raise ValueError("pass and don't-care rows overlap")
    if (1 << v) - len(on) - len(dc) < len(on) + len(dc):
        return _primes_by_transversal(on, dc, v)
    return _primes_by_merging(on, dc, v)


def _primes_by_merging(on: set[int], dc: set[int], v: int) -> set[Implicant]:
    # Quine-McCluskey: cost grows with the number of cubes in on | dc
    full = (1 << v) - 1
    current = {(full, idx) for idx in on | dc}
    primes: set[tuple[int, int]] = set()
    while current:
        merged: set[tuple[int, int]] = set()
        used: set[tuple[int, int]] = set()
        by_care: dict[int, set[int]] = {}
        for care, val in current:
            by_care.setdefault(care, set()).add(val)
        for care, vals in by_care.items():
            for val in vals:
                bit = care
                while bit:
                    low = bit & -bit
                    bit ^= low
                    if not val & low and (val | low) in vals:
                        merged.add((care & ~low, val))
                        used.add((care, val))
                        used.add((care, val | low))
        primes |= current - used
        current = merged
    out = set()
    for care, val in primes:
        imp = Implicant(care, val, v)
        if any(imp.covers(r) for r in on):
            out.add(imp)
    return out


def _minimal_masks(masks) -> list[int]:
    out: list[int] = []
    for m in sorted(set(masks), key=lambda m: (bin(m).count("1"), m)):
        if not any(k & m == k for k in out):
            out.append(m)
    return out


def _primes_by_transversal(on: set[int], dc: set[int], v: int) -> set[Implicant]:
    """Primes through each pass row as minimal hitting sets.

    A cube through row m avoids forbidden row f iff it cares about a bit where
    m and f differ, so the primes through m are the minimal care sets meeting
    every m ^ f. Cheap when the forbidden set is small (parsimonious mode).
    """
    allowed = on | dc
    off = [r for r in range(1 << v) if r not in allowed]
    out = set()
    for m in on:
        transversals = [0]
        for d in _minimal_masks(m ^ f for f in off):
            grown = [t for t in transversals if t & d]
            for t in transversals:
                if not t & d:
                    bit = d
                    while bit:
                        low = bit & -bit
                        bit ^= low
                        grown.append(t | low)
            transversals = _minimal_masks(grown)
        for care in transversals:
            out.add(Implicant(care, m & care, v))
    return out


def _bits(mask: int):
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def _reduce(masks: list[int], keys: list[tuple], target: int, live: list[int]):
    """Cyclic-core reduction; returns (forced columns, live columns, remaining rows).

    Each rule keeps the lexicographic optimum: essential columns are in every
    cover; a row whose columns include another row's columns is implied; a
    column whose rows sit inside a column with a smaller (size, pattern) key can
    be swapped for it without making any cover worse. Returns None when some row
    has no candidate left.
    """
    forced: list[int] = []
    live = [c for c in live if masks[c] & target]
    changed = True
    while changed and target:
        changed = False
        cols_of = {r: 0 for r in _bits(target)}
        for c in live:
            for r in _bits(masks[c] & target):
                cols_of[r] |= 1 << c
        for r, cs in cols_of.items():
            if cs == 0:
                return None
            if cs & (cs - 1) == 0:  # exactly one candidate column
                c = cs.bit_length() - 1
                if c not in forced:
                    forced.append(c)
                    target &= ~masks[c]
                    changed = True
        if changed:
            live = [c for c in live if c not in forced and masks[c] & target]
            continue
        rows = sorted(cols_of, key=lambda r: (bin(cols_of[r]).count("1"), r))
        kept: list[int] = []
        for r in rows:
            if any(cols_of[k] & cols_of[r] == cols_of[k] for k in kept):
                target &= ~(1 << r)
                changed = True
            else:
                kept.append(r)
        survivors: list[int] = []
        for c in sorted(live, key=lambda c: keys[c]):
            m = masks[c] & target
            if not m or any(masks[d] & m == m for d in survivors):
                changed = True
            else:
                survivors.append(c)
        live = survivors
    return forced, live, target


def _exact_cover(primes: list[Implicant], rows: list[int]) -> list[Implicant]:
    masks = [sum(1 << k for k, r in enumerate(rows) if p.covers(r)) for p in primes]
    keys = [(p.size, p.sort_key()) for p in primes]
    sizes = [p.size for p in primes]
    best_key: list = [None]
    best: list[list[int]] = [[]]
    nodes = [0]

    def lower_bound(target: int, live: list[int]) -> int:
        # rows with pairwise disjoint candidate columns each need their own recipe
        col_bits = {r: 0 for r in _bits(target)}
        for c in live:
            for r in _bits(masks[c] & target):
                col_bits[r] |= 1 << c
        lb, blocked = 0, 0
        for r in sorted(col_bits, key=lambda r: (bin(col_bits[r]).count("1"), r)):
            if not col_bits[r] & blocked:
                lb += 1
                blocked |= col_bits[r]
        # and at least as many columns as it takes the biggest ones to reach |target|
        need, k = bin(target).count("1"), 0
        for gain in sorted((bin(masks[c] & target).count("1") for c in live), reverse=True):
            if need <= 0:
                break
            need -= gain
            k += 1
        return max(lb, k)

    def search(target: int, live: list[int], chosen: list[int], lits: int):
        if best_key[0] is not None and nodes[0] >= COVER_NODE_LIMIT:
            return
        nodes[0] += 1
        reduced = _reduce(masks, keys, target, live)
        if reduced is None:
            return
        forced, live, target = reduced
        chosen = chosen + forced
        lits += sum(sizes[c] for c in forced)
        if not target:
            key = (len(chosen), lits, tuple(sorted(keys[i][1] for i in chosen)))
            if best_key[0] is None or key < best_key[0]:
                best_key[0], best[0] = key, chosen
            return
        if best_key[0] is not None:
            lb = lower_bound(target, live)
            count = len(chosen) + lb
            min_lits = lits + lb * min(sizes[c] for c in live)
            if count > best_key[0][0] or (count == best_key[0][0] and min_lits > best_key[0][1]):
                return
        row = min(_bits(target), key=lambda r: (sum(1 for c in live if masks[c] >> r & 1), r))
        branch = sorted((c for c in live if masks[c] >> row & 1),
                        key=lambda c: (-bin(masks[c] & target).count("1"), keys[c]))
        excluded: set[int] = set()
        for c in branch:
            # covers containing an earlier sibling were searched in that branch
            rest = [d for d in live if d != c and d not in excluded]
            search(target & ~masks[c], rest, chosen + [c], lits + sizes[c])
            excluded.add(c)

    search((1 << len(rows)) - 1, list(range(len(primes))), [], 0)
    if nodes[0] >= COVER_NODE_LIMIT:
        warnings.warn(f"cover search stopped after {COVER_NODE_LIMIT} nodes; the solution "
                      "is valid but may not be minimal", MinimizationWarning, stacklevel=3)
    return [primes[i] for i in best[0]]


def _greedy_cover(primes: list[Implicant], rows: list[int]) -> list[Implicant]:
    masks = [sum(1 << k for k, r in enumerate(rows) if p.covers(r)) for p in primes]
    uncovered = (1 << len(rows)) - 1
    chosen: list[int] = []
    while uncovered:
        c = min(range(len(primes)), key=lambda c: (-bin(masks[c] & uncovered).count("1"),
                                                   primes[c].size, primes[c].sort_key()))
        chosen.append(c)
        uncovered &= ~masks[c]
    # local search: drop redundant recipes, largest first
    full = (1 << len(rows)) - 1
    for c in sorted(chosen, key=lambda c: (-primes[c].size, primes[c].sort_key())):
        rest = [d for d in chosen if d != c]
        union = 0
        for d in rest:
            union |= masks[d]
        if union == full:
            chosen = rest
    return [primes[c] for c in chosen]


def minimal_cover(primes: Iterable[Implicant], pass_rows: Iterable[int]) -> list[Implicant]:
    """Smallest set of primes covering every pass row.

    Minimal by recipe count, then total literal count; remaining ties go to the
    lexicographically smallest sorted literal patterns. Exact up to
    ``EXACT_COVER_LIMIT`` conditions, greedy plus redundancy pruning above.
    """
    primes = sorted(set(primes), key=Implicant.sort_key)
    rows = sorted(set(pass_rows))
    for r in rows:
        if not any(p.covers(r) for p in primes):
            raise RuntimeError(f"pass row {r} is not covered by any prime implicant")
    if not rows:
        return []
    if primes[0].v <= EXACT_COVER_LIMIT:
        cover = _exact_cover(primes, rows)
    else:
        cover = _greedy_cover(primes, rows)
    return sorted(cover, key=Implicant.display_key)


@dataclass(frozen=True)
class RecipeMetrics:
    consistency: float
    raw_coverage: float


@dataclass(frozen=True)
class SolutionSet:
    recipes: tuple[Implicant, ...]
    mode: Mode
    per_recipe: tuple[RecipeMetrics, ...]
    overall_coverage: float
    overall_consistency: float
    condition_names: tuple[str, ...] = ()
    thresholds: tuple[float, int] = (0.0, 1)

    def render(self) -> str:
        return " + ".join(render_recipe(r, self.condition_names) for r in self.recipes)

    def to_dict(self) -> dict:
        names = self.condition_names
        return {
            "mode": self.mode.value,
            "thresholds": {"consistency": self.thresholds[0], "conf_n": self.thresholds[1]},
            "solution": self.render(),
            "recipes": [
                {"recipe": render_recipe(r, names),
                 "literals": {names[j]: lit.value for j, lit in r.literals.items()},
                 "consistency": m.consistency, "raw_coverage": m.raw_coverage}
                for r, m in zip(self.recipes, self.per_recipe)
            ],
            "overall_coverage": self.overall_coverage,
            "overall_consistency": self.overall_consistency,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def compute_metrics(recipes: Sequence[Implicant], data: CaseMatrix):
    if not recipes:
        raise ValueError("compute_metrics needs at least one recipe")
    y = data.outcome.astype(bool)
    positives = int(y.sum())
    if positives == 0:
        raise QCAInputError("coverage undefined: no outcome-positive cases")
    masks = [r.matches(data.conditions) for r in recipes]
    per = []
    for mask in masks:
        hit = int((mask & y).sum())
        size = int(mask.sum())
        cons = hit / size if size else float("nan")
        per.append(RecipeMetrics(cons, hit / positives))
    union = np.logical_or.reduce(masks)
    u_hit = int((union & y).sum())
    u_size = int(union.sum())
    return tuple(per), u_hit / positives, (u_hit / u_size if u_size else float("nan"))


def render_recipe(recipe: Implicant, names: Sequence[str]) -> str:
    if recipe.is_tautology:
        return "TRUE"
    if len(names) < recipe.v:
        raise QCAInputError("fewer condition names than recipe conditions")
    parts = []
    for j, lit in recipe.literals.items():
        parts.append(names[j].upper() if lit is Literal.PRESENT else names[j].lower())
    return " * ".join(parts)


def solve_rows(pass_rows: list[int], dont_care: list[int], v: int) -> list[Implicant] | None:
    """Minimized cover, or None when there is nothing to explain or it is a tautology."""
    if not pass_rows:
        return None
    primes = prime_implicants(pass_rows, dont_care, v)
    cover = minimal_cover(primes, pass_rows)
    if any(p.is_tautology for p in cover):
        return None
    return cover


def solve(table: TruthTable, mode, data: CaseMatrix) -> SolutionSet | None:
    """Complex or parsimonious solution, or None for "no result".

    Complex treats every non-PASS row (observed or not) as negative. Parsimonious
    lets unobserved rows be used as don't-cares; observed rows that miss either
    threshold stay negative.
    """
    mode = Mode.parse(mode)
    pass_rows = table.indices(Status.PASS)
    dont_care = table.indices(Status.REMAINDER) if mode is Mode.PARSIMONIOUS else []
    cover = solve_rows(pass_rows, dont_care, table.v)
    if cover is None:
        return None
    per, cov, cons = compute_metrics(cover, data)
    return SolutionSet(tuple(cover), mode, per, cov, cons, data.condition_names,
                       table.thresholds)
