"""Brute-force ground truth for small N.

Nothing here uses the product formula or the decoder: optima come from
scanning all N! permutations and moments from listing every path.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator

import numpy as np

from .errors import TooLarge
from .matching import Instance, Matching
from .paths import Ensemble, SignPath

MAX_EXHAUSTIVE_N = 8


@dataclass(frozen=True)
class OptimaReport:
    min_cost: float
    argmin_set: frozenset[Matching]
    degeneracy: int


_PERMS: dict[int, np.ndarray] = {}


def _all_perms(n: int) -> np.ndarray:
    if n not in _PERMS:
        _PERMS[n] = np.array(list(itertools.permutations(range(n))), dtype=np.intp).reshape(-1, n)
    return _PERMS[n]


def _is_integral(values) -> bool:
    return all(isinstance(v, (int, np.integer)) or (isinstance(v, Fraction) and v.denominator == 1)
               for v in values)


def exhaustive_optima(inst: Instance, tol: float = 1e-9) -> OptimaReport:
    """Scan all N! matchings; ties are cost within ``tol`` relative to the minimum.

    Integer coordinates are compared exactly.
    """
    n = inst.size
    if n > MAX_EXHAUSTIVE_N:
        raise TooLarge(f"exhaustive search needs N <= {MAX_EXHAUSTIVE_N}, got {n}")
    if n == 0:
        return OptimaReport(0.0, frozenset({Matching(())}), 1)
    perms = _all_perms(n)
    rows = np.arange(n)
    if _is_integral(inst.whites + inst.blacks):
        dist = np.abs(np.subtract.outer(np.array(inst.whites, dtype=np.int64),
                                        np.array(inst.blacks, dtype=np.int64)))
        costs = dist[rows, perms].sum(axis=1)
        best = costs.min()
        mask = costs == best
    else:
        dist = np.abs(np.subtract.outer(np.array(inst.whites, dtype=float),
                                        np.array(inst.blacks, dtype=float)))
        costs = dist[rows, perms].sum(axis=1)
        best = costs.min()
        mask = costs - best <= tol * max(abs(best), np.finfo(float).tiny)
    argmin = frozenset(Matching(tuple(p)) for p in perms[mask])
    return OptimaReport(float(best), argmin, len(argmin))


def _next_path(steps: list[int]) -> bool:
    """Advance to the lexicographic successor with U < D and the same content.

    This is next-permutation over the multiset {+1 x N, -1 x N} with +1
    ordered first.  Returns False after the last one.
    """
    key = [0 if s > 0 else 1 for s in steps]
    i = len(key) - 2
    while i >= 0 and key[i] >= key[i + 1]:
        i -= 1
    if i < 0:
        return False
    j = len(key) - 1
    while key[j] <= key[i]:
        j -= 1
    key[i], key[j] = key[j], key[i]
    key[i + 1:] = reversed(key[i + 1:])
    steps[:] = [1 if k == 0 else -1 for k in key]
    return True


def iter_paths(n: int, ensemble: Ensemble) -> Iterator[SignPath]:
    """Every bridge (or excursion) of size n, in lexicographic U<D order."""
    ensemble = Ensemble.parse(ensemble)
    if ensemble is Ensemble.EXCURSION:
        yield from _iter_excursions(n, [], 0, 0)
        return
    steps = [1] * n + [-1] * n
    while True:
        yield SignPath(tuple(steps))
        if not _next_path(steps):
            return


def _iter_excursions(n: int, prefix: list[int], ups: int, level: int) -> Iterator[SignPath]:
    # prefix pruning: never drop below zero, never exceed n ups
    if len(prefix) == 2 * n:
        yield SignPath(tuple(prefix))
        return
    if ups < n:
        prefix.append(1)
        yield from _iter_excursions(n, prefix, ups + 1, level + 1)
        prefix.pop()
    if level > 0:
        prefix.append(-1)
        yield from _iter_excursions(n, prefix, ups, level - 1)
        prefix.pop()


def _entropy_from_stack_sizes(path: SignPath) -> float:
    # direct replay of stack sizes: a step that pairs a point sees |level| choices
    level, total = 0, 0.0
    for s in path.steps:
        if (level > 0 and s < 0) or (level < 0 and s > 0):
            total += math.log(abs(level))
        level += s
    return total


def brute_moment(n: int, ensemble: Ensemble, k: int) -> float:
    """Average of S^k over all paths of the ensemble, by listing them."""
    if n > MAX_EXHAUSTIVE_N:
        raise TooLarge(f"brute moments need N <= {MAX_EXHAUSTIVE_N}, got {n}")
    values = [_entropy_from_stack_sizes(p) ** k for p in iter_paths(n, ensemble)]
    return math.fsum(values) / len(values)
