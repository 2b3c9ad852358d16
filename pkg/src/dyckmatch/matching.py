"""Cost, optimality and exact enumeration of optimal matchings at p = 1.

A matching is stored as a permutation ``perm`` (0-based internally): the
i-th white point in coordinate order is paired with black point
``perm[i]``.  Every optimal matching of a generic instance is determined by
its colour ordering, so most functions here only need the ``SignPath``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .errors import IndexOutOfRange, SizeMismatch, TooLarge
from .paths import (Instance, SignPath, closing_steps, from_instance,
                    require_bridge)

__all__ = [
    "Instance", "Matching", "OptimalFamily", "StepProfile", "cost",
    "k_pi_profile", "k_lb_profile", "h_lb", "stack", "is_optimal",
    "count_optimal", "entropy", "decode_mth", "enumerate_optimal",
    "ordered_matching", "OrderStatisticSet", "decode_many", "decode_all",
    "is_optimal_many",
]


@dataclass(frozen=True)
class Matching:
    perm: tuple[int, ...]

    def __post_init__(self):
        perm = tuple(int(p) for p in self.perm)
        if sorted(perm) != list(range(len(perm))):
            raise ValueError(f"{perm} is not a permutation of 0..{len(perm) - 1}")
        object.__setattr__(self, "perm", perm)

    @classmethod
    def from_pairs(cls, pairs: Sequence[Sequence[int]]) -> "Matching":
        """Build from 1-based ``[white, black]`` pairs."""
        perm = [0] * len(pairs)
        for w, b in pairs:
            perm[w - 1] = b - 1
        return cls(tuple(perm))

    def pairs(self) -> list[list[int]]:
        """1-based ``[i, pi(i)]`` pairs, the serialised form."""
        return [[i + 1, p + 1] for i, p in enumerate(self.perm)]

    def __len__(self):
        return len(self.perm)


@dataclass(frozen=True)
class OptimalFamily:
    sign_path: SignPath
    radices: tuple[int, ...]
    Z: int


@dataclass(frozen=True)
class StepProfile:
    """Piecewise-constant function on the 2N+1 regions cut by the points.

    ``values[0]`` lives left of the first point and ``values[-1]`` right of
    the last one; ``breakpoints`` are the sorted coordinates.
    """

    breakpoints: tuple
    values: tuple[int, ...]

    def integral(self):
        gaps = (b - a for a, b in zip(self.breakpoints, self.breakpoints[1:]))
        return sum(v * g for v, g in zip(self.values[1:-1], gaps))


def _positions(path: SignPath) -> tuple[list[int], list[int]]:
    """0-based step positions of whites and blacks, in order."""
    whites = [i for i, s in enumerate(path.steps) if s > 0]
    blacks = [i for i, s in enumerate(path.steps) if s < 0]
    return whites, blacks


def _check_sizes(n: int, m: Matching) -> None:
    if len(m) != n:
        raise SizeMismatch(f"matching of size {len(m)} for instance of size {n}")


def ordered_matching(n: int) -> Matching:
    return Matching(tuple(range(n)))


def cost(inst: Instance, m: Matching):
    _check_sizes(inst.size, m)
    return sum(abs(w - inst.blacks[p]) for w, p in zip(inst.whites, m.perm))


def _links(path: SignPath, m: Matching) -> list[tuple[int, int]]:
    whites, blacks = _positions(path)
    links = []
    for i, p in enumerate(m.perm):
        a, b = whites[i], blacks[p]
        links.append((a, b) if a < b else (b, a))
    return links


def k_pi_profile(inst: Instance, m: Matching) -> StepProfile:
    _check_sizes(inst.size, m)
    path = from_instance(inst)
    n2 = len(path)
    delta = [0] * (n2 + 2)
    for a, b in _links(path, m):
        # link covers regions a+1 .. b (region r sits between points r-1 and r)
        delta[a + 1] += 1
        delta[b + 1] -= 1
    values, run = [], 0
    for r in range(n2 + 1):
        run += delta[r]
        values.append(run)
    coords = tuple(x for x, _ in inst.merged())
    return StepProfile(coords, tuple(values))


def k_lb_profile(inst: Instance) -> StepProfile:
    values, level = [0], 0
    for _, s in inst.merged():
        level += s
        values.append(abs(level))
    coords = tuple(x for x, _ in inst.merged())
    return StepProfile(coords, tuple(values))


def h_lb(inst: Instance):
    return k_lb_profile(inst).integral()


def stack(path: SignPath, m: Matching, i: int) -> frozenset[tuple[str, int]]:
    """Points among the first ``i`` paired beyond position ``i``.

    Points are labelled ``("w", k)`` / ``("b", k)`` with k the 1-based rank
    of the point within its colour, left to right.
    """
    if not 1 <= i <= len(path):
        raise IndexOutOfRange(f"stack index {i} outside 1..{len(path)}")
    _check_sizes(path.size, m)
    whites, blacks = _positions(path)
    out = set()
    for k, p in enumerate(m.perm):
        a, b = whites[k], blacks[p]
        if a < i <= b:
            out.add(("w", k + 1))
        elif b < i <= a:
            out.add(("b", p + 1))
    return frozenset(out)


def is_optimal(path: SignPath, m: Matching) -> bool:
    """True iff every stack is empty or monochromatic."""
    require_bridge(path)
    _check_sizes(path.size, m)
    n2 = len(path)
    partner = [0] * n2
    for a, b in _links(path, m):
        partner[a], partner[b] = b, a
    open_w = open_b = 0
    for i, s in enumerate(path.steps):
        if partner[i] > i:
            if s > 0:
                open_w += 1
            else:
                open_b += 1
        elif s > 0:  # its partner, of the other colour, leaves the stack
            open_b -= 1
        else:
            open_w -= 1
        if open_w and open_b:
            return False
    return True


def count_optimal(path: SignPath) -> OptimalFamily:
    require_bridge(path)
    radices = tuple(c.hbar for c in closing_steps(path))
    return OptimalFamily(path, radices, math.prod(radices))


def entropy(path: SignPath) -> float:
    require_bridge(path)
    return math.fsum(math.log(c.hbar) for c in closing_steps(path))


class OrderStatisticSet:
    """Subset of {0..n-1} with O(log n) insert, delete and select-by-rank.

    Backed by a Fenwick tree over membership indicators.
    """

    def __init__(self, n: int):
        self._n = n
        self._tree = [0] * (n + 1)
        self._size = 0
        self._top = 1 << max(n.bit_length() - 1, 0)

    def __len__(self):
        return self._size

    def _update(self, i: int, delta: int) -> None:
        i += 1
        while i <= self._n:
            self._tree[i] += delta
            i += i & -i

    def add(self, i: int) -> None:
        self._update(i, 1)
        self._size += 1

    def remove(self, i: int) -> None:
        self._update(i, -1)
        self._size -= 1

    def select(self, rank: int) -> int:
        """Element with ``rank`` smaller elements (0-based)."""
        if not 0 <= rank < self._size:
            raise IndexOutOfRange(f"rank {rank} outside 0..{self._size - 1}")
        pos, remaining = 0, rank + 1
        step = self._top
        while step:
            nxt = pos + step
            if nxt <= self._n and self._tree[nxt] < remaining:
                pos = nxt
                remaining -= self._tree[nxt]
            step >>= 1
        return pos  # tree is 1-based, so pos is the 0-based element


def _digits(m: int, radices: Sequence[int]) -> list[int]:
    rest = m - 1
    digits = []
    for r in radices:
        rest, a = divmod(rest, r)
        digits.append(a)
    return digits


def _decode(path: SignPath, digits: Sequence[int]) -> tuple[Matching, int]:
    n2 = len(path)
    open_points = OrderStatisticSet(n2)
    white_rank, black_rank = [0] * n2, [0] * n2
    nw = nb = 0
    for i, s in enumerate(path.steps):
        if s > 0:
            white_rank[i], nw = nw, nw + 1
        else:
            black_rank[i], nb = nb, nb + 1
    perm = [0] * path.size
    level, j, peak = 0, 0, 0
    for i, s in enumerate(path.steps):
        if level * s < 0:
            # stack before step i holds |level| points of the opposite colour
            partner = open_points.select(digits[j])
            open_points.remove(partner)
            j += 1
            w, b = (partner, i) if s < 0 else (i, partner)
            perm[white_rank[w]] = black_rank[b]
        else:
            open_points.add(i)
            peak = max(peak, len(open_points))
        level += s
    return Matching(tuple(perm)), peak


def decode_mth(path: SignPath, m: int) -> Matching:
    """The m-th optimal matching (1-based) in mixed-radix order.

    Digit j picks, at the j-th closing step, the element of the current stack
    of that rank in coordinate order.
    """
    family = count_optimal(path)
    if not 1 <= m <= family.Z:
        raise IndexOutOfRange(f"m={m} outside 1..{family.Z}")
    return _decode(path, _digits(m, family.radices))[0]


def peak_stack_size(path: SignPath) -> int:
    """Largest stack met while decoding (the decoder's working memory)."""
    require_bridge(path)
    return _decode(path, [0] * path.size)[1]


def enumerate_optimal(path: SignPath) -> Iterator[Matching]:
    """Yield all Z optimal matchings, in decode order."""
    family = count_optimal(path)
    radices = family.radices
    digits = [0] * len(radices)
    for _ in range(family.Z):
        yield _decode(path, digits)[0]
        # odometer increment, least significant digit first
        for j, r in enumerate(radices):
            digits[j] += 1
            if digits[j] < r:
                break
            digits[j] = 0


def decode_many(path: SignPath, ms) -> np.ndarray:
    """Vectorised ``decode_mth`` for an array of 1-based indices.

    Returns a (len(ms), N) array whose rows are the 0-based permutations.
    All rows share the same stack size at every step, so the stacks are
    kept as one (K, N) array of open positions sorted by index.
    """
    family = count_optimal(path)
    if family.Z >= 2 ** 63:
        raise TooLarge("Z does not fit in 64-bit indices; use decode_mth")
    ms = np.asarray(ms, dtype=np.int64).reshape(-1)
    if ms.size and (ms.min() < 1 or ms.max() > family.Z):
        raise IndexOutOfRange(f"indices outside 1..{family.Z}")
    k, n = ms.size, path.size
    rest = ms - 1
    digits = np.empty((k, n), np.int64)
    for j, r in enumerate(family.radices):
        rest, digits[:, j] = np.divmod(rest, r)

    ranks = np.zeros(len(path), np.int64)
    counts = [0, 0]
    for i, s in enumerate(path.steps):
        c = 0 if s > 0 else 1
        ranks[i], counts[c] = counts[c], counts[c] + 1

    rows = np.arange(k)
    stack_pos = np.empty((k, max(n, 1)), np.int64)
    perm = np.empty((k, n), np.int64)
    size = level = j = 0
    for i, s in enumerate(path.steps):
        if level * s < 0:
            d = digits[:, j]
            partner = stack_pos[rows, d]
            if size > 1:
                cols = np.arange(size - 1)[None, :]
                take = cols + (cols >= d[:, None])
                stack_pos[:, :size - 1] = np.take_along_axis(stack_pos[:, :size], take, axis=1)
            size -= 1
            j += 1
            if s < 0:
                perm[rows, ranks[partner]] = ranks[i]
            else:
                perm[:, ranks[i]] = ranks[partner]
        else:
            stack_pos[:, size] = i
            size += 1
        level += s
    return perm


def decode_all(path: SignPath, max_rows: int = 1 << 26) -> np.ndarray:
    """All Z optimal matchings as a (Z, N) array, row m-1 = ``decode_mth(m)``.

    Built breadth-first: each closing step tiles the partial decodings once
    per stack choice.  Since digit j is more significant than digits < j,
    choice a of step j occupies a contiguous block of rows.
    """
    family = count_optimal(path)
    if family.Z > max_rows:
        raise TooLarge(f"Z = {family.Z} exceeds max_rows = {max_rows}")
    n2, n = len(path), path.size
    dtype = np.int8 if n2 < 128 else np.int32
    ranks = np.zeros(n2, np.int64)
    counts = [0, 0]
    for i, s in enumerate(path.steps):
        c = 0 if s > 0 else 1
        ranks[i], counts[c] = counts[c], counts[c] + 1

    perm = np.zeros((1, n), dtype)
    stack_pos = np.zeros((1, max(n, 1)), dtype)
    size = level = 0
    for i, s in enumerate(path.steps):
        if level * s < 0:
            rows = perm.shape[0]
            perm = np.tile(perm, (size, 1))
            stack_pos = np.tile(stack_pos[:, :size], (size, 1))
            d = np.repeat(np.arange(size), rows)
            partner = stack_pos[np.arange(rows * size), d].astype(np.int64)
            for a in range(size - 1):
                # rows with choice a <= c shift column c + 1 left
                block = slice(0, (a + 1) * rows)
                stack_pos[block, a] = stack_pos[block, a + 1]
            size -= 1
            if s < 0:
                perm[np.arange(rows * (size + 1)), ranks[partner]] = ranks[i]
            else:
                perm[:, ranks[i]] = ranks[partner]
        else:
            if stack_pos.shape[1] <= size:
                stack_pos = np.pad(stack_pos, ((0, 0), (0, 1)))
            stack_pos[:, size] = i
            size += 1
        level += s
    return perm


def is_optimal_many(path: SignPath, perms, chunk: int = 1 << 16) -> np.ndarray:
    """Row-wise ``is_optimal`` for a (K, N) array of 0-based permutations.

    Works column-wise: one sweep over the 2N positions, each step a vector
    operation across all matchings of the chunk.
    """
    require_bridge(path)
    perms = np.asarray(perms)
    if perms.ndim != 2 or perms.shape[1] != path.size:
        raise SizeMismatch(f"matchings of shape {perms.shape} for path of size {path.size}")
    n = path.size
    steps = path.steps
    whites = np.flatnonzero(np.asarray(steps) > 0)
    blacks = np.flatnonzero(np.asarray(steps) < 0)
    idx_type = np.int16 if 2 * n < 2 ** 15 else np.int64
    out = np.empty(perms.shape[0], bool)
    for lo in range(0, perms.shape[0], chunk):
        part = perms[lo:lo + chunk].T.astype(np.intp)  # (N, K)
        k = part.shape[1]
        cols = np.arange(k)
        # white i opens iff its black partner lies to the right
        white_opens = blacks.astype(idx_type)[part] > whites[:, None]
        inverse = np.empty((n, k), idx_type)
        inverse[part, cols] = np.arange(n, dtype=idx_type)[:, None]
        black_opens = whites.astype(idx_type)[inverse] > blacks[:, None]
        open_w = np.zeros(k, np.int32)
        open_b = np.zeros(k, np.int32)
        bad = np.zeros(k, bool)
        nw = nb = 0
        for s in steps:
            if s > 0:
                o = white_opens[nw]
                nw += 1
                open_w += o
                open_b -= ~o  # closes an open black
            else:
                o = black_opens[nb]
                nb += 1
                open_b += o
                open_w -= ~o
            bad |= (open_w > 0) & (open_b > 0)
        out[lo:lo + chunk] = ~bad
    return out
