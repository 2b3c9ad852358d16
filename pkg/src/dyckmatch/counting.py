"""Exact finite-N moments of the entropy S over uniform bridges/excursions.

Three independent routes to M_{N,k} = <S^k>:

* ``exact_moment_dp``        forward sweep over (step, height) states
* ``exact_moment_closedform`` sums over marked closing steps, built from
                              binomial path counters and the reflection
                              principle
* ``gf_moment_series``       Taylor coefficients of the moment generating
                              functions, written through x(z) = z C(z)^2

All floating-point path counts are normalised by 2^{-length} so that they
stay O(1) however large N gets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import gammaln

from .errors import TooLarge, UnsupportedOrder
from .paths import Ensemble

DP_MAX_N = 20_000
CLOSED_FORM_MAX_N = {1: 5000, 2: 400}
GF_MAX_ORDER = 500
_TABLE_MAX_LENGTH = 1000  # exact Pascal table up to N = 500; log-gamma beyond


# ---------------------------------------------------------------------------
# path counters

def b_ab(a: int, b: int) -> int:
    """Unconstrained +-1 paths of length a and displacement b."""
    if a < 0 or abs(b) > a or (a + b) % 2:
        return 0
    return math.comb(a, (a + b) // 2)


def c_abd(a: int, b: int, d: int) -> int:
    """Paths of length a, displacement b, never more than d below the start."""
    if d < 0:
        raise ValueError("d must be non-negative")
    if b + d < 0:
        return 0
    return b_ab(a, b) - b_ab(a, b + 2 * (d + 1))


def tn_count(n: int, ensemble: Ensemble) -> int:
    """B_N = binom(2N, N) bridges, or C_N = B_N / (N + 1) excursions."""
    ensemble = Ensemble.parse(ensemble)
    if n < 0:
        raise ValueError("N must be non-negative")
    bn = math.comb(2 * n, n)
    return bn if ensemble is Ensemble.BRIDGE else bn // (n + 1)


def tn_scaled(n: int, ensemble: Ensemble) -> float:
    """T_N / 4^N as a float, without overflow."""
    t = tn_count(n, ensemble)
    return t / (1 << (2 * n)) if n < 4000 else math.exp(math.log(t) - 2 * n * math.log(2))


# ---------------------------------------------------------------------------
# results

@dataclass(frozen=True)
class MomentResult:
    n: int
    ensemble: Ensemble
    k: int
    value: float
    method: str
    rescaled: float = field(default=math.nan)

    def as_row(self) -> dict:
        return {"N": self.n, "ensemble": self.ensemble.value, "k": self.k,
                "raw_moment": self.value, "rescaled_moment": self.rescaled,
                "method": self.method}


def rescale(n: int, k: int, m1: float, m2: float | None = None) -> float:
    """<s^k> for s = (S - N log N / 2) / N, given the raw moments."""
    if n <= 0:
        return math.nan
    shift = 0.5 * n * math.log(n)
    if k == 1:
        return (m1 - shift) / n
    if m2 is None:
        raise ValueError("second raw moment required")
    return (m2 - 2 * shift * m1 + shift * shift) / (n * n)


def _check_order(k: int) -> None:
    if k not in (1, 2):
        raise UnsupportedOrder(f"only k = 1, 2 are supported, got {k}")


# ---------------------------------------------------------------------------
# dynamic programming

def _dp_sweep(n: int, ensemble: Ensemble, second: bool) -> tuple[float, float, float]:
    """Sweep all partial paths, carrying (count, sum S, sum S^2) per height.

    Counts are scaled by 2^{-step}; returns the three aggregates at the end
    point (height zero) after 2N steps.
    """
    bridge = ensemble is Ensemble.BRIDGE
    off = n if bridge else 0
    size = 2 * n + 1 if bridge else n + 1
    y = np.arange(size) - off
    # log of the stack size seen by a step leaving height y towards zero
    log_up = np.where(y < 0, np.log(np.maximum(-y, 1)), 0.0)
    log_down = np.where(y > 0, np.log(np.maximum(y, 1)), 0.0)

    w = np.zeros(size)
    a1 = np.zeros(size)
    a2 = np.zeros(size) if second else None
    w[off] = 1.0
    lo, hi = off, off + 1  # active window [lo, hi)
    tiny = 1e-280

    for step in range(2 * n):
        remaining = 2 * n - step - 1
        nlo = max(lo - 1, 0, off - remaining if bridge else 0)
        nhi = min(hi + 1, size, off + remaining + 1)
        nw = np.zeros(nhi - nlo)
        na1 = np.zeros_like(nw)
        na2 = np.zeros_like(nw) if second else None

        # up-steps: source y in [lo, hi) -> y + 1
        s_lo, s_hi = max(lo, nlo - 1), min(hi, nhi - 1)
        if s_lo < s_hi:
            src = slice(s_lo, s_hi)
            dst = slice(s_lo + 1 - nlo, s_hi + 1 - nlo)
            _accumulate(nw, na1, na2, dst, w[src], a1[src],
                        a2[src] if second else None, log_up[src])
        # down-steps: source y -> y - 1
        s_lo, s_hi = max(lo, nlo + 1), min(hi, nhi + 1)
        if s_lo < s_hi:
            src = slice(s_lo, s_hi)
            dst = slice(s_lo - 1 - nlo, s_hi - 1 - nlo)
            _accumulate(nw, na1, na2, dst, w[src], a1[src],
                        a2[src] if second else None, log_down[src])

        w[lo:hi] = 0.0
        a1[lo:hi] = 0.0
        w[nlo:nhi] = nw
        a1[nlo:nhi] = na1
        if second:
            a2[lo:hi] = 0.0
            a2[nlo:nhi] = na2
        # drop the far tails before they turn subnormal
        live = np.flatnonzero(nw > tiny)
        lo, hi = nlo + live[0], nlo + live[-1] + 1
        w[nlo:lo] = 0.0
        w[hi:nhi] = 0.0

    return float(w[off]), float(a1[off]), float(a2[off]) if second else math.nan


def _accumulate(nw, na1, na2, dst, w, a1, a2, lg):
    half_w = 0.5 * w
    nw[dst] += half_w
    na1[dst] += 0.5 * a1 + lg * half_w
    if na2 is not None:
        # S -> S + L  gives  S^2 -> S^2 + 2 L S + L^2
        na2[dst] += 0.5 * a2 + lg * a1 + lg * lg * half_w


def exact_moment_dp(n: int, ensemble: Ensemble, k: int, *, max_n: int = DP_MAX_N) -> MomentResult:
    ensemble = Ensemble.parse(ensemble)
    _check_order(k)
    if n < 0:
        raise ValueError("N must be non-negative")
    if n > max_n:
        raise TooLarge(f"DP capped at N = {max_n}")
    if n == 0:
        return MomentResult(0, ensemble, k, 0.0, "dp")
    w, a1, a2 = _dp_sweep(n, ensemble, second=(k == 2))
    m1 = a1 / w
    if k == 1:
        return MomentResult(n, ensemble, 1, m1, "dp", rescale(n, 1, m1))
    m2 = a2 / w
    return MomentResult(n, ensemble, 2, m2, "dp", rescale(n, 2, m1, m2))


def exact_moments_dp(n: int, ensemble: Ensemble) -> tuple[float, float]:
    """(M_{N,1}, M_{N,2}) from a single sweep."""
    ensemble = Ensemble.parse(ensemble)
    if n == 0:
        return 0.0, 0.0
    w, a1, a2 = _dp_sweep(n, ensemble, second=True)
    return a1 / w, a2 / w


# ---------------------------------------------------------------------------
# closed-form sums over marked closing steps

def _half_binom_table(amax: int) -> np.ndarray:
    """T[a, j] = binom(a, j) / 2^a by the halving Pascal recurrence."""
    t = np.zeros((amax + 1, amax + 1))
    t[0, 0] = 1.0
    for a in range(1, amax + 1):
        t[a, 1:a + 1] = 0.5 * t[a - 1, :a]
        t[a, :a] += 0.5 * t[a - 1, :a]
    return t


class _HalfBinom:
    """Vectorised B_{a,b} / 2^a over integer arrays a, b."""

    def __init__(self, amax: int):
        self.table = _half_binom_table(amax) if amax <= _TABLE_MAX_LENGTH else None

    def __call__(self, a, b) -> np.ndarray:
        a, b = np.broadcast_arrays(np.asarray(a), np.asarray(b))
        ok = (a >= 0) & (np.abs(b) <= a) & ((a + b) % 2 == 0)
        j = np.where(ok, (a + b) // 2, 0)
        aa = np.where(ok, a, 0)
        if self.table is not None:
            vals = self.table[aa, j]
        else:
            vals = np.exp(gammaln(aa + 1.0) - gammaln(j + 1.0) - gammaln(aa - j + 1.0)
                          - aa * math.log(2.0))
        return np.where(ok, vals, 0.0)

    def reflected(self, a, b, d) -> np.ndarray:
        """C_{a,b,d} / 2^a (theta factor included)."""
        b = np.asarray(b)
        return np.where(b + d >= 0, self(a, b) - self(a, b + 2 * (np.asarray(d) + 1)), 0.0)


def _single_mark_weights(n: int, ensemble: Ensemble, hb: _HalfBinom) -> tuple[np.ndarray, np.ndarray]:
    """Scaled counts of paths with a closing step at (t, h), summed over t.

    Returns (h values, weights) where weights[h] * 2^{2N-1} is
    sum_t M_N(t; h).
    """
    h = np.arange(1, n + 1)
    out = np.zeros(n)
    chunk = max(1, 4_000_000 // max(n, 1))
    for t0 in range(1, 2 * n + 1, chunk):
        t = np.arange(t0, min(t0 + chunk, 2 * n + 1))[:, None]
        before, after = t - 1, 2 * n - t
        if ensemble is Ensemble.BRIDGE:
            m = 2.0 * hb(before, h) * hb(after, h - 1)
        else:
            m = hb.reflected(before, h, 0) * hb.reflected(after, -(h - 1), h - 1)
        out += m.sum(axis=0)
    return h, out


def _pair_mark_sum(n: int, ensemble: Ensemble, hb: _HalfBinom) -> float:
    """sum over t1 < t2, h1, h2 of log h1 log h2 M_N(t1, t2; h1, h2) / 2^{2N-2}."""
    if n < 2:
        return 0.0
    h = np.arange(2, n + 1)  # log 1 = 0 drops h = 1
    lg = np.log(h)
    alphas = np.arange(2 * n - 1)[:, None]
    if ensemble is Ensemble.BRIDGE:
        left = 2.0 * hb(alphas, h) * lg
        right = hb(alphas, h - 1) * lg
    else:
        left = hb.reflected(alphas, h, 0) * lg
        right = hb.reflected(alphas, -(h - 1), h - 1) * lg
    # left[a, h] vanishes unless a = h (mod 2), right[a, h] unless a = h - 1;
    # splitting by parity cuts the matrix products by a factor of four
    hpar = [np.flatnonzero(h % 2 == q) for q in (0, 1)]
    left_p = [left[p::2][:, hpar[p]] for p in (0, 1)]
    right_p = [right[r::2][:, hpar[(r + 1) % 2]] for r in (0, 1)]
    h1 = h[:, None]
    h2 = h[None, :]
    total = 0.0
    last = 2 * n - 2
    for gap in range(last + 1):
        s = last - gap  # steps before the first mark plus after the second
        if ensemble is Ensemble.BRIDGE:
            g = hb(gap, h2 - h1 + 1) + hb(gap, h2 + h1 - 1)
        else:
            g = hb(gap, h2 - h1 + 1) - hb(gap, h2 + h1 + 1)
        if not g.any():
            continue
        for p in (0, 1):
            if s < p:
                continue
            r = (s - p) % 2
            rows = (s - p) // 2 + 1
            k_block = left_p[p][:rows].T @ right_p[r][(s - p) // 2::-1]
            g_block = g[np.ix_(hpar[p], hpar[(r + 1) % 2])]
            total += float(np.einsum("ij,ij->", g_block, k_block))
    return total


def exact_moment_closedform(n: int, ensemble: Ensemble, k: int) -> MomentResult:
    ensemble = Ensemble.parse(ensemble)
    _check_order(k)
    if n < 0:
        raise ValueError("N must be non-negative")
    if n > CLOSED_FORM_MAX_N[k]:
        raise TooLarge(f"closed form for k={k} capped at N = {CLOSED_FORM_MAX_N[k]}")
    if n == 0:
        return MomentResult(0, ensemble, k, 0.0, "closed_form")
    hb = _HalfBinom(2 * n)
    tn = tn_scaled(n, ensemble)
    h, weights = _single_mark_weights(n, ensemble, hb)
    lg = np.log(h)
    # one mark: scaled by 2^{-(2N-1)}, so divide by 2 T_N / 4^N
    m1 = math.fsum(lg * weights) / (2.0 * tn)
    if k == 1:
        return MomentResult(n, ensemble, 1, m1, "closed_form", rescale(n, 1, m1))
    one_mark = math.fsum(lg * lg * weights) / (2.0 * tn)
    two_marks = 2.0 * _pair_mark_sum(n, ensemble, hb) / (4.0 * tn)
    m2 = one_mark + two_marks
    return MomentResult(n, ensemble, 2, m2, "closed_form", rescale(n, 2, m1, m2))


# ---------------------------------------------------------------------------
# generating functions

@dataclass(frozen=True)
class SeriesF64:
    """Power series truncated at order M, stored as c_N / radius^N.

    With radius 4 the stored coefficients of the moment generating
    functions stay O(N^2 log^2 N) instead of growing like 4^N.
    """

    scaled: np.ndarray
    radius: float = 4.0

    def __len__(self):
        return len(self.scaled)

    @property
    def order(self) -> int:
        return len(self.scaled) - 1

    def coefficient(self, n: int) -> float:
        """Unscaled coefficient of z^n (may overflow to inf for large n)."""
        with np.errstate(over="ignore"):
            return float(self.scaled[n] * np.float64(self.radius) ** n)


def _mul(a: np.ndarray, b: np.ndarray, order: int) -> np.ndarray:
    return np.convolve(a, b)[:order + 1]


def _compose(f: np.ndarray, x: np.ndarray, order: int) -> np.ndarray:
    """f(x(w)) truncated at ``order``; x must have zero constant term."""
    out = np.zeros(order + 1)
    for coef in f[order::-1]:
        out = _mul(out, x, order)
        out[0] += coef
    return out


def catalan_series(order: int) -> np.ndarray:
    """C_N / 4^N for N = 0..order via C_{N+1} = 2(2N+1)/(N+2) C_N."""
    c = np.empty(order + 1)
    c[0] = 1.0
    for m in range(order):
        c[m + 1] = c[m] * (2 * m + 1) / (2 * (m + 2))
    return c


def central_binomial_series(order: int) -> np.ndarray:
    """B_N / 4^N for N = 0..order."""
    b = np.empty(order + 1)
    b[0] = 1.0
    for m in range(order):
        b[m + 1] = b[m] * (2 * m + 1) / (2 * (m + 1))
    return b


def _inv_one_minus_power(p: int, order: int) -> np.ndarray:
    """Coefficients of (1 - x)^{-p}."""
    h = np.arange(order + 1)
    return np.array([math.comb(int(i) + p - 1, p - 1) for i in h], dtype=float)


def _x_coefficients(ensemble: Ensemble, k: int, order: int) -> np.ndarray:
    """Coefficients in x of M_k(z(x)), truncated at x^order."""
    h = np.arange(order + 1, dtype=float)
    log_h = np.zeros(order + 1)
    log_h[1:] = np.log(h[1:])
    one_plus_x = np.zeros(order + 1)
    one_plus_x[:2] = 1.0

    if k == 1:
        li = log_h
        if ensemble is Ensemble.BRIDGE:
            pref = 2.0 * _mul(one_plus_x, _inv_one_minus_power(2, order), order)
        else:
            pref = one_plus_x
        return _mul(pref, li, order)

    li1 = log_h
    li2 = log_h ** 2
    lam = np.zeros(order + 1)  # log(h^2 + h) log h!
    hh = h[1:]
    lam[1:] = np.log(hh * hh + hh) * gammaln(hh + 1.0)
    li1_sq = np.zeros(order + 2)
    full = np.convolve(li1, li1)[:order + 2]
    li1_sq[:len(full)] = full
    li1_sq_over_x = li1_sq[1:]  # Li_{0,1}^2 has valuation 2

    if ensemble is Ensemble.BRIDGE:
        one_mark = 2.0 * _mul(_mul(one_plus_x, _inv_one_minus_power(2, order), order), li2, order)
        x_series = np.zeros(order + 1)
        x_series[1] = 1.0
        pref = 4.0 * _mul(_mul(x_series, one_plus_x, order), _inv_one_minus_power(3, order), order)
        two_marks = _mul(pref, lam + li1_sq_over_x, order)
    else:
        one_mark = _mul(one_plus_x, li2, order)
        x_series = np.zeros(order + 1)
        x_series[1] = 1.0
        pref = 2.0 * _mul(_mul(x_series, one_plus_x, order), _inv_one_minus_power(1, order), order)
        two_marks = _mul(pref, lam - li1_sq[:order + 1], order)
    return one_mark + two_marks


def gf_moment_series(ensemble: Ensemble, k: int, order: int) -> SeriesF64:
    """Coefficients of M_k(z) = sum_N z^N T_N M_{N,k}, up to z^order.

    The polylog-type series are built in the variable x, then composed with
    x(z) = C(z) - 1.  Everything runs in w = 4z so coefficients stay small.
    """
    ensemble = Ensemble.parse(ensemble)
    _check_order(k)
    if order > GF_MAX_ORDER:
        raise TooLarge(f"series order capped at {GF_MAX_ORDER}")
    if order < 0:
        raise ValueError("order must be non-negative")
    x_of_w = catalan_series(order)
    x_of_w[0] = 0.0
    f = _x_coefficients(ensemble, k, order)
    return SeriesF64(_compose(f, x_of_w, order))


METHODS: dict[str, Callable[..., MomentResult]] = {
    "dp": exact_moment_dp,
    "closed": exact_moment_closedform,
    "closed_form": exact_moment_closedform,
}
