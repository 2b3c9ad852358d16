"""Limit constants for the rescaled entropy and numerical checks on them."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

from scipy import integrate

from .counting import (exact_moment_closedform, exact_moment_dp,
                       exact_moments_dp, rescale)
from .errors import QuadratureNonConvergence, UnsupportedOrder
from .paths import Ensemble

# Euler-Mascheroni constant, 20 significant digits (OEIS A001620)
EULER_GAMMA = 0.57721566490153286061
PI2 = math.pi ** 2

VARIANCE_CLOSED_FORM = 1.0 / 3.0 - PI2 / 72.0


@dataclass(frozen=True)
class Prediction:
    ensemble: Ensemble
    k: int
    constant: float
    leading_terms: str
    error_rate: str


def predicted_constants(ensemble: Ensemble, k: int) -> float:
    """Large-N limit of <s^k>, with s = (S - N log N / 2) / N."""
    ensemble = Ensemble.parse(ensemble)
    g = EULER_GAMMA
    if k == 1:
        return -(g + 2) / 2 if ensemble is Ensemble.BRIDGE else -g / 2
    if k == 2:
        if ensemble is Ensemble.BRIDGE:
            return 4.0 / 3.0 + g * g / 4 + g - PI2 / 72
        return g * g / 4 + 5 * PI2 / 24 - 2
    raise UnsupportedOrder(f"no prediction for k = {k}")


def prediction(ensemble: Ensemble, k: int) -> Prediction:
    ensemble = Ensemble.parse(ensemble)
    c = predicted_constants(ensemble, k)
    if k == 1:
        terms = f"N log N / 2 + ({c:.12g}) N"
        rate = "O(log N / sqrt N)"
    else:
        c1 = predicted_constants(ensemble, 1)
        terms = f"N^2 log^2 N / 4 + ({c1:.12g}) N^2 log N + ({c:.12g}) N^2"
        rate = "O(log^2 N / sqrt N)"
    return Prediction(ensemble, k, c, terms, rate)


def predicted_moment(n: int, ensemble: Ensemble, k: int) -> float:
    """Asymptotic M_{N,k} truncated after the O(N^k) term."""
    if n < 2:
        raise ValueError("asymptotic form needs N >= 2")
    ensemble = Ensemble.parse(ensemble)
    log_n = math.log(n)
    c1 = predicted_constants(ensemble, 1)
    if k == 1:
        return 0.5 * n * log_n + c1 * n
    c2 = predicted_constants(ensemble, 2)
    return n * n * (0.25 * log_n ** 2 + c1 * log_n + c2)


# ---------------------------------------------------------------------------
# variance integral

# Direct evaluation loses ~12 eps / u^2 relative precision to cancellation,
# so the series takes over well before that matters.
_SERIES_CUT = 0.05
_SERIES_TERMS = tuple((n - 2) / (n * (n - 1)) for n in range(3, 30))


def variance_kernel(z: float) -> float:
    """-(2(1-z) + (1+z) log z) / (1-z)^3, with the removable point z = 1 patched.

    Near z = 1 (u = 1 - z) the kernel is sum_{n>=3} (n-2)/(n(n-1)) u^{n-3}.
    """
    u = 1.0 - z
    if u < _SERIES_CUT:
        acc = 0.0
        for c in reversed(_SERIES_TERMS):
            acc = acc * u + c
        return acc
    return -(2.0 * u + (1.0 + z) * math.log(z)) / u ** 3


def variance_integrand(z: float) -> float:
    if z <= 0.0:
        return 0.0
    return variance_kernel(z) * math.asin(math.sqrt(z)) ** 2


def variance_quadrature(tol: float = 1e-9) -> float:
    """Bridge variance of s as the arcsin^2 integral over (0, 1)."""
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            value, err = integrate.quad(variance_integrand, 0.0, 1.0,
                                        epsabs=tol * 1e-2, epsrel=1e-12, limit=200)
        except integrate.IntegrationWarning as exc:
            raise QuadratureNonConvergence(str(exc)) from None
    if not err <= tol:
        raise QuadratureNonConvergence(f"error estimate {err:g} above {tol:g}")
    return value


def consistency_checks(tol: float = 1e-9) -> list[tuple[str, bool, float]]:
    """(label, ok, discrepancy) for the internal checks on the constants."""
    quad = variance_quadrature()
    var_b = predicted_constants(Ensemble.BRIDGE, 2) - predicted_constants(Ensemble.BRIDGE, 1) ** 2
    rows = [
        ("variance integral = 1/3 - pi^2/72", abs(quad - VARIANCE_CLOSED_FORM)),
        ("bridge <s^2> - <s>^2 = variance integral", abs(var_b - quad)),
        ("excursion <s> = -gamma/2", abs(predicted_constants(Ensemble.EXCURSION, 1) + EULER_GAMMA / 2)),
        ("bridge <s> = excursion <s> - 1", abs(predicted_constants(Ensemble.BRIDGE, 1)
                                             - predicted_constants(Ensemble.EXCURSION, 1) + 1)),
    ]
    return [(label, d <= tol, d) for label, d in rows]


# ---------------------------------------------------------------------------
# convergence of exact moments

@dataclass(frozen=True)
class ConvergenceRow:
    n: int
    exact: float
    predicted: float
    deviation: float
    normalized: float


@dataclass(frozen=True)
class ConvergenceReport:
    ensemble: Ensemble
    k: int
    rows: tuple[ConvergenceRow, ...]
    flagged: bool

    @property
    def monotone(self) -> bool:
        devs = [abs(r.deviation) for r in self.rows]
        return all(b < a for a, b in zip(devs, devs[1:]))


def _rescaled_source(method: str) -> Callable[[int, Ensemble, int], float]:
    def dp(n, e, k):
        return exact_moment_dp(n, e, k).rescaled

    def closed(n, e, k):
        return exact_moment_closedform(n, e, k).rescaled

    return {"dp": dp, "closed": closed, "closed_form": closed}[method]


def convergence_report(ns: Sequence[int], ensemble: Ensemble, k: int,
                       moment_source: str | Callable = "dp") -> ConvergenceReport:
    """Exact rescaled moments against their limits, one row per N.

    The deviation is normalised by log N / sqrt N (k = 1) or
    log^2 N / sqrt N (k = 2).  ``flagged`` is set when, over the top decade
    of N, the largest normalised deviation exceeds ten times the smallest.
    """
    ensemble = Ensemble.parse(ensemble)
    source = _rescaled_source(moment_source) if isinstance(moment_source, str) else moment_source
    target = predicted_constants(ensemble, k)
    rows = []
    for n in ns:
        exact = source(n, ensemble, k)
        dev = exact - target
        rate = math.log(n) ** k / math.sqrt(n)
        rows.append(ConvergenceRow(n, exact, target, dev, abs(dev) / rate if rate > 0 else math.nan))
    flagged = False
    if len(rows) > 1:
        top = rows[-1].n
        window = [abs(r.normalized) for r in rows if r.n * 10 >= top and r.normalized == r.normalized]
        if len(window) > 1 and min(window) > 0:
            flagged = max(window) / min(window) > 10
    return ConvergenceReport(ensemble, k, tuple(rows), flagged)


def rescaled_second_moment_dp(n: int, ensemble: Ensemble) -> float:
    m1, m2 = exact_moments_dp(n, ensemble)
    return rescale(n, 2, m1, m2)
