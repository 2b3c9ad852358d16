"""Uniform random bridges and excursions, and Monte Carlo entropy statistics.

Random streams come from the counter-based Philox generator: the stream for
block ``b`` of samples uses key ``seed`` and a counter whose third word is
``b``.  Results therefore do not depend on how blocks are spread over
workers.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .paths import Ensemble, SignPath

DEFAULT_SEED = 20210611
BLOCK_SIZE = 256
N_BATCHES = 100


def block_rng(seed: int, block: int) -> np.random.Generator:
    """Independent stream for one block of samples."""
    return np.random.Generator(np.random.Philox(key=seed, counter=[0, 0, block, 0]))


def sample_bridge(n: int, rng: np.random.Generator) -> SignPath:
    """Uniform over the binom(2N, N) bridges: shuffle N ups and N downs."""
    return SignPath(tuple(_bridge_block(n, 1, rng)[0].tolist()))


def sample_excursion(n: int, rng: np.random.Generator) -> SignPath:
    """Uniform over the Catalan(N) excursions, by the cycle lemma."""
    return SignPath(tuple(_excursion_block(n, 1, rng)[0].tolist()))


def _bridge_block(n: int, count: int, rng: np.random.Generator) -> np.ndarray:
    base = np.concatenate([np.ones(n, np.int8), -np.ones(n, np.int8)])
    block = np.tile(base, (count, 1))
    rng.permuted(block, axis=1, out=block)
    return block


def _excursion_block(n: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """Shuffle N+1 ups and N downs, rotate to the unique all-positive
    rotation, drop its leading up-step."""
    base = np.concatenate([np.ones(n + 1, np.int8), -np.ones(n, np.int8)])
    block = np.tile(base, (count, 1))
    rng.permuted(block, axis=1, out=block)
    # prefix sums P_0 .. P_{2N}; start right after the last minimum
    prefix = np.zeros((count, 2 * n + 1), np.int32)
    np.cumsum(block[:, :-1], axis=1, out=prefix[:, 1:])
    last_min = 2 * n - np.argmin(prefix[:, ::-1], axis=1)
    cols = (last_min[:, None] + 1 + np.arange(2 * n)[None, :]) % (2 * n + 1)
    return np.take_along_axis(block, cols, axis=1)


def sample_block(n: int, ensemble: Ensemble, count: int, rng: np.random.Generator) -> np.ndarray:
    ensemble = Ensemble.parse(ensemble)
    if ensemble is Ensemble.BRIDGE:
        return _bridge_block(n, count, rng)
    return _excursion_block(n, count, rng)


def block_entropies(block: np.ndarray) -> np.ndarray:
    """S for each row of a (count, 2N) array of +-1 steps, in O(N) per row."""
    count, length = block.shape
    if length == 0:
        return np.zeros(count)
    level = np.zeros((count, length), np.int32)
    np.cumsum(block[:, :-1], axis=1, out=level[:, 1:])  # height before each step
    closing = level * block < 0
    logs = np.log(np.maximum(np.abs(level), 1))
    return np.where(closing, logs, 0.0).sum(axis=1)


def rescaled(entropies: np.ndarray, n: int) -> np.ndarray:
    """s = (S - N log N / 2) / N."""
    return (entropies - 0.5 * n * math.log(n)) / n


def _blocks_worker(args) -> np.ndarray:
    n, ensemble, seed, first, last, total = args
    out = []
    for b in range(first, last):
        count = min(BLOCK_SIZE, total - b * BLOCK_SIZE)
        out.append(block_entropies(sample_block(n, ensemble, count, block_rng(seed, b))))
    return np.concatenate(out) if out else np.zeros(0)


def sample_entropies(n: int, ensemble: Ensemble, k: int, seed: int = DEFAULT_SEED,
                     threads: int = 1) -> np.ndarray:
    """Entropy S of ``k`` independent uniform paths, ordered by sample index."""
    ensemble = Ensemble.parse(ensemble)
    n_blocks = -(-k // BLOCK_SIZE)
    threads = max(1, min(threads, n_blocks))
    bounds = np.linspace(0, n_blocks, threads + 1).astype(int)
    jobs = [(n, ensemble, seed, int(a), int(b), k) for a, b in zip(bounds, bounds[1:])]
    if threads == 1:
        parts = [_blocks_worker(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(_blocks_worker, jobs))
    return np.concatenate(parts)


@dataclass
class SampleStats:
    n: int
    ensemble: str
    num_samples: int
    seed: int
    mean: float
    variance: float
    second_moment: float
    third_central: float
    fourth_central: float
    kurtosis: float
    se_mean: float
    se_second_moment: float
    se_third_central: float
    histogram_edges: list = field(default_factory=list)
    histogram_counts: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def batch_means_se(values: np.ndarray, n_batches: int = N_BATCHES) -> float:
    """Standard error of the mean from non-overlapping batch means."""
    k = len(values)
    n_batches = min(n_batches, k)
    if n_batches < 2:
        return math.nan
    size = k // n_batches
    means = values[:size * n_batches].reshape(n_batches, size).mean(axis=1)
    return float(np.std(means, ddof=1) / math.sqrt(n_batches))


def summarize(s: np.ndarray, n: int, ensemble: Ensemble, seed: int, bins: int = 200) -> SampleStats:
    ensemble = Ensemble.parse(ensemble)
    k = len(s)
    mean = math.fsum(s) / k
    centered = s - mean
    var = math.fsum(centered ** 2) / k
    third = math.fsum(centered ** 3) / k
    fourth = math.fsum(centered ** 4) / k
    sd = math.sqrt(var)
    lo, hi = (mean - 6 * sd, mean + 6 * sd) if sd > 0 else (mean - 0.5, mean + 0.5)
    counts, edges = np.histogram(np.clip(s, lo, hi), bins=bins, range=(lo, hi))
    return SampleStats(
        n=n, ensemble=ensemble.value, num_samples=k, seed=seed,
        mean=mean, variance=var, second_moment=math.fsum(s * s) / k,
        third_central=third, fourth_central=fourth,
        kurtosis=fourth / var ** 2 if var > 0 else math.nan,
        se_mean=batch_means_se(s), se_second_moment=batch_means_se(s * s),
        se_third_central=batch_means_se(centered ** 3),
        histogram_edges=edges.tolist(), histogram_counts=counts.tolist(),
    )


def default_threads() -> int:
    env = os.environ.get("DYCK_THREADS")
    return int(env) if env else (os.cpu_count() or 1)


def mc_entropy_stats(n: int, ensemble: Ensemble, k: int, seed: int = DEFAULT_SEED,
                     bins: int = 200, threads: int = 1, raw: bool = False):
    """Monte Carlo summary of the rescaled entropy over ``k`` uniform paths.

    Returns ``SampleStats``, or ``(SampleStats, s_values)`` when ``raw``.
    """
    if k < 2:
        raise ValueError("need at least two samples")
    if n < 1:
        raise ValueError("rescaled entropy needs N >= 1")
    s = rescaled(sample_entropies(n, ensemble, k, seed, threads), n)
    stats = summarize(s, n, ensemble, seed, bins)
    return (stats, s) if raw else stats
