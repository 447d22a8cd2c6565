"""Permutation-sampling estimators for Shapley values and Shapley group values.

Sampling is split into batches. Batch ``b`` draws from its own Philox stream
keyed by ``(seed, b)``, so a ``(seed, iterations, batch)`` triple fixes the
output regardless of how batches are scheduled. Batch statistics are merged
in batch order.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .coalition import check_within
from .games import Game, merge

DEFAULT_ITERATIONS = 100_000
DEFAULT_BATCH = 10_000


@dataclass(frozen=True)
class SamplerConfig:
    iterations: int = DEFAULT_ITERATIONS
    seed: int = 0
    batch: int = DEFAULT_BATCH
    workers: int = 1

    def __post_init__(self):
        if self.iterations < 2:
            raise ValueError("at least two sampled permutations are needed for a standard error")
        if self.batch < 1:
            raise ValueError("batch size must be positive")
        if self.workers < 1:
            raise ValueError("workers must be positive")


@dataclass(frozen=True)
class Estimate:
    mean: float
    stderr: float
    samples: int
    seed: int


def batch_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed & (2**64 - 1), index])))


def _batches(cfg: SamplerConfig) -> list[tuple[int, int]]:
    sizes = []
    left = cfg.iterations
    b = 0
    while left > 0:
        take = min(cfg.batch, left)
        sizes.append((b, take))
        left -= take
        b += 1
    return sizes


def _run(cfg: SamplerConfig, kernel: Callable[[np.random.Generator, int], np.ndarray]) -> list[np.ndarray]:
    jobs = _batches(cfg)

    def one(job: tuple[int, int]) -> np.ndarray:
        index, count = job
        return kernel(batch_rng(cfg.seed, index), count)

    if cfg.workers == 1:
        return [one(job) for job in jobs]
    with ThreadPoolExecutor(cfg.workers) as pool:
        return list(pool.map(one, jobs))


def _moments(samples: np.ndarray) -> tuple[int, np.ndarray, np.ndarray]:
    count = samples.shape[0]
    # constant columns get exactly zero spread and their exact value
    constant = np.ptp(samples, axis=0) == 0
    mean = np.where(constant, samples[0], samples.mean(axis=0))
    m2 = np.where(constant, 0.0, ((samples - mean) ** 2).sum(axis=0))
    return count, mean, m2


def _combine(parts: list[np.ndarray]) -> tuple[int, np.ndarray, np.ndarray]:
    """Merge per-batch moments in order (Chan et al. pairwise update)."""
    count, mean, m2 = _moments(parts[0])
    for part in parts[1:]:
        c, mu, q = _moments(part)
        total = count + c
        delta = mu - mean
        mean = mean + delta * (c / total)
        m2 = m2 + q + delta**2 * (count * c / total)
        count = total
    return count, mean, m2


def _to_estimates(parts: list[np.ndarray], seed: int) -> list[Estimate]:
    count, mean, m2 = _combine(parts)
    var = np.maximum(m2, 0.0) / (count - 1)
    stderr = np.sqrt(var / count)
    return [Estimate(float(m), float(s), count, seed) for m, s in zip(np.atleast_1d(mean), np.atleast_1d(stderr))]


def _permutations(rng: np.random.Generator, count: int, m: int) -> np.ndarray:
    return rng.permuted(np.tile(np.arange(m), (count, 1)), axis=1)


def _walk(game: Game, units: np.ndarray, perms: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Worths along each permutation: (before each arrival, after each arrival)."""
    steps = units[perms]
    after = np.bitwise_or.accumulate(steps, axis=1)
    before = after ^ steps
    return game.worths(before), game.worths(after)


def mc_shapley(game: Game, cfg: SamplerConfig = SamplerConfig()) -> list[Estimate]:
    """Estimate every player's Shapley value from random arrival orders."""
    n = game.n
    units = np.array([1 << i for i in range(n)], dtype=np.uint64)

    def kernel(rng: np.random.Generator, count: int) -> np.ndarray:
        perms = _permutations(rng, count, n)
        before, after = _walk(game, units, perms)
        out = np.empty((count, n))
        np.put_along_axis(out, perms, after - before, axis=1)
        return out

    return _to_estimates(_run(cfg, kernel), cfg.seed)


def mc_group_value(game: Game, group: int, cfg: SamplerConfig = SamplerConfig()) -> Estimate:
    """Estimate the Shapley group value of ``group`` from the proxy's marginal contributions."""
    check_within(group, game.n)
    if group == 0:
        raise ValueError("the group must be nonempty")
    merged = merge(game, group)
    m = merged.n
    units = np.array(merged.units, dtype=np.uint64)
    proxy = merged.proxy
    base = merged.base

    def kernel(rng: np.random.Generator, count: int) -> np.ndarray:
        perms = _permutations(rng, count, m)
        steps = units[perms]
        prefix = np.bitwise_or.accumulate(steps, axis=1)
        pos = np.argmax(perms == proxy, axis=1)
        after = prefix[np.arange(count), pos]
        before = after ^ np.uint64(group)
        return base.worths(after) - base.worths(before)

    return _to_estimates(_run(cfg, kernel), cfg.seed)[0]


@dataclass(frozen=True)
class ScalingReport:
    iterations: int
    short: Estimate
    long: Estimate
    ratio: float


def stderr_scaling_check(game: Game, group: int, iterations: int = 10_000, seed: int = 0,
                         batch: int = DEFAULT_BATCH) -> ScalingReport:
    """Compare standard errors at ``m`` and ``4m`` iterations (ratio near 1/2 expected)."""
    short = mc_group_value(game, group, SamplerConfig(iterations, seed, batch))
    long = mc_group_value(game, group, SamplerConfig(4 * iterations, seed + 1, batch))
    if short.stderr == 0.0 and long.stderr == 0.0:
        ratio = 1.0
    elif short.stderr == 0.0:
        ratio = math.inf
    else:
        ratio = long.stderr / short.stderr
    return ScalingReport(iterations, short, long, ratio)
