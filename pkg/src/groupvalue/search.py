"""Ranking and selecting groups by their Shapley group value."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations
from math import comb
from typing import Optional

import numpy as np

from .coalition import EXACT_LIMIT, check_within, full, members
from .estimation import SamplerConfig, mc_group_value, mc_shapley
from .games import CapacityError, Game
from .shapley import group_value, marginal_group_contribution, shapley_value

# gains closer than this count as ties, broken by player index
TIE_EPS = 1e-12
DEFAULT_MAX_GROUPS = 250_000


@dataclass(frozen=True)
class SearchConfig:
    k: int
    top_m: int = 10
    method: str = "exact"
    sampler: SamplerConfig = field(default_factory=SamplerConfig)
    max_groups: int = DEFAULT_MAX_GROUPS
    workers: int = 1

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("group size must be at least 1")
        if self.top_m < 1:
            raise ValueError("top_m must be at least 1")
        if self.method not in ("exact", "monte-carlo"):
            raise ValueError("method must be 'exact' or 'monte-carlo'")


@dataclass(frozen=True)
class RankingEntry:
    group: int
    value: float
    stderr: Optional[float]
    rank: int


def group_seed(seed: int, group: int) -> int:
    """Per-group sampling seed, fixed by the run seed and the group."""
    ss = np.random.SeedSequence([seed & (2**64 - 1), group & (2**64 - 1)])
    return int(ss.generate_state(1, np.uint64)[0])


def ranking_key(value: float, group: int) -> tuple[float, int]:
    # rounding to 12 decimals lets float noise fall back on the mask order
    return (-round(value, 12), group)


def rank_groups(game: Game, cfg: SearchConfig) -> list[RankingEntry]:
    """Top ``cfg.top_m`` groups of size ``cfg.k``, best first."""
    n = game.n
    if cfg.k > n:
        raise ValueError(f"group size {cfg.k} exceeds the {n} players")
    total = comb(n, cfg.k)
    if total > cfg.max_groups:
        raise CapacityError(f"{total} groups of size {cfg.k} exceed the budget of {cfg.max_groups}")
    if cfg.method == "exact" and n - cfg.k + 1 > EXACT_LIMIT:
        raise CapacityError("merged games are too large for exact values; use the monte-carlo method")
    groups = [sum(1 << p for p in combo) for combo in combinations(range(n), cfg.k)]

    def evaluate(group: int) -> tuple[int, float, Optional[float]]:
        if cfg.method == "exact":
            return group, group_value(game, group), None
        s = cfg.sampler
        est = mc_group_value(game, group, SamplerConfig(s.iterations, group_seed(s.seed, group), s.batch))
        return group, est.mean, est.stderr

    if cfg.workers > 1:
        with ThreadPoolExecutor(cfg.workers) as pool:
            results = list(pool.map(evaluate, groups))
    else:
        results = [evaluate(g) for g in groups]
    results.sort(key=lambda r: ranking_key(r[1], r[0]))
    return [RankingEntry(g, v, se, rank) for rank, (g, v, se) in enumerate(results[: cfg.top_m], start=1)]


@dataclass(frozen=True)
class GreedyStep:
    player: int
    value: float
    gain: float
    # stand-alone and synergy parts of the gain; None for the seed step or sampled runs
    independent: Optional[float] = None
    complementarity: Optional[float] = None


@dataclass(frozen=True)
class GreedyResult:
    group: int
    value: float
    trace: list[GreedyStep]


def _argmax(scores: dict[int, float]) -> int:
    best = None
    for player in sorted(scores):
        if best is None or scores[player] > scores[best] + TIE_EPS:
            best = player
    return best


def greedy_group(game: Game, k: int, sampler: Optional[SamplerConfig] = None,
                 candidates: Optional[int] = None) -> GreedyResult:
    """Grow a group from the best single player, always adding the largest marginal gain.

    ``candidates`` restricts the players that may join (all players by default).
    """
    n = game.n
    pool = full(n) if candidates is None else candidates
    check_within(pool, n)
    if not 1 <= k <= pool.bit_count():
        raise ValueError(f"group size must lie in 1..{pool.bit_count()}")
    exact = n <= EXACT_LIMIT
    if not exact and sampler is None:
        raise CapacityError(f"{n} players exceed the exact limit; pass a sampler configuration")

    if exact:
        phi = shapley_value(game)
    else:
        phi = np.array([e.mean for e in mc_shapley(game, sampler)])

        def value_of(group: int) -> float:
            cfg = SamplerConfig(sampler.iterations, group_seed(sampler.seed, group), sampler.batch)
            return mc_group_value(game, group, cfg).mean

    first = _argmax({i: float(phi[i]) for i in members(pool)})
    group = 1 << first
    value = float(phi[first])
    trace = [GreedyStep(first, value, value)]
    while len(trace) < k:
        if exact:
            parts = {i: marginal_group_contribution(game, group, i) for i in members(pool & ~group)}
            best = _argmax({i: p.total for i, p in parts.items()})
            step = GreedyStep(best, value + parts[best].total, parts[best].total,
                              parts[best].independent, parts[best].complementarity)
        else:
            values = {i: value_of(group | (1 << i)) for i in members(pool & ~group)}
            best = _argmax(values)
            step = GreedyStep(best, values[best], values[best] - value)
        group |= 1 << best
        value = step.value
        trace.append(step)
    return GreedyResult(group, value, trace)


@dataclass(frozen=True)
class SingletonComparison:
    k: int
    individual_group: int
    individual_value: float
    top_group: int
    top_value: float

    @property
    def diverges(self) -> bool:
        return self.individual_group != self.top_group


def best_singleton_comparison(game: Game, k: int) -> SingletonComparison:
    """Contrast the ``k`` individually strongest players with the best group of size ``k``."""
    phi = shapley_value(game)
    order = sorted(range(game.n), key=lambda i: ranking_key(float(phi[i]), i))
    individual = sum(1 << i for i in order[:k])
    top = rank_groups(game, SearchConfig(k=k, top_m=1))[0]
    return SingletonComparison(k, individual, group_value(game, individual), top.group, top.value)


def explain_group(game: Game, group: int) -> GreedyResult:
    """Members of ``group`` in greedy order, each step split into its two parts."""
    if group == 0:
        raise ValueError("the group must be nonempty")
    return greedy_group(game, group.bit_count(), candidates=group)
