"""Exact Shapley values, Shapley group values and the interaction tools built on them."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np

from .coalition import all_masks, check_within, members, popcounts
from .games import (
    EPS_STRUCT,
    Game,
    dividend_table,
    merge,
    require_exact,
    restrict,
)


@lru_cache(maxsize=128)
def shapley_weights(n: int) -> np.ndarray:
    """``s!(n-s-1)!/n!`` for ``s = 0..n-1``, by the multiplicative recurrence."""
    w = np.empty(n)
    w[0] = 1.0 / n
    for s in range(n - 1):
        w[s + 1] = w[s] * (s + 1) / (n - s - 1)
    w.flags.writeable = False
    return w


def _player_value(table: np.ndarray, n: int, player: int) -> float:
    masks = all_masks(n)
    without = masks[(masks >> player) & 1 == 0]
    weights = shapley_weights(n)[popcounts(n)[without]]
    return float(np.dot(weights, table[without | (1 << player)] - table[without]))


def shapley_value(game: Game) -> np.ndarray:
    """Shapley value of every player by weighted subset enumeration."""
    require_exact(game.n, "the exact Shapley value")
    table = game.table()
    return np.array([_player_value(table, game.n, i) for i in range(game.n)])


@dataclass(frozen=True)
class GroupValueResult:
    group: int
    value: float
    method: str = "exact"
    stderr: Optional[float] = None
    # set when the group is empty and the value is 0 by definition
    empty: bool = False


def shapley_group_value(game: Game, group: int) -> GroupValueResult:
    """Value of ``group`` acting as a single proxy player in the merging game."""
    check_within(group, game.n)
    if group == 0:
        return GroupValueResult(0, 0.0, empty=True)
    merged = merge(game, group)
    require_exact(merged.n, "the exact Shapley group value")
    return GroupValueResult(group, _player_value(merged.table(), merged.n, merged.proxy))


def group_value(game: Game, group: int) -> float:
    return shapley_group_value(game, group).value


def additive_group_value(game: Game, group: int) -> GroupValueResult:
    """Sum of the members' individual Shapley values."""
    check_within(group, game.n)
    require_exact(game.n, "the additive group value")
    table = game.table()
    value = sum(_player_value(table, game.n, i) for i in members(group))
    return GroupValueResult(group, float(value), empty=group == 0)


def _check_distinct(game: Game, players: tuple[int, ...], base: int) -> None:
    pmask = 0
    for p in players:
        if not 0 <= p < game.n:
            raise ValueError(f"player {p} is outside the game")
        if pmask >> p & 1:
            raise ValueError("players must be distinct")
        pmask |= 1 << p
    check_within(base, game.n)
    if base & pmask:
        raise ValueError("the base coalition must exclude the players being differenced")


def second_difference(game: Game, i: int, j: int, base: int = 0) -> float:
    """``v(S+i+j) - v(S+j) - v(S+i) + v(S)``."""
    _check_distinct(game, (i, j), base)
    bi, bj = 1 << i, 1 << j
    v = game.worth
    return v(base | bi | bj) - v(base | bj) - v(base | bi) + v(base)


def third_difference(game: Game, i: int, j: int, k: int, base: int = 0) -> float:
    """Effect of ``i`` on the second difference of ``j`` and ``k``."""
    _check_distinct(game, (i, j, k), base)
    return second_difference(game, j, k, base | (1 << i)) - second_difference(game, j, k, base)


def _second_differences(table: np.ndarray, n: int, i: int, j: int) -> tuple[np.ndarray, np.ndarray]:
    masks = all_masks(n)
    pair = (1 << i) | (1 << j)
    rest = masks[(masks & pair) == 0]
    d2 = table[rest | pair] - table[rest | (1 << j)] - table[rest | (1 << i)] + table[rest]
    return rest, d2


def average_complementarity(game: Game, i: int, j: int) -> float:
    """Shapley-weighted average of the second differences of ``i`` and ``j``.

    The weight of ``S`` is ``s!(n-s-1)!/n!``, summed over ``S`` avoiding both players.
    """
    _check_distinct(game, (i, j), 0)
    require_exact(game.n, "the average complementarity")
    rest, d2 = _second_differences(game.table(), game.n, i, j)
    weights = shapley_weights(game.n)[popcounts(game.n)[rest]]
    return float(np.dot(weights, d2))


@dataclass(frozen=True)
class GroupContribution:
    """Marginal contribution of an entrant to a group and its two parts."""

    group: int
    entrant: int
    total: float
    independent: float
    complementarity: float

    @property
    def residual(self) -> float:
        return self.total - (self.independent + self.complementarity)


def marginal_group_contribution(game: Game, group: int, entrant: int) -> GroupContribution:
    """``phi^g(C+i) - phi^g(C)`` next to its split into a stand-alone and a synergy term.

    The stand-alone term is the entrant's Shapley value once the group is
    removed from the game; the synergy term is the average complementarity of
    the proxy and the entrant in the merging game.
    """
    if group == 0:
        raise ValueError("the group must be nonempty")
    check_within(group, game.n)
    if group >> entrant & 1:
        raise ValueError(f"player {entrant} already belongs to the group")
    total = group_value(game, group | (1 << entrant)) - group_value(game, group)
    reduced = restrict(game, group)
    require_exact(reduced.n, "the stand-alone part")
    independent = _player_value(reduced.table(), reduced.n, reduced.lower(1 << entrant).bit_length() - 1)
    merged = merge(game, group)
    complementarity = average_complementarity(merged, merged.proxy, merged.index_of(entrant))
    return GroupContribution(group, entrant, total, independent, complementarity)


@dataclass(frozen=True)
class ProfitabilityReport:
    group: int
    group_value: float
    additive_value: float
    surplus: float
    derks_tijs_sufficient: bool


def derks_tijs_condition(game: Game, group: int, eps: float = EPS_STRUCT) -> bool:
    """True when every positive-dividend coalition lies inside the group or meets it at most once."""
    dividends = dividend_table(game)
    masks = all_masks(game.n)
    positive = masks[dividends > eps]
    inside = (positive & ~group) == 0
    overlap = popcounts(game.n)[positive & group]
    return bool(np.all(inside | (overlap <= 1)))


def profitability(game: Game, group: int) -> ProfitabilityReport:
    gv = group_value(game, group)
    av = additive_group_value(game, group).value
    return ProfitabilityReport(group, gv, av, gv - av, derks_tijs_condition(game, group))


class SegalVerdict(enum.Enum):
    PROFITABLE = "profitable"
    UNPROFITABLE = "unprofitable"
    INDETERMINATE = "indeterminate"
    # every third difference vanishes, so both sufficient conditions hold
    ZERO = "indeterminate-zero"


def _classify(parts: list[np.ndarray], eps: float) -> SegalVerdict:
    values = np.concatenate(parts) if parts else np.zeros(0)
    nonpos = bool(np.all(values <= eps))
    nonneg = bool(np.all(values >= -eps))
    if nonpos and nonneg:
        return SegalVerdict.ZERO
    if nonpos:
        return SegalVerdict.PROFITABLE
    if nonneg:
        return SegalVerdict.UNPROFITABLE
    return SegalVerdict.INDETERMINATE


def _third_differences(game: Game, i: int, j: int, k: int) -> np.ndarray:
    """All ``Delta^3_ijk(S)`` for ``S`` avoiding the three players."""
    t = game.table()
    bi, bj, bk = 1 << i, 1 << j, 1 << k
    masks = all_masks(game.n)
    rest = masks[(masks & (bi | bj | bk)) == 0]

    def d2(x: np.ndarray) -> np.ndarray:
        return t[x | bj | bk] - t[x | bj] - t[x | bk] + t[x]

    return d2(rest | bi) - d2(rest)


def segal_pair_check(game: Game, i: int, j: int, eps: float = EPS_STRUCT) -> SegalVerdict:
    """Sign test for merging ``{i, j}``: third differences with every outsider ``k``."""
    _check_distinct(game, (i, j), 0)
    require_exact(game.n, "the Segal classification")
    parts = [_third_differences(game, k, i, j) for k in range(game.n) if k not in (i, j)]
    return _classify(parts, eps)


def segal_entrant_check(game: Game, group: int, j: int, eps: float = EPS_STRUCT) -> SegalVerdict:
    """Sign test for adding ``j`` to an already integrated ``group``."""
    check_within(group, game.n)
    if group == 0:
        raise ValueError("the group must be nonempty")
    _check_distinct(game, (j,), group)
    require_exact(game.n, "the Segal classification")
    parts = [
        _third_differences(game, k, i, j)
        for i in members(group)
        for k in range(game.n)
        if k != j and not group >> k & 1
    ]
    return _classify(parts, eps)
