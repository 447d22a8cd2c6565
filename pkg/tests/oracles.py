"""Slow, independent reference implementations used only by the tests.

Nothing here imports the engine's arithmetic: worths come in as plain
callables or dicts, and every quantity is computed from its definition.
"""

from __future__ import annotations

from fractions import Fraction
from itertools import combinations, permutations
from math import factorial


def subsets(players):
    players = list(players)
    for r in range(len(players) + 1):
        yield from (frozenset(c) for c in combinations(players, r))


def permutation_shapley(n, v):
    """Average marginal contribution over all n! arrival orders."""
    totals = [0.0] * n
    for order in permutations(range(n)):
        seen = frozenset()
        for p in order:
            totals[p] += v(seen | {p}) - v(seen)
            seen = seen | {p}
    return [t / factorial(n) for t in totals]


def merged_worth_fn(n, v, group):
    """Players of the merging game as frozensets of base players, proxy first."""
    group = frozenset(group)
    units = [group] + [frozenset({p}) for p in range(n) if p not in group]

    def w(coalition):
        out = frozenset()
        for u in coalition:
            out |= units[u]
        return v(out)

    return len(units), w


def group_value(n, v, group):
    """Proxy's Shapley value in the merging game, by permutations."""
    m, w = merged_worth_fn(n, v, group)
    return permutation_shapley(m, w)[0]


def mobius(n, v):
    """Dividends d(S) = sum over T in S of (-1)^(|S|-|T|) v(T)."""
    out = {}
    for s in subsets(range(n)):
        out[s] = sum((-1) ** (len(s) - len(t)) * v(t) for t in subsets(s))
    return out


def psi(n, v, i, j):
    """Shapley-weighted mean of the second differences of i and j."""
    rest = [p for p in range(n) if p not in (i, j)]
    total = 0.0
    for s in subsets(rest):
        w = factorial(len(s)) * factorial(n - len(s) - 1) / factorial(n)
        total += w * (v(s | {i, j}) - v(s | {j}) - v(s | {i}) + v(s))
    return total


def mask_fn(game):
    """Adapt an engine game to the frozenset interface above."""
    return lambda s: game.worth(sum(1 << p for p in s))


def frac(x: float, limit: int = 10_000) -> Fraction:
    return Fraction(x).limit_denominator(limit)
