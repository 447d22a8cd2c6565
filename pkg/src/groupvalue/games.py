"""TU games over bitmask coalitions and the algebra used on them.

Every game is immutable. ``worth(0)`` is always exactly ``0.0``: the base
class short-circuits the empty coalition and full tables have their first
slot forced to zero.
"""

from __future__ import annotations

import json
from typing import Callable, Mapping, Sequence

import numpy as np

from .coalition import (
    EXACT_LIMIT,
    MAX_PLAYERS,
    all_masks,
    check_within,
    full,
    members,
    spread,
    squeeze,
    subset_unions,
)

# Structural predicates compare worths with this absolute tolerance.
EPS_STRUCT = 1e-12
# Below this size a vectorised lookup materialises the full table on demand.
AUTO_TABLE = 16


class CapacityError(ValueError):
    """Raised when an exact computation would enumerate too many coalitions."""


def require_exact(n: int, what: str = "exact enumeration") -> None:
    if n > EXACT_LIMIT:
        raise CapacityError(
            f"{what} needs 2^{n} coalitions; the exact limit is n <= {EXACT_LIMIT}, "
            "use the Monte Carlo estimators instead"
        )


class Game:
    """A characteristic function on players ``0..n-1``.

    Subclasses implement :meth:`_worth`; those that can do better than one
    oracle call per coalition also override :meth:`_build_table`.
    """

    def __init__(self, n: int):
        if not 1 <= n <= MAX_PLAYERS:
            raise ValueError(f"player count must lie in 1..{MAX_PLAYERS}, got {n}")
        self.n = n
        self._table: np.ndarray | None = None
        self._dividends: np.ndarray | None = None

    @property
    def grand(self) -> int:
        return full(self.n)

    def worth(self, mask: int) -> float:
        if mask == 0:
            return 0.0
        return float(self._worth(mask))

    __call__ = worth

    def _worth(self, mask: int) -> float:
        raise NotImplementedError

    def table(self) -> np.ndarray:
        """Read-only array of all ``2**n`` worths indexed by mask."""
        if self._table is None:
            require_exact(self.n, "a full worth table")
            t = np.array(self._build_table(), dtype=float)
            t[0] = 0.0
            t.flags.writeable = False
            self._table = t
        return self._table

    def _build_table(self) -> np.ndarray:
        size = 1 << self.n
        return np.fromiter((self.worth(m) for m in range(size)), dtype=float, count=size)

    def worths(self, masks: np.ndarray) -> np.ndarray:
        """Vectorised :meth:`worth` over an array of masks."""
        masks = np.asarray(masks, dtype=np.uint64)
        if self._table is not None or self.n <= AUTO_TABLE:
            return self.table()[masks.astype(np.intp)]
        uniq, inverse = np.unique(masks, return_inverse=True)
        vals = np.array([self.worth(int(m)) for m in uniq], dtype=float)
        return vals[inverse].reshape(masks.shape)

    def __repr__(self) -> str:
        return f"{type(self).__name__}(n={self.n})"


class TableGame(Game):
    """Game given by a dense array of ``2**n`` worths."""

    def __init__(self, worths: Sequence[float] | np.ndarray, n: int | None = None):
        worths = np.array(worths, dtype=float)
        if n is None:
            n = int(worths.size).bit_length() - 1
        require_exact(n, "a table game")
        if worths.ndim != 1 or worths.size != 1 << n:
            raise ValueError(f"expected 2^{n} worths, got shape {worths.shape}")
        super().__init__(n)
        worths[0] = 0.0
        worths.flags.writeable = False
        self._table = worths

    def _worth(self, mask: int) -> float:
        return self._table[mask]

    @classmethod
    def from_function(cls, n: int, fn: Callable[[int], float]) -> "TableGame":
        return cls([0.0] + [fn(m) for m in range(1, 1 << n)], n)


class FunctionGame(Game):
    """Game backed by an arbitrary pure oracle ``mask -> worth``."""

    def __init__(self, n: int, fn: Callable[[int], float]):
        super().__init__(n)
        self._fn = fn

    def _worth(self, mask: int) -> float:
        return self._fn(mask)


class UnanimityCombination(Game):
    """Game written in the unanimity basis: ``v(S) = sum of d(T) over T within S``."""

    def __init__(self, n: int, dividends: Mapping[int, float]):
        super().__init__(n)
        clean = {}
        for mask, coeff in dividends.items():
            mask = int(mask)
            check_within(mask, n)
            if mask == 0:
                raise ValueError("the empty coalition carries no dividend")
            if coeff != 0:
                clean[mask] = clean.get(mask, 0.0) + float(coeff)
        self.dividends = clean

    @classmethod
    def unanimity(cls, n: int, carrier: int) -> "UnanimityCombination":
        return cls(n, {carrier: 1.0})

    def _worth(self, mask: int) -> float:
        return sum(d for t, d in self.dividends.items() if t & ~mask == 0)

    def _build_table(self) -> np.ndarray:
        dense = np.zeros(1 << self.n)
        for t, d in self.dividends.items():
            dense[t] += d
        return zeta(dense, self.n)


class MergedGame(Game):
    """The merging game in which the group ``merged`` acts as one proxy player.

    Merged-game players are ordered by their lowest base index, so retained
    players keep their relative order and the proxy sits where the smallest
    member of the group used to be.
    """

    def __init__(self, base: Game, merged: int):
        if merged == 0:
            raise ValueError("cannot merge the empty coalition")
        check_within(merged, base.n)
        super().__init__(base.n - merged.bit_count() + 1)
        self.base = base
        self.merged = merged
        lowest = (merged & -merged).bit_length() - 1
        units = [1 << i for i in range(base.n) if not merged >> i & 1 or i == lowest]
        self.proxy = units.index(1 << lowest)
        units[self.proxy] = merged
        self.units = tuple(units)

    def lift(self, mask: int) -> int:
        """Base coalition behind a merged-game coalition."""
        out = 0
        k = 0
        while mask:
            if mask & 1:
                out |= self.units[k]
            mask >>= 1
            k += 1
        return out

    def lower(self, base_mask: int) -> int:
        """Merged-game coalition for a base coalition holding all or none of the group."""
        inside = base_mask & self.merged
        if inside and inside != self.merged:
            raise ValueError("coalition splits the merged group")
        return sum(1 << k for k, u in enumerate(self.units) if base_mask & u)

    def index_of(self, player: int) -> int:
        """Merged-game index of a base player (members of the group map to the proxy)."""
        for k, u in enumerate(self.units):
            if u >> player & 1:
                return k
        raise ValueError(f"player {player} is not in the base game")

    def _worth(self, mask: int) -> float:
        return self.base.worth(self.lift(mask))

    def _build_table(self) -> np.ndarray:
        if self.base.n > EXACT_LIMIT:
            return super()._build_table()
        return self.base.table()[subset_unions(self.units)]


class RestrictedGame(Game):
    """The restriction of ``base`` to the players outside ``removed``.

    Kept players are re-indexed densely in increasing base order.
    """

    def __init__(self, base: Game, removed: int):
        check_within(removed, base.n)
        kept = base.grand & ~removed
        if kept == 0:
            raise ValueError("cannot remove every player")
        super().__init__(kept.bit_count())
        self.base = base
        self.removed = removed
        self.kept = kept

    def lift(self, mask: int) -> int:
        return spread(mask, self.kept)

    def lower(self, base_mask: int) -> int:
        if base_mask & self.removed:
            raise ValueError("coalition uses removed players")
        return squeeze(base_mask, self.kept)

    def _worth(self, mask: int) -> float:
        return self.base.worth(self.lift(mask))

    def _build_table(self) -> np.ndarray:
        if self.base.n > EXACT_LIMIT:
            return super()._build_table()
        return self.base.table()[subset_unions([1 << i for i in members(self.kept)])]


class LinearCombination(Game):
    def __init__(self, terms: Sequence[tuple[float, Game]]):
        terms = [(float(a), g) for a, g in terms]
        if not terms:
            raise ValueError("a linear combination needs at least one term")
        n = terms[0][1].n
        if any(g.n != n for _, g in terms):
            raise ValueError("all games in a linear combination must share the player count")
        super().__init__(n)
        self.terms = terms

    def _worth(self, mask: int) -> float:
        return sum(a * g.worth(mask) for a, g in self.terms)

    def _build_table(self) -> np.ndarray:
        return sum(a * g.table() for a, g in self.terms)


class AffineGame(Game):
    """``w(S) = scale * v(S) + sum of shift[i] over i in S``."""

    def __init__(self, game: Game, scale: float, shift: Sequence[float]):
        if not scale > 0:
            raise ValueError(f"strategic equivalence needs a positive scale, got {scale}")
        shift = np.array(shift, dtype=float)
        if shift.shape != (game.n,):
            raise ValueError(f"shift vector must have length {game.n}")
        super().__init__(game.n)
        self.game = game
        self.scale = float(scale)
        self.shift = shift

    def _worth(self, mask: int) -> float:
        return self.scale * self.game.worth(mask) + float(sum(self.shift[i] for i in members(mask)))

    def _build_table(self) -> np.ndarray:
        return self.scale * self.game.table() + additive_table(self.shift)


class RelabeledGame(Game):
    """Relabel players so that player ``i`` of ``game`` becomes ``perm[i]``."""

    def __init__(self, game: Game, perm: Sequence[int]):
        perm = [int(p) for p in perm]
        if sorted(perm) != list(range(game.n)):
            raise ValueError("perm must be a permutation of 0..n-1")
        super().__init__(game.n)
        self.game = game
        self.perm = tuple(perm)
        self._inverse = tuple(np.argsort(perm).tolist())

    def image(self, mask: int) -> int:
        return sum(1 << self.perm[i] for i in members(mask))

    def _worth(self, mask: int) -> float:
        return self.game.worth(sum(1 << self._inverse[i] for i in members(mask)))

    def _build_table(self) -> np.ndarray:
        return self.game.table()[subset_unions([1 << p for p in self._inverse])]


def merge(game: Game, group: int) -> MergedGame:
    return MergedGame(game, group)


def restrict(game: Game, removed: int) -> RestrictedGame:
    return RestrictedGame(game, removed)


def linear_combination(terms: Sequence[tuple[float, Game]]) -> LinearCombination:
    return LinearCombination(terms)


def affine_transform(game: Game, scale: float, shift: Sequence[float]) -> AffineGame:
    return AffineGame(game, scale, shift)


def relabel(game: Game, perm: Sequence[int]) -> RelabeledGame:
    return RelabeledGame(game, perm)


def unanimity(n: int, carrier: int) -> UnanimityCombination:
    return UnanimityCombination.unanimity(n, carrier)


def additive_table(values: Sequence[float]) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    n = values.size
    out = np.zeros(1 << n)
    for i, b in enumerate(values):
        out[1 << i: 1 << (i + 1)] = out[: 1 << i] + b
    return out


def additive_game(values: Sequence[float]) -> TableGame:
    return TableGame(additive_table(values))


def null_game(n: int) -> TableGame:
    return TableGame(np.zeros(1 << n), n)


# -- Moebius / zeta transforms ------------------------------------------------


def zeta(dense: np.ndarray, n: int) -> np.ndarray:
    """Subset-sum transform: ``out[S] = sum of dense[T] for T within S``."""
    out = np.array(dense, dtype=float)
    for i in range(n):
        view = out.reshape(-1, 2, 1 << i)
        view[:, 1, :] += view[:, 0, :]
    return out


def moebius(table: np.ndarray, n: int) -> np.ndarray:
    """Inverse of :func:`zeta`."""
    out = np.array(table, dtype=float)
    for i in range(n):
        view = out.reshape(-1, 2, 1 << i)
        view[:, 1, :] -= view[:, 0, :]
    return out


def dividend_table(game: Game) -> np.ndarray:
    """Dense Harsanyi dividends of every coalition, indexed by mask."""
    require_exact(game.n, "the Harsanyi transform")
    if game._dividends is None:
        if isinstance(game, UnanimityCombination):
            dense = np.zeros(1 << game.n)
            for t, d in game.dividends.items():
                dense[t] = d
        else:
            dense = moebius(game.table(), game.n)
        dense.flags.writeable = False
        game._dividends = dense
    return game._dividends


def harsanyi_dividends(game: Game, tol: float = 0.0) -> dict[int, float]:
    """Sparse Harsanyi dividends; entries with ``|d| <= tol`` are dropped."""
    dense = dividend_table(game)
    idx = np.nonzero(np.abs(dense) > tol)[0]
    return {int(m): float(dense[m]) for m in idx if m}


def synthesize(n: int, dividends: Mapping[int, float]) -> UnanimityCombination:
    return UnanimityCombination(n, dividends)


# -- structural predicates -----------------------------------------------------


def _marginals(game: Game, player: int) -> tuple[np.ndarray, np.ndarray]:
    require_exact(game.n, "an exhaustive predicate")
    t = game.table()
    masks = all_masks(game.n)
    without = masks[(masks >> player) & 1 == 0]
    return t[without | (1 << player)], t[without]


def is_dummy_player(game: Game, player: int, eps: float = EPS_STRUCT) -> bool:
    with_i, without_i = _marginals(game, player)
    return bool(np.all(np.abs(with_i - without_i - game.worth(1 << player)) <= eps))


def is_null_player(game: Game, player: int, eps: float = EPS_STRUCT) -> bool:
    with_i, without_i = _marginals(game, player)
    return bool(np.all(np.abs(with_i - without_i) <= eps))


def null_players(game: Game, eps: float = EPS_STRUCT) -> list[int]:
    return [i for i in range(game.n) if is_null_player(game, i, eps)]


def is_monotonic(game: Game, eps: float = EPS_STRUCT) -> bool:
    # adding one player at a time covers every pair S within T
    for i in range(game.n):
        with_i, without_i = _marginals(game, i)
        if np.any(with_i < without_i - eps):
            return False
    return True


def is_superadditive(game: Game, eps: float = EPS_STRUCT) -> bool:
    """Exhaustive check of ``v(S | T) >= v(S) + v(T)`` over disjoint nonempty pairs."""
    require_exact(game.n, "an exhaustive predicate")
    t = game.table()
    masks = all_masks(game.n)
    for s in range(1, 1 << game.n):
        rest = masks[(masks & s) == 0]
        rest = rest[rest > s]
        if rest.size and np.any(t[rest | s] < t[s] + t[rest] - eps):
            return False
    return True


# -- JSON files ----------------------------------------------------------------


def game_from_json(obj: Mapping | str) -> Game:
    """Build a game from ``{"n", "worths"}`` or ``{"n", "dividends"}`` data."""
    if isinstance(obj, str):
        obj = json.loads(obj)
    if "n" not in obj:
        raise ValueError("game file needs an integer 'n'")
    n = int(obj["n"])
    if "dividends" in obj:
        return UnanimityCombination(n, {int(m): float(c) for m, c in obj["dividends"]})
    if "worths" not in obj:
        raise ValueError("game file needs 'worths' or 'dividends'")
    require_exact(n, "an explicit game file")
    table = np.zeros(1 << n)
    for m, value in obj["worths"]:
        m = int(m)
        check_within(m, n)
        table[m] = float(value)
    return TableGame(table, n)


def game_to_json(game: Game) -> dict:
    if isinstance(game, UnanimityCombination):
        return {"n": game.n, "dividends": [[m, d] for m, d in sorted(game.dividends.items())]}
    t = game.table()
    return {"n": game.n, "worths": [[m, float(t[m])] for m in np.nonzero(t)[0].tolist()]}
