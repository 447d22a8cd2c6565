"""Executable group-value properties P1-P13 and the functionals used to separate them.

A property check is a sampled search for a counterexample. ``pass`` means
no violation was found in the suite, ``fail`` always comes with a witness
that reproduces the violation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable, Iterator, Optional

import numpy as np

from .coalition import all_masks, full, members, popcounts
from .games import (
    EPS_STRUCT,
    AffineGame,
    Game,
    LinearCombination,
    TableGame,
    UnanimityCombination,
    dividend_table,
    relabel,
    restrict,
    unanimity,
    zeta,
)
from .shapley import additive_group_value, group_value

PROPERTIES = tuple(f"P{k}" for k in range(1, 14))
PROPERTY_NAMES = {
    "P1": "G-coherence",
    "P2": "G-dummy player",
    "P3": "G-null player",
    "P4": "G-anonymity",
    "P5": "G-linearity",
    "P6": "G-coalitional balanced contributions",
    "P7": "G-symmetry over pure bargaining games",
    "P8": "G-coalitional monotonicity",
    "P9": "G-strong monotonicity",
    "P10": "G-positivity",
    "P11": "G-relative invariance under strategic equivalence",
    "P12": "G-coalitional strategic equivalence",
    "P13": "G-fair ranking",
}


@dataclass(frozen=True)
class GroupValueFunctional:
    """A rule assigning a number to every (game, group) pair, zero on the empty group."""

    name: str
    evaluator: Callable[[Game, int], float]

    def __call__(self, game: Game, group: int) -> float:
        if group == 0:
            return 0.0
        return float(self.evaluator(game, group))


shapley_functional = GroupValueFunctional("shapley", group_value)
additive_functional = GroupValueFunctional("additive", lambda g, c: additive_group_value(g, c).value)


def _basis_functional(name: str, on_unanimity: Callable[[int, int, np.ndarray, np.ndarray], np.ndarray]
                      ) -> GroupValueFunctional:
    """Functional given on unanimity games and extended linearly through the dividends.

    ``on_unanimity(n, c, s, s_in)`` returns the value of a group of size ``c``
    in ``u_S`` for arrays of carrier sizes ``s`` and overlaps ``s_in = |S & C|``;
    carriers equal to the grand coalition are handled separately.
    """

    def evaluate(game: Game, group: int) -> float:
        n = game.n
        d = dividend_table(game)
        carriers = all_masks(n)[1:]
        s = popcounts(n)[carriers]
        s_in = popcounts(n)[carriers & group]
        c = group.bit_count()
        vals = on_unanimity(n, c, s, s_in).astype(float)
        vals[carriers == full(n)] = 1.0 / (n - c + 1)
        return float(np.dot(d[1:], vals))

    return GroupValueFunctional(name, evaluate)


def counterexample_alpha(alpha: float) -> GroupValueFunctional:
    """Gives outsiders of ``S`` a positive geometric bonus, so null players are not ignored."""
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie strictly between 0 and 1")

    def on_unanimity(n, c, s, s_in):
        powers = alpha ** (n - np.arange(n + 1, dtype=float))
        # tail[m] = sum of alpha^(n-k) for k < m
        tail = np.concatenate([[0.0], np.cumsum(powers)])
        disjoint = np.full(s.shape, tail[c])
        meeting = 1.0 / (s - s_in + 1) + tail[n - s]
        return np.where(s_in == 0, disjoint, meeting)

    return _basis_functional(f"alpha={alpha:g}", on_unanimity)


def counterexample_product() -> GroupValueFunctional:
    """Scores a partial overlap with ``S`` by ``|S & C| * |S - C|``."""

    def on_unanimity(n, c, s, s_in):
        return np.where(s_in == 0, 0.0, np.where(s_in == s, 1.0, s_in * (s - s_in)))

    return _basis_functional("product", on_unanimity)


def _is_grand_unanimity(game: Game, eps: float = EPS_STRUCT) -> bool:
    d = dividend_table(game)
    rest = np.abs(d[:-1]).max() if d.size > 1 else 0.0
    return abs(d[-1] - 1.0) <= eps and rest <= eps


def _has_null_player(game: Game, eps: float = EPS_STRUCT) -> bool:
    t = game.table()
    masks = all_masks(game.n)
    for i in range(game.n):
        without = masks[(masks >> i) & 1 == 0]
        if np.all(np.abs(t[without | (1 << i)] - t[without]) <= eps):
            return True
    return False


def counterexample_shift(k: float) -> GroupValueFunctional:
    """Shapley group value, shifted by ``k`` unless the game has a null player or is ``u_N``."""
    if k == 0:
        raise ValueError("the shift must be nonzero")

    def evaluate(game: Game, group: int) -> float:
        base = group_value(game, group)
        if _has_null_player(game) or _is_grand_unanimity(game):
            return base
        return base + k

    return GroupValueFunctional(f"shift={k:g}", evaluate)


def functional_by_name(name: str, alpha: float = 0.5, shift: float = 1.0) -> GroupValueFunctional:
    if name == "shapley":
        return shapley_functional
    if name == "additive":
        return additive_functional
    if name == "alpha":
        return counterexample_alpha(alpha)
    if name == "shift":
        return counterexample_shift(shift)
    if name == "product":
        return counterexample_product()
    raise ValueError(f"unknown functional {name!r}")


# -- suites -------------------------------------------------------------------


@dataclass(frozen=True)
class SuiteSpec:
    n_range: tuple[int, int] = (3, 8)
    games_per_n: int = 100
    seed: int = 0
    tolerance: float = 1e-9
    # sampled (coalition, player) instances per random game
    instances: int = 6
    # unanimity games u_S are added, with every instance enumerated, up to this n
    basis_up_to: int = 4
    # strict comparisons (P13) skip differences within this margin
    margin: float = 1e-9

    @classmethod
    def from_json(cls, obj: dict | str) -> "SuiteSpec":
        if isinstance(obj, str):
            obj = json.loads(obj)
        known = {k: v for k, v in obj.items() if k in cls.__dataclass_fields__}
        if "n_range" in known:
            known["n_range"] = tuple(known["n_range"])
        return cls(**known)


_PLAYER_KEYS = {"group", "player", "i", "j", "carrier", "better", "worse", "changed_at", "raised_at"}


def describe_game(game: Game) -> str:
    if isinstance(game, UnanimityCombination) and len(game.dividends) == 1:
        (carrier, weight), = game.dividends.items()
        if weight == 1.0:
            return f"u_{{{','.join(str(p + 1) for p in members(carrier))}}} on N={{1..{game.n}}}"
    return f"{type(game).__name__} on {game.n} players"


@dataclass
class Witness:
    """Game and instance where a property fails; player indices are 0-based."""

    game: Game
    detail: dict

    def describe(self) -> str:
        """Readable form with players numbered from 1."""
        parts = []
        for key, value in self.detail.items():
            if key in _PLAYER_KEYS:
                if isinstance(value, list):
                    value = "{" + ",".join(str(p + 1) for p in value) + "}"
                else:
                    value = value + 1
            parts.append(f"{key}={value}")
        return describe_game(self.game) + ": " + ", ".join(parts)


@dataclass
class PropertyReport:
    prop: str
    functional: str
    verdict: str
    tolerance: float
    checks: int = 0
    skipped: int = 0
    witness: Optional[Witness] = None

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    def line(self) -> str:
        head = f"{self.prop:<4} {PROPERTY_NAMES[self.prop]:<50} {self.verdict.upper():<4} checks={self.checks}"
        if self.skipped:
            head += f" skipped={self.skipped}"
        if self.witness is not None:
            head += "  witness: " + self.witness.describe()
        return head


class _Violation(Exception):
    def __init__(self, game: Game, **detail):
        super().__init__("violation")
        self.witness = Witness(game, detail)


@dataclass
class _Context:
    fn: GroupValueFunctional
    spec: SuiteSpec
    rng: np.random.Generator
    checks: int = 0
    skipped: int = 0

    def equal(self, game: Game, got: float, want: float, **detail) -> None:
        self.checks += 1
        if not abs(got - want) <= self.spec.tolerance:
            raise _Violation(game, got=got, expected=want, **detail)

    def at_most(self, game: Game, small: float, large: float, **detail) -> None:
        self.checks += 1
        if not small <= large + self.spec.tolerance:
            raise _Violation(game, lhs=small, rhs=large, **detail)


def random_game(rng: np.random.Generator, n: int) -> TableGame:
    """Game with independent standard normal dividends on every nonempty coalition."""
    d = rng.normal(size=1 << n)
    d[0] = 0.0
    return TableGame(zeta(d, n), n)


def random_monotone_game(rng: np.random.Generator, n: int) -> TableGame:
    """Running maximum of random nonnegative worths over subsets."""
    t = rng.exponential(size=1 << n) * (popcounts(n) + 0.0)
    t[0] = 0.0
    for i in range(n):
        view = t.reshape(-1, 2, 1 << i)
        view[:, 1, :] = np.maximum(view[:, 1, :], view[:, 0, :])
    return TableGame(t, n)


def _random_subset(rng: np.random.Generator, universe: int) -> int:
    return sum(1 << i for i in members(universe) if rng.random() < 0.5)


def _basis(n: int) -> Iterator[Game]:
    for s in range(1, 1 << n):
        yield unanimity(n, s)


# Each check receives the context, a game and whether to enumerate every instance.


def _groups(ctx: _Context, n: int, exhaustive: bool, universe: Optional[int] = None) -> list[int]:
    universe = full(n) if universe is None else universe
    if exhaustive:
        return [c for c in range(1 << n) if c & ~universe == 0]
    return [_random_subset(ctx.rng, universe) for _ in range(ctx.spec.instances)]


def _p1(ctx: _Context, game: Game, exhaustive: bool) -> None:
    total = sum(ctx.fn(game, 1 << i) for i in range(game.n))
    ctx.equal(game, total, ctx.fn(game, game.grand))


def _with_dummy(rng: np.random.Generator, game: Game, null: bool) -> tuple[Game, int]:
    """Copy of ``game`` in which a random player only contributes a fixed amount."""
    n = game.n
    i = int(rng.integers(n))
    d = np.array(dividend_table(game))
    d[all_masks(n) >> i & 1 == 1] = 0.0
    d[1 << i] = 0.0 if null else rng.normal()
    return TableGame(zeta(d, n), n), i


def _dummy_check(ctx: _Context, game: Game, player: int, exhaustive: bool, null: bool) -> None:
    bonus = 0.0 if null else game.worth(1 << player)
    for c in _groups(ctx, game.n, exhaustive, game.grand & ~(1 << player)):
        ctx.equal(game, ctx.fn(game, c | (1 << player)), ctx.fn(game, c) + bonus, group=members(c), player=player)


def _p2(ctx: _Context, game: Game, exhaustive: bool) -> None:
    if exhaustive:
        for i in range(game.n):
            if _is_dummy(game, i):
                _dummy_check(ctx, game, i, True, null=False)
        return
    g, i = _with_dummy(ctx.rng, game, null=False)
    _dummy_check(ctx, g, i, False, null=False)


def _p3(ctx: _Context, game: Game, exhaustive: bool) -> None:
    if exhaustive:
        for i in range(game.n):
            if _is_dummy(game, i) and abs(game.worth(1 << i)) <= EPS_STRUCT:
                _dummy_check(ctx, game, i, True, null=True)
        return
    g, i = _with_dummy(ctx.rng, game, null=True)
    _dummy_check(ctx, g, i, False, null=True)


def _is_dummy(game: Game, i: int) -> bool:
    t = game.table()
    masks = all_masks(game.n)
    without = masks[(masks >> i) & 1 == 0]
    return bool(np.all(np.abs(t[without | (1 << i)] - t[without] - t[1 << i]) <= EPS_STRUCT))


def _p4(ctx: _Context, game: Game, exhaustive: bool) -> None:
    perm = ctx.rng.permutation(game.n)
    moved = relabel(game, perm)
    for c in _groups(ctx, game.n, exhaustive):
        ctx.equal(game, ctx.fn(moved, moved.image(c)), ctx.fn(game, c), group=members(c), perm=perm.tolist())


def _p5(ctx: _Context, game: Game, exhaustive: bool) -> None:
    n = game.n
    if exhaustive:
        other = unanimity(n, int(ctx.rng.integers(1, 1 << n)))
    else:
        other = random_game(ctx.rng, n)
    a1, a2 = ctx.rng.normal(size=2)
    mix = LinearCombination([(a1, game), (a2, other)])
    for c in _groups(ctx, n, exhaustive):
        want = a1 * ctx.fn(game, c) + a2 * ctx.fn(other, c)
        ctx.equal(mix, ctx.fn(mix, c), want, group=members(c), coefficients=(float(a1), float(a2)),
                  parts=(repr(game), repr(other)))


def cbc_gap(fn: GroupValueFunctional, game: Game, group: int, i: int, j: int) -> tuple[float, float]:
    """Both sides of the coalitional balanced-contributions identity for ``(C, i, j)``."""
    bi, bj = 1 << i, 1 << j
    without_j = restrict(game, bj)
    without_i = restrict(game, bi)
    lhs = (fn(game, group | bi) - fn(game, group)) - (
        fn(without_j, without_j.lower(group | bi)) - fn(without_j, without_j.lower(group)))
    rhs = (fn(game, group | bj) - fn(game, group)) - (
        fn(without_i, without_i.lower(group | bj)) - fn(without_i, without_i.lower(group)))
    return lhs, rhs


def _p6(ctx: _Context, game: Game, exhaustive: bool) -> None:
    n = game.n
    if exhaustive:
        # nonempty groups first; the empty group is the degenerate case
        instances = [
            (c, i, j)
            for c in [*range(1, 1 << n), 0]
            for i, j in combinations(range(n), 2)
            if not c & ((1 << i) | (1 << j))
        ]
    else:
        instances = []
        for _ in range(ctx.spec.instances):
            i, j = (int(x) for x in ctx.rng.choice(n, size=2, replace=False))
            instances.append((_random_subset(ctx.rng, full(n) & ~((1 << i) | (1 << j))), i, j))
    for c, i, j in instances:
        lhs, rhs = cbc_gap(ctx.fn, game, c, i, j)
        ctx.equal(game, lhs, rhs, group=members(c), i=i, j=j)


def _p7(ctx: _Context, game: Game, exhaustive: bool) -> None:
    n = game.n
    grand = unanimity(n, full(n))
    for c in range(1, 1 << n) if exhaustive else _groups(ctx, n, False):
        if c:
            ctx.equal(grand, ctx.fn(grand, c), 1.0 / (n - c.bit_count() + 1), group=members(c))


def _bump(game: Game, target: int, delta: float) -> TableGame:
    t = np.array(game.table())
    t[target] += delta
    return TableGame(t, game.n)


def _p8(ctx: _Context, game: Game, exhaustive: bool) -> None:
    n = game.n
    targets = range(1, 1 << n) if exhaustive else [int(ctx.rng.integers(1, 1 << n))]
    for target in targets:
        raised = _bump(game, target, float(ctx.rng.exponential()) + 1e-3)
        groups = _groups(ctx, n, exhaustive, target)
        for c in groups:
            ctx.at_most(game, ctx.fn(game, c), ctx.fn(raised, c), group=members(c), raised_at=members(target))


def _p9(ctx: _Context, game: Game, exhaustive: bool) -> None:
    n = game.n
    masks = all_masks(n)
    for c in _groups(ctx, n, exhaustive):
        if c == 0:
            continue
        d = ctx.rng.normal(size=1 << n)
        d[0] = 0.0
        outside = masks[(masks & c) == 0]
        d[outside | c] = d[outside] + ctx.rng.exponential(size=outside.size)
        better = TableGame(np.asarray(game.table()) + d, n)
        ctx.at_most(game, ctx.fn(game, c), ctx.fn(better, c), group=members(c))


def _p10(ctx: _Context, game: Game, exhaustive: bool) -> None:
    n = game.n
    mono = game if exhaustive else random_monotone_game(ctx.rng, n)
    if exhaustive and np.any(np.asarray(dividend_table(game)) < 0):
        return
    for c in _groups(ctx, n, exhaustive):
        ctx.at_most(mono, 0.0, ctx.fn(mono, c), group=members(c))


def _p11(ctx: _Context, game: Game, exhaustive: bool) -> None:
    n = game.n
    scale = float(ctx.rng.uniform(0.1, 3.0))
    shift = ctx.rng.normal(size=n)
    moved = AffineGame(game, scale, shift)
    for c in _groups(ctx, n, exhaustive):
        want = scale * ctx.fn(game, c) + float(sum(shift[i] for i in members(c)))
        ctx.equal(moved, ctx.fn(moved, c), want, group=members(c), scale=scale, shift=shift.tolist())


def _p12(ctx: _Context, game: Game, exhaustive: bool) -> None:
    n = game.n
    for c in _groups(ctx, n, exhaustive):
        rest = full(n) & ~c
        if rest == 0:
            continue
        target = 0
        while target == 0:
            target = _random_subset(ctx.rng, rest)
        lam = float(ctx.rng.normal())
        moved = LinearCombination([(1.0, game), (lam, unanimity(n, target))])
        ctx.equal(game, ctx.fn(moved, c), ctx.fn(game, c), group=members(c), carrier=members(target), weight=lam)


def _p13(ctx: _Context, game: Game, exhaustive: bool) -> None:
    n = game.n
    targets = range(1, 1 << n) if exhaustive else [int(ctx.rng.integers(1, 1 << n))]
    margin = ctx.spec.margin
    for target in targets:
        other = _bump(game, target, float(ctx.rng.normal()))
        inside = [c for c in range(1, 1 << n) if c & ~target == 0]
        pairs = [(a, b) for a in inside for b in inside if a != b and a.bit_count() == b.bit_count()]
        if not exhaustive and pairs:
            picks = ctx.rng.choice(len(pairs), size=min(len(pairs), ctx.spec.instances), replace=False)
            pairs = [pairs[k] for k in picks]
        for a, b in pairs:
            before = ctx.fn(game, a) - ctx.fn(game, b)
            if before <= margin:
                ctx.skipped += 1
                continue
            after = ctx.fn(other, a) - ctx.fn(other, b)
            ctx.checks += 1
            if not after > 0:
                raise _Violation(game, better=members(a), worse=members(b), changed_at=members(target),
                                 gap_before=before, gap_after=after)


_CHECKS: dict[str, Callable[[_Context, Game, bool], None]] = {
    "P1": _p1, "P2": _p2, "P3": _p3, "P4": _p4, "P5": _p5, "P6": _p6, "P7": _p7,
    "P8": _p8, "P9": _p9, "P10": _p10, "P11": _p11, "P12": _p12, "P13": _p13,
}


def _suite_seed(spec: SuiteSpec, prop: str) -> np.random.Generator:
    return np.random.default_rng([spec.seed, PROPERTIES.index(prop)])


def check_property(fn: GroupValueFunctional, prop: str, spec: SuiteSpec = SuiteSpec()) -> PropertyReport:
    """Search the suite for a violation of ``prop`` by ``fn``."""
    if prop not in _CHECKS:
        raise ValueError(f"unknown property {prop!r}; expected one of {', '.join(PROPERTIES)}")
    check = _CHECKS[prop]
    ctx = _Context(fn, spec, _suite_seed(spec, prop))
    lo, hi = spec.n_range
    try:
        for n in range(lo, hi + 1):
            if n <= spec.basis_up_to:
                for g in _basis(n):
                    check(ctx, g, True)
            if prop == "P7":
                check(ctx, unanimity(n, full(n)), n <= spec.basis_up_to)
                continue
            for _ in range(spec.games_per_n):
                check(ctx, random_game(ctx.rng, n), False)
    except _Violation as v:
        return PropertyReport(prop, fn.name, "fail", spec.tolerance, ctx.checks, ctx.skipped, v.witness)
    return PropertyReport(prop, fn.name, "pass", spec.tolerance, ctx.checks, ctx.skipped)


def check_all(fn: GroupValueFunctional, spec: SuiteSpec = SuiteSpec(),
              props: tuple[str, ...] = PROPERTIES) -> list[PropertyReport]:
    return [check_property(fn, p, spec) for p in props]


@dataclass
class CharacterizationReport:
    functional: str
    reports: list[PropertyReport] = field(default_factory=list)
    # None when some axiom failed, so the uniqueness conclusion does not apply
    agrees: Optional[bool] = None
    max_deviation: Optional[float] = None

    @property
    def axioms_hold(self) -> bool:
        return all(r.passed for r in self.reports)


def characterization_smoke(fn: GroupValueFunctional, max_n: int = 6, seed: int = 0,
                           tolerance: float = 1e-9) -> CharacterizationReport:
    """Check null player, linearity, balanced contributions and pure bargaining on the basis.

    When all four hold, compare ``fn`` with the Shapley group value on every
    unanimity game up to ``max_n`` players.
    """
    spec = SuiteSpec(n_range=(1, max_n), games_per_n=0, seed=seed, tolerance=tolerance,
                     basis_up_to=max_n)
    report = CharacterizationReport(fn.name, check_all(fn, spec, ("P3", "P5", "P6", "P7")))
    if not report.axioms_hold:
        return report
    worst = 0.0
    for n in range(1, max_n + 1):
        for g in _basis(n):
            for c in range(1, 1 << n):
                worst = max(worst, abs(fn(g, c) - group_value(g, c)))
    report.max_deviation = worst
    report.agrees = worst <= tolerance
    return report
