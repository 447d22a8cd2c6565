import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import random_table_game
from groupvalue.coalition import (
    check_within,
    from_members,
    full,
    members,
    popcounts,
    spread,
    squeeze,
    submasks,
)
from groupvalue.games import (
    CapacityError,
    FunctionGame,
    TableGame,
    UnanimityCombination,
    additive_game,
    affine_transform,
    game_from_json,
    game_to_json,
    harsanyi_dividends,
    is_dummy_player,
    is_monotonic,
    is_null_player,
    is_superadditive,
    linear_combination,
    merge,
    null_game,
    restrict,
    synthesize,
    unanimity,
)
from oracles import mask_fn, mobius


# -- coalitions ------------------------------------------------------------------


def test_mask_basics():
    assert full(4) == 0b1111
    assert members(0b10110) == [1, 2, 4]
    assert from_members([4, 1, 2]) == 0b10110
    with pytest.raises(ValueError):
        check_within(0b10000, 4)
    with pytest.raises(ValueError):
        from_members([64])


def test_submasks_enumerates_every_subset():
    subs = sorted(submasks(0b1011))
    assert subs == [0, 1, 2, 3, 8, 9, 10, 11]


@given(st.integers(0, 2**12 - 1), st.integers(0, 2**12 - 1))
def test_squeeze_spread_round_trip(mask, kept):
    sub = mask & kept
    assert spread(squeeze(sub, kept), kept) == sub
    assert squeeze(mask, kept).bit_count() == sub.bit_count()


def test_popcounts_match_bit_count():
    assert popcounts(10).tolist() == [m.bit_count() for m in range(1 << 10)]


# -- game variants ------------------------------------------------------------------


def test_empty_coalition_is_zero_for_every_variant(rng):
    t = rng.normal(size=8)
    games = [
        TableGame(t, 3),
        FunctionGame(3, lambda m: 5.0),
        UnanimityCombination(3, {1: 2.0, 6: -1.0}),
        merge(TableGame(t, 3), 0b011),
        restrict(TableGame(t, 3), 0b100),
        linear_combination([(2.0, TableGame(t, 3)), (1.0, FunctionGame(3, lambda m: 1.0))]),
        affine_transform(TableGame(t, 3), 2.0, [1.0, 1.0, 1.0]),
    ]
    for g in games:
        assert g.worth(0) == 0.0
        assert g.table()[0] == 0.0


def test_table_is_read_only():
    g = TableGame([0.0, 1.0, 2.0, 4.0])
    with pytest.raises(ValueError):
        g.table()[1] = 3.0


def test_table_game_too_large():
    with pytest.raises(CapacityError):
        TableGame(np.zeros(4), 26)


def test_merge_readout_three_players(rng):
    # C = {1,2} in 1-based terms
    v = random_table_game(rng, 3)
    m = merge(v, 0b011)
    assert m.n == 2 and m.proxy == 0
    assert m.worth(0b01) == v.worth(0b011)
    assert m.worth(0b11) == v.worth(0b111)
    assert m.worth(0b10) == v.worth(0b100)


def test_merge_singleton_is_the_original_game(rng):
    v = random_table_game(rng, 5)
    for i in range(5):
        np.testing.assert_array_equal(merge(v, 1 << i).table(), v.table())


def test_merge_pure_bargaining_stays_pure_bargaining():
    n = 6
    v = unanimity(n, full(n))
    for c in range(1, 1 << n):
        m = merge(v, c)
        assert harsanyi_dividends(m, tol=1e-12) == pytest.approx({full(m.n): 1.0})


def test_merge_proxy_takes_lowest_member_index(rng):
    v = random_table_game(rng, 6)
    m = merge(v, 0b101100)
    assert m.units == (0b1, 0b10, 0b101100, 0b10000)
    assert m.proxy == 2
    assert m.index_of(5) == 2 and m.index_of(4) == 3
    assert m.lower(0b101101) == 0b0101
    with pytest.raises(ValueError):
        m.lower(0b100)


def test_merge_rejects_empty_and_foreign_groups(rng):
    v = random_table_game(rng, 3)
    with pytest.raises(ValueError):
        merge(v, 0)
    with pytest.raises(ValueError):
        merge(v, 0b1000)


@pytest.mark.parametrize("n", [3, 6, 10])
def test_merged_worth_is_base_worth_of_expansion(rng, n):
    v = random_table_game(rng, n)
    for _ in range(5):
        c = int(rng.integers(1, 1 << n))
        m = merge(v, c)
        for s in range(1 << m.n):
            expanded = 0
            for k in range(m.n):
                if s >> k & 1:
                    expanded |= m.units[k]
            assert m.table()[s] == v.worth(expanded)
            assert m.worth(s) == v.worth(expanded)


def test_restrict_examples():
    u12 = unanimity(3, 0b011)
    assert harsanyi_dividends(restrict(u12, 0b100)) == {0b11: 1.0}
    assert not np.any(restrict(u12, 0b001).table())


def test_restrict_by_nothing_is_identity(rng):
    v = random_table_game(rng, 5)
    np.testing.assert_array_equal(restrict(v, 0).table(), v.table())


def test_restrict_everything_fails(rng):
    with pytest.raises(ValueError):
        restrict(random_table_game(rng, 3), 0b111)


@pytest.mark.parametrize("seed", range(5))
def test_restrict_and_merge_commute(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(3, 11))
    v = random_table_game(rng, n)
    c = int(rng.integers(1, 1 << n))
    outside = [p for p in range(n) if not c >> p & 1]
    if not outside:
        return
    j = int(rng.choice(outside))
    merged = merge(v, c)
    a = restrict(merged, 1 << merged.index_of(j))
    r = restrict(v, 1 << j)
    b = merge(r, r.lower(c))
    np.testing.assert_array_equal(a.table(), b.table())


def test_linear_combination_examples(rng):
    v, w = random_table_game(rng, 4), random_table_game(rng, 4)
    np.testing.assert_array_equal(linear_combination([(1.0, v), (0.0, w)]).table(), v.table())
    g = linear_combination([(2.0, unanimity(2, 0b01)), (3.0, unanimity(2, 0b11))])
    assert g.worth(0b01) == 2.0 and g.worth(0b11) == 5.0 and g.worth(0b10) == 0.0
    a, b = rng.normal(size=2)
    combo = linear_combination([(a, v), (b, w)])
    np.testing.assert_allclose(combo.table(), a * v.table() + b * w.table(), atol=1e-12)
    for s in range(16):
        assert combo.worth(s) == pytest.approx(a * v.worth(s) + b * w.worth(s), abs=1e-12)


def test_linear_combination_errors(rng):
    with pytest.raises(ValueError):
        linear_combination([])
    with pytest.raises(ValueError):
        linear_combination([(1.0, random_table_game(rng, 3)), (1.0, random_table_game(rng, 4))])


def test_affine_transform_examples(rng):
    v = random_table_game(rng, 4)
    np.testing.assert_array_equal(affine_transform(v, 1.0, [0.0] * 4).table(), v.table())
    assert affine_transform(null_game(2), 2.0, [1.0, 1.0]).worth(0b11) == 2.0
    with pytest.raises(ValueError):
        affine_transform(v, 0.0, [0.0] * 4)
    with pytest.raises(ValueError):
        affine_transform(v, 1.0, [0.0] * 3)


def test_dividend_examples(rng):
    assert harsanyi_dividends(unanimity(4, 0b0110)) == {0b0110: 1.0}
    b = [1.5, -2.0, 0.25]
    assert harsanyi_dividends(additive_game(b), tol=1e-12) == pytest.approx({1: 1.5, 2: -2.0, 4: 0.25})
    v = random_table_game(rng, 2)
    d = harsanyi_dividends(v)
    assert d[0b11] == pytest.approx(v.worth(3) - v.worth(1) - v.worth(2), abs=1e-12)


def test_dividends_match_inclusion_exclusion(rng):
    v = random_table_game(rng, 5)
    brute = mobius(5, mask_fn(v))
    d = harsanyi_dividends(v)
    for s, value in brute.items():
        assert d.get(sum(1 << p for p in s), 0.0) == pytest.approx(value, abs=1e-9)


@pytest.mark.parametrize("n", [1, 4, 8, 12])
def test_moebius_round_trip(rng, n):
    v = random_table_game(rng, n)
    back = synthesize(n, harsanyi_dividends(v))
    np.testing.assert_allclose(back.table(), v.table(), atol=1e-9)


def test_null_players_of_unanimity_games():
    u = unanimity(5, 0b01101)
    for i in range(5):
        assert is_null_player(u, i) == (i not in (0, 2, 3))


def test_additive_game_players_are_dummies():
    g = additive_game([1.0, -2.0, 3.0])
    assert all(is_dummy_player(g, i) for i in range(3))
    assert not any(is_null_player(g, i) for i in range(3))


def test_superadditivity_of_path_connectivity():
    from groupvalue.applied import Network, connectivity_game

    g = connectivity_game(Network(3, [(0, 1), (1, 2)]))
    # brute force over disjoint pairs
    brute = all(
        g.worth(a | b) >= g.worth(a) + g.worth(b) - 1e-12
        for a in range(8) for b in range(8) if not a & b
    )
    assert is_superadditive(g) == brute
    assert g.worth(0b101) + g.worth(0b010) <= g.worth(0b111)
    star4 = connectivity_game(Network(4, [(0, 1), (0, 2), (0, 3), (1, 2)]))
    brute = all(
        star4.worth(a | b) >= star4.worth(a) + star4.worth(b) - 1e-12
        for a in range(16) for b in range(16) if not a & b
    )
    assert is_superadditive(star4) == brute


def test_monotonicity_predicate():
    assert is_monotonic(unanimity(3, 0b011))
    assert not is_monotonic(linear_combination([(-1.0, unanimity(3, 0b011))]))


def test_json_round_trip(rng):
    v = random_table_game(rng, 4)
    back = game_from_json(json.dumps(game_to_json(v)))
    np.testing.assert_array_equal(back.table(), v.table())
    u = UnanimityCombination(3, {0b011: 2.0, 0b100: -1.0})
    again = game_from_json(game_to_json(u))
    assert isinstance(again, UnanimityCombination) and again.dividends == u.dividends


def test_json_absent_masks_default_to_zero():
    g = game_from_json({"n": 3, "worths": [[7, 1.0]]})
    assert g.table().tolist() == [0, 0, 0, 0, 0, 0, 0, 1.0]


@pytest.mark.parametrize("bad", [{"worths": []}, {"n": 2}, {"n": 2, "worths": [[4, 1.0]]}])
def test_json_rejects_malformed(bad):
    with pytest.raises(ValueError):
        game_from_json(bad)
