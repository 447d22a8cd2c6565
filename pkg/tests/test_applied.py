import numpy as np
import pytest

from groupvalue.applied import (
    InfluenceModel,
    LinearThresholdGame,
    Network,
    SurveyData,
    cascade,
    connectivity_game,
    linear_threshold_game,
    reach_noise_game,
    star_network,
    wconn2_game,
    wconn_game,
)
from groupvalue.games import FunctionGame, is_monotonic


def test_network_validation():
    with pytest.raises(ValueError):
        Network(3, [(1, 1)])
    with pytest.raises(ValueError):
        Network(3, {(0, 1): 0.0})
    with pytest.raises(ValueError):
        Network(3, {(0, 1): float("inf")})
    with pytest.raises(ValueError):
        Network(3, [(0, 3)])
    with pytest.raises(ValueError):
        Network(2, [(0, 1)], node_weights=[1.0, -1.0])


def test_path_connectivity():
    g = connectivity_game(Network(3, [(0, 1), (1, 2)]))
    assert g.worth(0b101) == 0 and g.worth(0b011) == 1 and g.worth(0b111) == 1
    assert all(g.worth(1 << i) == 0 for i in range(3))
    assert g.worth(0) == 0


@pytest.mark.parametrize("family", [connectivity_game, wconn_game, wconn2_game])
def test_vectorised_table_matches_scalar_worths(rng, family):
    edges = {}
    while len(edges) < 14:
        u, v = sorted(int(x) for x in rng.choice(10, size=2, replace=False))
        edges[(u, v)] = float(rng.uniform(0.5, 3))
    g = family(Network(10, edges, rng.uniform(0, 2, size=10)))
    scalar = family(Network(10, edges, g.net.node_weights))
    t = g.table()
    assert t[0] == 0
    for m in range(1 << 10):
        assert (scalar._worth(m) if m else 0.0) == pytest.approx(t[m], abs=1e-12)


def test_worth_depends_only_on_induced_subgraph():
    base = Network(5, {(0, 1): 2.0, (1, 2): 1.0, (3, 4): 1.0}, [1, 2, 3, 4, 5])
    more = Network(5, {(0, 1): 2.0, (1, 2): 1.0, (3, 4): 1.0, (2, 3): 5.0, (0, 4): 1.0}, [1, 2, 3, 4, 5])
    inside = 0b00111
    for family in (connectivity_game, wconn_game, wconn2_game):
        a, b = family(base), family(more)
        for m in range(1, 32):
            if m & ~inside == 0:
                assert a.worth(m) == b.worth(m)


def test_wconn_examples():
    assert wconn_game(Network(2, {(0, 1): 2.0})).worth(0b11) == 0.5
    tri = wconn_game(Network(3, {(0, 1): 1.0, (1, 2): 2.0, (0, 2): 2.0}))
    assert tri.worth(0b111) == pytest.approx(3 / 5)
    assert wconn_game(Network(3, [(0, 1)])).worth(0b101) == 0


def test_wconn2_examples():
    assert wconn2_game(Network(2, [(0, 1)], [2.0, 3.0])).worth(0b11) == 5.0
    assert wconn2_game(Network(3, [(0, 1)], [2.0, 3.0, 1.0])).worth(0b101) == 0.0
    # non-participants with zero weight add nothing
    g = wconn2_game(Network(3, [(0, 1), (1, 2)], [2.0, 3.0, 0.0]))
    assert g.worth(0b111) == g.worth(0b011) == 5.0


def test_unit_wconn2_majorizes_connectivity(rng):
    net = star_network()
    c, w = connectivity_game(net).table(), wconn2_game(net).table()
    connected = c > 0
    sizes = np.array([bin(m).count("1") for m in range(512)])
    assert np.all(w[connected] == sizes[connected])
    assert np.all(w[connected] >= c[connected])


def test_star_network_shape():
    net = star_network()
    assert net.n == 9 and len(net.edges) == 8
    assert bin(net.adjacency[3]).count("1") == 4 and bin(net.adjacency[5]).count("1") == 4


def test_influence_validation():
    with pytest.raises(ValueError):
        InfluenceModel([[0, 0.7, 0.5], [0, 0, 0], [0, 0, 0]])
    with pytest.raises(ValueError):
        InfluenceModel([[0.1, 0], [0, 0]])
    with pytest.raises(ValueError):
        InfluenceModel([[0, -0.1], [0, 0]])
    InfluenceModel([[0, 0.5, 0.5 + 1e-13], [0, 0, 0], [0, 0, 0]])


def test_two_agent_diffusion():
    g = LinearThresholdGame(InfluenceModel([[0, 0], [0.3, 0]]), runs=100_000, seed=11)
    mean, stderr = g.estimate(0b01)
    assert abs(mean - 1.3) <= 4 * stderr
    assert g.worth(0b10) == 1.0


def test_grand_coalition_activates_everyone():
    g = linear_threshold_game(InfluenceModel(np.full((4, 4), 0.2) - np.eye(4) * 0.2), mc_runs=50)
    assert g.estimate(0b1111) == (4.0, 0.0)
    assert g.worth(0) == 0.0


def test_no_influence_means_seed_count():
    g = linear_threshold_game(InfluenceModel(np.zeros((4, 4))), mc_runs=30)
    for m in range(1, 16):
        assert g.estimate(m) == (float(bin(m).count("1")), 0.0)


def test_common_thresholds_give_monotone_game(rng):
    w = rng.uniform(size=(6, 6))
    np.fill_diagonal(w, 0)
    w /= w.sum(axis=1, keepdims=True) * 1.1
    g = linear_threshold_game(InfluenceModel(w), mc_runs=200, seed=4, coupling="common")
    assert is_monotonic(g)


def test_diffusion_is_deterministic_per_coalition():
    model = InfluenceModel([[0, 0.4, 0], [0.2, 0, 0.5], [0.3, 0.3, 0]])
    a = linear_threshold_game(model, mc_runs=500, seed=2)
    b = linear_threshold_game(model, mc_runs=500, seed=2)
    assert [a.worth(m) for m in range(8)] == [b.worth(m) for m in range(8)]
    # evaluation order does not matter
    assert [b.worth(m) for m in reversed(range(8))][::-1] == [a.worth(m) for m in range(8)]


def test_cascade_reaches_fixpoint():
    model = InfluenceModel([[0, 0, 0], [1.0, 0, 0], [0, 1.0, 0]])
    out = cascade(model, 0b001, np.full((1, 3), 0.9))
    assert out.tolist() == [[True, True, True]]


def test_survey_validation():
    with pytest.raises(ValueError):
        SurveyData([[1, 0], [0, 1]], [1, 1])
    with pytest.raises(ValueError):
        SurveyData([[2, 0], [0, 1]], [1, 0])


def test_reach_noise_extremes():
    data = SurveyData([[1, 1], [1, 0], [0, 1], [0, 0]], [1, 1, 0, 0])
    g = reach_noise_game(data)
    assert g.worth(0b01) == 1.0
    assert g.worth(0b10) == 0.0
    assert g.worth(0) == 0.0


def test_reach_noise_toy_table():
    failures = [
        [1, 0, 0],
        [0, 1, 0],
        [1, 1, 0],
        [0, 0, 1],
        [1, 0, 1],
        [0, 0, 0],
    ]
    d = [1, 1, 1, 0, 0, 0]
    g = reach_noise_game(SurveyData(failures, d))
    # reach: among respondents 1-3; noise: among 4-6
    assert g.worth(0b001) == pytest.approx(2 / 3 - 1 / 3)
    assert g.worth(0b010) == pytest.approx(2 / 3 - 0)
    assert g.worth(0b100) == pytest.approx(0 - 2 / 3)
    assert g.worth(0b011) == pytest.approx(1 - 1 / 3)
    assert g.worth(0b111) == pytest.approx(1 - 2 / 3)


def test_reach_noise_table_matches_direct_counts(rng):
    m = rng.integers(0, 2, size=(40, 7))
    d = rng.integers(0, 2, size=40)
    d[:2] = [0, 1]
    g = reach_noise_game(SurveyData(m, d))
    direct = FunctionGame(7, g._worth)
    np.testing.assert_allclose(g.table(), direct.table(), atol=1e-12)
