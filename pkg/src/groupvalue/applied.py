"""Concrete game families: graph connectivity games, linear-threshold diffusion, reach minus noise."""

from __future__ import annotations

from typing import Iterable, Mapping, Sequence

import numpy as np

from .coalition import all_masks, check_within, members
from .games import EXACT_LIMIT, Game, zeta

ROW_SUM_SLACK = 1e-12


class Network:
    """Undirected weighted graph with optional node weights.

    ``edges`` maps node pairs to positive relation weights; the indicator of
    an existing edge is implicitly 1.
    """

    def __init__(self, n: int, edges: Mapping[tuple[int, int], float] | Iterable[tuple[int, int]],
                 node_weights: Sequence[float] | None = None):
        if n < 1:
            raise ValueError("a network needs at least one node")
        if not isinstance(edges, Mapping):
            edges = {e: 1.0 for e in edges}
        clean: dict[tuple[int, int], float] = {}
        adjacency = [0] * n
        for (u, v), f in edges.items():
            u, v = int(u), int(v)
            if u == v:
                raise ValueError(f"self-loop at node {u}")
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"edge ({u}, {v}) refers to a node outside 0..{n - 1}")
            f = float(f)
            if not np.isfinite(f) or f <= 0:
                raise ValueError(f"edge ({u}, {v}) needs a positive finite weight, got {f}")
            key = (min(u, v), max(u, v))
            if key in clean and clean[key] != f:
                raise ValueError(f"edge {key} listed twice with different weights")
            clean[key] = f
            adjacency[u] |= 1 << v
            adjacency[v] |= 1 << u
        if node_weights is None:
            node_weights = np.ones(n)
        node_weights = np.array(node_weights, dtype=float)
        if node_weights.shape != (n,) or not np.all(np.isfinite(node_weights)):
            raise ValueError("node weights must be n finite numbers")
        if np.any(node_weights < 0):
            raise ValueError("node weights must be nonnegative")
        self.n = n
        self.edges = dict(sorted(clean.items()))
        self.adjacency = tuple(adjacency)
        self.node_weights = node_weights
        self.node_weights.flags.writeable = False

    def is_connected(self, mask: int) -> bool:
        """Breadth-first search restricted to the nodes of ``mask``."""
        if mask == 0:
            return False
        reached = mask & -mask
        frontier = reached
        while frontier:
            grown = 0
            while frontier:
                low = frontier & -frontier
                grown |= self.adjacency[low.bit_length() - 1]
                frontier ^= low
            frontier = grown & mask & ~reached
            reached |= frontier
        return reached == mask

    def connected_table(self) -> np.ndarray:
        """Connectivity of every node set, all sets advanced together one BFS layer at a time."""
        if self.n > EXACT_LIMIT:
            raise ValueError("connectivity table limited to 25 nodes")
        masks = all_masks(self.n)
        reached = masks & -masks
        adjacency = np.array(self.adjacency, dtype=np.int64)
        while True:
            grown = reached.copy()
            for i in range(self.n):
                grown |= np.where((reached >> i) & 1 == 1, adjacency[i], 0)
            grown &= masks
            if np.array_equal(grown, reached):
                break
            reached = grown
        return (reached == masks) & (masks != 0)

    def internal_edges(self, mask: int) -> list[tuple[int, int]]:
        return [(u, v) for (u, v) in self.edges if mask >> u & 1 and mask >> v & 1]


class _NetworkGame(Game):
    def __init__(self, net: Network):
        super().__init__(net.n)
        self.net = net

    def _worth(self, mask: int) -> float:
        if mask.bit_count() < 2 or not self.net.is_connected(mask):
            return 0.0
        return self._connected_worth(mask)

    def _build_table(self) -> np.ndarray:
        masks = all_masks(self.n)
        ok = self.net.connected_table() & (masks & (masks - 1) != 0)
        return np.where(ok, self._connected_table(masks), 0.0)

    def _connected_worth(self, mask: int) -> float:
        raise NotImplementedError

    def _connected_table(self, masks: np.ndarray) -> np.ndarray:
        raise NotImplementedError


class ConnectivityGame(_NetworkGame):
    """``v(S) = 1`` for connected ``S`` with at least two nodes, else 0."""

    def _connected_worth(self, mask: int) -> float:
        return 1.0

    def _connected_table(self, masks: np.ndarray) -> np.ndarray:
        return np.ones(masks.shape)


class WeightedConnectivityGame(_NetworkGame):
    """Number of internal relations over their total weight, on connected coalitions."""

    def _connected_worth(self, mask: int) -> float:
        inside = self.net.internal_edges(mask)
        total = sum(self.net.edges[e] for e in inside)
        if total <= 0:
            raise ValueError(f"connected coalition {members(mask)} has zero internal relation weight")
        return len(inside) / total

    def _connected_table(self, masks: np.ndarray) -> np.ndarray:
        count = np.zeros(masks.shape)
        weight = np.zeros(masks.shape)
        for (u, v), f in self.net.edges.items():
            inside = ((masks >> u) & (masks >> v) & 1).astype(float)
            count += inside
            weight += inside * f
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(weight > 0, count / np.where(weight > 0, weight, 1.0), 0.0)


class NodeWeightConnectivityGame(_NetworkGame):
    """Sum of node weights on connected coalitions of at least two nodes."""

    def _connected_worth(self, mask: int) -> float:
        return float(sum(self.net.node_weights[i] for i in members(mask)))

    def _connected_table(self, masks: np.ndarray) -> np.ndarray:
        total = np.zeros(masks.shape)
        for i, w in enumerate(self.net.node_weights):
            total += ((masks >> i) & 1) * w
        return total


def connectivity_game(net: Network) -> ConnectivityGame:
    return ConnectivityGame(net)


def wconn_game(net: Network) -> WeightedConnectivityGame:
    return WeightedConnectivityGame(net)


def wconn2_game(net: Network) -> NodeWeightConnectivityGame:
    return NodeWeightConnectivityGame(net)


# -- linear threshold diffusion ------------------------------------------------


class InfluenceModel:
    """Directed influence weights; ``weights[i, j]`` is how much agent ``i`` listens to ``j``."""

    def __init__(self, weights: np.ndarray | Sequence[Sequence[float]]):
        w = np.array(weights, dtype=float)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise ValueError("influence weights must form a square matrix")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise ValueError("influence weights must be finite and nonnegative")
        if np.any(np.diag(w) != 0):
            raise ValueError("an agent cannot influence itself")
        rows = w.sum(axis=1)
        bad = np.nonzero(rows > 1 + ROW_SUM_SLACK)[0]
        if bad.size:
            raise ValueError(f"incoming influence of agent {int(bad[0])} sums to {rows[bad[0]]:.6g} > 1")
        w.flags.writeable = False
        self.weights = w
        self.n = w.shape[0]


def cascade(model: InfluenceModel, seeds: int, thresholds: np.ndarray) -> np.ndarray:
    """Final active sets (one boolean row per threshold draw) of the threshold cascade.

    An inactive agent switches on once the weight it places on active agents
    reaches its threshold; the loop stops at the fixpoint, at most ``n`` rounds.
    """
    n = model.n
    runs = thresholds.shape[0]
    seed_row = np.array([seeds >> i & 1 for i in range(n)], dtype=bool)
    active = np.broadcast_to(seed_row, (runs, n)).copy()
    for _ in range(n):
        incoming = active.astype(float) @ model.weights.T
        grown = active | (incoming >= thresholds)
        if np.array_equal(grown, active):
            break
        active = grown
    return active


class LinearThresholdGame(Game):
    """Expected final number of active agents when ``S`` is seeded.

    Thresholds are i.i.d. uniform on ``(0, 1]`` and averaged over ``runs``
    draws. With ``coupling="coalition"`` each coalition draws from a stream
    keyed by ``(seed, mask)``; with ``coupling="common"`` every coalition
    reuses the same draws, which makes the estimate exactly monotone.
    """

    def __init__(self, model: InfluenceModel, runs: int = 1000, seed: int = 0, coupling: str = "coalition"):
        if runs < 1:
            raise ValueError("need at least one cascade run")
        if coupling not in ("coalition", "common"):
            raise ValueError("coupling must be 'coalition' or 'common'")
        super().__init__(model.n)
        self.model = model
        self.runs = runs
        self.seed = seed
        self.coupling = coupling
        self._common = self._thresholds(0) if coupling == "common" else None

    def _thresholds(self, mask: int) -> np.ndarray:
        key = [self.seed & (2**64 - 1), mask & 0xFFFFFFFF, mask >> 32]
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(key)))
        return 1.0 - rng.random((self.runs, self.n))

    def samples(self, mask: int) -> np.ndarray:
        """Final active counts, one per threshold draw."""
        check_within(mask, self.n)
        if mask == 0:
            return np.zeros(self.runs)
        thresholds = self._common if self._common is not None else self._thresholds(mask)
        return cascade(self.model, mask, thresholds).sum(axis=1).astype(float)

    def estimate(self, mask: int) -> tuple[float, float]:
        """Mean active count and its standard error."""
        x = self.samples(mask)
        if self.runs < 2 or np.ptp(x) == 0:
            return float(x[0]) if mask else 0.0, 0.0
        return float(x.mean()), float(x.std(ddof=1) / np.sqrt(self.runs))

    def _worth(self, mask: int) -> float:
        return self.estimate(mask)[0]


def linear_threshold_game(model: InfluenceModel, mc_runs: int = 1000, seed: int = 0,
                          coupling: str = "coalition") -> LinearThresholdGame:
    return LinearThresholdGame(model, mc_runs, seed, coupling)


# -- reach minus noise ----------------------------------------------------------


class SurveyData:
    """Binary failure indicators per respondent and attribute, plus dissatisfaction flags."""

    def __init__(self, failures: np.ndarray | Sequence[Sequence[int]], dissatisfied: Sequence[int]):
        m = np.array(failures, dtype=int)
        d = np.array(dissatisfied, dtype=int)
        if m.ndim != 2 or d.shape != (m.shape[0],):
            raise ValueError("failures must be respondents x attributes, one flag per respondent")
        if not np.isin(m, (0, 1)).all() or not np.isin(d, (0, 1)).all():
            raise ValueError("survey indicators must be 0 or 1")
        if not (d == 1).any() or not (d == 0).any():
            raise ValueError("need at least one dissatisfied and one satisfied respondent")
        self.failures = m
        self.dissatisfied = d
        self.n = m.shape[1]
        self.fail_masks = (m * (1 << np.arange(self.n, dtype=np.int64))).sum(axis=1)


class ReachNoiseGame(Game):
    """Share of dissatisfied respondents hit by a failure in ``S``, minus that share among the rest."""

    def __init__(self, data: SurveyData):
        super().__init__(data.n)
        self.data = data

    def _worth(self, mask: int) -> float:
        hit = (self.data.fail_masks & mask) != 0
        d = self.data.dissatisfied == 1
        return float(hit[d].mean() - hit[~d].mean())

    def _build_table(self) -> np.ndarray:
        n = self.n
        full = (1 << n) - 1
        d = self.data.dissatisfied == 1

        def hit_share(fails: np.ndarray) -> np.ndarray:
            # respondents whose failures avoid S are counted by a subset sum over the complement
            hist = np.bincount(fails, minlength=1 << n).astype(float)
            miss = zeta(hist, n)[full ^ all_masks(n)]
            return 1.0 - miss / fails.size

        return hit_share(self.data.fail_masks[d]) - hit_share(self.data.fail_masks[~d])


def reach_noise_game(data: SurveyData) -> ReachNoiseGame:
    return ReachNoiseGame(data)


def star_network() -> Network:
    """Two satellite stars joined through a hub; nodes 1..9 stored as indices 0..8."""
    pairs = [(1, 4), (2, 4), (3, 4), (4, 5), (5, 6), (6, 7), (6, 8), (6, 9)]
    return Network(9, [(u - 1, v - 1) for u, v in pairs])
