"""Reading input files into games, with player labels and line/column diagnostics."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Optional, Sequence

import numpy as np

from .applied import InfluenceModel, Network, SurveyData
from .games import Game, game_from_json

_TOKEN = re.compile(r"[^,\s]+")


class InputError(ValueError):
    """Malformed input, reported with its file position."""

    def __init__(self, path: str, message: str, line: Optional[int] = None, column: Optional[int] = None):
        where = path
        if line is not None:
            where += f":{line}"
            if column is not None:
                where += f":{column}"
        super().__init__(f"{where}: {message}")
        self.path, self.line, self.column = path, line, column


@dataclass(frozen=True)
class InputSource:
    path: str
    sha256: str


@dataclass(frozen=True)
class LabeledUniverse:
    """Player labels in index order, plus the files they came from."""

    labels: tuple[str, ...]
    sources: tuple[InputSource, ...] = ()

    def __post_init__(self):
        if len(set(self.labels)) != len(self.labels):
            raise ValueError("player labels must be unique")

    @classmethod
    def numbered(cls, n: int, sources: tuple[InputSource, ...] = ()) -> "LabeledUniverse":
        return cls(tuple(str(i) for i in range(1, n + 1)), sources)

    @property
    def n(self) -> int:
        return len(self.labels)

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise ValueError(f"unknown player label {label!r}") from None

    def group(self, labels: Sequence[str]) -> int:
        mask = 0
        for label in labels:
            bit = 1 << self.index(label)
            if mask & bit:
                raise ValueError(f"player {label!r} listed twice")
            mask |= bit
        if mask == 0:
            raise ValueError("the group is empty")
        return mask

    def names(self, mask: int) -> list[str]:
        return [self.labels[i] for i in range(self.n) if mask >> i & 1]


def read_source(path: str) -> tuple[str, InputSource]:
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise InputError(path, exc.strerror or str(exc)) from None
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise InputError(path, f"not valid UTF-8 ({exc.reason})") from None
    return text, InputSource(path, hashlib.sha256(raw).hexdigest())


def _records(path: str, text: str) -> Iterator[tuple[int, list[tuple[int, str]]]]:
    """Non-blank lines with ``#`` comments removed, as (line, [(column, token)])."""
    for number, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0]
        tokens = [(m.start() + 1, m.group()) for m in _TOKEN.finditer(line)]
        if tokens:
            yield number, tokens


def _number(path: str, line: int, column: int, token: str, what: str) -> float:
    try:
        value = float(token)
    except ValueError:
        raise InputError(path, f"{what} must be a number, got {token!r}", line, column) from None
    if not np.isfinite(value):
        raise InputError(path, f"{what} must be finite", line, column)
    return value


class _Labels:
    """Collects labels in first-seen order; all-integer label sets are sorted numerically."""

    def __init__(self):
        self.seen: dict[str, None] = {}

    def add(self, label: str) -> None:
        self.seen.setdefault(label, None)

    def freeze(self) -> tuple[str, ...]:
        labels = list(self.seen)
        if all(re.fullmatch(r"[+-]?\d+", s) for s in labels):
            labels.sort(key=int)
        return tuple(labels)


def read_game(path: str) -> tuple[Game, LabeledUniverse]:
    """JSON game file; an optional ``labels`` list names the players, else 1..n."""
    text, source = read_source(path)
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(path, exc.msg, exc.lineno, exc.colno) from None
    if not isinstance(obj, dict):
        raise InputError(path, "expected a JSON object")
    try:
        game = game_from_json(obj)
    except (TypeError, ValueError) as exc:
        raise InputError(path, str(exc)) from None
    labels = obj.get("labels")
    if labels is None:
        return game, LabeledUniverse.numbered(game.n, (source,))
    if not isinstance(labels, list) or len(labels) != game.n:
        raise InputError(path, f"'labels' must list {game.n} names")
    try:
        return game, LabeledUniverse(tuple(str(s) for s in labels), (source,))
    except ValueError as exc:
        raise InputError(path, str(exc)) from None


def read_network(path: str, weights_path: Optional[str] = None) -> tuple[Network, LabeledUniverse]:
    """Edge list ``u v [f]`` plus an optional node-weight file ``u w``."""
    text, source = read_source(path)
    labels = _Labels()
    raw_edges = []
    for line, tokens in _records(path, text):
        if len(tokens) not in (2, 3):
            raise InputError(path, f"expected 'u v [f]', got {len(tokens)} fields", line, tokens[0][0])
        (cu, u), (cv, v) = tokens[:2]
        if u == v:
            raise InputError(path, f"self-loop at {u!r}", line, cv)
        f = 1.0
        if len(tokens) == 3:
            f = _number(path, line, tokens[2][0], tokens[2][1], "relation weight")
            if f <= 0:
                raise InputError(path, "relation weight must be positive", line, tokens[2][0])
        labels.add(u)
        labels.add(v)
        raw_edges.append((line, u, v, f))
    sources = [source]
    raw_weights = []
    if weights_path is not None:
        wtext, wsource = read_source(weights_path)
        sources.append(wsource)
        for line, tokens in _records(weights_path, wtext):
            if len(tokens) != 2:
                raise InputError(weights_path, "expected 'u w'", line, tokens[0][0])
            w = _number(weights_path, line, tokens[1][0], tokens[1][1], "node weight")
            if w < 0:
                raise InputError(weights_path, "node weight must be nonnegative", line, tokens[1][0])
            labels.add(tokens[0][1])
            raw_weights.append((line, tokens[0][1], w))
    universe = LabeledUniverse(labels.freeze(), tuple(sources))
    if universe.n == 0:
        raise InputError(path, "no edges found")
    edges: dict[tuple[int, int], float] = {}
    for line, u, v, f in raw_edges:
        a, b = sorted((universe.index(u), universe.index(v)))
        if edges.get((a, b), f) != f:
            raise InputError(path, f"edge {u}-{v} repeated with a different weight", line)
        edges[(a, b)] = f
    node_weights = np.ones(universe.n)
    if raw_weights:
        node_weights[:] = 0.0
        listed = set()
        for line, u, w in raw_weights:
            if u in listed:
                raise InputError(weights_path, f"node {u!r} weighted twice", line)
            listed.add(u)
            node_weights[universe.index(u)] = w
    return Network(universe.n, edges, node_weights), universe


def read_influence(path: str) -> tuple[InfluenceModel, LabeledUniverse]:
    """Lines ``i j w``: agent ``i`` places weight ``w`` on agent ``j``."""
    text, source = read_source(path)
    labels = _Labels()
    rows = []
    for line, tokens in _records(path, text):
        if len(tokens) != 3:
            raise InputError(path, f"expected 'i j w', got {len(tokens)} fields", line, tokens[0][0])
        (_, i), (cj, j), (cw, w) = tokens
        if i == j:
            raise InputError(path, f"agent {i!r} cannot influence itself", line, cj)
        w = _number(path, line, cw, w, "influence weight")
        if w < 0:
            raise InputError(path, "influence weight must be nonnegative", line, cw)
        labels.add(i)
        labels.add(j)
        rows.append((line, i, j, w))
    universe = LabeledUniverse(labels.freeze(), (source,))
    if universe.n == 0:
        raise InputError(path, "no influence weights found")
    weights = np.zeros((universe.n, universe.n))
    for line, i, j, w in rows:
        a, b = universe.index(i), universe.index(j)
        if weights[a, b] != 0:
            raise InputError(path, f"weight of {i}->{j} given twice", line)
        weights[a, b] = w
    try:
        return InfluenceModel(weights), universe
    except ValueError as exc:
        # translate the agent index back to its label
        m = re.search(r"agent (\d+)", str(exc))
        message = str(exc) if m is None else str(exc).replace(m.group(0), f"agent {universe.labels[int(m.group(1))]!r}")
        raise InputError(path, message) from None


def read_survey(path: str) -> tuple[SurveyData, LabeledUniverse]:
    """CSV survey: one respondent per row, 0/1 failure flags per attribute, last column D."""
    text, source = read_source(path)
    rows = [(k, r) for k, r in enumerate(csv.reader(io.StringIO(text)), start=1) if any(c.strip() for c in r)]
    if not rows:
        raise InputError(path, "empty survey")
    header = None
    if any(c.strip() not in ("0", "1") for c in rows[0][1]):
        header = [c.strip() for c in rows[0][1]]
        rows = rows[1:]
    width = len(header) if header else len(rows[0][1])
    if width < 2:
        raise InputError(path, "need at least one attribute column and the D column")
    data = []
    for line, row in rows:
        if len(row) != width:
            raise InputError(path, f"expected {width} columns, got {len(row)}", line)
        values = []
        for col, cell in enumerate(row, start=1):
            if cell.strip() not in ("0", "1"):
                raise InputError(path, f"expected 0 or 1, got {cell.strip()!r}", line, col)
            values.append(int(cell))
        data.append(values)
    if not data:
        raise InputError(path, "no respondents")
    arr = np.array(data, dtype=int)
    try:
        survey = SurveyData(arr[:, :-1], arr[:, -1])
    except ValueError as exc:
        raise InputError(path, str(exc)) from None
    labels = tuple(header[:-1]) if header else tuple(str(i) for i in range(1, width))
    try:
        return survey, LabeledUniverse(labels, (source,))
    except ValueError as exc:
        raise InputError(path, str(exc)) from None
