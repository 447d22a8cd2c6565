import os
import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile(
    "default", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

from groupvalue.applied import connectivity_game, star_network  # noqa: E402
from groupvalue.games import TableGame  # noqa: E402


@pytest.fixture(scope="session")
def star():
    return connectivity_game(star_network())


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def random_table_game(rng, n, scale=1.0):
    t = np.concatenate([[0.0], rng.normal(scale=scale, size=(1 << n) - 1)])
    return TableGame(t, n)


# 1-based star labels to 0-based masks
def S(*players):
    return sum(1 << (p - 1) for p in players)


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE: list[str] = []


def record_criterion(number: int, title: str, ok: bool, detail: str) -> None:
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {title}  ({detail})"
    ACCEPTANCE.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
