from pathlib import Path

import numpy as np
import pytest

import catecon
from catecon.games import load_game
from catecon.problems import load_bundle, solve_problem

DATA = Path(catecon.__file__).parent / "data"

# closed forms for the sphere-and-plane circle solutions
B2 = np.array([np.sqrt(1 / 3), 1 / (2 * np.sqrt(3)) + 0.5, 0.5 - 1 / (2 * np.sqrt(3))])
B1 = -B2
A1 = np.array([0.0, 1.0, 0.0])
A2 = -A1


@pytest.fixture(scope="session")
def example1():
    problems, universe, cover = load_bundle(DATA / "example1.json")
    solved = {p.id: solve_problem(p) for p in problems}
    return solved, universe, cover


@pytest.fixture(scope="session")
def bos():
    return load_game(DATA / "bos.json")


@pytest.fixture(scope="session")
def pd():
    return load_game(DATA / "pd.json")


# one line per acceptance criterion, repeated in the terminal summary
ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
