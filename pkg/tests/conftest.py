import numpy as np
import pytest

from dream.graph import build_graph


def random_graph(rng: np.random.Generator, n: int, p: float, d_in: int = 3):
    iu, ju = np.triu_indices(n, k=1)
    hit = rng.random(len(iu)) < p
    edges = np.stack([iu[hit], ju[hit]], axis=1)
    return build_graph(edges, rng.normal(size=(n, d_in)), num_nodes=n)


@pytest.fixture
def path3():
    """0 - 1 - 2"""
    return build_graph([(0, 1), (1, 2)], np.eye(3), num_nodes=3)


@pytest.fixture
def triangle():
    return build_graph([(0, 1), (1, 2), (0, 2)], np.eye(3), num_nodes=3)


ACCEPTANCE_LINES: dict[str, str] = {}


def record(criterion: str, ok: bool, detail: str) -> None:
    line = f"{criterion} {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES[criterion] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES, key=lambda k: (int(k[1:].rstrip("ab")), k)):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
