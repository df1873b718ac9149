import numpy as np
import pytest

from pprsearch import Graph, generate_synthetic


def two_cycle() -> Graph:
    return generate_synthetic(2, "cycle")


def three_cycle() -> Graph:
    return generate_synthetic(3, "cycle")


# Worked example used by the sampling tests: s=0, a=1, b=2, c=3, t1..t3 = 4..6.
S, A, B, C, T1, T2, T3 = range(7)

FIG_EDGES = [
    (S, A, 1.0), (S, B, 1.0), (S, C, 1.0),
    (A, S, 1.0),
    (B, T1, 0.8), (B, A, 0.2),
    (C, T1, 0.5), (C, T2, 0.2), (C, T3, 0.2), (C, A, 0.1),
    (T1, A, 1.0), (T2, A, 1.0), (T3, A, 1.0),
]


def fig_graph() -> Graph:
    return Graph.from_edges(7, [(u, v) for u, v, _ in FIG_EDGES], [w for *_, w in FIG_EDGES])


def random_graph(n: int, seed: int, p: float | None = None) -> Graph:
    if p is None:
        p = min(1.0, 3.0 / n)
    return generate_synthetic(n, "erdos_renyi", seed=seed, p=p)


def ppr_matrix(g: Graph, alpha: float) -> np.ndarray:
    """Dense PPR matrix from a direct linear solve: row s is pi_s."""
    W = g.transition_matrix().toarray()
    return alpha * np.linalg.inv(np.eye(g.n) - (1 - alpha) * W)


@pytest.fixture
def cycle2():
    return two_cycle()


@pytest.fixture
def cycle3():
    return three_cycle()


@pytest.fixture
def fig():
    return fig_graph()


@pytest.fixture(scope="session")
def power_law_small():
    return generate_synthetic(1000, "directed_power_law", seed=3)


@pytest.fixture(scope="session")
def acceptance(request):
    """``report(number, ok, detail)`` prints one line and keeps it for the terminal summary."""
    lines = request.config.__dict__.setdefault("_acceptance_lines", [])

    def report(number: int, ok: bool, detail: str) -> None:
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'} {detail}"
        lines.append((number, line))
        print(line)

    return report


def pytest_terminal_summary(terminalreporter, config):
    lines = config.__dict__.get("_acceptance_lines")
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
