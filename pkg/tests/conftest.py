import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from maglap.graph import DirectedGraph

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@st.composite
def digraphs(draw, min_n=2, max_n=12, weighted=False, connected=False):
    """Random simple digraphs; ``connected`` adds a directed path through all vertices."""
    n = draw(st.integers(min_n, max_n))
    pairs = [(u, v) for u in range(n) for v in range(n) if u != v]
    chosen = draw(st.lists(st.sampled_from(pairs), max_size=3 * n, unique=True)) if pairs else []
    edges = set(chosen)
    if connected:
        order = draw(st.permutations(range(n)))
        for a, b in zip(order, order[1:]):
            if (a, b) not in edges and (b, a) not in edges:
                edges.add((a, b))
    if weighted:
        ws = draw(st.lists(st.floats(0.1, 5.0), min_size=len(edges), max_size=len(edges)))
        return DirectedGraph.from_edges(n, [(u, v, w) for (u, v), w in zip(sorted(edges), ws)])
    return DirectedGraph.from_edges(n, sorted(edges))


def random_digraph(rng: np.random.Generator, n: int, p: float, connected: bool = True) -> DirectedGraph:
    A = rng.random((n, n)) < p
    np.fill_diagonal(A, False)
    if connected:
        perm = rng.permutation(n)
        A[perm[:-1], perm[1:]] = True
    src, dst = np.nonzero(A)
    return DirectedGraph.from_arrays(n, src, dst)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_criterion_lines: list[str] = []


@pytest.fixture
def criterion():
    """Record and print one PASS/FAIL line for an acceptance criterion."""

    def report(label: str, ok: bool | None, detail: str) -> bool | None:
        status = "SKIP" if ok is None else "PASS" if ok else "FAIL"
        line = f"{status} criterion {label}: {detail}"
        _criterion_lines.append(line)
        print(line)
        return ok

    return report


def pytest_terminal_summary(terminalreporter):
    if _criterion_lines:
        terminalreporter.section("acceptance criteria")
        for line in _criterion_lines:
            terminalreporter.write_line(line)
