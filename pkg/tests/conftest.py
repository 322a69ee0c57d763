import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import strategies as st

from coalition_forge.graph import WeightedGraph

sys.path.insert(0, str(Path(__file__).parent))

TRIANGLE_EDGES = [(0, 1, 2.0), (1, 2, -5.0), (2, 0, 1.0)]
A, B, C = 0, 1, 2


@pytest.fixture
def triangle():
    return WeightedGraph(3, TRIANGLE_EDGES)


def random_graph(rng, n, density=None, low=-1.0, high=1.0):
    density = rng.choice([1.0, 0.5, 0.25]) if density is None else density
    edges = [
        (u, v, float(rng.uniform(low, high)))
        for u in range(n)
        for v in range(u + 1, n)
        if rng.random() < density
    ]
    return WeightedGraph(n, edges)


@st.composite
def graphs(draw, min_nodes=1, max_nodes=8, weights=None):
    n = draw(st.integers(min_nodes, max_nodes))
    pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
    keep = draw(st.lists(st.booleans(), min_size=len(pairs), max_size=len(pairs)))
    weights = weights or st.floats(-10, 10, allow_nan=False, allow_infinity=False)
    ws = draw(st.lists(weights, min_size=len(pairs), max_size=len(pairs)))
    return WeightedGraph(n, [(u, v, w) for (u, v), k, w in zip(pairs, keep, ws) if k])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
