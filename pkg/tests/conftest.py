import numpy as np
import pytest
from hypothesis import strategies as st

from expgraph.graphs import WeightedGraph


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def two_vertex():
    from expgraph.graphs import two_vertex_graph

    return two_vertex_graph()


@pytest.fixture
def path3():
    from expgraph.graphs import path_graph

    return path_graph(3)


@st.composite
def graphs(draw, max_k=6, unit_measure=False):
    """Random connected weighted graph: spanning tree plus extra edges."""
    k = draw(st.integers(min_value=2, max_value=max_k))
    weights = np.zeros((k, k))
    pos_weight = st.floats(min_value=0.1, max_value=3.0, allow_nan=False)
    for v in range(1, k):
        u = draw(st.integers(min_value=0, max_value=v - 1))
        weights[u, v] = weights[v, u] = draw(pos_weight)
    extra = draw(st.lists(
        st.tuples(st.integers(0, k - 1), st.integers(0, k - 1), pos_weight),
        max_size=6))
    for u, v, w in extra:
        if u != v and weights[u, v] == 0:
            weights[u, v] = weights[v, u] = w
    if unit_measure:
        m = np.ones(k)
    else:
        m = np.array(draw(st.lists(st.floats(0.3, 3.0), min_size=k, max_size=k)))
    return WeightedGraph(tuple(str(i) for i in range(k)), m, weights)


@st.composite
def vertex_functions(draw, k, lo=-5.0, hi=5.0):
    vals = draw(st.lists(st.floats(lo, hi, allow_nan=False, allow_infinity=False),
                         min_size=k, max_size=k))
    return np.array(vals)
