import json

import numpy as np
import networkx as nx
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from expgraph.graphs import (
    GraphFormatError,
    WeightedGraph,
    average,
    build_laplacian_matrix,
    elliptic_constant,
    gamma,
    grad_norm,
    graph_from_dict,
    graph_to_dict,
    laplacian,
    lp_norm,
    mean_zero_poisson_solve,
    path_graph,
    random_connected_graph,
    two_vertex_graph,
    w1p_norm,
)

from conftest import graphs, vertex_functions


def direct_weighted_sum(g, f):
    return sum(g.m[x] * f[x] for x in range(g.k))


def direct_gamma_sum(g, u, v):
    # independent double-sum form of the integration-by-parts identity
    total = 0.0
    for x in range(g.k):
        for y in range(g.k):
            total += 0.5 * g.weights[x, y] * (u[y] - u[x]) * (v[y] - v[x])
    return total


class TestLaplacian:
    def test_single_edge(self, two_vertex):
        u = np.array([1.0, 0.0])
        assert np.allclose(laplacian(two_vertex, u), [-1.0, 1.0])

    def test_constant_in_kernel(self, rng):
        g = random_connected_graph(rng, 5, measure_range=(0.5, 2.0))
        assert np.allclose(laplacian(g, np.full(5, 3.7)), 0.0, atol=1e-14)

    def test_weighted_sum_vanishes(self, rng):
        g = random_connected_graph(rng, 5, measure_range=(0.5, 2.0))
        u = rng.normal(size=5)
        assert abs(direct_weighted_sum(g, laplacian(g, u))) < 1e-12

    def test_misaligned_input_rejected(self, two_vertex):
        with pytest.raises(ValueError):
            laplacian(two_vertex, np.zeros(3))

    def test_single_vertex_graph(self):
        g = WeightedGraph(("a",), np.array([2.0]), np.zeros((1, 1)))
        assert np.allclose(laplacian(g, np.array([5.0])), 0.0)


class TestGamma:
    def test_constant_vanishes(self, path3):
        assert np.allclose(gamma(path3, np.ones(3), np.ones(3)), 0.0)

    def test_single_edge_value(self, two_vertex):
        u = np.array([1.0, 0.0])
        assert np.allclose(gamma(two_vertex, u, u), [0.5, 0.5])

    def test_grad_norm_nonnegative(self, rng):
        g = random_connected_graph(rng, 6)
        assert np.all(grad_norm(g, rng.normal(size=6)) >= 0)


@settings(max_examples=60, deadline=None)
@given(data=st.data(), g=graphs())
def test_green_identity(data, g):
    u = data.draw(vertex_functions(g.k))
    v = data.draw(vertex_functions(g.k))
    lhs = -direct_weighted_sum(g, laplacian(g, u) * v)
    rhs = direct_weighted_sum(g, gamma(g, u, v))
    direct = direct_gamma_sum(g, u, v)
    scale = max(1.0, abs(lhs), abs(rhs))
    assert abs(lhs - rhs) <= 1e-10 * scale
    assert abs(rhs - direct) <= 1e-10 * scale


@settings(max_examples=60, deadline=None)
@given(data=st.data(), g=graphs())
def test_max_principle_contrapositive(data, g):
    u = data.draw(vertex_functions(g.k))
    x0 = int(np.argmax(u))
    # at a global maximizer no neighbour exceeds u(x0), so lap u(x0) <= 0
    assert laplacian(g, u)[x0] <= 1e-12 * max(1.0, np.abs(u).max())


class TestNorms:
    def test_constant_average_and_sup(self, path3):
        f = np.full(3, 3.0)
        assert average(path3, f) == pytest.approx(3.0)
        assert lp_norm(path3, f, np.inf) == pytest.approx(3.0)

    def test_weighted_mean(self):
        g = two_vertex_graph(m=(1.0, 2.0))
        assert average(g, np.array([0.0, 3.0])) == pytest.approx(2.0)

    def test_invalid_p(self, path3):
        with pytest.raises(ValueError):
            lp_norm(path3, np.zeros(3), 0.5)

    @settings(max_examples=40, deadline=None)
    @given(data=st.data(), g=graphs(), p=st.sampled_from([1.0, 2.0, 3.0, np.inf]))
    def test_sobolev_dominates(self, data, g, p):
        f = data.draw(vertex_functions(g.k))
        assert w1p_norm(g, f, p) >= lp_norm(g, f, p) - 1e-12


class TestEllipticConstant:
    def test_single_edge_family(self):
        for w in (0.25, 1.0, 4.0):
            g = two_vertex_graph(w=w)
            C = elliptic_constant(g)
            assert C >= 1.0 / w - 1e-12
            # exhaustive on the one-parameter family u = (s, 0)
            for s in np.linspace(-10, 10, 101):
                u = np.array([s, 0.0])
                osc = abs(s)
                assert osc <= C * np.abs(laplacian(g, u)).max() + 1e-12

    def test_path3_random_sampling(self, rng):
        g = path_graph(3)
        C = elliptic_constant(g)
        U = rng.normal(size=(10_000, 3)) * 4
        lap = U @ g.lap_matrix.T
        osc = U.max(axis=1) - U.min(axis=1)
        bound = C * np.abs(lap).max(axis=1)
        assert np.all(osc <= bound * (1 + 1e-9) + 1e-12)

    def test_weight_scaling(self, rng):
        g = random_connected_graph(rng, 5)
        C = elliptic_constant(g)
        g2 = WeightedGraph(g.ids, g.m, g.weights * 3.0)
        assert elliptic_constant(g2) == pytest.approx(C / 3.0, rel=1e-10)

    @settings(max_examples=25, deadline=None)
    @given(data=st.data(), g=graphs(max_k=5))
    def test_oscillation_bound_property(self, data, g):
        C = elliptic_constant(g)
        u = data.draw(vertex_functions(g.k, lo=-20, hi=20))
        osc = float(u.max() - u.min())
        assert osc <= C * np.abs(laplacian(g, u)).max() * (1 + 1e-9) + 1e-12


class TestLaplacianMatrix:
    def test_single_edge(self, two_vertex):
        L = build_laplacian_matrix(two_vertex).values
        assert np.allclose(L, [[1.0, -1.0], [-1.0, 1.0]])

    def test_triangle(self):
        w = np.ones((3, 3)) - np.eye(3)
        g = WeightedGraph(("a", "b", "c"), np.ones(3), w)
        L = build_laplacian_matrix(g).values
        assert np.allclose(np.diag(L), 2.0)
        assert np.allclose(L - np.diag(np.diag(L)), -(w))

    def test_random_spectrum(self, rng):
        g = random_connected_graph(rng, 6)
        L = build_laplacian_matrix(g).values
        eig = np.linalg.eigvalsh(L)
        assert eig[0] >= -1e-10
        assert abs(eig[0]) <= 1e-10 * eig[1]
        assert eig[1] > 0


def test_poisson_solve_mean_zero(rng):
    g = random_connected_graph(rng, 5, measure_range=(0.5, 2.0))
    u = rng.normal(size=5)
    rhs = laplacian(g, u)
    v = mean_zero_poisson_solve(g, rhs)
    assert np.allclose(laplacian(g, v), rhs, atol=1e-10)
    assert abs(average(g, v)) < 1e-12


class TestConnectivity:
    @settings(max_examples=40, deadline=None)
    @given(g=graphs())
    def test_agrees_with_bfs_oracle(self, g):
        nxg = nx.Graph()
        nxg.add_nodes_from(range(g.k))
        for i in range(g.k):
            for j in range(i + 1, g.k):
                if g.weights[i, j] > 0:
                    nxg.add_edge(i, j)
        assert nx.is_connected(nxg)  # construction succeeded, so connected

    def test_disconnected_rejected(self):
        w = np.zeros((4, 4))
        w[0, 1] = w[1, 0] = 1.0
        w[2, 3] = w[3, 2] = 1.0
        with pytest.raises(GraphFormatError):
            WeightedGraph(("a", "b", "c", "d"), np.ones(4), w)


class TestFileFormat:
    def good(self):
        return {
            "vertices": [{"id": "a", "m": 1.0}, {"id": "b", "m": 2.0}],
            "edges": [{"u": "a", "v": "b", "w": 1.5}],
        }

    def test_roundtrip(self):
        g = graph_from_dict(self.good())
        assert graph_from_dict(graph_to_dict(g)).ids == g.ids
        assert g.m[1] == 2.0
        assert g.weights[0, 1] == 1.5

    @pytest.mark.parametrize("mutate,desc", [
        (lambda d: d["vertices"].append({"id": "a", "m": 1.0}), "duplicate id"),
        (lambda d: d["vertices"][0].update(m=0.0), "nonpositive measure"),
        (lambda d: d["edges"][0].update(w=-1.0), "nonpositive weight"),
        (lambda d: d["edges"].append({"u": "b", "v": "a", "w": 0.5}), "conflicting duplicate"),
        (lambda d: d["edges"].append({"u": "a", "v": "a", "w": 1.0}), "self-loop"),
        (lambda d: d["edges"].clear(), "disconnected"),
        (lambda d: d["edges"][0].update(u="zz"), "unknown endpoint"),
    ])
    def test_rejections(self, mutate, desc):
        data = self.good()
        mutate(data)
        with pytest.raises(GraphFormatError):
            graph_from_dict(data)

    def test_consistent_duplicate_tolerated(self):
        data = self.good()
        data["edges"].append({"u": "b", "v": "a", "w": 1.5})
        g = graph_from_dict(data)
        assert g.weights[0, 1] == 1.5
