"""Finite connected weighted graphs and their discrete calculus.

A graph carries a positive vertex measure ``m`` and symmetric nonnegative
edge weights ``w``.  Vertex functions are plain 1-d numpy arrays aligned
with the graph's vertex ordering; the ordering is fixed at construction
time and is the alignment contract for every operation in this package.

Sign conventions: the Laplacian is

    (lap u)(x) = (1/m(x)) * sum_y w_xy (u(y) - u(x)),

which is negative semidefinite with the constants as kernel.  The matrix
``L`` with L_ij = -w_ij (i != j) and zero row sums represents ``-lap``
for unit measure.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass
from functools import cached_property

import numpy as np

__all__ = [
    "GraphFormatError",
    "WeightedGraph",
    "LaplacianMatrix",
    "laplacian",
    "gamma",
    "grad_norm",
    "average",
    "lp_norm",
    "w1p_norm",
    "elliptic_constant",
    "build_laplacian_matrix",
    "two_vertex_graph",
    "path_graph",
    "star_graph",
    "random_connected_graph",
    "graph_from_dict",
    "graph_to_dict",
    "load_graph",
]


class GraphFormatError(ValueError):
    """Raised when a graph description violates the file schema."""


def _connected(weights: np.ndarray) -> bool:
    k = weights.shape[0]
    seen = np.zeros(k, dtype=bool)
    queue = deque([0])
    seen[0] = True
    while queue:
        x = queue.popleft()
        for y in np.nonzero(weights[x] > 0)[0]:
            if not seen[y]:
                seen[y] = True
                queue.append(y)
    return bool(seen.all())


@dataclass(frozen=True)
class WeightedGraph:
    """Finite connected weighted graph.

    Attributes
    ----------
    ids : tuple of str
        Vertex labels in the fixed ordering.
    m : ndarray
        Positive vertex measure, aligned with ``ids``.
    weights : ndarray
        Symmetric nonnegative (k, k) edge-weight matrix with zero diagonal;
        ``weights[x, y] > 0`` iff x ~ y.
    """

    ids: tuple
    m: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.m, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        object.__setattr__(self, "ids", tuple(str(i) for i in self.ids))
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "weights", w)
        k = len(self.ids)
        if len(set(self.ids)) != k:
            raise GraphFormatError("duplicate vertex ids")
        if m.shape != (k,) or w.shape != (k, k):
            raise GraphFormatError("measure/weight shapes do not match vertex count")
        if not np.all(np.isfinite(m)) or not np.all(np.isfinite(w)):
            raise GraphFormatError("non-finite graph data")
        if np.any(m <= 0):
            raise GraphFormatError("vertex measure must be positive")
        if np.any(w < 0):
            raise GraphFormatError("edge weights must be nonnegative")
        if np.any(np.diag(w) != 0):
            raise GraphFormatError("self-loops are not allowed")
        if not np.array_equal(w, w.T):
            raise GraphFormatError("weight matrix must be symmetric")
        if k > 1 and not _connected(w):
            raise GraphFormatError("graph is disconnected")
        m.setflags(write=False)
        w.setflags(write=False)

    @property
    def k(self) -> int:
        return len(self.ids)

    @cached_property
    def total_measure(self) -> float:
        return float(self.m.sum())

    @cached_property
    def lap_matrix(self) -> np.ndarray:
        """Matrix of the Laplacian acting on vertex functions (k x k)."""
        L = self.minus_lap_unit
        out = -(L / self.m[:, None])
        out.setflags(write=False)
        return out

    @cached_property
    def minus_lap_unit(self) -> np.ndarray:
        """Symmetric matrix L = D - W representing -lap for unit measure."""
        w = self.weights
        L = np.diag(w.sum(axis=1)) - w
        L.setflags(write=False)
        return L

    def check_aligned(self, u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        if u.shape != (self.k,):
            raise ValueError(f"vertex function has shape {u.shape}, expected ({self.k},)")
        if not np.all(np.isfinite(u)):
            raise ValueError("vertex function has non-finite entries")
        return u


def laplacian(g: WeightedGraph, u: np.ndarray) -> np.ndarray:
    """Pointwise Laplacian (1/m) sum_y w_xy (u(y) - u(x))."""
    u = g.check_aligned(u)
    return g.lap_matrix @ u


def gamma(g: WeightedGraph, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Carre-du-champ: (1/2m) sum_y w_xy (u(y)-u(x))(v(y)-v(x))."""
    u = g.check_aligned(u)
    v = g.check_aligned(v)
    du = u[None, :] - u[:, None]
    dv = v[None, :] - v[:, None]
    return 0.5 * (g.weights * du * dv).sum(axis=1) / g.m


def grad_norm(g: WeightedGraph, u: np.ndarray) -> np.ndarray:
    """|grad u|(x) = sqrt(gamma(u, u)(x))."""
    return np.sqrt(np.maximum(gamma(g, u, u), 0.0))


def average(g: WeightedGraph, f: np.ndarray) -> float:
    """m-weighted mean of f."""
    f = g.check_aligned(f)
    return float((g.m * f).sum() / g.total_measure)


def lp_norm(g: WeightedGraph, f: np.ndarray, p: float) -> float:
    f = g.check_aligned(f)
    if p == np.inf:
        return float(np.max(np.abs(f)))
    if p < 1:
        raise ValueError("p must be in [1, inf]")
    return float(((g.m * np.abs(f) ** p).sum()) ** (1.0 / p))


def w1p_norm(g: WeightedGraph, f: np.ndarray, p: float) -> float:
    """Sobolev norm ||f||_p + || |grad f| ||_p."""
    return lp_norm(g, f, p) + lp_norm(g, grad_norm(g, f), p)


def elliptic_constant(g: WeightedGraph) -> float:
    """A constant C with  max u - min u <= C * max |lap u|  for every u.

    Realized as twice the max-abs-row-sum of the pseudo-inverse of the
    Laplacian matrix: any u differs from pinv(lap) @ (lap u) by a constant,
    so its oscillation is bounded by twice the inf-operator norm.  Valid
    and finite on every connected graph; not claimed minimal.
    """
    pinv = np.linalg.pinv(g.lap_matrix)
    return 2.0 * float(np.abs(pinv).sum(axis=1).max())


@dataclass(frozen=True)
class LaplacianMatrix:
    """Validated symmetric matrix of -lap under unit measure."""

    values: np.ndarray

    @property
    def k(self) -> int:
        return self.values.shape[0]


def build_laplacian_matrix(g: WeightedGraph) -> LaplacianMatrix:
    """Return L = D - W, checking zero row/column sums and kernel dimension 1."""
    L = np.array(g.minus_lap_unit)
    scale = max(np.abs(L).max(), 1e-300)
    if np.abs(L.sum(axis=0)).max() > 1e-12 * scale or np.abs(L.sum(axis=1)).max() > 1e-12 * scale:
        raise AssertionError("Laplacian row/column sums are not zero")
    eig = np.linalg.eigvalsh(L)
    if eig[0] < -1e-10 * scale:
        raise AssertionError("Laplacian is not positive semidefinite")
    if g.k > 1 and not (abs(eig[0]) <= 1e-10 * eig[1] and eig[1] > 0):
        raise AssertionError("Laplacian kernel is not one-dimensional")
    L.setflags(write=False)
    return LaplacianMatrix(L)


def mean_zero_poisson_solve(g: WeightedGraph, rhs: np.ndarray) -> np.ndarray:
    """Solve lap v = rhs for the unique m-mean-zero v.

    ``rhs`` must have m-weighted sum zero (it always does when rhs = lap u).
    """
    rhs = g.check_aligned(rhs)
    if abs(float((g.m * rhs).sum())) > 1e-8 * max(1.0, np.abs(rhs).max()) * g.total_measure:
        raise ValueError("right-hand side is not m-mean-zero; no solution exists")
    v = np.linalg.lstsq(g.lap_matrix, rhs, rcond=None)[0]
    return v - average(g, v)


# ---------------------------------------------------------------------------
# constructors


def two_vertex_graph(w: float = 1.0, m=(1.0, 1.0)) -> WeightedGraph:
    return WeightedGraph(("1", "2"), np.asarray(m, dtype=float),
                         np.array([[0.0, w], [w, 0.0]]))


def path_graph(k: int, w: float = 1.0, m: float = 1.0) -> WeightedGraph:
    weights = np.zeros((k, k))
    for i in range(k - 1):
        weights[i, i + 1] = weights[i + 1, i] = w
    return WeightedGraph(tuple(str(i + 1) for i in range(k)), np.full(k, float(m)), weights)


def star_graph(leaves: int, w: float = 1.0, m: float = 1.0) -> WeightedGraph:
    k = leaves + 1
    weights = np.zeros((k, k))
    weights[0, 1:] = w
    weights[1:, 0] = w
    return WeightedGraph(tuple(str(i) for i in range(k)), np.full(k, float(m)), weights)


def random_connected_graph(rng: np.random.Generator, k: int,
                           extra_edge_prob: float = 0.3,
                           weight_range=(0.5, 2.0),
                           measure_range=(1.0, 1.0)) -> WeightedGraph:
    """Random spanning tree plus independent extra edges."""
    weights = np.zeros((k, k))
    for v in range(1, k):
        u = int(rng.integers(0, v))
        weights[u, v] = weights[v, u] = rng.uniform(*weight_range)
    for u in range(k):
        for v in range(u + 1, k):
            if weights[u, v] == 0 and rng.random() < extra_edge_prob:
                weights[u, v] = weights[v, u] = rng.uniform(*weight_range)
    m = rng.uniform(*measure_range, size=k)
    return WeightedGraph(tuple(str(i + 1) for i in range(k)), m, weights)


# ---------------------------------------------------------------------------
# file format


def graph_from_dict(data: dict) -> WeightedGraph:
    """Build a graph from the structured-text schema.

    Schema: {"vertices": [{"id", "m"}, ...], "edges": [{"u", "v", "w"}, ...]}.
    Rejects duplicate ids, conflicting duplicate edges, nonpositive m or w,
    self-loops, unknown endpoints, and disconnected graphs.
    """
    try:
        vertices = data["vertices"]
        edges = data.get("edges", [])
    except (TypeError, KeyError) as exc:
        raise GraphFormatError(f"missing graph block: {exc}") from exc
    if not vertices:
        raise GraphFormatError("graph needs at least one vertex")
    ids, ms = [], []
    for entry in vertices:
        try:
            ids.append(str(entry["id"]))
            ms.append(float(entry["m"]))
        except (TypeError, KeyError, ValueError) as exc:
            raise GraphFormatError(f"bad vertex entry {entry!r}") from exc
    if len(set(ids)) != len(ids):
        raise GraphFormatError("duplicate vertex ids")
    if any(v <= 0 or not np.isfinite(v) for v in ms):
        raise GraphFormatError("vertex measure must be positive and finite")
    index = {vid: i for i, vid in enumerate(ids)}
    k = len(ids)
    weights = np.zeros((k, k))
    seen: dict = {}
    for entry in edges:
        try:
            a, b, w = str(entry["u"]), str(entry["v"]), float(entry["w"])
        except (TypeError, KeyError, ValueError) as exc:
            raise GraphFormatError(f"bad edge entry {entry!r}") from exc
        if a not in index or b not in index:
            raise GraphFormatError(f"edge endpoint not declared: {entry!r}")
        if a == b:
            raise GraphFormatError(f"self-loop on vertex {a!r}")
        if w <= 0 or not np.isfinite(w):
            raise GraphFormatError(f"edge weight must be positive and finite: {entry!r}")
        key = frozenset((a, b))
        if key in seen and seen[key] != w:
            raise GraphFormatError(f"conflicting duplicate weights for edge {a}-{b}")
        seen[key] = w
        weights[index[a], index[b]] = weights[index[b], index[a]] = w
    try:
        return WeightedGraph(tuple(ids), np.asarray(ms), weights)
    except GraphFormatError:
        raise
    except ValueError as exc:
        raise GraphFormatError(str(exc)) from exc


def graph_to_dict(g: WeightedGraph) -> dict:
    edges = []
    for i in range(g.k):
        for j in range(i + 1, g.k):
            if g.weights[i, j] > 0:
                edges.append({"u": g.ids[i], "v": g.ids[j], "w": float(g.weights[i, j])})
    return {
        "vertices": [{"id": vid, "m": float(mv)} for vid, mv in zip(g.ids, g.m)],
        "edges": edges,
    }


def load_graph(path) -> WeightedGraph:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise GraphFormatError(f"not valid JSON: {exc}") from exc
    return graph_from_dict(data)
