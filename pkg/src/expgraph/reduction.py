"""Vertex elimination by Schur complement.

Vertices where every f_i vanishes (i >= 1) carry a linear equation and can
be eliminated: with L = [[P, Q^T], [Q, R]] in kept/removed block order, the
reduced operator is Ltilde = P - Q^T R^{-1} Q, which is again the matrix of
-lap for a connected weighted graph on the kept vertices.  Coefficients
restrict; the zeroth-order source is transported with total m-weighted sum
preserved; solutions and the Brouwer degree are preserved, the latter
because det(L - diag(m g)) = det R * det(Ltilde - diag(m g)) with det R > 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .graphs import WeightedGraph, _connected
from .nonlinearity import ExpNonlinearity, degree_sign_matrix

__all__ = [
    "InvariantError",
    "Partition",
    "ReducedSystem",
    "partition",
    "schur_reduce",
    "lift_solution",
    "determinant_identity_gap",
]

# reduced weights below this relative size are floating-point fill
WEIGHT_SNAP_RTOL = 1e-12


class InvariantError(RuntimeError):
    """A structural invariant failed; indicates corrupt input data."""


@dataclass(frozen=True)
class Partition:
    """Indices kept (some f_i nonzero) and removed (all f_i zero)."""

    kept: tuple
    removed: tuple


def partition(g: WeightedGraph, eq: ExpNonlinearity) -> Partition:
    """Split vertices by whether every coefficient f_1..f_n vanishes."""
    eq.check_aligned(g)
    zero = ~eq.coeffs.any(axis=0)
    removed = tuple(int(i) for i in np.nonzero(zero)[0])
    kept = tuple(int(i) for i in np.nonzero(~zero)[0])
    if not kept:
        raise ValueError("every vertex is linear; nothing to reduce onto")
    return Partition(kept, removed)


@dataclass(frozen=True)
class ReducedSystem:
    """Result of eliminating the removed vertices.

    ``graph``/``eq`` describe the reduced equation (its zeroth-order term
    lives in ``eq.f0``; ``eq.c`` is 0).  The blocks Q, R and the removed
    source are retained for lifting reduced solutions back.
    """

    parent: WeightedGraph
    part: Partition
    graph: WeightedGraph
    eq: ExpNonlinearity
    Q: np.ndarray
    R: np.ndarray
    source_removed: np.ndarray  # m * (c + f0) on removed vertices

    @property
    def f0_tilde(self) -> np.ndarray:
        return self.eq.f0


def _reduced_weights(Ltilde: np.ndarray) -> np.ndarray:
    k = Ltilde.shape[0]
    w = -np.array(Ltilde)
    np.fill_diagonal(w, 0.0)
    w = 0.5 * (w + w.T)  # symmetrize roundoff
    snap = WEIGHT_SNAP_RTOL * max(np.abs(w).max(), 1e-300)
    if np.any(w < -snap):
        raise InvariantError("reduced off-diagonal weight is negative beyond tolerance")
    w[np.abs(w) <= snap] = 0.0
    w[w < 0] = 0.0
    return w


def schur_reduce(g: WeightedGraph, eq: ExpNonlinearity,
                 f0: Optional[np.ndarray] = None,
                 removed: Optional[Sequence[int]] = None) -> ReducedSystem:
    """Eliminate linear vertices from -lap u = sum f_i e^{iu} + c + f0.

    ``removed`` defaults to every all-zero-coefficient vertex; a subset of
    those may be passed instead (the elimination only needs the removed
    block to be coefficient-free).  The measure normalization multiplies
    each equation through by m, so the blocks P, Q, R come from the unit
    Laplacian matrix L.
    """
    eq.check_aligned(g)
    if f0 is None:
        f0 = eq.f0 if eq.f0 is not None else np.zeros(g.k)
    f0 = g.check_aligned(f0)
    if removed is None:
        part = partition(g, eq)
    else:
        removed = tuple(int(i) for i in removed)
        if any(eq.coeffs[:, i].any() for i in removed):
            raise ValueError("removed set contains a vertex with a nonzero coefficient")
        kept = tuple(i for i in range(g.k) if i not in set(removed))
        if not kept:
            raise ValueError("cannot remove every vertex")
        part = Partition(kept, removed)
    if not part.removed:
        raise ValueError("no removable vertices; reduction is the identity")

    kept = list(part.kept)
    rem = list(part.removed)
    L = g.minus_lap_unit
    P = L[np.ix_(kept, kept)]
    Q = L[np.ix_(rem, kept)]
    R = L[np.ix_(rem, rem)]

    eig_min = float(np.linalg.eigvalsh(R).min())
    if eig_min <= 0:
        raise InvariantError("removed-block matrix is not positive definite")

    source_full = g.m * (eq.c + f0)
    h2 = source_full[rem]
    # factor-and-solve throughout; R^{-1} is only formed for the entrywise
    # nonnegativity probe on small removed sets
    QtRinvQ = Q.T @ np.linalg.solve(R, Q)
    Ltilde = P - QtRinvQ
    if len(rem) <= 50:
        Rinv = np.linalg.inv(R)
        if Rinv.min() < -1e-12 * max(np.abs(Rinv).max(), 1e-300):
            raise InvariantError("inverse of removed block has a negative entry")
        colsums = (Q.T @ Rinv).sum(axis=0)
        if np.abs(colsums + 1.0).max() > 1e-10 * max(1.0, np.abs(Rinv).max() * np.abs(Q).max()):
            raise InvariantError("column sums of Q^T R^{-1} deviate from -1")

    # row sums vanish exactly in exact arithmetic; measure roundoff against
    # the parent operator (the reduced one may be arbitrarily small, e.g. a
    # single kept vertex has the zero operator)
    scale = max(np.abs(L).max(), 1.0)
    if np.abs(Ltilde.sum(axis=1)).max() > 1e-10 * scale:
        raise InvariantError("reduced operator has nonzero row sums")

    weights = _reduced_weights(Ltilde)
    m_kept = g.m[kept]
    if len(kept) > 1 and not _connected(weights):
        raise InvariantError("reduced graph is disconnected")
    graph = WeightedGraph(tuple(g.ids[i] for i in kept), m_kept, weights)

    f0_tilde = (source_full[kept] - Q.T @ np.linalg.solve(R, h2)) / m_kept
    total_before = float(source_full.sum())
    total_after = float((m_kept * f0_tilde).sum())
    if abs(total_after - total_before) > 1e-10 * max(1.0, abs(total_before)):
        raise InvariantError("transported source does not conserve the m-weighted sum")

    eq_red = ExpNonlinearity(eq.coeffs[:, kept], 0.0, f0_tilde)
    return ReducedSystem(g, part, graph, eq_red, Q, R, h2)


def lift_solution(rs: ReducedSystem, u1: np.ndarray) -> np.ndarray:
    """Extend a reduced solution to the parent graph: U2 = R^{-1}(H2 - Q U1)."""
    u1 = rs.graph.check_aligned(u1)
    u2 = np.linalg.solve(rs.R, rs.source_removed - rs.Q @ u1)
    full = np.empty(rs.parent.k)
    full[list(rs.part.kept)] = u1
    full[list(rs.part.removed)] = u2
    return full


def determinant_identity_gap(rs: ReducedSystem, u_full: np.ndarray) -> float:
    """Relative gap in det(L - diag(m g)) = det R * det(Ltilde - diag(m g)).

    ``u_full`` is any vertex function on the parent graph (the removed
    entries do not enter: their coefficient gains vanish identically).
    """
    g = rs.parent
    u_full = g.check_aligned(u_full)
    eq_full = ExpNonlinearity(_expand_coeffs(rs), 0.0)
    S_full = degree_sign_matrix(g, eq_full, u_full)
    S_red = degree_sign_matrix(rs.graph, rs.eq, u_full[list(rs.part.kept)])
    lhs = np.linalg.det(S_full)
    rhs = np.linalg.det(rs.R) * np.linalg.det(S_red)
    scale = max(abs(lhs), abs(rhs), 1e-300)
    return abs(lhs - rhs) / scale


def _expand_coeffs(rs: ReducedSystem) -> np.ndarray:
    coeffs = np.zeros((rs.eq.n, rs.parent.k))
    coeffs[:, list(rs.part.kept)] = rs.eq.coeffs
    return coeffs
