"""Built-in verification matrix for the `verify` CLI command.

Each check re-derives a closed-form quantity or identity independently and
compares it against the library, printing one pass/fail row.  The quick
subset trims the slow enumeration-based rows.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, replace
from typing import Callable, List

import numpy as np

from . import apriori, existence, degree as degree_mod
from .graphs import (
    WeightedGraph,
    average,
    elliptic_constant,
    gamma,
    laplacian,
    path_graph,
    random_connected_graph,
    two_vertex_graph,
)
from .nonlinearity import (
    ExpNonlinearity,
    classify,
    degree_sign_matrix,
    functional_gradient,
    jacobian,
    normalize_f0,
    predicted_degree,
    residual,
)
from .reduction import determinant_identity_gap, lift_solution, schur_reduce
from .solver import SolverConfig, check_super, minimize_boxed, multistart_enumerate

__all__ = ["run_matrix", "VerifyRow"]


@dataclass
class VerifyRow:
    name: str
    passed: bool
    detail: str
    seconds: float


def _random_instance(g, rng, n=2, c_range=(0.2, 1.0)):
    coeffs = rng.uniform(-1.0, 1.0, size=(n, g.k))
    c = float(rng.choice([-1, 1]) * rng.uniform(*c_range))
    return ExpNonlinearity(coeffs, c)


def _check_green_identity() -> str:
    rng = np.random.default_rng(11)
    worst = 0.0
    for _ in range(20):
        g = random_connected_graph(rng, int(rng.integers(2, 7)),
                                   measure_range=(0.5, 2.0))
        u = rng.normal(size=g.k)
        v = rng.normal(size=g.k)
        lhs = float((g.m * laplacian(g, u) * v).sum())
        rhs = float((g.m * gamma(g, u, v)).sum())
        scale = max(1.0, abs(lhs), abs(rhs))
        worst = max(worst, abs(lhs + rhs) / scale)
    assert worst <= 1e-10, f"worst gap {worst:.3e}"
    return f"worst relative gap {worst:.2e}"


def _check_elliptic_constant() -> str:
    rng = np.random.default_rng(12)
    for _ in range(3):
        g = random_connected_graph(rng, int(rng.integers(2, 6)))
        C = elliptic_constant(g)
        U = rng.normal(size=(1000, g.k)) * 5
        lap = U @ g.lap_matrix.T
        osc = U.max(axis=1) - U.min(axis=1)
        bound = C * np.abs(lap).max(axis=1)
        assert np.all(osc <= bound * (1 + 1e-9) + 1e-12), "oscillation bound violated"
    return "0 violations on 3x1000 samples"


def _check_derivatives() -> str:
    rng = np.random.default_rng(13)
    worst_j = worst_g = 0.0
    for _ in range(20):
        g = random_connected_graph(rng, int(rng.integers(2, 6)),
                                   measure_range=(0.5, 2.0))
        eq = _random_instance(g, rng)
        u = rng.uniform(-1, 1, size=g.k)
        J = jacobian(g, eq, u)
        h = 1e-6
        for j in range(g.k):
            e = np.zeros(g.k)
            e[j] = h
            col = (residual(g, eq, u + e) - residual(g, eq, u - e)) / (2 * h)
            worst_j = max(worst_j, float(np.abs(J[:, j] - col).max()))
        grad = functional_gradient(g, eq, u)
        from .nonlinearity import functional

        for j in range(g.k):
            e = np.zeros(g.k)
            e[j] = h
            fd = (functional(g, eq, u + e) - functional(g, eq, u - e)) / (2 * h)
            worst_g = max(worst_g, abs(grad[j] - fd) / max(1.0, abs(fd)))
    assert worst_j <= 1e-5 and worst_g <= 1e-5, f"{worst_j:.2e}/{worst_g:.2e}"
    return f"jacobian gap {worst_j:.2e}, gradient gap {worst_g:.2e}"


def _check_elimination() -> str:
    rng = np.random.default_rng(14)
    worst = 0.0
    for _ in range(10):
        g = random_connected_graph(rng, 6, measure_range=(0.5, 2.0))
        coeffs = rng.uniform(-1, 1, size=(2, 6))
        coeffs[:, [1, 4]] = 0.0
        eq = ExpNonlinearity(coeffs, float(rng.uniform(-1, 1)))
        rs = schur_reduce(g, eq)
        for _ in range(5):
            worst = max(worst, determinant_identity_gap(rs, rng.uniform(-2, 2, 6)))
    assert worst <= 1e-8, f"worst determinant gap {worst:.3e}"
    return f"worst determinant gap {worst:.2e}"


def _check_series_weight() -> str:
    g = path_graph(3)
    eq = ExpNonlinearity(np.array([[1.0, 0.0, -1.0]]), -0.4)
    rs = schur_reduce(g, eq)
    got = float(rs.graph.weights[0, 1])
    assert abs(got - 0.5) < 1e-14, f"series weight {got}"
    sols = multistart_enumerate(rs.graph, rs.eq, SolverConfig(budget=80, seed=1))
    assert len(sols) >= 1
    worst = max(float(np.abs(residual(g, eq, lift_solution(rs, s.u))).max())
                for s in sols)
    assert worst <= 1e-8, f"lift residual {worst:.3e}"
    return f"series weight 0.5, lift residual {worst:.2e}"


def _check_degree_table(quick: bool) -> str:
    rng = np.random.default_rng(15)
    per_row = 1 if quick else 2
    budget = 150 if quick else 300
    checked = 0
    for row in apriori.DEGREE_TABLE_ROWS:
        for _ in range(per_row):
            k = int(rng.integers(2, 5))
            g = random_connected_graph(rng, k)
            n = int(rng.integers(2, 4)) if row == "q_finite_c0_f1pos" \
                else int(rng.integers(1, 4))
            eq = apriori.sample_degree_table_instance(g, rng, row, n)
            rep = degree_mod.empirical_degree(g, eq, SolverConfig(budget=budget,
                                                                  seed=17))
            if rep.certified:
                assert rep.empirical == rep.predicted, \
                    f"{row}: empirical {rep.empirical} vs predicted {rep.predicted}"
                checked += 1
    assert checked >= 4, "too few certified runs"
    return f"{checked} certified runs match the sign table"


def _check_two_vertex_families() -> str:
    for kind, eps in (("ex34", 0.1), ("ex35", 0.1), ("ex36", 0.1)):
        seq = apriori.blowup_family(kind, [eps])
        sol = seq.solutions[0][0]
        assert sol.certified, f"{kind} oracle solution failed to certify"
        worst = float(np.abs(residual(seq.graph, seq.eqs[0], sol.u)).max())
        assert worst <= 1e-10, f"{kind} residual {worst:.2e}"
    return "families ex34/ex35/ex36 reproduce their scalar identities"


def _check_large_gap_family() -> str:
    seq = apriori.blowup_family("ex53", [100.0, 0.1], a=2.0, b=1.0)
    assert seq.verdicts[0].startswith("no-solution-certified"), seq.verdicts[0]
    assert seq.verdicts[1] == "solutions-found" and seq.solutions[1]
    return "certified gap at K=100, solvable at K=0.1"


def _check_threshold_bound() -> str:
    g = two_vertex_graph()
    eq = ExpNonlinearity(np.array([[-0.3, 1.1], [0.0, -2.0]]), 0.0)
    est = existence.estimate_cn(g, eq, SolverConfig(budget=200, seed=3),
                                probe_budget=120)
    assert est.upper_bound is not None
    assert est.value <= est.upper_bound + 1e-6
    beyond = existence.with_constant(eq, -(est.upper_bound * 1.0 + 1e-6))
    assert existence.nonexistence_check(g, beyond).certified
    return f"threshold {est.value:.4f} <= closed-form bound {est.upper_bound:.4f}"


def _check_barrier_pipeline() -> str:
    rng = np.random.default_rng(16)
    g = path_graph(3)
    f2 = np.array([0.6, -0.3, 0.1])
    f1 = rng.uniform(-1.5, -0.5, 3)
    eq = ExpNonlinearity(np.vstack([f1, f2]), 0.0)
    cert = existence.build_small_c_supersolution(g, eq)
    c = 0.5 * cert.c_edge
    eqc = existence.with_constant(eq, c)
    assert check_super(g, eqc, cert.phi)
    sol = minimize_boxed(g, eqc, np.full(3, -12.0), cert.phi, SolverConfig())
    assert sol.residual_norm <= 1e-10
    half = minimize_boxed(g, existence.with_constant(eq, c / 2),
                          np.full(3, -12.0), sol.u, SolverConfig())
    assert half.residual_norm <= 1e-10
    return "barrier solves at c and at c/2"


def _check_aux_source_identity() -> str:
    rng = np.random.default_rng(17)
    for _ in range(5):
        g = random_connected_graph(rng, int(rng.integers(2, 6)))
        f1 = rng.uniform(-1, 1, g.k)
        f1[int(rng.integers(g.k))] = rng.uniform(0.2, 1.0)
        H = existence.kw_source_from_f1(g, f1)
        got = float((g.m * H).sum())
        want = -0.5 * float(f1.max())
        assert abs(got - want) <= 1e-12 * max(1.0, abs(want)), f"{got} vs {want}"
    return "m-weighted sum equals -max(f_1)/2 exactly"


def _check_homotopy(quick: bool) -> str:
    g = path_graph(4)
    rng = np.random.default_rng(18)
    f2 = rng.uniform(-0.5, 0.5, 4)
    f2[2] = 0.9
    f1 = rng.uniform(-0.5, 0.5, 4)
    eq = ExpNonlinearity(np.vstack([f1, f2]), -0.7)
    path = degree_mod.canonical_homotopy(g, eq)
    samples = 5 if quick else 17
    track = degree_mod.track_homotopy(path, SolverConfig(budget=200, seed=19),
                                      samples=samples)
    assert track.constancy == "constant", track.constancy
    degs = {r.empirical for r in track.reports}
    assert degs == {-1}, degs
    return f"degree -1 constant over {len(track.reports)} samples"


def _check_unique_zero_endpoint() -> str:
    g = path_graph(3)
    eq = ExpNonlinearity(np.array([[1.0, 1.0, 1.0], [-1.0, -1.0, -1.0]]), 0.0)
    sols = multistart_enumerate(g, eq, SolverConfig(budget=150, seed=20))
    assert len(sols) == 1
    assert float(np.abs(sols.solutions[0].u).max()) <= 1e-9
    S = degree_sign_matrix(g, eq, sols.solutions[0].u)
    assert np.all(np.linalg.eigvalsh(S) > 0)
    return "unique zero solution, positive-definite sign matrix"


def _check_normalization_roundtrip() -> str:
    rng = np.random.default_rng(21)
    g = random_connected_graph(rng, 4, measure_range=(0.5, 2.0))
    eq = _random_instance(g, rng)
    f0 = rng.uniform(-1, 1, 4)
    eq2, v = normalize_f0(g, eq, f0)
    sols = multistart_enumerate(g, eq2, SolverConfig(budget=200, seed=22))
    base = ExpNonlinearity(eq.coeffs, eq.c, f0)
    for s in sols:
        worst = float(np.abs(residual(g, base, s.u + v)).max())
        assert worst <= 1e-9, f"lifted residual {worst:.2e}"
    return f"{len(sols)} solutions lift with residual <= 1e-9"


def _check_trichotomy() -> str:
    seq = apriori.blowup_family("ex34", [1e-1, 1e-2, 1e-3, 1e-4])
    verdict = apriori.classify_trichotomy(seq)
    assert verdict == "to-minus-infinity", verdict
    return "shrinking-parameter family diverges to -inf"


def _check_nonexistence_soundness() -> str:
    rng = np.random.default_rng(23)
    for _ in range(6):
        g = random_connected_graph(rng, int(rng.integers(2, 5)))
        eq = _random_instance(g, rng)
        verdict = existence.nonexistence_check(g, eq)
        if verdict.certified:
            sols = multistart_enumerate(g, eq, SolverConfig(budget=150, seed=24))
            assert not len(sols), "certified nonexistence but a solution was found"
    return "no certified verdict contradicted by enumeration"


def run_matrix(quick: bool = False) -> List[VerifyRow]:
    checks: List = [
        ("green-identity", _check_green_identity),
        ("elliptic-constant", _check_elliptic_constant),
        ("derivative-consistency", _check_derivatives),
        ("elimination-determinant", _check_elimination),
        ("elimination-series-lift", _check_series_weight),
        ("degree-table", lambda: _check_degree_table(quick)),
        ("two-vertex-families", _check_two_vertex_families),
        ("large-gap-family", _check_large_gap_family),
        ("threshold-bound", _check_threshold_bound),
        ("barrier-pipeline", _check_barrier_pipeline),
        ("aux-source-identity", _check_aux_source_identity),
        ("homotopy-constancy", lambda: _check_homotopy(quick)),
        ("unique-zero-endpoint", _check_unique_zero_endpoint),
        ("normalization-roundtrip", _check_normalization_roundtrip),
        ("trichotomy", _check_trichotomy),
        ("nonexistence-soundness", _check_nonexistence_soundness),
    ]
    if quick:
        skip = {"threshold-bound", "normalization-roundtrip"}
        checks = [c for c in checks if c[0] not in skip]
    rows: List[VerifyRow] = []
    for name, fn in checks:
        start = time.perf_counter()
        try:
            detail = fn()
            rows.append(VerifyRow(name, True, detail, time.perf_counter() - start))
        except AssertionError as exc:
            rows.append(VerifyRow(name, False, str(exc), time.perf_counter() - start))
        except Exception as exc:  # surfaced in the matrix, not swallowed
            rows.append(VerifyRow(name, False, f"{type(exc).__name__}: {exc}",
                                  time.perf_counter() - start))
    return rows
