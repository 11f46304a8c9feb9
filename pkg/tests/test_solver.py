import numpy as np
import pytest

from expgraph.graphs import path_graph, random_connected_graph, two_vertex_graph
from expgraph.nonlinearity import ExpNonlinearity, residual
from expgraph.solver import (
    BoxMinimizeError,
    ConfigError,
    SolverConfig,
    check_ordered_pair,
    check_sub,
    check_super,
    minimize_boxed,
    multistart_enumerate,
    newton_solve,
)
from expgraph.existence import with_constant


def grid_sign_scan_count(g, eq, lo=-10.0, hi=5.0, cells=200):
    """Independent two-vertex root count: cells where both residual
    components change sign, merged into connected clusters."""
    assert g.k == 2
    axis = np.linspace(lo, hi, cells + 1)
    U1, U2 = np.meshgrid(axis, axis, indexing="ij")
    R1 = np.empty_like(U1)
    R2 = np.empty_like(U2)
    w = g.weights[0, 1]
    zero = eq.zero_order()
    for (i, j), u1 in np.ndenumerate(U1):
        u2 = U2[i, j]
        z = np.exp(np.arange(1, eq.n + 1) * u1)
        wv = np.exp(np.arange(1, eq.n + 1) * u2)
        R1[i, j] = (w / g.m[0]) * (u2 - u1) + float(eq.coeffs[:, 0] @ z) + zero[0]
        R2[i, j] = (w / g.m[1]) * (u1 - u2) + float(eq.coeffs[:, 1] @ wv) + zero[1]
    crossing = np.zeros((cells, cells), dtype=bool)
    for i in range(cells):
        for j in range(cells):
            c1 = R1[i:i + 2, j:j + 2]
            c2 = R2[i:i + 2, j:j + 2]
            crossing[i, j] = (c1.min() < 0 < c1.max()) and (c2.min() < 0 < c2.max())
    # merge crossing cells within a 3-cell window: fragments of one root
    # region coalesce while genuinely distinct roots stay far apart
    seen = np.zeros_like(crossing)
    count = 0
    reach = 3
    for i in range(cells):
        for j in range(cells):
            if crossing[i, j] and not seen[i, j]:
                count += 1
                stack = [(i, j)]
                seen[i, j] = True
                while stack:
                    a, b = stack.pop()
                    for da in range(-reach, reach + 1):
                        for db in range(-reach, reach + 1):
                            x, y = a + da, b + db
                            if 0 <= x < cells and 0 <= y < cells \
                                    and crossing[x, y] and not seen[x, y]:
                                seen[x, y] = True
                                stack.append((x, y))
    return count


class TestNewton:
    def test_linear_case_single_step(self, path3, rng):
        eq = ExpNonlinearity(np.zeros((1, 3)), 0.0)
        u0 = rng.normal(size=3)
        sol = newton_solve(path3, eq, u0, SolverConfig())
        assert sol is not None
        assert np.ptp(sol.u) <= 1e-10  # lands on a constant

    def test_balanced_double_exponential_equation(self, path3):
        # -lap u = -e^{2u} + e^u has the unique solution u = 0
        eq = ExpNonlinearity(np.array([[1.0, 1.0, 1.0], [-1.0, -1.0, -1.0]]), 0.0)
        sol = newton_solve(path3, eq, np.full(3, 0.3), SolverConfig())
        assert sol is not None and sol.certified
        assert np.abs(sol.u).max() <= 1e-9

    def test_two_vertex_gap_family_small_K(self, two_vertex):
        # f2 = (0, -K), f1 = (-a, b): solutions parametrized by the gap
        # t = u2 - u1 solving (K/a) t = (b e^t - a) e^{-2t}
        from expgraph.apriori import bisect_root

        K, a, b = 0.1, 2.0, 1.0

        def gap(t):
            return (K / a) * t - (b * np.exp(t) - a) * np.exp(-2 * t)

        t = bisect_root(gap, 0.7, 1.6, tol=1e-12)
        x = np.log(t / a)
        eq = ExpNonlinearity(np.array([[-a, b], [0.0, -K]]), 0.0)
        sol = newton_solve(two_vertex, eq, np.array([x + 0.01, x + t - 0.01]),
                           SolverConfig())
        assert sol is not None
        assert np.abs(sol.u - [x, x + t]).max() <= 1e-8

    def test_no_convergence_returns_none(self, two_vertex):
        # growth limit +inf with c > 0: no roots anywhere
        eq = ExpNonlinearity(np.array([[1.0, 1.0]]), 0.5)
        assert newton_solve(two_vertex, eq, np.zeros(2), SolverConfig(max_iter=40)) is None

    def test_deterministic(self, path3, rng):
        eq = ExpNonlinearity(rng.uniform(-1, 1, (2, 3)), -0.5)
        u0 = rng.normal(size=3)
        a = newton_solve(path3, eq, u0, SolverConfig())
        b = newton_solve(path3, eq, u0, SolverConfig())
        if a is None:
            assert b is None
        else:
            assert np.array_equal(a.u, b.u)


class TestMultistart:
    def canonical_bump(self, c):
        return ExpNonlinearity(np.array([[0.0, 0.0], [1.0, 0.0]]), c)

    def test_positive_constant_empty(self, two_vertex):
        sols = multistart_enumerate(two_vertex, self.canonical_bump(0.8),
                                    SolverConfig(budget=120, seed=0))
        assert len(sols) == 0
        assert sols.exhaustive

    def test_negative_constant_unique(self, two_vertex):
        sols = multistart_enumerate(two_vertex, self.canonical_bump(-0.8),
                                    SolverConfig(budget=120, seed=0))
        assert len(sols) == 1
        assert sols.solutions[0].jac_sign == -1

    def test_engineered_multiplicity_matches_grid(self, two_vertex):
        # nonpositive quadratic with sign-mixed linear part, moderate c < 0
        eq = ExpNonlinearity(np.array([[-0.3, 1.5], [0.0, -0.5]]), -0.3)
        sols = multistart_enumerate(two_vertex, eq, SolverConfig(budget=300, seed=1))
        assert len(sols) == grid_sign_scan_count(two_vertex, eq) == 2

    def test_three_solution_instance(self, two_vertex):
        # constant coefficient with c well below the fold: the constant
        # solution plus a symmetric pair
        eq = ExpNonlinearity(np.array([[1.0, 1.0]]), -3.0)
        sols = multistart_enumerate(two_vertex, eq, SolverConfig(budget=300, seed=2))
        assert len(sols) == 3
        assert sum(s.jac_sign for s in sols) == -1

    def test_deterministic_per_seed(self, path3, rng):
        eq = ExpNonlinearity(rng.uniform(-1, 1, (2, 3)), -0.4)
        cfg = SolverConfig(budget=150, seed=9)
        a = multistart_enumerate(path3, eq, cfg)
        b = multistart_enumerate(path3, eq, cfg)
        assert len(a) == len(b)
        for sa, sb in zip(a, b):
            assert np.array_equal(sa.u, sb.u)

    def test_solutions_are_newton_fixed_points(self, path3, rng):
        eq = ExpNonlinearity(rng.uniform(-1, 1, (2, 3)), -0.4)
        sols = multistart_enumerate(path3, eq, SolverConfig(budget=150, seed=9))
        for s in sols:
            again = newton_solve(path3, eq, s.u, SolverConfig())
            assert again is not None
            assert np.abs(again.u - s.u).max() <= 1e-9

    def test_residuals_reverified_independently(self, path3, rng):
        eq = ExpNonlinearity(rng.uniform(-1, 1, (2, 3)), 0.6)
        cfg = SolverConfig(budget=150, seed=11)
        for s in multistart_enumerate(path3, eq, cfg):
            assert np.abs(residual(path3, eq, s.u)).max() <= cfg.tol

    def test_pairwise_distinct(self, two_vertex):
        eq = ExpNonlinearity(np.array([[1.0, 1.0]]), -3.0)
        cfg = SolverConfig(budget=300, seed=2)
        sols = multistart_enumerate(two_vertex, eq, cfg)
        for i, a in enumerate(sols):
            for b in sols.solutions[i + 1:]:
                assert np.abs(a.u - b.u).max() >= cfg.deflation_radius


class TestConfig:
    def test_invalid_rejected(self):
        with pytest.raises(ConfigError):
            SolverConfig(tol=-1)
        with pytest.raises(ConfigError):
            SolverConfig(deflation_radius=30.0, box_radius=20.0)
        with pytest.raises(ConfigError):
            SolverConfig(damping=1.5)


class TestBarrierChecks:
    def test_exact_solution_is_both(self, two_vertex):
        eq = ExpNonlinearity(np.array([[-1.0, -1.0]]), 1.0)
        u = np.zeros(2)
        assert check_sub(two_vertex, eq, u)
        assert check_super(two_vertex, eq, u)
        assert check_ordered_pair(two_vertex, eq, u, u)

    def test_constant_barriers_all_nonpositive_case(self, path3):
        # every coefficient nonpositive, c > 0: very negative constants are
        # subsolutions, very positive ones supersolutions
        eq = ExpNonlinearity(np.array([[-0.5, -0.1, -0.4], [-1.0, -0.2, 0.0]]), 0.7)
        assert check_sub(path3, eq, np.full(3, -9.0))
        assert check_super(path3, eq, np.full(3, 9.0))
        assert check_ordered_pair(path3, eq, np.full(3, -9.0), np.full(3, 9.0))


class TestMinimizeBoxed:
    def test_exact_pair_returned_unchanged(self, two_vertex):
        eq = ExpNonlinearity(np.array([[-1.0, -1.0]]), 1.0)
        u = np.zeros(2)
        sol = minimize_boxed(two_vertex, eq, u, u, SolverConfig())
        assert np.allclose(sol.u, u)

    def test_rejects_bad_pair(self, two_vertex):
        eq = ExpNonlinearity(np.array([[1.0, 1.0]]), 0.5)
        with pytest.raises(ValueError):
            minimize_boxed(two_vertex, eq, np.zeros(2), np.ones(2), SolverConfig())

    def test_randomized_pairs_always_solve(self, rng):
        # all-nonpositive coefficients with c > 0 admit constant-ish barrier
        # pairs; whenever the pair checks out, the boxed minimizer must
        # return a residual-zero point inside the box
        hits = attempts = 0
        while hits < 100 and attempts < 500:
            attempts += 1
            k = int(rng.integers(2, 5))
            g = random_connected_graph(rng, k, measure_range=(0.5, 2.0))
            coeffs = -rng.uniform(0.05, 1.0, size=(2, k))
            eq = ExpNonlinearity(coeffs, float(rng.uniform(0.2, 1.5)))
            lo = np.full(k, -12.0) + rng.uniform(-0.5, 0.5, k)
            hi = np.full(k, 9.0) + rng.uniform(-0.5, 0.5, k)
            if not check_ordered_pair(g, eq, lo, hi):
                continue
            sol = minimize_boxed(g, eq, lo, hi, SolverConfig())
            assert sol.residual_norm <= 1e-10
            assert np.all(sol.u >= lo - 1e-12) and np.all(sol.u <= hi + 1e-12)
            hits += 1
        assert hits >= 100

    def test_inherited_supersolution_from_larger_c(self, two_vertex):
        # a solution at c1 > 0 is a supersolution for 0 < c2 < c1 in the
        # growth-limit-infinite regime
        eq1 = self_adjoint = ExpNonlinearity(np.array([[0.3, -1.2], [0.6, -0.4]]), 0.0)
        from expgraph.existence import build_small_c_supersolution

        cert = build_small_c_supersolution(two_vertex, eq1)
        c1 = cert.c_edge
        sol1 = minimize_boxed(two_vertex, with_constant(eq1, c1),
                              np.full(2, -12.0), cert.phi, SolverConfig())
        c2 = 0.5 * c1
        eq2 = with_constant(eq1, c2)
        assert check_super(two_vertex, eq2, sol1.u)
        sol2 = minimize_boxed(two_vertex, eq2, np.full(2, -12.0), sol1.u,
                              SolverConfig())
        assert sol2.residual_norm <= 1e-10
