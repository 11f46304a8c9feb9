"""Executable a-priori theory: the bounded/minus-infinity/plus-infinity
trichotomy for parametrized instance families, boundedness-hypothesis
checking, two-vertex blow-up and nonexistence families with scalar
oracles, and empirical boundedness sweeps.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, List, Optional, Sequence

import numpy as np

from .graphs import WeightedGraph, average, elliptic_constant, two_vertex_graph
from .nonlinearity import ExpNonlinearity, f1bar_is_zero, leading_profile
from .solver import Solution, SolverConfig, multistart_enumerate, newton_solve
from .existence import nonexistence_check

__all__ = [
    "HypothesisReport",
    "check_bound_hypothesis",
    "ParamSequence",
    "classify_trichotomy",
    "blowup_family",
    "SweepReport",
    "empirical_boundedness_sweep",
    "sample_hypothesis_instance",
    "sample_degree_table_instance",
    "DEGREE_TABLE_ROWS",
    "bisect_root",
]


# ---------------------------------------------------------------------------
# boundedness hypothesis


@dataclass(frozen=True)
class HypothesisReport:
    """Outcome of the a-priori boundedness hypothesis at level K.

    branch "i" needs the leading coefficient >= 1/K at the witness; branch
    "ii" needs it <= -1/K there, with every vertex either all-nonpositive
    or leading <= -1/K.  For n = 2 the refined condition label in
    {a, b, c} is attached when one applies.
    """

    ok: bool
    K: float
    witness: Optional[int] = None
    branch: Optional[str] = None
    n2_condition: Optional[str] = None
    reason: Optional[str] = None


def _auto_K(g, eq) -> Optional[float]:
    need = float(np.abs(eq.coeffs).max(axis=1).sum()) + abs(eq.c)
    if eq.c != 0:
        need = max(need, 1.0 / abs(eq.c))
    else:
        f1bar = abs(average(g, eq.coeff(1)))
        if f1bar_is_zero(g, eq):
            return None
        need = max(need, 1.0 / f1bar)
    lead = leading_profile(eq).leading
    pos = lead[lead > 0]
    if pos.size:
        need = max(need, 1.0 / pos.max())
    else:
        neg = lead[lead < 0]
        if neg.size:
            need = max(need, 1.0 / (-neg).max())
    return need * (1 + 1e-9)


def check_bound_hypothesis(g: WeightedGraph, eq: ExpNonlinearity,
                           K: Optional[float] = None) -> HypothesisReport:
    """Check the uniform-boundedness hypothesis; K defaults to the smallest
    level at which the size constraints can possibly hold."""
    eq.check_aligned(g)
    if eq.f0 is not None:
        return HypothesisReport(False, K or 0.0,
                                reason="non-constant source; normalize first")
    if K is None:
        K = _auto_K(g, eq)
        if K is None:
            return HypothesisReport(False, 0.0,
                                    reason="c = 0 with vanishing mean of f_1")
    if K <= 0:
        raise ValueError("K must be positive")
    sums = float(np.abs(eq.coeffs).max(axis=1).sum()) + abs(eq.c)
    if sums > K * (1 + 1e-12):
        return HypothesisReport(False, K,
                                reason=f"coefficient size {sums:.6g} exceeds K")
    inv = 1.0 / K
    if eq.c != 0:
        if abs(eq.c) < inv / (1 + 1e-12):
            return HypothesisReport(False, K, reason="|c| below 1/K")
    else:
        if abs(average(g, eq.coeff(1))) < inv / (1 + 1e-12):
            return HypothesisReport(False, K,
                                    reason="c = 0 and |mean f_1| below 1/K")
    lead = leading_profile(eq).leading
    tol = inv / (1 + 1e-12)
    branch = witness = None
    if np.any(lead >= tol):
        branch, witness = "i", int(np.argmax(lead))
    else:
        ok_vertices = np.all(eq.coeffs <= 0, axis=0) | (lead <= -tol)
        if np.any(lead <= -tol) and bool(ok_vertices.all()):
            branch, witness = "ii", int(np.argmin(lead))
    if branch is None:
        return HypothesisReport(False, K,
                                reason="no witness vertex satisfies either branch")
    n2 = None
    if eq.n == 2:
        f2, f1 = eq.coeff(2), eq.coeff(1)
        if f2[witness] >= tol:
            n2 = "a"
        elif np.all(f2 <= 0) and np.any((f2 == 0) & (f1 >= tol)):
            n2 = "b"
            witness = int(np.nonzero((f2 == 0) & (f1 >= tol))[0][0])
        elif branch == "ii":
            n2 = "c"
    return HypothesisReport(True, K, witness, branch, n2)


# ---------------------------------------------------------------------------
# parametrized families and the trichotomy


@dataclass(frozen=True)
class ParamSequence:
    """Instances indexed by a positive parameter, with solutions or verdicts."""

    graph: WeightedGraph
    params: tuple
    eqs: tuple
    solutions: tuple   # per instance: tuple of Solution (possibly empty)
    verdicts: tuple    # per instance: str or None
    limit_eq: Optional[ExpNonlinearity]


def classify_trichotomy(seq: ParamSequence) -> str:
    """Tail behaviour of a solution family: one of "bounded",
    "to-minus-infinity", "to-plus-infinity", "undecided".

    The bounded verdict needs every solution inside a threshold ball whose
    radius adds the elliptic-estimate oscillation bound to a fixed margin;
    the divergent verdicts need the extreme values to move past a margin
    of twice the log of the parameter ratio.  Short or indecisive
    sequences stay undecided.
    """
    usable = [(p, sols[0].u) for p, sols in zip(seq.params, seq.solutions) if sols]
    if len(usable) < 4:
        return "undecided"
    params = np.array([p for p, _ in usable], dtype=float)
    us = [u for _, u in usable]
    g = seq.graph
    if np.all(params > 0) and params[0] != params[-1]:
        margin = max(2.0, 2.0 * abs(float(np.log10(params[0] / params[-1]))))
    else:
        margin = max(2.0, 2.0 * np.log(len(usable)))
    hi = np.array([float(u.max()) for u in us])
    lo = np.array([float(u.min()) for u in us])
    if hi[-1] <= -margin and hi[0] - hi[-1] >= margin:
        return "to-minus-infinity"
    if lo[-1] >= margin and lo[-1] - lo[0] >= margin:
        return "to-plus-infinity"
    lap_scale = max(float(np.abs(g.lap_matrix @ u).max()) for u in us)
    threshold = 10.0 + elliptic_constant(g) * lap_scale
    if all(float(np.abs(u).max()) <= threshold for u in us):
        return "bounded"
    return "undecided"


# ---------------------------------------------------------------------------
# two-vertex blow-up and nonexistence families


def bisect_root(f: Callable[[float], float], lo: float, hi: float,
                tol: float = 1e-14, max_iter: int = 200) -> float:
    """Plain bisection; f(lo) and f(hi) must differ in sign."""
    flo, fhi = f(lo), f(hi)
    if flo == 0:
        return lo
    if fhi == 0:
        return hi
    if (flo > 0) == (fhi > 0):
        raise ValueError("no sign change on the bracket")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        fmid = f(mid)
        if fmid == 0 or hi - lo < tol * max(1.0, abs(mid)):
            return mid
        if (fmid > 0) == (flo > 0):
            lo, flo = mid, fmid
        else:
            hi, fhi = mid, fmid
    return 0.5 * (lo + hi)


def _std2(eq_rows, c=0.0):
    return ExpNonlinearity(np.array(eq_rows, dtype=float), c)


def _certify(g, eq, u, cfg) -> tuple:
    sol = newton_solve(g, eq, u, cfg)
    if sol is None:
        from .nonlinearity import residual_clamped

        rnorm = float(np.abs(residual_clamped(g, eq, u)[0]).max())
        sol = Solution(u, rnorm, 0, False)
    return (sol,)


def _family_ex34(g, eps, cfg):
    eq = _std2([[1.0, -1.0], [1.0, -2.0 - eps]])

    def gap(t):
        lhs = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * (2.0 + eps) * t))
        rhs = (1.0 + eps) * t / np.expm1(t) - t * (1.0 + np.exp(t))
        return rhs - lhs

    t = bisect_root(gap, 1e-12, 5.0)
    ey = (-1.0 + np.sqrt(1.0 + 4.0 * (2.0 + eps) * t)) / (2.0 * (2.0 + eps))
    y = float(np.log(ey))
    return eq, np.array([y + t, y]), t


def _family_ex35(g, eps, cfg):
    eq = _std2([[1.0, -1.0], [0.0, -1.0 - eps]])

    def gap(t):
        return np.expm1(t) * np.exp(t) / t - (1.0 + eps)

    t = bisect_root(gap, 1e-12, 1.0)
    x = float(np.log(t))
    return eq, np.array([x, x - t]), t


def _family_ex36(g, eps, cfg):
    eq = _std2([[-1.0 - eps, 1.0 + eps], [0.0, -1.0]])

    def gap(t):
        return t * np.exp(2.0 * t) / np.expm1(t) - (1.0 + eps) ** 2

    t = bisect_root(gap, 1e-12, 5.0)
    x = float(np.log(t / (1.0 + eps)))
    return eq, np.array([x, x + t]), t


def _ex53_roots(K, a, b, t_max=50.0, grid=20000):
    """Roots t > 0 of (K/a) t = (b e^t - a) e^{-2t}."""

    def gap(t):
        return (K / a) * t - (b * np.exp(t) - a) * np.exp(-2.0 * t)

    ts = np.linspace(1e-9, t_max, grid)
    vals = gap(ts)
    roots = []
    for i in range(len(ts) - 1):
        if vals[i] == 0 or (vals[i] > 0) != (vals[i + 1] > 0):
            roots.append(bisect_root(gap, ts[i], ts[i + 1]))
    return roots


def blowup_family(kind: str, params: Sequence[float],
                  cfg: SolverConfig = SolverConfig(),
                  a: float = 2.0, b: float = 1.0) -> ParamSequence:
    """Built-in two-vertex families with scalar oracles.

    Kinds ex34/ex35/ex36 solve a one-variable identity by bisection and
    return certified solutions that blow down as the parameter shrinks.
    Kinds ex51/ex52/ex53 carry nonexistence verdicts instead (ex53 is
    solvable for small K; parameters are K values with fixed a > b > 0).
    """
    g = two_vertex_graph()
    params = tuple(float(p) for p in params)
    builders = {"ex34": _family_ex34, "ex35": _family_ex35, "ex36": _family_ex36}
    if kind in builders:
        if any(p <= 0 for p in params):
            raise ValueError("family parameters must be positive")
        eqs, sols = [], []
        for eps in params:
            eq, u, _ = builders[kind](g, eps, cfg)
            eqs.append(eq)
            sols.append(_certify(g, eq, u, cfg))
        limit = {"ex34": _std2([[1.0, -1.0], [1.0, -2.0]]),
                 "ex35": _std2([[1.0, -1.0], [0.0, -1.0]]),
                 "ex36": _std2([[-1.0, 1.0], [0.0, -1.0]])}[kind]
        return ParamSequence(g, params, tuple(eqs), tuple(sols),
                             (None,) * len(params), limit)
    if kind == "ex51":
        if any(p <= 0 for p in params):
            raise ValueError("family parameters must be positive")
        eqs, verdicts = [], []
        for p in params:
            eq = _std2([[2.0, -1.0], [p, 0.0]])
            eqs.append(eq)
            verdicts.append(_verdict(g, eq, cfg))
        return ParamSequence(g, params, tuple(eqs), ((),) * len(params),
                             tuple(verdicts), None)
    if kind == "ex52":
        if any(p <= 0 for p in params):
            raise ValueError("family parameters must be positive")
        eqs, verdicts = [], []
        for delta in params:
            eq = _std2([[1.0, 0.5], [0.0, -delta]])
            eqs.append(eq)
            verdicts.append(_verdict(g, eq, cfg))
        return ParamSequence(g, params, tuple(eqs), ((),) * len(params),
                             tuple(verdicts), None)
    if kind == "ex53":
        if not a > b > 0:
            raise ValueError("ex53 needs a > b > 0")
        if any(p <= 0 for p in params):
            raise ValueError("K values must be positive")
        eqs, sols, verdicts = [], [], []
        for K in params:
            eq = _std2([[-a, b], [0.0, -K]])
            eqs.append(eq)
            roots = _ex53_roots(K, a, b)
            if roots:
                found = []
                for t in roots:
                    x = float(np.log(t / a))
                    found.extend(_certify(g, eq, np.array([x, x + t]), cfg))
                sols.append(tuple(found))
                verdicts.append("solutions-found")
            else:
                sols.append(())
                # analytic certificate: the right-hand side of the gap
                # identity is <= b^2/(4a) and negative until t = ln(a/b),
                # while the left grows linearly past b^2/(4K)
                if b * b / (4.0 * K) < np.log(a / b) * (1 - 1e-9):
                    verdicts.append("no-solution-certified: linear branch "
                                    "dominates before the exponential branch "
                                    "turns positive")
                else:
                    verdicts.append(_verdict(g, eq, cfg))
        return ParamSequence(g, params, tuple(eqs), tuple(sols),
                             tuple(verdicts), None)
    raise ValueError(f"unknown family kind {kind!r}")


def _verdict(g, eq, cfg) -> str:
    check = nonexistence_check(g, eq)
    if check.certified:
        return f"no-solution-certified: {check.reason}"
    sols = multistart_enumerate(g, eq, replace(cfg, budget=max(100, cfg.budget // 5)))
    return "solutions-found" if len(sols) else "no-solution-empirical"


# ---------------------------------------------------------------------------
# sweeps and samplers


@dataclass(frozen=True)
class SweepReport:
    K: float
    trials: int
    instances_solved: int
    solutions_found: int
    realized_radius: float
    max_norms: tuple
    clamp_events: int
    hypothesis_rejections: int


def empirical_boundedness_sweep(g: WeightedGraph,
                                sampler: Callable[[np.random.Generator], ExpNonlinearity],
                                trials: int, K: float,
                                cfg: SolverConfig = SolverConfig(),
                                seed: int = 0) -> SweepReport:
    """Solve `trials` sampled hypothesis-passing instances and record the
    largest solution norm seen.  The sampler is re-drawn (up to 100 times
    per trial) until the hypothesis holds at level K."""
    rng = np.random.default_rng(seed)
    max_norms: List[float] = []
    rejections = clamps = solved = found = 0
    for _ in range(trials):
        eq = None
        for _ in range(100):
            candidate = sampler(rng)
            if check_bound_hypothesis(g, candidate, K).ok:
                eq = candidate
                break
            rejections += 1
        if eq is None:
            raise RuntimeError("sampler cannot satisfy the hypothesis at this K")
        sols = multistart_enumerate(g, eq, cfg)
        if len(sols):
            solved += 1
            found += len(sols)
            max_norms.append(max(float(np.abs(s.u).max()) for s in sols))
            clamps += sum(not s.certified for s in sols)
    radius = max(max_norms) if max_norms else 0.0
    return SweepReport(K, trials, solved, found, radius, tuple(max_norms),
                       clamps, rejections)


def sample_hypothesis_instance(g: WeightedGraph, rng: np.random.Generator,
                               K: float = 2.0, n: int = 2) -> ExpNonlinearity:
    """Random instance passing the boundedness hypothesis at level K."""
    inv = 1.0 / K
    coeffs = rng.uniform(-0.2 * inv, 0.2 * inv, size=(n, g.k))
    x0 = int(rng.integers(g.k))
    coeffs[n - 1, x0] = rng.uniform(inv, 1.4 * inv)
    c = float(rng.choice([-1.0, 1.0]) * rng.uniform(inv, 1.2 * inv))
    return ExpNonlinearity(coeffs, c)


DEGREE_TABLE_ROWS = (
    "q_finite_c_pos",
    "q_finite_c0_f1pos",
    "q_inf_c_neg",
    "q_inf_c0_f1neg",
    "q_inf_c_pos",
    "q_finite_c_neg",
)


def sample_degree_table_instance(g: WeightedGraph, rng: np.random.Generator,
                                 row: str, n: int) -> ExpNonlinearity:
    """Random instance realizing one row of the degree sign table."""
    if row not in DEGREE_TABLE_ROWS:
        raise ValueError(f"unknown row {row!r}")
    if row == "q_finite_c0_f1pos" and n < 2:
        raise ValueError("a finite growth limit with positive mean f_1 needs n >= 2")
    if row == "q_inf_c0_f1neg" and n == 1:
        # the single coefficient must be positive somewhere yet have a
        # clearly negative mean
        x0 = int(rng.integers(g.k))
        f1 = -rng.uniform(0.5, 1.0, size=g.k)
        f1[x0] = rng.uniform(0.3, 0.45) * min(1.0, (g.total_measure - g.m[x0])
                                              / (2.0 * g.m[x0]))
        return ExpNonlinearity(f1[None, :], 0.0)
    coeffs = rng.uniform(-0.6, 0.6, size=(n, g.k))
    if row.startswith("q_finite"):
        coeffs[n - 1] = -rng.uniform(0.3, 1.2, size=g.k)
    else:
        coeffs[n - 1, int(rng.integers(g.k))] = rng.uniform(0.4, 1.0)
    if row.endswith("c_pos"):
        c = float(rng.uniform(0.3, 1.0))
    elif row.endswith("c_neg"):
        c = float(-rng.uniform(0.3, 1.0))
    else:
        c = 0.0
        target = rng.uniform(0.3, 0.8)
        if row.endswith("f1neg"):
            target = -target
        coeffs[0] += target - average(g, coeffs[0])
    return ExpNonlinearity(coeffs, c)
