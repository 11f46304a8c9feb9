"""Empirical Brouwer degree, canonical homotopy deformations, and the
closed-form analysis of two-vertex instances.

The empirical degree is the sum of orientation signs over the enumerated
solution set.  A report certifies only when the enumeration heuristic was
quiet over the last half of its budget, every solution is nondegenerate,
and no overflow clamp fired.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, List, Optional

import numpy as np

from .graphs import WeightedGraph, average
from .nonlinearity import (
    ExpNonlinearity,
    classify,
    f1bar_is_zero,
    jacobian_sign,
    leading_profile,
    predicted_degree,
)
from .solver import Solution, SolutionSet, SolverConfig, multistart_enumerate
from .apriori import check_bound_hypothesis

__all__ = [
    "DegreeReport",
    "HomotopyPath",
    "GuardViolation",
    "empirical_degree",
    "canonical_homotopy",
    "track_homotopy",
    "TrackResult",
    "two_vertex_analyze",
    "TwoVertexReport",
]


@dataclass(frozen=True)
class DegreeReport:
    empirical: Optional[int]
    predicted: Optional[int]
    solutions: SolutionSet
    certified: bool
    bounded_hypothesis: bool  # an a-priori bound justifies the finite search box


def empirical_degree(g: WeightedGraph, eq: ExpNonlinearity,
                     cfg: SolverConfig = SolverConfig()) -> DegreeReport:
    """Enumerate solutions and sum orientation signs."""
    sols = multistart_enumerate(g, eq, cfg)
    signs = [s.jac_sign for s in sols]
    certified = sols.exhaustive and sols.all_certified and all(s != 0 for s in signs)
    empirical = int(sum(signs)) if sols.exhaustive else None
    try:
        predicted = predicted_degree(g, eq)
    except ValueError:
        predicted = None
    hyp = check_bound_hypothesis(g, eq).ok
    return DegreeReport(empirical, predicted, sols, certified, hyp)


# ---------------------------------------------------------------------------
# homotopy deformations


class GuardViolation(RuntimeError):
    """The along-path boundedness hypothesis failed at some parameter."""

    def __init__(self, t: float, reason: str):
        super().__init__(f"guard violated at t={t:.6g}: {reason}")
        self.t = t
        self.reason = reason


@dataclass(frozen=True)
class HomotopyPath:
    """A degree-preserving coefficient deformation t in [0, 1].

    ``eq_at(t)`` evaluates the family; ``guard_K`` is the uniform constant
    under which the boundedness hypothesis holds along the path (verified
    on a 64-sample grid at construction).  The t = 1 endpoint concentrates
    the nonlinearity on the witness vertices, ready for vertex elimination.
    """

    graph: WeightedGraph
    eq_at: Callable[[float], ExpNonlinearity]
    guard_K: float
    witnesses: tuple
    description: str

    def check_guard(self, t: float) -> None:
        eq_t = self.eq_at(t)
        report = check_bound_hypothesis(self.graph, eq_t, self.guard_K)
        if not report.ok:
            raise GuardViolation(t, report.reason)


def _verify_guard(path: HomotopyPath, samples: int = 64) -> HomotopyPath:
    for t in np.linspace(0.0, 1.0, samples):
        path.check_guard(float(t))
    return path


def _uniform_guard_K(g, eqs) -> float:
    """Smallest constant under which every listed instance passes, doubled."""
    need = 1.0
    for eq in eqs:
        sums = float(np.abs(eq.coeffs).max(axis=1).sum()) + abs(eq.c)
        need = max(need, sums)
        if eq.c != 0:
            need = max(need, 1.0 / abs(eq.c))
        else:
            f1bar = abs(average(g, eq.coeff(1)))
            if f1bar > 0:
                need = max(need, 1.0 / f1bar)
        prof = leading_profile(eq).leading
        pos = prof[prof > 0]
        neg = prof[prof < 0]
        if pos.size:
            need = max(need, 1.0 / pos.max())
        if neg.size:
            need = max(need, 1.0 / (-neg).max())
    return 2.0 * need


def _path_from_schedules(g, base, schedules, witnesses, description):
    """schedules: list over coefficient index of callables t -> row array."""

    def eq_at(t: float) -> ExpNonlinearity:
        rows = [np.asarray(s(t), dtype=float) for s in schedules]
        with warnings.catch_warnings():
            # endpoints may kill the top row entirely; truncation is intended
            warnings.simplefilter("ignore")
            return ExpNonlinearity(np.vstack(rows), base.c)

    probe = [eq_at(t) for t in np.linspace(0, 1, 9)]
    K = _uniform_guard_K(g, probe)
    return _verify_guard(HomotopyPath(g, eq_at, K, tuple(witnesses), description))


def _compose(g, base, first: HomotopyPath, second_builder, description):
    """Concatenate two stages into a single path on [0, 1]."""
    second = second_builder(first.eq_at(1.0))

    def eq_at(t: float) -> ExpNonlinearity:
        if t <= 0.5:
            return first.eq_at(2.0 * t)
        return second.eq_at(2.0 * t - 1.0)

    K = max(first.guard_K, second.guard_K)
    path = HomotopyPath(g, eq_at, K, first.witnesses + second.witnesses, description)
    return _verify_guard(path)


def _bump(row, idx, t, target):
    out = (1.0 - t) * row
    out[idx] = (1.0 - t) * row[idx] + t * target
    return out


def _canonical_n2(g, eq, label) -> HomotopyPath:
    f2, f1 = eq.coeff(2), eq.coeff(1)
    c = eq.c
    f1bar = average(g, f1)
    case = label.n2

    if c != 0:
        if case == "a":
            x0 = int(np.argmax(f2))
            scheds = [lambda t: (1 - t) * f1,
                      lambda t: _bump(f2.copy(), x0, t, 1.0)]
            return _path_from_schedules(g, eq, scheds, (x0,),
                                        "quadratic coefficient concentrated to +1 at witness")
        if case == "b":
            x0 = int(np.argmin(f2))
            scheds = [lambda t: (1 - t) * f1,
                      lambda t: _bump(f2.copy(), x0, t, -1.0)]
            return _path_from_schedules(g, eq, scheds, (x0,),
                                        "quadratic coefficient concentrated to -1 at witness")
        if case == "c":
            mask = (f2 == 0) & (f1 > 0)
            x0 = int(np.nonzero(mask)[0][np.argmax(f1[mask])])
            scheds = [lambda t: _bump(f1.copy(), x0, t, 1.0),
                      lambda t: (1 - t) * f2]
            return _path_from_schedules(g, eq, scheds, (x0,),
                                        "linear coefficient concentrated to +1 at witness")
        if case == "d":
            neg = f2 < 0

            def f2_sched(t):
                out = (1 - t) * f2
                out[neg] -= t
                return out

            first = _path_from_schedules(
                g, eq, [lambda t: (1 - t) * f1, f2_sched], (),
                "negative support pushed to -1, linear part removed")

            def second_builder(end_eq):
                return _canonical_n2(g, end_eq, classify(g, end_eq))

            return _compose(g, eq, first, second_builder,
                            "two-stage reduction through the all-nonpositive case")
        raise ValueError(f"no canonical path for case {case!r}")

    # c = 0: the mean of f_1 steers every deformation
    if f1bar_is_zero(g, eq):
        raise ValueError("degree undetermined: c = 0 with vanishing mean of f_1")
    if case == "a":
        x0 = int(np.argmax(f2))
        target = 1.0 if f1bar > 0 else -1.0
        scheds = [lambda t: _bump(f1.copy(), x0, t, target),
                  lambda t: _bump(f2.copy(), x0, t, 1.0)]
        return _path_from_schedules(g, eq, scheds, (x0,),
                                    "both coefficients concentrated at one witness")
    if case == "b":
        raise ValueError("all-nonpositive coefficients with c = 0: nonexistence is "
                         "direct, no hypothesis-compatible path exists")
    if case == "c":
        mask = (f2 == 0) & (f1 > 0)
        x0 = int(np.nonzero(mask)[0][np.argmax(f1[mask])])
        if f1bar > 0:
            scheds = [lambda t: _bump(f1.copy(), x0, t, 1.0),
                      lambda t: (1 - t) * f2]
            return _path_from_schedules(g, eq, scheds, (x0,),
                                        "linear coefficient concentrated to +1 at witness")
        others = [x for x in range(g.k) if x != x0]
        x1 = int(max(others, key=lambda x: g.m[x]))

        def f1_sched(t):
            out = (1 - t) * f1
            out[x0] += t
            out[x1] -= np.e * t
            return out

        scheds = [f1_sched, lambda t: (1 - t) * f2]
        return _path_from_schedules(g, eq, scheds, (x0, x1),
                                    "linear coefficient pinned +1/-e at two witnesses")
    if case == "d":
        neg = f2 < 0
        target = 1.0 if f1bar > 0 else -1.0

        def f2_sched(t):
            out = (1 - t) * f2
            out[neg] -= t
            return out

        def f1_sched(t):
            out = (1 - t) * f1
            out[neg] += t * target
            return out

        return _path_from_schedules(
            g, eq, [f1_sched, f2_sched], tuple(int(i) for i in np.nonzero(neg)[0]),
            "coefficients pinned to -1/+-1 on the negative quadratic support")
    raise ValueError(f"no canonical path for case {case!r}")


def _level_index(eq) -> np.ndarray:
    """Per vertex, the highest i with f_i != 0 (0 when all vanish)."""
    idx = np.zeros(eq.k, dtype=int)
    for i in range(eq.n, 0, -1):
        row = eq.coeffs[i - 1]
        mask = (idx == 0) & (row != 0)
        idx[mask] = i
    return idx


def _canonical_general(g, eq, label) -> HomotopyPath:
    c = eq.c
    coeffs = eq.coeffs
    n = eq.n
    structural = label.structural
    lead = leading_profile(eq).leading
    f1bar = average(g, eq.coeff(1))

    if structural == "a*":
        x0 = int(np.argmax(lead))
        level = _level_index(eq)
        i0 = int(level[x0])
        if c != 0:
            scheds = []
            for i in range(1, n + 1):
                row = coeffs[i - 1]
                if i == i0:
                    scheds.append(lambda t, row=row: _bump(row.copy(), x0, t, 1.0))
                else:
                    scheds.append(lambda t, row=row: (1 - t) * row)
            return _path_from_schedules(g, eq, scheds, (x0,),
                                        "top coefficient concentrated to +1 at witness")
        if f1bar_is_zero(g, eq):
            raise ValueError("degree undetermined: c = 0 with vanishing mean of f_1")
        target = 1.0 if f1bar > 0 else -1.0
        scheds = []
        if i0 == 1:
            # witness carries the linear term itself; treat it like the
            # two-vertex pinned construction
            others = [x for x in range(g.k) if x != x0]
            x1 = int(max(others, key=lambda x: g.m[x])) if others else x0

            def f1_sched(t, row=coeffs[0]):
                out = (1 - t) * row
                out[x0] += t
                if f1bar < 0:
                    out[x1] -= np.e * t
                return out

            scheds.append(f1_sched)
            for i in range(2, n + 1):
                scheds.append(lambda t, row=coeffs[i - 1]: (1 - t) * row)
            return _path_from_schedules(g, eq, scheds, (x0,),
                                        "linear witness pinned, higher terms removed")
        scheds.append(lambda t, row=coeffs[0]: (1 - t) * row + t * target)
        for i in range(2, n + 1):
            row = coeffs[i - 1]
            if i == i0:
                scheds.append(lambda t, row=row: _bump(row.copy(), x0, t, 1.0))
            else:
                scheds.append(lambda t, row=row: (1 - t) * row)
        return _path_from_schedules(
            g, eq, scheds, (x0,),
            "top coefficient pinned at witness, linear term shifted to a constant sign")

    if structural == "b*":
        if c == 0:
            raise ValueError("all-nonpositive coefficients with c = 0: nonexistence is "
                             "direct, no hypothesis-compatible path exists")
        fn = coeffs[n - 1]
        x0 = int(np.argmin(fn))
        scheds = []
        for i in range(1, n):
            scheds.append(lambda t, row=coeffs[i - 1]: (1 - t) * row)
        scheds.append(lambda t, row=fn: _bump(row.copy(), x0, t, -1.0))
        return _path_from_schedules(g, eq, scheds, (x0,),
                                    "top coefficient concentrated to -1 at witness")

    # structural c*: push every leading value to -1 on its level set
    level = _level_index(eq)
    if c == 0 and f1bar_is_zero(g, eq):
        raise ValueError("degree undetermined: c = 0 with vanishing mean of f_1")
    off_bottom = level >= 2  # vertices whose top nonzero index is quadratic or higher

    def level_sched(i):
        row = coeffs[i - 1]
        mask = level == i

        def sched(t, row=row, mask=mask):
            out = (1 - t) * row
            out[mask] = (1 - t) * row[mask] - t
            return out

        return sched

    scheds: List = [None] * n
    for i in range(2, n + 1):
        scheds[i - 1] = level_sched(i)
    if c != 0:
        scheds[0] = level_sched(1)
        first = _path_from_schedules(
            g, eq, scheds, (),
            "leading values pinned to -1 on their level sets")

        def second_builder(end_eq):
            return _canonical_general(g, end_eq, classify(g, end_eq))

        return _compose(g, eq, first, second_builder,
                        "two-stage reduction through the all-nonpositive case")
    target = 1.0 if f1bar > 0 else -1.0

    def f1_sched(t, row=coeffs[0]):
        out = (1 - t) * row
        out[off_bottom] += t * target
        out[level == 1] = (1 - t) * row[level == 1] - t
        return out

    scheds[0] = f1_sched
    return _path_from_schedules(
        g, eq, scheds, tuple(int(i) for i in np.nonzero(off_bottom)[0]),
        "leading values pinned to -1, linear term pinned off the zero set")


def canonical_homotopy(g: WeightedGraph, eq: ExpNonlinearity) -> HomotopyPath:
    """Degree-preserving path to an instance supported on witness vertices.

    Raises ValueError when no hypothesis-compatible deformation exists
    (all-nonpositive coefficients with c = 0, or an undetermined degree)
    and GuardViolation when the along-path hypothesis fails at a sample.
    """
    label = classify(g, eq)
    if eq.n == 2:
        return _canonical_n2(g, eq, label)
    return _canonical_general(g, eq, label)


@dataclass(frozen=True)
class TrackResult:
    ts: tuple
    reports: tuple
    constancy: str  # "constant", "not-established", or "varies"

    @property
    def degrees(self):
        return tuple(r.empirical for r in self.reports)


def track_homotopy(path: HomotopyPath, cfg: SolverConfig = SolverConfig(),
                   samples: int = 64, refine: bool = True) -> TrackResult:
    """Empirical degree at each parameter sample, with constancy verdict.

    Where the solution-set cardinality changes between neighbouring
    certified samples, the interval is refined (up to 16 extra samples) to
    localize the apparent jump; solutions move continuously under the
    guard, so a real degree change would indicate a guard failure.
    """
    ts = [float(t) for t in np.linspace(0.0, 1.0, samples)]
    reports = {}
    for t in ts:
        path.check_guard(t)
        reports[t] = empirical_degree(path.graph, path.eq_at(t), cfg)
    if refine:
        extra = 0
        i = 0
        while i < len(ts) - 1 and extra < 16:
            a, b = ts[i], ts[i + 1]
            ra, rb = reports[a], reports[b]
            if (ra.certified and rb.certified
                    and len(ra.solutions) != len(rb.solutions)
                    and b - a > 1e-3):
                mid = 0.5 * (a + b)
                path.check_guard(mid)
                reports[mid] = empirical_degree(path.graph, path.eq_at(mid), cfg)
                ts.insert(i + 1, mid)
                extra += 1
            else:
                i += 1
    ordered = tuple(sorted(ts))
    reps = tuple(reports[t] for t in ordered)
    certified_degrees = {r.empirical for r in reps if r.certified}
    if any(not r.certified for r in reps):
        constancy = "not-established"
    elif len(certified_degrees) <= 1:
        constancy = "constant"
    else:
        constancy = "varies"
    return TrackResult(ordered, reps, constancy)


# ---------------------------------------------------------------------------
# two-vertex closed-form analysis


@dataclass(frozen=True)
class TwoVertexReport:
    solutions: SolutionSet
    degree: Optional[int]
    certified: bool
    roots_t: tuple  # values of u(1) - u(2) at the solutions


def _positive_roots(poly_desc: np.ndarray) -> np.ndarray:
    """Real positive roots of a polynomial given by descending coefficients."""
    coeffs = np.trim_zeros(poly_desc, "f")
    if coeffs.size <= 1:
        return np.array([])
    roots = np.roots(coeffs)
    keep = roots[(np.abs(roots.imag) <= 1e-9 * (1 + np.abs(roots.real)))
                 & (roots.real > 0)]
    return np.sort(keep.real)


def _branch_values(g, eq, t):
    """Positive roots (z, w) of the two per-vertex scalar equations at gap t."""
    w_edge = float(g.weights[0, 1])
    zero = eq.zero_order()
    # vertex 1: sum f_i(1) z^i + c1 - (w/m1) t = 0
    desc1 = np.concatenate((eq.coeffs[::-1, 0], [zero[0] - (w_edge / g.m[0]) * t]))
    # vertex 2: sum f_i(2) w^i + c2 + (w/m2) t = 0
    desc2 = np.concatenate((eq.coeffs[::-1, 1], [zero[1] + (w_edge / g.m[1]) * t]))
    return _positive_roots(desc1), _positive_roots(desc2)


def two_vertex_analyze(g: WeightedGraph, eq: ExpNonlinearity,
                       t_max: float = 50.0, grid: int = 2001,
                       cfg: SolverConfig = SolverConfig()) -> TwoVertexReport:
    """Enumerate all solutions of a two-vertex instance via the gap variable.

    With t = u(1) - u(2), each vertex equation becomes a polynomial in
    e^{u} with positive roots z_a(t), w_b(t); solutions are exactly the
    zeros of ln z_a - ln w_b - t.  The scan brackets sign changes on a
    dense t-grid; the count is certified when every branch mismatch is
    strictly monotone between branch-structure changes, mirroring the
    monotone left/right-hand-side arguments available in closed form.
    """
    if g.k != 2:
        raise ValueError("two-vertex analysis needs exactly two vertices")
    eq.check_aligned(g)
    ts = np.linspace(-t_max, t_max, grid)
    tables = [_branch_values(g, eq, t) for t in ts]
    sigs = [(len(z), len(w)) for z, w in tables]

    def mismatches(entry):
        z, w = entry
        out = {}
        for a, zv in enumerate(z):
            for b, wv in enumerate(w):
                out[(a, b)] = float(np.log(zv) - np.log(wv))
        return out

    roots_t: List[float] = []
    solutions: List[np.ndarray] = []
    certified = True

    def record(u1, u2, t_root):
        u = np.array([u1, u2])
        if all(np.abs(u - s).max() >= cfg.deflation_radius for s in solutions):
            solutions.append(u)
            roots_t.append(t_root)

    def bisect_pair(lo, hi, pair, f_lo):
        mid = lo
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            z, w = _branch_values(g, eq, mid)
            if pair[0] >= len(z) or pair[1] >= len(w):
                return None
            f_mid = float(np.log(z[pair[0]]) - np.log(w[pair[1]])) - mid
            if abs(hi - lo) < 1e-14 * max(1.0, abs(mid)):
                break
            if (f_mid > 0) == (f_lo > 0):
                lo = mid
            else:
                hi = mid
        z, w = _branch_values(g, eq, mid)
        if pair[0] >= len(z) or pair[1] >= len(w):
            return None
        return mid, float(np.log(z[pair[0]])), float(np.log(w[pair[1]]))

    def scan_segment(a, b, tab_a, tab_b):
        # an exact zero at the left endpoint is its own root; bisect only
        # on strict sign changes (a right-endpoint zero is handled by the
        # next segment's left endpoint)
        mm_a = mismatches(tab_a)
        mm_b = mismatches(tab_b)
        for pair, v_lo in mm_a.items():
            f_lo = v_lo - a
            f_hi = mm_b[pair] - b
            if f_lo == 0.0:
                record(float(np.log(tab_a[0][pair[0]])),
                       float(np.log(tab_a[1][pair[1]])), a)
            elif f_hi != 0.0 and (f_lo > 0) != (f_hi > 0):
                hit = bisect_pair(a, b, pair, f_lo)
                if hit is not None:
                    t_root, u1, u2 = hit
                    record(u1, u2, t_root)

    def scan_break(a, b, tab_a, tab_b, depth):
        # dyadic refinement towards the branch birth/death point: every
        # same-signature sub-interval is scanned at its own scale, so roots
        # arbitrarily close to the transition are still bracketed
        if (len(tab_a[0]), len(tab_a[1])) == (len(tab_b[0]), len(tab_b[1])):
            scan_segment(a, b, tab_a, tab_b)
            return
        if depth >= 48 or b - a <= 1e-13 * (1.0 + abs(a)):
            return
        mid = 0.5 * (a + b)
        tab_mid = _branch_values(g, eq, mid)
        scan_break(a, mid, tab_a, tab_mid, depth + 1)
        scan_break(mid, b, tab_mid, tab_b, depth + 1)

    i = 0
    while i < len(ts) - 1:
        if sigs[i] == sigs[i + 1]:
            scan_segment(ts[i], ts[i + 1], tables[i], tables[i + 1])
        else:
            # the count near a branch transition has no monotone
            # decomposition to lean on; scan it finely but drop the
            # exact-count certification
            certified = False
            scan_break(ts[i], ts[i + 1], tables[i], tables[i + 1], 0)
        i += 1

    # monotonicity audit per branch over constant-signature stretches
    if certified:
        certified = _monotone_certificate(ts, sigs, tables)

    from .nonlinearity import _exponent_table, residual_clamped
    from .solver import _finish, _newton_iterate  # reuse the certification path

    sols = []
    for u in solutions:
        # the scan can bracket points where every exponential term has
        # decayed below tolerance (the residual there only vanishes in the
        # u -> -inf limit); drop them like the solver does
        table, _ = _exponent_table(eq, u, clamp=True)
        mass = float((np.abs(eq.coeffs) * table).sum(axis=0).max())
        if eq.coeffs.any() and mass <= 100.0 * cfg.tol:
            continue
        polished = _newton_iterate(g, eq, u, cfg)
        sol = _finish(g, eq, polished, cfg) if polished is not None else None
        if sol is None:
            rnorm = float(np.abs(residual_clamped(g, eq, u)[0]).max())
            sols.append(Solution(u, rnorm, 0, False))
        else:
            sols.append(sol)
    sols = tuple(sorted(sols, key=lambda s: float(s.u.min())))
    if not all(s.certified for s in sols):
        certified = False
    degree = int(sum(s.jac_sign for s in sols))
    return TwoVertexReport(SolutionSet(sols, certified), degree, certified,
                           tuple(sorted(roots_t)))


def _monotone_certificate(ts, sigs, tables, min_run: int = 3) -> bool:
    """Each branch-pair mismatch is discretely monotone on every stretch of
    constant branch signature, so sign changes count roots exactly at the
    scan resolution."""
    start = 0
    for i in range(1, len(ts) + 1):
        if i == len(ts) or sigs[i] != sigs[start]:
            if i - start >= min_run and sigs[start] != (0, 0):
                nz, nw = sigs[start]
                for a in range(nz):
                    for b in range(nw):
                        vals = [float(np.log(tables[j][0][a]) - np.log(tables[j][1][b]))
                                - ts[j] for j in range(start, i)]
                        diffs = np.diff(vals)
                        if not (np.all(diffs <= 1e-12) or np.all(diffs >= -1e-12)):
                            return False
            start = i
    return True
