"""Constructive existence machinery on the degree-zero side.

Small-|c| solvability via explicit super/subsolutions, the auxiliary
single-exponential solve, threshold coefficient functions, bisection for
the existence threshold in |c|, multiplicity search, and sound (never
complete) nonexistence certificates.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Optional

import numpy as np
import sympy

from .graphs import WeightedGraph, average, elliptic_constant, mean_zero_poisson_solve
from .nonlinearity import ExpNonlinearity, classify, residual
from .solver import (
    SolutionSet,
    SolverConfig,
    Solution,
    check_sub,
    check_super,
    multistart_enumerate,
)

__all__ = [
    "SmallCCertificate",
    "build_small_c_supersolution",
    "AuxKWProblem",
    "kw_source_from_f1",
    "kw_source_case_d",
    "solve_aux_kw",
    "FStar",
    "build_fstar",
    "CnEstimate",
    "estimate_cn",
    "ExistenceHypothesisError",
    "multiplicity_search",
    "NonexistenceVerdict",
    "nonexistence_check",
    "with_constant",
]


def with_constant(eq: ExpNonlinearity, c: float) -> ExpNonlinearity:
    return replace(eq, c=float(c))


# ---------------------------------------------------------------------------
# small-|c| barrier from the mean of f_1


@dataclass(frozen=True)
class SmallCCertificate:
    """Barrier a*v + ln a with its admissible range of constants.

    side "super" (mean f_1 < 0, growth limit +inf): supersolution for
    c in (0, c_edge]; side "sub" (mean f_1 > 0, finite limit): subsolution
    for c in [c_edge, 0), where c_edge = -a * mean(f_1) / 2.
    """

    phi: np.ndarray
    a: float
    c_edge: float
    side: str


def build_small_c_supersolution(g: WeightedGraph, eq: ExpNonlinearity,
                                a: float = 1.0) -> SmallCCertificate:
    """Shrink a until a*v + ln a is a barrier near c = 0.

    v solves -lap v = sum_i a^{i-1} (f_i - mean f_i) with m-mean zero, so

        residual(a v + ln a) = a (X + mean f_1) + c,

    with X = f_1(e^{av}-1) + sum_{i>=2} a^{i-1}(f_i(e^{iav}-1) + mean f_i).
    Once |X| <= |mean f_1| / 2 pointwise, the sign of mean f_1 makes the
    barrier a supersolution (mean < 0) or a subsolution (mean > 0) for
    every c up to the returned edge.
    """
    if not 0 < a <= 1:
        raise ValueError("a must lie in (0, 1]")
    eq.check_aligned(g)
    f1bar = average(g, eq.coeff(1))
    if f1bar == 0:
        raise ValueError("mean of f_1 vanishes; no admissible range")
    side = "super" if f1bar < 0 else "sub"
    means = np.array([average(g, eq.coeff(i)) for i in range(1, eq.n + 1)])
    for _ in range(60):
        powers = a ** np.arange(eq.n)
        rhs = (powers[:, None] * (eq.coeffs - means[:, None])).sum(axis=0)
        v = mean_zero_poisson_solve(g, -rhs)
        exps = np.exp(np.arange(1, eq.n + 1)[:, None] * a * v[None, :])
        X = eq.coeff(1) * (exps[0] - 1)
        for i in range(2, eq.n + 1):
            X = X + a ** (i - 1) * (eq.coeff(i) * (exps[i - 1] - 1) + means[i - 1])
        if float(np.abs(X).max()) <= 0.5 * abs(f1bar):
            phi = a * v + np.log(a)
            return SmallCCertificate(phi, a, -0.5 * a * f1bar, side)
        a *= 0.5
    raise RuntimeError("barrier inequality not reached after 60 halvings of a")


# ---------------------------------------------------------------------------
# auxiliary single-exponential equation


@dataclass(frozen=True)
class AuxKWProblem:
    """-lap u = H e^u with sign-changing H of negative mean, and a solution."""

    source: np.ndarray
    solution: Solution
    sup_norm: float


def kw_source_from_f1(g: WeightedGraph, f1: np.ndarray) -> np.ndarray:
    """Sign-changing source with m-weighted sum exactly -max(f_1)/2.

    Lifts f_1 at its maximizing vertex and lowers it elsewhere, spreading
    the compensation against the measure so the sum identity is exact.
    """
    f1 = g.check_aligned(f1)
    x0 = int(np.argmax(f1))
    top = float(f1[x0])
    if top <= 0:
        raise ValueError("f_1 must be positive somewhere")
    total = g.total_measure
    H = f1.copy()
    H[x0] += top / (2.0 * g.m[x0])
    others = np.arange(g.k) != x0
    H[others] -= (total * average(g, f1) + top) / (total - g.m[x0])
    return H


def kw_source_case_d(g: WeightedGraph, f1: np.ndarray) -> np.ndarray:
    """Source f_1 - max(f_1)/2: sign-changing with negative mean."""
    f1 = g.check_aligned(f1)
    top = float(f1.max())
    if top <= 0:
        raise ValueError("f_1 must be positive somewhere")
    return f1 - 0.5 * top


def solve_aux_kw(g: WeightedGraph, H: np.ndarray,
                 cfg: SolverConfig = SolverConfig()) -> AuxKWProblem:
    """Solve -lap u = H e^u by multistart; widens the box once on failure."""
    H = g.check_aligned(H)
    if not (np.any(H > 0) and np.any(H < 0)):
        raise ValueError("source must change sign")
    if average(g, H) >= 0:
        raise ValueError("source must have negative mean")
    eq = ExpNonlinearity(H[None, :], 0.0)
    sols = multistart_enumerate(g, eq, cfg)
    if not len(sols):
        wide = replace(cfg, box_radius=4 * cfg.box_radius, budget=4 * cfg.budget)
        sols = multistart_enumerate(g, eq, wide)
    if not len(sols):
        raise RuntimeError("multistart budget exhausted on the auxiliary equation; "
                           "retry with a larger box")
    best = sols.solutions[0]
    return AuxKWProblem(H, best, float(np.abs(best.u).max()))


# ---------------------------------------------------------------------------
# threshold coefficient functions


@dataclass(frozen=True)
class FStar:
    """Threshold for the j-th coefficient built from an auxiliary solution.

    If f_j <= fstar (side A*) or f_j >= fstar (side B*), the auxiliary
    solution is a super/subsolution of the k-shifted equation for every
    |c| <= eps.
    """

    fstar: np.ndarray
    j: int
    k_shift: float
    eps0: float
    eps: float
    regime: str


def build_fstar(g: WeightedGraph, eq: ExpNonlinearity, j: int, k_shift: float,
                regime: str, aux: AuxKWProblem,
                n: Optional[int] = None) -> FStar:
    """Threshold for coefficient j of an order-n equation.

    ``eq`` supplies the other coefficients (its own j-th row, if any, is
    ignored); ``n`` defaults to the order of ``eq`` and must be passed when
    the target order exceeds it.  On side B* the top index is excluded:
    with every lower term eventually negative the equation is unsolvable
    no matter how the top coefficient is chosen.
    """
    if regime not in ("A*", "B*"):
        raise ValueError("regime must be 'A*' or 'B*'")
    n = eq.n if n is None else int(n)
    if n < eq.n:
        raise ValueError("target order below the order of the given coefficients")
    hi = n if regime == "A*" else n - 1
    if not 2 <= j <= hi:
        raise ValueError(f"index {j} out of range [2, {hi}] for regime {regime}")
    eq.check_aligned(g)
    H = aux.source
    u_star = aux.solution.u
    nz = np.abs(H[H != 0])
    eps0 = 0.5 * float(nz.min())
    eps = eps0 * float(np.exp(u_star).min())
    acc = np.zeros(g.k)
    for i in range(1, eq.n + 1):
        if i == j:
            continue
        acc += eq.coeff(i) * np.exp(-i * k_shift) * np.exp((i - 1) * u_star)
    shift = -eps0 if regime == "A*" else eps0
    fstar = np.exp(j * k_shift) * np.exp(-(j - 1) * u_star) * (H + shift - acc)
    return FStar(fstar, j, k_shift, eps0, eps, regime)


# ---------------------------------------------------------------------------
# threshold scan


class ExistenceHypothesisError(RuntimeError):
    """No solvable constant found down to the smallest probe."""


@dataclass(frozen=True)
class CnEstimate:
    """Existence threshold in |c| with its bracket and closed-form ceiling."""

    value: float
    direction: int
    bracket: tuple
    upper_bound: Optional[float]
    raw_bounds: tuple
    ceiling_exceeded: bool
    solution_at_value: Optional[Solution]


def _poly_sup_positive_axis(coeffs_desc: np.ndarray) -> float:
    """sup over z > 0 of a polynomial with zero constant term appended."""
    coeffs = np.trim_zeros(np.asarray(coeffs_desc, dtype=float), "f")
    if coeffs.size == 0:
        return 0.0
    if coeffs[0] > 0:
        return np.inf
    best = 0.0  # z -> 0+ limit
    deriv = np.polyder(np.poly1d(coeffs))
    if deriv.order >= 1 or deriv.coeffs.any():
        for r in np.roots(deriv.coeffs):
            if abs(r.imag) <= 1e-9 * (1 + abs(r.real)) and r.real > 0:
                best = max(best, float(np.polyval(coeffs, r.real)))
    return best


def _scan_ceiling(g, eq, label) -> tuple:
    """(ceiling, upper_bound, raw_bounds) for the |c| bisection."""
    raw = ()
    upper = None
    if eq.n == 2 and label.n2 == "d":
        f2, f1 = eq.coeff(2), eq.coeff(1)
        mask = f2 != 0
        upper = float((f1[mask] ** 2 / (4.0 * (-f2[mask]))).max())
        return max(upper, 1e-12), upper, raw
    if eq.n == 2 and label.n2 == "a":
        C2 = elliptic_constant(g)
        f2, f1 = eq.coeff(2), eq.coeff(1)
        f1m = np.maximum(-f1, 0.0)
        if f1.min() < 0:
            epsv = float(f2.max() / (f1m ** 2).max())
            shifted = f2 - 0.5 * epsv * f1m ** 2
            if shifted.max() > 0:
                upper = float(C2 * np.abs(shifted).max() / shifted.max() + 1.0 / epsv)
        else:
            upper = float(C2 * np.abs(f2).max() / f2.max())
    if eq.n == 2 and label.n2 == "c":
        C2 = elliptic_constant(g)
        f2, f1 = eq.coeff(2), eq.coeff(1)
        mask = (f2 == 0) & (f1 > 0)
        x0 = int(np.nonzero(mask)[0][np.argmax(f1[mask])])
        f2m = np.maximum(-f2, 0.0)
        upper = float(C2 * (np.log((np.abs(f1).max() ** 2 + f2m.max())
                                   / f1[x0] ** 2 + 1e-300) + 1.0))
        r1 = 0.5 * C2 * np.log(max(4 * C2 ** 2 / np.e ** 2
                                   * f2m.max() / f1[x0] ** 2, 1e-300))
        r2 = C2 * np.log(max(2 * C2 / np.e * np.abs(f1).max() / f1[x0], 1e-300))
        raw = (float(r1), float(r2))
    if upper is not None and upper > 0:
        return upper, upper, raw
    # fall back to the coefficient-size ceilings
    K = float(np.abs(eq.coeffs).max())
    if label.structural == "a*":
        return eq.n * K, upper, raw
    kn = max(_poly_sup_positive_axis(np.concatenate((eq.coeffs[::-1, x], [0.0])))
             for x in range(g.k))
    return max(float(kn), 1e-6), upper, raw


def estimate_cn(g: WeightedGraph, eq: ExpNonlinearity,
                cfg: SolverConfig = SolverConfig(),
                direction: Optional[int] = None,
                bracket_rtol: float = 1e-3,
                probe_budget: Optional[int] = None) -> CnEstimate:
    """Bisection for the largest |c| at which the instance stays solvable.

    Solvability is monotone toward 0 (a solution at c1 is a barrier for any
    c between 0 and c1), so a single solvable/unsolvable bracket suffices.
    The scan starts from the closed-form ceiling when one applies and only
    doubles past it when a probe there still solves.
    """
    eq.check_aligned(g)
    label = classify(g, eq)
    if direction is None:
        if label.structural == "a*":
            direction = 1
        elif label.structural == "c*":
            direction = -1
        else:
            raise ValueError("all-nonpositive coefficients: no positive threshold side")
    probe_cfg = cfg if probe_budget is None else replace(cfg, budget=probe_budget)

    cache: dict = {}

    def solvable(s: float):
        key = round(float(s), 15)
        if key not in cache:
            sols = multistart_enumerate(g, with_constant(eq, direction * s), probe_cfg)
            good = [x for x in sols if x.certified]
            cache[key] = good[0] if good else None
        return cache[key]

    ceiling, upper, raw = _scan_ceiling(g, eq, label)
    hi = ceiling * (1 + 1e-9)
    exceeded = False
    for _ in range(6):
        if solvable(hi) is None:
            break
        exceeded = True
        hi *= 2.0
    else:
        raise RuntimeError("still solvable after doubling the ceiling six times")

    lo = None
    s = hi / 2
    while s > 1e-8:
        if solvable(s) is not None:
            lo = s
            break
        s /= 10.0
    if lo is None:
        raise ExistenceHypothesisError(
            "no solvable constant found down to 1e-8; the instance violates "
            "the existence hypotheses")
    while hi - lo > bracket_rtol * lo:
        mid = 0.5 * (lo + hi)
        if solvable(mid) is not None:
            lo = mid
        else:
            hi = mid
    return CnEstimate(lo, direction, (lo, hi), upper, raw, exceeded, solvable(lo))


def multiplicity_search(g: WeightedGraph, eq: ExpNonlinearity,
                        cfg: SolverConfig = SolverConfig()) -> SolutionSet:
    """Hunt for at least two solutions, escalating the budget up to 4x."""
    eq.check_aligned(g)
    sols = multistart_enumerate(g, eq, cfg)
    factor = 2
    while len(sols) < 2 and factor <= 4:
        sols = multistart_enumerate(g, eq, replace(cfg, budget=factor * cfg.budget,
                                                   seed=cfg.seed + factor))
        factor *= 2
    return sols


# ---------------------------------------------------------------------------
# nonexistence certificates (exact rational arithmetic)


@dataclass(frozen=True)
class NonexistenceVerdict:
    certified: bool
    reason: Optional[str] = None


def _poly_sign_definite(fvals, c_x: float, want_negative: bool) -> bool:
    """Exact check that sum f_i z^i + c is < 0 (or > 0) for every z > 0."""
    z = sympy.Symbol("z")
    expr = sympy.Rational(Fraction(float(c_x)))
    for i, fi in enumerate(fvals, start=1):
        if fi != 0:
            expr += sympy.Rational(Fraction(float(fi))) * z ** i
    Q = -expr if want_negative else expr
    Q = sympy.expand(Q)
    if Q == 0:
        return False
    poly = sympy.Poly(Q, z)
    content = poly.all_coeffs()
    # strip powers of z so the origin is not a root of the reduced polynomial
    while content and content[-1] == 0:
        content = content[:-1]
    if not content:
        return False
    reduced = sympy.Poly(content, z)
    if reduced.degree() > 0:
        for root in reduced.real_roots():
            if root > 0:
                return False
    return bool(reduced.eval(1) > 0)


def nonexistence_check(g: WeightedGraph, eq: ExpNonlinearity) -> NonexistenceVerdict:
    """Sound certificate that no solution exists, or 'unknown'.

    Certificates: (1) all coefficients nonpositive with c <= 0 and a
    strictly negative entry or constant (the m-weighted sum of the
    right-hand side is then strictly negative while the Laplacian sums to
    zero); (2)/(3) the right-hand side is pointwise negative/positive for
    every value of u, checked per vertex on the exact rational polynomial;
    (4) for c = 0: every higher coefficient nonnegative and the exact
    m-weighted sum of f_1 positive (convexity of e^{-u} forces that sum to
    be nonpositive at any solution).
    """
    eq.check_aligned(g)
    zero = eq.zero_order()
    if np.all(eq.coeffs <= 0) and np.all(zero <= 0):
        if np.any(eq.coeffs < 0) or np.any(zero < 0):
            return NonexistenceVerdict(
                True, "every right-hand term is nonpositive and one is strictly "
                      "negative, contradicting the zero m-weighted sum")
    if all(_poly_sign_definite(eq.coeffs[:, x], zero[x], want_negative=True)
           for x in range(g.k)):
        return NonexistenceVerdict(
            True, "right-hand side is negative for every u, contradicting the "
                  "zero m-weighted sum")
    if all(_poly_sign_definite(eq.coeffs[:, x], zero[x], want_negative=False)
           for x in range(g.k)):
        return NonexistenceVerdict(
            True, "right-hand side is positive for every u, contradicting the "
                  "zero m-weighted sum")
    if eq.c >= 0 and eq.f0 is None and np.all(eq.coeffs[1:] >= 0):
        total = Fraction(0)
        for mv, fv in zip(g.m, eq.coeff(1)):
            total += Fraction(float(mv)) * Fraction(float(fv))
        if total > 0:
            return NonexistenceVerdict(
                True, "higher coefficients nonnegative with positive exact sum of "
                      "f_1: convexity of e^{-u} forces that sum to be nonpositive")
    return NonexistenceVerdict(False, None)
