"""The exponential nonlinearity and the residual map of the main equation.

The equation studied throughout is

    -lap u(x) = sum_{i=1}^n f_i(x) e^{i u(x)} + c  (+ f0(x), optional),

on a finite connected weighted graph.  ``residual(g, eq, u)`` is
lap u + RHS, so solutions are exactly the zeros of the residual.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .graphs import WeightedGraph, average, gamma, mean_zero_poisson_solve

__all__ = [
    "ExpOverflowError",
    "ExpNonlinearity",
    "LeadingProfile",
    "CaseLabel",
    "evaluate",
    "residual",
    "residual_clamped",
    "jacobian",
    "degree_sign_matrix",
    "jacobian_sign",
    "functional",
    "functional_gradient",
    "leading_profile",
    "classify",
    "normalize_f0",
    "translate",
    "predicted_degree",
    "f1bar_is_zero",
]

# exp arguments beyond this are rejected (or clamped and flagged, in the
# solver's internal mode) instead of silently producing inf
EXP_ARG_LIMIT = 700.0


class ExpOverflowError(FloatingPointError):
    """An exponent i*u(x) exceeded the overflow guard."""


@dataclass(frozen=True)
class ExpNonlinearity:
    """Coefficient data (f_1 .. f_n, c) of the exponential nonlinearity.

    ``coeffs`` is an (n, k) array whose row i-1 holds f_i.  ``f0`` is an
    optional non-constant source term; most operations require it to be
    absent (fold it away with :func:`normalize_f0`).  Trailing identically
    zero coefficient rows are truncated with a warning so that f_n is not
    always zero.
    """

    coeffs: np.ndarray
    c: float
    f0: Optional[np.ndarray] = None

    def __post_init__(self):
        coeffs = np.atleast_2d(np.asarray(self.coeffs, dtype=float))
        if coeffs.ndim != 2 or coeffs.shape[0] < 1:
            raise ValueError("coeffs must be an (n, k) array with n >= 1")
        if not np.all(np.isfinite(coeffs)):
            raise ValueError("non-finite coefficient")
        n = coeffs.shape[0]
        while n > 1 and not coeffs[n - 1].any():
            n -= 1
        if n < coeffs.shape[0]:
            warnings.warn(
                f"top coefficient rows are identically zero; truncating degree "
                f"{coeffs.shape[0]} -> {n}", stacklevel=2)
            coeffs = coeffs[:n]
        coeffs = np.array(coeffs)
        coeffs.setflags(write=False)
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "c", float(self.c))
        if self.f0 is not None:
            f0 = np.asarray(self.f0, dtype=float)
            if f0.shape != (coeffs.shape[1],) or not np.all(np.isfinite(f0)):
                raise ValueError("f0 must be a finite vertex function")
            f0 = np.array(f0)
            f0.setflags(write=False)
            object.__setattr__(self, "f0", f0)

    @property
    def n(self) -> int:
        return self.coeffs.shape[0]

    @property
    def k(self) -> int:
        return self.coeffs.shape[1]

    def coeff(self, i: int) -> np.ndarray:
        """f_i for 1 <= i <= n."""
        return self.coeffs[i - 1]

    def zero_order(self) -> np.ndarray:
        """The full zeroth-order term c + f0 as a vertex function."""
        base = np.full(self.k, self.c)
        return base if self.f0 is None else base + self.f0

    def check_aligned(self, g: WeightedGraph):
        if self.k != g.k:
            raise ValueError(f"coefficients sized {self.k} on a {g.k}-vertex graph")


def _exponent_table(eq: ExpNonlinearity, u: np.ndarray, clamp: bool):
    """e^{i u} for i = 1..n, row-major; returns (table, clamped?)."""
    args = np.arange(1, eq.n + 1)[:, None] * u[None, :]
    over = args > EXP_ARG_LIMIT
    if over.any():
        if not clamp:
            raise ExpOverflowError(
                f"exponent {args.max():.3g} exceeds the overflow guard {EXP_ARG_LIMIT:g}")
        args = np.minimum(args, EXP_ARG_LIMIT)
        return np.exp(args), True
    return np.exp(args), False


def evaluate(eq: ExpNonlinearity, x: int, y: float) -> float:
    """F(x, y) = sum_i f_i(x) e^{i y} + c (+ f0(x))."""
    if not -np.inf < y:
        raise ValueError("y must be finite or -inf")
    if eq.n * y > EXP_ARG_LIMIT:
        raise ExpOverflowError(f"exponent {eq.n * y:.3g} exceeds the overflow guard")
    z = np.exp(y)
    acc = 0.0
    for i in range(eq.n, 0, -1):
        acc = acc * z + eq.coeffs[i - 1, x]
    extra = 0.0 if eq.f0 is None else float(eq.f0[x])
    return float(acc * z + eq.c + extra)


def residual_clamped(g: WeightedGraph, eq: ExpNonlinearity, u: np.ndarray):
    """(lap u + F(., u), clamped?) without raising on overflow."""
    eq.check_aligned(g)
    u = g.check_aligned(u)
    table, clamped = _exponent_table(eq, u, clamp=True)
    rhs = (eq.coeffs * table).sum(axis=0) + eq.zero_order()
    return g.lap_matrix @ u + rhs, clamped


def residual(g: WeightedGraph, eq: ExpNonlinearity, u: np.ndarray) -> np.ndarray:
    """lap u + sum_i f_i e^{iu} + c (+ f0); zero exactly at solutions."""
    eq.check_aligned(g)
    u = g.check_aligned(u)
    table, _ = _exponent_table(eq, u, clamp=False)
    rhs = (eq.coeffs * table).sum(axis=0) + eq.zero_order()
    return g.lap_matrix @ u + rhs


def _diag_gain(eq: ExpNonlinearity, u: np.ndarray, clamp: bool):
    table, clamped = _exponent_table(eq, u, clamp)
    i = np.arange(1, eq.n + 1)[:, None]
    return (i * eq.coeffs * table).sum(axis=0), clamped


def jacobian(g: WeightedGraph, eq: ExpNonlinearity, u: np.ndarray) -> np.ndarray:
    """Derivative of the residual map: lap + diag(sum_i i f_i e^{iu})."""
    eq.check_aligned(g)
    u = g.check_aligned(u)
    gain, _ = _diag_gain(eq, u, clamp=False)
    return g.lap_matrix + np.diag(gain)


def degree_sign_matrix(g: WeightedGraph, eq: ExpNonlinearity, u: np.ndarray) -> np.ndarray:
    """Symmetric matrix L - diag(m * sum_i i f_i e^{iu}).

    Its determinant sign orients a nondegenerate solution in the Brouwer
    degree count and is invariant under vertex elimination (the Schur
    factor det R is positive).
    """
    eq.check_aligned(g)
    u = g.check_aligned(u)
    gain, _ = _diag_gain(eq, u, clamp=False)
    return g.minus_lap_unit - np.diag(g.m * gain)


def jacobian_sign(g: WeightedGraph, eq: ExpNonlinearity, u: np.ndarray,
                  singular_rtol: float = 1e-12) -> int:
    """Orientation sign in {-1, 0, +1}; 0 flags a numerically singular point."""
    S = degree_sign_matrix(g, eq, u)
    sign, logdet = np.linalg.slogdet(S)
    if sign == 0:
        return 0
    scale = max(np.abs(S).max(), 1e-300)
    if logdet <= np.log(singular_rtol) + g.k * np.log(scale):
        return 0
    return int(sign)


def functional(g: WeightedGraph, eq: ExpNonlinearity, u: np.ndarray) -> float:
    """Energy whose critical points are the solutions.

    J(u) = sum_V ( |grad u|^2 / 2 - sum_i f_i e^{iu} / i - (c + f0) u ).
    """
    eq.check_aligned(g)
    u = g.check_aligned(u)
    table, _ = _exponent_table(eq, u, clamp=False)
    inv_i = 1.0 / np.arange(1, eq.n + 1)[:, None]
    pointwise = (0.5 * gamma(g, u, u)
                 - (inv_i * eq.coeffs * table).sum(axis=0)
                 - eq.zero_order() * u)
    return float((g.m * pointwise).sum())


def functional_gradient(g: WeightedGraph, eq: ExpNonlinearity, u: np.ndarray) -> np.ndarray:
    """Euclidean gradient of the energy: -m * residual."""
    return -g.m * residual(g, eq, u)


# ---------------------------------------------------------------------------
# classification


@dataclass(frozen=True)
class LeadingProfile:
    """Per-vertex leading coefficient and finiteness of the growth limit.

    ``leading[x]`` is the highest-index nonvanishing f_i(x) (0 if all
    vanish); the limit of F(x, y) as y -> +inf is finite at every vertex
    iff ``leading <= 0`` everywhere.
    """

    leading: np.ndarray
    q_finite: bool


def leading_profile(eq: ExpNonlinearity) -> LeadingProfile:
    lead = np.zeros(eq.k)
    for i in range(eq.n, 0, -1):
        row = eq.coeffs[i - 1]
        mask = (lead == 0) & (row != 0)
        lead[mask] = row[mask]
    lead.setflags(write=False)
    return LeadingProfile(lead, bool(np.all(lead <= 0)))


def f1bar_is_zero(g: WeightedGraph, eq: ExpNonlinearity) -> bool:
    """Mean of f_1 indistinguishable from zero (tolerance 1e-12 * max|f_1|)."""
    f1 = eq.coeff(1)
    scale = float(np.abs(f1).max())
    return abs(average(g, f1)) <= 1e-12 * scale


@dataclass(frozen=True)
class CaseLabel:
    """Structural case of the coefficient data plus the solvability regime.

    structural: "a*" (leading coefficient positive somewhere), "b*" (every
    f_i <= 0), or "c*" (leading <= 0 everywhere but some f_i positive
    somewhere).  regime: "degree-nonzero", "no-solution", "A*" (growth
    limit +inf, degree zero side), or "B*" (finite limit, degree zero
    side).  For n = 2 the refined quadratic label in {a, b, c, d} is also
    reported.
    """

    structural: str
    regime: str
    n2: Optional[str] = None


def _refined_n2(eq: ExpNonlinearity) -> Optional[str]:
    if eq.n != 2:
        return None
    f2, f1 = eq.coeff(2), eq.coeff(1)
    if np.any(f2 > 0):
        return "a"
    if np.all(f1 <= 0):
        return "b"
    if np.any((f2 == 0) & (f1 > 0)):
        return "c"
    return "d"


def classify(g: WeightedGraph, eq: ExpNonlinearity) -> CaseLabel:
    if eq.f0 is not None:
        raise ValueError("classification needs a constant zeroth-order term; "
                         "apply normalize_f0 first")
    eq.check_aligned(g)
    profile = leading_profile(eq)
    if np.any(profile.leading > 0):
        structural = "a*"
    elif np.all(eq.coeffs <= 0):
        structural = "b*"
    else:
        structural = "c*"
    pred = predicted_degree(g, eq)
    if structural == "b*":
        regime = "degree-nonzero" if eq.c > 0 else "no-solution"
    elif pred in (1, -1):
        regime = "degree-nonzero"
    else:
        regime = "A*" if structural == "a*" else "B*"
    return CaseLabel(structural, regime, _refined_n2(eq))


def predicted_degree(g: WeightedGraph, eq: ExpNonlinearity) -> Optional[int]:
    """Brouwer degree from the sign table; None when it is undetermined.

    +1 when the growth limit is finite and c > 0 (or c = 0 with mean f_1
    positive); -1 when the limit is +inf and c < 0 (or c = 0 with mean f_1
    negative); 0 otherwise.  Undetermined exactly when c = 0 and mean f_1
    vanishes.
    """
    if eq.f0 is not None:
        raise ValueError("degree prediction needs a constant zeroth-order term")
    eq.check_aligned(g)
    q_finite = leading_profile(eq).q_finite
    if eq.c > 0:
        return 1 if q_finite else 0
    if eq.c < 0:
        return -1 if not q_finite else 0
    if f1bar_is_zero(g, eq):
        return None
    if average(g, eq.coeff(1)) > 0:
        return 1 if q_finite else 0
    return -1 if not q_finite else 0


# ---------------------------------------------------------------------------
# transforms


def normalize_f0(g: WeightedGraph, eq: ExpNonlinearity,
                 f0: Optional[np.ndarray] = None):
    """Fold a non-constant source into the constant term.

    Solves lap v = mean(f0) - f0 with m-mean-zero v and substitutes
    w = u - v, giving coefficients f_i e^{iv} and constant c + mean(f0).
    Returns ``(new_eq, v)``; solutions correspond via u = w + v.
    """
    eq.check_aligned(g)
    if f0 is None:
        f0 = eq.f0 if eq.f0 is not None else np.zeros(g.k)
    f0 = g.check_aligned(f0)
    f0bar = average(g, f0)
    v = mean_zero_poisson_solve(g, f0bar - f0)
    i = np.arange(1, eq.n + 1)[:, None]
    coeffs = eq.coeffs * np.exp(i * v[None, :])
    return ExpNonlinearity(coeffs, eq.c + f0bar), v


def translate(eq: ExpNonlinearity, s: float) -> ExpNonlinearity:
    """Equation satisfied by u - s: coefficients become f_i e^{i s}."""
    i = np.arange(1, eq.n + 1)[:, None]
    return ExpNonlinearity(eq.coeffs * np.exp(i * s), eq.c, eq.f0)
