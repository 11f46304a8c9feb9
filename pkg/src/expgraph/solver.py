"""Root finding for the residual map: damped Newton, deflation multistart,
and constrained minimization between an ordered sub/supersolution pair.

Enumeration is heuristic: the exhaustiveness flag on a solution set only
records that the last half of the start budget produced nothing new, never
a completeness certificate.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .graphs import WeightedGraph
from .nonlinearity import (
    ExpNonlinearity,
    jacobian_sign,
    residual,
    residual_clamped,
    functional,
)

__all__ = [
    "ConfigError",
    "SolverConfig",
    "Solution",
    "SolutionSet",
    "newton_solve",
    "multistart_enumerate",
    "check_sub",
    "check_super",
    "check_ordered_pair",
    "minimize_boxed",
    "BoxMinimizeError",
]

ARMIJO_C1 = 1e-4


class ConfigError(ValueError):
    """Solver configuration violates its invariants."""


@dataclass(frozen=True)
class SolverConfig:
    tol: float = 1e-10              # residual inf-norm target
    max_iter: int = 200             # Newton iteration cap
    damping: float = 0.5            # backtracking factor
    box_radius: float = 20.0        # inf-norm radius for multistart sampling
    budget: int = 500               # number of multistart starts
    deflation_radius: float = 1e-3  # min inf-distance between distinct roots
    seed: int = 0

    def __post_init__(self):
        if min(self.tol, self.max_iter, self.damping, self.box_radius,
               self.budget, self.deflation_radius) <= 0:
            raise ConfigError("all solver parameters must be positive")
        if not self.damping < 1:
            raise ConfigError("damping must lie in (0, 1)")
        if not self.deflation_radius < self.box_radius:
            raise ConfigError("deflation_radius must be smaller than box_radius")


@dataclass(frozen=True)
class Solution:
    u: np.ndarray
    residual_norm: float
    jac_sign: int
    certified: bool

    def __post_init__(self):
        u = np.asarray(self.u, dtype=float)
        u.setflags(write=False)
        object.__setattr__(self, "u", u)


@dataclass(frozen=True)
class SolutionSet:
    solutions: tuple
    exhaustive: bool

    def __len__(self):
        return len(self.solutions)

    def __iter__(self):
        return iter(self.solutions)

    @property
    def all_certified(self) -> bool:
        return all(s.certified for s in self.solutions)


def _finish(g, eq, u, cfg) -> Optional[Solution]:
    from .nonlinearity import ExpOverflowError, _exponent_table

    r, clamped = residual_clamped(g, eq, u)
    rnorm = float(np.abs(r).max())
    if not np.isfinite(rnorm) or rnorm > cfg.tol:
        return None
    if eq.coeffs.any():
        # when every exponential term has decayed below tolerance the point
        # sits in the u -> -inf valley where the residual only vanishes in
        # the limit; it is an artifact, not a root
        table, _ = _exponent_table(eq, u, clamp=True)
        mass = float((np.abs(eq.coeffs) * table).sum(axis=0).max())
        if mass <= 100.0 * cfg.tol:
            return None
    try:
        sign = jacobian_sign(g, eq, u)
    except ExpOverflowError:
        sign, clamped = 0, True
    certified = (not clamped) and sign != 0
    return Solution(u.copy(), rnorm, sign, certified)


def _newton_iterate(g, eq, u0, cfg, deflate_against=()):
    """Damped Newton on the residual (optionally deflated); returns u or None.

    Deflation multiplies the residual by prod_s (1 + 1/|u - s|^2), steering
    iterates away from already-known roots while keeping the zero set
    otherwise unchanged.
    """
    u = np.array(u0, dtype=float)
    escape = 4.0 * cfg.box_radius

    def merit_parts(v):
        r, _ = residual_clamped(g, eq, v)
        scale = 1.0
        for s in deflate_against:
            d2 = float(((v - s) ** 2).sum())
            if d2 < 1e-30:
                return r, np.inf
            scale *= 1.0 + 1.0 / d2
        return r, 0.5 * scale * scale * float((r * r).sum())

    r, merit = merit_parts(u)
    for _ in range(cfg.max_iter):
        if float(np.abs(r).max()) <= cfg.tol:
            return u
        gain_u, _ = _clamped_gain(g, eq, u)
        J = g.lap_matrix + np.diag(gain_u)
        if deflate_against:
            scale = 1.0
            grad_log = np.zeros_like(u)
            for s in deflate_against:
                diff = u - s
                d2 = float((diff * diff).sum())
                if d2 < 1e-30:
                    return None
                scale *= 1.0 + 1.0 / d2
                grad_log += (-2.0 / (d2 * d2)) / (1.0 + 1.0 / d2) * diff
            J = scale * (J + np.outer(r, grad_log))
            r_eff = scale * r
        else:
            r_eff = r
        try:
            step = np.linalg.solve(J, -r_eff)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(J, -r_eff, rcond=None)[0]
        if not np.all(np.isfinite(step)):
            return None
        alpha = 1.0
        improved = False
        while alpha > 1e-12:
            trial = u + alpha * step
            if np.abs(trial).max() <= escape:
                r_t, merit_t = merit_parts(trial)
                if merit_t <= (1 - 2 * ARMIJO_C1 * alpha) * merit:
                    u, r, merit = trial, r_t, merit_t
                    improved = True
                    break
            alpha *= cfg.damping
        if not improved:
            return None
    if float(np.abs(r).max()) <= cfg.tol:
        return u
    return None


def _clamped_gain(g, eq, u):
    from .nonlinearity import _diag_gain

    return _diag_gain(eq, u, clamp=True)


def newton_solve(g: WeightedGraph, eq: ExpNonlinearity, u0: np.ndarray,
                 cfg: SolverConfig = SolverConfig()) -> Optional[Solution]:
    """Damped Newton from u0; None on no-convergence."""
    u0 = g.check_aligned(u0)
    eq.check_aligned(g)
    u = _newton_iterate(g, eq, u0, cfg)
    if u is None:
        return None
    return _finish(g, eq, u, cfg)


def _sort_key(sol: Solution):
    return (round(float(sol.u.min()), 9),) + tuple(round(float(v), 9) for v in sol.u)


def multistart_enumerate(g: WeightedGraph, eq: ExpNonlinearity,
                         cfg: SolverConfig = SolverConfig()) -> SolutionSet:
    """Deflated Newton from constant and uniform starts; deterministic per seed.

    Start points are constants u = s (s on a grid of the box, so e^s covers
    a log grid) plus uniform samples of the box.  A start that converges
    onto a known root is retried once with deflation against the known set.
    An empty result is a legitimate outcome.
    """
    eq.check_aligned(g)
    rng = np.random.default_rng(cfg.seed)
    R = cfg.box_radius
    n_const = min(max(cfg.budget // 3, 1), 41)
    constants = np.linspace(-R, R, n_const)
    found: list = []
    last_new = -1
    # deflated retries explore away from known roots; a handful from
    # diverse starts is enough, so their cost is capped
    retries_left = max(8, cfg.budget // 8)

    def try_accept(u, start_index) -> bool:
        nonlocal last_new
        sol = _finish(g, eq, u, cfg)
        if sol is None:
            return False
        for i, known in enumerate(found):
            if np.abs(known.u - sol.u).max() < cfg.deflation_radius:
                if sol.residual_norm < known.residual_norm:
                    found[i] = sol
                return False
        found.append(sol)
        last_new = start_index
        return True

    for idx in range(cfg.budget):
        if idx < n_const:
            u0 = np.full(g.k, constants[idx])
        else:
            u0 = rng.uniform(-R, R, size=g.k)
        u = _newton_iterate(g, eq, u0, cfg)
        if u is None:
            continue
        if not try_accept(u, idx) and found:
            u_defl = _newton_iterate(g, eq, u0, cfg,
                                     deflate_against=[s.u for s in found])
            if u_defl is not None:
                u_pol = _newton_iterate(g, eq, u_defl, cfg)
                if u_pol is not None:
                    try_accept(u_pol, idx)

    exhausted = last_new < cfg.budget // 2
    ordered = tuple(sorted(found, key=_sort_key))
    return SolutionSet(ordered, exhausted)


# ---------------------------------------------------------------------------
# sub/supersolutions and boxed minimization


def check_super(g: WeightedGraph, eq: ExpNonlinearity, phi: np.ndarray,
                slack: float = 1e-12) -> bool:
    """-lap phi >= F(., phi) pointwise, i.e. residual(phi) <= slack."""
    return bool(np.all(residual(g, eq, phi) <= slack))


def check_sub(g: WeightedGraph, eq: ExpNonlinearity, phi: np.ndarray,
              slack: float = 1e-12) -> bool:
    """-lap phi <= F(., phi) pointwise, i.e. residual(phi) >= -slack."""
    return bool(np.all(residual(g, eq, phi) >= -slack))


def check_ordered_pair(g: WeightedGraph, eq: ExpNonlinearity,
                       phi1: np.ndarray, phi2: np.ndarray,
                       slack: float = 1e-12) -> bool:
    """phi1 <= phi2 pointwise with phi1 a subsolution and phi2 a supersolution."""
    phi1 = g.check_aligned(phi1)
    phi2 = g.check_aligned(phi2)
    return (bool(np.all(phi1 <= phi2))
            and check_sub(g, eq, phi1, slack)
            and check_super(g, eq, phi2, slack))


class BoxMinimizeError(RuntimeError):
    """The boxed minimizer failed to solve; the bracketing pair was invalid."""


def minimize_boxed(g: WeightedGraph, eq: ExpNonlinearity,
                   phi1: np.ndarray, phi2: np.ndarray,
                   cfg: SolverConfig = SolverConfig(),
                   slack: float = 1e-12) -> Solution:
    """Minimize the energy over {phi1 <= u <= phi2}; the minimizer solves.

    Projected gradient descent with a spectral step and backtracking, then
    an active-set Newton polish.  Requires phi1/phi2 to be an ordered
    sub/supersolution pair; a boundary-pinned minimizer with nonzero
    residual is reported as a violation of that precondition.
    """
    phi1 = g.check_aligned(phi1)
    phi2 = g.check_aligned(phi2)
    if not check_ordered_pair(g, eq, phi1, phi2, slack):
        raise ValueError("phi1/phi2 is not an ordered sub/supersolution pair")

    u = 0.5 * (phi1 + phi2)
    grad = -g.m * residual_clamped(g, eq, u)[0]
    J = functional(g, eq, u)
    step = 1.0
    prev_u, prev_grad = None, None
    for _ in range(5000):
        if prev_u is not None:
            s = u - prev_u
            y = grad - prev_grad
            sy = float((s * y).sum())
            step = float((s * s).sum()) / sy if sy > 1e-300 else 1.0
            step = min(max(step, 1e-8), 1e8)
        alpha = step
        moved = False
        for _ in range(60):
            trial = np.clip(u - alpha * grad, phi1, phi2)
            d = trial - u
            if np.abs(d).max() < 1e-16:
                break
            J_t = functional(g, eq, trial)
            if J_t <= J + ARMIJO_C1 * float((grad * d).sum()):
                prev_u, prev_grad = u, grad
                u, J = trial, J_t
                grad = -g.m * residual_clamped(g, eq, u)[0]
                moved = True
                break
            alpha *= 0.5
        proj_step = np.abs(np.clip(u - grad, phi1, phi2) - u).max()
        if proj_step < 1e-9 or not moved:
            break

    u = _active_set_polish(g, eq, u, phi1, phi2, cfg)
    r = residual(g, eq, u)
    rnorm = float(np.abs(r).max())
    if rnorm > cfg.tol:
        raise BoxMinimizeError(
            f"boxed minimizer residual {rnorm:.3e} exceeds tol; "
            "the sub/supersolution pair cannot have been valid")
    sign = jacobian_sign(g, eq, u)
    return Solution(u, rnorm, sign, True)


def _active_set_polish(g, eq, u, phi1, phi2, cfg):
    u = np.clip(u, phi1, phi2)
    for _ in range(cfg.max_iter):
        r, _ = residual_clamped(g, eq, u)
        grad = -g.m * r
        lower = (u - phi1 <= 1e-11) & (grad > 0)
        upper = (phi2 - u <= 1e-11) & (grad < 0)
        free = ~(lower | upper)
        if not free.any():
            return u
        if float(np.abs(r[free]).max()) <= 0.1 * cfg.tol:
            return u
        gain, _ = _clamped_gain(g, eq, u)
        J = g.lap_matrix + np.diag(gain)
        Jff = J[np.ix_(free.nonzero()[0], free.nonzero()[0])]
        try:
            delta = np.linalg.solve(Jff, -r[free])
        except np.linalg.LinAlgError:
            delta = np.linalg.lstsq(Jff, -r[free], rcond=None)[0]
        merit = float((r[free] ** 2).sum())
        alpha = 1.0
        while alpha > 1e-12:
            trial = u.copy()
            trial[free] += alpha * delta
            trial = np.clip(trial, phi1, phi2)
            r_t, _ = residual_clamped(g, eq, trial)
            if float((r_t[free] ** 2).sum()) <= merit * (1 - 2 * ARMIJO_C1 * alpha):
                u = trial
                break
            alpha *= cfg.damping
        else:
            return u
    return u
