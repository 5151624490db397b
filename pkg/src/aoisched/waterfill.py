r"""Optimal probabilistic scheduler via KKT water-filling.

Substituting ``y_n = p_n mu + mu_n`` turns the weighted-age objective into

    sum_n ( a_n / y_n + b_n / y_n^2 ) + const,
    a_n = w_n (2 mu_n + mu) mu / (mu_n + mu)^2,
    b_n = w_n mu mu_n / (mu_n + mu),

minimized over sum_n y_n = eta = mu + sum_n mu_n with y_n >= mu_n.  Both
terms are convex in y_n, so the KKT conditions are sufficient: at a
multiplier ``lam`` for the equality constraint, each unclamped coordinate
solves the cubic

    lam y^3 - a_n y - 2 b_n = 0,

which has exactly one positive real root (sign pattern +,-,-), decreasing
in ``lam``.  Clamping at the floor ``y_n = mu_n`` absorbs the inequality
multipliers, and sum_n y_n(lam) is non-increasing in ``lam``, so a bisection
on ``lam`` meets the equality constraint.

Note on ``b_n``: both objective coefficients carry the source weight
``w_n``; dropping it from ``b_n`` would optimize a different objective
than the weighted age.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, DimensionMismatchError, InvalidRateError
from .ps import ps_closed_form
from .system import Pmf, SystemSpec

MAX_BISECTION_ITERS = 500


@dataclass(frozen=True)
class WaterfillState:
    """Converged water-filling solution: multiplier, allocation and coefficients."""

    lam: float
    y: tuple[float, ...]
    a: tuple[float, ...]
    b: tuple[float, ...]
    eta: float


def objective_terms(spec: SystemSpec) -> tuple[np.ndarray, np.ndarray, float]:
    """Coefficients ``(a, b)`` of the 1/y and 1/y^2 objective terms, plus eta."""
    mu = spec.mu_shared
    mu_n = np.array(spec.mu_dedicated)
    w = np.array(spec.weights)
    a = w * (2.0 * mu_n + mu) * mu / (mu_n + mu) ** 2
    b = w * mu * mu_n / (mu_n + mu)
    eta = mu + float(mu_n.sum())
    return a, b, eta


def objective_value(spec: SystemSpec, pmf: Pmf) -> float:
    """Weighted-age objective in y-coordinates; equals :func:`ps_weighted_aoi`."""
    if len(pmf) != spec.num_sources:
        raise DimensionMismatchError("pmf length does not match the spec")
    a, b, _ = objective_terms(spec)
    mu_n = np.array(spec.mu_dedicated)
    w = np.array(spec.weights)
    mu = spec.mu_shared
    y = np.array(pmf.p) * mu + mu_n
    const = float((w * (2.0 * mu_n + mu) / (mu_n + mu) ** 2).sum())
    return float((a / y + b / y**2).sum()) + const


def cardano_positive_root(lam: float, a: float, b: float) -> float:
    """The unique positive real root of ``lam y^3 - a y - 2 b = 0``.

    Closed-form Cardano evaluation on the depressed cubic, followed by a
    short Newton polish that removes the cancellation the one-real-root
    branch suffers when ``a`` is near zero.
    """
    lam, a, b = float(lam), float(a), float(b)
    if not (lam > 0.0 and b > 0.0) or a < 0.0:
        raise InvalidRateError(f"need lam > 0, b > 0, a >= 0; got {(lam, a, b)}")
    p = -a / lam
    q = -2.0 * b / lam
    half_q = 0.5 * q
    disc = half_q * half_q + (p / 3.0) ** 3
    if disc >= 0.0:
        r = math.sqrt(disc)
        y = float(np.cbrt(-half_q + r) + np.cbrt(-half_q - r))
    else:
        # Three real roots; the largest is the positive one.
        rho = math.sqrt(-((p / 3.0) ** 3))
        phi = math.acos(max(-1.0, min(1.0, -half_q / rho)))
        y = 2.0 * math.sqrt(-p / 3.0) * math.cos(phi / 3.0)
    scale = max(lam * abs(y) ** 3, 2.0 * b)
    for _ in range(3):
        f = lam * y**3 - a * y - 2.0 * b
        if abs(f) <= 1e-14 * scale:
            break
        fp = 3.0 * lam * y * y - a
        if fp <= 0.0:
            break
        y -= f / fp
    return y


def _allocation(lam: float, a: np.ndarray, b: np.ndarray, mu_n: np.ndarray) -> np.ndarray:
    roots = np.array([cardano_positive_root(lam, ai, bi) for ai, bi in zip(a, b)])
    return np.maximum(roots, mu_n)


def waterfill_solve(spec: SystemSpec, epsilon: float = 1e-9) -> WaterfillState:
    """Bisection on the equality multiplier until ``|sum(y) - eta| <= epsilon``.

    Brackets adaptively: the upper end doubles until the allocation falls
    below eta, the lower end halves until it exceeds eta.  The stopping
    tolerance is tightened to ``min(epsilon, 5e-10 * mu)`` so the recovered
    probabilities sum to 1 well within pmf tolerance even for small ``mu``.
    """
    if epsilon <= 0.0:
        raise ValueError("epsilon must be positive")
    a, b, eta = objective_terms(spec)
    mu_n = np.array(spec.mu_dedicated)
    mu = spec.mu_shared
    eps_eff = min(epsilon, 5e-10 * mu)

    lam_lo, lam_hi = 1e-12, 1.0
    iters = 0
    while _allocation(lam_hi, a, b, mu_n).sum() > eta:
        lam_hi *= 2.0
        iters += 1
        if iters > MAX_BISECTION_ITERS:
            raise ConvergenceError("could not bracket the multiplier from above")
    while _allocation(lam_lo, a, b, mu_n).sum() < eta:
        lam_lo *= 0.5
        iters += 1
        if iters > MAX_BISECTION_ITERS:
            raise ConvergenceError("could not bracket the multiplier from below")

    lam = 0.5 * (lam_lo + lam_hi)
    y = _allocation(lam, a, b, mu_n)
    while abs(y.sum() - eta) > eps_eff:
        if y.sum() > eta:
            lam_lo = lam
        else:
            lam_hi = lam
        lam = 0.5 * (lam_lo + lam_hi)
        y = _allocation(lam, a, b, mu_n)
        iters += 1
        if iters > MAX_BISECTION_ITERS:
            raise ConvergenceError(
                f"bisection did not converge (|sum y - eta| = {abs(y.sum() - eta):.3e})"
            )
    return WaterfillState(
        lam=lam, y=tuple(y.tolist()), a=tuple(a.tolist()), b=tuple(b.tolist()), eta=eta
    )


def optimize_ps(spec: SystemSpec, epsilon: float = 1e-9) -> Pmf:
    """Optimal scheduling probabilities of the shared server."""
    state = waterfill_solve(spec, epsilon)
    mu_n = np.array(spec.mu_dedicated)
    p = (np.array(state.y) - mu_n) / spec.mu_shared
    if np.any(p < -1e-12) or np.any(p > 1.0 + 1e-9):
        raise ConvergenceError(f"allocation left the simplex: {p}")
    p = np.clip(p, 0.0, 1.0)
    return Pmf(tuple(p.tolist()))


def kkt_residual(spec: SystemSpec, pmf: Pmf) -> float:
    """How far ``pmf`` is from satisfying the optimality conditions.

    Maximum of: the equality-constraint gap ``|sum(y) - eta|``; the spread
    of the multipliers implied by each unclamped coordinate (they must
    agree at an optimum); and the negativity of the inequality multipliers
    implied on clamped coordinates.  Coordinates with ``p_n <= 1e-9`` count
    as clamped.
    """
    if len(pmf) != spec.num_sources:
        raise DimensionMismatchError("pmf length does not match the spec")
    a, b, eta = objective_terms(spec)
    mu_n = np.array(spec.mu_dedicated)
    p = np.array(pmf.p)
    y = p * spec.mu_shared + mu_n
    res_eq = abs(float(y.sum()) - eta)

    implied = (a * y + 2.0 * b) / y**3
    active = p > 1e-9
    if np.any(active):
        lam_hat = float(implied[active].mean())
        res_stationarity = float(implied[active].max() - implied[active].min())
    else:
        lam_hat = float(implied.max())
        res_stationarity = 0.0
    clamped = ~active
    if np.any(clamped):
        res_gamma = max(0.0, float((implied[clamped] - lam_hat).max()))
    else:
        res_gamma = 0.0
    return max(res_eq, res_stationarity, res_gamma)


def ps_weighted_aoi_batch(spec: SystemSpec, p_matrix: np.ndarray) -> np.ndarray:
    """Weighted age for many pmfs at once; rows of ``p_matrix`` are pmfs."""
    mu_n = np.array(spec.mu_dedicated)
    w = np.array(spec.weights)
    return ps_closed_form(mu_n[None, :], spec.mu_shared, p_matrix) @ w
