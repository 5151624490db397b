r"""Per-source age model under the probabilistic scheduler (PS).

From one source's viewpoint the system is a dual-server loop: the dedicated
server always carries a packet of this source, while the shared server
either carries one of its packets (probability ``p_n`` after each shared
completion) or is "on vacation" serving somebody else.  The absorbing chain
built here has ten transient states, numbered 1..10:

    1   tagged packet on the dedicated server, shared server on vacation
    2   tagged on dedicated, shared busy, dedicated packet is the fresher
    3   tagged on dedicated, shared busy, shared packet is the fresher
    4   tagged on the shared server, dedicated packet not fresher
    5   tagged on shared, dedicated packet fresher
    6   tagged already delivered; fresh packet on dedicated, shared on vacation
    7   delivered; dedicated fresh, shared packet obsolete
    8   delivered; dedicated packet obsolete, shared fresh
    9   delivered; both in-flight packets fresh
    10  delivered; dedicated obsolete, shared on vacation

plus the unsuccessful (11) and successful (12) absorbing states.  States
6..10 are exactly the post-delivery phase, so ``theta`` is 1 there.  The
chain can only start in states 1, 2 or 4, with probabilities obtained from
the three-state recurrent chain of the stationary system (see
:func:`ps_rmc_stationary`).
"""

from __future__ import annotations

import numpy as np

from .chains import AbsorbingChain, RecurrentChain, mean_aoi, stationary_distribution
from .errors import DimensionMismatchError, InvalidProbabilityError, InvalidRateError
from .system import Pmf, SystemSpec, _check_rate

NUM_TRANSIENT = 10
POST_DELIVERY_STATES = (6, 7, 8, 9, 10)


def _check_probability(p_n: float) -> float:
    p_n = float(p_n)
    if not np.isfinite(p_n) or p_n < 0.0 or p_n > 1.0:
        raise InvalidProbabilityError(f"p_n must lie in [0, 1], got {p_n!r}")
    return p_n


def build_ps_amc(mu_n: float, mu: float, p_n: float) -> AbsorbingChain:
    """Absorbing chain of one source under the probabilistic scheduler.

    Zero-rate transitions (at ``p_n`` equal to 0 or 1) are kept in the matrix
    rather than pruned so that state indexing is stable.  The transient block
    is upper block-triangular: no transition leads from the post-delivery
    states 6..10 back to 1..5.
    """
    mu_n = _check_rate(mu_n, "mu_n")
    mu = _check_rate(mu, "mu")
    p_n = _check_probability(p_n)
    q_n = 1.0 - p_n
    pm = p_n * mu
    qm = q_n * mu

    U = np.zeros((NUM_TRANSIENT, NUM_TRANSIENT))
    V = np.zeros((NUM_TRANSIENT, 2))

    def to(src: int, dst: int, rate: float) -> None:
        U[src - 1, dst - 1] += rate

    def absorb(src: int, successful: bool, rate: float) -> None:
        V[src - 1, 1 if successful else 0] += rate

    # Tagged packet still in flight.
    to(1, 6, mu_n); to(1, 3, pm)
    to(2, 7, mu_n); to(2, 3, pm); to(2, 1, qm)
    to(3, 9, mu_n); absorb(3, False, mu)
    to(4, 5, mu_n); to(4, 8, pm); to(4, 10, qm)
    absorb(5, False, mu_n); to(5, 9, pm); to(5, 6, qm)
    # Tagged packet delivered; waiting for the next fresh delivery.
    absorb(6, True, mu_n); to(6, 9, pm)
    absorb(7, True, mu_n); to(7, 9, pm); to(7, 6, qm)
    to(8, 9, mu_n); absorb(8, True, mu)
    absorb(9, True, mu_n + mu)
    to(10, 6, mu_n); to(10, 8, pm)

    np.fill_diagonal(U, np.diag(U) - (U.sum(axis=1) + V.sum(axis=1)))

    f = mu_n + pm  # rate at which fresh packets of this source enter the system
    sigma = np.zeros(NUM_TRANSIENT)
    sigma[0] = q_n * mu_n / f
    sigma[1] = p_n * mu_n / f
    sigma[3] = pm / f

    theta = np.zeros(NUM_TRANSIENT)
    theta[[s - 1 for s in POST_DELIVERY_STATES]] = 1.0

    return AbsorbingChain(U=U, V=V, sigma=sigma, theta=theta)


def ps_rmc_generator(mu_n: float, mu: float, p_n: float) -> RecurrentChain:
    """Three-state recurrent chain of the stationary dual-server system.

    States: 1 = shared server on vacation, 2 = both busy with the dedicated
    packet fresher, 3 = both busy with the shared packet fresher.
    """
    mu_n = _check_rate(mu_n, "mu_n")
    mu = _check_rate(mu, "mu")
    p_n = _check_probability(p_n)
    q_n = 1.0 - p_n
    pm, qm = p_n * mu, q_n * mu
    G = np.array([
        [-pm, 0.0, pm],
        [qm, -mu, pm],
        [qm, mu_n, -(qm + mu_n)],
    ])
    return RecurrentChain(G=G)


def ps_rmc_stationary(mu_n: float, mu: float, p_n: float) -> np.ndarray:
    """Stationary distribution of the PS recurrent chain, in closed form.

    Returns ``[q_n, p_n mu_n / (mu_n + mu), p_n mu / (mu_n + mu)]`` and
    cross-checks it against the generic bordered solve of the generator;
    disagreement beyond 1e-10 signals a construction bug.
    """
    mu_n = _check_rate(mu_n, "mu_n")
    mu = _check_rate(mu, "mu")
    p_n = _check_probability(p_n)
    pi = np.array([
        1.0 - p_n,
        p_n * mu_n / (mu_n + mu),
        p_n * mu / (mu_n + mu),
    ])
    generic = stationary_distribution(ps_rmc_generator(mu_n, mu, p_n))
    if not np.allclose(pi, generic, rtol=0.0, atol=1e-10):
        raise AssertionError(
            f"closed-form stationary vector {pi} disagrees with solve {generic}"
        )
    return pi


def ps_mean_aoi_numeric(mu_n: float, mu: float, p_n: float) -> float:
    """Mean age via the full absorbing-chain solve (no closed form)."""
    return mean_aoi(build_ps_amc(mu_n, mu, p_n))


def ps_closed_form(mu_n, mu, p_n):
    """Closed-form mean age of one source under the probabilistic scheduler.

    Accepts scalars or broadcastable numpy arrays.  At ``p_n = 0`` this
    reduces to ``2 / mu_n``, the age of the dedicated server alone.
    """
    mu_n = np.asarray(mu_n, dtype=float)
    mu = np.asarray(mu, dtype=float)
    p = np.asarray(p_n, dtype=float)
    if np.any(mu_n <= 0.0) or np.any(mu <= 0.0):
        raise InvalidRateError("rates must be positive")
    if np.any(p < 0.0) or np.any(p > 1.0):
        raise InvalidProbabilityError("p_n must lie in [0, 1]")
    num = (
        p * p * mu * mu * (2.0 * mu_n + mu)
        + p * mu * (2.0 * mu_n + mu) ** 2
        + 2.0 * mu_n * (mu_n + mu) ** 2
    )
    den = (mu_n + mu) ** 2 * (p * mu + mu_n) ** 2
    out = num / den
    return float(out) if out.ndim == 0 else out


def ps_weighted_aoi(spec: SystemSpec, pmf: Pmf) -> float:
    """Weighted mean age sum(w_n * age_n) under scheduling probabilities ``pmf``."""
    if len(pmf) != spec.num_sources:
        raise DimensionMismatchError(
            f"pmf has {len(pmf)} entries for {spec.num_sources} sources"
        )
    mu_n = np.array(spec.mu_dedicated)
    w = np.array(spec.weights)
    p = np.array(pmf.p)
    return float(w @ ps_closed_form(mu_n, spec.mu_shared, p))
