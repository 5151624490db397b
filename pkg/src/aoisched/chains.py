r"""Finite Markov-chain numerics: absorbing-chain age ratios and stationary solves.

The per-source age models in this package all reduce to one absorbing
continuous-time Markov chain (AMC) per source.  The chain tracks a tagged
packet from the instant it enters the system until either

* the *successful* absorbing state: a fresh packet is delivered after the
  tagged one, closing an age cycle, or
* the *unsuccessful* absorbing state: the tagged packet is rendered obsolete
  by an out-of-order delivery and discarded.

With ``U`` the transient sub-generator, ``sigma`` the row vector of entry
probabilities, and ``theta`` the 0/1 indicator of the transient states in
which the tagged packet has already been delivered, the mean age is the
resolvent ratio

    mean_aoi = - (sigma U^-2 theta) / (sigma U^-1 theta).

Both quantities are computed with two dense linear solves against ``U``;
the inverse is never formed.  Chains here stay small (a few hundred states
for long cyclic patterns), so dense LU with partial pivoting is used
throughout and sparse machinery is deliberately avoided.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateThetaError, ReducibleChainError, SingularChainError

# Structural checks (row sums, probability mass) use this absolute tolerance;
# numerical equality in tests uses 1e-10 relative.  Double-precision LU on
# well-conditioned rate matrices supports both comfortably.
STRUCT_TOL = 1e-12


def _as_float_array(x, name: str) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


@dataclass(frozen=True)
class AbsorbingChain:
    """Absorbing CTMC with two absorbing states (unsuccessful, successful).

    Attributes
    ----------
    U : (n, n) ndarray
        Sub-generator over the transient states; rates in 1/time.
    V : (n, 2) ndarray
        Absorption rates; column 0 leads to the unsuccessful state,
        column 1 to the successful one.
    sigma : (n,) ndarray
        Initial probability row vector over the transient states.
    theta : (n,) ndarray
        0/1 indicator of transient states entered only after the tagged
        packet has been delivered.

    Construction only enforces shapes; use :func:`validate_chain` for the
    full structural invariants (sign pattern, zero row sums, mass balance).
    """

    U: np.ndarray
    V: np.ndarray
    sigma: np.ndarray
    theta: np.ndarray

    def __post_init__(self) -> None:
        U = _as_float_array(self.U, "U")
        V = _as_float_array(self.V, "V")
        sigma = _as_float_array(self.sigma, "sigma")
        theta = _as_float_array(self.theta, "theta")
        n = U.shape[0]
        if U.ndim != 2 or U.shape != (n, n) or n == 0:
            raise ValueError("U must be a nonempty square matrix")
        if V.shape != (n, 2):
            raise ValueError("V must have shape (num_transient, 2)")
        if sigma.shape != (n,):
            raise ValueError("sigma must have shape (num_transient,)")
        if theta.shape != (n,):
            raise ValueError("theta must have shape (num_transient,)")
        object.__setattr__(self, "U", U)
        object.__setattr__(self, "V", V)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "theta", theta)

    @property
    def num_transient(self) -> int:
        return self.U.shape[0]


@dataclass(frozen=True)
class RecurrentChain:
    """Irreducible CTMC given by its generator matrix ``G``.

    Row sums must vanish and off-diagonal entries must be nonnegative;
    both are enforced at construction.  Irreducibility is the caller's
    obligation and is surfaced by :func:`stationary_distribution`, which
    raises :class:`ReducibleChainError` when the null space of ``G`` has
    dimension greater than one.
    """

    G: np.ndarray

    def __post_init__(self) -> None:
        G = _as_float_array(self.G, "G")
        if G.ndim != 2 or G.shape[0] != G.shape[1] or G.shape[0] == 0:
            raise ValueError("G must be a nonempty square matrix")
        off = G - np.diag(np.diag(G))
        if np.any(off < 0.0):
            raise ValueError("off-diagonal entries of G must be nonnegative")
        row = np.abs(G.sum(axis=1))
        if np.any(row > STRUCT_TOL * max(1.0, np.abs(G).max())):
            bad = int(np.argmax(row))
            raise ValueError(f"generator row {bad} does not sum to zero")
        object.__setattr__(self, "G", G)

    @property
    def num_states(self) -> int:
        return self.G.shape[0]


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of :func:`validate_chain`: empty ``violations`` means pass."""

    violations: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.violations


def validate_chain(chain: AbsorbingChain) -> ValidationReport:
    """Check the structural invariants of an absorbing chain.

    Reports (rather than raises) so that deliberately malformed chains can
    be inspected.  Checks: sign pattern of ``U`` and ``V``, zero row sums of
    ``[U | V]``, ``sigma`` a probability vector, ``theta`` binary, and
    non-singularity of ``U`` (every transient state must reach absorption).
    """
    U, V, sigma, theta = chain.U, chain.V, chain.sigma, chain.theta
    n = chain.num_transient
    violations: list[str] = []

    off = U - np.diag(np.diag(U))
    for i in np.nonzero((off < 0.0).any(axis=1))[0]:
        violations.append(f"U row {i}: negative off-diagonal entry")
    for i in np.nonzero(np.diag(U) >= 0.0)[0]:
        violations.append(f"U row {i}: diagonal entry must be negative")
    for i in np.nonzero((V < 0.0).any(axis=1))[0]:
        violations.append(f"V row {i}: negative absorption rate")

    scale = max(1.0, np.abs(U).max(), np.abs(V).max())
    row = U.sum(axis=1) + V.sum(axis=1)
    for i in np.nonzero(np.abs(row) > STRUCT_TOL * scale)[0]:
        violations.append(f"row {i}: U and V rates do not balance (sum {row[i]:.3e})")

    if np.any(sigma < 0.0):
        violations.append("sigma has negative entries")
    if abs(sigma.sum() - 1.0) > STRUCT_TOL:
        violations.append(f"sigma sums to {sigma.sum()!r}, not 1")
    if not np.all((theta == 0.0) | (theta == 1.0)):
        violations.append("theta entries must be 0 or 1")

    if np.all(np.isfinite(U)) and np.linalg.matrix_rank(U) < n:
        violations.append("U is singular: some transient state never absorbs")

    return ValidationReport(tuple(violations))


def mean_aoi(chain: AbsorbingChain) -> float:
    r"""Mean age of information of the source modeled by ``chain``.

    Evaluates ``-(sigma U^-2 theta) / (sigma U^-1 theta)`` via two linear
    solves against ``U``.  The denominator is the (negative) expected time
    spent in the post-delivery states, i.e. the mean age-cycle length; the
    numerator weighs that time by when it occurs.

    Raises
    ------
    DegenerateThetaError
        If ``theta`` is all zeros (ratio would be 0/0).
    SingularChainError
        If the solve against ``U`` fails.
    """
    theta = chain.theta
    if not np.any(theta):
        raise DegenerateThetaError("theta is all zeros")
    try:
        x1 = np.linalg.solve(chain.U, theta)  # U^-1 theta
        x2 = np.linalg.solve(chain.U, x1)     # U^-2 theta
    except np.linalg.LinAlgError as exc:
        raise SingularChainError(str(exc)) from exc
    den = float(chain.sigma @ x1)
    num = float(chain.sigma @ x2)
    if den == 0.0 or not np.isfinite(den) or not np.isfinite(num):
        raise SingularChainError("resolvent solve produced a degenerate ratio")
    return -num / den


def stationary_distribution(rmc: RecurrentChain) -> np.ndarray:
    """Stationary row vector phi with ``phi G = 0``, ``phi >= 0``, ``sum(phi) = 1``.

    Solved as a bordered linear system: transpose ``G``, overwrite the last
    equation with the normalization constraint, and LU-solve.  For a chain
    whose null space has dimension one this system is nonsingular; a larger
    null space (more than one closed class) makes it singular, which is
    reported as :class:`ReducibleChainError`.
    """
    G = rmc.G
    n = rmc.num_states
    A = G.T.copy()
    A[-1, :] = 1.0
    b = np.zeros(n)
    b[-1] = 1.0
    try:
        phi = np.linalg.solve(A, b)
    except np.linalg.LinAlgError as exc:
        raise ReducibleChainError(
            "stationary distribution is not unique (reducible chain)"
        ) from exc
    residual = np.abs(phi @ G).max()
    scale = max(1.0, np.abs(G).max())
    if residual > 1e-9 * scale or np.any(phi < -1e-9):
        raise ReducibleChainError(
            f"stationary solve failed its residual check (|phi G| = {residual:.3e})"
        )
    return phi
