r"""Per-source age model under the cyclic scheduler (CS).

A cyclic schedule is a finite repeating pattern of source indices.  Seen
from one source, the pattern projects to a binary serve/vacation pattern:
a slot is *serve* when the shared server carries this source's packet and
*vacation* when it carries anybody else's.  The absorbing chain for a
pattern of length ``m`` with ``k`` serve slots reuses the ten packet states
of the probabilistic model (see :mod:`aoisched.ps`), paired with the
current pattern position:

* serve positions admit packet states {2, 3, 4, 5, 7, 8, 9},
* vacation positions admit packet states {1, 6, 10},

for ``7k + 3(m - k)`` transient states plus the two absorbing ones.  The
pattern position advances exactly when the shared server completes, so all
shared-server transitions move from position ``i`` to ``i + 1`` (cyclic);
dedicated-server transitions stay within the position.

The entry probabilities come from a recurrent chain over ``(position,
packet status)`` pairs with ``2k + (m - k)`` states, mirroring the
three-state chain of the probabilistic model.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .chains import AbsorbingChain, RecurrentChain, mean_aoi, stationary_distribution
from .errors import DimensionMismatchError, PatternLengthError
from .system import SystemSpec, _check_rate

# Dense LU cost grows cubically with pattern length; nothing in this
# package needs patterns anywhere near this long.
MAX_PATTERN_LEN = 512

SERVE_PACKET_STATES = (2, 3, 4, 5, 7, 8, 9)
VACATION_PACKET_STATES = (1, 6, 10)
SERVE_RECURRENT_STATES = (2, 3)
VACATION_RECURRENT_STATES = (1,)


@dataclass(frozen=True)
class CyclicSchedule:
    """Repeating pattern of 1-based source indices served by the shared server.

    Sources may be absent from the pattern entirely; they then see the
    shared server as permanently on vacation.
    """

    slots: tuple[int, ...]

    def __post_init__(self) -> None:
        slots = tuple(int(s) for s in self.slots)
        if not slots:
            raise ValueError("a cyclic schedule needs at least one slot")
        if any(s < 1 for s in slots):
            raise ValueError("source indices are 1-based and must be >= 1")
        object.__setattr__(self, "slots", slots)

    def __len__(self) -> int:
        return len(self.slots)


@dataclass(frozen=True)
class BinaryPattern:
    """Serve/vacation pattern of one source; ``serve[i]`` is True on serve slots."""

    serve: tuple[bool, ...]

    def __post_init__(self) -> None:
        serve = tuple(bool(s) for s in self.serve)
        if not serve:
            raise ValueError("a binary pattern needs at least one slot")
        if len(serve) > MAX_PATTERN_LEN:
            raise PatternLengthError(
                f"pattern length {len(serve)} exceeds the supported {MAX_PATTERN_LEN}"
            )
        object.__setattr__(self, "serve", serve)

    @property
    def m(self) -> int:
        return len(self.serve)

    @property
    def k(self) -> int:
        return sum(self.serve)

    @classmethod
    def all_serve(cls, m: int) -> "BinaryPattern":
        return cls((True,) * m)

    @classmethod
    def all_vacation(cls, m: int) -> "BinaryPattern":
        return cls((False,) * m)

    @classmethod
    def evenly_spread(cls, m: int, k: int) -> "BinaryPattern":
        """Pattern of length ``m`` with ``k`` serve slots spread as uniformly
        as possible (Bresenham spacing)."""
        if not 0 <= k <= m:
            raise ValueError(f"need 0 <= k <= m, got k={k}, m={m}")
        serve = tuple((i + 1) * k // m > i * k // m for i in range(m))
        return cls(serve)


def project_pattern(schedule: CyclicSchedule, source: int) -> BinaryPattern:
    """Binary pattern seen by ``source``: serve where the slot names it."""
    source = int(source)
    if source < 1:
        raise IndexError(f"source index must be >= 1, got {source}")
    return BinaryPattern(tuple(s == source for s in schedule.slots))


def cs_transient_states(pattern: BinaryPattern) -> tuple[tuple[int, int], ...]:
    """Position-major ``(position, packet_state)`` labels of the transient states.

    Positions are 1-based to match the slot numbering used throughout.
    """
    states: list[tuple[int, int]] = []
    for i, serve in enumerate(pattern.serve, start=1):
        for j in SERVE_PACKET_STATES if serve else VACATION_PACKET_STATES:
            states.append((i, j))
    return tuple(states)


def cs_recurrent_states(pattern: BinaryPattern) -> tuple[tuple[int, int], ...]:
    """Position-major ``(position, status)`` labels of the recurrent chain."""
    states: list[tuple[int, int]] = []
    for i, serve in enumerate(pattern.serve, start=1):
        for j in SERVE_RECURRENT_STATES if serve else VACATION_RECURRENT_STATES:
            states.append((i, j))
    return tuple(states)


def cs_rmc_generator(pattern: BinaryPattern, mu_n: float, mu: float) -> RecurrentChain:
    """Generator of the stationary (position, status) chain.

    Shared-server completions (rate ``mu``) advance the position and land in
    status 3 (shared packet fresher) when the next slot is a serve slot, or
    status 1 (vacation) otherwise.  Dedicated completions (rate ``mu_n``)
    matter only in status 3, where they flip the freshness order to status 2.
    Wrap-around transitions of a length-1 pattern that return to the same
    state carry no information and are dropped.
    """
    mu_n = _check_rate(mu_n, "mu_n")
    mu = _check_rate(mu, "mu")
    labels = cs_recurrent_states(pattern)
    index = {lab: idx for idx, lab in enumerate(labels)}
    n = len(labels)
    G = np.zeros((n, n))

    def add(src: tuple[int, int], dst: tuple[int, int], rate: float) -> None:
        if src != dst:
            G[index[src], index[dst]] += rate

    m = pattern.m
    for i, serve in enumerate(pattern.serve, start=1):
        nxt = i % m + 1
        shared_dst = (nxt, 3) if pattern.serve[nxt - 1] else (nxt, 1)
        if serve:
            add((i, 2), shared_dst, mu)
            add((i, 3), (i, 2), mu_n)
            add((i, 3), shared_dst, mu)
        else:
            add((i, 1), shared_dst, mu)
    np.fill_diagonal(G, np.diag(G) - G.sum(axis=1))
    return RecurrentChain(G=G)


def cs_rmc_stationary(
    pattern: BinaryPattern, mu_n: float, mu: float
) -> dict[tuple[int, int], float]:
    """Stationary probabilities keyed by ``(position, status)``."""
    phi = stationary_distribution(cs_rmc_generator(pattern, mu_n, mu))
    return dict(zip(cs_recurrent_states(pattern), phi.tolist()))


def cs_packet_rate(
    pattern: BinaryPattern,
    phi: dict[tuple[int, int], float],
    mu_n: float,
    mu: float,
) -> float:
    """Total stationary rate at which fresh packets of this source enter.

    From any state the dedicated server admits packets at rate ``mu_n``; the
    shared server additionally admits one at rate ``mu`` whenever the *next*
    slot is a serve slot.
    """
    mu_n = _check_rate(mu_n, "mu_n")
    mu = _check_rate(mu, "mu")
    if set(phi) != set(cs_recurrent_states(pattern)):
        raise DimensionMismatchError("phi does not cover the recurrent state space")
    m = pattern.m
    total = 0.0
    for (i, _j), prob in phi.items():
        next_serve = pattern.serve[i % m]
        total += prob * (mu_n + (mu if next_serve else 0.0))
    return total


def cs_initial_vector(
    pattern: BinaryPattern,
    phi: dict[tuple[int, int], float],
    f_c: float,
    mu_n: float,
    mu: float,
) -> np.ndarray:
    """Entry probabilities of the absorbing chain, in transient-state order.

    A fresh packet entering through the dedicated server starts the chain at
    the current position, in packet state 1 (vacation slot) or 2 (serve
    slot).  A packet entering through the shared server does so while the
    position advances, so it starts at the *next* position in packet state 4;
    equivalently, state ``(i, 4)`` draws its mass from position ``i - 1``
    (cyclically).  Mass lands only on states (i,1), (i,2) and (i,4), and sums
    to 1 by construction of ``f_c``.
    """
    mu_n = _check_rate(mu_n, "mu_n")
    mu = _check_rate(mu, "mu")
    labels = cs_transient_states(pattern)
    sigma = np.zeros(len(labels))
    m = pattern.m
    for idx, (i, j) in enumerate(labels):
        serve = pattern.serve[i - 1]
        prev = (i - 2) % m + 1
        prev_serve = pattern.serve[prev - 1]
        if not serve and j == 1:
            sigma[idx] = mu_n * phi[(i, 1)] / f_c
        elif serve and j == 2:
            sigma[idx] = mu_n * (phi[(i, 2)] + phi[(i, 3)]) / f_c
        elif serve and j == 4:
            if prev_serve:
                sigma[idx] = mu * (phi[(prev, 2)] + phi[(prev, 3)]) / f_c
            else:
                sigma[idx] = mu * phi[(prev, 1)] / f_c
    total = sigma.sum()
    if abs(total - 1.0) > 1e-12:
        raise AssertionError(
            f"initial vector sums to {total!r}; phi or f_c is inconsistent"
        )
    return sigma


def cs_theta(pattern: BinaryPattern) -> np.ndarray:
    """Indicator of post-delivery transient states, in transient-state order."""
    labels = cs_transient_states(pattern)
    theta = np.zeros(len(labels))
    for idx, (i, j) in enumerate(labels):
        if pattern.serve[i - 1]:
            theta[idx] = 1.0 if j in (7, 8, 9) else 0.0
        else:
            theta[idx] = 1.0 if j in (6, 10) else 0.0
    return theta


def build_cs_amc(pattern: BinaryPattern, mu_n: float, mu: float) -> AbsorbingChain:
    """Absorbing chain of one source under a serve/vacation pattern.

    Dedicated-server transitions keep the position; shared-server
    transitions advance it.  Wrap-around transitions of a length-1 pattern
    that would return to the same state are dropped (they are invisible to
    an exponential race).
    """
    mu_n = _check_rate(mu_n, "mu_n")
    mu = _check_rate(mu, "mu")
    labels = cs_transient_states(pattern)
    index = {lab: idx for idx, lab in enumerate(labels)}
    n = len(labels)
    U = np.zeros((n, n))
    V = np.zeros((n, 2))

    def to(src: tuple[int, int], dst: tuple[int, int], rate: float) -> None:
        if src != dst:
            U[index[src], index[dst]] += rate

    def absorb(src: tuple[int, int], successful: bool, rate: float) -> None:
        V[index[src], 1 if successful else 0] += rate

    m = pattern.m
    for i, serve in enumerate(pattern.serve, start=1):
        nxt = i % m + 1
        next_serve = pattern.serve[nxt - 1]
        if serve:
            to((i, 2), (i, 7), mu_n)
            to((i, 2), (nxt, 3) if next_serve else (nxt, 1), mu)
            to((i, 3), (i, 9), mu_n)
            absorb((i, 3), False, mu)
            to((i, 4), (i, 5), mu_n)
            to((i, 4), (nxt, 8) if next_serve else (nxt, 10), mu)
            absorb((i, 5), False, mu_n)
            to((i, 5), (nxt, 9) if next_serve else (nxt, 6), mu)
            absorb((i, 7), True, mu_n)
            to((i, 7), (nxt, 9) if next_serve else (nxt, 6), mu)
            to((i, 8), (i, 9), mu_n)
            absorb((i, 8), True, mu)
            absorb((i, 9), True, mu_n + mu)
        else:
            to((i, 1), (i, 6), mu_n)
            to((i, 1), (nxt, 3) if next_serve else (nxt, 1), mu)
            absorb((i, 6), True, mu_n)
            to((i, 6), (nxt, 9) if next_serve else (nxt, 6), mu)
            to((i, 10), (i, 6), mu_n)
            to((i, 10), (nxt, 8) if next_serve else (nxt, 10), mu)

    np.fill_diagonal(U, np.diag(U) - (U.sum(axis=1) + V.sum(axis=1)))

    phi = cs_rmc_stationary(pattern, mu_n, mu)
    f_c = cs_packet_rate(pattern, phi, mu_n, mu)
    sigma = cs_initial_vector(pattern, phi, f_c, mu_n, mu)
    return AbsorbingChain(U=U, V=V, sigma=sigma, theta=cs_theta(pattern))


def cs_mean_aoi(pattern: BinaryPattern, mu_n: float, mu: float) -> float:
    """Mean age of one source whose shared-server slots follow ``pattern``."""
    return mean_aoi(build_cs_amc(pattern, mu_n, mu))


def cs_weighted_aoi(spec: SystemSpec, schedule: CyclicSchedule) -> float:
    """Weighted mean age sum(w_n * age_n) for a full cyclic schedule."""
    if any(s > spec.num_sources for s in schedule.slots):
        raise DimensionMismatchError(
            f"schedule references source {max(schedule.slots)} "
            f"but the system has {spec.num_sources}"
        )
    total = 0.0
    for n in range(1, spec.num_sources + 1):
        pattern = project_pattern(schedule, n)
        total += spec.weights[n - 1] * cs_mean_aoi(
            pattern, spec.mu_dedicated[n - 1], spec.mu_shared
        )
    return total
