"""Cyclic-schedule construction: insertion search, probability-aided spreading,
and the round-robin / uniform baselines."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .cs import BinaryPattern, CyclicSchedule, cs_mean_aoi, cs_weighted_aoi
from .errors import InvalidProbabilityError
from .system import Pmf, SystemSpec
from .waterfill import optimize_ps

# Sources this close to zero probability get no slots in a spread schedule.
ACTIVE_EPS = 1e-6


@dataclass(frozen=True)
class ScheduleBuildReport:
    """A built schedule, its weighted age, and the builder's iteration trace."""

    schedule: CyclicSchedule
    weighted_aoi: float
    iterations: int
    trace: tuple[tuple[int, CyclicSchedule, float], ...]


class _PatternCache:
    """Memoized per-source age evaluation keyed by projected pattern bytes.

    Insertion candidates share most of their projections (inserting source s
    leaves every other source's projection identical across choices of s),
    so caching on the exact serve/vacation byte string removes the bulk of
    the chain solves.  Values are bit-identical to a fresh evaluation since
    the same deterministic solve runs either way.
    """

    def __init__(self, spec: SystemSpec):
        self._spec = spec
        self._per_source: list[dict[bytes, float]] = [
            {} for _ in range(spec.num_sources)
        ]

    def weighted(self, slots: list[int]) -> float:
        total = 0.0
        spec = self._spec
        for n in range(1, spec.num_sources + 1):
            serve = bytes(1 if s == n else 0 for s in slots)
            cache = self._per_source[n - 1]
            value = cache.get(serve)
            if value is None:
                value = cs_mean_aoi(
                    BinaryPattern(tuple(map(bool, serve))),
                    spec.mu_dedicated[n - 1],
                    spec.mu_shared,
                )
                cache[serve] = value
            total += spec.weights[n - 1] * value
        return total


def insertion_search(
    spec: SystemSpec, exploration: int = 6, max_len: int = 64
) -> ScheduleBuildReport:
    """Greedy insertion construction of a cyclic schedule.

    Starting from the empty schedule (weighted age ``sum w_n 2/mu_n``, no
    shared service), each iteration evaluates every (source, position)
    insertion into the current schedule and keeps the argmin; ties prefer
    the lower value, then the earlier position, then the smaller source
    index.  The schedule keeps growing through non-improving iterations
    until ``exploration`` consecutive ones pass without improving the best
    value seen (``exploration=0`` stops at the first non-improving
    iteration), or until ``max_len`` slots.  The best schedule over all
    iterations is returned; its value is re-evaluated fresh so the report
    matches :func:`aoisched.cs.cs_weighted_aoi` exactly.
    """
    if exploration < 0:
        raise ValueError("exploration must be >= 0")
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    cache = _PatternCache(spec)
    n_sources = spec.num_sources
    best_value = sum(
        w * 2.0 / mu_n for w, mu_n in zip(spec.weights, spec.mu_dedicated)
    )
    best_slots: list[int] | None = None
    current: list[int] = []
    trace: list[tuple[int, CyclicSchedule, float]] = []
    streak = 0
    streak_limit = max(1, exploration)
    iteration = 0

    while len(current) < max_len:
        iteration += 1
        chosen_value = np.inf
        chosen: list[int] | None = None
        for pos in range(len(current) + 1):
            for src in range(1, n_sources + 1):
                candidate = current[:pos] + [src] + current[pos:]
                value = cache.weighted(candidate)
                if value < chosen_value:
                    chosen_value = value
                    chosen = candidate
        assert chosen is not None
        current = chosen
        trace.append((iteration, CyclicSchedule(tuple(current)), chosen_value))
        if chosen_value < best_value:
            best_value = chosen_value
            best_slots = list(current)
            streak = 0
        else:
            streak += 1
            if streak >= streak_limit:
                break

    assert best_slots is not None, "the first insertion always improves"
    schedule = CyclicSchedule(tuple(best_slots))
    return ScheduleBuildReport(
        schedule=schedule,
        weighted_aoi=cs_weighted_aoi(spec, schedule),
        iterations=iteration,
        trace=tuple(trace),
    )


def largest_remainder_counts(shares: np.ndarray, period: int) -> np.ndarray:
    """Integer slot counts summing to ``period``, each at least 1.

    Hamilton rounding of ``shares * period`` (ties on the fractional part go
    to the smaller index), then slots are moved from the most over-allocated
    entries until every entry holds at least one.
    """
    quota = shares * period
    counts = np.floor(quota).astype(int)
    deficit = period - int(counts.sum())
    if deficit > 0:
        order = np.argsort(-(quota - counts), kind="stable")
        counts[order[:deficit]] += 1
    while np.any(counts == 0):
        recipient = int(np.argmin(counts))
        over = np.where(counts >= 2, counts - quota, -np.inf)
        donor = int(np.argmax(over))
        counts[donor] -= 1
        counts[recipient] += 1
    return counts


def spread_slots(sources: list[int], counts: np.ndarray) -> list[int]:
    """Credit-based deficit-round-robin spreading of slot counts.

    Credits start at zero; every slot each source earns ``counts_i / period``
    credit, the highest-credit source (ties to the smaller index) is
    scheduled and pays 1.  This yields a near-uniform interleaving.
    """
    period = int(counts.sum())
    share = counts / period
    credits = np.zeros(len(sources))
    slots: list[int] = []
    for _ in range(period):
        credits += share
        i = int(np.argmax(credits))
        slots.append(sources[i])
        credits[i] -= 1.0
    return slots


def pac_build(
    spec: SystemSpec, pmf_opt: Pmf, max_period: int = 50
) -> ScheduleBuildReport:
    """Cyclic schedule whose slot shares track the given scheduling probabilities.

    Sources with probability at most 1e-6 are dropped.  Among periods
    ``K <= max_period`` the one minimizing the infinity-norm gap between
    the slot shares ``K_n / K`` and the probabilities is chosen (ties to
    the smaller period), then the slots are spread by deficit round robin.
    The report's ``iterations`` is the number of candidate periods examined
    and the trace holds the single chosen schedule.
    """
    p = np.array(pmf_opt.p)
    active_idx = [n for n in range(len(p)) if p[n] > ACTIVE_EPS]
    if not active_idx:
        raise InvalidProbabilityError("no source has positive probability")
    p_active = p[active_idx]
    shares = p_active / p_active.sum()

    best_gap = np.inf
    best_counts: np.ndarray | None = None
    best_period = 0
    examined = 0
    for period in range(len(active_idx), max_period + 1):
        counts = largest_remainder_counts(shares, period)
        gap = float(np.abs(counts / period - p_active).max())
        examined += 1
        if gap < best_gap:
            best_gap = gap
            best_counts = counts
            best_period = period
    assert best_counts is not None

    sources = [n + 1 for n in active_idx]
    schedule = CyclicSchedule(tuple(spread_slots(sources, best_counts)))
    value = cs_weighted_aoi(spec, schedule)
    return ScheduleBuildReport(
        schedule=schedule,
        weighted_aoi=value,
        iterations=examined,
        trace=((best_period, schedule, value),),
    )


def round_robin_schedule(num_sources: int) -> CyclicSchedule:
    """One slot per source, in index order."""
    if num_sources < 1:
        raise ValueError("need at least one source")
    return CyclicSchedule(tuple(range(1, num_sources + 1)))


def uniform_pmf(num_sources: int) -> Pmf:
    """Equal scheduling probability for every source."""
    if num_sources < 1:
        raise ValueError("need at least one source")
    return Pmf((1.0 / num_sources,) * num_sources)


def time_policies(
    sizes, is_cap: int = 12, is_max_len: int = 64
) -> list[tuple[int, str, float]]:
    """Wall-clock build times of the optimal-pmf, PAC and IS constructions.

    For each N the system is the scaling family w_n = 1/N, mu = N/2,
    mu_1 = N and mu_n = n for n >= 2.  Insertion search is skipped above
    ``is_cap`` sources.  Returns ``(N, policy, seconds)`` rows.
    """
    rows: list[tuple[int, str, float]] = []
    for n in sizes:
        n = int(n)
        if n < 2:
            raise ValueError("the scaling family needs N >= 2")
        rates = tuple(float(n) if i == 1 else float(i) for i in range(1, n + 1))
        spec = SystemSpec(n / 2.0, rates, (1.0 / n,) * n)

        t0 = time.perf_counter()
        pmf = optimize_ps(spec)
        rows.append((n, "PS-opt", time.perf_counter() - t0))

        t0 = time.perf_counter()
        pac_build(spec, pmf)
        rows.append((n, "PAC", time.perf_counter() - t0))

        if n <= is_cap:
            t0 = time.perf_counter()
            insertion_search(spec, max_len=is_max_len)
            rows.append((n, "IS", time.perf_counter() - t0))
    return rows
