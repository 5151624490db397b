"""Discrete-event simulation of the N-source, (N+1)-server update system.

Every server is work-conserving: the instant it completes a delivery it
pulls a freshly generated packet (timestamp = now) from its source.  The
shared server picks its next source by pmf draw or by advancing a cyclic
pattern.  A delivery whose timestamp does not exceed the freshest delivered
timestamp of its source is discarded without touching the age.

Per-source age is integrated exactly: between informative deliveries the
age grows at slope 1, so each segment contributes ``d*(a0) + d^2/2`` with
``a0`` the age at the segment start; the warmup prefix of the horizon is
clipped out of the integral.

The inner event loop is the hot path.  It compiles under numba by default;
set the environment variable ``AOISCHED_PURE_PYTHON=1`` (or pass
``backend="python"``) to run the identical source uncompiled.  Both
backends produce bit-identical results; ``benchmarks/bench_backends.py``
compares their throughput.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
from scipy import stats

from ..cs import CyclicSchedule
from ..errors import DimensionMismatchError, InvalidRateError
from ..system import Pmf, SystemSpec
from .rng import NUMBA_AVAILABLE, next_exponential, next_uniform, stream_state

PURE_PYTHON_ENV = "AOISCHED_PURE_PYTHON"

_POLICY_PMF = 0
_POLICY_CYCLIC = 1


@dataclass(frozen=True)
class SimConfig:
    """One simulation request: system, shared-server policy, and run lengths.

    ``horizon`` is simulated time per replication; ``max_events`` caps the
    event count as an alternative stop.  The first ``warmup_fraction`` of
    the horizon is excluded from the age averages.  ``seed`` feeds the
    counter-based streams, so identical configs reproduce bit-identical
    estimates.
    """

    spec: SystemSpec
    policy: Pmf | CyclicSchedule
    horizon: float
    warmup_fraction: float = 0.01
    seed: int = 0
    replications: int = 20
    max_events: int | None = None

    def __post_init__(self) -> None:
        if self.horizon <= 0.0 or not np.isfinite(self.horizon):
            raise ValueError("horizon must be positive and finite")
        if not 0.0 <= self.warmup_fraction < 1.0:
            raise ValueError("warmup_fraction must lie in [0, 1)")
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if self.max_events is not None and self.max_events < 1:
            raise ValueError("max_events must be >= 1 when given")
        n = self.spec.num_sources
        if isinstance(self.policy, Pmf):
            if len(self.policy) != n:
                raise DimensionMismatchError(
                    f"pmf has {len(self.policy)} entries for {n} sources"
                )
        elif isinstance(self.policy, CyclicSchedule):
            if any(s > n for s in self.policy.slots):
                raise DimensionMismatchError(
                    f"schedule references source {max(self.policy.slots)} "
                    f"but the system has {n}"
                )
        else:
            raise TypeError("policy must be a Pmf or a CyclicSchedule")


@dataclass(frozen=True)
class SimEstimate:
    """Simulated per-source time-average ages with 95% confidence halfwidths."""

    per_source_aoi: tuple[float, ...]
    weighted_aoi: float
    ci_halfwidth: tuple[float, ...]
    events: int


def _run_replication(
    seed,
    rep,
    mu,            # f8[N+1]: dedicated rates then the shared rate
    policy_kind,
    pmf_cum,       # f8[N] cumulative pmf (unused for cyclic)
    pattern,       # i8[m] 0-based source per slot (unused for pmf)
    horizon,
    warmup_t,
    max_events,
    area,          # f8[N] out: integrated age past warmup
    log_time,      # f8[cap] out (cap may be 0)
    log_server,    # i8[cap] out
    log_source,    # i8[cap] out
    log_ts,        # f8[cap] out
    log_flag,      # i8[cap] out: 1 delivered, 0 discarded
):
    num_servers = mu.shape[0]
    n_sources = num_servers - 1
    log_cap = log_time.shape[0]

    # Streams: one per server for service draws, one extra for the shared
    # server's source picks.
    states = np.empty(num_servers + 1, dtype=np.uint64)
    for s in range(num_servers + 1):
        states[s] = stream_state(seed, rep, np.uint64(s))

    comp = np.empty(num_servers)
    ts = np.zeros(num_servers)
    latest = np.zeros(n_sources)
    last_change = np.zeros(n_sources)
    for n in range(n_sources):
        area[n] = 0.0

    # t = 0: every server pulls a fresh packet; all ages start at 0.
    for s in range(num_servers):
        states[s], draw = next_exponential(states[s], mu[s])
        comp[s] = draw
    pos = 0
    if policy_kind == _POLICY_CYCLIC:
        shared_src = pattern[0]
    else:
        states[num_servers], u = next_uniform(states[num_servers])
        shared_src = n_sources - 1
        for i in range(n_sources):
            if u < pmf_cum[i]:
                shared_src = i
                break

    events = 0
    logged = 0
    while events < max_events:
        s = 0
        for j in range(1, num_servers):
            if comp[j] < comp[s]:
                s = j
        t = comp[s]
        if t > horizon:
            break
        events += 1

        n = s if s < n_sources else shared_src
        stamp = ts[s]
        delivered = stamp > latest[n]
        if delivered:
            lo = last_change[n] if last_change[n] > warmup_t else warmup_t
            if t > lo:
                d = t - lo
                area[n] += d * (lo - latest[n]) + 0.5 * d * d
            latest[n] = stamp
            last_change[n] = t
        if logged < log_cap:
            log_time[logged] = t
            log_server[logged] = s
            log_source[logged] = n
            log_ts[logged] = stamp
            log_flag[logged] = 1 if delivered else 0
            logged += 1

        # Refill the server: fresh packet now, new service completion.
        ts[s] = t
        if s == n_sources:
            if policy_kind == _POLICY_CYCLIC:
                pos += 1
                if pos == pattern.shape[0]:
                    pos = 0
                shared_src = pattern[pos]
            else:
                states[num_servers], u = next_uniform(states[num_servers])
                shared_src = n_sources - 1
                for i in range(n_sources):
                    if u < pmf_cum[i]:
                        shared_src = i
                        break
        states[s], draw = next_exponential(states[s], mu[s])
        comp[s] = t + draw

    for n in range(n_sources):
        lo = last_change[n] if last_change[n] > warmup_t else warmup_t
        if horizon > lo:
            d = horizon - lo
            area[n] += d * (lo - latest[n]) + 0.5 * d * d
    return events, logged


if NUMBA_AVAILABLE:
    from numba import njit

    _run_replication_jit = njit(cache=True)(_run_replication)
else:  # pragma: no cover - numba is installed in all supported setups
    _run_replication_jit = None


def default_backend() -> str:
    """Backend chosen when none is requested: numba unless disabled by env."""
    disabled = os.environ.get(PURE_PYTHON_ENV, "").strip().lower() in ("1", "true", "yes")
    return "python" if disabled or not NUMBA_AVAILABLE else "numba"


def _kernel(backend: str):
    if backend == "numba":
        if _run_replication_jit is None:
            raise RuntimeError("numba backend requested but numba is unavailable")
        return _run_replication_jit
    if backend == "python":
        return _run_replication
    raise ValueError(f"unknown backend {backend!r}")


def _policy_arrays(config: SimConfig) -> tuple[int, np.ndarray, np.ndarray]:
    if isinstance(config.policy, Pmf):
        cum = np.cumsum(np.array(config.policy.p))
        cum[-1] = 1.0
        return _POLICY_PMF, cum, np.zeros(1, dtype=np.int64)
    pattern = np.array([s - 1 for s in config.policy.slots], dtype=np.int64)
    return _POLICY_CYCLIC, np.zeros(1), pattern


def simulate(
    config: SimConfig,
    event_log: str | None = None,
    backend: str | None = None,
) -> SimEstimate:
    """Run the configured replications and average the per-source ages.

    Confidence halfwidths are Student-t at 95% over replication means (0.0
    when there is a single replication).  When ``event_log`` is given, the
    first replication's events are dumped as tab-separated lines
    ``time, server, source, timestamp, delivered|discarded`` (1-based
    server and source indices; server N+1 is the shared one).
    """
    kernel = _kernel(backend if backend is not None else default_backend())
    spec = config.spec
    n = spec.num_sources
    mu = np.array(list(spec.mu_dedicated) + [spec.mu_shared])
    policy_kind, pmf_cum, pattern = _policy_arrays(config)
    horizon = float(config.horizon)
    warmup_t = config.warmup_fraction * horizon
    max_events = config.max_events if config.max_events is not None else 2**62
    seed = np.uint64(config.seed & 0xFFFFFFFFFFFFFFFF)

    log_cap = 0
    if event_log is not None:
        total_rate = float(mu.sum())
        log_cap = int(horizon * total_rate * 1.5) + 1024
    log_time = np.empty(log_cap)
    log_server = np.empty(log_cap, dtype=np.int64)
    log_source = np.empty(log_cap, dtype=np.int64)
    log_ts = np.empty(log_cap)
    log_flag = np.empty(log_cap, dtype=np.int64)

    reps = config.replications
    averages = np.empty((reps, n))
    area = np.empty(n)
    total_events = 0
    logged = 0
    # The pure-Python path does wrapping uint64 arithmetic in the RNG, which
    # numpy 2 reports as scalar overflow; the wraparound is the point.
    with np.errstate(over="ignore"):
        for rep in range(reps):
            cap_time = log_time if rep == 0 else log_time[:0]
            cap_server = log_server if rep == 0 else log_server[:0]
            cap_source = log_source if rep == 0 else log_source[:0]
            cap_ts = log_ts if rep == 0 else log_ts[:0]
            cap_flag = log_flag if rep == 0 else log_flag[:0]
            events, rep_logged = kernel(
                seed,
                np.uint64(rep),
                mu,
                policy_kind,
                pmf_cum,
                pattern,
                horizon,
                warmup_t,
                max_events,
                area,
                cap_time,
                cap_server,
                cap_source,
                cap_ts,
                cap_flag,
            )
            total_events += int(events)
            if rep == 0:
                logged = int(rep_logged)
            averages[rep, :] = area / (horizon - warmup_t)

    if event_log is not None:
        with open(event_log, "w") as fh:
            for i in range(logged):
                verdict = "delivered" if log_flag[i] else "discarded"
                fh.write(
                    f"{float(log_time[i])!r}\t{int(log_server[i]) + 1}\t"
                    f"{int(log_source[i]) + 1}\t{float(log_ts[i])!r}\t{verdict}\n"
                )

    per_source = averages.mean(axis=0)
    if reps > 1:
        tcrit = float(stats.t.ppf(0.975, reps - 1))
        hw = tcrit * averages.std(axis=0, ddof=1) / np.sqrt(reps)
    else:
        hw = np.zeros(n)
    weighted = float(np.array(spec.weights) @ per_source)
    return SimEstimate(
        per_source_aoi=tuple(per_source.tolist()),
        weighted_aoi=weighted,
        ci_halfwidth=tuple(hw.tolist()),
        events=total_events,
    )


def device_rate(task_bits: float, cpi: float, bpi: float, clock_hz: float) -> float:
    """Service rate of a compute device, in 1/s.

    A task of ``task_bits`` bits on a CPU executing ``bpi`` bits per
    instruction, ``cpi`` cycles per instruction, at ``clock_hz`` cycles per
    second takes ``task_bits * cpi / (bpi * clock_hz)`` seconds; the rate is
    its reciprocal.
    """
    for name, value in (
        ("task_bits", task_bits), ("cpi", cpi), ("bpi", bpi), ("clock_hz", clock_hz)
    ):
        if not np.isfinite(value) or value <= 0.0:
            raise InvalidRateError(f"{name} must be positive, got {value!r}")
    return (bpi * clock_hz) / (task_bits * cpi)
