"""Benchmark the compiled event loop against the pure-Python fallback.

The simulator's inner loop runs either through numba (default) or as plain
Python (``AOISCHED_PURE_PYTHON=1`` or ``backend="python"``).  Both execute
the same source and must produce bit-identical estimates; this script
checks that and reports the throughput of each path.

Run:  python benchmarks/bench_backends.py
"""

import time

from aoisched.sim import SimConfig, simulate
from aoisched.sim.engine import default_backend
from aoisched.system import Pmf, SystemSpec

SPEC = SystemSpec(4.0, (3.0, 1.0, 2.0), (0.4, 0.3, 0.3))
POLICY = Pmf((0.5, 0.3, 0.2))


def run(backend: str, horizon: float, reps: int):
    config = SimConfig(SPEC, POLICY, horizon=horizon, replications=reps, seed=42)
    start = time.perf_counter()
    estimate = simulate(config, backend=backend)
    elapsed = time.perf_counter() - start
    return estimate, elapsed


def main() -> None:
    print("=" * 64)
    print("Simulator backend benchmark")
    print("=" * 64)
    print(f"default backend here: {default_backend()}")

    # Warm up JIT compilation outside the timed region.
    run("numba", horizon=100.0, reps=1)

    # Equality check on a small run both paths can afford.
    est_nb, _ = run("numba", horizon=2000.0, reps=2)
    est_py, _ = run("python", horizon=2000.0, reps=2)
    identical = est_nb == est_py
    print(f"bit-identical small-run estimates: {identical}")
    if not identical:
        raise SystemExit("backend mismatch; the paths must agree exactly")

    est, t_py = run("python", horizon=4000.0, reps=2)
    rate_py = est.events / t_py
    print(f"python: {est.events:9d} events in {t_py:8.3f} s  ({rate_py:12.0f} events/s)")

    est, t_nb = run("numba", horizon=200000.0, reps=10)
    rate_nb = est.events / t_nb
    print(f"numba:  {est.events:9d} events in {t_nb:8.3f} s  ({rate_nb:12.0f} events/s)")

    print(f"speedup: {rate_nb / rate_py:.1f}x")


if __name__ == "__main__":
    main()
