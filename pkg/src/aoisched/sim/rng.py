"""Counter-based random streams for the simulator (SplitMix64).

SplitMix64 outputs a bijective 64-bit hash of a Weyl counter:

    state_k = state_0 + k * 0x9E3779B97F4A7C15   (mod 2^64)
    out_k   = mix64(state_k)

where ``mix64`` is the standard two-multiply finalizer (Steele, Lea &
Flood's SplittableRandom).  Streams are keyed per (seed, replication,
server): the start state is

    mix64( mix64( mix64(seed) ^ rep * 0xA24BAED4963EE407 )
           ^ server * 0x9FB21C651E98DF25 )

so replications and servers draw from independent, reproducible streams.
Uniform doubles take the top 53 bits; exponentials are sampled by
inversion, ``-log1p(-u) / rate``.

Everything here is plain scalar arithmetic on ``numpy.uint64`` so the same
source compiles under numba and runs unchanged in pure Python, producing
bit-identical streams either way.  The arithmetic wraps mod 2^64 by design;
when run uncompiled, numpy flags that as scalar overflow, so callers should
hold ``np.errstate(over="ignore")`` (the simulator does).
"""

from __future__ import annotations

import math

import numpy as np

try:
    from numba.extending import register_jitable

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - numba is a hard dependency here
    NUMBA_AVAILABLE = False

    def register_jitable(func=None, **kwargs):
        if func is None:
            return lambda f: f
        return func

GOLDEN_GAMMA = np.uint64(0x9E3779B97F4A7C15)
REP_SALT = np.uint64(0xA24BAED4963EE407)
SERVER_SALT = np.uint64(0x9FB21C651E98DF25)
_U53_SCALE = 2.0**-53


@register_jitable
def mix64(z: np.uint64) -> np.uint64:
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


@register_jitable
def stream_state(seed: np.uint64, rep: np.uint64, server: np.uint64) -> np.uint64:
    z = mix64(seed)
    z = mix64(z ^ (rep * REP_SALT))
    return mix64(z ^ (server * SERVER_SALT))


@register_jitable
def next_uniform(state: np.uint64) -> tuple[np.uint64, float]:
    """Advance a stream; returns (new_state, u) with u in [0, 1)."""
    state = state + GOLDEN_GAMMA
    bits = mix64(state)
    return state, float(bits >> np.uint64(11)) * _U53_SCALE


@register_jitable
def next_exponential(state: np.uint64, rate: float) -> tuple[np.uint64, float]:
    """Advance a stream; returns (new_state, x) with x ~ Exp(rate) by inversion."""
    state, u = next_uniform(state)
    return state, -math.log1p(-u) / rate
