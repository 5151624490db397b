"""System description: N sources, N dedicated servers, one shared server."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError, InvalidProbabilityError, InvalidRateError

WEIGHT_TOL = 1e-9


def _check_rate(value: float, name: str) -> float:
    value = float(value)
    if not np.isfinite(value) or value <= 0.0:
        raise InvalidRateError(f"{name} must be a positive finite rate, got {value!r}")
    return value


@dataclass(frozen=True)
class SystemSpec:
    """Rates and weights of an N-source system with per-source dedicated servers.

    ``mu_shared`` is the exponential service rate of the single shared server;
    ``mu_dedicated[n]`` the rate of source n's dedicated server.  ``weights``
    must be strictly positive and sum to 1 (within 1e-9); use
    :meth:`from_unnormalized` to normalize arbitrary positive weights first.
    """

    mu_shared: float
    mu_dedicated: tuple[float, ...]
    weights: tuple[float, ...]

    def __post_init__(self) -> None:
        mu = _check_rate(self.mu_shared, "mu_shared")
        ded = tuple(_check_rate(r, f"mu_dedicated[{i + 1}]") for i, r in enumerate(self.mu_dedicated))
        w = tuple(float(x) for x in self.weights)
        if not ded:
            raise DimensionMismatchError("need at least one source")
        if len(w) != len(ded):
            raise DimensionMismatchError(
                f"{len(w)} weights for {len(ded)} sources"
            )
        if any(x <= 0.0 or not np.isfinite(x) for x in w):
            raise InvalidProbabilityError("weights must be strictly positive")
        total = sum(w)
        if abs(total - 1.0) > WEIGHT_TOL:
            raise InvalidProbabilityError(
                f"weights sum to {total!r}; normalize them (see from_unnormalized)"
            )
        object.__setattr__(self, "mu_shared", mu)
        object.__setattr__(self, "mu_dedicated", ded)
        object.__setattr__(self, "weights", w)

    @classmethod
    def from_unnormalized(
        cls, mu_shared: float, mu_dedicated, weights
    ) -> "SystemSpec":
        """Relaxed constructor: accept positive weights of any total and normalize."""
        w = [float(x) for x in weights]
        if any(x <= 0.0 or not np.isfinite(x) for x in w):
            raise InvalidProbabilityError("weights must be strictly positive")
        total = sum(w)
        return cls(mu_shared, tuple(mu_dedicated), tuple(x / total for x in w))

    @property
    def num_sources(self) -> int:
        return len(self.mu_dedicated)


@dataclass(frozen=True)
class Pmf:
    """Scheduling probabilities of the shared server, one entry per source."""

    p: tuple[float, ...]

    def __post_init__(self) -> None:
        p = tuple(float(x) for x in self.p)
        if not p:
            raise DimensionMismatchError("pmf must be nonempty")
        if any(x < 0.0 or x > 1.0 or not np.isfinite(x) for x in p):
            raise InvalidProbabilityError(f"pmf entries must lie in [0, 1], got {p}")
        total = sum(p)
        if abs(total - 1.0) > WEIGHT_TOL:
            raise InvalidProbabilityError(f"pmf sums to {total!r}, not 1")
        object.__setattr__(self, "p", p)

    def __len__(self) -> int:
        return len(self.p)
