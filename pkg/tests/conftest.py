import numpy as np
import pytest

from aoisched.chains import AbsorbingChain
from aoisched.cs import BinaryPattern


def random_absorbing_chain(rng: np.random.Generator, size: int) -> AbsorbingChain:
    """Random valid chain: nonneg off-diagonals, absorption mass on every row
    (so U is non-singular), derived diagonal, random sigma, nonempty theta."""
    U = rng.uniform(0.0, 2.0, (size, size))
    np.fill_diagonal(U, 0.0)
    V = rng.uniform(0.05, 1.0, (size, 2))
    diag = -(U.sum(axis=1) + V.sum(axis=1))
    U = U + np.diag(diag)
    sigma = rng.dirichlet(np.ones(size))
    theta = (rng.random(size) < 0.5).astype(float)
    if not theta.any():
        theta[rng.integers(size)] = 1.0
    return AbsorbingChain(U=U, V=V, sigma=sigma, theta=theta)


def random_pattern(rng: np.random.Generator, max_len: int = 12) -> BinaryPattern:
    m = int(rng.integers(1, max_len + 1))
    return BinaryPattern(tuple(bool(b) for b in rng.integers(0, 2, m)))


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240817)
