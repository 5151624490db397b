"""Chain numerics: validation, the mean-age ratio, and stationary solves."""

import numpy as np
import pytest

from aoisched.chains import (
    AbsorbingChain,
    RecurrentChain,
    mean_aoi,
    stationary_distribution,
    validate_chain,
)
from aoisched.errors import DegenerateThetaError, ReducibleChainError, SingularChainError
from aoisched.ps import build_ps_amc

from conftest import random_absorbing_chain


def single_state_chain(mu=1.0):
    return AbsorbingChain(U=[[-mu]], V=[[0.0, mu]], sigma=[1.0], theta=[1.0])


class TestValidation:
    def test_smallest_valid_chain_passes(self):
        assert validate_chain(single_state_chain()).ok

    def test_rate_deficit_is_reported_with_row(self):
        chain = AbsorbingChain(U=[[-1.0]], V=[[0.0, 0.5]], sigma=[1.0], theta=[1.0])
        report = validate_chain(chain)
        assert not report.ok
        assert any("row 0" in v and "balance" in v for v in report.violations)

    def test_ps_construction_always_validates(self, rng):
        for _ in range(20):
            mu_n, mu = rng.uniform(0.1, 20.0, 2)
            chain = build_ps_amc(mu_n, mu, rng.uniform(0.0, 1.0))
            assert validate_chain(chain).ok

    def test_nonnegative_sigma_and_binary_theta_enforced(self):
        bad_sigma = AbsorbingChain(
            U=[[-1.0, 1.0], [0.0, -1.0]], V=[[0.0, 0.0], [0.0, 1.0]],
            sigma=[1.5, -0.5], theta=[0.0, 1.0],
        )
        assert any("negative" in v for v in validate_chain(bad_sigma).violations)
        bad_theta = AbsorbingChain(
            U=[[-1.0]], V=[[0.0, 1.0]], sigma=[1.0], theta=[0.5]
        )
        assert any("theta" in v for v in validate_chain(bad_theta).violations)

    def test_singular_transient_block_is_flagged(self):
        # Two states that only feed each other never absorb.
        chain = AbsorbingChain(
            U=[[-1.0, 1.0], [1.0, -1.0]], V=[[0.0, 0.0], [0.0, 0.0]],
            sigma=[1.0, 0.0], theta=[0.0, 1.0],
        )
        assert any("singular" in v for v in validate_chain(chain).violations)


class TestMeanAoi:
    def test_single_state_rate_two(self):
        assert mean_aoi(single_state_chain(mu=2.0)) == pytest.approx(0.5, rel=1e-12)

    def test_dual_server_equal_rates_full_sharing(self):
        chain = build_ps_amc(1.0, 1.0, 1.0)
        assert mean_aoi(chain) == pytest.approx(1.25, rel=1e-12)

    def test_matches_explicit_inverse_on_small_chains(self, rng):
        for _ in range(30):
            chain = random_absorbing_chain(rng, int(rng.integers(1, 13)))
            Uinv = np.linalg.inv(chain.U)
            expected = -(chain.sigma @ Uinv @ Uinv @ chain.theta) / (
                chain.sigma @ Uinv @ chain.theta
            )
            assert mean_aoi(chain) == pytest.approx(expected, rel=1e-10)

    def test_positive_for_valid_chains(self, rng):
        for _ in range(50):
            chain = random_absorbing_chain(rng, int(rng.integers(1, 20)))
            assert mean_aoi(chain) > 0.0

    def test_rate_scaling_rescales_time(self, rng):
        for _ in range(20):
            chain = random_absorbing_chain(rng, int(rng.integers(1, 10)))
            kappa = float(rng.uniform(0.1, 10.0))
            scaled = AbsorbingChain(
                U=kappa * chain.U, V=kappa * chain.V,
                sigma=chain.sigma, theta=chain.theta,
            )
            assert mean_aoi(scaled) == pytest.approx(mean_aoi(chain) / kappa, rel=1e-9)

    def test_all_zero_theta_rejected(self):
        chain = AbsorbingChain(U=[[-1.0]], V=[[0.0, 1.0]], sigma=[1.0], theta=[0.0])
        with pytest.raises(DegenerateThetaError):
            mean_aoi(chain)

    def test_singular_transient_block_rejected(self):
        chain = AbsorbingChain(
            U=[[-1.0, 1.0], [1.0, -1.0]], V=[[0.0, 0.0], [0.0, 0.0]],
            sigma=[1.0, 0.0], theta=[0.0, 1.0],
        )
        with pytest.raises(SingularChainError):
            mean_aoi(chain)


class TestStationaryDistribution:
    def test_symmetric_two_state(self):
        rmc = RecurrentChain(G=[[-1.0, 1.0], [1.0, -1.0]])
        assert stationary_distribution(rmc) == pytest.approx([0.5, 0.5], abs=1e-12)

    def test_residual_and_normalization_on_random_generators(self, rng):
        for _ in range(30):
            n = int(rng.integers(2, 15))
            G = rng.uniform(0.0, 3.0, (n, n))
            np.fill_diagonal(G, 0.0)
            np.fill_diagonal(G, -G.sum(axis=1))
            phi = stationary_distribution(RecurrentChain(G=G))
            assert np.abs(phi @ G).max() <= 1e-10 * max(1.0, np.abs(G).max())
            assert abs(phi.sum() - 1.0) <= 1e-12
            assert np.all(phi >= 0.0)

    def test_two_closed_classes_rejected(self):
        G = np.zeros((4, 4))
        G[0, 1] = G[1, 0] = 1.0
        G[2, 3] = G[3, 2] = 1.0
        np.fill_diagonal(G, -G.sum(axis=1))
        with pytest.raises(ReducibleChainError):
            stationary_distribution(RecurrentChain(G=G))

    def test_generator_rows_must_sum_to_zero(self):
        with pytest.raises(ValueError):
            RecurrentChain(G=[[-1.0, 0.5], [1.0, -1.0]])
