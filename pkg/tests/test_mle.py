import numpy as np
import pytest

from src.distributions import Family, ZeroAdjustedParams, draw_array, log_likelihood
from src.mle import (
    mle_from_stats,
    node_loglik,
    observation_columns,
    solve_gamma_shape,
    stats_from_matrix,
    sufficient_stats,
    zero_adjusted_mle,
)
from scipy.special import digamma


@pytest.mark.parametrize("family", list(Family))
def test_intercept_mle_recovers_parameters(family):
    rng = np.random.default_rng(3)
    y = draw_array(family, 40.0, 0.6, 0.2, rng, size=10_000)
    p = zero_adjusted_mle(family, y)
    assert p.mu == pytest.approx(40.0, rel=0.05)
    assert p.sigma == pytest.approx(0.6, rel=0.05)
    assert p.nu == pytest.approx(0.2, abs=0.02)


@pytest.mark.parametrize("family", list(Family))
def test_profile_loglik_matches_density_sum(family):
    y = np.array([0.0, 0.0, 1.2, 3.4, 0.7, 9.1, 2.2])
    p = zero_adjusted_mle(family, y)
    direct = log_likelihood(family, list(y), [p] * len(y))
    assert node_loglik(family, y) == pytest.approx(direct, rel=1e-9)


def test_weighted_stats_equal_repeated_rows():
    y = np.array([0.0, 2.0, 5.0])
    weighted = sufficient_stats(y, weights=[1.0, 2.0, 3.0])
    repeated = sufficient_stats(np.array([0.0, 2.0, 2.0, 5.0, 5.0, 5.0]))
    for a, b in zip(weighted.as_tuple(), repeated.as_tuple()):
        assert float(a) == pytest.approx(float(b))


def test_stats_add_and_subtract():
    y = np.array([0.0, 1.0, 4.0, 2.0])
    left, right = sufficient_stats(y[:2]), sufficient_stats(y[2:])
    whole = sufficient_stats(y)
    assert float((left + right).sum_y) == pytest.approx(float(whole.sum_y))
    assert float((whole - right).zeros) == pytest.approx(float(left.zeros))


def test_vectorised_stats_match_scalar():
    y = np.array([0.0, 1.5, 2.5, 0.0, 8.0])
    cols = observation_columns(y)
    cumulative = stats_from_matrix(np.cumsum(cols, axis=0))
    res = mle_from_stats(Family.ZAGA, cumulative)
    assert res.mu.shape == (5,)
    assert float(res.mu[-1]) == pytest.approx(zero_adjusted_mle(Family.ZAGA, y).mu)


def test_all_zero_node_is_valid():
    p = zero_adjusted_mle(Family.ZAIG, np.zeros(10))
    assert p.nu == pytest.approx(1.0 - 1e-6)
    assert p.sigma == 1.0


@pytest.mark.parametrize("family", list(Family))
def test_identical_positives_give_finite_fit(family):
    res = mle_from_stats(family, sufficient_stats(np.full(8, 3.0)))
    assert float(res.mu) == pytest.approx(3.0)
    assert np.isfinite(res.sigma).all()
    assert float(res.sigma) > 0.0


def test_solve_gamma_shape_inverts_equation():
    a = np.array([0.3, 1.0, 4.0, 250.0])
    s = np.log(a) - digamma(a)
    assert np.allclose(solve_gamma_shape(s), a, rtol=1e-8)


def test_zero_adjusted_mle_returns_params_type():
    assert isinstance(zero_adjusted_mle(Family.ZAGA, [0.0, 1.0, 2.0]), ZeroAdjustedParams)
