import math

import numpy as np
import pytest
from scipy import integrate, stats

from src.api.v1.endpoints import DEFAULT_TAUS
from src.distributions import (
    Family,
    PredictiveBatch,
    ZeroAdjustedParams,
    cdf,
    continuous_log_pdf_array,
    density,
    log_likelihood,
    quantile,
    quantile_array,
    sample,
)
from src.errors import DomainError, ParameterError, ShapeError
from src.links import LINKS, MU_LINK, NU_LINK

GRID = [
    (mu, sigma, nu)
    for mu in (0.5, 1.0, 5.0)
    for sigma in (0.5, 1.0, 2.0)
    for nu in (0.1, 0.5, 0.9)
]


def test_params_reject_invalid_values():
    with pytest.raises(ParameterError):
        ZeroAdjustedParams(0.0, 1.0, 0.5)
    with pytest.raises(ParameterError):
        ZeroAdjustedParams(1.0, -1.0, 0.5)
    with pytest.raises(ParameterError):
        ZeroAdjustedParams(1.0, 1.0, 1.0)
    with pytest.raises(ParameterError):
        ZeroAdjustedParams(float("nan"), 1.0, 0.5)


def test_safeguarded_clips_into_box():
    p = ZeroAdjustedParams.safeguarded(1e20, 1e-20, 1.0)
    assert p.mu == 1e12
    assert p.sigma == 1e-8
    assert p.nu == pytest.approx(1.0 - 1e-6)


def test_family_parse_round_trip():
    assert Family.parse("zaga") is Family.ZAGA
    assert Family(Family.ZAIG.value) is Family.ZAIG
    with pytest.raises(ParameterError):
        Family.parse("ZIP")


def test_density_examples():
    assert density(Family.ZAIG, 0.0, ZeroAdjustedParams(1.0, 1.0, 0.3)) == pytest.approx(0.3)
    assert density(Family.ZAIG, 1.0, ZeroAdjustedParams(1.0, 1.0, 1e-6)) == pytest.approx(
        0.398942 * (1 - 1e-6), rel=1e-5
    )
    assert density(Family.ZAGA, 2.0, ZeroAdjustedParams(2.0, 1.0, 0.2)) == pytest.approx(
        0.8 * math.exp(-1.0) / 2.0, rel=1e-9
    )


def test_density_rejects_negative_y():
    with pytest.raises(DomainError):
        density(Family.ZAGA, -0.1, ZeroAdjustedParams(1.0, 1.0, 0.3))


def test_cdf_examples():
    for family in Family:
        assert cdf(family, 0.0, ZeroAdjustedParams(1.0, 1.0, 0.3)) == pytest.approx(0.3)
    assert cdf(Family.ZAGA, 2.0 * math.log(2.0), ZeroAdjustedParams(2.0, 1.0, 1e-6)) == pytest.approx(0.5, abs=1e-6)


@pytest.mark.parametrize("mu,sigma,nu", [(1.0, 0.5, 0.2), (5.0, 1.0, 0.1), (0.5, 2.0, 0.4)])
def test_ig_cdf_matches_scipy(mu, sigma, nu):
    p = ZeroAdjustedParams(mu, sigma, nu)
    lam = 1.0 / sigma**2
    ref = stats.invgauss(mu / lam, scale=lam)
    for y in (0.1 * mu, mu, 3.0 * mu):
        assert cdf(Family.ZAIG, y, p) == pytest.approx(nu + (1 - nu) * ref.cdf(y), abs=1e-9)


@pytest.mark.parametrize("family", list(Family))
@pytest.mark.parametrize("mu,sigma,nu", GRID)
def test_mixed_density_normalises(family, mu, sigma, nu):
    def f(y: float) -> float:
        return math.exp(continuous_log_pdf_array(family, y, mu, sigma))

    # split at mu so quad sees the bulk of the mass
    head, _ = integrate.quad(f, 0.0, mu, limit=200)
    tail, _ = integrate.quad(f, mu, np.inf, limit=200)
    assert nu + (1 - nu) * (head + tail) == pytest.approx(1.0, abs=1e-4)


@pytest.mark.parametrize("family", list(Family))
@pytest.mark.parametrize("mu,sigma,nu", GRID)
def test_cdf_quantile_round_trip(family, mu, sigma, nu):
    p = ZeroAdjustedParams(mu, sigma, nu)
    previous = 0.0
    for tau in DEFAULT_TAUS:
        q = quantile(family, tau, p)
        assert q >= previous
        previous = q
        if tau > nu:
            assert abs(cdf(family, q, p) - tau) <= 1e-6
        else:
            assert q == 0.0


def test_quantile_examples():
    for family in Family:
        assert quantile(family, 0.2, ZeroAdjustedParams(2.0, 1.0, 0.3)) == 0.0
        assert quantile(family, 0.3, ZeroAdjustedParams(2.0, 1.0, 0.3)) == 0.0
    assert quantile(Family.ZAGA, 0.65, ZeroAdjustedParams(2.0, 1.0, 0.3)) == pytest.approx(
        2.0 * math.log(2.0), abs=1e-8
    )


def test_quantile_rejects_bad_tau():
    with pytest.raises(DomainError):
        quantile(Family.ZAGA, 1.0, ZeroAdjustedParams(1.0, 1.0, 0.3))
    with pytest.raises(DomainError):
        quantile(Family.ZAGA, 0.0, ZeroAdjustedParams(1.0, 1.0, 0.3))


def test_quantile_array_matches_scalar():
    mu = np.array([0.5, 3.0, 40.0])
    sigma = np.array([0.4, 1.0, 1.5])
    nu = np.array([0.1, 0.6, 0.3])
    got = quantile_array(Family.ZAIG, 0.7, mu, sigma, nu)
    for i in range(3):
        assert got[i] == pytest.approx(
            quantile(Family.ZAIG, 0.7, ZeroAdjustedParams(mu[i], sigma[i], nu[i])), rel=1e-9
        )


@pytest.mark.parametrize("family", list(Family))
def test_density_matches_cdf_increment(family):
    p = ZeroAdjustedParams(2.0, 0.7, 0.25)
    y, h = 1.5, 1e-6
    slope = (cdf(family, y + h, p) - cdf(family, y, p)) / h
    assert slope == pytest.approx(density(family, y, p), rel=1e-5)


def test_sample_is_deterministic_and_near_certain_zero():
    p = ZeroAdjustedParams(1.0, 1.0, 0.999999)
    draws = sample(Family.ZAIG, p, seed=7, n=1000)
    assert sum(1 for v in draws if v == 0.0) >= 990
    assert draws == sample(Family.ZAIG, p, seed=7, n=1000)


def test_sample_rejects_bad_size():
    with pytest.raises(DomainError):
        sample(Family.ZAGA, ZeroAdjustedParams(1.0, 1.0, 0.5), seed=0, n=0)


@pytest.mark.slow
@pytest.mark.parametrize("family", list(Family))
def test_sample_zero_fraction_binomial(family):
    draws = np.asarray(sample(family, ZeroAdjustedParams(3.0, 0.8, 0.5), seed=11, n=100_000))
    zeros = int(np.sum(draws == 0.0))
    assert abs(zeros / draws.size - 0.5) < 0.01
    assert stats.binomtest(zeros, draws.size, 0.5).pvalue > 0.001
    assert np.all(draws >= 0.0)


def test_log_likelihood_examples():
    p = ZeroAdjustedParams(2.0, 1.0, 0.3)
    assert log_likelihood(Family.ZAGA, [0.0], [p]) == pytest.approx(math.log(0.3))
    single = log_likelihood(Family.ZAIG, [1.3], [p])
    assert log_likelihood(Family.ZAIG, [1.3, 1.3], [p, p]) == pytest.approx(2 * single)

    q = ZeroAdjustedParams(2.0, 1.0, 0.1)
    # sigma = 1 makes ZAGA an exponential with mean mu
    hand = sum(math.log(0.9 * math.exp(-y / 2.0) / 2.0) for y in (1.0, 2.0, 3.0))
    assert log_likelihood(Family.ZAGA, [1.0, 2.0, 3.0], [q, q, q]) == pytest.approx(hand, abs=1e-10)


def test_log_likelihood_floors_and_checks_lengths():
    p = ZeroAdjustedParams(1.0, 0.01, 0.5)
    assert log_likelihood(Family.ZAGA, [1e6], [p]) == pytest.approx(math.log(1e-300))
    with pytest.raises(ShapeError):
        log_likelihood(Family.ZAGA, [1.0, 2.0], [p])


def test_batch_validates_and_indexes():
    batch = PredictiveBatch(Family.ZAGA, [1.0, 2.0], [0.5, 0.5], [0.1, 0.2])
    assert len(batch) == 2
    assert batch[1].params.mu == 2.0
    with pytest.raises(ShapeError):
        PredictiveBatch(Family.ZAGA, [1.0, 2.0], [0.5], [0.1, 0.2])
    with pytest.raises(ParameterError):
        PredictiveBatch(Family.ZAGA, [1.0], [0.5], [1.2])


def test_links_invert():
    theta = np.array([0.2, 1.0, 7.5])
    assert np.allclose(MU_LINK.inverse(MU_LINK.link(theta)), theta)
    assert np.allclose(NU_LINK.inverse(NU_LINK.link(np.array([0.1, 0.5, 0.9]))), [0.1, 0.5, 0.9])
    assert set(LINKS) == {"mu", "sigma", "nu"}
