"""Weighted zero-adjusted maximum likelihood from sufficient statistics.

Used wherever a constant (intercept-only) fit is needed: forest nodes and
leaves, forest-weighted prediction, and GAMLSS starting values. All routines
are vectorised over the leading axis of the statistics so a tree can score
every candidate threshold of a predictor in one call.

For both families ``nu`` and ``mu`` have closed forms (weighted zero fraction
and weighted mean of the positives). ZAIG's ``sigma`` is closed form too;
ZAGA's shape solves ``log(a) - digamma(a) = s`` by Newton on ``1/a``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import digamma, gammaln, polygamma

from .distributions import (
    MU_MAX,
    MU_MIN,
    NU_MAX,
    NU_MIN,
    SIGMA_MAX,
    SIGMA_MIN,
    Family,
    ZeroAdjustedParams,
)

_LOG_2PI = math.log(2.0 * math.pi)
SHAPE_MIN = 1.0 / SIGMA_MAX**2
SHAPE_MAX = 1.0 / SIGMA_MIN**2
# below this the positives are treated as identical
DISPERSION_SNAP = 1e-12
SHAPE_NEWTON_STEPS = 50


@dataclass(frozen=True)
class SufficientStats:
    """Weighted sums over observations; every field has the same shape."""

    total: np.ndarray
    zeros: np.ndarray
    positives: np.ndarray
    sum_y: np.ndarray
    sum_y2: np.ndarray
    sum_log_y: np.ndarray
    sum_inv_y: np.ndarray

    def __add__(self, other: "SufficientStats") -> "SufficientStats":
        return SufficientStats(*(a + b for a, b in zip(self.as_tuple(), other.as_tuple())))

    def __sub__(self, other: "SufficientStats") -> "SufficientStats":
        return SufficientStats(*(a - b for a, b in zip(self.as_tuple(), other.as_tuple())))

    def as_tuple(self) -> tuple[np.ndarray, ...]:
        return (
            self.total,
            self.zeros,
            self.positives,
            self.sum_y,
            self.sum_y2,
            self.sum_log_y,
            self.sum_inv_y,
        )


@dataclass(frozen=True)
class MleResult:
    mu: np.ndarray
    sigma: np.ndarray
    nu: np.ndarray
    loglik: np.ndarray
    fallback: np.ndarray


def observation_columns(y: np.ndarray) -> np.ndarray:
    """Per-row contributions (n, 7) in the field order of SufficientStats."""
    y = np.asarray(y, dtype=float)
    pos = y > 0.0
    y_safe = np.where(pos, y, 1.0)
    return np.column_stack(
        [
            np.ones_like(y),
            (~pos).astype(float),
            pos.astype(float),
            np.where(pos, y, 0.0),
            np.where(pos, y * y, 0.0),
            np.where(pos, np.log(y_safe), 0.0),
            np.where(pos, 1.0 / y_safe, 0.0),
        ]
    )


def stats_from_matrix(sums: np.ndarray) -> SufficientStats:
    """Wrap an (..., 7) array of sums as SufficientStats."""
    sums = np.asarray(sums, dtype=float)
    return SufficientStats(*(sums[..., j] for j in range(7)))


def sufficient_stats(y, weights=None) -> SufficientStats:
    cols = observation_columns(y)
    if weights is None:
        return stats_from_matrix(cols.sum(axis=0))
    w = np.asarray(weights, dtype=float)
    return stats_from_matrix(w @ cols)


def _gamma_entropy_term(a: np.ndarray) -> np.ndarray:
    """a*log(a) - a - gammaln(a), evaluated without cancellation for large a."""
    a = np.asarray(a, dtype=float)
    big = a > 1e5
    a_small = np.where(big, 1.0, a)
    a_big = np.where(big, a, 1e5)
    direct = a_small * np.log(a_small) - a_small - gammaln(a_small)
    stirling = 0.5 * np.log(a_big) - 0.5 * _LOG_2PI - 1.0 / (12.0 * a_big) + 1.0 / (360.0 * a_big**3)
    return np.where(big, stirling, direct)


def solve_gamma_shape(s: np.ndarray) -> np.ndarray:
    """Solve log(a) - digamma(a) = s for a > 0 (s > 0), elementwise."""
    s = np.asarray(s, dtype=float)
    flat = s <= DISPERSION_SNAP
    s_safe = np.where(flat, 1.0, s)
    # closed-form start (Minka), then Newton on 1/a
    a = (3.0 - s_safe + np.sqrt((s_safe - 3.0) ** 2 + 24.0 * s_safe)) / (12.0 * s_safe)
    for _ in range(SHAPE_NEWTON_STEPS):
        f = np.log(a) - digamma(a) - s_safe
        fprime = 1.0 / a - polygamma(1, a)
        inv = 1.0 / a + f / (a * a * fprime)
        a_new = np.where(inv > 0.0, 1.0 / np.where(inv > 0.0, inv, 1.0), a * 2.0)
        converged = np.abs(a_new - a) <= 1e-12 * a
        a = a_new
        if np.all(converged):
            break
    a = np.where(flat, SHAPE_MAX, a)
    return np.clip(a, SHAPE_MIN, SHAPE_MAX)


def mle_from_stats(family: Family, stats: SufficientStats) -> MleResult:
    """Weighted MLE of (mu, sigma, nu) and the log-likelihood at the MLE.

    ``loglik`` is the profile log-likelihood; it matches
    ``sum(w * log f(y | mu, sigma, nu))`` at the returned parameters whenever
    no safeguard clipping was active.
    """
    family = Family.parse(family)
    total = np.asarray(stats.total, dtype=float)
    w0 = np.asarray(stats.zeros, dtype=float)
    wp = np.asarray(stats.positives, dtype=float)
    has_pos = wp > 0.0
    wp_safe = np.where(has_pos, wp, 1.0)

    nu = np.clip(np.divide(w0, total, out=np.full_like(total, 0.5), where=total > 0), NU_MIN, NU_MAX)
    ll_zero = w0 * np.log(nu) + wp * np.log1p(-nu)

    mu = np.clip(np.where(has_pos, stats.sum_y / wp_safe, 1.0), MU_MIN, MU_MAX)
    mean_log = stats.sum_log_y / wp_safe

    if family is Family.ZAGA:
        s = np.maximum(np.log(mu) - mean_log, 0.0)
        s = np.where(s <= DISPERSION_SNAP, 0.0, s)
        a = solve_gamma_shape(s)
        sigma = 1.0 / np.sqrt(a)
        ll_cont = -stats.sum_log_y - a * wp * s + wp * _gamma_entropy_term(a)
    else:
        d = np.maximum(stats.sum_inv_y - wp / mu, 0.0)
        d = np.where(d <= DISPERSION_SNAP * np.abs(stats.sum_inv_y), 0.0, d)
        s2 = np.clip(d / wp_safe, SIGMA_MIN**2, SIGMA_MAX**2)
        sigma = np.sqrt(s2)
        ll_cont = -0.5 * wp * (_LOG_2PI + np.log(s2)) - 1.5 * stats.sum_log_y - d / (2.0 * s2)

    sigma = np.where(has_pos, sigma, 1.0)
    ll_cont = np.where(has_pos, ll_cont, 0.0)
    loglik = ll_zero + ll_cont

    fallback = has_pos & ~(np.isfinite(sigma) & np.isfinite(loglik))
    if np.any(fallback):
        mean = stats.sum_y / wp_safe
        var = np.maximum(stats.sum_y2 / wp_safe - mean**2, 0.0)
        power = 2.0 if family is Family.ZAGA else 3.0
        moment_sigma = np.sqrt(var / np.maximum(mean, MU_MIN) ** power)
        sigma = np.where(fallback, moment_sigma, sigma)
        loglik = np.where(fallback, np.nan, loglik)

    sigma = np.clip(np.nan_to_num(sigma, nan=1.0), SIGMA_MIN, SIGMA_MAX)
    return MleResult(mu=mu, sigma=sigma, nu=nu, loglik=loglik, fallback=fallback)


def node_loglik(family: Family, y, weights=None) -> float:
    """Maximised log-likelihood of a constant zero-adjusted model on ``y``."""
    return float(mle_from_stats(family, sufficient_stats(y, weights)).loglik)


def zero_adjusted_mle(family: Family, y, weights=None) -> ZeroAdjustedParams:
    """Intercept-only MLE of one sample (optionally weighted)."""
    res = mle_from_stats(family, sufficient_stats(y, weights))
    return ZeroAdjustedParams.safeguarded(float(res.mu), float(res.sigma), float(res.nu))


__all__ = [
    "MleResult",
    "SufficientStats",
    "mle_from_stats",
    "node_loglik",
    "observation_columns",
    "solve_gamma_shape",
    "stats_from_matrix",
    "sufficient_stats",
    "zero_adjusted_mle",
]
