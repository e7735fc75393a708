"""Zero-adjusted inverse Gaussian (ZAIG) and gamma (ZAGA) distributions.

Both families put probability ``nu`` on an exact zero and spread ``1 - nu``
over a continuous density on (0, inf):

* ZAIG: inverse Gaussian with mean ``mu`` and shape ``lambda = 1 / sigma**2``.
* ZAGA: gamma with mean ``mu``, shape ``1 / sigma**2`` and scale ``sigma**2 * mu``.

Scalar operations (``density``, ``cdf``, ``quantile``, ``sample``,
``log_likelihood``) take a :class:`ZeroAdjustedParams`; the ``*_array``
kernels take parameter arrays and are what the fitters call.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterator, Sequence

import numpy as np
from scipy.special import gammainc, gammaincinv, gammaln, log_ndtr, ndtr

from .errors import DomainError, NumericError, ParameterError, ShapeError

NU_MIN = 1e-6
NU_MAX = 1.0 - 1e-6
MU_MIN = 1e-8
MU_MAX = 1e12
SIGMA_MIN = 1e-8
SIGMA_MAX = 1e6

LOG_DENSITY_FLOOR = math.log(1e-300)

QUANTILE_PROB_TOL = 1e-10
QUANTILE_MAX_STEPS = 200

_LOG_2PI = math.log(2.0 * math.pi)


class Family(str, Enum):
    ZAIG = "ZAIG"
    ZAGA = "ZAGA"

    @classmethod
    def parse(cls, value: "Family | str") -> "Family":
        if isinstance(value, Family):
            return value
        try:
            return cls(str(value).strip().upper())
        except ValueError as exc:
            raise ParameterError(f"Unknown family '{value}'. Expected one of ZAIG, ZAGA.") from exc


@dataclass(frozen=True)
class ZeroAdjustedParams:
    """The (mu, sigma, nu) triple of one conditional distribution."""

    mu: float
    sigma: float
    nu: float

    def __post_init__(self) -> None:
        mu, sigma, nu = float(self.mu), float(self.sigma), float(self.nu)
        if not (math.isfinite(mu) and math.isfinite(sigma) and math.isfinite(nu)):
            raise ParameterError(f"Non-finite parameters: mu={mu}, sigma={sigma}, nu={nu}")
        if mu <= 0.0:
            raise ParameterError(f"mu must be > 0, got {mu}")
        if sigma <= 0.0:
            raise ParameterError(f"sigma must be > 0, got {sigma}")
        if not 0.0 < nu < 1.0:
            raise ParameterError(f"nu must lie in (0, 1), got {nu}")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "nu", nu)

    @classmethod
    def safeguarded(cls, mu: float, sigma: float, nu: float) -> "ZeroAdjustedParams":
        """Clip raw estimates into the numeric safe box, then validate."""
        m, s, n = safeguard_arrays(np.asarray(mu, float), np.asarray(sigma, float), np.asarray(nu, float))
        return cls(float(m), float(s), float(n))

    def to_dict(self) -> dict:
        return {"mu": self.mu, "sigma": self.sigma, "nu": self.nu}

    @classmethod
    def from_dict(cls, payload: dict) -> "ZeroAdjustedParams":
        return cls(mu=payload["mu"], sigma=payload["sigma"], nu=payload["nu"])


@dataclass(frozen=True)
class PredictiveDistribution:
    family: Family
    params: ZeroAdjustedParams


@dataclass(frozen=True)
class PredictiveBatch:
    """Array form of many predictive distributions of one family."""

    family: Family
    mu: np.ndarray
    sigma: np.ndarray
    nu: np.ndarray

    def __post_init__(self) -> None:
        mu = np.atleast_1d(np.asarray(self.mu, dtype=float))
        sigma = np.atleast_1d(np.asarray(self.sigma, dtype=float))
        nu = np.atleast_1d(np.asarray(self.nu, dtype=float))
        if not (mu.shape == sigma.shape == nu.shape) or mu.ndim != 1:
            raise ShapeError(
                f"Parameter arrays must be 1-D and equal length, got {mu.shape}, {sigma.shape}, {nu.shape}"
            )
        _validate_arrays(mu, sigma, nu)
        object.__setattr__(self, "family", Family.parse(self.family))
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "nu", nu)

    def __len__(self) -> int:
        return int(self.mu.shape[0])

    def __getitem__(self, idx: int) -> PredictiveDistribution:
        return PredictiveDistribution(
            self.family, ZeroAdjustedParams(self.mu[idx], self.sigma[idx], self.nu[idx])
        )

    def __iter__(self) -> Iterator[PredictiveDistribution]:
        for i in range(len(self)):
            yield self[i]

    def take(self, idx) -> "PredictiveBatch":
        return PredictiveBatch(self.family, self.mu[idx], self.sigma[idx], self.nu[idx])

    @classmethod
    def from_distributions(cls, dists: Sequence[PredictiveDistribution]) -> "PredictiveBatch":
        if not dists:
            raise ShapeError("Cannot build a batch from zero distributions.")
        families = {d.family for d in dists}
        if len(families) != 1:
            raise ShapeError("A batch holds a single family.")
        return cls(
            family=dists[0].family,
            mu=np.array([d.params.mu for d in dists]),
            sigma=np.array([d.params.sigma for d in dists]),
            nu=np.array([d.params.nu for d in dists]),
        )


# --- validation helpers -------------------------------------------------


def safeguard_arrays(mu, sigma, nu):
    """Clip parameter arrays into the box every fitter hands back."""
    mu = np.clip(np.nan_to_num(mu, nan=1.0, posinf=MU_MAX, neginf=MU_MIN), MU_MIN, MU_MAX)
    sigma = np.clip(np.nan_to_num(sigma, nan=1.0, posinf=SIGMA_MAX, neginf=SIGMA_MIN), SIGMA_MIN, SIGMA_MAX)
    nu = np.clip(np.nan_to_num(nu, nan=0.5), NU_MIN, NU_MAX)
    return mu, sigma, nu


def _validate_arrays(mu: np.ndarray, sigma: np.ndarray, nu: np.ndarray) -> None:
    if not (np.all(np.isfinite(mu)) and np.all(np.isfinite(sigma)) and np.all(np.isfinite(nu))):
        raise ParameterError("Parameter arrays contain non-finite values.")
    if np.any(mu <= 0.0) or np.any(sigma <= 0.0):
        raise ParameterError("mu and sigma must be > 0.")
    if np.any(nu <= 0.0) or np.any(nu >= 1.0):
        raise ParameterError("nu must lie in (0, 1).")


def _check_y(y) -> np.ndarray:
    arr = np.asarray(y, dtype=float)
    if np.any(np.isnan(arr)):
        raise DomainError("y contains NaN.")
    if np.any(arr < 0.0):
        raise DomainError("y must be non-negative.")
    return arr


def _check_tau(tau) -> np.ndarray:
    arr = np.asarray(tau, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(arr <= 0.0) or np.any(arr >= 1.0):
        raise DomainError(f"tau must lie in the open interval (0, 1), got {tau}")
    return arr


# --- array kernels ------------------------------------------------------


def continuous_log_pdf_array(family: Family, y, mu, sigma) -> np.ndarray:
    """Log density of the continuous part at y > 0 (no (1 - nu) factor)."""
    family = Family.parse(family)
    y = np.asarray(y, dtype=float)
    s2 = np.asarray(sigma, dtype=float) ** 2
    mu = np.asarray(mu, dtype=float)
    if family is Family.ZAGA:
        a = 1.0 / s2
        scale = s2 * mu
        return (a - 1.0) * np.log(y) - y / scale - a * np.log(scale) - gammaln(a)
    return -0.5 * (_LOG_2PI + np.log(s2) + 3.0 * np.log(y)) - (y - mu) ** 2 / (2.0 * mu**2 * s2 * y)


def continuous_cdf_array(family: Family, y, mu, sigma) -> np.ndarray:
    """CDF of the continuous part; 0 at y = 0."""
    family = Family.parse(family)
    y = np.asarray(y, dtype=float)
    mu = np.asarray(mu, dtype=float)
    s2 = np.asarray(sigma, dtype=float) ** 2
    pos = y > 0.0
    y_safe = np.where(pos, y, 1.0)
    if family is Family.ZAGA:
        out = gammainc(1.0 / s2, y_safe / (s2 * mu))
    else:
        lam = 1.0 / s2
        root = np.sqrt(lam / y_safe)
        first = ndtr(root * (y_safe / mu - 1.0))
        # exp(2 lam / mu) overflows for small sigma; combine in log space
        second = np.exp(2.0 * lam / mu + log_ndtr(-root * (y_safe / mu + 1.0)))
        out = np.clip(first + second, 0.0, 1.0)
    return np.where(pos, out, 0.0)


def log_density_array(family: Family, y, mu, sigma, nu) -> np.ndarray:
    """Log of the mixed density, unfloored; log(nu) at zeros."""
    y = _check_y(y)
    nu = np.asarray(nu, dtype=float)
    zero = y == 0.0
    y_safe = np.where(zero, 1.0, y)
    cont = np.log1p(-nu) + continuous_log_pdf_array(family, y_safe, mu, sigma)
    return np.where(zero, np.log(nu), cont)


def log_likelihood_array(family: Family, y, mu, sigma, nu) -> np.ndarray:
    """Per-observation log density floored at log(1e-300)."""
    values = log_density_array(family, y, mu, sigma, nu)
    return np.maximum(np.nan_to_num(values, nan=LOG_DENSITY_FLOOR, neginf=LOG_DENSITY_FLOOR), LOG_DENSITY_FLOOR)


def cdf_array(family: Family, y, mu, sigma, nu) -> np.ndarray:
    y = _check_y(y)
    nu = np.asarray(nu, dtype=float)
    return nu + (1.0 - nu) * continuous_cdf_array(family, y, mu, sigma)


def _initial_guess(family: Family, tau, mu, sigma, nu) -> np.ndarray:
    p = np.clip((tau - nu) / (1.0 - nu), 1e-300, 1.0 - 1e-16)
    if family is Family.ZAGA:
        s2 = sigma**2
        guess = s2 * mu * gammaincinv(1.0 / s2, p)
        return np.where(np.isfinite(guess) & (guess > 0.0), guess, mu)
    return np.array(mu, dtype=float, copy=True)


def quantile_array(family: Family, tau, mu, sigma, nu) -> np.ndarray:
    """Vectorised left-continuous inverse of the mixed CDF.

    Entries with ``tau <= nu`` are 0. The rest are found by a bracketed
    Newton iteration on ``cdf`` that falls back to bisection whenever the
    Newton step leaves the bracket.
    """
    family = Family.parse(family)
    tau = _check_tau(tau)
    mu, sigma, nu, tau = np.broadcast_arrays(
        np.asarray(mu, float), np.asarray(sigma, float), np.asarray(nu, float), tau
    )
    out = np.zeros(mu.shape, dtype=float)
    todo = tau > nu
    if not np.any(todo):
        return out

    t, m, s, n = tau[todo], mu[todo], sigma[todo], nu[todo]
    lo = np.zeros_like(t)
    hi = np.array(m, copy=True)
    for _ in range(QUANTILE_MAX_STEPS):
        short = cdf_array(family, hi, m, s, n) < t
        if not np.any(short):
            break
        lo = np.where(short, hi, lo)
        hi = np.where(short, hi * 2.0, hi)
    else:
        raise NumericError("Could not bracket the requested quantile.")

    x = np.clip(_initial_guess(family, t, m, s, n), lo, hi)
    x = np.where((x <= lo) | (x >= hi), 0.5 * (lo + hi), x)
    result = np.empty_like(t)
    active = np.arange(t.shape[0])
    for _ in range(QUANTILE_MAX_STEPS):
        ta, ma, sa, na = t[active], m[active], s[active], n[active]
        xa, la, ha = x[active], lo[active], hi[active]
        gap = cdf_array(family, xa, ma, sa, na) - ta
        done = (np.abs(gap) <= QUANTILE_PROB_TOL) | (ha - la <= 4.0 * np.spacing(ha))
        result[active[done]] = xa[done]
        la = np.where(gap < 0.0, xa, la)
        ha = np.where(gap < 0.0, ha, xa)
        pdf = (1.0 - na) * np.exp(continuous_log_pdf_array(family, xa, ma, sa))
        with np.errstate(divide="ignore", invalid="ignore"):
            step = xa - gap / pdf
        bad = ~np.isfinite(step) | (step <= la) | (step >= ha)
        step = np.where(bad, 0.5 * (la + ha), step)
        keep = ~done
        if not np.any(keep):
            break
        active = active[keep]
        x[active], lo[active], hi[active] = step[keep], la[keep], ha[keep]
    else:
        raise NumericError(f"Quantile root-finding did not converge in {QUANTILE_MAX_STEPS} steps.")

    out[todo] = result
    return out


def draw_array(family: Family, mu, sigma, nu, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Draw one value per parameter entry (or ``size`` draws for scalars)."""
    family = Family.parse(family)
    if size is not None:
        mu, sigma, nu = (np.full(size, float(v)) for v in (mu, sigma, nu))
    mu, sigma, nu = (np.asarray(v, dtype=float) for v in (mu, sigma, nu))
    zero = rng.random(mu.shape) < nu
    s2 = sigma**2
    if family is Family.ZAGA:
        cont = rng.gamma(shape=1.0 / s2, scale=s2 * mu)
    else:
        cont = rng.wald(mean=mu, scale=1.0 / s2)
    return np.where(zero, 0.0, cont)


# --- scalar operations --------------------------------------------------


def density(family: Family | str, y: float, p: ZeroAdjustedParams) -> float:
    """Mixed density: nu at y = 0, (1 - nu) * f_cont(y) for y > 0."""
    family = Family.parse(family)
    value = float(_check_y(y))
    if value == 0.0:
        return p.nu
    return float((1.0 - p.nu) * np.exp(continuous_log_pdf_array(family, value, p.mu, p.sigma)))


def cdf(family: Family | str, y: float, p: ZeroAdjustedParams) -> float:
    return float(cdf_array(Family.parse(family), y, p.mu, p.sigma, p.nu))


def quantile(family: Family | str, tau: float, p: ZeroAdjustedParams) -> float:
    return float(quantile_array(Family.parse(family), tau, p.mu, p.sigma, p.nu))


def sample(family: Family | str, p: ZeroAdjustedParams, seed: int, n: int) -> list[float]:
    """Deterministic draws for a given (seed, n)."""
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    if seed < 0:
        raise DomainError(f"seed must be a non-negative integer, got {seed}")
    rng = np.random.default_rng(seed)
    return draw_array(family, p.mu, p.sigma, p.nu, rng, size=int(n)).tolist()


def log_likelihood(family: Family | str, y: Sequence[float], params: Sequence[ZeroAdjustedParams]) -> float:
    """Sum of floored log densities."""
    if len(y) != len(params):
        raise ShapeError(f"{len(y)} observations but {len(params)} parameter triples.")
    if not params:
        return 0.0
    mu = np.array([p.mu for p in params])
    sigma = np.array([p.sigma for p in params])
    nu = np.array([p.nu for p in params])
    return float(np.sum(log_likelihood_array(Family.parse(family), y, mu, sigma, nu)))


__all__ = [
    "Family",
    "LOG_DENSITY_FLOOR",
    "PredictiveBatch",
    "PredictiveDistribution",
    "ZeroAdjustedParams",
    "cdf",
    "cdf_array",
    "continuous_cdf_array",
    "continuous_log_pdf_array",
    "density",
    "draw_array",
    "log_density_array",
    "log_likelihood",
    "log_likelihood_array",
    "quantile",
    "quantile_array",
    "safeguard_arrays",
    "sample",
]
