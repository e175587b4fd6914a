"""Candidate heavy-tail families on ``[x_min, inf)``.

All four families are continuous.  Their unnormalised shapes are

    power law            x**-alpha                 C = (alpha-1) x_min**(alpha-1)
    truncated power law  x**-alpha exp(-lam x)     C = lam**(1-alpha) / Gamma(1-alpha, lam x_min)
    lognormal            exp(-(ln x-mu)**2/2s**2)/x  truncated below at x_min
    exponential          exp(-lam x)               C = lam exp(lam x_min)

A discrete power law (Hurwitz-zeta normalisation over the integers
``>= x_min``) is available as ``PowerLaw(discrete=True)`` for unweighted
degree counts.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from ._gamma import log_upper_gamma

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


class CandidateKind(str, enum.Enum):
    POWER_LAW = "power_law"
    TRUNCATED_POWER_LAW = "truncated_power_law"
    LOGNORMAL = "lognormal"
    EXPONENTIAL = "exponential"


KIND_ORDER = tuple(CandidateKind)


@dataclass(frozen=True)
class TailStats:
    """Sufficient statistics of the values ``>= x_min``."""

    x_min: float
    n: int
    sum_log: float
    sum_x: float
    sum_log2: float

    @classmethod
    def from_values(cls, tail, x_min):
        tail = np.asarray(tail, dtype=float)
        logs = np.log(tail)
        return cls(float(x_min), int(tail.size), float(logs.sum()), float(tail.sum()),
                   float(np.dot(logs, logs)))


class Family:
    kind: CandidateKind
    param_names: tuple = ()

    def logpdf(self, x, params, x_min):
        raise NotImplementedError

    def logsf(self, x, params, x_min):
        """log P(X > x | X >= x_min)."""
        raise NotImplementedError

    def cdf(self, x, params, x_min):
        return -np.expm1(self.logsf(x, params, x_min))

    def loglik(self, stats: TailStats, params) -> float:
        raise NotImplementedError

    def valid(self, params) -> bool:
        return all(math.isfinite(params[k]) for k in self.param_names)


class PowerLaw(Family):
    kind = CandidateKind.POWER_LAW
    param_names = ("alpha",)

    def __init__(self, discrete=False):
        self.discrete = discrete

    def valid(self, params):
        return super().valid(params) and params["alpha"] > 1.0

    def logpdf(self, x, params, x_min):
        a = params["alpha"]
        x = np.asarray(x, dtype=float)
        if self.discrete:
            return -a * np.log(x) - math.log(special.zeta(a, x_min))
        return math.log(a - 1.0) - math.log(x_min) - a * np.log(x / x_min)

    def logsf(self, x, params, x_min):
        a = params["alpha"]
        x = np.asarray(x, dtype=float)
        if self.discrete:
            return np.log(special.zeta(a, np.floor(x) + 1.0)) - math.log(special.zeta(a, x_min))
        return (1.0 - a) * np.log(x / x_min)

    def loglik(self, stats, params):
        a = params["alpha"]
        if self.discrete:
            return -stats.n * math.log(special.zeta(a, stats.x_min)) - a * stats.sum_log
        return (stats.n * (math.log(a - 1.0) + (a - 1.0) * math.log(stats.x_min))
                - a * stats.sum_log)


class TruncatedPowerLaw(Family):
    kind = CandidateKind.TRUNCATED_POWER_LAW
    param_names = ("alpha", "lambda")

    def valid(self, params):
        return super().valid(params) and params["lambda"] > 0.0

    @staticmethod
    def log_norm(alpha, lam, x_min):
        return (1.0 - alpha) * math.log(lam) - log_upper_gamma(1.0 - alpha, lam * x_min)

    def logpdf(self, x, params, x_min):
        a, lam = params["alpha"], params["lambda"]
        x = np.asarray(x, dtype=float)
        return self.log_norm(a, lam, x_min) - a * np.log(x) - lam * x

    def logsf(self, x, params, x_min):
        a, lam = params["alpha"], params["lambda"]
        x = np.asarray(x, dtype=float)
        out = log_upper_gamma(1.0 - a, lam * x) - log_upper_gamma(1.0 - a, lam * x_min)
        return np.minimum(out, 0.0)

    def loglik(self, stats, params):
        a, lam = params["alpha"], params["lambda"]
        return (stats.n * self.log_norm(a, lam, stats.x_min)
                - a * stats.sum_log - lam * stats.sum_x)


class Lognormal(Family):
    kind = CandidateKind.LOGNORMAL
    param_names = ("mu", "sigma")

    def valid(self, params):
        return super().valid(params) and params["sigma"] > 0.0

    @staticmethod
    def _log_tail_mass(mu, sigma, x_min):
        return special.log_ndtr((mu - math.log(x_min)) / sigma)

    def logpdf(self, x, params, x_min):
        mu, sigma = params["mu"], params["sigma"]
        lx = np.log(np.asarray(x, dtype=float))
        z = (lx - mu) / sigma
        return (-lx - math.log(sigma) - _LOG_SQRT_2PI - 0.5 * z * z
                - self._log_tail_mass(mu, sigma, x_min))

    def logsf(self, x, params, x_min):
        mu, sigma = params["mu"], params["sigma"]
        lx = np.log(np.asarray(x, dtype=float))
        out = special.log_ndtr((mu - lx) / sigma) - self._log_tail_mass(mu, sigma, x_min)
        return np.minimum(out, 0.0)

    def loglik(self, stats, params):
        mu, sigma = params["mu"], params["sigma"]
        quad = stats.sum_log2 - 2.0 * mu * stats.sum_log + stats.n * mu * mu
        return (-stats.sum_log - stats.n * (math.log(sigma) + _LOG_SQRT_2PI)
                - quad / (2.0 * sigma * sigma)
                - stats.n * self._log_tail_mass(mu, sigma, stats.x_min))


class Exponential(Family):
    kind = CandidateKind.EXPONENTIAL
    param_names = ("lambda",)

    def valid(self, params):
        return super().valid(params) and params["lambda"] > 0.0

    def logpdf(self, x, params, x_min):
        lam = params["lambda"]
        return math.log(lam) - lam * (np.asarray(x, dtype=float) - x_min)

    def logsf(self, x, params, x_min):
        lam = params["lambda"]
        return -lam * (np.asarray(x, dtype=float) - x_min)

    def loglik(self, stats, params):
        lam = params["lambda"]
        return stats.n * math.log(lam) - lam * (stats.sum_x - stats.n * stats.x_min)


_FAMILIES = {
    CandidateKind.POWER_LAW: PowerLaw(),
    CandidateKind.TRUNCATED_POWER_LAW: TruncatedPowerLaw(),
    CandidateKind.LOGNORMAL: Lognormal(),
    CandidateKind.EXPONENTIAL: Exponential(),
}
_DISCRETE_POWER_LAW = PowerLaw(discrete=True)


def family(kind, discrete=False) -> Family:
    kind = CandidateKind(kind)
    if discrete:
        if kind is not CandidateKind.POWER_LAW:
            raise ValueError("the discrete (zeta) normalisation exists only for the power law")
        return _DISCRETE_POWER_LAW
    return _FAMILIES[kind]
