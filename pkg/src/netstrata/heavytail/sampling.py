"""Random draws from fitted candidates above their x_min."""
import math

import numpy as np
from scipy import special

from .distributions import CandidateKind, TruncatedPowerLaw
from ._gamma import log_upper_gamma

MIN_ACCEPTANCE = 1e-6


class SamplingError(RuntimeError):
    pass


def _rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def tpl_acceptance_rate(alpha, lam, x_min):
    """Acceptance probability of the rejection sampler for the truncated power law."""
    if alpha > 1.0:
        # proposal: pure power law, accept with exp(-lam (x - x_min))
        log_rate = (math.log(alpha - 1.0) + (alpha - 1.0) * math.log(lam * x_min) + lam * x_min
                    + log_upper_gamma(1.0 - alpha, lam * x_min))
    elif alpha >= 0.0:
        # proposal: shifted exponential, accept with (x / x_min)**-alpha
        log_rate = (math.log(lam) + lam * x_min - TruncatedPowerLaw.log_norm(alpha, lam, x_min)
                    + alpha * math.log(x_min))
    else:
        # proposal: gamma(1 - alpha, lam), accept when x >= x_min
        return float(special.gammaincc(1.0 - alpha, lam * x_min))
    return math.exp(log_rate)


def _sample_tpl(rng, n, alpha, lam, x_min):
    rate = tpl_acceptance_rate(alpha, lam, x_min)
    if rate < MIN_ACCEPTANCE:
        raise SamplingError(
            f"rejection acceptance {rate:.3g} below {MIN_ACCEPTANCE:g} "
            f"(alpha={alpha}, lambda*x_min={lam * x_min:.3g})")
    out = np.empty(n)
    filled = 0
    while filled < n:
        batch = int(min(max((n - filled) / rate * 1.1 + 16, 64), 1e7))
        u = rng.random(batch)
        if alpha > 1.0:
            # alpha near 1 can overflow to inf; such proposals are always rejected
            with np.errstate(over="ignore"):
                x = x_min * (1.0 - rng.random(batch)) ** (-1.0 / (alpha - 1.0))
            keep = u < np.exp(-lam * (x - x_min))
        elif alpha >= 0.0:
            x = x_min - np.log1p(-rng.random(batch)) / lam
            keep = u < (x / x_min) ** (-alpha)
        else:
            x = rng.gamma(1.0 - alpha, 1.0 / lam, batch)
            keep = x >= x_min
        x = x[keep][: n - filled]
        out[filled:filled + x.size] = x
        filled += x.size
    return out


def sample_from(fit, n, seed=None):
    """Draw ``n`` i.i.d. values from a fitted continuous candidate.

    Inverse-transform sampling for the power law, exponential and lognormal;
    rejection sampling for the truncated power law.  ``seed`` may be an int,
    a ``SeedSequence`` or a ``Generator``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if fit.discrete:
        raise ValueError("sampling is implemented for continuous candidates only")
    rng = _rng(seed)
    p, x_min = fit.params, fit.x_min
    kind = CandidateKind(fit.kind)
    if kind is CandidateKind.TRUNCATED_POWER_LAW:
        return _sample_tpl(rng, n, p["alpha"], p["lambda"], x_min)
    u = rng.random(n)
    if kind is CandidateKind.POWER_LAW:
        return x_min * (1.0 - u) ** (-1.0 / (p["alpha"] - 1.0))
    if kind is CandidateKind.EXPONENTIAL:
        return x_min - np.log1p(-u) / p["lambda"]
    mu, sigma = p["mu"], p["sigma"]
    # survival of the standard normal at the truncation point, scaled by (1-u)
    tail_mass = special.ndtr((mu - math.log(x_min)) / sigma)
    z = -special.ndtri((1.0 - u) * tail_mass)
    return np.maximum(np.exp(mu + sigma * z), x_min)
