"""Upper incomplete gamma function for arbitrary real first argument.

scipy's ``gammaincc`` only covers ``s > 0``.  The truncated power law needs
``Gamma(1 - alpha, x)`` with ``1 - alpha < 0``, so small arguments walk the
recurrence ``Gamma(s+1, x) = s Gamma(s, x) + x**s exp(-x)`` down from a
first argument in (-1/2, 1/2], and large arguments use the Legendre
continued fraction, which converges for every real ``s`` once ``x`` is not
small.
"""
import math

import numpy as np
from scipy import special

_FPMIN = 1e-300
_CF_EPS = 1e-15
_CF_MAXITER = 5000


def _log_gamma_cf_scalar(s, x):
    b = x + 1.0 - s
    c = 1.0 / _FPMIN
    d = 1.0 / b
    h = d
    for i in range(1, _CF_MAXITER + 1):
        an = -i * (i - s)
        b += 2.0
        d = an * d + b
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = b + an / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            return -x + s * math.log(x) + math.log(h)
    raise ArithmeticError(f"continued fraction for Gamma({s}, {x}) did not converge")


def _log_gamma_cf(s, x):
    # modified Lentz evaluation of the Legendre continued fraction
    b = x + 1.0 - s
    c = np.full_like(x, 1.0 / _FPMIN)
    d = 1.0 / b
    h = d.copy()
    active = np.ones(x.shape, dtype=bool)
    for i in range(1, _CF_MAXITER + 1):
        an = -i * (i - s)
        b = b + 2.0
        d = an * d + b
        d = np.where(np.abs(d) < _FPMIN, _FPMIN, d)
        c = b + an / c
        c = np.where(np.abs(c) < _FPMIN, _FPMIN, c)
        d = 1.0 / d
        delta = d * c
        h = np.where(active, h * delta, h)
        active &= np.abs(delta - 1.0) >= _CF_EPS
        if not active.any():
            break
    else:
        raise ArithmeticError(f"continued fraction for Gamma({s}, x) did not converge")
    return -x + s * np.log(x) + np.log(h)


_SERIES_N = np.arange(1.0, 31.0)
# log Gamma(1+s) = -euler s + sum_k (-s)**k zeta(k) / k, for |s| <= 1/2
_LG1P_COEF = [float(special.zeta(k) / k) for k in range(2, 60)]


def _log_gamma1p(s):
    # gammaln(1 + s) only has absolute accuracy near s = 0
    acc = 0.0
    for c in reversed(_LG1P_COEF):
        acc = acc * -s + c
    return -np.euler_gamma * s + acc * s * s


def _gamma_small_order(s, x):
    """``Gamma(s, x)`` for ``|s| <= 1/2`` and moderate ``x``.

    Uses ``Gamma(s) - x**s / s = (Gamma(1+s) - x**s) / s`` with both
    differences taken through ``expm1`` so nothing cancels as ``s -> 0``,
    minus the remaining terms of the lower-gamma series.
    """
    if s == 0.0:
        return special.exp1(x)
    lx = np.log(x)
    lead = (math.expm1(_log_gamma1p(s)) - np.expm1(s * lx)) / s
    # term n is (-x)**n / n!; x < 3/2 on this path so 30 terms reach double precision
    terms = np.cumprod(np.divide.outer(-x, _SERIES_N), axis=-1)
    series = terms @ (1.0 / (s + _SERIES_N))
    return lead - np.exp(s * lx) * series


def _gamma_small_order_scalar(s, x):
    if s == 0.0:
        return float(special.exp1(x))
    lx = math.log(x)
    lead = (math.expm1(_log_gamma1p(s)) - math.expm1(s * lx)) / s
    series, term = 0.0, 1.0
    for n in range(1, 31):
        term *= -x / n
        series += term / (s + n)
    return lead - math.exp(s * lx) * series


def _log_gamma_recurrence(s, x, small_order=None):
    if s > 0.5:
        # x < s + 1 here, so Q(s, x) stays away from 0
        return np.log1p(-special.gammainc(s, x)) + special.gammaln(s)
    # start at an order in (-1/2, 1/2] so every downward step divides by |t - 1| >= 1/2
    steps = math.floor(0.5 - s)
    t = s + steps
    value = (small_order or _gamma_small_order)(t, x)
    # Gamma(t-1, x) = (Gamma(t, x) - x**(t-1) exp(-x)) / (t-1)
    lx = np.log(x)
    for _ in range(steps):
        t -= 1.0
        value = (value - np.exp(t * lx - x)) / t
    return np.log(value)


def _log_upper_scalar(s, x):
    if x >= max(1.0, s + 1.0):
        return _log_gamma_cf_scalar(s, x)
    if s > 0.5:
        return float(np.log1p(-special.gammainc(s, x)) + special.gammaln(s))
    return float(_log_gamma_recurrence(s, x, _gamma_small_order_scalar))


def log_upper_gamma(s, x):
    """Return ``log Gamma(s, x)`` for scalar real ``s`` and ``x > 0``.

    ``x`` may be a scalar or an array; the result has the same shape.
    """
    s = float(s)
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0:
        x = float(arr)
        if not (x > 0 and math.isfinite(x)):
            raise ValueError("upper incomplete gamma needs finite x > 0")
        return _log_upper_scalar(s, x)
    if np.any(arr <= 0) or not np.all(np.isfinite(arr)):
        raise ValueError("upper incomplete gamma needs finite x > 0")
    out = np.empty_like(arr)
    use_cf = arr >= max(1.0, s + 1.0)
    if use_cf.any():
        out[use_cf] = _log_gamma_cf(s, arr[use_cf])
    if (~use_cf).any():
        out[~use_cf] = _log_gamma_recurrence(s, arr[~use_cf])
    return out


def upper_gamma(s, x):
    """``Gamma(s, x)``; underflows to 0 for large ``x``, prefer the log form."""
    return np.exp(log_upper_gamma(s, x))
