"""Maximum-likelihood fits, KS distances and the x_min scan."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import optimize

from .distributions import CandidateKind, TailStats, family

MIN_TAIL = 10
_REL_TOL = 1e-8


class FitError(RuntimeError):
    """Raised when a candidate cannot be fitted to the given values."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = list(trace or [])


@dataclass(frozen=True)
class FitResult:
    kind: CandidateKind
    params: dict
    x_min: float
    n_tail: int
    log_likelihood: float
    ks_distance: float = float("nan")
    discrete: bool = False
    n_total: int = 0
    # KS values of every x_min candidate that was scanned, ascending x_min
    scan: tuple = field(default=(), compare=False, repr=False)

    @property
    def family(self):
        return family(self.kind, self.discrete)

    def logpdf(self, x):
        return self.family.logpdf(x, self.params, self.x_min)

    def pdf(self, x):
        return np.exp(self.logpdf(x))

    def cdf(self, x):
        return self.family.cdf(x, self.params, self.x_min)

    def logsf(self, x):
        return self.family.logsf(x, self.params, self.x_min)

    def param(self, name, default=float("nan")):
        return self.params.get(name, default)


def as_values(sample):
    values = getattr(sample, "values", sample)
    values = np.asarray(values, dtype=float)
    if values.ndim != 1 or values.size == 0:
        raise ValueError("expected a non-empty one-dimensional sample")
    if np.any(~np.isfinite(values)) or np.any(values <= 0):
        raise ValueError("sample values must be positive and finite")
    return values


def _tail(values, x_min):
    tail = values[values >= x_min]
    if tail.size < 2:
        raise FitError(f"need at least 2 values >= x_min={x_min}, got {tail.size}")
    if tail[0] == tail.max() and np.all(tail == tail[0]):
        raise FitError("degenerate sample: all tail values are equal")
    return tail


def _maximize(fam, stats, to_params, theta0, bounds, steps):
    """Bounded maximisation of the per-point log-likelihood.

    Quasi-Newton runs first, Nelder-Mead takes over if those stall.  Runs are
    restarted from the incumbent optimum until two consecutive ones agree to
    the relative tolerance; otherwise ``FitError`` carries the run history.
    """
    n = stats.n

    def objective(theta):
        params = to_params(theta)
        if not fam.valid(params):
            return math.inf
        try:
            ll = fam.loglik(stats, params)
        except (ValueError, ArithmeticError, OverflowError):
            return math.inf
        return -ll / n if math.isfinite(ll) else math.inf

    trace = []
    lo = np.array([b[0] for b in bounds])
    hi = np.array([b[1] for b in bounds])
    theta = np.clip(np.asarray(theta0, dtype=float), lo, hi)
    best = objective(theta)
    previous = None
    methods = ("L-BFGS-B", "L-BFGS-B", "Nelder-Mead", "Nelder-Mead", "Nelder-Mead", "Nelder-Mead")
    for attempt, method in enumerate(methods):
        if method == "L-BFGS-B":
            res = optimize.minimize(objective, theta, method=method, bounds=bounds,
                                    options={"ftol": 1e-15, "gtol": 1e-10, "maxiter": 2000})
        else:
            simplex = [theta]
            for j, step in enumerate(steps):
                vertex = theta.copy()
                vertex[j] = vertex[j] + step if vertex[j] + step <= hi[j] else vertex[j] - step
                simplex.append(vertex)
            res = optimize.minimize(
                objective, theta, method=method, bounds=bounds,
                options={"initial_simplex": np.array(simplex), "xatol": 1e-10,
                         "fatol": 1e-14, "maxiter": 4000, "maxfev": 8000},
            )
            steps = [st * 0.1 for st in steps]
        fun = float(res.fun)
        trace.append((attempt, method, res.x.tolist(), fun, int(res.nit)))
        if not math.isfinite(fun):
            continue
        if fun <= best or not math.isfinite(best):
            theta, best = np.asarray(res.x, dtype=float), fun
        if previous is not None and abs(fun - previous) <= _REL_TOL * max(1.0, abs(previous)):
            return to_params(theta), -best * n
        previous = fun
    raise FitError("numerical maximisation did not converge", trace)


def _fit_params(kind, stats, tail, discrete, start=None):
    fam = family(kind, discrete)
    x_min = stats.x_min
    log_excess = stats.sum_log - stats.n * math.log(x_min)
    if kind is CandidateKind.POWER_LAW:
        if log_excess <= 0:
            raise FitError("power law undefined: no values above x_min")
        alpha = 1.0 + stats.n / log_excess
        if not discrete:
            return {"alpha": alpha}
        return _maximize(fam, stats, lambda t: {"alpha": float(t[0])},
                         [start["alpha"] if start else alpha],
                         [(1.0 + 1e-9, 50.0)], [0.2])[0]
    if kind is CandidateKind.EXPONENTIAL:
        excess = stats.sum_x - stats.n * x_min
        if excess <= 0:
            raise FitError("exponential undefined: no values above x_min")
        return {"lambda": stats.n / excess}
    if kind is CandidateKind.LOGNORMAL:
        if start:
            theta0 = [start["mu"], math.log(start["sigma"])]
        else:
            mu0 = stats.sum_log / stats.n
            var0 = max(stats.sum_log2 / stats.n - mu0 * mu0, 1e-12)
            theta0 = [mu0, 0.5 * math.log(var0)]
        lx_min = math.log(x_min)
        lx_max = float(np.log(tail.max()))
        bounds = [(lx_min - 200.0, lx_max + 50.0), (math.log(1e-8), math.log(1e3))]
        return _maximize(fam, stats,
                         lambda t: {"mu": float(t[0]), "sigma": math.exp(t[1])},
                         theta0, bounds, [0.5, 0.5])[0]
    # truncated power law, optimised over (alpha, log(lambda*x_min))
    if start:
        theta0 = [start["alpha"], math.log(start["lambda"] * x_min)]
    else:
        alpha0 = 1.0 + stats.n / log_excess if log_excess > 0 else 2.0
        mean = stats.sum_x / stats.n
        theta0 = [min(max(alpha0, 0.5), 10.0), math.log(max(0.1 * x_min / mean, 1e-10))]
    bounds = [(-5.0, 20.0), (math.log(1e-12), math.log(1e4))]
    return _maximize(fam, stats,
                     lambda t: {"alpha": float(t[0]), "lambda": math.exp(t[1]) / x_min},
                     theta0, bounds, [0.5, 1.0])[0]


def ks_distance(fit, sample):
    """Largest absolute gap between the empirical and model CDFs on the tail."""
    values = as_values(sample)
    tail = np.sort(values[values >= fit.x_min])
    if tail.size == 0:
        raise ValueError("no sample values at or above x_min")
    uniq, counts = np.unique(tail, return_counts=True)
    return _ks_sorted(fit, uniq, np.cumsum(counts), tail.size)


def _ks_sorted(fit, uniq, cum, n):
    ecdf = cum / n
    left = np.concatenate(([0.0], ecdf[:-1]))
    model = np.clip(fit.cdf(uniq), 0.0, 1.0)
    model_left = np.clip(fit.cdf(uniq - 1.0), 0.0, 1.0) if fit.discrete else model
    return float(max(np.max(np.abs(model - ecdf)), np.max(np.abs(model_left - left))))


def fit_mle(kind, sample, x_min, discrete=False, start=None):
    """Fit ``kind`` to the values ``>= x_min`` by maximum likelihood.

    Closed forms are used for the continuous power law and the exponential;
    the other candidates are maximised numerically.  ``start`` optionally
    seeds the numerical search with a parameter dict.
    """
    kind = CandidateKind(kind)
    values = as_values(sample)
    x_min = float(x_min)
    if x_min <= 0:
        raise ValueError("x_min must be positive")
    tail = _tail(values, x_min)
    stats = TailStats.from_values(tail, x_min)
    params = _fit_params(kind, stats, tail, discrete, start)
    fam = family(kind, discrete)
    result = FitResult(kind, params, x_min, stats.n, fam.loglik(stats, params),
                       discrete=discrete, n_total=values.size)
    return replace(result, ks_distance=ks_distance(result, values))


def estimate_xmin(kind, sample, discrete=False, min_tail=MIN_TAIL, max_candidates=None):
    """Choose x_min among the distinct sample values by minimising KS distance.

    Candidates whose tail holds fewer than ``min_tail`` points are skipped.
    ``max_candidates`` thins the scan to evenly spaced candidates (always
    keeping the smallest); ``None`` scans all of them.  Ties go to the smaller
    x_min.
    """
    kind = CandidateKind(kind)
    values = np.sort(as_values(sample))
    uniq, counts = np.unique(values, return_counts=True)
    if uniq.size < MIN_TAIL:
        raise FitError(f"x_min estimation needs at least {MIN_TAIL} distinct values, got {uniq.size}")
    n_from = counts[::-1].cumsum()[::-1]           # values >= uniq[j]
    # a candidate needs min_tail points and at least two distinct tail values
    eligible = np.flatnonzero((n_from >= min_tail) & (np.arange(uniq.size) < uniq.size - 1))
    if eligible.size == 0:
        raise FitError("no x_min candidate leaves enough tail points")
    if max_candidates is not None and eligible.size > max_candidates:
        pick = np.unique(np.linspace(0, eligible.size - 1, max_candidates).round().astype(int))
        eligible = eligible[pick]

    logs = np.log(values)
    suffix = lambda a: np.concatenate((np.cumsum(a[::-1])[::-1], [0.0]))
    s_log, s_x, s_log2 = suffix(logs), suffix(values), suffix(logs * logs)
    first = np.searchsorted(values, uniq)            # index of first value == uniq[j]
    fam = family(kind, discrete)

    best = None
    scan = []
    start = None
    for j in eligible:
        i = first[j]
        x_min = float(uniq[j])
        stats = TailStats(x_min, values.size - i, float(s_log[i]), float(s_x[i]), float(s_log2[i]))
        try:
            params = _fit_params(kind, stats, values[i:], discrete, start)
        except FitError:
            continue
        start = params if kind in (CandidateKind.LOGNORMAL, CandidateKind.TRUNCATED_POWER_LAW) else None
        fit = FitResult(kind, params, x_min, stats.n, fam.loglik(stats, params),
                        discrete=discrete, n_total=values.size)
        cum = np.cumsum(counts[j:])
        ks = _ks_sorted(fit, uniq[j:], cum, stats.n)
        scan.append((x_min, ks))
        if best is None or ks < best.ks_distance:
            best = replace(fit, ks_distance=ks)
    if best is None:
        raise FitError("every x_min candidate failed to fit")
    return replace(best, scan=tuple(scan))
