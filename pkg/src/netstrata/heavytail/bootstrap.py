"""Semi-parametric bootstrap goodness-of-fit test."""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .distributions import CandidateKind
from .fitting import FitError, FitResult, as_values, estimate_xmin, fit_mle
from .sampling import SamplingError, sample_from

THIN_TAIL = 50
MIN_EFFECTIVE_SHARE = 0.9


class BootstrapError(RuntimeError):
    pass


@dataclass(frozen=True)
class BootstrapReport:
    kind: CandidateKind
    tail_only: bool
    fit: FitResult
    empirical_ks: float
    bootstrap_ks: tuple
    bootstrap_params: tuple
    bootstrap_xmin: tuple
    p_value: float
    reject_h0: bool
    B: int
    effective_B: int
    seed: int
    significance: float
    thin_tail: bool
    failures: tuple = field(default=())

    def to_dict(self):
        return {
            "kind": self.kind.value,
            "tail_only": self.tail_only,
            "fit": {"params": dict(self.fit.params), "x_min": self.fit.x_min,
                    "n_tail": self.fit.n_tail, "n": self.fit.n_total,
                    "log_likelihood": self.fit.log_likelihood},
            "empirical_ks": self.empirical_ks,
            "p_value": self.p_value,
            "reject_h0": self.reject_h0,
            "significance": self.significance,
            "B": self.B,
            "effective_B": self.effective_B,
            "seed": self.seed,
            "thin_tail": self.thin_tail,
            "failures": [list(f) for f in self.failures],
            "bootstrap_ks": list(self.bootstrap_ks),
            "bootstrap_params": [dict(p) for p in self.bootstrap_params],
            "bootstrap_xmin": list(self.bootstrap_xmin),
        }


def _fit(kind, values, tail_only, max_candidates):
    if tail_only:
        return estimate_xmin(kind, values, max_candidates=max_candidates)
    return fit_mle(kind, values, values.min())


def _iterations(args):
    kind, fit, below, n, tail_only, max_candidates, seed, indices = args
    p_tail = fit.n_tail / n
    out = []
    for b in indices:
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(b,)))
        n_model = int(rng.binomial(n, p_tail)) if below.size else n
        try:
            parts = []
            if n_model:
                parts.append(sample_from(fit, n_model, rng))
            if n - n_model:
                parts.append(rng.choice(below, size=n - n_model, replace=True))
            synthetic = np.concatenate(parts)
            refit = _fit(kind, synthetic, tail_only, max_candidates)
        except (FitError, SamplingError, ValueError, ArithmeticError) as exc:
            out.append((b, None, f"{type(exc).__name__}: {exc}"))
            continue
        out.append((b, refit, None))
    return out


def bootstrap_gof(kind, sample, B=1000, tail_only=False, significance=0.10, seed=0,
                  workers=1, max_candidates=None):
    """Test whether ``sample`` is consistent with the fitted ``kind``.

    The empirical fit uses the estimated x_min when ``tail_only`` and the
    sample minimum otherwise.  Each bootstrap sample has the original size:
    a point comes from the fitted model with probability ``n_tail / n`` and is
    otherwise resampled from the empirical values below x_min.  Every
    bootstrap sample is refitted with the same procedure, and the p-value is
    the share of bootstrap KS distances at least as large as the empirical one.
    """
    if B < 100:
        raise ValueError("bootstrap needs B >= 100")
    if not 0.0 < significance < 1.0:
        raise ValueError("significance must lie in (0, 1)")
    kind = CandidateKind(kind)
    values = as_values(sample)
    fit = _fit(kind, values, tail_only, max_candidates)
    below = values[values < fit.x_min]

    workers = max(1, int(workers))
    chunks = [list(range(B))[w::workers] for w in range(workers)]
    jobs = [(kind, fit, below, values.size, tail_only, max_candidates, seed, c) for c in chunks]
    if workers == 1:
        results = _iterations(jobs[0])
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = [r for part in pool.map(_iterations, jobs) for r in part]
    results.sort(key=lambda r: r[0])

    ok = [r[1] for r in results if r[1] is not None]
    failures = tuple((b, msg) for b, refit, msg in results if refit is None)
    if len(ok) < MIN_EFFECTIVE_SHARE * B:
        raise BootstrapError(f"only {len(ok)} of {B} bootstrap refits succeeded; "
                             f"first failure: {failures[0][1] if failures else '-'}")
    ks = np.array([r.ks_distance for r in ok])
    p_value = float(np.count_nonzero(ks >= fit.ks_distance) / len(ok))
    return BootstrapReport(
        kind=kind, tail_only=tail_only, fit=fit, empirical_ks=fit.ks_distance,
        bootstrap_ks=tuple(float(v) for v in ks),
        bootstrap_params=tuple(dict(r.params) for r in ok),
        bootstrap_xmin=tuple(float(r.x_min) for r in ok),
        p_value=p_value, reject_h0=p_value < significance, B=B, effective_B=len(ok),
        seed=seed, significance=significance,
        thin_tail=bool(tail_only and fit.n_tail < THIN_TAIL), failures=failures,
    )
