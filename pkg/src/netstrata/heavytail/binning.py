import math

import numpy as np

from .fitting import as_values


def log_binned_pdf(sample, bins_per_decade=10):
    """Empirical density on geometric bins spanning ``[min, max]``.

    Returns ``(centres, densities, widths)``; each density is
    ``count / (n * width)`` and the centre is the geometric mean of the bin
    edges.  Empty bins are dropped.  A sample with a single distinct value
    gets one bin of one ``bins_per_decade`` step centred on it.
    """
    if bins_per_decade < 1:
        raise ValueError("bins_per_decade must be a positive integer")
    x = as_values(sample)
    lo, hi = float(x.min()), float(x.max())
    if lo == hi:
        half = 10.0 ** (0.5 / bins_per_decade)
        edges = np.array([lo / half, lo * half])
    else:
        n_bins = max(1, math.ceil(math.log10(hi / lo) * bins_per_decade))
        edges = np.geomspace(lo, hi, n_bins + 1)
        edges[0], edges[-1] = lo, hi
    # right-closed last bin so the maximum is counted
    idx = np.clip(np.searchsorted(edges, x, side="right") - 1, 0, edges.size - 2)
    counts = np.bincount(idx, minlength=edges.size - 1)
    widths = np.diff(edges)
    centres = np.sqrt(edges[:-1] * edges[1:])
    keep = counts > 0
    dens = counts[keep] / (x.size * widths[keep])
    return centres[keep], dens, widths[keep]
