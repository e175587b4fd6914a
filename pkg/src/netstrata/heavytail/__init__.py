"""Heavy-tailed fits to weighted degrees: MLE, x_min scan, model comparison, bootstrap."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from ..netbuild import Level
from .binning import log_binned_pdf
from .bootstrap import THIN_TAIL, BootstrapError, BootstrapReport, bootstrap_gof
from .compare import LrOutcome, Selection, likelihood_ratio, selection_score, significance_stars
from .distributions import KIND_ORDER, CandidateKind, family
from .fitting import FitError, FitResult, estimate_xmin, fit_mle, ks_distance
from .sampling import SamplingError, sample_from

DEFAULT_SCALE = 1e7


class Direction(str, enum.Enum):
    IN = "in"
    OUT = "out"


class EmptySampleError(ValueError):
    pass


@dataclass(frozen=True)
class DegreeSample:
    values: tuple
    scale: float = DEFAULT_SCALE
    direction: Direction = Direction.IN
    layer: str = ""
    level: Level = Level.ENTITY
    node_ids: tuple = ()
    weighted: bool = True

    def __post_init__(self):
        if not self.values:
            raise EmptySampleError("degree sample is empty")
        if any(not (v > 0 and math.isfinite(v)) for v in self.values):
            raise ValueError("degree sample values must be positive and finite")
        if not self.scale > 0:
            raise ValueError("scale must be positive")

    def __len__(self):
        return len(self.values)


def weighted_degree_sample(network, layer, direction=Direction.IN, scale=DEFAULT_SCALE,
                           weighted=True):
    """Per-node incident weight in one direction, divided by ``scale``.

    Nodes with zero strength are dropped.  Undirected layers count every
    incident edge regardless of direction.  With ``weighted=False`` each edge
    counts 1 and ``scale`` is ignored.
    """
    direction = Direction(direction)
    lay = network.layer(layer)
    parts = {}
    for (i, j), w in lay.edges.items():
        w = w if weighted else 1.0
        if not lay.directed:
            targets = (i, j)
        else:
            targets = (j,) if direction is Direction.IN else (i,)
        for t in targets:
            parts.setdefault(t, []).append(w)
    divisor = scale if weighted else 1.0
    ids = tuple(n for n in network.nodes if n in parts)
    values = tuple(math.fsum(parts[n]) / divisor for n in ids)
    if not values:
        raise EmptySampleError(f"layer {lay.name} has no active nodes in direction {direction.value}")
    return DegreeSample(values, divisor, direction, lay.name, Level(network.level), ids, weighted)


__all__ = [
    "BootstrapError", "BootstrapReport", "CandidateKind", "DegreeSample", "Direction",
    "EmptySampleError", "FitError", "FitResult", "KIND_ORDER", "LrOutcome", "SamplingError",
    "Selection", "THIN_TAIL", "bootstrap_gof", "estimate_xmin", "family", "fit_mle",
    "ks_distance", "likelihood_ratio", "log_binned_pdf", "sample_from", "selection_score",
    "significance_stars", "weighted_degree_sample",
]
