"""Node centralities per layer and their cross-layer rank agreement."""
from __future__ import annotations

import enum
import math
from collections import deque
from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.linalg import eigsh

from .netbuild import LayerName, symmetrize

DEFAULT_DAMPING = 0.85
DEFAULT_TOL = 1e-10
MAX_ITER = 10_000
DENSE_EIGEN_LIMIT = 2000


class Measure(str, enum.Enum):
    IN_STRENGTH = "in_strength"
    OUT_STRENGTH = "out_strength"
    PAGERANK = "pagerank"
    HUB = "hub"
    AUTHORITY = "authority"
    BETWEENNESS = "betweenness"


class ConvergenceError(RuntimeError):
    pass


class UndefinedCorrelation(ValueError):
    pass


@dataclass(frozen=True)
class CentralityVector:
    measure: Measure
    layer: str
    scores: dict

    def array(self, nodes):
        return np.array([self.scores[n] for n in nodes], dtype=float)


@dataclass(frozen=True)
class RankCorrelationMatrix:
    measure: Measure
    layers: tuple
    entries: dict  # (layer_a, layer_b) -> tau

    def matrix(self):
        return np.array([[self.entries[(a, b)] for b in self.layers] for a in self.layers])


def _directed(layer):
    return layer if layer.directed else symmetrize(layer)


def weight_matrix(layer, nodes):
    idx = {n: i for i, n in enumerate(nodes)}
    n = len(nodes)
    layer = _directed(layer)
    if not layer.edges:
        return csr_matrix((n, n))
    rows, cols, vals = zip(*((idx[i], idx[j], w) for (i, j), w in layer.edges.items()))
    return csr_matrix((vals, (rows, cols)), shape=(n, n))


def pagerank(layer, nodes, damping=DEFAULT_DAMPING, tol=DEFAULT_TOL):
    """Weighted PageRank by power iteration with uniform teleport.

    Transition probabilities are proportional to edge weights; dangling nodes
    spread their mass uniformly.  Undirected layers are symmetrized first.
    """
    if not 0.0 < damping < 1.0:
        raise ValueError("damping must lie in (0, 1)")
    nodes = tuple(nodes)
    n = len(nodes)
    w = weight_matrix(layer, nodes)
    out = np.asarray(w.sum(1)).ravel()
    dangling = out == 0
    inv = np.where(dangling, 0.0, 1.0 / np.where(dangling, 1.0, out))
    p_t = (csr_matrix(w.multiply(inv[:, None]))).T.tocsr()
    r = np.full(n, 1.0 / n)
    for _ in range(MAX_ITER):
        nxt = damping * (p_t @ r + r[dangling].sum() / n) + (1.0 - damping) / n
        nxt /= nxt.sum()
        if np.abs(nxt - r).sum() < tol:
            r = nxt
            break
        r = nxt
    else:
        raise ConvergenceError(f"PageRank did not converge in {MAX_ITER} iterations")
    return CentralityVector(Measure.PAGERANK, layer.name, dict(zip(nodes, r.tolist())))


def _principal_authority(w):
    """Dominant eigenvector of W^T W, sign-fixed to be non-negative."""
    m = (w.T @ w).toarray() if w.shape[0] <= DENSE_EIGEN_LIMIT else w.T @ w
    if isinstance(m, np.ndarray):
        vals, vecs = np.linalg.eigh(m)
        v = vecs[:, np.argmax(vals)]
    else:
        _, vecs = eigsh(m.astype(float), k=1, which="LA")
        v = vecs[:, 0]
    v = np.abs(v)
    return v / np.linalg.norm(v)


def hits(layer, nodes, tol=DEFAULT_TOL):
    """Weighted hubs and authorities, L2-normalised each half-step.

    When the two leading eigenvalues of W^T W are too close for power
    iteration to settle within MAX_ITER steps, the authority vector is taken
    from a symmetric eigensolver instead and hubs follow as W a.
    """
    nodes = tuple(nodes)
    n = len(nodes)
    w = weight_matrix(layer, nodes)
    wt = w.T.tocsr()
    if w.nnz == 0:
        u = np.full(n, 1.0 / math.sqrt(n)) if n else np.zeros(0)
        return (CentralityVector(Measure.HUB, layer.name, dict(zip(nodes, u.tolist()))),
                CentralityVector(Measure.AUTHORITY, layer.name, dict(zip(nodes, u.tolist()))))
    h = np.full(n, 1.0 / math.sqrt(n))
    a = np.zeros(n)
    for _ in range(MAX_ITER):
        a_new = wt @ h
        a_new /= np.linalg.norm(a_new)
        h_new = w @ a_new
        h_new /= np.linalg.norm(h_new)
        change = max(np.linalg.norm(h_new - h), np.linalg.norm(a_new - a))
        h, a = h_new, a_new
        if change < tol:
            break
    else:
        a = _principal_authority(w)
        h = w @ a
        h /= np.linalg.norm(h)
    return (CentralityVector(Measure.HUB, layer.name, dict(zip(nodes, h.tolist()))),
            CentralityVector(Measure.AUTHORITY, layer.name, dict(zip(nodes, a.tolist()))))


def strength(layer, nodes, direction="in"):
    """Sum of incident weights; on undirected layers both directions coincide."""
    if direction not in ("in", "out"):
        raise ValueError("direction must be 'in' or 'out'")
    scores = {n: 0.0 for n in nodes}
    parts = {n: [] for n in nodes}
    for (i, j), w in layer.edges.items():
        if not layer.directed:
            parts[i].append(w)
            parts[j].append(w)
        elif direction == "in":
            parts[j].append(w)
        else:
            parts[i].append(w)
    for n, ws in parts.items():
        scores[n] = math.fsum(ws)
    measure = Measure.IN_STRENGTH if direction == "in" else Measure.OUT_STRENGTH
    return CentralityVector(measure, layer.name, scores)


def betweenness(layer, nodes):
    """Unweighted shortest-path betweenness, normalised by (N-1)(N-2).

    Single-source dependency accumulation from every node; direction is
    respected (undirected layers are symmetrized, so each unordered pair
    counts in both orientations).
    """
    nodes = tuple(nodes)
    n = len(nodes)
    score = dict.fromkeys(nodes, 0.0)
    if n < 3:
        return CentralityVector(Measure.BETWEENNESS, layer.name, score)
    succ = {v: [] for v in nodes}
    for i, j in sorted(_directed(layer).edges):
        succ[i].append(j)
    for s in nodes:
        stack = []
        pred = {v: [] for v in nodes}
        sigma = dict.fromkeys(nodes, 0)
        sigma[s] = 1
        dist = {s: 0}
        queue = deque([s])
        while queue:
            v = queue.popleft()
            stack.append(v)
            for w in succ[v]:
                if w not in dist:
                    dist[w] = dist[v] + 1
                    queue.append(w)
                if dist[w] == dist[v] + 1:
                    sigma[w] += sigma[v]
                    pred[w].append(v)
        delta = dict.fromkeys(nodes, 0.0)
        while stack:
            w = stack.pop()
            for v in pred[w]:
                delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w])
            if w != s:
                score[w] += delta[w]
    norm = (n - 1) * (n - 2)
    return CentralityVector(Measure.BETWEENNESS, layer.name, {v: c / norm for v, c in score.items()})


def kendall_counts(x, y, chunk=2048):
    """Integer pair counts ``(concordant, discordant, ties_x, ties_y, n_pairs)``.

    ``ties_x`` counts pairs tied in x (tied in both included), likewise ``ties_y``.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValueError("score vectors must have equal length")
    n = x.size
    conc = disc = tx = ty = 0
    for lo in range(0, n, chunk):
        hi = min(lo + chunk, n)
        # pairs (i, j) with i in [lo, hi) and j > i
        dx = np.sign(x[None, :] - x[lo:hi, None])
        dy = np.sign(y[None, :] - y[lo:hi, None])
        mask = np.arange(n)[None, :] > np.arange(lo, hi)[:, None]
        prod = (dx * dy)[mask]
        conc += int(np.count_nonzero(prod > 0))
        disc += int(np.count_nonzero(prod < 0))
        tx += int(np.count_nonzero(dx[mask] == 0))
        ty += int(np.count_nonzero(dy[mask] == 0))
    return conc, disc, tx, ty, n * (n - 1) // 2


def kendall_tau(scores_a, scores_b):
    """Tie-corrected Kendall tau-b between two score maps over the same nodes."""
    if isinstance(scores_a, CentralityVector):
        scores_a = scores_a.scores
    if isinstance(scores_b, CentralityVector):
        scores_b = scores_b.scores
    if set(scores_a) != set(scores_b):
        raise ValueError("score maps must cover the same nodes")
    keys = sorted(scores_a)
    conc, disc, tx, ty, n0 = kendall_counts([scores_a[k] for k in keys],
                                            [scores_b[k] for k in keys])
    denom = (n0 - tx) * (n0 - ty)
    if denom == 0:
        raise UndefinedCorrelation("Kendall tau undefined: a score vector has no variation")
    return (conc - disc) / math.sqrt(denom)


def measure_vector(layer, nodes, measure, damping=DEFAULT_DAMPING):
    measure = Measure(measure)
    if measure is Measure.IN_STRENGTH:
        return strength(layer, nodes, "in")
    if measure is Measure.OUT_STRENGTH:
        return strength(layer, nodes, "out")
    if measure is Measure.PAGERANK:
        return pagerank(layer, nodes, damping)
    if measure in (Measure.HUB, Measure.AUTHORITY):
        hub, auth = hits(layer, nodes)
        return hub if measure is Measure.HUB else auth
    return betweenness(layer, nodes)


def all_measures(network, damping=DEFAULT_DAMPING):
    """``{layer_name: {measure: CentralityVector}}`` for every layer."""
    out = {}
    for name in LayerName:
        if name not in network.layers:
            continue
        layer = network.layers[name]
        nodes = network.nodes
        hub, auth = hits(layer, nodes)
        out[name.value] = {
            Measure.IN_STRENGTH: strength(layer, nodes, "in"),
            Measure.OUT_STRENGTH: strength(layer, nodes, "out"),
            Measure.PAGERANK: pagerank(layer, nodes, damping),
            Measure.HUB: hub,
            Measure.AUTHORITY: auth,
            Measure.BETWEENNESS: betweenness(layer, nodes),
        }
    return out


def cross_layer_matrix(network, measure, damping=DEFAULT_DAMPING, vectors=None):
    """Kendall tau-b between the measure's scores on every pair of layers."""
    measure = Measure(measure)
    names = [n.value for n in LayerName if n in network.layers]
    if vectors is None:
        vectors = {n: measure_vector(network.layers[LayerName(n)], network.nodes, measure, damping)
                   for n in names}
    else:
        vectors = {n: vectors[n][measure] for n in names}
    entries = {}
    for i, a in enumerate(names):
        entries[(a, a)] = 1.0
        for b in names[i + 1:]:
            tau = kendall_tau(vectors[a].scores, vectors[b].scores)
            entries[(a, b)] = entries[(b, a)] = tau
    return RankCorrelationMatrix(measure, tuple(names), entries)


@dataclass(frozen=True)
class RankedNode:
    rank: int
    node_id: str
    score: float
    total_assets: float | None
    tied: bool


def top_k(vector, k, profiles=None):
    """Highest-scoring nodes, ties broken by node id and flagged."""
    if k < 1:
        raise ValueError("k must be >= 1")
    profiles = profiles or {}
    ordered = sorted(vector.scores.items(), key=lambda kv: (-kv[1], kv[0]))
    counts = {}
    for _, s in ordered:
        counts[s] = counts.get(s, 0) + 1
    out = []
    for rank, (node, score) in enumerate(ordered[:k], start=1):
        p = profiles.get(node)
        out.append(RankedNode(rank, node, score, None if p is None else p.total_assets,
                              counts[score] > 1))
    return out


def top_share_persistence(vectors, k=10, quantile=0.2):
    """Share of each layer's top-k nodes that sit in another layer's top quantile.

    ``vectors`` maps layer name to CentralityVector; returns
    ``{(layer_a, layer_b): share}`` for ordered pairs a != b.
    """
    names = list(vectors)
    tops = {n: [r.node_id for r in top_k(vectors[n], k)] for n in names}
    upper = {}
    for n in names:
        ordered = sorted(vectors[n].scores.items(), key=lambda kv: (-kv[1], kv[0]))
        cut = max(1, math.ceil(quantile * len(ordered)))
        upper[n] = {node for node, _ in ordered[:cut]}
    return {(a, b): sum(1 for node in tops[a] if node in upper[b]) / len(tops[a])
            for a in names for b in names if a != b and tops[a]}
