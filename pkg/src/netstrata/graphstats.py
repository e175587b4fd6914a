"""Per-layer graph statistics and the degree-clustering profile."""
from __future__ import annotations

import enum
from dataclasses import asdict, dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components as _cc
from scipy.sparse.csgraph import shortest_path

from .netbuild import LayerName, NetworkError, symmetrize

HERFINDAHL_BASE = "total strength (in + out weighted degree) shares"


class UndefinedStatistic(ValueError):
    pass


class ClusteringMode(str, enum.Enum):
    UNDIRECTED_PROJECTION = "undirected_projection"
    DIRECTED = "directed"


@dataclass(frozen=True)
class GraphStats:
    n_nodes: int
    n_edges: int
    n_components: int
    largest_comp_node_share: float
    largest_comp_edge_share: float
    diameter_largest_comp: int
    avg_clustering: float
    reciprocity: float | None
    density: float
    global_efficiency: float
    herfindahl: float | None

    def as_row(self):
        return asdict(self)


@dataclass(frozen=True)
class NodeProfile:
    node_id: str
    degree_k: int
    clustering_cc: float
    total_assets: float | None


@dataclass(frozen=True)
class Component:
    nodes: tuple
    n_edges: int


def _index(nodes):
    return {n: i for i, n in enumerate(nodes)}


def adjacency(layer, nodes):
    """Sparse 0/1 adjacency matrix; undirected layers come out symmetric."""
    idx = _index(nodes)
    n = len(nodes)
    if not layer.edges:
        return csr_matrix((n, n), dtype=np.int64)
    rows = [idx[i] for i, _ in layer.edges]
    cols = [idx[j] for _, j in layer.edges]
    if not layer.directed:
        rows, cols = rows + cols, cols + rows
    return csr_matrix((np.ones(len(rows), dtype=np.int64), (rows, cols)), shape=(n, n))


def _projection(a):
    p = (a + a.T).tocsr()
    p.data[:] = 1
    return p


def density(layer, nodes):
    n = len(nodes)
    if n < 2:
        raise UndefinedStatistic("density needs at least two nodes")
    e = layer.n_edges
    return e / (n * (n - 1)) if layer.directed else 2.0 * e / (n * (n - 1))


def density_from_counts(n_nodes, n_edges, directed):
    if n_nodes < 2:
        raise UndefinedStatistic("density needs at least two nodes")
    pairs = n_nodes * (n_nodes - 1)
    return n_edges / pairs if directed else 2.0 * n_edges / pairs


def connected_components(layer, nodes):
    """Weakly connected components, largest first (node count, then edges, then id)."""
    n_comp, labels = _cc(adjacency(layer, nodes), directed=True, connection="weak")
    idx = _index(nodes)
    edge_count = np.zeros(n_comp, dtype=int)
    for i, _ in layer.edges:
        edge_count[labels[idx[i]]] += 1
    members = [[] for _ in range(n_comp)]
    for node, lab in zip(nodes, labels):
        members[lab].append(node)
    comps = [Component(tuple(sorted(m)), int(edge_count[c])) for c, m in enumerate(members)]
    comps.sort(key=lambda c: (-len(c.nodes), -c.n_edges, c.nodes[0]))
    return comps


def _bfs_rows(graph, directed, chunk=256):
    n = graph.shape[0]
    for lo in range(0, n, chunk):
        rows = np.arange(lo, min(lo + chunk, n))
        yield rows, shortest_path(graph, unweighted=True, directed=directed, indices=rows)


def diameter(layer, nodes):
    """Longest shortest path inside the largest component, ignoring direction."""
    comps = connected_components(layer, nodes)
    largest = comps[0].nodes if comps else ()
    if len(largest) < 2:
        raise UndefinedStatistic("diameter needs a largest component with at least two nodes")
    sel = np.array([_index(nodes)[n] for n in largest])
    sub = _projection(adjacency(layer, nodes))[sel][:, sel]
    return int(max(d.max() for _, d in _bfs_rows(sub, directed=False)))


def local_clustering(layer, nodes, mode=ClusteringMode.UNDIRECTED_PROJECTION):
    """Per-node clustering coefficients (numpy array aligned with ``nodes``).

    ``undirected_projection`` counts triangles on the projection.
    ``directed`` counts all directed triangle orientations,
    ``[(A+A^T)^3]_ii``, over ``2 (k_tot (k_tot - 1) - 2 k_bi)``; an
    undirected layer is measured through its symmetrized directed form.
    """
    mode = ClusteringMode(mode)
    if mode is ClusteringMode.DIRECTED:
        if not layer.directed:
            layer = symmetrize(layer)
        a = adjacency(layer, nodes)
        s = (a + a.T).tocsr()
        t = np.asarray((s @ s).multiply(s.T).sum(1)).ravel().astype(float)
        k_tot = np.asarray(a.sum(0)).ravel() + np.asarray(a.sum(1)).ravel()
        k_bi = np.asarray(a.multiply(a.T).sum(1)).ravel()
        denom = 2.0 * (k_tot * (k_tot - 1.0) - 2.0 * k_bi)
    else:
        p = _projection(adjacency(layer, nodes))
        t = np.asarray((p @ p).multiply(p).sum(1)).ravel() / 2.0
        k = np.asarray(p.sum(1)).ravel().astype(float)
        denom = k * (k - 1.0) / 2.0
    out = np.zeros(len(nodes))
    ok = denom > 0
    out[ok] = t[ok] / denom[ok]
    return out


def avg_clustering(layer, nodes, mode=ClusteringMode.UNDIRECTED_PROJECTION):
    if not nodes:
        return 0.0
    return float(local_clustering(layer, nodes, mode).mean())


def reciprocity(layer):
    if not layer.directed:
        raise NetworkError("reciprocity is defined for directed layers only")
    if not layer.edges:
        return 0.0
    mutual = sum(1 for (i, j) in layer.edges if (j, i) in layer.edges)
    return mutual / layer.n_edges


def global_efficiency(layer, nodes):
    """Mean of 1/d(i, j) over ordered pairs, following edge direction."""
    n = len(nodes)
    if n < 2:
        raise UndefinedStatistic("efficiency needs at least two nodes")
    a = adjacency(layer, nodes)
    if a.nnz == 0:
        return 0.0
    total = 0.0
    for rows, dist in _bfs_rows(a, directed=True):
        dist[np.arange(rows.size), rows] = np.inf
        total += (1.0 / dist).sum()
    return float(total / (n * (n - 1)))


def strengths(layer, nodes):
    idx = _index(nodes)
    s = np.zeros(len(nodes))
    for (i, j), w in layer.edges.items():
        s[idx[i]] += w
        s[idx[j]] += w
    return s


def herfindahl(layer, nodes):
    """Sum of squared shares of total node strength."""
    s = strengths(layer, nodes)
    total = s.sum()
    if total <= 0:
        raise UndefinedStatistic("herfindahl index needs positive total weight")
    shares = s / total
    return float(np.dot(shares, shares))


def layer_stats(layer, nodes, clustering_mode=None):
    nodes = tuple(nodes)
    comps = connected_components(layer, nodes)
    largest = comps[0]
    n, e = len(nodes), layer.n_edges
    if clustering_mode is None:
        clustering_mode = ClusteringMode.DIRECTED if layer.directed else ClusteringMode.UNDIRECTED_PROJECTION
    return GraphStats(
        n_nodes=n,
        n_edges=e,
        n_components=len(comps),
        largest_comp_node_share=len(largest.nodes) / n,
        largest_comp_edge_share=largest.n_edges / e if e else 0.0,
        diameter_largest_comp=diameter(layer, nodes) if len(largest.nodes) >= 2 else 0,
        avg_clustering=avg_clustering(layer, nodes, clustering_mode),
        reciprocity=reciprocity(layer) if layer.directed else None,
        density=density(layer, nodes),
        global_efficiency=global_efficiency(layer, nodes),
        herfindahl=herfindahl(layer, nodes) if e else None,
    )


SUITE_COLUMNS = ("st_cred", "lt_cred", "cross_sec", "st_fund", "ovrl_portfl",
                 "ovrl_portfl_dir", "flat")


def stats_suite(network):
    """GraphStats for every layer, with the overlap layer both as-is and symmetrized."""
    out = {}
    for name in LayerName:
        if name not in network.layers:
            continue
        layer = network.layers[name]
        out[name.value] = layer_stats(layer, network.nodes)
        if not layer.directed:
            out[name.value + "_dir"] = layer_stats(symmetrize(layer), network.nodes)
    return out


def degree_clustering_profile(network, layer_name, mode=ClusteringMode.UNDIRECTED_PROJECTION):
    """Degree and clustering of every node with at least one edge in the layer.

    Degree counts distinct neighbours on the undirected projection.
    """
    layer = network.layer(layer_name)
    nodes = network.nodes
    k = np.asarray(_projection(adjacency(layer, nodes)).sum(1)).ravel()
    cc = local_clustering(layer, nodes, mode)
    out = []
    for i, node in enumerate(nodes):
        if k[i] == 0:
            continue
        p = network.profiles.get(node)
        out.append(NodeProfile(node, int(k[i]), float(cc[i]),
                               None if p is None else p.total_assets))
    return out
