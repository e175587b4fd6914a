"""Brute-force reference implementations used as test oracles.

Everything here works on plain dicts and lists, independently of the
package's sparse-matrix code paths.
"""
import itertools
import math
from collections import deque

import numpy as np


def neighbours_undirected(nodes, edges):
    nb = {n: set() for n in nodes}
    for i, j in edges:
        nb[i].add(j)
        nb[j].add(i)
    return nb


def successors(nodes, edges, directed):
    succ = {n: set() for n in nodes}
    for i, j in edges:
        succ[i].add(j)
        if not directed:
            succ[j].add(i)
    return succ


def bfs(succ, src):
    dist = {src: 0}
    queue = deque([src])
    while queue:
        v = queue.popleft()
        for w in sorted(succ[v]):
            if w not in dist:
                dist[w] = dist[v] + 1
                queue.append(w)
    return dist


def components(nodes, edges):
    nb = neighbours_undirected(nodes, edges)
    seen, comps = set(), []
    for n in nodes:
        if n in seen:
            continue
        comp = set(bfs(nb, n))
        seen |= comp
        comps.append(comp)
    return comps


def graph_stats(nodes, edges, directed):
    """Every Table-1 statistic by enumeration; ``edges`` maps pair -> weight."""
    nodes = list(nodes)
    n = len(nodes)
    e = len(edges)
    comps = components(nodes, edges)
    comps.sort(key=lambda c: (-len(c), -sum(1 for i, _ in edges if i in c), min(c)))
    largest = comps[0]
    nb = neighbours_undirected(nodes, edges)
    # diameter: undirected projection of the largest component
    diam = 0
    for s in largest:
        d = bfs({v: nb[v] & largest for v in largest}, s)
        diam = max(diam, max(d.values()))
    # undirected projection clustering / directed-motif clustering
    if directed:
        adj = {(i, j) for i, j in edges}
        a = lambda i, j: 1 if (i, j) in adj else 0
        cc = []
        for i in nodes:
            t = 0
            for j, k in itertools.permutations([x for x in nodes if x != i], 2):
                t += (a(i, j) + a(j, i)) * (a(i, k) + a(k, i)) * (a(j, k) + a(k, j))
            k_tot = sum(a(i, j) + a(j, i) for j in nodes)
            k_bi = sum(a(i, j) * a(j, i) for j in nodes)
            denom = 2 * (k_tot * (k_tot - 1) - 2 * k_bi)
            cc.append(t / denom if denom > 0 else 0.0)
    else:
        cc = local_clustering_undirected(nodes, edges)
    recip = None
    if directed:
        recip = (sum(1 for i, j in edges if (j, i) in edges) / e) if e else 0.0
    dens = e / (n * (n - 1)) if directed else 2 * e / (n * (n - 1))
    succ = successors(nodes, edges, directed)
    eff = 0.0
    for s in nodes:
        d = bfs(succ, s)
        eff += sum(1.0 / d[t] for t in nodes if t != s and t in d)
    eff /= n * (n - 1)
    strength = {v: 0.0 for v in nodes}
    for (i, j), w in edges.items():
        strength[i] += w
        strength[j] += w
    total = sum(strength.values())
    herf = sum((s / total) ** 2 for s in strength.values()) if e else None
    return {
        "n_nodes": n,
        "n_edges": e,
        "n_components": len(comps),
        "largest_comp_node_share": len(largest) / n,
        "largest_comp_edge_share": (sum(1 for i, _ in edges if i in largest) / e) if e else 0.0,
        "diameter_largest_comp": diam,
        "avg_clustering": sum(cc) / n,
        "reciprocity": recip,
        "density": dens,
        "global_efficiency": eff,
        "herfindahl": herf,
    }


def local_clustering_undirected(nodes, edges):
    nb = neighbours_undirected(nodes, edges)
    out = []
    for v in nodes:
        k = len(nb[v])
        if k < 2:
            out.append(0.0)
            continue
        tri = sum(1 for a, b in itertools.combinations(sorted(nb[v]), 2) if b in nb[a])
        out.append(tri / (k * (k - 1) / 2))
    return out


def pagerank_linear(nodes, edges, damping):
    """Stationary distribution by solving (I - d P^T) r = (1-d)/n + dangling terms exactly."""
    n = len(nodes)
    idx = {v: i for i, v in enumerate(nodes)}
    w = np.zeros((n, n))
    for (i, j), x in edges.items():
        w[idx[i], idx[j]] += x
    out = w.sum(1)
    p = np.zeros((n, n))
    for i in range(n):
        p[i] = w[i] / out[i] if out[i] > 0 else 1.0 / n
    # r = d P^T r + (1-d)/n * 1, with sum(r) = 1
    m = np.eye(n) - damping * p.T
    r = np.linalg.solve(m, np.full(n, (1.0 - damping) / n))
    return dict(zip(nodes, r / r.sum()))


def hits_eigen(nodes, edges):
    """Principal eigenvectors of W W^T (hubs) and W^T W (authorities), unit norm, non-negative."""
    n = len(nodes)
    idx = {v: i for i, v in enumerate(nodes)}
    w = np.zeros((n, n))
    for (i, j), x in edges.items():
        w[idx[i], idx[j]] += x

    def principal(m):
        vals, vecs = np.linalg.eigh(m)
        v = vecs[:, np.argmax(vals)]
        v = np.abs(v)
        return v / np.linalg.norm(v), np.sort(vals)

    hub, hv = principal(w @ w.T)
    auth, _ = principal(w.T @ w)
    return dict(zip(nodes, hub)), dict(zip(nodes, auth)), hv


def kendall_pairs(a, b):
    """Tau-b by explicit enumeration of all unordered pairs."""
    keys = sorted(a)
    conc = disc = tie_a = tie_b = 0
    for x, y in itertools.combinations(keys, 2):
        da = (a[x] > a[y]) - (a[x] < a[y])
        db = (b[x] > b[y]) - (b[x] < b[y])
        if da == 0:
            tie_a += 1
        if db == 0:
            tie_b += 1
        if da * db > 0:
            conc += 1
        elif da * db < 0:
            disc += 1
    n0 = len(keys) * (len(keys) - 1) // 2
    return (conc - disc) / math.sqrt((n0 - tie_a) * (n0 - tie_b))


def betweenness_paths(nodes, edges, directed):
    """Betweenness by enumerating every shortest path between every ordered pair."""
    succ = successors(nodes, edges, directed)
    score = {v: 0.0 for v in nodes}
    for s, t in itertools.permutations(nodes, 2):
        paths = all_shortest_paths(succ, s, t)
        if not paths:
            continue
        for v in nodes:
            if v in (s, t):
                continue
            score[v] += sum(1 for p in paths if v in p) / len(paths)
    n = len(nodes)
    norm = (n - 1) * (n - 2)
    return {v: c / norm for v, c in score.items()}


def all_shortest_paths(succ, s, t):
    dist = bfs(succ, s)
    if t not in dist:
        return []
    paths = [[s]]
    for _ in range(dist[t]):
        paths = [p + [w] for p in paths for w in succ[p[-1]] if dist.get(w) == dist[p[-1]] + 1]
    return [p for p in paths if p[-1] == t]


def min_overlap(portfolios):
    """Sum over issuers of min holdings for every pair of holders."""
    out = {}
    for a, b in itertools.combinations(sorted(portfolios), 2):
        w = sum(min(portfolios[a].get(u, 0), portfolios[b].get(u, 0))
                for u in set(portfolios[a]) | set(portfolios[b]))
        if w > 0:
            out[(a, b)] = w
    return out
