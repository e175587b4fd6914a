"""Multi-layer network construction from granular records."""
from __future__ import annotations

import enum
import json
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from decimal import Decimal
from itertools import combinations

from .ingest import SftKind, add_months, snapshot_filter
from .registry import GroupProfile


class LayerName(str, enum.Enum):
    ST_CRED = "st_cred"
    LT_CRED = "lt_cred"
    CROSS_SEC = "cross_sec"
    ST_FUND = "st_fund"
    OVRL_PORTFL = "ovrl_portfl"
    FLAT = "flat"


MARKET_LAYERS = (LayerName.ST_CRED, LayerName.LT_CRED, LayerName.CROSS_SEC,
                 LayerName.ST_FUND, LayerName.OVRL_PORTFL)
DEFAULT_SFT_KINDS = frozenset({SftKind.REPO, SftKind.BUY_SELLBACK})


class Level(str, enum.Enum):
    GROUP = "group"
    ENTITY = "entity"


class NetworkError(ValueError):
    pass


@dataclass(frozen=True)
class MaturityCutoff:
    months: int = 3

    def __post_init__(self):
        if int(self.months) != self.months or self.months < 1:
            raise ValueError("maturity cut-off must be a positive whole number of months")


@dataclass(frozen=True)
class Layer:
    name: str
    directed: bool
    edges: dict
    excluded: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        for (i, j), w in self.edges.items():
            if i == j:
                raise NetworkError(f"self-loop on {i} in layer {self.name}")
            if not (w > 0 and math.isfinite(w)):
                raise NetworkError(f"non-positive or non-finite weight on ({i}, {j})")
            if not self.directed and not i < j:
                raise NetworkError(f"undirected edge ({i}, {j}) not in canonical order")

    @property
    def n_edges(self):
        return len(self.edges)

    def total_weight(self):
        return math.fsum(self.edges.values())

    def reversed(self):
        if not self.directed:
            return self
        return Layer(self.name, True, {(j, i): w for (i, j), w in self.edges.items()})


@dataclass(frozen=True)
class MultiLayerNetwork:
    nodes: tuple
    level: Level
    layers: dict
    profiles: dict = field(default_factory=dict)

    def __post_init__(self):
        node_set = set(self.nodes)
        for layer in self.layers.values():
            for i, j in layer.edges:
                if i not in node_set or j not in node_set:
                    raise NetworkError(f"edge ({i}, {j}) in {layer.name} references unknown node")

    def layer(self, name):
        key = LayerName(name) if not isinstance(name, LayerName) else name
        try:
            return self.layers[key]
        except KeyError:
            raise NetworkError(f"network has no layer {key.value}") from None


@dataclass(frozen=True)
class BuildConfig:
    level: Level = Level.GROUP
    cutoff: MaturityCutoff = MaturityCutoff()
    as_of: object = None  # snapshot date for SFTs; defaults to the latest reference_date
    sft_kinds: frozenset = DEFAULT_SFT_KINDS
    unspecified_maturity_is_long_term: bool = False
    reject_unresolved: bool = False


class _Resolver:
    """Maps entity ids to node ids at the requested level and counts misses."""

    def __init__(self, groups, level, reject):
        self.groups = groups
        self.level = Level(level)
        self.reject = reject

    def node(self, entity_id, counts, what="counterparty"):
        head = self.groups.head_of(entity_id)
        if head is None:
            if self.reject:
                raise NetworkError(f"unresolvable {what} id {entity_id}")
            counts["unresolved"] += 1
            return None
        return head if self.level is Level.GROUP else entity_id

    def nodes(self):
        if self.level is Level.GROUP:
            return tuple(sorted(self.groups.heads))
        return tuple(sorted(self.groups.membership))


def strip_intra_group(edges, groups):
    """Drop every edge whose endpoints belong to the same group head.

    Returns ``(kept_edges, removed_count)``.
    """
    kept = {}
    removed = 0
    for (i, j), w in edges.items():
        hi, hj = groups.head_of(i), groups.head_of(j)
        if i == j or (hi is not None and hi == hj):
            removed += 1
        else:
            kept[(i, j)] = w
    return kept, removed


def _finish(name, directed, sums, groups, counts):
    kept, removed = strip_intra_group(sums, groups)
    counts["intra_group"] += removed
    return Layer(name, directed, {k: float(v) for k, v in sorted(kept.items())}, dict(counts))


def build_credit_layers(loans, groups, cutoff=MaturityCutoff(), level=Level.GROUP,
                        unspecified_maturity_is_long_term=False, reject_unresolved=False):
    """Split loans by initial maturity into the short- and long-term credit layers."""
    res = _Resolver(groups, level, reject_unresolved)
    short, long_ = defaultdict(Decimal), defaultdict(Decimal)
    counts_st, counts_lt = Counter(), Counter()
    shared = Counter()
    for loan in loans:
        if loan.maturity_date is None:
            if not unspecified_maturity_is_long_term:
                shared["unspecified_maturity"] += 1
                continue
            target, counts = long_, counts_lt
        elif loan.maturity_date <= loan.origination_date:
            shared["non_positive_maturity"] += 1
            continue
        elif loan.maturity_date >= add_months(loan.origination_date, cutoff.months):
            target, counts = long_, counts_lt
        else:
            target, counts = short, counts_st
        i = res.node(loan.creditor_id, counts)
        j = res.node(loan.debtor_id, counts)
        if i is None or j is None:
            continue
        target[(i, j)] += loan.outstanding_nominal
    counts_st.update(shared)
    counts_lt.update(shared)
    return (_finish(LayerName.ST_CRED.value, True, short, groups, counts_st),
            _finish(LayerName.LT_CRED.value, True, long_, groups, counts_lt))


def _issuers(refs):
    issuers = {}
    for ref in refs:
        if ref.isin in issuers:
            raise NetworkError(f"duplicate isin {ref.isin} in security reference data")
        issuers[ref.isin] = ref.issuer_id
    return issuers


def build_cross_securities_layer(holdings, refs, groups, level=Level.GROUP,
                                 reject_unresolved=False):
    """Holder -> issuer edges for securities issued inside the node set."""
    res = _Resolver(groups, level, reject_unresolved)
    issuers = _issuers(refs)
    sums = defaultdict(Decimal)
    counts = Counter()
    for h in holdings:
        issuer = issuers.get(h.isin)
        if issuer is None:
            if reject_unresolved:
                raise NetworkError(f"isin {h.isin} missing from security reference data")
            counts["unknown_isin"] += 1
            continue
        i = res.node(h.holder_id, counts, "holder")
        if i is None:
            continue
        if groups.head_of(issuer) is None:
            counts["external_issuer"] += 1
            continue
        j = issuer if res.level is Level.ENTITY else groups.head_of(issuer)
        sums[(i, j)] += h.market_value
    return _finish(LayerName.CROSS_SEC.value, True, sums, groups, counts)


def build_short_term_funding_layer(sfts, groups, as_of, kinds=DEFAULT_SFT_KINDS,
                                   level=Level.GROUP, reject_unresolved=False):
    """Collateral taker -> collateral giver edges over transactions active at ``as_of``."""
    kinds = frozenset(SftKind(k) for k in kinds)
    res = _Resolver(groups, level, reject_unresolved)
    active = snapshot_filter(sfts, as_of)
    counts = Counter(inactive=len(sfts) - len(active))
    sums = defaultdict(Decimal)
    for r in active:
        if r.kind not in kinds:
            counts["kind_filtered"] += 1
            continue
        i = res.node(r.collateral_taker_id, counts)
        j = res.node(r.collateral_giver_id, counts)
        if i is None or j is None:
            continue
        sums[(i, j)] += r.open_amount
    return _finish(LayerName.ST_FUND.value, True, sums, groups, counts)


def build_overlapping_portfolio_layer(holdings, refs, groups, level=Level.GROUP,
                                      reject_unresolved=False):
    """Undirected common exposure to issuers outside the node set.

    weight(i, j) = sum over external issuers u of min(V_i(u), V_j(u)), with
    V_i(u) the market value node i holds in securities issued by u.
    """
    res = _Resolver(groups, level, reject_unresolved)
    issuers = _issuers(refs)
    positions = defaultdict(lambda: defaultdict(Decimal))  # issuer -> node -> value
    counts = Counter()
    for h in holdings:
        issuer = issuers.get(h.isin)
        if issuer is None:
            if reject_unresolved:
                raise NetworkError(f"isin {h.isin} missing from security reference data")
            counts["unknown_isin"] += 1
            continue
        if groups.head_of(issuer) is not None:
            continue
        i = res.node(h.holder_id, counts, "holder")
        if i is None:
            continue
        positions[issuer][i] += h.market_value
    sums = defaultdict(Decimal)
    for issuer in sorted(positions):
        held = sorted(positions[issuer].items())
        for (i, vi), (j, vj) in combinations(held, 2):
            sums[(i, j)] += min(vi, vj)
    return _finish(LayerName.OVRL_PORTFL.value, False, sums, groups, counts)


def symmetrize(layer):
    """Directed copy of an undirected layer with both orientations of every edge."""
    if layer.directed:
        raise NetworkError(f"layer {layer.name} is already directed")
    edges = {}
    for (i, j), w in layer.edges.items():
        edges[(i, j)] = w
        edges[(j, i)] = w
    return Layer(layer.name, True, dict(sorted(edges.items())), dict(layer.excluded))


def flatten(network):
    """Edge-wise sum of every non-flat layer; undirected layers enter symmetrized."""
    parts = defaultdict(list)
    sources = [l for n, l in network.layers.items() if LayerName(n) is not LayerName.FLAT]
    if not sources:
        raise NetworkError("flatten needs at least one non-flat layer")
    for layer in sources:
        directed = layer if layer.directed else symmetrize(layer)
        for key, w in directed.edges.items():
            parts[key].append(w)
    return Layer(LayerName.FLAT.value, True,
                 {k: math.fsum(v) for k, v in sorted(parts.items())})


def build_network(records, groups, profiles=None, config=BuildConfig()):
    """Build all market layers plus the flattened layer.

    ``records`` maps dataset names (``loans``, ``holdings``, ``securities``,
    ``sft``) to record lists.
    """
    level = Level(config.level)
    kw = dict(level=level, reject_unresolved=config.reject_unresolved)
    loans = records.get("loans", [])
    holdings = records.get("holdings", [])
    refs = records.get("securities", [])
    sfts = records.get("sft", [])
    as_of = config.as_of
    if as_of is None:
        dates = [r.reference_date for r in sfts] or [r.reference_date for r in loans]
        if not dates and sfts:
            raise NetworkError("cannot infer snapshot date")
        as_of = max(dates) if dates else None
    st, lt = build_credit_layers(loans, groups, config.cutoff,
                                 unspecified_maturity_is_long_term=config.unspecified_maturity_is_long_term,
                                 **kw)
    layers = {
        LayerName.ST_CRED: st,
        LayerName.LT_CRED: lt,
        LayerName.CROSS_SEC: build_cross_securities_layer(holdings, refs, groups, **kw),
        LayerName.ST_FUND: (build_short_term_funding_layer(sfts, groups, as_of, config.sft_kinds, **kw)
                            if as_of is not None else Layer(LayerName.ST_FUND.value, True, {})),
        LayerName.OVRL_PORTFL: build_overlapping_portfolio_layer(holdings, refs, groups, **kw),
    }
    nodes = _Resolver(groups, level, False).nodes()
    profiles = dict(profiles or {})
    if level is Level.GROUP:
        node_profiles = {h: profiles.get(h, GroupProfile(h)) for h in nodes}
    else:
        node_profiles = {e: profiles[e] for e in nodes if e in profiles}
    net = MultiLayerNetwork(nodes, level, layers, node_profiles)
    layers[LayerName.FLAT] = flatten(net)
    return MultiLayerNetwork(nodes, level, layers, node_profiles)


# --- JSON interchange -----------------------------------------------------

def network_to_dict(network):
    nodes = []
    for n in sorted(network.nodes):
        p = network.profiles.get(n)
        nodes.append({"id": n,
                      "tier1": None if p is None else p.tier1_capital,
                      "total_assets": None if p is None else p.total_assets})
    layers = []
    for name in LayerName:
        if name not in network.layers:
            continue
        layer = network.layers[name]
        layers.append({
            "name": name.value,
            "directed": layer.directed,
            "edges": [{"src": i, "dst": j, "weight": w} for (i, j), w in sorted(layer.edges.items())],
        })
    return {"nodes": nodes, "level": Level(network.level).value, "layers": layers}


def network_from_dict(data):
    try:
        nodes = tuple(sorted(n["id"] for n in data["nodes"]))
        profiles = {n["id"]: GroupProfile(n["id"], n.get("tier1"), n.get("total_assets"))
                    for n in data["nodes"]
                    if n.get("tier1") is not None or n.get("total_assets") is not None}
        layers = {}
        for spec in data["layers"]:
            edges = {(e["src"], e["dst"]): float(e["weight"]) for e in spec["edges"]}
            layers[LayerName(spec["name"])] = Layer(spec["name"], bool(spec["directed"]), edges)
        return MultiLayerNetwork(nodes, Level(data["level"]), layers, profiles)
    except (KeyError, TypeError) as exc:
        raise NetworkError(f"malformed network JSON: {exc}") from None


def write_network_json(network, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(network_to_dict(network), fh, indent=1, sort_keys=True)
        fh.write("\n")


def read_network_json(path):
    with open(path, encoding="utf-8") as fh:
        return network_from_dict(json.load(fh))
