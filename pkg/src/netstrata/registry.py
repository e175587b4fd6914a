"""Legal entities, control links and their resolution into banking groups."""
from __future__ import annotations

import heapq
import logging
import math
from dataclasses import dataclass
from decimal import Decimal
from types import MappingProxyType

from . import _csv

log = logging.getLogger(__name__)

DEFAULT_CONTROL_THRESHOLD = 0.5


class RegistryError(ValueError):
    pass


@dataclass(frozen=True)
class Entity:
    entity_id: str
    name: str = ""
    country: str = ""
    is_credit_institution: bool = False

    def __post_init__(self):
        if not self.entity_id:
            raise ValueError("entity_id must be non-empty")
        if self.country and (len(self.country) != 2 or not self.country.isalpha()
                             or not self.country.isupper()):
            raise ValueError(f"country must be ISO-3166 alpha-2, got {self.country!r}")


@dataclass(frozen=True)
class ControlLink:
    parent_id: str
    child_id: str
    equity_share: float

    def __post_init__(self):
        if self.parent_id == self.child_id:
            raise ValueError(f"control link from {self.parent_id} to itself")
        if not 0.0 <= self.equity_share <= 1.0:
            raise ValueError(f"equity_share {self.equity_share} outside [0, 1]")


@dataclass(frozen=True)
class GroupMap:
    heads: frozenset
    membership: MappingProxyType

    def __post_init__(self):
        object.__setattr__(self, "membership", MappingProxyType(dict(self.membership)))

    def head_of(self, entity_id):
        return self.membership.get(entity_id)

    def members(self, head_id):
        return sorted(e for e, h in self.membership.items() if h == head_id)

    def __eq__(self, other):
        return (isinstance(other, GroupMap) and self.heads == other.heads
                and dict(self.membership) == dict(other.membership))

    def __hash__(self):
        return hash((self.heads, tuple(sorted(self.membership.items()))))


@dataclass(frozen=True)
class GroupProfile:
    head_id: str
    tier1_capital: float | None = None
    total_assets: float | None = None


@dataclass(frozen=True)
class BalanceRecord:
    entity_id: str
    tier1_capital: Decimal | None
    total_assets: Decimal | None


def _strongest_paths(head, control, heads):
    """Max-product equity path from ``head`` to every entity it controls.

    Other heads are reached but not expanded: a head always keeps its own group.
    Returns ``(strength by non-head entity, heads reached)``.
    """
    best = {head: 1.0}
    reached_heads = set()
    queue = [(-1.0, head)]
    while queue:
        neg, node = heapq.heappop(queue)
        strength = -neg
        if strength < best.get(node, 0.0):
            continue
        if node != head and node in heads:
            reached_heads.add(node)
            continue
        for child, share in control.get(node, ()):
            s = strength * share
            if s > best.get(child, 0.0):
                best[child] = s
                heapq.heappush(queue, (-s, child))
    best.pop(head)
    return {e: s for e, s in best.items() if e not in heads}, reached_heads


def _find_cycle(graph):
    state = {}
    stack = []

    def visit(node):
        state[node] = 1
        stack.append(node)
        for nxt in sorted(graph.get(node, ())):
            if state.get(nxt) == 1:
                return stack[stack.index(nxt):] + [nxt]
            if nxt not in state:
                cycle = visit(nxt)
                if cycle:
                    return cycle
        stack.pop()
        state[node] = 2
        return None

    for node in sorted(graph):
        if node not in state:
            cycle = visit(node)
            if cycle:
                return cycle
    return None


def resolve_groups(entities, links, heads, control_threshold=DEFAULT_CONTROL_THRESHOLD,
                   overrides=()):
    """Assign every entity controlled (directly or via a chain) by a head to that head.

    A link conveys control when ``equity_share > control_threshold``.  An
    entity reachable from several heads goes to the head with the largest
    product of shares along its strongest path; equal strengths go to the
    lexicographically smallest head.  ``overrides`` is a list of
    ``(entity_id, head_id)`` pairs applied afterwards.
    """
    if not 0.0 < control_threshold <= 1.0:
        raise RegistryError(f"control_threshold must lie in (0, 1], got {control_threshold}")
    ids = set()
    for ent in entities:
        if ent.entity_id in ids:
            raise RegistryError(f"duplicate entity_id {ent.entity_id}")
        ids.add(ent.entity_id)
    heads = frozenset(heads)
    unknown = sorted(heads - ids)
    if unknown:
        raise RegistryError(f"group head(s) not in registry: {', '.join(unknown)}")

    control = {}
    for link in links:
        for eid in (link.parent_id, link.child_id):
            if eid not in ids:
                raise RegistryError(f"unknown entity_id {eid} in control link "
                                    f"{link.parent_id}->{link.child_id}")
        if link.equity_share > control_threshold:
            control.setdefault(link.parent_id, []).append((link.child_id, link.equity_share))
    for children in control.values():
        children.sort()

    claims = {}
    head_graph = {}
    for head in sorted(heads):
        strengths, reached = _strongest_paths(head, control, heads)
        head_graph[head] = reached
        for ent, s in strengths.items():
            current = claims.get(ent)
            if current is None or s > current[0] or (s == current[0] and head < current[1]):
                claims[ent] = (s, head)
    cycle = _find_cycle(head_graph)
    if cycle:
        raise RegistryError("control cycle among group heads: " + " -> ".join(cycle))

    membership = {h: h for h in heads}
    membership.update({ent: head for ent, (_, head) in claims.items()})
    for ent, head in overrides:
        if ent not in ids:
            raise RegistryError(f"override references unknown entity_id {ent}")
        if head not in heads:
            raise RegistryError(f"override target {head} is not a group head")
        if ent in heads and ent != head:
            raise RegistryError(f"override would move group head {ent}")
        membership[ent] = head
    return GroupMap(heads, membership)


def enrich_groups(groups, balance_records):
    """Attach consolidated Tier 1 capital and total assets to each group head.

    Returns ``(profiles, ignored)`` where ``ignored`` counts records keyed by
    entities that are not group heads.
    """
    found = {}
    ignored = 0
    for i, rec in enumerate(balance_records):
        if not isinstance(rec, BalanceRecord):
            rec = BalanceRecord(*rec)
        for name in ("tier1_capital", "total_assets"):
            value = getattr(rec, name)
            if value is not None and (not math.isfinite(float(value)) or value < 0):
                raise RegistryError(f"balance record {i}: {name} must be finite and >= 0")
        if rec.entity_id not in groups.heads:
            ignored += 1
            continue
        if rec.entity_id in found:
            raise RegistryError(f"balance record {i}: duplicate record for {rec.entity_id}")
        found[rec.entity_id] = rec
    if ignored:
        log.warning("ignored %d balance record(s) for non-head entities", ignored)
    profiles = {}
    for head in sorted(groups.heads):
        rec = found.get(head)
        profiles[head] = GroupProfile(
            head,
            None if rec is None or rec.tier1_capital is None else float(rec.tier1_capital),
            None if rec is None or rec.total_assets is None else float(rec.total_assets),
        )
    return profiles, ignored


# --- CSV interchange ------------------------------------------------------

ENTITY_COLUMNS = ("entity_id", "name", "country", "is_credit_institution")
LINK_COLUMNS = ("parent_id", "child_id", "equity_share")
HEAD_COLUMNS = ("entity_id",)
BALANCE_COLUMNS = ("entity_id", "tier1_capital", "total_assets")
OVERRIDE_COLUMNS = ("entity_id", "head_id")


def _load(source, columns, name, parse):
    out = []
    for row_no, row in _csv.read_rows(source, columns, name):
        try:
            out.append(parse(row))
        except (_csv.RowError, ValueError) as exc:
            raise RegistryError(f"{name} row {row_no}: {exc}") from None
    return out


def load_entities(source):
    return _load(source, ENTITY_COLUMNS, "entities.csv", lambda r: Entity(
        _csv.required(r, "entity_id"), (r.get("name") or "").strip(),
        (r.get("country") or "").strip(),
        _csv.parse_bool(r.get("is_credit_institution"), "is_credit_institution")))


def load_control_links(source):
    return _load(source, LINK_COLUMNS, "control_links.csv", lambda r: ControlLink(
        _csv.required(r, "parent_id"), _csv.required(r, "child_id"),
        _csv.parse_fraction(r.get("equity_share"), "equity_share")))


def load_group_heads(source):
    return set(_load(source, HEAD_COLUMNS, "group_heads.csv",
                     lambda r: _csv.required(r, "entity_id")))


def load_balance_sheet(source):
    return _load(source, BALANCE_COLUMNS, "balance_sheet.csv", lambda r: BalanceRecord(
        _csv.required(r, "entity_id"),
        _csv.parse_amount(r.get("tier1_capital"), "tier1_capital", positive=False, optional=True),
        _csv.parse_amount(r.get("total_assets"), "total_assets", positive=False, optional=True)))


def load_overrides(source):
    return _load(source, OVERRIDE_COLUMNS, "group_overrides.csv",
                 lambda r: (_csv.required(r, "entity_id"), _csv.required(r, "head_id")))


def write_entities(stream, entities):
    _csv.write_rows(stream, ENTITY_COLUMNS, ((e.entity_id, e.name, e.country,
                                              e.is_credit_institution) for e in entities))


def write_control_links(stream, links):
    _csv.write_rows(stream, LINK_COLUMNS, ((l.parent_id, l.child_id, repr(l.equity_share))
                                           for l in links))


def write_group_heads(stream, heads):
    _csv.write_rows(stream, HEAD_COLUMNS, ((h,) for h in sorted(heads)))


def write_balance_sheet(stream, records):
    _csv.write_rows(stream, BALANCE_COLUMNS, ((r.entity_id, r.tier1_capital, r.total_assets)
                                              for r in records))
