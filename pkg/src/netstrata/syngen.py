"""Synthetic registry and granular datasets with a known group structure.

Every group-level edge is realised by entity-level records.  In the directed
layers each active entity draws its total incoming exposure from the layer's
weight distribution and splits it into cent amounts across incoming records,
so entity-level weighted in-degrees follow the configured law exactly.  The
overlap layer gets one dedicated external issuer per group pair.
"""
from __future__ import annotations

import datetime as dt
import json
import math
import os
from dataclasses import asdict, dataclass, field
from decimal import Decimal

import numpy as np

from . import ingest, registry
from .heavytail.distributions import CandidateKind, family
from .heavytail.fitting import FitResult
from .heavytail.sampling import sample_from
from .ingest import (DatasetKind, HoldingRecord, InstrumentType, LoanRecord, SecurityKind,
                     SecurityRef, SftKind, SftRecord, add_months)
from .netbuild import LayerName

REFERENCE_DATE = dt.date(2021, 6, 30)
LOAN_TYPES = (InstrumentType.DEPOSIT, InstrumentType.CREDIT_LINE, InstrumentType.REVOLVING_CREDIT,
              InstrumentType.REVERSE_REPO, InstrumentType.CONVENIENCE_CREDIT, InstrumentType.OTHER)
COUNTRIES = ("AT", "BE", "DE", "ES", "FI", "FR", "GR", "IE", "IT", "LU", "NL", "PT")
CENT = Decimal("0.01")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class LayerSpec:
    density: float
    kind: CandidateKind = CandidateKind.TRUNCATED_POWER_LAW
    params: dict = field(default_factory=lambda: {"alpha": 2.0, "lambda": 0.0625})
    x_min: float = 1.0  # model units
    attachment: str = "uniform"  # or "preferential"
    active_share: float = 1.0  # share of a group's entities receiving exposures
    extra_records: float = 0.5  # mean number of records beyond the first per entity


def default_layers():
    return {
        LayerName.ST_CRED.value: LayerSpec(0.04),
        LayerName.LT_CRED.value: LayerSpec(0.07),
        LayerName.CROSS_SEC.value: LayerSpec(0.19),
        LayerName.ST_FUND.value: LayerSpec(0.07),
        LayerName.OVRL_PORTFL.value: LayerSpec(0.56),
    }


@dataclass(frozen=True)
class Decoys:
    intra_group_loans: int = 200
    undated_loans: int = 50
    zero_maturity_loans: int = 20
    inactive_sfts: int = 100
    other_kind_sfts: int = 100
    intra_group_overlaps: int = 50
    unknown_isin_holdings: int = 20
    minority_links: int = 200


@dataclass(frozen=True)
class SynConfig:
    n_groups: int = 114
    entities_per_group: tuple = (100, 250)  # inclusive uniform range, head included
    layers: dict = field(default_factory=default_layers)
    seed: int = 0
    scale: float = 1e7  # EUR per model unit
    reference_date: dt.date = REFERENCE_DATE
    decoys: Decoys = Decoys()

    def validate(self):
        if self.n_groups < 2:
            raise ConfigError("need at least two groups")
        lo, hi = self.entities_per_group
        if not 1 <= lo <= hi:
            raise ConfigError("entities_per_group must be a range with 1 <= low <= high")
        if set(self.layers) - {n.value for n in LayerName if n is not LayerName.FLAT}:
            raise ConfigError(f"unknown layer in config: {sorted(self.layers)}")
        for name, spec in self.layers.items():
            if not 0.0 < spec.density <= 1.0:
                raise ConfigError(f"{name}: density must lie in (0, 1]")
            if spec.attachment not in ("uniform", "preferential"):
                raise ConfigError(f"{name}: attachment must be uniform or preferential")
            if not 0.0 < spec.active_share <= 1.0:
                raise ConfigError(f"{name}: active_share must lie in (0, 1]")
            if spec.kind is CandidateKind.POWER_LAW and spec.params.get("alpha", 0) <= 1:
                raise ConfigError(f"{name}: power-law alpha must exceed 1")
            if not (spec.x_min > 0 and family(spec.kind).valid(spec.params)):
                raise ConfigError(f"{name}: invalid {spec.kind.value} parameters {spec.params}")
            if target_edges(self.n_groups, spec.density, _directed(name)) < 1:
                raise ConfigError(f"{name}: density {spec.density} gives no edge among "
                                  f"{self.n_groups} groups")
        if not self.scale > 0:
            raise ConfigError("scale must be positive")


def _directed(layer_name):
    return layer_name != LayerName.OVRL_PORTFL.value


def target_edges(n_groups, density, directed):
    pairs = n_groups * (n_groups - 1)
    return int(round(density * (pairs if directed else pairs / 2)))


def _pairs(n, directed):
    i, j = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    mask = i != j if directed else i < j
    return i[mask], j[mask]


def sample_group_edges(rng, n, density, directed, attachment="uniform"):
    """Exactly ``target_edges`` distinct group pairs.

    Preferential attachment weights a pair by the product of two Pareto
    fitness draws (Gumbel top-k, so still without replacement).
    """
    src, dst = _pairs(n, directed)
    k = target_edges(n, density, directed)
    if attachment == "uniform":
        pick = rng.choice(src.size, size=k, replace=False)
    else:
        fit_out = rng.pareto(1.5, n) + 1.0
        fit_in = rng.pareto(1.5, n) + 1.0
        keys = np.log(fit_out[src]) + np.log(fit_in[dst]) + rng.gumbel(size=src.size)
        pick = np.argpartition(-keys, k - 1)[:k] if k < src.size else np.arange(src.size)
    pick = np.sort(pick)
    return list(zip(src[pick].tolist(), dst[pick].tolist()))


def _cents(rng, total, parts):
    """Split ``total`` cents into ``parts`` positive integers."""
    if parts == 1:
        return [total]
    share = rng.dirichlet(np.ones(parts))
    spare = total - parts
    out = (np.floor(share * spare)).astype(np.int64) + 1
    out[0] += total - int(out.sum())
    return out.tolist()


def _money(cents):
    return (Decimal(int(cents)) * CENT).quantize(CENT)


@dataclass
class _Registry:
    heads: list
    members: list  # per group, head first
    entities: list
    links: list
    balance: list


def _make_registry(cfg, rng):
    lo, hi = cfg.entities_per_group
    heads, members, entities, links = [], [], [], []
    for g in range(cfg.n_groups):
        head = f"B{g + 1:03d}"
        size = int(rng.integers(lo, hi + 1))
        ids = [head] + [f"{head}-{k:04d}" for k in range(1, size)]
        heads.append(head)
        members.append(ids)
        country = COUNTRIES[int(rng.integers(len(COUNTRIES)))]
        for k, eid in enumerate(ids):
            entities.append(registry.Entity(eid, f"Synthetic bank {eid}", country,
                                            k == 0 or bool(rng.random() < 0.3)))
        for k in range(1, size):
            parent = ids[int(rng.integers(k))]
            share = round(float(rng.uniform(0.51, 1.0)), 4)
            links.append(registry.ControlLink(parent, ids[k], share))
    for n in range(cfg.decoys.minority_links):
        g, h = rng.choice(cfg.n_groups, 2, replace=False)
        a = members[g][int(rng.integers(len(members[g])))]
        b = members[h][int(rng.integers(len(members[h])))]
        share = 0.5 if n % 10 == 0 else round(float(rng.uniform(0.01, 0.49)), 4)
        links.append(registry.ControlLink(a, b, share))
    balance = []
    for head in heads:
        assets = Decimal(str(round(float(rng.lognormal(math.log(5e10), 1.2)), 2))).quantize(CENT)
        tier1 = (assets * Decimal(str(round(float(rng.uniform(0.04, 0.12)), 4)))).quantize(CENT)
        balance.append(registry.BalanceRecord(head, tier1, assets))
    return _Registry(heads, members, entities, links, balance)


def _incoming_pairs(rng, creditors, n_active):
    """(active entity index, creditor group) pairs covering every creditor group."""
    pairs = [(k % n_active, g) for k, g in enumerate(creditors)]
    covered = {k for k, _ in pairs}
    for k in range(n_active):
        if k not in covered:
            pairs.append((k, creditors[int(rng.integers(len(creditors)))]))
    return pairs


class _Emitter:
    """Turns per-entity inbound amounts into records of one directed layer."""

    def __init__(self, cfg, reg, rng):
        self.cfg = cfg
        self.reg = reg
        self.rng = rng
        self.ref = cfg.reference_date
        self.isin_counter = 0
        self.securities = []
        self.issued = {}  # issuer entity -> list of isins

    def new_isin(self, prefix, issuer, kind):
        self.isin_counter += 1
        n = self.isin_counter
        isin = f"{prefix}{n:09d}{n % 10}"
        self.securities.append(SecurityRef(isin, issuer, kind))
        return isin

    def bank_isin(self, issuer):
        if issuer not in self.issued:
            count = 1 + int(self.rng.integers(3))
            kinds = (SecurityKind.DEBT, SecurityKind.EQUITY)
            self.issued[issuer] = [self.new_isin("EU", issuer, kinds[int(self.rng.integers(2))])
                                   for _ in range(count)]
        isins = self.issued[issuer]
        return isins[int(self.rng.integers(len(isins)))]

    def loan(self, creditor, debtor, amount, short):
        rng = self.rng
        months = int(rng.integers(1, 3)) if short else int(rng.choice([3, 3, 6, 12, 24, 36, 60, 120]))
        back = int(rng.integers(months))
        origination = add_months(self.ref, -back) - dt.timedelta(days=int(rng.integers(28)))
        maturity = add_months(origination, months)
        kind = LOAN_TYPES[int(rng.integers(len(LOAN_TYPES)))]
        return LoanRecord(creditor, debtor, kind, amount, origination, maturity, self.ref)

    def sft(self, taker, giver, amount, kind=None, active=True):
        rng = self.rng
        kind = kind or (SftKind.REPO if rng.random() < 0.7 else SftKind.BUY_SELLBACK)
        opened = self.ref - dt.timedelta(days=int(rng.integers(0, 60)))
        if active:
            close = None if rng.random() < 0.3 else self.ref + dt.timedelta(days=int(rng.integers(1, 90)))
        else:
            close = self.ref - dt.timedelta(days=int(rng.integers(0, 10)))
            opened = min(opened, close)
        return SftRecord(taker, giver, kind, amount, opened, close, self.ref)


def _layer_rng(seed, index):
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


def _directed_layer(cfg, reg, emitter, name, spec, rng, out, ledger):
    n = cfg.n_groups
    edges = sample_group_edges(rng, n, spec.density, True, spec.attachment)
    inbound = {}
    for g, h in edges:
        inbound.setdefault(h, []).append(g)
    strength_fit = FitResult(spec.kind, dict(spec.params), spec.x_min, 0, float("nan"))
    total = 0
    n_active_entities = 0
    for h in sorted(inbound):
        creditors = inbound[h]
        ids = reg.members[h]
        n_active = max(1, int(round(spec.active_share * len(ids))))
        order = rng.permutation(len(ids))[:n_active]
        active = [ids[k] for k in sorted(order)]
        draws = sample_from(strength_fit, n_active, rng)
        cents = np.maximum(np.round(draws * cfg.scale * 100).astype(np.int64), 1)
        pairs = _incoming_pairs(rng, creditors, n_active)
        for _ in range(int(rng.poisson(spec.extra_records * n_active))):
            pairs.append((int(rng.integers(n_active)), creditors[int(rng.integers(len(creditors)))]))
        by_entity = {}
        for k, g in pairs:
            by_entity.setdefault(k, []).append(g)
        for k in range(n_active):
            groups_k = by_entity[k]
            debtor = active[k]
            # each record needs at least one cent
            amounts = _cents(rng, max(int(cents[k]), len(groups_k)), len(groups_k))
            for g, c in zip(groups_k, amounts):
                src_ids = reg.members[g]
                creditor = src_ids[int(rng.integers(len(src_ids)))]
                out.append(_record(emitter, name, creditor, debtor, _money(c)))
                total += c
        n_active_entities += n_active
    ledger[name] = {"group_edges": len(edges), "target_edges": target_edges(n, spec.density, True),
                    "active_entities": n_active_entities, "total_cents": total}


def _record(emitter, name, src, dst, amount):
    if name == LayerName.ST_CRED.value:
        return emitter.loan(src, dst, amount, short=True)
    if name == LayerName.LT_CRED.value:
        return emitter.loan(src, dst, amount, short=False)
    if name == LayerName.ST_FUND.value:
        return emitter.sft(src, dst, amount)
    return HoldingRecord(src, emitter.bank_isin(dst), amount, emitter.ref)


def _overlap_layer(cfg, reg, emitter, spec, rng, holdings, ledger):
    n = cfg.n_groups
    edges = sample_group_edges(rng, n, spec.density, False, spec.attachment)
    fit = FitResult(spec.kind, dict(spec.params), spec.x_min, 0, float("nan"))
    draws = sample_from(fit, len(edges), rng)
    total = 0
    for u, ((g, h), x) in enumerate(zip(edges, draws)):
        overlap = max(int(round(x * cfg.scale * 100)), 1)
        extra = int(rng.integers(0, overlap + 1))
        issuer = f"X{u + 1:06d}"
        isin = emitter.new_isin("XS", issuer, SecurityKind.DEBT)
        a = reg.members[g][int(rng.integers(len(reg.members[g])))]
        b = reg.members[h][int(rng.integers(len(reg.members[h])))]
        small, large = (a, b) if rng.random() < 0.5 else (b, a)
        holdings.append(HoldingRecord(small, isin, _money(overlap), emitter.ref))
        holdings.append(HoldingRecord(large, isin, _money(overlap + extra), emitter.ref))
        total += overlap
    ledger[LayerName.OVRL_PORTFL.value] = {
        "group_edges": len(edges), "target_edges": target_edges(n, spec.density, False),
        "total_cents": total}


def _decoys(cfg, reg, emitter, rng, loans, holdings, sfts):
    d = cfg.decoys
    ref = cfg.reference_date

    def same_group_pair():
        g = int(rng.integers(cfg.n_groups))
        ids = reg.members[g]
        if len(ids) < 2:
            return None
        a, b = rng.choice(len(ids), 2, replace=False)
        return ids[a], ids[b]

    def cross_pair():
        g, h = rng.choice(cfg.n_groups, 2, replace=False)
        return (reg.members[g][int(rng.integers(len(reg.members[g])))],
                reg.members[h][int(rng.integers(len(reg.members[h])))])

    def amount():
        return _money(int(rng.integers(100_00, 10_000_000_00)))

    for _ in range(d.intra_group_loans):
        pair = same_group_pair()
        if pair:
            loans.append(emitter.loan(pair[0], pair[1], amount(), short=bool(rng.random() < 0.5)))
    for _ in range(d.undated_loans):
        a, b = cross_pair()
        loans.append(LoanRecord(a, b, InstrumentType.OTHER, amount(),
                                ref - dt.timedelta(days=int(rng.integers(1, 400))), None, ref))
    for _ in range(d.zero_maturity_loans):
        a, b = cross_pair()
        day = ref - dt.timedelta(days=int(rng.integers(0, 30)))
        loans.append(LoanRecord(a, b, InstrumentType.DEPOSIT, amount(), day, day, ref))
    for _ in range(d.inactive_sfts):
        a, b = cross_pair()
        sfts.append(emitter.sft(a, b, amount(), active=False))
    for n in range(d.other_kind_sfts):
        a, b = cross_pair()
        kind = SftKind.SECURITIES_LENDING if n % 2 == 0 else SftKind.MARGIN_LENDING
        sfts.append(emitter.sft(a, b, amount(), kind=kind))
    for n in range(d.intra_group_overlaps):
        pair = same_group_pair()
        if pair:
            isin = emitter.new_isin("XS", f"Y{n + 1:06d}", SecurityKind.EQUITY)
            holdings.append(HoldingRecord(pair[0], isin, amount(), ref))
            holdings.append(HoldingRecord(pair[1], isin, amount(), ref))
    for n in range(d.unknown_isin_holdings):
        holder = reg.members[int(rng.integers(cfg.n_groups))][0]
        holdings.append(HoldingRecord(holder, f"ZZ{900000000 + n:09d}0", amount(), ref))


@dataclass
class Dataset:
    registry: _Registry
    records: dict  # DatasetKind value -> list of records
    ground_truth: dict


def generate(cfg=SynConfig()):
    """Build the synthetic registry, record sets and ground-truth ledger (in memory)."""
    cfg.validate()
    reg = _make_registry(cfg, _layer_rng(cfg.seed, 0))
    emitter = _Emitter(cfg, reg, _layer_rng(cfg.seed, 1))
    loans, holdings, sfts = [], [], []
    ledger = {}
    targets = {LayerName.ST_CRED.value: loans, LayerName.LT_CRED.value: loans,
               LayerName.CROSS_SEC.value: holdings, LayerName.ST_FUND.value: sfts}
    for index, layer in enumerate(n.value for n in LayerName if n is not LayerName.FLAT):
        spec = cfg.layers.get(layer)
        if spec is None:
            continue
        rng = _layer_rng(cfg.seed, 10 + index)
        emitter.rng = rng
        if layer == LayerName.OVRL_PORTFL.value:
            _overlap_layer(cfg, reg, emitter, spec, rng, holdings, ledger)
        else:
            _directed_layer(cfg, reg, emitter, layer, spec, rng, targets[layer], ledger)
    emitter.rng = _layer_rng(cfg.seed, 2)
    _decoys(cfg, reg, emitter, emitter.rng, loans, holdings, sfts)

    truth = {
        "seed": cfg.seed,
        "n_groups": cfg.n_groups,
        "n_entities": len(reg.entities),
        "scale": cfg.scale,
        "reference_date": cfg.reference_date.isoformat(),
        "partition": {head: ids for head, ids in zip(reg.heads, reg.members)},
        "layers": {name: {"density": spec.density, "kind": spec.kind.value,
                          "params": dict(spec.params), "x_min": spec.x_min,
                          "attachment": spec.attachment, "active_share": spec.active_share,
                          "weight_unit": "in-strength per active entity" if _directed(name)
                          else "overlap per group pair",
                          **ledger[name],
                          "total_eur": str(_money(ledger[name]["total_cents"]))}
                   for name, spec in cfg.layers.items()},
        "decoys": asdict(cfg.decoys),
    }
    records = {DatasetKind.LOANS.value: loans, DatasetKind.HOLDINGS.value: holdings,
               DatasetKind.SECURITIES.value: emitter.securities, DatasetKind.SFT.value: sfts}
    return Dataset(reg, records, truth)


REGISTRY_FILES = ("entities.csv", "control_links.csv", "group_heads.csv", "balance_sheet.csv")


def write_dataset(dataset, out_dir):
    """Write every CSV plus ``ground_truth.json``; returns the written file names."""
    os.makedirs(out_dir, exist_ok=True)
    reg = dataset.registry

    def path(name):
        return os.path.join(out_dir, name)

    def open_out(name):
        return open(path(name), "w", encoding="utf-8", newline="")

    with open_out("entities.csv") as fh:
        registry.write_entities(fh, reg.entities)
    with open_out("control_links.csv") as fh:
        registry.write_control_links(fh, reg.links)
    with open_out("group_heads.csv") as fh:
        registry.write_group_heads(fh, reg.heads)
    with open_out("balance_sheet.csv") as fh:
        registry.write_balance_sheet(fh, reg.balance)
    written = list(REGISTRY_FILES)
    for kind in DatasetKind:
        name = ingest.file_name(kind)
        with open_out(name) as fh:
            ingest.write_records(kind, dataset.records[kind.value], fh)
        written.append(name)
    with open_out("ground_truth.json") as fh:
        json.dump(dataset.ground_truth, fh, indent=1, sort_keys=True)
        fh.write("\n")
    written.append("ground_truth.json")
    return written
