"""Command-line pipeline: synthetic data, network building, statistics, fits, centralities.

Every command writes plain CSV/JSON outputs plus a ``*.manifest.json`` sidecar
holding the resolved configuration, input digests and column units.  Nothing
time-dependent is recorded, so identical inputs and flags give identical bytes.
"""
from __future__ import annotations

import argparse
import dataclasses
import datetime as dt
import hashlib
import json
import logging
import math
import os
import sys

import numpy as np

from . import __version__, _csv, centrality, graphstats, ingest, registry, syngen
from .heavytail import (KIND_ORDER, THIN_TAIL, CandidateKind, Direction, FitError,
                        bootstrap_gof, estimate_xmin, fit_mle, log_binned_pdf,
                        selection_score, significance_stars, weighted_degree_sample)
from .netbuild import (BuildConfig, LayerName, Level, MaturityCutoff, NetworkError,
                       build_network, network_to_dict, read_network_json)

log = logging.getLogger("netstrata")

REGISTRY_REQUIRED = ("entities.csv", "control_links.csv", "group_heads.csv")
BALANCE_FILE = "balance_sheet.csv"
OVERRIDES_FILE = "group_overrides.csv"
FIT_COLUMNS = ("layer", "direction", "level", "kind", "alpha", "lambda", "mu", "sigma",
               "xmin", "n_tail", "loglik", "ks")
COMPARE_COLUMNS = ("layer", "best_fit", "score", "runner_up", "r_statistic", "p_value",
                   "significance_stars")
CURVE_POINTS = 200
REPORT_TOPK = 10


class CliError(Exception):
    """Validation failure reported as JSON on stderr with exit status 1."""

    def __init__(self, message, kind="usage"):
        super().__init__(message)
        self.kind = kind


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError(message)


# --- inputs ---------------------------------------------------------------

def file_digest(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def _require(path):
    if not os.path.exists(path):
        raise CliError(f"missing input: {os.path.basename(path)}", "missing_input")
    return path


def load_bundle(directory, strict=False):
    """Read registry and record files from a dataset directory.

    Returns ``(records, groups, profiles, validation, digests)``.
    """
    if not os.path.isdir(directory):
        raise CliError(f"input directory not found: {directory}", "missing_input")
    path = lambda name: os.path.join(directory, name)
    for name in REGISTRY_REQUIRED:
        _require(path(name))
    digests = {}
    entities = registry.load_entities(path("entities.csv"))
    links = registry.load_control_links(path("control_links.csv"))
    heads = registry.load_group_heads(path("group_heads.csv"))
    overrides = (registry.load_overrides(path(OVERRIDES_FILE))
                 if os.path.exists(path(OVERRIDES_FILE)) else ())
    groups = registry.resolve_groups(entities, links, heads, overrides=overrides)
    profiles = {}
    if os.path.exists(path(BALANCE_FILE)):
        profiles, _ = registry.enrich_groups(groups, registry.load_balance_sheet(path(BALANCE_FILE)))
    records, validation = {}, {}
    for kind in ingest.DatasetKind:
        name = ingest.file_name(kind)
        recs, report = ingest.load_records(kind, _require(path(name)), strict=strict)
        records[kind.value] = recs
        validation[name] = {"rows": report.n_rows, "parsed": report.n_parsed,
                            "errors": [[row, reason] for row, reason in report.errors]}
    for name in sorted(os.listdir(directory)):
        if name.endswith(".csv"):
            digests[name] = file_digest(path(name))
    return records, groups, profiles, validation, digests


def build_from_dir(directory, level, config=None, strict=False):
    records, groups, profiles, validation, digests = load_bundle(directory, strict)
    base = config or BuildConfig()
    cfg = BuildConfig(Level(level), base.cutoff, base.as_of, base.sft_kinds,
                      base.unspecified_maturity_is_long_term, base.reject_unresolved)
    return build_network(records, groups, profiles, cfg), validation, digests


def _build_config(args):
    as_of = None
    if getattr(args, "as_of", None):
        try:
            as_of = dt.date.fromisoformat(args.as_of)
        except ValueError:
            raise CliError(f"--as-of must be an ISO date, got {args.as_of!r}") from None
    return BuildConfig(Level(args.level), MaturityCutoff(args.maturity_cutoff), as_of,
                       unspecified_maturity_is_long_term=args.unspecified_long_term,
                       reject_unresolved=args.reject_unresolved)


def network_input(args):
    """Network from ``--in``: a dataset directory (built at ``--level``) or network JSON."""
    src = args.inp
    if os.path.isdir(src):
        net, _, digests = build_from_dir(src, args.level, _build_config(args), args.strict)
        return net, digests
    _require(src)
    net = read_network_json(src)
    if args.level_given and Level(args.level) is not net.level:
        raise CliError(f"--level {args.level} conflicts with the {net.level.value}-level network in "
                       f"{os.path.basename(src)}")
    return net, {os.path.basename(src): file_digest(src)}


# --- outputs --------------------------------------------------------------

def _config_of(args):
    skip = {"inp", "out", "threads", "func", "level_given", "out_csv"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def write_manifest(path, args, inputs, outputs, units, extra=None):
    config = _config_of(args)
    encoded = json.dumps(config, sort_keys=True, default=str).encode()
    manifest = {
        "command": args.command,
        "tool_version": __version__,
        "config": config,
        "config_digest": hashlib.sha256(encoded).hexdigest(),
        "inputs": dict(sorted(inputs.items())),
        "seed": getattr(args, "seed", None),
        "outputs": sorted(outputs),
        "units": units,
    }
    if extra:
        manifest.update(extra)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True, default=str)
        fh.write("\n")


def _sidecar(path):
    return path + ".manifest.json"


def _ensure_parent(path):
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)


def _write_csv(path, columns, rows):
    _ensure_parent(path)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        _csv.write_rows(fh, columns, rows)


def _write_json(path, data):
    _ensure_parent(path)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh, indent=1, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(value):
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if hasattr(value, "value"):
        return value.value
    return str(value)


def _num(x):
    if x is None:
        return None
    x = float(x)
    return None if math.isnan(x) else x


def _scale_units(scale):
    return f"model units of {scale:g} EUR"


# --- heavy-tail helpers ---------------------------------------------------

def fit_candidates(sample, kinds, tail_only, max_candidates, discrete=False):
    """Fit every requested kind; failures are returned separately, not raised."""
    fits, failures = {}, {}
    for kind in kinds:
        disc = discrete and kind is CandidateKind.POWER_LAW
        try:
            if tail_only:
                fits[kind] = estimate_xmin(kind, sample, discrete=disc, max_candidates=max_candidates)
            else:
                fits[kind] = fit_mle(kind, sample, min(sample.values), discrete=disc)
        except (FitError, ValueError, ArithmeticError) as exc:
            failures[kind.value] = str(exc)
    return fits, failures


def fit_row(sample, fit):
    return [sample.layer, sample.direction.value, sample.level.value, fit.kind.value,
            _num(fit.param("alpha")), _num(fit.param("lambda")), _num(fit.param("mu")),
            _num(fit.param("sigma")), fit.x_min, fit.n_tail, fit.log_likelihood, fit.ks_distance]


def compare_row(layer, selection):
    best = selection.winner
    runner = selection.runner_up()
    lr = selection.pairs[(best, runner)]
    return [layer, best.value, selection.scores[best], runner.value, lr.r_statistic,
            lr.p_value, significance_stars(lr.p_value)]


def pair_rows(layer, selection, mode):
    for (a, b), lr in sorted(selection.pairs.items(), key=lambda kv: (kv[0][0].value, kv[0][1].value)):
        yield [layer, mode, a.value, b.value, lr.r_statistic, lr.p_value, lr.n,
               selection.scores[a], significance_stars(lr.p_value)]


def bootstrap_rows(report):
    for b, (ks, params, xmin) in enumerate(zip(report.bootstrap_ks, report.bootstrap_params,
                                               report.bootstrap_xmin)):
        yield [b, ks, xmin] + [_num(params.get(k)) for k in ("alpha", "lambda", "mu", "sigma")]


BOOT_COLUMNS = ("iteration", "ks", "xmin", "alpha", "lambda", "mu", "sigma")


def fitted_curve(fit, sample, points=CURVE_POINTS):
    """``(x, pdf, pdf_scaled)`` on log-spaced points over ``[x_min, max]``.

    ``pdf_scaled`` multiplies by the tail share so it overlays a PDF binned
    over the whole sample.
    """
    hi = max(sample.values)
    x = np.geomspace(fit.x_min, hi if hi > fit.x_min else fit.x_min * 10.0, points)
    pdf = fit.pdf(x)
    return x, pdf, pdf * fit.n_tail / len(sample)


# --- subcommands ----------------------------------------------------------

def cmd_syngen(args):
    layers = {k: dataclasses.replace(v, attachment=args.attachment)
              for k, v in syngen.default_layers().items()}
    cfg = syngen.SynConfig(n_groups=args.n_groups,
                           entities_per_group=(args.entities_min, args.entities_max),
                           layers=layers, seed=args.seed, scale=args.scale)
    try:
        written = syngen.write_dataset(syngen.generate(cfg), args.out)
    except syngen.ConfigError as exc:
        raise CliError(str(exc), "infeasible_config") from None
    write_manifest(os.path.join(args.out, "manifest.json"), args, {}, written,
                   {"amounts": "EUR", "weight_distribution_parameters": _scale_units(args.scale)})


def cmd_build(args):
    net, validation, digests = build_from_dir(args.inp, args.level, _build_config(args), args.strict)
    _write_json(args.out, network_to_dict(net))
    excluded = {name.value: dict(sorted(layer.excluded.items())) for name, layer in net.layers.items()}
    write_manifest(_sidecar(args.out), args, digests, [os.path.basename(args.out)],
                   {"weight": "EUR", "tier1": "EUR", "total_assets": "EUR"},
                   {"validation": validation, "excluded": excluded})


def stats_table(net):
    """One row per layer (both overlap variants included) with every GraphStats field."""
    suite = graphstats.stats_suite(net)
    names = [c for c in graphstats.SUITE_COLUMNS if c in suite]
    fields = list(graphstats.GraphStats.__dataclass_fields__)
    rows = [[n] + [getattr(suite[n], f) for f in fields] for n in names]
    return ["layer"] + fields, rows


STATS_UNITS = {"n_nodes": "count", "n_edges": "count", "n_components": "count",
               "largest_comp_node_share": "fraction", "largest_comp_edge_share": "fraction",
               "diameter_largest_comp": "hops", "avg_clustering": "fraction",
               "reciprocity": "fraction (blank for undirected layers)", "density": "fraction",
               "global_efficiency": "1/hops", "herfindahl": "fraction of total strength"}


def cmd_stats(args):
    net, digests = network_input(args)
    columns, rows = stats_table(net)
    _write_csv(args.out, columns, rows)
    write_manifest(_sidecar(args.out), args, digests, [os.path.basename(args.out)], STATS_UNITS,
                   {"herfindahl_base": graphstats.HERFINDAHL_BASE})


PROFILE_COLUMNS = ("layer", "node_id", "k", "cc", "total_assets")
PROFILE_UNITS = {"k": "distinct neighbours", "cc": "fraction",
                 "total_assets": "EUR"}


def profile_rows(net, layers, mode):
    for name in layers:
        for p in graphstats.degree_clustering_profile(net, name, mode):
            yield [LayerName(name).value, p.node_id, p.degree_k, p.clustering_cc, p.total_assets]


def cmd_profile(args):
    net, digests = network_input(args)
    layers = [args.layer] if args.layer else [n.value for n in LayerName if n in net.layers]
    _write_csv(args.out, PROFILE_COLUMNS, profile_rows(net, layers, args.clustering_mode))
    write_manifest(_sidecar(args.out), args, digests, [os.path.basename(args.out)], PROFILE_UNITS)


def _fit_units(scale):
    u = _scale_units(scale)
    return {"alpha": "dimensionless", "lambda": f"1/({u})", "mu": f"log({u})",
            "sigma": f"log({u})", "xmin": u, "n_tail": "count", "loglik": "nats",
            "ks": "fraction", "thin_tail": f"boolean, tail-only fit with n_tail < {THIN_TAIL}"}


def _samples(net, args, layers):
    out = []
    for name in layers:
        out.append(weighted_degree_sample(net, name, args.direction, args.scale,
                                          weighted=not args.unweighted))
    return out


def _layers_arg(args, net):
    if args.layer:
        return [LayerName(args.layer).value]
    return [n.value for n in LayerName if n in net.layers]


def cmd_fit(args):
    net, digests = network_input(args)
    kinds = [CandidateKind(args.kind)] if args.kind else list(KIND_ORDER)
    rows, failures = [], {}
    for sample in _samples(net, args, _layers_arg(args, net)):
        fits, failed = fit_candidates(sample, kinds, args.tail_only, args.xmin_candidates,
                                      args.discrete)
        for kind in kinds:
            if kind in fits:
                thin = bool(args.tail_only and fits[kind].n_tail < THIN_TAIL)
                rows.append(fit_row(sample, fits[kind]) + [thin])
        if failed:
            failures[sample.layer] = failed
    _write_csv(args.out, FIT_COLUMNS + ("thin_tail",), rows)
    write_manifest(_sidecar(args.out), args, digests, [os.path.basename(args.out)],
                   _fit_units(args.scale), {"fit_failures": failures})


def cmd_compare(args):
    net, digests = network_input(args)
    rows, pairs, failures = [], [], {}
    mode = "tail" if args.tail_only else "bulk"
    for sample in _samples(net, args, _layers_arg(args, net)):
        fits, failed = fit_candidates(sample, KIND_ORDER, args.tail_only, args.xmin_candidates)
        if failed:
            failures[sample.layer] = failed
        if len(fits) < 2:
            continue
        sel = selection_score([fits[k] for k in KIND_ORDER if k in fits], sample)
        rows.append(compare_row(sample.layer, sel) + [sel.tie])
        pairs.extend(pair_rows(sample.layer, sel, mode))
    pairs_path = _pairs_path(args.out)
    _write_csv(args.out, COMPARE_COLUMNS + ("tie",), rows)
    _write_csv(pairs_path, PAIR_COLUMNS, pairs)
    write_manifest(_sidecar(args.out), args, digests,
                   [os.path.basename(args.out), os.path.basename(pairs_path)], COMPARE_UNITS,
                   {"fit_failures": failures, "mode": mode})


PAIR_COLUMNS = ("layer", "mode", "kind_a", "kind_b", "r_statistic", "p_value", "n", "score_a",
                "significance_stars")
COMPARE_UNITS = {"score": "nats (sum of significant log-likelihood ratios)",
                 "r_statistic": "nats, best fit versus runner-up (positive favours best fit)",
                 "p_value": "fraction", "n": "count of points at the common x_min"}


def _pairs_path(out):
    root, ext = os.path.splitext(out)
    return f"{root}_pairs{ext or '.csv'}"


def cmd_bootstrap(args):
    net, digests = network_input(args)
    sample = weighted_degree_sample(net, args.layer, args.direction, args.scale,
                                    weighted=not args.unweighted)
    report = bootstrap_gof(args.kind, sample, B=args.bootstrap_B, tail_only=args.tail_only,
                           significance=args.significance, seed=args.seed,
                           workers=args.threads, max_candidates=args.xmin_candidates)
    data = report.to_dict()
    data.update(layer=sample.layer, direction=sample.direction.value, level=sample.level.value,
                scale=sample.scale)
    _write_json(args.out, data)
    csv_path = args.out_csv or os.path.splitext(args.out)[0] + ".csv"
    _write_csv(csv_path, BOOT_COLUMNS, bootstrap_rows(report))
    write_manifest(_sidecar(args.out), args, digests,
                   [os.path.basename(args.out), os.path.basename(csv_path)],
                   {**_fit_units(args.scale), "p_value": "fraction"})


CENTRALITY_UNITS = {"in_strength": "EUR", "out_strength": "EUR",
                    "pagerank": "probability", "hub": "unit-L2 vector entry",
                    "authority": "unit-L2 vector entry", "betweenness": "fraction of (N-1)(N-2)"}


def centrality_rows(vectors):
    for layer in vectors:
        for measure in centrality.Measure:
            vec = vectors[layer][measure]
            for node in sorted(vec.scores):
                yield [layer, measure.value, node, vec.scores[node]]


def cmd_centrality(args):
    net, digests = network_input(args)
    vectors = centrality.all_measures(net, args.damping)
    _write_csv(args.out, ("layer", "measure", "node_id", "score"), centrality_rows(vectors))
    write_manifest(_sidecar(args.out), args, digests, [os.path.basename(args.out)],
                   {"score": CENTRALITY_UNITS}, {"damping": args.damping})


def correlation_files(net, vectors, out_dir, measures):
    written = []
    for measure in measures:
        try:
            mat = centrality.cross_layer_matrix(net, measure, vectors=vectors)
        except centrality.UndefinedCorrelation as exc:
            log.warning("skipping %s correlation: %s", measure.value, exc)
            continue
        name = f"kendall_{measure.value}.csv"
        grid = mat.matrix()
        _write_csv(os.path.join(out_dir, name), ("layer",) + mat.layers,
                   ([a] + grid[i].tolist() for i, a in enumerate(mat.layers)))
        written.append(name)
    return written


def cmd_correlation(args):
    net, digests = network_input(args)
    vectors = centrality.all_measures(net, args.damping)
    measures = [centrality.Measure(args.measure)] if args.measure else list(centrality.Measure)
    os.makedirs(args.out, exist_ok=True)
    written = correlation_files(net, vectors, args.out, measures)
    write_manifest(os.path.join(args.out, "manifest.json"), args, digests, written,
                   {"tau": "Kendall tau-b in [-1, 1]"}, {"damping": args.damping})


TOPK_COLUMNS = ("layer", "rank", "node_id", "score", "total_assets", "tied")


def topk_rows(net, vectors, measure, k):
    for layer in vectors:
        for r in centrality.top_k(vectors[layer][measure], k, net.profiles):
            yield [layer, r.rank, r.node_id, r.score, r.total_assets, r.tied]


def cmd_topk(args):
    net, digests = network_input(args)
    measure = centrality.Measure(args.measure)
    vectors = {layer: {measure: centrality.measure_vector(net.layers[LayerName(layer)], net.nodes,
                                                          measure, args.damping)}
               for layer in _layers_arg(args, net)}
    _write_csv(args.out, TOPK_COLUMNS, topk_rows(net, vectors, measure, args.k))
    write_manifest(_sidecar(args.out), args, digests, [os.path.basename(args.out)],
                   {"score": CENTRALITY_UNITS[measure.value], "total_assets": "EUR"},
                   {"damping": args.damping})


def cmd_report(args):
    """Full pipeline into one directory; see README for the file list."""
    out = args.out
    os.makedirs(out, exist_ok=True)
    p = lambda name: os.path.join(out, name)
    records, groups, profiles, validation, digests = load_bundle(args.inp, args.strict)
    cfg = _build_config(args)
    group_net = build_network(records, groups, profiles,
                              BuildConfig(Level.GROUP, cfg.cutoff, cfg.as_of, cfg.sft_kinds,
                                          cfg.unspecified_maturity_is_long_term,
                                          cfg.reject_unresolved))
    tail_net = group_net if Level(args.level) is Level.GROUP else build_network(
        records, groups, profiles,
        BuildConfig(Level(args.level), cfg.cutoff, cfg.as_of, cfg.sft_kinds,
                    cfg.unspecified_maturity_is_long_term, cfg.reject_unresolved))
    del records
    written = []

    def csv_out(name, columns, rows):
        _write_csv(p(name), columns, rows)
        written.append(name)

    _write_json(p("network_group.json"), network_to_dict(group_net))
    _write_json(p("validation.json"), validation)
    written += ["network_group.json", "validation.json"]

    columns, rows = stats_table(group_net)
    csv_out("table1_graph_stats.csv", columns, rows)
    csv_out("figure1_degree_clustering.csv", PROFILE_COLUMNS,
            profile_rows(group_net, [n.value for n in LayerName], args.clustering_mode))

    fit_rows, pdf_rows, curve_rows, pair_out, boot_summary = [], [], [], [], []
    compare = {"bulk": [], "tail": []}
    failures = {}
    os.makedirs(p("bootstrap"), exist_ok=True)
    for name in LayerName:
        try:
            sample = weighted_degree_sample(tail_net, name, args.direction, args.scale,
                                            weighted=not args.unweighted)
        except ValueError as exc:
            failures[name.value] = str(exc)
            continue
        centres, dens, widths = log_binned_pdf(sample, args.bins_per_decade)
        pdf_rows.extend([name.value, c, d, w] for c, d, w in zip(centres, dens, widths))
        for mode, tail_only in (("bulk", False), ("tail", True)):
            fits, failed = fit_candidates(sample, KIND_ORDER, tail_only, args.xmin_candidates)
            if failed:
                failures.setdefault(name.value, {})[mode] = failed
            for kind in KIND_ORDER:
                if kind not in fits:
                    continue
                fit = fits[kind]
                fit_rows.append([mode] + fit_row(sample, fit)
                                + [bool(tail_only and fit.n_tail < THIN_TAIL)])
                x, pdf, scaled = fitted_curve(fit, sample)
                curve_rows.extend([name.value, mode, kind.value, xi, yi, si]
                                  for xi, yi, si in zip(x, pdf, scaled))
            if len(fits) >= 2:
                sel = selection_score([fits[k] for k in KIND_ORDER if k in fits], sample)
                compare[mode].append(compare_row(name.value, sel) + [sel.tie])
                pair_out.extend(pair_rows(name.value, sel, mode))
        modes = (("bulk", False), ("tail", True)) if args.tail_only else (("bulk", False),)
        for mode, tail_only in modes:
            rep = bootstrap_gof(CandidateKind.TRUNCATED_POWER_LAW, sample, B=args.bootstrap_B,
                                tail_only=tail_only, significance=args.significance,
                                seed=args.seed, workers=args.threads,
                                max_candidates=args.xmin_candidates)
            stem = f"bootstrap/{name.value}_{mode}"
            _write_json(p(stem + ".json"), {**rep.to_dict(), "layer": name.value,
                                             "direction": sample.direction.value,
                                             "level": sample.level.value, "scale": sample.scale})
            csv_out(stem + ".csv", BOOT_COLUMNS, bootstrap_rows(rep))
            written.append(stem + ".json")
            boot_summary.append([name.value, mode, rep.fit.x_min, rep.fit.param("alpha"),
                                 rep.fit.param("lambda"), rep.empirical_ks, rep.p_value,
                                 rep.reject_h0, rep.effective_B, rep.thin_tail])

    csv_out("fits.csv", ("mode",) + FIT_COLUMNS + ("thin_tail",), fit_rows)
    csv_out("figure2_binned_pdf.csv", ("layer", "bin_center", "density", "bin_width"), pdf_rows)
    csv_out("figure2_fitted_curves.csv", ("layer", "mode", "kind", "x", "pdf", "pdf_scaled"),
            curve_rows)
    for mode, rows in compare.items():
        csv_out(f"table3_best_fit_{mode}.csv", COMPARE_COLUMNS + ("tie",), rows)
    csv_out("table3_pairs.csv", PAIR_COLUMNS, pair_out)
    csv_out("bootstrap_summary.csv", ("layer", "mode", "xmin", "alpha", "lambda", "empirical_ks",
                                      "p_value", "reject_h0", "effective_B", "thin_tail"),
            boot_summary)

    vectors = centrality.all_measures(group_net, args.damping)
    csv_out("centrality.csv", ("layer", "measure", "node_id", "score"), centrality_rows(vectors))
    for name in correlation_files(group_net, vectors, p("figure3"), list(centrality.Measure)):
        written.append("figure3/" + name)
    csv_out("figure4_topk_pagerank.csv", TOPK_COLUMNS,
            topk_rows(group_net, vectors, centrality.Measure.PAGERANK, REPORT_TOPK))
    pr = {layer: vectors[layer][centrality.Measure.PAGERANK] for layer in vectors}
    persistence = centrality.top_share_persistence(pr, REPORT_TOPK)
    csv_out("topk_persistence.csv", ("layer_a", "layer_b", "share_top_k_in_top_20pct"),
            ([a, b, v] for (a, b), v in sorted(persistence.items())))

    units = {
        "table1_graph_stats.csv": STATS_UNITS,
        "figure1_degree_clustering.csv": PROFILE_UNITS,
        "fits.csv": _fit_units(args.scale),
        "figure2_binned_pdf.csv": {"bin_center": _scale_units(args.scale),
                                   "density": f"1/({_scale_units(args.scale)})",
                                   "bin_width": _scale_units(args.scale)},
        "figure2_fitted_curves.csv": {"x": _scale_units(args.scale),
                                      "pdf": "density conditional on x >= xmin",
                                      "pdf_scaled": "pdf times n_tail/n"},
        "table3": COMPARE_UNITS,
        "bootstrap": _fit_units(args.scale),
        "centrality.csv": CENTRALITY_UNITS,
        "figure3": {"tau": "Kendall tau-b in [-1, 1]"},
        "figure4_topk_pagerank.csv": {"score": "probability", "total_assets": "EUR"},
        "network_group.json": {"weight": "EUR"},
    }
    write_manifest(p("manifest.json"), args, digests, written, units,
                   {"fit_failures": failures, "damping": args.damping,
                    "heavy_tail_level": Level(args.level).value, "network_level": "group",
                    "herfindahl_base": graphstats.HERFINDAHL_BASE})


# --- parser ---------------------------------------------------------------

def _threads_default():
    env = os.environ.get("NETSTRATA_THREADS")
    if env is None:
        return 1
    try:
        value = int(env)
    except ValueError:
        raise CliError(f"NETSTRATA_THREADS must be an integer, got {env!r}") from None
    if value < 1:
        raise CliError("NETSTRATA_THREADS must be >= 1")
    return value


def _positive_int(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError("expected a positive integer")
    return value


def _fraction(text):
    value = float(text)
    if not 0.0 < value < 1.0:
        raise argparse.ArgumentTypeError("expected a value strictly between 0 and 1")
    return value


def _positive_float(text):
    value = float(text)
    if not (value > 0 and math.isfinite(value)):
        raise argparse.ArgumentTypeError("expected a positive number")
    return value


def build_parser():
    parser = _Parser(prog="netstrata", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"netstrata {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, level_default, needs_input=True):
        if needs_input:
            p.add_argument("--in", dest="inp", required=True,
                           help="dataset directory or network JSON")
        p.add_argument("--out", required=True)
        p.add_argument("--level", choices=[l.value for l in Level], default=None,
                       help=f"node level when building from a dataset (default {level_default})")
        p.set_defaults(level_default=level_default)
        p.add_argument("--threads", type=_positive_int, default=None,
                       help="worker cap (default: NETSTRATA_THREADS or 1)")
        p.add_argument("--strict", action="store_true", help="fail on the first bad record row")
        p.add_argument("--maturity-cutoff", type=_positive_int, default=3, metavar="MONTHS")
        p.add_argument("--as-of", default=None, help="snapshot date for SFTs (ISO)")
        p.add_argument("--unspecified-long-term", action="store_true",
                       help="treat loans without maturity as long-term")
        p.add_argument("--reject-unresolved", action="store_true")

    def tail_flags(p):
        p.add_argument("--scale", type=_positive_float, default=1e7, help="EUR per model unit")
        p.add_argument("--direction", choices=[d.value for d in Direction], default="in")
        p.add_argument("--tail-only", action="store_true", help="estimate x_min by KS scan")
        p.add_argument("--xmin-candidates", type=_positive_int, default=None,
                       help="thin the x_min scan to this many candidates")
        p.add_argument("--unweighted", action="store_true", help="count edges instead of summing weights")

    def layer_flag(p, required=False):
        p.add_argument("--layer", choices=[n.value for n in LayerName], required=required,
                       default=None)

    p = sub.add_parser("syngen", help="write a synthetic dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-groups", type=int, default=114)
    p.add_argument("--entities-min", type=int, default=100)
    p.add_argument("--entities-max", type=int, default=250)
    p.add_argument("--attachment", choices=["uniform", "preferential"], default="uniform")
    p.add_argument("--scale", type=_positive_float, default=1e7)
    p.add_argument("--threads", type=_positive_int, default=None)
    p.set_defaults(func=cmd_syngen, level_default=None, level=None)

    p = sub.add_parser("build", help="build a network JSON from a dataset directory")
    common(p, "group")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("stats", help="graph statistics per layer")
    common(p, "group")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("profile", help="degree and clustering per node")
    common(p, "group")
    layer_flag(p)
    p.add_argument("--clustering-mode", choices=[m.value for m in graphstats.ClusteringMode],
                   default=graphstats.ClusteringMode.UNDIRECTED_PROJECTION.value)
    p.set_defaults(func=cmd_profile)

    p = sub.add_parser("fit", help="fit candidate distributions to weighted degrees")
    common(p, "entity")
    tail_flags(p)
    layer_flag(p)
    p.add_argument("--kind", choices=[k.value for k in CandidateKind], default=None)
    p.add_argument("--discrete", action="store_true",
                   help="Hurwitz-zeta normalisation for the power law")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("compare", help="likelihood-ratio model selection")
    common(p, "entity")
    tail_flags(p)
    layer_flag(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("bootstrap", help="semi-parametric bootstrap goodness of fit")
    common(p, "entity")
    tail_flags(p)
    layer_flag(p, required=True)
    p.add_argument("--kind", choices=[k.value for k in CandidateKind],
                   default=CandidateKind.TRUNCATED_POWER_LAW.value)
    p.add_argument("--bootstrap-B", dest="bootstrap_B", type=_positive_int, default=1000)
    p.add_argument("--significance", type=_fraction, default=0.10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-csv", default=None)
    p.set_defaults(func=cmd_bootstrap)

    for name, func, helptext in (("centrality", cmd_centrality, "centrality scores, long form"),
                                 ("correlation", cmd_correlation, "Kendall matrices per measure"),
                                 ("topk", cmd_topk, "top-k nodes per layer")):
        p = sub.add_parser(name, help=helptext)
        common(p, "group")
        p.add_argument("--damping", type=_fraction, default=centrality.DEFAULT_DAMPING)
        if name == "correlation":
            p.add_argument("--measure", choices=[m.value for m in centrality.Measure], default=None)
        if name == "topk":
            layer_flag(p)
            p.add_argument("--measure", choices=[m.value for m in centrality.Measure],
                           default=centrality.Measure.PAGERANK.value)
            p.add_argument("--k", type=_positive_int, default=10)
        p.set_defaults(func=func)

    p = sub.add_parser("report", help="run the whole pipeline into one directory")
    common(p, "entity")
    tail_flags(p)
    p.add_argument("--damping", type=_fraction, default=centrality.DEFAULT_DAMPING)
    p.add_argument("--bootstrap-B", dest="bootstrap_B", type=_positive_int, default=100)
    p.add_argument("--significance", type=_fraction, default=0.10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--bins-per-decade", type=_positive_int, default=10)
    p.add_argument("--clustering-mode", choices=[m.value for m in graphstats.ClusteringMode],
                   default=graphstats.ClusteringMode.UNDIRECTED_PROJECTION.value)
    p.set_defaults(func=cmd_report, xmin_candidates=None)
    return parser


REPORT_XMIN_CANDIDATES = 30


def _finalize(args):
    args.level_given = args.level is not None
    if args.level is None:
        args.level = args.level_default
    del args.level_default
    if args.threads is None:
        args.threads = _threads_default()
    if args.command == "report" and args.xmin_candidates is None:
        args.xmin_candidates = REPORT_XMIN_CANDIDATES
    return args


ERRORS = (CliError, _csv.SchemaError, ingest.StrictModeError, registry.RegistryError,
          NetworkError, FitError, syngen.ConfigError, centrality.UndefinedCorrelation,
          ValueError, OSError)


def _error_kind(exc):
    if isinstance(exc, CliError):
        return exc.kind
    if isinstance(exc, _csv.SchemaError):
        return "schema_mismatch"
    if isinstance(exc, ingest.StrictModeError):
        return "row_error"
    if isinstance(exc, OSError):
        return "io_error"
    return type(exc).__name__


def main(argv=None):
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    command = None
    try:
        args = _finalize(parser.parse_args(argv))
        command = args.command
        args.func(args)
    except ERRORS as exc:
        json.dump({"error": {"type": _error_kind(exc), "message": str(exc), "command": command}},
                  sys.stderr, sort_keys=True)
        sys.stderr.write("\n")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
