import csv
import filecmp
import json
import os
import random
import shutil

import pytest

from netstrata import cli
from netstrata.netbuild import Layer, LayerName, Level, MultiLayerNetwork, write_network_json

N_BANKS = 114
# layer -> (edge count, directed) as published for the 114-group sample
PUBLISHED_COUNTS = {"st_cred": (525, True), "lt_cred": (901, True), "cross_sec": (2456, True),
                    "st_fund": (900, True), "ovrl_portfl": (3614, False), "flat": (2969, True)}
PUBLISHED_DENSITY = {"st_cred": 0.04, "lt_cred": 0.07, "cross_sec": 0.19, "st_fund": 0.07,
                     "ovrl_portfl": 0.56, "flat": 0.23}


def run(*argv):
    return cli.main([str(a) for a in argv])


def error_of(capsys):
    err = capsys.readouterr().err.strip().splitlines()[-1]
    return json.loads(err)["error"]


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def published_network(path):
    rng = random.Random(0)
    nodes = tuple(f"G{i:03d}" for i in range(N_BANKS))
    layers = {}
    for name, (count, directed) in PUBLISHED_COUNTS.items():
        pairs = [(a, b) for a in nodes for b in nodes if a != b and (directed or a < b)]
        edges = {e: float(rng.randint(1, 1000)) for e in rng.sample(pairs, count)}
        layers[LayerName(name)] = Layer(name, directed, edges)
    write_network_json(MultiLayerNetwork(nodes, Level.GROUP, layers, {}), path)
    return path


# --- errors ---------------------------------------------------------------

def test_unknown_flag_is_structured_error(capsys, tmp_path):
    assert run("stats", "--in", tmp_path, "--out", tmp_path / "s.csv", "--bogus") == 1
    err = error_of(capsys)
    assert err["type"] == "usage" and "--bogus" in err["message"]


def test_unknown_subcommand_and_bad_values(capsys, tmp_path):
    assert run("frobnicate") == 1
    assert error_of(capsys)["type"] == "usage"
    assert run("report", "--in", tmp_path, "--out", tmp_path / "r", "--damping", "1.5") == 1
    assert error_of(capsys)["type"] == "usage"


def test_missing_input(capsys, tmp_path):
    assert run("stats", "--in", tmp_path / "nowhere.json", "--out", tmp_path / "s.csv") == 1
    err = error_of(capsys)
    assert err["type"] == "missing_input" and err["command"] == "stats"
    (tmp_path / "d").mkdir()
    assert run("build", "--in", tmp_path / "d", "--out", tmp_path / "n.json") == 1
    assert error_of(capsys)["type"] == "missing_input"


def test_schema_mismatch(capsys, tmp_path, small_dataset_dir):
    broken = tmp_path / "broken"
    shutil.copytree(small_dataset_dir, broken)
    rows = (broken / "loans.csv").read_text().splitlines()
    header = rows[0].split(",")
    keep = [i for i, h in enumerate(header) if h != header[-1]]
    (broken / "loans.csv").write_text(
        "\n".join(",".join(r.split(",")[i] for i in keep) for r in rows) + "\n")
    assert run("build", "--in", broken, "--out", tmp_path / "n.json") == 1
    assert error_of(capsys)["type"] == "schema_mismatch"


def test_bad_threads_environment(capsys, tmp_path, monkeypatch, small_dataset_dir):
    monkeypatch.setenv("NETSTRATA_THREADS", "many")
    assert run("stats", "--in", small_dataset_dir, "--out", tmp_path / "s.csv") == 1
    assert "NETSTRATA_THREADS" in error_of(capsys)["message"]


# --- single commands --------------------------------------------------------

def test_stats_on_published_counts(tmp_path):
    src = published_network(str(tmp_path / "net.json"))
    out = tmp_path / "stats.csv"
    assert run("stats", "--in", src, "--out", out) == 0
    rows = {r["layer"]: r for r in read_csv(out)}
    for name, expected in PUBLISHED_DENSITY.items():
        assert round(float(rows[name]["density"]), 2) == expected, name
        assert int(rows[name]["n_edges"]) == PUBLISHED_COUNTS[name][0]
    # the directed overlap view symmetrizes every pair, so it carries both arcs
    assert int(rows["ovrl_portfl_dir"]["n_edges"]) == 2 * 3614
    assert float(rows["ovrl_portfl_dir"]["reciprocity"]) == 1.0
    assert rows["ovrl_portfl"]["reciprocity"] == ""
    manifest = json.loads((tmp_path / "stats.csv.manifest.json").read_text())
    assert manifest["command"] == "stats" and "net.json" in manifest["inputs"]
    numeric = [c for c in rows["st_cred"] if c != "layer"]
    assert set(numeric) <= set(manifest["units"])


def test_fit_tail_only_flags_thin_overlap_tail(tmp_path, small_dataset_dir):
    out = tmp_path / "fit.csv"
    assert run("fit", "--in", small_dataset_dir, "--out", out, "--layer", "ovrl_portfl",
               "--tail-only") == 0
    rows = read_csv(out)
    assert {r["kind"] for r in rows} == {"power_law", "truncated_power_law", "lognormal",
                                         "exponential"}
    for r in rows:
        assert r["layer"] == "ovrl_portfl" and r["level"] == "entity"
        assert r["thin_tail"] == ("true" if int(r["n_tail"]) < 50 else "false")
    assert any(r["thin_tail"] == "true" for r in rows)
    units = json.loads((tmp_path / "fit.csv.manifest.json").read_text())["units"]
    assert {"alpha", "lambda", "xmin", "ks", "thin_tail"} <= set(units)


def test_commands_are_deterministic(tmp_path, small_dataset_dir):
    for tag in ("a", "b"):
        d = tmp_path / tag
        assert run("build", "--in", small_dataset_dir, "--out", d / "net.json") == 0
        assert run("compare", "--in", small_dataset_dir, "--out", d / "cmp.csv") == 0
        assert run("bootstrap", "--in", small_dataset_dir, "--out", d / "boot.json",
                   "--layer", "cross_sec", "--bootstrap-B", 100, "--seed", 4) == 0
        assert run("centrality", "--in", d / "net.json", "--out", d / "cent.csv") == 0
        assert run("correlation", "--in", d / "net.json", "--out", d / "corr") == 0
        assert run("topk", "--in", d / "net.json", "--out", d / "top.csv", "--k", 3) == 0
        assert run("profile", "--in", d / "net.json", "--out", d / "prof.csv") == 0
    a, b = tmp_path / "a", tmp_path / "b"
    names = sorted(os.listdir(a))
    assert "cmp_pairs.csv" in names and "boot.csv" in names
    _, mismatch, errors = filecmp.cmpfiles(a, b, [n for n in names if n != "corr"], shallow=False)
    assert not mismatch and not errors
    _, mismatch, _ = filecmp.cmpfiles(a / "corr", b / "corr", os.listdir(a / "corr"), shallow=False)
    assert not mismatch
    boot = json.loads((a / "boot.json").read_text())
    assert boot["B"] == 100 and boot["effective_B"] == len(boot["bootstrap_ks"])
    assert len(read_csv(a / "boot.csv")) == boot["effective_B"]


def test_level_conflict_with_network_json(capsys, tmp_path, small_dataset_dir):
    net = tmp_path / "net.json"
    assert run("build", "--in", small_dataset_dir, "--out", net) == 0
    assert run("stats", "--in", net, "--out", tmp_path / "s.csv", "--level", "entity") == 1
    assert "conflicts" in error_of(capsys)["message"]


def test_syngen_command_and_infeasible_config(capsys, tmp_path):
    out = tmp_path / "d"
    assert run("syngen", "--out", out, "--seed", 2, "--n-groups", 6, "--entities-min", 2,
               "--entities-max", 3) == 0
    assert {"entities.csv", "loans.csv", "ground_truth.json", "manifest.json"} <= set(os.listdir(out))
    assert run("syngen", "--out", tmp_path / "e", "--n-groups", 1) == 1
    assert error_of(capsys)["type"] == "infeasible_config"


REPORT_FILES = {
    "manifest.json", "network_group.json", "validation.json", "table1_graph_stats.csv",
    "figure1_degree_clustering.csv", "fits.csv", "figure2_binned_pdf.csv",
    "figure2_fitted_curves.csv", "table3_best_fit_bulk.csv", "table3_best_fit_tail.csv",
    "table3_pairs.csv", "bootstrap_summary.csv", "centrality.csv", "figure4_topk_pagerank.csv",
    "topk_persistence.csv", "bootstrap", "figure3",
}


def tree_bytes(root):
    out = {}
    for base, _, files in os.walk(root):
        for f in files:
            path = os.path.join(base, f)
            with open(path, "rb") as fh:
                out[os.path.relpath(path, root)] = fh.read()
    return out


def test_report_writes_all_artifacts_deterministically(tmp_path, small_dataset_dir):
    first, second = tmp_path / "r1", tmp_path / "r2"
    for out in (first, second):
        assert run("report", "--in", small_dataset_dir, "--out", out, "--seed", 1) == 0
    assert REPORT_FILES <= set(os.listdir(first))
    assert tree_bytes(first) == tree_bytes(second)
    manifest = json.loads((first / "manifest.json").read_text())
    for name in manifest["outputs"]:
        assert (first / name).exists(), name
    stats = read_csv(first / "table1_graph_stats.csv")
    assert [r["layer"] for r in stats] == ["st_cred", "lt_cred", "cross_sec", "st_fund",
                                          "ovrl_portfl", "ovrl_portfl_dir", "flat"]
    curves = read_csv(first / "figure2_fitted_curves.csv")
    per_curve = {}
    for r in curves:
        key = (r["layer"], r["mode"], r["kind"])
        per_curve[key] = per_curve.get(key, 0) + 1
    assert set(per_curve.values()) == {200}
    assert os.listdir(first / "figure3")
    assert any(n.endswith("_bulk.json") for n in os.listdir(first / "bootstrap"))


@pytest.mark.parametrize("command", ["stats", "fit", "centrality"])
def test_every_output_has_sidecar(tmp_path, small_dataset_dir, command):
    out = tmp_path / "o.csv"
    assert run(command, "--in", small_dataset_dir, "--out", out) == 0
    side = json.loads((tmp_path / "o.csv.manifest.json").read_text())
    assert side["config_digest"] and side["tool_version"] and side["units"]
    assert all(len(d) == 64 for d in side["inputs"].values())
