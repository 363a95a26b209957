"""End-to-end subcommand behavior over a small generated corpus."""

import json
import os
import shutil
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from dnsxray import explain, features, models

from conftest import run_cli


def read(path):
    with open(path, "rb") as fh:
        return fh.read()


def read_manifest(out_dir):
    with open(os.path.join(out_dir, "manifest.json")) as fh:
        return json.load(fh)


def snapshot(out_dir):
    return {
        name: read(os.path.join(out_dir, name))
        for name in os.listdir(out_dir)
        if name != "manifest.json"
    }


# ----------------------------------------------------------------- synth


def test_synth_writes_expected_artifacts(cli_corpus):
    for name in ("traffic.records", "truth.csv", "traffic.pcap", "manifest.json"):
        assert os.path.exists(cli_corpus.synth_dir / name)
    manifest = read_manifest(cli_corpus.synth_dir)
    assert manifest["subcommand"] == "synth"
    assert manifest["observations"] > 0
    assert set(manifest["outputs"]) == {"traffic.records", "truth.csv", "traffic.pcap"}
    assert len(cli_corpus.benign) == 25 and len(cli_corpus.dga) == 25


def test_synth_reruns_byte_identically(cli_corpus, tmp_path):
    out = tmp_path / "again"
    rc = run_cli("synth", "--config", str(cli_corpus.config_path), "--out", str(out), "--pcap")
    assert rc == 0
    for name in ("traffic.records", "truth.csv", "traffic.pcap"):
        assert read(out / name) == read(cli_corpus.synth_dir / name)


def test_synth_seed_flag_overrides_config(cli_corpus, tmp_path):
    out = tmp_path / "reseeded"
    rc = run_cli("synth", "--config", str(cli_corpus.config_path), "--seed", "8", "--out", str(out))
    assert rc == 0
    assert read(out / "traffic.records") != read(cli_corpus.records_path)
    assert read_manifest(out)["seed"] == 8


def test_synth_refuses_overwrite_without_force(tmp_path, capsys):
    config = tmp_path / "s.json"
    config.write_text(json.dumps({"days": 1, "benign_domains": 2, "dga_domains": 2}))
    out = tmp_path / "out"
    assert run_cli("synth", "--config", str(config), "--out", str(out)) == 0
    assert run_cli("synth", "--config", str(config), "--out", str(out)) == 1
    assert "error: output-exists:" in capsys.readouterr().err
    assert run_cli("synth", "--config", str(config), "--out", str(out), "--force") == 0


def test_synth_rejects_bad_configs(tmp_path, capsys):
    config = tmp_path / "bad.json"
    config.write_text(json.dumps({"bogus": 1}))
    assert run_cli("synth", "--config", str(config), "--out", str(tmp_path / "a")) == 1
    assert "error: config-invalid:" in capsys.readouterr().err
    missing = tmp_path / "missing.json"
    assert run_cli("synth", "--config", str(missing), "--out", str(tmp_path / "b")) == 1
    assert "error: file-unreadable:" in capsys.readouterr().err


# --------------------------------------------------------------- extract


def test_extract_labels_and_drops_unknown(cli_corpus):
    lines = read(cli_corpus.features_path).decode().splitlines()
    assert lines[0] == "domain,label," + ",".join(features.FEATURE_NAMES)
    rows = [line.split(",", 2) for line in lines[1:]]
    assert len(rows) == 47  # 23 allowlisted + 24 blocklisted
    labels = {domain: label for domain, label, _ in rows}
    for domain in cli_corpus.benign[:-2]:
        assert labels[domain] == "benign"
    for domain in cli_corpus.dga[:-1]:
        assert labels[domain] == "malicious"
    for unlisted in cli_corpus.benign[-2:] + cli_corpus.dga[-1:]:
        assert unlisted not in labels


def test_extract_from_pcap_matches_records(cli_corpus, tmp_path):
    out = tmp_path / "pcap_extract"
    rc = run_cli(
        "extract", "--traffic", str(cli_corpus.pcap_path),
        "--allow", str(cli_corpus.allow_path), "--block", str(cli_corpus.block_path),
        "--out", str(out),
    )
    assert rc == 0
    assert read(out / "features.csv") == read(cli_corpus.features_path)


def test_extract_explicit_window_matches_inferred(cli_corpus, tmp_path):
    window = read_manifest(cli_corpus.features_path.parent)["window"]
    out = tmp_path / "windowed"
    rc = run_cli(
        "extract", "--traffic", str(cli_corpus.records_path),
        "--allow", str(cli_corpus.allow_path), "--block", str(cli_corpus.block_path),
        "--window-start", str(window[0]), "--window-end", str(window[1]),
        "--out", str(out),
    )
    assert rc == 0
    assert read(out / "features.csv") == read(cli_corpus.features_path)


def test_extract_day_narrows_the_window(cli_corpus, tmp_path):
    out = tmp_path / "day1"
    rc = run_cli(
        "extract", "--traffic", str(cli_corpus.records_path),
        "--allow", str(cli_corpus.allow_path), "--block", str(cli_corpus.block_path),
        "--day", "1", "--out", str(out),
    )
    assert rc == 0
    manifest = read_manifest(out)
    assert manifest["window"][1] - manifest["window"][0] == 86400
    assert read(out / "features.csv") != read(cli_corpus.features_path)


def test_extract_day_bounds(cli_corpus, tmp_path, capsys):
    args = (
        "extract", "--traffic", str(cli_corpus.records_path),
        "--allow", str(cli_corpus.allow_path), "--block", str(cli_corpus.block_path),
    )
    assert run_cli(*args, "--day", "0", "--out", str(tmp_path / "a")) == 1
    assert run_cli(*args, "--day", "9", "--out", str(tmp_path / "b")) == 1
    assert "error: config-invalid:" in capsys.readouterr().err


def test_extract_rejects_observations_outside_explicit_window(cli_corpus, tmp_path, capsys):
    rc = run_cli(
        "extract", "--traffic", str(cli_corpus.records_path),
        "--window-start", "0", "--window-end", "3600",
        "--out", str(tmp_path / "narrow"),
    )
    assert rc == 1
    assert "error: out-of-window:" in capsys.readouterr().err


def test_extract_empty_traffic_writes_header_only(tmp_path):
    empty = tmp_path / "empty.records"
    empty.write_text("")
    out = tmp_path / "out"
    assert run_cli("extract", "--traffic", str(empty), "--out", str(out)) == 0
    lines = read(out / "features.csv").decode().splitlines()
    assert lines == ["domain,label," + ",".join(features.FEATURE_NAMES)]


def test_extract_missing_traffic(tmp_path, capsys):
    rc = run_cli("extract", "--traffic", str(tmp_path / "nope"), "--out", str(tmp_path / "o"))
    assert rc == 1
    assert "error: file-unreadable:" in capsys.readouterr().err


def test_extract_with_auxiliary_tables(cli_corpus, tmp_path):
    data = os.path.join(os.path.dirname(__file__), "data")
    out = tmp_path / "aux"
    rc = run_cli(
        "extract", "--traffic", str(cli_corpus.records_path),
        "--allow", str(cli_corpus.allow_path), "--block", str(cli_corpus.block_path),
        "--geo", os.path.join(data, "geo.csv"),
        "--rdns", os.path.join(data, "rdns.csv"),
        "--dictionary", os.path.join(data, "dictionary.txt"),
        "--out", str(out),
    )
    assert rc == 0
    ds = models.load_feature_csv(out / "features.csv")
    assert ds.X[:, features.FEATURE_NAMES.index("unique_ccode")].max() > 0


# ----------------------------------------------------------------- train


def test_train_requires_exactly_one_of_params_or_grid(cli_corpus, tmp_path, capsys):
    base = (
        "train", "--features", str(cli_corpus.features_path),
        "--model-kind", "decision_tree",
    )
    assert run_cli(*base, "--out", str(tmp_path / "a")) == 1
    assert run_cli(
        *base, "--params", "{}", "--grid", "[{}]", "--out", str(tmp_path / "b")
    ) == 1
    assert "error: config-invalid:" in capsys.readouterr().err


def test_train_reruns_identically(cli_corpus, tmp_path):
    out = tmp_path / "retrain"
    rc = run_cli(
        "train", "--features", str(cli_corpus.features_path),
        "--model-kind", "random_forest",
        "--params", json.dumps({"criterion": "gini", "max_depth": 8, "n_estimators": 15}),
        "--seed", "7", "--out", str(out),
    )
    assert rc == 0
    assert read(out / "model.json") == read(cli_corpus.model_path)


def test_train_params_from_file(cli_corpus, tmp_path):
    params_path = tmp_path / "params.json"
    params_path.write_text(json.dumps({"criterion": "gini", "max_depth": 8, "n_estimators": 15}))
    out = tmp_path / "filetrain"
    rc = run_cli(
        "train", "--features", str(cli_corpus.features_path),
        "--model-kind", "random_forest", "--params", str(params_path),
        "--seed", "7", "--out", str(out),
    )
    assert rc == 0
    assert read(out / "model.json") == read(cli_corpus.model_path)


def test_train_grid_writes_cv_table(cli_corpus, tmp_path):
    out = tmp_path / "grid"
    rc = run_cli(
        "train", "--features", str(cli_corpus.features_path),
        "--model-kind", "decision_tree",
        "--grid", json.dumps([{"max_depth": 2}, {"max_depth": 3}]),
        "--folds", "2", "--out", str(out),
    )
    assert rc == 0
    lines = read(out / "cv.csv").decode().splitlines()
    assert lines[0] == "params,fold,auc"
    assert len(lines) == 5  # 2 configs x 2 folds
    manifest = read_manifest(out)
    assert manifest["best_params"] in ({"max_depth": 2}, {"max_depth": 3})
    model = models.load_model(out / "model.json")
    assert model.params["max_depth"] == manifest["best_params"]["max_depth"]


def test_train_balance_flag(cli_corpus, tmp_path):
    out = tmp_path / "balanced"
    rc = run_cli(
        "train", "--features", str(cli_corpus.features_path),
        "--model-kind", "knn", "--params", json.dumps({"k": 3}),
        "--balance", "--out", str(out),
    )
    assert rc == 0
    model = models.load_model(out / "model.json")
    assert len(model.rows) == 46  # 23 per class after undersampling
    assert read_manifest(out)["balanced"] is True


@pytest.mark.parametrize(
    "kind,params",
    [
        ("decision_tree", {"max_depth": 3}),
        ("random_forest", {"n_estimators": 3}),
        ("adaboost", {"n_estimators": 3}),
        ("knn", {"k": 3}),
    ],
)
def test_train_every_model_kind(cli_corpus, tmp_path, kind, params):
    out = tmp_path / kind
    rc = run_cli(
        "train", "--features", str(cli_corpus.features_path),
        "--model-kind", kind, "--params", json.dumps(params), "--out", str(out),
    )
    assert rc == 0
    assert models.load_model(out / "model.json").kind == kind


def test_train_rejects_bad_grid_json(cli_corpus, tmp_path, capsys):
    rc = run_cli(
        "train", "--features", str(cli_corpus.features_path),
        "--model-kind", "decision_tree", "--grid", "{oops", "--out", str(tmp_path / "g"),
    )
    assert rc == 1
    assert "error: config-invalid:" in capsys.readouterr().err


# -------------------------------------------------------------- evaluate


@pytest.fixture()
def two_models(cli_corpus, tmp_path):
    rf = tmp_path / "rf.json"
    shutil.copy(cli_corpus.model_path, rf)
    ada_dir = tmp_path / "ada_train"
    rc = run_cli(
        "train", "--features", str(cli_corpus.features_path),
        "--model-kind", "adaboost", "--params", json.dumps({"n_estimators": 10}),
        "--out", str(ada_dir),
    )
    assert rc == 0
    ada = tmp_path / "ada.json"
    shutil.copy(ada_dir / "model.json", ada)
    return rf, ada


def test_evaluate_two_models(cli_corpus, two_models, tmp_path):
    rf, ada = two_models
    out = tmp_path / "eval"
    rc = run_cli(
        "evaluate", "--model", str(rf), "--model", str(ada),
        "--features", str(cli_corpus.features_path), "--out", str(out),
    )
    assert rc == 0
    metrics = json.loads(read(out / "metrics.json"))
    assert metrics["class_counts"] == {"benign": 23, "malicious": 24}
    assert metrics["models"]["rf"]["kind"] == "random_forest"
    assert 0.0 <= metrics["models"]["ada"]["auc"] <= 1.0
    for stem in ("rf", "ada"):
        lines = read(out / f"roc_{stem}.csv").decode().splitlines()
        assert lines[0] == "fpr,tpr"
        assert lines[1] == "0.0,0.0"
        assert lines[-1] == "1.0,1.0"
    root = ET.fromstring(read(out / "roc.svg").decode())
    assert root.tag.endswith("svg")


def test_evaluate_rejects_duplicate_stems(cli_corpus, tmp_path, capsys):
    other = tmp_path / "model.json"
    shutil.copy(cli_corpus.model_path, other)
    rc = run_cli(
        "evaluate", "--model", str(cli_corpus.model_path), "--model", str(other),
        "--features", str(cli_corpus.features_path), "--out", str(tmp_path / "e"),
    )
    assert rc == 1
    assert "error: config-invalid:" in capsys.readouterr().err


def test_evaluate_single_class_fails(cli_corpus, tmp_path, capsys):
    lines = read(cli_corpus.features_path).decode().splitlines()
    benign_only = [lines[0]] + [l for l in lines[1:] if ",benign," in l]
    path = tmp_path / "benign.csv"
    path.write_text("\n".join(benign_only) + "\n")
    rc = run_cli(
        "evaluate", "--model", str(cli_corpus.model_path),
        "--features", str(path), "--out", str(tmp_path / "e"),
    )
    assert rc == 1
    assert "error: single-class-dataset:" in capsys.readouterr().err


# --------------------------------------------------------------- explain


def explain_summary(cli_corpus, out, *extra):
    return run_cli(
        "explain", "--model", str(cli_corpus.model_path),
        "--features", str(cli_corpus.features_path),
        "--mode", "summary", "--samples", "12", "--budget", "128",
        "--bg", "stratified:8", "--out", str(out), *extra,
    )


def test_explain_summary_artifacts(cli_corpus, tmp_path):
    out = tmp_path / "summary"
    assert explain_summary(cli_corpus, out) == 0
    doc = json.loads(read(out / "summary.json"))
    assert len(doc) == 24
    ranks = [entry["mean_abs_phi"] for entry in doc]
    assert ranks == sorted(ranks, reverse=True)
    assert all(len(entry["points"]) == 12 for entry in doc)
    lines = read(out / "attributions.csv").decode().splitlines()
    assert len(lines) == 13
    assert lines[0].split(",")[:3] == ["domain", "base", "output"]
    for line in lines[1:]:
        cells = line.split(",")
        base, output = float(cells[1]), float(cells[2])
        phis = [float(v) for v in cells[3:]]
        assert base + sum(phis) == pytest.approx(output, abs=1e-9)
    root = ET.fromstring(read(out / "summary.svg").decode())
    assert root.tag.endswith("svg")
    assert read_manifest(out)["samples"] == 12


def test_explain_summary_worker_env_invariance(cli_corpus, tmp_path, monkeypatch):
    serial = tmp_path / "serial"
    assert explain_summary(cli_corpus, serial) == 0
    monkeypatch.setenv("DNSXRAY_THREADS", "3")
    threaded = tmp_path / "threaded"
    assert explain_summary(cli_corpus, threaded) == 0
    assert read(threaded / "attributions.csv") == read(serial / "attributions.csv")
    assert read(threaded / "summary.json") == read(serial / "summary.json")


def test_explain_summary_rejects_bad_thread_env(cli_corpus, tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("DNSXRAY_THREADS", "many")
    assert explain_summary(cli_corpus, tmp_path / "x") == 1
    assert "error: config-invalid:" in capsys.readouterr().err


def test_explain_pdp_normalizes_grid_values(cli_corpus, tmp_path):
    out = tmp_path / "pdp"
    rc = run_cli(
        "explain", "--model", str(cli_corpus.model_path),
        "--features", str(cli_corpus.features_path),
        "--mode", "pdp", "--target", "ttl_avg", "--bg", "all:20",
        "--grid-size", "6", "--out", str(out),
    )
    assert rc == 0
    model = models.load_model(cli_corpus.model_path)
    ds = models.load_feature_csv(cli_corpus.features_path)
    bg = explain.build_background(ds, "all:20", 1)
    curve = explain.pdp(model, "ttl_avg", bg, 6, ds.feature_names)
    j = ds.feature_names.index("ttl_avg")
    mean, std = model.normalization
    lines = read(out / "pdp_ttl_avg.csv").decode().splitlines()
    assert lines[0] == "feature,grid_value,mean_output"
    assert len(lines) == 1 + len(curve.grid)
    for line, raw, output in zip(lines[1:], curve.grid, curve.mean_output):
        _, z_text, out_text = line.split(",")
        assert float(z_text) == pytest.approx((raw - mean[j]) / std[j], abs=1e-12)
        assert float(out_text) == pytest.approx(output, abs=1e-12)
    assert os.path.exists(out / "pdp_ttl_avg.svg")


def test_explain_pdp_rejects_unknown_feature(cli_corpus, tmp_path, capsys):
    rc = run_cli(
        "explain", "--model", str(cli_corpus.model_path),
        "--features", str(cli_corpus.features_path),
        "--mode", "pdp", "--target", "nope", "--out", str(tmp_path / "p"),
    )
    assert rc == 1
    assert "error: unknown-feature:" in capsys.readouterr().err


def test_explain_pdp_needs_a_target(cli_corpus, tmp_path):
    rc = run_cli(
        "explain", "--model", str(cli_corpus.model_path),
        "--features", str(cli_corpus.features_path),
        "--mode", "pdp", "--out", str(tmp_path / "p"),
    )
    assert rc == 1


def test_explain_force_artifacts(cli_corpus, tmp_path):
    target = cli_corpus.dga[0]
    out = tmp_path / "force"
    rc = run_cli(
        "explain", "--model", str(cli_corpus.model_path),
        "--features", str(cli_corpus.features_path),
        "--mode", "force", "--target", target, "--budget", "128",
        "--bg", "stratified:8", "--out", str(out),
    )
    assert rc == 0
    doc = json.loads(read(out / f"force_{target}.json"))
    assert doc["domain"] == target
    pushed = sum(p for _, p in doc["malicious_side"]) + sum(p for _, p in doc["benign_side"])
    assert doc["base_value"] + pushed == pytest.approx(doc["model_output"], abs=1e-9)
    assert all(p > 0 for _, p in doc["malicious_side"])
    assert all(p < 0 for _, p in doc["benign_side"])
    assert os.path.exists(out / f"force_{target}.svg")
    lines = read(out / "attributions.csv").decode().splitlines()
    assert len(lines) == 2
    assert lines[1].startswith(target + ",")


def test_explain_force_rejects_unknown_domain(cli_corpus, tmp_path, capsys):
    rc = run_cli(
        "explain", "--model", str(cli_corpus.model_path),
        "--features", str(cli_corpus.features_path),
        "--mode", "force", "--target", "nope.example", "--out", str(tmp_path / "f"),
    )
    assert rc == 1
    assert "error: unknown-domain-target:" in capsys.readouterr().err


def test_explain_checks_feature_name_agreement(cli_corpus, tmp_path, capsys):
    lines = read(cli_corpus.features_path).decode().splitlines()
    header = lines[0].split(",")
    header[5] = "renamed"
    path = tmp_path / "renamed.csv"
    path.write_text("\n".join([",".join(header)] + lines[1:]) + "\n")
    rc = run_cli(
        "explain", "--model", str(cli_corpus.model_path), "--features", str(path),
        "--mode", "summary", "--out", str(tmp_path / "s"),
    )
    assert rc == 1
    assert "error: config-invalid:" in capsys.readouterr().err


# ----------------------------------------------------------------- pairs


def test_pairs_artifacts(cli_corpus, tmp_path):
    out = tmp_path / "pairs"
    rc = run_cli(
        "pairs", "--features", str(cli_corpus.features_path),
        "--pair", "ttl_avg,unique_ips", "--pair", "glob_life_ratio,idle",
        "--out", str(out),
    )
    assert rc == 0
    lines = read(out / "pairs_ttl_avg__unique_ips.csv").decode().splitlines()
    assert lines[0] == "domain,label,ttl_avg,unique_ips"
    assert len(lines) == 48
    assert os.path.exists(out / "pairs_glob_life_ratio__idle.svg")
    root = ET.fromstring(read(out / "pairs_ttl_avg__unique_ips.svg").decode())
    assert root.tag.endswith("svg")


def test_pairs_argument_errors(cli_corpus, tmp_path, capsys):
    base = ("pairs", "--features", str(cli_corpus.features_path))
    assert run_cli(*base, "--out", str(tmp_path / "a")) == 1
    assert run_cli(*base, "--pair", "ttl_avg", "--out", str(tmp_path / "b")) == 1
    assert run_cli(*base, "--pair", "ttl_avg,nope", "--out", str(tmp_path / "c")) == 1
    err = capsys.readouterr().err
    assert "error: config-invalid:" in err
    assert "error: unknown-feature:" in err


# ------------------------------------------------------------------ misc


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        run_cli("--version")
    assert exc.value.code == 0
    assert capsys.readouterr().out.startswith("dnsxray ")


def test_force_rerun_changes_only_the_manifest(cli_corpus, tmp_path):
    out = tmp_path / "stable"
    args = (
        "extract", "--traffic", str(cli_corpus.records_path),
        "--allow", str(cli_corpus.allow_path), "--block", str(cli_corpus.block_path),
        "--out", str(out),
    )
    assert run_cli(*args) == 0
    before = snapshot(out)
    manifest_before = read(out / "manifest.json")
    assert run_cli(*args, "--force") == 0
    assert snapshot(out) == before
    assert read(out / "manifest.json") != manifest_before  # timestamps move
