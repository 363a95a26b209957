"""Shared fixtures: the frozen default scenario and a small CLI corpus."""

import json
import os
import time
from types import SimpleNamespace

import numpy as np
import pytest

from dnsxray import cli, features, ingest, models, synth


@pytest.fixture(scope="session")
def frozen():
    """Default seed-1 scenario taken end to end, shared by slow tests.

    Builds the full dataset plus the stock random forest and AdaBoost
    models on a 30% stratified split. Constructed once per session;
    everything downstream of the fixed seed is deterministic.
    """
    started = time.perf_counter()
    cfg = synth.ScenarioConfig()
    domains = synth.gen_domains(cfg)
    observations = list(ingest.filter_resolved(synth.gen_traffic(cfg, domains)))
    aggregates = features.aggregate(observations, cfg.window_start, cfg.window_end)
    vectors = features.extract_all(aggregates, features.AuxiliaryTables())
    dga_names = {name for name, _ in domains[1]}
    X = np.array([list(v) for v in vectors.values()])
    y = np.array([1 if name in dga_names else 0 for name in vectors])
    dataset = models.Dataset(features.FEATURE_NAMES, X, y, tuple(vectors))
    train, test = models.stratified_split(dataset, 0.3, 1)
    forest = models.train_random_forest(
        train, {"criterion": "entropy", "max_depth": 20, "n_estimators": 125}, 1
    )
    boost = models.train_adaboost(train, {"n_estimators": 175})
    return SimpleNamespace(
        cfg=cfg,
        domains=domains,
        observations=observations,
        dataset=dataset,
        train=train,
        test=test,
        forest=forest,
        boost=boost,
        build_seconds=time.perf_counter() - started,
    )


def run_cli(*argv: str) -> int:
    return cli.main(list(argv))


@pytest.fixture(scope="session")
def cli_corpus(tmp_path_factory):
    """A 50-domain scenario driven entirely through the CLI.

    Yields paths for the generated traffic, labeled feature CSV and a
    small trained forest, so per-subcommand tests can start from any
    stage without regenerating.
    """
    root = tmp_path_factory.mktemp("corpus")
    config_path = root / "scenario.json"
    config_path.write_text(
        json.dumps({"seed": 7, "days": 2, "benign_domains": 25, "dga_domains": 25})
    )
    synth_dir = root / "synth"
    rc = run_cli(
        "synth", "--config", str(config_path), "--out", str(synth_dir), "--pcap"
    )
    assert rc == 0

    allow_path = root / "allow.txt"
    block_path = root / "block.txt"
    benign, dga = [], []
    with open(synth_dir / "truth.csv") as fh:
        next(fh)
        for line in fh:
            domain, label, _ = line.rstrip("\n").split(",")
            (benign if label == "benign" else dga).append(domain)
    # Two benign and one DGA name stay unlisted to exercise UNKNOWN drops.
    allow_path.write_text("".join(f"{d}\n" for d in benign[:-2]))
    block_path.write_text("".join(f"{d}\n" for d in dga[:-1]))

    extract_dir = root / "extract"
    rc = run_cli(
        "extract",
        "--traffic", str(synth_dir / "traffic.records"),
        "--allow", str(allow_path),
        "--block", str(block_path),
        "--out", str(extract_dir),
    )
    assert rc == 0

    train_dir = root / "train"
    rc = run_cli(
        "train",
        "--features", str(extract_dir / "features.csv"),
        "--model-kind", "random_forest",
        "--params", json.dumps({"criterion": "gini", "max_depth": 8, "n_estimators": 15}),
        "--seed", "7",
        "--out", str(train_dir),
    )
    assert rc == 0
    model_path = train_dir / "model.json"
    assert os.path.exists(model_path)

    return SimpleNamespace(
        root=root,
        config_path=config_path,
        synth_dir=synth_dir,
        records_path=synth_dir / "traffic.records",
        pcap_path=synth_dir / "traffic.pcap",
        truth_path=synth_dir / "truth.csv",
        allow_path=allow_path,
        block_path=block_path,
        features_path=extract_dir / "features.csv",
        model_path=model_path,
        benign=benign,
        dga=dga,
    )
