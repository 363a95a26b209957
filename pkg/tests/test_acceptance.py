"""Acceptance gate: one pass/fail line per criterion (run with -s to see them).

Each test re-states its criterion's tolerance and runtime bound and
checks them end to end; nothing here relaxes what the unit suites pin.
"""

import json
import os
import shutil
import time
from contextlib import contextmanager

import numpy as np
import pytest

from dnsxray import explain, features, ingest, labeling, models, synth

import oracles
from conftest import run_cli

DATA = os.path.join(os.path.dirname(__file__), "data")

CANONICAL_FEATURES = (
    "glob_short_lived", "glob_life_ratio", "daily_similarity",
    "local_numOf_changes", "stddev_before_change", "idle", "popular",
    "unique_ips", "unique_ccode", "rev_arec", "rev_nsrec", "rev_asnrec",
    "shared_ips", "ttl_avg", "ttl_stddev", "unique_ttls", "ttl_changes",
    "ttl_range1", "ttl_range100", "ttl_range300", "ttl_range900",
    "ttl_rangeinf", "num_chars_pct", "pct_of_lms",
)


@contextmanager
def check(label):
    try:
        yield
    except BaseException:
        print(f"FAIL: {label}")
        raise
    print(f"PASS: {label}")


def extract_fixture_rows():
    stream = ingest.filter_resolved(ingest.parse_records(os.path.join(DATA, "traffic.records")))
    observations = list(stream)
    ts = [o.timestamp for o in observations]
    w_start = (min(ts) // 3600) * 3600
    w_end = (max(ts) // 3600) * 3600 + 3600
    aux = features.AuxiliaryTables(
        geo=features.load_geo_csv(os.path.join(DATA, "geo.csv")),
        rdns=features.load_rdns_csv(os.path.join(DATA, "rdns.csv")),
        dictionary=features.load_dictionary(os.path.join(DATA, "dictionary.txt")),
    )
    vectors = features.extract_all(features.aggregate(observations, w_start, w_end), aux)
    lists = labeling.load_lists(os.path.join(DATA, "allow.txt"), os.path.join(DATA, "block.txt"))
    rows = []
    for name, vector in vectors.items():
        verdict = labeling.label_domain(name, lists)
        if verdict is not labeling.Label.UNKNOWN:
            rows.append((name, verdict.value, vector))
    return rows


def test_c01_feature_completeness(tmp_path):
    with check("C1 24 canonical features; golden extraction byte-identical; < 1 s"):
        started = time.perf_counter()
        assert features.FEATURE_NAMES == CANONICAL_FEATURES
        assert len(features.FEATURE_NAMES) == 24
        assert sum(1 for n in features.FEATURE_NAMES if n.startswith("ttl_")) == 9 - 1  # +unique_ttls
        ttl_family = [n for n in features.FEATURE_NAMES if n.startswith("ttl_") or n == "unique_ttls"]
        assert len(ttl_family) == 9

        first = tmp_path / "first.csv"
        second = tmp_path / "second.csv"
        features.write_feature_csv(first, extract_fixture_rows())
        features.write_feature_csv(second, extract_fixture_rows())
        golden = open(os.path.join(DATA, "features_golden.csv"), "rb").read()
        assert first.read_bytes() == second.read_bytes() == golden
        assert time.perf_counter() - started < 1.0


def test_c02_synthetic_detection(frozen):
    with check("C2 frozen scenario: RF AUC >= 0.95, AdaBoost AUC >= 0.90; < 120 s"):
        started = time.perf_counter()
        rf_auc = models.roc(frozen.forest, frozen.test).auc
        ada_auc = models.roc(frozen.boost, frozen.test).auc
        elapsed = frozen.build_seconds + (time.perf_counter() - started)
        assert rf_auc >= 0.95, f"RF AUC {rf_auc}"
        assert ada_auc >= 0.90, f"AdaBoost AUC {ada_auc}"
        assert elapsed < 120.0, f"took {elapsed:.1f}s"


def test_c03_balancing_arithmetic():
    with check("C3 balance 6925/1324 -> 1324/1324 exactly"):
        n = 6925 + 1324
        ds = models.Dataset(
            ("f0",),
            np.arange(n, dtype=np.float64)[:, None],
            np.array([0] * 6925 + [1] * 1324),
            tuple(f"d{i}.example" for i in range(n)),
        )
        out = models.balance(ds, seed=1)
        assert out.class_counts() == (1324, 1324)


def test_c04_shapley_additivity(frozen):
    with check("C4 additivity: exact <= 1e-6; budget 2048 at M=24 <= 1e-2; < 60 s"):
        started = time.perf_counter()
        rng = np.random.default_rng(4)
        X = rng.normal(size=(40, 8))
        y = (X[:, 0] + X[:, 3] > 0).astype(int)
        toy_ds = models.Dataset(
            tuple(f"f{i}" for i in range(8)), X, y,
            tuple(f"d{i}.example" for i in range(40)),
        )
        toy = models.train_random_forest(toy_ds, {"n_estimators": 5, "max_depth": 4}, 4)
        bg = rng.normal(size=(5, 8))
        worst_exact = 0.0
        for i in range(100):
            x = rng.normal(size=8)
            att = explain.kernel_shap(toy, x, bg, domain=f"t{i}")
            assert att.coalitions_used == 2**8
            worst_exact = max(worst_exact, abs(att.base_value + att.phi.sum() - att.model_output))
        assert worst_exact <= 1e-6, f"exact-mode residual {worst_exact}"

        samples = frozen.test.take(np.arange(100))
        bg24 = explain.build_background(frozen.dataset, "stratified:50", 1)
        atts = explain.attribution_batch(frozen.forest, samples, bg24, budget=2048, seed=1)
        worst = max(abs(a.base_value + a.phi.sum() - a.model_output) for a in atts)
        assert all(a.coalitions_used <= 2048 for a in atts)
        assert worst <= 1e-2, f"sampled-mode residual {worst}"
        elapsed = time.perf_counter() - started
        assert elapsed < 60.0, f"took {elapsed:.1f}s"


def test_c05_oracle_equivalence():
    with check("C5 exact kernel == subset-enumeration oracle to 1e-6, M in {1,2,3,5,8}; < 30 s"):
        started = time.perf_counter()
        rng = np.random.default_rng(5)
        checked = 0
        for d in (1, 2, 3, 5, 8):
            for trial in range(3):
                X = rng.normal(size=(30, d))
                y = (X[:, 0] > 0).astype(int)
                if y.min() == y.max():
                    y[0] = 1 - y[0]
                ds = models.Dataset(
                    tuple(f"f{i}" for i in range(d)), X, y,
                    tuple(f"d{i}.example" for i in range(30)),
                )
                kind = ("decision_tree", "random_forest", "adaboost")[trial]
                params = {
                    "decision_tree": {"max_depth": 3},
                    "random_forest": {"n_estimators": 4, "max_depth": 3},
                    "adaboost": {"n_estimators": 4},
                }[kind]
                model = models.train_model(ds, kind, params, seed=d)
                x = rng.normal(size=d)
                bg = rng.normal(size=(4, d))
                att = explain.kernel_shap(model, x, bg)
                ref = explain.exact_shapley_oracle(model, x, bg)
                assert np.abs(att.phi - ref).max() <= 1e-6
                checked += 1
        assert checked >= 10
        assert time.perf_counter() - started < 30.0


def test_c06_auc_oracle():
    with check("C6 trapezoid AUC == concordance within 1e-9 on 1000 sets; hand case 0.75"):
        hand = models.roc_from_scores([0.9, 0.8, 0.7, 0.6], [1, 0, 1, 0])
        assert hand.auc == pytest.approx(0.75, abs=1e-12)
        rng = np.random.default_rng(6)
        for trial in range(1000):
            n = int(rng.integers(2, 40))
            labels = rng.integers(0, 2, size=n)
            if labels.min() == labels.max():
                labels[0] = 1 - labels[0]
            scores = rng.random(size=n)
            if trial % 4 == 0:
                scores = np.round(scores, 1)
            got = models.roc_from_scores(scores, labels).auc
            want = oracles.auc_concordance(list(scores), list(labels))
            assert abs(got - want) <= 1e-9


def test_c07_forest_degeneracy():
    with check("C7 RF(1 tree, no bootstrap, all features) == DT on 500 inputs"):
        rng = np.random.default_rng(7)
        X = rng.normal(size=(60, 5))
        y = rng.integers(0, 2, size=60)
        if y.min() == y.max():
            y[0] = 1 - y[0]
        ds = models.Dataset(
            tuple(f"f{i}" for i in range(5)), X, y,
            tuple(f"d{i}.example" for i in range(60)),
        )
        params = {"criterion": "entropy", "max_depth": 6}
        tree = models.train_decision_tree(ds, params)
        forest = models.train_random_forest(
            ds, {**params, "n_estimators": 1, "bootstrap": False, "max_features": "all"}
        )
        probe = rng.normal(size=(500, 5))
        assert list(models.predict_proba_batch(forest, probe)) == list(
            models.predict_proba_batch(tree, probe)
        )


def test_c08_ttl_bin_property():
    with check("C8 five TTL range fractions sum to 1 +/- 1e-9; empty list all-zero"):
        def ttl_vec(ttls):
            n = max(1, len(ttls))
            agg = features.DomainAggregate(
                name="t.example", window_start=0, window_end=3600,
                hourly_counts=[n], ips=[(0, "10.0.0.1")] * len(ttls),
                ttls=[(0, t) for t in ttls], first_seen=0, last_seen=0,
            )
            return features.ttl_features(agg)

        assert ttl_vec([]) == (0.0,) * 9
        rng = np.random.default_rng(8)
        pool = [0, 1, 2, 60, 100, 101, 300, 301, 900, 901, 3600, 86400, 2**31 - 1]
        for _ in range(1000):
            n = int(rng.integers(1, 50))
            ttls = [int(v) for v in rng.choice(pool, size=n)]
            vec = ttl_vec(ttls)
            assert abs(sum(vec[4:9]) - 1.0) <= 1e-9


def test_c09_ingestion_round_trips(tmp_path):
    with check("C9 records and pcap round-trips preserve 10k observations exactly"):
        cfg = synth.ScenarioConfig(seed=3, days=5, benign_domains=50, dga_domains=50)
        observations = list(synth.gen_traffic(cfg, synth.gen_domains(cfg)))
        assert len(observations) >= 10_000
        records = tmp_path / "t.records"
        synth.write_records(observations, records)
        assert list(ingest.parse_records(records)) == observations
        pcap = tmp_path / "t.pcap"
        synth.write_pcap(observations, pcap)
        assert list(ingest.parse_pcap(pcap)) == observations


def test_c10_explanation_echoes(frozen):
    with check("C10 unique_ips in summary top-5; ttl_changes PDP trends up; "
               "unique_ips=0 pushes malicious"):
        rng = np.random.default_rng(1)
        picked = np.sort(rng.choice(len(frozen.test), size=40, replace=False))
        samples = frozen.test.take(picked)
        bg = explain.build_background(frozen.dataset, "stratified:100", 1)
        table = explain.summary_table(
            explain.attribution_batch(frozen.forest, samples, bg, budget=600, seed=1),
            samples,
        )
        ranked = [entry.feature for entry in table.entries]
        assert ranked.index("unique_ips") < 5, f"unique_ips ranked {ranked.index('unique_ips')}"

        curve = explain.pdp(
            frozen.forest, "ttl_changes",
            explain.build_background(frozen.dataset, "stratified:200", 1),
        )
        grid = np.asarray(curve.grid)
        out = np.asarray(curve.mean_output)
        slope = np.polyfit(grid, out, 1)[0]
        assert slope > 0, f"PDP slope {slope}"
        assert out[-1] > out[0], f"PDP endpoints {out[0]} -> {out[-1]}"

        benign_rows = np.nonzero(frozen.test.y == 0)[0]
        x = frozen.test.X[benign_rows[0]].copy()
        x[list(features.FEATURE_NAMES).index("unique_ips")] = 0.0
        att = explain.kernel_shap(frozen.forest, x, bg, budget=2048, seed=1)
        phi_ui = att.phi[list(features.FEATURE_NAMES).index("unique_ips")]
        assert phi_ui > 0, f"phi(unique_ips) {phi_ui}"


def test_c11_subcommand_determinism(tmp_path):
    with check("C11 every subcommand rerun is byte-identical outside manifest.json"):
        config = tmp_path / "scenario.json"
        config.write_text(json.dumps(
            {"seed": 5, "days": 2, "benign_domains": 12, "dga_domains": 12}
        ))

        def run_twice(*argv):
            dirs = []
            for tag in ("a", "b"):
                out = tmp_path / f"{argv[0]}_{tag}{len(os.listdir(tmp_path))}"
                assert run_cli(*argv, "--out", str(out)) == 0
                dirs.append(out)
            one, two = (
                {
                    name: open(os.path.join(d, name), "rb").read()
                    for name in os.listdir(d)
                    if name != "manifest.json"
                }
                for d in dirs
            )
            assert one == two, f"{argv[0]} artifacts differ"
            return dirs[0]

        synth_dir = run_twice("synth", "--config", str(config), "--pcap")
        benign, dga = [], []
        with open(synth_dir / "truth.csv") as fh:
            next(fh)
            for line in fh:
                domain, label, _ = line.rstrip("\n").split(",")
                (benign if label == "benign" else dga).append(domain)
        allow = tmp_path / "allow.txt"
        block = tmp_path / "block.txt"
        allow.write_text("".join(f"{d}\n" for d in benign))
        block.write_text("".join(f"{d}\n" for d in dga))

        extract_dir = run_twice(
            "extract", "--traffic", str(synth_dir / "traffic.records"),
            "--allow", str(allow), "--block", str(block),
        )
        feats = str(extract_dir / "features.csv")
        train_dir = run_twice(
            "train", "--features", feats, "--model-kind", "random_forest",
            "--params", json.dumps({"n_estimators": 5, "max_depth": 4}),
        )
        model = str(train_dir / "model.json")
        run_twice("evaluate", "--model", model, "--features", feats)
        run_twice(
            "explain", "--model", model, "--features", feats, "--mode", "summary",
            "--samples", "6", "--budget", "96", "--bg", "stratified:6",
        )
        run_twice(
            "explain", "--model", model, "--features", feats, "--mode", "pdp",
            "--target", "ttl_avg", "--bg", "all:12", "--grid-size", "5",
        )
        run_twice(
            "explain", "--model", model, "--features", feats, "--mode", "force",
            "--target", dga[0], "--budget", "96", "--bg", "stratified:6",
        )
        run_twice("pairs", "--features", feats, "--pair", "ttl_avg,unique_ips")
