"""Command-line entry point.

Subcommands: synth | extract | train | evaluate | explain | pairs.
Every run writes its artifacts plus a manifest.json into --out; nothing
is overwritten unless --force is given.  Errors print one line,
"error: <kind>: <detail>", and exit nonzero.
"""

from __future__ import annotations

import argparse
import dataclasses
import datetime
import json
import logging
import os
import sys
import tempfile

import numpy as np

from . import __version__, explain, features, ingest, labeling, models, svg, synth
from .errors import (
    ConfigInvalid,
    FileUnreadable,
    FileUnwritable,
    OutputExists,
    ToolError,
    UnknownDomainTarget,
    UnknownFeature,
)

log = logging.getLogger("dnsxray")

HOUR = 3600
DAY = 86400


def _resolve_seed(args) -> int:
    return args.seed if args.seed is not None else 1


def _check_outputs(out_dir: str, names: list[str], force: bool) -> None:
    os.makedirs(out_dir, exist_ok=True)
    if force:
        return
    for name in names:
        path = os.path.join(out_dir, name)
        if os.path.exists(path):
            raise OutputExists(f"{path} exists; pass --force to overwrite")


def _write_text(out_dir: str, name: str, content: str) -> None:
    try:
        with open(os.path.join(out_dir, name), "w", encoding="utf-8", newline="") as fh:
            fh.write(content)
    except OSError as exc:
        raise FileUnwritable(f"{name}: {exc}") from exc


def _write_json(out_dir: str, name: str, payload) -> None:
    _write_text(out_dir, name, json.dumps(payload, indent=2) + "\n")


def _write_manifest(out_dir: str, payload: dict) -> None:
    """Manifest lands atomically so partial runs never leave a stale one."""
    data = json.dumps(payload, indent=2) + "\n"
    fd, tmp = tempfile.mkstemp(dir=out_dir, prefix=".manifest-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(data)
        os.replace(tmp, os.path.join(out_dir, "manifest.json"))
    except OSError as exc:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise FileUnwritable(f"manifest.json: {exc}") from exc


def _manifest(args, subcommand: str, inputs: list[str], started: str, outputs: list[str], **extra) -> dict:
    doc = {
        "subcommand": subcommand,
        "inputs": inputs,
        "config": getattr(args, "config", None),
        "seed": _resolve_seed(args),
        "out_dir": args.out,
        "version": __version__,
        "outputs": outputs,
        "started_at": started,
        "finished_at": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }
    doc.update(extra)
    return doc


def _now() -> str:
    return datetime.datetime.now(datetime.timezone.utc).isoformat()


def _load_json_arg(text: str, what: str):
    """Accept inline JSON or a path to a JSON file."""
    if os.path.exists(text):
        try:
            with open(text, "r", encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise FileUnreadable(f"{text}: {exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigInvalid(f"bad {what} JSON: {exc}") from exc


# ---------------------------------------------------------------- synth


def cmd_synth(args) -> None:
    started = _now()
    if args.config:
        cfg = synth.load_scenario_config(args.config)
        if args.seed is not None:
            cfg = dataclasses.replace(cfg, seed=args.seed)
            synth.validate_config(cfg)
    else:
        cfg = synth.ScenarioConfig(seed=_resolve_seed(args))
        synth.validate_config(cfg)
    outputs = ["traffic.records", "truth.csv"]
    if args.pcap:
        outputs.append("traffic.pcap")
    _check_outputs(args.out, outputs + ["manifest.json"], args.force)
    domains = synth.gen_domains(cfg)
    observations = list(synth.gen_traffic(cfg, domains))
    count = synth.write_records(observations, os.path.join(args.out, "traffic.records"))
    synth.write_truth(domains, os.path.join(args.out, "truth.csv"))
    if args.pcap:
        synth.write_pcap(observations, os.path.join(args.out, "traffic.pcap"))
    log.info("synth: %d observations for %d domains", count, len(domains[0]) + len(domains[1]))
    _write_manifest(
        args.out,
        _manifest(args, "synth", [], started, outputs, observations=count),
    )


# -------------------------------------------------------------- extract


def _sniff_pcap(path: str) -> bool:
    try:
        with open(path, "rb") as fh:
            head = fh.read(4)
    except OSError as exc:
        raise FileUnreadable(f"{path}: {exc}") from exc
    return head in (b"\xd4\xc3\xb2\xa1", b"\xa1\xb2\xc3\xd4")


def cmd_extract(args) -> None:
    started = _now()
    _check_outputs(args.out, ["features.csv", "manifest.json"], args.force)
    diag = ingest.ParseDiagnostics()
    if _sniff_pcap(args.traffic):
        stream = ingest.parse_pcap(args.traffic, diag)
    else:
        stream = ingest.parse_records(args.traffic, diag)
    stream = ingest.filter_resolved(stream, diag)

    if args.window_start is None or args.window_end is None:
        observations = list(stream)
        if observations:
            ts_values = [o.timestamp for o in observations]
            window_start = args.window_start
            if window_start is None:
                window_start = (min(ts_values) // HOUR) * HOUR
            window_end = args.window_end
            if window_end is None:
                window_end = (max(ts_values) // HOUR) * HOUR + HOUR
        else:
            window_start = args.window_start or 0
            window_end = args.window_end or HOUR
    else:
        observations = stream
        window_start, window_end = args.window_start, args.window_end
    if args.day is not None:
        if args.day < 1:
            raise ConfigInvalid(f"--day must be >= 1, got {args.day}")
        base = window_start
        window_start = base + (args.day - 1) * DAY
        window_end = min(window_end, base + args.day * DAY)
        observations = (
            o for o in observations if window_start <= o.timestamp < window_end
        )
    if window_end <= window_start:
        raise ConfigInvalid(f"empty window [{window_start}, {window_end})")

    lists = labeling.load_lists(args.allow, args.block)
    geo = features.load_geo_csv(args.geo) if args.geo else features.GeoTable()
    rdns = features.load_rdns_csv(args.rdns) if args.rdns else {}
    dictionary = (
        features.load_dictionary(args.dictionary)
        if args.dictionary
        else frozenset(features.WORDS)
    )
    aux = features.AuxiliaryTables(geo=geo, rdns=rdns, dictionary=dictionary)

    aggregates = features.aggregate(observations, window_start, window_end)
    vectors = features.extract_all(aggregates, aux)
    csv_rows = []
    for name, vector in vectors.items():
        verdict = labeling.label_domain(name, lists)
        if verdict is not labeling.Label.UNKNOWN:
            csv_rows.append((name, verdict.value, vector))
    features.write_feature_csv(os.path.join(args.out, "features.csv"), csv_rows)
    log.info(
        "extract: %d packets, %d malformed, %d skipped, %d unresolved dropped, %d labeled domains",
        diag.packets, diag.malformed, diag.skipped, diag.dropped_unresolved, len(csv_rows),
    )
    for err in diag.line_errors:
        log.warning("record skipped: %s", err.detail)
    for warning in lists.warnings:
        log.warning("%s", warning)
    inputs = [args.traffic] + [
        p for p in (args.allow, args.block, args.geo, args.rdns, args.dictionary) if p
    ]
    _write_manifest(
        args.out,
        _manifest(
            args, "extract", inputs, started, ["features.csv"],
            window=[window_start, window_end], domains=len(csv_rows),
        ),
    )


# ---------------------------------------------------------------- train


def cmd_train(args) -> None:
    started = _now()
    if (args.params is None) == (args.grid is None):
        raise ConfigInvalid("train needs exactly one of --params or --grid")
    seed = _resolve_seed(args)
    outputs = ["model.json"] + (["cv.csv"] if args.grid else [])
    _check_outputs(args.out, outputs + ["manifest.json"], args.force)
    ds = models.load_feature_csv(args.features)
    if args.balance:
        ds = models.balance(ds, seed)
    best_params = None
    if args.grid:
        grid = _load_json_arg(args.grid, "grid")
        best_params, table = models.grid_search(ds, args.model_kind, grid, args.folds, seed)
        lines = [["params", "fold", "auc"]]
        for params, fold, auc in table:
            lines.append([json.dumps(params, sort_keys=True), str(fold), repr(auc)])
        buf = []
        for row in lines:
            buf.append(",".join(_csv_quote(cell) for cell in row))
        _write_text(args.out, "cv.csv", "\n".join(buf) + "\n")
        params = best_params
    else:
        params = _load_json_arg(args.params, "params")
        if not isinstance(params, dict):
            raise ConfigInvalid("params must be a JSON object")
    model = models.train_model(ds, args.model_kind, params, seed)
    models.save_model(model, os.path.join(args.out, "model.json"))
    log.info("train: %s on %d rows", args.model_kind, len(ds))
    extra = {"model_kind": args.model_kind, "balanced": bool(args.balance)}
    if best_params is not None:
        extra["best_params"] = best_params
    _write_manifest(
        args.out,
        _manifest(args, "train", [args.features], started, outputs, **extra),
    )


def _csv_quote(cell: str) -> str:
    if any(ch in cell for ch in ',"\n'):
        return '"' + cell.replace('"', '""') + '"'
    return cell


# ------------------------------------------------------------- evaluate


def _model_stem(path: str) -> str:
    return os.path.splitext(os.path.basename(path))[0]


def cmd_evaluate(args) -> None:
    started = _now()
    stems = [_model_stem(p) for p in args.model]
    if len(set(stems)) != len(stems):
        raise ConfigInvalid("model file names must be distinct")
    outputs = [f"roc_{stem}.csv" for stem in stems] + ["roc.svg", "metrics.json"]
    _check_outputs(args.out, outputs + ["manifest.json"], args.force)
    ds = models.load_feature_csv(args.features)
    benign, malicious = ds.class_counts()
    curves = []
    metrics = {"class_counts": {"benign": benign, "malicious": malicious}, "models": {}}
    for path, stem in zip(args.model, stems):
        model = models.load_model(path)
        curve = models.roc(model, ds)
        rows = ["fpr,tpr"] + [f"{repr(x)},{repr(y)}" for x, y in curve.points]
        _write_text(args.out, f"roc_{stem}.csv", "\n".join(rows) + "\n")
        curves.append((stem, curve.points, curve.auc))
        metrics["models"][stem] = {"kind": model.kind, "auc": curve.auc}
        log.info("evaluate: %s AUC %.4f", stem, curve.auc)
    _write_text(args.out, "roc.svg", svg.roc_chart(curves))
    _write_json(args.out, "metrics.json", metrics)
    _write_manifest(
        args.out,
        _manifest(args, "evaluate", list(args.model) + [args.features], started, outputs),
    )


# -------------------------------------------------------------- explain


def _dataset_and_model(args):
    model = models.load_model(args.model)
    ds = models.load_feature_csv(args.features)
    if tuple(ds.feature_names) != tuple(model.feature_names):
        raise ConfigInvalid("feature csv and model disagree on feature names")
    return model, ds


def _attribution_rows(attributions, names):
    header = ["domain", "base", "output"] + [f"phi_{n}" for n in names]
    lines = [",".join(header)]
    for att in attributions:
        cells = [att.domain, repr(att.base_value), repr(att.model_output)]
        cells += [repr(float(p)) for p in att.phi]
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def _summary_workers() -> int:
    raw = os.environ.get("DNSXRAY_THREADS", "")
    if not raw:
        return 1
    try:
        value = int(raw)
    except ValueError:
        raise ConfigInvalid(f"DNSXRAY_THREADS must be an integer, got {raw!r}")
    return max(1, value)


def cmd_explain(args) -> None:
    started = _now()
    seed = _resolve_seed(args)
    model, ds = _dataset_and_model(args)
    names = list(ds.feature_names)

    if args.mode == "summary":
        outputs = ["summary.json", "summary.svg", "attributions.csv"]
        _check_outputs(args.out, outputs + ["manifest.json"], args.force)
        bg = explain.build_background(ds, args.bg or explain.DEFAULT_ATTRIBUTION_BACKGROUND, seed)
        sample_ds = ds
        if args.samples is not None and args.samples < len(ds):
            rng = np.random.default_rng(seed)
            picked = np.sort(rng.choice(len(ds), size=args.samples, replace=False))
            sample_ds = ds.take(picked)
        attributions = explain.attribution_batch(
            model, sample_ds, bg, args.budget, seed, max_workers=_summary_workers()
        )
        table = explain.summary_table(attributions, sample_ds)
        doc = [
            {
                "feature": entry.feature,
                "mean_abs_phi": entry.mean_abs_phi,
                "points": [[p, v] for p, v in entry.points],
            }
            for entry in table.entries
        ]
        _write_json(args.out, "summary.json", doc)
        top = args.top if args.top is not None else 10
        _write_text(
            args.out,
            "summary.svg",
            svg.summary_chart([(e.feature, e.mean_abs_phi) for e in table.entries[:top]]),
        )
        _write_text(args.out, "attributions.csv", _attribution_rows(attributions, names))
        extra = {"mode": "summary", "background": bg.description, "samples": len(sample_ds)}

    elif args.mode == "pdp":
        if not args.target:
            raise ConfigInvalid("pdp mode needs at least one --target feature")
        outputs = []
        for target in args.target:
            if target not in names:
                raise UnknownFeature(f"no feature named {target!r}")
            outputs += [f"pdp_{target}.csv", f"pdp_{target}.svg"]
        _check_outputs(args.out, outputs + ["manifest.json"], args.force)
        bg = explain.build_background(ds, args.bg or explain.DEFAULT_PDP_BACKGROUND, seed)
        mean, std = model.normalization
        for target in args.target:
            curve = explain.pdp(model, target, bg, args.grid_size, names)
            idx = names.index(target)
            lines = ["feature,grid_value,mean_output"]
            for value, output in zip(curve.grid, curve.mean_output):
                z = (value - mean[idx]) / std[idx]
                lines.append(f"{target},{repr(float(z))},{repr(float(output))}")
            _write_text(args.out, f"pdp_{target}.csv", "\n".join(lines) + "\n")
            z_grid = [(v - mean[idx]) / std[idx] for v in curve.grid]
            _write_text(
                args.out,
                f"pdp_{target}.svg",
                svg.pdp_chart(
                    target,
                    z_grid,
                    list(curve.mean_output),
                    (curve.expected_feature_value - mean[idx]) / std[idx],
                    curve.expected_output,
                    [(v - mean[idx]) / std[idx] for v in bg.rows[:, idx]],
                ),
            )
        extra = {"mode": "pdp", "background": bg.description, "targets": list(args.target)}

    elif args.mode == "force":
        if not args.target:
            raise ConfigInvalid("force mode needs at least one --target domain")
        index = {domain: i for i, domain in enumerate(ds.domains)}
        for target in args.target:
            if target not in index:
                raise UnknownDomainTarget(f"domain {target!r} not in {args.features}")
        outputs = ["attributions.csv"]
        for target in args.target:
            outputs += [f"force_{target}.json", f"force_{target}.svg"]
        _check_outputs(args.out, outputs + ["manifest.json"], args.force)
        bg = explain.build_background(ds, args.bg or explain.DEFAULT_ATTRIBUTION_BACKGROUND, seed)
        attributions = []
        for target in args.target:
            x = ds.X[index[target]]
            att = explain.kernel_shap(model, x, bg, args.budget, seed, domain=target)
            attributions.append(att)
            record = explain.force(att, names)
            doc = {
                "domain": record.domain,
                "base_value": record.base_value,
                "model_output": record.model_output,
                "malicious_side": [[n, p] for n, p in record.malicious_side],
                "benign_side": [[n, p] for n, p in record.benign_side],
            }
            _write_json(args.out, f"force_{target}.json", doc)
            top = args.top if args.top is not None else 10
            _write_text(
                args.out,
                f"force_{target}.svg",
                svg.force_chart(
                    record.domain, record.base_value, record.model_output,
                    record.malicious_side, record.benign_side, top,
                ),
            )
        _write_text(args.out, "attributions.csv", _attribution_rows(attributions, names))
        extra = {"mode": "force", "background": bg.description, "targets": list(args.target)}

    else:  # pragma: no cover - argparse restricts choices
        raise ConfigInvalid(f"unknown mode {args.mode!r}")

    _write_manifest(
        args.out,
        _manifest(args, "explain", [args.model, args.features], started, outputs, **extra),
    )


# ---------------------------------------------------------------- pairs


def cmd_pairs(args) -> None:
    started = _now()
    if not args.pair:
        raise ConfigInvalid("pairs needs at least one --pair f1,f2")
    ds = models.load_feature_csv(args.features)
    names = list(ds.feature_names)
    parsed = []
    for raw in args.pair:
        parts = [p.strip() for p in raw.split(",")]
        if len(parts) != 2 or not all(parts):
            raise ConfigInvalid(f"--pair wants 'f1,f2', got {raw!r}")
        for part in parts:
            if part not in names:
                raise UnknownFeature(f"no feature named {part!r}")
        parsed.append((parts[0], parts[1]))
    outputs = []
    for fx, fy in parsed:
        outputs += [f"pairs_{fx}__{fy}.csv", f"pairs_{fx}__{fy}.svg"]
    _check_outputs(args.out, outputs + ["manifest.json"], args.force)
    for fx, fy in parsed:
        ix, iy = names.index(fx), names.index(fy)
        lines = [f"domain,label,{fx},{fy}"]
        benign_pts, malicious_pts = [], []
        for row in range(len(ds)):
            label = "malicious" if ds.y[row] == 1 else "benign"
            x, y = float(ds.X[row, ix]), float(ds.X[row, iy])
            lines.append(f"{ds.domains[row]},{label},{repr(x)},{repr(y)}")
            (malicious_pts if ds.y[row] == 1 else benign_pts).append((x, y))
        _write_text(args.out, f"pairs_{fx}__{fy}.csv", "\n".join(lines) + "\n")
        _write_text(args.out, f"pairs_{fx}__{fy}.svg", svg.pairs_chart(fx, fy, benign_pts, malicious_pts))
    _write_manifest(
        args.out,
        _manifest(args, "pairs", [args.features], started, outputs,
                  pairs=[list(p) for p in parsed]),
    )


# ----------------------------------------------------------------- main


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dnsxray",
        description="Passive-DNS feature extraction, DGA classification and attribution reports.",
    )
    parser.add_argument("--version", action="version", version=f"dnsxray {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p):
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, default=None, help="RNG seed (default 1)")
        p.add_argument("--force", action="store_true", help="overwrite existing outputs")

    p = sub.add_parser("synth", help="generate a synthetic labeled traffic scenario")
    common(p)
    p.add_argument("--config", help="scenario config JSON path")
    p.add_argument("--pcap", action="store_true", help="also write traffic.pcap")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("extract", help="turn traffic into a labeled feature CSV")
    common(p)
    p.add_argument("--traffic", required=True, help="records or pcap input")
    p.add_argument("--allow", help="allowlist file")
    p.add_argument("--block", help="blocklist file")
    p.add_argument("--geo", help="ip-prefix,country csv")
    p.add_argument("--rdns", help="reverse-dns table csv")
    p.add_argument("--dictionary", help="word list file (default: built-in)")
    p.add_argument("--window-start", type=int, help="unix seconds (default: inferred)")
    p.add_argument("--window-end", type=int, help="unix seconds (default: inferred)")
    p.add_argument("--day", type=int, help="restrict to day N within the window")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("train", help="fit a classifier on a feature CSV")
    common(p)
    p.add_argument("--features", required=True)
    p.add_argument(
        "--model-kind", required=True,
        choices=["decision_tree", "random_forest", "adaboost", "knn"],
    )
    p.add_argument("--params", help="hyperparameter JSON (inline or path)")
    p.add_argument("--grid", help="grid-search space JSON (inline or path)")
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--balance", action="store_true", help="undersample the majority class first")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="score models and plot ROC curves")
    common(p)
    p.add_argument("--model", action="append", required=True, help="model file (repeatable)")
    p.add_argument("--features", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("explain", help="Shapley attributions: summary, pdp or force")
    common(p)
    p.add_argument("--model", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--mode", required=True, choices=["summary", "pdp", "force"])
    p.add_argument("--target", action="append", help="pdp: feature name; force: domain (repeatable)")
    p.add_argument("--bg", help="background spec kind[:count] (defaults per mode)")
    p.add_argument("--budget", type=int, default=explain.DEFAULT_BUDGET)
    p.add_argument("--grid-size", type=int, default=20)
    p.add_argument("--top", type=int, default=None, help="bars to draw (default 10)")
    p.add_argument("--samples", type=int, default=100, help="summary: rows to explain")
    p.set_defaults(func=cmd_explain)

    p = sub.add_parser("pairs", help="per-pair scatter and density plots")
    common(p)
    p.add_argument("--features", required=True)
    p.add_argument("--pair", action="append", help="two feature names, comma separated")
    p.set_defaults(func=cmd_pairs)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO, format="%(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except ToolError as exc:
        print(f"error: {exc.kind}: {exc.detail}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
