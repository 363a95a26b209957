"""Classifier bench over feature vectors.

Four model families share one vector contract: CART decision trees,
bagged random forests, SAMME-boosted stumps and a weighted k-nearest
neighbour classifier.  Scores from ``predict_proba`` always live in
[0, 1] with 1 meaning malicious; tree models consume raw feature
values while KNN trains and predicts on z-scored rows using statistics
stored with the model.
"""

from __future__ import annotations

import csv
import itertools
import json
import math
from dataclasses import dataclass, field
from typing import ClassVar, Iterable, Optional, Sequence

import numpy as np

from .errors import (
    ConfigInvalid,
    DimensionMismatch,
    FileUnreadable,
    FileUnwritable,
    FoldTooSmall,
    KTooLarge,
    LineParseError,
    SingleClassDataset,
)
from .labeling import Label

MODEL_FILE_VERSION = "1"
MODEL_KINDS = ("decision_tree", "random_forest", "adaboost", "knn")


@dataclass
class Dataset:
    """Labeled feature rows; ``y`` holds 1 for malicious, 0 for benign."""

    feature_names: tuple[str, ...]
    X: np.ndarray
    y: np.ndarray
    domains: tuple[str, ...]
    normalization: Optional[tuple[np.ndarray, np.ndarray]] = None

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.int8)
        if self.X.ndim != 2 or self.X.shape[1] != len(self.feature_names):
            raise DimensionMismatch(
                f"X is {self.X.shape}, expected (*, {len(self.feature_names)})"
            )
        if len(self.y) != len(self.X) or len(self.domains) != len(self.X):
            raise DimensionMismatch("rows, labels and domains must align")

    def __len__(self) -> int:
        return len(self.X)

    def take(self, indices) -> "Dataset":
        indices = np.asarray(indices, dtype=np.int64)
        return Dataset(
            self.feature_names,
            self.X[indices],
            self.y[indices],
            tuple(self.domains[i] for i in indices),
        )

    def class_counts(self) -> tuple[int, int]:
        malicious = int(self.y.sum())
        return len(self.y) - malicious, malicious


def load_feature_csv(path) -> Dataset:
    """Read a ``domain,label,<features...>`` CSV into a dataset."""
    try:
        fh = open(path, "r", encoding="utf-8", newline="")
    except OSError as exc:
        raise FileUnreadable(f"{path}: {exc.strerror}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise LineParseError(1, "empty feature file") from None
        if header[:2] != ["domain", "label"] or len(header) < 3:
            raise LineParseError(1, "header must start with domain,label")
        names = tuple(header[2:])
        rows, labels, domains = [], [], []
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise LineParseError(line_no, f"expected {len(header)} fields")
            if row[1] == "malicious":
                labels.append(1)
            elif row[1] == "benign":
                labels.append(0)
            else:
                raise LineParseError(line_no, f"bad label {row[1]!r}")
            domains.append(row[0])
            try:
                rows.append([float(v) for v in row[2:]])
            except ValueError as exc:
                raise LineParseError(line_no, str(exc)) from None
    X = np.asarray(rows, dtype=np.float64) if rows else np.empty((0, len(names)))
    return Dataset(names, X, np.asarray(labels, dtype=np.int8), tuple(domains))


def compute_normalization(X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    return np.mean(X, axis=0), np.std(X, axis=0)


def apply_normalization(X: np.ndarray, norm: tuple[np.ndarray, np.ndarray]) -> np.ndarray:
    mean, std = norm
    return (X - mean) / np.where(std > 0, std, 1.0)


@dataclass
class TreeNode:
    """CART node; leaves carry a (benign, malicious) probability pair."""

    feature: Optional[int] = None
    threshold: Optional[float] = None
    left: Optional["TreeNode"] = None
    right: Optional["TreeNode"] = None
    proba: Optional[tuple[float, float]] = None

    @property
    def is_leaf(self) -> bool:
        return self.feature is None


def _gini_cost(wt: np.ndarray, w1: np.ndarray) -> np.ndarray:
    # Weighted node impurity contribution wt * (1 - p0^2 - p1^2).
    with np.errstate(divide="ignore", invalid="ignore"):
        cost = 2.0 * w1 * (wt - w1) / wt
    return np.where(wt > 0, cost, 0.0)


def _entropy_cost(wt: np.ndarray, w1: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        p1 = w1 / wt
        p0 = 1.0 - p1
        ent = -np.where(p1 > 0, p1 * np.log2(p1), 0.0) - np.where(
            p0 > 0, p0 * np.log2(p0), 0.0
        )
    return np.where(wt > 0, wt * ent, 0.0)


_CRITERIA = {"gini": _gini_cost, "entropy": _entropy_cost}


def _best_split(X, idx, yy, ww, feats, cost_fn):
    total_w = float(ww.sum())
    total_w1 = float((ww * yy).sum())
    best_cost = math.inf
    best = None
    for f in feats:
        v = X[idx, f]
        order = np.argsort(v, kind="stable")
        sv = v[order]
        if sv[0] == sv[-1]:
            continue
        sw = ww[order]
        sy = yy[order]
        cw = np.cumsum(sw)
        cw1 = np.cumsum(sw * sy)
        pos = np.nonzero(sv[:-1] != sv[1:])[0]
        wl = cw[pos]
        wl1 = cw1[pos]
        cost = (cost_fn(wl, wl1) + cost_fn(total_w - wl, total_w1 - wl1)) / total_w
        k = int(np.argmin(cost))
        if cost[k] < best_cost:
            best_cost = float(cost[k])
            best = (int(f), (float(sv[pos[k]]) + float(sv[pos[k] + 1])) / 2.0)
    return best


def _grow_tree(X, y, w, criterion, max_depth, max_features=None, rng=None) -> TreeNode:
    """Greedy CART growth, iterative so depth never hits the recursion limit.

    Splits choose midpoint thresholds between consecutive distinct
    values, minimizing weight-summed child impurity; ties resolve to
    the lowest feature index, then the lowest threshold.
    """
    cost_fn = _CRITERIA[criterion]
    d = X.shape[1]
    root = TreeNode()
    stack = [(root, np.arange(len(y), dtype=np.int64), 0)]
    while stack:
        node, idx, depth = stack.pop()
        yy = y[idx]
        ww = w[idx]
        wt = float(ww.sum())
        w1 = float((ww * yy).sum())
        node.proba = (0.5, 0.5) if wt == 0 else ((wt - w1) / wt, w1 / wt)
        if (
            len(idx) < 2
            or (yy == yy[0]).all()
            or (max_depth is not None and depth >= max_depth)
        ):
            continue
        if max_features is not None and max_features < d:
            feats = np.sort(rng.choice(d, size=max_features, replace=False))
        else:
            feats = np.arange(d)
        split = _best_split(X, idx, yy, ww, feats, cost_fn)
        if split is None:
            continue
        node.feature, node.threshold = split
        mask = X[idx, node.feature] <= node.threshold
        node.left = TreeNode()
        node.right = TreeNode()
        stack.append((node.left, idx[mask], depth + 1))
        stack.append((node.right, idx[~mask], depth + 1))
    return root


def _compile_tree(root: TreeNode):
    feat, thr, left, right, pmal = [], [], [], [], []
    stack = [(root, -1, False)]
    while stack:
        node, parent, is_right = stack.pop()
        pos = len(feat)
        if parent >= 0:
            (right if is_right else left)[parent] = pos
        if node.is_leaf:
            feat.append(-1)
            thr.append(0.0)
            left.append(-1)
            right.append(-1)
            pmal.append(node.proba[1])
        else:
            feat.append(node.feature)
            thr.append(node.threshold)
            left.append(-1)
            right.append(-1)
            pmal.append(node.proba[1] if node.proba else 0.0)
            stack.append((node.right, pos, True))
            stack.append((node.left, pos, False))
    return (
        np.asarray(feat, dtype=np.int32),
        np.asarray(thr, dtype=np.float64),
        np.asarray(left, dtype=np.int32),
        np.asarray(right, dtype=np.int32),
        np.asarray(pmal, dtype=np.float64),
    )


def _eval_compiled(compiled, X: np.ndarray) -> np.ndarray:
    feat, thr, left, right, pmal = compiled
    idx = np.zeros(len(X), dtype=np.int32)
    rows = np.arange(len(X))
    while True:
        f = feat[idx]
        internal = f >= 0
        if not internal.any():
            break
        vals = X[rows, np.where(internal, f, 0)]
        nxt = np.where(vals <= thr[idx], left[idx], right[idx])
        idx = np.where(internal, nxt, idx)
    return pmal[idx]


def default_max_features(n_features: int) -> int:
    return math.ceil(math.sqrt(n_features))


@dataclass
class DecisionTreeModel:
    kind: ClassVar[str] = "decision_tree"
    root: TreeNode
    params: dict
    feature_names: tuple[str, ...]
    normalization: tuple[np.ndarray, np.ndarray]
    seed: int = 0
    _compiled: Optional[list] = field(default=None, repr=False, compare=False)


@dataclass
class RandomForestModel:
    kind: ClassVar[str] = "random_forest"
    trees: list[TreeNode]
    params: dict
    feature_names: tuple[str, ...]
    normalization: tuple[np.ndarray, np.ndarray]
    seed: int = 0
    _compiled: Optional[list] = field(default=None, repr=False, compare=False)


@dataclass
class AdaBoostModel:
    kind: ClassVar[str] = "adaboost"
    stumps: list[tuple[TreeNode, float]]
    params: dict
    feature_names: tuple[str, ...]
    normalization: tuple[np.ndarray, np.ndarray]
    seed: int = 0
    _compiled: Optional[list] = field(default=None, repr=False, compare=False)


@dataclass
class KnnModel:
    kind: ClassVar[str] = "knn"
    rows: np.ndarray
    labels: np.ndarray
    params: dict
    feature_names: tuple[str, ...]
    normalization: tuple[np.ndarray, np.ndarray]
    seed: int = 0


TrainedModel = DecisionTreeModel | RandomForestModel | AdaBoostModel | KnnModel


def _check_params(params: dict, allowed: dict, kind: str) -> dict:
    unknown = set(params) - set(allowed)
    if unknown:
        raise ConfigInvalid(f"{kind}: unknown params {sorted(unknown)}")
    merged = dict(allowed)
    merged.update(params)
    return merged


def _check_common(ds: Dataset, params: dict, kind: str):
    if params.get("criterion") not in _CRITERIA:
        raise ConfigInvalid(f"{kind}: criterion must be gini or entropy")
    depth = params.get("max_depth")
    if depth is not None and depth < 1:
        raise ConfigInvalid(f"{kind}: max_depth must be at least 1")
    if len(ds) == 0:
        raise SingleClassDataset("empty dataset")


def train_decision_tree(ds: Dataset, params: dict) -> DecisionTreeModel:
    params = _check_params(params, {"criterion": "gini", "max_depth": None}, "decision_tree")
    _check_common(ds, params, "decision_tree")
    w = np.full(len(ds), 1.0 / len(ds))
    root = _grow_tree(ds.X, ds.y, w, params["criterion"], params["max_depth"])
    return DecisionTreeModel(root, params, ds.feature_names, compute_normalization(ds.X))


def train_random_forest(ds: Dataset, params: dict, seed: int = 0) -> RandomForestModel:
    params = _check_params(
        params,
        {
            "criterion": "gini",
            "max_depth": None,
            "n_estimators": 100,
            "bootstrap": True,
            "max_features": "sqrt",
        },
        "random_forest",
    )
    _check_common(ds, params, "random_forest")
    if params["n_estimators"] < 1:
        raise ConfigInvalid("random_forest: n_estimators must be at least 1")
    mf = params["max_features"]
    if mf == "sqrt":
        mf = default_max_features(len(ds.feature_names))
    elif mf == "all" or mf is None:
        mf = len(ds.feature_names)
    if isinstance(mf, bool) or not isinstance(mf, int) or not 1 <= mf <= len(ds.feature_names):
        raise ConfigInvalid(f"random_forest: bad max_features {params['max_features']!r}")
    children = np.random.SeedSequence(seed).spawn(params["n_estimators"])
    trees = []
    w = np.full(len(ds), 1.0 / len(ds))
    for child in children:
        rng = np.random.default_rng(child)
        idx = (
            rng.integers(0, len(ds), len(ds))
            if params["bootstrap"]
            else np.arange(len(ds))
        )
        trees.append(
            _grow_tree(
                ds.X[idx], ds.y[idx], w, params["criterion"], params["max_depth"],
                max_features=mf, rng=rng,
            )
        )
    return RandomForestModel(trees, params, ds.feature_names, compute_normalization(ds.X), seed)


MAX_ALPHA = 35.0


def train_adaboost(ds: Dataset, params: dict) -> AdaBoostModel:
    """SAMME boosting of depth-limited trees (stumps by default).

    With two classes the stage weight is ``ln((1 - err) / err)``;
    misclassified sample weights are multiplied by ``exp(alpha)`` and
    renormalized.  A perfect learner takes a capped alpha and stops the
    run; a learner no better than chance stops it without joining.
    """
    params = _check_params(
        params,
        {"criterion": "gini", "n_estimators": 50, "base_depth": 1},
        "adaboost",
    )
    _check_common(ds, params, "adaboost")
    if params["n_estimators"] < 1:
        raise ConfigInvalid("adaboost: n_estimators must be at least 1")
    if params["base_depth"] < 1:
        raise ConfigInvalid("adaboost: base_depth must be at least 1")
    X, y = ds.X, ds.y
    w = np.full(len(ds), 1.0 / len(ds))
    stumps: list[tuple[TreeNode, float]] = []
    for _ in range(params["n_estimators"]):
        tree = _grow_tree(X, y, w, params["criterion"], params["base_depth"])
        pred = _eval_compiled(_compile_tree(tree), X) >= 0.5
        miss = pred != (y == 1)
        err = float(w[miss].sum())
        if err <= 0.0:
            stumps.append((tree, MAX_ALPHA))
            break
        if err >= 0.5:
            break
        alpha = math.log((1.0 - err) / err)
        stumps.append((tree, alpha))
        w = w * np.exp(alpha * miss)
        w = w / w.sum()
    return AdaBoostModel(stumps, params, ds.feature_names, compute_normalization(ds.X))


def train_knn(ds: Dataset, params: dict) -> KnnModel:
    params = _check_params(params, {"k": 5, "weighting": "distance"}, "knn")
    if params["weighting"] not in ("uniform", "distance"):
        raise ConfigInvalid(f"knn: bad weighting {params['weighting']!r}")
    if params["k"] < 1:
        raise ConfigInvalid("knn: k must be at least 1")
    if params["k"] > len(ds):
        raise KTooLarge(f"k={params['k']} but only {len(ds)} rows")
    norm = compute_normalization(ds.X)
    return KnnModel(apply_normalization(ds.X, norm), ds.y.copy(), params, ds.feature_names, norm)


def train_model(ds: Dataset, kind: str, params: dict, seed: int = 0) -> TrainedModel:
    if kind == "decision_tree":
        return train_decision_tree(ds, params)
    if kind == "random_forest":
        return train_random_forest(ds, params, seed)
    if kind == "adaboost":
        return train_adaboost(ds, params)
    if kind == "knn":
        return train_knn(ds, params)
    raise ConfigInvalid(f"unknown model kind: {kind}")


def _ensure_compiled(model) -> list:
    if model._compiled is None:
        if isinstance(model, DecisionTreeModel):
            roots = [model.root]
        elif isinstance(model, RandomForestModel):
            roots = model.trees
        else:
            roots = [tree for tree, _ in model.stumps]
        model._compiled = [_compile_tree(r) for r in roots]
    return model._compiled


def predict_proba_batch(model: TrainedModel, X: np.ndarray) -> np.ndarray:
    """Malicious scores in [0, 1] for a row matrix."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != len(model.feature_names):
        raise DimensionMismatch(
            f"rows are {X.shape}, model expects (*, {len(model.feature_names)})"
        )
    if isinstance(model, DecisionTreeModel):
        return _eval_compiled(_ensure_compiled(model)[0], X)
    if isinstance(model, RandomForestModel):
        out = np.zeros(len(X))
        for compiled in _ensure_compiled(model):
            out += _eval_compiled(compiled, X)
        return out / len(model.trees)
    if isinstance(model, AdaBoostModel):
        alphas = np.asarray([a for _, a in model.stumps])
        total = float(alphas.sum())
        if total <= 0:
            return np.full(len(X), 0.5)
        out = np.zeros(len(X))
        for compiled, alpha in zip(_ensure_compiled(model), alphas):
            out += alpha * (_eval_compiled(compiled, X) >= 0.5)
        return out / total
    if isinstance(model, KnnModel):
        return _knn_scores(model, X)
    raise ConfigInvalid(f"unknown model type: {type(model).__name__}")


def _knn_scores(model: KnnModel, X: np.ndarray) -> np.ndarray:
    k = model.params["k"]
    weighting = model.params["weighting"]
    Q = apply_normalization(X, model.normalization)
    R = model.rows
    labels = model.labels.astype(np.float64)
    out = np.empty(len(Q))
    # Differences are squared directly: the |q|^2 - 2qR + |R|^2 expansion
    # loses the exact zero that the d = 0 voting rule depends on.
    chunk = max(1, 4_000_000 // max(1, len(R) * R.shape[1]))
    for lo in range(0, len(Q), chunk):
        q = Q[lo : lo + chunk]
        d2 = ((q[:, None, :] - R[None, :, :]) ** 2).sum(axis=2)
        near = np.argsort(d2, axis=1, kind="stable")[:, :k]
        rows = np.arange(len(q))[:, None]
        nd = np.sqrt(d2[rows, near])
        ny = labels[near]
        for i in range(len(q)):
            d = nd[i]
            yv = ny[i]
            zero = d == 0.0
            if weighting == "distance" and zero.any():
                out[lo + i] = float(yv[zero].mean())
            elif weighting == "distance":
                wts = 1.0 / d
                out[lo + i] = float((wts * yv).sum() / wts.sum())
            else:
                out[lo + i] = float(yv.mean())
    return out


def predict_proba(model: TrainedModel, x: Sequence[float]) -> float:
    return float(predict_proba_batch(model, np.asarray(x, dtype=np.float64)[None, :])[0])


def predict_label(model: TrainedModel, x: Sequence[float]) -> Label:
    # Exactly 0.5 resolves to malicious: ties fail closed.
    return Label.MALICIOUS if predict_proba(model, x) >= 0.5 else Label.BENIGN


@dataclass
class RocCurve:
    points: list[tuple[float, float]]
    auc: float


def roc_from_scores(scores: np.ndarray, labels: np.ndarray) -> RocCurve:
    """Threshold-sweep ROC with tied scores collapsed into one step."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    pos = int(labels.sum())
    neg = len(labels) - pos
    if pos == 0 or neg == 0:
        raise SingleClassDataset("ROC needs both classes")
    order = np.argsort(-scores, kind="stable")
    s = scores[order]
    y = labels[order]
    points = [(0.0, 0.0)]
    tp = fp = 0
    i = 0
    n = len(s)
    while i < n:
        j = i
        while j < n and s[j] == s[i]:
            j += 1
        got = int(y[i:j].sum())
        tp += got
        fp += (j - i) - got
        points.append((fp / neg, tp / pos))
        i = j
    auc = 0.0
    for (x1, y1), (x2, y2) in zip(points[:-1], points[1:]):
        auc += (x2 - x1) * (y1 + y2) / 2.0
    return RocCurve(points, auc)


def roc(model: TrainedModel, ds: Dataset) -> RocCurve:
    return roc_from_scores(predict_proba_batch(model, ds.X), ds.y)


def balance(ds: Dataset, seed: int = 0) -> Dataset:
    """Undersample the majority class down to the minority count."""
    benign, malicious = ds.class_counts()
    if benign == 0 or malicious == 0:
        raise SingleClassDataset("balance needs both classes")
    if benign == malicious:
        return ds
    rng = np.random.default_rng(seed)
    majority = 0 if benign > malicious else 1
    keep_count = min(benign, malicious)
    maj_idx = np.nonzero(ds.y == majority)[0]
    min_idx = np.nonzero(ds.y != majority)[0]
    chosen = rng.choice(maj_idx, size=keep_count, replace=False)
    return ds.take(np.sort(np.concatenate([min_idx, chosen])))


def stratified_split(ds: Dataset, test_fraction: float = 0.3, seed: int = 0):
    """Split into (train, test) preserving class shares."""
    if not 0.0 < test_fraction < 1.0:
        raise ConfigInvalid(f"test_fraction outside (0, 1): {test_fraction}")
    rng = np.random.default_rng(seed)
    test_parts = []
    for cls in (0, 1):
        idx = np.nonzero(ds.y == cls)[0]
        if len(idx) == 0:
            raise SingleClassDataset("split needs both classes")
        perm = rng.permutation(idx)
        test_parts.append(perm[: max(1, int(len(idx) * test_fraction))])
    test_idx = np.sort(np.concatenate(test_parts))
    mask = np.ones(len(ds), dtype=bool)
    mask[test_idx] = False
    return ds.take(np.nonzero(mask)[0]), ds.take(test_idx)


def _expand_grid(grid) -> list[dict]:
    if isinstance(grid, dict):
        keys = list(grid)
        points = [dict(zip(keys, combo)) for combo in itertools.product(*(grid[k] for k in keys))]
    else:
        points = [dict(p) for p in grid]
    seen = set()
    unique = []
    for p in points:
        key = json.dumps(p, sort_keys=True)
        if key not in seen:
            seen.add(key)
            unique.append(p)
    if not unique:
        raise ConfigInvalid("empty grid")
    return unique


def grid_search(ds: Dataset, model_kind: str, grid, folds: int = 5, seed: int = 0):
    """Stratified k-fold mean-AUC grid search.

    Returns ``(best_params, table)`` where the table holds one
    ``(params, fold, auc)`` row per evaluation.  Ties prefer fewer
    estimators, then a smaller depth, then earlier grid order.
    """
    if folds < 2:
        raise ConfigInvalid(f"folds must be at least 2, got {folds}")
    benign, malicious = ds.class_counts()
    if min(benign, malicious) < folds:
        raise FoldTooSmall(
            f"{folds} folds need {folds} rows per class, have {benign}/{malicious}"
        )
    rng = np.random.default_rng(seed)
    fold_of = np.empty(len(ds), dtype=np.int64)
    for cls in (0, 1):
        idx = rng.permutation(np.nonzero(ds.y == cls)[0])
        fold_of[idx] = np.arange(len(idx)) % folds
    points = _expand_grid(grid)
    table = []
    means = []
    for params in points:
        aucs = []
        for fold in range(folds):
            train = ds.take(np.nonzero(fold_of != fold)[0])
            val = ds.take(np.nonzero(fold_of == fold)[0])
            model = train_model(train, model_kind, params, seed=seed)
            curve = roc_from_scores(predict_proba_batch(model, val.X), val.y)
            table.append((params, fold, curve.auc))
            aucs.append(curve.auc)
        means.append(sum(aucs) / folds)
    best_i = min(
        range(len(points)),
        key=lambda i: (
            -means[i],
            points[i].get("n_estimators", 1),
            points[i].get("max_depth") or math.inf,
            i,
        ),
    )
    return points[best_i], table


def _node_to_dict(node: TreeNode) -> dict:
    if node.is_leaf:
        return {"proba": [node.proba[0], node.proba[1]]}
    return {
        "feature": node.feature,
        "threshold": node.threshold,
        "proba": list(node.proba) if node.proba else None,
        "left": _node_to_dict(node.left),
        "right": _node_to_dict(node.right),
    }


def _node_from_dict(obj: dict) -> TreeNode:
    if "feature" not in obj:
        return TreeNode(proba=tuple(obj["proba"]))
    return TreeNode(
        feature=obj["feature"],
        threshold=obj["threshold"],
        proba=tuple(obj["proba"]) if obj.get("proba") else None,
        left=_node_from_dict(obj["left"]),
        right=_node_from_dict(obj["right"]),
    )


def save_model(model: TrainedModel, path) -> None:
    doc = {
        "version": MODEL_FILE_VERSION,
        "kind": model.kind,
        "params": model.params,
        "normalization": {
            "mean": [float(v) for v in model.normalization[0]],
            "std": [float(v) for v in model.normalization[1]],
        },
        "seed": model.seed,
        "feature_names": list(model.feature_names),
    }
    if isinstance(model, DecisionTreeModel):
        doc["trees"] = [_node_to_dict(model.root)]
    elif isinstance(model, RandomForestModel):
        doc["trees"] = [_node_to_dict(t) for t in model.trees]
    elif isinstance(model, AdaBoostModel):
        doc["stumps"] = [
            {"alpha": alpha, "tree": _node_to_dict(tree)} for tree, alpha in model.stumps
        ]
    elif isinstance(model, KnnModel):
        doc["rows"] = [[float(v) for v in row] for row in model.rows]
        doc["labels"] = [int(v) for v in model.labels]
    else:
        raise ConfigInvalid(f"unknown model type: {type(model).__name__}")
    try:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh)
            fh.write("\n")
    except OSError as exc:
        raise FileUnwritable(f"{path}: {exc.strerror}") from exc


def load_model(path) -> TrainedModel:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise FileUnreadable(f"{path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigInvalid(f"{path}: {exc}") from exc
    if doc.get("version") != MODEL_FILE_VERSION:
        raise ConfigInvalid(f"{path}: unsupported model file version {doc.get('version')!r}")
    norm = (
        np.asarray(doc["normalization"]["mean"], dtype=np.float64),
        np.asarray(doc["normalization"]["std"], dtype=np.float64),
    )
    names = tuple(doc["feature_names"])
    params = doc["params"]
    seed = doc.get("seed", 0)
    kind = doc.get("kind")
    if kind == "decision_tree":
        return DecisionTreeModel(_node_from_dict(doc["trees"][0]), params, names, norm, seed)
    if kind == "random_forest":
        trees = [_node_from_dict(t) for t in doc["trees"]]
        return RandomForestModel(trees, params, names, norm, seed)
    if kind == "adaboost":
        stumps = [(_node_from_dict(s["tree"]), float(s["alpha"])) for s in doc["stumps"]]
        return AdaBoostModel(stumps, params, names, norm, seed)
    if kind == "knn":
        return KnnModel(
            np.asarray(doc["rows"], dtype=np.float64),
            np.asarray(doc["labels"], dtype=np.int8),
            params,
            names,
            norm,
            seed,
        )
    raise ConfigInvalid(f"{path}: unknown model kind {kind!r}")
