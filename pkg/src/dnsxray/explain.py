"""Shapley-value explanations for trained models.

The kernel estimator evaluates masked inputs against a background set
(interventional masking: present features come from the explained row,
absent ones from each background row in turn) and solves a weighted
least squares with the efficiency constraint built in, so the
attributions always sum to ``model_output - base_value``.  With few
features, or a budget covering every coalition, the estimate is exact.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from . import models as models_mod
from .errors import (
    BudgetTooSmall,
    ConfigInvalid,
    DimensionMismatch,
    TooManyFeatures,
    UnknownFeature,
)

EXACT_FEATURE_LIMIT = 12
DEFAULT_BUDGET = 2048
DEFAULT_PDP_BACKGROUND = "malicious:1000"
DEFAULT_ATTRIBUTION_BACKGROUND = "stratified:200"

# Model evaluations are chunked to keep hybrid matrices around this
# many cells.
_CHUNK_CELLS = 4_000_000


@dataclass
class Attribution:
    domain: str
    base_value: float
    phi: np.ndarray
    model_output: float
    coalitions_used: int


@dataclass
class BackgroundSet:
    rows: np.ndarray
    description: str = ""


@dataclass
class PdpCurve:
    feature: str
    grid: list[float]
    mean_output: list[float]
    expected_feature_value: float
    expected_output: float


@dataclass
class SummaryEntry:
    feature: str
    mean_abs_phi: float
    points: list[tuple[float, float]]  # (phi, raw feature value)


@dataclass
class SummaryTable:
    entries: list[SummaryEntry]  # sorted by mean_abs_phi, descending


@dataclass
class ForceRecord:
    domain: str
    base_value: float
    model_output: float
    malicious_side: list[tuple[str, float]]  # positive phi, |phi| descending
    benign_side: list[tuple[str, float]]  # negative phi, |phi| descending


def as_predict_fn(model) -> Callable[[np.ndarray], np.ndarray]:
    if callable(model):
        return model
    return lambda X: models_mod.predict_proba_batch(model, X)


def _coalition_values(
    predict, x: np.ndarray, bg: np.ndarray, masks: np.ndarray
) -> np.ndarray:
    """Mean model output per coalition mask over the background."""
    n_masks, d = masks.shape
    b = len(bg)
    out = np.empty(n_masks)
    step = max(1, _CHUNK_CELLS // max(1, b * d))
    for lo in range(0, n_masks, step):
        chunk = masks[lo : lo + step]
        hybrids = np.where(chunk[:, None, :], x[None, None, :], bg[None, :, :])
        scores = predict(hybrids.reshape(-1, d))
        out[lo : lo + len(chunk)] = np.asarray(scores, dtype=np.float64).reshape(
            len(chunk), b
        ).mean(axis=1)
    return out


def _kernel_weight(d: int, size: int) -> float:
    return (d - 1) / (math.comb(d, size) * size * (d - size))


def _enumerate_masks(d: int) -> tuple[np.ndarray, np.ndarray]:
    masks = []
    weights = []
    for bits in range(1, 2**d - 1):
        mask = np.array([(bits >> j) & 1 for j in range(d)], dtype=bool)
        masks.append(mask)
        weights.append(_kernel_weight(d, int(mask.sum())))
    return np.asarray(masks, dtype=bool), np.asarray(weights)


def _sample_masks(d: int, budget: int, rng: np.random.Generator):
    """Coalition sample below full enumeration.

    Sizes are consumed outside-in: any size pair (s, d-s) that fits the
    remaining budget is enumerated completely with exact kernel
    weights; the remaining budget is sampled proportionally to the
    per-size kernel mass, and the leftover mass is shared among sampled
    coalitions by their draw counts.
    """
    remaining = budget
    masks: list[np.ndarray] = []
    weights: list[float] = []
    mass = {s: (d - 1) / (s * (d - s)) for s in range(1, d)}
    pending = sorted(mass, key=lambda s: min(s, d - s))
    groups = []
    seen = set()
    for s in pending:
        pair = tuple(sorted({s, d - s}))
        if pair not in seen:
            seen.add(pair)
            groups.append(pair)
    sample_sizes: list[int] = []
    for group in groups:
        count = sum(math.comb(d, s) for s in group)
        if not sample_sizes and count <= remaining:
            for s in group:
                w = _kernel_weight(d, s)
                for combo in _combinations_masks(d, s):
                    masks.append(combo)
                    weights.append(w)
            remaining -= count
        else:
            sample_sizes.extend(group)
    if sample_sizes and remaining > 0:
        probs = np.asarray([mass[s] for s in sample_sizes])
        probs = probs / probs.sum()
        leftover = sum(mass[s] for s in sample_sizes)
        counts: dict[bytes, tuple[np.ndarray, int]] = {}
        draws = rng.choice(len(sample_sizes), size=remaining, p=probs)
        for pick in draws:
            s = sample_sizes[int(pick)]
            mask = np.zeros(d, dtype=bool)
            mask[rng.permutation(d)[:s]] = True
            key = mask.tobytes()
            prev = counts.get(key)
            counts[key] = (mask, (prev[1] if prev else 0) + 1)
        total_draws = remaining
        for mask, count in counts.values():
            masks.append(mask)
            weights.append(leftover * count / total_draws)
    return np.asarray(masks, dtype=bool), np.asarray(weights)


def _combinations_masks(d: int, size: int):
    for combo in itertools.combinations(range(d), size):
        mask = np.zeros(d, dtype=bool)
        mask[list(combo)] = True
        yield mask


def _solve_constrained(masks, weights, values, base, fx) -> np.ndarray:
    """Weighted least squares with the efficiency constraint eliminated.

    The last feature's attribution is substituted by
    ``fx - base - sum(others)``, which makes additivity hold by
    construction.
    """
    d = masks.shape[1]
    if d == 1:
        return np.array([fx - base])
    z = masks.astype(np.float64)
    y = values - base - z[:, -1] * (fx - base)
    A = z[:, :-1] - z[:, -1][:, None]
    sw = np.sqrt(weights)
    phi_rest, *_ = np.linalg.lstsq(A * sw[:, None], y * sw, rcond=None)
    phi = np.empty(d)
    phi[:-1] = phi_rest
    phi[-1] = (fx - base) - phi_rest.sum()
    return phi


def kernel_shap(
    model,
    x: Sequence[float],
    bg: BackgroundSet | np.ndarray,
    budget: int = DEFAULT_BUDGET,
    seed: int = 0,
    domain: str = "",
) -> Attribution:
    """Estimate per-feature Shapley attributions for one row.

    Exact (full enumeration) whenever the feature count is at most
    ``EXACT_FEATURE_LIMIT`` or the budget covers all ``2**d``
    coalitions; otherwise ``budget`` counts coalitions, including the
    empty and full ones, and must be at least ``2 * d + 2``.
    """
    x = np.asarray(x, dtype=np.float64)
    rows = bg.rows if isinstance(bg, BackgroundSet) else np.asarray(bg, dtype=np.float64)
    if rows.ndim != 2 or x.ndim != 1 or rows.shape[1] != len(x):
        raise DimensionMismatch(
            f"x has {x.shape} and background {rows.shape}; need (d,) and (*, d)"
        )
    if len(rows) == 0:
        raise ConfigInvalid("empty background set")
    d = len(x)
    predict = as_predict_fn(model)
    base = float(np.mean(predict(rows)))
    fx = float(predict(x[None, :])[0])
    exact = d <= EXACT_FEATURE_LIMIT or budget >= 2**d
    if not exact and budget < 2 * d + 2:
        raise BudgetTooSmall(f"budget {budget} below {2 * d + 2} for {d} features")
    if d == 1:
        return Attribution(domain, base, np.array([fx - base]), fx, 2)
    if exact:
        masks, weights = _enumerate_masks(d)
        used = 2**d
    else:
        rng = np.random.default_rng(seed)
        masks, weights = _sample_masks(d, budget - 2, rng)
        used = len(masks) + 2
    values = _coalition_values(predict, x, rows, masks)
    phi = _solve_constrained(masks, weights, values, base, fx)
    return Attribution(domain, base, phi, fx, used)


def exact_shapley_oracle(
    model, x: Sequence[float], bg: BackgroundSet | np.ndarray
) -> np.ndarray:
    """Shapley values by direct subset enumeration (reference method).

    Exponential in the feature count; refuses more than
    ``EXACT_FEATURE_LIMIT`` features.
    """
    x = np.asarray(x, dtype=np.float64)
    rows = bg.rows if isinstance(bg, BackgroundSet) else np.asarray(bg, dtype=np.float64)
    d = len(x)
    if d > EXACT_FEATURE_LIMIT:
        raise TooManyFeatures(f"{d} features; oracle allows {EXACT_FEATURE_LIMIT}")
    predict = as_predict_fn(model)
    all_masks = np.zeros((2**d, d), dtype=bool)
    for bits in range(2**d):
        for j in range(d):
            all_masks[bits, j] = (bits >> j) & 1
    values = _coalition_values(predict, x, rows, all_masks)
    fact = [math.factorial(i) for i in range(d + 1)]
    phi = np.zeros(d)
    for j in range(d):
        bit = 1 << j
        for bits in range(2**d):
            if bits & bit:
                continue
            s = bin(bits).count("1")
            weight = fact[s] * fact[d - s - 1] / fact[d]
            phi[j] += weight * (values[bits | bit] - values[bits])
    return phi


def build_background(ds, spec: str = DEFAULT_ATTRIBUTION_BACKGROUND, seed: int = 0) -> BackgroundSet:
    """Select background rows from a dataset.

    ``spec`` is ``kind[:count]`` with kind one of ``malicious``,
    ``benign``, ``stratified`` or ``all``; ``stratified`` draws half
    the count from each class.  Selection is deterministic in the seed
    and preserves dataset order.
    """
    kind, _, count_text = spec.partition(":")
    try:
        count = int(count_text) if count_text else None
    except ValueError:
        raise ConfigInvalid(f"bad background spec {spec!r}") from None
    if count is not None and count < 1:
        raise ConfigInvalid(f"background count must be positive in {spec!r}")
    rng = np.random.default_rng(seed)

    def pick(indices: np.ndarray, limit: Optional[int]) -> np.ndarray:
        if limit is None or len(indices) <= limit:
            return indices
        return np.sort(rng.choice(indices, size=limit, replace=False))

    if kind == "all":
        idx = pick(np.arange(len(ds)), count)
    elif kind == "malicious":
        idx = pick(np.nonzero(ds.y == 1)[0], count)
    elif kind == "benign":
        idx = pick(np.nonzero(ds.y == 0)[0], count)
    elif kind == "stratified":
        half = None if count is None else max(1, count // 2)
        idx = np.sort(
            np.concatenate(
                [
                    pick(np.nonzero(ds.y == 0)[0], half),
                    pick(np.nonzero(ds.y == 1)[0], half),
                ]
            )
        )
    else:
        raise ConfigInvalid(f"bad background spec {spec!r}")
    if len(idx) == 0:
        raise ConfigInvalid(f"background spec {spec!r} selected no rows")
    return BackgroundSet(ds.X[idx], spec)


def attribution_batch(
    model,
    samples,
    bg: BackgroundSet,
    budget: int = DEFAULT_BUDGET,
    seed: int = 0,
    max_workers: int = 1,
) -> list[Attribution]:
    """One attribution per sample row.

    Each sample gets an independent seed, so results do not depend on
    worker count or completion order.
    """
    X = samples.X

    def one(i: int) -> Attribution:
        return kernel_shap(
            model, X[i], bg, budget=budget, seed=seed + i, domain=samples.domains[i]
        )

    if max_workers > 1 and len(X) > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            return list(pool.map(one, range(len(X))))
    return [one(i) for i in range(len(X))]


def summary_table(attributions: Sequence[Attribution], samples) -> SummaryTable:
    feature_names = tuple(samples.feature_names)
    X = samples.X
    phis = np.asarray([a.phi for a in attributions])
    mean_abs = np.abs(phis).mean(axis=0)
    order = sorted(range(len(feature_names)), key=lambda j: (-mean_abs[j], j))
    entries = [
        SummaryEntry(
            feature_names[j],
            float(mean_abs[j]),
            [(float(phis[i, j]), float(X[i, j])) for i in range(len(X))],
        )
        for j in order
    ]
    return SummaryTable(entries)


def summary(
    model,
    samples,
    bg: BackgroundSet,
    budget: int = DEFAULT_BUDGET,
    seed: int = 0,
    max_workers: int = 1,
) -> SummaryTable:
    """Attribution summary over a sample set, ranked by mean |phi|."""
    attributions = attribution_batch(model, samples, bg, budget, seed, max_workers)
    return summary_table(attributions, samples)


def pdp(
    model,
    feature: str,
    bg: BackgroundSet,
    grid_size: int = 20,
    feature_names: Optional[Sequence[str]] = None,
) -> PdpCurve:
    """Partial dependence of the model score on one feature.

    The grid is the deduplicated quantile sweep of the feature over the
    background, so it is strictly increasing.
    """
    names = tuple(feature_names) if feature_names else tuple(getattr(model, "feature_names", ()))
    if feature not in names:
        raise UnknownFeature(feature)
    if grid_size < 2:
        raise ConfigInvalid(f"grid_size must be at least 2, got {grid_size}")
    j = names.index(feature)
    predict = as_predict_fn(model)
    rows = bg.rows
    values = rows[:, j]
    grid = np.unique(np.quantile(values, np.linspace(0.0, 1.0, grid_size)))
    stacked = np.repeat(rows[None, :, :], len(grid), axis=0)
    stacked[:, :, j] = grid[:, None]
    scores = np.asarray(predict(stacked.reshape(-1, rows.shape[1])))
    mean_output = scores.reshape(len(grid), len(rows)).mean(axis=1)
    return PdpCurve(
        feature=feature,
        grid=[float(v) for v in grid],
        mean_output=[float(v) for v in mean_output],
        expected_feature_value=float(values.mean()),
        expected_output=float(np.mean(predict(rows))),
    )


def force(attribution: Attribution, feature_names: Sequence[str]) -> ForceRecord:
    """Split an attribution into malicious- and benign-pushing sides."""
    if len(feature_names) != len(attribution.phi):
        raise DimensionMismatch("feature names do not match attribution size")
    pairs = list(zip(feature_names, (float(v) for v in attribution.phi)))
    malicious = [(n, p) for n, p in pairs if p > 0]
    benign = [(n, p) for n, p in pairs if p < 0]
    key = lambda item: (-abs(item[1]), feature_names.index(item[0]))
    return ForceRecord(
        domain=attribution.domain,
        base_value=attribution.base_value,
        model_output=attribution.model_output,
        malicious_side=sorted(malicious, key=key),
        benign_side=sorted(benign, key=key),
    )
