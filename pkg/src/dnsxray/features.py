"""Feature extraction over windowed per-domain DNS aggregates.

Every domain seen with qtype A inside a capture window is reduced to a
24-value vector grouped into time, answer, TTL and name features.  The
canonical feature order in :data:`FEATURE_NAMES` is the one contract
every downstream consumer (CSV files, models, explanations) relies on.
"""

from __future__ import annotations

import csv
import math
from collections import namedtuple
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from . import dnswire
from .errors import FileUnreadable, FileUnwritable, ObservationOutOfWindow, SingleLabelDomain
from .ingest import DnsObservation, QType, RType
from .words import WORDS

HOUR = 3600
DAY = 24 * HOUR

FEATURE_NAMES: tuple[str, ...] = (
    "glob_short_lived",
    "glob_life_ratio",
    "daily_similarity",
    "local_numOf_changes",
    "stddev_before_change",
    "idle",
    "popular",
    "unique_ips",
    "unique_ccode",
    "rev_arec",
    "rev_nsrec",
    "rev_asnrec",
    "shared_ips",
    "ttl_avg",
    "ttl_stddev",
    "unique_ttls",
    "ttl_changes",
    "ttl_range1",
    "ttl_range100",
    "ttl_range300",
    "ttl_range900",
    "ttl_rangeinf",
    "num_chars_pct",
    "pct_of_lms",
)

FeatureVector = namedtuple("FeatureVector", FEATURE_NAMES)

UNKNOWN_COUNTRY = "??"


@dataclass(frozen=True)
class FeatureParams:
    """Tunable thresholds of the time and name feature groups."""

    short_life_seconds: int = 3 * DAY
    popular_threshold: int = 10
    cusum_h_sigmas: float = 5.0
    cusum_k_sigmas: float = 0.5
    whole_name: bool = False


@dataclass
class DomainAggregate:
    """Everything extraction needs to know about one domain in one window."""

    name: str
    window_start: int
    window_end: int
    hourly_counts: list[int]
    ips: list[tuple[int, str]]
    ttls: list[tuple[int, int]]
    first_seen: int
    last_seen: int


RdnsEntry = namedtuple("RdnsEntry", ("ptr_name", "has_a", "has_ns", "asn"))


class GeoTable:
    """Longest-prefix CIDR to country-code lookup."""

    def __init__(self, entries: Iterable[tuple[str, str]] = ()):
        self._by_prefix: dict[int, dict[int, str]] = {}
        for cidr, code in entries:
            net, _, plen_text = cidr.partition("/")
            plen = int(plen_text) if plen_text else 32
            if not 0 <= plen <= 32:
                raise ValueError(f"bad prefix length in {cidr!r}")
            mask = 0 if plen == 0 else (0xFFFFFFFF << (32 - plen)) & 0xFFFFFFFF
            key = dnswire.ipv4_to_int(net) & mask
            self._by_prefix.setdefault(plen, {})[key] = code
        self._lengths = sorted(self._by_prefix, reverse=True)

    def lookup(self, ip: str) -> str:
        value = dnswire.ipv4_to_int(ip)
        for plen in self._lengths:
            mask = 0 if plen == 0 else (0xFFFFFFFF << (32 - plen)) & 0xFFFFFFFF
            code = self._by_prefix[plen].get(value & mask)
            if code is not None:
                return code
        return UNKNOWN_COUNTRY

    def __len__(self) -> int:
        return sum(len(d) for d in self._by_prefix.values())


@dataclass
class AuxiliaryTables:
    """Offline lookup context: geolocation, reverse DNS and a word list."""

    geo: GeoTable = field(default_factory=GeoTable)
    rdns: dict[str, RdnsEntry] = field(default_factory=dict)
    dictionary: frozenset[str] = frozenset(WORDS)


def load_geo_csv(path) -> GeoTable:
    """Load ``cidr,country_code`` rows; an optional header row is skipped."""
    entries = []
    for row in _csv_rows(path, 2, header_first_field="cidr"):
        entries.append((row[0], row[1]))
    return GeoTable(entries)


def load_rdns_csv(path) -> dict[str, RdnsEntry]:
    """Load ``ip,ptr_name,has_a,has_ns,asn`` rows (asn may be empty)."""
    table: dict[str, RdnsEntry] = {}
    for row in _csv_rows(path, 5, header_first_field="ip"):
        ip, ptr_name, has_a, has_ns, asn = row
        dnswire.ipv4_to_int(ip)
        table[ip] = RdnsEntry(
            ptr_name or None,
            has_a.strip() == "1",
            has_ns.strip() == "1",
            int(asn) if asn.strip() else None,
        )
    return table


def load_dictionary(path) -> frozenset[str]:
    """Load one word per line, lowercased; words shorter than 3 are dropped."""
    try:
        fh = open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise FileUnreadable(f"{path}: {exc.strerror}") from exc
    with fh:
        return frozenset(
            w for w in (line.strip().lower() for line in fh) if len(w) >= 3
        )


def _csv_rows(path, width: int, header_first_field: str):
    try:
        fh = open(path, "r", encoding="utf-8", newline="")
    except OSError as exc:
        raise FileUnreadable(f"{path}: {exc.strerror}") from exc
    with fh:
        for i, row in enumerate(csv.reader(fh)):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if row[0].lstrip().startswith("#"):
                continue
            if i == 0 and row[0].strip().lower() == header_first_field:
                continue
            if len(row) != width:
                raise ValueError(f"{path}: expected {width} fields, got {len(row)}")
            yield [f.strip() for f in row]


def aggregate(
    observations: Iterable[DnsObservation], window_start: int, window_end: int
) -> dict[str, DomainAggregate]:
    """Group observations into one aggregate per qtype-A domain.

    Hours are half-open bins of the half-open window; an observation
    timed at or past ``window_end`` raises
    :class:`ObservationOutOfWindow`.  IP and TTL series are ordered by
    (timestamp, ip, ttl) so arrival order inside one second never
    changes a downstream feature.
    """
    if window_end <= window_start:
        raise ValueError("window_end must exceed window_start")
    n_bins = -(-(window_end - window_start) // HOUR)
    state: dict[str, list] = {}
    for obs in observations:
        if not window_start <= obs.timestamp < window_end:
            raise ObservationOutOfWindow(
                f"{obs.qname}: ts {obs.timestamp} outside [{window_start}, {window_end})"
            )
        if obs.qtype is not QType.A:
            continue
        entry = state.get(obs.qname)
        if entry is None:
            entry = state[obs.qname] = [[0] * n_bins, obs.timestamp, obs.timestamp, []]
        counts, first, last, triples = entry
        counts[(obs.timestamp - window_start) // HOUR] += 1
        entry[1] = min(first, obs.timestamp)
        entry[2] = max(last, obs.timestamp)
        for ans in obs.answers:
            if ans.rtype is RType.A:
                triples.append((obs.timestamp, dnswire.ipv4_to_int(ans.rdata), ans.ttl, ans.rdata))
    aggregates = {}
    for name, (counts, first, last, triples) in state.items():
        triples.sort(key=lambda t: t[:3])
        aggregates[name] = DomainAggregate(
            name=name,
            window_start=window_start,
            window_end=window_end,
            hourly_counts=counts,
            ips=[(ts, dotted) for ts, _, _, dotted in triples],
            ttls=[(ts, ttl) for ts, _, ttl, _ in triples],
            first_seen=first,
            last_seen=last,
        )
    return aggregates


def cusum_change_points(series: Sequence[float], h_sigmas: float = 5.0, k_sigmas: float = 0.5) -> list[int]:
    """Two-sided CUSUM change-point detection over an hourly series.

    Threshold and drift are ``h_sigmas`` and ``k_sigmas`` times the
    population stddev of the whole series.  The reference level is the
    running mean of the segment since the last detected change, so a
    single level shift is reported once; a constant series reports
    nothing.
    """
    values = [float(v) for v in series]
    n = len(values)
    if n == 0:
        return []
    mean = sum(values) / n
    sigma = math.sqrt(sum((v - mean) ** 2 for v in values) / n)
    if sigma == 0.0:
        return []
    h = h_sigmas * sigma
    k = k_sigmas * sigma
    changes: list[int] = []
    seg_sum = 0.0
    seg_n = 0
    s_hi = s_lo = 0.0
    for i, x in enumerate(values):
        seg_sum += x
        seg_n += 1
        dev = x - seg_sum / seg_n
        s_hi = max(0.0, s_hi + dev - k)
        s_lo = max(0.0, s_lo - dev - k)
        if s_hi > h or s_lo > h:
            changes.append(i)
            seg_sum = 0.0
            seg_n = 0
            s_hi = s_lo = 0.0
    return changes


def _cosine(a: np.ndarray, b: np.ndarray) -> float:
    denom = float(np.linalg.norm(a) * np.linalg.norm(b))
    return float(a @ b) / denom if denom else 0.0


def time_features(agg: DomainAggregate, params: FeatureParams = FeatureParams()) -> tuple[float, ...]:
    """Lifetime, rhythm and change-point features (7 values)."""
    counts = agg.hourly_counts
    window = agg.window_end - agg.window_start
    lifespan = agg.last_seen - agg.first_seen

    short_lived = 1.0 if lifespan < params.short_life_seconds else 0.0
    # A bare instant still counts as one hour of life; capped so a
    # full-window span cannot push the ratio past 1.
    life_ratio = min(1.0, (lifespan + HOUR) / window)

    day_vectors = []
    for start in range(0, len(counts), 24):
        chunk = counts[start : start + 24]
        chunk = chunk + [0] * (24 - len(chunk))
        if any(chunk):
            day_vectors.append(np.asarray(chunk, dtype=float))
    if len(day_vectors) < 2:
        similarity = 0.0
    else:
        sims = [
            _cosine(day_vectors[i], day_vectors[j])
            for i in range(len(day_vectors))
            for j in range(i + 1, len(day_vectors))
        ]
        similarity = float(sum(sims) / len(sims))

    changes = cusum_change_points(counts, params.cusum_h_sigmas, params.cusum_k_sigmas)
    if len(changes) < 2:
        gap_stddev = 0.0
    else:
        gaps = np.diff(np.asarray(changes, dtype=float))
        gap_stddev = float(np.std(gaps))

    lo = (agg.first_seen - agg.window_start) // HOUR
    hi = (agg.last_seen - agg.window_start) // HOUR
    span = counts[lo : hi + 1]
    idle = sum(1 for c in span if c == 0) / len(span)
    popular = sum(1 for c in span if c >= params.popular_threshold) / len(span)

    return (short_lived, life_ratio, similarity, float(len(changes)), gap_stddev, idle, popular)


def build_ip_index(all_aggs: Mapping[str, DomainAggregate]) -> dict[str, set[str]]:
    """Map each IP to the set of domain names it ever answered for."""
    index: dict[str, set[str]] = {}
    for name, agg in all_aggs.items():
        for _, ip in agg.ips:
            index.setdefault(ip, set()).add(name)
    return index


def answer_features(
    agg: DomainAggregate,
    all_aggs: Mapping[str, DomainAggregate],
    aux: AuxiliaryTables,
    ip_index: Optional[dict[str, set[str]]] = None,
) -> tuple[float, ...]:
    """Resolved-IP diversity and reverse-lookup features (6 values)."""
    distinct = sorted({ip for _, ip in agg.ips})
    if not distinct:
        return (0.0, 0.0, 0.0, 0.0, 0.0, 0.0)
    codes = {aux.geo.lookup(ip) for ip in distinct}
    n = len(distinct)
    have_a = have_ns = have_asn = 0
    for ip in distinct:
        entry = aux.rdns.get(ip)
        if entry is None:
            continue
        have_a += entry.has_a
        have_ns += entry.has_ns
        have_asn += entry.asn is not None
    if ip_index is None:
        ip_index = build_ip_index(all_aggs)
    sharers: set[str] = set()
    for ip in distinct:
        sharers.update(ip_index.get(ip, ()))
    sharers.discard(agg.name)
    return (
        float(n),
        float(len(codes)),
        have_a / n,
        have_ns / n,
        have_asn / n,
        float(len(sharers)),
    )


def ttl_features(agg: DomainAggregate) -> tuple[float, ...]:
    """TTL statistics and range histogram (9 values, zeros when empty)."""
    values = [ttl for _, ttl in agg.ttls]
    if not values:
        return (0.0,) * 9
    arr = np.asarray(values, dtype=float)
    n = len(values)
    changes = sum(1 for i in range(1, n) if values[i] != values[i - 1])
    r1 = sum(1 for v in values if v <= 1)
    r100 = sum(1 for v in values if 1 < v <= 100)
    r300 = sum(1 for v in values if 100 < v <= 300)
    r900 = sum(1 for v in values if 300 < v <= 900)
    rinf = sum(1 for v in values if v > 900)
    return (
        float(np.mean(arr)),
        float(np.std(arr)),
        float(len(set(values))),
        float(changes),
        r1 / n,
        r100 / n,
        r300 / n,
        r900 / n,
        rinf / n,
    )


def name_features(
    name: str, aux: AuxiliaryTables, whole_name: bool = False
) -> tuple[float, float]:
    """Digit share and longest dictionary substring share (2 values).

    By default only the second-level label is scored, treating the last
    label as the suffix; ``whole_name`` scores all non-suffix labels
    joined together.
    """
    labels = name.lower().strip(".").split(".")
    if len(labels) < 2:
        raise SingleLabelDomain(name)
    target = "".join(labels[:-1]) if whole_name else labels[-2]
    if not target:
        raise SingleLabelDomain(name)
    digits = sum(1 for ch in target if ch in "0123456789")
    longest = 0
    for length in range(len(target), 2, -1):
        for start in range(0, len(target) - length + 1):
            if target[start : start + length] in aux.dictionary:
                longest = length
                break
        if longest:
            break
    return digits / len(target), longest / len(target)


def extract(
    agg: DomainAggregate,
    all_aggs: Mapping[str, DomainAggregate],
    aux: AuxiliaryTables,
    params: FeatureParams = FeatureParams(),
    ip_index: Optional[dict[str, set[str]]] = None,
) -> FeatureVector:
    """Compute the full 24-value vector for one aggregate."""
    time_part = time_features(agg, params)
    answer_part = answer_features(agg, all_aggs, aux, ip_index)
    ttl_part = ttl_features(agg)
    name_part = name_features(agg.name, aux, params.whole_name)
    return FeatureVector(*(time_part + answer_part + ttl_part + name_part))


def extract_all(
    all_aggs: Mapping[str, DomainAggregate],
    aux: AuxiliaryTables,
    params: FeatureParams = FeatureParams(),
) -> dict[str, FeatureVector]:
    index = build_ip_index(all_aggs)
    return {
        name: extract(all_aggs[name], all_aggs, aux, params, index)
        for name in sorted(all_aggs)
    }


def write_feature_csv(path, rows: Iterable[tuple[str, str, FeatureVector]]) -> None:
    """Write ``domain,label`` plus the 24 canonical feature columns."""
    try:
        fh = open(path, "w", encoding="utf-8", newline="")
    except OSError as exc:
        raise FileUnwritable(f"{path}: {exc.strerror}") from exc
    with fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("domain", "label") + FEATURE_NAMES)
        for domain, label, vector in rows:
            writer.writerow((domain, label) + tuple(repr(float(v)) for v in vector))
