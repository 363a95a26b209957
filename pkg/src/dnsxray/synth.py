"""Synthetic passive-DNS scenario generator.

Produces labeled benign and algorithmically generated (DGA) domains
plus a resolved-traffic stream over a capture window.  Every random
draw comes from a counter-based generator keyed by ``(seed, stream,
domain index)``, so per-domain streams are independent of generation
order and identical configs yield byte-identical artifacts.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from typing import Iterable, Iterator

import numpy as np

from . import dnswire
from .errors import ConfigInvalid, FileUnreadable, FileUnwritable
from .ingest import AnswerRecord, DnsObservation, QType, RCode, RType, observation_to_record
from .words import WORDS

DAY = 86400
DEFAULT_WINDOW_START = 1_609_459_200  # midnight-aligned epoch

ALNUM_RANDOM = "ALNUM_RANDOM"
NUMERIC_MIX = "NUMERIC_MIX"
WORDLIST_COMBO = "WORDLIST_COMBO"
FAMILY_KINDS = (ALNUM_RANDOM, NUMERIC_MIX, WORDLIST_COMBO)

_BENIGN_SUFFIXES = ("com", "net", "org", "io", "app")
_DGA_SUFFIXES = ("xyz", "top", "info", "biz", "pw")
_COMBO_WORDS = tuple(w for w in WORDS if 4 <= len(w) <= 8)

# Stream tags for the per-domain generator keys.
_TAG_NAME = 0
_TAG_TRAFFIC = 1
_TAG_GLOBAL = 2


@dataclass(frozen=True)
class DgaFamily:
    kind: str
    length_range: tuple[int, int] = (8, 20)
    alphabet: str = "abcdefghijklmnopqrstuvwxyz0123456789"
    wordlist: tuple[str, ...] = _COMBO_WORDS


DEFAULT_FAMILIES = {
    ALNUM_RANDOM: DgaFamily(ALNUM_RANDOM),
    NUMERIC_MIX: DgaFamily(NUMERIC_MIX, length_range=(8, 16)),
    WORDLIST_COMBO: DgaFamily(WORDLIST_COMBO, length_range=(8, 17)),
}


@dataclass(frozen=True)
class ClassPolicy:
    """Per-class traffic shape: TTL policy, IP pool size and query rhythm."""

    ttl_values: tuple[int, ...]
    ttl_change_rate: float
    ip_pool: int
    rate: float
    diurnal_amplitude: float


@dataclass(frozen=True)
class ScenarioConfig:
    seed: int = 1
    days: int = 7
    benign_domains: int = 2000
    dga_domains: int = 2000
    dga_family_mix: tuple[tuple[str, float], ...] = (
        (ALNUM_RANDOM, 0.4),
        (NUMERIC_MIX, 0.3),
        (WORDLIST_COMBO, 0.3),
    )
    # Benign TTL draws repeat 300 so short-TTL benign domains stay common
    # (CDN-style records); the task would be trivial otherwise.
    benign: ClassPolicy = ClassPolicy((300, 300, 3600, 86400), 0.004, 3, 1.6, 0.45)
    dga: ClassPolicy = ClassPolicy((0, 30, 60), 0.5, 48, 1.2, 0.4)
    nxdomain_rate: float = 0.04
    # Share of DGA domains whose queries resolve to nothing (NOERROR with
    # an empty answer section): unregistered candidates being probed.
    dga_unresolved_rate: float = 0.08
    window_start: int = DEFAULT_WINDOW_START

    @property
    def window_end(self) -> int:
        return self.window_start + self.days * DAY


def validate_config(cfg: ScenarioConfig) -> ScenarioConfig:
    if cfg.seed < 0 or cfg.seed >= 2**64:
        raise ConfigInvalid(f"seed out of range: {cfg.seed}")
    if cfg.days < 1:
        raise ConfigInvalid(f"days must be at least 1, got {cfg.days}")
    if cfg.benign_domains < 1 or cfg.dga_domains < 1:
        raise ConfigInvalid("domain counts must be at least 1")
    if not cfg.dga_family_mix:
        raise ConfigInvalid("dga_family_mix is empty")
    total = 0.0
    for kind, weight in cfg.dga_family_mix:
        if kind not in FAMILY_KINDS:
            raise ConfigInvalid(f"unknown DGA family: {kind}")
        if weight < 0:
            raise ConfigInvalid(f"negative weight for {kind}")
        total += weight
    if abs(total - 1.0) > 1e-9:
        raise ConfigInvalid(f"family weights sum to {total!r}, expected 1")
    for policy_name in ("benign", "dga"):
        policy: ClassPolicy = getattr(cfg, policy_name)
        if not policy.ttl_values or any(
            t < 0 or t > 2**31 - 1 for t in policy.ttl_values
        ):
            raise ConfigInvalid(f"{policy_name}: bad ttl_values")
        if not 0.0 <= policy.ttl_change_rate <= 1.0:
            raise ConfigInvalid(f"{policy_name}: ttl_change_rate outside [0, 1]")
        if policy.ip_pool < 1:
            raise ConfigInvalid(f"{policy_name}: ip_pool must be at least 1")
        if policy.rate <= 0:
            raise ConfigInvalid(f"{policy_name}: rate must be positive")
        if not 0.0 <= policy.diurnal_amplitude <= 1.0:
            raise ConfigInvalid(f"{policy_name}: diurnal_amplitude outside [0, 1]")
    if not 0.0 <= cfg.nxdomain_rate <= 1.0:
        raise ConfigInvalid("nxdomain_rate outside [0, 1]")
    if not 0.0 <= cfg.dga_unresolved_rate <= 1.0:
        raise ConfigInvalid("dga_unresolved_rate outside [0, 1]")
    if cfg.window_start < 0:
        raise ConfigInvalid("window_start must be non-negative")
    return cfg


def _as_int(value, key: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigInvalid(f"{key} must be an integer, got {value!r}")
    return value


def _as_float(value, key: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigInvalid(f"{key} must be a number, got {value!r}")
    return float(value)


def _policy_from_dict(obj: dict, base: ClassPolicy, where: str) -> ClassPolicy:
    if not isinstance(obj, dict):
        raise ConfigInvalid(f"{where} must be an object")
    known = {"ttl_values", "ttl_change_rate", "ip_pool", "rate", "diurnal_amplitude"}
    unknown = set(obj) - known
    if unknown:
        raise ConfigInvalid(f"{where}: unknown keys {sorted(unknown)}")
    updates = dict(obj)
    if "ttl_values" in updates:
        values = updates["ttl_values"]
        if not isinstance(values, (list, tuple)):
            raise ConfigInvalid(f"{where}: ttl_values must be a list")
        updates["ttl_values"] = tuple(_as_int(t, f"{where}.ttl_values") for t in values)
    if "ip_pool" in updates:
        updates["ip_pool"] = _as_int(updates["ip_pool"], f"{where}.ip_pool")
    for key in ("ttl_change_rate", "rate", "diurnal_amplitude"):
        if key in updates:
            updates[key] = _as_float(updates[key], f"{where}.{key}")
    return replace(base, **updates)


def config_from_dict(obj: dict, base: ScenarioConfig = ScenarioConfig()) -> ScenarioConfig:
    """Build a config from parsed JSON, validating every key."""
    if not isinstance(obj, dict):
        raise ConfigInvalid("scenario config must be an object")
    known = {
        "seed", "days", "benign_domains", "dga_domains", "dga_family_mix",
        "benign", "dga", "nxdomain_rate", "dga_unresolved_rate", "window_start",
    }
    unknown = set(obj) - known
    if unknown:
        raise ConfigInvalid(f"unknown keys {sorted(unknown)}")
    updates: dict = {}
    for key in ("seed", "days", "benign_domains", "dga_domains", "window_start"):
        if key in obj:
            updates[key] = _as_int(obj[key], key)
    for key in ("nxdomain_rate", "dga_unresolved_rate"):
        if key in obj:
            updates[key] = _as_float(obj[key], key)
    if "dga_family_mix" in obj:
        mix = obj["dga_family_mix"]
        if not isinstance(mix, dict):
            raise ConfigInvalid("dga_family_mix must be an object")
        updates["dga_family_mix"] = tuple(
            (str(kind).upper(), _as_float(weight, f"dga_family_mix.{kind}"))
            for kind, weight in mix.items()
        )
    for side in ("benign", "dga"):
        if side in obj:
            updates[side] = _policy_from_dict(obj[side], getattr(base, side), side)
    try:
        cfg = replace(base, **updates)
    except TypeError as exc:
        raise ConfigInvalid(str(exc)) from exc
    return validate_config(cfg)


def load_scenario_config(path, base: ScenarioConfig = ScenarioConfig()) -> ScenarioConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            obj = json.load(fh)
    except OSError as exc:
        raise FileUnreadable(f"{path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigInvalid(f"{path}: {exc}") from exc
    return config_from_dict(obj, base)


def _rng(seed: int, tag: int, index: int) -> np.random.Generator:
    key = np.array([seed, (tag << 56) | index], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _shared_pools(seed: int) -> tuple[np.ndarray, np.ndarray]:
    rng = _rng(seed, _TAG_GLOBAL, 0)
    hosting = rng.integers(0x0A000000, 0x0B000000, size=64, dtype=np.int64)
    botnet = rng.integers(0x2E000000, 0x2F000000, size=256, dtype=np.int64)
    return hosting, np.unique(botnet)


def _benign_name(rng: np.random.Generator) -> str:
    word = WORDS[int(rng.integers(len(WORDS)))]
    if rng.random() < 0.4:
        word += WORDS[int(rng.integers(len(WORDS)))]
    suffix = _BENIGN_SUFFIXES[int(rng.integers(len(_BENIGN_SUFFIXES)))]
    return f"{word}.{suffix}"


def _dga_name(rng: np.random.Generator, family: DgaFamily) -> str:
    lo, hi = family.length_range
    suffix = _DGA_SUFFIXES[int(rng.integers(len(_DGA_SUFFIXES)))]
    if family.kind == WORDLIST_COMBO:
        pool = family.wordlist
        label = pool[int(rng.integers(len(pool)))] + pool[int(rng.integers(len(pool)))]
        if rng.random() < 0.3:
            label += str(int(rng.integers(10)))
    elif family.kind == NUMERIC_MIX:
        length = int(rng.integers(lo, hi + 1))
        letters = "abcdefghijklmnopqrstuvwxyz"
        chars = [letters[int(i)] for i in rng.integers(26, size=length)]
        # Guarantee the mix: at least one digit and one letter.
        digit_count = 1 + int(rng.integers(max(1, length // 2)))
        positions = rng.permutation(length)[:digit_count]
        for pos in positions[: length - 1]:
            chars[int(pos)] = str(int(rng.integers(10)))
        label = "".join(chars)
    else:
        length = int(rng.integers(lo, hi + 1))
        alphabet = family.alphabet
        label = "".join(alphabet[int(i)] for i in rng.integers(len(alphabet), size=length))
    return f"{label}.{suffix}"


def _pick_family(rng: np.random.Generator, mix: tuple[tuple[str, float], ...]) -> str:
    roll = rng.random()
    acc = 0.0
    for kind, weight in mix:
        acc += weight
        if roll < acc:
            return kind
    return mix[-1][0]


def gen_domains(cfg: ScenarioConfig) -> tuple[list[str], list[tuple[str, str]]]:
    """Draw the scenario's domain names.

    Returns ``(benign_names, dga_names)`` where DGA entries carry their
    family kind.  Names never collide across or within classes.
    """
    validate_config(cfg)
    used: set[str] = set()
    benign: list[str] = []
    for i in range(cfg.benign_domains):
        rng = _rng(cfg.seed, _TAG_NAME, i)
        name = _benign_name(rng)
        while name in used:
            name = _benign_name(rng)
        used.add(name)
        benign.append(name)
    dga: list[tuple[str, str]] = []
    for j in range(cfg.dga_domains):
        rng = _rng(cfg.seed, _TAG_NAME, cfg.benign_domains + j)
        kind = _pick_family(rng, cfg.dga_family_mix)
        family = DEFAULT_FAMILIES[kind]
        name = _dga_name(rng, family)
        while name in used:
            name = _dga_name(rng, family)
        used.add(name)
        dga.append((name, kind))
    return benign, dga


def _diurnal_rates(policy: ClassPolicy, hours: np.ndarray) -> np.ndarray:
    phase = 2.0 * math.pi * ((hours % 24) - 14) / 24.0
    return policy.rate * np.maximum(0.0, 1.0 + policy.diurnal_amplitude * np.sin(phase))


def _ttl_walk(rng, values: tuple[int, ...], change_rate: float, n: int) -> np.ndarray:
    choices = rng.integers(len(values), size=n + 1)
    change = rng.random(n) < change_rate
    ttls = np.empty(n, dtype=np.int64)
    current = values[int(choices[0])]
    for i in range(n):
        if change[i]:
            current = values[int(choices[i + 1])]
        ttls[i] = current
    return ttls


def _answer_ips(rng, pool: np.ndarray, n: int, max_answers: int) -> list[list[int]]:
    size = len(pool)
    extra = rng.random(n) < 0.5 if max_answers > 1 else np.zeros(n, bool)
    third = rng.random(n) < 0.25 if max_answers > 2 else np.zeros(n, bool)
    first = rng.integers(size, size=n)
    second = (first + 1 + rng.integers(max(1, size - 1), size=n)) % size
    third_idx = (first + 1 + rng.integers(max(1, size - 1), size=n)) % size
    out = []
    for i in range(n):
        ips = [int(pool[first[i]])]
        if size > 1 and extra[i]:
            ips.append(int(pool[second[i]]))
            if size > 2 and third[i] and third_idx[i] != second[i]:
                ips.append(int(pool[third_idx[i]]))
        out.append(ips)
    return out


def _client(rng) -> str:
    return f"172.16.{int(rng.integers(16))}.{1 + int(rng.integers(250))}"


def _domain_traffic(
    cfg: ScenarioConfig,
    index: int,
    name: str,
    is_dga: bool,
    hosting: np.ndarray,
    botnet: np.ndarray,
) -> list[DnsObservation]:
    rng = _rng(cfg.seed, _TAG_TRAFFIC, index)
    policy = cfg.dga if is_dga else cfg.benign
    total_hours = cfg.days * 24
    unresolved = is_dga and rng.random() < cfg.dga_unresolved_rate

    if is_dga:
        span_cap = min(47, total_hours - 1)
        span = int(rng.integers(min(6, span_cap), span_cap + 1)) if span_cap > 1 else 1
        start = int(rng.integers(0, total_hours - span + 1))
        hours = np.arange(start, start + span)
        if rng.random() < 0.5:
            pool = rng.choice(botnet, size=min(policy.ip_pool, len(botnet)), replace=False)
        else:
            pool = rng.integers(0x2E000000, 0x2F000000, size=policy.ip_pool, dtype=np.int64)
        max_answers = 3
    else:
        hours = np.arange(total_hours)
        pool_size = 1 + int(rng.integers(policy.ip_pool))
        if rng.random() < 0.15:
            base = int(hosting[int(rng.integers(len(hosting)))])
        else:
            base = int(rng.integers(0x0A000000, 0x0B000000 - 8))
        pool = np.arange(base, base + pool_size, dtype=np.int64)
        max_answers = 2

    counts = rng.poisson(_diurnal_rates(policy, hours))
    if not is_dga:
        # Benign domains stay active every day of the window.
        for d in range(cfg.days):
            lo, hi = d * 24, (d + 1) * 24
            if counts[lo:hi].sum() == 0:
                counts[lo + 12] = 1
    elif counts.sum() == 0:
        counts[0] = 1

    hour_of = np.repeat(hours, counts)
    n = len(hour_of)
    ts = cfg.window_start + hour_of * 3600 + rng.integers(0, 3600, size=n)
    order = np.argsort(ts, kind="stable")
    ts = ts[order]
    ttls = _ttl_walk(rng, policy.ttl_values, policy.ttl_change_rate, n)
    answer_sets = _answer_ips(rng, pool, n, max_answers)
    ns_extra = rng.random(n) < (0.01 if not is_dga else 0.0)
    nx_extra = rng.random(n) < (cfg.nxdomain_rate if is_dga else 0.0)

    out: list[DnsObservation] = []
    for i in range(n):
        ttl = int(ttls[i])
        if unresolved:
            answers = ()
        else:
            answers = tuple(
                AnswerRecord(RType.A, ttl, dnswire.int_to_ipv4(ip)) for ip in answer_sets[i]
            )
        client = _client(rng)
        stamp = int(ts[i])
        out.append(DnsObservation(stamp, name, QType.A, RCode.NOERROR, answers, client))
        if ns_extra[i]:
            ns_answers = (AnswerRecord(RType.NS, ttl, f"ns1.{name}"),)
            out.append(DnsObservation(stamp, name, QType.NS, RCode.NOERROR, ns_answers, client))
        if nx_extra[i]:
            out.append(DnsObservation(stamp, name, QType.A, RCode.NXDOMAIN, (), client))
    return out


def gen_traffic(
    cfg: ScenarioConfig, domains: tuple[list[str], list[tuple[str, str]]]
) -> Iterator[DnsObservation]:
    """Stream the scenario's observations, domain by domain.

    Benign domains query through every day with stable low-churn
    answers; DGA domains burst inside a sub-48-hour span with fluxing
    IP pools and fast-changing low TTLs.  All timestamps fall inside
    ``[window_start, window_end)``.
    """
    validate_config(cfg)
    benign, dga = domains
    hosting, botnet = _shared_pools(cfg.seed)
    for i, name in enumerate(benign):
        yield from _domain_traffic(cfg, i, name, False, hosting, botnet)
    for j, (name, _) in enumerate(dga):
        yield from _domain_traffic(cfg, len(benign) + j, name, True, hosting, botnet)


def write_records(observations: Iterable[DnsObservation], path) -> int:
    """Write a JSON-lines record file; returns the line count."""
    try:
        fh = open(path, "w", encoding="utf-8")
    except OSError as exc:
        raise FileUnwritable(f"{path}: {exc.strerror}") from exc
    count = 0
    with fh:
        for obs in observations:
            fh.write(json.dumps(observation_to_record(obs), separators=(",", ":")))
            fh.write("\n")
            count += 1
    return count


def write_pcap(observations: Iterable[DnsObservation], path) -> int:
    """Write observations as one UDP response frame each; returns the count."""
    count = 0

    def frames():
        nonlocal count
        for i, obs in enumerate(observations):
            payload = dnswire.encode_response(
                i,
                obs.qname,
                obs.qtype.value,
                obs.rcode.value,
                ((a.rtype.value, a.ttl, a.rdata) for a in obs.answers),
            )
            client = obs.client_id or dnswire.DEFAULT_CLIENT_IP
            frame = dnswire.wrap_frame(payload, dnswire.SERVER_IP, client, 53, 53535)
            count += 1
            yield obs.timestamp, frame

    dnswire.write_pcap_file(path, frames())
    return count


def write_truth(domains: tuple[list[str], list[tuple[str, str]]], path) -> int:
    """Write ``domain,label,family`` rows for the generated names."""
    benign, dga = domains
    try:
        fh = open(path, "w", encoding="utf-8")
    except OSError as exc:
        raise FileUnwritable(f"{path}: {exc.strerror}") from exc
    with fh:
        fh.write("domain,label,family\n")
        for name in benign:
            fh.write(f"{name},benign,\n")
        for name, kind in dga:
            fh.write(f"{name},malicious,{kind}\n")
    return len(benign) + len(dga)
