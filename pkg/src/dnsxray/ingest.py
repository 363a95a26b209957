"""Passive DNS ingest.

Turns packet captures or newline-delimited JSON record files into
streams of :class:`DnsObservation`.  Parsing is tolerant per item:
malformed packets and unparsable lines are counted, never fatal.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional

from . import dnswire
from .errors import FileUnreadable, LineParseError

MAX_NAME = 253
MAX_LABEL = 63
MAX_TTL = 2**31 - 1


class QType(enum.Enum):
    A = "A"
    NS = "NS"
    PTR = "PTR"
    OTHER = "OTHER"


class RCode(enum.Enum):
    NOERROR = "NOERROR"
    NXDOMAIN = "NXDOMAIN"
    OTHER = "OTHER"


class RType(enum.Enum):
    A = "A"
    NS = "NS"
    PTR = "PTR"


@dataclass(frozen=True)
class AnswerRecord:
    rtype: RType
    ttl: int
    rdata: str


@dataclass(frozen=True)
class DnsObservation:
    """One resolved DNS response, reduced to the fields the features need."""

    timestamp: int
    qname: str
    qtype: QType
    rcode: RCode
    answers: tuple[AnswerRecord, ...] = ()
    client_id: Optional[str] = None


@dataclass
class ParseDiagnostics:
    """Per-run ingest counters."""

    packets: int = 0
    malformed: int = 0
    skipped: int = 0
    line_errors: list[LineParseError] = field(default_factory=list)
    dropped_unresolved: int = 0


def validate_qname(name: str) -> str:
    if not name:
        raise ValueError("empty qname")
    if len(name) > MAX_NAME:
        raise ValueError(f"qname longer than {MAX_NAME} octets")
    if name != name.lower():
        raise ValueError("qname not lowercase")
    for label in name.split("."):
        if not label:
            raise ValueError("empty label")
        if len(label) > MAX_LABEL:
            raise ValueError(f"label longer than {MAX_LABEL} octets")
        if any(ch.isspace() for ch in label):
            raise ValueError("whitespace in label")
    return name


def _validate_answer(rtype: RType, ttl: int, rdata: str) -> AnswerRecord:
    if not 0 <= ttl <= MAX_TTL:
        raise ValueError(f"ttl out of range: {ttl}")
    if rtype is RType.A:
        dnswire.ipv4_to_int(rdata)
    else:
        validate_qname(rdata)
    return AnswerRecord(rtype, ttl, rdata)


def parse_pcap(path, diag: ParseDiagnostics | None = None) -> Iterator[DnsObservation]:
    """Stream observations out of a classic pcap capture.

    Only UDP/53 IPv4 DNS responses become observations; queries and
    non-DNS traffic count as skipped, undecodable packets as malformed.
    Raises :class:`NotAPcap` or :class:`FileUnreadable` eagerly, before
    the first observation is produced.
    """
    frames = dnswire.read_pcap_frames(path)
    diag = diag if diag is not None else ParseDiagnostics()

    def observations():
        for ts_sec, frame in frames:
            if frame is None:
                diag.malformed += 1
                return
            diag.packets += 1
            try:
                unwrapped = dnswire.unwrap_frame(frame)
            except ValueError:
                diag.malformed += 1
                continue
            if unwrapped is None:
                diag.skipped += 1
                continue
            payload, _, dst_ip = unwrapped
            try:
                is_response, qname, qtype_code, rcode_code, answers = dnswire.decode_message(payload)
                if not is_response:
                    diag.skipped += 1
                    continue
                qname = validate_qname(qname.lower())
                obs = DnsObservation(
                    timestamp=ts_sec,
                    qname=qname,
                    qtype=_QTYPE_BY_CODE.get(qtype_code, QType.OTHER),
                    rcode=_RCODE_BY_CODE.get(rcode_code, RCode.OTHER),
                    answers=tuple(
                        _validate_answer(RType[rtype], ttl, rdata)
                        for rtype, ttl, rdata in answers
                    ),
                    client_id=dst_ip,
                )
            except ValueError:
                diag.malformed += 1
                continue
            yield obs

    return observations()


_QTYPE_BY_CODE = {1: QType.A, 2: QType.NS, 12: QType.PTR}
_RCODE_BY_CODE = {0: RCode.NOERROR, 3: RCode.NXDOMAIN}

_RECORD_KEYS = {"ts", "qname", "qtype", "rcode", "answers", "client"}
_ANSWER_KEYS = {"rtype", "ttl", "rdata"}


def _record_to_observation(obj) -> DnsObservation:
    if not isinstance(obj, dict):
        raise ValueError("record is not an object")
    unknown = set(obj) - _RECORD_KEYS
    if unknown:
        raise ValueError(f"unknown fields: {sorted(unknown)}")
    for key in ("ts", "qname", "qtype", "rcode", "answers"):
        if key not in obj:
            raise ValueError(f"missing field: {key}")
    ts = obj["ts"]
    if isinstance(ts, bool) or not isinstance(ts, int) or ts < 0:
        raise ValueError("ts must be a non-negative integer")
    if not isinstance(obj["qname"], str):
        raise ValueError("qname must be a string")
    qname = validate_qname(obj["qname"].lower())
    try:
        qtype = QType(obj["qtype"])
    except ValueError:
        raise ValueError(f"bad qtype: {obj['qtype']!r}") from None
    try:
        rcode = RCode(obj["rcode"])
    except ValueError:
        raise ValueError(f"bad rcode: {obj['rcode']!r}") from None
    raw_answers = obj["answers"]
    if not isinstance(raw_answers, list):
        raise ValueError("answers must be a list")
    if rcode is not RCode.NOERROR and raw_answers:
        raise ValueError("answers present on unresolved response")
    answers = []
    for raw in raw_answers:
        if not isinstance(raw, dict) or set(raw) != _ANSWER_KEYS:
            raise ValueError("bad answer record")
        try:
            rtype = RType(raw["rtype"])
        except ValueError:
            raise ValueError(f"bad rtype: {raw['rtype']!r}") from None
        ttl = raw["ttl"]
        if isinstance(ttl, bool) or not isinstance(ttl, int):
            raise ValueError("ttl must be an integer")
        rdata = raw["rdata"]
        if not isinstance(rdata, str):
            raise ValueError("rdata must be a string")
        answers.append(_validate_answer(rtype, ttl, rdata.lower()))
    client = obj.get("client")
    if client is not None and not isinstance(client, str):
        raise ValueError("client must be a string")
    return DnsObservation(ts, qname, qtype, rcode, tuple(answers), client)


def parse_records(path, diag: ParseDiagnostics | None = None) -> Iterator[DnsObservation]:
    """Stream observations out of a JSON-lines record file.

    Bad lines are collected on ``diag.line_errors`` with their 1-based
    line number and skipped; the stream continues.
    """
    try:
        fh = open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise FileUnreadable(f"{path}: {exc.strerror}") from exc
    diag = diag if diag is not None else ParseDiagnostics()

    def observations():
        with fh:
            for line_no, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    obs = _record_to_observation(json.loads(line))
                except (json.JSONDecodeError, ValueError) as exc:
                    diag.line_errors.append(LineParseError(line_no, str(exc)))
                    continue
                yield obs

    return observations()


def observation_to_record(obs: DnsObservation) -> dict:
    record = {
        "ts": obs.timestamp,
        "qname": obs.qname,
        "qtype": obs.qtype.value,
        "rcode": obs.rcode.value,
        "answers": [
            {"rtype": a.rtype.value, "ttl": a.ttl, "rdata": a.rdata}
            for a in obs.answers
        ],
    }
    if obs.client_id is not None:
        record["client"] = obs.client_id
    return record


def filter_resolved(
    observations: Iterable[DnsObservation], diag: ParseDiagnostics | None = None
) -> Iterator[DnsObservation]:
    """Keep NOERROR observations, counting what was dropped."""
    for obs in observations:
        if obs.rcode is RCode.NOERROR:
            yield obs
        elif diag is not None:
            diag.dropped_unresolved += 1
