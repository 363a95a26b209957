"""DNS wire format and classic pcap framing.

Shared by the capture ingest path and the traffic synthesizer so both
sides agree bit for bit.  Only the classic microsecond pcap container
with Ethernet link type is supported, and only plain UDP/IPv4 frames
are produced.
"""

from __future__ import annotations

import struct
from typing import Iterable, Iterator

from .errors import FileUnreadable, FileUnwritable, NotAPcap

PCAP_MAGIC = 0xA1B2C3D4
LINKTYPE_ETHERNET = 1

QTYPE_CODES = {"A": 1, "NS": 2, "PTR": 12, "OTHER": 255}
RCODE_CODES = {"NOERROR": 0, "NXDOMAIN": 3, "OTHER": 2}
RR_CODES = {"A": 1, "NS": 2, "PTR": 12}
RR_NAMES = {v: k for k, v in RR_CODES.items()}

# Synthetic endpoints used when writing frames.
SERVER_IP = "198.51.100.53"
DEFAULT_CLIENT_IP = "192.0.2.1"
_DST_MAC = bytes.fromhex("020000000001")
_SRC_MAC = bytes.fromhex("020000000002")


def ipv4_to_int(text: str) -> int:
    parts = text.split(".")
    if len(parts) != 4:
        raise ValueError(f"not an IPv4 address: {text!r}")
    value = 0
    for part in parts:
        if not part.isdigit() or (len(part) > 1 and part[0] == "0") or int(part) > 255:
            raise ValueError(f"not an IPv4 address: {text!r}")
        value = (value << 8) | int(part)
    return value


def int_to_ipv4(value: int) -> str:
    return ".".join(str((value >> shift) & 0xFF) for shift in (24, 16, 8, 0))


def encode_name(name: str) -> bytes:
    out = bytearray()
    for label in name.split("."):
        raw = label.encode("ascii")
        if not 1 <= len(raw) <= 63:
            raise ValueError(f"bad label in {name!r}")
        out.append(len(raw))
        out += raw
    out.append(0)
    return bytes(out)


def decode_name(message: bytes, offset: int) -> tuple[str, int]:
    """Decode a possibly compressed name.

    Returns the lowercase dotted name and the offset just past the name
    in the original (non-pointer) position.
    """
    labels: list[str] = []
    pos = offset
    end = -1
    jumps = 0
    while True:
        if pos >= len(message):
            raise ValueError("truncated name")
        length = message[pos]
        if length == 0:
            pos += 1
            if end < 0:
                end = pos
            break
        if length & 0xC0 == 0xC0:
            if pos + 1 >= len(message):
                raise ValueError("truncated pointer")
            target = ((length & 0x3F) << 8) | message[pos + 1]
            if end < 0:
                end = pos + 2
            jumps += 1
            if jumps > 127:
                raise ValueError("compression loop")
            pos = target
            continue
        if length & 0xC0:
            raise ValueError("reserved label flags")
        raw = message[pos + 1 : pos + 1 + length]
        if len(raw) < length:
            raise ValueError("truncated label")
        labels.append(raw.decode("ascii").lower())
        pos += 1 + length
    if not labels:
        raise ValueError("empty name")
    return ".".join(labels), end


def encode_response(
    txn_id: int,
    qname: str,
    qtype: str,
    rcode: str,
    answers: Iterable[tuple[str, int, str]],
) -> bytes:
    """Build a DNS response message.

    ``answers`` holds (rtype, ttl, rdata) triples and is ignored for
    non-NOERROR responses.  Answer owner names use a compression
    pointer back to the question name.
    """
    answers = list(answers) if rcode == "NOERROR" else []
    flags = 0x8180 | RCODE_CODES[rcode]
    head = struct.pack(">HHHHHH", txn_id & 0xFFFF, flags, 1, len(answers), 0, 0)
    out = bytearray(head)
    out += encode_name(qname)
    out += struct.pack(">HH", QTYPE_CODES[qtype], 1)
    for rtype, ttl, rdata in answers:
        out += struct.pack(">H", 0xC00C)  # pointer to the question name
        rd = (
            struct.pack(">I", ipv4_to_int(rdata))
            if rtype == "A"
            else encode_name(rdata)
        )
        out += struct.pack(">HHIH", RR_CODES[rtype], 1, ttl, len(rd))
        out += rd
    return bytes(out)


def decode_message(payload: bytes):
    """Decode a DNS message.

    Returns ``(is_response, qname, qtype_code, rcode_code, answers)``
    with answers as (rtype, ttl, rdata) triples; raises ``ValueError``
    on any malformed content.
    """
    if len(payload) < 12:
        raise ValueError("short DNS header")
    _, flags, qdcount, ancount, _, _ = struct.unpack(">HHHHHH", payload[:12])
    is_response = bool(flags & 0x8000)
    rcode = flags & 0x000F
    if qdcount < 1:
        raise ValueError("no question")
    qname, pos = decode_name(payload, 12)
    if pos + 4 > len(payload):
        raise ValueError("truncated question")
    (qtype,) = struct.unpack(">H", payload[pos : pos + 2])
    pos += 4
    answers: list[tuple[str, int, str]] = []
    if rcode == 0:
        for _ in range(ancount):
            _, pos = decode_name(payload, pos)
            if pos + 10 > len(payload):
                raise ValueError("truncated answer")
            rrtype, _, ttl, rdlen = struct.unpack(">HHIH", payload[pos : pos + 10])
            pos += 10
            rdata = payload[pos : pos + rdlen]
            if len(rdata) < rdlen:
                raise ValueError("truncated rdata")
            if rrtype == RR_CODES["A"]:
                if rdlen != 4:
                    raise ValueError("bad A rdata length")
                answers.append(("A", _clamp_ttl(ttl), int_to_ipv4(struct.unpack(">I", rdata)[0])))
            elif rrtype in (RR_CODES["NS"], RR_CODES["PTR"]):
                name, _ = decode_name(payload, pos)
                answers.append((RR_NAMES[rrtype], _clamp_ttl(ttl), name))
            pos += rdlen
    return is_response, qname, qtype, rcode, answers


def _clamp_ttl(ttl: int) -> int:
    # TTLs are 31-bit; a set top bit reads as zero.
    return ttl if ttl < 2**31 else 0


def _ip_checksum(header: bytes) -> int:
    total = 0
    for i in range(0, len(header), 2):
        total += (header[i] << 8) | header[i + 1]
    while total >> 16:
        total = (total & 0xFFFF) + (total >> 16)
    return (~total) & 0xFFFF


def wrap_frame(payload: bytes, src_ip: str, dst_ip: str, sport: int, dport: int) -> bytes:
    """Wrap a UDP payload in IPv4 and Ethernet headers."""
    udp = struct.pack(">HHHH", sport, dport, 8 + len(payload), 0) + payload
    ip_len = 20 + len(udp)
    head = struct.pack(
        ">BBHHHBBHII",
        0x45, 0, ip_len, 0, 0, 64, 17, 0,
        ipv4_to_int(src_ip), ipv4_to_int(dst_ip),
    )
    head = head[:10] + struct.pack(">H", _ip_checksum(head)) + head[12:]
    return _DST_MAC + _SRC_MAC + struct.pack(">H", 0x0800) + head + udp


def unwrap_frame(frame: bytes):
    """Strip Ethernet/IPv4/UDP headers down to a DNS payload.

    Returns ``(payload, src_ip, dst_ip)`` for UDP port 53 traffic,
    ``None`` for frames that are well formed but not plain IPv4 UDP/53,
    and raises ``ValueError`` for truncated or inconsistent headers.
    """
    if len(frame) < 14:
        raise ValueError("short Ethernet frame")
    ethertype = struct.unpack(">H", frame[12:14])[0]
    if ethertype != 0x0800:
        return None
    ip = frame[14:]
    if len(ip) < 20:
        raise ValueError("short IP header")
    vihl = ip[0]
    if vihl >> 4 != 4:
        raise ValueError("bad IP version")
    ihl = (vihl & 0x0F) * 4
    if ihl < 20 or len(ip) < ihl:
        raise ValueError("bad IP header length")
    frag = struct.unpack(">H", ip[6:8])[0]
    if frag & 0x3FFF:  # fragments are unsupported
        return None
    if ip[9] != 17:
        return None
    src = int_to_ipv4(struct.unpack(">I", ip[12:16])[0])
    dst = int_to_ipv4(struct.unpack(">I", ip[16:20])[0])
    udp = ip[ihl:]
    if len(udp) < 8:
        raise ValueError("short UDP header")
    sport, dport, udp_len = struct.unpack(">HHH", udp[:6])
    if sport != 53 and dport != 53:
        return None
    if udp_len < 8 or len(udp) < udp_len:
        raise ValueError("bad UDP length")
    return udp[8:udp_len], src, dst


def write_pcap_file(path, packets: Iterable[tuple[int, bytes]]) -> None:
    try:
        fh = open(path, "wb")
    except OSError as exc:
        raise FileUnwritable(f"{path}: {exc.strerror}") from exc
    with fh:
        fh.write(struct.pack("<IHHiIII", PCAP_MAGIC, 2, 4, 0, 0, 65535, LINKTYPE_ETHERNET))
        for ts_sec, frame in packets:
            fh.write(struct.pack("<IIII", ts_sec, 0, len(frame), len(frame)))
            fh.write(frame)


def read_pcap_frames(path) -> Iterator[tuple[int, bytes]]:
    """Iterate (ts_sec, frame) records of a classic pcap file.

    The global header is validated eagerly so open/magic errors raise
    before iteration starts.  A truncated trailing record yields
    ``(ts, None)`` as a malformed marker and ends the stream.
    """
    try:
        fh = open(path, "rb")
    except OSError as exc:
        raise FileUnreadable(f"{path}: {exc.strerror}") from exc
    head = fh.read(24)
    if len(head) < 24:
        fh.close()
        raise NotAPcap(f"{path}: truncated global header")
    magic = struct.unpack("<I", head[:4])[0]
    if magic == PCAP_MAGIC:
        endian = "<"
    elif struct.unpack(">I", head[:4])[0] == PCAP_MAGIC:
        endian = ">"
    else:
        fh.close()
        raise NotAPcap(f"{path}: bad magic 0x{magic:08x}")
    network = struct.unpack(endian + "I", head[20:24])[0]
    if network != LINKTYPE_ETHERNET:
        fh.close()
        raise NotAPcap(f"{path}: unsupported link type {network}")

    def frames():
        with fh:
            while True:
                rec = fh.read(16)
                if not rec:
                    return
                if len(rec) < 16:
                    yield 0, None
                    return
                ts_sec, _, incl_len, _ = struct.unpack(endian + "IIII", rec)
                data = fh.read(incl_len)
                if len(data) < incl_len:
                    yield ts_sec, None
                    return
                yield ts_sec, data

    return frames()
