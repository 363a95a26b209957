"""Ground-truth labeling from allow/block domain lists."""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field

from .errors import FileUnreadable

log = logging.getLogger(__name__)


class Label(enum.Enum):
    BENIGN = "benign"
    MALICIOUS = "malicious"
    UNKNOWN = "unknown"


@dataclass
class DomainLists:
    allow: frozenset[str] = frozenset()
    block: frozenset[str] = frozenset()
    allow_path: str = ""
    block_path: str = ""
    warnings: list[str] = field(default_factory=list)


def _load_entries(path, warnings: list[str]) -> frozenset[str]:
    if path is None:
        return frozenset()
    try:
        fh = open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise FileUnreadable(f"{path}: {exc.strerror}") from exc
    entries = set()
    with fh:
        for line in fh:
            entry = line.split("#", 1)[0].strip()
            if not entry:
                continue
            entry = entry.strip(".").lower()
            if not entry or any(ch.isspace() for ch in entry):
                warnings.append(f"{path}: skipped entry {line.strip()!r}")
                continue
            entries.add(entry)
    if not entries:
        warnings.append(f"{path}: list is empty")
        log.warning("%s: list is empty", path)
    return frozenset(entries)


def load_lists(allow_path, block_path) -> DomainLists:
    """Load allow and block lists.

    Entries are lowercased and deduplicated; ``#`` starts a comment and
    blank lines are ignored.  An empty list is a warning, not an error,
    and a ``None`` path is an empty list without the warning.
    """
    warnings: list[str] = []
    allow = _load_entries(allow_path, warnings)
    block = _load_entries(block_path, warnings)
    return DomainLists(allow, block, str(allow_path), str(block_path), warnings)


def _suffixes(name: str):
    labels = name.split(".")
    for i in range(len(labels)):
        yield ".".join(labels[i:])


def label_domain(name: str, lists: DomainLists) -> Label:
    """Label one domain by suffix walk.

    ``a.b.c`` matches list entries ``a.b.c``, ``b.c`` and ``c``.  A
    blocklist hit wins over any allowlist hit.
    """
    name = name.lower().strip(".")
    hit_allow = False
    for suffix in _suffixes(name):
        if suffix in lists.block:
            return Label.MALICIOUS
        if suffix in lists.allow:
            hit_allow = True
    return Label.BENIGN if hit_allow else Label.UNKNOWN
