"""
Index Store - posting lists for a gram selection

File format (MGIDX v1, UTF-8 text):
    MGIDX v1 <fingerprint> <gram_count>
    #meta {json}
    <gram>\t<id>,<id>,...        one line per gram, sorted by gram
    CRC32 <8 hex digits>         checksum of every preceding byte
"""

import json
import logging
import os
import sys
import zlib
from collections import defaultdict
from dataclasses import dataclass, field

current_dir = os.path.dirname(os.path.abspath(__file__))
project_root = os.path.dirname(current_dir)
sys.path.insert(0, project_root)

from logic.config import CLASS_INSTANTIATION_CAP, MAX_CLASS_POSITIONS
from logic.errors import (
    EmptySelectionError,
    FingerprintMismatchError,
    IndexFormatError,
    InvariantViolation,
)
from logic.lpms import PREFIX_FREE_MODES, verify_prefix_free
from logic.querylang import grams_inside, subquery_windows

logger = logging.getLogger(__name__)

FORMAT_VERSION = "v1"
MAGIC = "MGIDX"


# ============================
# TYPES
# ============================

@dataclass(frozen=True)
class IndexMeta:
    fingerprint: str
    mode: str
    params: dict
    record_count: int
    total_chars: int
    total_postings: int


@dataclass(frozen=True)
class IndexHit:
    ids: frozenset
    grams_used: tuple
    is_hit = True


@dataclass(frozen=True)
class FullScan:
    reason: str
    is_hit = False


@dataclass(frozen=True)
class IndexArtifact:
    grams: tuple
    postings: dict
    meta: IndexMeta
    _sets: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def lengths(self):
        return sorted({len(g) for g in self.grams})

    @property
    def posting_size(self):
        return self.meta.total_postings

    def posting_set(self, g):
        if g not in self._sets:
            self._sets[g] = frozenset(self.postings[g])
        return self._sets[g]

    def candidates(self, sq, min_len=1, corpus_fingerprint=None, single_gram=False,
                   max_class_positions=MAX_CLASS_POSITIONS, cap=CLASS_INSTANTIATION_CAP):
        return candidates(self, sq, min_len, corpus_fingerprint, single_gram,
                          max_class_positions, cap)


# ============================
# BUILD
# ============================

def build_index(corpus, sel):
    """
    Posting lists for every selected gram, from one pass over the corpus

    Raises:
        EmptySelectionError: the selection has no grams
        InvariantViolation: a prefix-free selection breaks the size bound
    """
    if not sel.grams:
        raise EmptySelectionError("cannot index an empty selection")

    wanted = set(sel.grams)
    lengths = sorted({len(g) for g in wanted})
    postings = defaultdict(list)
    for rid, text in enumerate(corpus.records):
        for g in grams_inside(text, wanted, lengths):
            postings[g].append(rid)

    grams = tuple(sorted(wanted))
    postings = {g: tuple(postings.get(g, ())) for g in grams}
    total = sum(len(ids) for ids in postings.values())

    if sel.mode in PREFIX_FREE_MODES:
        check = verify_prefix_free(grams)
        if not check.ok:
            raise InvariantViolation(f"{sel.mode} selection is not prefix-free: {check.pair}")
        # a prefix-free set starts at most one occurrence at each character position
        if total > corpus.total_chars:
            raise InvariantViolation(
                f"{total} posting entries exceed the {corpus.total_chars} character positions"
            )

    meta = IndexMeta(
        fingerprint=corpus.fingerprint,
        mode=sel.mode,
        params=dict(sel.params),
        record_count=len(corpus),
        total_chars=corpus.total_chars,
        total_postings=total,
    )
    logger.debug("indexed %d grams with %d postings", len(grams), total)
    return IndexArtifact(grams, postings, meta)


# ============================
# CANDIDATES
# ============================

def candidates(index, sq, min_len=1, corpus_fingerprint=None, single_gram=False,
               max_class_positions=MAX_CLASS_POSITIONS, cap=CLASS_INSTANTIATION_CAP):
    """
    Candidate records for a sub-query

    Inside one instantiation the postings of every indexed gram it contains are
    intersected; instantiations of a class window are unioned; covered windows
    and keys are intersected. With single_gram only the smallest candidate set
    of any covered window is used.

    Returns:
        IndexHit (a superset of the true matches) or FullScan
    """
    if corpus_fingerprint is not None and corpus_fingerprint != index.meta.fingerprint:
        raise FingerprintMismatchError(index.meta.fingerprint, corpus_fingerprint)

    lengths = [n for n in index.lengths if n >= min_len]
    postings = index.postings
    window_sets = []
    used = set()
    for windows in subquery_windows(sq, max_class_positions, cap):
        for window in windows:
            window_ids = set()
            covered = True
            window_used = set()
            for inst in window.instantiations:
                inside = grams_inside(inst, postings, lengths)
                if not inside:
                    covered = False
                    break
                ordered = sorted(inside, key=lambda g: (len(postings[g]), g))
                if single_gram:
                    ordered = ordered[:1]
                ids = index.posting_set(ordered[0])
                for g in ordered[1:]:
                    ids = ids & index.posting_set(g)
                window_ids |= ids
                window_used.update(ordered)
            if covered:
                window_sets.append(window_ids)
                used |= window_used

    if not window_sets:
        return FullScan("no indexed gram")
    if single_gram:
        return IndexHit(frozenset(min(window_sets, key=len)), tuple(sorted(used)))

    result = window_sets[0]
    for ids in window_sets[1:]:
        result = result & ids
    return IndexHit(frozenset(result), tuple(sorted(used)))


# ============================
# PERSISTENCE
# ============================

def _escape(g):
    return g.replace("\\", "\\\\").replace("\t", "\\t")


def _unescape(text):
    out = []
    chars = iter(text)
    for ch in chars:
        if ch == "\\":
            nxt = next(chars, "")
            out.append("\t" if nxt == "t" else nxt)
        else:
            out.append(ch)
    return "".join(out)


def serialize_index(index):
    meta = {
        "mode": index.meta.mode,
        "params": index.meta.params,
        "record_count": index.meta.record_count,
        "total_chars": index.meta.total_chars,
        "total_postings": index.meta.total_postings,
    }
    lines = [
        f"{MAGIC} {FORMAT_VERSION} {index.meta.fingerprint} {len(index.grams)}",
        "#meta " + json.dumps(meta, sort_keys=True),
    ]
    for g in index.grams:
        lines.append(_escape(g) + "\t" + ",".join(str(rid) for rid in index.postings[g]))
    body = ("\n".join(lines) + "\n").encode("utf-8")
    return body + f"CRC32 {zlib.crc32(body):08x}\n".encode("ascii")


def save_index(index, path):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "wb") as handle:
        handle.write(serialize_index(index))


def parse_index(data, corpus=None):
    """
    Parse MGIDX bytes, checking checksum, version and posting invariants

    Raises:
        IndexFormatError: corrupt or truncated data, or a different version
        FingerprintMismatchError: corpus given and not the one indexed
    """
    body, sep, trailer = data.rstrip(b"\n").rpartition(b"\n")
    if not sep or not trailer.startswith(b"CRC32 "):
        raise IndexFormatError("missing checksum line (truncated index?)")
    body += b"\n"
    try:
        expected = int(trailer[6:].decode("ascii"), 16)
    except ValueError as e:
        raise IndexFormatError("unreadable checksum") from e
    if zlib.crc32(body) != expected:
        raise IndexFormatError("checksum mismatch")

    lines = body.decode("utf-8").split("\n")[:-1]
    header = lines[0].split(" ")
    if len(header) != 4 or header[0] != MAGIC:
        raise IndexFormatError("not an MGIDX file")
    if header[1] != FORMAT_VERSION:
        raise IndexFormatError(f"unsupported index version {header[1]}")
    fingerprint, count = header[2], int(header[3])
    if len(lines) < 2 or not lines[1].startswith("#meta "):
        raise IndexFormatError("missing #meta line")
    meta = json.loads(lines[1][6:])

    grams, postings = [], {}
    for line in lines[2:]:
        raw, _, ids = line.rpartition("\t")
        g = _unescape(raw)
        ids = tuple(int(v) for v in ids.split(",")) if ids else ()
        if any(b <= a for a, b in zip(ids, ids[1:])):
            raise IndexFormatError(f"posting list of {g!r} is not strictly increasing")
        if ids and (ids[0] < 0 or ids[-1] >= meta["record_count"]):
            raise IndexFormatError(f"posting list of {g!r} has ids outside the corpus")
        grams.append(g)
        postings[g] = ids
    if len(grams) != count or grams != sorted(grams):
        raise IndexFormatError("gram lines do not match the header")
    total = sum(len(ids) for ids in postings.values())
    if total != meta["total_postings"]:
        raise IndexFormatError("posting total does not match the header")

    if corpus is not None and corpus.fingerprint != fingerprint:
        raise FingerprintMismatchError(fingerprint, corpus.fingerprint)

    return IndexArtifact(
        tuple(grams),
        postings,
        IndexMeta(fingerprint, meta["mode"], meta["params"], meta["record_count"],
                  meta["total_chars"], total),
    )


def load_index(path, corpus=None):
    if not os.path.exists(path):
        raise IndexFormatError(f"index file not found: {path}")
    with open(path, "rb") as handle:
        return parse_index(handle.read(), corpus)
