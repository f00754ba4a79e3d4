"""
Corpus - the string database the index is built over

Records are newline-delimited lines of a UTF-8 file. Ids follow file order.
"""

import itertools
import logging
import os
from dataclasses import dataclass, field

from logic.config import SUPPORT_CACHE_LIMIT
from logic.errors import CorpusError

logger = logging.getLogger(__name__)

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
MASK_64 = 0xFFFFFFFFFFFFFFFF


def fnv1a_64(data):
    """64-bit FNV-1a hash of a bytes object"""
    h = FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * FNV_PRIME) & MASK_64
    return h


@dataclass(frozen=True)
class Corpus:
    records: tuple
    alphabet: tuple
    source: str = None
    _support_cache: dict = field(default_factory=dict, compare=False, repr=False)
    _memo: dict = field(default_factory=dict, compare=False, repr=False)

    @classmethod
    def from_records(cls, records, alphabet=None, source=None):
        """
        Build a Corpus from an iterable of strings

        Args:
            records: record texts, ids assigned in order
            alphabet: optional declared character set; inferred when omitted
            source: optional description of where the records came from
        """
        records = tuple(records)
        seen = set()
        for text in records:
            seen.update(text)
        if "\n" in seen:
            raise CorpusError("records may not contain newline")

        if alphabet is None:
            return cls(records, tuple(sorted(seen)), source)

        declared = set(alphabet)
        for rid, text in enumerate(records):
            for offset, ch in enumerate(text):
                if ch not in declared:
                    raise CorpusError(
                        f"record {rid} offset {offset}: {ch!r} is not in the alphabet",
                        record_id=rid, offset=offset,
                    )
        return cls(records, tuple(sorted(declared)), source)

    def __len__(self):
        return len(self.records)

    @property
    def ids(self):
        return range(len(self.records))

    @property
    def total_chars(self):
        return sum(len(r) for r in self.records)

    def text(self, rid):
        return self.records[rid]

    def to_bytes(self):
        """Canonical file form: every record LF-terminated"""
        return "".join(r + "\n" for r in self.records).encode("utf-8")

    @property
    def fingerprint(self):
        if "fingerprint" not in self._memo:
            self._memo["fingerprint"] = format(fnv1a_64(self.to_bytes()), "016x")
        return self._memo["fingerprint"]

    # ============================
    # SUPPORT COUNTING
    # ============================

    def support(self, g):
        return self.support_counts([g])[g]

    def support_counts(self, grams):
        """
        Supports for many grams in one pass over the records

        Each record contributes at most one to each gram it contains.

        Returns:
            dict gram -> support, for every requested gram
        """
        grams = list(grams)
        cache = self._support_cache
        wanted = {g for g in grams if g not in cache}
        counts = dict.fromkeys(wanted, 0)
        if wanted:
            lengths = sorted({len(g) for g in wanted if g})
            for text in self.records:
                present = set()
                n = len(text)
                for length in lengths:
                    if length > n:
                        break
                    for i in range(n - length + 1):
                        piece = text[i:i + length]
                        if piece in counts:
                            present.add(piece)
                for g in present:
                    counts[g] += 1
            if "" in counts:
                counts[""] = len(self.records)
        result = {g: counts[g] if g in counts else cache[g] for g in grams}
        cache.update(counts)
        # oldest entries go first once the cache is over its limit
        overflow = len(cache) - SUPPORT_CACHE_LIMIT
        if overflow > 0:
            for g in list(itertools.islice(cache, overflow)):
                del cache[g]
        return result


def load_corpus(path, alphabet=None):
    """
    Load a newline-delimited corpus file

    Args:
        path: UTF-8 file, one record per line
        alphabet: optional declared character set

    Returns:
        Corpus with ids in file order
    """
    if not os.path.exists(path):
        raise CorpusError(f"corpus file not found: {path}")
    try:
        with open(path, encoding="utf-8", newline="") as handle:
            content = handle.read()
    except (OSError, UnicodeDecodeError) as e:
        raise CorpusError(f"cannot read corpus {path}: {e}") from e

    lines = content.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    corpus = Corpus.from_records(lines, alphabet=alphabet, source=str(path))
    logger.debug("loaded %d records (%d chars) from %s", len(corpus), corpus.total_chars, path)
    return corpus


def write_corpus(corpus, path):
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    with open(path, "wb") as handle:
        handle.write(corpus.to_bytes())


def support(corpus, g):
    """Number of distinct records containing g"""
    return corpus.support(g)


def enumerate_grams(corpus, min_len=2, max_len=4):
    """
    Every distinct substring with length in [min_len, max_len] and its support

    Returns:
        dict gram -> support in lexicographic gram order
    """
    if not 1 <= min_len <= max_len:
        raise ValueError(f"need 1 <= min_len <= max_len, got {min_len}, {max_len}")

    counts = {}
    for text in corpus.records:
        present = set()
        n = len(text)
        for length in range(min_len, min(max_len, n) + 1):
            for i in range(n - length + 1):
                present.add(text[i:i + length])
        for g in present:
            counts[g] = counts.get(g, 0) + 1
    return {g: counts[g] for g in sorted(counts)}
