"""
Matcher - exact verification and end-to-end query evaluation

Verification chains key occurrences left to right: the ends reachable after
key i are kept sorted, and an occurrence of key i+1 survives when some end
lies inside its gap window.
"""

import bisect
import functools
import logging
import re
import time
from dataclasses import dataclass

import pandas as pd

from logic.querylang import expand_or

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class QueryAnswer:
    query_id: str
    matched: tuple
    used_index: bool
    partial: bool
    candidate_count: int
    verified_count: int
    checked_count: int
    index_probe_ms: float
    verify_ms: float
    candidate_ids: frozenset = None  # union of index candidates when used_index


@functools.lru_cache(maxsize=8192)
def _key_regex(key):
    body = "".join(re.escape(p) if len(p) == 1 else "[" + "".join(re.escape(c) for c in p) + "]"
                   for p in key.positions)
    return re.compile(f"(?=({body}))", re.DOTALL)


def occurrences(key, text):
    """Start offsets of every (possibly overlapping) occurrence of key in text"""
    return [m.start() for m in _key_regex(key).finditer(text)]


def matches(sq, text):
    """
    True when the sub-query's keys can be placed in order inside text

    The gap between the end of one key and the start of the next must lie in
    its (lo, hi) window; text before and after the chain is unconstrained.
    """
    ends = sorted(s + len(sq.keys[0]) for s in occurrences(sq.keys[0], text))
    for (lo, hi), key in zip(sq.gaps, sq.keys[1:]):
        if not ends:
            return False
        nxt = []
        for start in occurrences(key, text):
            # need an end e with lo <= start - e <= hi
            k = bisect.bisect_left(ends, start - hi)
            if k < len(ends) and ends[k] <= start - lo:
                nxt.append(start + len(key))
        ends = nxt
    return bool(ends)


def evaluate(index, corpus, q, single_gram=False):
    """
    Answer a query, through the index when one is given

    Every sub-query either probes the index or falls back to a full scan;
    candidates are always verified with matches().

    Returns:
        QueryAnswer whose matched ids are the union over sub-queries
    """
    subqueries = expand_or(q)
    matched = set()
    hits = 0
    candidate_union = set()
    checked = 0
    probe_ms = verify_ms = 0.0

    for sq in subqueries:
        ids = None
        if index is not None:
            tick = time.perf_counter()
            result = index.candidates(sq, corpus_fingerprint=corpus.fingerprint,
                                      single_gram=single_gram)
            probe_ms += (time.perf_counter() - tick) * 1000
            if result.is_hit:
                hits += 1
                ids = sorted(result.ids)
                candidate_union.update(ids)
        if ids is None:
            ids = corpus.ids

        tick = time.perf_counter()
        for rid in ids:
            if rid in matched:
                continue
            checked += 1
            if matches(sq, corpus.records[rid]):
                matched.add(rid)
        verify_ms += (time.perf_counter() - tick) * 1000

    used_index = index is not None and hits == len(subqueries)
    return QueryAnswer(
        query_id=q.query_id,
        matched=tuple(sorted(matched)),
        used_index=used_index,
        partial=0 < hits < len(subqueries),
        candidate_count=len(candidate_union) if used_index else len(corpus),
        verified_count=len(matched),
        checked_count=checked,
        index_probe_ms=probe_ms,
        verify_ms=verify_ms,
        candidate_ids=frozenset(candidate_union) if used_index else None,
    )


def evaluate_workload(index, corpus, queries, single_gram=False):
    return [evaluate(index, corpus, q, single_gram) for q in queries]


def answers_frame(answers):
    """One (query_id, record_id) row per match"""
    rows = [(a.query_id, rid) for a in answers for rid in a.matched]
    return pd.DataFrame(rows, columns=["query_id", "record_id"])
