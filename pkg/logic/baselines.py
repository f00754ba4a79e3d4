"""
Baseline gram selections: FREE (workload-oblivious) and BEST (benefit ranking)
"""

import logging
import time
from dataclasses import dataclass

import pandas as pd

from logic.config import BEST_BENEFIT, DEFAULT_MIN_LEN, FREE_SELECTIVITY
from logic.errors import MultigramError
from logic.lpms import GramSelection
from logic.querylang import is_covered, key_grams

logger = logging.getLogger(__name__)

BENEFIT_KINDS = ("pruned", "matched")


# ============================
# FREE
# ============================

def select_free(corpus, selectivity=FREE_SELECTIVITY, max_len=0):
    """
    Minimal useful grams, level by level

    A gram is useful when its support is below selectivity * |records|.
    Useful grams are kept; useless ones are extended by one character and
    tested again at the next level.

    Args:
        corpus: Corpus to select from
        selectivity: fraction in (0, 1]
        max_len: stop after this length (0 means no limit)
    """
    if not 0 < selectivity <= 1:
        raise MultigramError(f"selectivity must be in (0, 1], got {selectivity}")

    started = time.perf_counter()
    threshold = selectivity * len(corpus)
    selected = {}
    levels = []
    useless = {""}
    k = 0
    while useless and (not max_len or k < max_len):
        k += 1
        candidates = set()
        for text in corpus.records:
            for i in range(len(text) - k + 1):
                if text[i:i + k - 1] in useless:
                    candidates.add(text[i:i + k])
        if not candidates:
            break
        supports = corpus.support_counts(candidates)
        useful = {g for g in candidates if supports[g] < threshold}
        selected.update((g, supports[g]) for g in useful)
        useless = candidates - useful
        levels.append({"length": k, "candidates": len(candidates), "useful": len(useful)})
        logger.debug("FREE level %d: %d candidates, %d useful", k, len(candidates), len(useful))

    return GramSelection(
        grams=tuple(selected),
        supports=selected,
        mode="FREE",
        params={"selectivity": selectivity, "threshold": threshold, "max_len": max_len},
        stats=levels,
        fingerprint=corpus.fingerprint,
        timings={"total_ms": (time.perf_counter() - started) * 1000},
    )


# ============================
# BEST
# ============================

@dataclass(frozen=True)
class BenefitTable:
    """Entries (gram, benefit, support), benefit descending then gram ascending"""

    entries: tuple

    def __len__(self):
        return len(self.entries)

    def top(self, k):
        return self.entries[:k]

    def benefit(self, gram):
        for g, value, _ in self.entries:
            if g == gram:
                return value
        raise KeyError(gram)

    def to_frame(self):
        return pd.DataFrame(list(self.entries), columns=["gram", "benefit", "support"])

    def to_csv(self, path):
        self.to_frame().to_csv(path, index=False)


def benefit_table(corpus, subqueries, min_len=DEFAULT_MIN_LEN, benefit=BEST_BENEFIT):
    """
    Benefit of every workload gram with positive support

    pruned:  sum over covering sub-queries of (|records| - s(g)),
             the (query, record) pairs the gram rules out
    matched: sum over covering sub-queries of s(g),
             the (query, record) pairs where the record contains the gram
    """
    if benefit not in BENEFIT_KINDS:
        raise MultigramError(f"unknown benefit {benefit!r}; use one of {BENEFIT_KINDS}")

    coverage = {}
    for sq in subqueries:
        for g in key_grams(sq, min_len).m_bar_q:
            coverage[g] = coverage.get(g, 0) + 1
    supports = corpus.support_counts(coverage)
    n = len(corpus)

    entries = []
    for g, cov in coverage.items():
        s = supports[g]
        if s == 0:
            continue
        value = cov * (n - s) if benefit == "pruned" else cov * s
        entries.append((g, value, s))
    entries.sort(key=lambda e: (-e[1], e[0]))
    return BenefitTable(tuple(entries))


def select_best(corpus, subqueries, top_k, min_len=DEFAULT_MIN_LEN, benefit=BEST_BENEFIT):
    """Top-k grams of the benefit table; not prefix-free in general"""
    if top_k < 1:
        raise MultigramError("top_k must be at least 1")

    started = time.perf_counter()
    table = benefit_table(corpus, subqueries, min_len, benefit)
    if top_k > len(table):
        logger.warning("top_k %d exceeds %d candidates; keeping all", top_k, len(table))
    chosen = table.top(top_k)
    grams = {g for g, _, _ in chosen}
    lengths = sorted({len(g) for g in grams})
    full_scan = tuple(sq.to_text() for sq in subqueries if not is_covered(sq, grams, lengths))

    return GramSelection(
        grams=tuple(grams),
        supports={g: s for g, _, s in chosen},
        mode="BEST",
        params={"top_k": top_k, "min_len": min_len, "benefit": benefit},
        full_scan=full_scan,
        fingerprint=corpus.fingerprint,
        timings={"total_ms": (time.perf_counter() - started) * 1000},
    )
