"""
Synthetic data - corpora, workloads and protein samples

Uniform mode fills records with random characters. Distribution mode also
plants grams whose supports are drawn from |Normal(mean, sd)|: gram texts are
handed out by breadth-first alphabet expansion where a fair coin decides
whether a child is finalized or extended, and each finalized gram is written
into S distinct records at free offsets.
"""

import logging
import os
import sys
from collections import deque
from dataclasses import dataclass

import numpy as np
import pandas as pd
from scipy.stats import spearmanr
from tqdm import tqdm

current_dir = os.path.dirname(os.path.abspath(__file__))
project_root = os.path.dirname(current_dir)
sys.path.insert(0, project_root)

from logic.config import read_key_value_file
from logic.corpus import Corpus
from logic.errors import SpecError
from logic.querylang import Gap, Key, RegexQuery, expand_or, format_query

logger = logging.getLogger(__name__)

UPPERCASE = "ABCDEFGHIJKLMNOPQRSTUVWXYZ"
AMINO_ACIDS = "ACDEFGHIKLMNPQRSTVWY"
PLANT_ATTEMPTS = 20


# ============================
# SPECS
# ============================

@dataclass(frozen=True)
class NormalSupport:
    mean: float = 0.0
    sd: float = 100.0


@dataclass(frozen=True)
class CorpusSpec:
    alphabet: str = UPPERCASE
    record_count: int = 1000
    record_len: tuple = (100, 100)
    support_dist: NormalSupport = None
    gram_count: int = 100
    min_gram_len: int = 3
    seed: int = 0

    def __post_init__(self):
        if self.record_count < 1:
            raise SpecError("record_count must be at least 1")
        if not self.alphabet:
            raise SpecError("alphabet is empty")
        lo, hi = self.record_len
        if not 0 < lo <= hi:
            raise SpecError(f"bad record length range {self.record_len}")
        if self.support_dist is not None and self.support_dist.sd <= 0:
            raise SpecError("support sd must be positive")
        if self.min_gram_len < 1:
            raise SpecError("min_gram_len must be at least 1")


@dataclass(frozen=True)
class WorkloadSpec:
    key_count: int = 3
    key_len: tuple = (3, 8)
    gap: tuple = (9, 39)  # range the emitted gap upper bound is drawn from
    sample_fraction: float = 0.01
    seed: int = 0
    min_gram_len: int = 2

    def __post_init__(self):
        if self.key_count < 1:
            raise SpecError("key_count must be at least 1")
        if not self.min_gram_len <= self.key_len[0] <= self.key_len[1]:
            raise SpecError(f"key lengths {self.key_len} must start at {self.min_gram_len} or more")
        if not 0 <= self.gap[0] <= self.gap[1]:
            raise SpecError(f"bad gap range {self.gap}")
        if not 0 <= self.sample_fraction <= 1:
            raise SpecError("sample_fraction must be within [0, 1]")


def _pair(raw):
    lo, _, hi = raw.partition(",")
    return (int(lo), int(hi or lo))


def corpus_spec_from_mapping(values):
    """CorpusSpec from key=value strings (alphabet, records, record_len, sd, mean, grams, ...)"""
    try:
        dist = None
        if "sd" in values:
            dist = NormalSupport(float(values.get("mean", 0)), float(values["sd"]))
        return CorpusSpec(
            alphabet=values.get("alphabet", UPPERCASE),
            record_count=int(values.get("records", 1000)),
            record_len=_pair(values.get("record_len", "100,100")),
            support_dist=dist,
            gram_count=int(values.get("grams", 100)),
            min_gram_len=int(values.get("min_gram_len", 3)),
            seed=int(values.get("seed", 0)),
        )
    except ValueError as e:
        raise SpecError(f"bad corpus spec: {e}") from e


def workload_spec_from_mapping(values):
    try:
        return WorkloadSpec(
            key_count=int(values.get("key_count", 3)),
            key_len=_pair(values.get("key_len", "3,8")),
            gap=_pair(values.get("gap", "9,39")),
            sample_fraction=float(values.get("sample_fraction", 0.01)),
            seed=int(values.get("seed", 0)),
            min_gram_len=int(values.get("min_gram_len", 2)),
        )
    except ValueError as e:
        raise SpecError(f"bad workload spec: {e}") from e


def load_corpus_spec(path):
    return corpus_spec_from_mapping(read_key_value_file(path))


def load_workload_spec(path):
    return workload_spec_from_mapping(read_key_value_file(path))


# ============================
# CORPUS GENERATION
# ============================

def draw_supports(spec, rng):
    """Sorted supports |N(mean, sd)| rounded up, at least one each"""
    dist = spec.support_dist
    draws = np.ceil(np.abs(rng.normal(dist.mean, dist.sd, spec.gram_count))).astype(int)
    draws = np.sort(np.maximum(draws, 1))
    over = np.flatnonzero(draws > spec.record_count)
    if len(over):
        raise SpecError(
            f"support draw #{int(over[0])} = {int(draws[over[0]])} exceeds "
            f"{spec.record_count} records"
        )
    return [int(d) for d in draws]


def plan_grams(spec, rng):
    """
    Assign gram texts to drawn supports

    Children shorter than min_gram_len are always extended; every other child
    takes the next support and a coin decides between keeping it and
    extending it.
    """
    supports = deque(draw_supports(spec, rng))
    alphabet = list(spec.alphabet)
    plan = {}
    expand = [""]
    while supports and expand:
        children = [p + a for p in expand for a in alphabet]
        order = rng.permutation(len(children))
        expand = []
        for k in order:
            child = children[k]
            if len(child) < spec.min_gram_len:
                expand.append(child)
                continue
            if not supports:
                break
            s = supports.popleft()
            if rng.random() < 0.5:
                plan[child] = s
            else:
                expand.append(child)
    return plan


def _plant(chars, occupied, g, rng):
    n, m = len(chars), len(g)
    if n >= m:
        for _ in range(PLANT_ATTEMPTS):
            offset = int(rng.integers(0, n - m + 1))
            if not any(occupied[offset:offset + m]):
                chars[offset:offset + m] = list(g)
                occupied[offset:offset + m] = [True] * m
                return
    # no free slot: grow the record
    chars.extend(g)
    occupied.extend([True] * m)


def _random_records(alphabet, count, record_len, rng):
    lo, hi = record_len
    lengths = rng.integers(lo, hi + 1, size=count)
    letters = np.array(list(alphabet))
    return [list(rng.choice(letters, size=int(n))) for n in lengths]


def gen_corpus_with_plan(spec):
    """
    Generate a corpus and the planted gram -> support plan

    Returns:
        (Corpus, dict) where the dict is empty in uniform mode
    """
    rng = np.random.default_rng(spec.seed)
    records = _random_records(spec.alphabet, spec.record_count, spec.record_len, rng)
    plan = {}
    if spec.support_dist is not None:
        plan = plan_grams(spec, rng)
        occupied = [[False] * len(r) for r in records]
        for g, s in plan.items():
            for rid in np.sort(rng.choice(spec.record_count, size=s, replace=False)):
                _plant(records[rid], occupied[rid], g, rng)
        logger.debug("planted %d grams", len(plan))
    corpus = Corpus.from_records(("".join(r) for r in records), alphabet=spec.alphabet,
                                 source="synthetic")
    return corpus, plan


def gen_corpus(spec):
    return gen_corpus_with_plan(spec)[0]


def support_profile(corpus, plan):
    """
    Planted against measured support of every planned gram

    Returns:
        (DataFrame with gram, planted, measured columns; Spearman rank correlation)
    """
    grams = sorted(plan)
    measured = corpus.support_counts(grams)
    frame = pd.DataFrame({
        "gram": grams,
        "planted": [plan[g] for g in grams],
        "measured": [measured[g] for g in grams],
    })
    if len(frame) < 2:
        return frame, 1.0
    return frame, float(spearmanr(frame["planted"], frame["measured"]).correlation)


# ============================
# WORKLOAD GENERATION
# ============================

def _cut_query(text, rid, spec, rng):
    lo, hi = spec.key_len
    lengths = [int(v) for v in rng.integers(lo, hi + 1, size=spec.key_count)]
    bounds = [int(v) for v in rng.integers(spec.gap[0], spec.gap[1] + 1, size=spec.key_count - 1)]
    slack = len(text) - sum(lengths)
    if slack < 0:
        return None

    distances = []
    for bound in bounds:
        d = int(rng.integers(0, min(bound, slack) + 1))
        distances.append(d)
        slack -= d
    pos = int(rng.integers(0, slack + 1))

    elements = []
    for i, length in enumerate(lengths):
        elements.append(Key.literal(text[pos:pos + length]))
        pos += length
        if i < len(bounds):
            elements.append(Gap(0, bounds[i]))
            pos += distances[i]
    query = RegexQuery("", tuple(elements), f"w{rid}")
    return RegexQuery(format_query(query), query.elements, query.query_id)


def gen_workload(corpus, spec):
    """
    Cut one query from each sampled record

    Keys are cut left to right; each gap's upper bound is at least the real
    distance, so a query always matches the record it came from.
    """
    rng = np.random.default_rng(spec.seed)
    queries = []
    for rid, text in enumerate(corpus.records):
        if rng.random() >= spec.sample_fraction:
            continue
        query = _cut_query(text, rid, spec, rng)
        if query is None:
            logger.info("record %d is too short for %d keys; skipped", rid, spec.key_count)
            continue
        queries.append(query)
    return queries


# ============================
# PROTEIN SAMPLE
# ============================

def _instance(q, rng):
    sq = expand_or(q)[0]
    parts = []
    for i, key in enumerate(sq.keys):
        parts.extend(p[int(rng.integers(0, len(p)))] for p in key.positions)
        if i < len(sq.gaps):
            lo, hi = sq.gaps[i]
            parts.extend(rng.choice(list(AMINO_ACIDS), size=int(rng.integers(lo, hi + 1))))
    return "".join(parts)


def gen_protein_corpus(signatures, record_count=500, record_len=(100, 400), plant_rate=0.05,
                       seed=0, progress=False):
    """
    Random sequences over the amino-acid alphabet with planted signature instances

    Each signature is planted in roughly plant_rate of the sequences and in
    at least one.
    """
    rng = np.random.default_rng(seed)
    records = _random_records(AMINO_ACIDS, record_count, record_len, rng)
    for q in tqdm(signatures, desc="planting", disable=not progress):
        hits = np.flatnonzero(rng.random(record_count) < plant_rate).tolist()
        if not hits:
            hits = [int(rng.integers(0, record_count))]
        for rid in hits:
            instance = _instance(q, rng)
            chars = records[rid]
            if len(instance) > len(chars):
                chars.extend(instance)
                continue
            offset = int(rng.integers(0, len(chars) - len(instance) + 1))
            chars[offset:offset + len(instance)] = list(instance)
    return Corpus.from_records(("".join(r) for r in records), alphabet=AMINO_ACIDS,
                               source="protein-sample")
