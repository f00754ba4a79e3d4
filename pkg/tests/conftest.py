"""
Shared fixtures: the eight-word corpus and its two-query workload
"""

import os
import sys

import pytest

current_dir = os.path.dirname(os.path.abspath(__file__))
project_root = os.path.dirname(current_dir)
sys.path.insert(0, project_root)
sys.path.insert(0, current_dir)

from logic.corpus import Corpus
from logic.querylang import expand_or, parse_query

DATA_DIR = os.path.join(project_root, "data")

WORDS = ("succeed", "proceed", "precede", "recede", "secession", "exceed", "succession", "excess")
WORKED_QUERIES = ("(ex)|(pr).{1,3}(eed)|(ess)", "(pr)|(re).{1,2}(cede)")


def random_rows(rng, records, count):
    """Sub-queries whose keys are cut from the records, so every row has support"""
    rows = []
    for i in range(count):
        keys = []
        for _ in range(int(rng.integers(1, 3))):
            text = records[int(rng.integers(len(records)))]
            length = int(rng.integers(2, min(len(text), 4) + 1))
            start = int(rng.integers(0, len(text) - length + 1))
            keys.append(f"({text[start:start + length]})")
        lo = int(rng.integers(0, 3))
        rows.extend(expand_or(parse_query(f".{{{lo},{lo + 2}}}".join(keys), f"q{i}")))
    return rows


@pytest.fixture
def words():
    return Corpus.from_records(WORDS)


@pytest.fixture
def worked_queries():
    return [parse_query(text, f"q{i + 1}") for i, text in enumerate(WORKED_QUERIES)]


@pytest.fixture
def worked_rows(worked_queries):
    """The six alternation-free rows of the worked workload"""
    return [sq for q in worked_queries for sq in expand_or(q)]


@pytest.fixture
def words_path():
    return os.path.join(DATA_DIR, "words.txt")


@pytest.fixture
def worked_queries_path():
    return os.path.join(DATA_DIR, "worked_queries.txt")


@pytest.fixture
def signatures_path():
    return os.path.join(DATA_DIR, "prosite_signatures.txt")
