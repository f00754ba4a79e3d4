"""
Unit tests for verification and end-to-end evaluation
"""

import numpy as np
import pytest

from oracles import backtracking_matches
from engine.index_store import build_index
from logic.lpms import GramSelection, select_ipms
from logic.matcher import answers_frame, evaluate, evaluate_workload, matches
from logic.querylang import Key, SubQuery, expand_or, parse_query


def _sq(text):
    return expand_or(parse_query(text))[0]


@pytest.mark.parametrize("query, text, expected", [
    ("(ab)(cd)", "abcd", True),
    ("(ab)(cd)", "abxcd", False),
    ("(a).{1,2}(b)", "axb", True),
    ("(a).{1,2}(b)", "ab", False),
    ("(a).{1,2}(b)", "axxxb", False),
    ("(aa)(aa)", "aaaa", True),
    ("(aa)(aa)", "aaa", False),
    ("(ex).{1,3}(ess)", "excess", True),
    ("([ab]c).{0,2}(d)", "bcxxd", True),
])
def test_gap_semantics(query, text, expected):
    assert matches(_sq(query), text) is expected


def test_matches_agree_with_backtracking():
    rng = np.random.default_rng(17)
    for _ in range(300):
        text = "".join(rng.choice(list("abc"), size=int(rng.integers(0, 14))))
        keys = []
        for _ in range(int(rng.integers(1, 4))):
            positions = ["".join(sorted(set(rng.choice(list("abc"), size=int(rng.integers(1, 3))))))
                         for _ in range(int(rng.integers(1, 3)))]
            keys.append(Key(tuple(positions)))
        gaps = []
        for _ in keys[1:]:
            lo = int(rng.integers(0, 3))
            gaps.append((lo, lo + int(rng.integers(0, 3))))
        sq = SubQuery(tuple(keys), tuple(gaps))
        assert matches(sq, text) == backtracking_matches(sq, text), (sq.to_text(), text)


def test_worked_answers_full_scan(words, worked_queries):
    answers = evaluate_workload(None, words, worked_queries)
    assert [a.matched for a in answers] == [(1, 5, 7), (2,)]
    assert not any(a.used_index for a in answers)
    assert answers[0].candidate_count == 8


def test_worked_answers_through_index(words, worked_queries, worked_rows):
    index = build_index(words, select_ipms(words, worked_rows))
    first, second = evaluate_workload(index, words, worked_queries)
    assert first.matched == (1, 5, 7)
    assert first.used_index
    assert first.candidate_count == 4
    assert second.matched == (2,)
    assert second.candidate_count == 2
    assert second.candidate_ids == {2, 3}


def test_partial_index_use(words, worked_queries):
    index = build_index(words, GramSelection(grams=("ex",), supports={}, mode="BEST"))
    answer = evaluate(index, words, worked_queries[0])
    assert answer.partial
    assert not answer.used_index
    assert answer.matched == (1, 5, 7)


def test_single_gram_mode_same_answers(words, worked_queries, worked_rows):
    index = build_index(words, select_ipms(words, worked_rows))
    full = evaluate_workload(index, words, worked_queries)
    single = evaluate_workload(index, words, worked_queries, single_gram=True)
    assert [a.matched for a in single] == [a.matched for a in full]


def test_answers_frame(words, worked_queries):
    frame = answers_frame(evaluate_workload(None, words, worked_queries))
    assert list(frame.columns) == ["query_id", "record_id"]
    assert frame.values.tolist() == [["q1", 1], ["q1", 5], ["q1", 7], ["q2", 2]]
