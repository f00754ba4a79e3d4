"""
Unit tests for the FREE and BEST baselines
"""

import logging

import numpy as np
import pytest

from conftest import random_rows
from logic.baselines import benefit_table, select_best, select_free
from logic.errors import MultigramError
from logic.querylang import key_grams


def test_free_level_one(words):
    selection = select_free(words, selectivity=0.3)
    assert {g for g in selection.grams if len(g) == 1} == {"i", "n", "p", "u", "x"}
    assert selection.mode == "FREE"


def test_free_grams_are_minimal_useful(words):
    selection = select_free(words, selectivity=0.3)
    threshold = 0.3 * len(words)
    assert selection.prefix_free
    for g in selection.grams:
        assert words.support(g) < threshold
        for k in range(1, len(g)):
            assert words.support(g[:k]) >= threshold
    assert selection.total_support <= words.total_chars


def test_free_length_cap(words):
    selection = select_free(words, selectivity=0.3, max_len=1)
    assert all(len(g) == 1 for g in selection.grams)


def test_free_rejects_bad_selectivity(words):
    with pytest.raises(MultigramError):
        select_free(words, selectivity=0)


def test_benefit_table_pruned(words, worked_rows):
    table = benefit_table(words, worked_rows, 2)
    assert table.benefit("cede") == 12
    assert table.benefit("pr") == 18
    assert table.benefit("ce") == 0
    assert [g for g, _, _ in table.top(7)] == ["pr", "ced", "cede", "de", "ed", "ede", "ex"]
    assert list(table.to_frame().columns) == ["gram", "benefit", "support"]


def test_benefit_table_matched(words, worked_rows):
    table = benefit_table(words, worked_rows, 2, benefit="matched")
    assert table.benefit("cede") == 4
    assert table.benefit("ce") == 16


def test_best_is_not_prefix_free(words, worked_rows):
    selection = select_best(words, worked_rows, 3)
    assert selection.grams == ("ced", "cede", "pr")
    assert not selection.prefix_free
    assert selection.full_scan == ("(ex).{1,3}(eed)", "(ex).{1,3}(ess)")


def test_best_top_k_overflow(words, worked_rows, caplog):
    with caplog.at_level(logging.WARNING, logger="logic.baselines"):
        selection = select_best(words, worked_rows, 500)
    assert len(selection) == 14
    assert "exceeds" in caplog.text


def test_best_rejects_bad_arguments(words, worked_rows):
    with pytest.raises(MultigramError):
        select_best(words, worked_rows, 0)
    with pytest.raises(MultigramError):
        benefit_table(words, worked_rows, 2, benefit="other")


def _pair_benefits(corpus, rows, benefit):
    """Walk every (sub-query, record) pair and credit each gram of the row"""
    totals = {}
    for sq in rows:
        grams = key_grams(sq, 2).m_bar_q
        for text in corpus.records:
            for g in grams:
                inside = g in text
                totals[g] = totals.get(g, 0) + (inside if benefit == "matched" else not inside)
    return {g: v for g, v in totals.items() if corpus.support(g) > 0}


@pytest.mark.parametrize("benefit", ["pruned", "matched"])
def test_benefit_table_matches_pair_count(words, benefit):
    rng = np.random.default_rng(14)
    for _ in range(8):
        rows = random_rows(rng, words.records, int(rng.integers(1, 6)))
        table = benefit_table(words, rows, 2, benefit=benefit)
        assert {g: value for g, value, _ in table.entries} == _pair_benefits(words, rows, benefit)


def test_best_covers_more_as_top_k_grows(words):
    rng = np.random.default_rng(15)
    for _ in range(5):
        rows = random_rows(rng, words.records, 6)
        scanned = [len(select_best(words, rows, k).full_scan) for k in range(1, 16)]
        assert scanned == sorted(scanned, reverse=True)
