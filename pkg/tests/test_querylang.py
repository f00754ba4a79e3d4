"""
Unit tests for the query dialect, alternation expansion and key gram sets
"""

import math

import numpy as np
import pytest

from oracles import backtracking_matches, python_regex
from logic.errors import ExpansionLimitError, QuerySyntaxError, UnsupportedConstructError
from logic.matcher import matches
from logic.querylang import (
    Gap,
    Key,
    SubQuery,
    expand_or,
    format_query,
    is_covered,
    key_grams,
    key_windows,
    load_prosite_file,
    parse_query,
    placements,
    prosite_to_query,
)


def _texts(subqueries):
    return [sq.to_text() for sq in subqueries]


def test_parse_single_gap():
    q = parse_query("(ex).{1,3}(ess)")
    assert q.elements == (Key.literal("ex"), Gap(1, 3), Key.literal("ess"))


def test_parse_single_key():
    q = parse_query("(AB)")
    sq, = expand_or(q)
    assert [k.text for k in sq.keys] == ["AB"]
    assert sq.gaps == ()


def test_dialect_shorthands():
    assert expand_or(parse_query("(AB)(CD)"))[0].gaps == ((0, 0),)
    assert expand_or(parse_query("(AB).(CD)"))[0].gaps == ((1, 1),)
    assert expand_or(parse_query("(AB).{4}(CD)"))[0].gaps == ((4, 4),)
    assert expand_or(parse_query("(AB)(.{0,9})(CD)"))[0].gaps == ((0, 9),)
    assert expand_or(parse_query("(AB).{1,2}.{3,4}(CD)"))[0].gaps == ((4, 6),)


def test_character_class_key():
    sq, = expand_or(parse_query("([IVRLP][DYN]).{2,3}(H)"))
    assert sq.keys[0].positions == ("ILPRV", "DNY")
    assert sq.keys[0].instantiation_count == 15
    assert not sq.keys[0].is_literal


def test_worked_alternation_expands_to_four(worked_queries):
    rows = expand_or(worked_queries[0])
    assert len(rows) == 4
    assert set(_texts(rows)) == {
        "(ex).{1,3}(ess)", "(ex).{1,3}(eed)", "(pr).{1,3}(ess)", "(pr).{1,3}(eed)",
    }
    assert all(sq.origin == "q1" for sq in rows)
    # first alternation varies slowest
    assert [sq.keys[0].text for sq in rows] == ["ex", "ex", "pr", "pr"]


def test_second_worked_query(worked_queries):
    rows = expand_or(worked_queries[1])
    assert _texts(rows) == ["(pr).{1,2}(cede)", "(re).{1,2}(cede)"]


def test_duplicates_flagged_or_dropped():
    q = parse_query("(ab)|(ab).{1,2}(cd)")
    rows = expand_or(q)
    assert [sq.duplicate for sq in rows] == [False, True]
    assert len(expand_or(q, dedupe=True)) == 1


def test_expansion_cap():
    q = parse_query("(a)|(b)|(c).{1,2}(d)|(e)|(f)")
    with pytest.raises(ExpansionLimitError) as info:
        expand_or(q, cap=8)
    assert info.value.count == 9


@pytest.mark.parametrize("text, offset", [
    ("(ab", 3),
    ("ab", 0),
    ("(a).{3,1}(b)", 3),
    ("([^b])", 2),
    ("   (ab", 6),
    ("  (a).{3,1}(b)", 5),
    ("\t.{1,2}(ab)", 1),
    (" (ab).{1} ", 9),
])
def test_syntax_errors_carry_offsets(text, offset):
    with pytest.raises(QuerySyntaxError) as info:
        parse_query(text)
    assert info.value.offset == offset


def test_leading_gap_rejected():
    with pytest.raises(QuerySyntaxError):
        parse_query(".{1,2}(ab)")


def test_key_grams_example():
    sq, = expand_or(parse_query("(ex).{1,3}(ess)"))
    sets = key_grams(sq, 2)
    assert sets.m_q == {"ex", "ess"}
    assert sets.m_bar_q == {"ex", "es", "ss", "ess"}
    assert sets.m_q <= sets.m_bar_q


def test_key_grams_small_keys():
    assert key_grams(expand_or(parse_query("(ab)"))[0], 2).m_bar_q == {"ab"}
    cede = key_grams(expand_or(parse_query("(cede)"))[0], 2).m_bar_q
    assert cede == {"ce", "ed", "de", "ced", "ede", "cede"}


def test_key_grams_class_instantiations():
    sets = key_grams(expand_or(parse_query("([ab]c)"))[0], 2)
    assert sets.m_q == {"ac", "bc"}
    assert sets.m_bar_q == {"ac", "bc"}


def test_wide_class_key_is_windowed():
    key = Key.classes(["ab", "cd", "ef", "gh", "ij"])
    windows, truncated = key_windows(key)
    assert truncated
    assert [(w.start, w.stop) for w in windows] == [(0, 3), (1, 4), (2, 5)]
    assert all(len(w.instantiations) == 8 for w in windows)


def test_coverage_needs_every_instantiation():
    sq = SubQuery((Key.classes(["ab", "c"]),), ())
    assert not is_covered(sq, {"ac"})
    assert is_covered(sq, {"ac", "bc"})
    assert is_covered(sq, {"c"})


def test_placements():
    key = Key.classes(["ab", "c", "ab"])
    assert placements(key, "ac") == [0]
    assert placements(key, "ca") == [1]
    assert placements(key, "cc") == []


def test_format_round_trip_text():
    text = "(ex)|(pr).{1,3}(eed)|(ess)"
    assert format_query(parse_query(text)) == text


def test_caret_member_survives_formatting():
    q = parse_query("([a^]b)")
    assert q.elements[0].positions == ("^a", "b")
    text = format_query(q)
    assert parse_query(text).elements == q.elements
    assert parse_query("(^b)").elements == (Key.literal("^b"),)


def test_prosite_translation():
    q = prosite_to_query("[IVRLP]-[DYN]-[YLF]-x(2,3)-H-x-[RHG]-[LIVMASR].")
    sq, = expand_or(q)
    assert len(sq.keys) == 3
    assert sq.gaps == ((2, 3), (1, 1))
    assert sq.keys[1].text == "H"
    assert sq.keys[2].positions == ("GHR", "AILMRSV")


def test_prosite_fixed_gap():
    sq, = expand_or(prosite_to_query("C-x(4)-C-H"))
    assert sq.gaps == ((4, 4),)
    assert sq.keys[1].text == "CH"


@pytest.mark.parametrize("pattern, construct", [
    ("N-{P}-[ST]", "{..} exclusion"),
    ("<M-A-K", "< anchor"),
    ("K-D-E-L>", "> anchor"),
    ("[RK](2)-x-[ST]", "repetition"),
    ("x-G-[RK]", "leading wildcard"),
    ("G-[RK]-x", "trailing wildcard"),
])
def test_prosite_unsupported(pattern, construct):
    with pytest.raises(UnsupportedConstructError) as info:
        prosite_to_query(pattern)
    assert info.value.construct == construct


def test_bundled_signatures_load(signatures_path):
    signatures = load_prosite_file(signatures_path)
    assert len(signatures) >= 20
    assert len({q.query_id for q in signatures}) == len(signatures)
    for q in signatures:
        sq, = expand_or(q)
        assert max(len(k) for k in sq.keys) >= 2, q.query_id


def test_alternation_inside_group():
    rows = expand_or(parse_query("(pr|re).{1,2}(cede)"))
    assert _texts(rows) == ["(pr).{1,2}(cede)", "(re).{1,2}(cede)"]


def _random_key(rng):
    positions = []
    for _ in range(int(rng.integers(1, 4))):
        members = sorted(set(rng.choice(list("abc"), size=int(rng.integers(1, 3)))))
        positions.append(members[0] if len(members) == 1 else "[" + "".join(members) + "]")
    return "(" + "".join(positions) + ")"


def _random_query(rng):
    """Query text plus the branch count of each unit"""
    units, branches = [], []
    for i in range(int(rng.integers(1, 4))):
        if i and rng.random() < 0.7:
            lo = int(rng.integers(0, 3))
            units.append(f".{{{lo},{lo + int(rng.integers(0, 3))}}}")
        count = int(rng.integers(1, 4))
        units.append("|".join(_random_key(rng) for _ in range(count)))
        branches.append(count)
    return "".join(units), branches


def test_expansion_size_is_product_of_branches():
    rng = np.random.default_rng(8)
    for _ in range(200):
        text, branches = _random_query(rng)
        assert len(expand_or(parse_query(text))) == math.prod(branches), text


def test_expanded_queries_match_like_python_re():
    rng = np.random.default_rng(9)
    for _ in range(150):
        text, _ = _random_query(rng)
        q = parse_query(text)
        subqueries = expand_or(q)
        regex = python_regex(q)
        for _ in range(10):
            record = "".join(rng.choice(list("abc"), size=int(rng.integers(0, 16))))
            expected = regex.search(record) is not None
            assert any(matches(sq, record) for sq in subqueries) == expected, (text, record)
            assert any(backtracking_matches(sq, record) for sq in subqueries) == expected


def test_key_grams_shrink_as_min_len_grows():
    rng = np.random.default_rng(10)
    for _ in range(100):
        for sq in expand_or(parse_query(_random_query(rng)[0])):
            previous = key_grams(sq, 1)
            for min_len in range(2, 5):
                current = key_grams(sq, min_len)
                assert current.m_bar_q <= previous.m_bar_q
                assert current.m_q <= previous.m_q
                assert all(len(g) >= min_len for g in current.m_bar_q)
                previous = current
