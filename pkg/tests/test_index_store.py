"""
Unit tests for posting-list indexes and the MGIDX file format
"""

import pytest

from engine.index_store import (
    FullScan,
    build_index,
    load_index,
    parse_index,
    save_index,
    serialize_index,
)
from logic.corpus import Corpus
from logic.errors import (
    EmptySelectionError,
    FingerprintMismatchError,
    IndexFormatError,
    InvariantViolation,
)
from logic.lpms import GramSelection, select_ipms
from logic.querylang import expand_or, parse_query


@pytest.fixture
def ipms_index(words, worked_rows):
    return build_index(words, select_ipms(words, worked_rows))


def _sq(text):
    return expand_or(parse_query(text))[0]


def test_postings_of_worked_selection(ipms_index, words):
    assert ipms_index.grams == ("cede", "ex", "pr")
    assert ipms_index.postings == {"cede": (2, 3), "ex": (5, 7), "pr": (1, 2)}
    assert ipms_index.posting_size == 6
    assert ipms_index.meta.record_count == 8
    assert ipms_index.meta.fingerprint == words.fingerprint


def test_candidates_intersect_keys(ipms_index):
    hit = ipms_index.candidates(_sq("(pr).{1,2}(cede)"))
    assert hit.is_hit
    assert hit.ids == {2}
    assert hit.grams_used == ("cede", "pr")
    assert ipms_index.candidates(_sq("(ex).{1,3}(eed)")).ids == {5, 7}


def test_candidates_fall_back(ipms_index):
    result = ipms_index.candidates(_sq("(zz)"))
    assert isinstance(result, FullScan)
    assert not result.is_hit


def test_single_gram_lookup_keeps_a_superset(ipms_index):
    hit = ipms_index.candidates(_sq("(pr).{1,2}(cede)"), single_gram=True)
    assert {2} <= hit.ids
    assert hit.ids == {1, 2}


def test_class_window_candidates_union_instantiations():
    corpus = Corpus.from_records(["acxd", "bcd", "xx", "ac", "bc"])
    sel = GramSelection(grams=("ac", "bc"), supports={"ac": 2, "bc": 2}, mode="LPMS-D")
    index = build_index(corpus, sel)
    assert index.candidates(_sq("([ab]c).{0,2}(d)")).ids == {0, 1, 3, 4}
    # one instantiation without an indexed gram leaves the window uncovered
    assert not index.candidates(_sq("([abx]c)")).is_hit


def test_fingerprint_checked(ipms_index):
    with pytest.raises(FingerprintMismatchError):
        ipms_index.candidates(_sq("(ex)"), corpus_fingerprint="0" * 16)


def test_empty_selection(words):
    with pytest.raises(EmptySelectionError):
        build_index(words, GramSelection(grams=(), supports={}, mode="LPMS-D"))


def test_prefix_free_modes_are_checked(words):
    sel = GramSelection(grams=("ce", "cede"), supports={}, mode="LPMS-D")
    with pytest.raises(InvariantViolation):
        build_index(words, sel)
    # BEST makes no prefix-free promise
    assert build_index(words, GramSelection(grams=("ce", "cede"), supports={}, mode="BEST"))


def test_file_header_and_reload(tmp_path, ipms_index, words):
    data = serialize_index(ipms_index)
    assert data.startswith(f"MGIDX v1 {words.fingerprint} 3\n".encode())
    assert data.splitlines()[-1].startswith(b"CRC32 ")

    path = tmp_path / "idx.mgidx"
    save_index(ipms_index, path)
    loaded = load_index(path, words)
    assert loaded.grams == ipms_index.grams
    assert loaded.postings == ipms_index.postings
    assert loaded.meta == ipms_index.meta


def test_corrupt_and_truncated_files(ipms_index):
    data = serialize_index(ipms_index)
    flipped = data.replace(b"5,7", b"5,6")
    with pytest.raises(IndexFormatError):
        parse_index(flipped)
    truncated = b"\n".join(data.splitlines()[:-1]) + b"\n"
    with pytest.raises(IndexFormatError):
        parse_index(truncated)


def test_other_version_rejected(ipms_index):
    import zlib

    body = serialize_index(ipms_index).rsplit(b"CRC32", 1)[0].replace(b"MGIDX v1", b"MGIDX v2", 1)
    data = body + f"CRC32 {zlib.crc32(body):08x}\n".encode()
    with pytest.raises(IndexFormatError, match="version"):
        parse_index(data)


def test_index_for_other_corpus_rejected(tmp_path, ipms_index):
    path = tmp_path / "idx.mgidx"
    save_index(ipms_index, path)
    with pytest.raises(FingerprintMismatchError):
        load_index(path, Corpus.from_records(["other"]))


def test_special_characters_survive_the_file_format():
    corpus = Corpus.from_records(["a\tb", "x\\y"])
    sel = GramSelection(grams=("a\t", "\\y"), supports={}, mode="BEST")
    index = build_index(corpus, sel)
    loaded = parse_index(serialize_index(index), corpus)
    assert loaded.postings == {"\\y": (1,), "a\t": (0,)}
