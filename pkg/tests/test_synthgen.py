"""
Unit tests for synthetic corpora, workloads and protein samples
"""

import pytest

from engine.synthgen import (
    AMINO_ACIDS,
    CorpusSpec,
    NormalSupport,
    WorkloadSpec,
    corpus_spec_from_mapping,
    gen_corpus,
    gen_corpus_with_plan,
    gen_protein_corpus,
    gen_workload,
    load_corpus_spec,
    support_profile,
)
from logic.errors import SpecError
from logic.lpms import verify_prefix_free
from logic.matcher import evaluate, matches
from logic.querylang import expand_or, parse_query, prosite_to_query


def test_uniform_corpus_respects_spec():
    spec = CorpusSpec(alphabet="AB", record_count=20, record_len=(5, 8), seed=1)
    corpus = gen_corpus(spec)
    assert len(corpus) == 20
    assert all(5 <= len(r) <= 8 for r in corpus.records)
    assert set("".join(corpus.records)) <= {"A", "B"}
    assert gen_corpus(spec).fingerprint == corpus.fingerprint
    assert gen_corpus(CorpusSpec(alphabet="AB", record_count=20, record_len=(5, 8), seed=2)).fingerprint \
        != corpus.fingerprint


def test_planted_supports_are_lower_bounds():
    spec = CorpusSpec(record_count=200, record_len=(30, 50), support_dist=NormalSupport(0, 20),
                      gram_count=30, seed=2)
    corpus, plan = gen_corpus_with_plan(spec)
    assert plan
    assert verify_prefix_free(plan)
    assert all(len(g) >= 3 for g in plan)
    for g, s in plan.items():
        assert corpus.support(g) >= s


def test_support_draw_beyond_record_count():
    spec = CorpusSpec(record_count=10, record_len=(5, 5), support_dist=NormalSupport(0, 1000),
                      gram_count=100)
    with pytest.raises(SpecError):
        gen_corpus(spec)


@pytest.mark.parametrize("kwargs", [
    {"record_count": 0},
    {"record_len": (5, 3)},
    {"alphabet": ""},
    {"support_dist": NormalSupport(0, 0)},
])
def test_bad_corpus_specs(kwargs):
    with pytest.raises(SpecError):
        CorpusSpec(**kwargs)


def test_bad_workload_specs():
    with pytest.raises(SpecError):
        WorkloadSpec(key_len=(1, 3))
    with pytest.raises(SpecError):
        WorkloadSpec(sample_fraction=1.5)


def test_every_query_matches_its_record():
    corpus = gen_corpus(CorpusSpec(record_count=100, record_len=(40, 60), seed=4))
    queries = gen_workload(corpus, WorkloadSpec(sample_fraction=0.2, seed=3))
    assert queries
    for q in queries:
        rid = int(q.query_id[1:])
        sq, = expand_or(q)
        assert len(sq.keys) == 3
        assert all(3 <= len(k) <= 8 for k in sq.keys)
        assert all(lo == 0 and 9 <= hi <= 39 for lo, hi in sq.gaps)
        assert matches(sq, corpus.records[rid])
        assert parse_query(q.source_text).elements == q.elements


def test_zero_sample_fraction():
    corpus = gen_corpus(CorpusSpec(record_count=50, record_len=(40, 60)))
    assert gen_workload(corpus, WorkloadSpec(sample_fraction=0.0)) == []


def test_spec_from_key_value_file(tmp_path):
    path = tmp_path / "corpus.spec"
    path.write_text("# dataset\nrecords=5\nrecord_len=3,4\nsd=2\nseed=9\n", encoding="utf-8")
    spec = load_corpus_spec(path)
    assert spec.record_count == 5
    assert spec.record_len == (3, 4)
    assert spec.support_dist == NormalSupport(0.0, 2.0)
    with pytest.raises(SpecError):
        corpus_spec_from_mapping({"records": "many"})


def test_protein_sample_contains_the_signature():
    signature = prosite_to_query("[AG]-x(4)-G-K-[ST]", "ATP")
    corpus = gen_protein_corpus([signature], record_count=30, seed=0)
    assert set(corpus.alphabet) == set(AMINO_ACIDS)
    assert evaluate(None, corpus, signature).matched


def test_measured_supports_follow_the_planted_ranks():
    spec = CorpusSpec(record_count=1000, record_len=(40, 80), support_dist=NormalSupport(0, 100),
                      gram_count=50, seed=5)
    corpus, plan = gen_corpus_with_plan(spec)
    profile, rho = support_profile(corpus, plan)
    assert list(profile.columns) == ["gram", "planted", "measured"]
    assert (profile["measured"] >= profile["planted"]).all()
    assert rho >= 0.9
