"""
Multigram Pipeline: corpus + workload -> gram selection -> index -> answers
"""

import logging
import os
import sys

import pandas as pd

current_dir = os.path.dirname(os.path.abspath(__file__))
project_root = os.path.dirname(current_dir)
sys.path.insert(0, project_root)

from engine.index_store import build_index, load_index, save_index
from engine.metrics import compute_metrics, format_rate
from logic.baselines import select_best, select_free
from logic.config import Settings
from logic.corpus import load_corpus
from logic.errors import MultigramError
from logic.lpms import MODES, save_selection, select_ipms, select_lpms
from logic.matcher import answers_frame, evaluate, evaluate_workload
from logic.querylang import expand_or, load_prosite_file, load_queries, parse_query, prosite_to_query

logger = logging.getLogger(__name__)


def normalize_mode(mode):
    name = mode.upper()
    if name not in MODES:
        raise MultigramError(f"unknown mode {mode!r}; choose from {', '.join(MODES)}")
    return name


def workload_subqueries(queries, settings=None):
    """Alternation-free rows of a workload, in query order"""
    settings = settings or Settings()
    rows = []
    for q in queries:
        rows.extend(expand_or(q, cap=settings.expansion_cap))
    return rows


def select_grams(corpus, queries, mode, settings=None):
    """
    Run one selection mode over a workload

    Args:
        corpus: Corpus
        queries: list of RegexQuery
        mode: IPMS, LPMS-D, LPMS-R, FREE or BEST
        settings: Settings carrying min_len, seed and baseline parameters

    Returns:
        GramSelection
    """
    settings = settings or Settings()
    mode = normalize_mode(mode)
    if mode == "FREE":
        return select_free(corpus, settings.free_selectivity, settings.free_max_len)

    subqueries = workload_subqueries(queries, settings)
    if mode == "IPMS":
        return select_ipms(corpus, subqueries, settings.min_len, settings.node_limit)
    if mode == "BEST":
        return select_best(corpus, subqueries, settings.best_top_k, settings.min_len,
                           settings.best_benefit)
    return select_lpms(corpus, subqueries, mode[-1], settings.min_len, settings.seed,
                       settings.max_class_positions, settings.class_instantiation_cap)


class MultigramPipeline:
    """
    Multigram index pipeline
    Selects index grams for a workload, builds the index and answers queries
    """

    def __init__(self, corpus_path, queries_path=None, prosite=False, settings=None):
        """
        Initialize the pipeline

        Args:
            corpus_path: newline-delimited corpus file
            queries_path: query file (dialect lines, or PROSITE lines when prosite is set)
            settings: Settings; defaults when omitted
        """
        self.corpus_path = corpus_path
        self.queries_path = queries_path
        self.prosite = prosite
        self.settings = settings or Settings()
        self.corpus = None
        self.queries = []
        self.selection = None
        self.index = None
        self.answers = []
        self.truth = []
        self.metrics = None

    # ============================
    # DATA LOADING
    # ============================

    def load_data(self):
        """Load the corpus and, when given, the workload"""
        try:
            self.corpus = load_corpus(self.corpus_path)
            print(f"✓ Loaded {len(self.corpus)} records ({self.corpus.total_chars} characters)")
            if self.queries_path:
                loader = load_prosite_file if self.prosite else load_queries
                self.queries = loader(self.queries_path)
                print(f"✓ Loaded {len(self.queries)} queries")
            return True
        except MultigramError as e:
            print(f"✗ Error loading data: {e}")
            return False

    # ============================
    # SELECTION AND INDEX
    # ============================

    def select(self, mode):
        print(f"\n🔎 Selecting grams ({normalize_mode(mode)})...")
        self.selection = select_grams(self.corpus, self.queries, mode, self.settings)
        print(f"✓ Selected {len(self.selection)} grams")
        print(f"  Prefix-free: {'yes' if self.selection.prefix_free else 'no'}")
        print(f"  Total support: {self.selection.total_support}")
        if self.selection.full_scan:
            print(f"⚠️ {len(self.selection.full_scan)} sub-queries cannot use the index")
        return self.selection

    def build(self):
        if self.selection is None or not self.selection.grams:
            print("⚠️ Nothing selected; queries will scan the corpus")
            self.index = None
            return None
        self.index = build_index(self.corpus, self.selection)
        print(f"✓ Index built: {len(self.index.grams)} grams, {self.index.posting_size} postings")
        return self.index

    def load_index(self, path):
        self.index = load_index(path, self.corpus)
        print(f"✓ Loaded index with {len(self.index.grams)} grams from {path}")
        return self.index

    # ============================
    # QUERYING
    # ============================

    def answer(self, use_index=True, single_gram=False):
        """Answer the workload; full-scan truth is always computed alongside"""
        index = self.index if use_index else None
        self.answers = evaluate_workload(index, self.corpus, self.queries, single_gram)
        self.truth = evaluate_workload(None, self.corpus, self.queries)
        timings = self.selection.timings if self.selection else None
        self.metrics = compute_metrics(self.answers, index, self.truth, timings)
        return self.answers

    def query_single(self, text, prosite=False, single_gram=False):
        """
        Answer one query typed by a user (web form input)

        Returns:
            dict with the answer, matched records and probe statistics
        """
        q = prosite_to_query(text, "input") if prosite else parse_query(text, "input")
        answer = evaluate(self.index, self.corpus, q, single_gram)
        return {
            "query": q.source_text,
            "subqueries": [sq.to_text() for sq in expand_or(q)],
            "answer": answer,
            "records": [(rid, self.corpus.records[rid]) for rid in answer.matched],
        }

    # ============================
    # FULL PIPELINE
    # ============================

    def run(self, mode="LPMS-D"):
        """
        Run the whole pipeline

        Returns:
            WorkloadMetrics of the indexed answers, or None when loading fails
        """
        print("\n" + "=" * 70)
        print("🚀 MULTIGRAM INDEX PIPELINE")
        print("=" * 70)

        if not self.load_data():
            print("❌ Failed to load data. Exiting.")
            return None
        self.select(mode)
        self.build()
        self.answer()

        print("\n" + "=" * 70)
        print("✅ PIPELINE COMPLETE")
        print("=" * 70)
        for key, value in self.get_summary_statistics().items():
            print(f"  {key}: {value}")
        return self.metrics

    # ============================
    # RESULTS EXPORT
    # ============================

    def save_results(self, output_dir):
        """Write answers.csv, stats.csv and the selection/index artifacts"""
        os.makedirs(output_dir, exist_ok=True)
        answers_frame(self.answers).to_csv(os.path.join(output_dir, "answers.csv"), index=False)
        if self.selection is not None:
            save_selection(self.selection, os.path.join(output_dir, "selection.txt"))
            self.selection.stats_frame().to_csv(os.path.join(output_dir, "stats.csv"), index=False)
        if self.index is not None:
            save_index(self.index, os.path.join(output_dir, "index.mgidx"))
        print(f"✓ Results saved to {output_dir}")

    def get_summary_statistics(self):
        if self.metrics is None:
            return {}
        m = self.metrics
        return {
            "mode": self.selection.mode if self.selection else "none",
            "queries": m.queries,
            "hit_rate": format_rate(m.hit_rate),
            "precision_mean": format_rate(m.precision_mean),
            "correct_queries": m.correct_queries,
            "gram_count": m.gram_count,
            "posting_size": m.posting_size,
            "prefix_free": m.prefix_free,
        }

    def answers_table(self):
        return pd.DataFrame([
            {"query_id": a.query_id, "matched": len(a.matched), "used_index": a.used_index,
             "candidates": a.candidate_count, "probe_ms": a.index_probe_ms, "verify_ms": a.verify_ms}
            for a in self.answers
        ])
