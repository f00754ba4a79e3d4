"""
Experiment harness - five desk-scale experiments writing CSVs, SVG plots and a manifest

    exp1  hit rate and precision of LPMS-D, LPMS-R and FREE across support spreads
    exp2  build-time scaling with corpus size and workload size
    exp3  IPMS / LPMS / BEST index sizes on one dataset
    exp4  robustness to alphabet size and training sample size
    exp5  PROSITE-style signatures over a protein sample, min_len 2 vs 3
"""

import json
import logging
import os
import platform
import sys
import time

import numpy as np
import pandas as pd
import scipy
import sklearn
from sklearn.linear_model import LinearRegression
from sklearn.metrics import r2_score
from tqdm import tqdm

current_dir = os.path.dirname(os.path.abspath(__file__))
project_root = os.path.dirname(current_dir)
sys.path.insert(0, project_root)

from engine.index_store import build_index
from engine.metrics import compute_metrics, metrics_frame
from engine.pipeline import select_grams, workload_subqueries
from engine.synthgen import (
    UPPERCASE,
    CorpusSpec,
    NormalSupport,
    WorkloadSpec,
    gen_corpus,
    gen_corpus_with_plan,
    gen_protein_corpus,
    gen_workload,
    support_profile,
)
from logic.baselines import benefit_table, select_best
from logic.config import Settings
from logic.corpus import Corpus
from logic.lpms import select_lpms
from logic.matcher import evaluate_workload
from logic.querylang import is_covered, load_prosite_file

logger = logging.getLogger(__name__)

DATA_DIR = os.path.join(project_root, "data")
SIGNATURES_PATH = os.path.join(DATA_DIR, "prosite_signatures.txt")
PACKAGE_VERSION = "1.0.0"
FLOAT_FORMAT = "%.6f"

EXPERIMENTS = ("exp1", "exp2", "exp3", "exp4", "exp5")

# at 10K records of 40-80 uniform letters a 3-gram sits in about 33 records
EXP1_FREE_SELECTIVITY = 0.002
EXP1_FREE_MAX_LEN = 3


# ============================
# SHARED HELPERS
# ============================

def write_manifest(out_dir, experiment, params, outputs):
    """Everything needed to regenerate the deterministic CSVs"""
    manifest = {
        "experiment": experiment,
        "params": params,
        "outputs": sorted(outputs),
        "versions": {
            "package": PACKAGE_VERSION,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "pandas": pd.__version__,
            "scikit-learn": sklearn.__version__,
        },
    }
    path = os.path.join(out_dir, f"{experiment}_manifest.json")
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(manifest, handle, indent=2, sort_keys=True, default=str)
    return path


def _write(df, out_dir, name, outputs):
    path = os.path.join(out_dir, name)
    df.to_csv(path, index=False, float_format=FLOAT_FORMAT)
    outputs.append(name)
    return path


def _plot(df, x, y, hue, out_dir, name, title, outputs, kind="line"):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4))
    groups = df.groupby(hue) if hue else [(y, df)]
    for label, part in groups:
        if kind == "scatter":
            ax.scatter(part[x], part[y], label=str(label), s=12)
        else:
            ax.plot(part[x], part[y], marker="o", label=str(label))
    ax.set_xlabel(x)
    ax.set_ylabel(y)
    ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    fig.savefig(os.path.join(out_dir, name), format="svg")
    plt.close(fig)
    outputs.append(name)


def evaluate_selection(corpus, queries, selection, truth=None):
    """
    Build the index for a selection and score the workload against full scan

    Returns:
        (WorkloadMetrics, indexed answers, truth answers)
    """
    index = build_index(corpus, selection) if selection.grams else None
    answers = evaluate_workload(index, corpus, queries)
    if truth is None:
        truth = evaluate_workload(None, corpus, queries)
    return compute_metrics(answers, index, truth, selection.timings), answers, truth


def _distribution_corpus(records, sd, seed, record_len=(40, 80), gram_count=200):
    spec = CorpusSpec(
        alphabet=UPPERCASE,
        record_count=records,
        record_len=record_len,
        support_dist=NormalSupport(0.0, sd),
        gram_count=gram_count,
        seed=seed,
    )
    return gen_corpus_with_plan(spec)


def _workload(corpus, queries, seed, key_len=(3, 8), gap=(9, 39)):
    """About `queries` queries cut from sampled records, truncated to that count"""
    fraction = min(1.0, 1.5 * queries / max(len(corpus), 1))
    spec = WorkloadSpec(key_len=key_len, gap=gap, sample_fraction=fraction, seed=seed)
    return gen_workload(corpus, spec)[:queries]


# ============================
# EXPERIMENT 1
# ============================

def run_exp1(out_dir, records=10000, queries=100, sds=(100, 200, 300, 400, 500),
             seeds=(0, 1, 2, 3, 4), free_selectivity=EXP1_FREE_SELECTIVITY,
             free_max_len=EXP1_FREE_MAX_LEN, plots=False):
    """
    Hit rate and precision across support spreads

    FREE stops at free_max_len and keeps only grams rarer than
    free_selectivity * records, so it indexes a thin layer of rare grams.
    """
    os.makedirs(out_dir, exist_ok=True)
    outputs = []
    settings = Settings(free_selectivity=free_selectivity, free_max_len=free_max_len)
    rows, timing_rows, precision_rows, profile_rows = [], [], [], []
    for sd in tqdm(sds, desc="exp1 datasets"):
        for seed in seeds:
            corpus, plan = _distribution_corpus(records, sd, seed)
            profile, rho = support_profile(corpus, plan)
            profile_rows.append({"sd": sd, "seed": seed, "grams": len(profile),
                                 "planted_max": int(profile["planted"].max()) if len(profile) else 0,
                                 "spearman": rho})
            workload = _workload(corpus, queries, seed)
            truth = None
            per_mode = {}
            for mode in ("LPMS-D", "LPMS-R", "FREE"):
                selection = select_grams(corpus, workload, mode, settings.with_overrides(seed=seed))
                metrics, _, truth = evaluate_selection(corpus, workload, selection, truth)
                labels = {"sd": sd, "seed": seed, "mode": mode}
                rows.append((labels, metrics))
                timing_rows.append({**labels, **metrics.timings})
                per_mode[mode] = metrics.precision
            order = sorted(range(len(workload)),
                           key=lambda i: (-(per_mode["LPMS-R"][i] or 0.0), workload[i].query_id))
            for rank, i in enumerate(order):
                precision_rows.append({
                    "sd": sd, "seed": seed, "rank": rank, "query_id": workload[i].query_id,
                    **{m.lower().replace("-", "_"): per_mode[m][i] for m in per_mode},
                })

    frame = metrics_frame(rows)
    keep = ["sd", "seed", "mode", "queries", "hit_rate", "precision_mean", "precision_std",
            "recall_set_mean", "correct_queries", "gram_count", "posting_size", "prefix_free"]
    _write(frame[keep], out_dir, "exp1_metrics.csv", outputs)
    _write(pd.DataFrame(precision_rows), out_dir, "exp1_precision.csv", outputs)
    _write(pd.DataFrame(profile_rows), out_dir, "exp1_profile.csv", outputs)
    _write(pd.DataFrame(timing_rows), out_dir, "exp1_timings.csv", outputs)
    if plots:
        summary = frame.groupby(["sd", "mode"], as_index=False)[["hit_rate", "precision_mean"]].mean()
        _plot(summary, "sd", "hit_rate", "mode", out_dir, "exp1_hit_rate.svg", "Hit rate", outputs)
        _plot(summary, "sd", "precision_mean", "mode", out_dir, "exp1_precision.svg",
              "Mean precision", outputs)
    write_manifest(out_dir, "exp1", {"records": records, "queries": queries, "sds": list(sds),
                                     "seeds": list(seeds), "free_selectivity": free_selectivity,
                                     "free_max_len": free_max_len},
                   outputs)
    return frame[keep]


# ============================
# EXPERIMENT 2
# ============================

def _fit(xs, ys):
    X = np.asarray(xs, dtype=float).reshape(-1, 1)
    y = np.asarray(ys, dtype=float)
    model = LinearRegression().fit(X, y)
    return float(model.coef_[0]), float(model.intercept_), float(r2_score(y, model.predict(X)))


def _timed_lpms(records, alphabet, subqueries, seed, repeats):
    """
    LPMS-R selection timed `repeats` times on fresh Corpus objects

    Returns:
        (Corpus, GramSelection, dict of the fastest time per phase)
    """
    best = {}
    for _ in range(max(repeats, 1)):
        corpus = Corpus.from_records(records, alphabet=alphabet)
        selection = select_lpms(corpus, subqueries, "R", seed=seed)
        for phase, ms in selection.timings.items():
            best[phase] = min(ms, best.get(phase, ms))
    return corpus, selection, best


def run_exp2(out_dir, sizes=(5000, 10000, 20000, 40000), queries=200,
             workload_sizes=(100, 200, 400, 800), seed=0, repeats=3, plots=False):
    """Build-time scaling; every output here is a timing file, each the fastest of `repeats` runs"""
    os.makedirs(out_dir, exist_ok=True)
    outputs = []
    sizes = sorted(sizes)
    largest, _ = _distribution_corpus(sizes[-1], 100, seed)
    base = Corpus.from_records(largest.records[:sizes[0]], alphabet=largest.alphabet)
    workload = _workload(base, queries, seed)
    subqueries = workload_subqueries(workload)
    # untimed pass fills the key window caches
    select_lpms(base, subqueries, "R", seed=seed)

    corpus_rows = []
    for n in tqdm(sizes, desc="exp2 corpus sizes"):
        corpus, selection, timings = _timed_lpms(largest.records[:n], largest.alphabet,
                                                 subqueries, seed, repeats)
        build_ms = None
        for _ in range(max(repeats, 1)):
            tick = time.perf_counter()
            index = build_index(corpus, selection) if selection.grams else None
            elapsed = (time.perf_counter() - tick) * 1000
            build_ms = elapsed if build_ms is None else min(build_ms, elapsed)
        tick = time.perf_counter()
        evaluate_workload(index, corpus, workload)
        indexed_ms = (time.perf_counter() - tick) * 1000
        tick = time.perf_counter()
        evaluate_workload(None, corpus, workload)
        scan_ms = (time.perf_counter() - tick) * 1000
        corpus_rows.append({
            "records": n, "mgt_ms": timings["mgt_ms"], "mct_ms": timings["mct_ms"],
            "st_ms": timings["st_ms"], "build_ms": timings["total_ms"] + build_ms,
            "query_indexed_ms": indexed_ms, "query_scan_ms": scan_ms,
        })

    fixed = largest.records[:sizes[min(1, len(sizes) - 1)]]
    workload_rows = []
    for w in tqdm(workload_sizes, desc="exp2 workload sizes"):
        queries_w = _workload(Corpus.from_records(fixed, alphabet=largest.alphabet), w, seed + 1)
        _, _, timings = _timed_lpms(fixed, largest.alphabet, workload_subqueries(queries_w),
                                    seed, repeats)
        workload_rows.append({"queries": len(queries_w), **timings})

    corpus_df = pd.DataFrame(corpus_rows)
    workload_df = pd.DataFrame(workload_rows)
    fits = []
    for metric in ("mgt_ms", "mct_ms", "st_ms", "build_ms"):
        slope, intercept, r2 = _fit(corpus_df["records"], corpus_df[metric])
        fits.append({"sweep": "records", "metric": metric, "slope": slope,
                     "intercept": intercept, "r2": r2})
    slope, intercept, r2 = _fit(workload_df["queries"], workload_df["mct_ms"])
    fits.append({"sweep": "queries", "metric": "mct_ms", "slope": slope,
                 "intercept": intercept, "r2": r2})

    _write(corpus_df, out_dir, "exp2_corpus_timings.csv", outputs)
    _write(workload_df, out_dir, "exp2_workload_timings.csv", outputs)
    _write(pd.DataFrame(fits), out_dir, "exp2_fit_timings.csv", outputs)
    if plots:
        melted = corpus_df.melt(id_vars="records", value_vars=["mgt_ms", "mct_ms", "st_ms"],
                                var_name="phase", value_name="ms")
        _plot(melted, "records", "ms", "phase", out_dir, "exp2_corpus.svg", "Build phases", outputs)
        _plot(workload_df, "queries", "mct_ms", None, out_dir, "exp2_workload.svg",
              "Model construction time", outputs)
    write_manifest(out_dir, "exp2", {"sizes": sizes, "queries": queries,
                                     "workload_sizes": list(workload_sizes), "seed": seed,
                                     "repeats": repeats}, outputs)
    return corpus_df, workload_df, pd.DataFrame(fits)


# ============================
# EXPERIMENT 3
# ============================

def smallest_full_top_k(corpus, subqueries, min_len=2):
    """Smallest BEST top_k whose grams let every coverable sub-query use the index"""
    table = benefit_table(corpus, subqueries, min_len)
    everything = {g for g, _, _ in table.entries}
    lengths = sorted({len(g) for g in everything})
    coverable = [sq for sq in subqueries if is_covered(sq, everything, lengths)]
    lo, hi = 1, max(len(table), 1)
    while lo < hi:
        mid = (lo + hi) // 2
        grams = {g for g, _, _ in table.top(mid)}
        mid_lengths = sorted({len(g) for g in grams})
        if all(is_covered(sq, grams, mid_lengths) for sq in coverable):
            hi = mid
        else:
            lo = mid + 1
    return lo


def run_exp3(out_dir, records=2000, queries=100, seed=0, top_ks=None, plots=False):
    """Index size and precision of IPMS, LPMS and BEST"""
    os.makedirs(out_dir, exist_ok=True)
    outputs = []
    corpus, _ = _distribution_corpus(records, 100, seed)
    workload = _workload(corpus, queries, seed)
    subqueries = workload_subqueries(workload)
    settings = Settings(seed=seed)

    runs = [(mode, select_grams(corpus, workload, mode, settings))
            for mode in ("IPMS", "LPMS-R", "LPMS-D")]
    full_k = smallest_full_top_k(corpus, subqueries)
    if top_ks is None:
        top_ks = sorted({k for k in range(10, full_k + 1, max(1, full_k // 8))})
    for k in top_ks:
        runs.append((f"B-{k}", select_best(corpus, subqueries, k)))
    runs.append((f"B-full ({full_k})", select_best(corpus, subqueries, full_k)))

    rows = []
    truth = None
    for label, selection in tqdm(runs, desc="exp3 indexes"):
        metrics, _, truth = evaluate_selection(corpus, workload, selection, truth)
        rows.append({
            "index_type": label,
            "correct_queries": metrics.correct_queries,
            "precision_mean": metrics.precision_mean,
            "precision_std": metrics.precision_std,
            "posting_size": metrics.posting_size,
            "prefix_free": "Y" if selection.prefix_free else "N",
            "hit_rate": metrics.hit_rate,
            "gram_count": len(selection),
        })
    frame = pd.DataFrame(rows)
    _write(frame, out_dir, "exp3_indexes.csv", outputs)
    if plots:
        _plot(frame, "index_type", "posting_size", None, out_dir, "exp3_posting.svg",
              "Posting size", outputs, kind="scatter")
    write_manifest(out_dir, "exp3", {"records": records, "queries": queries, "seed": seed,
                                     "top_ks": list(top_ks), "full_top_k": full_k}, outputs)
    return frame


# ============================
# EXPERIMENT 4
# ============================

def run_exp4(out_dir, alphabet_sizes=(4, 8, 12, 16), records=1000, record_len=(100, 500),
             train_fractions=(0.1, 0.3, 0.5), test_samples=5, test_fraction=0.02, seed=0,
             plots=False):
    """Indexes trained on one sample, tested on independent samples"""
    os.makedirs(out_dir, exist_ok=True)
    outputs = []
    rows = []
    for size in tqdm(alphabet_sizes, desc="exp4 alphabets"):
        alphabet = UPPERCASE[:size]
        corpus = gen_corpus(CorpusSpec(alphabet=alphabet, record_count=records,
                                       record_len=record_len, seed=seed))
        tests = [
            gen_workload(corpus, WorkloadSpec(sample_fraction=test_fraction, seed=seed + 100 + t))
            for t in range(test_samples)
        ]
        truths = [evaluate_workload(None, corpus, test) for test in tests]
        for fraction in train_fractions:
            train = gen_workload(corpus, WorkloadSpec(sample_fraction=fraction, seed=seed))
            for mode in ("LPMS-D", "LPMS-R"):
                selection = select_grams(corpus, train, mode, Settings(seed=seed))
                index = build_index(corpus, selection) if selection.grams else None
                for t, (test, truth) in enumerate(zip(tests, truths)):
                    answers = evaluate_workload(index, corpus, test)
                    metrics = compute_metrics(answers, index, truth)
                    rows.append({
                        "alphabet": f"A-{alphabet[-1]}", "train_fraction": fraction, "mode": mode,
                        "test": t, "queries": metrics.queries, "hit_rate": metrics.hit_rate,
                        "precision_mean": metrics.precision_mean,
                        "recall_set_mean": metrics.recall_set_mean,
                        "posting_size": metrics.posting_size,
                    })
    frame = pd.DataFrame(rows)
    summary = frame.groupby(["alphabet", "train_fraction", "mode"], as_index=False)[
        ["hit_rate", "precision_mean", "recall_set_mean"]].mean()
    _write(frame, out_dir, "exp4_tests.csv", outputs)
    _write(summary, out_dir, "exp4_summary.csv", outputs)
    if plots:
        _plot(summary[summary["mode"] == "LPMS-R"], "train_fraction", "hit_rate", "alphabet",
              out_dir, "exp4_hit_rate.svg", "LPMS-R hit rate on unseen queries", outputs)
    write_manifest(out_dir, "exp4", {"alphabet_sizes": list(alphabet_sizes), "records": records,
                                     "record_len": list(record_len),
                                     "train_fractions": list(train_fractions),
                                     "test_samples": test_samples, "test_fraction": test_fraction,
                                     "seed": seed}, outputs)
    return summary


# ============================
# EXPERIMENT 5
# ============================

def run_exp5(out_dir, signatures_path=SIGNATURES_PATH, records=1000, seed=0, min_lens=(2, 3),
             plots=False):
    """PROSITE-style signatures over a synthetic protein sample"""
    os.makedirs(out_dir, exist_ok=True)
    outputs = []
    signatures = load_prosite_file(signatures_path)
    corpus = gen_protein_corpus(signatures, record_count=records, seed=seed)
    truth = evaluate_workload(None, corpus, signatures)
    rows = []
    for min_len in min_lens:
        selection = select_grams(corpus, signatures, "LPMS-D", Settings(min_len=min_len, seed=seed))
        metrics, answers, _ = evaluate_selection(corpus, signatures, selection, truth)
        rows.append({
            "min_len": min_len,
            "signatures": len(signatures),
            "gram_count": len(selection),
            "posting_size": metrics.posting_size,
            "hit_rate": metrics.hit_rate,
            "precision_mean": metrics.precision_mean,
            "equivalent": sum(a.matched == t.matched for a, t in zip(answers, truth)),
        })
    frame = pd.DataFrame(rows)
    _write(frame, out_dir, "exp5_prosite.csv", outputs)
    if plots:
        _plot(frame, "min_len", "hit_rate", None, out_dir, "exp5_hit_rate.svg",
              "Signature hit rate", outputs, kind="scatter")
    write_manifest(out_dir, "exp5", {"signatures": os.path.basename(signatures_path),
                                     "records": records, "seed": seed,
                                     "min_lens": list(min_lens)}, outputs)
    return frame
