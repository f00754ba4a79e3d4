"""
Workload metrics - hit rate, precision and index size
"""

import math
import os
import sys
from dataclasses import asdict, dataclass, field

import numpy as np
import pandas as pd

current_dir = os.path.dirname(os.path.abspath(__file__))
project_root = os.path.dirname(current_dir)
sys.path.insert(0, project_root)

from logic.errors import WorkloadMismatchError
from logic.lpms import verify_prefix_free


@dataclass
class WorkloadMetrics:
    queries: int = 0
    hit_rate: float = None
    partial_rate: float = None
    precision: list = field(default_factory=list)  # per query, None when the index was not used
    precision_mean: float = None
    precision_std: float = None
    recall_set_mean: float = None
    correct_queries: int = 0
    posting_size: int = 0
    gram_count: int = 0
    prefix_free: bool = None
    timings: dict = field(default_factory=dict)

    def summary(self):
        """Flat dict without the per-query list"""
        row = {k: v for k, v in asdict(self).items() if k not in ("precision", "timings")}
        row.update(self.timings)
        return row


def _query_precision(answer):
    if not answer.used_index:
        return None
    if answer.candidate_count == 0:
        return 1.0
    return len(answer.matched) / answer.candidate_count


def _recall_set(answer, truth):
    """Share of the true matches the index alone would return"""
    if not truth.matched:
        return 1.0
    if not answer.used_index:
        return 0.0
    return len(set(truth.matched) & answer.candidate_ids) / len(truth.matched)


def compute_metrics(answers, index, truth, build_timings=None):
    """
    Metrics of indexed answers against full-scan truth

    Args:
        answers: QueryAnswer list from the indexed run
        index: IndexArtifact or None
        truth: QueryAnswer list from a full scan over the same workload
        build_timings: optional selection timings (mgt_ms, mct_ms, st_ms, ...)

    Returns:
        WorkloadMetrics; correct_queries counts queries the index alone answered exactly
    """
    if [a.query_id for a in answers] != [t.query_id for t in truth]:
        raise WorkloadMismatchError("answers and truth cover different queries")

    metrics = WorkloadMetrics(queries=len(answers))
    if index is not None:
        metrics.posting_size = index.posting_size
        metrics.gram_count = len(index.grams)
        metrics.prefix_free = verify_prefix_free(index.grams).ok
    metrics.timings = dict(build_timings or {})
    if not answers:
        return metrics

    metrics.hit_rate = sum(a.used_index for a in answers) / len(answers)
    metrics.partial_rate = sum(a.partial for a in answers) / len(answers)
    metrics.precision = [_query_precision(a) for a in answers]
    defined = [p for p in metrics.precision if p is not None]
    if defined:
        metrics.precision_mean = float(np.mean(defined))
        metrics.precision_std = float(np.std(defined))
    metrics.recall_set_mean = float(np.mean([_recall_set(a, t) for a, t in zip(answers, truth)]))
    metrics.correct_queries = sum(
        a.used_index and a.matched == t.matched for a, t in zip(answers, truth)
    )
    metrics.timings["probe_ms"] = sum(a.index_probe_ms for a in answers)
    metrics.timings["verify_ms"] = sum(a.verify_ms for a in answers)
    return metrics


def metrics_frame(labelled):
    """DataFrame with one row per (label dict, WorkloadMetrics) pair"""
    rows = []
    for labels, metrics in labelled:
        row = dict(labels)
        row.update(metrics.summary())
        rows.append(row)
    return pd.DataFrame(rows)


def format_rate(value):
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return "n/a"
    return f"{value:.3f}"
