"""
LP-based multigram selection

The driver grows candidate grams one character at a time. Each round models
the children that still matter for uncovered sub-queries, solves the LP
relaxation, rounds it, and moves the chosen grams into the result. Children
that were not chosen are extended in the next round, so no selected gram is
ever a prefix of another.
"""

import json
import logging
import os
import time
from dataclasses import asdict, dataclass, field, is_dataclass

import numpy as np
import pandas as pd

from logic.config import (
    CLASS_INSTANTIATION_CAP,
    DEFAULT_MIN_LEN,
    MAX_CLASS_POSITIONS,
    NODE_LIMIT,
)
from logic.errors import MultigramError
from logic.querylang import (
    is_covered,
    key_grams,
    key_windows,
    placements,
    span_instantiations,
)
from logic.selection_model import build_problem, make_problem
from logic.solvers import round_deterministic, round_randomized, solve_ip_exact, solve_lp

logger = logging.getLogger(__name__)

MODES = ("IPMS", "LPMS-D", "LPMS-R", "FREE", "BEST")
PREFIX_FREE_MODES = ("IPMS", "LPMS-D", "LPMS-R", "FREE")

SELECTION_HEADER = "# MGSEL v1"


# ============================
# TYPES
# ============================

@dataclass(frozen=True)
class PrefixCheck:
    ok: bool
    pair: tuple = None

    def __bool__(self):
        return self.ok


@dataclass
class IterationStats:
    iteration: int
    prefix_length: int
    children: int
    kept: int
    modeled: int
    rows: int
    selected: int
    completed: int
    forced: bool
    active_after: int
    model_ms: float
    solve_ms: float


@dataclass
class GramSelection:
    grams: tuple
    supports: dict
    mode: str
    params: dict = field(default_factory=dict)
    stats: list = field(default_factory=list)
    full_scan: tuple = ()
    fingerprint: str = None
    timings: dict = field(default_factory=dict)

    def __post_init__(self):
        self.grams = tuple(sorted(set(self.grams)))

    def __len__(self):
        return len(self.grams)

    @property
    def prefix_free(self):
        return verify_prefix_free(self.grams).ok

    @property
    def total_support(self):
        return sum(self.supports.get(g, 0) for g in self.grams)

    def stats_frame(self):
        return pd.DataFrame([asdict(s) if is_dataclass(s) else dict(s) for s in self.stats])


def verify_prefix_free(grams):
    """
    Check that no gram is a proper prefix of another

    After sorting, a prefix pair always shows up between neighbours.

    Returns:
        PrefixCheck with one violating (prefix, gram) pair when not prefix-free
    """
    ordered = sorted(set(grams))
    for shorter, longer in zip(ordered, ordered[1:]):
        if longer.startswith(shorter):
            return PrefixCheck(False, (shorter, longer))
    return PrefixCheck(True)


def _mode_name(mode):
    names = {"D": "LPMS-D", "R": "LPMS-R", "LPMS-D": "LPMS-D", "LPMS-R": "LPMS-R"}
    if str(mode).upper() not in names:
        raise MultigramError(f"unknown LPMS mode {mode!r}; use D or R")
    return names[str(mode).upper()]


# ============================
# LPMS DRIVER
# ============================

def _repair_rows(x, xl, problem):
    """Give every modeled row at least one column (its largest LP value)"""
    x = x.copy()
    for i in range(problem.n_rows):
        cols = problem.row_columns(i)
        if not x[cols].any():
            best = cols[int(np.argmax(xl.x[cols]))]
            logger.debug("row %d left empty by rounding; adding %s", i, problem.grams[best])
            x[best] = 1
    return x


def _complete_class_windows(subqueries, rows, row_sets, new, kept, current, caps):
    """
    Select sibling instantiations so class windows become coverable

    For a row still uncovered, a newly chosen gram that fits a class window
    pulls in every instantiation of the sub-window it occupies, as long as all
    of them are children of this round.
    """
    added = set()
    for i in rows:
        sq = subqueries[i]
        if sq.keys and all(k.is_literal for k in sq.keys):
            continue
        if is_covered(sq, current | added, None, *caps):
            continue
        chosen = sorted(new & row_sets[i])
        done = False
        for index, key in enumerate(sq.keys):
            if key.is_literal or done:
                continue
            windows, _ = key_windows(key, index, *caps)
            for window in windows:
                for g in chosen:
                    for start in placements(key, g):
                        stop = start + len(g)
                        if start < window.start or stop > window.stop:
                            continue
                        siblings = span_instantiations(key, start, stop)
                        if all(s in kept for s in siblings):
                            added.update(s for s in siblings if s not in current)
                            done = True
                            break
                    if done:
                        break
                if done:
                    break
        if done:
            logger.debug("completed class window for %s", sq)
    return added


def select_lpms(corpus, subqueries, mode="D", min_len=DEFAULT_MIN_LEN, seed=0,
                max_class_positions=MAX_CLASS_POSITIONS, cap=CLASS_INSTANTIATION_CAP):
    """
    Iterative prefix-free gram selection

    Args:
        corpus: Corpus the index will be built over
        subqueries: workload rows (alternation-free sub-queries)
        mode: "D" for threshold rounding, "R" for randomized rounding
        min_len: shortest gram allowed into the model
        seed: base seed for randomized rounding

    Returns:
        GramSelection; sub-queries that can never use the index are listed in full_scan
    """
    mode_name = _mode_name(mode)
    if not subqueries:
        raise MultigramError("empty workload")
    caps = (max_class_positions, cap)

    started = time.perf_counter()
    row_sets = [key_grams(sq, min_len, *caps).m_bar_q for sq in subqueries]
    universe = set().union(*row_sets)
    supports = corpus.support_counts(universe)
    mgt_ms = (time.perf_counter() - started) * 1000

    alphabet = sorted(set(corpus.alphabet) | {ch for g in universe for ch in g})
    short_prefixes = {g[:k] for g in universe for k in range(1, min(len(g), min_len))}

    active = [i for i, grams in enumerate(row_sets) if any(supports[g] > 0 for g in grams)]
    hopeless = sorted(set(range(len(subqueries))) - set(active))

    selected = set()
    stats = []
    expand = [""]
    iteration = 0
    mct_ms = st_ms = 0.0
    while expand and active:
        iteration += 1
        active_union = set().union(*(row_sets[i] for i in active))
        children = [p + a for p in expand for a in alphabet]
        kept = [
            ch for ch in children
            if ch in active_union or (len(ch) < min_len and ch in short_prefixes)
        ]
        modeled = [ch for ch in kept if len(ch) >= min_len and supports.get(ch, 0) > 0]

        new = set()
        forced = False
        rows = []
        model_ms = solve_ms = 0.0
        if modeled:
            modeled_set = set(modeled)
            rows = [i for i in active if row_sets[i] & modeled_set]
            tick = time.perf_counter()
            problem = make_problem(
                supports, [row_sets[i] & modeled_set for i in rows], [subqueries[i] for i in rows]
            )
            model_ms = (time.perf_counter() - tick) * 1000

            tick = time.perf_counter()
            try:
                xl = solve_lp(problem)
            except MultigramError as e:
                e.iteration = iteration
                logger.error("LP failed in iteration %d: %s", iteration, e)
                raise
            if mode_name == "LPMS-D":
                x = _repair_rows(round_deterministic(xl, problem).x, xl, problem)
            else:
                x = round_randomized(xl, [seed, iteration], problem).x
            solve_ms = (time.perf_counter() - tick) * 1000

            new = {g for g, bit in zip(problem.grams, x) if bit}
            if not new:
                cheapest = problem.grams[int(np.argmin(problem.c))]
                logger.info("iteration %d selected nothing; forcing %s", iteration, cheapest)
                new = {cheapest}
                forced = True
            mct_ms += model_ms
            st_ms += solve_ms

        kept_set = set(kept)
        completed = _complete_class_windows(
            subqueries, rows, row_sets, new, kept_set, selected | new, caps
        ) if new else set()
        selected |= new | completed

        lengths = sorted({len(g) for g in selected})
        if selected:
            active = [i for i in active if not is_covered(subqueries[i], selected, lengths, *caps)]
        expand = [ch for ch in kept if ch not in new and ch not in completed]

        stats.append(IterationStats(
            iteration=iteration,
            prefix_length=iteration,
            children=len(children),
            kept=len(kept),
            modeled=len(modeled),
            rows=len(rows),
            selected=len(new),
            completed=len(completed),
            forced=forced,
            active_after=len(active),
            model_ms=model_ms,
            solve_ms=solve_ms,
        ))

    full_scan = tuple(subqueries[i].to_text() for i in sorted(set(active) | set(hopeless)))
    if full_scan:
        logger.info("%d sub-queries stay on full scan", len(full_scan))

    return GramSelection(
        grams=tuple(selected),
        supports={g: supports[g] for g in selected},
        mode=mode_name,
        params={"min_len": min_len, "seed": seed, "max_class_positions": max_class_positions,
                "class_cap": cap},
        stats=stats,
        full_scan=full_scan,
        fingerprint=corpus.fingerprint,
        timings={"mgt_ms": mgt_ms, "mct_ms": mct_ms, "st_ms": st_ms,
                 "total_ms": (time.perf_counter() - started) * 1000},
    )


def select_ipms(corpus, subqueries, min_len=DEFAULT_MIN_LEN, node_limit=NODE_LIMIT):
    """Exact selection over the whole candidate universe at once"""
    if not subqueries:
        raise MultigramError("empty workload")
    started = time.perf_counter()
    problem = build_problem(corpus, subqueries, min_len)
    built = time.perf_counter()
    solution = solve_ip_exact(problem, node_limit)
    solved = time.perf_counter()

    grams = solution.selected(problem.grams)
    lengths = sorted({len(g) for g in grams})
    full_scan = tuple(sq.to_text() for sq in subqueries if not is_covered(sq, set(grams), lengths))
    return GramSelection(
        grams=grams,
        supports={g: problem.supports[g] for g in grams},
        mode="IPMS",
        params={"min_len": min_len, "node_limit": node_limit, "objective": round(solution.objective, 9)},
        full_scan=full_scan,
        fingerprint=corpus.fingerprint,
        timings={"mct_ms": (built - started) * 1000, "st_ms": (solved - built) * 1000,
                 "total_ms": (solved - started) * 1000},
    )


# ============================
# PERSISTENCE
# ============================

def save_selection(selection, path):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(SELECTION_HEADER + "\n")
        handle.write(f"# mode={selection.mode}\n")
        handle.write(f"# fingerprint={selection.fingerprint or ''}\n")
        handle.write(f"# params={json.dumps(selection.params, sort_keys=True)}\n")
        for g in selection.grams:
            handle.write(f"{json.dumps(g)}\t{selection.supports.get(g, 0)}\n")


def load_selection(path):
    if not os.path.exists(path):
        raise MultigramError(f"selection file not found: {path}")
    with open(path, encoding="utf-8") as handle:
        lines = handle.read().splitlines()
    if not lines or lines[0] != SELECTION_HEADER:
        raise MultigramError(f"{path}: not a gram selection file")

    header = {}
    grams, supports = [], {}
    for line in lines[1:]:
        if line.startswith("# "):
            key, _, value = line[2:].partition("=")
            header[key] = value
            continue
        raw, _, count = line.rpartition("\t")
        try:
            g = json.loads(raw)
            supports[g] = int(count)
        except ValueError as e:
            raise MultigramError(f"{path}: bad gram line {line!r}") from e
        grams.append(g)
    if "mode" not in header:
        raise MultigramError(f"{path}: missing mode header")
    return GramSelection(
        grams=tuple(grams),
        supports=supports,
        mode=header["mode"],
        params=json.loads(header.get("params") or "{}"),
        fingerprint=header.get("fingerprint") or None,
    )
