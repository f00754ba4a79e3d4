"""
Selection model - the covering integer program behind gram selection

Rows are sub-queries, columns are candidate grams:
    A[i][j] = s(g_j) when g_j belongs to the expanded key set of row i
    b[i]    = smallest support among the row's grams
    c[g]    = s(g) / (|g| * coverage(g))
"""

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from logic.config import DEFAULT_MIN_LEN
from logic.errors import EmptyModelError, MultigramError
from logic.querylang import key_grams

logger = logging.getLogger(__name__)


@dataclass
class SelectionProblem:
    grams: tuple
    A: sparse.csr_matrix
    b: np.ndarray
    c: np.ndarray
    subqueries: tuple = ()
    supports: dict = field(default_factory=dict)
    coverage: dict = field(default_factory=dict)
    dropped: tuple = ()

    def __post_init__(self):
        self.A = sparse.csr_matrix(self.A, dtype=float)
        self.b = np.asarray(self.b, dtype=float)
        self.c = np.asarray(self.c, dtype=float)
        if self.A.shape != (len(self.b), len(self.c)):
            raise MultigramError(
                f"inconsistent problem shape: A {self.A.shape}, b {len(self.b)}, c {len(self.c)}"
            )
        if not self.grams:
            self.grams = tuple(f"g{j}" for j in range(len(self.c)))
        if not self.supports:
            maxima = self.A.max(axis=0).toarray().ravel() if self.A.shape[0] else np.zeros(len(self.c))
            self.supports = {g: float(s) for g, s in zip(self.grams, maxima)}
        self.column_index = {g: j for j, g in enumerate(self.grams)}

    @classmethod
    def from_arrays(cls, A, b, c, grams=None):
        return cls(tuple(grams or ()), A, b, c)

    # ============================
    # DERIVED QUANTITIES
    # ============================

    @property
    def n_rows(self):
        return self.A.shape[0]

    @property
    def n_cols(self):
        return self.A.shape[1]

    @property
    def m_star(self):
        """Largest number of nonzero columns in a row"""
        if self.n_rows == 0:
            return 0
        return int(np.diff(self.A.indptr).max())

    def _positive_supports(self):
        values = [s for s in self.supports.values() if s > 0]
        return values or [1]

    @property
    def s_min(self):
        return min(self._positive_supports())

    @property
    def s_max(self):
        return max(self._positive_supports())

    def row_columns(self, i):
        return self.A.indices[self.A.indptr[i]:self.A.indptr[i + 1]]

    def is_cover(self, tol=1e-9):
        """True when any single nonzero entry already satisfies its row"""
        for i in range(self.n_rows):
            start, stop = self.A.indptr[i], self.A.indptr[i + 1]
            if start == stop or self.A.data[start:stop].min() < self.b[i] - tol:
                return False
        return True

    # ============================
    # DUMP FORMAT
    # ============================

    def dump(self):
        lines = [f"GRAMS {self.n_cols}"]
        lines.extend(self.grams)
        lines.append("SUPPORTS")
        lines.extend(f"{g}\t{self.supports.get(g, 0):.6f}" for g in self.grams)
        coo = self.A.tocoo()
        order = np.lexsort((coo.col, coo.row))
        lines.append(f"ROWS {self.n_rows} {len(order)}")
        lines.extend(f"{coo.row[k]}\t{coo.col[k]}\t{coo.data[k]:.6f}" for k in order)
        lines.append("B")
        lines.extend(f"{v:.6f}" for v in self.b)
        lines.append("C")
        lines.extend(f"{v:.6f}" for v in self.c)
        return "\n".join(lines) + "\n"


def parse_dump(text):
    """Read a dump back into a SelectionProblem (without sub-queries)"""
    lines = text.splitlines()
    try:
        pos = 0
        n_cols = int(lines[pos].split()[1])
        grams = lines[pos + 1:pos + 1 + n_cols]
        pos += 1 + n_cols
        if lines[pos] != "SUPPORTS":
            raise ValueError("missing SUPPORTS section")
        supports = {}
        for line in lines[pos + 1:pos + 1 + n_cols]:
            g, s = line.rsplit("\t", 1)
            supports[g] = float(s)
        pos += 1 + n_cols
        _, n_rows, n_entries = lines[pos].split()
        n_rows, n_entries = int(n_rows), int(n_entries)
        triplets = [line.split("\t") for line in lines[pos + 1:pos + 1 + n_entries]]
        pos += 1 + n_entries
        if lines[pos] != "B":
            raise ValueError("missing B section")
        b = [float(v) for v in lines[pos + 1:pos + 1 + n_rows]]
        pos += 1 + n_rows
        if lines[pos] != "C":
            raise ValueError("missing C section")
        c = [float(v) for v in lines[pos + 1:pos + 1 + n_cols]]
    except (IndexError, ValueError) as e:
        raise MultigramError(f"malformed problem dump: {e}") from e

    rows = [int(t[0]) for t in triplets]
    cols = [int(t[1]) for t in triplets]
    data = [float(t[2]) for t in triplets]
    A = sparse.csr_matrix((data, (rows, cols)), shape=(n_rows, n_cols))
    return SelectionProblem(tuple(grams), A, b, c, supports=supports)


def make_problem(supports, row_grams, subqueries=None):
    """
    Build an instance from per-row gram sets

    Grams with zero support are left out; rows left without a gram are
    dropped and reported in the result's dropped field.

    Args:
        supports: gram -> support, covering every gram in row_grams
        row_grams: one iterable of grams per row
        subqueries: optional sub-queries aligned with row_grams
    """
    subqueries = list(subqueries) if subqueries is not None else [None] * len(row_grams)
    kept_rows, kept_subqueries, dropped = [], [], []
    for sq, grams in zip(subqueries, row_grams):
        live = {g for g in grams if supports.get(g, 0) > 0}
        if live:
            kept_rows.append(live)
            kept_subqueries.append(sq)
        else:
            dropped.append(sq)

    coverage = {}
    for live in kept_rows:
        for g in live:
            coverage[g] = coverage.get(g, 0) + 1
    if not coverage:
        raise EmptyModelError("no query gram occurs in the corpus")

    grams = tuple(sorted(coverage))
    index = {g: j for j, g in enumerate(grams)}
    rows, cols, data = [], [], []
    b = np.empty(len(kept_rows))
    for i, live in enumerate(kept_rows):
        b[i] = min(supports[g] for g in live)
        for g in sorted(live):
            rows.append(i)
            cols.append(index[g])
            data.append(supports[g])
    A = sparse.csr_matrix((data, (rows, cols)), shape=(len(kept_rows), len(grams)), dtype=float)
    c = np.array([supports[g] / (len(g) * coverage[g]) for g in grams])

    return SelectionProblem(
        grams, A, b, c,
        subqueries=tuple(kept_subqueries),
        supports={g: supports[g] for g in grams},
        coverage=coverage,
        dropped=tuple(d for d in dropped if d is not None),
    )


def build_problem(corpus, subqueries, min_len=DEFAULT_MIN_LEN):
    """
    Build the selection instance for a workload

    Args:
        corpus: Corpus the supports are counted over
        subqueries: list of SubQuery, one row each
        min_len: shortest gram considered

    Returns:
        SelectionProblem over every workload gram with positive support
    """
    if not subqueries:
        raise EmptyModelError("empty workload")
    row_grams = [key_grams(sq, min_len).m_bar_q for sq in subqueries]
    universe = set().union(*row_grams)
    supports = corpus.support_counts(universe)
    problem = make_problem(supports, row_grams, subqueries)
    for sq in problem.dropped:
        logger.info("sub-query %s has no gram in the corpus; it will always scan", sq)
    logger.debug("built %dx%d selection problem", problem.n_rows, problem.n_cols)
    return problem
