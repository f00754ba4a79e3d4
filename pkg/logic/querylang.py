"""
Query language - parsing, alternation expansion and key gram extraction

Dialect:
    (ex).{1,3}(ess)             keys in parentheses, gaps between them
    (ex)|(pr).{1,3}(eed)|(ess)  alternation between groups
    (pr|re).{1,2}(cede)         alternation inside a group
    ([IVRLP][DYN]).{2,3}(H)     character classes inside keys
    (AB)(.{0,9})(CD)            a gap may sit in its own group
    (AB)(CD)                    adjacent keys mean gap (0, 0)
    (AB).(CD)                   a bare dot is gap (1, 1)
"""

import functools
import itertools
import logging
import math
import os
import re
from dataclasses import dataclass

from logic.config import (
    CLASS_INSTANTIATION_CAP,
    DEFAULT_MIN_LEN,
    EXPANSION_CAP,
    MAX_CLASS_POSITIONS,
)
from logic.errors import (
    ExpansionLimitError,
    MultigramError,
    QuerySyntaxError,
    UnsupportedConstructError,
)

logger = logging.getLogger(__name__)

SPECIAL_CHARS = set("()[]{}|.\\")
# a leading ^ would read back as negation
CLASS_ESCAPES = SPECIAL_CHARS | {"^"}


# ============================
# QUERY TYPES
# ============================

@dataclass(frozen=True)
class Key:
    """A key is a sequence of positions; each position is a sorted string of allowed characters"""

    positions: tuple

    @classmethod
    def literal(cls, text):
        return cls(tuple(text))

    @classmethod
    def classes(cls, sets):
        return cls(tuple("".join(sorted(set(s))) for s in sets))

    def __len__(self):
        return len(self.positions)

    @property
    def is_literal(self):
        return all(len(p) == 1 for p in self.positions)

    @property
    def text(self):
        if not self.is_literal:
            raise ValueError(f"key {self.pattern} is not literal")
        return "".join(self.positions)

    @property
    def class_positions(self):
        return sum(1 for p in self.positions if len(p) > 1)

    @property
    def instantiation_count(self):
        return math.prod(len(p) for p in self.positions)

    @property
    def pattern(self):
        parts = []
        for p in self.positions:
            if len(p) == 1:
                parts.append("\\" + p if p in SPECIAL_CHARS else p)
            else:
                parts.append("[" + "".join("\\" + c if c in CLASS_ESCAPES else c for c in p) + "]")
        return "".join(parts)

    def __str__(self):
        return self.pattern


@dataclass(frozen=True)
class Gap:
    lo: int
    hi: int

    def __str__(self):
        return f".{{{self.lo},{self.hi}}}"


@dataclass(frozen=True)
class Alternation:
    branches: tuple  # tuple of element tuples


@dataclass(frozen=True)
class RegexQuery:
    source_text: str
    elements: tuple
    query_id: str = None


@dataclass(frozen=True)
class SubQuery:
    keys: tuple
    gaps: tuple  # (lo, hi) pairs, one fewer than keys
    origin: str = None
    duplicate: bool = False

    def __post_init__(self):
        if len(self.gaps) != len(self.keys) - 1:
            raise ValueError("a sub-query needs exactly one gap between consecutive keys")

    @property
    def signature(self):
        return (self.keys, self.gaps)

    def to_text(self):
        out = ["(" + self.keys[0].pattern + ")"]
        for (lo, hi), key in zip(self.gaps, self.keys[1:]):
            out.append(f".{{{lo},{hi}}}(" + key.pattern + ")")
        return "".join(out)

    def __str__(self):
        return self.to_text()


@dataclass(frozen=True)
class KeyWindow:
    key_index: int
    start: int
    stop: int
    instantiations: tuple


@dataclass(frozen=True)
class KeyGramSets:
    m_q: frozenset
    m_bar_q: frozenset
    truncated: tuple = ()  # key indexes whose class expansion was capped


# ============================
# PARSER
# ============================

class _Parser:
    def __init__(self, text, base=0):
        self.text = text
        self.base = base  # bytes trimmed off the front of the caller's text
        self.pos = 0

    def error(self, message, pos=None):
        pos = self.pos if pos is None else pos
        raise QuerySyntaxError(message, self.base + len(self.text[:pos].encode("utf-8")))

    def peek(self):
        return self.text[self.pos] if self.pos < len(self.text) else None

    def expect(self, ch):
        if self.peek() != ch:
            found = self.peek()
            self.error(f"expected {ch!r}, found {'end of query' if found is None else repr(found)}")
        self.pos += 1

    def parse(self):
        units = []
        while self.peek() is not None:
            ch = self.peek()
            if ch == "(":
                units.append(self.parse_unit())
            elif ch == ".":
                units.append(self.parse_gap())
            else:
                self.error(f"unexpected {ch!r}")
        return units

    def parse_unit(self):
        start = self.pos
        alternatives = self.parse_group()
        while self.peek() == "|":
            self.pos += 1
            if self.peek() != "(":
                self.error("alternation must be followed by a group")
            alternatives.extend(self.parse_group())
        if len(alternatives) == 1:
            return alternatives[0]
        if any(isinstance(a, Gap) for a in alternatives):
            self.error("a gap cannot be an alternation branch", start)
        return Alternation(tuple((a,) for a in alternatives))

    def parse_group(self):
        self.expect("(")
        if self.peek() == ".":
            gap = self.parse_gap()
            self.expect(")")
            return [gap]
        alternatives = [self.parse_key()]
        while self.peek() == "|":
            self.pos += 1
            alternatives.append(self.parse_key())
        self.expect(")")
        return alternatives

    def parse_key(self):
        positions = []
        while self.peek() is not None and self.peek() not in ")|":
            ch = self.peek()
            if ch == "[":
                positions.append(self.parse_class())
            elif ch == "\\":
                positions.append(self.parse_escape())
            elif ch in SPECIAL_CHARS:
                self.error(f"unexpected {ch!r} inside a key")
            else:
                positions.append(ch)
                self.pos += 1
        if not positions:
            self.error("empty key")
        return Key(tuple(positions))

    def parse_escape(self):
        self.pos += 1
        ch = self.peek()
        if ch is None:
            self.error("dangling escape")
        self.pos += 1
        return ch

    def parse_class(self):
        start = self.pos
        self.pos += 1
        members = set()
        while self.peek() != "]":
            ch = self.peek()
            if ch is None:
                self.error("unterminated character class", start)
            if ch == "\\":
                members.add(self.parse_escape())
                continue
            if ch == "^" and not members and self.pos == start + 1:
                self.error("negated classes are not supported")
            if ch in "[(){}|.":
                self.error(f"unexpected {ch!r} in character class")
            members.add(ch)
            self.pos += 1
        self.pos += 1
        if not members:
            self.error("empty character class", start)
        return "".join(sorted(members))

    def read_int(self):
        start = self.pos
        while self.peek() is not None and self.peek().isdigit():
            self.pos += 1
        if start == self.pos:
            self.error("expected a number")
        return int(self.text[start:self.pos])

    def parse_gap(self):
        start = self.pos
        self.expect(".")
        if self.peek() != "{":
            return Gap(1, 1)
        self.pos += 1
        lo = self.read_int()
        hi = lo
        if self.peek() == ",":
            self.pos += 1
            hi = self.read_int()
        self.expect("}")
        if lo > hi:
            self.error(f"gap lower bound {lo} exceeds upper bound {hi}", start)
        return Gap(lo, hi)


def _normalize(units, text, base=0):
    """Merge consecutive gaps and put gap (0, 0) between adjacent keys"""
    elements = []
    for unit in units:
        if isinstance(unit, Gap):
            if not elements:
                raise QuerySyntaxError("query cannot start with a gap", base)
            if isinstance(elements[-1], Gap):
                prev = elements.pop()
                unit = Gap(prev.lo + unit.lo, prev.hi + unit.hi)
            elements.append(unit)
        else:
            if elements and not isinstance(elements[-1], Gap):
                elements.append(Gap(0, 0))
            elements.append(unit)
    if not elements:
        raise QuerySyntaxError("query has no key", base)
    if isinstance(elements[-1], Gap):
        raise QuerySyntaxError("query cannot end with a gap", base + len(text.encode("utf-8")))
    return tuple(elements)


def parse_query(text, query_id=None):
    """
    Parse a dialect expression into a RegexQuery

    Raises:
        QuerySyntaxError: with the byte offset of the problem
    """
    stripped = text.strip()
    lead = len(text.encode("utf-8")) - len(text.lstrip().encode("utf-8"))
    units = _Parser(stripped, lead).parse()
    return RegexQuery(stripped, _normalize(units, stripped, lead), query_id)


def format_query(q):
    """Render a RegexQuery back into dialect text"""
    out = []
    for element in q.elements:
        if isinstance(element, Key):
            out.append("(" + element.pattern + ")")
        elif isinstance(element, Gap):
            out.append(str(element))
        else:
            out.append("|".join(
                "".join("(" + e.pattern + ")" if isinstance(e, Key) else str(e) for e in branch)
                for branch in element.branches
            ))
    return "".join(out)


# ============================
# ALTERNATION EXPANSION
# ============================

def _flatten(elements):
    keys, gaps = [], []
    pending = None
    for element in elements:
        if isinstance(element, Gap):
            pending = element if pending is None else Gap(pending.lo + element.lo, pending.hi + element.hi)
            continue
        if keys:
            pending = pending or Gap(0, 0)
            gaps.append((pending.lo, pending.hi))
        keys.append(element)
        pending = None
    return tuple(keys), tuple(gaps)


def expand_or(q, cap=EXPANSION_CAP, dedupe=False):
    """
    Cartesian expansion of every alternation into alternation-free sub-queries

    The first alternation varies slowest; branches keep their textual order.
    Repeated sub-queries are flagged as duplicates, or dropped when dedupe is set.
    """
    choices = [el.branches if isinstance(el, Alternation) else ((el,),) for el in q.elements]
    count = math.prod(len(c) for c in choices)
    if count > cap:
        raise ExpansionLimitError(count, cap)

    result = []
    seen = set()
    for combo in itertools.product(*choices):
        keys, gaps = _flatten([e for branch in combo for e in branch])
        duplicate = (keys, gaps) in seen
        if duplicate and dedupe:
            continue
        seen.add((keys, gaps))
        result.append(SubQuery(keys, gaps, q.query_id, duplicate))
    return result


# ============================
# KEY WINDOWS AND GRAM SETS
# ============================

@functools.lru_cache(maxsize=65536)
def substrings(text, min_len=1):
    """All distinct substrings of text with length >= min_len"""
    n = len(text)
    return frozenset(
        text[i:j] for i in range(n) for j in range(i + max(min_len, 1), n + 1)
    )


def span_instantiations(key, start, stop):
    return tuple(sorted("".join(p) for p in itertools.product(*key.positions[start:stop])))


@functools.lru_cache(maxsize=16384)
def _windows(key, max_class_positions, cap):
    n = len(key)
    if key.class_positions <= max_class_positions and key.instantiation_count <= cap:
        return ((0, n),), False

    spans = []
    last_stop = -1
    for start in range(n):
        stop, classes, count = start, 0, 1
        while stop < n:
            size = len(key.positions[stop])
            if classes + (size > 1) > max_class_positions or count * size > cap:
                break
            classes += size > 1
            count *= size
            stop += 1
        if stop > start and stop > last_stop:
            spans.append((start, stop))
            last_stop = stop
    return tuple(spans), True


def key_windows(key, key_index=0, max_class_positions=MAX_CLASS_POSITIONS,
                cap=CLASS_INSTANTIATION_CAP):
    """
    Maximal windows of a key that stay within the class caps

    A literal key, or a class key within the caps, is a single window.

    Returns:
        (tuple of KeyWindow, truncated flag)
    """
    spans, truncated = _windows(key, max_class_positions, cap)
    windows = tuple(
        KeyWindow(key_index, start, stop, span_instantiations(key, start, stop))
        for start, stop in spans
    )
    return windows, truncated


def subquery_windows(sq, max_class_positions=MAX_CLASS_POSITIONS, cap=CLASS_INSTANTIATION_CAP):
    """Windows of every key of a sub-query, grouped per key"""
    return tuple(
        key_windows(key, i, max_class_positions, cap)[0] for i, key in enumerate(sq.keys)
    )


def key_grams(sq, min_len=DEFAULT_MIN_LEN, max_class_positions=MAX_CLASS_POSITIONS,
              cap=CLASS_INSTANTIATION_CAP):
    """
    Key gram sets of a sub-query

    Returns:
        KeyGramSets where m_q holds the whole keys (or capped windows) and
        m_bar_q every substring of them with length >= min_len
    """
    if min_len < 1:
        raise ValueError("min_len must be at least 1")

    m_q, m_bar = set(), set()
    truncated = []
    for index, key in enumerate(sq.keys):
        windows, capped = key_windows(key, index, max_class_positions, cap)
        if capped:
            truncated.append(index)
            logger.debug("class key %s truncated to %d windows", key.pattern, len(windows))
        for window in windows:
            for inst in window.instantiations:
                if len(inst) >= min_len:
                    m_q.add(inst)
                m_bar.update(substrings(inst, min_len))
    return KeyGramSets(frozenset(m_q), frozenset(m_bar), tuple(truncated))


def grams_inside(text, indexed, lengths):
    """Distinct grams of the indexed collection that occur inside text"""
    found = set()
    n = len(text)
    for length in lengths:
        if length > n:
            break
        for i in range(n - length + 1):
            piece = text[i:i + length]
            if piece in indexed:
                found.add(piece)
    return found


def window_covered(window, indexed, lengths):
    """True when every instantiation of the window contains an indexed gram"""
    return all(grams_inside(inst, indexed, lengths) for inst in window.instantiations)


def is_covered(sq, indexed, lengths=None, max_class_positions=MAX_CLASS_POSITIONS,
               cap=CLASS_INSTANTIATION_CAP):
    """True when some key window of the sub-query is covered by the indexed grams"""
    if lengths is None:
        lengths = sorted({len(g) for g in indexed})
    return any(
        window_covered(window, indexed, lengths)
        for windows in subquery_windows(sq, max_class_positions, cap)
        for window in windows
    )


def placements(key, g):
    """Start positions where g fits the key position by position"""
    n, m = len(key), len(g)
    return [
        i for i in range(n - m + 1)
        if all(g[k] in key.positions[i + k] for k in range(m))
    ]


# ============================
# FILES AND PROSITE
# ============================

def load_queries(path):
    """One dialect expression per line; blank lines and # comments are skipped"""
    if not os.path.exists(path):
        raise MultigramError(f"query file not found: {path}")
    queries = []
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            queries.append(parse_query(line, query_id=f"q{len(queries) + 1}"))
    return queries


def write_queries(queries, path):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8") as handle:
        for q in queries:
            handle.write(format_query(q) + "\n")


_PROSITE_GAP = re.compile(r"[xX](?:\((\d+)(?:,(\d+))?\))?")
_PROSITE_CLASS = re.compile(r"\[([A-Z]+)\]")
_PROSITE_RESIDUE = re.compile(r"[A-Z]")
_PROSITE_REPEAT = re.compile(r"(?:\[[A-Z]+\]|[A-Z])\(\d+(?:,\d+)?\)")


def prosite_to_query(pattern, query_id=None):
    """
    Translate a PROSITE signature into a RegexQuery

    Runs of residue positions become keys and x-runs become gaps:
    x is gap (1, 1), x(m) is (m, m) and x(m,n) is (m, n).
    """
    text = pattern.strip()
    if text.endswith("."):
        text = text[:-1]
    for marker, construct in (("{", "{..} exclusion"), ("<", "< anchor"), (">", "> anchor")):
        if marker in text:
            raise UnsupportedConstructError(construct, pattern)

    elements = []
    positions = []
    offset = 0
    for part in text.split("-"):
        gap = _PROSITE_GAP.fullmatch(part)
        if gap:
            lo = int(gap.group(1)) if gap.group(1) else 1
            hi = int(gap.group(2)) if gap.group(2) else lo
            if lo > hi:
                raise QuerySyntaxError(f"gap x({lo},{hi}) is reversed", offset)
            if not positions and not elements:
                raise UnsupportedConstructError("leading wildcard", pattern)
            if positions:
                elements.append(Key(tuple(positions)))
                positions = []
                elements.append(Gap(lo, hi))
            else:
                prev = elements.pop()
                elements.append(Gap(prev.lo + lo, prev.hi + hi))
        elif _PROSITE_CLASS.fullmatch(part):
            positions.append("".join(sorted(set(part[1:-1]))))
        elif _PROSITE_RESIDUE.fullmatch(part):
            positions.append(part)
        elif _PROSITE_REPEAT.fullmatch(part):
            raise UnsupportedConstructError("repetition", pattern)
        else:
            raise QuerySyntaxError(f"bad PROSITE element {part!r}", offset)
        offset += len(part.encode("utf-8")) + 1

    if not positions:
        raise UnsupportedConstructError("trailing wildcard", pattern)
    elements.append(Key(tuple(positions)))
    query = RegexQuery("", tuple(elements), query_id)
    return RegexQuery(format_query(query), query.elements, query_id)


def load_prosite_file(path):
    """Signatures one per line, either PATTERN or ID;PATTERN"""
    if not os.path.exists(path):
        raise MultigramError(f"signature file not found: {path}")
    queries = []
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if ";" in line:
                sig_id, pattern = (part.strip() for part in line.split(";", 1))
            else:
                sig_id, pattern = f"p{len(queries) + 1}", line
            queries.append(prosite_to_query(pattern, query_id=sig_id))
    return queries
