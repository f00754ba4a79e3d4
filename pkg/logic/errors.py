"""
Error types for the multigram index engine

Every error carries the process exit code the CLI reports for it:
2 for data errors, 3 for internal invariant violations.
"""


class MultigramError(Exception):
    """Base class for all engine errors"""

    exit_code = 2


class CorpusError(MultigramError):
    """Unreadable corpus file or a character outside the declared alphabet"""

    def __init__(self, message, record_id=None, offset=None):
        super().__init__(message)
        self.record_id = record_id
        self.offset = offset


class QuerySyntaxError(MultigramError):
    def __init__(self, message, offset):
        super().__init__(f"{message} (at byte {offset})")
        self.offset = offset


class ExpansionLimitError(MultigramError):
    def __init__(self, count, cap):
        super().__init__(f"alternation expands to {count} sub-queries (cap {cap})")
        self.count = count
        self.cap = cap


class UnsupportedConstructError(MultigramError):
    def __init__(self, construct, pattern=None):
        message = f"unsupported construct: {construct}"
        if pattern is not None:
            message += f" in {pattern!r}"
        super().__init__(message)
        self.construct = construct


class EmptyModelError(MultigramError):
    """No candidate gram with positive support survives model construction"""


class EmptySelectionError(MultigramError):
    """An index was requested for a selection without grams"""


class SolverError(MultigramError):
    def __init__(self, status, message=""):
        super().__init__(f"solver failed with status {status}: {message}")
        self.status = status


class IncompleteSearchError(SolverError):
    """Branch-and-bound ran out of nodes; the best incumbent is attached"""

    def __init__(self, incumbent, nodes):
        super().__init__("node_limit", f"search stopped after {nodes} nodes")
        self.incumbent = incumbent
        self.nodes = nodes


class IndexFormatError(MultigramError):
    """Bad version, truncated file or checksum mismatch"""


class FingerprintMismatchError(MultigramError):
    def __init__(self, expected, actual):
        super().__init__(f"index built for corpus {expected}, got corpus {actual}")
        self.expected = expected
        self.actual = actual


class WorkloadMismatchError(MultigramError):
    """Answers and ground truth cover different query ids"""


class SpecError(MultigramError):
    """A synthetic corpus or workload request cannot be satisfied"""


class InvariantViolation(MultigramError):
    exit_code = 3
