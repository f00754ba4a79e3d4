"""
Logic module for the multigram index
Corpus access, query language, selection models, solvers and matching
"""

from .corpus import Corpus, enumerate_grams, load_corpus, support
from .errors import InvariantViolation, MultigramError
from .lpms import GramSelection, select_ipms, select_lpms, verify_prefix_free
from .matcher import evaluate, matches
from .querylang import expand_or, key_grams, parse_query, prosite_to_query
from .selection_model import SelectionProblem, build_problem

__all__ = [
    'Corpus',
    'load_corpus',
    'support',
    'enumerate_grams',
    'parse_query',
    'expand_or',
    'key_grams',
    'prosite_to_query',
    'SelectionProblem',
    'build_problem',
    'GramSelection',
    'select_lpms',
    'select_ipms',
    'verify_prefix_free',
    'matches',
    'evaluate',
    'MultigramError',
    'InvariantViolation',
]
