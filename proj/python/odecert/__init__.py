"""Certified closed-form solutions of ODE systems."""

import json

from ._core import (
    Error,
    ParseError,
    certify,
    classify,
    differentiate,
    equal,
    extract_corpus,
    parse_system,
    refute,
    solve,
    state_vars,
)
from ._core import run_suite as _run_suite

__all__ = [
    "Error",
    "ParseError",
    "certify",
    "classify",
    "differentiate",
    "equal",
    "extract_corpus",
    "parse_system",
    "refute",
    "run_suite",
    "solve",
    "state_vars",
]


def run_suite(suite="reference", backend="builtin", jobs=1, seed=1):
    """Report rows as dicts, one per case."""
    return [json.loads(row) for row in _run_suite(suite, backend, jobs, seed)]
