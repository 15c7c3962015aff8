"""Shared text normalization: word tokens, normalized equality, Jaccard.

Every free-text comparison in the package (query filters, match scoring,
evaluation hits) goes through these helpers so the behaviour is auditable
in one place. Tokens are lowercased alphanumeric runs; punctuation and
case never affect a comparison.
"""
from __future__ import annotations

import re

_TOKEN_RE = re.compile(r"[a-z0-9]+")


def word_tokens(text: str) -> tuple[str, ...]:
    """Lowercased alphanumeric tokens of *text*, in order."""
    return tuple(_TOKEN_RE.findall(text.lower()))


def token_set(text: str) -> frozenset[str]:
    return frozenset(word_tokens(text))


def normalize_text(text: str) -> str:
    """Canonical form used for normalized-equality comparisons."""
    return " ".join(word_tokens(text))


def jaccard(a: frozenset[str], b: frozenset[str]) -> float:
    """Jaccard similarity; the empty-vs-empty case is defined as 0."""
    if not a and not b:
        return 0.0
    union = a | b
    if not union:
        return 0.0
    return len(a & b) / len(union)
