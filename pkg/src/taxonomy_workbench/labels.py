"""Label hygiene: validation, normalization, and token matching.

Every fuzzy comparison in the workbench (vocabulary lookups, overlap
diagnostics, repetition detection) goes through the normalizers here, so
all of them agree on what counts as "the same term".
"""

from __future__ import annotations

import re

from .errors import InvalidLabelError

PATH_SEPARATOR = " / "

_TOKEN_SPLIT = re.compile(r"[\s_\-]+")
_WHITESPACE = re.compile(r"\s+")

# Minimum length for prefix-based token matching; keeps short words like
# "in" from matching "india".
_MIN_STEM = 4


def clean_label(text: str) -> str:
    """Trim a label and reject values that cannot name a type.

    A label must be non-empty after trimming and must not contain the path
    separator, so that joined path strings stay unambiguous.
    """
    if not isinstance(text, str):
        raise InvalidLabelError(f"label must be a string, got {type(text).__name__}")
    cleaned = text.strip()
    if not cleaned:
        raise InvalidLabelError("label is empty")
    if PATH_SEPARATOR in cleaned:
        raise InvalidLabelError(f"label {cleaned!r} contains the path separator {PATH_SEPARATOR!r}")
    return cleaned


def normalize_label(text: str) -> str:
    """Fold a label for matching: lowercase, underscores to spaces, trimmed."""
    folded = text.replace("_", " ").casefold()
    return _WHITESPACE.sub(" ", folded).strip()


def label_tokens(text: str) -> tuple[str, ...]:
    """Split a label into folded tokens on whitespace, underscores, hyphens."""
    return tuple(t for t in _TOKEN_SPLIT.split(text.casefold()) if t)


def tokens_match(a: str, b: str) -> bool:
    """True when two tokens are equal or one is a long-enough stem of the other."""
    if a == b:
        return True
    shorter, longer = (a, b) if len(a) <= len(b) else (b, a)
    return len(shorter) >= _MIN_STEM and longer.startswith(shorter)


def labels_similar(a: str, b: str) -> bool:
    """True when two labels share a matching token or normalize identically."""
    if normalize_label(a) == normalize_label(b):
        return True
    tokens_b = label_tokens(b)
    return any(tokens_match(ta, tb) for ta in label_tokens(a) for tb in tokens_b)
