"""Shared text primitives: lexical tokenization and sentence segmentation.

Both are deliberately rule-based and dependency-free so that every stage
built on top of them is reproducible bit-for-bit across platforms.
"""

from __future__ import annotations

import re

# A token is a maximal run of alphanumerics (underscore excluded); text is
# lowercased first and no stemming is applied.
_TOKEN = re.compile(r"[^\W_]+", re.UNICODE)

# Words that may precede a period without ending the sentence. Entries with
# internal dots ("e.g", "u.s") match the raw text before the final period.
DEFAULT_ABBREVIATIONS = frozenset(
    {"mr", "mrs", "ms", "dr", "prof", "st", "vs", "etc", "e.g", "i.e", "jr", "sr", "u.s", "u.k"}
)

_SENTENCE_END = ".!?"


def tokenize(text: str) -> list[str]:
    """Lowercased alphanumeric tokens of ``text``, in order."""
    return _TOKEN.findall(text.lower())


def token_spans(text: str) -> list[tuple[int, int, str]]:
    """(start, end, token) triples for case-preserving tokens of ``text``."""
    return [(m.start(), m.end(), m.group()) for m in _TOKEN.finditer(text)]


def _word_before(text: str, dot: int) -> str:
    """The raw word (letters, digits and dots) ending just before ``dot``."""
    k = dot - 1
    while k >= 0 and (text[k].isalnum() or text[k] == "."):
        k -= 1
    return text[k + 1 : dot]


def sentence_spans(
    text: str, abbreviations: frozenset[str] | set[str] = DEFAULT_ABBREVIATIONS
) -> list[tuple[int, int]]:
    """Character spans of the sentences in ``text``, excluding outer whitespace.

    A sentence ends after '.', '!' or '?' when followed by whitespace and an
    uppercase letter or digit, unless the word before a '.' is a known
    abbreviation. The spans are non-overlapping and in order; everything
    between consecutive spans is whitespace, so joining the sentence texts
    with single spaces reproduces the whitespace-normalized input.
    """
    abbrs = {a.lower() for a in abbreviations}
    spans: list[tuple[int, int]] = []
    n = len(text)
    start = 0
    i = 0
    while i < n:
        ch = text[i]
        if ch in _SENTENCE_END:
            j = i + 1
            while j < n and text[j].isspace():
                j += 1
            splits = j > i + 1 and j < n and (text[j].isupper() or text[j].isdigit())
            if splits and ch == "." and _word_before(text, i).lower() in abbrs:
                splits = False
            if splits:
                _append_trimmed(spans, text, start, i + 1)
                start = j
                i = j
                continue
        i += 1
    _append_trimmed(spans, text, start, n)
    return spans


def _append_trimmed(spans: list[tuple[int, int]], text: str, start: int, end: int) -> None:
    while start < end and text[start].isspace():
        start += 1
    while end > start and text[end - 1].isspace():
        end -= 1
    if end > start:
        spans.append((start, end))
