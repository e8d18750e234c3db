"""Rule-based decomposition of questions into retrieval sub-queries, and
sentence segmentation of summaries.

The default decomposer is deterministic: the question (or its top-level
clauses) becomes the General sub-queries, and each General is paired with a
Specific sub-query that embeds the candidate answer via a fixed template.
An alternative decomposer (e.g. one backed by a generative model) can be
plugged in through the Decomposer protocol.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Protocol

from .text import DEFAULT_ABBREVIATIONS, sentence_spans

SPECIFIC_TEMPLATE = "Regarding: {general}. Candidate: {answer}."


class QueryKind(Enum):
    GENERAL = "general"
    SPECIFIC = "specific"


class EmptyQuestionError(ValueError):
    """decompose_qa was called with an empty question."""


@dataclass(frozen=True)
class SubQuery:
    step: int
    kind: QueryKind
    text: str
    origin_span: tuple[int, int] | None = None


@dataclass(frozen=True)
class Segment:
    index: int
    text: str
    span: tuple[int, int]


class Decomposer(Protocol):
    def decompose(self, question: str, answer: str) -> list[SubQuery]: ...


def _split_clauses(question: str) -> list[str]:
    """Split on top-level " and " / ";" outside double quotes.

    Apostrophes are not treated as quote delimiters so contractions and
    possessives do not suppress splits.
    """
    parts: list[str] = []
    start = 0
    in_quotes = False
    i = 0
    n = len(question)
    while i < n:
        ch = question[i]
        if ch in '"“”':
            in_quotes = not in_quotes
            i += 1
            continue
        if not in_quotes:
            if ch == ";":
                parts.append(question[start:i])
                start = i + 1
                i += 1
                continue
            if question.startswith(" and ", i):
                parts.append(question[start:i])
                start = i + 5
                i += 5
                continue
        i += 1
    parts.append(question[start:])
    return [p.strip() for p in parts if p.strip()]


def decompose_qa(question: str, answer: str) -> list[SubQuery]:
    """Build the ordered General/Specific sub-query sequence for a QA pair.

    Each top-level clause of the question yields one General sub-query
    immediately followed by its Specific variant (suppressed when the answer
    is empty), so steps run 1..N with every Specific at step General+1.
    """
    if not question.strip():
        raise EmptyQuestionError("question must be non-empty")
    clauses = _split_clauses(question) or [question.strip()]
    answer_text = answer.strip()
    queries: list[SubQuery] = []
    step = 1
    for clause in clauses:
        queries.append(SubQuery(step=step, kind=QueryKind.GENERAL, text=clause))
        step += 1
        if answer_text:
            queries.append(
                SubQuery(
                    step=step,
                    kind=QueryKind.SPECIFIC,
                    text=SPECIFIC_TEMPLATE.format(general=clause, answer=answer_text),
                    origin_span=(0, len(answer)),
                )
            )
            step += 1
    return queries


def segment_summary(
    summary: str, abbreviations: frozenset[str] | set[str] = DEFAULT_ABBREVIATIONS
) -> list[Segment]:
    """Sentence-level segments of ``summary``, with spans into the original.

    Segments are non-overlapping and in order; only whitespace falls between
    them, so joining the texts with single spaces and collapsing whitespace
    reconstructs the whitespace-normalized summary. An empty summary yields
    an empty list.
    """
    return [
        Segment(index=i, text=summary[start:end], span=(start, end))
        for i, (start, end) in enumerate(sentence_spans(summary, abbreviations))
    ]


class RuleDecomposer:
    """Default deterministic decomposer; see decompose_qa."""

    def decompose(self, question: str, answer: str) -> list[SubQuery]:
        return decompose_qa(question, answer)
