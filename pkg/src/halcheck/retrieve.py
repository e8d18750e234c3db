"""Lexical retrieval over local documents, plus knowledge refinement.

The built-in retriever is Okapi BM25 over an in-memory index; dense or
external retrievers can replace it behind the Retriever protocol. Retrieved
text is refined into an unstructured form (a snippet condensed to a token
budget) and a structured form (subject/relation/object triplets extracted
with a fixed verb lexicon).
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass
from typing import Protocol, Sequence

from .decompose import SubQuery
from .text import DEFAULT_ABBREVIATIONS, sentence_spans, token_spans, tokenize

DEFAULT_K1 = 1.2
DEFAULT_B = 0.75
DEFAULT_TOP_K = 3
DEFAULT_WINDOW_SENTENCES = 3

# First verb (lowercased) that splits a sentence into subject / relation /
# object. "was"/"were" may absorb a following past participle and
# preposition, e.g. "was released in".
VERB_LEXICON = frozenset(
    {
        "is", "are", "was", "were", "has", "have", "had",
        "directed", "released", "composed", "wrote", "won", "plays", "played",
        "stars", "starred", "born", "died", "founded", "located",
    }
)

_PREPOSITIONS = frozenset(
    {"in", "on", "at", "by", "to", "for", "with", "from", "of", "as", "into", "during", "near"}
)

_IRREGULAR_PARTICIPLES = frozenset(
    {
        "born", "written", "won", "made", "built", "known", "seen", "given",
        "taken", "shown", "held", "found", "founded", "set", "begun", "sung",
        "sold", "told", "run", "drawn", "driven", "grown", "thrown", "flown",
        "broken", "chosen", "frozen", "spoken", "hidden", "ridden", "beaten",
        "eaten", "fallen", "forgotten", "brought", "bought",
    }
)

_ED_SUFFIX = re.compile(r"[^\W\d_]+ed$", re.UNICODE)


class EmptyCorpusError(ValueError):
    """build_index was called with no documents."""


class EmptyDocumentError(ValueError):
    """A document produced no tokens."""

    def __init__(self, doc_id: str):
        super().__init__(f"document {doc_id!r} has no tokens")
        self.doc_id = doc_id


class DuplicateDocIdError(ValueError):
    """Two documents share a doc_id."""


@dataclass(frozen=True)
class KnowledgeItem:
    snippet: str
    triplets: tuple[tuple[str, str, str], ...]
    doc_id: str
    span: tuple[int, int]
    score: float


class LexicalIndex:
    """Immutable BM25 statistics over a tokenized document collection."""

    def __init__(self, documents: Sequence[tuple[str, list[str]]], texts: dict[str, str]):
        self.documents: tuple[tuple[str, tuple[str, ...]], ...] = tuple(
            (doc_id, tuple(tokens)) for doc_id, tokens in documents
        )
        self.texts = dict(texts)
        self._term_freqs = [Counter(tokens) for _, tokens in self.documents]
        self.doc_freq: dict[str, int] = {}
        for tf in self._term_freqs:
            for term in tf:
                self.doc_freq[term] = self.doc_freq.get(term, 0) + 1
        total = sum(len(tokens) for _, tokens in self.documents)
        self.avgdl = total / len(self.documents)

    def __len__(self) -> int:
        return len(self.documents)


class Retriever(Protocol):
    def retrieve(self, query: SubQuery | str, k: int) -> list[KnowledgeItem]: ...


def build_index(documents: Sequence[tuple[str, str]]) -> LexicalIndex:
    """Index ``documents`` (doc_id, text) for BM25 retrieval.

    Raises EmptyCorpusError for an empty collection, EmptyDocumentError for a
    document with no tokens and DuplicateDocIdError for repeated ids.
    """
    if not documents:
        raise EmptyCorpusError("at least one document is required")
    tokenized: list[tuple[str, list[str]]] = []
    texts: dict[str, str] = {}
    for doc_id, text in documents:
        if doc_id in texts:
            raise DuplicateDocIdError(f"duplicate doc_id {doc_id!r}")
        tokens = tokenize(text)
        if not tokens:
            raise EmptyDocumentError(doc_id)
        tokenized.append((doc_id, tokens))
        texts[doc_id] = text
    return LexicalIndex(tokenized, texts)


def _idf(index: LexicalIndex, term: str) -> float:
    df = index.doc_freq.get(term, 0)
    if df == 0:
        return 0.0
    n = len(index)
    return math.log(1.0 + (n - df + 0.5) / (df + 0.5))


def bm25_scores(
    index: LexicalIndex, query_tokens: Sequence[str], k1: float = DEFAULT_K1, b: float = DEFAULT_B
) -> list[float]:
    """Okapi BM25 score of every indexed document against ``query_tokens``."""
    scores = []
    for (_, tokens), tf in zip(index.documents, index._term_freqs):
        dl = len(tokens)
        norm = k1 * (1.0 - b + b * dl / index.avgdl)
        score = 0.0
        for term in query_tokens:
            freq = tf.get(term, 0)
            if freq == 0:
                continue
            score += _idf(index, term) * freq * (k1 + 1.0) / (freq + norm)
        scores.append(score)
    return scores


def retrieve(
    index: LexicalIndex,
    query: SubQuery | str,
    k: int,
    *,
    k1: float = DEFAULT_K1,
    b: float = DEFAULT_B,
    whole_document_snippet: bool = False,
) -> list[KnowledgeItem]:
    """Top-k documents by BM25, each refined into a KnowledgeItem.

    Only documents with positive score are returned, in descending score
    order with ties broken by ascending doc_id. The snippet is the sentence
    with the strongest query-term overlap plus one sentence either side;
    with ``whole_document_snippet`` (used when documents are already short
    windows) the full document text is the snippet.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    query_text = query.text if isinstance(query, SubQuery) else query
    query_tokens = tokenize(query_text)
    if not query_tokens:
        return []
    scores = bm25_scores(index, query_tokens, k1=k1, b=b)
    ranked = sorted(
        (
            (doc_id, score)
            for (doc_id, _), score in zip(index.documents, scores)
            if score > 0.0
        ),
        key=lambda item: (-item[1], item[0]),
    )
    results = []
    for doc_id, score in ranked[:k]:
        text = index.texts[doc_id]
        if whole_document_snippet:
            span = (0, len(text))
        else:
            span = _snippet_span(text, set(query_tokens))
        snippet = text[span[0] : span[1]]
        results.append(
            KnowledgeItem(
                snippet=snippet,
                triplets=tuple(extract_triplets(snippet)),
                doc_id=doc_id,
                span=span,
                score=score,
            )
        )
    return results


def _snippet_span(text: str, query_terms: set[str]) -> tuple[int, int]:
    """Span of the best-matching sentence plus one sentence either side."""
    spans = sentence_spans(text)
    if not spans:
        return (0, len(text))
    best_i = 0
    best_overlap = -1
    for i, (start, end) in enumerate(spans):
        overlap = sum(1 for tok in tokenize(text[start:end]) if tok in query_terms)
        if overlap > best_overlap:
            best_overlap = overlap
            best_i = i
    lo = max(0, best_i - 1)
    hi = min(len(spans) - 1, best_i + 1)
    return (spans[lo][0], spans[hi][1])


def sentence_windows(
    text: str,
    size: int = DEFAULT_WINDOW_SENTENCES,
    stride: int = 1,
    abbreviations=None,
) -> list[tuple[tuple[int, int], str]]:
    """Overlapping ``size``-sentence windows of ``text`` with the given stride.

    Returns (span, window_text) pairs; a text with at most ``size`` sentences
    yields a single window covering all of them.
    """
    if size < 1 or stride < 1:
        raise ValueError("size and stride must be >= 1")
    spans = sentence_spans(text, abbreviations or DEFAULT_ABBREVIATIONS)
    if not spans:
        return []
    if len(spans) <= size:
        span = (spans[0][0], spans[-1][1])
        return [(span, text[span[0] : span[1]])]
    windows = []
    for start in range(0, len(spans) - size + 1, stride):
        span = (spans[start][0], spans[start + size - 1][1])
        windows.append((span, text[span[0] : span[1]]))
    return windows


def _is_past_participle(word: str) -> bool:
    lower = word.lower()
    return lower in _IRREGULAR_PARTICIPLES or bool(_ED_SUFFIX.fullmatch(lower))


def extract_triplets(
    snippet: str, verbs: frozenset[str] | set[str] = VERB_LEXICON
) -> list[tuple[str, str, str]]:
    """Pattern-based (subject, relation, object) extraction from ``snippet``.

    Each sentence is split at its first verb from the lexicon; "was"/"were"
    absorb a following past participle and preposition ("was released in").
    Sentences with no verb match, or with an empty subject or object, yield
    nothing. Extraction is deterministic.
    """
    verb_set = {v.lower() for v in verbs}
    triplets: list[tuple[str, str, str]] = []
    for start, end in sentence_spans(snippet):
        sentence = snippet[start:end]
        words = token_spans(sentence)
        verb_i = next((i for i, (_, _, w) in enumerate(words) if w.lower() in verb_set), None)
        if verb_i is None:
            continue
        rel_end_i = verb_i
        if words[verb_i][2].lower() in ("was", "were"):
            if rel_end_i + 1 < len(words) and _is_past_participle(words[rel_end_i + 1][2]):
                rel_end_i += 1
                if rel_end_i + 1 < len(words) and words[rel_end_i + 1][2].lower() in _PREPOSITIONS:
                    rel_end_i += 1
        relation = sentence[words[verb_i][0] : words[rel_end_i][1]]
        subject = sentence[: words[verb_i][0]].strip().strip(",;:").strip()
        obj = sentence[words[rel_end_i][1] :].strip().rstrip(".!?,;:").strip()
        if subject and relation and obj:
            triplets.append((subject, relation, obj))
    return triplets


def condense_snippet(snippet: str, max_tokens: int) -> str:
    """Truncate ``snippet`` at the last sentence boundary within the budget.

    A snippet already within budget is returned unchanged; when even the
    first sentence exceeds it, the text is cut hard after ``max_tokens``
    tokens. Idempotent: condensing the result again is a no-op.
    """
    if max_tokens < 1:
        raise ValueError("max_tokens must be >= 1")
    if len(tokenize(snippet)) <= max_tokens:
        return snippet
    spans = sentence_spans(snippet)
    used = 0
    cut = None
    for start, end in spans:
        used += len(tokenize(snippet[start:end]))
        if used > max_tokens:
            break
        cut = end
    if cut is not None:
        return snippet[:cut]
    # first sentence alone blows the budget: keep the first max_tokens tokens
    words = token_spans(snippet)
    return snippet[: words[max_tokens - 1][1]]


class Bm25Retriever:
    """Default Retriever binding an index to fixed BM25 parameters."""

    def __init__(
        self,
        index: LexicalIndex,
        *,
        k1: float = DEFAULT_K1,
        b: float = DEFAULT_B,
        whole_document_snippet: bool = False,
    ):
        self.index = index
        self.k1 = k1
        self.b = b
        self.whole_document_snippet = whole_document_snippet

    def retrieve(self, query: SubQuery | str, k: int) -> list[KnowledgeItem]:
        return retrieve(
            self.index,
            query,
            k,
            k1=self.k1,
            b=self.b,
            whole_document_snippet=self.whole_document_snippet,
        )
