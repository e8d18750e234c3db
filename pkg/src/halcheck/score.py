"""Factual-consistency scoring and per-sample judgment.

The consistency score S = f(generation, knowledge) lies in [0, 1]; lower
means more likely hallucinated. The scorer is pluggable: BaselineScorer is a
deterministic lexical stand-in that makes the whole pipeline testable
offline, while RemoteScorer talks to a model server over a fixed wire
protocol (POST {endpoint}/v1/score with {"pairs": [{"premise", "hypothesis"}]},
answered by {"scores": [...]} of equal length and order).

On top of the score sit three rules: segment aggregation (one failing
segment halves the overall score), an optional non-fabrication pre-check
(entities/numbers absent from the knowledge force the hallucinated label),
and threshold classification (score < tau means hallucinated; a score equal
to tau is faithful).
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Protocol, Sequence

import requests

from .corpus import Sample, Task
from .decompose import decompose_qa, segment_summary
from .retrieve import (
    DEFAULT_B,
    DEFAULT_K1,
    DEFAULT_TOP_K,
    DEFAULT_WINDOW_SENTENCES,
    KnowledgeItem,
    build_index,
    condense_snippet,
    retrieve,
    sentence_windows,
)
from .text import DEFAULT_ABBREVIATIONS, sentence_spans, token_spans, tokenize

# Fixed 50-word function-word list; tokens outside it are "content" tokens.
STOPWORDS = frozenset(
    {
        "the", "a", "an", "and", "or", "but", "if", "then",
        "is", "are", "was", "were", "be", "been", "being", "am",
        "do", "does", "did", "have", "has", "had",
        "of", "in", "on", "at", "to", "for", "with", "by", "from", "as",
        "into", "about", "not", "no",
        "this", "that", "these", "those", "it", "its",
        "he", "she", "they", "them", "his", "her", "their", "we",
    }
)

NEGATION_TOKENS = frozenset({"not", "no", "never", "cannot", "nt"})
NEGATION_FACTOR = 0.5


class Label(Enum):
    HALLUCINATED = "hallucinated"
    FAITHFUL = "faithful"
    NONANSWER = "nonanswer"


class EmptyHypothesisError(ValueError):
    """A scorer was handed an empty hypothesis."""


class ScorerProtocolError(RuntimeError):
    """The remote scorer violated the wire contract."""

    def __init__(self, message: str, chunk_index: int):
        super().__init__(f"chunk {chunk_index}: {message}")
        self.chunk_index = chunk_index


class UnreachableError(ScorerProtocolError):
    pass


class ScorerTimeoutError(ScorerProtocolError):
    pass


class MalformedResponseError(ScorerProtocolError):
    pass


class OutOfRangeScoreError(ScorerProtocolError):
    pass


@dataclass(frozen=True)
class ScoreRequest:
    premise: str
    hypothesis: str


@dataclass(frozen=True)
class ConsistencyJudgment:
    sample_id: str
    raw_score: float
    segment_scores: tuple[tuple[int, float], ...]
    adjusted_score: float
    fabricated: bool
    label: Label
    threshold: float


class ScorerBackend(Protocol):
    def score_batch(self, requests_: Sequence[ScoreRequest]) -> list[float]: ...


def baseline_score(premise: str, hypothesis: str) -> float:
    """Deterministic lexical consistency score in [0, 1].

    Coverage of the hypothesis' content tokens (lowercased alphanumerics
    minus the 50-word stop-list) by the premise token set; a hypothesis with
    no content tokens covers trivially. If exactly one side contains a
    negation token the score is halved.
    """
    if not hypothesis.strip():
        raise EmptyHypothesisError("hypothesis must be non-empty")
    hyp_tokens = tokenize(hypothesis)
    premise_tokens = set(tokenize(premise))
    content = {t for t in hyp_tokens if t not in STOPWORDS}
    coverage = 1.0 if not content else len(content & premise_tokens) / len(content)
    negated_h = any(t in NEGATION_TOKENS for t in hyp_tokens)
    negated_p = any(t in NEGATION_TOKENS for t in premise_tokens)
    if negated_h != negated_p:
        coverage *= NEGATION_FACTOR
    return min(1.0, max(0.0, coverage))


class BaselineScorer:
    """Offline ScorerBackend built on baseline_score."""

    def score_batch(self, requests_: Sequence[ScoreRequest]) -> list[float]:
        return [baseline_score(r.premise, r.hypothesis) for r in requests_]


def remote_score_batch(
    endpoint: str,
    requests_: Sequence[ScoreRequest],
    batch_size: int,
    timeout: float,
) -> list[float]:
    """Score request pairs against a model server, preserving order.

    Requests are posted in chunks of at most ``batch_size``; any transport or
    contract failure aborts the run with the failing chunk identified.
    """
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    url = endpoint.rstrip("/") + "/v1/score"
    scores: list[float] = []
    for chunk_index, start in enumerate(range(0, len(requests_), batch_size)):
        chunk = requests_[start : start + batch_size]
        body = {"pairs": [{"premise": r.premise, "hypothesis": r.hypothesis} for r in chunk]}
        try:
            response = requests.post(url, json=body, timeout=timeout)
        except requests.Timeout as exc:
            raise ScorerTimeoutError(f"no response within {timeout}s", chunk_index) from exc
        except requests.ConnectionError as exc:
            raise UnreachableError(f"cannot reach {url}", chunk_index) from exc
        if response.status_code != 200:
            raise MalformedResponseError(f"HTTP {response.status_code}", chunk_index)
        try:
            payload = response.json()
        except ValueError as exc:
            raise MalformedResponseError("response is not valid JSON", chunk_index) from exc
        chunk_scores = payload.get("scores") if isinstance(payload, dict) else None
        if not isinstance(chunk_scores, list) or len(chunk_scores) != len(chunk):
            raise MalformedResponseError(
                f"expected {len(chunk)} scores, got "
                f"{len(chunk_scores) if isinstance(chunk_scores, list) else 'none'}",
                chunk_index,
            )
        for value in chunk_scores:
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise MalformedResponseError(f"non-numeric score {value!r}", chunk_index)
            if not 0.0 <= value <= 1.0:
                raise OutOfRangeScoreError(f"score {value!r} outside [0, 1]", chunk_index)
            scores.append(float(value))
    return scores


class RemoteScorer:
    """ScorerBackend speaking the model-server wire protocol."""

    def __init__(self, endpoint: str, batch_size: int = 16, timeout: float = 60.0):
        self.endpoint = endpoint
        self.batch_size = batch_size
        self.timeout = timeout

    def score_batch(self, requests_: Sequence[ScoreRequest]) -> list[float]:
        return remote_score_batch(self.endpoint, requests_, self.batch_size, self.timeout)

    def healthcheck(self) -> bool:
        try:
            response = requests.get(self.endpoint.rstrip("/") + "/healthz", timeout=self.timeout)
        except requests.RequestException:
            return False
        return response.status_code == 200


def aggregate_segments(
    raw_score: float,
    segment_scores: Sequence[float],
    segment_threshold: float,
    halving_factor: float,
) -> float:
    """Reduce ``raw_score`` by ``halving_factor`` once if any segment fails.

    A segment fails when its score is strictly below ``segment_threshold``;
    with no failing segment the raw score passes through unchanged.
    """
    for value in (raw_score, segment_threshold, halving_factor, *segment_scores):
        if not 0.0 <= value <= 1.0:
            raise ValueError(f"value {value!r} outside [0, 1]")
    if any(s < segment_threshold for s in segment_scores):
        return raw_score * halving_factor
    return raw_score


def _anchors(hypothesis: str, knowledge_tokens: set[str]) -> list[tuple[str, ...]]:
    """Checkable anchors: capitalized token runs and numeric tokens.

    A run groups consecutive capitalized tokens separated by whitespace only.
    A single capitalized word opening a sentence is dropped when its
    lowercase form occurs in the knowledge (it is ordinary sentence case,
    not a name).
    """
    words = token_spans(hypothesis)
    sentence_starts = {start for start, _ in sentence_spans(hypothesis)}
    anchors: list[tuple[str, ...]] = []
    run: list[tuple[int, str]] = []  # (start offset, token)
    run_end = -1

    def flush() -> None:
        if not run:
            return
        tokens = tuple(tok for _, tok in run)
        initial = len(run) == 1 and run[0][0] in sentence_starts
        if not (initial and tokens[0].lower() in knowledge_tokens):
            anchors.append(tokens)
        run.clear()

    for start, end, word in words:
        if word[0].isupper():
            adjacent = run and hypothesis[run_end:start].isspace()
            if run and not adjacent:
                flush()
            run.append((start, word))
            run_end = end
            continue
        flush()
        if word.isdigit():
            anchors.append((word,))
    flush()
    return anchors


def non_fabrication_check(hypothesis: str, knowledge: str) -> bool:
    """True when the hypothesis fabricates an entity or number.

    An anchor counts as fabricated unless every one of its tokens occurs in
    the knowledge (case-insensitive); a hypothesis without anchors is never
    fabricated.
    """
    if not hypothesis.strip():
        raise EmptyHypothesisError("hypothesis must be non-empty")
    knowledge_tokens = set(tokenize(knowledge))
    for anchor in _anchors(hypothesis, knowledge_tokens):
        if not all(tok.lower() in knowledge_tokens for tok in anchor):
            return True
    return False


def classify(adjusted_score: float, threshold: float, fabricated: bool) -> Label:
    """Hallucinated if fabricated or score strictly below the threshold.

    A score exactly equal to the threshold is faithful.
    """
    if not 0.0 <= adjusted_score <= 1.0 or not 0.0 <= threshold <= 1.0:
        raise ValueError("score and threshold must lie in [0, 1]")
    if fabricated or adjusted_score < threshold:
        return Label.HALLUCINATED
    return Label.FAITHFUL


@dataclass(frozen=True)
class JudgeConfig:
    threshold: float = 0.5
    segmented: bool = False
    non_fabrication: bool = False
    segment_threshold: float = 0.5
    halving_factor: float = 0.5
    top_k: int = DEFAULT_TOP_K
    k1: float = DEFAULT_K1
    b: float = DEFAULT_B
    window_sentences: int = DEFAULT_WINDOW_SENTENCES
    knowledge_budget: int = 512
    abbreviations: tuple[str, ...] | None = None  # None = built-in stop-list

    def __post_init__(self) -> None:
        for name in ("threshold", "segment_threshold", "halving_factor"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value!r}")
        if self.top_k < 1 or self.window_sentences < 1 or self.knowledge_budget < 1:
            raise ValueError("top_k, window_sentences and knowledge_budget must be >= 1")


@dataclass
class JudgeTiming:
    retrieval: float = 0.0
    scoring: float = 0.0


@dataclass
class JudgeOutcome:
    judgment: ConsistencyJudgment
    timing: JudgeTiming = field(default_factory=JudgeTiming)


def _assemble_qa_knowledge(items: Sequence[KnowledgeItem], budget: int) -> str:
    """Pack condensed snippets and rendered triplets into a token budget.

    Items are consumed in retrieval-score order; each contributes its
    condensed snippet followed by its triplets as "subject relation object."
    sentences, until the budget is spent.
    """
    remaining = budget
    parts: list[str] = []
    for item in items:
        if remaining < 1:
            break
        text = condense_snippet(item.snippet, remaining)
        if not text:
            continue
        parts.append(text)
        remaining -= len(tokenize(text))
        for subject, relation, obj in item.triplets:
            rendered = f"{subject} {relation} {obj}."
            cost = len(tokenize(rendered))
            if cost > remaining:
                break
            parts.append(rendered)
            remaining -= cost
    return " ".join(parts)


def _dedupe_items(items: list[KnowledgeItem]) -> list[KnowledgeItem]:
    """Keep the best-scoring item per (doc_id, span), ordered by score."""
    best: dict[tuple[str, tuple[int, int]], KnowledgeItem] = {}
    for item in items:
        key = (item.doc_id, item.span)
        if key not in best or item.score > best[key].score:
            best[key] = item
    return sorted(best.values(), key=lambda it: (-it.score, it.doc_id, it.span))


def judge_sample(
    sample: Sample, backend: ScorerBackend, config: JudgeConfig = JudgeConfig()
) -> JudgeOutcome:
    """Score one sample end to end and classify it.

    An empty generation short-circuits to a NonAnswer judgment. QA samples
    are scored against knowledge assembled from retrieval over their
    sub-queries; summarization samples are scored against their full source
    document. With ``segmented`` every sentence of the generation is also
    scored against the windows retrieved for it, and one failing segment
    reduces the overall score by the halving factor.
    """
    timing = JudgeTiming()
    generation = sample.generation
    if not generation.strip():
        return JudgeOutcome(
            ConsistencyJudgment(
                sample_id=sample.id,
                raw_score=0.0,
                segment_scores=(),
                adjusted_score=0.0,
                fabricated=False,
                label=Label.NONANSWER,
                threshold=config.threshold,
            ),
            timing,
        )

    t0 = time.perf_counter()
    if sample.task is Task.QA:
        index = build_index([("k0", sample.knowledge)])
        queries = decompose_qa(sample.question or "", generation)
        collected: list[KnowledgeItem] = []
        for query in queries:
            collected.extend(retrieve(index, query, config.top_k, k1=config.k1, b=config.b))
        premise = _assemble_qa_knowledge(_dedupe_items(collected), config.knowledge_budget)
    else:
        premise = sample.knowledge

    abbreviations = (
        frozenset(config.abbreviations) if config.abbreviations else DEFAULT_ABBREVIATIONS
    )
    segments = segment_summary(generation, abbreviations) if config.segmented else []
    segment_premises: list[str] = []
    if segments:
        windows = sentence_windows(
            sample.knowledge, size=config.window_sentences, stride=1, abbreviations=abbreviations
        )
        window_index = build_index(
            [(f"w{i:04d}", text) for i, (_, text) in enumerate(windows)]
        )
        for segment in segments:
            items = retrieve(
                window_index,
                segment.text,
                config.top_k,
                k1=config.k1,
                b=config.b,
                whole_document_snippet=True,
            )
            segment_premises.append(" ".join(item.snippet for item in items))
    timing.retrieval += time.perf_counter() - t0

    t0 = time.perf_counter()
    batch = [ScoreRequest(premise=premise, hypothesis=generation)]
    batch.extend(
        ScoreRequest(premise=seg_premise, hypothesis=seg.text)
        for seg, seg_premise in zip(segments, segment_premises)
    )
    scores = backend.score_batch(batch)
    timing.scoring += time.perf_counter() - t0

    raw_score = scores[0]
    segment_scores = tuple((seg.index, score) for seg, score in zip(segments, scores[1:]))
    adjusted = aggregate_segments(
        raw_score,
        [score for _, score in segment_scores],
        config.segment_threshold,
        config.halving_factor,
    )
    fabricated = non_fabrication_check(generation, premise) if config.non_fabrication else False
    label = classify(adjusted, config.threshold, fabricated)
    return JudgeOutcome(
        ConsistencyJudgment(
            sample_id=sample.id,
            raw_score=raw_score,
            segment_scores=segment_scores,
            adjusted_score=adjusted,
            fabricated=fabricated,
            label=label,
            threshold=config.threshold,
        ),
        timing,
    )
