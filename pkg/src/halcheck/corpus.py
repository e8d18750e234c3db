"""Dataset ingestion, validation and deterministic sampling.

Datasets are UTF-8 files with one JSON record per line. Canonical fields:
``id``, ``knowledge``, ``question``, ``generation``, ``gold_label``; unknown
fields are ignored and blank lines are skipped. ``gold_label`` is the string
"hallucinated" or "faithful" (case-insensitive) or absent for unlabeled
leaderboard dumps.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path
from typing import Iterable


class Task(Enum):
    QA = "qa"
    SUMMARIZATION = "summarization"


class GoldLabel(Enum):
    HALLUCINATED = "hallucinated"
    FAITHFUL = "faithful"


class MalformedRecordError(ValueError):
    """A record is unparseable or misses a required field."""

    def __init__(self, line_number: int, reason: str):
        super().__init__(f"line {line_number}: {reason}")
        self.line_number = line_number
        self.reason = reason


class DuplicateIdError(ValueError):
    """Two records in one dataset share an id."""


@dataclass(frozen=True)
class Sample:
    id: str
    task: Task
    knowledge: str
    question: str | None
    generation: str
    gold_label: GoldLabel | None

    def __post_init__(self) -> None:
        if not self.knowledge:
            raise ValueError(f"sample {self.id!r}: knowledge must be non-empty")
        if self.task is Task.QA and not (self.question and self.question.strip()):
            raise ValueError(f"sample {self.id!r}: QA samples need a non-empty question")


@dataclass(frozen=True)
class Dataset:
    samples: tuple[Sample, ...]
    task: Task
    origin: str

    def __len__(self) -> int:
        return len(self.samples)

    def __iter__(self):
        return iter(self.samples)


def ingest_dataset(path: str | Path, task: Task) -> Dataset:
    """Load every record of the line-delimited file at ``path``.

    Raises FileNotFoundError for a missing file, MalformedRecordError (with
    the 1-based line number) for an unparseable record or a missing required
    field, and DuplicateIdError for a repeated id. A record without an ``id``
    gets one synthesized from its zero-padded line number.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"dataset file not found: {path}")
    samples: list[Sample] = []
    seen: set[str] = set()
    with path.open(encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            sample = _parse_record(line, line_no, task)
            if sample.id in seen:
                raise DuplicateIdError(f"duplicate sample id {sample.id!r} at line {line_no}")
            seen.add(sample.id)
            samples.append(sample)
    return Dataset(samples=tuple(samples), task=task, origin=str(path))


def _parse_record(line: str, line_no: int, task: Task) -> Sample:
    try:
        record = json.loads(line)
    except json.JSONDecodeError as exc:
        raise MalformedRecordError(line_no, f"invalid record syntax ({exc.msg})") from exc
    if not isinstance(record, dict):
        raise MalformedRecordError(line_no, "record is not an object")

    knowledge = record.get("knowledge")
    if not isinstance(knowledge, str) or not knowledge:
        raise MalformedRecordError(line_no, "missing required field 'knowledge'")

    question = record.get("question")
    if question is not None and not isinstance(question, str):
        raise MalformedRecordError(line_no, "'question' must be a string")
    if task is Task.QA and not (question and question.strip()):
        raise MalformedRecordError(line_no, "missing required field 'question' for QA task")

    generation = record.get("generation", "")
    if generation is None:
        generation = ""
    if not isinstance(generation, str):
        raise MalformedRecordError(line_no, "'generation' must be a string")

    raw_label = record.get("gold_label")
    gold_label: GoldLabel | None = None
    if raw_label is not None:
        if not isinstance(raw_label, str):
            raise MalformedRecordError(line_no, "'gold_label' must be a string")
        try:
            gold_label = GoldLabel(raw_label.lower())
        except ValueError:
            raise MalformedRecordError(
                line_no, f"unknown gold_label {raw_label!r} (expected hallucinated/faithful)"
            ) from None

    sample_id = record.get("id")
    if sample_id is None:
        sample_id = f"{line_no:06d}"
    elif not isinstance(sample_id, str):
        sample_id = str(sample_id)

    return Sample(
        id=sample_id,
        task=task,
        knowledge=knowledge,
        question=question,
        generation=generation,
        gold_label=gold_label,
    )


def sample_to_record(sample: Sample) -> dict:
    record: dict = {"id": sample.id, "knowledge": sample.knowledge}
    if sample.question is not None:
        record["question"] = sample.question
    record["generation"] = sample.generation
    if sample.gold_label is not None:
        record["gold_label"] = sample.gold_label.value
    return record


def write_dataset(dataset: Dataset, path: str | Path) -> None:
    """Re-emit ``dataset`` in the canonical line-delimited format."""
    with Path(path).open("w", encoding="utf-8") as fh:
        for sample in dataset.samples:
            fh.write(json.dumps(sample_to_record(sample), ensure_ascii=False) + "\n")


# 64-bit linear congruential generator, Knuth's constants. Fixed here so the
# subsample drawn for a given (seed, n, dataset) is identical on every
# platform and Python version.
_LCG_MULT = 6364136223846793005
_LCG_INC = 1442695040888963407
_LCG_MASK = (1 << 64) - 1


def _lcg_shuffle(count: int, seed: int) -> list[int]:
    """Fisher-Yates permutation of range(count) driven by the fixed LCG."""
    state = seed & _LCG_MASK
    order = list(range(count))
    for i in range(count - 1, 0, -1):
        state = (state * _LCG_MULT + _LCG_INC) & _LCG_MASK
        j = state % (i + 1)
        order[i], order[j] = order[j], order[i]
    return order


def subsample(dataset: Dataset, n: int, seed: int) -> Dataset:
    """Draw min(n, len) samples without replacement, then sort by id.

    The draw is a seeded Fisher-Yates shuffle over the dataset order; equal
    inputs always produce the identical subset.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    order = _lcg_shuffle(len(dataset.samples), seed)
    chosen = [dataset.samples[i] for i in order[: min(n, len(dataset.samples))]]
    chosen.sort(key=lambda s: s.id)
    return replace(dataset, samples=tuple(chosen))


def head(dataset: Dataset, n: int) -> Dataset:
    """Prefix truncation to the first min(n, len) samples in file order."""
    if n < 0:
        raise ValueError("n must be >= 0")
    return replace(dataset, samples=dataset.samples[:n])


def gold_map(samples: Iterable[Sample]) -> dict[str, GoldLabel]:
    """Map of sample id to gold label for the samples that carry one."""
    return {s.id: s.gold_label for s in samples if s.gold_label is not None}
