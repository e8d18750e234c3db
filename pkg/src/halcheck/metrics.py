"""Confusion-matrix metrics, threshold sweeps, score CDFs, length statistics
and leaderboard aggregation.

The positive class is "hallucinated" throughout. The reported f1 is the
arithmetic mean of TPR and TNR (balanced accuracy), which coincides with
accuracy on class-balanced sets. A rate with an empty denominator is
reported as 1.0 and flagged as vacuous so degenerate fixtures stay usable
without hiding the degeneracy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .corpus import GoldLabel
from .score import ConsistencyJudgment, Label

# Leaderboard convention: a generation counts as accurate when its score is
# strictly above the cutoff, and as hallucinated when strictly below; a
# score exactly at the cutoff contributes to neither rate.
LEADERBOARD_CUTOFF = 0.5

DEFAULT_SWEEP_GRID = tuple(round(0.05 * i, 2) for i in range(1, 20))


class MissingGoldLabelError(KeyError):
    def __init__(self, sample_id: str):
        super().__init__(f"no gold label for sample {sample_id!r}")
        self.sample_id = sample_id


class EmptyInputError(ValueError):
    pass


@dataclass(frozen=True)
class MetricsReport:
    tp: int
    fp: int
    tn: int
    fn: int
    tpr: float
    tnr: float
    accuracy: float
    f1: float
    n_samples: int
    n_nonanswer: int
    tpr_vacuous: bool = False
    tnr_vacuous: bool = False
    wall_time: float = 0.0


@dataclass(frozen=True)
class LeaderboardRow:
    model_name: str
    accuracy_above: float
    hallucination_score: float
    hallucination_rate: float
    factual_consistency_rate: float
    answer_rate: float
    avg_summary_length: float


@dataclass(frozen=True)
class CdfCurve:
    points: tuple[tuple[float, float], ...]


@dataclass(frozen=True)
class LengthStats:
    min: float
    q1: float
    median: float
    q3: float
    max: float
    outliers: tuple[tuple[str, int], ...]


def _rate(numerator: int, denominator: int) -> tuple[float, bool]:
    if denominator == 0:
        return 1.0, True
    return numerator / denominator, False


def _confusion_rates(tp: int, fp: int, tn: int, fn: int) -> tuple[float, float, float, float, bool, bool]:
    tpr, tpr_vacuous = _rate(tp, tp + fn)
    tnr, tnr_vacuous = _rate(tn, tn + fp)
    accuracy, _ = _rate(tp + tn, tp + tn + fp + fn)
    f1 = (tpr + tnr) / 2.0
    return tpr, tnr, accuracy, f1, tpr_vacuous, tnr_vacuous


def compute_metrics(
    judgments: Sequence[ConsistencyJudgment],
    gold: Mapping[str, GoldLabel],
    wall_time: float = 0.0,
) -> MetricsReport:
    """Confusion counts and rates of ``judgments`` against ``gold`` labels.

    NonAnswer judgments are excluded from the confusion matrix and tallied
    separately; every other judgment must have a gold label.
    """
    tp = fp = tn = fn = 0
    n_nonanswer = 0
    for judgment in judgments:
        if judgment.label is Label.NONANSWER:
            n_nonanswer += 1
            continue
        if judgment.sample_id not in gold:
            raise MissingGoldLabelError(judgment.sample_id)
        actual_positive = gold[judgment.sample_id] is GoldLabel.HALLUCINATED
        predicted_positive = judgment.label is Label.HALLUCINATED
        if predicted_positive and actual_positive:
            tp += 1
        elif predicted_positive:
            fp += 1
        elif actual_positive:
            fn += 1
        else:
            tn += 1
    tpr, tnr, accuracy, f1, tpr_vac, tnr_vac = _confusion_rates(tp, fp, tn, fn)
    return MetricsReport(
        tp=tp,
        fp=fp,
        tn=tn,
        fn=fn,
        tpr=tpr,
        tnr=tnr,
        accuracy=accuracy,
        f1=f1,
        n_samples=len(judgments),
        n_nonanswer=n_nonanswer,
        tpr_vacuous=tpr_vac,
        tnr_vacuous=tnr_vac,
        wall_time=wall_time,
    )


def metrics_from_counts(tp: int, fp: int, tn: int, fn: int) -> MetricsReport:
    """Report built directly from confusion counts (fixture arithmetic)."""
    tpr, tnr, accuracy, f1, tpr_vac, tnr_vac = _confusion_rates(tp, fp, tn, fn)
    return MetricsReport(
        tp=tp,
        fp=fp,
        tn=tn,
        fn=fn,
        tpr=tpr,
        tnr=tnr,
        accuracy=accuracy,
        f1=f1,
        n_samples=tp + fp + tn + fn,
        n_nonanswer=0,
        tpr_vacuous=tpr_vac,
        tnr_vacuous=tnr_vac,
    )


def sweep_threshold(
    scored: Sequence[tuple[float, GoldLabel]],
    grid: Sequence[float] = DEFAULT_SWEEP_GRID,
) -> tuple[float, float, list[tuple[float, float, float, float]]]:
    """Evaluate the strict classification rule at every grid threshold.

    Returns (best_tau, best_f1, curve) where the curve rows are
    (tau, tpr, tnr, f1) and ties on f1 resolve to the smallest tau.
    """
    if not grid:
        raise ValueError("grid must be non-empty")
    if list(grid) != sorted(grid):
        raise ValueError("grid must be sorted ascending")
    curve: list[tuple[float, float, float, float]] = []
    best_tau = grid[0]
    best_f1 = -1.0
    for tau in grid:
        tp = fp = tn = fn = 0
        for score, label in scored:
            predicted_positive = score < tau
            actual_positive = label is GoldLabel.HALLUCINATED
            if predicted_positive and actual_positive:
                tp += 1
            elif predicted_positive:
                fp += 1
            elif actual_positive:
                fn += 1
            else:
                tn += 1
        tpr, tnr, _, f1, _, _ = _confusion_rates(tp, fp, tn, fn)
        curve.append((tau, tpr, tnr, f1))
        if f1 > best_f1:
            best_f1 = f1
            best_tau = tau
    return best_tau, best_f1, curve


def compute_cdf(scores: Sequence[float]) -> CdfCurve:
    """Empirical CDF of ``scores``: one point per distinct value."""
    if not scores:
        raise EmptyInputError("scores must be non-empty")
    for s in scores:
        if not 0.0 <= s <= 1.0:
            raise ValueError(f"score {s!r} outside [0, 1]")
    ordered = sorted(scores)
    n = len(ordered)
    points: list[tuple[float, float]] = []
    for i, value in enumerate(ordered):
        if i + 1 < n and ordered[i + 1] == value:
            continue
        points.append((value, (i + 1) / n))
    return CdfCurve(points=tuple(points))


def _quantile(ordered: Sequence[float], p: float) -> float:
    """Linear interpolation between the closest order statistics."""
    pos = (len(ordered) - 1) * p
    lo = math.floor(pos)
    hi = math.ceil(pos)
    if lo == hi:
        return float(ordered[lo])
    return ordered[lo] + (ordered[hi] - ordered[lo]) * (pos - lo)


def length_stats(generations: Sequence[tuple[str, str]]) -> LengthStats:
    """Word-count five-number summary with 1.5*IQR outliers.

    Word count is the whitespace-separated token count; quartiles use linear
    interpolation between closest ranks (the q-th quantile sits at fractional
    rank (n-1)*q of the sorted counts).
    """
    if not generations:
        raise EmptyInputError("generations must be non-empty")
    counts = [(sample_id, len(text.split())) for sample_id, text in generations]
    ordered = sorted(float(c) for _, c in counts)
    q1 = _quantile(ordered, 0.25)
    q3 = _quantile(ordered, 0.75)
    iqr = q3 - q1
    lo_fence = q1 - 1.5 * iqr
    hi_fence = q3 + 1.5 * iqr
    outliers = tuple((sid, c) for sid, c in counts if c < lo_fence or c > hi_fence)
    return LengthStats(
        min=ordered[0],
        q1=q1,
        median=_quantile(ordered, 0.5),
        q3=q3,
        max=ordered[-1],
        outliers=outliers,
    )


def leaderboard_row(
    model_name: str,
    judgments: Sequence[ConsistencyJudgment],
    generations: Sequence[tuple[str, str]],
) -> LeaderboardRow:
    """Aggregate one model's judgments into a leaderboard row.

    Score statistics cover the non-NonAnswer judgments' adjusted scores; the
    average length covers the non-empty generations. A model that produced
    only NonAnswers reports NaN score fields with answer_rate 0.
    """
    scores = [j.adjusted_score for j in judgments if j.label is not Label.NONANSWER]
    n = len(judgments)
    n_nonanswer = sum(1 for j in judgments if j.label is Label.NONANSWER)
    if scores:
        accuracy_above = sum(1 for s in scores if s > LEADERBOARD_CUTOFF) / len(scores)
        hallucination_rate = sum(1 for s in scores if s < LEADERBOARD_CUTOFF) / len(scores)
        hallucination_score = 1.0 - sum(scores) / len(scores)
    else:
        accuracy_above = hallucination_rate = hallucination_score = float("nan")
    answered_lengths = [len(text.split()) for _, text in generations if text.strip()]
    avg_length = sum(answered_lengths) / len(answered_lengths) if answered_lengths else float("nan")
    return LeaderboardRow(
        model_name=model_name,
        accuracy_above=accuracy_above,
        hallucination_score=hallucination_score,
        hallucination_rate=hallucination_rate,
        factual_consistency_rate=1.0 - hallucination_rate,
        answer_rate=1.0 - n_nonanswer / n if n else 0.0,
        avg_summary_length=avg_length,
    )


def sort_leaderboard(rows: Iterable[LeaderboardRow]) -> list[LeaderboardRow]:
    """Descending accuracy, ties by ascending hallucination score; NaN last."""

    def key(row: LeaderboardRow):
        acc = row.accuracy_above
        hal = row.hallucination_score
        return (
            -(acc if not math.isnan(acc) else float("-inf")),
            hal if not math.isnan(hal) else float("inf"),
            row.model_name,
        )

    return sorted(rows, key=key)


def leaderboard_csv(rows: Sequence[LeaderboardRow]) -> str:
    """Flat comma-separated leaderboard table; NaN fields are left empty."""

    def fmt(value: float) -> str:
        return "" if math.isnan(value) else f"{value:.4f}"

    lines = ["model,accuracy,hallucination_score,answer_rate,avg_length"]
    for row in rows:
        lines.append(
            ",".join(
                [
                    row.model_name,
                    fmt(row.accuracy_above),
                    fmt(row.hallucination_score),
                    fmt(row.answer_rate),
                    fmt(row.avg_summary_length),
                ]
            )
        )
    return "\n".join(lines) + "\n"
