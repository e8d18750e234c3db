"""Command-line orchestration: evaluate, sweep, leaderboard, stats, retrieve.

Runs are configured by CLI flags, optionally seeded from a flat key-value
config file (``key = value`` per line, ``#`` comments); flags override file
values. Artifacts are written atomically (temp file + rename) into the
output directory; with the baseline scorer they are byte-identical across
runs and worker counts. Exit codes: 0 ok, 1 runtime failure, 2 usage or
config error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Sequence

from . import corpus
from .corpus import Dataset, GoldLabel, Task
from .metrics import (
    DEFAULT_SWEEP_GRID,
    CdfCurve,
    LengthStats,
    compute_cdf,
    compute_metrics,
    leaderboard_csv,
    leaderboard_row,
    length_stats,
    sort_leaderboard,
    sweep_threshold,
)
from .score import (
    BaselineScorer,
    ConsistencyJudgment,
    JudgeConfig,
    JudgeOutcome,
    Label,
    RemoteScorer,
    ScorerBackend,
    judge_sample,
)

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_CONFIG = 2


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    dataset: str | None = None
    task: str | None = None
    scorer: str = "baseline"
    endpoint: str | None = None
    batch_size: int = 16
    threshold: float = 0.5
    segmented: bool = False
    non_fabrication: bool = False
    workers: int = 1
    limit: int | None = None
    head: int | None = None
    seed: int = 0
    out: str = "out"
    top_k: int = 3
    k1: float = 1.2
    b: float = 0.75
    window_sentences: int = 3
    segment_threshold: float = 0.5
    halving_factor: float = 0.5
    knowledge_budget: int = 512
    decomposer: str = "rule"
    abbreviations: str | None = None  # "[Mr, Dr, ...]" from the config file

    def validate(self) -> None:
        if self.scorer not in ("baseline", "remote"):
            raise ConfigError(f"unknown scorer {self.scorer!r}")
        if self.scorer == "remote" and not self.endpoint:
            raise ConfigError("--scorer remote requires --endpoint")
        if self.decomposer != "rule":
            raise ConfigError(
                f"decomposer {self.decomposer!r} is not bundled; only 'rule' is built in"
            )
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        for name in ("threshold", "segment_threshold", "halving_factor"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1], got {value}")

    def judge_config(self) -> JudgeConfig:
        return JudgeConfig(
            threshold=self.threshold,
            segmented=self.segmented,
            non_fabrication=self.non_fabrication,
            segment_threshold=self.segment_threshold,
            halving_factor=self.halving_factor,
            top_k=self.top_k,
            k1=self.k1,
            b=self.b,
            window_sentences=self.window_sentences,
            knowledge_budget=self.knowledge_budget,
            abbreviations=_parse_abbreviations(self.abbreviations),
        )


def _parse_abbreviations(raw: str | None) -> tuple[str, ...] | None:
    """'[Mr, Dr, e.g]' or 'Mr, Dr' -> ('Mr', 'Dr', ...); None passes through."""
    if raw is None:
        return None
    inner = raw.strip()
    if inner.startswith("[") and inner.endswith("]"):
        inner = inner[1:-1]
    parts = tuple(p.strip() for p in inner.split(",") if p.strip())
    return parts or None


# Config-file keys -> RunConfig attributes. Dotted names mirror the module
# that owns the setting.
_CONFIG_KEYS = {
    "dataset": "dataset",
    "task": "task",
    "scorer": "scorer",
    "endpoint": "endpoint",
    "batch_size": "batch_size",
    "threshold": "threshold",
    "segmented": "segmented",
    "non_fabrication": "non_fabrication",
    "workers": "workers",
    "limit": "limit",
    "head": "head",
    "seed": "seed",
    "out": "out",
    "segment_threshold": "segment_threshold",
    "halving_factor": "halving_factor",
    "knowledge_budget": "knowledge_budget",
    "decomposer": "decomposer",
    "abbreviations": "abbreviations",
    "retriever.k": "top_k",
    "retriever.k1": "k1",
    "retriever.b": "b",
    "retriever.window_sentences": "window_sentences",
}

_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _coerce(attr: str, raw: str):
    target = _FIELD_TYPES[attr]
    if target in ("bool",):
        lowered = raw.lower()
        if lowered in ("true", "1", "yes", "on"):
            return True
        if lowered in ("false", "0", "no", "off"):
            return False
        raise ConfigError(f"cannot parse boolean {raw!r} for {attr}")
    if target in ("int", "int | None"):
        return int(raw)
    if target == "float":
        return float(raw)
    return raw


def load_config_file(path: str | Path) -> dict:
    """Parse a flat key-value config file into RunConfig attribute overrides."""
    values: dict = {}
    text = Path(path).read_text(encoding="utf-8")
    for line_no, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{line_no}: expected 'key = value'")
        key, _, raw = stripped.partition("=")
        key = key.strip()
        raw = raw.strip()
        if key not in _CONFIG_KEYS:
            raise ConfigError(f"{path}:{line_no}: unknown config key {key!r}")
        attr = _CONFIG_KEYS[key]
        try:
            values[attr] = _coerce(attr, raw)
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"{path}:{line_no}: bad value for {key!r}: {exc}") from exc
    return values


def build_run_config(args: argparse.Namespace) -> RunConfig:
    config = RunConfig()
    if getattr(args, "config", None):
        for attr, value in load_config_file(args.config).items():
            setattr(config, attr, value)
    for attr in _FIELD_TYPES:
        if attr in ("segmented", "non_fabrication"):
            continue  # store-true flags: False means "not given", handled below
        value = getattr(args, attr, None)
        if value is not None:
            setattr(config, attr, value)
    if getattr(args, "segmented", False):
        config.segmented = True
    if getattr(args, "non_fabrication", False):
        config.non_fabrication = True
    config.validate()
    return config


def _atomic_write(path: Path, content: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + f".tmp{os.getpid()}")
    tmp.write_text(content, encoding="utf-8")
    os.replace(tmp, path)


def _load_dataset(config: RunConfig) -> Dataset:
    if not config.dataset:
        raise ConfigError("a dataset path is required (--dataset or config file)")
    if not config.task:
        raise ConfigError("a task is required (--task qa|summarization)")
    try:
        task = Task(config.task.lower())
    except ValueError:
        raise ConfigError(f"unknown task {config.task!r}") from None
    if not Path(config.dataset).is_file():
        raise ConfigError(f"dataset file not found: {config.dataset}")
    dataset = corpus.ingest_dataset(config.dataset, task)
    if config.head is not None:
        dataset = corpus.head(dataset, config.head)
    elif config.limit is not None:
        dataset = corpus.subsample(dataset, config.limit, config.seed)
    return dataset


def _make_backend(config: RunConfig) -> ScorerBackend:
    if config.scorer == "remote":
        scorer = RemoteScorer(config.endpoint or "", batch_size=config.batch_size)
        if not scorer.healthcheck():
            raise RuntimeError(f"scorer endpoint {config.endpoint} failed health check")
        return scorer
    return BaselineScorer()


def _judge_all(
    dataset: Dataset, backend: ScorerBackend, config: RunConfig
) -> tuple[list[tuple[ConsistencyJudgment, str]], float, float]:
    """Judge every sample, fanning out to a bounded worker pool.

    Results are re-sorted by sample id so the output is independent of the
    worker schedule. Returns (judgment, generation) pairs plus accumulated
    retrieval and scoring seconds.
    """
    judge_config = config.judge_config()

    def work(sample: corpus.Sample) -> JudgeOutcome:
        return judge_sample(sample, backend, judge_config)

    outcomes: list[tuple[str, JudgeOutcome]] = []
    if config.workers == 1:
        for sample in dataset.samples:
            outcomes.append((sample.id, _wrap_judge(work, sample)))
    else:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            futures = [(sample.id, pool.submit(_wrap_judge, work, sample)) for sample in dataset.samples]
            outcomes = [(sample_id, future.result()) for sample_id, future in futures]
    outcomes.sort(key=lambda pair: pair[0])
    generations = {sample.id: sample.generation for sample in dataset.samples}
    results = [(outcome.judgment, generations[sample_id]) for sample_id, outcome in outcomes]
    retrieval_s = sum(outcome.timing.retrieval for _, outcome in outcomes)
    scoring_s = sum(outcome.timing.scoring for _, outcome in outcomes)
    return results, retrieval_s, scoring_s


def _wrap_judge(work, sample: corpus.Sample) -> JudgeOutcome:
    try:
        return work(sample)
    except Exception as exc:
        raise RuntimeError(f"sample {sample.id!r}: {exc}") from exc


def judgment_record(judgment: ConsistencyJudgment, generation: str) -> dict:
    return {
        "sample_id": judgment.sample_id,
        "raw_score": judgment.raw_score,
        "segment_scores": [[i, s] for i, s in judgment.segment_scores],
        "adjusted_score": judgment.adjusted_score,
        "fabricated": judgment.fabricated,
        "label": judgment.label.value,
        "threshold": judgment.threshold,
        "generation": generation,
    }


def _judgments_jsonl(results: Sequence[tuple[ConsistencyJudgment, str]]) -> str:
    lines = [
        json.dumps(judgment_record(judgment, generation), ensure_ascii=False)
        for judgment, generation in results
    ]
    return "\n".join(lines) + ("\n" if lines else "")


def read_judgments(path: str | Path) -> list[tuple[ConsistencyJudgment, str]]:
    """Parse a judgments.jsonl file back into judgment/generation pairs."""
    results: list[tuple[ConsistencyJudgment, str]] = []
    with Path(path).open(encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            record = json.loads(line)
            judgment = ConsistencyJudgment(
                sample_id=record["sample_id"],
                raw_score=record["raw_score"],
                segment_scores=tuple((int(i), float(s)) for i, s in record["segment_scores"]),
                adjusted_score=record["adjusted_score"],
                fabricated=record["fabricated"],
                label=Label(record["label"]),
                threshold=record["threshold"],
            )
            results.append((judgment, record.get("generation", "")))
    return results


def _metrics_payload(
    results: Sequence[tuple[ConsistencyJudgment, str]],
    gold: dict[str, GoldLabel],
    threshold: float,
) -> dict:
    judgments = [j for j, _ in results]
    labeled = bool(gold)
    payload: dict = {
        "labeled": labeled,
        "threshold": threshold,
        "n_samples": len(judgments),
        "n_nonanswer": sum(1 for j in judgments if j.label is Label.NONANSWER),
    }
    if labeled:
        report = compute_metrics(judgments, gold)
        payload.update(
            {
                "tp": report.tp,
                "fp": report.fp,
                "tn": report.tn,
                "fn": report.fn,
                "tpr": report.tpr,
                "tnr": report.tnr,
                "accuracy": report.accuracy,
                "f1": report.f1,
                "tpr_vacuous": report.tpr_vacuous,
                "tnr_vacuous": report.tnr_vacuous,
            }
        )
    return payload


def cmd_evaluate(config: RunConfig) -> int:
    total_start = time.perf_counter()
    out_dir = Path(config.out)

    t0 = time.perf_counter()
    dataset = _load_dataset(config)
    ingest_s = time.perf_counter() - t0
    print(f"[ingest] {len(dataset)} samples from {dataset.origin}", file=sys.stderr)

    backend = _make_backend(config)
    results, retrieval_s, scoring_s = _judge_all(dataset, backend, config)
    print(f"[judge] {len(results)} judgments ({config.workers} workers)", file=sys.stderr)

    t0 = time.perf_counter()
    gold = corpus.gold_map(dataset.samples)
    payload = _metrics_payload(results, gold, config.threshold)
    metrics_s = time.perf_counter() - t0

    _atomic_write(out_dir / "judgments.jsonl", _judgments_jsonl(results))
    _atomic_write(out_dir / "metrics.json", json.dumps(payload, indent=2) + "\n")
    timing = {
        "ingest_s": round(ingest_s, 6),
        "retrieval_s": round(retrieval_s, 6),
        "scoring_s": round(scoring_s, 6),
        "metrics_s": round(metrics_s, 6),
        "total_s": round(time.perf_counter() - total_start, 6),
    }
    _atomic_write(out_dir / "timing.json", json.dumps(timing, indent=2) + "\n")
    print(f"[done] artifacts in {out_dir}", file=sys.stderr)
    return EXIT_OK


def _parse_grid(spec: str | None) -> Sequence[float]:
    if spec is None:
        return DEFAULT_SWEEP_GRID
    if ":" in spec:
        try:
            start, stop, step = (float(p) for p in spec.split(":"))
        except ValueError:
            raise ConfigError(f"bad grid {spec!r}; expected start:stop:step") from None
        if step <= 0 or stop < start:
            raise ConfigError(f"bad grid {spec!r}")
        grid = []
        i = 0
        while True:
            value = round(start + i * step, 10)
            if value > stop + 1e-12:
                break
            grid.append(value)
            i += 1
        return grid
    try:
        return [float(p) for p in spec.split(",")]
    except ValueError:
        raise ConfigError(f"bad grid {spec!r}") from None


def cmd_sweep(config: RunConfig, grid: Sequence[float]) -> int:
    out_dir = Path(config.out)
    dataset = _load_dataset(config)
    gold = corpus.gold_map(dataset.samples)
    if not gold:
        raise ConfigError("sweep requires gold labels")
    backend = _make_backend(config)
    results, _, _ = _judge_all(dataset, backend, config)
    scored = [
        (judgment.adjusted_score, gold[judgment.sample_id])
        for judgment, _ in results
        if judgment.label is not Label.NONANSWER
    ]
    best_tau, best_f1, curve = sweep_threshold(scored, grid)
    lines = ["tau,tpr,tnr,f1"]
    lines.extend(f"{tau:.6f},{tpr:.6f},{tnr:.6f},{f1:.6f}" for tau, tpr, tnr, f1 in curve)
    _atomic_write(out_dir / "sweep.csv", "\n".join(lines) + "\n")
    _atomic_write(
        out_dir / "sweep.json",
        json.dumps({"best_tau": best_tau, "best_f1": best_f1, "n_scored": len(scored)}, indent=2)
        + "\n",
    )
    _atomic_write(out_dir / "judgments.jsonl", _judgments_jsonl(results))
    print(f"[sweep] best_tau={best_tau} best_f1={best_f1}", file=sys.stderr)
    return EXIT_OK


def _cdf_csv(curve: CdfCurve) -> str:
    lines = ["score,cumulative_fraction"]
    lines.extend(f"{score!r},{fraction!r}" for score, fraction in curve.points)
    return "\n".join(lines) + "\n"


def _lengths_payload(stats: LengthStats) -> dict:
    return {
        "min": stats.min,
        "q1": stats.q1,
        "median": stats.median,
        "q3": stats.q3,
        "max": stats.max,
        "outliers": [[sid, length] for sid, length in stats.outliers],
    }


def _model_stats_files(
    out_dir: Path, model: str, results: Sequence[tuple[ConsistencyJudgment, str]]
) -> None:
    scores = [j.adjusted_score for j, _ in results if j.label is not Label.NONANSWER]
    if scores:
        _atomic_write(out_dir / f"cdf_{model}.csv", _cdf_csv(compute_cdf(scores)))
    answered = [(j.sample_id, gen) for j, gen in results if gen.strip()]
    if answered:
        stats = length_stats(answered)
        _atomic_write(
            out_dir / f"lengths_{model}.json", json.dumps(_lengths_payload(stats), indent=2) + "\n"
        )


def cmd_leaderboard(score_dirs: Sequence[str], out: str) -> int:
    out_dir = Path(out)
    unreadable: list[str] = []
    rows = []
    for directory in score_dirs:
        judgments_path = Path(directory) / "judgments.jsonl"
        model = Path(directory).name
        try:
            results = read_judgments(judgments_path)
        except (OSError, json.JSONDecodeError, KeyError, ValueError) as exc:
            unreadable.append(f"{directory}: {exc}")
            continue
        generations = [(j.sample_id, gen) for j, gen in results]
        rows.append(leaderboard_row(model, [j for j, _ in results], generations))
        _model_stats_files(out_dir, model, results)
    if unreadable:
        for message in unreadable:
            print(f"error: {message}", file=sys.stderr)
        return EXIT_RUNTIME
    _atomic_write(out_dir / "leaderboard.csv", leaderboard_csv(sort_leaderboard(rows)))
    print(f"[leaderboard] {len(rows)} models -> {out_dir / 'leaderboard.csv'}", file=sys.stderr)
    return EXIT_OK


def cmd_stats(judgments_path: str, out: str) -> int:
    out_dir = Path(out)
    results = read_judgments(judgments_path)
    scores = [j.adjusted_score for j, _ in results if j.label is not Label.NONANSWER]
    if not scores:
        print(f"error: no scored judgments in {judgments_path}", file=sys.stderr)
        return EXIT_RUNTIME
    _atomic_write(out_dir / "cdf.csv", _cdf_csv(compute_cdf(scores)))
    answered = [(j.sample_id, gen) for j, gen in results if gen.strip()]
    if answered:
        _atomic_write(
            out_dir / "lengths.json",
            json.dumps(_lengths_payload(length_stats(answered)), indent=2) + "\n",
        )
    return EXIT_OK


def cmd_retrieve(config: RunConfig, query: str, k: int) -> int:
    dataset = _load_dataset(config)
    from .retrieve import build_index, retrieve

    index = build_index([(sample.id, sample.knowledge) for sample in dataset.samples])
    for item in retrieve(index, query, k, k1=config.k1, b=config.b):
        snippet = " ".join(item.snippet.split())
        print(f"{item.doc_id}\t{item.score:.6f}\t{snippet}")
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key-value config file")
    common.add_argument("--out", help="output directory (default: out)")
    common.add_argument("--seed", type=int, help="sampling seed (default: 0)")

    run_flags = argparse.ArgumentParser(add_help=False)
    run_flags.add_argument("--dataset", help="line-delimited dataset file")
    run_flags.add_argument("--task", choices=["qa", "summarization"])
    run_flags.add_argument("--scorer", choices=["baseline", "remote"])
    run_flags.add_argument("--endpoint", help="remote scorer base URL")
    run_flags.add_argument("--batch-size", type=int, dest="batch_size")
    run_flags.add_argument("--threshold", type=float)
    run_flags.add_argument("--segmented", action="store_true", default=False)
    run_flags.add_argument("--non-fabrication", action="store_true", default=False, dest="non_fabrication")
    run_flags.add_argument("--workers", type=int)
    run_flags.add_argument("--limit", type=int, help="seeded subsample size")
    run_flags.add_argument("--head", type=int, help="prefix truncation size")
    run_flags.add_argument("--k", type=int, dest="top_k", help="retrieval depth per query")
    run_flags.add_argument("--k1", type=float)
    run_flags.add_argument("--b", type=float)
    run_flags.add_argument("--window-sentences", type=int, dest="window_sentences")
    run_flags.add_argument("--segment-threshold", type=float, dest="segment_threshold")
    run_flags.add_argument("--halving-factor", type=float, dest="halving_factor")
    run_flags.add_argument("--knowledge-budget", type=int, dest="knowledge_budget")

    parser = argparse.ArgumentParser(
        prog="halcheck",
        description="Hallucination detection and evaluation over local datasets",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("evaluate", parents=[common, run_flags], help="run the full pipeline")
    sweep = sub.add_parser("sweep", parents=[common, run_flags], help="threshold sweep")
    sweep.add_argument("--grid", help="start:stop:step or comma list (default 0.05:0.95:0.05)")
    leaderboard = sub.add_parser("leaderboard", parents=[common], help="aggregate model runs")
    leaderboard.add_argument("score_dirs", nargs="+", help="one directory per model")
    stats = sub.add_parser("stats", parents=[common], help="CDF and length stats for one run")
    stats.add_argument("judgments", help="judgments.jsonl file")
    retrieve_p = sub.add_parser("retrieve", parents=[common, run_flags], help="debug retrieval")
    retrieve_p.add_argument("--query", required=True)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "leaderboard":
            return cmd_leaderboard(args.score_dirs, args.out or "out")
        if args.command == "stats":
            if not Path(args.judgments).is_file():
                print(f"error: judgments file not found: {args.judgments}", file=sys.stderr)
                return EXIT_RUNTIME
            return cmd_stats(args.judgments, args.out or "out")
        config = build_run_config(args)
        if args.command == "evaluate":
            return cmd_evaluate(config)
        if args.command == "sweep":
            return cmd_sweep(config, _parse_grid(args.grid))
        if args.command == "retrieve":
            return cmd_retrieve(config, args.query, config.top_k)
        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # module errors carry the failing sample id
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
