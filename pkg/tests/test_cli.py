import json
from pathlib import Path

import pytest

from echo_server import EchoServer
from halcheck.cli import main, read_judgments

FIXTURES = Path(__file__).parent / "fixtures"
QA_FIXTURE = str(FIXTURES / "qa_synthetic_50.jsonl")


def _evaluate(tmp_path, name, *extra):
    out = tmp_path / name
    code = main(
        ["evaluate", "--dataset", QA_FIXTURE, "--task", "qa", "--out", str(out), *extra]
    )
    assert code == 0
    return out


def test_evaluate_writes_expected_artifacts(tmp_path):
    out = _evaluate(tmp_path, "run")
    lines = (out / "judgments.jsonl").read_text().splitlines()
    assert len(lines) == 50
    metrics = json.loads((out / "metrics.json").read_text())
    assert metrics["labeled"] is True
    assert (metrics["tp"], metrics["fp"], metrics["tn"], metrics["fn"]) == (22, 1, 23, 2)
    assert metrics["n_nonanswer"] == 2
    assert metrics["tpr"] == 22 / 24
    assert metrics["tnr"] == 23 / 24
    assert metrics["accuracy"] == 0.9375
    assert metrics["f1"] == 0.9375
    timing = json.loads((out / "timing.json").read_text())
    assert set(timing) == {"ingest_s", "retrieval_s", "scoring_s", "metrics_s", "total_s"}


def test_every_sample_appears_exactly_once(tmp_path):
    out = _evaluate(tmp_path, "run")
    ids = [json.loads(line)["sample_id"] for line in (out / "judgments.jsonl").read_text().splitlines()]
    assert len(ids) == len(set(ids)) == 50
    assert ids == sorted(ids)


def test_worker_count_does_not_change_output_bytes(tmp_path):
    one = _evaluate(tmp_path, "w1", "--workers", "1")
    eight = _evaluate(tmp_path, "w8", "--workers", "8")
    for name in ("judgments.jsonl", "metrics.json"):
        assert (one / name).read_bytes() == (eight / name).read_bytes()


def test_missing_dataset_is_config_error(tmp_path):
    out = tmp_path / "nope"
    code = main(["evaluate", "--dataset", "/absent.jsonl", "--task", "qa", "--out", str(out)])
    assert code == 2
    assert not (out / "judgments.jsonl").exists()


def test_malformed_dataset_is_runtime_error(tmp_path):
    bad = tmp_path / "bad.jsonl"
    bad.write_text('{"id": "x", "knowledge": "k"}\n')  # QA record without question
    code = main(["evaluate", "--dataset", str(bad), "--task", "qa", "--out", str(tmp_path / "o")])
    assert code == 1


def test_limit_subsamples_dataset(tmp_path):
    out = tmp_path / "o"
    code = main(
        ["evaluate", "--dataset", QA_FIXTURE, "--task", "qa", "--out", str(out), "--limit", "5", "--seed", "3"]
    )
    assert code == 0
    assert len((out / "judgments.jsonl").read_text().splitlines()) == 5


def test_config_file_with_cli_override(tmp_path):
    config = tmp_path / "run.conf"
    config.write_text(
        "\n".join(
            [
                "# fixture run",
                f"dataset = {QA_FIXTURE}",
                "task = qa",
                "threshold = 0.9",
                "retriever.k = 2",
            ]
        )
    )
    out = tmp_path / "o"
    code = main(["evaluate", "--config", str(config), "--out", str(out), "--threshold", "0.5"])
    assert code == 0
    record = json.loads((out / "judgments.jsonl").read_text().splitlines()[0])
    assert record["threshold"] == 0.5  # CLI wins over the file


def test_abbreviations_config_key_changes_segmentation(tmp_path):
    dataset = tmp_path / "summ.jsonl"
    text = "Sgt. Miller spoke clearly. The crowd listened."
    dataset.write_text(json.dumps({"id": "a", "knowledge": text, "generation": text}) + "\n")

    def run(conf_lines, name):
        conf = tmp_path / f"{name}.conf"
        conf.write_text("\n".join(conf_lines) + "\n")
        out = tmp_path / name
        code = main(
            [
                "evaluate", "--config", str(conf), "--dataset", str(dataset),
                "--task", "summarization", "--segmented", "--out", str(out),
            ]
        )
        assert code == 0
        return json.loads((out / "judgments.jsonl").read_text())

    default = run([], "default")
    custom = run(["abbreviations = [Sgt, Cpl]"], "custom")
    # "Sgt." splits under the default list but not when declared an abbreviation
    assert len(default["segment_scores"]) == 3
    assert len(custom["segment_scores"]) == 2


def test_unknown_config_key_is_config_error(tmp_path):
    config = tmp_path / "run.conf"
    config.write_text("no_such_key = 1\n")
    assert main(["evaluate", "--config", str(config), "--out", str(tmp_path / "o")]) == 2


def test_remote_scorer_end_to_end(tmp_path):
    dataset = tmp_path / "tiny.jsonl"
    rows = [
        {"id": "a", "knowledge": "The cat sat.", "question": "What sat?", "generation": "x" * 30},
        {"id": "b", "knowledge": "The cat sat.", "question": "What sat?", "generation": "y" * 80},
        {"id": "c", "knowledge": "The cat sat.", "question": "What sat?", "generation": ""},
    ]
    dataset.write_text("\n".join(json.dumps(r) for r in rows) + "\n")
    out = tmp_path / "o"
    with EchoServer() as server:
        code = main(
            [
                "evaluate",
                "--dataset", str(dataset),
                "--task", "qa",
                "--scorer", "remote",
                "--endpoint", server.endpoint,
                "--batch-size", "4",
                "--out", str(out),
            ]
        )
    assert code == 0
    by_id = {j.sample_id: j for j, _ in read_judgments(out / "judgments.jsonl")}
    assert by_id["a"].raw_score == 0.30
    assert by_id["b"].raw_score == 0.80
    assert by_id["c"].label.value == "nonanswer"


def test_remote_scorer_unreachable_endpoint_fails(tmp_path):
    code = main(
        [
            "evaluate",
            "--dataset", QA_FIXTURE,
            "--task", "qa",
            "--scorer", "remote",
            "--endpoint", "http://127.0.0.1:9",
            "--out", str(tmp_path / "o"),
        ]
    )
    assert code == 1


def test_sweep_emits_curve_and_best(tmp_path):
    out = tmp_path / "o"
    code = main(["sweep", "--dataset", QA_FIXTURE, "--task", "qa", "--out", str(out)])
    assert code == 0
    summary = json.loads((out / "sweep.json").read_text())
    curve_lines = (out / "sweep.csv").read_text().splitlines()
    assert curve_lines[0] == "tau,tpr,tnr,f1"
    assert len(curve_lines) == 1 + 19  # default grid 0.05..0.95
    assert 0.0 < summary["best_tau"] < 1.0


def test_sweep_single_point_grid(tmp_path):
    out = tmp_path / "o"
    code = main(
        ["sweep", "--dataset", QA_FIXTURE, "--task", "qa", "--out", str(out), "--grid", "0.5"]
    )
    assert code == 0
    assert len((out / "sweep.csv").read_text().splitlines()) == 2


def test_sweep_requires_gold_labels(tmp_path):
    unlabeled = tmp_path / "unlabeled.jsonl"
    unlabeled.write_text(
        json.dumps({"id": "a", "knowledge": "k words", "question": "Q?", "generation": "g"}) + "\n"
    )
    code = main(["sweep", "--dataset", str(unlabeled), "--task", "qa", "--out", str(tmp_path / "o")])
    assert code == 2


def _fake_model_dir(tmp_path, name, scores):
    model_dir = tmp_path / name
    model_dir.mkdir()
    records = [
        {
            "sample_id": f"{name}{i:02d}",
            "raw_score": s,
            "segment_scores": [],
            "adjusted_score": s,
            "fabricated": False,
            "label": "faithful" if s >= 0.5 else "hallucinated",
            "threshold": 0.5,
            "generation": "some generated words here",
        }
        for i, s in enumerate(scores)
    ]
    (model_dir / "judgments.jsonl").write_text("\n".join(json.dumps(r) for r in records) + "\n")
    return model_dir


def test_leaderboard_sorted_by_accuracy(tmp_path):
    weak = _fake_model_dir(tmp_path, "weak", [0.2, 0.4, 0.9])
    strong = _fake_model_dir(tmp_path, "strong", [0.8, 0.9, 0.7])
    out = tmp_path / "o"
    code = main(["leaderboard", str(weak), str(strong), "--out", str(out)])
    assert code == 0
    lines = (out / "leaderboard.csv").read_text().splitlines()
    assert lines[0] == "model,accuracy,hallucination_score,answer_rate,avg_length"
    assert [line.split(",")[0] for line in lines[1:]] == ["strong", "weak"]
    assert (out / "cdf_strong.csv").exists()
    assert (out / "lengths_weak.json").exists()


def test_leaderboard_single_model(tmp_path):
    only = _fake_model_dir(tmp_path, "only", [0.6])
    out = tmp_path / "o"
    assert main(["leaderboard", str(only), "--out", str(out)]) == 0
    assert len((out / "leaderboard.csv").read_text().splitlines()) == 2


def test_leaderboard_unreadable_directory(tmp_path):
    ok = _fake_model_dir(tmp_path, "ok", [0.6])
    assert main(["leaderboard", str(ok), str(tmp_path / "missing"), "--out", str(tmp_path / "o")]) == 1


def test_leaderboard_requires_directories():
    with pytest.raises(SystemExit) as excinfo:
        main(["leaderboard"])
    assert excinfo.value.code == 2


def test_stats_from_judgments(tmp_path):
    run = _evaluate(tmp_path, "run")
    out = tmp_path / "stats"
    assert main(["stats", str(run / "judgments.jsonl"), "--out", str(out)]) == 0
    cdf_lines = (out / "cdf.csv").read_text().splitlines()
    assert cdf_lines[0] == "score,cumulative_fraction"
    assert float(cdf_lines[-1].split(",")[1]) == 1.0
    lengths = json.loads((out / "lengths.json").read_text())
    assert lengths["min"] <= lengths["median"] <= lengths["max"]


def test_stats_empty_file_fails(tmp_path):
    empty = tmp_path / "judgments.jsonl"
    empty.write_text("")
    assert main(["stats", str(empty), "--out", str(tmp_path / "o")]) == 1


def test_retrieve_debug_command(tmp_path, capsys):
    code = main(
        ["retrieve", "--dataset", QA_FIXTURE, "--task", "qa", "--query", "Solar Dawn directed", "--k", "2"]
    )
    assert code == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert 1 <= len(lines) <= 2
    assert lines[0].split("\t")[0] == "qa000"  # the Solar Dawn sample ranks first
