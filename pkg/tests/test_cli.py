"""End-to-end command tests driven through main(argv)."""

import csv
import json
import subprocess
import sys

import pytest

from puzzle_forge import GameId, GenerationExhausted, instance_from_json
from puzzle_forge.agents import oracle_transcript
from puzzle_forge.cli import EXIT_BUDGET, EXIT_GENERATION, main
from puzzle_forge.games import generate_instance


def read_jsonl(path):
    return [json.loads(line) for line in path.read_text().splitlines() if line]


def test_gen_writes_dataset_and_sidecar(tmp_path):
    out = tmp_path / "data.jsonl"
    rc = main(
        ["gen", "--game", "nonogram", "--level", "1", "--count", "8",
         "--seed", "42", "--out", str(out)]
    )
    assert rc == 0
    lines = out.read_text().splitlines()
    assert len(lines) == 8
    seeds = set()
    for line in lines:
        instance = instance_from_json(line)
        assert instance.game is GameId.NONOGRAM
        assert instance.level == 1
        seeds.add(instance.seed)
    assert len(seeds) == 8
    index = json.loads((tmp_path / "data.jsonl.index.json").read_text())
    assert index == {"game": "nonogram", "seed": 42, "count": 8, "levels": {"1": 8}}


def test_gen_zero_count(tmp_path):
    out = tmp_path / "empty.jsonl"
    rc = main(
        ["gen", "--game", "sudoku", "--level", "1", "--count", "0",
         "--seed", "0", "--out", str(out)]
    )
    assert rc == 0
    assert out.read_text() == ""


def test_gen_repeat_is_byte_identical(tmp_path):
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    argv = ["gen", "--game", "zebra", "--level", "2", "--count", "5", "--seed", "9"]
    assert main(argv + ["--out", str(a)]) == 0
    assert main(argv + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_gen_failure_exit_code(tmp_path, monkeypatch, capsys):
    def boom(game, level, seed):
        raise GenerationExhausted(game="sudoku", seed=seed, detail="forced")

    monkeypatch.setattr("puzzle_forge.cli.games.generate_instance", boom)
    out = tmp_path / "never.jsonl"
    rc = main(
        ["gen", "--game", "sudoku", "--level", "1", "--count", "3",
         "--seed", "0", "--out", str(out)]
    )
    assert rc == EXIT_GENERATION
    assert not out.exists()


def make_dataset(tmp_path, game="magic_square", level=1, count=4, seed=3):
    out = tmp_path / "instances.jsonl"
    assert main(
        ["gen", "--game", game, "--level", str(level), "--count", str(count),
         "--seed", str(seed), "--out", str(out)]
    ) == 0
    return out


def test_grade_oracle_transcripts(tmp_path):
    instances = make_dataset(tmp_path)
    transcripts = tmp_path / "tx.jsonl"
    entries = []
    for line in instances.read_text().splitlines():
        instance = instance_from_json(line)
        entries.append(
            {"game": instance.game.value, "seed": instance.seed,
             "transcript": oracle_transcript(instance)}
        )
    entries.append({"game": "sudoku", "seed": 12345, "transcript": ""})
    transcripts.write_text("".join(json.dumps(e) + "\n" for e in entries))
    report = tmp_path / "report.jsonl"
    rc = main(
        ["grade", "--instances", str(instances), "--transcripts",
         str(transcripts), "--out", str(report)]
    )
    assert rc == 0
    records = read_jsonl(report)
    summary = records[-1]
    assert summary["summary"] is True
    assert summary["count"] == 4
    assert summary["errors"] == 1
    assert summary["mean_r_final"] == 1.0
    assert any(r.get("error") == "no matching instance" for r in records)


def test_grade_empty_transcripts(tmp_path):
    instances = make_dataset(tmp_path)
    transcripts = tmp_path / "tx.jsonl"
    transcripts.write_text("")
    report = tmp_path / "report.jsonl"
    assert main(
        ["grade", "--instances", str(instances), "--transcripts",
         str(transcripts), "--out", str(report)]
    ) == 0
    records = read_jsonl(report)
    assert records == [
        {"summary": True, "count": 0, "errors": 0,
         "mean_cumulative": None, "mean_r_final": None}
    ]


def test_grade_matches_library(tmp_path):
    from puzzle_forge.reward import RewardConfig, grade

    instances = make_dataset(tmp_path, game="cryptarithm", count=2, seed=8)
    transcripts = tmp_path / "tx.jsonl"
    entries = []
    insts = [instance_from_json(l) for l in instances.read_text().splitlines()]
    for instance in insts:
        entries.append(
            {"game": instance.game.value, "seed": instance.seed,
             "transcript": oracle_transcript(instance)}
        )
    transcripts.write_text("".join(json.dumps(e) + "\n" for e in entries))
    report = tmp_path / "report.jsonl"
    assert main(
        ["grade", "--instances", str(instances), "--transcripts",
         str(transcripts), "--gamma", "0.9", "--out", str(report)]
    ) == 0
    records = read_jsonl(report)[:-1]
    for record, instance in zip(records, insts):
        b = grade(
            oracle_transcript(instance), instance,
            RewardConfig(game=instance.game, gamma=0.9),
        )
        assert record["cumulative"] == b.cumulative
        assert record["discounted_return"] == b.discounted_return


def test_simulate_oracle_reaches_top(tmp_path):
    log = tmp_path / "run.jsonl"
    rc = main(
        ["simulate", "--agent", "oracle", "--window", "10", "--budget", "2000",
         "--seed", "1", "--snapshot-every", "50", "--out", str(log)]
    )
    assert rc == 0
    events = read_jsonl(log)
    done = events[-1]
    assert done["event"] == "done"
    assert done["reached_max"] is True
    assert set(done["levels"].values()) == {5}
    advances = [e for e in events if e["event"] == "advance"]
    assert len(advances) == 7 * 4
    for ev in advances:
        assert ev["to"] == ev["from"] + 1


def test_simulate_log_deterministic(tmp_path):
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    argv = ["simulate", "--agent", "oracle", "--window", "10",
            "--games", "graph_connectivity,knights_knaves",
            "--budget", "500", "--seed", "4", "--snapshot-every", "25"]
    assert main(argv + ["--out", str(a)]) == 0
    assert main(argv + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_simulate_oracle_budget_failure(tmp_path):
    log = tmp_path / "short.jsonl"
    rc = main(
        ["simulate", "--agent", "oracle", "--window", "10", "--budget", "3",
         "--seed", "1", "--out", str(log)]
    )
    assert rc == EXIT_BUDGET
    assert read_jsonl(log)[-1]["reached_max"] is False


def test_simulate_silent_agent_never_advances(tmp_path):
    log = tmp_path / "silent.jsonl"
    rc = main(
        ["simulate", "--agent", "silent", "--window", "10",
         "--games", "graph_connectivity", "--budget", "60", "--seed", "2",
         "--out", str(log)]
    )
    assert rc == 0
    events = read_jsonl(log)
    assert not [e for e in events if e["event"] == "advance"]
    assert events[-1]["levels"] == {"graph_connectivity": 1}


def test_simulate_holdout_flag_runs(tmp_path):
    log = tmp_path / "holdout.jsonl"
    rc = main(
        ["simulate", "--agent", "oracle", "--window", "10",
         "--games", "magic_square", "--budget", "100", "--seed", "5",
         "--holdout", "--out", str(log)]
    )
    assert rc == 0
    assert read_jsonl(log)[-1]["levels"] == {"magic_square": 5}


def test_report_renders_files(tmp_path):
    log = tmp_path / "run.jsonl"
    assert main(
        ["simulate", "--agent", "oracle", "--window", "10",
         "--games", "graph_connectivity", "--budget", "200", "--seed", "3",
         "--snapshot-every", "20", "--out", str(log)]
    ) == 0
    out_dir = tmp_path / "report"
    rc = main(["report", "--run-log", str(log), "--out-dir", str(out_dir)])
    assert rc == 0
    assert (out_dir / "levels.png").stat().st_size > 0
    assert (out_dir / "accuracy.png").stat().st_size > 0
    with (out_dir / "summary.csv").open() as fh:
        rows = list(csv.DictReader(fh))
    assert rows[0]["game"] == "graph_connectivity"
    assert rows[0]["final_level"] == "5"
    assert rows[0]["advancements"] == "4"


def test_console_entry_and_stdio_serve():
    instance = generate_instance(GameId.GRAPH_CONNECTIVITY, 1, 9)
    requests = (
        json.dumps({"cmd": "reset", "game": "graph_connectivity", "level": 1, "seed": 9})
        + "\n"
        + json.dumps(
            {"cmd": "score", "episode_id": "ep-0",
             "transcript": oracle_transcript(instance)}
        )
        + "\n"
    )
    proc = subprocess.run(
        [sys.executable, "-m", "puzzle_forge.cli", "serve", "--transport", "stdio"],
        input=requests,
        capture_output=True,
        text=True,
        timeout=120,
    )
    assert proc.returncode == 0
    replies = [json.loads(line) for line in proc.stdout.splitlines() if line]
    assert replies[0]["prompt"] == instance.prompt
    assert replies[1]["r_final"] == 1
