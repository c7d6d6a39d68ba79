import json

import pytest
from click.testing import CliRunner

from codetutor.cli import main

from conftest import CLEAN_CODE_REPLY, CONCEPT_REPLY, UNIVERSAL_REPLY


@pytest.fixture
def runner():
    return CliRunner()


def script_file(tmp_path, responses, strict=True, name="script.json"):
    path = tmp_path / name
    path.write_text(json.dumps({"responses": responses, "strict": strict}))
    return str(path)


def test_no_args_usage(runner):
    result = runner.invoke(main, [])
    assert result.exit_code in (0, 2)
    assert "Usage" in result.output


def test_unknown_command_exit_2(runner):
    result = runner.invoke(main, ["conjure"])
    assert result.exit_code == 2


def test_ask_requires_script_for_scripted_backend(runner):
    result = runner.invoke(main, ["ask", "Implement a counter."])
    assert result.exit_code == 2
    assert "--script" in result.output


def test_ask_code_question(runner, tmp_path):
    script = script_file(tmp_path, [CLEAN_CODE_REPLY])
    result = runner.invoke(
        main, ["--script", script, "--fake-clock", "ask", "Implement a counter."]
    )
    assert result.exit_code == 0, result.output
    assert "Completed" in result.output
    assert "x = 1" in result.output
    assert "lint: Pass" in result.output


def test_ask_concept_question(runner, tmp_path):
    script = script_file(tmp_path, [CONCEPT_REPLY])
    result = runner.invoke(
        main, ["--script", script, "--fake-clock", "ask", "Understand sorting."]
    )
    assert result.exit_code == 0, result.output
    assert "keywords: comparisons, order" in result.output


def test_ask_failure_exit_1(runner, tmp_path):
    script = script_file(tmp_path, ["garbage", "garbage"])
    result = runner.invoke(
        main, ["--script", script, "--fake-clock", "ask", "Implement a counter."]
    )
    assert result.exit_code == 1


def test_session_interactive_quit(runner, tmp_path):
    script = script_file(tmp_path, [CLEAN_CODE_REPLY], strict=False)
    result = runner.invoke(
        main,
        ["--script", script, "--fake-clock", "session"],
        input="Implement a counter.\nquit\n",
    )
    assert result.exit_code == 0, result.output
    assert "x = 1" in result.output


def test_session_unknown_scenario(runner, tmp_path):
    script = script_file(tmp_path, [UNIVERSAL_REPLY], strict=False)
    result = runner.invoke(
        main, ["--script", script, "session", "--scenario", "no-such-scenario"]
    )
    assert result.exit_code == 2


def test_train_classifier_missing_corpus_exit_1(runner, tmp_path):
    result = runner.invoke(
        main,
        ["train-classifier", "--corpus", str(tmp_path / "absent.tsv"),
         "--out", str(tmp_path / "m.bin")],
    )
    assert result.exit_code == 1
    assert "io error" in result.output


def test_train_classifier_small_corpus(runner, tmp_path):
    corpus = tmp_path / "corpus.tsv"
    rows = []
    for i in range(10):
        rows.append(f"what is topic{i}\t0")
        rows.append(f"write code to topic{i}\t1")
    corpus.write_text("\n".join(rows) + "\n")
    out = tmp_path / "model.bin"
    result = runner.invoke(
        main,
        ["train-classifier", "--corpus", str(corpus), "--epochs", "1",
         "--out", str(out)],
    )
    assert result.exit_code == 0, result.output
    assert out.exists()
    assert "epoch 1:" in result.output


def test_bench_bundled_scripted(runner, tmp_path):
    script = script_file(tmp_path, [UNIVERSAL_REPLY], strict=False)
    report_dir = tmp_path / "report"
    result = runner.invoke(
        main,
        ["--script", script, "--fake-clock", "bench", "--report", str(report_dir)],
    )
    assert result.exit_code == 0, result.output
    assert "8 6 6" in result.output
    assert "31 26 22" in result.output
    assert (report_dir / "report.txt").exists()
    assert (report_dir / "report.json").exists()
    assert (report_dir / "per_subtask.csv").exists()
    assert list((report_dir / "figures").glob("*.png"))


def test_bench_incomplete_exit_1(runner, tmp_path):
    script = script_file(tmp_path, ["garbage"], strict=False)
    result = runner.invoke(main, ["--script", script, "--fake-clock", "bench"])
    assert result.exit_code == 1


def test_bench_suite_dir_missing(runner, tmp_path):
    script = script_file(tmp_path, [UNIVERSAL_REPLY], strict=False)
    result = runner.invoke(
        main, ["--script", script, "bench", "--suite", str(tmp_path / "nope")]
    )
    assert result.exit_code == 1
    assert "error" in result.output
