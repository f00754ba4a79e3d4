"""
Tests for the mgidx command line: subcommands and exit codes
"""

import pandas as pd
import pytest

from engine.bench_cli import main
from logic.lpms import load_selection


def _build(words_path, worked_queries_path, out, mode="ipms"):
    return main(["build", "--mode", mode, "--corpus", words_path,
                 "--queries", worked_queries_path, "--out", str(out)])


def test_build_prints_worked_selection(words_path, worked_queries_path, capsys):
    code = main(["build", "--mode", "ipms", "--corpus", words_path,
                 "--queries", worked_queries_path])
    assert code == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[-3:] == ["cede", "ex", "pr"]


def test_build_writes_selection(words_path, worked_queries_path, tmp_path):
    path = tmp_path / "sel.txt"
    assert main(["build", "--mode", "IPMS", "--corpus", words_path,
                 "--queries", worked_queries_path, "--selection", str(path)]) == 0
    selection = load_selection(str(path))
    assert selection.grams == ("cede", "ex", "pr")
    assert selection.supports == {"cede": 2, "ex": 2, "pr": 2}


@pytest.mark.parametrize("mode", ["ipms", "lpms-d", "lpms-r", "best"])
def test_indexed_answers_equal_full_scan(words_path, worked_queries_path, tmp_path, mode):
    index = tmp_path / "idx.mgidx"
    assert _build(words_path, worked_queries_path, index, mode) == 0

    indexed = tmp_path / "indexed.csv"
    scanned = tmp_path / "scanned.csv"
    assert main(["query", "--corpus", words_path, "--queries", worked_queries_path,
                 "--index", str(index), "--out", str(indexed)]) == 0
    assert main(["query", "--corpus", words_path, "--queries", worked_queries_path,
                 "--no-index", "--out", str(scanned)]) == 0
    assert indexed.read_text() == scanned.read_text()

    frame = pd.read_csv(indexed)
    assert list(frame.itertuples(index=False, name=None)) == [("q1", 1), ("q1", 5), ("q1", 7),
                                                             ("q2", 2)]


def test_query_prints_metrics(words_path, worked_queries_path, tmp_path, capsys):
    index = tmp_path / "idx.mgidx"
    _build(words_path, worked_queries_path, index)
    capsys.readouterr()
    assert main(["query", "--corpus", words_path, "--queries", worked_queries_path,
                 "--index", str(index), "--metrics"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("query_id,record_id")
    assert "hit rate: 1.000" in out
    assert "precision: 0.625" in out


@pytest.mark.parametrize("argv", [
    [],
    ["build", "--corpus", "x.txt"],
    ["build", "--mode", "greedy", "--corpus", "x.txt"],
    ["bench", "exp9"],
])
def test_usage_errors(argv):
    assert main(argv) == 1


def test_data_errors(words_path, tmp_path, capsys):
    assert main(["query", "--corpus", str(tmp_path / "missing.txt"), "--no-index"]) == 2
    assert main(["build", "--mode", "lpms-d", "--corpus", words_path]) == 2
    assert main(["query", "--corpus", words_path]) == 2
    assert "✗" in capsys.readouterr().err


def test_verify(words_path, worked_queries_path, tmp_path, capsys):
    index = tmp_path / "idx.mgidx"
    _build(words_path, worked_queries_path, index, "lpms-d")
    assert main(["verify", "--corpus", words_path, "--index", str(index),
                 "--queries", worked_queries_path]) == 0
    assert "indexed answers equal full scan" in capsys.readouterr().out

    other = tmp_path / "other.txt"
    other.write_text("succeed\nproceed\n", encoding="utf-8")
    assert main(["verify", "--corpus", str(other), "--index", str(index)]) == 2

    damaged = tmp_path / "damaged.mgidx"
    lines = index.read_text(encoding="utf-8").splitlines(keepends=True)
    damaged.write_text("".join(lines[:-1]), encoding="utf-8")
    assert main(["verify", "--corpus", words_path, "--index", str(damaged)]) == 2


def test_generate_build_verify(tmp_path):
    corpus = tmp_path / "corpus.txt"
    queries = tmp_path / "queries.txt"
    index = tmp_path / "idx.mgidx"
    assert main(["gen-corpus", "--records", "30", "--record-len", "40,60", "--alphabet", "ABCD",
                 "--seed", "1", "--out", str(corpus)]) == 0
    assert len(corpus.read_text().splitlines()) == 30
    assert main(["gen-workload", "--corpus", str(corpus), "--sample-fraction", "0.5",
                 "--seed", "2", "--out", str(queries)]) == 0
    assert queries.read_text().strip()
    assert main(["build", "--mode", "lpms-r", "--corpus", str(corpus), "--queries", str(queries),
                 "--seed", "3", "--out", str(index)]) == 0
    assert main(["verify", "--corpus", str(corpus), "--index", str(index),
                 "--queries", str(queries)]) == 0


def test_bench_exp5(tmp_path):
    out = tmp_path / "exp5"
    assert main(["bench", "exp5", "--records", "40", "--out", str(out)]) == 0
    frame = pd.read_csv(out / "exp5_prosite.csv")
    assert list(frame["min_len"]) == [2, 3]
    assert frame.loc[0, "hit_rate"] == 1.0
    assert frame.loc[1, "hit_rate"] < 1.0
    assert (frame["equivalent"] == frame["signatures"]).all()
    assert (out / "exp5_manifest.json").exists()
