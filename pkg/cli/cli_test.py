import json
from fractions import Fraction
from pathlib import Path

import pytest

from cli.main import main
from clickstream.reader import format_record
from corpus.manifest import CorpusManifest
from errors import EXIT_DATA, EXIT_OK, EXIT_USAGE
from loadsim.workload import synthetic_click_log
from miner.output import read_mined, write_mined
from miner.stats import MinedPair, PairStats

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"
QUIET = ["--log-level", "WARNING", "--no-log-json"]


def write_log(path, records):
    with open(path, "w", encoding="utf-8") as f:
        for record in records:
            f.write(format_record(record))
    return path


def run_json(capsys, *argv):
    code = main([*argv, *QUIET])
    assert code == EXIT_OK
    return json.loads(capsys.readouterr().out)


class TestMine:
    def test_top_and_bottom(self, tmp_path, capsys):
        log = write_log(tmp_path / "log.tsv", synthetic_click_log(10_000, 300, 200, seed=1))
        top, bottom = tmp_path / "top.tsv", tmp_path / "bottom.tsv"

        summary = run_json(capsys, "mine", "--log", str(log), "--eta", "0.7", "--chi", "15",
                           "--mode", "top", "--out", str(top))
        assert summary["records"] == 10_000
        assert summary["pairs_out"] > 0
        top_pairs = read_mined(top)
        assert all(p.stats.ctr >= Fraction(7, 10) and p.stats.luv >= 15 for p in top_pairs)

        run_json(capsys, "mine", "--log", str(log), "--eta", "0.3", "--chi", "15",
                 "--mode", "bottom", "--out", str(bottom))
        bottom_pairs = read_mined(bottom)
        assert all(p.stats.ctr <= Fraction(3, 10) and p.stats.luv >= 15 for p in bottom_pairs)
        assert not {p.stats.key for p in top_pairs} & {p.stats.key for p in bottom_pairs}

    def test_empty_log(self, tmp_path, capsys):
        log = tmp_path / "empty.tsv"
        log.write_text("", encoding="utf-8")
        out = tmp_path / "mined.tsv"
        summary = run_json(capsys, "mine", "--log", str(log), "--out", str(out))
        assert summary["pairs_in"] == summary["pairs_out"] == 0
        assert out.read_text(encoding="utf-8") == ""

    def test_missing_log_is_data_error(self, tmp_path):
        assert main(["mine", "--log", str(tmp_path / "nope.tsv"), "--out", str(tmp_path / "o.tsv"), *QUIET]) \
            == EXIT_DATA

    def test_bad_eta_is_usage_error(self, tmp_path):
        log = tmp_path / "log.tsv"
        log.write_text("u1\tq\tt\t1\n", encoding="utf-8")
        assert main(["mine", "--log", str(log), "--eta", "abc", "--out", str(tmp_path / "o.tsv"), *QUIET]) \
            == EXIT_USAGE


def test_report_zipf_lowest_bucket(tmp_path, capsys):
    records = synthetic_click_log(total_records=50_000, distinct_pairs=100_000, users=20_000, zipf_s=1.1, seed=17)
    log = write_log(tmp_path / "log.tsv", records)
    out = tmp_path / "luv.csv"
    summary = run_json(capsys, "report", "--log", str(log), "--axis", "luv", "--edges", "1,5,inf", "--out", str(out))
    assert summary["buckets"][0]["ratio"] > 0.75
    assert out.read_text(encoding="utf-8").splitlines()[0] == "bucket_low,bucket_high,ratio"


def test_corpus_and_coverage(tmp_path, capsys):
    mined = tmp_path / "mined.tsv"
    write_mined([MinedPair("dítě rýma", "child runny nose", PairStats("dítě rýma", "child runny nose", 20, 16))],
                mined)
    data = run_json(capsys, "corpus", "--base", str(FIXTURES / "base_corpus.tsv"), "--mined", str(mined),
                    "--strategy", "JT", "--out-dir", str(tmp_path / "jt"), "--repeat-factor", "2")
    assert data["stages"][0]["count"] == 3 + 2
    assert CorpusManifest.load(tmp_path / "jt" / "manifest.json").total_count == 5

    coverage = run_json(capsys, "coverage", "--train", str(FIXTURES / "base_corpus.tsv"),
                        "--test", str(FIXTURES / "test_source.txt"))
    assert coverage == {"coverage": 0.5, "fraction": "1/2"}


class TestSimulate:
    def test_desk_scale_config(self, tmp_path, capsys):
        out = tmp_path / "report.json"
        report = run_json(capsys, "simulate", "--config", str(FIXTURES / "desk_scale.yaml"), "--out", str(out))
        assert report["requests"] == 100_000
        assert 0.85 <= report["proportion_cache"] <= 0.95
        assert report["average_latency_ms"] <= 15
        assert json.loads(out.read_text(encoding="utf-8")) == report

    def test_byte_identical_reruns(self, tmp_path, capsys):
        outputs = []
        for i in range(2):
            out, hist = tmp_path / f"report{i}.json", tmp_path / f"hist{i}.csv"
            run_json(capsys, "simulate", "--config", str(FIXTURES / "desk_scale.yaml"),
                     "--total-requests", "5000", "--distinct-queries", "2000",
                     "--seed", "3", "--out", str(out), "--histogram", str(hist))
            outputs.append((out.read_bytes(), hist.read_bytes()))
        assert outputs[0] == outputs[1]

    def test_fast_only_baseline(self, capsys):
        report = run_json(capsys, "simulate", "--config", str(FIXTURES / "desk_scale.yaml"),
                          "--total-requests", "2000", "--distinct-queries", "1000", "--policy", "fast_only")
        assert report["average_latency_ms"] == 10.0

    def test_missing_config_is_usage_error(self, tmp_path):
        assert main(["simulate", "--config", str(tmp_path / "missing.yaml"), *QUIET]) == EXIT_USAGE


def test_translate_shows_upgrade(tmp_path, capsys):
    out = tmp_path / "translations.tsv"
    code = main(["translate", "--config", str(FIXTURES / "desk_scale.yaml"),
                 "--queries", str(FIXTURES / "queries.txt"), "--out", str(out), *QUIET])
    assert code == EXIT_OK
    assert out.read_text(encoding="utf-8").splitlines() == [
        "Dítě rýma\tchild fever\tfast\t10",
        "kryt na telefon\tcover on phone\tfast\t10",
        "Dítě  rýma\tchild runny nose\tcache\t0",
        "zimní boty\twinter shoes\tfast\t10",
        "kryt na telefon\tphone case\tcache\t0",
    ]


class TestEvaluate:
    def test_perfect_run(self, capsys):
        means = run_json(capsys, "evaluate", "--qrels", str(FIXTURES / "qrels.txt"),
                         "--run", f"perfect={FIXTURES / 'perfect_run.txt'}")
        assert means["perfect"] == pytest.approx({"P@10": 0.1, "MAP": 1.0, "NDCG@10": 1.0})
        means = run_json(capsys, "evaluate", "--qrels", str(FIXTURES / "qrels.txt"),
                         "--run", str(FIXTURES / "perfect_run.txt"), "--k", "1")
        assert means["perfect_run"] == {"P@1": 1.0, "MAP": 1.0, "NDCG@1": 1.0}

    def test_two_systems_table(self, tmp_path, capsys):
        table = tmp_path / "table.csv"
        run_json(capsys, "evaluate", "--qrels", str(FIXTURES / "qrels.txt"),
                 "--run", f"weak={FIXTURES / 'weak_run.txt'}",
                 "--run", f"perfect={FIXTURES / 'perfect_run.txt'}",
                 "--out-csv", str(table), "--out-json", str(tmp_path / "eval.json"))
        lines = table.read_text(encoding="utf-8").splitlines()
        assert lines[0] == "system,P@10,MAP,NDCG@10,wilcoxon_p,significant"
        assert lines[1].startswith("weak,") and lines[2].startswith("perfect,")
        assert "significance" in json.loads((tmp_path / "eval.json").read_text(encoding="utf-8"))

    def test_missing_qrels_is_data_error(self, tmp_path):
        assert main(["evaluate", "--qrels", str(tmp_path / "none.txt"),
                     "--run", str(FIXTURES / "perfect_run.txt"), *QUIET]) == EXIT_DATA


def test_bleu(capsys):
    same = run_json(capsys, "bleu", "--hyp", str(FIXTURES / "references.txt"), "--ref", str(FIXTURES / "references.txt"))
    assert same["bleu"] == 1.0
    fast = run_json(capsys, "bleu", "--hyp", str(FIXTURES / "fast_hypotheses.txt"),
                    "--ref", str(FIXTURES / "references.txt"))
    assert 0.0 < fast["bleu"] < 1.0


def test_bleu_line_count_mismatch_is_data_error(tmp_path):
    short = tmp_path / "short.txt"
    short.write_text("child runny nose\n", encoding="utf-8")
    assert main(["bleu", "--hyp", str(short), "--ref", str(FIXTURES / "references.txt"), *QUIET]) == EXIT_DATA


def test_serve_hands_service_to_uvicorn(monkeypatch):
    import uvicorn

    calls = {}
    monkeypatch.setattr(uvicorn, "run", lambda app, **kwargs: calls.update(app=app, **kwargs))
    assert main(["serve", "--config", str(FIXTURES / "desk_scale.yaml"), "--port", "9001", *QUIET]) == EXIT_OK
    assert calls["port"] == 9001 and calls["host"] == "127.0.0.1"
    assert calls["app"].gateway.config.worker_count == 32


@pytest.mark.parametrize("argv", [[], ["frobnicate"], ["mine", "--out", "x.tsv"]])
def test_usage_errors(argv):
    assert main(argv) == EXIT_USAGE
