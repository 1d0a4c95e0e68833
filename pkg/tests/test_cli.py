import hashlib
import json
import sys
from pathlib import Path

import pytest

from reviewgen import cli
from reviewgen.assemble import parse_entries
from reviewgen.cli import ConfigError, PipelineConfig, load_config
from reviewgen.corpus import strip_citation_markers, write_corpus_jsonl
from reviewgen.fixture import REVIEW_PMIDS

QUERY = "alzheimer disease"
ECHO_SCORER = f"external:{sys.executable} -m reviewgen.echo_stub"


@pytest.fixture(scope="module")
def corpus_file(tmp_path_factory, index):
    path = tmp_path_factory.mktemp("corpus") / "fixture.jsonl"
    write_corpus_jsonl(index, path)
    return path


def run_pipeline(ws: Path, corpus_file: Path, epochs: str = "200") -> None:
    for argv in (
        ["--workspace", str(ws), "ingest", "--corpus", str(corpus_file)],
        ["--workspace", str(ws), "labels"],
        ["--workspace", str(ws), "train", "--epochs", epochs],
        ["--workspace", str(ws), "graph", "--query", QUERY],
    ):
        code = cli.main(argv)
        assert code == 0, f"stage failed: {argv}"


@pytest.fixture(scope="module")
def pipeline_ws(tmp_path_factory, corpus_file):
    ws = tmp_path_factory.mktemp("ws")
    run_pipeline(ws, corpus_file)
    return ws


class TestConfig:
    def test_defaults_valid(self):
        load_config(None)

    def test_file_then_overrides(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text(
            "# pipeline settings\n"
            "\n"
            "k = 7\n"
            "weights=1,0.5,0,2\n"
            "scorer=baseline\n"
        )
        config = load_config(cfg, ["k=9", "aggregation=max"])
        assert config.k == 9
        assert config.weights == (1.0, 0.5, 0.0, 2.0)
        assert config.aggregation == "max"

    def test_unknown_key(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("blocksize=3\n")
        with pytest.raises(ConfigError, match="unknown config key"):
            load_config(cfg)

    def test_bad_int(self):
        with pytest.raises(ConfigError, match="integer"):
            load_config(None, ["k=many"])

    def test_missing_equals(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("just a line\n")
        with pytest.raises(ConfigError, match="key=value"):
            load_config(cfg)

    def test_validation_rules(self):
        with pytest.raises(ConfigError, match="block_size"):
            load_config(None, ["block_size=5", "intersection=5"])
        with pytest.raises(ConfigError, match="weights"):
            load_config(None, ["weights=1,2"])
        with pytest.raises(ConfigError, match="scorer"):
            load_config(None, ["scorer=neural"])
        with pytest.raises(ConfigError, match="rank_by"):
            load_config(None, ["rank_by=alphabetical"])
        PipelineConfig(scorer="external:somecmd --flag").validate()


class TestExitCodes:
    def test_config_error_is_2(self, tmp_path, capsys):
        code = cli.main(["--workspace", str(tmp_path / "ws"), "--set", "k=0", "labels"])
        assert code == 2
        assert "config error" in capsys.readouterr().err

    def test_missing_config_file_is_2(self, tmp_path, capsys):
        code = cli.main(
            ["--config", str(tmp_path / "nope.cfg"), "--workspace", str(tmp_path / "ws"), "labels"]
        )
        assert code == 2

    def test_stage_before_ingest_is_3(self, tmp_path, capsys):
        code = cli.main(["--workspace", str(tmp_path / "ws"), "review", "--query", QUERY])
        assert code == 3
        assert "'ingest'" in capsys.readouterr().err

    def test_train_before_labels_is_3(self, tmp_path, corpus_file, capsys):
        ws = tmp_path / "ws"
        assert cli.main(["--workspace", str(ws), "ingest", "--corpus", str(corpus_file)]) == 0
        code = cli.main(["--workspace", str(ws), "train"])
        assert code == 3
        assert "'labels'" in capsys.readouterr().err

    def test_review_before_train_is_3(self, tmp_path, corpus_file, capsys):
        ws = tmp_path / "ws"
        assert cli.main(["--workspace", str(ws), "ingest", "--corpus", str(corpus_file)]) == 0
        code = cli.main(["--workspace", str(ws), "review", "--query", QUERY])
        assert code == 3
        assert "'train'" in capsys.readouterr().err

    def test_locked_workspace_is_2(self, tmp_path, corpus_file, capsys):
        ws = tmp_path / "ws"
        ws.mkdir()
        (ws / "workspace.lock").write_text("locked\n")
        code = cli.main(["--workspace", str(ws), "ingest", "--corpus", str(corpus_file)])
        assert code == 2
        assert "locked" in capsys.readouterr().err

    def test_lock_released_after_run(self, tmp_path, corpus_file):
        ws = tmp_path / "ws"
        assert cli.main(["--workspace", str(ws), "ingest", "--corpus", str(corpus_file)]) == 0
        assert not (ws / "workspace.lock").exists()
        # and after a failing run too
        assert cli.main(["--workspace", str(ws), "train"]) == 3
        assert not (ws / "workspace.lock").exists()

    def test_missing_corpus_file_is_1(self, tmp_path, capsys):
        code = cli.main(
            ["--workspace", str(tmp_path / "ws"), "ingest", "--corpus", str(tmp_path / "no.jsonl")]
        )
        assert code == 1
        assert "not found" in capsys.readouterr().err

    def test_no_match_query_is_1(self, pipeline_ws, capsys):
        code = cli.main(["--workspace", str(pipeline_ws), "graph", "--query", "xylophone"])
        assert code == 1
        assert "no papers match" in capsys.readouterr().err

    def test_bad_n_is_2(self, pipeline_ws, capsys):
        code = cli.main(["--workspace", str(pipeline_ws), "benchmark", "--n", "1,two"])
        assert code == 2

    def test_unknown_benchmark_scorer_is_2(self, pipeline_ws, capsys):
        code = cli.main(
            ["--workspace", str(pipeline_ws), "benchmark", "--scorer", "neural"]
        )
        assert code == 2


class TestStages:
    def test_ingest_outputs(self, tmp_path, corpus_file, index, capsys):
        ws = tmp_path / "ws"
        assert cli.main(["--workspace", str(ws), "ingest", "--corpus", str(corpus_file)]) == 0
        out = capsys.readouterr().out
        assert f"ingested {len(index)} papers (0 rejected lines)" in out
        assert (ws / "index" / "corpus.jsonl").exists()
        assert (ws / "index" / "ingest_report.jsonl").read_text() == ""
        # cached index is byte-identical to the input snapshot
        assert (ws / "index" / "corpus.jsonl").read_bytes() == corpus_file.read_bytes()

    def test_labels_holdout(self, tmp_path, corpus_file, capsys):
        ws = tmp_path / "ws"
        assert cli.main(["--workspace", str(ws), "ingest", "--corpus", str(corpus_file)]) == 0
        assert cli.main(
            ["--workspace", str(ws), "labels", "--holdout", ",".join(REVIEW_PMIDS)]
        ) == 0
        assert "wrote 0 labeled blocks" in capsys.readouterr().out

    def test_train_writes_model_and_log(self, pipeline_ws):
        model = json.loads((pipeline_ws / "models" / "baseline.json").read_text())
        assert model["feature_version"] == 1
        assert len(model["weights"]) == 6
        log = (pipeline_ws / "models" / "training_log.tsv").read_text().rstrip("\n").split("\n")
        assert log[0] == "epoch\tmse"
        assert len(log) == 201
        losses = [float(line.split("\t")[1]) for line in log[1:]]
        assert losses[-1] < losses[0]

    def test_graph_outputs(self, pipeline_ws):
        members = (pipeline_ws / "graph" / "members.txt").read_text().split()
        assert len(members) == 10
        topics = (pipeline_ws / "graph" / "topics.tsv").read_text().rstrip("\n").split("\n")
        assert topics[0] == "pmid\ttopic"
        assert len(topics) == 11
        graph_tsv = (pipeline_ws / "graph" / "graph.tsv").read_text()
        assert graph_tsv.startswith(
            "pmid1\tpmid2\tweight\tcitation\tcocitation\tcoupling\ttext\n"
        )

    def test_review_table(self, pipeline_ws, index, capsys):
        code = cli.main(
            ["--workspace", str(pipeline_ws), "review", "--query", QUERY, "--k", "5"]
        )
        assert code == 0
        out = capsys.readouterr().out
        assert out.startswith("| Paper | Year | Summary sentence | Score |")
        entries = parse_entries((pipeline_ws / "reviews" / "review.tsv").read_text())
        assert len(entries) == 5
        for entry in entries:
            body = strip_citation_markers(" ".join(index.paper(entry.pmid).body_sentences))
            assert entry.best_sentence in body
        assert (pipeline_ws / "reviews" / "review.md").read_text() == out
        parsed = parse_entries((pipeline_ws / "reviews" / "review.json").read_text(), "json")
        assert parsed == entries

    def test_review_deterministic_across_workspaces(self, tmp_path, corpus_file):
        outputs = []
        for name in ("a", "b"):
            ws = tmp_path / name
            run_pipeline(ws, corpus_file)
            assert cli.main(
                ["--workspace", str(ws), "review", "--query", QUERY, "--k", "5"]
            ) == 0
            outputs.append((ws / "reviews" / "review.tsv").read_bytes())
        assert outputs[0] == outputs[1]

    def test_benchmark_oracle(self, pipeline_ws, capsys):
        code = cli.main(
            ["--workspace", str(pipeline_ws), "benchmark", "--n", "1,5,10", "--scorer", "oracle"]
        )
        assert code == 0
        summary = (pipeline_ws / "bench" / "summary.tsv").read_text().rstrip("\n").split("\n")
        assert summary[0] == "n\tmean_rouge"
        assert [row.split("\t")[0] for row in summary[1:]] == ["1", "5", "10"]
        table = (pipeline_ws / "bench" / "benchmark.tsv").read_text().rstrip("\n").split("\n")
        assert len(table) == 1 + 3 * len(REVIEW_PMIDS)
        assert capsys.readouterr().out == "\n".join(summary) + "\n"

    def test_benchmark_baseline_holdout(self, pipeline_ws):
        code = cli.main(
            [
                "--workspace", str(pipeline_ws),
                "benchmark", "--n", "1", "--holdout", REVIEW_PMIDS[0],
            ]
        )
        assert code == 0
        table = (pipeline_ws / "bench" / "benchmark.tsv").read_text().rstrip("\n").split("\n")
        assert len(table) == 2
        assert table[1].startswith(f"{REVIEW_PMIDS[0]}\t1\t")

    def test_review_with_external_scorer(self, tmp_path, corpus_file):
        ws = tmp_path / "ws"
        run_pipeline(ws, corpus_file)
        code = cli.main(
            [
                "--workspace", str(ws),
                "--set", f"scorer={ECHO_SCORER}",
                "review", "--query", QUERY, "--k", "3",
            ]
        )
        assert code == 0
        entries = parse_entries((ws / "reviews" / "review.tsv").read_text())
        # fixture sentences never parse as numbers, so the stub scores all
        # zeros and the stable tie-break picks sentence 0 everywhere
        assert [e.sentence_index for e in entries] == [0, 0, 0]
        assert all(e.score == 0.0 for e in entries)

    def test_report(self, pipeline_ws, tmp_path, capsys):
        ann = tmp_path / "ann.csv"
        rows = ["query,pmid,sentence,label"]
        rows += [f"q1,{100 + i},s,useful" for i in range(12)]
        rows += [f"q1,{200 + i},s,relevant" for i in range(7)]
        rows += ["q1,300,s,not relevant", "q1,301,s,excellent"]
        ann.write_text("\n".join(rows) + "\n")
        code = cli.main(["--workspace", str(pipeline_ws), "report", "--annotations", str(ann)])
        assert code == 0
        captured = capsys.readouterr()
        assert "rejected: line 22" in captured.err
        assert "| q1 | 5% | 35% | 60% |" in captured.out
        tsv = (pipeline_ws / "bench" / "annotation_report.tsv").read_text()
        assert "q1\t5\t35\t60" in tsv
        assert (pipeline_ws / "bench" / "annotation_report.md").read_text() == captured.out

    def test_report_without_valid_rows_is_2(self, pipeline_ws, tmp_path, capsys):
        ann = tmp_path / "empty.csv"
        ann.write_text("query,pmid,sentence,label\n")
        code = cli.main(["--workspace", str(pipeline_ws), "report", "--annotations", str(ann)])
        assert code == 2

    def test_downstream_stages_leave_upstream_bytes_alone(self, tmp_path, corpus_file):
        ws = tmp_path / "ws"
        run_pipeline(ws, corpus_file)

        def snapshot():
            out = {}
            for stage in ("index", "labels", "models", "graph"):
                for p in sorted((ws / stage).glob("*")):
                    out[str(p)] = hashlib.sha256(p.read_bytes()).hexdigest()
            return out

        before = snapshot()
        assert cli.main(["--workspace", str(ws), "review", "--query", QUERY, "--k", "3"]) == 0
        assert cli.main(
            ["--workspace", str(ws), "benchmark", "--n", "1", "--scorer", "random"]
        ) == 0
        assert snapshot() == before
