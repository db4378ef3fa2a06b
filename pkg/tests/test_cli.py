import json
import sys

import pytest

from solverank.cli import main
from solverank.corpus import save_corpus
from solverank.toy import make_toy_corpus, write_substitution_dict

PY_RUNNER = f"{sys.executable} {{src}}"


@pytest.fixture
def toy_files(tmp_path):
    corpus_path = tmp_path / "corpus.jsonl"
    save_corpus(make_toy_corpus(n_anchors=30), str(corpus_path))
    dict_path = tmp_path / "subst.json"
    write_substitution_dict(str(dict_path))
    yes_path = tmp_path / "yes.txt"
    yes_path.write_text("Yes")
    return tmp_path, str(corpus_path), str(dict_path), str(yes_path)


def run_cli(*argv) -> int:
    return main(list(argv))


class TestExitCodes:
    def test_unknown_subcommand_is_usage_error(self):
        with pytest.raises(SystemExit) as exc:
            run_cli("frobnicate")
        assert exc.value.code == 1

    def test_no_subcommand(self, capsys):
        assert run_cli() == 1

    def test_missing_corpus_path_is_data_error(self, tmp_path, caplog):
        missing = str(tmp_path / "nowhere.jsonl")
        assert run_cli("ingest", "--corpus", missing) == 2
        assert "nowhere.jsonl" in caplog.text

    def test_client_failure_is_exit_three(self, toy_files, capsys):
        tmp_path, corpus_path, _dict_path, _yes = toy_files
        replay_dir = tmp_path / "empty_replay"
        replay_dir.mkdir()
        code = run_cli(
            "synth",
            "--corpus",
            corpus_path,
            "--out",
            str(tmp_path / "synth.jsonl"),
            "--gen-client",
            f"replay:{replay_dir}",
            "--judge-client",
            f"replay:{replay_dir}",
        )
        assert code == 3


class TestIngest:
    def test_happy_path_json(self, toy_files, capsys):
        _tmp, corpus_path, _d, _y = toy_files
        assert run_cli("ingest", "--corpus", corpus_path) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["problems"] == 30
        assert payload["difficulty_bins"] == {"easy": 10, "medium": 10, "hard": 10}
        assert set(payload["meta"]) == {"command", "config_hash", "seed", "version"}

    def test_lenient_counts_skipped(self, tmp_path, capsys):
        path = tmp_path / "c.jsonl"
        path.write_text('{"id": "a", "statement": "ok"}\nnot json\n')
        assert run_cli("ingest", "--corpus", str(path), "--lenient") == 0
        assert json.loads(capsys.readouterr().out)["skipped_lines"] == 1


class TestConfigPrecedence:
    def test_flag_beats_config_beats_default(self, toy_files, capsys):
        tmp_path, corpus_path, dict_path, yes_path = toy_files
        synth_path = tmp_path / "synth.jsonl"
        assert (
            run_cli(
                "synth",
                "--corpus",
                corpus_path,
                "--out",
                str(synth_path),
                "--gen-client",
                f"paraphrase:{dict_path}",
                "--judge-client",
                f"const:{yes_path}",
            )
            == 0
        )
        config = tmp_path / "run.ini"
        config.write_text("[trainer]\nepochs = 2\ndim = 8\nfeatures = 1024\n")
        ckpt = tmp_path / "model.bin"
        assert (
            run_cli(
                "train",
                "--config",
                str(config),
                "--corpus",
                corpus_path,
                "--synth",
                str(synth_path),
                "--out",
                str(ckpt),
                "--dim",
                "4",
            )
            == 0
        )
        sidecar = json.loads((tmp_path / "model.bin.json").read_text())
        assert sidecar["config"]["epochs"] == 2  # from config file
        assert sidecar["config"]["dim"] == 4  # flag override wins


class TestTemplateOverrideConfig:
    def test_synth_uses_config_template(self, toy_files):
        tmp_path, corpus_path, _dict_path, yes_path = toy_files
        template = tmp_path / "gen.tmpl"
        template.write_text("REWRITE {{description}}\n")
        five = tmp_path / "five.txt"
        five.write_text("v1\nv2\nv3\nv4\nv5")
        config = tmp_path / "run.ini"
        config.write_text(f"[prompts]\ngenerate = {template}\n")
        synth_path = tmp_path / "synth.jsonl"
        assert (
            run_cli(
                "synth",
                "--config",
                str(config),
                "--corpus",
                corpus_path,
                "--out",
                str(synth_path),
                "--gen-client",
                f"const:{five}",
                "--judge-client",
                f"const:{yes_path}",
            )
            == 0
        )
        meta = json.loads(synth_path.read_text().splitlines()[0])["_meta"]
        assert meta["command"] == "synth"


class TestPipelineCommands:
    def test_search_eval_rank_report_flow(self, toy_files, capsys):
        tmp_path, corpus_path, dict_path, yes_path = toy_files
        synth_path = str(tmp_path / "synth.jsonl")
        qrels_path = str(tmp_path / "qrels.tsv")
        assert (
            run_cli(
                "synth",
                "--corpus",
                corpus_path,
                "--out",
                synth_path,
                "--qrels-out",
                qrels_path,
                "--gen-client",
                f"paraphrase:{dict_path}",
                "--judge-client",
                f"const:{yes_path}",
            )
            == 0
        )
        run_path = str(tmp_path / "run.tsv")
        assert (
            run_cli(
                "search",
                "--retriever",
                "bm25",
                "--queries",
                corpus_path,
                "--synth",
                synth_path,
                "--k",
                "5",
                "--out",
                run_path,
            )
            == 0
        )
        capsys.readouterr()
        assert run_cli("eval-rank", "--run", run_path, "--qrels", qrels_path) == 0
        payload = json.loads(capsys.readouterr().out)
        assert set(payload) >= {"P@1", "R@1", "P@3", "R@3", "P@5", "R@5", "MRR", "queries", "meta"}
        # vocabulary-swapped variants share no tokens with the anchors
        assert payload["MRR"] == 0.0

    def test_search_pool_union_adds_originals_as_distractors(self, toy_files, capsys):
        tmp_path, corpus_path, dict_path, yes_path = toy_files
        synth_path = str(tmp_path / "synth.jsonl")
        run_cli(
            "synth", "--corpus", corpus_path, "--out", synth_path,
            "--gen-client", f"paraphrase:{dict_path}", "--judge-client", f"const:{yes_path}",
        )
        run_path = str(tmp_path / "union_run.tsv")
        assert (
            run_cli(
                "search", "--retriever", "bm25", "--queries", corpus_path,
                "--corpus", corpus_path, "--synth", synth_path,
                "--k", "5", "--out", run_path,
            )
            == 0
        )
        retrieved = {line.split("\t")[1] for line in open(run_path) if not line.startswith("#")}
        # anchors share vocabulary only with other anchors, so with the union
        # pool the lexical retriever surfaces original problems
        assert any("#" not in doc_id for doc_id in retrieved)

    def test_bm25_index_build_and_search(self, toy_files, capsys):
        tmp_path, corpus_path, _d, _y = toy_files
        index_path = str(tmp_path / "bm25.json")
        assert run_cli("index-bm25", "--corpus", corpus_path, "--out", index_path) == 0
        run_path = str(tmp_path / "run.tsv")
        assert (
            run_cli(
                "search",
                "--retriever",
                "bm25",
                "--queries",
                corpus_path,
                "--corpus",
                corpus_path,
                "--bm25-index",
                index_path,
                "--k",
                "3",
                "--out",
                run_path,
            )
            == 0
        )
        lines = [l for l in open(run_path) if not l.startswith("#")]
        assert lines and all(len(l.rstrip("\n").split("\t")) == 5 for l in lines)

    def test_rag_and_report(self, toy_files, capsys):
        tmp_path, corpus_path, _d, _y = toy_files
        gen_reply = tmp_path / "gen.txt"
        gen_reply.write_text("print(sum(map(int, input().split())))")
        records_path = str(tmp_path / "records.jsonl")
        assert (
            run_cli(
                "rag",
                "--targets",
                corpus_path,
                "--pool",
                corpus_path,
                "--retriever",
                "random",
                "--k",
                "2",
                "--gen-client",
                f"const:{gen_reply}",
                "--runner",
                PY_RUNNER,
                "--timeout",
                "5",
                "--out",
                records_path,
            )
            == 0
        )
        capsys.readouterr()
        assert run_cli("report", "--records", records_path, "--targets", corpus_path) == 0
        payload = json.loads(capsys.readouterr().out)
        assert set(payload["bins"]) == {"easy", "medium", "hard"}
        # every third toy anchor is unsolvable by the canned program
        assert payload["overall"]["attempts"] == 30
        assert payload["overall"]["passes"] == 20
        assert set(payload["meta"]) == {"command", "config_hash", "seed", "version"}

    def test_stats_command(self, toy_files, capsys):
        tmp_path, corpus_path, dict_path, yes_path = toy_files
        synth_path = str(tmp_path / "synth.jsonl")
        run_cli(
            "synth",
            "--corpus",
            corpus_path,
            "--out",
            synth_path,
            "--gen-client",
            f"paraphrase:{dict_path}",
            "--judge-client",
            f"const:{yes_path}",
        )
        capsys.readouterr()
        assert run_cli("stats", "--corpus", corpus_path, "--synth", synth_path) == 0
        payload = json.loads(capsys.readouterr().out)
        assert [row["metric"] for row in payload["rows"]] == [
            "prompt_length",
            "vocabulary_entropy",
            "sentence_length",
        ]


class TestArtifactMetadata:
    def test_run_file_and_synth_carry_meta(self, toy_files):
        tmp_path, corpus_path, dict_path, yes_path = toy_files
        synth_path = tmp_path / "synth.jsonl"
        run_cli(
            "synth",
            "--corpus",
            corpus_path,
            "--out",
            str(synth_path),
            "--seed",
            "17",
            "--gen-client",
            f"paraphrase:{dict_path}",
            "--judge-client",
            f"const:{yes_path}",
        )
        first = json.loads(synth_path.read_text().splitlines()[0])
        assert first["_meta"]["seed"] == 17
        assert first["_meta"]["version"]
