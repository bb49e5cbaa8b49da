"""End-to-end CLI behaviour: subcommands, exit codes, file outputs."""

import hashlib

import numpy as np
import pytest

from marginlda import synth
from marginlda.cli import main
from marginlda.corpus import save_svmlight


@pytest.fixture
def toy_binary(tmp_path):
    train = tmp_path / "train.svm"
    test = tmp_path / "test.svm"
    save_svmlight(synth.binary_corpus(0, n_docs=30, n_per_doc=15, V=40), str(train))
    save_svmlight(synth.binary_corpus(1, n_docs=10, n_per_doc=15, V=40), str(test))
    return train, test


def run(argv):
    return main([str(a) for a in argv])


class TestTrain:
    def test_toy_training_succeeds(self, toy_binary, tmp_path, capsys):
        train, _ = toy_binary
        out = tmp_path / "model.snap"
        code = run(["train", "--task", "binary", "--data", train, "--topics", "4",
                    "--burnin", "3", "--out", out])
        assert code == 0
        assert out.exists()
        assert (tmp_path / "model.snap.log").exists()
        log = (tmp_path / "model.snap.log").read_text().splitlines()
        assert log[0] == "iteration\tseconds\ttrain_metric"
        assert len(log) == 4

    def test_two_line_corpus_trains(self, tmp_path):
        data = tmp_path / "tiny.svm"
        data.write_text("+1 0:2 3:1\n-1 1:1\n")
        code = run(["train", "--task", "binary", "--data", data, "--topics", "2",
                    "--burnin", "2", "--out", tmp_path / "m.snap"])
        assert code == 0

    def test_missing_file_exits_2(self, tmp_path, capsys):
        code = run(["train", "--task", "binary", "--data", tmp_path / "nope.svm",
                    "--topics", "2", "--out", tmp_path / "m.snap"])
        assert code == 2
        assert "error" in capsys.readouterr().err

    def test_missing_topics_exits_2(self, toy_binary, tmp_path):
        train, _ = toy_binary
        code = run(["train", "--task", "binary", "--data", train, "--out", tmp_path / "m"])
        assert code == 2

    def test_fixed_seed_reproduces_snapshot_bytes(self, toy_binary, tmp_path):
        train, _ = toy_binary
        digests = []
        for name in ("a.snap", "b.snap"):
            out = tmp_path / name
            assert run(["train", "--task", "binary", "--data", train, "--topics", "4",
                        "--burnin", "3", "--seed", "9", "--out", out]) == 0
            digests.append(hashlib.sha256(out.read_bytes()).hexdigest())
        assert digests[0] == digests[1]

    def test_multi_run_reports_mean_and_std(self, toy_binary, tmp_path, capsys):
        train, _ = toy_binary
        out = tmp_path / "m.snap"
        code = run(["train", "--task", "binary", "--data", train, "--topics", "4",
                    "--burnin", "3", "--runs", "3", "--out", out])
        assert code == 0
        text = capsys.readouterr().out
        assert "train_metric_mean" in text and "train_metric_std" in text
        assert (tmp_path / "m.snap.run0").exists()
        assert (tmp_path / "m.snap.run2").exists()

    def test_config_file_provides_defaults_flags_override(self, toy_binary, tmp_path):
        train, _ = toy_binary
        cfg = tmp_path / "run.cfg"
        cfg.write_text("task=binary\ntopics=4\nburnin=2\nseed=5\n")
        out1 = tmp_path / "m1.snap"
        assert run(["train", "--data", train, "--config", cfg, "--out", out1]) == 0
        # flag overrides config seed; result must differ from config-only run
        out2 = tmp_path / "m2.snap"
        assert run(["train", "--data", train, "--config", cfg, "--seed", "6",
                    "--out", out2]) == 0
        assert out1.read_bytes() != out2.read_bytes()

    def test_unknown_config_key_exits_2(self, toy_binary, tmp_path):
        train, _ = toy_binary
        cfg = tmp_path / "run.cfg"
        cfg.write_text("tisk=binary\n")
        assert run(["train", "--data", train, "--config", cfg,
                    "--out", tmp_path / "m"]) == 2

    def test_multiclass_ova_writes_manifest(self, tmp_path):
        data = tmp_path / "mc.svm"
        save_svmlight(synth.multiclass_corpus(0, n_docs=30, n_classes=3, n_per_doc=12), str(data))
        out = tmp_path / "model.ova"
        code = run(["train", "--task", "multiclass-ova", "--data", data, "--topics", "3",
                    "--burnin", "2", "--workers", "2", "--out", out])
        assert code == 0
        assert (tmp_path / "model.ova.task0").exists()
        assert (tmp_path / "model.ova.task2").exists()


class TestPredictAndEval:
    def _train(self, train, out, task="binary", topics="4"):
        assert run(["train", "--task", task, "--data", train, "--topics", topics,
                    "--burnin", "3", "--out", out]) == 0

    def test_prediction_file_has_one_line_per_document(self, toy_binary, tmp_path):
        train, test = toy_binary
        model = tmp_path / "m.snap"
        self._train(train, model)
        preds = tmp_path / "preds.tsv"
        assert run(["predict", "--data", model, "--test", test, "--out", preds]) == 0
        lines = preds.read_text().splitlines()
        assert len(lines) == 10
        for line in lines:
            doc_id, value = line.split("\t")
            assert value in ("+1", "-1")

    def test_empty_test_set_gives_empty_file(self, toy_binary, tmp_path):
        train, _ = toy_binary
        model = tmp_path / "m.snap"
        self._train(train, model)
        empty = tmp_path / "empty.svm"
        empty.write_text("# no documents\n")
        out = tmp_path / "preds.tsv"
        assert run(["predict", "--data", model, "--test", empty, "--out", out]) == 0
        assert out.read_text() == ""

    def test_eval_perfect_predictions(self, toy_binary, tmp_path, capsys):
        train, _ = toy_binary
        preds = tmp_path / "preds.tsv"
        truth_corpus = synth.binary_corpus(0, n_docs=30, n_per_doc=15, V=40)
        with open(preds, "w") as fh:
            for d, y in enumerate(truth_corpus.responses):
                fh.write(f"{d}\t{'+1' if y > 0 else '-1'}\n")
        assert run(["eval", preds, train, "--task", "binary"]) == 0
        assert "accuracy\t1" in capsys.readouterr().out

    def test_eval_mismatched_line_counts_exits_2(self, toy_binary, tmp_path):
        train, _ = toy_binary
        preds = tmp_path / "preds.tsv"
        preds.write_text("0\t+1\n")
        assert run(["eval", preds, train, "--task", "binary"]) == 2

    def test_eval_regression_prints_r2(self, tmp_path, capsys):
        data = tmp_path / "reg.svm"
        corpus = synth.regression_corpus(0, n_docs=12, n_per_doc=10)
        save_svmlight(corpus, str(data))
        preds = tmp_path / "preds.tsv"
        with open(preds, "w") as fh:
            for d, y in enumerate(corpus.responses):
                fh.write(f"{d}\t{y!r}\n")
        assert run(["eval", preds, data, "--task", "regression"]) == 0
        out = capsys.readouterr().out
        assert out.startswith("predictive_r2\t1")

    def test_multilabel_prediction_format(self, tmp_path):
        data = tmp_path / "ml.svm"
        save_svmlight(synth.multilabel_corpus(0, n_docs=24, n_classes=3, n_per_doc=12), str(data))
        model = tmp_path / "m.snap"
        assert run(["train", "--task", "multilabel", "--data", data, "--topics", "3",
                    "--burnin", "2", "--out", model]) == 0
        preds = tmp_path / "preds.tsv"
        assert run(["predict", "--data", model, "--test", data, "--out", preds]) == 0
        for line in preds.read_text().splitlines():
            doc_id, _, value = line.partition("\t")
            assert all(part.isdigit() for part in value.split(",") if part)

    def test_ova_predict_round_trip(self, tmp_path, capsys):
        data = tmp_path / "mc.svm"
        save_svmlight(synth.multiclass_corpus(0, n_docs=30, n_classes=3, n_per_doc=12), str(data))
        out = tmp_path / "model.ova"
        assert run(["train", "--task", "multiclass-ova", "--data", data, "--topics", "3",
                    "--burnin", "2", "--out", out]) == 0
        preds = tmp_path / "preds.tsv"
        assert run(["predict", "--data", out, "--test", data, "--out", preds]) == 0
        assert len(preds.read_text().splitlines()) == 30
        assert run(["eval", preds, data, "--task", "multiclass"]) == 0
        assert "accuracy" in capsys.readouterr().out


class TestBench:
    def test_bench_emits_parseable_table(self, capsys):
        code = run(["bench", "2000", "--topics", "4", "--workers", "2"])
        assert code == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0].startswith("bench\t")
        assert any(line.startswith("scaling\tN_total\t") for line in lines)
        assert any(line.startswith("one_vs_all\tworkers\t") for line in lines)
        for line in lines[1:]:
            assert len(line.split("\t")) == 4
