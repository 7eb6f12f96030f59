import csv
import json

import numpy as np
import pytest

from bwvnet import model_io
from bwvnet.cli import EXIT_DATA, EXIT_NUMERIC, EXIT_OK, EXIT_USAGE, run
from bwvnet.dataset import DatasetManifest
from bwvnet.images import read_image, write_png
from bwvnet.network import build

from pipeline import chdir, smoke_pipeline


@pytest.fixture(scope="module")
def pipeline_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    smoke_pipeline(d)
    return d


def test_help_exits_zero(capsys):
    assert run(["--help"]) == EXIT_OK
    assert run(["train", "--help"]) == EXIT_OK


def test_no_command_is_usage_error():
    assert run([]) == EXIT_USAGE


def test_missing_required_flag():
    assert run(["eval", "--model", "m"]) == EXIT_USAGE


def test_unknown_flag():
    assert run(["report", "--tp", "1", "--bogus"]) == EXIT_USAGE


def test_report_counts(capsys, tmp_path):
    out = tmp_path / "r.txt"
    assert run(["report", "--tp", "66", "--fp", "1", "--fn", "0", "--tn", "137", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[1] == "AC PR SE F1 SP AUC"
    assert lines[2].split()[:3] == ["99.51", "98.51", "100.00"]
    assert "99.51" in capsys.readouterr().out


def test_report_needs_counts():
    assert run(["report", "--tp", "1"]) == EXIT_USAGE


def test_report_undefined_footnote(capsys):
    assert run(["report", "--tp", "0", "--fp", "0", "--fn", "2", "--tn", "3"]) == 0
    assert "* PR undefined" in capsys.readouterr().out


def test_resolved_config_printed(capsys):
    run(["report", "--tp", "1", "--fp", "0", "--fn", "0", "--tn", "1"])
    err = capsys.readouterr().err
    line = next(l for l in err.splitlines() if l.startswith("config: "))
    cfg = json.loads(line[len("config: "):])
    assert cfg["tp"] == 1 and cfg["command"] == "report"


def test_config_file_and_flag_precedence(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"tp": 4, "fp": 0, "fn": 1, "tn": 15}))
    assert run(["report", "--config", str(cfg)]) == 0
    assert capsys.readouterr().out.splitlines()[2] == "95.00 100.00 80.00 88.89 100.00 —"
    assert run(["report", "--config", str(cfg), "--tp", "3"]) == 0
    assert capsys.readouterr().out.startswith("TP=3 ")


def test_config_unknown_key(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text('{"learning_rate": 1}')
    assert run(["report", "--config", str(cfg)]) == EXIT_USAGE


def test_annotate_empty_dir_is_data_error(tmp_path):
    (tmp_path / "empty").mkdir()
    assert run(["annotate", "--input-dir", str(tmp_path / "empty"), "--out", str(tmp_path / "a")]) == EXIT_DATA


def test_ingest_bad_labels_is_data_error(tmp_path, capsys):
    d = tmp_path / "img"
    d.mkdir()
    write_png(d / "a.png", np.zeros((4, 4, 3), np.uint8))
    (tmp_path / "l.csv").write_text("stem,label\na,veil\n")
    assert run(["ingest", "--image-dir", str(d), "--labels", str(tmp_path / "l.csv"),
                "--out", str(tmp_path / "m.jsonl")]) == EXIT_DATA
    assert "unknown label token" in capsys.readouterr().err


def test_eval_missing_model_is_data_error(tmp_path):
    assert run(["eval", "--model", str(tmp_path / "nope"), "--manifest", "x", "--out", "y"]) == EXIT_DATA


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_train_numeric_failure_exit_code(tmp_path):
    with chdir(tmp_path):
        assert run(["synth", "--out-dir", "img", "--count", "4", "--size", "16", "--quiet"]) == 0
        assert run(["ingest", "--image-dir", "img", "--labels", "img/labels.csv", "--out", "m.jsonl",
                    "--quiet"]) == 0
        code = run(["train", "--manifest", "m.jsonl", "--folds", "2", "--input-size", "16",
                    "--max-iters", "3", "--batch", "2", "--lr", "1e30", "--out", "m.bwvnet", "--quiet"])
    assert code == EXIT_NUMERIC


def test_train_folds_1_needs_splits(tmp_path):
    with chdir(tmp_path):
        run(["synth", "--out-dir", "img", "--count", "4", "--size", "16", "--quiet"])
        run(["ingest", "--image-dir", "img", "--labels", "img/labels.csv", "--out", "m.jsonl", "--quiet"])
        assert run(["train", "--manifest", "m.jsonl", "--folds", "1", "--out", "x", "--quiet"]) == EXIT_DATA


# -- the smoke pipeline --------------------------------------------------------------------


def test_pipeline_annotations_agree_with_labels(pipeline_dir):
    with chdir(pipeline_dir):
        ann = DatasetManifest.from_jsonl("annotations.jsonl")
        ref = DatasetManifest.from_jsonl("manifest.jsonl")
        assert [e.label for e in ann] == [e.label for e in ref]
        report = open("report.txt").read().splitlines()
        assert report[0] == "TP=6 FP=0 FN=0 TN=6"


def test_pipeline_overlays_written(pipeline_dir):
    overlay = read_image(pipeline_dir / "overlay" / "img0000.png")
    assert overlay.shape == (48, 48, 3)
    assert (overlay == (255, 0, 0)).all(axis=2).any()


def test_pipeline_augment_and_split(pipeline_dir):
    with chdir(pipeline_dir):
        man = DatasetManifest.from_jsonl("split.jsonl")
        assert len(man) == 6 * 12 + 6
        groups = {}
        for e in man:
            groups.setdefault(e.group, set()).add(e.split)
        assert all(len(s) == 1 for s in groups.values())
        assert {e.split for e in man} == {"train", "val", "test"}


def test_pipeline_model_and_history(pipeline_dir):
    net = model_io.load(pipeline_dir / "model.bwvnet")
    assert net.spec.input_size == 32 and net.activation == "prelu"
    rows = list(csv.DictReader(open(pipeline_dir / "history.csv")))
    assert [r["iteration"] for r in rows] == ["1", "2", "3"]


def test_pipeline_eval_csv(pipeline_dir):
    rows = list(csv.DictReader(open(pipeline_dir / "eval.csv")))
    assert len(rows) == 1
    row = rows[0]
    assert row["model"] == "model.bwvnet" and row["activation"] == "prelu"
    n = int(row["n"])
    assert n == sum(int(row[k]) for k in ("tp", "fp", "fn", "tn"))
    assert 0 <= float(row["AUC"]) <= 100


def test_pipeline_explain_outputs(pipeline_dir):
    heat = read_image(pipeline_dir / "heatmap.png")
    mask = read_image(pipeline_dir / "mask.png")
    assert heat.shape == mask.shape == (32, 32, 3)
    info = json.load(open(pipeline_dir / "heatmap.json"))
    assert info["grid"] == [4, 4] and len(info["importance"]) == 16
    # the top-4 cells survive, everything else is black
    assert 0 < mask.any(axis=2).mean() <= 4 / 16 + 1e-9


def test_explain_with_saved_model(tmp_path):
    model_io.save(build(input_size=16), tmp_path / "m.bwvnet")
    write_png(tmp_path / "x.png", np.full((20, 20, 3), 90, np.uint8))
    assert run(["explain", "--model", str(tmp_path / "m.bwvnet"), "--image", str(tmp_path / "x.png"),
                "--features", "4", "--samples", "20", "--class", "nonbwv",
                "--out-heatmap", str(tmp_path / "h.png"), "--out-mask", str(tmp_path / "k.png"),
                "--quiet"]) == EXIT_OK
    assert json.load(open(tmp_path / "h.json"))["class"] == "nonbwv"
