"""End-to-end checks of the metaemb command-line tool."""

import csv
import json
import os
import subprocess
from pathlib import Path

import pytest

BIN = os.environ.get("METAEMB_BIN", "metaemb")
DATA = Path(__file__).resolve().parent.parent / "data"
SRC_A = f"word2vec:{DATA / 'src_a.w2v.txt'}"
SRC_B = f"glove:{DATA / 'src_b.glove.txt'}"
QUICK = ["--epochs", "3", "--hidden", "8"]


def run(*args, cwd=None, env=None):
    return subprocess.run([BIN, *map(str, args)], capture_output=True, text=True, cwd=cwd, env=env)


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


@pytest.mark.parametrize("method", ["conc", "avg", "svd", "1ton", "caeme", "daeme", "tae", "mte"])
def test_train_every_method(tmp_path, method):
    r = run("train", "--method", method, "--source", SRC_A, "--source", SRC_B, *QUICK, "--output", tmp_path / "m")
    assert r.returncode == 0, r.stderr
    header = (tmp_path / "m.txt").read_text().splitlines()[0].split()
    assert int(header[0]) == 55
    manifest = json.loads((tmp_path / "m.manifest.json").read_text())
    assert manifest["method_tag"].startswith(method)
    assert all(len(i["digest"]) == 40 for i in manifest["inputs"])


def test_train_mtl_leave_one_out(tmp_path):
    r = run("train", "--method", "mtl", "--source", SRC_A, "--source", SRC_B, *QUICK,
            "--dataset", DATA / "sim_a.tsv", "--dataset", DATA / "sim_b.tsv", "--dataset", DATA / "sim_c.tsv",
            "--held-out", "all", "--jobs", "2", "--output", tmp_path / "loo")
    assert r.returncode == 0, r.stderr
    for name in ("sim_a", "sim_b", "sim_c"):
        assert (tmp_path / f"loo.{name}.txt").exists()
        assert (tmp_path / f"loo.{name}.manifest.json").exists()


def test_caeme_manifest_records_epoch_losses(tmp_path):
    r = run("train", "--method", "caeme", "--recon-loss", "scp", "--source", SRC_A, "--source", SRC_B,
            "--epochs", "8", "--hidden", "16", "--output", tmp_path / "c")
    assert r.returncode == 0, r.stderr
    manifest = json.loads((tmp_path / "c.manifest.json").read_text())
    epochs = manifest["histories"][0]["epochs"]
    assert len(epochs) >= 1
    assert {"epoch", "train_loss", "validation_loss", "batch_loss"} <= set(epochs[0])


@pytest.mark.parametrize("method", ["caeme", "mtl"])
def test_rerun_is_byte_identical(tmp_path, method):
    extra = []
    if method == "mtl":
        extra = ["--dataset", DATA / "sim_a.tsv", "--dataset", DATA / "sim_b.tsv", "--held-out", "sim_b"]
    for out in ("one", "two"):
        r = run("train", "--method", method, "--source", SRC_A, "--source", SRC_B, *QUICK, *extra,
                "--output", tmp_path / out)
        assert r.returncode == 0, r.stderr
    assert (tmp_path / "one.txt").read_bytes() == (tmp_path / "two.txt").read_bytes()


def test_export_matches_train_output(tmp_path):
    r = run("train", "--method", "daeme", "--source", SRC_A, "--source", SRC_B, *QUICK, "--output", tmp_path / "d")
    assert r.returncode == 0, r.stderr
    r = run("export", "--checkpoint", tmp_path / "d.ckpt", "--output", tmp_path / "again.txt")
    assert r.returncode == 0, r.stderr
    assert (tmp_path / "again.txt").read_bytes() == (tmp_path / "d.txt").read_bytes()


def test_config_file_and_flag_override(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(f"method = svd\nsource = {SRC_A}\nsource = {SRC_B}\nmethod.k = 3\noutput = {tmp_path / 'cfg'}\n")
    r = run("train", "--config", cfg, "--k", "4")
    assert r.returncode == 0, r.stderr
    assert (tmp_path / "cfg.txt").read_text().splitlines()[0] == "55 4"


def test_planted_wordsim_and_analogy(tmp_path):
    r = run("eval", "--meta", DATA / "planted_meta.txt", "--wordsim", DATA / "planted_pairs.csv",
            "--output", tmp_path / "w")
    assert r.returncode == 0, r.stderr
    assert read_csv(tmp_path / "w.wordsim.csv")[0]["rho_s"] == "100.00"
    r = run("eval", "--meta", DATA / "offset_meta.txt", "--analogy", DATA / "offset_questions.txt",
            "--output", tmp_path / "a")
    assert r.returncode == 0, r.stderr
    assert read_csv(tmp_path / "a.analogy.csv")[0]["accuracy"] == "100.00"


def test_eval_batches_rows_over_meta_files(tmp_path):
    metas = []
    for method in ("conc", "avg", "svd"):
        r = run("train", "--method", method, "--source", SRC_A, "--source", SRC_B, "--k", "4",
                "--output", tmp_path / method)
        assert r.returncode == 0, r.stderr
        metas += ["--meta", tmp_path / f"{method}.txt"]
    r = run("eval", *metas, "--wordsim", DATA / "sim_a.tsv", "--wordsim", DATA / "sim_b.tsv",
            "--output", tmp_path / "grid")
    assert r.returncode == 0, r.stderr
    assert len(read_csv(tmp_path / "grid.wordsim.csv")) == 6


def test_gradcheck_default_passes_and_corruption_is_named():
    r = run("gradcheck")
    assert r.returncode == 0, r.stdout
    assert "recon/mae" in r.stdout and "mtl/brier/cosine" in r.stdout
    r = run("gradcheck", "--corrupt-gradient", "tower.layer1.W[0,0]")
    assert r.returncode == 3
    assert "tower.layer1.W[0,0]" in r.stdout
    assert run("gradcheck", "--hidden", "17").returncode == 1


def test_help_lists_defaults():
    out = run("train", "--help").stdout
    for default in ("200", "32", "50", "0.2", "13"):
        assert default in out


def test_unknown_flag_writes_nothing(tmp_path):
    r = run("train", "--method", "conc", "--source", SRC_A, "--source", SRC_B, "--bogus", "1",
            "--output", tmp_path / "x")
    assert r.returncode == 1
    assert list(tmp_path.iterdir()) == []


def test_missing_required_field_is_usage_error(tmp_path):
    r = run("train", "--method", "tae", "--source", SRC_A, "--output", tmp_path / "x")
    assert r.returncode == 1
    assert list(tmp_path.iterdir()) == []


def test_bad_input_is_data_error(tmp_path):
    bad = tmp_path / "bad.txt"
    bad.write_text("2 3\na 1 2 3\nb 1 2\n")
    r = run("train", "--method", "conc", "--source", f"word2vec:{bad}", "--source", SRC_B,
            "--output", tmp_path / "x")
    assert r.returncode == 2
    assert "bad.txt:3" in r.stderr
    assert not (tmp_path / "x.txt").exists()


def test_training_failure_leaves_no_partial_outputs(tmp_path):
    r = run("train", "--method", "caeme", "--recon-loss", "mse", "--lr", "1e200", "--source", SRC_A,
            "--source", SRC_B, *QUICK, "--output", tmp_path / "x")
    assert r.returncode == 3
    assert sorted(p.name for p in tmp_path.iterdir()) == []


def test_all_pairs_dropped_is_evaluation_error(tmp_path):
    r = run("eval", "--meta", DATA / "planted_meta.txt", "--analogy", DATA / "offset_questions.txt",
            "--output", tmp_path / "x")
    assert r.returncode == 4
    assert not any(tmp_path.iterdir())


def test_ingest_cache_is_reused(tmp_path):
    env = dict(os.environ, METAEMB_CACHE=str(tmp_path / "cache"))
    r = run("ingest", "--source", SRC_A, "--source", SRC_B, env=env)
    assert r.returncode == 0, r.stderr
    entries = list((tmp_path / "cache").iterdir())
    assert len(entries) == 1 and (entries[0] / "complete").exists()
    r = run("train", "--method", "conc", "--source", SRC_A, "--source", SRC_B, "--output", tmp_path / "c", env=env)
    assert r.returncode == 0, r.stderr
    assert len(list((tmp_path / "cache").iterdir())) == 1


def test_report_summarizes_manifests(tmp_path):
    for method in ("conc", "caeme"):
        assert run("train", "--method", method, "--source", SRC_A, "--source", SRC_B, *QUICK,
                   "--output", tmp_path / method).returncode == 0
    r = run("report", tmp_path / "conc.manifest.json", tmp_path / "caeme.manifest.json",
            "--output", tmp_path / "summary.csv")
    assert r.returncode == 0, r.stderr
    rows = read_csv(tmp_path / "summary.csv")
    assert [row["method"].split("/")[0].split("@")[0] for row in rows] == ["conc", "caeme"]
