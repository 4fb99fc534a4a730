import json

import pytest

from btrec import cli

SMALL = ["--set", "n_pois=12", "--set", "n_categories=4", "--set", "n_users=10",
         "--set", "trajs_per_user=6", "--set", "traj_len_range=3,5"]
TRAIN = ["--set", "d_model=16", "--set", "d_ff=32", "--set", "n_layers=1",
         "--set", "bootstrap_resamples=100", "--set", "max_len=64"]


def run(*argv):
    return cli.main([str(a) for a in argv])


def tree(path):
    return {p.relative_to(path).as_posix(): p.read_bytes()
            for p in sorted(path.rglob("*")) if p.is_file()}


@pytest.fixture(scope="module")
def pipeline_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    assert run("synth", "--seed", 7, "--out", out, *SMALL) == 0
    assert run("ingest", "--seed", 7, "--out", out, "--data", out) == 0
    assert run("split", "--seed", 7, "--out", out, "--data", out) == 0
    assert run("train", "--seed", 7, "--out", out, "--data", out, "--epochs", 3, *TRAIN) == 0
    assert run("evaluate", "--seed", 7, "--out", out, "--data", out, *TRAIN) == 0
    return out


def test_synth_twice_is_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run("synth", "--seed", 7, "--out", a, *SMALL) == 0
    assert run("synth", "--seed", 7, "--out", b, *SMALL) == 0
    assert tree(a) == tree(b)
    assert {"checkins.csv", "pois.csv", "profiles.csv", "manifest.txt"} <= set(tree(a))


def test_evaluate_without_model_is_a_data_error(tmp_path, capsys):
    out = tmp_path / "w"
    assert run("synth", "--seed", 7, "--out", out, *SMALL) == 0
    assert run("split", "--seed", 7, "--out", out, "--data", out) == 0
    capsys.readouterr()
    assert run("evaluate", "--seed", 7, "--out", out, "--data", out) == 3
    err = capsys.readouterr().err.strip().splitlines()
    assert len(err) == 1 and err[0].startswith("btrec: error=DataError")
    assert "model.bin" in err[0]


def test_missing_seed_and_bad_flags(tmp_path, capsys):
    assert run("synth", "--out", tmp_path) == 2
    assert run("frobnicate") == 2
    assert run("synth", "--seed", 1, "--out", tmp_path, "--set", "nonsense") == 2
    assert run("ingest", "--seed", 1, "--checkins", tmp_path / "nope.csv") == 3
    for line in capsys.readouterr().err.strip().splitlines():
        assert line.startswith("btrec: error=")


def test_pipeline_artifacts(pipeline_dir):
    names = set(tree(pipeline_dir))
    assert {"trajectories.tsv", "split.tsv", "corpus.txt", "vocab.tsv", "model.bin", "loss.tsv",
            "report.jsonl", "report.csv", "manifest.txt", "audit.tsv"} <= names
    summary = json.loads((pipeline_dir / "report.jsonl").read_text().splitlines()[-1])["summary"]
    assert summary["split"] == "test" and 0 <= summary["avg_f1"] <= 1
    manifest = (pipeline_dir / "manifest.txt").read_text()
    for command in ("synth", "ingest", "split", "train", "evaluate"):
        assert f"command\t{command}\n" in manifest


def test_test_split_is_used_once(pipeline_dir, capsys):
    capsys.readouterr()
    assert run("evaluate", "--seed", 7, "--out", pipeline_dir, "--data", pipeline_dir, *TRAIN) != 0
    assert "already used" in capsys.readouterr().err
    assert run("evaluate", "--seed", 7, "--out", pipeline_dir, "--data", pipeline_dir,
               "--split", "validation", *TRAIN) == 0


def test_recommend_prints_one_record(pipeline_dir, capsys):
    assert run("recommend", "--seed", 7, "--out", pipeline_dir, "--data", pipeline_dir,
               "--src", 1, "--dst", 2, "--budget-min", 300, *TRAIN) == 0
    rec = json.loads(capsys.readouterr().out.strip())
    assert [p["poi_id"] for p in rec["pois"]][0] == 1
    assert rec["pois"][-1]["poi_id"] == 2 and rec["total_est_minutes"] <= 300


def test_inputs_are_not_mutated(pipeline_dir):
    before = tree(pipeline_dir)
    run("split", "--seed", 7, "--out", pipeline_dir, "--data", pipeline_dir)
    after = tree(pipeline_dir)
    for name in ("checkins.csv", "pois.csv", "profiles.csv", "split.tsv"):
        assert before[name] == after[name]


def test_config_file_and_override(tmp_path):
    cfg = tmp_path / "run.ini"
    cfg.write_text("[world]\nseed = 3\nn_pois = 9\nn_categories = 3\nn_users = 4\n"
                   "trajs_per_user = 2\ntraj_len_range = 3,4\n")
    assert run("synth", "--config", cfg, "--out", tmp_path / "a") == 0
    assert run("synth", "--config", cfg, "--out", tmp_path / "b", "--set", "n_pois=10") == 0
    assert len((tmp_path / "a" / "pois.csv").read_text().splitlines()) == 10
    assert len((tmp_path / "b" / "pois.csv").read_text().splitlines()) == 11
