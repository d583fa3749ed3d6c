import json

import pytest

from sga.cli import RunConfig, main

TINY = ["--synthetic", "--nodes", "40", "--density", "0.2", "--dim", "4", "--epochs", "8"]


@pytest.fixture
def snap_file(tmp_path):
    p = tmp_path / "soc-sign-bitcoinalpha.csv"
    rows = [f"{i},{i + 1},{(-3 if i % 4 == 0 else 5)},{i}" for i in range(1, 30)]
    rows += [f"{i},{i + 2},2,{i}" for i in range(1, 28)]
    rows += ["2,1,-1,99", "1,2,-4,100"]
    p.write_text("\n".join(rows) + "\n")
    return p


def test_stats_on_snap_file(snap_file, tmp_path, capsys):
    out = tmp_path / "o"
    assert main(["stats", "--dataset", str(snap_file), "--out", str(out)]) == 0
    text = capsys.readouterr().out
    assert "links: 58" in text
    assert "positive links: 49" in text
    assert "negative links: 9" in text
    doc = json.loads((out / "stats.json").read_text())
    assert doc["stats"]["positive_records"] == 49
    assert doc["config"]["dataset"] == str(snap_file)
    assert (out / "id_map.json").exists() and (out / "run_config.json").exists()


def test_augment_writes_edge_lists(tmp_path):
    out = tmp_path / "a"
    assert main(["augment", *TINY, "--out", str(out), "--eps-add-pos", "0.5", "--eps-add-neg", "0.5"]) == 0
    for name in ("train.csv", "test.csv", "augmented.csv", "augmentation.json"):
        assert (out / name).exists()
    rep = json.loads((out / "augmentation.json").read_text())
    assert rep["config"]["eps_add_pos"] == 0.5
    test_pairs = {tuple(l.split(",")[:2]) for l in (out / "test.csv").read_text().splitlines() if l[0] != "#"}
    aug_pairs = {tuple(l.split(",")[:2]) for l in (out / "augmented.csv").read_text().splitlines() if l[0] != "#"}
    assert not test_pairs & aug_pairs


def test_train_with_curriculum(tmp_path):
    out = tmp_path / "t"
    assert main(["train", *TINY, "--curriculum", "--lambda0", "0.5", "--T", "4", "--out", str(out)]) == 0
    lines = (out / "difficulty.csv").read_text().splitlines()
    assert lines[0] == "u,v,sign,score"
    metrics = json.loads((out / "metrics.json").read_text())
    assert metrics["subset_sizes"][0] < metrics["subset_sizes"][-1]
    assert json.loads((out / "checkpoint.json").read_text())["format"] == "sga-checkpoint"


def test_evaluate_and_ablate(tmp_path):
    out = tmp_path / "e"
    assert main(["evaluate", *TINY, "--seeds", "0", "1", "--out", str(out)]) == 0
    doc = json.loads((out / "metrics.json").read_text())
    assert len(doc["runs"]) == 2
    assert main(["ablate", *TINY, "--seeds", "0", "--arms", "base", "+TP", "--out", str(out)]) == 0
    rows = (out / "metrics.csv").read_text().splitlines()
    assert rows[0] == "seed,arm,auc,f1_binary,f1_micro,f1_macro"
    assert [r.split(",")[1] for r in rows[1:]] == ["base", "+TP"]


def test_baseline_random(tmp_path):
    out = tmp_path / "b"
    argv = ["baseline-random", *TINY, "--seeds", "0", "--modes", "rand-flip", "rand-neg",
            "--ratios", "0.1", "--directions", "add", "--out", str(out)]
    assert main(argv) == 0
    res = json.loads((out / "baselines.json").read_text())["results"]
    assert [(r["mode"], r["ratio"]) for r in res] == [("none", 0.0), ("rand-flip", 0.1), ("rand-neg", 0.1)]


def test_config_file_with_flag_override(tmp_path):
    out = tmp_path / "c"
    assert main(["stats", *TINY, "--out", str(out)]) == 0
    saved = out / "run_config.json"
    cfg = json.loads(saved.read_text())["config"]
    (tmp_path / "cfg.json").write_text(json.dumps(cfg))
    assert main(["stats", "--config", str(tmp_path / "cfg.json"), "--nodes", "50", "--out", str(out)]) == 0
    again = RunConfig.from_dict(json.loads(saved.read_text())["config"])
    assert again.synthetic.num_nodes == 50
    assert again.synthetic.edge_density == 0.2


def test_missing_source_is_config_error(tmp_path, capsys):
    assert main(["stats", "--out", str(tmp_path)]) == 2
    assert "config error" in capsys.readouterr().err


def test_missing_dataset_file(tmp_path, capsys):
    assert main(["stats", "--dataset", str(tmp_path / "nope.csv"), "--out", str(tmp_path)]) == 2
    assert "not found" in capsys.readouterr().err


def test_invalid_hyperparameter(tmp_path):
    assert main(["train", *TINY, "--lambda0", "0", "--out", str(tmp_path)]) == 2
    assert main(["augment", *TINY, "--eps-add-pos", "2", "--out", str(tmp_path)]) == 2


def test_malformed_dataset_exit_code(tmp_path, capsys):
    p = tmp_path / "bad.csv"
    p.write_text("0,1,1\nfoo\n")
    assert main(["stats", "--dataset", str(p), "--out", str(tmp_path)]) == 1
    assert "bad.csv:2" in capsys.readouterr().err


def test_unknown_command_exits():
    with pytest.raises(SystemExit):
        main(["frobnicate"])
