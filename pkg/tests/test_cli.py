"""CLI subcommands: artifacts, exit codes, config precedence, determinism."""

import json

import pytest

from qsattn.cli import main
from qsattn.params import ParamStore

COMPLEXITY_GOLDENS = {
    ("iris", "basic"): (48, 88, 19),
    ("iris", "optimized"): (32, 72, 18),
    ("mc", "basic"): (96, 136, 22),
    ("mc", "optimized"): (64, 104, 20),
    ("rp", "basic"): (96, 136, 22),
    ("rp", "optimized"): (64, 104, 20),
}


@pytest.mark.parametrize("dataset,variant", sorted(COMPLEXITY_GOLDENS))
def test_complexity_command_goldens(dataset, variant, capsys):
    rc = main(["complexity", "--dataset", dataset, "--variant", variant,
               "--format", "json"])
    assert rc == 0
    report = json.loads(capsys.readouterr().out)
    qubits, gates, params = COMPLEXITY_GOLDENS[(dataset, variant)]
    assert report["qubits"] == qubits
    assert report["two_qubit_gates"] == gates
    assert report["trainable_params"] == params


def test_complexity_requires_flags(capsys):
    assert main(["complexity", "--dataset", "iris"]) == 2
    assert "error" in capsys.readouterr().err


def train_run(tmp_path, name, extra=()):
    out = tmp_path / name
    rc = main(["train", "--dataset", "iris", "--variant", "optimized",
               "--seed", "0", "--epochs", "2", "--out", str(out), *extra])
    assert rc == 0
    return out


def test_train_writes_artifacts(tmp_path, capsys):
    out = train_run(tmp_path, "run")
    assert (out / "params.txt").is_file()
    assert (out / "loss_curve.csv").is_file()
    manifest = json.loads((out / "manifest.json").read_text(encoding="utf-8"))
    assert manifest["dataset"] == "iris"
    assert manifest["config"]["epochs"] == 2
    assert manifest["complexity"]["qubits"] == 32
    assert 0.0 <= manifest["metrics"]["test_accuracy"] <= 1.0
    curve = (out / "loss_curve.csv").read_text(encoding="utf-8").splitlines()
    assert curve[0] == "epoch,train_loss,train_acc,dev_loss,dev_acc"
    assert len(curve) == 1 + 3  # header + epochs 0..2
    store = ParamStore.load(out / "params.txt")
    assert (store.dataset, store.variant, store.seed) == ("iris", "optimized", 0)


def test_train_reruns_are_byte_identical(tmp_path):
    a = train_run(tmp_path, "a")
    b = train_run(tmp_path, "b")
    assert (a / "params.txt").read_bytes() == (b / "params.txt").read_bytes()
    assert (a / "loss_curve.csv").read_bytes() == (b / "loss_curve.csv").read_bytes()


def test_train_requires_dataset(capsys):
    assert main(["train", "--epochs", "1"]) == 2


def test_train_rejects_bad_config_values(tmp_path, capsys):
    rc = main(["train", "--dataset", "iris", "--epochs", "1",
               "--lr", "-1", "--out", str(tmp_path / "x")])
    assert rc == 1


def test_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("dataset = iris\nepochs = 1\nvariant = basic\n",
                   encoding="utf-8")
    out = tmp_path / "cfgrun"
    # --epochs flag overrides the config file; dataset/variant come from it
    rc = main(["train", "--config", str(cfg), "--epochs", "2",
               "--out", str(out)])
    assert rc == 0
    manifest = json.loads((out / "manifest.json").read_text(encoding="utf-8"))
    assert manifest["variant"] == "basic"
    assert manifest["config"]["epochs"] == 2


def test_malformed_config_file(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("epochs\n", encoding="utf-8")
    assert main(["train", "--config", str(cfg)]) == 2


def test_eval_command(tmp_path, capsys):
    out = train_run(tmp_path, "run")
    capsys.readouterr()
    rc = main(["eval", "--dataset", "iris", "--params", str(out / "params.txt"),
               "--split", "test"])
    assert rc == 0
    lines = capsys.readouterr().out.splitlines()
    float(lines[0])  # headline accuracy in percent
    assert lines[1].startswith("sample 0: predicted ")
    assert len(lines) == 1 + 20  # iris test split


def test_eval_with_noise_and_csv_out(tmp_path, capsys):
    out = train_run(tmp_path, "run")
    csv_path = tmp_path / "eval.csv"
    rc = main(["eval", "--dataset", "iris", "--params", str(out / "params.txt"),
               "--noise", "bitflip", "--level", "0.01", "--out", str(csv_path)])
    assert rc == 0
    lines = csv_path.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "index,predicted,label"
    assert lines[-1].startswith("accuracy,")


def test_eval_noise_requires_level(tmp_path, capsys):
    out = train_run(tmp_path, "run")
    rc = main(["eval", "--dataset", "iris", "--params", str(out / "params.txt"),
               "--noise", "bitflip"])
    assert rc == 2


def test_eval_rejects_dataset_mismatch(tmp_path, capsys):
    out = train_run(tmp_path, "run")
    rc = main(["eval", "--dataset", "mc", "--params", str(out / "params.txt")])
    assert rc == 2


def test_eval_missing_params_file(tmp_path, capsys):
    rc = main(["eval", "--dataset", "iris", "--params", str(tmp_path / "no.txt")])
    assert rc == 1


def test_sweep_command(tmp_path, capsys):
    out = train_run(tmp_path, "run")
    sweep_csv = tmp_path / "sweep.csv"
    capsys.readouterr()
    rc = main(["sweep", "--params", f"iris={out / 'params.txt'}",
               "--channels", "bitflip", "--levels", "0.001,0.01",
               "--out", str(sweep_csv)])
    assert rc == 0
    lines = sweep_csv.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "channel,level,dataset,accuracy"
    assert lines[1].startswith("none,0,iris,")  # zero-noise baseline row
    assert [l.split(",")[:2] for l in lines[2:]] == [
        ["bitflip", "0.001"], ["bitflip", "0.01"]]
    assert capsys.readouterr().out == "\n".join(lines) + "\n"


def test_sweep_validates_inputs(tmp_path, capsys):
    out = train_run(tmp_path, "run")
    params = f"iris={out / 'params.txt'}"
    assert main(["sweep", "--params", params, "--channels", "solar"]) == 2
    assert main(["sweep", "--params", params, "--levels", "0.01,0.001"]) == 2
    assert main(["sweep", "--params", "irisnofile"]) == 2
    assert main(["sweep"]) == 2


def test_sweep_reruns_are_byte_identical(tmp_path, capsys):
    out = train_run(tmp_path, "run")
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for path in (a, b):
        rc = main(["sweep", "--params", f"iris={out / 'params.txt'}",
                   "--channels", "depolarizing", "--levels", "0.005",
                   "--out", str(path)])
        assert rc == 0
    assert a.read_bytes() == b.read_bytes()
