import math

import numpy as np
import pytest
import yaml

from qreservoir.cli import main
from qreservoir.config import load_config, parse_config
from qreservoir.errors import ConfigError, ExperimentError, ValidationError
from qreservoir.experiment import ARTIFACTS, dump_circuit, run_experiment
from qreservoir.readout import ReadoutModel
from qreservoir.reservoir import PredictionRun
from qreservoir.simcore import haar_random_unitary
from qreservoir.rng import RngStream
from qreservoir.tasks import binary_periodic, make_task, sine


def write_config(tmp_path, name="cfg.yaml", **items):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(items))
    return path


def small(**extra):
    base = dict(scheme="static", n_qubits=3, task="binary_periodic(2, 30)", shots=300, seed=1, num_pred=4)
    base.update(extra)
    return base


# tasks ---------------------------------------------------------------------

def test_binary_patterns():
    assert binary_periodic(2, 6) == [0, 1, 0, 1, 0, 1]
    assert binary_periodic(4, 8) == [0, 0, 1, 1, 0, 0, 1, 1]
    assert binary_periodic(3, 6) == [0, 1, 1, 0, 1, 1]
    with pytest.raises(ValidationError):
        binary_periodic(1, 4)


def test_sine_samples():
    xs = sine(4, 2, 4)
    np.testing.assert_allclose(xs, [0.5, 0.5 + 0.5 * math.sin(math.pi / 4), 1.0, 0.5 + 0.5 * math.sin(3 * math.pi / 4)])


def test_generated_tasks_extend_consistently():
    for text in ["binary_periodic(4, 10)", "sine(5, 10, 20)"]:
        task = make_task(text)
        assert task.series(task.length + 7)[: task.length] == task.series()


def test_file_task(tmp_path):
    (tmp_path / "s.txt").write_text("# header\n0 1 2\n1, 0\n")
    task = make_task("s.txt", tmp_path)
    assert task.series() == [0, 1, 2, 1, 0] and task.alphabet == [0, 1, 2]
    assert task.codec().n_qubits == 2
    (tmp_path / "r.txt").write_text("0.1\n0.5\n")
    assert not make_task("r.txt", tmp_path).discrete


def test_unknown_task():
    with pytest.raises(ValidationError):
        make_task("fibonacci(3)")


# config --------------------------------------------------------------------

def test_minimal_config_gets_defaults(tmp_path):
    cfg = load_config(write_config(tmp_path, scheme="static", n_qubits=4, task="binary_periodic(2, 100)"))
    assert (cfg.shots, cfg.scheme, cfg.noise, cfg.lam) == (10000, "static", "none", 1e-6)
    assert cfg.operator == "haar(4, 0)" and cfg.num_pred == 10 and cfg.train_fraction == 1.0


def test_memory_with_static_warns(tmp_path):
    with pytest.warns(UserWarning, match="memory"):
        cfg = load_config(write_config(tmp_path, **small(memory=2)))
    assert cfg.memory is None


def test_incremental_memory_default():
    assert parse_config(small(scheme="incremental")).memory == 3


@pytest.mark.parametrize(
    "override,key",
    [
        ({"shots": 0}, "shots"),
        ({"colour": "red"}, "colour"),
        ({"n_qubits": "four"}, "n_qubits"),
        ({"n_qubits": 99}, "n_qubits"),
        ({"train_fraction": 0}, "train_fraction"),
        ({"train_fraction": "lots"}, "train_fraction"),
        ({"num_pred": 0}, "num_pred"),
        ({"scheme": "dynamic"}, "scheme"),
        ({"scheme": "incremental", "memory": 0}, "memory"),
        ({"readout": {"lambda": -1}}, "readout.lambda"),
        ({"readout": {"alpha": 1}}, "readout"),
        ({"noise": "depolarizing(2)"}, "noise"),
        ({"noise": "amplitude(0.1)"}, "noise"),
        ({"operator": "haar(2, 0)"}, "operator"),
        ({"operator": "missing.npy"}, "operator"),
        ({"task": "sine(0, 1, 5)"}, "task"),
        ({"task": "missing.txt"}, "task"),
        ({"feature_mode": "distribution"}, "feature_mode"),
        ({"seed": True}, "seed"),
    ],
)
def test_config_errors_name_the_key(override, key):
    with pytest.raises(ConfigError, match=f"^{key}"):
        parse_config(small(**override))


def test_required_keys():
    with pytest.raises(ConfigError, match="^task"):
        parse_config({"n_qubits": 2})


def test_string_numbers_accepted():
    assert parse_config(small(readout={"lambda": "1e-3"})).lam == 1e-3
    assert parse_config(small(noise="depolarizing(0.01)")).noise_p == 0.01


def test_operator_matrix_files(tmp_path):
    u = haar_random_unitary(3, RngStream(2)).matrix
    np.save(tmp_path / "u.npy", u)
    np.savetxt(tmp_path / "u.txt", u)
    a = parse_config(small(operator="u.npy"), tmp_path)
    b = parse_config(small(operator="u.txt"), tmp_path)
    assert a.operator == "u.npy" and b.operator == "u.txt"
    np.save(tmp_path / "bad.npy", np.ones((8, 8)))
    with pytest.raises(ConfigError, match="^operator"):
        parse_config(small(operator="bad.npy"), tmp_path)


def test_resolved_config_round_trips(tmp_path):
    (tmp_path / "s.txt").write_text("0 1 " * 10)
    cfg = parse_config(small(task="s.txt"), tmp_path)
    again = parse_config(yaml.safe_load(cfg.dumps()), tmp_path / "elsewhere")
    assert again.resolved() == cfg.resolved()


# experiment ----------------------------------------------------------------

def test_run_writes_artifacts(tmp_path):
    cfg = parse_config(small())
    result = run_experiment(cfg, tmp_path / "out")
    assert sorted(p.name for p in (tmp_path / "out").iterdir()) == sorted(ARTIFACTS)
    assert len(result.predictions) == 4
    assert 0 <= result.metrics["accuracy"] <= 1 and result.metrics["mse"] >= 0
    pred = (tmp_path / "out" / "predictions.csv").read_text().splitlines()
    assert pred[0] == "step,value" and len(pred) == 5
    feats = (tmp_path / "out" / "features.csv").read_text().splitlines()
    assert feats[0] == "t,f0,f1,f2" and len(feats) == 31
    assert "t=0" in (tmp_path / "out" / "circuit.txt").read_text()
    metrics = (tmp_path / "out" / "metrics.txt").read_text()
    assert "mse: " in metrics and "accuracy: " in metrics


def test_runs_are_byte_identical(tmp_path):
    cfg = parse_config(small(noise="depolarizing(0.02)"))
    run_experiment(cfg, tmp_path / "a")
    run_experiment(cfg, tmp_path / "b", workers=3)
    for name in ARTIFACTS:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_incremental_sine_has_one_column_per_qubit(tmp_path):
    cfg = parse_config(dict(scheme="incremental", memory=3, n_qubits=3, task="sine(10, 20, 40)", shots=200, num_pred=3))
    result = run_experiment(cfg, tmp_path)
    assert result.features.shape == (40, 3)
    assert (tmp_path / "features.csv").read_text().startswith("t,f0,f1,f2\n")
    assert "accuracy" not in result.metrics


def test_distribution_features(tmp_path):
    cfg = parse_config(
        dict(scheme="incremental", memory=2, n_qubits=2, task="binary_periodic(2, 12)", shots=100,
             num_pred=2, feature_mode="distribution")
    )
    assert run_experiment(cfg, tmp_path).features.shape == (12, 4)


def test_model_never_sees_targets_past_training(tmp_path):
    (tmp_path / "a.txt").write_text("0 1 " * 10 + "1 1 1 1")
    (tmp_path / "b.txt").write_text("0 1 " * 10 + "0 0 0 0")
    base = small(train_fraction=20 / 24)
    ra = run_experiment(parse_config(dict(base, task="a.txt"), tmp_path), tmp_path / "oa")
    rb = run_experiment(parse_config(dict(base, task="b.txt"), tmp_path), tmp_path / "ob")
    assert ra.metrics["train_length"] == 20
    assert ra.predictions == rb.predictions
    assert ra.truth == [1, 1, 1, 1] and rb.truth == [0, 0, 0, 0]


def test_file_task_without_remaining_truth(tmp_path):
    (tmp_path / "s.txt").write_text("0 1 " * 10)
    result = run_experiment(parse_config(small(task="s.txt"), tmp_path), tmp_path / "o")
    assert result.metrics["evaluated"] == 0 and math.isnan(result.metrics["mse"])


def test_stage_error_removes_output(tmp_path, monkeypatch):
    def boom(self, X, y):
        raise np.linalg.LinAlgError("singular")

    monkeypatch.setattr(ReadoutModel, "fit", boom)
    with pytest.raises(ExperimentError, match=r"^\[readout\]") as info:
        run_experiment(parse_config(small()), tmp_path / "out")
    assert info.value.stage == "readout"
    assert not (tmp_path / "out").exists()


def test_write_error_removes_partial_files(tmp_path, monkeypatch):
    (tmp_path / "out").mkdir()
    (tmp_path / "out" / "keep.txt").write_text("mine")

    def boom(self, path):
        raise OSError("disk full")

    monkeypatch.setattr(PredictionRun, "write_csv", boom)
    with pytest.raises(ExperimentError, match=r"^\[write\]"):
        run_experiment(parse_config(small()), tmp_path / "out")
    assert [p.name for p in (tmp_path / "out").iterdir()] == ["keep.txt"]


def test_raw_shots(tmp_path):
    run_experiment(parse_config(small(shots=20)), tmp_path, raw_shots=True)
    lines = (tmp_path / "raw_shots.csv").read_text().splitlines()
    assert len(lines) == 21 and lines[0].startswith("shot,c0,")


def test_dump_static_has_three_blocks():
    text = dump_circuit(parse_config(small()), 3)
    header = text.splitlines()[0]
    assert header.split() == ["t=0", "t=1", "t=2"]


def test_dump_incremental_window():
    cfg = parse_config(small(scheme="incremental", memory=2))
    header = dump_circuit(cfg, 4).splitlines()[0]
    assert header.split() == ["t=2", "t=3"]


# command line --------------------------------------------------------------

def test_cli_version(capsys):
    assert main(["version"]) == 0
    assert capsys.readouterr().out.strip() == "0.1.0"


def test_cli_run_and_dump(tmp_path, capsys):
    path = write_config(tmp_path, **small())
    assert main(["run", str(path), "--out", str(tmp_path / "o")]) == 0
    assert "accuracy" in capsys.readouterr().out
    assert main(["dump-circuit", str(path), "--steps", "2"]) == 0
    assert capsys.readouterr().out.startswith("     t=0")


def test_cli_reports_named_error(tmp_path, capsys):
    path = write_config(tmp_path, **small(shots=0))
    assert main(["dump-circuit", str(path)]) == 1
    assert "shots" in capsys.readouterr().err
    assert main(["run", str(tmp_path / "nope.yaml")]) == 1
