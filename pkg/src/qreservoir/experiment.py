"""End-to-end experiment: series -> reservoir features -> readout -> forecast -> files."""
from __future__ import annotations

import math
import os
import shutil
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import ExperimentConfig, load_matrix
from .errors import ExperimentError, QRCError
from .executor import execute
from .readout import ReadoutModel, accuracy, mse
from .reservoir import STATIC, Incremental, Static
from .rng import RngStream
from .simcore import UnitaryMatrix, haar_random_unitary
from .tasks import Task, make_task, parse_call

ARTIFACTS = ("features.csv", "predictions.csv", "metrics.txt", "circuit.txt", "config.yaml")


class StaticReservoir(Static):
    """Each step reads the register, then writes the new input.

    ``during`` applies the operator to every qubit, measures all of them, and
    only then prepares the encoded input on the codec qubits, so row ``t``
    reflects the inputs before ``x_t``.
    """

    def __init__(self, operator: UnitaryMatrix, codec, noise=None, workers=1):
        super().__init__(operator.k_qubits, noise, workers)
        self.operator = operator
        self.codec = codec

    def during(self, circuit, x):
        circuit.append(self.operator, circuit.qubits)
        circuit.measure_all()
        circuit.initialize(self.codec.encode(x), list(range(self.codec.n_qubits)))


class IncrementalReservoir(Incremental):
    """Uniform superposition, then encode-and-scramble per step, measure all at the end."""

    def __init__(self, operator: UnitaryMatrix, codec, memory, feature_mode, noise=None, workers=1):
        super().__init__(operator.k_qubits, memory, feature_mode, noise, workers)
        self.operator = operator
        self.codec = codec

    def before(self, circuit):
        for q in circuit.qubits:
            circuit.h(q)

    def during(self, circuit, x):
        circuit.initialize(self.codec.encode(x), list(range(self.codec.n_qubits)))
        circuit.append(self.operator, circuit.qubits)

    def after(self, circuit):
        circuit.measure_all()


def build_operator(cfg: ExperimentConfig) -> UnitaryMatrix:
    call = parse_call(cfg.operator)
    if call is None:
        return load_matrix(cfg.operator, cfg.n_qubits, cfg.base_dir)
    k, seed = call[1]
    return haar_random_unitary(k, RngStream(seed))


def build_reservoir(cfg: ExperimentConfig, task: Task, workers: int = 1):
    op, codec = build_operator(cfg), task.codec()
    if cfg.scheme == STATIC:
        return StaticReservoir(op, codec, cfg.noise_p, workers)
    return IncrementalReservoir(op, codec, cfg.memory, cfg.feature_mode, cfg.noise_p, workers)


@dataclass
class ExperimentResult:
    metrics: dict
    features: np.ndarray
    predictions: list
    truth: list


def _train_length(cfg: ExperimentConfig, task: Task) -> int:
    return int(cfg.train_fraction * task.length)


class _Stage:
    """Re-raise anything thrown inside the block as an ExperimentError labelled ``name``."""

    def __init__(self, name: str):
        self.name = name

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc is None or isinstance(exc, (ExperimentError, KeyboardInterrupt)):
            return False
        raise ExperimentError(self.name, exc) from exc


def _fmt(v) -> str:
    return repr(float(v)) if isinstance(v, (float, np.floating)) else str(v)


def _write_metrics(path: Path, metrics: dict) -> None:
    path.write_text("".join(f"{k}: {_fmt(v)}\n" for k, v in metrics.items()))


def run_experiment(cfg: ExperimentConfig, output_dir, *, workers: int = 1, raw_shots: bool = False) -> ExperimentResult:
    """Run the whole pipeline and write its artifacts to ``output_dir``.

    The readout is fitted on pairs ``(features_t, x_{t+1})`` from the training
    prefix only; forecasts feed each prediction back as the next input.  On
    failure nothing is left behind in ``output_dir``.
    """
    output_dir = Path(output_dir)
    with _Stage("task"):
        task = make_task(cfg.task, cfg.base_dir)
        n_train = _train_length(cfg, task)
        series = task.series(n_train)
        truth = task.series(n_train + cfg.num_pred)[n_train:]
        codec = task.codec()
    with _Stage("reservoir"):
        res = build_reservoir(cfg, task, workers)
        circuit = res.circuit(series) if cfg.scheme == STATIC else res.circuits(series[:1])[0]
        features = res.run(series, cfg.shots, cfg.seed)
    with _Stage("readout"):
        model = ReadoutModel(cfg.lam).fit(features.values[:-1], codec.targets(series[1:]))
    with _Stage("predict"):
        run = res.predict(cfg.num_pred, model, series, cfg.shots, cfg.seed, decode=codec.decode)
    with _Stage("metrics"):
        metrics = {"train_length": n_train, "num_pred": cfg.num_pred, "evaluated": len(truth)}
        if truth:
            got = run.predictions[: len(truth)]
            metrics["mse"] = mse(np.asarray(truth, dtype=float), np.asarray(got, dtype=float))
            if task.discrete:
                metrics["accuracy"] = accuracy(truth, got)
        else:
            metrics["mse"] = math.nan
    with _Stage("write"):
        created = not output_dir.exists()
        output_dir.mkdir(parents=True, exist_ok=True)
        staging = Path(tempfile.mkdtemp(prefix=".staging-", dir=output_dir))
        moved: list[Path] = []
        try:
            features.write_csv(staging / "features.csv")
            run.write_csv(staging / "predictions.csv")
            _write_metrics(staging / "metrics.txt", metrics)
            (staging / "circuit.txt").write_text(circuit.render())
            (staging / "config.yaml").write_text(cfg.dumps())
            if raw_shots:
                if cfg.scheme != STATIC:
                    raise QRCError("raw shot dumps are only available for the static scheme")
                table = execute(circuit, cfg.shots, cfg.seed, cfg.noise_p, keep_raw=True, workers=workers)
                table.write_csv(staging / "raw_shots.csv")
            for f in sorted(staging.iterdir()):
                os.replace(f, output_dir / f.name)
                moved.append(output_dir / f.name)
        except BaseException:
            for f in moved:
                f.unlink(missing_ok=True)
            shutil.rmtree(staging, ignore_errors=True)
            if created:
                shutil.rmtree(output_dir, ignore_errors=True)
            raise
        staging.rmdir()
    return ExperimentResult(metrics, features.values, run.predictions, truth)


def dump_circuit(cfg: ExperimentConfig, steps: int = 3) -> str:
    """Render the circuit for the first ``steps`` elements of the series.

    Static: the single circuit with ``steps`` blocks.  Incremental: the window
    circuit ending at ``t = steps - 1``.
    """
    if steps < 1:
        raise ValueError(f"steps must be >= 1, got {steps}")
    task = make_task(cfg.task, cfg.base_dir)
    series = task.series(steps)
    if len(series) < steps:
        raise ValueError(f"series has only {len(series)} elements, asked for {steps}")
    res = build_reservoir(cfg, task)
    if cfg.scheme == STATIC:
        return res.circuit(series).render()
    return res.circuits(series)[-1].render()
