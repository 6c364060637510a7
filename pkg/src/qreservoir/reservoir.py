"""Reservoir hooks and the Static / Incremental processing schemes.

A reservoir is described by three construction hooks that write to a
:class:`~qreservoir.circuit.CircuitBuilder`:

``before(circuit)``
    runs once on the fresh ``|0...0>`` register;
``during(circuit, timestep)``
    runs once per series element, receiving the raw element;
``after(circuit)``
    runs once at the end.

The Static scheme builds one circuit for the whole series and expects
measurements inside ``during``; row ``t`` of its features is the shot average
of the clbits measured in block ``t``.  The Incremental scheme builds one
circuit per timestep over the last ``memory`` elements and reads the
measurements made in ``after``.
"""
from __future__ import annotations

import csv
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from .circuit import MEASURE, Circuit, CircuitBuilder
from .errors import DecodeError, SchemeError, ValidationError
from .executor import TrajectoryRun, execute
from .rng import derive_seed

STATIC = "static"
INCREMENTAL = "incremental"
MARGINAL = "marginal"
DISTRIBUTION = "distribution"


def _noop(circuit, *args) -> None:
    return None


@dataclass
class Hooks:
    """Hook bundle for callers who prefer plain functions over subclassing."""

    n_qubits: int
    during: Callable[[CircuitBuilder, Any], None]
    before: Callable[[CircuitBuilder], None] = _noop
    after: Callable[[CircuitBuilder], None] = _noop


@dataclass
class FeatureMatrix:
    """Decoded reservoir output, one row per timestep.

    ``counts / shots`` gives ``values`` exactly; ``counts`` is kept so callers
    can check that entries are true shot frequencies.
    """

    counts: np.ndarray
    shots: int
    scheme: str

    @property
    def values(self) -> np.ndarray:
        return self.counts / self.shots

    @property
    def shape(self) -> tuple[int, int]:
        return self.counts.shape

    def __array__(self, dtype=None, copy=None):
        v = self.values
        return v if dtype is None else v.astype(dtype)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t"] + [f"f{i}" for i in range(self.shape[1])])
            for t, row in enumerate(self.values):
                w.writerow([t, *(repr(float(v)) for v in row)])


@dataclass
class PredictionRun:
    predictions: list
    outputs: list = field(default_factory=list)
    features: list = field(default_factory=list)

    @property
    def num_pred(self) -> int:
        return len(self.predictions)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["step", "value"])
            for i, v in enumerate(self.predictions):
                w.writerow([i, repr(v) if isinstance(v, float) else v])


@dataclass(frozen=True)
class SchemeParams:
    kind: str = STATIC
    memory: int | None = None
    feature_mode: str = MARGINAL

    def __post_init__(self):
        if self.kind not in (STATIC, INCREMENTAL):
            raise ValidationError(f"unknown scheme {self.kind!r}")
        if self.kind == INCREMENTAL and (self.memory is None or self.memory < 1):
            raise ValidationError(f"incremental scheme needs memory >= 1, got {self.memory}")
        if self.feature_mode not in (MARGINAL, DISTRIBUTION):
            raise ValidationError(f"unknown feature mode {self.feature_mode!r}")


def _series(series) -> list:
    values = list(series)
    if not values:
        raise ValidationError("series must not be empty")
    return values


def _measured(builder: CircuitBuilder, start: int) -> list[int]:
    out: list[int] = []
    for ins in builder.instructions[start:]:
        if ins.kind == MEASURE:
            out.extend(ins.clbits)
    return out


# ---------------------------------------------------------------------------
# Static

def _static_prefix(hooks, series: Sequence, builder: CircuitBuilder, first_tag: int = 0):
    """Append ``during`` blocks for ``series``; returns the clbits measured by each block."""
    blocks = []
    for offset, x in enumerate(series):
        start = len(builder.instructions)
        with builder.timestep(first_tag + offset):
            hooks.during(builder, x)
        blocks.append(_measured(builder, start))
    return blocks


def _check_static_blocks(blocks: list[list[int]]) -> int:
    widths = {len(b) for b in blocks}
    if widths == {0}:
        raise SchemeError("static scheme needs a measurement inside `during`")
    if len(widths) != 1:
        raise SchemeError(f"`during` wrote differing numbers of clbits across timesteps: {sorted(widths)}")
    return widths.pop()


def _build_static(hooks, series):
    builder = CircuitBuilder(hooks.n_qubits)
    hooks.before(builder)
    blocks = _static_prefix(hooks, series, builder)
    hooks.after(builder)
    return builder.build(), blocks


def build_static_circuit(hooks, series) -> Circuit:
    """``before``, one tagged ``during`` block per element, then ``after``."""
    circuit, blocks = _build_static(hooks, _series(series))
    _check_static_blocks(blocks)
    return circuit


def run_static(hooks, series, shots: int, seed: int = 0, noise: float | None = None, *, workers: int = 1) -> FeatureMatrix:
    circuit, blocks = _build_static(hooks, _series(series))
    _check_static_blocks(blocks)
    table = execute(circuit, shots, seed, noise, workers=workers)
    counts = np.array([table.counts[b] for b in blocks], dtype=np.int64)
    return FeatureMatrix(counts, shots, STATIC)


# ---------------------------------------------------------------------------
# Incremental

def _windows(n: int, memory: int) -> list[tuple[int, int]]:
    return [(max(0, t - memory + 1), t + 1) for t in range(n)]


def _build_window(hooks, series: Sequence, lo: int, hi: int):
    builder = CircuitBuilder(hooks.n_qubits)
    hooks.before(builder)
    for t in range(lo, hi):
        with builder.timestep(t):
            hooks.during(builder, series[t])
    start = len(builder.instructions)
    hooks.after(builder)
    return builder.build(), _measured(builder, start)


def build_incremental_circuits(hooks, series, memory: int) -> list[Circuit]:
    """One circuit per timestep ``t`` over elements ``max(0, t-memory+1) .. t``."""
    series = _series(series)
    if memory < 1:
        raise ValidationError(f"memory must be >= 1, got {memory}")
    return [_build_window(hooks, series, lo, hi)[0] for lo, hi in _windows(len(series), memory)]


def _window_row(hooks, series, t: int, memory: int, shots, seed, noise, feature_mode, workers) -> np.ndarray:
    lo = max(0, t - memory + 1)
    circuit, clbits = _build_window(hooks, series, lo, t + 1)
    if not clbits:
        raise SchemeError("incremental scheme needs a measurement inside `after`")
    wants_joint = feature_mode == DISTRIBUTION
    # the window seed depends only on t, so earlier inputs cannot leak in
    table = execute(circuit, shots, derive_seed(seed, t), noise, keep_raw=wants_joint, workers=workers)
    if wants_joint:
        return table.joint_counts(clbits)
    return table.counts[clbits]


def run_incremental(
    hooks,
    series,
    memory: int,
    shots: int,
    seed: int = 0,
    noise: float | None = None,
    feature_mode: str = MARGINAL,
    *,
    workers: int = 1,
) -> FeatureMatrix:
    """Row ``t``: per-clbit averages of the ``after`` measurements (``marginal``)
    or their full empirical outcome distribution (``distribution``)."""
    series = _series(series)
    SchemeParams(INCREMENTAL, memory, feature_mode)
    rows = [
        _window_row(hooks, series, t, memory, shots, seed, noise, feature_mode, workers)
        for t in range(len(series))
    ]
    if len({len(r) for r in rows}) != 1:
        raise SchemeError("`after` measured differing numbers of clbits across windows")
    return FeatureMatrix(np.array(rows, dtype=np.int64), shots, INCREMENTAL)


def run_scheme(hooks, scheme: SchemeParams, series, shots, seed=0, noise=None, *, workers=1) -> FeatureMatrix:
    if scheme.kind == STATIC:
        return run_static(hooks, series, shots, seed, noise, workers=workers)
    return run_incremental(hooks, series, scheme.memory, shots, seed, noise, scheme.feature_mode, workers=workers)


# ---------------------------------------------------------------------------
# closed-loop forecasting

def _default_decode(output):
    p = np.asarray(output, dtype=np.float64).reshape(-1)
    if p.size != 1 or not np.isfinite(p[0]):
        raise DecodeError(f"cannot decode model output {p} into a scalar")
    return float(p[0])


def _model_step(model, row: np.ndarray, decode) -> tuple[Any, np.ndarray]:
    out = np.asarray(model.predict(row[None, :]))
    out = out.reshape(-1) if out.ndim <= 1 else out[0]
    return decode(out), out


def predict(
    hooks,
    scheme: SchemeParams,
    model,
    from_series,
    num_pred: int,
    shots: int,
    seed: int = 0,
    noise: float | None = None,
    decode: Callable[[np.ndarray], Any] | None = None,
    *,
    workers: int = 1,
) -> PredictionRun:
    """Forecast ``num_pred`` steps by feeding each prediction back as input.

    Each step is the last feature row of the scheme run on the current
    series, with the same ``seed`` every time.  Because randomness is keyed
    per shot and event, the Static scheme extends one trajectory batch by a
    ``during`` block instead of re-simulating the prefix, and the Incremental
    scheme only simulates the final window; both give the rows a full re-run
    would.
    """
    series = _series(from_series)
    if num_pred < 1:
        raise ValidationError(f"num_pred must be >= 1, got {num_pred}")
    decode = decode or _default_decode
    result = PredictionRun([])

    if scheme.kind == STATIC:
        build_static_circuit(hooks, series)  # validates all three hooks once
        builder = CircuitBuilder(hooks.n_qubits)
        hooks.before(builder)
        blocks = _static_prefix(hooks, series, builder)
        run = TrajectoryRun(hooks.n_qubits, shots, seed, noise, workers)
        run.advance(builder.instructions)
        width = _check_static_blocks(blocks)

        def row_for(clbits):
            if len(clbits) != width:
                raise SchemeError("`during` wrote differing numbers of clbits across timesteps")
            return np.array([run.count(c) for c in clbits], dtype=np.int64)

        row = row_for(blocks[-1])
        for i in range(num_pred):
            value, out = _model_step(model, row / shots, decode)
            result.predictions.append(value)
            result.outputs.append(out)
            result.features.append(row / shots)
            series.append(value)
            if i + 1 < num_pred:
                start = len(builder.instructions)
                (clbits,) = _static_prefix(hooks, [value], builder, first_tag=len(series) - 1)
                builder.build()  # hooks may have emitted something invalid
                run.advance(builder.instructions[start:])
                row = row_for(clbits)
        return result

    for _ in range(num_pred):
        t = len(series) - 1
        row = _window_row(hooks, series, t, scheme.memory, shots, seed, noise, scheme.feature_mode, workers)
        value, out = _model_step(model, row / shots, decode)
        result.predictions.append(value)
        result.outputs.append(out)
        result.features.append(row / shots)
        series.append(value)
    return result


# ---------------------------------------------------------------------------
# class-based interface

class QReservoir(ABC):
    """Subclass and override the construction hooks; processing is the scheme's job."""

    def __init__(self, n_qubits: int, noise: float | None = None, workers: int = 1):
        self.n_qubits = n_qubits
        self.noise = noise
        self.workers = workers

    def before(self, circuit: CircuitBuilder) -> None:
        pass

    def during(self, circuit: CircuitBuilder, timestep) -> None:
        pass

    def after(self, circuit: CircuitBuilder) -> None:
        pass

    @abstractmethod
    def run(self, timeseries, shots: int, seed: int = 0) -> FeatureMatrix: ...

    @abstractmethod
    def predict(self, num_pred: int, model, from_series, shots: int, seed: int = 0, decode=None) -> PredictionRun: ...


class Static(QReservoir):
    scheme = SchemeParams(STATIC)

    def circuit(self, timeseries) -> Circuit:
        return build_static_circuit(self, timeseries)

    def run(self, timeseries, shots: int, seed: int = 0) -> FeatureMatrix:
        return run_static(self, timeseries, shots, seed, self.noise, workers=self.workers)

    def predict(self, num_pred, model, from_series, shots, seed=0, decode=None) -> PredictionRun:
        return predict(self, self.scheme, model, from_series, num_pred, shots, seed, self.noise, decode, workers=self.workers)


class Incremental(QReservoir):
    def __init__(self, n_qubits: int, memory: int, feature_mode: str = MARGINAL, noise=None, workers: int = 1):
        super().__init__(n_qubits, noise, workers)
        self.scheme = SchemeParams(INCREMENTAL, memory, feature_mode)

    @property
    def memory(self) -> int:
        return self.scheme.memory

    def circuits(self, timeseries) -> list[Circuit]:
        return build_incremental_circuits(self, timeseries, self.memory)

    def run(self, timeseries, shots: int, seed: int = 0) -> FeatureMatrix:
        return run_incremental(
            self, timeseries, self.memory, shots, seed, self.noise, self.scheme.feature_mode, workers=self.workers
        )

    def predict(self, num_pred, model, from_series, shots, seed=0, decode=None) -> PredictionRun:
        return predict(self, self.scheme, model, from_series, num_pred, shots, seed, self.noise, decode, workers=self.workers)
