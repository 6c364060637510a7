"""Experiment configuration: a flat YAML mapping, validated key by key."""
from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .errors import ConfigError, QRCError
from .reservoir import DISTRIBUTION, INCREMENTAL, MARGINAL, STATIC
from .simcore import MAX_HAAR_QUBITS, MAX_QUBITS, UnitaryMatrix
from .tasks import make_task, parse_call

DEFAULT_MEMORY = 3

KEYS = (
    "scheme", "n_qubits", "memory", "shots", "seed", "operator", "task",
    "train_fraction", "num_pred", "readout", "noise", "feature_mode",
)


@dataclass
class ExperimentConfig:
    n_qubits: int
    task: str
    scheme: str = STATIC
    memory: int | None = None
    shots: int = 10000
    seed: int = 0
    operator: str | None = None
    train_fraction: float = 1.0
    num_pred: int = 10
    readout: dict = field(default_factory=lambda: {"lambda": 1e-6})
    noise: str = "none"
    feature_mode: str = MARGINAL
    base_dir: Path = field(default=Path("."), repr=False, compare=False)

    @property
    def lam(self) -> float:
        return self.readout["lambda"]

    @property
    def noise_p(self) -> float | None:
        if self.noise == "none":
            return None
        return parse_call(self.noise)[1][0]

    def resolved(self) -> dict:
        """Every key with its effective value, ready to be written back out."""
        d = asdict(self)
        d.pop("base_dir")
        if self.scheme == STATIC:
            d.pop("memory")
        # file paths are made absolute so the written config works from anywhere
        for key in ("task", "operator"):
            if parse_call(d[key]) is None:
                d[key] = str((self.base_dir / d[key]).resolve())
        return {k: d[k] for k in KEYS if k in d}

    def dumps(self) -> str:
        return yaml.safe_dump(self.resolved(), sort_keys=False)


def _int(key, value, lo=None, hi=None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{key}: expected an integer, got {value!r}")
    if (lo is not None and value < lo) or (hi is not None and value > hi):
        bounds = f"[{lo}, {'inf' if hi is None else hi}]"
        raise ConfigError(f"{key}: {value} out of range {bounds}")
    return value


def _real(key, value) -> float:
    if isinstance(value, str):
        # YAML 1.1 reads `1e-6` as a string
        try:
            value = float(value)
        except ValueError:
            pass
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{key}: expected a number, got {value!r}")
    if not math.isfinite(value):
        raise ConfigError(f"{key}: must be finite, got {value}")
    return float(value)


def _choice(key, value, options) -> str:
    if value not in options:
        raise ConfigError(f"{key}: expected one of {', '.join(options)}, got {value!r}")
    return value


def _str(key, value) -> str:
    if not isinstance(value, str):
        raise ConfigError(f"{key}: expected a string, got {value!r}")
    return value


def _noise(value) -> str:
    if value is None or value == "none":
        return "none"
    call = parse_call(_str("noise", value))
    if call is None or call[0] != "depolarizing" or len(call[1]) != 1:
        raise ConfigError(f"noise: expected none or depolarizing(p), got {value!r}")
    p = _real("noise", call[1][0])
    if not 0 <= p <= 1:
        raise ConfigError(f"noise: p={p} out of range [0, 1]")
    return f"depolarizing({p!r})"


def _readout(value) -> dict:
    if not isinstance(value, dict) or set(value) != {"lambda"}:
        raise ConfigError(f"readout: expected a mapping with the single key lambda, got {value!r}")
    lam = _real("readout.lambda", value["lambda"])
    if lam < 0:
        raise ConfigError(f"readout.lambda: must be >= 0, got {lam}")
    return {"lambda": lam}


def _operator(value, n_qubits, seed, base_dir) -> str:
    if value is None:
        return f"haar({n_qubits}, {seed})"
    text = _str("operator", value)
    call = parse_call(text)
    if call is not None:
        name, args = call
        if name != "haar" or len(args) != 2:
            raise ConfigError(f"operator: expected haar(k, seed) or a matrix file, got {text!r}")
        k = _int("operator", args[0], 1, MAX_HAAR_QUBITS)
        _int("operator", args[1], 0)
        if k != n_qubits:
            raise ConfigError(f"operator: haar acts on {k} qubits but n_qubits is {n_qubits}")
        return f"haar({k}, {args[1]})"
    load_matrix(text, n_qubits, base_dir)
    return text


def load_matrix(path, n_qubits: int, base_dir=".") -> UnitaryMatrix:
    """A ``.npy`` array or a text file of complex entries, one matrix row per line."""
    full = Path(base_dir) / path
    if not full.is_file():
        raise ConfigError(f"operator: file not found: {full}")
    try:
        m = np.load(full) if full.suffix == ".npy" else np.loadtxt(full, dtype=complex, ndmin=2)
        u = UnitaryMatrix(m)
    except (QRCError, ValueError) as exc:
        raise ConfigError(f"operator: {full}: {exc}") from exc
    if u.k_qubits != n_qubits:
        raise ConfigError(f"operator: matrix acts on {u.k_qubits} qubits but n_qubits is {n_qubits}")
    return u


def parse_config(raw: dict, base_dir=".") -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config must be a key-value mapping")
    unknown = [k for k in raw if k not in KEYS]
    if unknown:
        raise ConfigError(f"{unknown[0]}: unknown key (allowed: {', '.join(KEYS)})")
    for key in ("n_qubits", "task"):
        if key not in raw:
            raise ConfigError(f"{key}: required key missing")

    n = _int("n_qubits", raw["n_qubits"], 1, MAX_QUBITS)
    scheme = _choice("scheme", raw.get("scheme", STATIC), (STATIC, INCREMENTAL))
    memory = raw.get("memory")
    if scheme == STATIC:
        if memory is not None:
            warnings.warn("memory: ignored by the static scheme", UserWarning, stacklevel=3)
        memory = None
    else:
        memory = _int("memory", DEFAULT_MEMORY if memory is None else memory, 1)
    seed = _int("seed", raw.get("seed", 0), 0)

    cfg = ExperimentConfig(
        n_qubits=n,
        task=_str("task", raw["task"]),
        scheme=scheme,
        memory=memory,
        shots=_int("shots", raw.get("shots", 10000), 1),
        seed=seed,
        operator=_operator(raw.get("operator"), n, seed, base_dir),
        train_fraction=_real("train_fraction", raw.get("train_fraction", 1.0)),
        num_pred=_int("num_pred", raw.get("num_pred", 10), 1),
        readout=_readout(raw.get("readout", {"lambda": 1e-6})),
        noise=_noise(raw.get("noise", "none")),
        feature_mode=_choice("feature_mode", raw.get("feature_mode", MARGINAL), (MARGINAL, DISTRIBUTION)),
        base_dir=Path(base_dir),
    )
    if not 0 < cfg.train_fraction <= 1:
        raise ConfigError(f"train_fraction: {cfg.train_fraction} out of range (0, 1]")
    if cfg.scheme == STATIC and cfg.feature_mode != MARGINAL:
        raise ConfigError("feature_mode: distribution features need the incremental scheme")
    try:
        task = make_task(cfg.task, base_dir)
    except QRCError as exc:
        raise ConfigError(f"task: {exc}") from exc
    if task.codec().n_qubits > n:
        raise ConfigError(f"task: encoding needs {task.codec().n_qubits} qubits but n_qubits is {n}")
    if int(cfg.train_fraction * task.length) < 2:
        raise ConfigError("train_fraction: training prefix must hold at least 2 elements")
    return cfg


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: not valid YAML: {exc}") from exc
    return parse_config(raw, path.parent)
