"""Encoders from series values to amplitudes and decoders from model outputs back to values."""
from __future__ import annotations

import math
import warnings
from typing import Any, Hashable, Sequence

import numpy as np

from .errors import DecodeError, ValidationError

ANGLE_SLACK = 1e-9


class Alphabet:
    """Ordered finite symbol set; symbol ``i`` is encoded as basis state ``|i>``."""

    def __init__(self, symbols: Sequence[Hashable]):
        symbols = tuple(symbols)
        if not symbols:
            raise ValidationError("alphabet must not be empty")
        if len(set(symbols)) != len(symbols):
            raise ValidationError(f"alphabet symbols must be distinct: {symbols}")
        self.symbols = symbols
        self.k_qubits = max(1, math.ceil(math.log2(len(symbols))))
        self._index = {s: i for i, s in enumerate(symbols)}

    def index(self, symbol) -> int:
        try:
            return self._index[symbol]
        except (KeyError, TypeError):
            raise ValidationError(f"symbol {symbol!r} not in alphabet {self.symbols}") from None

    def __len__(self) -> int:
        return len(self.symbols)

    def __contains__(self, symbol) -> bool:
        try:
            return symbol in self._index
        except TypeError:
            return False

    def __repr__(self) -> str:
        return f"Alphabet({list(self.symbols)!r})"


def encode_basis(symbol, alphabet: Alphabet) -> np.ndarray:
    amps = np.zeros(1 << alphabet.k_qubits, dtype=np.complex128)
    amps[alphabet.index(symbol)] = 1.0
    return amps


def encode_angle(x: float) -> np.ndarray:
    """``[cos(pi x / 2), sin(pi x / 2)]`` for ``x`` in [0, 1] (clamped)."""
    x = float(x)
    if not math.isfinite(x):
        raise ValidationError(f"cannot encode non-finite value {x}")
    if x < -ANGLE_SLACK or x > 1 + ANGLE_SLACK:
        warnings.warn(f"angle input {x} outside [0, 1]; clamped", RuntimeWarning, stacklevel=2)
    x = min(max(x, 0.0), 1.0)
    return np.array([math.cos(math.pi * x / 2), math.sin(math.pi * x / 2)], dtype=np.complex128)


def decode_symbol(prediction, alphabet: Alphabet):
    """Map a model output back to a symbol.

    A scalar is read as a symbol index and rounded to the nearest one; a
    vector of length ``len(alphabet)`` is read as one-hot scores.  Ties go to
    the lower index in both cases.
    """
    p = np.asarray(prediction, dtype=np.float64).reshape(-1)
    if not np.all(np.isfinite(p)):
        raise DecodeError(f"non-finite model output {p}")
    if p.size == 1:
        k = int(np.argmin(np.abs(np.arange(len(alphabet)) - p[0])))
    elif p.size == len(alphabet):
        k = int(np.argmax(p))
    else:
        raise DecodeError(f"model output of size {p.size} does not fit an alphabet of {len(alphabet)}")
    return alphabet.symbols[k]


class SymbolCodec:
    """Basis-state encoding of a discrete series.

    Training targets are the symbol index for alphabets of at most two symbols
    and one-hot vectors otherwise.
    """

    kind = "symbol"

    def __init__(self, alphabet: Alphabet | Sequence[Hashable]):
        self.alphabet = alphabet if isinstance(alphabet, Alphabet) else Alphabet(alphabet)

    @property
    def n_qubits(self) -> int:
        return self.alphabet.k_qubits

    def encode(self, value) -> np.ndarray:
        return encode_basis(value, self.alphabet)

    def target(self, value) -> np.ndarray:
        i = self.alphabet.index(value)
        if len(self.alphabet) <= 2:
            return np.array([float(i)])
        out = np.zeros(len(self.alphabet))
        out[i] = 1.0
        return out

    def targets(self, values) -> np.ndarray:
        return np.array([self.target(v) for v in values])

    def decode(self, prediction) -> Any:
        return decode_symbol(prediction, self.alphabet)


class AngleCodec:
    """Rotation encoding of a real series in [0, 1] on one qubit."""

    kind = "real"
    n_qubits = 1

    def encode(self, value) -> np.ndarray:
        return encode_angle(value)

    def target(self, value) -> np.ndarray:
        return np.array([float(value)])

    def targets(self, values) -> np.ndarray:
        return np.array([self.target(v) for v in values])

    def decode(self, prediction) -> float:
        p = np.asarray(prediction, dtype=np.float64).reshape(-1)
        if p.size != 1 or not np.isfinite(p[0]):
            raise DecodeError(f"expected one finite model output, got {p}")
        return float(min(max(p[0], 0.0), 1.0))
