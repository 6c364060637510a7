"""Input series for experiments: generated sequences or a series read from disk."""
from __future__ import annotations

import ast
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .codec import AngleCodec, SymbolCodec
from .errors import ValidationError

_CALL = re.compile(r"^\s*([A-Za-z_]\w*)\s*\((.*)\)\s*$", re.S)


def parse_call(text: str) -> tuple[str, tuple] | None:
    """``"name(1, 2.5)"`` -> ``("name", (1, 2.5))``; ``None`` if ``text`` is not call-shaped."""
    m = _CALL.match(text)
    if not m:
        return None
    body = m.group(2).strip()
    try:
        args = ast.literal_eval(f"({body},)") if body else ()
    except (ValueError, SyntaxError) as exc:
        raise ValidationError(f"cannot parse arguments of {text!r}") from exc
    return m.group(1), args


def binary_periodic(period: int, length: int) -> list[int]:
    """Repeat ``period // 2`` zeros followed by the remaining ones.

    ``period=2`` alternates ``0101...``; ``period=4`` gives ``0011 0011 ...``.
    """
    if period < 2:
        raise ValidationError(f"period must be >= 2, got {period}")
    pattern = [0] * (period // 2) + [1] * (period - period // 2)
    return [pattern[i % period] for i in range(length)]


def sine(period: float, length: float, samples: int) -> list[float]:
    """``samples`` points of ``0.5 + 0.5 sin(2 pi tau / period)`` at ``tau = i * length / samples``.

    Values lie in ``[0, 1]`` so they can be angle-encoded directly.
    """
    if period <= 0 or length <= 0 or samples < 1:
        raise ValidationError("sine needs period > 0, length > 0 and samples >= 1")
    tau = np.arange(samples) * (length / samples)
    return [float(v) for v in 0.5 + 0.5 * np.sin(2 * np.pi * tau / period)]


def load_series(path) -> list:
    """Whitespace- or comma-separated numbers, ``#`` comments allowed.

    Integer-valued files are treated as symbol sequences.
    """
    text = Path(path).read_text()
    tokens = [t for line in text.splitlines() for t in re.split(r"[,\s]+", line.split("#", 1)[0]) if t]
    if not tokens:
        raise ValidationError(f"{path}: no values")
    try:
        values = [float(t) for t in tokens]
    except ValueError as exc:
        raise ValidationError(f"{path}: {exc}") from exc
    if not all(math.isfinite(v) for v in values):
        raise ValidationError(f"{path}: non-finite value")
    if all(v.is_integer() for v in values):
        return [int(v) for v in values]
    return values


@dataclass
class Task:
    """A named series.  ``series(n)`` returns the first ``n`` elements; generated
    tasks extend past their nominal length, file tasks cannot."""

    source: str
    length: int
    alphabet: list | None
    _make: object = field(repr=False)

    @property
    def discrete(self) -> bool:
        return self.alphabet is not None

    def series(self, n: int | None = None) -> list:
        return self._make(self.length if n is None else n)

    def codec(self):
        return SymbolCodec(self.alphabet) if self.discrete else AngleCodec()


def make_task(text: str, base_dir=".") -> Task:
    """Resolve ``binary_periodic(period, length)``, ``sine(period, length, samples)`` or a file path."""
    call = parse_call(text)
    if call is None:
        path = Path(base_dir) / text
        if not path.is_file():
            raise ValidationError(f"task file not found: {path}")
        values = load_series(path)
        alphabet = sorted(set(values)) if isinstance(values[0], int) else None
        return Task(str(text), len(values), alphabet, lambda n: values[:n])

    name, args = call
    if name == "binary_periodic":
        _want(name, args, 2, int)
        period, length = args
        binary_periodic(period, 1)
        _positive(name, "length", length)
        return Task(text, length, [0, 1], lambda n: binary_periodic(period, n))
    if name == "sine":
        _want(name, args, 3, (int, float))
        period, length, samples = args
        if not isinstance(samples, int):
            raise ValidationError("sine: samples must be an integer")
        sine(period, length, samples)
        step = length / samples
        # extending past `samples` keeps the same time step
        return Task(text, samples, None, lambda n: sine(period, step * n, n))
    raise ValidationError(f"unknown task {name!r}")


def _want(name, args, n, types):
    if len(args) != n or not all(isinstance(a, types) and not isinstance(a, bool) for a in args):
        raise ValidationError(f"{name} takes {n} numeric arguments, got {args}")


def _positive(name, what, value):
    if value < 1:
        raise ValidationError(f"{name}: {what} must be >= 1, got {value}")
