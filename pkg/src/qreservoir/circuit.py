"""Circuit IR, the builder handed to reservoir hooks, validation and ASCII rendering."""
from __future__ import annotations

from contextlib import contextmanager
from dataclasses import dataclass
from typing import Any, Iterable, Sequence

import numpy as np

from . import simcore
from .errors import QubitIndexError, ValidationError

UNITARY = "unitary"
PREPARE = "prepare"
MEASURE = "measure"
NOISE = "noise"
KINDS = (UNITARY, PREPARE, MEASURE, NOISE)


@dataclass(frozen=True, eq=False)
class Instruction:
    """One circuit step.

    ``payload`` is the unitary matrix (``unitary``), the target amplitudes
    (``prepare``) or the depolarizing probability (``noise``); measurements
    carry none.  ``tag`` is the timestep label of the ``during`` block that
    emitted the instruction, if any.
    """

    kind: str
    qubits: tuple[int, ...]
    clbits: tuple[int, ...] = ()
    payload: Any = None
    tag: int | None = None
    label: str = ""

    def __eq__(self, other) -> bool:
        if not isinstance(other, Instruction):
            return NotImplemented
        same_payload = (
            self.payload is None and other.payload is None
            or (
                self.payload is not None
                and other.payload is not None
                and np.array_equal(np.asarray(self.payload), np.asarray(other.payload))
            )
        )
        return (
            self.kind == other.kind
            and self.qubits == other.qubits
            and self.clbits == other.clbits
            and self.tag == other.tag
            and self.label == other.label
            and same_payload
        )

    __hash__ = None


@dataclass(frozen=True)
class Circuit:
    n_qubits: int
    n_clbits: int
    instructions: tuple[Instruction, ...] = ()

    def validate(self) -> list[str]:
        return validate(self)

    def render(self) -> str:
        return render_text(self)

    def measure_clbits(self, tag: int | None = ...) -> list[int]:
        """Clbits written by measurements, in program order; optionally only those with ``tag``."""
        out: list[int] = []
        for ins in self.instructions:
            if ins.kind == MEASURE and (tag is ... or ins.tag == tag):
                out.extend(ins.clbits)
        return out

    def tags(self) -> list[int]:
        seen: dict[int, None] = {}
        for ins in self.instructions:
            if ins.tag is not None:
                seen.setdefault(ins.tag)
        return list(seen)


def validate(circuit: Circuit) -> list[str]:
    """Return every rule violation found in ``circuit`` (empty list means valid)."""
    problems: list[str] = []
    written: dict[int, int] = {}
    for pos, ins in enumerate(circuit.instructions):
        where = f"instruction {pos} ({ins.kind})"
        if ins.kind not in KINDS:
            problems.append(f"{where}: unknown kind")
            continue
        if len(set(ins.qubits)) != len(ins.qubits):
            problems.append(f"{where}: duplicate qubit in {list(ins.qubits)}")
        for q in ins.qubits:
            if not 0 <= q < circuit.n_qubits:
                problems.append(f"{where}: qubit {q} out of range for {circuit.n_qubits} qubits")
        if not ins.qubits:
            problems.append(f"{where}: no qubits")
        if ins.kind == MEASURE:
            if len(ins.clbits) != len(ins.qubits):
                problems.append(f"{where}: {len(ins.qubits)} qubits but {len(ins.clbits)} clbits")
            for c in ins.clbits:
                if not 0 <= c < circuit.n_clbits:
                    problems.append(f"{where}: clbit {c} out of range for {circuit.n_clbits} clbits")
                elif c in written:
                    problems.append(f"{where}: clbit {c} already written by instruction {written[c]}")
                else:
                    written[c] = pos
        elif ins.clbits:
            problems.append(f"{where}: only measurements may write clbits")
        if ins.kind == UNITARY:
            m = np.asarray(ins.payload)
            if m.ndim != 2 or m.shape != (1 << len(ins.qubits),) * 2:
                problems.append(f"{where}: matrix shape {m.shape} does not match {len(ins.qubits)} qubits")
            elif simcore.unitarity_error(m) > simcore.UNITARY_ATOL:
                problems.append(f"{where}: matrix is not unitary")
        elif ins.kind == PREPARE:
            v = np.asarray(ins.payload, dtype=np.complex128).reshape(-1)
            if v.shape[0] != 1 << len(ins.qubits):
                problems.append(f"{where}: {v.shape[0]} amplitudes for {len(ins.qubits)} qubits")
            elif abs(np.linalg.norm(v) - 1.0) > simcore.NORM_ATOL:
                problems.append(f"{where}: amplitudes not normalised")
        elif ins.kind == NOISE:
            p = ins.payload
            if not isinstance(p, (int, float)) or not 0.0 <= p <= 1.0:
                problems.append(f"{where}: noise probability {p!r} outside [0, 1]")
    return problems


def _targets(targets: int | Iterable[int]) -> list[int]:
    if isinstance(targets, (int, np.integer)):
        return [int(targets)]
    return [int(t) for t in targets]


class CircuitBuilder:
    """Append-only circuit construction; the object reservoir hooks write to.

    Single-qubit gate methods accept one index or a list and emit one
    instruction per qubit.  ``measure`` without explicit clbits allocates fresh
    ones, so a circuit never writes the same classical bit twice.
    """

    def __init__(self, n_qubits: int, n_clbits: int = 0):
        simcore._check_register(n_qubits)
        self.n_qubits = n_qubits
        self.n_clbits = n_clbits
        self._instructions: list[Instruction] = []
        self._written: set[int] = set()
        self._tag: int | None = None

    @property
    def qubits(self) -> list[int]:
        return list(range(self.n_qubits))

    @property
    def instructions(self) -> tuple[Instruction, ...]:
        return tuple(self._instructions)

    @contextmanager
    def timestep(self, tag: int):
        """Tag everything appended inside the block with ``tag``."""
        previous, self._tag = self._tag, tag
        try:
            yield self
        finally:
            self._tag = previous

    def _push(self, kind, qubits, clbits=(), payload=None, label="") -> "CircuitBuilder":
        self._instructions.append(
            Instruction(kind, tuple(qubits), tuple(clbits), payload, self._tag, label)
        )
        return self

    # -- unitaries ---------------------------------------------------------

    def add_unitary(self, u, targets: Sequence[int], label: str = "U") -> "CircuitBuilder":
        u = u if isinstance(u, simcore.UnitaryMatrix) else simcore.UnitaryMatrix(u)
        targets = simcore.check_qubits(_targets(targets), self.n_qubits)
        if len(targets) != u.k_qubits:
            raise QubitIndexError(f"{u.k_qubits}-qubit unitary given {len(targets)} targets")
        return self._push(UNITARY, targets, payload=u.matrix, label=label)

    def _single(self, matrix, targets, label) -> "CircuitBuilder":
        for t in _targets(targets):
            self.add_unitary(simcore.UnitaryMatrix(matrix, check=False), [t], label)
        return self

    def add_h(self, targets) -> "CircuitBuilder":
        return self._single(simcore.HADAMARD, targets, "H")

    def add_x(self, targets) -> "CircuitBuilder":
        return self._single(simcore.PAULI_X, targets, "X")

    def add_y(self, targets) -> "CircuitBuilder":
        return self._single(simcore.PAULI_Y, targets, "Y")

    def add_z(self, targets) -> "CircuitBuilder":
        return self._single(simcore.PAULI_Z, targets, "Z")

    def add_rx(self, theta: float, targets) -> "CircuitBuilder":
        return self._single(simcore.rx(theta), targets, f"RX({theta:.3g})")

    def add_ry(self, theta: float, targets) -> "CircuitBuilder":
        return self._single(simcore.ry(theta), targets, f"RY({theta:.3g})")

    def add_rz(self, theta: float, targets) -> "CircuitBuilder":
        return self._single(simcore.rz(theta), targets, f"RZ({theta:.3g})")

    def add_cx(self, control: int, target: int) -> "CircuitBuilder":
        return self.add_unitary(simcore.UnitaryMatrix(simcore.CNOT, check=False), [control, target], "CX")

    # -- non-unitary -------------------------------------------------------

    def add_prepare(self, amps, targets) -> "CircuitBuilder":
        targets = simcore.check_qubits(_targets(targets), self.n_qubits)
        v = simcore.check_amplitudes(amps, len(targets))
        return self._push(PREPARE, targets, payload=v, label=_prepare_label(v))

    def add_measure(self, qubits, clbits: Sequence[int] | None = None) -> "CircuitBuilder":
        qubits = simcore.check_qubits(_targets(qubits), self.n_qubits)
        if not qubits:
            raise ValidationError("measurement needs at least one qubit")
        if clbits is None:
            clbits = list(range(self.n_clbits, self.n_clbits + len(qubits)))
        else:
            clbits = _targets(clbits)
        if len(clbits) != len(qubits):
            raise ValidationError(f"{len(qubits)} qubits measured into {len(clbits)} clbits")
        if len(set(clbits)) != len(clbits) or any(c < 0 for c in clbits):
            raise QubitIndexError(f"invalid clbit list {clbits}")
        reused = sorted(self._written.intersection(clbits))
        if reused:
            raise ValidationError(f"clbit(s) {reused} already written")
        self._written.update(clbits)
        self.n_clbits = max(self.n_clbits, max(clbits) + 1)
        return self._push(MEASURE, qubits, clbits)

    def measure_all(self) -> "CircuitBuilder":
        return self.add_measure(self.qubits)

    def add_noise(self, targets, p: float) -> "CircuitBuilder":
        if not 0.0 <= p <= 1.0:
            raise ValidationError(f"depolarizing probability must be in [0, 1], got {p}")
        for t in simcore.check_qubits(_targets(targets), self.n_qubits):
            self._push(NOISE, [t], payload=float(p), label="N")
        return self

    # familiar short names for hook authors
    h = add_h
    x = add_x
    y = add_y
    z = add_z
    rx = add_rx
    ry = add_ry
    rz = add_rz
    cx = add_cx
    initialize = add_prepare
    measure = add_measure

    def append(self, u, targets, label: str = "U") -> "CircuitBuilder":
        return self.add_unitary(u, targets, label)

    def build(self) -> Circuit:
        circuit = Circuit(self.n_qubits, self.n_clbits, tuple(self._instructions))
        problems = validate(circuit)
        if problems:
            raise ValidationError("; ".join(problems))
        return circuit


def _prepare_label(v: np.ndarray) -> str:
    mags = np.abs(v)
    k = int(np.argmax(mags))
    if abs(mags[k] - 1.0) < 1e-12:
        m = v.shape[0].bit_length() - 1
        return "|" + format(k, f"0{m}b") + ">"
    return "init"


# ---------------------------------------------------------------------------
# rendering

def _cells(ins: Instruction) -> dict[int, str]:
    k = len(ins.qubits)
    if ins.kind == MEASURE:
        return {q: f"M:c{c}" for q, c in zip(ins.qubits, ins.clbits)}
    if ins.kind == UNITARY and ins.label == "CX":
        return {ins.qubits[0]: "*", ins.qubits[1]: "X"}
    label = ins.label or ins.kind
    if k == 1:
        return {ins.qubits[0]: label}
    return {q: f"{label}:{j}" for j, q in enumerate(ins.qubits)}


def render_text(circuit: Circuit) -> str:
    """Deterministic ASCII wire diagram, one column per instruction.

    Qubit 0 is the top wire.  A ``t=`` header marks where each tagged
    ``during`` block starts; a footer gives the classical register size.
    """
    n = circuit.n_qubits
    width = len(f"q{n - 1}: ")
    rows = [f"q{q}: ".ljust(width) + "-" for q in range(n)]
    header = " " * width + " "
    any_tag = False
    last_tag: int | None = None
    for ins in circuit.instructions:
        cells = {q: f"[{text}]" for q, text in _cells(ins).items()}
        w = max(len(c) for c in cells.values()) + 2
        lo, hi = min(ins.qubits), max(ins.qubits)
        for q in range(n):
            if q in cells:
                cell = cells[q].center(w, "-")
            elif lo < q < hi:
                cell = "|".center(w, "-")
            else:
                cell = "-" * w
            rows[q] += cell
        mark = ""
        if ins.tag is not None and ins.tag != last_tag:
            mark = f"t={ins.tag}"
            any_tag = True
        last_tag = ins.tag
        header += mark[:w].ljust(w)
    lines = []
    if any_tag:
        lines.append(header.rstrip())
    lines.extend(r + "-" for r in rows)
    if circuit.n_clbits:
        lines.append(f"c: {circuit.n_clbits} bits")
    return "\n".join(lines) + "\n"
