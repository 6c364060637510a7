"""Shot-based trajectory execution of circuits."""
from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import simcore
from .circuit import MEASURE, NOISE, PREPARE, UNITARY, Circuit, Instruction, validate
from .errors import ContractError, ValidationError
from .rng import uniforms

CHUNK_SHOTS = 4096


@dataclass(frozen=True)
class ShotTable:
    """Aggregated outcomes of ``shots`` trajectories.

    ``counts[i]`` is the number of shots in which clbit ``i`` read 1.  ``raw``
    holds the per-shot bit matrix (``shots x n_clbits``) when it was requested.
    """

    shots: int
    n_clbits: int
    counts: np.ndarray
    raw: np.ndarray | None = None

    def averages(self, clbits: Sequence[int] | None = None) -> np.ndarray:
        c = self.counts if clbits is None else self.counts[list(clbits)]
        return c / self.shots

    def joint_counts(self, clbits: Sequence[int]) -> np.ndarray:
        """Histogram over ``2**len(clbits)`` outcomes; bit j of the index is ``clbits[j]``."""
        if self.raw is None:
            raise ContractError("joint counts need the raw shot matrix (execute with keep_raw=True)")
        idx = np.zeros(self.shots, dtype=np.int64)
        for j, c in enumerate(clbits):
            idx |= self.raw[:, c].astype(np.int64) << j
        return np.bincount(idx, minlength=1 << len(clbits))

    def write_csv(self, path) -> None:
        """Raw shot dump: header ``shot,c0,c1,...``, one row per shot."""
        if self.raw is None:
            raise ContractError("no raw shot matrix to write")
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["shot"] + [f"c{i}" for i in range(self.n_clbits)])
            for s, row in enumerate(self.raw):
                w.writerow([s, *row.tolist()])


class _Chunk:
    """State of a contiguous block of shots."""

    def __init__(self, n_qubits: int, first: int, count: int):
        self.ids = np.arange(first, first + count, dtype=np.uint64)
        self.count = count
        # trajectories coincide until the first random event: keep a single row till then
        self.amps = simcore.batch_zero(n_qubits, 1)
        self.event = 0
        self.bits: dict[int, np.ndarray] = {}

    def copy(self) -> "_Chunk":
        other = object.__new__(_Chunk)
        other.ids, other.count, other.event = self.ids, self.count, self.event
        other.amps = self.amps.copy()
        other.bits = dict(self.bits)
        return other

    def draws(self, seed: int) -> np.ndarray:
        # widens self.amps: callers must read amps only after drawing
        if self.amps.shape[0] != self.count:
            self.amps = np.repeat(self.amps, self.count, axis=0)
        u = uniforms(seed, self.ids, self.event)
        self.event += 1
        return u


class TrajectoryRun:
    """A batch of shot trajectories that can be advanced instruction by instruction.

    Shot ``s`` draws its randomness from stream ``(seed, s)``, one draw per
    random event (measurement, preparation, noise site) in program order.
    Advancing a run over ``a`` and then ``b`` is therefore bit-identical to
    executing ``a + b`` in one go, and :meth:`fork` lets callers branch a
    shared prefix.  Instructions are trusted here; :func:`execute` validates.
    """

    def __init__(self, n_qubits: int, shots: int, seed: int = 0, noise: float | None = None, workers: int = 1):
        if int(shots) != shots or shots < 1:
            raise ValidationError(f"shots must be a positive integer, got {shots}")
        p = 0.0 if noise is None else float(noise)
        if not 0.0 <= p <= 1.0:
            raise ValidationError(f"noise probability must be in [0, 1], got {noise}")
        simcore._check_register(n_qubits)
        self.n_qubits = n_qubits
        self.shots = int(shots)
        self.seed = seed
        self.noise = p
        self.workers = workers
        self._chunks = [
            _Chunk(n_qubits, s, min(CHUNK_SHOTS, self.shots - s))
            for s in range(0, self.shots, CHUNK_SHOTS)
        ]

    def fork(self) -> "TrajectoryRun":
        other = object.__new__(TrajectoryRun)
        other.__dict__.update(self.__dict__)
        other._chunks = [c.copy() for c in self._chunks]
        return other

    def advance(self, instructions: Iterable[Instruction]) -> "TrajectoryRun":
        instructions = list(instructions)
        preps = {
            pos: simcore.preparation_unitary(ins.payload)
            for pos, ins in enumerate(instructions)
            if ins.kind == PREPARE
        }

        def job(chunk: _Chunk) -> None:
            self._advance_chunk(chunk, instructions, preps)

        if self.workers > 1 and len(self._chunks) > 1:
            with ThreadPoolExecutor(max_workers=self.workers) as pool:
                list(pool.map(job, self._chunks))
        else:
            for chunk in self._chunks:
                job(chunk)
        return self

    def _advance_chunk(self, chunk: _Chunk, instructions: list[Instruction], preps: dict) -> None:
        n, seed, noise = self.n_qubits, self.seed, self.noise
        for pos, ins in enumerate(instructions):
            if ins.kind == UNITARY:
                chunk.amps = simcore.batch_apply(chunk.amps, n, ins.payload, ins.qubits)
                if noise > 0:
                    for q in ins.qubits:
                        u = chunk.draws(seed)
                        chunk.amps = simcore.batch_depolarize(chunk.amps, n, q, noise, u)
            elif ins.kind == PREPARE:
                u = chunk.draws(seed)
                chunk.amps = simcore.batch_reset(chunk.amps, n, ins.qubits, u)
                chunk.amps = simcore.batch_apply(chunk.amps, n, preps[pos], ins.qubits)
            elif ins.kind == MEASURE:
                u = chunk.draws(seed)
                outcomes, chunk.amps = simcore.batch_measure(chunk.amps, n, ins.qubits, u)
                for j, c in enumerate(ins.clbits):
                    chunk.bits[c] = ((outcomes >> j) & 1).astype(np.uint8)
            elif ins.kind == NOISE:
                for q in ins.qubits:
                    u = chunk.draws(seed)
                    chunk.amps = simcore.batch_depolarize(chunk.amps, n, q, ins.payload, u)

    def bits(self, clbit: int) -> np.ndarray:
        """Per-shot values of ``clbit`` (zeros if it was never written)."""
        parts = [c.bits.get(clbit, np.zeros(c.count, dtype=np.uint8)) for c in self._chunks]
        return np.concatenate(parts)

    def count(self, clbit: int) -> int:
        return int(sum(int(c.bits[clbit].sum(dtype=np.int64)) for c in self._chunks if clbit in c.bits))

    def table(self, n_clbits: int, keep_raw: bool = False) -> ShotTable:
        counts = np.array([self.count(c) for c in range(n_clbits)], dtype=np.int64)
        raw = None
        if keep_raw:
            raw = np.zeros((self.shots, n_clbits), dtype=np.uint8)
            for c in range(n_clbits):
                raw[:, c] = self.bits(c)
        return ShotTable(self.shots, n_clbits, counts, raw)


def execute(
    circuit: Circuit,
    shots: int,
    seed: int = 0,
    noise: float | None = None,
    *,
    keep_raw: bool = False,
    workers: int = 1,
) -> ShotTable:
    """Run ``shots`` independent trajectories of ``circuit`` from ``|0...0>``.

    The result depends only on ``(circuit, shots, seed, noise)``; ``workers``
    changes wall time, never the table.  With ``noise=p`` a depolarizing
    channel follows every unitary on each of its qubits.
    """
    problems = validate(circuit)
    if problems:
        raise ContractError("refusing to execute invalid circuit: " + "; ".join(problems))
    run = TrajectoryRun(circuit.n_qubits, shots, seed, noise, workers)
    run.advance(circuit.instructions)
    return run.table(circuit.n_clbits, keep_raw)
