"""Dense statevector engine with trajectory semantics.

Qubit ordering is little-endian everywhere: qubit ``q`` is bit ``q`` of the
basis-state index, so ``|q1 q0> = |10>`` is index 2.  Multi-qubit operators and
outcome vectors follow the same rule with respect to their target list:
``targets[0]`` is the least-significant bit of the operator's index.

The module has two layers.  The ``batch_*`` kernels work on an ``(S, 2**n)``
array holding ``S`` independent trajectories and take one uniform draw per
trajectory for every random event.  The public single-state functions wrap the
same kernels with ``S = 1``, drawing from an :class:`~qreservoir.rng.RngStream`,
so a trajectory simulated alone is bit-identical to the same shot simulated
inside a batch.
"""
from __future__ import annotations

from functools import lru_cache
from typing import Sequence

import numpy as np

from .errors import CapacityError, QubitIndexError, ValidationError
from .rng import RngStream

MAX_QUBITS = 24
MAX_HAAR_QUBITS = 10
UNITARY_ATOL = 1e-10
NORM_ATOL = 1e-8


def _fmt_complex(z: complex) -> str:
    return f"{z.real:+.6f}{z.imag:+.6f}j"


class UnitaryMatrix:
    """A ``2**k x 2**k`` unitary, checked on construction."""

    def __init__(self, matrix, *, check: bool = True):
        m = np.asarray(matrix, dtype=np.complex128)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValidationError(f"unitary must be square, got shape {m.shape}")
        dim = m.shape[0]
        k = dim.bit_length() - 1
        if dim < 2 or 1 << k != dim:
            raise ValidationError(f"unitary dimension {dim} is not a power of two")
        if check:
            dev = unitarity_error(m)
            if dev > UNITARY_ATOL:
                raise ValidationError(f"matrix is not unitary (max |U^dag U - I| = {dev:.3e})")
        m.setflags(write=False)
        self.matrix = m
        self.k_qubits = k

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def dagger(self) -> "UnitaryMatrix":
        return UnitaryMatrix(self.matrix.conj().T, check=False)

    def render(self) -> str:
        return "\n".join(" ".join(_fmt_complex(z) for z in row) for row in self.matrix)

    def __eq__(self, other) -> bool:
        return isinstance(other, UnitaryMatrix) and np.array_equal(self.matrix, other.matrix)

    def __repr__(self) -> str:
        return f"UnitaryMatrix(k_qubits={self.k_qubits})"


def unitarity_error(m: np.ndarray) -> float:
    m = np.asarray(m)
    return float(np.max(np.abs(m.conj().T @ m - np.eye(m.shape[0]))))


class StateVector:
    """Amplitudes of an ``n``-qubit pure state (immutable)."""

    def __init__(self, n_qubits: int, amps):
        a = np.array(amps, dtype=np.complex128).reshape(-1)
        if a.shape[0] != 1 << n_qubits:
            raise ValidationError(f"expected {1 << n_qubits} amplitudes, got {a.shape[0]}")
        a.setflags(write=False)
        self.n_qubits = n_qubits
        self.amps = a

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.amps) ** 2)))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amps) ** 2

    def render(self) -> str:
        return "\n".join(_fmt_complex(z) for z in self.amps)

    def __repr__(self) -> str:
        return f"StateVector(n_qubits={self.n_qubits})"


# ---------------------------------------------------------------------------
# index checks

def check_qubits(qubits: Sequence[int], n_qubits: int) -> list[int]:
    qs = [int(q) for q in qubits]
    if len(set(qs)) != len(qs):
        raise QubitIndexError(f"duplicate qubit in {qs}")
    for q in qs:
        if not 0 <= q < n_qubits:
            raise QubitIndexError(f"qubit {q} out of range for {n_qubits} qubits")
    return qs


def _check_register(n_qubits: int) -> None:
    if not 1 <= n_qubits <= MAX_QUBITS:
        raise CapacityError(f"n_qubits must be in [1, {MAX_QUBITS}], got {n_qubits}")


# ---------------------------------------------------------------------------
# batched kernels: amps has shape (S, 2**n)

def batch_zero(n_qubits: int, shots: int) -> np.ndarray:
    _check_register(n_qubits)
    amps = np.zeros((shots, 1 << n_qubits), dtype=np.complex128)
    amps[:, 0] = 1.0
    return amps


def _axis(n: int, q: int) -> int:
    # axis of qubit q in the (S, 2, ..., 2) view; the last axis is bit 0
    return n - q


def batch_apply(amps: np.ndarray, n: int, u: np.ndarray, targets: Sequence[int]) -> np.ndarray:
    k = len(targets)
    if list(targets) == list(range(n)):
        return amps @ u.T
    shots = amps.shape[0]
    psi = amps.reshape((shots,) + (2,) * n)
    axes = [_axis(n, t) for t in reversed(targets)]
    ur = u.reshape((2,) * (2 * k))
    out = np.tensordot(ur, psi, axes=(list(range(k, 2 * k)), axes))
    out = np.moveaxis(out, list(range(k)), axes)
    return out.reshape(shots, -1)


@lru_cache(maxsize=256)
def _subset_table(n: int, qubits: tuple[int, ...]) -> tuple[np.ndarray, np.ndarray]:
    """Indicator matrix (2**n, 2**m) mapping basis states to subset outcomes, and its boolean transpose."""
    idx = np.arange(1 << n)
    v = np.zeros(1 << n, dtype=np.int64)
    for j, q in enumerate(qubits):
        v |= ((idx >> q) & 1) << j
    onehot = v[:, None] == np.arange(1 << len(qubits))[None, :]
    table = onehot.astype(np.float64)
    table.setflags(write=False)
    return table, table.T.copy()


def batch_probabilities(amps: np.ndarray, n: int, qubits: Sequence[int]) -> np.ndarray:
    """Per-trajectory marginal over ``qubits``; column index bit j is qubit ``qubits[j]``."""
    p = amps.real**2 + amps.imag**2
    return p @ _subset_table(n, tuple(qubits))[0]


def sample_outcomes(probs: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Inverse-CDF sampling; outcomes with zero probability are never selected."""
    cum = np.cumsum(probs, axis=1)
    x = u * cum[:, -1]
    idx = np.sum(cum <= x[:, None], axis=1)
    # u * total can round up to total; fall back to the last supported outcome
    last = probs.shape[1] - 1 - np.argmax(probs[:, ::-1] > 0, axis=1)
    return np.minimum(idx, last)


def batch_measure(amps: np.ndarray, n: int, qubits: Sequence[int], u: np.ndarray):
    """Projective measurement of ``qubits``; returns (outcome indices, collapsed amps)."""
    probs = batch_probabilities(amps, n, qubits)
    outcomes = sample_outcomes(probs, u)
    chosen = probs[np.arange(len(outcomes)), outcomes]
    scale = _subset_table(n, tuple(qubits))[1][outcomes] / np.sqrt(chosen)[:, None]
    return outcomes, amps * scale


def batch_flip(amps: np.ndarray, masks: np.ndarray) -> np.ndarray:
    """Per-trajectory X on the bits set in ``masks`` (a basis-index XOR)."""
    rows = np.flatnonzero(masks)
    if rows.size == 0:
        return amps
    idx = np.arange(amps.shape[1])[None, :] ^ masks[rows, None]
    out = amps.copy()
    out[rows] = np.take_along_axis(amps[rows], idx, axis=1)
    return out


def batch_reset(amps: np.ndarray, n: int, qubits: Sequence[int], u: np.ndarray) -> np.ndarray:
    outcomes, out = batch_measure(amps, n, qubits, u)
    masks = np.zeros_like(outcomes)
    for j, q in enumerate(qubits):
        masks |= ((outcomes >> j) & 1) << q
    return batch_flip(out, masks)


def batch_depolarize(amps: np.ndarray, n: int, qubit: int, p: float, u: np.ndarray) -> np.ndarray:
    if p <= 0:
        return amps
    hit = u < p
    if not np.any(hit):
        return amps
    which = np.minimum((3.0 * u / p).astype(np.int64), 2)
    out = amps.copy()
    for code, pauli in enumerate((PAULI_X, PAULI_Y, PAULI_Z)):
        sel = hit & (which == code)
        if np.any(sel):
            out[sel] = batch_apply(out[sel], n, pauli, [qubit])
    return out


# ---------------------------------------------------------------------------
# standard matrices

PAULI_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)
HADAMARD = np.array([[1, 1], [1, -1]], dtype=np.complex128) / np.sqrt(2)
# control = targets[0] (bit 0), target = targets[1] (bit 1)
CNOT = np.array(
    [[1, 0, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0], [0, 1, 0, 0]], dtype=np.complex128
)


def rx(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -1j * s], [-1j * s, c]], dtype=np.complex128)


def ry(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=np.complex128)


def rz(theta: float) -> np.ndarray:
    return np.diag([np.exp(-0.5j * theta), np.exp(0.5j * theta)])


def preparation_unitary(target_amps) -> np.ndarray:
    """A unitary whose first column is ``target_amps`` (Householder construction)."""
    v = np.asarray(target_amps, dtype=np.complex128).reshape(-1)
    dim = v.shape[0]
    phase = v[0] / abs(v[0]) if abs(v[0]) > 0 else 1.0
    w = v.copy()
    w[0] -= phase
    ww = np.vdot(w, w).real
    if ww < 1e-30:
        return phase * np.eye(dim, dtype=np.complex128)
    h = np.eye(dim, dtype=np.complex128) - 2.0 * np.outer(w, w.conj()) / ww
    return h * phase


def check_amplitudes(target_amps, n_targets: int | None = None) -> np.ndarray:
    v = np.asarray(target_amps, dtype=np.complex128).reshape(-1)
    if n_targets is not None and v.shape[0] != 1 << n_targets:
        raise ValidationError(f"expected {1 << n_targets} amplitudes for {n_targets} qubits, got {v.shape[0]}")
    if not np.all(np.isfinite(v)):
        raise ValidationError("amplitudes must be finite")
    norm = np.sqrt(np.sum(np.abs(v) ** 2))
    if abs(norm - 1.0) > NORM_ATOL:
        raise ValidationError(f"amplitudes must have unit norm, got {norm:.10g}")
    return v


# ---------------------------------------------------------------------------
# single-trajectory API

def zero_state(n_qubits: int) -> StateVector:
    return StateVector(n_qubits, batch_zero(n_qubits, 1)[0])


def _as_unitary(u) -> UnitaryMatrix:
    return u if isinstance(u, UnitaryMatrix) else UnitaryMatrix(u)


def apply_unitary(state: StateVector, u, targets: Sequence[int]) -> StateVector:
    u = _as_unitary(u)
    targets = check_qubits(targets, state.n_qubits)
    if len(targets) != u.k_qubits:
        raise QubitIndexError(f"{u.k_qubits}-qubit unitary given {len(targets)} targets")
    out = batch_apply(state.amps[None, :], state.n_qubits, u.matrix, targets)
    return StateVector(state.n_qubits, out[0])


def born_probabilities(state: StateVector, qubits: Sequence[int]) -> np.ndarray:
    """Outcome distribution over ``qubits`` (index bit j is qubit ``qubits[j]``)."""
    qubits = check_qubits(qubits, state.n_qubits)
    return batch_probabilities(state.amps[None, :], state.n_qubits, qubits)[0]


def _bits(outcome: int, m: int) -> list[int]:
    return [(outcome >> j) & 1 for j in range(m)]


def measure(state: StateVector, qubits: Sequence[int], rng: RngStream):
    """Measure ``qubits``; returns ``(bits, collapsed)`` with ``bits[j]`` for ``qubits[j]``."""
    qubits = check_qubits(qubits, state.n_qubits)
    u = np.array([rng.uniform()])
    outcomes, out = batch_measure(state.amps[None, :], state.n_qubits, qubits, u)
    return _bits(int(outcomes[0]), len(qubits)), StateVector(state.n_qubits, out[0])


def reset(state: StateVector, qubit: int, rng: RngStream) -> StateVector:
    (qubit,) = check_qubits([qubit], state.n_qubits)
    u = np.array([rng.uniform()])
    out = batch_reset(state.amps[None, :], state.n_qubits, [qubit], u)
    return StateVector(state.n_qubits, out[0])


def prepare(state: StateVector, qubits: Sequence[int], target_amps, rng: RngStream) -> StateVector:
    """Reset ``qubits`` (one joint measurement) and load ``target_amps`` onto them."""
    qubits = check_qubits(qubits, state.n_qubits)
    v = check_amplitudes(target_amps, len(qubits))
    u = np.array([rng.uniform()])
    out = batch_reset(state.amps[None, :], state.n_qubits, qubits, u)
    out = batch_apply(out, state.n_qubits, preparation_unitary(v), qubits)
    return StateVector(state.n_qubits, out[0])


def apply_depolarizing(state: StateVector, qubit: int, p: float, rng: RngStream) -> StateVector:
    if not 0.0 <= p <= 1.0:
        raise ValidationError(f"depolarizing probability must be in [0, 1], got {p}")
    (qubit,) = check_qubits([qubit], state.n_qubits)
    u = np.array([rng.uniform()])
    out = batch_depolarize(state.amps[None, :], state.n_qubits, qubit, p, u)
    return StateVector(state.n_qubits, out[0])


def haar_random_unitary(k_qubits: int, rng: RngStream) -> UnitaryMatrix:
    """Haar-distributed unitary: QR of a complex Ginibre matrix with R's diagonal made positive."""
    if not 1 <= k_qubits <= MAX_HAAR_QUBITS:
        raise CapacityError(f"k_qubits must be in [1, {MAX_HAAR_QUBITS}], got {k_qubits}")
    dim = 1 << k_qubits
    g = rng.normals(2 * dim * dim).reshape(2, dim, dim)
    z = (g[0] + 1j * g[1]) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    q = q * (d / np.abs(d))[None, :]
    return UnitaryMatrix(q)
