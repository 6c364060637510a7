"""Reference computations that do not share code with the simulator kernels."""
from __future__ import annotations

import itertools

import numpy as np


def bit(i: int, q: int) -> int:
    return (i >> q) & 1


def expand(u: np.ndarray, targets, n: int) -> np.ndarray:
    """Full 2**n matrix of ``u`` acting on ``targets`` (targets[0] = operator LSB)."""
    dim = 1 << n
    others = [q for q in range(n) if q not in targets]
    out = np.zeros((dim, dim), dtype=complex)
    for i in range(dim):
        for j in range(dim):
            if all(bit(i, q) == bit(j, q) for q in others):
                si = sum(bit(i, t) << m for m, t in enumerate(targets))
                sj = sum(bit(j, t) << m for m, t in enumerate(targets))
                out[i, j] = u[si, sj]
    return out


def projector(n: int, qubits, outcome: int) -> np.ndarray:
    dim = 1 << n
    diag = [
        1.0 if all(bit(i, q) == bit(outcome, m) for m, q in enumerate(qubits)) else 0.0
        for i in range(dim)
    ]
    return np.diag(diag)


def flip(n: int, qubits, outcome: int) -> np.ndarray:
    """Permutation matrix applying X to each qubit whose bit in ``outcome`` is 1."""
    dim = 1 << n
    mask = sum(bit(outcome, m) << q for m, q in enumerate(qubits))
    out = np.zeros((dim, dim))
    for i in range(dim):
        out[i ^ mask, i] = 1.0
    return out


def prep_matrix(amps) -> np.ndarray:
    """Any unitary with first column ``amps`` (Gram-Schmidt completion)."""
    v = np.asarray(amps, dtype=complex)
    dim = v.shape[0]
    basis = [v / np.linalg.norm(v)]
    for e in np.eye(dim, dtype=complex):
        w = e - sum(np.vdot(b, e) * b for b in basis)
        if np.linalg.norm(w) > 1e-9:
            basis.append(w / np.linalg.norm(w))
    return np.array(basis[:dim]).T


def branch_distribution(circuit) -> dict[tuple[int, ...], float]:
    """Exact joint clbit distribution by enumerating every measurement branch."""
    n = circuit.n_qubits
    start = np.zeros(1 << n, dtype=complex)
    start[0] = 1.0
    branches = [(start, 1.0, (0,) * circuit.n_clbits)]
    for ins in circuit.instructions:
        nxt = []
        for psi, p, bits in branches:
            if ins.kind == "unitary":
                nxt.append((expand(np.asarray(ins.payload), list(ins.qubits), n) @ psi, p, bits))
                continue
            m = len(ins.qubits)
            for outcome in range(1 << m):
                proj = projector(n, ins.qubits, outcome) @ psi
                q = float(np.vdot(proj, proj).real)
                if q < 1e-14:
                    continue
                phi = proj / np.sqrt(q)
                new_bits = list(bits)
                if ins.kind == "measure":
                    for j, c in enumerate(ins.clbits):
                        new_bits[c] = bit(outcome, j)
                elif ins.kind == "prepare":
                    phi = flip(n, ins.qubits, outcome) @ phi
                    phi = expand(prep_matrix(ins.payload), list(ins.qubits), n) @ phi
                nxt.append((phi, p * q, tuple(new_bits)))
        branches = nxt
    dist: dict[tuple[int, ...], float] = {}
    for _, p, bits in branches:
        dist[bits] = dist.get(bits, 0.0) + p
    return dist


def all_bitstrings(k: int):
    return list(itertools.product((0, 1), repeat=k))
