"""Independent brute-force oracles for the test suite.

Everything here recomputes expected values through a different route than
the library: explicit bit arithmetic over flat amplitude vectors and dense
operator matrices, never the library's axis-shuffling measurement code.
"""
from __future__ import annotations

import math

import numpy as np

SQ2 = 1.0 / math.sqrt(2.0)

# Bell vectors over the pair index 2*bit(qa) + bit(qb), library outcome order.
BELL_VECTORS = {
    "PhiPlus": np.array([SQ2, 0, 0, SQ2], dtype=complex),
    "PhiMinus": np.array([SQ2, 0, 0, -SQ2], dtype=complex),
    "PsiPlus": np.array([0, SQ2, SQ2, 0], dtype=complex),
    "PsiMinus": np.array([0, SQ2, -SQ2, 0], dtype=complex),
}
SIGN_VECTORS = {
    "+": np.array([SQ2, SQ2], dtype=complex),
    "-": np.array([SQ2, -SQ2], dtype=complex),
}


def bit_at(index: int, position: int, num_qubits: int) -> int:
    """Bit of a basis index at a register position (MSB first)."""
    return (index >> (num_qubits - 1 - position)) & 1


def drop_bits(index: int, positions: list[int], num_qubits: int) -> int:
    """Basis index over the remaining register after removing positions."""
    out = 0
    for p in range(num_qubits):
        if p in positions:
            continue
        out = (out << 1) | bit_at(index, p, num_qubits)
    return out


def project_pair(amps: np.ndarray, num_qubits: int, qa: int, qb: int, pair_vec: np.ndarray):
    """(weight, collapsed amplitudes) for projecting (qa, qb) onto pair_vec.

    Walks every basis index explicitly; the collapsed register drops qa, qb.
    """
    rest = np.zeros(1 << (num_qubits - 2), dtype=complex)
    for idx in range(len(amps)):
        pair = 2 * bit_at(idx, qa, num_qubits) + bit_at(idx, qb, num_qubits)
        rest[drop_bits(idx, [qa, qb], num_qubits)] += np.conj(pair_vec[pair]) * amps[idx]
    weight = float(np.sum(np.abs(rest) ** 2))
    return weight, rest


def project_single(amps: np.ndarray, num_qubits: int, q: int, vec: np.ndarray):
    """Single-qubit analogue of project_pair."""
    rest = np.zeros(1 << (num_qubits - 1), dtype=complex)
    for idx in range(len(amps)):
        rest[drop_bits(idx, [q], num_qubits)] += np.conj(vec[bit_at(idx, q, num_qubits)]) * amps[idx]
    weight = float(np.sum(np.abs(rest) ** 2))
    return weight, rest


def kron_chain(*vectors: np.ndarray) -> np.ndarray:
    out = np.array([1.0], dtype=complex)
    for vec in vectors:
        out = np.kron(out, vec)
    return out


def ghz_amps(k: int) -> np.ndarray:
    amps = np.zeros(1 << k, dtype=complex)
    amps[0] = amps[-1] = SQ2
    return amps


def overlap_sq(a: np.ndarray, b: np.ndarray) -> float:
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    return float(abs(np.vdot(a, b)) ** 2 / (na * nb) ** 2)
