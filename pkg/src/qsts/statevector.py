"""Dense complex statevector engine.

Register convention: qubit k of an n-qubit register addresses bit k of the
amplitude index, most significant bit first. Basis index 0b01 of a two-qubit
state therefore means qubit 0 is |0> and qubit 1 is |1>, matching the usual
left-to-right ket notation |01>.

Measurements remove the measured qubits from the register (the returned
state has fewer qubits), which keeps branch enumeration cheap: the register
is at its full size only before the first measurement.
"""
from __future__ import annotations

import math
import os
from enum import Enum

import numpy as np

from .errors import CapacityError, ZeroProbabilityError

# Absolute ceiling on register size; QSTS_MAX_QUBITS may lower it, never raise it.
HARD_QUBIT_LIMIT = 22
MAX_QUBITS_ENV = "QSTS_MAX_QUBITS"

NORM_ATOL = 1e-9          # |sum of |amp|^2 - 1| allowed on any stored state
UNITARY_ATOL = 1e-12      # entrywise |U^H U - I| allowed for a gate
ZERO_PROBABILITY = 1e-12  # forcing a branch below this weight is an error

_SQRT_HALF = 1.0 / math.sqrt(2.0)


def max_qubits() -> int:
    """Effective register cap (HARD_QUBIT_LIMIT, optionally lowered by env)."""
    raw = os.environ.get(MAX_QUBITS_ENV)
    if raw is None:
        return HARD_QUBIT_LIMIT
    try:
        value = int(raw)
    except ValueError:
        raise ValueError(f"{MAX_QUBITS_ENV} must be an integer, got {raw!r}") from None
    if value < 1:
        raise ValueError(f"{MAX_QUBITS_ENV} must be positive, got {value}")
    return min(value, HARD_QUBIT_LIMIT)


class BellOutcome(Enum):
    """Result of a two-qubit Bell-basis measurement."""

    PHI_PLUS = "PhiPlus"
    PHI_MINUS = "PhiMinus"
    PSI_PLUS = "PsiPlus"
    PSI_MINUS = "PsiMinus"

    @property
    def bit_value(self) -> int:
        """0 for the parallel pair (phi), 1 for the anti-parallel pair (psi)."""
        return 0 if self in (BellOutcome.PHI_PLUS, BellOutcome.PHI_MINUS) else 1

    @property
    def parity(self) -> int:
        """+1 or -1, the sign inside the Bell superposition."""
        return 1 if self in (BellOutcome.PHI_PLUS, BellOutcome.PSI_PLUS) else -1


class SignOutcome(Enum):
    """Result of a single-qubit measurement in the |+x>/|-x> basis."""

    PLUS = "+"
    MINUS = "-"

    @property
    def parity(self) -> int:
        return 1 if self is SignOutcome.PLUS else -1


class CorrectionOp(Enum):
    """The receiver's local repair operators.

    U0 = identity, U1 = phase flip, U2 = bit flip,
    U3 = |0><1| - |1><0| (bit flip with a phase).
    """

    U0 = "U0"
    U1 = "U1"
    U2 = "U2"
    U3 = "U3"

    @property
    def matrix(self) -> np.ndarray:
        return _CORRECTION_MATRICES[self]


BELL_OUTCOMES = (
    BellOutcome.PHI_PLUS,
    BellOutcome.PHI_MINUS,
    BellOutcome.PSI_PLUS,
    BellOutcome.PSI_MINUS,
)
SIGN_OUTCOMES = (SignOutcome.PLUS, SignOutcome.MINUS)

# Rows follow BELL_OUTCOMES; columns index the measured pair as 2*bit(qa) + bit(qb).
_BELL_MATRIX = np.array(
    [
        [1.0, 0.0, 0.0, 1.0],
        [1.0, 0.0, 0.0, -1.0],
        [0.0, 1.0, 1.0, 0.0],
        [0.0, 1.0, -1.0, 0.0],
    ],
    dtype=np.complex128,
) * _SQRT_HALF

# Rows follow SIGN_OUTCOMES; columns index bit(q).
_SIGN_MATRIX = np.array(
    [[1.0, 1.0], [1.0, -1.0]], dtype=np.complex128
) * _SQRT_HALF

_CORRECTION_MATRICES = {
    CorrectionOp.U0: np.eye(2, dtype=np.complex128),
    CorrectionOp.U1: np.array([[1.0, 0.0], [0.0, -1.0]], dtype=np.complex128),
    CorrectionOp.U2: np.array([[0.0, 1.0], [1.0, 0.0]], dtype=np.complex128),
    CorrectionOp.U3: np.array([[0.0, 1.0], [-1.0, 0.0]], dtype=np.complex128),
}
for _mat in _CORRECTION_MATRICES.values():
    _mat.setflags(write=False)


class PureState:
    """Normalized complex amplitude vector over an ordered qubit register.

    Instances are immutable: every operation returns a new state. A register
    of zero qubits (one amplitude of modulus 1) is a valid, fully measured
    state.
    """

    __slots__ = ("num_qubits", "_amps")

    def __init__(self, amplitudes) -> None:
        amps = np.array(amplitudes, dtype=np.complex128)
        self._adopt(amps)

    @classmethod
    def _from_owned(cls, amps: np.ndarray) -> "PureState":
        """Wrap a freshly computed array without copying it."""
        state = object.__new__(cls)
        state._adopt(amps)
        return state

    def _adopt(self, amps: np.ndarray) -> None:
        if amps.ndim != 1 or amps.size == 0 or amps.size & (amps.size - 1):
            raise ValueError(f"amplitude vector length must be a power of two, got {amps.size}")
        if not np.all(np.isfinite(amps)):
            raise ValueError("amplitudes must be finite")
        norm_sq = float(np.sum(np.abs(amps) ** 2))
        if abs(norm_sq - 1.0) > NORM_ATOL:
            raise ValueError(f"state is not normalized: sum |amp|^2 = {norm_sq!r}")
        amps.setflags(write=False)
        object.__setattr__(self, "_amps", amps)
        object.__setattr__(self, "num_qubits", amps.size.bit_length() - 1)

    @property
    def amplitudes(self) -> np.ndarray:
        """Read-only view of the amplitude vector (length 2**num_qubits)."""
        return self._amps

    @classmethod
    def basis(cls, num_qubits: int, index: int) -> "PureState":
        """Computational basis state |index> over num_qubits qubits."""
        if num_qubits < 0:
            raise ValueError("num_qubits must be non-negative")
        dim = 1 << num_qubits
        if not 0 <= index < dim:
            raise ValueError(f"basis index {index} out of range for {num_qubits} qubits")
        amps = np.zeros(dim, dtype=np.complex128)
        amps[index] = 1.0
        return cls._from_owned(amps)

    def __repr__(self) -> str:
        return f"PureState(num_qubits={self.num_qubits})"


def tensor(a: PureState, b: PureState) -> PureState:
    """Tensor product; a's qubits occupy the lower register positions."""
    combined = a.num_qubits + b.num_qubits
    cap = max_qubits()
    if combined > cap:
        raise CapacityError(f"tensor product needs {combined} qubits, cap is {cap}")
    return PureState._from_owned(np.kron(a.amplitudes, b.amplitudes))


def apply_gate(state: PureState, q: int, gate) -> PureState:
    """Apply a 2x2 unitary to qubit q, leaving all other qubits untouched."""
    g = np.asarray(gate, dtype=np.complex128)
    if g.shape != (2, 2):
        raise ValueError(f"gate must be 2x2, got shape {g.shape}")
    if np.max(np.abs(g.conj().T @ g - np.eye(2))) > UNITARY_ATOL:
        raise ValueError("gate is not unitary")
    n = state.num_qubits
    if not 0 <= q < n:
        raise IndexError(f"qubit {q} out of range for {n}-qubit state")
    arr = state.amplitudes.reshape([2] * n)
    moved = np.tensordot(g, np.moveaxis(arr, q, 0), axes=(1, 0))
    return PureState._from_owned(np.moveaxis(moved, 0, q).reshape(-1).copy())


def fidelity(a: PureState, b: PureState) -> float:
    """|<a|b>|^2; deliberately insensitive to global phase."""
    if a.num_qubits != b.num_qubits:
        raise ValueError(
            f"fidelity needs equal registers, got {a.num_qubits} and {b.num_qubits} qubits"
        )
    overlap = np.vdot(a.amplitudes, b.amplitudes)
    return min(float(abs(overlap) ** 2), 1.0)


def _pair_view(state: PureState, qa: int, qb: int) -> np.ndarray:
    n = state.num_qubits
    if qa == qb:
        raise ValueError("Bell measurement needs two distinct qubits")
    for q in (qa, qb):
        if not 0 <= q < n:
            raise IndexError(f"qubit {q} out of range for {n}-qubit state")
    arr = state.amplitudes.reshape([2] * n)
    # Rows: measured pair as 2*bit(qa)+bit(qb); columns: remaining qubits in
    # their original register order.
    return np.moveaxis(arr, (qa, qb), (0, 1)).reshape(4, -1)


def bell_probabilities(state: PureState, qa: int, qb: int) -> np.ndarray:
    """Born weights of the four Bell outcomes on (qa, qb), in BELL_OUTCOMES order."""
    reduced = _BELL_MATRIX @ _pair_view(state, qa, qb)
    return (np.abs(reduced) ** 2).sum(axis=1)


def sigma_x_probabilities(state: PureState, q: int) -> np.ndarray:
    """Born weights of |+x> and |-x> on qubit q, in SIGN_OUTCOMES order."""
    n = state.num_qubits
    if not 0 <= q < n:
        raise IndexError(f"qubit {q} out of range for {n}-qubit state")
    arr = state.amplitudes.reshape([2] * n)
    reduced = _SIGN_MATRIX @ np.moveaxis(arr, q, 0).reshape(2, -1)
    return (np.abs(reduced) ** 2).sum(axis=1)


def _sample_index(probs: np.ndarray, rng: np.random.Generator) -> int:
    r = rng.random()
    acc = 0.0
    for k, p in enumerate(probs):
        acc += float(p)
        if r < acc:
            return k
    return int(np.argmax(probs))


def measure_bell(
    state: PureState,
    qa: int,
    qb: int,
    forced: BellOutcome | None = None,
    rng: np.random.Generator | None = None,
) -> tuple[BellOutcome, float, PureState]:
    """Bell-basis measurement of (qa, qb).

    Projects the pair onto the measured Bell state, removes both qubits from
    the register, and renormalizes. Returns (outcome, Born probability,
    collapsed state). Without `forced` the outcome is sampled from the Born
    distribution, which requires `rng`.
    """
    reduced = _BELL_MATRIX @ _pair_view(state, qa, qb)
    probs = (np.abs(reduced) ** 2).sum(axis=1)
    if forced is None:
        if rng is None:
            raise ValueError("sampling a measurement outcome requires rng")
        k = _sample_index(probs, rng)
    else:
        k = BELL_OUTCOMES.index(forced)
    p = float(probs[k])
    if p < ZERO_PROBABILITY:
        raise ZeroProbabilityError(f"branch {BELL_OUTCOMES[k].value} has probability {p!r}")
    post = PureState._from_owned(reduced[k] / math.sqrt(p))
    return BELL_OUTCOMES[k], p, post


def measure_sigma_x(
    state: PureState,
    q: int,
    forced: SignOutcome | None = None,
    rng: np.random.Generator | None = None,
) -> tuple[SignOutcome, float, PureState]:
    """Single-qubit measurement in the |+x>/|-x> basis; removes qubit q."""
    n = state.num_qubits
    if not 0 <= q < n:
        raise IndexError(f"qubit {q} out of range for {n}-qubit state")
    arr = state.amplitudes.reshape([2] * n)
    reduced = _SIGN_MATRIX @ np.moveaxis(arr, q, 0).reshape(2, -1)
    probs = (np.abs(reduced) ** 2).sum(axis=1)
    if forced is None:
        if rng is None:
            raise ValueError("sampling a measurement outcome requires rng")
        k = _sample_index(probs, rng)
    else:
        k = SIGN_OUTCOMES.index(forced)
    p = float(probs[k])
    if p < ZERO_PROBABILITY:
        raise ZeroProbabilityError(f"branch {SIGN_OUTCOMES[k].value} has probability {p!r}")
    post = PureState._from_owned(reduced[k] / math.sqrt(p))
    return SIGN_OUTCOMES[k], p, post


def _project_bell(
    state: PureState, qa: int, qb: int, outcome: BellOutcome
) -> tuple[float, PureState]:
    """Collapse (qa, qb) onto a Bell state WITHOUT removing the pair.

    Test support only: lets the suite re-measure the collapsed pair to check
    idempotence. The shipped protocol path always shrinks the register.
    """
    n = state.num_qubits
    k = BELL_OUTCOMES.index(outcome)
    reduced = _BELL_MATRIX @ _pair_view(state, qa, qb)
    p = float((np.abs(reduced[k]) ** 2).sum())
    if p < ZERO_PROBABILITY:
        raise ZeroProbabilityError(f"branch {outcome.value} has probability {p!r}")
    rest = reduced[k] / math.sqrt(p)
    full = np.outer(_BELL_MATRIX[k], rest).reshape([2, 2] + [2] * (n - 2))
    back = np.moveaxis(full, (0, 1), (qa, qb)).reshape(-1).copy()
    return p, PureState._from_owned(back)


def _project_sigma_x(
    state: PureState, q: int, outcome: SignOutcome
) -> tuple[float, PureState]:
    """Non-shrinking variant of measure_sigma_x (test support only)."""
    n = state.num_qubits
    if not 0 <= q < n:
        raise IndexError(f"qubit {q} out of range for {n}-qubit state")
    k = SIGN_OUTCOMES.index(outcome)
    arr = state.amplitudes.reshape([2] * n)
    reduced = _SIGN_MATRIX @ np.moveaxis(arr, q, 0).reshape(2, -1)
    p = float((np.abs(reduced[k]) ** 2).sum())
    if p < ZERO_PROBABILITY:
        raise ZeroProbabilityError(f"branch {outcome.value} has probability {p!r}")
    rest = reduced[k] / math.sqrt(p)
    full = np.outer(_SIGN_MATRIX[k], rest).reshape([2] + [2] * (n - 1))
    back = np.moveaxis(full, 0, q).reshape(-1).copy()
    return p, PureState._from_owned(back)
