"""Protocol orchestration for multiparty sharing of an m-qubit secret.

One run assembles the composite state (secret tensored with m GHZ channels),
performs Alice's m Bell measurements, the n controllers' sign measurements,
looks up the receiver's per-qubit correction from the measured bit value and
aggregate parity, applies the repairs, and emits a Transcript. The module
also enumerates every measurement branch exhaustively, sharing collapsed
prefixes so the full branch tree costs far less than rerunning the protocol
per branch.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence, Union

import numpy as np

from .errors import BranchLimitError, CapacityError
from .statevector import (
    BELL_OUTCOMES,
    SIGN_OUTCOMES,
    BellOutcome,
    CorrectionOp,
    PureState,
    SignOutcome,
    apply_gate,
    fidelity,
    max_qubits,
    measure_bell,
    measure_sigma_x,
    tensor,
)

# Policy markers: sample outcomes from the Born rule, or enumerate every branch.
SAMPLE = "sample"
ENUMERATE = "enumerate"

DEFAULT_BRANCH_LIMIT = 2**20


@dataclass(frozen=True)
class Forced:
    """Forced measurement outcomes as one flat tuple.

    Layout: m Bell outcomes (group order), then the m x n sign matrix
    flattened group-major, i.e. group 1's signs for controller slots 1..n,
    then group 2's, and so on.
    """

    outcomes: tuple

    @classmethod
    def from_parts(
        cls,
        bells: Sequence[BellOutcome],
        sign_rows: Sequence[Sequence[SignOutcome]],
    ) -> "Forced":
        """Build from m Bell outcomes and m rows of n signs (group-major rows)."""
        flat = tuple(bells) + tuple(s for row in sign_rows for s in row)
        return cls(flat)


OutcomePolicy = Union[str, Forced]


@dataclass(frozen=True)
class ProtocolConfig:
    """Parameters of one protocol run.

    m secret qubits are shared among n+1 agents (n controllers plus one
    receiver) through m GHZ channels of n+2 photons each. `receiver` is the
    agent index in [1, n+1] keeping its photons; None means the last agent.
    """

    m: int
    n: int
    receiver: int | None = None
    seed: int = 0
    outcome_policy: OutcomePolicy = SAMPLE

    def __post_init__(self) -> None:
        if self.m < 1:
            raise ValueError(f"m must be >= 1, got {self.m}")
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        cap = max_qubits()
        if self.total_qubits > cap:
            raise CapacityError(
                f"m={self.m}, n={self.n} needs {self.total_qubits} qubits, cap is {cap}"
            )
        if self.receiver is not None and not 1 <= self.receiver <= self.n + 1:
            raise ValueError(
                f"receiver must be in [1, {self.n + 1}], got {self.receiver}"
            )
        policy = self.outcome_policy
        if isinstance(policy, Forced):
            self._check_forced(policy)
        elif policy not in (SAMPLE, ENUMERATE):
            raise ValueError(f"unknown outcome policy: {policy!r}")

    def _check_forced(self, policy: Forced) -> None:
        want = self.m + self.m * self.n
        got = policy.outcomes
        if len(got) != want:
            raise ValueError(
                f"forced outcome list must have {want} entries "
                f"(m Bell outcomes then the m*n signs), got {len(got)}"
            )
        for k, outcome in enumerate(got):
            expected = BellOutcome if k < self.m else SignOutcome
            if not isinstance(outcome, expected):
                raise ValueError(
                    f"forced outcome {k} must be a {expected.__name__}, got {outcome!r}"
                )

    @property
    def total_qubits(self) -> int:
        return self.m * (self.n + 3)

    @property
    def receiver_agent(self) -> int:
        return self.n + 1 if self.receiver is None else self.receiver

    @property
    def controllers(self) -> tuple[int, ...]:
        """Agent indices acting as controllers, in ascending order."""
        return tuple(a for a in range(1, self.n + 2) if a != self.receiver_agent)

    @property
    def branch_count(self) -> int:
        return 4**self.m * 2 ** (self.m * self.n)


@dataclass(frozen=True)
class RegisterLayout:
    """Initial register positions for one run.

    Secret qubits x_1..x_m sit first; each GHZ group i then contributes
    photons (i, 0) for Alice, (i, 1)..(i, n) style slots for the agents.
    Labels are ("x", i) and ("b", i, j) with j = 0 for Alice's photon of
    group i and j in [1, n+1] for agent j's photon.
    """

    m: int
    n: int

    @property
    def total_qubits(self) -> int:
        return self.m * (self.n + 3)

    def secret_position(self, i: int) -> int:
        if not 1 <= i <= self.m:
            raise ValueError(f"secret qubit index {i} out of range")
        return i - 1

    def photon_position(self, i: int, j: int) -> int:
        if not 1 <= i <= self.m:
            raise ValueError(f"group index {i} out of range")
        if not 0 <= j <= self.n + 1:
            raise ValueError(f"holder index {j} out of range")
        return self.m + (i - 1) * (self.n + 2) + j

    def labels(self) -> tuple[tuple, ...]:
        """All qubit labels in initial register order."""
        out: list[tuple] = [("x", i) for i in range(1, self.m + 1)]
        for i in range(1, self.m + 1):
            out.extend(("b", i, j) for j in range(self.n + 2))
        return tuple(out)


class LiveRegister:
    """Tracks label positions as measurements shrink the register."""

    def __init__(self, labels: Sequence[tuple]) -> None:
        self._labels = list(labels)

    def position(self, label: tuple) -> int:
        return self._labels.index(label)

    def remove(self, *labels: tuple) -> None:
        for label in labels:
            self._labels.remove(label)

    def __len__(self) -> int:
        return len(self._labels)

    @property
    def labels(self) -> tuple[tuple, ...]:
        return tuple(self._labels)


class SecretState:
    """An m-qubit secret held as a normalized PureState."""

    __slots__ = ("m", "state")

    def __init__(self, amplitudes) -> None:
        state = amplitudes if isinstance(amplitudes, PureState) else PureState(amplitudes)
        if state.num_qubits < 1:
            raise ValueError("a secret needs at least one qubit")
        self.m = state.num_qubits
        self.state = state

    @property
    def amplitudes(self) -> np.ndarray:
        return self.state.amplitudes

    def __repr__(self) -> str:
        return f"SecretState(m={self.m})"


@dataclass(frozen=True)
class Transcript:
    """Complete classical record of one run.

    sign_outcomes is indexed [group][controller slot]; minus_counts[i] is the
    number of controllers whose group-i photon came out |-x>; parities[i] is
    the product of the group's Bell parity with its controller sign parities.
    """

    config: ProtocolConfig
    bell_outcomes: tuple[BellOutcome, ...]
    sign_outcomes: tuple[tuple[SignOutcome, ...], ...]
    minus_counts: tuple[int, ...]
    parities: tuple[int, ...]
    corrections: tuple[CorrectionOp, ...]
    branch_probability: float
    fidelity: float
    classical_bits: int


@dataclass(frozen=True)
class RunResult:
    """Transcript plus the receiver's register before and after repair."""

    transcript: Transcript
    pre_correction: PureState
    reconstructed: PureState


_INV_SQRT2 = 1.0 / math.sqrt(2.0)


def prepare_ghz(k: int) -> PureState:
    """GHZ state (|0...0> + |1...1>)/sqrt(2) over k qubits."""
    if k < 2:
        raise ValueError(f"a GHZ state needs at least 2 qubits, got {k}")
    cap = max_qubits()
    if k > cap:
        raise CapacityError(f"GHZ over {k} qubits exceeds the cap of {cap}")
    amps = np.zeros(1 << k, dtype=np.complex128)
    amps[0] = amps[-1] = _INV_SQRT2
    return PureState._from_owned(amps)


def random_secret(m: int, rng: np.random.Generator) -> SecretState:
    """Secret with Haar-distributed direction: normalized complex Gaussians."""
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    z = rng.standard_normal(1 << m) + 1j * rng.standard_normal(1 << m)
    return SecretState(z / np.linalg.norm(z))


def compute_correction(bit_value: int, parity: int) -> CorrectionOp:
    """Correction for one receiver qubit from the group's bit value and parity."""
    if bit_value not in (0, 1):
        raise ValueError(f"bit value must be 0 or 1, got {bit_value}")
    if parity not in (1, -1):
        raise ValueError(f"parity must be +1 or -1, got {parity}")
    if bit_value == 0:
        return CorrectionOp.U0 if parity == 1 else CorrectionOp.U1
    return CorrectionOp.U2 if parity == 1 else CorrectionOp.U3


def classical_summary(
    bells: Sequence[BellOutcome],
    sign_rows: Sequence[Sequence[SignOutcome]],
) -> tuple[tuple[int, ...], tuple[int, ...], tuple[CorrectionOp, ...]]:
    """(minus_counts, parities, corrections) from the published results."""
    minus = tuple(
        sum(1 for s in row if s is SignOutcome.MINUS) for row in sign_rows
    )
    parities = tuple(
        b.parity * math.prod(s.parity for s in row)
        for b, row in zip(bells, sign_rows)
    )
    corrections = tuple(
        compute_correction(b.bit_value, p) for b, p in zip(bells, parities)
    )
    return minus, parities, corrections


def assemble_composite(config: ProtocolConfig, secret: SecretState) -> PureState:
    """Secret tensored with m GHZ channels of n+2 photons each."""
    ghz = prepare_ghz(config.n + 2)
    state = secret.state
    for _ in range(config.m):
        state = tensor(state, ghz)
    return state


def _require_match(config: ProtocolConfig, secret: SecretState) -> None:
    if secret.m != config.m:
        raise ValueError(f"secret has {secret.m} qubits but config.m = {config.m}")


def _finish(
    config: ProtocolConfig,
    secret: SecretState,
    bells: Sequence[BellOutcome],
    sign_rows: Sequence[Sequence[SignOutcome]],
    probability: float,
    pre_state: PureState,
) -> RunResult:
    """Shared tail: corrections, reconstruction, fidelity, transcript."""
    minus, parities, corrections = classical_summary(bells, sign_rows)
    post = pre_state
    for q, op in enumerate(corrections):
        post = apply_gate(post, q, op.matrix)
    transcript = Transcript(
        config=config,
        bell_outcomes=tuple(bells),
        sign_outcomes=tuple(tuple(row) for row in sign_rows),
        minus_counts=minus,
        parities=parities,
        corrections=corrections,
        branch_probability=probability,
        fidelity=fidelity(post, secret.state),
        classical_bits=(config.n + 2) * config.m,
    )
    return RunResult(transcript, pre_state, post)


def execute(config: ProtocolConfig, secret: SecretState) -> RunResult:
    """Run the protocol once and return the transcript plus receiver states."""
    _require_match(config, secret)
    policy = config.outcome_policy
    if policy == ENUMERATE:
        raise ValueError("the enumerate policy is driven by enumerate_branches()")
    forced = policy.outcomes if isinstance(policy, Forced) else None
    rng = np.random.default_rng(config.seed) if forced is None else None

    m, n = config.m, config.n
    state = assemble_composite(config, secret)
    live = LiveRegister(RegisterLayout(m, n).labels())
    probability = 1.0

    bells: list[BellOutcome] = []
    for i in range(1, m + 1):
        want = forced[i - 1] if forced is not None else None
        qa = live.position(("x", i))
        qb = live.position(("b", i, 0))
        outcome, p, state = measure_bell(state, qa, qb, forced=want, rng=rng)
        live.remove(("x", i), ("b", i, 0))
        probability *= p
        bells.append(outcome)

    sign_rows: list[list[SignOutcome]] = [[None] * n for _ in range(m)]
    for slot, agent in enumerate(config.controllers, start=1):
        for i in range(1, m + 1):
            want = forced[m + (i - 1) * n + (slot - 1)] if forced is not None else None
            q = live.position(("b", i, agent))
            outcome, p, state = measure_sigma_x(state, q, forced=want, rng=rng)
            live.remove(("b", i, agent))
            probability *= p
            sign_rows[i - 1][slot - 1] = outcome

    # Only the receiver's photons remain, one per group, in group order.
    return _finish(config, secret, bells, sign_rows, probability, state)


def run_protocol(config: ProtocolConfig, secret: SecretState) -> Transcript:
    """Run the protocol once; see execute() for the receiver states as well."""
    return execute(config, secret).transcript


def enumerate_branches(
    config: ProtocolConfig,
    secret: SecretState,
    *,
    branch_limit: int = DEFAULT_BRANCH_LIMIT,
) -> list[Transcript]:
    """One Transcript per measurement branch, exhaustively.

    Branches are ordered by their forced-outcome tuple (Bell outcomes in
    BELL_OUTCOMES order per group, then the group-major sign matrix). Each
    transcript matches run_protocol() with that branch forced, field for
    field. Collapsed prefixes are shared across branches, so the whole tree
    costs little more than the number of its nodes.
    """
    _require_match(config, secret)
    total = config.branch_count
    if total > branch_limit:
        raise BranchLimitError(
            f"{total} branches exceed the limit of {branch_limit}"
        )

    m, n = config.m, config.n
    layout = RegisterLayout(m, n)

    # Measurement plan in execution order: Alice's Bell pairs, then each
    # controller slot across all groups.
    plan: list[tuple] = [("bell", i) for i in range(1, m + 1)]
    for slot, agent in enumerate(config.controllers, start=1):
        plan.extend(("sign", i, slot, agent) for i in range(1, m + 1))

    collected: list[tuple[tuple[int, ...], Transcript]] = []

    def walk(
        state: PureState,
        labels: list[tuple],
        depth: int,
        probability: float,
        bells: list[BellOutcome],
        signs: dict[tuple[int, int], SignOutcome],
    ) -> None:
        if depth == len(plan):
            sign_rows = [[signs[(i, j)] for j in range(1, n + 1)] for i in range(1, m + 1)]
            flat = tuple(bells) + tuple(s for row in sign_rows for s in row)
            branch_config = replace(config, outcome_policy=Forced(flat))
            result = _finish(branch_config, secret, bells, sign_rows, probability, state)
            key = tuple(BELL_OUTCOMES.index(b) for b in bells) + tuple(
                SIGN_OUTCOMES.index(s) for row in sign_rows for s in row
            )
            collected.append((key, result.transcript))
            return
        step = plan[depth]
        if step[0] == "bell":
            i = step[1]
            la, lb = ("x", i), ("b", i, 0)
            qa, qb = labels.index(la), labels.index(lb)
            rest = [l for l in labels if l not in (la, lb)]
            for outcome in BELL_OUTCOMES:
                _, p, post = measure_bell(state, qa, qb, forced=outcome)
                walk(post, rest, depth + 1, probability * p, bells + [outcome], signs)
        else:
            _, i, slot, agent = step
            label = ("b", i, agent)
            q = labels.index(label)
            rest = [l for l in labels if l != label]
            for outcome in SIGN_OUTCOMES:
                _, p, post = measure_sigma_x(state, q, forced=outcome)
                walk(
                    post,
                    rest,
                    depth + 1,
                    probability * p,
                    bells,
                    {**signs, (i, slot): outcome},
                )

    walk(assemble_composite(config, secret), list(layout.labels()), 0, 1.0, [], {})
    collected.sort(key=lambda item: item[0])
    return [transcript for _, transcript in collected]
