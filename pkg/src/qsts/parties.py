"""Distributed execution: the parties as state machines over a message bus.

The joint quantum state lives in one shared backend; "distributing the
photons" is modeled purely as qubit ownership, so only the classical traffic
is simulated faithfully. Alice publishes her Bell results, each controller
publishes its sign results, and the receiver repairs its photons once every
result has arrived. The bus is deterministic FIFO; tests may permute the
delivery order, which must not change the transcript.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import OwnershipError, SessionOrderError, SessionStallError
from .protocol import (
    ENUMERATE,
    Forced,
    LiveRegister,
    ProtocolConfig,
    RegisterLayout,
    SecretState,
    Transcript,
    assemble_composite,
    classical_summary,
)
from .statevector import (
    BellOutcome,
    SignOutcome,
    apply_gate,
    fidelity,
    measure_bell,
    measure_sigma_x,
)


@dataclass(frozen=True)
class PartyId:
    """Session role: Alice, a controller slot in [1, n], or the receiver."""

    role: str
    index: int = 0

    def __str__(self) -> str:
        return f"{self.role}:{self.index}" if self.role == "controller" else self.role


ALICE = PartyId("alice")
RECEIVER = PartyId("receiver")


def controller(slot: int) -> PartyId:
    if slot < 1:
        raise ValueError(f"controller slots are 1-based, got {slot}")
    return PartyId("controller", slot)


BELL_RESULTS = "bell_results"
SIGN_RESULTS = "sign_results"
DONE = "done"


@dataclass(frozen=True)
class ClassicalMessage:
    session: int
    sender: PartyId
    kind: str
    payload: tuple = ()


def format_message(msg: ClassicalMessage) -> str:
    payload = ",".join(o.value for o in msg.payload)
    return f"session={msg.session} sender={msg.sender} kind={msg.kind} payload={payload}"


def format_message_log(log: Sequence[ClassicalMessage]) -> str:
    """Line-delimited rendering of a session log, one message per line."""
    return "".join(format_message(msg) + "\n" for msg in log)


def published_bits(log: Sequence[ClassicalMessage]) -> int:
    """Information content of the published results: 2 bits per Bell outcome,
    1 bit per sign."""
    bits = 0
    for msg in log:
        if msg.kind == BELL_RESULTS:
            bits += 2 * len(msg.payload)
        elif msg.kind == SIGN_RESULTS:
            bits += len(msg.payload)
    return bits


class QuantumBackend:
    """Shared simulated joint state; parties may only touch their own photons."""

    def __init__(self, config: ProtocolConfig, secret: SecretState) -> None:
        if secret.m != config.m:
            raise ValueError(f"secret has {secret.m} qubits but config.m = {config.m}")
        self.config = config
        self._state = assemble_composite(config, secret)
        self._live = LiveRegister(RegisterLayout(config.m, config.n).labels())
        self._rng = np.random.default_rng(config.seed)
        self.branch_probability = 1.0

    def _agent_of(self, party: PartyId) -> int:
        return self.config.controllers[party.index - 1]

    def measure_bell_group(
        self, party: PartyId, group: int, forced: BellOutcome | None = None
    ) -> BellOutcome:
        if party != ALICE:
            raise OwnershipError(f"{party} may not measure Alice's photons")
        la, lb = ("x", group), ("b", group, 0)
        qa, qb = self._live.position(la), self._live.position(lb)
        outcome, p, self._state = measure_bell(
            self._state, qa, qb, forced=forced, rng=self._rng
        )
        self._live.remove(la, lb)
        self.branch_probability *= p
        return outcome

    def measure_sign_photon(
        self, party: PartyId, group: int, forced: SignOutcome | None = None
    ) -> SignOutcome:
        if party.role != "controller" or not 1 <= party.index <= self.config.n:
            raise OwnershipError(f"{party} may not take controller measurements")
        label = ("b", group, self._agent_of(party))
        q = self._live.position(label)
        outcome, p, self._state = measure_sigma_x(
            self._state, q, forced=forced, rng=self._rng
        )
        self._live.remove(label)
        self.branch_probability *= p
        return outcome

    def apply_correction(self, party: PartyId, group: int, op) -> None:
        if party != RECEIVER:
            raise OwnershipError(f"{party} may not repair the receiver's photons")
        q = self._live.position(("b", group, self.config.receiver_agent))
        self._state = apply_gate(self._state, q, op.matrix)

    def receiver_state(self):
        if len(self._live) != self.config.m:
            raise SessionOrderError(
                f"{len(self._live)} qubits still live; all measurements must finish first"
            )
        return self._state


class _Receiver:
    """Collects published results, then repairs its photons."""

    def __init__(self, config: ProtocolConfig) -> None:
        self.config = config
        self.bells: tuple[BellOutcome, ...] | None = None
        self.signs: dict[int, tuple[SignOutcome, ...]] = {}

    def deliver(self, msg: ClassicalMessage) -> None:
        if msg.kind == BELL_RESULTS:
            if msg.sender != ALICE:
                raise SessionOrderError(f"Bell results must come from Alice, not {msg.sender}")
            if self.bells is not None:
                raise SessionOrderError("Alice published her results twice")
            self.bells = msg.payload
        elif msg.kind == SIGN_RESULTS:
            slot = msg.sender.index
            if msg.sender.role != "controller" or not 1 <= slot <= self.config.n:
                raise SessionOrderError(f"sign results must come from a controller, not {msg.sender}")
            if slot in self.signs:
                raise SessionOrderError(f"controller {slot} published its results twice")
            self.signs[slot] = msg.payload
        else:
            raise SessionOrderError(f"unexpected message kind {msg.kind!r}")

    @property
    def complete(self) -> bool:
        return self.bells is not None and len(self.signs) == self.config.n

    def missing(self) -> list[PartyId]:
        out: list[PartyId] = [] if self.bells is not None else [ALICE]
        out.extend(
            controller(slot)
            for slot in range(1, self.config.n + 1)
            if slot not in self.signs
        )
        return out

    def reconstruct(self, backend: QuantumBackend, session: int) -> tuple[ClassicalMessage, tuple, tuple, tuple, tuple]:
        """Apply the corrections; returns the Done message and the classical
        record (sign matrix, minus counts, parities, corrections)."""
        if not self.complete:
            raise SessionOrderError(f"results still missing from {self.missing()}")
        m, n = self.config.m, self.config.n
        sign_rows = tuple(
            tuple(self.signs[slot][i] for slot in range(1, n + 1)) for i in range(m)
        )
        minus, parities, corrections = classical_summary(self.bells, sign_rows)
        for group, op in enumerate(corrections, start=1):
            backend.apply_correction(RECEIVER, group, op)
        done = ClassicalMessage(session, RECEIVER, DONE)
        return done, sign_rows, minus, parities, corrections


def _forced_parts(config: ProtocolConfig):
    """Split a Forced policy into Alice's outcomes and per-slot sign tuples."""
    policy = config.outcome_policy
    if not isinstance(policy, Forced):
        return None, None
    m, n = config.m, config.n
    bells = policy.outcomes[:m]
    by_slot = {
        slot: tuple(policy.outcomes[m + i * n + (slot - 1)] for i in range(m))
        for slot in range(1, n + 1)
    }
    return bells, by_slot


def _produce_messages(
    config: ProtocolConfig, backend: QuantumBackend, session: int
) -> list[ClassicalMessage]:
    """Let Alice and the controllers measure (canonical order) and publish."""
    forced_bells, forced_signs = _forced_parts(config)
    m, n = config.m, config.n
    messages = []
    bells = tuple(
        backend.measure_bell_group(
            ALICE, i, forced=None if forced_bells is None else forced_bells[i - 1]
        )
        for i in range(1, m + 1)
    )
    messages.append(ClassicalMessage(session, ALICE, BELL_RESULTS, bells))
    for slot in range(1, n + 1):
        party = controller(slot)
        signs = tuple(
            backend.measure_sign_photon(
                party, i, forced=None if forced_signs is None else forced_signs[slot][i - 1]
            )
            for i in range(1, m + 1)
        )
        messages.append(ClassicalMessage(session, party, SIGN_RESULTS, signs))
    return messages


def _drive(
    config: ProtocolConfig,
    secret: SecretState,
    session: int,
    delivery_order: Callable[[list[ClassicalMessage]], Sequence[ClassicalMessage]] | None,
    drop_results_from: PartyId | None,
    fill_guesses: dict[int, tuple[SignOutcome, ...]] | None,
) -> tuple[Transcript, list[ClassicalMessage]]:
    if config.outcome_policy == ENUMERATE:
        raise ValueError("sessions run a single branch; use enumerate_branches()")
    backend = QuantumBackend(config, secret)
    produced = _produce_messages(config, backend, session)
    if drop_results_from is not None:
        produced = [msg for msg in produced if msg.sender != drop_results_from]
    if delivery_order is not None:
        reordered = list(delivery_order(list(produced)))
        if sorted(map(repr, reordered)) != sorted(map(repr, produced)):
            raise ValueError("delivery_order must permute the pending messages")
        produced = reordered

    receiver = _Receiver(config)
    queue = deque(produced)
    log: list[ClassicalMessage] = []
    budget = 10 * (config.n + 2)
    for _ in range(budget):
        if queue:
            msg = queue.popleft()
            log.append(msg)
            receiver.deliver(msg)
        if receiver.complete:
            break
        if not queue and fill_guesses is not None:
            missing = receiver.missing()
            if all(p.role == "controller" and p.index in fill_guesses for p in missing):
                for party in missing:
                    receiver.deliver(
                        ClassicalMessage(
                            session, controller(party.index), SIGN_RESULTS,
                            fill_guesses[party.index],
                        )
                    )
                break
    if not receiver.complete:
        raise SessionStallError(
            f"session incomplete after {budget} steps; missing results from "
            f"{[str(p) for p in receiver.missing()]}"
        )

    done, sign_rows, minus, parities, corrections = receiver.reconstruct(backend, session)
    log.append(done)
    transcript = Transcript(
        config=config,
        bell_outcomes=receiver.bells,
        sign_outcomes=sign_rows,
        minus_counts=minus,
        parities=parities,
        corrections=corrections,
        branch_probability=backend.branch_probability,
        fidelity=fidelity(backend.receiver_state(), secret.state),
        classical_bits=(config.n + 2) * config.m,
    )
    return transcript, log


def run_session(
    config: ProtocolConfig,
    secret: SecretState,
    *,
    session: int = 1,
    delivery_order: Callable[[list[ClassicalMessage]], Sequence[ClassicalMessage]] | None = None,
    drop_results_from: PartyId | None = None,
) -> tuple[Transcript, list[ClassicalMessage]]:
    """Run one distributed session; the transcript must equal run_protocol's.

    `delivery_order` permutes bus delivery (testing hook); `drop_results_from`
    silently discards one party's published results, which stalls the session
    once the step budget runs out.
    """
    return _drive(config, secret, session, delivery_order, drop_results_from, None)


def run_session_with_withholding(
    config: ProtocolConfig,
    secret: SecretState,
    withheld: PartyId,
    guess_rng: np.random.Generator | None = None,
    *,
    guesses: Sequence[SignOutcome] | None = None,
    session: int = 1,
) -> Transcript:
    """Session in which one controller measures but never publishes.

    The receiver substitutes sign guesses for the withheld controller's m
    results (uniform from guess_rng, or the explicit `guesses`) and proceeds;
    the transcript records the receiver's view, and its fidelity reflects the
    guess quality.
    """
    if withheld.role != "controller" or not 1 <= withheld.index <= config.n:
        raise ValueError(f"only a controller's results can be withheld, got {withheld}")
    if guesses is not None:
        guesses = tuple(guesses)
        if len(guesses) != config.m or not all(isinstance(g, SignOutcome) for g in guesses):
            raise ValueError(f"need {config.m} sign guesses, got {guesses!r}")
    else:
        if guess_rng is None:
            raise ValueError("provide guess_rng or explicit guesses")
        guesses = tuple(
            SignOutcome.PLUS if guess_rng.random() < 0.5 else SignOutcome.MINUS
            for _ in range(config.m)
        )
    transcript, _ = _drive(
        config, secret, session, None, withheld, {withheld.index: guesses}
    )
    return transcript
