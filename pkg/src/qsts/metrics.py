"""Efficiency accounting and threshold-success statistics.

Efficiency figures are exact rationals. Threshold success is measured by
exhaustive enumeration of the withheld controller's guess assignments on a
fixed forced branch, not by sampling, so the returned fraction is exact.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product

from .errors import DegenerateSecretError
from .protocol import (
    Forced,
    ProtocolConfig,
    SecretState,
    classical_summary,
    execute,
)
from .statevector import BellOutcome, SignOutcome, apply_gate, fidelity

# A guess branch counts as a success at this fidelity; a wrong guess on a
# generic secret must stay below the degeneracy margin.
SUCCESS_FIDELITY = 1 - 1e-9
DEGENERACY_MARGIN = 1 - 1e-6


@dataclass(frozen=True)
class EfficiencyReport:
    """Useful/transmitted qubit counts, classical-bit cost, and the ratios."""

    useful_qubits: int
    transmitted_qubits: int
    classical_bits: int
    qubit_efficiency: Fraction
    total_efficiency: Fraction


def efficiency(m: int, n: int) -> EfficiencyReport:
    """Exact efficiency figures for sharing m qubits among n+1 agents.

    Every transmitted qubit is useful, so the qubit efficiency is 1; the
    total efficiency additionally counts the (n+2)m published classical bits
    and reduces to (n+1)/(2n+3), independent of m.
    """
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    useful = (n + 1) * m
    transmitted = (n + 1) * m
    classical = (n + 2) * m
    return EfficiencyReport(
        useful_qubits=useful,
        transmitted_qubits=transmitted,
        classical_bits=classical,
        qubit_efficiency=Fraction(useful, transmitted),
        total_efficiency=Fraction(useful, transmitted + classical),
    )


def threshold_success(
    m: int,
    n: int,
    secret: SecretState,
    *,
    withheld: int = 1,
) -> Fraction:
    """Fraction of the withheld controller's guess assignments that repair.

    One forced branch is run; the receiver then replays its correction step
    once per guess assignment for controller slot `withheld`. The secret must
    be generic: if more than one assignment repairs it (to within the
    degeneracy margin), the statistic is meaningless and an error is raised.
    """
    if not 1 <= withheld <= n:
        raise ValueError(f"withheld slot must be in [1, {n}], got {withheld}")
    forced = Forced(
        (BellOutcome.PHI_PLUS,) * m + (SignOutcome.PLUS,) * (m * n)
    )
    config = ProtocolConfig(m=m, n=n, outcome_policy=forced)
    result = execute(config, secret)
    bells = result.transcript.bell_outcomes
    actual_rows = [list(row) for row in result.transcript.sign_outcomes]

    successes = 0
    near_successes = 0
    for guess in product((SignOutcome.PLUS, SignOutcome.MINUS), repeat=m):
        rows = [list(row) for row in actual_rows]
        for i in range(m):
            rows[i][withheld - 1] = guess[i]
        _, _, corrections = classical_summary(bells, rows)
        repaired = result.pre_correction
        for q, op in enumerate(corrections):
            repaired = apply_gate(repaired, q, op.matrix)
        fid = fidelity(repaired, secret.state)
        if fid >= SUCCESS_FIDELITY:
            successes += 1
        if fid >= DEGENERACY_MARGIN:
            near_successes += 1
    if near_successes != 1:
        raise DegenerateSecretError(
            f"{near_successes} guess assignments repair this secret; threshold "
            "statistics need a generic secret"
        )
    return Fraction(successes, 2**m)
