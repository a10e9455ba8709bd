"""Statevector simulation and verification suite for symmetric multiparty
quantum state sharing: an m-qubit secret split among n+1 agents over m GHZ
channels, reconstructed from Bell and sign measurement results with local
corrections only.
"""

__version__ = "0.1.0"

from .errors import (
    BranchLimitError,
    CapacityError,
    DegenerateSecretError,
    OwnershipError,
    QstsError,
    SessionError,
    SessionOrderError,
    SessionStallError,
    TableDerivationError,
    ZeroProbabilityError,
)
from .metrics import EfficiencyReport, efficiency, threshold_success
from .parties import (
    ALICE,
    RECEIVER,
    ClassicalMessage,
    PartyId,
    QuantumBackend,
    controller,
    format_message_log,
    published_bits,
    run_session,
    run_session_with_withholding,
)
from .protocol import (
    ENUMERATE,
    SAMPLE,
    Forced,
    ProtocolConfig,
    RegisterLayout,
    RunResult,
    SecretState,
    Transcript,
    compute_correction,
    enumerate_branches,
    execute,
    prepare_ghz,
    random_secret,
    run_protocol,
)
from .statevector import (
    BELL_OUTCOMES,
    SIGN_OUTCOMES,
    BellOutcome,
    CorrectionOp,
    PureState,
    SignOutcome,
    apply_gate,
    bell_probabilities,
    fidelity,
    max_qubits,
    measure_bell,
    measure_sigma_x,
    sigma_x_probabilities,
    tensor,
)
from .tables import (
    CoefficientRow,
    TableDiffReport,
    TableMismatch,
    TwoAgentRow,
    derive_coefficient_table,
    derive_correction_map,
    derive_two_agent_table,
    diff_against_golden,
    load_golden_coefficients,
    load_golden_corrections,
    load_golden_two_agent,
)
