"""Exception types shared across the package."""


class QstsError(Exception):
    """Base class for package-specific errors."""


class CapacityError(QstsError):
    """A register would exceed the simulation qubit cap."""


class ZeroProbabilityError(QstsError):
    """A forced measurement branch has (near-)zero Born weight."""


class BranchLimitError(QstsError):
    """Exhaustive enumeration would exceed the configured branch limit."""


class DegenerateSecretError(QstsError):
    """The secret does not distinguish wrong corrections, so threshold
    statistics are meaningless for it."""


class TableDerivationError(QstsError):
    """A brute-force table derivation produced an unusable result
    (probe amplitude not close to +/-1, or an ambiguous repair)."""


class SessionError(QstsError):
    """A distributed session violated the protocol contract."""


class OwnershipError(SessionError):
    """A party touched a qubit the layout does not assign to it."""


class SessionOrderError(SessionError):
    """A party acted before the protocol allows it to."""


class SessionStallError(SessionError):
    """The session did not complete within its step budget."""
