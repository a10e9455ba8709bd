import numpy as np
import pytest

from qsts import PureState, SecretState, random_secret


def haar_state(num_qubits: int, seed: int) -> PureState:
    rng = np.random.default_rng(seed)
    z = rng.standard_normal(1 << num_qubits) + 1j * rng.standard_normal(1 << num_qubits)
    return PureState(z / np.linalg.norm(z))


@pytest.fixture
def haar_secret_2q() -> SecretState:
    return random_secret(2, np.random.default_rng(12345))
