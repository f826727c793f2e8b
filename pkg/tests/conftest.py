import numpy as np
import pytest

X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
I2 = np.eye(2, dtype=complex)


def bell_projector(d: int) -> np.ndarray:
    """Unnormalized |I><I| with |I> = sum_n |n>|n>."""
    v = np.eye(d, dtype=complex).reshape(-1)
    return np.outer(v, v.conj())


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)
