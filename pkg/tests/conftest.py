import os

import numpy as np
import pytest

from sossa import operators as ops


def kron_dense(letters: str) -> np.ndarray:
    """Independent dense oracle: literal 2x2 matrices, qubit 1 = low bit."""
    mats = {
        "I": np.eye(2, dtype=complex),
        "X": np.array([[0, 1], [1, 0]], dtype=complex),
        "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
        "Z": np.array([[1, 0], [0, -1]], dtype=complex),
    }
    out = np.array([[1.0]], dtype=complex)
    for ch in reversed(letters):
        out = np.kron(out, mats[ch])
    return out


@pytest.fixture(scope="session")
def workers() -> int:
    return max(1, min(2, os.cpu_count() or 1))


def random_lcu(rng, n_qubits, n_terms) -> ops.LcuHamiltonian:
    letters = "IXYZ"
    terms = {}
    while len(terms) < n_terms:
        word = "".join(rng.choice(list(letters)) for _ in range(n_qubits))
        if set(word) == {"I"}:
            continue
        terms[word] = float(rng.standard_normal())
    return ops.LcuHamiltonian.from_terms(
        n_qubits, [ops.PauliTerm(c, w) for w, c in terms.items()]
    )
