from typing import Dict

import numpy as np

from core.errors import PreconditionError

LETTERS = ("0", "x", "y", "z")

IDENTITY = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)

# (4, 2, 2) stack indexed by the physical letter of an MPO tensor
PAULI_MATRICES = np.stack([IDENTITY, SIGMA_X, SIGMA_Y, SIGMA_Z])

# two-site strings, p = 4 * s_left + s_right
TWO_SITE_PAULIS = np.stack([np.kron(PAULI_MATRICES[a], PAULI_MATRICES[b]) for a in range(4) for b in range(4)])

_LETTER_INDEX: Dict[str, int] = {"0": 0, "i": 0, "1": 0, "x": 1, "y": 2, "z": 3}


def letter_index(letter: str) -> int:
    """
    Maps a Pauli letter to its physical index.

    Args:
        letter (str): One of '0'/'i' (identity), 'x', 'y', 'z' (case-insensitive).

    Returns:
        int: Index into PAULI_MATRICES.

    Raises:
        PreconditionError: If the letter is not a Pauli label.
    """
    try:
        return _LETTER_INDEX[letter.lower()]
    except (KeyError, AttributeError):
        raise PreconditionError(f"Unknown Pauli letter: {letter!r}")


def pauli_matrix(letter: str) -> np.ndarray:
    return PAULI_MATRICES[letter_index(letter)]
