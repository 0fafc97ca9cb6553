"""Standard gate matrices and constructors in the package's bit convention."""

import numpy as np

from .state import UnitaryOp

I2 = np.eye(2, dtype=np.complex128)
X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)
H = np.array([[1, 1], [1, -1]], dtype=np.complex128) / np.sqrt(2)

PAULI = {"I": I2, "X": X, "Y": Y, "Z": Z}

# local bit 0 = control, bit 1 = target
CNOT = np.array(
    [[1, 0, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0], [0, 1, 0, 0]], dtype=np.complex128
)


def hadamard(qubit: int) -> UnitaryOp:
    return UnitaryOp((qubit,), H, "H")


def pauli_x(qubit: int) -> UnitaryOp:
    return UnitaryOp((qubit,), X, "X")


def cnot(control: int, target: int) -> UnitaryOp:
    return UnitaryOp.on(CNOT, (control, target), "CNOT")


def permutation_unitary(mapping, n_local: int) -> np.ndarray:
    """Permutation matrix sending local basis index ``i`` to ``mapping[i]``."""
    dim = 2**n_local
    images = [mapping.get(i, i) for i in range(dim)] if isinstance(mapping, dict) else list(mapping)
    if sorted(images) != list(range(dim)):
        raise ValueError("mapping is not a permutation of the local basis")
    mat = np.zeros((dim, dim), dtype=np.complex128)
    mat[images, np.arange(dim)] = 1.0
    return mat
