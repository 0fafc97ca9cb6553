"""Dense statevectors, local operators, partial traces and von Neumann entropy.

Qubit ``k`` is bit ``k`` of the basis index, so for two qubits the basis
order is ``|q1 q0> = 00, 01, 10, 11`` with qubit 0 the least significant bit.
Every mask, matrix and example in the package uses this convention. A
k-qubit local matrix acting on ``targets`` uses the same rule internally:
``targets[j]`` is bit ``j`` of the local index.

All entropies are in nats.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import CapError, NumericError, ParseError

MAX_QUBITS = 24
MAX_ENTROPY_DIM = 4096

NORM_TOL = 1e-12
HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-10
UNITARY_TOL = 1e-10
EIG_CLIP = 1e-12
NEG_EIG_TOL = 1e-10

Mask = tuple[int, ...]
ArrayLike = Union[np.ndarray, Sequence[complex]]


def as_mask(qubits: Iterable[int], n_qubits: int | None = None) -> Mask:
    """Normalise ``qubits`` to a strictly increasing tuple of indices.

    Raises ParseError on duplicates, negative indices, or indices not below
    ``n_qubits`` (when given).
    """
    items = [int(q) for q in qubits]
    mask = tuple(sorted(items))
    if len(set(mask)) != len(mask):
        raise ParseError(f"duplicate qubit index in mask {items}")
    if mask and mask[0] < 0:
        raise ParseError(f"negative qubit index in mask {items}")
    if n_qubits is not None and mask and mask[-1] >= n_qubits:
        raise ParseError(f"qubit index {mask[-1]} out of range for {n_qubits} qubits")
    return mask


def complement(mask: Iterable[int], n_qubits: int) -> Mask:
    chosen = set(mask)
    return tuple(q for q in range(n_qubits) if q not in chosen)


def _check_size(n_qubits: int) -> None:
    if n_qubits < 1:
        raise ParseError(f"need at least one qubit, got {n_qubits}")
    if n_qubits > MAX_QUBITS:
        raise CapError(f"{n_qubits} qubits exceeds the statevector cap of {MAX_QUBITS}")


@dataclass(frozen=True, eq=False)
class PureState:
    """Normalised amplitude vector over ``n_qubits`` qubits.

    Construct through :func:`make_state` when the input may not be
    normalised; the constructor itself only validates.
    """

    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        _check_size(self.n_qubits)
        amps = np.array(self.amplitudes, dtype=np.complex128).reshape(-1)
        if amps.shape[0] != 2**self.n_qubits:
            raise ParseError(
                f"expected {2**self.n_qubits} amplitudes for {self.n_qubits} qubits, got {amps.shape[0]}"
            )
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > NORM_TOL:
            raise NumericError(f"state norm {norm!r} differs from 1 by more than {NORM_TOL}")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def dim(self) -> int:
        return 2**self.n_qubits

    def tensor(self) -> np.ndarray:
        """Amplitudes as an n-axis tensor; axis ``a`` is qubit ``n-1-a``."""
        return self.amplitudes.reshape((2,) * self.n_qubits)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def kron(self, other: "PureState") -> "PureState":
        """Tensor product with ``other`` placed on the qubits above this state's."""
        return PureState(self.n_qubits + other.n_qubits, np.kron(other.amplitudes, self.amplitudes))

    def inner(self, other: "PureState") -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def expectation(self, matrix: np.ndarray, targets: Iterable[int]) -> complex:
        """<psi| O |psi> for a local operator ``matrix`` on ``targets``."""
        return complex(np.vdot(self.amplitudes, apply_matrix(self, matrix, targets)))

    def __repr__(self):
        return f"PureState(n_qubits={self.n_qubits})"


def make_state(n_qubits: int, amplitudes: ArrayLike) -> PureState:
    """Build a normalised state from an arbitrary non-zero amplitude list."""
    _check_size(n_qubits)
    amps = np.asarray(amplitudes, dtype=np.complex128).reshape(-1)
    if amps.shape[0] != 2**n_qubits:
        raise ParseError(f"expected {2**n_qubits} amplitudes for {n_qubits} qubits, got {amps.shape[0]}")
    norm = np.linalg.norm(amps)
    if not np.isfinite(norm):
        raise ParseError("amplitudes contain non-finite values")
    if norm == 0.0:
        raise ParseError("zero vector cannot be normalised")
    return PureState(n_qubits, amps / norm)


def basis_state(n_qubits: int, bits: int | Sequence[int] = 0) -> PureState:
    """Computational basis state; ``bits`` is an index or a per-qubit list."""
    if not isinstance(bits, (int, np.integer)):
        bits = sum(int(b) << q for q, b in enumerate(bits))
    amps = np.zeros(2**n_qubits, dtype=np.complex128)
    amps[int(bits)] = 1.0
    return PureState(n_qubits, amps)


def product_state(*local: ArrayLike) -> PureState:
    """Product of single-register vectors, first argument on the lowest qubits."""
    amps = np.ones(1, dtype=np.complex128)
    n = 0
    for vec in local:
        vec = np.asarray(vec, dtype=np.complex128).reshape(-1)
        k = int(round(np.log2(vec.shape[0])))
        if 2**k != vec.shape[0]:
            raise ParseError(f"factor of length {vec.shape[0]} is not a qubit register")
        amps = np.kron(vec, amps)
        n += k
    return make_state(n, amps)


@dataclass(frozen=True, eq=False)
class DensityOperator:
    """Hermitian, positive semidefinite, unit-trace matrix on ``log2(dim)`` qubits."""

    matrix: np.ndarray

    def __post_init__(self):
        mat = np.array(self.matrix, dtype=np.complex128)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ParseError(f"density matrix must be square, got shape {mat.shape}")
        dim = mat.shape[0]
        if dim & (dim - 1):
            raise ParseError(f"density matrix dimension {dim} is not a power of two")
        if np.max(np.abs(mat - mat.conj().T)) > HERMITIAN_TOL:
            raise NumericError("density matrix is not Hermitian")
        if abs(np.trace(mat).real - 1.0) > TRACE_TOL:
            raise NumericError(f"density matrix trace {np.trace(mat).real!r} is not 1")
        if np.linalg.eigvalsh(mat)[0] < -NEG_EIG_TOL:
            raise NumericError("density matrix has a negative eigenvalue")
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_qubits(self) -> int:
        return self.dim.bit_length() - 1

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)

    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))

    def __repr__(self):
        return f"DensityOperator(dim={self.dim})"


def _local_permutation(qubits: Sequence[int]) -> tuple[np.ndarray, Mask]:
    """Index map taking sorted-order local indices to ``qubits``-order ones."""
    order = sorted(range(len(qubits)), key=lambda j: qubits[j])
    k = len(qubits)
    idx = np.arange(2**k)
    old = np.zeros_like(idx)
    for new_bit, old_bit in enumerate(order):
        old |= ((idx >> new_bit) & 1) << old_bit
    return old, tuple(qubits[j] for j in order)


def local_operator(matrix: np.ndarray, qubits: Sequence[int]) -> tuple[np.ndarray, Mask]:
    """Re-express a matrix given on ``qubits`` (any order) on the sorted mask."""
    mat = np.asarray(matrix, dtype=np.complex128)
    k = len(qubits)
    if mat.shape != (2**k, 2**k):
        raise ParseError(f"operator shape {mat.shape} does not act on {k} qubits")
    old, targets = _local_permutation(list(qubits))
    if len(set(targets)) != k:
        raise ParseError(f"duplicate target qubit in {list(qubits)}")
    return mat[np.ix_(old, old)], targets


@dataclass(frozen=True, eq=False)
class UnitaryOp:
    """Unitary ``matrix`` on the strictly increasing mask ``targets``.

    Use :meth:`on` to give the qubits in any order (e.g. control first).
    """

    targets: Mask
    matrix: np.ndarray
    label: str = ""

    def __post_init__(self):
        targets = as_mask(self.targets)
        if tuple(self.targets) != targets:
            raise ParseError("UnitaryOp targets must be strictly increasing; use UnitaryOp.on")
        mat = np.array(self.matrix, dtype=np.complex128)
        k = len(targets)
        if mat.shape != (2**k, 2**k):
            raise ParseError(f"unitary shape {mat.shape} does not act on {k} qubits")
        if np.max(np.abs(mat.conj().T @ mat - np.eye(2**k))) > UNITARY_TOL:
            raise NumericError("matrix is not unitary")
        mat.setflags(write=False)
        object.__setattr__(self, "targets", targets)
        object.__setattr__(self, "matrix", mat)

    @classmethod
    def on(cls, matrix: np.ndarray, qubits: Sequence[int], label: str = "") -> "UnitaryOp":
        mat, targets = local_operator(matrix, qubits)
        return cls(targets, mat, label)


def _as_permutation(mat: np.ndarray) -> np.ndarray | None:
    """``perm`` with ``mat |j> = |perm[j]>`` when ``mat`` is a 0/1 permutation matrix."""
    nonzero = mat != 0
    if not (np.all(nonzero.sum(axis=0) == 1) and np.all(nonzero.sum(axis=1) == 1)):
        return None
    if not np.all(mat[nonzero] == 1):
        return None
    return np.argmax(nonzero, axis=0)


def apply_matrix(state: PureState, matrix: np.ndarray, targets: Iterable[int]) -> np.ndarray:
    """Raw amplitudes of ``matrix`` (on sorted ``targets``) applied to ``state``.

    No unitarity or normalisation is assumed; projectors go through here too.
    """
    n = state.n_qubits
    targets = as_mask(targets, n)
    k = len(targets)
    if k == 0:
        raise ParseError("operator must act on at least one qubit")
    mat = np.asarray(matrix, dtype=np.complex128)
    diagonal = np.count_nonzero(mat - np.diag(np.diag(mat))) == 0
    perm = None if diagonal else _as_permutation(mat)
    if diagonal or perm is not None:
        # slice by slice over the local basis: one pass, no dense contraction
        axes = [n - 1 - q for q in targets]
        src = np.moveaxis(state.tensor(), axes, range(k))
        out = np.empty((2,) * n, dtype=np.complex128)
        dst = np.moveaxis(out, axes, range(k))
        bits = [tuple((l >> j) & 1 for j in range(k)) for l in range(2**k)]
        if diagonal:
            for l, d in enumerate(np.diag(mat)):
                dst[bits[l]] = src[bits[l]] * d
        else:
            for j, l in enumerate(perm):
                dst[bits[l]] = src[bits[j]]
        return out.reshape(-1)
    mat = mat.reshape((2,) * (2 * k))
    axes = [n - 1 - targets[k - 1 - i] for i in range(k)]
    out = np.tensordot(mat, state.tensor(), axes=(list(range(k, 2 * k)), axes))
    return np.moveaxis(out, list(range(k)), axes).reshape(-1)


def apply_unitary(state: PureState, op: UnitaryOp) -> PureState:
    if op.targets and op.targets[-1] >= state.n_qubits:
        raise ParseError(f"unitary targets {op.targets} out of range for {state.n_qubits} qubits")
    return PureState(state.n_qubits, apply_matrix(state, op.matrix, op.targets))


def _reduced_matrix(state: PureState, keep: Mask) -> np.ndarray:
    n = state.n_qubits
    keep_axes = [n - 1 - q for q in reversed(keep)]
    rest = [a for a in range(n) if a not in keep_axes]
    m = np.transpose(state.tensor(), keep_axes + rest).reshape(2 ** len(keep), -1)
    return m @ m.conj().T


def partial_trace(state: PureState, keep: Iterable[int]) -> DensityOperator:
    """Reduced density operator of ``keep``; kept qubit ``keep[j]`` is local bit ``j``."""
    keep = as_mask(keep, state.n_qubits)
    if not keep:
        raise ParseError("partial trace needs a non-empty mask")
    return DensityOperator(_reduced_matrix(state, keep))


def reduce_density(rho: DensityOperator | np.ndarray, keep: Iterable[int]) -> DensityOperator:
    """Partial trace of a density operator over everything outside ``keep``."""
    mat = rho.matrix if isinstance(rho, DensityOperator) else np.asarray(rho, dtype=np.complex128)
    n = mat.shape[0].bit_length() - 1
    keep = as_mask(keep, n)
    if not keep:
        raise ParseError("partial trace needs a non-empty mask")
    t = mat.reshape((2,) * (2 * n))
    keep_axes = [n - 1 - q for q in reversed(keep)]
    drop = [a for a in range(n) if a not in keep_axes]
    perm = keep_axes + drop + [a + n for a in keep_axes] + [a + n for a in drop]
    k, d = 2 ** len(keep), 2 ** len(drop)
    blocks = np.transpose(t, perm).reshape(k, d, k, d)
    return DensityOperator(np.einsum("ajbj->ab", blocks))


def entropy_from_eigenvalues(eigenvalues: np.ndarray) -> float:
    lam = np.asarray(eigenvalues, dtype=float)
    if lam.size and lam.min() < -NEG_EIG_TOL:
        raise NumericError(f"eigenvalue {lam.min()!r} below -{NEG_EIG_TOL}")
    lam = lam[lam > EIG_CLIP]
    s = float(-np.sum(lam * np.log(lam)))
    return max(s, 0.0)


def von_neumann_entropy(rho: DensityOperator | np.ndarray) -> float:
    """-tr(rho ln rho) in nats, ignoring eigenvalues at or below 1e-12."""
    mat = rho.matrix if isinstance(rho, DensityOperator) else np.asarray(rho, dtype=np.complex128)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ParseError(f"density matrix must be square, got shape {mat.shape}")
    if np.max(np.abs(mat - mat.conj().T)) > HERMITIAN_TOL:
        raise NumericError("entropy of a non-Hermitian matrix")
    return entropy_from_eigenvalues(np.linalg.eigvalsh(mat))


def cut_entropy(state: PureState, side: Iterable[int]) -> float:
    """Entanglement entropy across the bipartition {side, complement}.

    The reduced matrix is always taken on a canonical side (the smaller one,
    or the one holding qubit 0 on a tie) so the value depends only on the
    unordered bipartition; swapping sides returns the identical float.
    """
    n = state.n_qubits
    side = as_mask(side, n)
    rest = complement(side, n)
    if not side or not rest:
        raise ParseError("bipartition needs both sides non-empty")
    if len(side) > len(rest) or (len(side) == len(rest) and side[0] != 0):
        side = rest
    if 2 ** len(side) > MAX_ENTROPY_DIM:
        raise CapError(
            f"reduced dimension 2^{len(side)} exceeds the entropy cap of {MAX_ENTROPY_DIM}"
        )
    return entropy_from_eigenvalues(np.linalg.eigvalsh(_reduced_matrix(state, side)))


def subsystem_entropy(state: PureState, mask: Iterable[int]) -> float:
    """Entanglement entropy of a proper, non-empty subsystem ``mask``."""
    mask = as_mask(mask, state.n_qubits)
    if not mask or len(mask) == state.n_qubits:
        raise ParseError("subsystem entropy needs a proper, non-empty mask")
    return cut_entropy(state, mask)


def trace_distance(rho: DensityOperator | np.ndarray, sigma: DensityOperator | np.ndarray) -> float:
    a = rho.matrix if isinstance(rho, DensityOperator) else np.asarray(rho)
    b = sigma.matrix if isinstance(sigma, DensityOperator) else np.asarray(sigma)
    return float(0.5 * np.sum(np.abs(np.linalg.eigvalsh(a - b))))
