"""Projective measurement, branch bookkeeping and pointer-register unitaries.

A scenario is a list of steps applied to a pure state: :class:`Couple` steps
are unitaries (a device, observer or world register recording a value) and
:class:`Readout` steps are projective measurements. :func:`build_tree`
evaluates every outcome of every readout and stores the result as a
:class:`BranchTree`. Collapse and branch modes share that tree and differ
only in the order of steps and in how shots are drawn from it: collapse mode
samples each readout's outcome in turn from its Born probabilities, and
branch mode picks a final branch by weight.

Pointer registers are qubit pairs ``(up, down)``: ``|00>`` is the ready
state, ``up=1`` records +1 and ``down=1`` records -1. ``|11>`` is never
populated.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence, Union

import numpy as np

from .errors import NumericError, ParseError
from .gates import permutation_unitary
from .state import (
    Mask,
    PureState,
    UnitaryOp,
    apply_matrix,
    apply_unitary,
    as_mask,
    local_operator,
    subsystem_entropy,
)

PROJECTOR_TOL = 1e-10
PROB_FLOOR = 1e-14
POINTER_LEAK_TOL = 1e-12

RngLike = Union[int, np.random.Generator, None]


def make_rng(seed: RngLike) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


@dataclass(frozen=True, eq=False)
class Observable:
    """Spectral decomposition ``sum_a a P_a`` of a local observable on ``targets``."""

    targets: Mask
    projectors: tuple[tuple[float, np.ndarray], ...]

    def __post_init__(self):
        targets = as_mask(self.targets)
        dim = 2 ** len(targets)
        total = np.zeros((dim, dim), dtype=np.complex128)
        mats = []
        for value, proj in self.projectors:
            p = np.array(proj, dtype=np.complex128)
            if p.shape != (dim, dim):
                raise ParseError(f"projector shape {p.shape} does not act on {len(targets)} qubits")
            if np.max(np.abs(p - p.conj().T)) > PROJECTOR_TOL:
                raise NumericError("projector is not Hermitian")
            if np.max(np.abs(p @ p - p)) > PROJECTOR_TOL:
                raise NumericError("projector is not idempotent")
            for _, q in mats:
                if np.max(np.abs(p @ q)) > PROJECTOR_TOL:
                    raise NumericError("projectors are not mutually orthogonal")
            p.setflags(write=False)
            mats.append((float(value), p))
            total += p
        if np.max(np.abs(total - np.eye(dim))) > PROJECTOR_TOL:
            raise NumericError("projectors do not sum to the identity")
        object.__setattr__(self, "targets", targets)
        object.__setattr__(self, "projectors", tuple(mats))

    @classmethod
    def from_projectors(cls, pairs: Iterable[tuple[float, np.ndarray]], qubits: Sequence[int]):
        converted = []
        targets: Mask = ()
        for value, proj in pairs:
            mat, targets = local_operator(proj, qubits)
            converted.append((value, mat))
        return cls(targets, tuple(converted))

    @classmethod
    def from_hermitian(cls, matrix: np.ndarray, qubits: Sequence[int], tol: float = 1e-9):
        """Group the eigenvectors of ``matrix`` into eigenspace projectors."""
        mat, targets = local_operator(matrix, qubits)
        if np.max(np.abs(mat - mat.conj().T)) > PROJECTOR_TOL:
            raise NumericError("observable is not Hermitian")
        vals, vecs = np.linalg.eigh(mat)
        groups: list[list[int]] = []
        for i, v in enumerate(vals):
            if groups and abs(v - vals[groups[-1][0]]) <= tol:
                groups[-1].append(i)
            else:
                groups.append([i])
        pairs = []
        for g in reversed(groups):
            block = vecs[:, g]
            pairs.append((float(np.mean(vals[g])), block @ block.conj().T))
        return cls(targets, tuple(pairs))

    @classmethod
    def sigma_z(cls, qubit: int) -> "Observable":
        up = np.diag([1.0, 0.0]).astype(np.complex128)
        down = np.diag([0.0, 1.0]).astype(np.complex128)
        return cls((qubit,), ((1.0, up), (-1.0, down)))

    def eigenvalues(self) -> list[float]:
        return [v for v, _ in self.projectors]


@dataclass(frozen=True)
class Outcome:
    value: float
    probability: float
    post_state: PureState | None


def project_outcomes(state: PureState, obs: Observable) -> list[Outcome]:
    """Every outcome of ``obs`` with its Born probability and collapsed state.

    Outcomes whose probability is below 1e-14 get ``post_state=None``.
    """
    if obs.targets[-1] >= state.n_qubits:
        raise ParseError(f"observable targets {obs.targets} out of range for {state.n_qubits} qubits")
    out = []
    for value, proj in obs.projectors:
        amps = apply_matrix(state, proj, obs.targets)
        prob = float(np.vdot(amps, amps).real)
        post = PureState(state.n_qubits, amps / np.sqrt(prob)) if prob > PROB_FLOOR else None
        out.append(Outcome(value, prob, post))
    if not any(o.post_state is not None for o in out):
        raise NumericError("every projection of the state vanishes")
    return out


def choose_many(probabilities: Sequence[float], uniforms: np.ndarray) -> np.ndarray:
    """Indices drawn by inverse CDF, one per uniform; zero entries never chosen."""
    p = np.asarray(probabilities, dtype=float)
    p = np.where(p > PROB_FLOOR, p, 0.0)
    cdf = np.cumsum(p / p.sum())
    idx = np.searchsorted(cdf, np.asarray(uniforms, dtype=float), side="right")
    # a uniform at the very top of the CDF maps to the last non-zero entry
    return np.minimum(idx, int(np.flatnonzero(p)[-1]))


def choose(probabilities: Sequence[float], uniform: float) -> int:
    return int(choose_many(probabilities, np.array([uniform]))[0])


def _mask_entropy(state: PureState, mask: Mask) -> float:
    if len(mask) == state.n_qubits:
        return 0.0
    return subsystem_entropy(state, mask)


@dataclass(frozen=True)
class MeasurementRecord:
    outcome: float
    probability: float
    post_state: PureState
    pre_entropy: float
    post_entropy: float
    targets: Mask


def born_measure(state: PureState, obs: Observable, rng: RngLike = None) -> MeasurementRecord:
    """Sample one outcome by Born's rule and collapse onto it."""
    outcomes = project_outcomes(state, obs)
    k = choose([o.probability for o in outcomes], make_rng(rng).random())
    chosen = outcomes[k]
    return MeasurementRecord(
        outcome=chosen.value,
        probability=chosen.probability,
        post_state=chosen.post_state,
        pre_entropy=_mask_entropy(state, obs.targets),
        post_entropy=_mask_entropy(chosen.post_state, obs.targets),
        targets=obs.targets,
    )


# ---------------------------------------------------------------- pointers


def copy_spin(spin: int, pointer: tuple[int, int], flip: bool = False, label: str = "") -> UnitaryOp:
    """Record the sigma-z value of ``spin`` in a ready pointer register.

    ``|up>|X0> -> |up>|X_up>`` and ``|down>|X0> -> |down>|X_down>``, with the
    roles swapped when ``flip`` is set. The map is completed to a permutation
    by swapping back on the already-written pointer states.
    """
    # local bits: 0 = spin, 1 = pointer up flag, 2 = pointer down flag
    up_flag, down_flag = 2, 4
    mapping = {}
    for s in (0, 1):
        recorded = (s == 0) != flip
        target = up_flag if recorded else down_flag
        mapping[s] = s | target
        mapping[s | target] = s
    return UnitaryOp.on(permutation_unitary(mapping, 3), (spin, *pointer), label)


def copy_pointer(source: tuple[int, int], target: tuple[int, int], label: str = "") -> UnitaryOp:
    """Record the value held in pointer ``source`` into ready pointer ``target``."""
    # local bits: 0,1 = source (up, down), 2,3 = target (up, down)
    mapping = {}
    for src, flag in ((1, 4), (2, 8)):
        mapping[src] = src | flag
        mapping[src | flag] = src
    return UnitaryOp.on(permutation_unitary(mapping, 4), (*source, *target), label)


def _leak_from_probabilities(probs: np.ndarray, n: int, pointer: tuple[int, int]) -> float:
    # probs is the n-axis probability tensor; axis a holds qubit n-1-a
    index = [slice(None)] * n
    index[n - 1 - pointer[0]] = 1
    index[n - 1 - pointer[1]] = 1
    return float(probs[tuple(index)].sum())


def pointer_leak(state: PureState, pointer: tuple[int, int]) -> float:
    """Population of the unused ``|11>`` pointer state."""
    probs = state.probabilities().reshape((2,) * state.n_qubits)
    return _leak_from_probabilities(probs, state.n_qubits, pointer)


def definiteness_operator() -> np.ndarray:
    """Projector onto the two recorded states of a pointer pair (C_up, C_down)."""
    return np.diag([0.0, 1.0, 1.0, 0.0]).astype(np.complex128)


def definiteness(state: PureState, pointer: tuple[int, int]) -> float:
    return float(state.expectation(definiteness_operator(), pointer).real)


# ---------------------------------------------------------------- steps


@dataclass(frozen=True)
class Couple:
    label: str
    ops: tuple[UnitaryOp, ...]


@dataclass(frozen=True)
class Readout:
    label: str
    observable: Observable


Step = Union[Couple, Readout]


@dataclass
class BranchNode:
    state: PureState
    weight: float
    label: str
    probability: float = 1.0
    outcome: float | None = None
    readout: str | None = None
    children: list["BranchNode"] = field(default_factory=list)

    def walk(self) -> Iterator["BranchNode"]:
        yield self
        for c in self.children:
            yield from c.walk()


@dataclass
class BranchTree:
    root: BranchNode
    readouts: list[str] = field(default_factory=list)

    def leaves(self) -> list[BranchNode]:
        return [n for n in self.root.walk() if not n.children]

    def paths(self) -> list[list[BranchNode]]:
        out = []

        def rec(node, path):
            path = path + [node]
            if not node.children:
                out.append(path)
            for c in node.children:
                rec(c, path)

        rec(self.root, [])
        return out

    def outcome_distribution(self) -> dict[tuple[float, ...], float]:
        """Total weight of each tuple of readout outcomes (one entry per leaf)."""
        dist: dict[tuple[float, ...], float] = {}
        for path in self.paths():
            key = tuple(n.outcome for n in path if n.outcome is not None)
            dist[key] = dist.get(key, 0.0) + path[-1].weight
        return dist

    def check(self, weight_tol: float = 1e-10, orth_tol: float = 1e-9) -> None:
        """Raise NumericError unless weights add up and siblings are orthogonal."""
        if abs(self.root.weight - 1.0) > weight_tol:
            raise NumericError("root weight is not 1")
        for node in self.root.walk():
            if not node.children:
                continue
            total = sum(c.weight for c in node.children)
            if abs(total - node.weight) > weight_tol:
                raise NumericError(f"children of {node.label!r} weigh {total}, parent {node.weight}")
            for i, a in enumerate(node.children):
                for b in node.children[i + 1 :]:
                    if abs(a.state.inner(b.state)) > orth_tol:
                        raise NumericError(f"branches {a.label!r} and {b.label!r} are not orthogonal")

    def to_dict(self) -> dict:
        def rec(node):
            return {
                "label": node.label,
                "weight": node.weight,
                "probability": node.probability,
                "outcome": node.outcome,
                "children": [rec(c) for c in node.children],
            }

        return rec(self.root)


def _outcome_label(readout: str, value: float) -> str:
    return f"{readout}={value:+g}"


def build_tree(
    initial: PureState,
    steps: Sequence[Step],
    pointers: Sequence[tuple[int, int]] = (),
    root_label: str = "initial",
) -> BranchTree:
    """Apply ``steps`` to ``initial``, branching on every readout outcome.

    After each coupling every pointer pair in ``pointers`` is checked for
    leakage into its unused ``|11>`` state.
    """
    root = BranchNode(initial, 1.0, root_label)
    frontier = [root]
    for step in steps:
        nxt = []
        for node in frontier:
            if isinstance(step, Couple):
                psi = node.state
                for op in step.ops:
                    psi = apply_unitary(psi, op)
                probs = psi.probabilities().reshape((2,) * psi.n_qubits)
                for p in pointers:
                    if _leak_from_probabilities(probs, psi.n_qubits, p) > POINTER_LEAK_TOL:
                        raise NumericError(f"pointer {p} populated its unused state after {step.label!r}")
                child = BranchNode(psi, node.weight, step.label)
                node.children.append(child)
                nxt.append(child)
            else:
                for o in project_outcomes(node.state, step.observable):
                    if o.post_state is None:
                        continue
                    child = BranchNode(
                        o.post_state,
                        node.weight * o.probability,
                        _outcome_label(step.label, o.value),
                        probability=o.probability,
                        outcome=o.value,
                        readout=step.label,
                    )
                    node.children.append(child)
                    nxt.append(child)
        frontier = nxt
    return BranchTree(root, [s.label for s in steps if isinstance(s, Readout)])


def sample_sequential(tree: BranchTree, shots: int, rng: RngLike = None) -> np.ndarray:
    """Collapse-mode shots: each readout draws its outcome in turn.

    Returns an array of shape ``(shots, n_readouts)`` of outcome values in
    the order the readouts occur. Each shot consumes one uniform per readout
    from a ``(shots, n_readouts)`` block, so results do not depend on the
    order shots are processed in.
    """
    n_read = len(tree.readouts)
    uniforms = make_rng(rng).random((shots, max(n_read, 1)))
    out = np.zeros((shots, n_read))

    def rec(node: BranchNode, idx: np.ndarray, level: int):
        if idx.size == 0 or not node.children:
            return
        if node.children[0].outcome is None:
            rec(node.children[0], idx, level)
            return
        picks = choose_many([c.probability for c in node.children], uniforms[idx, level])
        for k, child in enumerate(node.children):
            sel = idx[picks == k]
            out[sel, level] = child.outcome
            rec(child, sel, level + 1)

    rec(tree.root, np.arange(shots), 0)
    return out


def sample_branches(tree: BranchTree, shots: int, rng: RngLike = None) -> np.ndarray:
    """Branch-mode shots: one uniform per shot selects a final branch by weight."""
    paths = tree.paths()
    weights = np.array([p[-1].weight for p in paths])
    table = np.array([[n.outcome for n in p if n.outcome is not None] for p in paths], dtype=float)
    table = table.reshape(len(paths), len(tree.readouts))
    uniforms = make_rng(rng).random(shots)
    cdf = np.cumsum(weights / weights.sum())
    picks = np.minimum(np.searchsorted(cdf, uniforms, side="right"), len(paths) - 1)
    return table[picks]


def definiteness_expectation(tree: BranchTree, c_pointer: tuple[int, int]) -> float:
    """Weighted <D> over the final branches (the leaves) of ``tree``."""
    return float(sum(leaf.weight * definiteness(leaf.state, c_pointer) for leaf in tree.leaves()))


def collapse_entropy_ledger(
    trace: Sequence[Union[BranchNode, tuple[str, PureState]]], mask: Iterable[int]
) -> list[tuple[str, float]]:
    """Entropy of ``mask`` at every step of one collapse trajectory."""
    mask = as_mask(mask)
    rows = []
    for item in trace:
        label, psi = (item.label, item.state) if isinstance(item, BranchNode) else item
        rows.append((label, _mask_entropy(psi, mask)))
    return rows
