"""Mutual information, interlinking and tensor factorization of pure states.

Interlinking of two subsystems is the smallest entanglement entropy of any
bipartition of the whole system that puts one subsystem on each side. It can
be positive while the two subsystems share no mutual information at all; the
four-qubit chain state in :mod:`interlink.scenarios` is the standard example.

Both the minimum cut and the factorization are exhaustive searches, so they
are capped (``FREE_QUBIT_CAP``, ``FACTORIZATION_CAP``).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import CapError, ParseError
from .state import Mask, PureState, as_mask, cut_entropy

ENTANGLE_TOL = 1e-9
FACTOR_TOL = 1e-9
FREE_QUBIT_CAP = 20
FACTORIZATION_CAP = 14
# minimisers closer than this to the minimum count as ties
TIE_TOL = 1e-12


def _entropy(state: PureState, mask: Mask) -> float:
    if len(mask) == state.n_qubits:
        return 0.0
    return cut_entropy(state, mask)


def _disjoint_pair(state: PureState, a, b) -> tuple[Mask, Mask]:
    a = as_mask(a, state.n_qubits)
    b = as_mask(b, state.n_qubits)
    if not a or not b:
        raise ParseError("both subsystems must be non-empty")
    if set(a) & set(b):
        raise ParseError(f"subsystems {a} and {b} overlap")
    return a, b


def mutual_information(state: PureState, a: Iterable[int], b: Iterable[int]) -> float:
    """S(a) + S(b) - S(a, b), clipped at zero."""
    a, b = _disjoint_pair(state, a, b)
    joint = as_mask(a + b)
    value = _entropy(state, a) + _entropy(state, b) - _entropy(state, joint)
    return max(value, 0.0)


def interlinking(state: PureState, a: Iterable[int], b: Iterable[int]) -> tuple[float, Mask]:
    """Minimum bipartition entropy over all cuts separating ``a`` from ``b``.

    Returns ``(value, cut)`` where ``cut`` is the side containing ``a``. Among
    minimisers the lexicographically smallest mask is returned. Every one of
    the ``2**free`` assignments of the remaining qubits is evaluated.
    """
    a, b = _disjoint_pair(state, a, b)
    taken = set(a) | set(b)
    free = [q for q in range(state.n_qubits) if q not in taken]
    if len(free) > FREE_QUBIT_CAP:
        raise CapError(f"{len(free)} free qubits exceeds the exhaustive-search cap of {FREE_QUBIT_CAP}")

    values = []
    for assign in range(2 ** len(free)):
        side = as_mask(a + tuple(q for j, q in enumerate(free) if assign >> j & 1))
        values.append((cut_entropy(state, side), side))

    best = min(v for v, _ in values)
    cut = min(side for v, side in values if v <= best + TIE_TOL)
    return best, cut


@dataclass(frozen=True)
class FactorDecomposition:
    """Disjoint masks covering every qubit; the state is their tensor product."""

    factors: tuple[Mask, ...]

    def __len__(self):
        return len(self.factors)

    def __iter__(self):
        return iter(self.factors)

    def factor_of(self, qubit: int) -> Mask:
        for f in self.factors:
            if qubit in f:
                return f
        raise KeyError(qubit)

    def same_factor(self, a: Iterable[int], b: Iterable[int]) -> bool:
        """True when some qubit of ``a`` shares a factor with some qubit of ``b``."""
        fa = {self.factor_of(q) for q in a}
        return any(self.factor_of(q) in fa for q in b)


def _units(state: PureState, parties: Sequence[Iterable[int]] | None) -> list[Mask]:
    n = state.n_qubits
    if parties is None:
        return [(q,) for q in range(n)]
    units = [as_mask(p, n) for p in parties]
    seen: set[int] = set()
    for u in units:
        if not u:
            raise ParseError("empty party in partition")
        if seen & set(u):
            raise ParseError(f"party {u} overlaps another party")
        seen |= set(u)
    units += [(q,) for q in range(n) if q not in seen]
    return sorted(units)


def tensor_factorization(
    state: PureState,
    parties: Sequence[Iterable[int]] | None = None,
    tol: float = FACTOR_TOL,
) -> FactorDecomposition:
    """Finest tensor-product decomposition of ``state``.

    With ``parties`` the search treats each party as indivisible (qubits not
    named by any party stay single units). A block is split off as soon as a
    smallest sub-block with cut entropy ``<= tol`` is found; such a block is
    itself unsplittable, so only the remainder is searched again.
    """
    units = _units(state, parties)
    if len(units) > FACTORIZATION_CAP:
        raise CapError(f"{len(units)} units exceeds the factorization cap of {FACTORIZATION_CAP}")

    factors: list[Mask] = []
    remaining = list(range(len(units)))
    while remaining:
        atom = None
        for size in range(1, len(remaining) // 2 + 1):
            for combo in itertools.combinations(remaining, size):
                side = as_mask(q for i in combo for q in units[i])
                if len(side) == state.n_qubits:
                    continue
                if cut_entropy(state, side) <= tol:
                    atom = combo
                    break
            if atom is not None:
                break
        if atom is None:
            atom = tuple(remaining)
        factors.append(as_mask(q for i in atom for q in units[i]))
        remaining = [i for i in remaining if i not in atom]
    return FactorDecomposition(tuple(sorted(factors)))


@dataclass(frozen=True)
class InterlinkReport:
    pair: tuple[Mask, Mask]
    mutual_information: float
    interlinking: float
    minimizing_cut: Mask
    entangled: bool
    interlinked: bool

    def to_dict(self) -> dict:
        return {
            "a": list(self.pair[0]),
            "b": list(self.pair[1]),
            "mutual_information": self.mutual_information,
            "interlinking": self.interlinking,
            "minimizing_cut": list(self.minimizing_cut),
            "entangled": self.entangled,
            "interlinked": self.interlinked,
        }


def interlink_report(
    state: PureState,
    a: Iterable[int],
    b: Iterable[int],
    entangle_tol: float = ENTANGLE_TOL,
    factor_tol: float = FACTOR_TOL,
) -> InterlinkReport:
    a, b = _disjoint_pair(state, a, b)
    mi = mutual_information(state, a, b)
    value, cut = interlinking(state, a, b)
    return InterlinkReport(
        pair=(a, b),
        mutual_information=mi,
        interlinking=value,
        minimizing_cut=cut,
        entangled=mi > entangle_tol,
        interlinked=value > factor_tol,
    )
