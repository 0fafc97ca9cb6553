"""Exact-diagonalization checks of eigenstate thermalization on small spin chains.

Everything is dense: chains of at most 12 sites are assembled as full
``2**n`` matrices, diagonalized once, and reused through a small cache.
Reduced thermal states are built as Boltzmann-weighted sums of eigenstate
marginals, which equals the partial trace of ``exp(-beta H)/Z`` exactly.
"""

from __future__ import annotations

import functools
import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import CapError, NumericError, ParseError
from .state import (
    DensityOperator,
    Mask,
    PureState,
    as_mask,
    entropy_from_eigenvalues,
    partial_trace,
    trace_distance,
)

MAX_SITES = 12
MAX_ETH_SUBSYSTEM = 3
BETA_EXPONENT_GUARD = 700.0
BISECTION_STEPS = 200
ENERGY_MATCH_REL = 1e-8

# default non-integrable mixed-field Ising point; hz = 0 is the integrable comparison
DEFAULT_J = 1.0
DEFAULT_HX = 0.9045
DEFAULT_HZ = 0.8090


@dataclass(frozen=True)
class PauliTerm:
    coefficient: float
    ops: tuple[tuple[int, str], ...]

    def label(self) -> str:
        return " ".join(f"{p}{s}" for s, p in self.ops) or "I"


def parse_pauli(text: str) -> tuple[tuple[int, str], ...]:
    """``"Z0 Z1"`` or ``"Z0Z1"`` -> ``((0, 'Z'), (1, 'Z'))``."""
    body = text.replace(" ", "")
    if not body or body == "I":
        return ()
    pieces = re.findall(r"([A-Za-z])(\d+)", body)
    if "".join(p + s for p, s in pieces) != body:
        raise ParseError(f"cannot parse Pauli string {text!r}")
    ops = []
    for sym, site in pieces:
        if sym not in "IXYZ":
            raise ParseError(f"unknown Pauli symbol {sym!r} in {text!r}")
        if sym != "I":
            ops.append((int(site), sym))
    return tuple(sorted(ops))


@dataclass(frozen=True)
class SpinChainHamiltonian:
    n_sites: int
    terms: tuple[PauliTerm, ...]
    boundary: str = "open"
    name: str = "custom"

    def __post_init__(self):
        if self.n_sites < 1:
            raise ParseError("chain needs at least one site")
        if self.n_sites > MAX_SITES:
            raise CapError(f"{self.n_sites} sites exceeds the dense diagonalization cap of {MAX_SITES}")
        if self.boundary not in ("open", "periodic"):
            raise ParseError(f"unknown boundary {self.boundary!r}")
        for term in self.terms:
            sites = [s for s, _ in term.ops]
            if len(set(sites)) != len(sites):
                raise ParseError(f"site repeated in term {term.label()}")
            for s, p in term.ops:
                if p not in "XYZ":
                    raise ParseError(f"unknown Pauli symbol {p!r}")
                if not 0 <= s < self.n_sites:
                    raise ParseError(f"site {s} out of range for {self.n_sites} sites")

    @property
    def dim(self) -> int:
        return 2**self.n_sites

    def matrix(self) -> np.ndarray:
        return _dense(self)


def pauli_string_matrix(n_sites: int, ops: Sequence[tuple[int, str]]) -> np.ndarray:
    """Dense matrix of a Pauli string, built column by column from bit flips."""
    idx = np.arange(2**n_sites)
    flip = 0
    phase = np.ones(2**n_sites, dtype=np.complex128)
    for site, p in ops:
        bit = (idx >> site) & 1
        sign = 1 - 2 * bit
        if p in "XY":
            flip |= 1 << site
        if p == "Z":
            phase *= sign
        elif p == "Y":
            phase *= 1j * sign
    mat = np.zeros((2**n_sites, 2**n_sites), dtype=np.complex128)
    mat[idx ^ flip, idx] = phase
    return mat


@functools.lru_cache(maxsize=16)
def _dense(h: SpinChainHamiltonian) -> np.ndarray:
    mat = np.zeros((h.dim, h.dim), dtype=np.complex128)
    for term in h.terms:
        mat += term.coefficient * pauli_string_matrix(h.n_sites, term.ops)
    if not np.any(mat.imag):
        mat = mat.real.copy()
    mat.setflags(write=False)
    return mat


def mixed_field_ising(
    n: int,
    J: float = DEFAULT_J,
    hx: float = DEFAULT_HX,
    hz: float = DEFAULT_HZ,
    boundary: str = "open",
) -> SpinChainHamiltonian:
    """``sum J Z_i Z_{i+1} + hx X_i + hz Z_i``; hz=0 gives the transverse-field chain."""
    terms = []
    bonds = n if boundary == "periodic" and n > 2 else n - 1
    for i in range(bonds):
        terms.append(PauliTerm(J, tuple(sorted(((i, "Z"), ((i + 1) % n, "Z"))))))
    for i in range(n):
        if hx:
            terms.append(PauliTerm(hx, ((i, "X"),)))
        if hz:
            terms.append(PauliTerm(hz, ((i, "Z"),)))
    name = "tfim" if hz == 0 else "mfi"
    return SpinChainHamiltonian(n, tuple(terms), boundary, name)


def build_hamiltonian(spec: dict) -> SpinChainHamiltonian:
    """Hamiltonian from a plain dict.

    ``{"model": "mfi" | "tfim" | "zz", "n": ..., "J", "hx", "hz", "boundary"}``
    or ``{"model": "custom", "n": ..., "terms": [[coef, "Z0 Z1"], ...]}``.
    """
    model = spec.get("model", "mfi")
    n = int(spec.get("n", 10))
    boundary = spec.get("boundary", "open")
    J = float(spec.get("J", DEFAULT_J))
    if model == "mfi":
        return mixed_field_ising(n, J, float(spec.get("hx", DEFAULT_HX)), float(spec.get("hz", DEFAULT_HZ)), boundary)
    if model == "tfim":
        return mixed_field_ising(n, J, float(spec.get("hx", DEFAULT_HX)), 0.0, boundary)
    if model == "zz":
        h = mixed_field_ising(n, J, 0.0, 0.0, boundary)
        return SpinChainHamiltonian(h.n_sites, h.terms, h.boundary, "zz")
    if model == "custom":
        terms = tuple(PauliTerm(float(c), parse_pauli(s)) for c, s in spec.get("terms", []))
        return SpinChainHamiltonian(n, terms, boundary, "custom")
    raise ParseError(f"unknown model {model!r}; expected mfi, tfim, zz or custom")


@dataclass(eq=False)
class SpectrumCache:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    n_sites: int
    _marginals: dict = field(default_factory=dict, repr=False)

    @property
    def width(self) -> float:
        return float(self.eigenvalues[-1] - self.eigenvalues[0])

    def eigenstate(self, index: int) -> PureState:
        return PureState(self.n_sites, self.eigenvectors[:, index])

    def marginals(self, mask: Mask) -> np.ndarray:
        """Reduced matrices of every eigenstate on ``mask``, shape (dim, 2^k, 2^k)."""
        if mask not in self._marginals:
            n = self.n_sites
            d = 2**n
            t = self.eigenvectors.T.reshape((d,) + (2,) * n)
            keep = [1 + n - 1 - q for q in reversed(mask)]
            rest = [1 + a for a in range(n) if 1 + a not in keep]
            m = np.transpose(t, [0] + keep + rest).reshape(d, 2 ** len(mask), -1)
            self._marginals[mask] = np.einsum("kar,kbr->kab", m, m.conj())
        return self._marginals[mask]


@functools.lru_cache(maxsize=16)
def diagonalize(h: SpinChainHamiltonian) -> SpectrumCache:
    mat = h.matrix()
    vals, vecs = np.linalg.eigh(mat)
    scale = max(np.max(np.abs(mat)), 1e-300)
    recon = (vecs * vals) @ vecs.conj().T
    if np.max(np.abs(recon - mat)) > 1e-8 * scale:
        raise NumericError("eigendecomposition does not reconstruct the Hamiltonian")
    return SpectrumCache(vals, vecs, h.n_sites)


def _spectrum(h: SpinChainHamiltonian | SpectrumCache) -> SpectrumCache:
    return h if isinstance(h, SpectrumCache) else diagonalize(h)


def boltzmann_weights(energies: np.ndarray, beta: float) -> np.ndarray:
    shifted = -beta * energies
    w = np.exp(shifted - shifted.max())
    return w / w.sum()


def thermal_energy(h, beta: float) -> float:
    spec = _spectrum(h)
    return float(boltzmann_weights(spec.eigenvalues, beta) @ spec.eigenvalues)


def _guard(spec: SpectrumCache, beta: float) -> None:
    if abs(beta) * np.max(np.abs(spec.eigenvalues)) > BETA_EXPONENT_GUARD:
        raise NumericError(f"|beta * E| exceeds {BETA_EXPONENT_GUARD} at beta={beta!r}")


def thermal_state(h, beta: float) -> DensityOperator:
    """``exp(-beta H) / Z`` as a dense density operator."""
    spec = _spectrum(h)
    _guard(spec, beta)
    w = boltzmann_weights(spec.eigenvalues, beta)
    v = spec.eigenvectors
    rho = (v * w) @ v.conj().T
    return DensityOperator(0.5 * (rho + rho.conj().T))


def thermal_marginal(h, beta: float, mask: Iterable[int]) -> np.ndarray:
    """Reduced thermal state on ``mask``."""
    spec = _spectrum(h)
    mask = as_mask(mask, spec.n_sites)
    _guard(spec, beta)
    w = boltzmann_weights(spec.eigenvalues, beta)
    return np.einsum("k,kab->ab", w, spec.marginals(mask))


def solve_beta(h, target_energy: float, tol: float | None = None) -> float:
    """Inverse temperature with ``<H>_beta = target_energy``, by bisection.

    ``<H>_beta`` decreases monotonically in beta, so the root is bracketed
    between 0 and the overflow guard on the side given by the sign of
    ``<H>_0 - target``. ``tol`` defaults to 1e-8 of the spectral width.
    """
    spec = _spectrum(h)
    e = spec.eigenvalues
    width = spec.width
    if tol is None:
        tol = ENERGY_MATCH_REL * width
    # the edges themselves are only reachable within tolerance, as beta -> +-inf
    if not e[0] - tol < target_energy < e[-1] + tol:
        raise NumericError(f"target energy {target_energy!r} outside ({e[0]!r}, {e[-1]!r})")
    f0 = float(np.mean(e))
    if abs(f0 - target_energy) <= tol:
        return 0.0
    limit = BETA_EXPONENT_GUARD / np.max(np.abs(e))
    lo, hi = (0.0, limit) if target_energy < f0 else (-limit, 0.0)

    def excess(b):
        return thermal_energy(spec, b) - target_energy

    if excess(lo) < 0 or excess(hi) > 0:
        if min(abs(excess(lo)), abs(excess(hi))) <= tol:
            return lo if abs(excess(lo)) <= abs(excess(hi)) else hi
        raise NumericError(f"target energy {target_energy!r} needs |beta| beyond the overflow guard")
    for _ in range(BISECTION_STEPS):
        mid = 0.5 * (lo + hi)
        if excess(mid) > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * max(1.0, abs(mid)):
            break
    beta = 0.5 * (lo + hi)
    if abs(excess(beta)) > tol:
        raise NumericError(f"bisection did not reach |<H> - E| <= {tol!r}")
    return beta


def _entropy(rho: np.ndarray) -> float:
    return entropy_from_eigenvalues(np.linalg.eigvalsh(rho))


def mid_window(dim: int, fraction: float = 0.2) -> range:
    """Central ``fraction`` of eigenstate indices."""
    lo = int(round(dim * (0.5 - fraction / 2)))
    hi = int(round(dim * (0.5 + fraction / 2)))
    return range(lo, hi)


@dataclass(frozen=True)
class ThermalMatch:
    index: int
    beta: float
    energy: float
    subsystem: Mask
    trace_distance: float
    entanglement_entropy: float
    thermal_entropy: float

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "beta": self.beta,
            "energy": self.energy,
            "subsystem": list(self.subsystem),
            "trace_distance": self.trace_distance,
            "entanglement_entropy": self.entanglement_entropy,
            "thermal_entropy": self.thermal_entropy,
        }


def _check_subsystem(spec: SpectrumCache, subsystem) -> Mask:
    mask = as_mask(subsystem, spec.n_sites)
    if not mask or len(mask) == spec.n_sites:
        raise ParseError("subsystem must be a proper, non-empty set of sites")
    if len(mask) > MAX_ETH_SUBSYSTEM:
        raise CapError(f"subsystem of {len(mask)} sites exceeds the cap of {MAX_ETH_SUBSYSTEM}")
    return mask


def eth_check(
    h,
    index: int,
    subsystem: Iterable[int],
    window: float | None = 0.2,
    energy_tol: float | None = None,
) -> ThermalMatch:
    """Compare one eigenstate's marginal on ``subsystem`` with the matched thermal one.

    ``window`` restricts ``index`` to the central fraction of the spectrum;
    pass ``None`` to allow any eigenstate (edge states then need an explicit
    ``energy_tol`` because their beta runs into the overflow guard).
    """
    spec = _spectrum(h)
    mask = _check_subsystem(spec, subsystem)
    d = len(spec.eigenvalues)
    if not 0 <= index < d:
        raise ParseError(f"eigenstate index {index} out of range")
    if window is not None and index not in mid_window(d, window):
        raise ParseError(f"eigenstate {index} lies outside the central {window:.0%} window")
    energy = float(spec.eigenvalues[index])
    beta = solve_beta(spec, energy, energy_tol)
    rho = spec.marginals(mask)[index]
    rho_th = thermal_marginal(spec, beta, mask)
    return ThermalMatch(
        index=index,
        beta=beta,
        energy=energy,
        subsystem=mask,
        trace_distance=trace_distance(rho, rho_th),
        entanglement_entropy=_entropy(rho),
        thermal_entropy=_entropy(rho_th),
    )


def eth_window(h, subsystem: Iterable[int], fraction: float = 0.2) -> list[ThermalMatch]:
    spec = _spectrum(h)
    return [eth_check(spec, k, subsystem, fraction) for k in mid_window(len(spec.eigenvalues), fraction)]


def entropy_equivalence(h, index: int, subsystem: Iterable[int], window: float | None = 0.2, energy_tol=None):
    """``(entanglement entropy, thermal entropy)`` of one eigenstate's marginal."""
    m = eth_check(h, index, subsystem, window, energy_tol)
    return m.entanglement_entropy, m.thermal_entropy


def y_product_state(n: int) -> PureState:
    """Every spin along +y; its energy under any of the built-in chains is 0."""
    local = np.array([1.0, 1.0j]) / np.sqrt(2)
    amps = np.ones(1, dtype=np.complex128)
    for _ in range(n):
        amps = np.kron(local, amps)
    return PureState(n, amps)


@dataclass(frozen=True)
class QuenchSample:
    t: float
    rho: np.ndarray
    trace_distance: float
    entanglement_entropy: float
    thermal_entropy: float


@dataclass
class QuenchResult:
    beta: float
    energy: float
    subsystem: Mask
    samples: list[QuenchSample]

    def late_time_distance(self, t_min: float) -> float:
        late = [s.trace_distance for s in self.samples if s.t >= t_min]
        return float(np.mean(late))


def quench_evolution(
    h,
    initial: PureState,
    times: Sequence[float],
    subsystem: Iterable[int],
    energy_tol: float | None = None,
) -> QuenchResult:
    """Exact evolution ``exp(-iHt)|psi0>`` compared with the thermal marginal.

    Beta is fixed once from the initial energy. Norm and energy are checked
    at every sampled time.
    """
    spec = _spectrum(h)
    mask = _check_subsystem(spec, subsystem)
    psi0 = initial.amplitudes if isinstance(initial, PureState) else np.asarray(initial, dtype=np.complex128)
    if psi0.shape[0] != len(spec.eigenvalues):
        raise ParseError("initial state does not match the chain size")
    coeff = spec.eigenvectors.conj().T @ psi0
    e = spec.eigenvalues
    energy = float(np.real(np.vdot(coeff, e * coeff)))
    beta = solve_beta(spec, energy, energy_tol)
    rho_th = thermal_marginal(spec, beta, mask)
    s_th = _entropy(rho_th)
    scale = ENERGY_MATCH_REL * spec.width

    samples = []
    for t in times:
        ct = np.exp(-1j * e * t) * coeff
        if abs(np.linalg.norm(ct) - 1.0) > 1e-10:
            raise NumericError(f"norm drifted at t={t}")
        if abs(float(np.real(np.vdot(ct, e * ct))) - energy) > scale:
            raise NumericError(f"energy drifted at t={t}")
        psi = PureState(spec.n_sites, spec.eigenvectors @ ct)
        rho = partial_trace(psi, mask).matrix
        samples.append(
            QuenchSample(float(t), rho, trace_distance(rho, rho_th), _entropy(rho), s_th)
        )
    return QuenchResult(beta, energy, mask, samples)
