"""Built-in states and measurement scenarios.

States
    ``abcd``
        Four qubits ``|i; i+k mod 2; k; k>/2``. A and D share no mutual
        information but the state does not factorise.
    ``singlet``
        Two spins ``(|up,down> - |down,up>)/sqrt(2)`` with up = ``|0>``.

Scenarios (each one is a list of :class:`~interlink.measurement.Step`)
    ``world``
        A spin recorded by a single world register.
    ``chain``
        The von Neumann chain: the spin is recorded by a device M, M is read
        by an observer C, and C by the world W. All registers start out
        disentangled.
    ``interlinked-chain``
        M, C and W start out interlinked. One coupling of the spin to M also
        writes W; C reads M afterwards.
    ``epr``
        A singlet measured by two devices M and Mbar inside one interlinked
        register ensemble. W records both spins as two pointer pairs.

Interlinked registers carry one auxiliary qubit each. The auxiliary qubits
share a GHZ state, so every register is entangled with the others while its
pointer pair reads the ready state ``|00>``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import ParseError
from .measurement import (
    BranchTree,
    Couple,
    Observable,
    Readout,
    Step,
    build_tree,
    collapse_entropy_ledger,
    copy_pointer,
    copy_spin,
    sample_branches,
    sample_sequential,
)
from .state import Mask, PureState, as_mask, make_state

SQRT_HALF = 1.0 / np.sqrt(2.0)

SCENARIOS = ("world", "chain", "interlinked-chain", "epr")
STATES = ("abcd", "singlet") + SCENARIOS
MODES = ("collapse", "branch")
ORDERS = ("R-first", "Rbar-first")

ABCD_PARTIES = {"A": (0,), "B": (1,), "C": (2,), "D": (3,)}
SINGLET_PARTIES = {"spin1": (0,), "spin2": (1,)}


def embed_product(n_qubits: int, pieces: Sequence[tuple[Sequence[int], np.ndarray]]) -> PureState:
    """Product of local vectors on disjoint qubit groups; other qubits in ``|0>``.

    ``pieces`` holds ``(qubits, vector)`` pairs with ``qubits[j]`` as bit ``j``
    of the vector's index.
    """
    idx = np.arange(2**n_qubits)
    amps = np.ones(2**n_qubits, dtype=np.complex128)
    covered: set[int] = set()
    for qubits, vec in pieces:
        vec = np.asarray(vec, dtype=np.complex128)
        local = np.zeros_like(idx)
        for j, q in enumerate(qubits):
            local |= ((idx >> q) & 1) << j
        amps *= vec[local]
        covered |= set(qubits)
    for q in range(n_qubits):
        if q not in covered:
            amps *= ((idx >> q) & 1) == 0
    return make_state(n_qubits, amps)


def abcd_state() -> PureState:
    amps = np.zeros(16, dtype=np.complex128)
    for i in (0, 1):
        for k in (0, 1):
            bits = (i, (i + k) % 2, k, k)
            amps[sum(b << q for q, b in enumerate(bits))] = 0.5
    return make_state(4, amps)


def singlet_vector() -> np.ndarray:
    """Local two-qubit singlet; bit 0 is spin 1."""
    vec = np.zeros(4, dtype=np.complex128)
    vec[0b10] = SQRT_HALF  # spin1 up, spin2 down
    vec[0b01] = -SQRT_HALF  # spin1 down, spin2 up
    return vec


def singlet_state() -> PureState:
    return make_state(2, singlet_vector())


def ghz_vector(k: int) -> np.ndarray:
    vec = np.zeros(2**k, dtype=np.complex128)
    vec[0] = vec[-1] = SQRT_HALF
    return vec


# ---------------------------------------------------------------- layouts


@dataclass(frozen=True)
class Register:
    name: str
    pointers: tuple[tuple[int, int], ...]
    aux: tuple[int, ...] = ()

    @property
    def pointer(self) -> tuple[int, int]:
        return self.pointers[0]

    @property
    def mask(self) -> Mask:
        return as_mask([q for p in self.pointers for q in p] + list(self.aux))


@dataclass(frozen=True, eq=False)
class Layout:
    n_qubits: int
    spins: dict[str, int]
    registers: dict[str, Register] = field(default_factory=dict)

    def parties(self) -> dict[str, Mask]:
        out = {name: (q,) for name, q in self.spins.items()}
        out.update({name: r.mask for name, r in self.registers.items()})
        return out

    def pointers(self) -> list[tuple[int, int]]:
        return [p for r in self.registers.values() for p in r.pointers]

    def aux(self) -> list[int]:
        return sorted(q for r in self.registers.values() for q in r.aux)


def layout_for(name: str) -> Layout:
    if name == "world":
        return Layout(3, {"spin": 0}, {"W": Register("W", ((1, 2),))})
    if name == "chain":
        regs = {n: Register(n, ((a, a + 1),)) for n, a in (("M", 1), ("C", 3), ("W", 5))}
        return Layout(7, {"spin": 0}, regs)
    if name == "interlinked-chain":
        regs = {n: Register(n, ((a, a + 1),), (x,)) for n, a, x in (("M", 1, 7), ("C", 3, 8), ("W", 5, 9))}
        return Layout(10, {"spin": 0}, regs)
    if name == "epr":
        regs = {
            n: Register(n, ((a, a + 1),), (x,))
            for n, a, x in (("M", 2, 14), ("C", 4, 15), ("Mbar", 6, 16), ("Cbar", 8, 17))
        }
        regs["W"] = Register("W", ((10, 11), (12, 13)), (18,))
        return Layout(19, {"spin1": 0, "spin2": 1}, regs)
    raise ParseError(f"unknown scenario {name!r}; expected one of {', '.join(SCENARIOS)}")


# ---------------------------------------------------------------- config


def _complex(value) -> complex:
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise ParseError(f"complex amplitude must be [re, im], got {value!r}")
        return complex(float(value[0]), float(value[1]))
    return complex(value)


@dataclass(frozen=True)
class ScenarioConfig:
    """Parameters of a measurement run; ``u``/``v`` weight spin up/down."""

    name: str = "chain"
    u: complex = SQRT_HALF
    v: complex = SQRT_HALF
    mode: str = "collapse"
    order: str = "R-first"
    shots: int = 1000
    seed: int = 0
    per_shot: bool = False

    def __post_init__(self):
        object.__setattr__(self, "u", _complex(self.u))
        object.__setattr__(self, "v", _complex(self.v))
        if self.name not in SCENARIOS:
            raise ParseError(f"unknown scenario {self.name!r}; expected one of {', '.join(SCENARIOS)}")
        if self.mode not in MODES:
            raise ParseError(f"unknown mode {self.mode!r}; expected collapse or branch")
        if self.order not in ORDERS:
            raise ParseError(f"unknown order {self.order!r}; expected R-first or Rbar-first")
        norm = abs(self.u) ** 2 + abs(self.v) ** 2
        if abs(norm - 1.0) > 1e-10:
            raise ParseError(f"|u|^2 + |v|^2 = {norm!r}, expected 1")
        if self.shots < 0:
            raise ParseError("shots must be non-negative")

    def layout(self) -> Layout:
        return layout_for(self.name)


def initial_state(name: str, u: complex = SQRT_HALF, v: complex = SQRT_HALF) -> PureState:
    """Spins prepared, every pointer ready, auxiliary qubits in their GHZ state."""
    lay = layout_for(name)
    pieces = []
    if name == "epr":
        pieces.append(((lay.spins["spin1"], lay.spins["spin2"]), singlet_vector()))
    else:
        pieces.append(((lay.spins["spin"],), np.array([u, v])))
    aux = lay.aux()
    if aux:
        pieces.append((aux, ghz_vector(len(aux))))
    return embed_product(lay.n_qubits, pieces)


# ---------------------------------------------------------------- steps


def scenario_steps(name: str, mode: str = "collapse", order: str = "R-first") -> list[Step]:
    """Steps of ``name`` in collapse order; branch mode defers every readout."""
    lay = layout_for(name)
    r = lay.registers
    if name == "world":
        s = lay.spins["spin"]
        steps: list[Step] = [
            Couple("W", (copy_spin(s, r["W"].pointer),)),
            Readout("spin", Observable.sigma_z(s)),
        ]
    elif name == "chain":
        s = lay.spins["spin"]
        steps = [
            Couple("M", (copy_spin(s, r["M"].pointer),)),
            Couple("C", (copy_pointer(r["M"].pointer, r["C"].pointer),)),
            Couple("W", (copy_pointer(r["C"].pointer, r["W"].pointer),)),
            Readout("spin", Observable.sigma_z(s)),
        ]
    elif name == "interlinked-chain":
        s = lay.spins["spin"]
        steps = [
            Couple("M", (copy_spin(s, r["M"].pointer), copy_spin(s, r["W"].pointer))),
            Readout("spin", Observable.sigma_z(s)),
            Couple("C", (copy_pointer(r["M"].pointer, r["C"].pointer),)),
        ]
    elif name == "epr":
        steps = _epr_steps(lay, order)
    else:
        raise ParseError(f"unknown scenario {name!r}")
    if mode == "branch":
        steps = [st for st in steps if isinstance(st, Couple)] + [st for st in steps if isinstance(st, Readout)]
    elif mode != "collapse":
        raise ParseError(f"unknown mode {mode!r}")
    return steps


def _epr_steps(lay: Layout, order: str) -> list[Step]:
    r = lay.registers
    w1, w2 = r["W"].pointers
    sides = {
        "1": (lay.spins["spin1"], r["M"], r["C"], w1, w2),
        "2": (lay.spins["spin2"], r["Mbar"], r["Cbar"], w2, w1),
    }
    if order == "R-first":
        first, second = "1", "2"
    elif order == "Rbar-first":
        first, second = "2", "1"
    else:
        raise ParseError(f"unknown order {order!r}")

    s, dev, _, own_w, other_w = sides[first]
    # the first device to touch its spin interlinks both spins with W at once
    steps: list[Step] = [
        Couple(dev.name, (copy_spin(s, dev.pointer), copy_spin(s, own_w), copy_spin(s, other_w, flip=True))),
        Readout(f"spin{first}", Observable.sigma_z(s)),
    ]
    s2, dev2, _, _, _ = sides[second]
    steps += [
        Couple(dev2.name, (copy_spin(s2, dev2.pointer),)),
        Readout(f"spin{second}", Observable.sigma_z(s2)),
    ]
    for key in (first, second):
        _, dev_k, obs_k, _, _ = sides[key]
        steps.append(Couple(obs_k.name, (copy_pointer(dev_k.pointer, obs_k.pointer),)))
    return steps


def scenario_tree(cfg: ScenarioConfig) -> BranchTree:
    lay = cfg.layout()
    steps = scenario_steps(cfg.name, cfg.mode, cfg.order)
    tree = build_tree(initial_state(cfg.name, cfg.u, cfg.v), steps, pointers=lay.pointers())
    tree.check()
    return tree


def von_neumann_chain(cfg: ScenarioConfig | None = None, state: PureState | None = None) -> BranchTree:
    """Plain chain M, C, W with a single readout branching at the end."""
    cfg = cfg or ScenarioConfig("chain")
    lay = layout_for("chain")
    if state is None:
        state = initial_state("chain", cfg.u, cfg.v)
    tree = build_tree(state, scenario_steps("chain", "branch"), pointers=lay.pointers())
    tree.check()
    return tree


def interlinked_chain(cfg: ScenarioConfig | None = None, state: PureState | None = None) -> BranchTree:
    """Chain with pre-interlinked M, C, W, branching after all couplings."""
    cfg = cfg or ScenarioConfig("interlinked-chain")
    lay = layout_for("interlinked-chain")
    if state is None:
        state = initial_state("interlinked-chain", cfg.u, cfg.v)
    tree = build_tree(state, scenario_steps("interlinked-chain", "branch"), pointers=lay.pointers())
    tree.check()
    return tree


def final_state(name: str, u: complex = SQRT_HALF, v: complex = SQRT_HALF) -> PureState:
    """State after every coupling of ``name`` and before any readout."""
    if name == "abcd":
        return abcd_state()
    if name == "singlet":
        return singlet_state()
    if name not in SCENARIOS:
        raise ParseError(f"unknown state {name!r}; expected one of {', '.join(STATES)}")
    lay = layout_for(name)
    steps = [st for st in scenario_steps(name, "branch") if isinstance(st, Couple)]
    tree = build_tree(initial_state(name, u, v), steps, pointers=lay.pointers())
    return tree.leaves()[0].state


def state_parties(name: str) -> dict[str, Mask]:
    if name == "abcd":
        return dict(ABCD_PARTIES)
    if name == "singlet":
        return dict(SINGLET_PARTIES)
    return layout_for(name).parties()


# ---------------------------------------------------------------- runs


@dataclass
class ScenarioRun:
    config: ScenarioConfig
    tree: BranchTree
    readouts: list[str]
    outcomes: np.ndarray  # (shots, len(readouts)), columns in ``readouts`` order

    def frequencies(self) -> dict[str, float]:
        """Fraction of shots with outcome +1, per readout."""
        if self.outcomes.shape[0] == 0:
            return {name: 0.0 for name in self.readouts}
        return {name: float(np.mean(self.outcomes[:, j] > 0)) for j, name in enumerate(self.readouts)}

    def joint_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for row in self.outcomes:
            key = ",".join(f"{v:+g}" for v in row)
            counts[key] = counts.get(key, 0) + 1
        return dict(sorted(counts.items()))

    def branch_weights(self) -> dict[str, float]:
        dist = self.tree.outcome_distribution()
        order = [self.tree.readouts.index(name) for name in self.readouts]
        out = {}
        for key, w in dist.items():
            out[",".join(f"{key[j]:+g}" for j in order)] = w
        return dict(sorted(out.items()))

    @cached_property
    def ledgers(self) -> dict[str, list[dict]]:
        """Per spin, per branch: the spin's entropy after every step of the path."""
        lay = self.config.layout()
        ledgers: dict[str, list[dict]] = {}
        for spin, q in lay.spins.items():
            rows = []
            for path in self.tree.paths():
                key = ",".join(f"{n.label}" for n in path if n.outcome is not None)
                rows.append(
                    {
                        "branch": key,
                        "weight": path[-1].weight,
                        "entropy": [[label, s] for label, s in collapse_entropy_ledger(path, (q,))],
                    }
                )
            ledgers[spin] = rows
        return ledgers


def run_scenario(cfg: ScenarioConfig) -> ScenarioRun:
    """Build the tree for ``cfg`` and draw ``cfg.shots`` seeded shots from it."""
    tree = scenario_tree(cfg)
    if cfg.mode == "collapse":
        raw = sample_sequential(tree, cfg.shots, cfg.seed)
    else:
        raw = sample_branches(tree, cfg.shots, cfg.seed)
    readouts = sorted(tree.readouts)
    cols = [tree.readouts.index(name) for name in readouts]
    outcomes = raw[:, cols] if raw.size else np.zeros((cfg.shots, len(readouts)))
    return ScenarioRun(cfg, tree, readouts, outcomes)


def epr_run(cfg: ScenarioConfig) -> np.ndarray:
    """Outcome pairs ``(spin1, spin2)`` for every shot of an EPR run."""
    if cfg.name != "epr":
        cfg = ScenarioConfig("epr", cfg.u, cfg.v, cfg.mode, cfg.order, cfg.shots, cfg.seed)
    return run_scenario(cfg).outcomes
