"""Entanglement diagnostics, measurement bookkeeping and thermalization checks
for small pure qubit states.

Qubit ``k`` is bit ``k`` of a basis index. Entropies are in nats.
"""

__version__ = "0.1.0"

from .errors import CapError, InterlinkError, NumericError, ParseError
from .graph import InterlinkGraph, build_interlink_graph
from .measurement import (
    BranchTree,
    Couple,
    Observable,
    Readout,
    born_measure,
    build_tree,
    collapse_entropy_ledger,
    copy_pointer,
    copy_spin,
    definiteness,
    definiteness_expectation,
    project_outcomes,
    sample_branches,
    sample_sequential,
)
from .metrics import (
    FactorDecomposition,
    InterlinkReport,
    interlink_report,
    interlinking,
    mutual_information,
    tensor_factorization,
)
from .scenarios import (
    ScenarioConfig,
    abcd_state,
    epr_run,
    final_state,
    interlinked_chain,
    run_scenario,
    singlet_state,
    von_neumann_chain,
)
from .state import (
    DensityOperator,
    PureState,
    UnitaryOp,
    apply_unitary,
    basis_state,
    cut_entropy,
    make_state,
    partial_trace,
    product_state,
    subsystem_entropy,
    trace_distance,
    von_neumann_entropy,
)
from .thermal import (
    SpinChainHamiltonian,
    build_hamiltonian,
    diagonalize,
    entropy_equivalence,
    eth_check,
    eth_window,
    mixed_field_ising,
    quench_evolution,
    solve_beta,
    thermal_marginal,
    thermal_state,
)
