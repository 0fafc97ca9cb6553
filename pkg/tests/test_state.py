import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from interlink.errors import CapError, NumericError, ParseError
from interlink.gates import CNOT, H, X, cnot, hadamard, pauli_x, permutation_unitary
from interlink.state import (
    DensityOperator,
    PureState,
    UnitaryOp,
    apply_matrix,
    apply_unitary,
    as_mask,
    basis_state,
    complement,
    cut_entropy,
    local_operator,
    make_state,
    partial_trace,
    product_state,
    reduce_density,
    subsystem_entropy,
    trace_distance,
    von_neumann_entropy,
)

from oracles import embed_blocks, naive_partial_trace, naive_subsystem_entropy, random_vector

LN2 = np.log(2.0)


def random_state(rng, n):
    return PureState(n, random_vector(rng, 2**n))


@st.composite
def states(draw, min_qubits=1, max_qubits=5):
    n = draw(st.integers(min_qubits, max_qubits))
    seed = draw(st.integers(0, 2**32 - 1))
    return random_state(np.random.default_rng(seed), n)


class TestMasks:
    def test_sorted_and_validated(self):
        assert as_mask([3, 0, 2], 4) == (0, 2, 3)
        assert complement((0, 2), 4) == (1, 3)

    @pytest.mark.parametrize("bad", [[0, 0], [-1], [4]])
    def test_rejects_bad_qubits(self, bad):
        with pytest.raises(ParseError):
            as_mask(bad, 4)


class TestPureState:
    def test_make_state_normalizes(self):
        s = make_state(1, [3, 4j])
        assert np.allclose(s.amplitudes, [0.6, 0.8j])

    def test_zero_vector(self):
        with pytest.raises(ParseError, match="zero"):
            make_state(2, [0, 0, 0, 0])

    def test_wrong_length_names_expected(self):
        with pytest.raises(ParseError, match="expected 4"):
            make_state(2, [1, 0, 0])

    def test_unnormalized_constructor_rejected(self):
        with pytest.raises(NumericError):
            PureState(1, [1.0, 1.0])

    def test_statevector_cap(self):
        with pytest.raises(CapError):
            basis_state(25)

    def test_amplitudes_read_only(self):
        s = basis_state(2, 1)
        with pytest.raises(ValueError):
            s.amplitudes[0] = 1

    def test_basis_state_bit_convention(self):
        s = basis_state(3, [1, 0, 1])
        assert s.amplitudes[0b101] == 1

    def test_product_state_first_factor_lowest(self):
        s = product_state([0, 1], [1, 0])
        assert s.amplitudes[0b01] == 1

    def test_kron_places_other_above(self):
        s = basis_state(1, 1).kron(basis_state(2, 0))
        assert s.n_qubits == 3 and s.amplitudes[0b001] == 1

    def test_expectation(self):
        plus = product_state(np.array([1, 1]) / np.sqrt(2), [1, 0])
        assert plus.expectation(X, [0]) == pytest.approx(1.0)
        assert plus.expectation(X, [1]) == pytest.approx(0.0)


class TestOperators:
    def test_cnot_convention(self):
        s = apply_unitary(basis_state(2, 0b01), cnot(0, 1))
        assert s.amplitudes[0b11] == pytest.approx(1)
        s = apply_unitary(basis_state(2, 0b10), cnot(1, 0))
        assert s.amplitudes[0b11] == pytest.approx(1)

    def test_bell_state(self):
        s = apply_unitary(apply_unitary(basis_state(2), hadamard(0)), cnot(0, 1))
        assert np.allclose(s.amplitudes, [1 / np.sqrt(2), 0, 0, 1 / np.sqrt(2)])

    def test_non_unitary_rejected(self):
        with pytest.raises(NumericError):
            UnitaryOp((0,), np.array([[1, 1], [0, 1]]))

    def test_unsorted_targets_need_on(self):
        with pytest.raises(ParseError):
            UnitaryOp((1, 0), CNOT)

    def test_local_operator_reorders(self):
        mat, mask = local_operator(CNOT, (2, 0))
        assert mask == (0, 2)
        s = PureState(3, apply_matrix(basis_state(3, 0b100), mat, mask))
        assert s.amplitudes[0b101] == pytest.approx(1)

    def test_apply_matches_dense_kron(self, rng):
        psi = random_state(rng, 3)
        u = np.linalg.qr(rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)))[0]
        out = apply_matrix(psi, u, (0, 2))
        # qubit 1 is the spectator; build the full matrix by explicit indexing
        full = np.zeros((8, 8), dtype=complex)
        for i in range(8):
            for j in range(8):
                if (i >> 1 & 1) == (j >> 1 & 1):
                    li = (i & 1) | ((i >> 2 & 1) << 1)
                    lj = (j & 1) | ((j >> 2 & 1) << 1)
                    full[i, j] = u[li, lj]
        assert np.allclose(out, full @ psi.amplitudes, atol=1e-12)

    @staticmethod
    def full_operator(u, targets, n):
        """Dense 2^n matrix of ``u`` on sorted ``targets``, built index by index."""
        full = np.zeros((2**n, 2**n), dtype=complex)
        rest = [q for q in range(n) if q not in targets]
        for i in range(2**n):
            for j in range(2**n):
                if all((i >> q & 1) == (j >> q & 1) for q in rest):
                    li = sum((i >> q & 1) << b for b, q in enumerate(targets))
                    lj = sum((j >> q & 1) << b for b, q in enumerate(targets))
                    full[i, j] = u[li, lj]
        return full

    @given(st.integers(0, 2**32 - 1), st.integers(2, 5), st.data())
    @settings(max_examples=30, deadline=None)
    def test_permutation_and_diagonal_paths_match_dense(self, seed, n, data):
        rng = np.random.default_rng(seed)
        targets = tuple(sorted(data.draw(st.sets(st.integers(0, n - 1), min_size=1, max_size=3))))
        k = len(targets)
        psi = random_state(rng, n)
        perm = np.eye(2**k)[:, rng.permutation(2**k)]
        diag = np.diag(rng.normal(size=2**k) + 1j * rng.normal(size=2**k))
        for u in (perm, diag):
            want = self.full_operator(u, targets, n) @ psi.amplitudes
            assert np.allclose(apply_matrix(psi, u, targets), want, atol=1e-12)

    def test_pauli_x(self):
        assert apply_unitary(basis_state(2), pauli_x(1)).amplitudes[0b10] == 1

    def test_permutation_unitary(self):
        p = permutation_unitary({0: 1, 1: 0, 2: 2, 3: 3}, 2)
        assert np.allclose(p @ np.eye(4)[:, 0], np.eye(4)[:, 1])
        with pytest.raises(ValueError):
            permutation_unitary([0, 0, 1, 2], 2)


class TestPartialTrace:
    @given(states(max_qubits=5), st.data())
    @settings(max_examples=40, deadline=None)
    def test_matches_oracle(self, psi, data):
        keep = data.draw(st.sets(st.integers(0, psi.n_qubits - 1), min_size=1))
        rho = partial_trace(psi, keep).matrix
        assert np.allclose(rho, naive_partial_trace(psi.amplitudes, psi.n_qubits, keep), atol=1e-12)

    @given(states(min_qubits=2, max_qubits=5))
    @settings(max_examples=30, deadline=None)
    def test_reduce_density_consistent(self, psi):
        full = np.outer(psi.amplitudes, psi.amplitudes.conj())
        keep = (0, psi.n_qubits - 1)
        assert np.allclose(reduce_density(full, keep).matrix, partial_trace(psi, keep).matrix, atol=1e-12)

    def test_empty_mask(self):
        with pytest.raises(ParseError):
            partial_trace(basis_state(2), [])

    def test_local_bit_order(self):
        # qubit 2 set, qubit 0 clear: keep (0, 2) puts qubit 2 at local bit 1
        rho = partial_trace(basis_state(3, 0b100), (0, 2)).matrix
        assert rho[0b10, 0b10] == pytest.approx(1)


class TestDensityOperator:
    def test_validation(self):
        with pytest.raises(NumericError):
            DensityOperator(np.array([[1, 1], [0, 0]]))
        with pytest.raises(NumericError):
            DensityOperator(np.diag([0.7, 0.7]))
        with pytest.raises(NumericError):
            DensityOperator(np.diag([1.5, -0.5]))
        with pytest.raises(ParseError):
            DensityOperator(np.eye(3) / 3)

    def test_purity(self):
        assert DensityOperator(np.eye(4) / 4).purity() == pytest.approx(0.25)


class TestEntropy:
    def test_maximally_mixed(self):
        assert von_neumann_entropy(np.eye(4) / 4) == pytest.approx(2 * LN2, abs=1e-12)

    def test_pure_is_zero(self):
        assert von_neumann_entropy(np.diag([1.0, 0.0])) == 0.0

    def test_tiny_eigenvalues_clipped(self):
        # the 1e-13 eigenvalue is dropped; only -(1-x) ln(1-x) ~ x survives
        assert von_neumann_entropy(np.diag([1 - 1e-13, 1e-13])) < 2e-13
        assert von_neumann_entropy(np.diag([1 - 1e-11, 1e-11])) > 1e-10

    def test_non_hermitian(self):
        with pytest.raises(NumericError):
            von_neumann_entropy(np.array([[0.5, 0.1], [0.0, 0.5]]))

    def test_negative_eigenvalue(self):
        with pytest.raises(NumericError):
            von_neumann_entropy(np.diag([1.1, -0.1]))

    def test_bell_pair(self):
        bell = make_state(2, [1, 0, 0, 1])
        assert subsystem_entropy(bell, [0]) == pytest.approx(LN2, abs=1e-12)

    def test_subsystem_needs_proper_mask(self):
        with pytest.raises(ParseError):
            subsystem_entropy(basis_state(2), [0, 1])

    def test_product_of_blocks(self, rng):
        blocks = [(0, 3), (1,), (2, 4)]
        vecs = [random_vector(rng, 2 ** len(b)) for b in blocks]
        psi = PureState(5, embed_blocks(5, blocks, vecs))
        assert cut_entropy(psi, (0, 3)) < 1e-10
        assert cut_entropy(psi, (1,)) < 1e-10
        assert cut_entropy(psi, (0, 1)) > 1e-3

    def test_cap(self, monkeypatch):
        # the smaller side of a 24-qubit cut fits the cap exactly, so shrink it
        monkeypatch.setattr("interlink.state.MAX_ENTROPY_DIM", 4)
        with pytest.raises(CapError, match="2\\^3"):
            cut_entropy(basis_state(6), range(3))
        assert cut_entropy(basis_state(6), range(2)) == 0.0

    @given(states(min_qubits=2, max_qubits=6), st.data())
    @settings(max_examples=40, deadline=None)
    def test_complementarity_exact(self, psi, data):
        side = data.draw(st.sets(st.integers(0, psi.n_qubits - 1), min_size=1, max_size=psi.n_qubits - 1))
        rest = complement(side, psi.n_qubits)
        assert cut_entropy(psi, side) == cut_entropy(psi, rest)

    @given(states(min_qubits=2, max_qubits=5), st.data())
    @settings(max_examples=30, deadline=None)
    def test_matches_oracle_and_bounded(self, psi, data):
        side = data.draw(st.sets(st.integers(0, psi.n_qubits - 1), min_size=1, max_size=psi.n_qubits - 1))
        s = cut_entropy(psi, side)
        assert s == pytest.approx(naive_subsystem_entropy(psi.amplitudes, psi.n_qubits, side), abs=1e-10)
        assert 0.0 <= s <= min(len(side), psi.n_qubits - len(side)) * LN2 + 1e-12


class TestTraceDistance:
    def test_orthogonal_pure(self):
        assert trace_distance(np.diag([1, 0]), np.diag([0, 1])) == pytest.approx(1.0)

    def test_plus_vs_zero(self):
        plus = np.full((2, 2), 0.5)
        assert trace_distance(plus, np.diag([1, 0])) == pytest.approx(1 / np.sqrt(2))

    @given(states(max_qubits=3), states(max_qubits=3))
    @settings(max_examples=30, deadline=None)
    def test_metric_bounds(self, a, b):
        ra = partial_trace(a, [0]).matrix
        rb = partial_trace(b, [0]).matrix
        d = trace_distance(ra, rb)
        assert 0.0 <= d <= 1.0 + 1e-12
        assert d == pytest.approx(trace_distance(rb, ra), abs=1e-14)
        assert trace_distance(ra, ra) < 1e-12


def test_hadamard_matrix_is_involution():
    assert np.allclose(H @ H, np.eye(2))
