import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from interlink.errors import NumericError, ParseError
from interlink.gates import X, Z, pauli_x
from interlink.measurement import (
    BranchTree,
    Couple,
    Observable,
    Readout,
    born_measure,
    build_tree,
    choose,
    choose_many,
    collapse_entropy_ledger,
    copy_pointer,
    copy_spin,
    definiteness,
    definiteness_expectation,
    pointer_leak,
    project_outcomes,
    sample_branches,
    sample_sequential,
)
from interlink.state import PureState, apply_unitary, basis_state, make_state, product_state

from oracles import random_vector

LN2 = np.log(2.0)


def spin_state(u, v, n_extra=0):
    """Spin on qubit 0 with amplitudes (u, v), ``n_extra`` ready qubits above."""
    amps = np.zeros(2 ** (1 + n_extra), dtype=complex)
    amps[0], amps[1] = u, v
    return make_state(1 + n_extra, amps)


class TestObservable:
    def test_sigma_z(self):
        obs = Observable.sigma_z(2)
        assert obs.targets == (2,) and obs.eigenvalues() == [1.0, -1.0]

    def test_from_hermitian_groups_degenerate(self):
        obs = Observable.from_hermitian(np.kron(Z, Z), (0, 1))
        assert sorted(obs.eigenvalues()) == [-1.0, 1.0]
        assert all(np.trace(p).real == pytest.approx(2) for _, p in obs.projectors)

    def test_from_hermitian_x(self):
        obs = Observable.from_hermitian(X, (0,))
        plus = make_state(1, [1, 1])
        outs = {o.value: o.probability for o in project_outcomes(plus, obs)}
        assert outs[1.0] == pytest.approx(1.0) and outs[-1.0] == pytest.approx(0.0, abs=1e-15)

    def test_from_projectors_reorders_qubits(self):
        p0 = np.diag([1, 0, 0, 0]).astype(complex)
        rest = np.eye(4) - p0
        obs = Observable.from_projectors([(1.0, p0), (0.0, rest)], (3, 1))
        assert obs.targets == (1, 3)

    def test_rejects_incomplete(self):
        with pytest.raises(NumericError, match="sum to the identity"):
            Observable((0,), ((1.0, np.diag([1, 0])),))

    def test_rejects_non_orthogonal(self):
        plus = np.full((2, 2), 0.5)
        with pytest.raises(NumericError):
            Observable((0,), ((1.0, np.diag([1, 0])), (0.0, plus)))

    def test_rejects_non_projector(self):
        with pytest.raises(NumericError, match="idempotent"):
            Observable((0,), ((1.0, np.diag([0.5, 0.5])), (0.0, np.diag([0.5, 0.5]))))

    def test_rejects_wrong_shape(self):
        with pytest.raises(ParseError):
            Observable((0,), ((1.0, np.eye(4)),))

    def test_out_of_range(self):
        with pytest.raises(ParseError):
            project_outcomes(basis_state(1), Observable.sigma_z(3))


class TestChoose:
    def test_inverse_cdf(self):
        assert list(choose_many([0.25, 0.75], np.array([0.0, 0.2499, 0.25, 0.99]))) == [0, 0, 1, 1]

    def test_never_picks_zero_entries(self):
        assert choose([0.5, 0.5, 0.0], 1.0 - 1e-17) == 1
        assert choose([0.0, 1.0], 0.0) == 1

    @given(st.lists(st.floats(0, 1), min_size=2, max_size=6).filter(lambda p: sum(p) > 0.1))
    @settings(max_examples=50, deadline=None)
    def test_frequencies_follow_probabilities(self, p):
        u = (np.arange(20000) + 0.5) / 20000
        picks = choose_many(p, u)
        freq = np.bincount(picks, minlength=len(p)) / u.size
        target = np.where(np.array(p) > 1e-14, p, 0) / sum(x for x in p if x > 1e-14)
        assert np.allclose(freq, target, atol=1e-3)


class TestBornMeasure:
    def test_collapse_and_entropy(self):
        bell = make_state(2, [1, 0, 0, 1])
        rec = born_measure(bell, Observable.sigma_z(0), 3)
        assert rec.pre_entropy == pytest.approx(LN2)
        assert rec.post_entropy == 0.0
        assert rec.probability == pytest.approx(0.5)
        # the partner is now definite too
        assert abs(rec.post_state.expectation(Z, [1]).real) == pytest.approx(1.0)

    def test_seeded_reproducible(self):
        psi = spin_state(0.6, 0.8)
        a = [born_measure(psi, Observable.sigma_z(0), np.random.default_rng(5)).outcome for _ in range(3)]
        assert len(set(a)) == 1

    @given(st.floats(0.01, 0.99), st.integers(0, 2**31))
    @settings(max_examples=25, deadline=None)
    def test_repeat_gives_same_outcome(self, p, seed):
        psi = spin_state(np.sqrt(p), np.sqrt(1 - p))
        rng = np.random.default_rng(seed)
        first = born_measure(psi, Observable.sigma_z(0), rng)
        second = born_measure(first.post_state, Observable.sigma_z(0), rng)
        assert second.outcome == first.outcome and second.probability == pytest.approx(1.0)

    @given(st.integers(0, 2**31), st.integers(1, 4))
    @settings(max_examples=25, deadline=None)
    def test_probabilities_sum_to_one(self, seed, n):
        psi = PureState(n, random_vector(np.random.default_rng(seed), 2**n))
        outs = project_outcomes(psi, Observable.sigma_z(n - 1))
        assert sum(o.probability for o in outs) == pytest.approx(1.0, abs=1e-12)


class TestPointers:
    def test_copy_spin_records_value(self):
        up = apply_unitary(spin_state(1, 0, 2), copy_spin(0, (1, 2)))
        down = apply_unitary(spin_state(0, 1, 2), copy_spin(0, (1, 2)))
        assert up.amplitudes[0b010] == pytest.approx(1)
        assert down.amplitudes[0b101] == pytest.approx(1)

    def test_copy_spin_flip(self):
        up = apply_unitary(spin_state(1, 0, 2), copy_spin(0, (1, 2), flip=True))
        assert up.amplitudes[0b100] == pytest.approx(1)

    def test_copy_pointer(self):
        psi = apply_unitary(spin_state(0, 1, 4), copy_spin(0, (1, 2)))
        psi = apply_unitary(psi, copy_pointer((1, 2), (3, 4)))
        assert psi.amplitudes[0b10101] == pytest.approx(1)

    def test_ready_source_leaves_target_ready(self):
        psi = apply_unitary(basis_state(4), copy_pointer((0, 1), (2, 3)))
        assert psi.amplitudes[0] == pytest.approx(1)

    def test_leak_and_definiteness(self):
        psi = basis_state(2, 0b11)
        assert pointer_leak(psi, (0, 1)) == pytest.approx(1)
        assert definiteness(psi, (0, 1)) == 0.0
        assert definiteness(basis_state(2, 0b01), (0, 1)) == 1.0
        assert definiteness(basis_state(2, 0b00), (0, 1)) == 0.0

    def test_build_tree_catches_leak(self):
        bad = Couple("bad", (copy_spin(0, (1, 2)), pauli_x(2)))
        with pytest.raises(NumericError, match="unused"):
            build_tree(spin_state(1, 0, 2), [bad], pointers=[(1, 2)])


def record_steps():
    return [Couple("M", (copy_spin(0, (1, 2)),)), Readout("spin", Observable.sigma_z(0))]


class TestBranchTree:
    def test_structure_and_weights(self):
        tree = build_tree(spin_state(0.6, 0.8, 2), record_steps(), pointers=[(1, 2)])
        tree.check()
        assert [n.label for n in tree.leaves()] == ["spin=+1", "spin=-1"]
        assert tree.outcome_distribution() == pytest.approx({(1.0,): 0.36, (-1.0,): 0.64})
        assert tree.readouts == ["spin"]
        d = tree.to_dict()
        assert d["label"] == "initial" and d["children"][0]["label"] == "M"

    def test_zero_branch_pruned(self):
        tree = build_tree(spin_state(1, 0, 2), record_steps())
        assert len(tree.leaves()) == 1

    def test_check_detects_bad_weights(self):
        tree = build_tree(spin_state(0.6, 0.8, 2), record_steps())
        tree.leaves()[0].weight = 0.5
        with pytest.raises(NumericError):
            tree.check()

    def test_check_detects_overlap(self):
        tree = build_tree(spin_state(0.6, 0.8, 2), record_steps())
        a, b = tree.leaves()
        b.state = a.state
        with pytest.raises(NumericError, match="orthogonal"):
            tree.check()

    def test_definiteness_expectation(self):
        tree = build_tree(spin_state(0.6, 0.8, 2), record_steps())
        assert definiteness_expectation(tree, (1, 2)) == pytest.approx(1.0, abs=1e-12)
        root_only = BranchTree(tree.root, [])
        assert definiteness(root_only.root.state, (1, 2)) == 0.0

    def test_ledger(self):
        tree = build_tree(spin_state(SQ, SQ, 2), record_steps())
        path = tree.paths()[0]
        rows = collapse_entropy_ledger(path, [0])
        assert [r[0] for r in rows] == ["initial", "M", "spin=+1"]
        assert [r[1] for r in rows] == pytest.approx([0.0, LN2, 0.0], abs=1e-12)
        assert collapse_entropy_ledger([("x", basis_state(1))], [0]) == [("x", 0.0)]


SQ = 1 / np.sqrt(2)


class TestSampling:
    def two_readouts(self):
        # two independent spins, each recorded then read out
        psi = product_state([0.6, 0.8], np.array([1, 1j]) / np.sqrt(2))
        steps = [Readout("a", Observable.sigma_z(0)), Readout("b", Observable.sigma_z(1))]
        return build_tree(psi, steps)

    def test_shapes_and_seed(self):
        tree = self.two_readouts()
        a = sample_sequential(tree, 500, 11)
        assert a.shape == (500, 2)
        assert np.array_equal(a, sample_sequential(tree, 500, 11))
        b = sample_branches(tree, 500, 11)
        assert b.shape == (500, 2)
        assert np.array_equal(b, sample_branches(tree, 500, 11))

    def test_both_modes_match_born(self):
        tree = self.two_readouts()
        n = 40000
        for outs in (sample_sequential(tree, n, 1), sample_branches(tree, n, 2)):
            pa = np.mean(outs[:, 0] > 0)
            pb = np.mean(outs[:, 1] > 0)
            assert abs(pa - 0.36) < 5 * np.sqrt(0.36 * 0.64 / n)
            assert abs(pb - 0.5) < 5 * np.sqrt(0.25 / n)

    def test_shot_prefix_stable(self):
        tree = self.two_readouts()
        assert np.array_equal(sample_branches(tree, 100, 4), sample_branches(tree, 1000, 4)[:100])

    def test_zero_shots(self):
        tree = self.two_readouts()
        assert sample_sequential(tree, 0, 1).shape == (0, 2)
        assert sample_branches(tree, 0, 1).shape == (0, 2)
