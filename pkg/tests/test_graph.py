import json

import numpy as np
import pytest

from interlink.errors import ParseError
from interlink.graph import DisjointSet, build_interlink_graph
from interlink.scenarios import ABCD_PARTIES, abcd_state, final_state, state_parties
from interlink.state import PureState, basis_state

from oracles import embed_blocks, random_vector

LN2 = np.log(2.0)


def abcd_graph():
    return build_interlink_graph(abcd_state(), list(ABCD_PARTIES.values()), list(ABCD_PARTIES))


class TestDisjointSet:
    def test_groups(self):
        d = DisjointSet(5)
        d.union(3, 1)
        d.union(4, 3)
        assert d.groups() == [[0], [1, 3, 4], [2]]
        assert d.find(4) == 1

    def test_smaller_root_wins(self):
        d = DisjointSet(3)
        d.union(2, 0)
        assert d.find(2) == 0


class TestAbcdGraph:
    def test_edges_are_the_entangled_pairs(self):
        g = abcd_graph()
        pairs = {(g.labels[i], g.labels[j]): mi for i, j, mi in g.edges}
        assert set(pairs) == {("A", "B"), ("C", "D")}
        assert all(mi == pytest.approx(LN2, abs=1e-9) for mi in pairs.values())

    def test_mi_components_split_but_one_interlinked_component(self):
        g = abcd_graph()
        assert g.components == [[0, 1], [2, 3]]
        assert g.interlinked_components == [[0, 1, 2, 3]]
        assert not g.connected(0, 3)
        assert g.interlinked(0, 3)

    def test_dot_has_four_nodes_and_a_d_share_a_cluster(self):
        dot = abcd_graph().to_dot()
        assert dot.startswith("graph interlink {")
        assert dot.count("[label=\"A {0}\"]") == 1
        for k, name in enumerate("ABCD"):
            assert f'n{k} [label="{name} {{{k}}}"];' in dot
        assert dot.count("subgraph cluster_") == 1
        assert 'n0 -- n1 [label="0.693147"];' in dot

    def test_json_roundtrip(self):
        d = json.loads(abcd_graph().to_json())
        assert [n["label"] for n in d["nodes"]] == list("ABCD")
        assert d["interlinked_components"] == [list("ABCD")]


class TestGeneralGraphs:
    def test_product_state_isolated(self):
        g = build_interlink_graph(basis_state(3), [[0], [1], [2]])
        assert g.edges == [] and g.components == [[0], [1], [2]]
        assert g.interlinked_components == [[0], [1], [2]]
        assert g.labels == ["{0}", "{1}", "{2}"]

    def test_components_refine_interlinked_components(self, rng):
        blocks = [(0, 3), (1, 2, 4)]
        psi = PureState(5, embed_blocks(5, blocks, [random_vector(rng, 4), random_vector(rng, 8)]))
        g = build_interlink_graph(psi, [[q] for q in range(5)])
        assert g.interlinked_components == [[0, 3], [1, 2, 4]]
        for comp in g.components:
            assert any(set(comp) <= set(ic) for ic in g.interlinked_components)

    def test_chain_scenario_graph(self):
        parties = state_parties("chain")
        g = build_interlink_graph(final_state("chain"), list(parties.values()), list(parties))
        assert len(g.interlinked_components) == 1
        assert len(g.components) == 1

    def test_validation(self):
        with pytest.raises(ParseError):
            build_interlink_graph(basis_state(3), [[0], []])
        with pytest.raises(ParseError):
            build_interlink_graph(basis_state(3), [[0, 1], [1]])
        with pytest.raises(ParseError):
            build_interlink_graph(basis_state(3), [[0], [1]], labels=["a"])
