"""Mutual-information graph over a partition of the qubits into parties.

Edges join parties whose pairwise mutual information exceeds a tolerance;
``components`` are the connected components of those edges. Parties can be
interlinked without any chain of such edges (every pairwise link of a
multi-party correlation may vanish), so the graph also carries
``interlinked_components``: the parties grouped by the factor of the
party-level tensor factorization they belong to.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import ParseError
from .metrics import ENTANGLE_TOL, FACTOR_TOL, mutual_information, tensor_factorization
from .state import Mask, PureState, as_mask


class DisjointSet:
    def __init__(self, size: int):
        self._parent = list(range(size))

    def find(self, i: int) -> int:
        root = i
        while self._parent[root] != root:
            root = self._parent[root]
        while self._parent[i] != root:
            self._parent[i], i = root, self._parent[i]
        return root

    def union(self, i: int, j: int) -> None:
        ri, rj = self.find(i), self.find(j)
        if ri != rj:
            # smaller root wins so component labels are deterministic
            lo, hi = sorted((ri, rj))
            self._parent[hi] = lo

    def groups(self) -> list[list[int]]:
        out: dict[int, list[int]] = {}
        for i in range(len(self._parent)):
            out.setdefault(self.find(i), []).append(i)
        return sorted(out.values())


@dataclass
class InterlinkGraph:
    nodes: list[Mask]
    labels: list[str]
    edges: list[tuple[int, int, float]] = field(default_factory=list)
    components: list[list[int]] = field(default_factory=list)
    interlinked_components: list[list[int]] = field(default_factory=list)

    def component_of(self, i: int) -> int:
        return next(k for k, comp in enumerate(self.components) if i in comp)

    def connected(self, i: int, j: int) -> bool:
        return self.component_of(i) == self.component_of(j)

    def interlinked(self, i: int, j: int) -> bool:
        return any(i in comp and j in comp for comp in self.interlinked_components)

    def to_dict(self) -> dict:
        return {
            "nodes": [{"label": lab, "qubits": list(m)} for lab, m in zip(self.labels, self.nodes)],
            "edges": [
                {"a": self.labels[i], "b": self.labels[j], "mutual_information": mi}
                for i, j, mi in self.edges
            ],
            "components": [[self.labels[i] for i in comp] for comp in self.components],
            "interlinked_components": [
                [self.labels[i] for i in comp] for comp in self.interlinked_components
            ],
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    def to_dot(self, name: str = "interlink") -> str:
        """Graphviz source; each interlinked component is drawn as a cluster."""
        lines = [f"graph {name} {{"]
        for k, comp in enumerate(self.interlinked_components):
            lines.append(f"  subgraph cluster_{k} {{")
            lines.append(f'    label="factor {k}";')
            for i in comp:
                qubits = ",".join(str(q) for q in self.nodes[i])
                lines.append(f'    n{i} [label="{self.labels[i]} {{{qubits}}}"];')
            lines.append("  }")
        for i, j, mi in self.edges:
            lines.append(f'  n{i} -- n{j} [label="{mi:.6f}"];')
        lines.append("}")
        return "\n".join(lines) + "\n"


def build_interlink_graph(
    state: PureState,
    partition: Sequence[Iterable[int]],
    labels: Sequence[str] | None = None,
    entangle_tol: float = ENTANGLE_TOL,
    factor_tol: float = FACTOR_TOL,
) -> InterlinkGraph:
    nodes = [as_mask(p, state.n_qubits) for p in partition]
    seen: set[int] = set()
    for m in nodes:
        if not m:
            raise ParseError("empty party in partition")
        if seen & set(m):
            raise ParseError(f"party {m} overlaps another party")
        seen |= set(m)
    if labels is None:
        labels = ["{" + ",".join(map(str, m)) + "}" for m in nodes]
    if len(labels) != len(nodes):
        raise ParseError("one label per party is required")

    dsu = DisjointSet(len(nodes))
    edges = []
    for i in range(len(nodes)):
        for j in range(i + 1, len(nodes)):
            mi = mutual_information(state, nodes[i], nodes[j])
            if mi > entangle_tol:
                edges.append((i, j, mi))
                dsu.union(i, j)

    factors = tensor_factorization(state, nodes, tol=factor_tol)
    by_factor: dict[Mask, list[int]] = {}
    for i, m in enumerate(nodes):
        by_factor.setdefault(factors.factor_of(m[0]), []).append(i)

    return InterlinkGraph(
        nodes=nodes,
        labels=list(labels),
        edges=edges,
        components=dsu.groups(),
        interlinked_components=sorted(by_factor.values()),
    )
