"""Quantum re-encoding of deterministic protocol trees.

The message register has one basis state per tree node and starts at the
root.  At depth ``d`` Al moves ``|v>`` to ``|child(v)>`` for her nodes, hands
over, Bob does the same for his, and hands back.  Each move is a swap of
basis states, so every step is a permutation matrix.  At the end Al measures
the node privately and outputs its leaf label.
"""

from __future__ import annotations

import numpy as np

from ..core.classical import DeterministicProtocol, Leaf, Node
from ..core.quantum import MeasureStep, QuantumProtocol, UnitaryStep


def _index(p: DeterministicProtocol):
    nodes, depth_of = [], []
    stack = [(p.root, 0)]
    while stack:
        node, d = stack.pop(0)
        nodes.append(node)
        depth_of.append(d)
        if isinstance(node, Node):
            for c in node.children.values():
                stack.append((c, d + 1))
    ids = {id(n): i for i, n in enumerate(nodes)}
    return nodes, depth_of, ids


def quantum_reencoding(p: DeterministicProtocol) -> QuantumProtocol:
    nodes, depth_of, ids = _index(p)
    dim = len(nodes)
    max_depth = max(depth_of)

    def mover(player: str, depth: int):
        cache: dict = {}

        def op(own: int, transcript):
            if own not in cache:
                perm = np.arange(dim)
                for i, node in enumerate(nodes):
                    # inputs that never reach a node leave it alone
                    if depth_of[i] == depth and isinstance(node, Node) and node.owner == player \
                            and own in node.message:
                        j = ids[id(node.children[node.message[own]])]
                        perm[i], perm[j] = j, i
                u = np.zeros((dim, dim), dtype=complex)
                u[perm, np.arange(dim)] = 1.0
                cache[own] = u
            return cache[own]

        return op

    steps = []
    for d in range(max_depth):
        steps.append(UnitaryStep("A", mover("A", d)))
        steps.append(UnitaryStep("B", mover("B", d)))
    steps.append(MeasureStep("A", "M", private=True))
    leaves = {i: n.output for i, n in enumerate(nodes) if isinstance(n, Leaf)}

    def output(transcript, record, x):
        return leaves.get(record[-1])

    return QuantumProtocol(p.rows, p.cols, {"A": 1, "M": dim, "B": 1}, steps, output,
                           name=f"quantum re-encoding of {p.name or 'protocol'}")
