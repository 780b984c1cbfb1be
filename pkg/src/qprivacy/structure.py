"""Combinatorial characterization of privately computable functions.

Two rows are directly related when they agree in some column; the row
equivalence is the transitive closure of that relation (columns likewise).
A function is privately computable exactly when recursive splitting into
equivalence classes ends in monochromatic rectangles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core.classical import DeterministicProtocol, Leaf, Node, ProtocolError
from .core.matrix import CommMatrix
from .core.execution import execute
from .core.quantum import QuantumProtocol
from .tolerances import STATE_EQUAL_TOL


class NotPrivateError(ValueError):
    def __init__(self, witness: ForbiddenWitness):
        super().__init__(f"matrix contains a forbidden submatrix on rows {witness.rows}, cols {witness.cols}")
        self.witness = witness


@dataclass(frozen=True)
class EquivPartition:
    classes: tuple[tuple[int, ...], ...]

    def class_of(self, index: int) -> int:
        for i, c in enumerate(self.classes):
            if index in c:
                return i
        raise KeyError(index)

    def __len__(self) -> int:
        return len(self.classes)


@dataclass(frozen=True)
class ForbiddenWitness:
    rows: tuple[int, ...]
    cols: tuple[int, ...]


@dataclass
class DecompositionTree:
    """Rectangle ``rows x cols``; ``axis`` is ``"rows"``/``"cols"`` for a split, ``None`` at a leaf."""

    rows: tuple[int, ...]
    cols: tuple[int, ...]
    axis: str | None = None
    children: list[DecompositionTree] = field(default_factory=list)
    value: object = None

    def depth(self) -> int:
        return 0 if not self.children else 1 + max(c.depth() for c in self.children)

    def leaves(self):
        if not self.children:
            yield self
        for c in self.children:
            yield from c.leaves()


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, i: int) -> int:
        while self.parent[i] != i:
            self.parent[i] = self.parent[self.parent[i]]
            i = self.parent[i]
        return i

    def union(self, i: int, j: int) -> None:
        ri, rj = self.find(i), self.find(j)
        if ri != rj:
            self.parent[max(ri, rj)] = min(ri, rj)

    def classes(self, labels) -> tuple[tuple[int, ...], ...]:
        groups: dict[int, list[int]] = {}
        for i, lab in enumerate(labels):
            groups.setdefault(self.find(i), []).append(lab)
        return tuple(tuple(g) for g in sorted(groups.values()))


def _closure(sub: np.ndarray, labels) -> tuple[tuple[int, ...], ...]:
    """Classes of the rows of ``sub`` under the closure of "agree in some column"."""
    n = sub.shape[0]
    uf = _UnionFind(n)
    for i in range(n):
        for j in range(i + 1, n):
            if np.any(sub[i] == sub[j]):
                uf.union(i, j)
    return uf.classes(labels)


def equivalence_closure(m: CommMatrix | np.ndarray, axis: str = "rows", rows=None, cols=None) -> EquivPartition:
    codes = m.codes if isinstance(m, CommMatrix) else np.asarray(m)
    rows = tuple(range(codes.shape[0])) if rows is None else tuple(rows)
    cols = tuple(range(codes.shape[1])) if cols is None else tuple(cols)
    sub = codes[np.ix_(rows, cols)]
    if axis == "rows":
        return EquivPartition(_closure(sub, rows))
    if axis == "cols":
        return EquivPartition(_closure(sub.T, cols))
    raise ValueError(f"axis must be 'rows' or 'cols', got {axis!r}")


def decompose(m: CommMatrix | np.ndarray) -> tuple[DecompositionTree, ForbiddenWitness | None]:
    """Split recursively (rows before columns); stop at the first rectangle that cannot split."""
    codes = m.codes if isinstance(m, CommMatrix) else np.asarray(m)

    def build(rows, cols):
        sub = codes[np.ix_(rows, cols)]
        node = DecompositionTree(rows, cols)
        if np.all(sub == sub.flat[0]):
            node.value = int(sub.flat[0])
            return node, None
        for axis in ("rows", "cols"):
            part = equivalence_closure(codes, axis, rows, cols)
            if len(part) > 1:
                node.axis = axis
                for cls in part.classes:
                    child, wit = build(cls, cols) if axis == "rows" else build(rows, cls)
                    node.children.append(child)
                    if wit is not None:
                        return node, wit
                return node, None
        return node, ForbiddenWitness(rows, cols)

    return build(tuple(range(codes.shape[0])), tuple(range(codes.shape[1])))


def find_forbidden_submatrix(m: CommMatrix | np.ndarray) -> ForbiddenWitness | None:
    return decompose(m)[1]


def verify_witness(m: CommMatrix | np.ndarray, w: ForbiddenWitness) -> bool:
    """Direct definition check, independent of the splitting code."""
    codes = m.codes if isinstance(m, CommMatrix) else np.asarray(m)
    sub = codes[np.ix_(w.rows, w.cols)]
    if np.unique(sub).size < 2:
        return False

    def one_class(a: np.ndarray) -> bool:
        reach = {0}
        frontier = [0]
        while frontier:
            i = frontier.pop()
            for j in range(a.shape[0]):
                if j not in reach and any(a[i, c] == a[j, c] for c in range(a.shape[1])):
                    reach.add(j)
                    frontier.append(j)
        return len(reach) == a.shape[0]

    return one_class(sub) and one_class(sub.T)


def is_private(m: CommMatrix | np.ndarray) -> tuple[bool, ForbiddenWitness | None]:
    w = find_forbidden_submatrix(m)
    return w is None, w


def _bits(k: int) -> int:
    return max(1, math.ceil(math.log2(k))) if k > 1 else 0


def tree_to_protocol(tree: DecompositionTree, m: CommMatrix, name: str = "") -> DeterministicProtocol:
    """Each split becomes one announcement of the class index by the owner of that axis."""

    def build(node: DecompositionTree):
        if not node.children:
            if node.value is None:
                raise ProtocolError("decomposition leaf is not monochromatic")
            return Leaf(m.alphabet[node.value])
        owner = "A" if node.axis == "rows" else "B"
        message, children = {}, {}
        for i, child in enumerate(node.children):
            for v in (child.rows if owner == "A" else child.cols):
                message[v] = i
            children[i] = build(child)
        return Node(owner, message, children, _bits(len(node.children)))

    return DeterministicProtocol(build(tree), m.rows, m.cols, name or f"private {m.name or 'protocol'}")


def synthesize_private_protocol(m: CommMatrix) -> DeterministicProtocol:
    tree, wit = decompose(m)
    if wit is not None:
        raise NotPrivateError(wit)
    return tree_to_protocol(tree, m)


def _boolean(m: CommMatrix | np.ndarray) -> np.ndarray:
    if isinstance(m, CommMatrix):
        if not set(m.alphabet) <= {0, 1}:
            raise ValueError("Boolean alphabet required")
        return np.array([[m.alphabet[c] for c in row] for row in m.codes])
    codes = np.asarray(m)
    if not set(np.unique(codes).tolist()) <= {0, 1}:
        raise ValueError("Boolean alphabet required")
    return codes


def corners_check(m: CommMatrix | np.ndarray) -> ForbiddenWitness | None:
    """First 2x2 rectangle with exactly three equal entries, or ``None``."""
    b = _boolean(m)
    r, c = b.shape
    for x1 in range(r):
        for x2 in range(x1 + 1, r):
            for y1 in range(c):
                for y2 in range(y1 + 1, c):
                    if b[x1, y1] + b[x1, y2] + b[x2, y1] + b[x2, y2] in (1, 3):
                        return ForbiddenWitness((x1, x2), (y1, y2))
    return None


def xor_decompose(m: CommMatrix | np.ndarray) -> tuple[np.ndarray, np.ndarray] | None:
    """``(f_A, f_B)`` with ``m[x, y] = f_A[x] ^ f_B[y]`` and ``f_A[0] = 0``, or ``None``."""
    b = _boolean(m)
    fb = b[0].copy()
    fa = b[:, 0] ^ fb[0]
    if np.array_equal(fa[:, None] ^ fb[None, :], b):
        return fa, fb
    return None


# protocol tree extraction from a private quantum protocol


def _view_distance(v1: dict, v2: dict) -> float:
    total = 0.0
    for k in set(v1) | set(v2):
        a = v1[k][0] * v1[k][1] if k in v1 else None
        b = v2[k][0] * v2[k][1] if k in v2 else None
        diff = a - b if a is not None and b is not None else (a if a is not None else -b)
        total += float(np.abs(np.linalg.eigvalsh(diff)).sum())
    return total


def _informed(q: QuantumProtocol, i: int) -> str | None:
    """Player who gains information at the boundary after step ``i``."""
    step = q.steps[i]
    if step.kind == "unitary":
        return ("B" if step.player == "A" else "A") if step.handoff else None
    if step.kind == "announce" or (step.kind == "measure" and not step.private):
        return "B" if step.player == "A" else "A"
    return None


def extract_protocol_tree(q: QuantumProtocol, f: CommMatrix, tol: float = STATE_EQUAL_TOL) -> DecompositionTree:
    """Group inputs by equality of the informed player's state at each round boundary.

    The protocol must leak nothing (equivalently, lose nothing under a full-support
    distribution); that is checked first.
    """
    from .privacy import leakage

    if (q.rows, q.cols) != f.shape:
        raise ProtocolError("protocol and matrix shapes differ")
    ex = execute(q, f)
    for t in range(ex.n_rounds + 1):
        for player in ("A", "B"):
            leak = leakage(ex, f, t, player)
            if leak > tol:
                raise ProtocolError(f"protocol leaks {leak:.3g} to {player} at round {t}; it is not private")
    results = dict(zip(f.pairs(), ex.results))
    n_steps = len(q.steps)

    def split(rows, cols, start):
        node = DecompositionTree(rows, cols)
        for i in range(start, n_steps):
            player = _informed(q, i)
            if player is None:
                continue
            varying, fixed = (rows, cols) if player == "B" else (cols, rows)

            def view(u, o):
                xy = (u, o) if player == "B" else (o, u)
                return results[xy].per_round_states[i + 1][player]

            uf = _UnionFind(len(varying))
            for a in range(len(varying)):
                for b in range(a + 1, len(varying)):
                    if all(_view_distance(view(varying[a], o), view(varying[b], o)) < tol for o in fixed):
                        uf.union(a, b)
            classes = uf.classes(varying)
            if len(classes) > 1:
                node.axis = "rows" if player == "B" else "cols"
                for cls in classes:
                    node.children.append(split(cls, cols, i + 1) if player == "B" else split(rows, cls, i + 1))
                return node
        sub = f.codes[np.ix_(rows, cols)]
        if not np.all(sub == sub.flat[0]):
            raise ProtocolError(f"leaf rectangle rows {rows} x cols {cols} is not monochromatic; protocol is not private")
        node.value = int(sub.flat[0])
        return node

    return split(tuple(range(f.rows)), tuple(range(f.cols)), 0)
