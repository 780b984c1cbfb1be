"""Deterministic protocol trees and randomized mixtures of them."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Hashable, Iterator, Sequence

import numpy as np

from .matrix import CommMatrix

PLAYERS = ("A", "B")
ABORT = "abort"


class ProtocolError(ValueError):
    """Malformed protocol description or an input it cannot handle."""


@dataclass
class Leaf:
    output: Any


@dataclass
class Node:
    """Internal node: ``owner`` maps its input to a message symbol naming a child."""

    owner: str
    message: dict[int, Hashable]
    children: dict[Hashable, "Node | Leaf"]
    bits: int = 1

    def __post_init__(self):
        if self.owner not in PLAYERS:
            raise ProtocolError(f"unknown player {self.owner!r}")


@dataclass
class DeterministicProtocol:
    root: Node | Leaf
    rows: int
    cols: int
    name: str = ""
    layer_owners: Sequence[str] | None = None

    def iter_nodes(self) -> Iterator[tuple[int, Node | Leaf]]:
        stack = [(0, self.root)]
        while stack:
            depth, node = stack.pop()
            yield depth, node
            if isinstance(node, Node):
                for child in node.children.values():
                    stack.append((depth + 1, child))

    def validate(self, matrix: CommMatrix | None = None) -> None:
        """Check every node against the inputs that can actually reach it."""
        stack = [(0, self.root, frozenset(range(self.rows)), frozenset(range(self.cols)))]
        while stack:
            depth, node, xs, ys = stack.pop()
            if isinstance(node, Leaf):
                if matrix is not None and node.output != ABORT and not matrix.has_value(node.output):
                    raise ProtocolError(f"leaf label {node.output!r} not in alphabet")
                continue
            if self.layer_owners is not None:
                if depth >= len(self.layer_owners) or self.layer_owners[depth] != node.owner:
                    raise ProtocolError(f"node at depth {depth} owned by {node.owner}, layer says otherwise")
            if node.bits < 0:
                raise ProtocolError("negative bit cost")
            dom = xs if node.owner == "A" else ys
            undefined = sorted(dom - set(node.message))
            if undefined:
                raise ProtocolError(f"{node.owner} node at depth {depth} has no message for inputs {undefined}")
            for sym in {node.message[v] for v in dom}:
                if sym not in node.children:
                    raise ProtocolError(f"message symbol {sym!r} leads nowhere")
                part = frozenset(v for v in dom if node.message[v] == sym)
                nx, ny = (part, ys) if node.owner == "A" else (xs, part)
                stack.append((depth + 1, node.children[sym], nx, ny))

    def run(self, x: int, y: int) -> tuple[Any, tuple, int]:
        if not (0 <= x < self.rows and 0 <= y < self.cols):
            raise ProtocolError(f"input {(x, y)} out of range")
        node, transcript, bits = self.root, [], 0
        while isinstance(node, Node):
            own = x if node.owner == "A" else y
            try:
                sym = node.message[own]
                node_next = node.children[sym]
            except KeyError:
                raise ProtocolError(f"message function at a {node.owner} node undefined for input {own}") from None
            transcript.append(sym)
            bits += node.bits
            node = node_next
        return node.output, tuple(transcript), bits

    def depth(self) -> int:
        return max(d for d, _ in self.iter_nodes())

    def size(self) -> int:
        return sum(1 for _ in self.iter_nodes())

    def max_rounds(self) -> int:
        """Longest transcript over all inputs."""
        return max(len(self.run(x, y)[1]) for x in range(self.rows) for y in range(self.cols))

    def max_bits(self) -> int:
        return max(self.run(x, y)[2] for x in range(self.rows) for y in range(self.cols))

    def output_table(self, matrix: CommMatrix) -> np.ndarray:
        """Alphabet code of the output on every input pair (-1 for abort or foreign labels)."""
        out = np.full((self.rows, self.cols), -1, dtype=np.int64)
        stack = [(self.root, np.arange(self.rows), np.arange(self.cols))]
        while stack:
            node, xs, ys = stack.pop()
            if xs.size == 0 or ys.size == 0:
                continue
            if isinstance(node, Leaf):
                if node.output != ABORT and matrix.has_value(node.output):
                    out[np.ix_(xs, ys)] = matrix.code_of(node.output)
                continue
            own = xs if node.owner == "A" else ys
            try:
                syms = [node.message[int(v)] for v in own]
            except KeyError as exc:
                raise ProtocolError(f"message function at a {node.owner} node undefined for input {exc.args[0]}") from None
            for sym in dict.fromkeys(syms):
                sel = own[np.array([s == sym for s in syms])]
                child = node.children[sym]
                stack.append((child, sel, ys) if node.owner == "A" else (child, xs, sel))
        return out


def eval_deterministic(p: DeterministicProtocol, x: int, y: int) -> tuple[Any, tuple, int]:
    """Output, transcript and bits communicated on input (x, y)."""
    return p.run(x, y)


@dataclass
class RandomizedProtocol:
    """Distribution over deterministic protocols.

    With ``visibility="public"`` both players see the seed index.  With
    ``"private"`` each seed carries ``(coin_A, coin_B)`` labels and each player
    only sees its own label.
    """

    seeds: list[tuple[float, DeterministicProtocol]]
    visibility: str = "public"
    coins: list[tuple[Hashable, Hashable]] | None = None
    name: str = ""

    def __post_init__(self):
        if not self.seeds:
            raise ProtocolError("randomized protocol needs at least one seed")
        total = sum(p for p, _ in self.seeds)
        if abs(total - 1.0) > 1e-12:
            raise ProtocolError(f"seed probabilities sum to {total}")
        if self.visibility not in ("public", "private"):
            raise ProtocolError(f"unknown coin visibility {self.visibility!r}")
        if self.visibility == "private":
            if self.coins is None or len(self.coins) != len(self.seeds):
                raise ProtocolError("private coins need one (coin_A, coin_B) label per seed")
        shapes = {(d.rows, d.cols) for _, d in self.seeds}
        if len(shapes) != 1:
            raise ProtocolError("seeds disagree on input ranges")

    @property
    def rows(self) -> int:
        return self.seeds[0][1].rows

    @property
    def cols(self) -> int:
        return self.seeds[0][1].cols

    def coin_labels(self, i: int) -> tuple[Hashable, Hashable]:
        if self.visibility == "public":
            return i, i
        return self.coins[i]

    @classmethod
    def of(cls, p: DeterministicProtocol) -> RandomizedProtocol:
        return cls([(1.0, p)])


def as_randomized(p) -> RandomizedProtocol:
    if isinstance(p, RandomizedProtocol):
        return p
    if isinstance(p, DeterministicProtocol):
        return RandomizedProtocol.of(p)
    raise TypeError(f"not a classical protocol: {type(p).__name__}")


# serialization: nested JSON trees


def tree_to_json(node: Node | Leaf) -> dict:
    if isinstance(node, Leaf):
        return {"output": node.output}
    return {
        "owner": node.owner,
        "bits": node.bits,
        "message": {str(k): _sym_out(v) for k, v in node.message.items()},
        "children": [[_sym_out(s), tree_to_json(c)] for s, c in node.children.items()],
    }


def _sym_out(sym):
    return list(sym) if isinstance(sym, tuple) else sym


def _sym_in(sym):
    return tuple(_sym_in(s) for s in sym) if isinstance(sym, list) else sym


def tree_from_json(obj: dict) -> Node | Leaf:
    if "output" in obj:
        out = obj["output"]
        return Leaf(_sym_in(out))
    try:
        children = {_sym_in(s): tree_from_json(c) for s, c in obj["children"]}
        message = {int(k): _sym_in(v) for k, v in obj["message"].items()}
        return Node(obj["owner"], message, children, int(obj.get("bits", 1)))
    except (KeyError, TypeError, ValueError) as exc:
        raise ProtocolError(f"malformed protocol node: {exc}") from None


def protocol_to_json(p: DeterministicProtocol) -> dict:
    return {"type": "deterministic", "rows": p.rows, "cols": p.cols, "name": p.name, "tree": tree_to_json(p.root)}


def protocol_from_json(obj: dict) -> DeterministicProtocol:
    if obj.get("type", "deterministic") != "deterministic":
        raise ProtocolError("only deterministic protocol trees have a file format")
    try:
        p = DeterministicProtocol(tree_from_json(obj["tree"]), int(obj["rows"]), int(obj["cols"]), obj.get("name", ""))
    except KeyError as exc:
        raise ProtocolError(f"protocol file is missing {exc.args[0]!r}") from None
    p.validate()
    return p


def send_input_protocol(rows: int, cols: int, f, player: str = "A", name: str = "") -> DeterministicProtocol:
    """One-round protocol: ``player`` announces its input, leaves output f."""
    if player == "A":
        root = Node("A", {x: x for x in range(rows)}, {}, bits=max(1, (rows - 1).bit_length()))
        for x in range(rows):
            root.children[x] = Node("B", {y: y for y in range(cols)}, {y: Leaf(f(x, y)) for y in range(cols)}, bits=0) \
                if len({f(x, y) for y in range(cols)}) > 1 else Leaf(f(x, 0))
    else:
        root = Node("B", {y: y for y in range(cols)}, {}, bits=max(1, (cols - 1).bit_length()))
        for y in range(cols):
            root.children[y] = Node("A", {x: x for x in range(rows)}, {x: Leaf(f(x, y)) for x in range(rows)}, bits=0) \
                if len({f(x, y) for x in range(rows)}) > 1 else Leaf(f(0, y))
    return DeterministicProtocol(root, rows, cols, name or f"{player} sends input")
