"""Small randomized protocols used to exercise the conversion constructions."""

from __future__ import annotations

from itertools import product

from ..core.classical import DeterministicProtocol, Leaf, Node, RandomizedProtocol


def noisy_and(flip: float = 1 / 3) -> RandomizedProtocol:
    """AND of two bits where Al's announced bit is flipped with private probability ``flip``.

    Wrong with probability ``flip`` exactly when ``y = 1``.
    """
    seeds, coins = [], []
    for c, p in ((0, 1 - flip), (1, flip)):
        root = Node("A", {x: x ^ c for x in (0, 1)}, {}, bits=1)
        for b in (0, 1):
            root.children[b] = Node("B", {y: y for y in (0, 1)}, {y: Leaf(b & y) for y in (0, 1)}, bits=1)
        seeds.append((p, DeterministicProtocol(root, 2, 2, f"flip={c}")))
        coins.append((c, None))
    return RandomizedProtocol(seeds, "private", coins, name="noisy AND")


def parity(v: int) -> int:
    return bin(v).count("1") & 1


def equality_hash(n: int, hashes: int = 2) -> RandomizedProtocol:
    """Public-coin equality test: Al sends ``hashes`` inner-product bits of ``x``.

    Bob answers 1 iff they match his own.  Unequal inputs collide with
    probability ``2^-hashes``.
    """
    size = 2**n
    seeds = []
    combos = list(product(range(size), repeat=hashes))
    for rs in combos:
        sig = lambda v: tuple(parity(v & r) for r in rs)
        root = Node("A", {x: sig(x) for x in range(size)}, {}, bits=hashes)
        for s in product((0, 1), repeat=hashes):
            root.children[s] = Node("B", {y: int(sig(y) == s) for y in range(size)},
                                    {0: Leaf(0), 1: Leaf(1)}, bits=1)
        seeds.append((1 / len(combos), DeterministicProtocol(root, size, size, f"hash {rs}")))
    return RandomizedProtocol(seeds, "public", name=f"equality hash x{hashes}")
