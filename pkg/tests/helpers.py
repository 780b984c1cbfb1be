import numpy as np

from qprivacy.core import Leaf, Node


def random_tree(rng: np.random.Generator, rows: int, cols: int, depth: int):
    """Random protocol tree with binary messages and outputs in {0, 1, 2}."""
    if depth == 0 or rng.random() < 0.2:
        return Leaf(int(rng.integers(0, 3)))
    owner = "A" if rng.random() < 0.5 else "B"
    dom = rows if owner == "A" else cols
    msg = {v: int(rng.integers(0, 2)) for v in range(dom)}
    return Node(owner, msg, {s: random_tree(rng, rows, cols, depth - 1) for s in set(msg.values())})
