"""Communication matrices and distributions over input pairs."""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import Callable, Hashable, Sequence

import numpy as np

from ..infotheory import ProbDist


@dataclass(frozen=True, eq=False)
class CommMatrix:
    """Table of f(x, y); rows are Al's inputs, columns Bob's.

    ``codes[x, y]`` indexes into ``alphabet``.
    """

    codes: np.ndarray
    alphabet: tuple
    n_bits: int | None = None
    name: str = ""
    _index: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        codes = np.asarray(self.codes, dtype=np.int64)
        if codes.ndim != 2 or codes.size == 0:
            raise ValueError("communication matrix must be a nonempty 2-d table")
        if codes.min() < 0 or codes.max() >= len(self.alphabet):
            raise ValueError("entry outside the alphabet")
        object.__setattr__(self, "codes", codes)
        object.__setattr__(self, "_index", {a: i for i, a in enumerate(self.alphabet)})

    @classmethod
    def from_table(cls, table: Sequence[Sequence[Hashable]], alphabet: Sequence[Hashable] | None = None,
                   n_bits: int | None = None, name: str = "") -> CommMatrix:
        if alphabet is None:
            seen: dict = {}
            for row in table:
                for v in row:
                    seen.setdefault(v, None)
            alphabet = sorted(seen, key=lambda v: (str(type(v)), v))
        alphabet = tuple(alphabet)
        index = {a: i for i, a in enumerate(alphabet)}
        widths = {len(r) for r in table}
        if len(widths) != 1:
            raise ValueError("table is not rectangular")
        try:
            codes = np.array([[index[v] for v in row] for row in table], dtype=np.int64)
        except KeyError as exc:
            raise ValueError(f"entry {exc.args[0]!r} not in alphabet") from None
        return cls(codes, alphabet, n_bits, name)

    @classmethod
    def from_function(cls, f: Callable[[int, int], Hashable], rows: int, cols: int,
                      alphabet: Sequence[Hashable] | None = None, n_bits: int | None = None, name: str = "") -> CommMatrix:
        table = [[f(x, y) for y in range(cols)] for x in range(rows)]
        return cls.from_table(table, alphabet, n_bits, name)

    @property
    def rows(self) -> int:
        return self.codes.shape[0]

    @property
    def cols(self) -> int:
        return self.codes.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.codes.shape

    def value(self, x: int, y: int):
        return self.alphabet[self.codes[x, y]]

    def code_of(self, value) -> int:
        return self._index[value]

    def has_value(self, value) -> bool:
        return value in self._index

    def table(self) -> list[list]:
        return [[self.alphabet[c] for c in row] for row in self.codes]

    def submatrix(self, rows: Sequence[int], cols: Sequence[int]) -> np.ndarray:
        return self.codes[np.ix_(list(rows), list(cols))]

    def pairs(self) -> list[tuple[int, int]]:
        return list(product(range(self.rows), range(self.cols)))

    def __repr__(self) -> str:
        return f"CommMatrix({self.name or 'f'}: {self.rows}x{self.cols}, |alphabet|={len(self.alphabet)})"


def idmin_matrix(n: int) -> CommMatrix:
    """Identified minimum on n-bit inputs: 2x+1 if x <= y else 2y."""
    size = 2**n
    return CommMatrix.from_function(lambda x, y: 2 * x + 1 if x <= y else 2 * y, size, size,
                                    alphabet=range(2 * size), n_bits=n, name=f"IdMin_{n}")


def and_matrix() -> CommMatrix:
    return CommMatrix.from_table([[0, 0], [0, 1]], (0, 1), n_bits=1, name="AND")


def xor_matrix() -> CommMatrix:
    return CommMatrix.from_table([[0, 1], [1, 0]], (0, 1), n_bits=1, name="XOR")


def or_matrix() -> CommMatrix:
    return CommMatrix.from_table([[0, 1], [1, 1]], (0, 1), n_bits=1, name="OR")


def disj_matrix(universe: int) -> CommMatrix:
    """DISJ over subsets of a ``universe``-element set (bitmasks); 1 means disjoint."""
    size = 2**universe
    return CommMatrix.from_function(lambda x, y: int(x & y == 0), size, size, alphabet=(0, 1),
                                    n_bits=universe, name=f"DISJ_{universe}")


def uniform_pairs(m: CommMatrix) -> ProbDist:
    w = 1.0 / (m.rows * m.cols)
    return ProbDist({p: w for p in m.pairs()})


def random_pair_distribution(m: CommMatrix, rng: np.random.Generator, sparsity: float = 0.0) -> ProbDist:
    """Dirichlet-random distribution on input pairs; ``sparsity`` zeroes a fraction of cells."""
    w = rng.dirichlet(np.ones(m.rows * m.cols))
    if sparsity > 0:
        mask = rng.random(w.size) < sparsity
        if mask.all():
            mask[rng.integers(w.size)] = False
        w = np.where(mask, 0.0, w)
        w = w / w.sum()
    return ProbDist({p: float(v) for p, v in zip(m.pairs(), w)})


def pair_weights(m: CommMatrix, mu: ProbDist) -> np.ndarray:
    """Distribution on pairs as a rows x cols array."""
    arr = np.zeros(m.shape)
    for (x, y), p in mu.items():
        if not (0 <= x < m.rows and 0 <= y < m.cols):
            raise ValueError(f"distribution mentions pair {(x, y)} outside the matrix")
        arr[x, y] += p
    return arr
