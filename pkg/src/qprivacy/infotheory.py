"""Entropies and mutual informations of classical and classical-quantum states.

All logarithms are base 2.  A :class:`CqState` never stores the full joint
tensor: it keeps one row per classical index tuple together with an optional
quantum block, and entropies are evaluated through the block decomposition
``S(CQ) = H(C) + sum_c p(c) S(rho_c)``.
"""

from __future__ import annotations

import math
from typing import Hashable, Iterable, Mapping, Sequence

import numpy as np

from .qstate import DensityMatrix, trace_norm
from .tolerances import CMI_CLAMP, VALIDATION_TOL


class NumericalError(ArithmeticError):
    """An information quantity came out outside its mathematical range."""


class ProbDist:
    """Finite probability distribution over hashable outcome labels."""

    __slots__ = ("weights",)

    def __init__(self, weights: Mapping[Hashable, float], normalize: bool = False, tol: float = VALIDATION_TOL):
        w = {k: float(v) for k, v in weights.items()}
        if any(v < 0 for v in w.values()):
            raise ValueError("negative probability")
        total = sum(w.values())
        if normalize:
            if total <= 0:
                raise ValueError("cannot normalize an all-zero distribution")
            w = {k: v / total for k, v in w.items()}
        elif abs(total - 1.0) > tol:
            raise ValueError(f"probabilities sum to {total}, not 1")
        self.weights = w

    @classmethod
    def uniform(cls, labels: Iterable[Hashable]) -> ProbDist:
        labels = list(labels)
        return cls({k: 1.0 / len(labels) for k in labels})

    @classmethod
    def point(cls, label: Hashable) -> ProbDist:
        return cls({label: 1.0})

    def __getitem__(self, label) -> float:
        return self.weights.get(label, 0.0)

    def __len__(self) -> int:
        return len(self.weights)

    def items(self):
        return self.weights.items()

    def support(self) -> list:
        return [k for k, v in self.weights.items() if v > 0]

    def probabilities(self) -> np.ndarray:
        return np.fromiter(self.weights.values(), dtype=float, count=len(self.weights))

    def __repr__(self) -> str:
        return f"ProbDist({len(self.weights)} outcomes)"


def _xlogx_sum(p: np.ndarray) -> float:
    p = p[p > 0]
    return float(-np.sum(p * np.log2(p)))


def shannon_entropy(p) -> float:
    """H(p) in bits, with 0 log 0 = 0."""
    arr = p.probabilities() if isinstance(p, ProbDist) else np.asarray(p, dtype=float)
    return max(0.0, _xlogx_sum(arr))


def von_neumann_entropy(rho) -> float:
    mat = rho.entries if isinstance(rho, DensityMatrix) else np.asarray(rho)
    if mat.shape == (1, 1):
        return 0.0
    ev = np.clip(np.linalg.eigvalsh(mat), 0.0, 1.0)
    return max(0.0, _xlogx_sum(ev))


def _batched_entropy(mats: np.ndarray) -> np.ndarray:
    if mats.shape[-1] == 1:
        return np.zeros(mats.shape[0])
    ev = np.clip(np.linalg.eigvalsh(mats), 0.0, 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(ev > 0, -ev * np.log2(np.where(ev > 0, ev, 1.0)), 0.0)
    return np.maximum(terms.sum(axis=-1), 0.0)


class CqState:
    """Classical-quantum state: rows of classical coordinates with weights and blocks.

    ``codes`` is an ``(m, k)`` integer array whose columns are the classical
    coordinates named in ``roles``; ``blocks`` is ``(m, d, d)`` or ``None``
    when the quantum register is trivial.
    """

    def __init__(self, roles: Sequence[str], codes, weights, blocks=None, quantum: str = "Q", validate: bool = True):
        self.roles = tuple(roles)
        self.quantum = quantum
        self.codes = np.asarray(codes, dtype=np.int64).reshape(-1, len(self.roles))
        self.weights = np.asarray(weights, dtype=float).reshape(-1)
        self.blocks = None if blocks is None else np.asarray(blocks, dtype=complex)
        if quantum in self.roles:
            raise ValueError("quantum register name clashes with a classical role")
        if validate:
            if self.codes.shape[0] != self.weights.size:
                raise ValueError("codes and weights disagree in length")
            if np.any(self.weights < -VALIDATION_TOL):
                raise ValueError("negative weight")
            if abs(self.weights.sum() - 1.0) > VALIDATION_TOL:
                raise ValueError(f"weights sum to {self.weights.sum()}")
            if self.blocks is not None:
                if self.blocks.shape[0] != self.weights.size or self.blocks.shape[1] != self.blocks.shape[2]:
                    raise ValueError("block array has the wrong shape")
                tr = np.einsum("mii->m", self.blocks).real
                if np.max(np.abs(tr - 1.0), initial=0.0) > VALIDATION_TOL:
                    raise ValueError("blocks must have unit trace")

    @classmethod
    def from_blocks(cls, blocks: Mapping[tuple, tuple[float, DensityMatrix | None]], roles: Sequence[str], quantum: str = "Q") -> CqState:
        """Build from ``{classical tuple: (weight, block)}`` with arbitrary hashable values."""
        keys = list(blocks)
        tables: list[dict] = [dict() for _ in roles]
        codes = np.empty((len(keys), len(roles)), dtype=np.int64)
        for r, key in enumerate(keys):
            if len(key) != len(roles):
                raise ValueError(f"index {key} does not match roles {tuple(roles)}")
            for c, v in enumerate(key):
                codes[r, c] = tables[c].setdefault(v, len(tables[c]))
        weights = [blocks[k][0] for k in keys]
        mats = [blocks[k][1] for k in keys]
        if all(m is None for m in mats):
            arr = None
        else:
            dims = {m.dim for m in mats if m is not None}
            if len(dims) != 1 or any(m is None for m in mats):
                raise ValueError("all blocks must share one dimension")
            arr = np.stack([m.entries for m in mats])
        return cls(roles, codes, weights, arr, quantum)

    @property
    def quantum_dim(self) -> int:
        return 1 if self.blocks is None else self.blocks.shape[1]

    def block_map(self) -> dict[tuple, tuple[float, np.ndarray | None]]:
        out = {}
        for r in range(self.weights.size):
            out[tuple(int(v) for v in self.codes[r])] = (
                float(self.weights[r]),
                None if self.blocks is None else self.blocks[r],
            )
        return out

    def _columns(self, registers: Iterable[str]) -> tuple[list[int], bool]:
        cols, quantum = [], False
        for name in registers:
            if name == self.quantum:
                quantum = True
            elif name in self.roles:
                cols.append(self.roles.index(name))
            else:
                raise KeyError(f"unknown register {name!r}")
        return sorted(set(cols)), quantum

    def group(self, registers: Iterable[str]) -> tuple[np.ndarray, int]:
        """Group ids of rows under the given classical coordinates."""
        cols, _ = self._columns(registers)
        if not cols:
            return np.zeros(self.weights.size, dtype=np.int64), 1
        sub = self.codes[:, cols]
        _, inv = np.unique(sub, axis=0, return_inverse=True)
        inv = inv.reshape(-1)
        return inv, int(inv.max()) + 1 if inv.size else 0

    def averaged_blocks(self, group: np.ndarray, n_groups: int) -> tuple[np.ndarray, np.ndarray]:
        totals = np.bincount(group, weights=self.weights, minlength=n_groups)
        if self.blocks is None:
            return totals, np.ones((n_groups, 1, 1), dtype=complex)
        d = self.blocks.shape[1]
        acc = np.zeros((n_groups, d, d), dtype=complex)
        np.add.at(acc, group, self.weights[:, None, None] * self.blocks)
        safe = np.where(totals > 0, totals, 1.0)
        return totals, acc / safe[:, None, None]


def cq_entropy(s: CqState, registers: Iterable[str]) -> float:
    """Entropy of the reduced state on the named registers."""
    registers = list(registers)
    cols, quantum = s._columns(registers)
    group, n = s.group(registers)
    totals = np.bincount(group, weights=s.weights, minlength=n)
    h = shannon_entropy(totals)
    if quantum and s.blocks is not None:
        totals, avg = s.averaged_blocks(group, n)
        h += float(np.dot(totals, _batched_entropy(avg)))
    return h


def conditional_mutual_information(s: CqState, a: Iterable[str], b: Iterable[str], c: Iterable[str] = ()) -> float:
    """I(A:B|C) = S(AC) + S(BC) - S(C) - S(ABC), clamped at zero for float noise."""
    a, b, c = list(a), list(b), list(c)
    if set(a) & set(b) or set(a) & set(c) or set(b) & set(c):
        raise ValueError("register sets must be disjoint")
    val = cq_entropy(s, a + c) + cq_entropy(s, b + c) - cq_entropy(s, c) - cq_entropy(s, a + b + c)
    if val < -CMI_CLAMP:
        raise NumericalError(f"conditional mutual information {val} is negative")
    return max(0.0, val)


def mutual_information(s: CqState, a: Iterable[str], b: Iterable[str]) -> float:
    return conditional_mutual_information(s, a, b, ())


def l1_distance(p: ProbDist, q: ProbDist) -> float:
    keys = set(p.weights) | set(q.weights)
    return float(sum(abs(p[k] - q[k]) for k in keys))


def continuity_bound(d: float, n: float, quantum: bool = False) -> float:
    """d n - d log d, valid for d <= 1/2 (distributions) or d <= 1/e (states)."""
    limit = 1 / math.e if quantum else 0.5
    if not 0.0 <= d <= limit + 1e-15:
        raise ValueError(f"distance {d} outside [0, {limit:.6g}]")
    if d == 0:
        return 0.0
    return d * n - d * math.log2(d)


def max_entropy_bound(gamma: float, n: float) -> float:
    """gamma n - gamma log gamma."""
    if not 0.0 < gamma <= 1.0:
        raise ValueError(f"gamma {gamma} outside (0, 1]")
    return gamma * n - gamma * math.log2(gamma)


def average_encoding_check(s: CqState, x: str = "X") -> tuple[float, float]:
    """Return ``(sum_x p_x ||rho_bar - rho_x||, sqrt(2 ln 2 I(Q:X)))``."""
    group, n = s.group([x])
    px, rho_x = s.averaged_blocks(group, n)
    rho_bar = np.einsum("g,gij->ij", px, rho_x)
    lhs = float(sum(p * trace_norm(rho_bar - r) for p, r in zip(px, rho_x) if p > 0))
    info = mutual_information(s, [s.quantum], [x])
    return lhs, math.sqrt(2 * math.log(2) * info)
