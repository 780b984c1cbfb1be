"""Brute-force reference computations on small communication matrices.

These are deliberately naive and share no code with the privacy analyzer, so
agreement between the two is meaningful.  Only finite quantities are
computed; asymptotic statements built from them are out of scope here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core.classical import Leaf, Node, as_randomized
from .core.matrix import CommMatrix
from .infotheory import ProbDist

EXHAUSTIVE_SIDE = 16
HARD_SIDE = 64


class OracleSizeError(ValueError):
    pass


@dataclass(frozen=True)
class RectangleStat:
    rows: tuple[int, ...]
    cols: tuple[int, ...]
    size: float = 0.0
    correctness: float = 1.0

    @property
    def width(self) -> int:
        return min(len(self.rows), len(self.cols))


def _check_side(m: CommMatrix, cap: int) -> None:
    if max(m.shape) > cap:
        raise OracleSizeError(f"matrix side {max(m.shape)} exceeds the oracle cap {cap}")


def _is_monochromatic(m: CommMatrix, rows, cols) -> bool:
    vals = {int(m.codes[x, y]) for x in rows for y in cols}
    return len(vals) <= 1


def _width_exhaustive(codes: np.ndarray) -> tuple[int, tuple, tuple]:
    """Every nonempty row subset; its best columns are those constant on it."""
    r, _ = codes.shape
    best = (0, (), ())
    for mask in range(1, 2**r):
        rows = tuple(i for i in range(r) if mask >> i & 1)
        sub = codes[list(rows)]
        for a in np.unique(sub[0]):
            cols = tuple(np.flatnonzero(np.all(sub == a, axis=0)).tolist())
            w = min(len(rows), len(cols))
            if w > best[0]:
                best = (w, rows, cols)
    return best


def _width_branch_and_bound(codes: np.ndarray) -> tuple[int, tuple, tuple]:
    """Grow row sets in index order, tracking the columns still constant at value ``a``.

    A branch is cut once ``min(|rows| + remaining rows, |cols|)`` cannot beat the best.
    """
    r, c = codes.shape
    best = [0, (), ()]

    def grow(start, rows, cols):
        w = min(len(rows), len(cols))
        if w > best[0]:
            best[:] = [w, tuple(rows), tuple(cols)]
        for i in range(start, r):
            if min(len(rows) + r - i, len(cols)) <= best[0]:
                return
            keep = [j for j in cols if codes[i, j] == codes[rows[0], j]]
            if len(keep) > best[0]:
                grow(i + 1, rows + [i], keep)

    for i in range(r):
        for a in np.unique(codes[i]):
            cols = np.flatnonzero(codes[i] == a).tolist()
            if min(r - i, len(cols)) > best[0]:
                grow(i + 1, [i], cols)
    return best[0], best[1], best[2]


def max_monochromatic_width(m: CommMatrix) -> tuple[int, RectangleStat]:
    """Largest ``min(|rows|, |cols|)`` over monochromatic rectangles, with a witness."""
    _check_side(m, HARD_SIDE)
    codes = m.codes
    transpose = codes.shape[0] > codes.shape[1]
    work = codes.T if transpose else codes
    if work.shape[0] <= EXHAUSTIVE_SIDE:
        w, rows, cols = _width_exhaustive(work)
    else:
        w, rows, cols = _width_branch_and_bound(work)
    if transpose:
        rows, cols = cols, rows
    wit = RectangleStat(tuple(rows), tuple(cols))
    if not _is_monochromatic(m, wit.rows, wit.cols) or wit.width != w:
        raise AssertionError("width witness failed its direct check")
    return w, wit


def cl0_lower_bound(m: CommMatrix) -> float:
    """``(n - log2 r(f)) / 2 - 1`` for a ``2^n x 2^n`` matrix; may be negative."""
    if m.rows != m.cols or m.rows & (m.rows - 1):
        raise ValueError("square matrix with a power-of-two side required")
    n = m.rows.bit_length() - 1
    r, _ = max_monochromatic_width(m)
    return (n - math.log2(r)) / 2 - 1


def _weights(m: CommMatrix, mu: ProbDist) -> np.ndarray:
    w = np.zeros(m.shape)
    for (x, y), p in mu.items():
        w[x, y] += p
    return w


def largest_correct_rectangle(m: CommMatrix, mu: ProbDist, a, eps: float, tol: float = 1e-12) -> RectangleStat:
    """Heaviest rectangle whose ``a``-entries carry at least ``1 - eps`` of its weight.

    Row subsets are enumerated; for each, columns of nonnegative gain
    ``mu(a-part) - (1 - eps) mu(column)`` are always worth taking and the rest
    is a small 0/1 knapsack solved exactly by depth-first search.
    """
    _check_side(m, EXHAUSTIVE_SIDE)
    w = _weights(m, mu)
    hit = (m.codes == m.code_of(a)) if m.has_value(a) else np.zeros(m.shape, dtype=bool)
    r, c = m.shape
    best = RectangleStat((), (), -1.0, 1.0)
    for mask in range(1, 2**r):
        rows = [i for i in range(r) if mask >> i & 1]
        tot = w[rows].sum(axis=0)
        good = (w[rows] * hit[rows]).sum(axis=0)
        gain = good - (1 - eps) * tot
        base = [j for j in range(c) if gain[j] >= -tol]
        rest = sorted((j for j in range(c) if gain[j] < -tol), key=lambda j: gain[j] / max(tot[j], 1e-300), reverse=True)
        cap = float(gain[base].sum()) if base else 0.0
        chosen = _knapsack(rest, tot, -gain, cap + tol)
        cols = sorted(base + chosen)
        if not cols:
            continue
        size = float(tot[cols].sum())
        if size > best.size + tol:
            frac = float(good[cols].sum()) / size if size > 0 else 1.0
            best = RectangleStat(tuple(rows), tuple(cols), size, frac)
    return best


def _knapsack(items: list[int], value: np.ndarray, cost: np.ndarray, cap: float) -> list[int]:
    best_val, best_set = 0.0, []

    def bound(k, room):
        v = 0.0
        for j in items[k:]:
            if cost[j] <= room:
                room -= cost[j]
                v += value[j]
            else:
                return v + value[j] * room / cost[j]
        return v

    def go(k, room, val, chosen):
        nonlocal best_val, best_set
        if val > best_val:
            best_val, best_set = val, list(chosen)
        if k == len(items) or val + bound(k, room) <= best_val:
            return
        j = items[k]
        if cost[j] <= room:
            chosen.append(j)
            go(k + 1, room - cost[j], val + value[j], chosen)
            chosen.pop()
        go(k + 1, room, val, chosen)

    go(0, cap, 0.0, [])
    return best_set


# independent privacy recomputation


def _walk(root, x: int, y: int) -> tuple[list, object]:
    messages, node = [], root
    while not isinstance(node, Leaf):
        assert isinstance(node, Node)
        sym = node.message[x if node.owner == "A" else y]
        messages.append(sym)
        node = node.children[sym]
    return messages, node.output


def _cmi_bits(joint: dict) -> float:
    """``I(V : O | C)`` from a dict ``(c, o, v) -> p`` via the KL form."""
    pc, pco, pcv = {}, {}, {}
    for (cc, o, v), p in joint.items():
        pc[cc] = pc.get(cc, 0.0) + p
        pco[cc, o] = pco.get((cc, o), 0.0) + p
        pcv[cc, v] = pcv.get((cc, v), 0.0) + p
    total = 0.0
    for (cc, o, v), p in joint.items():
        if p > 0:
            total += p * math.log2(p * pc[cc] / (pco[cc, o] * pcv[cc, v]))
    return total


@dataclass
class VerifyReport:
    errors: list[float]
    losses: list[dict] = field(default_factory=list)  # per distribution: {(t, player): bits}

    @property
    def max_error(self) -> float:
        return max(self.errors, default=0.0)

    @property
    def max_loss(self) -> float:
        return max((v for d in self.losses for v in d.values()), default=0.0)


def exhaustive_privacy_verify(p, m: CommMatrix, dists: list[ProbDist]) -> VerifyReport:
    """Error and per-round privacy loss by enumerating the joint distribution of
    inputs, coins and transcript prefixes."""
    r = as_randomized(p)
    runs = {}
    for x, y in m.pairs():
        for i, (q, det) in enumerate(r.seeds):
            runs[x, y, i] = (q, r.coins[i] if r.visibility == "private" else (i, i), *_walk(det.root, x, y))
    depth = max(len(v[2]) for v in runs.values())
    report = VerifyReport([])
    for mu in dists:
        err = 0.0
        for (x, y), pxy in mu.items():
            for i in range(len(r.seeds)):
                q, _, _, out = runs[x, y, i]
                if out != m.value(x, y):
                    err += pxy * q
        report.errors.append(err)
        losses = {}
        for t in range(depth + 1):
            for player in ("A", "B"):
                joint: dict = {}
                for (x, y), pxy in mu.items():
                    if pxy == 0:
                        continue
                    own, other = (x, y) if player == "A" else (y, x)
                    for i in range(len(r.seeds)):
                        q, coins, msgs, _ = runs[x, y, i]
                        coin = coins[0] if player == "A" else coins[1]
                        k = ((own, m.value(x, y)), other, (coin, tuple(msgs[:t])))
                        joint[k] = joint.get(k, 0.0) + pxy * q
                losses[t, player] = max(0.0, _cmi_bits(joint))
        report.losses.append(losses)
    return report
