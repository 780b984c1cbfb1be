"""Identified-minimum protocols built from threshold queries.

Everything here is one tree shape.  Al repeatedly sends ``("ask", z)``, which
asks whether ``z >= y`` and tells Bob ``x > z``.  Bob replies ``"no"`` or
``("yes", y)``, and a "yes" ends the run with output ``2y``.  Al ends a level
with ``("done", x)`` (output ``2x+1``) or ``("up",)`` (recurse into the upper
half).  Each variant only differs in which queries Al asks for a given ``x``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from ..core.classical import ABORT, DeterministicProtocol, Leaf, Node
from ..infotheory import ProbDist


@dataclass(frozen=True)
class Level:
    """Bob's values still in play are ``[lo, hi)``; ``m`` is the level's bit length."""

    lo: int
    hi: int
    m: int
    depth: int


@dataclass
class QuerySchedule:
    gamma: float
    levels: int
    queries: dict  # (x, level depth) -> list of absolute query values

    def for_input(self, x: int) -> list[list[int]]:
        return [self.queries[k] for k in sorted(self.queries) if k[0] == x]


# Al's plan for one input at one level: list of query values and the closing action.
Plan = Callable[[int, Level], tuple[list[int], str, "Level | None"]]


def growth_points(gamma: float, limit: int) -> list[int]:
    """Distinct values ceil((1 + gamma)^i) below ``limit``, for i = 0, 1, ..."""
    out: list[int] = []
    base = 1.0 + gamma
    v, power = 1, 1.0
    while v < limit:
        if not out or v > out[-1]:
            out.append(v)
        power *= base
        v = math.ceil(power - 1e-12)
    return out


def build_query_tree(rows: int, cols: int, plan: Plan, top: Level, bits: int, name: str) -> DeterministicProtocol:
    """Assemble the deterministic tree for a query plan."""
    plans: dict = {}

    def plan_of(x: int, level: Level):
        key = (x, level)
        if key not in plans:
            plans[key] = plan(x, level)
        return plans[key]

    def al_node(states: dict[int, tuple[Level, int]], ys: tuple[int, ...]):
        """``states`` maps Al's input to (level, position in its query list)."""
        groups: dict = {}
        nxt: dict = {}
        for x, (level, pos) in states.items():
            queries, action, child = plan_of(x, level)
            if pos < len(queries):
                sym = ("ask", queries[pos])
                nxt.setdefault(sym, {})[x] = (level, pos + 1)
            elif action == "done":
                sym = ("done", x)
            else:
                sym = ("up",)
                nxt.setdefault(sym, {})[x] = (child, 0)
            groups[x] = sym
        # after a "no" that pins Al's input and only a "done" remains, the answer is known
        if len(states) == 1 and next(iter(groups.values()))[0] == "done":
            (x,) = states
            return Leaf(2 * x + 1)
        children = {}
        for sym in dict.fromkeys(groups.values()):
            if sym[0] == "done":
                children[sym] = Leaf(2 * sym[1] + 1)
            elif sym[0] == "ask":
                children[sym] = bob_node(nxt[sym], ys, sym[1])
            else:
                if any(child is None for child, _ in nxt[sym].values()):
                    children[sym] = Leaf(ABORT)
                else:
                    children[sym] = al_node(nxt[sym], ys)
        return Node("A", groups, children, bits)

    def bob_node(states, ys, z):
        message = {y: ("yes", y) if y <= z else "no" for y in ys}
        children = {("yes", y): Leaf(2 * y) for y in ys if y <= z}
        rest = tuple(y for y in ys if y > z)
        if rest:
            children["no"] = al_node(states, rest)
        else:
            message = {y: ("yes", y) for y in ys}
        return Node("B", message, children, bits + 1)

    root = al_node({x: (top, 0) for x in range(rows)}, tuple(range(cols)))
    return DeterministicProtocol(root, rows, cols, name)


def idmin_private(n: int) -> DeterministicProtocol:
    """Al asks z = 0, 1, ..., x-1 in turn; no leakage, 2(2^n - 1) rounds at worst."""
    if n < 1:
        raise ValueError("n must be at least 1")
    size = 2**n
    top = Level(0, size, n, 1)

    def plan(x, level):
        return list(range(level.lo, x)), "done", None

    return build_query_tree(size, size, plan, top, n, f"private IdMin_{n}")


FALLBACK_SIZE = 8


def _level_plan(x: int, level: Level, levels: int, thresholds: Callable[[int, Level], tuple[list[int], int]]):
    """Shared control flow: query, then finish or climb; fall back on small intervals."""
    if level.hi - level.lo <= FALLBACK_SIZE:
        return list(range(level.lo, x)), "done", None
    queries, split = thresholds(x, level)
    if x <= split:
        return queries, "done", None
    if level.depth >= levels:
        return queries, "up", None
    return queries, "up", Level(split, level.hi, level.m - 1, level.depth + 1)


def level_count(delta: float) -> int:
    return max(1, math.ceil(math.log2(1.0 / delta)))


def idmin_leaky_uniform(n: int, delta: float) -> DeterministicProtocol:
    """Geometric queries ``ceil((1+g)^i)`` with ``g = delta / (16 n)``.

    After ``ceil(log2(1/delta))`` levels the protocol gives up (output ``abort``).
    """
    if n < 1 or not 0 < delta < 1:
        raise ValueError("need n >= 1 and 0 < delta < 1")
    gamma = delta / (16 * n)
    size = 2**n
    levels = level_count(delta)
    cache: dict = {}

    def thresholds(x, level):
        half = 2 ** (level.m - 1)
        rel = x - level.lo
        if half not in cache:
            cache[half] = growth_points(gamma, half)
        pts = [p for p in cache[half] if p < rel]
        return [level.lo + p for p in pts], level.lo + half

    plan = lambda x, level: _level_plan(x, level, levels, thresholds)
    return build_query_tree(size, size, plan, Level(0, size, n, 1), n, f"leaky IdMin_{n} (delta={delta:g})")


def query_schedule(n: int, delta: float) -> QuerySchedule:
    """Relative query values per level for the uniform variant."""
    gamma = delta / (16 * n)
    levels = level_count(delta)
    queries = {}
    for d in range(1, levels + 1):
        m = n - d + 1
        queries[("all", d)] = growth_points(gamma, 2 ** (m - 1))
    return QuerySchedule(gamma, levels, queries)


def quantile_points(weights: np.ndarray, m: int) -> np.ndarray:
    """``r_l`` for ``l = 1..2^m``: least ``r`` with ``sum_{v < r} w_v >= l / 2^m``.

    Values are relative to the interval start; uniform weights give ``r_l = l``.
    """
    cum = np.concatenate([[0.0], np.cumsum(weights)])
    targets = np.arange(1, 2**m + 1) / 2**m
    r = np.searchsorted(cum, targets - 1e-12, side="left")
    return np.minimum(r, len(weights))


def idmin_leaky_adapted(n: int, delta: float, mu_x: Sequence[ProbDist] | np.ndarray) -> DeterministicProtocol:
    """Leaky protocol whose queries follow the quantiles of Bob's input given Al's.

    ``mu_x[x]`` is the conditional distribution of ``y`` given ``x``.
    """
    size = 2**n
    cond = np.zeros((size, size))
    for x in range(size):
        row = mu_x[x]
        if isinstance(row, ProbDist):
            for y, p in row.items():
                if not 0 <= y < size:
                    raise ValueError(f"conditional distribution for x={x} mentions y={y}")
                cond[x, y] = p
        else:
            cond[x] = np.asarray(row, dtype=float)
        if cond[x].min() < 0 or abs(cond[x].sum() - 1) > 1e-6:
            raise ValueError(f"conditional distribution for x={x} is not a distribution")
    gamma = delta / (16 * n)
    levels = level_count(delta)

    def thresholds(x, level):
        w = cond[x, level.lo:level.hi].copy()
        w = w / w.sum() if w.sum() > 0 else np.full(w.size, 1.0 / w.size)
        r = quantile_points(w, level.m)
        half = 2 ** (level.m - 1)
        split = level.lo + int(r[half - 1])
        pts = growth_points(gamma, half)
        qs = sorted({level.lo + int(r[l - 1]) for l in pts})
        qs = [q for q in qs if q < min(x, split)]
        return qs, split

    plan = lambda x, level: _level_plan(x, level, levels, thresholds)
    return build_query_tree(size, size, plan, Level(0, size, n, 1), n, f"adapted leaky IdMin_{n} (delta={delta:g})")


def conditional_rows(mu: ProbDist, n: int) -> np.ndarray:
    """Row-conditional distributions of a joint distribution on pairs (uniform where a row is empty)."""
    size = 2**n
    w = np.zeros((size, size))
    for (x, y), p in mu.items():
        w[x, y] += p
    tot = w.sum(axis=1, keepdims=True)
    return np.where(tot > 0, w / np.where(tot > 0, tot, 1.0), 1.0 / size)


def idmin_communication_bound(n: int, delta: float, c: float) -> float:
    return c * n**3 / delta * math.log2(1.0 / delta)
