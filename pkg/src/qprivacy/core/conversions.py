"""Conversions between protocol models: repetition, seed sparsification, seed selection."""

from __future__ import annotations

import math
from collections import Counter
from itertools import product

import numpy as np

from ..infotheory import ProbDist
from .classical import ABORT, DeterministicProtocol, Leaf, Node, ProtocolError, RandomizedProtocol, as_randomized
from .execution import error_on_distribution
from .matrix import CommMatrix


def majority(outputs) -> object:
    """Strict majority value, or ``abort`` when there is none."""
    value, count = Counter(outputs).most_common(1)[0]
    return value if 2 * count > len(outputs) else ABORT


def _graft(node, rest: list, collected: tuple):
    if isinstance(node, Leaf):
        outs = collected + (node.output,)
        if not rest:
            return Leaf(majority(outs))
        return _graft(rest[0], rest[1:], outs)
    children = {sym: _graft(c, rest, collected) for sym, c in node.children.items()}
    return Node(node.owner, dict(node.message), children, node.bits)


def concatenate(protocols: list[DeterministicProtocol]) -> DeterministicProtocol:
    """Run the protocols one after another and output the majority of their outputs."""
    first = protocols[0]
    roots = [p.root for p in protocols]
    root = _graft(roots[0], roots[1:], ())
    return DeterministicProtocol(root, first.rows, first.cols, f"majority of {len(protocols)}")


def boost(p, t: int) -> RandomizedProtocol:
    """``t`` independent repetitions with a majority vote (``t`` odd)."""
    if t < 1 or t % 2 == 0:
        raise ValueError(f"boosting needs an odd repetition count, got {t}")
    r = as_randomized(p)
    if t == 1:
        return r
    seeds, coins = [], []
    for combo in product(range(len(r.seeds)), repeat=t):
        prob = math.prod(r.seeds[i][0] for i in combo)
        seeds.append((prob, concatenate([r.seeds[i][1] for i in combo])))
        labels = [r.coin_labels(i) for i in combo]
        coins.append((tuple(a for a, _ in labels), tuple(b for _, b in labels)))
    total = sum(q for q, _ in seeds)
    seeds = [(q / total, d) for q, d in seeds]
    if r.visibility == "public":
        return RandomizedProtocol(seeds, "public", name=f"{r.name or 'protocol'} x{t}")
    return RandomizedProtocol(seeds, "private", coins, name=f"{r.name or 'protocol'} x{t}")


def default_seed_count(n: int, gamma: float, eps: float, delta: float) -> int:
    """Seed count used when removing public coins; the constant 64 is a chosen default."""
    return math.ceil(64 * (n + math.log2(1.0 / (gamma**2 * min(eps, delta)))))


def sparsify_public_coin(r: RandomizedProtocol, k: int, rng_seed: int | np.random.Generator = 0) -> RandomizedProtocol:
    """Replace the public coin by Al's uniform choice among ``k`` sampled seeds.

    Al announces the chosen index first, at ``ceil(log2 k)`` bits.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    if r.visibility != "public":
        raise ProtocolError("sparsification applies to public-coin protocols")
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)
    probs = np.array([q for q, _ in r.seeds])
    picks = rng.choice(len(r.seeds), size=k, p=probs / probs.sum())
    if k == 1:
        return RandomizedProtocol.of(r.seeds[int(picks[0])][1])
    bits = math.ceil(math.log2(k))
    seeds, coins = [], []
    for i, s in enumerate(picks):
        det = r.seeds[int(s)][1]
        root = Node("A", {x: i for x in range(det.rows)}, {i: det.root}, bits=bits)
        seeds.append((1.0 / k, DeterministicProtocol(root, det.rows, det.cols, f"index {i}")))
        coins.append((i, None))
    return RandomizedProtocol(seeds, "private", coins, name=f"{r.name or 'protocol'} on {k} seeds")


def seed_scores(r: RandomizedProtocol, mu: ProbDist, f: CommMatrix, weight_error: float, weight_loss: float) -> list[float]:
    from ..privacy import max_privacy_loss

    out = []
    for _, det in r.seeds:
        score = weight_error * error_on_distribution(det, f, mu)
        if weight_loss:
            score += weight_loss * max_privacy_loss(det, mu, f)
        out.append(score)
    return out


def best_deterministic_for_distribution(r, mu: ProbDist, f: CommMatrix, weight_error: float = 1.0,
                                        weight_loss: float = 1.0) -> DeterministicProtocol:
    """Seed minimizing ``weight_error * error + weight_loss * max privacy loss`` on ``mu``."""
    if weight_error < 0 or weight_loss < 0:
        raise ValueError("weights must be nonnegative")
    r = as_randomized(r)
    scores = seed_scores(r, mu, f, weight_error, weight_loss)
    return r.seeds[int(np.argmin(scores))][1]
