"""Per-round player views over all input pairs, for any protocol kind.

A :class:`ViewTable` lists, for every input pair, the distribution of one
player's register at one round boundary: a key id (transcript and private
record, interned), its probability, and an optional quantum block.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..infotheory import CqState, ProbDist
from ..tolerances import DEFAULT_MAX_AMPLITUDES
from .classical import ABORT, DeterministicProtocol, ProtocolError, RandomizedProtocol, as_randomized
from .matrix import CommMatrix, pair_weights
from .quantum import ExecutionResult, QuantumProtocol, run_quantum


@dataclass
class ViewTable:
    pair: np.ndarray  # (m,) flat pair index x * cols + y
    key: np.ndarray  # (m,) interned view key
    prob: np.ndarray  # (m,) P(key | pair)
    blocks: np.ndarray | None  # (m, d, d) or None for classical views
    n_keys: int

    @property
    def point_mass(self) -> bool:
        return self.blocks is None and self.pair.size == np.unique(self.pair).size


class Executions:
    """All executions of a protocol on every input pair of ``matrix``.

    Classical protocols store ``(prob, coin_A, coin_B, transcript, output)``
    branches per pair; quantum protocols store an :class:`ExecutionResult`.
    """

    def __init__(self, proto, matrix: CommMatrix, budget: int = DEFAULT_MAX_AMPLITUDES, workers: int = 1):
        if (proto.rows, proto.cols) != matrix.shape:
            raise ProtocolError(f"protocol is {proto.rows}x{proto.cols}, matrix is {matrix.rows}x{matrix.cols}")
        self.proto = proto
        self.matrix = matrix
        self.quantum = isinstance(proto, QuantumProtocol)
        pairs = matrix.pairs()
        if self.quantum:
            run = lambda p: run_quantum(proto, p[0], p[1], budget=budget)
            if workers > 1:
                with ThreadPoolExecutor(workers) as ex:
                    self.results: list[ExecutionResult] = list(ex.map(run, pairs))
            else:
                self.results = [run(p) for p in pairs]
            self.n_rounds = self.results[0].n_boundaries - 1
        else:
            r = as_randomized(proto)
            self.branches = []
            for x, y in pairs:
                row = []
                for i, (p, det) in enumerate(r.seeds):
                    out, tr, bits = det.run(x, y)
                    ca, cb = r.coin_labels(i)
                    row.append((p, ca, cb, tr, out, bits))
                self.branches.append(row)
            self.n_rounds = max(len(b[3]) for row in self.branches for b in row)
        self._cache: dict = {}

    def output_distribution(self, x: int, y: int) -> dict:
        idx = x * self.matrix.cols + y
        if self.quantum:
            return self.results[idx].output_distribution()
        out: dict = {}
        for p, _, _, _, o, _ in self.branches[idx]:
            out[o] = out.get(o, 0.0) + p
        return out

    def error(self, mu: ProbDist) -> float:
        """Probability of a wrong answer; ``abort`` counts as wrong."""
        w = pair_weights(self.matrix, mu)
        err = 0.0
        for x, y in self.matrix.pairs():
            if w[x, y] == 0:
                continue
            correct = self.output_distribution(x, y).get(self.matrix.value(x, y), 0.0)
            err += w[x, y] * (1.0 - correct)
        return max(0.0, err)

    def worst_case_error(self) -> float:
        return max(1.0 - self.output_distribution(x, y).get(self.matrix.value(x, y), 0.0)
                   for x, y in self.matrix.pairs())

    def check_round(self, t: int) -> None:
        if not (isinstance(t, (int, np.integer)) and 0 <= t <= self.n_rounds):
            raise ProtocolError(f"round {t} outside 0..{self.n_rounds}")

    def views(self, t: int, player: str) -> ViewTable:
        self.check_round(t)
        if player not in ("A", "B"):
            raise ProtocolError(f"unknown player {player!r}")
        ck = (t, player)
        if ck not in self._cache:
            self._cache[ck] = self._quantum_views(t, player) if self.quantum else self._classical_views(t, player)
        return self._cache[ck]

    def _classical_views(self, t: int, player: str) -> ViewTable:
        intern: dict = {}
        pair, key, prob = [], [], []
        for idx, row in enumerate(self.branches):
            local: dict = {}
            for p, ca, cb, tr, _, _ in row:
                k = intern.setdefault((ca if player == "A" else cb, tr[:t]), len(intern))
                local[k] = local.get(k, 0.0) + p
            for k, p in local.items():
                pair.append(idx)
                key.append(k)
                prob.append(p)
        return ViewTable(np.array(pair), np.array(key), np.array(prob), None, len(intern))

    def _quantum_views(self, t: int, player: str) -> ViewTable:
        intern: dict = {}
        pair, key, prob, blocks = [], [], [], []
        for idx, res in enumerate(self.results):
            for k, (w, m) in res.per_round_states[t][player].items():
                pair.append(idx)
                key.append(intern.setdefault(k, len(intern)))
                prob.append(w)
                blocks.append(m)
        return ViewTable(np.array(pair), np.array(key), np.array(prob), np.stack(blocks), len(intern))


def execute(proto, matrix: CommMatrix, **kw) -> Executions:
    if isinstance(proto, Executions):
        return proto
    return Executions(proto, matrix, **kw)


def joint_cq_state(proto, mu: ProbDist, matrix: CommMatrix, t: int, player: str, dense_classical: bool = False) -> CqState:
    """cq-state over classical X, Y, F, T (view key) and the player's quantum block Q.

    With ``dense_classical`` a classical view is instead written as one
    diagonal density matrix per input pair, ``diag(P(key | x, y))``, and the
    ``T`` coordinate is dropped. Both forms have the same entropies.
    """
    ex = execute(proto, matrix)
    v = ex.views(t, player)
    w = pair_weights(matrix, mu).reshape(-1)
    cols = matrix.cols
    if dense_classical and v.blocks is None:
        support = np.nonzero(w > 0)[0]
        pos = -np.ones(w.size, dtype=np.int64)
        pos[support] = np.arange(support.size)
        blocks = np.zeros((support.size, v.n_keys, v.n_keys), dtype=complex)
        sel = pos[v.pair] >= 0
        blocks[pos[v.pair][sel], v.key[sel], v.key[sel]] = v.prob[sel]
        codes = np.stack([support // cols, support % cols, matrix.codes.reshape(-1)[support]], axis=1)
        return CqState(("X", "Y", "F"), codes, w[support] / w[support].sum(), blocks)
    weights = w[v.pair] * v.prob
    keep = weights > 0
    xs, ys = v.pair // cols, v.pair % cols
    fs = matrix.codes.reshape(-1)[v.pair]
    codes = np.stack([xs, ys, fs, v.key], axis=1)[keep]
    blocks = v.blocks[keep] if v.blocks is not None else None
    return CqState(("X", "Y", "F", "T"), codes, weights[keep] / weights[keep].sum(), blocks)


def player_registers(s: CqState) -> list[str]:
    return (["T"] if "T" in s.roles else []) + [s.quantum]


def error_on_distribution(p, f: CommMatrix, mu: ProbDist) -> float:
    """Exact error probability over inputs and seeds; ``abort`` is an error."""
    if isinstance(p, (DeterministicProtocol, RandomizedProtocol)):
        r = as_randomized(p)
        if (r.rows, r.cols) != f.shape:
            raise ProtocolError("protocol and matrix shapes differ")
        w = pair_weights(f, mu)
        return float(sum(q * w[d.output_table(f) != f.codes].sum() for q, d in r.seeds))
    return execute(p, f).error(mu)


__all__ = ["ABORT", "Executions", "ViewTable", "error_on_distribution", "execute", "joint_cq_state", "player_registers"]
