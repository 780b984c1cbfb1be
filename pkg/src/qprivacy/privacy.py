"""Privacy loss and leakage of two-party protocols, and the bounds linking them.

Privacy loss to Bob at a round is ``I(B : X | Y, f(X, Y))`` where ``B`` is
Bob's whole register (view key and quantum block); symmetrically for Al.
Leakage is the largest trace distance between a player's states on two
inputs that agree on that player's input and on the function value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core.execution import Executions, execute, joint_cq_state, player_registers
from .core.matrix import CommMatrix, pair_weights
from .infotheory import NumericalError, ProbDist, conditional_mutual_information
from .tolerances import CMI_CLAMP


def _other_input(player: str) -> tuple[str, str]:
    """(own input role, other input role)."""
    if player == "B":
        return "Y", "X"
    if player == "A":
        return "X", "Y"
    raise ValueError(f"unknown player {player!r}")


def privacy_loss(proto, mu: ProbDist, f: CommMatrix, t: int, player: str) -> float:
    """Bits about the other input learned beyond the own input and the function value."""
    own, other = _other_input(player)
    s = joint_cq_state(execute(proto, f), mu, f, t, player)
    return conditional_mutual_information(s, player_registers(s), [other], [own, "F"])


def max_privacy_loss(proto, mu: ProbDist, f: CommMatrix) -> float:
    ex = execute(proto, f)
    return max(privacy_loss(ex, mu, f, t, p) for t in range(ex.n_rounds + 1) for p in ("A", "B"))


def _slices(ex: Executions, t: int, player: str):
    """Yield ``(own value, other values, same-function mask, distances)`` per own input."""
    f = ex.matrix
    v = ex.views(t, player)
    rows, cols = f.shape
    own_n, other_n = (cols, rows) if player == "B" else (rows, cols)
    codes = f.codes if player == "B" else f.codes.T  # indexed [other, own]

    def flat(u, o):
        return u * cols + o if player == "B" else o * cols + u

    if v.point_mass:
        key = np.empty(rows * cols, dtype=np.int64)
        key[v.pair] = v.key
        key = key.reshape(rows, cols) if player == "B" else key.reshape(rows, cols).T
        for o in range(own_n):
            k = key[:, o]
            same = codes[:, o][:, None] == codes[:, o][None, :]
            yield o, same, 2.0 * (k[:, None] != k[None, :])
        return

    order = np.argsort(v.pair, kind="stable")
    bounds = np.searchsorted(v.pair[order], np.arange(rows * cols + 1))
    for o in range(own_n):
        same = codes[:, o][:, None] == codes[:, o][None, :]
        rows_of = [order[bounds[flat(u, o)]:bounds[flat(u, o) + 1]] for u in range(other_n)]
        keys = np.unique(np.concatenate([v.key[r] for r in rows_of]))
        kpos = {int(k): i for i, k in enumerate(keys)}
        dist = np.zeros((other_n, other_n))
        if v.blocks is None:
            dense = np.zeros((other_n, keys.size))
            for u, r in enumerate(rows_of):
                for i in r:
                    dense[u, kpos[int(v.key[i])]] += v.prob[i]
            for u in range(other_n):
                dist[u] = np.abs(dense - dense[u]).sum(axis=1)
        else:
            d = v.blocks.shape[1]
            w = np.zeros((other_n, keys.size, d, d), dtype=complex)
            for u, r in enumerate(rows_of):
                for i in r:
                    w[u, kpos[int(v.key[i])]] += v.prob[i] * v.blocks[i]
            for u in range(other_n):
                for u2 in range(u + 1, other_n):
                    if not same[u, u2]:
                        continue
                    diff = w[u] - w[u2]
                    nz = np.abs(diff).reshape(keys.size, -1).max(axis=1) > 0
                    if nz.any():
                        ev = np.linalg.eigvalsh(diff[nz])
                        dist[u, u2] = dist[u2, u] = min(2.0, float(np.abs(ev).sum()))
        yield o, same, dist


def leakage(proto, f: CommMatrix, t: int, player: str) -> float:
    """Max trace distance over valid input triples; exact enumeration."""
    ex = execute(proto, f)
    best = 0.0
    for _, same, dist in _slices(ex, t, player):
        if same.any():
            best = max(best, float(np.max(np.where(same, dist, 0.0))))
    return best


def leakage_witness(proto, f: CommMatrix, t: int, player: str) -> tuple[float, ProbDist | None]:
    """Largest leakage and the uniform distribution on its two input pairs.

    Privacy loss under that distribution bounds the leakage from below, which
    is how the loss-to-leakage bound is exercised for a given protocol.
    """
    ex = execute(proto, f)
    best, arg = 0.0, None
    for o, same, dist in _slices(ex, t, player):
        masked = np.where(same, dist, 0.0)
        u, u2 = np.unravel_index(int(np.argmax(masked)), masked.shape)
        if masked[u, u2] > best:
            best, arg = float(masked[u, u2]), (o, int(u), int(u2))
    if arg is None:
        return 0.0, None
    o, u, u2 = arg
    pairs = [(u, o), (u2, o)] if player == "B" else [(o, u), (o, u2)]
    return best, ProbDist({p: 0.5 for p in pairs})


def expected_leakage(proto, mu: ProbDist, f: CommMatrix, t: int, player: str) -> float:
    """Mean distance between the player's states on ``(own, u)`` and ``(own, u')``.

    ``(x, y)`` is drawn from ``mu`` and the other player's replacement input
    ``u'`` from ``mu`` conditioned on the player's input and the function value.
    """
    ex = execute(proto, f)
    w = pair_weights(f, mu)
    w = w if player == "B" else w.T  # [other, own]
    total = 0.0
    for o, same, dist in _slices(ex, t, player):
        a = w[:, o]
        if not a.any():
            continue
        z = same.astype(float) @ a  # conditional normalizer per u
        cond = np.where(z[:, None] > 0, same * a[None, :] / np.where(z > 0, z, 1.0)[:, None], 0.0)
        total += float(a @ (cond * dist).sum(axis=1))
    return total


# conversion bounds


def leak_to_loss_bound(delta: float, n: float) -> float:
    """Privacy loss implied by leakage ``delta`` on ``n``-bit inputs: ``n d - d log d``."""
    if not 0.0 <= delta <= 1 / math.e + 1e-15:
        raise ValueError(f"leakage {delta} outside [0, 1/e]")
    return 0.0 if delta == 0 else n * delta - delta * math.log2(delta)


def loss_to_leak_bound(delta: float) -> float:
    """Leakage implied by a privacy loss of ``delta`` bits."""
    if delta < 0:
        raise ValueError("privacy loss must be nonnegative")
    return 2.0 * math.sqrt(2.0 * math.log(2.0) * delta)


def cornersleak_round_bound(delta: float) -> float:
    """Round count below which an AND protocol cannot leak only ``delta``; ``inf`` at 0."""
    if delta < 0:
        raise ValueError("leakage must be nonnegative")
    if delta == 0:
        return math.inf
    return 1.0 / (12.0 * math.sqrt(delta))


@dataclass
class RoundFigures:
    round: int
    player: str
    privacy_loss_bits: float
    leakage_trace_norm: float
    expected_leakage: float


@dataclass
class PrivacyReport:
    per_round: list[RoundFigures]
    distribution: str = "uniform"
    protocol: str = ""
    max_loss_bits: float = field(init=False)
    max_leakage: float = field(init=False)
    max_expected_leakage: float = field(init=False)

    def __post_init__(self):
        for r in self.per_round:
            for v in (r.privacy_loss_bits, r.leakage_trace_norm, r.expected_leakage):
                if not math.isfinite(v) or v < -CMI_CLAMP:
                    raise NumericalError(f"bad privacy figure {v} at round {r.round}")
        self.max_loss_bits = max((r.privacy_loss_bits for r in self.per_round), default=0.0)
        self.max_leakage = max((r.leakage_trace_norm for r in self.per_round), default=0.0)
        self.max_expected_leakage = max((r.expected_leakage for r in self.per_round), default=0.0)

    def to_dict(self) -> dict:
        return {
            "protocol": self.protocol,
            "distribution": self.distribution,
            "max_loss_bits": self.max_loss_bits,
            "max_leakage": self.max_leakage,
            "max_expected_leakage": self.max_expected_leakage,
            "per_round": [vars(r) for r in self.per_round],
        }


def privacy_report(proto, mu: ProbDist, f: CommMatrix, distribution: str = "uniform", name: str = "",
                   rounds=None) -> PrivacyReport:
    ex = execute(proto, f)
    rounds = range(ex.n_rounds + 1) if rounds is None else rounds
    rows = []
    for t in rounds:
        for p in ("A", "B"):
            rows.append(RoundFigures(t, p, privacy_loss(ex, mu, f, t, p), leakage(ex, f, t, p),
                                     expected_leakage(ex, mu, f, t, p)))
    return PrivacyReport(rows, distribution, name or getattr(proto, "name", ""))
