"""Distributed Grover search for set disjointness.

The message register is ``(index (x) bit a (x) bit b) (+) |e>``, which has
dimension ``4n + 1``.  Basis state ``|i, a, b>`` has index ``4i + 2a + b``
and the extra vector ``|e>`` sits at ``4n``.  All unitaries act as the
identity on ``|e>``.

One Grover iteration: Al writes ``x_i`` into ``a`` and hands over.  Bob
computes ``a AND y_i`` into ``b``, flips the phase of ``b = 1``, uncomputes
``b`` and hands back.  Al uncomputes ``a`` and inverts about the mean of the
index register.  A stage prepares a fresh message, runs its iterations, lets
Al measure the register and has both players announce their bit at the
measured index.  If both bits are 1 the run halts with "intersecting".
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from math import comb

import numpy as np

from ..core.quantum import AnnounceStep, MeasureStep, PrepareStep, QuantumProtocol, UnitaryStep
from .nonorth import nonorthogonalize

INTERSECTING = 0
DISJOINT = 1
NO_INDEX = "-"
MAX_UNIVERSE = 16


@dataclass
class GroverStagePlan:
    """Grover iterations per stage and the message register layout."""

    n: int
    iterations: list[int]
    growth: float = 6 / 5
    stage_factor: float = 3.0
    iteration_factor: float = 9.0
    layout: tuple = field(init=False)

    def __post_init__(self):
        if not self.iterations or min(self.iterations) < 1:
            raise ValueError("every stage needs a positive iteration count")
        self.layout = (self.n, 2, 2, 1)

    @property
    def stages(self) -> int:
        return len(self.iterations)

    @property
    def total_iterations(self) -> int:
        return sum(self.iterations)


def default_stage_plan(n: int, stages: int | None = None, growth: float = 6 / 5,
                       stage_factor: float = 3.0, iteration_factor: float = 9.0) -> GroverStagePlan:
    """Stage j runs ``ceil(growth^j)`` iterations, ``j = 0, 1, ...``.

    Stages stop at ``ceil(stage_factor * log2 n)`` or before the running total
    would pass ``iteration_factor * sqrt(n)``; ``stages`` truncates further.
    """
    cap = math.ceil(stage_factor * math.log2(n)) if n > 1 else 1
    limit = iteration_factor * math.sqrt(n)
    its: list[int] = []
    j = 0
    while len(its) < cap:
        m = math.ceil(growth**j - 1e-12)
        if its and sum(its) + m > limit:
            break
        its.append(m)
        j += 1
    if stages is not None:
        if stages < 1:
            raise ValueError("stage count must be positive")
        its = its[:stages]
    return GroverStagePlan(n, its, growth, stage_factor, iteration_factor)


def _check_universe(n: int, cap: int = MAX_UNIVERSE) -> None:
    if n < 2 or n & (n - 1) or n > cap:
        raise ValueError(f"universe size {n} must be a power of 2 in [2, {cap}]")


def bits_of(v: int, n: int) -> np.ndarray:
    return (v >> np.arange(n)) & 1


def initial_message(n: int, eps: float = 1e-3) -> tuple[np.ndarray, float]:
    """Uniform index superposition with ``a = b = 0``, non-orthogonalized."""
    v = np.zeros(4 * n, dtype=complex)
    v[0::4] = 1 / math.sqrt(n)
    (w,), delta = nonorthogonalize([v], eps)
    return w, delta


def al_write(x_bits: np.ndarray) -> np.ndarray:
    n = x_bits.size
    perm = np.arange(4 * n + 1)
    for i in np.nonzero(x_bits)[0]:
        for b in (0, 1):
            perm[4 * i + b], perm[4 * i + 2 + b] = 4 * i + 2 + b, 4 * i + b
    u = np.zeros((4 * n + 1, 4 * n + 1), dtype=complex)
    u[perm, np.arange(4 * n + 1)] = 1
    return u


def bob_phase(y_bits: np.ndarray) -> np.ndarray:
    """Compute ``a AND y_i`` into ``b``, phase-flip ``b = 1``, uncompute."""
    n = y_bits.size
    dim = 4 * n + 1
    cnot = np.eye(dim, dtype=complex)
    for i in np.nonzero(y_bits)[0]:
        s, t = 4 * i + 2, 4 * i + 3
        cnot[[s, t]] = cnot[[t, s]]
    z = np.eye(dim, dtype=complex)
    z[np.arange(n) * 4 + 1, np.arange(n) * 4 + 1] = -1
    z[np.arange(n) * 4 + 3, np.arange(n) * 4 + 3] = -1
    return cnot @ z @ cnot


def diffusion(n: int) -> np.ndarray:
    d = np.zeros((4 * n + 1, 4 * n + 1), dtype=complex)
    inv = 2 * np.full((n, n), 1 / n) - np.eye(n)
    for ab in range(4):
        d[np.ix_(np.arange(n) * 4 + ab, np.arange(n) * 4 + ab)] = inv
    d[4 * n, 4 * n] = 1
    return d


def disjointness_protocol(n: int, plan: GroverStagePlan | None = None, eps: float = 1e-3,
                          cap: int = MAX_UNIVERSE) -> QuantumProtocol:
    """Inputs are bitmasks over an ``n``-element universe; output 1 means disjoint."""
    _check_universe(n, cap)
    plan = plan or default_stage_plan(n)
    size = 2**n
    init, _ = initial_message(n, eps)
    dif = diffusion(n)
    write_cache: dict = {}
    phase_cache: dict = {}

    def write(x):
        if x not in write_cache:
            w = al_write(bits_of(x, n))
            write_cache[x] = (w, w @ dif @ w, dif @ w)
        return write_cache[x]

    def phase(y):
        if y not in phase_cache:
            phase_cache[y] = bob_phase(bits_of(y, n))
        return phase_cache[y]

    def announcer(player):
        def announce(own, transcript, record):
            k = transcript[-1] if player == "A" else transcript[-2]
            return player, NO_INDEX if k == 4 * n else int((own >> (k // 4)) & 1)
        return announce

    steps: list = []
    resets, ends = [], []
    for m in plan.iterations:
        resets.append(len(steps))
        steps.append(PrepareStep("A", lambda x, tr: init))
        for it in range(m):
            if it == 0:
                steps.append(UnitaryStep("A", lambda x, tr: write(x)[0]))
            else:
                steps.append(UnitaryStep("A", lambda x, tr: write(x)[1]))
            steps.append(UnitaryStep("B", lambda y, tr: phase(y)))
        steps.append(UnitaryStep("A", lambda x, tr: write(x)[2], handoff=False))
        steps.append(MeasureStep("A", "M"))
        steps.append(AnnounceStep("A", announcer("A")))
        steps.append(AnnounceStep("B", announcer("B")))
        ends.append(len(steps))

    def halt(transcript):
        return transcript[-2:] == (("A", 1), ("B", 1))

    def output(transcript, record, x):
        return INTERSECTING if halt(transcript) else DISJOINT

    return QuantumProtocol(size, size, {"A": 1, "M": 4 * n + 1, "B": 1}, steps, output, halt=halt,
                           reset_points=resets, marks={"stage_end": ends},
                           name=f"Grover disjointness (n={n}, {plan.stages} stages)")


# batched exact simulation over many input pairs


@dataclass
class BatchResult:
    x: np.ndarray
    y: np.ndarray
    p_intersecting: np.ndarray
    min_overlap: float | None = None

    @property
    def p_correct(self) -> np.ndarray:
        disjoint = (self.x & self.y) == 0
        return np.where(disjoint, 1.0 - self.p_intersecting, self.p_intersecting)


def _min_abs_overlap(vecs: np.ndarray, chunk: int = 1024) -> float:
    key = np.round(np.concatenate([vecs.real, vecs.imag], axis=1), 12)
    _, idx = np.unique(key, axis=0, return_index=True)
    v = vecs[np.sort(idx)]
    real = np.abs(v.imag).max() < 1e-15
    v = v.real if real else v
    best = np.inf
    for s in range(0, v.shape[0], chunk):
        g = v[s:s + chunk].conj() @ v.T
        best = min(best, float(np.abs(g).min()))
    return best


def simulate_batch(n: int, x: np.ndarray, y: np.ndarray, plan: GroverStagePlan | None = None,
                   eps: float = 1e-3, check_overlaps: bool = False) -> BatchResult:
    """Exact success probabilities for many pairs at once.

    Stages restart from a fresh message, so the probability of never halting
    is the product of per-stage non-halting probabilities.
    """
    plan = plan or default_stage_plan(n)
    x = np.asarray(x, dtype=np.int64)
    y = np.asarray(y, dtype=np.int64)
    xb = ((x[:, None] >> np.arange(n)) & 1).astype(bool)
    yb = ((y[:, None] >> np.arange(n)) & 1).astype(bool)
    marked = xb & yb
    init, _ = initial_message(n, eps)
    p_cont = np.ones(x.size)
    overlap = np.inf

    def write(state):
        main = state[:, :4 * n].reshape(-1, n, 2, 2)
        main = np.where(xb[:, :, None, None], main[:, :, ::-1, :], main)
        return np.concatenate([main.reshape(-1, 4 * n), state[:, 4 * n:]], axis=1)

    sign = np.where(yb[:, :, None, None] & (np.arange(2)[None, None, :, None] == 1), -1.0, 1.0)

    def phase(state):
        main = state[:, :4 * n].reshape(-1, n, 2, 2) * sign
        return np.concatenate([main.reshape(-1, 4 * n), state[:, 4 * n:]], axis=1)

    def diffuse(state):
        main = state[:, :4 * n].reshape(-1, n, 2, 2)
        main = 2 * main.mean(axis=1, keepdims=True) - main
        return np.concatenate([main.reshape(-1, 4 * n), state[:, 4 * n:]], axis=1)

    for m in plan.iterations:
        st = np.repeat(init[None, :], x.size, axis=0)
        for it in range(m):
            if it:
                st = write(diffuse(write(st)))
            else:
                st = write(st)
            if check_overlaps:
                overlap = min(overlap, _min_abs_overlap(st))
            st = phase(st)
            if check_overlaps:
                overlap = min(overlap, _min_abs_overlap(st))
        st = diffuse(write(st))
        amp = st[:, :4 * n].reshape(-1, n, 2, 2)[:, :, 0, 0]
        p_halt = (np.abs(amp) ** 2 * marked).sum(axis=1)
        p_cont = p_cont * (1.0 - p_halt)
    return BatchResult(x, y, 1.0 - p_cont, overlap if check_overlaps else None)


def simulate_all_pairs(n: int, plan: GroverStagePlan | None = None, eps: float = 1e-3,
                       check_overlaps: bool = False) -> BatchResult:
    size = 2**n
    xs, ys = np.divmod(np.arange(size * size), size)
    return simulate_batch(n, xs, ys, plan, eps, check_overlaps)


# exact privacy loss at stage ends under the uniform distribution


def stage_outcome_probabilities(n: int, m: int, delta: float) -> tuple[np.ndarray, np.ndarray, float]:
    """Per-index probabilities (marked, unmarked) of a stage, as functions of ``t = |x AND y|``."""
    t = np.arange(n + 1)
    theta = np.arcsin(np.sqrt(t / n))
    s2 = np.sin((2 * m + 1) * theta) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        marked = np.where(t > 0, (1 - delta**2) * s2 / np.where(t > 0, t, 1), 0.0)
        unmarked = np.where(t < n, (1 - delta**2) * (1 - s2) / np.where(t < n, n - t, 1), 0.0)
    return marked, unmarked, delta**2


def _surjections(q: int, d: int) -> int:
    return sum((-1) ** j * comb(d, j) * (d - j) ** q for j in range(d + 1))


def _xlog(w: np.ndarray) -> np.ndarray:
    return np.where(w > 0, w * np.log2(np.where(w > 0, w, 1.0)), 0.0)


def stage_privacy_losses(n: int, plan: GroverStagePlan | None = None, eps: float = 1e-3) -> list[float]:
    """``I(T : X | Y, F)`` after each stage, under uniform inputs.

    At a stage end both players' registers are classical (the measured
    register is with Al and fixed by the transcript), and the outcome law of
    a stage depends on ``(x, y)`` only through ``t = |x AND y|``.  Transcripts
    are grouped by which stages hit an index and by how many distinct indices
    of each revealed kind appear; the posterior on ``x`` depends only on ``t``.
    The loss to Al is the same number by the symmetry between the roles.
    """
    plan = plan or default_stage_plan(n)
    _, delta = initial_message(n, eps)
    probs = [stage_outcome_probabilities(n, m, delta) for m in plan.iterations]
    ts = np.arange(n + 1)
    total = 4.0**n

    # H(X | Y, F)
    h_prior = 0.0
    for k in range(n + 1):
        ny = comb(n, k)
        n_disj = 2 ** (n - k)
        n_int = 2**n - n_disj
        h = n_disj * math.log2(n_disj) + (n_int * math.log2(n_int) if n_int > 0 else 0.0)
        h_prior += ny * h / total

    out = []
    for s in range(1, plan.stages + 1):
        h_post, mass = 0.0, 0.0
        # live transcripts after s stages, and transcripts that halted at stage h <= s
        for halt_at in [None] + list(range(1, s + 1)):
            span = s if halt_at is None else halt_at - 1
            for subset_mask in range(2**span):
                e_stages = [j for j in range(span) if subset_mask >> j & 1]
                idx_stages = [j for j in range(span) if not subset_mask >> j & 1]
                q = len(idx_stages)
                like = np.full(n + 1, probs[0][2] ** len(e_stages))
                for j in idx_stages:
                    like = like * probs[j][1]
                if halt_at is not None:
                    like = like * probs[halt_at - 1][0]
                if not like.any():
                    continue
                for k in range(n + 1):
                    for d in range(0, q + 1):
                        sur = _surjections(q, d) if q else (1 if d == 0 else 0)
                        if sur == 0:
                            continue
                        for r_y in range(0, min(d, k) + 1):
                            for a in range(0, d - r_y + 1):
                                b = d - r_y - a
                                if a + b > n - k:
                                    continue
                                free_in_y = k - r_y - (1 if halt_at is not None else 0)
                                if free_in_y < 0:
                                    continue
                                mult = comb(n, k) * comb(k, r_y) * comb(n - k, a) * comb(n - k - a, b) * sur
                                if halt_at is not None:
                                    mult *= k - r_y
                                if mult == 0:
                                    continue
                                shift = 1 if halt_at is not None else 0
                                counts = np.array([comb(free_in_y, t - shift) if t - shift >= 0 else 0 for t in ts],
                                                  dtype=float) * 2.0 ** (n - k - a - b)
                                w = counts * like
                                classes = [w * (ts >= 1)] if halt_at is not None else [w * (ts == 0), w * (ts >= 1)]
                                for cw in classes:
                                    z = cw.sum()
                                    if z <= 0:
                                        continue
                                    per_x = np.where(counts > 0, like / z, 0.0) * (cw > 0)
                                    h = -float((counts * _xlog(per_x)).sum())
                                    h_post += mult * z / total * h
                                    mass += mult * z / total
        if abs(mass - 1.0) > 1e-9:
            raise ArithmeticError(f"transcript probabilities sum to {mass} after stage {s}")
        out.append(max(0.0, h_prior - h_post))
    return out
