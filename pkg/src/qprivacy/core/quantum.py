"""Exact branch-tree execution of two-party quantum protocols.

The global register is ``A (x) M (x) B``: Al's private space, the message
register and Bob's private space.  A branch is a weighted pure state together
with the shared transcript and each player's private measurement record.
Every step ends at a round boundary, where each player's view is recorded as
``{(transcript, own record): (weight, reduced state)}``.  The reduced state
lives on ``private (x) M``; while the other player holds the message the
``M`` slot is filled with ``|0><0|``, so block dimensions stay uniform.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Hashable, Sequence

import numpy as np

from ..infotheory import ProbDist
from ..qstate import is_unitary, reduced_from_vector
from ..tolerances import DEFAULT_MAX_AMPLITUDES, PRUNE_PROB, VALIDATION_TOL
from .classical import ABORT, PLAYERS, ProtocolError


class BudgetError(RuntimeError):
    """Simulation would exceed the configured dimension budget."""


def _other(player: str) -> str:
    return "B" if player == "A" else "A"


@dataclass
class UnitaryStep:
    """``op(own_input, transcript)`` returns a matrix on ``private (x) M``.

    When ``handoff`` is set the message goes to the other player afterwards.
    """

    player: str
    op: Callable[[int, tuple], np.ndarray]
    handoff: bool = True
    kind: str = field(default="unitary", init=False)


@dataclass
class MeasureStep:
    """Standard-basis measurement of ``M`` (or the player's private register).

    The outcome is appended to the shared transcript unless ``private``.
    """

    player: str
    register: str = "M"
    private: bool = False
    kind: str = field(default="measure", init=False)


@dataclass
class AnnounceStep:
    """Classical message ``op(own_input, transcript, own_record)`` appended to the transcript."""

    player: str
    op: Callable[[int, tuple, tuple], Hashable]
    kind: str = field(default="announce", init=False)


@dataclass
class PrepareStep:
    """The message holder replaces ``M`` by a fresh ``op(own_input, transcript)``."""

    player: str
    op: Callable[[int, tuple], np.ndarray]
    kind: str = field(default="prepare", init=False)


Step = "UnitaryStep | MeasureStep | AnnounceStep | PrepareStep"


@dataclass
class QuantumProtocol:
    """Quantum protocol on inputs ``range(rows) x range(cols)``.

    ``output(transcript, record, own_input)`` is evaluated for
    ``output_player`` once a branch halts or the steps run out; it may return
    ``None`` to mean "no verdict in this repetition".  With ``repetitions > 1``
    fresh copies run until the first verdict; if none appears the result is
    ``abort``.  ``reset_points`` are step indices after which the future of a
    live branch no longer depends on its past transcript, which allows branch
    merging in the fast execution mode.  ``marks`` names groups of round
    boundaries (for example the ends of measurement stages).
    """

    rows: int
    cols: int
    dims: dict[str, int]
    steps: list
    output: Callable[[tuple, tuple, int], Any]
    output_player: str = "A"
    holder: str = "A"
    halt: Callable[[tuple], bool] | None = None
    repetitions: int = 1
    reset_points: Sequence[int] = ()
    name: str = ""
    marks: dict = field(default_factory=dict)

    def __post_init__(self):
        for r in ("A", "M", "B"):
            if int(self.dims.get(r, 0)) < 1:
                raise ProtocolError(f"register {r} needs a positive dimension")
        if self.repetitions < 1:
            raise ProtocolError("repetitions must be at least 1")

    @property
    def total_dim(self) -> int:
        return self.dims["A"] * self.dims["M"] * self.dims["B"]

    def holders(self) -> list[str]:
        """Message holder before each step (length ``len(steps) + 1``)."""
        cur, out = self.holder, [self.holder]
        for step in self.steps:
            if step.player not in PLAYERS:
                raise ProtocolError(f"unknown player {step.player!r}")
            if step.kind in ("unitary", "prepare") or (step.kind == "measure" and step.register == "M"):
                if step.player != cur:
                    raise ProtocolError(f"{step.player} acts on the message while {cur} holds it")
            if step.kind == "unitary" and step.handoff:
                cur = _other(cur)
            out.append(cur)
        return out


@dataclass
class Branch:
    weight: float
    psi: np.ndarray  # shape (dA, dM, dB)
    transcript: tuple
    records: dict
    holder: str
    halted: bool = False
    verdict: Any = None


@dataclass
class ExecutionResult:
    """Outcome of one execution on a fixed input pair.

    ``outcome_distribution`` is over ``(transcript, output)``.  For repeated
    protocols the transcript is the announced output alone, and
    ``repetition_outcomes`` holds the single-repetition distribution.
    ``per_round_states[t][player]`` maps a view key to ``(weight, block)``.
    """

    outcome_distribution: ProbDist
    per_round_states: list[dict[str, dict]]
    repetition_outcomes: ProbDist | None = None
    final_branches: list[Branch] | None = None

    def output_distribution(self) -> dict:
        out: dict = {}
        for (_, o), p in self.outcome_distribution.items():
            out[o] = out.get(o, 0.0) + p
        return out

    @property
    def n_boundaries(self) -> int:
        return len(self.per_round_states)


def _check_unitary(u: np.ndarray, dim: int, where: str) -> np.ndarray:
    u = np.asarray(u, dtype=complex)
    if u.shape != (dim, dim):
        raise ProtocolError(f"{where}: unitary has shape {u.shape}, layout needs {(dim, dim)}")
    if not is_unitary(u, 1e-8):
        raise ProtocolError(f"{where}: matrix is not unitary")
    return u


def _apply_unitary(psi: np.ndarray, u: np.ndarray, player: str) -> np.ndarray:
    da, dm, db = psi.shape
    if player == "A":
        return (u @ psi.reshape(da * dm, db)).reshape(da, dm, db)
    t = psi.transpose(2, 1, 0).reshape(db * dm, da)
    return (u @ t).reshape(db, dm, da).transpose(2, 1, 0)


def _split_message(psi: np.ndarray) -> np.ndarray:
    """Return the A,B part of a state in which M is unentangled."""
    da, dm, db = psi.shape
    mat = psi.transpose(1, 0, 2).reshape(dm, da * db)
    u, s, vh = np.linalg.svd(mat, full_matrices=False)
    if s.size > 1 and s[1] > 1e-7 * max(s[0], 1e-300):
        raise ProtocolError("cannot replace a message register that is entangled")
    return (s[0] * vh[0]).reshape(da, db)


def _player_view(psi: np.ndarray, player: str, holds: bool) -> np.ndarray:
    da, dm, db = psi.shape
    flat = psi.reshape(-1)
    dims = (da, dm, db)
    keep = ([0, 1] if player == "A" else [2, 1]) if holds else ([0] if player == "A" else [2])
    if player == "B" and holds:
        # order the block as private (x) M
        red = reduced_from_vector(psi.transpose(2, 1, 0).reshape(-1), (db, dm, da), [0, 1])
        return red
    red = reduced_from_vector(flat, dims, sorted(keep))
    if holds:
        return red
    empty = np.zeros((dm, dm), dtype=complex)
    empty[0, 0] = 1.0
    return np.kron(red, empty)


class _Runner:
    def __init__(self, q: QuantumProtocol, x: int, y: int, budget: int):
        if not (0 <= x < q.rows and 0 <= y < q.cols):
            raise ProtocolError(f"input {(x, y)} out of range")
        if q.total_dim > budget:
            raise BudgetError(f"global register dimension {q.total_dim} exceeds budget {budget}")
        self.q, self.x, self.y = q, x, y
        self.holders = q.holders()

    def own(self, player: str) -> int:
        return self.x if player == "A" else self.y

    def initial(self) -> list[Branch]:
        d = self.q.dims
        psi = np.zeros((d["A"], d["M"], d["B"]), dtype=complex)
        psi[0, 0, 0] = 1.0
        return [Branch(1.0, psi, (), {"A": (), "B": ()}, self.q.holder)]

    def finish(self, b: Branch) -> None:
        rec = b.records[self.q.output_player]
        b.verdict = self.q.output(b.transcript, rec, self.own(self.q.output_player))

    def step(self, i: int, branches: list[Branch]) -> list[Branch]:
        step = self.q.steps[i]
        out: list[Branch] = []
        for b in branches:
            if b.halted:
                out.append(b)
                continue
            p = step.player
            if step.kind == "unitary":
                dim = self.q.dims[p] * self.q.dims["M"]
                u = _check_unitary(step.op(self.own(p), b.transcript), dim, f"step {i}")
                b = Branch(b.weight, _apply_unitary(b.psi, u, p), b.transcript, b.records,
                           _other(p) if step.handoff else p)
                out.append(b)
            elif step.kind == "prepare":
                rest = _split_message(b.psi)
                vec = np.asarray(step.op(self.own(p), b.transcript), dtype=complex).reshape(-1)
                if vec.size != self.q.dims["M"] or abs(np.vdot(vec, vec).real - 1) > 1e-9:
                    raise ProtocolError(f"step {i}: prepared message has wrong size or norm")
                psi = np.einsum("ab,m->amb", rest, vec)
                out.append(Branch(b.weight, psi, b.transcript, b.records, b.holder))
            elif step.kind == "announce":
                sym = step.op(self.own(p), b.transcript, b.records[p])
                out.append(Branch(b.weight, b.psi, b.transcript + (sym,), b.records, b.holder))
            elif step.kind == "measure":
                axis = {"A": 0, "M": 1, "B": 2}[step.register if step.register == "M" else p]
                moved = np.moveaxis(b.psi, axis, 0)
                probs = (np.abs(moved) ** 2).reshape(moved.shape[0], -1).sum(axis=1)
                norm = probs.sum()
                for k in np.nonzero(probs / norm > PRUNE_PROB)[0]:
                    post = np.zeros_like(moved)
                    post[k] = moved[k] / np.sqrt(probs[k])
                    psi = np.moveaxis(post, 0, axis)
                    w = b.weight * probs[k] / norm
                    k = int(k)
                    if step.private:
                        rec = dict(b.records)
                        rec[p] = rec[p] + (k,)
                        out.append(Branch(w, psi, b.transcript, rec, b.holder))
                    else:
                        out.append(Branch(w, psi, b.transcript + (k,), b.records, b.holder))
            else:
                raise ProtocolError(f"unknown step kind {step.kind!r}")
        for b in out:
            if not b.halted and self.q.halt is not None and self.q.halt(b.transcript):
                b.halted = True
                self.finish(b)
        return out

    def views(self, branches: list[Branch]) -> dict[str, dict]:
        res: dict[str, dict] = {}
        for player in PLAYERS:
            acc: dict = {}
            for b in branches:
                key = (b.transcript, b.records[player])
                block = b.weight * _player_view(b.psi, player, b.holder == player)
                if key in acc:
                    w, m = acc[key]
                    acc[key] = (w + b.weight, m + block)
                else:
                    acc[key] = (b.weight, block)
            res[player] = {k: (w, m / w) for k, (w, m) in acc.items()}
        return res


def _merge(branches: list[Branch], forget: bool) -> list[Branch]:
    """Coalesce live branches with identical contents; halted ones by (transcript, verdict)."""
    groups: dict = {}
    out: list[Branch] = []
    for b in branches:
        if b.halted:
            key = ("h", b.transcript, b.verdict)
        else:
            tr = () if forget else b.transcript
            key = ("l", tr, b.records["A"], b.records["B"], b.holder, np.round(b.psi, 12).tobytes())
        if key in groups:
            g = groups[key]
            g.weight += b.weight
        else:
            nb = Branch(b.weight, b.psi, () if (forget and not b.halted) else b.transcript, b.records,
                        b.holder, b.halted, b.verdict)
            groups[key] = nb
            out.append(nb)
    return out


def run_quantum(q: QuantumProtocol, x: int, y: int, record_states: bool = True,
                merge: bool = False, budget: int = DEFAULT_MAX_AMPLITUDES) -> ExecutionResult:
    """Execute ``q`` exactly on ``(x, y)``.

    ``merge=True`` coalesces branches and drops transcripts at the protocol's
    reset points; per-round states are then unavailable.
    """
    if merge and record_states:
        raise ValueError("branch merging discards the views; pass record_states=False")
    r = _Runner(q, x, y, budget)
    branches = r.initial()
    states = [r.views(branches)] if record_states else []
    resets = set(q.reset_points)
    for i in range(len(q.steps)):
        branches = r.step(i, branches)
        total = sum(b.weight for b in branches)
        if abs(total - 1.0) > VALIDATION_TOL:
            raise ArithmeticError(f"branch weights sum to {total} after step {i}")
        if record_states:
            states.append(r.views(branches))
        if merge:
            branches = _merge(branches, forget=i in resets)
    for b in branches:
        if not b.halted:
            r.finish(b)

    single: dict = {}
    for b in branches:
        v = b.verdict
        key = (b.transcript, v)
        single[key] = single.get(key, 0.0) + b.weight
    if q.repetitions == 1:
        outcomes = {(t, ABORT if v is None else v): p for (t, v), p in single.items()}
        merged: dict = {}
        for k, p in outcomes.items():
            merged[k] = merged.get(k, 0.0) + p
        return ExecutionResult(ProbDist(merged, tol=1e-9), states, None, branches)
    verdicts: dict = {}
    for (_, v), p in single.items():
        verdicts[v] = verdicts.get(v, 0.0) + p
    agg = repeat_until_verdict(verdicts, q.repetitions)
    dist = {((o,), o): p for o, p in agg.items()}
    rep = ProbDist({(t, ABORT if v is None else v): p for (t, v), p in single.items()}, tol=1e-9)
    return ExecutionResult(ProbDist(dist, tol=1e-9), states, rep, branches)


def repeat_until_verdict(verdicts: dict, k: int) -> dict:
    """Exact distribution of the first non-``None`` verdict in ``k`` independent runs."""
    p_none = verdicts.get(None, 0.0)
    p_inf = 1.0 - p_none
    out: dict = {}
    if p_inf > 0:
        scale = -np.expm1(k * np.log1p(-p_inf)) / p_inf if p_inf < 1 else 1.0
        for v, p in verdicts.items():
            if v is not None and p > 0:
                out[v] = out.get(v, 0.0) + p * scale
    out[ABORT] = out.get(ABORT, 0.0) + p_none**k
    return out
