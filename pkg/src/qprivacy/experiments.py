"""Summary figures for the named protocols; shared by the command line and the tests."""

from __future__ import annotations

import math

import numpy as np

from .core.execution import execute
from .core.matrix import and_matrix, idmin_matrix, uniform_pairs
from .core.quantum import BudgetError
from .privacy import expected_leakage, leak_to_loss_bound, leakage, privacy_loss
from .protocols.and_protocol import abort_probability, and_protocol, message_distance
from .protocols.disjointness import (
    default_stage_plan,
    disjointness_protocol,
    simulate_all_pairs,
    simulate_batch,
    stage_privacy_losses,
)
from .protocols.idmin import idmin_communication_bound, idmin_leaky_uniform, idmin_private

# fitted once over n <= 7 (largest observed ratio well below 1) and frozen
IDMIN_COMM_CONSTANT = 1.0
EXHAUSTIVE_DISJ_LIMIT = 8


def _check_qubits(dim: int, budget_qubits: int | None) -> None:
    if budget_qubits is not None and math.log2(dim) > budget_qubits:
        raise BudgetError(f"register needs {math.log2(dim):.3f} qubits, budget is {budget_qubits}")


def and_summary(delta: float, budget_qubits: int | None = None) -> dict:
    q = and_protocol(delta)
    _check_qubits(q.total_dim, budget_qubits)
    f = and_matrix()
    mu = uniform_pairs(f)
    ex = execute(q, f)
    success = {f"success_{x}{y}": ex.output_distribution(x, y).get(x & y, 0.0) for x, y in f.pairs()}
    bob = [leakage(ex, f, t, "B") for t in range(ex.n_rounds + 1)]
    al = [leakage(ex, f, t, "A") for t in range(ex.n_rounds + 1)]
    return {
        "protocol": "and",
        "delta": delta,
        "repetitions": q.repetitions,
        "rounds": q.repetitions,
        "qubits_per_message": 3,
        "communication_qubits": 3 * q.repetitions,
        **success,
        "error": max(1.0 - s for s in success.values()),
        "abort_probability_11": abort_probability(delta, q.repetitions),
        "bob_leakage": max(bob),
        "bob_leakage_exact": message_distance(delta),
        "al_leakage": max(al),
        "max_loss_bits": max(privacy_loss(ex, mu, f, t, p) for t in range(ex.n_rounds + 1) for p in ("A", "B")),
        "round_lower_bound": 1.0 / (12.0 * math.sqrt(delta)),
    }


def _classical_summary(p, f, name: str) -> dict:
    mu = uniform_pairs(f)
    ex = execute(p, f)
    rounds = range(ex.n_rounds + 1)
    loss = [privacy_loss(ex, mu, f, t, pl) for t in rounds for pl in ("A", "B")]
    exp = [expected_leakage(ex, mu, f, t, pl) for t in rounds for pl in ("A", "B")]
    return {
        "protocol": name,
        "rounds": p.max_rounds(),
        "communication_bits": p.max_bits(),
        "error": ex.error(mu),
        "worst_case_error": ex.worst_case_error(),
        "max_loss_bits": max(loss),
        "max_expected_leakage": max(exp),
        "_ex": ex,
        "_exp": exp,
        "_loss": loss,
    }


def idmin_private_summary(n: int) -> dict:
    out = _classical_summary(idmin_private(n), idmin_matrix(n), "idmin-private")
    f, ex = idmin_matrix(n), out["_ex"]
    out["max_leakage"] = max(leakage(ex, f, t, p) for t in range(ex.n_rounds + 1) for p in ("A", "B"))
    out["round_formula"] = 2 * (2**n - 1)
    out["n"] = n
    return _public(out)


def idmin_leaky_summary(n: int, delta: float) -> dict:
    f = idmin_matrix(n)
    out = _classical_summary(idmin_leaky_uniform(n, delta), f, "idmin-leaky")
    # loss bound from expected leakage, round by round
    slack = min(leak_to_loss_bound(e, n) - l for e, l in zip(out.pop("_exp"), out.pop("_loss"))
                if e <= 1 / math.e)
    out.update({
        "n": n,
        "delta": delta,
        "error_bound": delta / 4,
        "expected_leakage_bound": delta / (8 * n),
        "loss_bound_slack": slack,
        "communication_bound": idmin_communication_bound(n, delta, IDMIN_COMM_CONSTANT),
    })
    return _public(out)


def disj_summary(n: int, stages: int | None = None, trials: int | None = None, seed: int | None = None,
                 budget_qubits: int | None = None, eps: float = 1e-3) -> dict:
    if not 0 < eps < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    plan = default_stage_plan(n, stages)
    q = disjointness_protocol(n, plan, eps)
    _check_qubits(q.total_dim, budget_qubits)
    if trials is None:
        if n > EXHAUSTIVE_DISJ_LIMIT:
            raise ValueError(f"exhaustive evaluation only up to n={EXHAUSTIVE_DISJ_LIMIT}; pass --trials and --seed")
        res = simulate_all_pairs(n, plan, eps)
        mode = "exhaustive"
    else:
        if seed is None:
            raise ValueError("sampled evaluation needs --seed")
        if trials < 1:
            raise ValueError("trials must be positive")
        rng = np.random.default_rng(seed)
        x, y = rng.integers(0, 2**n, size=(2, trials))
        res = simulate_batch(n, x, y, plan, eps)
        mode = f"sampled {trials}"
    losses = stage_privacy_losses(n, plan, eps)
    msg_qubits = math.ceil(math.log2(4 * n + 1))
    bound = plan.stages * (math.log2(n) + 2)
    return {
        "protocol": "disj",
        "n": n,
        "epsilon": eps,
        "mode": mode,
        "stages": plan.stages,
        "iterations": plan.iterations,
        "total_iterations": plan.total_iterations,
        "qubits_per_message": msg_qubits,
        "communication_qubits": 2 * plan.total_iterations * msg_qubits,
        "classical_bits": plan.stages * (int(math.log2(n)) + 2),
        "min_success": float(res.p_correct.min()),
        "error": float(1.0 - res.p_correct.min()),
        "stage_losses_bits": [float(v) for v in losses],
        "max_loss_bits": float(max(losses)),
        "loss_bound_bits": bound,
    }


def _public(d: dict) -> dict:
    return {k: v for k, v in d.items() if not k.startswith("_")}


PAPER_PROTOCOLS = ("and", "idmin-private", "idmin-leaky", "disj")
