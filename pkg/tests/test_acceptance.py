"""Acceptance criteria 1-7.  Each test records one PASS/FAIL line (see conftest)."""

import math
import time
from itertools import product

import numpy as np
import pytest

from qprivacy.core import (
    CommMatrix,
    DeterministicProtocol,
    and_matrix,
    boost,
    disj_matrix,
    execute,
    idmin_matrix,
    random_pair_distribution,
    send_input_protocol,
    uniform_pairs,
    xor_matrix,
)
from qprivacy.experiments import IDMIN_COMM_CONSTANT
from qprivacy.infotheory import (
    CqState,
    ProbDist,
    average_encoding_check,
    continuity_bound,
    l1_distance,
    max_entropy_bound,
    shannon_entropy,
    von_neumann_entropy,
)
from qprivacy.oracle import exhaustive_privacy_verify, largest_correct_rectangle, max_monochromatic_width
from qprivacy.privacy import expected_leakage, leak_to_loss_bound, leakage, leakage_witness, loss_to_leak_bound, privacy_loss
from qprivacy.protocols import (
    and_protocol,
    default_stage_plan,
    disjointness_protocol,
    idmin_communication_bound,
    idmin_leaky_uniform,
    idmin_private,
    message_distance,
    noisy_and,
    simulate_all_pairs,
    simulate_batch,
    stage_privacy_losses,
)
from qprivacy.qstate import (
    DensityMatrix,
    apply_channel,
    apply_channel_dilated,
    helstrom_measurement,
    outcome_distribution,
    pure_state_distance,
    purify,
    random_channel,
    random_density,
    random_pure,
    trace_norm,
    trace_norm_distance,
    uhlmann_align,
)
from qprivacy.structure import NotPrivateError, is_private, synthesize_private_protocol

from helpers import random_tree

PLAYERS = ("A", "B")


def _rounds(ex):
    return range(ex.n_rounds + 1)


# 1. characterization


def _characterize(m: CommMatrix, rng) -> list[str]:
    problems = []
    ok, _ = is_private(m)
    try:
        p = synthesize_private_protocol(m)
    except NotPrivateError:
        p = None
    if ok != (p is not None):
        return [f"verdict {ok} but synthesis {'succeeded' if p else 'failed'}"]
    if p is None:
        return problems
    dists = [uniform_pairs(m)] + [random_pair_distribution(m, rng) for _ in range(5)]
    rep = exhaustive_privacy_verify(p, m, dists)
    if rep.max_error != 0.0:
        problems.append(f"error {rep.max_error}")
    if rep.max_loss > 1e-7:
        problems.append(f"loss {rep.max_loss}")
    return problems


def test_criterion_1_characterization(verdict):
    start = time.perf_counter()
    rng = np.random.default_rng(2024)
    problems, n_private, total = [], 0, 0
    for r, c in ((2, 2), (3, 3)):
        for bits in product((0, 1), repeat=r * c):
            m = CommMatrix(np.array(bits).reshape(r, c), (0, 1))
            problems += _characterize(m, rng)
            n_private += is_private(m)[0]
            total += 1
    for _ in range(10_000):
        m = CommMatrix(rng.integers(0, 3, size=(4, 4)), (0, 1, 2))
        problems += _characterize(m, rng)
        n_private += is_private(m)[0]
        total += 1
    took = time.perf_counter() - start
    ok = not problems and took < 120
    verdict("1 characterization", ok, f"{total} matrices, {n_private} private, {len(problems)} problems", took)
    assert not problems, problems[:5]
    assert took < 120


# 2. quantum AND


def test_criterion_2_and_protocol(verdict):
    start = time.perf_counter()
    f = and_matrix()
    details, ok = [], True
    for delta in (0.1, 0.2, 0.4):
        q = and_protocol(delta)
        ex = execute(q, f)
        success = min(ex.output_distribution(x, y).get(x & y, 0.0) for x, y in f.pairs())
        # round 1 carries the message; Bob holds nothing once it is returned
        bob = [leakage(ex, f, t, "B") for t in range(1, ex.n_rounds + 1)]
        al = max(leakage(ex, f, t, "A") for t in _rounds(ex))
        exact = delta * math.sqrt(2 - delta**2 / 4)
        good = (success >= 2 / 3 and abs(bob[0] - exact) <= 1e-9 and max(bob) <= exact + 1e-9 and al <= 1e-9
                and q.repetitions > 1 / (12 * math.sqrt(delta)))
        ok &= good
        details.append(f"d={delta}: k={q.repetitions} success={success:.5f} bob={bob[0]:.9f} al={al:.1e}")
    took = time.perf_counter() - start
    ok &= took < 60
    verdict("2 AND", ok, "; ".join(details), took)
    assert ok


# 3. identified minimum


def test_criterion_3_idmin(verdict):
    start = time.perf_counter()
    n, delta = 6, 0.25
    f = idmin_matrix(n)
    p = idmin_leaky_uniform(n, delta)
    ex = execute(p, f)
    mu = uniform_pairs(f)
    error = ex.error(mu)
    exp = {(t, pl): expected_leakage(ex, mu, f, t, pl) for t in _rounds(ex) for pl in PLAYERS}
    loss = {(t, pl): privacy_loss(ex, mu, f, t, pl) for t in _rounds(ex) for pl in PLAYERS}
    slack = min(leak_to_loss_bound(exp[k], n) - loss[k] for k in exp)
    comm, comm_bound = p.max_bits(), idmin_communication_bound(n, delta, IDMIN_COMM_CONSTANT)
    ok = (error <= delta / 4 and max(exp.values()) <= delta / (8 * n) and slack >= -1e-6
          and comm <= comm_bound)
    base = []
    for k in (1, 2, 3):
        g = idmin_matrix(k)
        q = idmin_private(k)
        exq = execute(q, g)
        dists = [uniform_pairs(g)] + [random_pair_distribution(g, np.random.default_rng(k)) for _ in range(5)]
        worst = max(abs(privacy_loss(exq, d, g, t, pl)) for d in dists for t in _rounds(exq) for pl in PLAYERS)
        base.append(worst <= 1e-7 and exq.worst_case_error() == 0 and q.max_rounds() == 2 * (2**k - 1))
    ok &= all(base)
    took = time.perf_counter() - start
    ok &= took < 300
    verdict("3 IdMin", ok,
            f"n=6 error={error:.5f} max_expected_leakage={max(exp.values()):.6f} (<= {delta / (8 * n):.6f}) "
            f"loss_slack={slack:.2e} comm={comm}<={comm_bound:.0f}; private baseline n<=3 {all(base)}", took)
    assert ok


# 4. disjointness


@pytest.mark.slow
def test_criterion_4_disjointness(verdict):
    start = time.perf_counter()
    res = simulate_all_pairs(8, check_overlaps=True)
    plan = default_stage_plan(8)
    losses = stage_privacy_losses(8, plan)
    bound = plan.stages * (math.log2(8) + 2)
    rng = np.random.default_rng(16)
    xs = rng.integers(0, 2**16, size=1000)
    ys = rng.integers(0, 2**16, size=1000)
    # a third of the pairs forced disjoint so both answers are exercised
    ys[:333] &= ~xs[:333] & 0xFFFF
    spot = simulate_batch(16, xs, ys)
    took = time.perf_counter() - start
    ok = (res.p_correct.min() >= 2 / 3 and res.min_overlap > 1e-10 and max(losses) <= bound
          and spot.p_correct.min() >= 2 / 3 and took < 900)
    verdict("4 disjointness", ok,
            f"n=8 min_success={res.p_correct.min():.5f} min_overlap={res.min_overlap:.2e} "
            f"max_stage_loss={max(losses):.4f}<={bound:.0f}; n=16 spot min_success={spot.p_correct.min():.5f}", took)
    assert ok


# 5. information theory


def _random_povm(d, rng):
    ch = random_channel(d, rng, n_kraus=int(rng.integers(2, 5)))
    return [k.conj().T @ k for k in ch.kraus_ops]


def test_criterion_5_information_theory(verdict):
    start = time.perf_counter()
    rng = np.random.default_rng(5)
    trials = 1000
    worst = dict.fromkeys(["eq1", "helstrom", "povm", "kraus", "continuity", "max_entropy", "avg_encoding", "uhlmann"], 0.0)
    for _ in range(trials):
        d = int(rng.integers(2, 6))
        a, b = random_pure(d, rng), random_pure(d, rng)
        worst["eq1"] = max(worst["eq1"], abs(pure_state_distance(a, b) - trace_norm_distance(a.density(), b.density())))

        r1 = random_density(d, rng, rank=int(rng.integers(1, d + 1)))
        r2 = random_density(d, rng, rank=int(rng.integers(1, d + 1)))
        tn = trace_norm(r1.entries - r2.entries)
        hel = np.abs(outcome_distribution(r1, helstrom_measurement(r1, r2)) - outcome_distribution(r2, helstrom_measurement(r1, r2))).sum()
        worst["helstrom"] = max(worst["helstrom"], abs(hel - tn))
        for _ in range(50):
            povm = _random_povm(d, rng)
            gap = np.abs(outcome_distribution(r1, povm) - outcome_distribution(r2, povm)).sum() - tn
            worst["povm"] = max(worst["povm"], gap)

        ch = random_channel(d, rng, n_kraus=int(rng.integers(1, 5)))
        diff = np.abs(apply_channel(r1, ch).entries - apply_channel_dilated(r1, ch).entries).max()
        worst["kraus"] = max(worst["kraus"], diff)

        nbits = int(rng.integers(1, 5))
        p = rng.dirichlet(np.ones(2**nbits))
        q = (1 - (t := rng.uniform(0, 0.25))) * p + t * rng.dirichlet(np.ones(2**nbits))
        pd, qd = ProbDist(dict(enumerate(p))), ProbDist(dict(enumerate(q)))
        dist = l1_distance(pd, qd)
        gap = abs(shannon_entropy(pd) - shannon_entropy(qd)) - continuity_bound(dist, nbits)
        sig = (1 - (t := rng.uniform(0, 0.5 / math.e))) * r1.entries + t * random_density(d, rng).entries
        qd_ = trace_norm(r1.entries - sig)
        gap_q = abs(von_neumann_entropy(r1) - von_neumann_entropy(sig)) - continuity_bound(qd_, math.log2(d), quantum=True)
        worst["continuity"] = max(worst["continuity"], gap, gap_q)

        gamma = rng.uniform(0.01, 1.0)
        v = gamma * rng.dirichlet(np.ones(2**nbits) * rng.uniform(0.1, 2))
        ent = float(-sum(x * math.log2(x) for x in v if x > 0))
        worst["max_entropy"] = max(worst["max_entropy"], ent - max_entropy_bound(float(v.sum()), nbits))

        k = int(rng.integers(2, 5))
        w = rng.dirichlet(np.ones(k))
        s = CqState.from_blocks({(x,): (float(w[x]), random_density(d, rng)) for x in range(k)}, ["X"])
        lhs, rhs = average_encoding_check(s)
        worst["avg_encoding"] = max(worst["avg_encoding"], lhs - rhs)

        sigma = (1 - (t := rng.uniform(0, 1))) * r1.entries + t * r2.entries
        phi1, phi2 = purify(r1), purify(DensityMatrix(sigma, validate=False))
        _, aligned = uhlmann_align(phi1, phi2, 1)
        worst["uhlmann"] = max(worst["uhlmann"], aligned - 2 * math.sqrt(trace_norm(r1.entries - sigma)))
    took = time.perf_counter() - start
    ok = all(v <= 1e-7 for v in worst.values()) and took < 120
    verdict("5 information theory", ok,
            f"{trials} instances each; worst excess " + " ".join(f"{k}={v:.1e}" for k, v in worst.items()), took)
    assert ok


# 6. conversion bounds


def _test_protocols():
    rng = np.random.default_rng(6)
    const = CommMatrix.from_function(lambda x, y: 0, 2, 2)
    f3 = CommMatrix.from_function(lambda x, y: (x + 2 * y) % 3, 4, 4)
    disj4 = CommMatrix.from_function(lambda x, y: int(x & y == 0), 16, 16)
    cases = [
        ("noisy_and", noisy_and(), and_matrix(), 1),
        ("boosted", boost(noisy_and(), 3), and_matrix(), 1),
        ("and 0.1", and_protocol(0.1), and_matrix(), 1),
        ("and 0.4 x3", and_protocol(0.4, repetitions=3), and_matrix(), 1),
        ("send-x", send_input_protocol(2, 2, lambda x, y: 0, "A"), const, 1),
        ("idmin-leaky 4", idmin_leaky_uniform(4, 0.25), idmin_matrix(4), 4),
        ("idmin-private 2", idmin_private(2), idmin_matrix(2), 2),
        ("disj 4 x2", disjointness_protocol(4, default_stage_plan(4, stages=2)), disj4, 4),
    ]
    for i in range(5):
        cases.append((f"tree {i}", DeterministicProtocol(random_tree(rng, 4, 4, 5), 4, 4), f3, 2))
    return cases, rng


def test_criterion_6_conversions(verdict):
    start = time.perf_counter()
    f = and_matrix()
    base, boosted = noisy_and(1 / 3), boost(noisy_and(1 / 3), 3)
    exb, exB = execute(base, f), execute(boosted, f)
    binom = 3 * (1 / 3) ** 2 * (2 / 3) + (1 / 3) ** 3
    binom_err = max(abs((1 - exB.output_distribution(x, y).get(x & y, 0.0)) - (binom if y else 0.0)) for x, y in f.pairs())
    rng = np.random.default_rng(60)
    boost_gap = -math.inf
    for mu in [uniform_pairs(f)] + [random_pair_distribution(f, rng) for _ in range(5)]:
        for pl in PLAYERS:
            lb = max(privacy_loss(exb, mu, f, t, pl) for t in _rounds(exb))
            lB = max(privacy_loss(exB, mu, f, t, pl) for t in _rounds(exB))
            boost_gap = max(boost_gap, lB - 3 * lb)

    cases, rng = _test_protocols()
    leak_gap = loss_gap = -math.inf
    checked8 = 0
    for _, p, g, nbits in cases:
        ex = execute(p, g)
        dists = [uniform_pairs(g)] + [random_pair_distribution(g, rng) for _ in range(2)]
        for t in _rounds(ex):
            for pl in PLAYERS:
                lk, witness = leakage_witness(ex, g, t, pl)
                if witness is not None:
                    w_loss = max(0.0, privacy_loss(ex, witness, g, t, pl))
                    leak_gap = max(leak_gap, lk - loss_to_leak_bound(w_loss))
                if lk <= 1 / math.e:
                    checked8 += 1
                    for mu in dists:
                        loss_gap = max(loss_gap, privacy_loss(ex, mu, g, t, pl) - leak_to_loss_bound(lk, nbits))
    took = time.perf_counter() - start
    ok = binom_err <= 1e-12 and boost_gap <= 1e-6 and leak_gap <= 1e-6 and loss_gap <= 1e-6 and took < 120
    verdict("6 conversions", ok,
            f"binomial error diff={binom_err:.1e} boost excess={boost_gap:.2e} "
            f"loss->leakage excess={leak_gap:.3f} leakage->loss excess={loss_gap:.3f} ({checked8} rounds <= 1/e)", took)
    assert ok


# 7. oracle


def test_criterion_7_oracle(verdict):
    start = time.perf_counter()
    cases, rng = _test_protocols()
    worst = 0.0
    shared = 0
    for name, p, g, _ in cases:
        if not hasattr(p, "root") and not hasattr(p, "seeds"):
            continue  # quantum protocols have no tree for the oracle to walk
        dists = [uniform_pairs(g)] + [random_pair_distribution(g, rng, sparsity=0.2) for _ in range(2)]
        rep = exhaustive_privacy_verify(p, g, dists)
        ex = execute(p, g)
        for mu, err, losses in zip(dists, rep.errors, rep.losses):
            worst = max(worst, abs(err - ex.error(mu)))
            for (t, pl), v in losses.items():
                worst = max(worst, abs(v - privacy_loss(ex, mu, g, min(t, ex.n_rounds), pl)))
        shared += 1
    d, x = disj_matrix(2), xor_matrix()
    values = {
        "r(DISJ)": (max_monochromatic_width(d)[0], 2),
        "r(XOR)": (max_monochromatic_width(x)[0], 1),
        "s1_0(DISJ)": (largest_correct_rectangle(d, uniform_pairs(d), 1, 0.0).size, 0.25),
        "s0_0(DISJ)": (largest_correct_rectangle(d, uniform_pairs(d), 0, 0.0).size, 0.25),
        "s1_0(XOR)": (largest_correct_rectangle(x, uniform_pairs(x), 1, 0.0).size, 0.25),
        "s1_1/2(XOR)": (largest_correct_rectangle(x, uniform_pairs(x), 1, 0.5).size, 1.0),
    }
    hand = all(abs(got - want) <= 1e-12 for got, want in values.values())
    took = time.perf_counter() - start
    ok = worst <= 1e-7 and hand
    verdict("7 oracle", ok,
            f"{shared} shared protocols, max disagreement {worst:.1e}; "
            + " ".join(f"{k}={v[0]:g}" for k, v in values.items()), took)
    assert ok
