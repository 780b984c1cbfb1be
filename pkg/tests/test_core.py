import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qprivacy.core import (
    ABORT,
    CommMatrix,
    DeterministicProtocol,
    Leaf,
    Node,
    ProtocolError,
    RandomizedProtocol,
    best_deterministic_for_distribution,
    boost,
    default_seed_count,
    disj_matrix,
    error_on_distribution,
    execute,
    idmin_matrix,
    protocol_from_json,
    protocol_to_json,
    run_quantum,
    sparsify_public_coin,
    uniform_pairs,
    and_matrix,
    random_pair_distribution,
)
from qprivacy.core.conversions import majority, seed_scores
from qprivacy.protocols import and_protocol, disjointness_protocol, default_stage_plan, equality_hash, idmin_private, noisy_and
from qprivacy.structure import synthesize_private_protocol

from helpers import random_tree


def test_idmin_matrix_values():
    m = idmin_matrix(2)
    assert m.value(0, 3) == 1
    assert m.value(3, 1) == 2
    assert m.value(2, 2) == 5


def test_disj_matrix_means_disjoint():
    m = disj_matrix(2)
    assert m.value(0b01, 0b10) == 1
    assert m.value(0b11, 0b01) == 0
    assert m.value(0, 0b11) == 1


def test_from_table_rejects_ragged_and_foreign_entries():
    with pytest.raises(ValueError):
        CommMatrix.from_table([[0, 1], [0]])
    with pytest.raises(ValueError):
        CommMatrix.from_table([[0, 2]], alphabet=[0, 1])


def test_idmin_private_traces():
    p = idmin_private(2)
    out, tr, _ = p.run(0, 3)
    assert out == 1 and tr == (("done", 0),)
    out, tr, _ = p.run(3, 1)
    assert out == 2 and tr[-1] == ("yes", 1)
    assert p.max_rounds() == 6


def test_validate_catches_undefined_message():
    bad = DeterministicProtocol(Node("A", {0: 0}, {0: Leaf(0)}), 2, 1)
    with pytest.raises(ProtocolError):
        bad.validate()


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_output_table_matches_run(seed):
    rng = np.random.default_rng(seed)
    p = DeterministicProtocol(random_tree(rng, 4, 3, 5), 4, 3)
    m = CommMatrix.from_function(lambda x, y: 0, 4, 3, alphabet=[0, 1, 2])
    table = p.output_table(m)
    for x, y in m.pairs():
        assert table[x, y] == p.run(x, y)[0]


def test_json_round_trip_keeps_behaviour():
    p = synthesize_private_protocol(idmin_matrix(2))
    q = protocol_from_json(protocol_to_json(p))
    for x in range(4):
        for y in range(4):
            assert p.run(x, y) == q.run(x, y)
    r = idmin_private(2)
    s = protocol_from_json(protocol_to_json(r))
    assert all(r.run(x, y) == s.run(x, y) for x in range(4) for y in range(4))


def test_randomized_protocol_validation():
    p = idmin_private(1)
    with pytest.raises(ProtocolError):
        RandomizedProtocol([(0.5, p)])
    with pytest.raises(ProtocolError):
        RandomizedProtocol([(1.0, p)], "private")


def test_and_single_repetition_outcomes():
    q = and_protocol(0.2, repetitions=1)
    res = run_quantum(q, 1, 1)
    dist = res.output_distribution()
    assert dist[1] == pytest.approx(0.01, abs=1e-12)
    assert dist[ABORT] == pytest.approx(0.99, abs=1e-12)


def test_per_round_states_are_normalized():
    q = and_protocol(0.4, repetitions=1)
    for x, y in and_matrix().pairs():
        res = run_quantum(q, x, y)
        for views in res.per_round_states:
            for player in ("A", "B"):
                total = sum(w * np.trace(b).real for w, b in views[player].values())
                assert total == pytest.approx(1.0, abs=1e-9)


def test_merged_run_matches_full_run():
    q = disjointness_protocol(4, default_stage_plan(4, stages=2))
    for x, y in [(0b0011, 0b0110), (0b1010, 0b0101), (0b1111, 0b1000)]:
        full = run_quantum(q, x, y).output_distribution()
        fast = run_quantum(q, x, y, record_states=False, merge=True).output_distribution()
        for k in set(full) | set(fast):
            assert full.get(k, 0.0) == pytest.approx(fast.get(k, 0.0), abs=1e-10)


def test_majority():
    assert majority([1, 1, 0]) == 1
    assert majority([1, 0]) == ABORT


def test_boost_gives_exact_binomial_error():
    f = and_matrix()
    base = noisy_and(1 / 3)
    p = 1 / 3
    boosted = execute(boost(base, 3), f)
    for x, y in f.pairs():
        wrong = 1 - boosted.output_distribution(x, y).get(x & y, 0.0)
        expect = 3 * p**2 * (1 - p) + p**3 if y == 1 else 0.0
        assert wrong == pytest.approx(expect, abs=1e-12)
    with pytest.raises(ValueError):
        boost(base, 2)


def test_default_seed_count():
    assert default_seed_count(4, 0.5, 0.25, 0.5) == math.ceil(64 * (4 + math.log2(16)))


def _mixed_error(r, f, mu):
    return sum(q * error_on_distribution(d, f, mu) for q, d in r.seeds)


def test_sparsified_equality_keeps_error_small():
    f = CommMatrix.from_function(lambda x, y: int(x == y), 64, 64, n_bits=6)
    mu = uniform_pairs(f)
    r = equality_hash(6)
    orig = _mixed_error(r, f, mu)
    assert orig == pytest.approx(63 / 64 / 4, abs=1e-12)
    s = sparsify_public_coin(r, 512, rng_seed=0)
    assert len(s.seeds) == 512
    assert _mixed_error(s, f, mu) <= 1.5 * orig + 0.02
    # announced index costs ceil(log2 k) bits
    assert s.seeds[0][1].root.bits == 9
    again = sparsify_public_coin(r, 512, rng_seed=0)
    assert [d.root.children[i].message for i, (_, d) in enumerate(again.seeds)] == \
           [d.root.children[i].message for i, (_, d) in enumerate(s.seeds)]


def test_sparsify_rejects_private_coins():
    with pytest.raises(ProtocolError):
        sparsify_public_coin(noisy_and(), 4)


def test_best_seed_beats_average():
    f = CommMatrix.from_function(lambda x, y: int(x == y), 8, 8, n_bits=3)
    rng = np.random.default_rng(3)
    r = equality_hash(3)
    for _ in range(3):
        mu = random_pair_distribution(f, rng)
        for we, wl in ((1.0, 0.0), (1.0, 1.0)):
            scores = seed_scores(r, mu, f, we, wl)
            avg = sum(q * s for (q, _), s in zip(r.seeds, scores))
            best = best_deterministic_for_distribution(r, mu, f, we, wl)
            idx = [d for _, d in r.seeds].index(best)
            assert scores[idx] <= avg + 1e-12
