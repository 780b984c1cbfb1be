from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

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
from qprivacy.oracle import (
    OracleSizeError,
    _width_branch_and_bound,
    _width_exhaustive,
    cl0_lower_bound,
    exhaustive_privacy_verify,
    largest_correct_rectangle,
    max_monochromatic_width,
)
from qprivacy.privacy import privacy_loss
from qprivacy.protocols import noisy_and
from qprivacy.structure import is_private, synthesize_private_protocol

from helpers import random_tree


def test_width_examples():
    assert max_monochromatic_width(xor_matrix())[0] == 1
    const = CommMatrix.from_function(lambda x, y: 0, 4, 4)
    assert max_monochromatic_width(const)[0] == 4
    w, wit = max_monochromatic_width(disj_matrix(2))
    assert w == 2
    codes = disj_matrix(2).codes
    assert len(np.unique(codes[np.ix_(wit.rows, wit.cols)])) == 1


@settings(max_examples=80, deadline=None)
@given(st.integers(1, 7), st.integers(1, 7), st.integers(0, 2**32 - 1))
def test_branch_and_bound_matches_exhaustive(r, c, seed):
    codes = np.random.default_rng(seed).integers(0, 2, size=(r, c))
    assert _width_branch_and_bound(codes)[0] == _width_exhaustive(codes)[0]


def test_width_large_side_uses_branch_and_bound():
    m = disj_matrix(5)  # 32 x 32
    w, wit = max_monochromatic_width(m)
    # every x and y holding element 0: a 16 x 16 block of zeros
    assert w == 16
    assert len(np.unique(m.codes[np.ix_(wit.rows, wit.cols)])) == 1
    with pytest.raises(OracleSizeError):
        max_monochromatic_width(CommMatrix.from_function(lambda x, y: 0, 65, 2))


def test_cl0_examples():
    const = CommMatrix.from_function(lambda x, y: 0, 4, 4)
    assert cl0_lower_bound(const) == -1.0
    assert cl0_lower_bound(xor_matrix()) == -0.5
    assert cl0_lower_bound(disj_matrix(2)) == -0.5


def naive_correct_rectangle(m, mu, a, eps):
    w = np.zeros(m.shape)
    for (x, y), p in mu.items():
        w[x, y] = p
    hit = m.codes == m.code_of(a)
    best = 0.0
    r, c = m.shape
    for k in range(1, r + 1):
        for rows in combinations(range(r), k):
            for l in range(1, c + 1):
                for cols in combinations(range(c), l):
                    sub = w[np.ix_(rows, cols)]
                    good = (sub * hit[np.ix_(rows, cols)]).sum()
                    if good >= (1 - eps) * sub.sum() - 1e-12:
                        best = max(best, sub.sum())
    return best


def test_largest_correct_rectangle_examples():
    d = disj_matrix(2)
    mu = uniform_pairs(d)
    assert largest_correct_rectangle(d, mu, 1, 1.0).size == pytest.approx(1.0)
    const = CommMatrix.from_function(lambda x, y: 1, 4, 4)
    assert largest_correct_rectangle(const, uniform_pairs(const), 1, 0.0).size == pytest.approx(1.0)
    # disjoint 1-rectangles: subsets of S against subsets of the complement, at most 4 cells
    best = largest_correct_rectangle(d, mu, 1, 0.0)
    assert best.size == pytest.approx(0.25)
    assert best.correctness == pytest.approx(1.0)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([0.0, 0.1, 0.3, 0.5]))
def test_largest_correct_rectangle_matches_naive(seed, eps):
    rng = np.random.default_rng(seed)
    m = CommMatrix(rng.integers(0, 2, size=(3, 4)), (0, 1))
    mu = random_pair_distribution(m, rng)
    got = largest_correct_rectangle(m, mu, 1, eps)
    assert got.size == pytest.approx(naive_correct_rectangle(m, mu, 1, eps), abs=1e-12)
    assert got.correctness >= 1 - eps - 1e-12


def test_verify_examples():
    for f in (xor_matrix(), idmin_matrix(2)):
        rep = exhaustive_privacy_verify(synthesize_private_protocol(f), f, [uniform_pairs(f)])
        assert rep.max_error == 0.0
        assert rep.max_loss <= 1e-12
    const = CommMatrix.from_function(lambda x, y: 0, 4, 4)
    rep = exhaustive_privacy_verify(send_input_protocol(4, 4, lambda x, y: 0, "A"), const, [uniform_pairs(const)])
    assert rep.losses[0][1, "B"] == pytest.approx(2.0, abs=1e-12)


def _shared_cases():
    rng = np.random.default_rng(11)
    f3 = CommMatrix.from_function(lambda x, y: (x + 2 * y) % 3, 4, 4)
    cases = [(noisy_and(), and_matrix()), (boost(noisy_and(), 3), and_matrix())]
    for _ in range(6):
        cases.append((DeterministicProtocol(random_tree(rng, 4, 4, 5), 4, 4), f3))
    for f in (xor_matrix(), idmin_matrix(2)):
        cases.append((synthesize_private_protocol(f), f))
    return cases, rng


def test_oracle_agrees_with_analyzer():
    cases, rng = _shared_cases()
    for p, f in cases:
        dists = [uniform_pairs(f)] + [random_pair_distribution(f, rng, sparsity=0.2) for _ in range(2)]
        rep = exhaustive_privacy_verify(p, f, dists)
        ex = execute(p, f)
        for mu, err, losses in zip(dists, rep.errors, rep.losses):
            assert err == pytest.approx(ex.error(mu), abs=1e-12)
            for (t, player), v in losses.items():
                assert v == pytest.approx(privacy_loss(ex, mu, f, min(t, ex.n_rounds), player), abs=1e-7)


def test_synthesized_communication_respects_cl0():
    rng = np.random.default_rng(5)
    mats = [xor_matrix(), idmin_matrix(1), idmin_matrix(2), idmin_matrix(3)]
    while len(mats) < 30:
        n = int(rng.integers(1, 4))
        m = CommMatrix(rng.integers(0, 3, size=(2**n, 2**n)) * (rng.random((2**n, 2**n)) < 0.3), (0, 1, 2))
        if is_private(m)[0]:
            mats.append(m)
    for m in mats:
        p = synthesize_private_protocol(m)
        assert p.max_bits() >= cl0_lower_bound(m)
