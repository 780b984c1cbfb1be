from itertools import combinations, product

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qprivacy.core import CommMatrix, and_matrix, idmin_matrix, or_matrix, xor_matrix
from qprivacy.core.classical import ProtocolError
from qprivacy.protocols import quantum_reencoding
from qprivacy.structure import (
    ForbiddenWitness,
    NotPrivateError,
    corners_check,
    decompose,
    equivalence_closure,
    extract_protocol_tree,
    is_private,
    synthesize_private_protocol,
    verify_witness,
    xor_decompose,
)


def brute_force_forbidden(codes: np.ndarray) -> bool:
    """Any submatrix (all row and column subsets) that is forbidden by definition."""
    r, c = codes.shape
    for k in range(1, r + 1):
        for rows in combinations(range(r), k):
            for l in range(1, c + 1):
                for cols in combinations(range(c), l):
                    if verify_witness(codes, ForbiddenWitness(rows, cols)):
                        return True
    return False


def test_and_has_forbidden_witness():
    ok, wit = is_private(and_matrix())
    assert not ok
    assert (wit.rows, wit.cols) == ((0, 1), (0, 1))
    with pytest.raises(NotPrivateError):
        synthesize_private_protocol(and_matrix())


def test_xor_and_idmin_synthesize():
    p = synthesize_private_protocol(xor_matrix())
    assert p.max_rounds() == 2
    for n, rounds in ((1, 2), (2, 6), (3, 14)):
        assert synthesize_private_protocol(idmin_matrix(n)).max_rounds() == rounds


def test_equivalence_closure_examples():
    m = np.array([[0, 1, 2], [3, 1, 4], [5, 6, 4], [7, 8, 9]])
    assert equivalence_closure(m, "rows").classes == ((0, 1, 2), (3,))
    assert equivalence_closure(m, "cols").classes == ((0,), (1,), (2,))


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 5), st.integers(1, 5), st.integers(0, 2**32 - 1))
def test_closure_is_a_partition(r, c, seed):
    codes = np.random.default_rng(seed).integers(0, 3, size=(r, c))
    for axis, n in (("rows", r), ("cols", c)):
        cls = equivalence_closure(codes, axis).classes
        assert sorted(i for k in cls for i in k) == list(range(n))


@pytest.mark.parametrize("shape", [(2, 2), (2, 3), (3, 3)])
def test_boolean_characterization_exhaustive(shape):
    r, c = shape
    for bits in product((0, 1), repeat=r * c):
        codes = np.array(bits).reshape(r, c)
        ok, wit = is_private(codes)
        assert ok == (not brute_force_forbidden(codes))
        if wit is not None:
            assert verify_witness(codes, wit)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_ternary_characterization(seed):
    codes = np.random.default_rng(seed).integers(0, 3, size=(3, 4))
    ok, wit = is_private(codes)
    assert ok == (not brute_force_forbidden(codes))
    m = CommMatrix(codes, (0, 1, 2))
    if ok:
        p = synthesize_private_protocol(m)
        assert all(p.run(x, y)[0] == m.value(x, y) for x, y in m.pairs())


def test_decomposition_leaves_are_monochromatic():
    tree, wit = decompose(idmin_matrix(3))
    assert wit is None
    codes = idmin_matrix(3).codes
    for leaf in tree.leaves():
        assert len(np.unique(codes[np.ix_(leaf.rows, leaf.cols)])) == 1


def test_corners_examples():
    assert corners_check(xor_matrix()) is None
    assert corners_check(or_matrix()) == ForbiddenWitness((0, 1), (0, 1))
    assert corners_check(and_matrix()) is not None


def test_xor_decompose():
    fa, fb = xor_decompose(xor_matrix())
    assert fa.tolist() == [0, 1] and fb.tolist() == [0, 1]
    ones = CommMatrix.from_function(lambda x, y: 1, 2, 2, alphabet=[0, 1])
    fa, fb = xor_decompose(ones)
    assert fa.tolist() == [0, 0] and fb.tolist() == [1, 1]
    assert xor_decompose(and_matrix()) is None
    with pytest.raises(ValueError):
        xor_decompose(idmin_matrix(1))


def test_extract_tree_from_reencoded_private_protocols():
    q = quantum_reencoding(synthesize_private_protocol(xor_matrix()))
    assert extract_protocol_tree(q, xor_matrix()).depth() == 2
    const = CommMatrix.from_function(lambda x, y: 0, 2, 2)
    q0 = quantum_reencoding(synthesize_private_protocol(const))
    assert extract_protocol_tree(q0, const).depth() == 0
    q1 = quantum_reencoding(synthesize_private_protocol(idmin_matrix(1)))
    tree = extract_protocol_tree(q1, idmin_matrix(1))
    codes = idmin_matrix(1).codes
    for leaf in tree.leaves():
        assert len(np.unique(codes[np.ix_(leaf.rows, leaf.cols)])) == 1


def test_extract_rejects_leaky_protocol():
    from qprivacy.protocols import and_protocol

    with pytest.raises(ProtocolError):
        extract_protocol_tree(and_protocol(0.4, repetitions=1), and_matrix())


@pytest.mark.parametrize("shape", [(2, 2), (2, 3), (3, 3), (3, 4), (4, 4)])
def test_corners_free_iff_xor_form(shape):
    r, c = shape
    for v in range(2 ** (r * c)):
        codes = ((v >> np.arange(r * c)) & 1).reshape(r, c)
        assert (corners_check(codes) is None) == (xor_decompose(codes) is not None)


def test_extracted_depth_within_round_count():
    for f in (xor_matrix(), idmin_matrix(1), idmin_matrix(2)):
        q = quantum_reencoding(synthesize_private_protocol(f))
        assert extract_protocol_tree(q, f).depth() <= len(q.steps)
