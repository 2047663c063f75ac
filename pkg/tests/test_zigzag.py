import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dgbench import cx
from dgbench import ringmod as rm
from dgbench import zigzag as zz
from dgbench.errors import ShapeMismatch, WindowViolation

F2, F3, Z4 = rm.IntMod(2), rm.IntMod(3), rm.IntMod(4)


def v_of(ring, ranks: dict):
    return cx.v_object([(i, rm.FpModule.free(ring, r)) for i, r in ranks.items()], ring)


def graded_hom_dims(r1: dict, r2: dict, l: int) -> int:
    """dim of degree-l maps between graded vector spaces, by counting pairs."""
    return sum(a * r2.get(i + l, 0) for i, a in r1.items())


@pytest.mark.parametrize("ranks", [{0: 1, 2: 1}, {-1: 1, 0: 2}, {1: 1}, {-2: 1, 1: 1, 2: 1}])
def test_holim_of_hom_n_matches_graded_hom(ranks):
    b = zz.b_object_from_v(v_of(F2, ranks))
    assert b.check_b1() == []
    rep = zz.holim_hom_check(b, b, (-4, 4))
    assert rep.ok
    for row in rep.rows:
        assert len(row["holim"]) == graded_hom_dims(ranks, ranks, row["l"])


def test_holim_truncated_at_k_drops_higher_degrees():
    ranks = {0: 1, 2: 1}
    b = zz.b_object_from_v(v_of(F2, ranks))
    rep = zz.holim_hom_check(b, b, (-3, 3), k=0)
    assert rep.ok
    assert {row["l"]: len(row["holim"]) for row in rep.rows} == {-3: 0, -2: 1, -1: 0, 0: 2, 1: 0, 2: 0, 3: 0}


def test_forget_map_is_homotopy_equivalence():
    b = zz.b_object_from_v(v_of(F3, {0: 1, 1: 1}), thicken={0: [(rm.FpModule.free(F3, 1), 0)]})
    assert b.check_b1() == []
    assert cx.is_homotopy_equivalence(b.forget_map()).ok


def test_hom_n_is_nested():
    b = zz.b_object_from_v(v_of(F2, {0: 1, 2: 1}))
    assert zz.nested_check(b, b, 1, 2) == []
    assert zz.nested_check(b, b, 2, 3) == []


def test_nonzero_differential_is_rejected():
    A = cx.Complex(F2, {0: rm.FpModule.free(F2, 1), 1: rm.FpModule.free(F2, 1)}, {0: rm.mat(F2, [[1]])})
    with pytest.raises(ShapeMismatch):
        zz.b_object_from_v(A)


def test_window_violation():
    b = zz.b_object_from_v(v_of(F2, {0: 1}))
    f = zz.hom_n(b, b, 2, 0).span()[0]
    with pytest.raises(WindowViolation):
        zz.restricted_compose(b, b, b, f, f, 0, 1, 1)


@settings(max_examples=12, deadline=None)
@given(seed=st.integers(0, 10_000), ring=st.sampled_from([F2, F3, Z4]),
       n=st.integers(1, 2), k=st.integers(0, 1), l=st.integers(0, 1))
def test_compat_and_leibniz_on_random_triples(seed, ring, n, k, l):
    rng = np.random.default_rng(seed)
    bs = [zz.random_b_object(ring, rng, thicken_prob=0.3) for _ in range(3)]
    assert all(b.check_b1() == [] for b in bs)
    assert zz.compat_check(*bs, n, k, l).ok
    assert zz.leibniz_violations(*bs, n, k, l) == []


def test_injected_sign_is_detected_with_witness():
    b = zz.b_object_from_v(v_of(F3, {0: 1}))
    assert zz.compat_check(b, b, b, 1, 0, 0).ok
    rep = zz.compat_check(b, b, b, 1, 0, 0, sign=lambda h, i, j: -1)
    assert not rep.ok
    f, g, left, right = rep.witness
    assert left == {(0, 0): (1,)} and right == {(0, 0): (2,)}
