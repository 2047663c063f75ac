import time

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dgbench import cx
from dgbench import genwit as gw
from dgbench import ringmod as rm

import oracles
from randgen import RINGS, random_complex


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000), name=st.sampled_from(["F2", "F3", "Z4", "Z"]))
def test_three_step_witness_certificates(seed, name):
    A = random_complex(RINGS[name], np.random.default_rng(seed), length=5)
    w = gw.three_step_witness(A)
    assert all(w.check().values()), w.check()
    assert w.heq_to_a().ok
    assert w.v1.is_zero() or all(not w.v1.dmat(i).any() for i in w.v1.diffs)


@pytest.mark.parametrize("name", ["F2", "F3", "Z4"])
def test_witness_cone_has_cohomology_of_a(name):
    rng = np.random.default_rng(8)
    for _ in range(5):
        A = random_complex(RINGS[name], rng, length=4)
        w = gw.three_step_witness(A)
        Cu = w.cone_u.complex
        for n in range(min(A.lo, Cu.lo), max(A.hi, Cu.hi) + 1):
            assert oracles.cohomology_size(Cu, n) == oracles.cohomology_size(A, n)


def test_witness_is_fast_on_length_six():
    A = random_complex(RINGS["Z4"], np.random.default_rng(1), length=6)
    t = time.perf_counter()
    assert gw.three_step_witness(A).ok
    assert time.perf_counter() - t < 1.0


def _f(R, n=1):
    return rm.FpModule.free(R, n)


def test_membership_levels():
    F2 = rm.IntMod(2)
    K = cx.Complex(F2, {0: _f(F2)})
    contractible = cx.Complex(F2, {0: _f(F2), 1: _f(F2)}, {0: rm.mat(F2, [[1]])})
    assert gw.gen_membership([K], contractible).level == 1
    x = cx.Complex(F2, {0: _f(F2, 2), 1: _f(F2, 2), 2: _f(F2)},
                   {0: rm.mat(F2, [[1, 0], [0, 0]]), 1: rm.mat(F2, [[0, 1]])})
    assert gw.gen_membership([K], x).level == 1

    Z4 = rm.IntMod(4)
    R = cx.Complex(Z4, {0: _f(Z4)})
    y = cx.Complex(Z4, {0: _f(Z4), 1: _f(Z4)}, {0: rm.mat(Z4, [[2]])})
    assert gw.gen_membership([R], y).level == 2
    torsion = cx.Complex(Z4, {0: rm.FpModule.diag(Z4, [2])})
    assert gw.gen_membership([R], torsion).status == "NotWithinBound"
