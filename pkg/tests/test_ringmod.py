import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dgbench import ringmod as rm
from dgbench.errors import UnsupportedRing

import oracles

small_int = st.integers(min_value=-6, max_value=6)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 3).flatmap(lambda r: st.integers(1, 3).flatmap(
    lambda c: st.lists(st.lists(small_int, min_size=c, max_size=c), min_size=r, max_size=r))))
def test_snf_matches_determinantal_divisors(rows):
    R = rm.Int()
    m = rm.mat(R, rows)
    U, D, V = rm.snf(m, R)
    assert rm.mat_equal(rm.mmul(R, rm.mmul(R, U, m), V), D)
    diag = [abs(int(D[i, i])) for i in range(min(D.shape))]
    prods, acc = [], 1
    for d in diag:
        acc *= d
        prods.append(acc)
    assert prods == oracles.determinantal_divisors(rows)
    nz = [d for d in diag if d]
    assert all(b % a == 0 for a, b in zip(nz, nz[1:]))


@pytest.mark.parametrize("ring", [rm.IntMod(4), rm.IntMod(6), rm.IntMod(9)])
def test_module_cardinality_by_enumeration(ring):
    rng = np.random.default_rng(7)
    for _ in range(15):
        r, c = int(rng.integers(1, 3)), int(rng.integers(0, 3))
        rel = np.array([[ring.random_element(rng) for _ in range(c)] for _ in range(r)], dtype=object)
        M = rm.FpModule(ring, rel.reshape(r, c))
        assert M.cardinality() == oracles.module_size(M)


def test_iso_type_separates_z4_squared_from_z2_pair():
    # |{x: 2x = 0}| distinguishes Z/4 from Z/2 ⊕ Z/2
    R = rm.IntMod(8)
    A = rm.FpModule.diag(R, [4])
    B = rm.FpModule.diag(R, [2, 2])
    assert A.cardinality() == B.cardinality() == 4
    assert A.iso_type() != B.iso_type()
    assert oracles.killed_by(A, 2) == 2 and oracles.killed_by(B, 2) == 4


@pytest.mark.parametrize("ring", [rm.IntMod(4), rm.IntMod(2), rm.IntMod(3)])
def test_kernel_and_cokernel_sizes(ring):
    rng = np.random.default_rng(3)
    for _ in range(12):
        M = rm.FpModule.free(ring, int(rng.integers(1, 3)))
        N = rm.FpModule.free(ring, int(rng.integers(1, 3)))
        m = np.array([[ring.random_element(rng) for _ in range(M.r)] for _ in range(N.r)], dtype=object)
        f = rm.ModMap(M, N, m)
        K, inc = rm.kernel(f)
        brute = sum(1 for v in oracles.vectors(ring, M.r) if all(x == 0 for x in f.apply(v)))
        assert K.cardinality() == brute
        assert (f @ inc).is_zero()
        Q, _ = rm.cokernel(f)
        assert Q.cardinality() * len(set(tuple(f.apply(v)) for v in oracles.vectors(ring, M.r))) == \
            ring.order ** N.r


def test_well_definedness_on_torsion():
    R = rm.IntMod(4)
    Z2 = rm.FpModule.diag(R, [2])
    Z4 = rm.FpModule.free(R, 1)
    assert rm.ModMap(Z2, Z4, rm.mat(R, [[2]])).is_well_defined()
    assert not rm.ModMap(Z2, Z4, rm.mat(R, [[1]])).is_well_defined()
    assert rm.ModMap(Z4, Z2, rm.mat(R, [[1]])).is_well_defined()


@pytest.mark.parametrize("ring,text,canon", [
    (rm.IntMod(4), "-1", "3"),
    (rm.IntMod(5), "7", "2"),
    (rm.Int(), "-12", "-12"),
    (rm.Rational(), "6/4", "3/2"),
    (rm.DualNumbers(3), "4+2x", "1+2x"),
    (rm.DualNumbers(2), "x", "x"),
])
def test_parse_format(ring, text, canon):
    a = ring.parse_element(text)
    assert ring.format_element(a) == canon
    assert ring.parse_element(canon) == a


def test_dual_numbers_square_zero():
    R = rm.DualNumbers(3)
    x = R.parse_element("x")
    assert R.reduce(x * x) == 0
    M = rm.FpModule.free(R, 1)
    assert M.cardinality() == 9
    assert rm.FpModule.diag(R, [x]).cardinality() == 3


def test_hom_module_dimension_matches_brute_force():
    R = rm.IntMod(4)
    M = rm.FpModule.diag(R, [2, 0])
    N = rm.FpModule.diag(R, [2])
    H, basis = rm.hom_module(M, N)
    brute = 0
    for a in R.elements():
        for b in R.elements():
            f = rm.ModMap(M, N, rm.mat(R, [[a, b]]))
            if f.is_well_defined():
                brute += 1
    # maps are counted modulo those that are zero in N
    zero_maps = sum(1 for a in R.elements() for b in R.elements()
                    if rm.ModMap(M, N, rm.mat(R, [[a, b]])).is_zero())
    assert H.cardinality() == brute // zero_maps
    assert all(b.is_well_defined() for b in basis)


def test_rational_snf_is_refused():
    with pytest.raises(UnsupportedRing):
        rm.snf(rm.mat(rm.Rational(), [[1]]), rm.Rational())
