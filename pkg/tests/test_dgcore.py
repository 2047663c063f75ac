import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dgbench import cx
from dgbench import dgcore as dg
from dgbench import ringmod as rm
from dgbench.errors import MaurerCartanViolation

from randgen import RINGS, random_complex, random_concrete


def closed_degree0(c, x, y, rng):
    """A random closed degree-0 morphism x → y (a random cycle combination)."""
    H = dg.h0(c)
    classes = H.classes(x, y)
    if not classes:
        return c.zero(x, y, 0)
    return H.rep(x, y, classes[int(rng.integers(len(classes)))])


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000), name=st.sampled_from(sorted(RINGS)), parts=st.integers(1, 2))
def test_random_concrete_categories_satisfy_axioms(seed, name, parts):
    c = random_concrete(RINGS[name], np.random.default_rng(seed), n_objects=2, parts=parts)
    rep = dg.check_axioms(c)
    assert rep.ok, rep.violations
    assert all(rep.checked[k] > 0 for k in ("d2", "unit"))


@pytest.mark.parametrize("name", ["F2", "F3", "Z4"])
def test_pretr_cones_satisfy_axioms(name):
    rng = np.random.default_rng(41)
    for _ in range(2):
        c = random_concrete(RINGS[name], rng, n_objects=2)
        P = dg.pretr(c)
        x, y = P.objects
        f = closed_degree0(P, x, y, rng)
        cn, inc, pr = P.cone(f)
        assert P.mc_violations(cn) == []
        assert P.is_closed(inc) and P.is_closed(pr)
        assert dg.check_axioms(P).ok


def test_maurer_cartan_is_enforced():
    R = rm.IntMod(3)
    K = cx.Complex.free(R, 0, [1])
    c = dg.ConcreteCat(R, {"K": K})
    P = dg.pretr(c)
    # q̂_21 q̂_10 = 1 with nothing to cancel it in hom^{-1}(K, K) = 0
    bad = dg.TwistedComplex((("K", 0), ("K", -1), ("K", -2)), (((1, 0), (1,)), ((2, 1), (1,))))
    with pytest.raises(MaurerCartanViolation):
        P.add_object(bad)


def test_tabular_sign_flip_is_caught():
    R = rm.IntMod(3)
    A = cx.Complex.free(R, 0, [1, 1], [[[1]]])
    c = dg.ConcreteCat(R, {"A": A})
    T = dg.tabulate(c)
    assert dg.check_axioms(T).ok
    # negate the structure constants of hom^1 ∘ hom^{-1}
    key = ("A", "A", "A", 1, -1)
    T.table[key] = np.vectorize(lambda v: R.reduce(-v), otypes=[object])(T.table[key])
    rep = dg.check_axioms(T)
    assert not rep.ok
    assert {v.kind for v in rep.violations} & {"leibniz", "assoc", "unit"}


def test_opposite_and_identity_functor():
    rng = np.random.default_rng(2)
    c = random_concrete(RINGS["F2"], rng, n_objects=2)
    assert dg.check_axioms(dg.opposite(c)).ok
    I = dg.identity_functor(c)
    assert I.check() == []
    assert dg.is_quasi_equivalence(I, 1).status == "Verified"


def test_h0_composition_is_well_defined():
    rng = np.random.default_rng(9)
    c = random_concrete(RINGS["Z4"], rng, n_objects=3)
    assert dg.h0(c).check_well_defined() == []


def test_inclusion_of_full_subcategory():
    R = rm.IntMod(2)
    K = cx.Complex.free(R, 0, [1])
    big = dg.ConcreteCat(R, {"K": K, "K1": cx.shift(K, 1)})
    small = dg.ConcreteCat(R, {"K": K})
    F = dg.inclusion_functor(small, big)
    assert F.check() == []
    # K[1] is reached by a one-item twisted complex, so essential surjectivity holds
    res = dg.is_quasi_equivalence(F, 1)
    assert res.status == "Verified" and str(res.preimages["K1"]) == "Tw(K[1])"


def test_torsion_object_is_not_reached_from_free_ones():
    R = rm.IntMod(4)
    free = cx.Complex.free(R, 0, [1])
    torsion = cx.Complex(R, {0: rm.FpModule.diag(R, [2])})
    big = dg.ConcreteCat(R, {"R": free, "T": torsion})
    small = dg.ConcreteCat(R, {"R": free})
    res = dg.is_quasi_equivalence(dg.inclusion_functor(small, big), 2)
    assert res.status != "Verified"
