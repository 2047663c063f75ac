import numpy as np
import pytest

from dgbench import cx
from dgbench import dgcore as dg
from dgbench import quot
from dgbench import ringmod as rm
from dgbench.errors import CapOverflowPolicyRequired

from randgen import RINGS, random_concrete


def _free(R, n=1):
    return rm.FpModule.free(R, n)


def product_instance():
    R = rm.IntMod(3)
    K, Z = cx.Complex(R, {0: _free(R)}), cx.Complex.zero(R)
    return dg.ConcreteCat(R, {"X": (K, K), "D": (K, Z), "E": (Z, cx.shift(K, 1))}), ["D"]


def rational_instance():
    R = rm.Rational()
    K, Z = cx.Complex(R, {0: _free(R)}), cx.Complex.zero(R)
    KK = cx.direct_sum([K, K], R).complex
    return dg.ConcreteCat(R, {"X": (K, cx.shift(K, -1)), "D": (Z, cx.shift(K, -1)), "Y": (KK, Z)}), ["D"]


def f2_instance():
    R = rm.IntMod(2)
    K, Z = cx.Complex(R, {0: _free(R)}), cx.Complex.zero(R)
    S = cx.direct_sum([K, cx.shift(K, 1)], R).complex
    return dg.ConcreteCat(R, {"X": (S, K), "D": (K, Z), "Y": (cx.shift(K, 1), cx.shift(K, -1))}), ["D"]


# dimensions of H^0 in the quotient, derived by hand from the product splitting
CURATED = [
    (product_instance, "X", "X", 1),
    (product_instance, "X", "E", 0),
    (rational_instance, "X", "X", 1),
    (rational_instance, "X", "Y", 2),
    (rational_instance, "Y", "X", 2),
    (f2_instance, "Y", "Y", 1),
    (f2_instance, "X", "Y", 0),
]


@pytest.mark.parametrize("build,x,y,dim", CURATED)
def test_drinfeld_matches_verdier_on_fields(build, x, y, dim):
    c, D = build()
    q = quot.drinfeld_quotient(c, D, 1, "track-as-unknown")
    res = quot.quotient_hom_cohomology(q, x, y, 0)
    assert res.certificate == "Exact"
    assert len(res.module.nu) == dim
    v = quot.verdier_h0_oracle(c, D, x, y)
    assert v.status == "Ok" and v.dim == dim


@pytest.mark.parametrize("name", ["F2", "F3", "Z4"])
def test_killing_everything_gives_zero_at_cap_one(name):
    rng = np.random.default_rng(17)
    c = random_concrete(RINGS[name], rng, n_objects=2)
    q = quot.drinfeld_quotient(c, list(c.objects), 1, "reject")
    for x in c.objects:
        res = quot.quotient_hom_cohomology(q, x, x, 0)
        assert res.module.is_zero() and res.certificate == "Exact"
        # d(f_X) = id_X
        assert q.eq(q.d(q.f(x)), q.unit(x))


def test_random_capped_quotients_satisfy_axioms():
    rng = np.random.default_rng(29)
    for k in range(50):
        name = ("F2", "F3", "Z4")[k % 3]
        c = random_concrete(RINGS[name], rng, n_objects=2)
        for cap in (0, 1):
            q = quot.drinfeld_quotient(c, ["X0"], cap, "track-as-unknown")
            rep = dg.check_axioms(q)
            assert rep.ok, (k, cap, rep.violations[:2])


def test_cap_overflow_needs_a_policy():
    c, D = product_instance()
    q = quot.drinfeld_quotient(c, D, 1)
    with pytest.raises(CapOverflowPolicyRequired):
        q.compose(q.f("D"), q.f("D"))


def test_lower_bound_is_reported_when_long_words_survive():
    c, D = product_instance()
    q = quot.drinfeld_quotient(c, D, 0, "track-as-unknown")
    assert quot.quotient_hom_cohomology(q, "X", "X", 0).certificate == "LowerBoundOnly"
