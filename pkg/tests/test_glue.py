import numpy as np
import pytest

from dgbench import cx
from dgbench import dgcore as dg
from dgbench import glue
from dgbench import ringmod as rm
from dgbench.errors import SetupViolated

from randgen import RINGS, random_pullback_pair

S = frozenset


def _k(R):
    return cx.Complex(R, {0: rm.FpModule.free(R, 1)})


def product_ring_cat(p=2):
    R = rm.IntMod(p)
    K, Z = _k(R), cx.Complex.zero(R)
    K1 = cx.shift(K, 1)
    objs = {"0": (Z, Z), "a": (K, Z), "b": (Z, K), "ab": (K, K), "a1": (K1, Z), "b1": (Z, K1)}
    return dg.ConcreteCat(R, objs, "k×k")


@pytest.mark.parametrize("seed", range(12))
def test_random_pullbacks_satisfy_axioms(seed):
    name = ("F2", "F3", "Z4", "Z")[seed % 4]
    F1, F2 = random_pullback_pair(RINGS[name], np.random.default_rng(100 + seed))
    P = glue.homotopy_pullback(F1, F2, max_per_pair=1)
    rep = dg.check_axioms(P)
    assert rep.ok, rep.violations[:2]


def test_pullback_sign_flip_is_caught():
    F1, F2 = random_pullback_pair(RINGS["F3"], np.random.default_rng(4))
    P = glue.homotopy_pullback(F1, F2, max_per_pair=1)
    T = dg.tabulate(P)
    assert dg.check_axioms(T).ok
    flipped = False
    for key, arr in T.table.items():
        x, y, z, p, q = key
        if q % 2 and arr.size and any(v != 0 for v in arr.flat):
            T.table[key] = np.vectorize(lambda v: T.ring.reduce(-v), otypes=[object])(arr)
            flipped = True
            break
    assert flipped
    assert not dg.check_axioms(T).ok


def test_pullback_objects_carry_equivalences():
    R = rm.IntMod(3)
    A = cx.Complex.free(R, 0, [1, 1], [[[1]]])
    C = dg.ConcreteCat(R, {"A": A, "K": _k(R)})
    I = dg.identity_functor(C)
    P = glue.homotopy_pullback(I, I)
    for o in P.objects:
        assert P.certificate(o)
    # A is contractible, so (A, K) has no equivalence and is absent
    assert all((o.c1, o.c2) != ("A", "K") for o in P.objects)


def test_critpb_on_product_ring():
    rep = glue.check_critpb(product_ring_cat(), ["a", "a1"], ["b", "b1"], bound=2)
    assert rep.verified
    assert rep.setup["orthogonality"] == "ok"


def test_critpb_identity_backend_with_empty_subcategories():
    rep = glue.check_critpb(product_ring_cat(), [], [], backend="identity", bound=1)
    assert rep.verified


def test_critpb_orthogonality_negative_control():
    with pytest.raises(SetupViolated) as err:
        glue.check_critpb(product_ring_cat(), ["a"], ["a"])
    assert "orthogonality" in str(err.value.detail)


def test_cover_diagram_and_iterated_holim():
    R = rm.IntMod(2)
    C = dg.ConcreteCat(R, {"K": _k(R)})
    I = dg.identity_functor(C)
    subsets = [{1}, {2}, {3}, {1, 2}, {1, 3}, {2, 3}, {1, 2, 3}]
    cats = {S(s): C for s in subsets}
    arrows = [({1}, {1, 2}), ({2}, {1, 2}), ({1}, {1, 3}), ({3}, {1, 3}), ({2}, {2, 3}), ({3}, {2, 3}),
              ({1, 2}, {1, 2, 3}), ({1, 3}, {1, 2, 3}), ({2, 3}, {1, 2, 3})]
    cd = glue.CoverDiagram(3, cats, {(S(a), S(b)): I for a, b in arrows})
    assert cd.check_functoriality() == []
    H = glue.iterated_holim(cd)
    assert dg.check_axioms(H).ok
    G = glue.canonical_functor(C, glue.canonical_functor(C, I, I, H.layers[0]), I, H)
    assert dg.is_quasi_equivalence(G, 1).status == "Verified"


def test_critpb_three_objects_orthogonal_pair():
    R = rm.IntMod(3)
    K, Z = _k(R), cx.Complex.zero(R)
    c = dg.ConcreteCat(R, {"0": (Z, Z), "a": (K, Z), "b": (Z, K)})
    rep = glue.check_critpb(c, ["a"], ["b"], bound=2)
    assert rep.verified and rep.pullback_objects >= 3
