"""Gluing a product category back together from its two factors.

k×k is modelled by objects that are pairs of complexes. Its two factor
subcategories are orthogonal, and the canonical functor into the homotopy
pullback of the two projections is checked to be a quasi-equivalence. Taking
the same subcategory twice violates orthogonality and is rejected up front.
"""
from dgbench import cx
from dgbench import dgcore as dg
from dgbench import glue
from dgbench import ringmod as rm
from dgbench.errors import SetupViolated


def main() -> None:
    R = rm.IntMod(2)
    K, Z = cx.Complex(R, {0: rm.FpModule.free(R, 1)}), cx.Complex.zero(R)
    K1 = cx.shift(K, 1)
    c = dg.ConcreteCat(R, {"0": (Z, Z), "a": (K, Z), "b": (Z, K), "ab": (K, K), "a1": (K1, Z), "b1": (Z, K1)})
    rep = glue.check_critpb(c, ["a", "a1"], ["b", "b1"], bound=2)
    print("factor subcategories:", rep.result.status, "with", rep.pullback_objects, "pullback objects")
    try:
        glue.check_critpb(c, ["a"], ["a"])
    except SetupViolated as e:
        print("same subcategory twice:", type(e).__name__, e.detail)


if __name__ == "__main__":
    main()
