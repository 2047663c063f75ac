"""Drinfeld quotient of a product category against the Verdier-side oracle.

The category has objects X = (k, k), D = (k, 0) and E = (0, k[1]) over F_3.
Killing D leaves only the second factor, so Hom^0(X, X) in the quotient is
one-dimensional and Hom^0(X, E) vanishes. At word cap 0 the contracting
morphisms are missing, the result is not certified Exact, and for (X, X) the
capped value overshoots the true dimension.
"""
from dgbench import cx
from dgbench import dgcore as dg
from dgbench import quot
from dgbench import ringmod as rm


def main() -> None:
    R = rm.IntMod(3)
    K, Z = cx.Complex(R, {0: rm.FpModule.free(R, 1)}), cx.Complex.zero(R)
    c = dg.ConcreteCat(R, {"X": (K, K), "D": (K, Z), "E": (Z, cx.shift(K, 1))})
    for cap in (1, 0):
        q = quot.drinfeld_quotient(c, ["D"], cap, "track-as-unknown")
        for x, y in (("X", "X"), ("X", "E")):
            res = quot.quotient_hom_cohomology(q, x, y, 0)
            v = quot.verdier_h0_oracle(c, ["D"], x, y)
            print(f"cap {cap} H^0({x}, {y}): dim {len(res.module.nu)} [{res.certificate}], oracle dim {v.dim}")
    q = quot.drinfeld_quotient(c, list(c.objects), 1, "reject")
    print("killing every object: d(f_X) = id_X holds:", q.eq(q.d(q.f("X")), q.unit("X")))


if __name__ == "__main__":
    main()
