"""Two periodic complexes that cohomology alone cannot tell apart.

Over Z/p² and over F_p[x]/(x²) the complex R → R → R → ... with every
differential equal to multiplication by p (resp. x) is exact in the interior
of a finite window. Its endomorphism complex has interior H^0 ≅ F_p in both
cases, and p·id (resp. x·id) is null-homotopic. Matching numbers here are the
expected outcome; whether the two endomorphism dg algebras are
quasi-isomorphic is not decided by any of this.
"""
import sys

from dgbench import cx
from dgbench import ringmod as rm
from dgbench.cx import ChainMap, Complex


def periodic(ring, W, q):
    M = rm.FpModule.free(ring, 1)
    return Complex(ring, {i: M for i in range(W)}, {i: rm.mat(ring, [[q]]) for i in range(W - 1)})


def main(p: int = 2) -> None:
    for label, ring in (("Z/p^2", rm.IntMod(p * p)), ("F_p[x]/(x^2)", rm.DualNumbers(p))):
        q = p if ring.kind == "IntMod" else ring.parse_element("x")
        print(f"{label} with p = {p}")
        for W in (12, 14):
            A = periodic(ring, W, q)
            hc = cx.HomComplex(A, A)
            H = [cx.interior_cohomology(hc, n, A.lo + 3, A.hi - 3).iso_type() for n in range(-2, 3)]
            print(f"  window {W}: interior H^n(End) for n = -2..2 has invariant factors {H}")
        A = periodic(ring, 12, q)
        f = ChainMap.identity(A).scale(q)
        h = cx.solve_homotopy(f)
        print(f"  q·id null-homotopic: {h is not None and cx.homotopy_identity_holds(f, h)}")
        print(f"  id null-homotopic:   {cx.solve_homotopy(ChainMap.identity(A)) is not None}")


if __name__ == "__main__":
    main(int(sys.argv[1]) if len(sys.argv) > 1 else 2)
