"""A complex is built from graded pieces in three cones.

For a random complex A over Z/4 the witness produces two complexes with zero
differential, a map between them whose cone is homotopy equivalent to A, and
explicit certificates for every step.
"""
import numpy as np

from dgbench import cx
from dgbench import genwit as gw
from dgbench import ringmod as rm
from dgbench.cx import Complex


def main() -> None:
    R = rm.IntMod(4)
    A = Complex(R, {0: rm.FpModule.free(R, 1), 1: rm.FpModule.free(R, 2), 2: rm.FpModule.free(R, 1)},
                {0: rm.mat(R, [[2], [0]]), 1: rm.mat(R, [[0, 2]])})
    print("H^n(A):", {n: cx.cohomology(A, n).iso_type() for n in range(3)})
    w = gw.three_step_witness(A)
    print("certificates:", w.check())
    print("cone homotopy equivalent to A:", w.heq_to_a().ok)


if __name__ == "__main__":
    main()
