"""Random bounded complexes and small categories for property tests."""
from __future__ import annotations

import numpy as np

from dgbench import cx
from dgbench import dgcore as dg
from dgbench import ringmod as rm
from dgbench.cx import Complex

RINGS = {
    "F2": rm.IntMod(2),
    "F3": rm.IntMod(3),
    "Z4": rm.IntMod(4),
    "Z": rm.Int(),
}


def _invariant_choices(ring) -> list:
    if ring.kind == "IntMod" and not ring.is_field:
        return [0, 2]          # free rank 1 or Z/2
    if ring.kind == "Int":
        return [0, 2, 3]
    return [0]


def _piece(ring, rng):
    """(degree offset, [modules], [matrices]) of a one- or two-term complex."""
    choices = _invariant_choices(ring)
    a = choices[int(rng.integers(len(choices)))]
    if rng.random() < 0.4:
        return [a], []
    b = choices[int(rng.integers(len(choices)))]
    # multiplication by c is well defined R/a → R/b iff b | c·a
    cands = [c for c in range(0, 4) if _ok(ring, a, b, c)]
    c = cands[int(rng.integers(len(cands)))]
    return [a, b], [c]


def _ok(ring, a, b, c) -> bool:
    M, N = rm.FpModule.diag(ring, [a]), rm.FpModule.diag(ring, [b])
    return rm.ModMap(M, N, rm.mat(ring, [[c]])).is_well_defined()


def _module(ring, invs):
    return rm.FpModule.diag(ring, invs) if invs else rm.FpModule.zero(ring)


def _mix(ring, M: rm.FpModule, rng, rounds: int = 3) -> tuple[np.ndarray, np.ndarray]:
    """A random automorphism g of M and its inverse, from elementary moves."""
    r = M.r
    g, gi = rm.identity(ring, r), rm.identity(ring, r)
    for _ in range(rounds if r > 1 else 0):
        j, k = (int(x) for x in rng.choice(r, 2, replace=False))
        c = int(rng.integers(1, 3))
        E = rm.identity(ring, r)
        E[k, j] = ring.reduce(c)
        Ei = rm.identity(ring, r)
        Ei[k, j] = ring.reduce(-c)
        if rm.ModMap(M, M, E).is_well_defined() and rm.ModMap(M, M, Ei).is_well_defined():
            g, gi = rm.mmul(ring, E, g), rm.mmul(ring, gi, Ei)
    return g, gi


def random_complex(ring, rng, length: int = 4, max_gens: int = 2, lo: int | None = None) -> Complex:
    """Direct sums of one- and two-term pieces, mixed by random automorphisms.

    Every term has at most ``max_gens`` generators; the support lies in
    [lo, lo + length - 1].
    """
    if lo is None:
        lo = int(rng.integers(-2, 1))
    invs = {i: [] for i in range(lo, lo + length)}
    entries = []          # (degree, source index, target index, scalar)
    for _ in range(int(rng.integers(1, length + 2))):
        mods, maps = _piece(ring, rng)
        i = lo + int(rng.integers(0, length - len(mods) + 1))
        if any(len(invs[i + t]) >= max_gens for t in range(len(mods))):
            continue
        pos = []
        for t, d in enumerate(mods):
            invs[i + t].append(d)
            pos.append(len(invs[i + t]) - 1)
        if maps:
            entries.append((i, pos[0], pos[1], maps[0]))
    terms = {i: _module(ring, v) for i, v in invs.items()}
    diffs = {}
    for i, s, t, c in entries:
        m = diffs.setdefault(i, rm.zeros(ring, terms[i + 1].r, terms[i].r))
        m[t, s] = ring.reduce(c)
    base = Complex(ring, terms, diffs)
    if not base.terms:
        return base
    autos = {i: _mix(ring, base.term(i), rng) for i in base.degrees}
    mixed = {}
    for i, m in base.diffs.items():
        g_next, _ = autos[i + 1]
        _, gi = autos[i]
        mixed[i] = rm.mmul(ring, rm.mmul(ring, g_next, m), gi)
    return Complex(ring, base.terms, mixed)


def random_concrete(ring, rng, n_objects: int = 2, parts: int = 1, length: int = 3) -> dg.ConcreteCat:
    objs = {}
    for k in range(n_objects):
        objs[f"X{k}"] = tuple(random_complex(ring, rng, length=length, max_gens=1) for _ in range(parts))
    return dg.ConcreteCat(ring, objs, name=f"rand-{ring}")


def eventually_constant_sequence(ring, rng, N: int = 3) -> cx.InverseSequence:
    """A_1 ← ... ← A_N followed by identities; earlier maps are zero or
    split projections A_{k+1} = X ⊕ E_{k+1} → X ⊕ E_k."""
    X = random_complex(ring, rng, length=3)
    comps, maps = [], []
    mode = "sum" if rng.random() < 0.6 else "zero"
    for k in range(N):
        if k == N - 1:
            comps.append(X)
        elif mode == "sum":
            E = random_complex(ring, rng, length=3)
            comps.append(cx.direct_sum([X, E], ring).complex)
        else:
            comps.append(random_complex(ring, rng, length=3))
    for k in range(N - 1):
        src, tgt = comps[k + 1], comps[k]
        if mode == "zero":
            maps.append(cx.ChainMap.zero(src, tgt))
            continue
        # identity on the X summand, zero elsewhere
        comp = {}
        for i in set(src.terms) | set(tgt.terms):
            m = rm.zeros(ring, tgt.term(i).r, src.term(i).r)
            r = X.term(i).r
            if r:
                m[:r, :r] = rm.identity(ring, r)
            comp[i] = m
        maps.append(cx.ChainMap(src, tgt, comp))
    return cx.InverseSequence(comps, maps, "constant")


def random_pullback_pair(ring, rng, n_objects: int = 2):
    """Two functors with a common target, built from random product-backed categories."""
    from dgbench import glue
    c = random_concrete(ring, rng, n_objects=n_objects, parts=2, length=2)
    mode = int(rng.integers(3))
    if mode == 0:
        I = dg.identity_functor(c)
        return I, I
    T, P = glue.part_projection(c, {0}, "T")
    if mode == 1:
        return P, dg.identity_functor(T)
    return P, P
