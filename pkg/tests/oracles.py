"""Brute-force oracles over finite rings, independent of the package's algebra."""
from __future__ import annotations

import itertools
from math import gcd

import numpy as np


def ring_elements(ring) -> list:
    return list(ring.elements())


def span(ring, cols: list[tuple]) -> set:
    """R-linear span of column vectors by closure."""
    r = len(cols[0]) if cols else 0
    elems = ring_elements(ring)
    seen = {tuple([0] * r)} if r else {()}
    frontier = list(seen)
    while frontier:
        nxt = []
        for v in frontier:
            for c in cols:
                for a in elems:
                    w = tuple(ring.reduce(x + a * y) for x, y in zip(v, c))
                    if w not in seen:
                        seen.add(w)
                        nxt.append(w)
        frontier = nxt
    return seen


def vectors(ring, r: int):
    for v in itertools.product(ring_elements(ring), repeat=r):
        yield tuple(v)


def relation_columns(M) -> list[tuple]:
    rel = M.rel
    return [tuple(rel[:, j]) for j in range(rel.shape[1])]


def module_size(M) -> int:
    """|R^r / span(relations)|."""
    S = span(M.ring, relation_columns(M))
    return len(list(vectors(M.ring, M.r))) // len(S)


def _apply(ring, m: np.ndarray, v: tuple) -> tuple:
    return tuple(ring.reduce(sum(m[i, j] * v[j] for j in range(len(v)))) for i in range(m.shape[0]))


def cohomology_size(c, n: int) -> int:
    """|ker d^n / im d^{n-1}| by enumeration of chains."""
    ring = c.ring
    M = c.term(n)
    if M.r == 0:
        return 1
    rel = set(span(ring, relation_columns(M)))
    Mn1 = c.term(n + 1)
    rel1 = set(span(ring, relation_columns(Mn1))) if Mn1.r else {()}
    d = c.dmat(n)
    cycles = [v for v in vectors(ring, M.r) if Mn1.r == 0 or _apply(ring, d, v) in rel1]
    prev = c.term(n - 1)
    dp = c.dmat(n - 1)
    bcols = [tuple(dp[:, j]) for j in range(prev.r)] + [tuple(x) for x in rel]
    bounds = span(ring, bcols) if bcols else {tuple([0] * M.r)}
    # cycles form a union of cosets of the boundary subgroup
    return len(cycles) // len(bounds)


def killed_by(M, k: int) -> int:
    """Number of elements x of M with k·x = 0."""
    ring = M.ring
    rel = span(ring, relation_columns(M))
    reps = {}
    for v in vectors(ring, M.r):
        key = min(tuple(ring.reduce(a + b) for a, b in zip(v, s)) for s in rel)
        reps[key] = v
    return sum(1 for v in reps.values() if tuple(ring.reduce(k * a) for a in v) in rel)


def determinantal_divisors(m: list[list[int]]) -> list[int]:
    """gcd of all k×k minors, k = 1..min(shape)."""
    rows, cols = len(m), len(m[0]) if m else 0
    out = []
    for k in range(1, min(rows, cols) + 1):
        g = 0
        for rs in itertools.combinations(range(rows), k):
            for cs in itertools.combinations(range(cols), k):
                sub = [[m[i][j] for j in cs] for i in rs]
                g = gcd(g, _det(sub))
        out.append(g)
    return out


def _det(a: list[list[int]]) -> int:
    n = len(a)
    if n == 1:
        return a[0][0]
    return sum((-1) ** j * a[0][j] * _det([row[:j] + row[j + 1:] for row in a[1:]]) for j in range(n))


def interior_end_h0_size(p: int, W: int, margin: int) -> int:
    """|H^0| of degree-0 endomorphisms of the periodic window complex on interior slots.

    The complex is R in degrees 0..W-1 with d = q, R = Z/p² (q = p) or
    F_p[ε] (q = ε); R is modelled as pairs (a0, a1) meaning a0 + a1·q with
    a0, a1 ∈ F_p.  A degree-0 map is a sequence (f_i); it is a cycle on the
    interior when f_{i+1} q = q f_i for margin-1 ≤ i ≤ W-margin-1 (and its
    boundary part is h ↦ d h + h d).  Counting is done by dynamic programming
    over the chain condition; boundaries lie in qR, where the pair model
    has no carries, and are closed up additively.
    """
    lo, hi = margin, W - 1 - margin
    elems = [(a, b) for a in range(p) for b in range(p)]

    def mul(x, y):
        # (a0 + a1 q)(b0 + b1 q) = a0 b0 + (a0 b1 + a1 b0) q, q² = 0 in both rings
        return ((x[0] * y[0]) % p, (x[0] * y[1] + x[1] * y[0]) % p)

    q = (0, 1)
    # cycle condition between consecutive slots i, i+1 uses only q·f_i = f_{i+1}·q
    # i.e. the constant terms agree; slots outside [lo, hi] adjacent to it are free
    count = {e: 1 for e in elems}
    for _ in range(lo, hi):
        new = {e: 0 for e in elems}
        for e, c in count.items():
            for e2 in elems:
                if mul(q, e) == mul(e2, q):
                    new[e2] += c
        count = new
    cycles = sum(count.values())
    # boundaries restricted to [lo, hi]: f_i = q h_i + h_{i+1} q, an additive subgroup
    zero = tuple((0, 0) for _ in range(lo, hi + 1))
    gens = []
    for t in range(hi - lo + 2):
        for e in ((1, 0), (0, 1)):
            hs = [(0, 0)] * (hi - lo + 2)
            hs[t] = e
            gens.append(tuple(tuple((a + b) % p for a, b in zip(mul(q, hs[s]), mul(hs[s + 1], q)))
                              for s in range(hi - lo + 1)))
    bset, frontier = {zero}, [zero]
    while frontier:
        nxt = []
        for v in frontier:
            for g in gens:
                w = tuple(tuple((a + b) % p for a, b in zip(x, y)) for x, y in zip(v, g))
                if w not in bset:
                    bset.add(w)
                    nxt.append(w)
        frontier = nxt
    return cycles // len(bset)
