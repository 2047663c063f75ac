"""Homotopy pullbacks of dg categories and iterated limits over small covers.

Objects of the pullback along F1: C1 → D ← C2: F2 are triples (c1, c2, f) with
f: F1(c1) → F2(c2) closed of degree 0 and invertible in H^0(D).  A degree-n
morphism is (a1, a2, h) with h of degree n-1 in D, and

    d(a1, a2, h)  = (d a1, d a2, d h + (-1)^n (f' F1(a1) - F2(a2) f))
    (a1', a2', h') ∘ (a1, a2, h) = (a1' a1, a2' a2, F2(a2') h + (-1)^n h' F1(a1))

with n the degree of the right-hand factor.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Hashable, Sequence

from . import cx
from . import ringmod as rm
from .cx import ChainMap, Complex
from .dgcore import (ConcreteCat, DgCat, DgFunctor, Mor, QEResult, compose_functors, find_h0_iso, h0,
                     invert_in_h0, is_quasi_equivalence)
from .errors import (NoEquivalenceFound, SetupViolated, ShapeMismatch, SquareNotStrictlyCommutative,
                     UnsupportedCoverSize)
from .ringmod import FpModule
from . import quot


def _sign(k: int) -> int:
    return -1 if k % 2 else 1


@dataclass(frozen=True)
class PbObject:
    c1: Hashable
    c2: Hashable
    f: Mor

    def __repr__(self):
        return f"({self.c1}, {self.c2}, f={list(self.f.vec)})"


@dataclass(frozen=True)
class PbMorphism:
    a1: Mor
    a2: Mor
    h: Mor


class PullbackCat(DgCat):
    def __init__(self, F1: DgFunctor, F2: DgFunctor, max_per_pair: int = 64, iso_limit: int = 4096,
                 name: str | None = None):
        if F1.target is not F2.target:
            raise ShapeMismatch("pullback needs a shared target category")
        self.F1, self.F2 = F1, F2
        self.C1, self.C2, self.D = F1.source, F2.source, F1.target
        super().__init__(self.D.ring, [])
        self.name = name or f"{self.C1.name}×h{self.C2.name}"
        self.certs: dict = {}
        self.absent: list = []
        for c1 in self.C1.objects:
            for c2 in self.C2.objects:
                found = self.equivalences(c1, c2, max_per_pair, iso_limit)
                if not found:
                    self.absent.append((c1, c2))
                for f in found:
                    self.objects.append(PbObject(c1, c2, f))

    def equivalences(self, c1, c2, limit=64, iso_limit=4096) -> list[Mor]:
        """One closed representative per H^0 class that is an isomorphism."""
        D = self.D
        a, b = self.F1.obj(c1), self.F2.obj(c2)
        H = h0(D)
        mod = H.hom(a, b)
        out = []
        if mod.is_zero():
            z = D.zero(a, b, 0)
            cert = invert_in_h0(D, z)
            if cert is not None:
                self.certs[(c1, c2, z)] = cert
                out.append(z)
            return out
        card = mod.cardinality()
        if card is None or card > iso_limit:
            return out
        for cls in mod.elements():
            u = H.rep(a, b, cls)
            cert = invert_in_h0(D, u)
            if cert is not None:
                self.certs[(c1, c2, u)] = cert
                out.append(u)
                if len(out) >= limit:
                    break
        return out

    def require(self, c1, c2) -> PbObject:
        """First listed object over (c1, c2), or NoEquivalenceFound."""
        for o in self.objects:
            if o.c1 == c1 and o.c2 == c2:
                return o
        raise NoEquivalenceFound(f"no homotopy equivalence F1({c1}) → F2({c2})")

    def admit(self, o: PbObject) -> PbObject:
        """Validate an object built elsewhere (e.g. by a functor) and certify f."""
        key = (o.c1, o.c2, o.f)
        if key not in self.certs:
            cert = invert_in_h0(self.D, o.f) if self.D.is_closed(o.f) else None
            if cert is None:
                raise NoEquivalenceFound(f"{o.f} is not a homotopy equivalence")
            self.certs[key] = cert
        return o

    def certificate(self, o: PbObject):
        return self.admit(o) and self.certs[(o.c1, o.c2, o.f)]

    # hom complexes: C1(c1,c1')^n ⊕ C2(c2,c2')^n ⊕ D(F1 c1, F2 c2')^{n-1}
    def _parts(self, o, o2):
        return (self.C1.hom(o.c1, o2.c1), self.C2.hom(o.c2, o2.c2),
                self.D.hom(self.F1.obj(o.c1), self.F2.obj(o2.c2)))

    def _split(self, o, o2, n, vec):
        h1, h2, hd = self._parts(o, o2)
        r1, r2 = h1.term(n).r, h2.term(n).r
        a1 = self.C1.mor(o.c1, o2.c1, n, vec[:r1])
        a2 = self.C2.mor(o.c2, o2.c2, n, vec[r1:r1 + r2])
        h = self.D.mor(self.F1.obj(o.c1), self.F2.obj(o2.c2), n - 1, vec[r1 + r2:])
        return a1, a2, h

    def split(self, m: Mor) -> PbMorphism:
        return PbMorphism(*self._split(m.src, m.tgt, m.deg, list(m.vec)))

    def join(self, o, o2, a1: Mor, a2: Mor, h: Mor) -> Mor:
        n = a1.deg
        if a2.deg != n or h.deg != n - 1:
            raise ShapeMismatch("component degrees do not match")
        return self.mor(o, o2, n, list(a1.vec) + list(a2.vec) + list(h.vec))

    def _hom(self, o, o2):
        for x in (o, o2):
            if x not in self.objects:
                self.admit(x)
        h1, h2, hd = self._parts(o, o2)
        degs = set(h1.terms) | set(h2.terms) | {n + 1 for n in hd.terms}
        terms = {}
        for n in sorted(degs):
            ds = list(h1.term(n)._diag or []) + list(h2.term(n)._diag or []) + list(hd.term(n - 1)._diag or [])
            if ds:
                terms[n] = FpModule.diag(self.ring, ds)
        h = Complex(self.ring, terms, {})
        self._homs[(o, o2)] = h
        for n in terms:
            if n + 1 in terms:
                r = terms[n].r
                mat = rm.zeros(self.ring, terms[n + 1].r, r)
                for i in range(r):
                    e = [0] * r
                    e[i] = 1
                    mat[:, i] = self._d(o, o2, n, e)
                h.diffs[n] = rm.reduce_mat(self.ring, mat)
        return h

    def _d(self, o, o2, n, vec):
        C1, C2, D, F1, F2 = self.C1, self.C2, self.D, self.F1, self.F2
        a1, a2, h = self._split(o, o2, n, vec)
        t = D.d(h)
        corr = D.sub(D.compose(o2.f, F1(a1)), D.compose(F2(a2), o.f))
        t = D.add(t, D.scale(_sign(n), corr))
        return list(C1.d(a1).vec) + list(C2.d(a2).vec) + list(t.vec)

    def _compose(self, o, o2, o3, p, gv, q, fv):
        D, F1, F2 = self.D, self.F1, self.F2
        b1, b2, k = self._split(o2, o3, p, list(gv))
        a1, a2, h = self._split(o, o2, q, list(fv))
        c1 = self.C1.compose(b1, a1)
        c2 = self.C2.compose(b2, a2)
        hh = D.add(D.compose(F2(b2), h), D.scale(_sign(q), D.compose(k, F1(a1))))
        return list(c1.vec) + list(c2.vec) + list(hh.vec)

    def _unit(self, o):
        u1, u2 = self.C1.unit(o.c1), self.C2.unit(o.c2)
        z = self.D.zero(self.F1.obj(o.c1), self.F2.obj(o.c2), -1)
        return list(u1.vec) + list(u2.vec) + list(z.vec)

    def projection(self, i: int) -> DgFunctor:
        tgt = self.C1 if i == 1 else self.C2

        def obj(o):
            return o.c1 if i == 1 else o.c2

        def mor(m):
            pm = self.split(m)
            return pm.a1 if i == 1 else pm.a2

        return DgFunctor(self, tgt, obj, mor, f"p{i}")


def homotopy_pullback(F1: DgFunctor, F2: DgFunctor, **kw) -> PullbackCat:
    return PullbackCat(F1, F2, **kw)


def _check_square(c: DgCat, G1: DgFunctor, G2: DgFunctor, F1: DgFunctor, F2: DgFunctor):
    D = F1.target
    for x in c.objects:
        if F1.obj(G1.obj(x)) != F2.obj(G2.obj(x)):
            raise SquareNotStrictlyCommutative(f"objects disagree at {x}")
    for x in c.objects:
        for y in c.objects:
            for n in c.degrees(x, y):
                for b in c.basis(x, y, n):
                    if not D.eq(F1(G1(b)), F2(G2(b))):
                        raise SquareNotStrictlyCommutative(f"morphisms disagree on hom({x},{y})^{n}")


def canonical_functor(c: DgCat, G1: DgFunctor, G2: DgFunctor, pb: PullbackCat, check: bool = True) -> DgFunctor:
    """C → C1 ×h C2 sending X to (G1 X, G2 X, id) and a to (G1 a, G2 a, 0)."""
    F1, F2 = pb.F1, pb.F2
    if check:
        _check_square(c, G1, G2, F1, F2)
    D = pb.D

    def obj(x):
        o = PbObject(G1.obj(x), G2.obj(x), D.unit(F1.obj(G1.obj(x))))
        return pb.admit(o)

    def mor(m):
        a, b = obj(m.src), obj(m.tgt)
        g1, g2 = G1(m), G2(m)
        z = D.zero(F1.obj(a.c1), F2.obj(b.c2), m.deg - 1)
        return pb.join(a, b, g1, g2, z)

    return DgFunctor(c, pb, obj, mor, "canonical")


def pullback_functor(phi1: DgFunctor, phi2: DgFunctor, psi: DgFunctor, src: PullbackCat,
                     tgt: PullbackCat) -> DgFunctor:
    """Induced functor between pullbacks from a strictly commuting map of cospans."""

    def obj(o):
        return tgt.admit(PbObject(phi1.obj(o.c1), phi2.obj(o.c2), psi(o.f)))

    def mor(m):
        pm = src.split(m)
        return tgt.join(obj(m.src), obj(m.tgt), phi1(pm.a1), phi2(pm.a2), psi(pm.h))

    return DgFunctor(src, tgt, obj, mor, "induced")


# ---------------------------------------------------------------------------
# cover diagrams

class CoverDiagram:
    """Categories C_I for nonempty I ⊆ {1..n} with functors C_I → C_J for I ⊂ J.

    ``functors`` may list only the covering inclusions (|J| = |I| + 1); other
    composites are derived, and strict functoriality is checked.
    """

    def __init__(self, n: int, cats: dict, functors: dict):
        if n < 1 or n > 3:
            raise UnsupportedCoverSize(f"covers with {n} pieces are not supported (n ≤ 3)")
        self.n = n
        self.cats = {frozenset(k): v for k, v in cats.items()}
        self.functors = {(frozenset(a), frozenset(b)): f for (a, b), f in functors.items()}
        for I in self.subsets():
            if I not in self.cats:
                raise ShapeMismatch(f"missing category for {sorted(I)}")

    def subsets(self):
        N = range(1, self.n + 1)
        return [frozenset(s) for k in range(1, self.n + 1) for s in itertools.combinations(N, k)]

    def functor(self, I, J) -> DgFunctor:
        I, J = frozenset(I), frozenset(J)
        if (I, J) in self.functors:
            return self.functors[(I, J)]
        if not I < J:
            raise ShapeMismatch(f"no functor {sorted(I)} → {sorted(J)}")
        k = min(J - I)
        mid = I | {k}
        f = compose_functors(self.functor(mid, J), self.functor(I, mid))
        self.functors[(I, J)] = f
        return f

    def check_functoriality(self) -> list:
        bad = []
        for I in self.subsets():
            for J in self.subsets():
                if not I < J or len(J) - len(I) < 2:
                    continue
                for k in J - I:
                    mid = I | {k}
                    a = compose_functors(self.functor(mid, J), self.functor(I, mid))
                    d = self.functor(I, J)
                    src = self.cats[I]
                    for x in src.objects:
                        if a.obj(x) != d.obj(x):
                            bad.append((tuple(sorted(I)), tuple(sorted(J)), x))
                    for x, y in itertools.product(src.objects, repeat=2):
                        for n in src.degrees(x, y):
                            for b in src.basis(x, y, n):
                                if not self.cats[J].eq(a(b), d(b)):
                                    bad.append((tuple(sorted(I)), tuple(sorted(J)), x, y, n))
        return bad


ASSOCIATION_ORDER = "C' = C_1 ×h_{C_12} C_2 and C'' = C_13 ×h_{C_123} C_23; result C' ×h_{C''} C_3"


def iterated_holim(cd: CoverDiagram, **kw) -> DgCat:
    """Homotopy limit over nonempty subsets, assembled from pullbacks."""
    if cd.n == 1:
        return cd.cats[frozenset({1})]
    S = frozenset
    if cd.n == 2:
        return homotopy_pullback(cd.functor({1}, {1, 2}), cd.functor({2}, {1, 2}), **kw)
    Cp = homotopy_pullback(cd.functor({1}, {1, 2}), cd.functor({2}, {1, 2}), **kw)
    Cpp = homotopy_pullback(cd.functor({1, 3}, {1, 2, 3}), cd.functor({2, 3}, {1, 2, 3}), **kw)
    Q1 = pullback_functor(cd.functor({1}, {1, 3}), cd.functor({2}, {2, 3}), cd.functor({1, 2}, {1, 2, 3}), Cp, Cpp)
    Q2 = canonical_functor(cd.cats[S({3})], cd.functor({3}, {1, 3}), cd.functor({3}, {2, 3}), Cpp)
    out = homotopy_pullback(Q1, Q2, **kw)
    out.association = ASSOCIATION_ORDER
    out.layers = (Cp, Cpp)
    return out


# ---------------------------------------------------------------------------
# quotient backends over products of abelian backends

def part_projection(c: ConcreteCat, keep: set, label: str) -> tuple[ConcreteCat, DgFunctor]:
    """The concrete category of the same objects with components outside
    ``keep`` replaced by zero, together with the projection functor."""
    zero = cx.Complex.zero(c.backend)
    objs = {x: tuple(p if k in keep else zero for k, p in enumerate(c.cx[x])) for x in c.objects}
    tgt = ConcreteCat(c.backend, objs, label)
    return tgt, _projection_functor(c, tgt, keep)


def _projection_functor(src: ConcreteCat, tgt: ConcreteCat, keep: set) -> DgFunctor:
    def mor(m):
        maps = src.as_maps(m)
        out = []
        for k, f in enumerate(maps):
            if k in keep:
                out.append(ChainMap(tgt.cx[m.src][k], tgt.cx[m.tgt][k], f.comps, f.degree))
            else:
                out.append(ChainMap.zero(tgt.cx[m.src][k], tgt.cx[m.tgt][k], f.degree))
        return tgt.join(m.src, m.tgt, out)

    return DgFunctor(src, tgt, lambda x: x, mor, f"proj{sorted(keep)}")


def support(c: ConcreteCat, objs) -> set:
    return {k for x in objs for k, p in enumerate(c.cx[x]) if not cx.is_acyclic(p)}


@dataclass
class Square:
    C1: DgCat
    C2: DgCat
    C12: DgCat
    Q1: DgFunctor
    Q2: DgFunctor
    Qb1: DgFunctor
    Qb2: DgFunctor
    backend: str


def build_square(c: ConcreteCat, D1, D2, backend: str = "factor-projection") -> Square:
    if backend == "identity":
        from .dgcore import identity_functor
        i = identity_functor(c)
        return Square(c, c, c, i, i, i, i, backend)
    if backend != "factor-projection":
        raise ValueError(f"unknown quotient backend {backend!r}")
    parts = set(range(c.parts))
    s1, s2 = support(c, D1), support(c, D2)
    C1, Q1 = part_projection(c, parts - s1, "C/D1")
    C2, Q2 = part_projection(c, parts - s2, "C/D2")
    C12, _ = part_projection(c, parts - s1 - s2, "C/D12")
    Qb1 = _projection_functor(C1, C12, parts - s1 - s2)
    Qb2 = _projection_functor(C2, C12, parts - s1 - s2)
    return Square(C1, C2, C12, Q1, Q2, Qb1, Qb2, backend)


@dataclass
class CritPbReport:
    setup: dict
    qff: dict = field(default_factory=dict)
    surjectivity: str | None = None
    result: QEResult | None = None
    pullback_objects: int = 0

    @property
    def verified(self) -> bool:
        return self.result is not None and self.result.status == "Verified"


def _orthogonal(c: DgCat, A, B) -> tuple | None:
    for a in A:
        for b in B:
            h = c.hom(a, b)
            for n in h.degrees:
                if not cx.cohomology(h, n).is_zero():
                    return (a, b, n)
    return None


def _h0_map_data(F: DgFunctor, x, y):
    """(dim of H^0 target, rank of H^0(F) on hom(x,y))."""
    f = F.hom_map(x, y)
    hs, ht = cx.cohomology_data(f.source, 0), cx.cohomology_data(f.target, 0)
    dim = len(ht.module.nu)
    if not hs.module.r or not ht.module.r:
        return dim, 0
    m = cx.induced_map(f, 0, hs, ht)
    return dim, len(rm.submodule(ht.module, m)[0].nu)


def _quotient_identification(c: ConcreteCat, F: DgFunctor, dset, bound) -> tuple | None:
    for x in c.objects:
        for y in c.objects:
            v = quot.verdier_h0_oracle(c, dset, x, y, bound)
            if v.status != "Ok":
                return (x, y, "oracle inconclusive")
            dim, rank = _h0_map_data(F, x, y)
            if (dim, rank) != (v.dim, v.rank_from_ambient):
                return (x, y, f"H^0 dim/rank {(dim, rank)} vs quotient {(v.dim, v.rank_from_ambient)}")
    return None


def check_critpb(c: ConcreteCat, D1: Sequence, D2: Sequence, backend: str = "factor-projection",
                 bound: int = 1, oracle_bound: int = 6) -> CritPbReport:
    """Verify the setup, then test that C → C_{D1} ×h_{C_{D1,D2}} C_{D2} is a quasi-equivalence."""
    D1, D2 = list(D1), list(D2)
    if not c.ring.is_field:
        raise SetupViolated("the quotient comparison runs over a field base only")
    setup = {}
    # shifts: orthogonality is tested in every degree, which covers all shifts
    for i, j, A, B in ((1, 2, D1, D2), (2, 1, D2, D1)):
        w = _orthogonal(c, A, B)
        if w is not None:
            raise SetupViolated(f"orthogonality: H^{w[2]} hom({w[0]}, {w[1]}) ≠ 0 (D{i} → D{j})")
    setup["orthogonality"] = "ok"
    sq = build_square(c, D1, D2, backend)
    bad = _quotient_identification(c, sq.Q1, D1, oracle_bound)
    if bad:
        raise SetupViolated(f"quotient identification for D1 fails at {bad}")
    bad = _quotient_identification(c, sq.Q2, D2, oracle_bound)
    if bad:
        raise SetupViolated(f"quotient identification for D2 fails at {bad}")
    bad = _quotient_identification(c, compose_functors(sq.Qb1, sq.Q1), D1 + D2, oracle_bound)
    if bad:
        raise SetupViolated(f"quotient identification for D1 ∪ D2 fails at {bad}")
    try:
        _check_square(c, sq.Q1, sq.Q2, sq.Qb1, sq.Qb2)
    except SquareNotStrictlyCommutative as e:
        raise SetupViolated(f"square: {e}")
    setup["quotients"] = "ok"
    setup["backend"] = backend
    pb = homotopy_pullback(sq.Qb1, sq.Qb2)
    F = canonical_functor(c, sq.Q1, sq.Q2, pb, check=False)
    res = is_quasi_equivalence(F, bound)
    rep = CritPbReport(setup, pullback_objects=len(pb.objects), result=res)
    rep.qff = {"status": "failed" if res.status == "NotQuasiFullyFaithful" else "ok",
               "pair": res.pair if res.status == "NotQuasiFullyFaithful" else None}
    rep.surjectivity = res.status if res.status != "NotQuasiFullyFaithful" else "not run"
    rep.pullback = pb
    rep.functor = F
    return rep
