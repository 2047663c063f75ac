"""Drinfeld quotients with a word-length cap, and a Verdier-side oracle.

A basis element of the quotient Hom from X to Y is a word

    g_m · f_{D_m} · g_{m-1} · … · f_{D_1} · g_0

with g_j a basis element of hom(P_j, P_{j+1}) (P_0 = X, P_{m+1} = Y, P_j = D_j
otherwise) and f_D the adjoined degree -1 contraction of D.  Words are stored
source-first as ``(path, degs, idx)`` with ``path = (D_1, …, D_m)`` and
``degs``/``idx`` listing the g factors g_0 … g_m.  Words are free: there is
no rewriting.  d(f_D) = id_D merges the two neighbouring factors.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from math import prod
from typing import Hashable, Sequence

import numpy as np

from . import cx
from . import ringmod as rm
from .cx import ChainMap, Complex
from .dgcore import ConcreteCat, DgCat, Mor, h0
from .errors import CapOverflow, CapOverflowPolicyRequired, ShapeMismatch, UnsupportedRing
from .ringmod import FpModule

POLICIES = ("reject", "track-as-unknown")


def _sign(k: int) -> int:
    return -1 if k % 2 else 1


class QuotientCat(DgCat):
    def __init__(self, c: DgCat, d_objs: Sequence, cap: int, policy: str | None = None):
        if cap < 0:
            raise ValueError("cap must be non-negative")
        missing = [x for x in d_objs if x not in c.objects]
        if missing:
            raise ShapeMismatch(f"subcategory objects {missing} are not objects of the ambient category")
        if policy is not None and policy not in POLICIES:
            raise ValueError(f"policy must be one of {POLICIES}")
        super().__init__(c.ring, c.objects)
        self.c = c
        self.dset = list(dict.fromkeys(d_objs))
        self.cap = cap
        self.policy = policy
        self.overflows: list = []
        self.name = f"{c.name}/{{{','.join(map(str, self.dset))}}}"
        self._index = {}
        self._jcache = {}

    # -- word bookkeeping
    def _factor(self, a, b):
        return self.c.hom(a, b)

    def _words(self, x, y, n):
        """Ordered word keys of degree n and their invariant factors."""
        key = (x, y, n)
        if key in self._index:
            return self._index[key]
        cover = self.ring.cover
        keys, ds = [], []
        for m in range(self.cap + 1):
            for path in itertools.product(self.dset, repeat=m):
                P = (x,) + path + (y,)
                homs = [self._factor(P[j], P[j + 1]) for j in range(m + 1)]
                if any(not h.terms for h in homs):
                    continue
                for degs in _degree_tuples([list(h.terms) for h in homs], n + m):
                    mods = [h.term(e) for h, e in zip(homs, degs)]
                    for idx in itertools.product(*[range(md.r) for md in mods]):
                        g = cover.zero
                        for md, i in zip(mods, idx):
                            g = rm.cover_gcd(cover, g, md._diag[i])
                        keys.append((path, degs, idx))
                        ds.append(g)
        pos = {k: i for i, k in enumerate(keys)}
        self._index[key] = (keys, ds, pos)
        return self._index[key]

    def _deg_bounds(self, x, y):
        lo, hi = None, None
        for m in range(self.cap + 1):
            for path in itertools.product(self.dset, repeat=m):
                P = (x,) + path + (y,)
                homs = [self._factor(P[j], P[j + 1]) for j in range(m + 1)]
                if any(not h.terms for h in homs):
                    continue
                a = sum(h.lo for h in homs) - m
                b = sum(h.hi for h in homs) - m
                lo = a if lo is None else min(lo, a)
                hi = b if hi is None else max(hi, b)
        return lo, hi

    def _hom(self, x, y):
        lo, hi = self._deg_bounds(x, y)
        terms = {}
        if lo is not None:
            for n in range(lo, hi + 1):
                keys, ds, _ = self._words(x, y, n)
                if keys:
                    terms[n] = FpModule.diag(self.ring, ds)
        h = Complex(self.ring, terms, {})
        for n in terms:
            if n + 1 in terms:
                r = terms[n].r
                m = rm.zeros(self.ring, terms[n + 1].r, r)
                keys = self._words(x, y, n)[0]
                for i, k in enumerate(keys):
                    m[:, i] = self._vec(x, y, n + 1, self._d_word(x, y, k))
                h.diffs[n] = rm.reduce_mat(self.ring, m)
        return h

    def _vec(self, x, y, n, sparse: dict) -> list:
        keys, ds, pos = self._words(x, y, n)
        out = [self.ring.cover.zero] * len(keys)
        for k, v in sparse.items():
            if v != 0:
                if k not in pos:
                    raise CapOverflow(f"word {k} lies outside the cap")
                out[pos[k]] = out[pos[k]] + v
        return out

    def sparse(self, m: Mor) -> dict:
        keys = self._words(m.src, m.tgt, m.deg)[0]
        return {keys[i]: v for i, v in enumerate(m.vec) if v != 0}

    def basis_lengths(self, x, y, n) -> list[int]:
        return [len(k[0]) for k in self._words(x, y, n)[0]]

    def word_length(self, m: Mor) -> int:
        return max((len(k[0]) for k in self.sparse(m)), default=0)

    def within_cap(self, *mors: Mor) -> bool:
        return sum(self.word_length(m) for m in mors) <= self.cap

    def _basis_mor(self, a, b, e, i) -> Mor:
        r = self._factor(a, b).term(e).r
        v = [self.ring.cover.zero] * r
        v[i] = self.ring.cover.one
        return Mor(a, b, e, tuple(v))

    def _d_word(self, x, y, k) -> dict:
        """Differential of one basis word, as a sparse combination."""
        path, degs, idx = k
        m = len(path)
        P = (x,) + path + (y,)
        c = self.c
        out: dict = {}
        # factors to the left of g_j (in composition order g_m … g_0)
        for j in range(m + 1):
            left = sum(degs[j + 1:]) - (m - j)
            g = self._basis_mor(P[j], P[j + 1], degs[j], idx[j])
            dg = c.d(g)
            s = _sign(left)
            for t, v in enumerate(dg.vec):
                if v != 0:
                    nk = (path, degs[:j] + (degs[j] + 1,) + degs[j + 1:], idx[:j] + (t,) + idx[j + 1:])
                    out[nk] = out.get(nk, 0) + s * v
        # d(f_{D_j}) = id between g_{j-1} and g_j, j = 1..m
        for j in range(1, m + 1):
            left = sum(degs[j:]) - (m - j)
            s = _sign(left)
            prod_ = self._junction(P[j - 1], P[j], P[j + 1], degs[j], idx[j], degs[j - 1], idx[j - 1])
            for t, v in enumerate(prod_):
                if v != 0:
                    nk = (path[:j - 1] + path[j:], degs[:j - 1] + (degs[j - 1] + degs[j],) + degs[j + 1:],
                          idx[:j - 1] + (t,) + idx[j + 1:])
                    out[nk] = out.get(nk, 0) + s * v
        return out

    def _junction(self, a, b, z, p, i, q, j):
        """Coordinates of (basis g ∈ hom(b,z)^p, index i) ∘ (basis f ∈ hom(a,b)^q, index j)."""
        key = (a, b, z, p, i, q, j)
        if key not in self._jcache:
            g = self._basis_mor(b, z, p, i)
            f = self._basis_mor(a, b, q, j)
            self._jcache[key] = self.c.compose(g, f).vec
        return self._jcache[key]

    def compose(self, g: Mor, f: Mor) -> Mor:
        # an empty target degree may still receive words beyond the cap, so the
        # overflow policy has to see every nonzero pair
        if f.tgt == g.src and any(v != 0 for v in g.vec) and any(v != 0 for v in f.vec):
            v = self._compose(f.src, f.tgt, g.tgt, g.deg, g.vec, f.deg, f.vec)
            return self.mor(f.src, g.tgt, g.deg + f.deg, v)
        return super().compose(g, f)

    def _compose(self, x, y, z, p, gv, q, fv):
        n = p + q
        gs = self.sparse(Mor(y, z, p, tuple(gv)))
        fs = self.sparse(Mor(x, y, q, tuple(fv)))
        out: dict = {}
        overflow = False
        for (gp, gd, gi), a in gs.items():
            for (fp, fd, fi), b in fs.items():
                if len(gp) + len(fp) > self.cap:
                    overflow = True
                    continue
                # junction: g_0 of the left word after g_m of the right word
                Pj = (fp[-1] if fp else x)
                jv = self._junction(Pj, y, gp[0] if gp else z, gd[0], gi[0], fd[-1], fi[-1])
                for t, v in enumerate(jv):
                    if v != 0:
                        nk = (fp + gp, fd[:-1] + (fd[-1] + gd[0],) + gd[1:], fi[:-1] + (t,) + gi[1:])
                        out[nk] = out.get(nk, 0) + a * b * v
        if overflow:
            if self.policy is None:
                raise CapOverflowPolicyRequired(
                    f"composite from {x} to {z} exceeds word length {self.cap}; set policy 'reject' or 'track-as-unknown'")
            if self.policy == "reject":
                raise CapOverflow(f"composite from {x} to {z} exceeds word length {self.cap}")
            self.overflows.append((x, y, z, n))
        return self._vec(x, z, n, out)

    def _unit(self, x):
        u = self.c.unit(x)
        return self._vec(x, x, 0, {((), (0,), (i,)): v for i, v in enumerate(u.vec) if v != 0})

    def embed(self, m: Mor) -> Mor:
        """The canonical functor on a morphism of the ambient category."""
        return self.mor(m.src, m.tgt, m.deg,
                        self._vec(m.src, m.tgt, m.deg, {((), (m.deg,), (i,)): v for i, v in enumerate(m.vec) if v != 0}))

    def f(self, dobj) -> Mor:
        """The adjoined contraction f_D as a degree -1 endomorphism."""
        u = self.c.unit(dobj)
        sparse = {((dobj,), (0, 0), (i, j)): a * b for i, a in enumerate(u.vec) if a != 0
                  for j, b in enumerate(u.vec) if b != 0}
        return self.mor(dobj, dobj, -1, self._vec(dobj, dobj, -1, sparse))


def _degree_tuples(options: list[list[int]], total: int):
    """Tuples (e_0..e_m) with e_j ∈ options[j] and sum = total."""
    if not options:
        if total == 0:
            yield ()
        return
    mins = [min(o) for o in options]
    maxs = [max(o) for o in options]

    def rec(j, rem):
        if j == len(options) - 1:
            if rem in options[j]:
                yield (rem,)
            return
        rest_lo, rest_hi = sum(mins[j + 1:]), sum(maxs[j + 1:])
        for e in options[j]:
            if rest_lo <= rem - e <= rest_hi:
                for tail in rec(j + 1, rem - e):
                    yield (e,) + tail

    yield from rec(0, total)


def drinfeld_quotient(c: DgCat, d_objs: Sequence, cap: int, policy: str | None = None) -> QuotientCat:
    return QuotientCat(c, d_objs, cap, policy)


# ---------------------------------------------------------------------------
# cohomology with a certificate

@dataclass
class QuotCohomology:
    module: FpModule
    certificate: str    # Exact | LowerBoundOnly
    reason: str
    comparison: str     # whether this is asserted to compute the Verdier hom


def _support(c: DgCat, xs, ys):
    lo = hi = None
    for a in xs:
        for b in ys:
            h = c.hom(a, b)
            if h.terms:
                lo = h.lo if lo is None else min(lo, h.lo)
                hi = h.hi if hi is None else max(hi, h.hi)
    return lo, hi


def _long_words_exist(q: QuotientCat, x, y, length: int) -> bool:
    """Is there a composable path X → D_1 → … → D_length → Y with nonzero homs?"""
    c = q.c
    reach = {d for d in q.dset if c.hom(x, d).terms}
    for _ in range(length - 1):
        reach = {e for e in q.dset if any(c.hom(d, e).terms for d in reach)}
        if not reach:
            return False
    return any(c.hom(d, y).terms for d in reach)


def _affine_hits(M: int, a: int, b: int, c: int) -> tuple[float, float]:
    """Integers m > M with a*m + b ≤ c, as an interval [lo, hi] (hi may be inf)."""
    inf = float("inf")
    if a == 0:
        return (M + 1, inf) if b <= c else (1, 0)
    if a > 0:
        return (M + 1, (c - b) // a)
    # a < 0: m ≥ ceil((b - c) / -a)
    return (max(M + 1, -((c - b) // -a)), inf)


def exactness_certificate(q: QuotientCat, x, y, n: int) -> tuple[bool, str]:
    if x in q.dset or y in q.dset:
        return True, "hom complex is contracted by composing with an adjoined contraction"
    if not _long_words_exist(q, x, y, q.cap + 1):
        return True, f"no words of length {q.cap + 1}"
    c = q.c
    lo_xd, hi_xd = _support(c, [x], q.dset)
    lo_dy, hi_dy = _support(c, q.dset, [y])
    lo_dd, hi_dd = _support(c, q.dset, q.dset)
    if lo_dd is None:
        # only single-letter words exist, so length > cap ≥ 1 cannot occur
        return q.cap >= 1, "no words longer than one letter"
    # degree of a length-m word lies in [L(m), U(m)]
    # L(m) = lo_xd + lo_dy - lo_dd + m (lo_dd - 1),  U(m) likewise with hi
    # a collision with [n-1, n+1] needs L(m) ≤ n+1 and U(m) ≥ n-1
    M = q.cap
    aL, bL = lo_dd - 1, lo_xd + lo_dy - lo_dd
    aU, bU = hi_dd - 1, hi_xd + hi_dy - hi_dd
    i1 = _affine_hits(M, aL, bL, n + 1)
    i2 = _affine_hits(M, -aU, -bU, -(n - 1))
    lo, hi = max(i1[0], i2[0]), min(i1[1], i2[1])
    if lo > hi:
        return True, "degree bounds keep longer words away from degrees n-1..n+1"
    return False, f"words of length {int(lo)} may reach degrees n-1..n+1"


def _h_flat(q: QuotientCat) -> bool:
    ring = q.ring
    if ring.is_field:
        return True
    s = ring.relation
    free = ring.cover.normal(s)[1] if s is not None else ring.cover.zero
    for x in q.c.objects:
        for y in q.c.objects:
            for mod in q.c.hom(x, y).terms.values():
                if any(d != free for d in mod._diag):
                    return False
    return True


def quotient_hom_cohomology(q: QuotientCat, x, y, n: int) -> QuotCohomology:
    exact, reason = exactness_certificate(q, x, y, n)
    if (x in q.dset or y in q.dset):
        mod = rm.FpModule.zero(q.ring)
    else:
        mod = cx.cohomology(q.hom(x, y), n)
    comp = "asserted" if _h_flat(q) else "Drinfeld hom, comparison not asserted"
    return QuotCohomology(mod, "Exact" if exact else "LowerBoundOnly", reason, comp)


# ---------------------------------------------------------------------------
# Verdier side: orthogonal replacement over a field

@dataclass
class VerdierHom:
    status: str                    # Ok | Inconclusive
    dim: int | None = None
    module: FpModule | None = None
    rank_from_ambient: int | None = None   # rank of H^0(X,Y) → quotient hom
    side: str | None = None        # "local" or "colocal"
    steps: int | None = None


def _kill_from(c: ConcreteCat, dobjs, Y: tuple, local: bool):
    """One step: cone of the universal map from (local) or to (colocal) the D's.

    Returns (new tuple of complexes, comparison map Y → Y' per part) or None when
    Y is already (co)local.
    """
    backend = c.backend
    # one D object per step: killing a class twice (say from D and D[1])
    # would create fresh classes instead of removing them
    sources = []  # (D, part, degree, closed map)
    for d in dobjs:
        D = c.cx[d]
        parts_hom = [cx.HomComplex(Dp, Yp) if local else cx.HomComplex(Yp, Dp) for Dp, Yp in zip(D, Y)]
        for k, h in enumerate(parts_hom):
            for m in h.degrees:
                sq = cx.cohomology_data(h, m)
                for v in sq.basis():
                    sources.append((d, k, m, h.decode(m, v)))
        if sources:
            break
    if not sources:
        return None
    new, cmp = [], []
    for k in range(c.parts):
        Yk = Y[k]
        pieces, maps = [], []
        for d, part, m, f in sources:
            if part != k:
                continue
            Dk = c.cx[d][k]
            if local:
                # degree m map D → Y is a chain map D[-m] → Y
                pieces.append(cx.shift(Dk, -m))
            else:
                # degree m map Y → D is a chain map Y → D[m]
                pieces.append(cx.shift(Dk, m))
            maps.append(f)
        if not pieces:
            new.append(Yk)
            cmp.append(ChainMap.identity(Yk))
            continue
        S = cx.direct_sum(pieces, backend)
        if local:
            comps = {}
            for i in S.complex.degrees:
                mat_ = rm.zeros(backend, Yk.term(i).r, S.complex.term(i).r)
                for t, f in enumerate(maps):
                    comp = f.comp(i - f.degree)
                    if comp.size and Yk.term(i).r:
                        mat_[:, S.block(i, t)] = comp
                comps[i] = mat_
            u = ChainMap(S.complex, Yk, comps)
            cn = cx.cone(u)
            new.append(cn.complex)
            cmp.append(cn.to_cone)
        else:
            comps = {}
            for i in Yk.degrees:
                mat_ = rm.zeros(backend, S.complex.term(i).r, Yk.term(i).r)
                for t, f in enumerate(maps):
                    comp = f.comp(i)
                    if comp.size and S.complex.term(i).r:
                        mat_[S.block(i, t), :] = comp
                comps[i] = mat_
            u = ChainMap(Yk, S.complex, comps)
            cn = cx.cone(u)
            fib = cx.shift(cn.complex, -1)
            new.append(fib)
            # fibre → Y is the shifted projection cone → Y[1]
            cmp.append(cx.shift_map(cn.from_cone, -1))
        assert cmp[-1].is_closed()
    return tuple(new), cmp


def _orth(c: ConcreteCat, dobjs, Y: tuple, local: bool) -> bool:
    for d in dobjs:
        for Dp, Yp in zip(c.cx[d], Y):
            h = cx.HomComplex(Dp, Yp) if local else cx.HomComplex(Yp, Dp)
            if not cx.is_acyclic(h):
                return False
    return True


def orthogonal_replacement(c: ConcreteCat, dobjs, Y: tuple, local: bool, bound: int, max_rank: int = 48):
    """Iterate the universal cone until Y is (co)local, within ``bound`` steps
    and while the total rank stays below ``max_rank``.

    Returns (Y', comparison maps, steps) or None.
    """
    cur = tuple(Y)
    total = [ChainMap.identity(p) for p in cur]
    for step in range(bound + 1):
        if _orth(c, dobjs, cur, local):
            return cur, total, step
        if step == bound:
            break
        res = _kill_from(c, dobjs, cur, local)
        if res is None:
            return cur, total, step
        cur, maps = res
        if sum(p.total_rank() for p in cur) > max_rank:
            return None
        total = [m @ t for m, t in zip(maps, total)] if local else [t @ m for m, t in zip(maps, total)]
    return None


def verdier_h0_oracle(c: ConcreteCat, d_objs: Sequence, x, y, bound: int = 6, max_rank: int = 48) -> VerdierHom:
    """H^0 Hom from x to y in H^0(c)/thick(d_objs), over a field base.

    Replaces y by a local object (or x by a colocal one) using iterated cones of
    universal maps; the quotient hom is then an ordinary cohomology group.
    """
    if not isinstance(c, ConcreteCat):
        raise UnsupportedRing("the roof oracle needs a concrete category")
    if not c.ring.is_field:
        raise UnsupportedRing("the roof oracle needs a field base")
    d_objs = list(d_objs)
    if x in d_objs or y in d_objs:
        return VerdierHom("Ok", 0, None, 0, "local" if y in d_objs else "colocal", 0)
    X, Y = c.cx[x], c.cx[y]
    base_h = [cx.HomComplex(a, b) for a, b in zip(X, Y)]
    for local in (True, False):
        res = orthogonal_replacement(c, d_objs, Y if local else X, local, bound, max_rank)
        if res is None:
            continue
        new, maps, steps = res
        dim, rank = 0, 0
        for k in range(c.parts):
            if local:
                h = cx.HomComplex(X[k], new[k])
                post = lambda f, mp=maps[k]: mp @ f
            else:
                h = cx.HomComplex(new[k], Y[k])
                post = lambda f, mp=maps[k]: f @ mp
            sq = cx.cohomology_data(h, 0)
            dim += len(sq.module.nu)
            sq0 = cx.cohomology_data(base_h[k], 0)
            cols = []
            for v in sq0.basis():
                g = post(base_h[k].decode(0, v))
                cols.append(sq.encode(h.encode(g)))
            if cols and sq.module.r:
                A = rm.zeros(c.ring, sq.module.r, len(cols))
                for j, col in enumerate(cols):
                    A[:, j] = col
                rank += len(rm.submodule(sq.module, A)[0].nu)
        return VerdierHom("Ok", dim, None, rank, "local" if local else "colocal", steps)
    return VerdierHom("Inconclusive")
