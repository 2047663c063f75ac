"""Finite dg categories.

A :class:`DgCat` has a finite object list, Hom complexes over a base ring
whose terms are diagonally presented modules, a bilinear composition on
coordinate vectors and units.  Morphisms are handled as :class:`Mor`
records (source, target, degree, coordinate vector).

Flavours: :class:`ConcreteCat` (objects are complexes, or tuples of complexes
for products of abelian backends), :class:`TabularCat` (structure constants),
:class:`OppositeCat`, :class:`PretrCat` (one-sided twisted complexes),
:class:`PerfStrictCat` (strict idempotents split) and :class:`FullSubcat`.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Any, Callable, Hashable, Iterable, Sequence

import numpy as np

from . import cx
from . import ringmod as rm
from .cx import ChainMap, Complex, HomComplex, SubComplex
from .errors import MaurerCartanViolation, NotStrictIdempotent, ShapeMismatch
from .ringmod import FpModule, ModuleSolver, Ring


def _sign(k: int) -> int:
    return -1 if k % 2 else 1


@dataclass(frozen=True)
class Mor:
    src: Hashable
    tgt: Hashable
    deg: int
    vec: tuple

    def __repr__(self):
        return f"Mor({self.src}->{self.tgt}, deg={self.deg}, {list(self.vec)})"


def dreduce(module: FpModule, vec) -> tuple:
    """Canonical coordinates in a (diagonally presented) module."""
    ring = module.ring
    if module._diag is None:
        return tuple(module.reduce(vec))
    if ring.kind in ("Int", "IntMod"):
        return tuple(int(v) % d if d else int(v) for v, d in zip(vec, module._diag))
    cover = ring.cover
    out = []
    for v, d in zip(vec, module._diag):
        v = ring.reduce(v)
        if d != 0:
            v = ring.reduce(cover.divmod(cover.coerce(v), d)[1])
        out.append(v)
    return tuple(out)


class DgCat:
    """Common interface and derived operations for finite dg categories."""

    name = "dgcat"

    def __init__(self, ring: Ring, objects: Sequence):
        self.ring = ring
        self.objects = list(objects)
        self._homs: dict = {}

    # -- to implement
    def _hom(self, x, y) -> Complex:
        raise NotImplementedError

    def _compose(self, x, y, z, p: int, gv, q: int, fv) -> Sequence:
        raise NotImplementedError

    def _unit(self, x) -> Sequence:
        raise NotImplementedError

    # -- interface
    def hom(self, x, y) -> Complex:
        key = (x, y)
        h = self._homs.get(key)
        if h is None:
            h = self._homs[key] = self._hom(x, y)
        return h

    def mor(self, x, y, n: int, vec) -> Mor:
        return Mor(x, y, n, dreduce(self.hom(x, y).term(n), vec))

    def zero(self, x, y, n: int = 0) -> Mor:
        return Mor(x, y, n, (self.ring.cover.zero,) * self.hom(x, y).term(n).r)

    def unit(self, x) -> Mor:
        return self.mor(x, x, 0, self._unit(x))

    def basis(self, x, y, n: int) -> list[Mor]:
        r = self.hom(x, y).term(n).r
        out = []
        for k in range(r):
            e = [self.ring.cover.zero] * r
            e[k] = self.ring.cover.one
            out.append(Mor(x, y, n, tuple(e)))
        return out

    def degrees(self, x, y) -> range:
        return self.hom(x, y).degrees

    def compose(self, g: Mor, f: Mor) -> Mor:
        if f.tgt != g.src:
            raise ShapeMismatch(f"cannot compose {g.src}->{g.tgt} after {f.src}->{f.tgt}")
        n = g.deg + f.deg
        if not self.hom(f.src, g.tgt).term(n).r:
            return self.zero(f.src, g.tgt, n)
        if not any(v != 0 for v in g.vec) or not any(v != 0 for v in f.vec):
            return self.zero(f.src, g.tgt, n)
        v = self._compose(f.src, f.tgt, g.tgt, g.deg, g.vec, f.deg, f.vec)
        return self.mor(f.src, g.tgt, n, v)

    def d(self, f: Mor) -> Mor:
        h = self.hom(f.src, f.tgt)
        n = f.deg
        if not h.term(n + 1).r:
            return self.zero(f.src, f.tgt, n + 1)
        col = np.empty((len(f.vec), 1), dtype=object)
        col[:, 0] = list(f.vec)
        return self.mor(f.src, f.tgt, n + 1, rm.mmul(h.ring, h.dmat(n), col)[:, 0])

    def add(self, a: Mor, b: Mor) -> Mor:
        if (a.src, a.tgt, a.deg) != (b.src, b.tgt, b.deg):
            raise ShapeMismatch("adding morphisms of different shape")
        return self.mor(a.src, a.tgt, a.deg, [x + y for x, y in zip(a.vec, b.vec)])

    def scale(self, c, a: Mor) -> Mor:
        c = self.ring.reduce(c)
        return self.mor(a.src, a.tgt, a.deg, [c * x for x in a.vec])

    def sub(self, a: Mor, b: Mor) -> Mor:
        return self.add(a, self.scale(-1, b))

    def lincomb(self, terms: Iterable[tuple[Any, Mor]], x, y, n) -> Mor:
        out = self.zero(x, y, n)
        for c, m in terms:
            out = self.add(out, self.scale(c, m))
        return out

    def is_zero(self, a: Mor) -> bool:
        return all(v == 0 for v in a.vec)

    def eq(self, a: Mor, b: Mor) -> bool:
        return self.is_zero(self.sub(a, b))

    def is_closed(self, a: Mor) -> bool:
        return self.is_zero(self.d(a))

    def __repr__(self):
        return f"{type(self).__name__}({self.name}, {len(self.objects)} objects over {self.ring})"


# ---------------------------------------------------------------------------
# concrete categories

class ConcreteCat(DgCat):
    """Objects are complexes (or equal-length tuples of complexes, i.e. objects
    of a finite product of abelian backends); Hom is the Hom complex."""

    def __init__(self, backend: Ring, objects: dict | Sequence, name: str = "concrete", _shared=None):
        if not isinstance(objects, dict):
            objects = {f"X{i}": c for i, c in enumerate(objects)}
        self.backend = backend
        self.cx = {}
        for label, c in objects.items():
            self.cx[label] = tuple(c) if isinstance(c, (tuple, list)) else (c,)
        parts = {len(v) for v in self.cx.values()}
        if len(parts) > 1:
            raise ShapeMismatch("objects have different numbers of components")
        self.parts = parts.pop() if parts else 1
        super().__init__(backend.base, list(self.cx))
        self.name = name
        if _shared is not None:
            self._homs = _shared

    def extended(self, extra: dict) -> "ConcreteCat":
        """A copy with more objects; Hom caches are shared."""
        objs = dict(self.cx)
        for label, c in extra.items():
            objs[label] = tuple(c) if isinstance(c, (tuple, list)) else (c,)
        return ConcreteCat(self.backend, objs, self.name, _shared=self._homs)

    def complexes(self, x) -> tuple:
        return self.cx[x]

    def _hom(self, x, y):
        hs = [HomComplex(a, b) for a, b in zip(self.cx[x], self.cx[y])]
        if len(hs) == 1:
            h = hs[0]
            h._parts = [h]
            h._offsets = None
            return h
        s = cx.direct_sum(hs, self.ring)
        c = s.complex
        c._parts = hs
        c._offsets = s.offsets
        return c

    def split(self, x, y, n, vec) -> list[ChainMap]:
        """Coordinates → one graded map per component."""
        h = self.hom(x, y)
        if h._offsets is None:
            return [h.decode(n, vec)]
        out = []
        offs = h._offsets.get(n, [0] * len(h._parts))
        for k, part in enumerate(h._parts):
            r = part.term(n).r
            out.append(part.decode(n, vec[offs[k]:offs[k] + r]))
        return out

    def join(self, x, y, maps: Sequence[ChainMap]) -> Mor:
        h = self.hom(x, y)
        n = maps[0].degree
        if h._offsets is None:
            return self.mor(x, y, n, h.encode(maps[0]))
        vec = []
        for part, m in zip(h._parts, maps):
            vec.extend(part.encode(m))
        return self.mor(x, y, n, vec)

    def _compose(self, x, y, z, p, gv, q, fv):
        gs = self.split(y, z, p, gv)
        fs = self.split(x, y, q, fv)
        return self.join(x, z, [g @ f for g, f in zip(gs, fs)]).vec

    def _unit(self, x):
        return self.join(x, x, [ChainMap.identity(c) for c in self.cx[x]]).vec

    def as_maps(self, m: Mor) -> list[ChainMap]:
        return self.split(m.src, m.tgt, m.deg, list(m.vec))


# ---------------------------------------------------------------------------
# tabular categories

class TabularCat(DgCat):
    """Structure-constant presentation.

    ``homs[(x, y)]`` is a Complex over the base ring with diagonal terms;
    ``table[(x, y, z, p, q)]`` is an object array of shape
    (dim hom(x,z)^{p+q}, dim hom(y,z)^p, dim hom(x,y)^q);
    ``units[x]`` is the coordinate vector of id_x.
    """

    def __init__(self, ring: Ring, objects, homs: dict, table: dict, units: dict, name="tabular"):
        super().__init__(ring, objects)
        self._given = homs
        self.table = table
        self.units = units
        self.name = name

    def _hom(self, x, y):
        return self._given[(x, y)]

    def _compose(self, x, y, z, p, gv, q, fv):
        T = self.table.get((x, y, z, p, q))
        r = self.hom(x, z).term(p + q).r
        if T is None:
            return [self.ring.cover.zero] * r
        out = []
        for k in range(r):
            acc = self.ring.cover.zero
            Tk = T[k]
            for i, gi in enumerate(gv):
                if gi == 0:
                    continue
                row = Tk[i]
                for j, fj in enumerate(fv):
                    if fj != 0 and row[j] != 0:
                        acc = acc + gi * row[j] * fj
            out.append(acc)
        return out

    def _unit(self, x):
        return self.units[x]


def tabulate(c: DgCat, name: str | None = None) -> TabularCat:
    """Structure constants of any finite dg category, on its listed objects."""
    homs, table, units = {}, {}, {}
    for x in c.objects:
        units[x] = c.unit(x).vec
        for y in c.objects:
            homs[(x, y)] = c.hom(x, y)
    for x, y, z in itertools.product(c.objects, repeat=3):
        for q in c.degrees(x, y):
            for p in c.degrees(y, z):
                rz = c.hom(x, z).term(p + q).r
                if not rz:
                    continue
                gb, fb = c.basis(y, z, p), c.basis(x, y, q)
                T = np.empty((rz, len(gb), len(fb)), dtype=object)
                T.fill(c.ring.cover.zero)
                for i, g in enumerate(gb):
                    for j, f in enumerate(fb):
                        T[:, i, j] = c.compose(g, f).vec
                table[(x, y, z, p, q)] = T
    return TabularCat(c.ring, c.objects, homs, table, units, name or f"tab({c.name})")


def one_object_field_cat(ring: Ring, name="k") -> TabularCat:
    """The one-object category with endomorphisms k in degree 0."""
    h = Complex(ring, {0: FpModule.free(ring, 1)})
    T = np.empty((1, 1, 1), dtype=object)
    T[0, 0, 0] = ring.cover.one
    return TabularCat(ring, ["*"], {("*", "*"): h}, {("*", "*", "*", 0, 0): T}, {"*": (ring.cover.one,)}, name)


# ---------------------------------------------------------------------------
# opposite and full subcategories

class OppositeCat(DgCat):
    """f ∘_op g := (-1)^{|f||g|} g ∘ f."""

    def __init__(self, inner: DgCat):
        super().__init__(inner.ring, inner.objects)
        self.inner = inner
        self.name = f"op({inner.name})"

    def _hom(self, x, y):
        return self.inner.hom(y, x)

    def _compose(self, x, y, z, p, gv, q, fv):
        # g ∈ op(y,z) = inner(z,y), f ∈ op(x,y) = inner(y,x); result inner(z,x)
        r = self.inner.compose(Mor(y, x, q, tuple(fv)), Mor(z, y, p, tuple(gv)))
        return [_sign(p * q) * v for v in r.vec]

    def _unit(self, x):
        return self.inner.unit(x).vec


def opposite(c: DgCat) -> DgCat:
    if isinstance(c, OppositeCat):
        return c.inner
    return OppositeCat(c)


class FullSubcat(DgCat):
    def __init__(self, inner: DgCat, objects: Sequence, name: str | None = None):
        super().__init__(inner.ring, objects)
        self.inner = inner
        self._homs = inner._homs
        self.name = name or f"sub({inner.name})"

    def hom(self, x, y):
        return self.inner.hom(x, y)

    def _compose(self, x, y, z, p, gv, q, fv):
        return self.inner._compose(x, y, z, p, gv, q, fv)

    def _unit(self, x):
        return self.inner._unit(x)


# ---------------------------------------------------------------------------
# axioms

@dataclass
class Violation:
    kind: str
    witness: tuple

    def __repr__(self):
        return f"{self.kind}: {self.witness}"


@dataclass
class AxiomReport:
    violations: list = field(default_factory=list)
    checked: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.ok


def check_axioms(c: DgCat, objects: Sequence | None = None, max_violations: int = 20,
                 assoc: bool = True) -> AxiomReport:
    """Verify d² = 0, Leibniz, associativity and unit laws on basis elements.

    Leibniz and associativity are compared on structure constants, so every
    basis pair (resp. triple) is covered.  Capped quotients expose
    ``within_cap``/``basis_lengths``; checks then skip tuples beyond the cap.
    """
    objs = list(objects if objects is not None else c.objects)
    rep = AxiomReport()
    within = getattr(c, "within_cap", None)
    lengths = getattr(c, "basis_lengths", None) if within else None
    cap = getattr(c, "cap", None)
    counts = {"d2": 0, "leibniz": 0, "assoc": 0, "unit": 0}
    dtype = np.int64 if c.ring.kind == "IntMod" else object

    def fail(kind, *w):
        if len(rep.violations) < max_violations:
            rep.violations.append(Violation(kind, w))

    def D(x, y, n):
        h = c.hom(x, y)
        return np.array(h.dmat(n), dtype=dtype).reshape(h.term(n + 1).r, h.term(n).r)

    for x in objs:
        for y in objs:
            h = c.hom(x, y)
            for n in h.degrees:
                counts["d2"] += 1
                dd = _reduce_rows(h.term(n + 2), np.dot(D(x, y, n + 1), D(x, y, n)))
                bad = np.argwhere(dd != 0)
                if len(bad):
                    fail("d2", x, y, n, int(bad[0][1]))
    for x in objs:
        u = c.unit(x)
        counts["unit"] += 1
        if not c.is_closed(u):
            fail("unit-not-closed", x)
        for y in objs:
            for n in c.degrees(x, y):
                for f in c.basis(x, y, n):
                    if not c.eq(c.compose(c.unit(y), f), f):
                        fail("left-unit", x, y, f.vec)
                    if not c.eq(c.compose(f, u), f):
                        fail("right-unit", x, y, f.vec)

    tensors = {}

    def T(x, y, z, p, q):
        key = (x, y, z, p, q)
        if key not in tensors:
            tensors[key] = structure_tensor(c, x, y, z, p, q, lengths, cap)
        return tensors[key]

    for x, y, z in itertools.product(objs, repeat=3):
        for q in c.degrees(x, y):
            for p in c.degrees(y, z):
                out = c.hom(x, z).term(p + q + 1)
                if not out.r:
                    continue
                counts["leibniz"] += 1
                lhs = np.tensordot(D(x, z, p + q), T(x, y, z, p, q), axes=([1], [0]))
                t1 = np.transpose(np.tensordot(T(x, y, z, p + 1, q), D(y, z, p), axes=([1], [0])), (0, 2, 1))
                t2 = np.tensordot(T(x, y, z, p, q + 1), D(x, y, q), axes=([2], [0]))
                diff = _reduce_rows(out, lhs - t1 - _sign(p) * t2)
                if lengths:
                    lg = np.array(lengths(y, z, p), dtype=int)
                    lf = np.array(lengths(x, y, q), dtype=int)
                    diff = diff * ((lg[:, None] + lf[None, :]) <= cap)[None, :, :]
                bad = np.argwhere(diff != 0)
                if len(bad):
                    _, ig, jf = bad[0]
                    fail("leibniz", x, y, z, (p, int(ig)), (q, int(jf)))
    if assoc:
        for w, x, y, z in itertools.product(objs, repeat=4):
            for a in c.degrees(w, x):
                for b in c.degrees(x, y):
                    for e in c.degrees(y, z):
                        rwz = c.hom(w, z).term(a + b + e).r
                        if not rwz:
                            continue
                        counts["assoc"] += 1
                        lhs = _contract(T(w, x, z, e + b, a), T(x, y, z, e, b), "left")
                        rhs = _contract(T(w, y, z, e, b + a), T(w, x, y, b, a), "right")
                        diff = _reduce_rows(c.hom(w, z).term(a + b + e), lhs - rhs)
                        if lengths:
                            diff = diff * _length_mask(lengths, cap, (y, z, e), (x, y, b), (w, x, a))
                        bad = np.argwhere(diff != 0)
                        if len(bad):
                            _, ih, ig, jf = bad[0]
                            fail("assoc", w, x, y, z, (e, int(ih)), (b, int(ig)), (a, int(jf)))
    rep.checked = counts
    return rep


def structure_tensor(c: DgCat, x, y, z, p: int, q: int, lengths=None, cap=None) -> np.ndarray:
    """T[k, i, j] = coordinate k of (basis_i of hom(y,z)^p) ∘ (basis_j of hom(x,y)^q).

    With ``lengths``/``cap`` pairs whose lengths exceed the cap are left zero.
    """
    gb, fb = c.basis(y, z, p), c.basis(x, y, q)
    r = c.hom(x, z).term(p + q).r
    dtype = np.int64 if c.ring.kind == "IntMod" else object
    T = np.zeros((r, len(gb), len(fb)), dtype=dtype)
    if not r:
        return T
    lg = lengths(y, z, p) if lengths else None
    lf = lengths(x, y, q) if lengths else None
    for i, g in enumerate(gb):
        for j, f in enumerate(fb):
            if lengths and lg[i] + lf[j] > cap:
                continue
            T[:, i, j] = c.compose(g, f).vec
    return T


def _contract(A: np.ndarray, B: np.ndarray, side: str) -> np.ndarray:
    """Both bracketings as arrays indexed (out, h, g, f)."""
    if side == "left":
        # A: (out, hg, f), B: (hg, h, g) → (out, f, h, g)
        t = np.tensordot(A, B, axes=([1], [0]))
        return np.transpose(t, (0, 2, 3, 1))
    # A: (out, h, gf), B: (gf, g, f) → (out, h, g, f)
    return np.tensordot(A, B, axes=([2], [0]))


def _reduce_rows(module: FpModule, arr: np.ndarray) -> np.ndarray:
    ring = module.ring
    if not arr.size:
        return arr
    if ring.kind in ("Int", "IntMod"):
        out = arr.copy()
        for k, d in enumerate(module._diag):
            if d:
                out[k] %= d
        return out
    return np.vectorize(lambda v: v != 0, otypes=[bool])(arr).astype(int)


def _length_mask(lengths, cap, hkey, gkey, fkey) -> np.ndarray:
    lh, lg, lf = (np.array(lengths(*k), dtype=int) for k in (hkey, gkey, fkey))
    tot = lh[:, None, None] + lg[None, :, None] + lf[None, None, :]
    return (tot <= cap)[None, :, :, :]


# ---------------------------------------------------------------------------
# homotopy category shadows

class H0Data:
    """H^n of every Hom complex with the induced composition (n = 0 by default)."""

    def __init__(self, c: DgCat, graded: bool = False):
        self.c = c
        self.graded = graded
        self._sq = {}

    def sq(self, x, y, n=0) -> cx.Subquotient:
        key = (x, y, n)
        if key not in self._sq:
            self._sq[key] = cx.cohomology_data(self.c.hom(x, y), n)
        return self._sq[key]

    def hom(self, x, y, n=0) -> FpModule:
        return self.sq(x, y, n).module

    def classes(self, x, y, n=0) -> list:
        """Canonical class vectors (finite base rings only)."""
        return [tuple(v) for v in self.hom(x, y, n).elements()] if self.hom(x, y, n).r else [()]

    def rep(self, x, y, cls, n=0) -> Mor:
        return self.c.mor(x, y, n, self.sq(x, y, n).lift(cls))

    def cls(self, m: Mor) -> tuple:
        v = self.sq(m.src, m.tgt, m.deg).encode(np.array(m.vec, dtype=object))
        if v is None:
            raise ValueError("morphism is not closed")
        return tuple(v)

    def compose(self, x, y, z, a, b, p=0, q=0) -> tuple:
        """Class of rep(a) ∘ rep(b) with a ∈ H^p(y,z), b ∈ H^q(x,y)."""
        return self.cls(self.c.compose(self.rep(y, z, a, p), self.rep(x, y, b, q)))

    def check_well_defined(self, objects=None) -> list:
        """Boundaries compose with cycles to boundaries, on generators."""
        c = self.c
        objs = objects or c.objects
        bad = []
        for x, y, z in itertools.product(objs, repeat=3):
            for q in (c.degrees(x, y) if self.graded else [0]):
                for p in (c.degrees(y, z) if self.graded else [0]):
                    zs = [self.c.mor(y, z, p, g) for g in self.sq(y, z, p).basis()]
                    bs = [c.d(h) for h in c.basis(x, y, q - 1)]
                    for g in zs:
                        for b in bs:
                            if any(self.cls(c.compose(g, b))):
                                bad.append((x, y, z, p, q))
                    zf = [self.c.mor(x, y, q, f) for f in self.sq(x, y, q).basis()]
                    bg = [c.d(h) for h in c.basis(y, z, p - 1)]
                    for b in bg:
                        for f in zf:
                            if any(self.cls(c.compose(b, f))):
                                bad.append((x, y, z, p, q))
        return bad


def h0(c: DgCat) -> H0Data:
    return H0Data(c)


def hgr(c: DgCat) -> H0Data:
    return H0Data(c, graded=True)


# ---------------------------------------------------------------------------
# twisted complexes

@dataclass(frozen=True)
class TwistedComplex:
    """Items (X_j, n_j) with strictly lower-triangular twist entries.

    q maps (j, k), j > k, to the coordinates of q̂_jk ∈ hom(X_k, X_j)^{1+n_j-n_k}.
    The realization is ⊕ X_j[n_j] with differential d + q; the Maurer–Cartan
    equation reads (-1)^{n_j} d(q̂_jk) + Σ_l q̂_jl q̂_lk = 0.
    """

    items: tuple
    q: tuple = ()

    @property
    def size(self) -> int:
        return len(self.items)

    def qdict(self) -> dict:
        return dict(self.q)

    def __repr__(self):
        its = " ⊕ ".join(f"{x}[{n}]" for x, n in self.items) or "0"
        tw = sum(1 for _, v in self.q if any(t != 0 for t in v))
        return f"Tw({its}{', twisted' if tw else ''})"


class PretrCat(DgCat):
    """Pretriangulated hull: twisted complexes over ``c``.

    hom(T, T')^d = ⊕_{j,k} hom_c(X_k, X'_j)^{d + n'_j - n_k} with
    δ(m) = (-1)^{n'_j} d(m̂) + q'·m - (-1)^d m·q and unsigned matrix composition.
    """

    def __init__(self, c: DgCat, objects: Sequence[TwistedComplex] | None = None, name=None):
        objs = list(objects) if objects is not None else [self.embed_obj(x) for x in c.objects]
        super().__init__(c.ring, [])
        self.c = c
        self.name = name or f"pretr({c.name})"
        for t in objs:
            self.add_object(t)

    @staticmethod
    def embed_obj(x) -> TwistedComplex:
        return TwistedComplex(((x, 0),), ())

    def embed(self, x) -> TwistedComplex:
        return self.add_object(self.embed_obj(x))

    def add_object(self, t: TwistedComplex, check: bool = True) -> TwistedComplex:
        if t not in self.objects:
            if check:
                bad = self.mc_violations(t)
                if bad:
                    raise MaurerCartanViolation(f"Maurer–Cartan fails at entries {bad}")
            self.objects.append(t)
        return t

    # twist entries as Mors of c
    def qhat(self, t: TwistedComplex, j: int, k: int) -> Mor | None:
        v = t.qdict().get((j, k))
        if v is None:
            return None
        (xj, nj), (xk, nk) = t.items[j], t.items[k]
        return self.c.mor(xk, xj, 1 + nj - nk, v)

    def mc_violations(self, t: TwistedComplex) -> list:
        c = self.c
        bad = []
        for (j, k) in t.qdict():
            if j <= k:
                bad.append((j, k))
        if bad:
            return bad
        for j in range(t.size):
            for k in range(j):
                (xj, nj), (xk, nk) = t.items[j], t.items[k]
                deg = 2 + nj - nk
                acc = c.zero(xk, xj, deg)
                q = self.qhat(t, j, k)
                if q is not None:
                    acc = c.add(acc, c.scale(_sign(nj), c.d(q)))
                for l in range(k + 1, j):
                    a, b = self.qhat(t, j, l), self.qhat(t, l, k)
                    if a is not None and b is not None:
                        acc = c.add(acc, c.compose(a, b))
                if not c.is_zero(acc):
                    bad.append((j, k))
        return bad

    # block layout of hom(T, T')
    def layout(self, t, t2, d) -> list:
        out, off = [], 0
        for j, (y, nj) in enumerate(t2.items):
            for k, (x, nk) in enumerate(t.items):
                e = d + nj - nk
                r = self.c.hom(x, y).term(e).r
                if r:
                    out.append((j, k, x, y, e, off, r))
                    off += r
        return out

    def _deg_range(self, t, t2):
        lo, hi = None, None
        for y, nj in t2.items:
            for x, nk in t.items:
                h = self.c.hom(x, y)
                if h.terms:
                    a, b = h.lo - nj + nk, h.hi - nj + nk
                    lo = a if lo is None else min(lo, a)
                    hi = b if hi is None else max(hi, b)
        return (lo, hi) if lo is not None else (0, -1)

    def blocks(self, t, t2, d, vec) -> dict:
        out = {}
        for j, k, x, y, e, off, r in self.layout(t, t2, d):
            out[(j, k)] = Mor(x, y, e, tuple(vec[off:off + r]))
        return out

    def assemble(self, t, t2, d, blocks: dict) -> list:
        vec = []
        for j, k, x, y, e, off, r in self.layout(t, t2, d):
            m = blocks.get((j, k))
            vec.extend(m.vec if m is not None else [self.ring.cover.zero] * r)
        return vec

    def _hom(self, t, t2):
        lo, hi = self._deg_range(t, t2)
        terms = {}
        for d in range(lo, hi + 1):
            ds = []
            for j, k, x, y, e, off, r in self.layout(t, t2, d):
                ds.extend(self.c.hom(x, y).term(e)._diag)
            if ds:
                terms[d] = FpModule.diag(self.ring, ds)
        h = Complex(self.ring, terms, {})
        self._homs[(t, t2)] = h
        for d in terms:
            if d + 1 in terms:
                r = terms[d].r
                m = rm.zeros(self.ring, terms[d + 1].r, r)
                for i in range(r):
                    e = [0] * r
                    e[i] = 1
                    m[:, i] = self._delta(t, t2, d, e)
                h.diffs[d] = rm.reduce_mat(self.ring, m)
        return h

    def _delta(self, t, t2, d, vec):
        c = self.c
        mb = self.blocks(t, t2, d, vec)
        out = {}

        def acc(key, x, y, e, m):
            if key in out:
                out[key] = c.add(out[key], m)
            else:
                out[key] = m

        for (j, k), m in mb.items():
            nj = t2.items[j][1]
            acc((j, k), m.src, m.tgt, m.deg + 1, c.scale(_sign(nj), c.d(m)))
        for (l, k), m in mb.items():
            for j in range(l + 1, t2.size):
                q2 = self.qhat(t2, j, l)
                if q2 is not None:
                    acc((j, k), None, None, None, c.compose(q2, m))
        for (j, l), m in mb.items():
            for k in range(l):
                q1 = self.qhat(t, l, k)
                if q1 is not None:
                    acc((j, k), None, None, None, c.scale(-_sign(d), c.compose(m, q1)))
        return self.assemble(t, t2, d + 1, out)

    def _compose(self, t, t2, t3, p, gv, q, fv):
        c = self.c
        gb = self.blocks(t2, t3, p, gv)
        fb = self.blocks(t, t2, q, fv)
        out = {}
        for (j, l), g in gb.items():
            for (l2, k), f in fb.items():
                if l2 == l:
                    m = c.compose(g, f)
                    out[(j, k)] = c.add(out[(j, k)], m) if (j, k) in out else m
        return self.assemble(t, t3, p + q, out)

    def _unit(self, t):
        c = self.c
        return self.assemble(t, t, 0, {(j, j): c.unit(x) for j, (x, _) in enumerate(t.items)})

    # constructions
    def shift(self, t: TwistedComplex, s: int) -> TwistedComplex:
        ring = self.ring
        items = tuple((x, n + s) for x, n in t.items)
        q = tuple((key, tuple(ring.reduce(_sign(s) * v) for v in vec)) for key, vec in t.q)
        return self.add_object(TwistedComplex(items, q), check=False)

    def direct_sum(self, ts: Sequence[TwistedComplex]) -> TwistedComplex:
        items, q, off = [], [], 0
        for t in ts:
            items.extend(t.items)
            q.extend((((j + off, k + off), v) for (j, k), v in t.q))
            off += t.size
        return self.add_object(TwistedComplex(tuple(items), tuple(q)), check=False)

    def cone(self, f: Mor) -> tuple[TwistedComplex, Mor, Mor]:
        """cone(f) = T[1] ⊕ T' with twist [[q_{T[1]}, 0], [f, q']]; returns
        (cone, inclusion T' → cone, projection cone → T[1])."""
        if f.deg != 0 or not self.is_closed(f):
            raise ShapeMismatch("cone needs a closed degree-0 morphism")
        t, t2 = f.src, f.tgt
        ring = self.ring
        r = t.size
        items = tuple((x, n + 1) for x, n in t.items) + t2.items
        q = [(key, tuple(ring.reduce(-v) for v in vec)) for key, vec in t.q]
        q += [((j + r, k + r), vec) for (j, k), vec in t2.q]
        for (j, k), m in self.blocks(t, t2, 0, f.vec).items():
            q.append(((j + r, k), m.vec))
        cn = self.add_object(TwistedComplex(items, tuple(sorted(q))))
        t1 = self.shift(t, 1)
        c = self.c
        inc = self.mor(t2, cn, 0, self.assemble(t2, cn, 0, {(j + r, j): c.unit(x) for j, (x, _) in
                                                          enumerate(t2.items)}))
        pr = self.mor(cn, t1, 0, self.assemble(cn, t1, 0, {(j, j): c.unit(x) for j, (x, _) in
                                                         enumerate(t.items)}))
        return cn, inc, pr

    def factor_through_cone(self, f: Mor, g: Mor, h: Mor) -> Mor:
        """Given g∘f = d(h), the map cone(f) → C restricting to g on T'."""
        if not self.eq(self.compose(g, f), self.d(h)):
            raise ShapeMismatch("h does not witness g∘f as a coboundary")
        cn, inc, _ = self.cone(f)
        t, t2, tc = f.src, f.tgt, g.tgt
        r = t.size
        blocks = {}
        for (j, k), m in self.blocks(t, tc, -1, h.vec).items():
            blocks[(j, k)] = m
        for (j, k), m in self.blocks(t2, tc, 0, g.vec).items():
            blocks[(j, k + r)] = m
        return self.mor(cn, tc, 0, self.assemble(cn, tc, 0, blocks))

    def realize(self, t: TwistedComplex) -> tuple:
        """For a concrete base: the total complex(es) ⊕ X_j[n_j] with d + q."""
        c = self.c
        if not isinstance(c, ConcreteCat):
            raise ShapeMismatch("realization needs a concrete base")
        out = []
        for part in range(c.parts):
            pieces = [cx.shift(c.cx[x][part], n) for x, n in t.items]
            s = cx.direct_sum(pieces, c.backend)
            C = s.complex
            diffs = dict(C.diffs)
            for i in C.degrees:
                m = C.dmat(i).copy()
                for (j, k), vec in t.q:
                    (xj, nj), (xk, nk) = t.items[j], t.items[k]
                    qm = c.split(xk, xj, 1 + nj - nk, list(vec))[part]
                    src_i = i + nk
                    comp = qm.comp(src_i)
                    if comp.size and C.term(i + 1).r and C.term(i).r:
                        m[s.block(i + 1, j), s.block(i, k)] = rm.reduce_mat(
                            c.backend, m[s.block(i + 1, j), s.block(i, k)] + comp)
                diffs[i] = m
            out.append(Complex(c.backend, C.terms, diffs))
        return tuple(out)


def pretr(c: DgCat, objects=None) -> PretrCat:
    return PretrCat(c, objects)


# ---------------------------------------------------------------------------
# strict idempotent completion

@dataclass(frozen=True)
class Summand:
    obj: Hashable
    e: tuple

    def __repr__(self):
        return f"({self.obj}, e)"


class PerfStrictCat(DgCat):
    """Adjoins images (T, e) of strict idempotents e ∈ Z^0(T, T), e∘e = e."""

    def __init__(self, c: DgCat, summands: Sequence[tuple[Hashable, Sequence]] = (), name=None):
        super().__init__(c.ring, [])
        self.c = c
        self.name = name or f"perf({c.name})"
        for x in c.objects:
            self.add_summand(x, c.unit(x).vec)
        for x, e in summands:
            self.add_summand(x, e)

    def add_summand(self, x, e) -> Summand:
        c = self.c
        em = c.mor(x, x, 0, e)
        if not c.is_closed(em):
            raise NotStrictIdempotent("idempotent is not closed")
        if not c.eq(c.compose(em, em), em):
            raise NotStrictIdempotent("e∘e ≠ e on the nose")
        s = Summand(x, em.vec)
        if s not in self.objects:
            self.objects.append(s)
        return s

    def _hom(self, s, s2):
        c = self.c
        amb = c.hom(s.obj, s2.obj)
        e1 = Mor(s.obj, s.obj, 0, s.e)
        e2 = Mor(s2.obj, s2.obj, 0, s2.e)
        gens = {}
        for n in amb.degrees:
            cols = [c.compose(e2, c.compose(b, e1)).vec for b in c.basis(s.obj, s2.obj, n)]
            G = rm.zeros(self.ring, amb.term(n).r, len(cols))
            for j, col in enumerate(cols):
                G[:, j] = col
            gens[n] = G
        return SubComplex(amb, gens)

    def lift(self, m: Mor) -> Mor:
        h = self.hom(m.src, m.tgt)
        return self.c.mor(m.src.obj, m.tgt.obj, m.deg, h.decode(m.deg, list(m.vec)))

    def lower(self, s, s2, m: Mor) -> Mor:
        v = self.hom(s, s2).encode(m.deg, np.array(m.vec, dtype=object))
        if v is None:
            raise ShapeMismatch("morphism does not lie in e'∘hom∘e")
        return self.mor(s, s2, m.deg, v)

    def _compose(self, s, s2, s3, p, gv, q, fv):
        g = self.lift(Mor(s2, s3, p, tuple(gv)))
        f = self.lift(Mor(s, s2, q, tuple(fv)))
        return self.lower(s, s3, self.c.compose(g, f)).vec

    def _unit(self, s):
        return self.lower(s, s, Mor(s.obj, s.obj, 0, s.e)).vec

    def splitting(self, s: Summand) -> tuple[Mor, Mor]:
        """(i, p) with i: (T,e) → T, p: T → (T,e); p∘i = id and i∘p = e."""
        full = self.add_summand(s.obj, self.c.unit(s.obj).vec)
        em = Mor(s.obj, s.obj, 0, s.e)
        i = self.lower(s, full, em)
        p = self.lower(full, s, em)
        return i, p

    def check_split(self, s: Summand) -> bool:
        i, p = self.splitting(s)
        full = i.tgt
        ok1 = self.eq(self.compose(p, i), self.unit(s))
        ok2 = self.eq(self.compose(i, p), self.lower(full, full, Mor(s.obj, s.obj, 0, s.e)))
        return ok1 and ok2


def perf_strict(c: DgCat, summands=()) -> PerfStrictCat:
    return PerfStrictCat(c, summands)


# ---------------------------------------------------------------------------
# functors

class DgFunctor:
    """Object map plus a coordinate map on each Hom term."""

    def __init__(self, source: DgCat, target: DgCat, obj: Callable | dict,
                 mor: Callable[[Mor], Mor], name="F"):
        self.source, self.target = source, target
        self._obj = obj
        self._mor = mor
        self.name = name
        self._chain = {}

    def obj(self, x):
        return self._obj[x] if isinstance(self._obj, dict) else self._obj(x)

    def __call__(self, m: Mor) -> Mor:
        # functors are linear on each Hom term: apply the cached matrix
        f = self.hom_map(m.src, m.tgt)
        x, y = self.obj(m.src), self.obj(m.tgt)
        A = f.comp(m.deg)
        if not A.shape[0]:
            return self.target.zero(x, y, m.deg)
        col = np.empty((len(m.vec), 1), dtype=object)
        col[:, 0] = list(m.vec)
        return self.target.mor(x, y, m.deg, tuple(rm.mmul(self.target.ring, A, col)[:, 0]))

    def hom_map(self, x, y) -> ChainMap:
        key = (x, y)
        if key not in self._chain:
            S, T = self.source.hom(x, y), self.target.hom(self.obj(x), self.obj(y))
            comps = {}
            for n in S.degrees:
                cols = [self._mor(b).vec for b in self.source.basis(x, y, n)]
                m = rm.zeros(self.source.ring, T.term(n).r, len(cols))
                for j, col in enumerate(cols):
                    if T.term(n).r:
                        m[:, j] = col
                comps[n] = m
            self._chain[key] = ChainMap(S, T, comps)
        return self._chain[key]

    def check(self, objects=None) -> list:
        """Chain-map property, units and composition on basis elements."""
        src, tgt = self.source, self.target
        objs = objects or src.objects
        bad = []
        for x in objs:
            if not tgt.eq(self(src.unit(x)), tgt.unit(self.obj(x))):
                bad.append(("unit", x))
            for y in objs:
                if not self.hom_map(x, y).is_closed():
                    bad.append(("chain", x, y))
        for x, y, z in itertools.product(objs, repeat=3):
            for q in src.degrees(x, y):
                for p in src.degrees(y, z):
                    for g in src.basis(y, z, p):
                        for f in src.basis(x, y, q):
                            if not tgt.eq(self(src.compose(g, f)), tgt.compose(self(g), self(f))):
                                bad.append(("compose", x, y, z, p, q))
        return bad


def identity_functor(c: DgCat) -> DgFunctor:
    return DgFunctor(c, c, lambda x: x, lambda m: m, "id")


def compose_functors(G: DgFunctor, F: DgFunctor) -> DgFunctor:
    return DgFunctor(F.source, G.target, lambda x: G.obj(F.obj(x)), lambda m: G(F(m)), f"{G.name}∘{F.name}")


def inclusion_functor(sub: DgCat, amb: DgCat) -> DgFunctor:
    return DgFunctor(sub, amb, lambda x: x, lambda m: amb.mor(m.src, m.tgt, m.deg, m.vec), "incl")


def pretr_functor(F: DgFunctor, src: PretrCat, tgt: PretrCat) -> DgFunctor:
    """Entrywise extension of F to twisted complexes."""
    S, T = src.c, tgt.c

    def obj(t: TwistedComplex):
        items = tuple((F.obj(x), n) for x, n in t.items)
        q = []
        for (j, k), v in t.q:
            (xj, nj), (xk, nk) = t.items[j], t.items[k]
            q.append(((j, k), F(S.mor(xk, xj, 1 + nj - nk, v)).vec))
        return tgt.add_object(TwistedComplex(items, tuple(q)), check=False)

    def mor(m: Mor):
        a, b = obj(m.src), obj(m.tgt)
        blocks = {key: F(v) for key, v in src.blocks(m.src, m.tgt, m.deg, m.vec).items()}
        return tgt.mor(a, b, m.deg, tgt.assemble(a, b, m.deg, blocks))

    return DgFunctor(src, tgt, obj, mor, f"pretr({F.name})")


# ---------------------------------------------------------------------------
# H^0 isomorphisms and quasi-equivalences

def _stack(cols, rows, ring):
    m = rm.zeros(ring, rows, len(cols))
    for j, col in enumerate(cols):
        if rows:
            m[:, j] = col
    return m


def invert_in_h0(c: DgCat, u: Mor) -> tuple[Mor, Mor, Mor] | None:
    """(v, h1, h2) with v∘u - id = d h1 and u∘v - id = d h2, or None."""
    a, b = u.src, u.tgt
    ring = c.ring
    Hba, Haa, Hbb = c.hom(b, a), c.hom(a, a), c.hom(b, b)
    vb = c.basis(b, a, 0)
    h1b = c.basis(a, a, -1)
    h2b = c.basis(b, b, -1)
    r1, r2, r3 = Haa.term(0).r, Hbb.term(0).r, Hba.term(1).r
    tgt_mod = rm.direct_sum([Haa.term(0), Hbb.term(0), Hba.term(1)], ring)
    cols = []
    zero = ring.cover.zero
    for v in vb:
        cols.append(list(c.compose(v, u).vec) + list(c.compose(u, v).vec) + list(c.d(v).vec))
    for h in h1b:
        cols.append([ring.reduce(-t) for t in c.d(h).vec] + [zero] * (r2 + r3))
    for h in h2b:
        cols.append([zero] * r1 + [ring.reduce(-t) for t in c.d(h).vec] + [zero] * r3)
    if tgt_mod.r == 0:
        return c.zero(b, a, 0), c.zero(a, a, -1), c.zero(b, b, -1)
    A = _stack(cols, tgt_mod.r, ring)
    rhs = list(c.unit(a).vec) + list(c.unit(b).vec) + [zero] * r3
    x = ModuleSolver(tgt_mod, A).solve(rhs)
    if x is None:
        return None
    nv, n1 = len(vb), len(h1b)
    v = c.lincomb(zip(x[:nv], vb), b, a, 0)
    h1 = c.lincomb(zip(x[nv:nv + n1], h1b), a, a, -1)
    h2 = c.lincomb(zip(x[nv + n1:], h2b), b, b, -1)
    return v, h1, h2


@dataclass
class IsoSearch:
    found: Mor | None
    exhausted: bool   # False when the enumeration bound was hit


def find_h0_iso(c: DgCat, a, b, limit: int = 4096) -> IsoSearch:
    """Search H^0(a, b) for an isomorphism (finite base rings enumerate classes)."""
    H = h0(c)
    mod = H.hom(a, b)
    if mod.is_zero():
        ok = invert_in_h0(c, c.zero(a, b, 0))
        return IsoSearch(c.zero(a, b, 0) if ok else None, True)
    card = mod.cardinality()
    if card is None or card > limit:
        return IsoSearch(None, False)
    for cls in mod.elements():
        u = H.rep(a, b, cls)
        if invert_in_h0(c, u) is not None:
            return IsoSearch(u, True)
    return IsoSearch(None, True)


@dataclass
class QEResult:
    status: str            # Verified | NotQuasiFullyFaithful | NotSurjectiveWithin | Inconclusive
    pair: tuple | None = None
    degree: int | None = None
    bound: int | None = None
    preimages: dict = field(default_factory=dict)

    def __bool__(self):
        return self.status == "Verified"


def qff_failure(F: DgFunctor, x, y) -> int | None:
    """First degree where F: hom(x,y) → hom(Fx,Fy) fails to be a cohomology iso."""
    f = F.hom_map(x, y)
    S, T = f.source, f.target
    lo = min(S.lo, T.lo) if S.terms or T.terms else 0
    hi = max(S.hi, T.hi) if S.terms or T.terms else -1
    for n in range(lo, hi + 1):
        hs, ht = cx.cohomology_data(S, n), cx.cohomology_data(T, n)
        if hs.module.is_zero() and ht.module.is_zero():
            continue
        m = cx.induced_map(f, n, hs, ht)
        mm = rm.ModMap(hs.module, ht.module, m)
        K, _ = rm.kernel(mm)
        C, _ = rm.cokernel(mm)
        if not (K.is_zero() and C.is_zero()):
            return n
    return None


def _cohomology_profile(c: DgCat, x) -> tuple:
    h = c.hom(x, x)
    return tuple((n, cx.cohomology(h, n).iso_type()) for n in h.degrees if not cx.cohomology(h, n).is_zero())


def twisted_candidates(c: DgCat, bound: int, class_limit: int = 16):
    """Twisted complexes over ``c`` of size ≤ 2 (size 2 only when bound ≥ 2),
    shifts in [-bound, bound], twists running over cohomology class
    representatives; breadth-first, deterministic order."""
    shifts = range(-bound, bound + 1)
    for x in c.objects:
        for n in shifts:
            if n:
                yield TwistedComplex(((x, n),), ())
    if bound < 2:
        return
    H = hgr(c)
    for x in c.objects:
        for y in c.objects:
            for a in shifts:
                for b in shifts:
                    e = 1 + b - a
                    qs = [None]
                    mod = H.hom(x, y, e)
                    if not mod.is_zero() and mod.is_finite and mod.cardinality() <= class_limit:
                        qs += [H.rep(x, y, cls, e).vec for cls in mod.elements() if any(v != 0 for v in cls)]
                    for q in qs:
                        tw = () if q is None else (((1, 0), tuple(q)),)
                        yield TwistedComplex(((x, a), (y, b)), tw)


def is_quasi_equivalence(F: DgFunctor, bound: int, iso_limit: int = 4096,
                         max_candidates: int = 2000) -> QEResult:
    """Quasi-full-faithfulness exactly; essential surjectivity by bounded search.

    Each target object is compared in H^0 against images of source objects,
    then (bound ≥ 1) against images under the extension of F to twisted
    complexes of size ≤ min(bound, 2) with shifts in [-bound, bound].
    """
    src, tgt = F.source, F.target
    for x in src.objects:
        for y in src.objects:
            n = qff_failure(F, x, y)
            if n is not None:
                return QEResult("NotQuasiFullyFaithful", (x, y), n)
    pre = {}
    inconclusive = False
    ext = None
    for t in tgt.objects:
        hit = None
        for s in src.objects:
            res = find_h0_iso(tgt, F.obj(s), t, iso_limit)
            if res.found is not None:
                hit = s
                break
            inconclusive |= not res.exhausted
        if hit is None and bound >= 1:
            if ext is None:
                Ps, Pt = PretrCat(src, []), PretrCat(tgt, [])
                ext = (Ps, Pt, pretr_functor(F, Ps, Pt))
            Ps, Pt, Fx = ext
            tt = Pt.embed(t)
            prof = _cohomology_profile(Pt, tt)
            for k, T in enumerate(twisted_candidates(src, bound)):
                if k >= max_candidates:
                    inconclusive = True
                    break
                try:
                    Ps.add_object(T)
                except MaurerCartanViolation:
                    continue
                img = Fx.obj(T)
                if _cohomology_profile(Pt, img) != prof:
                    continue
                res = find_h0_iso(Pt, img, tt, iso_limit)
                if res.found is not None:
                    hit = T
                    break
                inconclusive |= not res.exhausted
        if hit is None:
            return QEResult("Inconclusive" if inconclusive else "NotSurjectiveWithin", (t,), bound=bound)
        pre[t] = hit
    return QEResult("Verified", preimages=pre, bound=bound)
