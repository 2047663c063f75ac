"""Bounded cochain complexes of finitely presented modules.

Sign conventions used throughout:

* shift: A[k]^i = A^{i+k} with differential (-1)^k d_A;
* cone: cone(f)^i = A^{i+1} ⊕ B^i, d(a, b) = (-d_A a, f a + d_B b);
* Hom complex: d(f) = d_B ∘ f - (-1)^n f ∘ d_A for f of degree n;
* tensor: d(x ⊗ y) = dx ⊗ y + (-1)^{|x|} x ⊗ dy.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import ringmod as rm
from .errors import IncompatiblePairing, ShapeMismatch, UnboundedProduct
from .ringmod import FpModule, HomModule, ModMap, ModuleSolver, Ring

_ZERO_CACHE: dict = {}


def zero_module(ring: Ring) -> FpModule:
    m = _ZERO_CACHE.get(ring)
    if m is None:
        m = _ZERO_CACHE[ring] = FpModule.zero(ring)
    return m


def _sign(k: int) -> int:
    return -1 if k % 2 else 1


class Complex:
    """A bounded cochain complex; d[i] is the matrix of d^i: C^i → C^{i+1}."""

    def __init__(self, ring: Ring, terms: dict[int, FpModule], diffs: dict[int, np.ndarray] | None = None):
        self.ring = ring
        self.terms = {i: m for i, m in terms.items() if m.r > 0}
        diffs = diffs or {}
        self.diffs = {}
        for i, dm in diffs.items():
            src, tgt = self.term(i), self.term(i + 1)
            if src.r and tgt.r:
                if dm.shape != (tgt.r, src.r):
                    raise ShapeMismatch(f"d^{i} has shape {dm.shape}, expected {(tgt.r, src.r)}")
                self.diffs[i] = rm.reduce_mat(ring, dm)
        if self.terms:
            self.lo, self.hi = min(self.terms), max(self.terms)
        else:
            self.lo, self.hi = 0, -1

    @classmethod
    def zero(cls, ring: Ring) -> "Complex":
        return cls(ring, {})

    @classmethod
    def free(cls, ring: Ring, lo: int, dims: Sequence[int], diffs: Sequence = ()) -> "Complex":
        """Complex of free modules R^{dims[k]} in degree lo+k with matrix literals."""
        terms = {lo + k: FpModule.free(ring, n) for k, n in enumerate(dims)}
        ds = {}
        for k, m in enumerate(diffs):
            src, tgt = dims[k], dims[k + 1]
            ds[lo + k] = m if isinstance(m, np.ndarray) else rm.mat(ring, m, (tgt, src))
        return cls(ring, terms, ds)

    @property
    def degrees(self) -> range:
        return range(self.lo, self.hi + 1)

    def term(self, i: int) -> FpModule:
        return self.terms.get(i) or zero_module(self.ring)

    def dmat(self, i: int) -> np.ndarray:
        m = self.diffs.get(i)
        if m is None:
            return rm.zeros(self.ring, self.term(i + 1).r, self.term(i).r)
        return m

    def d(self, i: int) -> ModMap:
        return ModMap(self.term(i), self.term(i + 1), self.dmat(i))

    def is_zero(self) -> bool:
        return all(m.is_zero() for m in self.terms.values())

    def d_squared_violations(self) -> list[int]:
        bad = []
        for i in range(self.lo - 1, self.hi + 1):
            if not (self.d(i + 1) @ self.d(i)).is_zero():
                bad.append(i)
        return bad

    def well_defined_violations(self) -> list[int]:
        return [i for i in self.diffs if not self.d(i).is_well_defined()]

    def total_rank(self) -> int:
        return sum(m.r for m in self.terms.values())

    def __repr__(self):
        parts = [f"{i}:{list(self.term(i).invariants)}" for i in self.degrees]
        return f"Complex({self.ring}, {', '.join(parts)})"


# ---------------------------------------------------------------------------
# maps

class ChainMap:
    """A graded map of degree ``degree``: components A^i → B^{i+degree}.

    It is a chain map when closed, i.e. d_B f = (-1)^degree f d_A.
    """

    def __init__(self, source: Complex, target: Complex, comps: dict[int, np.ndarray] | None = None,
                 degree: int = 0):
        self.source, self.target, self.degree = source, target, degree
        ring = source.ring
        self.comps = {}
        for i, m in (comps or {}).items():
            s, t = source.term(i), target.term(i + degree)
            if s.r and t.r:
                if m.shape != (t.r, s.r):
                    raise ShapeMismatch(f"component {i}: {m.shape} vs {(t.r, s.r)}")
                self.comps[i] = rm.reduce_mat(ring, m)

    @property
    def ring(self):
        return self.source.ring

    def comp(self, i: int) -> np.ndarray:
        m = self.comps.get(i)
        if m is None:
            return rm.zeros(self.ring, self.target.term(i + self.degree).r, self.source.term(i).r)
        return m

    def modmap(self, i: int) -> ModMap:
        return ModMap(self.source.term(i), self.target.term(i + self.degree), self.comp(i))

    @classmethod
    def zero(cls, source, target, degree=0):
        return cls(source, target, {}, degree)

    @classmethod
    def identity(cls, c: Complex):
        return cls(c, c, {i: rm.identity(c.ring, c.term(i).r) for i in c.degrees})

    def differential(self) -> "ChainMap":
        """d(f) = d_B f - (-1)^n f d_A, a map of degree n+1."""
        n, ring = self.degree, self.ring
        out = {}
        for i in range(self.source.lo - 1, self.source.hi + 1):
            a = rm.mmul(ring, self.target.dmat(i + n), self.comp(i))
            b = rm.mmul(ring, self.comp(i + 1), self.source.dmat(i))
            out[i] = rm.reduce_mat(ring, a - _sign(n) * b)
        return ChainMap(self.source, self.target, out, n + 1)

    def is_closed(self) -> bool:
        return self.differential().is_zero()

    def is_zero(self) -> bool:
        return all(self.modmap(i).is_zero() for i in self.comps)

    def __matmul__(self, other: "ChainMap") -> "ChainMap":
        ring = self.ring
        out = {}
        for i in other.comps:
            out[i] = rm.mmul(ring, self.comp(i + other.degree), other.comp(i))
        return ChainMap(other.source, self.target, out, self.degree + other.degree)

    def _combine(self, other, c):
        if other.degree != self.degree:
            raise ShapeMismatch("adding maps of different degrees")
        keys = set(self.comps) | set(other.comps)
        ring = self.ring
        return ChainMap(self.source, self.target,
                        {i: rm.reduce_mat(ring, self.comp(i) + c * other.comp(i)) for i in keys}, self.degree)

    def __add__(self, other):
        return self._combine(other, 1)

    def __sub__(self, other):
        return self._combine(other, -1)

    def __neg__(self):
        return self.scale(-1)

    def scale(self, c) -> "ChainMap":
        ring = self.ring
        return ChainMap(self.source, self.target, {i: rm.mscale(ring, c, m) for i, m in self.comps.items()},
                        self.degree)

    def equals(self, other: "ChainMap") -> bool:
        return (self - other).is_zero()

    def __repr__(self):
        return f"ChainMap(deg={self.degree}, comps={sorted(self.comps)})"


Homotopy = ChainMap


def homotopy_identity_holds(f: ChainMap, h: ChainMap) -> bool:
    """Check d∘h + h∘d = f exactly (h of degree deg(f) - 1)."""
    return h.differential().equals(f)


# ---------------------------------------------------------------------------
# subquotients and cohomology

class Subquotient:
    """span(G) / (span(G) ∩ (span(Z) + relations)) inside an ambient module."""

    def __init__(self, ambient: FpModule, G: np.ndarray, Z: np.ndarray):
        ring = ambient.ring
        self.ambient = ambient
        G = rm.span_basis(ring.cover, G) if G.shape[1] else rm.zeros(ring, ambient.r, 0)
        self.G = rm.reduce_mat(ring, G)
        t = G.shape[1]
        parts = [p for p in (G, Z, ambient.aug_rel()) if p.shape[1]]
        full = np.hstack(parts) if parts else rm.zeros(ring, ambient.r, 0)
        ns = rm.nullspace(ring.cover, full) if full.shape[1] else rm.zeros(ring, 0, 0)
        R = ns[:t, :] if ns.shape[1] else rm.zeros(ring, t, 0)
        self.module = FpModule(ring, rm._strip_structural(ring, R), r=t)
        GZ = np.hstack([G, Z]) if Z.shape[1] else G
        self._solver = ModuleSolver(ambient, GZ) if GZ.shape[1] else None
        self._t = t

    def encode(self, x) -> np.ndarray | None:
        """Coordinates of x in the subquotient, or None if x ∉ span(G) + span(Z)."""
        if self._solver is None:
            return np.empty(0, dtype=object) if self.ambient.elem_is_zero(x) else None
        w = self._solver.solve(x)
        if w is None:
            return None
        return self.module.reduce(w[:self._t])

    def lift(self, vec) -> np.ndarray:
        col = np.empty((len(vec), 1), dtype=object)
        col[:, 0] = list(vec)
        return rm.mmul(self.ambient.ring, self.G, col)[:, 0]

    def basis(self) -> list[np.ndarray]:
        """Generators of the subquotient (lifted), one per surviving Smith coordinate."""
        out = []
        for k in range(len(self.module.nu)):
            y = [0] * len(self.module.nu)
            y[k] = 1
            out.append(self.lift(self.module.from_coords(y)))
        return out


def kernel_gens(c: Complex, n: int) -> np.ndarray:
    _, inc = rm.kernel(c.d(n))
    return inc.matrix


def cohomology_data(c: Complex, n: int) -> Subquotient:
    return Subquotient(c.term(n), kernel_gens(c, n), c.dmat(n - 1))


def cohomology(c: Complex, n: int) -> FpModule:
    """H^n(c) as a module (zero outside the support)."""
    if n < c.lo or n > c.hi:
        return zero_module(c.ring)
    return cohomology_data(c, n).module


def is_acyclic(c: Complex) -> bool:
    return all(cohomology(c, n).is_zero() for n in c.degrees)


def induced_map(f: ChainMap, n: int, hs: Subquotient | None = None, ht: Subquotient | None = None) -> np.ndarray:
    """Matrix of H^n(f): H^n(A) → H^{n+deg}(B) on subquotient generators."""
    hs = hs or cohomology_data(f.source, n)
    ht = ht or cohomology_data(f.target, n + f.degree)
    ring = f.ring
    cols = rm.zeros(ring, ht.module.r, hs.module.r)
    m = f.comp(n)
    for j in range(hs.G.shape[1]):
        y = rm.mmul(ring, m, hs.G[:, j:j + 1])[:, 0]
        v = ht.encode(y)
        cols[:, j] = v
    return cols


# ---------------------------------------------------------------------------
# constructions

def shift(c: Complex, k: int) -> Complex:
    s = _sign(k)
    return Complex(c.ring, {i - k: m for i, m in c.terms.items()},
                   {i - k: rm.mscale(c.ring, s, m) for i, m in c.diffs.items()})


def shift_map(f: ChainMap, k: int) -> ChainMap:
    """f[k] for a degree-0 map: same components, reindexed."""
    return ChainMap(shift(f.source, k), shift(f.target, k), {i - k: m for i, m in f.comps.items()}, f.degree)


@dataclass
class SumComplex:
    complex: Complex
    parts: list
    offsets: dict  # degree -> list of offsets per part

    def inclusion(self, k: int) -> ChainMap:
        c, part = self.complex, self.parts[k]
        comps = {}
        for i in part.degrees:
            m = rm.zeros(c.ring, c.term(i).r, part.term(i).r)
            o = self.offsets[i][k]
            for t in range(part.term(i).r):
                m[o + t, t] = c.ring.cover.one
            comps[i] = m
        return ChainMap(part, c, comps)

    def projection(self, k: int) -> ChainMap:
        c, part = self.complex, self.parts[k]
        comps = {}
        for i in part.degrees:
            m = rm.zeros(c.ring, part.term(i).r, c.term(i).r)
            o = self.offsets[i][k]
            for t in range(part.term(i).r):
                m[t, o + t] = c.ring.cover.one
            comps[i] = m
        return ChainMap(c, part, comps)

    def block(self, i: int, k: int) -> slice:
        o = self.offsets[i][k]
        return slice(o, o + self.parts[k].term(i).r)


def direct_sum(parts: Sequence[Complex], ring: Ring | None = None) -> SumComplex:
    ring = ring or (parts[0].ring if parts else None)
    degs = sorted({i for p in parts for i in p.terms})
    terms, diffs, offsets = {}, {}, {}
    for i in degs:
        offs, o = [], 0
        for p in parts:
            offs.append(o)
            o += p.term(i).r
        offsets[i] = offs
        terms[i] = rm.direct_sum([p.term(i) for p in parts], ring)
    for i in degs:
        if i + 1 in terms:
            diffs[i] = rm.block_diag(ring, [p.dmat(i) for p in parts])
    for i in degs:
        offsets.setdefault(i - 1, [0] * len(parts))
        offsets.setdefault(i + 1, [0] * len(parts))
    return SumComplex(Complex(ring, terms, diffs), list(parts), offsets)


def block_map(src: SumComplex, tgt: SumComplex, blocks: dict[tuple[int, int], ChainMap], degree: int = 0) -> ChainMap:
    """Assemble a map between sums from blocks keyed by (target part, source part)."""
    ring = src.complex.ring
    comps = {}
    for i in src.complex.degrees:
        j = i + degree
        m = rm.zeros(ring, tgt.complex.term(j).r, src.complex.term(i).r)
        if m.size:
            for (a, b), f in blocks.items():
                if f.source.term(i).r and f.target.term(j).r:
                    m[tgt.block(j, a), src.block(i, b)] = f.comp(i)
        comps[i] = m
    return ChainMap(src.complex, tgt.complex, comps, degree)


@dataclass
class Cone:
    complex: Complex
    to_cone: ChainMap      # B → cone(f)
    from_cone: ChainMap    # cone(f) → A[1]
    f: ChainMap

    def split(self, i: int) -> tuple[slice, slice]:
        ra = self.f.source.term(i + 1).r
        rb = self.f.target.term(i).r
        return slice(0, ra), slice(ra, ra + rb)


def cone(f: ChainMap) -> Cone:
    if f.degree != 0:
        raise ShapeMismatch("cone needs a degree-0 map")
    A, B, ring = f.source, f.target, f.ring
    degs = sorted(set(range(A.lo - 1, A.hi)) | set(B.degrees))
    terms = {i: rm.direct_sum([A.term(i + 1), B.term(i)], ring) for i in degs}
    diffs = {}
    for i in degs:
        ra, rb = A.term(i + 1).r, B.term(i).r
        ra2, rb2 = A.term(i + 2).r, B.term(i + 1).r
        m = rm.zeros(ring, ra2 + rb2, ra + rb)
        m[:ra2, :ra] = rm.mscale(ring, -1, A.dmat(i + 1))
        m[ra2:, :ra] = f.comp(i + 1)
        m[ra2:, ra:] = B.dmat(i)
        diffs[i] = m
    C = Complex(ring, terms, diffs)
    inc, pr = {}, {}
    A1 = shift(A, 1)
    for i in degs:
        ra, rb = A.term(i + 1).r, B.term(i).r
        m = rm.zeros(ring, ra + rb, rb)
        for t in range(rb):
            m[ra + t, t] = ring.cover.one
        inc[i] = m
        p = rm.zeros(ring, ra, ra + rb)
        for t in range(ra):
            p[t, t] = ring.cover.one
        pr[i] = p
    return Cone(C, ChainMap(B, C, inc), ChainMap(C, A1, pr), f)


def cone_map(f: ChainMap, g: ChainMap, a: ChainMap, b: ChainMap, cf: Cone | None = None,
             cg: Cone | None = None) -> ChainMap:
    """Map cone(f) → cone(g) induced by a strictly commuting square (a, b)."""
    cf = cf or cone(f)
    cg = cg or cone(g)
    ring = f.ring
    comps = {}
    for i in cf.complex.degrees:
        sa, sb = cf.split(i)
        ta, tb = cg.split(i)
        m = rm.zeros(ring, cg.complex.term(i).r, cf.complex.term(i).r)
        m[ta, sa] = a.comp(i + 1)
        m[tb, sb] = b.comp(i)
        comps[i] = m
    return ChainMap(cf.complex, cg.complex, comps)


def compose_list(maps: Sequence[ChainMap]) -> ChainMap:
    out = maps[-1]
    for m in reversed(maps[:-1]):
        out = m @ out
    return out


# truncations

def trunc_le(c: Complex, k: int) -> tuple[Complex, ChainMap]:
    """Smart truncation τ^{≤k}: keeps ker d^k in degree k; returns (τ, inclusion)."""
    ring = c.ring
    terms = {i: m for i, m in c.terms.items() if i < k}
    diffs = {i: m for i, m in c.diffs.items() if i < k - 1}
    K, inc = rm.kernel(c.d(k))
    terms[k] = K
    if K.r and c.term(k - 1).r:
        fac = rm.factors_through(c.d(k - 1), inc)
        diffs[k - 1] = fac.matrix
    T = Complex(ring, terms, diffs)
    comps = {i: rm.identity(ring, c.term(i).r) for i in c.degrees if i < k}
    comps[k] = inc.matrix
    return T, ChainMap(T, c, comps)


def trunc_ge(c: Complex, k: int) -> tuple[Complex, ChainMap]:
    """Smart truncation τ^{≥k}: coker d^{k-1} in degree k; returns (τ, projection)."""
    ring = c.ring
    terms = {i: m for i, m in c.terms.items() if i > k}
    diffs = {i: m for i, m in c.diffs.items() if i >= k}
    Q, _ = rm.cokernel(c.d(k - 1))
    terms[k] = Q
    T = Complex(ring, terms, diffs)
    comps = {i: rm.identity(ring, c.term(i).r) for i in c.degrees if i >= k}
    return T, ChainMap(c, T, comps)


def v_object(modules: Sequence[tuple[int, FpModule]], ring: Ring | None = None) -> Complex:
    """Complex with zero differentials carrying the given modules."""
    if not modules:
        return Complex.zero(ring) if ring is not None else None
    ring = ring or modules[0][1].ring
    by_deg: dict[int, list[FpModule]] = {}
    for i, m in modules:
        by_deg.setdefault(i, []).append(m)
    return Complex(ring, {i: rm.direct_sum(ms, ring) for i, ms in by_deg.items()})


def biproduct_check(parts: Sequence[Complex]) -> bool:
    """The finite sum is simultaneously a product and a coproduct, on the nose."""
    s = direct_sum(parts)
    ids = ChainMap.identity(s.complex)
    total = None
    for k, p in enumerate(parts):
        for j, q in enumerate(parts):
            comp = s.projection(j) @ s.inclusion(k)
            want = ChainMap.identity(p) if j == k else ChainMap.zero(p, q)
            if not comp.equals(want):
                return False
        term = s.inclusion(k) @ s.projection(k)
        total = term if total is None else total + term
        if not (s.inclusion(k).is_closed() and s.projection(k).is_closed()):
            return False
    return total is None or total.equals(ids)


# ---------------------------------------------------------------------------
# Hom complexes

class HomComplex(Complex):
    """hom(A, B) over the base ring, with element encode/decode."""

    def __init__(self, a: Complex, b: Complex):
        if a.ring != b.ring:
            raise ShapeMismatch("hom between different rings")
        self.src, self.tgt = a, b
        base = a.ring.base
        self.blocks: dict[int, list[tuple[int, HomModule, int]]] = {}
        terms = {}
        if a.terms and b.terms:
            for n in range(b.lo - a.hi, b.hi - a.lo + 1):
                blist, off, ds = [], 0, []
                for i in a.degrees:
                    if a.term(i).r and b.term(i + n).r:
                        h = HomModule(a.term(i), b.term(i + n))
                        if h.dim:
                            blist.append((i, h, off))
                            off += h.dim
                            ds.extend(h.module._diag)
                if blist:
                    self.blocks[n] = blist
                    terms[n] = FpModule.diag(base, ds)
        super().__init__(base, terms, {})
        for n in self.terms:
            if n + 1 in self.terms:
                self.diffs[n] = self._dmatrix(n)

    def decode(self, n: int, vec) -> ChainMap:
        comps = {}
        for i, h, off in self.blocks.get(n, []):
            comps[i] = h.decode(vec[off:off + h.dim])
        return ChainMap(self.src, self.tgt, comps, n)

    def encode(self, f: ChainMap) -> np.ndarray:
        n = f.degree
        out = np.empty(self.term(n).r, dtype=object)
        for i, h, off in self.blocks.get(n, []):
            out[off:off + h.dim] = h.encode(f.comp(i))
        return out

    def _dmatrix(self, n: int) -> np.ndarray:
        r = self.term(n).r
        m = rm.zeros(self.ring, self.term(n + 1).r, r)
        for k in range(r):
            e = [0] * r
            e[k] = 1
            m[:, k] = self.encode(self.decode(n, e).differential())
        return m

    def basis(self, n: int) -> list[ChainMap]:
        r = self.term(n).r
        out = []
        for k in range(r):
            e = [0] * r
            e[k] = 1
            out.append(self.decode(n, e))
        return out


def hom_complex(a: Complex, b: Complex) -> HomComplex:
    return HomComplex(a, b)


def interior_cohomology(hc: HomComplex, n: int, lo: int, hi: int) -> FpModule:
    """Cohomology of hom(A, B) seen through components with source degree in [lo, hi].

    Only the cycle conditions touching those components are imposed (the
    ones at source degrees lo-1..hi); cycles and boundaries are then
    restricted to the components and the quotient of the two images is
    returned.  Conditions coming from the ends of a finite window never enter.
    """
    ring = hc.ring

    def rows(m, a, b):
        out, ds = [], []
        for i, h, off in hc.blocks.get(m, []):
            if a <= i <= b:
                out.extend(range(off, off + h.dim))
                ds.extend(h.module._diag)
        return out, ds

    keep, ds = rows(n, lo, hi)
    if not keep:
        return zero_module(ring)
    target = FpModule.diag(ring, ds)
    crow, cds = rows(n + 1, lo - 1, hi)
    if crow:
        cond = ModMap(hc.term(n), FpModule.diag(ring, cds), hc.dmat(n)[crow, :])
        Z = rm.kernel(cond)[1].matrix[keep, :]
    else:
        Z = rm.identity(ring, hc.term(n).r)[keep, :]
    B = hc.dmat(n - 1)[keep, :]
    return Subquotient(target, Z, B).module


def solve_homotopy(f: ChainMap, hc: HomComplex | None = None) -> ChainMap | None:
    """h of degree deg(f)-1 with d∘h + h∘d = f (suitably signed), or None."""
    hc = hc or HomComplex(f.source, f.target)
    n = f.degree
    target = hc.term(n)
    if target.r == 0:
        return ChainMap.zero(f.source, f.target, n - 1)
    rhs = hc.encode(f)
    x = ModuleSolver(target, hc.dmat(n - 1)).solve(rhs)
    if x is None:
        return None
    return hc.decode(n - 1, x)


def null_homotopic(f: ChainMap) -> bool:
    return solve_homotopy(f) is not None


def homotopic(f: ChainMap, g: ChainMap) -> bool:
    return null_homotopic(f - g)


def contracting_homotopy(c: Complex) -> ChainMap | None:
    return solve_homotopy(ChainMap.identity(c))


@dataclass
class HeqResult:
    ok: bool
    inverse: ChainMap | None = None
    h_source: ChainMap | None = None   # g∘f - id_A = d h + h d
    h_target: ChainMap | None = None   # f∘g - id_B = d h + h d
    witness_degree: int | None = None
    reason: str = ""

    def __bool__(self):
        return self.ok


def _first_nonsplit_cycle(c: Complex) -> int | None:
    """First degree whose cycles are not a direct summand of the term."""
    for n in c.degrees:
        Z, inc = rm.kernel(c.d(n))
        if Z.is_zero():
            continue
        h = HomModule(c.term(n), Z)
        idZ = HomModule(Z, Z)
        target = idZ.encode(rm.identity(c.ring, Z.r))
        cols = [idZ.encode(rm.mmul(c.ring, b.matrix, inc.matrix)) for b in h.basis()]
        A = rm.zeros(c.ring.base, idZ.dim, len(cols))
        for j, col in enumerate(cols):
            A[:, j] = col
        if ModuleSolver(idZ.module, A).solve(target) is None:
            return n
    return None


def is_homotopy_equivalence(f: ChainMap) -> HeqResult:
    """Decide whether f is a homotopy equivalence via contractibility of its cone."""
    cf = cone(f)
    C = cf.complex
    h = contracting_homotopy(C)
    if h is None:
        for n in C.degrees:
            if not cohomology(C, n).is_zero():
                return HeqResult(False, witness_degree=n, reason="cone has cohomology")
        return HeqResult(False, witness_degree=_first_nonsplit_cycle(C), reason="cone acyclic but not contractible")
    A, B, ring = f.source, f.target, f.ring
    g, hA, hB = {}, {}, {}
    for i in range(min(A.lo, B.lo) - 1, max(A.hi, B.hi) + 2):
        sa, sb = cf.split(i)           # cone^i = A^{i+1} ⊕ B^i
        ta, tb = cf.split(i - 1)       # cone^{i-1} = A^i ⊕ B^{i-1}
        hi_ = h.comp(i)
        if B.term(i).r and A.term(i).r:
            g[i] = hi_[ta, sb]
        if A.term(i + 1).r and A.term(i).r:
            hA[i + 1] = hi_[ta, sa]
        if B.term(i).r and B.term(i - 1).r:
            hB[i] = rm.mscale(ring, -1, hi_[tb, sb])
    gm = ChainMap(B, A, g)
    HA = ChainMap(A, A, hA, -1)
    HB = ChainMap(B, B, hB, -1)
    res = HeqResult(True, gm, HA, HB)
    assert verify_heq(f, res), "homotopy-equivalence certificate failed to verify"
    return res


def verify_heq(f: ChainMap, res: HeqResult) -> bool:
    g = res.inverse
    if not (g.is_closed() and f.is_closed()):
        return False
    ok_a = homotopy_identity_holds(g @ f - ChainMap.identity(f.source), res.h_source)
    ok_b = homotopy_identity_holds(f @ g - ChainMap.identity(f.target), res.h_target)
    return ok_a and ok_b


def is_quasi_isomorphism(f: ChainMap) -> bool:
    return is_acyclic(cone(f).complex)


# ---------------------------------------------------------------------------
# tensor products

def tensor_modules(M: FpModule, N: FpModule) -> FpModule:
    ring = M.ring
    if M._diag is not None and N._diag is not None:
        cover = ring.cover
        return FpModule.diag(ring, [rm.cover_gcd(cover, a, b) for a in M._diag for b in N._diag])
    rels = []
    IM, IN = rm.identity(ring, M.r), rm.identity(ring, N.r)
    if M.rel.shape[1]:
        rels.append(np.kron(M.rel, IN))
    if N.rel.shape[1]:
        rels.append(np.kron(IM, N.rel))
    rel = np.hstack(rels) if rels else rm.zeros(ring, M.r * N.r, 0)
    return FpModule(ring, rel, r=M.r * N.r)


class TensorComplex(Complex):
    """A ⊗ B with Koszul signs; generator (x_a, y_b) of A^i ⊗ B^j sits at offset + a*|B^j| + b."""

    def __init__(self, a: Complex, b: Complex):
        ring = a.ring
        self.left, self.right = a, b
        self.blocks: dict[int, list[tuple[int, int, int]]] = {}
        terms = {}
        if a.terms and b.terms:
            for n in range(a.lo + b.lo, a.hi + b.hi + 1):
                bl, off, mods = [], 0, []
                for i in a.degrees:
                    j = n - i
                    if a.term(i).r and b.term(j).r:
                        bl.append((i, j, off))
                        off += a.term(i).r * b.term(j).r
                        mods.append(tensor_modules(a.term(i), b.term(j)))
                if bl:
                    self.blocks[n] = bl
                    terms[n] = rm.direct_sum(mods, ring)
        super().__init__(ring, terms, {})
        for n in self.terms:
            if n + 1 in self.terms:
                self.diffs[n] = self._dmatrix(n)

    def offset(self, n: int, i: int) -> int | None:
        for ii, _, off in self.blocks.get(n, []):
            if ii == i:
                return off
        return None

    def _dmatrix(self, n: int) -> np.ndarray:
        a, b, ring = self.left, self.right, self.ring
        m = rm.zeros(ring, self.term(n + 1).r, self.term(n).r)
        for i, j, off in self.blocks[n]:
            ra, rb = a.term(i).r, b.term(j).r
            o1 = self.offset(n + 1, i + 1)
            if o1 is not None:
                da = a.dmat(i)
                rb1 = b.term(j).r
                blk = np.kron(da, rm.identity(ring, rb1))
                m[o1:o1 + blk.shape[0], off:off + ra * rb] = blk
            o2 = self.offset(n + 1, i)
            if o2 is not None:
                db = b.dmat(j)
                blk = np.kron(rm.identity(ring, ra), db) * _sign(i)
                m[o2:o2 + blk.shape[0], off:off + ra * rb] = \
                    rm.reduce_mat(ring, m[o2:o2 + blk.shape[0], off:off + ra * rb] + blk)
        return rm.reduce_mat(ring, m)

    def pure(self, i: int, x, j: int, y) -> np.ndarray:
        """The element x ⊗ y (x ∈ A^i, y ∈ B^j) as a vector in degree i+j."""
        n = i + j
        out = np.empty(self.term(n).r, dtype=object)
        out.fill(self.ring.cover.zero)
        off = self.offset(n, i)
        if off is not None:
            v = np.kron(np.asarray(list(x), dtype=object), np.asarray(list(y), dtype=object))
            out[off:off + len(v)] = [self.ring.reduce(t) for t in v]
        return out


def tensor(a: Complex, b: Complex) -> TensorComplex:
    return TensorComplex(a, b)


def map_from_bilinear(t: TensorComplex, target: Complex,
                      fn: Callable[[int, np.ndarray, int, np.ndarray], np.ndarray], degree: int = 0) -> ChainMap:
    """Graded map A ⊗ B → target defined on generator pairs by ``fn``."""
    a, b, ring = t.left, t.right, t.ring
    comps = {}
    for n, bl in t.blocks.items():
        tr = target.term(n + degree).r
        m = rm.zeros(ring, tr, t.term(n).r)
        for i, j, off in bl:
            ra, rb = a.term(i).r, b.term(j).r
            for p in range(ra):
                x = [0] * ra
                x[p] = 1
                for q in range(rb):
                    y = [0] * rb
                    y[q] = 1
                    v = fn(i, np.array(x, dtype=object), j, np.array(y, dtype=object))
                    if tr:
                        m[:, off + p * rb + q] = v
        comps[n] = m
    return ChainMap(t, target, comps, degree)


# ---------------------------------------------------------------------------
# telescopes

@dataclass
class InverseSequence:
    """A_1 ← A_2 ← ... ← A_N with φ_n: A_{n+1} → A_n and a tail rule.

    tail = "constant": A_n = A_N and φ_n = id for n ≥ N;
    tail = "zero": A_n = 0 for n > N.
    """

    complexes: list
    maps: list
    tail: str = "constant"

    def __post_init__(self):
        if len(self.maps) != len(self.complexes) - 1:
            raise ShapeMismatch("need one map per consecutive pair")

    @property
    def N(self) -> int:
        return len(self.complexes)


class Telescope(Complex):
    """holim = cone(F: P → Q)[-1] with F = π - ψ; degree i is P^i ⊕ Q^{i-1}.

    P = ∏_{n≤N} A_n.  Q = ∏_{n<N} A_n for a constant tail (the identity tail
    is absorbed exactly), ∏_{n≤N} A_n for a zero tail.
    """

    def __init__(self, seq: InverseSequence):
        if seq.tail not in ("constant", "zero"):
            raise UnboundedProduct(f"tail rule {seq.tail!r} does not finitize the product")
        ring = seq.complexes[0].ring
        self.seq = seq
        N = seq.N
        self.qidx = list(range(N - 1)) if seq.tail == "constant" else list(range(N))
        self.P = direct_sum(seq.complexes, ring)
        self.Q = direct_sum([seq.complexes[n] for n in self.qidx], ring)
        Pc, Qc = self.P.complex, self.Q.complex
        # F = π - ψ : P → Q
        blocks = {}
        for qk, n in enumerate(self.qidx):
            blocks[(qk, n)] = ChainMap.identity(seq.complexes[n])
            if n + 1 < N:
                blocks[(qk, n + 1)] = -seq.maps[n]
        self.F = block_map(self.P, self.Q, blocks)
        degs = sorted(set(Pc.degrees) | {i + 1 for i in Qc.degrees})
        terms, diffs = {}, {}
        for i in degs:
            terms[i] = rm.direct_sum([Pc.term(i), Qc.term(i - 1)], ring)
        for i in degs:
            rp, rq = Pc.term(i).r, Qc.term(i - 1).r
            rp1, rq1 = Pc.term(i + 1).r, Qc.term(i).r
            m = rm.zeros(ring, rp1 + rq1, rp + rq)
            m[:rp1, :rp] = Pc.dmat(i)
            m[rp1:, :rp] = rm.mscale(ring, -1, self.F.comp(i))
            m[rp1:, rp:] = rm.mscale(ring, -1, Qc.dmat(i - 1))
            diffs[i] = m
        super().__init__(ring, terms, diffs)

    def split(self, i: int) -> tuple[slice, slice]:
        rp = self.P.complex.term(i).r
        return slice(0, rp), slice(rp, rp + self.Q.complex.term(i - 1).r)

    def projection(self, n: int = 0) -> ChainMap:
        """Canonical map holim → A_{n+1} (0-based index n)."""
        A = self.seq.complexes[n]
        comps = {}
        for i in self.degrees:
            sp, _ = self.split(i)
            m = rm.zeros(self.ring, A.term(i).r, self.term(i).r)
            if A.term(i).r:
                m[:, sp] = self.P.projection(n).comp(i)
            comps[i] = m
        return ChainMap(self, A, comps)


def telescope_holim(seq: InverseSequence) -> Telescope:
    return Telescope(seq)


def inverse_limit_cohomology(seq: InverseSequence, n: int) -> FpModule:
    """lim_k H^n(A_k) computed on cohomology (eventually constant towers)."""
    ring = seq.complexes[0].ring
    H = [cohomology_data(c, n) for c in seq.complexes]
    N = seq.N
    if seq.tail == "zero":
        return zero_module(ring)
    mods = [h.module for h in H]
    P = rm.direct_sum(mods, ring)
    Q = rm.direct_sum(mods[:-1], ring) if N > 1 else zero_module(ring)
    offs = np.cumsum([0] + [m.r for m in mods])
    m = rm.zeros(ring, Q.r, P.r)
    for k in range(N - 1):
        m[offs[k]:offs[k + 1], offs[k]:offs[k + 1]] = rm.identity(ring, mods[k].r)
        phi = induced_map(seq.maps[k], n, H[k + 1], H[k])
        m[offs[k]:offs[k + 1], offs[k + 1]:offs[k + 2]] = rm.mscale(ring, -1, phi)
    K, _ = rm.kernel(ModMap(P, Q, m))
    return K


def check_pairing(seqs: Sequence[InverseSequence], mus: Sequence[ChainMap]) -> list[int]:
    """Indices n where μ_n∘(φ⊗φ) ≠ φ∘μ_{n+1}."""
    A, B, C = seqs
    bad = []
    for n in range(len(mus) - 1):
        ta = tensor(A.complexes[n + 1], B.complexes[n + 1])
        lhs = mus[n] @ tensor_map(A.maps[n], B.maps[n], ta, mus[n].source)
        rhs = C.maps[n] @ mus[n + 1]
        if not lhs.equals(rhs):
            bad.append(n)
    return bad


def tensor_map(f: ChainMap, g: ChainMap, src: TensorComplex, tgt: TensorComplex) -> ChainMap:
    """f ⊗ g for degree-0 maps."""
    def fn(i, x, j, y):
        return tgt.pure(i, f.modmap(i).apply(x), j, g.modmap(j).apply(y))
    return map_from_bilinear(src, tgt, fn)


def telescope_mul(seqs: Sequence[InverseSequence], mus: Sequence[ChainMap]) -> ChainMap:
    """Θ: holim A ⊗ holim B → holim C built from pairings μ_n: A_n ⊗ B_n → C_n.

    On P ⊕ Q[-1] components:
      x1⊗x2 ↦ (μ(x1⊗x2), 0),  y1⊗x2 ↦ (0, μ(y1⊗πx2)),
      x1⊗y2 ↦ (0, (-1)^{|x1|} μ(ψx1⊗y2)),  y1⊗y2 ↦ 0.
    """
    A, B, C = seqs
    if not (A.N == B.N == C.N == len(mus)) or len({A.tail, B.tail, C.tail}) != 1:
        raise IncompatiblePairing("sequences must share length and tail rule")
    bad = check_pairing(seqs, mus)
    if bad:
        raise IncompatiblePairing(f"compatibility square fails at n={bad[0] + 1}")
    TA, TB, TC = telescope_holim(A), telescope_holim(B), telescope_holim(C)
    T = tensor(TA, TB)
    ring = T.ring
    N = A.N

    def mu_apply(n, i, x, j, y):
        src = mus[n].source
        return mus[n].modmap(i + j).apply(src.pure(i, x, j, y))

    def fn(i, xv, j, yv):
        out = np.empty(TC.term(i + j).r, dtype=object)
        out.fill(ring.cover.zero)
        spa, sqa = TA.split(i)
        spb, sqb = TB.split(j)
        spc, sqc = TC.split(i + j)
        xa, ya = xv[spa], xv[sqa]
        xb, yb = yv[spb], yv[sqb]
        # P-part of the product
        for n in range(N):
            an = xa[TA.P.block(i, n)] if A.complexes[n].term(i).r else None
            bn = xb[TB.P.block(j, n)] if B.complexes[n].term(j).r else None
            if an is not None and bn is not None and any(v != 0 for v in an) and any(v != 0 for v in bn):
                if C.complexes[n].term(i + j).r:
                    blk = TC.P.block(i + j, n)
                    out[spc][blk] = out[spc][blk] + mu_apply(n, i, an, j, bn)
        qc = out[sqc]
        for qk, n in enumerate(TC.qidx):
            if not C.complexes[n].term(i + j - 1).r:
                continue
            blk = TC.Q.block(i + j - 1, qk)
            acc = np.zeros(blk.stop - blk.start, dtype=object)
            # y1 ⊗ π x2
            if A.complexes[n].term(i - 1).r and B.complexes[n].term(j).r:
                y1 = ya[TA.Q.block(i - 1, qk)]
                x2 = xb[TB.P.block(j, n)]
                acc = acc + mu_apply(n, i - 1, y1, j, x2)
            # (-1)^{|x1|} ψ x1 ⊗ y2, ψ(x)_n = φ_n(x_{n+1})
            if n + 1 < N and A.complexes[n].term(i).r and B.complexes[n].term(j - 1).r \
                    and A.complexes[n + 1].term(i).r:
                x1 = xa[TA.P.block(i, n + 1)]
                px1 = A.maps[n].modmap(i).apply(x1)
                y2 = yb[TB.Q.block(j - 1, qk)]
                acc = acc + _sign(i) * mu_apply(n, i, px1, j - 1, y2)
            qc[blk] = acc
        out[sqc] = qc
        return np.array([ring.reduce(v) for v in out], dtype=object)

    return map_from_bilinear(T, TC, fn)


# ---------------------------------------------------------------------------
# subcomplexes with Smith-coordinate presentations

class SubComplex(Complex):
    """A subcomplex of ``ambient`` spanned degreewise by generator columns.

    Terms are presented diagonally through the Smith coordinates of each
    submodule; ``decode`` maps coordinates back into the ambient complex.
    """

    def __init__(self, ambient: Complex, gens: dict[int, np.ndarray]):
        ring = ambient.ring
        self.ambient = ambient
        self._sub = {}
        terms = {}
        for n, G in gens.items():
            A = ambient.term(n)
            if not A.r or not G.shape[1]:
                continue
            K, inc = rm.submodule(A, G)
            if K.is_zero():
                continue
            self._sub[n] = (K, inc, ModuleSolver(A, inc.matrix))
            terms[n] = FpModule.diag(ring, K.invariants)
        super().__init__(ring, terms, {})
        for n in self.terms:
            if n + 1 in self.terms:
                self.diffs[n] = self._dmatrix(n)
            elif n + 1 not in self.terms:
                for k in range(self.term(n).r):
                    e = [0] * self.term(n).r
                    e[k] = 1
                    if not ambient.term(n + 1).elem_is_zero(self._ambient_d(n, e)):
                        raise ShapeMismatch(f"generators in degree {n} are not closed under d")

    def _ambient_d(self, n, vec):
        x = self.decode(n, vec)
        col = np.empty((len(x), 1), dtype=object)
        col[:, 0] = list(x)
        return rm.mmul(self.ring, self.ambient.dmat(n), col)[:, 0]

    def decode(self, n: int, vec) -> np.ndarray:
        if n not in self._sub:
            return np.array([self.ring.cover.zero] * self.ambient.term(n).r, dtype=object)
        K, inc, _ = self._sub[n]
        w = K.from_coords(list(vec))
        return inc.apply(w)

    def encode(self, n: int, x) -> np.ndarray | None:
        if n not in self._sub:
            return np.empty(0, dtype=object) if self.ambient.term(n).elem_is_zero(x) else None
        K, _, solver = self._sub[n]
        w = solver.solve(x)
        if w is None:
            return None
        return np.array(K.coords(w), dtype=object)

    def contains(self, n: int, x) -> bool:
        return self.encode(n, x) is not None

    def _dmatrix(self, n):
        r = self.term(n).r
        m = rm.zeros(self.ring, self.term(n + 1).r, r)
        for k in range(r):
            e = [0] * r
            e[k] = 1
            v = self.encode(n + 1, self._ambient_d(n, e))
            if v is None:
                raise ShapeMismatch(f"generators in degree {n} are not closed under d")
            m[:, k] = v
        return m

    def inclusion(self) -> ChainMap:
        comps = {}
        for n in self.terms:
            r = self.term(n).r
            m = rm.zeros(self.ring, self.ambient.term(n).r, r)
            for k in range(r):
                e = [0] * r
                e[k] = 1
                m[:, k] = self.decode(n, e)
            comps[n] = m
        return ChainMap(self, self.ambient, comps)
