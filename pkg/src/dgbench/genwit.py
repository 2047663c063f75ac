"""Generation witnesses: complexes from zero-differential objects in three steps.

For a bounded complex A with kernels K^i = ker d^i and d^{i-1} = ι^i ∘ α^i:

* V1 = ⊕ A^{i-1}[-i] and V2 = ⊕ K^i[-i] have zero differential;
* C = cone(α: V1 → V2) splits as the two-term pieces (A^{i-1} → K^i);
* u = φ + ψ: V2 → C is (ι, id) degreewise;
* cone(u) ≅ A ⊕ cone(id_{V2}) by the explicit isomorphism

      (k', a, k) ↦ ((-1)^j (a - ι k), k' + α a, k)

  on cone(u)^j = K^{j+1} ⊕ A^j ⊕ K^j.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import cx
from . import ringmod as rm
from .cx import ChainMap, Complex
from .dgcore import ConcreteCat, find_h0_iso, h0, invert_in_h0


def _sign(k: int) -> int:
    return -1 if k % 2 else 1


@dataclass
class GenWitness:
    a: Complex
    kernels: dict          # i -> (K^i, inclusion ModMap)
    alpha: dict            # i -> matrix of α^i: A^{i-1} → K^i
    v1: Complex
    v2: Complex
    alpha_map: ChainMap    # V1 → V2
    c: cx.Cone             # cone(α)
    u: ChainMap            # φ + ψ: V2 → C
    phi: ChainMap
    psi: ChainMap
    cone_u: cx.Cone
    target: cx.SumComplex  # A ⊕ cone(id_{V2})
    forward: ChainMap      # cone(u) → A ⊕ cone(id)
    backward: ChainMap

    def check(self) -> dict:
        """Re-verify every certificate."""
        fw, bw = self.forward, self.backward
        return {
            "alpha_closed": self.alpha_map.is_closed(),
            "u_closed": self.u.is_closed(),
            "u_is_phi_plus_psi": self.u.equals(self.phi + self.psi),
            "forward_closed": fw.is_closed(),
            "backward_closed": bw.is_closed(),
            "forward_backward_id": (fw @ bw).equals(ChainMap.identity(self.target.complex)),
            "backward_forward_id": (bw @ fw).equals(ChainMap.identity(self.cone_u.complex)),
            "factorization": all(self._factor_ok(i) for i in self.alpha),
        }

    def _factor_ok(self, i) -> bool:
        K, inc = self.kernels[i]
        d = self.a.dmat(i - 1)
        comp = rm.mmul(self.a.ring, inc.matrix, self.alpha[i])
        return self.a.term(i).columns_zero(rm.reduce_mat(self.a.ring, comp - d))

    @property
    def ok(self) -> bool:
        return all(self.check().values())

    def projection_to_a(self) -> ChainMap:
        """cone(u) → A, a homotopy equivalence (the complement is contractible)."""
        return self.target.projection(0) @ self.forward

    def heq_to_a(self) -> cx.HeqResult:
        """Explicit inverse and homotopies for cone(u) → A, re-verified.

        The inverse is backward∘incl_A.  On A ⊕ cone(id_{V2}) the projection
        onto the cone summand is d s + s d for s(v', v) = (v, 0), so
        g∘f - id = -(d H + H d) with H = backward∘s∘forward.
        """
        ring, T = self.a.ring, self.target
        E = cx.cone(ChainMap.identity(self.v2))
        s = {}
        for j in T.complex.degrees:
            if not T.complex.term(j - 1).r:
                continue
            m = rm.zeros(ring, T.complex.term(j - 1).r, T.complex.term(j).r)
            rk = self.v2.term(j).r
            if rk:
                _, src_v = E.split(j)
                dst_v1, _ = E.split(j - 1)
                m[_sub(T.block(j - 1, 1), dst_v1), _sub(T.block(j, 1), src_v)] = rm.identity(ring, rk)
            s[j] = m
        S = ChainMap(T.complex, T.complex, s, -1)
        f = self.projection_to_a()
        g = self.backward @ T.inclusion(0)
        H = (self.backward @ S @ self.forward).scale(-1)
        res = cx.HeqResult(True, g, H, ChainMap.zero(self.a, self.a, -1))
        if not cx.verify_heq(f, res):
            return cx.HeqResult(False, reason="explicit certificate failed to verify")
        return res


def three_step_witness(a: Complex) -> GenWitness:
    ring = a.ring
    lo, hi = a.lo, a.hi
    kernels, alpha = {}, {}
    for i in a.degrees:
        K, inc = rm.kernel(a.d(i))
        kernels[i] = (K, inc)
    for i in a.degrees:
        K, inc = kernels[i]
        src = a.term(i - 1)
        if not src.r or not K.r:
            alpha[i] = rm.zeros(ring, K.r, src.r)
            continue
        f = rm.factors_through(a.d(i - 1), inc)
        assert f is not None, "d^{i-1} lands in the kernel"
        alpha[i] = f.matrix
    # A^{i-1} sits in degree i of V1, so V1 reaches one degree past A
    V1 = cx.v_object([(i, a.term(i - 1)) for i in range(lo, hi + 2) if a.term(i - 1).r], ring)
    V2 = cx.v_object([(i, kernels[i][0]) for i in a.degrees if kernels[i][0].r], ring)
    am = ChainMap(V1, V2, {i: alpha[i] for i in a.degrees if V1.term(i).r and V2.term(i).r})
    C = cx.cone(am)
    # u^i = (ι^i, id) into C^i = A^i ⊕ K^i
    phi_c, psi_c = {}, {}
    for i in V2.degrees:
        K, inc = kernels[i]
        sa, sk = C.split(i)
        rC = C.complex.term(i).r
        m_phi = rm.zeros(ring, rC, K.r)
        m_psi = rm.zeros(ring, rC, K.r)
        m_phi[sk, :] = rm.identity(ring, K.r)
        m_psi[sa, :] = inc.matrix
        phi_c[i], psi_c[i] = m_phi, m_psi
    phi = ChainMap(V2, C.complex, phi_c)
    psi = ChainMap(V2, C.complex, psi_c)
    u = phi + psi
    Cu = cx.cone(u)
    E = cx.cone(ChainMap.identity(V2))
    T = cx.direct_sum([a, E.complex], ring)
    fw, bw = {}, {}
    degrees = set(Cu.complex.terms) | set(T.complex.terms)
    for j in sorted(degrees):
        rs, rt = Cu.complex.term(j).r, T.complex.term(j).r
        F = rm.zeros(ring, rt, rs)
        G = rm.zeros(ring, rs, rt)
        s_kp, s_c = Cu.split(j)            # K^{j+1} | C^j
        cs_a, cs_k = C.split(j)            # inside C^j: A^j | K^j
        s_a = _sub(s_c, cs_a)
        s_k = _sub(s_c, cs_k)
        t_a = T.block(j, 0)
        e_kp, e_k = E.split(j)
        t_kp = _sub(T.block(j, 1), e_kp)
        t_k = _sub(T.block(j, 1), e_k)
        sg = _sign(j)
        ra = a.term(j).r
        rk = V2.term(j).r
        rkp = V2.term(j + 1).r
        if ra:
            F[t_a, s_a] = sg * rm.identity(ring, ra)
            G[s_a, t_a] = sg * rm.identity(ring, ra)
        if ra and rk:
            iota = kernels[j][1].matrix
            F[t_a, s_k] = -sg * iota
            G[s_a, t_k] = iota
        if rkp:
            F[t_kp, s_kp] = rm.identity(ring, rkp)
            G[s_kp, t_kp] = rm.identity(ring, rkp)
            if ra and j + 1 in alpha:
                F[t_kp, s_a] = alpha[j + 1]
                G[s_kp, t_a] = -sg * alpha[j + 1]
        if rk:
            F[t_k, s_k] = rm.identity(ring, rk)
            G[s_k, t_k] = rm.identity(ring, rk)
        fw[j], bw[j] = rm.reduce_mat(ring, F), rm.reduce_mat(ring, G)
    forward = ChainMap(Cu.complex, T.complex, fw)
    backward = ChainMap(T.complex, Cu.complex, bw)
    return GenWitness(a, kernels, alpha, V1, V2, am, C, u, phi, psi, Cu, T, forward, backward)


def _sub(outer: slice, inner: slice) -> slice:
    return slice(outer.start + inner.start, outer.start + inner.stop)


# ---------------------------------------------------------------------------
# bounded membership in gen<S>_n

@dataclass
class Triangle:
    """T1 → T → T2 realised as T = cone(g: T2[-1] → T1)."""
    t1: object
    t2: object
    g: ChainMap | None = None


@dataclass
class Membership:
    status: str                 # Member | NotWithinBound
    level: int | None = None
    witness: list = field(default_factory=list)

    def __bool__(self):
        return self.status == "Member"


def _shift_sums(S: Sequence[Complex], shifts: Sequence[int], size: int):
    """Sums of shifts of S-objects with at most ``size`` summands, smallest first."""
    atoms = [(j, n) for j in range(len(S)) for n in shifts]
    for k in range(1, size + 1):
        for combo in itertools.combinations_with_replacement(atoms, k):
            yield combo


def _realize(S, combo, ring) -> Complex:
    parts = [cx.shift(S[j], n) for j, n in combo]
    return cx.direct_sum(parts, ring).complex if len(parts) > 1 else parts[0]


def _profile(c: Complex) -> tuple:
    return tuple((n, cx.cohomology(c, n).iso_type()) for n in c.degrees if not cx.cohomology(c, n).is_zero())


def homotopy_equivalent(x: Complex, y: Complex, iso_limit: int = 4096):
    """A chain map x → y that is invertible up to homotopy, or None."""
    if _profile(x) != _profile(y):
        return None
    cat = ConcreteCat(x.ring, {"x": x, "y": y})
    res = find_h0_iso(cat, "x", "y", iso_limit)
    if res.found is None:
        return None
    return cat.as_maps(res.found)[0]


def _shift_range(S, t: Complex, slack: int = 1) -> list[int]:
    lo = min(t.lo - s.hi for s in S if s.terms) - slack
    hi = max(t.hi - s.lo for s in S if s.terms) + slack
    return list(range(lo, hi + 1))


def gen_membership(S: Sequence[Complex], t: Complex, n: int = 3, size: int = 3,
                   class_limit: int = 64) -> Membership:
    """Search gen<S>_level for level ≤ n, breadth-first and deterministic.

    Level 1 tests homotopy equivalence with sums of shifts of S; level 2 tests
    cones of maps T2[-1] → T1 between such sums (one representative per H^0
    class); level 3 uses the three-step witness when both zero-differential
    objects it needs lie in level 1.  Summands are not split off beyond
    homotopy equivalence.
    """
    if not t.terms or cx.is_acyclic(t):
        return Membership("Member", 1, ["zero object"])
    S = [s for s in S if s.terms]
    if not S:
        return Membership("NotWithinBound")
    ring = t.ring
    shifts = _shift_range(S, t)
    prof = _profile(t)
    level1 = []
    for combo in _shift_sums(S, shifts, size):
        X = _realize(S, combo, ring)
        level1.append((combo, X))
        if _profile(X) == prof and homotopy_equivalent(X, t) is not None:
            return Membership("Member", 1, [("sum", combo)])
    if n >= 2:
        for (c1, T1), (c2, T2) in itertools.product(level1, repeat=2):
            src = cx.shift(T2, -1)
            hc = cx.HomComplex(src, T1)
            H = cx.cohomology_data(hc, 0)
            mod = H.module
            if not mod.is_finite or (mod.cardinality() or 0) > class_limit:
                continue
            classes = list(mod.elements()) if mod.r else [np.zeros(0, dtype=object)]
            for cls in classes:
                g = hc.decode(0, H.lift(cls)) if mod.r else ChainMap.zero(src, T1)
                cn = cx.cone(g).complex
                if _profile(cn) == prof and homotopy_equivalent(cn, t) is not None:
                    return Membership("Member", 2, [Triangle(c1, c2, g)])
    if n >= 3:
        w = three_step_witness(t)
        if w.ok:
            m1 = gen_membership(S, w.v1, 1, size) if w.v1.terms else Membership("Member", 1, ["zero object"])
            m2 = gen_membership(S, w.v2, 1, size) if w.v2.terms else Membership("Member", 1, ["zero object"])
            if m1 and m2:
                # C = cone(V1 → V2) ∈ level 2, and cone(V2 → C) ≃ t
                return Membership("Member", 3, [Triangle("V2", "V1[1]", w.alpha_map),
                                                Triangle("C", "V2[1]", w.u), w])
    return Membership("NotWithinBound")
