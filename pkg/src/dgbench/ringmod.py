"""Exact linear algebra over small coefficient rings.

Supported rings are the integers, the integers mod n, the rationals and the
dual numbers F_p[x]/(x^2).  Every computation is lifted to a Euclidean
"cover" ring (Z, Q or F_p[x]) where the structural relation (n, nothing, x^2)
is appended as extra relation columns, so that a single Smith normal form
engine serves every ring.

Matrices are numpy object arrays whose entries are cover elements (``int``,
``Fraction`` or :class:`Poly`), always reduced to a canonical representative.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .errors import NoSolution, NotWellDefined, ShapeMismatch, UnsupportedRing


# ---------------------------------------------------------------------------
# polynomials over a prime field

class Poly:
    """Immutable polynomial over F_p, coefficients stored low degree first."""

    __slots__ = ("p", "c", "_h")

    def __init__(self, p: int, coeffs: Iterable[int] = ()):
        c = [int(a) % p for a in coeffs]
        while c and c[-1] == 0:
            c.pop()
        self.p = p
        self.c = tuple(c)
        self._h = None

    @classmethod
    def x(cls, p: int, k: int = 1) -> "Poly":
        return cls(p, [0] * k + [1])

    def _lift(self, other):
        if isinstance(other, Poly):
            return other
        if isinstance(other, int):
            return Poly(self.p, [other])
        return NotImplemented

    @property
    def degree(self) -> int:
        return len(self.c) - 1

    def __bool__(self):
        return bool(self.c)

    def __eq__(self, other):
        o = self._lift(other)
        if o is NotImplemented:
            return False
        return self.c == o.c

    def __hash__(self):
        if self._h is None:
            self._h = hash(self.c) if len(self.c) > 1 else hash(self.c[0] if self.c else 0)
        return self._h

    def __add__(self, other):
        o = self._lift(other)
        if o is NotImplemented:
            return o
        n = max(len(self.c), len(o.c))
        a = self.c + (0,) * (n - len(self.c))
        b = o.c + (0,) * (n - len(o.c))
        return Poly(self.p, [x + y for x, y in zip(a, b)])

    __radd__ = __add__

    def __neg__(self):
        return Poly(self.p, [-a for a in self.c])

    def __sub__(self, other):
        o = self._lift(other)
        if o is NotImplemented:
            return o
        return self + (-o)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._lift(other)
        if o is NotImplemented:
            return o
        if not self.c or not o.c:
            return Poly(self.p)
        out = [0] * (len(self.c) + len(o.c) - 1)
        for i, a in enumerate(self.c):
            if a:
                for j, b in enumerate(o.c):
                    out[i + j] += a * b
        return Poly(self.p, out)

    __rmul__ = __mul__

    def __divmod__(self, other):
        o = self._lift(other)
        if not o.c:
            raise ZeroDivisionError("polynomial division by zero")
        p = self.p
        r = list(self.c)
        q = [0] * max(len(r) - len(o.c) + 1, 0)
        inv = pow(o.c[-1], -1, p)
        while len(r) >= len(o.c) and r:
            shift = len(r) - len(o.c)
            coef = r[-1] * inv % p
            q[shift] = coef
            for j, b in enumerate(o.c):
                r[shift + j] = (r[shift + j] - coef * b) % p
            while r and r[-1] == 0:
                r.pop()
        return Poly(p, q), Poly(p, r)

    def __floordiv__(self, other):
        return divmod(self, other)[0]

    def __mod__(self, other):
        return divmod(self, other)[1]

    def coeff(self, k: int) -> int:
        return self.c[k] if k < len(self.c) else 0

    def __repr__(self):
        if not self.c:
            return "0"
        terms = []
        for k, a in enumerate(self.c):
            if not a:
                continue
            if k == 0:
                terms.append(str(a))
            else:
                mono = "x" if k == 1 else f"x^{k}"
                terms.append(mono if a == 1 else f"{a}{mono}")
        return "+".join(terms)


# ---------------------------------------------------------------------------
# Euclidean covers

class _IntCover:
    name = "Z"
    zero = 0
    one = 1
    is_field = False

    def coerce(self, a):
        if isinstance(a, Fraction):
            if a.denominator != 1:
                raise ValueError(f"{a} is not an integer")
            return int(a.numerator)
        return int(a)

    def size(self, a):
        return abs(a)

    def divmod(self, a, b):
        return divmod(a, b)

    def normal(self, a):
        """Return (u, a/u) with a/u the normalized associate and u a unit."""
        return (-1, -a) if a < 0 else (1, a)

    def unit_inverse(self, u):
        return u

    def is_unit(self, a):
        return a == 1 or a == -1


class _FieldCover:
    name = "Q"
    zero = Fraction(0)
    one = Fraction(1)
    is_field = True

    def coerce(self, a):
        return Fraction(a)

    def size(self, a):
        return 0

    def divmod(self, a, b):
        return Fraction(a) / b, Fraction(0)

    def normal(self, a):
        return (a, Fraction(1)) if a != 0 else (Fraction(1), Fraction(0))

    def unit_inverse(self, u):
        return 1 / Fraction(u)

    def is_unit(self, a):
        return a != 0


class _PolyCover:
    is_field = False

    def __init__(self, p: int):
        self.p = p
        self.name = f"F{p}[x]"
        self.zero = Poly(p)
        self.one = Poly(p, [1])

    def coerce(self, a):
        if isinstance(a, Poly):
            return a
        if isinstance(a, (list, tuple)):
            return Poly(self.p, a)
        return Poly(self.p, [int(a)])

    def size(self, a):
        return a.degree

    def divmod(self, a, b):
        return divmod(a, b)

    def normal(self, a):
        if not a:
            return self.one, a
        lc = a.c[-1]
        return Poly(self.p, [lc]), a * pow(lc, -1, self.p)

    def unit_inverse(self, u):
        return Poly(self.p, [pow(u.c[0], -1, self.p)])

    def is_unit(self, a):
        return a.degree == 0


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    return all(n % q for q in range(2, int(n ** 0.5) + 1))


def cover_gcd(cover, a, b):
    while b != 0 and b != cover.zero:
        a, b = b, cover.divmod(a, b)[1]
    return cover.normal(a)[1]


# ---------------------------------------------------------------------------
# rings

@dataclass(frozen=True)
class Ring:
    """An exact coefficient ring, presented over a Euclidean cover."""

    kind: str
    n: int | None = None

    def __post_init__(self):
        if self.kind == "IntMod":
            if self.n is None or self.n < 2:
                raise ValueError("IntMod needs n >= 2")
        elif self.kind == "DualNumbers":
            if self.n is None or not _is_prime(self.n):
                raise ValueError("DualNumbers needs a prime p")
        elif self.kind not in ("Int", "Rational"):
            raise ValueError(f"unknown ring kind {self.kind!r}")

    @cached_property
    def cover(self):
        if self.kind == "Rational":
            return _FieldCover()
        if self.kind == "DualNumbers":
            return _PolyCover(self.n)
        return _IntCover()

    @property
    def relation(self):
        """Structural relation as a cover element, or None."""
        if self.kind == "IntMod":
            return self.n
        if self.kind == "DualNumbers":
            return Poly.x(self.n, 2)
        return None

    @property
    def is_field(self) -> bool:
        return self.kind == "Rational" or (self.kind == "IntMod" and _is_prime(self.n))

    @property
    def is_finite(self) -> bool:
        return self.kind in ("IntMod", "DualNumbers")

    @cached_property
    def base(self) -> "Ring":
        """Base ring of Hom modules (the prime field for dual numbers)."""
        if self.kind == "DualNumbers":
            return IntMod(self.n)
        return self

    @property
    def order(self) -> int | None:
        if self.kind == "IntMod":
            return self.n
        if self.kind == "DualNumbers":
            return self.n ** 2
        return None

    def reduce(self, a):
        a = self.cover.coerce(a)
        if self.kind == "IntMod":
            return a % self.n
        if self.kind == "DualNumbers":
            return Poly(self.n, a.c[:2])
        return a

    def elements(self) -> list:
        if self.kind == "IntMod":
            return list(range(self.n))
        if self.kind == "DualNumbers":
            p = self.n
            return [Poly(p, [a, b]) for b in range(p) for a in range(p)]
        raise UnsupportedRing(f"{self} is infinite")

    def random_element(self, rng, bound: int = 3):
        if self.kind == "IntMod":
            return int(rng.integers(0, self.n))
        if self.kind == "DualNumbers":
            return Poly(self.n, [int(rng.integers(0, self.n)), int(rng.integers(0, self.n))])
        v = int(rng.integers(-bound, bound + 1))
        return Fraction(v) if self.kind == "Rational" else v

    def parse_element(self, text: str):
        text = text.strip()
        if self.kind == "DualNumbers":
            return self.reduce(_parse_poly(self.n, text))
        if self.kind == "Rational":
            return Fraction(text)
        return self.reduce(int(text))

    def format_element(self, a) -> str:
        a = self.reduce(a)
        if self.kind == "DualNumbers":
            return repr(a)
        return str(a)

    def __str__(self):
        if self.kind in ("IntMod",):
            return f"IntMod({self.n})"
        if self.kind == "DualNumbers":
            return f"DualNumbers({self.n})"
        return self.kind


def Int() -> Ring:
    return Ring("Int")


def IntMod(n: int) -> Ring:
    return Ring("IntMod", n)


def Rational() -> Ring:
    return Ring("Rational")


def DualNumbers(p: int) -> Ring:
    return Ring("DualNumbers", p)


def _parse_poly(p: int, text: str) -> Poly:
    text = text.replace(" ", "").replace("-", "+-")
    coeffs: dict[int, int] = {}
    for term in filter(None, text.split("+")):
        sign = 1
        if term.startswith("-"):
            sign, term = -1, term[1:]
        if "x" in term:
            coef, _, power = term.partition("x")
            coef = int(coef) if coef not in ("", "*") else 1
            coef = int(str(coef).rstrip("*"))
            k = int(power[1:]) if power.startswith("^") else 1
        else:
            coef, k = int(term), 0
        coeffs[k] = coeffs.get(k, 0) + sign * coef
    top = max(coeffs, default=-1)
    return Poly(p, [coeffs.get(k, 0) for k in range(top + 1)])


# ---------------------------------------------------------------------------
# matrices

def mat(ring: Ring, rows, shape: tuple[int, int] | None = None) -> np.ndarray:
    """Build a reduced object matrix over ``ring``."""
    if isinstance(rows, np.ndarray) and rows.ndim == 2:
        out = np.empty(rows.shape, dtype=object)
        for idx, v in np.ndenumerate(rows):
            out[idx] = ring.reduce(v)
        return out
    rows = [list(r) for r in rows]
    if shape is None:
        shape = (len(rows), len(rows[0]) if rows else 0)
    out = np.empty(shape, dtype=object)
    for i, r in enumerate(rows):
        if len(r) != shape[1]:
            raise ShapeMismatch("ragged matrix literal")
        for j, v in enumerate(r):
            out[i, j] = ring.reduce(v)
    return out


def zeros(ring: Ring, r: int, c: int) -> np.ndarray:
    out = np.empty((r, c), dtype=object)
    out.fill(ring.cover.zero)
    return out


def identity(ring: Ring, r: int) -> np.ndarray:
    out = zeros(ring, r, r)
    for i in range(r):
        out[i, i] = ring.cover.one
    return out


def reduce_mat(ring: Ring, m: np.ndarray) -> np.ndarray:
    out = np.empty(m.shape, dtype=object)
    red = ring.reduce
    flat_in = m.ravel()
    flat_out = out.ravel()
    for i in range(flat_in.size):
        flat_out[i] = red(flat_in[i])
    return out


def mmul(ring: Ring, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if a.shape[1] != b.shape[0]:
        raise ShapeMismatch(f"cannot multiply {a.shape} by {b.shape}")
    if a.shape[1] == 0:
        return zeros(ring, a.shape[0], b.shape[1])
    return reduce_mat(ring, a.dot(b))


def madd(ring: Ring, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if a.shape != b.shape:
        raise ShapeMismatch(f"cannot add {a.shape} and {b.shape}")
    return reduce_mat(ring, a + b)


def mscale(ring: Ring, c, a: np.ndarray) -> np.ndarray:
    return reduce_mat(ring, a * ring.reduce(c)) if a.size else a.copy()


def is_zero_mat(m: np.ndarray) -> bool:
    return all(not v for v in m.ravel())


def mat_equal(a: np.ndarray, b: np.ndarray) -> bool:
    return a.shape == b.shape and all(x == y for x, y in zip(a.ravel(), b.ravel()))


def hstack(ring: Ring, blocks: Sequence[np.ndarray], rows: int) -> np.ndarray:
    blocks = [b for b in blocks if b.shape[1]]
    if not blocks:
        return zeros(ring, rows, 0)
    return np.hstack(blocks)


def vstack(ring: Ring, blocks: Sequence[np.ndarray], cols: int) -> np.ndarray:
    blocks = [b for b in blocks if b.shape[0]]
    if not blocks:
        return zeros(ring, 0, cols)
    return np.vstack(blocks)


def block_diag(ring: Ring, blocks: Sequence[np.ndarray]) -> np.ndarray:
    r = sum(b.shape[0] for b in blocks)
    c = sum(b.shape[1] for b in blocks)
    out = zeros(ring, r, c)
    i = j = 0
    for b in blocks:
        out[i:i + b.shape[0], j:j + b.shape[1]] = b
        i += b.shape[0]
        j += b.shape[1]
    return out


def mat_key(m: np.ndarray) -> tuple:
    return (m.shape, tuple(m.ravel()))


# ---------------------------------------------------------------------------
# Smith normal form over a Euclidean cover

@dataclass
class SmithForm:
    U: list
    Uinv: list
    V: list
    diag: list
    rank: int


def _smith(cover, rows: list[list], m: int, n: int) -> SmithForm:
    zero, one = cover.zero, cover.one
    A = [list(r) for r in rows]
    U = [[one if i == j else zero for j in range(m)] for i in range(m)]
    Ui = [[one if i == j else zero for j in range(m)] for i in range(m)]
    V = [[one if i == j else zero for j in range(n)] for i in range(n)]
    size = cover.size

    def pick(t):
        best = None
        for i in range(t, m):
            row = A[i]
            for j in range(t, n):
                v = row[j]
                if v != 0:
                    s = size(v)
                    if best is None or s < best[0]:
                        best = (s, i, j)
        return best

    def swap_rows(i, k):
        if i != k:
            A[i], A[k] = A[k], A[i]
            U[i], U[k] = U[k], U[i]
            for r in Ui:
                r[i], r[k] = r[k], r[i]

    def swap_cols(j, k):
        if j != k:
            for r in A:
                r[j], r[k] = r[k], r[j]
            for r in V:
                r[j], r[k] = r[k], r[j]

    def add_row(dst, src, q):
        # row_dst += q * row_src
        ra, rs = A[dst], A[src]
        for c in range(n):
            if rs[c] != 0:
                ra[c] = ra[c] + q * rs[c]
        ua, us = U[dst], U[src]
        for c in range(m):
            if us[c] != 0:
                ua[c] = ua[c] + q * us[c]
        for r in Ui:
            if r[dst] != 0:
                r[src] = r[src] - q * r[dst]

    def add_col(dst, src, q):
        for r in A:
            if r[src] != 0:
                r[dst] = r[dst] + q * r[src]
        for r in V:
            if r[src] != 0:
                r[dst] = r[dst] + q * r[src]

    t = 0
    diag = []
    while t < min(m, n):
        best = pick(t)
        if best is None:
            break
        _, i, j = best
        swap_rows(t, i)
        swap_cols(t, j)
        while True:
            clean = True
            piv = A[t][t]
            for i in range(t + 1, m):
                if A[i][t] != 0:
                    q, r = cover.divmod(A[i][t], piv)
                    add_row(i, t, -q)
                    if r != 0:
                        clean = False
            for j in range(t + 1, n):
                if A[t][j] != 0:
                    q, r = cover.divmod(A[t][j], piv)
                    add_col(j, t, -q)
                    if r != 0:
                        clean = False
            if not clean:
                _, i, j = pick(t)
                swap_rows(t, i)
                swap_cols(t, j)
                continue
            bad = None
            for i in range(t + 1, m):
                for j in range(t + 1, n):
                    if A[i][j] != 0 and cover.divmod(A[i][j], piv)[1] != 0:
                        bad = i
                        break
                if bad is not None:
                    break
            if bad is None:
                break
            add_row(t, bad, one)
        u, _ = cover.normal(A[t][t])
        if u != one:
            uinv = cover.unit_inverse(u)
            A[t] = [v * uinv for v in A[t]]
            U[t] = [v * uinv for v in U[t]]
            for r in Ui:
                r[t] = r[t] * u
        diag.append(A[t][t])
        t += 1
    return SmithForm(U, Ui, V, diag, t)


def _cover_of(ring_or_cover):
    return ring_or_cover.cover if isinstance(ring_or_cover, Ring) else ring_or_cover


def _to_rows(m: np.ndarray) -> list[list]:
    return [list(r) for r in m]


def _from_rows(rows, r, c) -> np.ndarray:
    out = np.empty((r, c), dtype=object)
    for i in range(r):
        for j in range(c):
            out[i, j] = rows[i][j]
    return out


def snf(m: np.ndarray, ring: Ring):
    """Smith normal form: returns (U, D, V) with U·m·V = D over the cover.

    Pivots are chosen by smallest Euclidean size, ties broken by lowest
    (row, column) index, so the output is reproducible.
    """
    if ring.kind == "Rational":
        raise UnsupportedRing("Rational has no Euclidean cover path; use rank reduction")
    cover = ring.cover
    r, c = m.shape
    rows = [[cover.coerce(v) for v in row] for row in m]
    sf = _smith(cover, rows, r, c)
    D = np.empty((r, c), dtype=object)
    D.fill(cover.zero)
    for i, d in enumerate(sf.diag):
        D[i, i] = d
    return _from_rows(sf.U, r, r), D, _from_rows(sf.V, c, c)


class CoverSolver:
    """Reusable solver for A·x = b over a Euclidean cover (no structural relation)."""

    def __init__(self, cover, A: np.ndarray):
        self.cover = cover
        self.m, self.n = A.shape
        self.sf = _smith(cover, _to_rows(A), self.m, self.n)

    def solve(self, b) -> list | None:
        cover, sf = self.cover, self.sf
        if len(b) != self.m:
            raise ShapeMismatch("right-hand side has wrong length")
        ub = [sum((u * v for u, v in zip(row, b) if u != 0 and v != 0), cover.zero) for row in sf.U]
        z = [cover.zero] * self.n
        for i in range(sf.rank):
            q, r = cover.divmod(ub[i], sf.diag[i])
            if r != 0:
                return None
            z[i] = q
        for i in range(sf.rank, self.m):
            if ub[i] != 0:
                return None
        return [sum((row[k] * z[k] for k in range(sf.rank) if row[k] != 0), cover.zero) for row in sf.V]

    def nullspace(self) -> list[list]:
        """Basis of the kernel as a list of column vectors."""
        sf = self.sf
        return [[sf.V[i][j] for i in range(self.n)] for j in range(sf.rank, self.n)]


def nullspace(cover, A: np.ndarray) -> np.ndarray:
    cover = _cover_of(cover)
    n = A.shape[1]
    cols = CoverSolver(cover, A).nullspace()
    out = np.empty((n, len(cols)), dtype=object)
    for j, col in enumerate(cols):
        for i in range(n):
            out[i, j] = col[i]
    return out


def span_basis(cover, G: np.ndarray) -> np.ndarray:
    """A basis (free, over a PID) of the column span of G."""
    cover = _cover_of(cover)
    r, c = G.shape
    sf = _smith(cover, _to_rows(G), r, c)
    out = np.empty((r, sf.rank), dtype=object)
    for j in range(sf.rank):
        for i in range(r):
            out[i, j] = sf.Uinv[i][j] * sf.diag[j]
    return out


def _relation_block(ring: Ring, rows: int) -> np.ndarray:
    s = ring.relation
    if s is None or rows == 0:
        return zeros(ring, rows, 0)
    out = zeros(ring, rows, rows)
    for i in range(rows):
        out[i, i] = s
    return out


def solve(a: np.ndarray, b: np.ndarray, ring: Ring) -> np.ndarray:
    """Solve a·x = b modulo the structural relation of ``ring``.

    Raises NoSolution when the system is infeasible.
    """
    if a.shape[0] != b.shape[0]:
        raise ShapeMismatch(f"row counts differ: {a.shape} vs {b.shape}")
    aug = np.hstack([a, _relation_block(ring, a.shape[0])]) if ring.relation is not None else a
    if aug.shape[1] == 0:
        aug = zeros(ring, a.shape[0], 0)
    solver = CoverSolver(ring.cover, aug)
    x = zeros(ring, a.shape[1], b.shape[1])
    for j in range(b.shape[1]):
        sol = solver.solve(list(b[:, j]))
        if sol is None:
            raise NoSolution(f"column {j} has no solution")
        for i in range(a.shape[1]):
            x[i, j] = ring.reduce(sol[i])
    return x


# ---------------------------------------------------------------------------
# finitely presented modules

def _mod(cover, v, d):
    if d == 0 or d == cover.zero:
        return v
    return cover.divmod(v, d)[1]


class FpModule:
    """E^r modulo the columns of a relation matrix plus the structural relation.

    Elements are column vectors of length ``r`` over the cover.  Canonical
    forms go through Smith coordinates y = U·x reduced modulo the invariant
    factors.
    """

    def __init__(self, ring: Ring, rel: np.ndarray | None = None, r: int | None = None):
        self.ring = ring
        if rel is None:
            rel = zeros(ring, r or 0, 0)
        elif not isinstance(rel, np.ndarray):
            rel = mat(ring, rel, None if rel else (r or 0, 0))
        if r is not None and rel.shape[0] != r:
            raise ShapeMismatch("relation matrix row count differs from r")
        self.rel = reduce_mat(ring, rel)
        self.r = self.rel.shape[0]
        self._smith_cache = None
        self._diag = None

    # constructors
    @classmethod
    def free(cls, ring: Ring, r: int) -> "FpModule":
        m = cls(ring, zeros(ring, r, 0))
        cover = ring.cover
        s = ring.relation
        d = [cover.normal(s)[1] if s is not None else cover.zero] * r
        m._set_diag(d)
        return m

    @classmethod
    def zero(cls, ring: Ring) -> "FpModule":
        return cls.free(ring, 0)

    @classmethod
    def diag(cls, ring: Ring, ds: Sequence) -> "FpModule":
        """⊕ E/(d_i) (together with the structural relation)."""
        cover = ring.cover
        ds = [cover.coerce(d) for d in ds]
        rel = zeros(ring, len(ds), len(ds))
        for i, d in enumerate(ds):
            rel[i, i] = d
        m = cls(ring, rel)
        s = ring.relation
        m._set_diag([cover_gcd(cover, d, s) if s is not None else cover.normal(d)[1] for d in ds])
        return m

    @classmethod
    def cyclic(cls, ring: Ring, d) -> "FpModule":
        return cls.diag(ring, [d])

    def _set_diag(self, d):
        self._diag = list(d)
        ring, r = self.ring, self.r
        eye = [[ring.cover.one if i == j else ring.cover.zero for j in range(r)] for i in range(r)]
        self._smith_cache = (eye, [row[:] for row in eye], list(d))

    # smith data
    def _smith(self):
        if self._smith_cache is None:
            ring, cover = self.ring, self.ring.cover
            aug = self.rel
            if ring.relation is not None:
                aug = np.hstack([self.rel, _relation_block(ring, self.r)]) if self.r else self.rel
            sf = _smith(cover, _to_rows(aug), self.r, aug.shape[1])
            d = list(sf.diag) + [cover.zero] * (self.r - sf.rank)
            self._smith_cache = (sf.U, sf.Uinv, d)
        return self._smith_cache

    @property
    def U(self):
        return self._smith()[0]

    @property
    def Uinv(self):
        return self._smith()[1]

    @cached_property
    def nu(self) -> tuple[int, ...]:
        """Indices of non-unit invariant factors (the surviving Smith coordinates)."""
        cover = self.ring.cover
        return tuple(i for i, d in enumerate(self._smith()[2]) if not cover.is_unit(d))

    @cached_property
    def invariants(self) -> tuple:
        d = self._smith()[2]
        return tuple(d[i] for i in self.nu)

    def iso_type(self) -> tuple:
        """Invariant factors with free parts last; equal tuples ⇔ isomorphic."""
        inv = [d for d in self.invariants if d != 0]
        free = len(self.invariants) - len(inv)
        key = sorted(inv, key=lambda d: (self.ring.cover.size(d), repr(d)))
        return tuple(key) + (0,) * free

    def is_zero(self) -> bool:
        return not self.nu

    @property
    def is_finite(self) -> bool:
        return all(d != 0 for d in self.invariants)

    def cardinality(self) -> int | None:
        if not self.is_finite:
            return None
        out = 1
        for d in self.invariants:
            out *= d if isinstance(d, int) else self.ring.n ** d.degree
        return out

    # elements
    def coords(self, x) -> tuple:
        """Smith coordinates of ``x`` reduced modulo the invariant factors."""
        U, _, d = self._smith()
        cover = self.ring.cover
        out = []
        for i in self.nu:
            row = U[i]
            v = sum((row[k] * x[k] for k in range(self.r) if row[k] != 0 and x[k] != 0), cover.zero)
            out.append(_mod(cover, v, d[i]))
        return tuple(out)

    def from_coords(self, y) -> np.ndarray:
        _, Ui, _ = self._smith()
        ring = self.ring
        out = np.empty(self.r, dtype=object)
        for i in range(self.r):
            row = Ui[i]
            out[i] = ring.reduce(sum((row[k] * y[t] for t, k in enumerate(self.nu) if row[k] != 0 and y[t] != 0),
                                     ring.cover.zero))
        return out

    def reduce(self, x) -> np.ndarray:
        return self.from_coords(self.coords(x))

    def elem_is_zero(self, x) -> bool:
        return all(v == 0 for v in self.coords(x))

    def columns_zero(self, m: np.ndarray) -> bool:
        return all(self.elem_is_zero(m[:, j]) for j in range(m.shape[1]))

    def elements(self):
        """Enumerate canonical elements (finite modules only)."""
        if not self.is_finite:
            raise UnsupportedRing("module is infinite")
        cover = self.ring.cover
        ranges = []
        for d in self.invariants:
            if isinstance(d, Poly):
                p = self.ring.n
                ranges.append([Poly(p, cs) for cs in itertools.product(range(p), repeat=d.degree)])
            else:
                ranges.append(list(range(d)))
        for y in itertools.product(*ranges):
            yield self.from_coords(y)

    def aug_rel(self) -> np.ndarray:
        if self.ring.relation is None or self.r == 0:
            return self.rel
        return np.hstack([self.rel, _relation_block(self.ring, self.r)])

    def solver(self, A: np.ndarray) -> "ModuleSolver":
        return ModuleSolver(self, A)

    def __repr__(self):
        return f"FpModule({self.ring}, invariants={list(self.invariants)})"


class ModuleSolver:
    """Solve A·x = b inside a target module (modulo its relations)."""

    def __init__(self, target: FpModule, A: np.ndarray):
        self.target = target
        self.ncols = A.shape[1]
        aug = target.aug_rel()
        full = np.hstack([A, aug]) if aug.shape[1] else A
        if full.shape[1] == 0:
            full = zeros(target.ring, target.r, 0)
        self.inner = CoverSolver(target.ring.cover, full)

    def solve(self, b) -> np.ndarray | None:
        sol = self.inner.solve(list(b))
        if sol is None:
            return None
        out = np.empty(self.ncols, dtype=object)
        for i in range(self.ncols):
            out[i] = self.target.ring.reduce(sol[i])
        return out


class ModMap:
    """A module homomorphism given by a matrix on generators."""

    def __init__(self, source: FpModule, target: FpModule, matrix, check: bool = False):
        ring = source.ring
        if target.ring != ring:
            raise ShapeMismatch("source and target live over different rings")
        if not isinstance(matrix, np.ndarray):
            matrix = mat(ring, matrix, (target.r, source.r))
        if matrix.shape != (target.r, source.r):
            raise ShapeMismatch(f"matrix shape {matrix.shape} != {(target.r, source.r)}")
        self.source = source
        self.target = target
        self.matrix = reduce_mat(ring, matrix)
        if check and not self.is_well_defined():
            raise NotWellDefined("matrix does not respect the source relations")

    @property
    def ring(self):
        return self.source.ring

    @classmethod
    def zero(cls, source, target):
        return cls(source, target, zeros(source.ring, target.r, source.r))

    @classmethod
    def identity(cls, m: FpModule):
        return cls(m, m, identity(m.ring, m.r))

    def is_well_defined(self) -> bool:
        return self.target.columns_zero(mmul(self.ring, self.matrix, self.source.rel))

    def __matmul__(self, other: "ModMap") -> "ModMap":
        return ModMap(other.source, self.target, mmul(self.ring, self.matrix, other.matrix))

    def __add__(self, other):
        return ModMap(self.source, self.target, madd(self.ring, self.matrix, other.matrix))

    def __neg__(self):
        return ModMap(self.source, self.target, mscale(self.ring, -1, self.matrix))

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c):
        return ModMap(self.source, self.target, mscale(self.ring, c, self.matrix))

    def is_zero(self) -> bool:
        return self.target.columns_zero(self.matrix)

    def equals(self, other: "ModMap") -> bool:
        return (self - other).is_zero()

    def apply(self, x) -> np.ndarray:
        col = np.empty((len(x), 1), dtype=object)
        col[:, 0] = list(x)
        return mmul(self.ring, self.matrix, col)[:, 0]


def kernel(f: ModMap) -> tuple[FpModule, ModMap]:
    """Kernel module and its inclusion into the source."""
    ring, M, N = f.ring, f.source, f.target
    aug = N.aug_rel()
    full = np.hstack([f.matrix, aug]) if aug.shape[1] else f.matrix
    if full.shape[1] == 0:
        full = zeros(ring, N.r, M.r)
    ns = nullspace(ring.cover, full)
    G = span_basis(ring.cover, ns[:M.r, :]) if ns.shape[1] else zeros(ring, M.r, 0)
    return _submodule(M, G)


def _submodule(M: FpModule, G: np.ndarray) -> tuple[FpModule, ModMap]:
    """The submodule of M generated by the columns of G, with its inclusion."""
    ring = M.ring
    t = G.shape[1]
    aug = M.aug_rel()
    full = np.hstack([G, aug]) if aug.shape[1] else G
    if full.shape[1] == 0:
        full = zeros(ring, M.r, t)
    ns = nullspace(ring.cover, full)
    R = ns[:t, :] if ns.shape[1] else zeros(ring, t, 0)
    K = FpModule(ring, _strip_structural(ring, R))
    return K, ModMap(K, M, G)


def _strip_structural(ring, R):
    keep = [j for j in range(R.shape[1]) if any(ring.reduce(v) != 0 for v in R[:, j])]
    return R[:, keep] if keep else zeros(ring, R.shape[0], 0)


def submodule(M: FpModule, G: np.ndarray) -> tuple[FpModule, ModMap]:
    return _submodule(M, G)


def cokernel(f: ModMap) -> tuple[FpModule, ModMap]:
    ring, N = f.ring, f.target
    rel = np.hstack([N.rel, f.matrix]) if N.rel.shape[1] + f.matrix.shape[1] else N.rel
    C = FpModule(ring, rel)
    return C, ModMap(N, C, identity(ring, N.r))


def image(f: ModMap) -> tuple[FpModule, ModMap, ModMap]:
    """Image module with the corestriction M → im and inclusion im → N."""
    I, inc = _submodule(f.target, span_basis(f.ring.cover, f.matrix) if f.matrix.shape[1] else
                        zeros(f.ring, f.target.r, 0))
    # corestriction: express f(e_j) in the generators of I
    incsolve = ModuleSolver(f.target, inc.matrix)
    cols = zeros(f.ring, I.r, f.source.r)
    for j in range(f.source.r):
        x = incsolve.solve(f.matrix[:, j])
        if x is None:
            raise NotWellDefined("image generator failed to factor")
        cols[:, j] = x
    return I, ModMap(f.source, I, cols), inc


def factors_through(g: ModMap, h: ModMap) -> ModMap | None:
    """Find x with h∘x = g (g: L→N, h: M→N), or None."""
    solver = ModuleSolver(h.target, h.matrix)
    cols = zeros(g.ring, h.source.r, g.source.r)
    for j in range(g.source.r):
        x = solver.solve(g.matrix[:, j])
        if x is None:
            return None
        cols[:, j] = x
    return ModMap(g.source, h.source, cols)


# ---------------------------------------------------------------------------
# Hom modules

class HomModule:
    """Hom_R(M, N) as a module over the base ring, with encode/decode.

    In Smith coordinates M ≅ ⊕ E/a_i and N ≅ ⊕ E/b_j, and a homomorphism is a
    matrix of entries y_ji ∈ E/b_j with a_i·y_ji = 0; each entry ranges over a
    cyclic group generated by b_j/gcd(a_i, b_j).  For dual numbers each
    cyclic piece is further expanded over F_p in the monomial basis.
    """

    def __init__(self, M: FpModule, N: FpModule):
        if M.ring != N.ring:
            raise ShapeMismatch("hom between different rings")
        self.source, self.target = M, N
        ring = M.ring
        self.ring = ring
        self.base = ring.base
        cover = ring.cover
        blocks = []   # (j_pos, i_pos, generator, order-in-base list)
        ds = []
        dual = ring.kind == "DualNumbers"
        for jp, b in enumerate(N.invariants):
            for ip, a in enumerate(M.invariants):
                if dual:
                    ea, eb = a.degree, b.degree
                    g = min(ea, eb)
                    if g == 0:
                        continue
                    blocks.append((jp, ip, eb - g, g))
                    ds.extend([ring.n] * g)
                    continue
                if b == 0:
                    if a != 0:
                        continue
                    g, gen = cover.zero, cover.one
                else:
                    g = cover_gcd(cover, a, b)
                    gen = cover.divmod(b, g)[0]
                if cover.is_unit(g):
                    continue
                blocks.append((jp, ip, gen, g))
                ds.append(g)
        self.blocks = blocks
        self.module = FpModule.diag(self.base, ds)
        self.dim = len(ds)

    def decode(self, vec) -> np.ndarray:
        """Matrix (target gens × source gens) of the map with coordinates ``vec``."""
        ring, M, N = self.ring, self.source, self.target
        cover = ring.cover
        nuM, nuN = M.nu, N.nu
        T = [[cover.zero] * len(nuM) for _ in nuN]
        pos = 0
        for jp, ip, gen, g in self.blocks:
            if ring.kind == "DualNumbers":
                coeffs = [0] * gen + [int(vec[pos + t]) for t in range(g)]
                T[jp][ip] = Poly(ring.n, coeffs)
                pos += g
            else:
                T[jp][ip] = cover.coerce(vec[pos]) * gen
                pos += 1
        Ui_N = N.Uinv
        U_M = M.U
        out = np.empty((N.r, M.r), dtype=object)
        for r in range(N.r):
            for c in range(M.r):
                acc = cover.zero
                for a, j in enumerate(nuN):
                    if Ui_N[r][j] == 0:
                        continue
                    for b, i in enumerate(nuM):
                        if T[a][b] != 0 and U_M[i][c] != 0:
                            acc = acc + Ui_N[r][j] * T[a][b] * U_M[i][c]
                out[r, c] = ring.reduce(acc)
        return out

    def encode(self, matrix: np.ndarray) -> np.ndarray:
        ring, M, N = self.ring, self.source, self.target
        cover = ring.cover
        U_N, Ui_M = N.U, M.Uinv
        dN = N.invariants
        out = []
        for jp, ip, gen, g in self.blocks:
            j, i = N.nu[jp], M.nu[ip]
            v = cover.zero
            for r in range(N.r):
                if U_N[j][r] == 0:
                    continue
                for c in range(M.r):
                    if matrix[r, c] != 0 and Ui_M[c][i] != 0:
                        v = v + U_N[j][r] * cover.coerce(matrix[r, c]) * Ui_M[c][i]
            b = dN[jp]
            if ring.kind == "DualNumbers":
                v = v % b
                for t in range(g):
                    out.append(v.coeff(gen + t))
                continue
            v = _mod(cover, v, b)
            q, rem = cover.divmod(v, gen)
            if rem != 0:
                raise NotWellDefined("matrix is not a module map")
            out.append(self.base.reduce(_mod(cover, q, g)))
        vec = np.empty(len(out), dtype=object)
        for k, v in enumerate(out):
            vec[k] = v
        return vec

    def basis(self) -> list[ModMap]:
        out = []
        for k in range(self.dim):
            e = [0] * self.dim
            e[k] = 1
            out.append(ModMap(self.source, self.target, self.decode(e)))
        return out


def hom_module(m: FpModule, n: FpModule) -> tuple[FpModule, list[ModMap]]:
    """Hom_R(m, n) as a module over the base ring, with a generating basis."""
    h = HomModule(m, n)
    return h.module, h.basis()


def direct_sum(mods: Sequence[FpModule], ring: Ring | None = None) -> FpModule:
    ring = ring or mods[0].ring
    if all(m._diag is not None for m in mods):
        return FpModule.diag(ring, [d for m in mods for d in m._diag])
    return FpModule(ring, block_diag(ring, [m.rel for m in mods]))
