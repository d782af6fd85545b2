"""Exact arithmetic: rationals, multivariate polynomials over Q, rational
functions in the summation variable with parameter coefficients, and the
shift toolkit (gcd, resultant, squarefree splits, integer roots, dispersion).

The coefficient field is K = Q(p1,...,po) for declared parameter symbols;
the working field is K(x) for the summation variable x.  Polynomials are
kept in sympy's low-level sparse ring representation.  All values are
immutable after construction.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import sympy
from sympy import QQ, Poly, Symbol
from sympy.polys.rings import ring as _make_ring

Rational = Fraction


class ArithError(ValueError):
    pass


@lru_cache(maxsize=None)
def _ring_for(params: tuple[str, ...], var: str):
    names = ", ".join(params + (var,))
    return _make_ring(names, QQ)


@lru_cache(maxsize=None)
def _symbols_for(params: tuple[str, ...], var: str) -> tuple[Symbol, ...]:
    return tuple(Symbol(s) for s in params) + (Symbol(var),)


class Context:
    """Fixed symbol universe: parameters first, then the summation variable."""

    __slots__ = ("params", "var", "ring", "gens", "_zero", "_one")

    def __init__(self, params: tuple[str, ...] = (), var: str = "x"):
        if var in params:
            raise ArithError(f"variable {var!r} also declared as parameter")
        self.params = tuple(params)
        self.var = var
        made = _ring_for(self.params, var)
        self.ring = made[0]
        self.gens = tuple(made[1:])
        self._zero = None
        self._one = None

    def __eq__(self, other):
        return isinstance(other, Context) and self.params == other.params and self.var == other.var

    def __hash__(self):
        return hash((self.params, self.var))

    def __repr__(self):
        return f"Context(params={self.params}, var={self.var!r})"

    @property
    def symbols(self) -> tuple[Symbol, ...]:
        return _symbols_for(self.params, self.var)

    @property
    def x(self) -> Symbol:
        return self.symbols[-1]

    @property
    def xgen(self):
        return self.gens[-1]

    @property
    def param_symbols(self) -> tuple[Symbol, ...]:
        return self.symbols[:-1]

    def gen_of(self, sym: Symbol):
        try:
            i = self.symbols.index(sym)
        except ValueError:
            raise ArithError(f"unknown symbol {sym}")
        return self.gens[i]

    # -- constructors ------------------------------------------------------

    def poly(self, expr) -> "MPoly":
        if isinstance(expr, MPoly):
            return expr
        if isinstance(expr, int):
            return MPoly(self, self.ring.ground_new(QQ(expr)))
        if isinstance(expr, Fraction):
            return MPoly(self, self.ring.ground_new(QQ(expr.numerator, expr.denominator)))
        if type(expr).__name__ == "PolyElement":
            return MPoly(self, expr)
        return MPoly(self, self.ring.from_expr(sympy.sympify(expr)))

    def zero_poly(self) -> "MPoly":
        return self.poly(0)

    def one_poly(self) -> "MPoly":
        return self.poly(1)

    def ratfun(self, num, den=1) -> "RatFun":
        if not isinstance(num, MPoly):
            num = self.poly(num)
        if not isinstance(den, MPoly):
            den = self.poly(den)
        return RatFun.make(num, den)

    def zero(self) -> "RatFun":
        if self._zero is None:
            self._zero = self.ratfun(0)
        return self._zero

    def one(self) -> "RatFun":
        if self._one is None:
            self._one = self.ratfun(1)
        return self._one

    def from_fraction(self, q: Fraction | int) -> "RatFun":
        q = Fraction(q)
        return self.ratfun(self.poly(q.numerator), self.poly(q.denominator))


def _grlex_lead(p) -> tuple:
    best = None
    for monom, coeff in p.terms():
        key = (sum(monom), monom)
        if best is None or key > best[0]:
            best = (key, coeff)
    return best


class MPoly:
    """Sparse multivariate polynomial over Q in the context symbols."""

    __slots__ = ("ctx", "p", "_hash")

    def __init__(self, ctx: Context, p):
        self.ctx = ctx
        self.p = p
        self._hash = None

    # -- ring ops ----------------------------------------------------------

    def __add__(self, other: "MPoly") -> "MPoly":
        return MPoly(self.ctx, self.p + other.p)

    def __sub__(self, other: "MPoly") -> "MPoly":
        return MPoly(self.ctx, self.p - other.p)

    def __mul__(self, other: "MPoly") -> "MPoly":
        return MPoly(self.ctx, self.p * other.p)

    def __neg__(self) -> "MPoly":
        return MPoly(self.ctx, -self.p)

    def __pow__(self, e: int) -> "MPoly":
        if e < 0:
            raise ArithError("negative power of a polynomial")
        return MPoly(self.ctx, self.p ** e)

    def __eq__(self, other) -> bool:
        return isinstance(other, MPoly) and self.p == other.p

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.ctx, tuple(sorted(self.p.terms()))))
        return self._hash

    def is_zero(self) -> bool:
        return not self.p

    def is_one(self) -> bool:
        return self.p == 1

    def gcd(self, other: "MPoly") -> "MPoly":
        return MPoly(self.ctx, self.p.gcd(other.p))

    def exquo(self, other: "MPoly") -> "MPoly":
        q, r = divmod(self.p, other.p)
        if r:
            raise ArithError("inexact polynomial division")
        return MPoly(self.ctx, q)

    def divides(self, other: "MPoly") -> bool:
        if not self.p:
            return not other.p
        return not divmod(other.p, self.p)[1]

    # -- structure ---------------------------------------------------------

    def degree(self, sym: Symbol | None = None) -> int:
        if not self.p:
            return -1
        gen = self.ctx.xgen if sym is None else self.ctx.gen_of(sym)
        i = self.ctx.gens.index(gen)
        return max(m[i] for m in self.p.monoms())

    def degree_total(self) -> int:
        if not self.p:
            return -1
        return max(sum(m) for m in self.p.monoms())

    def coeff_of(self, sym: Symbol, k: int) -> "MPoly":
        """Coefficient of sym**k, a polynomial in the remaining symbols."""
        gen = self.ctx.gen_of(sym)
        i = self.ctx.gens.index(gen)
        ring = self.ctx.ring
        out = ring.zero
        for monom, coeff in self.p.terms():
            if monom[i] == k:
                m = list(monom)
                m[i] = 0
                out += ring.term_new(tuple(m), coeff)
        return MPoly(self.ctx, out)

    def as_fraction(self) -> Fraction:
        if not self.p:
            return Fraction(0)
        if self.degree_total() > 0:
            raise ArithError(f"not a constant: {self}")
        c = self.p.LC
        return Fraction(c.numerator, c.denominator)

    def is_constant(self) -> bool:
        return not self.p or self.degree_total() == 0

    def content_fraction(self) -> Fraction:
        """Signed rational content (sign of the graded-lex leading coeff)."""
        if not self.p:
            return Fraction(0)
        from math import gcd as igcd, lcm as ilcm

        num = 0
        den = 1
        for c in self.p.coeffs():
            num = igcd(num, abs(int(c.numerator)))
            den = ilcm(den, int(c.denominator))
        mag = Fraction(num, den)
        lead = _grlex_lead(self.p)[1]
        return mag if lead > 0 else -mag

    def primitive(self) -> tuple[Fraction, "MPoly"]:
        c = self.content_fraction()
        if c == 0:
            return Fraction(0), self
        inv = QQ(c.denominator, c.numerator)
        return c, MPoly(self.ctx, self.p.mul_ground(inv))

    # -- substitution ------------------------------------------------------

    def shift(self, s: int) -> "MPoly":
        """x -> x + s."""
        if s == 0 or not self.p:
            return self
        xg = self.ctx.xgen
        return MPoly(self.ctx, self.p.compose(xg, xg + s))

    def subs(self, sym: Symbol, value) -> "MPoly":
        gen = self.ctx.gen_of(sym)
        if isinstance(value, int):
            val = self.ctx.ring.ground_new(QQ(value))
        elif isinstance(value, Fraction):
            val = self.ctx.ring.ground_new(QQ(value.numerator, value.denominator))
        elif isinstance(value, MPoly):
            val = value.p
        else:
            val = self.ctx.ring.from_expr(sympy.sympify(value))
        if not self.p:
            return self
        return MPoly(self.ctx, self.p.compose(gen, val))

    def eval_x(self, k) -> "MPoly":
        """Substitute the summation variable; result is x-free."""
        return self.subs(self.ctx.x, k)

    def eval_all(self, assignment: dict[str, Fraction]) -> Fraction:
        out = self.p
        ring = self.ctx.ring
        for name, v in assignment.items():
            if name in self.ctx.params or name == self.ctx.var:
                gen = self.ctx.gens[(self.ctx.params + (self.ctx.var,)).index(name)]
                out = out.compose(gen, ring.ground_new(QQ(v.numerator, v.denominator)))
        if out and max(sum(m) for m in out.monoms()) > 0:
            raise ArithError("evaluation left free symbols")
        if not out:
            return Fraction(0)
        c = out.LC
        return Fraction(c.numerator, c.denominator)

    def as_expr(self):
        return self.p.as_expr()

    def __str__(self) -> str:
        return poly_text(self)

    def __repr__(self) -> str:
        return f"MPoly({self.p})"


def poly_text(p: MPoly) -> str:
    """Deterministic text: graded-lex descending terms, ^ for powers."""
    if p.is_zero():
        return "0"
    syms = p.ctx.symbols
    terms = sorted(p.p.terms(), key=lambda t: (sum(t[0]), t[0]), reverse=True)
    out = []
    for monom, coeff in terms:
        c = Fraction(coeff.numerator, coeff.denominator)
        parts = []
        for s, e in zip(syms, monom):
            if e == 1:
                parts.append(str(s))
            elif e > 1:
                parts.append(f"{s}^{e}")
        if not parts:
            body = _frac_text(abs(c))
        else:
            mag = abs(c)
            body = "*".join(parts) if mag == 1 else _frac_text(mag) + "*" + "*".join(parts)
        out.append(("-" if c < 0 else "+", body))
    first_sign, first_body = out[0]
    text = ("-" if first_sign == "-" else "") + first_body
    for sign, body in out[1:]:
        text += sign + body
    return text


def _frac_text(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


class RatFun:
    """Reduced fraction of MPoly; denominator primitive with positive
    graded-lex leading coefficient, so equal field elements have identical
    representations."""

    __slots__ = ("num", "den", "_hash")

    def __init__(self, num: MPoly, den: MPoly):
        self.num = num
        self.den = den
        self._hash = None

    @staticmethod
    def make(num: MPoly, den: MPoly) -> "RatFun":
        if den.is_zero():
            raise ArithError("zero denominator")
        if num.is_zero():
            return RatFun(num.ctx.zero_poly(), num.ctx.one_poly())
        np, dp = num.p.cancel(den.p)
        c = MPoly(num.ctx, dp).content_fraction()
        if c != 1:
            inv = QQ(c.denominator, c.numerator)
            np = np.mul_ground(inv)
            dp = dp.mul_ground(inv)
        return RatFun(MPoly(num.ctx, np), MPoly(num.ctx, dp))

    @property
    def ctx(self) -> Context:
        return self.num.ctx

    def __eq__(self, other) -> bool:
        return isinstance(other, RatFun) and self.num == other.num and self.den == other.den

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.num, self.den))
        return self._hash

    def __add__(self, other: "RatFun") -> "RatFun":
        if self.den == other.den:
            return RatFun.make(self.num + other.num, self.den)
        return RatFun.make(self.num * other.den + other.num * self.den, self.den * other.den)

    def __sub__(self, other: "RatFun") -> "RatFun":
        if self.den == other.den:
            return RatFun.make(self.num - other.num, self.den)
        return RatFun.make(self.num * other.den - other.num * self.den, self.den * other.den)

    def __mul__(self, other: "RatFun") -> "RatFun":
        return RatFun.make(self.num * other.num, self.den * other.den)

    def __truediv__(self, other: "RatFun") -> "RatFun":
        if other.is_zero():
            raise ArithError("division by zero")
        return RatFun.make(self.num * other.den, self.den * other.num)

    def __neg__(self) -> "RatFun":
        return RatFun(-self.num, self.den)

    def __pow__(self, e: int) -> "RatFun":
        if e == 0:
            return self.ctx.one()
        if e < 0:
            return RatFun.make(self.den ** (-e), self.num ** (-e))
        return RatFun.make(self.num ** e, self.den ** e)

    def inv(self) -> "RatFun":
        return RatFun.make(self.den, self.num)

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def is_one(self) -> bool:
        return self.num == self.den

    def is_constant(self) -> bool:
        return self.num.is_constant() and self.den.is_constant()

    def is_param_only(self) -> bool:
        """Free of the summation variable (an element of K)."""
        return self.num.degree() <= 0 and self.den.degree() <= 0

    def as_fraction(self) -> Fraction:
        return self.num.as_fraction() / self.den.as_fraction()

    def shift(self, s: int) -> "RatFun":
        if s == 0:
            return self
        return RatFun.make(self.num.shift(s), self.den.shift(s))

    def subs_param(self, name: str, value) -> "RatFun":
        sym = Symbol(name)
        return RatFun.make(self.num.subs(sym, value), self.den.subs(sym, value))

    def eval_x(self, k) -> "RatFun":
        """ev(f, k): substitute x := k; a vanishing denominator yields 0."""
        den = self.den.eval_x(k)
        if den.is_zero():
            return self.ctx.zero()
        return RatFun.make(self.num.eval_x(k), den)

    def eval_spec(self, k, assignment: dict[str, Fraction]) -> Fraction:
        den = self.den.eval_x(k).eval_all(assignment)
        if den == 0:
            return Fraction(0)
        return self.num.eval_x(k).eval_all(assignment) / den

    def degree(self) -> int:
        return self.num.degree() - self.den.degree()

    def __str__(self) -> str:
        if self.den.is_one():
            return poly_text(self.num)
        ntext = poly_text(self.num)
        if len(self.num.p.terms()) > 1:
            ntext = f"({ntext})"
        dtext = poly_text(self.den)
        if len(self.den.p.terms()) > 1 or "*" in dtext or "^" in dtext:
            dtext = f"({dtext})"
        return f"{ntext}/{dtext}"

    def __repr__(self) -> str:
        return f"RatFun({self})"


# ---------------------------------------------------------------------------
# shift toolkit


def _int_roots_ring(p, gen) -> list[int]:
    """Integer roots of a ring element in `gen`, identically in the other
    generators: specialize, intersect, verify exactly."""
    ring = p.ring
    others = [g for g in ring.gens if g != gen]
    candidates: set[int] | None = None
    for base in (17, 101, 1009):
        sp = p
        for i, g in enumerate(others):
            sp = sp.compose(g, ring.ground_new(QQ(base + 7 * i + (i % 2))))
        if not sp:
            continue
        up = _univariate(sp, gen)
        roots = {int(r) for r, _ in up.ground_roots().items() if r == int(r)}
        candidates = roots if candidates is None else (candidates & roots)
        if not candidates:
            return []
        if len(candidates) <= 4 and base != 17:
            break
    if candidates is None:
        raise ArithError("cannot isolate integer roots (degenerate specializations)")
    out = []
    for k in sorted(candidates):
        if not p.compose(gen, ring.ground_new(QQ(k))):
            out.append(k)
    return out


_UROOT = Symbol("_uroot")


def _univariate(p, gen) -> Poly:
    """Dense univariate sympy Poly of a ring element in `gen` (the other
    generators must not occur)."""
    ring = p.ring
    i = ring.gens.index(gen)
    d = max(m[i] for m in p.monoms())
    dense = [QQ(0)] * (d + 1)
    for monom, coeff in p.terms():
        if any(e for j, e in enumerate(monom) if j != i):
            raise ArithError("not univariate after specialization")
        dense[d - monom[i]] = coeff
    return Poly.from_list(dense, _UROOT, domain=QQ)


def integer_roots(p: MPoly, sym: Symbol | None = None) -> list[int]:
    """All k in Z with p(sym := k) = 0 identically in the other symbols.

    Specializes remaining symbols at integer points, intersects the integer
    root sets, and verifies each candidate exactly.
    """
    if p.is_zero():
        raise ArithError("integer_roots of the zero polynomial")
    sym = sym if sym is not None else p.ctx.x
    return _int_roots_ring(p.p, p.ctx.gen_of(sym))


class DispersionSet:
    __slots__ = ("shifts",)

    def __init__(self, shifts: tuple[int, ...]):
        self.shifts = shifts

    def max(self) -> int:
        return max(self.shifts) if self.shifts else 0

    def __iter__(self):
        return iter(self.shifts)

    def __contains__(self, j):
        return j in self.shifts

    def __repr__(self):
        return f"DispersionSet({self.shifts})"


_disp_cache: dict = {}


def dispersion(a: MPoly, b: MPoly, sym: Symbol | None = None) -> DispersionSet:
    """All j >= 0 with deg gcd(a(x), b(x+j)) >= 1, via integer roots of the
    resultant Res_x(a(x), b(x+y)) in y, each candidate verified by a gcd."""
    if a.is_zero() or b.is_zero():
        raise ArithError("dispersion of zero polynomial")
    sym = sym if sym is not None else a.ctx.x
    key = (a, b, sym)
    hit = _disp_cache.get(key)
    if hit is not None:
        return hit
    out = _dispersion(a, b, sym)
    if len(_disp_cache) < 100000:
        _disp_cache[key] = out
    return out


def _dispersion(a: MPoly, b: MPoly, sym: Symbol) -> DispersionSet:
    if a.degree(sym) < 1 or b.degree(sym) < 1:
        return DispersionSet(())
    ctx = a.ctx
    # auxiliary ring with the main variable first, then the shift symbol
    names = (str(sym), "_disp_y") + tuple(str(s) for s in ctx.symbols if s != sym)
    made = _make_ring(", ".join(names), QQ)
    rng = made[0]
    xg, yg = made[1], made[2]
    remap = {nm: i for i, nm in enumerate(names)}
    src_names = [str(s) for s in ctx.symbols]

    def transfer(p: MPoly):
        out = rng.zero
        for monom, coeff in p.p.terms():
            m = [0] * len(names)
            for sname, e in zip(src_names, monom):
                m[remap[sname]] = e
            out += rng.term_new(tuple(m), coeff)
        return out

    ra = transfer(a)
    rb = transfer(b).compose(xg, xg + yg)
    res = ra.resultant(rb)
    if not res:
        window = range(0, a.degree(sym) + b.degree(sym) + 2)
        hits = [j for j in window if _gcd_nonconst(a, b, sym, j)]
        return DispersionSet(tuple(hits))
    # the resultant lives in a ring without the eliminated variable
    res_ring = res.ring if hasattr(res, "ring") else None
    if res_ring is None:
        return DispersionSet(())
    ygen = next(g for g in res_ring.gens if str(g) == "_disp_y")
    roots = _int_roots_ring(res, ygen)
    hits = tuple(j for j in roots if j >= 0 and _gcd_nonconst(a, b, sym, j))
    return DispersionSet(hits)


def _gcd_nonconst(a: MPoly, b: MPoly, sym: Symbol, j: int) -> bool:
    bj = b.subs(sym, sym + j)
    return a.gcd(bj).degree(sym) >= 1


def squarefree(p: MPoly, sym: Symbol | None = None) -> list[tuple[MPoly, int]]:
    """Squarefree decomposition; factors of positive degree in sym, pairwise
    coprime; the product of factor^mult equals p up to content."""
    if p.is_zero():
        raise ArithError("squarefree decomposition of zero")
    sym = sym if sym is not None else p.ctx.x
    _, parts = p.p.sqf_list()
    out = []
    for f, m in parts:
        mp = MPoly(p.ctx, f)
        if mp.degree(sym) >= 1:
            _, prim = mp.primitive()
            out.append((prim, int(m)))
    return out


def resultant(a: MPoly, b: MPoly, sym: Symbol | None = None) -> MPoly:
    """Resultant eliminating sym."""
    sym = sym if sym is not None else a.ctx.x
    if a.is_zero() or b.is_zero():
        raise ArithError("resultant of zero polynomial")
    if a.degree(sym) <= 0:
        return a ** max(b.degree(sym), 0)
    if b.degree(sym) <= 0:
        return b ** a.degree(sym)
    gens = (sym,) + tuple(s for s in a.ctx.symbols if s != sym)
    pa = Poly(a.as_expr(), *gens, domain=QQ)
    pb = Poly(b.as_expr(), *gens, domain=QQ)
    r = pa.resultant(pb)
    return a.ctx.poly(r.as_expr() if isinstance(r, Poly) else r)


def is_square(p: MPoly) -> MPoly | None:
    """Return q with q*q = p, or None."""
    from math import isqrt

    if p.is_zero():
        return p.ctx.zero_poly()
    _, parts = p.p.sqf_list()
    root = p.ctx.ring.one
    for f, m in parts:
        if m % 2:
            return None
        root = root * f ** (m // 2)
    q = MPoly(p.ctx, root)
    # p = c * q*q for a rational constant c, which must be a square
    q2 = q * q
    if q2.is_zero():
        return None
    c = p.content_fraction() / q2.content_fraction()
    if c <= 0:
        return None
    cn, cd = c.numerator, c.denominator
    rn, rd = isqrt(cn), isqrt(cd)
    if rn * rn != cn or rd * rd != cd:
        return None
    cand = MPoly(p.ctx, q.p.mul_ground(QQ(rn, rd)))
    if cand * cand == p:
        return cand
    return None


# ---------------------------------------------------------------------------
# linear algebra over the fraction field


def nullspace(rows: list[list[RatFun]], ctx: Context) -> list[list[RatFun]]:
    """Basis of the right kernel of the matrix (entries in K(x))."""
    if not rows:
        return []
    ncols = len(rows[0])
    mat = [list(r) for r in rows]
    nrows = len(mat)
    pivot_cols: list[int] = []
    r = 0
    for c in range(ncols):
        pivot = None
        for i in range(r, nrows):
            if not mat[i][c].is_zero():
                pivot = i
                break
        if pivot is None:
            continue
        mat[r], mat[pivot] = mat[pivot], mat[r]
        pv = mat[r][c]
        mat[r] = [e / pv for e in mat[r]]
        for i in range(nrows):
            if i != r and not mat[i][c].is_zero():
                f = mat[i][c]
                mat[i] = [a - f * b for a, b in zip(mat[i], mat[r])]
        pivot_cols.append(c)
        r += 1
        if r == nrows:
            break
    free_cols = [c for c in range(ncols) if c not in pivot_cols]
    basis = []
    for fc in free_cols:
        vec = [ctx.zero() for _ in range(ncols)]
        vec[fc] = ctx.one()
        for i, pc in enumerate(pivot_cols):
            vec[pc] = -mat[i][fc]
        basis.append(vec)
    return basis


def solve_affine(rows: list[list[RatFun]], rhs: list[RatFun], ctx: Context):
    """One solution of A v = b, or None; use nullspace for the kernel."""
    ncols = len(rows[0]) if rows else 0
    aug = [list(r) + [b] for r, b in zip(rows, rhs)]
    kern = nullspace(aug, ctx)
    for vec in kern:
        if not vec[-1].is_zero():
            t = vec[-1]
            return [-(v / t) for v in vec[:-1]]
    if all(b.is_zero() for b in rhs):
        return [ctx.zero()] * ncols
    return None


def int_kernel(matrix: list[list[int]]) -> list[list[int]]:
    """Basis of the integer kernel {z : M z = 0} via unimodular column ops."""
    if not matrix or not matrix[0]:
        return []
    m = len(matrix)
    n = len(matrix[0])
    a = [list(row) for row in matrix]
    u = [[1 if i == j else 0 for j in range(n)] for i in range(n)]

    def col_op(src, dst, q):
        for i in range(m):
            a[i][dst] -= q * a[i][src]
        for i in range(n):
            u[i][dst] -= q * u[i][src]

    def col_swap(j, k):
        for i in range(m):
            a[i][j], a[i][k] = a[i][k], a[i][j]
        for i in range(n):
            u[i][j], u[i][k] = u[i][k], u[i][j]

    col = 0
    for row in range(m):
        if col >= n:
            break
        nz = [j for j in range(col, n) if a[row][j] != 0]
        if not nz:
            continue
        while len(nz) > 1:
            nz.sort(key=lambda j: abs(a[row][j]))
            j0 = nz[0]
            for k in nz[1:]:
                col_op(j0, k, a[row][k] // a[row][j0])
            nz = [j for j in range(col, n) if a[row][j] != 0]
        j0 = nz[0]
        if j0 != col:
            col_swap(col, j0)
        col += 1
    kernel = []
    for j in range(n):
        if all(a[i][j] == 0 for i in range(m)):
            vec = [u[i][j] for i in range(n)]
            if any(vec):
                kernel.append(vec)
    return kernel
