"""Term algebra of indefinite nested sums over products.

Expressions are built from rational functions in the outer variable, n-ary
sums and products of expressions, integer powers, Sum(l, body), Prod(l, body)
and the alternating-sign atom RPow(-1).  Inside Sum/Prod the variable x of
the body denotes that sum's own running index; the bound is the enclosing
index (kept implicit).  Evaluation follows the usual recursive rules with the
convention that a specialized zero denominator evaluates to 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator

from .arith import ArithError, Context, MPoly, RatFun, integer_roots


class ExprError(ValueError):
    pass


class Expr:
    """Base class; concrete nodes below are frozen dataclasses."""

    __slots__ = ()


@dataclass(frozen=True)
class Rat(Expr):
    fun: RatFun


@dataclass(frozen=True)
class Add(Expr):
    args: tuple[Expr, ...]


@dataclass(frozen=True)
class Mul(Expr):
    args: tuple[Expr, ...]


@dataclass(frozen=True)
class Pow(Expr):
    base: Expr
    exp: int


@dataclass(frozen=True)
class Sum(Expr):
    lower: int
    body: Expr


@dataclass(frozen=True)
class Prod(Expr):
    lower: int
    body: Expr


@dataclass(frozen=True)
class RPow(Expr):
    root: Fraction = Fraction(-1)


# ---------------------------------------------------------------------------
# construction helpers (flatten, deterministic child order)


def sort_key(e: Expr):
    if isinstance(e, Rat):
        return (0, _ratfun_key(e.fun))
    if isinstance(e, RPow):
        return (1, (e.root.numerator, e.root.denominator))
    if isinstance(e, Prod):
        return (2, e.lower, sort_key(e.body))
    if isinstance(e, Sum):
        return (3, e.lower, sort_key(e.body))
    if isinstance(e, Pow):
        return (4, e.exp, sort_key(e.base))
    if isinstance(e, Mul):
        return (5, tuple(sort_key(a) for a in e.args))
    if isinstance(e, Add):
        return (6, tuple(sort_key(a) for a in e.args))
    raise ExprError(f"unknown node {e!r}")


def _ratfun_key(f: RatFun):
    def pkey(p: MPoly):
        return tuple(sorted((m, (c.numerator, c.denominator)) for m, c in p.p.terms()))

    return (pkey(f.num), pkey(f.den))


def eadd(*args: Expr) -> Expr:
    flat: list[Expr] = []
    rat: RatFun | None = None
    for a in args:
        for b in (a.args if isinstance(a, Add) else (a,)):
            if isinstance(b, Rat):
                rat = b.fun if rat is None else rat + b.fun
            else:
                flat.append(b)
    if rat is not None and (not rat.is_zero() or not flat):
        flat.append(Rat(rat))
    if not flat:
        raise ExprError("empty sum")
    if len(flat) == 1:
        return flat[0]
    return Add(tuple(sorted(flat, key=sort_key)))


def emul(*args: Expr) -> Expr:
    flat: list[Expr] = []
    rat: RatFun | None = None
    for a in args:
        for b in (a.args if isinstance(a, Mul) else (a,)):
            if isinstance(b, Rat):
                rat = b.fun if rat is None else rat * b.fun
            else:
                flat.append(b)
    if rat is not None and rat.is_zero():
        return Rat(rat)
    if rat is not None and (not rat.is_one() or not flat):
        flat.append(Rat(rat))
    if not flat:
        raise ExprError("empty product")
    if len(flat) == 1:
        return flat[0]
    return Mul(tuple(sorted(flat, key=sort_key)))


def epow(base: Expr, exp: int) -> Expr:
    if exp == 1:
        return base
    if exp == 0:
        raise ExprError("zero exponent is not part of the algebra")
    if isinstance(base, Rat):
        if exp < 0 and base.fun.is_zero():
            raise ExprError("negative power of zero")
        return Rat(base.fun ** exp)
    if isinstance(base, Pow):
        return epow(base.base, base.exp * exp)
    if exp < 0 and not is_product_power(base):
        raise ExprError("negative powers are only allowed on products")
    return Pow(base, exp)


def is_product_power(e: Expr) -> bool:
    """Membership in the group of power products of products."""
    if isinstance(e, (Prod, RPow)):
        return True
    if isinstance(e, Pow):
        return is_product_power(e.base)
    if isinstance(e, Mul):
        return all(is_product_power(a) for a in e.args)
    return False


# ---------------------------------------------------------------------------
# evaluation and depth


@dataclass
class EvalContext:
    """Parameter assignment plus a memo table; single-owner."""

    ctx: Context
    assignment: dict[str, Fraction] = field(default_factory=dict)
    memo: dict = field(default_factory=dict)

    def missing(self) -> list[str]:
        return [p for p in self.ctx.params if p not in self.assignment]


def eval_spec(e: Expr, n: int, ec: EvalContext) -> Fraction:
    """Fully specialized evaluation ev(e, n) in Q."""
    key = (id(e), n)
    hit = ec.memo.get(key)
    if hit is not None:
        return hit
    if isinstance(e, Rat):
        v = e.fun.eval_spec(n, ec.assignment)
    elif isinstance(e, Add):
        v = sum((eval_spec(a, n, ec) for a in e.args), Fraction(0))
    elif isinstance(e, Mul):
        v = Fraction(1)
        for a in e.args:
            v *= eval_spec(a, n, ec)
    elif isinstance(e, Pow):
        b = eval_spec(e.base, n, ec)
        v = b ** e.exp if (b != 0 or e.exp > 0) else Fraction(0)
    elif isinstance(e, Sum):
        v = sum((eval_spec(e.body, i, ec) for i in range(e.lower, n + 1)), Fraction(0))
    elif isinstance(e, Prod):
        v = Fraction(1)
        for i in range(e.lower, n + 1):
            v *= eval_spec(e.body, i, ec)
    elif isinstance(e, RPow):
        v = e.root ** n
    else:
        raise ExprError(f"cannot evaluate {e!r}")
    ec.memo[key] = v
    return v


def eval_sym(e: Expr, n: int, ctx: Context, memo: dict | None = None) -> RatFun:
    """Evaluation with symbolic parameters: values in K = Q(params)."""
    if memo is None:
        memo = {}
    key = (id(e), n)
    hit = memo.get(key)
    if hit is not None:
        return hit
    if isinstance(e, Rat):
        v = e.fun.eval_x(n)
    elif isinstance(e, Add):
        v = ctx.zero()
        for a in e.args:
            v = v + eval_sym(a, n, ctx, memo)
    elif isinstance(e, Mul):
        v = ctx.one()
        for a in e.args:
            v = v * eval_sym(a, n, ctx, memo)
    elif isinstance(e, Pow):
        b = eval_sym(e.base, n, ctx, memo)
        v = b ** e.exp if (not b.is_zero() or e.exp > 0) else ctx.zero()
    elif isinstance(e, Sum):
        v = ctx.zero()
        for i in range(e.lower, n + 1):
            v = v + eval_sym(e.body, i, ctx, memo)
    elif isinstance(e, Prod):
        v = ctx.one()
        for i in range(e.lower, n + 1):
            v = v * eval_sym(e.body, i, ctx, memo)
    elif isinstance(e, RPow):
        v = ctx.from_fraction(e.root ** n)
    else:
        raise ExprError(f"cannot evaluate {e!r}")
    memo[key] = v
    return v


def depth(e: Expr) -> int:
    if isinstance(e, Rat):
        return 0 if e.fun.is_param_only() else 1
    if isinstance(e, (Add, Mul)):
        return max(depth(a) for a in e.args)
    if isinstance(e, Pow):
        return depth(e.base)
    if isinstance(e, (Sum, Prod)):
        return depth(e.body) + 1
    if isinstance(e, RPow):
        return 1
    raise ExprError(f"unknown node {e!r}")


def atoms(e: Expr) -> Iterator[Expr]:
    """All Sum/Prod/RPow nodes, outer before inner, including nested ones."""
    if isinstance(e, (Add, Mul)):
        for a in e.args:
            yield from atoms(a)
    elif isinstance(e, Pow):
        yield from atoms(e.base)
    elif isinstance(e, (Sum, Prod)):
        yield e
        yield from atoms(e.body)
    elif isinstance(e, RPow):
        yield e


def atom_set(exprs: Iterable[Expr]) -> set[Expr]:
    out: set[Expr] = set()
    for e in exprs:
        out.update(atoms(e))
    return out


def subs_param(e: Expr, name: str, value) -> Expr:
    """Substitute a parameter everywhere (e.g. n -> n+1)."""
    if isinstance(e, Rat):
        return Rat(e.fun.subs_param(name, value))
    if isinstance(e, Add):
        return eadd(*[subs_param(a, name, value) for a in e.args])
    if isinstance(e, Mul):
        return emul(*[subs_param(a, name, value) for a in e.args])
    if isinstance(e, Pow):
        return Pow(subs_param(e.base, name, value), e.exp)
    if isinstance(e, Sum):
        return Sum(e.lower, subs_param(e.body, name, value))
    if isinstance(e, Prod):
        return Prod(e.lower, subs_param(e.body, name, value))
    return e


# ---------------------------------------------------------------------------
# reduced representation


PowerProduct = tuple[tuple[Expr, int], ...]


@dataclass(frozen=True)
class ReducedExpr:
    """Sum of coefficient * power-product terms; atoms pairwise distinct in a
    product, no two power products equal, coefficients nonzero."""

    ctx: Context
    terms: tuple[tuple[RatFun, PowerProduct], ...]

    def to_expr(self) -> Expr:
        if not self.terms:
            return Rat(self.ctx.zero())
        parts = []
        for coeff, pp in self.terms:
            factors = [epow(atom, e) for atom, e in pp]
            if not factors:
                parts.append(Rat(coeff))
            elif coeff.is_one():
                parts.append(emul(*factors) if len(factors) > 1 else factors[0])
            else:
                parts.append(emul(Rat(coeff), *factors))
        return eadd(*parts) if len(parts) > 1 else parts[0]

    def is_zero(self) -> bool:
        return not self.terms


def _merge_pp(a: PowerProduct, b: PowerProduct) -> PowerProduct:
    table: dict = {}
    order: list[Expr] = []
    for atom, e in a + b:
        if atom in table:
            table[atom] += e
        else:
            table[atom] = e
            order.append(atom)
    items = []
    for atom in order:
        e = table[atom]
        if isinstance(atom, RPow):
            e %= 2
        if e != 0:
            items.append((atom, e))
    items.sort(key=lambda ae: sort_key(ae[0]))
    return tuple(items)


def _combine(ctx: Context, parts: Iterable[tuple[RatFun, PowerProduct]]) -> ReducedExpr:
    table: dict[PowerProduct, RatFun] = {}
    for coeff, pp in parts:
        if pp in table:
            table[pp] = table[pp] + coeff
        else:
            table[pp] = coeff
    terms = [(c, pp) for pp, c in table.items() if not c.is_zero()]
    terms.sort(key=lambda t: tuple(sort_key(epow(a, e)) for a, e in t[1]))
    return ReducedExpr(ctx, tuple(terms))


def _mul_reduced(ctx: Context, a: ReducedExpr, b: ReducedExpr) -> ReducedExpr:
    parts = []
    for ca, pa in a.terms:
        for cb, pb in b.terms:
            parts.append((ca * cb, _merge_pp(pa, pb)))
    return _combine(ctx, parts)


def collect(e: Expr, ctx: Context) -> ReducedExpr:
    """Reduced representation; bodies of sums and products are collected
    recursively and lower bounds lifted (with exact boundary corrections) so
    the result is sum-product reduced."""
    if isinstance(e, Rat):
        return _combine(ctx, [(e.fun, ())])
    if isinstance(e, Add):
        parts = []
        for a in e.args:
            parts.extend(collect(a, ctx).terms)
        return _combine(ctx, parts)
    if isinstance(e, Mul):
        acc = _combine(ctx, [(ctx.one(), ())])
        for a in e.args:
            acc = _mul_reduced(ctx, acc, collect(a, ctx))
        return acc
    if isinstance(e, Pow):
        base = collect(e.base, ctx)
        k = e.exp
        if k < 0:
            if len(base.terms) != 1:
                raise ExprError("negative power of a non-product expression")
            coeff, pp = base.terms[0]
            if any(not isinstance(a, (Prod, RPow)) for a, _ in pp):
                raise ExprError("negative power of a non-product expression")
            scaled = tuple((a, x * k) for a, x in pp)
            return _combine(ctx, [(coeff ** k, _merge_pp((), scaled))])
        acc = _combine(ctx, [(ctx.one(), ())])
        for _ in range(k):
            acc = _mul_reduced(ctx, acc, base)
        return acc
    if isinstance(e, RPow):
        return _combine(ctx, [(ctx.one(), ((RPow(e.root), 1),))])
    if isinstance(e, Sum):
        body = collect(e.body, ctx)
        lift = max(e.lower, _required_lower(body))
        atom = Sum(lift, body.to_expr())
        parts = [(ctx.one(), ((atom, 1),))]
        if lift > e.lower:
            c = ctx.zero()
            memo: dict = {}
            bexpr = body.to_expr()
            for k in range(e.lower, lift):
                c = c + eval_sym(bexpr, k, ctx, memo)
            if not c.is_zero():
                parts.append((c, ()))
        return _combine(ctx, parts)
    if isinstance(e, Prod):
        body = collect(e.body, ctx)
        if len(body.terms) != 1:
            raise ExprError("product body must be a single coefficient*power-product term")
        coeff, pp = body.terms[0]
        if any(not isinstance(a, (Prod, RPow)) for a, _ in pp):
            raise ExprError("product body may only involve products")
        z = _zfun_rat(coeff)
        if e.lower < z:
            raise ExprError(
                f"product lower bound {e.lower} is below the zero bound {z} of the "
                f"multiplicand; lift the bound to at least {z}"
            )
        lift = max(e.lower, _required_lower(body))
        atom = Prod(lift, body.to_expr())
        const = ctx.one()
        if lift > e.lower:
            memo: dict = {}
            bexpr = body.to_expr()
            for k in range(e.lower, lift):
                const = const * eval_sym(bexpr, k, ctx, memo)
        return _combine(ctx, [(const, ((atom, 1),))])
    raise ExprError(f"cannot collect {e!r}")


def _required_lower(body: ReducedExpr) -> int:
    """Smallest admissible lower bound: beyond coefficient poles and at least
    the lower bounds of the inner sums and products."""
    req = 0
    for coeff, pp in body.terms:
        req = max(req, _lfun_rat(coeff))
        for atom, _ in pp:
            if isinstance(atom, (Sum, Prod)):
                req = max(req, atom.lower)
    return req


def _lfun_rat(f: RatFun) -> int:
    if f.den.degree() <= 0:
        return 0
    roots = [r for r in integer_roots(f.den) if r >= 0]
    return (max(roots) + 1) if roots else 0


def _zfun_rat(f: RatFun) -> int:
    if f.is_zero():
        raise ExprError("zero multiplicand in a product")
    num_l = _lfun_rat(RatFun.make(f.den, f.num))
    return max(_lfun_rat(f), num_l)


def ofun(e: Expr, ctx: Context) -> int:
    """Bound from which on evaluation is pole-free and homomorphic."""
    red = collect(e, ctx)
    b = 0
    for coeff, pp in red.terms:
        b = max(b, _lfun_rat(coeff))
        for atom, _ in pp:
            b = max(b, _ofun_atom(atom, ctx))
    return b


def _ofun_atom(a: Expr, ctx: Context) -> int:
    if isinstance(a, (Sum, Prod)):
        return max(0, a.lower - 1)
    return 0


lfun_rat = _lfun_rat
zfun_rat = _zfun_rat
