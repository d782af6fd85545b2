"""Text format for expressions.

Grammar (UTF-8):

    expr   := addend (('+'|'-') addend)*
    addend := factor (('*'|'/') factor)*
    factor := atom ('^' int)?
    atom   := int | name | '(' expr ')'
            | 'Sum(' var '=' int '..' upvar ',' expr ')'
            | 'Prod(' var '=' int '..' upvar ',' expr ')'
            | 'RPow(' rational ')'
            | 'fact(' expr ')' | 'binom(' expr ',' expr ')'
            | 'pochhammer(' expr ',' expr ')' | 'power(' rational ',' var ')'
            | 'S(' intlist ',' var ')'

`upvar` must be the enclosing bound variable (or the top variable).  Inside a
sum or product body the only legal variable is that sum's own index; declared
parameters may appear anywhere.  Division by sum-containing expressions is
rejected.  Sugar atoms expand to Sum/Prod/RPow normal forms at parse time.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .arith import Context, MPoly, RatFun
from .expr import (
    Add, Expr, ExprError, Mul, Pow, Prod, Rat, RPow, Sum,
    eadd, emul, epow, is_product_power,
)


class ParseError(ValueError):
    def __init__(self, msg: str, pos: int):
        super().__init__(f"{msg} (at offset {pos})")
        self.pos = pos


_SUGAR = ("Sum", "Prod", "RPow", "fact", "binom", "pochhammer", "power", "S")


@dataclass
class _Token:
    kind: str  # 'int' | 'name' | 'op'
    text: str
    pos: int


def _lex(text: str) -> list[_Token]:
    out = []
    i = 0
    n = len(text)
    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
            continue
        if c.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            out.append(_Token("int", text[i:j], i))
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            out.append(_Token("name", text[i:j], i))
            i = j
            continue
        if c in "+-*/^(),=":
            if c == "." and False:
                pass
            out.append(_Token("op", c, i))
            i += 1
            continue
        if c == ".":
            if text[i : i + 2] == "..":
                out.append(_Token("op", "..", i))
                i += 2
                continue
            raise ParseError("unexpected '.'", i)
        raise ParseError(f"unexpected character {c!r}", i)
    out.append(_Token("end", "", n))
    return out


class Parser:
    def __init__(self, text: str, ctx: Context, var: str):
        self.text = text
        self.ctx = ctx
        self.var = var
        self.toks = _lex(text)
        self.i = 0
        if var in ctx.params:
            raise ExprError(f"variable {var!r} is also a parameter")

    # -- token helpers -----------------------------------------------------

    def peek(self) -> _Token:
        return self.toks[self.i]

    def next(self) -> _Token:
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, text: str) -> _Token:
        t = self.next()
        if t.text != text:
            raise ParseError(f"expected {text!r}, found {t.text!r}", t.pos)
        return t

    # -- grammar -----------------------------------------------------------

    def parse(self) -> Expr:
        e = self.expr(self.var)
        t = self.peek()
        if t.kind != "end":
            raise ParseError(f"trailing input {t.text!r}", t.pos)
        return e

    def expr(self, active: str) -> Expr:
        t = self.peek()
        negate = False
        if t.text == "-":
            self.next()
            negate = True
        elif t.text == "+":
            self.next()
        parts = [self._signed(self.addend(active), negate)]
        while self.peek().text in ("+", "-"):
            op = self.next().text
            parts.append(self._signed(self.addend(active), op == "-"))
        return eadd(*parts) if len(parts) > 1 else parts[0]

    def _signed(self, e: Expr, negate: bool) -> Expr:
        if not negate:
            return e
        if isinstance(e, Rat):
            return Rat(-e.fun)
        if isinstance(e, Mul):
            rats = [a for a in e.args if isinstance(a, Rat)]
            if rats:
                rest = [a for a in e.args if a is not rats[0]]
                return emul(Rat(-rats[0].fun), *rest)
        return emul(Rat(-self.ctx.one()), e)

    def addend(self, active: str) -> Expr:
        e = self.factor(active)
        while self.peek().text in ("*", "/"):
            op = self.next().text
            pos = self.peek().pos
            f = self.factor(active)
            if op == "*":
                e = self._mul(e, f)
            else:
                e = self._div(e, f, pos)
        return e

    def _mul(self, a: Expr, b: Expr) -> Expr:
        if isinstance(a, Rat) and isinstance(b, Rat):
            return Rat(a.fun * b.fun)
        return emul(a, b)

    def _div(self, a: Expr, b: Expr, pos: int) -> Expr:
        if isinstance(b, Rat):
            if b.fun.is_zero():
                raise ParseError("division by zero", pos)
            inv: Expr = Rat(b.fun.inv())
        elif is_product_power(b):
            inv = epow(b, -1)
        else:
            raise ParseError("division by a sum-containing expression", pos)
        return self._mul(a, inv)

    def factor(self, active: str) -> Expr:
        e = self.atom(active)
        if self.peek().text == "^":
            self.next()
            k = self._int()
            if k == 0:
                return Rat(self.ctx.one())
            try:
                e = epow(e, k)
            except ExprError as err:
                raise ParseError(str(err), self.peek().pos)
        return e

    def _int(self) -> int:
        sign = 1
        t = self.next()
        if t.text == "-":
            sign = -1
            t = self.next()
        elif t.text == "+":
            t = self.next()
        if t.kind != "int":
            raise ParseError(f"expected integer, found {t.text!r}", t.pos)
        return sign * int(t.text)

    def _rational(self) -> Fraction:
        num = self._int()
        if self.peek().text == "/":
            self.next()
            den = self._int()
            return Fraction(num, den)
        return Fraction(num)

    def atom(self, active: str) -> Expr:
        t = self.next()
        if t.kind == "int":
            return Rat(self.ctx.from_fraction(Fraction(int(t.text))))
        if t.text == "(":
            e = self.expr(active)
            self.expect(")")
            return e
        if t.kind == "name":
            name = t.text
            if name in _SUGAR and self.peek().text == "(":
                return self.sugar(name, active, t.pos)
            if name == active:
                return Rat(self.ctx.ratfun(self.ctx.poly(self.ctx.x)))
            if name in self.ctx.params:
                import sympy

                return Rat(self.ctx.ratfun(self.ctx.poly(sympy.Symbol(name))))
            raise ParseError(f"unbound variable {name!r}", t.pos)
        raise ParseError(f"unexpected token {t.text!r}", t.pos)

    # -- sugar -------------------------------------------------------------

    def sugar(self, head: str, active: str, pos: int) -> Expr:
        self.expect("(")
        if head in ("Sum", "Prod"):
            vtok = self.next()
            if vtok.kind != "name":
                raise ParseError("expected bound variable name", vtok.pos)
            v = vtok.text
            if v in self.ctx.params or v == active:
                raise ParseError(f"bound variable {v!r} shadows an active name", vtok.pos)
            self.expect("=")
            lower = self._int()
            if lower < 0:
                raise ParseError("lower bound must be nonnegative", vtok.pos)
            self.expect("..")
            utok = self.next()
            if utok.text != active:
                raise ParseError(
                    f"upper bound {utok.text!r} must be the enclosing variable {active!r}", utok.pos
                )
            self.expect(",")
            body = self.expr(v)
            self.expect(")")
            node = Sum(lower, body) if head == "Sum" else Prod(lower, body)
            if head == "Prod":
                from .expr import collect

                collect(node, self.ctx)  # validates the zero bound eagerly
            return node
        if head == "RPow":
            r = self._rational()
            self.expect(")")
            if r != -1:
                raise ParseError("RPow argument must be a nontrivial root of unity; over Q only -1", pos)
            return RPow(Fraction(-1))
        if head == "fact":
            arg = self.expr(active)
            self.expect(")")
            return self._fact(arg, pos)
        if head == "binom":
            a = self.expr(active)
            self.expect(",")
            b = self.expr(active)
            self.expect(")")
            return self._binom(a, b, pos)
        if head == "pochhammer":
            a = self.expr(active)
            self.expect(",")
            b = self.expr(active)
            self.expect(")")
            return self._pochhammer(a, b, pos)
        if head == "power":
            c = self._rational()
            self.expect(",")
            vtok = self.next()
            if vtok.text != active:
                raise ParseError(f"power exponent must be the variable {active!r}", vtok.pos)
            self.expect(")")
            return self._power(c, pos)
        if head == "S":
            weights = [self._int()]
            while self.peek().text == ",":
                save = self.i
                self.next()
                t = self.peek()
                if t.kind == "name":
                    self.i = save
                    break
                weights.append(self._int())
            self.expect(",")
            vtok = self.next()
            if vtok.text != active:
                raise ParseError(f"harmonic sum index must be {active!r}", vtok.pos)
            self.expect(")")
            return _harmonic(self.ctx, weights)
        raise ParseError(f"unknown function {head!r}", pos)

    def _linear(self, e: Expr, pos: int) -> tuple[int, MPoly]:
        """Split an integer-linear argument a*active + rest."""
        if not isinstance(e, Rat) or not e.fun.den.is_one():
            raise ParseError("argument must be polynomial in the variable", pos)
        p = e.fun.num
        if p.degree() > 1:
            raise ParseError("argument must be linear in the variable", pos)
        a = p.coeff_of(self.ctx.x, 1)
        if not a.is_constant() or a.as_fraction().denominator != 1:
            raise ParseError("argument slope must be an integer", pos)
        rest = p.coeff_of(self.ctx.x, 0)
        return int(a.as_fraction()), rest

    def _fact(self, arg: Expr, pos: int) -> Expr:
        slope, rest = self._linear(arg, pos)
        if slope <= 0:
            raise ParseError("fact argument must increase with the variable", pos)
        ratio = self._fact_ratio(slope, rest)
        lower = _fact_lower(slope, rest, pos)
        const = _fact_boundary(slope, rest, lower, pos, self.ctx)
        prod = Prod(lower, Rat(ratio))
        return prod if const.is_one() else emul(Rat(const), prod)

    def _fact_ratio(self, slope: int, rest: MPoly) -> RatFun:
        """(slope*x + rest)! / (slope*(x-1) + rest)! as a rational function."""
        ctx = self.ctx
        num = ctx.one_poly()
        h = ctx.poly(ctx.x) * ctx.poly(slope) + rest
        for t in range(1, slope + 1):
            num = num * (h + ctx.poly(t - slope))
        return ctx.ratfun(num)

    def _binom(self, a: Expr, b: Expr, pos: int) -> Expr:
        ctx = self.ctx
        sa, ra = self._linear(a, pos)
        sb, rb = self._linear(b, pos)
        sc, rc = sa - sb, ra - rb
        ratio = ctx.one()
        for slope, rest, inverted in ((sa, ra, False), (sb, rb, True), (sc, rc, True)):
            ratio = ratio * _factorial_ratio(ctx, slope, rest, inverted)
        lower = 1
        vals = [ctx.poly(s * (lower - 1)) + r for s, r in ((sa, ra), (sb, rb), (sc, rc))]
        const = ctx.one()
        if all(v.is_constant() for v in vals):
            fa, fb, fc = (int(v.as_fraction()) for v in vals)
            if fa < 0 or fb < 0 or fc < 0 or fa != fb + fc:
                raise ParseError("binom boundary value is not computable", pos)
            import math

            const = ctx.from_fraction(
                Fraction(math.factorial(fa), math.factorial(fb) * math.factorial(fc))
            )
        elif not (vals[1].is_zero() or vals[2].is_zero()):
            raise ParseError("binom with parameters needs a trivial boundary", pos)
        prod = Prod(lower, Rat(ratio))
        return prod if const.is_one() else emul(Rat(const), prod)

    def _pochhammer(self, a: Expr, b: Expr, pos: int) -> Expr:
        ctx = self.ctx
        sb, rb = self._linear(b, pos)
        if sb != 1 or not rb.is_zero():
            raise ParseError("pochhammer second argument must be the plain variable", pos)
        if not isinstance(a, Rat) or a.fun.num.degree() > 0 or a.fun.den.degree() > 0:
            raise ParseError("pochhammer base must be free of the variable", pos)
        base = a.fun
        ratio = base + ctx.ratfun(ctx.poly(ctx.x)) - ctx.one()
        return Prod(1, Rat(ratio))

    def _power(self, c: Fraction, pos: int) -> Expr:
        if c == -1:
            return RPow(Fraction(-1))
        if c == 1:
            return Rat(self.ctx.one())
        if c == 0:
            raise ParseError("power base must be nonzero", pos)
        if c < 0:
            return emul(RPow(Fraction(-1)), Prod(1, Rat(self.ctx.from_fraction(-c))))
        return Prod(1, Rat(self.ctx.from_fraction(c)))


def _factorial_ratio(ctx: Context, slope: int, rest: MPoly, inverted: bool) -> RatFun:
    """h(x)!/h(x-1)! for h = slope*x + rest (reciprocal when inverted)."""
    chain = ctx.one_poly()
    h = ctx.poly(ctx.x) * ctx.poly(slope) + rest
    if slope >= 0:
        for t in range(1, slope + 1):
            chain = chain * (h + ctx.poly(t - slope))
        up = True
    else:
        for t in range(1, -slope + 1):
            chain = chain * (h + ctx.poly(t))
        up = False  # h decreasing: h(x)!/h(x-1)! = 1/chain
    if up != inverted:
        return ctx.ratfun(chain)
    return ctx.ratfun(ctx.one_poly(), chain)


def _fact_lower(slope: int, rest: MPoly, pos: int) -> int:
    if not rest.is_constant():
        raise ParseError("fact argument with parameters is not supported", pos)
    b = rest.as_fraction()
    if b.denominator != 1:
        raise ParseError("fact argument must be integer-valued", pos)
    # smallest l >= 1 with slope*(l-1) + b >= 0
    import math

    return max(1, math.ceil(-int(b) / slope) + 1)


def _fact_boundary(slope: int, rest: MPoly, lower: int, pos: int, ctx: Context) -> RatFun:
    import math

    b = int(rest.as_fraction())
    v = slope * (lower - 1) + b
    if v < 0:
        raise ParseError("fact argument starts negative", pos)
    return ctx.from_fraction(Fraction(math.factorial(v)))


def _harmonic(ctx: Context, weights: list[int]) -> Expr:
    if not weights:
        return Rat(ctx.one())
    w, rest = weights[0], weights[1:]
    if w == 0:
        raise ExprError("harmonic sum weight must be nonzero")
    body_rat = ctx.ratfun(1, ctx.poly(ctx.x) ** abs(w))
    factors: list[Expr] = [Rat(body_rat)]
    if w < 0:
        factors.append(RPow(Fraction(-1)))
    if rest:
        factors.append(_harmonic(ctx, rest))
    body = emul(*factors) if len(factors) > 1 else factors[0]
    return Sum(1, body)


def parse(text: str, ctx: Context, var: str = "n") -> Expr:
    return Parser(text, ctx, var).parse()


# ---------------------------------------------------------------------------
# printing


_BOUND_NAMES = ("k", "i", "j", "l", "m")


class Printer:
    def __init__(self, ctx: Context, var: str = "n"):
        self.ctx = ctx
        self.var = var
        self.names = [var]
        for cand in _BOUND_NAMES:
            if cand not in ctx.params and cand != var:
                self.names.append(cand)
        i = 1
        while len(self.names) < 12:
            cand = f"i{i}"
            if cand not in ctx.params and cand != var:
                self.names.append(cand)
            i += 1

    def text(self, e: Expr, level: int = 0) -> str:
        return self._expr(e, level)

    def _name(self, level: int) -> str:
        while level >= len(self.names):
            self.names.append(f"i{len(self.names)}")
        return self.names[level]

    def _expr(self, e: Expr, level: int) -> str:
        if isinstance(e, Add):
            parts = [self._expr(a, level) for a in e.args]
            out = parts[0]
            for p in parts[1:]:
                out += p if p.startswith("-") else "+" + p
            return out
        return self._addend(e, level)

    def _addend(self, e: Expr, level: int) -> str:
        if isinstance(e, Mul):
            return "*".join(self._factor(a, level) for a in e.args)
        return self._factor(e, level)

    def _factor(self, e: Expr, level: int) -> str:
        if isinstance(e, Pow):
            return f"{self._atom(e.base, level)}^{e.exp}"
        return self._atom(e, level, allow_bare=True)

    def _atom(self, e: Expr, level: int, allow_bare: bool = False) -> str:
        if isinstance(e, Rat):
            s = ratfun_text(e.fun, self._name(level))
            needs_wrap = ("+" in s[1:] or "-" in s[1:]) and not allow_bare
            return f"({s})" if needs_wrap else (s if allow_bare or _is_simple(s) else f"({s})")
        if isinstance(e, RPow):
            return "RPow(-1)"
        if isinstance(e, Sum):
            inner = self._name(level + 1)
            return f"Sum({inner}={e.lower}..{self._name(level)}, {self._expr(e.body, level + 1)})"
        if isinstance(e, Prod):
            if e == Prod(1, Rat(self.ctx.ratfun(self.ctx.poly(self.ctx.x)))):
                return f"fact({self._name(level)})"
            inner = self._name(level + 1)
            return f"Prod({inner}={e.lower}..{self._name(level)}, {self._expr(e.body, level + 1)})"
        if isinstance(e, (Add, Mul, Pow)):
            return f"({self._expr(e, level)})"
        raise ExprError(f"cannot print {e!r}")


def _is_simple(s: str) -> bool:
    return all(c not in s for c in "+*/^") and (not s.startswith("-"))


def ratfun_text(f: RatFun, xname: str) -> str:
    from .arith import poly_text

    def rename(t: str) -> str:
        # polynomial text uses the context variable name; swap in the bound name
        import re

        return re.sub(rf"\b{re.escape(str(f.ctx.var))}\b", xname, t)

    if f.den.is_one():
        return rename(poly_text(f.num))
    nt = rename(poly_text(f.num))
    dt = rename(poly_text(f.den))
    if "+" in nt[1:] or "-" in nt[1:] or "*" in nt or "^" in nt:
        nt = f"({nt})"
    if "+" in dt[1:] or "-" in dt[1:] or "*" in dt or "^" in dt:
        dt = f"({dt})"
    return f"{nt}/{dt}"


def print_expr(e: Expr, ctx: Context, var: str = "n") -> str:
    return Printer(ctx, var).text(e)
