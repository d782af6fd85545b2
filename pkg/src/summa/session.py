"""Orchestration: compile expressions into a growing tower, canonicalize,
test equality, telescope, generate recurrences for definite sums, and solve
recurrences.

A session owns one tower, one factor basis and the generator registry.
Expressions are processed left to right, innermost first; each product is
routed through the factor basis and each sum is telescoped against the
current tower -- on success the sum is re-expressed with no new generator,
on failure a Sigma-generator is adjoined.  When telescoping fails but the
irreducible remainder is strictly simpler (lower nesting depth) than the
sum's own body, the generator is adjoined for the remainder core instead and
the sum re-expressed through it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction

from .arith import Context, RatFun
from .expr import (
    EvalContext, Expr, ExprError, Prod, Rat, ReducedExpr, RPow, Sum,
    atom_set, collect, depth, eadd, emul, epow, eval_spec, eval_sym, lfun_rat,
    subs_param,
)
from .parser import parse, print_expr
from .products import (
    BasisSplit, FactorBasis, GenRegistry, ProductError, compile_power_product,
)
from .solver import (
    Row, SolveError, SolverOptions, rational_solutions, solve_v1_tower,
)
from .tower import (
    RingElem, Tower, adjoin_sigma, ev, lfun, sigma, to_expr,
)


class SessionError(ValueError):
    pass


@dataclass
class ReduceResult:
    canonical: Expr
    delta: int
    tower_dump: list[dict]


@dataclass
class CreativeResult:
    order: int
    coeffs: list[RatFun]  # c_0..c_d, polynomials in the parameter
    rhs: RatFun | None  # reconstructed boundary term (None if not rational)
    cert_c: list[RatFun]
    cert_g: RingElem
    delta: int


class Session:
    """Single-owner mutable session: tower, basis, registries."""

    def __init__(self, var: str = "n", params: tuple[str, ...] = (), options: SolverOptions | None = None):
        if var in params:
            raise SessionError(f"variable {var!r} is also declared as a parameter")
        self.var = var
        self.params = tuple(params)
        self.ctx = Context(params=self.params, var=var)
        self.tower = Tower(self.ctx)
        self.basis = FactorBasis(self.ctx)
        self.reg = GenRegistry()
        self.sums: dict[Expr, tuple[RingElem, int]] = {}
        self.options = options or SolverOptions()
        self._log: list[Expr] = []

    # -- parsing helpers -----------------------------------------------------

    def parse(self, text: str) -> Expr:
        return parse(text, self.ctx, self.var)

    def print(self, e: Expr) -> str:
        return print_expr(e, self.ctx, self.var)

    # -- compilation ----------------------------------------------------------

    def compile(self, e: Expr) -> tuple[RingElem, int]:
        """Model e in the session tower; returns (element, delta) with
        ev(element, k) = e(k) for all k >= delta."""
        self._log.append(e)
        for _attempt in range(8):
            try:
                return self._compile_expr(e)
            except BasisSplit:
                self._replay()
        raise SessionError("basis refinement did not stabilize")

    def _replay(self) -> None:
        """A split touched a live generator: rebuild the tower against the
        refined basis, re-processing every expression seen so far."""
        log = self._log
        self.tower = Tower(self.ctx)
        self.reg = GenRegistry()
        self.reg.mark = len(self.basis.rewrites)
        self.sums = {}
        self._log = []
        for e in log:
            self._log.append(e)
            self._compile_expr(e)

    def _compile_expr(self, e: Expr) -> tuple[RingElem, int]:
        red = collect(e, self.ctx)
        return self._compile_reduced(red)

    def _compile_reduced(self, red: ReducedExpr) -> tuple[RingElem, int]:
        total = self.tower.zero()
        delta = 0
        for coeff, pp in red.terms:
            elem, d = self._compile_pp(pp)
            total = total.lift(self.tower) + elem.lift(self.tower).scale(coeff)
            delta = max(delta, d, lfun_rat(coeff))
        total = total.lift(self.tower)
        return total, max(delta, lfun(total))

    def _compile_pp(self, pp) -> tuple[RingElem, int]:
        prod_part = [(a, e) for a, e in pp if isinstance(a, (Prod, RPow))]
        sum_part = [(a, e) for a, e in pp if isinstance(a, Sum)]
        elem = self.tower.one()
        delta = 0
        if prod_part:
            pelem, self.tower, d = compile_power_product(prod_part, self.tower, self.basis, self.reg)
            elem = pelem
            delta = max(delta, d)
        for atom, e in sum_part:
            selem, d = self._compile_sum(atom)
            if e < 0:
                raise SessionError("sums cannot carry negative exponents")
            elem = elem.lift(self.tower) * (selem.lift(self.tower) ** e)
            delta = max(delta, d)
        return elem, delta

    def _compile_sum(self, atom: Sum) -> tuple[RingElem, int]:
        hit = self.sums.get(atom)
        if hit is not None:
            return hit
        body_elem, body_delta = self._compile_expr(atom.body)
        f = sigma(body_elem)
        rows = solve_v1_tower(self.tower, self.ctx.one(), [f], options=self.options)
        exact = [r for r in rows if r.r.is_zero() and not r.c[0].is_zero()]
        if not exact:
            rows = solve_v1_tower(self.tower, self.ctx.one(), [f], with_remainder=True, options=self.options)
            exact = [r for r in rows if r.r.is_zero() and not r.c[0].is_zero()]
        lam = atom.lower
        if exact:
            row = exact[0]
            g = row.g.scale(row.c[0].inv())
            result = self._with_boundary(g, atom, body_elem, lam)
        else:
            rem_rows = [r for r in rows if not r.c[0].is_zero()]
            adjoined = False
            if rem_rows:
                row = rem_rows[0]
                inv = row.c[0].inv()
                g_star = row.g.scale(inv)
                r_core = row.r.scale(inv)
                core_body = sigma(r_core, -1)
                core_expr, _ = to_expr(core_body)
                if depth(core_expr) + 1 < depth(atom):
                    tau, sign = self._adjoin_core(r_core)
                    g = g_star + tau.scale(sign)
                    result = self._with_boundary(g, atom, body_elem, lam)
                    adjoined = True
            if not exact and not adjoined:
                # adjoin a generator for the sum itself
                lower = max(lam, lfun(body_elem))
                self.tower, idx = adjoin_sigma(self.tower, f.lift(self.tower), lower)
                t = self.tower.gen_elem(idx)
                const = self.ctx.zero()
                for j in range(lam, lower):
                    const = const + ev(body_elem, j)
                elem = t + self.tower.from_ratfun(const) if not const.is_zero() else t
                result = (elem, max(lower, lfun(elem)))
        self.sums[atom] = result
        return result

    def _with_boundary(self, g: RingElem, atom: Sum, body_elem: RingElem, lam: int) -> tuple[RingElem, int]:
        """Sum re-expressed through a telescoper: value = g + const from the
        matching point onward."""
        g = g.lift(self.tower)
        dlt = max(lfun(sigma(body_elem)), lfun(g), lam)
        acc = self.ctx.zero()
        for j in range(lam, dlt + 1):
            acc = acc + ev(body_elem, j)
        const = acc - ev(g, dlt)
        elem = g + self.tower.from_ratfun(const) if not const.is_zero() else g
        return elem, dlt

    def _adjoin_core(self, r_core: RingElem) -> tuple[RingElem, RatFun]:
        """Adjoin a Sigma-generator for an irreducible remainder core, sign
        normalized; returns (generator element, sign with r = sign * beta)."""
        sign = self.ctx.one()
        lead = r_core.terms[0][1]
        if lead.num.content_fraction() < 0:
            sign = -sign
            r_core = -r_core
        body = sigma(r_core, -1)
        lower = max(lfun(body), 1)
        self.tower, idx = adjoin_sigma(self.tower, r_core.lift(self.tower), lower)
        return self.tower.gen_elem(idx), sign

    # -- the summation paradigms ----------------------------------------------

    def sigma_reduce(self, exprs: list[Expr]) -> list[ReduceResult]:
        out = []
        for e in exprs:
            elem, delta = self.compile(e)
            canon, d2 = to_expr(elem)
            out.append(ReduceResult(canon, max(delta, d2), self.tower_dump()))
        return out

    def zero_test(self, e: Expr) -> tuple[bool, int]:
        elem, delta = self.compile(e)
        return elem.is_zero(), delta

    def shift_expr(self, e: Expr, s: int) -> tuple[Expr, int]:
        """B with e(n+s) = B(n) for n >= delta."""
        elem, delta = self.compile(e)
        shifted = sigma(elem, s)
        out, d2 = to_expr(shifted)
        return out, max(delta + max(0, -s), d2)

    def telescope_expr(self, f: Expr, tower_hints: list[Expr] = ()) -> tuple[Expr, int] | None:
        for hint in tower_hints:
            self.compile(hint)
        elem, delta = self.compile(f)
        rows = solve_v1_tower(self.tower, self.ctx.one(), [elem], options=self.options)
        exact = [r for r in rows if not r.c[0].is_zero()]
        if not exact:
            return None
        row = exact[0]
        g = row.g.scale(row.c[0].inv())
        gexpr, dg = to_expr(g)
        return gexpr, max(delta, dg, lfun(elem))

    def evaluate_definite(self, summand: Expr, n_from: int, n_to: int, lower: int = 1,
                          assignment: dict[str, Fraction] | None = None) -> list[Fraction]:
        """Direct summation S(nu) = sum_{k=lower}^{nu} F(nu, k)."""
        out = []
        base = dict(assignment or {})
        for nu in range(n_from, n_to + 1):
            ec = EvalContext(self.ctx, base | {self.ctx.params[0]: Fraction(nu)} if self.ctx.params else base)
            s = Fraction(0)
            for k in range(lower, nu + 1):
                s += eval_spec(summand, k, ec)
            out.append(s)
        return out

    def generate_recurrence(self, summand: Expr, max_order: int = 5) -> CreativeResult | None:
        """Creative telescoping: a recurrence for S(n) = sum_k F(n, k)."""
        if len(self.params) != 1:
            raise SessionError("creative telescoping needs exactly one parameter")
        pname = self.params[0]
        import sympy

        psym = sympy.Symbol(pname)
        cols: list[RingElem] = []
        deltas: list[int] = []
        for d in range(0, max_order + 1):
            shifted = subs_param(summand, pname, psym + d) if d else summand
            elem, dd = self.compile(shifted)
            cols.append(elem)
            deltas.append(dd)
            rows = solve_v1_tower(self.tower, self.ctx.one(), [c.lift(self.tower) for c in cols], options=self.options)
            cand = [r for r in rows if any(not c.is_zero() for c in r.c)]
            cand = [r for r in cand if not r.c[d].is_zero()]
            if not cand:
                continue
            row = cand[0]
            # normalize: clear denominators and content in the parameter
            coeffs = self._normalize_cvec(list(row.c))
            return CreativeResult(
                order=d,
                coeffs=coeffs,
                rhs=None,
                cert_c=list(row.c),
                cert_g=row.g,
                delta=max(deltas + [lfun(row.g)]),
            )
        return None

    def _normalize_cvec(self, cvec: list[RatFun]) -> list[RatFun]:
        ctx = self.ctx
        den = ctx.one_poly()
        for c in cvec:
            if not c.is_zero():
                den = den.exquo(den.gcd(c.den)) * c.den
        cleared = [c * ctx.ratfun(den) for c in cvec]
        num_g = ctx.zero_poly()
        for c in cleared:
            if not c.is_zero():
                num_g = c.num if num_g.is_zero() else num_g.gcd(c.num)
        if not num_g.is_zero() and not num_g.is_constant():
            cleared = [ctx.ratfun(c.num.exquo(num_g)) if not c.is_zero() else c for c in cleared]
        # rational content across the vector
        from math import gcd as igcd, lcm as ilcm

        cn, cd = 0, 1
        for c in cleared:
            if not c.is_zero():
                f = c.num.content_fraction()
                cn = igcd(cn, abs(f.numerator))
                cd = ilcm(cd, f.denominator)
        if cn and Fraction(cn, cd) != 1:
            inv = ctx.from_fraction(Fraction(cd, cn))
            cleared = [c * inv for c in cleared]
        first = next((c for c in cleared if not c.is_zero()), None)
        if first is not None and first.num.content_fraction() < 0:
            cleared = [-c for c in cleared]
        return cleared

    # -- serialization ----------------------------------------------------------

    def tower_dump(self) -> list[dict]:
        out = []
        for g in self.tower.gens:
            if g.kind == "R":
                data = "-1"
            else:
                dexpr, _ = to_expr(g.sigma_data)
                data = self.print(dexpr)
            out.append(
                {
                    "kind": {"R": "R", "PI": "Pi", "SIGMA": "Sigma"}[g.kind],
                    "sigma_data": data,
                    "lower_bound": g.lower_bound,
                    "back_expr": self.print(g.back_expr),
                }
            )
        return out


# ---------------------------------------------------------------------------
# recurrences


@dataclass
class Recurrence:
    """c_0(v)*F[v] + ... + c_m(v)*F[v+m] == rhs, coefficients as expressions
    in the recurrence variable v."""

    var: str
    coeffs: list[Expr]
    rhs: Expr | None

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1


def parse_recurrence(text: str, var: str = "n") -> Recurrence:
    """Wire format: 'a0(n)*F[n] + a1(n)*F[n+1] + ... == rhs'."""
    import re

    if "==" in text:
        lhs_text, rhs_text = text.split("==", 1)
    else:
        lhs_text, rhs_text = text, "0"
    names = set(re.findall(r"(\w+)\s*\[", lhs_text))
    if len(names) != 1:
        raise SessionError(f"expected exactly one unknown, found {sorted(names)}")
    fname = names.pop()
    shifts = []
    def repl(match):
        inner = match.group(1).replace(" ", "")
        if inner == var:
            i = 0
        elif inner.startswith(var + "+"):
            i = int(inner[len(var) + 1 :])
        else:
            raise SessionError(f"unsupported shift argument {inner!r}")
        shifts.append(i)
        return f"__u{i}"

    lhs_subbed = re.sub(rf"{fname}\s*\[([^\]]*)\]", repl, lhs_text)
    if not shifts:
        raise SessionError("no unknown occurrences found")
    m = max(shifts)
    markers = tuple(f"__u{i}" for i in range(m + 1))
    ctx = Context(params=markers, var=var)
    lhs = parse(lhs_subbed, ctx, var)
    red = collect(lhs, ctx)
    import sympy

    coeff_exprs: list[Expr] = []
    plain = Context(params=(), var=var)
    for i in range(m + 1):
        sym = sympy.Symbol(f"__u{i}")
        parts = []
        for coeff, pp in red.terms:
            if coeff.num.degree(sym) > 1 or coeff.den.degree(sym) > 0:
                raise SessionError("recurrence must be linear in the unknown")
            other = [s for j in range(m + 1) if (s := sympy.Symbol(f"__u{j}")) != sym]
            ci = coeff.num.coeff_of(sym, 1)
            if ci.is_zero():
                continue
            if any(ci.degree(s) > 0 for s in other):
                raise SessionError("recurrence must be linear in the unknown")
            fun = Context.ratfun(plain, plain.poly(ci.p.as_expr()), plain.poly(coeff.den.p.as_expr()))
            atoms = [epow(_strip_ctx(a, plain), e) for a, e in pp]
            parts.append(emul(Rat(fun), *atoms) if atoms else Rat(fun))
        coeff_exprs.append(eadd(*parts) if len(parts) > 1 else (parts[0] if parts else Rat(plain.zero())))
    rhs = parse(rhs_text.strip(), plain, var) if rhs_text.strip() not in ("0", "") else None
    return Recurrence(var, coeff_exprs, rhs)


def _strip_ctx(e: Expr, ctx: Context) -> Expr:
    """Rebuild an expression over a context without the marker parameters."""
    if isinstance(e, Rat):
        return Rat(ctx.ratfun(ctx.poly(e.fun.num.p.as_expr()), ctx.poly(e.fun.den.p.as_expr())))
    from .expr import Add, Mul, Pow

    if isinstance(e, Add):
        return eadd(*[_strip_ctx(a, ctx) for a in e.args])
    if isinstance(e, Mul):
        return emul(*[_strip_ctx(a, ctx) for a in e.args])
    if isinstance(e, Pow):
        return epow(_strip_ctx(e.base, ctx), e.exp)
    if isinstance(e, Sum):
        return Sum(e.lower, _strip_ctx(e.body, ctx))
    if isinstance(e, Prod):
        return Prod(e.lower, _strip_ctx(e.body, ctx))
    return e


def solve_recurrence(rec: Recurrence, options: SolverOptions | None = None) -> tuple[list[tuple[int, Expr]], Session]:
    """All d'Alembertian solutions, tagged (0, homogeneous) / (1, particular).
    Coefficients may carry hypergeometric-product content; it is removed by
    an exponent-balancing substitution first."""
    from .solver import dalembert_solve

    sess = Session(var=rec.var, params=(), options=options)
    ctx = sess.ctx
    m = rec.order
    coeff_elems = []
    for e in rec.coeffs:
        elem, _ = sess.compile(e)
        coeff_elems.append(elem.lift(sess.tower))
    coeff_elems = [e.lift(sess.tower) for e in coeff_elems]
    ngens = len(sess.tower.gens)
    slopes = [0] * ngens
    if any(e.max_level() > 0 for e in coeff_elems):
        exps = []
        for j, e in enumerate(coeff_elems):
            if e.is_zero():
                raise SessionError("zero coefficient in a product-laden recurrence")
            if len(e.terms) != 1:
                raise SessionError("coefficients must be single product terms")
            exps.append(e.terms[0][0])
        for gi in range(ngens):
            if sess.tower.gens[gi].kind == "R":
                if any(ex[gi] for ex in exps):
                    raise SessionError("sign-generator coefficients are unsupported")
                continue
            e0, em = exps[0][gi], exps[m][gi]
            if (e0 - em) % m:
                raise SessionError("product exponents do not balance")
            s = (e0 - em) // m
            for j in range(m + 1):
                if exps[j][gi] != e0 - j * s:
                    raise SessionError("product exponents do not balance")
            slopes[gi] = s
    # substitute F = H*y with sigma(H)/H = rho = prod t^s (a unit monomial);
    # then a_j * sigma^j(H)/H = a_j * prod_{i<j} sigma^i(rho) carries one
    # common monomial, which factors out of the whole equation
    from .tower import to_expr as _to_expr, zfun

    ngens_now = len(sess.tower.gens)
    rho = sess.tower.monomial(ctx.one(), tuple(slopes[i] if i < len(slopes) else 0 for i in range(ngens_now)))
    new_coeffs: list[RatFun] = []
    acc = sess.tower.one()
    base_exps = None
    for j, e in enumerate(coeff_elems):
        scaled = e.lift(sess.tower) * acc
        if scaled.is_zero():
            new_coeffs.append(ctx.zero())
        else:
            if len(scaled.terms) != 1:
                raise SessionError("coefficient normalization failed")
            t_exps, fun = scaled.terms[0]
            if base_exps is None:
                base_exps = t_exps
            if t_exps != base_exps:
                raise SessionError("coefficient normalization failed")
            new_coeffs.append(fun)
        acc = acc * sigma(rho, j)
    rhs_elem = None
    if rec.rhs is not None:
        if any(slopes):
            raise SessionError(
                "inhomogeneous recurrences with product-laden coefficients are unsupported"
            )
        relem, _ = sess.compile(rec.rhs)
        base_mono = sess.tower.monomial(
            ctx.one(), base_exps if base_exps is not None else (0,) * len(sess.tower.gens)
        )
        rhs_elem = relem.lift(sess.tower) * base_mono.unit_inverse().lift(sess.tower)
    homs_y, part_y = dalembert_solve(new_coeffs, rhs_elem, sess)
    H_expr = None
    if any(slopes):
        body = sigma(rho, -1)
        body_expr, _ = _to_expr(body)
        lower = max(1, lfun(body), zfun(body))
        H_expr = Prod(lower, body_expr)

    def final(y):
        return emul(H_expr, y) if H_expr is not None else y

    out = [(0, final(y)) for y in homs_y]
    if part_y is not None:
        out.append((1, final(part_y)))
    return out, sess


def _rat_reconstruct(points: list[tuple[int, Fraction]], nctx: Context):
    """Rational function through exact sample points, or None."""
    from .arith import nullspace

    npts = len(points)
    for total in range(0, max(1, npts - 6)):
        for dn in range(total + 1):
            dd = total - dn
            need = dn + dd + 2
            if need + 2 > npts:
                continue
            fit = points[: need + 2]
            rows = []
            for v, h in fit:
                row = [nctx.from_fraction(Fraction(v) ** t) for t in range(dn + 1)]
                row += [nctx.from_fraction(-h * Fraction(v) ** t) for t in range(dd + 1)]
                rows.append(row)
            kern = nullspace(rows, nctx)
            for vec in kern:
                num = nctx.zero()
                den = nctx.zero()
                xg = nctx.ratfun(nctx.poly(nctx.x))
                for t in range(dn + 1):
                    num = num + vec[t] * xg ** t
                for t in range(dd + 1):
                    den = den + vec[dn + 1 + t] * xg ** t
                if den.is_zero():
                    continue
                cand = num / den
                ok = True
                for v, h in points:
                    dv = den.eval_x(v)
                    if dv.is_zero() or cand.eval_x(v).as_fraction() != h:
                        ok = False
                        break
                if ok:
                    return cand
    return None


def _transfer_to_var_ctx(c: RatFun, src: Context, dst: Context) -> RatFun:
    """Move an x-free element of K = Q(param) into a context where the
    parameter is the variable."""
    return dst.ratfun(dst.poly(c.num.as_expr()), dst.poly(c.den.as_expr()))


class SessionRhs:
    pass


def reconstruct_rhs(session: Session, res: CreativeResult, summand: Expr, lower: int = 1):
    """The boundary term H(n) = sum_i c_i(n) S(n+i) of a creative-telescoping
    result, reconstructed from exact evaluations as a rational function of the
    parameter.  Returns (rhs, nctx) with rhs None when H is not rational of
    moderate degree."""
    pname = session.params[0]
    nctx = Context((), pname)
    maxdeg = max(c.num.degree_total() + c.den.degree_total() for c in res.coeffs)
    npts = 2 * maxdeg + 14
    start = max(res.delta, lower, 1) + res.order + 1
    vals = session.evaluate_definite(summand, start, start + npts + res.order, lower=lower)
    pts = []
    for i in range(npts + 1):
        v = start + i
        h = Fraction(0)
        for j, c in enumerate(res.coeffs):
            cv = c.eval_x(0)  # coefficients are x-free
            h += c.num.eval_all({pname: Fraction(v)}) / c.den.eval_all({pname: Fraction(v)}) * vals[i + j]
        pts.append((v, h))
    rhs = _rat_reconstruct(pts, nctx)
    return rhs, nctx


def creative_recurrence(session: Session, res: CreativeResult, summand: Expr, lower: int = 1) -> Recurrence:
    """Assemble the recurrence in the parameter from a creative result."""
    pname = session.params[0]
    nctx = Context((), pname)
    rhs, _ = reconstruct_rhs(session, res, summand, lower)
    coeffs = [Rat(_transfer_to_var_ctx(c, session.ctx, nctx)) for c in res.coeffs]
    return Recurrence(pname, coeffs, Rat(rhs) if rhs is not None else None)
