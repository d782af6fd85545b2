"""Difference-equation solvers.

Core engine: bases of V1(u, (f_1..f_d), E) = {(c, g) : sigma(g) - u*g =
sum c_i f_i} over an R-Pi-Sigma tower, by recursion over the top generator
(degree reduction for Sigma, exponent grading for Pi, component splitting
for R) down to the rational base case.  For u = 1 the base case is a
canonical telescoping reduction phi = (sigma(g) - g) + r with shift-reduced
remainder r; remainders compose K-linearly, so exact solutions are the
kernel of the remainder coordinates.  The same engine in reduction mode
drives "telescope with remainder" when towers are built.

Higher-order solving over K(x): polynomial solutions via a degree bound in
the difference-operator basis, rational solutions via Abramov's universal
denominator, hypergeometric solutions by factor-pair enumeration over the
shift-coprime basis, and d'Alembertian solutions by iterated order
reduction.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import comb

import sympy
from sympy import Symbol

from .arith import ArithError, Context, MPoly, RatFun, integer_roots, nullspace, solve_affine
from .products import canonical_rep, shift_overlap
from .tower import RingElem, Tower, lfun, sigma


class SolveError(ValueError):
    pass


@dataclass(frozen=True)
class Row:
    """One basis element of a solution space: constants, certificate and (in
    reduction mode) the irreducible remainder."""

    c: tuple[RatFun, ...]
    g: RingElem
    r: RingElem


@dataclass
class SolverOptions:
    sigma_degree_bump: int = 0
    bump_cap: int = 3


# ---------------------------------------------------------------------------
# polynomials in x over K, represented as RatFun with x-free denominator


def _xdeg(f: RatFun) -> int:
    if f.is_zero():
        return -1
    if f.den.degree() > 0:
        raise SolveError("not a polynomial in x")
    return f.num.degree()


def _xcoeff(f: RatFun, m: int) -> RatFun:
    """Coefficient of x^m, an element of K."""
    ctx = f.ctx
    return ctx.ratfun(f.num.coeff_of(ctx.x, m), f.den)


def _polydiv_x(a: RatFun, b: RatFun) -> tuple[RatFun, RatFun]:
    """a = b*quo + rem in K[x], deg rem < deg b."""
    ctx = a.ctx
    db = _xdeg(b)
    if db < 0:
        raise SolveError("division by zero polynomial")
    bl = _xcoeff(b, db)
    quo = ctx.zero()
    rem = a
    while not rem.is_zero() and _xdeg(rem) >= db:
        da = _xdeg(rem)
        lead = _xcoeff(rem, da) / bl
        mono = lead * ctx.ratfun(ctx.poly(ctx.x) ** (da - db))
        quo = quo + mono
        rem = rem - mono * b
    return quo, rem


# ---------------------------------------------------------------------------
# canonical rational telescoping reduction (u = 1)


def _orbit_self_split(f: MPoly) -> list[MPoly]:
    js = [j for j in shift_overlap(f, f) if j > 0]
    if not js or f.degree() < 1:
        return [f]
    j = js[0]
    g = f.gcd(f.shift(j))
    return _orbit_self_split(g) + _orbit_self_split(f.exquo(g))


def _den_orbit_factors(den: MPoly) -> list[tuple[MPoly, int]]:
    from .arith import squarefree

    factors: list[tuple[MPoly, int]] = []
    work = [(f, m) for f, m in squarefree(den)]
    while work:
        f, m = work.pop()
        split = _orbit_self_split(f)
        if len(split) == 1 and split[0] == f:
            factors.append((f, m))
        else:
            work.extend((piece, m) for piece in split)
    return factors


def _poly_xgcd(a: RatFun, b: RatFun) -> tuple[RatFun, RatFun]:
    """Half-extended Euclid in K[x]: returns (g, s) with s*a = g mod b."""
    ctx = a.ctx
    r0, r1 = a, b
    s0, s1 = ctx.one(), ctx.zero()
    while not r1.is_zero():
        q, r = _polydiv_x(r0, r1)
        r0, r1 = r1, r
        s0, s1 = s1, s0 - q * s1
    return r0, s0


def _partial_fractions(
    proper: RatFun, factors: list[tuple[MPoly, int]]
) -> list[tuple[MPoly, int, RatFun]]:
    """proper = sum A_{q,j}(x)/q^j with deg_x A < deg_x q, over the given
    pairwise coprime squarefree factors of the denominator."""
    ctx = proper.ctx
    den = ctx.one()
    for q, e in factors:
        den = den * ctx.ratfun(q) ** e
    num = proper * den
    if _xdeg(num) < 0:
        return []
    out = []
    for q, e in factors:
        qf = ctx.ratfun(q)
        qe = qf ** e
        cof = den / qe
        g, s = _poly_xgcd(cof, qe)
        if _xdeg(g) != 0:
            raise SolveError("partial fraction factors are not coprime")
        # A = num * cof^{-1} mod q^e
        _, a_mod = _polydiv_x(num * s / g, qe)
        # q-adic digits: A = sum digits[i] * q^i, deg digit < deg q
        digits = []
        rest = a_mod
        for _i in range(e):
            rest, dig = _polydiv_x(rest, qf)
            digits.append(dig)
        for i, dig in enumerate(digits):
            if not dig.is_zero():
                out.append((q, e - i, dig))
    return out


def _poly_antidifference(p: RatFun) -> RatFun:
    """P with sigma(P) - P = p, for p polynomial in x."""
    ctx = p.ctx
    out = ctx.zero()
    rest = p
    x = ctx.x
    while not rest.is_zero():
        d = _xdeg(rest)
        lead = _xcoeff(rest, d)
        cand = lead * ctx.ratfun(ctx.poly(x) ** (d + 1)) * ctx.from_fraction(Fraction(1, d + 1))
        out = out + cand
        rest = rest - (cand.shift(1) - cand)
    return out


def _shift_pole(term: RatFun, off: int) -> tuple[RatFun, RatFun]:
    """term = sigma(g) - g + r with the pole orbit position moved by -off."""
    ctx = term.ctx
    g = ctx.zero()
    while off > 0:
        h = term.shift(-1)
        g = g + h
        term = h
        off -= 1
    while off < 0:
        h = term.shift(1)
        g = g - term
        term = h
        off += 1
    return g, term


_reduce_cache: dict = {}


def abramov_reduce(phi: RatFun) -> tuple[RatFun, RatFun]:
    """phi = (sigma(g) - g) + r with r canonical: proper, poles only at
    canonical orbit positions.  r = 0 iff phi telescopes rationally."""
    hit = _reduce_cache.get(phi)
    if hit is not None:
        return hit
    out = _abramov_reduce(phi)
    if len(_reduce_cache) < 50000:
        _reduce_cache[phi] = out
    return out


def _abramov_reduce(phi: RatFun) -> tuple[RatFun, RatFun]:
    ctx = phi.ctx
    if phi.is_zero():
        return ctx.zero(), ctx.zero()
    pden = ctx.ratfun(phi.den)
    quo, rem = _polydiv_x(ctx.ratfun(phi.num), pden)
    g = _poly_antidifference(quo)
    r = ctx.zero()
    if rem.is_zero():
        return g, r
    proper = rem / pden
    for q, j, numer in _partial_fractions(proper, _den_orbit_factors(phi.den)):
        rep, off = canonical_rep(q)
        # numer/q^j = numer/rep(x+off)^j; move the pole to offset 0
        gg, rr = _shift_pole(numer / ctx.ratfun(q) ** j, off)
        g = g + gg
        r = r + rr
    return g, r


# ---------------------------------------------------------------------------
# linear algebra over K on rows


def _elem_coords(elems: list[RingElem], ctx: Context):
    """Joint K-coordinates of ring elements: per generator monomial, clear to
    a common x-denominator and take x-power coefficients."""
    monos = sorted({e for el in elems for (e, _c) in el.terms})
    coords = []
    keys = []
    for mono in monos:
        funs = [el.as_dict().get(mono, ctx.zero()) for el in elems]
        den = ctx.one_poly()
        for f in funs:
            if not f.is_zero():
                den = den.exquo(den.gcd(f.den)) * f.den
        nums = [f * ctx.ratfun(den) for f in funs]
        deg = max((_xdeg(n) for n in nums if not n.is_zero()), default=-1)
        for m in range(deg + 1):
            coords.append([_xcoeff(n, m) for n in nums])
            keys.append((mono, m))
    return coords  # list of rows over K, one per coordinate


def split_exact(rows: list[Row], ctx: Context, keep_remainders: bool) -> list[Row]:
    """One reduced-echelon pass over the rows, remainder coordinates first:
    surviving rows whose remainder part vanished are the exact solutions; the
    others are independent remainder representatives."""
    live = [row for row in rows if not (all(c.is_zero() for c in row.c) and row.g.is_zero() and row.r.is_zero())]
    if not live:
        return []
    d = len(live[0].c)
    rcoords = _elem_coords([row.r for row in live], ctx)
    ccoords = [[row.c[i] for row in live] for i in range(d)]
    gcoords = _elem_coords([row.g for row in live], ctx)
    coords = rcoords + ccoords + gcoords
    nr = len(rcoords)
    vecs = [[coords[k][i] for k in range(len(coords))] for i in range(len(live))]
    pivots: list[tuple[int, list[RatFun], Row]] = []
    for vec, row in zip(vecs, live):
        for pk, pvec, prow in pivots:
            if not vec[pk].is_zero():
                f = vec[pk]
                vec = [a - f * b for a, b in zip(vec, pvec)]
                row = Row(
                    tuple(a - f * b for a, b in zip(row.c, prow.c)),
                    row.g - prow.g.scale(f),
                    row.r - prow.r.scale(f),
                )
        lead = next((k for k, v in enumerate(vec) if not v.is_zero()), None)
        if lead is None:
            continue
        pv = vec[lead]
        vec = [v / pv for v in vec]
        inv = pv.inv()
        row = Row(tuple(a * inv for a in row.c), row.g.scale(inv), row.r.scale(inv))
        pivots.append((lead, vec, row))
    exact = [row for lead, _v, row in pivots if lead >= nr]
    out = list(exact)
    if keep_remainders:
        out.extend(row for lead, _v, row in pivots if lead < nr)
    return out


def verify_row(row: Row, u: RatFun, cols: list[RingElem], tower: Tower) -> bool:
    """sigma(g) - u*g - sum c_i f_i + r = 0, exactly in the tower."""
    acc = tower.zero()
    for cv, f in zip(row.c, cols):
        if not cv.is_zero():
            acc = acc + f.lift(tower).scale(cv)
    resid = acc - (sigma(row.g.lift(tower)) - row.g.lift(tower).scale(u)) - row.r.lift(tower)
    return resid.is_zero()


def _dedupe(rows: list[Row], ctx: Context, against: list[Row] | None = None) -> list[Row]:
    """Drop rows K-linearly dependent on earlier ones (and on `against`),
    over the joint (c, g, r) coordinates.  Returns only the kept new rows."""
    if not rows:
        return []
    base = list(against or [])
    kept: list[Row] = []
    for row in rows:
        trial = base + kept + [row]
        m = len(trial)
        mat = _row_coords(trial, ctx)
        if not mat:
            continue
        kern = nullspace(mat, ctx)
        if any(not k[m - 1].is_zero() for k in kern):
            continue  # expressible through earlier rows
        kept.append(row)
    return kept


def _row_coords(rows: list[Row], ctx: Context):
    d = len(rows[0].c)
    coords = []
    for i in range(d):
        coords.append([row.c[i] for row in rows])
    coords.extend(_elem_coords([row.g for row in rows], ctx))
    coords.extend(_elem_coords([row.r for row in rows], ctx))
    return coords


# ---------------------------------------------------------------------------
# the first-order engine over the tower


def solve_v1_tower(
    tower: Tower,
    u: RatFun,
    cols: list[RingElem],
    with_remainder: bool = False,
    options: SolverOptions | None = None,
) -> list[Row]:
    """Basis of V1(u, cols, tower); in reduction mode also rows with
    irreducible remainders (sigma(g) - u*g = sum c_i f_i - r)."""
    options = options or SolverOptions()
    cols = [c.lift(tower) for c in cols]
    work = _solve_level(tower, len(tower.gens), u, cols, with_remainder, options)
    rows = [w.to_row() for w in work]
    return split_exact(rows, tower.ctx, with_remainder)


def _column_basis(cols: list[RingElem], ctx: Context):
    """Greedy K-linear basis of the columns: returns (basis_indices, table)
    with cols[i] = sum_l table[i][l] * cols[basis_indices[l]]."""
    basis: list[int] = []
    table: list[list[RatFun] | None] = []
    for i, col in enumerate(cols):
        if col.is_zero():
            table.append([])
            continue
        if basis:
            elems = [cols[b] for b in basis] + [col]
            coords = _elem_coords(elems, ctx)
            mat = [row[:-1] for row in coords]
            rhs = [row[-1] for row in coords]
            sol = solve_affine(mat, rhs, ctx)
        else:
            sol = None
        if sol is None:
            basis.append(i)
            table.append(None)  # marks a basis column
        else:
            table.append(sol)
    return basis, table


def _solve_level(
    tower: Tower,
    level: int,
    u: RatFun,
    cols: list[RingElem],
    with_remainder: bool,
    options: SolverOptions,
) -> list[_Work]:
    # collapse K-linearly dependent columns before recursing
    basis, table = _column_basis(cols, tower.ctx)
    if len(basis) < len(cols):
        ctx = tower.ctx
        sub = _solve_level(tower, level, u, [cols[b] for b in basis], with_remainder, options)
        d = len(cols)
        out: list[_Work] = []
        for w in sub:
            mu = [ctx.zero()] * d
            for l, b in enumerate(basis):
                mu[b] = w.c[l]
            out.append(_Work(tuple(mu), w.g, w.r, w.resid))
        for i, t in enumerate(table):
            if t is None:
                continue
            mu = [ctx.zero()] * d
            mu[i] = ctx.one()
            for l, b in enumerate(basis):
                if l < len(t):
                    mu[b] = mu[b] - t[l]
            out.append(_Work(tuple(mu), tower.zero(), tower.zero(), tower.zero()))
        return out
    if level == 0:
        return _solve_base(tower, u, cols, with_remainder)
    idx = level - 1
    gen = tower.gens[idx]
    if gen.kind == "SIGMA":
        return _solve_sigma_level(tower, idx, u, cols, with_remainder, options)
    if gen.kind == "PI":
        return _solve_pi_level(tower, idx, u, cols, with_remainder, options)
    return _solve_r_level(tower, idx, u, cols, with_remainder, options)


@dataclass(frozen=True)
class _Work:
    """Engine row with its residual sum c_i f_i - (sigma(g) - u g) - r kept
    incrementally (everything is K-linear in the row)."""

    c: tuple[RatFun, ...]
    g: RingElem
    r: RingElem
    resid: RingElem

    def to_row(self) -> Row:
        return Row(self.c, self.g, self.r)


def _start_rows(tower: Tower, cols: list[RingElem]) -> list[_Work]:
    ctx = tower.ctx
    d = len(cols)
    rows = []
    for i in range(d):
        c = tuple(ctx.one() if j == i else ctx.zero() for j in range(d))
        rows.append(_Work(c, tower.zero(), tower.zero(), cols[i]))
    return rows


def _compose(rows: list[_Work], sub: list[Row], t_power: RingElem, u: RatFun, tower: Tower) -> list[_Work]:
    """Candidate rows combined with sub-solutions; each sub g lives one level
    down and is lifted by the monomial t_power."""
    ctx = tower.ctx
    out = []
    d = len(rows[0].c) if rows else 0
    for srow in sub:
        c = [ctx.zero()] * d
        g = tower.zero()
        r = tower.zero()
        resid = tower.zero()
        for mu, row in zip(srow.c, rows):
            if mu.is_zero():
                continue
            c = [a + mu * b for a, b in zip(c, row.c)]
            g = g + row.g.scale(mu)
            r = r + row.r.scale(mu)
            resid = resid + row.resid.scale(mu)
        if not srow.g.is_zero():
            g_add = srow.g.lift(tower) * t_power
            g = g + g_add
            resid = resid - (sigma(g_add) - g_add.scale(u))
        out.append(_Work(tuple(c), g, r, resid))
    return out


def _commit(rows: list[_Work], tower: Tower, idx: int, j: int, keep: bool) -> list[_Work]:
    """Move the residual part at t_idx^j into the remainder slot (reduction
    mode) or drop rows that failed to clear it (exact mode)."""
    out = []
    for row in rows:
        piece = row.resid.coeff_of(idx, j)
        if piece.is_zero():
            out.append(row)
            continue
        if not keep:
            continue
        add = piece * tower.gen_elem(idx, j) if j else piece
        out.append(_Work(row.c, row.g, row.r + add, row.resid - add))
    return out


def _freeze_spent(rows: list[_Work], frozen: list[_Work]) -> list[_Work]:
    """Rows with no constants left but a nonzero remainder can never become
    exact on their own; park them (committing the open residual) so they stop
    spawning subproblems but still participate in the final remainder mixing."""
    active = []
    for row in rows:
        if row.r.is_zero() or any(not c.is_zero() for c in row.c):
            active.append(row)
        else:
            frozen.append(_Work(row.c, row.g, row.r + row.resid, row.g.owner.zero()))
    return active


def _solve_sigma_level(tower, idx, u, cols, with_remainder, options) -> list[_Work]:
    free = all(c.free_of(idx) for c in cols)
    if free and u.is_one() and not options.sigma_degree_bump:
        # the unknown's degree-1 coefficient is a constant by the constant
        # preservation of the tower, so the level collapses to one extra
        # column: sigma(g0) - g0 = sum c_i f_i + c_beta * beta
        ctx = tower.ctx
        beta = tower.gens[idx].sigma_data.lift(tower)
        sub = _solve_level(tower, idx, u, cols + [beta], with_remainder, options)
        t = tower.gen_elem(idx)
        out = []
        for w in sub:
            cb = w.c[-1]
            g = w.g
            if not cb.is_zero():
                g = g - t.scale(cb)
            out.append(_Work(w.c[:-1], g, w.r, w.resid))
        return out
    b = max((c.degree_in(idx) for c in cols), default=0)
    if u.is_one():
        b += 1
    b += options.sigma_degree_bump
    rows = _start_rows(tower, cols)
    frozen: list[_Work] = []
    t = tower.gen_elem(idx)
    for j in range(b, -1, -1):
        targets = [row.resid.coeff_of(idx, j) for row in rows]
        sub = _solve_inner(tower, idx, u, targets, with_remainder, options)
        if not sub:
            return []
        rows = _compose(rows, sub, t ** j if j else tower.one(), u, tower)
        rows = _commit(rows, tower, idx, j, with_remainder)
        if with_remainder:
            rows = _freeze_spent(rows, frozen)
        if not rows:
            return frozen
    return rows + frozen


def _solve_pi_level(tower, idx, u, cols, with_remainder, options) -> list[_Work]:
    alpha_elem = tower.gens[idx].sigma_data.lift(tower)
    if alpha_elem.max_level() != 0:
        raise SolveError("product generator with a nested ratio is unsupported")
    alpha = alpha_elem.constant_part()
    exps = sorted(set().union(*[c.exps_in(idx) for c in cols]) | {0})
    rows = _start_rows(tower, cols)
    frozen: list[_Work] = []
    for j in exps:
        scale = alpha ** (-j)
        targets = [row.resid.coeff_of(idx, j).scale(scale) for row in rows]
        u_sub = u * scale
        sub = _solve_inner(tower, idx, u_sub, targets, with_remainder and u_sub.is_one(), options)
        if not sub:
            return []
        rows = _compose(rows, sub, tower.gen_elem(idx, j) if j else tower.one(), u, tower)
        rows = _commit(rows, tower, idx, j, with_remainder)
        if with_remainder:
            rows = _freeze_spent(rows, frozen)
        if not rows:
            return frozen
    return rows + frozen


def _solve_r_level(tower, idx, u, cols, with_remainder, options) -> list[_Work]:
    rows = _start_rows(tower, cols)
    frozen: list[_Work] = []
    for j in (1, 0):
        targets = []
        for row in rows:
            piece = row.resid.coeff_of(idx, j)
            targets.append(piece if j == 0 else -piece)
        u_sub = u if j == 0 else -u
        sub = _solve_inner(tower, idx, u_sub, targets, with_remainder and u_sub.is_one(), options)
        if not sub:
            return []
        rows = _compose(rows, sub, tower.gen_elem(idx, 1) if j else tower.one(), u, tower)
        rows = _commit(rows, tower, idx, j, with_remainder)
        if with_remainder:
            rows = _freeze_spent(rows, frozen)
        if not rows:
            return frozen
    return rows + frozen


def _solve_inner(tower, level, u, cols, with_remainder, options) -> list[Row]:
    """Sub-solve returning plain rows (certificate parts only)."""
    work = _solve_level(tower, level, u, cols, with_remainder, options)
    return [w.to_row() if isinstance(w, _Work) else w for w in work]


def _solve_base(tower: Tower, u: RatFun, cols: list[RingElem], with_remainder: bool) -> list[_Work]:
    ctx = tower.ctx
    d = len(cols)
    funs = []
    for c in cols:
        if c.max_level() != 0:
            raise SolveError("base-level column with generator content")
        funs.append(c.constant_part())
    if u.is_one():
        rows = []
        for i, phi in enumerate(funs):
            g, r = abramov_reduce(phi)
            c = tuple(ctx.one() if j == i else ctx.zero() for j in range(d))
            rows.append(_Work(c, tower.from_ratfun(g), tower.from_ratfun(r), tower.zero()))
        rows.append(_Work(tuple(ctx.zero() for _ in range(d)), tower.one(), tower.zero(), tower.zero()))
        if with_remainder:
            return rows
        exact = split_exact([w.to_row() for w in rows], ctx, False)
        return [_Work(r.c, r.g, r.r, tower.zero()) for r in exact]
    base = rational_solutions([-u, ctx.one()], funs, ctx)
    return [_Work(tuple(c), tower.from_ratfun(g), tower.zero(), tower.zero()) for c, g in base]


# ---------------------------------------------------------------------------
# polynomial and rational solutions of higher-order equations


def _sigma_pow_rat(f: RatFun, j: int) -> RatFun:
    return f.shift(j)


def poly_solutions(
    coeffs: list[RatFun], rhs: list[RatFun], ctx: Context, extra_degree: int = 0
) -> list[tuple[list[RatFun], RatFun]]:
    """Basis of {(c, y) : sum_j a_j * y(x+j) = sum_i c_i phi_i, y in K[x]}."""
    m = len(coeffs) - 1
    x = ctx.x
    for a in coeffs + rhs:
        if not a.is_zero() and a.den.degree() > 0:
            raise SolveError("polynomial solver needs polynomial data")
    # difference-operator basis: sum_j a_j sigma^j = sum_i atil_i Delta^i
    atil = []
    for i in range(m + 1):
        s = ctx.zero()
        for j in range(i, m + 1):
            s = s + coeffs[j] * ctx.from_fraction(Fraction(comb(j, i)))
        atil.append(s)
    bstar = max((_xdeg(a) - i for i, a in enumerate(atil) if not a.is_zero()), default=None)
    if bstar is None:
        raise SolveError("zero operator")
    # gamma(D): leading coefficient of the image of x^D, a polynomial in D;
    # its nonnegative integer roots are extra degree candidates
    Dsym = "_degD"
    ectx = Context(ctx.params + (Dsym,), ctx.var)
    Dpoly = ectx.ratfun(ectx.poly(sympy.Symbol(Dsym)))
    gamma = ectx.zero()
    for i, a in enumerate(atil):
        if a.is_zero() or _xdeg(a) - i != bstar:
            continue
        lead = _xcoeff(a, _xdeg(a))
        term = ectx.ratfun(ectx.poly(lead.num.p.as_expr()), ectx.poly(lead.den.p.as_expr()))
        for t in range(i):
            term = term * (Dpoly - ectx.from_fraction(Fraction(t)))
        gamma = gamma + term
    roots = []
    if not gamma.is_zero():
        roots = [r for r in integer_roots(gamma.num, sympy.Symbol(Dsym)) if r >= 0]
    bound = max(
        [(_xdeg(f) - bstar) for f in rhs if not f.is_zero()] + roots + [-1]
    ) + extra_degree
    if bound < 0:
        bound = -1
    # unknowns: y coefficients (bound+1) and c (len rhs)
    nun = bound + 1
    d = len(rhs)
    cols: list[RatFun] = []
    exprs: list[RatFun] = []
    for t in range(nun):
        yt = ctx.ratfun(ctx.poly(x) ** t)
        img = ctx.zero()
        for j, a in enumerate(coeffs):
            img = img + a * yt.shift(j)
        exprs.append(img)
    maxdeg = max(
        [(_xdeg(e)) for e in exprs if not e.is_zero()]
        + [_xdeg(f) for f in rhs if not f.is_zero()]
        + [0]
    )
    rows = []
    for mdeg in range(maxdeg + 1):
        row = [_xcoeff(e, mdeg) for e in exprs]
        row.extend(-_xcoeff(f, mdeg) for f in rhs)
        rows.append(row)
    kern = nullspace(rows, ctx)
    out = []
    for vec in kern:
        y = ctx.zero()
        for t in range(nun):
            y = y + vec[t] * ctx.ratfun(ctx.poly(x) ** t)
        c = [vec[nun + i] for i in range(d)]
        if y.is_zero() and all(ci.is_zero() for ci in c):
            continue
        out.append((c, y))
    return out


def universal_denominator(coeffs: list[RatFun], ctx: Context) -> RatFun:
    """Abramov's denominator bound for sum_j a_j y(x+j) = rhs (a_j in K[x])."""
    m = len(coeffs) - 1
    A = coeffs[m].shift(-m)
    B = coeffs[0]
    from .arith import dispersion

    U = ctx.one()
    while True:
        if A.num.degree() < 1 or B.num.degree() < 1:
            break
        disp = [j for j in dispersion(A.num, B.num) if j >= 0]
        if not disp:
            break
        h = max(disp)
        d = ctx.ratfun(A.num.gcd(B.num.shift(h)))
        if _xdeg(d) < 1:
            break
        A = A / d
        B = B / d.shift(-h)
        for i in range(h + 1):
            U = U * d.shift(-i)
    return U


def rational_solutions(
    coeffs: list[RatFun], rhs: list[RatFun], ctx: Context
) -> list[tuple[list[RatFun], RatFun]]:
    """Basis of {(c, g) : sum_j a_j g(x+j) = sum c_i phi_i, g in K(x)}."""
    # clear denominators
    den = ctx.one_poly()
    for f in coeffs + rhs:
        if not f.is_zero():
            den = den.exquo(den.gcd(f.den)) * f.den
    dd = ctx.ratfun(den)
    a = [f * dd for f in coeffs]
    phis = [f * dd for f in rhs]
    # strip leading/trailing zero coefficients by shifting the unknown
    lo = 0
    while lo <= len(a) - 1 and a[lo].is_zero():
        lo += 1
    hi = len(a) - 1
    while hi >= 0 and a[hi].is_zero():
        hi -= 1
    if hi < lo:
        raise SolveError("zero operator")
    if lo:
        # substitute x -> x - lo: the unknown is unchanged, coefficients shift
        return rational_solutions(
            [f.shift(-lo) for f in a[lo:]], [f.shift(-lo) for f in phis], ctx
        )
    a = a[: hi + 1]
    U = universal_denominator(a, ctx)
    # substitute g = y / U
    newc = []
    mult = ctx.one()
    for j in range(len(a)):
        mult = mult * U.shift(j)
    for j, aj in enumerate(a):
        newc.append(aj * mult / U.shift(j))
    newr = [f * mult for f in phis]
    sols = poly_solutions(newc, newr, ctx)
    return [(c, y / U) for c, y in sols]


# ---------------------------------------------------------------------------
# hypergeometric solutions (factor-pair enumeration)


@dataclass(frozen=True)
class HyperSol:
    """Solution y with y(x+1)/y(x) = z * A(x)/B(x) * C(x+1)/C(x); equivalently
    y = seed * prod_{i=l}^{x} cert(i) with seed = C and cert = z*A(x-1)/B(x-1)."""

    z: RatFun
    A: RatFun
    B: RatFun
    C: RatFun

    def ratio(self) -> RatFun:
        return self.z * (self.A / self.B) * (self.C.shift(1) / self.C)

    def cert(self) -> RatFun:
        return self.z * (self.A.shift(-1) / self.B.shift(-1))

    def seed(self) -> RatFun:
        return self.C


def _monic_divisors(p: RatFun, ctx: Context, cap: int = 512) -> list[RatFun]:
    out = [ctx.one()]
    if _xdeg(p) < 1:
        return out
    factors = _den_orbit_factors(p.num)
    for q, m in factors:
        if q.degree() < 1:
            continue
        qm = ctx.ratfun(q) / ctx.ratfun(q.coeff_of(ctx.x, q.degree()))
        new = []
        for d in out:
            acc = d
            for _ in range(m):
                acc = acc * qm
                new.append(acc)
        out.extend(new)
        if len(out) > cap:
            raise SolveError("too many candidate factor pairs")
    return out


def _field_roots(coeffs: list[RatFun], ctx: Context) -> list[RatFun]:
    """Roots in K of sum_i coeffs[i] * z^i (coefficients in K = Q(params))."""
    while coeffs and coeffs[-1].is_zero():
        coeffs = coeffs[:-1]
    lo = 0
    while lo < len(coeffs) and coeffs[lo].is_zero():
        lo += 1
    coeffs = coeffs[lo:]
    deg = len(coeffs) - 1
    if deg <= 0:
        return []
    if deg == 1:
        return [-(coeffs[0] / coeffs[1])]
    if deg == 2:
        a, b, c = coeffs[2], coeffs[1], coeffs[0]
        disc = b * b - a * c * ctx.from_fraction(Fraction(4))
        if disc.is_zero():
            return [-(b / (a * ctx.from_fraction(Fraction(2))))]
        from .arith import is_square

        s_num = is_square(disc.num * disc.den)
        if s_num is None:
            return []
        sq = ctx.ratfun(s_num, disc.den)
        two_a = a * ctx.from_fraction(Fraction(2))
        return [(-b + sq) / two_a, (-b - sq) / two_a]
    # higher degree: exact rational roots when parameter-free, else give up
    if all(c.is_constant() for c in coeffs):
        from sympy import Poly as SPoly, Symbol as SSymbol, QQ as SQQ

        z = SSymbol("_z")
        expr = sum(
            sympy.Rational(c.as_fraction().numerator, c.as_fraction().denominator) * z ** i
            for i, c in enumerate(coeffs)
        )
        roots = SPoly(expr, z, domain=SQQ).ground_roots()
        return [ctx.from_fraction(Fraction(r.p, r.q)) for r in roots]
    return []


def _same_sigma_class(r1: RatFun, r2: RatFun, ctx: Context) -> bool:
    """r1/r2 = sigma(w)/w for a rational w?"""
    q = r1 / r2
    sols = rational_solutions([-q, ctx.one()], [], ctx)
    return any(not g.is_zero() for _c, g in sols)


def hypergeometric_solutions(coeffs: list[RatFun], ctx: Context) -> list[HyperSol]:
    """All sigma-quotient classes of hypergeometric solutions of the
    homogeneous recurrence sum_j a_j y(x+j) = 0 with certificates in K(x).
    Factor enumeration runs over the shift-coprime gcd basis of the
    leading/trailing coefficients (a completeness caveat relative to full
    irreducible factorization)."""
    m = len(coeffs) - 1
    if m < 1:
        raise SolveError("order must be at least 1")
    den = ctx.one_poly()
    for f in coeffs:
        if not f.is_zero():
            den = den.exquo(den.gcd(f.den)) * f.den
    a = [f * ctx.ratfun(den) for f in coeffs]
    if a[0].is_zero() or a[m].is_zero():
        raise SolveError("trailing and leading coefficients must be nonzero")
    out: list[HyperSol] = []
    for A in _monic_divisors(a[0], ctx):
        for B in _monic_divisors(a[m].shift(m - 1), ctx):
            ahat = []
            for j in range(m + 1):
                t = a[j]
                for i in range(j):
                    t = t * A.shift(i)
                for i in range(j, m):
                    t = t * B.shift(i)
                ahat.append(t)
            D = max(_xdeg(t) for t in ahat if not t.is_zero())
            ell = [
                (_xcoeff(t, D) if (not t.is_zero() and _xdeg(t) == D) else ctx.zero())
                for t in ahat
            ]
            for z in _field_roots(ell, ctx):
                if z.is_zero():
                    continue
                bz = [t * z ** j for j, t in enumerate(ahat)]
                csols = poly_solutions(bz, [], ctx)
                for _c, C in csols:
                    if C.is_zero():
                        continue
                    cand = HyperSol(z, A, B, C)
                    ratio = cand.ratio()
                    # exact verification
                    acc = ctx.zero()
                    shift_prod = ctx.one()
                    for j in range(m + 1):
                        acc = acc + coeffs[j] * shift_prod
                        shift_prod = shift_prod * ratio.shift(j)
                    if not acc.is_zero():
                        continue
                    if any(_same_sigma_class(ratio, o.ratio(), ctx) for o in out):
                        continue
                    out.append(cand)
    return out


# ---------------------------------------------------------------------------
# recombination of solutions against initial values


def recombine_values(
    hom_values: list[list[Fraction]],
    part_values: list[Fraction] | None,
    target: list[Fraction],
    order: int,
) -> list[Fraction] | None:
    """Match target = sum kappa_i * hom_i (+ particular) on the first `order`
    points; verify on the rest.  Returns kappa or None."""
    npts = len(target)
    rhs = list(target)
    if part_values is not None:
        rhs = [t - p for t, p in zip(rhs, part_values)]
    h = len(hom_values)
    # solve on the first `order` points, verify on the remainder
    import itertools

    rows = [[hom_values[i][j] for i in range(h)] for j in range(npts)]
    sol = _solve_q(rows[:order], rhs[:order])
    if sol is None:
        sol = _solve_q(rows, rhs)
        if sol is None:
            return None
    for j in range(npts):
        if sum(s * rows[j][i] for i, s in enumerate(sol)) != rhs[j]:
            return None
    return sol


def _solve_q(rows: list[list[Fraction]], rhs: list[Fraction]) -> list[Fraction] | None:
    if not rows:
        return []
    n = len(rows[0])
    aug = [list(r) + [b] for r, b in zip(rows, rhs)]
    m = len(aug)
    piv = []
    r = 0
    for c in range(n):
        p = next((i for i in range(r, m) if aug[i][c] != 0), None)
        if p is None:
            continue
        aug[r], aug[p] = aug[p], aug[r]
        pv = aug[r][c]
        aug[r] = [v / pv for v in aug[r]]
        for i in range(m):
            if i != r and aug[i][c] != 0:
                f = aug[i][c]
                aug[i] = [v - f * w for v, w in zip(aug[i], aug[r])]
        piv.append(c)
        r += 1
    for i in range(r, m):
        if aug[i][n] != 0:
            return None
    sol = [Fraction(0)] * n
    for i, c in enumerate(piv):
        sol[c] = aug[i][n]
    return sol


# ---------------------------------------------------------------------------
# d'Alembertian solutions (iterated order reduction)


def dalembert_solve(coeffs, rhs_elem, session):
    """Nested-sum solutions of sum_j a_j(x) y(x+j) = rhs.

    coeffs: list of RatFun in the recurrence variable (the session variable);
    rhs_elem: a tower element of the session modeling the right side, or None
    for the homogeneous problem.  Returns (homogeneous: list[Expr],
    particular: Expr | None).  Completeness is relative to the d'Alembertian
    class reachable with certificates in K(x).
    """
    from .expr import Prod as ProdNode, Rat as RatNode, Sum as SumNode, emul
    from .tower import lfun as _lfun, sigma as _sigma, to_expr as _to_expr
    from .expr import zfun_rat

    ctx = session.ctx
    m = len(coeffs) - 1
    if m == 0:
        if rhs_elem is None:
            return [], None
        part = rhs_elem.scale(coeffs[0].inv())
        pexpr, _ = _to_expr(part)
        return [], pexpr
    hypers = hypergeometric_solutions(coeffs, ctx)
    if not hypers:
        return [], None
    hypers.sort(key=lambda h: (_xdeg(h.A) + _xdeg(h.B), str(h.z), str(h.ratio())))
    h = hypers[0]
    cert = h.cert()
    seed = h.seed()
    lower = max(1, zfun_rat(cert))
    prod_expr = ProdNode(lower, RatNode(cert))
    y1 = prod_expr if seed.is_one() else emul(RatNode(seed), prod_expr)
    rho = h.ratio()
    # reduced operator: C_i = sum_{j>i} a_j * prod_{t<j} rho(x+t)
    B = []
    acc = ctx.one()
    for j in range(m + 1):
        B.append(coeffs[j] * acc)
        acc = acc * rho.shift(j)
    total = ctx.zero()
    for b in B:
        total = total + b
    if not total.is_zero():
        raise SolveError("hypergeometric certificate failed verification")
    C = []
    for i in range(m):
        s = ctx.zero()
        for j in range(i + 1, m + 1):
            s = s + B[j]
        C.append(s)
    # divide the right side by y1 (a unit once compiled)
    sub_rhs = None
    if rhs_elem is not None:
        y1_elem, _d = session.compile(y1)
        if not y1_elem.is_unit():
            raise SolveError("hypergeometric solution did not compile to a unit")
        sub_rhs = rhs_elem.lift(session.tower) * y1_elem.unit_inverse()
    sub_homs, sub_part = dalembert_solve(C, sub_rhs, session)

    def wrap(v_expr):
        v_elem, _ = session.compile(v_expr)
        body = _sigma(v_elem, -1)
        bexpr, bd = _to_expr(body)
        lo = max(1, _lfun(body))
        return emul(y1, SumNode(lo, bexpr))

    homs = [y1] + [wrap(v) for v in sub_homs]
    part = wrap(sub_part) if sub_part is not None else None
    return homs, part
