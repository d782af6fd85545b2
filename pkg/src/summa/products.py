"""Products as R/Pi-generators over a session-global factor basis.

Multiplicands are split over a basis of pairwise coprime, squarefree,
shift-coprime polynomials (each stored as a canonical minimal-shift orbit
representative), plus prime integers and parameter-only irreducible-by-gcd
factors.  Multiplicative dependence questions reduce to integer linear
algebra on the exponent data; shift-offset discrepancies are absorbed into
rational boundary factors.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import sympy
from sympy import Poly, QQ

from .arith import (
    ArithError, Context, DispersionSet, MPoly, RatFun,
    dispersion, int_kernel, integer_roots, squarefree,
)
from .expr import Expr, Prod, Rat, RPow, lfun_rat, zfun_rat
from .tower import RingElem, Tower, adjoin_pi, adjoin_r, ev, lfun, sigma, to_expr, zfun

PRIME_BOUND = 10 ** 6


class ProductError(ValueError):
    pass


def factor_primes(n: int, bound: int = PRIME_BOUND) -> dict[int, int]:
    """Trial-division prime factorization; errors above the bound."""
    if n <= 0:
        raise ProductError("prime factorization needs a positive integer")
    out: dict[int, int] = {}
    for p in (2, 3):
        while n % p == 0:
            out[p] = out.get(p, 0) + 1
            n //= p
    d = 5
    while d * d <= n:
        if d > bound:
            raise ProductError(f"constant factor {n} exceeds the factorization bound")
        for p in (d, d + 2):
            while n % p == 0:
                out[p] = out.get(p, 0) + 1
                n //= p
        d += 6
    if n > 1:
        if n > bound:
            raise ProductError(f"constant factor {n} exceeds the factorization bound")
        out[n] = out.get(n, 0) + 1
    return out


# ---------------------------------------------------------------------------
# canonical orbit representatives


_canon_cache: dict = {}
_overlap_cache: dict = {}


def canonical_rep(q: MPoly) -> tuple[MPoly, int]:
    """Canonical shift-orbit representative: returns (rep, off) with
    q(x) = rep(x + off).  The representative minimizes the magnitude of its
    constant term under a fixed parameter specialization (ties by the
    lexicographically smallest coefficient list)."""
    hit = _canon_cache.get(q)
    if hit is not None:
        return hit
    out = _canonical_rep(q)
    _canon_cache[q] = out
    return out


def _canonical_rep(q: MPoly) -> tuple[MPoly, int]:
    ctx = q.ctx
    x = ctx.x
    _, q = q.primitive()
    cands = {0}
    for spec in ((0, 1, 2), (1, 3, 5), (7, 11, 13)):
        expr = q.p.as_expr()
        for i, s in enumerate(ctx.param_symbols):
            expr = expr.subs(s, spec[i % 3] + i)
        up = Poly(expr, x, domain=QQ)
        if up.is_zero or up.degree() < 1:
            continue
        try:
            roots = up.nroots(n=15)
        except Exception:
            roots = []
        for r in roots:
            re = sympy.re(r)
            base = int(round(float(re)))
            cands.update((base - 1, base, base + 1))
        break
    try:
        cands.update(integer_roots(q))
    except ArithError:
        pass

    def key(t: int):
        val = q.eval_x(t)
        expr = val.p.as_expr()
        for i, s in enumerate(ctx.param_symbols):
            expr = expr.subs(s, (0, 1, 2)[i % 3] + i)
        mag = abs(sympy.Rational(sympy.expand(expr)))
        rep = q.shift(t)
        rep_key = tuple(sorted((m, (c.numerator, c.denominator)) for m, c in rep.p.terms()))
        return (mag, rep_key)

    best = min(sorted(cands), key=key)
    rep = q.shift(best)
    _, rep = rep.primitive()
    return rep, -best


def shift_overlap(a: MPoly, b: MPoly) -> list[int]:
    """All j in Z with gcd(a(x), b(x+j)) nonconstant."""
    key = (a, b)
    hit = _overlap_cache.get(key)
    if hit is not None:
        return hit
    pos = [j for j in dispersion(a, b)]
    neg = [-j for j in dispersion(b, a) if j != 0]
    out = sorted(set(pos + neg))
    _overlap_cache[key] = out
    return out


# ---------------------------------------------------------------------------
# factor basis


@dataclass
class FactorBasis:
    """Session-global factor data.  x_atoms: canonical orbit representatives,
    pairwise (and self-) shift-coprime; param_atoms: gcd-refined factors free
    of x; rewrites: log of atom splits (atom id -> replacement parts)."""

    ctx: Context
    x_atoms: list[MPoly] = field(default_factory=list)
    param_atoms: list[MPoly] = field(default_factory=list)
    rewrites: list[tuple[tuple[str, int], list[tuple[int, int, int]]]] = field(default_factory=list)
    version: int = 0

    def atom(self, i: int) -> MPoly:
        return self.x_atoms[i]

    # -- x-atom insertion with refinement -----------------------------------

    def _self_split(self, p: MPoly) -> list[MPoly]:
        """Split p until self-shift-coprime (and squarefree)."""
        parts = [f for f, _ in squarefree(p)]
        out: list[MPoly] = []
        work = list(parts)
        while work:
            f = work.pop()
            if f.degree() < 1:
                continue
            js = [j for j in shift_overlap(f, f) if j > 0]
            if not js:
                out.append(f)
                continue
            j = js[0]
            g = f.gcd(f.shift(j))
            work.append(g)
            work.append(f.exquo(g))
        return out

    def add_x_poly(self, p: MPoly) -> dict[tuple[int, int], int]:
        """Insert the squarefree factors of p, refining the basis as needed.
        Returns the exponent table {(atom index, shift): multiplicity} with
        p = prod atom(x+shift)^mult up to content."""
        result: dict[tuple[int, int], int] = {}
        work: list[tuple[MPoly, int]] = [(f, m) for f, m in squarefree(p)]
        while work:
            f, mult = work.pop()
            if f.degree() < 1:
                continue
            pieces = self._self_split(f)
            if len(pieces) > 1 or pieces[0] != f:
                work.extend((piece, mult) for piece in pieces)
                continue
            placed = False
            for idx in range(len(self.x_atoms)):
                a = self.x_atoms[idx]
                js = shift_overlap(f, a)
                if not js:
                    continue
                j = js[0]
                # f shares a factor with a(x+j); a(x+j) means atom at shift j,
                # so f's piece sits at offset j of the atom
                aj = a.shift(j)
                g = f.gcd(aj)
                if aj.divides(f):
                    key = (idx, j)
                    result[key] = result.get(key, 0) + mult
                    rest = f.exquo(aj)
                    if rest.degree() >= 1:
                        work.append((rest, mult))
                    placed = True
                    break
                if g.degree() >= 1:
                    # refine: split the stored atom and rewrite earlier keys
                    mark = len(self.rewrites)
                    self._split_atom(idx, g.shift(-j))
                    result = replay_x_keys(result, self.rewrites, mark)
                    work.append((f, mult))
                    placed = True
                    break
            if placed:
                continue
            rep, off = canonical_rep(f)
            self.x_atoms.append(rep)
            self.version += 1
            key = (len(self.x_atoms) - 1, off)
            result[key] = result.get(key, 0) + mult
        return result

    def _split_atom(self, idx: int, part: MPoly) -> None:
        """Replace atom idx by canonical reps of part and of the cofactor."""
        a = self.x_atoms[idx]
        g = a.gcd(part)
        if g.degree() < 1 or g.degree() == a.degree():
            raise ProductError("invalid atom split")
        rest = a.exquo(g)
        rep1, off1 = canonical_rep(g)
        rep2, off2 = canonical_rep(rest)
        self.x_atoms[idx] = rep1
        self.x_atoms.append(rep2)
        # old atom(x) = rep1(x + off1) * rep2(x + off2)
        self.rewrites.append((("x", idx), [(idx, off1, 1), (len(self.x_atoms) - 1, off2, 1)]))
        self.version += 1

    # -- parameter atoms -----------------------------------------------------

    def add_param_poly(self, p: MPoly) -> dict[int, int]:
        """Insert a parameter-only polynomial, gcd-refining the stored atoms."""
        result: dict[int, int] = {}
        work: list[tuple[MPoly, int]] = []
        for f, m in p.p.sqf_list()[1]:
            mp = MPoly(self.ctx, f)
            _, mp = mp.primitive()
            if mp.degree_total() >= 1:
                work.append((mp, m))
        while work:
            f, mult = work.pop()
            placed = False
            for idx in range(len(self.param_atoms)):
                a = self.param_atoms[idx]
                g = f.gcd(a)
                if g.degree_total() < 1:
                    continue
                if g == a:
                    result[idx] = result.get(idx, 0) + mult
                    rest = f.exquo(a)
                    if rest.degree_total() >= 1:
                        work.append((rest, mult))
                    placed = True
                    break
                # refine stored atom
                rest = a.exquo(g)
                self.param_atoms[idx] = g
                self.param_atoms.append(rest)
                mark = len(self.rewrites)
                self.rewrites.append((("p", idx), [(idx, 0, 1), (len(self.param_atoms) - 1, 0, 1)]))
                result = replay_param_keys(result, self.rewrites, mark)
                self.version += 1
                work.append((f, mult))
                placed = True
                break
            if not placed:
                self.param_atoms.append(f)
                self.version += 1
                result[len(self.param_atoms) - 1] = result.get(len(self.param_atoms) - 1, 0) + mult
        return result


@dataclass
class ExponentVector:
    """Multiplicative decomposition of f in K(x)*:
    f = sign * prod primes^e * prod param_atoms^e * prod x_atoms(x+shift)^e.
    `mark` is the basis rewrite-log position the keys refer to."""

    sign: int = 1
    primes: dict[int, int] = field(default_factory=dict)
    params: dict[int, int] = field(default_factory=dict)
    xatoms: dict[tuple[int, int], int] = field(default_factory=dict)
    mark: int = 0


def replay_x_keys(
    d: dict[tuple[int, int], int], rewrites, mark: int
) -> dict[tuple[int, int], int]:
    """Re-express x-atom exponent keys after basis splits."""
    for tag_idx, parts in rewrites[mark:]:
        tag, idx = tag_idx
        if tag != "x":
            continue
        out: dict[tuple[int, int], int] = {}
        for (a, s), e in d.items():
            if a == idx:
                for new_idx, off, mult in parts:
                    key = (new_idx, s + off)
                    out[key] = out.get(key, 0) + e * mult
            else:
                out[(a, s)] = out.get((a, s), 0) + e
        d = out
    return {k: e for k, e in d.items() if e}


def replay_param_keys(d: dict[int, int], rewrites, mark: int) -> dict[int, int]:
    for tag_idx, parts in rewrites[mark:]:
        tag, idx = tag_idx
        if tag != "p":
            continue
        out: dict[int, int] = {}
        for a, e in d.items():
            if a == idx:
                for new_idx, _off, mult in parts:
                    out[new_idx] = out.get(new_idx, 0) + e * mult
            else:
                out[a] = out.get(a, 0) + e
        d = out
    return {k: e for k, e in d.items() if e}


def refresh_vector(vec: ExponentVector, basis: FactorBasis) -> ExponentVector:
    """Bring an exponent vector up to date with the refined basis."""
    if vec.mark == len(basis.rewrites):
        return vec
    return ExponentVector(
        vec.sign,
        dict(vec.primes),
        replay_param_keys(dict(vec.params), basis.rewrites, vec.mark),
        replay_x_keys(dict(vec.xatoms), basis.rewrites, vec.mark),
        len(basis.rewrites),
    )


def factor_into_basis(f: RatFun, basis: FactorBasis) -> ExponentVector:
    """Exact multiplicative split of f over the (refined) basis."""
    if f.is_zero():
        raise ProductError("cannot factor zero")
    ctx = basis.ctx
    vec = ExponentVector(mark=len(basis.rewrites))
    for poly, side in ((f.num, 1), (f.den, -1)):
        _, prim = poly.primitive()
        pcontent, xprim = _x_content_split(prim)
        if pcontent.degree_total() >= 1:
            res = basis.add_param_poly(pcontent)
            vec.params = replay_param_keys(vec.params, basis.rewrites, vec.mark)
            vec.xatoms = replay_x_keys(vec.xatoms, basis.rewrites, vec.mark)
            vec.mark = len(basis.rewrites)
            for idx, e in res.items():
                vec.params[idx] = vec.params.get(idx, 0) + side * e
        if xprim.degree() >= 1:
            res = basis.add_x_poly(xprim)
            vec.params = replay_param_keys(vec.params, basis.rewrites, vec.mark)
            vec.xatoms = replay_x_keys(vec.xatoms, basis.rewrites, vec.mark)
            vec.mark = len(basis.rewrites)
            for key, e in res.items():
                vec.xatoms[key] = vec.xatoms.get(key, 0) + side * e
    vec.params = {i: e for i, e in vec.params.items() if e}
    vec.xatoms = {k: e for k, e in vec.xatoms.items() if e}
    # reconcile: the leftover must be a rational constant
    rebuilt = rebuild(vec, basis)
    left = f / rebuilt
    if not left.is_constant():
        raise ProductError(f"factorization reconciliation failed for {f}")
    c = left.as_fraction()
    if c < 0:
        vec.sign = -1
        c = -c
    for p, e in factor_primes(c.numerator).items():
        vec.primes[p] = vec.primes.get(p, 0) + e
    for p, e in factor_primes(c.denominator).items():
        vec.primes[p] = vec.primes.get(p, 0) - e
    vec.primes = {p: e for p, e in vec.primes.items() if e}
    return vec


def _x_content_split(p: MPoly) -> tuple[MPoly, MPoly]:
    """p = content(p wrt x) * primitive-in-x part."""
    ctx = p.ctx
    if p.degree() < 1:
        return p, ctx.one_poly()
    coeffs = [p.coeff_of(ctx.x, k) for k in range(p.degree() + 1)]
    g = ctx.zero_poly()
    for c in coeffs:
        if not c.is_zero():
            g = c if g.is_zero() else g.gcd(c)
    if g.degree_total() < 1:
        return ctx.one_poly() if g.is_zero() else _sign_one(g), p
    return g, p.exquo(g)


def _sign_one(g: MPoly) -> MPoly:
    return g.ctx.one_poly()


def rebuild(vec: ExponentVector, basis: FactorBasis) -> RatFun:
    """Multiply the decomposition back (for verification)."""
    ctx = basis.ctx
    out = ctx.from_fraction(Fraction(vec.sign))
    for p, e in vec.primes.items():
        out = out * ctx.from_fraction(Fraction(p)) ** e
    for i, e in vec.params.items():
        out = out * ctx.ratfun(basis.param_atoms[i]) ** e
    for (i, s), e in vec.xatoms.items():
        out = out * ctx.ratfun(basis.x_atoms[i].shift(s)) ** e
    return out


# ---------------------------------------------------------------------------
# multiplicative dependence lattice


def _vec_scale_add(dst: ExponentVector, src: ExponentVector, e: int) -> None:
    if e % 2 and src.sign < 0:
        dst.sign = -dst.sign
    for p, pe in src.primes.items():
        dst.primes[p] = dst.primes.get(p, 0) + e * pe
    for i, pe in src.params.items():
        dst.params[i] = dst.params.get(i, 0) + e * pe
    for key, pe in src.xatoms.items():
        dst.xatoms[key] = dst.xatoms.get(key, 0) + e * pe


def _dependence_data(
    ratios: list[RingElem], tower: Tower, basis: FactorBasis
) -> list[tuple[list[int], list[int]]]:
    """Solve for (z, m): prod ratios^z = (sigma(h)/h) * prod alpha_j^{m_j} *
    (-1)^eps with rational h.  Returns full kernel vectors (z-part, m-part)."""
    pi_idx = [i for i, g in enumerate(tower.gens) if g.kind == "PI"]
    has_r = tower.r_index() is not None
    r_idx = tower.r_index()
    ratio_vecs: list[ExponentVector] = []
    ratio_mono: list[dict[int, int]] = []
    for u in ratios:
        if not u.is_unit():
            raise ProductError("lattice input must be a unit")
        exps, coeff = u.terms[0]
        v = factor_into_basis(coeff, basis)
        if r_idx is not None and exps[r_idx]:
            v.sign = -v.sign
        ratio_vecs.append(v)
        ratio_mono.append({j: exps[j] for j in pi_idx if exps[j]})
    alpha_vecs: list[ExponentVector] = []
    for j in pi_idx:
        alpha = tower.gens[j].sigma_data
        if alpha.max_level() != 0:
            raise ProductError("nested product ratios are not supported")
        alpha_vecs.append(factor_into_basis(alpha.constant_part(), basis))
    d = len(ratios)
    p = len(pi_idx)
    # columns: z_1..z_d, m_1..m_p
    all_vecs = ratio_vecs + alpha_vecs
    prime_keys = sorted({q for v in all_vecs for q in v.primes})
    param_keys = sorted({i for v in all_vecs for i in v.params})
    orbit_keys = sorted({i for v in all_vecs for (i, _) in v.xatoms})
    rows: list[list[int]] = []
    # generator-monomial parts of the combined ratio must cancel outright
    for j in pi_idx:
        rows.append([m.get(j, 0) for m in ratio_mono] + [0] * p)
    for q in prime_keys:
        rows.append([v.primes.get(q, 0) for v in ratio_vecs] + [-a.primes.get(q, 0) for a in alpha_vecs])
    for i in param_keys:
        rows.append([v.params.get(i, 0) for v in ratio_vecs] + [-a.params.get(i, 0) for a in alpha_vecs])
    for i in orbit_keys:
        rows.append(
            [sum(e for (a, _), e in v.xatoms.items() if a == i) for v in ratio_vecs]
            + [-sum(e for (a, _), e in av.xatoms.items() if a == i) for av in alpha_vecs]
        )
    cols = d + p
    kernel = int_kernel(rows) if rows else [
        [1 if i == j else 0 for j in range(cols)] for i in range(cols)
    ]
    if not has_r:
        sign_row = [0 if v.sign > 0 else 1 for v in ratio_vecs] + [
            0 if a.sign > 0 else 1 for a in alpha_vecs
        ]
        kernel = _restrict_parity(kernel, sign_row)
    return [(vec[:d], vec[d:]) for vec in kernel]


def _restrict_parity(kernel: list[list[int]], sign_row: list[int]) -> list[list[int]]:
    """Sublattice where the sign functional is even."""
    odd = [v for v in kernel if sum(a * b for a, b in zip(v, sign_row)) % 2]
    even = [v for v in kernel if sum(a * b for a, b in zip(v, sign_row)) % 2 == 0]
    if not odd:
        return kernel
    pivot = odd[0]
    out = list(even)
    out.append([2 * a for a in pivot])
    for v in odd[1:]:
        out.append([a - b for a, b in zip(v, pivot)])
    return out


def dependence_lattice(
    ratios: list[RingElem], tower: Tower, basis: FactorBasis
) -> list[list[int]]:
    """Basis of M(ratios, tower): all z admitting g != 0 in the tower with
    sigma(g) = prod ratios_i^{z_i} * g."""
    seen = set()
    out = []
    for z, _m in _dependence_data(ratios, tower, basis):
        zt = tuple(z)
        if any(zt) and zt not in seen:
            seen.add(zt)
            out.append(list(z))
    return out


def is_pi_extension(ratio: RingElem, tower: Tower, basis: FactorBasis) -> bool:
    """True iff adjoining a Pi-generator with this ratio keeps the constants."""
    return not any(v[0] for v in dependence_lattice([ratio], tower, basis))


# ---------------------------------------------------------------------------
# compiling products into R/Pi-generators


class BasisSplit(Exception):
    """Raised when refinement split an atom that already has a generator;
    the session replays its inputs against the refined basis."""


@dataclass
class GenRegistry:
    """Basis keys -> tower generator indices (owned by the session)."""

    r_gen: int | None = None
    prime_gens: dict[int, int] = field(default_factory=dict)
    param_gens: dict[int, int] = field(default_factory=dict)
    x_gens: dict[int, int] = field(default_factory=dict)
    mark: int = 0

    def sync(self, basis: FactorBasis) -> None:
        """Check for splits that touched registered atoms."""
        for (tag, idx), _parts in basis.rewrites[self.mark :]:
            if tag == "x" and idx in self.x_gens:
                raise BasisSplit(f"x-atom {idx} split under a live generator")
            if tag == "p" and idx in self.param_gens:
                raise BasisSplit(f"parameter atom {idx} split under a live generator")
        self.mark = len(basis.rewrites)


def ensure_r(tower: Tower, reg: GenRegistry) -> tuple[Tower, int]:
    if reg.r_gen is None:
        tower, reg.r_gen = adjoin_r(tower)
    return tower, reg.r_gen


def _ensure_prime(tower: Tower, reg: GenRegistry, p: int) -> tuple[Tower, int]:
    if p not in reg.prime_gens:
        alpha = tower.from_ratfun(tower.ctx.from_fraction(Fraction(p)))
        tower, idx = adjoin_pi(tower, alpha, 1)
        reg.prime_gens[p] = idx
    return tower, reg.prime_gens[p]


def _ensure_param(tower: Tower, reg: GenRegistry, basis: FactorBasis, i: int) -> tuple[Tower, int]:
    if i not in reg.param_gens:
        alpha = tower.from_ratfun(tower.ctx.ratfun(basis.param_atoms[i]))
        tower, idx = adjoin_pi(tower, alpha, 1)
        reg.param_gens[i] = idx
    return tower, reg.param_gens[i]


def _ensure_x_atom(tower: Tower, reg: GenRegistry, basis: FactorBasis, i: int) -> tuple[Tower, int]:
    # single-atom ratios are automatically Pi-extensions: the orbit total of a
    # new candidate is 1 and registered atoms are never duplicated
    if i not in reg.x_gens:
        ctx = tower.ctx
        q = ctx.ratfun(basis.x_atoms[i])
        lower = max(lfun_rat(q), zfun_rat(q))
        alpha = tower.from_ratfun(q.shift(1))
        tower, idx = adjoin_pi(tower, alpha, lower)
        reg.x_gens[i] = idx
    return tower, reg.x_gens[i]


def compile_multiplicand(
    f: RatFun, lower: int, tower: Tower, basis: FactorBasis, reg: GenRegistry
) -> tuple[RingElem, Tower, int]:
    """Model Prod(lower, f) as a unit of a (possibly extended) tower."""
    ctx = tower.ctx
    if f.is_zero():
        raise ProductError("zero multiplicand")
    z = zfun_rat(f)
    if lower < z:
        raise ProductError(
            f"product lower bound {lower} is below the zero bound {z}; lift it"
        )
    vec = factor_into_basis(f, basis)
    reg.sync(basis)
    coeff = ctx.one()
    exps_extra: list[tuple[int, int]] = []
    if vec.sign < 0:
        tower, ri = ensure_r(tower, reg)
        exps_extra.append((ri, 1))
        if (lower + 1) % 2:
            coeff = -coeff
    for p, e in vec.primes.items():
        tower, gi = _ensure_prime(tower, reg, p)
        exps_extra.append((gi, e))
        coeff = coeff * ctx.from_fraction(Fraction(p)) ** (e * (1 - lower))
    for i, e in vec.params.items():
        tower, gi = _ensure_param(tower, reg, basis, i)
        exps_extra.append((gi, e))
        coeff = coeff * ctx.ratfun(basis.param_atoms[i]) ** (e * (1 - lower))
    for (i, s), e in vec.xatoms.items():
        tower, gi = _ensure_x_atom(tower, reg, basis, i)
        exps_extra.append((gi, e))
        q = basis.x_atoms[i]
        l_gen = tower.gens[gi].lower_bound
        # prod_{i=lower}^{k} q(i+s) = ev(t, k) * boundary(k) * const
        boundary = ctx.one()
        if s > 0:
            for j in range(1, s + 1):
                boundary = boundary * ctx.ratfun(q.shift(j))
        elif s < 0:
            for j in range(s + 1, 1):
                boundary = boundary * ctx.ratfun(q.shift(j)) ** -1
        const = ctx.one()
        lo, hi = l_gen, lower + s
        if lo < hi:
            for j in range(lo, hi):
                const = const * ctx.ratfun(q.eval_x(j)) ** -1
        elif hi < lo:
            for j in range(hi, lo):
                const = const * ctx.ratfun(q.eval_x(j))
        coeff = coeff * (boundary * const) ** e
    exps = [0] * len(tower.gens)
    for gi, e in exps_extra:
        exps[gi] = (exps[gi] + e) % 2 if tower.gens[gi].kind == "R" else exps[gi] + e
    elem = tower.monomial(coeff, tuple(exps))
    delta = max(lfun(elem), lower - 1, 0)
    return elem, tower, delta


def compile_power_product(
    pp, tower: Tower, basis: FactorBasis, reg: GenRegistry
) -> tuple[RingElem, Tower, int]:
    """Model a power product of depth-1 products and RPow atoms."""
    from .expr import Rat as RatNode

    elem = tower.one()
    delta = 0
    for atom, e in pp:
        if isinstance(atom, RPow):
            tower, ri = ensure_r(tower, reg)
            part = tower.gen_elem(ri, e)
        elif isinstance(atom, Prod):
            if not isinstance(atom.body, RatNode):
                raise ProductError("nested product bodies are out of scope")
            part, tower, d = compile_multiplicand(atom.body.fun, atom.lower, tower, basis, reg)
            delta = max(delta, d)
            part = part ** e
        else:
            raise ProductError(f"not a product atom: {atom!r}")
        elem = elem.lift(tower) * part
    delta = max(delta, lfun(elem))
    return elem, tower, delta


def lattice_witness(
    zvec: list[int], ratios: list[RingElem], tower: Tower, basis: FactorBasis
) -> RingElem:
    """Construct g with sigma(g) = prod ratios^z * g for a lattice vector."""
    pi_idx = [i for i, g in enumerate(tower.gens) if g.kind == "PI"]
    r_idx = tower.r_index()
    for z, m in _dependence_data(ratios, tower, basis):
        if z == list(zvec):
            break
    else:
        raise ProductError("not a lattice basis vector; construct directly")
    target = tower.one()
    for e, u in zip(z, ratios):
        target = target * (u.lift(tower) ** e)
    exps, coeff = target.terms[0]
    vec = factor_into_basis(coeff, basis)
    if r_idx is not None and exps[r_idx]:
        vec.sign = -vec.sign
    # remove the alpha^m part: the remaining piece is a pure sigma-quotient
    for pos, j in enumerate(pi_idx):
        if m[pos]:
            av = factor_into_basis(tower.gens[j].sigma_data.constant_part(), basis)
            _vec_scale_add(vec, av, -m[pos])
    ctx = basis.ctx
    g_coeff = ctx.one()
    orbit_ids = sorted({i for (i, _) in vec.xatoms})
    for i in orbit_ids:
        offs = {s: e for (a, s), e in vec.xatoms.items() if a == i and e}
        if not offs:
            continue
        lo, hi = min(offs), max(offs)
        running = 0
        for s in range(lo, hi):
            running += offs.get(s, 0)
            # c_s = -sum_{t<=s} e_t gives sigma(h)/h exponent e_s at each slot
            if running:
                g_coeff = g_coeff * ctx.ratfun(
                    basis.x_atoms[i].subs(ctx.x, ctx.x + s)
                ) ** (-running)
    g_exps = [0] * len(tower.gens)
    for pos, j in enumerate(pi_idx):
        g_exps[j] = m[pos]
    g = tower.monomial(g_coeff, tuple(g_exps))
    if r_idx is not None and vec.sign < 0:
        g = g * tower.gen_elem(r_idx)
    return g
