"""Difference-ring tower over K(x): generators adjoined as R-, Pi- or
Sigma-monomials, elements in reduced (Laurent) polynomial representation with
rational-function coefficients, the shift automorphism, and the constructed
evaluation/order/zero functions.

Exponent ranges: R in {0,1} (relation r^2 = 1, sigma(r) = -r), Pi in Z
(Laurent), Sigma in Z>=0.  sigma_data of a generator lives in the tower below
it: a unit ratio for Pi (sigma(t) = alpha*t), a difference for Sigma
(sigma(t) = t + beta).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import comb
from typing import Iterable

from .arith import ArithError, Context, RatFun
from .expr import Expr, Prod, Rat, RPow, Sum, eadd, emul, epow, lfun_rat, zfun_rat


class TowerError(ValueError):
    pass


@dataclass(frozen=True)
class Generator:
    kind: str  # 'R' | 'PI' | 'SIGMA'
    sigma_data: "RingElem | None"
    lower_bound: int
    back_expr: Expr


@dataclass(frozen=True)
class Tower:
    ctx: Context
    gens: tuple[Generator, ...] = ()
    _ev_cache: dict = field(default_factory=dict, compare=False, repr=False)
    _inv_cache: dict = field(default_factory=dict, compare=False, repr=False)
    _sigma_cache: dict = field(default_factory=dict, compare=False, repr=False)

    # -- element constructors ----------------------------------------------

    def zero(self) -> "RingElem":
        return RingElem(self, ())

    def one(self) -> "RingElem":
        return self.from_ratfun(self.ctx.one())

    def from_ratfun(self, f: RatFun) -> "RingElem":
        if f.is_zero():
            return self.zero()
        return RingElem(self, (((0,) * len(self.gens), f),))

    def gen_elem(self, i: int, power: int = 1) -> "RingElem":
        exps = [0] * len(self.gens)
        kind = self.gens[i].kind
        if kind == "SIGMA" and power < 0:
            raise TowerError("negative power of a sum generator")
        exps[i] = power % 2 if kind == "R" else power
        if kind == "R" and exps[i] == 0:
            return self.one()
        return RingElem(self, ((tuple(exps), self.ctx.one()),))

    def monomial(self, coeff: RatFun, exps: Iterable[int]) -> "RingElem":
        exps = tuple(exps)
        if coeff.is_zero():
            return self.zero()
        return RingElem(self, ((exps, coeff),))

    # -- structure ----------------------------------------------------------

    def extend(self, gen: Generator) -> "Tower":
        if gen.kind == "R" and any(g.kind == "R" for g in self.gens):
            raise TowerError("tower already has a root-of-unity generator")
        return Tower(self.ctx, self.gens + (gen,))

    def is_prefix_of(self, other: "Tower") -> bool:
        return self.gens == other.gens[: len(self.gens)]

    def r_index(self) -> int | None:
        for i, g in enumerate(self.gens):
            if g.kind == "R":
                return i
        return None

    # -- evaluation ---------------------------------------------------------

    def ev_gen(self, i: int, k: int) -> RatFun:
        """ev(t_i, k) in K (parameters symbolic)."""
        key = (i, k)
        hit = self._ev_cache.get(key)
        if hit is not None:
            return hit
        g = self.gens[i]
        if g.kind == "R":
            v = self.ctx.from_fraction(Fraction((-1) ** k))
        else:
            body = self.sigma_data_shifted(i)
            l = g.lower_bound
            if g.kind == "SIGMA":
                v = self.ctx.zero()
                start = l
                if k >= l and (i, k - 1) in self._ev_cache:
                    v = self._ev_cache[(i, k - 1)]
                    start = k
                for j in range(start, k + 1):
                    v = v + ev(body, j)
            else:
                v = self.ctx.one()
                start = l
                if k >= l and (i, k - 1) in self._ev_cache:
                    v = self._ev_cache[(i, k - 1)]
                    start = k
                for j in range(start, k + 1):
                    v = v * ev(body, j)
        self._ev_cache[key] = v
        return v

    def sigma_data_shifted(self, i: int) -> "RingElem":
        """sigma^{-1} of the generator's sigma_data (the multiplicand or
        summand as written under the sum/product sign)."""
        hit = self._inv_cache.get(i)
        if hit is None:
            hit = sigma(self.gens[i].sigma_data.lift(self), -1)
            self._inv_cache[i] = hit
        return hit


@dataclass(frozen=True)
class RingElem:
    owner: Tower
    terms: tuple[tuple[tuple[int, ...], RatFun], ...]

    @staticmethod
    def from_dict(owner: Tower, d: dict[tuple[int, ...], RatFun]) -> "RingElem":
        items = tuple(sorted((e, c) for e, c in d.items() if not c.is_zero()))
        return RingElem(owner, items)

    def as_dict(self) -> dict[tuple[int, ...], RatFun]:
        return dict(self.terms)

    # -- ring structure ------------------------------------------------------

    def lift(self, tower: Tower) -> "RingElem":
        if tower is self.owner or tower.gens == self.owner.gens:
            return RingElem(tower, self.terms)
        if not self.owner.is_prefix_of(tower):
            raise TowerError("element does not embed into the target tower")
        pad = len(tower.gens) - len(self.owner.gens)
        return RingElem(tower, tuple((e + (0,) * pad, c) for e, c in self.terms))

    def _pair(self, other: "RingElem") -> tuple["RingElem", "RingElem"]:
        if self.owner.gens == other.owner.gens:
            return self, other
        if self.owner.is_prefix_of(other.owner):
            return self.lift(other.owner), other
        if other.owner.is_prefix_of(self.owner):
            return self, other.lift(self.owner)
        raise TowerError("elements of incompatible towers")

    def __add__(self, other: "RingElem") -> "RingElem":
        a, b = self._pair(other)
        d = a.as_dict()
        for e, c in b.terms:
            d[e] = d[e] + c if e in d else c
        return RingElem.from_dict(a.owner, d)

    def __sub__(self, other: "RingElem") -> "RingElem":
        return self + (-other)

    def __neg__(self) -> "RingElem":
        return RingElem(self.owner, tuple((e, -c) for e, c in self.terms))

    def __mul__(self, other: "RingElem") -> "RingElem":
        a, b = self._pair(other)
        r_idx = a.owner.r_index()
        d: dict[tuple[int, ...], RatFun] = {}
        for ea, ca in a.terms:
            for eb, cb in b.terms:
                e = tuple(x + y for x, y in zip(ea, eb))
                if r_idx is not None and e[r_idx] > 1:
                    e = e[:r_idx] + (e[r_idx] % 2,) + e[r_idx + 1 :]
                c = ca * cb
                d[e] = d[e] + c if e in d else c
        return RingElem.from_dict(a.owner, d)

    def scale(self, f: RatFun) -> "RingElem":
        if f.is_zero():
            return self.owner.zero()
        return RingElem(self.owner, tuple((e, c * f) for e, c in self.terms))

    def __pow__(self, k: int) -> "RingElem":
        if k < 0:
            return self.unit_inverse() ** (-k)
        out = self.owner.one()
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base if k > 1 else base
            k >>= 1
        return out

    def is_zero(self) -> bool:
        return not self.terms

    def is_one(self) -> bool:
        return len(self.terms) == 1 and self.terms[0][1].is_one() and not any(self.terms[0][0])

    def constant_part(self) -> RatFun:
        for e, c in self.terms:
            if not any(e):
                return c
        return self.owner.ctx.zero()

    # -- units ---------------------------------------------------------------

    def is_unit(self) -> bool:
        """Member of the simple product group: one term, no Sigma exponents."""
        if len(self.terms) != 1:
            return False
        exps, coeff = self.terms[0]
        if coeff.is_zero():
            return False
        for i, e in enumerate(exps):
            if e and self.owner.gens[i].kind == "SIGMA":
                return False
        return True

    def unit_inverse(self) -> "RingElem":
        if not self.is_unit():
            raise TowerError("not a unit in reduced representation")
        exps, coeff = self.terms[0]
        inv = tuple(
            e if self.owner.gens[i].kind == "R" else -e for i, e in enumerate(exps)
        )
        return RingElem(self.owner, ((inv, coeff.inv()),))

    # -- queries -------------------------------------------------------------

    def degree_in(self, i: int) -> int:
        return max((e[i] for e, _ in self.terms), default=0)

    def exps_in(self, i: int) -> set[int]:
        return {e[i] for e, _ in self.terms}

    def coeff_of(self, i: int, k: int) -> "RingElem":
        """Coefficient of t_i^k: element with t_i-exponent zeroed."""
        out = [
            (e[:i] + (0,) + e[i + 1 :], c) for e, c in self.terms if e[i] == k
        ]
        return RingElem.from_dict(self.owner, dict(out))

    def free_of(self, i: int) -> bool:
        return all(e[i] == 0 for e, _ in self.terms)

    def max_level(self) -> int:
        """1 + highest generator index that occurs (0 for ground elements)."""
        lvl = 0
        for e, _ in self.terms:
            for i in range(len(e) - 1, -1, -1):
                if e[i]:
                    lvl = max(lvl, i + 1)
                    break
        return lvl

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for e, c in self.terms:
            gens = "*".join(
                f"t{i}^{k}" if k != 1 else f"t{i}" for i, k in enumerate(e) if k
            )
            parts.append(f"({c})" + (f"*{gens}" if gens else ""))
        return " + ".join(parts)


# ---------------------------------------------------------------------------
# the shift automorphism


def sigma(a: RingElem, power: int = 1) -> RingElem:
    if power == 0 or a.is_zero():
        return a
    step = 1 if power > 0 else -1
    out = a
    for _ in range(abs(power)):
        out = _sigma_once(out, step)
    return out


def _sigma_once(a: RingElem, step: int) -> RingElem:
    tower = a.owner
    out = tower.zero()
    cache = tower._sigma_cache
    for exps, coeff in a.terms:
        term = tower.from_ratfun(coeff.shift(step))
        for i, e in enumerate(exps):
            if not e:
                continue
            key = (i, e, step)
            img = cache.get(key)
            if img is None:
                img = _sigma_gen_power(tower, i, e, step)
                cache[key] = img
            term = term * img
        out = out + term
    return out


def _sigma_gen_power(tower: Tower, i: int, e: int, step: int) -> RingElem:
    g = tower.gens[i]
    t = tower.gen_elem(i)
    if g.kind == "R":
        # sigma(r) = -r, sigma^{-1}(r) = -r; r^e with e in {0,1}
        return tower.gen_elem(i, e).scale(tower.ctx.from_fraction(Fraction((-1) ** e)))
    data = g.sigma_data.lift(tower)
    if g.kind == "PI":
        alpha = data if step == 1 else sigma(data, -1).unit_inverse()
        return (alpha ** e) * tower.gen_elem(i, e)
    beta = data if step == 1 else -sigma(data, -1)
    # (t + beta)^e expanded binomially
    out = tower.zero()
    powers = [tower.one()]
    for _ in range(e):
        powers.append(powers[-1] * beta)
    for j in range(0, e + 1):
        c = tower.ctx.from_fraction(Fraction(comb(e, j)))
        out = out + (tower.gen_elem(i, j) if j else tower.one()).scale(c) * powers[e - j]
    return out


# ---------------------------------------------------------------------------
# constructed evaluation, order and zero functions


def ev(a: RingElem, k: int) -> RatFun:
    """Evaluation into K = Q(params); parameters stay symbolic."""
    tower = a.owner
    out = tower.ctx.zero()
    for exps, coeff in a.terms:
        v = coeff.eval_x(k)
        if v.is_zero():
            continue
        for i, e in enumerate(exps):
            if not e:
                continue
            gv = tower.ev_gen(i, k)
            if gv.is_zero():
                if e > 0:
                    v = tower.ctx.zero()
                    break
                raise TowerError(f"generator t{i} evaluates to zero at {k}")
            v = v * gv ** e
        out = out + v
    return out


def ev_spec(a: RingElem, k: int, assignment: dict[str, Fraction]) -> Fraction:
    v = ev(a, k)
    return v.num.eval_all(assignment) / v.den.eval_all(assignment)


def lfun(a: RingElem) -> int:
    """o-function: shortcut over the reduced representation."""
    out = 0
    for exps, coeff in a.terms:
        out = max(out, lfun_rat(coeff))
        for i, e in enumerate(exps):
            if e:
                out = max(out, a.owner.gens[i].lower_bound - 1)
    return out


def zfun(a: RingElem) -> int:
    """z-function on the simple product group."""
    if not a.is_unit():
        raise TowerError("z-function is only defined for units")
    exps, coeff = a.terms[0]
    out = max(zfun_rat(coeff), lfun(a))
    for i, e in enumerate(exps):
        if e:
            out = max(out, a.owner.gens[i].lower_bound)
    return out


def to_expr(a: RingElem) -> tuple[Expr, int]:
    """Canonical induced sum-product expression and its validity bound."""
    ctx = a.owner.ctx
    if a.is_zero():
        return Rat(ctx.zero()), 0
    parts = []
    for exps, coeff in a.terms:
        factors = []
        for i, e in enumerate(exps):
            if e:
                factors.append(epow(a.owner.gens[i].back_expr, e))
        if not factors:
            parts.append(Rat(coeff))
        elif coeff.is_one():
            parts.append(emul(*factors) if len(factors) > 1 else factors[0])
        else:
            parts.append(emul(Rat(coeff), *factors))
    expr = eadd(*parts) if len(parts) > 1 else parts[0]
    return expr, lfun(a)


# ---------------------------------------------------------------------------
# adjoining generators


def adjoin_sigma(tower: Tower, beta: RingElem, lower: int) -> tuple[Tower, int]:
    """Append a Sigma-generator with sigma(t) = t + beta.  The caller is
    responsible for having checked that beta's telescoping problem has no
    solution in the tower (otherwise constants would grow)."""
    beta = beta.lift(tower)
    body = sigma(beta, -1)
    need = lfun(body)
    if lower < need:
        raise TowerError(f"lower bound {lower} is below the admissible bound {need}")
    body_expr, _ = to_expr(body)
    gen = Generator("SIGMA", beta, lower, Sum(lower, body_expr))
    return tower.extend(gen), len(tower.gens)


def adjoin_pi(tower: Tower, alpha: RingElem, lower: int) -> tuple[Tower, int]:
    """Append a Pi-generator with sigma(t) = alpha * t."""
    alpha = alpha.lift(tower)
    if not alpha.is_unit():
        raise TowerError("product ratio must be a unit of the tower")
    exps, _ = alpha.terms[0]
    r_idx = tower.r_index()
    if r_idx is not None and exps[r_idx]:
        raise TowerError("product ratio may not involve the root-of-unity generator")
    body = sigma(alpha, -1)
    need = max(lfun(body), zfun(body))
    if lower < need:
        raise TowerError(f"lower bound {lower} is below the admissible bound {need}")
    body_expr, _ = to_expr(body)
    gen = Generator("PI", alpha, lower, Prod(lower, body_expr))
    return tower.extend(gen), len(tower.gens)


def adjoin_r(tower: Tower) -> tuple[Tower, int]:
    """Append the order-2 generator with sigma(r) = -r, ev(r, n) = (-1)^n."""
    gen = Generator("R", None, 0, RPow(Fraction(-1)))
    return tower.extend(gen), len(tower.gens)
