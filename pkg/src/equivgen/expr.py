"""Exact rational expressions over interned symbols.

An :class:`Expr` is a sparse polynomial numerator over a denominator kept
as a product of irreducible, primitive, sign-normalized factors. Known
factors are cancelled by exact division after every operation, so equal
rational functions built along different routes compare equal.
"""

from __future__ import annotations

from fractions import Fraction

import sympy
from gmpy2 import mpq

from . import poly as P
from .errors import NonPolynomialError, ZeroDenominatorError
from .symbols import Kind, Symbol, exponential, key_of, sym_of


def canon_mono(m) -> tuple:
    return tuple(sorted((key_of(i), e) for i, e in m))


def _ordinary_degree(m) -> int:
    return sum(e for _, e in m if type(e) is int)


def term_key(m) -> tuple:
    return (_ordinary_degree(m), canon_mono(m))


class Factor:
    """An interned denominator factor."""

    __slots__ = ("poly", "key", "atoms", "__weakref__")
    _table: dict = {}

    def __init__(self, poly, key):
        self.poly = poly
        self.key = key
        self.atoms = frozenset(P.atoms(poly))

    @classmethod
    def get(cls, poly) -> "Factor":
        fk = frozenset(poly.items())
        f = cls._table.get(fk)
        if f is None:
            key = tuple(sorted((term_key(m), int(c.numerator), int(c.denominator))
                               for m, c in poly.items()))
            f = cls._table[fk] = Factor(poly, key)
        return f

    def __lt__(self, other):
        return self.key < other.key

    def __repr__(self):
        return f"Factor({_poly_str(self.poly)})"


def _normalize_sign(p):
    """Primitive version of ``p`` with a positive leading coefficient, and the unit removed."""
    c = P.content(p)
    lead = max(p, key=term_key)
    if p[lead] < 0:
        c = -c
    return ({m: v / c for m, v in p.items()} if c != 1 else p), c


_FACTOR_CACHE: dict = {}


def _to_sympy_rational(c):
    return sympy.Rational(int(c.numerator), int(c.denominator))


def _sympy_factor(p):
    """Irreducible factors of an exponential-free polynomial with no monomial content."""
    fk = frozenset(p.items())
    hit = _FACTOR_CACHE.get(fk)
    if hit is not None:
        return hit
    if P.total_degree(p) <= 1:
        res = (P.ONE, [(p, 1)])
    else:
        ids = sorted(P.atoms(p))
        gens = sympy.symbols(f"z0:{len(ids)}")
        pos = {i: k for k, i in enumerate(ids)}
        d = {}
        for m, c in p.items():
            v = [0] * len(ids)
            for i, e in m:
                v[pos[i]] = e
            d[tuple(v)] = _to_sympy_rational(c)
        sp = sympy.Poly.from_dict(d, gens, domain="QQ")
        c0, facs = sp.factor_list()
        out = []
        unit = mpq(int(sympy.fraction(c0)[0]), int(sympy.fraction(c0)[1]))
        for fp, e in facs:
            q = {}
            for exps, c in fp.terms():
                m = tuple((ids[k], int(x)) for k, x in enumerate(exps) if x)
                n_, d_ = sympy.fraction(sympy.Rational(c))
                q[m] = mpq(int(n_), int(d_))
            out.append((q, int(e)))
        res = (unit, out)
    _FACTOR_CACHE[fk] = res
    return res


def factor_poly(p):
    """Return ``(unit, exp_mono, [(Factor, e)])`` with ``p = unit * exp_mono * prod f^e``."""
    if not p:
        raise ZeroDenominatorError("zero denominator")
    ordinary = P.monomial_content(p)
    # common exponential content (exponents may be negative)
    exp_ids = None
    for m in p:
        ids = {i: e for i, e in m if type(e) is not int}
        if exp_ids is None:
            exp_ids = ids
        else:
            exp_ids = {i: min(e, ids.get(i, 0)) for i, e in exp_ids.items()}
            for i, e in ids.items():
                if i not in exp_ids:
                    exp_ids[i] = min(e, 0)
    exp_mono = tuple(sorted((i, e) for i, e in (exp_ids or {}).items() if e))
    strip = tuple(sorted(ordinary + exp_mono))
    rest = {}
    for m, c in p.items():
        d = dict(m)
        for i, e in strip:
            nv = d.get(i, 0) - e
            if nv:
                d[i] = nv
            else:
                del d[i]
        rest[tuple(sorted(d.items()))] = c
    factors = {}
    for i, e in ordinary:
        f = Factor.get(P.atom(i))
        factors[f] = factors.get(f, 0) + e
    unit = P.ONE
    if len(rest) == 1:
        (m, c), = rest.items()
        unit = c
        # any leftover exponential atoms are units too
        exp_mono = P.mono_mul(exp_mono, m)
    elif any(type(e) is not int for m in rest for _, e in m):
        q, c = _normalize_sign(rest)
        unit = c
        f = Factor.get(q)
        factors[f] = factors.get(f, 0) + 1
    else:
        u0, parts = _sympy_factor(rest)
        unit = u0
        for q, e in parts:
            qn, c = _normalize_sign(q)
            unit = unit * c ** e
            f = Factor.get(qn)
            factors[f] = factors.get(f, 0) + e
    return unit, exp_mono, sorted(factors.items(), key=lambda fe: fe[0].key)


def _can_divide(num, f: Factor) -> bool:
    if len(num) < len(f.poly):
        return False
    na = P.atoms(num)
    return f.atoms <= na


def _cancel(num, den: dict):
    if not num:
        return {}, ()
    out = []
    for f, e in sorted(den.items(), key=lambda fe: fe[0].key):
        while e > 0 and _can_divide(num, f):
            q = P.divexact(num, f.poly)
            if q is None:
                break
            num = q
            e -= 1
        if e:
            out.append((f, e))
    return num, tuple(out)


def _den_product(den) -> dict:
    r = P.const(1)
    for f, e in den:
        r = P.mul(r, P.power(f.poly, e))
    return r


class Expr:
    """Immutable rational expression."""

    __slots__ = ("num", "den", "_h")

    def __init__(self, num=None, den=()):
        self.num = num if num is not None else {}
        self.den = den if self.num else ()
        self._h = None

    # construction -----------------------------------------------------
    @staticmethod
    def const(c) -> "Expr":
        if isinstance(c, Fraction):
            c = mpq(c.numerator, c.denominator)
        return Expr(P.const(c))

    @staticmethod
    def sym(s: Symbol) -> "Expr":
        return Expr(P.atom(s.sid))

    @staticmethod
    def exp(param: Symbol, rate) -> "Expr":
        """``exp(rate * param)`` for rational ``rate``."""
        rate = mpq(rate)
        if not rate:
            return Expr.const(1)
        return Expr({((exponential(param.name).sid, rate),): P.ONE})

    @staticmethod
    def make(num, den: dict) -> "Expr":
        n, d = _cancel(num, den)
        return Expr(n, d)

    @staticmethod
    def coerce(x) -> "Expr":
        if isinstance(x, Expr):
            return x
        if isinstance(x, Symbol):
            return Expr.sym(x)
        return Expr.const(x)

    # basic predicates ---------------------------------------------------
    def is_zero(self) -> bool:
        return not self.num

    def __bool__(self) -> bool:
        return bool(self.num)

    def is_polynomial(self) -> bool:
        return not self.den

    def is_constant(self) -> bool:
        return not self.den and P.is_const(self.num)

    def constant_value(self) -> Fraction:
        if not self.is_constant():
            raise NonPolynomialError(f"not a constant: {self}")
        c = self.num.get((), P.ZERO)
        return Fraction(int(c.numerator), int(c.denominator))

    def atom_ids(self) -> set:
        s = P.atoms(self.num)
        for f, _ in self.den:
            s |= f.atoms
        return s

    def free_symbols(self) -> set:
        return {sym_of(i) for i in self.atom_ids()}

    def numerator(self) -> "Expr":
        return Expr(self.num)

    def denominator(self) -> "Expr":
        return Expr(_den_product(self.den))

    def den_factors(self):
        return [(Expr(f.poly), e) for f, e in self.den]

    # arithmetic ---------------------------------------------------------
    def __eq__(self, other):
        if not isinstance(other, Expr):
            try:
                other = Expr.coerce(other)
            except Exception:
                return NotImplemented
        return self.den == other.den and self.num == other.num

    def __hash__(self):
        if self._h is None:
            self._h = hash((frozenset(self.num.items()), tuple((id(f), e) for f, e in self.den)))
        return self._h

    def __neg__(self):
        return Expr(P.neg(self.num), self.den)

    def __add__(self, other):
        other = Expr.coerce(other)
        if not other.num:
            return self
        if not self.num:
            return other
        if not self.den and not other.den:
            return Expr(P.add(self.num, other.num))
        if self.den == other.den:
            return Expr.make(P.add(self.num, other.num), dict(self.den))
        da, db = dict(self.den), dict(other.den)
        lcm = {f: max(da.get(f, 0), db.get(f, 0)) for f in set(da) | set(db)}
        ma = P.const(1)
        mb = P.const(1)
        for f, e in lcm.items():
            if e - da.get(f, 0):
                ma = P.mul(ma, P.power(f.poly, e - da.get(f, 0)))
            if e - db.get(f, 0):
                mb = P.mul(mb, P.power(f.poly, e - db.get(f, 0)))
        return Expr.make(P.add(P.mul(self.num, ma), P.mul(other.num, mb)), lcm)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-Expr.coerce(other))

    def __rsub__(self, other):
        return Expr.coerce(other) + (-self)

    def __mul__(self, other):
        other = Expr.coerce(other)
        if not self.num or not other.num:
            return Expr()
        num = P.mul(self.num, other.num)
        if not self.den and not other.den:
            return Expr(num)
        d = dict(self.den)
        for f, e in other.den:
            d[f] = d.get(f, 0) + e
        return Expr.make(num, d)

    __rmul__ = __mul__

    def inverse(self) -> "Expr":
        if not self.num:
            raise ZeroDenominatorError("division by zero")
        unit, exp_mono, facs = factor_poly(self.num)
        num = _den_product(self.den)
        num = P.scale(num, 1 / unit)
        if exp_mono:
            num = P.mul_term(num, tuple((i, -e) for i, e in exp_mono), P.ONE)
        return Expr(num, tuple(facs))

    def __truediv__(self, other):
        other = Expr.coerce(other)
        if not other.num:
            raise ZeroDenominatorError("division by zero")
        if other.is_constant():
            return Expr(P.scale(self.num, 1 / other.num[()]), self.den)
        return self * other.inverse()

    def __rtruediv__(self, other):
        return Expr.coerce(other) * self.inverse()

    def __pow__(self, n: int):
        if not isinstance(n, int):
            raise TypeError("only integer powers are supported")
        if n < 0:
            return self.inverse() ** (-n)
        if n == 0:
            return Expr.const(1)
        return Expr(P.power(self.num, n), tuple((f, e * n) for f, e in self.den))

    # derivations ----------------------------------------------------------
    def derive_poly(self, dfun) -> "Expr":
        """Derivation sending atom id ``i`` to the polynomial ``dfun(i)`` (or None)."""
        dn = P.derive(self.num, dfun)
        if not self.den:
            return Expr(dn)
        moving = []
        for f, e in self.den:
            df = P.derive(f.poly, dfun)
            if df:
                moving.append((f, e, df))
        if not moving:
            return Expr.make(dn, dict(self.den))
        prod_all = P.const(1)
        for f, _, _ in moving:
            prod_all = P.mul(prod_all, f.poly)
        num = P.mul(dn, prod_all)
        for k, (f, e, df) in enumerate(moving):
            others = P.const(1)
            for j, (g, _, _) in enumerate(moving):
                if j != k:
                    others = P.mul(others, g.poly)
            P.add_into(num, P.mul(P.mul(self.num, df), others), -mpq(e))
        den = dict(self.den)
        for f, _, _ in moving:
            den[f] += 1
        return Expr.make(num, den)

    def derive_expr(self, vfun) -> "Expr":
        """Derivation sending atom id ``i`` to the expression ``vfun(i)`` (or None)."""
        def apply_poly(p):
            parts: dict = {}
            for m, c in p.items():
                for k, e in m:
                    rest = P.mono_div(m, ((k, 1),)) if type(e) is int else P.mono_mul(m, ((k, -1),))
                    d = parts.setdefault(k, {})
                    v = d.get(rest, P.ZERO) + c * e
                    if v:
                        d[rest] = v
                    else:
                        d.pop(rest, None)
            total = Expr()
            for k in sorted(parts):
                v = vfun(k)
                if v is None or v.is_zero() or not parts[k]:
                    continue
                part = Expr(parts[k])
                total = total + part * v
            return total

        xn = apply_poly(self.num)
        if not self.den:
            return xn
        acc = Expr()
        for f, e in self.den:
            xf = apply_poly(f.poly)
            if xf:
                acc = acc + Expr.const(e) * xf / Expr(f.poly)
        return xn / Expr(_den_product(self.den)) - self * acc

    # substitution -----------------------------------------------------------
    def substitute(self, rules: dict) -> "Expr":
        """Simultaneous substitution; ``rules`` maps atom id to Expr."""
        if not rules:
            return self
        ids = self.atom_ids()
        active = {i: v for i, v in rules.items() if i in ids}
        exp_params = {}
        for i in ids:
            s = sym_of(i)
            if s.kind is Kind.EXP:
                pid = Symbol(s.base, Kind.PARAMETER).sid
                if pid in rules:
                    exp_params[i] = rules[pid]
        if not active and not exp_params:
            return self
        num = _subst_poly(self.num, active, exp_params)
        if not self.den:
            return num
        d = Expr.const(1)
        for f, e in self.den:
            fe = _subst_poly(f.poly, active, exp_params) if f.atoms & (set(active) | set(exp_params)) else Expr(f.poly)
            if fe.is_zero():
                raise ZeroDenominatorError(f"denominator {_poly_str(f.poly)} vanishes under substitution")
            d = d * fe ** e
        return num / d

    # coefficients -------------------------------------------------------------
    def coefficients(self, ids) -> dict:
        """``{monomial over ids: Expr}`` for the numerator; denominator must avoid ``ids``."""
        for f, _ in self.den:
            if f.atoms & set(ids):
                raise NonPolynomialError("split variable occurs in a denominator")
        return {m: Expr(c) for m, c in P.coefficients_by_atoms(self.num, set(ids)).items()}

    def degree(self, s: Symbol) -> int:
        return P.degree_in(self.num, s.sid)

    # evaluation ---------------------------------------------------------------
    def evaluate(self, values: dict):
        """Evaluate at ``values`` (maps Symbol or symbol id to a number)."""
        vals = {}
        for k, v in values.items():
            vals[k.sid if isinstance(k, Symbol) else k] = v
        missing = [sym_of(i).name for i in self.atom_ids() if i not in vals]
        if missing:
            raise KeyError(f"no value for {', '.join(sorted(missing))}")
        exact = all(isinstance(v, (int, Fraction)) for v in vals.values())
        if exact:
            vals = {k: mpq(Fraction(v).numerator, Fraction(v).denominator) for k, v in vals.items()}
        n = P.evaluate(self.num, vals)
        d = P.evaluate(_den_product(self.den), vals) if self.den else 1
        if d == 0:
            raise ZeroDenominatorError("denominator vanishes at the evaluation point")
        r = n / d
        if exact:
            r = mpq(r)
            return Fraction(int(r.numerator), int(r.denominator))
        return float(r)

    # printing -----------------------------------------------------------------
    def __str__(self):
        return to_string(self)

    def __repr__(self):
        return f"Expr({to_string(self)!r})"


def _subst_poly(p, rules: dict, exp_params: dict) -> Expr:
    groups: dict = {}
    for m, c in p.items():
        hit = []
        keep = []
        for i, e in m:
            if i in rules or i in exp_params:
                hit.append((i, e))
            else:
                keep.append((i, e))
        g = groups.setdefault(tuple(hit), {})
        g[tuple(keep)] = c
    pow_cache: dict = {}

    def pw(i, e):
        k = (i, e)
        v = pow_cache.get(k)
        if v is None:
            if i in rules:
                v = rules[i] ** e
            else:
                v = _exp_substitute(i, e, exp_params[i])
            pow_cache[k] = v
        return v

    polys = {}
    rational = Expr()
    for hit, rest in groups.items():
        factor = Expr.const(1)
        for i, e in hit:
            factor = factor * pw(i, e)
        if not factor.den:
            prod = P.mul(factor.num, rest)
            P.add_into(polys, prod)
        else:
            rational = rational + factor * Expr(rest)
    return Expr(polys) + rational if rational else Expr(polys)


def _exp_substitute(i, e, value: Expr) -> Expr:
    """exp(param)^e with param replaced by a linear combination of parameters."""
    if value.den:
        raise NonPolynomialError("exponential argument must be linear in parameters")
    out = Expr.const(1)
    for m, c in value.num.items():
        if len(m) != 1 or m[0][1] != 1 or sym_of(m[0][0]).kind is not Kind.PARAMETER:
            if not m:
                raise NonPolynomialError("exponential of a nonzero constant is not rational")
            raise NonPolynomialError("exponential argument must be linear in parameters")
        out = out * Expr.exp(sym_of(m[0][0]), c * e)
    return out


# ---------------------------------------------------------------------------
# printing

def _coef_str(c) -> str:
    n, d = int(c.numerator), int(c.denominator)
    return str(n) if d == 1 else f"{n}/{d}"


def _atom_str(i: int, e) -> str:
    s = sym_of(i)
    if s.kind is Kind.EXP:
        if e == 1:
            return f"exp({s.base})"
        if e == -1:
            return f"exp(-{s.base})"
        return f"exp({_coef_str(mpq(e))}*{s.base})"
    if e == 1:
        return s.name
    return f"{s.name}^{e}"


def _poly_str(p) -> str:
    if not p:
        return "0"
    parts = []
    for m in sorted(p, key=term_key):
        c = p[m]
        atoms = [_atom_str(i, e) for i, e in sorted(m, key=lambda ie: key_of(ie[0]))]
        neg = c < 0
        a = -c if neg else c
        if not atoms:
            body = _coef_str(a)
        elif a == 1:
            body = "*".join(atoms)
        else:
            body = _coef_str(a) + "*" + "*".join(atoms)
        parts.append((neg, body))
    out = ("-" if parts[0][0] else "") + parts[0][1]
    for neg, body in parts[1:]:
        out += (" - " if neg else " + ") + body
    return out


def to_string(e: Expr) -> str:
    ns = _poly_str(e.num)
    if not e.den:
        return ns
    dens = []
    for f, k in e.den:
        fs = _poly_str(f.poly)
        if len(f.poly) > 1:
            fs = f"({fs})"
        elif any(x != 1 for _, x in next(iter(f.poly))):
            fs = f"({fs})"
        dens.append(fs if k == 1 else f"{fs}^{k}")
    if len(e.num) > 1:
        ns = f"({ns})"
    dstr = dens[0] if len(dens) == 1 else "(" + "*".join(dens) + ")"
    return f"{ns}/{dstr}"


# ---------------------------------------------------------------------------
# module-level operations

def partial_derivative(e: Expr, s: Symbol) -> Expr:
    """Partial derivative with respect to ``s``.

    Unknown components depending on ``s`` gain an index; opaque calls of ``s``
    advance their order; ``exp(s)`` reproduces itself.
    """
    from .symbols import opaque, unknown

    target = s.sid

    def dfun(i):
        if i == target:
            return P.const(1)
        a = sym_of(i)
        if a.kind is Kind.UNKNOWN and s.name in a.args and s.kind is not Kind.UNKNOWN:
            idx = tuple(sorted(a.index + (s.name,), key=a.args.index))
            return P.atom(unknown(a.base, a.args, idx).sid)
        if a.kind is Kind.OPAQUE and a.args[0] == s.name:
            return P.atom(opaque(a.base, a.args[0], a.order + 1).sid)
        if a.kind is Kind.EXP and s.kind is Kind.PARAMETER and a.base == s.name:
            return P.atom(i)
        return None

    return e.derive_poly(dfun)


def substitute(e: Expr, rules: dict) -> Expr:
    """Simultaneous substitution; keys are Symbols (or ids), values anything coercible."""
    r = {}
    for k, v in rules.items():
        r[k.sid if isinstance(k, Symbol) else k] = Expr.coerce(v)
    return e.substitute(r)


def collect_coefficients(e: Expr, split_vars) -> dict:
    """Coefficients of the numerator of ``e`` as a polynomial in ``split_vars``.

    Keys are tuples of ``(Symbol, exponent)`` in canonical order.
    """
    ids = {s.sid for s in split_vars}
    out = {}
    for m, c in e.coefficients(ids).items():
        key = tuple(sorted(((sym_of(i), k) for i, k in m), key=lambda se: se[0].sort_key))
        out[key] = c
    return out


def monomial_expr(key) -> Expr:
    r = Expr.const(1)
    for s, k in key:
        r = r * Expr.sym(s) ** k
    return r
