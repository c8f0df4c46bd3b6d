"""Sparse multivariate polynomials with exact rational coefficients.

A polynomial is a ``dict`` mapping a monomial to a nonzero ``mpq``.
A monomial is a tuple of ``(symbol id, exponent)`` pairs sorted by id.
Exponents are positive ints, except for exponential atoms which carry
rational exponents of either sign. Polynomials are treated as immutable
once built.
"""

from __future__ import annotations

import heapq
from math import gcd

from gmpy2 import mpq

Mono = tuple
Poly = dict

ONE_MONO: Mono = ()
ZERO = mpq(0)
ONE = mpq(1)


def const(c) -> Poly:
    c = mpq(c)
    return {ONE_MONO: c} if c else {}


def atom(i: int) -> Poly:
    return {((i, 1),): ONE}


def mono_mul(a: Mono, b: Mono) -> Mono:
    if not a:
        return b
    if not b:
        return a
    d = dict(a)
    for k, e in b:
        e2 = d.get(k, 0) + e
        if e2:
            d[k] = e2
        else:
            del d[k]
    return tuple(sorted(d.items()))


def mono_div(a: Mono, b: Mono):
    """``a / b`` if every non-exponential exponent stays >= 0, else None."""
    if not b:
        return a
    d = dict(a)
    for k, e in b:
        e2 = d.get(k, 0) - e
        if e2 < 0 and type(e) is int:
            return None
        if e2:
            d[k] = e2
        else:
            del d[k]
    return tuple(sorted(d.items()))


def add(a: Poly, b: Poly) -> Poly:
    if len(a) < len(b):
        a, b = b, a
    r = dict(a)
    for m, c in b.items():
        v = r.get(m)
        if v is None:
            r[m] = c
        else:
            v = v + c
            if v:
                r[m] = v
            else:
                del r[m]
    return r


def add_into(r: Poly, b: Poly, scale=ONE) -> None:
    for m, c in b.items():
        v = r.get(m, ZERO) + c * scale
        if v:
            r[m] = v
        else:
            r.pop(m, None)


def neg(a: Poly) -> Poly:
    return {m: -c for m, c in a.items()}


def sub(a: Poly, b: Poly) -> Poly:
    r = dict(a)
    add_into(r, b, -ONE)
    return r


def scale(a: Poly, c) -> Poly:
    if not c:
        return {}
    return {m: v * c for m, v in a.items()}


def mul_term(a: Poly, m: Mono, c) -> Poly:
    return {mono_mul(k, m): v * c for k, v in a.items()}


def mul(a: Poly, b: Poly) -> Poly:
    if not a or not b:
        return {}
    if len(a) < len(b):
        a, b = b, a
    if len(b) == 1:
        (m, c), = b.items()
        if not m:
            return scale(a, c)
        return mul_term(a, m, c)
    r: Poly = {}
    for mb, cb in b.items():
        for ma, ca in a.items():
            m = mono_mul(ma, mb)
            v = r.get(m, ZERO) + ca * cb
            if v:
                r[m] = v
            else:
                r.pop(m, None)
    return r


def power(a: Poly, n: int) -> Poly:
    if n < 0:
        raise ValueError("negative power of a polynomial")
    r = const(1)
    base = a
    while n:
        if n & 1:
            r = mul(r, base)
        n >>= 1
        if n:
            base = mul(base, base)
    return r


def atoms(a: Poly) -> set:
    return {i for m in a for i, _ in m}


def degree_in(a: Poly, i: int) -> int:
    d = 0
    for m in a:
        for k, e in m:
            if k == i and e > d:
                d = e
    return d


def total_degree(a: Poly, ids=None) -> int:
    """Total degree over ``ids`` (all non-exponential atoms when None)."""
    best = 0
    for m in a:
        s = 0
        for k, e in m:
            if (ids is None and type(e) is int) or (ids is not None and k in ids):
                s += e
        best = max(best, s)
    return best


def is_const(a: Poly) -> bool:
    return not a or (len(a) == 1 and ONE_MONO in a)


def content(a: Poly) -> mpq:
    """Positive rational content: gcd of numerators over lcm of denominators."""
    g = 0
    l = 1
    for c in a.values():
        g = gcd(g, int(c.numerator))
        d = int(c.denominator)
        l = l * d // gcd(l, d)
    return mpq(g, l) if g else ONE


def primitive(a: Poly) -> Poly:
    c = content(a)
    if c == 1:
        return a
    return {m: v / c for m, v in a.items()}


def monomial_content(a: Poly) -> Mono:
    """Largest monomial dividing every term (exponential atoms excluded)."""
    it = iter(a)
    first = next(it, None)
    if first is None:
        return ONE_MONO
    g = {k: e for k, e in first if type(e) is int}
    for m in it:
        if not g:
            break
        md = dict(m)
        for k in list(g):
            e = md.get(k, 0)
            if type(e) is not int or e <= 0:
                del g[k]
            elif e < g[k]:
                g[k] = e
    return tuple(sorted(g.items()))


def divexact(a: Poly, f: Poly):
    """Return ``a / f`` when ``f`` divides ``a`` exactly, else None.

    Multivariate division under lex order on the atoms involved. A leading
    term that is not divisible by the leading term of ``f`` proves that the
    division is inexact, so the routine stops early.
    """
    if not f:
        raise ZeroDivisionError("division by zero polynomial")
    if not a:
        return {}
    ids = sorted(atoms(a) | atoms(f))
    pos = {i: k for k, i in enumerate(ids)}
    n = len(ids)

    def key(m):
        v = [0] * n
        for i, e in m:
            v[pos[i]] = -e
        return tuple(v)

    # exponent window of an exact quotient; exp atoms carry signed rational
    # exponents, so this bound is what makes inexact division terminate
    def window(p):
        lo = [0] * n
        hi = [0] * n
        first = True
        for m in p:
            v = [0] * n
            for i, e in m:
                v[pos[i]] = e
            if first:
                lo, hi, first = list(v), list(v), False
            else:
                lo = [min(x, y) for x, y in zip(lo, v)]
                hi = [max(x, y) for x, y in zip(hi, v)]
        return lo, hi

    lo_a, hi_a = window(a)
    lo_f, hi_f = window(f)
    q_lo = [x - y for x, y in zip(lo_a, lo_f)]
    q_hi = [x - y for x, y in zip(hi_a, hi_f)]
    if any(x > y for x, y in zip(q_lo, q_hi)):
        return None

    lt_f = min(f, key=key)
    lc_f = f[lt_f]
    r = dict(a)
    heap = [(key(m), m) for m in r]
    heapq.heapify(heap)
    q: Poly = {}
    while heap:
        _, m = heapq.heappop(heap)
        c = r.get(m)
        if c is None:
            continue
        qm = mono_div(m, lt_f)
        if qm is None:
            return None
        for i, e in qm:
            k = pos[i]
            if not q_lo[k] <= e <= q_hi[k]:
                return None
        if len(qm) < n and any(q_lo[k] > 0 or q_hi[k] < 0 for k in range(n)
                               if ids[k] not in dict(qm)):
            return None
        qc = c / lc_f
        q[qm] = q.get(qm, ZERO) + qc
        for fm, fc in f.items():
            tm = mono_mul(qm, fm)
            old = r.get(tm)
            nv = (ZERO if old is None else old) - qc * fc
            if nv:
                if old is None:
                    heapq.heappush(heap, (key(tm), tm))
                r[tm] = nv
            elif old is not None:
                del r[tm]
    return {m: c for m, c in q.items() if c}


def derive(a: Poly, dfun) -> Poly:
    """Apply the derivation that sends atom ``i`` to the polynomial ``dfun(i)``.

    ``dfun`` returns None for atoms with zero derivative.
    """
    cache: dict = {}
    r: Poly = {}
    for m, c in a.items():
        for k, e in m:
            d = cache.get(k, 0)
            if d == 0:
                d = dfun(k)
                cache[k] = d
            if not d:
                continue
            rest = mono_div(m, ((k, 1),)) if type(e) is int else mono_mul(m, ((k, -1),))
            cc = c * e
            for dm, dc in d.items():
                t = mono_mul(rest, dm)
                v = r.get(t, ZERO) + cc * dc
                if v:
                    r[t] = v
                else:
                    r.pop(t, None)
    return r


def coefficients_by_atoms(a: Poly, ids) -> dict:
    """Split ``a`` into ``{monomial in ids: coefficient polynomial}``."""
    out: dict = {}
    for m, c in a.items():
        inner = []
        outer = []
        for k, e in m:
            (inner if k in ids else outer).append((k, e))
        key = tuple(inner)
        d = out.get(key)
        if d is None:
            d = out[key] = {}
        d[tuple(outer)] = c
    return out


def evaluate(a: Poly, values: dict):
    """Evaluate with ``values`` mapping atom id to a number."""
    total = 0
    for m, c in a.items():
        t = c
        for k, e in m:
            t = t * values[k] ** (e if type(e) is int else float(e))
        total = total + t
    return total
