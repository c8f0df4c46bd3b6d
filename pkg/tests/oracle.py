"""Brute-force dimension oracle written directly in sympy.

Single scalar equation u_{lead} = rhs, every arbitrary element promoted to a
function of the independent variables. A polynomial ansatz of bounded degree
is substituted for every component, the invariance condition is expanded with
the textbook prolongation formula, principal derivatives are eliminated by
repeated substitution, and the dimension is read off a dense rank.
"""

import itertools

import sympy


def oracle_dimension(indeps, deps, arbitrary, lead, rhs_text, allowed, degree, max_order):
    X = sympy.symbols(indeps)
    values = list(deps) + list(arbitrary)
    jets = {}

    def jet(base, idx):
        idx = tuple(sorted(idx, key=indeps.index))
        if (base, idx) not in jets:
            name = base + ("_" + "".join(idx) if idx else "")
            jets[(base, idx)] = sympy.Symbol(name)
        return jets[(base, idx)]

    for b in values:
        for k in range(max_order + 1):
            for idx in itertools.combinations_with_replacement(indeps, k):
                jet(b, idx)
    coords = {**{v: s for v, s in zip(indeps, X)}, **{b: jet(b, ()) for b in values}}
    local = {**coords}
    for (b, idx), s in jets.items():
        if idx:
            local[f"D_{b}_{''.join(idx)}"] = s
    rhs = sympy.sympify(rhs_text, locals=local)

    def D(f, i):
        out = sympy.diff(f, coords[i])
        for (b, idx), s in list(jets.items()):
            if f.has(s):
                out += sympy.diff(f, s) * jet(b, idx + (i,))
        return sympy.expand(out)

    cols = []
    comp = {}
    for c, names in allowed.items():
        vs = [coords[n] for n in names]
        expr = 0
        for d in range(degree + 1):
            for mono in itertools.combinations_with_replacement(vs, d):
                a = sympy.Symbol(f"c{len(cols)}")
                cols.append(a)
                expr += a * sympy.Mul(*mono)
        comp[c] = expr
    dep = deps[0]
    xi = {i: comp[i] for i in indeps}

    cache = {(): comp[dep]}

    def eta(idx):
        if idx in cache:
            return cache[idx]
        prev, i = idx[:-1], idx[-1]
        v = D(eta(prev), i)
        for j in indeps:
            v -= D(xi[j], i) * jet(dep, tuple(sorted(prev + (j,), key=indeps.index)))
        cache[idx] = sympy.expand(v)
        return cache[idx]

    lead_sym = jet(dep, lead)
    condition = eta(lead)
    for (b, idx), s in list(jets.items()):
        if b == dep and idx and s in rhs.free_symbols:
            condition -= sympy.diff(rhs, s) * eta(idx)
    for b in values:
        s = jet(b, ())
        if s in rhs.free_symbols:
            condition -= sympy.diff(rhs, s) * comp[b]
    condition = sympy.expand(condition)

    # principal jets: lead plus any further derivatives of it
    def principal(idx):
        rest = list(idx)
        for v in lead:
            if v not in rest:
                return None
            rest.remove(v)
        return tuple(rest)

    for _ in range(6):
        subs = {}
        for (b, idx), s in list(jets.items()):
            if b != dep or not condition.has(s):
                continue
            extra = principal(idx)
            if extra is None:
                continue
            v = rhs
            for i in extra:
                v = D(v, i)
            subs[s] = v
        if not subs:
            break
        condition = sympy.expand(condition.subs(subs, simultaneous=True))
    split = [s for (b, idx), s in jets.items() if idx] + [coords[n] for n in indeps] + \
        [coords[b] for b in values]
    poly = sympy.Poly(condition, *split)
    rows = []
    for coeff in poly.coeffs():
        rows.append([coeff.coeff(a) for a in cols])
    rank = sympy.Matrix(rows).rank() if rows else 0
    return len(cols) - rank
