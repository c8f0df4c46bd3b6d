"""Reduction and exact solution of determining systems."""

from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction

from . import poly as P
from . import symbols as S
from .determining import DeterminingSystem, normalize_equation
from .errors import ContradictionError, InputError
from .expr import Expr, partial_derivative
from .linalg import Echelon, solve
from .parser import parse_expression
from .prolong import GeneratorCandidate


# ---------------------------------------------------------------------------
# trivial reduction

def _killed(s: S.Symbol, kills: dict) -> bool:
    pats = kills.get(s.base)
    if not pats:
        return False
    have = Counter(s.index)
    return any(not (pat - have) for pat in pats)


def _drop_killed(e: Expr, kills: dict) -> Expr:
    dead = {i for i in e.atom_ids()
            if S.sym_of(i).kind is S.Kind.UNKNOWN and _killed(S.sym_of(i), kills)}
    if not dead:
        return e
    num = {m: c for m, c in e.num.items() if not any(i in dead for i, _ in m)}
    return Expr(num)


def _unknowns_of(e: Expr) -> set:
    return {i for i in e.atom_ids() if S.sym_of(i).kind is S.Kind.UNKNOWN}


def trivial_reduce(ds: DeterminingSystem) -> DeterminingSystem:
    """Propagate single-unknown equations and drop duplicates.

    An equation involving one unknown derivative forces it to vanish, which
    in turn kills every higher derivative containing it. First-order facts
    remove an argument from the component. A nonzero equation free of
    unknowns is a contradiction.
    """
    kills: dict = {}
    facts: list = []
    work = list(zip(ds.equations, ds.provenance))
    while True:
        changed = False
        rest = []
        seen = set()
        for e, tag in work:
            e = _drop_killed(e, kills)
            if e.is_zero():
                continue
            unk = _unknowns_of(e)
            if not unk:
                raise ContradictionError(f"inconsistent determining equation ({tag}): {e} = 0")
            if len(unk) == 1:
                s = S.sym_of(next(iter(unk)))
                pat = Counter(s.index)
                kills.setdefault(s.base, []).append(pat)
                facts.append((Expr.sym(s), tag))
                changed = True
                continue
            n = normalize_equation(e)
            if n in seen:
                continue
            seen.add(n)
            rest.append((n, tag))
        work = rest
        if not changed:
            break
    # keep only minimal facts
    minimal = []
    fseen = set()
    for f, tag in facts:
        s = S.sym_of(next(iter(f.atom_ids())))
        others = [p for p in kills[s.base] if p != Counter(s.index)]
        if any(not (p - Counter(s.index)) for p in others):
            continue
        if f in fseen:
            continue
        fseen.add(f)
        minimal.append((f, tag))
    args = {}
    for comp, a in ds.args.items():
        pats = kills.get(comp, [])
        if any(not p for p in pats):
            args[comp] = None
            continue
        drop = {next(iter(p)) for p in pats if sum(p.values()) == 1}
        args[comp] = tuple(v for v in a if v not in drop)
    eqs = [e for e, _ in minimal] + [e for e, _ in work]
    tags = [t for _, t in minimal] + [t for _, t in work]
    info = dict(ds.informational)
    info["reduced_equations"] = len(eqs)
    return DeterminingSystem(ds.problem, eqs, tags, args, ds.split_vars, info)


# ---------------------------------------------------------------------------
# ansatz

@dataclass
class ComponentAnsatz:
    allowed: tuple | None = None
    degree: int | None = None
    denominator: Expr | None = None


@dataclass
class AnsatzSpec:
    degree: int = 3
    components: dict = field(default_factory=dict)

    @classmethod
    def from_problem(cls, p, degree: int | None = None, denominators: dict | None = None,
                     respect_degrees: bool = True) -> "AnsatzSpec":
        spec = cls(degree if degree is not None else p.ansatz_degree)
        for comp in p.components:
            d = p.declarations.get(comp)
            ca = ComponentAnsatz()
            if d is not None:
                ca.allowed = d.allowed
                if d.denominator:
                    ca.denominator = parse_expression(d.denominator, p.table)
                if respect_degrees:
                    ca.degree = d.degree
            spec.components[comp] = ca
        for comp, text in (denominators or {}).items():
            if comp not in p.components:
                raise InputError(f"unknown component '{comp}' in denominator override")
            spec.components.setdefault(comp, ComponentAnsatz()).denominator = parse_expression(text, p.table)
        return spec


def graded_monomials(names: list, bound: int) -> list:
    """Exponent tuples of total degree <= bound, by degree then lex (first name highest)."""
    out = []
    n = len(names)
    for d in range(bound + 1):
        level = []
        for combo in itertools.combinations_with_replacement(range(n), d):
            e = [0] * n
            for k in combo:
                e[k] += 1
            level.append(tuple(e))
        level.sort(reverse=True)
        out.extend(level)
    return out


@dataclass
class GeneratorBasis:
    problem: object
    members: list
    names: list
    columns: list = field(default_factory=list)
    informational: dict = field(default_factory=dict)

    @property
    def dimension(self) -> int:
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def __len__(self):
        return len(self.members)

    def __getitem__(self, k):
        return self.members[k]


def _mono_expr(names, exps) -> Expr:
    m = tuple(sorted((S.sym_of(i).sid, e) for i, e in zip(names, exps) if e))
    return Expr({m: P.ONE})


def ansatz_solve(ds: DeterminingSystem, spec: AnsatzSpec | None = None) -> GeneratorBasis:
    """Solve the linear determining system inside a finite polynomial or rational ansatz."""
    p = ds.problem
    spec = spec or AnsatzSpec.from_problem(p)
    table = p.table
    columns = []          # (component, exponent dict)
    comp_expr = {}
    coef_col = {}
    col_poly = []         # per column: (component, Expr monomial / denominator)
    for comp in p.components:
        ca = spec.components.get(comp, ComponentAnsatz())
        args = ds.args.get(comp, tuple(p.coordinates))
        if args is None:
            comp_expr[comp] = Expr()
            continue
        allowed = ca.allowed if ca.allowed is not None else tuple(p.coordinates)
        names = [v for v in p.coordinates if v in args and v in allowed]
        den = ca.denominator if ca.denominator is not None else Expr.const(1)
        if den.is_zero():
            raise InputError(f"zero denominator for {comp}")
        den_names = {s.name for s in den.free_symbols()}
        if not den_names <= set(names):
            raise InputError(f"denominator of {comp} uses variables outside its arguments")
        deg = ca.degree if ca.degree is not None else spec.degree
        bound = deg + P.total_degree(den.num)
        syms = [table.symbol(v).sid for v in names]
        total = Expr()
        for exps in graded_monomials(names, bound):
            c = S.coefficient(len(columns))
            coef_col[c.sid] = len(columns)
            m = _mono_expr(syms, exps)
            columns.append((comp, dict((v, e) for v, e in zip(names, exps) if e)))
            mono = m / den
            col_poly.append((comp, mono))
            total = total + Expr.sym(c) * m
        comp_expr[comp] = total / den

    deriv_cache: dict = {}

    def value(s: S.Symbol) -> Expr:
        key = (s.base, s.index)
        v = deriv_cache.get(key)
        if v is None:
            if s.index:
                prev = deriv_cache.get((s.base, s.index[:-1]))
                if prev is None:
                    prev = value(S.unknown(s.base, s.args, s.index[:-1]))
                v = partial_derivative(prev, table.symbol(s.index[-1]))
            else:
                v = comp_expr[s.base]
            deriv_cache[key] = v
        return v

    ech = Echelon()
    nrows = 0
    for e in ds.equations:
        groups: dict = {}
        for m, c in e.num.items():
            u = [k for k, _ in m if S.sym_of(k).kind is S.Kind.UNKNOWN]
            if len(u) != 1:
                raise InputError("determining equation is not linear homogeneous in the unknowns")
            rest = tuple((k, x) for k, x in m if k != u[0])
            groups.setdefault(u[0], {})[rest] = c
        total = Expr()
        for uid in sorted(groups):
            v = value(S.sym_of(uid))
            if v:
                total = total + Expr(groups[uid]) * v
        rows: dict = {}
        for m, c in total.num.items():
            cs = [k for k, _ in m if k in coef_col]
            rest = tuple((k, x) for k, x in m if k not in coef_col)
            col = coef_col[cs[0]]
            r = rows.setdefault(rest, {})
            r[col] = r.get(col, 0) + Fraction(int(c.numerator), int(c.denominator))
        for r in rows.values():
            nrows += 1
            ech.add(r)
    null = ech.nullspace(len(columns))
    members = []
    for vec in null:
        comps = {c: Expr() for c in p.components}
        for col, val in sorted(vec.items()):
            comp, mono = col_poly[col]
            comps[comp] = comps[comp] + mono * Expr.const(val)
        members.append(GeneratorCandidate(p, comps))
    names = [f"X{k + 1}" for k in range(len(members))]
    for g, n in zip(members, names):
        g.name = n
    info = {"ansatz_columns": len(columns), "linear_rows": nrows, "rank": ech.rank}
    return GeneratorBasis(p, members, names, columns, info)


# ---------------------------------------------------------------------------
# membership

def _linear_rows(residuals: list, var_cols: dict):
    rows: dict = {}
    for n, e in enumerate(residuals):
        for m, c in e.num.items():
            ls = [k for k, _ in m if k in var_cols]
            rest = tuple((k, x) for k, x in m if k not in var_cols)
            r = rows.setdefault((n, rest), [{}, Fraction(0)])
            val = Fraction(int(c.numerator), int(c.denominator))
            if ls:
                col = var_cols[ls[0]]
                r[0][col] = r[0].get(col, 0) + val
            else:
                r[1] -= val
    return rows


def span_membership(g: GeneratorCandidate, basis) -> tuple:
    """Whether ``g`` is a constant-coefficient combination of ``basis``; returns (bool, coefficients)."""
    members = list(basis)
    lam = [S.coefficient(k, "l") for k in range(len(members))]
    var_cols = {s.sid: k for k, s in enumerate(lam)}
    res = []
    for comp in g.problem.components:
        e = g.components[comp]
        for s, b in zip(lam, members):
            if b.components[comp]:
                e = e - Expr.sym(s) * b.components[comp]
        if e:
            res.append(e.numerator())
    if not res:
        return True, [Fraction(0)] * len(members)
    rows = _linear_rows(res, var_cols)
    x = solve([r[0] for r in rows.values()], [r[1] for r in rows.values()], len(members))
    if x is None:
        return False, None
    return True, x


def dimension(ds: DeterminingSystem, degree: int) -> int:
    spec = AnsatzSpec.from_problem(ds.problem, degree, respect_degrees=False)
    return ansatz_solve(ds, spec).dimension
