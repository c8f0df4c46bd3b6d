"""Verification of user-supplied generators and finite transformations."""

from __future__ import annotations

from dataclasses import dataclass, field

from . import symbols as S
from .determining import residual
from .errors import VerificationError
from .expr import Expr, to_string
from .problem import Problem
from .prolong import GeneratorCandidate, total_derivative


@dataclass
class CandidateResult:
    name: str
    status: str                       # "verified" | "refuted"
    residuals: list = field(default_factory=list)
    violations: list = field(default_factory=list)

    @property
    def verified(self) -> bool:
        return self.status == "verified"


@dataclass
class VerificationReport:
    results: list = field(default_factory=list)

    @property
    def all_verified(self) -> bool:
        return all(r.verified for r in self.results)

    def __getitem__(self, k):
        return self.results[k]


def dependency_violations(g: GeneratorCandidate) -> list:
    """Variables a component uses outside its declared argument set."""
    p = g.problem
    out = []
    coords = set(p.coordinates)
    for comp, e in g.components.items():
        allowed = set(p.allowed(comp))
        for s in e.free_symbols():
            if s.kind is S.Kind.OPAQUE:
                if s.args[0] not in allowed:
                    raise VerificationError(
                        f"{comp} uses {s.base}({s.args[0]}) but does not depend on {s.args[0]}")
            elif s.name in coords and s.name not in allowed:
                out.append(f"{comp} depends on {s.name}")
            elif s.kind in (S.Kind.JET, S.Kind.UNKNOWN):
                raise VerificationError(f"{comp} contains {s.name}; components must be point functions")
    return out


def verify_generator(p: Problem, g: GeneratorCandidate, name: str = "") -> CandidateResult:
    """Zero on-manifold residual (opaque calls independent) and respected dependencies."""
    if not g.is_concrete():
        raise VerificationError("candidate still contains unknown components")
    viol = dependency_violations(g)
    res = residual(p, g)
    nonzero = [f"{eq.lead.name}: {to_string(r)}" for eq, r in zip(p.equations, res) if r]
    ok = not nonzero and not viol
    return CandidateResult(name or g.name, "verified" if ok else "refuted", nonzero, viol)


def verify_all(p: Problem, gens: list) -> VerificationReport:
    return VerificationReport([verify_generator(p, g) for g in gens])


# ---------------------------------------------------------------------------
# constrained solve

def _solve_linear(eqs: list, unknowns: set) -> dict:
    """Gaussian elimination over rational functions.

    ``eqs`` is a list of ``{unknown id or None: Expr}`` (None holds the
    constant part). Returns values for the unknowns that are determined
    without reference to other unknowns.
    """
    rows = [dict(r) for r in eqs]
    sol: dict = {}
    while True:
        best = None
        for k, r in enumerate(rows):
            for u, c in r.items():
                if u is None or c.is_zero():
                    continue
                score = (0 if c.is_constant() else 1, len(c.num), len(r))
                if best is None or score < best[0]:
                    best = (score, k, u)
        if best is None:
            break
        _, k, u = best
        r = rows.pop(k)
        c = r.pop(u)
        expr = {v: -x / c for v, x in r.items()}
        for other in rows:
            a = other.pop(u, None)
            if a is None or a.is_zero():
                continue
            for v, x in expr.items():
                nv = other.get(v, Expr()) + a * x
                if nv:
                    other[v] = nv
                else:
                    other.pop(v, None)
        for v0, e0 in list(sol.items()):
            a = e0.pop(u, None)
            if a is None or a.is_zero():
                continue
            for v, x in expr.items():
                nv = e0.get(v, Expr()) + a * x
                if nv:
                    e0[v] = nv
                else:
                    e0.pop(v, None)
        sol[u] = expr
    for r in rows:
        if r.get(None) and not any(v is not None for v in r):
            raise VerificationError("constrained solve is inconsistent")
    return {u: e.get(None, Expr()) for u, e in sol.items() if all(v is None for v in e)}


def complete_generator(p: Problem, fixed: dict, unknown: list, max_rounds: int = 12) -> GeneratorCandidate:
    """Solve the invariance conditions for the components in ``unknown``.

    Components in ``fixed`` are explicit. Each round splits the conditions
    over jets and over coordinates none of the unknown components depends on,
    solves the purely algebraic equations, and substitutes the results.
    """
    known = {c: Expr.coerce(v) for c, v in fixed.items()}
    pending = [c for c in unknown if c not in known]
    for _ in range(max_rounds):
        if not pending:
            break
        args = {c: tuple(p.allowed(c)) for c in pending}
        comps = dict(known)
        for c in pending:
            comps[c] = Expr.sym(S.unknown(c, args[c]))
        cand = GeneratorCandidate(p, comps)
        used = set().union(*[set(a) for a in args.values()])
        eqs = []
        for r in residual(p, cand):
            split = {i for i in r.atom_ids()
                     if S.sym_of(i).kind is S.Kind.JET
                     or (S.sym_of(i).name in p.coordinates and S.sym_of(i).kind is not S.Kind.UNKNOWN
                         and S.sym_of(i).name not in used)}
            num = r.numerator()
            for coeff in num.coefficients(split).values():
                eqs.append(coeff)
        alg = []
        for e in eqs:
            unk = [i for i in e.atom_ids() if S.sym_of(i).kind is S.Kind.UNKNOWN]
            if not all(not S.sym_of(i).index for i in unk):
                continue
            row: dict = {}
            for m, c in e.num.items():
                u = [k for k, _ in m if k in unk]
                rest = tuple((k, x) for k, x in m if k not in unk)
                key = u[0] if u else None
                row.setdefault(key, {})[rest] = c
            alg.append({k: Expr(v) for k, v in row.items()})
        vals = _solve_linear(alg, set())
        progress = False
        for uid, v in vals.items():
            comp = S.sym_of(uid).base
            if comp in pending:
                known[comp] = v
                pending.remove(comp)
                progress = True
        if not progress:
            break
    if pending:
        raise VerificationError(f"constrained solve left {', '.join(pending)} undetermined")
    return GeneratorCandidate(p, known)


# ---------------------------------------------------------------------------
# finite transformations

def _invert(mat: list) -> list:
    n = len(mat)
    a = [list(row) + [Expr.const(1 if i == j else 0) for j in range(n)] for i, row in enumerate(mat)]
    for col in range(n):
        piv = next((r for r in range(col, n) if a[r][col]), None)
        if piv is None:
            raise VerificationError("transformation of the independent variables is not invertible")
        a[col], a[piv] = a[piv], a[col]
        inv = Expr.const(1) / a[col][col]
        a[col] = [x * inv for x in a[col]]
        for r in range(n):
            if r != col and a[r][col]:
                f = a[r][col]
                a[r] = [x - f * y for x, y in zip(a[r], a[col])]
    return [row[n:] for row in a]


def verify_affine_transformation(p: Problem, mapping: dict, name: str = "") -> CandidateResult:
    """Check that a change of variables maps the family into itself.

    ``mapping`` sends coordinate names to expressions in the old coordinates
    (missing entries are the identity). The maps for the independent and
    dependent variables must be affine in those variables, with coefficients
    free to involve constant arbitrary elements and symbolic parameters.
    Jets of constant-class arbitrary elements are taken to vanish.
    """
    for k in mapping:
        if k not in p.coordinates:
            raise VerificationError(f"'{k}' is not a coordinate of the problem")
    star = {c: Expr.coerce(mapping.get(c, Expr.sym(p.table.symbol(c)))) for c in p.coordinates}
    xu = [p.table.symbol(c).sid for c in p.independents + p.dependents]
    for c in p.independents + p.dependents:
        e = star[c]
        if e.den and any(f.atoms & set(xu) for f, _ in e.den):
            raise VerificationError(f"map for {c} is not affine")
        for m in e.num:
            if sum(k for i, k in m if i in xu) > 1:
                raise VerificationError(f"map for {c} is not affine")
    lin = [[_coeff(star[a], p.table.symbol(b).sid) for b in p.independents + p.dependents]
           for a in p.independents + p.dependents]
    _invert(lin)

    def D(e, v):
        return _static(p, total_derivative(p, e, v))

    n = len(p.independents)
    J = [[D(star[a], b) for b in p.independents] for a in p.independents]
    Jinv = _invert(J)
    memo: dict = {}

    def starred_jet(base: str, index: tuple) -> Expr:
        key = (base, index)
        if key in memo:
            return memo[key]
        if not index:
            v = star[base]
        else:
            prev, a = index[:-1], index[-1]
            f = starred_jet(base, prev)
            ai = p.independents.index(a)
            v = Expr()
            for b in range(n):
                if Jinv[b][ai]:
                    v = v + Jinv[b][ai] * D(f, p.independents[b])
        memo[key] = v
        return v

    residuals = []
    for eq in p.equations:
        rules = {}
        for i in eq.rhs.atom_ids():
            s = S.sym_of(i)
            if s.name in p.coordinates:
                rules[i] = star[s.name]
            elif s.kind is S.Kind.JET:
                rules[i] = starred_jet(s.base, s.index)
        rhs = eq.rhs.substitute(rules)
        lead = starred_jet(eq.lead.base, eq.lead.index)
        r = p.reduce(_static(p, lead - rhs), static_constants=True)
        if r:
            residuals.append(f"{eq.lead.name}: {to_string(r)}")
    return CandidateResult(name, "refuted" if residuals else "verified", residuals, [])


def _static(p: Problem, e: Expr) -> Expr:
    rules = {}
    for i in e.atom_ids():
        s = S.sym_of(i)
        if s.kind is S.Kind.JET and p.is_constant_element(s.base):
            rules[i] = Expr()
    return e.substitute(rules) if rules else e


def _coeff(e: Expr, sid: int) -> Expr:
    part = {}
    for m, c in e.num.items():
        d = dict(m)
        if d.get(sid) == 1:
            del d[sid]
            part[tuple(sorted(d.items()))] = c
    out = Expr(part)
    if e.den:
        out = out / e.denominator()
    return out
