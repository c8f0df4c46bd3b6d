"""Families of differential equations in solved form, and their jet-space manifold."""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field

from . import symbols as S
from .errors import ConsequenceBoundError, ParseError, ProblemError
from .expr import Expr
from .parser import SymbolTable, parse_expression


@dataclass(frozen=True)
class Equation:
    lead: S.Symbol
    rhs: Expr
    text: str = ""

    @property
    def residual(self) -> Expr:
        return Expr.sym(self.lead) - self.rhs


@dataclass(frozen=True)
class DependencyDeclaration:
    component: str
    allowed: tuple
    denominator: str | None = None
    degree: int | None = None


def component_name(coord: str, table: SymbolTable) -> str:
    if coord in table.independents:
        return f"xi_{coord}"
    if coord in table.dependents:
        return f"eta_{coord}"
    return f"theta_{coord}"


@dataclass
class Problem:
    table: SymbolTable
    equations: list
    declarations: dict = field(default_factory=dict)
    ansatz_degree: int = 3
    restrictions: list = field(default_factory=list)
    side_relations: list = field(default_factory=list)   # (atom id, power, Expr)
    max_consequence_order: int | None = None
    source: str = ""
    name: str = ""

    def __post_init__(self):
        self._solved: dict = {}
        self.integrability: list = []

    # structure -----------------------------------------------------------
    @property
    def independents(self) -> list:
        return self.table.independents

    @property
    def dependents(self) -> list:
        return self.table.dependents

    @property
    def arbitrary(self) -> dict:
        return self.table.arbitrary

    @property
    def coordinates(self) -> list:
        return self.table.coordinates

    @property
    def components(self) -> list:
        return [component_name(c, self.table) for c in self.coordinates]

    def coordinate_of(self, comp: str) -> str:
        for c in self.coordinates:
            if component_name(c, self.table) == comp:
                return c
        raise KeyError(comp)

    def allowed(self, comp: str) -> tuple:
        d = self.declarations.get(comp)
        return tuple(d.allowed) if d else tuple(self.coordinates)

    @property
    def order(self) -> int:
        k = 0
        for eq in self.equations:
            k = max(k, len(eq.lead.index))
            for s in eq.rhs.free_symbols():
                if s.kind is S.Kind.JET:
                    k = max(k, len(s.index))
        return k

    @property
    def consequence_bound(self) -> int:
        if self.max_consequence_order is not None:
            return self.max_consequence_order
        return self.order + 2

    def is_constant_element(self, name: str) -> bool:
        cls = self.table.arbitrary.get(name)
        return cls is not None and cls[0] == "constant"

    def leads(self) -> list:
        return [eq.lead for eq in self.equations]

    # manifold -----------------------------------------------------------------
    def _principal(self, jet: S.Symbol):
        have = Counter(jet.index)
        for eq in self.equations:
            L = eq.lead
            if L.base == jet.base and not Counter(L.index) - have:
                return eq
        return None

    def solved_form(self, jet: S.Symbol):
        """Value of a principal jet on the manifold, or None for a parametric jet."""
        if jet in self._solved:
            return self._solved[jet]
        eq = self._principal(jet)
        if eq is None:
            self._solved[jet] = None
            return None
        extra = list((Counter(jet.index) - Counter(eq.lead.index)).elements())
        if not extra:
            val = self.reduce(eq.rhs)
        else:
            if len(extra) > self.consequence_bound:
                raise ConsequenceBoundError(
                    f"{jet.name} needs {len(extra)} differentiations of {eq.lead.name}; "
                    f"bound is {self.consequence_bound}")
            extra.sort(key=self.independents.index)
            v = extra[-1]
            rest = list(jet.index)
            rest.remove(v)
            parent = self.table.jet(jet.base, rest)
            from .prolong import total_derivative
            val = self.reduce(total_derivative(self, self.solved_form(parent), v))
        self._solved[jet] = val
        return val

    def reduce(self, e: Expr, static_constants: bool = False) -> Expr:
        """On-manifold form of ``e``; optionally drop jets of constant-class elements."""
        rules = {}
        for i in e.atom_ids():
            s = S.sym_of(i)
            if s.kind is S.Kind.JET:
                if static_constants and self.is_constant_element(s.base):
                    rules[i] = Expr()
                    continue
                v = self.solved_form(s)
                if v is not None:
                    rules[i] = v
        out = e.substitute(rules) if rules else e
        return apply_side_relations(self, out)


def apply_side_relations(p: Problem, e: Expr) -> Expr:
    if not p.side_relations:
        return e
    for _ in range(50):
        ids = e.atom_ids()
        changed = False
        for aid, power, value in p.side_relations:
            if aid not in ids:
                continue
            if power == 1:
                e = e.substitute({aid: value})
                changed = True
                continue
            new = _reduce_power(e, aid, power, value)
            if new is not None:
                e = new
                changed = True
        if not changed:
            return e
    raise ProblemError("side relations do not terminate")


def _reduce_power(e: Expr, aid: int, power: int, value: Expr):
    def split(p):
        hit = False
        out = Expr()
        keep = {}
        for m, c in p.items():
            d = dict(m)
            k = d.get(aid, 0)
            if k >= power:
                hit = True
                q, r = divmod(k, power)
                if r:
                    d[aid] = r
                else:
                    del d[aid]
                out = out + Expr({tuple(sorted(d.items())): c}) * value ** q
            else:
                keep[m] = c
        return hit, out + Expr(keep)

    hit, num = split(e.num)
    den_hit = False
    den = Expr.const(1)
    for f, k in e.den:
        h, fe = split(f.poly)
        den_hit |= h
        den = den * fe ** k
    if not hit and not den_hit:
        return None
    return num / den if e.den else num


def on_manifold(p: Problem, e: Expr) -> Expr:
    """Replace every principal jet (and its consequences) by its solved form."""
    return p.reduce(e)


def differential_consequence(p: Problem, lead: S.Symbol, index) -> Expr:
    """Solved form of the derivative of ``lead`` along ``index`` (reduced on the manifold)."""
    jet = p.table.jet(lead.base, tuple(lead.index) + tuple(index))
    v = p.solved_form(jet)
    if v is None:
        raise ProblemError(f"{lead.name} is not a lead of the problem")
    return v


# ---------------------------------------------------------------------------
# problem files

def _grab(text: str, key: str):
    """Extract ``key(...)`` with balanced parentheses; returns (inner, rest)."""
    m = re.search(rf"\b{key}\(", text)
    if not m:
        return None, text
    depth = 0
    for j in range(m.end() - 1, len(text)):
        if text[j] == "(":
            depth += 1
        elif text[j] == ")":
            depth -= 1
            if depth == 0:
                return text[m.end():j], text[:m.start()] + text[j + 1:]
    raise ParseError(f"unbalanced parentheses in {key}(...)")


def declare_problem(text: str, name: str = "") -> Problem:
    """Build a :class:`Problem` from the line-oriented problem-file format."""
    table = SymbolTable()
    raw_eqs = []
    solve_for = []
    decl_lines = []
    restrict_lines = []
    side_lines = []
    ansatz_degree = 3
    max_cons = None
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        head, _, rest = line.partition(" ")
        rest = rest.strip()
        where = f"line {lineno}"
        if head == "independent":
            _declare(table, rest.split(), table.independents, where)
        elif head == "dependent":
            _declare(table, rest.split(), table.dependents, where)
        elif head == "parameter":
            _declare(table, rest.split(), table.parameters, where)
        elif head == "arbitrary":
            inner, rem = _grab(rest, "function")
            words = rem.split()
            if inner is not None:
                cls = ("function", tuple(inner.split()))
            elif words and words[-1] == "constant":
                words = words[:-1]
                cls = ("constant", ())
            else:
                raise ParseError(f"{where}: arbitrary element needs 'constant' or 'function(...)'")
            for w in words:
                if w in table.names():
                    raise ParseError(f"{where}: '{w}' declared twice")
                table.arbitrary[w] = cls
        elif head == "opaque":
            words = rest.split()
            if len(words) not in (1, 2):
                raise ParseError(f"{where}: expected 'opaque NAME [ARG]'")
            table.opaque[words[0]] = words[1] if len(words) == 2 else None
        elif head == "equation":
            raw_eqs.append((rest, where))
        elif head == "solve_for":
            solve_for.append((rest, where))
        elif head == "component":
            decl_lines.append((rest, where))
        elif head == "restrict":
            restrict_lines.append((rest, where))
        elif head == "side_relation":
            side_lines.append((rest, where))
        elif head == "ansatz_degree":
            ansatz_degree = _int(rest, where)
        elif head == "max_consequence_order":
            max_cons = _int(rest, where)
        else:
            raise ParseError(f"{where}: unknown directive '{head}'")
    for c in table.arbitrary.values():
        for a in c[1]:
            if a not in table.independents and a not in table.dependents:
                raise ParseError(f"arbitrary element argument '{a}' is not declared")
    if not table.independents or not table.dependents:
        raise ProblemError("a problem needs independent and dependent variables")
    if not raw_eqs:
        raise ProblemError("a problem needs at least one equation")

    comp_table = table  # component names are not valid inside equations
    equations = []
    for k, (src, where) in enumerate(raw_eqs):
        lhs_s, eq, rhs_s = src.partition("=")
        if not eq:
            raise ParseError(f"{where}: equation needs '='")
        lhs = parse_expression(lhs_s, comp_table)
        rhs = parse_expression(rhs_s, comp_table)
        lead = None
        if k < len(solve_for):
            lead_e = parse_expression(solve_for[k][0], comp_table)
            lead = _single_jet(lead_e, solve_for[k][1])
        else:
            lead = _maybe_jet(lhs)
        if lead is None:
            raise ParseError(f"{where}: cannot identify the lead derivative; add solve_for")
        res = lhs - rhs
        if res.den and any(lead.sid in f.atoms for f, _ in res.den):
            raise ProblemError(f"{where}: lead occurs in a denominator")
        if res.degree(lead) != 1:
            raise ProblemError(f"{where}: equation is not linear in {lead.name}")
        coeff = res.coefficients({lead.sid})
        a = coeff.get(((lead.sid, 1),), Expr())
        b = coeff.get((), Expr())
        if res.den:
            a = a / res.denominator()
            b = b / res.denominator()
        if any(S.sym_of(i).kind is S.Kind.JET for i in a.atom_ids()):
            raise ProblemError(f"{where}: coefficient of {lead.name} involves derivatives")
        solved = -b / a
        equations.append(Equation(lead, solved, src.strip()))
    if len(solve_for) > len(raw_eqs):
        raise ParseError("more solve_for lines than equations")

    leads = [eq.lead for eq in equations]
    if len(set(leads)) != len(leads):
        raise ProblemError("duplicate lead derivatives")
    for eq in equations:
        for s in eq.rhs.free_symbols():
            if s.kind is S.Kind.JET:
                for L in leads:
                    if L.base == s.base and not Counter(L.index) - Counter(s.index):
                        raise ProblemError(
                            f"right-hand side of {eq.lead.name} contains the principal derivative {s.name}")
            if s.kind is S.Kind.UNKNOWN:
                raise ProblemError("unknown components cannot appear in equations")

    p = Problem(table=table, equations=equations, ansatz_degree=ansatz_degree,
                max_consequence_order=max_cons, source=text, name=name)
    comps = set(p.components)
    for rest, where in decl_lines:
        words = rest.split(None, 1)
        if not words:
            raise ParseError(f"{where}: component needs a name")
        cname = words[0]
        if cname not in comps:
            raise ParseError(f"{where}: unknown component '{cname}'")
        body = words[1] if len(words) > 1 else ""
        dep, body = _grab(body, "depends")
        den, body = _grab(body, "denominator")
        deg, body = _grab(body, "degree")
        if body.strip():
            raise ParseError(f"{where}: unexpected '{body.strip()}'")
        allowed = tuple(dep.split()) if dep is not None else tuple(p.coordinates)
        for a in allowed:
            if a not in p.coordinates:
                raise ParseError(f"{where}: '{a}' is not a coordinate")
        if den is not None:
            parse_expression(den, table)
        p.declarations[cname] = DependencyDeclaration(
            cname, tuple(a for a in p.coordinates if a in allowed), den,
            _int(deg, where) if deg is not None else None)
    for rest, where in side_lines:
        lhs_s, eq, rhs_s = rest.partition("=")
        if not eq:
            raise ParseError(f"{where}: side relation needs '='")
        lhs = parse_expression(lhs_s, table)
        if lhs.den or len(lhs.num) != 1:
            raise ParseError(f"{where}: side relation must rewrite a power of one atom")
        (m, c), = lhs.num.items()
        if len(m) != 1 or c != 1:
            raise ParseError(f"{where}: side relation must rewrite a power of one atom")
        p.side_relations.append((m[0][0], m[0][1], parse_expression(rhs_s, table)))
    ctab = table.copy()
    for c in p.components:
        ctab.components[c] = tuple(p.coordinates)
    for rest, where in restrict_lines:
        lhs_s, eq, rhs_s = rest.partition("=")
        e = parse_expression(lhs_s, ctab)
        if eq:
            e = e - parse_expression(rhs_s, ctab)
        for m in e.num:
            k = sum(x for i, x in m if S.sym_of(i).kind is S.Kind.UNKNOWN)
            if k != 1:
                raise ProblemError(f"{where}: restriction must be linear and homogeneous in the components")
        p.restrictions.append(e)
    p.integrability = integrability_residuals(p)
    return p


def _declare(table, names, target, where):
    for n in names:
        if n in table.names():
            raise ParseError(f"{where}: '{n}' declared twice")
        if not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", n) or n in ("D", "exp"):
            raise ParseError(f"{where}: invalid name '{n}'")
        target.append(n)


def _int(s, where):
    try:
        return int(s)
    except (TypeError, ValueError):
        raise ParseError(f"{where}: expected an integer, got {s!r}") from None


def _maybe_jet(e: Expr):
    if e.den or len(e.num) != 1:
        return None
    (m, c), = e.num.items()
    if c != 1 or len(m) != 1 or m[0][1] != 1:
        return None
    s = S.sym_of(m[0][0])
    return s if s.kind is S.Kind.JET else None


def _single_jet(e: Expr, where):
    s = _maybe_jet(e)
    if s is None:
        raise ParseError(f"{where}: solve_for must name a single derivative")
    return s


def integrability_residuals(p: Problem) -> list:
    """Cross-derivative residuals for pairs of leads of the same dependent variable."""
    from .prolong import total_derivative

    out = []
    eqs = p.equations
    for i in range(len(eqs)):
        for j in range(i + 1, len(eqs)):
            a, b = eqs[i].lead, eqs[j].lead
            if a.base != b.base:
                continue
            ca, cb = Counter(a.index), Counter(b.index)
            lcm = ca | cb
            da = list((lcm - ca).elements())
            db = list((lcm - cb).elements())
            try:
                ea = eqs[i].rhs
                for v in da:
                    ea = p.reduce(total_derivative(p, ea, v))
                eb = eqs[j].rhs
                for v in db:
                    eb = p.reduce(total_derivative(p, eb, v))
            except ConsequenceBoundError:
                continue
            out.append((a.name, b.name, ea - eb))
    return out
