"""Determining equations for equivalence generators."""

from __future__ import annotations

from dataclasses import dataclass, field

from . import symbols as S
from .errors import NonPolynomialError
from .expr import Expr, _normalize_sign, to_string
from .problem import Problem
from .prolong import GeneratorCandidate, apply_prolonged


@dataclass
class DeterminingSystem:
    problem: Problem
    equations: list                 # Expr, each linear in unknown-component symbols
    provenance: list                # one tag per equation
    args: dict                      # component -> tuple of argument names
    split_vars: tuple = ()
    informational: dict = field(default_factory=dict)

    @property
    def unknowns(self) -> tuple:
        return tuple(self.args)

    def __len__(self):
        return len(self.equations)


def normalize_equation(e: Expr) -> Expr:
    """Numerator made primitive with a positive leading coefficient."""
    if e.is_zero():
        return e
    num, _ = _normalize_sign(e.num)
    return Expr(num)


def _unknown_degree_ok(e: Expr) -> bool:
    for m in e.num:
        k = sum(x for i, x in m if S.sym_of(i).kind is S.Kind.UNKNOWN)
        if k > 1:
            return False
    return True


def residual(p: Problem, g: GeneratorCandidate) -> list:
    """Prolonged action of ``g`` on each equation, reduced on the manifold."""
    return [p.reduce(apply_prolonged(g, eq.residual)) for eq in p.equations]


def restriction_equations(p: Problem, g: GeneratorCandidate | None = None) -> list:
    """(equation, tag) pairs forcing each declared component to ignore excluded variables."""
    out = []
    for comp in p.components:
        decl = p.declarations.get(comp)
        if decl is None:
            continue
        e = g.components[comp] if g is not None else None
        if e is not None:
            syms = [S.sym_of(i) for i in e.atom_ids()]
            if len(syms) != 1 or syms[0].kind is not S.Kind.UNKNOWN:
                continue
            args = syms[0].args
        else:
            args = tuple(p.coordinates)
        for v in args:
            if v not in decl.allowed:
                out.append((Expr.sym(S.unknown(comp, args, (v,))), f"restriction:{comp}:{v}"))
    return out


def generate_determining(p: Problem, g: GeneratorCandidate | None = None) -> DeterminingSystem:
    """Split the on-manifold invariance conditions over the free jets."""
    if g is None:
        g = GeneratorCandidate.unknown(p)
    eqs = []
    tags = []
    seen = set()
    raw = 0
    n_split = 0
    split_names = set()
    for eq, r in zip(p.equations, residual(p, g)):
        jets = {i for i in r.atom_ids() if S.sym_of(i).kind is S.Kind.JET}
        for f, _ in r.den:
            if f.atoms & jets:
                raise NonPolynomialError(f"jet variable in a denominator of the condition for {eq.lead.name}")
        split_names |= {S.sym_of(i).name for i in jets}
        for mono, coeff in sorted(r.coefficients(jets).items(),
                                  key=lambda mc: [S.key_of(i) + (k,) for i, k in mc[0]]):
            if coeff.is_zero():
                continue
            raw += 1
            if not _unknown_degree_ok(coeff):
                raise NonPolynomialError("determining equation is not linear in the unknowns")
            n = normalize_equation(coeff)
            if n in seen:
                continue
            seen.add(n)
            eqs.append(n)
            n_split += 1
            label = "*".join(S.sym_of(i).name + (f"^{k}" if k != 1 else "") for i, k in mono) or "1"
            tags.append(f"split:{eq.lead.name}:{label}")
    restr = restriction_equations(p, g)
    for e, tag in restr:
        if e not in seen:
            seen.add(e)
            eqs.append(e)
            tags.append(tag)
    for e in p.restrictions:
        n = normalize_equation(e)
        if n.is_zero():
            continue
        eqs.append(n)
        tags.append("side-relation")
    args = {}
    for c in p.components:
        syms = [S.sym_of(i) for i in g.components[c].atom_ids()]
        if len(syms) == 1 and syms[0].kind is S.Kind.UNKNOWN and not syms[0].index:
            args[c] = syms[0].args
    info = {
        "split_coefficients": raw,
        "distinct_split_equations": n_split,
        "restriction_equations": len(restr),
        "split_variables": len(split_names),
    }
    return DeterminingSystem(p, eqs, tags, args, tuple(sorted(split_names)), info)


def system_text(ds: DeterminingSystem) -> list:
    return [to_string(e) for e in ds.equations]
