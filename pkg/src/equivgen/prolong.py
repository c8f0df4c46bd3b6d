"""Total derivatives, prolonged generators and brackets."""

from __future__ import annotations

from . import poly as P
from . import symbols as S
from .errors import VerificationError
from .expr import Expr, partial_derivative
from .problem import Problem


def _d_atom(p: Problem, var: str, i: int):
    """Total derivative along ``var`` of a single atom, as a polynomial (or None)."""
    cache = p.__dict__.setdefault("_dcache", {})
    key = (var, i)
    if key in cache:
        return cache[key]
    s = S.sym_of(i)
    t = p.table
    out = None
    if s.kind is S.Kind.INDEPENDENT:
        out = P.const(1) if s.name == var else None
    elif s.kind in (S.Kind.DEPENDENT, S.Kind.ARBITRARY):
        out = P.atom(t.jet(s.name, (var,)).sid)
    elif s.kind is S.Kind.JET:
        out = P.atom(t.jet(s.base, s.index + (var,)).sid)
    elif s.kind is S.Kind.UNKNOWN:
        acc: dict = {}
        for a in s.args:
            da = _d_coord(p, var, a)
            if da is None:
                continue
            idx = tuple(sorted(s.index + (a,), key=s.args.index))
            P.add_into(acc, P.mul(P.atom(S.unknown(s.base, s.args, idx).sid), da))
        out = acc or None
    elif s.kind is S.Kind.OPAQUE:
        da = _d_coord(p, var, s.args[0])
        if da is not None:
            out = P.mul(P.atom(S.opaque(s.base, s.args[0], s.order + 1).sid), da)
    cache[key] = out
    return out


def _d_coord(p: Problem, var: str, name: str):
    if name in p.independents:
        return P.const(1) if name == var else None
    return P.atom(p.table.jet(name, (var,)).sid)


def total_derivative(p: Problem, e: Expr, var: str) -> Expr:
    """Total derivative D_var in the jet space of ``p``."""
    if var not in p.independents:
        raise ValueError(f"'{var}' is not an independent variable")
    return e.derive_poly(lambda i: _d_atom(p, var, i))


class GeneratorCandidate:
    """A vector field on (x, u, K); components keyed by component name.

    Components may be unknown symbols (symbolic mode) or explicit
    expressions, possibly containing opaque functions (concrete mode).
    """

    def __init__(self, problem: Problem, components: dict | None = None, name: str = ""):
        self.problem = problem
        components = components or {}
        bad = set(components) - set(problem.components)
        if bad:
            raise VerificationError(f"unknown components: {', '.join(sorted(bad))}")
        self.components = {c: Expr.coerce(components.get(c, Expr())) for c in problem.components}
        self.name = name
        self._ext: dict = {}
        self._dxi: dict = {}

    @classmethod
    def unknown(cls, problem: Problem, args: dict | None = None) -> "GeneratorCandidate":
        """Symbolic candidate whose components depend on ``args[comp]`` (default: all coordinates)."""
        comps = {}
        for c in problem.components:
            a = tuple(args[c]) if args and c in args else tuple(problem.coordinates)
            comps[c] = Expr.sym(S.unknown(c, a))
        return cls(problem, comps, name="unknown")

    def of(self, coord: str) -> Expr:
        from .problem import component_name
        return self.components[component_name(coord, self.problem.table)]

    def is_concrete(self) -> bool:
        return not any(S.sym_of(i).kind is S.Kind.UNKNOWN
                       for e in self.components.values() for i in e.atom_ids())

    def is_zero(self) -> bool:
        return all(e.is_zero() for e in self.components.values())

    def scaled(self, c) -> "GeneratorCandidate":
        c = Expr.coerce(c)
        return GeneratorCandidate(self.problem, {k: v * c for k, v in self.components.items()}, self.name)

    def __add__(self, other):
        return GeneratorCandidate(self.problem, {k: v + other.components[k] for k, v in self.components.items()})

    def __sub__(self, other):
        return GeneratorCandidate(self.problem, {k: v - other.components[k] for k, v in self.components.items()})

    def __eq__(self, other):
        return isinstance(other, GeneratorCandidate) and self.components == other.components

    __hash__ = None

    def nonzero(self) -> dict:
        return {k: v for k, v in self.components.items() if not v.is_zero()}

    def __str__(self):
        parts = [f"{k}={v}" for k, v in self.components.items() if not v.is_zero()]
        return ", ".join(parts) or "0"


def _dxi(g: GeneratorCandidate, i: str, j: str) -> Expr:
    key = (i, j)
    v = g._dxi.get(key)
    if v is None:
        v = g._dxi[key] = total_derivative(g.problem, g.of(j), i)
    return v


def extended_infinitesimal(g: GeneratorCandidate, dep: str, index) -> Expr:
    """Coefficient of the prolonged generator on the jet ``D[index](dep)``.

    Built by the recursion eta_{J,i} = D_i eta_J - sum_j (D_i xi^j) u_{J,j}.
    """
    p = g.problem
    index = tuple(sorted(index, key=p.independents.index))
    key = (dep, index)
    hit = g._ext.get(key)
    if hit is not None:
        return hit
    if not index:
        val = g.of(dep)
    else:
        prev, i = index[:-1], index[-1]
        val = total_derivative(p, extended_infinitesimal(g, dep, prev), i)
        for j in p.independents:
            dij = _dxi(g, i, j)
            if dij:
                u = p.table.jet(dep, prev + (j,))
                val = val - dij * Expr.sym(u)
    g._ext[key] = val
    return val


def apply_prolonged(g: GeneratorCandidate, e: Expr) -> Expr:
    """Action of the prolonged generator on an expression in the jet space."""
    p = g.problem

    def value(i):
        s = S.sym_of(i)
        if s.kind is S.Kind.INDEPENDENT or s.kind in (S.Kind.DEPENDENT, S.Kind.ARBITRARY):
            if s.name in p.coordinates:
                return g.of(s.name)
            return None
        if s.kind is S.Kind.JET:
            return extended_infinitesimal(g, s.base, s.index)
        if s.kind is S.Kind.OPAQUE:
            v = g.of(s.args[0])
            if v.is_zero():
                return None
            return Expr.sym(S.opaque(s.base, s.args[0], s.order + 1)) * v
        if s.kind is S.Kind.UNKNOWN:
            raise VerificationError("cannot apply a generator to an unknown component")
        return None

    vals = {i: value(i) for i in e.atom_ids()}
    if all(v is None or v.is_polynomial() for v in vals.values()):
        return e.derive_poly(lambda i: vals[i].num if vals.get(i) is not None else None)
    return e.derive_expr(lambda i: vals.get(i))


def apply_point(g: GeneratorCandidate, e: Expr) -> Expr:
    """Action of the (unprolonged) generator on a function of the coordinates."""
    p = g.problem

    def value(i):
        s = S.sym_of(i)
        if s.kind in (S.Kind.INDEPENDENT, S.Kind.DEPENDENT, S.Kind.ARBITRARY) and s.name in p.coordinates:
            v = g.of(s.name)
            return v if v else None
        if s.kind is S.Kind.OPAQUE:
            v = g.of(s.args[0])
            if v.is_zero():
                return None
            return Expr.sym(S.opaque(s.base, s.args[0], s.order + 1)) * v
        if s.kind in (S.Kind.JET, S.Kind.UNKNOWN):
            raise VerificationError(f"{s.name} is not a point coordinate")
        return None

    return e.derive_expr(value)


def lie_bracket(a: GeneratorCandidate, b: GeneratorCandidate) -> GeneratorCandidate:
    """[a, b] with components a(b^v) - b(a^v)."""
    comps = {}
    for k in a.problem.components:
        comps[k] = apply_point(a, b.components[k]) - apply_point(b, a.components[k])
    return GeneratorCandidate(a.problem, comps)


__all__ = ["GeneratorCandidate", "total_derivative", "extended_infinitesimal",
           "apply_prolonged", "apply_point", "lie_bracket", "partial_derivative"]
