"""One-parameter groups generated by a concrete generator (Lie's first theorem)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from scipy.integrate import solve_ivp

from . import poly as P
from . import symbols as S
from .errors import EquivgenError, SingularityError, VerificationError, ZeroDenominatorError
from .expr import Expr, partial_derivative, to_string
from .linalg import solve
from .prolong import GeneratorCandidate


class ClosedFormError(EquivgenError):
    """The Lie ODEs fall outside the closed-form integrator."""


@dataclass
class FlowSolution:
    generator: str
    parameter: str
    odes: dict                          # coordinate -> right-hand side
    closed_form: dict | None = None     # coordinate -> expression in initial values and parameter
    reason: str = ""
    checks: dict = field(default_factory=dict)
    symbols: dict = field(default_factory=dict)     # coordinate name -> Symbol

    def at(self, values: dict, eps) -> dict:
        """Evaluate the closed form at initial ``values`` (names -> numbers) and parameter ``eps``."""
        if self.closed_form is None:
            raise ClosedFormError(self.reason or "no closed form")
        vals = {self.symbols[k]: v for k, v in values.items()}
        vals[S.parameter(self.parameter)] = eps
        out = {}
        for c, e in self.closed_form.items():
            ids = e.atom_ids()
            ex = S.exponential(self.parameter).sid
            local = {k: v for k, v in vals.items() if k.sid in ids}
            if ex in ids:
                if isinstance(eps, Fraction) and eps:
                    raise ClosedFormError("exact evaluation of exp() at a nonzero parameter")
                local[S.exponential(self.parameter)] = math.exp(float(eps)) if eps else 1
            try:
                out[c] = e.evaluate(local)
            except ZeroDenominatorError as err:
                raise SingularityError(f"flow of {self.generator} is singular: {err}") from None
        return out


def lie_odes(g: GeneratorCandidate) -> dict:
    """d z / d eps = component of ``g`` at z, one entry per coordinate."""
    return {c: g.of(c) for c in g.problem.coordinates}


def _param_ids(eps: S.Symbol) -> set:
    return {eps.sid, S.exponential(eps.name).sid}


def _depends_on(e: Expr, ids: set) -> bool:
    return bool(e.atom_ids() & ids)


def _antiderivative_at_zero(e: Expr, eps: S.Symbol) -> Expr:
    """Integral of ``e`` from 0 to eps; ``e`` must be polynomial in eps and exp(eps) over an eps-free denominator."""
    pid = _param_ids(eps)
    for f, _ in e.den:
        if f.atoms & pid:
            raise ClosedFormError("integrand has a parameter-dependent denominator")
    ex = S.exponential(eps.name).sid
    total = Expr()
    E = Expr.sym(eps)
    for m, c in e.num.items():
        n = 0
        a = P.ZERO
        rest = []
        for i, k in m:
            if i == eps.sid:
                n = k
            elif i == ex:
                a = k
            else:
                rest.append((i, k))
        coef = Expr({tuple(rest): c})
        if not a:
            total = total + coef * E ** (n + 1) / Expr.const(n + 1)
            continue
        # e^{a eps} sum_k (-1)^k n!/(n-k)! eps^{n-k} / a^{k+1}, minus its value at 0
        ar = Fraction(int(a.numerator), int(a.denominator))
        F = Expr()
        for k in range(n + 1):
            f = Fraction((-1) ** k * math.factorial(n) // math.factorial(n - k)) / ar ** (k + 1)
            F = F + Expr.const(f) * E ** (n - k)
        F0 = Fraction((-1) ** n * math.factorial(n)) / ar ** (n + 1)
        total = total + coef * (F * Expr.exp(eps, a) - Expr.const(F0))
    if e.den:
        total = total / e.denominator()
    return total


def _exp_of_integral(a: Expr, eps: S.Symbol) -> Expr:
    """exp of the integral from 0 to eps of ``a``.

    Handles a = lam + sum k_i f_i'/f_i with rational lam and integer k_i,
    the f_i being parameter-dependent denominator factors of ``a``.
    """
    if a.is_zero():
        return Expr.const(1)
    pid = _param_ids(eps)
    facs = [f for f, _ in a.den if f.atoms & pid]
    ks = [S.coefficient(j, "k") for j in range(len(facs))]
    logd = [partial_derivative(Expr(f.poly), eps) / Expr(f.poly) for f in facs]
    kvals: list = []
    if facs:
        r = a
        for k, ld in zip(ks, logd):
            r = r - Expr.sym(k) * ld
        cond = partial_derivative(r, eps).numerator()
        kid = {k.sid: j for j, k in enumerate(ks)}
        rows: dict = {}
        for m, c in cond.num.items():
            ls = [i for i, _ in m if i in kid]
            rest = tuple((i, x) for i, x in m if i not in kid)
            row = rows.setdefault(rest, [{}, Fraction(0)])
            v = Fraction(int(c.numerator), int(c.denominator))
            if ls:
                row[0][kid[ls[0]]] = row[0].get(kid[ls[0]], 0) + v
            else:
                row[1] -= v
        x = solve([r[0] for r in rows.values()], [r[1] for r in rows.values()], len(ks))
        if x is None or any(v.denominator != 1 for v in x):
            raise ClosedFormError("coefficient is not a logarithmic derivative with integer exponents")
        kvals = [int(v) for v in x]
    lam = a
    for k, ld in zip(kvals, logd):
        lam = lam - Expr.const(k) * ld
    if _depends_on(lam, pid):
        integral = _antiderivative_at_zero(lam, eps)
        raise ClosedFormError(f"exponential of {to_string(integral)}")
    if not lam.is_constant():
        raise ClosedFormError("exponential rate depends on initial values")
    out = Expr.exp(eps, lam.constant_value())
    zero = {eps.sid: Expr()}
    for k, f in zip(kvals, facs):
        fe = Expr(f.poly)
        out = out * (fe / fe.substitute(zero)) ** k
    return out


def _scalar(rhs: Expr, z: S.Symbol, eps: S.Symbol) -> Expr:
    """Solve dz/deps = rhs(z, eps) with z(0) = z."""
    for f, _ in rhs.den:
        if z.sid in f.atoms:
            raise ClosedFormError(f"{z.name} occurs in a denominator of its own equation")
    deg = rhs.degree(z)
    Z = Expr.sym(z)
    den = rhs.denominator() if rhs.den else Expr.const(1)
    coeffs = {dict(m).get(z.sid, 0): c / den for m, c in rhs.coefficients([z.sid]).items()}
    pid = _param_ids(eps)
    if deg == 0:
        return Z + _antiderivative_at_zero(coeffs.get(0, Expr()), eps)
    if deg == 1:
        a = coeffs.get(1, Expr())
        b = coeffs.get(0, Expr())
        phi = _exp_of_integral(a, eps)
        if b.is_zero():
            return phi * Z
        return phi * (Z + _antiderivative_at_zero(b / phi, eps))
    if deg == 2 and set(coeffs) == {2} and not _depends_on(coeffs[2], pid):
        lam = coeffs[2]
        return Z / (Expr.const(1) - lam * Expr.sym(eps) * Z)
    raise ClosedFormError(f"equation for {z.name} is not linear or a pure Riccati equation")


def integrate_closed_form(g: GeneratorCandidate, param: str = "s") -> FlowSolution:
    """Closed-form global group of ``g``; coordinates double as initial values."""
    p = g.problem
    eps = S.parameter(param)
    if param in p.coordinates or param in p.table.names():
        raise VerificationError(f"parameter name '{param}' clashes with a declared name")
    odes = lie_odes(g)
    sol = FlowSolution(g.name, param, odes, symbols={c: p.table.symbol(c) for c in p.coordinates})
    coords = p.coordinates
    deps = {}
    for c in coords:
        d = set()
        for i in odes[c].atom_ids():
            s = S.sym_of(i)
            if s.name in coords:
                d.add(s.name)
            elif s.kind is S.Kind.OPAQUE:
                d.add(s.args[0])
            elif s.kind in (S.Kind.JET, S.Kind.UNKNOWN):
                raise VerificationError("flows need a concrete point generator")
        deps[c] = d - {c}
    order: list = []
    state: dict = {}

    def visit(c):
        if state.get(c) == 2:
            return
        if state.get(c) == 1:
            raise ClosedFormError("coupled Lie equations")
        state[c] = 1
        for d in sorted(deps[c]):
            visit(d)
        state[c] = 2
        order.append(c)

    try:
        for c in coords:
            visit(c)
        done: dict = {}
        for c in order:
            rules = {}
            for i in odes[c].atom_ids():
                s = S.sym_of(i)
                if s.kind is S.Kind.OPAQUE:
                    if done.get(s.args[0], Expr.sym(p.table.symbol(s.args[0]))) != Expr.sym(p.table.symbol(s.args[0])):
                        raise ClosedFormError(f"opaque {s.base} is evaluated along a moving coordinate")
                elif s.name in done and s.name != c:
                    rules[i] = done[s.name]
            rhs = odes[c].substitute(rules)
            done[c] = _scalar(rhs, p.table.symbol(c), eps)
    except ClosedFormError as err:
        sol.reason = str(err)
        return sol
    sol.closed_form = {c: done[c] for c in coords}
    sol.checks = {"ode": check_solution(sol, p), "group": group_property(sol, p)}
    return sol


def check_solution(sol: FlowSolution, p) -> bool:
    """The closed form satisfies the Lie equations and the initial condition."""
    eps = S.parameter(sol.parameter)
    rules = {p.table.symbol(c).sid: e for c, e in sol.closed_form.items()}
    for c, e in sol.closed_form.items():
        if partial_derivative(e, eps) != sol.odes[c].substitute(rules):
            return False
        if e.substitute({eps.sid: Expr()}) != Expr.sym(p.table.symbol(c)):
            return False
    return True


def group_property(sol: FlowSolution, p) -> bool:
    """flow(e1) o flow(e2) == flow(e1 + e2), checked symbolically."""
    eps = S.parameter(sol.parameter)
    e1 = S.parameter(sol.parameter + "_1")
    e2 = S.parameter(sol.parameter + "_2")
    f1 = {c: e.substitute({eps.sid: Expr.sym(e1)}) for c, e in sol.closed_form.items()}
    f2 = {p.table.symbol(c).sid: e.substitute({eps.sid: Expr.sym(e2)}) for c, e in sol.closed_form.items()}
    both = Expr.sym(e1) + Expr.sym(e2)
    for c, e in sol.closed_form.items():
        if f1[c].substitute(f2) != e.substitute({eps.sid: both}):
            return False
    return True


def numeric_flow(g: GeneratorCandidate, point: dict, eps: float, rtol: float = 1e-12,
                 atol: float = 1e-12, blowup: float = 1e12) -> dict:
    """Integrate the Lie equations numerically (DOP853) from ``point`` to parameter ``eps``."""
    p = g.problem
    odes = lie_odes(g)
    coords = p.coordinates
    missing = [c for c in coords if c not in point]
    if missing:
        raise VerificationError(f"no initial value for {', '.join(missing)}")
    syms = [p.table.symbol(c) for c in coords]
    for e in odes.values():
        for i in e.atom_ids():
            if S.sym_of(i).kind not in (S.Kind.INDEPENDENT, S.Kind.DEPENDENT, S.Kind.ARBITRARY):
                raise VerificationError(f"cannot integrate numerically: {S.sym_of(i).name} is symbolic")
    exprs = [odes[c] for c in coords]

    def f(_, y):
        vals = {s.sid: float(v) for s, v in zip(syms, y)}
        try:
            return [e.evaluate({i: vals[i] for i in e.atom_ids()}) if e else 0.0 for e in exprs]
        except ZeroDenominatorError as err:
            raise SingularityError(str(err)) from None

    def escape(_, y):
        return blowup - max(abs(float(v)) for v in y)
    escape.terminal = True

    y0 = [float(point[c]) for c in coords]
    res = solve_ivp(f, (0.0, float(eps)), y0, method="DOP853", rtol=rtol, atol=atol, events=escape)
    if res.status != 0 or not all(math.isfinite(v) for v in res.y[:, -1]):
        raise SingularityError(f"flow of {g.name or 'generator'} is singular before parameter {eps}")
    return {c: float(v) for c, v in zip(coords, res.y[:, -1])}
