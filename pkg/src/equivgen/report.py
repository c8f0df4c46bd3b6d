"""Run reports: deterministic JSON and LaTeX emission, generator files."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

from . import symbols as S
from .errors import InputError
from .expr import Expr, term_key, to_string
from .parser import SymbolTable, parse_expression
from .problem import Problem
from .prolong import GeneratorCandidate

SCHEMA = "equivgen-report/1"
NON_CONTRACTUAL = "counts depend on the canonical form used for splitting; not part of any contract"


def digest(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


# ---------------------------------------------------------------------------
# symbol tables

def symbols_table(t: SymbolTable) -> dict:
    return {
        "independent": list(t.independents),
        "dependent": list(t.dependents),
        "arbitrary": {k: {"class": v[0], "args": list(v[1])} for k, v in sorted(t.arbitrary.items())},
        "parameters": sorted(t.parameters),
        "opaque": {k: v for k, v in sorted(t.opaque.items())},
    }


def table_from_symbols(d: dict) -> SymbolTable:
    t = SymbolTable()
    t.independents = list(d.get("independent", []))
    t.dependents = list(d.get("dependent", []))
    t.arbitrary = {k: (v["class"], tuple(v["args"])) for k, v in d.get("arbitrary", {}).items()}
    t.parameters = list(d.get("parameters", []))
    t.opaque = dict(d.get("opaque", {}))
    return t


def extend_table(t: SymbolTable, parameters=(), opaque: dict | None = None) -> SymbolTable:
    t = t.copy()
    taken = t.names()
    for name in parameters:
        if name in taken and name not in t.parameters:
            raise InputError(f"parameter '{name}' clashes with a declared name")
        if name not in t.parameters:
            t.parameters.append(name)
    for name, arg in (opaque or {}).items():
        if name in taken and name not in t.opaque:
            raise InputError(f"opaque function '{name}' clashes with a declared name")
        if arg is not None and arg not in t.coordinates:
            raise InputError(f"opaque function '{name}' of undeclared variable '{arg}'")
        t.opaque[name] = arg
    return t


# ---------------------------------------------------------------------------
# generator files

@dataclass
class GeneratorFile:
    table: SymbolTable
    generators: list = field(default_factory=list)        # GeneratorCandidate
    complete: dict = field(default_factory=dict)          # name -> components left to the constrained solve
    transformations: list = field(default_factory=list)   # (name, {coord: Expr})


def load_generators(text: str, p: Problem) -> GeneratorFile:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as err:
        raise InputError(f"generator file is not valid JSON: {err}") from None
    if not isinstance(doc, dict):
        raise InputError("generator file must hold a JSON object")
    t = extend_table(p.table, doc.get("parameters", []), doc.get("opaque", {}))
    out = GeneratorFile(t)
    for k, entry in enumerate(doc.get("generators", [])):
        name = entry.get("name", f"G{k + 1}")
        comps = {}
        for comp, text_ in entry.get("components", {}).items():
            if comp not in p.components:
                raise InputError(f"{name}: unknown component '{comp}'")
            comps[comp] = parse_expression(str(text_), t)
        g = GeneratorCandidate(p, comps, name)
        out.generators.append(g)
        if entry.get("complete"):
            bad = [c for c in entry["complete"] if c not in p.components]
            if bad:
                raise InputError(f"{name}: unknown component '{bad[0]}'")
            out.complete[name] = list(entry["complete"])
    for k, entry in enumerate(doc.get("transformations", [])):
        name = entry.get("name", f"T{k + 1}")
        m = {}
        for coord, text_ in entry.get("map", {}).items():
            if coord not in p.coordinates:
                raise InputError(f"{name}: '{coord}' is not a coordinate")
            m[coord] = parse_expression(str(text_), t)
        out.transformations.append((name, m))
    return out


def generator_json(g: GeneratorCandidate) -> dict:
    return {"name": g.name, "components": {c: to_string(e) for c, e in g.components.items() if e}}


# ---------------------------------------------------------------------------
# reports

@dataclass
class RunReport:
    command: str
    flags: dict
    problem: dict                      # name, digest
    symbols: dict
    dimension: int | None = None
    generators: list = field(default_factory=list)
    flows: list = field(default_factory=list)
    verification: list = field(default_factory=list)
    determining: list = field(default_factory=list)
    informational: dict = field(default_factory=dict)
    timing: dict | None = None
    status: str = "ok"

    def as_dict(self) -> dict:
        d = {
            "schema": SCHEMA,
            "command": self.command,
            "flags": self.flags,
            "problem": self.problem,
            "symbols": self.symbols,
            "status": self.status,
        }
        if self.dimension is not None:
            d["dimension"] = self.dimension
            d["generators"] = self.generators
        if self.flows:
            d["flows"] = self.flows
        if self.verification:
            d["verification"] = self.verification
        if self.determining:
            d["determining"] = self.determining
        if self.informational:
            d["informational"] = dict(self.informational, note=NON_CONTRACTUAL)
        if self.timing is not None:
            d["timing"] = self.timing
        return d


def emit_report(r: RunReport, fmt: str = "json") -> bytes:
    if fmt == "json":
        return (json.dumps(r.as_dict(), sort_keys=True, indent=2, ensure_ascii=False) + "\n").encode("utf-8")
    if fmt == "latex":
        return emit_latex(r).encode("utf-8")
    raise InputError(f"unknown format '{fmt}'")


def load_report(data) -> RunReport:
    """Inverse of the JSON emitter; every expression string is re-parsed and re-printed."""
    d = json.loads(data)
    if d.get("schema") != SCHEMA:
        raise InputError("not an equivgen report")
    t = table_from_symbols(d["symbols"])
    params = set(t.parameters)
    for f in d.get("flows", []):
        params.add(f["parameter"])
    t = extend_table(t, sorted(params - set(t.parameters)))

    def canon(s: str) -> str:
        return to_string(parse_expression(s, t))

    gens = [{"name": g["name"], "components": {c: canon(v) for c, v in g["components"].items()}}
            for g in d.get("generators", [])]
    flows = []
    for f in d.get("flows", []):
        f = dict(f)
        f["odes"] = {c: canon(v) for c, v in f.get("odes", {}).items()}
        if f.get("closed_form"):
            f["closed_form"] = {c: canon(v) for c, v in f["closed_form"].items()}
        flows.append(f)
    info = dict(d.get("informational", {}))
    info.pop("note", None)
    return RunReport(d["command"], d["flags"], d["problem"], d["symbols"], d.get("dimension"),
                     gens, flows, d.get("verification", []), d.get("determining", []), info,
                     d.get("timing"), d.get("status", "ok"))


# ---------------------------------------------------------------------------
# LaTeX

def _latex_name(name: str) -> str:
    base = name.rstrip("0123456789")
    digits = name[len(base):]
    if len(base) > 1:
        base = f"\\mathrm{{{base}}}"
    return f"{base}_{{{digits}}}" if digits and base else name


def _latex_atom(i: int, e) -> str:
    s = S.sym_of(i)
    if s.kind is S.Kind.EXP:
        rate = int(e.numerator) if e.denominator == 1 else f"{int(e.numerator)}/{int(e.denominator)}"
        return f"e^{{{'' if rate == 1 else '-' if rate == -1 else rate}{s.base}}}"
    if s.kind is S.Kind.JET:
        body = f"{_latex_name(s.base)}_{{{''.join(s.index)}}}"
    elif s.kind is S.Kind.OPAQUE:
        body = f"{_latex_name(s.base)}{chr(39) * s.order}({s.args[0]})"
    else:
        body = _latex_name(s.name)
    return body if e == 1 else f"{body}^{{{e}}}"


def _latex_poly(p) -> str:
    if not p:
        return "0"
    out = ""
    for k, m in enumerate(sorted(p, key=term_key)):
        c = p[m]
        neg = c < 0
        a = -c if neg else c
        atoms = " ".join(_latex_atom(i, e) for i, e in sorted(m, key=lambda ie: S.key_of(ie[0])))
        n, d = int(a.numerator), int(a.denominator)
        coef = f"\\tfrac{{{n}}}{{{d}}}" if d != 1 else ("" if n == 1 and atoms else str(n))
        body = f"{coef} {atoms}".strip() if atoms else coef
        out += ("-" if neg else "") + body if k == 0 else (" - " if neg else " + ") + body
    return out


def latex_expr(e: Expr) -> str:
    num = _latex_poly(e.num)
    if not e.den:
        return num
    parts = []
    for f, k in e.den:
        fs = _latex_poly(f.poly)
        if len(f.poly) > 1:
            fs = f"\\left({fs}\\right)"
        parts.append(fs if k == 1 else f"{fs}^{{{k}}}")
    return f"\\frac{{{num}}}{{{' '.join(parts)}}}"


def latex_generator(name: str, comps: dict, t: SymbolTable) -> str:
    terms = []
    for comp, text in comps.items():
        coord = comp.split("_", 1)[1]
        e = parse_expression(text, t)
        if not e:
            continue
        c = latex_expr(e)
        d = f"\\frac{{\\partial}}{{\\partial {_latex_name(coord)}}}"
        if c == "1":
            terms.append(d)
        elif c == "-1":
            terms.append("-" + d)
        elif len(e.num) > 1 and not e.den:
            terms.append(f"\\left({c}\\right) {d}")
        else:
            terms.append(f"{c}\\, {d}")
    body = " + ".join(terms).replace("+ -", "- ") or "0"
    return f"\\[ {_latex_name(name)} = {body} \\]"


def emit_latex(r: RunReport) -> str:
    t = table_from_symbols(r.symbols)
    lines = [latex_generator(g["name"], g["components"], t) for g in r.generators]
    for v in r.verification:
        lines.append(f"% {v['name']}: {v['status']}")
    return "\n".join(lines) + ("\n" if lines else "")
