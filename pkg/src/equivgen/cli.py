"""Command-line front end.

Exit codes: 0 success, 2 a candidate was refuted, 3 the determining system
is contradictory or its solution space is empty, 4 bad input.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from pathlib import Path

from .determining import generate_determining
from .errors import EquivgenError, InputError
from .expr import to_string
from .flows import integrate_closed_form, numeric_flow
from .problem import declare_problem
from .report import (RunReport, digest, emit_report, generator_json, load_generators,
                     symbols_table)
from .solver import AnsatzSpec, ansatz_solve, trivial_reduce
from .verify import complete_generator, verify_affine_transformation, verify_generator

EXIT_OK, EXIT_REFUTED, EXIT_EMPTY, EXIT_INPUT = 0, 2, 3, 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError(message)


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as err:
        raise InputError(f"cannot read {path}: {err.strerror}") from None


def _max_degree() -> int:
    raw = os.environ.get("EQUIVGEN_MAX_DEGREE", "6")
    try:
        return int(raw)
    except ValueError:
        raise InputError(f"EQUIVGEN_MAX_DEGREE must be an integer, got '{raw}'") from None


def _load_problem(args):
    text = _read(args.problem)
    p = declare_problem(text, name=Path(args.problem).stem)
    if getattr(args, "max_consequence_order", None) is not None:
        p.max_consequence_order = args.max_consequence_order
    return p, text


def _base_report(cmd, args, p, text, flags) -> RunReport:
    return RunReport(cmd, flags, {"name": p.name, "digest": digest(text)}, symbols_table(p.table))


def _denominators(items) -> dict:
    out = {}
    for item in items or []:
        comp, sep, expr = item.partition("=")
        if not sep or not comp.strip() or not expr.strip():
            raise InputError(f"--denominator expects COMPONENT=EXPR, got '{item}'")
        out[comp.strip()] = expr.strip()
    return out


def _derive(p, args):
    degree = args.ansatz_degree if args.ansatz_degree is not None else p.ansatz_degree
    if degree < 0:
        raise InputError("ansatz degree must be non-negative")
    if degree > _max_degree():
        raise InputError(f"ansatz degree {degree} exceeds the cap {_max_degree()} (EQUIVGEN_MAX_DEGREE)")
    ds = generate_determining(p)
    red = trivial_reduce(ds)
    spec = AnsatzSpec.from_problem(p, degree, _denominators(args.denominator))
    basis = ansatz_solve(red, spec)
    info = dict(ds.informational)
    info.update(red.informational)
    info.update(basis.informational)
    info["determining_equations"] = len(ds)
    return degree, basis, info


def cmd_derive(args, out):
    p, text = _load_problem(args)
    t0 = time.perf_counter()
    degree, basis, info = _derive(p, args)
    flags = {"ansatz_degree": degree, "denominator": sorted(args.denominator or []),
             "max_consequence_order": p.consequence_bound}
    r = _base_report(args.command, args, p, text, flags)
    r.dimension = basis.dimension
    r.generators = [generator_json(g) for g in basis]
    r.informational = info
    if args.command == "report":
        for g in basis:
            r.flows.append(_flow_entry(integrate_closed_form(g, args.param_name)))
    if basis.dimension == 0:
        r.status = "empty"
    if args.timing:
        r.timing = {"seconds": round(time.perf_counter() - t0, 3)}
    out(emit_report(r, args.format))
    return EXIT_OK if basis.dimension else EXIT_EMPTY


def cmd_split(args, out):
    p, text = _load_problem(args)
    ds = generate_determining(p)
    r = _base_report("split", args, p, text, {"max_consequence_order": p.consequence_bound})
    r.determining = [{"equation": to_string(e), "tag": tag} for e, tag in zip(ds.equations, ds.provenance)]
    r.informational = dict(ds.informational, determining_equations=len(ds))
    out(emit_report(r, "json"))
    return EXIT_OK


def _verification_entry(res) -> dict:
    return {"name": res.name, "status": res.status, "residuals": res.residuals,
            "violations": res.violations}


def cmd_verify(args, out):
    p, text = _load_problem(args)
    gf = load_generators(_read(args.generators), p)
    r = _base_report("verify", args, p, text, {"generators": Path(args.generators).name})
    refuted = False
    gens = []
    for g in gf.generators:
        if g.name in gf.complete:
            fixed = {c: e for c, e in g.components.items() if c not in gf.complete[g.name]}
            name = g.name
            g = complete_generator(p, fixed, gf.complete[name])
            g.name = name
        res = verify_generator(p, g)
        refuted |= not res.verified
        r.verification.append(_verification_entry(res))
        gens.append(generator_json(g))
    for name, m in gf.transformations:
        res = verify_affine_transformation(p, m, name)
        refuted |= not res.verified
        r.verification.append(_verification_entry(res))
    if gens:
        r.generators = gens
        r.dimension = len(gens)
    r.status = "refuted" if refuted else "verified"
    out(emit_report(r, args.format))
    return EXIT_REFUTED if refuted else EXIT_OK


def _flow_entry(sol) -> dict:
    d = {
        "generator": sol.generator,
        "parameter": sol.parameter,
        "odes": {c: to_string(e) for c, e in sol.odes.items()},
        "closed_form": {c: to_string(e) for c, e in sol.closed_form.items()} if sol.closed_form else None,
    }
    if sol.reason:
        d["reason"] = sol.reason
    if sol.checks:
        d["checks"] = sol.checks
    return d


def _parse_eval(text: str, p):
    point, sep, eps = text.rpartition("@")
    if not sep:
        raise InputError("--eval expects NAME=VALUE,...@PARAM")
    vals = {}
    for item in point.split(","):
        k, s2, v = item.partition("=")
        if not s2 or k.strip() not in p.coordinates:
            raise InputError(f"bad point entry '{item}'")
        vals[k.strip()] = float(v)
    return vals, float(eps)


def cmd_flow(args, out):
    p, text = _load_problem(args)
    sel = args.generator
    if sel.isdigit():
        _, basis, _ = _derive(p, args)
        k = int(sel)
        if not 1 <= k <= basis.dimension:
            raise InputError(f"generator index {k} out of range 1..{basis.dimension}")
        g = basis[k - 1]
    else:
        gf = load_generators(_read(sel), p)
        if not gf.generators:
            raise InputError("generator file holds no generators")
        pick = [x for x in gf.generators if args.name is None or x.name == args.name]
        if not pick:
            raise InputError(f"no generator named '{args.name}'")
        g = pick[0]
    sol = integrate_closed_form(g, args.param_name)
    r = _base_report("flow", args, p, text, {"generator": Path(sel).name if not sel.isdigit() else sel,
                                            "param_name": args.param_name, "tol": args.tol})
    entry = _flow_entry(sol)
    status = EXIT_OK
    if args.eval:
        vals, eps = _parse_eval(args.eval, p)
        num = numeric_flow(g, vals, eps)
        entry["numeric"] = {c: repr(v) for c, v in sorted(num.items())}
        if sol.closed_form is not None:
            exact = sol.at(vals, eps)
            err = max(abs(float(exact[c]) - num[c]) for c in num)
            entry["closed_form_value"] = {c: repr(float(v)) for c, v in sorted(exact.items())}
            entry["max_abs_difference_within_tol"] = err <= args.tol
            if err > args.tol:
                status = EXIT_REFUTED
    r.flows = [entry]
    r.status = "ok" if status == EXIT_OK else "refuted"
    out(emit_report(r, args.format))
    return status


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="equivgen", description="Equivalence generators of PDE families.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, fmt=True):
        sp.add_argument("problem")
        sp.add_argument("--out")
        sp.add_argument("--max-consequence-order", type=int)
        if fmt:
            sp.add_argument("--format", choices=["json", "latex"], default="json")

    for name in ("derive", "report"):
        sp = sub.add_parser(name)
        common(sp)
        sp.add_argument("--ansatz-degree", type=int)
        sp.add_argument("--denominator", action="append")
        sp.add_argument("--timing", action="store_true")
        sp.add_argument("--param-name", default="s")
    sp = sub.add_parser("split")
    common(sp, fmt=False)
    sp = sub.add_parser("verify")
    common(sp)
    sp.add_argument("generators")
    sp = sub.add_parser("flow")
    common(sp)
    sp.add_argument("--generator", required=True)
    sp.add_argument("--name")
    sp.add_argument("--param-name", default="s")
    sp.add_argument("--eval")
    sp.add_argument("--tol", type=float, default=1e-9)
    sp.add_argument("--ansatz-degree", type=int)
    sp.add_argument("--denominator", action="append")
    return ap


COMMANDS = {"derive": cmd_derive, "report": cmd_derive, "split": cmd_split,
            "verify": cmd_verify, "flow": cmd_flow}


def run(argv=None, stdout=None) -> int:
    stdout = stdout or sys.stdout.buffer
    try:
        args = build_parser().parse_args(argv)
        chunks = []
        code = COMMANDS[args.command](args, chunks.append)
        data = b"".join(chunks)
        if args.out:
            Path(args.out).write_bytes(data)
        else:
            stdout.write(data)
            stdout.flush()
        return code
    except EquivgenError as err:
        sys.stderr.write(f"equivgen: {err}\n")
        return err.exit_code
    except ValueError as err:
        sys.stderr.write(f"equivgen: {err}\n")
        return EXIT_INPUT


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
