"""Expression parser and the symbol table it resolves names against."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction

from . import symbols as S
from .errors import ParseError
from .expr import Expr


@dataclass
class SymbolTable:
    """Declared names of a problem plus anything the caller adds."""

    independents: list = field(default_factory=list)
    dependents: list = field(default_factory=list)
    arbitrary: dict = field(default_factory=dict)     # name -> ("function", args) | ("constant", ())
    parameters: list = field(default_factory=list)
    components: dict = field(default_factory=dict)    # unknown component name -> args
    opaque: dict = field(default_factory=dict)        # function name -> None (any arg) or arg

    def copy(self) -> "SymbolTable":
        return SymbolTable(list(self.independents), list(self.dependents), dict(self.arbitrary),
                           list(self.parameters), dict(self.components), dict(self.opaque))

    def names(self) -> set:
        return (set(self.independents) | set(self.dependents) | set(self.arbitrary)
                | set(self.parameters) | set(self.components) | set(self.opaque))

    @property
    def zeroth(self) -> list:
        """Dependent values and arbitrary elements, in declaration order."""
        return list(self.dependents) + list(self.arbitrary)

    @property
    def coordinates(self) -> list:
        return list(self.independents) + self.zeroth

    def symbol(self, name: str) -> S.Symbol:
        if name in self.independents:
            return S.independent(name)
        if name in self.dependents:
            return S.dependent(name)
        if name in self.arbitrary:
            return S.arbitrary(name)
        if name in self.parameters:
            return S.parameter(name)
        if name in self.components:
            return S.unknown(name, tuple(self.components[name]))
        raise ParseError(f"undeclared identifier '{name}'")

    def jet(self, base: str, index) -> S.Symbol:
        index = tuple(index)
        if base in self.components:
            args = tuple(self.components[base])
            for v in index:
                if v not in args:
                    raise ParseError(f"component '{base}' does not depend on '{v}'")
            return S.unknown(base, args, tuple(sorted(index, key=args.index)))
        if base in self.independents:
            raise ParseError(f"cannot differentiate the independent variable '{base}'")
        if base not in self.dependents and base not in self.arbitrary:
            raise ParseError(f"undeclared identifier '{base}'")
        for v in index:
            if v not in self.independents:
                raise ParseError(f"'{v}' is not an independent variable")
        idx = tuple(sorted(index, key=self.independents.index))
        return S.jet(self.symbol(base), idx)

    def opaque_call(self, fname: str, arg: str, order: int) -> S.Symbol:
        if fname not in self.opaque:
            raise ParseError(f"undeclared function '{fname}'")
        allowed = self.opaque[fname]
        if arg not in self.independents and arg not in self.zeroth:
            raise ParseError(f"function argument '{arg}' is not a coordinate")
        if allowed is not None and arg != allowed:
            raise ParseError(f"function '{fname}' takes '{allowed}', not '{arg}'")
        return S.opaque(fname, arg, order)


_TOKEN = re.compile(r"""
    (?P<ws>\s+)|(?P<comment>\#[^\n]*)|
    (?P<num>\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)|
    (?P<ident>[A-Za-z_][A-Za-z0-9_]*)|
    (?P<op>\*\*|[-+*/^()\[\],'′=])
""", re.VERBOSE)


def tokenize(text: str) -> list:
    toks = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r} at offset {pos}")
        kind = m.lastgroup
        if kind not in ("ws", "comment"):
            val = m.group(kind)
            if kind == "op" and val == "**":
                val = "^"
            if kind == "op" and val == "′":
                val = "'"
            toks.append((kind, val, pos))
        pos = m.end()
    toks.append(("end", "", len(text)))
    return toks


class _Parser:
    def __init__(self, text: str, table: SymbolTable):
        self.toks = tokenize(text)
        self.i = 0
        self.table = table

    def peek(self):
        return self.toks[self.i]

    def take(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, val):
        t = self.take()
        if t[1] != val or t[0] == "end":
            raise ParseError(f"expected '{val}' at offset {t[2]}, found {t[1] or 'end of input'!r}")
        return t

    def at(self, val) -> bool:
        t = self.peek()
        return t[0] != "end" and t[1] == val

    def expr(self) -> Expr:
        e = self.term()
        while self.at("+") or self.at("-"):
            op = self.take()[1]
            t = self.term()
            e = e + t if op == "+" else e - t
        return e

    def term(self) -> Expr:
        e = self.unary()
        while self.at("*") or self.at("/"):
            op = self.take()[1]
            f = self.unary()
            e = e * f if op == "*" else e / f
        return e

    def unary(self) -> Expr:
        if self.at("-"):
            self.take()
            return -self.unary()
        if self.at("+"):
            self.take()
            return self.unary()
        return self.factor()

    def factor(self) -> Expr:
        b = self.base()
        if self.at("^"):
            self.take()
            sign = 1
            if self.at("-"):
                self.take()
                sign = -1
            t = self.take()
            if t[0] != "num" or not t[1].isdigit():
                raise ParseError(f"expected an integer exponent at offset {t[2]}")
            b = b ** (sign * int(t[1]))
        return b

    def ident(self) -> str:
        t = self.take()
        if t[0] != "ident":
            raise ParseError(f"expected an identifier at offset {t[2]}")
        return t[1]

    def base(self) -> Expr:
        t = self.peek()
        if t[0] == "num":
            self.take()
            return Expr.const(Fraction(t[1]))
        if t[0] == "ident":
            name = self.take()[1]
            if name == "D" and self.at("["):
                self.take()
                idx = [self.ident()]
                while self.at(","):
                    self.take()
                    idx.append(self.ident())
                self.expect("]")
                self.expect("(")
                target = self.ident()
                self.expect(")")
                return Expr.sym(self.table.jet(target, idx))
            if name == "exp" and self.at("(") and "exp" not in self.table.names():
                self.take()
                inner = self.expr()
                self.expect(")")
                return _exp_of(inner)
            if self.at("(") and name in self.table.opaque:
                self.take()
                arg = self.ident()
                self.expect(")")
                order = 0
                while self.at("'"):
                    self.take()
                    order += 1
                return Expr.sym(self.table.opaque_call(name, arg, order))
            if self.at("'") and name in self.table.opaque:
                order = 0
                while self.at("'"):
                    self.take()
                    order += 1
                self.expect("(")
                arg = self.ident()
                self.expect(")")
                return Expr.sym(self.table.opaque_call(name, arg, order))
            return Expr.sym(self.table.symbol(name))
        if t[1] == "(" and t[0] == "op":
            self.take()
            e = self.expr()
            self.expect(")")
            return e
        raise ParseError(f"unexpected {t[1] or 'end of input'!r} at offset {t[2]}")


def _exp_of(inner: Expr) -> Expr:
    if inner.den:
        raise ParseError("exp() argument must be a rational multiple of a parameter")
    out = Expr.const(1)
    for m, c in inner.num.items():
        if len(m) != 1 or m[0][1] != 1 or S.sym_of(m[0][0]).kind is not S.Kind.PARAMETER:
            raise ParseError("exp() argument must be a rational multiple of a parameter")
        out = out * Expr.exp(S.sym_of(m[0][0]), c)
    return out


def parse_expression(text: str, table: SymbolTable) -> Expr:
    """Parse ``text`` into a normalized expression, resolving names in ``table``."""
    p = _Parser(text, table)
    e = p.expr()
    t = p.peek()
    if t[0] != "end":
        raise ParseError(f"unexpected {t[1]!r} at offset {t[2]}")
    return e
