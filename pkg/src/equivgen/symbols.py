"""Interned symbols for jet-space expressions.

Every atom that can appear in an :class:`~equivgen.expr.Expr` is a
:class:`Symbol`. Symbols are interned: each distinct value gets a small
integer id, and polynomials store ids rather than objects.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum


class Kind(str, Enum):
    INDEPENDENT = "independent-var"
    DEPENDENT = "dependent-value"
    JET = "jet-coordinate"
    ARBITRARY = "arbitrary-element-value"
    UNKNOWN = "unknown-component"
    OPAQUE = "opaque-function"
    PARAMETER = "flow-parameter"
    # internal kinds, never written by users
    EXP = "exponential"
    COEFFICIENT = "coefficient"


_RANK = {
    Kind.INDEPENDENT: 0,
    Kind.DEPENDENT: 1,
    Kind.ARBITRARY: 1,
    Kind.JET: 2,
    Kind.UNKNOWN: 3,
    Kind.OPAQUE: 4,
    Kind.PARAMETER: 5,
    Kind.EXP: 6,
    Kind.COEFFICIENT: 7,
}


@dataclass(frozen=True)
class Symbol:
    """An atom.

    ``base`` is the underlying variable for jets, unknown derivatives,
    opaque calls and exponentials. ``index`` is the derivative multi-index
    (names of variables, canonically ordered). ``args`` holds the argument
    names of an unknown component or the single argument of an opaque call.
    ``order`` is the derivative order of an opaque call.
    """

    name: str
    kind: Kind
    base: str = ""
    index: tuple[str, ...] = ()
    args: tuple[str, ...] = ()
    order: int = 0

    @property
    def sid(self) -> int:
        return intern(self)

    @property
    def sort_key(self) -> tuple:
        return (_RANK[self.kind], self.base or self.name, len(self.index),
                self.index, self.order, self.name, self.args)

    def __str__(self) -> str:
        return self.name

    def __repr__(self) -> str:
        return f"Symbol({self.name!r}, {self.kind.value})"


_IDS: dict[Symbol, int] = {}
_SYMS: list[Symbol] = []
_KEYS: list[tuple] = []


def intern(sym: Symbol) -> int:
    i = _IDS.get(sym)
    if i is None:
        i = len(_SYMS)
        _IDS[sym] = i
        _SYMS.append(sym)
        _KEYS.append(sym.sort_key)
    return i


def sym_of(i: int) -> Symbol:
    return _SYMS[i]


def key_of(i: int) -> tuple:
    return _KEYS[i]


def jet_name(base: str, index: tuple[str, ...]) -> str:
    return f"D[{','.join(index)}]({base})"


def opaque_name(fname: str, arg: str, order: int) -> str:
    return f"{fname}({arg})" + "'" * order


def independent(name: str) -> Symbol:
    return Symbol(name, Kind.INDEPENDENT)


def dependent(name: str) -> Symbol:
    return Symbol(name, Kind.DEPENDENT)


def arbitrary(name: str) -> Symbol:
    return Symbol(name, Kind.ARBITRARY)


def parameter(name: str) -> Symbol:
    return Symbol(name, Kind.PARAMETER)


def coefficient(k: int, tag: str = "c") -> Symbol:
    return Symbol(f"__{tag}{k}", Kind.COEFFICIENT)


def jet(base: Symbol, index: tuple[str, ...]) -> Symbol:
    """Jet coordinate of ``base``; ``index`` must already be canonically ordered."""
    if not index:
        return base
    return Symbol(jet_name(base.name, index), Kind.JET, base=base.name,
                  index=index, args=(base.kind.value,))


def unknown(name: str, args: tuple[str, ...], index: tuple[str, ...] = ()) -> Symbol:
    label = jet_name(name, index) if index else name
    return Symbol(label, Kind.UNKNOWN, base=name, index=index, args=args)


def opaque(fname: str, arg: str, order: int = 0) -> Symbol:
    return Symbol(opaque_name(fname, arg, order), Kind.OPAQUE, base=fname,
                  args=(arg,), order=order)


def exponential(param: str) -> Symbol:
    return Symbol(f"exp({param})", Kind.EXP, base=param)
