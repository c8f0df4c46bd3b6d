"""Sparse exact linear algebra.

Rows are dicts ``{column: int}``. Elimination is fraction-free: a row is
combined with a pivot row through integer cross-multiplication and then
divided by the gcd of its entries, so intermediate entries stay small.
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd, lcm


def integer_row(row: dict) -> dict:
    """Scale a rational row to a primitive integer row with positive leading entry."""
    items = {c: Fraction(v) for c, v in row.items() if v}
    if not items:
        return {}
    den = 1
    for v in items.values():
        den = lcm(den, v.denominator)
    out = {c: int(v * den) for c, v in items.items()}
    return _primitive(out)


def _primitive(row: dict) -> dict:
    g = 0
    for v in row.values():
        g = gcd(g, v)
        if g == 1:
            break
    lead = row[min(row)]
    if lead < 0:
        g = -g
    if g not in (0, 1):
        row = {c: v // g for c, v in row.items()}
    return row


def _combine(row: dict, piv: dict, col: int) -> dict:
    """Eliminate ``col`` from ``row`` using pivot row ``piv``."""
    a = piv[col]
    b = row[col]
    g = gcd(a, b)
    a //= g
    b //= g
    out = {}
    for c, v in row.items():
        out[c] = v * a
    for c, v in piv.items():
        nv = out.get(c, 0) - v * b
        if nv:
            out[c] = nv
        else:
            out.pop(c, None)
    return _primitive(out) if out else out


class Echelon:
    """Incrementally maintained reduced row echelon form over the integers."""

    def __init__(self):
        self.pivots: dict = {}   # pivot column -> primitive row with pivot entry > 0

    def reduce(self, row: dict) -> dict:
        row = {c: v for c, v in row.items() if v}
        if not row:
            return row
        for col in sorted(c for c in row if c in self.pivots):
            if col in row:
                row = _combine(row, self.pivots[col], col)
                if not row:
                    return row
        return row

    def add(self, row: dict) -> bool:
        """Insert a row; returns True when it increases the rank."""
        row = self.reduce(integer_row(row))
        if not row:
            return False
        col = min(row)
        if row[col] < 0:
            row = {c: -v for c, v in row.items()}
        for pc, prow in list(self.pivots.items()):
            if col in prow:
                self.pivots[pc] = _combine(prow, row, col)
                if self.pivots[pc][pc] < 0:
                    self.pivots[pc] = {c: -v for c, v in self.pivots[pc].items()}
        self.pivots[col] = row
        return True

    @property
    def rank(self) -> int:
        return len(self.pivots)

    def nullspace(self, ncols: int) -> list:
        """Basis of the kernel, one vector per free column, as Fraction rows."""
        free = [c for c in range(ncols) if c not in self.pivots]
        basis = []
        for f in free:
            v = {f: Fraction(1)}
            for pc, prow in self.pivots.items():
                x = prow.get(f)
                if x:
                    v[pc] = Fraction(-x, prow[pc])
            basis.append(v)
        return rref(basis)


def rref(rows: list) -> list:
    """Reduced row echelon form with leading coefficient 1, rows ordered by pivot."""
    rows = [{c: Fraction(v) for c, v in r.items() if v} for r in rows]
    rows = [r for r in rows if r]
    done: list = []
    for r in rows:
        for piv in done:
            pc = min(piv)
            x = r.get(pc)
            if x:
                for c, v in piv.items():
                    nv = r.get(c, 0) - x * v
                    if nv:
                        r[c] = nv
                    else:
                        r.pop(c, None)
        if not r:
            continue
        pc = min(r)
        lead = r[pc]
        r = {c: v / lead for c, v in r.items()}
        for k, piv in enumerate(done):
            x = piv.get(pc)
            if x:
                for c, v in r.items():
                    nv = piv.get(c, 0) - x * v
                    if nv:
                        piv[c] = nv
                    else:
                        piv.pop(c, None)
        done.append(r)
    done.sort(key=min)
    return done


def solve(rows: list, rhs: list, ncols: int):
    """One solution of ``rows . x = rhs`` (free variables set to 0), or None if inconsistent."""
    aug = ncols
    ech = Echelon()
    for r, b in zip(rows, rhs):
        row = dict(r)
        if b:
            row[aug] = -Fraction(b)
        ech.add(row)
    if aug in ech.pivots:
        return None
    x = [Fraction(0)] * ncols
    for pc, prow in ech.pivots.items():
        x[pc] = Fraction(-prow.get(aug, 0), prow[pc])
    return x
