"""Fraction-free elimination over the field of rational functions.

Entries are sympy expressions.  Zero decisions go through ``is_zero`` and a
caller-supplied reducer (for instance reduction modulo constraints), and
every pivot choice is recorded so callers can state where the computed rank
is valid.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from typing import Callable, Sequence

import sympy as sp

from .symexpr import Verdict, canonical_sign, is_zero, normalize


class RankUnknown(Exception):
    """Pivot candidates whose vanishing could not be decided."""

    def __init__(self, candidates):
        self.candidates = list(candidates)
        super().__init__("rank undecidable; pivot candidates: "
                         + ", ".join(str(c) for c in self.candidates))


@dataclass
class Elimination:
    rows: list            # echelon rows, unknown columns then augmented columns
    ncols: int
    pivots: list          # (row, column) pairs, rows 0..rank-1
    pivot_values: list = field(default_factory=list)
    numeric: bool = False

    @property
    def rank(self) -> int:
        return len(self.pivots)

    @property
    def certificate(self) -> sp.Expr:
        """Last fraction-free pivot, a maximal minor of the coefficient block."""
        if not self.pivot_values or self.numeric:
            return sp.Integer(1)
        return self.pivot_values[-1]

    def free_columns(self) -> list[int]:
        used = {c for _, c in self.pivots}
        return [j for j in range(self.ncols) if j not in used]


def _complexity(e) -> int:
    return sp.count_ops(e) + len(e.free_symbols)


def _all_rational(M) -> bool:
    return all(isinstance(e, sp.Rational) for r in M for e in r)


def eliminate(M: Sequence[Sequence], ncols: int,
              reducer: Callable | None = None, simplest: bool = True) -> Elimination:
    """Row echelon form of ``M`` pivoting only in the first ``ncols`` columns.

    With ``simplest`` the least complex nonzero candidate becomes the pivot,
    otherwise the first one in row order.
    """
    red = reducer or normalize
    rows = [[red(sp.sympify(e)) for e in r] for r in M]
    if _all_rational(rows):
        return _eliminate_numeric(rows, ncols)
    width = len(rows[0]) if rows else ncols
    pivots, values = [], []
    prev = sp.Integer(1)
    r = 0
    for col in range(ncols):
        if r >= len(rows):
            break
        good, unknown = [], []
        for k in range(r, len(rows)):
            e = rows[k][col]
            if e == 0:
                continue
            t = is_zero(e)
            if t.verdict is Verdict.NONZERO:
                good.append(k)
            elif t.verdict is Verdict.ZERO:
                rows[k][col] = sp.Integer(0)
            else:
                unknown.append(e)
        if not good:
            if unknown:
                raise RankUnknown(unknown)
            continue
        k = min(good, key=lambda k: (_complexity(rows[k][col]), k)) if simplest else good[0]
        rows[r], rows[k] = rows[k], rows[r]
        p = rows[r][col]
        for k in range(r + 1, len(rows)):
            a = rows[k][col]
            if a == 0:
                if prev != 1:
                    rows[k] = rows[k][:col + 1] + [red(p * x / prev) for x in rows[k][col + 1:]]
                elif p != 1:
                    rows[k] = rows[k][:col + 1] + [red(p * x) for x in rows[k][col + 1:]]
                continue
            new = rows[k][:col] + [sp.Integer(0)]
            for j in range(col + 1, width):
                new.append(red((p * rows[k][j] - a * rows[r][j]) / prev))
            rows[k] = new
        pivots.append((r, col))
        values.append(p)
        prev = p
        r += 1
    return Elimination(rows, ncols, pivots, values)


def _eliminate_numeric(rows, ncols) -> Elimination:
    F = [[Fraction(int(e.p), int(e.q)) for e in r] for r in rows]
    pivots, values = [], []
    r = 0
    for col in range(ncols):
        if r >= len(F):
            break
        k = next((k for k in range(r, len(F)) if F[k][col] != 0), None)
        if k is None:
            continue
        F[r], F[k] = F[k], F[r]
        p = F[r][col]
        for k in range(r + 1, len(F)):
            a = F[k][col]
            if a:
                f = a / p
                F[k] = [x - f * y for x, y in zip(F[k], F[r])]
        pivots.append((r, col))
        values.append(sp.Rational(p.numerator, p.denominator))
        r += 1
    out = [[sp.Rational(x.numerator, x.denominator) for x in row] for row in F]
    if not out:
        out = []
    return Elimination(out, ncols, pivots, values, numeric=True)


def nullspace(E: Elimination) -> list[list]:
    """Basis of the right kernel of the coefficient block, one vector per free column."""
    basis = []
    for f in E.free_columns():
        x = [sp.Integer(0)] * E.ncols
        x[f] = sp.Integer(1)
        _back_substitute(E, x, None)
        basis.append(_clear_denominators([normalize(e) for e in x]))
    return basis


def particular_solution(E: Elimination, aug_col: int) -> list:
    x = [sp.Integer(0)] * E.ncols
    _back_substitute(E, x, aug_col)
    return [normalize(e) for e in x]


def _back_substitute(E: Elimination, x: list, aug_col: int | None):
    for r, c in reversed(E.pivots):
        row = E.rows[r]
        s = sum((row[j] * x[j] for j in range(c + 1, E.ncols) if x[j] != 0), sp.Integer(0))
        rhs = row[E.ncols + aug_col] if aug_col is not None else 0
        x[c] = (rhs - s) / row[c]


def _clear_denominators(v: list) -> list:
    dens = [sp.fraction(e)[1] for e in v if e != 0]
    if not dens or all(d == 1 for d in dens):
        return v
    l = reduce(sp.lcm, dens)
    return [normalize(e * l) for e in v]


def solvability_conditions(E: Elimination, aug_col: int, reducer=None) -> list:
    """Right-hand sides of zero rows that must vanish for a solution to exist."""
    red = reducer or normalize
    out = []
    for r in range(E.rank, len(E.rows)):
        e = red(E.rows[r][E.ncols + aug_col])
        if e != 0 and not is_zero(e).zero:
            out.append(e)
    return out


def minor_certificate(M: Sequence[Sequence], ncols: int, reducer=None,
                      tries: int = 8) -> sp.Expr:
    """gcd of maximal minors found under several row orders.

    Any single maximal minor certifies the rank off its zero set; the gcd of
    several is a smaller excluded locus.  The result is made primitive with a
    fixed sign.
    """
    rows = [list(r) for r in M if any(sp.sympify(e) != 0 for e in r[:ncols])]
    first = eliminate(rows, ncols, reducer)
    cert = first.certificate
    if cert.is_Number:
        return sp.Integer(1)
    rank = first.rank
    minors = [cert]
    for shift in range(1, min(tries, len(rows))):
        rot = rows[shift:] + rows[:shift]
        E = eliminate(rot, ncols, reducer, simplest=False)
        if E.rank == rank:
            minors.append(E.certificate)
    g = normalize(minors[0])
    for mnr in minors[1:]:
        g = sp.gcd(sp.fraction(g)[0], sp.fraction(normalize(mnr))[0])
        if g.is_Number:
            return sp.Integer(1)
    return canonical_sign(_radicands(g))


def _radicands(e):
    """Replace each root factor by its radicand; both vanish on the same set."""
    _, factors = sp.factor_list(sp.fraction(sp.factor(e))[0])
    out = sp.Integer(1)
    for f, k in factors:
        if f.is_Pow and f.exp.is_Rational and not f.exp.is_Integer:
            f, k = f.base, 1
        elif not sp.sympify(k).is_Integer:
            k = 1
        out *= f ** k
    return out if not out.is_Number else sp.Integer(1)
