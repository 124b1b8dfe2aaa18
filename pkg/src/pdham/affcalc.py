"""Calculus of affine forms in components.

All operations take and return the typed objects of ``sysdef.model`` and
keep every coefficient normalized.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import sympy as sp

from .symexpr import is_zero, normalize
from .sysdef.model import (CoForm, Connection, Form0, Form1, Form2, VerticalField,
                           require_same_chart)


class NotClosed(ValueError):
    pass


class UnsupportedClass(ValueError):
    pass


def delta0(f: Form0) -> Form1:
    c = f.chart
    theta = [[normalize(sp.diff(f.f[i], y)) for y in c.ys] for i in range(c.n)]
    H = normalize(-sum((sp.diff(f.f[i], c.x(i)) for i in range(c.n)), sp.Integer(0)))
    return Form1(c, theta, H)


def delta1(th: Form1) -> Form2:
    c = th.chart
    ys = c.ys
    w = {}
    for i in range(c.n):
        for a, b in combinations(range(c.m), 2):
            w[(i, a, b)] = normalize((sp.diff(th.theta[i][b], ys[a])
                                      - sp.diff(th.theta[i][a], ys[b])) / 2)
    v = [normalize(-(sp.diff(th.H, ys[a])
                     + sum((sp.diff(th.theta[i][a], c.x(i)) for i in range(c.n)), sp.Integer(0))))
         for a in range(c.m)]
    return Form2(c, w, v)


@dataclass(frozen=True)
class Closedness:
    r1: dict   # (i, a, b, c) -> residual, a<b<c
    r2: dict   # (a, b) -> residual, a<b

    def items(self, chart):
        f = chart.fiber
        for (i, a, b, c), e in self.r1.items():
            yield f"R1[{chart.base[i]}; {f[a]}, {f[b]}, {f[c]}]", e
        for (a, b), e in self.r2.items():
            yield f"R2[{f[a]}, {f[b]}]", e


def closedness_residuals(om: Form2) -> Closedness:
    c = om.chart
    ys = c.ys
    r1, r2 = {}, {}
    for i in range(c.n):
        for a, b, cc in combinations(range(c.m), 3):
            e = (sp.diff(om.W(i, b, cc), ys[a]) + sp.diff(om.W(i, cc, a), ys[b])
                 + sp.diff(om.W(i, a, b), ys[cc])) / 3
            r1[(i, a, b, cc)] = normalize(e)
    for a, b in combinations(range(c.m), 2):
        e = sum((sp.diff(om.W(i, a, b), c.x(i)) for i in range(c.n)), sp.Integer(0))
        e += (sp.diff(om.v[b], ys[a]) - sp.diff(om.v[a], ys[b])) / 2
        r2[(a, b)] = normalize(e)
    return Closedness(r1, r2)


def is_closed(om: Form2) -> bool:
    cl = closedness_residuals(om)
    return all(is_zero(e).zero for e in list(cl.r1.values()) + list(cl.r2.values()))


def insert_vertical(Y: VerticalField, om: Form2) -> Form1:
    c = require_same_chart(Y, om)
    theta = [[normalize(2 * sum((om.W(i, a, b) * Y.Y[a] for a in range(c.m)), sp.Integer(0)))
              for b in range(c.m)] for i in range(c.n)]
    H = normalize(-sum((om.v[a] * Y.Y[a] for a in range(c.m)), sp.Integer(0)))
    return Form1(c, theta, H)


def linear_part(om: Form2) -> list:
    """Full skew array W[i][a][b]."""
    return om.full()


def insert_connection(nb: Connection, om: Form2) -> CoForm:
    c = require_same_chart(nb, om)
    out = []
    for b in range(c.m):
        e = om.v[b] - 2 * sum((om.W(i, a, b) * nb.nabla[i][a]
                               for i in range(c.n) for a in range(c.m)), sp.Integer(0))
        out.append(normalize(e))
    return CoForm(c, tuple(out))


def insert_vertical_coform(Y: VerticalField, cf: CoForm) -> sp.Expr:
    c = require_same_chart(Y, cf)
    return normalize(sum((cf.c[b] * Y.Y[b] for b in range(c.m)), sp.Integer(0)))


def insert_connection1(nb: Connection, th: Form1) -> sp.Expr:
    c = require_same_chart(nb, th)
    e = sum((th.theta[i][a] * nb.nabla[i][a] for i in range(c.n) for a in range(c.m)),
            sp.Integer(0))
    return normalize(e - th.H)


def lie_derivative_current(Y: VerticalField, f: Form0) -> Form0:
    c = require_same_chart(Y, f)
    return Form0(c, [normalize(sum((Y.Y[a] * sp.diff(f.f[i], c.y(a)) for a in range(c.m)),
                                   sp.Integer(0))) for i in range(c.n)])


def field_bracket(Y1: VerticalField, Y2: VerticalField) -> VerticalField:
    c = require_same_chart(Y1, Y2)
    ys = c.ys
    return VerticalField(c, [normalize(sum((Y1.Y[a] * sp.diff(Y2.Y[b], ys[a])
                                            - Y2.Y[a] * sp.diff(Y1.Y[b], ys[a])
                                            for a in range(c.m)), sp.Integer(0)))
                             for b in range(c.m)])


# -- potentials -----------------------------------------------------------

_T = sp.Dummy("t")


def _check_fiber_polynomial(e, ys):
    e = normalize(e)
    if e == 0:
        return
    num, den = sp.fraction(e)
    if any(den.has(y) for y in ys):
        raise UnsupportedClass("component has fiber-dependent denominator")
    try:
        p = sp.Poly(num, *ys)
    except sp.PolynomialError:
        raise UnsupportedClass("component is not polynomial in the fiber coordinates") from None
    for coeff in p.coeffs():
        if any(coeff.has(y) for y in ys):
            raise UnsupportedClass("component is not polynomial in the fiber coordinates")


def _scaled(e, ys):
    return e.xreplace({y: _T * y for y in ys})


def _integrate01(e):
    """Integral over t in [0, 1] of a polynomial in t."""
    e = sp.expand(e)
    if e == 0:
        return e
    poly = sp.Poly(e, _T)
    return normalize(sum((cf / (k + 1) for (k,), cf in poly.terms()), sp.Integer(0)))


def potential(om: Form2) -> Form1:
    """A Form1 theta with delta1(theta) = om, by the fiber-radial homotopy."""
    c = om.chart
    ys = c.ys
    for _, e in om.components():
        _check_fiber_polynomial(e, ys)
    if not is_closed(om):
        raise NotClosed("form is not closed")
    zero = sp.Integer(0)
    theta = [[_integrate01(-2 * _T * sum((_scaled(om.W(i, a, b), ys) * ys[b]
                                          for b in range(c.m)), zero))
              for a in range(c.m)] for i in range(c.n)]
    G = [normalize(-om.v[a] - sum((sp.diff(theta[i][a], c.x(i)) for i in range(c.n)), zero))
         for a in range(c.m)]
    H = _integrate01(sum((_scaled(G[a], ys) * ys[a] for a in range(c.m)), zero))
    return Form1(c, theta, H)
