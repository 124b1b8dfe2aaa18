"""Symmetry/current pairs, determining systems and the bracket on currents."""

from __future__ import annotations

from dataclasses import dataclass

import sympy as sp
from sympy.core.function import AppliedUndef

from .affcalc import field_bracket, insert_vertical, lie_derivative_current
from .symexpr import NonPolynomialError, Verdict, is_zero, normalize, poly_coefficients
from .sysdef.model import Form0, Form2, Relation, VerticalField, require_same_chart


class ConventionError(AssertionError):
    """The two bracket representations disagree; a sign convention is broken."""


class NotAPair(ValueError):
    pass


# -- side relations -------------------------------------------------------

def _derivative_parts(d):
    counts = {}
    for v, k in d.variable_count:
        counts[v] = counts.get(v, 0) + int(k)
    return d.expr, counts


def reduce_relations(e, relations=()) -> sp.Expr:
    """Eliminate each relation's designated atom, including its derivatives."""
    e = sp.sympify(e)
    if not relations:
        return normalize(e)
    for _ in range(20):
        before = e
        for rel in relations:
            e = _apply_relation(e, rel)
        if e == before:
            break
    return normalize(e)


def _apply_relation(e, rel: Relation):
    lhs, rhs = rel.lhs, rel.rhs
    if not isinstance(lhs, sp.Derivative):
        return e.subs(lhs, rhs).doit() if e.has(lhs) else e
    base, need = _derivative_parts(lhs)
    mapping = {}
    for d in e.atoms(sp.Derivative):
        f, have = _derivative_parts(d)
        if f != base or any(have.get(v, 0) < k for v, k in need.items()):
            continue
        extra = []
        for v, k in have.items():
            extra += [v] * (k - need.get(v, 0))
        mapping[d] = sp.diff(rhs, *extra) if extra else rhs
    return e.xreplace(mapping) if mapping else e


# -- residuals ------------------------------------------------------------

@dataclass(frozen=True)
class NoetherResidual:
    """Components of i_Y w - delta f: A[i][b] and B."""

    chart: object
    A: tuple
    B: sp.Expr

    def items(self):
        c = self.chart
        for i in range(c.n):
            for b in range(c.m):
                yield f"A[{c.base[i]}; {c.fiber[b]}]", self.A[i][b]
        yield "B", self.B


def noether_residual(om: Form2, Y: VerticalField, f: Form0) -> NoetherResidual:
    c = require_same_chart(om, Y, f)
    iy = insert_vertical(Y, om)
    A = tuple(tuple(normalize(iy.theta[i][b] - sp.diff(f.f[i], c.y(b))) for b in range(c.m))
              for i in range(c.n))
    # B = w_a Y^a - d_i f^i, i.e. minus the H-slot difference
    B = normalize(-iy.H - sum((sp.diff(f.f[i], c.x(i)) for i in range(c.n)), sp.Integer(0)))
    return NoetherResidual(c, A, B)


@dataclass(frozen=True)
class PairVerdict:
    status: str                  # verified / falsified / unknown
    items: tuple                 # (label, reduced expr, ZeroTest)

    @property
    def verified(self) -> bool:
        return self.status == "verified"

    def offending(self):
        return [(k, e, t) for k, e, t in self.items if not t.zero]


def _overall(tests) -> str:
    if all(t.zero for t in tests):
        return "verified"
    if any(t.verdict is Verdict.NONZERO for t in tests):
        return "falsified"
    return "unknown"


def is_noether_pair(om: Form2, Y: VerticalField, f: Form0, relations=()) -> PairVerdict:
    res = noether_residual(om, Y, f)
    items = []
    for label, e in res.items():
        r = reduce_relations(e, relations)
        items.append((label, r, is_zero(r)))
    return PairVerdict(_overall([t for _, _, t in items]), tuple(items))


# -- determining systems --------------------------------------------------

def sqrt_norm(e, radicand) -> sp.Expr:
    """Rationalize ``e`` in r = radicand^(1/2): write the numerator as
    c0 + c1*r and return c0^2 - c1^2*radicand, which vanishes when e does."""
    radicand = sp.sympify(radicand)
    g = sp.Dummy("r")

    def rewrite(node):
        if isinstance(node, sp.Pow) and node.exp.is_Rational and \
                normalize(node.base - radicand) == 0 and node.exp.q == 2:
            return g ** int(node.exp * 2)
        if node.args and not isinstance(node, (AppliedUndef, sp.Derivative)):
            return node.func(*[rewrite(a) for a in node.args])
        return node

    num, _ = sp.fraction(sp.cancel(sp.together(rewrite(sp.sympify(e)))))
    num = sp.rem(sp.expand(num), g ** 2 - radicand, g) if num.has(g) else num
    poly = sp.Poly(num, g)
    c0, c1 = poly.coeff_monomial(1), poly.coeff_monomial(g)
    return normalize(c0 ** 2 - c1 ** 2 * radicand)


@dataclass(frozen=True)
class DeterminingSystem:
    equations: tuple   # (label, expr) pairs, each expr = 0

    def __len__(self):
        return len(self.equations)


def _proportional(a, b) -> bool:
    q = normalize(a / b)
    return q.is_Number and q != 0


def determining_system(om: Form2, Y: VerticalField, f: Form0, split_vars=None,
                       square=None) -> DeterminingSystem:
    """Equations delta f - i_Y w = 0 with the unknown functions kept formal."""
    res = noether_residual(om, Y, f)
    raw = [(label, normalize(-e)) for label, e in res.items()]
    raw = [(k, e) for k, e in raw if e != 0]
    if square is not None:
        raw = [(k, sqrt_norm(e, square)) for k, e in raw]
    if split_vars:
        split = []
        for label, e in raw:
            try:
                coeffs = poly_coefficients(e, split_vars)
            except NonPolynomialError as exc:
                raise NonPolynomialError(f"{label}: {exc}") from None
            for mono, cf in sorted(coeffs.items(), key=lambda t: (-t[0].degree(), t[0])):
                split.append((f"{label}[{mono}]", cf))
        raw = split
    out = []
    for label, e in raw:
        if not any(_proportional(e, o) for _, o in out):
            out.append((label, e))
    return DeterminingSystem(tuple(out))


# -- bracket --------------------------------------------------------------

def _contraction(om: Form2, Y1: VerticalField, Y2: VerticalField) -> Form0:
    """i_{Y1} i_{Y2} w on the d^{n-1}x_i slots: Y1^b * 2 w^i_ab Y2^a."""
    c = om.chart
    return Form0(c, [normalize(sum((Y1.Y[b] * 2 * om.W(i, a, b) * Y2.Y[a]
                                    for a in range(c.m) for b in range(c.m)), sp.Integer(0)))
                     for i in range(c.n)])


BRACKET_SIGN = 1   # L_{Y1} f2 = BRACKET_SIGN * i_{Y1} i_{Y2} w, calibrated on Klein-Gordon


def poisson_bracket(om: Form2, pair1, pair2, relations=(), check: bool = True) -> Form0:
    Y1, (Y2, f2) = pair1[0], pair2
    if check:
        for k, (Y, f) in enumerate((pair1, pair2), 1):
            v = is_noether_pair(om, Y, f, relations)
            if not v.verified:
                raise NotAPair(f"pair {k} is {v.status}")
    lie = lie_derivative_current(Y1, f2)
    alt = _contraction(om, Y1, Y2)
    for a, b in zip(lie.f, alt.f):
        d = reduce_relations(a - BRACKET_SIGN * b, relations)
        if not is_zero(d).zero:
            raise ConventionError("bracket representations disagree")
    return lie.map(lambda e: reduce_relations(e, relations))


@dataclass(frozen=True)
class TrivialVerdict:
    trivial: bool
    reasons: tuple

    @property
    def status(self) -> str:
        return "verified" if self.trivial else "falsified"


def is_trivial_current(f: Form0, relations=()) -> TrivialVerdict:
    c = f.chart
    comps = [reduce_relations(e, relations) for e in f.f]
    reasons = []
    for i, e in enumerate(comps):
        if any(is_zero(sp.diff(e, y)).verdict is not Verdict.ZERO for y in c.ys if e.has(y)):
            reasons.append(f"f[{c.base[i]}] depends on fiber coordinates")
    div = reduce_relations(sum((sp.diff(comps[i], c.x(i)) for i in range(c.n)), sp.Integer(0)),
                           relations)
    t = is_zero(div)
    if not t.zero:
        reasons.append("divergence does not vanish")
    return TrivialVerdict(not reasons, tuple(reasons))


def jacobi_defect(om: Form2, p1, p2, p3, relations=()) -> Form0:
    """{f1,{f2,f3}} - {{f1,f2},f3} - {f2,{f1,f3}} with [Y1,Y2] for {f1,f2}."""
    Y1, Y2, Y3 = p1[0], p2[0], p3[0]

    def br(a, b):
        return poisson_bracket(om, a, b, relations, check=False)

    f23 = br(p2, p3)
    f13 = br(p1, p3)
    f12 = br(p1, p2)
    t1 = br(p1, (field_bracket(Y2, Y3), f23))
    t2 = br((field_bracket(Y1, Y2), f12), p3)
    t3 = br(p2, (field_bracket(Y1, Y3), f13))
    return Form0(om.chart, [reduce_relations(a - b - c, relations)
                            for a, b, c in zip(t1.f, t2.f, t3.f)])


__all__ = [
    "BRACKET_SIGN", "ConventionError", "DeterminingSystem", "NoetherResidual", "NotAPair",
    "PairVerdict", "TrivialVerdict", "determining_system",
    "is_noether_pair", "is_trivial_current", "jacobi_defect", "noether_residual",
    "poisson_bracket", "reduce_relations", "sqrt_norm",
]
