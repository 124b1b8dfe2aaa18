"""Gauge reduction by verification: pull a candidate reduced system back
along a user-supplied projection and check the characterizing identities."""

from __future__ import annotations

from dataclasses import dataclass

import sympy as sp

from .hamilton import hamilton_residuals, kernel_full, kernel_vertical
from .linalg import RankUnknown
from .symexpr import Verdict, is_zero, normalize
from .sysdef.model import BundleMap, ChartMismatch, Form0, Form2, PDSystem


def _check_target(p: BundleMap, obj):
    if obj.chart != p.target:
        raise ChartMismatch("object does not live on the target of the map")


def _compose(e, p: BundleMap):
    return normalize(sp.sympify(e).xreplace(p.binding()))


def pullback_form0(p: BundleMap, ft: Form0) -> Form0:
    _check_target(p, ft)
    return Form0(p.source, [_compose(e, p) for e in ft.f])


def pullback_form2(p: BundleMap, wt: Form2) -> Form2:
    _check_target(p, wt)
    c, ct = p.source, p.target
    M = ct.m
    # Jacobian blocks: fiber partials J[a][A] and explicit base partials K[i][A]
    J = [[sp.diff(pA, y) for pA in p.comps] for y in c.ys]
    K = [[sp.diff(pA, x) for pA in p.comps] for x in c.xs]
    W = [[[_compose(wt.W(i, A, B), p) if A != B else sp.Integer(0) for B in range(M)]
          for A in range(M)] for i in range(c.n)]
    zero = sp.Integer(0)
    w = {}
    for i in range(c.n):
        for a in range(c.m):
            for b in range(a + 1, c.m):
                e = sum((W[i][A][B] * J[a][A] * J[b][B]
                         for A in range(M) if J[a][A] != 0
                         for B in range(M) if J[b][B] != 0), zero)
                w[(i, a, b)] = normalize(e)
    v = []
    for a in range(c.m):
        e = sum((_compose(wt.v[A], p) * J[a][A] for A in range(M) if J[a][A] != 0), zero)
        e += 2 * sum((W[i][A][B] * J[a][A] * K[i][B]
                      for i in range(c.n) for A in range(M) if J[a][A] != 0
                      for B in range(M) if K[i][B] != 0), zero)
        v.append(normalize(e))
    return Form2(c, w, v)


def pullback_jets(p: BundleMap, e) -> sp.Expr:
    """Compose with p and send D[i][A] to the total derivative of p^A."""
    c, ct = p.source, p.target
    sub = dict(p.binding())
    for i in range(c.n):
        for A in range(ct.m):
            pA = p.comps[A]
            sub[ct.jet(i, A)] = sp.diff(pA, c.x(i)) + sum(
                (c.jet(i, a) * sp.diff(pA, c.y(a)) for a in range(c.m)), sp.Integer(0))
    return normalize(sp.sympify(e).xreplace(sub))


def pullback_residuals(p: BundleMap, wt: Form2) -> PDSystem:
    sys_t = hamilton_residuals(wt)
    return PDSystem(p.source, [pullback_jets(p, e) for e in sys_t.residuals], sys_t.labels)


@dataclass(frozen=True)
class Check:
    status: str            # verified / falsified / unknown
    offending: tuple = ()  # (label, expr)

    @property
    def verified(self) -> bool:
        return self.status == "verified"


@dataclass(frozen=True)
class ReductionReport:
    pullback: Check
    vertical: Check
    reduced_kernel: Check

    @property
    def status(self) -> str:
        states = [self.pullback.status, self.vertical.status, self.reduced_kernel.status]
        if all(s == "verified" for s in states):
            return "verified"
        if "falsified" in states:
            return "falsified"
        return "unknown"

    def items(self):
        yield "pullback equals form", self.pullback
        yield "kernel is p-vertical", self.vertical
        yield "reduced form nondegenerate", self.reduced_kernel


def _check(pairs) -> Check:
    bad, unknown = [], False
    for label, e in pairs:
        t = is_zero(e)
        if not t.zero:
            bad.append((label, e))
            unknown |= t.verdict is not Verdict.NONZERO
    if not bad:
        return Check("verified")
    nonzero = any(is_zero(e).verdict is Verdict.NONZERO for _, e in bad)
    return Check("falsified" if nonzero or not unknown else "unknown", tuple(bad))


def verify_reduction(om: Form2, p: BundleMap, wt: Form2) -> ReductionReport:
    if om.chart != p.source:
        raise ChartMismatch("form does not live on the source of the map")
    _check_target(p, wt)
    c = p.source
    pb = pullback_form2(p, wt)
    diffs = [(k, normalize(e - o)) for (k, e), (_, o) in zip(pb.components(), om.components())]
    first = _check(diffs)

    try:
        basis = kernel_full(om).basis
    except RankUnknown as exc:
        second = Check("unknown", tuple(("pivot", e) for e in exc.candidates))
    else:
        pairs = []
        for n, V in enumerate(basis):
            for A, name in enumerate(p.target.fiber):
                e = sum((V.Y[a] * sp.diff(p.comps[A], c.y(a)) for a in range(c.m)), sp.Integer(0))
                pairs.append((f"V{n + 1}({name})", normalize(e)))
        second = _check(pairs)

    try:
        kt = kernel_vertical(wt)
    except RankUnknown as exc:
        third = Check("unknown", tuple(("pivot", e) for e in exc.candidates))
    else:
        third = Check("verified") if kt.dimension == 0 else Check(
            "falsified", tuple((f"kernel vector {n + 1}", sp.Matrix(V.Y).T)
                               for n, V in enumerate(kt.basis)))
    return ReductionReport(first, second, third)
