"""Field equations, kernels, the constraint algorithm and the variational side."""

from __future__ import annotations

from dataclasses import dataclass

import sympy as sp

from .affcalc import insert_connection1
from .linalg import (eliminate, minor_certificate, nullspace, particular_solution,
                     solvability_conditions)
from .symexpr import canonical_sign, is_zero, normalize
from .sysdef.model import (Chart, Connection, ConstraintSet, Form1, Form2, PDSystem,
                           VerticalField)


class NonAffineLagrangian(ValueError):
    pass


def hamilton_residuals(om: Form2) -> PDSystem:
    """R_b = 2 w^i_ab D[i][a] - w_b, one residual per fiber coordinate."""
    c = om.chart
    res = []
    for b in range(c.m):
        e = 2 * sum((om.W(i, a, b) * c.jet(i, a) for i in range(c.n) for a in range(c.m)),
                    sp.Integer(0)) - om.v[b]
        res.append(normalize(e))
    return PDSystem(c, res, [f"R[{y}]" for y in c.fiber])


# -- constraint reduction -------------------------------------------------

class ConstraintReducer:
    """Simplification modulo a constraint set.

    Constraints linear in some fiber coordinate with constant coefficient are
    solved for it and substituted; the rest reduce numerators by one pass of
    polynomial division.
    """

    def __init__(self, chart: Chart, exprs=()):
        self.chart = chart
        self.subs: dict = {}
        self.divisors: list = []
        for e in exprs:
            e = sp.fraction(normalize(sp.sympify(e).xreplace(self.subs)))[0]
            if e == 0:
                continue
            solved = self._linear(e)
            if solved:
                y, rhs = solved
                self.subs = {k: normalize(v.xreplace({y: rhs})) for k, v in self.subs.items()}
                self.subs[y] = rhs
            else:
                self.divisors.append(sp.expand(e))
        self._gens = [y for y in chart.ys if any(d.has(y) for d in self.divisors)]

    def _linear(self, e):
        for y in reversed(self.chart.ys):
            if not e.has(y):
                continue
            try:
                p = sp.Poly(e, y)
            except sp.PolynomialError:
                continue
            if p.degree() == 1:
                lead = p.coeff_monomial(y)
                if lead.is_Number:
                    return y, normalize(-(e - lead * y) / lead)
        return None

    def __call__(self, e):
        e = normalize(sp.sympify(e).xreplace(self.subs) if self.subs else e)
        if not self.divisors or e == 0:
            return e
        num, den = sp.fraction(e)
        try:
            _, r = sp.reduced(sp.expand(num), self.divisors, *self._gens)
        except (sp.PolynomialError, sp.polys.polyerrors.PolificationFailed):
            return e
        return normalize(r / den)

    def implies_zero(self, e) -> bool:
        return is_zero(self(e)).zero


def _reducer(chart: Chart, constraints: ConstraintSet | None):
    exprs = constraints.exprs if constraints is not None else ()
    return ConstraintReducer(chart, exprs)


# -- kernels --------------------------------------------------------------

@dataclass(frozen=True)
class KernelResult:
    basis: tuple
    certificate: sp.Expr
    rank: int

    @property
    def dimension(self) -> int:
        return len(self.basis)


def _vertical_rows(om: Form2) -> list:
    c = om.chart
    return [[om.W(i, a, b) for a in range(c.m)] for i in range(c.n) for b in range(c.m)]


def kernel_vertical(om: Form2, constraints: ConstraintSet | None = None) -> KernelResult:
    """Basis of ker of the linear part over the function field, with certificate."""
    c = om.chart
    red = _reducer(c, constraints)
    rows = [r for r in _vertical_rows(om) if any(e != 0 for e in r)]
    if not rows:
        basis = [VerticalField(c, [1 if k == a else 0 for k in range(c.m)]) for a in range(c.m)]
        return KernelResult(tuple(basis), sp.Integer(1), 0)
    E = eliminate(rows, c.m, red)
    basis = tuple(VerticalField(c, v) for v in nullspace(E))
    cert = minor_certificate(rows, c.m, red)
    return KernelResult(basis, cert, E.rank)


@dataclass(frozen=True)
class FullKernel:
    vertical: KernelResult
    basis: tuple          # generic basis of ker w
    conditions: tuple     # w_a V^a for V in the vertical kernel basis
    certificate: sp.Expr

    def describe(self, chart) -> list[str]:
        from .symexpr import to_text
        out = []
        if len(self.basis) == self.vertical.dimension:
            out.append(f"ker w = ker of linear part, dimension {len(self.basis)}")
        else:
            out.append(f"ker w generically of dimension {len(self.basis)}")
            conds = ", ".join(f"{to_text(e, chart)} = 0" for e in self.conditions)
            out.append(f"equals ker of linear part (dimension {self.vertical.dimension}) where {conds}")
        return out


def kernel_full(om: Form2, constraints: ConstraintSet | None = None) -> FullKernel:
    c = om.chart
    red = _reducer(c, constraints)
    kv = kernel_vertical(om, constraints)
    conds = []
    for V in kv.basis:
        e = red(sum((om.v[a] * V.Y[a] for a in range(c.m)), sp.Integer(0)))
        if not is_zero(e).zero:
            conds.append(e)
    rows = [r for r in _vertical_rows(om) if any(e != 0 for e in r)] + [list(om.v)]
    if all(e == 0 for e in om.v) or not conds:
        basis = kv.basis
    else:
        E = eliminate(rows, c.m, red)
        basis = tuple(VerticalField(c, v) for v in nullspace(E))
    return FullKernel(kv, basis, tuple(canonical_sign(e) for e in conds), kv.certificate)


@dataclass(frozen=True)
class HamiltonianReport:
    hamiltonian: bool
    kernel: KernelResult

    @property
    def verdict(self) -> str:
        return "hamiltonian" if self.hamiltonian else "prehamiltonian (degenerate)"


def is_hamiltonian(om: Form2) -> HamiltonianReport:
    kv = kernel_vertical(om)
    return HamiltonianReport(kv.dimension == 0, kv)


# -- connections and constraints ------------------------------------------

@dataclass(frozen=True)
class ConnectionSolution:
    connection: Connection
    homogeneous_dim: int
    conditions: tuple
    certificate: sp.Expr

    @property
    def solvable(self) -> bool:
        return not self.conditions


def _connection_rows(om: Form2, constraints: ConstraintSet | None):
    """Rows over unknowns nabla^a_i (column i*m + a) with right-hand side last."""
    c = om.chart
    rows = []
    for b in range(c.m):
        row = [2 * om.W(i, a, b) for i in range(c.n) for a in range(c.m)]
        rows.append(row + [om.v[b]])
    for phi in (constraints.exprs if constraints is not None else ()):
        for i in range(c.n):
            row = [sp.Integer(0)] * (c.n * c.m)
            for a in range(c.m):
                row[i * c.m + a] = sp.diff(phi, c.y(a))
            rows.append(row + [-sp.diff(phi, c.x(i))])
    return rows


def _solve(om: Form2, constraints: ConstraintSet | None, tangency: bool):
    c = om.chart
    red = _reducer(c, constraints)
    rows = _connection_rows(om, constraints if tangency else None)
    N = c.n * c.m
    E = eliminate(rows, N, red)
    x = particular_solution(E, 0)
    conds = solvability_conditions(E, 0, red)
    nb = Connection(c, [[red(x[i * c.m + a]) for a in range(c.m)] for i in range(c.n)])
    return nb, N - E.rank, conds, E.certificate


def solve_connection(om: Form2, constraints: ConstraintSet | None = None) -> ConnectionSolution:
    """Solve 2 w^i_ab nabla^a_i = w_b modulo the given constraints."""
    nb, dim, conds, cert = _solve(om, constraints, tangency=False)
    return ConnectionSolution(nb, dim, tuple(_dedup(canonical_sign(e) for e in conds)), cert)


def _dedup(exprs):
    out = []
    for e in exprs:
        if e != 0 and not any(normalize(e - o) == 0 for o in out):
            out.append(e)
    return out


def _is_empty(C: ConstraintSet) -> bool:
    return any(normalize(e).is_Number and normalize(e) != 0 for e in C.exprs)


def constraint_step(om: Form2, C: ConstraintSet) -> ConstraintSet:
    """One pass: solvability and tangency conditions for a connection on C."""
    if _is_empty(C):
        return C
    _, _, conds, _ = _solve(om, C, tangency=True)
    red = _reducer(om.chart, C)
    new = list(C.exprs)
    for e in _dedup(canonical_sign(e) for e in conds):
        if not red.implies_zero(e):
            new.append(e)
    return ConstraintSet(om.chart, tuple(new))


@dataclass(frozen=True)
class ConstraintRun:
    stages: tuple
    terminated: bool
    empty: bool


def constraint_algorithm(om: Form2, max_steps: int = 10,
                         initial: ConstraintSet | None = None) -> ConstraintRun:
    C = initial or ConstraintSet(om.chart, ())
    stages = [C]
    for _ in range(max_steps):
        nxt = constraint_step(om, C)
        if len(nxt.exprs) == len(C.exprs):
            return ConstraintRun(tuple(stages), True, _is_empty(C))
        stages.append(nxt)
        C = nxt
        if _is_empty(C):
            return ConstraintRun(tuple(stages), True, True)
    return ConstraintRun(tuple(stages), False, _is_empty(C))


# -- variational correspondence -------------------------------------------

def lagrangian_of(th: Form1) -> sp.Expr:
    return insert_connection1(Connection.jets(th.chart), th)


def euler_lagrange(L, chart: Chart) -> PDSystem:
    """Variational derivatives of a Lagrangian affine in the jet placeholders."""
    L = sp.sympify(L)
    jets = [J for row in chart.jets() for J in row]
    for J in jets:
        dJ = sp.diff(L, J)
        if any(normalize(sp.diff(dJ, K)) != 0 for K in jets):
            raise NonAffineLagrangian("Lagrangian is not affine in the jet variables")
    res = []
    for b in range(chart.m):
        e = sp.diff(L, chart.y(b))
        for i in range(chart.n):
            p = sp.diff(L, chart.jet(i, b))
            e -= sp.diff(p, chart.x(i)) + sum((chart.jet(i, a) * sp.diff(p, chart.y(a))
                                               for a in range(chart.m)), sp.Integer(0))
        res.append(normalize(e))
    return PDSystem(chart, res, [f"EL[{y}]" for y in chart.fiber])

