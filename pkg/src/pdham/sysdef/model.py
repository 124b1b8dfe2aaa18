"""Typed objects over a single bundle chart."""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Mapping

import sympy as sp

from ..symexpr import Expr, SymbolTable, jet_symbol, normalize


class ChartMismatch(ValueError):
    pass


class Chart(SymbolTable):
    """One adapted chart: ordered base and fiber coordinates plus declarations."""

    def __init__(self, base: Iterable[str], fiber: Iterable[str],
                 functions: Mapping[str, Iterable[str]] | None = None,
                 constants: Mapping[str, str | None] | None = None):
        self.base = tuple(base)
        self.fiber = tuple(fiber)
        if not self.base:
            raise ValueError("n ≥ 1 required")
        if not self.fiber:
            raise ValueError("m ≥ 1 required")
        names = list(self.base) + list(self.fiber)
        if len(set(names)) != len(names):
            raise ValueError("coordinate names must be distinct")
        super().__init__(names, functions, constants)

    @property
    def n(self) -> int:
        return len(self.base)

    @property
    def m(self) -> int:
        return len(self.fiber)

    def x(self, i: int) -> sp.Symbol:
        return sp.Symbol(self.base[i])

    def y(self, a: int) -> sp.Symbol:
        return sp.Symbol(self.fiber[a])

    @property
    def xs(self) -> list:
        return [sp.Symbol(s) for s in self.base]

    @property
    def ys(self) -> list:
        return [sp.Symbol(s) for s in self.fiber]

    def jet(self, i: int, a: int) -> sp.Symbol:
        return jet_symbol(self.base[i], self.fiber[a])

    def jets(self) -> list:
        return [[self.jet(i, a) for a in range(self.m)] for i in range(self.n)]

    def _key(self):
        return (self.base, self.fiber, tuple(sorted(self.functions.items())),
                tuple(sorted(self.constants.items(), key=lambda t: t[0])))

    def __eq__(self, other):
        return isinstance(other, Chart) and self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    def __repr__(self):
        return f"Chart(base={self.base}, fiber={self.fiber})"

    def same_coordinates(self, other: "Chart") -> bool:
        return self.base == other.base and self.fiber == other.fiber


def require_same_chart(*objs) -> Chart:
    chart = objs[0].chart
    for o in objs[1:]:
        if not chart.same_coordinates(o.chart):
            raise ChartMismatch(f"chart mismatch: {chart!r} vs {o.chart!r}")
    return chart


def _exprs(values) -> tuple:
    return tuple(sp.sympify(v) for v in values)


@dataclass(frozen=True, eq=False)
class Form0:
    """Horizontal (n-1)-form f^i d^{n-1}x_i."""

    chart: Chart
    f: tuple

    def __post_init__(self):
        object.__setattr__(self, "f", _exprs(self.f))
        if len(self.f) != self.chart.n:
            raise ValueError(f"Form0 needs {self.chart.n} components, got {len(self.f)}")

    @classmethod
    def zero(cls, chart: Chart) -> "Form0":
        return cls(chart, [0] * chart.n)

    def components(self):
        for i, e in enumerate(self.f):
            yield f"f[{self.chart.base[i]}]", e

    def map(self, fn) -> "Form0":
        return Form0(self.chart, [fn(e) for e in self.f])

    def __add__(self, other):
        return Form0(self.chart, [a + b for a, b in zip(self.f, other.f)])

    def __neg__(self):
        return self.map(lambda e: -e)

    def __sub__(self, other):
        return self + (-other)


@dataclass(frozen=True, eq=False)
class Form1:
    """theta^i_a dy^a d^{n-1}x_i - H d^n x."""

    chart: Chart
    theta: tuple
    H: Expr

    def __post_init__(self):
        th = tuple(_exprs(row) for row in self.theta)
        object.__setattr__(self, "theta", th)
        object.__setattr__(self, "H", sp.sympify(self.H))
        if len(th) != self.chart.n or any(len(r) != self.chart.m for r in th):
            raise ValueError("Form1 needs an n-by-m theta array")

    @classmethod
    def zero(cls, chart: Chart) -> "Form1":
        return cls(chart, [[0] * chart.m for _ in range(chart.n)], 0)

    def components(self):
        c = self.chart
        for i in range(c.n):
            for a in range(c.m):
                yield f"th[{c.base[i]}; {c.fiber[a]}]", self.theta[i][a]
        yield "h", self.H

    def map(self, fn) -> "Form1":
        return Form1(self.chart, [[fn(e) for e in row] for row in self.theta], fn(self.H))

    def __add__(self, other):
        return Form1(self.chart,
                     [[a + b for a, b in zip(r, s)] for r, s in zip(self.theta, other.theta)],
                     self.H + other.H)

    def __neg__(self):
        return self.map(lambda e: -e)

    def __sub__(self, other):
        return self + (-other)


@dataclass(frozen=True, eq=False)
class Form2:
    """omega^i_ab dy^a dy^b d^{n-1}x_i + omega_a dy^a d^n x.

    Only the a<b entries of the skew array are stored, keyed by (i, a, b).
    """

    chart: Chart
    w: Mapping
    v: tuple

    def __post_init__(self):
        c = self.chart
        clean = {}
        for (i, a, b), e in dict(self.w).items():
            if not (0 <= i < c.n and 0 <= a < b < c.m):
                raise ValueError(f"bad Form2 index {(i, a, b)}")
            e = sp.sympify(e)
            if e != 0:
                clean[(i, a, b)] = e
        object.__setattr__(self, "w", clean)
        object.__setattr__(self, "v", _exprs(self.v))
        if len(self.v) != c.m:
            raise ValueError("Form2 needs m components omega_a")

    @classmethod
    def zero(cls, chart: Chart) -> "Form2":
        return cls(chart, {}, [0] * chart.m)

    @classmethod
    def from_full(cls, chart: Chart, W, v) -> "Form2":
        """Build from a full array W[i][a][b] by taking its skew part."""
        w = {}
        for i in range(chart.n):
            for a, b in combinations(range(chart.m), 2):
                w[(i, a, b)] = (sp.sympify(W[i][a][b]) - sp.sympify(W[i][b][a])) / 2
        return cls(chart, w, v)

    def W(self, i: int, a: int, b: int) -> Expr:
        if a == b:
            return sp.Integer(0)
        if a < b:
            return self.w.get((i, a, b), sp.Integer(0))
        return -self.w.get((i, b, a), sp.Integer(0))

    def full(self) -> list:
        c = self.chart
        return [[[self.W(i, a, b) for b in range(c.m)] for a in range(c.m)] for i in range(c.n)]

    def components(self):
        c = self.chart
        for i in range(c.n):
            for a, b in combinations(range(c.m), 2):
                yield f"w[{c.base[i]}; {c.fiber[a]}, {c.fiber[b]}]", self.W(i, a, b)
        for a in range(c.m):
            yield f"v[{c.fiber[a]}]", self.v[a]

    def map(self, fn) -> "Form2":
        return Form2(self.chart, {k: fn(e) for k, e in self.w.items()}, [fn(e) for e in self.v])

    def __add__(self, other):
        keys = set(self.w) | set(other.w)
        return Form2(self.chart, {k: self.w.get(k, 0) + other.w.get(k, 0) for k in keys},
                     [a + b for a, b in zip(self.v, other.v)])

    def __neg__(self):
        return self.map(lambda e: -e)

    def __sub__(self, other):
        return self + (-other)


@dataclass(frozen=True, eq=False)
class VerticalField:
    chart: Chart
    Y: tuple

    def __post_init__(self):
        object.__setattr__(self, "Y", _exprs(self.Y))
        if len(self.Y) != self.chart.m:
            raise ValueError(f"field needs {self.chart.m} components")

    @classmethod
    def zero(cls, chart: Chart) -> "VerticalField":
        return cls(chart, [0] * chart.m)

    def components(self):
        for a, e in enumerate(self.Y):
            yield self.chart.fiber[a], e

    def map(self, fn) -> "VerticalField":
        return VerticalField(self.chart, [fn(e) for e in self.Y])


@dataclass(frozen=True, eq=False)
class Connection:
    """Components nabla^a_i stored as nabla[i][a]."""

    chart: Chart
    nabla: tuple

    def __post_init__(self):
        nb = tuple(_exprs(r) for r in self.nabla)
        object.__setattr__(self, "nabla", nb)
        if len(nb) != self.chart.n or any(len(r) != self.chart.m for r in nb):
            raise ValueError("connection needs an n-by-m array")

    @classmethod
    def jets(cls, chart: Chart) -> "Connection":
        return cls(chart, chart.jets())

    def components(self):
        c = self.chart
        for i in range(c.n):
            for a in range(c.m):
                yield f"{c.fiber[a]}_{c.base[i]}", self.nabla[i][a]


@dataclass(frozen=True, eq=False)
class CoForm:
    """c_b d^V y^b (x) d^n x, the result of inserting a connection into a 2-form."""

    chart: Chart
    c: tuple

    def components(self):
        for b, e in enumerate(self.c):
            yield f"c[{self.chart.fiber[b]}]", e


@dataclass(frozen=True, eq=False)
class BundleMap:
    source: Chart
    target: Chart
    comps: tuple

    def __post_init__(self):
        object.__setattr__(self, "comps", _exprs(self.comps))
        if len(self.comps) != self.target.m:
            raise ValueError("bundle map needs one component per target fiber coordinate")
        if self.source.base != self.target.base:
            raise ChartMismatch("bundle maps must cover the identity on the base")

    @property
    def chart(self) -> Chart:
        return self.source

    def binding(self) -> dict:
        return {sp.Symbol(name): e for name, e in zip(self.target.fiber, self.comps)}

    def components(self):
        for name, e in zip(self.target.fiber, self.comps):
            yield name, e


@dataclass(frozen=True, eq=False)
class ConstraintSet:
    chart: Chart
    exprs: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "exprs", _exprs(self.exprs))

    def __len__(self):
        return len(self.exprs)

    def components(self):
        for k, e in enumerate(self.exprs):
            yield f"C{k + 1}", e


@dataclass(frozen=True, eq=False)
class PDSystem:
    """Residuals in chart symbols plus jet placeholders D[i][a]."""

    chart: Chart
    residuals: tuple
    labels: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "residuals", _exprs(self.residuals))
        labels = tuple(self.labels) or tuple(f"E{k + 1}" for k in range(len(self.residuals)))
        object.__setattr__(self, "labels", labels)

    def components(self):
        return zip(self.labels, self.residuals)

    def normalized(self) -> "PDSystem":
        return PDSystem(self.chart, [normalize(e) for e in self.residuals], self.labels)


@dataclass(frozen=True)
class Relation:
    """Side relation ``atom = rhs`` used by linear substitution of the atom."""

    lhs: Expr
    rhs: Expr


@dataclass(eq=False)
class MapDecl:
    name: str
    target: str
    comps: dict


@dataclass(eq=False)
class SystemModel:
    chart: Chart
    forms: dict = field(default_factory=dict)
    fields: dict = field(default_factory=dict)
    currents: dict = field(default_factory=dict)
    maps: dict = field(default_factory=dict)
    constraints: ConstraintSet | None = None
    relations: tuple = ()
    simulate: dict | None = None
    # raw component maps (name -> {coordinate name: Expr}) kept for validation
    raw_fields: dict = field(default_factory=dict)
    raw_currents: dict = field(default_factory=dict)

    def form(self, name: str, degree: int | None = None):
        if name not in self.forms:
            raise KeyError(f"no form named {name!r}")
        f = self.forms[name]
        if degree is not None and form_degree(f) != degree:
            raise KeyError(f"form {name!r} has degree {form_degree(f)}, expected {degree}")
        return f

    def field(self, name: str) -> VerticalField:
        if name not in self.fields:
            raise KeyError(f"no field named {name!r}")
        return self.fields[name]

    def current(self, name: str) -> Form0:
        if name in self.currents:
            return self.currents[name]
        if name in self.forms and isinstance(self.forms[name], Form0):
            return self.forms[name]
        raise KeyError(f"no current named {name!r}")

    def bundle_map(self, name: str, target: Chart) -> BundleMap:
        if name not in self.maps:
            raise KeyError(f"no map named {name!r}")
        decl = self.maps[name]
        missing = [y for y in target.fiber if y not in decl.comps]
        if missing:
            raise KeyError(f"map {name!r} lacks components for {', '.join(missing)}")
        return BundleMap(self.chart, target, [decl.comps[y] for y in target.fiber])

    def constraint_set(self) -> ConstraintSet:
        return self.constraints or ConstraintSet(self.chart, ())


def form_degree(f) -> int:
    return {Form0: 0, Form1: 1, Form2: 2}[type(f)]
