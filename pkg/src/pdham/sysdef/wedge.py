"""Wedge-monomial arithmetic used to transcribe forms written as d(...) products."""

from __future__ import annotations

import sympy as sp

from ..symexpr import normalize
from .model import Chart, Form0, Form1, Form2


class WedgeError(ValueError):
    pass


def _sort_sign(idx: tuple) -> tuple[int, tuple]:
    """Sort a wedge index tuple; sign 0 when an index repeats."""
    if len(set(idx)) < len(idx):
        return 0, ()
    arr = list(idx)
    sign = 1
    for i in range(len(arr)):
        for j in range(len(arr) - 1 - i):
            if arr[j] > arr[j + 1]:
                arr[j], arr[j + 1] = arr[j + 1], arr[j]
                sign = -sign
    return sign, tuple(arr)


class DiffForm:
    """Sum of coefficient * d(c1)^...^d(ck) over chart coordinates.

    Coordinate k < m is fiber coordinate k; coordinate m + i is base i, so
    sorted monomials list fiber differentials before base ones.
    """

    def __init__(self, chart: Chart, terms: dict | None = None):
        self.chart = chart
        self.terms = {k: v for k, v in (terms or {}).items() if v != 0}

    @classmethod
    def d(cls, chart: Chart, e) -> "DiffForm":
        coords = chart.ys + chart.xs
        return cls(chart, {(k,): sp.diff(e, c) for k, c in enumerate(coords)})

    @classmethod
    def volume(cls, chart: Chart) -> "DiffForm":
        m = chart.m
        return cls(chart, {tuple(range(m, m + chart.n)): sp.Integer(1)})

    @classmethod
    def volume_minus(cls, chart: Chart, i: int) -> "DiffForm":
        """d^{n-1}x_i, the contraction of d^n x with the i-th base vector."""
        m = chart.m
        idx = tuple(m + j for j in range(chart.n) if j != i)
        return cls(chart, {idx: sp.Integer((-1) ** i)})

    def scale(self, s) -> "DiffForm":
        return DiffForm(self.chart, {k: v * s for k, v in self.terms.items()})

    def __add__(self, other):
        if not isinstance(other, DiffForm):
            if other == 0:
                return self
            raise WedgeError("cannot add a scalar to a form")
        out = dict(self.terms)
        for k, v in other.terms.items():
            out[k] = out.get(k, 0) + v
        return DiffForm(self.chart, out)

    __radd__ = __add__

    def __neg__(self):
        return self.scale(-1)

    def wedge(self, other: "DiffForm") -> "DiffForm":
        out: dict = {}
        for k1, v1 in self.terms.items():
            for k2, v2 in other.terms.items():
                sign, k = _sort_sign(k1 + k2)
                if sign:
                    out[k] = out.get(k, 0) + sign * v1 * v2
        return DiffForm(self.chart, out)

    def degree_split(self):
        """Yield (fiber indices, base indices, coefficient)."""
        m = self.chart.m
        for k, v in self.terms.items():
            v = normalize(v)
            if v == 0:
                continue
            yield tuple(a for a in k if a < m), tuple(c - m for c in k if c >= m), v

    def _missing_base(self, base_idx: tuple) -> int | None:
        n = self.chart.n
        if len(base_idx) != n - 1:
            return None
        missing = [i for i in range(n) if i not in base_idx]
        return missing[0]


def to_form(df: DiffForm, degree: int):
    """Read the component data of an affine form off a wedge expression."""
    c = df.chart
    n, m = c.n, c.m
    if degree == 0:
        f = [sp.Integer(0)] * n
        for fib, base, v in df.degree_split():
            i = df._missing_base(base)
            if fib or i is None:
                raise WedgeError("degree-0 forms must be horizontal (n-1)-forms")
            f[i] += v * (-1) ** i
        return Form0(c, f)
    if degree == 1:
        theta = [[sp.Integer(0)] * m for _ in range(n)]
        H = sp.Integer(0)
        for fib, base, v in df.degree_split():
            if len(fib) == 1 and len(base) == n - 1:
                i = df._missing_base(base)
                theta[i][fib[0]] += v * (-1) ** i
            elif not fib and len(base) == n:
                H -= v
            else:
                raise WedgeError("degree-1 forms need dy d^{n-1}x or d^n x monomials")
        return Form1(c, theta, H)
    if degree == 2:
        W = [[[sp.Integer(0)] * m for _ in range(m)] for _ in range(n)]
        v_ = [sp.Integer(0)] * m
        for fib, base, v in df.degree_split():
            if len(fib) == 2 and len(base) == n - 1:
                i = df._missing_base(base)
                a, b = fib
                W[i][a][b] += v * (-1) ** i
            elif len(fib) == 1 and len(base) == n:
                v_[fib[0]] += v
            else:
                raise WedgeError("degree-2 forms need dy dy d^{n-1}x or dy d^n x monomials")
        return Form2.from_full(c, W, v_)
    raise WedgeError(f"unsupported degree {degree}")


def from_form(form) -> DiffForm:
    """Inverse of to_form: the wedge expression of an affine form."""
    c = form.chart
    out = DiffForm(c)
    if isinstance(form, Form0):
        for i, e in enumerate(form.f):
            out = out + DiffForm.volume_minus(c, i).scale(e)
        return out
    if isinstance(form, Form1):
        for i in range(c.n):
            for a in range(c.m):
                dy = DiffForm(c, {(a,): sp.Integer(1)})
                out = out + dy.wedge(DiffForm.volume_minus(c, i)).scale(form.theta[i][a])
        return out + DiffForm.volume(c).scale(-form.H)
    if isinstance(form, Form2):
        for (i, a, b), e in form.w.items():
            dd = DiffForm(c, {(a, b): sp.Integer(1)})
            out = out + dd.wedge(DiffForm.volume_minus(c, i)).scale(2 * e)
        for a in range(c.m):
            dy = DiffForm(c, {(a,): sp.Integer(1)})
            out = out + dy.wedge(DiffForm.volume(c)).scale(form.v[a])
        return out
    raise WedgeError("not an affine form")
