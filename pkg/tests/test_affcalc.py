import random

import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

import randgen
from pdham import affcalc
from pdham.symexpr import normalize
from pdham.sysdef import DiffForm, Form2, from_form, to_form


def exterior_d(df: DiffForm) -> DiffForm:
    out = DiffForm(df.chart, {})
    for k, v in df.terms.items():
        out = out + DiffForm.d(df.chart, v).wedge(DiffForm(df.chart, {k: sp.Integer(1)}))
    return out


def interior(Y, df: DiffForm) -> DiffForm:
    """Contraction with a vertical field on the first slot."""
    c = df.chart
    out = {}
    for k, v in df.terms.items():
        for j, idx in enumerate(k):
            if idx < c.m:
                rest = k[:j] + k[j + 1:]
                out[rest] = out.get(rest, 0) + (-1) ** j * v * Y.Y[idx]
    return DiffForm(c, out)


def same(a, b):
    return all(normalize(p - q) == 0 for (_, p), (_, q) in zip(a.components(), b.components()))


@pytest.mark.parametrize("seed", range(40))
def test_delta_is_the_exterior_derivative(seed):
    rng = random.Random(seed)
    c = randgen.chart(rng)
    f = randgen.form0(rng, c)
    th = randgen.form1(rng, c)
    assert same(affcalc.delta0(f), to_form(exterior_d(from_form(f)), 1))
    assert same(affcalc.delta1(th), to_form(exterior_d(from_form(th)), 2))


@pytest.mark.parametrize("seed", range(40))
def test_insert_vertical_is_contraction(seed):
    rng = random.Random(100 + seed)
    c = randgen.chart(rng)
    om = affcalc.delta1(randgen.form1(rng, c))
    Y = randgen.field(rng, c)
    assert same(affcalc.insert_vertical(Y, om), to_form(interior(Y, from_form(om)), 1))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(-3, 3), st.integers(-3, 3))
def test_delta_is_linear(seed, a, b):
    rng = random.Random(seed)
    c = randgen.chart(rng)
    t1, t2 = randgen.form1(rng, c), randgen.form1(rng, c)
    comb = t1.map(lambda e: a * e) + t2.map(lambda e: b * e)
    lhs = affcalc.delta1(comb)
    rhs = affcalc.delta1(t1).map(lambda e: a * e) + affcalc.delta1(t2).map(lambda e: b * e)
    assert same(lhs, rhs)


def test_cartan_formula_for_currents():
    # L_Y f = i_Y delta0 f for a vertical field acting on a current
    rng = random.Random(7)
    for _ in range(30):
        c = randgen.chart(rng)
        f, Y = randgen.form0(rng, c), randgen.field(rng, c)
        lhs = affcalc.lie_derivative_current(Y, f)
        rhs = [sum(Y.Y[a] * sp.diff(fi, c.y(a)) for a in range(c.m)) for fi in f.f]
        assert all(normalize(p - q) == 0 for p, q in zip(lhs.f, rhs))


def test_field_bracket_antisymmetric_and_jacobi():
    rng = random.Random(11)
    for _ in range(20):
        c = randgen.chart(rng)
        X, Y, Z = (randgen.field(rng, c, degree=2) for _ in range(3))
        br = affcalc.field_bracket
        s = [normalize(p + q) for p, q in zip(br(X, Y).Y, br(Y, X).Y)]
        assert all(e == 0 for e in s)
        jac = [normalize(p + q + r) for p, q, r in
               zip(br(X, br(Y, Z)).Y, br(Y, br(Z, X)).Y, br(Z, br(X, Y)).Y)]
        assert all(e == 0 for e in jac)


def test_potential_rejects_non_polynomial_and_non_closed(load):
    with pytest.raises(affcalc.UnsupportedClass):
        affcalc.potential(load("minimal_surface.pdh").form("omega", 2))
    with pytest.raises(affcalc.NotClosed):
        affcalc.potential(load("nonclosed.pdh").form("omega", 2))


def test_potential_of_zero():
    c = randgen.chart(random.Random(0), 2, 2)
    th = affcalc.potential(Form2.zero(c))
    assert all(e == 0 for _, e in th.components())
