import random

import pytest
import sympy as sp

import randgen
from pdham import affcalc, noether
from pdham.symexpr import normalize
from pdham.sysdef import Chart, Form0, Relation, VerticalField


def test_trivial_pair_verifies_and_perturbation_is_caught(load):
    m = load("wave.pdh")
    om = m.form("omega", 2)
    assert noether.is_noether_pair(om, m.field("Z"), m.current("ftriv")).verified
    bad = noether.is_noether_pair(om, m.field("Z"), m.current("fbad"))
    assert bad.status == "falsified"
    assert [k for k, _, _ in bad.offending()] == ["A[x1; u]"]
    assert noether.is_trivial_current(m.current("ftriv")).trivial


def test_bracket_refuses_unverified_pairs(load):
    m = load("wave.pdh")
    om = m.form("omega", 2)
    good = (m.field("Z"), m.current("ftriv"))
    with pytest.raises(noether.NotAPair):
        noether.poisson_bracket(om, (m.field("Z"), m.current("fbad")), good)


def test_residual_is_linear_in_the_pair():
    rng = random.Random(21)
    for _ in range(20):
        c = randgen.chart(rng)
        om = affcalc.delta1(randgen.form1(rng, c))
        Y1, Y2 = randgen.field(rng, c), randgen.field(rng, c)
        f1, f2 = randgen.form0(rng, c), randgen.form0(rng, c)
        Y = VerticalField(c, [a + 2 * b for a, b in zip(Y1.Y, Y2.Y)])
        f = Form0(c, [a + 2 * b for a, b in zip(f1.f, f2.f)])
        r, r1, r2 = (dict(noether.noether_residual(om, *p).items())
                     for p in ((Y, f), (Y1, f1), (Y2, f2)))
        assert all(normalize(r[k] - r1[k] - 2 * r2[k]) == 0 for k in r)


def test_translation_pair_by_hand():
    # omega = dp^du - p dp^dx, Y = d/du: i_Y omega = -dp, so delta f = i_Y omega gives f = -p
    c = Chart(("x",), ("u", "p"))
    p = sp.Symbol("p")
    om = affcalc.delta1(randgen.Form1(c, [[p, 0]], p ** 2 / 2))
    Y = VerticalField(c, [1, 0])
    assert noether.is_noether_pair(om, Y, Form0(c, [-p])).verified
    assert noether.is_noether_pair(om, Y, Form0(c, [p])).status == "falsified"


def test_closure_of_string_pairs(load):
    m = load("string.pdh")
    om = m.form("omega", 2)
    pa, pb = (m.field("Ya"), m.current("fa")), (m.field("Yb"), m.current("fb"))
    b = noether.poisson_bracket(om, pa, pb)
    assert noether.is_noether_pair(om, affcalc.field_bracket(pa[0], pb[0]), b).verified
    assert not noether.is_trivial_current(b).trivial


def test_bracket_independent_of_trivial_shift(load):
    m = load("kg.pdh")
    om = m.form("omega", 2)
    c = m.chart
    t, x = sp.symbols("t x")
    B = sp.sin(t) * x ** 2
    p1 = (m.field("Y1"), m.current("f1"))
    p2 = (m.field("Y2"), m.current("f2"))
    shifted = (p1[0], Form0(c, [p1[1].f[0] + sp.diff(B, x), p1[1].f[1] - sp.diff(B, t)]))
    b, bs = (noether.poisson_bracket(om, q, p2, m.relations) for q in (p1, shifted))
    assert all(normalize(u - v) == 0 for u, v in zip(b.f, bs.f))


def test_reduce_relations_handles_derivatives():
    t, x = sp.symbols("t x")
    U = sp.Function("U")(t, x)
    rel = Relation(sp.diff(U, t, 2), sp.diff(U, x, 2) + U)
    e = sp.diff(U, t, 3) - sp.diff(U, x, 2, t) - sp.diff(U, t)
    assert noether.reduce_relations(e, [rel]) == 0


def test_sqrt_norm():
    a, b, r = sp.symbols("a b r", positive=True)
    e = a + b * sp.sqrt(r)
    assert normalize(noether.sqrt_norm(e, r) - (a ** 2 - b ** 2 * r)) == 0
    assert noether.sqrt_norm(sp.sqrt(r) ** 2 - r, r) == 0


def test_determining_system_drops_proportional_duplicates(load):
    m = load("wave_quadratic.pdh")
    u1, u2 = sp.symbols("u1 u2")
    ds = noether.determining_system(m.form("omega", 2), m.field("Y"), m.current("f"),
                                    split_vars=[u1, u2])
    exprs = [e for _, e in ds.equations]
    for i, a in enumerate(exprs):
        for b in exprs[i + 1:]:
            q = normalize(a / b)
            assert not (q.is_Number and q != 0)
