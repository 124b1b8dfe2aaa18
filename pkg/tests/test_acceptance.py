"""End-to-end acceptance checks, one group per criterion.

A summary line per criterion is printed at the end of the run by the
terminal-summary hook in conftest.py.
"""

import random
from dataclasses import replace

import pytest
import sympy as sp

import randgen
from pdham import affcalc, hamilton, noether, numsim, reduce
from pdham.cli import main
from pdham.symexpr import Verdict, is_zero, normalize, poly_coefficients
from pdham.sysdef import Form2, VerticalField

S = sp.Symbol


def proportional(a, b) -> bool:
    """a = lambda*b for a nonzero rational lambda (or both zero)."""
    a, b = normalize(a), normalize(b)
    if a == 0 or b == 0:
        return a == 0 and b == 0
    q = normalize(a / b)
    return q.is_Rational and q != 0


def same_up_to_scale(xs, ys) -> bool:
    """Every member of each list is proportional to some member of the other."""
    return all(any(proportional(x, y) for y in ys) for x in xs) and \
        all(any(proportional(x, y) for x in xs) for y in ys)


def run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr().out


# -- 1 --------------------------------------------------------------------

CLOSED = ["wave.pdh", "minimal_surface.pdh", "string.pdh", "maxwell2.pdh", "maxwell3.pdh",
          "maxwell4.pdh", "dw.pdh"]


@pytest.mark.criterion(1)
@pytest.mark.parametrize("name", CLOSED)
def test_corpus_is_closed(name, load, capsys):
    om = load(name).form("omega", 2)
    cl = affcalc.closedness_residuals(om)
    for e in list(cl.r1.values()) + list(cl.r2.values()):
        assert normalize(e) == 0
    code, out = run(capsys, "check", name)
    assert code == 0 and "closedness residuals are exactly zero" in out


@pytest.mark.criterion(1)
def test_perturbed_wave_is_not_closed(load, capsys):
    om = load("wave.pdh").form("omega", 2)
    u = S("u")
    bad = Form2(om.chart, om.w, [om.v[0], om.v[1] + u, om.v[2]])
    t = is_zero(affcalc.closedness_residuals(bad).r2[(0, 1)])
    assert t.verdict is Verdict.NONZERO and t.exact
    code, out = run(capsys, "check", "nonclosed.pdh")
    assert code == 1 and "nonzero" in out


# -- 2 --------------------------------------------------------------------

@pytest.mark.criterion(2)
def test_wave_equations(load):
    m = load("wave.pdh")
    c = m.chart
    R = dict(hamilton.hamilton_residuals(m.form("omega", 2)).components())
    u1, u2 = S("u1"), S("u2")
    T = c.function("T")
    Tij = [[sp.diff(T, a, b) for b in (u1, u2)] for a in (u1, u2)]
    Vp = sp.diff(c.function("V"), S("u"))
    ui = ("u1", "u2")
    # T^{ij} d_j u_i + V' = 0
    first = sum(Tij[i][j] * c.jet(j, 1 + i) for i in range(2) for j in range(2)) + Vp
    assert proportional(R["R[u]"], first)
    # T^{kj} (d_j u - u_j) = 0, i.e. d_j u = u_j where T is invertible
    for k in range(2):
        second = sum(Tij[k][j] * (c.jet(j, 0) - S(ui[j])) for j in range(2))
        assert proportional(R[f"R[{ui[k]}]"], second)


@pytest.mark.criterion(2)
def test_string_equations(load):
    m = load("string.pdh")
    c = m.chart
    R = dict(hamilton.hamilton_residuals(m.form("omega", 2)).components())
    e = S("e")
    for a in ("1", "2"):
        q, sa, ta = f"q{a}", S(f"s{a}"), S(f"t{a}")
        assert proportional(R[f"R[q{a}]"], c.jet(1, c.fiber.index(f"t{a}"))
                            + c.jet(0, c.fiber.index(f"s{a}")))
        assert proportional(R[f"R[t{a}]"], c.jet(1, c.fiber.index(q)) - e * ta)
        assert proportional(R[f"R[s{a}]"], c.jet(0, c.fiber.index(q)) + sa)
    eps = (S("t1") ** 2 + S("t2") ** 2 - 1) / 2
    assert proportional(R["R[e]"], eps)


def _eta(i):
    return -1 if i == 1 else 1


@pytest.mark.criterion(2)
@pytest.mark.parametrize("n", [2, 3, 4])
def test_maxwell_equations(n, load):
    m = load(f"maxwell{n}.pdh")
    c = m.chart
    R = dict(hamilton.hamilton_residuals(m.form("omega", 2)).components())

    def jet(i, j):
        return S(f"A{i}_{j}")

    def D(k, name):
        return c.jet(k - 1, c.fiber.index(name))

    def upper_skew(j, i):
        # A^{[j,i]}
        return sp.Rational(1, 2) * _eta(i) * _eta(j) * (jet(j, i) - jet(i, j))

    idx = range(1, n + 1)
    for i in idx:
        # d_k A^{[i,k]} = 0, with the derivative acting on the jet coordinates
        div = sum(sp.Rational(1, 2) * _eta(i) * _eta(k) * (D(k, f"A{i}_{k}") - D(k, f"A{k}_{i}"))
                  for k in idx)
        assert proportional(R[f"R[A{i}]"], div)
        for j in idx:
            r = R[f"R[A{i}_{j}]"]
            if i == j:
                assert r == 0
                continue
            # d_[j A_i] = (1/2) A_[i,j]: the 1/2 follows from the dnx coefficient of the form
            curl = sp.Rational(1, 2) * (D(j, f"A{i}") - D(i, f"A{j}"))
            skew = sp.Rational(1, 2) * (jet(i, j) - jet(j, i))
            assert proportional(r, curl - skew / 2)
            assert upper_skew(i, j) == -upper_skew(j, i)


@pytest.mark.criterion(2)
def test_de_donder_weyl_equations(load):
    m = load("dw.pdh")
    c = m.chart
    R = dict(hamilton.hamilton_residuals(m.form("omega", 2)).components())
    H = c.function("H")
    for A in (1, 2):
        q = f"q{A}"
        for i in (1, 2):
            p = f"p{i}{A}"
            assert proportional(R[f"R[{p}]"], c.jet(i - 1, c.fiber.index(q)) - sp.diff(H, S(p)))
        div = sum(c.jet(i - 1, c.fiber.index(f"p{i}{A}")) for i in (1, 2))
        assert proportional(R[f"R[{q}]"], div + sp.diff(H, S(q)))


# -- 3 --------------------------------------------------------------------

@pytest.mark.criterion(3)
def test_wave_determining_system(load):
    m = load("wave.pdh")
    c = m.chart
    ds = dict(noether.determining_system(m.form("omega", 2), m.field("Y"), m.current("f")).equations)
    u, us = S("u"), (S("u1"), S("u2"))
    T = c.function("T")
    Tij = [[sp.diff(T, a, b) for b in us] for a in us]
    Vp = sp.diff(c.function("V"), u)
    U = c.function("U")
    Uj = [c.function("U1"), c.function("U2")]
    f = [c.function("F1"), c.function("F2")]
    x = (S("x1"), S("x2"))
    eq16 = sum(sp.diff(f[i], x[i]) for i in range(2)) \
        + sum(Tij[i][j] * us[i] * Uj[j] for i in range(2) for j in range(2)) + Vp * U
    expected = {"B": eq16}
    for i in range(2):
        expected[f"A[x{i + 1}; u]"] = sp.diff(f[i], u) - sum(Tij[i][j] * Uj[j] for j in range(2))
        for j in range(2):
            expected[f"A[x{i + 1}; u{j + 1}]"] = sp.diff(f[i], us[j]) + Tij[i][j] * U
    assert set(ds) == set(expected)
    for k, e in expected.items():
        assert normalize(ds[k] - e) == 0, k


@pytest.mark.criterion(3)
def test_quadratic_determining_system(load):
    m = load("wave_quadratic.pdh")
    c = m.chart
    u, u1, u2 = S("u"), S("u1"), S("u2")
    us, x = (u1, u2), (S("x1"), S("x2"))
    ds = noether.determining_system(m.form("omega", 2), m.field("Y"), m.current("f"),
                                    split_vars=[u1, u2])
    g = [[S("g[1,1]"), S("g[1,2]")], [S("g[1,2]"), S("g[2,2]")]]
    U = c.function("U")
    A = [c.function("A1"), c.function("A2")]
    Vp = sp.diff(c.function("V"), u)
    # left side of the quadratic-T reduction, before splitting
    eq21 = sum(sp.diff(A[i], x[i]) for i in range(2)) + Vp * U \
        + sum((sp.diff(A[i], u) - sum(g[i][j] * sp.diff(U, x[j]) for j in range(2))) * us[i]
              for i in range(2)) \
        - sum(g[i][j] * sp.diff(U, u) * us[i] * us[j] for i in range(2) for j in range(2))
    split = poly_coefficients(eq21, [u1, u2])
    got = dict(ds.equations)
    assert len(got) == len(split)
    for mono, cf in split.items():
        assert normalize(got[f"B[{mono}]"] - cf) == 0
    # the coefficients are the three reduced equations
    eq22 = sp.diff(U, u)
    eq23 = [sp.diff(A[i], u) - sum(g[i][j] * sp.diff(U, x[j]) for j in range(2)) for i in range(2)]
    eq24 = sum(sp.diff(A[i], x[i]) for i in range(2)) + Vp * U
    assert normalize(got["B[1]"] - eq24) == 0
    assert normalize(got["B[u1]"] - eq23[0]) == 0 and normalize(got["B[u2]"] - eq23[1]) == 0
    for key, gij in (("B[u1^2]", g[0][0]), ("B[u1*u2]", 2 * g[0][1]), ("B[u2^2]", g[1][1])):
        assert normalize(got[key] + gij * eq22) == 0


@pytest.mark.criterion(3)
def test_minimal_surface_squared_groups(load):
    m = load("minimal_surface.pdh")
    c = m.chart
    u, u1, u2 = S("u"), S("u1"), S("u2")
    x = (S("x1"), S("x2"))
    tau = 1 + u1 ** 2 + u2 ** 2
    ds = noether.determining_system(m.form("omega", 2), m.field("Z"), m.current("g"),
                                    split_vars=[u1, u2], square=tau)
    U = c.function("U")
    A = [c.function("A1"), c.function("A2")]
    Uu, dU = sp.diff(U, u), [sp.diff(U, xi) for xi in x]
    Au = [sp.diff(a, u) for a in A]
    div = sum(sp.diff(A[i], x[i]) for i in range(2))
    us = (u1, u2)
    r2 = u1 ** 2 + u2 ** 2
    Au_u = sum(Au[i] * us[i] for i in range(2))
    dU_u = sum(dU[i] * us[i] for i in range(2))
    groups = {
        4: (Uu ** 2 * r2 - Au_u ** 2) * r2,
        3: 2 * r2 * (Uu * dU_u - Au_u * div),
        2: -(div ** 2 * r2 + Au_u ** 2 - dU_u ** 2),
        # first-order term of the expanded square: 2*div, not div^2
        1: 2 * div * Au_u,
        0: div ** 2,
    }
    mine = {}
    for label, e in ds.equations:
        mono = label[label.index("[") + 1:-1]
        deg = 0 if mono == "1" else sum(int(p.split("^")[1]) if "^" in p else 1
                                        for p in mono.split("*"))
        mine.setdefault(deg, []).append(e)
    assert set(mine) == set(groups)
    for d, grp in groups.items():
        expected = list(poly_coefficients(grp, [u1, u2]).values())
        assert same_up_to_scale(mine[d], expected), d


# -- 4 --------------------------------------------------------------------

@pytest.mark.criterion(4)
@pytest.mark.parametrize("k", ["1", "2", "3"])
def test_klein_gordon_pairs(k, load, capsys):
    m = load("kg.pdh")
    v = noether.is_noether_pair(m.form("omega", 2), m.field("Y" + k), m.current("f" + k),
                                m.relations)
    assert v.verified and all(t.exact for _, _, t in v.items)
    code, _ = run(capsys, "noether", "kg.pdh", "--field", "Y" + k, "--current", "f" + k)
    assert code == 0


@pytest.mark.criterion(4)
def test_minimal_surface_pair(load, capsys):
    m = load("minimal_surface.pdh")
    v = noether.is_noether_pair(m.form("omega", 2), m.field("Y"), m.current("f"))
    assert v.verified and all(t.exact for _, _, t in v.items)
    assert run(capsys, "noether", "minimal_surface.pdh", "--field", "Y", "--current", "f")[0] == 0


@pytest.mark.criterion(4)
@pytest.mark.parametrize("k", ["a", "b", "c"])
def test_string_pairs(k, load, capsys):
    m = load("string.pdh")
    v = noether.is_noether_pair(m.form("omega", 2), m.field("Y" + k), m.current("f" + k))
    assert v.verified and all(t.exact for _, _, t in v.items)
    assert run(capsys, "noether", "string.pdh", "--field", "Y" + k, "--current", "f" + k)[0] == 0


# -- 5 --------------------------------------------------------------------

@pytest.mark.criterion(5)
def test_klein_gordon_bracket(load, capsys):
    m = load("kg.pdh")
    c = m.chart
    om = m.form("omega", 2)
    p1 = (m.field("Y1"), m.current("f1"))
    p2 = (m.field("Y2"), m.current("f2"))
    b = noether.poisson_bracket(om, p1, p2, m.relations)
    U1, U2 = c.function("U1"), c.function("U2")
    g = (-1, 1)
    for i, xi in enumerate((S("t"), S("x"))):
        expected = g[i] * (U1 * sp.diff(U2, xi) - U2 * sp.diff(U1, xi))
        assert normalize(b.f[i] - expected) == 0
    assert noether.is_trivial_current(b, m.relations).trivial
    code, out = run(capsys, "bracket", "kg.pdh", "--pair", "Y1:f1", "--pair", "Y2:f2")
    assert code == 0 and "trivial current" in out


def _kg_triples(load, count=50, seed=5):
    """Random verified Klein-Gordon pairs built from three formal solutions."""
    m = load("kg.pdh")
    c = m.chart
    t, x = S("t"), S("x")
    W = [c.function(f"U{k}") for k in (1, 2, 3)]
    rng = random.Random(seed)
    om = m.form("omega", 2)
    u, ut, ux = S("u"), S("ut"), S("ux")

    def pair(U):
        Y = VerticalField(c, [U, sp.diff(U, t), sp.diff(U, x)])
        f = m.current("f1").__class__(c, [-(u * sp.diff(U, t) - ut * U), u * sp.diff(U, x) - ux * U])
        return Y, f

    for _ in range(count):
        triple = []
        for _ in range(3):
            coeffs = [sp.Rational(rng.randint(-4, 4), rng.randint(1, 3)) for _ in W]
            triple.append(pair(sum(a * w for a, w in zip(coeffs, W))))
        yield om, triple, m.relations


@pytest.mark.criterion(5)
def test_klein_gordon_antisymmetry_and_jacobi(load):
    for om, (p1, p2, p3), rels in _kg_triples(load):
        for p in (p1, p2, p3):
            assert noether.is_noether_pair(om, *p, rels).verified
        b12 = noether.poisson_bracket(om, p1, p2, rels, check=False)
        b21 = noether.poisson_bracket(om, p2, p1, rels, check=False)
        assert all(normalize(a + b) == 0 for a, b in zip(b12.f, b21.f))
        jac = noether.jacobi_defect(om, p1, p2, p3, rels)
        assert all(e == 0 for e in jac.f)


# -- 6 --------------------------------------------------------------------

@pytest.mark.criterion(6)
def test_string_constraint_algorithm(load, capsys):
    om = load("string.pdh").form("omega", 2)
    run_ = hamilton.constraint_algorithm(om)
    assert run_.terminated and not run_.empty
    assert [len(C.exprs) for C in run_.stages] == [0, 1]
    eps = (S("t1") ** 2 + S("t2") ** 2 - 1) / 2
    assert proportional(run_.stages[1].exprs[0], eps)
    code, out = run(capsys, "constrain", "string.pdh")
    assert code == 0 and "fixed point at step 2" in out


@pytest.mark.criterion(6)
def test_inconsistent_constraint_algorithm(load, capsys):
    run_ = hamilton.constraint_algorithm(load("inconsistent.pdh").form("omega", 2))
    assert run_.terminated and run_.empty
    code, out = run(capsys, "constrain", "inconsistent.pdh")
    assert "empty" in out


# -- 7 --------------------------------------------------------------------

@pytest.mark.criterion(7)
@pytest.mark.parametrize("n", [2, 3, 4])
def test_maxwell_reduction(n, load, capsys):
    m, mt = load(f"maxwell{n}.pdh"), load(f"maxwell_reduced{n}.pdh")
    p = m.bundle_map("p", mt.chart)
    rep = reduce.verify_reduction(m.form("omega", 2), p, mt.form("omega", 2))
    assert rep.pullback.verified and rep.vertical.verified and rep.reduced_kernel.verified
    assert len(hamilton.kernel_full(m.form("omega", 2)).basis) == n * (n + 1) // 2
    assert run(capsys, "reduce", f"maxwell{n}.pdh", "--map", "p")[0] == 0


# -- 8 --------------------------------------------------------------------

@pytest.mark.criterion(8)
def test_variational_equivalence_random():
    rng = random.Random(8)
    signs = set()
    for _ in range(100):
        c = randgen.chart(rng)
        th = randgen.form1(rng, c)
        el = hamilton.euler_lagrange(hamilton.lagrangian_of(th), c).residuals
        R = hamilton.hamilton_residuals(affcalc.delta1(th)).residuals
        for a, b in zip(el, R):
            if normalize(a - b) == 0 and normalize(a + b) == 0:
                continue
            if normalize(a - b) == 0:
                signs.add(1)
            else:
                assert normalize(a + b) == 0
                signs.add(-1)
    assert len(signs) == 1


@pytest.mark.criterion(8)
def test_divergence_lagrangians_are_null():
    rng = random.Random(88)
    for _ in range(100):
        c = randgen.chart(rng)
        nu = randgen.form0(rng, c)
        L = hamilton.lagrangian_of(affcalc.delta0(nu))
        total = sum(sp.diff(nu.f[i], c.x(i)) + sum(c.jet(i, a) * sp.diff(nu.f[i], c.y(a))
                                                   for a in range(c.m)) for i in range(c.n))
        assert normalize(L - total) == 0
        assert all(e == 0 for e in hamilton.euler_lagrange(L, c).residuals)


# -- 9 --------------------------------------------------------------------

@pytest.mark.criterion(9)
def test_potential_round_trip_random():
    rng = random.Random(9)
    for _ in range(100):
        c = randgen.chart(rng)
        om = affcalc.delta1(randgen.form1(rng, c))
        back = affcalc.delta1(affcalc.potential(om))
        for (_, a), (_, b) in zip(back.components(), om.components()):
            assert normalize(a - b) == 0


@pytest.mark.criterion(9)
def test_potential_rejections(capsys):
    assert run(capsys, "potential", "nonclosed.pdh")[0] == 1
    assert run(capsys, "potential", "minimal_surface.pdh")[0] == 3


# -- 10 -------------------------------------------------------------------

@pytest.mark.criterion(10)
def test_calculus_identities_random():
    rng = random.Random(10)
    for _ in range(100):
        c = randgen.chart(rng)
        f = randgen.form0(rng, c)
        dd = affcalc.delta1(affcalc.delta0(f))
        assert all(e == 0 for _, e in dd.components())
        cl = affcalc.closedness_residuals(affcalc.delta1(randgen.form1(rng, c)))
        assert all(e == 0 for e in list(cl.r1.values()) + list(cl.r2.values()))
        om = Form2.from_full(c, [[[randgen.poly(rng, c, degree=2) for _ in range(c.m)]
                                  for _ in range(c.m)] for _ in range(c.n)],
                             [randgen.poly(rng, c) for _ in range(c.m)])
        nb = randgen.connection(rng, c, degree=2)
        Y = randgen.field(rng, c, degree=2)
        lhs = affcalc.insert_connection1(nb, affcalc.insert_vertical(Y, om))
        rhs = affcalc.insert_vertical_coform(Y, affcalc.insert_connection(nb, om))
        assert normalize(lhs - rhs) == 0


# -- 11 -------------------------------------------------------------------

def _kg_config(load, run_name):
    cfg = numsim.SimConfig.from_settings(load("kg.pdh").simulate[run_name])
    return replace(cfg, N=512, steps=2048)


@pytest.mark.criterion(11)
@pytest.mark.parametrize("run_name", ["default", "sine", "second"])
def test_charge_drift_second_order(run_name, load):
    cfg = _kg_config(load, run_name)
    assert numsim.check_symmetry_profile(cfg.U, cfg.mu)
    conv = numsim.charge_study(cfg).convergence
    assert not conv.exact
    assert 3 <= conv.factor <= 5, conv.describe()


@pytest.mark.criterion(11)
@pytest.mark.parametrize("run_name", ["momentum", "boost"])
def test_charge_exact_for_polynomial_profiles(run_name, load):
    cfg = _kg_config(load, run_name)
    conv = numsim.charge_study(cfg).convergence
    assert conv.passed and conv.describe() == "exact (pass)"


@pytest.mark.criterion(11)
def test_traveling_wave_second_order():
    x, t = numsim.X, numsim.T
    k = 2 * sp.pi
    cfg = numsim.SimConfig(L=sp.Integer(1), N=512, cfl=0.5, steps=2048, mu=sp.Integer(0),
                           u0=sp.sin(k * x), v0=-k * sp.cos(k * x), U=sp.Integer(1))
    exact = sp.sin(k * (x - t))
    e1 = numsim.solution_error(numsim.simulate_leapfrog(cfg), exact)
    e2 = numsim.solution_error(numsim.simulate_leapfrog(cfg.refined()), exact)
    assert 3 <= e1 / e2 <= 5
