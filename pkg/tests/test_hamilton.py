import random

import pytest
import sympy as sp

import randgen
from pdham import affcalc, hamilton
from pdham.symexpr import normalize
from pdham.sysdef import Chart, ConstraintSet, Form1


def test_wave_is_hamiltonian_off_det_hessian(load):
    m = load("wave.pdh")
    rep = hamilton.is_hamiltonian(m.form("omega", 2))
    T = m.chart.function("T")
    u1, u2 = sp.symbols("u1 u2")
    det = sp.diff(T, u1, 2) * sp.diff(T, u2, 2) - sp.diff(T, u1, u2) ** 2
    assert rep.hamiltonian and normalize(rep.kernel.certificate - det) == 0


def test_minimal_surface_certificate_has_no_roots(load):
    rep = hamilton.is_hamiltonian(load("minimal_surface.pdh").form("omega", 2))
    u1, u2 = sp.symbols("u1 u2")
    assert rep.hamiltonian and normalize(rep.kernel.certificate - (1 + u1 ** 2 + u2 ** 2)) == 0


def test_string_kernel_lives_on_the_constraint(load):
    fk = hamilton.kernel_full(load("string.pdh").form("omega", 2))
    t1, t2 = sp.symbols("t1 t2")
    assert fk.vertical.dimension == 1 and len(fk.basis) == 0
    assert fk.conditions == (t1 ** 2 + t2 ** 2 - 1,)


@pytest.mark.parametrize("n", [2, 3])
def test_maxwell_kernel_is_symmetric_jets(n, load):
    m = load(f"maxwell{n}.pdh")
    basis = hamilton.kernel_full(m.form("omega", 2)).basis
    assert len(basis) == n * (n + 1) // 2
    c = m.chart
    for V in basis:
        for i in range(1, n + 1):
            assert V.Y[c.fiber.index(f"A{i}")] == 0
            for j in range(1, n + 1):
                a, b = c.fiber.index(f"A{i}_{j}"), c.fiber.index(f"A{j}_{i}")
                assert normalize(V.Y[a] - V.Y[b]) == 0


def test_solved_connection_solves_the_equations(load):
    for name in ("wave.pdh", "dw.pdh", "minimal_surface.pdh"):
        om = load(name).form("omega", 2)
        sol = hamilton.solve_connection(om)
        assert sol.solvable
        c = om.chart
        R = hamilton.hamilton_residuals(om)
        sub = {c.jet(i, a): sol.connection.nabla[i][a] for i in range(c.n) for a in range(c.m)}
        assert all(normalize(r.xreplace(sub)) == 0 for r in R.residuals)


def test_string_connection_needs_the_constraint(load):
    om = load("string.pdh").form("omega", 2)
    t1, t2 = sp.symbols("t1 t2")
    assert hamilton.solve_connection(om).conditions == (t1 ** 2 + t2 ** 2 - 1,)
    C = ConstraintSet(om.chart, (t1 ** 2 + t2 ** 2 - 1,))
    assert hamilton.solve_connection(om, C).solvable


def test_constraint_algorithm_from_a_given_start(load):
    om = load("string.pdh").form("omega", 2)
    t1, t2 = sp.symbols("t1 t2")
    C = ConstraintSet(om.chart, (t1 ** 2 + t2 ** 2 - 1,))
    run = hamilton.constraint_algorithm(om, initial=C)
    assert run.terminated and len(run.stages) == 1


def test_euler_lagrange_rejects_non_affine():
    c = Chart(("x",), ("u",))
    with pytest.raises(hamilton.NonAffineLagrangian):
        hamilton.euler_lagrange(c.jet(0, 0) ** 2, c)


def test_euler_lagrange_of_a_known_lagrangian():
    # L = p*D[x][q] - p^2/2 - V(q) gives D[x][q] = p and -D[x][p] = V'(q)
    c = Chart(("x",), ("q", "p"), functions={"V": ["q"]})
    q, p = sp.symbols("q p")
    V = c.function("V")
    L = p * c.jet(0, 0) - p ** 2 / 2 - V
    el = dict(hamilton.euler_lagrange(L, c).components())
    assert normalize(el["EL[q]"] - (-sp.diff(V, q) - c.jet(0, 1))) == 0
    assert normalize(el["EL[p]"] - (c.jet(0, 0) - p)) == 0


def test_lagrangian_of_matches_hand_expansion():
    rng = random.Random(4)
    for _ in range(20):
        c = randgen.chart(rng)
        th = randgen.form1(rng, c)
        L = sum(th.theta[i][a] * c.jet(i, a) for i in range(c.n) for a in range(c.m)) - th.H
        assert normalize(hamilton.lagrangian_of(th) - L) == 0


def test_residuals_of_exact_form_vanish():
    c = Chart(("x1", "x2"), ("u", "v"))
    f = randgen.form0(random.Random(2), c)
    om = affcalc.delta1(affcalc.delta0(f))
    assert all(r == 0 for r in hamilton.hamilton_residuals(om).residuals)


def test_canonical_residuals_by_hand():
    # omega = delta1(p D q - H): R gives D q = H_p and D p = -H_q up to sign
    c = Chart(("t",), ("q", "p"), functions={"H": ["q", "p"]})
    q, p = sp.symbols("q p")
    H = c.function("H")
    om = affcalc.delta1(Form1(c, [[p, 0]], H))
    R = dict(hamilton.hamilton_residuals(om).components())
    assert normalize(R["R[p]"] + (c.jet(0, 0) - sp.diff(H, p))) == 0
    assert normalize(R["R[q]"] - (c.jet(0, 1) + sp.diff(H, q))) == 0
