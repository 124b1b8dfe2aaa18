"""Command line front end: ``pdham <command> FILE ...``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

import sympy as sp

from . import affcalc, hamilton, noether, numsim, reduce
from .linalg import RankUnknown
from .symexpr import (NonPolynomialError, Verdict, is_zero, normalize, set_zero_test_config,
                      to_latex, to_text, zero_test_config)
from .sysdef import (Form0, Form1, Form2, ParseFailure, Relation, parse_expression,
                     parse_system)
from .sysdef.parser import parse_simulate_section

EXIT = {"verified": 0, "falsified": 1, "input": 2, "unsupported": 3, "unknown": 4}


class InputError(Exception):
    pass


@dataclass
class Report:
    command: str
    status: str = "verified"
    items: list = field(default_factory=list)   # (name, expr, verdict)
    notes: list = field(default_factory=list)
    chart: object = None
    exit_code: int | None = None
    raw_items: list = field(default_factory=list)   # sympy versions for latex

    def add(self, name, e, verdict=""):
        e = sp.sympify(e)
        self.raw_items.append((name, e, verdict))
        self.items.append((name, to_text(e, self.chart) if self.chart else str(e), str(verdict)))

    def as_json(self) -> dict:
        return {"command": self.command, "status": self.status,
                "items": [{"name": n, "expr": e, "verdict": v} for n, e, v in self.items],
                "notes": list(self.notes)}

    def code(self) -> int:
        if self.exit_code is not None:
            return self.exit_code
        return EXIT.get(self.status, EXIT["unknown"])


def _fmt(report: Report, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(report.as_json(), indent=2, sort_keys=True)
    if fmt == "latex":
        lines = [f"% {report.command}: {report.status}"]
        for name, e, v in report.raw_items:
            tag = f" \\quad \\text{{({v})}}" if v else ""
            lines.append(f"\\text{{{name}}}: & {to_latex(e)}{tag} \\\\")
        lines += [f"% {n}" for n in report.notes]
        return "\n".join(lines)
    lines = [f"{report.command}: {report.status}"]
    for name, e, v in report.items:
        lines.append(f"  {name}: {e}" + (f"  [{v}]" if v else ""))
    lines += report.notes
    return "\n".join(lines)


# -- loading --------------------------------------------------------------

def _resolve(path: str) -> Path:
    p = Path(path)
    if p.exists():
        return p
    from . import corpus_path
    bundled = Path(str(corpus_path(p.name if p.suffix else p.name + ".pdh")))
    if bundled.exists():
        return bundled
    raise InputError(f"no such file: {path}")


def _load(path: str):
    p = _resolve(path)
    try:
        return parse_system(p.read_text(encoding="utf-8")), p
    except ParseFailure as exc:
        raise InputError("\n".join(f"{p}:{d}" for d in exc.diagnostics)) from None


def _pick_form(model, name, degree=None):
    if name:
        try:
            return model.form(name, degree)
        except KeyError as exc:
            raise InputError(exc.args[0]) from None
    cands = [k for k, f in model.forms.items()
             if degree is None or {Form0: 0, Form1: 1, Form2: 2}[type(f)] == degree]
    if "omega" in cands:
        return model.forms["omega"]
    if len(cands) == 1:
        return model.forms[cands[0]]
    raise InputError(f"specify --form (candidates: {', '.join(cands) or 'none'})")


def _get(getter, name):
    try:
        return getter(name)
    except KeyError as exc:
        raise InputError(exc.args[0]) from None


def _relations(model, extra):
    rels = list(model.relations)
    for text in extra or ():
        lhs, sep, rhs = text.partition("=")
        if not sep:
            raise InputError(f"relation {text!r} needs the form lhs = rhs")
        try:
            rels.append(Relation(parse_expression(lhs, model.chart),
                                 parse_expression(rhs, model.chart)))
        except ParseFailure as exc:
            raise InputError(str(exc)) from None
    return rels


def _symbols(model, names):
    out = []
    for n in names:
        if n not in model.chart.variables:
            raise InputError(f"{n!r} is not a coordinate")
        out.append(sp.Symbol(n))
    return out


def _csv_names(values):
    out = []
    for v in values or ():
        out += [s.strip() for s in v.split(",") if s.strip()]
    return out


def _status_of(tests) -> str:
    tests = list(tests)
    if all(t.zero for t in tests):
        return "verified"
    if any(t.verdict is Verdict.NONZERO for t in tests):
        return "falsified"
    return "unknown"


# -- commands -------------------------------------------------------------

def cmd_check(a):
    model, _ = _load(a.file)
    om = _pick_form(model, a.form, 2)
    r = Report("check", chart=model.chart)
    cl = affcalc.closedness_residuals(om)
    tests = []
    for name, e in cl.items(model.chart):
        t = is_zero(e)
        tests.append(t)
        if not t.zero:
            r.add(name, e, t)
    r.status = _status_of(tests)
    exact = all(t.exact for t in tests)
    if r.status == "verified":
        r.notes.append(f"closed: {len(tests)} closedness residuals are "
                       + ("exactly zero" if exact else "zero (some probabilistically)"))
    if r.status != "verified":
        r.notes.append("not closed: not a PD-prehamiltonian system")
        return r
    try:
        kf = hamilton.kernel_full(om, model.constraints)
    except RankUnknown as exc:
        r.status = "unknown"
        r.notes.append(str(exc))
        return r
    if kf.vertical.dimension == 0:
        cert = to_text(kf.certificate, model.chart)
        r.notes.append("PD-hamiltonian" + ("" if cert == "1" else f" (certificate {cert} != 0)"))
    else:
        r.notes.append(f"PD-prehamiltonian, degenerate: kernel of the linear part has dimension "
                       f"{kf.vertical.dimension}")
        for n, V in enumerate(kf.vertical.basis, 1):
            r.add(f"kernel[{n}]", sp.Matrix([V.Y]), "")
        r.notes += kf.describe(model.chart)
        if not kf.certificate.is_Number:
            r.notes.append(f"rank valid where {to_text(kf.certificate, model.chart)} != 0")
    return r


def cmd_equations(a):
    model, _ = _load(a.file)
    om = _pick_form(model, a.form, 2)
    r = Report("equations", chart=model.chart)
    sys_ = hamilton.hamilton_residuals(om)
    for name, e in sys_.components():
        r.add(name, e, "= 0")
    r.notes.append("R_b = 2 w^i_ab D[i][a] - w_b; the variant with +w_b is not used")
    return r


def cmd_noether(a):
    model, _ = _load(a.file)
    om = _pick_form(model, a.form, 2)
    Y = _get(model.field, a.field)
    f = _get(model.current, a.current)
    rels = _relations(model, a.relations)
    v = noether.is_noether_pair(om, Y, f, rels)
    r = Report("noether", status=v.status, chart=model.chart)
    for name, e, t in v.items:
        r.add(name, e, t)
    if rels:
        r.notes.append(f"reduced modulo {len(rels)} relation(s)")
    return r


def _pair(model, text):
    y, sep, f = text.partition(":")
    if not sep:
        raise InputError(f"pair {text!r} must be FIELD:CURRENT")
    return _get(model.field, y), _get(model.current, f)


def cmd_bracket(a):
    model, _ = _load(a.file)
    om = _pick_form(model, a.form, 2)
    if len(a.pair) != 2:
        raise InputError("give exactly two --pair options")
    p1, p2 = (_pair(model, t) for t in a.pair)
    rels = _relations(model, a.relations)
    r = Report("bracket", chart=model.chart)
    try:
        b = noether.poisson_bracket(om, p1, p2, rels)
    except noether.NotAPair as exc:
        r.status = "falsified"
        r.notes.append(str(exc))
        return r
    except noether.ConventionError as exc:
        r.status = "error"
        r.exit_code = EXIT["unknown"]
        r.notes.append(f"internal convention error: {exc}")
        return r
    for name, e in b.components():
        r.add(name, e)
    triv = noether.is_trivial_current(b, rels)
    r.notes.append("bracket is a trivial current" if triv.trivial
                   else "bracket is not trivial: " + "; ".join(triv.reasons))
    return r


def cmd_determining(a):
    model, _ = _load(a.file)
    om = _pick_form(model, a.form, 2)
    Y = _get(model.field, a.field)
    f = _get(model.current, a.current)
    for u in _csv_names(a.unknowns):
        if u not in model.chart.functions:
            raise InputError(f"unknown {u!r} is not a declared function")
    split = _symbols(model, _csv_names(a.split)) if a.split else None
    square = None
    if a.square:
        try:
            square = parse_expression(a.square, model.chart)
        except ParseFailure as exc:
            raise InputError(str(exc)) from None
    r = Report("determining", chart=model.chart)
    try:
        ds = noether.determining_system(om, Y, f, split_vars=split, square=square)
    except NonPolynomialError as exc:
        r.status = "error"
        r.exit_code = EXIT["unsupported"]
        r.notes.append(f"not polynomial in the split variables: {exc}")
        return r
    for name, e in ds.equations:
        r.add(name, e, "= 0")
    r.notes.append(f"{len(ds)} equation(s)")
    return r


def cmd_constrain(a):
    model, _ = _load(a.file)
    om = _pick_form(model, a.form, 2)
    run = hamilton.constraint_algorithm(om, max_steps=a.max_steps)
    r = Report("constrain", chart=model.chart)
    for k, C in enumerate(run.stages):
        if not C.exprs:
            r.add(f"stage {k}", sp.Integer(0), "empty set of constraints")
        for e in C.exprs:
            r.add(f"stage {k}", e, "= 0")
    if run.empty:
        r.notes.append("constraint set is empty: no solutions")
    elif run.terminated:
        r.notes.append(f"fixed point at step {len(run.stages)}")
    else:
        r.status = "unknown"
        r.notes.append(f"no fixed point within {a.max_steps} steps")
    return r


def cmd_potential(a):
    model, _ = _load(a.file)
    om = _pick_form(model, a.form, 2)
    r = Report("potential", chart=model.chart)
    try:
        th = affcalc.potential(om)
    except affcalc.UnsupportedClass as exc:
        r.status = "error"
        r.exit_code = EXIT["unsupported"]
        r.notes.append(str(exc))
        return r
    except affcalc.NotClosed as exc:
        r.status = "falsified"
        r.notes.append(str(exc))
        return r
    for name, e in th.components():
        if normalize(e) != 0:
            r.add(name, e)
    back = affcalc.delta1(th)
    ok = all(is_zero(x - y).zero for (_, x), (_, y) in zip(back.components(), om.components()))
    r.status = "verified" if ok else "unknown"
    r.notes.append("delta1 of the potential reproduces the form" if ok
                   else "round trip could not be confirmed")
    return r


def _one_form(model, name):
    f = _pick_form(model, name)
    if isinstance(f, Form1):
        return f, None
    if isinstance(f, Form2):
        return affcalc.potential(f), "potential computed from the 2-form"
    raise InputError("need a 1-form or a closed 2-form")


def cmd_lagrangian(a):
    model, _ = _load(a.file)
    r = Report("lagrangian", chart=model.chart)
    th, note = _wrap_potential(model, a.form, r)
    if th is None:
        return r
    r.add("L", hamilton.lagrangian_of(th))
    if note:
        r.notes.append(note)
    return r


def cmd_euler_lagrange(a):
    model, _ = _load(a.file)
    r = Report("euler-lagrange", chart=model.chart)
    th, note = _wrap_potential(model, a.form, r)
    if th is None:
        return r
    try:
        el = hamilton.euler_lagrange(hamilton.lagrangian_of(th), model.chart)
    except hamilton.NonAffineLagrangian as exc:
        r.status = "error"
        r.exit_code = EXIT["unsupported"]
        r.notes.append(str(exc))
        return r
    for name, e in el.components():
        r.add(name, e, "= 0")
    if note:
        r.notes.append(note)
    return r


def _wrap_potential(model, name, r):
    try:
        return _one_form(model, name)
    except affcalc.UnsupportedClass as exc:
        r.status, r.exit_code = "error", EXIT["unsupported"]
        r.notes.append(str(exc))
    except affcalc.NotClosed as exc:
        r.status = "falsified"
        r.notes.append(str(exc))
    return None, None


def cmd_reduce(a):
    model, path = _load(a.file)
    om = _pick_form(model, a.form, 2)
    if a.map not in model.maps:
        raise InputError(f"no map named {a.map!r}")
    target = a.target or model.maps[a.map].target
    try:
        tmodel, _ = _load(target)
    except InputError:
        tmodel, _ = _load(str(path.parent / (target if target.endswith(".pdh") else target + ".pdh")))
    wt = _pick_form(tmodel, a.target_form or a.form, 2)
    try:
        p = model.bundle_map(a.map, tmodel.chart)
    except (KeyError, ValueError) as exc:
        raise InputError(str(exc)) from None
    rep = reduce.verify_reduction(om, p, wt)
    r = Report("reduce", status=rep.status, chart=model.chart)
    for label, chk in rep.items():
        r.add(label, sp.Integer(0) if not chk.offending else chk.offending[0][1], chk.status)
        for name, e in chk.offending[1:]:
            r.add(f"{label}: {name}", e, chk.status)
    return r


def cmd_simulate(a):
    model, _ = _load(a.file)
    runs = model.simulate or {}
    if a.config:
        try:
            runs = parse_simulate_section(Path(a.config).read_text(encoding="utf-8"))
        except OSError as exc:
            raise InputError(str(exc)) from None
        except Exception as exc:
            raise InputError(f"bad config: {exc}") from None
    if not runs:
        raise InputError("no [simulate] section")
    name = a.run or ("default" if "default" in runs else next(iter(runs)))
    if name not in runs:
        raise InputError(f"no simulate run named {name!r}")
    try:
        cfg = numsim.SimConfig.from_settings(runs[name])
    except (ValueError, ParseFailure) as exc:
        raise InputError(str(exc)) from None
    if a.N:
        cfg = replace(cfg, N=a.N, steps=a.steps or cfg.steps)
    r = Report("simulate", chart=None)
    if not numsim.check_symmetry_profile(cfg.U, cfg.mu):
        r.notes.append("warning: U does not solve the linear field equation")
    try:
        st = numsim.charge_study(cfg)
    except numsim.SimulationError as exc:
        r.status, r.exit_code = "error", EXIT["unknown"]
        r.notes.append(str(exc))
        return r
    conv = st.convergence
    r.status = "verified" if conv.passed else "falsified"
    r.add("drift", sp.Float(conv.coarse, 6))
    r.add("drift (refined)", sp.Float(conv.fine, 6))
    r.add("order", sp.Float(conv.order, 6) if conv.order is not None else sp.nan, conv.describe())
    summary = {"drift": conv.coarse, "order": conv.order}
    r.notes.append("summary " + json.dumps(summary, sort_keys=True))
    if a.csv:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "Q"])
        for k, q in enumerate(st.charges):
            w.writerow([repr(k * cfg.dt), repr(float(q))])
        if a.csv == "-":
            sys.stdout.write(buf.getvalue())
        else:
            Path(a.csv).write_text(buf.getvalue(), encoding="utf-8")
    return r


# -- argument parsing -----------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=["text", "latex", "json"], default=argparse.SUPPRESS)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS,
                        help="seed for probabilistic zero tests")

    ap = argparse.ArgumentParser(prog="pdham", parents=[common],
                                 description="Affine-form Hamiltonian field theory toolkit")
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.add_argument("file")
        p.set_defaults(func=fn)
        return p

    p = add("check", cmd_check, "closedness and hamiltonian classification")
    p.add_argument("--form")
    p = add("equations", cmd_equations, "PD-Hamilton equations")
    p.add_argument("--form")
    p = add("noether", cmd_noether, "verify a symmetry/current pair")
    p.add_argument("--form")
    p.add_argument("--field", required=True)
    p.add_argument("--current", required=True)
    p.add_argument("--relations", nargs="*", help="extra relations 'lhs = rhs'")
    p = add("bracket", cmd_bracket, "bracket of two currents")
    p.add_argument("--form")
    p.add_argument("--pair", action="append", default=[], metavar="FIELD:CURRENT")
    p.add_argument("--relations", nargs="*")
    p = add("determining", cmd_determining, "determining equations of an ansatz")
    p.add_argument("--form")
    p.add_argument("--field", default="Y")
    p.add_argument("--current", default="f")
    p.add_argument("--unknowns", nargs="*")
    p.add_argument("--split", nargs="*", help="coordinates to split over")
    p.add_argument("--square", help="rationalize square roots of this expression first")
    p = add("constrain", cmd_constrain, "constraint algorithm")
    p.add_argument("--form")
    p.add_argument("--max-steps", type=int, default=10)
    p = add("potential", cmd_potential, "potential of a closed 2-form")
    p.add_argument("--form")
    p = add("lagrangian", cmd_lagrangian, "Lagrangian of a 1-form")
    p.add_argument("--form")
    p = add("euler-lagrange", cmd_euler_lagrange, "Euler-Lagrange equations of a 1-form")
    p.add_argument("--form")
    p = add("reduce", cmd_reduce, "verify a gauge reduction")
    p.add_argument("--map", required=True)
    p.add_argument("--target")
    p.add_argument("--form")
    p.add_argument("--target-form")
    p = add("simulate", cmd_simulate, "Klein-Gordon run and charge drift study")
    p.add_argument("--config")
    p.add_argument("--run")
    p.add_argument("--csv", help="write t,Q rows here ('-' for stdout)")
    p.add_argument("--N", type=int)
    p.add_argument("--steps", type=int)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        a = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT["input"] if exc.code else 0
    fmt = getattr(a, "format", "text")
    old = zero_test_config()
    if hasattr(a, "seed"):
        set_zero_test_config(replace(old, seed=a.seed))
    try:
        report = a.func(a)
    except InputError as exc:
        report = Report(a.command, status="error", notes=[str(exc)], exit_code=EXIT["input"])
        if fmt != "json":
            print(str(exc), file=sys.stderr)
            return report.code()
    except RankUnknown as exc:
        report = Report(a.command, status="unknown", notes=[str(exc)])
    finally:
        set_zero_test_config(old)
    print(_fmt(report, fmt))
    return report.code()


if __name__ == "__main__":
    sys.exit(main())
