"""Text, LaTeX and JSON rendering of model objects."""

from __future__ import annotations

import json

import sympy as sp

from ..symexpr import normalize, to_latex, to_text
from .model import (BundleMap, CoForm, Connection, ConstraintSet, Form0, Form1, Form2,
                    PDSystem, SystemModel, VerticalField)

_KIND = {Form0: "form0", Form1: "form1", Form2: "form2", VerticalField: "field",
         Connection: "connection", CoForm: "coform", ConstraintSet: "constraints",
         PDSystem: "system", BundleMap: "map"}


def render(obj, fmt: str = "text") -> str:
    if fmt not in ("text", "latex", "json"):
        raise ValueError(f"unknown format {fmt!r}")
    if isinstance(obj, SystemModel):
        if fmt != "text":
            raise ValueError("models render as text only")
        return render_model(obj)
    if not hasattr(obj, "components"):
        e = sp.sympify(obj)
        return {"text": lambda: to_text(e), "latex": lambda: to_latex(e),
                "json": lambda: json.dumps({"expr": to_text(e)})}[fmt]()
    if fmt == "json":
        return json.dumps(_json(obj), indent=2, sort_keys=True)
    if fmt == "latex":
        return _latex(obj)
    return _text(obj)


def _chart_of(obj):
    return obj.source if isinstance(obj, BundleMap) else obj.chart


def _json(obj) -> dict:
    c = _chart_of(obj)
    return {"type": _KIND[type(obj)], "base": list(c.base), "fiber": list(c.fiber),
            "components": [{"name": k, "expr": to_text(normalize(e), c)}
                           for k, e in obj.components()]}


def _text(obj) -> str:
    c = _chart_of(obj)
    if isinstance(obj, PDSystem):
        return "\n".join(f"{k}: {to_text(normalize(e), c)} = 0"
                         for k, e in obj.components()) or "0"
    if isinstance(obj, ConstraintSet):
        return "\n".join(f"{to_text(normalize(e), c)} = 0" for e in obj.exprs) or "{}"
    lines = []
    for k, e in obj.components():
        e = normalize(e)
        if e != 0:
            lines.append(f"{k} = {to_text(e, c)}")
    return "\n".join(lines) or "0"


def _lx(name: str) -> str:
    return sp.latex(sp.Symbol(name))


def _term(coef, basis: str) -> str:
    coef = normalize(coef)
    if coef == 1:
        return basis
    if coef == -1:
        return "- " + basis
    s = to_latex(coef)
    if isinstance(coef, sp.Add):
        s = rf"\left({s}\right)"
    return f"{s}\\, {basis}"


def _join(terms: list[str]) -> str:
    if not terms:
        return "0"
    out = terms[0]
    for t in terms[1:]:
        out += " " + t if t.startswith("- ") else " + " + t
    return out


def _latex(obj) -> str:
    c = _chart_of(obj)
    dnx, dn1 = "d^{n}x", (lambda i: f"d^{{n-1}}x_{{{_lx(c.base[i])}}}")
    terms = []
    if isinstance(obj, Form0):
        terms = [_term(e, dn1(i)) for i, e in enumerate(obj.f) if normalize(e) != 0]
    elif isinstance(obj, Form1):
        for i in range(c.n):
            for a in range(c.m):
                if normalize(obj.theta[i][a]) != 0:
                    terms.append(_term(obj.theta[i][a], f"d{_lx(c.fiber[a])}\\, {dn1(i)}"))
        if normalize(obj.H) != 0:
            terms.append(_term(-obj.H, dnx))
    elif isinstance(obj, Form2):
        for (i, a, b), e in sorted(obj.w.items()):
            terms.append(_term(2 * e, f"d{_lx(c.fiber[a])}\\, d{_lx(c.fiber[b])}\\, {dn1(i)}"))
        for a in range(c.m):
            if normalize(obj.v[a]) != 0:
                terms.append(_term(obj.v[a], f"d{_lx(c.fiber[a])}\\, {dnx}"))
    elif isinstance(obj, CoForm):
        terms = [_term(e, f"d^V {_lx(c.fiber[b])} \\otimes {dnx}")
                 for b, e in enumerate(obj.c) if normalize(e) != 0]
    elif isinstance(obj, VerticalField):
        terms = [_term(e, rf"\partial_{{{_lx(c.fiber[a])}}}")
                 for a, e in enumerate(obj.Y) if normalize(e) != 0]
    elif isinstance(obj, PDSystem):
        return "\n".join(f"{to_latex(normalize(e))} = 0" for e in obj.residuals) or "0"
    elif isinstance(obj, ConstraintSet):
        return "\n".join(f"{to_latex(normalize(e))} = 0" for e in obj.exprs) or r"\emptyset"
    else:
        return "\n".join(f"{k} = {to_latex(normalize(e))}" for k, e in obj.components())
    return _join(terms)


def _block(head: str, lines: list[str]) -> str:
    if not lines:
        return head + " { }"
    return head + " {\n" + "\n".join("  " + ln for ln in lines) + "\n}"


def render_model(model: SystemModel) -> str:
    """Whole-document text that parses back to an equivalent model."""
    c = model.chart
    t = lambda e: to_text(normalize(e), c)  # noqa: E731
    out = [f"bundle {{ base: {', '.join(c.base)}  fiber: {', '.join(c.fiber)} }}"]
    for name, args in c.functions.items():
        out.append(f"declare {name}({', '.join(args)})")
    for name, sym in c.constants.items():
        out.append(f"const {name}" + (f" {sym}" if sym else ""))
    for name, f in model.forms.items():
        lines = []
        if isinstance(f, Form0):
            lines = [f"f[{c.base[i]}] = {t(e)}" for i, e in enumerate(f.f) if normalize(e) != 0]
            deg = 0
        elif isinstance(f, Form1):
            deg = 1
            for i in range(c.n):
                for a in range(c.m):
                    if normalize(f.theta[i][a]) != 0:
                        lines.append(f"th[{c.base[i]}; {c.fiber[a]}] = {t(f.theta[i][a])}")
            if normalize(f.H) != 0:
                lines.append(f"h = {t(f.H)}")
        else:
            deg = 2
            for (i, a, b), e in sorted(f.w.items()):
                lines.append(f"w[{c.base[i]}; {c.fiber[a]}, {c.fiber[b]}] = {t(2 * e)}")
            for a in range(c.m):
                if normalize(f.v[a]) != 0:
                    lines.append(f"v[{c.fiber[a]}] = {t(f.v[a])}")
        out.append(_block(f"form {name} deg {deg}", lines))
    for name, fld in model.fields.items():
        out.append(_block(f"field {name}", [f"{y} = {t(e)}" for y, e in fld.components()]))
    for name, cur in model.currents.items():
        out.append(_block(f"current {name}",
                          [f"{c.base[i]} = {t(e)}" for i, e in enumerate(cur.f)]))
    for name, decl in model.maps.items():
        out.append(_block(f"map {name} -> {decl.target}",
                          [f"{k} = {t(e)}" for k, e in decl.comps.items()]))
    if model.relations:
        out.append(_block("relations", [f"{to_text(r.lhs, c)} = {t(r.rhs)}"
                                        for r in model.relations]))
    if model.constraints and model.constraints.exprs:
        out.append("constraints { " + "; ".join(t(e) for e in model.constraints.exprs) + " }")
    text = "\n".join(out) + "\n"
    if model.simulate:
        for run, cfg in model.simulate.items():
            head = "simulate" if run == "default" else f"simulate {run}"
            text += f"\n[{head}]\n" + "".join(f"{k} = {v}\n" for k, v in cfg.items())
    return text
