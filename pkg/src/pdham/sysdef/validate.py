"""Cross-object checks on a parsed model."""

from __future__ import annotations

import sympy as sp

from ..symexpr import free_atoms, is_jet_symbol
from .model import SystemModel
from .parser import Diagnostic


def _unknown_atoms(chart, e) -> list[str]:
    bad = []
    for a in free_atoms(sp.sympify(e)):
        if isinstance(a, sp.Symbol):
            name = a.name.split("[", 1)[0] if not is_jet_symbol(a) else None
            if name is not None and not chart.is_declared(name):
                bad.append(a.name)
        elif hasattr(a, "func") and not isinstance(a, sp.Derivative):
            if a.func.__name__ not in chart.functions:
                bad.append(a.func.__name__)
    return bad


def validate(model: SystemModel) -> list[Diagnostic]:
    """Empty list means the model is consistent."""
    c = model.chart
    out = []

    def diag(code, msg):
        out.append(Diagnostic(0, 0, code, msg))

    for name, comps in model.raw_currents.items():
        if len(comps) != c.n:
            diag("arity", f"current {name!r} has {len(comps)} of {c.n} components")
    for name, comps in model.raw_fields.items():
        for key in comps:
            if key not in c.fiber:
                diag("unknown-symbol", f"field {name!r} references {key!r}, not a fiber coordinate")
    groups = [("form", model.forms), ("field", model.fields), ("current", model.currents)]
    for kind, objs in groups:
        for name, obj in objs.items():
            if not obj.chart.same_coordinates(c):
                diag("chart", f"{kind} {name!r} lives on a different chart")
            for label, e in obj.components():
                for bad in _unknown_atoms(c, e):
                    diag("unknown-symbol", f"{kind} {name!r} component {label} uses {bad!r}")
    for rel in model.relations:
        if rel.lhs in free_atoms(rel.rhs) or rel.rhs.has(rel.lhs):
            diag("syntax", f"relation for {rel.lhs} is circular")
    return out
