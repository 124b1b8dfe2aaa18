"""System descriptions: chart, typed objects, the .pdh parser and renderers."""

from .model import (BundleMap, Chart, ChartMismatch, CoForm, Connection, ConstraintSet,
                    Form0, Form1, Form2, MapDecl, PDSystem, Relation, SystemModel,
                    VerticalField, form_degree, require_same_chart)
from .parser import Diagnostic, ParseFailure, parse_expression, parse_system, tokenize
from .render import render, render_model
from .schema import REPORT_SCHEMA
from .validate import validate
from .wedge import DiffForm, WedgeError, from_form, to_form

__all__ = [
    "REPORT_SCHEMA", "BundleMap", "Chart", "ChartMismatch", "CoForm", "Connection", "ConstraintSet",
    "Diagnostic", "DiffForm", "Form0", "Form1", "Form2", "MapDecl", "PDSystem",
    "ParseFailure", "Relation", "parse_expression", "SystemModel", "VerticalField", "WedgeError",
    "form_degree", "from_form", "parse_system", "render", "render_model",
    "require_same_chart", "to_form", "tokenize", "validate",
]
