"""Parser for the .pdh system description format."""

from __future__ import annotations

import configparser
import re
from dataclasses import dataclass

import sympy as sp
from sympy.core.function import AppliedUndef

from ..symexpr import ELEMENTARY, indexed_constant, jet_symbol
from .model import (ConstraintSet, Form0, Form1, Form2, MapDecl, Relation,
                    SystemModel, VerticalField)
from .model import Chart
from .wedge import DiffForm, WedgeError, to_form


@dataclass(frozen=True)
class Diagnostic:
    line: int
    col: int
    code: str
    message: str

    def __str__(self):
        return f"{self.line}:{self.col}: {self.code}: {self.message}"


class ParseFailure(Exception):
    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("\n".join(str(d) for d in self.diagnostics))


class _Abort(Exception):
    """Semantic problem inside one item; recorded and parsing continues."""

    def __init__(self, diag: Diagnostic):
        self.diag = diag


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    col: int


_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>\#[^\n]*)
  | (?P<num>\d+(?:\.\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<arrow>->)
  | (?P<op>[{}\[\]();,:=+\-*/^])
""", re.VERBOSE)

KEYWORDS = {"bundle", "declare", "const", "form", "field", "current", "map",
            "constraints", "relations", "let"}
RESERVED = {"pi", "diff", "D"} | set(ELEMENTARY)


def tokenize(text: str) -> list[Token]:
    toks, pos, line, col = [], 0, 1, 1
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise ParseFailure([Diagnostic(line, col, "lexical",
                                           f"unexpected character {text[pos]!r}")])
        kind = m.lastgroup
        s = m.group()
        if kind == "nl":
            line, col = line + 1, 1
        else:
            if kind in ("num", "name", "arrow", "op"):
                toks.append(Token(kind, s, line, col))
            col += len(s)
        pos = m.end()
    toks.append(Token("eof", "", line, col))
    return toks


def split_simulate(text: str) -> tuple[str, str | None]:
    """Separate trailing ini-style [simulate ...] sections from the DSL body."""
    m = re.search(r"^[ \t]*\[simulate( [A-Za-z0-9_]+)?\][ \t]*$", text, re.MULTILINE)
    if not m:
        return text, None
    return text[:m.start()], text[m.start():]


def parse_simulate_section(section: str) -> dict:
    """Run name -> settings; ``[simulate]`` is the run called "default"."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",), interpolation=None)
    cp.optionxform = str
    cp.read_string(section)
    runs = {}
    for name in cp.sections():
        head, _, rest = name.partition(" ")
        if head != "simulate":
            raise configparser.Error(f"unexpected section [{name}]")
        runs[rest.strip() or "default"] = dict(cp.items(name))
    return runs


# precedence climbing ------------------------------------------------------

_BINARY = {"+": (1, "left"), "-": (1, "left"), "*": (2, "left"), "/": (2, "left"),
           "^": (4, "right")}
_UNARY_PREC = 3


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.toks = tokens
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def advance(self) -> Token:
        t = self.toks[self.i]
        self.i += 1
        return t

    def error(self, msg: str, tok: Token | None = None, code: str = "syntax"):
        t = tok or self.tok
        raise ParseFailure([Diagnostic(t.line, t.col, code, msg)])

    def expect(self, text: str) -> Token:
        if self.tok.text != text or self.tok.kind == "eof":
            shown = self.tok.text or "end of input"
            self.error(f"expected {text!r}, found {shown!r}")
        return self.advance()

    def expect_name(self) -> Token:
        if self.tok.kind != "name":
            self.error(f"expected a name, found {self.tok.text or 'end of input'!r}")
        return self.advance()

    def accept(self, text: str) -> bool:
        if self.tok.text == text and self.tok.kind != "eof":
            self.advance()
            return True
        return False

    # expressions produce small AST tuples, evaluated later against the chart
    def expr(self, min_prec: int = 1):
        lhs = self.unary()
        while True:
            t = self.tok
            if t.kind != "op" or t.text not in _BINARY:
                return lhs
            prec, assoc = _BINARY[t.text]
            if prec < min_prec:
                return lhs
            self.advance()
            rhs = self.expr(prec + 1 if assoc == "left" else prec)
            lhs = ("bin", t.text, lhs, rhs, t)

    def unary(self):
        t = self.tok
        if t.text == "-" and t.kind == "op":
            self.advance()
            return ("neg", self.expr(_UNARY_PREC), t)
        if t.text == "+" and t.kind == "op":
            self.advance()
            return self.expr(_UNARY_PREC)
        return self.primary()

    def primary(self):
        t = self.tok
        if t.kind == "num":
            self.advance()
            return ("num", sp.Rational(t.text), t)
        if t.text == "(":
            self.advance()
            e = self.expr()
            self.expect(")")
            return e
        if t.kind == "name":
            self.advance()
            if t.text == "D" and self.tok.text == "[":
                self.advance()
                base = self.expect_name()
                self.expect("]")
                self.expect("[")
                fib = self.expect_name()
                self.expect("]")
                return ("jet", base.text, fib.text, t)
            if self.tok.text == "(":
                self.advance()
                args = []
                if self.tok.text != ")":
                    args.append(self.expr())
                    while self.accept(","):
                        args.append(self.expr())
                self.expect(")")
                return ("call", t.text, args, t)
            if self.tok.text == "[":
                self.advance()
                idx = []
                while True:
                    it = self.tok
                    if it.kind not in ("name", "num"):
                        self.error("expected an index")
                    self.advance()
                    idx.append(it.text)
                    if not self.accept(","):
                        break
                self.expect("]")
                return ("index", t.text, idx, t)
            return ("name", t.text, t)
        self.error(f"unexpected {t.text or 'end of input'!r} in expression")


class _Builder:
    """Evaluates expression ASTs and assembles the model."""

    def __init__(self):
        self.chart: Chart | None = None
        self.lets: dict = {}
        self.names: dict = {}
        self.diags: list[Diagnostic] = []
        self.model: SystemModel | None = None

    def fail(self, tok: Token, code: str, msg: str):
        raise _Abort(Diagnostic(tok.line, tok.col, code, msg))

    def claim(self, tok: Token, kind: str):
        if tok.text in self.names or (self.chart and self.chart.is_declared(tok.text)) \
                or tok.text in self.lets:
            self.fail(tok, "duplicate-name", f"name {tok.text!r} already defined")
        self.names[tok.text] = kind

    def need_chart(self, tok: Token) -> Chart:
        if self.chart is None:
            self.fail(tok, "syntax", "the bundle declaration must come first")
        return self.chart

    def eval(self, node, wedge: bool = False):
        kind = node[0]
        c = self.chart
        if kind == "num":
            return node[1]
        if kind == "neg":
            return -self.eval(node[1], wedge)
        if kind == "bin":
            _, op, l, r, tok = node
            a, b = self.eval(l, wedge), self.eval(r, wedge)
            return self._binary(op, a, b, tok)
        if kind == "jet":
            _, base, fib, tok = node
            if base not in c.base:
                self.fail(tok, "unknown-symbol", f"{base!r} is not a base coordinate")
            if fib not in c.fiber:
                self.fail(tok, "unknown-symbol", f"{fib!r} is not a fiber coordinate")
            return jet_symbol(base, fib)
        if kind == "index":
            _, name, idx, tok = node
            if name not in c.constants:
                self.fail(tok, "unknown-symbol", f"{name!r} is not a declared constant")
            return indexed_constant(name, tuple(idx), c.constants[name])
        if kind == "name":
            _, name, tok = node
            if name in self.lets:
                return self.lets[name]
            if name in c.variables or name in c.constants:
                return sp.Symbol(name)
            if name in c.functions:
                return c.function(name)
            if name == "pi":
                return sp.pi
            if wedge and name == "dnx":
                return DiffForm.volume(c)
            self.fail(tok, "unknown-symbol", f"unknown symbol {name!r}")
        if kind == "call":
            return self._call(node, wedge)
        raise AssertionError(kind)

    def _binary(self, op, a, b, tok):
        fa, fb = isinstance(a, DiffForm), isinstance(b, DiffForm)
        if op == "+":
            if fa != fb and not (a == 0 or b == 0):
                self.fail(tok, "syntax", "cannot add a form and a scalar")
            return a + b if not fa and not fb else (a if fa else DiffForm(self.chart)) + (b if fb else DiffForm(self.chart))
        if op == "-":
            return self._binary("+", a, -b, tok)
        if op == "*":
            if fa and fb:
                return a.wedge(b)
            if fa:
                return a.scale(b)
            if fb:
                return b.scale(a)
            return a * b
        if op == "/":
            if fb:
                self.fail(tok, "syntax", "cannot divide by a form")
            if fa:
                return a.scale(1 / b)
            if b == 0:
                self.fail(tok, "syntax", "division by zero")
            return a / b
        if op == "^":
            if fa or fb:
                self.fail(tok, "syntax", "cannot raise forms to powers")
            if not (isinstance(b, sp.Rational) or (b.is_Number and b.is_rational)):
                self.fail(tok, "syntax", "exponents must be integers or rationals")
            return a ** b
        raise AssertionError(op)

    def _call(self, node, wedge):
        _, name, args, tok = node
        c = self.chart
        if name in ELEMENTARY:
            if len(args) != 1:
                self.fail(tok, "arity", f"{name} takes one argument")
            x = self.eval(args[0], wedge)
            if isinstance(x, DiffForm):
                self.fail(tok, "syntax", f"{name} of a form")
            return ELEMENTARY[name](x)
        if name == "diff":
            if len(args) < 2:
                self.fail(tok, "arity", "diff needs an expression and at least one variable")
            e = self.eval(args[0], wedge)
            for a in args[1:]:
                if a[0] != "name" or a[1] not in c.variables:
                    self.fail(a[-1] if isinstance(a[-1], Token) else tok, "unknown-symbol",
                              "diff variables must be coordinates")
                e = sp.diff(e, sp.Symbol(a[1]))
            return e
        if wedge and name == "d":
            if len(args) != 1:
                self.fail(tok, "arity", "d takes one argument")
            return DiffForm.d(c, self.eval(args[0], False))
        if wedge and name == "dn1x":
            if len(args) != 1 or args[0][0] != "name" or args[0][1] not in c.base:
                self.fail(tok, "syntax", "dn1x needs a base coordinate name")
            return DiffForm.volume_minus(c, c.base.index(args[0][1]))
        if name in c.functions:
            if len(args) != len(c.functions[name]):
                self.fail(tok, "arity",
                          f"{name} takes {len(c.functions[name])} arguments, got {len(args)}")
            return sp.Function(name)(*[self.eval(a, False) for a in args])
        self.fail(tok, "unknown-symbol", f"unknown function {name!r}")

    def scalar(self, node):
        v = self.eval(node)
        if isinstance(v, DiffForm):
            raise AssertionError
        return sp.sympify(v)


def parse_system(text: str, *, check: bool = True) -> SystemModel:
    """Parse a .pdh document; raises ParseFailure with diagnostics on error."""
    body, sim = split_simulate(text)
    p = _Parser(tokenize(body))
    b = _Builder()
    while p.tok.kind != "eof":
        try:
            _item(p, b)
        except _Abort as exc:
            # the item was consumed before evaluation; keep going
            b.diags.append(exc.diag)
    if b.chart is None and not b.diags:
        b.diags.append(Diagnostic(1, 1, "syntax", "missing bundle declaration"))
    if b.diags:
        raise ParseFailure(b.diags)
    model = b.model
    if sim is not None:
        try:
            model.simulate = parse_simulate_section(sim)
        except configparser.Error as exc:
            raise ParseFailure([Diagnostic(body.count("\n") + 1, 1, "syntax",
                                           f"bad [simulate] section: {exc}")]) from None
    if check:
        from .validate import validate
        diags = validate(model)
        if diags:
            raise ParseFailure(diags)
    return model


def parse_expression(text: str, chart: Chart) -> sp.Expr:
    """Parse one scalar DSL expression against an existing chart."""
    p = _Parser(tokenize(text))
    b = _Builder()
    b.chart = chart
    try:
        node = p.expr()
        if p.tok.kind != "eof":
            p.error(f"unexpected {p.tok.text!r} after expression")
        e = b.eval(node)
    except _Abort as exc:
        raise ParseFailure([exc.diag]) from None
    if isinstance(e, DiffForm):
        raise ParseFailure([Diagnostic(1, 1, "syntax", "expected a scalar expression")])
    return sp.sympify(e)


def _item(p: _Parser, b: _Builder):
    t = p.tok
    if t.kind != "name" or t.text not in KEYWORDS:
        p.error(f"expected an item keyword, found {t.text!r}")
    p.advance()
    {"bundle": _bundle, "declare": _declare, "const": _const, "form": _form,
     "field": _field, "current": _current, "map": _map, "constraints": _constraints,
     "relations": _relations, "let": _let}[t.text](p, b, t)


def _namelist(p: _Parser, stop: set) -> list[Token]:
    out = []
    while p.tok.kind == "name" and p.tok.text not in stop:
        if p.peek().text == ":":
            break
        out.append(p.advance())
        p.accept(",")
    return out


def _bundle(p, b, kw):
    if b.chart is not None:
        b.fail(kw, "duplicate-name", "only one bundle per file")
    p.expect("{")
    head = p.expect_name()
    if head.text != "base":
        p.error("expected 'base:'", head)
    p.expect(":")
    base = _namelist(p, {"fiber"})
    head = p.expect_name()
    if head.text != "fiber":
        p.error("expected 'fiber:'", head)
    p.expect(":")
    fiber = _namelist(p, set())
    p.expect("}")
    if not base:
        b.fail(kw, "arity", "n ≥ 1 required")
    if not fiber:
        b.fail(kw, "arity", "m ≥ 1 required")
    seen = set()
    for tok in base + fiber:
        if tok.text in seen:
            b.fail(tok, "duplicate-name", f"coordinate {tok.text!r} repeated")
        if tok.text in RESERVED:
            b.fail(tok, "duplicate-name", f"{tok.text!r} is reserved")
        seen.add(tok.text)
    b.chart = Chart([t.text for t in base], [t.text for t in fiber])
    b.model = SystemModel(b.chart)


def _declare(p, b, kw):
    name = p.expect_name()
    p.expect("(")
    args = []
    if p.tok.text != ")":
        args.append(p.expect_name())
        while p.accept(","):
            args.append(p.expect_name())
    p.expect(")")
    c = b.need_chart(kw)
    b.claim(name, "function")
    for a in args:
        if a.text not in c.variables:
            b.fail(a, "unknown-symbol", f"argument {a.text!r} is not a coordinate")
    c.functions[name.text] = tuple(a.text for a in args)


def _const(p, b, kw):
    name = p.expect_name()
    sym = None
    if p.tok.kind == "name" and p.tok.text in ("symmetric", "skew"):
        sym = p.advance().text
    c = b.need_chart(kw)
    b.claim(name, "constant")
    c.constants[name.text] = sym


def _let(p, b, kw):
    name = p.expect_name()
    p.expect("=")
    node = p.expr()
    b.need_chart(kw)
    b.claim(name, "let")
    b.lets[name.text] = b.eval(node, wedge=True)


def _index_name(b, tok, names, what):
    if tok.text not in names:
        b.fail(tok, "unknown-symbol", f"{tok.text!r} is not a {what} coordinate")
    return names.index(tok.text)


def _form(p, b, kw):
    name = p.expect_name()
    p.expect("deg")
    deg_tok = p.advance()
    if deg_tok.text not in ("0", "1", "2"):
        p.error("degree must be 0, 1 or 2", deg_tok)
    deg = int(deg_tok.text)
    p.expect("{")
    entries = []
    while p.tok.text != "}":
        key = p.expect_name()
        idx = []
        if p.accept("["):
            idx.append(p.expect_name())
            if p.accept(";"):
                idx.append(p.expect_name())
                if p.accept(","):
                    idx.append(p.expect_name())
            p.expect("]")
        p.expect("=")
        entries.append((key, idx, p.expr()))
        p.accept(";")
    p.expect("}")
    c = b.need_chart(kw)
    b.claim(name, "form")
    n, m = c.n, c.m
    f = [sp.Integer(0)] * n
    theta = [[sp.Integer(0)] * m for _ in range(n)]
    H = sp.Integer(0)
    given: dict = {}
    v = [sp.Integer(0)] * m
    extra = None
    allowed = {0: {"f", "wedge"}, 1: {"th", "h", "wedge"}, 2: {"w", "v", "wedge"}}[deg]
    shapes = {"f": 1, "th": 2, "h": 0, "w": 3, "v": 1, "wedge": 0}
    seen = set()
    for key, idx, node in entries:
        if key.text not in allowed:
            b.fail(key, "syntax", f"component {key.text!r} not allowed in a degree-{deg} form")
        if len(idx) != shapes[key.text]:
            b.fail(key, "arity", f"component {key.text!r} takes {shapes[key.text]} indices")
        sig = (key.text, tuple(t.text for t in idx))
        if sig in seen and key.text != "wedge":
            b.fail(key, "duplicate-name", f"component {key.text}{list(sig[1])} given twice")
        seen.add(sig)
        if key.text == "wedge":
            val = b.eval(node, wedge=True)
            if not isinstance(val, DiffForm):
                if val == 0:
                    continue
                if deg == 0 and n == 1:
                    val = DiffForm(c, {(): val})
                else:
                    b.fail(key, "syntax", "wedge expression is not a form")
            try:
                part = to_form(val, deg) if val.terms else None
            except WedgeError as exc:
                b.fail(key, "syntax", str(exc))
            if part is not None:
                extra = part if extra is None else extra + part
            continue
        e = b.scalar(node)
        if key.text == "f":
            f[_index_name(b, idx[0], c.base, "base")] = e
        elif key.text == "h":
            H = e
        elif key.text == "th":
            theta[_index_name(b, idx[0], c.base, "base")][_index_name(b, idx[1], c.fiber, "fiber")] = e
        elif key.text == "v":
            v[_index_name(b, idx[0], c.fiber, "fiber")] = e
        elif key.text == "w":
            i = _index_name(b, idx[0], c.base, "base")
            a = _index_name(b, idx[1], c.fiber, "fiber")
            bb = _index_name(b, idx[2], c.fiber, "fiber")
            if a == bb:
                b.fail(idx[2], "skew", "repeated fiber index in skew slot")
            given[(i, a, bb)] = (e, key)
    if deg == 0:
        form = Form0(c, f)
    elif deg == 1:
        form = Form1(c, theta, H)
    else:
        from ..symexpr import is_zero
        W = [[[sp.Integer(0)] * m for _ in range(m)] for _ in range(n)]
        for (i, a, bb), (e, key) in given.items():
            other = given.get((i, bb, a))
            if other is not None and not is_zero(e + other[0]).zero:
                b.fail(key, "skew", "w entries for both index orders are not skew-consistent")
            W[i][a][bb] = e
        form = Form2.from_full(c, W, v)
    if extra is not None:
        form = form + extra
    b.model.forms[name.text] = form


def _assignments(p):
    p.expect("{")
    out = []
    while p.tok.text != "}":
        key = p.expect_name()
        p.expect("=")
        out.append((key, p.expr()))
        p.accept(";")
    p.expect("}")
    return out


def _field(p, b, kw):
    name = p.expect_name()
    entries = _assignments(p)
    c = b.need_chart(kw)
    b.claim(name, "field")
    comps = {}
    for key, node in entries:
        if key.text not in c.fiber:
            b.fail(key, "unknown-symbol", f"{key.text!r} is not a fiber coordinate")
        if key.text in comps:
            b.fail(key, "duplicate-name", f"component {key.text!r} given twice")
        comps[key.text] = b.scalar(node)
    b.model.raw_fields[name.text] = comps
    b.model.fields[name.text] = VerticalField(c, [comps.get(y, 0) for y in c.fiber])


def _current(p, b, kw):
    name = p.expect_name()
    entries = _assignments(p)
    c = b.need_chart(kw)
    b.claim(name, "current")
    comps = {}
    wedge = None
    for key, node in entries:
        if key.text == "wedge":
            val = b.eval(node, wedge=True)
            if not isinstance(val, DiffForm):
                val = DiffForm(c, {(): val}) if c.n == 1 else None
            if val is None:
                b.fail(key, "syntax", "wedge expression is not a form")
            try:
                part = to_form(val, 0)
            except WedgeError as exc:
                b.fail(key, "syntax", str(exc))
            wedge = part if wedge is None else wedge + part
            continue
        if key.text not in c.base:
            b.fail(key, "unknown-symbol", f"{key.text!r} is not a base coordinate")
        if key.text in comps:
            b.fail(key, "duplicate-name", f"component {key.text!r} given twice")
        comps[key.text] = b.scalar(node)
    if wedge is not None:
        for x, e in zip(c.base, wedge.f):
            comps[x] = comps.get(x, 0) + e
    b.model.raw_currents[name.text] = comps
    if len(comps) == c.n:
        b.model.currents[name.text] = Form0(c, [comps[x] for x in c.base])


def _map(p, b, kw):
    name = p.expect_name()
    p.expect("->")
    target = p.expect_name()
    entries = _assignments(p)
    b.need_chart(kw)
    b.claim(name, "map")
    comps = {}
    for key, node in entries:
        if key.text in comps:
            b.fail(key, "duplicate-name", f"component {key.text!r} given twice")
        comps[key.text] = b.scalar(node)
    b.model.maps[name.text] = MapDecl(name.text, target.text, comps)


def _constraints(p, b, kw):
    p.expect("{")
    nodes = []
    while p.tok.text != "}":
        nodes.append(p.expr())
        if not p.accept(";"):
            break
    p.expect("}")
    c = b.need_chart(kw)
    exprs = [b.scalar(n) for n in nodes]
    old = b.model.constraints.exprs if b.model.constraints else ()
    b.model.constraints = ConstraintSet(c, tuple(old) + tuple(exprs))


def _relations(p, b, kw):
    p.expect("{")
    items = []
    while p.tok.text != "}":
        start = p.tok
        lhs = p.expr()
        p.expect("=")
        items.append((start, lhs, p.expr()))
        p.accept(";")
    p.expect("}")
    b.need_chart(kw)
    rels = []
    for tok, lhs, rhs in items:
        l = b.scalar(lhs)
        if not isinstance(l, (sp.Derivative, AppliedUndef, sp.Symbol)):
            b.fail(tok, "syntax", "relation left side must be a single atom")
        rels.append(Relation(l, b.scalar(rhs)))
    b.model.relations = tuple(b.model.relations) + tuple(rels)
