"""Exact symbolic expressions for coefficient algebra.

Expressions are sympy trees.  This module pins down the small contract the
rest of the package relies on: declared-symbol checks, a canonical
``normalize``, a three-valued zero test that reports which regime decided,
polynomial coefficient splitting and numeric evaluation.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping

import sympy as sp
from sympy.core.function import AppliedUndef
from sympy.printing.str import StrPrinter

Expr = sp.Expr

ELEMENTARY = {
    "sqrt": sp.sqrt,
    "exp": sp.exp,
    "ln": sp.log,
    "log": sp.log,
    "sin": sp.sin,
    "cos": sp.cos,
}


class DeclarationError(ValueError):
    """A name was used that the symbol table does not know."""


class NonPolynomialError(ValueError):
    pass


class EvaluationError(ValueError):
    pass


class SymbolTable:
    """Names an expression may refer to.

    ``variables`` are coordinates (things one differentiates by),
    ``functions`` maps opaque function names to their argument names and
    ``constants`` maps constant names to a symmetry tag (None, "symmetric"
    or "skew").
    """

    def __init__(self, variables: Iterable[str] = (),
                 functions: Mapping[str, Iterable[str]] | None = None,
                 constants: Mapping[str, str | None] | None = None):
        self.variables = tuple(variables)
        self.functions = {k: tuple(v) for k, v in (functions or {}).items()}
        self.constants = dict(constants or {})

    def is_declared(self, name: str) -> bool:
        return (name in self.variables or name in self.functions
                or name in self.constants)

    def symbol(self, name: str) -> sp.Symbol:
        if name not in self.variables and name not in self.constants:
            raise DeclarationError(f"undeclared symbol {name!r}")
        return sp.Symbol(name)

    def function(self, name: str, args: Iterable[Expr] | None = None) -> Expr:
        if name not in self.functions:
            raise DeclarationError(f"undeclared function {name!r}")
        if args is None:
            args = [sp.Symbol(a) for a in self.functions[name]]
        args = list(args)
        if len(args) != len(self.functions[name]):
            raise DeclarationError(
                f"{name} takes {len(self.functions[name])} arguments, got {len(args)}")
        return sp.Function(name)(*args)

    def const(self, name: str, indices: Iterable = ()) -> Expr:
        return indexed_constant(name, tuple(indices), self.constants.get(name))

    def resolve(self, v) -> sp.Symbol:
        """Turn a variable name or symbol into a declared coordinate symbol."""
        name = v if isinstance(v, str) else getattr(v, "name", None)
        if name is None or name not in self.variables:
            raise DeclarationError(f"undeclared variable {v!r}")
        return sp.Symbol(name)


def indexed_constant(name: str, indices: tuple, symmetry: str | None = None) -> Expr:
    """Symbol for ``name[i,j,...]`` with declared index symmetry folded in."""
    if not indices:
        return sp.Symbol(name)
    idx = [str(i) for i in indices]
    sign = 1
    if symmetry == "symmetric":
        idx = sorted(idx, key=_index_key)
    elif symmetry == "skew":
        if len(set(idx)) < len(idx):
            return sp.Integer(0)
        order = sorted(range(len(idx)), key=lambda k: _index_key(idx[k]))
        sign = _permutation_sign(order)
        idx = [idx[k] for k in order]
    return sign * sp.Symbol(f"{name}[{','.join(idx)}]")


def _index_key(s: str):
    return (0, int(s), "") if s.lstrip("-").isdigit() else (1, 0, s)


def _permutation_sign(perm: list[int]) -> int:
    sign, seen = 1, [False] * len(perm)
    for i in range(len(perm)):
        if seen[i]:
            continue
        j, length = i, 0
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


def jet_symbol(base: str, fiber: str) -> sp.Symbol:
    """Placeholder D[i][a] standing for the partial of fiber a along base i."""
    return sp.Symbol(f"D[{base}][{fiber}]")


def is_jet_symbol(s) -> bool:
    return isinstance(s, sp.Symbol) and s.name.startswith("D[")


def _as_symbol(v, table: SymbolTable | None) -> sp.Symbol:
    if table is not None:
        return table.resolve(v)
    if isinstance(v, str):
        return sp.Symbol(v)
    if isinstance(v, sp.Symbol):
        return v
    raise DeclarationError(f"not a variable: {v!r}")


def diff(e: Expr, v, table: SymbolTable | None = None) -> Expr:
    """Partial derivative of ``e`` by the variable ``v``."""
    return sp.diff(sp.sympify(e), _as_symbol(v, table))


# -- normalization ---------------------------------------------------------

def _is_atom(b) -> bool:
    return isinstance(b, (sp.Symbol, AppliedUndef, sp.Derivative))


def _root_substitution(e: Expr):
    """Replace b^(p/q) over atoms b by powers of a fresh root symbol.

    Returns the rewritten expression and the map to undo it.  After the
    rewrite every fractional power of an atom is an integer power of an
    independent symbol, so rational-function canonicalization applies.
    """
    dens: dict = {}
    for p in e.atoms(sp.Pow):
        if p.exp.is_Rational and not p.exp.is_Integer and _is_atom(p.base):
            dens[p.base] = math.lcm(dens.get(p.base, 1), int(p.exp.q))
    if not dens:
        return e, {}
    forward, back = {}, {}
    for k, (b, q) in enumerate(sorted(dens.items(), key=lambda t: sp.default_sort_key(t[0]))):
        g = sp.Dummy(f"r{k}", positive=True)
        forward[b] = (g, q)
        back[g] = b ** sp.Rational(1, q)

    def rewrite(node):
        if isinstance(node, sp.Pow) and node.base in forward and node.exp.is_Rational:
            g, q = forward[node.base]
            return g ** int(node.exp * q)
        if node in forward:
            g, q = forward[node]
            return g ** q
        if node.args and not isinstance(node, (AppliedUndef, sp.Derivative)):
            return node.func(*[rewrite(a) for a in node.args])
        return node

    return rewrite(e), back


def normalize(e: Expr) -> Expr:
    """Canonical form: cancelled ratio of expanded polynomials over the atoms."""
    e = sp.sympify(e)
    if e.is_Number:
        return e
    if _is_polynomial_shape(e):
        return sp.expand(e, power_exp=False, power_base=False, log=False)
    r, back = _root_substitution(e)
    n = sp.cancel(sp.together(r))
    if back:
        n = n.xreplace(back)
        n = sp.cancel(n) if not _has_fractional_atom_powers(n) else n
    return n


def _is_polynomial_shape(e) -> bool:
    """No negative or fractional powers outside function arguments."""
    stack = [e]
    while stack:
        node = stack.pop()
        if isinstance(node, sp.Pow):
            if not (node.exp.is_Integer and node.exp > 0):
                return False
        elif isinstance(node, (sp.Add, sp.Mul)):
            pass
        elif node.args and not isinstance(node, (AppliedUndef, sp.Derivative)):
            # elementary function: fine only if its argument is already canonical
            if any(a != normalize(a) for a in node.args):
                return False
            continue
        elif not (node.is_Atom or isinstance(node, (AppliedUndef, sp.Derivative))):
            return False
        stack.extend(node.args if isinstance(node, (sp.Add, sp.Mul, sp.Pow)) else ())
    return True


def _has_fractional_atom_powers(e) -> bool:
    return any(p.exp.is_Rational and not p.exp.is_Integer and _is_atom(p.base)
               for p in e.atoms(sp.Pow))


def is_rational_class(e: Expr) -> bool:
    """True when ``e`` is a ratio of polynomials in independent atoms."""
    if e.is_Number or e is sp.pi or e is sp.E:
        return True
    if _is_atom(e):
        return True
    if isinstance(e, (sp.Add, sp.Mul)):
        return all(is_rational_class(a) for a in e.args)
    if isinstance(e, sp.Pow):
        return e.exp.is_Integer and is_rational_class(e.base)
    return False


# -- zero testing ----------------------------------------------------------

class Verdict(str, Enum):
    ZERO = "zero"
    NONZERO = "nonzero"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class ZeroTest:
    verdict: Verdict
    exact: bool
    value: float | None = None

    @property
    def zero(self) -> bool:
        return self.verdict is Verdict.ZERO

    @property
    def nonzero(self) -> bool:
        return self.verdict is Verdict.NONZERO

    def __str__(self) -> str:
        if self.verdict is Verdict.ZERO and not self.exact:
            return "zero (probabilistic)"
        return self.verdict.value


@dataclass(frozen=True)
class ZeroTestConfig:
    samples: int = 16
    zero_tol: float = 1e-9
    nonzero_tol: float = 1e-6
    seed: int = 20240601
    denominator: int = 97


DEFAULT_ZERO_TEST = ZeroTestConfig()
_config = [DEFAULT_ZERO_TEST]


def set_zero_test_config(cfg: ZeroTestConfig) -> None:
    """Install the process-wide zero-test configuration (CLI --seed)."""
    _config[0] = cfg


def zero_test_config() -> ZeroTestConfig:
    return _config[0]


def free_atoms(e: Expr) -> set:
    """Independent atoms of ``e``: symbols, opaque applications and their partials."""
    out = set()

    def walk(node):
        if isinstance(node, sp.Derivative) or isinstance(node, AppliedUndef):
            out.add(node)
            return
        if isinstance(node, sp.Symbol):
            out.add(node)
            return
        for a in node.args:
            walk(a)

    walk(e)
    return out


def is_zero(e: Expr, config: ZeroTestConfig | None = None) -> ZeroTest:
    cfg = config or _config[0]
    e = sp.sympify(e)
    if e == 0:
        return ZeroTest(Verdict.ZERO, True, 0.0)
    r, _ = _root_substitution(e)
    n = sp.cancel(sp.together(r))
    if n == 0:
        return ZeroTest(Verdict.ZERO, True, 0.0)
    if is_rational_class(n):
        return ZeroTest(Verdict.NONZERO, True)
    if _radicals_vanish(r):
        return ZeroTest(Verdict.ZERO, True, 0.0)
    return _numeric_zero_test(n, cfg)


def _radicals_vanish(e: Expr) -> bool:
    """Exact zero proof for expressions with roots of non-atomic bases.

    Each R^(p/q) becomes g^(p*Q/q) for a fresh g with g^Q = R; the numerator is
    reduced modulo g^Q - R.  A zero remainder proves e = 0.  A nonzero
    remainder proves nothing (R might be a perfect power), so callers fall back.
    """
    dens: dict = {}
    for p in e.atoms(sp.Pow):
        if p.exp.is_Rational and not p.exp.is_Integer and not _is_atom(p.base):
            dens[p.base] = math.lcm(dens.get(p.base, 1), int(p.exp.q))
    if not dens:
        return False
    gens = {}
    for k, (b, q) in enumerate(sorted(dens.items(), key=lambda t: sp.default_sort_key(t[0]))):
        gens[b] = (sp.Dummy(f"g{k}"), q)

    def rewrite(node):
        if isinstance(node, sp.Pow) and node.base in gens and node.exp.is_Rational:
            g, q = gens[node.base]
            return g ** int(node.exp * q)
        if node.args and not isinstance(node, (AppliedUndef, sp.Derivative)):
            return node.func(*[rewrite(a) for a in node.args])
        return node

    num, _ = sp.fraction(sp.cancel(sp.together(rewrite(e))))
    num = sp.expand(num)
    for b, (g, q) in gens.items():
        if not num.has(g):
            continue
        try:
            num = sp.rem(num, g ** q - b, g)
        except sp.PolynomialError:
            return False
        num = sp.expand(num)
    return sp.cancel(num) == 0


def _numeric_zero_test(e: Expr, cfg: ZeroTestConfig) -> ZeroTest:
    rng = random.Random(cfg.seed)
    atoms = sorted(free_atoms(e), key=sp.default_sort_key)
    values, attempts = [], 0
    while len(values) < cfg.samples and attempts < 8 * cfg.samples:
        attempts += 1
        point = {a: sp.Rational(rng.randint(1, 2 * cfg.denominator), cfg.denominator)
                 for a in atoms}
        try:
            v = complex(e.xreplace(point).evalf(30))
        except (TypeError, ValueError, ZeroDivisionError):
            continue
        if not (math.isfinite(v.real) and math.isfinite(v.imag)):
            continue
        values.append(abs(v))
    if not values:
        return ZeroTest(Verdict.UNKNOWN, False)
    worst = max(values)
    if worst < cfg.zero_tol:
        return ZeroTest(Verdict.ZERO, False, worst)
    if worst > cfg.nonzero_tol:
        return ZeroTest(Verdict.NONZERO, False, worst)
    return ZeroTest(Verdict.UNKNOWN, False, worst)


# -- substitution ----------------------------------------------------------

def substitute(e: Expr, bindings: Mapping, table: SymbolTable | None = None) -> Expr:
    """Simultaneous substitution of variables, followed by normalize."""
    mapping = {_as_symbol(k, table): sp.sympify(v) for k, v in bindings.items()}
    return normalize(sp.sympify(e).subs(mapping, simultaneous=True))


# -- polynomial coefficients -----------------------------------------------

@dataclass(frozen=True, order=True)
class Monomial:
    """Exponent vector over named variables; absent names have exponent 0."""

    powers: tuple[tuple[str, int], ...] = ()

    @classmethod
    def of(cls, mapping: Mapping[str, int]) -> "Monomial":
        return cls(tuple(sorted((k, int(v)) for k, v in mapping.items() if v)))

    def degree(self) -> int:
        return sum(p for _, p in self.powers)

    def as_expr(self) -> Expr:
        return sp.Mul(*[sp.Symbol(k) ** p for k, p in self.powers])

    def __str__(self) -> str:
        if not self.powers:
            return "1"
        return "*".join(k if p == 1 else f"{k}^{p}" for k, p in self.powers)


def poly_coefficients(e: Expr, vars: Iterable, table: SymbolTable | None = None) -> dict:
    """Coefficients of ``e`` as a polynomial in ``vars``."""
    syms = [_as_symbol(v, table) for v in vars]
    n = normalize(e)
    if n == 0:
        return {}
    num, den = sp.fraction(n)
    if den.free_symbols & set(syms) or any(_depends_opaquely(den, s) for s in syms):
        raise NonPolynomialError("denominator depends on a splitting variable")
    try:
        poly = sp.Poly(num, *syms)
    except sp.PolynomialError as exc:
        raise NonPolynomialError(str(exc)) from None
    out = {}
    for monom, coeff in poly.as_dict(native=False).items():
        c = normalize(coeff / den)
        if c == 0:
            continue
        if any(_depends_opaquely(c, s) or s in c.free_symbols for s in syms):
            raise NonPolynomialError("coefficient depends on a splitting variable")
        out[Monomial.of({s.name: k for s, k in zip(syms, monom)})] = c
    return out


def _depends_opaquely(e: Expr, s: sp.Symbol) -> bool:
    return any(s in a.free_symbols for a in e.atoms(AppliedUndef))


# -- numeric evaluation ----------------------------------------------------

def eval_numeric(e: Expr, point: Mapping) -> float:
    """Evaluate to a float; opaque atoms need values of their own."""
    e = sp.sympify(e)
    by_text = {}
    binding = {}
    for k, v in point.items():
        if isinstance(k, str):
            by_text[k] = v
        else:
            binding[k] = v
    for a in free_atoms(e):
        if a in binding:
            continue
        key = to_text(a)
        if key in by_text:
            binding[a] = by_text[key]
        elif isinstance(a, sp.Symbol) and a.name in by_text:
            binding[a] = by_text[a.name]
        elif isinstance(a, AppliedUndef) and a.func.__name__ in by_text:
            binding[a] = by_text[a.func.__name__]
        else:
            raise EvaluationError(f"unbound atom {to_text(a)}")
    exact = {a: sp.nsimplify(v) if isinstance(v, float) else sp.sympify(v)
             for a, v in binding.items()}
    val = e.xreplace(exact).evalf(30)
    try:
        z = complex(val)
    except TypeError:
        raise EvaluationError(f"could not evaluate {to_text(e)}") from None
    if not (math.isfinite(z.real) and math.isfinite(z.imag)) or abs(z.imag) > 1e-12 * max(1.0, abs(z.real)):
        raise EvaluationError(f"domain error evaluating {to_text(e)}")
    return float(z.real)


# -- printing --------------------------------------------------------------

class _DslPrinter(StrPrinter):
    """Prints expressions in the .pdh expression syntax."""

    def __init__(self, table: SymbolTable | None = None):
        super().__init__({"order": None})
        self._table = table

    def _print_Pow(self, expr, rational=False):
        b, x = expr.base, expr.exp
        if x == -1:
            return "1/" + self.parenthesize(b, 50)
        bs = self._print(b)
        if not (b.is_Symbol or isinstance(b, (AppliedUndef, sp.Derivative, sp.Function))) or \
                (b.is_Number and (b < 0 or not b.is_Integer)):
            bs = f"({bs})"
        if x.is_Integer and x > 0:
            return f"{bs}^{x}"
        return f"{bs}^({self._print(x)})"

    def _print_Rational(self, expr):
        return f"{expr.p}/{expr.q}" if expr.q != 1 else str(expr.p)

    def _print_Function(self, expr):
        if isinstance(expr, AppliedUndef):
            return self._applied(expr)
        if expr.func is sp.log:
            return f"ln({self._print(expr.args[0])})"
        return super()._print_Function(expr)

    def _applied(self, expr):
        name = expr.func.__name__
        declared = self._table.functions.get(name) if self._table else None
        if declared is not None and tuple(str(a) for a in expr.args) == declared \
                and all(a.is_Symbol for a in expr.args):
            return name
        return f"{name}({', '.join(self._print(a) for a in expr.args)})"

    def _print_Derivative(self, expr):
        inner = self._print(expr.expr)
        vs = []
        for v, k in expr.variable_count:
            vs.extend([self._print(v)] * int(k))
        return f"diff({inner}, {', '.join(vs)})"

    def _print_Exp1(self, expr):
        return "exp(1)"

    def _print_Pi(self, expr):
        return "pi"


def to_text(e: Expr, table: SymbolTable | None = None) -> str:
    return _DslPrinter(table).doprint(sp.sympify(e))


def to_latex(e: Expr) -> str:
    e = sp.sympify(e)
    names = {}
    for s in e.free_symbols:
        if is_jet_symbol(s):
            base, fib = s.name[2:-1].split("][")
            names[s] = rf"\partial_{{{base}}} {fib}"
        elif "[" in s.name:
            head, idx = s.name[:-1].split("[", 1)
            names[s] = f"{head}^{{{idx.replace(',', ' ')}}}"
    return sp.latex(e, symbol_names=names)


# -- helpers used by several modules ---------------------------------------

def canonical_sign(e: Expr) -> Expr:
    """Primitive, sign-fixed representative of ``e = 0`` as a constraint."""
    n = normalize(e)
    if n == 0:
        return n
    num, _ = sp.fraction(n)
    if num.is_Number:
        return sp.Integer(1)
    content, prim = num.as_content_primitive()
    prim = sp.expand(prim)
    lead = _leading_coefficient(prim)
    return -prim if lead < 0 else prim


def _leading_coefficient(p: Expr):
    gens = sorted(free_atoms(p), key=sp.default_sort_key)
    try:
        return sp.Poly(p, *gens).LC() if gens else p
    except sp.PolynomialError:
        c, _ = p.as_coeff_Mul()
        return c
