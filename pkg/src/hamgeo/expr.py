"""Expression DSL for scalar functions on phase space.

Grammar (whitespace insignificant, no implicit multiplication)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | power
    power  := atom ('^' unary)?          # right-associative
    atom   := NUMBER | VARIABLE | FUNC '(' expr ')' | '(' expr ')'

Variables are ``x1..xn`` and ``p1..pn`` for the declared dimension ``n``;
functions are ``sin``, ``cos``, ``exp``, ``ln``, ``sqrt``.  Numeric
literals are decimal, optionally with an exponent part (``2``, ``0.5``,
``1e-3``).

Evaluation is generic: it only uses the arithmetic operators and the
:mod:`hamgeo.scalars` functions, so the same tree evaluates over plain
floats, jets, and jets of jets.  That genericity is the load-bearing
contract of this module.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence, Union

from . import scalars
from .errors import DimensionError, ParseError
from .phase import PhasePoint

__all__ = [
    "Expression",
    "Const",
    "Var",
    "Neg",
    "BinOp",
    "Call",
    "FUNCTIONS",
    "parse",
    "to_text",
    "evaluate",
    "free_variables",
    "validate",
    "HamiltonianSpec",
    "ControlAffineSystem",
    "pmp_hamiltonian",
    "VectorFieldSpec",
    "BaseVectorFieldSpec",
    "hamiltonian_field_spec",
]

FUNCTIONS = ("sin", "cos", "exp", "ln", "sqrt")

_VAR_RE = re.compile(r"^([xp])([1-9][0-9]*)$")


class Expression:
    """Base class of all AST nodes.  Nodes are immutable value objects."""

    __slots__ = ()

    def __str__(self) -> str:
        return to_text(self)


@dataclass(frozen=True)
class Const(Expression):
    value: float

    def __post_init__(self):
        object.__setattr__(self, "value", float(self.value))
        if not math.isfinite(self.value):
            raise ValueError(f"non-finite constant {self.value!r}")


@dataclass(frozen=True)
class Var(Expression):
    kind: str  # 'x' or 'p'
    index: int  # 1-based

    def __post_init__(self):
        if self.kind not in ("x", "p"):
            raise ValueError(f"variable kind must be 'x' or 'p', got {self.kind!r}")
        if not isinstance(self.index, int) or self.index < 1:
            raise ValueError(f"variable index must be a positive integer, got {self.index!r}")

    def slot(self, n: int) -> int:
        """Flat position in the (x1..xn, p1..pn) ordering."""
        return self.index - 1 if self.kind == "x" else n + self.index - 1


@dataclass(frozen=True)
class Neg(Expression):
    child: Expression


@dataclass(frozen=True)
class BinOp(Expression):
    op: str  # one of + - * / ^
    left: Expression
    right: Expression

    def __post_init__(self):
        if self.op not in ("+", "-", "*", "/", "^"):
            raise ValueError(f"unknown operator {self.op!r}")


@dataclass(frozen=True)
class Call(Expression):
    func: str
    arg: Expression

    def __post_init__(self):
        if self.func not in FUNCTIONS:
            raise ValueError(f"unknown function {self.func!r}")


# --------------------------------------------------------------------------
# parsing


_TOKEN_RE = re.compile(
    r"""
    (?P<num>(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^()])
  | (?P<ws>\s+)
    """,
    re.VERBOSE,
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        match = _TOKEN_RE.match(text, pos)
        if match is None:
            raise ParseError(f"unexpected character {text[pos]!r}", pos)
        kind = match.lastgroup
        if kind != "ws":
            tokens.append((kind, match.group(), pos))
        pos = match.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, dim: int):
        self.tokens = _tokenize(text)
        self.dim = dim
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect_op(self, char: str):
        kind, value, pos = self.peek()
        if kind != "op" or value != char:
            raise ParseError(f"expected {char!r}", pos)
        self.advance()

    def parse(self) -> Expression:
        node = self.expr()
        kind, value, pos = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected trailing input {value!r}", pos)
        return node

    def expr(self) -> Expression:
        node = self.term()
        while True:
            kind, value, _ = self.peek()
            if kind == "op" and value in ("+", "-"):
                self.advance()
                node = BinOp(value, node, self.term())
            else:
                return node

    def term(self) -> Expression:
        node = self.unary()
        while True:
            kind, value, _ = self.peek()
            if kind == "op" and value in ("*", "/"):
                self.advance()
                node = BinOp(value, node, self.unary())
            else:
                return node

    def unary(self) -> Expression:
        kind, value, _ = self.peek()
        if kind == "op" and value == "-":
            self.advance()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Expression:
        base = self.atom()
        kind, value, _ = self.peek()
        if kind == "op" and value == "^":
            self.advance()
            return BinOp("^", base, self.unary())
        return base

    def atom(self) -> Expression:
        kind, value, pos = self.advance()
        if kind == "num":
            return Const(float(value))
        if kind == "name":
            nxt_kind, nxt_value, _ = self.peek()
            if nxt_kind == "op" and nxt_value == "(":
                if value not in FUNCTIONS:
                    raise ParseError(f"unknown function {value!r}", pos)
                self.advance()
                arg = self.expr()
                self.expect_op(")")
                return Call(value, arg)
            match = _VAR_RE.match(value)
            if match is None:
                raise ParseError(f"unknown identifier {value!r}", pos)
            index = int(match.group(2))
            if index > self.dim:
                raise ParseError(
                    f"variable {value!r} out of range for dimension {self.dim}", pos
                )
            return Var(match.group(1), index)
        if kind == "op" and value == "(":
            node = self.expr()
            self.expect_op(")")
            return node
        if kind == "end":
            raise ParseError("unexpected end of input", pos)
        raise ParseError(f"unexpected token {value!r}", pos)


def parse(text: str, dim: int) -> Expression:
    """Parse expression text against a declared phase-space dimension."""
    if dim < 1:
        raise DimensionError(f"dimension must be at least 1, got {dim}")
    return _Parser(text, dim).parse()


# --------------------------------------------------------------------------
# printing


_ADD, _MUL, _UNARY, _POW, _ATOM = 1, 2, 3, 4, 5


def _prec(node: Expression) -> int:
    if isinstance(node, BinOp):
        if node.op in ("+", "-"):
            return _ADD
        if node.op in ("*", "/"):
            return _MUL
        return _POW
    if isinstance(node, Neg):
        return _UNARY
    return _ATOM


def _fmt_const(value: float) -> str:
    if value == int(value) and abs(value) < 1e16:
        return str(int(value))
    return repr(value)


def to_text(node: Expression) -> str:
    """Render an AST to text that reparses to a structurally identical AST."""
    if isinstance(node, Const):
        return _fmt_const(node.value)
    if isinstance(node, Var):
        return f"{node.kind}{node.index}"
    if isinstance(node, Call):
        return f"{node.func}({to_text(node.arg)})"
    if isinstance(node, Neg):
        inner = to_text(node.child)
        if _prec(node.child) < _UNARY:
            inner = f"({inner})"
        return f"-{inner}"
    if isinstance(node, BinOp):
        left, right = to_text(node.left), to_text(node.right)
        mine = _prec(node)
        if node.op == "^":
            if _prec(node.left) <= mine:
                left = f"({left})"
            if _prec(node.right) < mine:
                right = f"({right})"
        else:
            if _prec(node.left) < mine:
                left = f"({left})"
            if _prec(node.right) <= mine:
                right = f"({right})"
        return f"{left}{node.op}{right}"
    raise TypeError(f"not an expression node: {node!r}")


# --------------------------------------------------------------------------
# evaluation


def _int_const_exponent(node: Expression) -> int | None:
    """Integer value of a constant exponent subtree, if it has one."""
    sign = 1
    if isinstance(node, Neg):
        sign, node = -1, node.child
    if isinstance(node, Const) and node.value == int(node.value) and abs(node.value) < 2**31:
        return sign * int(node.value)
    return None


def _eval(node: Expression, values: tuple, n: int):
    t = type(node)
    if t is Const:
        return node.value
    if t is Var:
        if node.index > n:
            raise DimensionError(
                f"variable {node.kind}{node.index} out of range for dimension {n}"
            )
        return values[node.slot(n)]
    if t is Neg:
        return -_eval(node.child, values, n)
    if t is BinOp:
        if node.op == "^":
            k = _int_const_exponent(node.right)
            if k is not None:
                return scalars.int_pow(_eval(node.left, values, n), k)
            return scalars.power(_eval(node.left, values, n), _eval(node.right, values, n))
        a = _eval(node.left, values, n)
        b = _eval(node.right, values, n)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        return scalars.divide(a, b)
    if t is Call:
        return getattr(scalars, node.func)(_eval(node.arg, values, n))
    raise TypeError(f"not an expression node: {node!r}")


def evaluate(node: Expression, point: Union[PhasePoint, Sequence]):
    """Evaluate an expression at a phase point or over any scalar sequence.

    ``point`` may be a :class:`PhasePoint` (plain float evaluation) or a
    flat sequence of 2n scalars of any algebra supporting the operations
    (jets included).
    """
    if isinstance(point, PhasePoint):
        values = point.flat
    else:
        values = tuple(point)
    if len(values) % 2 != 0 or not values:
        raise DimensionError(
            f"expected an even number of scalars (x then p), got {len(values)}"
        )
    return _eval(node, values, len(values) // 2)


def free_variables(node: Expression) -> set[Var]:
    """The exact set of variables appearing in the tree."""
    out: set[Var] = set()

    def walk(e: Expression):
        if isinstance(e, Var):
            out.add(e)
        elif isinstance(e, Neg):
            walk(e.child)
        elif isinstance(e, BinOp):
            walk(e.left)
            walk(e.right)
        elif isinstance(e, Call):
            walk(e.arg)

    walk(node)
    return out


def validate(node: Expression, dim: int):
    """Raise :class:`DimensionError` if any variable index exceeds ``dim``."""
    for var in free_variables(node):
        if var.index > dim:
            raise DimensionError(
                f"variable {var.kind}{var.index} out of range for dimension {dim}"
            )


# --------------------------------------------------------------------------
# construction helpers (used by the PMP builder and by tree derivatives)
#
# These fold trivial constants at construction time (0+e, 1*e, constant
# arithmetic) so machine-built trees stay readable.  They never produce a
# negative Const: negative numbers become Neg of a positive constant, which
# is how the parser represents them, keeping print/parse round-trips exact.


def _const(value: float) -> Expression:
    if value < 0:
        return Neg(Const(-value))
    return Const(value)


def _is_const(node: Expression, value: float) -> bool:
    return isinstance(node, Const) and node.value == value


def _const_value(node: Expression) -> float | None:
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Neg) and isinstance(node.child, Const):
        return -node.child.value
    return None


def _neg(a: Expression) -> Expression:
    if _is_const(a, 0.0):
        return a
    if isinstance(a, Neg):
        return a.child
    return Neg(a)


def _add(a: Expression, b: Expression) -> Expression:
    if _is_const(a, 0.0):
        return b
    if _is_const(b, 0.0):
        return a
    ca, cb = _const_value(a), _const_value(b)
    if ca is not None and cb is not None:
        return _const(ca + cb)
    return BinOp("+", a, b)


def _sub(a: Expression, b: Expression) -> Expression:
    if _is_const(b, 0.0):
        return a
    if _is_const(a, 0.0):
        return _neg(b)
    ca, cb = _const_value(a), _const_value(b)
    if ca is not None and cb is not None:
        return _const(ca - cb)
    return BinOp("-", a, b)


def _mul(a: Expression, b: Expression) -> Expression:
    if _is_const(a, 0.0) or _is_const(b, 0.0):
        return Const(0.0)
    if _is_const(a, 1.0):
        return b
    if _is_const(b, 1.0):
        return a
    ca, cb = _const_value(a), _const_value(b)
    if ca is not None and cb is not None:
        return _const(ca * cb)
    return BinOp("*", a, b)


def _div(a: Expression, b: Expression) -> Expression:
    if _is_const(a, 0.0):
        return a
    if _is_const(b, 1.0):
        return a
    return BinOp("/", a, b)


def _pow_int(base: Expression, k: int) -> Expression:
    if k == 0:
        return Const(1.0)
    if k == 1:
        return base
    return BinOp("^", base, _const(float(k)))


def _differentiate(node: Expression, var: Var) -> Expression:
    """Mechanical tree derivative with respect to one variable.

    Internal plumbing: it backs the symbolic momentum components of
    complete lifts and the compiled Hamilton right-hand sides.  No
    simplification beyond the constant folding of the builders above.
    """
    t = type(node)
    if t is Const:
        return Const(0.0)
    if t is Var:
        return Const(1.0) if node == var else Const(0.0)
    if t is Neg:
        return _neg(_differentiate(node.child, var))
    if t is BinOp:
        da = _differentiate(node.left, var)
        if node.op in ("+", "-"):
            db = _differentiate(node.right, var)
            return _add(da, db) if node.op == "+" else _sub(da, db)
        if node.op == "*":
            db = _differentiate(node.right, var)
            return _add(_mul(da, node.right), _mul(node.left, db))
        if node.op == "/":
            db = _differentiate(node.right, var)
            numer = _sub(_mul(da, node.right), _mul(node.left, db))
            return _div(numer, _pow_int(node.right, 2))
        # power
        k = _int_const_exponent(node.right)
        if k is not None:
            if k == 0:
                return Const(0.0)
            return _mul(_mul(_const(float(k)), _pow_int(node.left, k - 1)), da)
        dg = _differentiate(node.right, var)
        inner = _add(
            _mul(dg, Call("ln", node.left)),
            _div(_mul(node.right, da), node.left),
        )
        return _mul(BinOp("^", node.left, node.right), inner)
    if t is Call:
        du = _differentiate(node.arg, var)
        u = node.arg
        if node.func == "sin":
            return _mul(Call("cos", u), du)
        if node.func == "cos":
            return _neg(_mul(Call("sin", u), du))
        if node.func == "exp":
            return _mul(Call("exp", u), du)
        if node.func == "ln":
            return _div(du, u)
        # sqrt
        return _div(du, _mul(_const(2.0), Call("sqrt", u)))
    raise TypeError(f"not an expression node: {node!r}")


# --------------------------------------------------------------------------
# compiled float evaluation
#
# Trajectory integration evaluates the same handful of expressions millions
# of times; compiling each tree to one Python lambda over plain floats is an
# order of magnitude faster than interpreting the AST.  Domain guards mirror
# hamgeo.scalars so both paths reject the same inputs.


def _guarded_ln(v: float) -> float:
    if v <= 0.0:
        raise ValueError(f"ln of non-positive value {v!r}")
    return math.log(v)


def _guarded_sqrt(v: float) -> float:
    if v <= 0.0:
        raise ValueError(f"sqrt of non-positive value {v!r}")
    return math.sqrt(v)


def _guarded_pow(base: float, exponent: float) -> float:
    if base < 0.0 and not float(exponent).is_integer():
        raise ValueError(
            f"power of negative base {base!r} with non-integer exponent {exponent!r}"
        )
    if base == 0.0 and exponent <= 0.0:
        raise ValueError(f"zero base with non-positive exponent {exponent!r}")
    return math.pow(base, exponent)


_COMPILE_ENV = {
    "sin": math.sin,
    "cos": math.cos,
    "exp": math.exp,
    "_ln": _guarded_ln,
    "_sqrt": _guarded_sqrt,
    "_pow": _guarded_pow,
}


def _emit(node: Expression, n: int) -> str:
    t = type(node)
    if t is Const:
        return f"({node.value!r})"
    if t is Var:
        return f"v{node.slot(n)}"
    if t is Neg:
        return f"(-{_emit(node.child, n)})"
    if t is BinOp:
        if node.op == "^":
            k = _int_const_exponent(node.right)
            if k is not None:
                return f"({_emit(node.left, n)})**({k})"
            return f"_pow({_emit(node.left, n)}, {_emit(node.right, n)})"
        return f"({_emit(node.left, n)}{node.op}{_emit(node.right, n)})"
    if t is Call:
        name = {"ln": "_ln", "sqrt": "_sqrt"}.get(node.func, node.func)
        return f"{name}({_emit(node.arg, n)})"
    raise TypeError(f"not an expression node: {node!r}")


def _compile_float(node: Expression, dim: int) -> Callable[..., float]:
    """Compile a tree to a float function of the 2*dim flat coordinates.

    The returned callable takes the flat coordinates as positional
    arguments.  It raises ValueError / ZeroDivisionError / OverflowError on
    domain violations; callers translate those to EvaluationError.
    """
    validate(node, dim)
    args = ", ".join(f"v{i}" for i in range(2 * dim))
    source = f"def _compiled({args}):\n    return {_emit(node, dim)}\n"
    namespace: dict = dict(_COMPILE_ENV)
    exec(source, namespace)  # noqa: S102 - source is generated from our own AST
    return namespace["_compiled"]


# --------------------------------------------------------------------------
# Hamiltonians


@dataclass(frozen=True)
class HamiltonianSpec:
    """A named Hamiltonian: dimension ``n`` plus its defining expression."""

    name: str
    dim: int
    expr: Expression

    def __post_init__(self):
        if self.dim < 1:
            raise DimensionError(f"dimension must be at least 1, got {self.dim}")
        validate(self.expr, self.dim)

    @classmethod
    def from_text(cls, name: str, dim: int, text: str) -> "HamiltonianSpec":
        return cls(name, dim, parse(text, dim))


@dataclass(frozen=True)
class ControlAffineSystem:
    """A driftless control-affine system: m base vector fields on x-space."""

    dim: int
    generators: tuple[tuple[Expression, ...], ...]

    def __post_init__(self):
        if self.dim < 1:
            raise DimensionError(f"dimension must be at least 1, got {self.dim}")
        generators = tuple(tuple(gen) for gen in self.generators)
        object.__setattr__(self, "generators", generators)
        for a, gen in enumerate(generators):
            if len(gen) != self.dim:
                raise DimensionError(
                    f"generator {a} has {len(gen)} components, expected {self.dim}"
                )
            for comp in gen:
                for var in free_variables(comp):
                    if var.kind != "x":
                        raise DimensionError(
                            f"generator {a} references momentum variable p{var.index}"
                        )
                    if var.index > self.dim:
                        raise DimensionError(
                            f"generator {a} references x{var.index}, beyond dimension {self.dim}"
                        )

    @classmethod
    def from_text(cls, dim: int, generators: Sequence[Sequence[str]]) -> "ControlAffineSystem":
        parsed = tuple(tuple(parse(c, dim) for c in gen) for gen in generators)
        return cls(dim, parsed)


@dataclass(frozen=True)
class VectorFieldSpec:
    """A vector field on phase space, split into x- and p-components.

    Component ``x_components[i]`` multiplies d/dx^{i+1} and
    ``p_components[i]`` multiplies d/dp_{i+1}; every component may depend
    on all of x and p.
    """

    dim: int
    x_components: tuple[Expression, ...]
    p_components: tuple[Expression, ...]

    def __post_init__(self):
        if self.dim < 1:
            raise DimensionError(f"dimension must be at least 1, got {self.dim}")
        object.__setattr__(self, "x_components", tuple(self.x_components))
        object.__setattr__(self, "p_components", tuple(self.p_components))
        for label, comps in (("x", self.x_components), ("p", self.p_components)):
            if len(comps) != self.dim:
                raise DimensionError(
                    f"{label}-components have length {len(comps)}, expected {self.dim}"
                )
            for comp in comps:
                validate(comp, self.dim)

    @classmethod
    def from_text(
        cls, dim: int, x_components: Sequence[str], p_components: Sequence[str]
    ) -> "VectorFieldSpec":
        return cls(
            dim,
            tuple(parse(c, dim) for c in x_components),
            tuple(parse(c, dim) for c in p_components),
        )


@dataclass(frozen=True)
class BaseVectorFieldSpec:
    """A vector field on the base manifold: x-components only, no momenta."""

    dim: int
    components: tuple[Expression, ...]

    def __post_init__(self):
        if self.dim < 1:
            raise DimensionError(f"dimension must be at least 1, got {self.dim}")
        object.__setattr__(self, "components", tuple(self.components))
        if len(self.components) != self.dim:
            raise DimensionError(
                f"expected {self.dim} components, got {len(self.components)}"
            )
        for comp in self.components:
            for var in free_variables(comp):
                if var.kind != "x":
                    raise DimensionError(
                        f"base field references momentum variable p{var.index}"
                    )
                if var.index > self.dim:
                    raise DimensionError(
                        f"base field references x{var.index}, beyond dimension {self.dim}"
                    )

    @classmethod
    def from_text(cls, dim: int, components: Sequence[str]) -> "BaseVectorFieldSpec":
        return cls(dim, tuple(parse(c, dim) for c in components))


@lru_cache(maxsize=None)
def hamiltonian_field_spec(ham: HamiltonianSpec) -> VectorFieldSpec:
    """The Hamiltonian vector field as symbolic component expressions:
    (dH/dp_i, -dH/dx^i)."""
    xs = tuple(_differentiate(ham.expr, Var("p", i + 1)) for i in range(ham.dim))
    ps = tuple(
        _neg(_differentiate(ham.expr, Var("x", i + 1))) for i in range(ham.dim)
    )
    return VectorFieldSpec(ham.dim, xs, ps)


def pmp_hamiltonian(sys: ControlAffineSystem) -> HamiltonianSpec:
    """Quadratic-cost Hamiltonian of a driftless control-affine system.

    Maximizing p·(sum_a u^a X_a) - |u|^2/2 over the controls sets
    u^a = p·X_a and leaves H = (1/2) sum_a (sum_i p_i X_a^i(x))^2.
    """
    if not sys.generators:
        raise ValueError("need at least one generator")
    squares = []
    for gen in sys.generators:
        inner: Expression = Const(0.0)
        for i, comp in enumerate(gen):
            inner = _add(inner, _mul(Var("p", i + 1), comp))
        squares.append(BinOp("^", inner, Const(2.0)))
    total = squares[0]
    for square in squares[1:]:
        total = _add(total, square)
    return HamiltonianSpec("pmp-reduction", sys.dim, _mul(Const(0.5), total))
