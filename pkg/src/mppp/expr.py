"""
Coefficient expressions
=======================

A small recursive-descent parser and evaluator for the scalar expressions used
as drift and diffusion coefficients, e.g. ``"x - x^3"`` or ``"-y"``.

Grammar (lowest to highest precedence)::

    sum     := product (('+' | '-') product)*
    product := unary (('*' | '/') unary)*
    unary   := '-' unary | power
    power   := atom ('^' unary)?
    atom    := NUMBER | NAME | FUNC '(' sum ')' | '(' sum ')'

``^`` is right-associative and binds tighter than unary minus, so ``-x^2`` is
``-(x^2)`` and ``2^-1`` is ``2^(-1)``.  There is no implicit multiplication.
``log`` is the natural logarithm.

Variables are ``x``, ``y`` and ``t``.  Systems of dimension three or more use the
indexed names ``x0`` ... ``x9`` instead of ``x``/``y``.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union

import numpy as np

FUNCTIONS = ("sin", "cos", "exp", "log", "sqrt", "abs", "tanh")
VARIABLES = ("x", "y", "t")
INDEXED_VARIABLES = tuple(f"x{i}" for i in range(10))

_UFUNCS = {
    "sin": np.sin,
    "cos": np.cos,
    "exp": np.exp,
    "log": np.log,
    "sqrt": np.sqrt,
    "abs": np.abs,
    "tanh": np.tanh,
}
_BINOPS = {
    "+": np.add,
    "-": np.subtract,
    "*": np.multiply,
    "/": np.divide,
    "^": np.power,
}


class ExprError(ValueError):
    """Base class for expression errors."""


class ExprSyntaxError(ExprError):
    """Malformed expression text.

    Attributes
    ----------
    offset : int
        Byte offset into the UTF-8 encoded source where parsing failed.
    expected : str
        Description of what the parser expected at that point.
    """

    def __init__(self, source, offset, expected):
        self.source = source
        self.offset = offset
        self.expected = expected
        super().__init__(f"syntax error at offset {offset}: expected {expected}")


class UnknownIdentifierError(ExprError):
    def __init__(self, name, offset):
        self.name = name
        self.offset = offset
        super().__init__(f"unknown identifier {name!r} at offset {offset}")


class DomainError(ExprError):
    """``log`` of a non-positive value or ``sqrt`` of a negative value."""

    def __init__(self, func, value):
        self.func = func
        self.value = value
        super().__init__(f"{func} argument out of domain: {value!r}")


class NonFiniteResultError(ExprError):
    pass


# AST ------------------------------------------------------------------------


@dataclass(frozen=True)
class Num:
    value: float

    def __post_init__(self):
        v = float(self.value)
        if not np.isfinite(v) or v < 0 or (v == 0 and np.signbit(v)):
            raise ValueError("numeric literals are finite and non-negative")
        object.__setattr__(self, "value", v)


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Expr"


Expr = Union[Num, Var, Neg, BinOp, Call]


# Parsing --------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^()])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Token:
    kind: str  # "num", "name", "op", "end"
    text: str
    offset: int  # byte offset


def _tokenize(source):
    tokens = []
    pos = 0
    byte_pos = 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise ExprSyntaxError(source, byte_pos, "a number, name, operator or parenthesis")
        text = m.group()
        if m.lastgroup != "ws":
            tokens.append(_Token(m.lastgroup, text, byte_pos))
        pos = m.end()
        byte_pos += len(text.encode("utf-8"))
    tokens.append(_Token("end", "", byte_pos))
    return tokens


class _Parser:
    def __init__(self, source, variables):
        self.source = source
        self.variables = variables
        self.tokens = _tokenize(source)
        self.i = 0

    @property
    def tok(self):
        return self.tokens[self.i]

    def fail(self, expected):
        raise ExprSyntaxError(self.source, self.tok.offset, expected)

    def accept(self, text):
        if self.tok.kind == "op" and self.tok.text == text:
            self.i += 1
            return True
        return False

    def parse(self):
        node = self.sum()
        if self.tok.kind != "end":
            self.fail("an operator or end of input")
        return node

    def sum(self):
        node = self.product()
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = self.tok.text
            self.i += 1
            node = BinOp(op, node, self.product())
        return node

    def product(self):
        node = self.unary()
        while self.tok.kind == "op" and self.tok.text in "*/":
            op = self.tok.text
            self.i += 1
            node = BinOp(op, node, self.unary())
        return node

    def unary(self):
        if self.accept("-"):
            return Neg(self.unary())
        return self.power()

    def power(self):
        base = self.atom()
        if self.accept("^"):
            return BinOp("^", base, self.unary())
        return base

    def atom(self):
        tok = self.tok
        if tok.kind == "num":
            self.i += 1
            return Num(float(tok.text))
        if tok.kind == "name":
            self.i += 1
            if tok.text in FUNCTIONS:
                if not self.accept("("):
                    self.fail("'(' after function name")
                arg = self.sum()
                if not self.accept(")"):
                    self.fail("')'")
                return Call(tok.text, arg)
            if tok.text in self.variables:
                return Var(tok.text)
            raise UnknownIdentifierError(tok.text, tok.offset)
        if self.accept("("):
            node = self.sum()
            if not self.accept(")"):
                self.fail("')'")
            return node
        self.fail("expression")


def parse(source, variables=VARIABLES + INDEXED_VARIABLES):
    """Parse expression text into an immutable AST.

    Parameters
    ----------
    source : str
        Expression text.
    variables : iterable of str, optional
        Names accepted as variables.  Anything else that is not a function
        name raises `UnknownIdentifierError`.

    Raises
    ------
    ExprSyntaxError
        With the byte offset and a description of the expected token.
    UnknownIdentifierError
    """
    if not source or not source.strip():
        raise ExprSyntaxError(source, 0, "expression")
    return _Parser(source, frozenset(variables)).parse()


# Rendering ------------------------------------------------------------------


def render(e):
    """Canonical, fully parenthesized text for `e`; re-parses to the same tree."""
    if isinstance(e, Num):
        return repr(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Neg):
        return f"(-{render(e.operand)})"
    if isinstance(e, BinOp):
        return f"({render(e.left)} {e.op} {render(e.right)})"
    if isinstance(e, Call):
        return f"{e.func}({render(e.arg)})"
    raise TypeError(f"not an expression node: {e!r}")


def variables_of(e):
    """Set of variable names referenced by `e`."""
    if isinstance(e, Var):
        return {e.name}
    if isinstance(e, Num):
        return set()
    if isinstance(e, Neg):
        return variables_of(e.operand)
    if isinstance(e, Call):
        return variables_of(e.arg)
    return variables_of(e.left) | variables_of(e.right)


def is_constant(e):
    return not variables_of(e)


# Evaluation -----------------------------------------------------------------


def _eval(e, env, on_domain):
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Var):
        try:
            return env[e.name]
        except KeyError:
            raise ExprError(f"no value bound for variable {e.name!r}") from None
    if isinstance(e, Neg):
        return np.negative(_eval(e.operand, env, on_domain))
    if isinstance(e, BinOp):
        left = _eval(e.left, env, on_domain)
        right = _eval(e.right, env, on_domain)
        return _BINOPS[e.op](left, right)
    arg = _eval(e.arg, env, on_domain)
    if e.func == "log" or e.func == "sqrt":
        bad = arg <= 0 if e.func == "log" else arg < 0
        if np.any(bad):
            if on_domain == "raise":
                value = arg[bad].flat[0] if np.ndim(arg) else arg
                raise DomainError(e.func, float(value))
            arg = np.where(bad, np.nan, arg)
    return _UFUNCS[e.func](arg)


def evaluate(e, x=0.0, y=0.0, t=0.0, strict=False, **indexed):
    """Evaluate `e` in IEEE double precision at a single point.

    Parameters
    ----------
    e : Expr
    x, y, t : float
        Variable bindings.  Indexed variables (``x0`` ...) are passed as
        keywords.
    strict : bool
        If true, an infinite or NaN result raises `NonFiniteResultError`
        (e.g. ``exp(1000)`` or ``1/0``).

    Raises
    ------
    DomainError
        ``log`` of a value <= 0 or ``sqrt`` of a value < 0.
    """
    env = {"x": np.float64(x), "y": np.float64(y), "t": np.float64(t)}
    env.update({k: np.float64(v) for k, v in indexed.items()})
    with np.errstate(all="ignore"):
        value = float(_eval(e, env, "raise"))
    if strict and not np.isfinite(value):
        raise NonFiniteResultError(f"{render(e)} evaluated to {value}")
    return value


def evaluate_array(e, env, on_domain="raise"):
    """Vectorized evaluation over numpy arrays of bindings.

    Parameters
    ----------
    e : Expr
    env : dict
        Variable name -> array (all broadcastable against each other).
    on_domain : {"raise", "nan"}
        What to do where ``log``/``sqrt`` arguments are out of domain.  With
        ``"nan"`` those entries become NaN so the caller can flag them.

    Returns
    -------
    ndarray
        Broadcast to the shape of the bindings, even for constant expressions.
    """
    shape = np.broadcast_shapes(*(np.shape(v) for v in env.values())) if env else ()
    with np.errstate(all="ignore"):
        out = _eval(e, env, on_domain)
    return np.broadcast_to(np.asarray(out, dtype=float), shape)
