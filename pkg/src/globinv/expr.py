"""Text-defined maps: tokenizer, recursive-descent parser, hyper-dual AD.

A map file looks like::

    dim 2
    # the complex exponential in real coordinates
    f1 = exp(x1)*cos(x2)
    f2 = exp(x1)*sin(x2)

Variables are 1-based (``x1 .. xn``); ``pi`` and ``e`` are predefined.
``^`` is right-associative and binds tighter than unary minus, so
``-x1^2`` is ``-(x1^2)``.
"""

import math
import re
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import DomainError, ParseError
from .maps import SmoothMap
from .numerics import as_vector

FUNCS = ("sin", "cos", "tan", "exp", "log", "sqrt", "tanh", "sinh", "cosh", "atan")
BINOPS = {"+": "add", "-": "sub", "*": "mul", "/": "div", "^": "pow"}
_SYMBOL = {v: k for k, v in BINOPS.items()}


# -- AST ---------------------------------------------------------------------

@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    index: int  # 1-based


@dataclass(frozen=True)
class Unary:
    op: str  # "neg" or a name from FUNCS
    arg: "Node"


@dataclass(frozen=True)
class Binary:
    op: str  # add | sub | mul | div | pow
    left: "Node"
    right: "Node"


Node = Union[Const, Var, Unary, Binary]


@dataclass(frozen=True)
class MapAst:
    dim: int
    components: tuple

    def __post_init__(self):
        if len(self.components) != self.dim:
            raise ValueError(f"{self.dim} components expected, got {len(self.components)}")
        for comp in self.components:
            for node in walk(comp):
                if isinstance(node, Var) and not 1 <= node.index <= self.dim:
                    raise ValueError(f"variable x{node.index} outside 1..{self.dim}")


def walk(node):
    yield node
    if isinstance(node, Unary):
        yield from walk(node.arg)
    elif isinstance(node, Binary):
        yield from walk(node.left)
        yield from walk(node.right)


def to_text(node):
    """Canonical fully parenthesized form; ``parse_expr(to_text(n)) == n``."""
    if isinstance(node, Const):
        return repr(float(node.value))
    if isinstance(node, Var):
        return f"x{node.index}"
    if isinstance(node, Unary):
        if node.op == "neg":
            return f"(-{to_text(node.arg)})"
        return f"{node.op}({to_text(node.arg)})"
    return f"({to_text(node.left)} {_SYMBOL[node.op]} {to_text(node.right)})"


def print_map(ast):
    lines = [f"dim {ast.dim}"]
    lines += [f"f{i} = {to_text(c)}" for i, c in enumerate(ast.components, start=1)]
    return "\n".join(lines) + "\n"


# -- tokenizer ---------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<comment>\#[^\n]*)
  | (?P<newline>\n)
  | (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^()=])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # number | name | op | newline | eof
    text: str
    line: int
    col: int


def tokenize(text):
    tokens = []
    line, line_start, pos = 1, 0, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        col = pos - line_start + 1
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        if kind == "newline":
            tokens.append(Token("newline", "\n", line, col))
            line += 1
            line_start = m.end()
        elif kind not in ("ws", "comment"):
            tokens.append(Token(kind, m.group(), line, col))
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


# -- parser ------------------------------------------------------------------

def _describe(tok):
    if tok.kind == "eof":
        return "unexpected end of input"
    if tok.kind == "newline":
        return "unexpected end of line"
    return f"unexpected {tok.text!r}"


class _Parser:
    def __init__(self, text):
        self.tokens = tokenize(text)
        self.pos = 0

    @property
    def tok(self):
        return self.tokens[self.pos]

    def advance(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def error(self, expected):
        tok = self.tok
        raise ParseError(f"{_describe(tok)}, expected {expected}", tok.line, tok.col)

    def accept_op(self, *ops):
        if self.tok.kind == "op" and self.tok.text in ops:
            return self.advance().text
        return None

    def expect_op(self, op):
        if self.accept_op(op) is None:
            self.error(repr(op))

    def skip_newlines(self):
        while self.tok.kind == "newline":
            self.advance()

    def indexed_name(self, prefix, what):
        """Parse e.g. ``x3`` or ``f2`` and return the integer suffix."""
        tok = self.tok
        m = re.fullmatch(prefix + r"(\d+)", tok.text) if tok.kind == "name" else None
        if m is None:
            self.error(what)
        self.advance()
        return int(m.group(1))

    def mapfile(self):
        self.skip_newlines()
        if not (self.tok.kind == "name" and self.tok.text == "dim"):
            self.error("'dim'")
        self.advance()
        if self.tok.kind != "number" or not self.tok.text.isdigit():
            self.error("an integer dimension")
        dim = int(self.advance().text)
        if dim < 1:
            raise ParseError("dimension must be >= 1", self.tokens[self.pos - 1].line,
                             self.tokens[self.pos - 1].col)
        comps = {}
        while True:
            if self.tok.kind != "newline":
                if self.tok.kind == "eof":
                    break
                self.error("end of line")
            self.skip_newlines()
            if self.tok.kind == "eof":
                break
            start = self.tok
            idx = self.indexed_name("f", f"a component name f1..f{dim}")
            if not 1 <= idx <= dim:
                raise ParseError(f"component f{idx} outside f1..f{dim}", start.line, start.col)
            if idx in comps:
                raise ParseError(f"component f{idx} defined twice", start.line, start.col)
            self.expect_op("=")
            comps[idx] = self.expr(dim)
        missing = [i for i in range(1, dim + 1) if i not in comps]
        if missing:
            self.error("component " + ", ".join(f"f{i}" for i in missing))
        return MapAst(dim, tuple(comps[i] for i in range(1, dim + 1)))

    def expr(self, dim):
        node = self.term(dim)
        while (op := self.accept_op("+", "-")) is not None:
            node = Binary(BINOPS[op], node, self.term(dim))
        return node

    def term(self, dim):
        node = self.factor(dim)
        while (op := self.accept_op("*", "/")) is not None:
            node = Binary(BINOPS[op], node, self.factor(dim))
        return node

    def factor(self, dim):
        negate = self.accept_op("-") is not None
        node = self.base(dim)
        if self.accept_op("^") is not None:
            node = Binary("pow", node, self.factor(dim))
        return Unary("neg", node) if negate else node

    def base(self, dim):
        tok = self.tok
        if tok.kind == "number":
            self.advance()
            return Const(float(tok.text))
        if tok.kind == "op" and tok.text == "(":
            self.advance()
            node = self.expr(dim)
            self.expect_op(")")
            return node
        if tok.kind == "name":
            if tok.text == "pi":
                self.advance()
                return Const(math.pi)
            if tok.text == "e":
                self.advance()
                return Const(math.e)
            if tok.text in FUNCS:
                self.advance()
                self.expect_op("(")
                arg = self.expr(dim)
                self.expect_op(")")
                return Unary(tok.text, arg)
            if re.fullmatch(r"x\d+", tok.text):
                idx = int(tok.text[1:])
                if dim is not None and not 1 <= idx <= dim:
                    raise ParseError(f"variable x{idx} outside x1..x{dim}", tok.line, tok.col)
                self.advance()
                return Var(idx)
            raise ParseError(f"unknown name {tok.text!r}", tok.line, tok.col)
        self.error("a number, variable, function or '('")


def parse(text):
    """Parse a map file into a :class:`MapAst`."""
    return _Parser(text).mapfile()


def parse_expr(text, dim=None):
    """Parse a single expression (no ``dim`` header)."""
    p = _Parser(text)
    node = p.expr(dim)
    p.skip_newlines()
    if p.tok.kind != "eof":
        p.error("end of input")
    return node


# -- hyper-dual numbers ------------------------------------------------------

class HyperDual:
    """``v + d1 e1 + d2 e2 + d12 e1 e2`` with ``e1^2 = e2^2 = 0``.

    Seeding ``e1`` along x_j and ``e2`` along x_k leaves df/dx_j in ``d1``,
    df/dx_k in ``d2`` and d2f/dx_j dx_k in ``d12``, all free of truncation
    error. Every formula is written so that swapping the two seeds swaps
    ``d1``/``d2`` and leaves ``d12`` bit-identical.
    """

    __slots__ = ("v", "d1", "d2", "d12")

    def __init__(self, v, d1=0.0, d2=0.0, d12=0.0):
        self.v = v
        self.d1 = d1
        self.d2 = d2
        self.d12 = d12

    def __repr__(self):
        return f"HyperDual({self.v!r}, {self.d1!r}, {self.d2!r}, {self.d12!r})"

    @property
    def is_constant(self):
        return self.d1 == 0.0 and self.d2 == 0.0 and self.d12 == 0.0

    def chain(self, f0, f1, f2):
        """Apply a scalar function with value f0, derivative f1, second derivative f2."""
        return HyperDual(
            f0,
            f1 * self.d1,
            f1 * self.d2,
            f1 * self.d12 + f2 * (self.d1 * self.d2),
        )

    def __neg__(self):
        return HyperDual(-self.v, -self.d1, -self.d2, -self.d12)

    def __add__(self, o):
        return HyperDual(self.v + o.v, self.d1 + o.d1, self.d2 + o.d2, self.d12 + o.d12)

    def __sub__(self, o):
        return HyperDual(self.v - o.v, self.d1 - o.d1, self.d2 - o.d2, self.d12 - o.d12)

    def __mul__(self, o):
        return HyperDual(
            self.v * o.v,
            self.v * o.d1 + self.d1 * o.v,
            self.v * o.d2 + self.d2 * o.v,
            self.v * o.d12 + (self.d1 * o.d2 + self.d2 * o.d1) + self.d12 * o.v,
        )

    def reciprocal(self):
        if self.v == 0.0:
            raise DomainError("division by zero")
        r = 1.0 / self.v
        return self.chain(r, -r * r, 2.0 * r * r * r)

    def __truediv__(self, o):
        return self * o.reciprocal()

    def __pow__(self, o):
        if o.is_constant:
            return self.powc(o.v)
        if self.v <= 0.0:
            raise DomainError("non-constant exponent needs a positive base")
        return hd_exp(o * hd_log(self))

    def powc(self, p):
        v = self.v
        if float(p).is_integer():
            k = int(p)
            if k == 0:
                return HyperDual(1.0)
            if v == 0.0 and k < 0:
                raise DomainError("division by zero")
            return self.chain(v ** k, k * v ** (k - 1), k * (k - 1) * v ** (k - 2) if k != 1 else 0.0)
        if v < 0.0:
            raise DomainError("negative base with non-integer exponent")
        if v == 0.0 and p < 2.0:
            raise DomainError("power not twice differentiable at zero")
        return self.chain(v ** p, p * v ** (p - 1), p * (p - 1) * v ** (p - 2))


def hd_exp(x):
    try:
        ev = math.exp(x.v)
    except OverflowError:
        raise DomainError("exp overflow") from None
    return x.chain(ev, ev, ev)


def hd_log(x):
    if x.v <= 0.0:
        raise DomainError("log of non-positive argument")
    r = 1.0 / x.v
    return x.chain(math.log(x.v), r, -r * r)


def hd_sqrt(x):
    if x.v < 0.0:
        raise DomainError("sqrt of negative argument")
    if x.v == 0.0:
        raise DomainError("sqrt not differentiable at zero")
    s = math.sqrt(x.v)
    return x.chain(s, 0.5 / s, -0.25 / (s * x.v))


def hd_sin(x):
    s, c = math.sin(x.v), math.cos(x.v)
    return x.chain(s, c, -s)


def hd_cos(x):
    s, c = math.sin(x.v), math.cos(x.v)
    return x.chain(c, -s, -c)


def hd_tan(x):
    if math.cos(x.v) == 0.0:
        raise DomainError("tan at a pole")
    t = math.tan(x.v)
    sec2 = 1.0 + t * t
    return x.chain(t, sec2, 2.0 * t * sec2)


def hd_tanh(x):
    t = math.tanh(x.v)
    d = 1.0 - t * t
    return x.chain(t, d, -2.0 * t * d)


def hd_sinh(x):
    try:
        s, c = math.sinh(x.v), math.cosh(x.v)
    except OverflowError:
        raise DomainError("sinh overflow") from None
    return x.chain(s, c, s)


def hd_cosh(x):
    try:
        s, c = math.sinh(x.v), math.cosh(x.v)
    except OverflowError:
        raise DomainError("cosh overflow") from None
    return x.chain(c, s, c)


def hd_atan(x):
    d = 1.0 / (1.0 + x.v * x.v)
    return x.chain(math.atan(x.v), d, -2.0 * x.v * d * d)


_HD_FUNCS = {
    "neg": HyperDual.__neg__,
    "sin": hd_sin,
    "cos": hd_cos,
    "tan": hd_tan,
    "exp": hd_exp,
    "log": hd_log,
    "sqrt": hd_sqrt,
    "tanh": hd_tanh,
    "sinh": hd_sinh,
    "cosh": hd_cosh,
    "atan": hd_atan,
}
_HD_BINOPS = {
    "add": HyperDual.__add__,
    "sub": HyperDual.__sub__,
    "mul": HyperDual.__mul__,
    "div": HyperDual.__truediv__,
    "pow": HyperDual.__pow__,
}


def eval_hyperdual(node, xs):
    """Evaluate ``node`` with variable ``x_i`` bound to ``xs[i - 1]``."""
    if isinstance(node, Const):
        return HyperDual(node.value)
    if isinstance(node, Var):
        return xs[node.index - 1]
    if isinstance(node, Unary):
        return _HD_FUNCS[node.op](eval_hyperdual(node.arg, xs))
    return _HD_BINOPS[node.op](eval_hyperdual(node.left, xs), eval_hyperdual(node.right, xs))


def seed(x, j, k):
    """Hyper-dual point with e1 along axis ``j`` and e2 along axis ``k`` (0-based)."""
    return [
        HyperDual(float(xi), 1.0 if i == j else 0.0, 1.0 if i == k else 0.0)
        for i, xi in enumerate(x)
    ]


def to_smooth_map(ast, name="expr"):
    """Wrap a parsed map as a :class:`SmoothMap` with hyper-dual derivatives."""
    n = ast.dim
    comps = ast.components

    def run(x, j, k):
        xs = seed(x, j, k)
        try:
            return [eval_hyperdual(c, xs) for c in comps]
        except DomainError as exc:
            raise DomainError(str(exc), point=np.array(x)) from None
        except ZeroDivisionError:
            raise DomainError("division by zero", point=np.array(x)) from None
        except OverflowError:
            raise DomainError("overflow", point=np.array(x)) from None

    def value(x):
        x = as_vector(x, n)
        return np.array([h.v for h in run(x, -1, -1)])

    def jac(x):
        x = as_vector(x, n)
        out = np.empty((n, n))
        for j in range(n):
            out[:, j] = [h.d1 for h in run(x, j, j)]
        return out

    def hess(x):
        x = as_vector(x, n)
        out = np.empty((n, n, n))
        for j in range(n):
            for k in range(j, n):
                out[:, j, k] = out[:, k, j] = [h.d12 for h in run(x, j, k)]
        return out

    return SmoothMap(n, value, jac, hess, name=name, params={"source": print_map(ast)})


def load_map_file(path):
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    return to_smooth_map(parse(text), name=f"@{path}")


_SAFE_FUNCS = ("sin", "cos", "tanh", "atan", "exp", "sinh", "cosh", "tan", "log", "sqrt")


def random_ast(rng, dim, depth=6):
    """Random expression over ``x1..x{dim}`` with at most ``depth`` levels.

    Constants are non-negative so the canonical printer round-trips.
    Domain errors are possible at evaluation time (log, sqrt, tan, ...).
    """
    if depth <= 1 or rng.random() < 0.25:
        if rng.random() < 0.6:
            return Var(int(rng.integers(1, dim + 1)))
        return Const(float(np.round(rng.uniform(0.0, 3.0), int(rng.integers(0, 4)))))
    r = rng.random()
    if r < 0.35:
        op = "neg" if rng.random() < 0.15 else str(rng.choice(_SAFE_FUNCS))
        return Unary(op, random_ast(rng, dim, depth - 1))
    op = str(rng.choice(["add", "sub", "mul", "div", "pow"]))
    left = random_ast(rng, dim, depth - 1)
    if op == "pow":
        return Binary(op, left, Const(float(rng.integers(0, 4))))
    return Binary(op, left, random_ast(rng, dim, depth - 1))
