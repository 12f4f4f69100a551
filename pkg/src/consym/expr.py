"""Closed-form scalar expressions over variables z1..zn.

Supports parsing, evaluation, exact symbolic differentiation and a small
predictable simplifier (constant folding plus identity elimination).  Grammar:

    expr   := term (("+"|"-") term)*
    term   := factor (("*"|"/") factor)*
    factor := ["-"] power
    power  := atom ["^" atom]
    atom   := number | ident | func "(" expr ")" | "(" expr ")"
    ident  := "z" digits            func := "exp" | "log" | "sqrt"

Exponents of "^" must fold to a constant.  Expressions are immutable and safe
to share across threads.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

from .errors import ExprDomainError, ExprSyntaxError

_FUNCS = ("exp", "log", "sqrt")
_BINOPS = ("add", "sub", "mul", "div", "pow")


@dataclass(frozen=True)
class Expr:
    op: str
    args: tuple = ()
    value: float = 0.0
    index: int = 0
    arity: int = 0

    def __add__(self, other):
        other = _coerce(other, self.arity)
        return Expr("add", (self, other), arity=max(self.arity, other.arity))

    def __radd__(self, other):
        return _coerce(other, self.arity).__add__(self)

    def __sub__(self, other):
        other = _coerce(other, self.arity)
        return Expr("sub", (self, other), arity=max(self.arity, other.arity))

    def __rsub__(self, other):
        return _coerce(other, self.arity).__sub__(self)

    def __mul__(self, other):
        other = _coerce(other, self.arity)
        return Expr("mul", (self, other), arity=max(self.arity, other.arity))

    def __rmul__(self, other):
        return _coerce(other, self.arity).__mul__(self)

    def __truediv__(self, other):
        other = _coerce(other, self.arity)
        return Expr("div", (self, other), arity=max(self.arity, other.arity))

    def __rtruediv__(self, other):
        return _coerce(other, self.arity).__truediv__(self)

    def __pow__(self, other):
        other = _coerce(other, self.arity)
        return Expr("pow", (self, other), arity=max(self.arity, other.arity))

    def __neg__(self):
        return Expr("neg", (self,), arity=self.arity)

    def __str__(self):
        return to_text(self)

    def eval(self, points):
        return evaluate(self, points)


def const(c, arity=0):
    return Expr("const", value=float(c), arity=arity)


def var(i, arity):
    if not 1 <= i <= arity:
        raise ExprSyntaxError(f"variable index z{i} outside arity {arity}", 0)
    return Expr("var", index=i, arity=arity)


def func(name, arg):
    if name not in _FUNCS:
        raise ExprSyntaxError(f"unknown function '{name}'", 0)
    return Expr(name, (arg,), arity=arg.arity)


def _coerce(x, arity):
    if isinstance(x, Expr):
        return x
    return const(float(x), arity)


def _with_arity(e, arity):
    """Return e with every node's arity set to `arity` (used after parsing)."""
    args = tuple(_with_arity(a, arity) for a in e.args)
    if e.arity == arity and args == e.args:
        return e
    return Expr(e.op, args, e.value, e.index, arity)


# ---------------------------------------------------------------------------
# tokenizer / parser

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d*)?(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()]))"
)


def _tokenize(text):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None or m.end() == pos:
            stripped = text[pos:].lstrip()
            if not stripped:
                break
            raise ExprSyntaxError(f"unexpected character '{stripped[0]}'", len(text) - len(stripped))
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, tokens, arity):
        self.tokens = tokens
        self.arity = arity
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def next(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect_op(self, symbol):
        kind, val, off = self.next()
        if kind != "op" or val != symbol:
            raise ExprSyntaxError(f"expected '{symbol}'", off)

    def parse_expr(self):
        node = self.parse_term()
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in "+-":
                self.next()
                rhs = self.parse_term()
                node = Expr("add" if val == "+" else "sub", (node, rhs), arity=self.arity)
            else:
                return node

    def parse_term(self):
        node = self.parse_factor()
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in "*/":
                self.next()
                rhs = self.parse_factor()
                node = Expr("mul" if val == "*" else "div", (node, rhs), arity=self.arity)
            else:
                return node

    def parse_factor(self):
        kind, val, _ = self.peek()
        if kind == "op" and val == "-":
            self.next()
            return Expr("neg", (self.parse_power(),), arity=self.arity)
        return self.parse_power()

    def parse_power(self):
        base = self.parse_atom()
        kind, val, off = self.peek()
        if kind == "op" and val == "^":
            self.next()
            exponent = self.parse_atom()
            folded = simplify(exponent)
            if folded.op != "const":
                raise ExprSyntaxError("exponent must be a constant", off)
            return Expr("pow", (base, folded), arity=self.arity)
        return base

    def parse_atom(self):
        kind, val, off = self.next()
        if kind == "num":
            return const(float(val), self.arity)
        if kind == "ident":
            m = re.fullmatch(r"z(\d+)", val)
            if m:
                idx = int(m.group(1))
                if not 1 <= idx <= self.arity:
                    raise ExprSyntaxError(f"unknown variable {val} (arity {self.arity})", off)
                return var(idx, self.arity)
            if val in _FUNCS:
                self.expect_op("(")
                inner = self.parse_expr()
                self.expect_op(")")
                return Expr(val, (inner,), arity=self.arity)
            raise ExprSyntaxError(f"unknown identifier '{val}'", off)
        if kind == "op" and val == "(":
            inner = self.parse_expr()
            self.expect_op(")")
            return inner
        raise ExprSyntaxError(f"unexpected token '{val}'" if val else "unexpected end of input", off)


def with_arity(e, arity):
    """Public wrapper re-tagging every node with the given arity."""
    return _with_arity(e, arity)


def parse(text, arity):
    """Parse expression text with variables z1..z<arity>."""
    parser = _Parser(_tokenize(text), arity)
    node = parser.parse_expr()
    kind, val, off = parser.peek()
    if kind != "end":
        raise ExprSyntaxError(f"unexpected trailing token '{val}'", off)
    return simplify(node)


# ---------------------------------------------------------------------------
# printing

_PREC = {"add": 1, "sub": 1, "mul": 2, "div": 2, "neg": 3, "pow": 4}


def to_text(e):
    """Render an expression in a form that re-parses to the same values."""
    if e.op == "const":
        if e.value < 0:
            return f"-{_fmt(-e.value)}"
        return _fmt(e.value)
    if e.op == "var":
        return f"z{e.index}"
    if e.op in _FUNCS:
        return f"{e.op}({to_text(e.args[0])})"
    if e.op == "neg":
        return f"-{_wrap(e.args[0], 4)}"
    a, b = e.args
    if e.op == "add":
        return f"{_wrap(a, 1)} + {_wrap(b, 2)}"
    if e.op == "sub":
        return f"{_wrap(a, 1)} - {_wrap(b, 2)}"
    if e.op == "mul":
        return f"{_wrap(a, 2)}*{_wrap(b, 3)}"
    if e.op == "div":
        return f"{_wrap(a, 2)}/{_wrap(b, 3)}"
    if e.op == "pow":
        return f"{_wrap(a, 5)}^{_wrap(b, 5)}"
    raise ValueError(f"unknown op {e.op}")


def _fmt(v):
    if v == int(v) and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def _atomic(e):
    return e.op in ("var",) + _FUNCS or (e.op == "const" and e.value >= 0)


def _wrap(e, min_prec):
    text = to_text(e)
    if _atomic(e):
        return text
    if min_prec >= 5:
        return f"({text})"
    if _PREC.get(e.op, 0) < min_prec:
        return f"({text})"
    return text


# ---------------------------------------------------------------------------
# simplification: local constant folding + identity elimination only

def simplify(e):
    if e.op in ("const", "var"):
        return e
    args = tuple(simplify(a) for a in e.args)
    e = Expr(e.op, args, e.value, e.index, e.arity)
    return _simplify_node(e)


def _is_const(e, v=None):
    return e.op == "const" and (v is None or e.value == v)


def _simplify_node(e):
    a = e.args[0] if e.args else None
    b = e.args[1] if len(e.args) > 1 else None
    n = e.arity
    if e.op == "neg":
        if _is_const(a):
            return const(-a.value, n)
        if a.op == "neg":
            return a.args[0]
        return e
    if e.op in _FUNCS:
        if _is_const(a):
            folded = _fold_unary(e.op, a.value)
            if folded is not None:
                return const(folded, n)
        return e
    if e.op == "add":
        if _is_const(a) and _is_const(b):
            return const(a.value + b.value, n)
        if _is_const(a, 0.0):
            return b
        if _is_const(b, 0.0):
            return a
        return e
    if e.op == "sub":
        if _is_const(a) and _is_const(b):
            return const(a.value - b.value, n)
        if _is_const(b, 0.0):
            return a
        if _is_const(a, 0.0):
            return _simplify_node(Expr("neg", (b,), arity=n))
        if a == b:
            return const(0.0, n)
        return e
    if e.op == "mul":
        if _is_const(a) and _is_const(b):
            return const(a.value * b.value, n)
        if _is_const(a, 0.0) or _is_const(b, 0.0):
            return const(0.0, n)
        if _is_const(a, 1.0):
            return b
        if _is_const(b, 1.0):
            return a
        if _is_const(b) and not _is_const(a):
            a, b = b, a  # constants to the left so coefficients can merge
            e = Expr("mul", (a, b), arity=n)
        if _is_const(a) and b.op == "mul" and _is_const(b.args[0]):
            merged = Expr("mul", (const(a.value * b.args[0].value, n), b.args[1]), arity=n)
            return _simplify_node(merged)
        return e
    if e.op == "div":
        if _is_const(a) and _is_const(b) and b.value != 0.0:
            return const(a.value / b.value, n)
        if _is_const(b, 1.0):
            return a
        return e
    if e.op == "pow":
        if _is_const(b, 1.0):
            return a
        if _is_const(b, 0.0):
            return const(1.0, n)
        if _is_const(a) and _is_const(b):
            folded = _fold_pow(a.value, b.value)
            if folded is not None:
                return const(folded, n)
        return e
    return e


def _fold_unary(op, v):
    if op == "exp":
        out = np.exp(v)
        return float(out) if np.isfinite(out) else None
    if op == "log":
        return float(np.log(v)) if v > 0 else None
    if op == "sqrt":
        return float(np.sqrt(v)) if v >= 0 else None
    return None


def _fold_pow(base, expo):
    if float(expo).is_integer():
        if base == 0.0 and expo < 0:
            return None
        out = float(base) ** float(expo)
    elif base > 0:
        out = float(base) ** float(expo)
    else:
        return None
    return out if np.isfinite(out) else None


# ---------------------------------------------------------------------------
# evaluation (vectorized over sample points)

def evaluate(e, points):
    """Evaluate at one point (n,) or a batch (N, n); returns scalar or (N,)."""
    pts = np.asarray(points, dtype=float)
    single = pts.ndim == 1
    if single:
        pts = pts[None, :]
    if e.arity and pts.shape[1] < e.arity:
        raise ExprDomainError(f"point has {pts.shape[1]} coordinates, expression needs {e.arity}")
    out = _ev(e, pts)
    if np.isscalar(out) or out.ndim == 0:
        out = np.full(pts.shape[0], float(out))
    return float(out[0]) if single else out


def _ev(e, pts):
    op = e.op
    if op == "const":
        return np.full(pts.shape[0], e.value)
    if op == "var":
        return pts[:, e.index - 1]
    if op == "neg":
        return -_ev(e.args[0], pts)
    if op == "exp":
        return np.exp(_ev(e.args[0], pts))
    if op == "log":
        v = _ev(e.args[0], pts)
        if np.any(v <= 0.0):
            raise ExprDomainError("log of nonpositive value", to_text(e))
        return np.log(v)
    if op == "sqrt":
        v = _ev(e.args[0], pts)
        if np.any(v < 0.0):
            raise ExprDomainError("sqrt of negative value", to_text(e))
        return np.sqrt(v)
    a = _ev(e.args[0], pts)
    if op == "pow":
        expo = e.args[1]
        if expo.op != "const":
            raise ExprDomainError("exponent is not a constant", to_text(e))
        p = expo.value
        if float(p).is_integer():
            if p < 0 and np.any(a == 0.0):
                raise ExprDomainError("zero raised to negative power", to_text(e))
            return a ** p
        if np.any(a <= 0.0):
            raise ExprDomainError("nonpositive base with non-integer exponent", to_text(e))
        return a ** p
    b = _ev(e.args[1], pts)
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "div":
        if np.any(b == 0.0):
            raise ExprDomainError("division by zero", to_text(e))
        return a / b
    raise ValueError(f"unknown op {op}")


# ---------------------------------------------------------------------------
# differentiation

def diff(e, i):
    """Exact partial derivative with respect to z_i, simplified."""
    if not 1 <= i <= max(e.arity, 1):
        raise ExprSyntaxError(f"derivative index {i} outside arity {e.arity}", 0)
    return simplify(_diff(e, i))


def _diff(e, i):
    n = e.arity
    op = e.op
    if op == "const":
        return const(0.0, n)
    if op == "var":
        return const(1.0 if e.index == i else 0.0, n)
    if op == "neg":
        return Expr("neg", (_diff(e.args[0], i),), arity=n)
    if op == "exp":
        return Expr("mul", (e, _diff(e.args[0], i)), arity=n)
    if op == "log":
        return Expr("div", (_diff(e.args[0], i), e.args[0]), arity=n)
    if op == "sqrt":
        two_sqrt = Expr("mul", (const(2.0, n), e), arity=n)
        return Expr("div", (_diff(e.args[0], i), two_sqrt), arity=n)
    a, b = e.args
    da = _diff(a, i)
    if op == "pow":
        if b.op != "const":
            raise ExprSyntaxError("exponent must be a constant", 0)
        p = b.value
        lowered = Expr("pow", (a, const(p - 1.0, n)), arity=n)
        return Expr("mul", (Expr("mul", (b, lowered), arity=n), da), arity=n)
    db = _diff(b, i)
    if op == "add":
        return Expr("add", (da, db), arity=n)
    if op == "sub":
        return Expr("sub", (da, db), arity=n)
    if op == "mul":
        return Expr("add", (Expr("mul", (da, b), arity=n), Expr("mul", (a, db), arity=n)), arity=n)
    if op == "div":
        num = Expr("sub", (Expr("mul", (da, b), arity=n), Expr("mul", (a, db), arity=n)), arity=n)
        return Expr("div", (num, Expr("pow", (b, const(2.0, n)), arity=n)), arity=n)
    raise ValueError(f"unknown op {op}")


def gradient(e):
    """Vector of partial derivatives with respect to z1..z<arity>."""
    return [diff(e, i) for i in range(1, e.arity + 1)]


def hessian(e):
    """Matrix of exact second derivatives; upper triangle built once and mirrored."""
    n = e.arity
    grads = gradient(e)
    rows = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(i, n):
            d = diff(grads[i], j + 1)
            rows[i][j] = d
            rows[j][i] = d
    return rows


def substitute(e, replacements):
    """Replace each variable z_i by replacements[i] (a dict index -> Expr)."""
    if e.op == "var":
        return replacements.get(e.index, e)
    if e.op == "const":
        return e
    args = tuple(substitute(a, replacements) for a in e.args)
    arity = max([e.arity] + [a.arity for a in args]) if args else e.arity
    return Expr(e.op, args, e.value, e.index, arity)


def remap(e, arity, offset=0, assignments=None):
    """Re-express over a new arity: z_i -> z_{i+offset}, or via explicit mapping."""
    if assignments is None:
        assignments = {i: var(i + offset, arity) for i in range(1, e.arity + 1)}
    out = substitute(_with_arity(e, arity), {k: _with_arity(v, arity) for k, v in assignments.items()})
    return simplify(_with_arity(out, arity))


def is_constant_expr(e):
    return simplify(e).op == "const"


def linear_coefficients(e, tol=0.0):
    """If e is affine (a + sum c_i z_i) return (a, coeffs); otherwise None."""
    n = e.arity
    grads = gradient(e)
    coeffs = np.zeros(n)
    for i, g in enumerate(grads):
        g = simplify(g)
        if g.op != "const":
            return None
        coeffs[i] = g.value
    origin = evaluate(e, np.zeros(n)) if n else e.value
    return float(origin), coeffs
