"""A small arithmetic expression language for curves and vector fields.

Grammar::

    expr   := term (("+" | "-") term)*
    term   := unary (("*" | "/") unary)*
    unary  := ("-" | "+") unary | power
    power  := atom ("^" unary)?
    atom   := NUMBER | NAME | NAME "(" expr ("," expr)* ")" | "(" expr ")"

Names are the variables allowed by the caller (``x``, ``y`` for fields,
``t`` for curves) and the constant ``pi``.  Functions: ``sin``, ``cos``,
``exp``, ``sqrt``, ``atan2``.

Expressions compile to numpy-vectorised callables and can be
differentiated symbolically (used for analytic curve tangents).
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable

import numpy as np

FUNCTIONS = {"sin": 1, "cos": 1, "exp": 1, "sqrt": 1, "atan2": 2}
CONSTANTS = {"pi": math.pi}


class ExprSyntaxError(ValueError):
    def __init__(self, message: str, position: int, expected: frozenset[str] = frozenset()):
        self.position = position
        self.expected = expected
        hint = f"; expected one of {sorted(expected)}" if expected else ""
        super().__init__(f"{message} at position {position}{hint}")


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Unary:
    op: str
    arg: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Call:
    func: str
    args: tuple


Node = Num | Var | Unary | BinOp | Call

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_]\w*)|(?P<op>[-+*/^(),]))"
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN_RE.match(text, pos)
        if not m:
            start = pos + (len(text[pos:]) - len(text[pos:].lstrip()))
            raise ExprSyntaxError(f"unexpected character {text[start]!r}", start)
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, variables: frozenset[str]):
        self.tokens = _tokenize(text)
        self.i = 0
        self.variables = variables

    @property
    def tok(self):
        return self.tokens[self.i]

    def take(self, value: str) -> bool:
        if self.tok[0] == "op" and self.tok[1] == value:
            self.i += 1
            return True
        return False

    def expect(self, value: str):
        if not self.take(value):
            raise ExprSyntaxError(f"unexpected {self._describe()}", self.tok[2], frozenset({value}))

    def _describe(self):
        kind, val, _ = self.tok
        return "end of input" if kind == "end" else repr(val)

    def parse(self) -> Node:
        node = self.expr()
        if self.tok[0] != "end":
            raise ExprSyntaxError(
                f"unexpected {self._describe()}", self.tok[2], frozenset({"+", "-", "*", "/", "^", "end"})
            )
        return node

    def expr(self) -> Node:
        node = self.term()
        while True:
            if self.take("+"):
                node = BinOp("+", node, self.term())
            elif self.take("-"):
                node = BinOp("-", node, self.term())
            else:
                return node

    def term(self) -> Node:
        node = self.unary()
        while True:
            if self.take("*"):
                node = BinOp("*", node, self.unary())
            elif self.take("/"):
                node = BinOp("/", node, self.unary())
            else:
                return node

    def unary(self) -> Node:
        if self.take("-"):
            return Unary("-", self.unary())
        if self.take("+"):
            return self.unary()
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        if self.take("^"):
            return BinOp("^", base, self.unary())
        return base

    def atom(self) -> Node:
        kind, val, pos = self.tok
        if kind == "num":
            self.i += 1
            return Num(float(val))
        if kind == "name":
            self.i += 1
            if val in FUNCTIONS:
                self.expect("(")
                args = [self.expr()]
                while self.take(","):
                    args.append(self.expr())
                self.expect(")")
                if len(args) != FUNCTIONS[val]:
                    raise ExprSyntaxError(
                        f"{val} takes {FUNCTIONS[val]} argument(s), got {len(args)}", pos
                    )
                return Call(val, tuple(args))
            if val in CONSTANTS:
                return Num(CONSTANTS[val])
            if val in self.variables:
                return Var(val)
            raise ExprSyntaxError(
                f"unknown identifier {val!r}", pos, frozenset(self.variables | set(CONSTANTS))
            )
        if self.take("("):
            node = self.expr()
            self.expect(")")
            return node
        raise ExprSyntaxError(
            f"unexpected {self._describe()}", pos, frozenset({"number", "identifier", "(", "-"})
        )


def parse(text: str, variables=("x", "y")) -> Node:
    return _Parser(text, frozenset(variables)).parse()


def free_variables(node: Node) -> set[str]:
    if isinstance(node, Var):
        return {node.name}
    if isinstance(node, Num):
        return set()
    if isinstance(node, Unary):
        return free_variables(node.arg)
    if isinstance(node, BinOp):
        return free_variables(node.left) | free_variables(node.right)
    return set().union(*(free_variables(a) for a in node.args))


_NP = {"sin": "np.sin", "cos": "np.cos", "exp": "np.exp", "sqrt": "np.sqrt", "atan2": "np.arctan2"}


def to_source(node: Node) -> str:
    if isinstance(node, Num):
        return repr(node.value)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Unary):
        return f"(-{to_source(node.arg)})"
    if isinstance(node, BinOp):
        op = "**" if node.op == "^" else node.op
        return f"({to_source(node.left)} {op} {to_source(node.right)})"
    return f"{_NP[node.func]}({', '.join(to_source(a) for a in node.args)})"


def compile_expr(node: Node, variables=("x", "y")) -> Callable[..., np.ndarray]:
    """Compile to ``f(*arrays) -> array`` broadcasting constants to input shape."""
    src = f"lambda {', '.join(variables)}: {to_source(node)}"
    fn = eval(src, {"np": np, "__builtins__": {}})  # noqa: S307  (source built from our own AST)
    if free_variables(node):
        return fn

    def const(*args):
        return np.full(np.shape(args[0]), fn(*args), dtype=float)

    return const


def compile_many(nodes, variables=("x", "y")) -> Callable[..., tuple]:
    """Compile several expressions into one function sharing repeated subterms.

    Every subtree that occurs more than once (across all ``nodes``) is
    evaluated once into a temporary.
    """
    counts: dict = {}

    def count(n):
        if isinstance(n, (Num, Var)):
            return
        counts[n] = counts.get(n, 0) + 1
        if counts[n] == 1:
            for child in _children(n):
                count(child)

    for n in nodes:
        count(n)
    names: dict = {}
    lines: list[str] = []

    def emit(n) -> str:
        if n in names:
            return names[n]
        if isinstance(n, Num):
            return repr(n.value)
        if isinstance(n, Var):
            return n.name
        if isinstance(n, Unary):
            src = f"(-{emit(n.arg)})"
        elif isinstance(n, BinOp):
            op = "**" if n.op == "^" else n.op
            src = f"({emit(n.left)} {op} {emit(n.right)})"
        else:
            src = f"{_NP[n.func]}({', '.join(emit(a) for a in n.args)})"
        if counts.get(n, 0) > 1:
            name = f"_t{len(names)}"
            lines.append(f"    {name} = {src}")
            names[n] = name
            return name
        return src

    outs = [emit(n) for n in nodes]
    shape_src = variables[0] if variables else "0"
    outs = [o if free_variables(n) else f"np.full(np.shape({shape_src}), {o}, dtype=np.float64)"
            for o, n in zip(outs, nodes)]
    src = f"def _f({', '.join(variables)}):\n" + "\n".join(lines) + f"\n    return ({', '.join(outs)},)\n"
    scope = {"np": np, "__builtins__": {}}
    exec(src, scope)  # noqa: S102  (source built from our own AST)
    return scope["_f"]


def _children(n):
    if isinstance(n, Unary):
        return (n.arg,)
    if isinstance(n, BinOp):
        return (n.left, n.right)
    if isinstance(n, Call):
        return n.args
    return ()


def _simplify(node: Node) -> Node:
    if isinstance(node, BinOp):
        a, b = node.left, node.right
        if isinstance(a, Num) and isinstance(b, Num) and node.op in "+-*":
            return Num({"+": a.value + b.value, "-": a.value - b.value,
                        "*": a.value * b.value}[node.op])
        if node.op == "*":
            if (isinstance(a, Num) and a.value == 0) or (isinstance(b, Num) and b.value == 0):
                return Num(0.0)
            if isinstance(a, Num) and a.value == 1:
                return b
            if isinstance(b, Num) and b.value == 1:
                return a
        if node.op == "+":
            if isinstance(a, Num) and a.value == 0:
                return b
            if isinstance(b, Num) and b.value == 0:
                return a
        if node.op == "-" and isinstance(b, Num) and b.value == 0:
            return a
        if node.op == "/" and isinstance(a, Num) and a.value == 0:
            return Num(0.0)
    if isinstance(node, Unary) and isinstance(node.arg, Num):
        return Num(-node.arg.value)
    return node


def _b(op, a, b):
    return _simplify(BinOp(op, a, b))


def derivative(node: Node, var: str) -> Node:
    """Symbolic derivative with light constant folding."""
    if isinstance(node, Num):
        return Num(0.0)
    if isinstance(node, Var):
        return Num(1.0 if node.name == var else 0.0)
    if isinstance(node, Unary):
        return _simplify(Unary("-", derivative(node.arg, var)))
    if isinstance(node, BinOp):
        a, b = node.left, node.right
        da, db = derivative(a, var), derivative(b, var)
        if node.op in "+-":
            return _b(node.op, da, db)
        if node.op == "*":
            return _b("+", _b("*", da, b), _b("*", a, db))
        if node.op == "/":
            return _b("/", _b("-", _b("*", da, b), _b("*", a, db)), _b("*", b, b))
        # power
        if var not in free_variables(b):
            return _b("*", _b("*", b, _b("^", a, _b("-", b, Num(1.0)))), da)
        # a^b = exp(b log a); log is outside the grammar
        raise ExprSyntaxError("cannot differentiate a variable exponent", 0)
    (a, *rest) = node.args
    da = derivative(a, var)
    if node.func == "sin":
        return _b("*", Call("cos", (a,)), da)
    if node.func == "cos":
        return _b("*", _simplify(Unary("-", Call("sin", (a,)))), da)
    if node.func == "exp":
        return _b("*", node, da)
    if node.func == "sqrt":
        return _b("/", da, _b("*", Num(2.0), node))
    # atan2(a, b)
    b = rest[0]
    db = derivative(b, var)
    num = _b("-", _b("*", b, da), _b("*", a, db))
    return _b("/", num, _b("+", _b("*", a, a), _b("*", b, b)))
