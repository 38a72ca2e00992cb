"""A small text language for phase-space generators.

Grammar (``*`` is the star product, ``.`` the pointwise product)::

    expr   := term (('+' | '-') term)*
    term   := factor ('*' factor | '.' factor | factor)*
    factor := '-' factor | power
    power  := atom ('^' integer)?
    atom   := scalar | 'i' | 'hbar' | 'a' | 'a~' | 'W' | 'x' | 'p'
            | 'Dx(' expr ')' | 'Dp(' expr ')' | 'Lap(' expr ')' | '(' expr ')'
    scalar := integer | integer '/' integer

Unary minus binds tighter than ``*``/``.``, which bind tighter than ``+``/``-``;
all binary operators associate to the left.  Juxtaposition (``1/2 Dx(W)``) is a
pointwise product, and ``f^n`` is the pointwise power ``f . f . ... . f``.  ``a~``
stands for the conjugate ladder symbol a*.  Every additive term must contain exactly
one ``W``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Union

from .star import LADDER_A, LADDER_A_DAG, BoppSide, bopp, star_poly
from .symbolic import (
    CRat,
    DiffOpExpr,
    IrrationalFactorError,
    PolySymbol,
    as_rational,
    compose,
)

__all__ = [
    "GRAMMAR",
    "DslError",
    "DslSyntaxError",
    "DslSemanticError",
    "parse",
    "elaborate",
    "compile_expr",
    "parse_symbol",
    "format_expr",
    "format_poly",
    "format_coeff",
    "unparse",
]

GRAMMAR = """\
expr   := term (('+' | '-') term)*
term   := factor ('*' factor | '.' factor | factor)*
factor := '-' factor | power
power  := atom ('^' integer)?
atom   := scalar | 'i' | 'hbar' | 'a' | 'a~' | 'W' | 'x' | 'p'
        | 'Dx(' expr ')' | 'Dp(' expr ')' | 'Lap(' expr ')' | '(' expr ')'
scalar := integer | integer '/' integer

'*' star product, '.' pointwise product (juxtaposition means '.'),
'^' pointwise power, 'a~' is a*. Precedence: unary '-' > '*' '.' > '+' '-'.
Each additive term must contain exactly one W."""


class DslError(ValueError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.message = message
        self.line = line
        self.col = col


class DslSyntaxError(DslError):
    pass


class DslSemanticError(DslError):
    pass


Pos = tuple  # (line, col), 1-based


# --- AST -------------------------------------------------------------------


@dataclass(frozen=True)
class Scalar:
    value: CRat
    pos: Pos = field(default=(1, 1), compare=False)


@dataclass(frozen=True)
class Sym:
    name: str  # a | a~ | x | p | i | hbar
    pos: Pos = field(default=(1, 1), compare=False)


@dataclass(frozen=True)
class WNode:
    pos: Pos = field(default=(1, 1), compare=False)


@dataclass(frozen=True)
class Star:
    left: "Node"
    right: "Node"
    pos: Pos = field(default=(1, 1), compare=False)


@dataclass(frozen=True)
class Point:
    left: "Node"
    right: "Node"
    pos: Pos = field(default=(1, 1), compare=False)


@dataclass(frozen=True)
class Sum:
    left: "Node"
    right: "Node"
    pos: Pos = field(default=(1, 1), compare=False)


@dataclass(frozen=True)
class Diff:
    left: "Node"
    right: "Node"
    pos: Pos = field(default=(1, 1), compare=False)


@dataclass(frozen=True)
class Neg:
    expr: "Node"
    pos: Pos = field(default=(1, 1), compare=False)


@dataclass(frozen=True)
class Dx:
    expr: "Node"
    pos: Pos = field(default=(1, 1), compare=False)


@dataclass(frozen=True)
class Dp:
    expr: "Node"
    pos: Pos = field(default=(1, 1), compare=False)


@dataclass(frozen=True)
class Lap:
    expr: "Node"
    pos: Pos = field(default=(1, 1), compare=False)


Node = Union[Scalar, Sym, WNode, Star, Point, Sum, Diff, Neg, Dx, Dp, Lap]


# --- lexer -----------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<num>\d+(?:\s*/\s*\d+)?)
  | (?P<func>(?:Dx|Dp|Lap)\s*\()
  | (?P<name>a~|[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*.^()])
    """,
    re.VERBOSE,
)

_SYMBOLS = {"a", "a~", "x", "p", "i", "hbar"}


@dataclass(frozen=True)
class Token:
    kind: str  # num | func | name | op | eof
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    tokens = []
    line, line_start, idx = 1, 0, 0
    while idx < len(text):
        m = _TOKEN_RE.match(text, idx)
        col = idx - line_start + 1
        if m is None:
            raise DslSyntaxError(f"unexpected character {text[idx]!r}", line, col)
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind != "ws":
            tok_text = m.group()
            if kind == "func":
                tok_text = tok_text[:-1].rstrip()
            elif kind == "num":
                tok_text = re.sub(r"\s+", "", tok_text)
            elif kind == "name" and tok_text not in _SYMBOLS and tok_text != "W":
                raise DslSyntaxError(f"unknown symbol {tok_text!r}", line, col)
            tokens.append(Token(kind, tok_text, line, col))
        idx = m.end()
    tokens.append(Token("eof", "", line, idx - line_start + 1))
    return tokens


# --- parser ----------------------------------------------------------------


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.i = 0

    def peek(self) -> Token:
        return self.tokens[self.i]

    def advance(self) -> Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect_close(self, opener: Token):
        tok = self.peek()
        if tok.kind == "op" and tok.text == ")":
            self.advance()
            return
        if tok.kind == "eof":
            raise DslSyntaxError(
                f"unclosed '(' opened at {opener.line}:{opener.col}", opener.line, opener.col
            )
        raise DslSyntaxError(f"expected ')' but found {tok.text!r}", tok.line, tok.col)

    def starts_atom(self, tok: Token) -> bool:
        return tok.kind in ("num", "func", "name") or (tok.kind == "op" and tok.text == "(")

    def operand_missing(self, op: Token):
        tok = self.peek()
        if tok.kind == "eof":
            raise DslSyntaxError(f"missing operand after {op.text!r}", op.line, op.col)
        raise DslSyntaxError(f"unexpected {tok.text!r} after {op.text!r}", tok.line, tok.col)

    def expr(self) -> Node:
        node = self.term()
        while True:
            tok = self.peek()
            if tok.kind == "op" and tok.text in "+-":
                self.advance()
                if not (self.starts_atom(self.peek()) or self.peek().text == "-"):
                    self.operand_missing(tok)
                rhs = self.term()
                cls = Sum if tok.text == "+" else Diff
                node = cls(node, rhs, (tok.line, tok.col))
            else:
                return node

    def term(self) -> Node:
        node = self.factor()
        while True:
            tok = self.peek()
            if tok.kind == "op" and tok.text in "*.":
                self.advance()
                if not (self.starts_atom(self.peek()) or self.peek().text == "-"):
                    self.operand_missing(tok)
                rhs = self.factor()
                cls = Star if tok.text == "*" else Point
                node = cls(node, rhs, (tok.line, tok.col))
            elif self.starts_atom(tok):
                rhs = self.power()
                node = Point(node, rhs, (tok.line, tok.col))
            else:
                return node

    def factor(self) -> Node:
        tok = self.peek()
        if tok.kind == "op" and tok.text == "-":
            self.advance()
            if not (self.starts_atom(self.peek()) or self.peek().text == "-"):
                self.operand_missing(tok)
            return Neg(self.factor(), (tok.line, tok.col))
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        tok = self.peek()
        if tok.kind == "op" and tok.text == "^":
            self.advance()
            exp_tok = self.peek()
            if exp_tok.kind != "num" or "/" in exp_tok.text:
                if exp_tok.kind == "eof":
                    raise DslSyntaxError("missing exponent after '^'", tok.line, tok.col)
                raise DslSyntaxError(
                    "exponent must be a non-negative integer", exp_tok.line, exp_tok.col
                )
            self.advance()
            n = int(exp_tok.text)
            pos = (tok.line, tok.col)
            if n == 0:
                return Scalar(CRat(1), pos)
            node = base
            for _ in range(n - 1):
                node = Point(node, base, pos)
            return node
        return base

    def atom(self) -> Node:
        tok = self.peek()
        pos = (tok.line, tok.col)
        if tok.kind == "num":
            self.advance()
            num, _, den = tok.text.partition("/")
            if den and int(den) == 0:
                raise DslSyntaxError("zero denominator", tok.line, tok.col)
            return Scalar(CRat(Fraction(int(num), int(den) if den else 1)), pos)
        if tok.kind == "name":
            self.advance()
            if tok.text == "W":
                return WNode(pos)
            return Sym(tok.text, pos)
        if tok.kind == "func":
            self.advance()
            inner = self.expr()
            self.expect_close(tok)
            return {"Dx": Dx, "Dp": Dp, "Lap": Lap}[tok.text](inner, pos)
        if tok.kind == "op" and tok.text == "(":
            self.advance()
            inner = self.expr()
            self.expect_close(tok)
            return inner
        if tok.kind == "eof":
            raise DslSyntaxError("unexpected end of input", tok.line, tok.col)
        raise DslSyntaxError(f"unexpected {tok.text!r}", tok.line, tok.col)


def parse_raw(text: str) -> Node:
    """Parse without the W-count checks (used for W-free polynomials)."""
    parser = _Parser(tokenize(text))
    node = parser.expr()
    tok = parser.peek()
    if tok.kind != "eof":
        raise DslSyntaxError(f"unexpected {tok.text!r}", tok.line, tok.col)
    return node


def _w_count(node: Node) -> int:
    """0 for W-free subtrees, 1 for subtrees linear in W; raises otherwise."""
    if isinstance(node, (Scalar, Sym)):
        return 0
    if isinstance(node, WNode):
        return 1
    if isinstance(node, (Neg, Dx, Dp, Lap)):
        return _w_count(node.expr)
    left, right = _w_count(node.left), _w_count(node.right)
    if isinstance(node, (Star, Point)):
        if left and right:
            raise DslSemanticError("more than one W in a product", *node.pos)
        return left + right
    if left != right:
        bad = node.left if not left else node.right
        raise DslSemanticError("W absent from a term", *_first_pos(bad))
    return left


def _first_pos(node: Node) -> Pos:
    if isinstance(node, (Star, Point, Sum, Diff)):
        return min(_first_pos(node.left), node.pos)
    return node.pos


def parse(text: str) -> Node:
    """Parse a generator expression; every additive term must carry one W."""
    node = parse_raw(text)
    if _w_count(node) != 1:
        raise DslSemanticError("W absent from a term", *_first_pos(node))
    return node


# --- elaboration -----------------------------------------------------------


def _symbol_value(name: str, hbar: Fraction) -> PolySymbol:
    if name == "x":
        return PolySymbol.x()
    if name == "p":
        return PolySymbol.p()
    if name == "a":
        return LADDER_A
    if name == "a~":
        return LADDER_A_DAG
    if name == "i":
        return PolySymbol.const(CRat(0, 1))
    if name == "hbar":
        return PolySymbol.const(hbar)
    raise KeyError(name)


def _lower(node: Node, hbar: Fraction):
    """Return a PolySymbol for W-free nodes, a DiffOpExpr otherwise."""
    if isinstance(node, Scalar):
        return PolySymbol.const(node.value)
    if isinstance(node, Sym):
        return _symbol_value(node.name, hbar)
    if isinstance(node, WNode):
        return DiffOpExpr.identity(hbar)
    try:
        if isinstance(node, Neg):
            return -_lower(node.expr, hbar)
        if isinstance(node, (Dx, Dp, Lap)):
            inner = _lower(node.expr, hbar)
            if isinstance(inner, PolySymbol):
                if isinstance(node, Dx):
                    return inner.diff(1, 0)
                if isinstance(node, Dp):
                    return inner.diff(0, 1)
                return inner.diff(2, 0) + inner.diff(0, 2)
            if isinstance(node, Dx):
                return compose(DiffOpExpr.dx(1, hbar), inner)
            if isinstance(node, Dp):
                return compose(DiffOpExpr.dp(1, hbar), inner)
            return compose(DiffOpExpr.laplacian(hbar), inner)
        left, right = _lower(node.left, hbar), _lower(node.right, hbar)
        if isinstance(node, (Sum, Diff)):
            if type(left) is not type(right):
                raise DslSemanticError("W absent from a term", *node.pos)
            return left + right if isinstance(node, Sum) else left - right
        if isinstance(node, Point):
            if isinstance(left, PolySymbol) and isinstance(right, PolySymbol):
                return left * right
            if isinstance(left, DiffOpExpr) and isinstance(right, DiffOpExpr):
                raise DslSemanticError("more than one W in a product", *node.pos)
            poly, op = (left, right) if isinstance(left, PolySymbol) else (right, left)
            return compose(DiffOpExpr.multiply(poly, hbar), op)
        # Star
        if isinstance(left, PolySymbol) and isinstance(right, PolySymbol):
            return star_poly(left, right, hbar)
        if isinstance(left, PolySymbol):
            return compose(bopp(left, BoppSide.LEFT, hbar), right)
        if isinstance(right, PolySymbol):
            return compose(bopp(right, BoppSide.RIGHT, hbar), left)
        raise DslSemanticError("more than one W in a star product", *node.pos)
    except IrrationalFactorError as exc:
        raise DslSemanticError(
            "cannot add terms with an unpaired a or a~ (odd power of 1/sqrt(2)); "
            "pair each a with an a~",
            *node.pos,
        ) from exc


def elaborate(ast: Node, hbar=1) -> DiffOpExpr:
    """Lower a parsed expression to a normal-ordered generator."""
    hbar = as_rational(hbar)
    result = _lower(ast, hbar)
    if isinstance(result, PolySymbol):
        raise DslSemanticError("W absent from the expression", *_first_pos(ast))
    if result.root2:
        raise DslSemanticError(
            "expression carries an odd power of 1/sqrt(2): every lone a or a~ "
            "must be paired with another ladder symbol",
            *_first_pos(ast),
        )
    return result


def compile_expr(text: str, hbar=1) -> DiffOpExpr:
    return elaborate(parse(text), hbar)


def parse_symbol(text: str, hbar=1) -> PolySymbol:
    """Parse a W-free expression (a Hamiltonian, say) into a polynomial."""
    hbar = as_rational(hbar)
    ast = parse_raw(text)
    if _w_count(ast):
        raise DslSemanticError("a symbol must not contain W", *_first_pos(ast))
    result = _lower(ast, hbar)
    if result.root2:
        raise DslSemanticError(
            "symbol carries an odd power of 1/sqrt(2)", *_first_pos(ast)
        )
    return result


# --- printing --------------------------------------------------------------


def _rat(q: Fraction) -> str:
    return str(q)


def format_coeff(c: CRat) -> tuple[str, str]:
    """Split a coefficient into a sign and a magnitude string ('' for 1)."""
    if c.im == 0:
        sign = "-" if c.re < 0 else "+"
        mag = abs(c.re)
        return sign, "" if mag == 1 else _rat(mag)
    if c.re == 0:
        sign = "-" if c.im < 0 else "+"
        mag = abs(c.im)
        return sign, "i" if mag == 1 else f"{_rat(mag)} i"
    im = f"{_rat(abs(c.im))} i" if abs(c.im) != 1 else "i"
    op = "+" if c.im > 0 else "-"
    if c.re < 0:
        return "-", f"({_rat(-c.re)} {'-' if op == '+' else '+'} {im})"
    return "+", f"({_rat(c.re)} {op} {im})"


def _sort_key(exps: tuple) -> tuple:
    return (sum(exps), tuple(-e for e in exps))


def _join_terms(pieces: list[tuple[str, str]]) -> str:
    if not pieces:
        return "0"
    out = []
    for k, (sign, body) in enumerate(pieces):
        if k == 0:
            out.append(body if sign == "+" else f"-{body}")
        else:
            out.append(f" {sign} {body}")
    return "".join(out)


def _poly_factors(a: int, b: int) -> list[str]:
    factors = []
    if a:
        factors.append("x" if a == 1 else f"x^{a}")
    if b:
        factors.append("p" if b == 1 else f"p^{b}")
    return factors


def _with_coeff(mag: str, factors: list[str]) -> str:
    if not factors:
        return mag or "1"
    body = " . ".join(factors)
    return f"{mag} {body}" if mag else body


def format_poly(poly: PolySymbol) -> str:
    """Graded-lex order, DSL syntax."""
    if poly.root2:
        raise ValueError("polynomials with a 1/sqrt(2) prefactor have no DSL spelling")
    pieces = []
    for (a, b), c in sorted(poly.items(), key=lambda kv: _sort_key(kv[0])):
        sign, mag = format_coeff(c)
        pieces.append((sign, _with_coeff(mag, _poly_factors(a, b))))
    return _join_terms(pieces)


def _w_factor(c: int, d: int) -> str:
    inner = "W"
    for _ in range(d):
        inner = f"Dp({inner})"
    for _ in range(c):
        inner = f"Dx({inner})"
    return inner


def format_expr(expr: DiffOpExpr) -> str:
    """Deterministic DSL text for a generator (graded lex on (a, b, c, d))."""
    if expr.root2:
        raise ValueError("generators with a 1/sqrt(2) prefactor have no DSL spelling")
    if expr.is_zero():
        return "0 W"
    pieces = []
    for mono, c in sorted(expr.items(), key=lambda kv: _sort_key(tuple(kv[0]))):
        sign, mag = format_coeff(c)
        factors = _poly_factors(mono.a, mono.b) + [_w_factor(mono.c, mono.d)]
        pieces.append((sign, _with_coeff(mag, factors)))
    return _join_terms(pieces)


# --- AST printer -----------------------------------------------------------

_PREC = {Sum: 1, Diff: 1, Star: 2, Point: 2}


def unparse(node: Node) -> str:
    """Minimal-parenthesis text that parses back to the same tree."""
    if isinstance(node, Scalar):
        v = node.value
        if v.im or v.re < 0:
            raise ValueError("AST scalars are non-negative rationals")
        return str(v.re)
    if isinstance(node, Sym):
        return node.name
    if isinstance(node, WNode):
        return "W"
    if isinstance(node, Neg):
        inner = unparse(node.expr)
        if type(node.expr) in _PREC:
            inner = f"({inner})"
        return f"-{inner}"
    if isinstance(node, (Dx, Dp, Lap)):
        return f"{type(node).__name__}({unparse(node.expr)})"
    prec = _PREC[type(node)]
    left = unparse(node.left)
    if _PREC.get(type(node.left), 3) < prec:
        left = f"({left})"
    right = unparse(node.right)
    if _PREC.get(type(node.right), 3) <= prec:
        right = f"({right})"
    op = {Sum: "+", Diff: "-", Star: "*", Point: "."}[type(node)]
    return f"{left} {op} {right}"
