"""Reader and writer for ``.pp`` polynomial program files.

Example::

    # Example problem
    problem demo;
    var x in [0, 2];
    var k in {1, 1.5, 2};
    const pi = 3.14159;
    minimize x^2*k - pi*x;
    subject to {
        x + k <= 3;
        x*k >= 1/2;
    }

Statements end with ``;`` and may appear in any order; ``#`` starts a
comment.  Expressions use ``+ - * /`` and ``^`` with a nonnegative integer
exponent; division is only allowed by a constant.  A discrete set must be an
evenly spaced list of values.  ``maximize e`` is read as ``minimize -(e)``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

from .poly import (
    CONSTANT,
    Constraint,
    Polynomial,
    PolynomialProgram,
    ProgramError,
    VariableSpec,
)

_SPACING_TOL = 1e-9

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r]+|\#[^\n]*)
  | (?P<nl>\n)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op><=|>=|==|[-+*/^()\[\]{},;=<>])
    """,
    re.VERBOSE,
)

_KEYWORDS = {"minimize", "maximize", "subject", "to", "var", "const", "in", "problem"}


class ParseError(ProgramError):
    """Syntax or semantic error in a ``.pp`` source, with its position."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


@dataclass(frozen=True)
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(src: str) -> list[_Tok]:
    toks = []
    line, start = 1, 0
    pos = 0
    while pos < len(src):
        m = _TOKEN.match(src, pos)
        if not m:
            raise ParseError(f"unexpected character {src[pos]!r}", line, pos - start + 1)
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            start = m.end()
        elif kind != "ws":
            toks.append(_Tok(kind, m.group(), line, m.start() - start + 1))
        pos = m.end()
    toks.append(_Tok("eof", "", line, pos - start + 1))
    return toks


class _Parser:
    def __init__(self, src: str):
        self.toks = _tokenize(src)
        self.i = 0

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def error(self, msg: str, tok: _Tok | None = None):
        t = tok or self.tok
        return ParseError(msg, t.line, t.col)

    def at(self, text: str) -> bool:
        return self.tok.text == text and self.tok.kind in ("op", "name")

    def take(self, text: str | None = None, kind: str | None = None) -> _Tok:
        t = self.tok
        if (text is not None and t.text != text) or (kind is not None and t.kind != kind):
            want = repr(text) if text is not None else kind
            got = repr(t.text) if t.kind != "eof" else "end of input"
            raise self.error(f"expected {want}, found {got}")
        self.i += 1
        return t

    # expressions become small trees, resolved against declarations later

    def expr(self):
        node = self.term()
        while self.at("+") or self.at("-"):
            op = self.take().text
            node = ("add" if op == "+" else "sub", node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.at("*") or self.at("/"):
            op = self.take()
            node = ("mul" if op.text == "*" else "div", node, self.unary(), op)
        return node

    def unary(self):
        if self.at("-"):
            self.take()
            return ("neg", self.unary())
        if self.at("+"):
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.at("^"):
            caret = self.take()
            neg = False
            if self.at("-"):
                self.take()
                neg = True
            t = self.take(kind="num")
            p = float(t.text)
            if neg or p != int(p):
                raise self.error(f"exponent must be a nonnegative integer, got {'-' if neg else ''}{t.text}", t)
            return ("pow", base, int(p), caret)
        return base

    def atom(self):
        t = self.tok
        if t.kind == "num":
            self.take()
            return ("num", float(t.text))
        if t.kind == "name" and t.text not in _KEYWORDS:
            self.take()
            return ("var", t.text, t)
        if self.at("("):
            self.take()
            node = self.expr()
            self.take(")")
            return node
        got = repr(t.text) if t.kind != "eof" else "end of input"
        raise self.error(f"expected an expression, found {got}")

    def number(self) -> float:
        sign = 1.0
        while self.at("-") or self.at("+"):
            if self.take().text == "-":
                sign = -sign
        return sign * float(self.take(kind="num").text)


def parse_program(src: str, name: str = "pp") -> PolynomialProgram:
    """Parse ``.pp`` source text into a :class:`PolynomialProgram`.

    Variables are indexed in declaration order; constants become fixed
    variables.  Errors carry the line and column of the offending token.
    """
    p = _Parser(src)
    decls: dict[str, tuple[VariableSpec, _Tok]] = {}
    objective = None
    cons = []
    prog_name = name
    while p.tok.kind != "eof":
        t = p.tok
        if p.at("var"):
            p.take()
            nt = p.take(kind="name")
            p.take("in")
            spec = _domain(p, nt.text)
            _declare(decls, spec, nt, p)
            p.take(";")
        elif p.at("const"):
            p.take()
            nt = p.take(kind="name")
            p.take("=")
            v = p.number()
            _declare(decls, VariableSpec(nt.text, v, v, "fixed"), nt, p)
            p.take(";")
        elif p.at("minimize") or p.at("maximize"):
            if objective is not None:
                raise p.error("a second objective", t)
            p.take()
            e = p.expr()
            objective = e if t.text == "minimize" else ("neg", e)
            p.take(";")
        elif p.at("subject"):
            p.take()
            p.take("to")
            p.take("{")
            while not p.at("}"):
                lhs = p.expr()
                rt = p.tok
                if rt.text not in ("<=", ">=", "=", "=="):
                    raise p.error(f"expected a relation (<=, >=, =), found {rt.text!r}")
                p.take()
                rhs = p.expr()
                p.take(";")
                cons.append((lhs, "==" if rt.text in ("=", "==") else rt.text, rhs))
            p.take("}")
            if p.at(";"):
                p.take()
        elif p.at("problem"):
            p.take()
            prog_name = p.take(kind="name").text
            p.take(";")
        else:
            raise p.error(f"expected a statement, found {t.text!r}" if t.kind != "eof" else "unexpected end")
    if objective is None:
        raise ParseError("no objective (missing 'minimize' statement)", p.tok.line, p.tok.col)

    names = list(decls)
    index = {n: i for i, n in enumerate(names)}
    f = _build(objective, index)
    constraints = []
    for lhs, rel, rhs in cons:
        g = _build(lhs, index) - _build(rhs, index)
        c0 = g.constant_term()
        constraints.append(Constraint(g - c0, rel, -c0 if c0 else 0.0))
    return PolynomialProgram(tuple(decls[n][0] for n in names), f, tuple(constraints), prog_name)


def _declare(decls, spec: VariableSpec, tok: _Tok, p: _Parser) -> None:
    if spec.name in decls:
        raise p.error(f"variable {spec.name!r} declared twice", tok)
    decls[spec.name] = (spec, tok)


def _domain(p: _Parser, name: str) -> VariableSpec:
    start = p.tok
    if p.at("["):
        p.take()
        lo = p.number()
        p.take(",")
        hi = p.number()
        p.take("]")
        try:
            return VariableSpec(name, lo, hi, "fixed" if lo == hi else "continuous")
        except ProgramError as exc:
            raise p.error(str(exc), start) from None
    p.take("{")
    vals = [p.number()]
    while p.at(","):
        p.take()
        vals.append(p.number())
    p.take("}")
    vals.sort()
    if len(vals) == 1:
        return VariableSpec(name, vals[0], vals[0], "fixed")
    lo, hi = vals[0], vals[-1]
    step = (hi - lo) / (len(vals) - 1)
    for k, v in enumerate(vals):
        if step == 0 or abs(v - (lo + k * step)) > _SPACING_TOL * max(1.0, abs(v)):
            raise p.error(f"discrete set of {name} is not evenly spaced", start)
    return VariableSpec(name, lo, hi, "discrete", step)


def _build(node, index: dict[str, int]) -> Polynomial:
    kind = node[0]
    if kind == "num":
        return Polynomial.constant(node[1])
    if kind == "var":
        _, name, tok = node
        if name not in index:
            raise ParseError(f"undeclared variable {name!r}", tok.line, tok.col)
        return Polynomial.variable(index[name])
    if kind == "neg":
        return -_build(node[1], index)
    if kind == "pow":
        return _build(node[1], index) ** node[2]
    a = _build(node[1], index)
    b = _build(node[2], index)
    if kind == "add":
        return a + b
    if kind == "sub":
        return a - b
    if kind == "mul":
        return a * b
    # division by a constant only
    if b.degree > 0 or b.is_zero():
        tok = node[3]
        raise ParseError("can only divide by a nonzero constant", tok.line, tok.col)
    return a * (1.0 / b.constant_term())


# ---------------------------------------------------------------------------
# printing


def _num(v: float) -> str:
    if v == int(v) and abs(v) < 1e15:
        return str(int(v))
    return repr(float(v))


def format_polynomial(poly: Polynomial, names) -> str:
    """Text form that :func:`parse_program` reads back to the same polynomial."""
    if poly.is_zero():
        return "0"
    parts = []
    for k, (mono, c) in enumerate(poly.terms):
        sign = "-" if c < 0 else "+"
        mag = abs(c)
        factors = [names[i] if p == 1 else f"{names[i]}^{p}" for i, p in mono]
        if mono == CONSTANT or mag != 1.0:
            factors.insert(0, _num(mag))
        body = "*".join(factors)
        if k == 0:
            parts.append(body if sign == "+" else f"-{body}")
        else:
            parts.append(f"{sign} {body}")
    return " ".join(parts)


def print_program(pp: PolynomialProgram) -> str:
    """Render ``pp`` as ``.pp`` source."""
    names = pp.names
    lines = [f"problem {pp.name};"]
    for v in pp.variables:
        if v.kind == "fixed":
            lines.append(f"const {v.name} = {_num(v.lower)};")
        elif v.kind == "discrete":
            n = int(round((v.upper - v.lower) / v.step))
            vals = [v.lower] + [v.lower + k * v.step for k in range(1, n)] + [v.upper]
            lines.append(f"var {v.name} in {{{', '.join(_num(x) for x in vals)}}};")
        else:
            lines.append(f"var {v.name} in [{_num(v.lower)}, {_num(v.upper)}];")
    lines.append(f"minimize {format_polynomial(pp.objective, names)};")
    if pp.constraints:
        lines.append("subject to {")
        for c in pp.constraints:
            rel = "=" if c.rel == "==" else c.rel
            lines.append(f"    {format_polynomial(c.poly, names)} {rel} {_num(c.rhs)};")
        lines.append("}")
    return "\n".join(lines) + "\n"


def read_program(path) -> PolynomialProgram:
    """Parse a ``.pp`` file; the file stem names the program unless it says otherwise."""
    from pathlib import Path

    path = Path(path)
    return parse_program(path.read_text(encoding="utf-8"), name=path.stem)


__all__ = ["ParseError", "parse_program", "print_program", "format_polynomial", "read_program"]
