"""Tiny expression grammar for constructing functions on Z/N from the CLI.

  expr   := term (('+'|'-') term)*
  term   := factor ('*' factor)*
  factor := number | 'e' '(' poly '/' int ')' | 'ind' '{' ints '}' | '(' expr ')'
  poly   := polynomial in x with integer coefficients (sums of c*x^k terms)

e(P/Q) evaluates the polynomial exactly mod Q per residue; ind{...} is an
indicator of row-major element indices (the only form valid on product
groups).
"""

from __future__ import annotations

import re

import numpy as np

from .errors import ParseError
from .groups import GroupFunction, GroupSpec

_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+\.\d+|\d+)|(?P<name>e|ind|x)|(?P<op>[-+*/^(){},]))"
)


class _Tokens:
    def __init__(self, s: str):
        self.s = s
        self.pos = 0
        self.toks: list[tuple[str, str, int]] = []
        while self.pos < len(s):
            m = _TOKEN.match(s, self.pos)
            if not m or m.end() == self.pos:
                raise ParseError("unexpected character", self.pos)
            kind = next(k for k in ("num", "name", "op") if m.group(k) is not None)
            self.toks.append((kind, m.group(kind), m.start(kind)))
            self.pos = m.end()
        self.i = 0

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else ("end", "", len(self.s))

    def next(self):
        t = self.peek()
        self.i += 1
        return t

    def expect(self, value: str):
        kind, v, pos = self.next()
        if v != value:
            raise ParseError(f"expected {value!r}, found {v!r}", pos)


def _parse_poly(tk: _Tokens) -> list[int]:
    """Integer-coefficient polynomial in x as a coefficient list."""
    coeffs = [0]
    sign = 1
    kind, v, pos = tk.peek()
    if v in ("+", "-"):
        sign = -1 if v == "-" else 1
        tk.next()
    while True:
        c, k = 1, 0
        kind, v, pos = tk.peek()
        if kind == "num":
            if "." in v:
                raise ParseError("polynomial coefficients must be integers", pos)
            c = int(v)
            tk.next()
            if tk.peek()[1] == "*":
                tk.next()
                kind, v, pos = tk.peek()
                if v != "x":
                    raise ParseError("expected x after coefficient", pos)
        kind, v, pos = tk.peek()
        if v == "x":
            tk.next()
            k = 1
            if tk.peek()[1] == "^":
                tk.next()
                kind, v, pos = tk.next()
                if kind != "num" or "." in v:
                    raise ParseError("integer exponent expected", pos)
                k = int(v)
        while len(coeffs) <= k:
            coeffs.append(0)
        coeffs[k] += sign * c
        kind, v, pos = tk.peek()
        if v == "+":
            sign = 1
            tk.next()
        elif v == "-":
            sign = -1
            tk.next()
        else:
            return coeffs


def _eval_poly_mod(coeffs: list[int], N: int, Q: int) -> np.ndarray:
    xs = np.arange(N, dtype=np.int64)
    acc = np.zeros(N, dtype=np.int64)
    power = np.ones(N, dtype=np.int64)
    for c in coeffs:
        acc = (acc + (c % Q) * power) % Q
        power = (power * xs) % Q
    return acc


def _parse_factor(tk: _Tokens, spec: GroupSpec) -> np.ndarray:
    kind, v, pos = tk.next()
    if kind == "num":
        return np.full(spec.order, float(v), dtype=np.complex128)
    if v == "(":
        out = _parse_expr(tk, spec)
        tk.expect(")")
        return out
    if v == "e":
        if spec.rank != 1:
            raise ParseError("polynomial phases require a cyclic group", pos)
        tk.expect("(")
        wrapped = tk.peek()[1] == "("
        if wrapped:
            tk.next()
        coeffs = _parse_poly(tk)
        if wrapped:
            tk.expect(")")
        tk.expect("/")
        kind, q, qpos = tk.next()
        if kind != "num" or "." in q:
            raise ParseError("integer denominator expected", qpos)
        tk.expect(")")
        r = _eval_poly_mod(coeffs, spec.order, int(q))
        return np.exp(2j * np.pi * r / int(q))
    if v == "ind":
        tk.expect("{")
        idx = []
        while True:
            kind, t, tpos = tk.next()
            if kind != "num" or "." in t:
                raise ParseError("integer index expected", tpos)
            idx.append(int(t))
            kind, t, tpos = tk.next()
            if t == "}":
                break
            if t != ",":
                raise ParseError("expected ',' or '}'", tpos)
        vals = np.zeros(spec.order, dtype=np.complex128)
        for i in idx:
            vals[i % spec.order] = 1.0
        return vals
    raise ParseError(f"unexpected token {v!r}", pos)


def _parse_term(tk: _Tokens, spec: GroupSpec) -> np.ndarray:
    out = _parse_factor(tk, spec)
    while tk.peek()[1] == "*":
        tk.next()
        out = out * _parse_factor(tk, spec)
    return out


def _parse_expr(tk: _Tokens, spec: GroupSpec) -> np.ndarray:
    out = _parse_term(tk, spec)
    while tk.peek()[1] in ("+", "-"):
        op = tk.next()[1]
        rhs = _parse_term(tk, spec)
        out = out + rhs if op == "+" else out - rhs
    return out


def parse_expr(s: str, spec: GroupSpec) -> GroupFunction:
    tk = _Tokens(s)
    vals = _parse_expr(tk, spec)
    if tk.peek()[0] != "end":
        raise ParseError("trailing input", tk.peek()[2])
    return GroupFunction(spec, vals)
