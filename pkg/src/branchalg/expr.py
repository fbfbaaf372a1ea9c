"""A small recursive-descent parser for ring expressions.

Grammar::

    expr   := term (('+' | '-') term)*
    term   := factor ('*' factor)*
    factor := ('-')? atom ('^' uint)?
    atom   := integer | name | '(' expr ')'

``name`` is an identifier optionally followed by one or more ``'``. How a
name is turned into a value is up to the caller (``atom``); integers go
through ``scalar``. Result values only need ``+``, ``-``, ``*`` and ``**``.
"""

from __future__ import annotations

import re
from typing import Callable, Sequence, TypeVar

from .errors import InvalidArgument

__all__ = ["parse_expression", "split_name"]

T = TypeVar("T")

_TOKEN = re.compile(r"\s*(?:(\d+)|([A-Za-z_][A-Za-z0-9_]*'*)|(\S))")


def _tokenize(text: str) -> list[tuple[str, str]]:
    out = []
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            break
        pos = m.end()
        if m.group(1):
            out.append(("int", m.group(1)))
        elif m.group(2):
            out.append(("name", m.group(2)))
        else:
            ch = m.group(3)
            if ch not in "+-*^()":
                raise InvalidArgument(f"unexpected character {ch!r} in {text!r}")
            out.append(("op", ch))
    return out


def split_name(name: str, known: Sequence[str]) -> list[str]:
    """Split a concatenation such as ``ADA`` into known names, longest match first.

    A trailing ``'`` stays attached to the name it follows.
    """
    ordered = sorted(known, key=len, reverse=True)
    parts, pos = [], 0
    while pos < len(name):
        for k in ordered:
            if name.startswith(k, pos):
                end = pos + len(k)
                while end < len(name) and name[end] == "'":
                    end += 1
                parts.append(name[pos:end])
                pos = end
                break
        else:
            raise InvalidArgument(f"cannot split {name!r} into known symbols")
    return parts


def parse_expression(text: str, atom: Callable[[str], T], scalar: Callable[[int], T]) -> T:
    tokens = _tokenize(text)
    if not tokens:
        raise InvalidArgument("empty expression")
    pos = 0

    def peek() -> tuple[str, str] | None:
        return tokens[pos] if pos < len(tokens) else None

    def take(kind: str, value: str | None = None) -> str:
        nonlocal pos
        tok = peek()
        if tok is None or tok[0] != kind or (value is not None and tok[1] != value):
            want = value or kind
            got = "end of input" if tok is None else repr(tok[1])
            raise InvalidArgument(f"expected {want}, got {got} in {text!r}")
        pos += 1
        return tok[1]

    def expr() -> T:
        val = term()
        while (tok := peek()) is not None and tok in (("op", "+"), ("op", "-")):
            take("op")
            rhs = term()
            val = val + rhs if tok[1] == "+" else val - rhs
        return val

    def term() -> T:
        val = factor()
        while peek() == ("op", "*"):
            take("op", "*")
            val = val * factor()
        return val

    def factor() -> T:
        neg = False
        if peek() == ("op", "-"):
            take("op", "-")
            neg = True
        val = primary()
        if peek() == ("op", "^"):
            take("op", "^")
            val = val ** int(take("int"))
        return scalar(0) - val if neg else val

    def primary() -> T:
        tok = peek()
        if tok is None:
            raise InvalidArgument(f"unexpected end of {text!r}")
        if tok == ("op", "("):
            take("op", "(")
            val = expr()
            take("op", ")")
            return val
        if tok[0] == "int":
            return scalar(int(take("int")))
        if tok[0] == "name":
            return atom(take("name"))
        raise InvalidArgument(f"unexpected {tok[1]!r} in {text!r}")

    result = expr()
    if pos != len(tokens):
        raise InvalidArgument(f"trailing input after position {pos} in {text!r}")
    return result
