"""Self-similar groups given by wreath recursions.

Conventions used everywhere in the package:

* letters are ``1..q``; a vertex is a tuple of letters (``()`` is the root);
* groups act on the right, ``v^(gh) = (v^g)^h``, and a root permutation is
  stored as the tuple ``(1^g, ..., q^g)``;
* a group word is a tuple of nonzero ints, ``+(i+1)`` for generator ``i`` and
  ``-(i+1)`` for its inverse; involutive generators only ever appear with
  the ``+`` sign.
"""

from __future__ import annotations

import itertools
import re
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Sequence

from .errors import InvalidArgument, NotFound

__all__ = [
    "Word",
    "Vertex",
    "WreathRecursion",
    "ContractionParams",
    "ContractionReport",
    "ZOO_NAMES",
    "builtin_group",
    "free_reduce",
    "normalize",
    "inverse_word",
    "section",
    "act",
    "contraction_certificate",
    "orbit_growth",
    "parse_recursion",
    "format_recursion",
    "load_recursion",
]

Word = tuple[int, ...]
Vertex = tuple[int, ...]


@dataclass(frozen=True)
class WreathRecursion:
    """``g -> <g@1, ..., g@q> pi_g`` for each generator ``g``.

    ``rewrites`` is an optional list of length-reducing relations
    ``(lhs, rhs)`` that hold in the group; :func:`normalize` applies them on
    top of free reduction. They are checked on construction, by comparing the
    actions of both sides on level ``validate_level``.
    """

    q: int
    names: tuple[str, ...]
    perms: tuple[tuple[int, ...], ...]
    sections: tuple[tuple[Word, ...], ...]
    involutive: tuple[bool, ...]
    rewrites: tuple[tuple[Word, Word], ...] = ()
    validate_level: int = 8
    _inv_perms: tuple[tuple[int, ...], ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        q, k = self.q, len(self.names)
        if q < 2:
            raise InvalidArgument("alphabet size must be at least 2")
        if not k:
            raise InvalidArgument("a recursion needs at least one generator")
        if len(set(self.names)) != k:
            raise InvalidArgument("generator names must be distinct")
        for name in self.names:
            if not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", name) or name == "1":
                raise InvalidArgument(f"bad generator name {name!r}")
        if not (len(self.perms) == len(self.sections) == len(self.involutive) == k):
            raise InvalidArgument("perms, sections and involutive must have one entry per generator")
        inv = []
        for name, perm, secs in zip(self.names, self.perms, self.sections):
            if sorted(perm) != list(range(1, q + 1)):
                raise InvalidArgument(f"root permutation of {name} is not a bijection of 1..{q}")
            if len(secs) != q:
                raise InvalidArgument(f"generator {name} needs exactly {q} sections")
            for w in secs:
                self._check_word(w)
            p_inv = [0] * q
            for x, y in enumerate(perm, start=1):
                p_inv[y - 1] = x
            inv.append(tuple(p_inv))
        object.__setattr__(self, "_inv_perms", tuple(inv))
        # canonical storage: involutive generators carry sign +1 only
        object.__setattr__(
            self, "sections", tuple(tuple(free_reduce(self, w) for w in secs) for secs in self.sections)
        )
        for lhs, rhs in self.rewrites:
            self._check_word(lhs)
            self._check_word(rhs)
            if len(rhs) >= len(lhs):
                raise InvalidArgument("rewrite rules must strictly shorten words")
        self._validate()

    @property
    def ngens(self) -> int:
        return len(self.names)

    def _check_word(self, w: Sequence[int]) -> None:
        k = len(self.names)
        for s in w:
            if not isinstance(s, int) or s == 0 or abs(s) > k:
                raise InvalidArgument(f"word {tuple(w)} references an undeclared generator")

    def _validate(self) -> None:
        n = self.validate_level
        if n <= 0:
            return
        verts = list(itertools.product(range(1, self.q + 1), repeat=n))
        for i, flag in enumerate(self.involutive):
            if flag:
                g = i + 1
                for v in verts:
                    if act(self, (g, g), v) != v:
                        raise InvalidArgument(
                            f"generator {self.names[i]} is flagged involutive but g^2 moves {v}"
                        )
        for lhs, rhs in self.rewrites:
            for v in verts:
                if act(self, lhs, v) != act(self, rhs, v):
                    raise InvalidArgument(
                        f"rewrite {self.format_word(lhs)} -> {self.format_word(rhs)} fails at {v}"
                    )

    def inv_perm(self, i: int) -> tuple[int, ...]:
        return self._inv_perms[i]

    # -- words as text ------------------------------------------------------

    def parse_word(self, text: str) -> Word:
        """Parse ``"bd"``, ``"x g' x"`` or ``"a.b^-1"``-free forms; ``1`` is the identity.

        Tokens are generator names, optionally followed by ``'`` (inverse).
        Names are matched greedily, longest first; whitespace, ``*`` and ``.``
        are separators.
        """
        names = sorted(self.names, key=len, reverse=True)
        pattern = re.compile("|".join(re.escape(n) for n in names))
        out: list[int] = []
        pos, s = 0, text.strip()
        while pos < len(s):
            ch = s[pos]
            if ch in " \t*.":
                pos += 1
                continue
            if ch == "1":
                pos += 1
                continue
            m = pattern.match(s, pos)
            if not m:
                raise InvalidArgument(f"cannot parse group word {text!r} at position {pos}")
            i = self.names.index(m.group(0))
            pos = m.end()
            sign = 1
            while pos < len(s) and s[pos] == "'":
                sign = -sign
                pos += 1
            out.append((i + 1) * sign)
        return free_reduce(self, out)

    def format_word(self, w: Sequence[int]) -> str:
        if not w:
            return "1"
        sep = "" if all(len(n) == 1 for n in self.names) else " "
        return sep.join(self.names[abs(s) - 1] + ("'" if s < 0 else "") for s in w)

    def generator(self, name: str) -> Word:
        try:
            return (self.names.index(name) + 1,)
        except ValueError:
            raise NotFound(f"no generator named {name!r}") from None


# -- reduction --------------------------------------------------------------


def _push(rec: WreathRecursion, stack: list[int], s: int, rules: bool) -> None:
    if rec.involutive[abs(s) - 1]:
        s = abs(s)
    if stack and (stack[-1] == -s or (s > 0 and stack[-1] == s and rec.involutive[s - 1])):
        stack.pop()
        return
    stack.append(s)
    if rules:
        for lhs, rhs in rec.rewrites:
            m = len(lhs)
            if len(stack) >= m and tuple(stack[-m:]) == lhs:
                del stack[-m:]
                for t in rhs:
                    _push(rec, stack, t, rules)
                return


def free_reduce(rec: WreathRecursion, w: Iterable[int]) -> Word:
    """Cancel ``s s^-1`` and ``s s`` for involutive ``s``; single stack pass."""
    stack: list[int] = []
    for s in w:
        _push(rec, stack, s, False)
    return tuple(stack)


def normalize(rec: WreathRecursion, w: Iterable[int]) -> Word:
    """Free reduction followed by the recursion's rewrite rules.

    The stack prefix is kept irreducible, so any new match must end at the
    top; this makes one left-to-right pass sufficient.
    """
    stack: list[int] = []
    for s in w:
        _push(rec, stack, s, True)
    return tuple(stack)


def inverse_word(rec: WreathRecursion, w: Sequence[int]) -> Word:
    return tuple(s if rec.involutive[abs(s) - 1] else -s for s in reversed(w))


# -- sections and action ----------------------------------------------------


def _check_vertex(rec: WreathRecursion, v: Sequence[int]) -> None:
    for x in v:
        if not isinstance(x, int) or not 1 <= x <= rec.q:
            raise InvalidArgument(f"letter {x!r} out of range 1..{rec.q}")


def _step(rec: WreathRecursion, w: Sequence[int], x: int) -> tuple[int, list[int]]:
    """Return ``(x^w, unreduced w@x)`` for a single letter ``x``."""
    out: list[int] = []
    cur = x
    for s in w:
        i = abs(s) - 1
        if s > 0:
            out.extend(rec.sections[i][cur - 1])
            cur = rec.perms[i][cur - 1]
        else:
            y = rec.inv_perm(i)[cur - 1]
            out.extend(inverse_word(rec, rec.sections[i][y - 1]))
            cur = y
    return cur, out


def section(rec: WreathRecursion, w: Sequence[int], v: Sequence[int], *, rewrite: bool = False) -> Word:
    """The section ``w@v``, freely reduced (and rewritten if ``rewrite``)."""
    _check_vertex(rec, v)
    reduce = normalize if rewrite else free_reduce
    cur = reduce(rec, w)
    for x in v:
        _, raw = _step(rec, cur, x)
        cur = reduce(rec, raw)
    return cur


def act(rec: WreathRecursion, w: Sequence[int], v: Sequence[int]) -> Vertex:
    """The image ``v^w`` under the right action."""
    _check_vertex(rec, v)
    cur = tuple(w)
    out = []
    for x in v:
        y, raw = _step(rec, cur, x)
        out.append(y)
        cur = free_reduce(rec, raw)
    return tuple(out)


# -- zoo ----------------------------------------------------------------------

_ZOO_TEXT: dict[str, str] = {
    "grigorchuk": """
        alphabet 2
        a involutive (1,2) 1 1
        b involutive () a c
        c involutive () a d
        d involutive () 1 b
        rewrite bc d
        rewrite cb d
        rewrite bd c
        rewrite db c
        rewrite cd b
        rewrite dc b
    """,
    "gupta_sidki": """
        alphabet 3
        x plain (1,2,3) 1 1 1
        g plain () g x x'
    """,
    "fabrykowski_gupta_bg": """
        alphabet 3
        x plain (1,2,3) 1 1 1
        d plain () d x x
    """,
    "bsv": """
        alphabet 2
        t plain (1,2) 1 t
        m plain (1,2) 1 m'
    """,
    "basilica": """
        alphabet 2
        a plain (1,2) 1 b
        b plain () 1 a
    """,
    "odometer": """
        alphabet 2
        t plain (1,2) 1 t
    """,
    "lamplighter": """
        alphabet 2
        a plain (1,2) a b
        b plain () a b
    """,
}

ZOO_NAMES: tuple[str, ...] = tuple(_ZOO_TEXT)


@lru_cache(maxsize=None)
def builtin_group(name: str) -> WreathRecursion:
    """One of the built-in recursions; see ``ZOO_NAMES``.

    Generator names: grigorchuk ``a b c d``; gupta_sidki ``x g`` (g is gamma);
    fabrykowski_gupta_bg ``x d`` (d is delta); bsv ``t m`` (tau, mu);
    basilica ``a b``; odometer ``t``; lamplighter ``a b``.
    """
    try:
        text = _ZOO_TEXT[name]
    except KeyError:
        raise NotFound(f"unknown group {name!r}; known: {', '.join(ZOO_NAMES)}") from None
    return parse_recursion(text)


# -- text format ----------------------------------------------------------------

_TRUE = {"involutive", "inv", "1", "yes", "true", "y"}
_FALSE = {"plain", "0", "no", "false", "n"}


def _parse_cycles(text: str, q: int) -> tuple[int, ...]:
    img = list(range(1, q + 1))
    t = text.replace(" ", "")
    if not re.fullmatch(r"(\((\d+(,\d+)*)?\))+", t):
        raise InvalidArgument(f"bad cycle notation {text!r}")
    seen: set[int] = set()
    for cyc in re.findall(r"\(([^)]*)\)", t):
        if not cyc:
            continue
        pts = [int(c) for c in cyc.split(",")]
        for p in pts:
            if not 1 <= p <= q or p in seen:
                raise InvalidArgument(f"bad cycle notation {text!r}")
            seen.add(p)
        for a, b in zip(pts, pts[1:] + pts[:1]):
            img[a - 1] = b
    return tuple(img)


def _format_cycles(perm: Sequence[int]) -> str:
    seen, parts = set(), []
    for start in range(1, len(perm) + 1):
        if start in seen or perm[start - 1] == start:
            continue
        cyc, x = [], start
        while x not in seen:
            seen.add(x)
            cyc.append(x)
            x = perm[x - 1]
        parts.append("(" + ",".join(map(str, cyc)) + ")")
    return "".join(parts) or "()"


def parse_recursion(text: str, *, validate_level: int = 8) -> WreathRecursion:
    """Parse the group-definition text format.

    ::

        # comment
        alphabet 2
        <name> <involutive|plain> <cycles> <w_1> ... <w_q>
        rewrite <lhs> <rhs>

    Section words are generator names concatenated (``'`` marks an inverse,
    ``1`` is the identity); with multi-letter names separate them by ``.``.
    """
    q = None
    gens: list[tuple[str, bool, str, list[str]]] = []
    rules: list[tuple[str, str]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if q is None:
            if parts[0] == "alphabet":
                parts = parts[1:]
            if len(parts) != 1 or not parts[0].isdigit():
                raise InvalidArgument(f"line {lineno}: expected the alphabet size")
            q = int(parts[0])
            continue
        if parts[0] == "rewrite":
            if len(parts) != 3:
                raise InvalidArgument(f"line {lineno}: rewrite needs lhs and rhs")
            rules.append((parts[1], parts[2]))
            continue
        if len(parts) != 3 + q:
            raise InvalidArgument(f"line {lineno}: expected name, flag, permutation and {q} sections")
        flag = parts[1].lower()
        if flag not in _TRUE | _FALSE:
            raise InvalidArgument(f"line {lineno}: involutive flag must be 'involutive' or 'plain'")
        gens.append((parts[0], flag in _TRUE, parts[2], parts[3:]))
    if q is None or not gens:
        raise InvalidArgument("empty group definition")
    names = tuple(g[0] for g in gens)
    # a bare recursion is used only as a parser for the section words
    shell = _WordParser(names)
    rec = WreathRecursion(
        q=q,
        names=names,
        perms=tuple(_parse_cycles(g[2], q) for g in gens),
        sections=tuple(tuple(shell.parse(w) for w in g[3]) for g in gens),
        involutive=tuple(g[1] for g in gens),
        rewrites=tuple((shell.parse(a), shell.parse(b)) for a, b in rules),
        validate_level=validate_level,
    )
    return rec


class _WordParser:
    def __init__(self, names: Sequence[str]) -> None:
        self.names = tuple(names)
        ordered = sorted(self.names, key=len, reverse=True)
        self.pattern = re.compile("|".join(re.escape(n) for n in ordered))

    def parse(self, text: str) -> Word:
        out, pos = [], 0
        while pos < len(text):
            if text[pos] in ".*1":
                pos += 1
                continue
            m = self.pattern.match(text, pos)
            if not m:
                raise InvalidArgument(f"cannot parse section word {text!r}")
            sign, pos = 1, m.end()
            while pos < len(text) and text[pos] == "'":
                sign, pos = -sign, pos + 1
            out.append((self.names.index(m.group(0)) + 1) * sign)
        return tuple(out)


def format_recursion(rec: WreathRecursion) -> str:
    sep = "" if all(len(n) == 1 for n in rec.names) else "."
    width = max(len(n) for n in rec.names)

    def fmt(w: Word) -> str:
        if not w:
            return "1"
        return sep.join(rec.names[abs(s) - 1] + ("'" if s < 0 else "") for s in w)

    lines = [f"alphabet {rec.q}"]
    for i, name in enumerate(rec.names):
        flag = "involutive" if rec.involutive[i] else "plain"
        secs = " ".join(fmt(w) for w in rec.sections[i])
        lines.append(f"{name:<{width}} {flag:<10} {_format_cycles(rec.perms[i])} {secs}")
    for lhs, rhs in rec.rewrites:
        lines.append(f"rewrite {fmt(lhs)} {fmt(rhs)}")
    return "\n".join(lines) + "\n"


def load_recursion(spec: str | Path) -> WreathRecursion:
    """A zoo name, or a path to a group-definition file."""
    if isinstance(spec, str) and spec in _ZOO_TEXT:
        return builtin_group(spec)
    path = Path(spec)
    if not path.is_file():
        raise NotFound(f"{spec!r} is neither a built-in group nor a readable file")
    return parse_recursion(path.read_text())


# -- contraction ----------------------------------------------------------------


@dataclass(frozen=True)
class ContractionParams:
    lam: Fraction
    depth: int
    K: int

    def __post_init__(self) -> None:
        lam = Fraction(self.lam)
        object.__setattr__(self, "lam", lam)
        if not 0 < lam < 1:
            raise InvalidArgument("lambda must lie in (0, 1)")
        if self.depth < 1:
            raise InvalidArgument("depth must be positive")
        if self.K < 0:
            raise InvalidArgument("K must be nonnegative")


@dataclass(frozen=True)
class ContractionReport:
    passed: bool
    words_checked: int
    max_len: int
    worst_word: Word
    worst_vertex: Vertex
    worst_section_len: int
    worst_excess: Fraction
    """``|w@v| - lam*|w|`` for the worst pair; the check passes iff this is at most ``K``."""

    def as_dict(self, rec: WreathRecursion) -> dict:
        return {
            "passed": self.passed,
            "words_checked": self.words_checked,
            "max_len": self.max_len,
            "worst_word": rec.format_word(self.worst_word),
            "worst_vertex": list(self.worst_vertex),
            "worst_section_len": self.worst_section_len,
            "worst_excess": str(self.worst_excess),
        }


def contraction_certificate(
    rec: WreathRecursion, params: ContractionParams, max_len: int
) -> ContractionReport:
    """Check ``|w@v| <= lam |w| + K`` for all reduced ``w`` with ``|w| <= max_len``.

    Words range over normal forms (free reduction plus the recursion's rewrite
    rules), and section lengths are measured after the same normalization.
    Since normalized length bounds geodesic length from above, a pass is a
    sound certificate of contraction; it says nothing about optimal ``lam``.
    """
    if max_len < 0:
        raise InvalidArgument("max_len must be nonnegative")
    n = params.depth
    verts = list(itertools.product(range(1, rec.q + 1), repeat=n))
    vidx = {v: i for i, v in enumerate(verts)}
    symbols = [i + 1 for i in range(rec.ngens)] + [-(i + 1) for i in range(rec.ngens) if not rec.involutive[i]]
    # per symbol and vertex: (image index, section word)
    table: dict[int, list[tuple[int, Word]]] = {}
    for s in symbols:
        row = []
        for v in verts:
            row.append((vidx[act(rec, (s,), v)], section(rec, (s,), v)))
        table[s] = row

    best = (Fraction(0), (), verts[0], 0)
    count = 1  # the empty word

    def dfs(word: list[int], state: list[tuple[int, Word]]) -> None:
        nonlocal best, count
        for s in symbols:
            ext = normalize(rec, word + [s])
            if len(ext) != len(word) + 1:
                continue
            new_state = []
            L = len(ext)
            for start, (cur, sec) in enumerate(state):
                img, piece = table[s][cur]
                sw = normalize(rec, sec + piece)
                new_state.append((img, sw))
                excess = len(sw) - params.lam * L
                if excess > best[0]:
                    best = (excess, ext, verts[start], len(sw))
            count += 1
            if L < max_len:
                dfs(list(ext), new_state)

    if max_len >= 1:
        dfs([], [(i, ()) for i in range(len(verts))])
    excess, w, v, slen = best
    return ContractionReport(
        passed=excess <= params.K,
        words_checked=count,
        max_len=max_len,
        worst_word=tuple(w),
        worst_vertex=tuple(v),
        worst_section_len=slen,
        worst_excess=excess,
    )


# -- orbit growth -------------------------------------------------------------------


def orbit_growth(
    rec: WreathRecursion, basepoint: Sequence[int], radius: int, *, inverses: bool = False
) -> list[int]:
    """``f(r)`` = number of vertices reachable from ``basepoint`` by words of length ``<= r``.

    By default only the generators themselves are applied (monoid words);
    pass ``inverses=True`` to use the symmetric generating set.
    """
    _check_vertex(rec, basepoint)
    if not basepoint:
        raise InvalidArgument("basepoint must lie on level >= 1")
    if radius < 0:
        raise InvalidArgument("radius must be nonnegative")
    steps = [(i + 1,) for i in range(rec.ngens)]
    if inverses:
        steps += [(-(i + 1),) for i in range(rec.ngens) if not rec.involutive[i]]
    start = tuple(basepoint)
    seen = {start}
    frontier = deque([start])
    counts = [1]
    total = rec.q ** len(start)
    for _ in range(radius):
        nxt = deque()
        if len(seen) < total:
            for v in frontier:
                for s in steps:
                    u = act(rec, s, v)
                    if u not in seen:
                        seen.add(u)
                        nxt.append(u)
        frontier = nxt
        counts.append(len(seen))
    return counts
