"""Recursive presentations of the Grigorchuk group and its algebras.

Relators are kept as :class:`FreePoly` objects: linear combinations of
unreduced words over symbols such as ``a`` or ``A``. Nothing is cancelled,
so ``a^2`` stays a word of length two. Evaluation at a level then decides
whether a relator holds there. These checks establish soundness of a
presentation at finite levels; they say nothing about completeness.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from typing import Iterable, Mapping, Sequence

import numpy as np

from .algebra import (
    AlgebraElement,
    LevelMatrix,
    _atom_table,
    _identity_rows,
    _is_zero,
    _right_elem_op,
    branching_ideal_gens,
    evaluate,
    ideal_closure,
)
from .errors import InvalidArgument, NotFound, PreconditionViolation
from .exact import FieldSpec
from .expr import parse_expression, split_name
from .permgrp import level_permutation
from .selfsim import WreathRecursion, builtin_group, free_reduce

__all__ = [
    "FreePoly",
    "Substitution",
    "GROUP_SIGMA",
    "CHAR2_SIGMA",
    "CHARNE2_SIGMA",
    "substitution",
    "sigma_apply",
    "RelatorSet",
    "RelatorReport",
    "PRESETS",
    "load_preset",
    "generate_relators",
    "check_relators",
    "evaluate_poly",
    "EXCEPTIONAL_WORDS",
    "classify_word",
    "sigma_block_check",
]

Symbols = tuple[str, ...]


class FreePoly:
    """Element of a free associative algebra: ``{word: coefficient}``.

    Coefficients are integers or fractions. Words are tuples of symbol
    names and are never rewritten.
    """

    __slots__ = ("_terms",)

    def __init__(self, terms: Mapping[Symbols, object] | None = None):
        acc: dict[Symbols, object] = {}
        for w, c in (terms or {}).items():
            acc[tuple(w)] = acc.get(tuple(w), 0) + c
        self._terms = {w: _simplify(c) for w, c in acc.items() if c != 0}

    @classmethod
    def word(cls, symbols: Iterable[str]) -> "FreePoly":
        return cls({tuple(symbols): 1})

    @classmethod
    def const(cls, c) -> "FreePoly":
        return cls({(): c})

    @classmethod
    def parse(cls, text: str, symbols: Sequence[str]) -> "FreePoly":
        """Parse ``text`` with names split into the given symbols (``'`` allowed)."""

        def atom(name: str) -> FreePoly:
            return cls.word(split_name(name, symbols))

        return parse_expression(text, atom, cls.const)

    @property
    def terms(self) -> dict[Symbols, object]:
        return dict(self._terms)

    def symbols(self) -> set[str]:
        return {s.rstrip("'") for w in self._terms for s in w}

    def is_monomial(self) -> bool:
        return len(self._terms) == 1 and next(iter(self._terms.values())) == 1

    def monomial(self) -> Symbols:
        if not self.is_monomial():
            raise InvalidArgument(f"{self} is not a single word")
        return next(iter(self._terms))

    def degree(self) -> int:
        return max((len(w) for w in self._terms), default=0)

    def __add__(self, other) -> "FreePoly":
        other = other if isinstance(other, FreePoly) else FreePoly.const(other)
        t = dict(self._terms)
        for w, c in other._terms.items():
            t[w] = t.get(w, 0) + c
        return FreePoly(t)

    __radd__ = __add__

    def __neg__(self) -> "FreePoly":
        return FreePoly({w: -c for w, c in self._terms.items()})

    def __sub__(self, other) -> "FreePoly":
        other = other if isinstance(other, FreePoly) else FreePoly.const(other)
        return self + (-other)

    def __rsub__(self, other) -> "FreePoly":
        return FreePoly.const(other) - self

    def __mul__(self, other) -> "FreePoly":
        other = other if isinstance(other, FreePoly) else FreePoly.const(other)
        t: dict[Symbols, object] = {}
        for w1, c1 in self._terms.items():
            for w2, c2 in other._terms.items():
                t[w1 + w2] = t.get(w1 + w2, 0) + c1 * c2
        return FreePoly(t)

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "FreePoly":
        if k < 0:
            raise InvalidArgument("negative powers are not supported")
        out = FreePoly.const(1)
        for _ in range(k):
            out = out * self
        return out

    def __eq__(self, other) -> bool:
        return isinstance(other, FreePoly) and self._terms == other._terms

    def __hash__(self) -> int:
        return hash(frozenset(self._terms.items()))

    def __str__(self) -> str:
        if not self._terms:
            return "0"
        glue = "" if all(len(s.rstrip("'")) == 1 for w in self._terms for s in w) else "*"
        out = ""
        for w, c in sorted(self._terms.items(), key=lambda t: (-len(t[0]), t[0])):
            body = glue.join(w)
            neg = c < 0
            mag = -c if neg else c
            if not body:
                text = str(mag)
            elif mag == 1:
                text = body
            else:
                text = f"{mag}*{body}"
            if not out:
                out = f"-{text}" if neg else text
            else:
                out += f" - {text}" if neg else f" + {text}"
        return out

    def __repr__(self) -> str:
        return f"FreePoly({self})"


def _simplify(c):
    if isinstance(c, Fraction) and c.denominator == 1:
        return int(c)
    return c


# -- substitutions ------------------------------------------------------------------


@dataclass(frozen=True)
class Substitution:
    """A symbol-by-symbol substitution of words.

    ``group`` substitutions act on group words and reduce the result freely
    (``ss`` cancels for involutive ``s``); letter substitutions do not reduce.
    """

    variant: str
    mapping: Mapping[str, Symbols]
    group: bool

    def apply_word(self, w: Sequence[str]) -> Symbols:
        out: list[str] = []
        for s in w:
            base = s.rstrip("'")
            if base not in self.mapping:
                raise InvalidArgument(f"symbol {s!r} is outside the domain of {self.variant}")
            img = self.mapping[base]
            if s != base:
                if not self.group:
                    raise InvalidArgument("letters have no inverses")
                img = tuple(_invert_symbol(x) for x in reversed(img))
            out.extend(img)
        return _group_reduce(tuple(out)) if self.group else tuple(out)


def _invert_symbol(s: str) -> str:
    # every Grigorchuk generator is an involution, but keep the bookkeeping general
    return s[:-1] if s.endswith("'") else s + "'"


def _group_reduce(w: Symbols) -> Symbols:
    rec = builtin_group("grigorchuk")
    ints = tuple(_symbol_int(rec, s) for s in w)
    return tuple(_int_symbol(rec, i) for i in free_reduce(rec, ints))


def _symbol_int(rec: WreathRecursion, s: str) -> int:
    base = s.rstrip("'")
    (i,) = rec.generator(base)
    inv = (len(s) - len(base)) % 2 == 1
    return -i if inv and not rec.involutive[i - 1] else i


def _int_symbol(rec: WreathRecursion, i: int) -> str:
    name = rec.names[abs(i) - 1]
    return name if i > 0 else name + "'"


GROUP_SIGMA = Substitution(
    "group_sigma", {"a": ("a", "c", "a"), "b": ("d",), "c": ("b",), "d": ("c",)}, True
)
CHAR2_SIGMA = Substitution(
    "char2_sigma", {"A": ("A", "C", "A"), "B": ("D",), "C": ("B",), "D": ("C",)}, False
)
CHARNE2_SIGMA = Substitution("charne2_sigma", dict(GROUP_SIGMA.mapping), True)

_SUBS = {s.variant: s for s in (GROUP_SIGMA, CHAR2_SIGMA, CHARNE2_SIGMA)}


def substitution(name: str) -> Substitution:
    try:
        return _SUBS[name]
    except KeyError:
        raise NotFound(f"unknown substitution {name!r}; known: {sorted(_SUBS)}") from None


def sigma_apply(sub: Substitution, x, n: int = 1):
    """Apply ``sub`` ``n`` times to a word, a :class:`FreePoly` or an element.

    Words may be strings (``"ad"``) or symbol tuples; the result has the same
    kind. Polynomials are mapped linearly. :class:`AlgebraElement` inputs are
    only accepted by the group variants, whose substitution is an
    endomorphism of the group.
    """
    if n < 0:
        raise InvalidArgument("iteration count must be nonnegative")
    if isinstance(x, AlgebraElement):
        if not sub.group:
            raise InvalidArgument(f"{sub.variant} acts on letter words, not on group-algebra elements")
        rec = x.rec
        terms = {}
        for w, c in x.terms.items():
            syms: Symbols = tuple(_int_symbol(rec, i) for i in w)
            for _ in range(n):
                syms = sub.apply_word(syms)
            word = tuple(_symbol_int(rec, s) for s in syms)
            terms[word] = x.field(terms.get(word, 0) + c)
        return AlgebraElement(rec, x.field, terms)
    if isinstance(x, FreePoly):
        out: dict[Symbols, object] = {}
        for w, c in x.terms.items():
            for _ in range(n):
                w = sub.apply_word(w)
            out[w] = out.get(w, 0) + c
        return FreePoly(out)
    as_str = isinstance(x, str)
    w: Symbols = tuple(split_name(x, [s for s in sub.mapping])) if as_str else tuple(x)
    for _ in range(n):
        w = sub.apply_word(w)
    return "".join(w) if as_str else w


# -- presets ----------------------------------------------------------------------------


@dataclass(frozen=True)
class RelatorSet:
    """A preset expanded to a finite depth.

    ``relators`` lists the base relators followed by ``sigma^k(seed)`` for
    ``k = 0..depth``, seed by seed.
    """

    preset: str
    mode: str  # "group" or "algebra"
    recursion: str
    substitution: str
    fields: str
    base: tuple[FreePoly, ...]
    seeds: tuple[FreePoly, ...]
    depth: int
    relators: tuple[FreePoly, ...] = ()
    labels: tuple[str, ...] = ()

    def expand(self, depth: int) -> "RelatorSet":
        if depth < 0:
            raise InvalidArgument("depth must be >= 0")
        sub = substitution(self.substitution)
        rels = list(self.base)
        labels = [str(r) for r in self.base]
        for seed in self.seeds:
            cur = seed
            for k in range(depth + 1):
                if k:
                    cur = sigma_apply(sub, cur, 1)
                rels.append(cur)
                labels.append(f"sigma^{k}({seed})")
        return RelatorSet(
            self.preset, self.mode, self.recursion, self.substitution, self.fields,
            self.base, self.seeds, depth, tuple(rels), tuple(labels),
        )


PRESETS = ("grigorchuk_group", "grigorchuk_alg_char2", "grigorchuk_alg_charne2")
_KEY = re.compile(r"^\s*(\w+)\s*:\s*(.*?)\s*$")


def _preset_text(name: str) -> str:
    return resources.files("branchalg").joinpath("data", "presets", f"{name}.txt").read_text()


def load_preset(name: str) -> RelatorSet:
    """Read a preset (unexpanded) from the packaged relator files."""
    name = name.replace("-", "_")
    if name not in PRESETS:
        raise NotFound(f"unknown preset {name!r}; known: {list(PRESETS)}")
    meta: dict[str, str] = {}
    base: list[str] = []
    seeds: list[str] = []
    for raw in _preset_text(name).splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _KEY.match(line)
        if not m:
            raise InvalidArgument(f"bad preset line {raw!r}")
        key, value = m.groups()
        if key == "base":
            base.append(value)
        elif key == "seed":
            seeds.append(value)
        else:
            meta[key] = value
    rec = builtin_group(meta["recursion"])
    symbols = list(meta["symbols"].split())
    known = set(_atom_table(rec))
    if not set(symbols) <= known:
        raise InvalidArgument(f"preset symbols {symbols} are not atoms of {meta['recursion']}")
    return RelatorSet(
        name,
        meta["mode"],
        meta["recursion"],
        meta["substitution"],
        meta.get("fields", "any"),
        tuple(FreePoly.parse(t, symbols) for t in base),
        tuple(FreePoly.parse(t, symbols) for t in seeds),
        -1,
    )


def generate_relators(preset: str, depth: int) -> RelatorSet:
    return load_preset(preset).expand(depth)


# -- evaluation and checking ---------------------------------------------------------------


def evaluate_poly(poly: FreePoly, rec: WreathRecursion, f: FieldSpec, n: int) -> LevelMatrix:
    """Level-``n`` image of a free polynomial whose symbols are atoms of ``rec``.

    Each word is multiplied out as a matrix product, one symbol at a time, so
    long letter words never expand into sums of group words.
    """
    N = rec.q**n
    ops: dict[str, object] = {}
    acc = None
    for w, c in poly.terms.items():
        row = _identity_rows(rec, f, n)
        for s in w:
            if s not in ops:
                ops[s] = _right_elem_op(AlgebraElement.parse(rec, f, s), n)
            row = ops[s](row)
        coeff = f(c)
        if coeff == 0:
            continue
        scaled = _scale(f, row, coeff)
        acc = scaled if acc is None else _add(f, acc, scaled)
    data = _zero(f, n, rec.q) if acc is None else acc.reshape(N, N)
    return LevelMatrix(n, rec.q, f, data)


def _scale(f: FieldSpec, row: np.ndarray, c) -> np.ndarray:
    if f.characteristic == 2:
        return row.copy() if c else np.zeros_like(row)
    if f.characteristic == 0:
        from .algebra import _coef

        return row * _coef(f, c)
    return (row.astype(np.int64) * int(c)) % f.characteristic


def _add(f: FieldSpec, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if f.characteristic == 2:
        return a ^ b
    if f.characteristic == 0:
        return a + b
    return (a + b) % f.characteristic


def _zero(f: FieldSpec, n: int, q: int) -> np.ndarray:
    from .algebra import _zeros

    return _zeros(f, (q**n, q**n))


@dataclass(frozen=True)
class RelatorReport:
    preset: str
    mode: str
    field: str | None
    depth: int
    level_max: int
    checked: int
    violations: list[tuple[str, int]] = field(default_factory=list)
    note: str = "soundness only: relators hold at the checked levels; completeness is not tested"

    @property
    def passed(self) -> bool:
        return not self.violations

    def as_dict(self) -> dict:
        return {
            "quantity": "relator_check",
            "preset": self.preset,
            "mode": self.mode,
            "field": self.field,
            "depth": self.depth,
            "level_max": self.level_max,
            "checked": self.checked,
            "passed": self.passed,
            "violations": [{"relator": r, "first_level": lv} for r, lv in self.violations],
            "note": self.note,
        }


def check_relators(
    relators: RelatorSet | Sequence[FreePoly],
    level_max: int,
    *,
    field_: FieldSpec | None = None,
    rec: WreathRecursion | None = None,
    mode: str | None = None,
) -> RelatorReport:
    """Check every relator at levels ``0..level_max``.

    Group mode: each relator is a single word that must act trivially.
    Algebra mode: each relator must evaluate to the zero matrix.
    """
    if isinstance(relators, RelatorSet):
        rec = rec or builtin_group(relators.recursion)
        mode = mode or relators.mode
        rels, labels, name, depth = relators.relators, relators.labels, relators.preset, relators.depth
    else:
        rels = tuple(relators)
        labels = tuple(str(r) for r in rels)
        name, depth = "custom", -1
        rec = rec or builtin_group("grigorchuk")
        mode = mode or ("group" if field_ is None else "algebra")
    if mode not in ("group", "algebra"):
        raise InvalidArgument("mode must be 'group' or 'algebra'")
    if mode == "algebra" and field_ is None:
        raise InvalidArgument("algebra relators need a field")
    violations = []
    for rel, label in zip(rels, labels):
        for n in range(level_max + 1):
            if mode == "group":
                word = tuple(_symbol_int(rec, s) for s in rel.monomial())
                ok = level_permutation(rec, word, n).is_identity()
            else:
                ok = evaluate_poly(rel, rec, field_, n).is_zero()
            if not ok:
                violations.append((label, n))
                break
    return RelatorReport(name, mode, None if field_ is None else field_.name, depth, level_max, len(rels), violations)


# -- block identity for sigma -------------------------------------------------------------------

EXCEPTIONAL_WORDS = frozenset({"CAC", "CAD", "DAC", "DAD"})
_T = frozenset("BCD")


def classify_word(w: str) -> str:
    """``"A/A"``, ``"A/T"``, ``"T/A"`` or ``"T/T"`` by first and last letter."""
    if not w or any(ch not in "ABCD" for ch in w):
        raise InvalidArgument(f"{w!r} is not a nonempty word over A, B, C, D")
    first = "A" if w[0] == "A" else "T"
    last = "A" if w[-1] == "A" else "T"
    return f"{first}/{last}"


def sigma_block_check(w: str, n: int, f: FieldSpec | None = None) -> bool:
    """Compare ``sigma(w)`` at level ``n`` with the block form predicted for ``w``.

    ``w`` must lie in the branching ideal ``K = <ADA, AB, BA>``; this is
    checked at level ``n``. Predicted forms, with blocks at level ``n-1``:
    ``A/A`` gives ``(w w; w w)``, ``A/T`` gives ``(0 w; 0 w)``, ``T/A`` gives
    ``(0 0; w w)`` and ``T/T`` gives ``(0 0; 0 w)``, except for ``CAC``,
    ``CAD``, ``DAC``, ``DAD`` where the top-left block is ``ADA``.
    """
    f = FieldSpec(2) if f is None else f
    if n < 1:
        raise InvalidArgument("need n >= 1")
    rec = builtin_group("grigorchuk")
    kind = classify_word(w)
    word = FreePoly.word(tuple(w))
    K = ideal_closure(rec, f, branching_ideal_gens(rec, f), n)
    if not K.contains(evaluate_poly(word, rec, f, n).vector()[None, :])[0]:
        raise PreconditionViolation(f"{w} is not in the branching ideal at level {n}")
    lhs = evaluate_poly(sigma_apply(CHAR2_SIGMA, word, 1), rec, f, n)
    small = evaluate_poly(word, rec, f, n - 1)
    z = None
    if kind == "A/A":
        blocks = [[small, small], [small, small]]
    elif kind == "A/T":
        blocks = [[z, small], [z, small]]
    elif kind == "T/A":
        blocks = [[z, z], [small, small]]
    elif w in EXCEPTIONAL_WORDS:
        ada = evaluate_poly(FreePoly.word("ADA"), rec, f, n - 1)
        blocks = [[ada, z], [z, small]]
    else:
        blocks = [[z, z], [z, small]]
    return lhs == LevelMatrix.from_blocks(blocks, rec.q, n, f)
