"""Level truncations of the enveloping algebra of a self-similar group.

An :class:`AlgebraElement` is a finite linear combination of group words. At
level ``n`` it evaluates to ``sum c_w P_w`` where ``P_w`` is the permutation
matrix with entry ``(v, v^w) = 1``; with this convention evaluation is a ring
homomorphism for the right action. A level-``n`` matrix is also viewed as a
``q x q`` array of level-``(n-1)`` blocks, block ``(u, v)`` holding the rows
whose first letter is ``u`` and the columns whose first letter is ``v``.

Subspaces of the level-``n`` algebra are row spaces of flattened matrices
(row-major, length ``q^(2n)``), see :mod:`branchalg.linalg`.
"""

from __future__ import annotations

import hashlib
import itertools
from collections import OrderedDict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Iterator, Mapping, Sequence

import numpy as np

from .errors import InvalidArgument, PreconditionViolation, ResourceLimitError
from .exact import FieldSpec
from .expr import parse_expression, split_name
from .linalg import SpanBasis, as_dense, new_span, span_closure
from .permgrp import _gen_perms, _word_perm
from .selfsim import WreathRecursion, builtin_group, inverse_word, normalize

__all__ = [
    "AlgebraElement",
    "LevelMatrix",
    "Subspace",
    "FiltrationReport",
    "IdealReport",
    "NilReport",
    "PowersReport",
    "GradedNilReport",
    "MonomialNilReport",
    "DEFAULT_LEVEL_CAP",
    "evaluate",
    "algebra_span",
    "algebra_dimension",
    "algebra_hausdorff_sequence",
    "closure_dims",
    "filtration_dims",
    "ideal_closure",
    "ideal_quotient_dims",
    "subspace_span",
    "subspace_relation",
    "nil_degree",
    "product_identity_check",
    "first_mismatch_level",
    "distinct_powers",
    "graded_nil_sample",
    "monomial_nil_survey",
    "branch_block_identity",
    "branching_ideal_gens",
    "letters",
]

DEFAULT_LEVEL_CAP = {2: 7}
_DEFAULT_ODD_CAP = 5
# filtration spans stay small, so longer rows are affordable
FILTRATION_LEVEL_CAP = {2: 9, 0: 7}
_MEMORY_CAP = 2 << 30


def level_cap(field_: FieldSpec) -> int:
    return DEFAULT_LEVEL_CAP.get(field_.characteristic, _DEFAULT_ODD_CAP)


# -- dense arithmetic per field ----------------------------------------------------


def _flint():
    import flint

    return flint


def _zeros(f: FieldSpec, shape) -> np.ndarray:
    if f.characteristic == 0:
        out = np.empty(shape, dtype=object)
        out.fill(_flint().fmpq(0))
        return out
    return np.zeros(shape, dtype=np.uint8 if f.characteristic == 2 else np.int64)


def _coef(f: FieldSpec, c):
    if f.characteristic == 0:
        c = Fraction(c)
        return _flint().fmpq(c.numerator, c.denominator)
    return int(f(c))


def _axpy(f: FieldSpec, acc: np.ndarray, c, x: np.ndarray) -> np.ndarray:
    """``acc + c*x`` in the field, returned (may reuse ``acc``)."""
    p = f.characteristic
    if p == 2:
        if c:
            acc ^= x
        return acc
    if p == 0:
        return acc + x * c
    acc += x.astype(np.int64) * c
    acc %= p
    return acc


def _matmul(f: FieldSpec, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    p = f.characteristic
    if p == 0:
        fl = _flint()
        n, m = a.shape[0], b.shape[1]
        prod = fl.fmpq_mat(a.shape[0], a.shape[1], list(a.ravel())) * fl.fmpq_mat(
            b.shape[0], b.shape[1], list(b.ravel())
        )
        return np.array(prod.entries(), dtype=object).reshape(n, m)
    block = max(1, (1 << 52) // ((p - 1) ** 2 + 1))
    af, bf = a.astype(np.float64), b.astype(np.float64)
    out = np.zeros((a.shape[0], b.shape[1]), dtype=np.float64)
    for s in range(0, a.shape[1], block):
        out = np.fmod(out + np.fmod(af[:, s : s + block] @ bf[s : s + block], p), p)
    return out.astype(np.uint8 if p == 2 else np.int64)


def _is_zero(a: np.ndarray) -> bool:
    if a.dtype == object:
        return all(x == 0 for x in a.ravel())
    return not a.any()


# -- elements ------------------------------------------------------------------------


class AlgebraElement:
    """A finite linear combination of group words with coefficients in ``field``.

    Words are normalized with the recursion's rules (free reduction plus any
    declared rewrite rules, which hold in the group), and zero coefficients
    are dropped. Equality is formal equality of these normal forms; use
    :func:`evaluate` to compare images in the algebra.
    """

    __slots__ = ("rec", "field", "_terms")

    def __init__(self, rec: WreathRecursion, field_: FieldSpec, terms: Mapping[tuple, object] | None = None):
        self.rec = rec
        self.field = field_
        acc: dict[tuple, object] = {}
        for w, c in (terms or {}).items():
            w = normalize(rec, w)
            acc[w] = field_(acc.get(w, 0) + field_(c))
        self._terms = {w: c for w, c in acc.items() if c != 0}

    # constructors
    @classmethod
    def one(cls, rec: WreathRecursion, field_: FieldSpec) -> "AlgebraElement":
        return cls(rec, field_, {(): 1})

    @classmethod
    def zero(cls, rec: WreathRecursion, field_: FieldSpec) -> "AlgebraElement":
        return cls(rec, field_, {})

    @classmethod
    def word(cls, rec: WreathRecursion, field_: FieldSpec, w: Sequence[int], coeff=1) -> "AlgebraElement":
        return cls(rec, field_, {tuple(w): coeff})

    @classmethod
    def parse(cls, rec: WreathRecursion, field_: FieldSpec, text: str) -> "AlgebraElement":
        """Parse an element expression.

        Names are generators (``'`` for inverse), or the upper-case form of a
        one-letter generator name, which stands for ``g - 1``. Concatenations
        like ``ADA`` or ``bcd`` are split into such names.
        """
        atoms = _atom_table(rec)

        def atom(name: str) -> AlgebraElement:
            out = cls.one(rec, field_)
            for part in split_name(name, list(atoms)):
                base = part.rstrip("'")
                inv = (len(part) - len(base)) % 2 == 1
                kind, i = atoms[base]
                w = (i + 1,)
                if inv:
                    w = inverse_word(rec, w)
                g = cls.word(rec, field_, w)
                out = out * (g - cls.one(rec, field_) if kind == "letter" else g)
            return out

        return parse_expression(text, atom, lambda k: cls(rec, field_, {(): k}))

    # access
    @property
    def terms(self) -> dict[tuple, object]:
        return dict(self._terms)

    def sorted_terms(self) -> list[tuple[tuple, object]]:
        return sorted(self._terms.items(), key=lambda t: (len(t[0]), t[0]))

    def is_zero(self) -> bool:
        return not self._terms

    def _same(self, other: "AlgebraElement") -> None:
        if other.rec != self.rec or other.field != self.field:
            raise InvalidArgument("elements belong to different algebras")

    def _lift(self, other) -> "AlgebraElement":
        if isinstance(other, AlgebraElement):
            self._same(other)
            return other
        return AlgebraElement(self.rec, self.field, {(): other})

    # ring operations
    def __add__(self, other) -> "AlgebraElement":
        other = self._lift(other)
        t = dict(self._terms)
        for w, c in other._terms.items():
            t[w] = self.field(t.get(w, 0) + c)
        return AlgebraElement(self.rec, self.field, t)

    __radd__ = __add__

    def __neg__(self) -> "AlgebraElement":
        return AlgebraElement(self.rec, self.field, {w: -c for w, c in self._terms.items()})

    def __sub__(self, other) -> "AlgebraElement":
        return self + (-self._lift(other))

    def __rsub__(self, other) -> "AlgebraElement":
        return self._lift(other) - self

    def __mul__(self, other) -> "AlgebraElement":
        other = self._lift(other)
        acc: dict[tuple, object] = {}
        f = self.field
        for w1, c1 in self._terms.items():
            for w2, c2 in other._terms.items():
                w = normalize(self.rec, w1 + w2)
                acc[w] = f(acc.get(w, 0) + c1 * c2)
        return AlgebraElement(self.rec, f, acc)

    def __rmul__(self, other) -> "AlgebraElement":
        return self._lift(other) * self

    def __pow__(self, k: int) -> "AlgebraElement":
        if k < 0:
            raise InvalidArgument("negative powers are not supported")
        out, base = AlgebraElement.one(self.rec, self.field), self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def __eq__(self, other) -> bool:
        if not isinstance(other, AlgebraElement):
            return NotImplemented
        return self.rec == other.rec and self.field == other.field and self._terms == other._terms

    def __hash__(self) -> int:
        return hash((self.field, frozenset(self._terms.items())))

    def __str__(self) -> str:
        if not self._terms:
            return "0"
        parts = []
        for w, c in self.sorted_terms():
            word = self.rec.format_word(w)
            if word == "1":
                parts.append(str(c))
            elif c == 1:
                parts.append(word)
            else:
                parts.append(f"{c}*{word}")
        return " + ".join(parts)

    def __repr__(self) -> str:
        return f"AlgebraElement({self}, {self.field})"


def _atom_table(rec: WreathRecursion) -> dict[str, tuple[str, int]]:
    table = {name: ("gen", i) for i, name in enumerate(rec.names)}
    for i, name in enumerate(rec.names):
        up = name.upper()
        if len(name) == 1 and up != name and up not in table:
            table[up] = ("letter", i)
    return table


def letters(rec: WreathRecursion, field_: FieldSpec, names: Iterable[str] | None = None) -> list[AlgebraElement]:
    """``g - 1`` for the given generator names (all generators by default)."""
    names = list(rec.names if names is None else names)
    one = AlgebraElement.one(rec, field_)
    return [AlgebraElement.word(rec, field_, rec.generator(n)) - one for n in names]


# -- level matrices ----------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class LevelMatrix:
    """A dense ``q^n x q^n`` matrix over ``field`` (GF(2) entries as 0/1 bytes)."""

    level: int
    q: int
    field: FieldSpec
    data: np.ndarray

    @property
    def size(self) -> int:
        return self.q**self.level

    def __add__(self, other: "LevelMatrix") -> "LevelMatrix":
        self._same(other)
        return LevelMatrix(self.level, self.q, self.field, _axpy(self.field, self.data.copy(), 1, other.data))

    def __sub__(self, other: "LevelMatrix") -> "LevelMatrix":
        self._same(other)
        return LevelMatrix(
            self.level, self.q, self.field, _axpy(self.field, self.data.copy(), _coef(self.field, -1), other.data)
        )

    def __mul__(self, other: "LevelMatrix") -> "LevelMatrix":
        self._same(other)
        return LevelMatrix(self.level, self.q, self.field, _matmul(self.field, self.data, other.data))

    def _same(self, other: "LevelMatrix") -> None:
        if (self.level, self.q, self.field) != (other.level, other.q, other.field):
            raise InvalidArgument("matrices live on different levels or fields")

    def __eq__(self, other) -> bool:
        if not isinstance(other, LevelMatrix):
            return NotImplemented
        if (self.level, self.q, self.field) != (other.level, other.q, other.field):
            return False
        if self.data.dtype == object or other.data.dtype == object:
            return all(x == y for x, y in zip(self.data.ravel(), other.data.ravel()))
        return bool(np.array_equal(self.data, other.data))

    __hash__ = None  # type: ignore[assignment]

    def is_zero(self) -> bool:
        return _is_zero(self.data)

    def vector(self) -> np.ndarray:
        return self.data.reshape(-1)

    def packed(self) -> np.ndarray:
        """GF(2) only: rows packed into 64-bit words."""
        from .exact import pack_bits

        if self.field.characteristic != 2:
            raise InvalidArgument("packing is only defined over GF(2)")
        return pack_bits(self.data)

    def block(self, u: int, v: int) -> "LevelMatrix":
        """Block ``(u, v)`` for letters ``u, v`` in ``1..q``."""
        if self.level < 1:
            raise InvalidArgument("level-0 matrices have no blocks")
        m = self.size // self.q
        sub = self.data[(u - 1) * m : u * m, (v - 1) * m : v * m]
        return LevelMatrix(self.level - 1, self.q, self.field, sub.copy())

    @classmethod
    def from_blocks(cls, blocks: Sequence[Sequence["LevelMatrix | None"]], q: int, level: int, field_: FieldSpec):
        """Assemble a level-``level`` matrix from ``q x q`` blocks (``None`` = zero)."""
        m = q ** (level - 1)
        data = _zeros(field_, (q * m, q * m))
        for u in range(q):
            for v in range(q):
                b = blocks[u][v]
                if b is not None:
                    data[u * m : (u + 1) * m, v * m : (v + 1) * m] = b.data
        return cls(level, q, field_, data)

    def truncate(self) -> "LevelMatrix":
        """Image under the map to level ``n-1`` that forgets the last letter.

        ``T(M)[v, w] = sum_y M[v1, wy]``; on permutation matrices this is the
        permutation induced one level up, and it is linear.
        """
        if self.level < 1:
            raise InvalidArgument("cannot truncate level 0")
        q, m = self.q, self.size // self.q
        rows = self.data[::q, :]  # vertices ending in letter 1
        acc = _zeros(self.field, (m, m))
        for y in range(q):
            acc = _axpy(self.field, acc, 1, rows[:, y::q])
        return LevelMatrix(self.level - 1, q, self.field, acc)


def _term_perms(x: AlgebraElement, n: int) -> list[tuple[object, np.ndarray]]:
    fwd, bwd = _gen_perms(x.rec, n)
    deg = x.rec.q**n
    return [(_coef(x.field, c), _word_perm(fwd, bwd, w, deg)) for w, c in x.sorted_terms()]


def evaluate(x: AlgebraElement, n: int) -> LevelMatrix:
    """The level-``n`` image ``sum c_w P_w``."""
    if n < 0:
        raise InvalidArgument("level must be nonnegative")
    deg = x.rec.q**n
    data = _zeros(x.field, (deg, deg))
    rows = np.arange(deg)
    for c, perm in _term_perms(x, n):
        if x.field.characteristic == 2:
            data[rows, perm] ^= np.uint8(1)
        elif x.field.characteristic == 0:
            data[rows, perm] = data[rows, perm] + c
        else:
            data[rows, perm] = (data[rows, perm] + c) % x.field.characteristic
    return LevelMatrix(n, x.rec.q, x.field, data)


def _inverse(p: np.ndarray) -> np.ndarray:
    inv = np.empty_like(p)
    inv[p] = np.arange(len(p), dtype=p.dtype)
    return inv


# operators on batches of flattened matrices -----------------------------------------


def _right_perm_op(N: int, g: np.ndarray) -> Callable[[np.ndarray], np.ndarray]:
    ginv = _inverse(g)

    def op(rows: np.ndarray) -> np.ndarray:
        k = rows.shape[0]
        return rows.reshape(k, N, N)[:, :, ginv].reshape(k, N * N)

    return op


def _left_perm_op(N: int, g: np.ndarray) -> Callable[[np.ndarray], np.ndarray]:
    def op(rows: np.ndarray) -> np.ndarray:
        k = rows.shape[0]
        return rows.reshape(k, N, N)[:, g, :].reshape(k, N * N)

    return op


def _right_elem_op(x: AlgebraElement, n: int) -> Callable[[np.ndarray], np.ndarray]:
    """Right multiplication by ``x`` acting on flattened level-``n`` matrices."""
    N = x.rec.q**n
    terms = [(c, _inverse(p)) for c, p in _term_perms(x, n)]
    f = x.field

    def op(rows: np.ndarray) -> np.ndarray:
        k = rows.shape[0]
        m = rows.reshape(k, N, N)
        acc = _zeros(f, m.shape)
        for c, pinv in terms:
            acc = _axpy(f, acc, c, m[:, :, pinv])
        return acc.reshape(k, N * N)

    return op


def _left_elem_op(x: AlgebraElement, n: int) -> Callable[[np.ndarray], np.ndarray]:
    N = x.rec.q**n
    terms = _term_perms(x, n)
    f = x.field

    def op(rows: np.ndarray) -> np.ndarray:
        k = rows.shape[0]
        m = rows.reshape(k, N, N)
        acc = _zeros(f, m.shape)
        for c, p in terms:
            acc = _axpy(f, acc, c, m[:, p, :])
        return acc.reshape(k, N * N)

    return op


def _gen_ops(rec: WreathRecursion, n: int, side: str) -> list[Callable]:
    N = rec.q**n
    perms = _gen_perms(rec, n)[0]
    make = _right_perm_op if side == "right" else _left_perm_op
    return [make(N, g) for g in perms]


# -- spans with a small cache ---------------------------------------------------------------

_CACHE: "OrderedDict[tuple, SpanBasis]" = OrderedDict()
_CACHE_SIZE = 6


def _cached(key: tuple, build: Callable[[], SpanBasis]) -> SpanBasis:
    if key in _CACHE:
        _CACHE.move_to_end(key)
        return _CACHE[key]
    span = build()
    _CACHE[key] = span
    while len(_CACHE) > _CACHE_SIZE:
        _, old = _CACHE.popitem(last=False)
        if hasattr(old, "drop_tables"):
            old.drop_tables()
    return span


def clear_cache() -> None:
    """Forget cached spans and dimensions."""
    _CACHE.clear()
    _DIMS.clear()


def _check_level(f: FieldSpec, n: int, cap: int | None) -> None:
    if n < 0:
        raise InvalidArgument("level must be nonnegative")
    cap = level_cap(f) if cap is None else cap
    if n > cap:
        raise ResourceLimitError(f"level {n} exceeds the cap {cap} for {f}")


def _guard_memory(rec: WreathRecursion, f: FieldSpec, n: int) -> None:
    L = rec.q ** (2 * n)
    per_entry = 1 / 8 if f.characteristic == 2 else (8 if f.characteristic else 64)
    worst = rec.q ** (2 * n) * L * per_entry  # a full matrix algebra
    est = min(worst, 6 * (4**n) * L * per_entry)
    if est > _MEMORY_CAP:
        raise ResourceLimitError(
            f"level {n} over {f} needs an estimated {int(est) >> 20} MiB, above the {_MEMORY_CAP >> 20} MiB cap"
        )


def _guard_row(rec: WreathRecursion, f: FieldSpec, n: int) -> None:
    # filtrations keep few rows; only a single row has to fit comfortably
    per_entry = 1 / 8 if f.characteristic == 2 else (8 if f.characteristic else 64)
    if rec.q ** (2 * n) * per_entry > _MEMORY_CAP >> 6:
        raise ResourceLimitError(f"rows at level {n} over {f} are too long")


def _identity_rows(rec: WreathRecursion, f: FieldSpec, n: int) -> np.ndarray:
    N = rec.q**n
    eye = _zeros(f, (N, N))
    one = _coef(f, 1)
    for i in range(N):
        eye[i, i] = one
    return eye.reshape(1, N * N)


def _elem_key(xs: Sequence[AlgebraElement]) -> tuple:
    return tuple(tuple(x.sorted_terms()) for x in xs)


def algebra_span(rec: WreathRecursion, f: FieldSpec, n: int, *, level_cap: int | None = None) -> SpanBasis:
    """Row space of the level-``n`` algebra: the identity closed under the generators."""
    _check_level(f, n, level_cap)
    _guard_memory(rec, f, n)

    def build() -> SpanBasis:
        span = new_span(f, rec.q ** (2 * n))
        return span_closure(span, _identity_rows(rec, f, n), _gen_ops(rec, n, "right"))

    return _cached(("alg", rec, f, n), build)


_DIMS: dict[tuple, int] = {}


def algebra_dimension(rec: WreathRecursion, f: FieldSpec, n: int, *, level_cap: int | None = None) -> int:
    key = (rec, f, n)
    if key not in _DIMS:
        _DIMS[key] = algebra_span(rec, f, n, level_cap=level_cap).dim
    else:
        _check_level(f, n, level_cap)
    return _DIMS[key]


def closure_dims(q: int, root_dim: int, n_max: int) -> list[int]:
    """Dimensions of the level-``n`` closure of a root algebra of dimension ``root_dim``.

    The level-``(n+1)`` closure consists of ``q x q`` block matrices over the
    level-``n`` closure whose entrywise augmentations form a root-algebra
    element, so ``d(n+1) = q^2 (d(n) - 1) + root_dim`` with ``d(0) = 1``.
    """
    out = [1]
    for _ in range(n_max):
        out.append(q * q * (out[-1] - 1) + root_dim)
    return out


def algebra_hausdorff_sequence(
    rec: WreathRecursion, f: FieldSpec, n_max: int, *, level_cap: int | None = None
) -> list[Fraction]:
    """Relative values ``dim A_n / dim P_n`` for ``n = 1..n_max``.

    ``P_n`` is the level-``n`` closure of the level-1 algebra ``P = A_1``.
    """
    dim_p = algebra_dimension(rec, f, 1, level_cap=level_cap)
    if dim_p == 1:
        raise InvalidArgument("the level-1 algebra is one-dimensional")
    dims = closure_dims(rec.q, dim_p, n_max)
    return [Fraction(algebra_dimension(rec, f, n, level_cap=level_cap), dims[n]) for n in range(1, n_max + 1)]


# -- filtrations -----------------------------------------------------------------------------


@dataclass(frozen=True)
class FiltrationReport:
    values: list[int]
    stable: bool
    level: int
    """Certifying level: the values agree at ``level - 1`` and ``level``."""
    per_level: dict[int, list[int]] = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "quantity": "filtration",
            "values": self.values,
            "stable": self.stable,
            "stabilization_level": self.level,
            "per_level": {str(k): v for k, v in self.per_level.items()},
        }


def _filtration_at_level(
    rec: WreathRecursion, f: FieldSpec, gens: Sequence[AlgebraElement], d_max: int, n: int
) -> list[int]:
    span = new_span(f, rec.q ** (2 * n))
    frontier = span.add(_identity_rows(rec, f, n))
    ops = [_right_elem_op(g, n) for g in gens]
    out = [span.dim]
    for _ in range(d_max):
        before = span.dim
        new_rows = []
        for op in ops:
            for s in range(0, frontier.shape[0], span.batch_size):
                got = span.add(op(frontier[s : s + span.batch_size]))
                if got.shape[0]:
                    new_rows.append(got)
        out.append(span.dim - before)
        if not new_rows:
            out.extend([0] * (d_max + 1 - len(out)))
            break
        frontier = np.concatenate(new_rows)
    return out


def filtration_dims(
    rec: WreathRecursion,
    f: FieldSpec,
    gens: Sequence[AlgebraElement],
    d_max: int,
    *,
    start_level: int = 1,
    level_cap: int | None = None,
) -> FiltrationReport:
    """``a_d = dim V_d - dim V_(d-1)``, ``V_d`` = span of products of at most ``d`` gens.

    Levels ``start_level, start_level+1, ...`` are tried until two consecutive
    ones give the same ``a_0..a_dmax``. Hitting the cap raises
    :class:`ResourceLimitError` whose ``partial`` is an unstable report.
    """
    if not gens:
        raise InvalidArgument("need at least one generator")
    if d_max < 0:
        raise InvalidArgument("d_max must be nonnegative")
    cap = FILTRATION_LEVEL_CAP.get(f.characteristic, 8) if level_cap is None else level_cap
    per: dict[int, list[int]] = {}
    prev = None
    for n in range(start_level, cap + 1):
        _guard_row(rec, f, n)
        vals = _filtration_at_level(rec, f, gens, d_max, n)
        per[n] = vals
        if prev is not None and vals == prev:
            return FiltrationReport(vals, True, n, per)
        prev = vals
    partial = FiltrationReport(prev or [], False, cap, per)
    raise ResourceLimitError(f"filtration did not stabilize by level {cap}", partial=partial)


# -- ideals --------------------------------------------------------------------------------------


def branching_ideal_gens(rec: WreathRecursion, f: FieldSpec) -> list[AlgebraElement]:
    """Generators of the standard branching ideal for the Grigorchuk group.

    Characteristic 2: ``ADA, AB, BA``; otherwise ``ab - ba``.
    """
    if f.characteristic == 2:
        texts = ["ADA", "AB", "BA"]
    else:
        texts = ["a*b - b*a"]
    return [AlgebraElement.parse(rec, f, t) for t in texts]


def _rows_of(xs: Sequence[AlgebraElement], n: int) -> np.ndarray:
    return np.concatenate([evaluate(x, n).vector()[None, :] for x in xs])


def ideal_closure(
    rec: WreathRecursion, f: FieldSpec, gens: Sequence[AlgebraElement], n: int, *, level_cap: int | None = None
) -> SpanBasis:
    """Two-sided ideal generated by ``gens`` in the level-``n`` algebra."""
    _check_level(f, n, level_cap)
    _guard_memory(rec, f, n)
    gens = list(gens)

    def build() -> SpanBasis:
        span = new_span(f, rec.q ** (2 * n))
        if not gens:
            return span
        ops = _gen_ops(rec, n, "right") + _gen_ops(rec, n, "left")
        return span_closure(span, _rows_of(gens, n), ops)

    return _cached(("ideal", rec, f, n, _elem_key(gens)), build)


def _batches(rows: np.ndarray, size: int) -> Iterator[np.ndarray]:
    for s in range(0, rows.shape[0], size):
        yield rows[s : s + size]


def _ideal_power(
    rec: WreathRecursion, f: FieldSpec, gens: Sequence[AlgebraElement], n: int, d: int, level_cap: int | None
) -> SpanBasis:
    """``K^d`` for the ideal ``K`` generated by ``gens``.

    Since ``K A = K``, ``K^d = K^(d-1) K`` is the right ideal generated by the
    products ``k g`` with ``k`` a basis vector of ``K^(d-1)`` and ``g`` in
    ``gens``; this avoids forming all pairwise products of basis vectors.
    """
    if d < 1:
        raise InvalidArgument("ideal powers start at 1")
    if d == 1:
        return ideal_closure(rec, f, gens, n, level_cap=level_cap)

    def build() -> SpanBasis:
        prev = _ideal_power(rec, f, gens, n, d - 1, level_cap)
        span = new_span(f, rec.q ** (2 * n))
        ops = _gen_ops(rec, n, "right")
        basis = prev.dense_rows()
        mults = [_right_elem_op(g, n) for g in gens]
        for chunk in _batches(basis, span.batch_size):
            for m in mults:
                span_closure(span, m(chunk), ops)
        return span

    return _cached(("kpow", rec, f, n, d, _elem_key(gens)), build)


def _mx_span(
    rec: WreathRecursion, f: FieldSpec, gens: Sequence[AlgebraElement], n: int, k: int, level_cap: int | None
) -> SpanBasis:
    """``M_{X^k}(K)``: block matrices with one level-``(n-k)`` K-entry."""
    if k < 1 or k > n:
        raise InvalidArgument("need 1 <= k <= level")

    def build() -> SpanBasis:
        inner = ideal_closure(rec, f, gens, n - k, level_cap=level_cap).dense_rows()
        q, N, m = rec.q, rec.q**n, rec.q ** (n - k)
        blocks = q**k
        span = new_span(f, N * N)
        for chunk in _batches(inner, max(1, span.batch_size // (blocks * blocks))):
            kk = chunk.shape[0]
            mats = chunk.reshape(kk, m, m)
            out = _zeros(f, (kk * blocks * blocks, N, N))
            idx = 0
            for u in range(blocks):
                for v in range(blocks):
                    out[idx * kk : (idx + 1) * kk, u * m : (u + 1) * m, v * m : (v + 1) * m] = mats
                    idx += 1
            span.add(out.reshape(-1, N * N))
        return span

    return _cached(("mx", rec, f, n, k, _elem_key(gens)), build)


@dataclass(frozen=True)
class IdealReport:
    codim: int
    k_mod_k2: int
    k_mod_mk: int
    mk_inside_k: bool
    level: int
    stable: bool
    per_level: dict[int, tuple[int, int, int]] = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "quantity": "ideal",
            "codim": self.codim,
            "k_mod_k2": self.k_mod_k2,
            "k_mod_mk": self.k_mod_mk,
            "mk_inside_k": self.mk_inside_k,
            "stable": self.stable,
            "stabilization_level": self.level,
            "per_level": {str(k): list(v) for k, v in self.per_level.items()},
        }


def _ideal_numbers(rec, f, gens, n, level_cap) -> tuple[tuple[int, int, int], bool]:
    dim_a = algebra_dimension(rec, f, n, level_cap=level_cap)
    K = ideal_closure(rec, f, gens, n, level_cap=level_cap)
    K2 = _ideal_power(rec, f, gens, n, 2, level_cap)
    MK = _mx_span(rec, f, gens, n, 1, level_cap)
    inside = K.contains_space(MK)
    return (dim_a - K.dim, K.dim - K2.dim, K.dim - MK.dim), inside


def ideal_quotient_dims(
    rec: WreathRecursion,
    f: FieldSpec,
    gens: Sequence[AlgebraElement],
    n: int | None = None,
    *,
    start_level: int = 2,
    level_cap: int | None = None,
) -> IdealReport:
    """``codim K``, ``dim K/K^2`` and ``dim K/M_X(K)``.

    With ``n`` given, the numbers at that single level (``stable`` then means
    nothing was compared). Otherwise levels from ``start_level`` up are tried
    until two consecutive levels agree.
    """
    gens = list(gens)
    if n is not None:
        nums, inside = _ideal_numbers(rec, f, gens, n, level_cap)
        return IdealReport(*nums, inside, n, False, {n: nums})
    cap = level_cap if level_cap is not None else globals()["level_cap"](f)
    per: dict[int, tuple[int, int, int]] = {}
    prev = None
    for m in range(max(1, start_level), cap + 1):
        nums, inside = _ideal_numbers(rec, f, gens, m, level_cap)
        per[m] = nums
        if prev is not None and nums == prev:
            return IdealReport(*nums, inside, m, True, per)
        prev = nums
    partial = IdealReport(*(prev or (0, 0, 0)), False, cap, False, per)
    raise ResourceLimitError(f"ideal quotients did not stabilize by level {cap}", partial=partial)


# -- subspaces of the level-n algebra ---------------------------------------------------------


@dataclass(frozen=True)
class Subspace:
    """``varpi^d``, ``K^d`` or ``M_{X^k}(K)``."""

    kind: str
    power: int = 1

    def __post_init__(self) -> None:
        if self.kind not in ("varpi", "K", "MK"):
            raise InvalidArgument(f"unknown subspace kind {self.kind!r}")
        if self.power < (0 if self.kind == "varpi" else 1):
            raise InvalidArgument("bad subspace exponent")

    @classmethod
    def parse(cls, text: str) -> "Subspace":
        t = text.replace(" ", "").replace("_", "")
        for prefix in ("varpi", "ϖ", "w"):
            if t.startswith(prefix):
                rest = t[len(prefix) :]
                return cls("varpi", int(rest[1:]) if rest.startswith("^") else 1 if not rest else _bad(text))
        if t.startswith("MX") and t.endswith("(K)"):
            mid = t[2:-3]
            return cls("MK", int(mid[1:]) if mid.startswith("^") else 1 if not mid else _bad(text))
        if t.startswith("K"):
            rest = t[1:]
            return cls("K", int(rest[1:]) if rest.startswith("^") else 1 if not rest else _bad(text))
        return _bad(text)

    def __str__(self) -> str:
        if self.kind == "varpi":
            return f"varpi^{self.power}"
        if self.kind == "K":
            return f"K^{self.power}"
        return f"MX^{self.power}(K)"


def _bad(text: str):
    raise InvalidArgument(f"cannot parse subspace {text!r}")


def _varpi_power(rec: WreathRecursion, f: FieldSpec, n: int, d: int, level_cap: int | None) -> SpanBasis:
    if f.characteristic != 2 and all(rec.involutive):
        raise InvalidArgument(
            "augmentation powers are not a filtration here: with all generators involutive and "
            "2 invertible, the augmentation ideal is generated by idempotents, so it equals its square; "
            "use the generator-ball filtration instead"
        )
    if d == 0:
        return algebra_span(rec, f, n, level_cap=level_cap)
    _check_level(f, n, level_cap)

    def build() -> SpanBasis:
        L = rec.q ** (2 * n)
        ops = [_right_elem_op(x, n) for x in letters(rec, f)]
        layer = _identity_rows(rec, f, n)
        for _ in range(d):
            nxt = new_span(f, L)
            for op in ops:
                for chunk in _batches(layer, nxt.batch_size):
                    nxt.add(op(chunk))
            layer = nxt.dense_rows()
        span = new_span(f, L)
        return span_closure(span, layer, _gen_ops(rec, n, "right"))

    return _cached(("varpi", rec, f, n, d), build)


def subspace_span(
    rec: WreathRecursion,
    f: FieldSpec,
    spec: Subspace | str,
    n: int,
    ideal_gens: Sequence[AlgebraElement] | None = None,
    *,
    level_cap: int | None = None,
) -> SpanBasis:
    spec = Subspace.parse(spec) if isinstance(spec, str) else spec
    gens = list(branching_ideal_gens(rec, f) if ideal_gens is None else ideal_gens)
    if spec.kind == "varpi":
        return _varpi_power(rec, f, n, spec.power, level_cap)
    if spec.kind == "K":
        return _ideal_power(rec, f, gens, n, spec.power, level_cap)
    return _mx_span(rec, f, gens, n, spec.power, level_cap)


def subspace_relation(
    rec: WreathRecursion,
    f: FieldSpec,
    lhs: Subspace | str,
    rhs: Subspace | str,
    n: int,
    ideal_gens: Sequence[AlgebraElement] | None = None,
    *,
    level_cap: int | None = None,
) -> str:
    """``"equal"``, ``"subset"`` (lhs inside rhs), ``"superset"`` or ``"neither"``."""
    a = subspace_span(rec, f, lhs, n, ideal_gens, level_cap=level_cap)
    b = subspace_span(rec, f, rhs, n, ideal_gens, level_cap=level_cap)
    a_in_b = b.contains_space(a)
    b_in_a = a.contains_space(b)
    if a_in_b and b_in_a:
        return "equal"
    if a_in_b:
        return "subset"
    if b_in_a:
        return "superset"
    return "neither"


# -- powers, nillity, identities --------------------------------------------------------------------


@dataclass(frozen=True)
class NilReport:
    degree: int | None
    level: int
    """First level at which the top-level degree is attained."""
    per_level: dict[int, int | None]

    def as_dict(self) -> dict:
        return {
            "quantity": "nil_degree",
            "value": self.degree,
            "stabilization_level": self.level,
            "per_level": {str(k): v for k, v in self.per_level.items()},
        }


def _nil_at_level(x: AlgebraElement, max_pow: int, n: int) -> int | None:
    N = x.rec.q**n
    op = _right_elem_op(x, n)
    m = evaluate(x, n).vector()[None, :]
    for k in range(1, max_pow + 1):
        if _is_zero(m):
            return k
        if k == max_pow:
            break
        m = op(m)
    return None


def nil_degree(x: AlgebraElement, max_pow: int, n_levels: int) -> NilReport:
    """Smallest ``k <= max_pow`` with ``x^k = 0`` at every level ``<= n_levels``.

    Truncation to a lower level is an algebra map, so the degree at the top
    level bounds all lower ones; the report lists each level anyway.
    """
    if max_pow < 1:
        raise InvalidArgument("max_pow must be at least 1")
    per = {n: _nil_at_level(x, max_pow, n) for n in range(0, n_levels + 1)}
    top = per[n_levels]
    first = min((n for n, v in per.items() if v == top), default=n_levels)
    return NilReport(top, first, per)


def product_identity_check(lhs: AlgebraElement, rhs: AlgebraElement, n_max: int) -> bool:
    return first_mismatch_level(lhs, rhs, n_max) is None


def first_mismatch_level(lhs: AlgebraElement, rhs: AlgebraElement, n_max: int) -> int | None:
    """Smallest level ``<= n_max`` where the two images differ."""
    diff = lhs - rhs
    for n in range(0, n_max + 1):
        if not evaluate(diff, n).is_zero():
            return n
    return None


@dataclass(frozen=True)
class PowersReport:
    level: int | None
    k_max: int
    last_power_nonzero: bool | None
    tried: list[int]

    def as_dict(self) -> dict:
        return {
            "quantity": "distinct_powers",
            "k_max": self.k_max,
            "level": self.level,
            "found": self.level is not None,
            "last_power_nonzero": self.last_power_nonzero,
            "levels_tried": self.tried,
        }


def distinct_powers(x: AlgebraElement, k_max: int, n_cap: int, *, start_level: int = 0) -> PowersReport:
    """Smallest level where ``x^0, ..., x^k_max`` are pairwise distinct.

    Powers are compared through SHA-256 digests of their entries, so a
    reported level is exact (distinct digests imply distinct matrices).
    """
    if k_max < 2:
        raise InvalidArgument("k_max must be at least 2")
    tried = []
    for n in range(start_level, n_cap + 1):
        tried.append(n)
        op = _right_elem_op(x, n)
        m = _identity_rows(x.rec, x.field, n)
        digests = set()
        ok = True
        for i in range(k_max + 1):
            if i:
                m = op(m)
            h = hashlib.sha256(_digest_bytes(m)).digest()
            if h in digests:
                ok = False
                break
            digests.add(h)
        if ok:
            return PowersReport(n, k_max, not _is_zero(m), tried)
    return PowersReport(None, k_max, None, tried)


def _digest_bytes(m: np.ndarray) -> bytes:
    if m.dtype == object:
        return repr([str(v) for v in m.ravel()]).encode()
    return np.ascontiguousarray(m).tobytes()


@dataclass(frozen=True)
class GradedNilReport:
    degree: int
    samples: int
    exhaustive: bool
    bound: int
    all_zero: bool
    max_observed: int | None
    failures: list[str]
    level: int
    seed: int

    def as_dict(self) -> dict:
        return {
            "quantity": "graded_nil_sample",
            "degree": self.degree,
            "samples": self.samples,
            "exhaustive": self.exhaustive,
            "bound": self.bound,
            "all_zero": self.all_zero,
            "max_observed_nil_degree": self.max_observed,
            "failures": self.failures,
            "level": self.level,
            "seed": self.seed,
        }


def graded_nil_sample(
    d: int,
    trials: int,
    seed: int = 0,
    *,
    rec: WreathRecursion | None = None,
    level: int = 8,
    basis_letters: Sequence[str] = ("A", "B", "D"),
) -> GradedNilReport:
    """Random homogeneous degree-``d`` elements over GF(2) and their nil degrees.

    Elements are GF(2) combinations of the ``len(basis_letters)^d`` words of
    length ``d``; the default letters ``A, B, D`` span the degree-1 part
    (``C = B + D``). When ``trials`` covers every nonzero combination the
    enumeration is exhaustive. Each element is checked for ``x^(72 d) = 0``
    at ``level``.
    """
    if d not in (1, 2, 3):
        raise InvalidArgument("degree must be 1, 2 or 3")
    if trials < 1:
        raise InvalidArgument("trials must be positive")
    rec = builtin_group("grigorchuk") if rec is None else rec
    f = FieldSpec(2)
    words = ["".join(w) for w in itertools.product(basis_letters, repeat=d)]
    elems = [AlgebraElement.parse(rec, f, w) for w in words]
    total = (1 << len(words)) - 1
    if trials >= total:
        masks = list(range(1, total + 1))
        exhaustive = True
    else:
        rng = np.random.default_rng(seed)
        masks = []
        while len(masks) < trials:
            m = int(rng.integers(1, total + 1))
            masks.append(m)
        exhaustive = False
    bound = 72 * d
    worst, failures, all_zero = None, [], True
    for mask in masks:
        x = AlgebraElement.zero(rec, f)
        for i, e in enumerate(elems):
            if mask >> i & 1:
                x = x + e
        deg = _nil_at_level(x, bound, level)
        if deg is None:
            all_zero = False
            failures.append(" + ".join(w for i, w in enumerate(words) if mask >> i & 1))
        else:
            worst = deg if worst is None else max(worst, deg)
    return GradedNilReport(d, len(masks), exhaustive, bound, all_zero, worst, failures, level, seed)


@dataclass(frozen=True)
class MonomialNilReport:
    max_len: int
    power: int
    level: int
    words: int
    zero_words: int
    checked_nonzero: int
    failures: list[str]

    @property
    def passed(self) -> bool:
        return not self.failures


def monomial_nil_survey(
    rec: WreathRecursion,
    f: FieldSpec,
    letter_names: Sequence[str],
    max_len: int,
    power: int,
    level: int,
) -> MonomialNilReport:
    """Check ``w^power = 0`` at ``level`` for every word in the letters.

    Words have length ``1..max_len`` and no letter repeated twice in a row.
    They are built right to left, ``M(xw) = M(x) M(w)``; once ``M(w) = 0``
    every extension of ``w`` is zero as well (computed, not assumed: the
    product with a zero matrix is zero), so the subtree is counted without
    evaluating it. Surviving words are raised to ``power`` by repeated
    squaring when ``power`` is a power of two.
    """
    atoms = [AlgebraElement.parse(rec, f, s) for s in letter_names]
    mats = [evaluate(a, level).data for a in atoms]
    ops = [_left_elem_op(a, level) for a in atoms]
    N = rec.q**level
    k = len(atoms)
    subtree = [0] * (max_len + 1)  # words of length 0..j extending a fixed word
    for j in range(max_len + 1):
        subtree[j] = sum((k - 1) ** i for i in range(j + 1))
    words = zero = nonzero = 0
    failures: list[str] = []

    def power_zero(m: np.ndarray) -> bool:
        p = power
        if p & (p - 1) == 0:
            while p > 1:
                m = _matmul(f, m, m)
                if _is_zero(m):
                    return True
                p >>= 1
            return _is_zero(m)
        acc = m
        for _ in range(p - 1):
            acc = _matmul(f, acc, m)
            if _is_zero(acc):
                return True
        return _is_zero(acc)

    def visit(word: list[int], m: np.ndarray) -> None:
        nonlocal words, zero, nonzero
        if _is_zero(m):
            cnt = subtree[max_len - len(word)]
            words += cnt
            zero += cnt
            return
        words += 1
        nonzero += 1
        if not power_zero(m):
            failures.append("".join(letter_names[i] for i in word))
        if len(word) < max_len:
            for i in range(k):
                if i != word[0]:
                    child = ops[i](m.reshape(1, N * N)).reshape(N, N)
                    visit([i] + word, child)

    for i in range(k):
        visit([i], mats[i])
    return MonomialNilReport(max_len, power, level, words, zero, nonzero, failures)


def branch_block_identity(f: FieldSpec, n: int, rec: WreathRecursion | None = None) -> dict[str, bool]:
    """The three identities putting ``ADA``, ``AB``, ``BA`` into block ``(1,1)``.

    ``CACAC``, ``CADA`` and ``ADAC`` at level ``n`` equal the matrix with the
    level-``(n-1)`` image of ``ADA``, ``AB``, ``BA`` respectively in block
    ``(1, 1)`` and zeros elsewhere.
    """
    if n < 2:
        raise InvalidArgument("need n >= 2")
    rec = builtin_group("grigorchuk") if rec is None else rec
    out = {}
    for lhs, inner in (("CACAC", "ADA"), ("CADA", "AB"), ("ADAC", "BA")):
        big = evaluate(AlgebraElement.parse(rec, f, lhs), n)
        small = evaluate(AlgebraElement.parse(rec, f, inner), n - 1)
        blocks = [[None] * rec.q for _ in range(rec.q)]
        blocks[0][0] = small
        out[lhs] = big == LevelMatrix.from_blocks(blocks, rec.q, n, f)
    return out
