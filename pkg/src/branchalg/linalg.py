"""Incremental row spaces over GF(2), GF(p) and the rationals.

Every backend keeps an echelonized basis and accepts batches of dense row
vectors. Dense formats:

* GF(2): ``uint8`` arrays of 0/1 (internally packed into 64-bit words);
* GF(p), p odd: ``int64`` residues in ``[0, p)``;
* rationals: numpy ``object`` arrays of ``flint.fmpq``.

``add`` returns the rows that actually enlarged the space (in the
backend's reduced form), which is what span closures feed back into their
worklists.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import InvalidArgument, ResourceLimitError
from .exact import FieldSpec, pack_bits, unpack_bits

__all__ = [
    "SpanBasis",
    "GF2Span",
    "GFpSpan",
    "QSpan",
    "new_span",
    "as_dense",
    "dense_zeros",
    "span_closure",
    "MAX_ODD_PRIME",
]

MAX_ODD_PRIME = 1 << 20
_TABLE_BUDGET = 384 << 20  # bytes of cached Four-Russians tables per space


class SpanBasis:
    """Common interface; see the concrete backends."""

    field: FieldSpec
    length: int
    batch_size: int = 256

    @property
    def dim(self) -> int:
        raise NotImplementedError

    def add(self, rows: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def reduce(self, rows: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def dense_rows(self) -> np.ndarray:
        raise NotImplementedError

    def contains(self, rows: np.ndarray) -> np.ndarray:
        """Boolean membership per row."""
        rows = self._check(rows)
        if rows.shape[0] == 0:
            return np.zeros(0, dtype=bool)
        red = self.reduce(rows)
        return ~_nonzero_rows(red)

    def contains_space(self, other: "SpanBasis") -> bool:
        basis = other.dense_rows()
        for start in range(0, basis.shape[0], self.batch_size):
            if not self.contains(basis[start : start + self.batch_size]).all():
                return False
        return True

    def _check(self, rows: np.ndarray) -> np.ndarray:
        rows = np.asarray(rows)
        if rows.ndim == 1:
            rows = rows[None, :]
        if rows.shape[1] != self.length:
            raise InvalidArgument(f"row length {rows.shape[1]} differs from {self.length}")
        return rows

    def __len__(self) -> int:
        return self.dim

    def __repr__(self) -> str:
        return f"{type(self).__name__}(field={self.field}, length={self.length}, dim={self.dim})"


def _nonzero_rows(rows: np.ndarray) -> np.ndarray:
    if rows.dtype == object:
        return np.array([any(x != 0 for x in r) for r in rows], dtype=bool)
    return rows.any(axis=1)


# -- GF(2) ---------------------------------------------------------------------------


def _lowbit_index(words: np.ndarray) -> np.ndarray:
    """Index of the lowest set bit of each (nonzero) uint64."""
    low = words & (~words + np.uint64(1))
    return np.log2(low.astype(np.float64)).astype(np.int64)


class GF2Span(SpanBasis):
    """Bit-packed rows in creation-order echelon form.

    Each row is zero at the pivots of all older rows, and rows added by one
    call to :meth:`add` are also reduced against each other. Reduction runs
    over groups of 8 consecutive rows using a 256-entry XOR table per group
    (the "method of four Russians").
    """

    batch_size = 512

    def __init__(self, length: int, *, table_budget: int = _TABLE_BUDGET) -> None:
        self.field = FieldSpec(2)
        self.length = length
        self.words = (length + 63) // 64
        self._rows = np.zeros((64, self.words), dtype=np.uint64)
        self._n = 0
        self.pivots: list[int] = []
        # (start, stop, word index per row, shift per row, cached table or None)
        self._groups: list[tuple[int, int, np.ndarray, np.ndarray, np.ndarray | None]] = []
        self._table_bytes = 0
        self.table_budget = table_budget

    @property
    def dim(self) -> int:
        return self._n

    def packed_rows(self) -> np.ndarray:
        return self._rows[: self._n]

    def dense_rows(self) -> np.ndarray:
        return unpack_bits(self.packed_rows(), self.length)

    def drop_tables(self) -> None:
        self._groups = [(a, b, w, s, None) for a, b, w, s, _ in self._groups]
        self._table_bytes = 0

    @staticmethod
    def _table(rows: np.ndarray) -> np.ndarray:
        m = rows.shape[0]
        t = np.zeros((1 << m, rows.shape[1]), dtype=np.uint64)
        for j in range(m):
            t[1 << j : 2 << j] = t[: 1 << j] ^ rows[j]
        return t

    def reduce_packed(self, v: np.ndarray) -> np.ndarray:
        v = np.array(v, dtype=np.uint64, copy=True)
        if v.shape[0] == 0:
            return v
        for start, stop, wd, sh, table in self._groups:
            bits = (v[:, wd] >> sh) & np.uint64(1)
            idx = (bits << np.arange(stop - start, dtype=np.uint64)).sum(axis=1)
            if not idx.any():
                continue
            if table is None:
                table = self._table(self._rows[start:stop])
            v ^= table[idx.astype(np.intp)]
        return v

    def reduce(self, rows: np.ndarray) -> np.ndarray:
        rows = self._check(rows)
        return unpack_bits(self.reduce_packed(pack_bits(rows & 1)), self.length)

    def contains(self, rows: np.ndarray) -> np.ndarray:
        rows = self._check(rows)
        return ~self.reduce_packed(pack_bits(rows & 1)).any(axis=1)

    def contains_space(self, other: SpanBasis) -> bool:
        if isinstance(other, GF2Span):
            packed = other.packed_rows()
            for s in range(0, packed.shape[0], self.batch_size):
                if self.reduce_packed(packed[s : s + self.batch_size]).any():
                    return False
            return True
        return super().contains_space(other)

    def add_packed(self, v: np.ndarray) -> np.ndarray:
        r = self.reduce_packed(v)
        r = r[r.any(axis=1)]
        if r.shape[0] == 0:
            return r
        chosen: list[int] = []
        piv: list[int] = []
        for i in range(r.shape[0]):
            row = r[i]
            nz = np.flatnonzero(row)
            if nz.size == 0:
                continue
            w = int(nz[0])
            b = int(_lowbit_index(row[w : w + 1])[0])
            mask = ((r[:, w] >> np.uint64(b)) & np.uint64(1)).astype(bool)
            mask[i] = False
            r[mask] ^= row
            chosen.append(i)
            piv.append(w * 64 + b)
        new = r[chosen]
        self._append(new, piv)
        return new

    def _append(self, new: np.ndarray, piv: list[int]) -> None:
        k = new.shape[0]
        need = self._n + k
        if need > self._rows.shape[0]:
            cap = max(need, 2 * self._rows.shape[0])
            grown = np.zeros((cap, self.words), dtype=np.uint64)
            grown[: self._n] = self._rows[: self._n]
            self._rows = grown
        self._rows[self._n : need] = new
        for g in range(0, k, 8):
            a, b = self._n + g, self._n + min(g + 8, k)
            ps = np.array(piv[g : g + (b - a)], dtype=np.int64)
            wd = (ps >> 6).astype(np.intp)
            sh = (ps & 63).astype(np.uint64)
            table = None
            size = (1 << (b - a)) * self.words * 8
            if self._table_bytes + size <= self.table_budget:
                table = self._table(self._rows[a:b])
                self._table_bytes += size
            self._groups.append((a, b, wd, sh, table))
        self.pivots.extend(piv)
        self._n = need

    def add(self, rows: np.ndarray) -> np.ndarray:
        rows = self._check(rows)
        return unpack_bits(self.add_packed(pack_bits(rows & 1)), self.length)


# -- GF(p), p odd -------------------------------------------------------------------


class GFpSpan(SpanBasis):
    """Rows kept in reduced row echelon form (pivot entries 1, pivot columns clean).

    Products are formed in float64, which is exact while every partial sum
    stays below 2^53; long sums are split into blocks to guarantee that.
    """

    batch_size = 128

    def __init__(self, p: int, length: int) -> None:
        if p == 2 or p >= MAX_ODD_PRIME:
            raise InvalidArgument(f"GFpSpan needs an odd prime below {MAX_ODD_PRIME}")
        self.field = FieldSpec(p)
        self.p = p
        self.length = length
        self._rows = np.zeros((0, length), dtype=np.float64)
        self.pivots: list[int] = []
        self._block = max(1, (1 << 53) // ((p - 1) ** 2 + 1) - 1)

    @property
    def dim(self) -> int:
        return self._rows.shape[0]

    def dense_rows(self) -> np.ndarray:
        return self._rows.astype(np.int64)

    def _mulmod(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """``a @ b mod p`` for float64 residue matrices."""
        p = float(self.p)
        out = np.zeros((a.shape[0], b.shape[1]), dtype=np.float64)
        for s in range(0, a.shape[1], self._block):
            out = np.fmod(out + np.fmod(a[:, s : s + self._block] @ b[s : s + self._block], p), p)
        return out

    def _reduce_f(self, c: np.ndarray) -> np.ndarray:
        if self.dim == 0 or c.shape[0] == 0:
            return c
        coeff = c[:, self.pivots]
        return np.fmod(c - self._mulmod(coeff, self._rows) + self.p, self.p)

    def reduce(self, rows: np.ndarray) -> np.ndarray:
        rows = self._check(rows)
        c = np.mod(rows.astype(np.int64), self.p).astype(np.float64)
        return self._reduce_f(c).astype(np.int64)

    def add(self, rows: np.ndarray) -> np.ndarray:
        rows = self._check(rows)
        p = self.p
        c = np.mod(rows.astype(np.int64), p).astype(np.float64)
        r = self._reduce_f(c)
        r = r[r.any(axis=1)].astype(np.int64)
        if r.shape[0] == 0:
            return r
        chosen, piv = [], []
        for i in range(r.shape[0]):
            nz = np.flatnonzero(r[i])
            if nz.size == 0:
                continue
            col = int(nz[0])
            r[i] = r[i] * pow(int(r[i, col]), -1, p) % p
            f = r[:, col].copy()
            f[i] = 0
            hit = np.flatnonzero(f)
            if hit.size:
                r[hit] = (r[hit] - np.outer(f[hit], r[i])) % p
            chosen.append(i)
            piv.append(col)
        new = r[chosen].astype(np.float64)
        if self.dim:
            back = self._rows[:, piv]
            if back.any():
                self._rows = np.fmod(self._rows - self._mulmod(back, new) + p, p)
        self._rows = np.concatenate([self._rows, new])
        self.pivots.extend(piv)
        return new.astype(np.int64)


# -- rationals ----------------------------------------------------------------------


def _fmpq():
    import flint

    return flint


class QSpan(SpanBasis):
    """Reduced row echelon form over the rationals, arithmetic in FLINT."""

    batch_size = 64

    def __init__(self, length: int) -> None:
        self.field = FieldSpec(0)
        self.length = length
        self._flint = _fmpq()
        self._mat = None  # fmpq_mat mirror of _rows
        self._rows = np.zeros((0, length), dtype=object)
        self.pivots: list[int] = []

    @property
    def dim(self) -> int:
        return self._rows.shape[0]

    def dense_rows(self) -> np.ndarray:
        return self._rows.copy()

    def _to_mat(self, a: np.ndarray):
        k, m = a.shape
        return self._flint.fmpq_mat(k, m, [x for x in a.ravel()]) if k and m else None

    def _from_mat(self, m, k: int, length: int) -> np.ndarray:
        return np.array(m.entries(), dtype=object).reshape(k, length)

    def _coerce(self, rows: np.ndarray) -> np.ndarray:
        q = self._flint.fmpq
        if rows.dtype == object:
            return np.array([q(x) if not isinstance(x, q) else x for x in rows.ravel()], dtype=object).reshape(rows.shape)
        return np.array([q(int(x)) for x in rows.ravel()], dtype=object).reshape(rows.shape)

    def _reduce_obj(self, c: np.ndarray) -> np.ndarray:
        if self.dim == 0 or c.shape[0] == 0:
            return c
        coeff = self._to_mat(c[:, self.pivots])
        prod = coeff * self._mat
        return self._from_mat(self._to_mat(c) - prod, c.shape[0], self.length)

    def reduce(self, rows: np.ndarray) -> np.ndarray:
        rows = self._check(rows)
        return self._reduce_obj(self._coerce(rows))

    def add(self, rows: np.ndarray) -> np.ndarray:
        rows = self._check(rows)
        r = self._reduce_obj(self._coerce(rows))
        r = r[_nonzero_rows(r)]
        if r.shape[0] == 0:
            return r
        red, rank = self._to_mat(r).rref()
        new = self._from_mat(red, r.shape[0], self.length)[:rank]
        piv = [int(np.flatnonzero(new[i] != 0)[0]) for i in range(rank)]
        new_mat = self._to_mat(new)
        if self.dim:
            back = self._rows[:, piv]
            if _nonzero_rows(back.T).any():
                self._mat = self._mat - self._to_mat(back) * new_mat
        self._mat = new_mat if self._mat is None else _vstack(self._flint, self._mat, new_mat)
        self._rows = self._from_mat(self._mat, self.dim + rank, self.length)
        self.pivots.extend(piv)
        return new


def _vstack(flint, a, b):
    return flint.fmpq_mat(a.nrows() + b.nrows(), a.ncols(), a.entries() + b.entries())


# -- helpers ------------------------------------------------------------------------


def new_span(field: FieldSpec, length: int) -> SpanBasis:
    if field.characteristic == 2:
        return GF2Span(length)
    if field.characteristic == 0:
        return QSpan(length)
    return GFpSpan(field.characteristic, length)


def dense_zeros(field: FieldSpec, k: int, length: int) -> np.ndarray:
    if field.characteristic == 0:
        z = _fmpq().fmpq(0)
        out = np.empty((k, length), dtype=object)
        out.fill(z)
        return out
    return np.zeros((k, length), dtype=np.uint8 if field.characteristic == 2 else np.int64)


def as_dense(field: FieldSpec, rows: np.ndarray) -> np.ndarray:
    """Canonical dense representation of integer or rational rows."""
    rows = np.asarray(rows)
    p = field.characteristic
    if p == 0:
        q = _fmpq().fmpq

        def conv(x):
            if isinstance(x, q):
                return x
            x = Fraction(x)  # accepts numpy integers, ints and Fractions
            return q(int(x.numerator), int(x.denominator))

        return np.array([conv(x) for x in rows.ravel()], dtype=object).reshape(rows.shape)
    if rows.dtype == object:
        rows = np.array([field(x) for x in rows.ravel()], dtype=np.int64).reshape(rows.shape)
    out = np.mod(rows.astype(np.int64), p)
    return out.astype(np.uint8) if p == 2 else out


def span_closure(
    space: SpanBasis,
    seeds: np.ndarray,
    ops: Sequence[Callable[[np.ndarray], np.ndarray]],
    *,
    max_dim: int | None = None,
    order: str = "fifo",
) -> SpanBasis:
    """Close ``space + span(seeds)`` under the linear maps ``ops``.

    Each op maps a batch of dense rows to a batch of dense rows. New rows are
    processed from a worklist (``fifo`` or ``lifo``); the resulting row space
    does not depend on the order.
    """
    if order not in ("fifo", "lifo"):
        raise InvalidArgument("order must be 'fifo' or 'lifo'")
    work: list[np.ndarray] = []
    bs = space.batch_size

    def push(rows: np.ndarray) -> None:
        for s in range(0, rows.shape[0], bs):
            new = space.add(rows[s : s + bs])
            if new.shape[0]:
                work.append(new)
            if max_dim is not None and space.dim > max_dim:
                raise ResourceLimitError(f"span dimension exceeds the cap {max_dim}", partial=space.dim)

    push(seeds)
    while work:
        # merge pending results into one batch so each op runs on many rows at once
        taken, count = [], 0
        while work and count < bs:
            part = work.pop(0) if order == "fifo" else work.pop()
            if count + part.shape[0] > bs:
                cut = bs - count
                rest, part = part[cut:], part[:cut]
                if order == "fifo":
                    work.insert(0, rest)
                else:
                    work.append(rest)
            taken.append(part)
            count += part.shape[0]
        batch = taken[0] if len(taken) == 1 else np.concatenate(taken)
        for op in ops:
            push(op(batch))
    return space
