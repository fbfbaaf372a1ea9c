"""Exact scalars, truncated integer power series and GF(2) bit packing.

Nothing in here ever touches floating point, with the single exception of
:func:`series_dims_to_gk`, which is a diagnostic estimate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import InvalidArgument

__all__ = [
    "FieldSpec",
    "Scalar",
    "TruncSeries",
    "GF2",
    "QQ",
    "is_prime",
    "jennings_series",
    "series_dims_to_gk",
    "pack_bits",
    "unpack_bits",
]

BigCount = int
"""Group orders are plain Python integers (arbitrary precision)."""

RawScalar = Union[int, Fraction]


def is_prime(n: int) -> bool:
    """Deterministic primality test (trial division is plenty for field sizes)."""
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


@dataclass(frozen=True)
class FieldSpec:
    """A prime field GF(p), or the rationals when ``characteristic == 0``."""

    characteristic: int

    def __post_init__(self) -> None:
        c = self.characteristic
        if c != 0 and not is_prime(c):
            raise InvalidArgument(f"characteristic must be 0 or a prime, got {c}")

    @classmethod
    def parse(cls, text: str) -> "FieldSpec":
        """Accepts ``gf2``, ``gf3``, ``GF(5)``, ``q``, ``qq``, ``rationals`` or a bare integer."""
        t = text.strip().lower().replace("(", "").replace(")", "")
        if t in ("q", "qq", "rationals", "rational", "0"):
            return cls(0)
        if t.startswith("gf"):
            t = t[2:]
        elif t.startswith("f"):
            t = t[1:]
        try:
            return cls(int(t))
        except ValueError:
            raise InvalidArgument(f"cannot parse field {text!r}") from None

    @property
    def is_rational(self) -> bool:
        return self.characteristic == 0

    @property
    def name(self) -> str:
        return "q" if self.characteristic == 0 else f"gf{self.characteristic}"

    def __str__(self) -> str:
        return "QQ" if self.characteristic == 0 else f"GF({self.characteristic})"

    # raw canonical values: ints in [0, p) or reduced Fractions
    def __call__(self, x: RawScalar | "Scalar") -> RawScalar:
        if isinstance(x, Scalar):
            x = x.value
        p = self.characteristic
        if p == 0:
            return Fraction(x)
        if isinstance(x, Fraction):
            if x.denominator % p == 0:
                raise ZeroDivisionError(f"{x} has no image in GF({p})")
            return x.numerator * pow(x.denominator, -1, p) % p
        return int(x) % p

    def zero(self) -> RawScalar:
        return self(0)

    def one(self) -> RawScalar:
        return self(1)

    def add(self, x: RawScalar, y: RawScalar) -> RawScalar:
        return self(x + y)

    def sub(self, x: RawScalar, y: RawScalar) -> RawScalar:
        return self(x - y)

    def mul(self, x: RawScalar, y: RawScalar) -> RawScalar:
        return self(x * y)

    def neg(self, x: RawScalar) -> RawScalar:
        return self(-x)

    def inv(self, x: RawScalar) -> RawScalar:
        if x == 0:
            raise ZeroDivisionError("inverse of zero")
        if self.characteristic == 0:
            return 1 / Fraction(x)
        return pow(int(x), -1, self.characteristic)

    def scalar(self, x: RawScalar) -> "Scalar":
        return Scalar(self, self(x))


GF2 = FieldSpec(2)
QQ = FieldSpec(0)


@dataclass(frozen=True)
class Scalar:
    """A field element in canonical form; supports the usual operators."""

    field: FieldSpec
    value: RawScalar

    def __post_init__(self) -> None:
        object.__setattr__(self, "value", self.field(self.value))

    def _coerce(self, other) -> RawScalar:
        if isinstance(other, Scalar):
            if other.field != self.field:
                raise ValueError(f"mixing scalars of {self.field} and {other.field}")
            return other.value
        return self.field(other)

    def __add__(self, other) -> "Scalar":
        return Scalar(self.field, self.value + self._coerce(other))

    __radd__ = __add__

    def __sub__(self, other) -> "Scalar":
        return Scalar(self.field, self.value - self._coerce(other))

    def __rsub__(self, other) -> "Scalar":
        return Scalar(self.field, self._coerce(other) - self.value)

    def __mul__(self, other) -> "Scalar":
        return Scalar(self.field, self.value * self._coerce(other))

    __rmul__ = __mul__

    def __neg__(self) -> "Scalar":
        return Scalar(self.field, -self.value)

    def inverse(self) -> "Scalar":
        return Scalar(self.field, self.field.inv(self.value))

    def __truediv__(self, other) -> "Scalar":
        return self * Scalar(self.field, self._coerce(other)).inverse()

    def __eq__(self, other) -> bool:
        if isinstance(other, Scalar):
            return self.field == other.field and self.value == other.value
        try:
            return self.value == self.field(other)
        except (TypeError, ValueError, ZeroDivisionError):
            return NotImplemented

    def __hash__(self) -> int:
        return hash((self.field, self.value))

    def __bool__(self) -> bool:
        return self.value != 0

    def __repr__(self) -> str:
        return f"Scalar({self.value}, {self.field})"


@dataclass(frozen=True)
class TruncSeries:
    """Integer power series known up to (and including) degree ``trunc``."""

    coefficients: tuple[int, ...]

    def __post_init__(self) -> None:
        if not self.coefficients:
            raise ValueError("a truncated series needs at least one coefficient")
        object.__setattr__(self, "coefficients", tuple(int(c) for c in self.coefficients))

    @classmethod
    def one(cls, trunc: int) -> "TruncSeries":
        return cls((1,) + (0,) * trunc)

    @property
    def trunc(self) -> int:
        return len(self.coefficients) - 1

    def __len__(self) -> int:
        return len(self.coefficients)

    def __getitem__(self, k: int) -> int:
        return self.coefficients[k]

    def __add__(self, other: "TruncSeries") -> "TruncSeries":
        t = min(self.trunc, other.trunc)
        return TruncSeries(tuple(self[k] + other[k] for k in range(t + 1)))

    def __mul__(self, other: "TruncSeries") -> "TruncSeries":
        t = min(self.trunc, other.trunc)
        out = [0] * (t + 1)
        for i, a in enumerate(self.coefficients[: t + 1]):
            if a:
                for j in range(t + 1 - i):
                    out[i + j] += a * other[j]
        return TruncSeries(tuple(out))

    def __pow__(self, k: int) -> "TruncSeries":
        if k < 0:
            raise ValueError("negative power")
        result, base = TruncSeries.one(self.trunc), self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def tolist(self) -> list[int]:
        return list(self.coefficients)


def jennings_series(ell: Sequence[int], p: int, trunc: int) -> TruncSeries:
    """Hilbert-Poincare series of a restricted enveloping algebra.

    Returns the coefficients of ``prod_n ((1 - t^(p n)) / (1 - t^n))^ell[n-1]``
    up to degree ``trunc``; each factor is the polynomial
    ``1 + t^n + ... + t^((p-1) n)``.
    """
    if not is_prime(p):
        raise InvalidArgument(f"p must be prime, got {p}")
    if trunc < 0:
        raise InvalidArgument("trunc must be nonnegative")
    if any(e < 0 for e in ell):
        raise InvalidArgument("dimensions ell_n must be nonnegative")
    series = TruncSeries.one(trunc)
    for n, mult in enumerate(ell, start=1):
        if not mult or n > trunc:
            continue
        factor = [0] * (trunc + 1)
        for j in range(p):
            if j * n <= trunc:
                factor[j * n] = 1
        series = series * TruncSeries(tuple(factor)) ** mult
    return series


def series_dims_to_gk(coeffs: TruncSeries | Iterable[int]) -> float:
    """Diagnostic Gelfand-Kirillov estimate ``log(a_0 + ... + a_n) / log n``.

    ``n`` is the last index of the coefficient list. This is a single
    finite-``n`` ratio, not the liminf, and is never used in exact checks.
    """
    a = coeffs.tolist() if isinstance(coeffs, TruncSeries) else [int(c) for c in coeffs]
    if len(a) < 3:
        raise InvalidArgument("need at least 3 coefficients for a growth estimate")
    if any(c < 0 for c in a):
        raise InvalidArgument("coefficients must be nonnegative")
    n = len(a) - 1
    return math.log(sum(a)) / math.log(n)


# -- GF(2) packed vectors ---------------------------------------------------
# bit c of a row lives in word c >> 6, bit c & 63 (little-endian bit order).


def pack_bits(bits: np.ndarray) -> np.ndarray:
    """Pack a ``(k, L)`` 0/1 array into ``(k, ceil(L/64))`` uint64 words."""
    bits = np.ascontiguousarray(bits, dtype=np.uint8)
    if bits.ndim == 1:
        return pack_bits(bits[None, :])[0]
    k, length = bits.shape
    nwords = (length + 63) // 64
    pad = nwords * 64 - length
    if pad:
        bits = np.concatenate([bits, np.zeros((k, pad), dtype=np.uint8)], axis=1)
    packed = np.packbits(bits, axis=1, bitorder="little")
    return packed.view("<u8").reshape(k, nwords).astype(np.uint64, copy=False)


def unpack_bits(words: np.ndarray, length: int) -> np.ndarray:
    """Inverse of :func:`pack_bits`."""
    words = np.ascontiguousarray(words, dtype="<u8")
    if words.ndim == 1:
        return unpack_bits(words[None, :], length)[0]
    k = words.shape[0]
    if k == 0:
        return np.zeros((0, length), dtype=np.uint8)
    bits = np.unpackbits(words.view(np.uint8).reshape(k, -1), axis=1, bitorder="little")
    return bits[:, :length]
