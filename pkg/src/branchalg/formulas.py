"""Closed forms for orders, dimensions, growth and Hausdorff limits.

This module is an oracle: it never computes with groups or algebras, so
comparing its values against the engines is meaningful. Every closed form
refuses arguments outside the range where it is claimed to hold.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

from .errors import InvalidArgument, NotFound

__all__ = [
    "ClosedForm",
    "GROUP_ORDERS",
    "expected_group_order",
    "expected_group_order_exponent",
    "gupta_sidki_order_observed",
    "expected_group_hausdorff_term",
    "expected_algebra_dim",
    "expected_algebra_hausdorff_term",
    "expected_a_char2",
    "expected_a_charne2",
    "expected_F_dim_charne2",
    "expected_hausdorff",
    "HAUSDORFF_LIMITS",
]


@dataclass(frozen=True)
class ClosedForm:
    """A formula with its validity range, e.g. ``n >= 3``."""

    name: str
    domain: str
    valid: Callable[[int], bool]
    evaluator: Callable[[int], int | Fraction]

    def __call__(self, n: int) -> int | Fraction:
        if not isinstance(n, int) or not self.valid(n):
            raise InvalidArgument(f"{self.name}: n={n!r} outside the range {self.domain}")
        return self.evaluator(n)


def _exact(x: Fraction) -> int:
    if x.denominator != 1:
        raise ArithmeticError(f"closed form produced the non-integer {x}")
    return x.numerator


# group orders, stored as (prime, exponent formula) ----------------------------------

GROUP_ORDERS: dict[str, tuple[int, ClosedForm]] = {
    "grigorchuk": (2, ClosedForm("grigorchuk", "n >= 3", lambda n: n >= 3, lambda n: 5 * 2 ** (n - 3) + 2)),
    "gupta_sidki": (3, ClosedForm("gupta_sidki", "n >= 2", lambda n: n >= 2, lambda n: 2 * 3 ** (n - 1) + 1)),
    "fabrykowski_gupta_bg": (
        3,
        ClosedForm("fabrykowski_gupta_bg", "n >= 2", lambda n: n >= 2, lambda n: _exact(Fraction(3**n + 2 * n + 3, 4))),
    ),
    # the two below are stated for the even level 2m
    "bsv": (
        2,
        ClosedForm(
            "bsv", "even n >= 2", lambda n: n >= 2 and n % 2 == 0,
            lambda n: _exact(Fraction(2 ** n - 1, 3)) + n // 2,
        ),
    ),
    "basilica": (
        2,
        ClosedForm(
            "basilica", "even n >= 2", lambda n: n >= 2 and n % 2 == 0,
            lambda n: _exact(Fraction(2 * (2 ** n - 1), 3)) + n // 2,
        ),
    ),
    "odometer": (2, ClosedForm("odometer", "n >= 0", lambda n: n >= 0, lambda n: n)),
}

_GROUP_ALIASES = {
    "grigorchuk_group": "grigorchuk",
    "gg": "grigorchuk",
    "gs": "gupta_sidki",
    "bg": "fabrykowski_gupta_bg",
    "fabrykowski_gupta": "fabrykowski_gupta_bg",
    "basilica_group": "basilica",
}


def _group_key(name: str) -> str:
    key = name.lower().replace("-", "_")
    key = _GROUP_ALIASES.get(key, key)
    if key not in GROUP_ORDERS:
        raise NotFound(f"no order formula for {name!r}; known: {sorted(GROUP_ORDERS)}")
    return key


def expected_group_order_exponent(name: str, n: int) -> tuple[int, int]:
    """``(p, e)`` with ``|G_n| = p^e`` at level ``n``."""
    p, form = GROUP_ORDERS[_group_key(name)]
    return p, form(n)


def expected_group_order(name: str, n: int) -> int:
    p, e = expected_group_order_exponent(name, n)
    return p**e


def gupta_sidki_order_observed(n: int) -> int:
    """``3^(2*3^(n-2)+1)``: the formula the computed level quotients follow, ``n >= 2``.

    It differs from the ``gupta_sidki`` entry above by one power of three in
    the inner exponent; that entry would exceed the order of the full Sylow
    subgroup at level 2.
    """
    if not isinstance(n, int) or n < 2:
        raise InvalidArgument("n >= 2 required")
    return 3 ** (2 * 3 ** (n - 2) + 1)


_ALPHABET = {"grigorchuk": 2, "gupta_sidki": 3, "fabrykowski_gupta_bg": 3, "bsv": 2, "basilica": 2, "odometer": 2}


def expected_group_hausdorff_term(name: str, n: int) -> Fraction:
    """``log_p |G_n| / log_p |W_n|`` with ``W_n`` the iterated cyclic wreath product."""
    key = _group_key(name)
    q = _ALPHABET[key]
    _, e = expected_group_order_exponent(key, n)
    return Fraction(e, (q**n - 1) // (q - 1))


# algebras ----------------------------------------------------------------------------------


def _char_class(char_class: str | int) -> str:
    if char_class in (2, "2", "char2", "gf2"):
        return "char2"
    if char_class in ("charne2", "odd", "q", "ne2", 0, 3) or (isinstance(char_class, int) and char_class != 2):
        return "charne2"
    raise InvalidArgument(f"unknown characteristic class {char_class!r}; use 'char2' or 'charne2'")


_ALG_DIM = {
    "char2": ClosedForm("algebra_dim_char2", "n >= 2", lambda n: n >= 2, lambda n: _exact(Fraction(14 * 4 ** (n - 2) + 10, 3))),
    "charne2": ClosedForm("algebra_dim_charne2", "n >= 1", lambda n: n >= 1, lambda n: _exact(Fraction(4**n + 2, 3))),
}


def expected_algebra_dim(char_class: str | int, n: int) -> int:
    """Dimension of the level-``n`` image of the Grigorchuk group algebra."""
    return _ALG_DIM[_char_class(char_class)](n)


def expected_algebra_hausdorff_term(char_class: str | int, n: int) -> Fraction:
    """``dim A_n / dim P_n`` with ``dim P_n = (4^n + 2)/3``."""
    return Fraction(expected_algebra_dim(char_class, n) * 3, 4**n + 2)


_A_CHAR2_TABLE = (1, 3, 4)


def expected_a_char2(n: int) -> int:
    """``dim(w^n / w^(n+1))`` in characteristic 2.

    For ``n >= 3`` with ``2^k <= n < 2^(k+1)``: ``2n - 2^k/2`` up to
    ``3*2^k/2``, then ``n + 2^k``.
    """
    if not isinstance(n, int) or n < 0:
        raise InvalidArgument("n >= 0 required")
    if n < 3:
        return _A_CHAR2_TABLE[n]
    k = n.bit_length() - 1
    t = 1 << k
    if 2 * n <= 3 * t:
        return 2 * n - t // 2
    return n + t


_A_CHARNE2_TABLE = {1: 4, 2: 6, 3: 8, 4: 10, 5: 13, 6: 16}


def expected_a_charne2(n: int) -> int:
    """``dim F_n / F_(n-1)`` for the generator-ball filtration, any characteristic but 2."""
    if not isinstance(n, int) or n < 1:
        raise InvalidArgument("n >= 1 required")
    if n in _A_CHARNE2_TABLE:
        return _A_CHARNE2_TABLE[n]
    k = n.bit_length() - 1
    t = 1 << k
    # breakpoints at 5t/4, 3t/2, 7t/4; adjacent branches agree there
    if 4 * n <= 5 * t:
        return _exact(4 * n - Fraction(3 * t, 2))
    if 2 * n <= 3 * t:
        return _exact(3 * n - Fraction(t, 4))
    if 4 * n <= 7 * t:
        return _exact(n + Fraction(11 * t, 4))
    return 2 * n + t


def expected_F_dim_charne2(n: int) -> int:
    """``(4/3)n^2 + (5/4)n + 2/3`` for ``n`` a power of two above 4."""
    if not isinstance(n, int) or n <= 4 or n & (n - 1):
        raise InvalidArgument("n must be a power of two greater than 4")
    return _exact(Fraction(4 * n * n, 3) + Fraction(5 * n, 4) + Fraction(2, 3))


# Hausdorff limits --------------------------------------------------------------------------

HAUSDORFF_LIMITS: dict[str, Fraction] = {
    "grigorchuk_group": Fraction(5, 8),
    "gupta_sidki": Fraction(4, 9),
    "fabrykowski_gupta_bg": Fraction(1, 2),
    "bsv": Fraction(1, 3),
    "basilica_group": Fraction(2, 3),
    "grigorchuk_alg_char2": Fraction(7, 8),
    "grigorchuk_alg_charne2": Fraction(1),
}

_LIMIT_ALIASES = {
    "grigorchuk": "grigorchuk_group",
    "bg": "fabrykowski_gupta_bg",
    "basilica": "basilica_group",
    "gs": "gupta_sidki",
}


def expected_hausdorff(name: str) -> Fraction:
    key = name.lower().replace("-", "_")
    key = _LIMIT_ALIASES.get(key, key)
    try:
        return HAUSDORFF_LIMITS[key]
    except KeyError:
        raise NotFound(f"no Hausdorff limit for {name!r}; known: {sorted(HAUSDORFF_LIMITS)}") from None
