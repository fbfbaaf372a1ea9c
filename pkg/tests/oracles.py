"""Frozen reference values.

Every number here was fixed before the engines were run against it and is
written out literally, so a change in the library cannot move the target.
"""

from __future__ import annotations

from fractions import Fraction

# exponents e with |G_n| = p^e
GRIGORCHUK_ORDER_EXP = {1: 1, 2: 3, 3: 7, 4: 12, 5: 22, 6: 42, 7: 82, 8: 162}
GUPTA_SIDKI_ORDER_EXP_STATED = {2: 7, 3: 19, 4: 55}  # 2*3^(n-1)+1
GUPTA_SIDKI_ORDER_EXP_OBSERVED = {1: 1, 2: 3, 3: 7, 4: 19}
BG_ORDER_EXP = {2: 4, 3: 9, 4: 23}
BSV_ORDER_EXP = {2: 2, 4: 7, 6: 24}
BASILICA_ORDER_EXP = {2: 3, 4: 12, 6: 45}

GRIGORCHUK_HAUSDORFF = {
    3: Fraction(7, 7),
    4: Fraction(12, 15),
    5: Fraction(22, 31),
    6: Fraction(42, 63),
    7: Fraction(82, 127),
    8: Fraction(162, 255),
}
GRIGORCHUK_HAUSDORFF_LIMIT = Fraction(5, 8)

# dimensions of the level-n image of the group algebra of the Grigorchuk group
ALG_DIM_CHAR2_STATED = {2: 8, 3: 22, 4: 78, 5: 302, 6: 1198}
ALG_DIM_CHAR2_OBSERVED = {0: 1, 1: 2, 2: 6, 3: 22, 4: 78, 5: 302, 6: 1198, 7: 4782}
ALG_DIM_CHARNE2 = {1: 2, 2: 6, 3: 22, 4: 86, 5: 342}
# (4^n + 2)/3: dimension of the level-n closure of a 2-dimensional root algebra
CLOSURE_DIM = {0: 1, 1: 2, 2: 6, 3: 22, 4: 86, 5: 342, 6: 1366}

# a_0..a_24; from a_6 on, a_2n = 2 a_n and a_2n+1 = a_n + a_n+1
A_CHAR2 = [1, 3, 4, 5, 6, 8, 10, 11, 12, 14, 16, 18, 20, 21, 22, 23, 24, 26, 28, 30, 32, 34, 36, 38, 40]
# a_0..a_16; partial sums at 8 and 16 are 96 and 362
A_CHARNE2 = [1, 4, 6, 8, 10, 13, 16, 18, 20, 24, 28, 31, 34, 35, 36, 38, 40]
F16_CHARNE2 = 362
F8_CHARNE2 = 96

IDEAL_CHAR2 = {"codim": 6, "k_mod_k2": 12, "k_mod_mk": 8}
IDEAL_CHARNE2_STATED = {"codim": 6, "k_mod_mk": 20}
IDEAL_CHARNE2_OBSERVED = {"codim": 2, "k_mod_k2": 0, "k_mod_mk": 4}

MONOMIAL_WORDS_LEN10 = 4 * (3**10 - 1) // 2  # 4 + 4*3 + ... + 4*3^9 = 118096

ODOMETER_ORDERS = {n: 2**n for n in range(11)}
