from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest

import oracles as O
from branchalg import algebra as alg
from branchalg.algebra import AlgebraElement, LevelMatrix, evaluate
from branchalg.errors import InvalidArgument, ResourceLimitError
from branchalg.exact import FieldSpec
from branchalg.selfsim import act, builtin_group, section
from branchalg.permgrp import index_vertex


def el(rec, f, text):
    return AlgebraElement.parse(rec, f, text)


# -- elements ------------------------------------------------------------------------------


def test_letters_are_g_minus_one(grig, gf3):
    assert el(grig, gf3, "A") == el(grig, gf3, "a - 1")
    assert el(grig, gf3, "AD") == el(grig, gf3, "a*d - a - d + 1")
    assert alg.letters(grig, gf3, ["b"])[0] == el(grig, gf3, "b - 1")


def test_formal_ring_operations(grig, qq):
    x = el(grig, qq, "2*a + b")
    y = el(grig, qq, "a - 3")
    assert x * y == el(grig, qq, "2 - 6*a + b*a - 3*b")
    assert x - x == AlgebraElement.zero(grig, qq)
    assert (x**0) == AlgebraElement.one(grig, qq)
    assert el(grig, qq, "a*a") == AlgebraElement.one(grig, qq)  # involution
    assert el(grig, qq, "b*c") == el(grig, qq, "d")  # rewrite rule


def test_char2_coefficients(grig, gf2):
    assert el(grig, gf2, "a + a").is_zero()
    assert el(grig, gf2, "A*A").is_zero()


def test_parse_errors(grig, gf2):
    with pytest.raises(InvalidArgument):
        el(grig, gf2, "a +")
    with pytest.raises(InvalidArgument):
        el(grig, gf2, "e")
    with pytest.raises(InvalidArgument):
        el(grig, gf2, "a ** 2")


def test_mixing_algebras_rejected(grig, gf2, gf3):
    with pytest.raises(InvalidArgument):
        el(grig, gf2, "a") + el(grig, gf3, "a")


def test_str_roundtrip(grig, gf3):
    x = el(grig, gf3, "2*ab + d - 1")
    assert el(grig, gf3, str(x)) == x


# -- evaluation conventions -------------------------------------------------------------------


def test_permutation_matrix_convention(grig, gf2):
    # entry (v, v^w) is 1
    w = grig.parse_word("abd")
    m = evaluate(AlgebraElement.word(grig, gf2, w), 3).data
    for i in range(8):
        v = index_vertex(i, 2, 3)
        img = act(grig, w, v)
        j = sum((x - 1) * 2 ** (2 - k) for k, x in enumerate(img))
        assert m[i, j] == 1 and m[i].sum() == 1


@pytest.mark.parametrize("name", ["grigorchuk", "gupta_sidki", "basilica"])
def test_blocks_follow_sections(name, gf3):
    rec = builtin_group(name)
    n = 3 if rec.q == 2 else 2
    for i in range(rec.ngens):
        g = (i + 1,)
        m = evaluate(AlgebraElement.word(rec, gf3, g), n)
        for u in range(1, rec.q + 1):
            (v,) = act(rec, g, (u,))
            sec = AlgebraElement.word(rec, gf3, section(rec, g, (u,)))
            assert m.block(u, v) == evaluate(sec, n - 1)


def test_level_zero_is_augmentation(grig, gf3):
    m = evaluate(el(grig, gf3, "2*a + b - d + 1"), 0)
    assert m.data.shape == (1, 1) and int(m.data[0, 0]) == 3 % 3


@pytest.mark.parametrize("field_", [FieldSpec(2), FieldSpec(3), FieldSpec(0)])
def test_truncation_tower(grig, field_):
    rng = np.random.default_rng(1)
    words = ["a", "b", "c", "d"]
    for _ in range(10):
        text = " + ".join("*".join(rng.choice(words, size=int(rng.integers(1, 6)))) for _ in range(3))
        x = el(grig, field_, text)
        for n in range(1, 6):
            assert evaluate(x, n).truncate() == evaluate(x, n - 1)


def test_level_matrix_algebra(grig, gf3):
    x, y = el(grig, gf3, "a + 2*b"), el(grig, gf3, "c*a - d")
    for n in range(0, 4):
        ex, ey = evaluate(x, n), evaluate(y, n)
        assert ex * ey == evaluate(x * y, n)
        assert ex + ey == evaluate(x + y, n)
        assert ex - ey == evaluate(x - y, n)


def test_from_blocks_inverts_block(grig, gf2):
    m = evaluate(el(grig, gf2, "ab + ca"), 4)
    blocks = [[m.block(u, v) for v in (1, 2)] for u in (1, 2)]
    assert LevelMatrix.from_blocks(blocks, 2, 4, gf2) == m


def test_packed_only_gf2(grig, gf2, gf3):
    assert evaluate(el(grig, gf2, "a"), 3).packed().shape == (8, 1)
    with pytest.raises(InvalidArgument):
        evaluate(el(grig, gf3, "a"), 3).packed()


# -- dimensions -----------------------------------------------------------------------------------


@pytest.mark.parametrize("n", range(0, 8))
def test_dims_gf2(grig, gf2, n):
    assert alg.algebra_dimension(grig, gf2, n) == O.ALG_DIM_CHAR2_OBSERVED[n]


@pytest.mark.parametrize("f", [FieldSpec(3), FieldSpec(5), FieldSpec(0)])
@pytest.mark.parametrize("n", range(1, 5))
def test_dims_odd(grig, f, n):
    assert alg.algebra_dimension(grig, f, n) == O.ALG_DIM_CHARNE2[n]


def test_closure_dims():
    assert alg.closure_dims(2, 2, 6) == [O.CLOSURE_DIM[n] for n in range(7)]


def test_hausdorff_sequences(grig, gf2, gf3):
    seq = alg.algebra_hausdorff_sequence(grig, gf2, 6)
    assert seq == [Fraction(O.ALG_DIM_CHAR2_OBSERVED[n], O.CLOSURE_DIM[n]) for n in range(1, 7)]
    assert alg.algebra_hausdorff_sequence(grig, gf3, 4) == [1, 1, 1, 1]


def test_level_caps(grig, gf2, gf3):
    assert alg.level_cap(gf2) == 7 and alg.level_cap(gf3) == 5
    with pytest.raises(ResourceLimitError):
        alg.algebra_dimension(grig, gf2, 8)
    with pytest.raises(ResourceLimitError):
        alg.algebra_dimension(grig, gf3, 6)
    with pytest.raises(ResourceLimitError):
        alg.algebra_dimension(grig, gf2, 5, level_cap=4)


def test_gupta_sidki_algebra_is_full_closure_at_level_one():
    gs = builtin_group("gupta_sidki")
    # the cyclic group of order 3 on 3 points spans a 3-dimensional algebra
    assert alg.algebra_dimension(gs, FieldSpec(2), 1) == 3


# -- filtrations ---------------------------------------------------------------------------------------


def test_char2_filtration_prefix(grig, gf2):
    r = alg.filtration_dims(grig, gf2, alg.letters(grig, gf2), 10)
    assert r.stable and r.values == O.A_CHAR2[:11]
    assert r.per_level[r.level] == r.per_level[r.level - 1]


def test_filtration_unstable_reports_partial(grig, gf3):
    gens = [AlgebraElement.word(grig, gf3, grig.generator(s)) for s in grig.names]
    with pytest.raises(ResourceLimitError) as info:
        alg.filtration_dims(grig, gf3, gens, 16, level_cap=5)
    partial = info.value.partial
    assert not partial.stable and partial.level == 5 and set(partial.per_level) == {1, 2, 3, 4, 5}


def test_filtration_arguments(grig, gf2):
    with pytest.raises(InvalidArgument):
        alg.filtration_dims(grig, gf2, [], 3)
    with pytest.raises(InvalidArgument):
        alg.filtration_dims(grig, gf2, alg.letters(grig, gf2), -1)


# -- ideals and subspaces ----------------------------------------------------------------------------


def test_ideal_char2_single_level(grig, gf2):
    r = alg.ideal_quotient_dims(grig, gf2, alg.branching_ideal_gens(grig, gf2), 5)
    assert (r.codim, r.k_mod_k2, r.k_mod_mk) == tuple(O.IDEAL_CHAR2.values())
    assert r.mk_inside_k


def test_ideal_char3_brute_force_rank(grig, gf3):
    # K = <ab - ba>: the closure equals the span of all u (ab - ba) v for group words u, v
    from branchalg.linalg import new_span

    n = 3
    x = el(grig, gf3, "a*b - b*a")
    words = ["1", "a", "b", "c", "d", "ab", "ba", "ac", "ca", "ad", "da", "aba", "bab", "aca", "ada", "abab", "baba",
             "acac", "adad", "abac", "abad", "baca", "bada", "cab", "dab"]
    span = new_span(gf3, 4**n)
    for u in words:
        for v in words:
            span.add(evaluate(el(grig, gf3, u) * x * el(grig, gf3, v), n).vector()[None, :])
    K = alg.ideal_closure(grig, gf3, [x], n)
    assert span.dim == K.dim == alg.algebra_dimension(grig, gf3, n) - 2


def test_subspace_parse():
    S = alg.Subspace
    assert S.parse("varpi^3") == S("varpi", 3)
    assert S.parse("ϖ^2") == S("varpi", 2)
    assert S.parse("w") == S("varpi", 1)
    assert S.parse("K^2") == S("K", 2)
    assert S.parse("MX(K)") == S("MK", 1)
    assert S.parse("MX^2(K)") == S("MK", 2)
    assert str(S("MK", 2)) == "MX^2(K)"
    for bad in ("V^2", "K^x", "MX(L)"):
        with pytest.raises((InvalidArgument, ValueError)):
            S.parse(bad)


@pytest.mark.parametrize(
    "lhs,rhs,rel",
    [("varpi^3", "K", "subset"), ("K", "varpi^2", "subset"), ("K^2", "varpi^4", "subset"), ("K", "K", "equal"),
     ("varpi^2", "varpi^3", "superset")],
)
def test_subspace_relations_level5(grig, gf2, lhs, rhs, rel):
    assert alg.subspace_relation(grig, gf2, lhs, rhs, 5) == rel


def test_mxk_not_in_varpi4_witness(grig, gf2):
    n = 4
    ab = evaluate(el(grig, gf2, "AB"), n - 1)
    w = LevelMatrix.from_blocks([[ab, None], [None, None]], 2, n, gf2)
    K = alg.subspace_span(grig, gf2, "K", n - 1)
    assert K.contains(ab.vector()[None, :])[0]
    v4 = alg.subspace_span(grig, gf2, "varpi^4", n)
    assert not v4.contains(w.vector()[None, :])[0]


def test_varpi_refused_in_odd_characteristic(grig, gf3):
    with pytest.raises(InvalidArgument):
        alg.subspace_span(grig, gf3, "varpi^2", 3)


# -- powers, nillity, identities -------------------------------------------------------------------------


def test_nil_degree_letters(grig, gf2):
    r = alg.nil_degree(el(grig, gf2, "A"), 8, 6)
    assert r.degree == 2
    r = alg.nil_degree(el(grig, gf2, "A + B"), 64, 7)
    assert r.degree == 16 and r.level == 5


def test_nil_degree_absent(grig, gf2):
    r = alg.nil_degree(el(grig, gf2, "1 + A + B + A*D"), 16, 6)
    assert r.degree is None


@pytest.mark.xfail(strict=True, reason="A + B has nil degree 16 from level 5 on")
def test_degree_one_nil_degrees_at_most_8(grig, gf2):
    g = alg.graded_nil_sample(1, 7, level=8)
    assert g.max_observed <= 8


def test_graded_nil_exhaustive_degree_one():
    g = alg.graded_nil_sample(1, 100, level=7)
    assert g.exhaustive and g.samples == 7 and g.all_zero and g.max_observed == 16


def test_graded_nil_seeded_reproducible():
    a = alg.graded_nil_sample(2, 5, seed=3, level=6)
    b = alg.graded_nil_sample(2, 5, seed=3, level=6)
    assert a == b and a.all_zero and not a.exhaustive


def test_monomial_survey_small(grig, gf2):
    r = alg.monomial_nil_survey(grig, gf2, ["A", "B", "C", "D"], 6, 8, 6)
    assert r.passed and r.words == 4 * (3**6 - 1) // 2
    assert r.zero_words + r.checked_nonzero == r.words


def test_distinct_powers_laurent(grig, gf2):
    r = alg.distinct_powers(el(grig, gf2, "1 + A + B + A*D"), 16, 12)
    assert r.level is not None and r.last_power_nonzero
    again = alg.distinct_powers(el(grig, gf2, "1 + A + B + A*D"), 16, r.level, start_level=r.level)
    assert again.level == r.level


def test_distinct_powers_fails_for_nilpotent(grig, gf2):
    r = alg.distinct_powers(el(grig, gf2, "A"), 4, 5)
    assert r.level is None and r.tried == list(range(6))


def test_product_identities(grig, gf2, gf3):
    assert alg.product_identity_check(el(grig, gf2, "D"), el(grig, gf2, "B*C + B + C"), 7)
    assert alg.first_mismatch_level(el(grig, gf3, "a*b"), el(grig, gf3, "b*a"), 5) == 2


@pytest.mark.parametrize("n", range(2, 7))
def test_cacac_block_form(gf2, n):
    assert alg.branch_block_identity(gf2, n)["CACAC"]


def test_cache_can_be_cleared(grig, gf2):
    d = alg.algebra_dimension(grig, gf2, 4)
    alg.clear_cache()
    assert alg.algebra_dimension(grig, gf2, 4) == d
