from __future__ import annotations

import itertools
from fractions import Fraction

import pytest

from branchalg.errors import InvalidArgument, NotFound
from branchalg.selfsim import (
    ZOO_NAMES,
    ContractionParams,
    act,
    builtin_group,
    contraction_certificate,
    format_recursion,
    free_reduce,
    inverse_word,
    load_recursion,
    normalize,
    orbit_growth,
    parse_recursion,
    section,
)


def test_zoo_loads():
    for name in ZOO_NAMES:
        rec = builtin_group(name)
        assert rec.ngens >= 1
    with pytest.raises(NotFound):
        builtin_group("nope")


def test_grigorchuk_action(grig):
    a, b, c, d = (grig.generator(s) for s in "abcd")
    assert act(grig, a, (1, 2, 1)) == (2, 2, 1)
    # b = <a, c>: fixes the first letter, acts by a below 1
    assert act(grig, b, (1, 1)) == (1, 2)
    assert act(grig, b, (2, 1, 1)) == (2, 1, 2)  # c@2 = d, d = <1, b>
    assert section(grig, b, (1,)) == a
    assert section(grig, b, (2,)) == c


def test_right_action_composition(grig):
    words = [grig.parse_word(t) for t in ("ab", "cad", "bada", "acab")]
    for u, w in itertools.product(words, repeat=2):
        for v in itertools.product((1, 2), repeat=4):
            assert act(grig, u + w, v) == act(grig, w, act(grig, u, v))


def test_section_cocycle(grig):
    # (gh)@v = (g@v)(h@v^g)
    g, h = grig.parse_word("abac"), grig.parse_word("dab")
    for v in itertools.product((1, 2), repeat=3):
        lhs = section(grig, g + h, v, rewrite=True)
        rhs = normalize(grig, section(grig, g, v) + section(grig, h, act(grig, g, v)))
        assert lhs == rhs


def test_reduction(grig):
    assert free_reduce(grig, (1, 1, 2)) == (2,)
    assert normalize(grig, (2, 3)) == (4,)  # bc = d
    assert normalize(grig, (1, 2, 3, 1)) == (1, 4, 1)
    gs = builtin_group("gupta_sidki")
    assert free_reduce(gs, (1, -1, 2)) == (2,)
    assert inverse_word(gs, (1, 2)) == (-2, -1)


def test_parse_and_format_word():
    gs = builtin_group("gupta_sidki")
    w = gs.parse_word("x g' x")
    assert w == (1, -2, 1)
    assert gs.format_word(w) == "xg'x"
    assert gs.parse_word("1") == ()
    with pytest.raises(InvalidArgument):
        gs.parse_word("xz")


@pytest.mark.parametrize("name", ZOO_NAMES)
def test_recursion_text_roundtrip(name):
    rec = builtin_group(name)
    again = parse_recursion(format_recursion(rec))
    assert again == rec


def test_load_recursion_from_file(tmp_path):
    path = tmp_path / "odo.txt"
    path.write_text("alphabet 2\nt plain (1,2) 1 t\n")
    rec = load_recursion(str(path))
    assert rec.q == 2 and rec.names == ("t",)
    assert load_recursion("grigorchuk") == builtin_group("grigorchuk")


@pytest.mark.parametrize(
    "text",
    [
        "alphabet 1\nt plain () 1\n",
        "alphabet 2\nt plain (1,3) 1 t\n",
        "alphabet 2\nt plain (1,2) 1\n",
        "alphabet 2\nt involutive (1,2) 1 t\n",  # the odometer has infinite order
        "alphabet 2\na involutive (1,2) 1 1\nrewrite a 1\n",
        "alphabet 2\nt plain (1,2) 1 u\n",
    ],
)
def test_bad_recursions_rejected(text):
    with pytest.raises(InvalidArgument):
        parse_recursion(text)


def test_contraction_grigorchuk(grig):
    rep = contraction_certificate(grig, ContractionParams(Fraction(1, 2), 1, 1), 8)
    assert rep.passed
    assert rep.words_checked > 100


def test_contraction_fails_for_small_lambda(grig):
    rep = contraction_certificate(grig, ContractionParams(Fraction(1, 10), 1, 0), 6)
    assert not rep.passed


def test_basilica_contraction_depth_two():
    bas = builtin_group("basilica")
    assert contraction_certificate(bas, ContractionParams(Fraction(3, 4), 2, 1), 10).passed
    assert not contraction_certificate(bas, ContractionParams(Fraction(3, 4), 2, 0), 10).passed


@pytest.mark.xfail(strict=True, reason="b^k a has a depth-1 section of length k, so no lam < 1 works at depth 1")
def test_basilica_contraction_depth_one():
    bas = builtin_group("basilica")
    assert contraction_certificate(bas, ContractionParams(Fraction(3, 4), 1, 1), 10).passed


def test_contraction_params_validation():
    with pytest.raises(InvalidArgument):
        ContractionParams(Fraction(1), 1, 0)
    with pytest.raises(InvalidArgument):
        ContractionParams(Fraction(1, 2), 0, 0)


@pytest.mark.parametrize("m", range(1, 7))
def test_odometer_orbits(m):
    odo = builtin_group("odometer")
    assert orbit_growth(odo, (2,) * m, 2**m + 2) == [min(r + 1, 2**m) for r in range(2**m + 3)]


def test_orbit_growth_grigorchuk_saturates(grig):
    counts = orbit_growth(grig, (1, 1, 1, 1), 40, inverses=True)
    assert counts[-1] == 16
    assert counts == sorted(counts)


@pytest.mark.parametrize("name", ZOO_NAMES)
def test_bundled_definition_files_match_zoo(name):
    from importlib import resources

    path = resources.files("branchalg").joinpath("data", "groups", f"{name}.txt")
    assert load_recursion(str(path)) == builtin_group(name)
