"""Randomized properties (hypothesis)."""

from __future__ import annotations

import itertools

import numpy as np
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from branchalg import algebra as alg
from branchalg import permgrp
from branchalg.algebra import AlgebraElement, evaluate
from branchalg.exact import FieldSpec, jennings_series, pack_bits, unpack_bits
from branchalg.linalg import new_span, span_closure
from branchalg.selfsim import act, builtin_group, normalize

GRIG = builtin_group("grigorchuk")
RECS = [GRIG, builtin_group("gupta_sidki"), builtin_group("basilica"), builtin_group("fabrykowski_gupta_bg")]
FIELDS = [FieldSpec(2), FieldSpec(3), FieldSpec(5), FieldSpec(0)]
SETTINGS = settings(max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])


def _symbols(rec):
    return [i + 1 for i in range(rec.ngens)] + [-(i + 1) for i in range(rec.ngens) if not rec.involutive[i]]


@st.composite
def elements(draw, rec, f):
    words = st.lists(st.sampled_from(_symbols(rec)), max_size=7).map(tuple)
    coeffs = st.integers(-4, 4)
    terms = draw(st.dictionaries(words, coeffs, max_size=5))
    return AlgebraElement(rec, f, terms)


@st.composite
def element_pairs(draw):
    rec = draw(st.sampled_from(RECS))
    f = draw(st.sampled_from(FIELDS))
    n = draw(st.integers(0, 5 if rec.q == 2 else 3))
    return rec, f, n, draw(elements(rec, f)), draw(elements(rec, f))


@SETTINGS
@given(element_pairs())
def test_evaluation_is_a_ring_homomorphism(data):
    rec, f, n, x, y = data
    ex, ey = evaluate(x, n), evaluate(y, n)
    assert evaluate(x * y, n) == ex * ey
    assert evaluate(x + y, n) == ex + ey
    assert evaluate(x - y, n) == ex - ey


@SETTINGS
@given(element_pairs())
def test_truncation_is_multiplicative(data):
    rec, f, n, x, y = data
    if n == 0:
        return
    prod = evaluate(x, n) * evaluate(y, n)
    assert prod.truncate() == evaluate(x, n - 1) * evaluate(y, n - 1)


@SETTINGS
@given(st.sampled_from(RECS), st.data())
def test_normalize_preserves_action(rec, data):
    w = tuple(data.draw(st.lists(st.sampled_from(_symbols(rec)), max_size=12)))
    nw = normalize(rec, w)
    assert normalize(rec, nw) == nw and len(nw) <= len(w)
    for v in itertools.product(range(1, rec.q + 1), repeat=3):
        assert act(rec, w, v) == act(rec, nw, v)


@SETTINGS
@given(st.sampled_from([FieldSpec(2), FieldSpec(3), FieldSpec(0)]), st.integers(0, 2**32 - 1), st.booleans())
def test_closure_order_independence(f, seed, swap):
    rng = np.random.default_rng(seed)
    n = 3 if f.characteristic else 2
    N = 2**n
    mats = [evaluate(AlgebraElement.word(GRIG, f, (int(i),)), n).vector()[None, :] for i in rng.integers(1, 5, size=2)]
    seeds = np.concatenate(mats)
    ops = alg._gen_ops(GRIG, n, "right") + alg._gen_ops(GRIG, n, "left")
    perm = rng.permutation(len(ops))
    a = span_closure(new_span(f, N * N), seeds, ops, order="fifo")
    b = span_closure(new_span(f, N * N), seeds[::-1] if swap else seeds, [ops[i] for i in perm], order="lifo")
    assert a.dim == b.dim and a.contains_space(b)


@st.composite
def small_groups(draw):
    k = draw(st.integers(2, 7))
    copies = draw(st.integers(1, 64 // k))
    degree = k * copies
    relabel = np.array(draw(st.permutations(range(degree))))
    inv = np.argsort(relabel)
    gens = []
    for _ in range(draw(st.integers(1, 3))):
        g = np.array(draw(st.permutations(range(k))))
        big = np.concatenate([g + k * j for j in range(copies)])
        gens.append(relabel[big[inv]])
    return gens, degree


@SETTINGS
@given(small_groups())
def test_bsgs_matches_exhaustive(case):
    gens, degree = case
    assert permgrp.PermGroup(gens, degree).order() == permgrp.exhaustive_order(gens, degree)


@SETTINGS
@given(st.lists(st.integers(0, 2), min_size=1, max_size=4), st.sampled_from([2, 3]))
def test_jennings_counts_restricted_partitions(ell, p):
    # coefficient of t^m counts exponent vectors 0 <= e < p with weighted sum m
    slots = [n for n, mult in enumerate(ell, start=1) for _ in range(mult)]
    top = sum((p - 1) * n for n in slots)
    counts = [0] * (top + 1)
    for es in itertools.product(range(p), repeat=len(slots)):
        counts[sum(e * n for e, n in zip(es, slots))] += 1
    assert jennings_series(ell, p, top).tolist() == counts


@SETTINGS
@given(st.integers(1, 5))
def test_jennings_cyclic_2_group(k):
    # F_2[C_(2^k)] = F_2[T]/T^(2^k): one dimension per degree below 2^k
    ell = [1 if (n & (n - 1)) == 0 and n < 2**k else 0 for n in range(1, 2**k)]
    assert jennings_series(ell, 2, 2**k).tolist() == [1] * 2**k + [0]


@SETTINGS
@given(st.integers(1, 40), st.integers(1, 150), st.integers(0, 2**32 - 1))
def test_pack_roundtrip(k, length, seed):
    bits = np.random.default_rng(seed).integers(0, 2, size=(k, length), dtype=np.uint8)
    assert np.array_equal(unpack_bits(pack_bits(bits), length), bits)


@SETTINGS
@given(st.data())
def test_element_text_roundtrip(data):
    f = data.draw(st.sampled_from([FieldSpec(2), FieldSpec(7), FieldSpec(0)]))
    x = data.draw(elements(GRIG, f))
    assert AlgebraElement.parse(GRIG, f, str(x)) == x
