import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qdilate.optuple import weyl_operator, weyl_turn
from qdilate.qword import (GroupElement, ParseError, QSpec, UnitComplex, format_word, indicator, inverse,
                           multiply, pair_list, parse_word, phase_value, power, split_pm, support)


def el(phase, word):
    return GroupElement(tuple(phase), tuple(word))


# --- independent oracle: sort letters using the defining relations ---------

def rewrite_letters(letters, k):
    """Normal form of a list of (generator, +-1) letters by bubble sort.

    Swapping ``s_j^a s_i^b`` (``i < j``) into ``s_i^b s_j^a`` costs
    ``q_ij^{-ab}``, which covers all four relations between generators and
    their inverses.
    """
    letters = list(letters)
    phase = dict.fromkeys(pair_list(k), 0)
    changed = True
    while changed:
        changed = False
        for p in range(len(letters) - 1):
            (j, a), (i, b) = letters[p], letters[p + 1]
            if j > i:
                phase[(i, j)] -= a * b
                letters[p], letters[p + 1] = letters[p + 1], letters[p]
                changed = True
    word = [0] * k
    for g, a in letters:
        word[g - 1] += a
    return el([phase[p] for p in pair_list(k)], word)


def letters_to_text(letters):
    return " ".join(f"s{g}" if a == 1 else f"s{g}^-1" for g, a in letters)


ALPHABET = [(1, 1), (2, 1), (1, -1), (2, -1)]


def test_normal_form_uniqueness_exhaustive():
    groups = {}
    for n in range(5):
        for word in itertools.product(ALPHABET, repeat=n):
            nf = rewrite_letters(word, 2)
            parsed = parse_word(letters_to_text(word), 2)
            assert parsed == nf
            groups.setdefault(nf, set()).add(parsed)
    # every class parses to one exponent vector
    assert all(len(v) == 1 for v in groups.values())
    assert len(groups) > 50


def test_multiply_examples():
    assert multiply(el([0], [1, 0]), el([0], [0, 1])) == el([0], [1, 1])
    assert multiply(el([0], [0, 1]), el([0], [1, 0])) == el([-1], [1, 1])
    a = el([3, -1, 2], [1, -2, 4])
    assert multiply(a, GroupElement.identity(3)) == a


def test_inverse_examples():
    assert inverse(el([0], [1, 1])) == el([-1], [-1, -1])
    e = GroupElement.identity(3)
    assert inverse(e) == e


def test_parse_examples():
    assert parse_word("s2 s1", 2) == el([-1], [1, 1])
    assert parse_word("", 2) == GroupElement.identity(2)
    assert parse_word("s1 s2 s1^-1 s2^-1", 2) == el([1], [0, 0])
    assert parse_word("s1^3  s1^-3", 1) == GroupElement.identity(1)


@pytest.mark.parametrize("text", ["s0", "s3", "x1", "s1^", "s1^-", "s 1", "s1^2^3", " s1", "s1 ", "s1\ts2"])
def test_parse_errors(text):
    with pytest.raises(ParseError):
        parse_word(text, 2)


def test_phase_value_examples():
    q = QSpec(2, {(1, 2): Fraction(1, 4)})
    assert phase_value(el([0], [5, 1]), q).turn == 0
    assert phase_value(el([2], [0, 0]), q).turn == Fraction(1, 2)
    assert complex(phase_value(el([2], [0, 0]), q)) == -1
    q3 = QSpec(2, {(1, 2): Fraction(1, 3)})
    assert phase_value(el([-1], [0, 0]), q3).turn == Fraction(2, 3)


def test_split_pm_and_indicator():
    assert split_pm((3, -2)) == ((3, 0), (0, 2))
    assert split_pm((0, 0)) == ((0, 0), (0, 0))
    assert split_pm((-1, 5, -4)) == ((0, 5, 0), (1, 0, 4))
    assert indicator({1, 3}, 3) == (1, 0, 1)
    assert indicator(set(), 2) == (0, 0)
    assert support((2, 0, -1)) == {1}


def test_qspec_reversal_and_validation():
    q = QSpec(3, {(1, 3): Fraction(1, 5), (3, 2): Fraction(1, 4)})
    assert q(3, 1).turn == Fraction(4, 5)
    assert q(2, 3).turn == Fraction(3, 4)
    assert q(1, 2).turn == 0
    with pytest.raises(ValueError):
        QSpec(2, {(1, 1): 0.5})
    with pytest.raises(ValueError):
        UnitComplex.from_complex(1.1)


def test_unit_complex_float_mix():
    a = UnitComplex.from_turn("1/8")
    b = UnitComplex.from_complex(np.exp(0.3j))
    c = a * b
    assert not c.exact
    assert abs(complex(c) - np.exp(2j * np.pi / 8 + 0.3j)) < 1e-14


def test_overflow_detected():
    with pytest.raises(OverflowError):
        el([0], [2**62, 1]) * el([0], [2**62, 0])
    big = el([0], [2**40, 0])
    with pytest.raises(OverflowError):
        multiply(el([0], [0, 2**40]), big)


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        multiply(GroupElement.identity(2), GroupElement.identity(3))
    with pytest.raises(ValueError):
        GroupElement((0,), (1, 2, 3))


def test_format_word_round_trip():
    g = el([0, 0, 0], [2, -1, 1])
    assert parse_word(format_word(g), 3).word_exp == g.word_exp


def test_power_matches_repeated_product():
    g = el([1], [2, -1])
    acc = GroupElement.identity(2)
    for n in range(6):
        assert power(g, n) == acc
        assert power(g, -n) == inverse(acc)
        acc = multiply(acc, g)


# --- hypothesis properties --------------------------------------------------

exps = st.integers(-5, 5)


@st.composite
def elements(draw, k):
    npairs = k * (k - 1) // 2
    return el(draw(st.lists(exps, min_size=npairs, max_size=npairs)), draw(st.lists(exps, min_size=k, max_size=k)))


@st.composite
def triples(draw):
    k = draw(st.integers(1, 4))
    return draw(elements(k)), draw(elements(k)), draw(elements(k))


@given(triples())
def test_group_laws(abc):
    a, b, c = abc
    e = GroupElement.identity(a.k)
    assert multiply(multiply(a, b), c) == multiply(a, multiply(b, c))
    assert multiply(a, e) == a == multiply(e, a)
    assert multiply(a, inverse(a)) == e == multiply(inverse(a), a)


@given(triples(), st.lists(st.fractions(min_value=0, max_value=1, max_denominator=12), min_size=6, max_size=6))
def test_phase_homomorphism_exact(abc, turns):
    a, b, _ = abc
    k = a.k
    q = QSpec(k, dict(zip(pair_list(k), turns)))
    twist = q.power_product([-b.word_exp[i - 1] * a.word_exp[j - 1] for i, j in pair_list(k)])
    assert phase_value(multiply(a, b), q) == phase_value(a, q) * phase_value(b, q) * twist


@settings(max_examples=50)
@given(st.lists(st.sampled_from(["s1", "s2", "s3", "s1^-2", "s2^3", "s3^-1"]), max_size=5),
       st.lists(st.sampled_from(["s1", "s2", "s3", "s2^-1", "s3^2"]), max_size=5))
def test_parser_concatenation(w1, w2):
    t1, t2 = " ".join(w1), " ".join(w2)
    both = " ".join(w1 + w2)
    assert parse_word(both, 3) == multiply(parse_word(t1, 3), parse_word(t2, 3))


@settings(max_examples=40)
@given(triples())
def test_weyl_representation_homomorphism(abc):
    # q-commuting unitaries give a representation g -> q^{m0} U_1^{m1} ... U_k^{mk}
    a, b, _ = abc
    k, r = a.k, 5
    ab = [(1, 0), (0, 1), (1, 1), (2, 3)][:k]
    us = [weyl_operator(x, y, r) for x, y in ab]
    q = QSpec(k, {(i, j): weyl_turn(*ab[i - 1], *ab[j - 1], r) for i, j in pair_list(k)})

    def rep(g):
        out = complex(phase_value(g, q)) * np.eye(r)
        for u, e in zip(us, g.word_exp):
            out = out @ np.linalg.matrix_power(u if e >= 0 else u.conj().T, abs(e))
        return out

    assert np.allclose(rep(multiply(a, b)), rep(a) @ rep(b), atol=1e-10)
