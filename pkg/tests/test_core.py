import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import naive_act, odometer_level_oracle, odometer_plus_one
from selfsim.core import (
    GroupWord,
    act_letter,
    act_word,
    all_words,
    equal,
    format_presentation,
    invert,
    is_identity,
    lex_index,
    lex_word,
    multiply,
    parse_presentation,
    permutation_on_level,
    relabel,
    restrict,
    wreath_notation,
)
from selfsim.errors import BudgetExceeded, ParseError, SelfSimError
from selfsim.presets import ADDING_MACHINE, preset_presentation

ODOMETER = preset_presentation("adding-machine")
Z2M1 = preset_presentation("z2m1")
Z2M2 = preset_presentation("z2m2")
TAU = ODOMETER.gen("tau")


# ---------------------------------------------------------------- parsing


def test_parse_adding_machine():
    P = parse_presentation(ADDING_MACHINE)
    assert P.degree == 2 and P.names == ("tau",)
    assert P.perms == ((1, 0),)
    assert P.restrictions == (((), ((0, 1),)),)


def test_parse_trivial_generator():
    P = parse_presentation("alphabet = 2\ngens = g\ng : perm = () ; 0 -> 1 ; 1 -> 1\n")
    assert is_identity(P.gen("g"))


def test_parse_undeclared_generator_names_it():
    text = "alphabet = 2\ngens = a\na : perm = (0 1) ; 0 -> c ; 1 -> 1\n"
    with pytest.raises(ParseError, match="'c'") as info:
        parse_presentation(text)
    assert info.value.line == 3


@pytest.mark.parametrize("text, fragment", [
    ("alphabet = 2\ngens = a\na : perm = (0 0) ; 0 -> 1 ; 1 -> 1\n", "line 3"),
    ("alphabet = 2\ngens = a\na : perm = (0 2) ; 0 -> 1 ; 1 -> 1\n", "line 3"),
    ("alphabet = 2\ngens = a\na : perm = () ; 0 -> 1 ; 2 -> 1\n", "out of range"),
    ("alphabet = 2\ngens = a\na : perm = () ; 0 -> 1\n", "lacks restrictions"),
    ("gens = a\na : perm = () ; 0 -> 1 ; 1 -> 1\n", "alphabet"),
    ("alphabet = 1\ngens = a\n", "at least 2"),
    ("alphabet = 2\ngens = a a\n", "duplicate"),
    ("alphabet = 2\ngens = a\na : perm = () ; 0 -> 1 ; 1 -> 1\nb : perm = () ; 0 -> 1 ; 1 -> 1\n", "'b'"),
])
def test_parse_errors(text, fragment):
    with pytest.raises(ParseError, match=fragment):
        parse_presentation(text)


def test_presentation_round_trip():
    for name in ("adding-machine", "z2m1", "z2m2", "dragon", "heisenberg22"):
        P = preset_presentation(name)
        assert parse_presentation(format_presentation(P)) == P


def test_wreath_notation():
    assert wreath_notation(Z2M1) == "a = (b, 1)(0 1)\nb = (a, 1)"


def test_word_syntax():
    assert Z2M1.word("a^2 b^-1 1").word == ((0, 1), (0, 1), (1, -1))
    assert Z2M1.word("a a^-1").word == ()
    with pytest.raises(ParseError):
        Z2M1.word("c")


# ---------------------------------------------------------------- action


def test_act_letter_examples():
    e = ODOMETER.identity()
    assert act_letter(TAU, 0) == (1, e)
    assert act_letter(TAU, 1) == (0, TAU)
    assert act_letter(TAU * TAU, 0) == (0, TAU)


def test_act_word_examples():
    assert act_word(TAU, (0, 0, 0)) == (1, 0, 0)
    assert act_word(TAU, (1, 1, 0)) == (0, 0, 1)
    assert act_word(ODOMETER.identity(), (0, 1, 1, 0)) == (0, 1, 1, 0)
    # 10 encodes 1: one step gives 2 (01), two steps give 3 (11)
    assert act_word(TAU, (1, 0)) == (0, 1)
    assert act_word(TAU * TAU, (1, 0)) == odometer_plus_one(odometer_plus_one((1, 0))) == (1, 1)


def test_restrict_examples():
    assert restrict(TAU, (1,)) == TAU
    assert restrict(TAU, (0,)) == ODOMETER.identity()
    assert restrict(Z2M2.gen("b"), (1,)) == Z2M2.gen("a")
    assert restrict(TAU, ()) == TAU


def test_arithmetic_examples():
    a, b = Z2M1.generators()
    assert multiply(a, invert(a)).word == ()
    assert invert(a * b) == b.inverse() * a.inverse()
    assert str(invert(a * b)) == "b^-1 a^-1"


def test_mixed_presentations_rejected():
    with pytest.raises(SelfSimError):
        Z2M1.gen("a") * Z2M2.gen("a")


def test_equal_examples():
    a, b = Z2M2.generators()
    assert equal(a * a, Z2M2.identity())
    assert equal(b * b, Z2M2.identity())
    a1, b1 = Z2M1.generators()
    assert not equal(a1 * b1, b1 * a1)
    witness = [v for n in (1, 2) for v in itertools.product((0, 1), repeat=n)
               if act_word(a1 * b1, v) != act_word(b1 * a1, v)]
    assert witness


def test_equal_budget_is_an_error():
    a, b = Z2M1.generators()
    g = (a * b) ** 40
    with pytest.raises(BudgetExceeded):
        equal(g, Z2M1.identity(), budget=2)


def test_level_permutation_examples():
    assert permutation_on_level(TAU, 1).tolist() == [1, 0]
    # 00->10, 10->01, 01->11, 11->00 in lexicographic indices
    assert permutation_on_level(TAU, 2).tolist() == [2, 3, 1, 0]
    assert permutation_on_level(ODOMETER.identity(), 3).tolist() == list(range(8))
    assert permutation_on_level(TAU, 0).tolist() == [0]


@pytest.mark.parametrize("n", range(0, 11))
def test_odometer_level_against_oracle(n):
    assert np.array_equal(permutation_on_level(TAU, n), odometer_level_oracle(n))


def test_odometer_words_against_oracle():
    for v in all_words(8, 2):
        assert act_word(TAU, v) == odometer_plus_one(v)


def test_lex_index_round_trip():
    for n in range(4):
        for i, v in enumerate(all_words(n, 3)):
            assert lex_index(v, 3) == i and lex_word(i, n, 3) == v


def test_relabel_matches_conjugated_action():
    P = relabel(Z2M2, (1, 0))
    swap = lambda v: tuple(1 - x for x in v)
    for g, h in zip(Z2M2.generators(), P.generators()):
        for v in all_words(5, 2):
            assert act_word(h, swap(v)) == swap(act_word(g, v))


# ---------------------------------------------------------------- properties

PRESETS = [ODOMETER, Z2M1, Z2M2, preset_presentation("dragon")]


@st.composite
def elements(draw, pres=None, max_len=8):
    P = pres if pres is not None else draw(st.sampled_from(PRESETS))
    letters = draw(st.lists(st.tuples(st.integers(0, P.ngens - 1), st.sampled_from([1, -1])), max_size=max_len))
    return GroupWord(P, letters)


def tree_words(P, max_len=6):
    return st.lists(st.integers(0, P.degree - 1), max_size=max_len).map(tuple)


@st.composite
def triples(draw):
    P = draw(st.sampled_from(PRESETS))
    return draw(elements(P)), draw(elements(P)), draw(tree_words(P)), draw(tree_words(P))


@settings(max_examples=300, deadline=None)
@given(triples())
def test_restriction_identities(data):
    g, h, v, u = data
    vu = v + u
    assert act_word(g, vu) == act_word(g, v) + act_word(restrict(g, v), u)
    assert restrict(g, vu) == restrict(restrict(g, v), u)
    assert equal(restrict(g * h, v), restrict(g, v) * restrict(h, act_word(g, v)))
    assert equal(restrict(g.inverse(), v), restrict(g, act_word(g.inverse(), v)).inverse())


@settings(max_examples=200, deadline=None)
@given(triples())
def test_action_matches_naive_recursion(data):
    g, _, v, u = data
    P = g.pres
    assert act_word(g, v + u) == naive_act(P.perms, P.restrictions, g.word, v + u)


@settings(max_examples=200, deadline=None)
@given(triples())
def test_action_preserves_length_and_parent(data):
    g, _, v, u = data
    w = v + u
    img = act_word(g, w)
    assert len(img) == len(w)
    if w:
        assert act_word(g, w[:-1]) == img[:-1]


@settings(max_examples=100, deadline=None)
@given(triples())
def test_level_permutation_is_right_action(data):
    g, h, _, _ = data
    for n in range(4):
        pg, ph, pgh = (permutation_on_level(x, n) for x in (g, h, g * h))
        assert np.array_equal(ph[pg], pgh)


@settings(max_examples=100, deadline=None)
@given(triples())
def test_equal_is_consistent_with_levels(data):
    g, h, _, _ = data
    assert equal(g, g)
    assert equal(g, h) == equal(h, g)
    if equal(g, h):
        for n in range(7):
            assert np.array_equal(permutation_on_level(g, n), permutation_on_level(h, n))
    assert equal(g * h * h.inverse(), g)
