import random

import pytest

from oracles import brute_force_nucleus, naive_act
from selfsim.core import act_word, all_words, equal, is_identity, restrict
from selfsim.nucleus import (
    compute_nucleus,
    estimate_contraction_coefficient,
    moore_diagram,
    random_word,
    wordproblem_contracting,
)
from selfsim.presets import preset_presentation


def nucleus(name):
    rep = compute_nucleus(preset_presentation(name))
    assert rep.contracting
    return rep.nucleus


def labels(N):
    return sorted(N.labels())


def distinct_actions(P, words, level=8):
    sig = set()
    for w in words:
        sig.add(tuple(naive_act(P.perms, P.restrictions, w, v) for v in all_words(level, P.degree)))
    return sig


def test_adding_machine_nucleus():
    N = nucleus("adding-machine")
    assert labels(N) == ["1", "tau", "tau^-1"]


def test_trivial_nucleus():
    N = nucleus("trivial")
    assert labels(N) == ["1"]


def test_z2m1_nucleus():
    assert labels(nucleus("z2m1")) == ["1", "a", "a^-1", "a^-1 b", "b", "b^-1", "b^-1 a"]


def test_z2m2_nucleus_has_three_elements():
    # ab restricts to a and b but is not itself a restriction of any
    # element of {1, a, b}, so the recurrent construction drops it
    assert labels(nucleus("z2m2")) == ["1", "a", "b"]


@pytest.mark.parametrize("name", ["adding-machine", "z2m1", "z2m2"])
def test_nucleus_against_brute_force(name):
    P = preset_presentation(name)
    N = nucleus(name)
    deep = brute_force_nucleus(P, max_len=4, depth=10)
    assert len(distinct_actions(P, deep)) == len(N)
    assert distinct_actions(P, deep) == distinct_actions(P, [g.word for g in N.elements])


@pytest.mark.parametrize("name", ["adding-machine", "z2m1", "z2m2", "dragon", "trivial"])
def test_nucleus_invariants(name):
    N = nucleus(name)
    P = N.pres
    assert any(is_identity(g) for g in N.elements)
    for i, g in enumerate(N.elements):
        assert N.index_of(g.inverse()) is not None
        for x in range(P.degree):
            assert equal(restrict(g, (x,)), N.elements[N.transition[i][x]])
            assert act_word(g, (x,)) == (N.output[i][x],)
    for i, g in enumerate(N.elements):
        for h in N.elements[i + 1:]:
            assert not equal(g, h)


@pytest.mark.parametrize("name", ["adding-machine", "z2m1", "z2m2"])
def test_deep_restrictions_of_squares_fall_in_nucleus(name):
    rep = compute_nucleus(preset_presentation(name))
    N = rep.nucleus
    D = rep.iterations + 2
    for g in N.pres.generators():
        for v in all_words(D, N.pres.degree):
            assert N.index_of(restrict(g * g, v)) is not None


def test_moore_diagram_adding_machine():
    N = nucleus("adding-machine")
    M = moore_diagram(N)
    t = N.labels().index("tau")
    e = N.labels().index("1")
    assert M.transition[t] == (e, t) and M.output[t] == (1, 0)
    dot = M.to_dot()
    assert dot.count("->") == 6 and '"0|1"' in dot


def test_moore_diagram_z2m2_state_b():
    N = nucleus("z2m2")
    M = moore_diagram(N)
    b, a = N.labels().index("b"), N.labels().index("a")
    assert M.transition[b] == (b, a) and M.output[b] == (0, 1)
    assert len(M.labels) == 3


def test_moore_diagram_trivial():
    M = moore_diagram(nucleus("trivial"))
    assert M.transition == ((0, 0),) and M.output == ((0, 1),)


@pytest.mark.parametrize("name", ["z2m1", "z2m2", "adding-machine"])
def test_moore_diagram_simulates_action(name):
    N = nucleus(name)
    M = moore_diagram(N)
    for i, g in enumerate(N.elements):
        for v in all_words(6, N.pres.degree):
            assert M.run(i, v) == act_word(g, v)


def test_contraction_estimates():
    assert estimate_contraction_coefficient(preset_presentation("adding-machine")) == pytest.approx(0.5, abs=0.05)
    assert estimate_contraction_coefficient(preset_presentation("trivial")) == 0.0
    assert estimate_contraction_coefficient(preset_presentation("z2m1")) < 1


def test_wordproblem_examples():
    N = nucleus("adding-machine")
    P = N.pres
    assert wordproblem_contracting(P.word("tau tau tau^-1 tau^-1"), N)
    N1 = nucleus("z2m1")
    P1 = N1.pres
    assert wordproblem_contracting(P1.word("a^-1 b^-1 a b b^-1 b^-1 a^-1 b a b"), N1)
    assert not wordproblem_contracting(P1.word("a b"), N1)


RELATORS = {"z2m1": "a^-1 b^-1 a b b^-1 b^-1 a^-1 b a b", "z2m2": "a a", "adding-machine": "tau tau^-1"}


@pytest.mark.parametrize("name", ["z2m1", "z2m2", "adding-machine"])
def test_wordproblem_agrees_with_bisimulation(name):
    N = nucleus(name)
    P = N.pres
    r = P.word(RELATORS[name])
    rng = random.Random(7)
    trivial = 0
    for _ in range(500):
        g = random_word(P, rng.randint(0, 20), rng)
        if rng.random() < 0.3:
            w = random_word(P, rng.randint(0, 6), rng)
            g = w * r * w.inverse()
        expected = is_identity(g)
        trivial += expected
        assert wordproblem_contracting(g, N) == expected
    assert trivial > 50


def test_budget_exceeded_is_reported():
    rep = compute_nucleus(preset_presentation("z2m1"), max_set_size=3)
    assert rep.status == "budget-exceeded" and rep.nucleus is None
