"""Contraction analysis: nucleus, Moore diagram, contraction estimate, fast word problem."""

from __future__ import annotations

import math
import random
from collections import deque
from dataclasses import dataclass, field

import networkx as nx
import numpy as np

from .core import (
    DEFAULT_STATE_BUDGET,
    GroupWord,
    MooreAutomaton,
    Presentation,
    _act_letters,
    act_letter,
    equal,
    free_reduce,
    invert,
    invert_letters,
    is_identity,
    permutation_on_level,
)
from .errors import BudgetExceeded, SelfSimError

SIGNATURE_LEVEL = 6


def _word_key(word):
    return (len(word), tuple((g, 0 if e == 1 else 1) for g, e in word))


class _Registry:
    """Canonical store of elements, deduplicated by group equality.

    Elements are bucketed by their action on a fixed level; ``equal`` only
    runs inside a bucket.  Each stored element keeps its shortlex-least
    representative word.
    """

    def __init__(self, pres: Presentation, max_size: int, budget_states: int):
        self.pres = pres
        self.max_size = max_size
        self.budget_states = budget_states
        size = pres.degree**SIGNATURE_LEVEL
        self.level = SIGNATURE_LEVEL if size <= 4096 else max(1, int(math.log(4096, pres.degree)))
        self.words: list = []
        self.buckets: dict = {}
        self.by_word: dict = {}
        self.rest: dict = {}

    def add(self, word: tuple) -> int:
        word = free_reduce(word)
        hit = self.by_word.get(word)
        if hit is not None:
            return hit
        g = GroupWord(self.pres, word)
        sig = permutation_on_level(g, self.level).tobytes()
        bucket = self.buckets.setdefault(sig, [])
        for idx in bucket:
            if equal(g, GroupWord(self.pres, self.words[idx]), self.budget_states):
                if _word_key(word) < _word_key(self.words[idx]):
                    del self.by_word[self.words[idx]]
                    self.words[idx] = word
                self.by_word[word] = idx
                return idx
        if len(self.words) >= self.max_size:
            raise BudgetExceeded(f"candidate set exceeded {self.max_size} elements", partial=len(self.words))
        idx = len(self.words)
        self.words.append(word)
        bucket.append(idx)
        self.by_word[word] = idx
        return idx

    def restrictions(self, idx: int) -> tuple:
        hit = self.rest.get(idx)
        if hit is None:
            outs = []
            targets = []
            for x in range(self.pres.degree):
                y, r = _act_letters(self.pres, self.words[idx], x)
                outs.append(y)
                targets.append(self.add(r))
            hit = (tuple(targets), tuple(outs))
            self.rest[idx] = hit
        return hit

    def closure(self, seeds, max_depth: int) -> set:
        seen = set(seeds)
        frontier = list(seen)
        for _ in range(max_depth):
            nxt = []
            for idx in frontier:
                for r in self.restrictions(idx)[0]:
                    if r not in seen:
                        seen.add(r)
                        nxt.append(r)
            frontier = nxt
            if not frontier:
                return seen
        raise BudgetExceeded(f"restriction closure did not terminate within depth {max_depth}",
                             partial=len(seen))

    def inverse(self, idx: int) -> int:
        return self.add(invert_letters(self.words[idx]))


def _recurrent(reg: _Registry, states: set) -> set:
    """States on a directed cycle of the restriction digraph, or reachable from one."""
    graph = nx.DiGraph()
    graph.add_nodes_from(states)
    for s in states:
        for r in reg.restrictions(s)[0]:
            graph.add_edge(s, r)
    cyclic = set()
    for comp in nx.strongly_connected_components(graph):
        if len(comp) > 1 or any(graph.has_edge(s, s) for s in comp):
            cyclic |= comp
    out = set(cyclic)
    for s in cyclic:
        out |= nx.descendants(graph, s)
    return out


@dataclass(frozen=True)
class Nucleus:
    """Finite set of canonical elements closed under restriction and inversion.

    ``transition[i][x]`` is the index of ``elements[i]|_x`` and
    ``output[i][x]`` is ``x^{elements[i]}``.
    """

    pres: Presentation
    elements: tuple
    transition: tuple
    output: tuple
    identity_index: int
    _lookup: dict = field(default_factory=dict, compare=False, repr=False, hash=False)

    def __len__(self):
        return len(self.elements)

    def labels(self) -> list:
        return [str(g) for g in self.elements]

    def index_of(self, g: GroupWord):
        """Index of the nucleus element equal to ``g``, or ``None``."""
        hit = self._lookup.get(g.word)
        if hit is not None or g.word in self._lookup:
            return hit
        result = None
        for i, h in enumerate(self.elements):
            if equal(g, h):
                result = i
                break
        self._lookup[g.word] = result
        return result


@dataclass
class ContractionReport:
    status: str  # "contracting" or "budget-exceeded"
    nucleus: Nucleus | None
    iterations: int
    peak_size: int
    rho_estimate: float | None
    partial: list = field(default_factory=list)
    message: str = ""

    @property
    def contracting(self) -> bool:
        return self.status == "contracting"


def _build_nucleus(reg: _Registry, states: set) -> Nucleus:
    order = sorted(states, key=lambda i: _word_key(reg.words[i]))
    pos = {s: k for k, s in enumerate(order)}
    elements = tuple(GroupWord(reg.pres, reg.words[s]) for s in order)
    trans = tuple(tuple(pos[r] for r in reg.restrictions(s)[0]) for s in order)
    outs = tuple(reg.restrictions(s)[1] for s in order)
    ident = pos[reg.add(())]
    return Nucleus(reg.pres, elements, trans, outs, ident)


def compute_nucleus(
    pres: Presentation,
    max_set_size: int = 5000,
    max_rounds: int = 50,
    depth_per_round: int = 16,
    budget_states: int = DEFAULT_STATE_BUDGET,
    estimate_rho: bool = True,
    seed: int = 0,
) -> ContractionReport:
    """Semi-algorithm for the nucleus of a contracting presentation.

    Starts from the recurrent part of the restriction closure of the
    generators, their inverses and the identity, then repeatedly adds the
    recurrent part of the restriction closure of all pairwise products until
    the set stops changing.  Failure to stabilise within the budgets is
    reported as ``budget-exceeded``; non-contraction is never claimed.
    """
    reg = _Registry(pres, max_set_size, budget_states)
    peak = 0
    current: set = set()
    rounds = 0
    try:
        seeds = {reg.add(())}
        for g in range(pres.ngens):
            seeds.add(reg.add(((g, 1),)))
            seeds.add(reg.add(((g, -1),)))
        closed = reg.closure(seeds, depth_per_round)
        peak = len(closed)
        current = _recurrent(reg, closed)
        current |= {reg.inverse(s) for s in current}
        current = reg.closure(current, depth_per_round)
        stable = False
        for rounds in range(1, max_rounds + 1):
            products = set(current)
            for s in sorted(current):
                for t in sorted(current):
                    products.add(reg.add(reg.words[s] + reg.words[t]))
            closed = reg.closure(products, depth_per_round)
            peak = max(peak, len(closed))
            nxt = _recurrent(reg, closed)
            nxt |= {reg.inverse(s) for s in nxt}
            nxt = reg.closure(nxt, depth_per_round)
            if nxt == current:
                stable = True
                break
            current = nxt
        if not stable:
            raise BudgetExceeded(f"no stabilisation within {max_rounds} rounds", partial=len(current))
    except BudgetExceeded as exc:
        partial = [GroupWord(pres, reg.words[s]) for s in sorted(current)]
        return ContractionReport("budget-exceeded", None, rounds, max(peak, len(reg.words)), None,
                                 partial, str(exc))
    nucleus = _build_nucleus(reg, current)
    rho = estimate_contraction_coefficient(pres, samples=8, depth=5, seed=seed) if estimate_rho else None
    return ContractionReport("contracting", nucleus, rounds, peak, rho)


def moore_diagram(nucleus: Nucleus) -> MooreAutomaton:
    return MooreAutomaton(tuple(nucleus.labels()), nucleus.pres.degree, nucleus.transition, nucleus.output)


def random_word(pres: Presentation, length: int, rng: random.Random) -> GroupWord:
    """Uniform random freely reduced word of exactly ``length`` letters."""
    letters = [(g, e) for g in range(pres.ngens) for e in (1, -1)]
    out: list = []
    while len(out) < length:
        g, e = rng.choice(letters)
        if out and out[-1] == (g, -e):
            continue
        out.append((g, e))
    return GroupWord(pres, out)


def estimate_contraction_coefficient(pres: Presentation, samples: int = 20, depth: int = 6,
                                     length: int | None = None, seed: int = 0) -> float:
    """Empirical, upper-biased estimate of the contraction coefficient.

    For random words ``g`` the worst-case ratio ``max_{|v|=n} |g|_v| / |g|``
    is recorded for ``n = 1..depth``; the estimate is ``exp`` of the slope of
    a least-squares fit of ``log`` ratio against ``n``.  Returns ``0.0`` when
    every restriction at some level is trivial.
    """
    rng = random.Random(seed)
    length = length or max(64, 16 * pres.degree**depth)
    worst = np.zeros(depth)
    for _ in range(samples):
        g = random_word(pres, length, rng)
        level = {g.word}
        for n in range(depth):
            nxt = set()
            for w in level:
                for x in range(pres.degree):
                    nxt.add(_act_letters(pres, w, x)[1])
            level = nxt
            worst[n] = max(worst[n], max(len(w) for w in level) / len(g))
    if np.any(worst == 0):
        return 0.0
    n = np.arange(1, depth + 1)
    slope = np.polyfit(n, np.log(worst), 1)[0]
    return float(math.exp(slope))


def wordproblem_contracting(g: GroupWord, nucleus: Nucleus, budget: int = DEFAULT_STATE_BUDGET) -> bool:
    """Identity test accelerated by the nucleus.

    Once every letter of a state is a nucleus element, the state becomes a
    tuple of nucleus indices.  Restriction and output are then table lookups,
    and adjacent factors whose product is again a nucleus element are merged,
    so states shrink as the action contracts.  Letters outside the nucleus are
    handled by ordinary word restriction until they fall into it.
    """
    if g.pres is not nucleus.pres and g.pres != nucleus.pres:
        raise SelfSimError("element and nucleus come from different presentations")
    pres = g.pres
    d = pres.degree
    letter_index = {}
    for gen in range(pres.ngens):
        for e in (1, -1):
            letter_index[(gen, e)] = nucleus.index_of(GroupWord(pres, ((gen, e),)))
    ident = nucleus.identity_index
    trans, outs = nucleus.transition, nucleus.output
    pair_cache: dict = {}

    def merge(i, j):
        key = (i, j)
        if key not in pair_cache:
            pair_cache[key] = nucleus.index_of(nucleus.elements[i] * nucleus.elements[j])
        return pair_cache[key]

    def normalise(idx):
        out: list = []
        for i in idx:
            if i == ident:
                continue
            out.append(i)
            while len(out) >= 2:
                m = merge(out[-2], out[-1])
                if m is None:
                    break
                out[-2:] = [] if m == ident else [m]
        return ("n", tuple(out))

    def to_state(word):
        if all(letter_index[l] is not None for l in word):
            return normalise(letter_index[l] for l in word)
        return ("w", word)

    start = to_state(g.word)
    seen = {start}
    stack = [start]
    while stack:
        kind, body = stack.pop()
        if not body:
            continue
        for x in range(d):
            if kind == "n":
                y = x
                nxt = []
                for i in body:
                    nxt.append(trans[i][y])
                    y = outs[i][y]
                child = normalise(nxt)
            else:
                y, r = _act_letters(pres, body, x)
                child = to_state(r)
            if y != x:
                return False
            if child not in seen:
                if len(seen) >= budget:
                    return is_identity(g, budget)
                seen.add(child)
                stack.append(child)
    return True
