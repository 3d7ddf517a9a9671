"""Self-similar group presentations and element arithmetic on the tree X*.

Conventions used throughout the package:

* Letters are the integers ``0..d-1``; a word is a tuple of letters whose
  leftmost entry is the level-1 letter.  The parent of a word is obtained by
  dropping its last letter.
* Groups act on the right and products compose left to right: in ``g*h`` the
  element ``g`` acts first, so ``(v^g)^h = v^(gh)`` and
  ``(gh)|_v = (g|_v)(h|_{v^g})``.
* A generator ``g`` is stored as a wreath recursion: a permutation of the
  alphabet and, for every letter ``x``, the restriction ``g|_x`` as a word in
  the generators.  Restriction tuples are indexed by the *input* letter.
* The lexicographic index of a word treats the leftmost letter as the most
  significant digit.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import BudgetExceeded, ParseError, PresentationMismatch, SelfSimError

Letter = tuple  # (generator index, exponent +1/-1)

DEFAULT_STATE_BUDGET = 10**6
DEFAULT_LEVEL_BUDGET = 2**24

_IDENT = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")
_TOKEN = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*)(?:\^(-?\d+))?$")


def free_reduce(letters: Iterable[Letter]) -> tuple:
    out: list = []
    for gen, e in letters:
        if out and out[-1][0] == gen and out[-1][1] == -e:
            out.pop()
        else:
            out.append((gen, e))
    return tuple(out)


def invert_letters(letters: Sequence[Letter]) -> tuple:
    return tuple((gen, -e) for gen, e in reversed(letters))


def parse_cycles(text: str, degree: int, line=None) -> tuple:
    """Parse cycle notation such as ``(0 1)(2 3)`` or ``()`` into an image array."""
    text = text.strip()
    images = list(range(degree))
    seen: set = set()
    if not re.fullmatch(r"(\(\s*[\d\s,]*\)\s*)+", text):
        raise ParseError(f"malformed permutation {text!r}", line)
    for body in re.findall(r"\(([^)]*)\)", text):
        cycle = [int(tok) for tok in re.split(r"[\s,]+", body.strip()) if tok]
        for x in cycle:
            if not 0 <= x < degree:
                raise ParseError(f"letter {x} out of range 0..{degree - 1}", line)
            if x in seen:
                raise ParseError(f"permutation {text!r} is not bijective (letter {x} repeated)", line)
            seen.add(x)
        for i, x in enumerate(cycle):
            images[x] = cycle[(i + 1) % len(cycle)]
    return tuple(images)


def format_cycles(perm: Sequence[int]) -> str:
    seen = set()
    parts = []
    for start in range(len(perm)):
        if start in seen or perm[start] == start:
            continue
        cycle = [start]
        seen.add(start)
        x = perm[start]
        while x != start:
            cycle.append(x)
            seen.add(x)
            x = perm[x]
        parts.append("(" + " ".join(map(str, cycle)) + ")")
    return "".join(parts) or "()"


@dataclass(frozen=True)
class Presentation:
    """A finitely generated self-similar group given by wreath recursion.

    ``perms[g]`` is the action of generator ``g`` on the first level and
    ``restrictions[g][x]`` is ``g|_x`` as a reduced tuple of letters.
    """

    degree: int
    names: tuple
    perms: tuple
    restrictions: tuple
    _cache: dict = field(default_factory=dict, compare=False, repr=False, hash=False)

    def __post_init__(self):
        if self.degree < 2:
            raise SelfSimError("alphabet size must be at least 2")
        if len(set(self.names)) != len(self.names):
            raise SelfSimError("generator names must be distinct")
        if not (len(self.perms) == len(self.restrictions) == len(self.names)):
            raise SelfSimError("every generator needs a permutation and restrictions")
        for name, perm, rest in zip(self.names, self.perms, self.restrictions):
            if sorted(perm) != list(range(self.degree)):
                raise SelfSimError(f"permutation of {name} is not a bijection of the alphabet")
            if len(rest) != self.degree:
                raise SelfSimError(f"generator {name} needs exactly {self.degree} restrictions")
            for w in rest:
                for gen, e in w:
                    if not 0 <= gen < len(self.names) or e not in (1, -1):
                        raise SelfSimError(f"restriction of {name} references an unknown generator")
        inv = tuple(tuple(int(i) for i in np.argsort(p)) for p in self.perms)
        self._cache["inv_perms"] = inv

    @property
    def ngens(self) -> int:
        return len(self.names)

    @property
    def inv_perms(self) -> tuple:
        return self._cache["inv_perms"]

    def identity(self) -> "GroupWord":
        return GroupWord(self, ())

    def gen(self, name: str) -> "GroupWord":
        try:
            return GroupWord(self, ((self.names.index(name), 1),))
        except ValueError:
            raise SelfSimError(f"unknown generator {name!r}") from None

    def generators(self) -> list:
        return [GroupWord(self, ((i, 1),)) for i in range(self.ngens)]

    def word(self, text: str) -> "GroupWord":
        """Parse ``"a b^-1 1 c^2"`` into a reduced element."""
        return GroupWord(self, parse_word(text, self.names))

    def __str__(self):
        return format_presentation(self)


def parse_word(text: str, names: Sequence[str], line=None) -> tuple:
    letters = []
    for tok in re.split(r"[\s*·]+", text.strip()):
        if not tok or tok == "1":
            continue
        m = _TOKEN.match(tok)
        if not m:
            raise ParseError(f"malformed word token {tok!r}", line)
        name, exp = m.group(1), int(m.group(2) or 1)
        if name not in names:
            raise ParseError(f"undeclared generator {name!r}", line)
        gen = names.index(name)
        sign = 1 if exp > 0 else -1
        letters.extend([(gen, sign)] * abs(exp))
    return free_reduce(letters)


def format_word(letters: Sequence[Letter], names: Sequence[str]) -> str:
    if not letters:
        return "1"
    return " ".join(names[g] if e == 1 else f"{names[g]}^-1" for g, e in letters)


class GroupWord:
    """An element: a freely reduced word over the generators of a presentation.

    ``==`` and ``hash`` are syntactic.  Use :func:`equal` for equality of the
    tree automorphisms.
    """

    __slots__ = ("pres", "word")

    def __init__(self, pres: Presentation, word: Iterable[Letter] = ()):
        self.pres = pres
        self.word = free_reduce(word)

    def __mul__(self, other: "GroupWord") -> "GroupWord":
        return multiply(self, other)

    def __pow__(self, k: int) -> "GroupWord":
        base = self if k >= 0 else invert(self)
        out = self.pres.identity()
        for _ in range(abs(k)):
            out = out * base
        return out

    def inverse(self) -> "GroupWord":
        return invert(self)

    def __len__(self):
        return len(self.word)

    def __eq__(self, other):
        return isinstance(other, GroupWord) and self.word == other.word and self.pres == other.pres

    def __hash__(self):
        return hash(self.word)

    def __str__(self):
        return format_word(self.word, self.pres.names)

    def __repr__(self):
        return f"GroupWord({str(self)!r})"


def _same(g: GroupWord, h: GroupWord):
    if g.pres is not h.pres and g.pres != h.pres:
        raise PresentationMismatch("elements belong to different presentations")


def multiply(g: GroupWord, h: GroupWord) -> GroupWord:
    _same(g, h)
    return GroupWord(g.pres, g.word + h.word)


def invert(g: GroupWord) -> GroupWord:
    return GroupWord(g.pres, invert_letters(g.word))


def commutator(g: GroupWord, h: GroupWord) -> GroupWord:
    """``[g, h] = g^-1 h^-1 g h``."""
    return invert(g) * invert(h) * g * h


def _act_letters(pres: Presentation, word: tuple, x: int):
    perms, inv_perms, rests = pres.perms, pres.inv_perms, pres.restrictions
    out: list = []
    for gen, e in word:
        if e == 1:
            piece = rests[gen][x]
            x = perms[gen][x]
        else:
            x = inv_perms[gen][x]
            piece = invert_letters(rests[gen][x])
        for letter in piece:
            if out and out[-1][0] == letter[0] and out[-1][1] == -letter[1]:
                out.pop()
            else:
                out.append(letter)
    return x, tuple(out)


def act_letter(g: GroupWord, x: int):
    """Return ``(x^g, g|_x)``."""
    if not 0 <= x < g.pres.degree:
        raise SelfSimError(f"letter {x} out of range")
    cache = g.pres._cache.setdefault("act", {})
    key = (g.word, x)
    hit = cache.get(key)
    if hit is None:
        hit = _act_letters(g.pres, g.word, x)
        if len(g.word) <= 6:
            cache[key] = hit
    y, rest = hit
    return y, GroupWord(g.pres, rest)


def act_word(g: GroupWord, v: Sequence[int]) -> tuple:
    """Image ``v^g``; consumes ``v`` left to right."""
    out = []
    state = g
    for i, x in enumerate(v):
        if not state.word:
            out.extend(v[i:])
            break
        y, state = act_letter(state, x)
        out.append(y)
    return tuple(out)


def restrict(g: GroupWord, v: Sequence[int]) -> GroupWord:
    """``g|_v``; ``restrict(g, ()) == g``."""
    state = g
    for x in v:
        if not state.word:
            break
        _, state = act_letter(state, x)
    return state


def equal(g: GroupWord, h: GroupWord, budget: int = DEFAULT_STATE_BUDGET) -> bool:
    """Decide whether ``g`` and ``h`` act identically on X*.

    Explores the restriction closure of ``g h^-1``; raises
    :class:`BudgetExceeded` rather than guessing when more than ``budget``
    distinct states are reached.
    """
    _same(g, h)
    pres = g.pres
    start = free_reduce(g.word + invert_letters(h.word))
    seen = {start}
    stack = [start]
    while stack:
        w = stack.pop()
        if not w:
            continue
        for x in range(pres.degree):
            y, r = _act_letters(pres, w, x)
            if y != x:
                return False
            if r not in seen:
                if len(seen) >= budget:
                    raise BudgetExceeded(f"equality check exceeded {budget} states", partial=len(seen))
                seen.add(r)
                stack.append(r)
    return True


def is_identity(g: GroupWord, budget: int = DEFAULT_STATE_BUDGET) -> bool:
    return equal(g, g.pres.identity(), budget)


def lex_index(v: Sequence[int], degree: int) -> int:
    i = 0
    for x in v:
        i = i * degree + x
    return i


def lex_word(i: int, n: int, degree: int) -> tuple:
    out = []
    for _ in range(n):
        i, x = divmod(i, degree)
        out.append(x)
    return tuple(reversed(out))


def all_words(n: int, degree: int):
    """Words of length ``n`` in lexicographic order."""
    return itertools.product(range(degree), repeat=n)


def _generator_level_perms(pres: Presentation, n: int) -> list:
    """Per-generator (forward, inverse) permutation arrays on level ``n``."""
    levels = pres._cache.setdefault("level_perms", {})
    if n in levels:
        return levels[n]
    if n == 0:
        one = np.zeros(1, dtype=np.int64)
        levels[0] = [(one, one) for _ in range(pres.ngens)]
        return levels[0]
    below = _generator_level_perms(pres, n - 1)
    size = pres.degree ** (n - 1)
    out = []
    for gen in range(pres.ngens):
        p = np.empty(size * pres.degree, dtype=np.int64)
        for x in range(pres.degree):
            sub = _compose_word(pres.restrictions[gen][x], below, size)
            p[x * size:(x + 1) * size] = pres.perms[gen][x] * size + sub
        inv = np.empty_like(p)
        inv[p] = np.arange(p.size)
        out.append((p, inv))
    levels[n] = out
    return out


def _compose_word(word, gen_perms, size):
    res = np.arange(size, dtype=np.int64)
    for gen, e in word:
        res = gen_perms[gen][0 if e == 1 else 1][res]
    return res


def permutation_on_level(g: GroupWord, n: int, budget: int = DEFAULT_LEVEL_BUDGET) -> np.ndarray:
    """Array ``p`` with ``p[lex(v)] = lex(v^g)`` for all ``v`` of length ``n``."""
    if n < 0:
        raise SelfSimError("level must be non-negative")
    size = g.pres.degree**n
    if size > budget:
        raise BudgetExceeded(f"level {n} has {size} vertices (budget {budget})")
    return _compose_word(g.word, _generator_level_perms(g.pres, n), size)


def parse_presentation(text: str) -> Presentation:
    """Parse the line-oriented presentation format::

        alphabet = 2
        gens = a b
        a : perm = (0 1) ; 0 -> b ; 1 -> 1
        b : perm = ()    ; 0 -> a ; 1 -> 1
    """
    degree = None
    names = None
    defs: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, rest = line.partition("=")
        if sep and key.strip() == "alphabet":
            try:
                degree = int(rest.strip())
            except ValueError:
                raise ParseError(f"alphabet size must be an integer, got {rest.strip()!r}", lineno) from None
            if degree < 2:
                raise ParseError("alphabet size must be at least 2", lineno)
            continue
        if sep and key.strip() == "gens":
            names = rest.split()
            if not names:
                raise ParseError("no generators declared", lineno)
            for nm in names:
                if not _IDENT.match(nm) or nm == "1":
                    raise ParseError(f"invalid generator name {nm!r}", lineno)
            if len(set(names)) != len(names):
                raise ParseError("duplicate generator name", lineno)
            continue
        name, colon, body = line.partition(":")
        if not colon:
            raise ParseError(f"cannot parse {line!r}", lineno)
        defs.setdefault(name.strip(), []).append((lineno, body))
    if degree is None:
        raise ParseError("missing 'alphabet = d' line")
    if names is None:
        raise ParseError("missing 'gens = ...' line")
    perms = []
    rests = []
    for name in names:
        if name not in defs:
            raise ParseError(f"generator {name!r} has no recursion line")
        if len(defs[name]) > 1:
            raise ParseError(f"generator {name!r} defined twice", defs[name][1][0])
        lineno, body = defs[name][0]
        fields = [f.strip() for f in body.split(";")]
        head = fields[0]
        m = re.fullmatch(r"perm\s*=\s*(.*)", head)
        if not m:
            raise ParseError(f"expected 'perm = ...' for generator {name!r}", lineno)
        perm = parse_cycles(m.group(1), degree, lineno)
        restr: dict = {}
        for f in fields[1:]:
            if not f:
                continue
            lhs, arrow, rhs = f.partition("->")
            if not arrow:
                raise ParseError(f"expected 'x -> word', got {f!r}", lineno)
            try:
                x = int(lhs.strip())
            except ValueError:
                raise ParseError(f"bad letter {lhs.strip()!r}", lineno) from None
            if not 0 <= x < degree:
                raise ParseError(f"letter {x} out of range 0..{degree - 1}", lineno)
            if x in restr:
                raise ParseError(f"restriction at letter {x} given twice", lineno)
            restr[x] = parse_word(rhs, names, lineno)
        missing = [x for x in range(degree) if x not in restr]
        if missing:
            raise ParseError(f"generator {name!r} lacks restrictions for letters {missing}", lineno)
        perms.append(perm)
        rests.append(tuple(restr[x] for x in range(degree)))
    unknown = set(defs) - set(names)
    if unknown:
        nm = sorted(unknown)[0]
        raise ParseError(f"undeclared generator {nm!r}", defs[nm][0][0])
    return Presentation(degree, tuple(names), tuple(perms), tuple(rests))


def format_presentation(pres: Presentation) -> str:
    lines = [f"alphabet = {pres.degree}", "gens = " + " ".join(pres.names)]
    for name, perm, rest in zip(pres.names, pres.perms, pres.restrictions):
        parts = [f"{name} : perm = {format_cycles(perm)}"]
        parts += [f"{x} -> {format_word(w, pres.names)}" for x, w in enumerate(rest)]
        lines.append(" ; ".join(parts))
    return "\n".join(lines) + "\n"


def wreath_notation(pres: Presentation) -> str:
    """Human-readable recursion, e.g. ``a = (b, 1)(0 1)``."""
    out = []
    for name, perm, rest in zip(pres.names, pres.perms, pres.restrictions):
        tup = ", ".join(format_word(w, pres.names) for w in rest)
        cyc = format_cycles(perm)
        out.append(f"{name} = ({tup})" + ("" if cyc == "()" else cyc))
    return "\n".join(out)


def relabel(pres: Presentation, sigma: Sequence[int]) -> Presentation:
    """Conjugate the action by the letter bijection ``x -> sigma[x]``."""
    d = pres.degree
    if sorted(sigma) != list(range(d)):
        raise SelfSimError("relabeling must be a permutation of the alphabet")
    perms = []
    rests = []
    for perm, rest in zip(pres.perms, pres.restrictions):
        new_perm = [0] * d
        new_rest = [()] * d
        for x in range(d):
            new_perm[sigma[x]] = sigma[perm[x]]
            new_rest[sigma[x]] = rest[x]
        perms.append(tuple(new_perm))
        rests.append(tuple(new_rest))
    return Presentation(d, pres.names, tuple(perms), tuple(rests))


def rename(pres: Presentation, names: Sequence[str]) -> Presentation:
    return Presentation(pres.degree, tuple(names), pres.perms, pres.restrictions)


@dataclass(frozen=True)
class MooreAutomaton:
    """Automaton with transition ``pi[q][x]`` and output ``lam[q][x]``."""

    labels: tuple
    degree: int
    transition: tuple
    output: tuple

    def run(self, state: int, v: Sequence[int]) -> tuple:
        out = []
        for x in v:
            out.append(self.output[state][x])
            state = self.transition[state][x]
        return tuple(out)

    def edges(self):
        for q in range(len(self.labels)):
            for x in range(self.degree):
                yield q, self.transition[q][x], x, self.output[q][x]

    def to_dot(self, name: str = "moore") -> str:
        lines = [f"digraph {name} {{"]
        for q, label in enumerate(self.labels):
            lines.append(f'  s{q} [label="{label}"];')
        for q, r, x, y in self.edges():
            lines.append(f'  s{q} -> s{r} [label="{x}|{y}"];')
        lines.append("}")
        return "\n".join(lines) + "\n"
