"""Limit-space data: Schreier graphs, asymptotic equivalence, digit-tile clouds."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import networkx as nx
import numpy as np
import sympy
from scipy.spatial import cKDTree

from .core import DEFAULT_LEVEL_BUDGET, Presentation, lex_word, permutation_on_level
from .errors import BudgetExceeded, SelfSimError
from .nucleus import Nucleus
from .virtual_endo import LatticeGroup, exact_inverse


# ------------------------------------------------------------ sequences


@dataclass(frozen=True)
class SequenceSpec:
    """Eventually periodic left-infinite sequence ``...ppp w``.

    The rightmost letter of ``preperiod`` is ``x_1``; after the preperiod the
    period repeats leftwards, so ``x_{m+1}`` is the last letter of ``period``.
    """

    period: tuple
    preperiod: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "period", tuple(int(x) for x in self.period))
        object.__setattr__(self, "preperiod", tuple(int(x) for x in self.preperiod))
        if not self.period:
            raise SelfSimError("period must be non-empty")

    @classmethod
    def parse(cls, text: str) -> "SequenceSpec":
        """``"<preperiod>:<period>"`` with digit letters, e.g. ``"10:1"`` for ``...11110``."""
        pre, sep, per = text.strip().partition(":")
        if not sep:
            raise SelfSimError(f"sequence {text!r} must have the form <preperiod>:<period>")
        if not all(ch.isdigit() for ch in pre + per):
            raise SelfSimError(f"sequence {text!r} may only contain digits")
        return cls(tuple(int(ch) for ch in per), tuple(int(ch) for ch in pre))

    def letter(self, i: int) -> int:
        """``x_i`` for ``i >= 1``."""
        m = len(self.preperiod)
        if i <= m:
            return self.preperiod[m - i]
        L = len(self.period)
        return self.period[L - 1 - (i - m - 1) % L]

    def shift(self) -> "SequenceSpec":
        """Drop ``x_1``."""
        if self.preperiod:
            return SequenceSpec(self.period, self.preperiod[:-1])
        return SequenceSpec(self.period[-1:] + self.period[:-1], ())

    def check_alphabet(self, degree: int):
        if any(not 0 <= x < degree for x in self.period + self.preperiod):
            raise SelfSimError(f"sequence letter out of range for alphabet size {degree}")

    def __str__(self):
        return "".join(map(str, self.preperiod)) + ":" + "".join(map(str, self.period))


def asymptotic_equivalent(nucleus: Nucleus, s1: SequenceSpec, s2: SequenceSpec) -> bool:
    """Decide asymptotic equivalence of two eventually periodic sequences.

    They are equivalent iff the Moore diagram of the nucleus has a
    left-infinite path ``... e_2 e_1`` with ``e_i`` labelled ``(x_i, y_i)``,
    where ``e_i`` runs from a state ``s`` to ``s|_{x_i}`` and ``x_i^s = y_i``.
    Over the periodic part the search lives on the finite graph of
    (state, phase) pairs, where an infinite backward path exists exactly at
    nodes reachable from a cycle.  Those nodes are then pushed through the
    preperiod.
    """
    if not isinstance(nucleus, Nucleus):
        raise SelfSimError("asymptotic equivalence needs a computed nucleus")
    d = nucleus.pres.degree
    s1.check_alphabet(d)
    s2.check_alphabet(d)
    m = max(len(s1.preperiod), len(s2.preperiod))
    L = math.lcm(len(s1.period), len(s2.period))
    trans, outs = nucleus.transition, nucleus.output
    xs = [s1.letter(m + 1 + k) for k in range(L)]
    ys = [s2.letter(m + 1 + k) for k in range(L)]

    graph = nx.DiGraph()
    valid = [(s, k) for s in range(len(nucleus)) for k in range(L) if outs[s][xs[k]] == ys[k]]
    graph.add_nodes_from(valid)
    for s, k in valid:
        nxt = (trans[s][xs[k]], (k - 1) % L)
        if nxt in graph:
            graph.add_edge((s, k), nxt)

    cyclic = set()
    for comp in nx.strongly_connected_components(graph):
        if len(comp) > 1 or any(graph.has_edge(n, n) for n in comp):
            cyclic |= comp
    ancestral = set(cyclic)
    for n in cyclic:
        ancestral |= nx.descendants(graph, n)
    current = {trans[s][xs[0]] for s, k in ancestral if k == 0}
    for i in range(m, 0, -1):
        x, y = s1.letter(i), s2.letter(i)
        current = {trans[s][x] for s in current if outs[s][x] == y}
    return bool(current)



# ------------------------------------------------------------ Schreier graphs


@dataclass
class LevelGraph:
    """Action graph of the generators on level ``n``: edge ``v -> v^g`` per generator."""

    level: int
    degree: int
    names: tuple
    perms: tuple  # perms[i][lex(v)] = lex(v^{g_i})

    @property
    def size(self) -> int:
        return self.degree**self.level

    def edges(self):
        for i, name in enumerate(self.names):
            for v, w in enumerate(self.perms[i]):
                yield v, int(w), name

    def vertex_label(self, v: int) -> str:
        return "".join(map(str, lex_word(v, self.level, self.degree))) or "e"

    def simple_graph(self) -> nx.Graph:
        """Underlying undirected graph without loops or multiple edges."""
        g = nx.Graph()
        g.add_nodes_from(range(self.size))
        g.add_edges_from((v, w) for v, w, _ in self.edges() if v != w)
        return g

    def to_csv(self, fh) -> None:
        fh.write("src,dst,gen\n")
        for v, w, name in self.edges():
            fh.write(f"{v},{w},{name}\n")

    def to_dot(self) -> str:
        merged: dict = {}
        for v, w, name in self.edges():
            merged.setdefault((v, w), []).append(name)
        lines = [f"digraph level{self.level} {{"]
        for v in range(self.size):
            lines.append(f'  {v} [label="{self.vertex_label(v)}"];')
        for (v, w), names in merged.items():
            lines.append(f'  {v} -> {w} [label="{",".join(names)}"];')
        lines.append("}")
        return "\n".join(lines) + "\n"


def schreier_graph(pres: Presentation, n: int, budget: int = DEFAULT_LEVEL_BUDGET) -> LevelGraph:
    if n < 0:
        raise SelfSimError("level must be non-negative")
    if pres.degree**n > budget:
        raise BudgetExceeded(f"level {n} has more than {budget} vertices", partial=0)
    perms = tuple(permutation_on_level(g, n, budget) for g in pres.generators())
    return LevelGraph(n, pres.degree, pres.names, perms)


# ------------------------------------------------------------ digit tiles


@dataclass
class PointCloud:
    """Partial sums ``sum_{n=1..N} A^-n r_{x_n}`` for all words ``x_N ... x_1``.

    Row ``i`` belongs to the word ``lex_word(i, N)`` written ``x_N ... x_1``.
    ``numerators`` are the exact integer vectors ``A^N`` times the point.
    """

    depth: int
    degree: int
    points: np.ndarray
    numerators: np.ndarray

    def word(self, i: int) -> tuple:
        return lex_word(i, self.depth, self.degree)

    def to_csv(self, fh) -> None:
        dim = self.points.shape[1]
        sep = "" if self.degree <= 10 else "."
        fh.write(",".join(f"x{k + 1}" for k in range(dim)) + ",word\n")
        for i, p in enumerate(self.points):
            w = sep.join(map(str, self.word(i)))
            fh.write(",".join(repr(float(c)) for c in p) + f",{w}\n")


def _int_array(rows, big: bool) -> np.ndarray:
    return np.array(rows, dtype=object if big else np.int64)


def _tile_numerators(G: LatticeGroup, N: int):
    """Integer numerators for depths ``0..N`` (list) and the powers ``A^k``."""
    A = G.A
    bound = max(abs(int(x)) for x in A) * G.n
    big = bound**N * max(1, max(abs(c) for r in G.digits for c in r)) * G.det**N > 2**60
    out = [_int_array([[0] * G.n], big)]
    power = sympy.eye(G.n)
    for _ in range(N):
        shifted = _int_array([[int(c) for c in power * sympy.Matrix(r)] for r in G.digits], big)
        prev = out[-1]
        out.append((prev[:, None, :] + shifted[None, :, :]).reshape(-1, G.n))
        power = power * A
    return out


def _scaled(num: np.ndarray, G: LatticeGroup, N: int) -> np.ndarray:
    inv = exact_inverse(G.A**N) if N else [[Fraction(int(i == j)) for j in range(G.n)] for i in range(G.n)]
    M = np.array([[float(x) for x in row] for row in inv])
    return np.asarray(num, dtype=float) @ M.T


def tile_cloud(G: LatticeGroup, N: int) -> PointCloud:
    """Depth-``N`` digit-tile cloud; refuses non-expanding matrices."""
    if not isinstance(G, LatticeGroup):
        raise SelfSimError("tile clouds need a lattice preset")
    if not G.is_expanding():
        raise SelfSimError("matrix is not expanding (some eigenvalue has modulus <= 1)")
    if N < 0:
        raise SelfSimError("depth must be non-negative")
    num = _tile_numerators(G, N)[-1]
    return PointCloud(N, G.det, _scaled(num, G, N), num)


@dataclass
class TileCheckReport:
    exact: bool
    hausdorff: float
    bound: float
    ok: bool

    def __str__(self):
        return (f"provenance {'exact' if self.exact else 'BROKEN'}; "
                f"one-sided Hausdorff {self.hausdorff:.6g} (tolerance {self.bound:.6g}) "
                f"{'OK' if self.ok else 'FAIL'}")


def tile_ifs_check(cloud: PointCloud, G: LatticeGroup, eps: float | None = None) -> TileCheckReport:
    """Check that the cloud is the union of ``A^-1(previous cloud + r_x)``.

    The identity is verified exactly on the integer numerators: row
    ``i d + x`` of depth ``N`` equals row ``i`` of depth ``N - 1`` plus
    ``A^{N-1} r_x``.  Also reports the one-sided Hausdorff distance from the
    depth ``N`` cloud to the depth ``N - 1`` cloud; ``ok`` requires it to be at
    most ``eps`` (default ``||A^-N|| max |r_x|``).
    """
    N = cloud.depth
    if N < 1:
        raise SelfSimError("need depth at least 1")
    nums = _tile_numerators(G, N)
    exact = bool(np.array_equal(nums[-1], cloud.numerators))
    prev = _scaled(nums[-2], G, N - 1)
    if prev.shape[0] == 1:
        dist = np.linalg.norm(cloud.points - prev[0], axis=1)
    else:
        dist, _ = cKDTree(prev).query(cloud.points)
    h = float(dist.max())
    if eps is None:
        Ainv = np.array([[float(x) for x in row] for row in exact_inverse(G.A**N)])
        eps = float(np.linalg.norm(Ainv, 2) * max(np.linalg.norm(r) for r in G.digits)) + 1e-12
    return TileCheckReport(exact, h, eps, exact and h <= eps)
