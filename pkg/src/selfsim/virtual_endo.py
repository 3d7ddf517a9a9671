"""Self-similar actions generated by a virtual endomorphism.

An action is determined by a homomorphism ``phi`` from a finite-index
subgroup ``Dom`` into the group, a right coset transversal ``r_x`` of
``Dom`` and conjugators ``h_x``:

    (x w)^g = y w^{h_x^-1 phi(r_x g r_y^-1) h_y}

where ``y`` is the unique letter with ``r_x g r_y^-1`` in ``Dom``.  Group
products follow the package convention (``g*h``: ``g`` first).
"""

from __future__ import annotations

import itertools
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np
import sympy

from .core import Presentation
from .errors import BudgetExceeded, InvalidTransversal, SelfSimError


class ConcreteGroup(ABC):
    """A group with computable arithmetic plus the data of a triple (phi, T, C).

    Elements must be hashable values, canonical so that ``is_equal`` agrees
    with ``==`` unless a subclass overrides it.
    """

    @abstractmethod
    def identity(self): ...

    @abstractmethod
    def multiply(self, g, h): ...

    @abstractmethod
    def invert(self, g): ...

    @abstractmethod
    def dom_contains(self, g) -> bool: ...

    @abstractmethod
    def phi_apply(self, g): ...

    @property
    @abstractmethod
    def transversal(self) -> list: ...

    @property
    def conjugators(self) -> list:
        return [self.identity()] * len(self.transversal)

    @property
    def degree(self) -> int:
        return len(self.transversal)

    def is_equal(self, g, h) -> bool:
        return g == h

    def format(self, g) -> str:
        return str(g)

    def phi(self, g):
        if not self.dom_contains(g):
            raise SelfSimError(f"{self.format(g)} is not in the domain of the virtual endomorphism")
        return self.phi_apply(g)

    def validate_transversal(self, index: int | None = None):
        """Pairwise coset distinctness; ``index`` (if known) checks coverage by counting."""
        T = self.transversal
        if index is not None and len(T) != index:
            raise InvalidTransversal(f"transversal has {len(T)} elements, subgroup index is {index}")
        for i, j in itertools.combinations(range(len(T)), 2):
            if self.dom_contains(self.multiply(T[i], self.invert(T[j]))):
                raise InvalidTransversal(
                    f"transversal elements {i} and {j} lie in the same coset of the domain")
        if len(self.conjugators) != len(T):
            raise InvalidTransversal("need one conjugator per transversal element")


def _letter_step(G: ConcreteGroup, g, x: int):
    T = G.transversal
    rx_g = G.multiply(T[x], g)
    hits = [y for y in range(len(T)) if G.dom_contains(G.multiply(rx_g, G.invert(T[y])))]
    if len(hits) != 1:
        raise InvalidTransversal(
            f"{'no' if not hits else 'several'} letters y with r_x g r_y^-1 in the domain "
            f"(x={x}, g={G.format(g)})")
    y = hits[0]
    C = G.conjugators
    inner = G.phi_apply(G.multiply(rx_g, G.invert(T[y])))
    return y, G.multiply(G.multiply(G.invert(C[x]), inner), C[y])


def triple_restriction(G: ConcreteGroup, g, x: int):
    """``(x^g, g|_x)`` for the action defined by the triple."""
    return _letter_step(G, g, x)


def act_via_triple(G: ConcreteGroup, g, v: Sequence[int]) -> tuple:
    out = []
    for x in v:
        if not 0 <= x < G.degree:
            raise SelfSimError(f"letter {x} out of range")
        y, g = _letter_step(G, g, x)
        out.append(y)
    return tuple(out)


def triple_level_permutation(G: ConcreteGroup, g, n: int, _memo: dict | None = None) -> np.ndarray:
    """Permutation of level ``n`` induced by ``g`` (lexicographic indices).

    Same recursion as :func:`act_via_triple`, memoised over restriction states.
    """
    memo = {} if _memo is None else _memo
    key = (g, n)
    hit = memo.get(key)
    if hit is not None:
        return hit
    if n == 0:
        out = np.zeros(1, dtype=np.int64)
    else:
        size = G.degree ** (n - 1)
        out = np.empty(size * G.degree, dtype=np.int64)
        for x in range(G.degree):
            y, r = _letter_step(G, g, x)
            out[x * size:(x + 1) * size] = y * size + triple_level_permutation(G, r, n - 1, memo)
    memo[key] = out
    return out


def closure_states(G: ConcreteGroup, gens: Sequence, budget: int = 10_000):
    """States reachable from ``gens`` under all restrictions, with their tables.

    Returns ``(states, transition, output)``.  Input generators come first in
    the order given, other states in discovery order.
    """
    states: list = []

    def find(g):
        for i, s in enumerate(states):
            if G.is_equal(g, s):
                return i
        return None

    for g in gens:
        if find(g) is None:
            states.append(g)
    trans: list = []
    outs: list = []
    i = 0
    while i < len(states):
        row_t, row_o = [], []
        for x in range(G.degree):
            y, r = _letter_step(G, states[i], x)
            j = find(r)
            if j is None:
                if len(states) >= budget:
                    raise BudgetExceeded(f"closure exceeded {budget} states", partial=len(states))
                states.append(r)
                j = len(states) - 1
            row_t.append(j)
            row_o.append(y)
        trans.append(tuple(row_t))
        outs.append(tuple(row_o))
        i += 1
    return states, trans, outs


def closure_presentation(G: ConcreteGroup, gens: Sequence, budget: int = 10_000,
                         prefix: str = "s") -> Presentation:
    """Finite automaton presentation of the states reachable from ``gens``.

    Generators are ``s0, s1, ...``: every input generator, then every other
    non-identity state.  The identity state is written ``1`` in restrictions.
    """
    states, trans, outs = closure_states(G, gens, budget)
    e = G.identity()
    n_inputs = len({i for i, s in enumerate(states) if any(G.is_equal(s, g) for g in gens)})
    keep = [i for i, s in enumerate(states) if i < n_inputs or not G.is_equal(s, e)]
    names = tuple(f"{prefix}{k}" for k in range(len(keep)))
    perms = []
    rests = []
    for i in keep:
        perms.append(tuple(outs[i]))
        rests.append(tuple(() if G.is_equal(states[j], e) else ((keep.index(j), 1),) for j in trans[i]))
    return Presentation(G.degree, names, tuple(perms), tuple(rests))


# ---------------------------------------------------------------- lattices


def _int_matrix(rows) -> sympy.Matrix:
    M = sympy.Matrix(rows)
    if M.rows != M.cols:
        raise SelfSimError("matrix must be square")
    if any(not x.is_integer for x in M):
        raise SelfSimError("matrix entries must be integers")
    return M


class IntegralSolver:
    """Exact integral solutions of ``M w = b`` via the adjugate: ``w = adj(M) b / det M``."""

    def __init__(self, M: sympy.Matrix):
        self.det = int(M.det())
        if self.det == 0:
            raise SelfSimError("matrix is singular")
        self.adj = [[int(x) for x in row] for row in M.adjugate().tolist()]

    def __call__(self, b) -> tuple | None:
        out = []
        for row in self.adj:
            q, r = divmod(sum(a * x for a, x in zip(row, b)), self.det)
            if r:
                return None
            out.append(q)
        return tuple(out)


def solve_integral(M: sympy.Matrix, b) -> tuple | None:
    """Exact solution of ``M w = b`` if it is integral, else ``None``."""
    return IntegralSolver(M)(b)


def residue_system(M: sympy.Matrix) -> list:
    """A complete residue system of Z^n / M Z^n inside the box ``[0, |det M|)^n``."""
    n = M.rows
    solve = IntegralSolver(M)
    det = abs(solve.det)
    reps: list = []
    for v in itertools.product(range(det), repeat=n):
        if all(solve([a - b for a, b in zip(v, r)]) is None for r in reps):
            reps.append(v)
            if len(reps) == det:
                break
    return reps


class LatticeGroup(ConcreteGroup):
    """Z^n with ``phi(a) = A^-1 a`` on ``Dom = A Z^n`` and the given digits.

    Elements are integer tuples; the group is written additively.
    """

    def __init__(self, matrix, digits=None):
        self.A = _int_matrix(matrix)
        self.n = self.A.rows
        self.det = abs(int(self.A.det()))
        if self.det <= 1:
            raise SelfSimError("need |det A| > 1")
        self._solve = IntegralSolver(self.A)
        if digits is None:
            digits = residue_system(self.A)
        self.digits = [tuple(int(c) for c in r) for r in digits]
        if any(len(r) != self.n for r in self.digits):
            raise SelfSimError("digit dimension does not match the matrix")
        self.validate_transversal(index=self.det)

    def identity(self):
        return (0,) * self.n

    def multiply(self, g, h):
        return tuple(a + b for a, b in zip(g, h))

    def invert(self, g):
        return tuple(-a for a in g)

    def dom_contains(self, g):
        return self._solve(g) is not None

    def phi_apply(self, g):
        w = self._solve(g)
        if w is None:
            raise SelfSimError(f"{g} is not in A Z^n")
        return w

    @property
    def transversal(self):
        return self.digits

    def format(self, g):
        return ",".join(map(str, g))

    def standard_generators(self):
        return [tuple(int(i == j) for j in range(self.n)) for i in range(self.n)]

    def eigenvalues(self):
        return np.linalg.eigvals(np.array(self.A.tolist(), dtype=float))

    def is_expanding(self, margin: float = 1e-9) -> bool:
        return bool(np.all(np.abs(self.eigenvalues()) > 1 + margin))


class HeisenbergGroup(ConcreteGroup):
    """Integer triples with ``(a,b,c)(a',b',c') = (a+a', b+b', c+c'+b a')``.

    ``phi(a,b,c) = (a/p, b/q, c/(pq))`` on ``Dom = pZ x qZ x pqZ``.
    """

    def __init__(self, p: int = 2, q: int = 2):
        if p < 2 or q < 2:
            raise SelfSimError("p and q must be at least 2")
        self.p, self.q = p, q
        self._T = [(a, b, c) for a in range(p) for b in range(q) for c in range(p * q)]
        self.validate_transversal(index=p * p * q * q)

    def identity(self):
        return (0, 0, 0)

    def multiply(self, g, h):
        return (g[0] + h[0], g[1] + h[1], g[2] + h[2] + g[1] * h[0])

    def invert(self, g):
        a, b, c = g
        return (-a, -b, a * b - c)

    def dom_contains(self, g):
        return g[0] % self.p == 0 and g[1] % self.q == 0 and g[2] % (self.p * self.q) == 0

    def phi_apply(self, g):
        return (g[0] // self.p, g[1] // self.q, g[2] // (self.p * self.q))

    @property
    def transversal(self):
        return self._T

    def format(self, g):
        return "({},{},{})".format(*g)

    def standard_generators(self):
        return [(1, 0, 0), (0, 1, 0)]


class LattesGroup(ConcreteGroup):
    """Affine maps ``z -> (-1)^k z + w`` with ``w`` in a lattice ``Gamma``.

    Elements are ``(k, m, n)`` meaning ``w = m e1 + n e2`` for the basis
    ``(e1, e2)``.  The product ``g*h`` is the map ``z -> h(g(z))``.  The
    virtual endomorphism divides the translation part by ``alpha`` on
    ``Dom = {w in alpha Gamma}``.
    """

    def __init__(self, basis=(1 + 0j, 1j), alpha: complex = 2 + 0j, tol: float = 1e-9):
        e1, e2 = complex(basis[0]), complex(basis[1])
        alpha = complex(alpha)
        if abs((e2 / e1).imag) < tol:
            raise SelfSimError("basis vectors are collinear")
        if abs(abs(alpha) - 1) < tol:
            raise SelfSimError("|alpha| must differ from 1")
        B = np.array([[e1.real, e2.real], [e1.imag, e2.imag]])
        cols = []
        for e in (e1, e2):
            img = alpha * e
            coords = np.linalg.solve(B, [img.real, img.imag])
            rounded = np.rint(coords)
            if np.max(np.abs(coords - rounded)) > tol:
                raise SelfSimError("alpha * Gamma is not contained in Gamma")
            cols.append([int(c) for c in rounded])
        self.basis = (e1, e2)
        self.alpha = alpha
        self.M = sympy.Matrix([[cols[0][0], cols[1][0]], [cols[0][1], cols[1][1]]])
        self.index = abs(int(self.M.det()))
        self._solve = IntegralSolver(self.M)
        self._T = [(0,) + tuple(r) for r in residue_system(self.M)]
        self.validate_transversal(index=self.index)

    def identity(self):
        return (0, 0, 0)

    def multiply(self, g, h):
        s = -1 if h[0] else 1
        return ((g[0] + h[0]) % 2, s * g[1] + h[1], s * g[2] + h[2])

    def invert(self, g):
        s = -1 if g[0] else 1
        return (g[0], -s * g[1], -s * g[2])

    def dom_contains(self, g):
        return self._solve(g[1:]) is not None

    def phi_apply(self, g):
        w = self._solve(g[1:])
        if w is None:
            raise SelfSimError(f"{g} is not in the domain")
        return (g[0],) + w

    @property
    def transversal(self):
        return self._T

    def as_complex(self, g) -> complex:
        return g[1] * self.basis[0] + g[2] * self.basis[1]

    def apply(self, g, z: complex) -> complex:
        return (-1) ** g[0] * z + self.as_complex(g)

    def format(self, g):
        return "({},{},{})".format(*g)

    def standard_generators(self):
        return [(1, 0, 0), (0, 1, 0), (0, 0, 1)]


def group_from_spec(spec: dict):
    """Build a preset group and its standard generators from a parameter dict."""
    kind = spec["kind"]
    if kind == "lattice":
        G = LatticeGroup(spec["matrix"], spec.get("digits"))
    elif kind == "heisenberg":
        G = HeisenbergGroup(spec.get("p", 2), spec.get("q", 2))
    elif kind == "lattes":
        G = LattesGroup(spec.get("basis", (1, 1j)), spec.get("alpha", 2))
    else:
        raise SelfSimError(f"unknown group kind {kind!r}")
    return G, G.standard_generators()


# ------------------------------------------------------- kernel / faithfulness


@dataclass
class FaithfulnessResult:
    status: str  # "faithful", "unfaithful", "unknown"
    witness: tuple | None = None
    reason: str = ""


def _in_power_lattice(A: sympy.Matrix, w, k: int) -> bool:
    return solve_integral(A**k, w) is not None


def lattice_faithfulness_check(G: LatticeGroup, k_max: int = 8, margin: float = 1e-9) -> FaithfulnessResult:
    """Decide whether the digit action of ``Z^n`` is faithful.

    Stage 1: an expanding matrix gives a faithful action.  Stage 2: look for
    a nonzero integer vector in every ``A^k Z^n``.  Candidates are integer
    vectors of ``ker q(A)`` for monic integer factors ``q`` of the
    characteristic polynomial with ``q(0) = +-1``; such a kernel is an
    ``A``-invariant sublattice on which ``A`` is unimodular, hence contained in
    every ``A^k Z^n``.  The witness is re-verified for ``k <= k_max``.
    Anything else is reported as ``unknown``.
    """
    A = G.A
    if np.all(np.abs(G.eigenvalues()) > 1 + margin):
        return FaithfulnessResult("faithful", reason="all eigenvalues have modulus > 1")
    lam = sympy.Symbol("lam")
    charpoly = A.charpoly(lam).as_expr()
    _, factors = sympy.factor_list(charpoly, lam)
    for factor, _mult in factors:
        poly = sympy.Poly(factor, lam)
        if abs(poly.eval(0)) != 1:
            continue
        qA = sympy.zeros(*A.shape)
        for coeff in poly.all_coeffs():
            qA = qA * A + coeff * sympy.eye(A.rows)
        for vec in qA.nullspace():
            denom = math.lcm(*[int(sympy.fraction(c)[1]) for c in vec])
            w = [int(c * denom) for c in vec]
            g = math.gcd(*w)
            w = tuple(c // g for c in w)
            if all(_in_power_lattice(A, w, k) for k in range(1, k_max + 1)):
                return FaithfulnessResult("unfaithful", w,
                                          f"{w} lies in A^k Z^n for all k (A-invariant unimodular sublattice)")
    return FaithfulnessResult("unknown", reason="no invariant unimodular sublattice found")


def kernel_intersection_depth(G: ConcreteGroup, g, n_max: int):
    """Smallest ``n <= n_max`` with ``g`` outside ``Dom phi^n``, else ``"survives"``.

    Only iterates ``phi`` on ``g`` itself; conjugates of ``g`` are not swept,
    so this is a necessary-condition probe for membership in the kernel.
    """
    if n_max < 1:
        raise SelfSimError("n_max must be at least 1")
    for n in range(1, n_max + 1):
        if not G.dom_contains(g):
            return n
        g = G.phi_apply(g)
    return "survives"


def parse_int_matrix(text: str) -> list:
    """``"a,b;c,d"`` -> ``[[a, b], [c, d]]``."""
    try:
        return [[int(x) for x in row.split(",")] for row in text.split(";")]
    except ValueError:
        raise SelfSimError(f"cannot parse integer matrix {text!r}") from None


def parse_vectors(text: str) -> list:
    """``"(0,0);(1,0)"`` -> ``[(0, 0), (1, 0)]``."""
    out = []
    for item in text.split(";"):
        item = item.strip().strip("()")
        try:
            out.append(tuple(int(x) for x in item.split(",")))
        except ValueError:
            raise SelfSimError(f"cannot parse vector {item!r}") from None
    return out


def parse_complex(text: str) -> complex:
    """``"re,im"`` -> complex."""
    parts = text.split(",")
    try:
        if len(parts) == 1:
            return complex(float(parts[0]), 0.0)
        if len(parts) == 2:
            return complex(float(parts[0]), float(parts[1]))
    except ValueError:
        pass
    raise SelfSimError(f"cannot parse complex number {text!r}; use 're,im'")


def exact_inverse(A: sympy.Matrix) -> list:
    inv = A.inv()
    return [[Fraction(int(sympy.fraction(x)[0]), int(sympy.fraction(x)[1])) for x in row] for row in inv.tolist()]
