"""Iterated monodromy actions of complex polynomials by numeric path lifting.

Vertices of the preimage tree are encoded by words through connecting paths
``l_x`` from the basepoint ``t`` to its preimages: ``Lambda(x v)`` is the end
of the lift of ``l_x`` under ``f^{|v|}`` that starts at ``Lambda(v)``.  With
that encoding ``f(Lambda(v x)) = Lambda(v)``, so dropping the last letter is
taking the image under ``f``.

All paths are polylines of complex points.  Lifting continues the preimage
nearest to the previous lifted point and subdivides a segment whenever the
step is not clearly smaller than the gap to the other preimages.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.spatial import cKDTree

from .core import Presentation, lex_word
from .errors import (
    BranchAmbiguity,
    ClearanceError,
    GeometryError,
    MatchError,
    SelfSimError,
    SeparationError,
)

EPS_MATCH = 1e-9
RATIO_TEST = 10.0
MAX_SUBDIVISIONS = 48


# ------------------------------------------------------------------ maps


@dataclass(frozen=True)
class PolynomialMap:
    """Polynomial with complex coefficients, highest degree first."""

    coeffs: tuple

    def __post_init__(self):
        coeffs = tuple(complex(c) for c in self.coeffs)
        while len(coeffs) > 1 and coeffs[0] == 0:
            coeffs = coeffs[1:]
        if len(coeffs) < 3:
            raise SelfSimError("polynomial must have degree at least 2")
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, z):
        return np.polyval(self.coeffs, z)

    def derivative(self, z):
        return np.polyval(np.polyder(self.coeffs), z)

    def critical_points(self) -> np.ndarray:
        return np.roots(np.polyder(self.coeffs))

    def critical_values(self) -> np.ndarray:
        return self(self.critical_points())

    def preimages(self, w) -> np.ndarray:
        """All preimages of each entry of ``w``: shape ``w.shape + (degree,)``."""
        w = np.asarray(w, dtype=complex)
        if self.degree == 2:
            a, b, c = self.coeffs
            s = np.sqrt(b * b - 4 * a * (c - w))
            return np.stack([(-b + s) / (2 * a), (-b - s) / (2 * a)], axis=-1)
        d = self.degree
        flat = w.reshape(-1)
        lead = self.coeffs[0]
        comp = np.zeros((flat.size, d, d), dtype=complex)
        comp[:, 1:, :-1] = np.eye(d - 1)
        tail = np.array(self.coeffs[1:], dtype=complex) / lead
        comp[:, 0, :] = -tail
        comp[:, 0, -1] += flat / lead
        roots = np.linalg.eigvals(comp)
        for _ in range(2):
            roots = roots - (self(roots) - flat[:, None]) / self.derivative(roots)
        return roots.reshape(w.shape + (d,))

    def __str__(self):
        if self.degree == 2 and self.coeffs[:2] == (1, 0):
            c = self.coeffs[2]
            return f"z^2 + ({c.real:g}{c.imag:+g}i)"
        return "poly" + str(tuple(self.coeffs))


def quadratic(c: complex) -> PolynomialMap:
    """``z^2 + c``."""
    return PolynomialMap((1, 0, complex(c)))


def postcritical_set(f: PolynomialMap, max_iter: int = 64, tol: float = 1e-9) -> list:
    """Finite postcritical set, or :class:`GeometryError` if an orbit does not close up."""
    points: list = []
    for z in f.critical_points():
        orbit: list = []
        w = f(z)
        for _ in range(max_iter):
            if any(abs(w - p) <= tol for p in orbit):
                break
            orbit.append(w)
            w = f(w)
            if abs(w) > 1e6:
                raise GeometryError("critical orbit escapes; postcritical set is not finite")
        else:
            raise GeometryError(f"critical orbit not preperiodic within {max_iter} iterations")
        for p in orbit:
            if not any(abs(p - q) <= tol for q in points):
                points.append(complex(p))
    return sorted(points, key=lambda p: (round(p.real, 9), round(p.imag, 9)))


# -------------------------------------------------------------- polylines


@dataclass(frozen=True)
class Polyline:
    points: np.ndarray
    closed: bool = False

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=complex).reshape(-1)
        if pts.size < 2:
            pts = np.repeat(pts, 2)
        object.__setattr__(self, "points", pts)
        if self.closed and abs(pts[0] - pts[-1]) > 1e-12:
            raise GeometryError("loop is not closed")

    @property
    def start(self) -> complex:
        return complex(self.points[0])

    @property
    def end(self) -> complex:
        return complex(self.points[-1])

    def reversed(self) -> "Polyline":
        return Polyline(self.points[::-1].copy(), self.closed)

    def __len__(self):
        return self.points.size

    def length(self) -> float:
        return float(np.sum(np.abs(np.diff(self.points))))


def concat(*paths: Polyline, tol: float = 1e-8) -> Polyline:
    """Join paths end to start; junctions must agree to ``tol``."""
    pts = [paths[0].points]
    for p in paths[1:]:
        if abs(pts[-1][-1] - p.points[0]) > tol:
            raise GeometryError("paths do not join up")
        pts.append(p.points[1:])
    out = np.concatenate(pts)
    closed = abs(out[0] - out[-1]) <= tol
    if closed:
        out[-1] = out[0]
    return Polyline(out, closed)


def _segment(a: complex, b: complex, step: float) -> np.ndarray:
    n = max(1, math.ceil(abs(b - a) / step))
    return a + (b - a) * np.linspace(0.0, 1.0, n + 1)


def _arc(center: complex, radius: float, theta0: float, sweep: float, step: float) -> np.ndarray:
    n = max(8, math.ceil(abs(sweep) * radius / step))
    return center + radius * np.exp(1j * (theta0 + sweep * np.linspace(0.0, 1.0, n + 1)))


def detoured_segment(a: complex, b: complex, obstacles: Sequence[complex], radius: float,
                     step: float, side: str = "above") -> np.ndarray:
    """Straight path from ``a`` to ``b``, going around every obstacle within
    ``radius`` of it along a circular arc on the requested side."""
    if side not in ("above", "below"):
        raise GeometryError("detour side must be 'above' or 'below'")
    L = abs(b - a)
    if L == 0:
        return np.array([a, b])
    u = (b - a) / L
    cuts = []
    for p in obstacles:
        rel = (p - a) * np.conj(u)
        s, h = rel.real, rel.imag
        if abs(h) >= radius or s <= -radius or s >= L + radius:
            continue
        half = math.sqrt(radius**2 - h**2)
        s_in, s_out = s - half, s + half
        if s_in <= 0 or s_out >= L:
            raise GeometryError(f"path endpoint lies within {radius:g} of postcritical point {p}")
        cuts.append((s_in, s_out, p))
    cuts.sort(key=lambda c: c[0])
    for (_, o1, _), (i2, _, _) in zip(cuts, cuts[1:]):
        if i2 <= o1:
            raise GeometryError("detour circles overlap; choose a smaller radius")
    pieces = []
    pos = a
    for s_in, s_out, p in cuts:
        enter, leave = a + s_in * u, a + s_out * u
        pieces.append(_segment(pos, enter, step))
        th0 = math.atan2((enter - p).imag, (enter - p).real)
        th1 = math.atan2((leave - p).imag, (leave - p).real)
        ccw = (th1 - th0) % (2 * math.pi)
        options = [ccw, ccw - 2 * math.pi]
        mids = [p + radius * np.exp(1j * (th0 + sw / 2)) for sw in options]
        want_up = side == "above"
        pick = 0 if (mids[0].imag > mids[1].imag) == want_up else 1
        arc = _arc(p, radius, th0, options[pick], step)
        arc[-1] = leave
        pieces.append(arc)
        pos = leave
    pieces.append(_segment(pos, b, step))
    out = np.concatenate([pieces[0]] + [pc[1:] for pc in pieces[1:]])
    out[0], out[-1] = a, b
    return out


# ---------------------------------------------------------------- lifting


def _lift_segment(f: PolynomialMap, crit_values, z, w0, w1, depth, min_step):
    roots = f.preimages(w1)
    dist = np.abs(roots - z[:, None])
    k = np.argmin(dist, axis=1)
    rows = np.arange(z.size)
    chosen = roots[rows, k]
    step = dist[rows, k]
    gaps = np.abs(roots - chosen[:, None])
    gaps[rows, k] = np.inf
    other = gaps.min(axis=1)
    seg = np.abs(w1 - w0)
    if crit_values.size:
        clear = np.min(np.abs(w0[:, None] - crit_values[None, :]), axis=1)
    else:
        clear = np.full(z.size, np.inf)
    ok = (other >= 3.0 * step) & (seg <= 0.5 * clear)
    if ok.all():
        return chosen
    bad = ~ok
    if depth >= MAX_SUBDIVISIONS or seg[bad].max() < min_step:
        raise BranchAmbiguity(
            "preimages too close to separate by subdivision; the path passes too near a critical value")
    wm = 0.5 * (w0[bad] + w1[bad])
    zm = _lift_segment(f, crit_values, z[bad], w0[bad], wm, depth + 1, min_step)
    chosen[bad] = _lift_segment(f, crit_values, zm, wm, w1[bad], depth + 1, min_step)
    return chosen


def lift_batch(f: PolynomialMap, paths: np.ndarray, starts: np.ndarray, *,
               clearance: float = 1e-9, min_step: float = 1e-13, tol: float = 1e-9) -> np.ndarray:
    """Lift many polylines at once.

    ``paths`` has shape ``(N, K)`` and ``starts`` shape ``(N,)`` with
    ``f(starts) == paths[:, 0]``.  Returns the lifted vertices, shape ``(N, K)``.
    """
    paths = np.asarray(paths, dtype=complex)
    starts = np.asarray(starts, dtype=complex)
    if paths.ndim != 2 or starts.shape != paths.shape[:1]:
        raise SelfSimError("paths must be (N, K) with one start per path")
    if np.max(np.abs(f(starts) - paths[:, 0]), initial=0.0) > tol:
        raise SelfSimError("start points are not preimages of the path origins")
    cv = np.asarray(f.critical_values(), dtype=complex)
    if cv.size and np.min(np.abs(paths[..., None] - cv)) < clearance:
        raise ClearanceError("path passes within clearance of a critical value")
    out = np.empty_like(paths)
    out[:, 0] = starts
    z = starts.copy()
    for k in range(paths.shape[1] - 1):
        z = _lift_segment(f, cv, z, paths[:, k], paths[:, k + 1], 0, min_step)
        out[:, k + 1] = z
    return out


def lift_path(f: PolynomialMap, path: Polyline, start: complex, **kw) -> Polyline:
    """Unique continuous lift of ``path`` under ``f`` starting at ``start``."""
    pts = lift_batch(f, path.points[None, :], np.array([start], dtype=complex), **kw)[0]
    return Polyline(pts, closed=abs(pts[0] - pts[-1]) <= 1e-12 and path.closed)


# --------------------------------------------------------------- geometry


def _name(i: int) -> str:
    return "abcdefghijklmnopqrstuvwxyz"[i] if i < 26 else f"g{i}"


@dataclass
class Geometry:
    """Basepoint, generator loops and connecting paths for a standard action."""

    basepoint: complex
    preimages: tuple
    connecting: tuple
    loops: tuple
    names: tuple
    centers: tuple
    postcritical: tuple
    settings: dict = field(default_factory=dict)

    @property
    def degree(self) -> int:
        return len(self.preimages)

    def to_json(self) -> str:
        def pl(p: Polyline):
            return {"closed": p.closed, "points": [[float(z.real), float(z.imag)] for z in p.points]}

        def cx(z):
            return [float(complex(z).real), float(complex(z).imag)]

        doc = {
            "basepoint": cx(self.basepoint),
            "preimages": [cx(z) for z in self.preimages],
            "postcritical": [cx(z) for z in self.postcritical],
            "generators": [
                {"name": n, "center": cx(c), "loop": pl(lp)}
                for n, c, lp in zip(self.names, self.centers, self.loops)
            ],
            "connecting": [pl(p) for p in self.connecting],
            "settings": self.settings,
        }
        return json.dumps(doc, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "Geometry":
        doc = json.loads(text)

        def cx(v):
            return complex(v[0], v[1])

        def pl(d):
            return Polyline(np.array([cx(v) for v in d["points"]]), d["closed"])

        gens = doc["generators"]
        return cls(
            cx(doc["basepoint"]),
            tuple(cx(v) for v in doc["preimages"]),
            tuple(pl(p) for p in doc["connecting"]),
            tuple(pl(g["loop"]) for g in gens),
            tuple(g["name"] for g in gens),
            tuple(cx(g["center"]) for g in gens),
            tuple(cx(v) for v in doc["postcritical"]),
            doc.get("settings", {}),
        )


def default_geometry(f: PolynomialMap, basepoint: complex | None = None, *, detour: str = "above",
                     radius_factor: float = 0.1, step: float | None = None,
                     postcritical: Sequence[complex] | None = None,
                     names: Sequence[str] | None = None) -> Geometry:
    """Standard geometry for a quadratic polynomial.

    * basepoint: a fixed point of ``f`` outside the postcritical set, unless
      given; letter 0 is then the basepoint itself and letter 1 the other
      preimage.  For any other basepoint the preimages are ordered by real
      then imaginary part.
    * generator loops: one per postcritical point ``p`` (sorted by real then
      imaginary part, named ``a, b, ...``), a positively oriented circle of
      radius ``radius_factor * (min distance in P and t)`` joined to ``t`` by a
      straight spoke.
    * connecting paths: straight segments from ``t`` to the preimages, going
      round any postcritical point within the loop radius on the ``detour``
      side.
    """
    if f.degree != 2:
        raise GeometryError("default geometry is only defined for quadratic maps; supply a geometry file")
    P = list(postcritical) if postcritical is not None else postcritical_set(f)
    if not P:
        raise GeometryError("empty postcritical set")

    def in_p(z):
        return any(abs(z - p) < 1e-9 for p in P)

    fixed = sorted(np.roots(np.array(f.coeffs) - np.array([0, 1, 0])), key=lambda z: (z.real, z.imag))
    if basepoint is None:
        choices = [complex(z) for z in fixed if not in_p(z)]
        if not choices:
            raise GeometryError("both fixed points are postcritical; supply a basepoint")
        t = choices[0]
    else:
        t = complex(basepoint)
        if in_p(t):
            raise GeometryError("basepoint lies in the postcritical set")
    pre = [complex(z) for z in f.preimages(np.array([t]))[0]]
    if any(abs(z - t) < 1e-9 for z in pre):
        i = min(range(len(pre)), key=lambda k: abs(pre[k] - t))
        rest = [z for k, z in enumerate(pre) if k != i]
        pre = [t] + sorted(rest, key=lambda z: (round(z.real, 12), round(z.imag, 12)))
    else:
        pre = sorted(pre, key=lambda z: (round(z.real, 12), round(z.imag, 12)))
    pts = P + [t]
    gap = min(abs(p - q) for p, q in itertools.combinations(pts, 2))
    radius = radius_factor * gap
    step = step or radius / 4
    connecting = []
    for z in pre:
        if abs(z - t) < 1e-12:
            connecting.append(Polyline(np.array([t, t])))
        else:
            connecting.append(Polyline(detoured_segment(t, z, P, radius, step, detour)))
    loops = []
    for p in P:
        u = (t - p) / abs(t - p)
        q = p + radius * u
        others = [o for o in P if o != p]
        spoke = detoured_segment(t, q, others, radius, step, detour)
        th = math.atan2(u.imag, u.real)
        circle = _arc(p, radius, th, 2 * math.pi, step)
        circle[0] = circle[-1] = q
        loops.append(Polyline(np.concatenate([spoke, circle[1:], spoke[::-1][1:]]), closed=True))
    names = tuple(names) if names is not None else tuple(_name(i) for i in range(len(P)))
    if len(names) != len(P):
        raise GeometryError(f"need {len(P)} generator names")
    settings = {"detour": detour, "radius": radius, "step": step}
    return Geometry(t, tuple(pre), tuple(connecting), tuple(loops), names, tuple(P), tuple(P), settings)


# ---------------------------------------------------------- preimage tree


def _check_separation(points: np.ndarray, level: int):
    if points.size < 2:
        return
    xy = np.column_stack([points.real, points.imag])
    dist, _ = cKDTree(xy).query(xy, k=2)
    if dist[:, 1].min() <= 10 * EPS_MATCH:
        raise SeparationError(f"preimages at level {level} are not separated; depth refused at that level")


@dataclass
class PreimageTree:
    """Points ``Lambda(v)`` for all words ``|v| <= depth``.

    ``levels[n][lex(v)] = Lambda(v)``.  ``frontier[x]`` holds the lifts of the
    connecting path ``l_x`` that end at the deepest level, kept so the tree
    can be extended.
    """

    f: PolynomialMap
    geometry: Geometry
    levels: list
    frontier: list
    residual: float = 0.0

    @property
    def depth(self) -> int:
        return len(self.levels) - 1

    @property
    def degree(self) -> int:
        return self.f.degree

    def __getitem__(self, word) -> complex:
        word = tuple(word)
        idx = 0
        for x in word:
            idx = idx * self.degree + x
        return complex(self.levels[len(word)][idx])

    def extend(self, depth: int) -> "PreimageTree":
        d = self.degree
        while self.depth < depth:
            n = self.depth
            if n == 0:
                self.frontier = [c.points[None, :] for c in self.geometry.connecting]
            else:
                starts = self.levels[n]
                self.frontier = [lift_batch(self.f, np.repeat(fr, d, axis=0), starts) for fr in self.frontier]
            new = np.concatenate([fr[:, -1] for fr in self.frontier])
            _check_separation(new, n + 1)
            res = np.max(np.abs(self.f(new) - np.repeat(self.levels[n], d)))
            if res > EPS_MATCH:
                raise SelfSimError(f"equivariance residual {res:.2e} at level {n + 1}")
            self.residual = max(self.residual, float(res))
            self.levels.append(new)
        return self


def build_lambda(f: PolynomialMap, geometry: Geometry, depth: int) -> PreimageTree:
    """Encode the preimage tree of the basepoint to the given depth."""
    if geometry.degree != f.degree:
        raise GeometryError("geometry has the wrong number of preimages")
    t = geometry.basepoint
    for x, (c, z) in enumerate(zip(geometry.connecting, geometry.preimages)):
        if abs(c.start - t) > EPS_MATCH or abs(c.end - z) > EPS_MATCH:
            raise GeometryError(f"connecting path {x} does not run from t to Lambda({x})")
        if abs(f(z) - t) > EPS_MATCH:
            raise GeometryError(f"Lambda({x}) is not a preimage of the basepoint")
    tree = PreimageTree(f, geometry, [np.array([t], dtype=complex)], [])
    return tree.extend(depth)


# ------------------------------------------------------------- monodromy


def _match(endpoints: np.ndarray, nodes: np.ndarray, level: int) -> np.ndarray:
    xy = np.column_stack([nodes.real, nodes.imag])
    q = np.column_stack([endpoints.real, endpoints.imag])
    k = min(2, nodes.size)
    dist, idx = cKDTree(xy).query(q, k=k)
    if k == 1:
        return np.atleast_1d(idx)
    if np.any(dist[:, 0] * RATIO_TEST >= dist[:, 1]):
        raise MatchError(f"ambiguous endpoint match at level {level}; use a smaller step or shallower depth")
    perm = idx[:, 0].astype(np.int64)
    if np.unique(perm).size != perm.size:
        raise MatchError(f"lifted endpoints collide at level {level}")
    return perm


def loop_permutations(tree: PreimageTree, loop: Polyline, depth: int, keep_lifts: bool = False):
    """Level permutations ``1..depth`` of a loop at the basepoint.

    Returns a list whose entry ``n - 1`` maps ``lex(v)`` to ``lex(v^loop)``
    for ``|v| = n``; with ``keep_lifts`` also the first-level lifts.
    """
    if abs(loop.start - tree.geometry.basepoint) > EPS_MATCH or abs(loop.end - loop.start) > EPS_MATCH:
        raise GeometryError("not a loop at the basepoint")
    tree.extend(depth)
    d = tree.degree
    lifts = loop.points[None, :]
    perms = []
    first = None
    for n in range(1, depth + 1):
        lifts = lift_batch(tree.f, np.repeat(lifts, d, axis=0), tree.levels[n])
        if n == 1:
            first = lifts.copy()
        perms.append(_match(lifts[:, -1], tree.levels[n], n))
    return (perms, first) if keep_lifts else perms


@dataclass
class MonodromyAction:
    """Numeric level permutations; ``perms[name][n - 1]`` acts on level ``n``."""

    names: tuple
    degree: int
    perms: dict
    first_lifts: dict = field(default_factory=dict, repr=False)

    @property
    def depth(self) -> int:
        return min(len(p) for p in self.perms.values()) if self.perms else 0

    def level(self, name: str, n: int) -> np.ndarray:
        if n == 0:
            return np.zeros(1, dtype=np.int64)
        return self.perms[name][n - 1]

    def check_tree_compatibility(self) -> bool:
        d = self.degree
        for plist in self.perms.values():
            prev = np.zeros(1, dtype=np.int64)
            for p in plist:
                if not np.array_equal(p // d, prev[np.arange(p.size) // d]):
                    return False
                prev = p
        return True


def monodromy_permutations(f: PolynomialMap, geometry: Geometry, tree: PreimageTree, depth: int) -> MonodromyAction:
    perms = {}
    first = {}
    for name, loop in zip(geometry.names, geometry.loops):
        perms[name], first[name] = loop_permutations(tree, loop, depth, keep_lifts=True)
    return MonodromyAction(tuple(geometry.names), f.degree, perms, first)


# ----------------------------------------------------- recursion matching


def _relabel_index(sigma: Sequence[int], n: int, d: int) -> np.ndarray:
    """``S[lex(v)] = lex(sigma(v))`` with ``sigma`` applied letterwise."""
    S = np.zeros(1, dtype=np.int64)
    sig = np.asarray(sigma, dtype=np.int64)
    for _ in range(n):
        S = (S[:, None] * d + sig[None, :]).reshape(-1)
    return S


@dataclass
class VerifyReport:
    match: bool
    relabeling: tuple | None
    depth: int
    mismatch: tuple | None = None  # (generator, level, word) under the identity labeling

    def __str__(self):
        if self.match:
            rel = "identity" if self.relabeling == tuple(range(len(self.relabeling))) else \
                " ".join(f"{x}->{y}" for x, y in enumerate(self.relabeling))
            return f"MATCH (relabeling: {rel})"
        g, n, w = self.mismatch
        return f"MISMATCH generator {g} level {n} word {''.join(map(str, w))}"


def verify_recursion(pres: Presentation, action: MonodromyAction, depth: int,
                     try_relabelings: bool = True) -> VerifyReport:
    """Compare presentation generators (positionally) with numeric permutations.

    A relabeling ``sigma`` matches when numeric letter ``x`` corresponds to
    presentation letter ``sigma[x]`` on every level up to ``depth``.
    """
    from .core import permutation_on_level

    if pres.ngens != len(action.names) or pres.degree != action.degree:
        raise SelfSimError("presentation and numeric action differ in generator count or alphabet size")
    if action.depth < depth:
        raise SelfSimError(f"numeric action only computed to depth {action.depth}")
    d = pres.degree
    gens = pres.generators()
    alg = [[permutation_on_level(g, n) for n in range(1, depth + 1)] for g in gens]
    num = [[action.level(name, n) for n in range(1, depth + 1)] for name in action.names]
    sigmas = list(itertools.permutations(range(d))) if try_relabelings else [tuple(range(d))]
    mismatch = None
    for sigma in sigmas:
        ok = True
        for n in range(1, depth + 1):
            S = _relabel_index(sigma, n, d)
            for i in range(pres.ngens):
                lhs = alg[i][n - 1][S]
                rhs = S[num[i][n - 1]]
                if not np.array_equal(lhs, rhs):
                    if mismatch is None:
                        j = int(np.flatnonzero(lhs != rhs)[0])
                        mismatch = (pres.names[i], n, lex_word(j, n, d))
                    ok = False
                    break
            if not ok:
                break
        if ok:
            return VerifyReport(True, tuple(sigma), depth)
    return VerifyReport(False, None, depth, mismatch)


def _word_perms(word, gen_perms, depth):
    out = []
    for n in range(depth):
        res = np.arange(gen_perms[0][n].size, dtype=np.int64)
        for g, e in word:
            p = gen_perms[g][n]
            if e == -1:
                inv = np.empty_like(p)
                inv[p] = np.arange(p.size)
                p = inv
            res = p[res]
        out.append(res)
    return out


def _candidate_words(ngens: int, max_len: int):
    letters = [(g, e) for g in range(ngens) for e in (1, -1)]
    yield ()
    layer = [()]
    for _ in range(max_len):
        nxt = []
        for w in layer:
            for l in letters:
                if w and w[-1] == (l[0], -l[1]):
                    continue
                nxt.append(w + (l,))
        yield from nxt
        layer = nxt


def infer_recursion(f: PolynomialMap, geometry: Geometry, tree: PreimageTree, max_len: int = 2,
                    depth: int = 8, deepen: int = 2) -> Presentation:
    """Recover a wreath recursion from the numeric restriction loops.

    For generator ``g`` and letter ``x`` the loop ``l_x g_x l_y^-1`` (``g_x`` the
    lift of ``g`` from ``Lambda(x)``, ``y = x^g``) is lifted to ``depth`` levels
    and matched against all generator words of length at most ``max_len``,
    shortest first.  Several distinguishable shortest matches trigger one
    retry ``deepen`` levels deeper; matches that still act identically are
    resolved to the first in shortlex order.  The result only certifies
    agreement on the levels examined.
    """
    names = tuple(geometry.names)
    ngens = len(names)
    d = f.degree
    for current in (depth, depth + deepen):
        action = monodromy_permutations(f, geometry, tree, current)
        gen_perms = [action.perms[nm] for nm in names]
        words = list(_candidate_words(ngens, max_len))
        cand = [(w, _word_perms(w, gen_perms, current)) for w in words]
        perms_out = []
        rests_out = []
        ambiguous = False
        for i, name in enumerate(names):
            first_perm = action.level(name, 1)
            perms_out.append(tuple(int(y) for y in first_perm))
            row = []
            for x in range(d):
                y = int(first_perm[x])
                loop = concat(geometry.connecting[x], Polyline(action.first_lifts[name][x]),
                              geometry.connecting[y].reversed())
                target = loop_permutations(tree, loop, current)
                hits = [(w, p) for w, p in cand if all(np.array_equal(a, b) for a, b in zip(p, target))]
                if not hits:
                    raise SelfSimError(
                        f"no word of length <= {max_len} matches the restriction of {name} at {x}; "
                        "try a longer word bound or another geometry")
                shortest = [h for h in hits if len(h[0]) == len(hits[0][0])]
                distinct = {tuple(p[-1].tolist()) for _, p in shortest}
                if len(distinct) > 1:
                    ambiguous = True
                row.append(shortest[0][0])
            rests_out.append(tuple(row))
        if not ambiguous:
            return Presentation(d, names, tuple(perms_out), tuple(rests_out))
    raise SelfSimError("restrictions remain ambiguous after deepening")


# ------------------------------------------------------------ point clouds


def julia_cloud(tree: PreimageTree, depth: int) -> np.ndarray:
    """The ``d^depth`` points of level ``depth``, in lexicographic word order."""
    tree.extend(depth)
    return tree.levels[depth].copy()


def write_points_csv(points: np.ndarray, fh) -> None:
    fh.write("re,im\n")
    for z in points:
        fh.write(f"{float(z.real) + 0.0!r},{float(z.imag) + 0.0!r}\n")


def write_lambda_csv(tree: PreimageTree, fh) -> None:
    fh.write("word,re,im\n")
    for n, pts in enumerate(tree.levels):
        for i, z in enumerate(pts):
            w = "".join(map(str, lex_word(i, n, tree.degree)))
            fh.write(f"{w},{float(z.real) + 0.0!r},{float(z.imag) + 0.0!r}\n")
