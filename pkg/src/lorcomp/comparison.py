"""Triangle comparison engine.

Triangles, hinges and side points are expressed through a *geometry*:

* :class:`AmbientGeometry` is used for spaces whose tau is inherited from a
  known ambient (model space or cylinder).  Handles are chart coordinates and
  sides are the ambient maximizing geodesics, so a model space compared with
  itself is exact up to round-off.
* :class:`ChainGeometry` works on the finite order alone.  Handles are point
  indices, sides are maximal link chains and side points snap to chain
  vertices at their exact tau-arclength fraction.

Direction convention: a bound from *below* by K asks ``tau(p,q) <= tau_bar``
for comparison points, a bound from *above* asks ``tau(p,q) >= tau_bar``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache

import numpy as np

from .errors import (
    AngleUndefined,
    ExceedsModelDiameter,
    InsufficientSamples,
    NonConvergent,
    NotTimelikeRelated,
    PairOffTriangle,
    UnrealizableTriangle,
)
from .generators import ambient_from_tag
from .model_spaces import (
    BOUNDARY_EPS,
    ModelPoint,
    ModelSpace,
    Orientation,
    Vertex,
    comparison_angle_array,
    finite_diameter_constant,
    law_of_cosines_array,
)
from .space import Chain, DiscreteSpace, Provenance, geodesic_chain, maximizer_count

TAU_TOL = 1e-6
ANGLE_TOL = 1e-4
DEGENERACY_TOL = 1e-9
SIDE_FRACTIONS = tuple(np.linspace(0.0, 1.0, 9))
HINGE_GRID = tuple(np.arange(1, 9) / 8.0)
ANGLE_LEVELS = 6
ANGLE_SHRINK = 0.5
_LENGTH_RATIOS = (1.0, 2.0, 0.5, 4.0, 0.25, 8.0, 0.125, 16.0, 1 / 16, 64.0, 1 / 64)


class Formulation(str, Enum):
    TRIANGLE = "triangle"
    MONOTONICITY = "monotonicity"
    ANGLE = "angle"
    HINGE = "hinge"


class Direction(str, Enum):
    ABOVE = "above"
    BELOW = "below"


class Side(str, Enum):
    XY = "xy"
    YZ = "yz"
    XZ = "xz"

    @property
    def ends(self) -> tuple[int, int]:
        return {"xy": (0, 1), "yz": (1, 2), "xz": (0, 2)}[self.value]


# Formulations whose margin must stay <= tol; all others must stay >= -tol.
_UPPER = {
    (Formulation.TRIANGLE, Direction.BELOW),
    (Formulation.HINGE, Direction.ABOVE),
    (Formulation.MONOTONICITY, Direction.ABOVE),
    (Formulation.ANGLE, Direction.BELOW),
}


def is_upper(formulation, direction) -> bool:
    return (Formulation(formulation), Direction(direction)) in _UPPER


def margin_ok(formulation, direction, margin: float, tol: float) -> bool:
    if is_upper(formulation, direction):
        return margin <= tol
    return margin >= -tol


def worst_of(formulation, direction, margins) -> int:
    """Index of the most violating margin."""
    margins = np.asarray(margins, dtype=float)
    return int(np.argmax(margins) if is_upper(formulation, direction) else np.argmin(margins))


# -- data types ----------------------------------------------------------------


@dataclass(frozen=True)
class TimelikeTriangle:
    """x << y << z with side lengths (a, b, c) = (xy, yz, xz).

    ``points`` are geometry handles; ``indices`` the sample indices when the
    vertices are sample points; ``chains`` the discrete sides (chain mode).
    """

    points: tuple
    sides: tuple[float, float, float]
    degenerate: bool
    indices: tuple[int, int, int] | None = None
    chains: tuple[Chain, Chain, Chain] | None = None

    @property
    def a(self) -> float:
        return self.sides[0]

    @property
    def b(self) -> float:
        return self.sides[1]

    @property
    def c(self) -> float:
        return self.sides[2]

    @property
    def perimeter(self) -> float:
        return float(sum(self.sides))

    def label(self):
        return list(self.indices) if self.indices is not None else [list(p) for p in self.points]


@dataclass(frozen=True)
class SidePoint:
    side: Side
    fraction: float
    handle: object = None
    index: int | None = None

    def __post_init__(self):
        try:
            object.__setattr__(self, "side", Side(self.side))
        except ValueError:
            raise PairOffTriangle(f"no side {self.side!r} on a triangle") from None
        if not 0.0 <= self.fraction <= 1.0:
            raise PairOffTriangle(f"fraction {self.fraction} outside [0, 1]")


@dataclass(frozen=True)
class ComparisonConfiguration:
    """Comparison triangle in L_K: x at the origin, z on the time axis, y at x >= 0."""

    K: float
    vertices: tuple[ModelPoint, ModelPoint, ModelPoint]
    sides: tuple[float, float, float]

    @property
    def model(self) -> ModelSpace:
        return ModelSpace(self.K)

    def point(self, side, fraction: float) -> ModelPoint:
        i, j = Side(side).ends
        return self.model.geodesic(self.vertices[i], self.vertices[j], float(fraction))

    def points(self, side, fractions) -> np.ndarray:
        i, j = Side(side).ends
        return self.model.geodesic(self.vertices[i], self.vertices[j], np.asarray(fractions, dtype=float))


@dataclass
class ComparisonVerdict:
    formulation: Formulation
    direction: Direction
    K: float
    passed: bool
    worst_margin: float | None
    witnesses: list = field(default_factory=list)
    samples: int = 0
    tol: float = TAU_TOL
    skipped: int = 0
    notes: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "formulation": self.formulation.value,
            "direction": self.direction.value,
            "K": self.K,
            "passed": self.passed,
            "worst_margin": self.worst_margin,
            "samples": self.samples,
            "skipped": self.skipped,
            "tol": self.tol,
            "witnesses": self.witnesses,
            "notes": dict(sorted(self.notes.items())),
        }


def merge_verdicts(verdicts, formulation, direction, K, tol) -> ComparisonVerdict:
    """Order-independent combination of per-item verdicts."""
    formulation, direction = Formulation(formulation), Direction(direction)
    scored = [v for v in verdicts if v.worst_margin is not None]
    out = ComparisonVerdict(formulation, direction, float(K), True, None, tol=tol)
    out.samples = sum(v.samples for v in verdicts)
    out.skipped = sum(v.skipped for v in verdicts)
    notes: dict = {}
    for v in verdicts:
        for k, val in v.notes.items():
            if isinstance(val, (int, float)) and not isinstance(val, bool):
                notes[k] = notes.get(k, 0) + val
    out.notes = notes
    if scored:
        margins = [v.worst_margin for v in scored]
        k = worst_of(formulation, direction, margins)
        out.worst_margin = float(margins[k])
        out.witnesses = list(scored[k].witnesses[:1])
    out.passed = all(v.passed for v in verdicts)
    failing = [v for v in scored if not v.passed]
    out.notes["failing_items"] = len(failing)
    return out


# -- geometries ------------------------------------------------------------------


class AmbientGeometry:
    """Handles are chart coordinates; sides are ambient maximizing geodesics."""

    mode = "ambient"

    def __init__(self, sp: DiscreteSpace):
        if sp.ambient is None or sp.coords is None:
            raise ValueError("ambient geometry needs coordinates and an ambient tag")
        self.space = sp
        self.ambient = ambient_from_tag(sp.ambient)

    def handle(self, i: int):
        c = self.space.coords[int(i)]
        return (float(c[0]), float(c[1]))

    def tau(self, p, q) -> float:
        return float(self.ambient.tau_array(np.asarray(p), np.asarray(q), check=False))

    def tau_matrix(self, A, B) -> np.ndarray:
        A = np.asarray(A, dtype=float).reshape(-1, 2)
        B = np.asarray(B, dtype=float).reshape(-1, 2)
        return self.ambient.tau_array(A[:, None, :], B[None, :, :], check=False)

    def curve(self, start, end, fractions, chain=None) -> list:
        """Points at the given fractions of the geodesic from ``start`` to ``end``."""
        fr = np.asarray(fractions, dtype=float)
        if self.tau(start, end) > 0:
            pts = self.ambient.geodesic(start, end, fr)
        else:
            pts = self.ambient.geodesic(end, start, 1.0 - fr)
        return [(float(p[0]), float(p[1])) for p in np.atleast_2d(pts)], fr

    def side_chain(self, u, v):
        return None

    def maximizers(self, p, q, rel_tol: float) -> int:
        return self.ambient.maximizer_count(p, q, rel_tol)

    def background_distance(self, p, q) -> float:
        return float(self.ambient.background_distance(np.asarray(p), np.asarray(q)))


class ChainGeometry:
    """Handles are point indices; sides are maximal link chains."""

    mode = "chain"

    def __init__(self, sp: DiscreteSpace):
        self.space = sp
        self._chain = lru_cache(maxsize=65536)(lambda u, v: geodesic_chain(sp, u, v))

    def handle(self, i: int):
        return int(i)

    def tau(self, p, q) -> float:
        return self.space.tau_at(int(p), int(q))

    def tau_matrix(self, A, B) -> np.ndarray:
        A = np.asarray(A, dtype=np.int64)
        B = np.asarray(B, dtype=np.int64)
        if self.space.dense:
            return self.space.tau[np.ix_(A, B)]
        return np.array([[self.space.tau_at(a, b) for b in B] for a in A]).reshape(len(A), len(B))

    def side_chain(self, u, v) -> Chain:
        return self._chain(int(u), int(v))

    def curve(self, start, end, fractions, chain: Chain | None = None):
        """Chain vertices nearest to the given tau-arclength fractions from ``start``."""
        start, end = int(start), int(end)
        forward = self.tau(start, end) > 0
        if chain is None:
            chain = self.side_chain(start, end) if forward else self.side_chain(end, start)
        verts = list(chain.vertices)
        steps = [self.tau(a, b) for a, b in zip(verts, verts[1:])]
        cum = np.concatenate([[0.0], np.cumsum(steps)])
        total = cum[-1]
        frac = cum / total if total > 0 else np.linspace(0.0, 1.0, len(verts))
        if not forward:
            verts = verts[::-1]
            frac = (1.0 - frac)[::-1]
        fr = np.asarray(fractions, dtype=float)
        pick = np.abs(frac[None, :] - fr[:, None]).argmin(axis=1)
        return [verts[k] for k in pick], frac[pick]

    def maximizers(self, p, q, rel_tol: float) -> int:
        return maximizer_count(self.space, int(p), int(q), rel_tol)

    def background_distance(self, p, q) -> float:
        c = self.space.coords
        if c is None or self.space.ambient is None:
            return math.nan
        return float(ambient_from_tag(self.space.ambient).background_distance(c[int(p)], c[int(q)]))


def select_geometry(sp: DiscreteSpace):
    if sp.ambient is not None and sp.coords is not None and sp.provenance is Provenance.INHERITED:
        return AmbientGeometry(sp)
    return ChainGeometry(sp)


# -- triangles -------------------------------------------------------------------


def is_degenerate(a: float, b: float, c: float) -> bool:
    return c - (a + b) < DEGENERACY_TOL * c


def make_triangle(geom, x, y, z, indices=None) -> TimelikeTriangle:
    a, b, c = geom.tau(x, y), geom.tau(y, z), geom.tau(x, z)
    if not (a > 0 and b > 0):
        raise NotTimelikeRelated("triangle vertices must satisfy x << y << z")
    chains = None
    if geom.mode == "chain":
        chains = (geom.side_chain(x, y), geom.side_chain(y, z), geom.side_chain(x, z))
    return TimelikeTriangle((x, y, z), (a, b, c), is_degenerate(a, b, c), indices, chains)


def triangle_from_indices(geom, i, j, k) -> TimelikeTriangle:
    return make_triangle(geom, geom.handle(i), geom.handle(j), geom.handle(k), (int(i), int(j), int(k)))


def enumerate_triangles(
    sp: DiscreteSpace,
    geom=None,
    *,
    K: float | None = None,
    budget: int = 200,
    seed: int = 0,
    predicate=None,
    exhaustive_limit: int = 64,
    include_explicit: bool = True,
) -> list[TimelikeTriangle]:
    """Deterministic sample of timelike triangles.

    Spaces with at most ``exhaustive_limit`` points are enumerated fully;
    otherwise a related pair (x, z) is drawn uniformly, then y uniformly from
    I(x, z).  Triangles with c >= D_K are excluded.  Explicit triangles
    listed in the space metadata come first.
    """
    geom = geom or select_geometry(sp)
    d_max = finite_diameter_constant(K) if K is not None else math.inf
    out: list[TimelikeTriangle] = []
    seen: set = set()

    def consider(i, j, k):
        key = (int(i), int(j), int(k))
        if key in seen:
            return
        seen.add(key)
        c = sp.tau_at(key[0], key[2])
        if not c < d_max - BOUNDARY_EPS or not math.isfinite(c):
            return
        tri = triangle_from_indices(geom, *key)
        if predicate is None or predicate(tri):
            out.append(tri)

    if include_explicit:
        for tri in sp.meta.get("triangles", []):
            i, j, k = tri
            if sp.tau_at(i, j) > 0 and sp.tau_at(j, k) > 0:
                consider(i, j, k)
    if sp.n <= exhaustive_limit:
        for i in range(sp.n):
            for j in sp.timelike_future(i):
                for k in sp.timelike_future(int(j)):
                    consider(i, int(j), int(k))
        return out[: max(budget, len(sp.meta.get("triangles", [])))]
    rows, cols, tau, _ = sp.pairs()
    ok = (tau > 0) & np.isfinite(tau) & (tau < d_max - BOUNDARY_EPS)
    rows, cols = rows[ok], cols[ok]
    if len(rows) == 0:
        return out
    rng = np.random.default_rng(seed)
    attempts = 0
    target = len(out) + budget
    while len(out) < target and attempts < 50 * budget:
        attempts += 1
        e = int(rng.integers(len(rows)))
        x, z = int(rows[e]), int(cols[e])
        if sp.dense:
            mid = np.nonzero((sp.tau[x] > 0) & (sp.tau[:, z] > 0))[0]
        else:
            mid = sp.interval(x, z)
        if len(mid) == 0:
            continue
        y = int(mid[int(rng.integers(len(mid)))])
        consider(x, y, z)
    return out


def realize_triangle(K: float, t) -> ComparisonConfiguration:
    """Comparison triangle for ``t`` (a TimelikeTriangle or side triple)."""
    a, b, c = t.sides if isinstance(t, TimelikeTriangle) else (float(v) for v in t)
    d = finite_diameter_constant(K)
    if not c < d:
        raise UnrealizableTriangle(f"longest side {c} violates size bound D_K = {d}")
    ms = ModelSpace(K)
    omega = float(comparison_angle_array(K, a, b, c, Vertex.PAST))
    x = ModelPoint(0.0, 0.0)
    z = ms.exp_origin(c, 0.0)
    y = ms.exp_origin(a, omega)
    return ComparisonConfiguration(float(K), (x, y, z), (a, b, c))


def side_points(geom, tri: TimelikeTriangle, fractions=SIDE_FRACTIONS) -> list[SidePoint]:
    out = []
    for s_idx, side in enumerate(Side):
        i, j = side.ends
        chain = tri.chains[s_idx] if tri.chains is not None else None
        handles, exact = geom.curve(tri.points[i], tri.points[j], fractions, chain)
        for h, f in zip(handles, exact):
            out.append(SidePoint(side, float(min(max(f, 0.0), 1.0)), h, h if geom.mode == "chain" else None))
    return out


def cross_side_pairs(points: list[SidePoint]) -> list[tuple[SidePoint, SidePoint]]:
    """Ordered pairs of side points lying on distinct sides."""
    return [(p, q) for p in points for q in points if p.side is not q.side]


def _comparison_coords(cfg: ComparisonConfiguration, pts: list[SidePoint]) -> np.ndarray:
    out = np.empty((len(pts), 2))
    by_side: dict = {}
    for k, p in enumerate(pts):
        by_side.setdefault(p.side, []).append(k)
    for side, ks in by_side.items():
        out[ks] = cfg.points(side, [pts[k].fraction for k in ks])
    return out


def triangle_margins(geom, tri, cfg, pairs):
    """tau(p,q), tau_bar(p_bar,q_bar) arrays for ordered side-point pairs."""
    P = [p for p, _ in pairs]
    Q = [q for _, q in pairs]
    tau = np.array([geom.tau(p.handle, q.handle) for p, q in pairs]) if geom.mode == "chain" else None
    if tau is None:
        tau = geom.ambient.tau_array(
            np.array([p.handle for p in P], dtype=float), np.array([q.handle for q in Q], dtype=float), check=False
        )
    cp = _comparison_coords(cfg, P)
    cq = _comparison_coords(cfg, Q)
    bar = cfg.model.tau_array(cp, cq, check=False)
    return np.asarray(tau, dtype=float), np.asarray(bar, dtype=float)


def compare_triangle(
    K, direction, t: TimelikeTriangle, cfg: ComparisonConfiguration, pairs, geom, tol: float = TAU_TOL
) -> ComparisonVerdict:
    """Evaluate tau(p,q) against tau_bar(p_bar,q_bar) on the given pairs."""
    direction = Direction(direction)
    verdict = ComparisonVerdict(Formulation.TRIANGLE, direction, float(K), True, None, tol=tol)
    if not pairs:
        return verdict
    tau, bar = triangle_margins(geom, t, cfg, pairs)
    margin = tau - bar
    k = worst_of(Formulation.TRIANGLE, direction, margin)
    verdict.worst_margin = float(margin[k])
    verdict.passed = margin_ok(Formulation.TRIANGLE, direction, verdict.worst_margin, tol)
    verdict.samples = len(pairs)
    p, q = pairs[k]
    verdict.witnesses = [
        {
            "triangle": t.label(),
            "degenerate": t.degenerate,
            "p": [p.side.value, p.fraction],
            "q": [q.side.value, q.fraction],
            "tau": float(tau[k]),
            "tau_bar": float(bar[k]),
            "margin": float(margin[k]),
        }
    ]
    # note after the definition: below => (p << q implies p_bar << q_bar),
    # above => (p_bar << q_bar implies p << q)
    if direction is Direction.BELOW:
        verdict.notes["implication_failures"] = int(np.sum((tau > 0) & ~(bar > 0)))
    else:
        verdict.notes["implication_failures"] = int(np.sum((bar > 0) & ~(tau > 0)))
    return verdict


def check_triangle(geom, tri, K, direction, tol=TAU_TOL, fractions=SIDE_FRACTIONS) -> ComparisonVerdict:
    cfg = realize_triangle(K, tri)
    pairs = cross_side_pairs(side_points(geom, tri, fractions))
    return compare_triangle(K, direction, tri, cfg, pairs, geom, tol)


# -- hinges and angles -------------------------------------------------------------


@dataclass(frozen=True)
class Hinge:
    """Two geodesics from ``vertex`` to ``ends``; ``lengths`` are their tau-lengths."""

    vertex: object
    ends: tuple
    lengths: tuple[float, float]
    orientation: Orientation
    chains: tuple = (None, None)
    future: tuple[bool, bool] = (True, True)

    @property
    def sign(self) -> int:
        return self.orientation.sign

    def __post_init__(self):
        object.__setattr__(self, "orientation", Orientation(self.orientation))


def hinge(geom, vertex, end_a, end_b, chains=(None, None)) -> Hinge:
    fa = geom.tau(vertex, end_a) > 0
    fb = geom.tau(vertex, end_b) > 0
    la = geom.tau(vertex, end_a) if fa else geom.tau(end_a, vertex)
    lb = geom.tau(vertex, end_b) if fb else geom.tau(end_b, vertex)
    if not (la > 0 and lb > 0):
        raise NotTimelikeRelated("hinge legs must be timelike")
    orientation = Orientation.SAME if fa == fb else Orientation.MIXED
    return Hinge(vertex, (end_a, end_b), (la, lb), orientation, chains, (fa, fb))


def triangle_hinges(geom, tri: TimelikeTriangle) -> dict[str, Hinge]:
    x, y, z = tri.points
    ch = tri.chains or (None, None, None)
    return {
        "past": hinge(geom, x, y, z, (ch[0], ch[2])),
        "middle": hinge(geom, y, x, z, (ch[0], ch[1])),
        "future": hinge(geom, z, x, y, (ch[2], ch[1])),
    }


def _hinge_sides(h: Hinge, xa, ax, xb, bx, ab, ba):
    """Sides (a, b, c) and vertex role of x in the triangle (x, A, B)."""
    fa, fb = h.future
    la = np.where(fa, xa, ax)
    lb = np.where(fb, xb, bx)
    if fa and fb:
        a_first = ab > 0
        sides = (np.where(a_first, la, lb), np.where(a_first, ab, ba), np.where(a_first, lb, la))
        role = Vertex.PAST
        related = (ab > 0) | (ba > 0)
    elif not fa and not fb:
        a_first = ab > 0
        sides = (np.where(a_first, ab, ba), np.where(a_first, lb, la), np.where(a_first, la, lb))
        role = Vertex.FUTURE
        related = (ab > 0) | (ba > 0)
    elif not fa and fb:
        sides = (la, lb, ab)
        role = Vertex.MIDDLE
        related = ab > 0
    else:
        sides = (lb, la, ba)
        role = Vertex.MIDDLE
        related = ba > 0
    return sides, role, related


def hinge_angle_grid(geom, h: Hinge, K: float, s_grid, t_grid):
    """Signed K-comparison angles at the hinge vertex over the (s, t) grid.

    Returns (angles, lengths_a, lengths_b) with NaN where (x, alpha(s),
    beta(t)) is not a realizable timelike triangle.
    """
    A, fa_exact = geom.curve(h.vertex, h.ends[0], s_grid, h.chains[0])
    B, fb_exact = geom.curve(h.vertex, h.ends[1], t_grid, h.chains[1])
    return _angles_for(geom, h, K, A, B)


def _angles_for(geom, h, K, A, B):
    x = [h.vertex]
    xa = geom.tau_matrix(x, A)[0][:, None]
    ax = geom.tau_matrix(A, x)[:, 0][:, None]
    xb = geom.tau_matrix(x, B)[0][None, :]
    bx = geom.tau_matrix(B, x)[:, 0][None, :]
    ab = geom.tau_matrix(A, B)
    ba = geom.tau_matrix(B, A).T
    shape = ab.shape
    xa, ax = np.broadcast_to(xa, shape), np.broadcast_to(ax, shape)
    xb, bx = np.broadcast_to(xb, shape), np.broadcast_to(bx, shape)
    (a, b, c), role, related = _hinge_sides(h, xa, ax, xb, bx, ab, ba)
    d_max = finite_diameter_constant(K)
    valid = related & (a > 0) & (b > 0) & (c - a - b >= -BOUNDARY_EPS * np.maximum(c, 1.0))
    valid &= c < d_max - BOUNDARY_EPS
    out = np.full(shape, np.nan)
    if valid.any():
        ang = comparison_angle_array(K, a[valid], b[valid], c[valid], role)
        out[valid] = h.sign * ang
    return out, np.where(h.future[0], xa, ax), np.where(h.future[1], xb, bx)


def _step_margins(grid: np.ndarray, upper: bool):
    """Consecutive differences along both axes, skipping invalid entries.

    Returns (margins, locations) where the margin is the step in the
    required monotone direction (nondecreasing for lower-type checks).
    """
    margins, where = [], []
    for axis in (0, 1):
        g = grid if axis == 0 else grid.T
        for r in range(g.shape[0]):
            idx = np.nonzero(~np.isnan(g[r]))[0]
            vals = g[r, idx]
            d = np.diff(vals)
            margins.extend(d.tolist())
            for k in range(len(d)):
                i0, i1 = int(idx[k]), int(idx[k + 1])
                where.append((r, i0, i1) if axis == 1 else (i0, i1, r))
    return np.asarray(margins), where


def compare_monotonicity(
    K, direction, h: Hinge, geom, grid=HINGE_GRID, tol: float = ANGLE_TOL
) -> ComparisonVerdict:
    """Signed K-comparison angle is nondecreasing in s and t (below); nonincreasing (above)."""
    direction = Direction(direction)
    g = np.asarray(grid, dtype=float)
    angles, _, _ = hinge_angle_grid(geom, h, K, g, g)
    valid = ~np.isnan(angles)
    if valid.any(axis=1).sum() < 2 or valid.any(axis=0).sum() < 2:
        raise InsufficientSamples("fewer than 2 valid grid points per axis")
    steps, where = _step_margins(angles, False)
    verdict = ComparisonVerdict(Formulation.MONOTONICITY, direction, float(K), True, None, tol=tol)
    verdict.samples = int(valid.sum())
    verdict.skipped = int((~valid).sum())
    if len(steps) == 0:
        raise InsufficientSamples("no two valid grid points share an axis")
    k = worst_of(Formulation.MONOTONICITY, direction, steps)
    verdict.worst_margin = float(steps[k])
    verdict.passed = margin_ok(Formulation.MONOTONICITY, direction, verdict.worst_margin, tol)
    i0, i1, j = where[k]
    verdict.witnesses = [
        {"vertex": _label(h.vertex), "orientation": h.orientation.value, "s": [float(g[i0]), float(g[i1])] if i0 != i1 else float(g[i0]), "cell": [int(i0), int(i1), int(j)], "step": verdict.worst_margin}
    ]
    verdict.notes["grid_range"] = float(np.nanmax(angles) - np.nanmin(angles))
    return verdict


def _label(h):
    return list(h) if isinstance(h, tuple) else int(h)


@dataclass(frozen=True)
class AngleMeasurement:
    value: float
    sign: int
    estimate: float
    levels: tuple
    ratio: float

    @property
    def signed(self) -> float:
        return self.sign * self.value

    @property
    def converged(self) -> bool:
        return self.estimate <= ANGLE_TOL

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "sign": self.sign,
            "estimate": self.estimate,
            "ratio": self.ratio,
            "levels": [list(l) for l in self.levels],
        }


def richardson(nodes, values) -> tuple[float, float]:
    """Neville extrapolation in nodes (use h**2) to zero: (limit, |last - previous|)."""
    x = np.asarray(nodes, dtype=float)
    T = [np.asarray(values, dtype=float)]
    for j in range(1, len(x)):
        prev = T[-1]
        # prev[i] extrapolates nodes i .. i + j - 1
        cur = (x[j:] * prev[:-1] - x[: len(x) - j] * prev[1:]) / (x[j:] - x[: len(x) - j])
        T.append(cur)
    finals = [t[-1] for t in T]
    est = abs(finals[-1] - finals[-2]) if len(finals) > 1 else math.inf
    return float(finals[-1]), float(est)


def measure_angle(
    geom,
    h: Hinge,
    *,
    levels: int = ANGLE_LEVELS,
    shrink: float = ANGLE_SHRINK,
    tol: float = ANGLE_TOL,
    top: float = 0.5,
) -> AngleMeasurement:
    """Angle at the hinge vertex as the limit of flat comparison angles.

    The legs are sampled at tau-lengths ``l0 * shrink**k`` and ``r * l0 *
    shrink**k`` for a fixed length ratio ``r`` (the first admissible one of
    a fixed list), and the flat comparison angles are extrapolated in the
    squared leg length.
    """
    m, t = h.lengths
    for r in _LENGTH_RATIOS:
        l0 = top * min(m, t / r)
        la = l0 * shrink ** np.arange(levels)
        s = la / m
        tt = r * la / t
        A, fa = geom.curve(h.vertex, h.ends[0], s, h.chains[0])
        B, fb = geom.curve(h.vertex, h.ends[1], tt, h.chains[1])
        vals, lens = [], []
        seen = set()
        for k in range(levels):
            key = (_key(A[k]), _key(B[k]))
            if key in seen or A[k] == h.vertex or B[k] == h.vertex:
                continue
            ang, la_k, _ = _angles_for(geom, h, 0.0, [A[k]], [B[k]])
            if np.isnan(ang[0, 0]):
                continue
            seen.add(key)
            vals.append(abs(float(ang[0, 0])))
            lens.append(float(la_k[0, 0]))
        need = levels if geom.mode == "ambient" else 2
        if len(vals) >= need:
            break
    else:
        raise AngleUndefined("no admissible parameter pairs form timelike triangles with the vertex")
    order = np.argsort(lens)[::-1]
    lens = np.asarray(lens)[order]
    vals = np.asarray(vals)[order]
    value, est = richardson(lens**2, vals)
    value = max(value, 0.0)
    result = AngleMeasurement(value, h.sign, est, tuple(zip(lens.tolist(), vals.tolist())), r)
    if est > tol:
        raise NonConvergent(f"angle extrapolation moved by {est:.3g} > {tol:g}", result)
    return result


def _key(hd):
    return tuple(hd) if isinstance(hd, tuple) else int(hd)


def compare_angle(
    K, direction, h: Hinge, measured: AngleMeasurement, geom, grid=HINGE_GRID, tol: float = ANGLE_TOL
) -> ComparisonVerdict:
    """Measured signed angle against signed K-comparison angles on the grid (below: <=)."""
    direction = Direction(direction)
    g = np.asarray(grid, dtype=float)
    angles, _, _ = hinge_angle_grid(geom, h, K, g, g)
    vals = angles[~np.isnan(angles)]
    verdict = ComparisonVerdict(Formulation.ANGLE, direction, float(K), True, None, tol=tol)
    if vals.size == 0:
        raise InsufficientSamples("no admissible grid points")
    margins = measured.signed - vals
    k = worst_of(Formulation.ANGLE, direction, margins)
    verdict.worst_margin = float(margins[k])
    verdict.passed = margin_ok(Formulation.ANGLE, direction, verdict.worst_margin, tol)
    verdict.samples = int(vals.size)
    verdict.witnesses = [
        {"vertex": _label(h.vertex), "orientation": h.orientation.value, "angle": measured.signed, "comparison_angle": float(vals[k]), "margin": verdict.worst_margin}
    ]
    return verdict


def compare_hinge(
    K, direction, h: Hinge, omega: float | None, geom, tol: float = TAU_TOL
) -> ComparisonVerdict:
    """tau between the far endpoints against the law-of-cosines side (below: >=)."""
    direction = Direction(direction)
    if omega is None or not math.isfinite(omega):
        raise AngleUndefined("hinge comparison needs a measured angle")
    far_a, far_b = h.ends
    if h.orientation is Orientation.MIXED:
        fa, _ = h.future
        tau = geom.tau(far_b, far_a) if fa else geom.tau(far_a, far_b)
    else:
        tau = max(geom.tau(far_a, far_b), geom.tau(far_b, far_a))
    verdict = ComparisonVerdict(Formulation.HINGE, direction, float(K), True, None, tol=tol, samples=1)
    try:
        bar = float(law_of_cosines_array(K, h.lengths[0], h.lengths[1], omega, h.orientation))
    except ExceedsModelDiameter:
        verdict.skipped = 1
        verdict.samples = 0
        verdict.notes["beyond_size_bounds"] = 1
        return verdict
    verdict.worst_margin = float(tau - bar)
    verdict.passed = margin_ok(Formulation.HINGE, direction, verdict.worst_margin, tol)
    verdict.witnesses = [
        {"vertex": _label(h.vertex), "orientation": h.orientation.value, "m": h.lengths[0], "t": h.lengths[1], "omega": omega, "tau": tau, "tau_bar": bar, "margin": verdict.worst_margin}
    ]
    return verdict


# -- gluing ------------------------------------------------------------------------


def glue_subdivide(geom, t: TimelikeTriangle, p: SidePoint):
    """Split ``t`` through a point on one of its sides.

    On the long side (x to z) the point must be timelike related to y; the
    order of y and p is swapped when y << p.  On a short side the shared
    segment runs to the opposite vertex.
    """
    x, y, z = t.points
    ph = p.handle
    if p.side is Side.XZ:
        if geom.tau(ph, y) > 0:
            return make_triangle(geom, x, ph, y), make_triangle(geom, ph, y, z)
        if geom.tau(y, ph) > 0:
            return make_triangle(geom, x, y, ph), make_triangle(geom, y, ph, z)
        raise NotTimelikeRelated("subdivision point is not timelike related to y")
    if p.side is Side.XY:
        return make_triangle(geom, x, ph, z), make_triangle(geom, ph, y, z)
    return make_triangle(geom, x, y, ph), make_triangle(geom, x, ph, z)


@dataclass
class GluingResult:
    parts_pass: bool
    whole_pass: bool
    case: str
    fraction: float

    @property
    def consistent(self) -> bool:
        return self.whole_pass or not self.parts_pass


def check_gluing(geom, t: TimelikeTriangle, p: SidePoint, K: float, tol: float = TAU_TOL) -> GluingResult:
    """Sub-triangle passes (above) must imply a whole-triangle pass (above)."""
    t1, t2 = glue_subdivide(geom, t, p)
    parts = all(check_triangle(geom, s, K, Direction.ABOVE, tol).passed for s in (t1, t2))
    whole = check_triangle(geom, t, K, Direction.ABOVE, tol).passed
    return GluingResult(parts, whole, "I" if p.side is Side.XZ else "II", p.fraction)
