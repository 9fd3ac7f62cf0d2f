"""Construction of discrete spaces: sprinkles, the Lorentzian cylinder, fixtures."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict
from enum import Enum

import numpy as np
from scipy import integrate

from .errors import ChartDomainError, DensityOverflow, RegionEmpty, UnknownFixture
from .model_spaces import HingeData, ModelSpace, law_of_cosines, model_space_from_tag
from .space import DiscreteSpace, Provenance, TauMode, with_intrinsic_tau

POINT_CAP = 200_000
_BLOCK = 512


# -- the Lorentzian cylinder ---------------------------------------------------


def _reduce(dx, L):
    """Representative of dx modulo L in [-L/2, L/2)."""
    return (np.asarray(dx, dtype=float) + L / 2.0) % L - L / 2.0


def cylinder_windings(L: float, p, q) -> dict[int, float]:
    """Minkowski tau from p to q + (0, w L) for every winding that can be timelike.

    Windings are counted on the raw coordinate difference.  Only
    ``|dx + wL| < dt`` can be timelike, which the enumerated range covers.
    """
    dt = float(q[0]) - float(p[0])
    dx = float(q[1]) - float(p[1])
    if dt <= 0:
        return {}
    centre = int(round(-dx / L))
    reach = math.ceil(dt / L) + 1
    out = {}
    for w in range(centre - reach, centre + reach + 1):
        d = dx + w * L
        if dt > abs(d):
            out[w] = math.sqrt((dt - d) * (dt + d))
    assert all(abs(dx + w * L) < dt for w in out)
    return out


def cylinder_tau(L: float, p, q) -> float:
    vals = cylinder_windings(L, p, q)
    return max(vals.values()) if vals else 0.0


@dataclass(frozen=True)
class Cylinder:
    """Flat cylinder R x (R / L Z): Minkowski strip with glued edges."""

    circumference: float = 2.0 * math.pi
    K: float = 0.0

    def __post_init__(self):
        if not self.circumference > 0:
            raise ValueError("circumference must be positive")

    @property
    def tag(self) -> str:
        return f"cylinder {self.circumference!r}"

    @property
    def d_max(self) -> float:
        return math.inf

    def in_domain(self, P) -> np.ndarray:
        P = np.asarray(P, dtype=float)
        return np.isfinite(P[..., 0]) & np.isfinite(P[..., 1])

    def check_domain(self, P) -> None:
        if not np.all(self.in_domain(P)):
            raise ChartDomainError("non-finite cylinder coordinate")

    def wrap(self, P) -> np.ndarray:
        P = np.array(P, dtype=float)
        P[..., 1] = P[..., 1] % self.circumference
        return P

    def tau_array(self, P, Q, check: bool = True) -> np.ndarray:
        P = np.asarray(P, dtype=float)
        Q = np.asarray(Q, dtype=float)
        dt = Q[..., 0] - P[..., 0]
        # the shortest representative is always a maximizer
        dx = np.abs(_reduce(Q[..., 1] - P[..., 1], self.circumference))
        return np.where(dt > dx, np.sqrt(np.maximum((dt - dx) * (dt + dx), 0.0)), 0.0)

    def tau(self, p, q) -> float:
        return cylinder_tau(self.circumference, p, q)

    def windings(self, p, q) -> dict[int, float]:
        return cylinder_windings(self.circumference, p, q)

    def best_winding(self, p, q) -> int:
        vals = self.windings(p, q)
        if not vals:
            raise ValueError("points are not timelike related")
        top = max(vals.values())
        return min(w for w, v in vals.items() if v >= top * (1 - 1e-15))

    def maximizer_count(self, p, q, rel_tol: float = 0.0) -> int:
        vals = self.windings(p, q)
        if not vals:
            return 0
        top = max(vals.values())
        return sum(1 for v in vals.values() if v >= top * (1.0 - rel_tol) - 1e-15)

    def geodesic(self, p, q, s, winding: int | None = None):
        """Straight segment from p to q + (0, wL) (wrapped into [0, L))."""
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        w = self.best_winding(p, q) if winding is None else winding
        end = q + np.array([0.0, w * self.circumference])
        scalar = np.ndim(s) == 0
        s = np.atleast_1d(np.asarray(s, dtype=float))
        pts = p[None, :] + s[:, None] * (end - p)[None, :]
        pts[:, 1] %= self.circumference
        pts[s == 0.0] = p
        pts[s == 1.0] = q
        return pts[0] if scalar else pts

    def volume_density(self, P) -> np.ndarray:
        return np.ones(np.asarray(P).shape[:-1])

    def background_distance(self, P, Q) -> np.ndarray:
        P = np.asarray(P, dtype=float)
        Q = np.asarray(Q, dtype=float)
        return np.hypot(Q[..., 0] - P[..., 0], _reduce(Q[..., 1] - P[..., 1], self.circumference))


def ambient_from_tag(tag: str):
    """ModelSpace or Cylinder described by an ambient tag."""
    if tag.startswith("cylinder"):
        parts = tag.split()
        return Cylinder(float(parts[1]) if len(parts) > 1 else 2.0 * math.pi)
    return model_space_from_tag(tag)


# -- regions -------------------------------------------------------------------


class Ambient(str, Enum):
    MINKOWSKI = "minkowski"
    ADS = "ads"
    DESITTER = "desitter"
    CYLINDER = "cylinder"


@dataclass(frozen=True)
class Region:
    """Chart rectangle ``t0<=t<=t1, x0<=x<=x1`` or causal diamond between tips."""

    kind: str
    bounds: tuple[float, float, float, float]

    @classmethod
    def diamond(cls, bottom, top) -> "Region":
        return cls("diamond", (float(bottom[0]), float(bottom[1]), float(top[0]), float(top[1])))

    @classmethod
    def rect(cls, t0, t1, x0, x1) -> "Region":
        return cls("rect", (float(t0), float(t1), float(x0), float(x1)))

    def __post_init__(self):
        if self.kind not in ("diamond", "rect"):
            raise ValueError(f"unknown region kind {self.kind!r}")

    @property
    def null_box(self):
        """(u0, u1, v0, v1) with u = t - x, v = t + x (diamonds only)."""
        t0, x0, t1, x1 = self.bounds
        return t0 - x0, t1 - x1, t0 + x0, t1 + x1

    def is_empty(self) -> bool:
        if self.kind == "diamond":
            u0, u1, v0, v1 = self.null_box
            return not (u1 > u0 and v1 > v0)
        t0, t1, x0, x1 = self.bounds
        return not (t1 > t0 and x1 > x0)

    def vertices(self) -> np.ndarray:
        if self.kind == "diamond":
            u0, u1, v0, v1 = self.null_box
            uv = np.array([[u0, v0], [u1, v0], [u0, v1], [u1, v1]])
            return np.stack([(uv[:, 0] + uv[:, 1]) / 2, (uv[:, 1] - uv[:, 0]) / 2], axis=1)
        t0, t1, x0, x1 = self.bounds
        return np.array([[t0, x0], [t0, x1], [t1, x0], [t1, x1]])

    def contains(self, P) -> np.ndarray:
        P = np.asarray(P, dtype=float)
        t, x = P[..., 0], P[..., 1]
        if self.kind == "diamond":
            u0, u1, v0, v1 = self.null_box
            u, v = t - x, t + x
            return (u >= u0) & (u <= u1) & (v >= v0) & (v <= v1)
        t0, t1, x0, x1 = self.bounds
        return (t >= t0) & (t <= t1) & (x >= x0) & (x <= x1)

    def _uniform(self, rng, k) -> np.ndarray:
        if self.kind == "diamond":
            u0, u1, v0, v1 = self.null_box
            u = rng.uniform(u0, u1, k)
            v = rng.uniform(v0, v1, k)
            return np.stack([(u + v) / 2, (v - u) / 2], axis=1)
        t0, t1, x0, x1 = self.bounds
        return np.stack([rng.uniform(t0, t1, k), rng.uniform(x0, x1, k)], axis=1)

    def volume(self, density) -> float:
        """Integral of the volume density over the region."""
        if self.kind == "diamond":
            u0, u1, v0, v1 = self.null_box
            f = lambda v, u: 0.5 * float(density(np.array([(u + v) / 2, (v - u) / 2])))
            return integrate.dblquad(f, u0, u1, v0, v1, epsabs=1e-12, epsrel=1e-10)[0]
        t0, t1, x0, x1 = self.bounds
        f = lambda x, t: float(density(np.array([t, x])))
        return integrate.dblquad(f, t0, t1, x0, x1, epsabs=1e-12, epsrel=1e-10)[0]

    def to_text(self) -> str:
        if self.kind == "diamond":
            t0, x0, t1, x1 = self.bounds
            return f"diamond {t0!r},{x0!r}:{t1!r},{x1!r}"
        t0, t1, x0, x1 = self.bounds
        return f"rect {t0!r},{t1!r},{x0!r},{x1!r}"


def parse_diamond(text: str) -> Region:
    """``t0,x0:t1,x1`` -> diamond."""
    try:
        lo, hi = text.split(":")
        b = [float(v) for v in lo.split(",")]
        t = [float(v) for v in hi.split(",")]
        if len(b) != 2 or len(t) != 2:
            raise ValueError
    except ValueError:
        raise ValueError(f"diamond must look like t0,x0:t1,x1, got {text!r}") from None
    return Region.diamond(b, t)


def parse_rect(text: str) -> Region:
    """``t0,t1,x0,x1`` -> rectangle."""
    try:
        vals = [float(v) for v in text.split(",")]
        if len(vals) != 4:
            raise ValueError
    except ValueError:
        raise ValueError(f"rect must look like t0,t1,x0,x1, got {text!r}") from None
    return Region.rect(*vals)


# -- sprinkling ----------------------------------------------------------------


@dataclass(frozen=True)
class SprinkleSpec:
    ambient: Ambient | str = Ambient.MINKOWSKI
    count: int | None = None
    density: float | None = None
    seed: int = 0
    region: Region | None = None
    K: float | None = None
    circumference: float = 2.0 * math.pi
    tau_mode: str = "inherited"
    full_ads: bool = False
    cap: int = POINT_CAP

    def __post_init__(self):
        object.__setattr__(self, "ambient", Ambient(self.ambient))
        if (self.count is None) == (self.density is None):
            raise ValueError("give exactly one of count and density")
        if self.count is not None and self.count < 0:
            raise ValueError("count must be nonnegative")
        if self.density is not None and not self.density > 0:
            raise ValueError("density must be positive")
        if self.tau_mode not in ("inherited", "intrinsic-weighted", "intrinsic-link"):
            raise ValueError(f"unknown tau mode {self.tau_mode!r}")
        if self.ambient is Ambient.ADS and self.curvature >= 0:
            raise ValueError("ads needs K < 0")
        if self.ambient is Ambient.DESITTER and self.curvature <= 0:
            raise ValueError("desitter needs K > 0")

    @property
    def curvature(self) -> float:
        if self.ambient is Ambient.ADS:
            return -1.0 if self.K is None else float(self.K)
        if self.ambient is Ambient.DESITTER:
            return 1.0 if self.K is None else float(self.K)
        return 0.0

    def geometry(self):
        if self.ambient is Ambient.CYLINDER:
            return Cylinder(self.circumference)
        return ModelSpace(self.curvature, full_ads=self.full_ads and self.ambient is Ambient.ADS)

    def effective_region(self) -> Region:
        if self.region is not None:
            return self.region
        return default_region(self.ambient, self.curvature, self.circumference)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["ambient"] = self.ambient.value
        d["K"] = self.curvature
        d["region"] = self.effective_region().to_text()
        return d


def default_region(ambient: Ambient | str, K: float = 0.0, circumference: float = 2 * math.pi) -> Region:
    ambient = Ambient(ambient)
    if ambient is Ambient.MINKOWSKI:
        return Region.diamond((0.0, 0.0), (4.0, 0.0))
    if ambient is Ambient.CYLINDER:
        return Region.rect(0.0, 1.5 * circumference, 0.0, circumference)
    R = 1.0 / math.sqrt(abs(K))
    if ambient is Ambient.ADS:
        return Region.diamond((0.25 * R, 0.0), ((math.pi - 0.25) * R, 0.0))
    return Region.diamond((-1.2 * R, 0.0), (1.2 * R, 0.0))


def _check_region(spec: SprinkleSpec, region: Region, geom) -> None:
    if region.is_empty():
        raise RegionEmpty(f"region {region.to_text()} has no interior")
    if spec.ambient is Ambient.CYLINDER:
        xs = region.vertices()[:, 1]
        if xs.max() - xs.min() > spec.circumference + 1e-12:
            raise ChartDomainError("region is wider than the cylinder")
        return
    if not np.all(geom.in_domain(region.vertices())):
        raise ChartDomainError(f"region {region.to_text()} leaves the {geom.chart.value} chart domain")


def sample_points(spec: SprinkleSpec) -> np.ndarray:
    """Poisson/fixed-count sample of the region, sorted by time."""
    geom = spec.geometry()
    region = spec.effective_region()
    _check_region(spec, region, geom)
    rng = np.random.default_rng(spec.seed)
    if spec.count is not None:
        k = spec.count
    else:
        mean = spec.density * region.volume(geom.volume_density)
        if mean > spec.cap:
            raise DensityOverflow(f"expected {mean:.0f} points exceeds cap {spec.cap}")
        k = int(rng.poisson(mean))
    if k > spec.cap:
        raise DensityOverflow(f"{k} points exceeds cap {spec.cap}")
    envelope = float(np.max(geom.volume_density(region.vertices())))
    chunks, have = [], 0
    while have < k:
        batch = max(64, int(1.3 * (k - have)) + 16)
        cand = region._uniform(rng, batch)
        accept = rng.random(batch) * envelope <= geom.volume_density(cand)
        cand = cand[accept]
        chunks.append(cand)
        have += len(cand)
    pts = np.concatenate(chunks)[:k] if chunks else np.empty((0, 2))
    if spec.ambient is Ambient.CYLINDER:
        pts[:, 1] %= spec.circumference
    return pts[np.lexsort((pts[:, 1], pts[:, 0]))]


def space_from_points(points, geom, *, provenance=Provenance.INHERITED, meta=None, dense_limit=None) -> DiscreteSpace:
    """Restrict the ambient relation and tau to ``points`` (assumed time-sorted)."""
    P = np.asarray(points, dtype=float).reshape(-1, 2)
    n = len(P)
    rows, cols, vals = [], [], []
    for i0 in range(0, n, _BLOCK):
        blk = geom.tau_array(P[i0 : i0 + _BLOCK, None, :], P[None, :, :])
        r, c = np.nonzero(blk > 0)
        rows.append(r + i0)
        cols.append(c)
        vals.append(blk[r, c])
    rows = np.concatenate(rows) if rows else np.empty(0, np.int64)
    cols = np.concatenate(cols) if cols else np.empty(0, np.int64)
    vals = np.concatenate(vals) if vals else np.empty(0)
    kw = {} if dense_limit is None else {"dense_limit": dense_limit}
    return DiscreteSpace.from_pairs(
        n, rows, cols, vals, coords=P, ambient=geom.tag, provenance=provenance, meta=meta, **kw
    )


def sprinkle(spec: SprinkleSpec) -> DiscreteSpace:
    """Sprinkle points into the ambient region and restrict its causal structure."""
    pts = sample_points(spec)
    sp = space_from_points(pts, spec.geometry(), meta={"spec": spec.to_dict(), "tau_mode": "inherited"})
    if spec.tau_mode == "intrinsic-weighted":
        sp = with_intrinsic_tau(sp, TauMode.WEIGHTED)
    elif spec.tau_mode == "intrinsic-link":
        sp = with_intrinsic_tau(sp, TauMode.LINK_COUNT)
    return sp


# -- fixtures ------------------------------------------------------------------


def _geometric(points, geom, meta) -> DiscreteSpace:
    return space_from_points(points, geom, provenance=Provenance.INHERITED, meta=meta)


def _gluing_basic() -> DiscreteSpace:
    pts = [(0.0, 0.0), (1.0, 0.0), (2.5, 1.0), (4.0, 0.0)]
    meta = {
        "labels": ["x", "p", "y", "z"],
        "triangles": [[0, 2, 3]],
        "subdivision": {"triangle": [0, 2, 3], "side": "xz", "point": 1, "fraction": 0.25},
    }
    return _geometric(pts, ModelSpace(0.0), meta)


CYLINDER_L = 2.0 * math.pi
CYLINDER_T = 6.0


def _cylinder_counterexample() -> DiscreteSpace:
    L, T = CYLINDER_L, CYLINDER_T
    pts = [
        (0.0, 0.0),
        (T / 4, (-math.pi / 4) % L),
        (T / 2, math.pi / 2),
        (3 * T / 4, 3 * math.pi / 4),
        (T, math.pi),
    ]
    meta = {
        "labels": ["x", "p", "y", "q", "z"],
        "triangles": [[0, 2, 4]],
        "pair": {"p": ["xz", 0.25], "q": ["yz", 0.5], "indices": [1, 3]},
    }
    return _geometric(pts, Cylinder(L), meta)


def cylinder_scenario(count: int = 600, seed: int = 0) -> DiscreteSpace:
    """The cylinder fixture embedded in a sprinkle of the same cylinder.

    Indices 0..4 are the fixture points; the rest are sprinkled over the
    fixture's time span, so small diamonds are well populated while the
    fixture triangle still wraps around the circle.
    """
    base = _cylinder_counterexample()
    spec = SprinkleSpec(
        Ambient.CYLINDER, count=count, seed=seed, region=Region.rect(0.0, CYLINDER_T, 0.0, CYLINDER_L), circumference=CYLINDER_L
    )
    pts = np.concatenate([base.coords, sample_points(spec)])
    meta = base.meta
    meta["spec"] = spec.to_dict()
    return _geometric(pts, Cylinder(CYLINDER_L), meta)


def _degenerate_triangle() -> DiscreteSpace:
    pts = [(0.0, 0.0), (1.0, 0.0), (2.5, 0.0)]
    return _geometric(pts, ModelSpace(0.0), {"labels": ["x", "y", "z"], "triangles": [[0, 1, 2]]})


def _three_chain(long_side: float) -> DiscreteSpace:
    return DiscreteSpace.from_links(
        3,
        [(0, 1), (1, 2)],
        [(0, 1, 1.0), (1, 2, 1.0), (0, 2, long_side)],
        provenance=Provenance.EXPLICIT,
        meta={"labels": ["x", "y", "z"], "triangles": [[0, 1, 2]]},
    )


def _diamond_poset() -> DiscreteSpace:
    return DiscreteSpace.from_links(
        4,
        [(0, 1), (0, 2), (1, 3), (2, 3)],
        [(0, 1, 1.0), (0, 2, 1.0), (1, 3, 1.0), (2, 3, 1.0), (0, 3, 2.0)],
        provenance=Provenance.INTRINSIC,
        meta={"labels": ["x", "a", "b", "z"]},
    )


BONNET_EPS = 0.2
BONNET_M = 0.1
BONNET_OMEGA = 0.5


def bonnet_values(eps: float = BONNET_EPS, m: float = BONNET_M, omega: float = BONNET_OMEGA) -> dict:
    """Side lengths of the two K = -1 comparison hinges at the midpoint x."""
    t = math.pi / 2 + eps / 2
    p_tilde = law_of_cosines(HingeData(-1.0, m, t, omega, "mixed"))
    q_tilde = law_of_cosines(HingeData(-1.0, m, t, omega, "same"))
    return {"eps": eps, "t": t, "m": m, "omega": omega, "p_tilde": p_tilde, "q_tilde": q_tilde}


def _bonnet_myers() -> DiscreteSpace:
    v = bonnet_values()
    t, m = v["t"], v["m"]
    entries = [
        (0, 1, t),
        (1, 3, t),
        (1, 2, m),
        (0, 2, v["p_tilde"]),
        (2, 3, v["q_tilde"]),
        (0, 3, 2 * t),
    ]
    return DiscreteSpace.from_links(
        4,
        [(0, 1), (1, 2), (2, 3)],
        entries,
        provenance=Provenance.EXPLICIT,
        meta={"labels": ["a", "x", "y", "b"], "K": -1.0, "bonnet": v, "triangles": [[0, 2, 3]]},
    )


FIXTURES = {
    "gluing-basic": _gluing_basic,
    "cylinder-counterexample": _cylinder_counterexample,
    "degenerate-triangle": _degenerate_triangle,
    "three-chain": lambda: _three_chain(2.5),
    "three-chain-violating": lambda: _three_chain(1.5),
    "diamond-poset": _diamond_poset,
    "bonnet-myers": _bonnet_myers,
}


def fixture(name: str) -> DiscreteSpace:
    try:
        build = FIXTURES[name]
    except KeyError:
        raise UnknownFixture(f"unknown fixture {name!r}; known: {', '.join(sorted(FIXTURES))}") from None
    return build()
