"""Exact geometry of the two-dimensional Lorentzian model spaces.

All three curvature signs use a conformally flat chart scaled by the
curvature radius ``R = 1/sqrt(|K|)`` so that the metric at the chart origin
is ``-dt^2 + dx^2`` and the coordinates degenerate smoothly to Minkowski
coordinates as ``K -> 0``:

* ``K = 0``: the global Minkowski plane ``(t, x)``.
* ``K < 0`` (anti-de Sitter): ``t = R*T``, ``x = R*s`` with metric
  ``(-dT^2 + ds^2) / cos(s)^2`` on the strip ``|s| < pi/2``.  The embedding
  is ``(R cos T / cos s, R sin T / cos s, R tan s)`` in R^{2,1} with
  signature (-,-,+).  By default only the globally hyperbolic patch
  ``J^+(origin) & I^-(pi R, 0)`` is admitted; ``full_ads=True`` opens the
  whole universal cover and reports ``tau = inf`` beyond the first
  conjugate point.
* ``K > 0`` (de Sitter): ``t = R*T``, ``x = R*s`` with metric
  ``(-dT^2 + ds^2) / cos(T)^2`` for ``|T| < pi/2`` and ``s`` periodic; the
  embedding is ``(R tan T, R cos s / cos T, R sin s / cos T)`` in R^{1,2}.

Time separations are evaluated with half-angle products such as
``sin((dT+ds)/2) sin((dT-ds)/2)``, which stay accurate for short and
nearly null separations alike.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

import numpy as np

from .errors import (
    ChartDomainError,
    ExceedsModelDiameter,
    NotTimelikeRelated,
    UnrealizableTriangle,
)

#: Distance to D_K (and slack below arcosh(1)) treated as "on the boundary".
BOUNDARY_EPS = 1e-12


class Chart(str, Enum):
    MINKOWSKI = "minkowski"
    ADS_CONFORMAL = "ads-conformal"
    DS_CONFORMAL = "desitter-conformal"


class Orientation(str, Enum):
    """Relative time orientation of the two legs of a hinge."""

    SAME = "same"
    MIXED = "mixed"

    @property
    def sign(self) -> int:
        return -1 if self is Orientation.SAME else 1


class Vertex(str, Enum):
    PAST = "past"
    MIDDLE = "middle"
    FUTURE = "future"


def angle_sign(vertex: Vertex | str) -> int:
    """Sign of a comparison angle: -1 at the past/future vertex, +1 in the middle."""
    return 1 if Vertex(vertex) is Vertex.MIDDLE else -1


class ModelPoint(NamedTuple):
    t: float
    x: float


def finite_diameter_constant(K: float) -> float:
    if K >= 0:
        return math.inf
    return math.pi / math.sqrt(-K)


@dataclass(frozen=True)
class HingeData:
    K: float
    m: float
    t: float
    omega: float
    orientation: Orientation = Orientation.SAME

    def __post_init__(self):
        object.__setattr__(self, "orientation", Orientation(self.orientation))

    @property
    def sigma(self) -> int:
        return self.orientation.sign


# -- generalized trig ------------------------------------------------------


def _sn(K: float, x):
    """sin_K(x): sin(kx)/k, x or sinh(kx)/k."""
    if K == 0:
        return np.asarray(x, dtype=float)
    k = math.sqrt(abs(K))
    if K < 0:
        return np.sin(k * np.asarray(x)) / k
    return np.sinh(k * np.asarray(x)) / k


def _check_length(K: float, value, what: str) -> None:
    d = finite_diameter_constant(K)
    if np.any(np.asarray(value) >= d - BOUNDARY_EPS * max(1.0, d if math.isfinite(d) else 1.0)):
        raise ExceedsModelDiameter(f"{what} reaches D_K = {d}")


def cosh_minus_one_same(K: float, m, t, opposite):
    """cosh(w) - 1 for a same-orientation hinge with legs m, t and opposite side."""
    gap = np.abs(np.asarray(t, float) - np.asarray(m, float))
    num = 2.0 * _sn(K, (gap + opposite) / 2.0) * _sn(K, (gap - opposite) / 2.0)
    return num / (_sn(K, m) * _sn(K, t))


def cosh_minus_one_mixed(K: float, m, t, opposite):
    """cosh(w) - 1 for a mixed-orientation hinge (opposite side is the long one)."""
    s = np.asarray(m, float) + np.asarray(t, float)
    num = 2.0 * _sn(K, (opposite + s) / 2.0) * _sn(K, (opposite - s) / 2.0)
    return num / (_sn(K, m) * _sn(K, t))


def _arcosh_from_excess(delta):
    """arcosh(1 + delta), clamping slightly negative delta (round-off) to 0."""
    delta = np.asarray(delta, dtype=float)
    if np.any(delta < -BOUNDARY_EPS):
        raise UnrealizableTriangle("comparison angle argument below 1")
    return 2.0 * np.arcsinh(np.sqrt(np.maximum(delta, 0.0) / 2.0))


# -- law of cosines / comparison angles -------------------------------------


def law_of_cosines_array(K: float, m, t, omega, orientation: Orientation | str):
    """Vectorized third side of a comparison hinge in L_K.

    Same orientation: spacelike results (no timelike opposite side) give 0.
    """
    orientation = Orientation(orientation)
    m = np.asarray(m, dtype=float)
    t = np.asarray(t, dtype=float)
    _check_length(K, m, "hinge side m")
    _check_length(K, t, "hinge side t")
    delta = 2.0 * np.sinh(np.asarray(omega, dtype=float) / 2.0) ** 2
    mixed = orientation is Orientation.MIXED
    if K == 0:
        if mixed:
            S = ((m + t) / 2.0) ** 2 + m * t * delta / 2.0
        else:
            S = ((t - m) / 2.0) ** 2 - m * t * delta / 2.0
        return 2.0 * np.sqrt(np.maximum(S, 0.0))
    k = math.sqrt(abs(K))
    mm, tt = k * m, k * t
    if K < 0:
        if mixed and np.any(mm + tt >= math.pi - BOUNDARY_EPS):
            raise ExceedsModelDiameter("mixed hinge with m + t >= D_K")
        pr = np.sin(mm) * np.sin(tt) * delta / 2.0
        if mixed:
            S = np.sin((mm + tt) / 2.0) ** 2 + pr
            C = np.cos((mm + tt) / 2.0) ** 2 - pr
        else:
            S = np.sin((tt - mm) / 2.0) ** 2 - pr
            C = np.cos((tt - mm) / 2.0) ** 2 + pr
        if np.any((C <= 0) & (S > 0)):
            raise ExceedsModelDiameter("opposite side reaches D_K")
        out = 2.0 * np.arctan2(np.sqrt(np.maximum(S, 0.0)), np.sqrt(np.maximum(C, 0.0)))
        if np.any(out >= math.pi - BOUNDARY_EPS):
            raise ExceedsModelDiameter("opposite side reaches D_K")
        return out / k
    pr = np.sinh(mm) * np.sinh(tt) * delta / 2.0
    if mixed:
        S = np.sinh((mm + tt) / 2.0) ** 2 + pr
    else:
        S = np.sinh((tt - mm) / 2.0) ** 2 - pr
    return 2.0 * np.arcsinh(np.sqrt(np.maximum(S, 0.0))) / k


def law_of_cosines(h: HingeData) -> float:
    """Opposite side of the comparison hinge ``h`` in L_K.

    For K = -1 this is ``cos(o) = cos(m)cos(t) - sigma sin(m)sin(t)cosh(w)``
    with ``sigma = +1`` for mixed and ``-1`` for same orientation.
    """
    return float(law_of_cosines_array(h.K, h.m, h.t, h.omega, h.orientation))


def _validate_sides(K: float, a, b, c):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    c = np.asarray(c, dtype=float)
    if np.any(a <= 0) or np.any(b <= 0):
        raise UnrealizableTriangle("triangle sides must be positive")
    excess = c - a - b
    slack = BOUNDARY_EPS * np.maximum(c, 1.0)
    if np.any(excess < -slack):
        raise UnrealizableTriangle("reverse triangle inequality violated")
    d = finite_diameter_constant(K)
    if np.any(c >= d - BOUNDARY_EPS * (d if math.isfinite(d) else 1.0)):
        raise UnrealizableTriangle(f"longest side violates size bound D_K = {d}")
    return a, b, np.maximum(c, a + b)


def comparison_angle_array(K: float, a, b, c, vertex: Vertex | str):
    """Unsigned K-comparison angles for side triples (a, b, c) = (xy, yz, xz)."""
    vertex = Vertex(vertex)
    a, b, c = _validate_sides(K, a, b, c)
    if vertex is Vertex.PAST:
        delta = cosh_minus_one_same(K, a, c, b)
    elif vertex is Vertex.MIDDLE:
        delta = cosh_minus_one_mixed(K, a, b, c)
    else:
        delta = cosh_minus_one_same(K, b, c, a)
    return _arcosh_from_excess(delta)


def comparison_angle(ms: "ModelSpace | float", sides, vertex: Vertex | str) -> float:
    """Unsigned K-comparison angle at ``vertex`` of the triangle with ``sides``.

    ``sides`` are ``(tau(x,y), tau(y,z), tau(x,z))`` for ``x << y << z``.
    The sign convention lives in :func:`angle_sign`.
    """
    K = ms.K if isinstance(ms, ModelSpace) else float(ms)
    a, b, c = sides
    return float(comparison_angle_array(K, a, b, c, vertex))


def signed_comparison_angle(ms, sides, vertex) -> float:
    return angle_sign(vertex) * comparison_angle(ms, sides, vertex)


# -- the model space itself -------------------------------------------------


def _wrap(angle):
    """Wrap to [-pi, pi)."""
    return (np.asarray(angle) + math.pi) % (2.0 * math.pi) - math.pi


@dataclass(frozen=True)
class ModelSpace:
    K: float = 0.0
    full_ads: bool = False

    def __post_init__(self):
        object.__setattr__(self, "K", float(self.K))
        if self.full_ads and self.K >= 0:
            raise ValueError("full_ads only applies to K < 0")

    # basic data
    @property
    def radius(self) -> float:
        return math.inf if self.K == 0 else 1.0 / math.sqrt(abs(self.K))

    @property
    def chart(self) -> Chart:
        if self.K == 0:
            return Chart.MINKOWSKI
        return Chart.ADS_CONFORMAL if self.K < 0 else Chart.DS_CONFORMAL

    @property
    def d_max(self) -> float:
        return finite_diameter_constant(self.K)

    @property
    def tag(self) -> str:
        if self.K == 0:
            return "minkowski"
        if self.K < 0:
            return f"{'ads-full' if self.full_ads else 'ads'} {self.K!r}"
        return f"desitter {self.K!r}"

    # domain
    def in_domain(self, P) -> np.ndarray:
        P = np.asarray(P, dtype=float)
        t, x = P[..., 0], P[..., 1]
        ok = np.isfinite(t) & np.isfinite(x)
        if self.K == 0:
            return ok
        R = self.radius
        T, S = t / R, x / R
        if self.K > 0:
            return ok & (np.abs(T) < math.pi / 2)
        ok &= np.abs(S) < math.pi / 2
        if not self.full_ads:
            ok &= (T >= np.abs(S) - BOUNDARY_EPS) & (T + np.abs(S) < math.pi)
        return ok

    def check_domain(self, P) -> None:
        if not np.all(self.in_domain(P)):
            raise ChartDomainError(f"point outside the {self.chart.value} chart domain")

    # time separation
    def tau_array(self, P, Q, check: bool = True) -> np.ndarray:
        """Vectorized tau(P, Q) over broadcast arrays of shape (..., 2)."""
        P = np.asarray(P, dtype=float)
        Q = np.asarray(Q, dtype=float)
        if check:
            self.check_domain(P)
            self.check_domain(Q)
        if self.K == 0:
            dt = Q[..., 0] - P[..., 0]
            dx = Q[..., 1] - P[..., 1]
            prod = (dt - dx) * (dt + dx)
            return np.where((dt > np.abs(dx)), np.sqrt(np.maximum(prod, 0.0)), 0.0)
        R = self.radius
        T1, S1 = P[..., 0] / R, P[..., 1] / R
        T2, S2 = Q[..., 0] / R, Q[..., 1] / R
        dT = T2 - T1
        if self.K > 0:
            dS = _wrap(S2 - S1)
            timelike = dT > np.abs(dS)
            num = np.sin((dT + dS) / 2) * np.sin((dT - dS) / 2) / (np.cos(T1) * np.cos(T2))
            out = 2.0 * R * np.arcsinh(np.sqrt(np.maximum(num, 0.0)))
            return np.where(timelike, out, 0.0)
        dS = S2 - S1
        sig = S1 + S2
        timelike = dT > np.abs(dS)
        beyond = timelike & (dT >= math.pi - np.abs(sig))
        if np.any(beyond) and not self.full_ads:
            raise ExceedsModelDiameter("pair beyond the globally hyperbolic patch")
        num = np.sin((dT + dS) / 2) * np.sin((dT - dS) / 2)
        den = np.cos((dT + sig) / 2) * np.cos((dT - sig) / 2)
        out = 2.0 * R * np.arctan2(np.sqrt(np.maximum(num, 0.0)), np.sqrt(np.maximum(den, 0.0)))
        out = np.where(timelike, out, 0.0)
        return np.where(beyond, math.inf, out)

    def tau(self, p, q) -> float:
        return float(self.tau_array(p, q))

    def volume_density(self, P) -> np.ndarray:
        """sqrt(-det g) in chart coordinates."""
        P = np.asarray(P, dtype=float)
        if self.K == 0:
            return np.ones(P.shape[:-1])
        R = self.radius
        if self.K < 0:
            return 1.0 / np.cos(P[..., 1] / R) ** 2
        return 1.0 / np.cos(P[..., 0] / R) ** 2

    def background_distance(self, P, Q) -> np.ndarray:
        P = np.asarray(P, dtype=float)
        Q = np.asarray(Q, dtype=float)
        dt = Q[..., 0] - P[..., 0]
        dx = Q[..., 1] - P[..., 1]
        if self.K > 0:
            dx = self.radius * _wrap(dx / self.radius)
        return np.hypot(dt, dx)

    def maximizer_count(self, p, q, rel_tol: float = 0.0) -> int:
        """Number of maximizing geodesics from p to q (1 inside the domain)."""
        return 1 if self.tau(p, q) > 0 else 0

    # embedding
    def _inner(self, A, B):
        if self.K < 0:
            return -A[..., 0] * B[..., 0] - A[..., 1] * B[..., 1] + A[..., 2] * B[..., 2]
        return -A[..., 0] * B[..., 0] + A[..., 1] * B[..., 1] + A[..., 2] * B[..., 2]

    def to_embedding(self, P) -> np.ndarray:
        if self.K == 0:
            raise ValueError("the flat chart needs no embedding")
        P = np.asarray(P, dtype=float)
        R = self.radius
        T, S = P[..., 0] / R, P[..., 1] / R
        if self.K < 0:
            c = np.cos(S)
            return R * np.stack([np.cos(T) / c, np.sin(T) / c, np.tan(S)], axis=-1)
        c = np.cos(T)
        return R * np.stack([np.tan(T), np.cos(S) / c, np.sin(S) / c], axis=-1)

    def from_embedding(self, E, t_ref=None, x_ref=None) -> np.ndarray:
        """Chart coordinates of embedded points.

        For AdS the time coordinate is unwrapped towards ``t_ref``; for de
        Sitter the periodic space coordinate is unwrapped towards ``x_ref``.
        """
        E = np.asarray(E, dtype=float)
        R = self.radius
        if self.K < 0:
            S = np.arctan(E[..., 2] / R)
            T = np.arctan2(E[..., 1], E[..., 0])
            if t_ref is not None:
                ref = np.asarray(t_ref, dtype=float) / R
                T = T + 2.0 * math.pi * np.round((ref - T) / (2.0 * math.pi))
        else:
            T = np.arctan(E[..., 0] / R)
            S = np.arctan2(E[..., 2], E[..., 1])
            if x_ref is not None:
                ref = np.asarray(x_ref, dtype=float) / R
                S = S + 2.0 * math.pi * np.round((ref - S) / (2.0 * math.pi))
        return np.stack([R * T, R * S], axis=-1)

    # geodesics
    def geodesic(self, p, q, s):
        """Constant-speed timelike geodesic from p (s=0) to q (s=1).

        Returns a :class:`ModelPoint` for scalar ``s`` and an (n, 2) array
        otherwise.
        """
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        scalar = np.ndim(s) == 0
        s = np.atleast_1d(np.asarray(s, dtype=float))
        tau = self.tau(p, q)
        if tau <= 0:
            raise NotTimelikeRelated("geodesic endpoints are not timelike related")
        if tau >= self.d_max - BOUNDARY_EPS:
            raise ExceedsModelDiameter("geodesic length reaches D_K")
        if self.K == 0:
            pts = p[None, :] + s[:, None] * (q - p)[None, :]
        else:
            R = self.radius
            theta = tau / R
            Ep, Eq = self.to_embedding(p), self.to_embedding(q)
            if self.K < 0:
                w0 = np.sin((1.0 - s) * theta) / math.sin(theta)
                w1 = np.sin(s * theta) / math.sin(theta)
            else:
                w0 = np.sinh((1.0 - s) * theta) / math.sinh(theta)
                w1 = np.sinh(s * theta) / math.sinh(theta)
            E = w0[:, None] * Ep[None, :] + w1[:, None] * Eq[None, :]
            pts = self.from_embedding(E, t_ref=p[0] + s * (q[0] - p[0]), x_ref=p[1] + s * (q[1] - p[1]))
        pts[s == 0.0] = p
        pts[s == 1.0] = q
        if scalar:
            return ModelPoint(float(pts[0, 0]), float(pts[0, 1]))
        return pts

    def exp_origin(self, length, rapidity, future: bool = True):
        """Point at tau-distance ``length`` from the chart origin.

        The initial unit tangent is ``(+-cosh w, sinh w)`` in the orthonormal
        frame (d/dt, d/dx) at the origin.  Vectorized over both arguments.
        """
        a = np.asarray(length, dtype=float)
        w = np.asarray(rapidity, dtype=float)
        sgn = 1.0 if future else -1.0
        if self.K == 0:
            out = np.stack(np.broadcast_arrays(sgn * a * np.cosh(w), a * np.sinh(w)), axis=-1)
        else:
            R = self.radius
            th = a / R
            if self.K < 0:
                T = np.arctan2(sgn * np.sin(th) * np.cosh(w), np.cos(th))
                S = np.arctan(np.sin(th) * np.sinh(w))
            else:
                T = np.arctan(sgn * np.sinh(th) * np.cosh(w))
                S = np.arctan2(np.sinh(th) * np.sinh(w), np.cosh(th))
            out = np.stack(np.broadcast_arrays(R * T, R * S), axis=-1)
        if out.ndim == 1:
            return ModelPoint(float(out[0]), float(out[1]))
        return out


def model_tau(ms: ModelSpace, p, q) -> float:
    return ms.tau(p, q)


def model_geodesic(ms: ModelSpace, p, q, s):
    return ms.geodesic(p, q, s)


def model_space_from_tag(tag: str) -> ModelSpace:
    parts = tag.split()
    if parts[0] == "minkowski":
        return ModelSpace(0.0)
    if parts[0] in ("ads", "ads-full"):
        return ModelSpace(float(parts[1]), full_ads=parts[0] == "ads-full")
    if parts[0] == "desitter":
        return ModelSpace(float(parts[1]))
    raise ValueError(f"not a model-space tag: {tag!r}")
