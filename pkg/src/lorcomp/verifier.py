"""Verification campaigns over a whole DiscreteSpace.

A campaign runs the axiom scan, every requested (K, direction, formulation)
comparison, the finite-diameter and perimeter bounds, and optionally the
local-versus-global diamond check.  Results never claim that a bound
holds; a pass means no violation was found in the sample.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict

import numpy as np

from . import comparison as cmp
from .comparison import Direction, Formulation
from .errors import (
    AngleUndefined,
    InsufficientSamples,
    NonConvergent,
    NotTimelikeRelated,
)
from .generators import ambient_from_tag
from .model_spaces import finite_diameter_constant
from .space import DiscreteSpace, finite_diameter, subspace, validate_axioms

DIAMETER_TOL = 1e-9
UNIQUENESS_TOL = 1e-2
NONDEGENERACY_ANGLE_TOL = 1e-3


@dataclass(frozen=True)
class Campaign:
    K_grid: tuple[float, ...] = (0.0,)
    directions: tuple[str, ...] = ("above", "below")
    formulations: tuple[str, ...] = ("triangle",)
    triangle_budget: int = 256
    hinge_budget: int = 32
    seed: int = 0
    locality: str = "global"
    diamond_radius: float = 1.5
    diamond_budget: int = 16
    diamond_min_points: int = 8
    diameter: bool = False
    nondegeneracy_lemma: bool = False
    tau_tol: float = cmp.TAU_TOL
    angle_tol: float = cmp.ANGLE_TOL
    jobs: int = 1

    def __post_init__(self):
        if not self.K_grid:
            raise ValueError("K grid must be nonempty")
        object.__setattr__(self, "K_grid", tuple(float(k) for k in self.K_grid))
        object.__setattr__(self, "directions", tuple(Direction(d).value for d in self.directions))
        object.__setattr__(self, "formulations", tuple(Formulation(f).value for f in self.formulations))
        for name in ("triangle_budget", "hinge_budget", "diamond_budget", "jobs"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.locality not in ("global", "diamonds"):
            raise ValueError("locality must be 'global' or 'diamonds'")
        if self.diamond_radius <= 0 or self.diamond_min_points < 0:
            raise ValueError("diamond parameters must be positive")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["K_grid"] = list(self.K_grid)
        d["directions"] = list(self.directions)
        d["formulations"] = list(self.formulations)
        return d


@dataclass
class FormulationResult:
    K: float
    direction: str
    formulation: str
    verdict: cmp.ComparisonVerdict
    items: list = field(default_factory=list)
    skipped: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = self.verdict.to_dict()
        d["items"] = len(self.items)
        d["skipped_reasons"] = dict(sorted(self.skipped.items()))
        return d


@dataclass
class VerificationReport:
    campaign: Campaign
    space: dict
    axioms: dict
    results: list[FormulationResult]
    diameter: list = field(default_factory=list)
    perimeter: list = field(default_factory=list)
    nondegeneracy: dict | None = None
    nondegeneracy_lemma: list = field(default_factory=list)
    local: list = field(default_factory=list)
    runtime: dict = field(default_factory=dict)

    def violations(self) -> list[str]:
        out = []
        if not self.axioms["passed"]:
            out.append("axioms")
        if self.campaign.locality == "global":
            out += [f"{r.formulation}/{r.direction}/K={r.K:g}" for r in self.results if not r.verdict.passed]
        out += [f"diameter/K={d['K']:g}" for d in self.diameter if not d["passed"]]
        out += [f"perimeter/K={d['K']:g}" for d in self.perimeter if not d["passed"]]
        out += [f"nondegeneracy-lemma/K={d['K']:g}" for d in self.nondegeneracy_lemma if not d["passed"]]
        for lg in self.local:
            if not lg["local_passed"]:
                out.append(f"local/{lg['direction']}/K={lg['K']:g}")
            if not lg["implication_held"]:
                out.append(f"patchwork-implication/K={lg['K']:g}")
            if not lg["restriction_consistent"]:
                out.append(f"restriction/K={lg['K']:g}")
        return out

    @property
    def passed(self) -> bool:
        return not self.violations()

    def find(self, K, direction, formulation) -> FormulationResult:
        for r in self.results:
            if r.K == float(K) and r.direction == Direction(direction).value and r.formulation == Formulation(formulation).value:
                return r
        raise KeyError((K, direction, formulation))


# -- bounds ------------------------------------------------------------------------


def check_diameter_bound(sp: DiscreteSpace, K: float, tol: float = DIAMETER_TOL) -> dict:
    """finite_diameter(sp) <= D_K + tol."""
    bound = finite_diameter_constant(K)
    diam = finite_diameter(sp)
    witness = None
    if sp.n_pairs:
        rows, cols, tau, _ = sp.pairs()
        finite = np.isfinite(tau)
        if finite.any():
            k = int(np.argmax(np.where(finite, tau, -np.inf)))
            witness = [int(rows[k]), int(cols[k])]
    return {
        "K": float(K),
        "diameter": diam,
        "bound": bound,
        "margin": bound - diam,
        "passed": diam <= bound + tol,
        "witness": witness,
        "tol": tol,
    }


def check_perimeter(triangles, K: float, tol: float = DIAMETER_TOL) -> dict:
    """Every sampled perimeter stays below 2 D_K."""
    bound = 2 * finite_diameter_constant(K)
    if not triangles:
        return {"K": float(K), "max_perimeter": 0.0, "bound": bound, "margin": bound, "passed": True, "witness": None, "samples": 0, "tol": tol}
    per = [t.perimeter for t in triangles]
    k = int(np.argmax(per))
    return {
        "K": float(K),
        "max_perimeter": per[k],
        "bound": bound,
        "margin": bound - per[k],
        "passed": per[k] < bound + tol,
        "witness": triangles[k].label(),
        "samples": len(per),
        "tol": tol,
    }


def nondegeneracy_fraction(sp: DiscreteSpace, budget: int = 256, seed: int = 0) -> dict:
    """Share of sampled pairs x << z with a non-degenerate triangle through some y."""
    rows, cols, tau, _ = sp.pairs()
    ok = (tau > 0) & np.isfinite(tau)
    rows, cols, tau = rows[ok], cols[ok], tau[ok]
    if len(rows) == 0:
        return {"pairs": 0, "with_witness": 0, "fraction": None}
    rng = np.random.default_rng(seed)
    pick = rng.choice(len(rows), size=min(budget, len(rows)), replace=False)
    pick.sort()
    hits = 0
    for e in pick:
        x, z, c = int(rows[e]), int(cols[e]), float(tau[e])
        mid = sp.interval(x, z)
        if len(mid) == 0:
            continue
        a = np.array([sp.tau_at(x, int(y)) for y in mid])
        b = np.array([sp.tau_at(int(y), z) for y in mid])
        if np.any(c - (a + b) >= cmp.DEGENERACY_TOL * c):
            hits += 1
    return {"pairs": int(len(pick)), "with_witness": hits, "fraction": hits / len(pick)}


# -- formulations --------------------------------------------------------------------


class _AngleCache:
    """Angle measurements keyed by hinge; independent of K and direction."""

    def __init__(self, geom, tol):
        self.geom = geom
        self.tol = tol
        self._store: dict = {}

    def get(self, key, h):
        if key not in self._store:
            try:
                self._store[key] = cmp.measure_angle(self.geom, h, tol=self.tol)
            except NonConvergent as exc:
                self._store[key] = exc
            except AngleUndefined as exc:
                self._store[key] = exc
        got = self._store[key]
        if isinstance(got, Exception):
            raise got
        return got


def _hinges(geom, triangles):
    out = []
    for t in triangles:
        try:
            hs = cmp.triangle_hinges(geom, t)
        except NotTimelikeRelated:
            continue
        for role, h in hs.items():
            out.append(((tuple(t.label()) if t.indices else str(t.label()), role), h))
    return out


def _run_formulation(geom, triangles, hinges, angles, K, direction, formulation, c: Campaign) -> FormulationResult:
    tol = c.tau_tol if formulation in ("triangle", "hinge") else c.angle_tol
    verdicts, items, skipped = [], [], {}

    def skip(reason):
        skipped[reason] = skipped.get(reason, 0) + 1

    if formulation == "triangle":
        for t in triangles:
            v = cmp.check_triangle(geom, t, K, direction, tol)
            verdicts.append(v)
            items.append((t.label(), v.worst_margin, v.passed))
    else:
        for key, h in hinges:
            try:
                if formulation == "monotonicity":
                    v = cmp.compare_monotonicity(K, direction, h, geom, tol=tol)
                else:
                    meas = angles.get(key, h)
                    if formulation == "angle":
                        v = cmp.compare_angle(K, direction, h, meas, geom, tol=tol)
                    else:
                        v = cmp.compare_hinge(K, direction, h, meas.value, geom, tol=tol)
            except InsufficientSamples:
                skip("insufficient-samples")
                continue
            except NonConvergent:
                skip("angle-nonconvergent")
                continue
            except AngleUndefined:
                skip("angle-undefined")
                continue
            if v.worst_margin is None:
                skip("beyond-size-bounds")
            verdicts.append(v)
            items.append(([*key[0]] if isinstance(key[0], tuple) else key[0], key[1], v.worst_margin, v.passed))
    merged = cmp.merge_verdicts(verdicts, formulation, direction, K, tol)
    merged.skipped += sum(skipped.values())
    return FormulationResult(float(K), Direction(direction).value, formulation, merged, items, skipped)


# -- local versus global ---------------------------------------------------------------


def sample_diamonds(sp: DiscreteSpace, geom, radius: float, budget: int, min_points: int, seed: int) -> list:
    """Seeded timelike diamonds I(p, q) with small extent and enough interior points."""
    rows, cols, tau, _ = sp.pairs()
    ok = (tau > 0) & np.isfinite(tau)
    rows, cols, tau = rows[ok], cols[ok], tau[ok]
    if sp.coords is not None and sp.ambient is not None:
        ext = np.asarray(ambient_from_tag(sp.ambient).background_distance(sp.coords[rows], sp.coords[cols]))
    else:
        ext = tau
    cand = np.nonzero(ext <= radius)[0]
    rng = np.random.default_rng(seed)
    rng.shuffle(cand)
    out = []
    for e in cand:
        p, q = int(rows[e]), int(cols[e])
        inner = sp.interval(p, q)
        if len(inner) < min_points:
            continue
        out.append((p, q, np.concatenate([[p], inner, [q]])))
        if len(out) >= budget:
            break
    return out


def check_uniqueness(geom, pairs, rel_tol: float = UNIQUENESS_TOL) -> dict:
    """Discrete stand-in for the continuity hypothesis: one maximizer per sampled pair."""
    worst, witness = 0, None
    for p, q in pairs:
        k = geom.maximizers(p, q, rel_tol)
        if k > worst:
            worst, witness = k, [cmp._label(p), cmp._label(q)]
    return {
        "pairs": len(pairs),
        "max_maximizers": worst,
        "unique": worst <= 1,
        "witness": witness if worst > 1 else None,
        "rel_tol": rel_tol,
        "proxy": "unique maximizing curve per sampled pair (continuity of geodesics has no finite analogue)",
    }


def check_local_vs_global(
    sp: DiscreteSpace,
    K: float,
    direction: str = "above",
    *,
    radius: float = 1.5,
    budget: int = 16,
    min_points: int = 8,
    triangle_budget: int = 64,
    seed: int = 0,
    tol: float = cmp.TAU_TOL,
    global_triangles=None,
    geom=None,
) -> dict:
    """Per-diamond triangle checks, the global check, and the implications between them."""
    geom = geom or cmp.select_geometry(sp)
    diamonds = []
    for p, q, members in sample_diamonds(sp, geom, radius, budget, min_points, seed):
        sub = subspace(sp, members)
        sub_geom = cmp.select_geometry(sub)
        tris = cmp.enumerate_triangles(sub, sub_geom, K=K, budget=triangle_budget, seed=seed)
        vs = [cmp.check_triangle(sub_geom, t, K, direction, tol) for t in tris]
        v = cmp.merge_verdicts(vs, "triangle", direction, K, tol)
        diamonds.append({"p": p, "q": q, "points": int(len(members)), "triangles": len(tris), "passed": v.passed, "worst_margin": v.worst_margin})
    if global_triangles is None:
        global_triangles = cmp.enumerate_triangles(sp, geom, K=K, budget=triangle_budget, seed=seed)
    gv = cmp.merge_verdicts([cmp.check_triangle(geom, t, K, direction, tol) for t in global_triangles], "triangle", direction, K, tol)
    pairs = []
    for t in global_triangles:
        x, _, z = t.points
        pairs.append((x, z))
    pairs += [(geom.handle(p), geom.handle(q)) for p, q, _ in sample_diamonds(sp, geom, radius, budget, min_points, seed)]
    uniq = check_uniqueness(geom, pairs)
    local_pass = all(d["passed"] for d in diamonds)
    return {
        "K": float(K),
        "direction": Direction(direction).value,
        "diamonds": diamonds,
        "diamond_count": len(diamonds),
        "local_passed": local_pass,
        "global_passed": gv.passed,
        "global_worst_margin": gv.worst_margin,
        "global_witness": gv.witnesses[0] if gv.witnesses else None,
        "uniqueness": uniq,
        # Patchwork: local pass + unique maximizers => global pass
        "implication_held": (not (local_pass and uniq["unique"])) or gv.passed or Direction(direction) is Direction.BELOW,
        "implication_vacuous": not (local_pass and uniq["unique"]),
        # Restriction: a global pass holds on every diamond
        "restriction_consistent": (not gv.passed) or local_pass,
    }


# -- non-degeneracy lemma -----------------------------------------------------------


def check_nondegeneracy_lemma(
    sp: DiscreteSpace,
    K: float,
    *,
    budget: int = 24,
    seed: int = 0,
    tol: float = NONDEGENERACY_ANGLE_TOL,
    geom=None,
) -> dict:
    """Sampled configurations a << x << b on a geodesic with y in I(x, b).

    When the triangle (x, y, b) is non-degenerate, (a, x, y) must be too and
    the angles at x between beta and the past/future parts of alpha agree.
    """
    geom = geom or cmp.select_geometry(sp)
    rng = np.random.default_rng(seed)
    rows, cols, tau, _ = sp.pairs()
    d_max = finite_diameter_constant(K)
    ok = (tau > 0) & np.isfinite(tau) & (tau < d_max)
    rows, cols = rows[ok], cols[ok]
    configs, skipped, bad_nondeg, worst, witness = 0, {}, 0, 0.0, None
    attempts = 0
    while configs < budget and attempts < 40 * budget and len(rows):
        attempts += 1
        e = int(rng.integers(len(rows)))
        a, b = geom.handle(int(rows[e])), geom.handle(int(cols[e]))
        chain = geom.side_chain(a, b)
        t0 = float(rng.uniform(0.3, 0.7))
        (x,), _ = geom.curve(a, b, [t0], chain)
        if cmp._key(x) in (cmp._key(a), cmp._key(b)):
            skipped["x-at-endpoint"] = skipped.get("x-at-endpoint", 0) + 1
            continue
        inside = [int(y) for y in sp.interval(int(rows[e]), int(cols[e]))]
        ys = [geom.handle(y) for y in inside if geom.tau(x, geom.handle(y)) > 0]
        if not ys:
            skipped["empty-future"] = skipped.get("empty-future", 0) + 1
            continue
        y = ys[int(rng.integers(len(ys)))]
        xy, yb, xb = geom.tau(x, y), geom.tau(y, b), geom.tau(x, b)
        if cmp.is_degenerate(xy, yb, xb):
            skipped["degenerate-xyb"] = skipped.get("degenerate-xyb", 0) + 1
            continue
        ax, ay = geom.tau(a, x), geom.tau(a, y)
        if cmp.is_degenerate(ax, xy, ay):
            bad_nondeg += 1
        try:
            past = cmp.measure_angle(geom, cmp.hinge(geom, x, a, y))
            future = cmp.measure_angle(geom, cmp.hinge(geom, x, b, y))
        except (NonConvergent, AngleUndefined, NotTimelikeRelated):
            skipped["angle-unavailable"] = skipped.get("angle-unavailable", 0) + 1
            continue
        configs += 1
        gap = abs(past.value - future.value)
        if gap >= worst:
            worst = gap
            witness = {"a": cmp._label(a), "x": cmp._label(x), "y": cmp._label(y), "b": cmp._label(b), "angle_past": past.value, "angle_future": future.value}
    if configs == 0:
        raise InsufficientSamples("no admissible non-degeneracy configurations")
    return {
        "K": float(K),
        "configurations": configs,
        "skipped": dict(sorted(skipped.items())),
        "degenerate_subtriangles": bad_nondeg,
        "worst_angle_gap": worst,
        "witness": witness,
        "tol": tol,
        "passed": bad_nondeg == 0 and worst <= tol,
    }


# -- orchestration --------------------------------------------------------------------


def space_summary(sp: DiscreteSpace) -> dict:
    return {
        "points": sp.n,
        "related_pairs": sp.n_pairs,
        "links": int(len(sp.links)),
        "provenance": sp.provenance.value,
        "ambient": sp.ambient,
        "storage": "dense" if sp.dense else "sparse",
    }


def run_campaign(c: Campaign, sp: DiscreteSpace) -> VerificationReport:
    """Run every requested check; results are independent of ``c.jobs``."""
    clock = time.perf_counter()
    timings = {}
    geom = cmp.select_geometry(sp)

    t0 = time.perf_counter()
    axioms = validate_axioms(sp).to_dict()
    timings["axioms"] = time.perf_counter() - t0

    # one shared sample, filtered by the strictest size bound in the grid
    t0 = time.perf_counter()
    K_min = min(c.K_grid)
    triangles = cmp.enumerate_triangles(sp, geom, K=K_min, budget=c.triangle_budget, seed=c.seed)
    hinges = _hinges(geom, triangles[: c.hinge_budget])
    timings["sampling"] = time.perf_counter() - t0

    angles = _AngleCache(geom, c.angle_tol)
    if any(f in ("angle", "hinge") for f in c.formulations):
        for key, h in hinges:  # fill sequentially so threads only read
            try:
                angles.get(key, h)
            except (NonConvergent, AngleUndefined):
                pass

    jobs = [(K, d, f) for K in c.K_grid for d in c.directions for f in c.formulations]
    run = lambda job: _run_formulation(geom, triangles, hinges, angles, *job, c)  # noqa: E731
    t0 = time.perf_counter()
    if c.jobs > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=c.jobs) as pool:
            results = list(pool.map(run, jobs))
    else:
        results = [run(j) for j in jobs]
    timings["comparison"] = time.perf_counter() - t0

    diameter, perimeter = [], []
    nondeg = None
    if c.diameter:
        for K in c.K_grid:
            diameter.append(check_diameter_bound(sp, K))
            perimeter.append(check_perimeter(triangles, K))
        nondeg = nondegeneracy_fraction(sp, seed=c.seed)

    lemma = []
    if c.nondegeneracy_lemma:
        for K in c.K_grid:
            try:
                lemma.append(check_nondegeneracy_lemma(sp, K, seed=c.seed, geom=geom))
            except InsufficientSamples as exc:
                lemma.append({"K": K, "passed": True, "configurations": 0, "skipped_reason": str(exc)})

    local = []
    if c.locality == "diamonds":
        t0 = time.perf_counter()
        for K in c.K_grid:
            for d in c.directions:
                local.append(
                    check_local_vs_global(
                        sp,
                        K,
                        d,
                        radius=c.diamond_radius,
                        budget=c.diamond_budget,
                        min_points=c.diamond_min_points,
                        seed=c.seed,
                        tol=c.tau_tol,
                        global_triangles=triangles,
                        geom=geom,
                    )
                )
        timings["local"] = time.perf_counter() - t0

    timings["total"] = time.perf_counter() - clock
    return VerificationReport(
        campaign=c,
        space=space_summary(sp),
        axioms=axioms,
        results=results,
        diameter=diameter,
        perimeter=perimeter,
        nondegeneracy=nondeg,
        nondegeneracy_lemma=lemma,
        local=local,
        runtime={"seconds": {k: round(v, 6) for k, v in timings.items()}, "jobs": c.jobs},
    )


def hierarchy_counterexamples(report: VerificationReport, K: float, K_prime: float) -> list:
    """Triangles passing below at K but failing below at K' >= K."""
    base = report.find(K, "below", "triangle")
    other = report.find(K_prime, "below", "triangle")
    fails = {tuple(lbl) if isinstance(lbl, list) else lbl for lbl, _, ok in other.items if not ok}
    return [lbl for lbl, _, ok in base.items if ok and (tuple(lbl) if isinstance(lbl, list) else lbl) in fails]


def statement(passed: bool) -> str:
    return "no violation found in the sample" if passed else "violation found"


__all__ = [
    "Campaign",
    "FormulationResult",
    "VerificationReport",
    "check_diameter_bound",
    "check_local_vs_global",
    "check_nondegeneracy_lemma",
    "check_perimeter",
    "check_uniqueness",
    "hierarchy_counterexamples",
    "nondegeneracy_fraction",
    "run_campaign",
    "sample_diamonds",
    "space_summary",
]
