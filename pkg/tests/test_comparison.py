import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lorcomp import comparison as cmp
from lorcomp.comparison import Direction, Formulation, Side, SidePoint
from lorcomp.errors import (
    AngleUndefined,
    InsufficientSamples,
    NonConvergent,
    NotTimelikeRelated,
    PairOffTriangle,
    UnrealizableTriangle,
)
from lorcomp.generators import SprinkleSpec, fixture, space_from_points, sprinkle
from lorcomp.model_spaces import ModelSpace, Orientation

from oracles import flat_angle, flat_hinge_far_side, flat_realization, flat_tau


def flat_space(points):
    return space_from_points(sorted(points), ModelSpace(0.0))


def flat_geom(points):
    return cmp.select_geometry(flat_space(points))


# -- margins -------------------------------------------------------------------------


@pytest.mark.parametrize(
    "formulation,direction,upper",
    [
        ("triangle", "below", True),
        ("triangle", "above", False),
        ("hinge", "above", True),
        ("hinge", "below", False),
        ("monotonicity", "above", True),
        ("monotonicity", "below", False),
        ("angle", "below", True),
        ("angle", "above", False),
    ],
)
def test_margin_orientation(formulation, direction, upper):
    assert cmp.is_upper(formulation, direction) is upper
    bad = 1.0 if upper else -1.0
    assert not cmp.margin_ok(formulation, direction, bad, 1e-6)
    assert cmp.margin_ok(formulation, direction, -bad, 1e-6)
    assert cmp.margin_ok(formulation, direction, bad * 1e-7, 1e-6)
    assert cmp.worst_of(formulation, direction, [-bad, 0.0, bad]) == 2


# -- realization ---------------------------------------------------------------------


def test_realize_collinear():
    cfg = cmp.realize_triangle(0.0, (1.0, 1.0, 2.0))
    x, y, z = cfg.vertices
    assert tuple(x) == (0.0, 0.0)
    assert y[0] == pytest.approx(1.0) and y[1] == pytest.approx(0.0, abs=1e-12)
    assert z[0] == pytest.approx(2.0) and z[1] == 0.0


def test_realize_matches_two_hyperbola_oracle():
    cfg = cmp.realize_triangle(0.0, (1.0, 1.0, 2.5))
    _, y_oracle, z_oracle = flat_realization(1.0, 1.0, 2.5)
    assert np.allclose(cfg.vertices[1], y_oracle, atol=1e-12)
    assert np.allclose(cfg.vertices[2], z_oracle, atol=1e-12)
    assert y_oracle == pytest.approx((1.25, 0.75))


@pytest.mark.parametrize("K", [-1.0, 0.0, 1.0])
def test_realize_preserves_sides(K):
    sides = (0.4, 0.7, 1.3)
    cfg = cmp.realize_triangle(K, sides)
    ms, (x, y, z) = cfg.model, cfg.vertices
    assert ms.tau(x, y) == pytest.approx(0.4, abs=1e-10)
    assert ms.tau(y, z) == pytest.approx(0.7, abs=1e-10)
    assert ms.tau(x, z) == pytest.approx(1.3, abs=1e-10)


def test_realize_rejects_size_bound():
    with pytest.raises(UnrealizableTriangle):
        cmp.realize_triangle(-1.0, (1.5, 1.7, 3.3))


def test_comparison_points_keep_fractions():
    cfg = cmp.realize_triangle(-1.0, (0.5, 0.8, 1.5))
    ms, (x, _, z) = cfg.model, cfg.vertices
    p = cfg.point("xz", 0.3)
    assert ms.tau(x, p) == pytest.approx(0.45, abs=1e-10)
    assert ms.tau(p, z) == pytest.approx(1.05, abs=1e-10)


# -- triangles -----------------------------------------------------------------------


def test_side_point_validation():
    with pytest.raises(PairOffTriangle):
        SidePoint("xw", 0.5)
    with pytest.raises(PairOffTriangle):
        SidePoint("xy", 1.5)
    assert SidePoint("yz", 1.0).side is Side.YZ


def test_degenerate_fixture_passes_both_directions_in_flat():
    sp = fixture("degenerate-triangle")
    geom = cmp.select_geometry(sp)
    tri = cmp.triangle_from_indices(geom, 0, 1, 2)
    assert tri.degenerate
    for d in Direction:
        v = cmp.check_triangle(geom, tri, 0.0, d)
        assert v.passed and abs(v.worst_margin) < 1e-12


def test_cylinder_pair_is_a_counterexample():
    sp = fixture("cylinder-counterexample")
    geom = cmp.select_geometry(sp)
    tri = cmp.triangle_from_indices(geom, 0, 2, 4)
    assert tri.degenerate
    cfg = cmp.realize_triangle(0.0, tri)
    p = SidePoint("xz", 0.25, geom.handle(1))
    q = SidePoint("yz", 0.5, geom.handle(3))
    tau, bar = cmp.triangle_margins(geom, tri, cfg, [(p, q)])
    assert tau[0] == 0.0
    assert bar[0] > 0.5
    # oracle: the comparison triangle is collinear on the time axis
    assert bar[0] == pytest.approx(flat_tau((0.25 * tri.c, 0.0), (tri.a + 0.5 * tri.b, 0.0)))
    v = cmp.compare_triangle(0.0, "above", tri, cfg, [(p, q)], geom)
    assert not v.passed
    assert v.notes["implication_failures"] == 1


def test_chain_geometry_matches_ambient_on_explicit_fixture():
    sp = fixture("three-chain")
    geom = cmp.select_geometry(sp)
    assert geom.mode == "chain"
    tri = cmp.triangle_from_indices(geom, 0, 1, 2)
    assert tri.sides == (1.0, 1.0, 2.5)
    v = cmp.check_triangle(geom, tri, 0.0, "below")
    assert v.samples > 0


def test_enumerate_triangles_is_deterministic_and_within_bounds():
    sp = sprinkle(SprinkleSpec("ads", count=300, seed=4))
    geom = cmp.select_geometry(sp)
    a = cmp.enumerate_triangles(sp, geom, K=-1.0, budget=50, seed=1)
    b = cmp.enumerate_triangles(sp, geom, K=-1.0, budget=50, seed=1)
    assert [t.indices for t in a] == [t.indices for t in b]
    assert 0 < len(a) <= 50
    for t in a:
        x, y, z = t.indices
        assert sp.tau_at(x, y) > 0 and sp.tau_at(y, z) > 0
        assert t.c < math.pi


@settings(max_examples=30, deadline=None)
@given(
    a=st.floats(0.1, 2.0),
    b=st.floats(0.1, 2.0),
    excess=st.floats(0.01, 1.0),
    boost=st.floats(-1.0, 1.0),
)
def test_flat_triangles_have_zero_margins(a, b, excess, boost):
    x, y, z = flat_realization(a, b, a + b + excess)
    ch, sh = math.cosh(boost), math.sinh(boost)
    pts = [(ch * t + sh * s, sh * t + ch * s) for t, s in (x, y, z)]
    geom = flat_geom(pts)
    tri = cmp.triangle_from_indices(geom, 0, 1, 2)
    for d in Direction:
        v = cmp.check_triangle(geom, tri, 0.0, d)
        assert v.passed and abs(v.worst_margin) < 1e-8


# -- hinges and angles ---------------------------------------------------------------


def test_flat_monotonicity_grid_is_constant():
    geom = flat_geom([(0, 0), (1.0, 0.2), (2.6, 0.0)])
    tri = cmp.triangle_from_indices(geom, 0, 1, 2)
    for name, h in cmp.triangle_hinges(geom, tri).items():
        for d in Direction:
            v = cmp.compare_monotonicity(0.0, d, h, geom)
            assert v.passed, name
            assert v.notes["grid_range"] < 1e-8


@pytest.mark.parametrize("K,good,bad", [(0.0, "below", "above"), (-2.0, "above", "below")])
def test_curved_monotonicity_agrees_with_triangle(K, good, bad):
    # an AdS (K = -1) triangle satisfies the bound below for K' >= -1 and above for K' <= -1
    ms = ModelSpace(-1.0)
    sp = space_from_points([(0.0, 0.0), (1.0, 0.6), (2.0, 0.0)], ms)
    geom = cmp.select_geometry(sp)
    tri = cmp.triangle_from_indices(geom, 0, 1, 2)
    assert cmp.check_triangle(geom, tri, K, good).passed
    assert not cmp.check_triangle(geom, tri, K, bad).passed
    for h in cmp.triangle_hinges(geom, tri).values():
        assert cmp.compare_monotonicity(K, good, h, geom).passed
        assert not cmp.compare_monotonicity(K, bad, h, geom).passed


def test_monotonicity_needs_grid():
    geom = flat_geom([(0, 0), (1.0, 0.2), (2.6, 0.0)])
    h = cmp.hinge(geom, (0.0, 0.0), (1.0, 0.2), (2.6, 0.0))
    with pytest.raises(InsufficientSamples):
        cmp.compare_monotonicity(0.0, "below", h, geom, grid=[1.0])


@pytest.mark.parametrize("omega", [0.1, 0.5, 1.3])
@pytest.mark.parametrize("mixed", [False, True])
def test_measure_angle_flat_hinge(omega, mixed):
    m, t = 0.8, 1.1
    a = (-m, 0.0) if mixed else (m, 0.0)
    b = (t * math.cosh(omega), t * math.sinh(omega))
    geom = flat_geom([a, (0.0, 0.0), b])
    h = cmp.hinge(geom, (0.0, 0.0), a, b)
    assert h.orientation is (Orientation.MIXED if mixed else Orientation.SAME)
    res = cmp.measure_angle(geom, h)
    assert res.value == pytest.approx(flat_angle((0.0, 0.0), a, b), abs=1e-9)
    assert res.value == pytest.approx(omega, abs=1e-9)
    assert res.estimate < 1e-6
    assert len(res.levels) == cmp.ANGLE_LEVELS


def test_measure_angle_curved_converges():
    ms = ModelSpace(-1.0)
    pts = [(0.0, 0.0), (1.0, 0.5), (1.4, -0.3)]
    geom = cmp.select_geometry(space_from_points(pts, ms))
    h = cmp.hinge(geom, pts[0], pts[1], pts[2])
    res = cmp.measure_angle(geom, h)
    assert res.converged
    # the conformal factor cancels in the normalized inner product, so the
    # angle is the flat angle between the chart tangents at the vertex
    def tangent(q, h=1e-4):
        g = [np.asarray(ms.geodesic(pts[0], q, s)) for s in (0.0, h, 2 * h)]
        return tuple((-3 * g[0] + 4 * g[1] - g[2]) / (2 * h))

    exact = flat_angle((0.0, 0.0), tangent(pts[1]), tangent(pts[2]))
    assert res.value == pytest.approx(exact, abs=1e-6)


def test_measure_angle_reports_nonconvergence():
    ms = ModelSpace(-1.0)
    pts = [(0.0, 0.0), (1.0, 0.5), (1.4, -0.3)]
    geom = cmp.select_geometry(space_from_points(pts, ms))
    h = cmp.hinge(geom, pts[0], pts[1], pts[2])
    with pytest.raises(NonConvergent) as err:
        cmp.measure_angle(geom, h, levels=2, tol=1e-14)
    assert err.value.result is not None


def test_richardson_removes_quadratic_error():
    h = np.array([1.0, 0.5, 0.25, 0.125])
    vals = 2.0 + 3.0 * h**2 - 0.7 * h**4
    limit, est = cmp.richardson(h**2, vals)
    assert limit == pytest.approx(2.0, abs=1e-12)
    assert est < 1e-10


@pytest.mark.parametrize("mixed", [False, True])
def test_flat_hinge_comparison_is_equality(mixed):
    m, t, omega = 0.7, 1.2, 0.4
    a = (-m, 0.0) if mixed else (m, 0.0)
    b = (t * math.cosh(omega), t * math.sinh(omega))
    geom = flat_geom([a, (0.0, 0.0), b])
    h = cmp.hinge(geom, (0.0, 0.0), a, b)
    omega_m = cmp.measure_angle(geom, h).value
    for d in Direction:
        v = cmp.compare_hinge(0.0, d, h, omega_m, geom)
        assert v.passed and abs(v.worst_margin) < 1e-8
    assert v.witnesses[0]["tau_bar"] == pytest.approx(flat_hinge_far_side(m, t, omega, mixed), abs=1e-9)


def test_hinge_needs_angle():
    geom = flat_geom([(0, 0), (1.0, 0.2), (2.6, 0.0)])
    h = cmp.hinge(geom, (0.0, 0.0), (1.0, 0.2), (2.6, 0.0))
    with pytest.raises(AngleUndefined):
        cmp.compare_hinge(0.0, "below", h, None, geom)


def test_flat_angle_comparison():
    geom = flat_geom([(0, 0), (1.0, 0.2), (2.6, 0.0)])
    tri = cmp.triangle_from_indices(geom, 0, 1, 2)
    for h in cmp.triangle_hinges(geom, tri).values():
        meas = cmp.measure_angle(geom, h)
        for d in Direction:
            v = cmp.compare_angle(0.0, d, h, meas, geom)
            assert v.passed and abs(v.worst_margin) < 1e-6


def test_hinge_requires_timelike_legs():
    geom = flat_geom([(0, 0), (0.1, 2.0), (2.6, 0.0)])
    with pytest.raises(NotTimelikeRelated):
        cmp.hinge(geom, (0.0, 0.0), (0.1, 2.0), (2.6, 0.0))


# -- gluing --------------------------------------------------------------------------


def test_glue_subdivide_gluing_fixture():
    sp = fixture("gluing-basic")
    geom = cmp.select_geometry(sp)
    tri = cmp.triangle_from_indices(geom, 0, 2, 3)
    p = SidePoint("xz", 0.25, geom.handle(1))
    t1, t2 = cmp.glue_subdivide(geom, tri, p)
    # p = (1, 0) lies in the past of y = (2.5, 1)
    assert t1.points == (geom.handle(0), geom.handle(1), geom.handle(2))
    assert t2.points == (geom.handle(1), geom.handle(2), geom.handle(3))
    g = cmp.check_gluing(geom, tri, p, 0.0)
    assert g.parts_pass and g.whole_pass and g.consistent and g.case == "I"


def test_glue_subdivide_short_sides():
    geom = flat_geom([(0, 0), (2.5, 1.0), (4.0, 0.0)])
    tri = cmp.triangle_from_indices(geom, 0, 1, 2)
    x, y, z = tri.points
    mid_xy = tuple(geom.ambient.geodesic(x, y, 0.5))
    t1, t2 = cmp.glue_subdivide(geom, tri, SidePoint("xy", 0.5, mid_xy))
    assert t1.points == (x, mid_xy, z) and t2.points == (mid_xy, y, z)
    mid_yz = tuple(geom.ambient.geodesic(y, z, 0.5))
    t1, t2 = cmp.glue_subdivide(geom, tri, SidePoint("yz", 0.5, mid_yz))
    assert t1.points == (x, y, mid_yz) and t2.points == (x, mid_yz, z)


def test_glue_subdivide_spacelike_point():
    geom = flat_geom([(0, 0), (2.0, 1.9), (4.0, 0.0)])
    tri = cmp.triangle_from_indices(geom, 0, 1, 2)
    p = SidePoint("xz", 0.5, (2.0, 0.0))
    with pytest.raises(NotTimelikeRelated):
        cmp.glue_subdivide(geom, tri, p)


def test_hierarchy_on_single_triangle():
    sp = sprinkle(SprinkleSpec("ads", count=200, seed=6))
    geom = cmp.select_geometry(sp)
    for tri in cmp.enumerate_triangles(sp, geom, K=-1.0, budget=20, seed=0):
        if cmp.check_triangle(geom, tri, -1.0, "below").passed:
            assert cmp.check_triangle(geom, tri, -0.3, "below").passed


def test_verdict_serializes():
    geom = flat_geom([(0, 0), (1.0, 0.2), (2.6, 0.0)])
    tri = cmp.triangle_from_indices(geom, 0, 1, 2)
    d = cmp.check_triangle(geom, tri, 0.0, "below").to_dict()
    assert d["formulation"] == Formulation.TRIANGLE.value
    assert d["direction"] == "below"
    assert d["samples"] == 27 * 18
