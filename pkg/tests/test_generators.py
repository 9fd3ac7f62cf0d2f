import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from lorcomp.errors import ChartDomainError, DensityOverflow, RegionEmpty, UnknownFixture
from lorcomp.generators import (
    FIXTURES,
    Cylinder,
    Region,
    SprinkleSpec,
    cylinder_scenario,
    cylinder_tau,
    cylinder_windings,
    fixture,
    parse_diamond,
    parse_rect,
    sample_points,
    sprinkle,
)
from lorcomp.model_spaces import ModelSpace
from lorcomp.space import validate_axioms

from oracles import flat_tau


@pytest.mark.parametrize("count", [0, 1])
def test_tiny_sprinkles(count):
    sp = sprinkle(SprinkleSpec("minkowski", count=count, seed=1))
    assert sp.n == count
    assert len(sp.links) == 0
    assert validate_axioms(sp).passed


def test_minkowski_tau_matches_direct_formula():
    sp = sprinkle(SprinkleSpec("minkowski", count=500, seed=42))
    P = sp.coords
    for i in range(0, 500, 7):
        for j in range(0, 500, 11):
            assert sp.tau_at(i, j) == pytest.approx(flat_tau(P[i], P[j]), abs=1e-12)
    assert validate_axioms(sp).passed


def test_points_lie_in_region_and_are_time_sorted():
    spec = SprinkleSpec("minkowski", count=300, seed=5)
    pts = sample_points(spec)
    assert np.all(spec.effective_region().contains(pts))
    assert np.all(np.diff(pts[:, 0]) >= 0)


@pytest.mark.parametrize("ambient", ["minkowski", "ads", "desitter", "cylinder"])
def test_sprinkle_is_deterministic(ambient):
    a = sprinkle(SprinkleSpec(ambient, count=120, seed=9))
    b = sprinkle(SprinkleSpec(ambient, count=120, seed=9))
    c = sprinkle(SprinkleSpec(ambient, count=120, seed=10))
    assert np.array_equal(a.coords, b.coords)
    assert np.array_equal(a.tau_matrix(), b.tau_matrix())
    assert not np.array_equal(a.coords, c.coords)


@pytest.mark.parametrize("ambient,K", [("ads", -1.0), ("ads", -4.0), ("desitter", 1.0)])
def test_curved_sprinkles_match_model_tau(ambient, K):
    sp = sprinkle(SprinkleSpec(ambient, count=150, seed=3, K=K))
    model = ModelSpace(K)
    P = sp.coords
    for i in range(0, 150, 13):
        for j in range(0, 150, 7):
            assert sp.tau_at(i, j) == pytest.approx(model.tau(P[i], P[j]), abs=1e-12)
    assert validate_axioms(sp).passed


def test_density_counts_are_poisson():
    spec = SprinkleSpec("minkowski", density=5.0, seed=0)
    mean = 5.0 * spec.effective_region().volume(ModelSpace(0.0).volume_density)
    counts = [len(sample_points(SprinkleSpec("minkowski", density=5.0, seed=s))) for s in range(200)]
    # dispersion test: sum (k-mean)^2/mean is chi-square with n-1 dof under Poisson
    stat = sum((k - mean) ** 2 for k in counts) / mean
    p = stats.chi2.sf(stat, len(counts) - 1)
    assert 0.001 < p < 0.999
    assert abs(np.mean(counts) - mean) < 4 * math.sqrt(mean / len(counts))


def test_ads_density_follows_volume_form():
    # conformal factor 1/cos^2 x pushes points toward the boundary
    spec = SprinkleSpec("ads", count=4000, seed=2, full_ads=True, region=Region.rect(0.5, 1.0, -1.2, 1.2))
    xs = np.abs(sample_points(spec)[:, 1])
    edges = np.linspace(0, 1.2, 7)
    observed, _ = np.histogram(xs, edges)
    weight = np.diff(np.tan(edges))
    expected = len(xs) * weight / weight.sum()
    assert stats.chisquare(observed, expected).pvalue > 1e-3


def test_region_errors():
    with pytest.raises(RegionEmpty):
        sample_points(SprinkleSpec("minkowski", count=5, region=Region.diamond((0, 0), (0, 0))))
    with pytest.raises(DensityOverflow):
        sample_points(SprinkleSpec("minkowski", density=1e6, cap=1000))
    with pytest.raises(ChartDomainError):
        sample_points(SprinkleSpec("ads", count=5, region=Region.rect(0, 1, -2, 2)))
    with pytest.raises(ValueError):
        SprinkleSpec("ads", count=3, K=1.0)
    with pytest.raises(ValueError):
        SprinkleSpec("minkowski")


def test_region_parsing():
    r = parse_diamond("0,0:4,0")
    assert r == Region.diamond((0, 0), (4, 0))
    assert parse_rect(r"0,6,0,6.283").to_text()
    with pytest.raises(ValueError):
        parse_diamond("garbage")


# -- cylinder --------------------------------------------------------------------


def test_cylinder_two_equal_geodesics():
    L = 2 * math.pi
    w = cylinder_windings(L, (0.0, 0.0), (4.0, math.pi))
    assert sorted(w) == [-1, 0]
    assert w[0] == pytest.approx(math.sqrt(16 - math.pi**2))
    assert w[-1] == pytest.approx(w[0])
    assert cylinder_tau(L, (0.0, 0.0), (4.0, math.pi)) == pytest.approx(2.47596, abs=1e-5)
    assert Cylinder(L).maximizer_count((0.0, 0.0), (4.0, math.pi)) == 2


def test_cylinder_wraps_around():
    L = 2 * math.pi
    # 0.1 and L-0.1 are 0.2 apart around the back
    assert cylinder_tau(L, (0.0, 0.1), (1.0, L - 0.1)) == pytest.approx(math.sqrt(1 - 0.04))
    assert cylinder_tau(L, (0.0, 0.0), (0.0, 1.0)) == 0.0


@settings(max_examples=60, deadline=None)
@given(
    t=st.floats(0.01, 20), x0=st.floats(0, 2 * math.pi), x1=st.floats(0, 2 * math.pi), L=st.floats(0.5, 10)
)
def test_cylinder_tau_dominates_flat_and_is_periodic(t, x0, x1, L):
    p, q = (0.0, x0), (t, x1)
    val = cylinder_tau(L, p, q)
    assert val >= flat_tau(p, q) - 1e-12
    # sqrt amplifies the rounding of x1 + L near the light cone
    assert val == pytest.approx(cylinder_tau(L, p, (t, x1 + L)), abs=1e-6)
    assert val <= t + 1e-12


def test_cylinder_scenario_contains_fixture():
    sp = cylinder_scenario(count=100, seed=0)
    base = fixture("cylinder-counterexample")
    assert sp.n == 105
    assert np.array_equal(sp.coords[:5], base.coords)
    assert sp.meta["triangles"] == [[0, 2, 4]]
    assert validate_axioms(sp).passed


# -- fixtures --------------------------------------------------------------------


@pytest.mark.parametrize("name", sorted(FIXTURES))
def test_fixtures_build(name):
    sp = fixture(name)
    assert sp.n >= 3
    rep = validate_axioms(sp)
    assert rep.passed == (name not in ("three-chain-violating", "bonnet-myers"))


def test_unknown_fixture():
    with pytest.raises(UnknownFixture):
        fixture("nope")


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**63 - 1), ambient=st.sampled_from(["minkowski", "ads", "desitter", "cylinder"]))
def test_sprinkles_satisfy_axioms(seed, ambient):
    sp = sprinkle(SprinkleSpec(ambient, count=60, seed=seed))
    assert validate_axioms(sp).passed
