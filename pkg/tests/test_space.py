import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lorcomp import cset
from lorcomp.errors import CyclicOrder, FormatError, NotTimelikeRelated
from lorcomp.generators import SprinkleSpec, fixture, sprinkle
from lorcomp.space import (
    DiscreteSpace,
    Provenance,
    TauMode,
    finite_diameter,
    geodesic_chain,
    maximizer_count,
    subspace,
    tau_intrinsic,
    validate_axioms,
    with_intrinsic_tau,
)

from oracles import axiom_violations, longest_chain_tau


def test_three_chain_axioms():
    rep = validate_axioms(fixture("three-chain"))
    assert rep.passed
    bad = validate_axioms(fixture("three-chain-violating"))
    assert not bad.passed
    rti = bad.check("reverse-triangle")
    assert rti.violations == 1
    assert tuple(rti.witness) == (0, 1, 2)
    assert bad.worst_reverse_triangle_margin == pytest.approx(-0.5)


def test_minkowski_sprinkle_axioms_match_exhaustive_oracle():
    sp = sprinkle(SprinkleSpec("minkowski", count=40, seed=3))
    tau = sp.tau_matrix()
    assert axiom_violations(tau, sp.causal) == []
    assert validate_axioms(sp).passed


def test_axiom_scan_detects_each_defect():
    tau = np.zeros((3, 3))
    tau[0, 1] = 1.0
    causal = np.zeros((3, 3), bool)
    rep = validate_axioms(DiscreteSpace.from_dense(tau, causal))
    assert not rep.check("timelike-within-causal").passed
    causal = np.array([[0, 1, 0], [1, 0, 0], [0, 0, 0]], bool)
    rep = validate_axioms(DiscreteSpace.from_dense(np.zeros((3, 3)), causal))
    assert not rep.check("causal-antisymmetric").passed
    causal = np.array([[0, 1, 0], [0, 0, 1], [0, 0, 0]], bool)
    rep = validate_axioms(DiscreteSpace.from_dense(np.zeros((3, 3)), causal))
    assert not rep.check("causal-transitive").passed
    tau = np.array([[0, 1, 0], [0, 0, 1], [0, 0, 0]], float)
    causal = np.array([[0, 1, 1], [0, 0, 1], [0, 0, 0]], bool)
    rep = validate_axioms(DiscreteSpace.from_dense(tau, causal))
    assert not rep.check("timelike-transitive").passed
    neg = np.array([[0, -1.0], [0, 0]])
    rep = validate_axioms(DiscreteSpace.from_dense(neg, np.array([[0, 1], [0, 0]], bool)))
    assert not rep.check("tau-nonnegative").passed


def test_incomparable_points_have_zero_tau():
    sp = DiscreteSpace.from_links(2, [], [])
    t = tau_intrinsic(sp)
    assert t[0, 1] == 0 and t[1, 0] == 0


def test_diamond_poset():
    sp = fixture("diamond-poset")
    t = tau_intrinsic(sp, TauMode.WEIGHTED)
    assert t[0, 3] == 2.0
    ch = geodesic_chain(sp, 0, 3)
    assert ch.vertices == (0, 1, 3)
    assert ch.tau_length == 2.0 and ch.gap == 0.0
    assert maximizer_count(sp, 0, 3) == 2


def test_linked_pair_chain():
    sp = fixture("three-chain")
    ch = geodesic_chain(sp, 0, 1)
    assert ch.vertices == (0, 1) and ch.gap == 0.0
    with pytest.raises(NotTimelikeRelated):
        geodesic_chain(sp, 1, 0)


def test_inherited_realization_gap_is_flagged():
    sp = fixture("three-chain")
    ch = geodesic_chain(sp, 0, 2)
    assert ch.vertices == (0, 1, 2)
    assert ch.tau_length == 2.0
    assert ch.gap == pytest.approx(0.5)
    assert ch.timelike_steps


def test_intrinsic_weighted_matches_chain_enumeration():
    sp = sprinkle(SprinkleSpec("minkowski", count=12, seed=11))
    links = [tuple(map(int, l)) for l in sp.links]
    oracle = longest_chain_tau(sp.n, links, lambda a, b: sp.tau_at(a, b))
    got = tau_intrinsic(sp, TauMode.WEIGHTED)
    assert np.allclose(got, oracle, atol=1e-12)
    inherited = sp.tau_matrix()
    assert np.all(got <= inherited + 1e-12)
    for i, j in links:
        assert got[i, j] == inherited[i, j]


def test_intrinsic_link_count():
    sp = fixture("diamond-poset")
    assert tau_intrinsic(sp, TauMode.LINK_COUNT)[0, 3] == 2.0


def test_intrinsic_output_is_valid_and_realized():
    sp = with_intrinsic_tau(sprinkle(SprinkleSpec("minkowski", count=150, seed=2)))
    assert sp.provenance is Provenance.INTRINSIC
    assert validate_axioms(sp).passed
    rows, cols, tau, _ = sp.pairs()
    for k in range(0, len(rows), max(1, len(rows) // 40)):
        if tau[k] > 0:
            ch = geodesic_chain(sp, int(rows[k]), int(cols[k]))
            assert ch.tau_length == pytest.approx(tau[k], abs=1e-12)
    again = with_intrinsic_tau(sp)
    assert np.allclose(again.tau_matrix(), sp.tau_matrix())


def test_cycle_is_rejected():
    with pytest.raises(CyclicOrder):
        DiscreteSpace.from_links(3, [(0, 1), (1, 2), (2, 0)])


def test_finite_diameter_examples():
    assert finite_diameter(DiscreteSpace.from_links(3, [])) == 0.0
    assert finite_diameter(DiscreteSpace.from_links(2, [(0, 1)], [(0, 1, 3.0)])) == 3.0
    inf_pair = DiscreteSpace.from_links(3, [(0, 1), (1, 2)], [(0, 1, 1.0), (1, 2, 1.0), (0, 2, math.inf)])
    assert finite_diameter(inf_pair) == 1.0


def test_finite_diameter_monotone_under_adding_points():
    big = sprinkle(SprinkleSpec("minkowski", count=200, seed=4))
    small = subspace(big, np.arange(0, 200, 2))
    assert finite_diameter(small) <= finite_diameter(big)


def test_sparse_storage_matches_dense():
    sp = sprinkle(SprinkleSpec("minkowski", count=120, seed=8))
    sparse = sp.replace(dense_limit=10)
    assert not sparse.dense
    assert np.array_equal(sparse.tau.toarray(), sp.tau)
    assert validate_axioms(sparse).to_dict() == validate_axioms(sp).to_dict()
    for x, y in [(0, 119), (3, 90), (10, 50)]:
        if sp.tau_at(x, y) > 0:
            assert geodesic_chain(sparse, x, y) == geodesic_chain(sp, x, y)
    assert np.array_equal(sparse.interval(0, 119), sp.interval(0, 119))


def test_subspace_restriction():
    sp = fixture("gluing-basic")
    sub = subspace(sp, [0, 2, 3])
    assert sub.n == 3
    assert sub.tau_at(0, 2) == sp.tau_at(0, 3)
    assert "triangles" not in sub.meta and sub.meta["parent_indices"] == [0, 2, 3]


# -- file format ---------------------------------------------------------------------------


@pytest.mark.parametrize("name", ["three-chain", "diamond-poset", "bonnet-myers", "cylinder-counterexample", "gluing-basic"])
def test_cset_round_trip_fixtures(name):
    sp = fixture(name)
    text = cset.dumps(sp)
    assert text.startswith("lorcomp-cset v1\n")
    back = cset.loads(text)
    assert np.array_equal(back.tau_matrix(), sp.tau_matrix())
    assert back.meta == sp.meta
    assert cset.dumps(back) == text
    assert np.array_equal(cset.from_json(cset.to_json(sp)).tau_matrix(), sp.tau_matrix())


def test_cset_without_coordinates_or_tau_uses_link_count():
    text = "lorcomp-cset v1\n# comment\npoints 3\n0 -\n1 -\n2 -\nlinks 2\n0 1\n1 2\n"
    sp = cset.loads(text)
    assert sp.tau_at(0, 2) == 2.0
    assert sp.provenance is Provenance.INTRINSIC


def test_cset_inherited_recomputes_tau(tmp_path):
    sp = sprinkle(SprinkleSpec("ads", count=80, seed=1))
    path = tmp_path / "a.cset"
    cset.save(sp, path)
    assert "\ntau " not in path.read_text()
    back = cset.load(path)
    assert np.array_equal(back.tau_matrix(), sp.tau_matrix())


@pytest.mark.parametrize(
    "text",
    [
        "",
        "not-a-header\n",
        "lorcomp-cset v1\npoints 2\n0 0 0\n",
        "lorcomp-cset v1\npoints 1\n0 0 0\nlinks 1\n0 5\n",
        "lorcomp-cset v1\nbogus 1\n",
        "lorcomp-cset v1\nlinks 0\n",
    ],
)
def test_cset_format_errors(text):
    with pytest.raises(FormatError):
        cset.loads(text)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), count=st.integers(0, 60))
def test_cset_round_trip_property(seed, count):
    sp = sprinkle(SprinkleSpec("minkowski", count=count, seed=seed, tau_mode="intrinsic-weighted"))
    back = cset.loads(cset.dumps(sp))
    assert np.array_equal(back.tau_matrix(), sp.tau_matrix())
    assert np.array_equal(back.coords, sp.coords)
