"""Vertex expansion, refutation scans, box-space lifting, profiles, growth
comparison and cube tables."""

import itertools

import numpy as np
import pytest

from coarselab.amenability import NotFound, folner_search
from coarselab.certificates import (
    BoxSpaceSpec,
    CubeRow,
    box_lift,
    cube_refute,
    expander_refute,
    exponential_fit,
    girth_refute,
    growth_compare,
    injectivity_radius,
    neg_ula_profile,
    vertex_cheeger,
)
from coarselab.errors import InputError
from coarselab.generators import (
    assemble_family,
    cayley_quotient,
    complete_graph,
    cycle_graph,
    hamming_power,
    path_graph,
    random_regular,
    tree_graph,
)
from coarselab.space import FiniteMetricSpace, boundary


def brute_cheeger(space):
    best = None
    n = space.n
    for k in range(1, n // 2 + 1):
        for sub in itertools.combinations(range(n), k):
            ratio = len(boundary(space, sub, 1)) / len(sub)
            if best is None or ratio < best:
                best = ratio
    return best


def test_vertex_cheeger_small_graphs():
    res = vertex_cheeger(complete_graph(4))
    assert float(res.value) == 1.0 and res.exact  # a 2-subset: 2 outsiders / 2
    res = vertex_cheeger(cycle_graph(6))
    assert float(res.value) == pytest.approx(2 / 3)
    assert len(res.witness) == 3
    two = FiniteMetricSpace.from_edges(6, [(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3)])
    assert float(vertex_cheeger(two).value) == 0.0


def test_vertex_cheeger_matches_brute():
    for seed in (1, 2):
        space, _ = random_regular(10, 3, seed=seed)
        assert float(vertex_cheeger(space).value) == pytest.approx(brute_cheeger(space))


def test_vertex_cheeger_large_flagged():
    space = cycle_graph(40)
    res = vertex_cheeger(space)
    assert not res.exact
    assert res.value <= brute_cheeger_interval_bound(space)


def brute_cheeger_interval_bound(space):
    # on a cycle the true expansion is 2 / floor(n/2)
    return 2 / (space.n // 2) + 1e-9


def test_expander_refute_complete_family():
    fam = assemble_family([complete_graph(8), complete_graph(12)], pads=(1, 2))
    rep = expander_refute(fam, 0)
    # singletons: ratio m-1 in K_m
    assert rep.rows
    for row in rep.rows:
        assert row.value >= 1.0


def test_expander_refute_certified_member():
    space, _ = random_regular(16, 3, seed=7)
    fam = assemble_family([space])
    eps0 = float(vertex_cheeger(space).value)
    rep = expander_refute(fam, 3)
    if rep.rows:
        assert rep.min_value() >= eps0 - 1e-12
        # agreement with the exact witness search
        res = folner_search(space, range(16), 1, eps0 * 0.95, 3, mode="exact")
        assert isinstance(res, NotFound)
    else:
        assert rep.skipped  # member too small for this scale


def test_expander_refute_small_member_skipped():
    fam = assemble_family([cycle_graph(6)])
    rep = expander_refute(fam, 3)
    assert not rep.rows
    assert rep.skipped and not rep.conclusive


def test_girth_refute_tree():
    tree = tree_graph(3, 4)
    fam = assemble_family([tree])
    rep = girth_refute(fam, 4)
    assert rep.rows
    assert rep.min_value() >= 1 / 2 - 1e-12  # D = 3


def test_girth_refute_degree_guard():
    fam = assemble_family([path_graph(10)])
    with pytest.raises(InputError):
        girth_refute(fam, 2)


def test_girth_refute_small_girth_skipped():
    space, g = random_regular(10, 3, seed=1)
    fam = assemble_family([space])
    big_scale = int(g)  # violates girth > 2*scale + 2
    rep = girth_refute(fam, big_scale)
    assert rep.skipped


def test_injectivity_radius():
    spec = BoxSpaceSpec("cyclic", (8, 16, 128))
    assert injectivity_radius(spec, 0) == 3
    assert injectivity_radius(spec, 2) == 63
    torus = BoxSpaceSpec("torus", (9,))
    assert injectivity_radius(torus, 0) == 4


def test_box_lift_arc():
    spec = BoxSpaceSpec("cyclic", (8, 16, 32, 64, 128))
    arc = tuple(range(20, 30))  # 10-point arc in C_128
    res = box_lift(spec, 4, arc, eps=0.25)
    assert res.isometric
    assert len(res.lifted) == 10
    assert len(res.lifted_boundary) == 2
    assert res.ratio == pytest.approx(0.2)
    assert res.verdict  # 2 < 0.25 * 10


def test_box_lift_singleton_and_wrap_guard():
    spec = BoxSpaceSpec("cyclic", (8, 128))
    res = box_lift(spec, 1, [5], eps=3.0)
    assert len(res.lifted) == 1 and res.isometric
    with pytest.raises(InputError):
        box_lift(spec, 1, range(0, 100), eps=0.5)  # wraps past half the cycle


def test_box_lift_preserves_counts_everywhere():
    spec = BoxSpaceSpec("cyclic", (16, 64))
    quotient = cayley_quotient(spec, 0)
    inj = injectivity_radius(spec, 0)
    for start in range(16):
        for length in range(1, 6):
            arc = tuple((start + k) % 16 for k in range(length))
            diam = quotient.subset_diameter(arc)
            if diam + 2 < inj:
                res = box_lift(spec, 0, arc, eps=1.0)
                assert res.isometric
                assert len(res.lifted) == length
                assert len(res.lifted_boundary) == len(boundary(quotient, arc, 1))


def test_neg_ula_profile_cycles_decay():
    fam = assemble_family([cycle_graph(50), cycle_graph(100), cycle_graph(250)])
    rep = neg_ula_profile(fam, [1], [45])
    assert rep.rows
    assert rep.min_value() < 0.05
    assert rep.skipped  # the small members fall under the size floor


def test_neg_ula_profile_r0():
    fam = assemble_family([cycle_graph(30)])
    rep = neg_ula_profile(fam, [0], [5], size_floor=1)
    assert all(row.value == 0.0 for row in rep.rows)


def test_neg_ula_profile_monotone_in_radius():
    fam = assemble_family([cycle_graph(40)])
    rep = neg_ula_profile(fam, [1, 2, 3], [6], size_floor=1)
    by_r = {row.radius: row.value for row in rep.rows}
    assert by_r[1] <= by_r[2] <= by_r[3]


def test_neg_ula_profile_tree_margin():
    fam = assemble_family([tree_graph(3, 6)])
    values = {}
    for r in (1, 2, 3):
        rep = neg_ula_profile(fam, [r], [6], margin=r, size_floor=1)
        values[r] = rep.min_value()
    assert values[1] <= values[2] <= values[3]
    base, _ = exponential_fit(sorted(values.items()))
    assert base > 1.3


def test_growth_compare():
    n = 20
    f = [k for k in range(1, n + 1)]
    g = [2**k for k in range(1, n + 1)]
    assert growth_compare(f, f).verdict == "preceq"
    assert growth_compare(f, f).c == 1.0
    assert growth_compare(f, g).verdict == "preceq"
    rel = growth_compare(g, f, c_grid=[1, 2, 4, 8, 16], d_grid=[1, 2, 4, 8, 16])
    assert rel.verdict == "incomparable-on-sample"


def test_exponential_fit():
    base, residual = exponential_fit([(1, 2.0), (2, 4.0), (3, 8.0)])
    assert base == pytest.approx(2.0)
    assert residual == pytest.approx(0.0, abs=1e-12)
    assert exponential_fit([(1, 5.0)]) == (None, None)


def brute_min_folner_diameter(space, radius, eps):
    best = None
    for k in range(1, space.n + 1):
        for sub in itertools.combinations(range(space.n), k):
            if len(boundary(space, sub, radius)) < eps * len(sub):
                d = space.subset_diameter(sub)
                if best is None or d < best:
                    best = d
    return best


def test_cube_refute_k2():
    # eps below the singleton's ratio: the whole edge (empty boundary) wins
    rows = cube_refute(2, [1], 1, 0.5)
    assert rows[0].min_diameter == 1
    # eps above the vertex degree: a singleton already qualifies
    rows = cube_refute(2, [1], 1, 5.0)
    assert rows[0].min_diameter == 0


def test_cube_refute_cube_exact():
    rows = cube_refute(2, [3], 1, 0.5)
    oracle = brute_min_folner_diameter(hamming_power(2, 3), 1, 0.5)
    assert rows[0].exact
    assert rows[0].min_diameter == oracle == 3


def test_cube_refute_diameter_grows():
    rows = cube_refute(2, [1, 2, 3], 1, 0.5)
    diams = [r.min_diameter for r in rows]
    assert diams == [1, 2, 3]


def test_cube_refute_cap_flagged():
    rows = cube_refute(2, [9], 1, 0.5, cap=10)
    assert not rows[0].exact
    assert rows[0].min_diameter is not None  # ball fallback upper bound


def test_cube_refute_size_cap_noted():
    rows = cube_refute(2, [13], 1, 0.5)
    assert rows[0].min_diameter is None
    assert "skipped" in rows[0].note


def test_profile_thread_cap_same_result(monkeypatch):
    fam = assemble_family([cycle_graph(30), cycle_graph(60)])
    base = neg_ula_profile(fam, [1, 2], [4], size_floor=1)
    monkeypatch.setenv("COARSE_LAB_THREADS", "3")
    threaded = neg_ula_profile(fam, [1, 2], [4], size_floor=1)
    assert base.rows == threaded.rows
