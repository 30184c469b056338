"""Family assembly, random regular graphs, Cayley towers, Hamming powers,
spectral gap estimates."""

import itertools

import numpy as np
import pytest

from coarselab.errors import InputError
from coarselab.generators import (
    BoxSpaceSpec,
    assemble_family,
    box_family,
    cayley_quotient,
    complete_graph,
    cycle_graph,
    family_from_doc,
    family_to_doc,
    hamming_power,
    large_girth_members,
    path_graph,
    random_regular,
    spectral_gap,
    tree_graph,
)
from coarselab.space import FiniteMetricSpace, girth


def test_assemble_single_component():
    c4 = cycle_graph(4)
    fam = assemble_family([c4])
    assert np.array_equal(fam.space.dist, c4.dist)


def test_assemble_two_cycles():
    fam = assemble_family([cycle_graph(4), cycle_graph(4)], pads=(1, 2))
    g = fam.space
    assert g.d(0, 4) == 3  # basepoint to basepoint
    # d(X1, X1^c): minimize over pairs
    sep = min(g.d(x, y) for x in range(4) for y in range(4, 8))
    assert sep == 3
    assert fam.separation(0) == 3
    # restriction of the assembled metric equals the member metric
    assert np.array_equal(g.dist[:4, :4], cycle_graph(4).dist)


def test_assemble_triangle_inequality_exhaustive():
    fam = assemble_family([cycle_graph(5), path_graph(4), complete_graph(3)], pads=(1, 2, 4))
    d = fam.space.dist
    n = fam.space.n
    assert n <= 300
    for x in range(n):
        for y in range(n):
            for z in range(n):
                assert d[x, z] <= d[x, y] + d[y, z]


def test_assemble_rejects_bad_pads_and_disconnected():
    with pytest.raises(InputError):
        assemble_family([cycle_graph(4), cycle_graph(4)], pads=(2, 2))
    broken = FiniteMetricSpace.from_edges(4, [(0, 1), (2, 3)])
    with pytest.raises(InputError):
        assemble_family([broken], pads=(1,))


def test_random_regular_k4():
    space, g = random_regular(4, 3, seed=5)
    assert np.array_equal(space.dist, complete_graph(4).dist)
    assert g == 3


def test_random_regular_deterministic_and_regular():
    a, ga = random_regular(10, 3, seed=42)
    b, gb = random_regular(10, 3, seed=42)
    assert np.array_equal(a.dist, b.dist)
    assert ga == gb
    assert set(a.degrees().tolist()) == {3}
    c, _ = random_regular(10, 3, seed=43)
    # different seed, almost surely different graph
    assert not np.array_equal(a.dist, c.dist)


def test_random_regular_infeasible():
    with pytest.raises(InputError):
        random_regular(3, 3, seed=0)
    with pytest.raises(InputError):
        random_regular(5, 3, seed=0)  # odd n*d


def test_large_girth_members():
    members = large_girth_members([10, 14], 3, seed=11, min_girth=5)
    for m in members:
        assert girth(m) >= 5
        assert set(m.degrees().tolist()) == {3}


def test_cayley_cyclic_tower():
    spec = BoxSpaceSpec("cyclic", (2, 4, 8, 16))
    assert np.array_equal(cayley_quotient(spec, 2).dist, cycle_graph(8).dist)
    assert girth(cayley_quotient(spec, 3)) == 16
    fam = box_family(spec)
    assert len(fam) == 4
    with pytest.raises(InputError):
        BoxSpaceSpec("cyclic", (2, 3))  # 2 does not divide 3


def test_cayley_trivial_quotient():
    spec = BoxSpaceSpec("cyclic", (1, 2))
    assert cayley_quotient(spec, 0).n == 1


def test_cayley_torus():
    spec = BoxSpaceSpec("torus", (4, 8))
    t = cayley_quotient(spec, 0)
    assert t.n == 16
    assert set(t.degrees().tolist()) == {4}
    # vertex transitivity: constant degree and matched eccentricities
    assert len(set(t.eccentricities().tolist())) == 1


def test_cayley_table_group():
    # Z/4 as an explicit table, generators {1, 3}
    table = tuple(tuple((a + b) % 4 for b in range(4)) for a in range(4))
    spec = BoxSpaceSpec("table", table=table, generators=(1, 3))
    g = cayley_quotient(spec, 0)
    assert np.array_equal(g.dist, cycle_graph(4).dist)
    with pytest.raises(InputError):
        BoxSpaceSpec("table", table=table, generators=(1,))  # not symmetric


def test_hamming_powers():
    k2 = hamming_power(2, 1)
    assert k2.n == 2 and k2.d(0, 1) == 1
    cube = hamming_power(2, 3)
    assert cube.n == 8
    assert set(cube.degrees().tolist()) == {3}
    nine = hamming_power(3, 2)
    assert nine.n == 9
    assert set(nine.degrees().tolist()) == {4}
    with pytest.raises(InputError):
        hamming_power(2, 13)  # over the size cap


def test_hamming_l1_metric():
    g = hamming_power(3, 2)

    def lee(a, b):
        ax, ay = a % 3, a // 3
        bx, by = b % 3, b // 3
        return min((ax - bx) % 3, (bx - ax) % 3) + min((ay - by) % 3, (by - ay) % 3)

    for a, b in itertools.combinations(range(9), 2):
        assert g.d(a, b) == lee(a, b)


def test_spectral_gap_values():
    # oracle: eigenvalue solvers on known spectra
    res = spectral_gap(complete_graph(4), tol=1e-10)
    assert res.lambda2 == pytest.approx(4.0, abs=1e-6)
    assert res.regular_degree == 3 and res.connected
    res = spectral_gap(cycle_graph(4), tol=1e-10)
    assert res.lambda2 == pytest.approx(2.0, abs=1e-6)
    two = FiniteMetricSpace.from_edges(6, [(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3)])
    res = spectral_gap(two)
    assert res.lambda2 == pytest.approx(0.0, abs=1e-6)
    assert not res.connected


def test_spectral_gap_matches_eigh():
    rng = np.random.default_rng(3)
    for seed in range(4):
        space, _ = random_regular(12, 3, seed=seed)
        adj = (space.dist == 1).astype(float)
        lap = np.diag(adj.sum(1)) - adj
        oracle = np.sort(np.linalg.eigvalsh(lap))[1]
        assert spectral_gap(space).lambda2 == pytest.approx(oracle, abs=1e-5)


def test_family_json_round_trip():
    fam = assemble_family([cycle_graph(5), path_graph(3)], pads=(2, 5), basepoints=(1, 0))
    doc = family_to_doc(fam, provenance={"type": "test"})
    back = family_from_doc(doc)
    assert np.array_equal(back.space.dist, fam.space.dist)
    assert back.pads == fam.pads
    with pytest.raises(InputError):
        family_from_doc({"components": []})
