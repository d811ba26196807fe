import math

import numpy as np
import pytest
from helpers import naive_build, random_instance

from secperc.graph import GridIndex, build_graph, guard_radius, variant_view
from secperc.ppp import PointSet, Seed, Window, sample_ppp


def _pset(kind, pts, window, intensity=0.0):
    return PointSet(kind=kind, intensity=intensity, window=window,
                    points=np.asarray(pts, dtype=float))


W6 = Window.box(6, 6)


def test_guard_radius_hand_cases():
    reds = GridIndex(np.array([[1.0, 1.0], [3.0, 4.0]]), W6, 0.5)
    assert guard_radius((0.0, 0.0), reds) == pytest.approx(math.sqrt(2))
    empty = GridIndex(np.empty((0, 2)), W6, 0.5)
    assert guard_radius((0.0, 0.0), empty) == math.inf
    coincident = GridIndex(np.array([[2.0, 2.0]]), W6, 0.5)
    assert guard_radius((2.0, 2.0), coincident) == 0.0


def test_grid_nearest_matches_brute_force():
    rng = np.random.default_rng(11)
    pts = rng.random((200, 2)) * 6
    for cell in (0.15, 0.7, 3.0):
        grid = GridIndex(pts, W6, cell)
        for q in rng.random((50, 2)) * 6:
            brute = np.sqrt(((pts - q) ** 2).sum(axis=1)).min()
            assert grid.nearest_distance(q) == pytest.approx(brute, abs=1e-12)


def test_grid_query_ball_matches_brute_force():
    rng = np.random.default_rng(12)
    pts = rng.random((150, 2)) * 6
    grid = GridIndex(pts, W6, 0.8)
    for q, r in zip(rng.random((30, 2)) * 6, rng.uniform(0.1, 4.0, 30)):
        ids, d = grid.query_ball(q, r)
        brute = np.sqrt(((pts - q) ** 2).sum(axis=1))
        assert set(ids.tolist()) == set(np.flatnonzero(brute <= r).tolist())
        assert np.allclose(np.sort(d), np.sort(brute[brute <= r]))


def test_build_no_reds_complete_digraph():
    g = build_graph(_pset("black", [[0, 0], [1, 0]], W6),
                    _pset("red", np.empty((0, 2)), W6))
    assert g.num_edges == 2
    assert g.guard[0] == math.inf


def test_build_tie_at_guard_included():
    # guard of (1,0) is exactly 1; the red at that distance sits outside the
    # open ball, so the edge back to (0,0) survives
    g = build_graph(_pset("black", [[0, 0], [1, 0]], W6),
                    _pset("red", [[2, 0]], W6))
    assert g.guard.tolist() == [2.0, 1.0]
    src, dst, _ = g.edges()
    assert set(zip(src.tolist(), dst.tolist())) == {(0, 1), (1, 0)}


def test_build_one_directional_edge():
    g = build_graph(_pset("black", [[0, 0], [1, 0]], W6),
                    _pset("red", [[1.5, 0]], W6))
    src, dst, _ = g.edges()
    assert set(zip(src.tolist(), dst.tolist())) == {(0, 1)}
    u = variant_view(g, "U")
    b = variant_view(g, "B")
    assert u.edge_set() == {(0, 1)}
    assert b.num_edges == 0


def test_variant_views_no_reds_complete():
    g = build_graph(_pset("black", [[0, 0], [1, 0], [3, 3]], W6),
                    _pset("red", np.empty((0, 2)), W6))
    u = variant_view(g, "U")
    b = variant_view(g, "B")
    assert u.edge_set() == b.edge_set() == {(0, 1), (0, 2), (1, 2)}


def test_variant_b_subset_u():
    for i in range(10):
        _, _, g = random_instance(900, i)
        assert variant_view(g, "B").edge_set() <= variant_view(g, "U").edge_set()


def test_dimension_and_window_mismatch_rejected():
    b1 = _pset("black", [[1.0]], Window.box(6))
    r2 = _pset("red", [[1.0, 1.0]], W6)
    with pytest.raises(ValueError):
        build_graph(b1, r2)
    b6 = _pset("black", [[1, 1]], W6)
    r5 = _pset("red", [[1, 1]], Window.box(5, 5))
    with pytest.raises(ValueError):
        build_graph(b6, r5)


def test_grid_equals_naive_small_batch():
    for i in range(15):
        blacks, reds, g = random_instance(901, i)
        guard, edges = naive_build(blacks, reds)
        assert np.allclose(g.guard, guard)
        src, dst, _ = g.edges()
        assert set(zip(src.tolist(), dst.tolist())) == edges


def test_prefix_property():
    # out-neighbours sorted by distance are a prefix of the vertex's
    # nearest-black ordering
    for i in range(8):
        blacks, _, g = random_instance(902, i)
        pts = blacks.points
        for v in range(g.n):
            ids, d = g.out_neighbors(v)
            assert np.all(np.diff(d) >= 0)
            all_d = np.sqrt(((pts - pts[v]) ** 2).sum(axis=1))
            order = np.argsort(all_d, kind="stable")[1:]  # drop v itself
            k = len(ids)
            assert set(ids.tolist()) == set(order[:k].tolist()) or (
                # distance ties straddling the cut are interchangeable
                sorted(all_d[ids].tolist()) == sorted(all_d[order[:k]].tolist())
            )


def test_monotone_under_red_superposition():
    rng = np.random.default_rng(77)
    for i in range(10):
        blacks, reds, g = random_instance(903, i)
        extra = rng.random((10, 2)) * 6
        reds_more = _pset("red", np.vstack([reds.points, extra]), W6,
                          intensity=reds.intensity)
        g2 = build_graph(blacks, reds_more)
        src, dst, _ = g.edges()
        src2, dst2, _ = g2.edges()
        assert set(zip(src2.tolist(), dst2.tolist())) <= set(zip(src.tolist(), dst.tolist()))
        assert np.all(g2.guard <= g.guard + 1e-12)


def test_degree_accounting():
    for i in range(5):
        _, _, g = random_instance(904, i)
        src, dst, _ = g.edges()
        out = np.diff(g.indptr)
        indeg = np.bincount(dst, minlength=g.n)
        assert out.sum() == indeg.sum() == g.num_edges


def test_build_determinism():
    blacks, reds, g = random_instance(905, 0)
    g2 = build_graph(blacks, reds)
    assert np.array_equal(g.indices, g2.indices)
    assert np.array_equal(g.indptr, g2.indptr)
    assert g.to_csv() == g2.to_csv()


def test_build_1d():
    w = Window.box(20)
    blacks = sample_ppp(1.0, w, Seed(906, 0))
    reds = sample_ppp(1.0, w, Seed(906, 1), kind="red")
    g = build_graph(blacks, reds)
    guard, edges = naive_build(blacks, reds)
    assert np.allclose(g.guard, guard)
    src, dst, _ = g.edges()
    assert set(zip(src.tolist(), dst.tolist())) == edges


def test_graph_serialization():
    _, _, g = random_instance(907, 0)
    csv = g.to_csv()
    assert csv.splitlines()[0] == "src,dst,dist"
    blob = g.to_json()
    assert len(blob["vertices"]) == g.n
    assert len(blob["adjacency"]) == g.n
