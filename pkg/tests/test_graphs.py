"""Sampling, graph construction, partitions, shortest paths, and the
serialization formats."""

import json

import numpy as np
import pytest

import oracles
import riemhj.graphs as rg
import riemhj.serialize as io
from riemhj.errors import DisconnectedGraphError
from riemhj.manifolds import get_manifold


def test_sample_determinism_and_domain(rng):
    sph = get_manifold("sphere")
    a = rg.sample(sph, 100, seed=42)
    b = rg.sample(sph, 100, seed=42)
    assert np.array_equal(a.points, b.points)
    assert a.n == 100
    assert np.all(sph.contains(a.points))
    c = rg.sample(sph, 1, seed=0)
    assert c.n == 1
    with pytest.raises(ValueError):
        rg.sample(sph, 0, seed=0)


def test_sphere_sampling_hemisphere_fraction():
    # Monte-Carlo oracle: northern-hemisphere mass of the uniform measure
    sph = get_manifold("sphere")
    cloud = rg.sample(sph, 10_000, seed=5)
    frac = float(np.mean(cloud.points[:, 2] > 0))
    assert abs(frac - 0.5) <= 0.02


def test_two_point_graph():
    E2 = get_manifold("euclidean2")
    cloud = rg.PointCloud(E2, np.array([[0.0, 0.0], [0.3, 0.4]]), seed=0)
    g = rg.build_graph(cloud, k=1)
    assert len(g.edges) == 1
    assert g.lengths[0] == pytest.approx(0.5)


def test_grid_graph_axis_edges():
    E2 = get_manifold("euclidean2", box=[(0.0, 1.0), (0.0, 1.0)])
    cloud = rg.sample(E2, 25, seed=0, method="grid")
    g = rg.build_graph(cloud, k=4)
    h = 0.25
    axis = [l for l in g.lengths if abs(l - h) < 1e-12]
    assert len(axis) == 40  # 2 * 5 * 4 interior axis edges of a 5x5 grid


@pytest.mark.parametrize("name", ["sphere", "hyperbolic", "torus"])
def test_knn_against_brute_force(name, rng):
    man = get_manifold(name)
    cloud = rg.sample(man, 120, seed=3)
    g = rg.build_graph(cloud, k=5)
    pts = cloud.points
    D = np.zeros((cloud.n, cloud.n))
    for i in range(cloud.n):
        D[i] = man.dist(np.broadcast_to(pts[i], pts.shape), pts)
    r = man.r_M(pts)
    r = np.full(cloud.n, r) if np.isscalar(r) else np.asarray(r)
    expect = oracles.brute_knn_edges(D, 5, r)
    got = {tuple(e): l for e, l in zip(map(tuple, g.edges), g.lengths)}
    assert set(got) == set(expect)
    for e in got:
        assert got[e] == pytest.approx(expect[e], abs=1e-12)


def test_graph_determinism():
    sph = get_manifold("sphere")
    g1 = rg.build_graph(rg.sample(sph, 200, seed=9), k=6)
    g2 = rg.build_graph(rg.sample(sph, 200, seed=9), k=6)
    assert np.array_equal(g1.edges, g2.edges)
    assert np.array_equal(g1.lengths, g2.lengths)


def test_disconnected_graph_error():
    E2 = get_manifold("euclidean2")
    pts = np.vstack(
        [
            np.random.default_rng(0).random((5, 2)) * 0.1,
            np.random.default_rng(1).random((5, 2)) * 0.1 + 30.0,
        ]
    )
    cloud = rg.PointCloud(E2, pts, seed=0)
    with pytest.raises(DisconnectedGraphError) as exc:
        rg.build_graph(cloud, k=2)
    assert len(exc.value.components) == 2


def test_dropped_edges_beyond_radius():
    # two clusters on the torus separated past r_M: edges are dropped,
    # which disconnects the graph
    tor = get_manifold("torus")
    ptsA = np.random.default_rng(0).random((6, 2)) * 0.2
    ptsB = ptsA + np.array([np.pi, np.pi]) - 0.1
    cloud = rg.PointCloud(tor, np.vstack([ptsA, ptsB]), seed=0)
    with pytest.warns(UserWarning, match="dropped"):
        with pytest.raises(DisconnectedGraphError):
            rg.build_graph(cloud, k=6)


def test_no_edge_reaches_radius():
    cusp = get_manifold("cusp")
    cloud = rg.sample(cusp, 150, seed=2)
    g = rg.build_graph(cloud, k=6)
    r = cusp.r_M(cloud.points)
    for (a, b), l in zip(g.edges, g.lengths):
        assert l < min(r[a], r[b])


def test_partition_square_ring():
    E2 = get_manifold("euclidean2", box=[(0.0, 1.0), (0.0, 1.0)])
    cloud = rg.sample(E2, 49, seed=0, method="grid")
    g = rg.build_graph(cloud, k=4)
    reg = rg.region_from_spec(E2, "box:0.0,1.0,0.0,1.0")
    bs = rg.partition(g, reg)
    # the outer ring is not in the open square; it plus the first inner ring
    # forms the band
    pts = cloud.points
    on_edge = (
        (pts[:, 0] == 0.0) | (pts[:, 0] == 1.0) | (pts[:, 1] == 0.0) | (pts[:, 1] == 1.0)
    )
    for i in np.nonzero(on_edge)[0]:
        assert i in set(bs.boundary.tolist())
    assert set(bs.interior.tolist()).isdisjoint(set(bs.boundary.tolist()))


def test_partition_errors():
    E2 = get_manifold("euclidean2", box=[(0.0, 1.0), (0.0, 1.0)])
    cloud = rg.sample(E2, 25, seed=0, method="grid")
    g = rg.build_graph(cloud, k=4)
    with pytest.raises(ValueError, match="no boundary"):
        rg.partition(g, lambda p: True)
    with pytest.raises(ValueError, match="empty"):
        rg.partition(g, lambda p: False)


def test_partition_hemisphere_band(rng):
    sph = get_manifold("sphere")
    cloud = rg.sample(sph, 600, seed=4)
    g = rg.build_graph(cloud, k=6)
    reg = rg.region_from_spec(sph, "hemisphere")
    bs = rg.partition(g, reg)
    # every band vertex is near the equator (within the neighbor scale)
    assert np.abs(cloud.points[bs.boundary, 2]).max() <= 2.5 * g.h


def test_graph_distance_path():
    E1 = get_manifold("euclidean1", box=[(0.0, 4.0)])
    cloud = rg.PointCloud(E1, np.arange(5.0)[:, None], seed=0)
    g = rg.build_graph(cloud, k=1)
    u = rg.graph_distance(g, [0])
    assert u[0] == 0.0
    assert np.allclose(u, [0, 1, 2, 3, 4], atol=1e-12)


def test_graph_distance_matches_brute(rng):
    sph = get_manifold("sphere")
    cloud = rg.sample(sph, 80, seed=8)
    g = rg.build_graph(cloud, k=5)
    edges = {tuple(e): l for e, l in zip(map(tuple, g.edges), g.lengths)}
    u = rg.graph_distance(g, [0, 3])
    ref = oracles.brute_shortest_paths(g.n, edges, [0, 3])
    assert np.abs(u - ref).max() <= 1e-9


def test_graph_distance_lipschitz_exact(rng):
    sph = get_manifold("sphere")
    cloud = rg.sample(sph, 400, seed=8)
    g = rg.build_graph(cloud, k=6)
    u = rg.graph_distance(g, [0])
    for (a, b), l in zip(g.edges, g.lengths):
        assert abs(u[a] - u[b]) <= l  # exact float comparison


def test_graph_distance_dominates_manifold(rng):
    sph = get_manifold("sphere")
    cloud = rg.sample(sph, 500, seed=10)
    g = rg.build_graph(cloud, k=8)
    u = rg.graph_distance(g, [0])
    d = sph.dist(np.broadcast_to(cloud.points[0], cloud.points.shape), cloud.points)
    assert np.all(u >= d - 1e-9)


def test_serialize_roundtrips(tmp_path):
    sph = get_manifold("sphere")
    cloud = rg.sample(sph, 40, seed=1)
    g = rg.build_graph(cloud, k=4)
    cpath = tmp_path / "cloud.json"
    gpath = tmp_path / "graph.json"
    io.save_cloud(cpath, cloud)
    c2 = io.load_cloud(cpath)
    assert np.array_equal(c2.points, cloud.points)
    io.save_graph(gpath, g)
    g2 = io.load_graph(gpath)
    assert np.array_equal(g2.edges, g.edges)
    assert np.array_equal(g2.lengths, g.lengths)
    assert g2.h == g.h
    # field CSV with the inf sentinel
    vals = np.array([0.0, 1.5, np.inf, -2.25])
    fpath = tmp_path / "field.csv"
    io.save_field(fpath, vals, fmt="csv")
    back = io.load_field(fpath)
    assert back[2] == np.inf
    assert np.array_equal(back[[0, 1, 3]], vals[[0, 1, 3]])
    jpath = tmp_path / "field.json"
    io.save_field(jpath, vals, fmt="json")
    assert np.array_equal(io.load_field(jpath)[[0, 1, 3]], vals[[0, 1, 3]])
    # manifold spec JSON shape
    spec = sph.spec()
    assert spec["name"] == "sphere" and spec["dim"] == 2
    assert json.dumps(spec)  # serializable


def test_mean_stretch_on_sphere():
    sph = get_manifold("sphere")
    cloud = rg.sample(sph, 5000, seed=13)
    g = rg.build_graph(cloud, k=8)
    rng = np.random.default_rng(0)
    pairs = rng.integers(0, g.n, size=(40, 2))
    ratios = []
    for a, b in pairs:
        if a == b:
            continue
        du = rg.graph_distance(g, [int(a)])[int(b)]
        dm = sph.dist(cloud.points[a], cloud.points[b])
        if dm > 0.3:
            ratios.append(du / dm)
    assert np.mean(ratios) <= 1.1
