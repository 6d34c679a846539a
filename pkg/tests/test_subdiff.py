"""Sub/superdifferential probes, estimates, directional derivatives, and
their property-level invariants."""

import numpy as np
import pytest
from hypothesis import given, strategies as st

import oracles
import riemhj.graphs as rg
from riemhj.fields import (
    ScalarField,
    abs_field,
    dist2_field,
    discrete_field,
    step_field,
    xadd,
    xsub,
)
from riemhj.errors import ExtendedRealError
from riemhj.geometry import Point, normal_chart
from riemhj.manifolds import get_manifold
from riemhj.subdiff import (
    default_radii,
    density_probe,
    differentiability_probe,
    dini_inf_quotient,
    estimate_subdifferential,
    generalized_directional,
    probe_table,
    vertex_subgradient_consistent,
)
from riemhj.subdiff import test_subgradient as probe_sub
from riemhj.subdiff import test_supergradient as probe_super

E1 = get_manifold("euclidean1", box=[(-5.0, 5.0)])
ORIGIN = Point(E1, np.array([0.0]))
ABS = abs_field(E1)


# ---------------------------------------------------------------------------
# extended reals
# ---------------------------------------------------------------------------


def test_extended_real_arithmetic():
    assert xadd(np.inf, 5.0) == np.inf
    assert xsub(np.inf, 5.0) == np.inf
    with pytest.raises(ExtendedRealError):
        xsub(np.inf, np.inf)
    with pytest.raises(ExtendedRealError):
        xadd(np.inf, -np.inf)


# ---------------------------------------------------------------------------
# dini quotients and the generalized directional derivative
# ---------------------------------------------------------------------------


def test_dini_abs_at_zero():
    t = np.geomspace(1e-6, 1.0, 20)
    assert dini_inf_quotient(ABS, ORIGIN, [1.0], t) == pytest.approx(1.0)
    assert dini_inf_quotient(ABS, ORIGIN, [-1.0], t) == pytest.approx(1.0)


def test_dini_linear_grid_independent():
    E2 = get_manifold("euclidean2")
    a = np.array([0.7, -0.3])
    f = ScalarField(E2, fn=lambda x: np.asarray(x, float) @ a)
    p = Point(E2, np.zeros(2))
    for tg in (np.geomspace(1e-5, 1.0, 7), np.geomspace(1e-3, 4.0, 23)):
        for v in (np.array([1.0, 0.0]), np.array([0.6, 0.8])):
            q = dini_inf_quotient(f, p, v, tg)
            assert q == pytest.approx(float(a @ v), abs=1e-12)


def test_dini_dist2_at_center():
    hyp = get_manifold("hyperbolic")
    p0 = np.array([1.0, 0.0, 0.0])
    f = dist2_field(hyp, p0)
    p = Point(hyp, p0)
    v = hyp.frame(p0)[0]
    t = np.geomspace(1e-7, 1.0, 25)
    # symmetric quadratic minimum: quotient t^2/t -> 0
    assert dini_inf_quotient(f, p, v, t) == pytest.approx(0.0, abs=1e-6)


def test_generalized_directional_cases():
    # smooth: df(p)(v)
    f = ScalarField(E1, fn=lambda x: (np.asarray(x, float)[..., 0]) ** 2)
    p = Point(E1, np.array([0.5]))
    val = generalized_directional(f, p, [1.0], shrink_schedule=0.01 * 0.5 ** np.arange(6))
    assert val == pytest.approx(1.0, abs=0.05)
    # |x| at 0
    assert generalized_directional(ABS, ORIGIN, [1.0]) == pytest.approx(1.0, abs=1e-8)
    # -|x| at 0: the limsup picks the steeper nearby slope, +1
    val = generalized_directional(-ABS, ORIGIN, [1.0])
    # 1-D exhaustive grid oracle
    xs = np.linspace(-0.05, 0.05, 201)
    ts = np.geomspace(1e-4, 0.05, 50)
    best = max(
        (-abs(x + t) + abs(x)) / t for x in xs for t in ts
    )
    assert val == pytest.approx(1.0, abs=1e-6)
    assert best == pytest.approx(1.0, abs=1e-6)


# ---------------------------------------------------------------------------
# subgradient verdicts
# ---------------------------------------------------------------------------


def test_abs_verdicts():
    assert not probe_sub(ABS, ORIGIN, [0.5]).violated
    v = probe_sub(ABS, ORIGIN, [1.5])
    assert v.violated
    # the witness reproduces an increment below -margin
    tab = probe_table(ABS, ORIGIN)
    inc = tab.increments(np.array([1.5]))
    r = np.nonzero(tab.radii == v.witness_radius)[0][0]
    d = np.nonzero((tab.directions == v.witness_direction).all(axis=1))[0][0]
    assert inc[r, d] == v.observed_increment < -v.margin


def test_neg_abs_never_subdifferentiable():
    for z in np.linspace(-2, 2, 41):
        assert probe_sub(-ABS, ORIGIN, [z]).violated


def test_supergradient_duality():
    assert not probe_super(-ABS, ORIGIN, [0.0]).violated
    assert probe_super(ABS, ORIGIN, [0.0]).violated
    f = ScalarField(E1, fn=lambda x: np.sin(np.asarray(x, float)[..., 0]))
    p = Point(E1, np.array([0.3]))
    radii = 0.01 * 0.5 ** np.arange(6)
    assert not probe_super(f, p, [np.cos(0.3)], radii=radii, margin=1e-3).violated


@given(
    z=st.floats(min_value=-3, max_value=3),
    levels=st.integers(min_value=1, max_value=8),
)
def test_verdict_antisymmetry_property(z, levels):
    # probe_sub(f, p, z) agrees with probe_super(-f, p, -z)
    radii = default_radii(ORIGIN, levels=levels)
    a = probe_sub(ABS, ORIGIN, [z], radii=radii)
    b = probe_super(-ABS, ORIGIN, [-z], radii=radii)
    assert a.status == b.status


@given(z=st.floats(min_value=-3, max_value=3), deep=st.integers(min_value=1, max_value=6))
def test_monotone_probe_property(z, deep):
    # deepening the schedule never flips violated -> consistent
    shallow = default_radii(ORIGIN, levels=2)
    deeper = default_radii(ORIGIN, levels=2 + deep)
    a = probe_sub(ABS, ORIGIN, [z], radii=shallow)
    b = probe_sub(ABS, ORIGIN, [z], radii=deeper)
    if a.violated:
        assert b.violated


# ---------------------------------------------------------------------------
# estimates
# ---------------------------------------------------------------------------


def test_abs_interval_estimate():
    est = estimate_subdifferential(ABS, ORIGIN, mode="convex")
    assert oracles.hausdorff(est.outer, np.array([[-1.0], [1.0]])) <= 0.02
    assert est.nonempty
    # inner certified points sit inside the outer interval
    assert est.inner.min() >= -1.0 - 1e-9 and est.inner.max() <= 1.0 + 1e-9


def test_support_polytope_converges_to_segment():
    # f = |<a, .>| on R^2 at 0: the subdifferential is the segment [-a, a]
    E2 = get_manifold("euclidean2")
    a = np.array([0.8, 0.6])
    f = ScalarField(E2, fn=lambda x: np.abs(np.asarray(x, float) @ a))
    p = Point(E2, np.zeros(2))
    prev = None
    for nfan in (32, 128, 512):
        ang = 2 * np.pi * np.arange(nfan) / nfan
        fan = np.stack([np.cos(ang), np.sin(ang)], axis=-1)
        est = estimate_subdifferential(f, p, direction_fan=fan, mode="convex")
        # the outer polytope contains the segment, so its Hausdorff distance
        # to it is the worst vertex-to-segment distance
        h = max(oracles.point_segment_distance(v, -a, a) for v in est.outer)
        if prev is not None:
            assert h <= prev + 1e-9
        prev = h
    assert prev <= 0.02


def test_smooth_singleton_estimate():
    f = ScalarField(E1, fn=lambda x: np.sin(np.asarray(x, float)[..., 0]))
    p = Point(E1, np.array([0.4]))
    est = estimate_subdifferential(f, p, mode="general",
                                   radii=1e-3 * 0.5 ** np.arange(6), margin=1e-3)
    assert est.nonempty
    # the certified inner set hugs the derivative: half grid spacing wide
    target = np.cos(0.4)
    assert np.abs(est.inner.mean() - target) <= 0.05
    assert np.abs(est.inner - target).max() <= 0.51


def test_dist2_minimum_contains_zero():
    hyp = get_manifold("hyperbolic")
    p0 = np.array([1.0, 0.0, 0.0])
    f = dist2_field(hyp, p0)
    p = Point(hyp, p0)
    assert not probe_sub(f, p, np.zeros(2)).violated


def test_differentiability_probe_cases():
    g = differentiability_probe(
        ScalarField(E1, fn=lambda x: (np.asarray(x, float)[..., 0]) ** 2),
        Point(E1, np.array([0.7])),
        tol=0.01,
    )
    assert g is not None and g[0] == pytest.approx(1.4, abs=0.01)
    assert differentiability_probe(ABS, ORIGIN, tol=0.01) is None
    g1 = differentiability_probe(ABS, Point(E1, np.array([1.0])), tol=0.01)
    assert g1 is not None and g1[0] == pytest.approx(1.0, abs=0.01)
    # FD oracle agreement on a 2-D smooth field
    E2 = get_manifold("euclidean2")
    f2 = ScalarField(E2, fn=lambda x: np.sin(np.asarray(x, float)[..., 0])
                     * np.cos(np.asarray(x, float)[..., 1]))
    p2 = Point(E2, np.array([0.2, -0.4]))
    g2 = differentiability_probe(f2, p2, tol=0.01)
    ref = oracles.fd_gradient(lambda c: np.sin(c[0]) * np.cos(c[1]), p2.coords)
    assert g2 is not None and np.abs(g2 - ref).max() <= 0.01


# ---------------------------------------------------------------------------
# vertex probes on discrete fields
# ---------------------------------------------------------------------------


def grid_graph_1d(n=41, lo=-1.0, hi=1.0):
    man = get_manifold("euclidean1", box=[(lo, hi)])
    cloud = rg.sample(man, n, seed=0, method="grid")
    return rg.build_graph(cloud, k=2), cloud


def test_zero_in_subdifferential_at_graph_minimum(rng):
    graph, cloud = grid_graph_1d()
    vals = np.cos(3.0 * cloud.points[:, 0]) + 0.2 * cloud.points[:, 0]
    argmin = int(np.argmin(vals))
    ok = vertex_subgradient_consistent(vals, graph, argmin, np.zeros((1, 1)), 1e-12)
    assert ok[0]


def test_density_probe_neg_abs():
    graph, cloud = grid_graph_1d()
    vals = -np.abs(cloud.points[:, 0])
    frac = density_probe(vals, graph)
    assert frac == pytest.approx((graph.n - 1) / graph.n)


def test_density_probe_smooth_and_convex():
    graph, cloud = grid_graph_1d()
    assert density_probe(np.sin(cloud.points[:, 0]), graph) == 1.0
    hyp = get_manifold("hyperbolic")
    hc = rg.sample(hyp, 150, seed=4)
    hg = rg.build_graph(hc, k=5)
    d2 = dist2_field(hyp, np.array([1.0, 0.0, 0.0]))
    assert density_probe(d2.eval_many(hc.points), hg) == 1.0


def test_no_consistent_subgradient_at_jump_up_vertices():
    # the lsc step field: 0 on [0, 1], 1 elsewhere; vertices just outside
    # [0, 1] see a drop toward the inside, i.e. a jump up at themselves
    man = get_manifold("euclidean1", box=[(-1.0, 2.0)])
    cloud = rg.sample(man, 61, seed=0, method="grid")
    graph = rg.build_graph(cloud, k=2)
    f = step_field(man)
    vals = f.eval_many(cloud.points)
    xs = cloud.points[:, 0]
    h = 3.0 / 60
    outside_adjacent = np.nonzero(
        ((xs < 0) & (xs > -1.5 * h)) | ((xs > 1) & (xs < 1 + 1.5 * h))
    )[0]
    assert outside_adjacent.size > 0
    grid = np.linspace(-3, 3, 25)[:, None]
    for i in outside_adjacent:
        ok = vertex_subgradient_consistent(vals, graph, int(i), grid, margin=0.3)
        assert not ok.any()
    # while inside the plateau the zero covector is consistent
    inside = int(np.argmin(np.abs(xs - 0.5)))
    assert vertex_subgradient_consistent(vals, graph, inside, np.zeros((1, 1)), 1e-9)[0]


def test_probe_with_infinite_values():
    graph, cloud = grid_graph_1d(n=21)
    vals = np.where(np.abs(cloud.points[:, 0]) < 0.5, cloud.points[:, 0] ** 2, np.inf)
    # at the center, 0 is consistent: +inf neighbors never violate
    center = int(np.argmin(np.abs(cloud.points[:, 0])))
    assert vertex_subgradient_consistent(vals, graph, center, np.zeros((1, 1)), 1e-6)[0]
    frac = density_probe(vals, graph)
    assert frac == 1.0  # every finite vertex of the convex parabola passes
