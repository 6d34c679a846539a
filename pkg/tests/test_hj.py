"""Hamiltonians, viscosity verification, the monotone solvers, Perron
lifting, comparison and doubling checks, and the pullback machinery."""

import numpy as np
import pytest

import riemhj.graphs as rg
from riemhj.errors import GeometryError
from riemhj.fields import ScalarField, const_field, sphere_height
from riemhj.hamiltonian import (
    Hamiltonian,
    funnel_to_cusp,
    h_profile,
    identity_diffeo,
    intrinsic_modulus_probe,
    norm_based,
    pullback,
    pushforward,
)
from riemhj.manifolds import get_manifold
from riemhj.solve import (
    eikonal_solve,
    perron_improve,
    regularity_check,
    scheme_monotone_probe,
    stationary_solve,
)
from riemhj.viscosity import (
    comparison_check,
    doubling_pair,
    dplus_candidate_diameter,
    sup_subsolution_check,
    verify_viscosity,
)

CIRC = get_manifold("circle")
SPH = get_manifold("sphere")


def circle_graph(n=160, seed=0):
    cloud = rg.sample(CIRC, n, seed=seed, method="grid")
    return rg.build_graph(cloud, k=2), cloud


def sin_field():
    return ScalarField(CIRC, fn=lambda x: np.sin(np.asarray(x, float)[..., 0]))


# ---------------------------------------------------------------------------
# Hamiltonian type
# ---------------------------------------------------------------------------


def test_norm_based_reproduction(rng):
    g, cloud = circle_graph()
    f = sin_field()
    F = norm_based(CIRC, lambda s: s, f, A=1.0)
    for _ in range(50):
        i = int(rng.integers(g.n))
        z = rng.normal(size=1)
        x = cloud.points[i]
        direct = F(x, z)
        manual = float(CIRC.dual_norm(x, z)) - float(f.fn(x))
        assert abs(direct - manual) <= 1e-10


def test_norm_based_requires_monotone_profile():
    f = sin_field()
    with pytest.raises(ValueError, match="nondecreasing"):
        norm_based(CIRC, lambda s: -s, f)


def test_h_profiles():
    H = h_profile("linear")
    assert H(2.5) == 2.5
    T = h_profile({"profile": "table", "s": [0.0, 1.0, 2.0], "H": [0.0, 0.5, 2.0]})
    assert T(0.5) == pytest.approx(0.25)
    assert T(1.5) == pytest.approx(1.25)
    with pytest.raises(ValueError):
        h_profile("cubic")
    with pytest.raises(ValueError):
        h_profile({"profile": "table", "s": [0, 1], "H": [1, 0]})


def test_zero_section_bound():
    g, cloud = circle_graph(n=40)
    F = norm_based(CIRC, lambda s: s, sin_field(), A=None)
    A = F.zero_section_bound(cloud.points)
    assert A == pytest.approx(1.0, abs=0.05)


# ---------------------------------------------------------------------------
# intrinsic modulus probe
# ---------------------------------------------------------------------------


def test_modulus_norm_hamiltonian():
    g, _ = circle_graph(n=80)
    F = Hamiltonian(CIRC, fn=lambda x, z: float(np.abs(z[0])), tag="general")
    tab = intrinsic_modulus_probe(F, g, delta_grid=[0.05, 0.2, 0.5], n_samples=80)
    assert all(v <= d + 1e-8 for d, v in tab.items())
    vals = [tab[k] for k in sorted(tab)]
    assert all(a <= b + 1e-12 for a, b in zip(vals, vals[1:]))  # nondecreasing


def test_modulus_source_term_only():
    g, cloud = circle_graph(n=80)
    F = Hamiltonian(CIRC, fn=lambda x, z: -float(np.sin(x[0])), tag="general")
    tab = intrinsic_modulus_probe(F, g, delta_grid=[0.1, 0.4], n_samples=120)
    # empirical modulus of sin: at most delta (1-Lipschitz), observed close
    for d, v in tab.items():
        assert v <= d + 1e-9


def test_modulus_quadratic_needs_cap():
    g, _ = circle_graph(n=80)
    F = Hamiltonian(CIRC, fn=lambda x, z: float(z[0] ** 2), tag="general")
    lo = intrinsic_modulus_probe(F, g, delta_grid=[0.3], covector_cap=1.0, n_samples=150)
    hi = intrinsic_modulus_probe(F, g, delta_grid=[0.3], covector_cap=5.0, n_samples=150)
    # the modulus grows with the covector cap: (2C + delta) delta
    assert hi[0.3] > lo[0.3]
    assert hi[0.3] <= (2 * 5.0 + 0.3) * 0.3 + 1e-6


def test_modulus_skips_entries_beyond_radius():
    g, _ = circle_graph(n=40)
    F = Hamiltonian(CIRC, fn=lambda x, z: 0.0, tag="general")
    tab = intrinsic_modulus_probe(F, g, delta_grid=[0.5, 2.0], n_samples=20)
    assert 2.0 not in tab  # r_M = 1.5


# ---------------------------------------------------------------------------
# verify_viscosity
# ---------------------------------------------------------------------------


def test_verify_constant_solution():
    g, _ = circle_graph()
    c = 1.7
    F = norm_based(CIRC, lambda s: s, const_field(CIRC, c), A=c)
    u = np.full(g.n, c)
    rep = verify_viscosity(u, F, g, zeroth_order=True)
    assert rep.max_sub == 0.0
    assert rep.max_super == 0.0


def test_verify_manufactured_smooth(rng):
    # u* = sin(theta), f = u* + |u*'|: residuals are O(h)
    g, cloud = circle_graph(n=300)
    th = cloud.points[:, 0]
    f = ScalarField(
        CIRC, fn=lambda x: np.sin(np.asarray(x, float)[..., 0])
        + np.abs(np.cos(np.asarray(x, float)[..., 0]))
    )
    F = norm_based(CIRC, lambda s: s, f, A=2.0)
    rep = verify_viscosity(np.sin(th), F, g, zeroth_order=True)
    assert rep.max_sub <= 4 * g.h
    assert rep.max_super <= 4 * g.h


def test_verify_needs_enough_neighbors():
    E2 = get_manifold("euclidean2", box=[(0.0, 1.0), (0.0, 1.0)])
    pts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    cloud = rg.PointCloud(E2, pts, seed=0)
    g = rg.build_graph(cloud, k=1)
    F = Hamiltonian(E2, fn=lambda x, z: 0.0)
    with pytest.raises(ValueError, match="neighbors"):
        verify_viscosity(np.zeros(3), F, g)


# ---------------------------------------------------------------------------
# eikonal
# ---------------------------------------------------------------------------


def square_eikonal(n=900, k=8):
    E2 = get_manifold("euclidean2", box=[(0.0, 1.0), (0.0, 1.0)])
    cloud = rg.sample(E2, n, seed=0, method="grid")
    g = rg.build_graph(cloud, k=k)
    reg = rg.region_from_spec(E2, "box:0.0,1.0,0.0,1.0")
    bnd = rg.partition(g, reg)
    return E2, g, cloud, reg, bnd


def test_eikonal_square():
    E2, g, cloud, reg, bnd = square_eikonal()
    u = eikonal_solve(g, bnd)
    assert np.all(u[bnd.boundary] == 0.0)
    ana = reg.analytic_distance(cloud.points)
    mask = np.zeros(g.n, bool)
    mask[bnd.interior] = True
    assert np.abs(u[mask] - ana[mask]).max() <= 4 * g.h
    # bit-identical to the distance field
    assert np.array_equal(u, rg.graph_distance(g, bnd.boundary))
    # exactly 1-Lipschitz on every edge
    rep = regularity_check(u, 1.0, g, rel_slack=0.0)
    assert rep["passed"]


def test_eikonal_all_boundary():
    E2, g, cloud, reg, bnd = square_eikonal(n=100, k=5)
    u = eikonal_solve(g, np.arange(g.n))
    assert np.all(u == 0.0)
    with pytest.raises(ValueError):
        eikonal_solve(g, np.array([], dtype=int))


def test_eikonal_viscosity_and_ridge_witness():
    E2, g, cloud, reg, bnd = square_eikonal(n=1600)
    u = eikonal_solve(g, bnd)
    F = Hamiltonian(E2, fn=lambda x, z: float(np.linalg.norm(z)) - 1.0)
    rep = verify_viscosity(u, F, g, bands=bnd, zeroth_order=False)
    assert rep.max_super <= 3 * g.h
    assert rep.max_sub <= 3 * g.h
    # no classical solution: D+ candidates spread out on the diagonal ridge
    pts = cloud.points
    ridge = [
        i for i in bnd.interior
        if abs(pts[i, 0] - pts[i, 1]) < 1e-9 and 0.25 < pts[i, 0] < 0.75
    ]
    assert ridge
    diams = [dplus_candidate_diameter(u, g, i) for i in ridge]
    assert max(diams) > 0.5


# ---------------------------------------------------------------------------
# stationary solver
# ---------------------------------------------------------------------------


def test_stationary_constant_source():
    g, _ = circle_graph(n=60)
    F = norm_based(CIRC, lambda s: s, const_field(CIRC, 2.0), A=2.0)
    u, rep = stationary_solve(F, g, tol=1e-9)
    assert rep.converged and rep.sweeps <= 2
    assert np.abs(u - 2.0).max() == 0.0


def test_stationary_refinement_oracle():
    f = sin_field()

    def solve(n):
        g, cloud = circle_graph(n=n)
        F = norm_based(CIRC, lambda s: s, f, A=1.0)
        u, rep = stationary_solve(F, g, tol=1e-9)
        assert rep.converged
        return cloud.points[:, 0], u, g.h

    th, u, h = solve(200)
    thf, uf, _ = solve(2000)
    ui = np.interp(th, thf, uf, period=2 * np.pi)
    assert np.abs(u - ui).max() <= 5 * h


def test_stationary_requires_norm_based():
    g, _ = circle_graph(n=40)
    F = Hamiltonian(CIRC, fn=lambda x, z: float(np.abs(z[0])))
    with pytest.raises(ValueError, match="norm_based"):
        stationary_solve(F, g)


def test_stationary_bounded_and_monotone(rng):
    g, cloud = circle_graph(n=120)
    f = sin_field()
    F = norm_based(CIRC, lambda s: s, f, A=1.0)
    u, _ = stationary_solve(F, g, tol=1e-9)
    assert np.abs(u).max() <= 1.0 + F.A + 1e-9
    assert scheme_monotone_probe(F, g, u, n_trials=60, seed=0)


def test_stationary_sweep_order_replay():
    g, _ = circle_graph(n=200)
    F = norm_based(CIRC, lambda s: s, sin_field(), A=1.0)
    runs = {}
    for order in ("causal", "forward", "reverse", "shuffled"):
        u, rep = stationary_solve(F, g, tol=1e-9, order=order)
        assert rep.converged
        runs[order] = u
    base = runs["causal"]
    for order, u in runs.items():
        assert np.abs(u - base).max() <= 2e-9


def test_stationary_nonconvergence_reported():
    g, _ = circle_graph(n=60)
    F = norm_based(CIRC, lambda s: s, sin_field(), A=1.0)
    u, rep = stationary_solve(F, g, tol=1e-9, max_sweeps=1)
    assert not rep.converged
    assert rep.final_change > 0


def test_comparison_principle_shift():
    g, cloud = circle_graph(n=160)
    f = sin_field()
    fg = ScalarField(CIRC, fn=lambda x: np.sin(np.asarray(x, float)[..., 0]) + 1.0)
    F = norm_based(CIRC, lambda s: s, f, A=1.0)
    Fg = norm_based(CIRC, lambda s: s, fg, A=2.0)
    u, _ = stationary_solve(F, g, tol=1e-9)
    v, _ = stationary_solve(Fg, g, tol=1e-9)
    rep = comparison_check(
        u, v, f.eval_many(cloud.points), fg.eval_many(cloud.points), g, tol=1e-9
    )
    assert rep["passed"]
    assert rep["min_v_minus_u"] == pytest.approx(1.0, abs=1e-9)


# ---------------------------------------------------------------------------
# subsolution machinery
# ---------------------------------------------------------------------------


def test_sup_subsolution():
    g, _ = circle_graph(n=100)
    f = ScalarField(CIRC, fn=lambda x: np.sin(np.asarray(x, float)[..., 0]) + 2.0)
    F = norm_based(CIRC, lambda s: s, f, A=3.0)
    u1 = np.full(g.n, 0.5)  # c + |0| = c <= f needs c <= min f = 1
    u2 = np.full(g.n, 0.9)
    rep = sup_subsolution_check(u1, u2, F, g, tol=1e-9)
    assert rep["passed"]
    # identical fields pass trivially
    rep2 = sup_subsolution_check(u1, u1.copy(), F, g, tol=1e-9)
    assert rep2["passed"]
    # non-subsolution inputs are rejected
    with pytest.raises(ValueError, match="verified subsolutions"):
        sup_subsolution_check(np.full(g.n, 5.0), u2, F, g, tol=1e-9)


def test_perron_lift_and_fixed_point():
    g, _ = circle_graph(n=120)
    f = ScalarField(CIRC, fn=lambda x: np.sin(np.asarray(x, float)[..., 0]) + 1.5)
    F = norm_based(CIRC, lambda s: s, f, A=2.5)
    u, _ = stationary_solve(F, g, tol=1e-9)
    urep = verify_viscosity(u, F, g, zeroth_order=True)
    tol_p = max(1e-6, 1.5 * max(urep.max_sub, urep.max_super))
    # the deep constant lifts
    deep = np.full(g.n, -F.A - 1.0)
    res = perron_improve(deep, F, g, tol=tol_p)
    assert res.lifted and res.gain > 0
    assert res.values[res.vertex] > deep[res.vertex]
    rep = verify_viscosity(res.values, F, g, tol=tol_p, zeroth_order=True, side="sub")
    assert rep.max_sub <= tol_p
    # the solver output has no slack to lift
    res2 = perron_improve(u, F, g, tol=tol_p)
    assert not res2.lifted


def test_perron_iteration_approaches_solution():
    g, _ = circle_graph(n=32)
    f = ScalarField(CIRC, fn=lambda x: np.sin(np.asarray(x, float)[..., 0]) + 1.5)
    F = norm_based(CIRC, lambda s: s, f, A=2.5)
    u_star, _ = stationary_solve(F, g, tol=1e-9)
    u = np.full(g.n, -F.A)
    tol_p = 0.04
    lifts = 0
    for _ in range(3000):
        res = perron_improve(u, F, g, tol=tol_p)
        if not res.lifted:
            break
        u = res.values
        lifts += 1
    assert lifts > 0
    assert np.abs(u - u_star).max() <= 5 * g.h + 4 * tol_p


# ---------------------------------------------------------------------------
# doubling
# ---------------------------------------------------------------------------


def test_doubling_smooth_equal_fields():
    g, cloud = circle_graph(n=90)
    u = np.sin(cloud.points[:, 0])
    res = doubling_pair(u, u, eps=0.15, graph=g)
    cc = res.conclusions
    assert cc["i"] and cc["iii"]
    assert res.x0 == res.y0  # penalty pins the pair to the diagonal
    assert cc["covector_gap"] <= 0.15 + 3 * g.h


def test_doubling_comparison_fixture():
    g, cloud = circle_graph(n=120)
    f = sin_field()
    F = norm_based(CIRC, lambda s: s, f, A=1.0)
    u, _ = stationary_solve(F, g, tol=1e-9)
    v = u + 1.0
    res = doubling_pair(u, v, eps=0.1, graph=g)
    cc = res.conclusions
    assert cc["i"] and cc["ii"] and cc["iii"]
    assert not cc["degenerate"]


def test_doubling_degenerate_epsilon():
    g, cloud = circle_graph(n=40)
    u = np.cos(cloud.points[:, 0])
    res = doubling_pair(u, u, eps=50.0, graph=g)
    assert res.conclusions["degenerate"]
    assert res.conclusions["i"]


# ---------------------------------------------------------------------------
# pullback
# ---------------------------------------------------------------------------


def test_pullback_identity():
    g, cloud = circle_graph(n=30)
    F = Hamiltonian(CIRC, fn=lambda x, z: float(np.abs(z[0])) - float(np.sin(x[0])))
    G = pullback(F, identity_diffeo(CIRC))
    rng = np.random.default_rng(0)
    for _ in range(20):
        x = cloud.points[int(rng.integers(g.n))]
        z = rng.normal(size=1)
        assert G(x, z) == pytest.approx(F(x, z), abs=1e-14)


def test_pullback_two_surface_roundtrip():
    funnel = get_manifold("funnel")
    cusp = get_manifold("cusp")
    psi = funnel_to_cusp(funnel, cusp)
    rng = np.random.default_rng(1)
    X = funnel.sample(30, rng)
    # psi matches the height profiles: z_N(rho) = z_M(psi rho)
    for x in X:
        y = psi.map(x)
        assert cusp.contains(y[None, :])[0]
        zN = 1.0 / (x[0] ** 2 - 1.0)
        zM = 1.0 / y[0] ** 2
        assert zN == pytest.approx(zM, rel=1e-12)
        back = psi.inverse(y)
        assert np.abs(back - x).max() <= 1e-12
    # Jacobian against finite differences
    x = X[0]
    J = psi.dmap(x)
    s = 1e-7
    fd = (psi.map(x + [s, 0]) - psi.map(x - [s, 0])) / (2 * s)
    assert np.abs(J[:, 0] - fd).max() <= 1e-5
    # G = pullback(pushforward(G)) pointwise
    fN = ScalarField(funnel, fn=lambda c: 0.3 * np.sin(np.asarray(c, float)[..., 1]))
    G0 = norm_based(funnel, lambda s: s, fN, A=1.0)
    F = pushforward(G0, psi)
    G = pullback(F, psi)
    for x in X[:10]:
        eta = rng.normal(size=2)
        assert G(x, eta) == pytest.approx(G0(x, eta), abs=1e-12)


def test_pullback_demo_identity_mode():
    from riemhj.demo import pullback_demo

    res = pullback_demo(n=140, seed=3, k=6, identity=True)
    assert res.identity_mode
    assert res.pullback_matches <= 1e-12
    # identical manifolds: the two sides verify identically
    assert res.m_side_sub == pytest.approx(res.n_side_sub, abs=1e-12)
    assert res.passed


def test_regularity_slope_audit():
    g, _ = circle_graph(n=120)
    F = norm_based(CIRC, lambda s: s, sin_field(), A=1.0)
    u, _ = stationary_solve(F, g, tol=1e-9)
    # slope audit with K from the scheme's own max slope
    K = max(
        abs(u[a] - u[b]) / l for (a, b), l in zip(g.edges, g.lengths)
    )
    assert regularity_check(u, K, g)["passed"]
    assert not regularity_check(u, 0.5 * K, g)["passed"]
    assert regularity_check(np.full(g.n, 3.0), 0.0, g)["passed"]
