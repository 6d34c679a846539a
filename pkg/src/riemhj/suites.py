"""Named property suites behind ``riemhj check``.

Each check returns (passed, residual, detail); a suite is a list of named
checks run on catalog fixtures.  Checks use their spec-level default
tolerances unless the caller overrides them all with a single ``tol``
(so ``--tol 0`` demonstrates that the tolerances are genuinely needed).
"""

from __future__ import annotations

import numpy as np

from . import graphs as rg
from .bump import bump, profile_lipschitz
from .checks import convexity_check, deville_lipschitz_check, godefroy_check
from .demo import pullback_demo
from .fields import ScalarField, abs_field, const_field, dist2_field, sphere_height
from .geometry import (
    CotangentVector,
    Point,
    TangentVector,
    covector_gap,
    covector_transport,
    distance_partials,
    geodesic,
    log_map,
    normal_chart,
    parallel_transport,
)
from .hamiltonian import norm_based
from .manifolds import get_manifold
from .search import dgz_perturb, ekeland_search, ekeland_verify, rolle_search
from .solve import (
    eikonal_solve,
    perron_improve,
    regularity_check,
    scheme_monotone_probe,
    stationary_solve,
)
from .subdiff import (
    estimate_subdifferential,
    probe_table,
    test_subgradient,
    test_supergradient,
    verdict_from_table,
)
from .viscosity import comparison_check, sup_subsolution_check, verify_viscosity

SUITES = ("transport", "calculus", "variational", "convexity", "hj", "all")


def _tol(default, override):
    return default if override is None else override


# ---------------------------------------------------------------------------
# oracle helpers local to the suite (independent integration routes)
# ---------------------------------------------------------------------------


def sphere_transport_ode(p, v_dir, length, V0, n_steps=4000):
    """Ambient parallel-transport oracle on the unit sphere:
    V' = -<V, gamma'> gamma along the great circle from p."""
    p = np.asarray(p, float)
    d = np.asarray(v_dir, float)
    d = d / np.linalg.norm(d)
    V = np.asarray(V0, float).copy()
    h = length / n_steps
    t = 0.0

    def gam(t):
        return np.cos(t) * p + np.sin(t) * d

    def gamdot(t):
        return -np.sin(t) * p + np.cos(t) * d

    def rhs(t, V):
        return -np.dot(V, gamdot(t)) * gam(t)

    for _ in range(n_steps):
        k1 = rhs(t, V)
        k2 = rhs(t + h / 2, V + h / 2 * k1)
        k3 = rhs(t + h / 2, V + h / 2 * k2)
        k4 = rhs(t + h, V + h * k3)
        V = V + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
        t += h
    return V


def octant_holonomy_angle(transport_fn):
    """Transport around the geodesic octant triangle (three right angles)
    and report the rotation angle of the returned vector."""
    A = np.array([0.0, 0.0, 1.0])
    B = np.array([1.0, 0.0, 0.0])
    C = np.array([0.0, 1.0, 0.0])
    V = np.array([1.0, 0.0, 0.0])  # tangent at the north pole
    legs = [(A, B), (B, C), (C, A)]
    for a, b in legs:
        V = transport_fn(a, b, V)
    cosang = np.clip(np.dot(V, np.array([1.0, 0.0, 0.0])), -1, 1)
    return float(np.arccos(cosang))


# ---------------------------------------------------------------------------
# transport suite
# ---------------------------------------------------------------------------


def suite_transport(seed=0, tol=None, n_cases=200):
    checks = []
    rng = np.random.default_rng(seed)

    for name in ("euclidean2", "sphere", "hyperbolic", "torus", "cusp", "funnel"):
        man = get_manifold(name)
        m = n_cases if man.has_closed_form else max(40, n_cases // 4)
        X = man.sample(m, rng)
        D = rng.normal(size=(m, man.rep_dim))
        D = _project(man, X, D)
        D /= np.maximum(man.norm(X, D), 1e-300)[:, None]
        r = man.r_M(X)
        r = np.full(m, r) if np.isscalar(r) else np.asarray(r)
        V = D * (0.9 * r * rng.random(m))[:, None]
        Y = man.exp(X, V)
        L = _log_many(man, X, Y)
        rt = float(np.max(man.norm(X, L - V)))
        checks.append((f"exp_log_roundtrip[{name}]", rt <= _tol(1e-6, tol), rt))

        W = _project(man, X, rng.normal(size=(m, man.rep_dim)))
        W = W / np.maximum(man.norm(X, W), 1e-300)[:, None]  # unit test vectors
        P = man.transport(X, Y, W)
        iso = float(np.max(np.abs(man.norm(Y, P) - man.norm(X, W))))
        checks.append((f"transport_isometry[{name}]", iso <= _tol(1e-8, tol), iso))
        back = man.transport(Y, X, P)
        inv = float(np.max(man.norm(X, back - W)))
        checks.append((f"transport_inverse[{name}]", inv <= _tol(1e-8, tol), inv))

    # octant holonomy against the ambient ODE oracle
    sph = get_manifold("sphere")
    lib_angle = octant_holonomy_angle(lambda a, b, V: sph.transport(a, b, V))
    ode_angle = octant_holonomy_angle(
        lambda a, b, V: sphere_transport_ode(a, sph.log(a, b), sph.dist(a, b), V)
    )
    gap = abs(lib_angle - ode_angle)
    checks.append(
        ("octant_holonomy_vs_ode", abs(lib_angle - np.pi / 2) <= _tol(1e-3, tol) and gap <= _tol(1e-3, tol),
         abs(lib_angle - np.pi / 2)),
    )

    # antisymmetry of distance partials
    for name in ("euclidean2", "sphere", "hyperbolic", "torus"):
        man = get_manifold(name)
        m = 50
        X = man.sample(m, rng)
        D = _project(man, X, rng.normal(size=(m, man.rep_dim)))
        D /= np.maximum(man.norm(X, D), 1e-300)[:, None]
        r = man.r_M(X)
        r = np.full(m, r) if np.isscalar(r) else np.asarray(r)
        Y = man.exp(X, D * (0.8 * r * (0.1 + 0.9 * rng.random(m)))[:, None])
        worst = 0.0
        for i in range(m):
            px, py = Point(man, X[i]), Point(man, Y[i])
            dx, dy = distance_partials(px, py)
            res = covector_gap(
                CotangentVector(px, -dx.components), dy
            )
            worst = max(worst, res)
        checks.append((f"antisymmetry[{name}]", worst <= _tol(1e-5, tol), worst))

    # mean value inequality and its converse on the sphere height field
    z = sphere_height(sph)
    m = 100
    X = sph.sample(m, rng)
    Y = sph.sample(m, rng)
    d = sph.dist(X, Y)
    lhs = np.abs(X[:, 2] - Y[:, 2])
    mv = float(np.max(lhs - d * (1 + 1e-6)))
    checks.append(("mean_value_K1", mv <= _tol(0.0, tol), max(mv, 0.0)))
    worst = 0.0
    for i in range(20):
        p = Point(sph, X[i])
        from .subdiff import fd_gradient_chart

        g = fd_gradient_chart(z.eval_many, normal_chart(p))
        worst = max(worst, float(np.linalg.norm(g)) - 1.0)
    checks.append(("mean_value_converse_K1", worst <= _tol(1e-3, tol), max(worst, 0.0)))
    return checks


def _project(man, X, D):
    if hasattr(man, "project_tangent"):
        return man.project_tangent(X, D)
    if man.rep_dim != man.dim:
        frames = man.frame(X)
        comp = np.stack(
            [man.inner(X, frames[:, k, :], D) for k in range(man.dim)], axis=-1
        )
        return np.einsum("nk,nkj->nj", comp, frames)
    return D


def _log_many(man, X, Y):
    if man.has_closed_form:
        return man.log(X, Y)
    from .manifolds import ode

    V, ok = ode.shoot_log(man, X, Y)
    if not ok.all():
        raise RuntimeError("log shooting failure in suite")
    return V


# ---------------------------------------------------------------------------
# calculus suite
# ---------------------------------------------------------------------------


def suite_calculus(seed=0, tol=None):
    checks = []
    E1 = get_manifold("euclidean1", box=[(-5.0, 5.0)])
    p0 = Point(E1, np.array([0.0]))
    f = abs_field(E1)

    est = estimate_subdifferential(f, p0, mode="convex")
    haus = _hausdorff_1d(est.outer.ravel(), np.array([-1.0, 1.0]))
    checks.append(("abs_subdiff_interval", haus <= _tol(0.02, tol), haus))

    grid = np.linspace(-2, 2, 41)[:, None]
    table = probe_table((-f).eval_many, p0)
    all_violated = all(
        verdict_from_table(table, z, 1e-6).violated for z in grid
    )
    checks.append(("neg_abs_no_subgradient", all_violated, None))

    # paper chain example: g(x) = |x|^{3/2}, f(y) = |y|^{1/2}
    comp = ScalarField(E1, fn=lambda x: np.abs(np.asarray(x, float))[..., 0] ** 0.75)
    radii = 0.05 * 0.5 ** np.arange(8)
    ok0 = not test_subgradient(comp, p0, [0.0], radii=radii).violated
    ok2 = not test_subgradient(comp, p0, [2.0], radii=radii).violated
    checks.append(("chain_rule_strictness", ok0 and ok2, None))

    # sum rule: 0.5 + 0.5 = 1 consistent for 2|x|
    two_abs = ScalarField(E1, fn=lambda x: 2 * np.abs(np.asarray(x, float))[..., 0])
    v = test_subgradient(two_abs, p0, [1.0])
    checks.append(("sum_rule_abs", not v.violated, None))

    # differentiability probe
    from .subdiff import differentiability_probe

    sq = ScalarField(E1, fn=lambda x: (np.asarray(x, float)[..., 0]) ** 2)
    g = differentiability_probe(sq, Point(E1, np.array([0.7])), tol=0.01)
    ok = g is not None and abs(g[0] - 1.4) <= _tol(0.01, tol)
    checks.append(("diff_probe_smooth", ok, None if g is None else abs(g[0] - 1.4)))
    g2 = differentiability_probe(f, p0, tol=0.01)
    checks.append(("diff_probe_kink_absent", g2 is None, None))

    # density probe on -|x| over a 1-D grid
    from .fields import discrete_field

    cloud = rg.sample(E1, 41, seed=seed, method="grid")
    gph = rg.build_graph(cloud, k=2)
    vals = -np.abs(cloud.points[:, 0])
    from .subdiff import density_probe

    frac = density_probe(vals, gph)
    expect = (gph.n - 1) / gph.n
    checks.append(("density_neg_abs", abs(frac - expect) < 1e-12, abs(frac - expect)))

    # Deville audit: sphere height with K = 1 passes; 2 d(., p0) vs K = 1 fails
    sph = get_manifold("sphere")
    sc = rg.sample(sph, 400, seed=seed)
    sg = rg.build_graph(sc, k=6)
    rep = deville_lipschitz_check(sphere_height(sph), 1.0, sg, seed=seed)
    checks.append(("deville_pass_height", rep.status == "pass", None))
    from .fields import dist_field

    f2 = ScalarField(sph, fn=lambda x: 2.0 * sph.dist(np.asarray(x, float), np.broadcast_to(np.array([0.0, 0.0, 1.0]), np.asarray(x, float).shape)))
    rep2 = deville_lipschitz_check(f2, 1.0, sg, seed=seed)
    checks.append(("deville_conclusion_violation", rep2.status == "conclusion-violation", None))

    # Godefroy along a radial ray on the sphere
    from .fields import dist_field

    pole = np.array([0.0, 0.0, 1.0])
    fd = dist_field(sph, pole)
    base = Point(sph, sph.exp(pole, np.array([0.3, 0.0, 0.0])))
    direction = TangentVector(base, _unit(sph, base.coords, sph.log(base.coords, sph.exp(pole, np.array([1.2, 0.0, 0.0])))))
    gam = geodesic(base, direction, 0.8)
    grep = godefroy_check(fd, gam, n_samples=17)
    checks.append(("godefroy_radial", grep.passed, grep.mu - grep.integral))
    return checks


def _unit(man, x, v):
    return v / man.norm(x, v)


def _hausdorff_1d(a, b):
    a = np.sort(np.asarray(a, float).ravel())
    b = np.sort(np.asarray(b, float).ravel())
    if a.size == 0 or b.size == 0:
        return np.inf
    lo = abs(a[0] - b[0])
    hi = abs(a[-1] - b[-1])
    return float(max(lo, hi))


# ---------------------------------------------------------------------------
# variational suite
# ---------------------------------------------------------------------------


def suite_variational(seed=0, tol=None):
    checks = []
    rng = np.random.default_rng(seed)
    E2 = get_manifold("euclidean2", box=[(0.0, 1.0), (0.0, 1.0)])
    cloud = rg.sample(E2, 300, seed=seed)
    gph = rg.build_graph(cloud, k=6)

    # Ekeland: constant field stays put; random instances verify exhaustively
    const = np.zeros(gph.n)
    z = ekeland_search(const, gph, x0=7, eps=0.5, lam=0.3)
    checks.append(("ekeland_constant_stays", z == 7, None))
    ok = True
    for t in range(5):
        vals = rng.normal(size=gph.n)
        x0 = int(np.argmax(vals))
        eps = float(vals.max() - vals.min()) / 2 + 0.1
        lam = 0.5
        x_start = int(np.nonzero(vals > vals.max() - eps)[0][0])
        zz = ekeland_search(vals, gph, x0=x_start, eps=eps, lam=lam)
        rep = ekeland_verify(vals, gph, x_start, zz, eps, lam)
        ok = ok and rep["i"] and rep["ii"] and rep["iii"]
    checks.append(("ekeland_conclusions", ok, None))

    # DGZ: linear field on the bounded grid
    lin = cloud.points @ np.array([1.0, 0.25])
    res = dgz_perturb(lin, gph, delta=0.2)
    ok = (
        res.report["sup_phi"] < 0.2
        and res.report["fd_grad_sup"] < 0.2
        and res.margin > 0
    )
    checks.append(("dgz_linear_grid", ok, res.margin))

    # Rolle sharpness on the 1-D fixture f(x) = x on (-1, 1)
    E1 = get_manifold("euclidean1", box=[(-1.2, 1.2)])
    c1 = rg.sample(E1, 241, seed=seed, method="grid")
    g1 = rg.build_graph(c1, k=2)
    reg = rg.partition(g1, lambda p: -1.0 < p[0] < 1.0)
    lin1 = ScalarField(E1, fn=lambda x: np.asarray(x, float)[..., 0])
    rr = rolle_search(lin1, reg, r_target=1.0)
    ok = 0.99 <= rr.grad_norm <= 1.0 + 1e-9
    checks.append(("rolle_sharpness", ok, rr.grad_norm))

    # Rolle case 1: interior maximum; the located gradient is bounded by the
    # target slope plus the argmax discretization (curvature 16 times h/2)
    cg = rg.sample(E2, 961, seed=seed, method="grid")
    gg = rg.build_graph(cg, k=8)
    bumpish = ScalarField(
        E2, fn=lambda x: np.exp(-8 * np.sum((np.asarray(x, float) - 0.5) ** 2, axis=-1))
    )
    reg2 = rg.partition(gg, lambda p: 0.05 < p[0] < 0.95 and 0.05 < p[1] < 0.95)
    rr2 = rolle_search(bumpish, reg2, r_target=0.05)
    bound = 0.05 + 16.0 * gg.h
    checks.append(("rolle_interior_max", rr2.grad_norm <= bound, rr2.grad_norm))

    # bump invariants
    sph = get_manifold("sphere")
    b = bump(Point(sph, np.array([0.0, 0.0, 1.0])), 0.7)
    sup = b.fd_gradient_sup(n_samples=2000, seed=seed)
    ok = (
        b(np.array([0.0, 0.0, 1.0])) == 1.0
        and b(sph.exp(np.array([0.0, 0.0, 1.0]), np.array([0.77, 0.0, 0.0]))) == 0.0
        and sup <= 1.05 * b.R / b.delta
    )
    checks.append(("bump_invariants", ok, sup * b.delta / b.R))
    return checks


# ---------------------------------------------------------------------------
# convexity suite
# ---------------------------------------------------------------------------


def suite_convexity(seed=0, tol=None):
    checks = []
    hyp = get_manifold("hyperbolic")
    p0 = np.array([1.0, 0.0, 0.0])
    d2 = dist2_field(hyp, p0)
    rep = convexity_check(d2, hyp, n_geodesics=24, n_points=5, seed=seed)
    checks.append(("convex_dist2_hyperbolic", rep.passed, None))

    E2 = get_manifold("euclidean2")
    lin = ScalarField(E2, fn=lambda x: np.asarray(x, float) @ np.array([1.0, -2.0]))
    rep2 = convexity_check(lin, E2, n_geodesics=16, n_points=5, seed=seed)
    checks.append(("convex_linear_plane", rep2.passed, None))

    sph = get_manifold("sphere")
    d2s = dist2_field(sph, np.array([0.0, 0.0, 1.0]))
    # long geodesics through the far hemisphere expose the failure
    rep3 = convexity_check(d2s, sph, n_geodesics=48, n_points=7, seed=seed)
    checks.append(("sphere_dist2_witness", not rep3.passed, None))

    # everywhere-subdifferentiability of the convex field
    rng = np.random.default_rng(seed)
    X = hyp.sample(30, rng)
    ok = True
    for x in X:
        p = Point(hyp, x)
        from .subdiff import fd_gradient_chart

        g = fd_gradient_chart(d2.eval_many, normal_chart(p))
        v = test_subgradient(d2, p, g, margin=1e-6)
        ok = ok and not v.violated
    checks.append(("convex_subdiff_everywhere", ok, None))
    return checks


# ---------------------------------------------------------------------------
# hj suite
# ---------------------------------------------------------------------------


def suite_hj(seed=0, tol=None):
    checks = []
    sweep_tol = _tol(1e-9, tol) if tol else 1e-9
    E2 = get_manifold("euclidean2", box=[(0.0, 1.0), (0.0, 1.0)])
    cloud = rg.sample(E2, 900, seed=seed, method="grid")
    gph = rg.build_graph(cloud, k=8)
    reg = rg.region_from_spec(E2, "box:0.0,1.0,0.0,1.0")
    bnd = rg.partition(gph, reg)
    u = eikonal_solve(gph, bnd)
    ana = reg.analytic_distance(cloud.points)
    mask = np.zeros(gph.n, bool)
    mask[bnd.interior] = True
    err = float(np.abs(u[mask] - ana[mask]).max())
    checks.append(("eikonal_square_error", err <= 4 * gph.h, err))
    lip = regularity_check(u, 1.0, gph, rel_slack=0.0)
    checks.append(("eikonal_exact_lipschitz", lip["passed"], lip["max_excess"]))

    from .hamiltonian import Hamiltonian

    Feik = Hamiltonian(E2, fn=lambda x, z: float(np.linalg.norm(z)) - 1.0, tag="general")
    rep = verify_viscosity(u, Feik, gph, bands=bnd, zeroth_order=False)
    bound = _tol(1e-9, tol) + 3 * gph.h
    checks.append(("eikonal_viscosity_residuals", rep.max_sub <= bound and rep.max_super <= bound,
                   max(rep.max_sub, rep.max_super)))

    # stationary solve: comparison, replay, boundedness, monotonicity
    circ = get_manifold("circle")
    c2 = rg.sample(circ, 160, seed=seed, method="grid")
    g2 = rg.build_graph(c2, k=2)
    fsin = ScalarField(circ, fn=lambda x: np.sin(np.asarray(x, float)[..., 0]))
    F = norm_based(circ, lambda s: s, fsin, A=1.0)
    Fg = norm_based(
        circ, lambda s: s,
        ScalarField(circ, fn=lambda x: np.sin(np.asarray(x, float)[..., 0]) + 1.0),
        A=2.0,
    )
    uu, _ = stationary_solve(F, g2, tol=sweep_tol)
    vv, _ = stationary_solve(Fg, g2, tol=sweep_tol)
    comp = comparison_check(uu, vv, fsin.eval_many(c2.points),
                            fsin.eval_many(c2.points) + 1.0, g2, tol=sweep_tol)
    checks.append(("comparison_margin", comp["passed"], comp["margin"]))
    ua, _ = stationary_solve(F, g2, tol=sweep_tol, order="forward")
    ub, _ = stationary_solve(F, g2, tol=sweep_tol, order="reverse")
    replay = float(np.abs(ua - ub).max())
    checks.append(("uniqueness_replay", replay <= 2 * sweep_tol, replay))
    checks.append(("solver_bounded", float(np.abs(uu).max()) <= 1.0 + F.A + 1e-9,
                   float(np.abs(uu).max())))
    checks.append(("scheme_monotone", scheme_monotone_probe(F, g2, uu, seed=seed), None))

    # sup of two subsolutions
    lo1 = np.full(g2.n, -1.5)
    lo2 = np.full(g2.n, -1.2)
    sup_rep = sup_subsolution_check(lo1, lo2, F, g2, tol=max(sweep_tol, 1e-9))
    checks.append(("sup_subsolution", sup_rep["passed"], sup_rep["max_sub_residual"]))

    # Perron: a deep constant lifts; the solver output does not.  The
    # precondition tolerance follows the discrete O(h) residual scale.
    urep = verify_viscosity(uu, F, g2, zeroth_order=True)
    tol_p = max(1e-6, 1.5 * max(urep.max_sub, urep.max_super))
    pr = perron_improve(np.full(g2.n, -F.A - 1.0), F, g2, tol=tol_p)
    checks.append(("perron_lifts_deep_constant", pr.lifted, pr.gain))
    pr2 = perron_improve(uu, F, g2, tol=tol_p)
    checks.append(("perron_no_lift_at_solution", not pr2.lifted, None))

    # doubling on a small fixture
    from .viscosity import doubling_pair

    dd = doubling_pair(uu, uu + 1.0, eps=0.1, graph=g2)
    cc = dd.conclusions
    checks.append(("doubling_conclusions", cc["i"] and cc["ii"] and cc["iii"], cc["covector_gap"]))

    # intrinsic modulus probe: the norm Hamiltonian has modulus <= delta
    from .hamiltonian import Hamiltonian, intrinsic_modulus_probe

    Fnorm = Hamiltonian(circ, fn=lambda x, z: float(np.abs(z[0])), tag="general")
    tab = intrinsic_modulus_probe(Fnorm, g2, delta_grid=[0.1, 0.3], n_samples=60, seed=seed)
    ok = all(v <= d + 1e-8 for d, v in tab.items())
    checks.append(("modulus_norm_hamiltonian", ok, max(tab.values()) if tab else 0.0))
    return checks


def run_suite(name, seed=0, tol=None):
    table = {
        "transport": suite_transport,
        "calculus": suite_calculus,
        "variational": suite_variational,
        "convexity": suite_convexity,
        "hj": suite_hj,
    }
    if name == "all":
        out = []
        for key in ("transport", "calculus", "variational", "convexity", "hj"):
            out.extend((f"{key}:{n}", p, r) for n, p, r in table[key](seed=seed, tol=tol))
        return out
    if name not in table:
        raise KeyError(name)
    return table[name](seed=seed, tol=tol)
