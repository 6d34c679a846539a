"""Theorem-shaped audits: geodesic convexity, subdifferential calculus
rules, and the two mean value inequalities."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .fields import ScalarField
from .geometry import Geodesic, Point, geodesic_eval, normal_chart
from .graphs import GeodesicGraph, graph_distance
from .subdiff import (
    DEFAULT_MARGIN,
    default_directions,
    fd_gradient_chart,
    probe_table,
    test_subgradient,
    verdict_from_table,
)


# ---------------------------------------------------------------------------
# Geodesic convexity
# ---------------------------------------------------------------------------


@dataclass
class ConvexityReport:
    passed: bool
    witness: dict = None

    def to_json(self):
        return {"passed": self.passed, "witness": self.witness}


def convexity_check(
    f,
    manifold,
    n_geodesics: int = 64,
    n_points: int = 8,
    lam_grid=None,
    seed: int = 0,
    tol: float = 1e-9,
    max_halflength: float = None,
) -> ConvexityReport:
    """Sample unit-speed geodesics and test the along-geodesic convexity
    inequality f(s(l t1 + (1-l) t2)) <= l f(s(t1)) + (1-l) f(s(t2)) + tol.

    Returns the first counterexample (geodesic data and lambda) or a pass.
    """
    rng = np.random.default_rng(seed)
    man = manifold
    if lam_grid is None:
        lam_grid = np.linspace(0.1, 0.9, 5)
    pts = man.sample(n_geodesics, rng)
    dirs = rng.normal(size=(n_geodesics, man.rep_dim))
    if hasattr(man, "project_tangent"):
        dirs = man.project_tangent(pts, dirs)
    elif man.rep_dim != man.dim:
        # embedded: project onto the tangent space via the frame
        frames = man.frame(pts)
        comp = np.stack(
            [man.inner(pts, frames[:, k, :], dirs) for k in range(man.dim)], axis=-1
        )
        dirs = np.einsum("nk,nkj->nj", comp, frames)
    nrm = man.norm(pts, dirs)
    dirs = dirs / np.maximum(nrm, 1e-300)[:, None]
    r = man.r_M(pts)
    r = np.full(n_geodesics, r) if np.isscalar(r) else np.asarray(r)
    half = 0.9 * r if max_halflength is None else np.minimum(0.9 * r, max_halflength)

    f_eval = f.eval_many if isinstance(f, ScalarField) else f
    for g in range(n_geodesics):
        L = half[g]
        ts = np.sort(rng.uniform(-L, L, size=n_points))
        X = np.broadcast_to(pts[g], (n_points, man.rep_dim)).copy()
        P = man.exp(X, ts[:, None] * dirs[g][None, :])
        vals = np.asarray(f_eval(P), dtype=float)
        for a in range(n_points):
            for b in range(a + 1, n_points):
                for lam in lam_grid:
                    tm = lam * ts[a] + (1 - lam) * ts[b]
                    pm = man.exp(pts[g], tm * dirs[g])
                    fm = float(f_eval(pm[None, :])[0])
                    bound = lam * vals[a] + (1 - lam) * vals[b] + tol
                    if fm > bound:
                        return ConvexityReport(
                            passed=False,
                            witness={
                                "base": pts[g].tolist(),
                                "direction": dirs[g].tolist(),
                                "t1": float(ts[a]),
                                "t2": float(ts[b]),
                                "lambda": float(lam),
                                "gap": float(fm - bound),
                            },
                        )
    return ConvexityReport(passed=True)


# ---------------------------------------------------------------------------
# Calculus suite: sum, product, chain rules
# ---------------------------------------------------------------------------


@dataclass
class CalculusReport:
    entries: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(e["consistent"] for e in self.entries)

    def add(self, rule, zeta, verdict):
        self.entries.append(
            {
                "rule": rule,
                "zeta": [float(z) for z in np.atleast_1d(zeta)],
                "consistent": not verdict.violated,
                "verdict": verdict.to_json(),
            }
        )

    def to_json(self):
        return {"passed": self.passed, "entries": self.entries}


def calculus_suite(
    f1: ScalarField,
    f2: ScalarField,
    p: Point,
    zetas1,
    zetas2,
    g=None,
    g_diff=None,
    f_outer: ScalarField = None,
    zetas_outer=None,
    radii=None,
    margin: float = DEFAULT_MARGIN,
) -> CalculusReport:
    """Verify the calculus inclusions on certified members.

    For zeta_i in D^-f_i(p) (caller-certified or probed here), checks that
    zeta1 + zeta2 is consistent for f1 + f2 and, when both fields are
    nonnegative at p, that f1(p) zeta2 + f2(p) zeta1 is consistent for
    f1 * f2.  With a differentiable map g: M -> N (``g``/``g_diff`` chart
    evaluators) and zetas_outer in D^-f_outer(g(p)), checks the chain
    candidates zeta o dg(p) against f_outer o g.  Any violation is a bug
    in the rule, not sampling noise, and is reported as such.
    """
    report = CalculusReport()
    zetas1 = np.atleast_2d(np.asarray(zetas1, dtype=float))
    zetas2 = np.atleast_2d(np.asarray(zetas2, dtype=float))

    fsum = f1 + f2
    for z1 in zetas1:
        for z2 in zetas2:
            v = test_subgradient(fsum, p, z1 + z2, radii=radii, margin=margin)
            report.add("sum", z1 + z2, v)

    v1 = float(f1.eval_many(p.coords[None, :])[0])
    v2 = float(f2.eval_many(p.coords[None, :])[0])
    if v1 >= 0 and v2 >= 0:
        fprod = f1 * f2
        for z1 in zetas1:
            for z2 in zetas2:
                cand = v1 * z2 + v2 * z1
                v = test_subgradient(fprod, p, cand, radii=radii, margin=margin)
                report.add("product", cand, v)
    elif f_outer is None and g is None:
        raise ValueError("product branch needs nonnegative factors")

    if g is not None and f_outer is not None and zetas_outer is not None:
        comp = ScalarField(
            p.manifold,
            fn=lambda x, g=g, fo=f_outer.fn: fo(g(x)),
            name="compose",
        )
        dg = np.asarray(g_diff(p.coords), dtype=float)  # (dim_N, dim_M) chart Jacobian
        for z in np.atleast_2d(np.asarray(zetas_outer, dtype=float)):
            cand = z @ dg
            v = test_subgradient(comp, p, cand, radii=radii, margin=margin)
            report.add("chain", cand, v)
    return report


# ---------------------------------------------------------------------------
# Deville's mean value inequality audit
# ---------------------------------------------------------------------------


@dataclass
class MeanValueReport:
    status: str  # "pass" | "hypothesis-violation" | "conclusion-violation"
    detail: dict = None

    def to_json(self):
        return {"status": self.status, "detail": self.detail}


def deville_lipschitz_check(
    f,
    K: float,
    graph: GeodesicGraph,
    n_probes: int = 64,
    n_pairs: int = 256,
    seed: int = 0,
    margin: float = DEFAULT_MARGIN,
    slack: float = 1e-9,
) -> MeanValueReport:
    """Two-sided audit of the K-bound mean value inequality.

    (a) Hypothesis: search probe points for a certified subgradient of norm
    above K (the FD gradient, screened for consistency).  (b) Conclusion:
    |f(p) - f(q)| <= K d(p, q) on sampled pairs, with graph distance as d.
    Conclusion violations outrank hypothesis findings, since the theorem
    forces the hypothesis to fail wherever the conclusion does.
    """
    rng = np.random.default_rng(seed)
    man = graph.manifold
    pts = graph.cloud.points
    f_eval = f.eval_many if isinstance(f, ScalarField) else f
    vals = np.asarray(f_eval(pts), dtype=float)

    conclusion = None
    idx = rng.integers(0, graph.n, size=(n_pairs, 2))
    for a, b in idx:
        if a == b:
            continue
        d = graph_distance(graph, [int(a)])[int(b)]
        if not np.isfinite(d) or d <= 0:
            continue
        gap = abs(vals[a] - vals[b]) - K * d
        if gap > slack * max(1.0, abs(vals[a]), abs(vals[b])):
            conclusion = {"pair": [int(a), int(b)], "excess": float(gap), "d": float(d)}
            break

    hypothesis = None
    probe_ids = rng.choice(graph.n, size=min(n_probes, graph.n), replace=False)
    for i in probe_ids:
        p = Point(man, pts[i])
        chart = normal_chart(p)
        g = fd_gradient_chart(f_eval, chart)
        if np.linalg.norm(g) <= K * (1.0 + 1e-6):
            continue
        table = probe_table(f_eval, p, radii=0.1 * man.r_M(p.coords) * 0.5 ** np.arange(6))
        if not verdict_from_table(table, g, margin).violated:
            hypothesis = {
                "vertex": int(i),
                "grad_norm": float(np.linalg.norm(g)),
                "zeta": g.tolist(),
            }
            break

    if conclusion is not None:
        return MeanValueReport("conclusion-violation", conclusion)
    if hypothesis is not None:
        return MeanValueReport("hypothesis-violation", hypothesis)
    return MeanValueReport("pass", {"K": float(K)})


# ---------------------------------------------------------------------------
# Godefroy's mean value inequality audit
# ---------------------------------------------------------------------------


@dataclass
class GodefroyReport:
    mu: float
    integral: float
    passed: bool
    hypothesis_gaps: list

    def to_json(self):
        return {
            "mu": self.mu,
            "integral": self.integral,
            "passed": self.passed,
            "hypothesis_gaps": self.hypothesis_gaps,
        }


def godefroy_check(
    f,
    gamma: Geodesic,
    n_samples: int = 33,
    n_fine: int = 512,
    tol: float = 1e-6,
    margin: float = 1e-4,
) -> GodefroyReport:
    """mu(f(gamma(I))) <= integral of the minimal consistent-gradient norm.

    mu is the 1-D Lebesgue measure of the union of fine-sample value
    intervals; the integrand at each sample is the smallest norm among
    FD-gradient candidates passing a sub- or supergradient screen.  Samples
    with no consistent candidate are reported as hypothesis gaps rather
    than failures.
    """
    man = gamma.base.manifold
    f_eval = f.eval_many if isinstance(f, ScalarField) else f

    # measure of the image along a fine polyline
    tf = np.linspace(0.0, gamma.length, n_fine)
    pts = man.exp(
        np.broadcast_to(gamma.base.coords, (n_fine, man.rep_dim)).copy(),
        tf[:, None] * gamma.direction.components[None, :],
    )
    vals = np.asarray(f_eval(pts), dtype=float)
    intervals = sorted(
        (min(a, b), max(a, b)) for a, b in zip(vals[:-1], vals[1:])
    )
    mu, cur_lo, cur_hi = 0.0, None, None
    for lo, hi in intervals:
        if cur_hi is None or lo > cur_hi:
            if cur_hi is not None:
                mu += cur_hi - cur_lo
            cur_lo, cur_hi = lo, hi
        else:
            cur_hi = max(cur_hi, hi)
    if cur_hi is not None:
        mu += cur_hi - cur_lo

    # trapezoid rule on the minimal consistent-gradient norms
    ts = np.linspace(0.0, gamma.length, n_samples)
    phis, gaps = [], []
    for t in ts:
        q, _ = geodesic_eval(gamma, float(t))
        chart = normal_chart(q)
        g = fd_gradient_chart(f_eval, chart)
        candidates = [g, np.zeros_like(g)]
        radii = 0.05 * man.r_M(q.coords) * 0.5 ** np.arange(5)
        table = probe_table(f_eval, q, radii=radii)
        tneg = table.negate()
        best = None
        for c in candidates:
            sub_ok = not verdict_from_table(table, c, margin).violated
            sup_ok = not verdict_from_table(tneg, -c, margin).violated
            if sub_ok or sup_ok:
                nrm = float(np.linalg.norm(c))
                best = nrm if best is None else min(best, nrm)
        if best is None:
            gaps.append(float(t))
            best = float(np.linalg.norm(g))  # best-effort value, flagged above
        phis.append(best)
    integral = float(np.trapezoid(phis, ts))
    return GodefroyReport(
        mu=float(mu),
        integral=integral,
        passed=bool(mu <= integral + tol),
        hypothesis_gaps=gaps,
    )
