"""The two-surface pullback demonstration.

A norm-based Hamiltonian lives on the funnel surface N (positive radii
constants), its pushforward F sits on the cusp surface M (vanishing
injectivity radius), and the equation on M is solved by solving on N and
transferring u = v o psi^{-1}.  Both sides are then verified.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fields import ScalarField
from .graphs import GeodesicGraph, PointCloud, build_graph, sample
from .hamiltonian import (
    Diffeo,
    funnel_to_cusp,
    identity_diffeo,
    norm_based,
    pullback,
    pushforward,
)
from .manifolds import get_manifold
from .solve import stationary_solve
from .viscosity import verify_viscosity


def map_graph(graph: GeodesicGraph, psi: Diffeo) -> GeodesicGraph:
    """Image of a geodesic graph under a diffeomorphism: vertices map
    through psi, the edge set is kept, and edge lengths are recomputed as
    geodesic distances on the codomain."""
    man = psi.codomain
    pts = psi.map(graph.cloud.points)
    inside = man.contains(pts)
    if not np.all(inside):
        raise ValueError("mapped cloud leaves the codomain's coordinate domain")
    cloud = PointCloud(man, pts, seed=graph.cloud.seed, method="mapped")
    src = graph.edges[:, 0]
    dst = graph.edges[:, 1]
    if man.has_closed_form:
        lengths = np.asarray(man.dist(pts[src], pts[dst]), dtype=float)
    else:
        from .manifolds import ode

        V, ok = ode.shoot_log(man, pts[src], pts[dst])
        if not ok.all():
            raise ValueError("edge length shooting failed on the mapped graph")
        lengths = man.norm(pts[src], V)
    r = man.r_M(pts)
    r = np.full(len(pts), r) if np.isscalar(r) else np.asarray(r)
    limit = np.minimum(r[src], r[dst])
    if np.any(lengths >= limit):
        raise ValueError("mapped edges exceed the working radius")
    return GeodesicGraph(cloud=cloud, edges=graph.edges.copy(), lengths=lengths,
                         k=graph.k, h=float(lengths.max()))


@dataclass
class PullbackDemoResult:
    n_side_sub: float
    n_side_super: float
    m_side_sub: float
    m_side_super: float
    h_n: float
    h_m: float
    tol: float
    jacobian_conditions: list
    pullback_matches: float  # max |pullback(F)(x, eta) - G0(x, eta)| on samples
    identity_mode: bool

    @property
    def passed(self) -> bool:
        bound_n = self.tol + 3.0 * self.h_n
        bound_m = self.tol + 3.0 * self.h_m
        return (
            self.n_side_sub <= bound_n
            and self.n_side_super <= bound_n
            and self.m_side_sub <= bound_m
            and self.m_side_super <= bound_m
        )

    def to_json(self):
        return {
            "passed": self.passed,
            "n_side": {"sub": self.n_side_sub, "super": self.n_side_super, "h": self.h_n},
            "m_side": {"sub": self.m_side_sub, "super": self.m_side_super, "h": self.h_m},
            "tol": self.tol,
            "jacobian_condition_numbers": self.jacobian_conditions,
            "pullback_vs_source_max_gap": self.pullback_matches,
            "identity_mode": self.identity_mode,
        }


def pullback_demo(n: int = 350, seed: int = 5, k: int = 8, tol: float = 1e-9,
                  identity: bool = False) -> PullbackDemoResult:
    funnel = get_manifold("funnel")
    cloud = sample(funnel, n, seed)
    graph_n = build_graph(cloud, k)

    def f_fn(x):
        x = np.asarray(x, dtype=float)
        rho, th = x[..., 0], x[..., 1]
        return 0.5 * np.sin(th) + 0.1 * (rho - 1.9) ** 2

    fN = ScalarField(funnel, fn=f_fn, name="funnel_source")
    fvals = fN.eval_many(cloud.points)
    G0 = norm_based(funnel, lambda s: s, fN, A=float(np.abs(fvals).max() + 0.5))

    v, solve_rep = stationary_solve(G0, graph_n, tol=tol)
    rep_n = verify_viscosity(v, G0, graph_n, tol=tol, zeroth_order=True)

    psi = identity_diffeo(funnel) if identity else funnel_to_cusp(funnel, get_manifold("cusp"))
    F = pushforward(G0, psi)
    G_back = pullback(F, psi)

    # round trip of the Hamiltonian through T*psi
    rng = np.random.default_rng(seed + 1)
    gap = 0.0
    for _ in range(32):
        i = int(rng.integers(graph_n.n))
        x = cloud.points[i]
        eta = rng.normal(size=funnel.rep_dim)
        gap = max(gap, abs(G_back(x, eta) - G0(x, eta)))

    graph_m = map_graph(graph_n, psi)
    u = v.copy()  # u = v o psi^{-1} on the mapped vertices
    rep_m = verify_viscosity(u, F, graph_m, tol=tol, zeroth_order=True)

    conds = [psi.jacobian_condition(cloud.points[i])
             for i in range(0, graph_n.n, max(1, graph_n.n // 16))]
    return PullbackDemoResult(
        n_side_sub=rep_n.max_sub,
        n_side_super=rep_n.max_super,
        m_side_sub=rep_m.max_sub,
        m_side_super=rep_m.max_super,
        h_n=graph_n.h,
        h_m=graph_m.h,
        tol=tol,
        jacobian_conditions=[float(c) for c in conds],
        pullback_matches=float(gap),
        identity_mode=identity,
    )
