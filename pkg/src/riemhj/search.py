"""Constructive variational-principle searches on geodesic graphs.

``ekeland_search`` runs the discrete maximization form: from x0 it moves to
the lowest-index vertex x with f(x) >= f(z) + lam * d(x, z); every move
strictly increases f, so the walk terminates, and the final vertex
satisfies the three conclusions of the variational principle exactly on
the finite graph.

``dgz_perturb`` implements the constructive single-bump step of the smooth
variational principle: one bump perturbation already produces a strong
minimum on a finite graph.

``rolle_search`` locates an almost-critical point from boundary/interior
comparisons, delegating to the Ekeland walk with the slope parameter the
corresponding case dictates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bump import BumpField, bump, profile_lipschitz
from .fields import ScalarField
from .geometry import Point, normal_chart
from .graphs import BoundarySet, GeodesicGraph, graph_distance
from .subdiff import fd_gradient_chart


# ---------------------------------------------------------------------------
# Ekeland's variational principle, discrete maximization form
# ---------------------------------------------------------------------------


def ekeland_search(values, graph: GeodesicGraph, x0: int, eps: float, lam: float) -> int:
    """Walk to a point z with (i) lam d(z,x0) <= f(z) - f(x0),
    (ii) d(z,x0) <= eps/lam, (iii) no x != z with f(x) >= f(z) + lam d(x,z).

    Preconditions: f finite somewhere, f(x0) > sup f - eps, lam > 0.
    """
    f = np.asarray(values, dtype=float)
    if lam <= 0:
        raise ValueError("ekeland_search needs lam > 0")
    if not np.any(np.isfinite(f)):
        raise ValueError("ekeland_search needs f finite somewhere")
    sup = np.max(f[np.isfinite(f)])
    if not np.isfinite(f[x0]) or not (f[x0] > sup - eps):
        raise ValueError(
            f"ekeland_search precondition violated: f(x0) = {f[x0]} must exceed "
            f"sup f - eps = {sup - eps}"
        )
    z = int(x0)
    for _ in range(graph.n + 1):
        d = graph_distance(graph, [z])
        cand = np.nonzero(f >= f[z] + lam * d)[0]
        cand = cand[cand != z]
        if cand.size == 0:
            return z
        z = int(cand.min())  # lowest index; f increases strictly since d > 0
    raise RuntimeError("ekeland_search failed to terminate")  # pragma: no cover


def ekeland_verify(values, graph: GeodesicGraph, x0: int, z: int, eps: float, lam: float,
                   slack: float = 1e-9) -> dict:
    """Exhaustive check of conclusions (i)-(iii); slack covers float
    associativity between summed path lengths and direct differences."""
    f = np.asarray(values, dtype=float)
    d_z = graph_distance(graph, [z])
    scale = max(1.0, np.abs(f[np.isfinite(f)]).max())
    i_ok = lam * d_z[x0] <= f[z] - f[x0] + slack * scale
    ii_ok = d_z[x0] <= eps / lam + slack * scale
    mask = np.ones(graph.n, dtype=bool)
    mask[z] = False
    iii_viol = np.nonzero(mask & (f >= f[z] + lam * d_z + slack * scale))[0]
    return {
        "i": bool(i_ok),
        "ii": bool(ii_ok),
        "iii": iii_viol.size == 0,
        "iii_violations": iii_viol.tolist(),
        "d_z_x0": float(d_z[x0]),
    }


# ---------------------------------------------------------------------------
# DGZ smooth variational principle, constructive single-bump step
# ---------------------------------------------------------------------------


@dataclass
class DgzResult:
    phi: BumpField
    phi_scale: float  # eps' multiplying the bump
    phi_values: np.ndarray  # phi at the graph vertices
    minimizer: int
    margin: float  # strict margin outside B(minimizer, delta_b)
    delta_b: float
    report: dict


def dgz_perturb(values, graph: GeodesicGraph, delta: float) -> DgzResult:
    """One smooth bump perturbation phi with ||phi||_inf < delta and
    ||d phi||_inf < delta such that f - phi attains a strict graph minimum
    near the almost-minimizer of f."""
    f = np.asarray(values, dtype=float)
    if delta <= 0:
        raise ValueError("dgz_perturb needs delta > 0")
    finite = np.isfinite(f)
    if not finite.any():
        raise ValueError("dgz_perturb needs f bounded below with nonempty domain")
    x0 = int(np.nonzero(finite)[0][np.argmin(f[finite])])
    man = graph.manifold
    p0 = Point(man, graph.cloud.points[x0])
    R = profile_lipschitz()
    delta_b = min(0.45 * man.r_M(p0.coords), 0.5 * delta, 1.0)
    eps_prime = delta * delta_b / (4.0 * R)
    assert f[x0] < np.min(f[finite]) + eps_prime  # exact argmin qualifies
    b = bump(p0, delta_b)
    phi_values = eps_prime * b.eval_many(graph.cloud.points)
    perturbed = f - phi_values
    pmin = int(np.nanargmin(np.where(finite, perturbed, np.inf)))
    d_from_min = graph_distance(graph, [pmin])
    outside = (d_from_min > delta_b) & finite
    margin = float(
        np.min(perturbed[outside]) - perturbed[pmin]
    ) if outside.any() else np.inf
    report = {
        "x0": x0,
        "eps_prime": float(eps_prime),
        "delta_b": float(delta_b),
        "sup_phi": float(np.max(np.abs(phi_values))),
        "fd_grad_sup": float(b.fd_gradient_sup(n_samples=2000, seed=x0) * eps_prime),
        "delta": float(delta),
    }
    return DgzResult(
        phi=b,
        phi_scale=eps_prime,
        phi_values=phi_values,
        minimizer=pmin,
        margin=margin,
        delta_b=delta_b,
        report=report,
    )


# ---------------------------------------------------------------------------
# Approximate Rolle search
# ---------------------------------------------------------------------------


@dataclass
class RolleResult:
    vertex: int
    grad_norm: float
    case: int
    lam: float
    report: dict


def rolle_search(field: ScalarField, region: BoundarySet, r_target: float) -> RolleResult:
    """Locate an almost-critical point of a differentiable field.

    Case 1/2: interior supremum (infimum) beats the boundary by a gap eta;
    the Ekeland walk runs with lam = min(eta / 8n, r).  Case 3: |f| <= eps
    on the region with an inscribed ball of radius Rb; lam = eps / Rb.
    """
    graph = region.graph
    man = graph.manifold
    pts = graph.cloud.points
    vals = field.eval_many(pts)
    interior = region.interior
    bnd = region.boundary
    keep_mask = np.zeros(graph.n, dtype=bool)
    keep_mask[np.concatenate([interior, bnd])] = True
    keep_sorted = np.nonzero(keep_mask)[0]  # subgraph index -> full index
    sub, mapping = _subgraph(graph, keep_mask)
    sub_vals = vals[keep_mask]
    sub_interior = np.array([mapping[i] for i in interior])
    sub_bnd = np.array([mapping[i] for i in bnd])

    sup_int, sup_bnd = sub_vals[sub_interior].max(), sub_vals[sub_bnd].max()
    inf_int, inf_bnd = sub_vals[sub_interior].min(), sub_vals[sub_bnd].min()

    if sup_int > sup_bnd:
        case = 1
        eta = sup_int - sup_bnd
        walk_vals = sub_vals
    elif inf_int < inf_bnd:
        case = 2
        eta = inf_bnd - inf_int
        walk_vals = -sub_vals
    else:
        case = 3
        eps = float(np.abs(sub_vals).max())
        # inscribed ball: the vertex farthest from the boundary
        d_bnd = graph_distance(sub, sub_bnd)
        p0_local = int(np.argmax(d_bnd[sub_interior]))
        p0 = int(sub_interior[p0_local])
        Rb = float(d_bnd[p0])
        if Rb <= 0:
            raise ValueError("rolle_search case 3 hypotheses fail: empty inscribed ball")
        if eps == 0.0:
            # identically zero on the region: every interior point is critical
            return _finish(field, graph, keep_sorted, p0, case, 0.0,
                           {"eps": 0.0, "ball_radius": Rb, "p0": int(keep_sorted[p0])})
        lam = eps / Rb
        z = _ekeland_max(-sub_vals, sub, x0=p0, lam=lam)
        return _finish(field, graph, keep_sorted, z, case, lam,
                       {"eps": eps, "ball_radius": Rb, "p0": int(keep_sorted[p0])})

    # cases 1 and 2: walk from the interior argmax of walk_vals
    x0 = int(sub_interior[np.argmax(walk_vals[sub_interior])])
    d_x0 = graph_distance(sub, [x0])
    n_rad = float(np.max(d_x0[np.isfinite(d_x0)])) + 1e-9  # region fits in B(x0, n)
    lam = min(eta / (8.0 * max(n_rad, 1e-9)), r_target)
    if lam <= 0:
        raise ValueError("rolle_search hypotheses fail: vanishing gap")
    z = _ekeland_max(walk_vals, sub, x0=x0, lam=lam)
    return _finish(field, graph, keep_sorted, z, case, lam, {"eta": float(eta)})


def _ekeland_max(values, graph, x0, lam):
    sup = np.max(values[np.isfinite(values)])
    eps = sup - values[x0] + max(1e-12, 1e-12 * abs(sup))
    return ekeland_search(values, graph, x0=x0, eps=eps, lam=lam)


def _finish(field, graph, keep_sorted, z_local, case, lam, extra):
    vertex = int(keep_sorted[z_local])
    man = graph.manifold
    p = Point(man, graph.cloud.points[vertex])
    g = fd_gradient_chart(field.eval_many, normal_chart(p))
    report = {"case": case, "lam": float(lam), **extra}
    return RolleResult(
        vertex=vertex, grad_norm=float(np.linalg.norm(g)), case=case, lam=lam,
        report=report,
    )


def _subgraph(graph: GeodesicGraph, keep_mask):
    """Restriction of the graph to the kept vertices."""
    from .graphs import PointCloud

    idx = np.nonzero(keep_mask)[0]
    mapping = {int(v): i for i, v in enumerate(idx)}
    pts = graph.cloud.points[keep_mask]
    cloud = PointCloud(graph.manifold, pts, seed=graph.cloud.seed, method="subset")
    edges, lengths = [], []
    for (a, b), l in zip(graph.edges, graph.lengths):
        if keep_mask[a] and keep_mask[b]:
            edges.append((mapping[a], mapping[b]))
            lengths.append(l)
    sub = GeodesicGraph(
        cloud=cloud,
        edges=np.array(edges, dtype=int).reshape(-1, 2),
        lengths=np.array(lengths),
        k=graph.k,
        h=float(np.max(lengths)) if lengths else 0.0,
    )
    return sub, mapping
