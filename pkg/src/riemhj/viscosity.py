"""Discrete viscosity verification, comparison checks, and the doubling
search.

Grid fields have no intrinsic D+/D-, so candidates are built in the normal
chart at each vertex: a least-squares affine fit over the neighbor values
(plus leave-one-out fits) and the one-sided slope covector toward each
neighbor.  Candidates are screened against the vertex's neighbor ring --
where the graph interpolant equals the stored values -- by the sub/super
gradient probe with an O(h) margin.  This discrete semantics is a choice;
residual tolerances carry an explicit C*h slack (default C = 3).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .graphs import BoundarySet, GeodesicGraph, graph_distance
from .hamiltonian import Hamiltonian

#: slack constant for h-dependent comparisons, calibrated on the
#: manufactured-solution suite
H_SLACK = 3.0
#: screening margin in units of the local edge scale
SCREEN_MARGIN_FACTOR = 1.0


def vertex_candidates(values, graph: GeodesicGraph, i: int):
    """D+/- candidate covectors (chart components) at vertex i.

    Returns (candidates (m, dim), X (k, dim), dv (k,), lens (k,)); the
    candidate list is the full affine fit, leave-one-out fits, and the
    one-sided slope covectors toward each neighbor.
    """
    man = graph.manifold
    dim = man.dim
    ids, X, frame, h_loc = graph.vertex_chart(i)
    vals = np.asarray(values, dtype=float)
    dv = vals[ids] - vals[i]
    lens = np.linalg.norm(X, axis=-1)
    k = len(ids)
    if k < dim + 1:
        raise ValueError(f"vertex {i} has {k} neighbors; needs at least dim+1")
    cands = []
    finite = np.isfinite(dv)
    if finite.sum() >= dim:
        cands.append(np.linalg.lstsq(X[finite], dv[finite], rcond=None)[0])
        if k <= 16:
            for drop in range(k):
                mask = finite.copy()
                mask[drop] = False
                if mask.sum() >= dim:
                    cands.append(np.linalg.lstsq(X[mask], dv[mask], rcond=None)[0])
    with np.errstate(invalid="ignore"):
        slopes = dv / lens
    for j in range(k):
        if np.isfinite(slopes[j]) and lens[j] > 0:
            cands.append(slopes[j] * X[j] / lens[j])
    return np.array(cands).reshape(-1, dim), X, dv, lens


def screen_candidates(cands, X, dv, lens, margin):
    """Masks (sub_ok, sup_ok): consistency of each candidate as a D^- / D^+
    covector against the neighbor-ring increments."""
    lin = cands @ X.T  # (m, k)
    with np.errstate(invalid="ignore"):
        inc = (dv[None, :] - lin) / lens[None, :]
    inc = np.where(np.isnan(inc), 0.0, inc)
    sub_ok = inc.min(axis=1) >= -margin
    sup_ok = inc.max(axis=1) <= margin
    return sub_ok, sup_ok


@dataclass
class ViscosityReport:
    sub_residuals: np.ndarray  # per checked vertex: max(0, u + F) over D+ candidates
    super_residuals: np.ndarray  # per checked vertex: max(0, -(u + F)) over D-
    vertices: np.ndarray
    candidate_counts: dict = field(default_factory=dict)

    @property
    def max_sub(self) -> float:
        return float(self.sub_residuals.max()) if self.sub_residuals.size else 0.0

    @property
    def max_super(self) -> float:
        return float(self.super_residuals.max()) if self.super_residuals.size else 0.0

    def passes(self, tol: float) -> bool:
        return self.max_sub <= tol and self.max_super <= tol

    def to_json(self):
        return {
            "max_sub_residual": self.max_sub,
            "max_super_residual": self.max_super,
            "n_checked": int(self.vertices.size),
            "candidate_counts": self.candidate_counts,
        }


def verify_viscosity(
    values,
    F: Hamiltonian,
    graph: GeodesicGraph,
    bands: BoundarySet | None = None,
    tol: float = 0.0,
    zeroth_order: bool = True,
    margin_factor: float = SCREEN_MARGIN_FACTOR,
    side: str = "both",
) -> ViscosityReport:
    """Residuals of the discrete viscosity inequalities for u + F(du) = 0
    (or F(du) = 0 with ``zeroth_order=False``).

    Surviving D+ candidates must satisfy u + F <= tol (subsolution side),
    surviving D- candidates u + F >= -tol (supersolution side).  ``tol``
    only feeds the report's pass/fail; residuals are raw.
    """
    vals = np.asarray(values, dtype=float)
    man = graph.manifold
    if bands is None:
        check = np.arange(graph.n)
    elif isinstance(bands, BoundarySet):
        check = np.asarray(bands.interior, dtype=int)
    else:
        check = np.asarray(bands, dtype=int)  # explicit vertex list
    pts = graph.cloud.points
    sub_res = np.zeros(check.size)
    sup_res = np.zeros(check.size)
    n_sub = np.zeros(check.size, dtype=int)
    n_sup = np.zeros(check.size, dtype=int)
    for idx, i in enumerate(check):
        cands, X, dv, lens = vertex_candidates(vals, graph, i)
        margin = margin_factor * lens.max()
        sub_ok, sup_ok = screen_candidates(cands, X, dv, lens, margin)
        u_term = vals[i] if zeroth_order else 0.0
        _, _, frame, _ = graph.vertex_chart(i)
        lowered = np.stack([man.lower(pts[i], frame[k]) for k in range(man.dim)])
        rs, ss = 0.0, 0.0
        for c in cands[sup_ok]:
            zeta = c @ lowered
            rs = max(rs, u_term + F(pts[i], zeta))
        for c in cands[sub_ok]:
            zeta = c @ lowered
            ss = max(ss, -(u_term + F(pts[i], zeta)))
        sub_res[idx] = max(0.0, rs)
        sup_res[idx] = max(0.0, ss)
        n_sub[idx] = int(sup_ok.sum())
        n_sup[idx] = int(sub_ok.sum())
    if side == "sub":
        sup_res[:] = 0.0
    elif side == "super":
        sub_res[:] = 0.0
    return ViscosityReport(
        sub_residuals=sub_res,
        super_residuals=sup_res,
        vertices=check,
        candidate_counts={
            "mean_Dplus": float(n_sub.mean()) if n_sub.size else 0.0,
            "mean_Dminus": float(n_sup.mean()) if n_sup.size else 0.0,
        },
    )


def dplus_candidate_diameter(values, graph: GeodesicGraph, i: int,
                             margin_factor: float = SCREEN_MARGIN_FACTOR) -> float:
    """Diameter of the surviving D+ candidate set at a vertex (the
    multi-valuedness witness at ridge points)."""
    cands, X, dv, lens = vertex_candidates(values, graph, i)
    margin = margin_factor * lens.max()
    _, sup_ok = screen_candidates(cands, X, dv, lens, margin)
    kept = cands[sup_ok]
    if len(kept) < 2:
        return 0.0
    diffs = kept[:, None, :] - kept[None, :, :]
    return float(np.linalg.norm(diffs, axis=-1).max())


def sup_subsolution_check(
    u1,
    u2,
    F: Hamiltonian,
    graph: GeodesicGraph,
    tol: float,
    bands: BoundarySet | None = None,
    zeroth_order: bool = True,
) -> dict:
    """The pointwise max of two verified subsolutions verifies as a
    subsolution at twice the tolerance."""
    r1 = verify_viscosity(u1, F, graph, bands, tol, zeroth_order, side="sub")
    r2 = verify_viscosity(u2, F, graph, bands, tol, zeroth_order, side="sub")
    if r1.max_sub > tol or r2.max_sub > tol:
        raise ValueError(
            f"inputs are not verified subsolutions at tol {tol}: "
            f"{r1.max_sub:.3g}, {r2.max_sub:.3g}"
        )
    w = np.maximum(np.asarray(u1, float), np.asarray(u2, float))
    rw = verify_viscosity(w, F, graph, bands, 2 * tol, zeroth_order, side="sub")
    return {
        "passed": bool(rw.max_sub <= 2 * tol),
        "max_sub_residual": rw.max_sub,
        "tol": tol,
    }


def comparison_check(
    u,
    v,
    f_vals,
    g_vals,
    graph: GeodesicGraph,
    tol: float,
    h: float | None = None,
) -> dict:
    """Maximum principle margin: min(v - u) >= min(g - f) - 2 tol - C h."""
    u = np.asarray(u, float)
    v = np.asarray(v, float)
    h = graph.h if h is None else h
    lhs = float(np.min(v - u))
    rhs = float(np.min(np.asarray(g_vals, float) - np.asarray(f_vals, float)))
    bound = rhs - 2.0 * tol - H_SLACK * h
    return {
        "passed": bool(lhs >= bound),
        "min_v_minus_u": lhs,
        "min_g_minus_f": rhs,
        "slack": 2.0 * tol + H_SLACK * h,
        "margin": lhs - bound,
    }


# ---------------------------------------------------------------------------
# Doubling-variable search
# ---------------------------------------------------------------------------


@dataclass
class DoublingResult:
    x0: int
    y0: int
    zeta: np.ndarray  # chart components at x0 (D+ u candidate)
    xi: np.ndarray  # chart components at y0 (D- v candidate)
    conclusions: dict

    def to_json(self):
        return {
            "x0": int(self.x0),
            "y0": int(self.y0),
            "zeta": self.zeta.tolist(),
            "xi": self.xi.tolist(),
            "conclusions": self.conclusions,
        }


def doubling_pair(
    u,
    v,
    eps: float,
    graph: GeodesicGraph,
    pair_cap: int = 4_000_000,
    margin_factor: float = SCREEN_MARGIN_FACTOR,
) -> DoublingResult:
    """Exhaustively minimize w(x, y) = v(y) - u(x) - b(d(x, y)) with the
    nonincreasing penalty profile b(0) > 2(||u|| + ||v||) + eps, b = 0
    beyond eps; then check the three doubling conclusions at the argmin.

    u is treated as the (usc, bounded) subsolution-side field and v as the
    (lsc, bounded) supersolution side.
    """
    from .bump import theta_profile
    from .geometry import Point

    u = np.asarray(u, float)
    v = np.asarray(v, float)
    n = graph.n
    if n * n > pair_cap:
        raise ValueError(f"doubling search needs n^2 <= {pair_cap}")
    man = graph.manifold
    B0 = 2.0 * (np.abs(u).max() + np.abs(v).max()) + eps + 1.0

    def b(d):
        return B0 * theta_profile(d / eps)

    D = np.empty((n, n))
    for i in range(n):
        D[i] = graph_distance(graph, [i])
    W = v[None, :] - u[:, None] - b(D)
    x0, y0 = np.unravel_index(int(np.argmin(W)), W.shape)

    # candidate covectors from the local affine fits, screened
    zu, Xu, dvu, lu = vertex_candidates(u, graph, int(x0))
    _, sup_ok = screen_candidates(zu, Xu, dvu, lu, margin_factor * lu.max())
    zv, Xv, dvv, lv = vertex_candidates(v, graph, int(y0))
    sub_ok, _ = screen_candidates(zv, Xv, dvv, lv, margin_factor * lv.max())
    zeta = zu[sup_ok][0] if sup_ok.any() else zu[0]
    xi = zv[sub_ok][0] if sub_ok.any() else zv[0]

    d_xy = float(D[x0, y0])
    h = graph.h
    # (ii): transport gap between the covectors
    if d_xy < man.r_M(graph.cloud.points[x0]):
        gap = _chart_covector_gap(graph, int(x0), int(y0), zeta, xi)
    else:
        gap = np.inf
    # (iii): the displayed inequality over all vertices
    min_diff = float(np.min(v - u))
    iii_ok = min_diff >= float(v[y0] - u[x0]) - eps
    conclusions = {
        "i": bool(d_xy < eps),
        "d_x0_y0": d_xy,
        "ii": bool(gap < eps + H_SLACK * h),
        "covector_gap": float(gap),
        "iii": bool(iii_ok),
        "min_v_minus_u": min_diff,
        "value_at_pair": float(v[y0] - u[x0]),
        "degenerate": bool(eps > np.nanmax(D[np.isfinite(D)])),
    }
    return DoublingResult(x0=int(x0), y0=int(y0), zeta=zeta, xi=xi, conclusions=conclusions)


def _chart_covector_gap(graph: GeodesicGraph, i: int, j: int, zeta_chart, xi_chart) -> float:
    """|| zeta - L_{y x}(xi) ||_x for chart-component covectors at vertices."""
    man = graph.manifold
    x = graph.cloud.points[i]
    y = graph.cloud.points[j]
    fx = man.frame(x)
    fy = man.frame(y)
    zeta = np.einsum("k,kj->j", np.asarray(zeta_chart, float),
                     np.stack([man.lower(x, fx[k]) for k in range(man.dim)]))
    xi = np.einsum("k,kj->j", np.asarray(xi_chart, float),
                   np.stack([man.lower(y, fy[k]) for k in range(man.dim)]))
    moved = man.lower(x, man.transport(y, x, man.raise_(y, xi)))
    return float(man.dual_norm(x, zeta - moved))
