"""Numerical sub/superdifferential probes and estimates.

A probe evaluates the field at ``exp_p(rho * v)`` over a schedule of radii
and a fan of unit chart directions, then tests normalized increments

    (f(exp_p(rho v)) - f(p) - rho <zeta, v>) / rho

against a margin.  A negative increment below ``-margin`` certifies, at the
probed scale, that zeta is not a subgradient; consistency to the smallest
probed radius is evidence, never a proof.  Deepening the radius schedule
can only add violations, so verdicts never flip from violated back to
consistent.

Discrete fields on graphs are probed at their neighbor rings, where the
graph interpolant coincides with the stored vertex values.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fields import ScalarField
from .geometry import NormalChart, Point, normal_chart
from .graphs import GeodesicGraph

DEFAULT_MARGIN = 1e-6
DEFAULT_LEVELS = 8
DEFAULT_DIRECTIONS_2D = 32
DEFAULT_DIRECTIONS_3D = 128


def default_radii(p: Point, levels: int = DEFAULT_LEVELS) -> np.ndarray:
    """Geometric schedule: 0.5 r_M down by factor 0.5."""
    r = p.manifold.r_M(p.coords)
    top = 0.5 * r
    return top * 0.5 ** np.arange(levels)


def default_directions(dim: int) -> np.ndarray:
    """Quasi-uniform unit directions; +-1 exhausts the sphere in dim 1."""
    if dim == 1:
        return np.array([[1.0], [-1.0]])
    if dim == 2:
        ang = 2.0 * np.pi * np.arange(DEFAULT_DIRECTIONS_2D) / DEFAULT_DIRECTIONS_2D
        return np.stack([np.cos(ang), np.sin(ang)], axis=-1)
    n = DEFAULT_DIRECTIONS_3D
    # Fibonacci sphere
    i = np.arange(n) + 0.5
    phi = np.arccos(1.0 - 2.0 * i / n)
    theta = np.pi * (1.0 + 5.0**0.5) * i
    return np.stack(
        [np.sin(phi) * np.cos(theta), np.sin(phi) * np.sin(theta), np.cos(phi)], axis=-1
    )


@dataclass
class SubgradientVerdict:
    status: str  # "violated" | "consistent"
    witness_direction: np.ndarray = None  # chart components of v (violated)
    witness_radius: float = None
    observed_increment: float = None  # the offending normalized increment
    margin: float = DEFAULT_MARGIN
    probe_depth: float = None  # smallest radius tested (consistent)

    @property
    def violated(self) -> bool:
        return self.status == "violated"

    def to_json(self) -> dict:
        out = {"status": self.status, "margin": self.margin}
        if self.violated:
            out["witness_direction"] = list(map(float, self.witness_direction))
            out["witness_radius"] = float(self.witness_radius)
            out["observed_increment"] = float(self.observed_increment)
        else:
            out["probe_depth"] = float(self.probe_depth)
        return out


@dataclass
class ProbeTable:
    """Field increments at exp_p(rho v) for a radius schedule and a fan."""

    chart: NormalChart
    radii: np.ndarray  # (R,)
    directions: np.ndarray  # (D, dim)
    f_center: float
    f_values: np.ndarray  # (R, D)

    def increments(self, zeta_chart) -> np.ndarray:
        """Normalized increments, shape (R, D) or (Z, R, D) for a batch."""
        zeta = np.asarray(zeta_chart, dtype=float)
        lin = np.einsum("...k,dk->...d", zeta, self.directions)  # (..., D)
        rho = self.radii[:, None]
        return (self.f_values - self.f_center) / rho - lin[..., None, :]

    def negate(self) -> "ProbeTable":
        return ProbeTable(
            chart=self.chart,
            radii=self.radii,
            directions=self.directions,
            f_center=-self.f_center,
            f_values=-self.f_values,
        )


def _field_eval(f, coords):
    if isinstance(f, ScalarField):
        return f.eval_many(coords)
    coords = np.asarray(coords, dtype=float)
    out = np.asarray(f(coords), dtype=float)
    if out.shape != coords.shape[:-1]:
        out = np.array([float(f(c)) for c in coords.reshape(-1, coords.shape[-1])])
        out = out.reshape(coords.shape[:-1])
    return out


def probe_table(f, p: Point, radii=None, directions=None) -> ProbeTable:
    chart = normal_chart(p)
    if radii is None:
        radii = default_radii(p)
    radii = np.asarray(radii, dtype=float)
    if directions is None:
        directions = default_directions(p.manifold.dim)
    directions = np.asarray(directions, dtype=float)
    pts = chart.from_chart_coords(radii[:, None, None] * directions[None, :, :])
    fvals = _field_eval(f, pts)
    fc = _field_eval(f, p.coords[None, :])[0]
    if not np.isfinite(fc):
        raise ValueError("probe center has infinite field value")
    return ProbeTable(chart, radii, directions, float(fc), fvals)


def verdict_from_table(
    table: ProbeTable, zeta_chart, margin: float = DEFAULT_MARGIN
) -> SubgradientVerdict:
    inc = table.increments(zeta_chart)
    inc = np.where(np.isnan(inc), np.inf, inc)  # undefined probes don't violate
    worst = inc.min()
    if worst < -margin:
        r, d = np.unravel_index(int(np.argmin(inc)), inc.shape)
        return SubgradientVerdict(
            status="violated",
            witness_direction=table.directions[d].copy(),
            witness_radius=float(table.radii[r]),
            observed_increment=float(worst),
            margin=margin,
        )
    return SubgradientVerdict(
        status="consistent", margin=margin, probe_depth=float(table.radii.min())
    )


def test_subgradient(
    f, p: Point, zeta_chart, radii=None, margin: float = DEFAULT_MARGIN, directions=None
) -> SubgradientVerdict:
    """Probe whether zeta (chart components) behaves like a subgradient.

    ``violated`` carries a witness direction that reproduces an increment
    below -margin; ``consistent`` reports the smallest radius probed.
    """
    table = probe_table(f, p, radii=radii, directions=directions)
    return verdict_from_table(table, np.asarray(zeta_chart, dtype=float), margin)


def test_supergradient(
    f, p: Point, zeta_chart, radii=None, margin: float = DEFAULT_MARGIN, directions=None
) -> SubgradientVerdict:
    """D^+ probe via D^+f = -D^-(-f)."""
    table = probe_table(f, p, radii=radii, directions=directions).negate()
    return verdict_from_table(table, -np.asarray(zeta_chart, dtype=float), margin)


# ---------------------------------------------------------------------------
# Directional derivatives
# ---------------------------------------------------------------------------


def dini_inf_quotient(f, p: Point, v, t_grid) -> float:
    """inf over the grid of (f(exp_p(t v)) - f(p)) / t for unit v.

    For geodesically convex f the quotient is nondecreasing in t, so the
    infimum approximates the generalized directional derivative from above
    and refining the grid can only lower it.
    """
    man = p.manifold
    v = np.asarray(v, dtype=float)
    t = np.asarray(t_grid, dtype=float)
    if np.any(t <= 0):
        raise ValueError("t_grid must be positive")
    fc = _field_eval(f, p.coords[None, :])[0]
    if not np.isfinite(fc):
        raise ValueError("dini quotient needs f(p) finite")
    X = np.broadcast_to(p.coords, (t.size, man.rep_dim))
    pts = man.exp(X, t[:, None] * v[None, :])
    vals = _field_eval(f, pts)
    return float(np.min((vals - fc) / t))


def generalized_directional(f, p: Point, v, shrink_schedule=None, n_base=16) -> float:
    """Clarke-type upper directional derivative along geodesics.

    Maximizes the difference quotient over base points near p (v carried
    over by parallel transport) and small step sizes.
    """
    man = p.manifold
    v = np.asarray(v, dtype=float)
    if shrink_schedule is None:
        r = man.r_M(p.coords)
        shrink_schedule = 0.05 * r * 0.5 ** np.arange(6)
    dirs = default_directions(man.dim)[:n_base]
    chart = normal_chart(p)
    best = -np.inf
    for eps in np.asarray(shrink_schedule, dtype=float):
        # nearby base points, p itself included
        offsets = np.vstack([np.zeros((1, man.dim)), eps * dirs])
        Q = chart.from_chart_coords(offsets)
        W = man.transport(
            np.broadcast_to(p.coords, Q.shape).copy(), Q, np.broadcast_to(v, Q.shape).copy()
        )
        fq = _field_eval(f, Q)
        for t in (eps, 0.5 * eps, 0.25 * eps):
            pts = man.exp(Q, t * W)
            vals = _field_eval(f, pts)
            quot = (vals - fq) / t
            m = np.nanmax(quot)
            if m > best:
                best = float(m)
    return best


# ---------------------------------------------------------------------------
# Subdifferential estimates
# ---------------------------------------------------------------------------


@dataclass
class SubdifferentialEstimate:
    point: Point
    inner: np.ndarray  # (m, dim) chart components certified consistent
    outer: np.ndarray = None  # polytope vertices (dim <= 2), convex mode
    convex_mode: bool = False

    @property
    def nonempty(self) -> bool:
        return self.inner is not None and len(self.inner) > 0


def fd_gradient_chart(f, chart: NormalChart, step: float = 1e-5) -> np.ndarray:
    """Central-difference gradient in normal-chart components."""
    dim = chart.dim
    offsets = np.zeros((2 * dim, dim))
    for k in range(dim):
        offsets[2 * k, k] = step
        offsets[2 * k + 1, k] = -step
    pts = chart.from_chart_coords(offsets)
    vals = _field_eval(f, pts)
    return (vals[0::2] - vals[1::2]) / (2.0 * step)


def _curvature_scale(f, chart: NormalChart, step: float = 1e-3) -> float:
    """Crude along-axis second-difference bound used to size probe radii."""
    dim = chart.dim
    offsets = np.zeros((2 * dim + 1, dim))
    for k in range(dim):
        offsets[2 * k, k] = step
        offsets[2 * k + 1, k] = -step
    pts = chart.from_chart_coords(offsets)
    vals = _field_eval(f, pts)
    f0 = vals[-1]
    lam = 0.0
    for k in range(dim):
        second = abs(vals[2 * k] + vals[2 * k + 1] - 2.0 * f0) / step**2
        if np.isfinite(second):
            lam = max(lam, second)
    return lam


def interval_from_support(qplus: float, qminus: float):
    """1-D outer set {zeta : zeta <= q(+1), -zeta <= q(-1)}."""
    lo, hi = -qminus, qplus
    if lo > hi:
        return np.empty((0, 1))
    return np.array([[lo], [hi]])


def polygon_from_support(dirs: np.ndarray, qvals: np.ndarray) -> np.ndarray:
    """Intersection of half-planes {zeta . v_d <= q_d} clipped from a big box."""
    B = 10.0 * (np.abs(qvals).max() + 1.0)
    poly = [
        np.array([-B, -B]),
        np.array([B, -B]),
        np.array([B, B]),
        np.array([-B, B]),
    ]
    for v, q in zip(dirs, qvals):
        if not poly:
            break
        new = []
        m = len(poly)
        for i in range(m):
            a, b = poly[i], poly[(i + 1) % m]
            fa, fb = a @ v - q, b @ v - q
            if fa <= 1e-14:
                new.append(a)
            if (fa < -1e-14 and fb > 1e-14) or (fa > 1e-14 and fb < -1e-14):
                t = fa / (fa - fb)
                new.append(a + t * (b - a))
        poly = new
    return np.array(poly).reshape(-1, 2)


def estimate_subdifferential(
    f,
    p: Point,
    direction_fan=None,
    mode: str = "general",
    t_grid=None,
    zeta_grid=None,
    margin: float = DEFAULT_MARGIN,
    radii=None,
) -> SubdifferentialEstimate:
    """Inner/outer approximation of D^-f(p).

    Convex mode: the outer set is the support-function polytope
    {zeta : <zeta, v> <= dini(f, p, v) for v in the fan}; its vertices and
    centroid are screened into the certified inner set.  General mode:
    the inner set is a covector grid filtered by the subgradient probe.
    """
    man = p.manifold
    dim = man.dim
    if direction_fan is None:
        direction_fan = default_directions(dim)
    direction_fan = np.asarray(direction_fan, dtype=float)
    if direction_fan.size == 0:
        raise ValueError("empty direction fan")
    chart = normal_chart(p)

    if mode == "convex":
        if t_grid is None:
            r = man.r_M(p.coords)
            t_grid = 0.45 * r * 0.5 ** np.arange(24)
        qvals = np.array(
            [
                dini_inf_quotient(f, p, chart.vector_from_chart(v), t_grid)
                for v in direction_fan
            ]
        )
        if dim == 1:
            qp = qvals[np.argmax(direction_fan[:, 0])]
            qm = qvals[np.argmin(direction_fan[:, 0])]
            outer = interval_from_support(qp, qm)
        elif dim == 2:
            outer = polygon_from_support(direction_fan, qvals)
        else:
            outer = None
        candidates = []
        if outer is not None and len(outer):
            candidates = list(outer) + [outer.mean(axis=0)]
        table = probe_table(f, p, radii=radii)
        inner = [
            z for z in candidates if not verdict_from_table(table, z, margin).violated
        ]
        return SubdifferentialEstimate(
            point=p,
            inner=np.array(inner).reshape(-1, dim),
            outer=outer,
            convex_mode=True,
        )

    # general mode: covector grid filtered by the probe
    if zeta_grid is None:
        g0 = fd_gradient_chart(f, chart)
        g0 = np.where(np.isfinite(g0), g0, 0.0)
        w = max(1.0, 2.0 * np.abs(g0).max())
        axes = [np.linspace(c - w, c + w, 9) for c in g0]
        mesh = np.meshgrid(*axes, indexing="ij")
        zeta_grid = np.stack([m.reshape(-1) for m in mesh], axis=-1)
        zeta_grid = np.vstack([zeta_grid, g0[None, :]])
    zeta_grid = np.asarray(zeta_grid, dtype=float).reshape(-1, dim)
    table = probe_table(f, p, radii=radii)
    inc = table.increments(zeta_grid)  # (Z, R, D)
    inc = np.where(np.isnan(inc), np.inf, inc)
    ok = inc.min(axis=(1, 2)) >= -margin
    return SubdifferentialEstimate(
        point=p, inner=zeta_grid[ok], outer=None, convex_mode=False
    )


def differentiability_probe(f, p: Point, tol: float = 0.01, margin: float = None):
    """Gradient covector when D^- and D^+ estimates pin a common singleton.

    Returns the chart components of the gradient, or None when either
    one-sided estimate is empty or the two spread wider than ``tol``.  The
    probe radii shrink with the estimated local curvature so a smooth
    function's quadratic term stays inside the margin; genuine kinks have
    order-one increments at every radius and are still rejected.
    """
    man = p.manifold
    dim = man.dim
    chart = normal_chart(p)
    if margin is None:
        margin = max(DEFAULT_MARGIN, 0.5 * tol)
    g0 = fd_gradient_chart(f, chart)
    if not np.all(np.isfinite(g0)):
        g0 = np.zeros(dim)
    lam = _curvature_scale(f, chart)
    r0 = min(0.01 * man.r_M(p.coords), 0.3 * margin / max(lam, 1e-9))
    r0 = max(r0, 1e-7)
    radii = r0 * 0.5 ** np.arange(6)
    offs = np.linspace(-2.0 * tol, 2.0 * tol, 9)
    mesh = np.meshgrid(*([offs] * dim), indexing="ij")
    grid = g0 + np.stack([m.reshape(-1) for m in mesh], axis=-1)
    table = probe_table(f, p, radii=radii)
    inc = table.increments(grid)
    inc = np.where(np.isnan(inc), np.inf, inc)
    sub_ok = inc.min(axis=(1, 2)) >= -margin
    tneg = table.negate()
    inc2 = tneg.increments(-grid)
    inc2 = np.where(np.isnan(inc2), np.inf, inc2)
    sup_ok = inc2.min(axis=(1, 2)) >= -margin
    A, B = grid[sub_ok], grid[sup_ok]
    if len(A) == 0 or len(B) == 0:
        return None
    c = 0.5 * (A.mean(axis=0) + B.mean(axis=0))
    spread = max(
        np.linalg.norm(A - c, axis=-1).max(), np.linalg.norm(B - c, axis=-1).max()
    )
    if spread > tol:
        return None
    return c


# ---------------------------------------------------------------------------
# Vertex probes for discrete fields
# ---------------------------------------------------------------------------


def vertex_increments(values, graph: GeodesicGraph, i: int):
    """One-sided normalized increments along the edges at vertex i and the
    chart directions they probe: (directions (k, dim), radii (k,), inc-per-
    zeta callable data)."""
    ids, X, frame, h_loc = graph.vertex_chart(i)
    lens = np.linalg.norm(X, axis=-1)
    good = lens > 0
    X, ids, lens = X[good], ids[good], lens[good]
    dirs = X / lens[:, None]
    vals = np.asarray(values, dtype=float)
    base = vals[i]
    if not np.isfinite(base):
        raise ValueError(f"vertex {i} has infinite value")
    with np.errstate(invalid="ignore"):
        inc0 = (vals[ids] - base) / lens
    return dirs, lens, inc0


def vertex_subgradient_consistent(
    values, graph: GeodesicGraph, i: int, zetas, margin: float
) -> np.ndarray:
    """Boolean mask over covector-grid rows: consistent as D^- at vertex i."""
    dirs, lens, inc0 = vertex_increments(values, graph, i)
    zetas = np.atleast_2d(np.asarray(zetas, dtype=float))
    lin = zetas @ dirs.T  # (Z, k)
    inc = inc0[None, :] - lin
    inc = np.where(np.isnan(inc), np.inf, inc)
    return inc.min(axis=1) >= -margin


def vertex_has_consistent_subgradient(values, graph: GeodesicGraph, i: int,
                                      margin: float = None) -> bool:
    """Whether some covector satisfies every one-sided edge constraint
    zeta . x_j <= (f_j - f_i) / l_j + margin at vertex i — a linear
    feasibility problem, solved exactly.

    For geodesically convex fields the true differential is feasible at
    margin zero however coarse the graph; kinks and jump-up vertices have
    order-one infeasibility gaps.
    """
    from scipy.optimize import linprog

    dirs, lens, inc0 = vertex_increments(values, graph, i)
    if len(lens) == 0:
        return False
    m_i = margin if margin is not None else max(1e-9, 0.75 * lens.max())
    finite = np.isfinite(inc0)
    if not finite.any():
        return True  # only +inf neighbors: no constraints
    A = dirs[finite]
    b = inc0[finite] + m_i
    res = linprog(
        np.zeros(A.shape[1]), A_ub=A, b_ub=b,
        bounds=[(None, None)] * A.shape[1], method="highs",
    )
    return bool(res.status == 0)


def density_probe(values, graph: GeodesicGraph, margin: float = None) -> float:
    """Fraction of finite-value vertices with a nonempty consistent D^-
    estimate (1.0 for convex catalog fields; sampling evidence for density
    on merely lsc ones)."""
    vals = np.asarray(values, dtype=float)
    dom = np.nonzero(np.isfinite(vals))[0]
    if dom.size == 0:
        raise ValueError("density probe needs a nonempty domain")
    hits = sum(
        1 for i in dom if vertex_has_consistent_subgradient(vals, graph, int(i), margin)
    )
    return hits / dom.size
