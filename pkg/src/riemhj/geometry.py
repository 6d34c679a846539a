"""Typed points, vectors, covectors, geodesics, and the core operations.

This is the contract surface over the batched numerics in
``riemhj.manifolds``: base-point checks, radius checks, and normal charts
live here.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import BasePointMismatchError, GeometryError, OutOfRadiusError
from .manifolds import Manifold

DEFAULT_FD_STEP = 1e-6
#: FD step used for distance partials on ODE-backed manifolds, where the
#: shooting noise floor makes a 1e-6 step too small
ODE_FD_STEP = 1e-5


@dataclass(frozen=True)
class Point:
    manifold: Manifold
    coords: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "coords", np.asarray(self.coords, dtype=float))
        if self.coords.shape != (self.manifold.rep_dim,):
            raise GeometryError(
                f"coords must have shape ({self.manifold.rep_dim},), "
                f"got {self.coords.shape}"
            )
        if not bool(self.manifold.contains(self.coords)):
            raise GeometryError(
                f"{self.manifold.name}: coordinates {self.coords} outside the domain"
            )


@dataclass(frozen=True)
class TangentVector:
    base: Point
    components: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "components", np.asarray(self.components, dtype=float))

    @property
    def manifold(self):
        return self.base.manifold

    def norm(self) -> float:
        return float(self.manifold.norm(self.base.coords, self.components))


@dataclass(frozen=True)
class CotangentVector:
    base: Point
    components: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "components", np.asarray(self.components, dtype=float))

    @property
    def manifold(self):
        return self.base.manifold

    def dual_norm(self) -> float:
        return float(self.manifold.dual_norm(self.base.coords, self.components))

    def raised(self) -> TangentVector:
        return TangentVector(
            self.base, self.manifold.raise_(self.base.coords, self.components)
        )

    def __call__(self, v: TangentVector) -> float:
        _same_base(self.base, v.base)
        return float(self.manifold.pair(self.base.coords, self.components, v.components))


@dataclass(frozen=True)
class Geodesic:
    """Unit-speed geodesic segment from ``base`` in direction ``direction``."""

    base: Point
    direction: TangentVector
    length: float

    def __post_init__(self):
        n = self.direction.norm()
        if abs(n - 1.0) > 1e-8:
            raise GeometryError(f"geodesic direction must be unit, got norm {n}")
        if self.length < 0:
            raise GeometryError("geodesic length must be nonnegative")


def _same_base(p: Point, q: Point):
    if p.manifold is not q.manifold or not np.array_equal(p.coords, q.coords):
        raise BasePointMismatchError(
            f"vectors live at different base points: {p.coords} vs {q.coords}"
        )


# ---------------------------------------------------------------------------
# Core operations
# ---------------------------------------------------------------------------


def metric_eval(p: Point, v: TangentVector, w: TangentVector) -> float:
    _same_base(v.base, p)
    _same_base(w.base, p)
    return float(p.manifold.inner(p.coords, v.components, w.components))


def exp_map(p: Point, v: TangentVector) -> Point:
    _same_base(v.base, p)
    return Point(p.manifold, p.manifold.exp(p.coords, v.components))


def log_map(p: Point, q: Point) -> TangentVector:
    if p.manifold is not q.manifold:
        raise BasePointMismatchError("log_map endpoints on different manifolds")
    return TangentVector(p, p.manifold.log(p.coords, q.coords))


def geodesic(p: Point, v: TangentVector, length: float) -> Geodesic:
    """Unit-speed geodesic through p in the direction of v."""
    _same_base(v.base, p)
    n = v.norm()
    if n == 0:
        raise GeometryError("cannot build a geodesic from the zero vector")
    return Geodesic(p, TangentVector(p, v.components / n), float(length))


def geodesic_eval(g: Geodesic, t: float) -> tuple[Point, TangentVector]:
    if t < -1e-12 or t > g.length + 1e-12:
        raise GeometryError(f"parameter {t} outside [0, {g.length}]")
    t = min(max(t, 0.0), g.length)
    man = g.base.manifold
    y, w = man.exp_velocity(g.base.coords, t * g.direction.components)
    pt = Point(man, y)
    if t == 0.0:
        return g.base, g.direction
    speed = man.norm(y, w)
    return pt, TangentVector(pt, w / speed)


def distance(p: Point, q: Point, fallback_graph=None) -> tuple[float, bool]:
    """Geodesic distance with an exactness flag.

    Returns ``(value, exact)``.  Closed-form manifolds are always exact; on
    ODE-backed manifolds the log map certifies distances below the working
    radius, and beyond it the value falls back to a shortest-path upper
    bound on ``fallback_graph`` with ``exact=False``.
    """
    man = p.manifold
    if man.has_closed_form:
        return float(man.dist(p.coords, q.coords)), True
    try:
        v = man.log(p.coords, q.coords)
        return float(man.norm(p.coords, v)), True
    except GeometryError:
        if fallback_graph is None:
            raise
        from .graphs import graph_distance_between

        return graph_distance_between(fallback_graph, p.coords, q.coords), False


def parallel_transport(v: TangentVector, q: Point) -> TangentVector:
    man = v.manifold
    _check_radius(man, v.base, q)
    return TangentVector(q, man.transport(v.base.coords, q.coords, v.components))


def covector_transport(xi: CotangentVector, x: Point) -> CotangentVector:
    """L_{yx}: lower . parallel transport . raise, an isometry of cofibers."""
    man = xi.manifold
    _check_radius(man, xi.base, x)
    raised = man.raise_(xi.base.coords, xi.components)
    moved = man.transport(xi.base.coords, x.coords, raised)
    return CotangentVector(x, man.lower(x.coords, moved))


def covector_gap(zeta: CotangentVector, xi: CotangentVector) -> float:
    """|| zeta - L_{yx}(xi) ||_x with x the base of zeta."""
    if zeta.manifold is not xi.manifold:
        raise BasePointMismatchError("covector gap across different manifolds")
    moved = covector_transport(xi, zeta.base)
    man = zeta.manifold
    return float(man.dual_norm(zeta.base.coords, zeta.components - moved.components))


def _check_radius(man, p: Point, q: Point):
    if man.has_closed_form:
        d = man.dist(p.coords, q.coords)
    else:
        v = man.log(p.coords, q.coords)  # raises if shooting fails
        d = man.norm(p.coords, v)
    r = man.r_M(p.coords)
    if d >= r:
        raise OutOfRadiusError(
            f"{man.name}: operation needs d < r_M = {r:.4g}, got d = {d:.4g}"
        )


# ---------------------------------------------------------------------------
# Normal charts
# ---------------------------------------------------------------------------


@dataclass
class NormalChart:
    """Chart pair (h, h^{-1}) with h = frame coordinates of the log map.

    ``h`` sends p to 0 and the differential of ``h^{-1}`` at 0 is the
    identity, since the frame is orthonormal.
    """

    center: Point
    radius: float
    frame: np.ndarray = field(repr=False)  # (dim, rep_dim)

    @property
    def manifold(self):
        return self.center.manifold

    @property
    def dim(self):
        return self.manifold.dim

    def to_chart(self, q: Point | np.ndarray) -> np.ndarray:
        coords = q.coords if isinstance(q, Point) else np.asarray(q, dtype=float)
        man = self.manifold
        v = man.log(self.center.coords, coords)
        return self.vector_to_chart(v)

    def from_chart(self, c: np.ndarray) -> Point:
        return Point(self.manifold, self.from_chart_coords(np.asarray(c, dtype=float)))

    def from_chart_coords(self, c: np.ndarray) -> np.ndarray:
        """Batched h^{-1}: rows of c are chart points."""
        man = self.manifold
        c = np.asarray(c, dtype=float)
        v = np.einsum("...k,kj->...j", c, self.frame)
        x = np.broadcast_to(self.center.coords, v.shape[:-1] + (man.rep_dim,))
        return man.exp(x, v)

    def vector_to_chart(self, v: np.ndarray) -> np.ndarray:
        """Frame components of a tangent vector at the center."""
        man = self.manifold
        x = self.center.coords
        return np.stack(
            [man.inner(x, self.frame[k], v) for k in range(self.dim)], axis=-1
        )

    def vector_from_chart(self, c: np.ndarray) -> np.ndarray:
        return np.einsum("...k,kj->...j", np.asarray(c, dtype=float), self.frame)

    def covector_to_chart(self, zeta: np.ndarray) -> np.ndarray:
        """Chart components of a covector: pairings with the frame."""
        man = self.manifold
        x = self.center.coords
        return np.stack(
            [man.pair(x, zeta, self.frame[k]) for k in range(self.dim)], axis=-1
        )

    def covector_from_chart(self, c: np.ndarray) -> np.ndarray:
        man = self.manifold
        x = self.center.coords
        c = np.asarray(c, dtype=float)
        lowered = np.stack([man.lower(x, self.frame[k]) for k in range(self.dim)])
        return np.einsum("...k,kj->...j", c, lowered)

    def lipschitz_estimate(self, n_samples=200, seed=0) -> float:
        """Sampled epsilon with both chart maps (1+eps)-Lipschitz on the ball."""
        rng = np.random.default_rng(seed)
        man = self.manifold
        d = self.dim
        u = rng.normal(size=(n_samples, d))
        u /= np.linalg.norm(u, axis=-1, keepdims=True)
        r = self.radius * rng.random((n_samples, 1)) ** (1.0 / d)
        c1 = u * r
        c2 = c1 + 0.05 * self.radius * rng.normal(size=(n_samples, d))
        scale = np.linalg.norm(c2, axis=-1, keepdims=True)
        too_far = scale[:, 0] > self.radius
        c2[too_far] *= (self.radius / scale[too_far]) * 0.999
        p1 = self.from_chart_coords(c1)
        p2 = self.from_chart_coords(c2)
        dm = man.dist(p1, p2) if man.has_closed_form else _pair_dist(man, p1, p2)
        dc = np.linalg.norm(c1 - c2, axis=-1)
        good = (dm > 1e-12) & (dc > 1e-12)
        ratios = np.concatenate([dm[good] / dc[good], dc[good] / dm[good]])
        return float(max(ratios.max() - 1.0, 0.0))


def _pair_dist(man, X, Y):
    V, ok = _shoot(man, X, Y)
    d = man.norm(X, V)
    d[~ok] = np.nan
    return d


def _shoot(man, X, Y):
    from .manifolds import ode

    return ode.shoot_log(man, X, Y)


def normal_chart(p: Point, radius: float | None = None) -> NormalChart:
    man = p.manifold
    r = man.r_M(p.coords)
    if radius is None:
        radius = 0.9 * r
    if radius > 0.9 * r + 1e-12:
        raise OutOfRadiusError(f"normal chart radius {radius} exceeds 0.9 r_M = {0.9*r}")
    return NormalChart(center=p, radius=float(radius), frame=man.frame(p.coords))


# ---------------------------------------------------------------------------
# Distance partials
# ---------------------------------------------------------------------------


def distance_partials_many(man, X, Y, step: float | None = None, n_fixed: int = 192):
    """Batched distance partials: central differences of the distance in
    per-point orthonormal frames.  Returns covector representations
    (dd_dx, dd_dy), each of shape (n, rep_dim).

    On ODE-backed manifolds the differences run through fixed-step
    integration with a tightened shooting tolerance, since the adaptive
    integrator's step-acceptance jitter would dominate the quotient."""
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if step is None:
        step = DEFAULT_FD_STEP if man.has_closed_form else ODE_FD_STEP

    def dist_many(A, B):
        if man.has_closed_form:
            return np.asarray(man.dist(A, B), dtype=float)
        from .manifolds import ode

        V, ok = ode.shoot_log(man, A, np.array(B, copy=True), n_fixed=n_fixed,
                              newton_tol=1e-13)
        d = man.norm(A, V)
        d[~ok] = np.nan
        return d

    def exp_offset(base, tangent):
        if man.has_closed_form:
            return man.exp(base, tangent)
        from .manifolds import ode

        P, _, _ = ode.geodesic_flow(man, base, tangent, n_fixed=8)
        return P

    def partial(base, other):
        frames = man.frame(base)  # (n, dim, rep)
        comps = np.empty(base.shape[:-1] + (man.dim,))
        for k in range(man.dim):
            ek = frames[..., k, :]
            plus = exp_offset(base, step * ek)
            minus = exp_offset(base, -step * ek)
            comps[..., k] = (dist_many(plus, other) - dist_many(minus, other)) / (
                2.0 * step
            )
        lowered = np.stack(
            [man.lower(base, frames[..., k, :]) for k in range(man.dim)], axis=-2
        )
        return np.einsum("...k,...kj->...j", comps, lowered)

    return partial(X, Y), partial(Y, X)


def distance_partials(x: Point, y: Point):
    """Partial differentials of d(., .) at (x, y), as unit covectors.

    Central differences of the (closed-form or log-based) distance in the
    normal chart; the FD step widens on ODE-backed manifolds to sit above
    the shooting noise floor.
    """
    man = x.manifold
    if man.has_closed_form:
        d0 = man.dist(x.coords, y.coords)
        step = DEFAULT_FD_STEP
    else:
        v = man.log(x.coords, y.coords)
        d0 = man.norm(x.coords, v)
        step = ODE_FD_STEP
    if d0 <= 0:
        raise GeometryError("distance partials undefined at coincident points")
    if d0 >= min(man.r_M(x.coords), man.r_M(y.coords)):
        raise OutOfRadiusError("distance partials need d(x, y) < r_M")
    ddx, ddy = distance_partials_many(
        man, x.coords[None, :], y.coords[None, :], step=step
    )
    return CotangentVector(x, ddx[0]), CotangentVector(y, ddy[0])
