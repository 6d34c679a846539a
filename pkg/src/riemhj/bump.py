"""Smooth bump fields built from the distance function.

The profile theta is a C-infinity nonincreasing step equal to 1 on
(-inf, 1/3] and 0 on [1, inf); a bump of radius delta is
b(y) = theta(d(y, p) / delta), whose gradient norm is bounded by
R / delta with R = sup |theta'| since the distance is 1-Lipschitz.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import GeometryError
from .geometry import Point, normal_chart


def _sigma(u):
    out = np.zeros_like(u, dtype=float)
    pos = u > 0
    with np.errstate(under="ignore"):
        out[pos] = np.exp(-1.0 / u[pos])
    return out


def smooth_step(u):
    """C-infinity step: 0 for u <= 0, 1 for u >= 1."""
    u = np.asarray(u, dtype=float)
    a = _sigma(u)
    b = _sigma(1.0 - u)
    with np.errstate(under="ignore"):
        return a / (a + b + 1e-300)


def theta_profile(t):
    """Nonincreasing, 1 on (-inf, 1/3], 0 on [1, inf)."""
    t = np.asarray(t, dtype=float)
    return smooth_step((1.0 - t) * 1.5)


def _sup_abs_deriv(profile, lo=0.0, hi=1.2, n=200001):
    t = np.linspace(lo, hi, n)
    v = profile(t)
    with np.errstate(under="ignore"):
        return float(np.abs(np.diff(v) / np.diff(t)).max())


_THETA_R_CACHE = {}


def profile_lipschitz(profile=theta_profile) -> float:
    key = id(profile)
    if key not in _THETA_R_CACHE:
        _THETA_R_CACHE[key] = _sup_abs_deriv(profile)
    return _THETA_R_CACHE[key]


@dataclass
class BumpField:
    """b(y) = theta(d(y, center)/delta): equals 1 at the center, vanishes
    outside the delta-ball, with gradient bound R/delta."""

    center: Point
    delta: float
    profile: object = field(default=theta_profile, repr=False)
    R: float = None

    def __post_init__(self):
        man = self.center.manifold
        if self.delta >= man.r_M(self.center.coords):
            raise GeometryError(
                f"bump radius {self.delta} must be below r_M = "
                f"{man.r_M(self.center.coords)}"
            )
        if self.delta <= 0:
            raise GeometryError("bump radius must be positive")
        if self.R is None:
            self.R = profile_lipschitz(self.profile)

    @property
    def manifold(self):
        return self.center.manifold

    @property
    def gradient_bound(self) -> float:
        return self.R / self.delta

    def __call__(self, coords) -> float:
        return float(self.eval_many(np.asarray(coords, dtype=float)[None, :])[0])

    def eval_many(self, coords) -> np.ndarray:
        man = self.manifold
        coords = np.asarray(coords, dtype=float)
        c = np.broadcast_to(self.center.coords, coords.shape)
        if man.has_closed_form:
            d = np.asarray(man.dist(coords, c), dtype=float)
        else:
            d = self._shoot_dist(coords, c)
        return np.where(d >= self.delta, 0.0, self.profile(d / self.delta))

    def _shoot_dist(self, coords, c):
        # beyond the working radius the bump is certainly zero, so failed
        # shots are mapped to "far"
        from .manifolds import ode

        X = np.atleast_2d(coords)
        C = np.atleast_2d(c).copy()
        V, ok = ode.shoot_log(self.manifold, X, C)
        d = self.manifold.norm(X, V)
        d[~ok] = np.inf
        r = self.manifold.r_M(X)
        r = np.full(X.shape[0], r) if np.isscalar(r) else np.asarray(r)
        d[d >= r] = np.inf
        return d if coords.ndim > 1 else d[0]

    def fd_gradient_norm(self, coords, step=1e-6) -> float:
        """Finite-difference gradient dual norm at a point."""
        man = self.manifold
        p = Point(man, np.asarray(coords, dtype=float))
        chart = normal_chart(p)
        dim = man.dim
        offs = np.zeros((2 * dim, dim))
        for k in range(dim):
            offs[2 * k, k] = step
            offs[2 * k + 1, k] = -step
        pts = chart.from_chart_coords(offs)
        vals = self.eval_many(pts)
        comp = (vals[0::2] - vals[1::2]) / (2.0 * step)
        return float(np.linalg.norm(comp))

    def fd_gradient_sup(self, n_samples=10000, seed=0, step=1e-6) -> float:
        """Sampled sup of the FD gradient norm over the support ball."""
        rng = np.random.default_rng(seed)
        man = self.manifold
        chart = normal_chart(self.center)
        dim = man.dim
        u = rng.normal(size=(n_samples, dim))
        u /= np.linalg.norm(u, axis=-1, keepdims=True)
        r = self.delta * rng.random((n_samples, 1)) ** (1.0 / dim)
        pts = chart.from_chart_coords(u * r)
        # batched central differences in per-point orthonormal frames
        frames = man.frame(pts)  # (n, dim, rep)
        grad_sq = np.zeros(n_samples)
        with np.errstate(under="ignore"):
            for k in range(dim):
                ek = frames[:, k, :]
                plus = man.exp(pts, step * ek)
                minus = man.exp(pts, -step * ek)
                comp = (self.eval_many(plus) - self.eval_many(minus)) / (2.0 * step)
                grad_sq += comp**2
            return float(np.sqrt(grad_sq.max()))


def bump(p: Point, delta: float, profile=theta_profile) -> BumpField:
    return BumpField(center=p, delta=float(delta), profile=profile)
