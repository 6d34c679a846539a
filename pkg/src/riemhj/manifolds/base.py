"""Manifold base classes.

Coordinates are plain numpy arrays of shape ``(..., rep_dim)`` where
``rep_dim`` is the length of the working representation: chart coordinates
for intrinsically-parameterized manifolds, ambient coordinates for embedded
ones (sphere, hyperboloid).  All core operations are batched over leading
axes; scalar convenience comes from the typed layer in ``riemhj.geometry``.

Covectors use the same array layout as tangent vectors.  For chart
manifolds a covector holds coframe components, so the duality product is a
plain dot product and raising an index solves against the metric matrix.
For embedded manifolds a covector is stored through its metrically raised
representative, so raising/lowering are the identity and the pairing is the
tangent inner product.  Both conventions satisfy
``dual_norm(zeta) == norm(raise_(zeta))``.
"""

from __future__ import annotations

from abc import ABC, abstractmethod

import numpy as np

from ..errors import DomainExitError, OutOfRadiusError, ShootingError


class Manifold(ABC):
    """A member of the fixed manifold catalog."""

    name: str = "manifold"
    dim: int = 0
    rep_dim: int = 0
    #: injectivity radius i(M); 0.0 is the "vanishing" flag, np.inf allowed
    i_M: float = np.inf
    #: global convexity radius c(M); 0.0 is the "vanishing" flag
    c_M: float = np.inf
    #: True when exp/log/transport/distance are closed-form
    has_closed_form: bool = False

    # -- radii -----------------------------------------------------------

    def r_M(self, x: np.ndarray | None = None) -> float:
        """Working radius at ``x`` (position-independent unless overridden)."""
        return self._r_M

    def log_radius(self, x: np.ndarray | None = None) -> float:
        """Radius up to which the log map is single-valued (the cut-locus
        bound).  At least r_M; larger on manifolds whose exponential stays
        injective beyond the convexity radius (sphere, torus)."""
        return self.r_M(x)

    # -- pointwise linear algebra ----------------------------------------

    @abstractmethod
    def inner(self, x, u, v):
        """Riemannian scalar product g_x(u, v); batched over leading axes."""

    def norm(self, x, u):
        val = self.inner(x, u, u)
        return np.sqrt(np.maximum(val, 0.0))

    @abstractmethod
    def pair(self, x, zeta, v):
        """Duality product zeta(v) for a covector and a tangent vector."""

    @abstractmethod
    def raise_(self, x, zeta):
        """Tangent representative of a covector (index raising)."""

    @abstractmethod
    def lower(self, x, v):
        """Covector representation of a tangent vector (index lowering)."""

    def dual_norm(self, x, zeta):
        return self.norm(x, self.raise_(x, zeta))

    @abstractmethod
    def frame(self, x):
        """Deterministic orthonormal tangent frame, shape ``(..., dim, rep_dim)``."""

    # -- geometry ---------------------------------------------------------

    @abstractmethod
    def exp(self, x, v):
        """Point reached after unit time along the geodesic with velocity v."""

    @abstractmethod
    def exp_velocity(self, x, v):
        """(exp(x, v), velocity at arrival) for geodesic evaluation."""

    @abstractmethod
    def log(self, x, y):
        """Inverse of exp within the working radius."""

    @abstractmethod
    def transport(self, x, y, v):
        """Parallel transport of v along the minimal geodesic from x to y."""

    @abstractmethod
    def dist(self, x, y):
        """Geodesic distance; raises OutOfRadiusError when not certifiable."""

    # -- domain and sampling ----------------------------------------------

    @abstractmethod
    def contains(self, x):
        """Boolean array: coordinates lie in the coordinate domain."""

    @abstractmethod
    def sample(self, n: int, rng: np.random.Generator, method: str = "default"):
        """Deterministic point sample; per-manifold scheme."""

    # -- helpers for neighbor search ---------------------------------------

    def knn_proxy(self, x):
        """Coordinates whose Euclidean order matches geodesic order when
        ``knn_proxy_exact`` is True; otherwise a pre-filter only."""
        return np.asarray(x, dtype=float)

    knn_proxy_exact: bool = True

    def params(self) -> dict:
        return {}

    def spec(self) -> dict:
        """JSON-ready descriptor: {name, dim, params, r_M, i_M, c_M}."""
        r = self._r_M if hasattr(self, "_r_M") else None
        return {
            "name": self.name,
            "dim": self.dim,
            "params": self.params(),
            "r_M": _json_float(r),
            "i_M": _json_float(self.i_M),
            "c_M": _json_float(self.c_M),
        }

    def __repr__(self):
        return f"{self.__class__.__name__}(name={self.name!r}, dim={self.dim})"


def _json_float(x):
    if x is None:
        return None
    x = float(x)
    if np.isinf(x):
        return "inf"
    return x


class ChartManifold(Manifold):
    """Manifold given by one global chart and a metric matrix field.

    Subclasses supply ``metric_matrix`` and optionally closed-form geometry;
    otherwise geodesics come from the ODE integrator in ``riemhj.manifolds.ode``
    with Christoffel symbols either closed-form (``christoffel``) or from
    central differences of the metric.
    """

    #: chart axes that are 2*pi-periodic (wrapped in differences)
    periodic_axes: tuple[int, ...] = ()
    #: target local truncation error of the geodesic integrator
    ode_tol: float = 1e-10
    #: FD step for the metric when no closed-form Christoffels exist
    christoffel_fd_step: float = 1e-5

    @abstractmethod
    def metric_matrix(self, x):
        """g_x as a matrix, shape ``(..., rep_dim, rep_dim)``."""

    def christoffel(self, x):
        """Closed-form Christoffel symbols; default falls back to FD."""
        from . import ode

        return ode.christoffel_fd(self, x, self.christoffel_fd_step)

    def wrap(self, delta):
        """Wrap periodic chart axes of a coordinate difference to (-pi, pi]."""
        delta = np.array(delta, dtype=float, copy=True)
        for ax in self.periodic_axes:
            delta[..., ax] = _wrap_angle(delta[..., ax])
        return delta

    def canonical(self, x):
        """Map periodic axes into [0, 2*pi)."""
        x = np.array(x, dtype=float, copy=True)
        for ax in self.periodic_axes:
            x[..., ax] = np.mod(x[..., ax], 2.0 * np.pi)
        return x

    # pointwise algebra through the metric matrix
    def inner(self, x, u, v):
        G = self.metric_matrix(x)
        return np.einsum("...ij,...i,...j->...", G, u, v)

    def pair(self, x, zeta, v):
        return np.einsum("...i,...i->...", zeta, v)

    def raise_(self, x, zeta):
        G = self.metric_matrix(x)
        return np.linalg.solve(G, np.asarray(zeta, dtype=float)[..., None])[..., 0]

    def lower(self, x, v):
        G = self.metric_matrix(x)
        return np.einsum("...ij,...j->...i", G, v)

    def frame(self, x):
        """Gram-Schmidt of the chart basis against g_x (diagonal metrics
        stay axis-aligned)."""
        x = np.asarray(x, dtype=float)
        G = self.metric_matrix(x)
        batch = x.shape[:-1]
        basis = np.broadcast_to(np.eye(self.rep_dim), batch + (self.rep_dim, self.rep_dim))
        out = np.empty(batch + (self.dim, self.rep_dim))
        vecs = []
        for k in range(self.dim):
            e = np.array(np.broadcast_to(basis[..., k, :], batch + (self.rep_dim,)))
            for prev in vecs:
                proj = np.einsum("...ij,...i,...j->...", G, e, prev)
                e = e - proj[..., None] * prev
            nrm = np.sqrt(np.einsum("...ij,...i,...j->...", G, e, e))
            e = e / nrm[..., None]
            vecs.append(e)
            out[..., k, :] = e
        return out

    # geometry defaults: ODE integration + shooting
    def exp(self, x, v):
        return self.exp_velocity(x, v)[0]

    def exp_velocity(self, x, v):
        from . import ode

        x = np.asarray(x, dtype=float)
        v = np.asarray(v, dtype=float)
        single = x.ndim == 1
        X = np.atleast_2d(x)
        V = np.atleast_2d(v)
        Y, W, ok = ode.geodesic_flow(self, X, V)
        if not ok.all():
            raise DomainExitError(
                f"{self.name}: geodesic left the coordinate domain for "
                f"{int((~ok).sum())} of {ok.size} inputs"
            )
        if single:
            return Y[0], W[0]
        return Y, W

    def log(self, x, y):
        from . import ode

        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        single = x.ndim == 1
        X = np.atleast_2d(x)
        Y = np.atleast_2d(y)
        V, ok = ode.shoot_log(self, X, Y)
        if not ok.all():
            bad = np.nonzero(~ok)[0]
            raise ShootingError(
                f"{self.name}: log-map shooting failed for rows {bad.tolist()[:8]}"
                f" ({bad.size} of {ok.size})"
            )
        lengths = self.norm(X, V)
        rad = self.log_radius(X)
        rad = np.full(X.shape[0], float(rad)) if np.isscalar(rad) else np.asarray(rad)
        if np.any(lengths >= rad):
            raise OutOfRadiusError(
                f"{self.name}: log requested beyond the working radius "
                f"(max length {lengths.max():.4g})"
            )
        if single:
            return V[0]
        return V

    def transport(self, x, y, v):
        from . import ode

        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        X = np.atleast_2d(x)
        Y = np.atleast_2d(np.asarray(y, dtype=float))
        V = np.atleast_2d(np.asarray(v, dtype=float))
        W = self.log(X, Y)
        out = ode.transport_flow(self, X, W, V)
        if single:
            return out[0]
        return out

    def dist(self, x, y):
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        X = np.atleast_2d(x)
        Y = np.atleast_2d(np.asarray(y, dtype=float))
        V = self.log(X, Y)
        d = self.norm(X, V)
        if single:
            return float(d[0])
        return d

    def _r_M_array(self, X):
        r = self.r_M(X)
        if np.isscalar(r):
            return np.full(X.shape[0], float(r))
        return np.asarray(r, dtype=float)


def _wrap_angle(a):
    """Wrap to (-pi, pi]."""
    out = np.mod(np.asarray(a, dtype=float) + np.pi, 2.0 * np.pi) - np.pi
    # mod may return -pi for inputs exactly at the branch point
    if np.ndim(out) == 0:
        return np.pi if out == -np.pi else float(out)
    out[out == -np.pi] = np.pi
    return out
