"""The fixed manifold catalog.

Members and their radii constants:

* ``euclidean`` (dim 1-3): flat box, everything closed-form, r_M capped at 10.
* ``sphere``: unit two-sphere in ambient coordinates, i = pi, c = pi/2, r_M = 1.4.
* ``hyperbolic``: hyperboloid model of the hyperbolic plane, i = c = inf, r_M = 5.
* ``torus`` / ``circle``: flat 2*pi-periodic tori, r_M = 1.5.
* ``cusp``: surface of revolution z = 1/rho^2 with vanishing injectivity
  radius near the spike; the working radius is position-dependent.
* ``funnel``: surface of revolution z = 1/(rho^2 - 1), rho > 1, whose waist
  circumference stays above 2*pi, so its radii constants are positive.
"""

from __future__ import annotations

import numpy as np

from ..errors import OutOfRadiusError
from .base import ChartManifold, Manifold, _wrap_angle

_EPS = 1e-14


# ---------------------------------------------------------------------------
# Euclidean boxes
# ---------------------------------------------------------------------------


class Euclidean(ChartManifold):
    """Flat R^n; the box only windows the sampler (the space is complete,
    so geodesics run unrestricted)."""

    has_closed_form = True
    i_M = np.inf
    c_M = np.inf

    def __init__(self, dim=2, box=None, name=None):
        self.dim = dim
        self.rep_dim = dim
        if box is None:
            box = [(-5.0, 5.0)] * dim
        self.box = [(float(a), float(b)) for a, b in box]
        self._r_M = 10.0  # +inf capped for numerics
        self.name = name or f"euclidean{dim}"

    def params(self):
        return {"box": self.box}

    def metric_matrix(self, x):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(np.eye(self.dim), x.shape[:-1] + (self.dim, self.dim))

    def christoffel(self, x):
        x = np.asarray(x, dtype=float)
        n = self.dim
        return np.zeros(x.shape[:-1] + (n, n, n))

    def inner(self, x, u, v):
        return np.einsum("...i,...i->...", np.asarray(u, float), np.asarray(v, float))

    def raise_(self, x, zeta):
        return np.asarray(zeta, dtype=float)

    def lower(self, x, v):
        return np.asarray(v, dtype=float)

    def frame(self, x):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(np.eye(self.dim), x.shape[:-1] + (self.dim, self.dim))

    def exp(self, x, v):
        return np.asarray(x, float) + np.asarray(v, float)

    def exp_velocity(self, x, v):
        return np.asarray(x, float) + np.asarray(v, float), np.asarray(v, float)

    def log(self, x, y):
        return np.asarray(y, float) - np.asarray(x, float)

    def transport(self, x, y, v):
        return np.array(v, dtype=float, copy=True)

    def dist(self, x, y):
        d = np.linalg.norm(np.asarray(y, float) - np.asarray(x, float), axis=-1)
        return float(d) if d.ndim == 0 else d

    def contains(self, x):
        x = np.asarray(x, dtype=float)
        return np.isfinite(x).all(axis=-1)

    def sample(self, n, rng, method="default"):
        lo = np.array([a for a, _ in self.box])
        hi = np.array([b for _, b in self.box])
        if method == "grid":
            m = max(1, int(round(n ** (1.0 / self.dim))))
            axes = [np.linspace(lo[i], hi[i], m) for i in range(self.dim)]
            pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, self.dim)
            return pts
        return lo + (hi - lo) * rng.random((n, self.dim))


# ---------------------------------------------------------------------------
# Unit sphere, ambient representation
# ---------------------------------------------------------------------------


class Sphere(Manifold):
    """Unit S^2 embedded in R^3; tangent vectors are ambient and orthogonal
    to the base point; covectors are stored through their raised vectors."""

    name = "sphere"
    dim = 2
    rep_dim = 3
    has_closed_form = True
    i_M = np.pi
    c_M = np.pi / 2.0
    _r_M = 1.4
    knn_proxy_exact = True  # chordal order equals geodesic order

    def inner(self, x, u, v):
        return np.einsum("...i,...i->...", np.asarray(u, float), np.asarray(v, float))

    def pair(self, x, zeta, v):
        return self.inner(x, zeta, v)

    def raise_(self, x, zeta):
        return np.asarray(zeta, dtype=float)

    def lower(self, x, v):
        return np.asarray(v, dtype=float)

    def frame(self, x):
        x = np.asarray(x, dtype=float)
        batch = x.shape[:-1]
        # pick the global axis least aligned with x, project, orthonormalize
        axes = np.eye(3)
        align = np.abs(np.einsum("...i,ji->...j", x, axes))
        pick = np.argmin(align, axis=-1)
        a = axes[pick]
        e1 = a - np.einsum("...i,...i->...", a, x)[..., None] * x
        e1 = e1 / np.linalg.norm(e1, axis=-1, keepdims=True)
        e2 = np.cross(x, e1)
        out = np.empty(batch + (2, 3))
        out[..., 0, :] = e1
        out[..., 1, :] = e2
        return out

    def exp(self, x, v):
        return self.exp_velocity(x, v)[0]

    def exp_velocity(self, x, v):
        x = np.asarray(x, dtype=float)
        v = np.asarray(v, dtype=float)
        t = np.linalg.norm(v, axis=-1, keepdims=True)
        small = t < 1e-300
        tt = np.where(small, 1.0, t)
        vhat = v / tt
        y = np.cos(t) * x + np.sin(t) * vhat
        y = y / np.linalg.norm(y, axis=-1, keepdims=True)
        w = -np.sin(t) * t * x + np.cos(t) * t * vhat  # d/ds exp(s v)|_{s=1}
        y = np.where(small, x, y)
        w = np.where(small, v, w)
        return y, w

    def log_radius(self, x=None):
        return np.pi - 1e-9  # cut locus at the antipode

    def log(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        c = np.clip(np.einsum("...i,...i->...", x, y), -1.0, 1.0)
        u = y - c[..., None] * x
        s = np.linalg.norm(u, axis=-1)
        theta = np.arctan2(s, c)
        if np.any(theta >= self.log_radius()):
            raise OutOfRadiusError(
                f"sphere: log beyond the cut locus (max angle {np.max(theta):.4g})"
            )
        safe = s > 1e-300
        coef = np.where(safe, theta / np.where(safe, s, 1.0), 0.0)
        return coef[..., None] * u

    def transport(self, x, y, v):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        v = np.asarray(v, dtype=float)
        w = self.log(x, y)
        theta = np.linalg.norm(w, axis=-1, keepdims=True)
        small = theta[..., 0] < 1e-14
        th = np.where(theta < 1e-300, 1.0, theta)
        u = w / th
        tq = -np.sin(theta) * x + np.cos(theta) * u  # transported u
        coef = np.einsum("...i,...i->...", v, u)[..., None]
        out = v - coef * u + coef * tq
        # re-project against tangency drift at the destination
        out = out - np.einsum("...i,...i->...", out, y)[..., None] * y
        return np.where(small[..., None], v, out)

    def dist(self, x, y):
        c = np.clip(
            np.einsum(
                "...i,...i->...", np.asarray(x, float), np.asarray(y, float)
            ),
            -1.0,
            1.0,
        )
        d = np.arccos(c)
        return float(d) if d.ndim == 0 else d

    def contains(self, x):
        n = np.linalg.norm(np.asarray(x, float), axis=-1)
        return np.abs(n - 1.0) < 1e-8

    def sample(self, n, rng, method="default"):
        g = rng.normal(size=(n, 3))
        return g / np.linalg.norm(g, axis=-1, keepdims=True)

    def wrap(self, delta):
        return np.asarray(delta, dtype=float)


# ---------------------------------------------------------------------------
# Hyperbolic plane, hyperboloid model
# ---------------------------------------------------------------------------


def _lorentz(u, v):
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    return -u[..., 0] * v[..., 0] + np.einsum("...i,...i->...", u[..., 1:], v[..., 1:])


class Hyperbolic(Manifold):
    """Hyperbolic plane as the upper hyperboloid <x,x>_L = -1 in R^{2,1}.

    Hadamard manifold: exp is a global diffeomorphism, so the log map has
    no radius restriction; r_M = 5 is the declared working radius for the
    transport-based operations.
    """

    name = "hyperbolic"
    dim = 2
    rep_dim = 3
    has_closed_form = True
    i_M = np.inf
    c_M = np.inf
    _r_M = 5.0
    knn_mode = "brute"  # chordal order is not geodesic order this far out
    #: radius of the sampling disk (area-weighted)
    sample_radius = 3.0

    def log_radius(self, x=None):
        return np.inf

    def inner(self, x, u, v):
        return _lorentz(u, v)

    def pair(self, x, zeta, v):
        return _lorentz(zeta, v)

    def raise_(self, x, zeta):
        return np.asarray(zeta, dtype=float)

    def lower(self, x, v):
        return np.asarray(v, dtype=float)

    def project_tangent(self, x, u):
        return u + _lorentz(x, u)[..., None] * np.asarray(x, float)

    def frame(self, x):
        x = np.asarray(x, dtype=float)
        batch = x.shape[:-1]
        out = np.empty(batch + (2, 3))
        vecs = []
        for k in (1, 2):
            e = np.zeros(3)
            e[k] = 1.0
            e = np.broadcast_to(e, x.shape).copy()
            e = self.project_tangent(x, e)
            for prev in vecs:
                e = e - _lorentz(e, prev)[..., None] * prev
            nrm = np.sqrt(np.maximum(_lorentz(e, e), _EPS))
            e = e / nrm[..., None]
            vecs.append(e)
            out[..., k - 1, :] = e
        return out

    def exp(self, x, v):
        return self.exp_velocity(x, v)[0]

    def exp_velocity(self, x, v):
        x = np.asarray(x, dtype=float)
        v = np.asarray(v, dtype=float)
        t = np.sqrt(np.maximum(_lorentz(v, v), 0.0))[..., None]
        small = t[..., 0] < 1e-300
        tt = np.where(small[..., None], 1.0, t)
        vhat = v / tt
        y = np.cosh(t) * x + np.sinh(t) * vhat
        w = np.sinh(t) * t * x + np.cosh(t) * t * vhat
        y = np.where(small[..., None], x, y)
        w = np.where(small[..., None], v, w)
        # renormalize onto the hyperboloid against drift
        s = np.sqrt(np.maximum(-_lorentz(y, y), _EPS))[..., None]
        return y / s, w

    def log(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        u = y + _lorentz(x, y)[..., None] * x
        s = np.sqrt(np.maximum(_lorentz(u, u), 0.0))
        theta = np.arcsinh(s)
        safe = s > 1e-300
        coef = np.where(safe, theta / np.where(safe, s, 1.0), 0.0)
        return coef[..., None] * u

    @staticmethod
    def _translation(x):
        """Lorentz boost taking the origin (1, 0, 0) to x; entries stay at
        the scale of x, so conjugating by it keeps transport well
        conditioned far from the origin."""
        x = np.asarray(x, dtype=float)
        x0 = x[..., 0]
        a, b = x[..., 1], x[..., 2]
        den = 1.0 + x0
        M = np.empty(x.shape[:-1] + (3, 3))
        M[..., 0, 0] = x0
        M[..., 0, 1] = a
        M[..., 0, 2] = b
        M[..., 1, 0] = a
        M[..., 1, 1] = 1.0 + a * a / den
        M[..., 1, 2] = a * b / den
        M[..., 2, 0] = b
        M[..., 2, 1] = a * b / den
        M[..., 2, 2] = 1.0 + b * b / den
        return M

    @staticmethod
    def _mirror(x):
        out = np.array(x, dtype=float, copy=True)
        out[..., 1:] *= -1.0
        return out

    def transport(self, x, y, v):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        v = np.asarray(v, dtype=float)
        # Center the endpoint closer to the origin; a forward/backward pair
        # then reuses the identical geodesic decomposition, so round trips
        # compose to the identity up to dot-product noise.
        x2, y2, v2 = np.atleast_2d(x), np.atleast_2d(y), np.atleast_2d(v)
        swap = x2[:, 0] > y2[:, 0]
        base = np.where(swap[:, None], y2, x2)
        far = np.where(swap[:, None], x2, y2)
        Minv = self._translation(self._mirror(base))
        M = self._translation(base)
        fc = np.einsum("...ij,...j->...i", Minv, far)
        # scrub the hyperboloid-constraint noise the far point carries
        fc = fc / np.sqrt(np.maximum(-_lorentz(fc, fc), _EPS))[..., None]
        vc = np.einsum("...ij,...j->...i", Minv, v2)
        # scrub off-tangency noise in well-scaled coordinates: the vector
        # sits at the origin for forward rows, at fc for swapped rows
        vc_origin = np.array(vc, copy=True)
        vc_origin[..., 0] = 0.0
        vc_far = vc + _lorentz(vc, fc)[..., None] * fc
        vc = np.where(swap[:, None], vc_far, vc_origin)
        u = np.array(fc, copy=True)
        u[..., 0] = 0.0  # tangent projection at the origin
        s = np.sqrt(np.maximum(_lorentz(u, u), 0.0))[..., None]
        small = s[..., 0] < 1e-14
        ss = np.where(s < 1e-300, 1.0, s)
        uh = u / ss
        theta = np.arcsinh(s)
        e0 = np.zeros_like(fc)
        e0[..., 0] = 1.0
        tq = np.sinh(theta) * e0 + np.cosh(theta) * uh
        # forward rows move uh -> tq; swapped rows apply the inverse map
        cf = _lorentz(vc, uh)[..., None]
        fwd = vc - cf * uh + cf * tq
        fwd = fwd + _lorentz(fwd, fc)[..., None] * fc  # tangency at fc
        cb = _lorentz(vc, tq)[..., None]
        bwd = vc - cb * tq + cb * uh
        bwd[..., 0] = 0.0  # tangency at the origin
        outc = np.where(swap[:, None], bwd, fwd)
        out = np.einsum("...ij,...j->...i", M, outc)
        out = np.where(small[:, None], v2, out)
        return out[0] if x.ndim == 1 else out.reshape(v.shape)

    def dist(self, x, y):
        u = np.asarray(y, float) + _lorentz(x, y)[..., None] * np.asarray(x, float)
        s = np.sqrt(np.maximum(_lorentz(u, u), 0.0))
        d = np.arcsinh(s)
        return float(d) if d.ndim == 0 else d

    def contains(self, x):
        x = np.asarray(x, dtype=float)
        return (np.abs(_lorentz(x, x) + 1.0) < 1e-8) & (x[..., 0] > 0)

    def sample(self, n, rng, method="default"):
        # area element sinh(r) dr dtheta: invert the CDF of cosh(r) - 1
        R = self.sample_radius
        u = rng.random(n)
        r = np.arccosh(1.0 + u * (np.cosh(R) - 1.0))
        th = 2.0 * np.pi * rng.random(n)
        return np.stack(
            [np.cosh(r), np.sinh(r) * np.cos(th), np.sinh(r) * np.sin(th)], axis=-1
        )

    def wrap(self, delta):
        return np.asarray(delta, dtype=float)

    def knn_proxy(self, x):
        return np.asarray(x, dtype=float)


# ---------------------------------------------------------------------------
# Flat torus / circle
# ---------------------------------------------------------------------------


class FlatTorus(ChartManifold):
    """Flat 2*pi-periodic torus (dim 1 gives the circle)."""

    has_closed_form = True

    def __init__(self, dim=2, name=None):
        self.dim = dim
        self.rep_dim = dim
        self.periodic_axes = tuple(range(dim))
        self.i_M = np.pi
        self.c_M = np.pi / 2.0
        self._r_M = 1.5
        self.name = name or ("circle" if dim == 1 else "torus")

    def params(self):
        return {"period": 2.0 * np.pi}

    def metric_matrix(self, x):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(np.eye(self.dim), x.shape[:-1] + (self.dim, self.dim))

    def christoffel(self, x):
        x = np.asarray(x, dtype=float)
        n = self.dim
        return np.zeros(x.shape[:-1] + (n, n, n))

    def inner(self, x, u, v):
        return np.einsum("...i,...i->...", np.asarray(u, float), np.asarray(v, float))

    def raise_(self, x, zeta):
        return np.asarray(zeta, dtype=float)

    def lower(self, x, v):
        return np.asarray(v, dtype=float)

    def frame(self, x):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(np.eye(self.dim), x.shape[:-1] + (self.dim, self.dim))

    def exp(self, x, v):
        return self.canonical(np.asarray(x, float) + np.asarray(v, float))

    def exp_velocity(self, x, v):
        return self.exp(x, v), np.asarray(v, dtype=float)

    def log_radius(self, x=None):
        return np.pi - 1e-9

    def log(self, x, y):
        d = self.wrap(np.asarray(y, float) - np.asarray(x, float))
        if np.any(np.abs(d) >= np.pi - 1e-9):
            raise OutOfRadiusError("torus: log at or beyond the cut locus")
        return d

    def transport(self, x, y, v):
        return np.array(v, dtype=float, copy=True)

    def dist(self, x, y):
        d = self.wrap(np.asarray(y, float) - np.asarray(x, float))
        out = np.linalg.norm(d, axis=-1)
        return float(out) if out.ndim == 0 else out

    def contains(self, x):
        x = np.asarray(x, dtype=float)
        return np.isfinite(x).all(axis=-1)

    def sample(self, n, rng, method="default"):
        if method == "grid":
            if self.dim == 1:
                return np.linspace(0.0, 2.0 * np.pi, n, endpoint=False)[:, None]
            m = max(1, int(round(n ** (1.0 / self.dim))))
            axes = [np.linspace(0.0, 2.0 * np.pi, m, endpoint=False)] * self.dim
            return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(
                -1, self.dim
            )
        return 2.0 * np.pi * rng.random((n, self.dim))

    def knn_proxy(self, x):
        x = np.asarray(x, dtype=float)
        cols = []
        for ax in range(self.dim):
            cols.append(np.cos(x[..., ax]))
            cols.append(np.sin(x[..., ax]))
        return np.stack(cols, axis=-1)

    knn_mode = "brute"  # per-axis chordal order can disagree across axes


# ---------------------------------------------------------------------------
# Surfaces of revolution
# ---------------------------------------------------------------------------


class SurfaceOfRevolution(ChartManifold):
    """Surface z = f(rho) of revolution, chart coordinates (rho, theta).

    Metric diag(1 + f'(rho)^2, rho^2); Christoffel symbols are closed-form.
    Geodesics are integrated; the log map is found by shooting.
    """

    has_closed_form = False
    periodic_axes = (1,)
    dim = 2
    rep_dim = 2
    knn_proxy_exact = False

    def __init__(self, name, fp, fpp, f, rho_range, sample_range, r_M_fn, i_M, c_M):
        self.name = name
        self._f = f
        self._fp = fp
        self._fpp = fpp
        self.rho_min, self.rho_max = rho_range
        self.sample_min, self.sample_max = sample_range
        self._r_M_fn = r_M_fn
        self.i_M = i_M
        self.c_M = c_M
        self._r_M = None

    def params(self):
        return {
            "rho_range": [self.rho_min, self.rho_max],
            "sample_range": [self.sample_min, self.sample_max],
        }

    def r_M(self, x=None):
        if x is None:
            # conservative global value at the sampling core
            return float(self._r_M_fn(np.array([self.sample_min, 0.0])))
        x = np.asarray(x, dtype=float)
        r = self._r_M_fn(x)
        return float(r) if np.ndim(r) == 0 else r

    def metric_matrix(self, x):
        x = np.asarray(x, dtype=float)
        rho = x[..., 0]
        E = 1.0 + self._fp(rho) ** 2
        G = np.zeros(x.shape[:-1] + (2, 2))
        G[..., 0, 0] = E
        G[..., 1, 1] = rho**2
        return G

    def christoffel(self, x):
        x = np.asarray(x, dtype=float)
        rho = x[..., 0]
        fp = self._fp(rho)
        fpp = self._fpp(rho)
        E = 1.0 + fp**2
        gam = np.zeros(x.shape[:-1] + (2, 2, 2))
        gam[..., 0, 0, 0] = fp * fpp / E
        gam[..., 0, 1, 1] = -rho / E
        gam[..., 1, 0, 1] = 1.0 / rho
        gam[..., 1, 1, 0] = 1.0 / rho
        return gam

    def contains(self, x):
        x = np.asarray(x, dtype=float)
        rho = x[..., 0]
        return (rho >= self.rho_min) & (rho <= self.rho_max)

    def sample(self, n, rng, method="default"):
        rho = self.sample_min + (self.sample_max - self.sample_min) * rng.random(n)
        th = 2.0 * np.pi * rng.random(n)
        return np.stack([rho, th], axis=-1)

    def embed(self, x):
        """Ambient R^3 coordinates (used for neighbor pre-filtering)."""
        x = np.asarray(x, dtype=float)
        rho, th = x[..., 0], x[..., 1]
        return np.stack([rho * np.cos(th), rho * np.sin(th), self._f(rho)], axis=-1)

    def knn_proxy(self, x):
        return self.embed(x)


def make_cusp():
    """z = 1/(x^2+y^2): the spike squeezes loops arbitrarily short, so the
    injectivity radius vanishes and the working radius shrinks with rho."""

    def f(r):
        return 1.0 / r**2

    def fp(r):
        return -2.0 / r**3

    def fpp(r):
        return 6.0 / r**4

    def r_M_fn(x):
        rho = np.asarray(x, dtype=float)[..., 0]
        return np.minimum(0.9, 1.1 * rho)

    return SurfaceOfRevolution(
        "cusp",
        fp,
        fpp,
        f,
        rho_range=(0.3, 6.0),
        sample_range=(0.8, 2.6),
        r_M_fn=r_M_fn,
        i_M=0.0,
        c_M=0.0,
    )


def make_funnel():
    """z = 1/(x^2+y^2-1), z > 0: waist circles stay longer than 2*pi, so the
    radii constants are strictly positive."""

    def f(r):
        return 1.0 / (r**2 - 1.0)

    def fp(r):
        return -2.0 * r / (r**2 - 1.0) ** 2

    def fpp(r):
        return (6.0 * r**2 + 2.0) / (r**2 - 1.0) ** 3

    def r_M_fn(x):
        x = np.asarray(x, dtype=float)
        out = np.full(x.shape[:-1], 1.2)
        return out if out.ndim else 1.2

    return SurfaceOfRevolution(
        "funnel",
        fp,
        fpp,
        f,
        rho_range=(1.06, 6.0),
        sample_range=(1.25, 2.6),
        r_M_fn=r_M_fn,
        i_M=np.pi,
        c_M=1.2,
    )


# ---------------------------------------------------------------------------
# Registry
# ---------------------------------------------------------------------------


def get_manifold(name: str, **kwargs) -> Manifold:
    name = name.lower()
    if name in ("euclidean", "euclidean2", "plane"):
        return Euclidean(dim=kwargs.pop("dim", 2), **kwargs)
    if name in ("euclidean1", "line"):
        return Euclidean(dim=1, **kwargs)
    if name == "euclidean3":
        return Euclidean(dim=3, **kwargs)
    if name == "sphere":
        return Sphere()
    if name == "hyperbolic":
        return Hyperbolic()
    if name == "torus":
        return FlatTorus(dim=2)
    if name == "circle":
        return FlatTorus(dim=1)
    if name == "cusp":
        return make_cusp()
    if name == "funnel":
        return make_funnel()
    raise ValueError(
        f"unknown manifold {name!r}; catalog: euclidean[1|2|3], sphere, "
        "hyperbolic, torus, circle, cusp, funnel"
    )


CATALOG_NAMES = [
    "euclidean1",
    "euclidean2",
    "euclidean3",
    "sphere",
    "hyperbolic",
    "torus",
    "circle",
    "cusp",
    "funnel",
]
