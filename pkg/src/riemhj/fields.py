"""Extended-real scalar fields, closed-form or discrete on a graph."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ExtendedRealError
from .graphs import GeodesicGraph
from .manifolds import Manifold

INF = np.inf


def xadd(a, b):
    """Extended-real sum; +inf absorbs, (+inf) + (-inf) is an error."""
    if (a == INF and b == -INF) or (a == -INF and b == INF):
        raise ExtendedRealError("(+inf) + (-inf) is undefined")
    return a + b


def xsub(a, b):
    """Extended-real difference; (+inf) - (+inf) is an error."""
    if a == INF and b == INF:
        raise ExtendedRealError("(+inf) - (+inf) is undefined")
    if a == -INF and b == -INF:
        raise ExtendedRealError("(-inf) - (-inf) is undefined")
    return a - b


@dataclass
class ScalarField:
    """Function M -> (-inf, +inf], closed-form (``fn``) or discrete
    (``values`` on ``graph``); both views must agree at vertices when both
    are present.  ``grad_fn`` optionally provides the analytic differential
    as a covector in the manifold representation."""

    manifold: Manifold
    fn: object = None
    grad_fn: object = None
    values: np.ndarray = None
    graph: GeodesicGraph = None
    name: str = ""

    def __post_init__(self):
        if self.fn is None and self.values is None:
            raise ValueError("a scalar field needs a closed form or vertex values")
        if self.values is not None:
            self.values = np.asarray(self.values, dtype=float)
            if self.graph is None:
                raise ValueError("discrete fields need their graph")

    @property
    def is_discrete(self) -> bool:
        return self.fn is None

    def __call__(self, coords) -> float:
        if self.fn is None:
            raise ValueError(f"field {self.name!r} has no closed form")
        return float(self.fn(np.asarray(coords, dtype=float)))

    def eval_many(self, coords) -> np.ndarray:
        coords = np.asarray(coords, dtype=float)
        if self.fn is None:
            raise ValueError(f"field {self.name!r} has no closed form")
        try:
            out = np.asarray(self.fn(coords), dtype=float)
            if out.shape == coords.shape[:-1]:
                return out
        except Exception:
            pass
        return np.array([float(self.fn(c)) for c in coords.reshape(-1, coords.shape[-1])]).reshape(
            coords.shape[:-1]
        )

    def vertex_values(self, graph: GeodesicGraph = None) -> np.ndarray:
        g = graph or self.graph
        if self.values is not None and (graph is None or graph is self.graph):
            return self.values
        if g is None:
            raise ValueError("no graph to evaluate the field on")
        return self.eval_many(g.cloud.points)

    def gradient(self, coords) -> np.ndarray:
        if self.grad_fn is None:
            raise ValueError(f"field {self.name!r} has no analytic differential")
        return np.asarray(self.grad_fn(np.asarray(coords, dtype=float)), dtype=float)

    def __neg__(self) -> "ScalarField":
        fn = None if self.fn is None else (lambda x, f=self.fn: -f(x))
        gfn = None if self.grad_fn is None else (lambda x, g=self.grad_fn: -g(x))
        vals = None if self.values is None else -self.values
        return ScalarField(
            self.manifold, fn=fn, grad_fn=gfn, values=vals, graph=self.graph,
            name=f"-({self.name})",
        )

    def __add__(self, other: "ScalarField") -> "ScalarField":
        if not isinstance(other, ScalarField):
            return NotImplemented
        if self.fn is None or other.fn is None:
            raise ValueError("field sums need closed forms")

        def fn(x, f=self.fn, g=other.fn):
            a = np.asarray(f(x), dtype=float)
            b = np.asarray(g(x), dtype=float)
            if np.any(np.isinf(a) & np.isinf(b) & (np.sign(a) != np.sign(b))):
                raise ExtendedRealError("(+inf) + (-inf) is undefined")
            return a + b

        return ScalarField(self.manifold, fn=fn, name=f"({self.name})+({other.name})")

    def __mul__(self, other: "ScalarField") -> "ScalarField":
        if not isinstance(other, ScalarField):
            return NotImplemented
        if self.fn is None or other.fn is None:
            raise ValueError("field products need closed forms")

        def fn(x, f=self.fn, g=other.fn):
            return np.asarray(f(x), dtype=float) * np.asarray(g(x), dtype=float)

        return ScalarField(self.manifold, fn=fn, name=f"({self.name})*({other.name})")


def discrete_field(graph: GeodesicGraph, values, name="") -> ScalarField:
    return ScalarField(graph.manifold, values=np.asarray(values, float), graph=graph, name=name)


# ---------------------------------------------------------------------------
# Catalog fields
# ---------------------------------------------------------------------------


def const_field(man: Manifold, c: float) -> ScalarField:
    return ScalarField(
        man,
        fn=lambda x, c=c: c if np.asarray(x).ndim == 1 else np.full(np.asarray(x).shape[:-1], c),
        grad_fn=lambda x: np.zeros(man.rep_dim),
        name=f"const:{c}",
    )


def linear_field(man: Manifold, a) -> ScalarField:
    """<a, x> on a Euclidean chart."""
    a = np.asarray(a, dtype=float)
    return ScalarField(
        man,
        fn=lambda x: np.einsum("...i,i->...", np.asarray(x, float), a),
        grad_fn=lambda x: a.copy(),
        name="linear",
    )


def abs_field(man: Manifold) -> ScalarField:
    """|x| on the 1-D Euclidean line."""
    return ScalarField(
        man, fn=lambda x: np.abs(np.asarray(x, float))[..., 0], name="abs"
    )


def sphere_height(man: Manifold) -> ScalarField:
    """z on the unit sphere; |df| = sin(polar angle) <= 1."""

    def grad(x):
        x = np.asarray(x, dtype=float)
        e3 = np.array([0.0, 0.0, 1.0])
        return e3 - x[..., 2][..., None] * x  # tangential projection of dz

    return ScalarField(
        man,
        fn=lambda x: np.asarray(x, float)[..., 2],
        grad_fn=grad,
        name="sphere_height",
    )


def dist_field(man: Manifold, p0) -> ScalarField:
    """d(., p0) on a closed-form manifold (1-Lipschitz, kinked at p0)."""
    p0 = np.asarray(p0, dtype=float)
    return ScalarField(
        man,
        fn=lambda x: man.dist(np.asarray(x, float), np.broadcast_to(p0, np.asarray(x, float).shape)),
        name="dist",
    )


def dist2_field(man: Manifold, p0) -> ScalarField:
    """d(., p0)^2; geodesically convex on Hadamard manifolds."""
    p0 = np.asarray(p0, dtype=float)

    def fn(x):
        x = np.asarray(x, dtype=float)
        d = man.dist(x, np.broadcast_to(p0, x.shape))
        return d * d

    return ScalarField(man, fn=fn, name="dist2")


def step_field(man: Manifold) -> ScalarField:
    """0 on [0, 1], 1 elsewhere (1-D): lower semicontinuous, discontinuous,
    everywhere subdifferentiable."""

    def fn(x):
        t = np.asarray(x, dtype=float)[..., 0]
        return np.where((t >= 0.0) & (t <= 1.0), 0.0, 1.0)

    return ScalarField(man, fn=fn, name="step")


def smooth_bounded_field(man: Manifold, p0) -> ScalarField:
    """sqrt(1 + d(., p0)^2): smooth with |df| <= 1 on Hadamard manifolds."""
    p0 = np.asarray(p0, dtype=float)

    def fn(x):
        x = np.asarray(x, dtype=float)
        d = man.dist(x, np.broadcast_to(p0, x.shape))
        return np.sqrt(1.0 + d * d)

    return ScalarField(man, fn=fn, name="smooth_bounded")
