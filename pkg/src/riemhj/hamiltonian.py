"""Hamiltonians on the cotangent bundle, the intrinsic-continuity probe,
and pullback under catalog diffeomorphisms.

A Hamiltonian evaluates F(x, zeta) with zeta in the manifold's covector
representation.  The ``norm_based`` structure F(x, zeta) = H(||zeta||_x)
- f(x), with H nondecreasing, is what the monotone solver requires;
general Hamiltonians get verification and Perron lifting only.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import GeometryError
from .fields import ScalarField
from .geometry import CotangentVector, Point, covector_gap
from .manifolds import Manifold


@dataclass
class Hamiltonian:
    manifold: Manifold
    fn: object  # (x_coords, zeta_rep) -> float
    tag: str = "general"  # "general" | "norm_based"
    H: object = None  # scalar profile, norm_based only
    f: ScalarField = None  # source field, norm_based only
    A: float = None  # zero-section bound: -A <= F(x, 0_x) <= A
    name: str = ""

    def __call__(self, x_coords, zeta_rep) -> float:
        return float(self.fn(np.asarray(x_coords, float), np.asarray(zeta_rep, float)))

    def at(self, p: Point, zeta: CotangentVector) -> float:
        return self(p.coords, zeta.components)

    def zero_section_bound(self, sample_coords) -> float:
        vals = np.array(
            [abs(self(x, np.zeros(self.manifold.rep_dim))) for x in sample_coords]
        )
        return float(vals.max())


def norm_based(manifold: Manifold, H, f: ScalarField, A: float = None, name="") -> Hamiltonian:
    """F(x, zeta) = H(||zeta||_x) - f(x) with H nondecreasing.

    H's monotonicity is validated on a probe grid at construction.
    """
    s = np.linspace(0.0, 10.0, 101)
    Hs = np.array([float(H(v)) for v in s])
    if np.any(np.diff(Hs) < -1e-12):
        raise ValueError("norm_based Hamiltonians need a nondecreasing profile H")
    if not np.isfinite(Hs[0]):
        raise ValueError("H(0) must be finite")

    def fn(x, zeta, man=manifold, H=H, f=f):
        return float(H(man.dual_norm(x, zeta))) - float(f.fn(x))

    return Hamiltonian(
        manifold=manifold, fn=fn, tag="norm_based", H=H, f=f, A=A, name=name
    )


# named H profiles for the CLI
def h_profile(spec) -> object:
    """Profiles: "linear" (H(s) = s) or {"profile": "table", "s": [...],
    "H": [...]} for monotone piecewise-linear interpolation."""
    if spec == "linear" or (isinstance(spec, dict) and spec.get("profile") == "linear"):
        return lambda s: s
    if isinstance(spec, dict) and spec.get("profile") == "table":
        ss = np.asarray(spec["s"], dtype=float)
        hh = np.asarray(spec["H"], dtype=float)
        if np.any(np.diff(ss) <= 0) or np.any(np.diff(hh) < 0):
            raise ValueError("table profile must be strictly increasing in s and nondecreasing in H")
        return lambda s, ss=ss, hh=hh: float(np.interp(s, ss, hh))
    raise ValueError(f"unknown H profile {spec!r}")


# ---------------------------------------------------------------------------
# Intrinsic uniform continuity probe
# ---------------------------------------------------------------------------


def intrinsic_modulus_probe(
    F: Hamiltonian,
    graph,
    delta_grid,
    covector_cap: float = 5.0,
    n_samples: int = 400,
    seed: int = 0,
) -> dict:
    """Empirical modulus table: for each delta, the max of
    |F(x, zeta) - F(y, xi)| over sampled pairs with d(x, y) <= delta and
    transport gap ||zeta - L_yx(xi)||_x <= delta.

    Samples for smaller deltas are reused at larger ones, so the table is
    nondecreasing by construction.  Entries at or beyond r_M are skipped.
    """
    rng = np.random.default_rng(seed)
    man = F.manifold
    pts = graph.cloud.points
    deltas = np.sort(np.asarray(delta_grid, dtype=float))
    r = man.r_M(pts)
    r_min = float(np.min(r)) if not np.isscalar(r) else float(r)
    table = {}
    samples = []  # (value gap) accumulated across deltas
    for delta in deltas:
        if delta >= r_min:
            continue
        made = 0
        guard = 0
        while made < n_samples and guard < 50 * n_samples:
            guard += 1
            i = int(rng.integers(graph.n))
            x = pts[i]
            # a nearby point at distance <= delta along a random direction
            frame = man.frame(x)
            c = rng.normal(size=man.dim)
            c /= np.linalg.norm(c)
            t = delta * rng.random()
            y = man.exp(x, t * (c @ frame))
            if not bool(np.atleast_1d(man.contains(y))[0]):
                continue
            zc = rng.normal(size=man.dim)
            zc = zc / np.linalg.norm(zc) * covector_cap * rng.random()
            zeta = _cov_from_frame(man, x, frame, zc)
            # xi = transported zeta plus a gap <= delta
            p = Point(man, x)
            q = Point(man, y)
            moved = man.lower(y, man.transport(x, y, man.raise_(x, zeta)))
            gc = rng.normal(size=man.dim)
            gc /= np.linalg.norm(gc)
            gap = delta * rng.random()
            xi = moved + _cov_from_frame(man, y, man.frame(y), gc * gap)
            val = abs(F(x, zeta) - F(y, xi))
            samples.append((float(delta), val))
            made += 1
        vals = [v for d0, v in samples if d0 <= delta + 1e-15]
        table[float(delta)] = float(max(vals)) if vals else 0.0
    # enforce monotonicity against sampling order quirks
    keys = sorted(table)
    best = 0.0
    for k in keys:
        best = max(best, table[k])
        table[k] = best
    return table


def _cov_from_frame(man, x, frame, comps):
    lowered = np.stack([man.lower(x, frame[k]) for k in range(man.dim)])
    return np.einsum("k,kj->j", np.asarray(comps, float), lowered)


# ---------------------------------------------------------------------------
# Diffeomorphisms and pullback
# ---------------------------------------------------------------------------


@dataclass
class Diffeo:
    """Diffeomorphism psi: N -> M with chart-coordinate Jacobian evaluators."""

    domain: Manifold  # N
    codomain: Manifold  # M
    map: object  # x_N -> x_M
    inverse: object  # x_M -> x_N
    dmap: object  # x_N -> (rep_M, rep_N) Jacobian matrix
    name: str = "psi"

    def dinverse(self, y_coords) -> np.ndarray:
        return np.linalg.inv(self.dmap(self.inverse(y_coords)))

    def jacobian_condition(self, x_coords) -> float:
        return float(np.linalg.cond(self.dmap(x_coords)))


def identity_diffeo(man: Manifold) -> Diffeo:
    eye = np.eye(man.rep_dim)
    return Diffeo(
        domain=man,
        codomain=man,
        map=lambda x: np.asarray(x, float),
        inverse=lambda y: np.asarray(y, float),
        dmap=lambda x: eye.copy(),
        name="identity",
    )


def funnel_to_cusp(funnel: Manifold, cusp: Manifold) -> Diffeo:
    """The catalog two-surface map: in chart coordinates (rho, theta) it
    sends rho to sqrt(rho^2 - 1) and keeps theta, matching heights
    1/(rho^2 - 1) = 1/rho'^2 between the funnel and the cusp."""

    def fwd(x):
        x = np.asarray(x, dtype=float)
        rho = x[..., 0]
        return np.stack([np.sqrt(rho**2 - 1.0), x[..., 1]], axis=-1)

    def inv(y):
        y = np.asarray(y, dtype=float)
        rho = y[..., 0]
        return np.stack([np.sqrt(rho**2 + 1.0), y[..., 1]], axis=-1)

    def dfwd(x):
        rho = float(np.asarray(x, dtype=float)[..., 0])
        return np.array([[rho / np.sqrt(rho**2 - 1.0), 0.0], [0.0, 1.0]])

    return Diffeo(domain=funnel, codomain=cusp, map=fwd, inverse=inv, dmap=dfwd,
                  name="funnel_to_cusp")


def pullback(F: Hamiltonian, psi: Diffeo) -> Hamiltonian:
    """G(x, eta) = F(psi(x), eta o d(psi^{-1})(psi(x))) on T*N.

    Covector components transform by the inverse Jacobian on the right;
    a non-invertible differential at an evaluation point is an error.
    """
    if psi.codomain is not F.manifold and psi.codomain.name != F.manifold.name:
        raise GeometryError("pullback: psi's codomain must carry F")

    def fn(x, eta, F=F, psi=psi):
        J = psi.dmap(x)
        det = np.linalg.det(J)
        if not np.isfinite(det) or abs(det) < 1e-14:
            raise GeometryError(f"pullback: singular differential at {x}")
        zeta = np.asarray(eta, float) @ np.linalg.inv(J)
        return F(psi.map(x), zeta)

    return Hamiltonian(
        manifold=psi.domain,
        fn=fn,
        tag="general",
        A=F.A,
        name=f"{F.name or 'F'} o T*{psi.name}",
    )


def pushforward(G: Hamiltonian, psi: Diffeo) -> Hamiltonian:
    """F on M with pullback(F, psi) == G; i.e. F(y, zeta) = G(psi^{-1}(y),
    zeta o d psi(psi^{-1}(y)))."""

    def fn(y, zeta, G=G, psi=psi):
        x = psi.inverse(y)
        J = psi.dmap(x)
        eta = np.asarray(zeta, float) @ J
        return G(x, eta)

    return Hamiltonian(
        manifold=psi.codomain, fn=fn, tag="general", A=G.A,
        name=f"{G.name or 'G'} o T*{psi.name}^-1",
    )
