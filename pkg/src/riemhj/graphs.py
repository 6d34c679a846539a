"""Point clouds, geodesic k-NN graphs, boundary partitions, and shortest
paths — the finite stage on which the searches and solvers run."""

from __future__ import annotations

import heapq
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .errors import DisconnectedGraphError
from .manifolds import Manifold


@dataclass
class PointCloud:
    manifold: Manifold
    points: np.ndarray  # (n, rep_dim)
    seed: int
    method: str = "default"

    @property
    def n(self) -> int:
        return self.points.shape[0]


def sample(manifold: Manifold, n: int, seed: int, method: str = "default") -> PointCloud:
    """Deterministic per-manifold point sample.

    Schemes: sphere draws normalized Gaussians, the torus uniform angles,
    the hyperbolic plane area-weighted points in a disk, Euclidean boxes
    and surfaces of revolution uniform chart coordinates.  ``method="grid"``
    gives regular grids where the manifold supports them.
    """
    if n < 1:
        raise ValueError("sample needs n >= 1")
    rng = np.random.default_rng(seed)
    pts = manifold.sample(n, rng, method=method)
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    inside = manifold.contains(pts)
    if not np.all(inside):
        raise ValueError(f"{manifold.name}: sampler produced out-of-domain points")
    return PointCloud(manifold=manifold, points=pts, seed=seed, method=method)


@dataclass
class GeodesicGraph:
    cloud: PointCloud
    edges: np.ndarray  # (m, 2) int, i < j
    lengths: np.ndarray  # (m,)
    k: int
    h: float  # max edge length

    adjacency: list = field(default=None, repr=False)
    _charts: dict = field(default_factory=dict, repr=False)

    @property
    def manifold(self) -> Manifold:
        return self.cloud.manifold

    @property
    def n(self) -> int:
        return self.cloud.n

    def neighbors(self, i: int):
        """List of (j, length) pairs, ordered by vertex index."""
        if self.adjacency is None:
            adj = [[] for _ in range(self.n)]
            for (a, b), l in zip(self.edges, self.lengths):
                adj[a].append((int(b), float(l)))
                adj[b].append((int(a), float(l)))
            self.adjacency = [sorted(lst) for lst in adj]
        return self.adjacency[i]

    def vertex_chart(self, i: int):
        """Normal-chart data at vertex i: (neighbor ids, chart coords of the
        neighbors, frame, local h).  Cached; charts for every vertex are
        built in one batched log call on first use."""
        if "X" not in self._charts:
            self._build_charts()
        ids = self._charts["ids"][i]
        X = self._charts["X"][i]
        frame = self._charts["frames"][i]
        h_loc = self._charts["hloc"][i]
        return ids, X, frame, h_loc

    def _build_charts(self):
        man = self.manifold
        pts = self.cloud.points
        pairs_i, pairs_j = [], []
        for i in range(self.n):
            for j, _ in self.neighbors(i):
                pairs_i.append(i)
                pairs_j.append(j)
        pairs_i = np.array(pairs_i, dtype=int)
        pairs_j = np.array(pairs_j, dtype=int)
        logs = _log_many(man, pts[pairs_i], pts[pairs_j])
        frames = man.frame(pts)
        # frame components of each log vector
        comp = np.stack(
            [
                man.inner(pts[pairs_i], frames[pairs_i][:, k, :], logs)
                for k in range(man.dim)
            ],
            axis=-1,
        )
        ids, X, hloc = [], [], np.zeros(self.n)
        start = 0
        for i in range(self.n):
            deg = len(self.neighbors(i))
            sl = slice(start, start + deg)
            ids.append(pairs_j[sl])
            X.append(comp[sl])
            lens = np.linalg.norm(comp[sl], axis=-1)
            hloc[i] = lens.max() if deg else 0.0
            start += deg
        self._charts = {"ids": ids, "X": X, "frames": frames, "hloc": hloc}


def _log_many(man, X, Y):
    if man.has_closed_form:
        return man.log(X, Y)
    from .manifolds import ode

    V, ok = ode.shoot_log(man, X, Y)
    if not ok.all():
        raise ValueError(
            f"{man.name}: log shooting failed while building vertex charts"
        )
    return V


def build_graph(cloud: PointCloud, k: int) -> GeodesicGraph:
    """Symmetric k-nearest-neighbor graph with geodesic edge lengths.

    Neighbor candidates come from a chart/ambient-coordinate pre-filter and
    are re-ranked by exact geodesic length; ties break by vertex index so
    construction is deterministic.  Edges at or beyond the working radius
    are dropped with a warning; a disconnected result is an error naming
    the components.
    """
    if k < 1:
        raise ValueError("build_graph needs k >= 1")
    man = cloud.manifold
    pts = cloud.points
    n = cloud.n
    if n < 2:
        raise ValueError("build_graph needs at least 2 points")
    k = min(k, n - 1)
    mode = getattr(man, "knn_mode", "kdtree_exact" if man.knn_proxy_exact else "kdtree_prefilter")
    if mode == "brute":
        # exact closed-form distances, chunked row blocks; the proxy orders
        # of these manifolds are not order-faithful
        kq = min(n - 1, max(k, 1))
        src_list, dst_list, len_list = [], [], []
        chunk = max(1, min(n, 4_000_000 // n))
        for lo in range(0, n, chunk):
            hi = min(n, lo + chunk)
            block = man.dist(pts[lo:hi, None, :], pts[None, :, :])
            for row, i in enumerate(range(lo, hi)):
                d = block[row]
                order = np.lexsort((np.arange(n), d))
                order = order[order != i][: kq + 8]
                src_list.append(np.full(order.size, i))
                dst_list.append(order)
                len_list.append(d[order])
        src = np.concatenate(src_list)
        dst = np.concatenate(dst_list)
        lens = np.concatenate(len_list)
    else:
        proxy = man.knn_proxy(pts)
        tree = cKDTree(proxy)
        extra = 0 if mode == "kdtree_exact" else max(12, 2 * k)
        kq = min(n, k + 1 + extra)
        _, idx = tree.query(proxy, k=kq)
        if idx.ndim == 1:
            idx = idx[:, None]
        # exact geodesic lengths for all candidate pairs in one batch
        src = np.repeat(np.arange(n), idx.shape[1])
        dst = idx.reshape(-1)
        keep = src != dst
        src, dst = src[keep], dst[keep]
        lens = _pair_lengths(man, pts, src, dst)

    # per-vertex selection of the k nearest by (length, index)
    order = np.lexsort((dst, lens, src))
    src, dst, lens = src[order], dst[order], lens[order]
    chosen = {}
    start = 0
    counts = np.bincount(src, minlength=n)
    offsets = np.concatenate([[0], np.cumsum(counts)])
    r_edge = _edge_radius(man, pts)
    dropped = 0
    for i in range(n):
        sl = slice(offsets[i], offsets[i + 1])
        cand_j = dst[sl]
        cand_l = lens[sl]
        picked = 0
        for j, l in zip(cand_j, cand_l):
            if picked >= k:
                break
            if not np.isfinite(l):
                continue
            limit = min(r_edge[i], r_edge[j])
            if l >= limit:
                dropped += 1
                continue
            key = (min(i, j), max(i, j))
            if key not in chosen:
                chosen[key] = l
            picked += 1
    if dropped:
        warnings.warn(
            f"build_graph: dropped {dropped} candidate edges at or beyond r_M",
            stacklevel=2,
        )
    edges = np.array(sorted(chosen.keys()), dtype=int).reshape(-1, 2)
    lengths = np.array([chosen[tuple(e)] for e in edges])
    graph = GeodesicGraph(
        cloud=cloud, edges=edges, lengths=lengths, k=k, h=float(lengths.max())
    )
    comps = _components(graph)
    if len(comps) > 1:
        raise DisconnectedGraphError(comps)
    return graph


def _edge_radius(man, pts):
    r = man.r_M(pts)
    if np.isscalar(r):
        return np.full(pts.shape[0], float(r))
    return np.asarray(r, dtype=float)


def _pair_lengths(man, pts, src, dst):
    X, Y = pts[src], pts[dst]
    if man.has_closed_form:
        return np.asarray(man.dist(X, Y), dtype=float)
    from .manifolds import ode

    V, ok = ode.shoot_log(man, X, Y)
    lens = man.norm(X, V)
    lens[~ok] = np.inf  # unreachable candidates are simply not edges
    return lens


def _components(graph: GeodesicGraph):
    n = graph.n
    seen = np.zeros(n, dtype=bool)
    comps = []
    for s in range(n):
        if seen[s]:
            continue
        stack = [s]
        seen[s] = True
        comp = []
        while stack:
            u = stack.pop()
            comp.append(u)
            for v, _ in graph.neighbors(u):
                if not seen[v]:
                    seen[v] = True
                    stack.append(v)
        comps.append(comp)
    return comps


# ---------------------------------------------------------------------------
# Boundary partitions
# ---------------------------------------------------------------------------


@dataclass
class BoundarySet:
    graph: GeodesicGraph
    boundary: np.ndarray  # vertex indices
    interior: np.ndarray
    region: object = None  # the defining predicate


def partition(graph: GeodesicGraph, region) -> BoundarySet:
    """Split vertices by a region predicate Omega.

    Boundary = Omega-vertices adjacent to a non-Omega vertex, plus
    non-Omega vertices adjacent to Omega; interior = remaining
    Omega-vertices.
    """
    pred = region.contains if hasattr(region, "contains") else region
    inside = np.array([bool(pred(p)) for p in graph.cloud.points])
    if not inside.any():
        raise ValueError("partition: the region is empty on the cloud")
    boundary = []
    for i in range(graph.n):
        nbr_in = [inside[j] for j, _ in graph.neighbors(i)]
        if inside[i] and not all(nbr_in):
            boundary.append(i)
        elif not inside[i] and any(nbr_in):
            boundary.append(i)
    if not boundary:
        raise ValueError("partition: no boundary (all vertices inside the region)")
    boundary = np.array(sorted(boundary), dtype=int)
    interior = np.array(
        [i for i in range(graph.n) if inside[i] and i not in set(boundary.tolist())],
        dtype=int,
    )
    if interior.size == 0:
        raise ValueError("partition: no interior vertices")
    return BoundarySet(graph=graph, boundary=boundary, interior=interior, region=region)


# ---------------------------------------------------------------------------
# Shortest-path distance fields
# ---------------------------------------------------------------------------


def graph_distance(graph: GeodesicGraph, sources) -> np.ndarray:
    """Multi-source shortest-path distances.

    Relaxed labels are nudged one ulp below the floating sum so the field
    is 1-Lipschitz along every edge under exact float comparison.
    """
    sources = np.atleast_1d(np.asarray(sources, dtype=int))
    if sources.size == 0:
        raise ValueError("graph_distance needs a nonempty source set")
    dist = np.full(graph.n, np.inf)
    heap = []
    for s in sources:
        dist[s] = 0.0
        heap.append((0.0, int(s)))
    heapq.heapify(heap)
    while heap:
        d, u = heapq.heappop(heap)
        if d > dist[u]:
            continue
        for v, l in graph.neighbors(u):
            nd = np.nextafter(d + l, -np.inf)
            if nd < dist[v]:
                dist[v] = nd
                heapq.heappush(heap, (nd, v))
    return dist


def graph_distance_between(graph: GeodesicGraph, x_coords, y_coords) -> float:
    """Upper bound on d(x, y) through the graph: snap both points to their
    nearest vertices and add the snap lengths."""
    man = graph.manifold
    pts = graph.cloud.points
    proxy = man.knn_proxy(pts)
    tree = cKDTree(proxy)
    xi = int(tree.query(man.knn_proxy(np.atleast_2d(x_coords)))[1][0])
    yi = int(tree.query(man.knn_proxy(np.atleast_2d(y_coords)))[1][0])
    d = graph_distance(graph, [xi])[yi]
    dx = _snap_length(man, x_coords, pts[xi])
    dy = _snap_length(man, y_coords, pts[yi])
    return float(d + dx + dy)


def _snap_length(man, a, b):
    if man.has_closed_form:
        return float(man.dist(np.asarray(a, float), np.asarray(b, float)))
    from .manifolds import ode

    V, ok = ode.shoot_log(man, np.atleast_2d(a), np.atleast_2d(b))
    if not ok[0]:
        return np.inf
    return float(man.norm(np.atleast_2d(a), V)[0])


def all_pairs_distance(graph: GeodesicGraph, cap: int = 4_000_000) -> np.ndarray:
    """Dense all-pairs graph distance (n^2 capped)."""
    if graph.n * graph.n > cap:
        raise ValueError(f"all-pairs table would exceed the {cap} pair cap")
    out = np.empty((graph.n, graph.n))
    for i in range(graph.n):
        out[i] = graph_distance(graph, [i])
    return out


# ---------------------------------------------------------------------------
# Named regions for the CLI and fixtures
# ---------------------------------------------------------------------------


@dataclass
class Region:
    """Region predicate with an optional analytic distance-to-boundary."""

    name: str
    contains: object
    analytic_distance: object = None  # coords -> d(x, boundary), when known


def region_from_spec(manifold: Manifold, spec: str) -> Region:
    """Parse a region string.

    Forms: ``hemisphere`` (sphere, z > 0), ``box:x0,x1,y0,y1`` (Euclidean),
    ``disk:cx,cy,r`` (chart disk), ``ball:r`` (distance ball around a
    canonical center).
    """
    kind, _, rest = spec.partition(":")
    if kind == "hemisphere":
        if manifold.name != "sphere":
            raise ValueError("hemisphere region is defined on the sphere")

        def analytic(x):
            z = np.clip(np.asarray(x, float)[..., 2], -1.0, 1.0)
            return np.abs(np.arcsin(z))

        return Region("hemisphere", lambda p: p[2] > 0.0, analytic)
    if kind == "box":
        vals = [float(s) for s in rest.split(",")]
        if len(vals) % 2:
            raise ValueError("box region needs an even number of bounds")
        lo = np.array(vals[0::2])
        hi = np.array(vals[1::2])

        def inside(p, lo=lo, hi=hi):
            p = np.asarray(p, float)
            return bool(np.all(p > lo) and np.all(p < hi))

        def analytic(x, lo=lo, hi=hi):
            x = np.asarray(x, float)
            m1 = np.min(x - lo, axis=-1)
            m2 = np.min(hi - x, axis=-1)
            return np.minimum(m1, m2)

        return Region(f"box:{rest}", inside, analytic)
    if kind == "disk":
        cx, cy, r = (float(s) for s in rest.split(","))
        center = np.array([cx, cy])

        def inside(p, c=center, r=r):
            return bool(np.linalg.norm(np.asarray(p, float) - c) < r)

        def analytic(x, c=center, r=r):
            x = np.asarray(x, float)
            return np.abs(r - np.linalg.norm(x - c, axis=-1))

        return Region(f"disk:{rest}", inside, analytic)
    raise ValueError(f"unknown region spec {spec!r}")
