"""JSON/CSV serialization for clouds, graphs, fields, and reports.

Formats:
  * cloud/graph JSON: ``{"manifold": spec, "points": [...], "edges": [[i, j], ...],
    "lengths": [...], "k": k, "h": h, "seed": seed, "method": tag}``
  * field CSV: header ``vertex_index,value`` with ``inf`` for the
    extended-real sentinel; JSON mirror: ``{"values": [...]}``.
  * Hamiltonian JSON: ``{"tag": ..., "H": {"profile": ...}, "f": ..., "A": ...}``.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .graphs import GeodesicGraph, PointCloud
from .manifolds import get_manifold


def _jsonable(x):
    if isinstance(x, np.ndarray):
        return [_jsonable(v) for v in x.tolist()]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        if np.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return x


def _unfloat(v):
    if v == "inf":
        return np.inf
    if v == "-inf":
        return -np.inf
    return float(v)


def save_json(path, obj):
    Path(path).write_text(json.dumps(_jsonable(obj), indent=1, sort_keys=True))


def load_json(path):
    return json.loads(Path(path).read_text())


def save_cloud(path, cloud: PointCloud):
    save_json(
        path,
        {
            "manifold": cloud.manifold.spec(),
            "points": cloud.points,
            "seed": cloud.seed,
            "method": cloud.method,
        },
    )


def load_cloud(path) -> PointCloud:
    data = load_json(path)
    spec = data["manifold"]
    man = get_manifold(spec["name"])
    return PointCloud(
        manifold=man,
        points=np.asarray(data["points"], dtype=float),
        seed=int(data["seed"]),
        method=data.get("method", "default"),
    )


def save_graph(path, graph: GeodesicGraph):
    save_json(
        path,
        {
            "manifold": graph.manifold.spec(),
            "points": graph.cloud.points,
            "seed": graph.cloud.seed,
            "method": graph.cloud.method,
            "edges": graph.edges,
            "lengths": graph.lengths,
            "k": graph.k,
            "h": graph.h,
        },
    )


def load_graph(path) -> GeodesicGraph:
    data = load_json(path)
    man = get_manifold(data["manifold"]["name"])
    cloud = PointCloud(
        manifold=man,
        points=np.asarray(data["points"], dtype=float),
        seed=int(data["seed"]),
        method=data.get("method", "default"),
    )
    return GeodesicGraph(
        cloud=cloud,
        edges=np.asarray(data["edges"], dtype=int).reshape(-1, 2),
        lengths=np.asarray(data["lengths"], dtype=float),
        k=int(data["k"]),
        h=float(data["h"]),
    )


def save_field_csv(path, values):
    values = np.asarray(values, dtype=float)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["vertex_index", "value"])
        for i, v in enumerate(values):
            if np.isinf(v):
                w.writerow([i, "inf" if v > 0 else "-inf"])
            else:
                w.writerow([i, repr(float(v))])


def load_field_csv(path) -> np.ndarray:
    out = []
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        if header[:2] != ["vertex_index", "value"]:
            raise ValueError(f"bad field CSV header: {header}")
        for row in r:
            out.append(_unfloat(row[1]))
    return np.array(out)


def save_field(path, values, fmt="csv"):
    if fmt == "csv":
        save_field_csv(path, values)
    elif fmt == "json":
        save_json(path, {"values": np.asarray(values, dtype=float)})
    else:
        raise ValueError(f"unknown field format {fmt!r}")


def load_field(path) -> np.ndarray:
    path = str(path)
    if path.endswith(".json"):
        data = load_json(path)
        return np.array([_unfloat(v) for v in data["values"]])
    return load_field_csv(path)
