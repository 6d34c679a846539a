"""Deterministic command-line driver.

Subcommands: ``sample``, ``graph``, ``solve``, ``check``, ``pullback-demo``.
Exit codes: 0 = pass, 1 = assertion/verification failure, 2 = input error.
Standard output ends with a machine-parsable line
``STATUS=<ok|fail|error> SUITE=<name> MAX_RESIDUAL=<float>``.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, dataclass, field

import numpy as np

from . import graphs as rg
from . import serialize as io
from .demo import pullback_demo
from .errors import DisconnectedGraphError
from .fields import ScalarField, const_field, sphere_height
from .hamiltonian import h_profile, norm_based
from .manifolds import get_manifold
from .solve import eikonal_solve, stationary_solve
from .suites import SUITES, run_suite
from .viscosity import verify_viscosity


@dataclass
class RunConfig:
    """Everything a run needs; reproducible from (config, seed)."""

    manifold: str = "sphere"
    n: int = 1000
    k: int = 8
    seed: int = 0
    tol: float = 1e-9
    out: str = None
    report: str = None
    fmt: str = "csv"
    suite: str = "all"
    boundary: str = None
    hamiltonian: str = None
    cloud: str = None
    graph: str = None
    equation: str = "eikonal"
    identity: bool = False

    @classmethod
    def from_args(cls, args) -> "RunConfig":
        cfg = cls()
        if getattr(args, "config", None):
            data = io.load_json(args.config)
            for key, val in data.items():
                if not hasattr(cfg, key):
                    raise ValueError(f"unknown config key {key!r}")
                setattr(cfg, key, val)
        for key in vars(cfg):
            val = getattr(args, key, None)
            if val is not None:
                setattr(cfg, key, val)
        return cfg


def _status(state: str, suite: str, residual: float) -> None:
    print(f"STATUS={state} SUITE={suite} MAX_RESIDUAL={residual:.6g}")


def _fail(msg: str, suite: str = "-", code: int = 2) -> int:
    print(f"error: {msg}", file=sys.stderr)
    _status("error" if code == 2 else "fail", suite, float("nan"))
    return code


def cmd_sample(cfg: RunConfig) -> int:
    try:
        man = get_manifold(cfg.manifold)
        cloud = rg.sample(man, cfg.n, cfg.seed, method=getattr(cfg, "method", "default"))
    except (ValueError, KeyError) as e:
        return _fail(str(e))
    out = cfg.out or f"cloud_{cfg.manifold}_{cfg.n}_{cfg.seed}.json"
    io.save_cloud(out, cloud)
    print(f"cloud: manifold={cfg.manifold} n={cloud.n} seed={cfg.seed} -> {out}")
    _status("ok", "sample", 0.0)
    return 0


def cmd_graph(cfg: RunConfig) -> int:
    try:
        if cfg.cloud:
            cloud = io.load_cloud(cfg.cloud)
        else:
            cloud = rg.sample(get_manifold(cfg.manifold), cfg.n, cfg.seed)
        graph = rg.build_graph(cloud, cfg.k)
    except DisconnectedGraphError as e:
        return _fail(f"disconnected: {e}")
    except (ValueError, KeyError) as e:
        return _fail(str(e))
    out = cfg.out or f"graph_{cloud.manifold.name}_{cloud.n}_k{cfg.k}.json"
    io.save_graph(out, graph)
    print(
        f"graph: n={graph.n} k={graph.k} edges={len(graph.edges)} "
        f"h={graph.h:.6g} connected=yes -> {out}"
    )
    _status("ok", "graph", 0.0)
    return 0


def _named_field(man, spec):
    if spec is None:
        raise ValueError("missing field spec")
    if isinstance(spec, dict):
        kind = spec.get("kind")
        if kind == "const":
            return const_field(man, float(spec["value"]))
        if kind == "csv":
            raise ValueError("csv field refs need a graph context")
        if kind == "named":
            spec = spec["name"]
    if isinstance(spec, str):
        if spec.startswith("const:"):
            return const_field(man, float(spec.split(":", 1)[1]))
        if spec == "sphere_height":
            return sphere_height(man)
        if spec == "circle_sin":
            return ScalarField(man, fn=lambda x: np.sin(np.asarray(x, float)[..., 0]))
    raise ValueError(f"unknown field spec {spec!r}")


def cmd_solve(cfg: RunConfig) -> int:
    try:
        if not cfg.graph:
            raise ValueError("solve needs --graph")
        graph = io.load_graph(cfg.graph)
        man = graph.manifold
    except (ValueError, OSError, KeyError) as e:
        return _fail(str(e))

    report = {"equation": cfg.equation, "tol": cfg.tol, "h": graph.h, "n": graph.n}
    if cfg.equation == "eikonal":
        if not cfg.boundary:
            return _fail("eikonal solve needs --boundary")
        try:
            region = rg.region_from_spec(man, cfg.boundary)
            bnd = rg.partition(graph, region)
            u = eikonal_solve(graph, bnd)
        except (ValueError, KeyError) as e:
            return _fail(str(e))
        from .hamiltonian import Hamiltonian

        F = Hamiltonian(man, fn=lambda x, z: float(man.dual_norm(x, z)) - 1.0)
        vrep = verify_viscosity(u, F, graph, bands=bnd, zeroth_order=False)
        resid = max(vrep.max_sub, vrep.max_super)
        report["viscosity"] = vrep.to_json()
        report["boundary_size"] = int(bnd.boundary.size)
        if region.analytic_distance is not None:
            ana = region.analytic_distance(graph.cloud.points)
            mask = np.zeros(graph.n, bool)
            mask[bnd.interior] = True
            report["error_vs_analytic"] = float(np.abs(u[mask] - ana[mask]).max())
        bound = cfg.tol + 3.0 * graph.h
    elif cfg.equation == "stationary":
        if not cfg.hamiltonian:
            return _fail("stationary solve needs --hamiltonian")
        try:
            spec = io.load_json(cfg.hamiltonian)
            H = h_profile(spec.get("H", "linear"))
            f = _named_field(man, spec.get("f"))
            A = spec.get("A")
            F = norm_based(man, H, f, A=None if A is None else float(A))
            u, srep = stationary_solve(F, graph, tol=cfg.tol)
        except (ValueError, OSError, KeyError) as e:
            return _fail(str(e))
        report["solve"] = srep.to_json()
        vrep = verify_viscosity(u, F, graph, zeroth_order=True)
        report["viscosity"] = vrep.to_json()
        resid = max(vrep.max_sub, vrep.max_super)
        bound = cfg.tol + 3.0 * graph.h
    else:
        return _fail(f"unknown equation {cfg.equation!r}")

    out = cfg.out or f"field_{cfg.equation}.{cfg.fmt}"
    io.save_field(out, u, fmt=cfg.fmt)
    if cfg.report:
        io.save_json(cfg.report, report)
    print(json.dumps(report, default=float))
    if resid > 10.0 * max(cfg.tol, 1e-30) and resid > bound:
        _status("fail", f"solve-{cfg.equation}", resid)
        return 1
    _status("ok", f"solve-{cfg.equation}", resid)
    return 0


def cmd_check(cfg: RunConfig, tol_given: bool) -> int:
    if cfg.suite not in SUITES:
        return _fail(f"unknown suite {cfg.suite!r}; choose from {SUITES}")
    tol = cfg.tol if tol_given else None
    results = run_suite(cfg.suite, seed=cfg.seed, tol=tol)
    entries = [
        {"name": n, "passed": bool(p), "residual": None if r is None else float(r)}
        for n, p, r in results
    ]
    report = {"suite": cfg.suite, "seed": cfg.seed, "checks": entries}
    if cfg.report:
        io.save_json(cfg.report, report)
    print(json.dumps(report, default=float))
    failures = [e for e in entries if not e["passed"]]
    max_resid = max((e["residual"] for e in entries if e["residual"] is not None),
                    default=0.0)
    if failures:
        print(f"first failing check: {failures[0]['name']}", file=sys.stderr)
        _status("fail", cfg.suite, max_resid)
        return 1
    _status("ok", cfg.suite, max_resid)
    return 0


def cmd_pullback_demo(cfg: RunConfig) -> int:
    res = pullback_demo(n=cfg.n, seed=cfg.seed, k=cfg.k, tol=cfg.tol,
                        identity=cfg.identity)
    print(json.dumps(res.to_json(), default=float))
    if cfg.report:
        io.save_json(cfg.report, res.to_json())
    resid = max(res.n_side_sub, res.n_side_super, res.m_side_sub, res.m_side_super)
    if not res.passed:
        _status("fail", "pullback-demo", resid)
        return 1
    _status("ok", "pullback-demo", resid)
    return 0


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="riemhj", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file; flags override it")
        p.add_argument("--manifold")
        p.add_argument("--n", type=int)
        p.add_argument("--k", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--tol", type=float)
        p.add_argument("--out")
        p.add_argument("--report")
        p.add_argument("--format", dest="fmt", choices=("csv", "json"))

    p = sub.add_parser("sample", help="sample a point cloud")
    common(p)
    p.add_argument("--method", default=None, choices=("default", "grid"))
    p = sub.add_parser("graph", help="build a geodesic k-NN graph")
    common(p)
    p.add_argument("--cloud", help="cloud JSON produced by `sample`")
    p = sub.add_parser("solve", help="solve the eikonal or stationary equation")
    common(p)
    p.add_argument("--graph", help="graph JSON produced by `graph`")
    p.add_argument("--equation", choices=("eikonal", "stationary"))
    p.add_argument("--boundary", help="region spec, e.g. hemisphere or box:0,1,0,1")
    p.add_argument("--hamiltonian", help="Hamiltonian spec JSON path")
    p = sub.add_parser("check", help="run a property suite")
    common(p)
    p.add_argument("--suite", choices=SUITES)
    p = sub.add_parser("pullback-demo", help="two-surface solve/transfer/verify")
    common(p)
    p.add_argument("--identity", action="store_true", default=None,
                   help="use the identity map instead of the two-surface pair")
    return ap


def main(argv=None) -> int:
    ap = make_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return 2 if e.code not in (0,) else 0
    try:
        cfg = RunConfig.from_args(args)
    except (ValueError, OSError) as e:
        return _fail(str(e))
    try:
        if args.command == "sample":
            return cmd_sample(cfg)
        if args.command == "graph":
            return cmd_graph(cfg)
        if args.command == "solve":
            return cmd_solve(cfg)
        if args.command == "check":
            return cmd_check(cfg, tol_given=args.tol is not None or
                             (getattr(args, "config", None) is not None and "tol" in io.load_json(args.config)))
        if args.command == "pullback-demo":
            return cmd_pullback_demo(cfg)
    except Exception as e:  # verification machinery raising = input/state error
        return _fail(f"{type(e).__name__}: {e}")
    return _fail(f"unknown command {args.command!r}")


if __name__ == "__main__":
    sys.exit(main())
