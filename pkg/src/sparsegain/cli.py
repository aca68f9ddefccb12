"""Command-line interface.

Subcommands: ``gen`` (random instance), ``synth`` (synthesize a gain),
``verify`` (re-certify a stored gain), ``norm`` (closed-loop gain of a
stored controller), and ``bench`` (the full randomized comparison).

Exit codes: 0 success, 1 malformed input (bad flags, unreadable or
ill-formed files), 2 no controller produced (infeasible or numerically
failed synthesis), 3 certification failure.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import benchmark
from .analysis import ClosedLoop, certify_closed_loop, hinf_norm_bisection, hinf_norm_sweep, spectral_radius
from .graphs import Graph
from .lifting import BlockStructure, Plant, SparsityPattern
from .synthesis import (
    Family,
    Numerics,
    Objective,
    SynthesisMethod,
    SynthesisProblem,
    synthesize,
)

__all__ = ["run_cli", "main"]


class InputError(ValueError):
    """Anything wrong with user-supplied files or values (exit code 1)."""


# ---------------------------------------------------------------------------
# file formats


def _as_matrix(data, what):
    try:
        arr = np.array(data, dtype=float)
    except (TypeError, ValueError) as exc:
        raise InputError(f"{what} is not a numeric matrix: {exc}") from None
    if arr.ndim != 2:
        raise InputError(f"{what} must be two-dimensional, got shape {arr.shape}")
    return arr


def _load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{path} is not valid JSON: {exc}") from None


def load_instance(path):
    """Read an instance file; returns (plant, structure, graph)."""
    data = _load_json(path)
    try:
        sdata = data["structure"]
        gdata = data["graph"]
        pdata = data["plant"]
        structure = BlockStructure(tuple(sdata["n_sizes"]), tuple(sdata["m_sizes"]))
        graph = Graph.from_edges(
            int(gdata["n"]), gdata["edges"], positions=gdata.get("positions")
        )
        perf = {}
        for key in ("Bv", "C", "D", "Dw"):
            if pdata.get(key) is not None:
                perf[key] = _as_matrix(pdata[key], f"plant.{key}")
        plant = Plant(
            A=_as_matrix(pdata["A"], "plant.A"),
            B=_as_matrix(pdata["B"], "plant.B"),
            **perf,
        )
    except InputError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"{path} is not a valid instance file: {exc}") from None
    if plant.n != structure.n_total or plant.m != structure.m_total:
        raise InputError(
            f"{path}: plant is {plant.n}x{plant.m} but the structure wants "
            f"{structure.n_total}x{structure.m_total}"
        )
    if graph.node_count != structure.node_count:
        raise InputError(f"{path}: graph and structure disagree on node count")
    return plant, structure, graph


def save_instance(path, plant, structure, graph):
    def m(x):
        return None if x is None else np.asarray(x).tolist()

    data = {
        "structure": {
            "n_sizes": list(structure.n_sizes),
            "m_sizes": list(structure.m_sizes),
        },
        "graph": {
            "n": graph.node_count,
            "edges": [list(e) for e in sorted(graph.edges)],
            "positions": m(graph.positions),
        },
        "plant": {
            "A": m(plant.A), "B": m(plant.B), "Bv": m(plant.Bv),
            "C": m(plant.C), "D": m(plant.D), "Dw": m(plant.Dw),
        },
    }
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2)
        fh.write("\n")


def _jsonable(x):
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return x


def _certification_json(report):
    if report is None:
        return None
    out = {"ok": report.ok, "reason": report.reason, "checks": {}, "extras": _jsonable(report.extras)}
    for name, cert in report.certificates.items():
        out["checks"][name] = {
            "kind": cert.kind,
            "value": _jsonable(cert.value),
            "satisfied": bool(cert.satisfied),
            "witness": _jsonable(cert.witness),
            "detail": cert.detail,
        }
    return out


def save_result(path, result, method, objective):
    data = {
        "status": result.status.value,
        "method": method,
        "objective": objective,
        "K": _jsonable(result.K),
        "gamma": _jsonable(result.gamma),
        "certificates": _certification_json(result.certification),
        "stats": _jsonable(result.stats),
    }
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2)
        fh.write("\n")


def load_gain(path):
    data = _load_json(path)
    try:
        K = data["K"]
    except (KeyError, TypeError) as exc:
        raise InputError(f"{path} has no gain entry 'K': {exc}") from None
    if K is None:
        raise InputError(f"{path} stores no gain (status {data.get('status')!r})")
    gamma = data.get("gamma")
    return _as_matrix(K, "K"), None if gamma is None else float(gamma), data


# ---------------------------------------------------------------------------
# subcommands


def _numerics_from(args):
    return Numerics(
        margin_scale=args.margin_scale,
        eta_min=args.eta_min,
        solver_tol=args.solver_tol,
        feas_slack=1e3 * args.solver_tol,
        rcond_min=args.rcond_min,
        pattern_rel_tol=args.pattern_rtol,
        gamma_cert_slack=args.gamma_slack,
    )


def _add_numerics_flags(p):
    p.add_argument("--solver-tol", type=float, default=Numerics.solver_tol,
                   help="interior-point accuracy (default %(default)g)")
    p.add_argument("--margin-scale", type=float, default=Numerics.margin_scale,
                   help="strictness margin scale for the LMIs (default %(default)g)")
    p.add_argument("--eta-min", type=float, default=Numerics.eta_min,
                   help="lower bound for the projector coupling weight (default %(default)g)")
    p.add_argument("--rcond-min", type=float, default=Numerics.rcond_min,
                   help="reciprocal condition floor for gain recovery (default %(default)g)")
    p.add_argument("--pattern-rtol", type=float, default=Numerics.pattern_rel_tol,
                   help="relative tolerance for the sparsity check (default %(default)g)")
    p.add_argument("--gamma-slack", type=float, default=Numerics.gamma_cert_slack,
                   help="relative slack when certifying the promised level (default %(default)g)")
    p.add_argument("--adapter", default=None, help="solver adapter name (default: best available)")


def cmd_gen(args):
    graph, plant, structure = benchmark.sample_instance(
        args.n, args.radius, args.T, args.seed, discretization=args.discretization
    )
    save_instance(args.out, plant, structure, graph)
    print(
        f"wrote {args.out}: {graph.node_count} nodes, {graph.edge_count} edges, "
        f"seed {args.seed}"
    )
    return 0


def cmd_synth(args):
    plant, structure, graph = load_instance(getattr(args, "in"))
    if args.objective == "stabilize":
        if args.gamma is not None:
            raise InputError("--gamma only applies to --objective hinf")
        method = SynthesisMethod(Family(args.method), Objective.STABILIZE)
    elif args.gamma is not None:
        if args.gamma <= 0:
            raise InputError("--gamma must be positive")
        method = SynthesisMethod(Family(args.method), Objective.HINF_FEASIBLE, args.gamma)
    else:
        method = SynthesisMethod(Family(args.method), Objective.HINF_MINIMIZE)
    try:
        problem = SynthesisProblem(
            plant=plant, structure=structure, graph=graph, method=method,
            numerics=_numerics_from(args),
        )
    except ValueError as exc:
        raise InputError(str(exc)) from None
    result = synthesize(problem, adapter=args.adapter)
    save_result(args.out, result, args.method, args.objective)
    if result.success:
        extra = f", gamma {result.gamma:.6g}" if result.gamma is not None else ""
        print(f"{result.status.value}: wrote {args.out}{extra}")
        return 0
    print(f"{result.status.value}: {result.stats.get('failure', 'no controller produced')}")
    return 2


def cmd_verify(args):
    plant, structure, graph = load_instance(getattr(args, "in"))
    K, gamma, _ = load_gain(args.gain)
    if K.shape != (structure.m_total, structure.n_total):
        raise InputError(
            f"gain is {K.shape}, instance wants {(structure.m_total, structure.n_total)}"
        )
    pattern = SparsityPattern.from_graph(graph, structure)
    if gamma is not None:
        plant.require_performance()
    report = certify_closed_loop(
        plant, K, pattern=pattern, gamma=gamma,
        pattern_rel_tol=args.pattern_rtol, gamma_slack=args.gamma_slack,
    )
    for name in ("pattern", "schur", "lyapunov", "hinf"):
        cert = report.certificates.get(name)
        if cert is None:
            continue
        verdict = "ok" if cert.satisfied else "FAIL"
        print(f"{verdict:4s} {name}: value {cert.value:.6g} {cert.detail}".rstrip())
    for key, val in report.extras.items():
        print(f"note {key}: {val:.6g}")
    if report.ok:
        print("certified")
        return 0
    print(f"certification failed: {report.reason}")
    return 3


def cmd_norm(args):
    plant, structure, graph = load_instance(getattr(args, "in"))
    K, _, _ = load_gain(args.gain)
    try:
        plant.require_performance()
    except ValueError as exc:
        raise InputError(str(exc)) from None
    if K.shape != (plant.m, plant.n):
        raise InputError(f"gain is {K.shape}, plant wants {(plant.m, plant.n)}")
    loop = ClosedLoop.from_plant_gain(plant, K)
    rho = spectral_radius(loop.A)
    if rho >= 1.0:
        print(f"closed loop is not Schur (spectral radius {rho:.6f}); no finite norm")
        return 3
    if args.method == "bisect":
        value = hinf_norm_bisection(loop, tol_rel=args.tol_rel)
    else:
        value = hinf_norm_sweep(loop, grid_points=args.grid)
    print(f"{value:.10g}")
    return 0


def cmd_bench(args):
    config = benchmark.ExperimentConfig(
        samples=args.samples, n_agents=args.n, radius=args.radius, step=args.T,
        seed=args.seed, discretization=args.discretization, workers=args.workers,
        numerics=_numerics_from(args), adapter=args.adapter,
    )
    result = benchmark.run_experiment(config)
    benchmark.write_records_csv(result.records, args.out)
    plot_path = benchmark.plot_data_path(args.out)
    benchmark.write_plot_data(result.records, plot_path)
    print(f"wrote {args.out} and {plot_path}")
    for name in benchmark.METHOD_ORDER:
        stats = result.summary["methods"][name]
        mean = stats["mean_ratio"]
        mean_s = "-" if mean is None else f"{mean:.4f}"
        print(
            f"{name:12s} failures {stats['failures']:2d}/{stats['attempts']:2d} "
            f"mean ratio {mean_s}"
        )
    if result.summary["centralized_failures"]:
        print(
            f"centralized baseline failed on samples "
            f"{result.summary['excluded_samples']} (excluded from ratios)"
        )
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser():
    parser = argparse.ArgumentParser(
        prog="sparsegain",
        description="Graph-sparse static state-feedback synthesis via clique-based LMI relaxations.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a random benchmark instance")
    p.add_argument("--n", type=int, default=10, help="number of nodes (default %(default)s)")
    p.add_argument("--radius", type=float, default=0.4, help="disk-graph radius (default %(default)s)")
    p.add_argument("--T", type=float, default=0.01, help="discretization step (default %(default)s)")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--discretization", choices=("zoh", "euler"), default="zoh")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("synth", help="synthesize a patterned gain")
    p.add_argument("--in", required=True, help="instance file")
    p.add_argument("--method", required=True,
                   choices=[f.value for f in Family])
    p.add_argument("--objective", required=True, choices=("stabilize", "hinf"))
    p.add_argument("--gamma", type=float, default=None,
                   help="fix the attenuation level instead of minimizing it")
    p.add_argument("--out", required=True, help="result file")
    _add_numerics_flags(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("verify", help="re-certify a stored gain against an instance")
    p.add_argument("--in", required=True, help="instance file")
    p.add_argument("--gain", required=True, help="result file holding K")
    p.add_argument("--pattern-rtol", type=float, default=Numerics.pattern_rel_tol)
    p.add_argument("--gamma-slack", type=float, default=Numerics.gamma_cert_slack)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("norm", help="closed-loop disturbance gain of a stored controller")
    p.add_argument("--in", required=True, help="instance file")
    p.add_argument("--gain", required=True, help="result file holding K")
    p.add_argument("--method", choices=("bisect", "sweep"), default="bisect")
    p.add_argument("--tol-rel", type=float, default=1e-4,
                   help="bisection bracket tolerance (default %(default)g)")
    p.add_argument("--grid", type=int, default=10000,
                   help="sweep grid points (default %(default)s)")
    p.set_defaults(func=cmd_norm)

    p = sub.add_parser("bench", help="run the randomized method comparison")
    p.add_argument("--samples", type=int, default=50)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True, help="CSV output path")
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--radius", type=float, default=0.4)
    p.add_argument("--T", type=float, default=0.01)
    p.add_argument("--discretization", choices=("zoh", "euler"), default="zoh")
    p.add_argument("--workers", type=int, default=1)
    _add_numerics_flags(p)
    p.set_defaults(func=cmd_bench)

    return parser


def run_cli(argv=None):
    """Parse and dispatch; returns the process exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits on usage errors and --help
        code = exc.code if exc.code is not None else 0
        return 0 if code == 0 else 1
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main():
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
