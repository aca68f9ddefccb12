"""Randomized benchmark: disk-graph interconnections, discretized random
dynamics, every synthesis family side by side.

Each sample draws node positions in the unit square (edge iff within the
disk radius), a continuous-time (A, B) with entries uniform on (0, 1),
discretizes with zero-order hold at the configured step, fixes the
performance channel to identity matrices, and minimizes the attenuation
level with all four sparse families plus the centralized reference. The
figure of merit per method is gamma / gamma_centralized.

All randomness flows from one experiment seed: per-sample integer seeds are
drawn up front, and inside a sample a single generator produces positions,
then A, then B, in that order. Records are therefore reproducible row by
row, and the CSV output is byte-stable except for the wall-clock columns.
"""

from __future__ import annotations

import csv
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .graphs import disk_graph, maximal_cliques
from .lifting import BlockStructure, Plant
from .synthesis import (
    Family,
    Numerics,
    Objective,
    SynthesisMethod,
    SynthesisProblem,
    SynthesisStatus,
    centralized_baseline,
    synthesize,
)

__all__ = [
    "ExperimentConfig",
    "MethodOutcome",
    "SampleRecord",
    "ExperimentResult",
    "METHOD_ORDER",
    "random_continuous_plant",
    "zoh_discretize",
    "euler_discretize",
    "sample_instance",
    "run_experiment",
    "summarize",
    "write_records_csv",
    "write_plot_data",
]

METHOD_ORDER = ("diag", "ext", "clique", "clique-ext", "centralized")


@dataclass(frozen=True)
class ExperimentConfig:
    samples: int = 50
    n_agents: int = 10
    block_size: int = 1
    radius: float = 0.4
    step: float = 0.01
    seed: int = 0
    discretization: str = "zoh"  # or "euler"
    workers: int = 1
    numerics: Numerics = field(default_factory=Numerics)
    adapter: str | None = None

    def __post_init__(self):
        if self.discretization not in ("zoh", "euler"):
            raise ValueError("discretization must be 'zoh' or 'euler'")
        if self.samples < 0 or self.n_agents < 1 or self.workers < 1:
            raise ValueError("bad experiment configuration")


def random_continuous_plant(n, m, rng):
    """Continuous-time (A, B) with i.i.d. entries uniform on (0, 1)."""
    return rng.random((n, n)), rng.random((n, m))


def zoh_discretize(A_c, B_c, step):
    """Exact zero-order-hold discretization via the augmented exponential:
    exp([[A, B], [0, 0]] * T) holds A_d and B_d in its top blocks."""
    A_c = np.asarray(A_c, dtype=float)
    B_c = np.asarray(B_c, dtype=float)
    n, m = B_c.shape
    aug = np.zeros((n + m, n + m))
    aug[:n, :n] = A_c * step
    aug[:n, n:] = B_c * step
    M = expm(aug)
    return M[:n, :n], M[:n, n:]


def euler_discretize(A_c, B_c, step):
    """First-order hold-free approximation: A_d = I + T A, B_d = T B."""
    A_c = np.asarray(A_c, dtype=float)
    B_c = np.asarray(B_c, dtype=float)
    return np.eye(A_c.shape[0]) + step * A_c, step * B_c


def sample_instance(n_agents, radius, step, seed, discretization="zoh", block_size=1):
    """One benchmark instance: (graph, plant, structure).

    A single generator seeded by ``seed`` draws, in order, the node
    positions, then A, then B; the performance channel is identity."""
    rng = np.random.default_rng(seed)
    graph = disk_graph(n_agents, radius, rng)
    n = n_agents * block_size
    A_c, B_c = random_continuous_plant(n, n, rng)
    if discretization == "zoh":
        A, B = zoh_discretize(A_c, B_c, step)
    elif discretization == "euler":
        A, B = euler_discretize(A_c, B_c, step)
    else:
        raise ValueError("discretization must be 'zoh' or 'euler'")
    I = np.eye(n)
    plant = Plant(A=A, B=B, Bv=I, C=I, D=I, Dw=I)
    structure = BlockStructure.uniform(n_agents, block_size)
    return graph, plant, structure


@dataclass
class MethodOutcome:
    status: str
    gamma: float | None
    ratio: float | None
    time_ms: float


@dataclass
class SampleRecord:
    sample: int
    seed: int
    edges: int
    cliques: int
    methods: dict


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    records: list
    summary: dict


def _run_sample(config, index, seed):
    import time

    graph, plant, structure = sample_instance(
        config.n_agents, config.radius, config.step, seed,
        discretization=config.discretization, block_size=config.block_size,
    )
    cover = maximal_cliques(graph)
    outcomes = {}

    t0 = time.perf_counter()
    cen = centralized_baseline(
        plant, structure, objective=Objective.HINF_MINIMIZE,
        numerics=config.numerics, adapter=config.adapter,
    )
    outcomes["centralized"] = MethodOutcome(
        status=cen.status.value,
        gamma=cen.gamma if cen.success else None,
        ratio=1.0 if cen.success else None,
        time_ms=(time.perf_counter() - t0) * 1e3,
    )
    gamma_cen = cen.gamma if cen.success else None

    for name in METHOD_ORDER[:-1]:
        t0 = time.perf_counter()
        problem = SynthesisProblem(
            plant=plant, structure=structure, graph=graph,
            method=SynthesisMethod(Family(name), Objective.HINF_MINIMIZE),
            cover=cover if Family(name) in (Family.CLIQUE, Family.CLIQUE_EXT) else None,
            numerics=config.numerics,
        )
        result = synthesize(problem, adapter=config.adapter)
        gamma = result.gamma if result.success else None
        ratio = None
        if gamma is not None and gamma_cen is not None and gamma_cen > 0:
            ratio = gamma / gamma_cen
        outcomes[name] = MethodOutcome(
            status=result.status.value, gamma=gamma, ratio=ratio,
            time_ms=(time.perf_counter() - t0) * 1e3,
        )
    return SampleRecord(
        sample=index, seed=seed, edges=graph.edge_count, cliques=cover.count,
        methods=outcomes,
    )


def run_experiment(config):
    """Run every sample, in order or across a thread pool, and summarize."""
    master = np.random.default_rng(config.seed)
    seeds = [int(s) for s in master.integers(0, 2**63 - 1, size=config.samples)]
    if config.workers > 1 and config.samples > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            records = list(
                pool.map(lambda iz: _run_sample(config, iz[0], iz[1]), enumerate(seeds))
            )
    else:
        records = [_run_sample(config, i, s) for i, s in enumerate(seeds)]
    records.sort(key=lambda r: r.sample)
    return ExperimentResult(config, records, summarize(records))


def summarize(records):
    """Failure counts and ratio statistics per method.

    Samples where the centralized baseline failed carry no ratios; they are
    excluded from the ratio statistics and flagged explicitly."""
    summary = {"methods": {}, "centralized_failures": 0, "excluded_samples": []}
    for rec in records:
        cen = rec.methods.get("centralized")
        if cen is None or cen.ratio is None:
            summary["centralized_failures"] += 1
            summary["excluded_samples"].append(rec.sample)
    for name in METHOD_ORDER:
        failures = 0
        ratios = []
        for rec in records:
            out = rec.methods[name]
            if out.status not in (
                SynthesisStatus.OPTIMAL.value,
                SynthesisStatus.FEASIBLE.value,
            ):
                failures += 1
            if out.ratio is not None:
                ratios.append(out.ratio)
        summary["methods"][name] = {
            "attempts": len(records),
            "failures": failures,
            "mean_ratio": float(np.mean(ratios)) if ratios else None,
            "median_ratio": float(np.median(ratios)) if ratios else None,
        }
    return summary


def _fmt(x, places=None):
    if x is None:
        return ""
    if places is not None:
        return f"{x:.{places}f}"
    return repr(float(x))


def csv_header():
    cols = ["sample", "seed", "edges", "cliques"]
    for name in METHOD_ORDER:
        cols += [f"{name}_status", f"{name}_gamma", f"{name}_ratio", f"{name}_time_ms"]
    return cols


def write_records_csv(records, path):
    """One row per sample; see :func:`csv_header` for the exact layout.

    Everything except the ``*_time_ms`` columns is a pure function of the
    experiment configuration, so reruns agree byte for byte there."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(csv_header())
        for rec in records:
            row = [rec.sample, rec.seed, rec.edges, rec.cliques]
            for name in METHOD_ORDER:
                out = rec.methods[name]
                row += [out.status, _fmt(out.gamma), _fmt(out.ratio),
                        _fmt(out.time_ms, places=3)]
            w.writerow(row)


def write_plot_data(records, path):
    """Long-format companion file (sample, method, ratio, failed) that any
    plotting tool can consume directly."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["sample", "method", "ratio", "failed"])
        for rec in records:
            for name in METHOD_ORDER:
                out = rec.methods[name]
                failed = 0 if out.status in (
                    SynthesisStatus.OPTIMAL.value, SynthesisStatus.FEASIBLE.value
                ) else 1
                w.writerow([rec.sample, name, _fmt(out.ratio), failed])


def plot_data_path(csv_path):
    root, ext = os.path.splitext(str(csv_path))
    return f"{root}_plot{ext or '.csv'}"
