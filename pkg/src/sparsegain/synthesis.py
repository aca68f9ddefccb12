"""Convex synthesis of graph-sparse static state-feedback gains.

Four LMI relaxation families are assembled over the same plant:

* ``diag`` -- node-block-diagonal Lyapunov variable Q with a patterned
  companion Z; the gain is Z Q^{-1}.
* ``ext`` -- a full Lyapunov variable, decoupled from the patterned factors
  by a node-block-diagonal slack G; the gain is Z G^{-1}.
* ``clique`` -- clique-block-diagonal variables on the lifted space of the
  clique selector, tied back to the node space by the projector N and a free
  multiplier rho; the gain is projected down from the lifted factors.
* ``clique-ext`` -- the previous two ideas combined: full lifted Lyapunov
  variable, clique-block slack G, multiplier rho.

``centralized`` drops the sparsity pattern entirely (full G and Z) and is
the reference optimum. Strict inequalities are realized with the margin
eps = margin_scale * (1 + max|A|); the disturbance-attenuation level gamma
enters linearly, so minimizing it is a single SDP, no outer loop. Every
returned gain is independently certified (pattern, eigenvalues, fresh
Lyapunov solve, bisection bound) before the result claims success.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import conic
from .analysis import Certificate, certify_closed_loop
from .conic import ConicProgram, SolverTolerances, affine_block, constant
from .graphs import Graph, maximal_cliques, cover_represents_graph
from .lifting import (
    PatternViolationError,
    Plant,
    SingularFactorError,
    SparsityPattern,
    build_lifted_basis,
    dilate_plant,
    recover_gain,
)

__all__ = [
    "Family",
    "Objective",
    "SynthesisMethod",
    "SynthesisStatus",
    "Numerics",
    "SynthesisProblem",
    "SynthesisResult",
    "channel_scale",
    "assemble_stabilization",
    "assemble_hinf",
    "synthesize",
    "centralized_baseline",
]


class Family(str, Enum):
    DIAG = "diag"
    EXT = "ext"
    CLIQUE = "clique"
    CLIQUE_EXT = "clique-ext"
    CENTRALIZED = "centralized"


class Objective(str, Enum):
    STABILIZE = "stabilize"
    HINF_MINIMIZE = "hinf"
    HINF_FEASIBLE = "hinf-fixed"


class SynthesisStatus(str, Enum):
    OPTIMAL = "Optimal"
    FEASIBLE = "Feasible"
    INFEASIBLE = "Infeasible"
    NUMERICAL_FAILURE = "NumericalFailure"


_CLIQUE_FAMILIES = (Family.CLIQUE, Family.CLIQUE_EXT)


@dataclass(frozen=True)
class SynthesisMethod:
    """Which relaxation to assemble and what to ask of it."""

    family: Family
    objective: Objective = Objective.STABILIZE
    gamma: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        object.__setattr__(self, "objective", Objective(self.objective))
        if self.objective == Objective.HINF_FEASIBLE:
            if self.gamma is None or not self.gamma > 0:
                raise ValueError("fixed-level synthesis needs gamma > 0")
        elif self.gamma is not None:
            raise ValueError("gamma is only meaningful with the fixed-level objective")


@dataclass(frozen=True)
class Numerics:
    """Every tolerance in one place, so CLI flags and tests agree on names."""

    margin_scale: float = 1e-7  # eps = margin_scale * (1 + max|A|)
    eta_min: float = 1e-6
    solver_tol: float = 1e-8
    feas_slack: float = 1e-5  # loose recheck on synthesis iterates; certification is the gate
    max_iter: int = 200
    rcond_min: float = 1e-12
    pattern_rel_tol: float = 1e-8
    gamma_cert_slack: float = 1e-3
    gamma_mismatch_limit: float = 0.05  # how far the delivered norm may exceed the solver level
    rescale_channel: bool = True  # equilibrate the attenuation programs

    def solver_tolerances(self):
        return SolverTolerances(
            tol=self.solver_tol, feas_slack=self.feas_slack, max_iter=self.max_iter
        )


@dataclass(frozen=True)
class SynthesisProblem:
    """A plant, its interconnection structure, and the chosen relaxation.

    For the clique families the cover defaults to all maximal cliques of the
    graph and is checked to reproduce the graph's adjacency exactly.
    """

    plant: object
    structure: object
    graph: Graph
    method: SynthesisMethod
    cover: object = None
    numerics: Numerics = field(default_factory=Numerics)

    def __post_init__(self):
        structure = self.structure
        structure.require_square_blocks()
        if self.plant.n != structure.n_total or self.plant.m != structure.m_total:
            raise ValueError(
                f"plant is {self.plant.n}x{self.plant.m} but the structure wants "
                f"{structure.n_total}x{structure.m_total}"
            )
        if self.graph.node_count != structure.node_count:
            raise ValueError("graph and block structure disagree on node count")
        if self.method.objective != Objective.STABILIZE:
            self.plant.require_performance()
        if self.method.family in _CLIQUE_FAMILIES:
            cover = self.cover
            if cover is None:
                cover = maximal_cliques(self.graph)
                object.__setattr__(self, "cover", cover)
            if not cover_represents_graph(self.graph, cover):
                raise ValueError(
                    "clique cover does not reproduce the graph's adjacency; the "
                    "lifted relaxations would target the wrong pattern"
                )

    @property
    def pattern(self):
        if self.method.family == Family.CENTRALIZED:
            return None
        return SparsityPattern.from_graph(self.graph, self.structure)


@dataclass
class SynthesisResult:
    status: SynthesisStatus
    K: np.ndarray | None
    gamma: float | None
    variables: dict
    certification: object | None
    stats: dict

    @property
    def success(self):
        return self.status in (SynthesisStatus.OPTIMAL, SynthesisStatus.FEASIBLE)


# ---------------------------------------------------------------------------
# assembly helpers


def _margin(problem):
    return problem.numerics.margin_scale * (1.0 + float(np.max(np.abs(problem.plant.A))))


def _patterned_expr(prog, name, mask):
    """One scalar per allowed entry, composed into a matrix expression."""
    coeffs = {}
    for r, c in zip(*np.nonzero(mask)):
        v = prog.add_scalar_var(f"{name}[{r},{c}]")
        F = np.zeros(mask.shape)
        F[r, c] = 1.0
        coeffs[v.index] = F
    return conic.AffineMatrix(np.zeros(mask.shape), coeffs)


def _patterned_value(values, name, mask):
    out = np.zeros(mask.shape)
    for r, c in zip(*np.nonzero(mask)):
        out[r, c] = values[f"{name}[{r},{c}]"]
    return out


def _flat_factors(prog, problem):
    """Variables and the core expressions shared by the non-lifted families.

    Returns (Q-expression, slack-expression-or-None, Z-expression)."""
    fam = problem.method.family
    structure = problem.structure
    n = structure.n_total
    if fam == Family.DIAG:
        Q = prog.add_matrix_var("Q", structure.n_sizes, symmetric=True)
        Ze = _patterned_expr(prog, "Z", problem.pattern.gain_mask)
        return prog.expr(Q), None, Ze
    if fam == Family.EXT:
        Q = prog.add_matrix_var("Q", (n,), symmetric=True)
        G = prog.add_matrix_var("G", structure.n_sizes, symmetric=False)
        Ze = _patterned_expr(prog, "Z", problem.pattern.gain_mask)
        return prog.expr(Q), prog.expr(G), Ze
    if fam == Family.CENTRALIZED:
        Q = prog.add_matrix_var("Q", (n,), symmetric=True)
        G = prog.add_matrix_var("G", (n,), symmetric=False)
        Z = prog.add_matrix_var("Z", (n,), symmetric=False)
        return prog.expr(Q), prog.expr(G), prog.expr(Z)
    raise ValueError(f"not a flat family: {fam}")


def _lifted_setup(prog, problem, plant):
    """Variables, dilated plant, and coupling data for the lifted families."""
    basis = build_lifted_basis(problem.structure, problem.cover, graph=problem.graph)
    dil = dilate_plant(plant, basis)
    L = basis.lifted_dim
    blocks = basis.clique_block_sizes
    fam = problem.method.family
    if fam == Family.CLIQUE:
        Q = prog.add_matrix_var("Q", blocks, symmetric=True)
        Z = prog.add_matrix_var("Z", blocks, symmetric=False)
        Qe, Ge, Ze = prog.expr(Q), None, prog.expr(Z)
    else:
        Q = prog.add_matrix_var("Q", (L,), symmetric=True)
        G = prog.add_matrix_var("G", blocks, symmetric=False)
        Z = prog.add_matrix_var("Z", blocks, symmetric=False)
        Qe, Ge, Ze = prog.expr(Q), prog.expr(G), prog.expr(Z)
    degenerate = L == problem.structure.n_total  # selector is square: N = 0
    rho = eta = None
    if not degenerate:
        rho = prog.add_scalar_var("rho")
        eta = prog.add_scalar_var("eta", lower=problem.numerics.eta_min)
    return basis, dil, Qe, Ge, Ze, rho, eta, degenerate


def _coupling_constraints(prog, problem, basis, Qe, Ge, eta, eps):
    """Q >= eps I on the lifted space plus the projector compatibility row.

    Both rows exist only when the main inequality is shifted by rho (so
    positivity of Q is no longer implied by its diagonal blocks).  In the
    degenerate single-clique case the selector is square, the projector
    vanishes, and the program coincides with its unlifted counterpart."""
    if eta is None:
        return
    L = basis.lifted_dim
    prog.add_psd_constraint(Qe - eps * np.eye(L), name="lifted_pd")
    N = basis.projector
    if Ge is None:
        expr = N @ Qe + Qe @ N - prog.scalar_term(eta, N)
    else:
        expr = Ge.T @ N + N @ Ge - prog.scalar_term(eta, N)
    prog.add_psd_constraint(expr, name="projector_compat")


def assemble_stabilization(problem):
    """Stabilization feasibility program for the problem's family."""
    prog = ConicProgram()
    plant = problem.plant
    eps = _margin(problem)
    fam = problem.method.family
    if fam in _CLIQUE_FAMILIES:
        basis, dil, Qe, Ge, Ze, rho, eta, degenerate = _lifted_setup(prog, problem, plant)
        L = basis.lifted_dim
        closed = dil.A @ (Qe if Ge is None else Ge) + dil.B @ Ze
        head = Qe if Ge is None else Ge + Ge.T - Qe
        core = affine_block([[head, closed.T], [closed, Qe]])
        if not degenerate:
            core = core + prog.scalar_term(rho, basis.doubled_projector)
        prog.add_psd_constraint(core - eps * np.eye(2 * L), name="stab")
        _coupling_constraints(prog, problem, basis, Qe, Ge, eta, eps)
    else:
        n = plant.n
        Qe, Ge, Ze = _flat_factors(prog, problem)
        closed = plant.A @ (Qe if Ge is None else Ge) + plant.B @ Ze
        head = Qe if Ge is None else Ge + Ge.T - Qe
        core = affine_block([[head, closed.T], [closed, Qe]])
        prog.add_psd_constraint(core - eps * np.eye(2 * n), name="stab")
    return prog


def channel_scale(plant):
    """Order-of-magnitude estimate of the achievable attenuation level.

    ``assemble_hinf`` divides the performance channel by this factor so the
    solver never sees gamma-sized blocks next to unit-sized Lyapunov blocks;
    the substitution is an exact congruence, so any positive value yields an
    equivalent program and only the magnitude matters.  The estimate combines
    the direct feedthrough floor with how much gain the feedback must spend
    to move the state matrix per unit of usable input authority."""
    if not plant.has_performance:
        return 1.0
    a = np.linalg.norm(plant.A, 2)
    terms = [
        1.0,
        np.linalg.norm(plant.Dw, 2),
        np.linalg.norm(plant.C, 2) * np.linalg.norm(plant.Bv, 2),
    ]
    d = np.linalg.norm(plant.D, 2)
    if d > 0.0:
        sv = np.linalg.svd(plant.B, compute_uv=False)
        usable = sv[sv > max(sv[0] * 1e-12, np.finfo(float).tiny)]
        authority = float(usable[-1]) if usable.size else 1.0
        terms.append(d * (1.0 + a) / authority)
    return float(max(terms))


def assemble_hinf(problem, gamma=None, scale=None):
    """Disturbance-attenuation program; ``gamma=None`` adds it as the
    minimized variable, a float pins it.

    The performance channel is divided by a scale (``channel_scale`` of the
    plant unless an explicit value is passed) so the solved program is well
    equilibrated even when the achievable level is orders of magnitude above
    the Lyapunov blocks.  The rescale is a congruence: the feasible Lyapunov
    factors are untouched and the gamma variable simply lives in units of
    the scale (``synthesize`` converts it back; pinned levels are converted
    on the way in)."""
    problem.plant.require_performance()
    prog = ConicProgram()
    plant = problem.plant
    eps = _margin(problem)
    if scale is None:
        scale = channel_scale(plant) if problem.numerics.rescale_channel else 1.0
    scale = float(scale)
    if scale != 1.0:
        root = np.sqrt(scale)
        plant = Plant(A=plant.A, B=plant.B, Bv=plant.Bv / root,
                      C=plant.C / root, D=plant.D / root, Dw=plant.Dw / scale)
    fam = problem.method.family
    m_v, l = plant.m_v, plant.l
    if fam in _CLIQUE_FAMILIES:
        basis, dil, Qe, Ge, Ze, rho, eta, degenerate = _lifted_setup(prog, problem, plant)
        d1 = basis.lifted_dim
        A, B, Bv, C, D, Dw = dil.A, dil.B, dil.Bv, dil.C, dil.D, dil.Dw
    else:
        basis = rho = eta = None
        degenerate = True
        Qe, Ge, Ze = _flat_factors(prog, problem)
        d1 = plant.n
        A, B, Bv, C, D, Dw = plant.A, plant.B, plant.Bv, plant.C, plant.D, plant.Dw
    if gamma is None:
        gvar = prog.add_scalar_var("gamma", lower=0.0)
        g33 = prog.scalar_term(gvar, -np.eye(m_v))
        g44 = prog.scalar_term(gvar, -np.eye(l))
        prog.set_objective({gvar: 1.0})
    else:
        level = float(gamma) / scale
        g33 = constant(-level * np.eye(m_v))
        g44 = constant(-level * np.eye(l))
    closed = A @ (Qe if Ge is None else Ge) + B @ Ze
    out = C @ (Qe if Ge is None else Ge) + D @ Ze
    head = -Qe if Ge is None else Qe - Ge - Ge.T
    X = affine_block(
        [
            [-Qe, closed, Bv, np.zeros((d1, l))],
            [closed.T, head, np.zeros((d1, m_v)), out.T],
            [Bv.T, np.zeros((m_v, d1)), g33, Dw.T],
            [np.zeros((l, d1)), out, Dw, g44],
        ]
    )
    dim = 2 * d1 + m_v + l
    if not degenerate:
        pad = np.zeros((dim, dim))
        pad[: 2 * d1, : 2 * d1] = basis.doubled_projector
        X = X + prog.scalar_term(rho, pad)
    prog.add_psd_constraint(-X - eps * np.eye(dim), name="hinf")
    if fam in _CLIQUE_FAMILIES:
        _coupling_constraints(prog, problem, basis, Qe, Ge, eta, eps)
    return prog


def _recover_flat(problem, values):
    numerics = problem.numerics
    fam = problem.method.family
    if fam == Family.CENTRALIZED:
        Z = values["Z"]
    else:
        Z = _patterned_value(values, "Z", problem.pattern.gain_mask)
    factor = values["Q"] if fam == Family.DIAG else values["G"]
    cond = np.linalg.cond(factor)
    if not np.isfinite(cond) or cond > 1.0 / numerics.rcond_min:
        raise SingularFactorError(
            f"synthesis factor is numerically singular (rcond ~ {1.0 / cond:.2e})"
        )
    return np.linalg.solve(factor.T, Z.T).T, Z


def _recover(problem, values):
    fam = problem.method.family
    numerics = problem.numerics
    if fam in _CLIQUE_FAMILIES:
        basis = build_lifted_basis(problem.structure, problem.cover)
        factor = values["Q"] if fam == Family.CLIQUE else values["G"]
        K = recover_gain(
            values["Z"], factor, basis,
            rcond_min=numerics.rcond_min,
            pattern_rel_tol=numerics.pattern_rel_tol,
        )
        return K, values["Z"]
    return _recover_flat(problem, values)


def _attempt(problem, adapter, scale):
    """One assemble/solve/recover/certify pass at a fixed channel scale."""
    method = problem.method
    t0 = time.perf_counter()
    if method.objective == Objective.STABILIZE:
        prog = assemble_stabilization(problem)
    else:
        fixed = method.gamma if method.objective == Objective.HINF_FEASIBLE else None
        prog = assemble_hinf(problem, gamma=fixed, scale=scale)
    tols = problem.numerics.solver_tolerances()
    outcome = conic.solve(prog, tolerances=tols, adapter=adapter)
    stats = {
        "adapter": outcome.adapter,
        "iterations": outcome.iterations,
        "solve_time": outcome.solve_time,
        "solver_message": outcome.message,
        "worst_residual": outcome.worst_residual,
        "scalars": prog.n_scalars,
        "psd_constraints": len(prog.psd_constraints),
    }

    def finish(status, K=None, gamma=None, variables=None, certification=None):
        stats["total_time"] = time.perf_counter() - t0
        return SynthesisResult(
            status=status, K=K, gamma=gamma, variables=variables or {},
            certification=certification, stats=stats,
        )

    if outcome.status == conic.SolveStatus.INFEASIBLE:
        return finish(SynthesisStatus.INFEASIBLE)
    if outcome.status != conic.SolveStatus.OPTIMAL:
        stats["failure"] = outcome.message or str(outcome.status)
        return finish(SynthesisStatus.NUMERICAL_FAILURE)

    values = dict(outcome.values)
    if method.objective == Objective.HINF_MINIMIZE:
        gamma = float(values["gamma"]) * scale
        values["gamma"] = gamma
    elif method.objective == Objective.HINF_FEASIBLE:
        gamma = float(method.gamma)
    else:
        gamma = None
    try:
        K, Z = _recover(problem, values)
    except (SingularFactorError, PatternViolationError) as exc:
        stats["failure"] = f"gain recovery failed: {exc}"
        return finish(SynthesisStatus.NUMERICAL_FAILURE, gamma=gamma, variables=values)

    numerics = problem.numerics
    minimizing = method.objective == Objective.HINF_MINIMIZE
    report = certify_closed_loop(
        problem.plant, K,
        pattern=problem.pattern,
        gamma=gamma,
        pattern_rel_tol=numerics.pattern_rel_tol,
        gamma_slack=(
            numerics.gamma_mismatch_limit if minimizing
            else numerics.gamma_cert_slack
        ),
        tolerances=tols,
        adapter=adapter,
    )
    if not report.ok:
        stats["failure"] = f"certification failed: {report.reason}"
        stats["rejected_gain"] = K
        return finish(
            SynthesisStatus.NUMERICAL_FAILURE, gamma=gamma, variables=values,
            certification=report,
        )
    if minimizing:
        certified = report.certificates["hinf"].value
        if certified > gamma:
            # the solver's objective was a hair below what the recovered gain
            # delivers; report the level that is actually certified
            stats["solver_level"] = gamma
            gamma = float(certified)
            values["gamma"] = gamma
            report.certificates["hinf"] = Certificate(
                kind="hinf_bound", value=certified, satisfied=True,
                detail=f"certified level (solver proposed {stats['solver_level']:.6g})",
            )
    status = SynthesisStatus.OPTIMAL if minimizing else SynthesisStatus.FEASIBLE
    return finish(status, K=K, gamma=gamma, variables=values, certification=report)


_SCALE_LADDER = (1.0, 30.0, 900.0)


def synthesize(problem, adapter=None):
    """Assemble, solve, recover the gain, and certify it end to end.

    Status is ``Optimal`` for a certified minimized level, ``Feasible`` for a
    certified stabilizing or fixed-level gain, ``Infeasible`` when the solver
    proves infeasibility, and ``NumericalFailure`` whenever anything about
    the returned point could not be verified (the offending details land in
    ``stats``).

    Attenuation solves escalate through a short ladder of channel scales:
    over-scaling is harmless (the rescale is exact), under-scaling starves
    the interior-point method, and the base estimate can be low when the
    pattern forces a much larger level than the centralized one.  The ladder
    stops at the first clean solve and otherwise keeps the best certified
    level seen."""
    method = problem.method
    if method.objective == Objective.STABILIZE:
        return _attempt(problem, adapter, None)
    if not problem.numerics.rescale_channel:
        return _attempt(problem, adapter, 1.0)
    base = channel_scale(problem.plant)
    best = None
    last = None
    for count, mult in enumerate(_SCALE_LADDER, start=1):
        result = _attempt(problem, adapter, base * mult)
        result.stats["channel_scale"] = base * mult
        result.stats["attempts"] = count
        last = result
        if result.status == SynthesisStatus.INFEASIBLE:
            return result
        if not result.success:
            continue
        if method.objective == Objective.HINF_FEASIBLE:
            return result
        if best is None or result.gamma < best.gamma:
            best = result
        clean = (
            result.stats.get("solver_message") == "Solved"
            and "solver_level" not in result.stats
        )
        if clean:
            break
    return best if best is not None else last


def centralized_baseline(plant, structure, objective=Objective.HINF_MINIMIZE,
                         gamma=None, numerics=None, adapter=None):
    """Reference synthesis with no sparsity constraint at all."""
    method = SynthesisMethod(Family.CENTRALIZED, objective, gamma)
    problem = SynthesisProblem(
        plant=plant,
        structure=structure,
        graph=Graph.complete(structure.node_count),
        method=method,
        numerics=numerics or Numerics(),
    )
    return synthesize(problem, adapter=adapter)
