"""Block-structured semidefinite programming with pluggable solvers.

A :class:`ConicProgram` holds scalar variables, block-diagonal matrix
variables (symmetric or general blocks), affine PSD constraints of the form
``F0 + sum_i x_i F_i >= 0``, and an optional linear objective, all expressed
through :class:`AffineMatrix` arithmetic. :func:`vectorize` lowers a program
to a scalarized standard form (1x1 cones become linear inequality rows,
larger cones are packed with the column-wise upper-triangle ``svec``
convention, off-diagonals scaled by sqrt(2)); adapters hand that form to an
actual solver. Returned points are never trusted: :func:`solve` re-checks
every constraint's smallest eigenvalue before reporting success.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache

import numpy as np

__all__ = [
    "AffineMatrix",
    "ConicProgram",
    "MatrixVar",
    "ScalarVar",
    "StandardForm",
    "PsdBlock",
    "SolveStatus",
    "SolveOutcome",
    "SolverTolerances",
    "BackendError",
    "constant",
    "affine_block",
    "svec",
    "smat",
    "vectorize",
    "solve",
    "export_standard_form",
    "register_adapter",
    "available_adapters",
    "get_adapter",
    "ClarabelAdapter",
    "CvxoptAdapter",
]

_SQRT2 = float(np.sqrt(2.0))


class BackendError(RuntimeError):
    """No usable solver adapter, or an adapter misbehaved structurally."""


class SolveStatus(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    NUMERICAL_FAILURE = "numerical_failure"


# ---------------------------------------------------------------------------
# affine matrix expressions


class AffineMatrix:
    """Matrix-valued affine expression ``const + sum_i x_i * coeffs[i]``.

    Supports +, -, unary -, scalar *, / and @ with plain ndarrays on either
    side, plus transpose. Keys of ``coeffs`` are global scalar-variable
    indices of the owning program.
    """

    __slots__ = ("const", "coeffs")
    __array_ufunc__ = None  # make ndarray defer to our reflected operators

    def __init__(self, const, coeffs=None):
        self.const = np.asarray(const, dtype=float)
        if self.const.ndim != 2:
            raise ValueError("affine matrices are 2-D")
        self.coeffs = dict(coeffs) if coeffs else {}
        for i, F in self.coeffs.items():
            if F.shape != self.const.shape:
                raise ValueError(
                    f"coefficient {i} has shape {F.shape}, expected {self.const.shape}"
                )

    @property
    def shape(self):
        return self.const.shape

    @property
    def T(self):
        return AffineMatrix(
            self.const.T, {i: F.T for i, F in self.coeffs.items()}
        )

    def _coerce(self, other):
        if isinstance(other, AffineMatrix):
            return other
        arr = np.asarray(other, dtype=float)
        if arr.shape != self.shape:
            raise ValueError(f"shape mismatch: {self.shape} vs {arr.shape}")
        return AffineMatrix(arr)

    def __add__(self, other):
        other = self._coerce(other)
        coeffs = dict(self.coeffs)
        for i, F in other.coeffs.items():
            coeffs[i] = coeffs[i] + F if i in coeffs else F
        return AffineMatrix(self.const + other.const, coeffs)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) + (-self)

    def __neg__(self):
        return AffineMatrix(-self.const, {i: -F for i, F in self.coeffs.items()})

    def __mul__(self, scalar):
        s = float(scalar)
        return AffineMatrix(self.const * s, {i: F * s for i, F in self.coeffs.items()})

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return self * (1.0 / float(scalar))

    def __matmul__(self, right):
        right = np.asarray(right, dtype=float)
        return AffineMatrix(
            self.const @ right, {i: F @ right for i, F in self.coeffs.items()}
        )

    def __rmatmul__(self, left):
        left = np.asarray(left, dtype=float)
        return AffineMatrix(
            left @ self.const, {i: left @ F for i, F in self.coeffs.items()}
        )

    def value(self, x):
        """Evaluate at a scalar assignment vector."""
        out = self.const.copy()
        for i, F in self.coeffs.items():
            out += x[i] * F
        return out


def constant(matrix):
    return AffineMatrix(np.asarray(matrix, dtype=float))


def affine_block(rows):
    """Assemble a block matrix from AffineMatrix / ndarray cells.

    Works like ``numpy.block`` for a 2-D nested list; every cell must be an
    explicit matrix (no scalar shorthand), so block dimensions are never
    guessed.
    """
    cells = [[c if isinstance(c, AffineMatrix) else constant(c) for c in row] for row in rows]
    heights = [row[0].shape[0] for row in cells]
    widths = [c.shape[1] for c in cells[0]]
    for r, row in enumerate(cells):
        if len(row) != len(widths):
            raise ValueError("ragged block layout")
        for c, cell in enumerate(row):
            if cell.shape != (heights[r], widths[c]):
                raise ValueError(
                    f"cell ({r},{c}) has shape {cell.shape}, expected "
                    f"{(heights[r], widths[c])}"
                )
    R, C = sum(heights), sum(widths)
    row_off = np.concatenate(([0], np.cumsum(heights)))
    col_off = np.concatenate(([0], np.cumsum(widths)))
    const = np.zeros((R, C))
    coeffs = {}
    for r, row in enumerate(cells):
        for c, cell in enumerate(row):
            sl = (slice(row_off[r], row_off[r + 1]), slice(col_off[c], col_off[c + 1]))
            const[sl] = cell.const
            for i, F in cell.coeffs.items():
                if i not in coeffs:
                    coeffs[i] = np.zeros((R, C))
                coeffs[i][sl] += F
    return AffineMatrix(const, coeffs)


# ---------------------------------------------------------------------------
# programs


@dataclass(frozen=True)
class MatrixVar:
    name: str
    block_sizes: tuple
    symmetric: bool
    offset: int  # first global scalar index

    @property
    def dim(self):
        return sum(self.block_sizes)

    @property
    def scalar_count(self):
        if self.symmetric:
            return sum(k * (k + 1) // 2 for k in self.block_sizes)
        return sum(k * k for k in self.block_sizes)


@dataclass(frozen=True)
class ScalarVar:
    name: str
    index: int
    lower: float | None = None


@dataclass
class PsdConstraint:
    name: str
    expr: AffineMatrix


class ConicProgram:
    """A structured SDP: declare variables, add PSD constraints, set objective."""

    def __init__(self):
        self.matrix_vars = []
        self.scalar_vars = []
        self.psd_constraints = []
        self.objective = None  # dict global-index -> coefficient, minimized
        self._names = set()
        self._n_scalars = 0

    @property
    def n_scalars(self):
        return self._n_scalars

    def _claim(self, name):
        if name in self._names:
            raise ValueError(f"variable name {name!r} already used")
        self._names.add(name)

    def add_matrix_var(self, name, block_sizes, symmetric=True):
        self._claim(name)
        block_sizes = tuple(int(k) for k in block_sizes)
        if not block_sizes or any(k < 1 for k in block_sizes):
            raise ValueError("block sizes must be positive")
        var = MatrixVar(name, block_sizes, bool(symmetric), self._n_scalars)
        self.matrix_vars.append(var)
        self._n_scalars += var.scalar_count
        return var

    def add_scalar_var(self, name, lower=None):
        self._claim(name)
        var = ScalarVar(name, self._n_scalars, None if lower is None else float(lower))
        self.scalar_vars.append(var)
        self._n_scalars += 1
        return var

    def expr(self, var):
        """Affine expression equal to the variable itself.

        Matrix variables expand to their full block-diagonal matrix; scalar
        variables come back as a 1x1 expression.
        """
        if isinstance(var, ScalarVar):
            return AffineMatrix(np.zeros((1, 1)), {var.index: np.ones((1, 1))})
        d = var.dim
        coeffs = {}
        idx = var.offset
        boff = 0
        for k in var.block_sizes:
            if var.symmetric:
                for s in range(k):
                    for r in range(s + 1):
                        F = np.zeros((d, d))
                        F[boff + r, boff + s] = 1.0
                        F[boff + s, boff + r] = 1.0
                        coeffs[idx] = F
                        idx += 1
            else:
                for r in range(k):
                    for c in range(k):
                        F = np.zeros((d, d))
                        F[boff + r, boff + c] = 1.0
                        coeffs[idx] = F
                        idx += 1
            boff += k
        return AffineMatrix(np.zeros((d, d)), coeffs)

    def scalar_term(self, var, matrix):
        """``matrix * x`` for a scalar variable ``x`` and a constant matrix."""
        if not isinstance(var, ScalarVar):
            raise TypeError("scalar_term needs a ScalarVar")
        matrix = np.asarray(matrix, dtype=float)
        return AffineMatrix(np.zeros(matrix.shape), {var.index: matrix.copy()})

    def add_psd_constraint(self, expr, name=None):
        """Require ``expr >= 0`` in the PSD sense. ``expr`` must be square and
        symmetric (checked, then symmetrized exactly)."""
        if not isinstance(expr, AffineMatrix):
            expr = constant(expr)
        d0, d1 = expr.shape
        if d0 != d1:
            raise ValueError(f"PSD constraint must be square, got {expr.shape}")
        sym_coeffs = {}
        for label, F in [("constant term", expr.const)] + [
            (f"coefficient {i}", F) for i, F in expr.coeffs.items()
        ]:
            gap = float(np.max(np.abs(F - F.T))) if F.size else 0.0
            scale = 1.0 + float(np.max(np.abs(F))) if F.size else 1.0
            if gap > 1e-9 * scale:
                raise ValueError(f"PSD constraint {label} is not symmetric (gap {gap:.2e})")
        const = 0.5 * (expr.const + expr.const.T)
        for i, F in expr.coeffs.items():
            sym_coeffs[i] = 0.5 * (F + F.T)
        if name is None:
            name = f"psd{len(self.psd_constraints)}"
        con = PsdConstraint(name, AffineMatrix(const, sym_coeffs))
        self.psd_constraints.append(con)
        return con

    def set_objective(self, terms):
        """Minimize a linear functional given as {ScalarVar or index: coeff}."""
        obj = {}
        for var, coeff in terms.items():
            idx = var.index if isinstance(var, ScalarVar) else int(var)
            if not (0 <= idx < self._n_scalars):
                raise ValueError(f"objective references unknown scalar {idx}")
            obj[idx] = obj.get(idx, 0.0) + float(coeff)
        self.objective = obj

    # -- reading solutions back ------------------------------------------------

    def unpack(self, x):
        """Scalar assignment -> {name: matrix or float} for every variable."""
        out = {}
        for var in self.matrix_vars:
            d = var.dim
            X = np.zeros((d, d))
            idx = var.offset
            boff = 0
            for k in var.block_sizes:
                if var.symmetric:
                    for s in range(k):
                        for r in range(s + 1):
                            X[boff + r, boff + s] = x[idx]
                            X[boff + s, boff + r] = x[idx]
                            idx += 1
                else:
                    for r in range(k):
                        for c in range(k):
                            X[boff + r, boff + c] = x[idx]
                            idx += 1
                boff += k
            out[var.name] = X
        for var in self.scalar_vars:
            out[var.name] = float(x[var.index])
        return out

    def pack(self, assignment):
        """Inverse of :meth:`unpack`; symmetric blocks read the upper triangle."""
        x = np.zeros(self._n_scalars)
        for var in self.matrix_vars:
            X = np.asarray(assignment[var.name], dtype=float)
            idx = var.offset
            boff = 0
            for k in var.block_sizes:
                if var.symmetric:
                    for s in range(k):
                        for r in range(s + 1):
                            x[idx] = X[boff + r, boff + s]
                            idx += 1
                else:
                    for r in range(k):
                        for c in range(k):
                            x[idx] = X[boff + r, boff + c]
                            idx += 1
                boff += k
        for var in self.scalar_vars:
            x[var.index] = float(assignment[var.name])
        return x


# ---------------------------------------------------------------------------
# scalarization


@lru_cache(maxsize=None)
def _triangle_indices(d):
    """Column-wise upper-triangle index arrays: (0,0),(0,1),(1,1),(0,2),..."""
    rows, cols = [], []
    for c in range(d):
        for r in range(c + 1):
            rows.append(r)
            cols.append(c)
    return np.array(rows), np.array(cols)


def svec(F):
    """Pack a symmetric matrix into the scaled triangle vector with
    ``<F, G> == svec(F) @ svec(G)`` (off-diagonals carry sqrt(2))."""
    F = np.asarray(F, dtype=float)
    d = F.shape[0]
    r, c = _triangle_indices(d)
    w = np.where(r == c, 1.0, _SQRT2)
    return F[r, c] * w


def smat(v, d):
    """Inverse of :func:`svec` for dimension ``d``."""
    v = np.asarray(v, dtype=float)
    r, c = _triangle_indices(d)
    w = np.where(r == c, 1.0, 1.0 / _SQRT2)
    F = np.zeros((d, d))
    F[r, c] = v * w
    F[c, r] = F[r, c]
    return F


@dataclass
class PsdBlock:
    dim: int
    b: np.ndarray  # svec of the constant term
    A: np.ndarray  # column i = svec of coefficient of scalar i
    source: int  # index into program.psd_constraints


@dataclass
class StandardForm:
    """Scalarized program: rows satisfy ``b + A x`` in the respective cone."""

    n_vars: int
    c: np.ndarray
    has_objective: bool
    lin_b: np.ndarray
    lin_A: np.ndarray
    psd_blocks: list


def vectorize(program):
    """Lower a :class:`ConicProgram` to :class:`StandardForm`.

    Scalar lower bounds and 1x1 PSD constraints become nonnegativity rows;
    larger constraints become svec-packed PSD blocks. Round trip with
    :func:`smat` is exact."""
    n = program.n_scalars
    c = np.zeros(n)
    if program.objective:
        for i, v in program.objective.items():
            c[i] = v
    lin_rows_b, lin_rows_a = [], []
    for var in program.scalar_vars:
        if var.lower is not None:
            row = np.zeros(n)
            row[var.index] = 1.0
            lin_rows_b.append(-var.lower)
            lin_rows_a.append(row)
    psd_blocks = []
    for k, con in enumerate(program.psd_constraints):
        expr = con.expr
        d = expr.shape[0]
        if d == 1:
            row = np.zeros(n)
            for i, F in expr.coeffs.items():
                row[i] = F[0, 0]
            lin_rows_b.append(float(expr.const[0, 0]))
            lin_rows_a.append(row)
            continue
        t = d * (d + 1) // 2
        A = np.zeros((t, n))
        for i, F in expr.coeffs.items():
            A[:, i] = svec(F)
        psd_blocks.append(PsdBlock(dim=d, b=svec(expr.const), A=A, source=k))
    lin_b = np.array(lin_rows_b) if lin_rows_b else np.zeros(0)
    lin_A = np.vstack(lin_rows_a) if lin_rows_a else np.zeros((0, n))
    return StandardForm(
        n_vars=n,
        c=c,
        has_objective=bool(program.objective),
        lin_b=lin_b,
        lin_A=lin_A,
        psd_blocks=psd_blocks,
    )


def export_standard_form(program, path):
    """Write the scalarized constraints as plain text for external checking.

    Format: one line per nonzero, ``constraint matrix row col value``, where
    ``matrix`` 0 is the constant term and ``matrix`` i >= 1 is the coefficient
    of scalar variable i-1. Constraints are numbered in declaration order;
    scalar lower bounds follow as 1x1 constraints after the declared ones.
    """
    lines = ["# constraint matrix row col value"]

    def emit(k, m, F):
        for (r, c), v in np.ndenumerate(F):
            if v != 0.0:
                lines.append(f"{k} {m} {r} {c} {float(v)!r}")

    k = 0
    for con in program.psd_constraints:
        emit(k, 0, con.expr.const)
        for i, F in sorted(con.expr.coeffs.items()):
            emit(k, i + 1, F)
        k += 1
    for var in program.scalar_vars:
        if var.lower is not None:
            emit(k, 0, np.array([[-var.lower]]))
            emit(k, var.index + 1, np.ones((1, 1)))
            k += 1
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# solving


@dataclass(frozen=True)
class SolverTolerances:
    """Requested accuracy plus the slack used when re-checking solutions."""

    tol: float = 1e-8
    feas_slack: float = 1e-7  # 10x tol: accepted residual, relative to constraint scale
    max_iter: int = 200


@dataclass
class SolveOutcome:
    status: SolveStatus
    values: dict | None
    objective: float | None
    iterations: int
    solve_time: float
    adapter: str
    worst_residual: float | None = None
    message: str = ""

    @property
    def ok(self):
        return self.status == SolveStatus.OPTIMAL


@dataclass
class RawSolution:
    """What an adapter reports back before any re-checking."""

    category: str  # solved | almost | infeasible | unbounded | failed
    x: np.ndarray | None
    objective: float | None
    iterations: int
    message: str = ""


_ADAPTERS = {}
_PREFERRED = ("clarabel", "cvxopt")


def register_adapter(adapter):
    _ADAPTERS[adapter.name] = adapter


def available_adapters():
    return tuple(sorted(_ADAPTERS))


def get_adapter(name=None):
    if name is not None:
        if name not in _ADAPTERS:
            raise BackendError(
                f"solver adapter {name!r} not available (have: {available_adapters()})"
            )
        return _ADAPTERS[name]
    for cand in _PREFERRED:
        if cand in _ADAPTERS:
            return _ADAPTERS[cand]
    if _ADAPTERS:
        return _ADAPTERS[sorted(_ADAPTERS)[0]]
    raise BackendError("no solver adapter available; install clarabel or cvxopt")


def _residual_check(program, form, x):
    """Worst relative constraint violation of ``x`` (0.0 when clean)."""
    worst = 0.0
    if form.lin_b.size:
        vals = form.lin_b + form.lin_A @ x
        scale = np.maximum(1.0, np.abs(form.lin_b) + np.abs(form.lin_A) @ np.abs(x))
        worst = max(worst, float(np.max(-vals / scale)))
    for con in program.psd_constraints:
        if con.expr.shape[0] == 1:
            continue
        F = con.expr.value(x)
        lam = float(np.linalg.eigvalsh(F)[0])
        scale = max(1.0, float(np.max(np.abs(F))))
        worst = max(worst, -lam / scale)
    return max(worst, 0.0)


def solve(program, tolerances=None, adapter=None):
    """Solve a program and return a re-verified :class:`SolveOutcome`.

    Statuses: ``optimal`` (point returned and re-checked feasible),
    ``infeasible``, ``unbounded``, or ``numerical_failure`` (including the
    case where the solver claimed success but the point fails the residual
    re-check). Values are only populated on ``optimal``.
    """
    tolerances = tolerances or SolverTolerances()
    adapter = adapter if adapter is not None else get_adapter()
    if isinstance(adapter, str):
        adapter = get_adapter(adapter)
    form = vectorize(program)
    t0 = time.perf_counter()
    if form.lin_b.size == 0 and not form.psd_blocks:
        # unconstrained corner: feasible at zero, unbounded iff objective nonzero
        if form.has_objective and np.any(form.c):
            return SolveOutcome(
                SolveStatus.UNBOUNDED, None, None, 0, 0.0, adapter.name
            )
        x = np.zeros(form.n_vars)
        return SolveOutcome(
            SolveStatus.OPTIMAL, program.unpack(x), 0.0 if form.has_objective else None,
            0, 0.0, adapter.name, worst_residual=0.0,
        )
    try:
        raw = adapter.solve_form(form, tolerances)
    except Exception as exc:  # adapter blew up; report, don't crash callers
        return SolveOutcome(
            SolveStatus.NUMERICAL_FAILURE, None, None, 0,
            time.perf_counter() - t0, adapter.name, message=f"adapter error: {exc}",
        )
    elapsed = time.perf_counter() - t0
    if raw.category == "infeasible":
        return SolveOutcome(
            SolveStatus.INFEASIBLE, None, None, raw.iterations, elapsed,
            adapter.name, message=raw.message,
        )
    if raw.category == "unbounded":
        return SolveOutcome(
            SolveStatus.UNBOUNDED, None, None, raw.iterations, elapsed,
            adapter.name, message=raw.message,
        )
    if raw.category not in ("solved", "almost") or raw.x is None:
        return SolveOutcome(
            SolveStatus.NUMERICAL_FAILURE, None, None, raw.iterations, elapsed,
            adapter.name, message=raw.message or f"solver status {raw.category!r}",
        )
    x = np.asarray(raw.x, dtype=float)
    worst = _residual_check(program, form, x)
    if worst > tolerances.feas_slack:
        return SolveOutcome(
            SolveStatus.NUMERICAL_FAILURE, None, None, raw.iterations, elapsed,
            adapter.name, worst_residual=worst,
            message=f"returned point violates constraints (relative residual {worst:.2e})",
        )
    objective = float(form.c @ x) if form.has_objective else None
    return SolveOutcome(
        SolveStatus.OPTIMAL, program.unpack(x), objective, raw.iterations,
        elapsed, adapter.name, worst_residual=worst, message=raw.message,
    )


# ---------------------------------------------------------------------------
# adapters


class ClarabelAdapter:
    """Interior-point backend via clarabel's native triangle-packed cones."""

    name = "clarabel"
    reentrant = True

    def solve_form(self, form, tolerances):
        import clarabel
        from scipy import sparse

        A_parts = []
        b_parts = []
        cones = []
        if form.lin_b.size:
            A_parts.append(-form.lin_A)
            b_parts.append(form.lin_b)
            cones.append(clarabel.NonnegativeConeT(form.lin_b.size))
        for blk in form.psd_blocks:
            A_parts.append(-blk.A)
            b_parts.append(blk.b)
            cones.append(clarabel.PSDTriangleConeT(blk.dim))
        A = sparse.csc_matrix(np.vstack(A_parts))
        b = np.concatenate(b_parts)
        P = sparse.csc_matrix((form.n_vars, form.n_vars))
        settings = clarabel.DefaultSettings()
        settings.verbose = False
        settings.tol_gap_abs = tolerances.tol
        settings.tol_gap_rel = tolerances.tol
        settings.tol_feas = tolerances.tol
        settings.max_iter = tolerances.max_iter
        solver = clarabel.DefaultSolver(P, form.c, A, b, cones, settings)
        sol = solver.solve()
        status = str(sol.status)
        category = {
            "Solved": "solved",
            "AlmostSolved": "almost",
            "PrimalInfeasible": "infeasible",
            "AlmostPrimalInfeasible": "infeasible",
            "DualInfeasible": "unbounded",
            "AlmostDualInfeasible": "unbounded",
        }.get(status, "failed")
        x = np.asarray(sol.x, dtype=float) if category in ("solved", "almost") else None
        return RawSolution(
            category=category,
            x=x,
            objective=float(sol.obj_val) if x is not None else None,
            iterations=int(sol.iterations),
            message=status,
        )


class CvxoptAdapter:
    """Fallback backend on cvxopt's conelp-based ``solvers.sdp``."""

    name = "cvxopt"
    reentrant = True

    def solve_form(self, form, tolerances):
        import cvxopt
        import cvxopt.solvers

        def mat(a):
            return cvxopt.matrix(np.asarray(a, dtype=float))

        c = mat(form.c.reshape(-1, 1))
        Gl = hl = None
        if form.lin_b.size:
            Gl = mat(-form.lin_A)
            hl = mat(form.lin_b.reshape(-1, 1))
        Gs, hs = [], []
        for blk in form.psd_blocks:
            d = blk.dim
            cols = np.zeros((d * d, form.n_vars))
            for i in range(form.n_vars):
                col = blk.A[:, i]
                if np.any(col):
                    cols[:, i] = -smat(col, d).reshape(-1, order="F")
            Gs.append(mat(cols))
            hs.append(mat(smat(blk.b, d)))
        options = {
            "show_progress": False,
            "abstol": tolerances.tol,
            "reltol": tolerances.tol,
            "feastol": tolerances.tol,
            "maxiters": tolerances.max_iter,
        }
        sol = cvxopt.solvers.sdp(
            c, Gl=Gl, hl=hl, Gs=Gs or None, hs=hs or None, options=options
        )
        status = sol["status"]
        category = {
            "optimal": "solved",
            "primal infeasible": "infeasible",
            "dual infeasible": "unbounded",
        }.get(status, "failed")
        x = None
        if category == "solved" and sol["x"] is not None:
            x = np.asarray(sol["x"], dtype=float).ravel()
        elif status == "unknown" and sol["x"] is not None:
            # cvxopt reports near-solutions as unknown; let the re-check decide
            category = "almost"
            x = np.asarray(sol["x"], dtype=float).ravel()
        return RawSolution(
            category=category,
            x=x,
            objective=float(sol["primal objective"]) if x is not None else None,
            iterations=int(sol.get("iterations", 0)),
            message=status,
        )


def _autoregister():
    try:
        import clarabel  # noqa: F401

        register_adapter(ClarabelAdapter())
    except ImportError:
        pass
    try:
        import cvxopt  # noqa: F401

        register_adapter(CvxoptAdapter())
    except ImportError:
        pass


_autoregister()
