"""Dense linear programs and a two-phase tableau simplex solver.

The solver works on a dense tableau. Problems are first split into
independent blocks (variables that never share a constraint row are solved
separately), then each block is brought to standard form
``A y = b, y >= 0`` with row equilibration, and solved by a two-phase
simplex. Bland's rule is the default pricing and guarantees termination;
Dantzig and steepest-edge pricing (both falling back to Bland after a run
of degenerate pivots) are available for larger problems. After each primal
run the basis is refactorized; small primal infeasibilities left by an
ill-conditioned basis are repaired with dual simplex pivots.
The phase-one basis of each block is kept, so several objectives over the
same feasible set are cheap to solve one after another.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .errors import RankDeficientError, SolverError, StructuralError

FEAS_TOL = 1e-8
OPT_TOL = 1e-9
PIVOT_TOL = 1e-9
DROP_TOL = 1e-14
COEF_DROP_TOL = 1e-13  # after row equilibration, as commercial solvers do


def _as_matrix(a, n):
    if a is None:
        return np.zeros((0, n))
    a = np.asarray(a, dtype=float)
    if a.ndim == 1:
        a = a.reshape(1, -1) if a.size else np.zeros((0, n))
    return a


def _as_vector(v, m):
    if v is None:
        return np.zeros(m)
    return np.asarray(v, dtype=float).reshape(-1)


@dataclass
class LinearProgram:
    """``max`` or ``min`` of ``c @ x + offset`` subject to

    ``A_eq @ x == b_eq``, ``A_ub @ x <= b_ub`` and ``lb <= x <= ub``.
    Missing bounds default to ``x >= 0``.
    """

    c: np.ndarray
    sense: str = "max"
    A_eq: Optional[np.ndarray] = None
    b_eq: Optional[np.ndarray] = None
    A_ub: Optional[np.ndarray] = None
    b_ub: Optional[np.ndarray] = None
    lb: Optional[np.ndarray] = None
    ub: Optional[np.ndarray] = None
    offset: float = 0.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).reshape(-1)
        n = self.c.size
        if self.sense not in ("max", "min"):
            raise StructuralError(f"sense must be 'max' or 'min', got {self.sense!r}")
        self.A_eq = _as_matrix(self.A_eq, n)
        self.A_ub = _as_matrix(self.A_ub, n)
        self.b_eq = _as_vector(self.b_eq, self.A_eq.shape[0])
        self.b_ub = _as_vector(self.b_ub, self.A_ub.shape[0])
        self.lb = np.zeros(n) if self.lb is None else np.asarray(self.lb, dtype=float).reshape(-1).copy()
        self.ub = np.full(n, np.inf) if self.ub is None else np.asarray(self.ub, dtype=float).reshape(-1).copy()
        for name, mat, rhs in (("A_eq", self.A_eq, self.b_eq), ("A_ub", self.A_ub, self.b_ub)):
            if mat.shape[1] != n:
                raise StructuralError(f"{name} has {mat.shape[1]} columns, objective has {n}")
            if rhs.size != mat.shape[0]:
                raise StructuralError(f"{name} has {mat.shape[0]} rows but rhs has {rhs.size}")
        if self.lb.size != n or self.ub.size != n:
            raise StructuralError("bound vectors must match the number of variables")
        if np.any(self.lb > self.ub):
            raise StructuralError("lower bound exceeds upper bound")
        if np.any(self.lb == np.inf) or np.any(self.ub == -np.inf):
            raise StructuralError("infinite bound on the wrong side")

    @property
    def n(self) -> int:
        return self.c.size

    def objective(self, x) -> float:
        return float(self.c @ x + self.offset)

    def with_objective(self, c, sense=None, offset=None) -> "LinearProgram":
        return replace(self, c=np.asarray(c, dtype=float),
                       sense=self.sense if sense is None else sense,
                       offset=self.offset if offset is None else offset,
                       meta=dict(self.meta))

    def add_eq(self, rows, rhs) -> "LinearProgram":
        rows = _as_matrix(rows, self.n)
        return replace(self, A_eq=np.vstack([self.A_eq, rows]),
                       b_eq=np.concatenate([self.b_eq, _as_vector(rhs, rows.shape[0])]),
                       meta=dict(self.meta))

    def add_ub(self, rows, rhs) -> "LinearProgram":
        rows = _as_matrix(rows, self.n)
        return replace(self, A_ub=np.vstack([self.A_ub, rows]),
                       b_ub=np.concatenate([self.b_ub, _as_vector(rhs, rows.shape[0])]),
                       meta=dict(self.meta))

    def violation(self, x) -> float:
        """Largest constraint violation of the point ``x``."""
        x = np.asarray(x, dtype=float)
        v = 0.0
        if self.A_eq.shape[0]:
            v = max(v, float(np.max(np.abs(self.A_eq @ x - self.b_eq))))
        if self.A_ub.shape[0]:
            v = max(v, float(np.max(self.A_ub @ x - self.b_ub)))
        v = max(v, float(np.max(self.lb - x, initial=0.0)), float(np.max(x - self.ub, initial=0.0)))
        return v

    def dump(self, fp=None) -> str:
        """Plain-text dump: header, objective, then one line per row.

        Row lines read ``E|L <coefficients...> <rhs>`` with ``E`` for
        equality and ``L`` for ``<=``; bounds follow as ``B <lb> <ub>``.
        """
        out = io.StringIO()
        out.write(f"LP {self.sense} {self.n} {self.A_eq.shape[0]} {self.A_ub.shape[0]}\n")
        out.write("C " + " ".join(repr(float(v)) for v in self.c) + f" {self.offset!r}\n")
        for row, rhs in zip(self.A_eq, self.b_eq):
            out.write("E " + " ".join(repr(float(v)) for v in row) + f" {float(rhs)!r}\n")
        for row, rhs in zip(self.A_ub, self.b_ub):
            out.write("L " + " ".join(repr(float(v)) for v in row) + f" {float(rhs)!r}\n")
        for lo, hi in zip(self.lb, self.ub):
            out.write(f"B {float(lo)!r} {float(hi)!r}\n")
        text = out.getvalue()
        if fp is not None:
            fp.write(text)
        return text


@dataclass
class LpSolution:
    status: str
    objective_value: float = float("nan")
    solution: Optional[np.ndarray] = None
    iterations: int = 0
    diagnostics: dict = field(default_factory=dict)

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


# ---------------------------------------------------------------------------
# standard form


@dataclass
class _Standard:
    A: np.ndarray           # m x N, rows equilibrated, rhs >= 0
    b: np.ndarray
    basis0: list            # slack column usable as initial basic variable, or None
    col_var: np.ndarray     # original variable of each structural column (-1 for slacks)
    col_sign: np.ndarray
    x0: np.ndarray
    n_struct: int
    infeasible: bool = False


def _standard_form(lp: LinearProgram, var_idx, eq_rows, ub_rows, x_fixed) -> _Standard:
    lb, ub = lp.lb[var_idx], lp.ub[var_idx]
    cols_var, cols_sign, ub_cols = [], [], []
    x0 = np.zeros(len(var_idx))
    for j in range(len(var_idx)):
        if np.isfinite(lb[j]):
            x0[j] = lb[j]
            cols_var.append(j)
            cols_sign.append(1.0)
            if np.isfinite(ub[j]):
                ub_cols.append((len(cols_var) - 1, ub[j] - lb[j]))
        elif np.isfinite(ub[j]):
            x0[j] = ub[j]
            cols_var.append(j)
            cols_sign.append(-1.0)
        else:
            cols_var += [j, j]
            cols_sign += [1.0, -1.0]
    col_var = np.array(cols_var, dtype=int)
    col_sign = np.array(cols_sign)
    n_struct = col_var.size

    def block(mat, rhs):
        sub = mat[np.ix_(rhs, var_idx)] if len(rhs) else np.zeros((0, len(var_idx)))
        return sub

    Aeq = block(lp.A_eq, eq_rows)
    Aub = block(lp.A_ub, ub_rows)
    beq = lp.b_eq[eq_rows] - (lp.A_eq[eq_rows] @ x_fixed if len(eq_rows) else 0.0) - Aeq @ x0
    bub = lp.b_ub[ub_rows] - (lp.A_ub[ub_rows] @ x_fixed if len(ub_rows) else 0.0) - Aub @ x0
    Seq = Aeq[:, col_var] * col_sign
    Sub = Aub[:, col_var] * col_sign
    n_ubc = len(ub_cols)
    Sbound = np.zeros((n_ubc, n_struct))
    bbound = np.zeros(n_ubc)
    for r, (cidx, width) in enumerate(ub_cols):
        Sbound[r, cidx] = 1.0
        bbound[r] = width

    rows = [Seq, Sub, Sbound]
    rhs = np.concatenate([beq, bub, bbound])
    m_eq, m_ub = Seq.shape[0], Sub.shape[0] + n_ubc
    A = np.vstack(rows) if n_struct else np.zeros((m_eq + m_ub, 0))
    slack = np.zeros((m_eq + m_ub, m_ub))
    slack[m_eq:, :] = np.eye(m_ub)
    A = np.hstack([A, slack])
    infeasible = False
    keep = []
    for i in range(A.shape[0]):
        scale = np.max(np.abs(A[i, :n_struct])) if n_struct else 0.0
        if scale == 0.0:
            if i < m_eq:
                if abs(rhs[i]) > FEAS_TOL:
                    infeasible = True
                continue
            if rhs[i] < -FEAS_TOL:
                infeasible = True
            continue
        A[i] /= scale
        rhs[i] /= scale
        keep.append(i)
    A, rhs = A[keep], rhs[keep]
    A[np.abs(A) < COEF_DROP_TOL] = 0.0
    basis0 = []
    for r, i in enumerate(keep):
        if i >= m_eq:
            s = n_struct + (i - m_eq)
            if rhs[r] < 0:
                A[r] *= -1.0
                rhs[r] *= -1.0
                basis0.append(None)
            else:
                basis0.append(s)
        else:
            if rhs[r] < 0:
                A[r] *= -1.0
                rhs[r] *= -1.0
            basis0.append(None)
    # drop slack columns of removed rows
    used = np.ones(A.shape[1], dtype=bool)
    for i in range(m_eq, m_eq + m_ub):
        if i not in keep:
            used[n_struct + (i - m_eq)] = False
    remap = -np.ones(A.shape[1], dtype=int)
    remap[used] = np.arange(int(used.sum()))
    A = A[:, used]
    basis0 = [None if b is None else int(remap[b]) for b in basis0]
    return _Standard(A, rhs, basis0, col_var, col_sign, x0, n_struct, infeasible)


# ---------------------------------------------------------------------------
# tableau simplex


class _Tableau:
    """Dense tableau ``[A | b]`` with the reduced-cost row appended last."""

    def __init__(self, A, b, basis, n_cols, opts):
        self.A0 = A
        self.b0 = b
        self.m = A.shape[0]
        self.n_cols = n_cols
        self.basis = list(basis)
        self.opts = opts
        self.T = np.zeros((self.m + 1, n_cols + 1))
        self.iterations = 0
        self.cost = np.zeros(n_cols)
        self.active = np.ones(n_cols, dtype=bool)

    def copy(self):
        other = object.__new__(_Tableau)
        other.__dict__.update(self.__dict__)
        other.T = self.T.copy()
        other.basis = list(self.basis)
        other.cost = self.cost.copy()
        other.active = self.active.copy()
        other.iterations = 0
        return other

    def set_cost(self, cost):
        self.cost = np.asarray(cost, dtype=float)
        m = self.m
        cb = self.cost[self.basis] if m else np.zeros(0)
        self.T[m, :-1] = self.cost - cb @ self.T[:m, :-1]
        self.T[m, -1] = -cb @ self.T[:m, -1]

    def refactor(self, A_full):
        """Rebuild the tableau from the original matrix and current basis."""
        m = self.m
        if m == 0:
            self.set_cost(self.cost)
            return True
        B = A_full[:, self.basis]
        try:
            body = np.linalg.solve(B, np.column_stack([A_full, self.b0]))
        except np.linalg.LinAlgError:
            return False
        if not np.all(np.isfinite(body)):
            return False
        self.T[:m] = body
        self.T[:m][np.abs(self.T[:m]) < DROP_TOL] = 0.0
        self.set_cost(self.cost)
        return True

    def pivot(self, r, q):
        T = self.T
        prow = T[r] / T[r, q]
        prow[np.abs(prow) < DROP_TOL] = 0.0
        col = T[:, q].copy()
        col[r] = 0.0
        nz = np.flatnonzero(col)
        if nz.size:
            upd = T[nz] - np.outer(col[nz], prow)
            upd[np.abs(upd) < DROP_TOL] = 0.0
            upd[:, q] = 0.0
            T[nz] = upd
        T[r] = prow
        T[r, q] = 1.0
        self.basis[r] = q
        self.iterations += 1

    def run(self, A_full, max_iter):
        """Minimise the current cost. Returns 'optimal' or 'unbounded'."""
        opts = self.opts
        m = self.m
        bland = opts["pricing"] == "bland"
        degenerate_run = 0
        since_refactor = 0
        while True:
            if self.iterations >= max_iter:
                raise SolverError(f"simplex hit the iteration limit ({max_iter})",
                                  diagnostics={"iterations": self.iterations})
            red = self.T[m, :-1]
            cand = np.flatnonzero((red < -opts["opt_tol"]) & self.active)
            if cand.size == 0:
                return "optimal"
            use_bland = bland or degenerate_run > opts["stall_limit"]
            if use_bland:
                q = int(cand[0])
            elif opts["pricing"] == "steepest":
                norms = np.sqrt(1.0 + np.einsum("ij,ij->j", self.T[:m, cand], self.T[:m, cand]))
                q = int(cand[np.argmin(red[cand] / norms)])
            else:
                q = int(cand[np.argmin(red[cand])])
            col = self.T[:m, q]
            rows = np.flatnonzero(col > opts["pivot_tol"])
            if rows.size == 0:
                return "unbounded"
            # rows with a pivot tiny relative to the column are skipped; the
            # small infeasibility this may leave is repaired after refactoring
            rows = rows[col[rows] >= opts["rel_pivot_tol"] * col[rows].max()]
            rhs = np.maximum(self.T[rows, -1], 0.0)
            a = col[rows]
            ratios = rhs / a
            best = ratios.min()
            # Harris-style pass: rows whose ratio is within the feasibility
            # tolerance of the minimum are all admissible leaving rows
            relaxed = ((rhs + opts["feas_tol"]) / a).min()
            ok = ratios <= max(relaxed, best + 1e-12 * max(1.0, best))
            cands, cand_a = rows[ok], a[ok]
            largest = cand_a.max()
            if use_bland:
                exact = ratios[ok] <= best + 1e-12 * max(1.0, best)
                sub = cands[exact]
                r = int(sub[np.argmin([self.basis[i] for i in sub])])
                if col[r] < 1e-3 * largest:
                    r = int(cands[np.argmax(cand_a)])
            else:
                r = int(cands[np.argmax(cand_a)])
            degenerate_run = degenerate_run + 1 if best <= 1e-12 else 0
            self.pivot(r, q)
            since_refactor += 1
            if since_refactor >= opts["refactor_every"]:
                self.refactor(A_full)
                since_refactor = 0

    def dual_cleanup(self, A_full, max_pivots):
        """Dual simplex pivots that repair primal infeasibilities.

        Used after refactorization of a dual feasible basis: negative basic
        values are pivoted out while the reduced costs stay nonnegative (up
        to tolerance). Returns True once the basis is primal feasible.
        """
        opts = self.opts
        m = self.m
        if m == 0:
            return True
        for n_piv in range(max_pivots):
            rhs = self.T[:m, -1]
            r = int(np.argmin(rhs))
            if rhs[r] >= -opts["feas_tol"]:
                return True
            row = self.T[r, :-1]
            cand = np.flatnonzero((row < -opts["pivot_tol"]) & self.active)
            if cand.size == 0:
                return False
            red = np.maximum(self.T[m, cand], 0.0)
            ratios = red / -row[cand]
            best = ratios.min()
            ok = ratios <= best + opts["opt_tol"] / np.abs(row[cand])
            sub = cand[ok]
            self.pivot(r, int(sub[np.argmax(np.abs(row[sub]))]))
            if (n_piv + 1) % 25 == 0 and not self.refactor(A_full):
                return False
        return False

    def primal_ok(self):
        return self.m == 0 or bool(np.all(self.T[: self.m, -1] >= -self.opts["feas_tol"]))

    def dual_ok(self):
        return bool(np.all(self.T[self.m, :-1][self.active] >= -self.opts["opt_tol"]))

    def settle(self, A_full, max_iter, rounds=6):
        """Alternate primal runs, refactorization and dual repair.

        Returns 'optimal', 'unbounded' or 'stuck' (no clean basis within
        ``rounds`` rounds; the last basis is kept).
        """
        for _ in range(rounds):
            if self.run(A_full, max_iter) == "unbounded":
                return "unbounded"
            if not self.refactor(A_full):
                return "stuck"
            if self.primal_ok() and self.dual_ok():
                return "optimal"
            if not self.primal_ok():
                self.dual_cleanup(A_full, max(50, 2 * self.m))
                if not self.refactor(A_full):
                    return "stuck"
                if self.primal_ok() and self.dual_ok():
                    return "optimal"
        return "stuck"

    def values(self):
        y = np.zeros(self.n_cols)
        if self.m:
            y[self.basis] = np.maximum(self.T[: self.m, -1], 0.0)
        return y


_DEFAULTS = dict(feas_tol=FEAS_TOL, opt_tol=OPT_TOL, pivot_tol=PIVOT_TOL, pricing="bland",
                 stall_limit=50, refactor_every=400, max_iter=200000, max_restarts=3,
                 accept_tol=1e-6, rel_pivot_tol=1e-6)


class _Block:
    """One independent block of an LP, solved by the tableau simplex."""

    def __init__(self, lp, var_idx, eq_rows, ub_rows, x_fixed, opts):
        self.lp = lp
        self.var_idx = np.asarray(var_idx, dtype=int)
        self.opts = opts
        self.std = _standard_form(lp, self.var_idx, eq_rows, ub_rows, x_fixed)
        self.phase1_iterations = 0
        self.feasible = not self.std.infeasible
        self.phase1_residual = 0.0
        if self.feasible:
            self._phase_one()

    def _phase_one(self):
        std, opts = self.std, self.opts
        m, N = std.A.shape
        art_rows = [i for i, b in enumerate(std.basis0) if b is None]
        n_art = len(art_rows)
        A_full = np.hstack([std.A, np.zeros((m, n_art))])
        basis = list(std.basis0)
        for k, i in enumerate(art_rows):
            A_full[i, N + k] = 1.0
            basis[i] = N + k
        tab = _Tableau(A_full, std.b, basis, N + n_art, opts)
        tab.T[:m, :-1] = A_full
        tab.T[:m, -1] = std.b
        cost = np.zeros(N + n_art)
        cost[N:] = 1.0
        tab.set_cost(cost)
        tab.settle(A_full, opts["max_iter"])
        residual = -tab.T[m, -1]
        self.phase1_iterations = tab.iterations
        self.phase1_residual = float(residual)
        if residual > opts["feas_tol"]:
            self.feasible = False
            return
        # drive artificial variables out of the basis
        keep_rows = []
        for i in range(m):
            if tab.basis[i] >= N:
                row = tab.T[i, :N]
                cands = np.flatnonzero(np.abs(row) > opts["pivot_tol"])
                if cands.size:
                    tab.pivot(i, int(cands[np.argmax(np.abs(row[cands]))]))
                    keep_rows.append(i)
            else:
                keep_rows.append(i)
        keep_rows = [i for i in keep_rows if tab.basis[i] < N]
        T = np.vstack([tab.T[keep_rows][:, list(range(N)) + [N + n_art]], np.zeros((1, N + 1))])
        new = _Tableau(std.A[keep_rows], std.b[keep_rows], [tab.basis[i] for i in keep_rows], N, opts)
        new.T = T
        self.A2 = std.A[keep_rows]
        self.tableau = new

    def std_cost(self, c_block):
        std = self.std
        return np.concatenate([c_block[std.col_var] * std.col_sign,
                               np.zeros(std.A.shape[1] - std.n_struct)])

    def optimize(self, c_block):
        """Minimise ``c_block @ x`` over this block. Returns (status, x, iterations)."""
        std = self.std
        if not self.feasible:
            return "infeasible", None, self.phase1_iterations
        cost = self.std_cost(c_block)
        tab = self.tableau.copy()
        tab.set_cost(cost)
        iterations = 0
        restarts = 0
        while True:
            status = tab.settle(self.A2, self.opts["max_iter"])
            iterations += tab.iterations
            tab.iterations = 0
            if status == "unbounded":
                return "unbounded", None, iterations
            y = tab.values()
            if status == "optimal":
                break
            if tab.dual_ok():
                # near-dependent rows: accept if the clipped point is within
                # accept_tol of the original constraints
                resid = np.abs(self.A2 @ y - tab.b0).max() if tab.m else 0.0
                if resid <= self.opts["accept_tol"]:
                    break
            restarts += 1
            if restarts > self.opts["max_restarts"]:
                raise SolverError("simplex lost feasibility after refactorization",
                                  lp=self.lp, diagnostics={"restarts": restarts})
            # start again from the phase-one basis with a stricter pivot
            # tolerance and the other pricing rule
            opts = dict(self.opts)
            opts["pivot_tol"] = min(1e-5, self.opts["pivot_tol"] * 100.0 ** restarts)
            opts["pricing"] = "dantzig" if restarts % 2 else self.opts["pricing"]
            tab = self.tableau.copy()
            tab.opts = opts
            tab.set_cost(cost)
        x = std.x0.copy()
        np.add.at(x, std.col_var, std.col_sign * y[: std.n_struct])
        return "optimal", x, iterations


def _components(lp: LinearProgram, free_vars):
    """Group variables that share a constraint row (union-find)."""
    parent = {int(j): int(j) for j in free_vars}

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for mat in (lp.A_eq, lp.A_ub):
        for row in mat:
            nz = [int(j) for j in np.flatnonzero(row) if int(j) in parent]
            for j in nz[1:]:
                ra, rb = find(nz[0]), find(j)
                if ra != rb:
                    parent[max(ra, rb)] = min(ra, rb)
    groups = {}
    for j in free_vars:
        groups.setdefault(find(int(j)), []).append(int(j))
    return [np.array(g) for _, g in sorted(groups.items())]


class SimplexSolver:
    """Feasible set of a :class:`LinearProgram`, ready for many objectives.

    Phase one runs once per independent block at construction; every call to
    :meth:`optimize` starts phase two from that basis.
    """

    def __init__(self, lp: LinearProgram, decompose: bool = True, **options):
        unknown = set(options) - set(_DEFAULTS)
        if unknown:
            raise TypeError(f"unknown solver options: {sorted(unknown)}")
        self.opts = {**_DEFAULTS, **options}
        if self.opts["pricing"] not in ("bland", "dantzig", "steepest"):
            raise ValueError("pricing must be 'bland', 'dantzig' or 'steepest'")
        self.lp = lp
        n = lp.n
        fixed = lp.lb == lp.ub
        self.x_fixed_full = np.where(fixed, lp.lb, 0.0)
        free = np.flatnonzero(~fixed)
        self.fixed = fixed
        groups = _components(lp, free) if decompose else ([free] if free.size else [])
        self.blocks = []
        covered_eq, covered_ub = set(), set()
        for g in groups:
            mask = np.zeros(n, dtype=bool)
            mask[g] = True
            eq_rows = [i for i in range(lp.A_eq.shape[0]) if np.any(lp.A_eq[i, mask])]
            ub_rows = [i for i in range(lp.A_ub.shape[0]) if np.any(lp.A_ub[i, mask])]
            covered_eq.update(eq_rows)
            covered_ub.update(ub_rows)
            self.blocks.append(_Block(lp, g, eq_rows, ub_rows, self.x_fixed_full, self.opts))
        # rows touching only fixed variables
        self.constant_rows_ok = True
        for i in set(range(lp.A_eq.shape[0])) - covered_eq:
            if abs(lp.A_eq[i] @ self.x_fixed_full - lp.b_eq[i]) > self.opts["feas_tol"]:
                self.constant_rows_ok = False
        for i in set(range(lp.A_ub.shape[0])) - covered_ub:
            if lp.A_ub[i] @ self.x_fixed_full - lp.b_ub[i] > self.opts["feas_tol"]:
                self.constant_rows_ok = False

    @property
    def feasible(self) -> bool:
        return self.constant_rows_ok and all(b.feasible for b in self.blocks)

    @property
    def phase1_iterations(self) -> int:
        return sum(b.phase1_iterations for b in self.blocks)

    def optimize(self, c=None, sense=None, offset=None) -> LpSolution:
        lp = self.lp
        c = lp.c if c is None else np.asarray(c, dtype=float)
        sense = lp.sense if sense is None else sense
        offset = lp.offset if offset is None else offset
        diag = {"blocks": len(self.blocks), "phase1_iterations": self.phase1_iterations,
                "pricing": self.opts["pricing"]}
        if not self.feasible:
            return LpSolution("infeasible", iterations=self.phase1_iterations, diagnostics=diag)
        sign = -1.0 if sense == "max" else 1.0
        x = self.x_fixed_full.copy()
        iterations = self.phase1_iterations
        for block in self.blocks:
            status, xb, it = block.optimize(sign * c[block.var_idx])
            iterations += it
            if status != "optimal":
                return LpSolution(status, iterations=iterations, diagnostics=diag)
            x[block.var_idx] = xb
        value = float(c @ x + offset)
        diag["violation"] = lp.violation(x)
        return LpSolution("optimal", value, x, iterations, diag)


def solve(lp: LinearProgram, decompose: bool = True, **options) -> LpSolution:
    """Solve ``lp`` with the two-phase simplex.

    Options: ``feas_tol`` (1e-8), ``opt_tol`` (1e-9), ``pivot_tol``,
    ``pricing`` ('bland', 'dantzig' or 'steepest'), ``max_iter``.
    """
    return SimplexSolver(lp, decompose=decompose, **options).optimize()


def is_feasible(lp: LinearProgram, **options) -> bool:
    return SimplexSolver(lp, **options).feasible


def feasible_midpoint_check(lp: LinearProgram, target_row, value, tol: float = 1e-7,
                            **options) -> bool:
    """True iff ``target_row @ x == value`` can be added without losing feasibility.

    The pin is imposed as the band ``|target_row @ x - value| <= tol`` so that
    an attained optimum, known only to solver precision, still counts.
    """
    row = np.asarray(target_row, dtype=float).reshape(1, -1)
    pinned = lp.add_ub(np.vstack([row, -row]), [value + tol, -value + tol])
    return SimplexSolver(pinned, **options).feasible


# ---------------------------------------------------------------------------
# rank and rescaling


def _gauss_jordan(M, tol):
    """Row-reduce ``M`` with partial pivoting; returns (E, R, pivot_cols, dependent_cols).

    ``E @ M == R`` where ``E`` accumulates the same row operations on an
    identity matrix.
    """
    R = np.array(M, dtype=float)
    n_rows, n_cols = R.shape
    E = np.eye(n_rows)
    scale = np.max(np.abs(R)) if R.size else 0.0
    tol = tol * max(scale, 1.0) * max(n_rows, n_cols, 1)
    pivots, dependent = [], []
    r = 0
    for j in range(n_cols):
        if r >= n_rows:
            dependent.append(j)
            continue
        p = r + int(np.argmax(np.abs(R[r:, j])))
        if abs(R[p, j]) <= tol:
            dependent.append(j)
            continue
        if p != r:
            R[[r, p]] = R[[p, r]]
            E[[r, p]] = E[[p, r]]
        piv = R[r, j]
        R[r] /= piv
        E[r] /= piv
        factors = R[:, j].copy()
        factors[r] = 0.0
        nz = np.flatnonzero(factors)
        if nz.size:
            R[nz] -= np.outer(factors[nz], R[r])
            E[nz] -= np.outer(factors[nz], E[r])
        pivots.append(j)
        r += 1
    return E, R, pivots, dependent


@dataclass
class RankCheck:
    full_rank: bool
    rank: int
    deficient_rows: tuple = ()

    def __bool__(self):
        return self.full_rank


def full_rank_check(B, tol: float = 1e-12) -> RankCheck:
    """Row-rank test by the same pivoted elimination used in :func:`rescale`.

    Rows are reported deficient when they are linear combinations of the
    rows before them.
    """
    B = np.atleast_2d(np.asarray(B, dtype=float))
    _, _, pivots, dependent = _gauss_jordan(B.T, tol)
    return RankCheck(not dependent, len(pivots), tuple(dependent))


@dataclass
class RescaleTransform:
    X: np.ndarray
    reduced: np.ndarray
    rows: tuple

    def to_original(self, theta_tilde) -> np.ndarray:
        return self.X @ theta_tilde


def rescale(lp: LinearProgram, rows=None, tol: float = 1e-12):
    """Rewrite ``lp`` in variables ``theta_tilde = X^{-1} theta`` so the chosen
    equality rows become ``[I, 0]``.

    ``X`` comes from Gauss-Jordan elimination with partial pivoting on the
    transposed equality block, mirrored on an identity matrix and transposed.
    Bounds on ``theta`` turn into general inequalities on ``X theta_tilde``
    and ``theta_tilde`` itself is free.
    """
    rows = tuple(range(lp.A_eq.shape[0])) if rows is None else tuple(rows)
    B = lp.A_eq[list(rows)]
    E, R, pivots, dependent = _gauss_jordan(B.T, tol)
    if dependent:
        raise RankDeficientError(
            f"equality rows {[rows[j] for j in dependent]} are linearly dependent",
            rows=[rows[j] for j in dependent])
    X = E.T
    reduced = B @ X
    reduced[np.abs(reduced) < 1e-13] = 0.0
    other = [i for i in range(lp.A_eq.shape[0]) if i not in rows]
    n = lp.n
    A_eq = np.vstack([reduced, lp.A_eq[other] @ X]) if other else reduced
    b_eq = np.concatenate([lp.b_eq[list(rows)], lp.b_eq[other]])
    ub_blocks, ub_rhs = [], []
    if lp.A_ub.shape[0]:
        ub_blocks.append(lp.A_ub @ X)
        ub_rhs.append(lp.b_ub)
    lo = np.isfinite(lp.lb)
    hi = np.isfinite(lp.ub)
    if lo.any():
        ub_blocks.append(-X[lo])
        ub_rhs.append(-lp.lb[lo])
    if hi.any():
        ub_blocks.append(X[hi])
        ub_rhs.append(lp.ub[hi])
    A_ub = np.vstack(ub_blocks) if ub_blocks else None
    b_ub = np.concatenate(ub_rhs) if ub_rhs else None
    new = LinearProgram(lp.c @ X, lp.sense, A_eq, b_eq, A_ub, b_ub,
                        lb=np.full(n, -np.inf), ub=np.full(n, np.inf), offset=lp.offset,
                        meta={**lp.meta, "rescaled": True})
    return new, RescaleTransform(X, reduced, rows)
