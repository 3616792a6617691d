"""Assemble and solve the sieve linear programs that bound a target.

The decision vector holds Bernstein coefficients ``theta[e, k, x]`` of the
latent type densities ``q(e | u, x)`` (layout in :class:`SieveLayout`).
Constraints:

* data rows: for each observed ``(d, z, w, x)``,
  ``sum_{e: Y_e(d,w)=1} sum_k theta[e,k,x] * int_{U^d} b_k = p(1, d | z, w, x)``
  where ``U^1 = [0, P]`` and ``U^0 = (P, 1]``;
* simplex rows ``sum_e theta[e, k, x] = 1`` and ``theta >= 0``;
* rows added by the identifying assumptions.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import time
from dataclasses import asdict, dataclass, field, replace
from typing import Optional

import numpy as np

from .bernstein import basis_all, prefix_all, suffix_all
from .data import CellDistribution
from .errors import ConfigurationError, DataError, SolverError
from .latent import (AssumptionSpec, SieveLayout, assumption_constraints, direction_space,
                     enumerate_maps, response_table)
from .lp import LinearProgram, SimplexSolver, rescale
from .targets import TargetSpec, objective_coefficients

NORM_MODES = ("Linf", "L1")


@dataclass
class EngineConfig:
    """Settings for one bounds computation.

    ``assumptions`` is a sequence of :class:`AssumptionSpec` (strings are
    accepted and converted). ``eta`` relaxes every data row to
    ``|r theta - p| <= eta`` (``Linf``) or bounds the total absolute
    deviation by ``eta`` (``L1``). ``use_w=False`` collapses W before
    building the program.
    """

    K: int = 50
    assumptions: tuple = ()
    eta: float = 0.0
    norm_mode: str = "Linf"
    w_in_selection: bool = False
    rescale: bool = False
    use_w: bool = True
    include_y0_rows: bool = False
    solver: dict = field(default_factory=dict)

    def __post_init__(self):
        if int(self.K) != self.K or self.K < 1:
            raise ConfigurationError(f"K must be a positive integer, got {self.K!r}")
        self.K = int(self.K)
        if not self.eta >= 0:
            raise ConfigurationError(f"eta must be nonnegative, got {self.eta!r}")
        if self.norm_mode not in NORM_MODES:
            raise ConfigurationError(f"norm_mode must be one of {NORM_MODES}, got {self.norm_mode!r}")
        specs = []
        for a in self.assumptions:
            if isinstance(a, str):
                a = AssumptionSpec(a, "auto")
            elif isinstance(a, dict):
                a = AssumptionSpec(a["kind"], a.get("direction", "auto"))
            specs.append(a)
        self.assumptions = tuple(s for s in specs if s.kind != "NONE")

    def to_dict(self) -> dict:
        out = asdict(self)
        out["assumptions"] = [a.to_dict() for a in self.assumptions]
        return out

    def with_(self, **kw) -> "EngineConfig":
        return replace(self, **kw)


@dataclass
class BoundsResult:
    target: str
    lower: float
    upper: float
    status_lower: str
    status_upper: str
    K: int
    eta: float = 0.0
    assumptions: list = field(default_factory=list)
    directions: list = field(default_factory=list)
    argmin: Optional[np.ndarray] = None
    argmax: Optional[np.ndarray] = None
    diagnostics: dict = field(default_factory=dict)
    timing: float = 0.0

    @property
    def refuted(self) -> bool:
        return self.status_lower == "infeasible" and self.status_upper == "infeasible"

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def contains(self, value, tol=0.0) -> bool:
        return self.lower - tol <= value <= self.upper + tol

    def to_dict(self) -> dict:
        def num(v):
            return None if v is None or not np.isfinite(v) else float(v)
        return {"target": self.target, "assumptions": self.assumptions, "K": self.K,
                "eta": self.eta, "lower": num(self.lower), "upper": num(self.upper),
                "status": {"lower": self.status_lower, "upper": self.status_upper},
                "refuted": self.refuted,
                "directions": [list(map(list, d)) for d in self.directions],
                "timing": self.timing, "diagnostics": self.diagnostics}

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    CSV_FIELDS = ("target", "K", "eta", "lower", "upper", "status_lower", "status_upper")

    def csv_row(self) -> dict:
        return {"target": self.target, "K": self.K, "eta": self.eta, "lower": self.lower,
                "upper": self.upper, "status_lower": self.status_lower,
                "status_upper": self.status_upper}


def results_to_csv(results) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=BoundsResult.CSV_FIELDS)
    writer.writeheader()
    for r in results:
        writer.writerow(r.csv_row())
    return buf.getvalue()


# ---------------------------------------------------------------------------
# assembly


def prepare_distribution(dist: CellDistribution, cfg: EngineConfig) -> CellDistribution:
    """Apply ``use_w`` and the selection case, then check support conditions."""
    if not isinstance(dist, CellDistribution):
        raise DataError(f"expected a CellDistribution, got {type(dist).__name__}")
    if not cfg.use_w and dist.nw > 1:
        if cfg.w_in_selection:
            raise ConfigurationError("W cannot be collapsed when it enters selection")
        dist = dist.marginalize_w()
    if dist.w_in_selection != cfg.w_in_selection:
        dist = CellDistribution(dist.joint, dict(dist.levels), dist.n, cfg.w_in_selection)
    dist.check_relevance()
    return dist


@dataclass
class ConstraintProgram:
    """Feasible set of the sieve program with a zero objective.

    ``data_rows`` lists the rows of ``lp.A_eq`` (or pairs of ``lp.A_ub``
    rows in slack mode) that carry observed probabilities.
    """

    lp: LinearProgram
    layout: SieveLayout
    data_rows: list
    directions: tuple
    dist: CellDistribution
    dropped_cells: list
    n_slack: int = 0


def _data_row_blocks(dist, layout, y_values=(1,)):
    """Yield ``(row, rhs, label)`` for each observed ``(y, d, z, w, x)`` cell."""
    table = response_table(dist.nw)
    P = dist.selection_propensity()
    cond = dist.conditional
    K = layout.K
    for x in range(dist.nx):
        for w in range(dist.nw):
            for z in range(dist.nz):
                if dist.cell_mass[z, w, x] <= 0:
                    continue
                p = float(P[z, w, x])
                delta = {1: prefix_all(K, p), 0: suffix_all(K, p)}
                for y in y_values:
                    for d in (1, 0):
                        row = np.zeros((dist.nx, K + 1, layout.n_maps))
                        mask = table[:, d, w] == y
                        row[x][:, mask] = delta[d][:, None]
                        yield row.reshape(-1), float(cond[y, d, z, w, x]), (y, d, z, w, x)


def _assumption_rows(dist, layout, specs):
    """Zero maps plus inequality rows ``G theta <= 0`` for the given assumptions."""
    maps = enumerate_maps(dist.nw)
    table = response_table(dist.nw)
    K, nE, nx = layout.K, layout.n_maps, dist.nx
    zero = np.zeros((nx, K + 1, nE), dtype=bool)
    rows = []
    kinds = {s.kind for s in specs}
    for spec in specs:
        cs = assumption_constraints(spec, maps)
        for e in cs.zero_maps:
            zero[:, :, e - 1] = True
        for ineq in cs.inequality_rows:
            # sum(rhs) - sum(lhs) <= 0 at every (k, x)
            coef = np.zeros(nE)
            coef[[e - 1 for e in ineq.rhs]] += 1.0
            coef[[e - 1 for e in ineq.lhs]] -= 1.0
            for x in range(nx):
                for k in range(K + 1):
                    row = np.zeros((nx, K + 1, nE))
                    row[x, k] = coef
                    rows.append(row.reshape(-1))
        if cs.mts_rows:
            P = dist.selection_propensity()
            pzw = dist.p_zw_given_x()
            for x in range(nx):
                pbar = float(np.sum(pzw[:, :, x] * P[:, :, x]))
                if not 0.0 < pbar < 1.0:
                    raise DataError(f"treated share at x={x} is {pbar}; MTS needs it strictly inside (0, 1)")
                # E[Y(d,w) | D=0, x] - E[Y(d,w) | D=1, x] per Bernstein index
                gap = np.zeros(K + 1)
                for z in range(dist.nz):
                    for w2 in range(dist.nw):
                        if pzw[z, w2, x] > 0:
                            p = float(P[z, w2, x])
                            gap += pzw[z, w2, x] * (suffix_all(K, p) / (1.0 - pbar) - prefix_all(K, p) / pbar)
                for d, w in cs.mts_rows:
                    row = np.zeros((nx, K + 1, nE))
                    row[x][:, table[:, d, w] == 1] = gap[:, None]
                    rows.append(row.reshape(-1))
    if "M" in kinds or "C" in kinds:
        for x in range(nx):
            for d in (0, 1):
                for w in range(dist.nw):
                    mask = table[:, d, w] == 1
                    if "M" in kinds:
                        for k in range(K):
                            row = np.zeros((nx, K + 1, nE))
                            row[x, k, mask] = 1.0
                            row[x, k + 1, mask] = -1.0
                            rows.append(row.reshape(-1))
                    if "C" in kinds:
                        for k in range(K - 1):
                            row = np.zeros((nx, K + 1, nE))
                            row[x, k, mask] = 1.0
                            row[x, k + 1, mask] = -2.0
                            row[x, k + 2, mask] = 1.0
                            rows.append(row.reshape(-1))
    return zero.reshape(-1), rows


def build_constraints(dist: CellDistribution, cfg: EngineConfig, directions=None) -> ConstraintProgram:
    """Feasible set for explicit assumption directions.

    ``directions`` maps each directed assumption (in config order) to its
    sign vector; when omitted, every assumption must carry one already.
    """
    dist = prepare_distribution(dist, cfg)
    specs = list(cfg.assumptions)
    if directions is not None:
        it = iter(directions)
        specs = [s.with_direction(next(it)) if s.is_auto else s for s in specs]
    nE = 2 ** (2 * dist.nw)
    enumerate_maps(dist.nw)  # capacity check
    layout = SieveLayout(cfg.K, nE, dist.nx)
    n_theta = layout.size
    K = cfg.K

    data = list(_data_row_blocks(dist, layout, (1, 0) if cfg.include_y0_rows else (1,)))
    dropped = dist.empty_cells
    zero, ineq = _assumption_rows(dist, layout, specs)

    simplex = np.zeros((dist.nx * (K + 1), n_theta))
    for r in range(dist.nx * (K + 1)):
        simplex[r, r * nE:(r + 1) * nE] = 1.0

    D = np.array([r for r, _, _ in data]).reshape(len(data), n_theta)
    p = np.array([b for _, b, _ in data])
    G = np.array(ineq).reshape(len(ineq), n_theta)
    n_slack = 0
    if cfg.eta == 0.0:
        A_eq = np.vstack([D, simplex])
        b_eq = np.concatenate([p, np.ones(simplex.shape[0])])
        A_ub, b_ub = G, np.zeros(G.shape[0])
        data_rows = list(range(len(data)))
    elif cfg.norm_mode == "Linf":
        A_eq, b_eq = simplex, np.ones(simplex.shape[0])
        A_ub = np.vstack([D, -D, G])
        b_ub = np.concatenate([p + cfg.eta, -p + cfg.eta, np.zeros(G.shape[0])])
        data_rows = list(range(2 * len(data)))
    else:
        # |D theta - p| <= s elementwise, sum(s) <= eta
        m = len(data)
        n_slack = m
        pad = lambda M, S: np.hstack([M, S])  # noqa: E731
        A_eq = pad(simplex, np.zeros((simplex.shape[0], m)))
        b_eq = np.ones(simplex.shape[0])
        A_ub = np.vstack([pad(D, -np.eye(m)), pad(-D, -np.eye(m)),
                          pad(np.zeros((1, n_theta)), np.ones((1, m))),
                          pad(G, np.zeros((G.shape[0], m)))])
        b_ub = np.concatenate([p, -p, [cfg.eta], np.zeros(G.shape[0])])
        data_rows = list(range(2 * m))
    n_total = n_theta + n_slack
    ub = np.full(n_total, np.inf)
    ub[:n_theta][zero] = 0.0
    lp = LinearProgram(np.zeros(n_total), "max", A_eq, b_eq, A_ub, b_ub, lb=np.zeros(n_total), ub=ub,
                       meta={"n_theta": n_theta, "data_labels": [lab for _, _, lab in data]})
    dirs = tuple(tuple(s.direction) for s in specs if s.kind in ("U", "U_zero", "U_star"))
    return ConstraintProgram(lp, layout, data_rows, dirs, dist, dropped, n_slack)


def _objective(spec, program: ConstraintProgram) -> np.ndarray:
    c = objective_coefficients(spec, program.dist, program.layout.K)
    if program.n_slack:
        c = np.concatenate([c, np.zeros(program.n_slack)])
    return c


def assemble(dist: CellDistribution, spec: TargetSpec, cfg: EngineConfig, directions=None):
    """The pair ``(max program, min program)`` for one direction assignment."""
    program = build_constraints(dist, cfg, _first_directions(cfg, dist) if directions is None else directions)
    c = _objective(spec, program)
    return program.lp.with_objective(c, "max"), program.lp.with_objective(c, "min")


def _first_directions(cfg, dist):
    if not any(s.is_auto for s in cfg.assumptions):
        return None
    return next(iter(direction_candidates(cfg, dist)))


def direction_candidates(cfg: EngineConfig, dist: CellDistribution) -> list:
    """Every assignment of signs to the assumptions left on ``auto``."""
    nw = 1 if (not cfg.use_w) else dist.nw
    spaces = [direction_space(s.kind, nw) for s in cfg.assumptions if s.is_auto]
    return [tuple(c) for c in itertools.product(*spaces)]


# ---------------------------------------------------------------------------
# solving


class _Prepared:
    """One direction assignment: constraints plus a phase-one solver."""

    def __init__(self, program: ConstraintProgram, cfg: EngineConfig):
        self.program = program
        self.cfg = cfg
        self.solver = SimplexSolver(program.lp, **cfg.solver)

    @property
    def feasible(self) -> bool:
        return self.solver.feasible

    def solve(self, c, sense):
        if self.cfg.rescale and self.program.lp.meta.get("rescaled") is None:
            return self._solve_rescaled(c, sense)
        return self.solver.optimize(c, sense)

    def _solve_rescaled(self, c, sense):
        lp = self.program.lp.with_objective(c, sense)
        rows = self.program.data_rows if self.cfg.eta == 0.0 else ()
        if not rows:
            return self.solver.optimize(c, sense)
        small, transform = rescale(lp, rows=rows)
        sol = SimplexSolver(small, **self.cfg.solver).optimize()
        if sol.optimal:
            theta = transform.to_original(sol.solution)
            sol.solution = theta
            sol.diagnostics["rescaled"] = True
            sol.diagnostics["violation_original"] = lp.violation(theta)
        return sol


class BoundsEngine:
    """Constraint programs for every direction assignment, reused across targets."""

    def __init__(self, dist: CellDistribution, cfg: EngineConfig):
        self.cfg = cfg
        self.dist = dist
        candidates = direction_candidates(cfg, prepare_distribution(dist, cfg))
        self.candidates = candidates
        self.prepared = []
        self.feasible = []
        t0 = time.perf_counter()
        for dirs in candidates:
            prog = build_constraints(dist, cfg, dirs if dirs else None)
            prep = _Prepared(prog, cfg)
            self.prepared.append(prep)
            if prep.feasible:
                self.feasible.append(prep)
        self.setup_time = time.perf_counter() - t0

    @property
    def refuted(self) -> bool:
        return not self.feasible

    @property
    def feasible_directions(self) -> list:
        return [p.program.directions for p in self.feasible]

    def _diagnostics(self):
        prog = self.prepared[0].program
        return {"n_theta": prog.layout.size, "n_maps": prog.layout.n_maps,
                "rows_eq": int(prog.lp.A_eq.shape[0]), "rows_ub": int(prog.lp.A_ub.shape[0]),
                "directions_probed": len(self.candidates),
                "directions_feasible": len(self.feasible), "rescale": self.cfg.rescale,
                "dropped_cells": prog.dropped_cells,
                "phase1_iterations": sum(p.solver.phase1_iterations for p in self.prepared)}

    def bounds_for_objective(self, c_fn, label: str) -> BoundsResult:
        t0 = time.perf_counter()
        cfg = self.cfg
        base = dict(target=label, K=cfg.K, eta=cfg.eta,
                    assumptions=[a.to_dict() for a in cfg.assumptions],
                    diagnostics=self._diagnostics())
        if self.refuted:
            return BoundsResult(lower=np.nan, upper=np.nan, status_lower="infeasible",
                                status_upper="infeasible", timing=time.perf_counter() - t0, **base)
        lo, hi = np.inf, -np.inf
        st_lo = st_hi = "infeasible"
        arg_lo = arg_hi = None
        iterations = 0
        for prep in self.feasible:
            c = c_fn(prep.program)
            top = prep.solve(c, "max")
            bot = prep.solve(c, "min")
            iterations += top.iterations + bot.iterations
            for sol, name in ((top, "max"), (bot, "min")):
                if sol.status not in ("optimal", "unbounded"):
                    raise SolverError(f"{name} program reported {sol.status} after a feasible phase one",
                                      lp=prep.program.lp, diagnostics=sol.diagnostics)
            if top.status == "unbounded":
                hi, st_hi = np.inf, "unbounded"
            elif st_hi != "unbounded" and top.objective_value > hi:
                hi, st_hi, arg_hi = top.objective_value, "optimal", top.solution
            if bot.status == "unbounded":
                lo, st_lo = -np.inf, "unbounded"
            elif st_lo != "unbounded" and bot.objective_value < lo:
                lo, st_lo, arg_lo = bot.objective_value, "optimal", bot.solution
        base["diagnostics"]["iterations"] = iterations
        return BoundsResult(lower=lo, upper=hi, status_lower=st_lo, status_upper=st_hi,
                            directions=self.feasible_directions, argmin=arg_lo, argmax=arg_hi,
                            timing=time.perf_counter() - t0 + self.setup_time, **base)

    def bounds(self, spec: TargetSpec) -> BoundsResult:
        return self.bounds_for_objective(lambda prog: _objective(spec, prog), spec.label)


def bounds(dist: CellDistribution, spec: TargetSpec, cfg: EngineConfig) -> BoundsResult:
    """Sharp bounds on ``spec`` at sieve degree ``cfg.K``.

    Directed assumptions left on ``auto`` are resolved by feasibility: every
    sign assignment is tried, infeasible ones are discarded, and the result
    is the union of the remaining intervals. If no assignment is feasible
    the result is marked refuted.
    """
    return BoundsEngine(dist, cfg).bounds(spec)


def k_sweep(dist, spec, cfg: EngineConfig, k_list) -> list:
    """Bounds for each degree in ``k_list`` (ascending)."""
    k_list = list(k_list)
    if not k_list:
        raise ConfigurationError("k_list is empty")
    if any(b <= a for a, b in zip(k_list, k_list[1:])):
        raise ConfigurationError(f"k_list must be strictly ascending, got {k_list}")
    return [bounds(dist, spec, cfg.with_(K=int(K))) for K in k_list]


@dataclass
class SharpnessReport:
    upper_uniform: bool
    lower_uniform: bool
    upper_gap: float
    lower_gap: float

    def to_dict(self):
        return asdict(self)


def mte_curve(dist, cfg: EngineConfig, grid, x=None, w=None, tol: float = 1e-7):
    """Pointwise MTE bounds on ``grid`` and a uniform-sharpness report.

    The upper envelope is uniformly sharp when one feasible ``theta``
    attains it at every grid point at once, which happens exactly when the
    maximum of the grid-sum of the MTE equals the sum of the pointwise upper
    bounds (likewise for the lower envelope).
    """
    grid = [float(u) for u in grid]
    if not grid or any(not 0.0 <= u <= 1.0 for u in grid):
        raise ConfigurationError("grid must be a nonempty list of points in [0, 1]")
    engine = BoundsEngine(dist, cfg)
    rows = []
    specs = [TargetSpec("MTE", point=u, x=x, w=w) for u in grid]
    for spec in specs:
        r = engine.bounds(spec)
        rows.append((spec.point, r.lower, r.upper))
    if engine.refuted:
        return rows, SharpnessReport(False, False, np.nan, np.nan)
    sum_upper = sum(r[2] for r in rows)
    sum_lower = sum(r[1] for r in rows)

    def summed(prog):
        return sum(_objective(s, prog) for s in specs)

    joint = engine.bounds_for_objective(summed, "MTE grid sum")
    gap_u = sum_upper - joint.upper
    gap_l = joint.lower - sum_lower
    scale = tol * max(1.0, abs(sum_upper), abs(sum_lower))
    return rows, SharpnessReport(gap_u <= scale, gap_l <= scale, float(gap_u), float(gap_l))


@dataclass
class RefutationResult:
    consistent: bool
    feasible_directions: list
    probed: int

    @property
    def refuted(self) -> bool:
        return not self.consistent

    def to_dict(self):
        return {"consistent": self.consistent, "refuted": self.refuted,
                "feasible_directions": [list(map(list, d)) for d in self.feasible_directions],
                "probed": self.probed}


def refute(dist, assumptions, cfg: EngineConfig) -> RefutationResult:
    """Feasibility of the constraint system alone, over all direction assignments."""
    engine = BoundsEngine(dist, cfg.with_(assumptions=tuple(assumptions)))
    return RefutationResult(not engine.refuted, engine.feasible_directions, len(engine.candidates))


def evaluate_target(spec: TargetSpec, dist, K: int, theta) -> float:
    """Target value at a given coefficient vector."""
    return float(objective_coefficients(spec, dist, K) @ np.asarray(theta)[: SieveLayout(K, 2 ** (2 * dist.nw), dist.nx).size])


def mtr_curves(theta, layout: SieveLayout, u) -> np.ndarray:
    """``m[d, w, x, j]`` implied by ``theta`` at points ``u``."""
    table = response_table(layout.w_levels)
    th = layout.reshape(theta[: layout.size])
    B = np.vstack([basis_all(layout.K, float(v)) for v in np.atleast_1d(u)])
    return np.einsum("edw,xke,jk->dwxj", table.astype(float), th, B)
