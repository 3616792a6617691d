"""Bounds for an outcome on [0, 1] through a trivariate Bernstein CDF sieve.

For each ``(w, x)`` the joint conditional CDF
``q_w(y1, y0 | u, x) = Pr[Y(1,w) <= y1, Y(0,w) <= y0 | U=u, X=x]`` is written as
``sum theta[k1, k0, ku] b_k1(y1) b_k0(y0) b_ku(u)`` with ``0 <= theta <= 1``,
monotone in ``k1`` and ``k0``. Observed CDFs only involve the edges
``y0 = 1`` (treated) and ``y1 = 1`` (untreated):

    Pr[Y <= y, D = 1 | z, w, x] = int_0^P q_w(y, 1 | u) du
    Pr[Y <= y, D = 0 | z, w, x] = int_P^1 q_w(1, y | u) du

These equalities are imposed on a finite grid of outcome values with
tolerance ``eta``.

Two outcome modes exist. ``continuous`` uses an empirical-quantile grid,
pins the CDF corners to 0 and 1, and reads means as
``m_d(u) = 1 - int_0^1 F_d(y | u) dy``. ``discrete`` is for outcomes with a
few support points ``s_1 < ... < s_J``: the grid is the support, only the
upper corner is pinned (an atom at the bottom of the support must be
representable), and ``m_d(u) = s_J - sum_j (s_{j+1} - s_j) F_d(s_j | u)``.
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .bernstein import basis_all, prefix_all, suffix_all, weighted_integrals
from .engine import BoundsResult
from .errors import CapacityError, ConfigurationError, DataError
from .lp import LinearProgram, SimplexSolver
from .targets import TargetSpec, cell_weights, weights_for

MAX_K = 12
MAX_COEFS_PER_CELL = (MAX_K + 1) ** 3
Y_MODES = ("auto", "continuous", "discrete")


@dataclass
class ContinuousConfig:
    """Settings for the continuous-outcome engine.

    ``K`` is the degree in every direction unless ``K_y`` or ``K_u``
    override it. ``grid_size`` empirical quantiles form the evaluation grid
    in continuous mode. ``auto`` mode switches to ``discrete`` when the
    sample has at most ``max_support`` distinct outcome values.
    """

    K: int = 5
    K_y: int | None = None
    K_u: int | None = None
    eta: float = 0.0
    grid_size: int = 21
    y_mode: str = "auto"
    max_support: int = 10
    w_in_selection: bool = False
    use_w: bool = True
    solver: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.y_mode not in Y_MODES:
            raise ConfigurationError(f"y_mode must be one of {Y_MODES}")
        if not self.eta >= 0:
            raise ConfigurationError("eta must be nonnegative")
        for name in ("K", "K_y", "K_u"):
            v = getattr(self, name)
            if v is not None and (int(v) != v or v < 1):
                raise ConfigurationError(f"{name} must be a positive integer, got {v!r}")
        if self.ky > MAX_K:
            raise CapacityError(f"outcome degree {self.ky} exceeds the limit {MAX_K}")
        if (self.ky + 1) ** 2 * (self.ku + 1) > MAX_COEFS_PER_CELL:
            raise CapacityError(
                f"degrees (K_y={self.ky}, K_u={self.ku}) give {(self.ky + 1) ** 2 * (self.ku + 1)} "
                f"coefficients per cell; the limit is {MAX_COEFS_PER_CELL} (K = {MAX_K} in every direction)")
        if self.grid_size < 2:
            raise ConfigurationError("grid_size must be at least 2")

    @property
    def ky(self) -> int:
        return int(self.K if self.K_y is None else self.K_y)

    @property
    def ku(self) -> int:
        return int(self.K if self.K_u is None else self.K_u)


@dataclass
class ContinuousSample:
    """Outcome sample with discrete ``(d, z, w, x)`` codes and optional weights."""

    y: np.ndarray
    d: np.ndarray
    z: np.ndarray
    w: np.ndarray
    x: np.ndarray
    weights: np.ndarray

    @classmethod
    def from_arrays(cls, y, d, z, w=None, x=None, weights=None) -> "ContinuousSample":
        y = np.asarray(y, dtype=float)
        n = y.size
        if n == 0:
            raise DataError("empty sample")
        if np.any(~np.isfinite(y)) or np.any((y < 0) | (y > 1)):
            raise DataError("outcomes must lie in [0, 1]; rescale the outcome first")
        cols = []
        for name, v in (("d", d), ("z", z), ("w", w), ("x", x)):
            v = np.zeros(n, dtype=int) if v is None else np.asarray(v)
            if v.size != n:
                raise DataError(f"column {name} has {v.size} rows, expected {n}")
            if np.any(v != np.round(v)) or np.any(v < 0):
                raise DataError(f"column {name} must hold nonnegative integer codes")
            cols.append(v.astype(int))
        if not set(np.unique(cols[0])) <= {0, 1}:
            raise DataError("d must be coded 0/1")
        weights = np.ones(n) if weights is None else np.asarray(weights, dtype=float)
        if weights.size != n or np.any(weights < 0) or weights.sum() <= 0:
            raise DataError("weights must be nonnegative, one per row, with positive total")
        return cls(y, *cols, weights)

    @property
    def shape(self):
        return (int(self.z.max()) + 1, int(self.w.max()) + 1, int(self.x.max()) + 1)


class _CellView:
    """Cell masses and propensities of a sample, shaped like a CellDistribution."""

    def __init__(self, s: ContinuousSample, w_in_selection: bool):
        nz, nw, nx = s.shape
        self.nz, self.nw, self.nx = nz, nw, nx
        self.w_in_selection = w_in_selection
        mass = np.zeros((nz, nw, nx))
        treated = np.zeros((nz, nw, nx))
        np.add.at(mass, (s.z, s.w, s.x), s.weights)
        np.add.at(treated, (s.z, s.w, s.x), s.weights * s.d)
        total = mass.sum()
        self.cell_mass = mass / total
        self._treated = treated / total

    def p_x(self):
        return self.cell_mass.sum(axis=(0, 1))

    def p_z_given_x(self):
        px = self.p_x()
        return self.cell_mass.sum(axis=1) / np.where(px > 0, px, 1.0)

    def propensity_zx(self):
        m = self.cell_mass.sum(axis=1)
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(m > 0, self._treated.sum(axis=1) / np.where(m > 0, m, 1.0), np.nan)

    def propensity_zxw(self):
        m = self.cell_mass
        with np.errstate(invalid="ignore", divide="ignore"):
            p = np.where(m > 0, self._treated / np.where(m > 0, m, 1.0), np.nan)
        return np.transpose(p, (0, 2, 1))

    def selection_propensity(self):
        if self.w_in_selection:
            return np.transpose(self.propensity_zxw(), (0, 2, 1))
        return np.repeat(self.propensity_zx()[:, None, :], self.nw, axis=1)


@dataclass
class ContinuousProgram:
    lp: LinearProgram
    cfg: ContinuousConfig
    mode: str
    grid: np.ndarray
    cells: _CellView
    shape: tuple  # (nw, nx, Ky+1, Ky+1, Ku+1)

    def index(self, w, x, k1, k0, ku) -> int:
        return int(np.ravel_multi_index((w, x, k1, k0, ku), self.shape))


def _resolve_mode(sample, cfg):
    support = np.unique(sample.y)
    if cfg.y_mode == "discrete" or (cfg.y_mode == "auto" and support.size <= cfg.max_support):
        return "discrete", support
    qs = np.quantile(sample.y, np.linspace(0.0, 1.0, cfg.grid_size))
    return "continuous", np.unique(qs)


def _constraints(sample: ContinuousSample, cfg: ContinuousConfig):
    if not cfg.use_w:
        sample = ContinuousSample(sample.y, sample.d, sample.z, np.zeros_like(sample.w), sample.x, sample.weights)
    cells = _CellView(sample, cfg.w_in_selection)
    P = cells.selection_propensity()
    ok = cells.cell_mass > 0
    if np.any(ok & ((P <= 0) | (P >= 1))):
        raise DataError("a propensity score is 0 or 1; selection thresholds must lie inside (0, 1)")
    mode, grid = _resolve_mode(sample, cfg)
    Ky, Ku = cfg.ky, cfg.ku
    nw, nx = cells.nw, cells.nx
    shape = (nw, nx, Ky + 1, Ky + 1, Ku + 1)
    n = int(np.prod(shape))
    idx = np.arange(n).reshape(shape)
    lb, ub = np.zeros(n), np.ones(n)
    # corner pins
    ub[idx[:, :, Ky, Ky, :].ravel()] = 1.0
    lb[idx[:, :, Ky, Ky, :].ravel()] = 1.0
    if mode == "continuous":
        for k1, k0 in ((0, 0), (0, Ky), (Ky, 0)):
            ub[idx[:, :, k1, k0, :].ravel()] = 0.0
    # monotonicity in k1 and in k0
    G = []
    for w in range(nw):
        for x in range(nx):
            for a in range(Ky):
                for b in range(Ky + 1):
                    for ku in range(Ku + 1):
                        for lo, hi in (((a, b), (a + 1, b)), ((b, a), (b, a + 1))):
                            row = np.zeros(n)
                            row[idx[w, x, lo[0], lo[1], ku]] = 1.0
                            row[idx[w, x, hi[0], hi[1], ku]] = -1.0
                            G.append(row)
    G = np.array(G).reshape(len(G), n)
    # data rows
    basis_grid = np.vstack([basis_all(Ky, float(g)) for g in grid])  # [g, k]
    D, rhs = [], []
    for z in range(cells.nz):
        for w in range(nw):
            for x in range(nx):
                if not ok[z, w, x]:
                    continue
                in_cell = (sample.z == z) & (sample.w == w) & (sample.x == x)
                cell_w = sample.weights[in_cell].sum()
                p = float(P[z, w, x])
                for d in (1, 0):
                    sel = in_cell & (sample.d == d)
                    ys, ws = sample.y[sel], sample.weights[sel]
                    integ = prefix_all(Ku, p) if d == 1 else suffix_all(Ku, p)
                    for g, yg in enumerate(grid):
                        row = np.zeros(shape)
                        if d == 1:
                            row[w, x, :, Ky, :] = np.outer(basis_grid[g], integ)
                        else:
                            row[w, x, Ky, :, :] = np.outer(basis_grid[g], integ)
                        D.append(row.ravel())
                        rhs.append(float(ws[ys <= yg].sum() / cell_w))
    D, rhs = np.array(D), np.array(rhs)
    if cfg.eta == 0.0:
        lp = LinearProgram(np.zeros(n), "max", D, rhs, G, np.zeros(G.shape[0]), lb=lb, ub=ub)
    else:
        lp = LinearProgram(np.zeros(n), "max", None, None,
                           np.vstack([D, -D, G]),
                           np.concatenate([rhs + cfg.eta, -rhs + cfg.eta, np.zeros(G.shape[0])]),
                           lb=lb, ub=ub)
    return ContinuousProgram(lp, cfg, mode, grid, cells, shape)


def _objective(spec: TargetSpec, prog: ContinuousProgram):
    """Objective vector and constant offset for ``spec``."""
    cells = prog.cells
    Ky, Ku = prog.cfg.ky, prog.cfg.ku
    mass = cell_weights(spec, cells)
    Pt = cells.propensity_zxw() if cells.w_in_selection else cells.propensity_zx()
    z_prob, x_prob = cells.p_z_given_x(), cells.p_x()
    if prog.mode == "continuous":
        top = 1.0
        cdf_weight = np.full(Ky + 1, 1.0 / (Ky + 1))
    else:
        s = prog.grid
        top = float(s[-1])
        gaps = np.diff(s)
        B = np.vstack([basis_all(Ky, float(v)) for v in s[:-1]]) if s.size > 1 else np.zeros((0, Ky + 1))
        cdf_weight = gaps @ B if s.size > 1 else np.zeros(Ky + 1)
    c = np.zeros(prog.shape)
    offset = 0.0
    for z, w, x in zip(*np.nonzero(mass)):
        om0, om1 = weights_for(spec, Pt, z, x, w if cells.w_in_selection else None, z_prob, x_prob)
        g1, g0 = weighted_integrals(Ku, om1), weighted_integrals(Ku, om0)
        m = mass[z, w, x]
        offset += m * top * (g1.sum() - g0.sum())
        # m_d(u) = top - sum_k cdf_weight[k] F_d coefficients
        c[w, x, :, Ky, :] -= m * np.outer(cdf_weight, g1)
        c[w, x, Ky, :, :] += m * np.outer(cdf_weight, g0)
    return c.ravel(), offset


def assemble_continuous(sample, cfg: ContinuousConfig, spec: TargetSpec | None = None):
    """``(max program, min program)`` for ``spec`` (ATE by default)."""
    if not isinstance(sample, ContinuousSample):
        sample = ContinuousSample.from_arrays(*sample)
    spec = TargetSpec("ATE") if spec is None else spec
    prog = _constraints(sample, cfg)
    c, off = _objective(spec, prog)
    return prog.lp.with_objective(c, "max", off), prog.lp.with_objective(c, "min", off)


def bounds_continuous(sample, spec: TargetSpec, cfg: ContinuousConfig) -> BoundsResult:
    """Bounds on ``spec`` for an outcome in [0, 1]."""
    t0 = time.perf_counter()
    if not isinstance(sample, ContinuousSample):
        sample = ContinuousSample.from_arrays(*sample)
    prog = _constraints(sample, cfg)
    c, off = _objective(spec, prog)
    solver = SimplexSolver(prog.lp, **cfg.solver)
    diag = {"mode": prog.mode, "grid_points": int(prog.grid.size), "K_y": cfg.ky, "K_u": cfg.ku,
            "n_theta": int(prog.lp.n), "continuous_y": True}
    base = dict(target=spec.label, K=cfg.ku, eta=cfg.eta, diagnostics=diag)
    if not solver.feasible:
        return BoundsResult(lower=np.nan, upper=np.nan, status_lower="infeasible",
                            status_upper="infeasible", timing=time.perf_counter() - t0, **base)
    top = solver.optimize(c, "max", off)
    bot = solver.optimize(c, "min", off)
    diag["iterations"] = top.iterations + bot.iterations
    return BoundsResult(lower=bot.objective_value, upper=top.objective_value,
                        status_lower=bot.status, status_upper=top.status,
                        argmin=bot.solution, argmax=top.solution,
                        timing=time.perf_counter() - t0, **base)


def sample_from_distribution(dist) -> ContinuousSample:
    """Weighted binary-outcome sample reproducing a cell distribution exactly."""
    idx = np.argwhere(dist.joint > 0)
    y, d, z, w, x = idx.T
    return ContinuousSample.from_arrays(y.astype(float), d, z, w, x, dist.joint[tuple(idx.T)])


def mtr_from_cdf(theta, prog: ContinuousProgram, d: int, w: int, x: int, u) -> np.ndarray:
    """``m_d(u, w, x)`` implied by CDF coefficients in continuous mode."""
    th = np.asarray(theta).reshape(prog.shape)
    Ky, Ku = prog.cfg.ky, prog.cfg.ku
    edge = th[w, x, :, Ky, :] if d == 1 else th[w, x, Ky, :, :]
    Bu = np.vstack([basis_all(Ku, float(v)) for v in np.atleast_1d(u)])
    return 1.0 - (edge.sum(axis=0) / (Ky + 1)) @ Bu.T


def read_sample_csv(path, y="y", d="d", z="z", w=None, x=(), weight=None) -> ContinuousSample:
    """Read a sample whose outcome column may be real-valued in [0, 1]."""
    if isinstance(x, str):
        x = (x,)
    cols = [y, d, z] + ([w] if w else []) + list(x) + ([weight] if weight else [])
    try:
        with Path(path).open(newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            missing = [c for c in cols if c not in (reader.fieldnames or [])]
            if missing:
                raise DataError(f"{path}: missing required column(s) {missing}")
            rows = []
            for lineno, row in enumerate(reader, start=2):
                try:
                    rows.append([float(row[c]) for c in cols])
                except (TypeError, ValueError):
                    raise DataError(f"{path}: row {lineno}: missing or non-numeric value") from None
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise DataError(f"{path}: no data rows")
    arr = np.array(rows)
    j = 3
    wcol = None
    if w:
        wcol, j = arr[:, j], j + 1
    xcol = None
    if x:
        xcol = np.zeros(len(arr), dtype=int)
        for _ in x:
            levels, codes = np.unique(arr[:, j], return_inverse=True)
            xcol = xcol * len(levels) + codes
            j += 1
    wts = arr[:, j] if weight else None
    zc = np.unique(arr[:, 2], return_inverse=True)[1]
    wc = None if wcol is None else np.unique(wcol, return_inverse=True)[1]
    return ContinuousSample.from_arrays(arr[:, 0], arr[:, 1], zc, wc, xcol, wts)
