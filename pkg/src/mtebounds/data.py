"""Observed cell distributions: CSV ingestion, frequency estimates, JSON I/O.

A :class:`CellDistribution` stores the joint probabilities
``p(y, d, z, w, x)`` as an array of shape ``(2, 2, nz, nw, nx)``. Everything
else (conditionals, propensity scores, cell masses) is derived from it.
"""

from __future__ import annotations

import csv
import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError, FormatError, RelevanceError

NORMALIZATION_TOL = 1e-8
_AXES = ("y", "d", "z", "w", "x")


@dataclass
class Dataset:
    """Integer-coded micro-data, one array per variable.

    ``codes[name]`` indexes into ``levels[name]``, the sorted original
    values. ``weights`` are optional nonnegative row weights (used to feed an
    exact distribution through the same path as a sample).
    """

    codes: dict
    levels: dict
    weights: np.ndarray = None

    def __len__(self) -> int:
        return int(self.codes["y"].size)

    def column(self, name) -> np.ndarray:
        """Original values of a column."""
        return np.asarray(self.levels[name])[self.codes[name]]


def _encode(values):
    levels, codes = np.unique(values, return_inverse=True)
    return codes.astype(int), tuple(int(v) for v in levels)


def dataset_from_arrays(y, d, z, w=None, x=None, weights=None) -> Dataset:
    """Build a :class:`Dataset` from raw integer arrays."""
    y = np.asarray(y)
    n = y.size
    cols = {"y": y, "d": np.asarray(d), "z": np.asarray(z),
            "w": np.zeros(n, dtype=int) if w is None else np.asarray(w),
            "x": np.zeros(n, dtype=int) if x is None else np.asarray(x)}
    codes, levels = {}, {}
    for name, v in cols.items():
        if v.size != n:
            raise DataError(f"column {name} has {v.size} rows, expected {n}")
        codes[name], levels[name] = _encode(v)
    for name in ("y", "d"):
        if not set(levels[name]) <= {0, 1}:
            raise DataError(f"{name} must be coded 0/1, found levels {levels[name]}")
        # keep binary axes aligned with their values even if one level is absent
        codes[name] = cols[name].astype(int)
        levels[name] = (0, 1)
    if weights is not None:
        weights = np.asarray(weights, dtype=float)
        if weights.size != n or np.any(weights < 0):
            raise DataError("weights must be nonnegative with one entry per row")
    return Dataset(codes, levels, weights)


def ingest_csv(path, y="y", d="d", z="z", w=None, x=()) -> Dataset:
    """Read integer-coded micro-data from a CSV file with a header row.

    ``x`` may name several columns; their level combinations are folded into
    one discrete index (last column varying fastest).
    """
    path = Path(path)
    if isinstance(x, str):
        x = (x,)
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            header = reader.fieldnames
            if not header:
                raise DataError(f"{path}: file is empty")
            required = [y, d, z] + ([w] if w else []) + list(x)
            missing = [c for c in required if c not in header]
            if missing:
                raise DataError(f"{path}: missing required column(s) {missing}")
            rows = []
            for lineno, row in enumerate(reader, start=2):
                vals = []
                for c in required:
                    raw = (row.get(c) or "").strip()
                    if raw == "":
                        raise DataError(f"{path}: row {lineno}: missing value in column {c!r}")
                    try:
                        num = float(raw)
                    except ValueError:
                        raise DataError(f"{path}: row {lineno}: non-numeric value {raw!r} in column {c!r}") from None
                    if num != int(num):
                        raise DataError(f"{path}: row {lineno}: non-integer value {raw!r} in column {c!r}")
                    vals.append(int(num))
                rows.append(vals)
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise DataError(f"{path}: no data rows")
    arr = np.array(rows, dtype=int)
    wcol = arr[:, 3] if w else None
    xcols = arr[:, (4 if w else 3):]
    if xcols.shape[1]:
        combined = np.zeros(len(arr), dtype=int)
        for j in range(xcols.shape[1]):
            codes, levels = _encode(xcols[:, j])
            combined = combined * len(levels) + codes
        xcol = combined
    else:
        xcol = None
    for j, name in enumerate(("y", "d")):
        bad = np.flatnonzero(~np.isin(arr[:, j], (0, 1)))
        if bad.size:
            raise DataError(f"{path}: row {bad[0] + 2}: {name} must be 0 or 1")
    return dataset_from_arrays(arr[:, 0], arr[:, 1], arr[:, 2], wcol, xcol)


@dataclass
class CellDistribution:
    """Joint probabilities ``p(y, d, z, w, x)`` over discrete supports."""

    joint: np.ndarray
    levels: dict = field(default_factory=dict)
    n: int = 0
    w_in_selection: bool = False

    def __post_init__(self):
        self.joint = np.asarray(self.joint, dtype=float)
        if self.joint.ndim != 5 or self.joint.shape[:2] != (2, 2):
            raise FormatError(f"joint must have shape (2, 2, nz, nw, nx), got {self.joint.shape}")
        if np.any(self.joint < -NORMALIZATION_TOL) or not np.all(np.isfinite(self.joint)):
            raise FormatError("joint probabilities must be finite and nonnegative")
        total = float(self.joint.sum())
        if abs(total - 1.0) > NORMALIZATION_TOL:
            raise FormatError(f"joint probabilities sum to {total!r}, not 1")
        self.joint = np.clip(self.joint, 0.0, None)
        for name, size in zip(_AXES, self.joint.shape):
            self.levels.setdefault(name, tuple(range(size)))
            if len(self.levels[name]) != size:
                raise FormatError(f"{name} has {len(self.levels[name])} levels but axis size {size}")
        self.levels = {k: tuple(self.levels[k]) for k in _AXES}

    @classmethod
    def from_conditionals(cls, p_yd, p_zwx, **kw) -> "CellDistribution":
        """From ``p(y, d | z, w, x)`` (shape (2,2,nz,nw,nx)) and ``p(z, w, x)``."""
        p_yd = np.asarray(p_yd, dtype=float)
        p_zwx = np.asarray(p_zwx, dtype=float)
        sums = p_yd.sum(axis=(0, 1))
        nonempty = p_zwx > 0
        if np.any(np.abs(sums[nonempty] - 1.0) > NORMALIZATION_TOL):
            raise FormatError("conditional probabilities p(y,d|z,w,x) do not sum to 1 in every cell")
        return cls(p_yd * p_zwx, **kw)

    @property
    def nz(self): return self.joint.shape[2]

    @property
    def nw(self): return self.joint.shape[3]

    @property
    def nx(self): return self.joint.shape[4]

    @property
    def cell_mass(self) -> np.ndarray:
        """``p(z, w, x)``."""
        return self.joint.sum(axis=(0, 1))

    @property
    def empty_cells(self) -> list:
        """``(z, w, x)`` index triples never observed."""
        return [tuple(int(i) for i in c) for c in np.argwhere(self.cell_mass <= 0.0)]

    @property
    def conditional(self) -> np.ndarray:
        """``p(y, d | z, w, x)``; NaN in empty cells."""
        mass = self.cell_mass
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(mass > 0, self.joint / np.where(mass > 0, mass, 1.0), np.nan)

    def p_x(self) -> np.ndarray:
        return self.cell_mass.sum(axis=(0, 1))

    def p_zw_given_x(self) -> np.ndarray:
        px = self.p_x()
        return self.cell_mass / np.where(px > 0, px, 1.0)

    def p_z_given_x(self) -> np.ndarray:
        return self.p_zw_given_x().sum(axis=1)

    def propensity_zx(self) -> np.ndarray:
        """``P(z, x) = Pr[D = 1 | Z = z, X = x]``; NaN where unobserved."""
        treated = self.joint[:, 1].sum(axis=(0, 2))
        mass = self.cell_mass.sum(axis=1)
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(mass > 0, treated / np.where(mass > 0, mass, 1.0), np.nan)

    def propensity_zxw(self) -> np.ndarray:
        """``P(z, x, w)``, shape ``(nz, nx, nw)``; NaN where unobserved."""
        treated = self.joint[:, 1].sum(axis=0)
        mass = self.cell_mass
        with np.errstate(invalid="ignore", divide="ignore"):
            p = np.where(mass > 0, treated / np.where(mass > 0, mass, 1.0), np.nan)
        return np.transpose(p, (0, 2, 1))

    def selection_propensity(self) -> np.ndarray:
        """Propensity governing selection in cell ``(z, w, x)``, shape ``(nz, nw, nx)``.

        Without W in selection every w shares ``P(z, x)``.
        """
        if self.w_in_selection:
            return np.transpose(self.propensity_zxw(), (0, 2, 1))
        return np.repeat(self.propensity_zx()[:, None, :], self.nw, axis=1)

    def marginalize_w(self) -> "CellDistribution":
        """Collapse W into a single level."""
        levels = dict(self.levels)
        levels["w"] = (0,)
        return CellDistribution(self.joint.sum(axis=3, keepdims=True), levels, self.n, False)

    def check_relevance(self, tol: float = 0.0):
        """Raise :class:`RelevanceError` if a propensity sits at 0 or 1."""
        P = self.selection_propensity()
        bad = np.argwhere((self.cell_mass > 0) & ((P <= tol) | (P >= 1.0 - tol)))
        if bad.size:
            z, w, x = (int(i) for i in bad[0])
            raise RelevanceError(
                f"propensity score is {P[z, w, x]:.6g} in cell z={z}, w={w}, x={x}; "
                "selection thresholds must lie strictly inside (0, 1)")

    def to_dict(self) -> dict:
        return {"format": "cell-distribution/1", "axes": list(_AXES),
                "levels": {k: list(v) for k, v in self.levels.items()},
                "shape": list(self.joint.shape), "n": int(self.n),
                "w_in_selection": bool(self.w_in_selection),
                "joint": [float(v) for v in self.joint.ravel(order="C")]}

    @classmethod
    def from_dict(cls, obj) -> "CellDistribution":
        try:
            shape = tuple(int(s) for s in obj["shape"])
            joint = np.asarray(obj["joint"], dtype=float)
            levels = {k: tuple(v) for k, v in obj["levels"].items()}
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"malformed distribution: {exc}") from exc
        if joint.size != int(np.prod(shape)):
            raise FormatError(f"joint has {joint.size} entries, shape {shape} needs {int(np.prod(shape))}")
        dist = cls(joint.reshape(shape), levels, int(obj.get("n", 0)), bool(obj.get("w_in_selection", False)))
        cond = dist.conditional
        ok = dist.cell_mass > 0
        if np.any(np.abs(cond.sum(axis=(0, 1))[ok] - 1.0) > NORMALIZATION_TOL):
            raise FormatError("conditional cells do not sum to 1")
        return dist


def save_distribution(dist: CellDistribution, path) -> None:
    Path(path).write_text(json.dumps(dist.to_dict(), indent=1))


def load_distribution(path) -> CellDistribution:
    """Load a distribution JSON file. Loaded distributions are population inputs (n=0)."""
    try:
        obj = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise FormatError(f"cannot read distribution {path}: {exc}") from exc
    dist = CellDistribution.from_dict(obj)
    dist.n = 0
    return dist


def estimate_distribution(data: Dataset, w_in_selection: bool = False) -> CellDistribution:
    """Empirical frequencies of every ``(y, d, z, w, x)`` cell.

    Unobserved ``(z, w, x)`` cells stay at zero mass and are listed by
    :attr:`CellDistribution.empty_cells`; propensities of 0 or 1 trigger a
    warning here and an error when a program is assembled.
    """
    n = len(data)
    if n == 0:
        raise DataError("cannot estimate a distribution from an empty dataset")
    shape = tuple(len(data.levels[a]) for a in _AXES)
    counts = np.zeros(shape)
    idx = tuple(data.codes[a] for a in _AXES)
    weights = np.ones(n) if data.weights is None else data.weights
    np.add.at(counts, idx, weights)
    if counts.sum() <= 0:
        raise DataError("dataset has zero total weight")
    dist = CellDistribution(counts / counts.sum(), dict(data.levels), n, w_in_selection)
    try:
        dist.check_relevance()
    except RelevanceError as exc:
        warnings.warn(str(exc), stacklevel=2)
    if dist.empty_cells:
        warnings.warn(f"{len(dist.empty_cells)} (z, w, x) cell(s) unobserved", stacklevel=2)
    return dist


def write_csv(data: Dataset, path) -> None:
    """Write a dataset with its original level values and a header row."""
    names = list(_AXES)
    cols = [data.column(c) for c in names]
    if data.weights is not None:
        names.append("weight")
        cols.append(data.weights)
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(names)
        writer.writerows(zip(*(c.tolist() for c in cols)))
