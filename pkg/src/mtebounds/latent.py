"""Saturated response maps (d, w) -> y and the restrictions they carry.

A response map fixes every counterfactual outcome Y(d, w) of one individual
type. With binary D and Y and ``L`` levels of W there are ``2 ** (2 * L)``
maps. Maps are numbered from 1 and the number ``e - 1`` is read as a bit
vector whose bit ``d * L + w`` holds Y(d, w), so the least significant bits
are Y(0, 0), Y(0, 1), ..., Y(1, 0), Y(1, 1), ...
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import CapacityError, ConfigurationError, DomainError

MAX_W_LEVELS = 4

# Canonical kind names plus the spellings accepted in config files.
_KIND_ALIASES = {
    "U_star": "U_star", "Ustar": "U_star", "U*": "U_star", "ustar": "U_star",
    "U": "U", "u": "U",
    "U_zero": "U_zero", "U0": "U_zero", "u0": "U_zero", "U_0": "U_zero",
    "MTS": "MTS", "mts": "MTS",
    "M": "M", "m": "M",
    "C": "C", "c": "C",
    "NONE": "NONE", "none": "NONE", "None": "NONE",
}
DIRECTED_KINDS = ("U", "U_zero", "U_star")


@dataclass(frozen=True)
class ResponseMap:
    """One saturated map ``(d, w) -> y``.

    ``values[d][w]`` is the outcome Y(d, w).
    """

    index: int
    values: tuple

    @property
    def w_levels(self) -> int:
        return len(self.values[0])

    def __call__(self, d: int, w: int = 0) -> int:
        return self.values[d][w]


def _check_levels(w_levels):
    if int(w_levels) != w_levels or w_levels < 1:
        raise DomainError(f"w_levels must be a positive integer, got {w_levels!r}")
    if w_levels > MAX_W_LEVELS:
        raise CapacityError(
            f"{w_levels} levels of W give 2**{2 * w_levels} response maps; "
            f"at most {MAX_W_LEVELS} levels are supported"
        )


def decode(index: int, w_levels: int) -> tuple:
    """Return ``values[d][w]`` for map number ``index`` (1-based)."""
    bits = index - 1
    return tuple(
        tuple((bits >> (d * w_levels + w)) & 1 for w in range(w_levels)) for d in (0, 1)
    )


def encode(values) -> int:
    """Inverse of :func:`decode`."""
    w_levels = len(values[0])
    bits = 0
    for d in (0, 1):
        for w in range(w_levels):
            bits |= int(values[d][w]) << (d * w_levels + w)
    return bits + 1


@lru_cache(maxsize=None)
def enumerate_maps(w_levels: int = 1) -> tuple:
    """All ``2 ** (2 * w_levels)`` response maps in index order."""
    _check_levels(w_levels)
    n_maps = 2 ** (2 * w_levels)
    return tuple(ResponseMap(e, decode(e, w_levels)) for e in range(1, n_maps + 1))


@lru_cache(maxsize=None)
def response_table(w_levels: int) -> np.ndarray:
    """Array ``T[e - 1, d, w] = Y(d, w)`` for every map."""
    maps = enumerate_maps(w_levels)
    table = np.array([m.values for m in maps], dtype=np.int8)
    table.setflags(write=False)
    return table


def maps_matching(d: int, w: int, y: int, maps) -> frozenset:
    """Indices ``e`` of the maps with ``g_e(d, w) = y``."""
    if d not in (0, 1) or y not in (0, 1):
        raise DomainError(f"d and y must be binary, got d={d!r}, y={y!r}")
    w_levels = maps[0].w_levels
    if not 0 <= w < w_levels:
        raise DomainError(f"w={w!r} is not a level in 0..{w_levels - 1}")
    return frozenset(m.index for m in maps if m.values[d][w] == y)


def canonical_kind(kind: str) -> str:
    try:
        return _KIND_ALIASES[kind]
    except KeyError:
        raise ConfigurationError(f"unknown assumption kind {kind!r}") from None


@dataclass(frozen=True)
class AssumptionSpec:
    """An identifying assumption and, for the uniformity family, its direction.

    ``direction`` holds one sign per level of W for ``U`` and ``U_zero`` and
    one sign per ordered pair ``(w, w')`` (``w`` major) for ``U_star``. A sign
    of +1 means Y(1, w) >= Y(0, w') and -1 the reverse. The string ``"auto"``
    asks the engine to probe every direction for feasibility.
    """

    kind: str
    direction: object = None

    def __post_init__(self):
        object.__setattr__(self, "kind", canonical_kind(self.kind))
        direction = self.direction
        if direction is None or direction == "auto":
            return
        if isinstance(direction, (int, np.integer)):
            direction = (int(direction),)
        direction = tuple(int(s) for s in direction)
        if any(s not in (1, -1) for s in direction):
            raise ConfigurationError(f"direction signs must be +1 or -1, got {direction}")
        if self.kind not in DIRECTED_KINDS:
            raise ConfigurationError(f"assumption {self.kind} takes no direction")
        object.__setattr__(self, "direction", direction)

    @property
    def is_auto(self) -> bool:
        return self.kind in DIRECTED_KINDS and self.direction in (None, "auto")

    def expected_length(self, w_levels: int) -> int:
        if self.kind == "U_star":
            return w_levels * w_levels
        return w_levels

    def with_direction(self, direction) -> "AssumptionSpec":
        return AssumptionSpec(self.kind, tuple(direction))

    def to_dict(self) -> dict:
        return {"kind": self.kind, "direction": list(self.direction)
                if isinstance(self.direction, tuple) else self.direction}


@dataclass(frozen=True)
class InequalityRow:
    """``sum(q[lhs]) >= sum(q[rhs])`` pointwise in u."""

    lhs: frozenset
    rhs: frozenset
    context: object = None


@dataclass(frozen=True)
class ConstraintSet:
    zero_indices: frozenset = frozenset()
    inequality_rows: tuple = ()
    mts_rows: tuple = ()
    n_maps: int = 0

    @property
    def zero_maps(self) -> frozenset:
        return frozenset(e for e, _ in self.zero_indices)

    def __or__(self, other: "ConstraintSet") -> "ConstraintSet":
        return ConstraintSet(
            self.zero_indices | other.zero_indices,
            self.inequality_rows + other.inequality_rows,
            self.mts_rows + other.mts_rows,
            max(self.n_maps, other.n_maps),
        )


def _negative_response(maps, w1, w0, sign):
    """Maps violating ``sign * (Y(1, w1) - Y(0, w0)) >= 0``."""
    if sign > 0:
        return frozenset(m.index for m in maps if m.values[1][w1] == 0 and m.values[0][w0] == 1)
    return frozenset(m.index for m in maps if m.values[1][w1] == 1 and m.values[0][w0] == 0)


def assumption_constraints(spec: AssumptionSpec, maps) -> ConstraintSet:
    """Translate one assumption into zero sets and inequality rows over maps."""
    w_levels = maps[0].w_levels
    n_maps = len(maps)
    if spec.kind in DIRECTED_KINDS:
        if spec.is_auto:
            raise ConfigurationError(
                f"assumption {spec.kind} needs an explicit direction here; "
                "resolve 'auto' through the bounds engine"
            )
        if len(spec.direction) != spec.expected_length(w_levels):
            raise ConfigurationError(
                f"{spec.kind} needs {spec.expected_length(w_levels)} direction signs "
                f"for {w_levels} level(s) of W, got {len(spec.direction)}"
            )
    if spec.kind == "U":
        zeros = frozenset(
            (e, w)
            for w, sign in enumerate(spec.direction)
            for e in _negative_response(maps, w, w, sign)
        )
        return ConstraintSet(zero_indices=zeros, n_maps=n_maps)
    if spec.kind == "U_star":
        pairs = list(itertools.product(range(w_levels), repeat=2))
        zeros = frozenset(
            (e, pair)
            for pair, sign in zip(pairs, spec.direction)
            for e in _negative_response(maps, pair[0], pair[1], sign)
        )
        return ConstraintSet(zero_indices=zeros, n_maps=n_maps)
    if spec.kind == "U_zero":
        rows = []
        for w, sign in enumerate(spec.direction):
            positive = _negative_response(maps, w, w, -1)  # Y(1,w)=1, Y(0,w)=0
            negative = _negative_response(maps, w, w, +1)  # Y(1,w)=0, Y(0,w)=1
            if sign > 0:
                rows.append(InequalityRow(positive, negative, w))
            else:
                rows.append(InequalityRow(negative, positive, w))
        return ConstraintSet(inequality_rows=tuple(rows), n_maps=n_maps)
    if spec.kind == "MTS":
        mts = tuple((d, w) for d in (0, 1) for w in range(w_levels))
        return ConstraintSet(mts_rows=mts, n_maps=n_maps)
    return ConstraintSet(n_maps=n_maps)


def direction_space(kind: str, w_levels: int) -> list:
    """Every sign assignment for a uniformity-type assumption."""
    kind = canonical_kind(kind)
    _check_levels(w_levels)
    if kind not in DIRECTED_KINDS:
        raise ConfigurationError(f"assumption {kind} has no direction")
    length = w_levels * w_levels if kind == "U_star" else w_levels
    return [tuple(v) for v in itertools.product((1, -1), repeat=length)]


@dataclass(frozen=True)
class SieveLayout:
    """Position of ``theta[e, k, x]`` in the flat LP decision vector.

    The flat index is ``(x * (K + 1) + k) * n_maps + (e - 1)``, so each x
    occupies one contiguous block and, within it, each k one run of maps.
    """

    K: int
    n_maps: int
    nx: int

    @property
    def size(self) -> int:
        return self.nx * (self.K + 1) * self.n_maps

    @property
    def w_levels(self) -> int:
        return int(round(np.log2(self.n_maps))) // 2

    def index(self, e: int, k: int, x: int) -> int:
        return (x * (self.K + 1) + k) * self.n_maps + (e - 1)

    def reshape(self, theta) -> np.ndarray:
        """View a flat vector as ``[x, k, e - 1]``."""
        return np.asarray(theta).reshape(self.nx, self.K + 1, self.n_maps)
