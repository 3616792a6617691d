"""Bernstein bases and their exact integrals against the target weights.

All integrals use the degree-elevation identity

    int_0^a b_{k,K}(u) du = (1 / (K + 1)) * sum_{i=k+1}^{K+1} b_{i,K+1}(a)

so LP coefficients are reproducible to the last bit and never depend on a
quadrature rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ConfigurationError, DomainError

_EXACT_BINOMIAL_MAX = 60


@lru_cache(maxsize=256)
def _log_binomials(n: int) -> np.ndarray:
    i = np.arange(n + 1)
    return (math.lgamma(n + 1)
            - np.array([math.lgamma(j + 1) for j in i])
            - np.array([math.lgamma(n - j + 1) for j in i]))


@lru_cache(maxsize=256)
def _binomials(n: int) -> np.ndarray:
    out = np.array([float(math.comb(n, j)) for j in range(n + 1)])
    out.setflags(write=False)
    return out


def _check_unit(name, value):
    if not 0.0 <= value <= 1.0 or value != value:
        raise DomainError(f"{name} must lie in [0, 1], got {value!r}")


def _check_index(k, K):
    if int(K) != K or K < 0:
        raise DomainError(f"degree must be a nonnegative integer, got {K!r}")
    if int(k) != k or not 0 <= k <= K:
        raise DomainError(f"index k={k!r} outside 0..{K}")


def basis_all(K: int, u: float) -> np.ndarray:
    """Vector ``[b_{0,K}(u), ..., b_{K,K}(u)]``."""
    _check_unit("u", u)
    k = np.arange(K + 1)
    if u == 0.0:
        return (k == 0).astype(float)
    if u == 1.0:
        return (k == K).astype(float)
    if K <= _EXACT_BINOMIAL_MAX:
        return _binomials(K) * u ** k * (1.0 - u) ** (K - k)
    return np.exp(_log_binomials(K) + k * math.log(u) + (K - k) * math.log1p(-u))


def basis_matrix(K: int, u) -> np.ndarray:
    """``B[j, k] = b_{k,K}(u_j)`` for an array of points."""
    u = np.atleast_1d(np.asarray(u, dtype=float))
    return np.vstack([basis_all(K, float(x)) for x in u])


def basis_eval(k: int, K: int, u: float) -> float:
    """Bernstein basis polynomial ``C(K, k) u^k (1 - u)^(K - k)``."""
    _check_index(k, K)
    return float(basis_all(K, u)[k])


def prefix_all(K: int, a: float) -> np.ndarray:
    """``[int_0^a b_{k,K}(u) du for k in 0..K]``."""
    _check_unit("a", a)
    elevated = basis_all(K + 1, a)
    # sum over i = k+1 .. K+1 is a reversed cumulative sum
    return np.cumsum(elevated[::-1])[::-1][1:] / (K + 1)


def suffix_all(K: int, a: float) -> np.ndarray:
    """``[int_a^1 b_{k,K}(u) du for k in 0..K]``."""
    _check_unit("a", a)
    elevated = basis_all(K + 1, a)
    return np.cumsum(elevated)[:-1] / (K + 1)


def integral_prefix(k: int, K: int, a: float) -> float:
    _check_index(k, K)
    return float(prefix_all(K, a)[k])


def integral_suffix(k: int, K: int, a: float) -> float:
    _check_index(k, K)
    return float(suffix_all(K, a)[k])


def interval_all(K: int, lo: float, hi: float) -> np.ndarray:
    """``[int_lo^hi b_{k,K}(u) du for k in 0..K]``."""
    if lo > hi:
        raise DomainError(f"interval [{lo}, {hi}] is reversed")
    if lo == 0.0:
        return prefix_all(K, hi)
    if hi == 1.0:
        return suffix_all(K, lo)
    return prefix_all(K, hi) - prefix_all(K, lo)


_WEIGHT_KINDS = ("constant", "indicator_interval", "dirac", "prte", "custom_piecewise")


@dataclass(frozen=True)
class WeightDescriptor:
    """A weight function ``omega(u)`` on [0, 1], described symbolically.

    ``constant``            value ``scale`` everywhere
    ``indicator_interval``  ``scale * 1[lo <= u <= hi]``, divided by ``hi - lo``
                            when ``normalized``
    ``dirac``               point mass of size ``scale`` at ``at``
    ``prte`` and ``custom_piecewise``
                            ``scale * values[i]`` on ``[breaks[i], breaks[i+1])``
    """

    kind: str
    scale: float = 1.0
    lo: float = 0.0
    hi: float = 1.0
    normalized: bool = True
    at: float = 0.0
    breaks: tuple = ()
    values: tuple = ()

    def __post_init__(self):
        if self.kind not in _WEIGHT_KINDS:
            raise ConfigurationError(f"unknown weight kind {self.kind!r}")
        if self.kind == "indicator_interval":
            if not 0.0 <= self.lo <= self.hi <= 1.0:
                raise ConfigurationError(f"interval [{self.lo}, {self.hi}] not ordered within [0, 1]")
            if self.normalized and self.hi == self.lo:
                raise ConfigurationError("normalized indicator needs an interval of positive length")
        elif self.kind == "dirac":
            if not 0.0 <= self.at <= 1.0:
                raise ConfigurationError(f"atom {self.at} outside [0, 1]")
        elif self.kind in ("prte", "custom_piecewise"):
            breaks = tuple(float(b) for b in self.breaks)
            values = tuple(float(v) for v in self.values)
            if len(breaks) != len(values) + 1 or len(values) == 0:
                raise ConfigurationError("piecewise weight needs len(breaks) == len(values) + 1")
            if any(b1 <= b0 for b0, b1 in zip(breaks, breaks[1:])):
                raise ConfigurationError(f"breakpoints must be strictly increasing: {breaks}")
            if breaks[0] < 0.0 or breaks[-1] > 1.0:
                raise ConfigurationError(f"breakpoints must lie in [0, 1]: {breaks}")
            object.__setattr__(self, "breaks", breaks)
            object.__setattr__(self, "values", values)

    # constructors
    @classmethod
    def constant(cls, value=1.0):
        return cls("constant", scale=float(value))

    @classmethod
    def interval(cls, lo, hi, normalized=True, scale=1.0):
        return cls("indicator_interval", scale=float(scale), lo=float(lo), hi=float(hi),
                   normalized=normalized)

    @classmethod
    def dirac(cls, at, scale=1.0):
        return cls("dirac", scale=float(scale), at=float(at))

    @classmethod
    def piecewise(cls, breaks, values, kind="custom_piecewise", scale=1.0):
        return cls(kind, scale=float(scale), breaks=tuple(breaks), values=tuple(values))

    def scaled(self, factor: float) -> "WeightDescriptor":
        from dataclasses import replace
        return replace(self, scale=self.scale * factor)

    def total_mass(self) -> float:
        """``int_0^1 omega(u) du`` (the atom size for a Dirac weight)."""
        if self.kind == "constant":
            return self.scale
        if self.kind == "indicator_interval":
            width = self.hi - self.lo
            return self.scale * (1.0 if self.normalized else width)
        if self.kind == "dirac":
            return self.scale
        b = np.asarray(self.breaks)
        return self.scale * float(np.dot(np.diff(b), self.values))

    def __call__(self, u):
        """Pointwise value (the Dirac weight evaluates to 0 off its atom)."""
        u = np.asarray(u, dtype=float)
        if self.kind == "constant":
            return np.full_like(u, self.scale)
        if self.kind == "indicator_interval":
            inside = (u >= self.lo) & (u <= self.hi)
            norm = (self.hi - self.lo) if self.normalized else 1.0
            return np.where(inside, self.scale / norm, 0.0)
        if self.kind == "dirac":
            return np.zeros_like(u)
        idx = np.searchsorted(self.breaks, u, side="right") - 1
        idx = np.where(u == self.breaks[-1], len(self.values) - 1, idx)
        ok = (idx >= 0) & (idx < len(self.values))
        vals = np.asarray(self.values)[np.clip(idx, 0, len(self.values) - 1)]
        return np.where(ok, self.scale * vals, 0.0)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "scale": self.scale, "lo": self.lo, "hi": self.hi,
                "normalized": self.normalized, "at": self.at,
                "breaks": list(self.breaks), "values": list(self.values)}


def weighted_integrals(K: int, weight: WeightDescriptor) -> np.ndarray:
    """``[int_0^1 b_{k,K}(u) omega(u) du for k in 0..K]`` in closed form."""
    if not isinstance(weight, WeightDescriptor):
        raise ConfigurationError(f"expected a WeightDescriptor, got {type(weight).__name__}")
    if weight.kind == "constant":
        return np.full(K + 1, weight.scale / (K + 1))
    if weight.kind == "indicator_interval":
        out = interval_all(K, weight.lo, weight.hi)
        if weight.normalized:
            out = out / (weight.hi - weight.lo)
        return weight.scale * out
    if weight.kind == "dirac":
        return weight.scale * basis_all(K, weight.at)
    out = np.zeros(K + 1)
    for lo, hi, v in zip(weight.breaks, weight.breaks[1:], weight.values):
        if v != 0.0:
            out += v * interval_all(K, lo, hi)
    return weight.scale * out


def weighted_integral(k: int, K: int, weight: WeightDescriptor) -> float:
    _check_index(k, K)
    return float(weighted_integrals(K, weight)[k])


def trivariate_basis_eval(k1, k0, ku, K, y1, y0, u) -> float:
    """Product ``b_{k1,K}(y1) * b_{k0,K}(y0) * b_{ku,K}(u)``."""
    return basis_eval(k1, K, y1) * basis_eval(k0, K, y0) * basis_eval(ku, K, u)


def elevate(coefs) -> np.ndarray:
    """Coefficients of the same polynomial written at degree ``K + 1``."""
    c = np.asarray(coefs, dtype=float)
    K = c.shape[-1] - 1
    i = np.arange(K + 2) / (K + 1)
    padded_lo = np.concatenate([np.zeros(c.shape[:-1] + (1,)), c], axis=-1)
    padded_hi = np.concatenate([c, np.zeros(c.shape[:-1] + (1,))], axis=-1)
    return i * padded_lo + (1.0 - i) * padded_hi


def elevate_to(coefs, K_new: int) -> np.ndarray:
    c = np.asarray(coefs, dtype=float)
    if K_new < c.shape[-1] - 1:
        raise DomainError("cannot lower the degree of a Bernstein expansion")
    while c.shape[-1] - 1 < K_new:
        c = elevate(c)
    return c


def evaluate(coefs, u) -> np.ndarray:
    """Evaluate ``sum_k coefs[k] b_{k,K}(u)`` at points ``u``."""
    c = np.asarray(coefs, dtype=float)
    return basis_matrix(c.shape[-1] - 1, u) @ c
