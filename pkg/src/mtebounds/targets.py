"""Target parameters as pairs of weight functions over the selection margin.

A target is ``sum_{w,x} E[int m_1(u,w,x) w_1(u) - m_0(u,w,x) w_0(u) du]``
with cell weights ``p(z, w, x)`` (or ``p(z, w | x)`` when conditioned on x).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .bernstein import WeightDescriptor, weighted_integrals
from .errors import ConfigurationError, RelevanceError
from .latent import SieveLayout, response_table

TARGET_KINDS = ("ATE", "LATE_C", "LATE_AT", "LATE_NT", "GLATE", "MTE", "PRTE", "CUSTOM")
_ALIASES = {k.lower(): k for k in TARGET_KINDS}


@dataclass(frozen=True)
class TargetSpec:
    """A named treatment parameter.

    kind      one of ATE, LATE_C, LATE_AT, LATE_NT, GLATE, MTE, PRTE, CUSTOM
    x, w      optional conditioning cell (level indices)
    interval  (lo, hi) for GLATE
    point     u' for MTE
    policy    for PRTE: ``{"propensity": P'[z', x], "z_prob": p'[z' | x]}``;
              ``z_prob`` defaults to the observed ``p(z | x)``
    z_pair    instrument levels (low, high) defining the complier interval;
              by default the levels with the smallest and largest propensity
    weights   (w0, w1) WeightDescriptors for CUSTOM
    """

    kind: str
    x: Optional[int] = None
    w: Optional[int] = None
    interval: Optional[tuple] = None
    point: Optional[float] = None
    policy: Optional[dict] = None
    z_pair: Optional[tuple] = None
    weights: Optional[tuple] = None

    def __post_init__(self):
        kind = _ALIASES.get(str(self.kind).lower())
        if kind is None:
            raise ConfigurationError(f"unknown target kind {self.kind!r}; choose from {TARGET_KINDS}")
        object.__setattr__(self, "kind", kind)
        if kind == "GLATE":
            if self.interval is None or len(self.interval) != 2:
                raise ConfigurationError("GLATE needs an interval (lo, hi)")
            lo, hi = (float(v) for v in self.interval)
            if not 0.0 <= lo < hi <= 1.0:
                raise ConfigurationError(f"GLATE interval [{lo}, {hi}] must lie in [0, 1] with positive length")
            object.__setattr__(self, "interval", (lo, hi))
        if kind == "MTE":
            if self.point is None or not 0.0 <= float(self.point) <= 1.0:
                raise ConfigurationError(f"MTE needs a point in [0, 1], got {self.point!r}")
            object.__setattr__(self, "point", float(self.point))
        if kind == "PRTE" and (self.policy is None or "propensity" not in self.policy):
            raise ConfigurationError("PRTE needs a policy with a 'propensity' table")
        if kind == "CUSTOM":
            if self.weights is None or len(self.weights) != 2 or not all(
                    isinstance(v, WeightDescriptor) for v in self.weights):
                raise ConfigurationError("CUSTOM needs weights=(w0, w1) as WeightDescriptors")
        if self.w is not None and self.x is None:
            raise ConfigurationError("conditioning on w also requires x")

    @property
    def label(self) -> str:
        parts = [self.kind]
        if self.kind == "MTE":
            parts.append(f"u={self.point:g}")
        if self.kind == "GLATE":
            parts.append(f"[{self.interval[0]:g},{self.interval[1]:g}]")
        if self.x is not None:
            parts.append(f"x={self.x}")
        if self.w is not None:
            parts.append(f"w={self.w}")
        return " ".join(parts)

    def to_dict(self) -> dict:
        out = {"kind": self.kind}
        for name in ("x", "w", "point"):
            if getattr(self, name) is not None:
                out[name] = getattr(self, name)
        if self.interval is not None:
            out["interval"] = list(self.interval)
        if self.z_pair is not None:
            out["z_pair"] = list(self.z_pair)
        if self.policy is not None:
            out["policy"] = {k: np.asarray(v).tolist() for k, v in self.policy.items()}
        if self.weights is not None:
            out["weights"] = [w.to_dict() for w in self.weights]
        return out

    @classmethod
    def from_dict(cls, obj) -> "TargetSpec":
        obj = dict(obj)
        if "interval" in obj:
            obj["interval"] = tuple(obj["interval"])
        if "z_pair" in obj:
            obj["z_pair"] = tuple(obj["z_pair"])
        if "weights" in obj:
            obj["weights"] = tuple(WeightDescriptor(**{**w, "breaks": tuple(w.get("breaks", ())),
                                                       "values": tuple(w.get("values", ()))})
                                   for w in obj["weights"])
        return cls(**obj)


def _slice(propensity, x, w):
    """Propensities over z at (x, w) from a (nz, nx) or (nz, nx, nw) table."""
    P = np.asarray(propensity, dtype=float)
    if P.ndim == 2:
        return P[:, x]
    if P.ndim == 3:
        return P[:, x, 0 if w is None else w]
    raise ConfigurationError(f"propensity table must be 2- or 3-dimensional, got shape {P.shape}")


def _complier_pair(spec, Pz):
    if spec.z_pair is not None:
        z0, z1 = spec.z_pair
        return float(Pz[z0]), float(Pz[z1])
    return float(np.nanmin(Pz)), float(np.nanmax(Pz))


def weights_for(spec: TargetSpec, propensity, z, x, w=None, z_prob=None, x_prob=None):
    """Return ``(omega_0, omega_1)`` for cell ``(z, w, x)``.

    ``propensity`` is indexed ``[z, x]`` (or ``[z, x, w]`` when W enters
    selection). PRTE also needs ``z_prob[z, x] = p(z | x)`` and
    ``x_prob[x] = p(x)`` for the baseline policy.
    """
    kind = spec.kind
    if kind == "ATE":
        one = WeightDescriptor.constant(1.0)
        return one, one
    if kind == "CUSTOM":
        return spec.weights
    if kind == "MTE":
        atom = WeightDescriptor.dirac(spec.point)
        return atom, atom
    if kind == "GLATE":
        iv = WeightDescriptor.interval(*spec.interval)
        return iv, iv
    Pz = _slice(propensity, x, w)
    if kind in ("LATE_C", "LATE_AT", "LATE_NT"):
        p_lo, p_hi = _complier_pair(spec, Pz)
        if kind == "LATE_C":
            if not p_hi > p_lo:
                raise RelevanceError(
                    f"complier interval is empty at x={x}: P(z0)={p_lo:g}, P(z1)={p_hi:g}")
            iv = WeightDescriptor.interval(p_lo, p_hi)
        elif kind == "LATE_AT":
            if p_lo <= 0.0:
                raise RelevanceError(f"no always-takers at x={x}: smallest propensity is {p_lo:g}")
            iv = WeightDescriptor.interval(0.0, p_lo)
        else:
            if p_hi >= 1.0:
                raise RelevanceError(f"no never-takers at x={x}: largest propensity is {p_hi:g}")
            iv = WeightDescriptor.interval(p_hi, 1.0)
        return iv, iv
    if kind == "PRTE":
        P = np.asarray(propensity, dtype=float)
        if P.ndim != 2:
            raise ConfigurationError("PRTE is only available when W is excluded from selection")
        if z_prob is None or x_prob is None:
            raise ConfigurationError("PRTE weights need p(z | x) and p(x)")
        omega = prte_weight(spec.policy, P, np.asarray(z_prob), np.asarray(x_prob), x)
        return omega, omega
    raise ConfigurationError(f"unsupported target {kind}")


def prte_weight(policy, P, z_prob, x_prob, x) -> WeightDescriptor:
    """Piecewise-constant ``(Pr[u <= P'(Z',x)] - Pr[u <= P(Z,x)]) / (E[P'] - E[P])``."""
    P_new = np.asarray(policy["propensity"], dtype=float)
    if P_new.ndim == 1:
        P_new = P_new[:, None]
    if P_new.shape[1] != P.shape[1]:
        raise ConfigurationError(
            f"policy propensity covers {P_new.shape[1]} x level(s), data has {P.shape[1]}")
    zp_new = policy.get("z_prob")
    zp_new = z_prob if zp_new is None else np.asarray(zp_new, dtype=float)
    if zp_new.ndim == 1:
        zp_new = zp_new[:, None]
    if zp_new.shape != P_new.shape:
        raise ConfigurationError("policy z_prob must match the shape of its propensity table")
    if np.any((P_new < 0) | (P_new > 1)):
        raise ConfigurationError("policy propensities must lie in [0, 1]")
    mean_new = float(np.sum(x_prob * np.sum(zp_new * P_new, axis=0)))
    mean_old = float(np.sum(x_prob * np.nansum(z_prob * P, axis=0)))
    change = mean_new - mean_old
    if abs(change) < 1e-12:
        raise ConfigurationError("PRTE is undefined: the policy leaves the treated share unchanged")
    pts_new, pts_old = P_new[:, x], P[:, x]
    breaks = np.unique(np.concatenate([[0.0, 1.0], pts_new, pts_old[np.isfinite(pts_old)]]))
    mids = 0.5 * (breaks[:-1] + breaks[1:])
    values = []
    for u in mids:
        new = np.sum(zp_new[:, x] * (u <= pts_new))
        old = np.nansum(z_prob[:, x] * (u <= pts_old))
        values.append((new - old) / change)
    return WeightDescriptor.piecewise(breaks, values, kind="prte")


def cell_weights(spec: TargetSpec, dist) -> np.ndarray:
    """Mass attached to each ``(z, w, x)`` cell: ``p(z,w,x)`` or its conditional version."""
    mass = dist.cell_mass
    if spec.x is None:
        return mass
    out = np.zeros_like(mass)
    if not 0 <= spec.x < dist.nx:
        raise ConfigurationError(f"conditioning level x={spec.x} outside 0..{dist.nx - 1}")
    if spec.w is None:
        px = mass[:, :, spec.x].sum()
        if px <= 0:
            raise ConfigurationError(f"conditioning cell x={spec.x} has zero probability")
        out[:, :, spec.x] = mass[:, :, spec.x] / px
    else:
        pwx = mass[:, spec.w, spec.x].sum()
        if pwx <= 0:
            raise ConfigurationError(f"conditioning cell (w={spec.w}, x={spec.x}) has zero probability")
        out[:, spec.w, spec.x] = mass[:, spec.w, spec.x] / pwx
    return out


def target_propensity(dist) -> np.ndarray:
    """Propensity table used in target weights: ``[z, x]`` or ``[z, x, w]``."""
    return dist.propensity_zxw() if dist.w_in_selection else dist.propensity_zx()


def gamma(spec: TargetSpec, dist, K: int) -> np.ndarray:
    """``gamma[d, w, x, k] = sum_z mass(z,w,x) int b_k(u) omega_d(u; z,w,x) du``."""
    mass = cell_weights(spec, dist)
    P = target_propensity(dist)
    z_prob, x_prob = dist.p_z_given_x(), dist.p_x()
    out = np.zeros((2, dist.nw, dist.nx, K + 1))
    cache = {}
    for z, w, x in zip(*np.nonzero(mass)):
        key = (x, w if dist.w_in_selection else None)
        if key not in cache:
            pair = weights_for(spec, P, z, x, w if dist.w_in_selection else None, z_prob, x_prob)
            cache[key] = [weighted_integrals(K, om) for om in pair]
        for d in (0, 1):
            out[d, w, x] += mass[z, w, x] * cache[key][d]
    return out


def objective_coefficients(spec: TargetSpec, dist, K: int) -> np.ndarray:
    """Objective over the flat decision vector (see :class:`SieveLayout`).

    The coefficient on ``theta[e, k, x]`` is
    ``sum_w Y_e(1,w) gamma1[w,x,k] - Y_e(0,w) gamma0[w,x,k]``.
    """
    g = gamma(spec, dist, K)
    table = response_table(dist.nw).astype(float)  # [e, d, w]
    coef = (np.einsum("ew,wxk->xke", table[:, 1, :], g[1])
            - np.einsum("ew,wxk->xke", table[:, 0, :], g[0]))
    layout = SieveLayout(K, table.shape[0], dist.nx)
    return coef.reshape(layout.size)


def parse_target(text: str, **kw) -> TargetSpec:
    """Build a spec from a short name such as ``ate``, ``late_c`` or ``mte``."""
    return TargetSpec(text, **kw)
