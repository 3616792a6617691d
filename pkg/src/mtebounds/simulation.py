"""Simulation design with Bernstein-polynomial treatment responses.

Outcomes follow ``Y(d, w) = 1[m_d(U, X, W) >= eps]`` with a single uniform
``eps`` shared by every arm and every level of W, so counterfactuals are
ordered exactly as the response functions are. Selection is
``D = 1[U <= P(Z, X)]`` and ``(Z, X, W)`` are drawn independently.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bernstein import basis_matrix, elevate_to, prefix_all, suffix_all, weighted_integrals
from .data import CellDistribution, Dataset, dataset_from_arrays
from .errors import ConfigurationError, DomainError
from .latent import SieveLayout, encode
from .targets import TargetSpec, weights_for


@dataclass
class DgpSpec:
    """Discrete ``(Z, X, W)`` marginals, propensities and response coefficients.

    ``mtr[d, x, w]`` holds Bernstein coefficients (degree ``K``) of
    ``m_d(u, x, w)``. ``propensity[z, x]`` is ``P(z, x)``.
    """

    p_z: np.ndarray
    p_x: np.ndarray
    p_w: np.ndarray
    propensity: np.ndarray
    mtr: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("p_z", "p_x", "p_w"):
            v = np.asarray(getattr(self, name), dtype=float)
            if np.any(v < 0) or abs(v.sum() - 1.0) > 1e-12:
                raise ConfigurationError(f"{name} must be a probability vector, got {v}")
            setattr(self, name, v)
        self.propensity = np.asarray(self.propensity, dtype=float)
        self.mtr = np.asarray(self.mtr, dtype=float)
        nz, nx, nw = self.p_z.size, self.p_x.size, self.p_w.size
        if self.propensity.shape != (nz, nx):
            raise ConfigurationError(f"propensity must have shape {(nz, nx)}, got {self.propensity.shape}")
        if np.any((self.propensity <= 0) | (self.propensity >= 1)):
            raise ConfigurationError("propensities must lie strictly inside (0, 1)")
        if self.mtr.shape[:3] != (2, nx, nw):
            raise ConfigurationError(f"mtr must have leading shape {(2, nx, nw)}, got {self.mtr.shape}")
        if np.any((self.mtr < 0) | (self.mtr > 1)):
            raise ConfigurationError("MTR coefficients must lie in [0, 1]")

    @property
    def degree(self) -> int:
        return self.mtr.shape[-1] - 1

    def mtr_values(self, u) -> np.ndarray:
        """``m[d, x, w]`` evaluated at points ``u`` (last axis)."""
        B = basis_matrix(self.degree, u)
        return np.einsum("dxwk,jk->dxwj", self.mtr, B)

    def outcome_order(self, x: int) -> list:
        """``(d, w)`` arms sorted by their response coefficients, smallest first.

        The order must hold coefficientwise so that it holds for every u; a
        :class:`DomainError` is raised otherwise.
        """
        arms = [(d, w) for d in (0, 1) for w in range(self.p_w.size)]
        arms.sort(key=lambda a: self.mtr[a[0], x, a[1]].sum())
        for lo, hi in zip(arms, arms[1:]):
            if np.any(self.mtr[lo[0], x, lo[1]] > self.mtr[hi[0], x, hi[1]] + 1e-15):
                raise DomainError(f"response functions at x={x} are not ordered coefficientwise")
        return arms

    def to_dict(self) -> dict:
        return {"p_z": self.p_z.tolist(), "p_x": self.p_x.tolist(), "p_w": self.p_w.tolist(),
                "propensity": self.propensity.tolist(), "mtr": self.mtr.tolist()}

    @classmethod
    def from_dict(cls, obj) -> "DgpSpec":
        return cls(obj["p_z"], obj["p_x"], obj["p_w"], obj["propensity"], obj["mtr"])


def paper_dgp() -> DgpSpec:
    """Binary Z, X, W design with degree-4 Bernstein responses."""
    const = [0.999] * 5
    mtr = np.zeros((2, 2, 2, 5))
    # index order [d, x, w]
    mtr[0, 0, 0] = [0.002, 0.008, 0.014, 0.02, 0.021]
    mtr[1, 0, 0] = [0.012, 0.048, 0.084, 0.12, 0.121]
    mtr[0, 0, 1] = [0.034, 0.528, 0.724, 0.84, 0.861]
    mtr[1, 0, 1] = const
    mtr[0, 1, 0] = [0.0, 0.006, 0.012, 0.018, 0.019]
    mtr[1, 1, 0] = [0.0, 0.036, 0.072, 0.108, 0.109]
    mtr[0, 1, 1] = [0.25, 0.586, 0.822, 0.908, 0.919]
    mtr[1, 1, 1] = const
    propensity = np.array([[0.1, 0.4],    # z = 0: x = 0, 1
                           [0.4, 0.7]])   # z = 1
    return DgpSpec(p_z=[0.5, 0.5], p_x=[0.4, 0.6], p_w=[0.6, 0.4],
                   propensity=propensity, mtr=mtr, meta={"name": "paper"})


def population_distribution(dgp: DgpSpec) -> CellDistribution:
    """Exact ``p(y, d, z, w, x)`` from closed-form Bernstein integrals."""
    nz, nx, nw = dgp.p_z.size, dgp.p_x.size, dgp.p_w.size
    K = dgp.degree
    cond = np.zeros((2, 2, nz, nw, nx))
    for z in range(nz):
        for x in range(nx):
            P = float(dgp.propensity[z, x])
            pre, suf = prefix_all(K, P), suffix_all(K, P)
            for w in range(nw):
                p11 = float(dgp.mtr[1, x, w] @ pre)
                p10 = float(dgp.mtr[0, x, w] @ suf)
                cond[1, 1, z, w, x] = p11
                cond[0, 1, z, w, x] = P - p11
                cond[1, 0, z, w, x] = p10
                cond[0, 0, z, w, x] = (1.0 - P) - p10
    mass = np.einsum("z,w,x->zwx", dgp.p_z, dgp.p_w, dgp.p_x)
    return CellDistribution.from_conditionals(cond, mass)


def true_theta(dgp: DgpSpec, K: int | None = None) -> np.ndarray:
    """Bernstein coefficients of the true ``q(e | u, x)`` on the flat layout.

    Because every arm shares one threshold ``eps``, only the maps that are
    monotone along the arm ordering carry mass, and each such map's
    density is a difference of consecutive response functions. Raised to
    degree ``K`` by degree elevation.
    """
    K = dgp.degree if K is None else K
    if K < dgp.degree:
        raise DomainError(f"true coefficients need K >= {dgp.degree}")
    nx, nw = dgp.p_x.size, dgp.p_w.size
    n_maps = 2 ** (2 * nw)
    layout = SieveLayout(K, n_maps, nx)
    theta = np.zeros((nx, K + 1, n_maps))
    for x in range(nx):
        arms = dgp.outcome_order(x)
        # eps below the j-th smallest arm switches on arms j, j+1, ...
        lower = np.zeros(dgp.degree + 1)
        for j in range(len(arms) + 1):
            upper = dgp.mtr[arms[j][0], x, arms[j][1]] if j < len(arms) else np.ones(dgp.degree + 1)
            values = [[0] * nw, [0] * nw]
            for d, w in arms[j:]:
                values[d][w] = 1
            e = encode(values)
            theta[x, :, e - 1] += elevate_to(upper - lower, K)
            lower = upper
    return theta.reshape(layout.size)


def true_parameter(dgp: DgpSpec, spec: TargetSpec) -> float:
    """Exact value of a target under ``dgp`` (closed-form weighted integrals)."""
    nz, nx, nw = dgp.p_z.size, dgp.p_x.size, dgp.p_w.size
    mass = np.einsum("z,w,x->zwx", dgp.p_z, dgp.p_w, dgp.p_x)
    if spec.x is not None:
        sel = np.zeros_like(mass)
        if spec.w is None:
            sel[:, :, spec.x] = mass[:, :, spec.x] / mass[:, :, spec.x].sum()
        else:
            sel[:, spec.w, spec.x] = mass[:, spec.w, spec.x] / mass[:, spec.w, spec.x].sum()
        mass = sel
    z_prob = np.repeat(dgp.p_z[:, None], nx, axis=1)
    K = dgp.degree
    total = 0.0
    for z, w, x in zip(*np.nonzero(mass)):
        om0, om1 = weights_for(spec, dgp.propensity, z, x, None, z_prob, dgp.p_x)
        total += mass[z, w, x] * (dgp.mtr[1, x, w] @ weighted_integrals(K, om1)
                                  - dgp.mtr[0, x, w] @ weighted_integrals(K, om0))
    return float(total)


def sample(dgp: DgpSpec, n: int, seed=None) -> Dataset:
    """Draw ``n`` i.i.d. observations ``(y, d, z, w, x)``."""
    if int(n) != n or n < 1:
        raise DomainError(f"sample size must be a positive integer, got {n!r}")
    n = int(n)
    rng = np.random.default_rng(seed)
    z = rng.choice(dgp.p_z.size, size=n, p=dgp.p_z)
    x = rng.choice(dgp.p_x.size, size=n, p=dgp.p_x)
    w = rng.choice(dgp.p_w.size, size=n, p=dgp.p_w)
    u = rng.random(n)
    eps = rng.random(n)
    d = (u <= dgp.propensity[z, x]).astype(int)
    B = basis_matrix(dgp.degree, u)
    m = np.einsum("jk,jk->j", dgp.mtr[d, x, w], B)
    y = (m >= eps).astype(int)
    return dataset_from_arrays(y, d, z, w, x)
