"""Attractive radial potential profiles and epsilon-scaling laws.

Potentials are stored nonnegative and always enter Hamiltonians with a minus
sign (attractive convention).  A scaling law (p, epsilon, d) contracts a base
profile V into V_eps(r) = eps^(-p) * lambda * V(r / eps); the (p, d) pairs map
onto the zero-range regimes:

    (3, 3) contact in d=3        (2, 3) weak contact in d=3
    (2, 2) contact in d=2        (1, 2) weak contact in d=2

and p = None leaves the profile unscaled (a regular potential).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grids import GridFunction, RadialGrid

PROFILES = ("gaussian", "square_well", "exponential")

# (p, d) -> regime name
SCALING_REGIMES = {
    (3, 3): "contact",
    (2, 3): "weak_contact",
    (2, 2): "contact",
    (1, 2): "weak_contact",
}


class ScalingLawError(ValueError):
    """Scaling-law parameters outside the supported regime table."""


@dataclass(frozen=True)
class BasePotential:
    """Nonnegative radial profile with coupling strength and range."""

    profile: str
    strength: float = 1.0
    range: float = 1.0

    def __post_init__(self):
        if self.profile not in PROFILES:
            raise ValueError(f"unknown profile {self.profile!r}, expected one of {PROFILES}")
        if self.strength <= 0.0:
            raise ValueError("strength must be positive")
        if self.range <= 0.0:
            raise ValueError("range must be positive")

    def __call__(self, r):
        """V(r) >= 0; enters Hamiltonians as -V(r)."""
        r = np.asarray(r, dtype=float)
        s = r / self.range
        if self.profile == "gaussian":
            v = np.exp(-s * s)
        elif self.profile == "square_well":
            v = np.where(s <= 1.0, 1.0, 0.0)
        else:
            v = np.exp(-s)
        return self.strength * v

    def on_grid(self, grid: RadialGrid) -> GridFunction:
        return GridFunction(grid, self(grid.nodes))


@dataclass(frozen=True)
class ScalingLaw:
    """Contraction rate eps^(-p) V(r/eps) in spatial dimension d."""

    p: int | None
    epsilon: float = 1.0
    d: int = 3

    def __post_init__(self):
        if self.epsilon <= 0.0:
            raise ScalingLawError("epsilon must be positive")
        if self.d not in (2, 3):
            raise ScalingLawError("dimension must be 2 or 3")
        if self.p is not None and (self.p, self.d) not in SCALING_REGIMES:
            raise ScalingLawError(
                f"(p={self.p}, d={self.d}) is not a supported regime; "
                f"valid pairs: {sorted(SCALING_REGIMES)} or p=None (unscaled)"
            )

    @property
    def regime(self) -> str:
        if self.p is None:
            return "unscaled"
        return SCALING_REGIMES[(self.p, self.d)]

    def with_epsilon(self, epsilon: float) -> "ScalingLaw":
        return ScalingLaw(self.p, epsilon, self.d)


@dataclass(frozen=True)
class ScaledPotential:
    """A base profile contracted by a scaling law; evaluates eps^(-p) V(r/eps)."""

    base: BasePotential
    law: ScalingLaw

    def __call__(self, r):
        if self.law.p is None:
            return self.base(r)
        eps = self.law.epsilon
        return self.base(np.asarray(r, dtype=float) / eps) * eps ** (-self.law.p)

    def on_grid(self, grid: RadialGrid) -> GridFunction:
        return GridFunction(grid, self(grid.nodes))


def _sphere_area(d: int) -> float:
    return 4.0 * np.pi if d == 3 else 2.0 * np.pi


def l1_norm(values: np.ndarray, grid: RadialGrid, d: int = 3) -> float:
    """L1 norm of a radial function over R^d."""
    r = grid.nodes
    return _sphere_area(d) * grid.integrate(np.abs(values) * r ** (d - 1))


def l2_norm(values: np.ndarray, grid: RadialGrid, d: int = 3) -> float:
    """L2 norm of a radial function over R^d."""
    r = grid.nodes
    return float(np.sqrt(_sphere_area(d) * grid.integrate(values * values * r ** (d - 1))))


def _log_antideriv(t: np.ndarray) -> np.ndarray:
    # G with G'' = log|t|:  G(t) = t^2 (2 log|t| - 3) / 4, G(0) = 0.
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    nz = t != 0.0
    out[nz] = t[nz] * t[nz] * (2.0 * np.log(np.abs(t[nz])) - 3.0) / 4.0
    return out


def rollnik_norm(values: np.ndarray, grid: RadialGrid) -> float:
    """Rollnik double integral of a radial function in d=3.

    Integral of V(x) V(y) / |x-y|^2 over R^3 x R^3.  After angular reduction
    this is 8 pi^2 times the double integral of V(r) V(r') r r' times
    log((r+r')/|r-r'|).  Both log kernels are integrated exactly over every
    cell pair (the density V r is frozen at the nodes), so the quadrature is
    second order despite the diagonal singularity.
    """
    r = grid.nodes
    f = np.abs(values) * r  # V(r) * r, frozen per cell
    mid = 0.5 * (r[:-1] + r[1:])
    edges = np.concatenate(([0.0], mid, [r[-1] + 0.5 * (r[-1] - r[-2])]))
    lo, hi = edges[:-1], edges[1:]
    # exact integral of log(r+s) - log|r-s| over [lo_i,hi_i] x [lo_j,hi_j]
    plus = (
        _log_antideriv(hi[:, None] + hi[None, :])
        + _log_antideriv(lo[:, None] + lo[None, :])
        - _log_antideriv(hi[:, None] + lo[None, :])
        - _log_antideriv(lo[:, None] + hi[None, :])
    )
    minus = (
        _log_antideriv(hi[:, None] - lo[None, :])
        + _log_antideriv(lo[:, None] - hi[None, :])
        - _log_antideriv(hi[:, None] - hi[None, :])
        - _log_antideriv(lo[:, None] - lo[None, :])
    )
    quad = float(f @ (plus - minus) @ f)
    return 8.0 * np.pi**2 * quad


def scale_potential(potential: BasePotential, law: ScalingLaw, grid: RadialGrid) -> dict:
    """Contract a potential by its scaling law and report its norms on a grid.

    Returns the scaled profile as a GridFunction together with the L1 and L2
    norms (in the law's dimension) and, for d=3, the Rollnik double integral.
    """
    scaled = ScaledPotential(potential, law)
    gf = scaled.on_grid(grid)
    d = law.d
    report = {
        "profile": gf,
        "scaled": scaled,
        "l1": l1_norm(gf.values, grid, d),
        "l2": l2_norm(gf.values, grid, d),
        "rollnik": rollnik_norm(gf.values, grid) if d == 3 else float("nan"),
    }
    return report
