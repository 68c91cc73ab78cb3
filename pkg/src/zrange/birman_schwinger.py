"""Birman-Schwinger operators, zero-energy resonances, and boundary fits.

The Birman-Schwinger operator for an attractive potential -V and spectral
parameter z > 0 is

    Q(z) = sqrt(V) (H0 + z)^(-1) sqrt(V),

whose eigenvalues crossing 1 signal eigenvalues of H0 - V below -z.  A
two-body zero-energy resonance is the critical situation where the top
eigenvalue of Q equals 1 as z -> 0+; the resonance wave behaves like
C/r + D outside the potential with D = 0 exactly at criticality.

z -> 0+ is always realized as a small floor z_min plus Richardson
extrapolation, because the zero-energy kernel is only conditionally defined
on a finite grid.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh

from .grids import GridFunction, RadialGrid, build_grid
from .operators import (
    OperatorMatrix,
    discretize_h0,
    green_kernel_matrix,
    radial_green_kernel,
)
from .potentials import BasePotential, ScaledPotential, ScalingLaw

Z_FLOOR = 1e-8
RESONANCE_TOL = 5e-3

# Truncation radius of each profile in units of (range * epsilon): beyond it
# the potential is below ~1e-14 of its peak.
_SUPPORT_CUT = {"gaussian": 5.8, "square_well": 1.0, "exponential": 33.0}


def support_radius(potential: BasePotential, law: ScalingLaw | None = None) -> float:
    """Radius beyond which the (scaled) profile is numerically negligible."""
    eps = 1.0 if law is None or law.p is None else law.epsilon
    return _SUPPORT_CUT[potential.profile] * potential.range * eps


def bs_operator(
    v: GridFunction,
    z: float,
    d: int = 3,
    m: float = 0.5,
    resolvent: str = "exact",
    h0: OperatorMatrix | None = None,
) -> OperatorMatrix:
    """Assemble Q(z) = sqrt(V) R0(z) sqrt(V) on the grid carrying V.

    resolvent="exact" uses the whole-space Green kernel (best for resonance
    work); resolvent="grid" inverts the boxed discretized H0 + z, which keeps
    the eigenvalue count of Q consistent with the spectrum of that same boxed
    H0 - V (the Birman-Schwinger principle then holds as a matrix identity).
    """
    if z < Z_FLOOR:
        raise ValueError(f"z={z:g} below the floor z_min={Z_FLOOR:g}")
    vals = v.values
    if np.any(vals < 0.0):
        raise ValueError("potential values must be nonnegative (attractive convention)")
    grid = v.grid
    sqv = np.sqrt(vals)
    if resolvent == "exact":
        g = green_kernel_matrix(grid, d, z, m).entries
    elif resolvent == "grid":
        if h0 is None:
            h0 = discretize_h0(grid, d, m)
        g = np.linalg.inv(h0.entries + z * np.eye(h0.n))
    else:
        raise ValueError("resolvent must be 'exact' or 'grid'")
    q = g * np.outer(sqv, sqv)
    return OperatorMatrix(0.5 * (q + q.T), grid, m, label=f"Q(z={z:g})")


def top_bs_eigenvalue(q: OperatorMatrix, k: int = 1) -> np.ndarray:
    """Largest k eigenvalues of a Birman-Schwinger matrix, descending."""
    n = q.n
    vals = eigh(q.entries, eigvals_only=True, subset_by_index=[n - k, n - 1])
    return vals[::-1]


def bs_count_above_one(q: OperatorMatrix) -> int:
    """Number of Birman-Schwinger eigenvalues exceeding 1."""
    vals = eigh(q.entries, eigvals_only=True)
    return int(np.sum(vals > 1.0))


def extrapolate_to_zero(z_ladder: np.ndarray, values: np.ndarray, sqrt_basis: bool) -> float:
    """Least-squares Richardson extrapolation of q(z) to z = 0.

    The whole-space kernel behaves like q(0) - c sqrt(z) + O(z) (sqrt basis);
    a boxed grid resolvent is analytic in z (polynomial basis).
    """
    z = np.asarray(z_ladder, dtype=float)
    y = np.asarray(values, dtype=float)
    if sqrt_basis:
        a = np.column_stack([np.ones_like(z), np.sqrt(z), z])
    else:
        a = np.column_stack([np.ones_like(z), z, z * z])
    coef, *_ = np.linalg.lstsq(a, y, rcond=None)
    return float(coef[0])


@dataclass
class ResonanceReport:
    """Critical coupling and the associated zero-energy resonance data."""

    lambda_critical: float
    bs_top_eigenvalue: float
    boundary_C: float
    boundary_D: float
    resonance_profile: GridFunction = field(repr=False)
    fit_residual: float = 0.0
    flags: list = field(default_factory=list)


@dataclass
class BoundaryFit:
    C: float
    D: float
    residual: float
    window: tuple
    flags: list = field(default_factory=list)


def boundary_fit(psi: GridFunction, support_radius: float, residual_tol: float = 1e-3) -> BoundaryFit:
    """Least-squares fit psi(r) ~ C/r + D over [2*support_radius, r_max/2].

    The relative rms misfit above residual_tol is flagged as non-asymptotic.
    """
    r = psi.grid.nodes
    lo, hi = 2.0 * support_radius, psi.grid.r_max / 2.0
    sel = (r >= lo) & (r <= hi)
    if np.sum(sel) < 4:
        raise ValueError(f"fit window [{lo:g}, {hi:g}] holds fewer than 4 nodes")
    rw = r[sel]
    yw = psi.values[sel]
    a = np.column_stack([1.0 / rw, np.ones_like(rw)])
    coef, *_ = np.linalg.lstsq(a, yw, rcond=None)
    resid = np.linalg.norm(a @ coef - yw)
    scale = max(np.linalg.norm(yw), 1e-300)
    rel = float(resid / scale)
    flags = ["non_asymptotic"] if rel > residual_tol else []
    return BoundaryFit(float(coef[0]), float(coef[1]), rel, (float(lo), float(hi)), flags)


def _resonance_quadrature_grid(potential: BasePotential, law: ScalingLaw, n: int) -> RadialGrid:
    # Q(z) only sees the potential support; resolve it with a linear grid.
    r_cut = support_radius(potential, law)
    return build_grid(n, r_cut, "linear")


def find_resonance_coupling(
    potential: BasePotential,
    law: ScalingLaw,
    bracket: tuple = (0.1, 50.0),
    n: int = 800,
    m: float = 0.5,
    z_min: float = Z_FLOOR,
    eval_r_max: float = 80.0,
    eval_n: int = 600,
    rel_tol: float = 1e-6,
) -> ResonanceReport:
    """Locate the critical coupling by bisection on the top BS eigenvalue.

    The scaled family eps^(-p) lam V(r/eps) is resonant when the top
    eigenvalue of Q(z -> 0+) equals 1.  The report carries the zero-energy
    profile reconstructed from the top eigenvector, normalized to <V,psi> = 1,
    and its boundary coefficients (C, D).
    """
    if law.d != 3:
        raise ValueError("resonance detection is implemented for d=3")
    lo, hi = float(bracket[0]), float(bracket[1])
    if not 0.0 < lo < hi:
        raise ValueError("bracket must satisfy 0 < lo < hi")
    grid = _resonance_quadrature_grid(potential, law, n)
    unit = ScaledPotential(BasePotential(potential.profile, 1.0, potential.range), law)
    v_unit = unit.on_grid(grid)

    z_ladder = np.array([z_min, 2.0 * z_min, 4.0 * z_min])
    tops = []
    top_vec = None
    for z in z_ladder:
        q = bs_operator(v_unit, z, 3, m, resolvent="exact")
        vals, vecs = eigh(q.entries)
        tops.append(vals[-1])
        if z == z_min:
            top_vec = vecs[:, -1]
            gap_ok = vals[-2] / vals[-1] < 1.0 - 1e-6 if q.n >= 2 else True
    q_unit = extrapolate_to_zero(z_ladder, np.array(tops), sqrt_basis=True)

    flags = [] if gap_ok else ["non_simple_top_eigenvalue"]
    f = lambda lam: lam * q_unit - 1.0
    f_lo, f_hi = f(lo), f(hi)
    if f_lo * f_hi > 0.0:
        raise ValueError(
            f"no sign change of top BS eigenvalue - 1 in bracket ({lo:g}, {hi:g}): "
            f"f(lo)={f_lo:.3e}, f(hi)={f_hi:.3e}"
        )
    while (hi - lo) > rel_tol * hi:
        mid = 0.5 * (lo + hi)
        if f(lo) * f(mid) <= 0.0:
            hi = mid
        else:
            lo = mid
    lam_c = 0.5 * (lo + hi)

    # Reconstruct u = R0(z_min) sqrt(V) phi on an extended grid, psi = u / r.
    eval_grid = build_grid(eval_n, eval_r_max, "logarithmic", r_min=grid.nodes[0])
    src = np.sqrt(lam_c * v_unit.values) * (top_vec / np.sqrt(grid.weights)) * grid.weights
    kern = radial_green_kernel(3, z_min, eval_grid.nodes[:, None], grid.nodes[None, :], m)
    u = kern @ src
    psi = u / eval_grid.nodes
    norm = 4.0 * np.pi * eval_grid.integrate(lam_c * unit(eval_grid.nodes) * psi * eval_grid.nodes**2)
    psi = psi / norm
    profile = GridFunction(eval_grid, psi)
    fit = boundary_fit(profile, support_radius(potential, law))
    return ResonanceReport(
        lambda_critical=lam_c,
        bs_top_eigenvalue=lam_c * q_unit,
        boundary_C=fit.C,
        boundary_D=fit.D,
        resonance_profile=profile,
        fit_residual=fit.residual,
        flags=flags + fit.flags,
    )


# ---------------------------------------------------------------------------
# two-resonance 2x2 matrix (two identical particles, each resonant with a third)


@dataclass
class TwoResonanceMatrix:
    """2x2 Birman-Schwinger reduction at spectral parameter z.

    Diagonal entries are the channel deficits q_top(z) - 1 of the two-body
    subsystems (vanishing at z -> 0 when each channel is critical); the
    off-diagonal entries are the cross-channel overlaps through the product
    free resolvent, which stay finite because there is no three-body
    resonance.
    """

    z: float
    diagonal: float
    off_diagonal: float

    @property
    def entries(self) -> np.ndarray:
        return np.array([[self.diagonal, self.off_diagonal], [self.off_diagonal, self.diagonal]])

    @property
    def determinant(self) -> float:
        return self.diagonal**2 - self.off_diagonal**2

    def solve_by_iteration(self, b: np.ndarray, max_iter: int = 200, tol: float = 1e-12):
        """Solve (I2 - Q2) x = b, inverting the off-diagonal block and
        iterating on the vanishing diagonal deficit.

        With M = I2 - Q2 = D + O, D = diag(-deficit), O the off-diagonal
        part, the iteration x <- O^(-1) (b - D x) contracts at rate
        |deficit| / |off_diagonal|, which is << 1 near z = 0.  Returns the
        solution and the iteration count; raises if the off-diagonal part is
        singular or the iteration does not contract.
        """
        o = self.off_diagonal
        if o == 0.0:
            raise ValueError("off-diagonal entry is zero; iteration undefined")
        dia = -self.diagonal  # entries of D = (1 - q) I
        rate = abs(dia) / abs(o)
        if rate >= 1.0:
            raise ValueError(f"iteration does not contract: |deficit|/|off| = {rate:.3e}")
        o_inv = np.array([[0.0, -1.0 / o], [-1.0 / o, 0.0]])
        x = np.zeros(2)
        for it in range(1, max_iter + 1):
            x_new = o_inv @ (b - dia * x)
            if np.linalg.norm(x_new - x) <= tol * max(np.linalg.norm(x_new), 1e-300):
                return x_new, it
            x = x_new
        raise ValueError("iteration failed to converge")


def _spectator_reduced(grid: RadialGrid) -> np.ndarray:
    # Reduced wave of the constant function 1(y) in d=3 is proportional to r.
    return grid.nodes.copy()


def two_resonance_matrix(
    potential: BasePotential,
    law: ScalingLaw,
    lambda_critical: float,
    z: float,
    grid: RadialGrid,
    m: float = 0.5,
    z_min: float = Z_FLOOR,
) -> TwoResonanceMatrix:
    """Assemble the 2x2 Birman-Schwinger matrix of the two-channel system.

    Both channels live on identical grids with identical potentials.  The
    supplied coupling must make each two-body subsystem resonant (extrapolated
    top BS eigenvalue within RESONANCE_TOL of 1), otherwise the channels are
    flagged as off resonance.
    """
    if z < z_min:
        raise ValueError(f"z={z:g} below the floor z_min={z_min:g}")
    scaled = ScaledPotential(
        BasePotential(potential.profile, lambda_critical * potential.strength, potential.range), law
    )
    qg = _resonance_quadrature_grid(potential, law, 800)
    v = scaled.on_grid(qg)

    ladder = np.array([z_min, 2.0 * z_min, 4.0 * z_min])
    tops = [top_bs_eigenvalue(bs_operator(v, zz, 3, m))[0] for zz in ladder]
    q0 = extrapolate_to_zero(ladder, np.array(tops), sqrt_basis=True)
    if abs(q0 - 1.0) > RESONANCE_TOL:
        raise ValueError(f"channels not at resonance: extrapolated top BS eigenvalue {q0:.6f}")

    diag = top_bs_eigenvalue(bs_operator(v, z, 3, m))[0] - 1.0

    # Cross-channel overlap <sqrt(V) psi_1, R0_prod(z) sqrt(V) psi_2> with
    # psi_1 = psi(x) (x) 1(y), psi_2 mirrored, psi normalized to <V,psi> = 1.
    # In reduced waves: sqrt(V) psi -> sqrt(V) u_psi and 1(y) -> sqrt(4 pi) r.
    kin = discretize_h0(grid, 3, m).entries
    sw = np.sqrt(grid.weights)
    v_on_grid = scaled(grid.nodes)
    u_res = _resonance_direction(scaled, grid, m, z_min)
    psi = u_res / grid.nodes
    norm = 4.0 * np.pi * grid.integrate(v_on_grid * psi * grid.nodes**2)
    a = np.sqrt(v_on_grid) * (u_res / norm) * sw
    chi = np.sqrt(4.0 * np.pi) * _spectator_reduced(grid) * sw
    w1 = np.outer(a, chi)
    w2 = w1.T.copy()

    mu, vec = np.linalg.eigh(kin)
    # R0_prod = (Kx (+) Ky + z)^(-1) applied in the double eigenbasis
    t = vec.T @ w2 @ vec
    t = t / (mu[:, None] + mu[None, :] + z)
    r0w2 = vec @ t @ vec.T
    off = float(np.sum(w1 * r0w2))
    return TwoResonanceMatrix(z=z, diagonal=float(diag), off_diagonal=off)


def _resonance_direction(scaled: ScaledPotential, grid: RadialGrid, m: float, z_min: float) -> np.ndarray:
    """Reduced zero-energy wave u of the resonant channel on the given grid."""
    qg = _resonance_quadrature_grid(scaled.base, scaled.law, 800)
    v = scaled.on_grid(qg)
    q = bs_operator(v, z_min, 3, m)
    _, vecs = eigh(q.entries)
    phi = vecs[:, -1] / np.sqrt(qg.weights)
    src = np.sqrt(v.values) * phi * qg.weights
    kern = radial_green_kernel(3, z_min, grid.nodes[:, None], qg.nodes[None, :], m)
    u = kern @ src
    return u / np.max(np.abs(u))
