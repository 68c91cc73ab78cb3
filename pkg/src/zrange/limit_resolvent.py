"""Zero-range limit of the two-channel resolvent on a product grid.

Setting: two identical particles, each feeling the same short-range
attractive potential of a third one, in the weak-contact regime (d=3, p=2)
with the two-body subsystem at its zero-energy resonance.  In the coordinates
x = x1 - x3, y = x2 - x3 the free operator of the equal-mass system,
restricted to the s (x) s sector, is Kx + Ky (the cross-gradient term maps
out of the sector, so its in-sector block vanishes; a radial surrogate is
kept in ScaledFreeHamiltonian to exhibit the scaling structure).

Everything acts on weight-scaled reduced waves U(r_x, r_y) flattened in C
order; the reduction conventions are those of operators.py, with the d=3
pairing <f, g> = 4 pi int f g r^2 dr.

The epsilon -> 0 limit of (H_eps + z)^(-1) - (H0 + z)^(-1) is the rank-
structured two-channel operator W(z): each channel applies the free
resolvent to sources concentrated on its contact line x = 0 (or y = 0),
with the resonance projector and the denominator sqrt(z)/(4 pi)
|<sqrt(V) psi>|^2.  The resonance normalization <V, psi> = 1 makes the
construction well posed, and the <sqrt(V) psi> factors cancel between
numerator and denominator, as they must for a universal limit.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh

from .grids import GridFunction, RadialGrid
from .operators import OperatorMatrix, discretize_h0
from .potentials import BasePotential, ScaledPotential, ScalingLaw

DIM_CAP = 10_000
SUPPORT_FLOOR = 1e-14


@dataclass(frozen=True)
class ProductGrid:
    """Tensor product of two radial grids, x factor fastest-varying last."""

    gx: RadialGrid
    gy: RadialGrid

    @property
    def n(self) -> int:
        return self.gx.n * self.gy.n

    def flatten(self, f_xy: np.ndarray) -> np.ndarray:
        return np.asarray(f_xy, dtype=float).reshape(self.n)

    def unflatten(self, v: np.ndarray) -> np.ndarray:
        return np.asarray(v, dtype=float).reshape(self.gx.n, self.gy.n)


# ---------------------------------------------------------------------------
# partially scaled free Hamiltonian (one contact coordinate blown up)


def _radial_derivative(grid: RadialGrid) -> np.ndarray:
    """Antisymmetric centered first derivative in the weight-scaled basis."""
    r = grid.nodes
    n = grid.n
    d = np.zeros((n, n))
    for i in range(n):
        lo = max(i - 1, 0)
        hi = min(i + 1, n - 1)
        span = r[hi] - r[lo]
        if span > 0.0:
            d[i, lo] -= 1.0 / span
            d[i, hi] += 1.0 / span
    sw = np.sqrt(grid.weights)
    dt = d * np.outer(sw, 1.0 / sw)
    return 0.5 * (dt - dt.T)


@dataclass
class ScaledFreeHamiltonian:
    """Blocks of eps^2 (U_eps)^* (H0 + .) U_eps on a product grid.

    After the overall 1/eps^2 is factored out, the x kinetic block enters at
    order 1, the y kinetic block at eps^2, and the cross-gradient block at
    eps.  The mass m is the third particle's; the identical pair has unit
    masses, so both kinetic blocks carry (m+1)/(2m).  The strict s (x) s
    projection of the cross gradient is zero; `cross="surrogate"` installs
    the antisymmetrized radial-derivative product instead so the epsilon
    scaling of the block remains observable.
    """

    epsilon: float
    m: float
    grid: ProductGrid
    x_block: np.ndarray = field(repr=False)
    y_block: np.ndarray = field(repr=False)
    cross_block: np.ndarray = field(repr=False)

    def assembled(self) -> OperatorMatrix:
        eps = self.epsilon
        mat = self.x_block + eps**2 * self.y_block + eps * self.cross_block
        return OperatorMatrix(0.5 * (mat + mat.T), self.grid, self.m, label=f"H0_scaled(eps={eps:g})")


def scaled_h0(
    epsilon: float,
    m: float,
    grid_x: RadialGrid,
    grid_y: RadialGrid,
    cross: str = "surrogate",
    dim_cap: int = DIM_CAP,
) -> ScaledFreeHamiltonian:
    """Partially x-scaled free Hamiltonian with its three epsilon blocks."""
    if not 0.0 < epsilon <= 1.0:
        raise ValueError("epsilon must lie in (0, 1]")
    if m <= 0.0:
        raise ValueError("third-particle mass must be positive")
    grid = ProductGrid(grid_x, grid_y)
    if grid.n > dim_cap:
        raise ValueError(f"product dimension {grid.n} exceeds cap {dim_cap}")
    a = (m + 1.0) / (2.0 * m)
    lap_x = discretize_h0(grid_x, 3, 0.5).entries  # pure -Lap, s-wave
    lap_y = discretize_h0(grid_y, 3, 0.5).entries
    ix = np.eye(grid_x.n)
    iy = np.eye(grid_y.n)
    x_block = a * np.kron(lap_x, iy)
    y_block = a * np.kron(ix, lap_y)
    if cross == "surrogate":
        dx = _radial_derivative(grid_x)
        dy = _radial_derivative(grid_y)
        cross_block = -(1.0 / m) * np.kron(dx, dy)
    elif cross == "zero":
        cross_block = np.zeros((grid.n, grid.n))
    else:
        raise ValueError("cross must be 'surrogate' or 'zero'")
    return ScaledFreeHamiltonian(epsilon, m, grid, x_block, y_block, cross_block)


# ---------------------------------------------------------------------------
# separable free resolvent on the product grid (s (x) s sector)


class ProductFreeResolvent:
    """(a Kx (+) a Ky + z)^(-1) through the single-coordinate eigenbases."""

    def __init__(self, grid: ProductGrid, m: float = 1.0):
        self.grid = grid
        self.a = (m + 1.0) / (2.0 * m)
        lap_x = discretize_h0(grid.gx, 3, 0.5).entries
        lap_y = discretize_h0(grid.gy, 3, 0.5).entries
        self.mu_x, self.qx = np.linalg.eigh(self.a * lap_x)
        self.mu_y, self.qy = np.linalg.eigh(self.a * lap_y)

    def denom(self, z: float) -> np.ndarray:
        return self.mu_x[:, None] + self.mu_y[None, :] + z

    def apply(self, z: float, f: np.ndarray) -> np.ndarray:
        """R0(z) f for a flattened product vector (or a batch, last axis)."""
        g = self.grid
        single = f.ndim == 1
        fs = f.reshape(g.gx.n, g.gy.n, -1)
        t = np.einsum("ki,ijb->kjb", self.qx.T, fs)
        t = np.einsum("lj,kjb->klb", self.qy.T, t)
        t /= self.denom(z)[:, :, None]
        t = np.einsum("ik,klb->ilb", self.qx, t)
        out = np.einsum("jl,ilb->ijb", self.qy, t)
        out = out.reshape(g.n, -1)
        return out[:, 0] if single else out

    def block(self, z: float, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
        """Dense R0(z) sub-block for flattened index sets rows x cols."""
        g = self.grid
        ny = g.gy.n
        ci, cj = np.divmod(cols, ny)
        d = self.denom(z)
        out = np.empty((rows.size, cols.size))
        chunk = max(1, int(2e6 // g.n))
        ri, rj = np.divmod(rows, ny)
        for s in range(0, cols.size, chunk):
            e = min(s + chunk, cols.size)
            t = self.qx[ci[s:e], :, None] * self.qy[cj[s:e], None, :]
            t = t / d[None, :, :]
            cols_full = np.einsum("ik,xkl,jl->xij", self.qx, t, self.qy, optimize=True)
            out[:, s:e] = cols_full[:, ri, rj].T
        return out


# ---------------------------------------------------------------------------
# the limit operator W(z)


@dataclass
class LimitResolvent:
    """Two-channel rank-structured limit of R(z) - R0(z).

    channel1 = A (|psi><psi| / denominator (x) I_y) C with A, C built from
    the product-grid G_z and sqrt(V); channel2 is the mirror image.  The
    stored factors L1, L2 satisfy W = coeff (L1 L1^T + L2 L2^T).
    """

    z: float
    grid: ProductGrid
    denominator_constant: float
    coeff: float
    l1: np.ndarray = field(repr=False)
    l2: np.ndarray = field(repr=False)

    def apply(self, f: np.ndarray) -> np.ndarray:
        out = self.l1 @ (self.l1.T @ f)
        out += self.l2 @ (self.l2.T @ f)
        return self.coeff * out

    def matrix(self) -> np.ndarray:
        w = self.l1 @ self.l1.T + self.l2 @ self.l2.T
        return self.coeff * w

    @property
    def numerical_rank_bound(self) -> int:
        return self.l1.shape[1] + self.l2.shape[1]


def _line_source_scale(grid: RadialGrid) -> float:
    # Weight-scaled amplitude of the reduced delta line at x = 0: pairing
    # <delta^3 (x) g, F> = (1/sqrt(4 pi)) int g dU/dr_x(0, .) dr_y with
    # dU/dr_x(0) ~ U(r_1)/r_1 under the Dirichlet reduced wave.
    return 1.0 / (np.sqrt(4.0 * np.pi) * grid.nodes[0] * np.sqrt(grid.weights[0]))


def limit_w(
    z: float,
    psi: GridFunction,
    v_scaled: ScaledPotential,
    grid: ProductGrid,
    m: float = 1.0,
    resolvent: ProductFreeResolvent | None = None,
) -> LimitResolvent:
    """Assemble the two-channel limit operator W(z) from G_z and sqrt(V).

    psi is the two-body resonance profile on grid.gx, normalized so that
    <V, psi> = 4 pi int V psi r^2 dr = 1.  The channel factor is
    R0(z) applied to delta-line columns; the resonance enters through the
    projector and the denominator (sqrt(z)/4 pi) |<sqrt(V) psi>|^2, whose
    psi dependence cancels exactly in the assembled operator.
    """
    if z <= 0.0:
        raise ValueError("z must be positive")
    gx, gy = grid.gx, grid.gy
    if psi.grid is not gx and not np.array_equal(psi.grid.nodes, gx.nodes):
        raise ValueError("psi must live on the x grid")
    v_vals = v_scaled(gx.nodes)
    pairing = 4.0 * np.pi * gx.integrate(v_vals * psi.values * gx.nodes**2)
    if abs(pairing - 1.0) > 1e-6:
        raise ValueError(f"resonance not normalized: <V, psi> = {pairing:.8f}, expected 1")
    # reduced <sqrt(V) psi> = sqrt(4 pi) int sqrt(V) u r dr, u = sqrt(4pi) r psi
    v_row = np.sqrt(4.0 * np.pi) * np.sqrt(v_vals) * gx.nodes * np.sqrt(gx.weights)
    psi_tilde = np.sqrt(4.0 * np.pi) * gx.nodes * psi.values * np.sqrt(gx.weights)
    overlap = float(v_row @ psi_tilde)
    if abs(overlap) < 1e-12:
        raise ValueError("degenerate denominator: <sqrt(V) psi> below 1e-12")
    den = (np.sqrt(z) / (4.0 * np.pi)) * overlap**2

    res = resolvent if resolvent is not None else ProductFreeResolvent(grid, m)
    nx, ny = gx.n, gy.n
    cx = _line_source_scale(gx)
    cy = _line_source_scale(gy)
    # channel 1: sources on the x = 0 line, one column per y node
    src1 = np.zeros((grid.n, ny))
    src1[np.arange(ny), np.arange(ny)] = cx  # flattened (0, j) = j
    l1 = res.apply(z, src1)
    # channel 2: sources on the y = 0 line
    src2 = np.zeros((grid.n, nx))
    src2[np.arange(nx) * ny, np.arange(nx)] = cy
    l2 = res.apply(z, src2)
    # A (P/den (x) I) C = (overlap^2 / den) L L^T per channel
    coeff = overlap**2 / den  # = 4 pi / sqrt(z), psi dependence cancels
    return LimitResolvent(z, grid, float(den), float(coeff), l1, l2)


# ---------------------------------------------------------------------------
# finite-epsilon assembly (four-term structure) and the convergence study


@dataclass
class FiniteEpsilonResolvent:
    """W_eps(z) = (H_eps + z)^(-1) - (H0 + z)^(-1) in factored form."""

    z: float
    epsilon: float
    coupling: float
    grid: ProductGrid
    support: np.ndarray = field(repr=False)
    b_support: np.ndarray = field(repr=False)
    kernel_lu: tuple = field(repr=False)
    resolvent: ProductFreeResolvent = field(repr=False)
    split_outer: tuple | None = field(default=None, repr=False)
    top_q: float = float("nan")

    def apply(self, f: np.ndarray, four_term: bool = False) -> np.ndarray:
        """W_eps(z) f; four_term=True uses the split outer factors
        sqrt(V(x)) + sqrt(V(y)) of the four-term decomposition instead of
        B = sqrt(V(x) + V(y)) (they differ by the O(eps^3) overlap defect)."""
        from scipy.linalg import lu_solve

        r0f = self.resolvent.apply(self.z, f)
        outer = self.split_outer[0] if (four_term and self.split_outer) else self.b_support
        u = outer * r0f[self.support]
        g = lu_solve(self.kernel_lu, u)
        src = np.zeros_like(f)
        src[self.support] = outer * g
        return self.resolvent.apply(self.z, src)

    def resolvent_apply(self, f: np.ndarray) -> np.ndarray:
        """(H_eps + z)^(-1) f = R0 f + W_eps f."""
        return self.resolvent.apply(self.z, f) + self.apply(f)


def assemble_w_eps(
    z: float,
    v_scaled: ScaledPotential,
    grid: ProductGrid,
    m: float = 1.0,
    resolvent: ProductFreeResolvent | None = None,
) -> FiniteEpsilonResolvent:
    """Konno-Kuroda assembly of W_eps(z) on the product grid.

    B = sqrt(V_eps(x) + V_eps(y)) is diagonal and supported on the L-shaped
    region where either potential is alive; (1 - B R0 B)^(-1) is factored
    there.  The four-term split of the outer factors (sqrt(V(x)) +
    sqrt(V(y)) instead of B) is available through apply(four_term=True).
    """
    from scipy.linalg import lu_factor

    res = resolvent if resolvent is not None else ProductFreeResolvent(grid, m)
    gx, gy = grid.gx, grid.gy
    vx = v_scaled(gx.nodes)
    vy = v_scaled(gy.nodes)
    v_sum = vx[:, None] + vy[None, :]
    floor = SUPPORT_FLOOR * v_sum.max()
    support = np.flatnonzero(grid.flatten(v_sum) > floor)
    if support.size == 0:
        raise ValueError("potential vanishes on the product grid")
    b_sup = np.sqrt(grid.flatten(v_sum)[support])
    split = np.sqrt(vx)[:, None] + np.sqrt(vy)[None, :]
    split_sup = grid.flatten(split)[support]
    r0_block = res.block(z, support, support)
    q = r0_block * np.outer(b_sup, b_sup)
    q = 0.5 * (q + q.T)
    top_q = float(eigh(q, eigvals_only=True, subset_by_index=[support.size - 1, support.size - 1])[0])
    if top_q >= 1.0:
        raise ValueError(
            f"1 - Q(z={z:g}) not invertible at eps={v_scaled.law.epsilon:g}: "
            f"top eigenvalue {top_q:.6f} (three-body level below -z)"
        )
    lu = lu_factor(np.eye(support.size) - q)
    return FiniteEpsilonResolvent(
        z=z,
        epsilon=v_scaled.law.epsilon,
        coupling=v_scaled.base.strength,
        grid=grid,
        support=support,
        b_support=b_sup,
        kernel_lu=lu,
        resolvent=res,
        split_outer=(split_sup,),
        top_q=top_q,
    )


def channel_mass(m: float) -> float:
    """Reduced mass of one two-body channel when the third particle has mass m."""
    return m / (m + 1.0)


def _sampled_top_bs(v_sample: np.ndarray, grid: RadialGrid, m_ch: float, zeta: float):
    from .operators import green_kernel_matrix

    sup = np.flatnonzero(v_sample > SUPPORT_FLOOR * v_sample.max())
    gm = green_kernel_matrix(grid, 3, zeta, m_ch).entries
    b = np.sqrt(v_sample[sup])
    q = gm[np.ix_(sup, sup)] * np.outer(b, b)
    top = eigh(0.5 * (q + q.T), eigvals_only=True, subset_by_index=[sup.size - 1, sup.size - 1])[0]
    return float(top), sup, q


def sampled_resonance(
    v_unit_sample: np.ndarray, grid: RadialGrid, m_ch: float = 0.5
) -> tuple:
    """Critical coupling and resonance profile of a node-sampled potential.

    Works with the whole-space Green kernel on the sampled values, so the
    calibration matches exactly what a product-grid assembly of the same
    samples sees; this is what keeps an epsilon ladder on resonance when the
    scaled well is carried by a handful of log nodes.
    """
    from .birman_schwinger import extrapolate_to_zero
    from .operators import radial_green_kernel

    ladder = np.array([1e-8, 2e-8, 4e-8])
    tops = []
    for zeta in ladder:
        top, sup, q = _sampled_top_bs(v_unit_sample, grid, m_ch, zeta)
        tops.append(top)
    lam = 1.0 / extrapolate_to_zero(ladder, np.array(tops), sqrt_basis=True)
    # zero-energy profile from the top eigenvector at the ladder floor
    _, _, q = _sampled_top_bs(v_unit_sample, grid, m_ch, ladder[0])
    _, vecs = eigh(q)
    phi = vecs[:, -1]
    sup = np.flatnonzero(v_unit_sample > SUPPORT_FLOOR * v_unit_sample.max())
    src = np.zeros(grid.n)
    src[sup] = np.sqrt(lam * v_unit_sample[sup]) * (phi / np.sqrt(grid.weights[sup])) * grid.weights[sup]
    kern = radial_green_kernel(3, ladder[0], grid.nodes[:, None], grid.nodes[None, :], m_ch)
    u = kern @ src
    psi = u / grid.nodes
    norm = 4.0 * np.pi * grid.integrate(lam * v_unit_sample * psi * grid.nodes**2)
    return float(lam), GridFunction(grid, psi / norm)


def calibrate_couplings(
    potential: BasePotential,
    eps_list,
    grid_x: RadialGrid,
    m: float = 1.0,
) -> dict:
    """Critical coupling of the node-sampled scaled channel at each epsilon.

    The p=2 scaling preserves the zero-energy resonance exactly in the
    continuum; per-rung recalibration on the sampled values removes the
    residual discretization detuning, which would otherwise dominate the
    distance to the limit operator.
    """
    m_ch = channel_mass(m)
    out = {}
    for eps in eps_list:
        law = ScalingLaw(2, float(eps), 3)
        v_unit = ScaledPotential(potential, law)(grid_x.nodes)
        lam, _ = sampled_resonance(v_unit, grid_x, m_ch)
        out[float(eps)] = lam * potential.strength
    return out


@dataclass
class ConvergenceReport:
    epsilons: np.ndarray
    discrepancies: np.ndarray  # (n_eps, n_test): ||W_eps f - W f|| / ||f||
    monotone: bool
    reduction_factors: np.ndarray
    couplings: dict = field(default_factory=dict)


def convergence_study(
    z: float,
    potential: BasePotential,
    eps_list,
    grid: ProductGrid,
    test_functions: np.ndarray,
    m: float = 1.0,
    couplings: dict | None = None,
) -> ConvergenceReport:
    """Strong-convergence test of W_eps(z) toward the limit operator W(z).

    Each rung of the decreasing epsilon ladder is assembled at its own
    critical coupling, so the two-body channel stays exactly resonant; the
    limit W(z) is built from the resonance profile of the smallest rung.
    Reported discrepancies are ||W_eps(z) f - W(z) f|| / ||f|| per test
    function.
    """
    eps_list = np.asarray(list(eps_list), dtype=float)
    if np.any(np.diff(eps_list) >= 0.0):
        raise ValueError("epsilon ladder must be strictly decreasing")
    if couplings is None:
        couplings = calibrate_couplings(potential, eps_list, grid.gx, m)
    res = ProductFreeResolvent(grid, m)
    eps_ref = float(eps_list[-1])
    law_ref = ScalingLaw(2, eps_ref, 3)
    _, psi = sampled_resonance(ScaledPotential(potential, law_ref)(grid.gx.nodes), grid.gx, channel_mass(m))
    v_ref = ScaledPotential(
        BasePotential(potential.profile, couplings[eps_ref] * potential.strength, potential.range), law_ref
    )
    w_model = limit_w(z, psi, v_ref, grid, m, resolvent=res)
    fs = np.atleast_2d(np.asarray(test_functions, dtype=float))
    discrepancies = np.empty((eps_list.size, fs.shape[0]))
    for k, eps in enumerate(eps_list):
        lam = couplings[float(eps)]
        scaled = ScaledPotential(
            BasePotential(potential.profile, lam * potential.strength, potential.range),
            ScalingLaw(2, eps, 3),
        )
        w_eps = assemble_w_eps(z, scaled, grid, m, resolvent=res)
        for j, f in enumerate(fs):
            discrepancies[k, j] = np.linalg.norm(w_eps.apply(f) - w_model.apply(f)) / np.linalg.norm(f)
    monotone = bool(np.all(np.diff(discrepancies, axis=0) < 0.0))
    reduction = discrepancies[0] / discrepancies[-1]
    return ConvergenceReport(eps_list, discrepancies, monotone, reduction, couplings)


# ---------------------------------------------------------------------------
# resolvent identity of the limit operator


@dataclass
class IdentityReport:
    residuals: np.ndarray
    quad_form_residuals: np.ndarray
    max_residual: float


def verify_limit_identity(
    w: LimitResolvent,
    h_plus_z_apply,
    z: float,
    test_functions: np.ndarray,
    resolvent: ProductFreeResolvent | None = None,
    dense_set: np.ndarray | None = None,
) -> IdentityReport:
    """Residual of ((H0 + z)^(-1) + W(z)) (H + z) f = f on test functions.

    h_plus_z_apply maps a flattened vector to (H + z) times it; at desk scale
    H is the epsilon-extrapolated finite Hamiltonian, supplied operationally
    as the inverse of the extrapolated resolvent.  Residuals are reported in
    vector norm and, when a dense set of probe vectors is supplied, as
    quadratic forms |<g, (S_z (H+z) - 1) f>| / (|g| |f|).
    """
    res = resolvent if resolvent is not None else ProductFreeResolvent(w.grid, 1.0)
    fs = np.atleast_2d(np.asarray(test_functions, dtype=float))
    residuals = np.empty(fs.shape[0])
    quad = []
    for j, f in enumerate(fs):
        hf = h_plus_z_apply(f)
        sf = res.apply(z, hf) + w.apply(hf)
        r = sf - f
        residuals[j] = np.linalg.norm(r) / np.linalg.norm(f)
        if dense_set is not None:
            gs = np.atleast_2d(dense_set)
            vals = np.abs(gs @ r) / (np.linalg.norm(gs, axis=1) * np.linalg.norm(f))
            quad.append(float(vals.max()))
    quad_arr = np.array(quad) if quad else np.full(fs.shape[0], np.nan)
    return IdentityReport(residuals, quad_arr, float(residuals.max()))


def richardson_vector(eps_list: np.ndarray, vectors: np.ndarray, order: int = 2) -> np.ndarray:
    """Least-squares Richardson extrapolation of an eps-indexed vector family.

    Fits each component on the basis {1, eps, ..., eps^order} and returns the
    eps -> 0 values.
    """
    eps_list = np.asarray(eps_list, dtype=float)
    basis = np.column_stack([eps_list**k for k in range(order + 1)])
    coef, *_ = np.linalg.lstsq(basis, vectors, rcond=None)
    return coef[0]
