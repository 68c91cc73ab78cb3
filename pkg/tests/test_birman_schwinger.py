import numpy as np
import pytest

from zrange.grids import GridFunction, build_grid
from zrange.operators import discretize_h0
from zrange.potentials import BasePotential, ScalingLaw
from zrange.birman_schwinger import (
    bs_count_above_one,
    bs_operator,
    boundary_fit,
    find_resonance_coupling,
    top_bs_eigenvalue,
    two_resonance_matrix,
)
from zrange.konno_kuroda import negative_count_direct

from oracles import shooting_critical_coupling, shoot_exterior_wave

WELL = BasePotential("square_well", 1.0, 1.0)
GAUSS = BasePotential("gaussian", 1.0, 1.0)
UNSCALED = ScalingLaw(None, 1.0, 3)
LAMBDA_C_WELL = np.pi**2 / 4.0


@pytest.fixture(scope="module")
def well_resonance():
    return find_resonance_coupling(WELL, UNSCALED, (1.0, 5.0))


# ---------------------------------------------------------------------------
# bs_operator


def test_zero_potential_gives_zero_matrix():
    g = build_grid(100, 1.0, "linear")
    q = bs_operator(GridFunction(g, np.zeros(100)), 1.0)
    assert np.all(q.entries == 0.0)


def test_negative_potential_rejected():
    g = build_grid(50, 1.0, "linear")
    with pytest.raises(ValueError, match="nonnegative"):
        bs_operator(GridFunction(g, -np.ones(50)), 1.0)


def test_z_floor_enforced():
    g = build_grid(50, 1.0, "linear")
    with pytest.raises(ValueError, match="floor"):
        bs_operator(GridFunction(g, np.ones(50)), 1e-9)


def test_top_eigenvalue_linear_in_coupling():
    g = build_grid(300, 1.0, "linear")
    v1 = GridFunction(g, WELL(g.nodes))
    v2 = GridFunction(g, 2.0 * WELL(g.nodes))
    t1 = top_bs_eigenvalue(bs_operator(v1, 1e-6))[0]
    t2 = top_bs_eigenvalue(bs_operator(v2, 1e-6))[0]
    assert t2 == pytest.approx(2.0 * t1, rel=1e-12)


def test_square_well_top_eigenvalue_matches_critical_coupling():
    # at lam = 1 and z -> 0 the top eigenvalue is 1/lambda_c = 4/pi^2
    g = build_grid(800, 1.0, "linear")
    v = GridFunction(g, WELL(g.nodes))
    top = top_bs_eigenvalue(bs_operator(v, 1e-8))[0]
    assert top == pytest.approx(4.0 / np.pi**2, rel=1e-3)


def test_top_eigenvalue_nonincreasing_in_z():
    g = build_grid(300, 1.0, "linear")
    v = GridFunction(g, 3.0 * WELL(g.nodes))
    tops = [top_bs_eigenvalue(bs_operator(v, z))[0] for z in (1e-6, 0.1, 1.0, 10.0)]
    assert np.all(np.diff(tops) < 0)


def test_birman_schwinger_principle_exact_counts():
    # counts of BS eigenvalues > 1 match negative eigenvalues of H0 - V
    # exactly, on the same boxed discretization (range-2 wells give several
    # bound states inside the sampled coupling window)
    g = build_grid(400, 12.0, "linear")
    h0 = discretize_h0(g, 3, 0.5)
    rng = np.random.default_rng(7)
    for prof in ("square_well", "gaussian"):
        pot = BasePotential(prof, 1.0, 2.0)
        for lam in rng.uniform(0.5, 10.0, 10):
            v = GridFunction(g, lam * pot(g.nodes))
            q = bs_operator(v, 1e-8, resolvent="grid", h0=h0)
            assert bs_count_above_one(q) == negative_count_direct(h0, v)


# ---------------------------------------------------------------------------
# find_resonance_coupling


def test_square_well_critical_coupling_analytic(well_resonance):
    assert well_resonance.lambda_critical == pytest.approx(LAMBDA_C_WELL, rel=1e-4)
    assert well_resonance.bs_top_eigenvalue == pytest.approx(1.0, abs=1e-5)


def test_square_well_critical_coupling_shooting_oracle(well_resonance):
    oracle = shooting_critical_coupling(WELL, 1.0)
    assert well_resonance.lambda_critical == pytest.approx(oracle, rel=1e-4)


def test_gaussian_cross_oracle_agreement():
    rep = find_resonance_coupling(GAUSS, UNSCALED, (1.0, 5.0))
    oracle = shooting_critical_coupling(GAUSS, 5.8)
    assert rep.lambda_critical == pytest.approx(oracle, rel=1e-4)


def test_half_critical_coupling_gives_half_top_eigenvalue(well_resonance):
    g = build_grid(800, 1.0, "linear")
    lam = well_resonance.lambda_critical / 2.0
    v = GridFunction(g, lam * WELL(g.nodes))
    top = top_bs_eigenvalue(bs_operator(v, 1e-8))[0]
    assert top == pytest.approx(0.5, rel=1e-4)


def test_no_sign_change_in_bracket_rejected():
    with pytest.raises(ValueError, match="no sign change"):
        find_resonance_coupling(WELL, UNSCALED, (0.1, 0.2))


def test_resonance_profile_normalized(well_resonance):
    psi = well_resonance.resonance_profile
    g = psi.grid
    v = well_resonance.lambda_critical * WELL(g.nodes)
    pairing = 4.0 * np.pi * g.integrate(v * psi.values * g.nodes**2)
    assert pairing == pytest.approx(1.0, rel=1e-10)


# ---------------------------------------------------------------------------
# boundary_fit


def test_boundary_fit_recovers_synthetic_model():
    g = build_grid(400, 40.0, "logarithmic", r_min=1e-2)
    psi = GridFunction(g, 3.0 / g.nodes + 2.0)
    fit = boundary_fit(psi, 1.0)
    assert fit.C == pytest.approx(3.0, abs=1e-10)
    assert fit.D == pytest.approx(2.0, abs=1e-10)
    assert fit.residual < 1e-12


def test_boundary_fit_free_regular_solution_has_no_pole():
    # u = r means psi = const: a regular solution carries C = 0
    g = build_grid(400, 40.0, "logarithmic", r_min=1e-2)
    psi = GridFunction(g, np.full(g.n, 1.7))
    fit = boundary_fit(psi, 1.0)
    assert abs(fit.C) < 1e-10
    assert fit.D == pytest.approx(1.7, abs=1e-10)


def test_boundary_fit_scale_invariance():
    # fitting psi(s r) returns (C/s, D)
    g = build_grid(300, 60.0, "logarithmic", r_min=1e-2)
    s = 2.5
    psi_scaled = GridFunction(g, 3.0 / (s * g.nodes) + 2.0)
    fit = boundary_fit(psi_scaled, 1.0)
    assert fit.C == pytest.approx(3.0 / s, rel=1e-8)
    assert fit.D == pytest.approx(2.0, rel=1e-8)


def test_boundary_fit_window_too_small():
    g = build_grid(50, 4.0, "linear")
    psi = GridFunction(g, 1.0 / g.nodes)
    with pytest.raises(ValueError, match="window"):
        boundary_fit(psi, 1.5)


def test_boundary_fit_flags_non_asymptotic_profile():
    g = build_grid(300, 40.0, "logarithmic", r_min=1e-2)
    psi = GridFunction(g, np.exp(-g.nodes))  # not of the C/r + D form
    fit = boundary_fit(psi, 1.0)
    assert "non_asymptotic" in fit.flags


def test_resonance_has_pure_pole_boundary(well_resonance):
    # D = 0 and C != 0 at exact resonance; shooting oracle confirms the
    # exterior wave u = C + D r carries D -> 0 there
    assert well_resonance.boundary_C != 0.0
    assert abs(well_resonance.boundary_D / well_resonance.boundary_C) < 1e-3
    c_or, d_or = shoot_exterior_wave(WELL, LAMBDA_C_WELL, 1.0)
    assert abs(d_or) < 1e-6 * abs(c_or)


def test_regular_addition_shifts_d_not_c(well_resonance):
    # adding a weak unscaled regular potential moves D off zero while C
    # stays within the 1e-3 fit tolerance (boundary-coefficient version of
    # the separation of contact and regular contributions)
    lam = well_resonance.lambda_critical

    def family(s):
        return lambda r: lam * WELL(r) + s * np.exp(-((r / 2.0) ** 2))

    # same integrator and domain for both, so the edge-step bias of the
    # discontinuous well cancels in the differences
    c0, d0 = shoot_exterior_wave(family(0.0), 1.0, 12.0, two_m=1.0)
    c1, d1 = shoot_exterior_wave(family(3e-4), 1.0, 12.0, two_m=1.0)
    assert abs(d1 - d0) > 2e-4  # D shifted off its resonance value
    assert abs(c1 - c0) / abs(c0) < 1e-3  # C drift below fit tolerance


# ---------------------------------------------------------------------------
# two_resonance_matrix


@pytest.fixture(scope="module")
def two_res(well_resonance):
    grid = build_grid(56, 30.0, "logarithmic", r_min=1e-3)
    lam = well_resonance.lambda_critical

    def at(z):
        return two_resonance_matrix(WELL, UNSCALED, lam, z, grid)

    return at


def test_two_resonance_diagonal_vanishes_with_positive_slope(two_res):
    zs = np.array([1e-8 * 4**k for k in range(4)])
    diags = np.array([abs(two_res(z).diagonal) for z in zs])
    assert np.all(np.diff(diags) > 0)  # |diag| grows with z, so it -> 0 at 0
    slope = np.polyfit(np.log(zs), np.log(diags), 1)[0]
    assert slope > 0.4


def test_two_resonance_off_diagonal_bounded_away_from_zero(two_res):
    m = two_res(1e-8)
    assert abs(m.off_diagonal) > 100.0 * abs(m.diagonal)
    assert m.determinant != 0.0


def test_two_resonance_iteration_converges(two_res):
    m = two_res(1e-8)
    rng = np.random.default_rng(0)
    one_minus_q2 = -m.entries  # deficit form: 1 - Q2 has -diag on the diagonal
    for _ in range(3):
        b = rng.standard_normal(2)
        x, its = m.solve_by_iteration(b)
        assert np.allclose(x, np.linalg.solve(one_minus_q2, b), rtol=1e-9)
        assert its < 50


def test_two_resonance_requires_critical_coupling():
    grid = build_grid(48, 30.0, "logarithmic", r_min=1e-3)
    with pytest.raises(ValueError, match="not at resonance"):
        two_resonance_matrix(WELL, UNSCALED, 1.0, 1e-8, grid)
