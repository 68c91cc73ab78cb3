import numpy as np
import pytest
from scipy.linalg import eigh

from zrange.grids import build_grid
from zrange.operators import SpectrumReport
from zrange.efimov import (
    effective_operator,
    find_thresholds,
    geometric_ratio,
    hyperradial_reduce,
    kernel22,
    mass_sweep_2d,
    operator_spectrum,
)


@pytest.fixture(scope="module")
def log_grid():
    return build_grid(400, 2e2, "logarithmic", r_min=1e-4)


@pytest.fixture(scope="module")
def thresholds_d3():
    return find_thresholds("contact_image", 3, (0.1, 2.5), n=250)


# ---------------------------------------------------------------------------
# effective_operator


def test_free_operator_positive(log_grid):
    op = effective_operator("contact_image", 0.0, 3, log_grid)
    low = eigh(op.matrix.entries, eigvals_only=True, subset_by_index=[0, 0])[0]
    assert low > -1e-10 * np.abs(op.matrix.entries).max()
    with pytest.raises(ValueError, match="nonnegative"):
        effective_operator("contact_image", -1.0, 3, log_grid)


def test_requires_logarithmic_scale_bracketing():
    lin = build_grid(100, 200.0, "linear")
    with pytest.raises(ValueError, match="logarithmic"):
        effective_operator("contact_image", 1.0, 3, lin)
    narrow = build_grid(100, 200.0, "logarithmic", r_min=1e-2)
    with pytest.raises(ValueError, match="bracket"):
        effective_operator("contact_image", 1.0, 3, narrow)


def test_unknown_kind_rejected(log_grid):
    with pytest.raises(ValueError, match="kind"):
        effective_operator("magic", 1.0, 3, log_grid)


def test_contact_image_scale_covariance(log_grid):
    # dilating the grid r -> s r maps every negative eigenvalue to E / s
    s = 10.0
    op = effective_operator("contact_image", 1.5, 3, log_grid)
    dilated_grid = build_grid(400, 2e2 * s, "logarithmic", r_min=1e-4 * s)
    op_s = effective_operator("contact_image", 1.5, 3, dilated_grid)
    e = operator_spectrum(op).eigenvalues
    es = operator_spectrum(op_s).eigenvalues
    neg, negs = e[e < 0], es[es < 0]
    assert neg.size == negs.size
    assert np.allclose(negs, neg / s, rtol=0.01)


def test_weak_image_small_coupling_has_no_bound_state(log_grid):
    op = effective_operator("weak_image", 0.01, 3, log_grid)
    assert operator_spectrum(op).count_negative == 0


def test_weak_image_strong_coupling_binds_finitely(log_grid):
    # the log tail cannot beat sqrt(-Lap) at short distance: count stays
    # finite and refinement-stable
    counts = []
    for r_min in (1e-4, 1e-5):
        g = build_grid(400, 2e2, "logarithmic", r_min=r_min)
        counts.append(operator_spectrum(effective_operator("weak_image", 3.0, 3, g)).count_negative)
    assert counts[0] == counts[1]
    assert counts[0] >= 1


# ---------------------------------------------------------------------------
# thresholds


def test_threshold_order_and_stability(thresholds_d3):
    rep = thresholds_d3
    assert 0.0 < rep.C0 <= rep.C1
    assert rep.grid_refinement_drift < 0.01


def test_below_c0_positive_at_all_refinements(thresholds_d3):
    c = 0.8 * thresholds_d3.C0
    for k in range(3):
        g = build_grid(300, 2e2, "logarithmic", r_min=1e-4 * 10.0**-k)
        assert operator_spectrum(effective_operator("contact_image", c, 3, g)).count_negative == 0


def test_between_c0_c1_count_finite_and_stable(thresholds_d3):
    c = 0.5 * (thresholds_d3.C0 + thresholds_d3.C1)
    counts = []
    for k in range(3):
        g = build_grid(300, 2e2, "logarithmic", r_min=1e-4 * 10.0**-k)
        counts.append(operator_spectrum(effective_operator("contact_image", c, 3, g)).count_negative)
    assert max(counts) - min(counts) <= 1
    assert counts[0] >= 1


def test_above_c1_count_grows_every_decade(thresholds_d3):
    c = 2.0 * thresholds_d3.C1
    counts = []
    for k in range(3):
        g = build_grid(300, 2e2, "logarithmic", r_min=1e-4 * 10.0**-k)
        counts.append(operator_spectrum(effective_operator("contact_image", c, 3, g)).count_negative)
    assert all(counts[i + 1] > counts[i] for i in range(2))


def test_threshold_bracket_validation():
    with pytest.raises(ValueError, match="straddle"):
        find_thresholds("contact_image", 3, (2.0, 2.5), n=250)


def test_thresholds_only_for_contact_image():
    with pytest.raises(ValueError, match="scale-invariant"):
        find_thresholds("weak_image", 3)
    with pytest.raises(ValueError, match="scale-invariant"):
        find_thresholds("three_body_2d", 2)


# ---------------------------------------------------------------------------
# geometric_ratio


def test_synthetic_geometric_spectrum():
    e = -2.0 * 0.3 ** np.arange(6)
    rep = geometric_ratio(SpectrumReport.from_eigenvalues(e))
    assert rep.ratio == pytest.approx(0.3, rel=1e-12)
    assert rep.deviation < 1e-12
    assert rep.classification == "efimov"


def test_linear_spectrum_not_geometric():
    # harmonic-like equal spacing; enough levels that the ratio spread
    # exceeds the 10% gate
    e = -np.arange(10.0, 0.0, -1.0)
    rep = geometric_ratio(SpectrumReport.from_eigenvalues(e))
    assert rep.classification == "not_geometric"
    assert rep.deviation > 0.10


def test_too_few_negative_eigenvalues_rejected():
    with pytest.raises(ValueError, match="at least 4"):
        geometric_ratio(SpectrumReport.from_eigenvalues(np.array([-1.0, -0.1, 1.0])))


def test_thomas_classification_from_rmin_refinement():
    base = SpectrumReport.from_eigenvalues(-2.0 * 0.25 ** np.arange(5))
    deeper = SpectrumReport.from_eigenvalues(-8.0 * 0.25 ** np.arange(6))
    rep = geometric_ratio(base, refined_rmin=deeper)
    assert rep.classification == "thomas"


def test_efimov_classification_wins_with_rmax_evidence():
    base = SpectrumReport.from_eigenvalues(-2.0 * 0.25 ** np.arange(5))
    shallower = SpectrumReport.from_eigenvalues(-2.0 * 0.25 ** np.arange(6))
    deeper = SpectrumReport.from_eigenvalues(-8.0 * 0.25 ** np.arange(6))
    rep = geometric_ratio(base, refined_rmax=shallower, refined_rmin=deeper)
    assert rep.classification == "efimov"


def test_contact_image_tower_is_geometric(log_grid):
    op = effective_operator("contact_image", 2.3, 3, log_grid)
    rep = geometric_ratio(operator_spectrum(op))
    assert rep.classification == "efimov"
    assert rep.deviation < 0.10


def test_thomas_mirror_rmin_decade_deepens_by_scale_factor(log_grid):
    # the UV face of the same scale invariance: truncating r_min by a decade
    # deepens the lowest level by the dilation factor, while new states enter
    # at the tower ratio
    c = 2.3
    base = operator_spectrum(effective_operator("contact_image", c, 3, log_grid))
    fine_grid = build_grid(400, 2e2, "logarithmic", r_min=1e-5)
    fine = operator_spectrum(effective_operator("contact_image", c, 3, fine_grid))
    deep_base = np.abs(base.eigenvalues[base.eigenvalues < 0]).max()
    deep_fine = np.abs(fine.eigenvalues[fine.eigenvalues < 0]).max()
    assert deep_fine / deep_base == pytest.approx(10.0, rel=0.25)
    rep = geometric_ratio(base, refined_rmin=fine)
    assert rep.classification == "thomas"


# ---------------------------------------------------------------------------
# kernel22 / hyperradial_reduce


def test_kernel22_unit_vectors():
    v = kernel22(np.array([1.0, 0.0]), np.array([1.0, 0.0]))
    assert not v.pole
    assert v.value == pytest.approx(1.0 / 12.0, rel=1e-15)


def test_kernel22_pole_flag():
    v = kernel22(np.array([1.0, 0.3]), np.array([-1.0, -0.3]))
    assert v.pole


def test_kernel22_homogeneity_degree_minus_four():
    rng = np.random.default_rng(0)
    for _ in range(10):
        q1, q2 = rng.standard_normal((2, 2))
        s = rng.uniform(0.5, 3.0)
        a = kernel22(q1, q2)
        b = kernel22(s * q1, s * q2)
        assert b.value == pytest.approx(a.value / s**4, rel=1e-12)


def test_hyperradial_profile_inverse_r_with_negative_prefactor():
    rep = hyperradial_reduce(np.geomspace(0.01, 10.0, 10))
    assert rep["fitted_exponent"] == pytest.approx(-1.0, abs=0.05)
    assert rep["prefactor"] < 0.0
    # degree -1 law: profile(2r)/profile(r) = 1/2 on a factor-2 pair
    pair = hyperradial_reduce(np.array([1.0, 2.0, 150.0]))
    assert pair["profile"][1] / pair["profile"][0] == pytest.approx(0.5, rel=1e-10)


def test_hyperradial_requires_two_decades():
    with pytest.raises(ValueError, match="decades"):
        hyperradial_reduce(np.array([1.0, 2.0, 3.0]))


def test_hyperradial_angular_divergence_flagged():
    # the exact angular average diverges logarithmically on the q1 = -q2
    # circle, so refinement growth is reported as a flag by design
    rep = hyperradial_reduce(np.geomspace(0.01, 10.0, 8))
    assert "angular_quadrature_not_converged" in rep["flags"]


# ---------------------------------------------------------------------------
# mass_sweep_2d


@pytest.fixture(scope="module")
def sweep_grid():
    return build_grid(600, 5e2, "logarithmic", r_min=1e-4)


def test_mass_sweep_monotonicity(sweep_grid):
    rep = mass_sweep_2d([1, 2, 4, 8, 16], 1.0, sweep_grid)
    assert rep.counts_nondecreasing
    assert rep.shallowest_nonincreasing
    assert not rep.flags


def test_mass_sweep_dilation_oracle(sweep_grid):
    # eig((1/m) K - c/r on G) = m * eig(K - c/r on m G), checked end to end
    # through an independently dilated assembly
    from zrange.operators import hyperradial_kinetic

    m = 8.0
    op_m = effective_operator("three_body_2d", 1.0, 2, sweep_grid, m=m)
    ev_m = operator_spectrum(op_m).eigenvalues
    dilated = sweep_grid.dilate(m)
    kin = hyperradial_kinetic(dilated, 1.0).entries
    ham = kin - np.diag(1.0 / dilated.nodes)
    ev_1 = np.sort(eigh(0.5 * (ham + ham.T), eigvals_only=True))
    neg_m = ev_m[ev_m < 0]
    neg_1 = ev_1[ev_1 < 0]
    k = min(neg_m.size, neg_1.size)
    assert k >= 3
    assert np.allclose(neg_m[:k], m * neg_1[:k], rtol=0.01)


def test_mass_sweep_requires_increasing_masses(sweep_grid):
    with pytest.raises(ValueError, match="increasing"):
        mass_sweep_2d([2, 1], 1.0, sweep_grid)
    with pytest.raises(ValueError, match="positive"):
        mass_sweep_2d([1, 2], -1.0, sweep_grid)


def test_mass_sweep_flags_unresolved_shallow_states():
    # a small box leaves the shallowest state at the box scale
    tight = build_grid(300, 2e2, "logarithmic", r_min=1e-4)
    rep = mass_sweep_2d([1, 2, 4], 1.0, tight)
    assert any("r_max_too_small" in f for f in rep.flags)
