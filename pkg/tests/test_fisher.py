import numpy as np
import pytest

from gmlab.errors import (
    DivergentInformationError,
    SingularCovarianceError,
    ValidationError,
)
from gmlab.fisher import (
    FimBounds,
    FisherMatrix,
    check_bounds,
    fim_discrete,
    fim_gaussian,
    heterodyne_fim_closed_form,
    homodyne_fim_closed_form,
    homodyne_xx_alternate_form,
    multi_lens_gaussian_bounds,
    numeric_jacobian,
    photon_counting_fim,
    single_lens_gaussian_bound,
    tensor_copies,
    two_lens_gaussian_bounds,
    two_lens_joint_fim,
    xx_form_report,
)
from gmlab.gstate import (
    apply_symplectic,
    balanced_beam_splitter,
    two_lens_cov_derivs,
    two_lens_state,
)
from gmlab.measure import (
    heterodyne_measurement,
    homodyne_measurement,
    photon_counting_two_mode,
    random_valid_gaussian_measurement,
)

# frozen reference values at (eps, |g|, theta) = (0.1, 0.5, 0.7), one copy;
# each is reproduced by the explicit arithmetic in the matching test
HET_F_GG = 0.0045428675210389142
HET_F_TT = 0.0011344299489506526
XP_F_GG = 0.008315865728774182
XP_F_TT = 0.002070393374741201
XX_F_GG = 0.0048521401790789084
XX_F_GT = -0.0020434506466081048
XX_F_TT = 0.00086058736784388632
PC_F_GG = 0.06851897596270394
PC_F_GT = -0.028856368647307281
PC_F_TT = 0.012152692006993013


def post_interference_fim(eps, g_abs, theta, meas, n_copies=1):
    """Numeric information of a Gaussian read-out after balanced mixing."""
    bs = balanced_beam_splitter(2, 0, 1)
    state = apply_symplectic(two_lens_state(eps, g_abs, theta), bs)
    dvg, dvt = two_lens_cov_derivs(eps, g_abs, theta)
    ix = np.ix_(meas.measured, meas.measured)
    c = (state.v + meas.v_pi)[ix]
    derivs = [(bs.s @ dvg @ bs.s.T)[ix], (bs.s @ dvt @ bs.s.T)[ix]]
    return fim_gaussian(
        c, derivs=derivs, params=("g_abs", "theta"), n_copies=n_copies
    )


def test_numeric_jacobian_on_polynomial():
    def f(x):
        return np.array([[x[0] ** 2, x[0] * x[1]], [x[0] * x[1], x[1] ** 2]])

    at = np.array([1.5, -0.5])
    jg, jt = numeric_jacobian(f, at)
    assert jg[0, 0] == pytest.approx(3.0, rel=1e-8)
    assert jg[0, 1] == pytest.approx(-0.5, rel=1e-8)
    assert jt[1, 1] == pytest.approx(-1.0, rel=1e-8)


def test_fisher_matrix_validation():
    with pytest.raises(ValidationError):
        FisherMatrix(("a", "b"), np.array([[1.0, 0.5], [0.2, 1.0]]))
    with pytest.raises(ValidationError):
        FisherMatrix(("a", "b"), np.array([[1.0, 2.0], [2.0, 1.0]]))
    fim = FisherMatrix(("a", "b"), np.diag([2.0, 1.0]))
    assert fim[("a", "a")] == 2.0
    assert fim.rank == 2
    assert fim.max_eigenvalue == pytest.approx(2.0)


def test_fim_gaussian_scalar_thermal_example():
    # C(v) = v I2: F = (1/2) tr[(C^-1 dC)^2] = 1/v^2
    def cov(at):
        return at[0] * np.eye(2)

    fim = fim_gaussian(cov, at=np.array([0.7]), params=("v",))
    assert fim[("v", "v")] == pytest.approx(1 / 0.49, rel=1e-6)


def test_fim_gaussian_rejects_singular_covariance():
    with pytest.raises(SingularCovarianceError):
        fim_gaussian(np.zeros((2, 2)), derivs=[np.eye(2)], params=("a",))


def test_heterodyne_closed_form_frozen_values():
    fim = heterodyne_fim_closed_form(0.1, 0.5)
    assert fim[("g_abs", "g_abs")] == pytest.approx(HET_F_GG, rel=1e-12)
    assert fim[("theta", "theta")] == pytest.approx(HET_F_TT, rel=1e-12)
    assert fim[("g_abs", "theta")] == 0.0
    # same numbers from the printed expression evaluated by hand
    manual = 0.1**2 * (1 / 2.05**2 + 1 / 2.15**2)
    assert fim[("g_abs", "g_abs")] == pytest.approx(manual, rel=1e-14)


def test_homodyne_xp_closed_form_frozen_values():
    fim = homodyne_fim_closed_form(0.1, 0.5, 0.7, variant="xp")
    assert fim[("g_abs", "g_abs")] == pytest.approx(XP_F_GG, rel=1e-12)
    assert fim[("theta", "theta")] == pytest.approx(XP_F_TT, rel=1e-12)
    a, b = 1.1, 0.05
    assert fim[("g_abs", "g_abs")] == pytest.approx(
        0.01 * (a * a + b * b) / (a * a - b * b) ** 2, rel=1e-14
    )
    assert fim[("theta", "theta")] == pytest.approx(
        0.01 * 0.25 / (a * a - b * b), rel=1e-14
    )


def test_homodyne_xp_information_is_phase_independent():
    for th in (0.0, 0.4, 1.2, np.pi / 2):
        fim = homodyne_fim_closed_form(0.1, 0.5, th, variant="xp")
        assert fim[("g_abs", "g_abs")] == pytest.approx(XP_F_GG, rel=1e-12)
        assert fim[("theta", "theta")] == pytest.approx(XP_F_TT, rel=1e-12)


def test_homodyne_xx_closed_form_frozen_values():
    fim = homodyne_fim_closed_form(0.1, 0.5, 0.7, variant="xx")
    assert fim[("g_abs", "g_abs")] == pytest.approx(XX_F_GG, rel=1e-12)
    assert fim[("g_abs", "theta")] == pytest.approx(XX_F_GT, rel=1e-12)
    assert fim[("theta", "theta")] == pytest.approx(XX_F_TT, rel=1e-12)
    assert fim.rank == 1


@pytest.mark.parametrize("variant", ["xx", "pp", "xp", "px"])
def test_homodyne_closed_forms_match_numeric_route(variant):
    meas = homodyne_measurement(variant)
    for eps in (0.01, 0.1, 0.2):
        for g in (0.0, 0.5, 0.9):
            for th in (0.0, 0.7, np.pi / 2):
                cf = homodyne_fim_closed_form(eps, g, th, variant=variant)
                num = post_interference_fim(eps, g, th, meas)
                scale = max(np.abs(cf.matrix).max(), 1e-300)
                assert np.max(np.abs(cf.matrix - num.matrix)) <= 1e-10 * scale


def test_heterodyne_closed_form_matches_numeric_route():
    meas = heterodyne_measurement(2)
    for eps in (0.01, 0.1, 0.2):
        for g in (0.0, 0.5, 0.9):
            cf = heterodyne_fim_closed_form(eps, g)
            num = post_interference_fim(eps, g, 0.7, meas)
            scale = max(np.abs(cf.matrix).max(), 1e-300)
            assert np.max(np.abs(cf.matrix - num.matrix)) <= 1e-10 * scale


def test_heterodyne_information_is_interference_invariant():
    # POVM covariance I/2 commutes with the passive mixing, so measuring
    # before or after the beam splitter gives identical information
    meas = heterodyne_measurement(2)
    direct = two_lens_joint_fim(0.1, 0.5, 0.7, meas, n_joint=1)
    mixed = post_interference_fim(0.1, 0.5, 0.7, meas)
    assert np.allclose(direct.matrix, mixed.matrix, rtol=1e-12)


def test_photon_counting_closed_form_frozen_values():
    fim = photon_counting_fim(0.1, 0.5, 0.7)
    assert fim[("g_abs", "g_abs")] == pytest.approx(PC_F_GG, rel=1e-12)
    assert fim[("g_abs", "theta")] == pytest.approx(PC_F_GT, rel=1e-12)
    assert fim[("theta", "theta")] == pytest.approx(PC_F_TT, rel=1e-12)
    assert fim.rank == 1
    c = np.cos(0.7)
    pref = 0.1 / (1 - 0.25 * c * c)
    assert fim[("g_abs", "g_abs")] == pytest.approx(pref * c * c, rel=1e-14)


def test_photon_counting_fim_matches_discrete_route():
    for eps in (0.01, 0.05, 0.1):
        for g in (0.0, 0.3, 0.9, 1.0):
            for th in (0.1, 0.7, 2.0):
                closed = photon_counting_fim(eps, g, th)
                discrete = fim_discrete(photon_counting_two_mode(eps, g, th))
                scale = max(np.abs(closed.matrix).max(), 1e-300)
                assert (
                    np.max(np.abs(closed.matrix - discrete.matrix)) <= 1e-10 * scale
                )


def test_photon_counting_diverges_at_full_contrast():
    with pytest.raises(DivergentInformationError):
        photon_counting_fim(0.1, 1.0, 0.0)


def test_fim_discrete_flags_divergent_parameters():
    dist = photon_counting_two_mode(0.1, 1.0, 0.0)
    fim = fim_discrete(dist)
    assert "g_abs" in fim.divergent


def test_closed_forms_scale_linearly_in_copies():
    one = heterodyne_fim_closed_form(0.1, 0.5)
    many = heterodyne_fim_closed_form(0.1, 0.5, n_copies=40)
    assert np.allclose(many.matrix, 40 * one.matrix, rtol=1e-14)


def test_reparameterization_transforms_covariantly(rng):
    eps, g, th = 0.1, 0.5, 0.7
    state = two_lens_state(eps, g, th)
    meas = heterodyne_measurement(2)
    ix = np.ix_(meas.measured, meas.measured)
    c = (state.v + meas.v_pi)[ix]
    dvg, dvt = two_lens_cov_derivs(eps, g, th)
    derivs = [dvg[ix], dvt[ix]]
    f = fim_gaussian(c, derivs=derivs, params=("g_abs", "theta")).matrix
    t = rng.standard_normal((2, 2)) + 2 * np.eye(2)
    mixed = [t[0, i] * derivs[0] + t[1, i] * derivs[1] for i in range(2)]
    f_new = fim_gaussian(c, derivs=mixed, params=("a", "b")).matrix
    assert np.allclose(f_new, t.T @ f @ t, rtol=1e-9, atol=1e-15)


def test_added_measurement_noise_never_helps():
    # V_pi' >= V_pi implies F(V_pi') <= F(V_pi) in the Loewner order
    from gmlab.measure import GaussianMeasurement

    eps, g, th = 0.1, 0.5, 0.7
    clean = two_lens_joint_fim(eps, g, th, heterodyne_measurement(2)).matrix
    noisier = GaussianMeasurement(np.eye(4) / 2 + np.eye(4), tuple(range(4)))
    noisy = two_lens_joint_fim(eps, g, th, noisier).matrix
    assert np.linalg.eigvalsh(clean - noisy).min() > -1e-12


def test_two_lens_bounds_values():
    bounds = two_lens_gaussian_bounds(0.1, 0.5, n_copies=3)
    assert bounds.element[("g_abs", "g_abs")] == pytest.approx(2 * 3 * 0.01)
    assert bounds.element[("theta", "theta")] == pytest.approx(2 * 3 * 0.01 * 0.25)
    assert bounds.element[("g_abs", "theta")] == pytest.approx(2 * 3 * 0.01 * 0.5)
    assert bounds.matrix_coeff == pytest.approx(2 * 3 * 0.01 * 1.25)


def test_multi_lens_bounds_values():
    g = np.array(
        [
            [1.0, 0.5, 0.2],
            [0.5, 1.0, 0.1],
            [0.2, 0.1, 1.0],
        ]
    )
    bounds = multi_lens_gaussian_bounds(0.1, g, n_copies=1)
    assert bounds.element[("g_abs_01", "g_abs_01")] == pytest.approx(2 * 0.01)
    assert bounds.element[("theta_01", "theta_01")] == pytest.approx(2 * 0.01 * 0.25)
    # M = 3 pairs coefficient: 2 M (M-1) N eps^2
    assert bounds.matrix_coeff == pytest.approx(2 * 3 * 2 * 0.01)


def test_single_lens_bound_uses_spectral_radius_and_rank():
    g_d = np.diag([3.0, -1.0, 0.0])
    assert single_lens_gaussian_bound(g_d, n_copies=2) == pytest.approx(
        9.0 * 2 * 2 * 2
    )
    assert single_lens_gaussian_bound(np.zeros((2, 2))) == 0.0


def test_check_bounds_pass_and_fail():
    bounds = two_lens_gaussian_bounds(0.1, 0.5)
    ok = check_bounds(heterodyne_fim_closed_form(0.1, 0.5), bounds)
    assert ok.all_passed
    too_big = FisherMatrix(("g_abs", "theta"), np.diag([1.0, 1.0]))
    bad = check_bounds(too_big, bounds)
    assert not bad.all_passed
    assert any(r.slack < 0 for r in bad.rows)


def test_check_bounds_requires_overlapping_parameters():
    fim = FisherMatrix(("x",), np.array([[1.0]]))
    bounds = FimBounds("elementwise", {("y", "y"): 1.0})
    with pytest.raises(ValidationError):
        check_bounds(fim, bounds)


def test_tensor_copies_block_structure():
    v = two_lens_state(0.1, 0.5, 0.7).v
    big = tensor_copies(v, 2)
    assert big.shape == (8, 8)
    # copy 0 occupies quadratures (x0, x1, p0, p1) = indices (0, 1, 4, 5)
    ix = np.ix_([0, 1, 4, 5], [0, 1, 4, 5])
    assert np.allclose(big[ix], v)
    # no cross-copy correlations in the state itself
    ix_cross = np.ix_([0, 1, 4, 5], [2, 3, 6, 7])
    assert np.max(np.abs(big[ix_cross])) == 0.0


def test_joint_product_heterodyne_is_additive():
    one = two_lens_joint_fim(0.1, 0.5, 0.7, heterodyne_measurement(2), n_joint=1)
    two = two_lens_joint_fim(0.1, 0.5, 0.7, heterodyne_measurement(4), n_joint=2)
    assert np.allclose(two.matrix, 2 * one.matrix, rtol=1e-12)


def test_joint_fim_rejects_wrong_mode_count():
    with pytest.raises(ValidationError):
        two_lens_joint_fim(0.1, 0.5, 0.7, heterodyne_measurement(2), n_joint=2)


def test_random_joint_measurements_respect_two_lens_bounds(rng):
    for _ in range(60):
        n_joint = int(rng.integers(1, 4))
        eps = float(rng.uniform(0.005, 0.2))
        g = float(rng.uniform(0.0, 1.0))
        th = float(rng.uniform(0.0, 2 * np.pi))
        meas = random_valid_gaussian_measurement(2 * n_joint, rng)
        fim = two_lens_joint_fim(eps, g, th, meas, n_joint=n_joint)
        report = check_bounds(fim, two_lens_gaussian_bounds(eps, g, n_copies=n_joint))
        assert report.all_passed, [r for r in report.rows if not r.passed]


def test_xx_alternate_form_is_double_and_malformed():
    report = xx_form_report(0.1, 0.5, 0.7)
    assert report.closed_form_max_dev < 1e-8
    assert report.alternate_max_dev > 1e3 * report.closed_form_max_dev
    assert not report.alternate_psd
    alt = homodyne_xx_alternate_form(0.1, 0.5, 0.7)
    true = homodyne_fim_closed_form(0.1, 0.5, 0.7, variant="xx").matrix
    # prefactor is doubled; the matrix part also drops the |g| weights
    assert alt[0, 0] == pytest.approx(2 * true[0, 0], rel=1e-12)
    assert alt[1, 1] == pytest.approx(2 * true[1, 1] / 0.25, rel=1e-12)
    assert alt[0, 1] == pytest.approx(4 * true[0, 1] / 0.5, rel=1e-12)
