import numpy as np
import pytest

from gmlab.errors import PhysicalityError, ValidationError
from gmlab.gstate import two_lens_coherence, two_lens_state
from gmlab.measure import (
    DiscreteDistribution,
    GaussianMeasurement,
    gaussian_outcome_distribution,
    heterodyne_measurement,
    homodyne_measurement,
    one_photon_total_probability,
    photon_counting_two_mode,
    random_valid_gaussian_measurement,
    single_photon_mode_probability,
    single_photon_projection_probability,
    spade_basis,
    spade_outcome_distribution,
    vacuum_probability,
)
from gmlab.optics import GaussianPsf, Grid


def test_heterodyne_measurement_covariance():
    meas = heterodyne_measurement(2)
    assert np.allclose(meas.v_pi, np.eye(4) / 2)
    assert meas.measured == (0, 1, 2, 3)


def test_homodyne_selection_parsing():
    meas = homodyne_measurement("xp")
    assert meas.measured == (0, 3)  # x of mode 0, p of mode 1 in xxpp order
    skip = homodyne_measurement("x-")
    assert skip.measured == (0,)


def test_homodyne_rejects_conjugate_pair_without_noise():
    # noiseless x and p of the same mode violate the uncertainty relation
    with pytest.raises(PhysicalityError):
        GaussianMeasurement(np.zeros((2, 2)), (0, 1))


def test_homodyne_rejects_unknown_selection():
    with pytest.raises(ValidationError):
        homodyne_measurement("xq")
    with pytest.raises(ValidationError):
        homodyne_measurement("--")


def test_random_measurements_are_valid(rng):
    for _ in range(25):
        meas = random_valid_gaussian_measurement(2, rng)
        h = meas.v_pi.astype(complex)
        # construction already enforces validity; re-check the form directly
        from gmlab.gstate import symplectic_form

        eigs = np.linalg.eigvalsh(h + 0.5j * symplectic_form(2))
        assert eigs.min() > -1e-10


def test_gaussian_outcome_distribution_heterodyne():
    state = two_lens_state(0.1, 0.5, 0.7)
    out = gaussian_outcome_distribution(state, heterodyne_measurement(2))
    assert np.allclose(out.cov, state.v + np.eye(4) / 2)
    assert np.allclose(out.mean, 0)


def test_gaussian_outcome_distribution_homodyne_marginal():
    state = two_lens_state(0.1, 0.5, 0.7)
    out = gaussian_outcome_distribution(state, homodyne_measurement("x-"))
    assert out.cov.shape == (1, 1)
    assert out.cov[0, 0] == pytest.approx(state.v[0, 0])


def test_gaussian_outcome_distribution_rejects_mode_mismatch():
    state = two_lens_state(0.1, 0.5, 0.7)
    with pytest.raises(ValidationError):
        gaussian_outcome_distribution(state, heterodyne_measurement(3))


def test_photon_counting_probabilities():
    eps, g, th, delta = 0.08, 0.5, 0.7, 0.2
    dist = photon_counting_two_mode(eps, g, th, delta=delta)
    c = np.cos(th + delta)
    probs = dict(zip(dist.labels, dist.probs))
    assert probs["plus"] == pytest.approx(eps / 2 * (1 + g * c))
    assert probs["minus"] == pytest.approx(eps / 2 * (1 - g * c))
    assert probs["vacuum"] == pytest.approx(1 - eps)
    assert dist.probs.sum() == pytest.approx(1.0, abs=1e-15)


def test_photon_counting_derivatives_match_finite_differences():
    eps, g, th = 0.08, 0.5, 0.7
    dist = photon_counting_two_mode(eps, g, th)
    h = 1e-7
    num_g = (
        photon_counting_two_mode(eps, g + h, th).probs
        - photon_counting_two_mode(eps, g - h, th).probs
    ) / (2 * h)
    num_t = (
        photon_counting_two_mode(eps, g, th + h).probs
        - photon_counting_two_mode(eps, g, th - h).probs
    ) / (2 * h)
    assert np.allclose(dist.dprobs[0], num_g, atol=1e-8)
    assert np.allclose(dist.dprobs[1], num_t, atol=1e-8)


def test_photon_counting_warns_outside_weak_source_regime():
    dist = photon_counting_two_mode(0.3, 0.5, 0.7)
    assert any("weak-source" in note for note in dist.notes)


def test_discrete_distribution_validation():
    with pytest.raises(ValidationError):
        DiscreteDistribution(("a", "b"), np.array([0.7, 0.2]), (), np.zeros((0, 2)))
    with pytest.raises(ValidationError):
        DiscreteDistribution(
            ("a", "b"), np.array([0.5, 0.5]), ("p",), np.array([[0.3, 0.1]])
        )


def test_vacuum_probability_exact():
    eps, g = 0.2, 0.6
    gamma = two_lens_coherence(eps, g, 0.3)
    # det(I + Gamma) with eigenvalues eps(1 +/- g)/2
    det = (1 + eps * (1 + g) / 2) * (1 + eps * (1 - g) / 2)
    assert vacuum_probability(gamma) == pytest.approx(1 / det, rel=1e-12)


def test_one_photon_probabilities_are_consistent():
    gamma = two_lens_coherence(0.1, 0.5, 0.7)
    total = one_photon_total_probability(gamma)
    per_mode = sum(
        single_photon_projection_probability(gamma, j) for j in range(2)
    )
    assert total == pytest.approx(per_mode, rel=1e-12)
    vec = np.array([1.0, 1.0]) / np.sqrt(2)
    direct = single_photon_mode_probability(gamma, vec)
    orth = single_photon_mode_probability(gamma, np.array([1.0, -1.0]) / np.sqrt(2))
    assert direct + orth == pytest.approx(total, rel=1e-12)


def test_spade_basis_is_orthonormal():
    psf = GaussianPsf(1.0)
    grid = Grid.for_psf(psf, span=0.1)
    basis = spade_basis(psf, grid, 0.0, 0.05, 3)
    gram = basis.b @ basis.b.T
    assert np.max(np.abs(gram - np.eye(basis.b.shape[0]))) < 1e-12
    assert basis.effective_order == 3


def test_spade_coefficients_have_parity_zeros():
    psf = GaussianPsf(1.0)
    grid = Grid.for_psf(psf, span=0.1)
    basis = spade_basis(psf, grid, 0.0, 0.05, 3)
    a = basis.a
    # a[m, l] = <b_l | omega_m> vanishes when m + l is odd (symmetric psf)
    for m in range(a.shape[0]):
        for l in range(a.shape[1]):
            if (m + l) % 2 == 1:
                assert abs(a[m, l]) < 1e-12
    # triangular: omega_m lies in the span of b_0..b_m
    assert abs(a[0, 1]) < 1e-12
    assert abs(a[1, 2]) < 1e-12


def test_spade_outcome_distribution_shape_and_derivatives():
    psf = GaussianPsf(1.0)
    grid = Grid.for_psf(psf, span=0.1)
    basis = spade_basis(psf, grid, 0.0, 0.05, 2)
    # symmetric two-point moments: t = (1, 0, 1/4, 0, 1/16)
    t = np.array([1.0, 0.0, 0.25, 0.0, 0.0625])
    dist = spade_outcome_distribution(t, 0.05, basis, n_params=2)
    assert dist.labels[-1] == "other"
    assert dist.probs.sum() == pytest.approx(1.0, abs=1e-12)
    assert np.all(dist.probs >= 0)
    assert np.max(np.abs(dist.dprobs.sum(axis=1))) < 1e-12
    # completion bucket holds nearly all of the mass in the weak-source limit;
    # the listed probabilities may exceed eps by the truncation excess
    assert dist.probs[-1] > 1 - 0.05 * (1 + 1e-6)


def test_spade_outcome_distribution_needs_enough_moments():
    psf = GaussianPsf(1.0)
    grid = Grid.for_psf(psf, span=0.1)
    basis = spade_basis(psf, grid, 0.0, 0.05, 2)
    with pytest.raises(ValidationError):
        spade_outcome_distribution(np.array([1.0, 0.0, 0.25]), 0.05, basis)
