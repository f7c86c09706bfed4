import numpy as np
import pytest

from gmlab.errors import ValidationError
from gmlab.optics import (
    GaussianPsf,
    Grid,
    derivative_vectors,
    fd_weights,
    psf_y_derivative,
)


def test_grid_centered_weights_are_trapezoid():
    grid = Grid.centered(0.0, 2.0, 5)
    assert np.allclose(grid.x, [-2, -1, 0, 1, 2])
    assert np.allclose(grid.w, [0.5, 1, 1, 1, 0.5])


def test_grid_quadrature_integrates_gaussian():
    grid = Grid.centered(0.0, 10.0, 2001)
    vals = np.exp(-grid.x**2 / 2)
    assert grid.x @ np.zeros_like(grid.x) == 0
    assert np.sum(grid.w * vals) == pytest.approx(np.sqrt(2 * np.pi), rel=1e-12)


def test_grid_norm_and_inner_agree():
    grid = Grid.centered(0.0, 8.0, 801)
    f = np.exp(-grid.x**2 / 4)
    assert grid.norm(f) == pytest.approx(np.sqrt(grid.inner(f, f)))


def test_grid_doubled_keeps_span():
    grid = Grid.centered(0.0, 3.0, 11)
    fine = grid.doubled()
    assert fine.x[0] == grid.x[0]
    assert fine.x[-1] == grid.x[-1]
    assert fine.n_points == 21


def test_grid_rejects_nonuniform_spacing():
    x = np.array([0.0, 1.0, 2.5])
    with pytest.raises(ValidationError):
        Grid(x, np.ones(3))


def test_fd_weights_reproduce_classic_stencils():
    assert np.allclose(fd_weights(np.array([-1.0, 0.0, 1.0]), 1), [-0.5, 0.0, 0.5])
    assert np.allclose(fd_weights(np.array([-1.0, 0.0, 1.0]), 2), [1.0, -2.0, 1.0])
    five = fd_weights(np.array([-2.0, -1.0, 0.0, 1.0, 2.0]), 2)
    assert np.allclose(five, [-1 / 12, 4 / 3, -5 / 2, 4 / 3, -1 / 12])


def test_fd_weights_are_exact_on_polynomials():
    offsets = np.array([-2.0, -1.0, 0.0, 1.0, 2.0])
    w = fd_weights(offsets, 3)
    # d^3/dx^3 x^4 at 0 is 0; at offsets shifted by 1: 24 x = 24
    vals = (offsets + 1.0) ** 4
    assert w @ vals == pytest.approx(24.0, rel=1e-12)


def test_gaussian_psf_normalization_and_shape():
    psf = GaussianPsf(2.0)
    grid = Grid.for_psf(psf)
    assert grid.norm(psf(grid.x)) == pytest.approx(1.0, abs=1e-10)
    assert psf(np.array([0.0]))[0] == pytest.approx((2 * np.pi * 4.0) ** -0.25)


def test_psf_y_derivative_matches_analytic_form():
    psf = GaussianPsf(1.0)
    grid = Grid.for_psf(psf)
    d1 = psf_y_derivative(psf, grid, 0.0, 1)
    # d/dy psf(x - y) at y=0 equals +x/(2 sigma^2) psf(x)
    analytic = grid.x / 2 * psf(grid.x)
    assert np.max(np.abs(d1 - analytic)) < 1e-10


def test_psf_y_derivative_order_two():
    psf = GaussianPsf(1.0)
    grid = Grid.for_psf(psf)
    d2 = psf_y_derivative(psf, grid, 0.0, 2)
    analytic = (grid.x**2 / 4 - 0.5) * psf(grid.x)
    assert np.max(np.abs(d2 - analytic)) < 1e-8


def test_psf_y_derivative_converges_with_step():
    psf = GaussianPsf(1.0)
    grid = Grid.for_psf(psf)
    analytic = grid.x / 2 * psf(grid.x)
    errs = []
    for step in (1e-2, 5e-3):
        d1 = psf_y_derivative(psf, grid, 0.0, 1, step=step)
        errs.append(np.max(np.abs(d1 - analytic)))
    # symmetric interior stencil is O(step^4): halving the step gains ~16x
    ratio = errs[0] / errs[1]
    assert 8 < ratio < 32


@pytest.mark.parametrize("length", [1e-3, 1e-2, 1e-1])
def test_derivative_vector_norms_closed_form(length):
    # ||omega_0||^2 = 1, ||omega_1||^2 = L^2/(4 s^2), ||omega_2||^2 = 3L^4/(64 s^4)
    sigma = 1.3
    psf = GaussianPsf(sigma)
    grid = Grid.for_psf(psf, span=length)
    dv = derivative_vectors(psf, grid, 0.0, length, 2)
    n0, n1, n2 = dv.norms()
    assert n0**2 == pytest.approx(1.0, rel=1e-6)
    assert n1**2 == pytest.approx(length**2 / (4 * sigma**2), rel=1e-6)
    assert n2**2 == pytest.approx(3 * length**4 / (64 * sigma**4), rel=1e-6)


def test_derivative_vectors_parity_orthogonality():
    psf = GaussianPsf(1.0)
    grid = Grid.for_psf(psf, span=0.1)
    dv = derivative_vectors(psf, grid, 0.0, 0.1, 3)
    emb = dv.embedded()
    # odd and even derivative orders are orthogonal for a symmetric psf
    assert abs(emb[0] @ emb[1]) < 1e-12
    assert abs(emb[1] @ emb[2]) < 1e-12
    assert abs(emb[0] @ emb[3]) < 1e-12


def test_derivative_vectors_unscaled_removes_length_power():
    psf = GaussianPsf(1.0)
    grid = Grid.for_psf(psf, span=0.1)
    a = derivative_vectors(psf, grid, 0.0, 0.02, 2)
    b = derivative_vectors(psf, grid, 0.0, 0.08, 2)
    # omega_n carries L^n/n!; unscaled rows depend on the psf alone
    assert np.allclose(a.unscaled(2), b.unscaled(2), rtol=1e-8, atol=1e-12)


def test_derivative_vectors_reject_narrow_grid():
    psf = GaussianPsf(1.0)
    grid = Grid.centered(0.0, 2.0, 101)  # 2 sigma: psf norm visibly below 1
    with pytest.raises(ValidationError):
        derivative_vectors(psf, grid, 0.0, 0.1, 2)
