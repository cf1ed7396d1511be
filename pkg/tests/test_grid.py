import math

import numpy as np
import pytest

from qmu.distributions import convolve, w2_quantile
from qmu.grid import (
    GridAliasingError,
    GridSystem,
    VonNeumannModel,
    apply_momentum,
    apply_oscillator,
    apply_position,
    boundary_mass,
    dft_matrix,
    gaussian_state,
    ground_state,
    momentum_distribution,
    momentum_wavefunction,
    parity_flip,
    phase_space_marginals,
    position_distribution,
    position_observable,
)
from qmu.observables import distribution_of
from qmu.schemes import induced_observable


def test_dft_matrix_matches_fft_path():
    grid = GridSystem(8, 3.0)
    rng = np.random.default_rng(0)
    psi = rng.standard_normal(8) + 1j * rng.standard_normal(8)
    via_matrix = dft_matrix(grid) @ psi * math.sqrt(8) * grid.dx / math.sqrt(2 * math.pi)
    via_fft = momentum_wavefunction(grid, psi)
    np.testing.assert_allclose(via_fft, via_matrix, atol=1e-12)


def test_ground_state_moments():
    grid = GridSystem(256, 10.0)
    psi = ground_state(grid)
    pos = position_distribution(grid, psi)
    mom = momentum_distribution(grid, psi)
    assert abs(pos.mean) < 1e-12
    assert abs(pos.variance - 0.5) < 1e-10
    assert abs(mom.mean) < 1e-12
    assert abs(mom.variance - 0.5) < 1e-10


def test_squeezed_and_displaced_gaussians():
    grid = GridSystem(512, 14.0)
    for s in (0.5, 2.0):
        psi = gaussian_state(grid, width=s)
        assert abs(position_distribution(grid, psi).variance - s**2 / 2) < 1e-9
        assert abs(momentum_distribution(grid, psi).variance - 0.5 / s**2) < 1e-9
    shifted = gaussian_state(grid, center=1.3, momentum=-0.7)
    assert abs(position_distribution(grid, shifted).mean - 1.3) < 1e-9
    assert abs(momentum_distribution(grid, shifted).mean + 0.7) < 1e-9


def test_parity_flip():
    grid = GridSystem(64, 6.0)
    psi = gaussian_state(grid, center=1.0)
    flipped = parity_flip(psi)
    np.testing.assert_allclose(
        position_distribution(grid, flipped).probs[::-1][:-1],
        np.roll(position_distribution(grid, psi).probs, -1)[:-1],
        atol=1e-12,
    )
    assert abs(position_distribution(grid, flipped).mean + 1.0) < 1e-9


def test_oscillator_annihilates_ground_state():
    grid = GridSystem(512, 12.0)
    psi = ground_state(grid)
    residual = apply_oscillator(grid, psi)
    assert grid.inner(residual, residual).real * 1.0 < 1e-20


def test_position_momentum_operator_moments():
    grid = GridSystem(256, 10.0)
    psi = gaussian_state(grid, center=0.8, width=1.2, momentum=0.5)
    pos = position_distribution(grid, psi)
    x1 = grid.inner(psi, apply_position(grid, psi)).real
    assert abs(x1 - pos.mean) < 1e-10
    p1 = grid.inner(psi, apply_momentum(grid, psi)).real
    assert abs(p1 - momentum_distribution(grid, psi).mean) < 1e-9


def test_phase_space_marginals_ground_state_saturates():
    grid = GridSystem(1024, 12.0)
    mu, nu = phase_space_marginals(grid, ground_state(grid))
    assert abs(mu.std * nu.std - 0.5) < 1e-4
    assert abs(mu.moment(2) * nu.moment(2) - 0.25) < 1e-3


def test_phase_space_marginals_squeezed_and_displaced():
    grid = GridSystem(1024, 12.0)
    mu, nu = phase_space_marginals(grid, gaussian_state(grid, width=2.0))
    assert abs(mu.std * nu.std - 0.5) < 1e-4
    assert mu.moment(2) * nu.moment(2) >= 0.25 - 1e-9
    mu_d, nu_d = phase_space_marginals(grid, gaussian_state(grid, center=1.5))
    assert abs(mu_d.mean + 1.5) < 1e-6  # parity flips the displacement
    assert mu_d.moment(2) * nu_d.moment(2) > mu_d.variance * nu_d.variance + 0.1


def test_aliasing_detection():
    grid = GridSystem(128, 6.0)
    with pytest.raises(GridAliasingError):
        phase_space_marginals(grid, gaussian_state(grid, center=5.5))
    assert boundary_mass(grid, ground_state(grid)) < 1e-12


def test_von_neumann_measured_equals_convolution():
    obj = GridSystem(64, 8.0)
    probe = GridSystem(64, 8.0)
    model = VonNeumannModel(obj, probe, lam=1.0, probe_psi=gaussian_state(probe, width=1.0))
    psi = gaussian_state(obj, center=0.5, width=0.8)
    measured = model.measured_distribution(psi)
    oracle = convolve(model.noise_distribution(), position_distribution(obj, psi))
    dist, _ = w2_quantile(measured, oracle)
    assert dist < 1e-6
    assert abs(measured.mean - oracle.mean) < 1e-8
    assert abs(measured.variance - oracle.variance) < 1e-8


def test_von_neumann_unbiased_for_even_probe():
    obj = GridSystem(32, 8.0)
    probe = GridSystem(64, 16.0)
    model = VonNeumannModel(obj, probe, lam=2.0, probe_psi=gaussian_state(probe, width=1.0))
    mu = model.noise_distribution()
    assert abs(mu.mean) < 1e-12
    psi = gaussian_state(obj, width=0.9)
    assert abs(model.measured_distribution(psi).mean - 0.0) < 1e-9


def test_von_neumann_noise_narrows_with_coupling():
    obj = GridSystem(32, 8.0)
    probe = GridSystem(64, 16.0)
    widths = []
    for lam in (1.0, 2.0, 4.0):
        model = VonNeumannModel(obj, probe, lam=lam, probe_psi=gaussian_state(probe, width=1.0))
        widths.append(model.noise_distribution().std)
    assert widths[0] > widths[1] > widths[2]
    # law of y0/lam: std halves when lam doubles
    assert abs(widths[0] / widths[1] - 2.0) < 1e-9


def test_von_neumann_grid_compatibility_guard():
    obj = GridSystem(32, 8.0)
    probe = GridSystem(32, 8.0)
    with pytest.raises(ValueError):
        VonNeumannModel(obj, probe, lam=0.5, probe_psi=gaussian_state(probe))


def test_von_neumann_dense_scheme_matches_fast_route():
    obj = GridSystem(16, 6.0)
    probe = GridSystem(32, 12.0)
    model = VonNeumannModel(obj, probe, lam=1.0, probe_psi=gaussian_state(probe, width=1.0))
    scheme = model.to_scheme()
    obs = induced_observable(scheme)
    psi = gaussian_state(obj, center=-0.4, width=0.9)
    rho = np.outer(psi, psi.conj()) * obj.dx
    dense = distribution_of(obs, rho)
    fast = model.measured_distribution(psi)
    np.testing.assert_allclose(dense.support, fast.support, atol=1e-12)
    np.testing.assert_allclose(dense.probs, fast.probs, atol=1e-9)


def test_grid_convergence_doubling():
    # Doubling n and L together (same spacing, wider box) moves Gaussian
    # moments by well under 1e-5.
    base = GridSystem(512, 12.0)
    fine = GridSystem(1024, 24.0)
    for g1, g2 in ((base, fine),):
        m1, n1 = phase_space_marginals(g1, gaussian_state(g1, width=1.5))
        m2, n2 = phase_space_marginals(g2, gaussian_state(g2, width=1.5))
        assert abs(m1.variance - m2.variance) < 1e-5
        assert abs(n1.variance - n2.variance) < 1e-5
        assert abs(m1.moment(2) - m2.moment(2)) < 1e-5
    obj1, probe1 = GridSystem(32, 8.0), GridSystem(64, 16.0)
    obj2, probe2 = GridSystem(64, 16.0), GridSystem(128, 32.0)
    for o, p in ((obj1, probe1), (obj2, probe2)):
        model = VonNeumannModel(o, p, lam=2.0, probe_psi=gaussian_state(p, width=1.0))
        d = model.measured_distribution(gaussian_state(o, width=0.8))
        if o is obj1:
            first = (d.mean, d.variance)
        else:
            assert abs(d.mean - first[0]) < 1e-5
            assert abs(d.variance - first[1]) < 1e-5


def test_position_observable_guard():
    with pytest.raises(ValueError):
        position_observable(GridSystem(256, 8.0))
