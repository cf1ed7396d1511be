import math

import numpy as np
import pytest

from qmu import opalg
from qmu.distributions import Distribution
from qmu.errmetrics import (
    StateSearchPolicy,
    bloch_parameters,
    calibration_error,
    calibration_from_families,
    constant_bias,
    eps_no_from_moments,
    eps_no_from_scheme,
    error_report,
    eta_no,
    eta_no_from_instrument,
    eta_no_from_scheme,
    qubit_worst_case_closed_form,
    three_state_eps,
    value_comparison_eps,
    w2_observables_worst,
    worst_case_deviation,
)
from qmu.grid import (
    GridSystem,
    basis_states,
    ground_state,
    position_observable,
    smeared_position_calibration_families,
    smeared_position_maps,
)
from qmu.observables import (
    BlochObservable,
    Observable,
    SharpObservable,
    distribution_of,
    moment_operator,
    qubit_triple,
    smear,
    spectral_measure,
)
from qmu.opalg import SIGMA_X, SIGMA_Y, SIGMA_Z, bloch_state, expectation
from qmu.schemes import (
    constant_channel_instrument,
    identity_scheme,
    induced_instrument,
    induced_observable,
    swap_scheme,
)

RHO0 = 0.5 * (np.eye(2) - (SIGMA_X + SIGMA_Y) / np.sqrt(2))


def random_qubit_scheme(rng):
    from qmu.schemes import MeasurementScheme

    pointer = spectral_measure(opalg.random_hermitian(2, rng))
    while pointer.n_outcomes < 2:
        pointer = spectral_measure(opalg.random_hermitian(2, rng))
    return MeasurementScheme(
        probe_state=opalg.random_density(2, rng),
        coupling=opalg.haar_unitary(4, rng),
        pointer=pointer,
    )


# --- noise-operator error: moment form ------------------------------------


def test_eps_zero_for_qubit_triple_null_state():
    # Analytically zero; the float64 floor is sqrt(eps_machine * scale) ~ 1e-8
    # because the POVM data itself carries sqrt(2) roundings. The scenario
    # library reproduces the exact zero with a high-precision route.
    triple = qubit_triple()
    a = moment_operator(triple, 1)
    assert eps_no_from_moments(a, triple, RHO0) < 5e-8


def test_eps_trivial_approximator_doubles_variance():
    rng = np.random.default_rng(0)
    a = opalg.random_hermitian(2, rng)
    rho = opalg.random_density(2, rng)
    a_sharp = spectral_measure(a)
    probs = distribution_of(a_sharp, rho)
    trivial = Observable(
        a_sharp.outcomes, np.stack([p * np.eye(2, dtype=complex) for p in probs.probs])
    )
    eps = eps_no_from_moments(a, trivial, rho)
    assert abs(eps**2 - 2 * probs.variance) < 1e-10


def test_eps_covariant_qubit_state_independent():
    rng = np.random.default_rng(1)
    avec = np.array([0.0, 0.0, 1.0])
    c = np.array([0.3, -0.5, 0.4])
    c /= np.linalg.norm(c) / 0.8
    obs = BlochObservable(1.0, c).to_observable()
    expected = math.sqrt(1 - c @ c + (avec - c) @ (avec - c))
    for _ in range(5):
        rho = opalg.random_density(2, rng)
        assert abs(eps_no_from_moments(SIGMA_Z, obs, rho) - expected) < 1e-10


# --- noise-operator error: scheme form -------------------------------------


def test_eps_identity_scheme_display():
    rng = np.random.default_rng(2)
    a = SIGMA_Z
    sigma = opalg.random_density(2, rng)
    rho = opalg.random_density(2, rng)
    scheme = identity_scheme(spectral_measure(a), sigma)
    da = distribution_of(spectral_measure(a), rho)
    ds = distribution_of(spectral_measure(a), sigma)
    expected = da.variance + ds.variance + (da.mean - ds.mean) ** 2
    assert abs(eps_no_from_scheme(scheme, a, rho) ** 2 - expected) < 1e-10


def test_eps_swap_scheme_is_zero():
    rng = np.random.default_rng(3)
    a = opalg.random_hermitian(2, rng)
    scheme = swap_scheme(spectral_measure(a), opalg.random_density(2, rng))
    for _ in range(3):
        rho = opalg.random_density(2, rng)
        assert eps_no_from_scheme(scheme, a, rho) < 1e-10


def test_eps_eigenstate_gives_point_deviation():
    # At an A-eigenstate the error reduces to the classic rms deviation of the
    # output distribution from the eigenvalue.
    rng = np.random.default_rng(4)
    scheme = random_qubit_scheme(rng)
    a = opalg.random_hermitian(2, rng)
    evals, evecs = opalg.eig_hermitian(a)
    rho = opalg.projector(evecs[:, 0])
    c = induced_observable(scheme)
    eps = eps_no_from_scheme(scheme, a, rho)
    point_dev = distribution_of(c, rho).deviation_from_point(evals[0])
    assert abs(eps - point_dev) < 1e-9


def test_eps_forms_agree_on_random_schemes():
    rng = np.random.default_rng(5)
    for _ in range(25):
        scheme = random_qubit_scheme(rng)
        a = opalg.random_hermitian(2, rng)
        rho = opalg.random_density(2, rng)
        c = induced_observable(scheme)
        e1 = eps_no_from_scheme(scheme, a, rho)
        e2 = eps_no_from_moments(a, c, rho)
        e3 = three_state_eps(a, c, rho)
        assert abs(e1 - e2) < 1e-9
        assert abs(e2 - e3) < 1e-10


# --- three-state form -------------------------------------------------------


def test_three_state_on_triple_and_exact_approximator():
    triple = qubit_triple()
    a = moment_operator(triple, 1)
    assert three_state_eps(a, triple, RHO0) < 5e-8
    sharp = spectral_measure(SIGMA_Z)
    rng = np.random.default_rng(6)
    for _ in range(5):
        rho = opalg.random_density(2, rng)
        # five O(1) terms cancel; the float64 floor is sqrt-of-machine-eps scale
        assert three_state_eps(SIGMA_Z, sharp, rho) < 5e-8


def test_three_state_matches_moment_form_random():
    rng = np.random.default_rng(7)
    for _ in range(20):
        a = opalg.random_hermitian(2, rng)
        cvec = rng.uniform(-1, 1, 3)
        cvec /= max(np.linalg.norm(cvec), 1.0) * 1.01
        c = BlochObservable(1.0, cvec).to_observable()
        rho = opalg.random_density(2, rng)
        assert abs(three_state_eps(a, c, rho) - eps_no_from_moments(a, c, rho)) < 1e-10


# --- disturbance -------------------------------------------------------------


def test_eta_identity_scheme_zero():
    rng = np.random.default_rng(8)
    scheme = identity_scheme(spectral_measure(SIGMA_Z), opalg.random_density(2, rng))
    for b in (SIGMA_X, SIGMA_Y, SIGMA_Z):
        assert eta_no_from_scheme(scheme, b, opalg.random_density(2, rng)) < 1e-10


def test_eta_swap_scheme_display():
    rng = np.random.default_rng(9)
    sigma = opalg.random_density(2, rng)
    rho = opalg.random_density(2, rng)
    scheme = swap_scheme(spectral_measure(SIGMA_Z), sigma)
    b = SIGMA_X
    db = distribution_of(spectral_measure(b), rho)
    ds = distribution_of(spectral_measure(b), sigma)
    expected = db.variance + ds.variance + (db.mean - ds.mean) ** 2
    assert abs(eta_no_from_scheme(scheme, b, rho) ** 2 - expected) < 1e-10
    # sigma = rho: sqrt(2) Delta(B_sigma)
    eta = eta_no_from_scheme(swap_scheme(spectral_measure(SIGMA_Z), sigma), b, sigma)
    assert abs(eta - math.sqrt(2) * ds.std) < 1e-10


def test_eta_scheme_and_instrument_forms_agree():
    rng = np.random.default_rng(10)
    for _ in range(10):
        scheme = random_qubit_scheme(rng)
        instr = induced_instrument(scheme)
        b = opalg.random_hermitian(2, rng)
        rho = opalg.random_density(2, rng)
        assert abs(
            eta_no_from_scheme(scheme, b, rho) - eta_no_from_instrument(instr, b, rho)
        ) < 1e-9
        # the dispatcher routes both input kinds
        assert eta_no(scheme, b, rho) == eta_no_from_scheme(scheme, b, rho)
        assert eta_no(instr, b, rho) == eta_no_from_instrument(instr, b, rho)
    with pytest.raises(TypeError):
        eta_no(object(), SIGMA_X, 0.5 * np.eye(2))


def test_eta_constant_channel_vs_moment_form():
    rng = np.random.default_rng(11)
    f = spectral_measure(SIGMA_Z)
    rho0 = opalg.random_density(2, rng)
    instr = constant_channel_instrument(f, rho0)
    b = opalg.random_hermitian(2, rng)
    rho = opalg.random_density(2, rng)
    # Kraus-composition route
    eta = eta_no_from_instrument(instr, b, rho)
    # independent oracle: distorted observable is trivial with weights B_rho0
    db = distribution_of(spectral_measure(b), rho0)
    dev = db.mean * np.eye(2) - b
    expected = db.variance + expectation(dev @ dev, rho)
    assert abs(eta**2 - expected) < 1e-10


# --- value comparison ---------------------------------------------------------


def test_value_comparison_equals_eps_and_bounds_w2():
    rng = np.random.default_rng(12)
    a = spectral_measure(SIGMA_Z)
    mu = Distribution([-0.5, 0.5], [0.5, 0.5])
    c = smear(a, mu)
    for _ in range(5):
        rho = opalg.random_density(2, rng)
        vc = value_comparison_eps(a, c, rho)
        assert vc.commuting
        assert abs(vc.value - eps_no_from_moments(SIGMA_Z, c, rho)) < 1e-10
        assert vc.value >= vc.w2_distributions - 1e-10


def test_value_comparison_position_flip_on_grid():
    # Sharp -Q as approximator of Q in an even state: the value deviation is
    # 2 Delta(Q_rho) while the distributions coincide.
    grid = GridSystem(32, 8.0)
    q = position_observable(grid)
    minus_q = SharpObservable(-q.outcomes[::-1], q.effects[::-1].copy())
    psi = ground_state(grid)
    rho = np.outer(psi, psi.conj()) * grid.dx
    vc = value_comparison_eps(q, minus_q, rho)
    dist = distribution_of(q, rho)
    assert abs(vc.value - 2 * dist.std) < 1e-9
    assert vc.w2_distributions < 1e-9
    assert vc.commuting


def test_value_comparison_trivial_approximator():
    rng = np.random.default_rng(13)
    a = spectral_measure(SIGMA_Z)
    rho = opalg.random_density(2, rng)
    probs = distribution_of(a, rho)
    trivial = Observable(
        a.outcomes, np.stack([p * np.eye(2, dtype=complex) for p in probs.probs])
    )
    vc = value_comparison_eps(a, trivial, rho)
    assert abs(vc.value**2 - 2 * probs.variance) < 1e-10
    assert vc.value >= vc.w2_distributions - 1e-12
    same = value_comparison_eps(a, Observable(a.outcomes, a.effects), rho)
    assert same.value < 1e-12


def test_value_comparison_flags_noncommuting():
    rho = bloch_state([0.2, 0.1, 0.9])
    a = spectral_measure(SIGMA_Z)
    c = BlochObservable(1.0, np.array([0.7, 0.0, 0.0])).to_observable()
    vc = value_comparison_eps(a, c, rho)
    assert not vc.commuting
    assert abs(vc.value - eps_no_from_moments(SIGMA_Z, c, rho)) < 1e-10


# --- constant bias ------------------------------------------------------------


def test_constant_bias_identity():
    # eps^2 = Delta(C_rho)^2 - Delta(A_rho)^2 + bias^2 for constant-bias
    # approximators (smearings have constant bias mu[x]).
    rng = np.random.default_rng(14)
    a = spectral_measure(SIGMA_Z)
    mu = Distribution([-0.25, 0.75], [0.5, 0.5])
    c = smear(a, mu)
    bias = constant_bias(SIGMA_Z, c)
    assert bias is not None and abs(bias - mu.mean) < 1e-12
    for _ in range(5):
        rho = opalg.random_density(2, rng)
        eps = eps_no_from_moments(SIGMA_Z, c, rho)
        da = distribution_of(a, rho)
        dc = distribution_of(c, rho)
        assert abs(eps**2 - (dc.variance - da.variance + bias**2)) < 1e-10
    assert constant_bias(SIGMA_Z, BlochObservable(1.0, np.array([0.3, 0.3, 0.0])).to_observable()) is None


# --- worst-case deviation -----------------------------------------------------


def test_worst_case_qubit_closed_form_example():
    a = spectral_measure(SIGMA_Z)
    c = BlochObservable(1.0, np.array([0.0, 0.0, 0.5])).to_observable()
    res = w2_observables_worst(a, c)
    assert res.exact
    assert abs(res.value**2 - 1.0) < 1e-12


def test_worst_case_identical_observables_zero():
    a = spectral_measure(SIGMA_Z)
    res = w2_observables_worst(a, Observable(a.outcomes, a.effects))
    assert res.value < 1e-9


def test_worst_case_search_matches_closed_form():
    rng = np.random.default_rng(15)
    policy = StateSearchPolicy(seed=42, samples=60)
    for _ in range(10):
        c0 = rng.uniform(0.6, 1.4)
        cvec = rng.uniform(-1, 1, 3)
        cvec *= rng.uniform(0, 1) * min(c0, 2 - c0) / np.linalg.norm(cvec)
        avec = rng.uniform(-1, 1, 3)
        avec /= np.linalg.norm(avec)
        a = spectral_measure(opalg.bloch_operator(avec))
        c = BlochObservable(c0, cvec).to_observable()
        closed = qubit_worst_case_closed_form(a, c)
        assert closed is not None
        searched = worst_case_deviation(
            lambda p: distribution_of(a, opalg.projector(p)),
            lambda p: distribution_of(c, opalg.projector(p)),
            2,
            policy,
        )
        assert abs(searched.value - closed) < 1e-6


def test_worst_case_smearing_qubit():
    a = spectral_measure(SIGMA_Z)
    mu = Distribution([-0.4, 0.1, 0.6], [0.25, 0.5, 0.25])
    res = w2_observables_worst(a, smear(a, mu))
    assert abs(res.value - math.sqrt(mu.moment(2))) < 1e-6


def test_worst_case_smearing_grid():
    grid = GridSystem(256, 10.0)
    mu = Distribution([-0.5, 0.0, 0.5], [0.25, 0.5, 0.25])
    da, db = smeared_position_maps(grid, mu)
    res = worst_case_deviation(
        da, db, grid.n, StateSearchPolicy(samples=20), extra_states=basis_states(grid)
    )
    assert abs(res.value - math.sqrt(mu.moment(2))) < 1e-6


def test_bloch_parameter_extraction():
    c0, cvec = bloch_parameters(BlochObservable(0.8, np.array([0.1, 0.2, 0.3])).to_observable())
    assert abs(c0 - 0.8) < 1e-12
    np.testing.assert_allclose(cvec, [0.1, 0.2, 0.3], atol=1e-12)
    assert bloch_parameters(qubit_triple()) is None


# --- calibration ---------------------------------------------------------------


def test_calibration_qubit_smearing_closed_form():
    for gamma in (0.3, 0.6, 0.9):
        a = spectral_measure(SIGMA_Z)
        c = BlochObservable(1.0, np.array([0.0, 0.0, gamma])).to_observable()
        res = calibration_error(a, c)
        assert abs(res.value - math.sqrt(2 * (1 - gamma))) < 1e-6
        # schedule decreases onto the limit
        sups = [v for _, v in res.schedule]
        assert all(x >= y - 1e-9 for x, y in zip(sups, sups[1:]))
        assert sups[-1] >= res.value - 1e-9
        assert sups[-1] - res.value < 5e-3


def test_calibration_perfect_approximator_zero():
    a = spectral_measure(SIGMA_Z)
    res = calibration_error(a, Observable(a.outcomes, a.effects))
    assert res.value < 1e-12


def test_calibration_below_worst_case():
    rng = np.random.default_rng(16)
    for _ in range(5):
        avec = rng.uniform(-1, 1, 3)
        avec /= np.linalg.norm(avec)
        cvec = rng.uniform(-1, 1, 3)
        cvec /= np.linalg.norm(cvec) * rng.uniform(1.2, 3.0)
        a = spectral_measure(opalg.bloch_operator(avec))
        c = BlochObservable(1.0, cvec).to_observable()
        calib = calibration_error(a, c).value
        worst = w2_observables_worst(a, c).value
        assert calib <= worst + 1e-9


def test_calibration_grid_smearing():
    grid = GridSystem(256, 10.0)
    mu = Distribution([-0.5, 0.0, 0.5], [0.25, 0.5, 0.25])
    families = smeared_position_calibration_families(grid, mu, subsample=32)
    res = calibration_from_families(families)
    assert abs(res.value - math.sqrt(mu.moment(2))) < 1e-3


# --- report --------------------------------------------------------------------


def test_error_report_fields_and_invariant():
    rho = bloch_state([0.1, 0.2, 0.3])
    c = BlochObservable(1.0, np.array([0.0, 0.0, 0.7])).to_observable()
    rep = error_report(SIGMA_Z, c, rho)
    assert rep.eps_no**2 >= rep.intrinsic_noise_expectation - 1e-9
    assert abs(rep.intrinsic_noise_expectation - (1 - 0.49)) < 1e-10
    # mean deviation <C[x] - A>_rho = -0.3 <sigma_z>_rho
    assert abs(rep.bias - (-0.3 * 0.3)) < 1e-10
    assert abs(rep.w2_worst**2 - 2 * 0.3) < 1e-9
    assert rep.w2_state >= 0
    assert not rep.w2_worst_unbounded
