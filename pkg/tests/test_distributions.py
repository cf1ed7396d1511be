import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qmu.distributions import (
    Coupling,
    Distribution,
    cauchy_schwarz_bounds,
    convolve,
    delta,
    make_distribution,
    w2_lp_oracle,
    w2_quantile,
)


def random_distribution(rng, max_support=10, span=4.0):
    k = int(rng.integers(1, max_support + 1))
    support = np.sort(rng.uniform(-span, span, size=k))
    while np.any(np.diff(support) <= 1e-6):
        support = np.sort(rng.uniform(-span, span, size=k))
    probs = rng.dirichlet(np.ones(k))
    return Distribution(support, probs)


def test_point_measures():
    val, coupling = w2_quantile(delta(1.5), delta(-2.0))
    assert abs(val - 3.5) < 1e-15
    coupling.check_marginals(delta(1.5), delta(-2.0))


def test_translation_distance():
    rng = np.random.default_rng(1)
    mu = random_distribution(rng)
    nu = mu.translate(0.7)
    val, _ = w2_quantile(mu, nu)
    assert abs(val - 0.7) < 1e-12


def test_point_vs_two_point():
    # Unique product coupling with a point measure: cost = 0.5*(0-0)^2 + 0.5*(2-0)^2 = 2.
    nu = Distribution([0.0, 2.0], [0.5, 0.5])
    val, coupling = w2_quantile(delta(0.0), nu)
    assert abs(val**2 - 2.0) < 1e-14
    coupling.check_marginals(delta(0.0), nu)


def test_coupling_attains_value():
    rng = np.random.default_rng(2)
    for _ in range(50):
        mu, nu = random_distribution(rng), random_distribution(rng)
        val, coupling = w2_quantile(mu, nu)
        coupling.check_marginals(mu, nu)
        assert abs(coupling.cost() - val**2) < 1e-12


def test_quantile_matches_exact_lp():
    # The LP oracle IS the independent route; agreement certifies the closed form.
    rng = np.random.default_rng(3)
    for _ in range(200):
        mu = random_distribution(rng, max_support=3)
        nu = random_distribution(rng, max_support=3)
        val, _ = w2_quantile(mu, nu)
        assert abs(val - w2_lp_oracle(mu, nu)) < 1e-9


def test_lp_oracle_float_path():
    rng = np.random.default_rng(4)
    for _ in range(5):
        mu = random_distribution(rng, max_support=30)
        nu = random_distribution(rng, max_support=30)
        if mu.support.size <= 16 and nu.support.size <= 16:
            continue
        val, _ = w2_quantile(mu, nu)
        assert abs(val - w2_lp_oracle(mu, nu)) < 1e-8


def test_lp_oracle_scale_guard():
    support = np.arange(65.0)
    probs = np.full(65, 1 / 65)
    with pytest.raises(ValueError):
        w2_lp_oracle(Distribution(support, probs), delta(0.0))


def test_identical_distributions_zero():
    rng = np.random.default_rng(5)
    mu = random_distribution(rng)
    assert w2_quantile(mu, mu)[0] == 0.0
    assert w2_lp_oracle(mu, mu) < 1e-12


def test_metric_axioms():
    rng = np.random.default_rng(6)
    for _ in range(100):
        mu, nu, rho = (random_distribution(rng) for _ in range(3))
        dmn, _ = w2_quantile(mu, nu)
        dnm, _ = w2_quantile(nu, mu)
        assert abs(dmn - dnm) < 1e-9
        dmr, _ = w2_quantile(mu, rho)
        drn, _ = w2_quantile(rho, nu)
        assert dmn <= dmr + drn + 1e-9
    # identity of indiscernibles
    mu = random_distribution(rng)
    shifted = mu.translate(1e-3)
    assert w2_quantile(mu, shifted)[0] > 0


def test_scale_covariance_and_translation_invariance():
    rng = np.random.default_rng(7)
    mu, nu = random_distribution(rng), random_distribution(rng)
    base, _ = w2_quantile(mu, nu)
    for lam in (0.5, 2.0, 3.7):
        scaled, _ = w2_quantile(mu.scale(lam), nu.scale(lam))
        assert abs(scaled - lam * base) < 1e-9
    shifted, _ = w2_quantile(mu.translate(2.2), nu.translate(2.2))
    assert abs(shifted - base) < 1e-12


def test_cauchy_schwarz_sandwich_random():
    rng = np.random.default_rng(8)
    attain_failures = 0
    for _ in range(300):
        mu, nu = random_distribution(rng), random_distribution(rng)
        val, _ = w2_quantile(mu, nu)
        lower, upper = cauchy_schwarz_bounds(mu, nu)
        assert val**2 >= lower - 1e-9
        assert val**2 <= upper + 1e-9
        if abs(val**2 - lower) > 1e-9:
            attain_failures += 1
    # Lower-branch attainment by the quantile coupling is not asserted;
    # report how often it fails for the record.
    print(f"lower-bound attainment failures: {attain_failures}/300")


def test_convolution_against_bruteforce():
    rng = np.random.default_rng(9)
    mu, nu = random_distribution(rng, 4), random_distribution(rng, 5)
    conv = convolve(mu, nu)
    table = {}
    for x, p in zip(mu.support, mu.probs):
        for y, q in zip(nu.support, nu.probs):
            table[round(x + y, 12)] = table.get(round(x + y, 12), 0.0) + p * q
    assert abs(conv.probs.sum() - 1.0) < 1e-12
    assert abs(conv.mean - (mu.mean + nu.mean)) < 1e-12
    assert abs(conv.variance - (mu.variance + nu.variance)) < 1e-12
    for v, p in table.items():
        idx = np.argmin(np.abs(conv.support - v))
        assert abs(conv.support[idx] - v) < 1e-9


def test_make_distribution_merges():
    d = make_distribution([1.0, 1.0 + 1e-12, 2.0], [0.25, 0.25, 0.5])
    assert d.support.size == 2
    np.testing.assert_allclose(d.probs, [0.5, 0.5])


def test_validation_errors():
    with pytest.raises(ValueError):
        Distribution([1.0, 0.5], [0.5, 0.5])
    with pytest.raises(ValueError):
        Distribution([0.0, 1.0], [0.7, 0.7])
    with pytest.raises(ValueError):
        Coupling([0.0], [0.0, 1.0], np.array([[0.5, -0.5]]))


@st.composite
def finite_distributions(draw):
    k = draw(st.integers(min_value=1, max_value=6))
    vals = draw(
        st.lists(
            st.floats(min_value=-10, max_value=10, allow_nan=False),
            min_size=k,
            max_size=k,
            unique_by=lambda x: round(x, 3),
        )
    )
    weights = draw(
        st.lists(st.floats(min_value=0.01, max_value=1.0), min_size=k, max_size=k)
    )
    total = sum(weights)
    return make_distribution(vals, [w / total for w in weights], merge_tol=1e-3)


@settings(max_examples=200, deadline=None, derandomize=True)
@given(finite_distributions(), finite_distributions())
def test_property_quantile_equals_lp_and_bounds(mu, nu):
    val, coupling = w2_quantile(mu, nu)
    assert abs(val - w2_lp_oracle(mu, nu)) < 1e-9
    coupling.check_marginals(mu, nu)
    lower, upper = cauchy_schwarz_bounds(mu, nu)
    assert lower - 1e-9 <= val**2 <= upper + 1e-9


@settings(max_examples=100, deadline=None, derandomize=True)
@given(finite_distributions())
def test_property_self_distance_zero(mu):
    assert w2_quantile(mu, mu)[0] == 0.0


def test_std_minimizes_point_deviation():
    rng = np.random.default_rng(10)
    mu = random_distribution(rng)
    assert abs(mu.deviation_from_point(mu.mean) - mu.std) < 1e-12
    for y in np.linspace(-5, 5, 11):
        assert mu.deviation_from_point(y) >= mu.std - 1e-12
