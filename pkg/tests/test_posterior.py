import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from phaseest.measurement import TWO_PI, MeasurementSetting, likelihood
from phaseest.posterior import (
    DegenerateEstimate,
    PhasePosterior,
    batch_estimates,
    bayes_update,
    estimate_with_flag,
    fallback_estimate,
    grid_density,
    grid_estimate,
    point_estimate,
    posterior_from,
    uniform_prior,
    update_moments,
)

QUAD = 4096
quad_phi = TWO_PI * np.arange(QUAD) / QUAD

measurement_lists = st.lists(
    st.tuples(st.integers(1, 16), st.floats(0.0, TWO_PI, exclude_max=True), st.integers(0, 1)),
    min_size=1,
    max_size=12,
)


def quadrature_moments(density_values, mmax):
    w = density_values / density_values.sum()
    return np.array([np.sum(w * np.exp(1j * m * quad_phi)) for m in range(mmax + 1)])


def product_density(meas):
    dens = np.ones(QUAD)
    for s, u in meas:
        dens = dens * likelihood(u, quad_phi, s)
    return dens / (dens.mean() * TWO_PI)


def as_settings(raw):
    return [(MeasurementSetting(p, th), u) for p, th, u in raw]


def test_uniform_prior():
    post = uniform_prior()
    assert np.allclose(post.density([0.0, 1.0, 5.0]), 1 / TWO_PI)
    assert post.holevo_width() == math.inf
    with pytest.raises(DegenerateEstimate):
        point_estimate(post)


def test_single_update():
    post = bayes_update(uniform_prior(), 0, MeasurementSetting(1, 0.0))
    assert post.first_moment == pytest.approx(0.5)
    phi = np.linspace(0, TWO_PI, 17)
    assert np.allclose(post.density(phi), (1 + np.cos(phi)) / TWO_PI)
    assert point_estimate(post) == pytest.approx(0.0)


def test_shifted_update_estimate():
    post = bayes_update(uniform_prior(), 0, MeasurementSetting(1, 1.0))
    assert point_estimate(post) == pytest.approx(1.0)


def test_double_pass_ambiguity():
    post = bayes_update(uniform_prior(), 0, MeasurementSetting(2, 0.0))
    assert post.first_moment == 0
    assert abs(post.coeffs[2]) == pytest.approx(0.5)


def test_opposite_updates_give_sin_squared():
    # (1 + cos)(1 - cos) = sin^2: first moment vanishes, c_2 = <cos 2phi> = -1/2
    meas = [(MeasurementSetting(1, 0.0), 0), (MeasurementSetting(1, math.pi), 0)]
    post = posterior_from(meas)
    quad = quadrature_moments(np.sin(quad_phi) ** 2, 2)
    assert abs(quad[1]) < 1e-12
    assert quad[2] == pytest.approx(-0.5, abs=1e-12)
    assert post.coeffs[1] == pytest.approx(quad[1], abs=1e-12)
    assert post.coeffs[2] == pytest.approx(quad[2], abs=1e-12)
    assert np.allclose(post.density(quad_phi), np.sin(quad_phi) ** 2 / math.pi)


def test_bad_outcome_rejected():
    post = bayes_update(uniform_prior(), 0, MeasurementSetting(1, 0.0))
    with pytest.raises(ValueError):
        bayes_update(post, 3, MeasurementSetting(1, 0.0))


@given(measurement_lists)
def test_matches_grid_product(raw):
    meas = as_settings(raw)
    post = posterior_from(meas)
    exact = product_density(meas)
    got = post.density(quad_phi)
    assert np.max(np.abs(got - exact)) <= 1e-8 * np.max(exact)


@given(measurement_lists)
def test_conservation_and_degree(raw):
    meas = as_settings(raw)
    post = uniform_prior()
    bound = 0
    for s, u in meas:
        post = bayes_update(post, u, s)
        bound += s.p
        assert post.coeffs[0] == 1.0
        assert post.degree <= bound
        assert np.all(np.abs(post.coeffs) <= 1.0 + 1e-12)
    assert post.density(quad_phi).mean() * TWO_PI == pytest.approx(1.0, abs=1e-10)


@given(measurement_lists, st.floats(-10.0, 10.0))
def test_covariance(raw, shift):
    # moving every control phase by p*a rotates the posterior by a
    meas = as_settings(raw)
    moved = [(MeasurementSetting(s.p, s.theta + s.p * shift), u) for s, u in meas]
    a, b = posterior_from(meas), posterior_from(moved)
    m = np.arange(a.coeffs.size)
    assert np.allclose(b.coeffs[: a.coeffs.size], a.coeffs * np.exp(1j * m * shift), atol=1e-10)


@given(measurement_lists)
def test_grid_estimate_agrees(raw):
    meas = as_settings(raw)
    post = posterior_from(meas)
    c1 = post.first_moment
    if abs(c1) < 1e-6:
        return
    diff = abs(np.angle(np.exp(1j * (grid_estimate(meas, 1024) - point_estimate(post)))))
    assert diff < 1e-8


def test_grid_density_normalised():
    meas = [(MeasurementSetting(3, 0.4), 1), (MeasurementSetting(1, 2.0), 0)]
    dens = grid_density(meas, 512)
    assert dens.mean() * TWO_PI == pytest.approx(1.0)


def test_fallback_estimate():
    post = bayes_update(uniform_prior(), 0, MeasurementSetting(2, 1.0))
    est, flag = estimate_with_flag(post)
    assert flag
    assert est == pytest.approx(0.5)
    assert fallback_estimate([1.0]) == 0.0


def test_batch_update_matches_scalar():
    rng = np.random.default_rng(5)
    T, steps = 6, 8
    c = np.zeros((T, 60), dtype=complex)
    c[:, 0] = 1.0
    degree = 0
    scalar = [uniform_prior() for _ in range(T)]
    for _ in range(steps):
        p = int(rng.integers(1, 6))
        theta = rng.uniform(0, TWO_PI, T)
        u = rng.integers(0, 2, T)
        degree = update_moments(c, degree, 1.0 - 2.0 * u, p, theta)
        scalar = [bayes_update(post, int(u[i]), MeasurementSetting(p, theta[i])) for i, post in enumerate(scalar)]
    for i, post in enumerate(scalar):
        assert np.allclose(c[i, : post.coeffs.size], post.coeffs, atol=1e-13)
    est, deg = batch_estimates(c)
    assert not deg.any()
    assert np.allclose(est, [point_estimate(p) for p in scalar])


def test_posterior_is_immutable():
    post = PhasePosterior(np.array([1.0, 0.5]), 1)
    with pytest.raises(ValueError):
        post.coeffs[0] = 2.0
