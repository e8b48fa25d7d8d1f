import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from phaseest import measurement
from phaseest.measurement import TWO_PI, MeasurementSetting, circular_distance
from phaseest.schemes import (
    BlockProtocol,
    HybridMode,
    QPEAProtocol,
    SchemeConfig,
    SchemeKind,
    ThetaPolicy,
    combine_estimates,
    combiner_threshold,
    drive,
    make_protocol,
    n_measurements,
    repetitions,
    run_fixed_m,
    run_hybrid,
    run_nonadaptive,
    run_qpea,
    run_scheme,
    run_standard,
    standard_estimate,
    total_resources,
)

SMALL_CONFIGS = [
    SchemeConfig(SchemeKind.STANDARD, N_S=8),
    SchemeConfig(SchemeKind.QPEA, K=3),
    SchemeConfig(SchemeKind.QPEA, K=2, randomize_reference=True),
    SchemeConfig(SchemeKind.HYBRID, K=2),
    SchemeConfig(SchemeKind.HYBRID, K=2, hybrid_mode=HybridMode.COMBINER),
    SchemeConfig(SchemeKind.HYBRID, K=2, randomize_reference=True),
    SchemeConfig(SchemeKind.NONADAPTIVE, K=2, M_K=2, mu=3),
    SchemeConfig(SchemeKind.NONADAPTIVE, K=2, M_K=2, mu=1, theta_policy=ThetaPolicy.ALTERNATE),
    SchemeConfig(SchemeKind.FIXEDM, K=3, M_K=2),
]


@pytest.mark.parametrize(
    "cfg, expected",
    [
        (SchemeConfig(SchemeKind.QPEA, K=5), 63),
        (SchemeConfig(SchemeKind.HYBRID, K=5, N_S=32), 95),
        (SchemeConfig(SchemeKind.HYBRID, K=5), 95),
        (SchemeConfig(SchemeKind.NONADAPTIVE, K=5, M_K=2, mu=3), 297),
        (SchemeConfig(SchemeKind.FIXEDM, K=2, M_K=1), 7),
        (SchemeConfig(SchemeKind.STANDARD, N_S=10), 10),
    ],
)
def test_total_resources(cfg, expected):
    assert total_resources(cfg) == expected


def test_nonadaptive_counts():
    cfg = SchemeConfig(SchemeKind.NONADAPTIVE, K=5, M_K=2, mu=3)
    assert repetitions(cfg)[::-1] == [2, 5, 8, 11, 14, 17]
    assert repetitions(cfg) == [17, 14, 11, 8, 5, 2]


@pytest.mark.parametrize("K", range(1, 9))
def test_hybrid_resource_formula(K):
    assert total_resources(SchemeConfig(SchemeKind.HYBRID, K=K)) == 3 * 2 ** K - 1


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(kind=SchemeKind.FIXEDM, K=2, M_K=2, mu=1),
        dict(kind=SchemeKind.HYBRID, K=0),
        dict(kind=SchemeKind.STANDARD),
        dict(kind=SchemeKind.STANDARD, N_S=7),
        dict(kind=SchemeKind.NONADAPTIVE, K=2, randomize_reference=True),
        dict(kind=SchemeKind.HYBRID, K=2, N_S=5, hybrid_mode=HybridMode.COMBINER),
    ],
)
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        SchemeConfig(**kwargs)


def test_standard_estimator_examples():
    assert standard_estimate(1.0, 0.5)[0] == pytest.approx(0.0)
    assert standard_estimate(0.5, 1.0)[0] == pytest.approx(math.pi / 2)
    assert bool(standard_estimate(0.5, 0.5)[1])


def test_combiner_example():
    assert combine_estimates(0.0, 0.01, 0.1) == pytest.approx(0.01)
    assert combine_estimates(0.0, 1.0, 0.1) == pytest.approx(0.0)
    assert combine_estimates(0.05, TWO_PI - 0.05, 0.1) == pytest.approx(TWO_PI - 0.05)


def test_combiner_threshold():
    assert combiner_threshold(32) == pytest.approx((math.pi / 3) * math.sqrt(min(32, 32 / 3 * math.log(32)) / 32))


def test_qpea_k0_zero_phase(rng):
    sample = run_qpea(0, 0.0, rng)
    assert sample.phi_est == 0.0
    assert sample.n_resources == 1


@pytest.mark.parametrize("K", range(0, 6))
def test_qpea_exact_on_binary_fractions(K):
    rng = np.random.default_rng(K)
    n = 2 ** (K + 1)
    for j in range(n):
        phi = TWO_PI * j / n
        assert circular_distance(run_qpea(K, phi, rng).phi_est, phi) < 1e-12


def test_qpea_digit_sequence():
    # 5pi/4 = 2pi * 0.101 in binary: least significant digit first
    rng = np.random.default_rng(0)
    est, _, history = drive(QPEAProtocol(2), 5 * math.pi / 4, rng)
    assert history == [1, 0, 1]
    assert est == pytest.approx(5 * math.pi / 4)


@pytest.mark.parametrize("cfg", SMALL_CONFIGS, ids=lambda c: f"{c.kind.value}-{c.K}")
def test_resource_exactness(cfg, monkeypatch):
    used = []
    original = measurement.sample_outcome

    def counting(phi, s, rng):
        used.append(s.p)
        return original(phi, s, rng)

    monkeypatch.setattr(measurement, "sample_outcome", counting)
    sample = run_scheme(cfg, 1.234, np.random.default_rng(1))
    assert sum(used) == total_resources(cfg) == sample.n_resources
    assert len(used) == n_measurements(cfg)


def test_nonadaptive_settings_independent_of_outcomes(monkeypatch):
    cfg = SchemeConfig(SchemeKind.NONADAPTIVE, K=3, M_K=2, mu=3)
    plan = make_protocol(cfg).plan
    original = measurement.sample_outcome
    for phi in (0.1, 2.0, 4.5):
        seen = []

        def recording(phi_true, s, rng):
            seen.append(s)
            return original(phi_true, s, rng)

        monkeypatch.setattr(measurement, "sample_outcome", recording)
        run_scheme(cfg, phi, np.random.default_rng(int(phi * 10)))
        assert seen == plan


def test_block_plan_theta():
    proto = BlockProtocol([3, 2], ThetaPolicy.INCREMENT)
    assert [s.p for s in proto.plan] == [1, 1, 1, 2, 2]
    assert [s.theta for s in proto.plan] == pytest.approx([0, math.pi / 3, 2 * math.pi / 3, 0, math.pi / 2])
    alt = BlockProtocol([3], ThetaPolicy.ALTERNATE)
    assert [s.theta for s in alt.plan] == pytest.approx([0, math.pi / 2, 0])


@settings(max_examples=25)
@given(st.sampled_from(SMALL_CONFIGS), st.floats(0.0, TWO_PI, exclude_max=True),
       st.floats(-5.0, 5.0), st.integers(0, 2 ** 32 - 1))
def test_global_covariance(cfg, phi, shift, seed):
    # shifting the true phase and every control phase together shifts the estimate
    a = run_scheme(cfg, phi, np.random.default_rng(seed))
    b = run_scheme(cfg, phi + shift, np.random.default_rng(seed), reference=shift)
    assert circular_distance(b.phi_est, a.phi_est + shift) < 1e-9


def test_standard_chernoff_example():
    rng = np.random.default_rng(11)
    errs = np.array([circular_distance(run_standard(1000, 0.8, rng).phi_est, 0.8) for _ in range(400)])
    # each frequency is within 0.1 of its mean with overwhelming probability
    assert np.quantile(errs, 0.99) < 0.2


def test_standard_requires_even():
    with pytest.raises(ValueError):
        run_standard(5, 0.1, np.random.default_rng(0))


def test_runner_wrappers(rng):
    assert run_hybrid(5, 0.3, rng).n_resources == 95
    assert run_hybrid(2, 0.3, rng, mode=HybridMode.COMBINER).n_resources == 11
    assert run_nonadaptive(5, 2, 3, 0.3, rng).n_resources == 297
    assert run_fixed_m(2, 1, 0.3, rng).n_resources == 7


def test_randomized_reference_draw_order():
    # the offset is the first draw, then one uniform per measurement
    cfg = SchemeConfig(SchemeKind.QPEA, K=2, randomize_reference=True)
    sample = run_scheme(cfg, 0.9, np.random.default_rng(4))
    rng = np.random.default_rng(4)
    xi = TWO_PI * rng.random()
    est, _, _ = drive(QPEAProtocol(2, xi), 0.9, rng)
    assert sample.phi_est == pytest.approx(est)


def test_setting_type():
    proto = make_protocol(SchemeConfig(SchemeKind.HYBRID, K=1))
    assert isinstance(proto.setting([]), MeasurementSetting)
    assert proto.setting([]).p == 2
