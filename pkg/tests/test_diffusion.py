import math

import numpy as np
import pytest

from common.errors import InputError, PreconditionError, UnsupportedConfigurationError
from common.stats import McEstimate, VerdictStatus
from comparison import ConditionId, ConditionReport
from diffusion import (
    RngSpec,
    classify_scale_increments,
    conservativeness_check,
    generator_check,
    ito_martingale_check,
    ito_residual,
    hitting_probability,
    kendall_check,
    lyapunov_check,
    moment_bound_check,
    quartic_envelope,
    recurrence_probe,
    recurrence_scan,
    scale_function_probability,
    second_moment_envelope,
    simulate,
    simulate_ensemble,
    step,
    weak_order_check,
)
from geometry import DriftField, EuclideanSpace, StereographicSpace

SEED = 7
ORIGIN2 = np.zeros(2)


def within(estimate, target, z=3.0, extra=0.0):
    return abs(estimate.mean - target) <= z * estimate.stderr + extra


@pytest.fixture(scope="module")
def example_two():
    """ℝ², f = log(1+|x|²): Δ_V r = 1/r − 2r/(1+r²)"""
    M = EuclideanSpace(2)
    return M, DriftField.from_potential("log(1+|x|^2)", M)


# ==================== 随机流与单条路径 ====================


def test_rng_spec_streams():
    a = RngSpec(master_seed=SEED, stream_id=3).generator().standard_normal(8)
    b = RngSpec(master_seed=SEED, stream_id=3).generator().standard_normal(8)
    c = RngSpec(master_seed=SEED, stream_id=4).generator().standard_normal(8)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_step_rejects_nonpositive_dt(plane):
    with pytest.raises(InputError):
        step(plane, None, ORIGIN2, ORIGIN2, 0.0)


def test_simulate_records_full_path(plane):
    path = simulate(plane, None, ORIGIN2, 1.0, 0.01, RngSpec(master_seed=SEED))
    assert len(path.times) == 101
    assert path.brownian_increments.shape == (100, 2)
    assert path.exited is None
    # 平直空间无漂移时 X_t = √2·W_t
    assert np.allclose(path.points[-1], math.sqrt(2.0) * path.brownian_increments.sum(axis=0))
    assert np.allclose(path.radial, np.linalg.norm(path.points, axis=1))


def test_ito_residual_of_square_norm(plane):
    path = simulate(plane, None, ORIGIN2, 0.5, 0.01, RngSpec(master_seed=SEED))
    res = ito_residual(path, plane, None, "|x|^2")
    expected = np.sum(path.points**2, axis=1) - 4.0 * path.times
    assert np.allclose(res, expected, atol=1e-10)


# ==================== 批量模拟 ====================


def test_ensemble_is_independent_of_worker_count(plane):
    kwargs = dict(t_end=0.2, dt=0.01, n_paths=1500, master_seed=SEED, batch_size=500)
    one = simulate_ensemble(plane, DriftField.linear([[1.0, 0.0], [0.0, 1.0]]), ORIGIN2, max_workers=1, **kwargs)
    three = simulate_ensemble(plane, DriftField.linear([[1.0, 0.0], [0.0, 1.0]]), ORIGIN2, max_workers=3, **kwargs)
    assert np.array_equal(one.points, three.points)
    assert np.array_equal(one.max_radial, three.max_radial)


def test_euclidean_second_moment(plane):
    ens = simulate_ensemble(plane, None, ORIGIN2, 1.0, 0.1, 20000, SEED)
    est = McEstimate.from_samples(ens.radial[-1] ** 2)
    assert within(est, 4.0)


def test_constant_drift_shifts_the_mean(plane):
    ens = simulate_ensemble(plane, DriftField.constant([1.0, 0.0]), ORIGIN2, 1.0, 0.05, 10000, SEED,
                            observe_times=[0.5, 1.0])
    for j, t in enumerate(ens.observe_times):
        assert within(McEstimate.from_samples(ens.points[j, :, 0]), -t)
        assert within(McEstimate.from_samples(ens.points[j, :, 1]), 0.0)


def test_stop_radius_freezes_paths(plane):
    ens = simulate_ensemble(plane, None, ORIGIN2, 1.0, 0.01, 2000, SEED, stop_radius=1.5)
    assert ens.exited.any()
    assert np.all(ens.radial[-1][ens.exited] >= 1.5)
    assert np.all(ens.radial[-1][~ens.exited] < 1.5)
    times = ens.exit_times[ens.exited]
    assert np.all((times > 0) & (times <= 1.0 + 1e-12))
    assert np.all(np.isnan(ens.exit_times[~ens.exited]))


def test_observe_times_must_be_multiples_of_dt(plane):
    with pytest.raises(InputError):
        simulate_ensemble(plane, None, ORIGIN2, 1.0, 0.1, 10, SEED, observe_times=[0.25])


# ==================== 生成元与鞅 ====================


def test_generator_check_on_hyperbolic_disk(hyperbolic_plane):
    V = DriftField.constant([0.5, -0.25])
    report = generator_check(hyperbolic_plane, V, "x_1^2 + x_1*x_2", np.array([0.2, 0.1]), 1e-4, 100000,
                             RngSpec(master_seed=SEED))
    assert report.status == VerdictStatus.PASS


def test_ito_martingale_check_flat(plane):
    report = ito_martingale_check(plane, None, np.array([0.5, 0.0]), ["|x|^2", "x_1"], 1.0, 0.01, 4000, SEED)
    assert report.status == VerdictStatus.PASS
    stats = {row.statistic for row in report.rows}
    assert "residual[|x|^2]" in stats


def test_weak_order_on_ornstein_uhlenbeck(plane):
    V = DriftField.linear([[1.0, 0.0], [0.0, 1.0]])
    report = weak_order_check(plane, V, "|x|^2", ORIGIN2, 1.0, [0.02, 0.01, 0.005], 20000, RngSpec(master_seed=SEED))
    assert report.status == VerdictStatus.PASS

    def euler_second_moment(dt):
        # m_{k+1} = (1−dt)²m_k + 4dt, m_0 = 0
        q = (1.0 - dt) ** 2
        return 4.0 * dt * (1.0 - q ** round(1.0 / dt)) / (1.0 - q)

    first = report.rows[0]
    expected = euler_second_moment(0.02) - euler_second_moment(0.01)
    assert abs(first.mean - expected) <= 4.0 * first.stderr + 1e-4


def test_weak_order_needs_halved_steps(plane):
    with pytest.raises(ValueError):
        weak_order_check(plane, None, "|x|^2", ORIGIN2, 1.0, [0.02, 0.01], 10, RngSpec(master_seed=SEED))


def test_kendall_decomposition_flat(plane):
    report = kendall_check(plane, None, np.array([3.0, 0.0]), [0.25, 0.5, 1.0], 1e-3, 2000, SEED)
    assert report.status == VerdictStatus.PASS
    assert len(report.rows) == 6


def test_kendall_decomposition_hyperbolic(hyperbolic_plane):
    x0 = np.array([math.tanh(0.5), 0.0])  # r = 1
    report = kendall_check(hyperbolic_plane, None, x0, [0.25, 0.5], 1e-3, 1000, SEED)
    assert report.status == VerdictStatus.PASS


def test_kendall_requires_empty_cut_locus(unit_sphere):
    with pytest.raises(UnsupportedConfigurationError):
        kendall_check(unit_sphere, None, np.array([0.3, 0.0]), [0.5], 0.01, 10, SEED)


# ==================== 矩上界 ====================


def test_second_moment_envelope_closed_form():
    # r0 = 0, D = 1: 𝔇(t) = 2e^{2t} − 2
    assert second_moment_envelope(0.0, 1.0, 1.0) == pytest.approx(12.778, abs=1e-3)
    for t in (0.1, 0.5, 2.0):
        assert second_moment_envelope(0.0, 1.0, t) == pytest.approx(2.0 * math.exp(2.0 * t) - 2.0, rel=1e-9)
    assert second_moment_envelope(1.5, 0.0, 2.0) == pytest.approx(2.25 + 4.0)


def test_quartic_envelope_closed_form():
    e = math.exp
    tail = (1 - e(-2)) / 2 - (1 - e(-4)) / 4 - (1 - 5 * e(-4)) / 8
    expected = 16.0 * (e(2) - 3.0) + 64.0 * e(4) * tail
    assert quartic_envelope(0.0, 1.0, 1.0) == pytest.approx(expected, rel=1e-7)
    # D = 0: r0⁴ + 12(r0²t + t²)
    assert quartic_envelope(1.0, 0.0, 1.0) == pytest.approx(1.0 + 12.0 * 2.0, rel=1e-9)


def test_moment_bound_flat(plane):
    report = moment_bound_check(plane, None, ORIGIN2, 1.0, [0.5, 1.0], 4000, SEED, dt=0.05)
    assert report.status == VerdictStatus.PASS
    assert len(report.rows) == 4


def test_moment_bound_requires_witness(plane):
    with pytest.raises(PreconditionError):
        moment_bound_check(plane, None, ORIGIN2, None, [1.0], 10, SEED)
    failed = ConditionReport(condition_id=ConditionId.B3, holds=False, witness_constant=1.0,
                             violation_points=[(1.0, 2.0)])
    with pytest.raises(PreconditionError):
        moment_bound_check(plane, None, ORIGIN2, failed, [1.0], 10, SEED)


def test_lyapunov_b1_is_sharp_in_flat_space(plane):
    # E r² = 4t 恰等于 r0² + 2(1+D)t, D = n − 1 = 1
    report = lyapunov_check(plane, None, ORIGIN2, 1.0, "B1", 1.0, 20000, SEED, dt=0.1)
    assert report.status in (VerdictStatus.BOUNDARY, VerdictStatus.PASS)
    assert report.rows[0].bound == pytest.approx(4.0)


@pytest.mark.parametrize("condition", ["B2", "B3"])
def test_lyapunov_b2_b3_flat(plane, condition):
    report = lyapunov_check(plane, None, ORIGIN2, 1.0, condition, 1.0, 4000, SEED, dt=0.05)
    assert report.status == VerdictStatus.PASS


def test_lyapunov_rejects_a_conditions(plane):
    with pytest.raises(ValueError):
        lyapunov_check(plane, None, ORIGIN2, 1.0, "A1", 1.0, 10, SEED)


def test_conservativeness_flat(plane):
    report = conservativeness_check(plane, None, ORIGIN2, 1.0, [4.0, 6.0, 8.0], 2000, SEED, dt=0.01)
    assert report.status == VerdictStatus.PASS
    fractions = [row.mean for row in report.rows]
    assert fractions == sorted(fractions, reverse=True)


# ==================== 递归性 ====================


@pytest.mark.parametrize("n, expected", [(2, 0.5), (3, 1.0 / 3.0)])
def test_two_boundary_probability_euclidean(n, expected):
    M = EuclideanSpace(n)
    est = recurrence_probe(M, None, 1.0, 4.0, 2.0, 4000, SEED, dt=1e-3)
    assert within(est, expected, extra=0.01)


def test_scale_function_probability_example_two(example_two):
    M, V = example_two
    for b, expected in ((4.0, 0.75321), (8.0, 0.93469), (16.0, 0.98317)):
        assert scale_function_probability(M, V, 1.0, b, 2.0) == pytest.approx(expected, abs=5e-5)


def test_scale_function_probability_flat():
    M = EuclideanSpace(3)
    assert scale_function_probability(M, None, 1.0, 4.0, 2.0) == pytest.approx(1.0 / 3.0, abs=1e-6)


def test_probe_matches_scale_function(example_two):
    M, V = example_two
    est = recurrence_probe(M, V, 1.0, 4.0, 2.0, 2000, SEED, dt=2e-3)
    assert within(est, scale_function_probability(M, V, 1.0, 4.0, 2.0), extra=0.01)


def test_probe_rejects_bad_annulus(plane):
    with pytest.raises(InputError):
        recurrence_probe(plane, None, 2.0, 4.0, 1.0, 10, SEED)


def test_step_budget_is_per_path(plane):
    # log(8)/log(16) = 0.75; 平均离开时间约 1500 步, 远低于默认预算
    est, censored = hitting_probability(plane, None, 1.0, 16.0, 2.0, 1000, SEED, dt=1e-2)
    assert censored == 0.0
    assert within(est, 0.75, extra=0.02)


def test_tight_step_budget_censors_paths(plane):
    _, censored = hitting_probability(plane, None, 1.0, 16.0, 2.0, 200, SEED, dt=1e-2, step_budget=20)
    assert censored > 0.5


def test_classify_scale_increments_exact_laws():
    b = [4.0, 8.0, 16.0, 32.0]
    planar = [math.log(x / 2.0) / math.log(x) for x in b]
    spatial = [(0.5 - 1.0 / x) / (1.0 - 1.0 / x) for x in b]
    assert classify_scale_increments(planar)[0] == "recurrent"
    label, _, ratio = classify_scale_increments(spatial)
    assert label == "transient"
    assert ratio == pytest.approx(0.5, rel=1e-9)
    assert classify_scale_increments([0.5, 0.4, 0.6])[0] == "inconclusive"


def test_recurrence_scan_example_two(example_two):
    M, V = example_two
    result = recurrence_scan(M, V, 1.0, 2.0, 4.0, 2, 1000, SEED, dt=5e-3)
    assert result.classification == "recurrent"
    assert result.b_values == [4.0, 8.0, 16.0]
    probs = [p.mean for p in result.probabilities]
    assert probs == sorted(probs)


def test_recurrence_scan_euclidean_three_space():
    M = EuclideanSpace(3)
    result = recurrence_scan(M, None, 0.5, 1.0, 2.0, 2, 4000, SEED, dt=5e-3)
    assert result.classification == "transient"
    assert result.ratio < 0.75
