import math

import numpy as np
import pytest

from bochner import SmoothMapSpec
from common.errors import (
    InputError,
    InvalidConfigurationError,
    NoConvergenceError,
    PreconditionError,
    UnsupportedConfigurationError,
)
from common.stats import VerdictStatus
from geometry import DriftField, EffectiveDimension, EuclideanSpace, StereographicSpace
from harmonic import (
    ConvexGauge,
    GrowthClass,
    GrowthProfile,
    build_lattice,
    classify_growth,
    discrete_laplacian_V,
    dump_grid,
    gradient_estimate_check,
    liouville_decay_demo,
    liouville_lower_bound_check,
    load_grid,
    recurrence_liouville_bridge,
    solve,
    solve_family,
    submartingale_phi_check,
)

SEED = 7
R1, R2, R3 = EuclideanSpace(1), EuclideanSpace(2), EuclideanSpace(3)
S2 = StereographicSpace(2, 1.0)
M_INF = EffectiveDimension(value="+inf", dim=2)


def angular_sine(x):
    x = np.asarray(x, dtype=float)
    return np.sin(np.arctan2(x[..., 1], x[..., 0]))[..., None]


def identity_1d(x):
    return np.asarray(x, dtype=float)


@pytest.fixture(scope="module")
def sphere_grid():
    """ℝ² 单位圆盘 → S², 边界 0.4·x (全纯, 因而调和)"""
    return solve(R2, S2, ["0.4*x_1", "0.4*x_2"], 1.0, 0.125)


# ==================== 格点 ====================


def test_lattice_boundary_points_lie_on_the_sphere():
    lat = build_lattice(R2, 1.0, 0.1)
    assert np.allclose(np.linalg.norm(lat.boundary_points, axis=-1), 1.0, atol=1e-12)
    assert lat.center_node() >= 0
    assert np.all(lat.lengths <= lat.spacing + 1e-15)


def test_lattice_rejects_bad_inputs():
    with pytest.raises(InputError):
        build_lattice(R2, -1.0, 0.1)
    with pytest.raises(InputError):
        build_lattice(R2, 1.0, 2.0)
    with pytest.raises(InputError):
        build_lattice(S2, 1.0, 0.1, center=[0.2, 0.0])


def test_solver_needs_gradient_drift():
    rotation = DriftField(2, lambda x: np.stack([-x[..., 1], x[..., 0]], axis=-1), name="rotation")
    with pytest.raises(UnsupportedConfigurationError):
        solve(R2, R1, angular_sine, 1.0, 0.25, V=rotation)


# ==================== 一维闭式解 ====================


def test_one_dimensional_identity():
    grid = solve(R1, R1, identity_1d, 0.5, 1.0 / 16, center=[0.5])
    assert grid.converged
    assert np.allclose(grid.values[:, 0], grid.nodes[:, 0], atol=1e-12)
    assert np.allclose(grid.energy_density(), 1.0, atol=1e-10)


def test_one_dimensional_constant_drift_closed_form():
    V = DriftField.constant([1.0])
    for h in (1.0 / 8, 1.0 / 16, 1.0 / 32):
        grid = solve(R1, R1, identity_1d, 0.5, h, V=V, center=[0.5])
        assert grid.converged
        exact = (1.0 - np.exp(grid.nodes[:, 0])) / (1.0 - math.e)
        assert np.allclose(grid.values[:, 0], exact, atol=1e-10)
        assert grid.values[grid.lattice.center_node(), 0] == pytest.approx(0.37754, abs=1e-5)


def test_one_dimensional_refinement_is_second_order():
    V = DriftField.from_potential("x_1**2", R1)
    # u(x) = ∫_0^x e^{s²} ds / ∫_0^1 e^{s²} ds, 取 x = 0.5 处
    s = np.linspace(0.0, 1.0, 200001)
    w = np.exp(s**2)
    cumulative = np.concatenate([[0.0], np.cumsum(0.5 * (w[1:] + w[:-1]) * np.diff(s))])
    exact = cumulative[100000] / cumulative[-1]
    errors = []
    for h in (1.0 / 8, 1.0 / 16, 1.0 / 32):
        grid = solve(R1, R1, identity_1d, 0.5, h, V=V, center=[0.5])
        errors.append(abs(grid.values[grid.lattice.center_node(), 0] - exact))
    assert 3.5 <= errors[0] / errors[1] <= 4.5
    assert 3.5 <= errors[1] / errors[2] <= 4.5


# ==================== 平面问题 ====================


def test_constant_boundary_gives_constant_map():
    grid = solve(R2, R2, [0.3, -0.2], 1.0, 0.125)
    assert grid.converged
    assert np.allclose(grid.values, [0.3, -0.2], atol=1e-12)
    assert np.allclose(grid.energy_density(), 0.0, atol=1e-20)


@pytest.mark.parametrize("a", [1.0, 8.0])
def test_angular_sine_extension(a):
    # 精确解 (r/a) sinθ = x_2/a; 边界按格点截断, 误差 O(h²)
    grid = solve(R2, R1, angular_sine, a, a / 64)
    assert grid.converged
    assert np.allclose(grid.values[:, 0], grid.nodes[:, 1] / a, atol=1e-3)
    assert grid.center_energy_density() == pytest.approx(1.0 / a**2, rel=1e-2)


def test_maximum_principle():
    grid = solve(R2, R2, ["x_1**3 - x_2", "sin(3*x_1)*x_2"], 1.0, 0.1)
    lo = grid.boundary_values.min(axis=0)
    hi = grid.boundary_values.max(axis=0)
    assert np.all(grid.values >= lo - 1e-12)
    assert np.all(grid.values <= hi + 1e-12)


def test_energy_nonincreasing_for_sphere_target():
    boundary = ["0.4*x_1", "0.3*x_1*x_2"]
    grid = solve(R2, S2, boundary, 1.0, 0.125)
    assert grid.converged
    E = np.array(grid.energies)
    assert np.all(np.diff(E) <= 1e-12 * E[0])

    plain = solve(R2, S2, boundary, 1.0, 0.125, preconditioner="none", max_iter=40)
    assert not plain.converged
    E = np.array(plain.energies)
    assert len(E) == 41
    assert np.all(np.diff(E) <= 1e-12 * E[0])


def test_plain_flow_accepts_converged_initial_guess(sphere_grid):
    again = solve(R2, S2, ["0.4*x_1", "0.4*x_2"], 1.0, 0.125, preconditioner="none", initial=sphere_grid.values)
    assert again.converged
    assert again.iterations == 0


def test_boundary_outside_regular_ball_is_rejected():
    with pytest.raises(InputError):
        solve(R2, S2, [1.2, 0.0], 1.0, 0.25)


def test_iterates_outside_regular_ball_are_projected():
    lat = build_lattice(R2, 1.0, 0.25)
    initial = np.tile([1.5, 0.0], (lat.n_nodes, 1))
    grid = solve(R2, S2, [0.3, 0.0], 1.0, 0.25, initial=initial)
    assert grid.projected
    assert grid.converged
    assert np.allclose(grid.values, [0.3, 0.0], atol=1e-6)


def test_step_halving_gives_up():
    lat = build_lattice(R2, 1.0, 0.25)
    with pytest.raises(NoConvergenceError):
        solve(R2, R1, angular_sine, 1.0, 0.25, preconditioner="none", eta=1e12, initial=np.zeros((lat.n_nodes, 1)))


def test_solve_family_keeps_order():
    grids = solve_family(R2, R1, angular_sine, [4.0, 1.0, 2.0], cells=8)
    assert [g.radius for g in grids] == [4.0, 1.0, 2.0]
    assert [g.spacing for g in grids] == [0.5, 0.125, 0.25]


# ==================== 插值与存档 ====================


def test_grid_interpolation_of_linear_solution():
    grid = solve(R2, R1, angular_sine, 1.0, 0.125)
    x = np.array([[0.13, -0.41], [0.0, 0.5], [-0.33, 0.27]])
    assert np.allclose(grid.evaluate(x)[:, 0], x[:, 1], atol=1e-9)
    assert np.allclose(grid.energy_density_at(x), 1.0, atol=1e-8)
    spline = grid.as_map_spec()
    origin = np.zeros((1, 2))
    assert abs(spline.evaluate(origin)[0, 0]) < 1e-3
    assert spline.jacobian(origin)[0, 0] == pytest.approx([0.0, 1.0], abs=1e-2)


def test_grid_file_round_trip(tmp_path):
    V = DriftField.from_potential("0.5*|x|^2", R2)
    grid = solve(R2, S2, ["0.4*x_1", "0.4*x_2"], 1.0, 0.25, V=V)
    path = dump_grid(grid, tmp_path / "grid.txt")
    back = load_grid(path)
    assert np.array_equal(back.values, grid.values)
    assert np.array_equal(back.boundary_values, grid.boundary_values)
    assert back.radius == grid.radius and back.spacing == grid.spacing
    assert back.converged == grid.converged and back.residual == grid.residual
    assert back.drift.gradient_potential.text == "0.5*|x|^2"
    assert back.regular_center == [0.0, 0.0]


def test_grid_file_version_mismatch(tmp_path):
    path = tmp_path / "old.txt"
    path.write_text("# vlaplace-grid 0\ndims 2 1\n", encoding="utf-8")
    with pytest.raises(InputError):
        load_grid(path)


# ==================== 增长类型 ====================

RADII = [1.0, 2.0, 4.0, 8.0, 16.0, 32.0]


@pytest.mark.parametrize(
    "profile, expected",
    [
        (lambda a: np.ones_like(a), GrowthClass.BOUNDED),
        (lambda a: np.log1p(a**2) ** 0.25, GrowthClass.G3),
        (lambda a: a**0.25, GrowthClass.G2),
        (lambda a: a**0.75, GrowthClass.G1),
        (lambda a: a, GrowthClass.SUPERLINEAR),
    ],
)
def test_growth_classes_from_profiles(profile, expected):
    a = np.array(RADII)
    result = classify_growth(profile(a).tolist(), RADII)
    assert result.growth_class == expected


def test_growth_class_implications():
    assert GrowthClass.BOUNDED.satisfies(GrowthClass.G1)
    assert GrowthClass.G3.satisfies(GrowthClass.G2)
    assert not GrowthClass.G1.satisfies(GrowthClass.G3)
    assert not GrowthClass.SUPERLINEAR.satisfies(GrowthClass.SUPERLINEAR)


def test_growth_rejects_bad_inputs():
    with pytest.raises(InputError):
        classify_growth([1.0, 2.0, 3.0], [1.0, 2.0, 4.0])
    with pytest.raises(InputError):
        classify_growth([3.0, 2.0, 1.0, 0.5], [1.0, 2.0, 4.0, 8.0])
    with pytest.raises(ValueError):
        GrowthProfile(radii=[1.0, 2.0], m_u=[2.0, 1.0], growth_class=GrowthClass.G1)


def test_growth_of_smooth_maps():
    identity = SmoothMapSpec.linear(np.eye(2), R2, R2)
    assert classify_growth(identity, RADII, n_samples=200).growth_class == GrowthClass.SUPERLINEAR
    constant = SmoothMapSpec.constant([0.5, 0.5], R2, R2)
    profile = classify_growth(constant, RADII, o=np.array([0.5, 0.5]), n_samples=200)
    assert profile.growth_class == GrowthClass.BOUNDED


# ==================== 梯度估计 ====================


def test_gradient_estimate_linear_map():
    u = SmoothMapSpec.linear([[1.0, 0.5], [0.0, 1.0]], R2, R2)
    report = gradient_estimate_check(u, None, M_INF, [1.0, 2.0, 4.0], witness=1.0, n_samples=500)
    assert report.status == VerdictStatus.PASS
    rho = [row.mean for row in report.rows]
    assert rho == sorted(rho, reverse=True)
    assert report.rows[0].bound == pytest.approx(rho[0])


def test_gradient_estimate_constant_map():
    u = SmoothMapSpec.constant([1.0, 2.0], R2, R2)
    report = gradient_estimate_check(u, None, M_INF, [1.0, 2.0], witness=0.0, n_samples=200)
    assert report.status == VerdictStatus.PASS
    assert all(row.mean == 0.0 for row in report.rows)


def test_gradient_estimate_on_grids():
    grids = solve_family(R2, R1, angular_sine, [1.0, 2.0, 4.0], cells=8)
    report = gradient_estimate_check(grids, None, M_INF, [0.5, 1.0, 2.0], witness=1.0)
    assert report.status == VerdictStatus.PASS
    for row, g in zip(report.rows, grids):
        assert row.mean == pytest.approx(0.25 / g.radius**2, rel=1e-6)


def test_gradient_estimate_needs_witness():
    u = SmoothMapSpec.linear(np.eye(2), R2, R2)
    with pytest.raises(PreconditionError):
        gradient_estimate_check(u, None, M_INF, [1.0, 2.0], witness=None)


# ==================== 凸规范函数与下鞅性 ====================


def test_gauge_is_strictly_convex_in_regular_ball():
    gauge = ConvexGauge(kappa=1.0, o=[0.0, 0.0], target=S2)
    assert gauge.regular_radius == pytest.approx(math.pi / 2)
    assert gauge.fit_convexity(n_geodesics=500) > 0
    assert gauge(np.zeros(2)) == pytest.approx(0.0)


def test_gauge_requires_matching_target():
    with pytest.raises(ValueError):
        ConvexGauge(kappa=2.0, o=[0.0, 0.0], target=S2)
    with pytest.raises(ValueError):
        ConvexGauge(kappa=1.0, o=[0.0, 0.0], target=R2)


def test_submartingale_holds_for_solved_map(sphere_grid):
    gauge = ConvexGauge(kappa=1.0, o=sphere_grid.regular_center, target=S2)
    assert np.min(discrete_laplacian_V(sphere_grid, gauge.evaluate)) > -1e-4
    report = submartingale_phi_check(sphere_grid, gauge, 400, SEED)
    assert report.status == VerdictStatus.PASS
    assert [row.statistic for row in report.rows][:2] == ["min_laplacian_phi", "increment_phi"]


def test_submartingale_fails_for_spiked_map(sphere_grid):
    gauge = ConvexGauge(kappa=1.0, o=[0.0, 0.0], target=S2)
    values = sphere_grid.values.copy()
    values[sphere_grid.lattice.center_node()] = [0.5, 0.0]
    report = submartingale_phi_check(sphere_grid.with_values(values), gauge, 100, SEED)
    assert report.rows[0].verdict == VerdictStatus.FAIL
    assert report.status == VerdictStatus.FAIL


def test_submartingale_rejects_flat_target():
    grid = solve(R2, R1, angular_sine, 1.0, 0.25)
    gauge = ConvexGauge(kappa=1.0, o=[0.0, 0.0], target=S2)
    with pytest.raises(InputError):
        submartingale_phi_check(grid, gauge, 10, SEED)


# ==================== 增长下界 ====================


def test_lower_bound_is_equality_for_linear_maps():
    u = SmoothMapSpec.linear([[1.0, 0.0], [0.5, 2.0]], R2, R2)
    report = liouville_lower_bound_check(u, None, M_INF, [0.1, 0.2, 0.5], 2000, SEED, x0=np.array([0.3, -0.1]))
    assert report.status == VerdictStatus.PASS
    for row in report.rows:
        if row.statistic == "growth":
            assert abs(row.mean - row.bound) <= 4.0 * row.stderr
        else:
            assert row.mean == pytest.approx(5.25)


def test_lower_bound_needs_hadamard_target():
    u = SmoothMapSpec.linear(0.1 * np.eye(2), R2, S2)
    with pytest.raises(PreconditionError):
        liouville_lower_bound_check(u, None, M_INF, [0.1], 10, SEED)


def test_lower_bound_flags_low_power_on_small_grid():
    grid = solve(R2, R1, angular_sine, 0.5, 0.125)
    report = liouville_lower_bound_check(grid, None, M_INF, [1.0], 200, SEED)
    assert report.status == VerdictStatus.LOW_POWER


# ==================== 衰减演示与递归性 ====================


def test_decay_demo_angular_sine():
    report = liouville_decay_demo(R2, R1, angular_sine, [1.0, 2.0, 4.0, 8.0], None, M_INF, cells=16)
    assert report.status == VerdictStatus.PASS
    densities = [row.mean for row in report.rows if row.statistic == "energy_density_center"]
    assert densities == pytest.approx([1.0, 0.25, 0.0625, 0.015625], rel=1e-4)
    slope = [row.mean for row in report.rows if row.statistic == "loglog_slope"][0]
    assert slope == pytest.approx(-2.0, abs=1e-4)


def test_decay_demo_constant_boundary():
    report = liouville_decay_demo(R2, R2, [0.1, 0.2], [1.0, 2.0], None, M_INF, cells=8)
    assert report.status == VerdictStatus.PASS
    assert "constant" in report.note


def test_decay_demo_rejects_effective_dimension():
    with pytest.raises(InvalidConfigurationError):
        liouville_decay_demo(R2, R1, angular_sine, [1.0, 2.0], None, EffectiveDimension(value=1.0, dim=2))


def test_bridge_for_recurrent_weighted_plane():
    V = DriftField.from_potential("log(1+|x|^2)", R2)

    def ring(x):
        x = np.asarray(x, dtype=float)
        return 0.3 * x / np.linalg.norm(x, axis=-1, keepdims=True)

    grids = solve_family(R2, S2, ring, [2.5, 5.0, 10.0], cells=8)
    gauge = ConvexGauge(kappa=1.0, o=[0.0, 0.0], target=S2)
    report = recurrence_liouville_bridge(
        R2, V, 1.0, 2.0, 4.0, 2, 1000, SEED, dt=5e-3, grids=grids, gauge=gauge
    )
    assert report.status == VerdictStatus.PASS
    assert "decays" in report.note
    osc = [row.mean for row in report.rows if row.statistic == "gauge_oscillation"]
    assert osc == sorted(osc, reverse=True)


def test_bridge_for_transient_three_space():
    report = recurrence_liouville_bridge(R3, None, 0.5, 1.0, 2.0, 2, 4000, SEED, dt=5e-3)
    assert report.status == VerdictStatus.PASS
    assert "persists" in report.note


def test_bridge_rejects_reference_shell_outside_annulus():
    with pytest.raises(InputError):
        recurrence_liouville_bridge(R2, None, 1.0, 2.0, 4.0, 1, 10, SEED, reference=(2.0, 5.0))
