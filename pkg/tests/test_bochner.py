import csv
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from bochner import (
    SmoothMapSpec,
    bochner_coefficient,
    bochner_lower_bound_check,
    bochner_residual,
    bochner_rows_csv,
    bochner_terms,
    distance_laplacian_check,
    hilbert_trace_check,
    map_differential,
    orthonormal_frame,
    refinement_order,
    scalar_bochner_check,
    tension_field,
)
from common.errors import (
    ChartDomainError,
    InputError,
    InvalidConfigurationError,
    PreconditionError,
    UnsupportedConfigurationError,
)
from common.stats import VerdictStatus
from geometry import DriftField, EffectiveDimension, EuclideanSpace, RotationallySymmetricSpace, StereographicSpace

R1, R2, R3 = EuclideanSpace(1), EuclideanSpace(2), EuclideanSpace(3)
H2 = StereographicSpace(2, -1.0)
S2 = StereographicSpace(2, 1.0)


def dim(value, n=2):
    return EffectiveDimension(value=value, dim=n)


# ==================== du 与 |du|² ====================


def test_identity_energy_density():
    u = SmoothMapSpec.linear(np.eye(3), R3, R3)
    assert map_differential(u, np.array([0.3, -1.0, 2.0])).squared_norm == pytest.approx(3.0)


def test_linear_map_energy_is_frobenius_norm():
    A = [[1.0, 0.0], [1.0, 1.0], [0.0, 2.0]]
    u = SmoothMapSpec.linear(A, R2, R3)
    assert map_differential(u, np.array([0.5, 0.5])).squared_norm == pytest.approx(7.0)


def test_identity_into_hyperbolic_disk_uses_conformal_factor():
    u = SmoothMapSpec(domain=R2, target=H2, fn=lambda x: np.asarray(x, dtype=float))
    for x in (np.array([0.1, 0.2]), np.array([-0.5, 0.3])):
        lam = float(H2.conformal_factor(x))
        assert map_differential(u, x).squared_norm == pytest.approx(2.0 * lam**2, rel=1e-4)


def test_image_outside_target_chart():
    u = SmoothMapSpec.from_expressions(["x_1", "x_2"], R2, H2)
    with pytest.raises(ChartDomainError):
        map_differential(u, np.array([1.5, 0.0]))


def test_orthonormal_frame_is_upper_triangular():
    x = np.array([0.2, -0.4])
    E = orthonormal_frame(H2, x)
    assert np.allclose(E.T @ H2.metric(x) @ E, np.eye(2), atol=1e-12)
    assert E[1, 0] == 0.0


def test_map_needs_one_component_per_target_dimension():
    with pytest.raises(InputError):
        SmoothMapSpec.from_expressions(["x_1"], R2, R2)


# ==================== 张力场 ====================


def test_linear_map_has_no_tension():
    u = SmoothMapSpec.linear([[1.0, 2.0], [0.0, 1.0], [3.0, -1.0]], R2, R3)
    assert np.allclose(tension_field(u, None, np.array([0.4, 0.1])), 0.0)


def test_radial_drift_tension():
    u = SmoothMapSpec.linear(np.eye(2), R2, R2)
    V = DriftField.linear([[1.0, 0.0], [0.0, 1.0]])
    assert np.allclose(tension_field(u, V, np.array([1.0, 0.0])), [-1.0, 0.0])


def test_exponential_is_v_harmonic_on_the_line():
    u = SmoothMapSpec.from_expressions(["exp(2*x_1)"], R1, R1)
    tau = tension_field(u, DriftField.constant([2.0]), np.array([[0.3], [-1.0]]))
    assert np.allclose(tau, 0.0, atol=1e-12)


# ==================== Bochner 恒等式 ====================


def test_residual_vanishes_for_linear_maps():
    u = SmoothMapSpec.linear([[1.0, 2.0], [-1.0, 0.5]], R2, R2)
    assert abs(bochner_residual(u, None, np.array([0.3, 0.7]))) < 1e-8


def test_residual_quadratic_map():
    u = SmoothMapSpec.from_expressions(["x_1^2", "x_2"], R2, R2)
    terms = bochner_terms(u, None, np.array([0.3, 0.7]))
    assert float(terms.lhs) == pytest.approx(4.0, abs=1e-6)
    assert float(terms.hessian) == pytest.approx(4.0)
    assert abs(float(terms.residual)) < 1e-3


def test_residual_scalar_case_with_gradient_drift():
    V = DriftField.from_potential("|x|^2", R2)
    u = SmoothMapSpec.from_expressions(["x_1*x_2"], R2, R1)
    for x in (np.array([0.3, 0.7]), np.array([-1.2, 0.4])):
        assert abs(bochner_residual(u, V, x)) < 1e-6


@pytest.mark.parametrize("target", [H2, S2], ids=["hyperbolic", "sphere"])
def test_residual_with_curved_target(target):
    u = SmoothMapSpec.from_expressions(["0.3*sin(x_1)", "0.2*x_1*x_2"], R2, target)
    V = DriftField.constant([0.5, -1.0])
    assert abs(bochner_residual(u, V, np.array([0.4, 0.5]))) < 1e-6


def test_residual_with_curved_domain():
    u = SmoothMapSpec.from_expressions(["x_1 + x_2^2", "x_1*x_2"], H2, R2)
    assert abs(bochner_residual(u, None, np.array([0.2, -0.3]))) < 1e-6


def test_rotational_target_is_unsupported():
    target = RotationallySymmetricSpace(2, "sinh(r)")
    u = SmoothMapSpec.linear(np.eye(2), R2, target)
    with pytest.raises(UnsupportedConfigurationError):
        bochner_residual(u, None, np.array([0.1, 0.1]))


def test_residual_converges_under_step_refinement():
    u = SmoothMapSpec.from_expressions(["sin(x_1) + x_2^2", "exp(0.5*x_1)*cos(x_2)"], R2, R2)
    order = refinement_order(u, DriftField.constant([0.5, 0.0]), np.array([0.3, 0.2]), steps=(0.2, 0.1, 0.05))
    assert order >= 1.5


# ==================== Hilbert 迹不等式 ====================


def test_hilbert_trace_equality_case():
    result = hilbert_trace_check(np.eye(2))
    assert result.lhs == pytest.approx(2.0)
    assert result.rhs == pytest.approx(2.0)
    assert result.passed


def test_hilbert_trace_random_vector_valued(rng):
    for _ in range(1000):
        A = rng.standard_normal((3, 3, 5))
        h = A + np.swapaxes(A, 0, 1)
        assert hilbert_trace_check(h).passed


@settings(max_examples=200, deadline=None)
@given(arrays(np.float64, (4, 4), elements=st.floats(-10, 10)))
def test_hilbert_trace_scalar_property(a):
    assert hilbert_trace_check(a + a.T).passed


def test_hilbert_trace_with_null_multiplicity(rng):
    v = np.array([1.0, 2.0, -1.0]) / math.sqrt(6.0)
    P = np.eye(3) - np.outer(v, v)
    for _ in range(100):
        layers = []
        for _ in range(4):
            A = rng.standard_normal((3, 3))
            layers.append(P @ (A + A.T) @ P)
        h = np.stack(layers, axis=-1)
        result = hilbert_trace_check(h, k=1)
        assert result.passed
        assert result.rhs == pytest.approx(np.sum(np.einsum("iil->l", h) ** 2) / 2.0)


def test_hilbert_trace_rejects_bad_input():
    with pytest.raises(InputError):
        hilbert_trace_check(np.array([[1.0, 2.0], [0.0, 1.0]]))
    with pytest.raises(InputError):
        hilbert_trace_check(np.eye(3), k=1)


# ==================== 推论 ====================


def test_bochner_coefficient_values():
    assert bochner_coefficient(dim(0)) == 0.0
    assert bochner_coefficient(dim("-inf")) == pytest.approx(1.0)
    assert bochner_coefficient(dim(-1)) == pytest.approx(1.0 / 3.0)
    assert bochner_coefficient(dim(4)) == pytest.approx(2.0)


def test_lower_bound_for_affine_map():
    u = SmoothMapSpec.linear([[1.0, 2.0], [0.5, -1.0]], R2, R2, b=[1.0, 1.0])
    report = bochner_lower_bound_check(u, None, dim("-inf"), [[0.1, 0.2], [1.0, -2.0]])
    assert report.status == VerdictStatus.PASS
    assert all(abs(row.lhs) < 1e-4 and row.rhs == 0.0 for row in report.rows)


@pytest.mark.parametrize("m", [0, -1, "-inf"])
def test_lower_bound_for_exponential_harmonic_function(m, rng):
    # u = (1 − e^{x_1})/(1 − e) 满足 u'' − u' = 0, V = (1, 0)
    u = SmoothMapSpec.from_expressions(["(1-exp(x_1))/(1-exp(1))"], R2, R1)
    V = DriftField.constant([1.0, 0.0])
    points = rng.uniform(-1.0, 1.0, size=(100, 2))
    report = bochner_lower_bound_check(u, V, dim(m), points)
    assert report.status == VerdictStatus.PASS
    if m == 0:
        assert all(row.rhs == 0.0 for row in report.rows)


def test_lower_bound_preconditions():
    points = [[0.1, 0.2]]
    not_harmonic = SmoothMapSpec.from_expressions(["x_1^2", "x_2"], R2, R2)
    with pytest.raises(PreconditionError):
        bochner_lower_bound_check(not_harmonic, None, dim("+inf"), points)
    into_sphere = SmoothMapSpec.linear(np.eye(2), R2, S2)
    with pytest.raises(PreconditionError):
        bochner_lower_bound_check(into_sphere, None, dim("+inf"), points)
    # m > n 且 V ≠ 0 常向量时 Ric_V^m = −V⊗V/(m−n) 非正定
    harmonic = SmoothMapSpec.from_expressions(["(1-exp(x_1))/(1-exp(1))"], R2, R1)
    with pytest.raises(PreconditionError):
        bochner_lower_bound_check(harmonic, DriftField.constant([1.0, 0.0]), dim(4), points)
    with pytest.raises(InvalidConfigurationError):
        bochner_lower_bound_check(harmonic, None, dim(1), points)


def test_distance_laplacian_flat_equality():
    u = SmoothMapSpec.linear(np.eye(2), R2, R2)
    report = distance_laplacian_check(u, None, np.zeros(2), [[0.3, 0.4], [-2.0, 1.0]])
    assert report.status == VerdictStatus.PASS
    for row in report.rows:
        assert row.lhs == pytest.approx(4.0, abs=1e-5)
        assert row.rhs == pytest.approx(4.0)

    A = [[1.0, 2.0], [0.0, 1.0], [1.0, 1.0]]
    report = distance_laplacian_check(SmoothMapSpec.linear(A, R2, R3), None, np.zeros(3), [[0.5, -0.5]])
    assert report.rows[0].lhs == pytest.approx(2.0 * 8.0, abs=1e-4)
    assert report.rows[0].rhs == pytest.approx(16.0)


def test_distance_laplacian_geodesic_into_hyperbolic_disk():
    # x ↦ γ(x_1), γ 为过原点的单位速度测地线
    u = SmoothMapSpec.from_expressions(["tanh(x_1/2)", "0"], R2, H2)
    report = distance_laplacian_check(u, None, np.array([0.0, 0.3]), [[0.5, 0.0], [-0.8, 1.0], [1.2, -0.3]])
    assert report.status == VerdictStatus.PASS
    assert all(row.margin > 1e-3 for row in report.rows)


def test_distance_laplacian_needs_hadamard_target():
    u = SmoothMapSpec.linear(np.eye(2), R2, S2)
    with pytest.raises(UnsupportedConfigurationError):
        distance_laplacian_check(u, None, np.zeros(2), [[0.1, 0.1]])


@pytest.mark.parametrize("m", [-2, 4, "+inf", 0])
def test_scalar_bochner_inequalities(m, rng):
    V = DriftField.from_potential("|x|^2/2", R2)
    u = "x_1*x_2 + x_1^3/3 - x_1*x_2^2 + 0.5*x_2^2"
    points = rng.uniform(-1.5, 1.5, size=(20, 2))
    report = scalar_bochner_check(R2, V, dim(m), u, points)
    assert report.status == VerdictStatus.PASS
    kinds = {row.check_id for row in report.rows}
    assert ("scalar_dimensional" in kinds) == (m in (-2, 4, "+inf"))


def test_scalar_bochner_rejects_forbidden_m():
    with pytest.raises(InvalidConfigurationError):
        scalar_bochner_check(R2, None, dim(1), "x_1*x_2", [[0.0, 0.0]])


def test_bochner_rows_csv(tmp_path):
    u = SmoothMapSpec.linear(np.eye(2), R2, R2)
    report = distance_laplacian_check(u, None, np.zeros(2), [[0.3, 0.4]])
    path = bochner_rows_csv(report, tmp_path / "bochner.csv")
    with path.open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["check_id", "point", "lhs", "rhs", "margin", "pass"]
    assert rows[1][0] == "distance_laplacian"
    assert rows[1][-1] == "true"
