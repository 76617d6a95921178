import csv
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from common.errors import ChartDomainError, CutLocusError, InputError, InvalidConfigurationError, PoleError
from comparison import (
    ComparisonInput,
    ConditionId,
    RadialFrame,
    audit_conditions,
    audit_rows_csv,
    classical_comparison_bound,
    cot_kappa,
    default_c_p,
    f_V_along_ray,
    laplacian_comparison_bound,
    measured_laplacian_r,
    s_p,
)
from geometry import DriftField, EffectiveDimension, EuclideanSpace, StereographicSpace, example_potential

E1 = np.array([1.0, 0.0])


def make_input(manifold, drift, m, kappa=0.0, c_p=None):
    m = EffectiveDimension(value=m, dim=manifold.dim)
    if c_p is None:
        c_p = default_c_p(manifold, drift, m)
    return ComparisonInput(manifold=manifold, drift=drift, m=m, kappa=kappa, c_p=c_p)


@pytest.fixture(scope="module")
def example_one():
    """ℝ², f = 2·log(2+|x|²), m = 0"""
    M = EuclideanSpace(2)
    return make_input(M, DriftField.from_potential(example_potential(2, 0), M), 0)


# ==================== f_V 与 s_p ====================


def test_f_v_vanishes_without_drift():
    inp = make_input(EuclideanSpace(2), DriftField.zero(2), "+inf")
    assert f_V_along_ray(inp, E1, 3.0) == 0.0


def test_f_v_gradient_case_is_potential_difference():
    M = EuclideanSpace(2)
    V = DriftField.from_potential("x_1^2 + 3*x_2", M)
    inp = make_input(M, V, "+inf")
    u = np.array([1.0, 1.0]) / math.sqrt(2.0)
    r = 1.5
    end = r * u
    expected = end[0] ** 2 + 3.0 * end[1]
    assert f_V_along_ray(inp, u, r) == pytest.approx(expected, rel=1e-9)


def test_f_v_radial_linear_field():
    inp = make_input(EuclideanSpace(2), DriftField.linear([[1.0, 0.0], [0.0, 1.0]]), "+inf")
    assert f_V_along_ray(inp, E1, 2.0) == pytest.approx(2.0, rel=1e-10)


def test_s_p_flat_and_exponential_weight():
    flat = make_input(EuclideanSpace(2), DriftField.zero(2), 0, c_p=1.0)
    assert s_p(flat, E1, 2.5) == pytest.approx(2.5, rel=1e-12)
    unit_drift = make_input(EuclideanSpace(2), DriftField.constant([1.0, 0.0]), 0, c_p=1.0)
    assert s_p(unit_drift, E1, 1.0) == pytest.approx(1.0 - math.exp(-1.0), rel=1e-9)


def test_s_p_gradient_case_matches_integral_of_weight(example_one):
    # C_p = exp(−f(0)), s_p = ∫ (2+t²)^{-2} dt
    assert example_one.c_p == pytest.approx(0.25)
    r, a2 = 1.7, 2.0
    a = math.sqrt(a2)
    exact = r / (2 * a2 * (a2 + r * r)) + math.atan(r / a) / (2 * a**3)
    assert s_p(example_one, E1, r) == pytest.approx(exact, rel=1e-9)


def test_s_p_rejects_m_equal_n():
    inp = make_input(EuclideanSpace(2), DriftField.zero(2), 2)
    with pytest.raises(InvalidConfigurationError):
        s_p(inp, E1, 1.0)


def test_s_p_increasing_and_bounded(example_one):
    radii = [0.25, 0.5, 1.0, 2.0, 4.0]
    values = [s_p(example_one, E1, r) for r in radii]
    assert all(b > a for a, b in zip(values, values[1:]))
    sup_fv = abs(f_V_along_ray(example_one, E1, 4.0))
    for r, s in zip(radii, values):
        assert s <= example_one.c_p * r * math.exp(2 * sup_fv / 2.0)


def test_radius_beyond_cut_locus():
    inp = make_input(StereographicSpace(2, 1.0), DriftField.zero(2), "+inf")
    with pytest.raises(CutLocusError):
        f_V_along_ray(inp, E1, 4.0)


# ==================== cot_κ ====================


def test_cot_kappa_values():
    assert cot_kappa(0.0, 2.0) == 0.5
    assert cot_kappa(1.0, math.pi / 4) == pytest.approx(1.0, rel=1e-12)
    assert cot_kappa(-1.0, 1.0) == pytest.approx(1.31304, abs=1e-5)


def test_cot_kappa_errors():
    with pytest.raises(PoleError):
        cot_kappa(1.0, 0.0)
    with pytest.raises(ChartDomainError):
        cot_kappa(1.0, math.pi)
    with pytest.raises(InputError):
        cot_kappa(-1.0, -2.0)


@given(st.floats(min_value=1e-6, max_value=1e6))
def test_flat_cot_kappa_times_r(r):
    assert cot_kappa(0.0, r) * r == pytest.approx(1.0, abs=2.3e-16)


# ==================== 比较上界 ====================


def test_classical_bound_values():
    assert classical_comparison_bound(3, -1.0, 1.0) == pytest.approx(2.0 / math.tanh(1.0))
    assert classical_comparison_bound(3, -1.0, 1.0) == pytest.approx(2.62608, abs=1e-5)
    assert classical_comparison_bound(2, -4.0, 0.5) == pytest.approx(2.62608, abs=1e-5)
    assert classical_comparison_bound(EffectiveDimension(value=3, dim=3), -1e-12, 2.0) == pytest.approx(1.0, rel=1e-9)
    with pytest.raises(PoleError):
        classical_comparison_bound(3, -1.0, 0.0)


@pytest.mark.parametrize("n", [2, 3])
def test_euclidean_rigidity(n):
    inp = make_input(EuclideanSpace(n), DriftField.zero(n), n)
    u = np.eye(n)[0]
    for r in (0.3, 1.0, 5.0):
        bound = laplacian_comparison_bound(inp, u, r)
        assert bound == pytest.approx((n - 1) / r, rel=1e-12)
        assert measured_laplacian_r(inp, u, r) == pytest.approx(bound, rel=1e-8)


def test_hyperbolic_rigidity():
    inp = make_input(StereographicSpace(2, -1.0), DriftField.zero(2), 2, kappa=-1.0)
    u = np.array([0.6, 0.8]) / 2.0  # g-unit at the origin, λ(0) = 2
    for r in (0.2, 1.0, 3.0):
        bound = laplacian_comparison_bound(inp, u, r)
        assert bound == pytest.approx(1.0 / math.tanh(r), rel=1e-12)
        assert measured_laplacian_r(inp, u, r) == pytest.approx(bound, rel=1e-8)


def test_generalized_bound_dominates_example_one(example_one):
    for r in (0.5, 1.0, 2.0, 4.0):
        bound = laplacian_comparison_bound(example_one, E1, r)
        measured = measured_laplacian_r(example_one, E1, r)
        assert measured == pytest.approx(1.0 / r - 4.0 * r / (2.0 + r * r), rel=1e-9)
        assert bound >= measured


def test_infinite_m_has_no_finite_bound():
    inp = make_input(EuclideanSpace(2), DriftField.constant([1.0, 0.0]), "-inf")
    assert math.isinf(laplacian_comparison_bound(inp, E1, 1.0))


# ==================== 条件审计 ====================


@pytest.mark.parametrize("n", [2, 3])
def test_audit_flat_space_all_conditions_hold(n, rng, tmp_path):
    M = EuclideanSpace(n)
    inp = make_input(M, DriftField.zero(n), n)
    frame = RadialFrame.default(M, n_directions=8, max_radius=8.0)
    reports = audit_conditions(inp, frame, rng=rng, n_curvature_samples=200)
    assert [r.condition_id for r in reports] == list(ConditionId)
    for rep in reports:
        assert rep.holds, rep.condition_id
        assert 1.0 <= rep.witness_constant <= max(1.0, n - 1.0) + 1e-9
        assert rep.implication_consistent
    path = audit_rows_csv(reports, tmp_path / "audit.csv")
    with path.open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["condition_id", "radius", "lhs", "rhs", "D_witness", "pass"]
    assert all(row[-1] == "true" for row in rows[1:])


def test_audit_example_one(example_one, rng):
    frame = RadialFrame.default(EuclideanSpace(2), n_directions=8, max_radius=8.0)
    reports = {r.condition_id: r for r in audit_conditions(example_one, frame, rng=rng, n_curvature_samples=500)}
    assert reports[ConditionId.A1].holds
    assert reports[ConditionId.A1_STAR].holds
    assert not reports[ConditionId.A2].holds
    assert reports[ConditionId.A2].violation_points
    assert reports[ConditionId.B1].holds
    assert reports[ConditionId.B3].holds
    for cid in (ConditionId.B1, ConditionId.B2, ConditionId.B3):
        assert reports[cid].implication_consistent
        # r·Δ_V r never exceeds the witnessed bound
        for row in reports[cid].rows:
            assert row.lhs <= row.rhs + 1e-9
    assert any("A1" in premise for premise in reports[ConditionId.B1].implied_by)


def test_audit_bounded_drift_gives_b3(rng):
    M = EuclideanSpace(2)
    V = DriftField.from_potential("sqrt(1+|x|^2) - 1", M)
    inp = make_input(M, V, "+inf")
    frame = RadialFrame.default(M, n_directions=8, max_radius=16.0)
    (b3,) = audit_conditions(inp, frame, which=["B3"], rng=rng, n_curvature_samples=300)
    assert b3.holds
    assert "Ric_V^inf >= -K" in b3.implied_by


def test_audit_needs_radii(example_one):
    frame = RadialFrame.default(EuclideanSpace(2), n_directions=4, max_radius=0.1)
    with pytest.raises(InputError):
        audit_conditions(example_one, frame, which=["B1"], r0=0.125)


def test_frame_respects_cut_locus():
    S = StereographicSpace(2, 1.0)
    with pytest.raises(CutLocusError):
        RadialFrame.build(S, np.eye(2), math.pi)
    frame = RadialFrame.default(S, n_directions=6, max_radius=10.0)
    assert frame.max_radius < math.pi
    norms = S.norm(frame.point(), frame.directions())
    assert np.allclose(norms, 1.0, atol=1e-10)
