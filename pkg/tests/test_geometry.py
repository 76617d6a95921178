import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from common.errors import ChartDomainError, InputError, InvalidConfigurationError
from geometry import (
    CallableField,
    DriftField,
    EffectiveDimension,
    EuclideanSpace,
    ExpressionField,
    Infinity,
    RotationallySymmetricSpace,
    StereographicSpace,
    christoffel,
    christoffel_fd,
    closed_form_weighted_ricci,
    curvature_sampling,
    example_potential,
    hessian_fd,
    hessian_scalar,
    laplacian_V,
    laplacian_fd,
    load_model_spec,
    ricci,
    ricci_fd,
    weighted_ricci,
)

coord = st.floats(min_value=-0.6, max_value=0.6, allow_nan=False)
point2 = st.tuples(coord, coord).map(np.array)
vector2 = st.tuples(
    st.floats(min_value=-2, max_value=2, allow_nan=False),
    st.floats(min_value=-2, max_value=2, allow_nan=False),
).map(np.array)


# ==================== Christoffel ====================


def test_christoffel_vanishes_on_flat_space():
    gamma = christoffel(EuclideanSpace(3), np.array([1.0, 2.0, 3.0]))
    assert gamma.shape == (3, 3, 3)
    assert np.all(gamma == 0.0)


def test_sphere_christoffel_vanishes_at_chart_origin(unit_sphere):
    assert np.allclose(christoffel(unit_sphere, np.zeros(2)), 0.0, atol=1e-15)


@settings(max_examples=30, deadline=None)
@given(point2)
def test_hyperbolic_christoffel_matches_finite_differences(x):
    H = StereographicSpace(2, -1.0)
    analytic = christoffel(H, x)
    oracle = christoffel_fd(H, x)
    assert np.max(np.abs(analytic - oracle)) < 1e-6
    assert np.allclose(analytic, np.swapaxes(analytic, -1, -2))


def test_christoffel_outside_chart_raises(hyperbolic_plane):
    with pytest.raises(ChartDomainError):
        christoffel(hyperbolic_plane, np.array([0.9, 0.9]))


# ==================== Ricci ====================


def test_ricci_flat():
    assert np.all(ricci(EuclideanSpace(4), np.ones(4)) == 0.0)


@pytest.mark.parametrize("kappa", [1.0, -1.0, 0.25])
def test_ricci_constant_curvature_against_oracle(kappa):
    M = StereographicSpace(2, kappa)
    for x in (np.array([0.1, -0.3]), np.array([0.4, 0.2]), np.zeros(2)):
        closed = kappa * (M.dim - 1) * M.metric(x)
        assert np.allclose(ricci(M, x), closed, atol=1e-12)
        assert np.max(np.abs(ricci_fd(M, x) - closed)) < 1e-4


def test_ricci_three_dimensional_sphere():
    M = StereographicSpace(3, 1.0)
    x = np.array([0.2, -0.1, 0.3])
    assert np.max(np.abs(ricci_fd(M, x) - 2.0 * M.metric(x))) < 1e-4


# ==================== Ric_V^m ====================


def test_weighted_ricci_first_example():
    M = EuclideanSpace(2)
    m = EffectiveDimension(value=0, dim=2)
    V = DriftField.from_potential(example_potential(2, 0), M)
    value = weighted_ricci(M, V, m, np.array([1.0, 0.0]), np.array([0.0, 1.0]))
    assert value == pytest.approx(4.0 / 3.0, rel=1e-12)


def test_weighted_ricci_second_example_uses_exact_closed_form():
    M = EuclideanSpace(2)
    m = EffectiveDimension(value=1, dim=2)
    V = DriftField.from_potential("log(1+|x|^2)", M)
    x, v = np.array([1.0, 0.0]), np.array([1.0, 0.0])
    value = weighted_ricci(M, V, m, x, v)
    # Hess f(v,v) = 0 and ⟨∇f,v⟩² = 1, so Ric_V^1 = 0 + 1/(2-1) = 1
    assert value == pytest.approx(1.0, rel=1e-12)
    assert value == pytest.approx(float(closed_form_weighted_ricci(x, v, 1.0, m)), rel=1e-12)


def test_weighted_ricci_zero_drift_flat(rng):
    M = EuclideanSpace(3)
    V = DriftField.zero(3)
    for m_value in (-5.0, 0.0, 7.0, "+inf"):
        m = EffectiveDimension(value=m_value, dim=3)
        x = rng.standard_normal((10, 3))
        v = rng.standard_normal((10, 3))
        assert np.all(weighted_ricci(M, V, m, x, v) == 0.0)


def test_weighted_ricci_zero_vector_is_zero(plane):
    V = DriftField.from_potential("|x|^2", plane)
    m = EffectiveDimension(value=-1, dim=2)
    assert weighted_ricci(plane, V, m, np.array([0.3, 0.1]), np.zeros(2)) == 0.0


def test_m_equal_n_requires_zero_drift(plane):
    V = DriftField.constant([1.0, 0.0])
    with pytest.raises(InvalidConfigurationError):
        weighted_ricci(plane, V, EffectiveDimension(value=2, dim=2), np.zeros(2), np.ones(2))
    zero = DriftField.zero(2)
    assert weighted_ricci(plane, zero, EffectiveDimension(value=2, dim=2), np.zeros(2), np.ones(2)) == 0.0


def test_closed_form_agreement_and_nonnegativity(rng):
    M = EuclideanSpace(2)
    m = EffectiveDimension(value=0, dim=2)
    V = DriftField.from_potential(example_potential(2, 0), M)
    x = rng.uniform(-5.0, 5.0, size=(1000, 2))
    v = rng.standard_normal((1000, 2))
    measured = weighted_ricci(M, V, m, x, v)
    closed = closed_form_weighted_ricci(x, v, 2.0, m)
    assert np.max(np.abs(measured - closed) / np.abs(closed)) < 1e-8
    assert np.all(measured >= 0.0)
    sample = curvature_sampling(M, V, m, 1000, 5.0, rng)
    assert sample.nonnegative


@settings(max_examples=40, deadline=None)
@given(point2, vector2)
def test_plus_and_minus_infinity_coincide(x, v):
    M = EuclideanSpace(2)
    V = DriftField.from_potential("2*log(2+|x|^2)", M)
    plus = weighted_ricci(M, V, EffectiveDimension(value="+inf", dim=2), x, v)
    minus = weighted_ricci(M, V, EffectiveDimension(value="-inf", dim=2), x, v)
    assert plus == minus


@settings(max_examples=40, deadline=None)
@given(point2, vector2, st.floats(min_value=-50, max_value=1), st.floats(min_value=2.5, max_value=50))
def test_weighted_ricci_monotone_in_m(x, v, m1, m2):
    M = EuclideanSpace(2)
    V = DriftField.from_potential("x_1^2 + sin(x_2)", M)

    def ric(m):
        return weighted_ricci(M, V, EffectiveDimension(value=m, dim=2), x, v)

    slack = 1e-10
    assert ric(1.0) >= ric(m1) - slack
    assert ric(m1) >= ric("+inf") - slack
    assert ric("+inf") >= ric(m2) - slack


# ==================== Δ_V and Hess ====================


def test_laplacian_of_square_norm():
    for n in (2, 3, 5):
        M = EuclideanSpace(n)
        assert laplacian_V(M, None, "|x|^2", np.ones(n)) == pytest.approx(2.0 * n)


def test_weighted_laplacian_symbolic_oracle(plane):
    V = DriftField.from_potential("log(1+|x|^2)", plane)
    assert laplacian_V(plane, V, "x_1", np.array([1.0, 0.0])) == pytest.approx(-1.0, abs=1e-12)
    x = np.array([0.3, -1.2])
    assert laplacian_V(plane, V, "x_1", x) == pytest.approx(-2 * 0.3 / (1 + 0.09 + 1.44), abs=1e-12)


def test_sphere_laplacian_against_divergence_form(unit_sphere):
    f = ExpressionField("x_1", 2)
    for x in (np.array([0.2, 0.5]), np.array([-0.7, 0.1])):
        analytic = laplacian_V(unit_sphere, None, f, x)
        oracle = laplacian_fd(unit_sphere, f.value, x)
        assert abs(analytic - oracle) < 1e-5


def test_hessian_simple_cases(plane):
    assert np.allclose(hessian_scalar(plane, "|x|^2", np.array([0.4, 2.0])), 2.0 * np.eye(2))
    assert np.allclose(hessian_scalar(plane, "x_1*x_2", np.array([0.4, 2.0])), [[0.0, 1.0], [1.0, 0.0]])


def test_hyperbolic_hessian_of_squared_distance(hyperbolic_plane):
    origin = np.zeros(2)
    f = CallableField(lambda y: hyperbolic_plane.distance(origin, y) ** 2, 2)
    x = np.array([0.3, 0.2])
    analytic = hessian_scalar(hyperbolic_plane, f, x)
    oracle = hessian_fd(hyperbolic_plane, f.value, x)
    assert np.max(np.abs(analytic - oracle)) < 1e-5
    # Hess d² = 2 dr⊗dr + 2 d coth(d) (g − dr⊗dr)
    d = float(hyperbolic_plane.distance(origin, x))
    g = hyperbolic_plane.metric(x)
    dr = g @ hyperbolic_plane.radial_gradient(origin, x)
    closed = 2 * np.outer(dr, dr) + 2 * d / math.tanh(d) * (g - np.outer(dr, dr))
    assert np.max(np.abs(analytic - closed)) < 1e-5


@settings(max_examples=25, deadline=None)
@given(point2, st.sampled_from([-1.0, 1.0, 0.0]))
def test_trace_of_hessian_is_laplacian(x, kappa):
    M = EuclideanSpace(2) if kappa == 0.0 else StereographicSpace(2, kappa)
    f = ExpressionField("exp(x_1)*cos(x_2) + x_1*x_2^2", 2)
    trace = np.einsum("ij,ij->", M.inverse_metric(x), hessian_scalar(M, f, x))
    lap = laplacian_V(M, None, f, x)
    assert trace == pytest.approx(lap, rel=1e-8, abs=1e-12)


# ==================== ManifoldModel invariants ====================


@pytest.mark.parametrize("M", [EuclideanSpace(2), StereographicSpace(2, -1.0), StereographicSpace(2, 1.0)])
def test_triangle_inequality_on_sampled_triples(M, rng):
    pts = M.sample_points(rng, 300, 1.2).reshape(100, 3, 2)
    a, b, c = pts[:, 0], pts[:, 1], pts[:, 2]
    assert np.all(M.distance(a, c) <= M.distance(a, b) + M.distance(b, c) + 1e-9)


def test_metric_symmetric_positive_definite(rng):
    for M in (StereographicSpace(3, -0.5), StereographicSpace(3, 2.0), RotationallySymmetricSpace(3, "tanh(r)")):
        x = M.sample_points(rng, 50, 0.8)
        g = M.metric(x)
        assert np.allclose(g, np.swapaxes(g, -1, -2))
        assert np.all(np.linalg.eigvalsh(g) > 0.0)


def test_euclidean_distance_is_exact(rng):
    M = EuclideanSpace(3)
    p, x = rng.standard_normal(3), rng.standard_normal(3)
    assert M.distance(p, x) == np.linalg.norm(x - p)


@pytest.mark.parametrize("kappa", [-1.0, 1.0, -4.0])
def test_exp_and_log_are_inverse(kappa, rng):
    M = StereographicSpace(2, kappa)
    x = M.sample_points(rng, 20, 0.6)
    y = M.sample_points(rng, 20, 0.6)
    v = M.log_map(x, y)
    assert np.allclose(M.exp_map(x, v), y, atol=1e-10)
    assert np.allclose(M.norm(x, v), M.distance(x, y), atol=1e-10)


def test_geodesic_from_origin_has_closed_chart_radius():
    H = StereographicSpace(2, -1.0)
    S = StereographicSpace(2, 1.0)
    assert H.chart_radius(1.0) == pytest.approx(math.tanh(0.5))
    assert S.chart_radius(1.0) == pytest.approx(math.tan(0.5))
    assert S.cut_locus_radius == pytest.approx(math.pi)
    assert math.isinf(H.cut_locus_radius)


# ==================== rotationally symmetric models ====================


def test_rotational_sinh_warp_is_hyperbolic_space():
    M = RotationallySymmetricSpace(3, "sinh(r)")
    x = np.array([0.5, -0.3, 0.8])
    assert np.allclose(M.ricci(x), -2.0 * M.metric(x), atol=1e-12)
    assert np.max(np.abs(M.ricci(x) - ricci_fd(M, x))) < 1e-4
    r = np.linalg.norm(x)
    assert M.radial_laplacian(np.zeros(3), x) == pytest.approx(2.0 / math.tanh(r))


def test_rotational_christoffel_matches_oracle():
    M = RotationallySymmetricSpace(2, "tanh(r)")
    for x in (np.array([0.4, 0.3]), np.array([-1.5, 0.7])):
        assert np.max(np.abs(M.christoffel(x) - christoffel_fd(M, x))) < 1e-6
        assert np.max(np.abs(M.ricci(x) - ricci_fd(M, x))) < 1e-4


def test_rotational_sphere_warp_has_cut_radius():
    M = RotationallySymmetricSpace(2, "sin(r)")
    assert M.cut_locus_radius == pytest.approx(math.pi, rel=1e-9)
    assert np.allclose(M.ricci(np.zeros(2)), np.eye(2))


def test_rotational_warp_must_be_smooth_at_origin():
    with pytest.raises(InputError):
        RotationallySymmetricSpace(2, "1 + r")


# ==================== data models and parsing ====================


def test_effective_dimension_range_and_infinity():
    assert EffectiveDimension(value="inf", dim=3).value is Infinity.PLUS
    assert EffectiveDimension(value=float("-inf"), dim=3).value is Infinity.MINUS
    assert EffectiveDimension(value="-inf", dim=3).correction_coefficient() == 0.0
    assert EffectiveDimension(value=1.0, dim=3).in_comparison_range()
    assert not EffectiveDimension(value=1.0, dim=3).in_liouville_range()
    with pytest.raises(ValueError):
        EffectiveDimension(value=2.0, dim=3)


def test_unknown_symbols_are_rejected():
    with pytest.raises(InputError):
        ExpressionField("y + x_1", 2)
    with pytest.raises(InputError):
        ExpressionField("x_3", 2)


def test_drift_gradient_consistency_and_sup_profile(hyperbolic_plane, rng):
    V = DriftField.from_potential("|x|^2", hyperbolic_plane)
    x = hyperbolic_plane.sample_points(rng, 20, 1.0)
    assert V.gradient_mismatch(hyperbolic_plane, x) < 1e-6
    profile = V.radial_sup_profile(hyperbolic_plane, [0.25, 0.5, 1.0, 2.0])
    assert np.all(np.diff(profile) >= 0.0)


def test_symmetric_linear_drift_has_quadratic_potential(rng):
    V = DriftField.linear([[1.0, 0.5], [0.5, 2.0]])
    assert V.is_gradient
    assert "np." not in V.gradient_potential.text
    x = rng.normal(size=(10, 2))
    expected = 0.5 * x[:, 0] ** 2 + 0.5 * x[:, 0] * x[:, 1] + x[:, 1] ** 2
    assert np.allclose(V.gradient_potential.value(x), expected)
    assert DriftField.linear([[0.0, 1.0], [-1.0, 0.0]]).gradient_potential is None


def test_load_model_spec(tmp_path):
    path = tmp_path / "model.cfg"
    path.write_text(
        "[manifold]\nkind = hyperbolic\ndim = 2\nkappa = -1\n\n"
        "[drift]\npotential = log(1+|x|^2)\n\n[dimension]\nm = -inf\n",
        encoding="utf-8",
    )
    bundle = load_model_spec(path)
    assert bundle.manifold.kind.value == "hyperbolic"
    assert bundle.m.value is Infinity.MINUS
    assert bundle.drift.is_gradient
