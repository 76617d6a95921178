from .schemas import (
    ManifoldKind,
    Infinity,
    EffectiveDimension,
    ManifoldSpec,
    DriftSpec,
    CurvatureSample,
)
from .expression import ScalarField, ExpressionField, CallableField, parse_scalar
from .ManifoldModel import ManifoldModel
from .ModelSpaces import (
    EuclideanSpace,
    StereographicSpace,
    RotationallySymmetricSpace,
    make_manifold,
    tan_kappa,
    artan_kappa,
    mobius_add,
)
from .DriftField import DriftField, deterministic_directions
from .curvature import (
    christoffel,
    ricci,
    covariant_derivative,
    weighted_ricci,
    weighted_ricci_tensor,
    laplacian_V,
    hessian_scalar,
    curvature_sampling,
    example_potential,
    closed_form_weighted_ricci,
    as_scalar_field,
)
from .finite_difference import (
    central_derivative,
    second_derivative,
    christoffel_fd,
    riemann_fd,
    ricci_fd,
    hessian_fd,
    laplacian_fd,
    laplacian_V_fd,
)
from .loader import ModelBundle, build_model, build_drift, load_model_spec

__all__ = [
    "ManifoldKind",
    "Infinity",
    "EffectiveDimension",
    "ManifoldSpec",
    "DriftSpec",
    "CurvatureSample",
    "ScalarField",
    "ExpressionField",
    "CallableField",
    "parse_scalar",
    "ManifoldModel",
    "EuclideanSpace",
    "StereographicSpace",
    "RotationallySymmetricSpace",
    "make_manifold",
    "tan_kappa",
    "artan_kappa",
    "mobius_add",
    "DriftField",
    "deterministic_directions",
    "christoffel",
    "ricci",
    "covariant_derivative",
    "weighted_ricci",
    "weighted_ricci_tensor",
    "laplacian_V",
    "hessian_scalar",
    "curvature_sampling",
    "example_potential",
    "closed_form_weighted_ricci",
    "as_scalar_field",
    "central_derivative",
    "second_derivative",
    "christoffel_fd",
    "riemann_fd",
    "ricci_fd",
    "hessian_fd",
    "laplacian_fd",
    "laplacian_V_fd",
    "ModelBundle",
    "build_model",
    "build_drift",
    "load_model_spec",
]
