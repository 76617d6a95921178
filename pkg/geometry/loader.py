"""
从纯文本键值配置 (INI) 构造流形、漂移场、有效维数与目标流形

    [manifold]
    kind = hyperbolic
    dim = 2
    kappa = -1

    [drift]
    potential = 2*log(2+|x|^2)

    [dimension]
    m = 0

    [target]
    kind = euclidean
    dim = 1
"""

import configparser
from pathlib import Path
from typing import Mapping, NamedTuple, Optional, Union

from common.errors import InputError
from .DriftField import DriftField
from .ManifoldModel import ManifoldModel
from .ModelSpaces import make_manifold
from .schemas import DriftSpec, EffectiveDimension, ManifoldSpec


class ModelBundle(NamedTuple):
    manifold: ManifoldModel
    drift: DriftField
    m: EffectiveDimension
    target: Optional[ManifoldModel]


def _floats(text: str) -> list:
    return [float(t) for t in text.replace(" ", "").split(",") if t]


def manifold_spec_from_section(section: Mapping[str, str]) -> ManifoldSpec:
    return ManifoldSpec(
        kind=section.get("kind", "").strip(),
        dim=section.get("dim"),
        kappa=section.get("kappa", "0"),
        warp=section.get("warp"),
    )


def drift_spec_from_section(section: Optional[Mapping[str, str]]) -> DriftSpec:
    if section is None:
        return DriftSpec()
    kind = section.get("kind", "").strip().lower()
    if kind == "zero":
        return DriftSpec()
    components = section.get("components")
    constant = section.get("constant")
    linear = section.get("linear")
    return DriftSpec(
        potential=section.get("potential"),
        components=[c.strip() for c in components.split(";")] if components else None,
        constant=_floats(constant) if constant else None,
        linear=[_floats(row) for row in linear.split(";")] if linear else None,
    )


def build_drift(spec: DriftSpec, manifold: ManifoldModel) -> DriftField:
    n = manifold.dim
    if spec.potential is not None:
        return DriftField.from_potential(spec.potential, manifold)
    if spec.components is not None:
        return DriftField.from_expressions(spec.components, n)
    if spec.constant is not None:
        if len(spec.constant) != n:
            raise InputError(f"constant drift needs {n} entries", param="constant")
        return DriftField.constant(spec.constant)
    if spec.linear is not None:
        if len(spec.linear) != n or any(len(row) != n for row in spec.linear):
            raise InputError(f"linear drift needs an {n}x{n} matrix", param="linear")
        return DriftField.linear(spec.linear)
    return DriftField.zero(n)


def build_model(
    manifold_spec: ManifoldSpec,
    drift_spec: DriftSpec,
    m_value: Union[str, float, None] = None,
    target_spec: Optional[ManifoldSpec] = None,
) -> ModelBundle:
    manifold = make_manifold(manifold_spec)
    drift = build_drift(drift_spec, manifold)
    m = EffectiveDimension(value="+inf" if m_value is None else m_value, dim=manifold.dim)
    target = make_manifold(target_spec) if target_spec is not None else None
    return ModelBundle(manifold=manifold, drift=drift, m=m, target=target)


def load_model_spec(path: Union[str, Path]) -> ModelBundle:
    """读取 INI 文件并构造 ModelBundle"""
    parser = configparser.ConfigParser(interpolation=None)
    if not parser.read(path, encoding="utf-8"):
        raise InputError(f"cannot read model file {path}", param="path")
    if not parser.has_section("manifold"):
        raise InputError("model file needs a [manifold] section", param="manifold")
    drift_section = parser["drift"] if parser.has_section("drift") else None
    m_value = parser["dimension"].get("m") if parser.has_section("dimension") else None
    target = manifold_spec_from_section(parser["target"]) if parser.has_section("target") else None
    return build_model(
        manifold_spec_from_section(parser["manifold"]),
        drift_spec_from_section(drift_section),
        m_value,
        target,
    )
