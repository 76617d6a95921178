"""
实验文件 (INI) 的读取、校验与回写

    [experiment]
    id = euclidean_baseline
    seed = 20240611

    [manifold]
    kind = euclidean
    dim = 2

    [dimension]
    m = 2

    [check:sde_second_moment]
    n_paths = 100000
    t = 1

所有校验错误都以 ConfigValidationError 报告, 带 1 起的行号与字段名。
"""

import configparser
import io
import re
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

from pydantic import ValidationError
from SimpleLLMFunc.logger import app_log

from common.errors import ConfigValidationError, LabError
from config.config import get_config
from geometry import ModelBundle, build_model
from geometry.loader import drift_spec_from_section, manifold_spec_from_section
from .CheckRegister import get_check_registry
from .schemas import CheckSpec, ExperimentConfig

CHECK_PREFIX = "check:"
MODEL_SECTIONS = ("experiment", "manifold", "drift", "dimension", "target")

_SECTION_RE = re.compile(r"^\s*\[([^\]]+)\]")
_KEY_RE = re.compile(r"^([^\s=:#;\[][^=:]*?)\s*[=:]")

LineIndex = Dict[str, Tuple[int, Dict[str, int]]]


def _index_lines(text: str) -> LineIndex:
    """section -> (段首行号, {key: 行号}); 续行 (缩进) 不计"""
    index: LineIndex = {}
    current: Optional[str] = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        match = _SECTION_RE.match(raw)
        if match:
            current = match.group(1).strip()
            index.setdefault(current, (lineno, {}))
            continue
        if current is None or raw[:1].isspace():
            continue
        key = _KEY_RE.match(raw)
        if key:
            index[current][1].setdefault(key.group(1).strip(), lineno)
    return index


def _line(index: LineIndex, section: str, key: Optional[str] = None) -> Optional[int]:
    if section not in index:
        return None
    head, keys = index[section]
    if key is not None and key in keys:
        return keys[key]
    return head


def _first_error(exc: ValidationError) -> Tuple[Optional[str], str]:
    err = exc.errors()[0]
    loc = [str(p) for p in err.get("loc", ()) if not isinstance(p, int)]
    return (loc[0] if loc else None), err.get("msg", str(exc))


def _parse(text: str) -> configparser.ConfigParser:
    parser = configparser.ConfigParser(interpolation=None, strict=True)
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.MissingSectionHeaderError as e:
        raise ConfigValidationError("content before the first section header", line=e.lineno) from e
    except configparser.ParsingError as e:
        lineno, _ = e.errors[0]
        raise ConfigValidationError("malformed line", line=lineno) from e
    except configparser.DuplicateOptionError as e:
        raise ConfigValidationError("duplicate key", line=e.lineno, field=e.option) from e
    except configparser.DuplicateSectionError as e:
        raise ConfigValidationError("duplicate section", line=e.lineno, field=e.section) from e
    return parser


def _model_section(parser, index: LineIndex, name: str, build):
    if not parser.has_section(name):
        return None
    try:
        return build(parser[name])
    except ValidationError as e:
        field, msg = _first_error(e)
        raise ConfigValidationError(msg, line=_line(index, name, field), field=field) from e


def parse_experiment(text: str) -> ExperimentConfig:
    """解析并校验实验文件文本"""
    index = _index_lines(text)
    parser = _parse(text)

    for section in parser.sections():
        if section not in MODEL_SECTIONS and not section.startswith(CHECK_PREFIX):
            raise ConfigValidationError("unknown section", line=_line(index, section), field=section)
    if not parser.has_section("experiment"):
        raise ConfigValidationError("missing [experiment] section", line=1, field="experiment")
    if not parser.has_section("manifold"):
        raise ConfigValidationError("missing [manifold] section", line=1, field="manifold")

    experiment = parser["experiment"]
    for key in experiment:
        if key not in ("id", "seed", "description"):
            raise ConfigValidationError("unknown key", line=_line(index, "experiment", key), field=key)
    for key in ("id", "seed"):
        if key not in experiment:
            raise ConfigValidationError("required field is missing", line=_line(index, "experiment"), field=key)

    manifold = _model_section(parser, index, "manifold", manifold_spec_from_section)
    target = _model_section(parser, index, "target", manifold_spec_from_section)
    drift = _model_section(parser, index, "drift", drift_spec_from_section)
    m = parser["dimension"].get("m", "+inf") if parser.has_section("dimension") else "+inf"

    checks: List[CheckSpec] = []
    registry = get_check_registry()
    for section in parser.sections():
        if not section.startswith(CHECK_PREFIX):
            continue
        check_id = section[len(CHECK_PREFIX):].strip()
        head, keys = index.get(section, (None, {}))
        entry = registry.get(check_id)
        if entry is None:
            raise ConfigValidationError(f"unknown check '{check_id}'", line=head, field=section)
        params = dict(parser[section])
        try:
            entry.params_model.model_validate(params)
        except ValidationError as e:
            field, msg = _first_error(e)
            raise ConfigValidationError(msg, line=keys.get(field, head), field=field) from e
        checks.append(CheckSpec(check_id=check_id, params=params, line=head, param_lines=keys))

    payload = {
        "experiment_id": experiment.get("id", "").strip(),
        "seed": experiment.get("seed", "").strip(),
        "description": experiment.get("description", ""),
        "manifold": manifold,
        "m": m.strip(),
        "target": target,
        "checks": checks,
    }
    if drift is not None:
        payload["drift"] = drift
    try:
        config = ExperimentConfig.model_validate(payload)
    except ValidationError as e:
        field, msg = _first_error(e)
        key = {"experiment_id": "id"}.get(field, field)
        raise ConfigValidationError(msg, line=_line(index, "experiment", key), field=key) from e

    try:
        build_bundle(config)
    except LabError as e:
        section = "dimension" if e.param == "m" else "drift"
        raise ConfigValidationError(e.message, line=_line(index, section, e.param), field=e.param) from e
    except ValidationError as e:
        _, msg = _first_error(e)
        raise ConfigValidationError(msg, line=_line(index, "dimension", "m"), field="m") from e
    return config


def resolve_experiment_path(path: Union[str, Path]) -> Path:
    """不存在的裸名字 (如 example1_m0) 在 LAB_EXPERIMENT_DIR 中查找"""
    path = Path(path)
    if path.exists() or path.parent != Path("."):
        return path
    bundled = Path(get_config().EXPERIMENT_DIR) / path.with_suffix(".ini").name
    return bundled if bundled.exists() else path


def load_experiment(path: Union[str, Path]) -> ExperimentConfig:
    """
    读取实验文件

    Raises:
        ConfigValidationError: 文件不可读, 或任何字段校验失败
    """
    path = resolve_experiment_path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigValidationError(f"cannot read {path}: {e.strerror}", line=None, field="path") from e
    config = parse_experiment(text)
    app_log(f"✅ Loaded experiment '{config.experiment_id}' with {len(config.checks)} checks from {path}")
    return config


def build_bundle(config: ExperimentConfig) -> ModelBundle:
    return build_model(config.manifold, config.drift, config.m, config.target)


def _manifold_section(spec) -> Dict[str, str]:
    out = {"kind": spec.kind.value, "dim": str(spec.dim), "kappa": repr(spec.kappa)}
    if spec.warp is not None:
        out["warp"] = spec.warp
    return out


def _drift_section(spec) -> Dict[str, str]:
    if spec.potential is not None:
        return {"potential": spec.potential}
    if spec.components is not None:
        return {"components": "; ".join(spec.components)}
    if spec.constant is not None:
        return {"constant": ", ".join(repr(c) for c in spec.constant)}
    if spec.linear is not None:
        return {"linear": "; ".join(", ".join(repr(c) for c in row) for row in spec.linear)}
    return {"kind": "zero"}


def dump_experiment(config: ExperimentConfig, path: Union[str, Path, None] = None) -> str:
    """把配置写回 INI 文本; 参数保持原始字符串, parse_experiment 读回后内容不变"""
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    experiment = {"id": config.experiment_id, "seed": str(config.seed)}
    if config.description:
        experiment["description"] = config.description
    parser["experiment"] = experiment
    parser["manifold"] = _manifold_section(config.manifold)
    parser["drift"] = _drift_section(config.drift)
    parser["dimension"] = {"m": config.m}
    if config.target is not None:
        parser["target"] = _manifold_section(config.target)
    for spec in config.checks:
        parser[CHECK_PREFIX + spec.check_id] = spec.params
    buf = io.StringIO()
    parser.write(buf)
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text
