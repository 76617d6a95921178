"""
MapGrid 的版本化文本格式

    # vlaplace-grid 1
    dims <n> <k>
    radius <a>
    spacing <h>
    center <c_1> ... <c_n>
    domain <kind> <kappa>
    target <kind> <kappa>
    drift <potential | ->
    status <converged> <iterations> <residual> <projected>
    regular <o_1> ... <o_k> | -
    interior <N>
    <x_1> ... <x_n> <u_1> ... <u_k>
    boundary <B>
    <x_1> ... <x_n> <u_1> ... <u_k>

浮点数用 repr 写出, 读回后逐位相同。格点几何由 (center, radius, spacing) 重建,
读入时与文件中的坐标核对。
"""

from pathlib import Path
from typing import List, Optional, Union

import numpy as np

from common.errors import InputError
from geometry import DriftField, ManifoldKind, ManifoldModel, ManifoldSpec, make_manifold
from geometry.expression import ExpressionField
from .lattice import build_lattice
from .schemas import MapGrid

FORMAT_HEADER = "# vlaplace-grid 1"


def _fmt(values) -> str:
    return " ".join(repr(float(v)) for v in np.ravel(values))


def _describe(model: ManifoldModel) -> str:
    if model.kind not in (ManifoldKind.EUCLIDEAN, ManifoldKind.HYPERBOLIC, ManifoldKind.SPHERE):
        raise InputError(f"cannot serialise grids over {model.describe()}", param="domain")
    return f"{model.kind.value} {model.kappa!r}"


def _drift_text(V: Optional[DriftField]) -> str:
    if V is None or V.is_zero:
        return "-"
    potential = V.gradient_potential
    if not isinstance(potential, ExpressionField):
        raise InputError("only drifts given by a potential expression can be serialised", param="drift")
    return potential.text


def dump_grid(grid: MapGrid, path: Union[str, Path]) -> Path:
    """把 MapGrid 写成文本文件"""
    path = Path(path)
    n, k = grid.domain.dim, grid.target.dim
    lines: List[str] = [
        FORMAT_HEADER,
        f"dims {n} {k}",
        f"radius {grid.radius!r}",
        f"spacing {grid.spacing!r}",
        f"center {_fmt(grid.center)}",
        f"domain {_describe(grid.domain)}",
        f"target {_describe(grid.target)}",
        f"drift {_drift_text(grid.drift)}",
        f"status {int(grid.converged)} {grid.iterations} {grid.residual!r} {int(grid.projected)}",
        f"regular {_fmt(grid.regular_center) if grid.regular_center is not None else '-'}",
        f"interior {grid.lattice.n_nodes}",
    ]
    lines += [f"{_fmt(x)} {_fmt(u)}" for x, u in zip(grid.nodes, grid.values)]
    lines.append(f"boundary {len(grid.boundary_values)}")
    lines += [f"{_fmt(x)} {_fmt(u)}" for x, u in zip(grid.lattice.boundary_points, grid.boundary_values)]
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def _model(fields: List[str], dim: int) -> ManifoldModel:
    kind, kappa = fields[0], float(fields[1])
    return make_manifold(ManifoldSpec(kind=kind, dim=dim, kappa=kappa))


def _rows(lines: List[str], start: int, count: int, width: int, what: str) -> np.ndarray:
    rows = lines[start : start + count]
    if len(rows) != count:
        raise InputError(f"grid file ends inside the {what} block", param="path")
    data = np.array([[float(t) for t in row.split()] for row in rows], dtype=float).reshape(count, -1)
    if data.shape[1] != width:
        raise InputError(f"{what} rows must have {width} columns", param="path")
    return data


def load_grid(path: Union[str, Path]) -> MapGrid:
    """
    读回 dump_grid 写出的文件

    Raises:
        InputError: 版本不符、字段缺失或格点坐标与重建的格点不一致
    """
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0].strip() != FORMAT_HEADER:
        raise InputError(f"{path} is not a grid file of this version", param="path")
    head = {}
    i = 1
    while i < len(lines) and not lines[i].startswith("interior"):
        key, _, rest = lines[i].partition(" ")
        head[key] = rest.split()
        i += 1
    missing = {"dims", "radius", "spacing", "center", "domain", "target", "drift", "status", "regular"} - set(head)
    if missing or i >= len(lines):
        raise InputError(f"grid file misses fields: {', '.join(sorted(missing)) or 'interior'}", param="path")

    n, k = int(head["dims"][0]), int(head["dims"][1])
    domain = _model(head["domain"], n)
    target = _model(head["target"], k)
    drift_text = " ".join(head["drift"])
    drift = None if drift_text == "-" else DriftField.from_potential(drift_text, domain)
    radius = float(head["radius"][0])
    spacing = float(head["spacing"][0])
    center = np.array([float(t) for t in head["center"]])

    n_inner = int(lines[i].split()[1])
    inner = _rows(lines, i + 1, n_inner, n + k, "interior")
    j = i + 1 + n_inner
    if j >= len(lines) or not lines[j].startswith("boundary"):
        raise InputError("grid file misses the boundary block", param="path")
    n_bnd = int(lines[j].split()[1])
    bnd = _rows(lines, j + 1, n_bnd, n + k, "boundary")

    lattice = build_lattice(domain, radius, spacing, center)
    if lattice.n_nodes != n_inner or not np.allclose(lattice.nodes, inner[:, :n], rtol=0, atol=1e-12 * spacing):
        raise InputError("interior nodes do not match the lattice rebuilt from the header", param="path")
    if len(lattice.boundary_points) != n_bnd:
        raise InputError("boundary block does not match the rebuilt lattice", param="path")

    converged, iterations, residual, projected = head["status"]
    return MapGrid(
        domain=domain,
        target=target,
        drift=drift,
        radius=radius,
        lattice=lattice,
        values=inner[:, n:],
        boundary_values=bnd[:, n:],
        residual=float(residual),
        iterations=int(iterations),
        converged=bool(int(converged)),
        projected=bool(int(projected)),
        regular_center=None if head["regular"] == ["-"] else [float(t) for t in head["regular"]],
    )
