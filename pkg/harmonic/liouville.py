"""
Liouville 型结论的数值机制

- 凸函数 φ∘u 的下鞅性 (逐点 Δ_V φ(u) ≥ 0 与 Monte-Carlo 单调性)
- 增长下界 2t|du|²(x) ≤ E_x[d_N²(u(X_{t∧τ}), o)] − d_N²(u(x), o) 与 |du|² 的下鞅性
- 固定有界边界振荡、定义域不断扩大时 |du|²(中心) 的衰减
- 递归性判别与有界 V-调和剖面振荡趋零之间的对应
"""

import math
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
from SimpleLLMFunc.logger import app_log, push_warning

from bochner.maps import energy_density
from bochner.schemas import SmoothMapSpec
from common.errors import InputError, InvalidConfigurationError, NoConvergenceError, PreconditionError
from common.stats import McEstimate, VerdictStatus, combine_status, slack
from diffusion import (
    RECURRENT_RATIO,
    DiffusionReport,
    increment_ratio,
    recurrence_scan,
    scale_function_probability,
    simulate_ensemble,
)
from geometry import DriftField, EffectiveDimension, ManifoldKind, ManifoldModel
from .estimates import require_nonnegative_curvature
from .lattice import BoundaryData
from .schemas import ConvexGauge, MapGrid
from .solver import discrete_laplacian_V, solve_family

POINTWISE_TOL = 1e-4
DECAY_SLOPE = -0.9
LOW_POWER_FRACTION = 0.5
DEFAULT_T_GRID = (0.0, 0.1, 0.2, 0.3, 0.4, 0.5)


def _holds_at_least(estimate: McEstimate, bound: float, z: Optional[float]) -> VerdictStatus:
    """单侧: mean + z·se ≥ bound 即未被否定"""
    tol = 1e-12 * max(1.0, abs(bound))
    return VerdictStatus.PASS if estimate.mean + slack(estimate.stderr, z) >= bound - tol else VerdictStatus.FAIL


def _exact(value: float) -> McEstimate:
    return McEstimate(mean=float(value), stderr=0.0, n_samples=1)


def submartingale_phi_check(
    grid: MapGrid,
    gauge: ConvexGauge,
    n_paths: int,
    master_seed: int,
    t_grid: Sequence[float] = DEFAULT_T_GRID,
    dt: float = 1e-3,
    x0: Optional[np.ndarray] = None,
    tol: float = POINTWISE_TOL,
    z: Optional[float] = None,
) -> DiffusionReport:
    """
    φ(u) 的下鞅性

    (i) 用求解器的离散算子在全部内部节点上检验 Δ_V φ(u) ≥ −tol;
    (ii) 路径在网格边界停止, 检验 t ↦ E[φ(u(X_{t∧τ}))] 在 t_grid 上不减 (相邻差的成对估计)。

    Raises:
        InputError: gauge 的 κ 与目标不符
        PreconditionError: u 的取值不在正则球内
    """
    if grid.target.kind != ManifoldKind.SPHERE or not math.isclose(grid.target.kappa, gauge.kappa):
        raise InputError(
            f"gauge kappa={gauge.kappa:g} is inconsistent with target {grid.target.describe()}", param="gauge"
        )
    reach = float(np.max(grid.target.distance(np.asarray(gauge.o), grid.all_values())))
    if reach >= gauge.regular_radius:
        raise PreconditionError(f"map reaches {reach:.4g} outside the regular ball", param="u")

    report = DiffusionReport(name="submartingale_phi", status=VerdictStatus.PASS)
    lap = discrete_laplacian_V(grid, gauge.evaluate)
    worst = float(np.min(lap))
    n_bad = int(np.sum(lap < -tol))
    pointwise = VerdictStatus.PASS if n_bad == 0 else VerdictStatus.FAIL
    report.add(0.0, "min_laplacian_phi", _exact(worst), -tol, pointwise)
    if n_bad:
        push_warning(f"⚠️ Δ_V φ(u) < {-tol:g} at {n_bad} of {len(lap)} nodes (min {worst:.3e})")

    times = sorted(float(t) for t in t_grid)
    x0 = grid.center if x0 is None else np.asarray(x0, dtype=float)
    ens = simulate_ensemble(
        grid.domain,
        grid.drift,
        x0,
        times[-1],
        dt,
        n_paths,
        master_seed,
        p=grid.center,
        observe_times=times,
        stop_radius=grid.radius,
    )
    phi = [gauge.evaluate(grid.evaluate(ens.points[j])) for j in range(len(times))]
    statuses = [pointwise]
    for j in range(1, len(times)):
        est = McEstimate.from_samples(phi[j] - phi[j - 1])
        status = _holds_at_least(est, 0.0, z)
        statuses.append(status)
        report.add(times[j], "increment_phi", est, 0.0, status)
    report.status = combine_status(statuses)
    report.note = f"{n_bad} nodes below -{tol:g}; stopped fraction {float(np.mean(ens.exited)):.3f}"
    app_log(f"🔍 submartingale check: pointwise min {worst:.3e}, status {report.status.value}")
    return report


def liouville_lower_bound_check(
    u: Union[MapGrid, SmoothMapSpec],
    V: Optional[DriftField],
    m: EffectiveDimension,
    t_grid: Sequence[float],
    n_paths: int,
    master_seed: int,
    x0: Optional[np.ndarray] = None,
    o: Optional[np.ndarray] = None,
    dt: float = 1e-3,
    z: Optional[float] = None,
    curvature_radius: float = 4.0,
) -> DiffusionReport:
    """
    每个 t 两行:
      growth:   2E[t∧τ]·|du|²(x0) ≤ E[d_N²(u(X_{t∧τ}), o)] − d_N²(u(x0), o)
      energy:   |du|²(x0) ≤ E[|du|²(X_{t∧τ})]

    MapGrid 的路径在网格边界停止 (τ 为首出时, 否则 τ = ∞); o 缺省取 u(x0)。
    停止比例超过一半时两行都记为 low-power。

    Raises:
        PreconditionError: 目标不是 Hadamard 型、Ric_V^m 采样为负, 或网格未求解
    """
    target = u.target
    if not target.is_hadamard:
        raise PreconditionError(f"growth estimate needs a Hadamard target, got {target.describe()}", param="u")
    if isinstance(u, MapGrid):
        if not u.converged:
            raise PreconditionError("map is not solved", param="u")
        V = u.drift if V is None else V
        p = u.center
        stop = u.radius
        radius = u.radius
        value_fn: Callable[[np.ndarray], np.ndarray] = u.evaluate
        density_fn: Callable[[np.ndarray], np.ndarray] = u.energy_density_at
    else:
        p = np.zeros(u.domain.dim)
        stop = None
        radius = curvature_radius
        value_fn = u.evaluate

        def density_fn(x: np.ndarray) -> np.ndarray:
            return energy_density(u, x)

    require_nonnegative_curvature(u.domain, V, m, radius)
    x0 = p if x0 is None else np.asarray(x0, dtype=float)
    y0 = value_fn(x0[None, :])[0]
    o = y0 if o is None else np.asarray(o, dtype=float)
    d0 = float(target.distance(o, y0)) ** 2
    du0 = float(np.ravel(density_fn(x0[None, :]))[0])

    times = sorted(float(t) for t in t_grid if t > 0)
    if not times:
        raise InputError("t_grid needs positive times", param="t_grid")
    ens = simulate_ensemble(
        u.domain, V, x0, times[-1], dt, n_paths, master_seed, p=p, observe_times=times, stop_radius=stop
    )
    report = DiffusionReport(name="liouville_lower_bound", status=VerdictStatus.PASS)
    statuses: List[VerdictStatus] = []
    for j, t in enumerate(times):
        pts = ens.points[j]
        hit = ens.exited & (ens.exit_times <= t + 1e-12)
        stopped = float(np.mean(hit))
        elapsed = float(np.mean(np.where(hit, ens.exit_times, t)))
        growth = McEstimate.from_samples(target.distance(o, value_fn(pts)) ** 2 - d0)
        energy = McEstimate.from_samples(density_fn(pts))
        rows = [
            ("growth", growth, 2.0 * elapsed * du0),
            ("energy", energy, du0),
        ]
        for name, est, bound in rows:
            status = _holds_at_least(est, bound, z)
            if stopped > LOW_POWER_FRACTION:
                status = VerdictStatus.LOW_POWER
            statuses.append(status)
            report.add(t, name, est, bound, status)
        if stopped > LOW_POWER_FRACTION:
            push_warning(f"⚠️ {stopped:.1%} of paths stopped before t={t:g}; result is low-power")
    report.status = combine_status(statuses)
    report.truncated_fraction = float(np.mean(ens.truncated))
    report.note = f"|du|^2(x0) = {du0:.6g}"
    return report


def liouville_decay_demo(
    domain: ManifoldModel,
    target: ManifoldModel,
    boundary: BoundaryData,
    radii: Sequence[float],
    V: Optional[DriftField],
    m: EffectiveDimension,
    cells: int = 16,
    tol: float = 1e-8,
    max_workers: Optional[int] = None,
) -> DiffusionReport:
    """
    固定有界边界振荡, 在 B_a (a ∈ radii) 上求解并记录 |du|²(中心)

    |du|²(中心) 随 a 不增且 log-log 斜率 ≤ −0.9 时为 pass。这是定性演示, 不是定理检验。

    Raises:
        InvalidConfigurationError: m 不在 [−∞,0] ∪ [n,∞] 内
        PreconditionError: Ric_V^m 采样为负
        NoConvergenceError: 某个网格未收敛
    """
    radii = sorted(float(a) for a in radii)
    if len(radii) < 2:
        raise InputError("decay demo needs at least two radii", param="radii")
    if not m.in_liouville_range():
        raise InvalidConfigurationError(f"m = {m.label()} is outside [-inf, 0] ∪ [n, inf]", param="m")
    require_nonnegative_curvature(domain, V, m, radii[-1])

    grids = solve_family(domain, target, boundary, radii, cells=cells, V=V, tol=tol, max_workers=max_workers)
    for g in grids:
        if not g.converged:
            raise NoConvergenceError(f"solver did not converge on B_{g.radius:g}", param="radii")
    density = np.array([g.center_energy_density() for g in grids])

    report = DiffusionReport(name="liouville_decay", status=VerdictStatus.PASS)
    statuses: List[VerdictStatus] = []
    for idx, (a, e) in enumerate(zip(radii, density)):
        prev = density[idx - 1] if idx else e
        ok = e <= prev * (1.0 + 1e-6) + 1e-14
        status = VerdictStatus.PASS if ok else VerdictStatus.FAIL
        statuses.append(status)
        report.add(a, "energy_density_center", _exact(e), float(prev), status)

    if np.all(density <= 1e-14):
        slope = -math.inf
        report.note = "constant solution on every domain"
    else:
        slope = float(np.polyfit(np.log(radii), np.log(np.maximum(density, 1e-300)), 1)[0])
        report.note = f"log-log slope {slope:.4f}; m_u = {[round(g.m_u(), 6) for g in grids]}"
    slope_status = VerdictStatus.PASS if slope <= DECAY_SLOPE else VerdictStatus.FAIL
    statuses.append(slope_status)
    report.add(radii[-1], "loglog_slope", _exact(slope if math.isfinite(slope) else -1e300), DECAY_SLOPE, slope_status)
    report.status = combine_status(statuses)
    app_log(f"✅ decay demo over a = {radii}: slope {slope:.3f}, status {report.status.value}")
    return report


def _shell_oscillation(grid: MapGrid, gauge: ConvexGauge, r_ref: float) -> float:
    dist = grid.domain.distance(grid.center, grid.nodes)
    values = gauge.evaluate(grid.values[dist <= r_ref + 1e-12])
    return float(np.max(values) - np.min(values)) if values.size else 0.0


def recurrence_liouville_bridge(
    manifold: ManifoldModel,
    V: Optional[DriftField],
    a: float,
    r_start: float,
    b0: float,
    k_max: int,
    n_paths: int,
    master_seed: int,
    dt: float = 1e-3,
    reference: Optional[Tuple[float, float]] = None,
    p: Optional[np.ndarray] = None,
    grids: Optional[Sequence[MapGrid]] = None,
    gauge: Optional[ConvexGauge] = None,
    step_budget: Optional[float] = None,
) -> DiffusionReport:
    """
    把递归性扫描与有界 V-调和剖面 h_b(r) = P_r(先到 a 再到 b) 的振荡联系起来

    参考壳层 [r1, r2] 上的振荡 h_b(r1) − h_b(r2) 在 b → ∞ 时趋零当且仅当扩散递归;
    用 1/振荡 的增量几何比 (与扫描相同的阈值) 判断是否趋零。
    两个判别一致为 pass, 不一致为 fail, 扫描不确定时为 inconclusive。

    给出 grids 与 gauge 时, 另检验扩大定义域上 φ(u) 在 B_{r1} 内的振荡不增。
    """
    r1, r2 = reference if reference is not None else (r_start, 0.5 * (r_start + b0))
    if not a < r1 < r2 < b0:
        raise InputError(f"reference shell [{r1:g}, {r2:g}] must lie inside ({a:g}, {b0:g})", param="reference")

    scan = recurrence_scan(manifold, V, a, r_start, b0, k_max, n_paths, master_seed, dt, p, None, step_budget)
    oscillation = [
        scale_function_probability(manifold, V, a, b, r1, p) - scale_function_probability(manifold, V, a, b, r2, p)
        for b in scan.b_values
    ]
    _, ratio = increment_ratio([1.0 / w if w > 0 else math.inf for w in oscillation])
    decays = ratio is not None and ratio >= RECURRENT_RATIO

    report = DiffusionReport(name="recurrence_liouville_bridge", status=VerdictStatus.PASS)
    for b, est, w in zip(scan.b_values, scan.probabilities, oscillation):
        report.add(b, "P_b", est, float("nan"), VerdictStatus.PASS)
        report.add(b, "profile_oscillation", _exact(w), float("nan"), VerdictStatus.PASS)

    if scan.classification == "inconclusive":
        status = VerdictStatus.INCONCLUSIVE
    elif (scan.classification == "recurrent") == decays:
        status = VerdictStatus.PASS
    else:
        status = VerdictStatus.FAIL
    statuses = [status]

    if grids is not None and gauge is not None:
        ordered = sorted(grids, key=lambda g: g.radius)
        osc = [_shell_oscillation(g, gauge, r1) for g in ordered]
        for idx, (g, w) in enumerate(zip(ordered, osc)):
            prev = osc[idx - 1] if idx else w
            ok = w <= prev * (1.0 + 1e-6) + 1e-14
            st = VerdictStatus.PASS if ok else VerdictStatus.FAIL
            statuses.append(st)
            report.add(g.radius, "gauge_oscillation", _exact(w), prev, st)

    report.status = combine_status(statuses)
    report.censored_fraction = scan.censored_fraction
    report.note = (
        f"scan {scan.classification} (ratio {scan.ratio}); profile oscillation "
        f"{'decays' if decays else 'persists'} (ratio {ratio})"
    )
    app_log(f"🔍 recurrence/Liouville bridge: {report.note}")
    return report
