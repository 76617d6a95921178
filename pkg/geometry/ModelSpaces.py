"""
四类模型流形的解析实现

- EuclideanSpace: 全局笛卡尔坐标
- StereographicSpace: 常曲率 κ ≠ 0, 度量 g = λ²I, λ = 2/(1+κ|x|²)
  (κ<0 为 Poincaré 球, κ>0 为球极投影)
- RotationallySymmetricSpace: g = dr² + φ(r)² g_{S^{n-1}}, 笛卡尔坐标下
  g = ψ I + (1−ψ) x̂x̂ᵀ, ψ = (φ/r)²
"""

import math

import numpy as np
import sympy as sp
from scipy.optimize import brentq

from common.errors import InputError, UnsupportedConfigurationError
from .expression import parse_radial, radial_symbol
from .ManifoldModel import ManifoldModel
from .schemas import ManifoldKind, ManifoldSpec

_ORIGIN_TOL = 1e-6


def tan_kappa(kappa: float, s):
    """tan_κ(s): κ>0 为 tan(√κ s)/√κ, κ<0 为 tanh(√|κ| s)/√|κ|, κ=0 为 s"""
    s = np.asarray(s, dtype=float)
    if kappa > 0:
        k = math.sqrt(kappa)
        return np.tan(k * s) / k
    if kappa < 0:
        k = math.sqrt(-kappa)
        return np.tanh(k * s) / k
    return s


def artan_kappa(kappa: float, u):
    u = np.asarray(u, dtype=float)
    if kappa > 0:
        k = math.sqrt(kappa)
        return np.arctan(k * u) / k
    if kappa < 0:
        k = math.sqrt(-kappa)
        return np.arctanh(np.minimum(k * u, 1.0)) / k
    return u


def cot_kappa_array(kappa: float, r):
    """cot_κ 的向量化版本, 不做极点/定义域检查 (检查版本见 comparison.radial)"""
    r = np.asarray(r, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        if kappa > 0:
            k = math.sqrt(kappa)
            return k / np.tan(k * r)
        if kappa < 0:
            k = math.sqrt(-kappa)
            return k / np.tanh(k * r)
        return 1.0 / r


def mobius_add(kappa: float, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """曲率 κ 的 Möbius 加法 x ⊕ y"""
    xy = np.sum(x * y, axis=-1, keepdims=True)
    x2 = np.sum(x * x, axis=-1, keepdims=True)
    y2 = np.sum(y * y, axis=-1, keepdims=True)
    num = (1.0 - 2.0 * kappa * xy - kappa * y2) * x + (1.0 + kappa * x2) * y
    den = 1.0 - 2.0 * kappa * xy + kappa**2 * x2 * y2
    return num / den


class EuclideanSpace(ManifoldModel):
    kind = ManifoldKind.EUCLIDEAN

    def __init__(self, dim: int):
        super().__init__(dim, 0.0)

    def metric(self, x):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(np.eye(self.dim), x.shape[:-1] + (self.dim, self.dim)).copy()

    def inverse_metric(self, x):
        return self.metric(x)

    def christoffel(self, x):
        x = np.asarray(x, dtype=float)
        return np.zeros(x.shape[:-1] + (self.dim,) * 3)

    def ricci(self, x):
        x = np.asarray(x, dtype=float)
        return np.zeros(x.shape[:-1] + (self.dim, self.dim))

    def contracted_christoffel(self, x):
        return np.zeros(np.shape(x))

    def diffusion_coefficient(self, x):
        return self.metric(x)

    @property
    def cut_locus_radius(self) -> float:
        return math.inf

    @property
    def sectional_bound(self):
        return 0.0

    def distance(self, p, x):
        return np.linalg.norm(np.asarray(x, dtype=float) - np.asarray(p, dtype=float), axis=-1)

    def exp_map(self, x, v):
        return np.asarray(x, dtype=float) + np.asarray(v, dtype=float)

    def log_map(self, x, y):
        return np.asarray(y, dtype=float) - np.asarray(x, dtype=float)

    def radial_laplacian(self, p, x):
        with np.errstate(divide="ignore"):
            return (self.dim - 1) / self.distance(p, x)

    def chart_radius(self, r: float) -> float:
        return float(r)

    @property
    def is_conformal(self) -> bool:
        return True

    def conformal_factor(self, x):
        return np.ones(np.shape(x)[:-1])


class StereographicSpace(ManifoldModel):
    """常曲率 κ ≠ 0 的共形坐标卡模型"""

    def __init__(self, dim: int, kappa: float):
        if kappa == 0.0:
            raise InputError("stereographic model requires kappa != 0, use EuclideanSpace", param="kappa")
        super().__init__(dim, kappa)
        self.kind = ManifoldKind.SPHERE if kappa > 0 else ManifoldKind.HYPERBOLIC

    def conformal_factor(self, x):
        x = np.asarray(x, dtype=float)
        return 2.0 / (1.0 + self.kappa * np.sum(x * x, axis=-1))

    @property
    def is_conformal(self) -> bool:
        return True

    def _dphi(self, x):
        # φ = log λ, ∂_k φ = −κ x_k λ
        x = np.asarray(x, dtype=float)
        return -self.kappa * x * self.conformal_factor(x)[..., None]

    def metric(self, x):
        lam = self.conformal_factor(x)
        return (lam**2)[..., None, None] * np.eye(self.dim)

    def inverse_metric(self, x):
        lam = self.conformal_factor(x)
        return (lam**-2)[..., None, None] * np.eye(self.dim)

    def christoffel(self, x):
        d = self._dphi(x)
        eye = np.eye(self.dim)
        # Γ^k_ij = δ_ik ∂_jφ + δ_jk ∂_iφ − δ_ij ∂_kφ
        term1 = np.einsum("ki,...j->...kij", eye, d)
        term2 = np.einsum("kj,...i->...kij", eye, d)
        term3 = np.einsum("ij,...k->...kij", eye, d)
        return term1 + term2 - term3

    def ricci(self, x):
        return self.kappa * (self.dim - 1) * self.metric(x)

    def contracted_christoffel(self, x):
        lam = self.conformal_factor(x)
        return ((2 - self.dim) * lam**-2)[..., None] * self._dphi(x)

    def diffusion_coefficient(self, x):
        lam = self.conformal_factor(x)
        return (1.0 / lam)[..., None, None] * np.eye(self.dim)

    @property
    def cut_locus_radius(self) -> float:
        return math.pi / math.sqrt(self.kappa) if self.kappa > 0 else math.inf

    @property
    def sectional_bound(self):
        return self.kappa

    def contains(self, x):
        x = np.asarray(x, dtype=float)
        finite = np.all(np.isfinite(x), axis=-1)
        if self.kappa < 0:
            return finite & (np.sum(x * x, axis=-1) * (-self.kappa) < 1.0)
        return finite

    def distance(self, p, x):
        p = np.asarray(p, dtype=float)
        x = np.asarray(x, dtype=float)
        w = mobius_add(self.kappa, np.broadcast_to(-p, np.broadcast_shapes(p.shape, x.shape)), x)
        return 2.0 * artan_kappa(self.kappa, np.linalg.norm(w, axis=-1))

    def exp_map(self, x, v):
        x = np.asarray(x, dtype=float)
        v = np.asarray(v, dtype=float)
        x, v = np.broadcast_arrays(x, v)
        vn = np.linalg.norm(v, axis=-1, keepdims=True)
        lam = self.conformal_factor(x)[..., None]
        safe = np.where(vn > 0, vn, 1.0)
        step = tan_kappa(self.kappa, lam * vn / 2.0) * v / safe
        out = mobius_add(self.kappa, x, step)
        return np.where(vn > 0, out, x)

    def log_map(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        x, y = np.broadcast_arrays(x, y)
        w = mobius_add(self.kappa, -x, y)
        wn = np.linalg.norm(w, axis=-1, keepdims=True)
        lam = self.conformal_factor(x)[..., None]
        safe = np.where(wn > 0, wn, 1.0)
        out = (2.0 / lam) * artan_kappa(self.kappa, wn) * w / safe
        return np.where(wn > 0, out, 0.0)

    def radial_laplacian(self, p, x):
        return (self.dim - 1) * cot_kappa_array(self.kappa, self.distance(p, x))

    def chart_radius(self, r: float) -> float:
        return float(tan_kappa(self.kappa, r / 2.0))


class RotationallySymmetricSpace(ManifoldModel):
    """
    旋转对称模型 g = dr² + φ(r)² g_{S^{n-1}}

    距离、测地线与 Δr 只对坐标原点解析给出; 其他基点抛出 unsupported-configuration。
    """

    kind = ManifoldKind.ROTATIONALLY_SYMMETRIC

    def __init__(self, dim: int, warp: str):
        super().__init__(dim, 0.0)
        self.warp = warp
        r = radial_symbol()
        phi = parse_radial(warp)
        derivs = [phi, sp.diff(phi, r), sp.diff(phi, r, 2), sp.diff(phi, r, 3)]
        self._fns = [sp.lambdify(r, d, modules="numpy") for d in derivs]
        phi0 = float(sp.limit(phi, r, 0, "+"))
        dphi0 = float(sp.limit(derivs[1], r, 0, "+"))
        if abs(phi0) > 1e-12 or abs(dphi0 - 1.0) > 1e-12:
            raise InputError(
                f"warp '{warp}' must satisfy phi(0)=0 and phi'(0)=1 for a smooth metric",
                param="warp",
            )
        self._phi3_0 = float(sp.limit(derivs[3], r, 0, "+"))
        self._cut = self._first_zero()

    def _warp(self, k: int, r):
        r = np.asarray(r, dtype=float)
        return np.broadcast_to(np.asarray(self._fns[k](r), dtype=float), r.shape).copy()

    def _first_zero(self, r_max: float = 64.0) -> float:
        grid = np.linspace(1e-3, r_max, 64001)
        vals = self._warp(0, grid)
        sign_change = np.nonzero(vals[:-1] * vals[1:] <= 0.0)[0]
        if sign_change.size == 0:
            return math.inf
        i = int(sign_change[0])
        return float(brentq(lambda s: float(self._warp(0, s)), grid[i], grid[i + 1]))

    def _polar(self, x):
        x = np.asarray(x, dtype=float)
        r = np.linalg.norm(x, axis=-1)
        near = r < _ORIGIN_TOL
        safe = np.where(near, 1.0, r)
        xhat = np.where(near[..., None], 0.0, x / safe[..., None])
        return x, r, safe, near, xhat

    def _psi(self, safe):
        return (self._warp(0, safe) / safe) ** 2

    def metric(self, x):
        x, r, safe, near, xhat = self._polar(x)
        psi = np.where(near, 1.0, self._psi(safe))
        P = np.einsum("...i,...j->...ij", xhat, xhat)
        eye = np.eye(self.dim)
        return psi[..., None, None] * (eye - P) + P

    def inverse_metric(self, x):
        x, r, safe, near, xhat = self._polar(x)
        psi = np.where(near, 1.0, self._psi(safe))
        P = np.einsum("...i,...j->...ij", xhat, xhat)
        return (1.0 / psi)[..., None, None] * (np.eye(self.dim) - P) + P

    def diffusion_coefficient(self, x):
        x, r, safe, near, xhat = self._polar(x)
        psi = np.where(near, 1.0, self._psi(safe))
        P = np.einsum("...i,...j->...ij", xhat, xhat)
        return (psi**-0.5)[..., None, None] * (np.eye(self.dim) - P) + P

    def christoffel(self, x):
        x, r, safe, near, xhat = self._polar(x)
        phi = self._warp(0, safe)
        dphi = self._warp(1, safe)
        psi = (phi / safe) ** 2
        dpsi = (2.0 * phi / safe**2) * (dphi - phi / safe)
        b = (1.0 - psi) / safe**2
        db = -dpsi / safe**2 - 2.0 * (1.0 - psi) / safe**3
        eye = np.eye(self.dim)
        a_r = (dpsi / safe)[..., None, None, None]
        b_r = (db / safe)[..., None, None, None]
        # Γ_{k,ij} = ½[(a'/r)(x_i δ_jk + x_j δ_ik − x_k δ_ij) + (b'/r) x_i x_j x_k + 2b δ_ij x_k]
        sym = (
            np.einsum("...i,jk->...kij", x, eye)
            + np.einsum("...j,ik->...kij", x, eye)
            - np.einsum("...k,ij->...kij", x, eye)
        )
        cubic = np.einsum("...i,...j,...k->...kij", x, x, x)
        quad = np.einsum("ij,...k->...kij", eye, x)
        lowered = 0.5 * (a_r * sym + b_r * cubic + 2.0 * b[..., None, None, None] * quad)
        gamma = np.einsum("...lk,...kij->...lij", self.inverse_metric(x), lowered)
        return np.where(near[..., None, None, None], 0.0, gamma)

    def ricci(self, x):
        x, r, safe, near, xhat = self._polar(x)
        n = self.dim
        phi = self._warp(0, safe)
        dphi = self._warp(1, safe)
        ddphi = self._warp(2, safe)
        psi = (phi / safe) ** 2
        A = -(n - 1) * ddphi / phi
        B = -ddphi / phi + (n - 2) * (1.0 - dphi**2) / phi**2
        P = np.einsum("...i,...j->...ij", xhat, xhat)
        eye = np.eye(n)
        ric = A[..., None, None] * P + (B * psi)[..., None, None] * (eye - P)
        origin = -(n - 1) * self._phi3_0 * eye
        return np.where(near[..., None, None], origin, ric)

    @property
    def cut_locus_radius(self) -> float:
        return self._cut

    def contains(self, x):
        x = np.asarray(x, dtype=float)
        finite = np.all(np.isfinite(x), axis=-1)
        return finite & (np.linalg.norm(x, axis=-1) < self._cut)

    def _require_origin(self, p, what: str):
        if not np.allclose(np.asarray(p, dtype=float), 0.0, atol=1e-12):
            raise UnsupportedConfigurationError(
                f"{what} on a rotationally symmetric model is only available from the chart origin",
                param="p",
            )

    def distance(self, p, x):
        self._require_origin(p, "distance")
        return np.linalg.norm(np.asarray(x, dtype=float), axis=-1)

    def exp_map(self, x, v):
        self._require_origin(x, "exp_map")
        return np.asarray(v, dtype=float) + np.zeros_like(np.asarray(x, dtype=float))

    def log_map(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if np.allclose(y, 0.0, atol=1e-12):
            return -x + np.zeros_like(y)
        self._require_origin(x, "log_map")
        return y + np.zeros_like(x)

    def radial_laplacian(self, p, x):
        self._require_origin(p, "radial_laplacian")
        r = np.linalg.norm(np.asarray(x, dtype=float), axis=-1)
        with np.errstate(divide="ignore", invalid="ignore"):
            return (self.dim - 1) * self._warp(1, r) / self._warp(0, r)

    def chart_radius(self, r: float) -> float:
        return float(r)

    def describe(self) -> str:
        return f"rotationally_symmetric(n={self.dim}, warp={self.warp})"


def make_manifold(spec: ManifoldSpec) -> ManifoldModel:
    """按声明式描述构造模型流形"""
    if spec.kind == ManifoldKind.EUCLIDEAN:
        return EuclideanSpace(spec.dim)
    if spec.kind in (ManifoldKind.HYPERBOLIC, ManifoldKind.SPHERE):
        return StereographicSpace(spec.dim, spec.kappa)
    return RotationallySymmetricSpace(spec.dim, spec.warp)
