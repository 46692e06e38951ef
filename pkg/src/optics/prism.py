"""회전 웨지 프리즘 광학 모델 (정확 모델 / 단일 회전 단순화 모델)

좌표 규약
- 카메라는 +z_c 를 바라보고, 입사 광선의 진행 방향은 z < 0.
- 웨지 법선 z_w(θ) = R(z_c, θ)·R(x_c, α)·z_c : x 축 기울임 후 방위 회전.
- 굴절은 유리로 들어갈 때 법선 쪽으로, 나올 때 법선 반대쪽으로 꺾이도록 회전 부호를 정한다.
"""
import math
from dataclasses import dataclass

import numpy as np

from src.optics.camera import Intrinsics, backproject_batch, project_batch
from src.optics.vectors import (
    TWO_PI, X_C, Z_C, UnitVec3, normalize_rows, rotate_about_axis, rotate_vectors,
)
from src.utils.config import OPTICS_CONFIG, kv_float
from src.utils.errors import ConfigError, DegenerateGeometry, TotalInternalReflection
from src.utils.logger import get_logger

logger = get_logger(__name__)

N_AIR = OPTICS_CONFIG["n_air"]


@dataclass(frozen=True)
class PrismConfig:
    """웨지 프리즘 물리 파라미터

    alpha 는 라디안, rotation_speed 는 초당 회전수.
    """
    alpha: float
    n: float
    rotation_speed: float

    def __post_init__(self):
        if not self.n > 1.0:
            raise ConfigError(f"굴절률은 1 보다 커야 합니다: n={self.n}")
        if not 0.0 < self.alpha < math.radians(10.0):
            raise ConfigError(f"웨지 각은 (0, 10°) 범위여야 합니다: {math.degrees(self.alpha):.3f}°")
        if self.rotation_speed < 0:
            raise ConfigError(f"회전 속도는 음수일 수 없습니다: {self.rotation_speed}")

    @property
    def period_s(self) -> float:
        return math.inf if self.rotation_speed == 0 else 1.0 / self.rotation_speed

    @property
    def omega(self) -> float:
        """각속도 (rad/s)"""
        return TWO_PI * self.rotation_speed

    @classmethod
    def default(cls) -> "PrismConfig":
        return cls(
            alpha=math.radians(OPTICS_CONFIG["alpha_deg"]),
            n=OPTICS_CONFIG["n"],
            rotation_speed=OPTICS_CONFIG["rotation_rpm"] / 60.0,
        )

    @classmethod
    def from_kv(cls, values: dict) -> "PrismConfig":
        if "rotation_hz" in values:
            speed = kv_float(values, "rotation_hz")
        else:
            speed = kv_float(values, "rotation_rpm", OPTICS_CONFIG["rotation_rpm"]) / 60.0
        return cls(
            alpha=math.radians(kv_float(values, "alpha_deg", OPTICS_CONFIG["alpha_deg"])),
            n=kv_float(values, "n", OPTICS_CONFIG["n"]),
            rotation_speed=speed,
        )

    def to_kv(self) -> dict:
        return {
            "alpha_deg": math.degrees(self.alpha),
            "n": self.n,
            "rotation_rpm": self.rotation_speed * 60.0,
        }


def snell_refract(incidence_angle: float, n_from: float, n_to: float) -> float:
    """Snell 법칙: 굴절각 = arcsin(n_from·sin(i)/n_to)"""
    s = n_from * math.sin(incidence_angle) / n_to
    if abs(s) > 1.0:
        raise TotalInternalReflection(
            f"전반사: sin={s:.6f} (i={math.degrees(incidence_angle):.4f}°, {n_from}→{n_to})"
        )
    return math.asin(s)


def wedge_axis(theta: float, alpha: float) -> UnitVec3:
    """프리즘 회전각 θ 에서의 웨지 면 법선 z_w(θ)"""
    tilted = rotate_about_axis(Z_C, X_C, alpha)
    return rotate_about_axis(tilted, Z_C, theta)


def wedge_axis_batch(theta: np.ndarray, alpha: float) -> np.ndarray:
    theta = np.asarray(theta, dtype=np.float64)
    sa = math.sin(alpha)
    return np.stack(
        [sa * np.sin(theta), -sa * np.cos(theta), np.full(theta.shape, math.cos(alpha))], axis=-1
    )


# ==================== 정확 모델 ====================

def _refract_batch(v: np.ndarray, normal: np.ndarray, n_from: float, n_to: float) -> np.ndarray:
    """면 법선 기준 굴절. 법선은 진행 방향 쪽으로 맞춘 뒤 v×m 축 둘레로 (ψ − ψ′) 만큼 회전"""
    normal = np.broadcast_to(normal, v.shape)
    cos_in = np.sum(v * normal, axis=-1, keepdims=True)
    m = np.where(cos_in < 0.0, -normal, normal)
    cross = np.cross(v, m)
    sin_in = np.linalg.norm(cross, axis=-1)
    s = n_from * sin_in / n_to
    if np.any(s > 1.0):
        raise TotalInternalReflection(f"전반사: 최대 sin={float(s.max()):.6f} ({n_from}→{n_to})")
    psi_in = np.arcsin(np.clip(sin_in, 0.0, 1.0))
    psi_out = np.arcsin(s)
    straight = sin_in < 1e-15
    axis = cross / np.where(straight, 1.0, sin_in)[:, None]
    out = rotate_vectors(v, axis, np.where(straight, 0.0, psi_in - psi_out))
    return normalize_rows(out)


def prism_transmit_full_batch(v_in: np.ndarray, z_w: np.ndarray, n: float) -> np.ndarray:
    """(N,3) 입사 방향 → 프리즘 통과 후 방향. 입사면 법선 z_c, 출사면 법선 z_w"""
    v = np.asarray(v_in, dtype=np.float64)
    inside = _refract_batch(v, Z_C.as_array(), N_AIR, n)
    return _refract_batch(inside, np.asarray(z_w, dtype=np.float64), n, N_AIR)


def prism_transmit_full(v_in: UnitVec3, z_w: UnitVec3, n: float) -> UnitVec3:
    out = prism_transmit_full_batch(v_in.as_array()[None, :], z_w.as_array(), n)[0]
    return UnitVec3.from_array(out)


# ==================== 단순화 모델 ====================

def _deflection_axis(z_w: np.ndarray) -> np.ndarray:
    w = np.cross(z_w, Z_C.as_array())
    norm = np.linalg.norm(w, axis=-1, keepdims=True)
    if np.any(norm < 1e-9):
        raise DegenerateGeometry("z_w 가 z_c 와 평행합니다 (회전축 정의 불가)")
    return w / norm


def prism_transmit_simplified_batch(v_in: np.ndarray, z_w: np.ndarray, delta) -> np.ndarray:
    axis = _deflection_axis(np.asarray(z_w, dtype=np.float64))
    return normalize_rows(rotate_vectors(np.asarray(v_in, dtype=np.float64), axis, delta))


def prism_transmit_simplified(v_in: UnitVec3, z_w: UnitVec3, delta: float) -> UnitVec3:
    """z_w×z_c 축 둘레 단일 회전 δ"""
    out = prism_transmit_simplified_batch(v_in.as_array()[None, :], z_w.as_array(), delta)[0]
    return UnitVec3.from_array(out)


def _signed_angle_about(v: np.ndarray, v_out: np.ndarray, axis: np.ndarray) -> np.ndarray:
    """axis 에 수직인 평면으로 사영한 뒤의 부호 있는 각"""
    axis = np.broadcast_to(axis, v.shape)
    v_perp = v - axis * np.sum(v * axis, axis=-1, keepdims=True)
    o_perp = v_out - axis * np.sum(v_out * axis, axis=-1, keepdims=True)
    sin_part = np.sum(np.cross(v_perp, o_perp) * axis, axis=-1)
    cos_part = np.sum(v_perp * o_perp, axis=-1)
    return np.arctan2(sin_part, cos_part)


def deflection_angle_batch(v_in: np.ndarray, z_w: np.ndarray, n: float) -> np.ndarray:
    axis = _deflection_axis(np.asarray(z_w, dtype=np.float64))
    v_out = prism_transmit_full_batch(v_in, z_w, n)
    return _signed_angle_about(np.asarray(v_in, dtype=np.float64), v_out, axis)


def deflection_angle(v_in: UnitVec3, z_w: UnitVec3, n: float) -> float:
    """정확 모델 출력을 z_w×z_c 축 둘레 단일 회전으로 표현했을 때의 δ (동일 평면에서 정확)"""
    return float(deflection_angle_batch(v_in.as_array()[None, :], z_w.as_array(), n)[0])


def axial_deflection(prism: PrismConfig) -> float:
    """광축 광선의 편향각 asin(n·sin α) − α"""
    return math.asin(prism.n * math.sin(prism.alpha)) - prism.alpha


# ==================== 단순화 오차 스윕 ====================

@dataclass
class SimplificationReport:
    max_px: float
    mean_px: float
    n_rays: int
    n_thetas: int


def fov_pixel_grid(K: Intrinsics, fov_deg: float = 90.0, stride_px: float = 16.0) -> np.ndarray:
    """화각 fov_deg 원뿔 안에 드는 픽셀 격자 (N,2)"""
    us = np.arange(0.0, K.width, stride_px)
    vs = np.arange(0.0, K.height, stride_px)
    uu, vv = np.meshgrid(us, vs)
    pix = np.stack([uu.ravel(), vv.ravel()], axis=1)
    tan_field = np.hypot((pix[:, 0] - K.cx) / K.fx, (pix[:, 1] - K.cy) / K.fy)
    return pix[tan_field <= math.tan(math.radians(fov_deg) / 2.0) + 1e-12]


def fit_pixel_deflection(K: Intrinsics, prism: PrismConfig, pixels: np.ndarray,
                         thetas: np.ndarray | None = None) -> np.ndarray:
    """픽셀별 θ-고정 δ: 한 바퀴에 걸친 정확 모델 편향각의 평균"""
    if thetas is None:
        thetas = np.linspace(0.0, TWO_PI, 24, endpoint=False)
    rays = backproject_batch(pixels, K)
    deltas = np.empty((len(thetas), len(rays)))
    for i, theta in enumerate(thetas):
        deltas[i] = deflection_angle_batch(rays, wedge_axis_batch(theta, prism.alpha), prism.n)
    return deltas.mean(axis=0)


def simplification_error(K: Intrinsics, prism: PrismConfig, pixels: np.ndarray | None = None,
                         thetas: np.ndarray | None = None) -> SimplificationReport:
    """정확 모델과 단순화 모델의 최대 재투영 차이 (픽셀)"""
    if pixels is None:
        pixels = fov_pixel_grid(K)
    if thetas is None:
        thetas = np.linspace(0.0, TWO_PI, 24, endpoint=False)
    rays = backproject_batch(pixels, K)
    delta = fit_pixel_deflection(K, prism, pixels, thetas)

    worst = 0.0
    total = 0.0
    for theta in thetas:
        z_w = wedge_axis_batch(theta, prism.alpha)
        full = project_batch(prism_transmit_full_batch(rays, z_w, prism.n), K)
        simple = project_batch(prism_transmit_simplified_batch(rays, z_w, delta), K)
        gap = np.linalg.norm(full - simple, axis=1)
        worst = max(worst, float(gap.max()))
        total += float(gap.sum())

    report = SimplificationReport(
        max_px=worst,
        mean_px=total / (len(rays) * len(thetas)),
        n_rays=len(rays),
        n_thetas=len(thetas),
    )
    logger.info(
        f"🔍 단순화 오차: 최대 {report.max_px:.3f}px, 평균 {report.mean_px:.3f}px "
        f"(광선 {report.n_rays}개 × θ {report.n_thetas}개)"
    )
    return report
