"""상면(image plane) 원형 변위 모델

프리즘 각 θ 에서 고정된 장면 광선의 상이 그리는 원: 반지름 r(p), 위상 θ + θ_b.
"""
import math
from dataclasses import dataclass

import numpy as np

from src.optics.camera import Intrinsics, backproject_batch, project_batch
from src.optics.prism import PrismConfig, axial_deflection, prism_transmit_full_batch, wedge_axis_batch
from src.optics.vectors import wrap_angle
from src.utils.errors import ConfigError


@dataclass(frozen=True)
class CompensationParams:
    """보정된 원형 변위 모델 파라미터

    r: 반지름 (px), theta_b: 위상 바이어스 [0, 2π), center: 광학 중심 (px),
    k1: 방사 보정 계수 r(ρ) = r·(1 + k1·ρ²), ρ = |p − c| / |c|
    """
    r: float
    theta_b: float
    center: tuple[float, float] = (0.0, 0.0)
    k1: float = 0.0

    def __post_init__(self):
        if not (self.r >= 0 and math.isfinite(self.r)):
            raise ConfigError(f"변위 반지름은 0 이상이어야 합니다: r={self.r}")
        object.__setattr__(self, "theta_b", wrap_angle(float(self.theta_b)))
        object.__setattr__(self, "center", (float(self.center[0]), float(self.center[1])))

    def radius_at(self, x, y):
        """픽셀 위치별 반지름 (k1 = 0 이면 전역 상수)"""
        if self.k1 == 0.0:
            return np.full(np.shape(x), self.r) if np.ndim(x) else self.r
        cx, cy = self.center
        scale = math.hypot(cx, cy) or 1.0
        rho2 = ((np.asarray(x) - cx) ** 2 + (np.asarray(y) - cy) ** 2) / (scale * scale)
        return self.r * (1.0 + self.k1 * rho2)

    def displacement(self, x, y, theta):
        """(dx, dy) 배열 반환"""
        radius = self.radius_at(x, y)
        phase = np.asarray(theta, dtype=np.float64) + self.theta_b
        return radius * np.cos(phase), radius * np.sin(phase)

    def reference_offset(self, theta0: float = 0.0) -> tuple[float, float]:
        """θ₀ 시점 변위. 보정된 스트림은 이만큼 밀린 장면을 보여준다."""
        return self.r * math.cos(theta0 + self.theta_b), self.r * math.sin(theta0 + self.theta_b)

    def with_values(self, r: float | None = None, theta_b: float | None = None) -> "CompensationParams":
        return CompensationParams(
            r=self.r if r is None else r,
            theta_b=self.theta_b if theta_b is None else theta_b,
            center=self.center,
            k1=self.k1,
        )


def pixel_displacement(p, theta: float, params: CompensationParams) -> tuple[float, float]:
    """단일 픽셀의 상면 변위"""
    dx, dy = params.displacement(float(p[0]), float(p[1]), theta)
    return float(dx), float(dy)


def initial_radius_px(prism: PrismConfig, K: Intrinsics) -> float:
    """하드웨어 초기값 r₀: 광축 편향각을 픽셀로 환산"""
    return K.fx * math.tan(axial_deflection(prism))


def _transmit_displacement(pixels: np.ndarray, wedge_theta: float, prism: PrismConfig,
                           K: Intrinsics) -> np.ndarray:
    rays = backproject_batch(pixels, K)
    out = prism_transmit_full_batch(rays, wedge_axis_batch(wedge_theta, prism.alpha), prism.n)
    return project_batch(out, K) - pixels


def axial_phase(prism: PrismConfig, K: Intrinsics) -> float:
    """웨지 회전각 0 에서 주점 변위의 방향각"""
    d = _transmit_displacement(np.array([[K.cx, K.cy]]), 0.0, prism, K)[0]
    return math.atan2(d[1], d[0])


def full_model_displacement(pixels: np.ndarray, theta: float, prism: PrismConfig,
                            K: Intrinsics) -> np.ndarray:
    """정확 투과 모델로 계산한 (N,2) 상면 변위

    원형 모델과 같은 위상 기준: 주점의 변위는 r₀·(cos θ, sin θ).
    """
    pixels = np.atleast_2d(np.asarray(pixels, dtype=np.float64))
    return _transmit_displacement(pixels, theta - axial_phase(prism, K), prism, K)
