"""핀홀 카메라 투영 / 역투영

부호 규약: 카메라는 +z_c 방향을 바라보고, 카메라로 들어오는 빛의 진행 방향은 z < 0 이다.
project / backproject 는 빛의 진행 방향 벡터를 다룬다. X/Z 비율은 부호와 무관하다.
"""
import math
from dataclasses import dataclass

import numpy as np

from src.optics.vectors import UnitVec3, normalize_rows
from src.utils.config import kv_float, kv_int
from src.utils.errors import BehindCamera, ConfigError


@dataclass(frozen=True)
class Intrinsics:
    """카메라 내부 파라미터 (픽셀 단위)"""
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise ConfigError(f"초점거리는 양수여야 합니다: fx={self.fx}, fy={self.fy}")
        if self.width <= 0 or self.height <= 0:
            raise ConfigError(f"해상도가 잘못되었습니다: {self.width}x{self.height}")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise ConfigError(f"주점이 센서 밖입니다: ({self.cx}, {self.cy})")

    @property
    def K(self) -> np.ndarray:
        return np.array([[self.fx, 0.0, self.cx], [0.0, self.fy, self.cy], [0.0, 0.0, 1.0]])

    @classmethod
    def from_fov(cls, width: int, height: int, hfov_deg: float) -> "Intrinsics":
        """수평 화각으로부터 생성 (정사각 픽셀, 중앙 주점)"""
        f = (width / 2.0) / math.tan(math.radians(hfov_deg) / 2.0)
        return cls(f, f, width / 2.0, height / 2.0, width, height)

    @classmethod
    def from_kv(cls, values: dict) -> "Intrinsics":
        width = kv_int(values, "width")
        height = kv_int(values, "height")
        if "hfov_deg" in values and "fx" not in values:
            return cls.from_fov(width, height, kv_float(values, "hfov_deg"))
        fx = kv_float(values, "fx")
        return cls(
            fx=fx,
            fy=kv_float(values, "fy", fx),
            cx=kv_float(values, "cx", width / 2.0),
            cy=kv_float(values, "cy", height / 2.0),
            width=width,
            height=height,
        )


def project_batch(v: np.ndarray, K: Intrinsics) -> np.ndarray:
    """(N,3) 진행 방향 → (N,2) 픽셀 좌표"""
    v = np.asarray(v, dtype=np.float64)
    if np.any(v[:, 2] >= -1e-12):
        raise BehindCamera("z 성분이 음수가 아닌 광선은 센서에 도달하지 않습니다")
    u = K.fx * v[:, 0] / v[:, 2] + K.cx
    w = K.fy * v[:, 1] / v[:, 2] + K.cy
    return np.stack([u, w], axis=1)


def backproject_batch(p: np.ndarray, K: Intrinsics) -> np.ndarray:
    """(N,2) 픽셀 → 그 픽셀에 도달하는 (N,3) 단위 진행 방향"""
    p = np.asarray(p, dtype=np.float64)
    d = np.stack([(p[:, 0] - K.cx) / K.fx, (p[:, 1] - K.cy) / K.fy, np.ones(len(p))], axis=1)
    return -normalize_rows(d)


def project(v: UnitVec3, K: Intrinsics) -> tuple[float, float]:
    if v.z >= -1e-12:
        raise BehindCamera(f"광선이 카메라로 들어오지 않습니다 (z={v.z:.3g})")
    return K.fx * v.x / v.z + K.cx, K.fy * v.y / v.z + K.cy


def backproject(p, K: Intrinsics) -> UnitVec3:
    u, w = float(p[0]), float(p[1])
    return UnitVec3(-(u - K.cx) / K.fx, -(w - K.cy) / K.fy, -1.0)
