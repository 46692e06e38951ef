"""단위벡터와 축 회전 (Rodrigues)"""
import math
from dataclasses import dataclass

import numpy as np

from src.utils.config import OPTICS_CONFIG
from src.utils.errors import DegenerateAxis, DegenerateGeometry

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class UnitVec3:
    """3차원 방향 벡터. 생성 시 항상 정규화된다."""
    x: float
    y: float
    z: float

    def __post_init__(self):
        norm = math.sqrt(self.x * self.x + self.y * self.y + self.z * self.z)
        if not math.isfinite(norm) or norm < 1e-12:
            raise DegenerateGeometry(f"길이 0 벡터는 방향이 없습니다: ({self.x}, {self.y}, {self.z})")
        if norm != 1.0:
            object.__setattr__(self, "x", self.x / norm)
            object.__setattr__(self, "y", self.y / norm)
            object.__setattr__(self, "z", self.z / norm)

    @classmethod
    def from_array(cls, arr) -> "UnitVec3":
        a = np.asarray(arr, dtype=np.float64).reshape(3)
        return cls(float(a[0]), float(a[1]), float(a[2]))

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=np.float64)

    def dot(self, other: "UnitVec3") -> float:
        return self.x * other.x + self.y * other.y + self.z * other.z

    def __neg__(self) -> "UnitVec3":
        return UnitVec3(-self.x, -self.y, -self.z)


X_C = UnitVec3(1.0, 0.0, 0.0)
Y_C = UnitVec3(0.0, 1.0, 0.0)
Z_C = UnitVec3(0.0, 0.0, 1.0)


def wrap_angle(angle):
    """각도를 [0, 2π) 로 감싼다 (스칼라/배열 모두 지원)"""
    if np.ndim(angle) == 0:
        a = math.fmod(float(angle), TWO_PI)
        if a < 0.0:
            a += TWO_PI
        return 0.0 if a >= TWO_PI else a
    a = np.mod(np.asarray(angle, dtype=np.float64), TWO_PI)
    a[a >= TWO_PI] = 0.0
    return a


def normalize_rows(v: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(v, axis=-1, keepdims=True)
    return v / norms


def rotate_vectors(v: np.ndarray, axis: np.ndarray, angle) -> np.ndarray:
    """(N,3) 벡터를 단위 축 둘레로 회전. axis 는 (3,) 또는 (N,3), angle 은 스칼라 또는 (N,)"""
    v = np.asarray(v, dtype=np.float64)
    axis = np.broadcast_to(np.asarray(axis, dtype=np.float64), v.shape)
    angle = np.asarray(angle, dtype=np.float64)
    if angle.ndim:
        angle = angle[..., None]
    cos_a = np.cos(angle)
    sin_a = np.sin(angle)
    along = np.sum(axis * v, axis=-1, keepdims=True)
    return v * cos_a + np.cross(axis, v) * sin_a + axis * along * (1.0 - cos_a)


def rotate_about_axis(v: UnitVec3, axis, angle: float) -> UnitVec3:
    """R(axis, angle)·v, 반시계(오른손) 방향이 양수"""
    a = axis.as_array() if isinstance(axis, UnitVec3) else np.asarray(axis, dtype=np.float64)
    if abs(np.linalg.norm(a) - 1.0) > OPTICS_CONFIG["axis_tol"]:
        raise DegenerateAxis(f"회전축이 단위벡터가 아닙니다: |axis|={np.linalg.norm(a):.9f}")
    out = rotate_vectors(v.as_array()[None, :], a, angle)[0]
    return UnitVec3.from_array(out)
