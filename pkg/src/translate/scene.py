"""합성 테스트 장면 (해석적 렌더링 + ground-truth edge)

픽셀 (i, j) 의 중심은 정수 좌표 (i, j). 경계는 1px 폭으로 anti-aliasing 한다.
"""
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from src.utils.config import kv_float, kv_float_list, kv_int, kv_str
from src.utils.errors import ConfigError, MotionTooFast
from src.utils.logger import get_logger
from src.utils.state import state

logger = get_logger(__name__)

PATTERNS = ("edges", "checkerboard", "disk")
MOTIONS = ("static", "constant", "sinusoid")
DISK_SEGMENTS = 64


# ==================== ground-truth edge ====================

@dataclass(frozen=True)
class EdgeGeometry:
    """선분 집합 (M,4): x0, y0, x1, y1"""
    segments: np.ndarray = field(repr=False)

    def __post_init__(self):
        seg = np.asarray(self.segments, dtype=np.float64).reshape(-1, 4)
        object.__setattr__(self, "segments", seg)

    def __len__(self) -> int:
        return len(self.segments)

    def shifted(self, dx: float, dy: float) -> "EdgeGeometry":
        return EdgeGeometry(self.segments + np.array([dx, dy, dx, dy]))

    def orientations(self) -> np.ndarray:
        """선분 방향각 [0, π)"""
        d = self.segments[:, 2:] - self.segments[:, :2]
        return np.mod(np.arctan2(d[:, 1], d[:, 0]), math.pi)

    def _distances(self, x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """(N,M) 부호 있는 거리. 부호는 선분 방향 기준 왼쪽(+)/오른쪽(−)"""
        a = self.segments[:, :2]
        ab = self.segments[:, 2:] - a
        length2 = np.maximum(np.sum(ab * ab, axis=1), 1e-24)
        px = x[:, None] - a[None, :, 0]
        py = y[:, None] - a[None, :, 1]
        s = np.clip((px * ab[:, 0] + py * ab[:, 1]) / length2, 0.0, 1.0)
        ex = px - s * ab[:, 0]
        ey = py - s * ab[:, 1]
        dist = np.hypot(ex, ey)
        side = np.where(ab[:, 0] * py - ab[:, 1] * px < 0, -1.0, 1.0)
        return dist, dist * side

    def signed_distance(self, x, y, chunk: int = 1 << 15) -> np.ndarray:
        """각 점에서 가장 가까운 선분까지의 부호 있는 거리"""
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        out = np.empty(len(x))
        for lo in range(0, len(x), chunk):
            dist, signed = self._distances(x[lo:lo + chunk], y[lo:lo + chunk])
            nearest = np.argmin(dist, axis=1)
            out[lo:lo + chunk] = signed[np.arange(len(nearest)), nearest]
        return out

    def distance_to_each(self, x, y) -> np.ndarray:
        """(N,M) 점-선분 거리"""
        dist, _ = self._distances(np.asarray(x, dtype=np.float64), np.asarray(y, dtype=np.float64))
        return dist

    def write_csv(self, path):
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        pd.DataFrame(self.segments, columns=["x0", "y0", "x1", "y1"]).to_csv(
            path, index=False, lineterminator="\n"
        )

    @classmethod
    def read_csv(cls, path) -> "EdgeGeometry":
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"edge 파일이 없습니다: {path}")
        df = pd.read_csv(path)
        return cls(df[["x0", "y0", "x1", "y1"]].to_numpy(dtype=np.float64))


# ==================== 장면 정의 ====================

@dataclass(frozen=True)
class Bar:
    cx: float
    cy: float
    angle: float
    length: float
    width: float

    def coverage(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        ux, uy = math.cos(self.angle), math.sin(self.angle)
        dx, dy = x - self.cx, y - self.cy
        along = np.abs(dx * ux + dy * uy) - self.length / 2
        across = np.abs(-dx * uy + dy * ux) - self.width / 2
        return np.clip(0.5 - np.maximum(along, across), 0.0, 1.0)

    def corners(self) -> np.ndarray:
        ux, uy = math.cos(self.angle), math.sin(self.angle)
        hl, hw = self.length / 2, self.width / 2
        pts = [(-hl, -hw), (hl, -hw), (hl, hw), (-hl, hw)]
        return np.array([(self.cx + a * ux - b * uy, self.cy + a * uy + b * ux) for a, b in pts])


@dataclass(frozen=True)
class SceneSpec:
    """합성 장면 설정

    pattern: edges (방향별 막대), checkerboard, disk
    motion: static, constant (velocity px/s), sinusoid (amplitude px, motion_hz)
    """
    width: int = 64
    height: int = 64
    pattern: str = "edges"
    angles_deg: tuple[float, ...] = (0.0, 45.0, 90.0, 135.0)
    spacing_px: float = 16.0
    bar_length_px: float = 10.0
    bar_width_px: float = 4.0
    checker_px: float = 8.0
    disk_radius_px: float = 12.0
    low: float = 0.2
    high: float = 0.8
    motion: str = "static"
    velocity: tuple[float, float] = (0.0, 0.0)
    amplitude: tuple[float, float] = (0.0, 0.0)
    motion_hz: float = 1.0
    duration_s: float = 0.1
    seed: int | None = None

    def __post_init__(self):
        if self.pattern not in PATTERNS:
            raise ConfigError(f"pattern 은 {PATTERNS} 중 하나: {self.pattern}")
        if self.motion not in MOTIONS:
            raise ConfigError(f"motion 은 {MOTIONS} 중 하나: {self.motion}")
        if self.width <= 0 or self.height <= 0:
            raise ConfigError(f"해상도가 잘못되었습니다: {self.width}x{self.height}")
        if self.duration_s <= 0:
            raise ConfigError(f"장면 길이는 양수여야 합니다: {self.duration_s}")
        if not 0 <= self.low < self.high:
            raise ConfigError(f"밝기 수준이 잘못되었습니다: low={self.low}, high={self.high}")
        short = min(self.width, self.height)
        if self.pattern == "edges" and not (0 < self.bar_length_px <= self.spacing_px <= short):
            raise ConfigError(
                f"막대 배치가 해상도에 맞지 않습니다: length={self.bar_length_px}, spacing={self.spacing_px}"
            )
        if self.pattern == "checkerboard" and not 0 < self.checker_px < short:
            raise ConfigError(f"체커 크기가 해상도에 맞지 않습니다: {self.checker_px}")
        if self.pattern == "disk" and not 0 < self.disk_radius_px < short / 2:
            raise ConfigError(f"원 반지름이 해상도에 맞지 않습니다: {self.disk_radius_px}")

    @classmethod
    def from_kv(cls, values: dict) -> "SceneSpec":
        d = cls()
        vel = kv_float_list(values, "velocity_px_s", d.velocity)
        amp = kv_float_list(values, "amplitude_px", d.amplitude)
        if len(vel) != 2 or len(amp) != 2:
            raise ConfigError("velocity_px_s / amplitude_px 는 'x,y' 두 값이어야 합니다")
        return cls(
            width=kv_int(values, "width", d.width),
            height=kv_int(values, "height", d.height),
            pattern=kv_str(values, "pattern", d.pattern, choices=PATTERNS),
            angles_deg=tuple(kv_float_list(values, "angles_deg", d.angles_deg)),
            spacing_px=kv_float(values, "spacing_px", d.spacing_px),
            bar_length_px=kv_float(values, "bar_length_px", d.bar_length_px),
            bar_width_px=kv_float(values, "bar_width_px", d.bar_width_px),
            checker_px=kv_float(values, "checker_px", d.checker_px),
            disk_radius_px=kv_float(values, "disk_radius_px", d.disk_radius_px),
            low=kv_float(values, "low", d.low),
            high=kv_float(values, "high", d.high),
            motion=kv_str(values, "motion", d.motion, choices=MOTIONS),
            velocity=(vel[0], vel[1]),
            amplitude=(amp[0], amp[1]),
            motion_hz=kv_float(values, "motion_hz", d.motion_hz),
            duration_s=kv_float(values, "duration_s", d.duration_s),
            seed=kv_int(values, "seed") if "seed" in values else None,
        )

    def to_kv(self) -> dict:
        return {
            "width": self.width, "height": self.height, "pattern": self.pattern,
            "angles_deg": list(self.angles_deg), "spacing_px": self.spacing_px,
            "bar_length_px": self.bar_length_px, "bar_width_px": self.bar_width_px,
            "checker_px": self.checker_px, "disk_radius_px": self.disk_radius_px,
            "low": self.low, "high": self.high, "motion": self.motion,
            "velocity_px_s": list(self.velocity), "amplitude_px": list(self.amplitude),
            "motion_hz": self.motion_hz, "duration_s": self.duration_s,
        }

    # ---------- 움직임 ----------

    def offset(self, t_s):
        """시각 t (초) 의 장면 이동량 (ox, oy)"""
        t_s = np.asarray(t_s, dtype=np.float64)
        if self.motion == "constant":
            return self.velocity[0] * t_s, self.velocity[1] * t_s
        if self.motion == "sinusoid":
            s = np.sin(2 * math.pi * self.motion_hz * t_s)
            return self.amplitude[0] * s, self.amplitude[1] * s
        return np.zeros_like(t_s), np.zeros_like(t_s)

    def max_speed(self) -> float:
        """최대 이동 속도 (px/s)"""
        if self.motion == "constant":
            return math.hypot(*self.velocity)
        if self.motion == "sinusoid":
            return 2 * math.pi * self.motion_hz * math.hypot(*self.amplitude)
        return 0.0


class Scene:
    """SceneSpec 을 해석적으로 렌더링하는 객체"""

    def __init__(self, spec: SceneSpec):
        self.spec = spec
        self.bars: list[Bar] = self._layout_bars() if spec.pattern == "edges" else []

    def _layout_bars(self) -> list[Bar]:
        spec = self.spec
        seed = spec.seed if spec.seed is not None else state.get_seed()
        rng = np.random.default_rng([seed, 1])
        nx = int(spec.width // spec.spacing_px)
        ny = int(spec.height // spec.spacing_px)
        margin_x = (spec.width - nx * spec.spacing_px) / 2
        margin_y = (spec.height - ny * spec.spacing_px) / 2
        jitter = 0.1 * spec.spacing_px
        bars = []
        for j in range(ny):
            for i in range(nx):
                k = j * nx + i
                angle = math.radians(spec.angles_deg[(k + j) % len(spec.angles_deg)])
                cx = margin_x + (i + 0.5) * spec.spacing_px + rng.uniform(-jitter, jitter)
                cy = margin_y + (j + 0.5) * spec.spacing_px + rng.uniform(-jitter, jitter)
                bars.append(Bar(cx - 0.5, cy - 0.5, angle, spec.bar_length_px, spec.bar_width_px))
        return bars

    def coverage(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """장면 좌표에서 밝은 영역 비율 [0, 1]"""
        spec = self.spec
        if spec.pattern == "edges":
            cov = np.zeros(np.shape(x))
            for bar in self.bars:
                np.maximum(cov, bar.coverage(x, y), out=cov)
            return cov
        if spec.pattern == "checkerboard":
            tx = self._square_wave(x, spec.checker_px)
            ty = self._square_wave(y, spec.checker_px)
            return 0.5 + 0.5 * tx * ty
        cx, cy = (spec.width - 1) / 2, (spec.height - 1) / 2
        return np.clip(0.5 - (np.hypot(x - cx, y - cy) - spec.disk_radius_px), 0.0, 1.0)

    @staticmethod
    def _square_wave(u: np.ndarray, size: float) -> np.ndarray:
        k = np.floor(u / size)
        d = np.minimum(u - k * size, (k + 1) * size - u)
        sign = np.where(np.mod(k, 2) == 0, 1.0, -1.0)
        return sign * np.minimum(1.0, 2.0 * d)

    def intensity(self, x, y, t_s: float) -> np.ndarray:
        ox, oy = self.spec.offset(t_s)
        cov = self.coverage(np.asarray(x) - float(ox), np.asarray(y) - float(oy))
        return self.spec.low + (self.spec.high - self.spec.low) * cov

    def edges(self, t_s: float = 0.0) -> EdgeGeometry:
        """시각 t 의 ground-truth edge"""
        spec = self.spec
        if spec.pattern == "edges":
            segs = []
            for bar in self.bars:
                c = bar.corners()
                for a in range(4):
                    b = (a + 1) % 4
                    segs.append((c[a, 0], c[a, 1], c[b, 0], c[b, 1]))
            geom = EdgeGeometry(np.array(segs))
        elif spec.pattern == "checkerboard":
            s = spec.checker_px
            xs = np.arange(s, spec.width - 1 + 1e-9, s)
            ys = np.arange(s, spec.height - 1 + 1e-9, s)
            segs = [(x, 0.0, x, spec.height - 1.0) for x in xs] + [(0.0, y, spec.width - 1.0, y) for y in ys]
            geom = EdgeGeometry(np.array(segs))
        else:
            cx, cy = (spec.width - 1) / 2, (spec.height - 1) / 2
            phi = np.linspace(0, 2 * math.pi, DISK_SEGMENTS + 1)
            px = cx + spec.disk_radius_px * np.cos(phi)
            py = cy + spec.disk_radius_px * np.sin(phi)
            geom = EdgeGeometry(np.stack([px[:-1], py[:-1], px[1:], py[1:]], axis=1))
        ox, oy = spec.offset(t_s)
        return geom.shifted(float(ox), float(oy))


def generate_scene(spec: SceneSpec, framerate: float):
    """장면 → 해석적 FrameSequence (프레임 간 이동 < 1px 강제)"""
    from src.translate.frames import FrameSequence

    if framerate <= 0 or framerate > 1e6:
        raise ConfigError(f"framerate 는 (0, 1e6] 범위여야 합니다: {framerate}")
    per_frame = spec.max_speed() / framerate
    if per_frame >= 1.0:
        raise MotionTooFast(
            f"프레임당 이동 {per_frame:.3f}px ≥ 1px (속도 {spec.max_speed():.1f}px/s, {framerate}fps)"
        )
    n_frames = int(round(spec.duration_s * framerate)) + 1
    times = np.round(np.arange(n_frames) * (1e6 / framerate)).astype(np.int64)
    scene = Scene(spec)
    logger.info(
        f"🎬 장면 생성: {spec.pattern}/{spec.motion} {spec.width}x{spec.height}, "
        f"{n_frames}프레임 @ {framerate:g}fps"
    )
    return FrameSequence(
        width=spec.width, height=spec.height, times=times, framerate=framerate,
        scene=scene, max_motion_px=per_frame,
    )
