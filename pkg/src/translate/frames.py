"""프레임 시퀀스 (해석적 장면 또는 PGM 디렉터리)

PGM 디렉터리 형식: frame_00000.pgm ... (binary P5) + timestamps.txt (`index,t_us`).
"""
from dataclasses import dataclass, field
from pathlib import Path

import cv2
import numpy as np
import pandas as pd
from scipy.ndimage import map_coordinates

from src.translate.scene import EdgeGeometry, Scene
from src.utils.errors import ConfigError, ParseError
from src.utils.logger import get_logger

logger = get_logger(__name__)

TIMESTAMPS_FILE = "timestamps.txt"


@dataclass
class FrameSequence:
    """시간순 밝기 프레임. scene 이 있으면 임의 위치를 해석적으로, 없으면 stack 을 bilinear 로 샘플링"""
    width: int
    height: int
    times: np.ndarray = field(repr=False)
    framerate: float
    scene: Scene | None = field(default=None, repr=False)
    stack: np.ndarray | None = field(default=None, repr=False)
    max_motion_px: float | None = None

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=np.int64)
        if len(self.times) > 1 and np.any(np.diff(self.times) <= 0):
            raise ConfigError("프레임 타임스탬프는 순증가해야 합니다")
        if self.scene is None and self.stack is None:
            raise ConfigError("scene 또는 stack 중 하나가 필요합니다")
        if self.stack is not None:
            stack = np.asarray(self.stack, dtype=np.float64)
            if stack.shape != (len(self.times), self.height, self.width):
                raise ConfigError(f"프레임 배열 크기 {stack.shape} ≠ ({len(self.times)}, {self.height}, {self.width})")
            if not np.all(np.isfinite(stack)) or stack.min() < 0:
                raise ConfigError("밝기는 유한한 0 이상 값이어야 합니다")
            self.stack = stack

    def __len__(self) -> int:
        return len(self.times)

    @property
    def t_range(self) -> tuple[int, int]:
        if not len(self):
            return 0, 0
        return int(self.times[0]), int(self.times[-1])

    def sample(self, i: int, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """i 번째 프레임의 (x, y) 위치 밝기"""
        if self.scene is not None:
            return self.scene.intensity(x, y, self.times[i] / 1e6)
        return map_coordinates(self.stack[i], [y, x], order=1, mode="nearest")

    def frame(self, i: int) -> np.ndarray:
        """(height, width) 밝기 배열"""
        if self.stack is not None:
            return self.stack[i]
        yy, xx = np.mgrid[0:self.height, 0:self.width].astype(np.float64)
        return self.sample(i, xx, yy)

    def edges(self, t_us: int | None = None) -> EdgeGeometry | None:
        if self.scene is None:
            return None
        return self.scene.edges(0.0 if t_us is None else t_us / 1e6)

    def slice(self, t0: int, t1: int) -> "FrameSequence":
        sel = (self.times >= t0) & (self.times < t1)
        return FrameSequence(
            self.width, self.height, self.times[sel], self.framerate, self.scene,
            None if self.stack is None else self.stack[sel], self.max_motion_px,
        )


def read_frame_directory(path) -> FrameSequence:
    """PGM 디렉터리 읽기 (밝기는 [0, 1] 로 정규화)"""
    path = Path(path)
    ts_path = path / TIMESTAMPS_FILE
    if not ts_path.exists():
        raise ConfigError(f"타임스탬프 파일이 없습니다: {ts_path}")
    try:
        ts = pd.read_csv(ts_path, comment="#", header=None, names=["index", "t_us"], dtype=np.int64)
    except (ValueError, pd.errors.ParserError) as e:
        raise ParseError(f"{ts_path}: {e}") from None
    ts = ts.sort_values("index")
    frames = []
    for idx in ts["index"]:
        fp = path / f"frame_{idx:05d}.pgm"
        img = cv2.imread(str(fp), cv2.IMREAD_UNCHANGED)
        if img is None:
            raise ParseError(f"PGM 을 읽을 수 없습니다: {fp}")
        scale = 65535.0 if img.dtype == np.uint16 else 255.0
        frames.append(img.astype(np.float64) / scale)
    if not frames:
        raise ConfigError(f"프레임이 없습니다: {path}")
    h, w = frames[0].shape[:2]
    times = ts["t_us"].to_numpy()
    framerate = 1e6 / float(np.median(np.diff(times))) if len(times) > 1 else 0.0
    logger.info(f"📥 프레임 {len(frames)}장 로드: {w}x{h} ({path})")
    return FrameSequence(w, h, times, framerate, stack=np.stack(frames))


def write_frame_directory(seq: FrameSequence, path, bits: int = 8):
    """FrameSequence → PGM 디렉터리 (밝기 [0, 1] 을 정수로 양자화)"""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    dtype, scale = (np.uint16, 65535.0) if bits == 16 else (np.uint8, 255.0)
    for i in range(len(seq)):
        img = np.clip(np.round(seq.frame(i) * scale), 0, scale).astype(dtype)
        cv2.imwrite(str(path / f"frame_{i:05d}.pgm"), img)
    with open(path / TIMESTAMPS_FILE, "w", encoding="utf-8", newline="\n") as f:
        for i, t in enumerate(seq.times):
            f.write(f"{i},{int(t)}\n")
    logger.info(f"💾 프레임 {len(seq)}장 저장: {path}")
