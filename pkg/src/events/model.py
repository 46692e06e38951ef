"""이벤트 스트림 데이터 모델

이벤트는 열 단위 numpy 배열로 보관한다 (t: int64 µs, x/y: float64, p: int8 ±1).
정렬 기준은 t, 동률이면 (y, x, polarity).
"""
import math
from dataclasses import dataclass, field

import numpy as np

from src.optics.vectors import TWO_PI, wrap_angle
from src.utils.errors import MissingTheta, ResolutionMismatch
from src.utils.logger import get_logger

logger = get_logger(__name__)


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


def sort_order(t, x, y, p) -> np.ndarray:
    return np.lexsort((p, x, y, t))


@dataclass(frozen=True)
class Event:
    """단일 이벤트 (x, y 는 warp 후 실수일 수 있음)"""
    t: int
    x: float
    y: float
    polarity: int
    theta: float | None = None


@dataclass(frozen=True)
class EventStream:
    """정렬·검증된 불변 이벤트 스트림

    subpixel=True 는 보정(warp) 결과처럼 좌표가 실수이고 센서 밖일 수 있는 스트림.
    """
    width: int
    height: int
    t: np.ndarray = field(repr=False)
    x: np.ndarray = field(repr=False)
    y: np.ndarray = field(repr=False)
    p: np.ndarray = field(repr=False)
    theta: np.ndarray | None = field(default=None, repr=False)
    subpixel: bool = False

    def __post_init__(self):
        t = np.ascontiguousarray(self.t, dtype=np.int64)
        x = np.ascontiguousarray(self.x, dtype=np.float64)
        y = np.ascontiguousarray(self.y, dtype=np.float64)
        p = np.ascontiguousarray(self.p, dtype=np.int8)
        n = len(t)
        if not (len(x) == len(y) == len(p) == n):
            raise ValueError(f"열 길이가 다릅니다: t={n}, x={len(x)}, y={len(y)}, p={len(p)}")
        if self.width <= 0 or self.height <= 0 or self.width > 65535 or self.height > 65535:
            raise ResolutionMismatch(f"해상도가 잘못되었습니다: {self.width}x{self.height}")
        theta = None
        if self.theta is not None:
            theta = np.ascontiguousarray(self.theta, dtype=np.float64)
            if len(theta) != n:
                raise ValueError(f"theta 길이 {len(theta)} ≠ 이벤트 수 {n}")

        if n:
            if np.any(t < 0):
                raise ValueError("음수 타임스탬프")
            if not np.all((p == 1) | (p == -1)):
                raise ValueError("polarity 는 +1 또는 -1 이어야 합니다")
            if self.subpixel:
                if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
                    raise ValueError("좌표에 유한하지 않은 값이 있습니다")
            else:
                if np.any(x != np.floor(x)) or np.any(y != np.floor(y)):
                    raise ValueError("정수 좌표 스트림에 실수 좌표가 있습니다 (subpixel=True 필요)")
                if x.min() < 0 or y.min() < 0 or x.max() >= self.width or y.max() >= self.height:
                    raise ResolutionMismatch(
                        f"좌표가 해상도 {self.width}x{self.height} 를 벗어납니다 "
                        f"(x∈[{x.min():.0f},{x.max():.0f}], y∈[{y.min():.0f},{y.max():.0f}])"
                    )
            if not _is_sorted(t, x, y, p):
                raise ValueError("이벤트가 (t, y, x, polarity) 순으로 정렬되어 있지 않습니다")

        object.__setattr__(self, "t", _readonly(t))
        object.__setattr__(self, "x", _readonly(x))
        object.__setattr__(self, "y", _readonly(y))
        object.__setattr__(self, "p", _readonly(p))
        object.__setattr__(self, "theta", None if theta is None else _readonly(theta))

    # ---------- 생성 ----------

    @classmethod
    def from_arrays(cls, width: int, height: int, t, x, y, p, theta=None,
                    subpixel: bool = False) -> tuple["EventStream", int]:
        """정렬되지 않은 배열로부터 생성. (스트림, 제자리가 아니던 이벤트 수) 반환"""
        t = np.asarray(t, dtype=np.int64)
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        p = np.asarray(p, dtype=np.int8)
        order = sort_order(t, x, y, p)
        moved = int(np.count_nonzero(order != np.arange(len(order))))
        if moved:
            t, x, y, p = t[order], x[order], y[order], p[order]
            if theta is not None:
                theta = np.asarray(theta, dtype=np.float64)[order]
        return cls(width, height, t, x, y, p, theta, subpixel), moved

    @classmethod
    def empty(cls, width: int, height: int, with_theta: bool = False) -> "EventStream":
        z = np.zeros(0)
        return cls(width, height, z, z, z, z, z if with_theta else None)

    @staticmethod
    def merge(streams: list["EventStream"]) -> "EventStream":
        """여러 스트림 합치기 (해상도 동일, theta 는 전부 있을 때만 유지)"""
        first = streams[0]
        for s in streams[1:]:
            if (s.width, s.height) != (first.width, first.height):
                raise ResolutionMismatch(
                    f"해상도가 다른 스트림은 합칠 수 없습니다: {first.width}x{first.height} vs {s.width}x{s.height}"
                )
        keep_theta = all(s.theta is not None for s in streams)
        merged, _ = EventStream.from_arrays(
            first.width, first.height,
            np.concatenate([s.t for s in streams]),
            np.concatenate([s.x for s in streams]),
            np.concatenate([s.y for s in streams]),
            np.concatenate([s.p for s in streams]),
            np.concatenate([s.theta for s in streams]) if keep_theta else None,
            subpixel=any(s.subpixel for s in streams),
        )
        return merged

    # ---------- 조회 ----------

    def __len__(self) -> int:
        return len(self.t)

    @property
    def has_theta(self) -> bool:
        return self.theta is not None

    @property
    def t_range(self) -> tuple[int, int]:
        if not len(self):
            return 0, 0
        return int(self.t[0]), int(self.t[-1])

    @property
    def duration_us(self) -> int:
        t0, t1 = self.t_range
        return t1 - t0

    def event(self, i: int) -> Event:
        return Event(
            int(self.t[i]), float(self.x[i]), float(self.y[i]), int(self.p[i]),
            None if self.theta is None else float(self.theta[i]),
        )

    def require_theta(self) -> np.ndarray:
        if self.theta is None:
            raise MissingTheta("이벤트에 프리즘 각(theta)이 없습니다. 엔코더 동기화가 먼저 필요합니다")
        return self.theta

    # ---------- 변환 ----------

    def select(self, mask_or_index) -> "EventStream":
        """부분 집합 (순서 유지)"""
        sel = mask_or_index
        return EventStream(
            self.width, self.height, self.t[sel], self.x[sel], self.y[sel], self.p[sel],
            None if self.theta is None else self.theta[sel], self.subpixel,
        )

    def slice(self, t0: int, t1: int) -> "EventStream":
        """[t0, t1) 시간 구간"""
        lo = int(np.searchsorted(self.t, t0, side="left"))
        hi = int(np.searchsorted(self.t, t1, side="left"))
        return self.select(np.s_[lo:hi])

    def slice_by_theta(self, theta0: float, theta1: float) -> "EventStream":
        """[θ0, θ1) 각도 구간 (2π 경계를 넘는 구간 지원)"""
        theta = self.require_theta()
        if theta1 - theta0 >= TWO_PI:
            return self.select(np.s_[:])
        a, b = wrap_angle(theta0), wrap_angle(theta1)
        if a <= b:
            mask = (theta >= a) & (theta < b)
        else:
            mask = (theta >= a) | (theta < b)
        return self.select(mask)

    def with_theta(self, theta) -> "EventStream":
        return EventStream(self.width, self.height, self.t, self.x, self.y, self.p, theta, self.subpixel)

    def without_theta(self) -> "EventStream":
        return EventStream(self.width, self.height, self.t, self.x, self.y, self.p, None, self.subpixel)

    def with_positions(self, x, y, keep_theta: bool = False) -> "EventStream":
        """좌표만 바꾼 실수 좌표 스트림. 순서는 그대로 유지한다."""
        return EventStream(
            self.width, self.height, self.t, x, y, self.p,
            self.theta if keep_theta else None, subpixel=True,
        )

    def quantized(self) -> tuple["EventStream", int]:
        """최근접 픽셀로 반올림 후 센서 밖 이벤트 제거. (스트림, 제거 수) 반환"""
        xi = np.floor(self.x + 0.5)
        yi = np.floor(self.y + 0.5)
        inside = (xi >= 0) & (xi < self.width) & (yi >= 0) & (yi < self.height)
        dropped = int(len(self) - np.count_nonzero(inside))
        theta = None if self.theta is None else self.theta[inside]
        stream, _ = EventStream.from_arrays(
            self.width, self.height, self.t[inside], xi[inside], yi[inside], self.p[inside], theta
        )
        return stream, dropped

    def to_frame(self):
        """pandas DataFrame (t_us, x, y, polarity[, theta])"""
        import pandas as pd

        data = {"t_us": self.t, "x": self.x, "y": self.y, "polarity": self.p}
        if self.theta is not None:
            data["theta"] = self.theta
        return pd.DataFrame(data)


def _is_sorted(t, x, y, p) -> bool:
    dt = np.diff(t)
    if np.any(dt < 0):
        return False
    tie = dt == 0
    if not tie.any():
        return True
    dy = np.diff(y)[tie]
    dx = np.diff(x)[tie]
    dp = np.diff(p.astype(np.int16))[tie]
    bad = (dy < 0) | ((dy == 0) & (dx < 0)) | ((dy == 0) & (dx == 0) & (dp < 0))
    return not bad.any()


# ==================== 스트림 유틸 ====================

def quarter_period_windows(stream: EventStream, rotation_speed: float) -> list[tuple[int, int, EventStream]]:
    """스트림 시작부터 연속된 1/4 주기 창 목록 (마지막 불완전 창은 제외)"""
    if rotation_speed <= 0:
        raise ValueError("회전 속도가 0 이면 주기 창을 만들 수 없습니다")
    if not len(stream):
        return []
    quarter_us = 1e6 / rotation_speed / 4.0
    t_start, t_end = stream.t_range
    windows = []
    k = 0
    while True:
        t0 = t_start + int(round(k * quarter_us))
        t1 = t_start + int(round((k + 1) * quarter_us))
        if t1 > t_end + 1:
            break
        windows.append((t0, t1, stream.slice(t0, t1)))
        k += 1
    return windows


def deduplicate_refractory(stream: EventStream, refractory_us: int) -> tuple[EventStream, int]:
    """픽셀별 불응기 중복 제거: 마지막으로 남긴 이벤트로부터 refractory_us 미만인 이벤트 삭제"""
    if refractory_us <= 0 or len(stream) < 2:
        return stream, 0
    pix = np.floor(stream.y + 0.5).astype(np.int64) * (stream.width + 2) + np.floor(stream.x + 0.5).astype(np.int64)
    order = np.lexsort((stream.t, pix))
    ts = stream.t[order]
    ps = pix[order]
    # 같은 픽셀 직전 이벤트와 간격이 충분하면 무조건 생존. 나머지는 픽셀별 연쇄로 한 번씩만 판정
    alive = np.ones(len(order), dtype=bool)
    alive[1:] = (ps[1:] != ps[:-1]) | (ts[1:] - ts[:-1] >= refractory_us)
    last_kept = 0
    for i in np.flatnonzero(~alive).tolist():
        if alive[i - 1]:
            last_kept = int(ts[i - 1])
        if ts[i] - last_kept >= refractory_us:
            alive[i] = True
            last_kept = int(ts[i])
    keep = np.zeros(len(stream), dtype=bool)
    keep[order[alive]] = True
    removed = int(len(stream) - np.count_nonzero(keep))
    if removed:
        logger.debug(f"불응기 중복 {removed}개 제거 (refractory={refractory_us}µs)")
    return stream.select(keep), removed


def stream_info(stream: EventStream) -> dict:
    """개수, 길이, 이벤트율, 해상도, 극성 비율"""
    n = len(stream)
    duration_s = stream.duration_us / 1e6
    positive = int(np.count_nonzero(stream.p > 0))
    t0, t1 = stream.t_range
    return {
        "count": n,
        "width": stream.width,
        "height": stream.height,
        "t_start_us": t0,
        "t_end_us": t1,
        "duration_s": duration_s,
        "rate_eps": n / duration_s if duration_s > 0 else (math.inf if n else 0.0),
        "positive": positive,
        "negative": n - positive,
        "has_theta": stream.has_theta,
    }
