"""엔코더 각도 동기화"""
from dataclasses import dataclass, field

import numpy as np

from src.events.model import EventStream
from src.optics.vectors import TWO_PI, wrap_angle
from src.utils.errors import EmptyStream, OutOfRange
from src.utils.logger import get_logger

logger = get_logger(__name__)


@dataclass(frozen=True)
class EncoderTrack:
    """엔코더 샘플 열 (t: µs 단조 증가, theta: [0, 2π) 라디안)"""
    t: np.ndarray = field(repr=False)
    theta: np.ndarray = field(repr=False)

    def __post_init__(self):
        t = np.asarray(self.t, dtype=np.int64)
        theta = np.asarray(self.theta, dtype=np.float64)
        if len(t) != len(theta):
            raise ValueError(f"엔코더 열 길이가 다릅니다: t={len(t)}, theta={len(theta)}")
        if len(t) < 2:
            raise EmptyStream(f"엔코더 샘플이 2개 미만입니다 ({len(t)}개)")
        if np.any(np.diff(t) <= 0):
            raise ValueError("엔코더 타임스탬프는 순증가해야 합니다")
        if np.any((theta < 0) | (theta >= TWO_PI)):
            theta = wrap_angle(theta)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "theta", theta)

    def __len__(self) -> int:
        return len(self.t)

    @property
    def t_range(self) -> tuple[int, int]:
        return int(self.t[0]), int(self.t[-1])

    def unwrapped(self) -> np.ndarray:
        return np.unwrap(self.theta)

    def estimated_speed(self) -> float:
        """평균 회전 속도 (rev/s)"""
        un = self.unwrapped()
        return float((un[-1] - un[0]) / TWO_PI / ((self.t[-1] - self.t[0]) / 1e6))


def interpolate_theta(track: EncoderTrack, t_us: np.ndarray) -> np.ndarray:
    """풀린(unwrapped) 각도의 선형 보간 후 [0, 2π) 로 재감기. 샘플 시각에서는 원래 값 그대로"""
    t_us = np.asarray(t_us, dtype=np.int64)
    if len(t_us) == 0:
        return np.zeros(0)
    lo, hi = track.t_range
    if t_us.min() < lo or t_us.max() > hi:
        raise OutOfRange(
            f"이벤트 시간 [{int(t_us.min())}, {int(t_us.max())}]µs 가 엔코더 범위 [{lo}, {hi}]µs 밖에 있습니다"
        )
    theta = wrap_angle(np.interp(t_us.astype(np.float64), track.t.astype(np.float64), track.unwrapped()))
    idx = np.minimum(np.searchsorted(track.t, t_us), len(track.t) - 1)
    exact = track.t[idx] == t_us
    theta[exact] = track.theta[idx[exact]]
    return theta


def sync_theta(stream: EventStream, encoder: EncoderTrack) -> EventStream:
    """이벤트마다 프리즘 각 θ 부여"""
    theta = interpolate_theta(encoder, stream.t)
    logger.debug(f"🔄 θ 동기화: 이벤트 {len(stream)}개, 엔코더 샘플 {len(encoder)}개")
    return stream.with_theta(theta)
