"""합성 엔코더 로그와 노이즈 이벤트"""
import numpy as np

from src.events.model import EventStream
from src.events.sync import EncoderTrack
from src.optics.vectors import TWO_PI, wrap_angle
from src.utils.config import SYNTH_CONFIG
from src.utils.logger import get_logger
from src.utils.state import state

logger = get_logger(__name__)

RNG_ENCODER = 11
RNG_NOISE = 12


def prism_angle(t_us, rotation_speed: float) -> np.ndarray:
    """엔코더 각 θ̃(t) = 2π·f·t mod 2π (t=0 에서 엔코더 영점)"""
    t_s = np.asarray(t_us, dtype=np.float64) / 1e6
    return wrap_angle(TWO_PI * rotation_speed * t_s)


def make_encoder_track(duration_s: float, rotation_speed: float,
                       sample_rate_hz: float = SYNTH_CONFIG["encoder_rate_hz"],
                       jitter_us: float = SYNTH_CONFIG["encoder_jitter_us"],
                       seed: int | None = None, t0_us: int = 0) -> EncoderTrack:
    """일정 속도 회전의 엔코더 샘플. jitter_us > 0 이면 기록 시각에 가우시안 오차를 더한다."""
    end_us = t0_us + int(round(duration_s * 1e6))
    step = 1e6 / sample_rate_hz
    n = int(np.ceil((end_us - t0_us) / step)) + 1
    true_t = np.minimum(np.round(t0_us + np.arange(n) * step), end_us).astype(np.int64)
    theta = prism_angle(true_t, rotation_speed)

    stamped = true_t.copy()
    if jitter_us > 0 and n > 2:
        rng = np.random.default_rng([state.get_seed() if seed is None else seed, RNG_ENCODER])
        noise = np.round(rng.normal(0.0, jitter_us, n - 2)).astype(np.int64)
        stamped[1:-1] = true_t[1:-1] + noise
        stamped[1:-1] = np.clip(stamped[1:-1], t0_us + 1, end_us - 1)
        order = np.argsort(stamped, kind="stable")
        stamped, theta = stamped[order], theta[order]
    keep = np.concatenate([[True], np.diff(stamped) > 0])
    return EncoderTrack(stamped[keep], theta[keep])


def inject_noise_events(stream: EventStream, fraction: float, rotation_speed: float | None = None,
                        seed: int | None = None) -> EventStream:
    """균일 분포 노이즈 이벤트를 fraction 비율만큼 추가"""
    n = int(round(fraction * len(stream)))
    if n <= 0:
        return stream
    rng = np.random.default_rng([state.get_seed() if seed is None else seed, RNG_NOISE])
    t0, t1 = stream.t_range
    t = rng.integers(t0, t1 + 1, n)
    x = rng.integers(0, stream.width, n).astype(np.float64)
    y = rng.integers(0, stream.height, n).astype(np.float64)
    p = rng.choice(np.array([-1, 1], dtype=np.int8), n)
    theta = None
    if stream.has_theta:
        if rotation_speed is None:
            raise ValueError("theta 가 있는 스트림에는 rotation_speed 가 필요합니다")
        theta = np.concatenate([stream.theta, prism_angle(t, rotation_speed)])
    noisy, _ = EventStream.from_arrays(
        stream.width, stream.height,
        np.concatenate([stream.t, t]), np.concatenate([stream.x, x]), np.concatenate([stream.y, y]),
        np.concatenate([stream.p, p]), theta, subpixel=stream.subpixel,
    )
    logger.info(f"🎲 노이즈 이벤트 {n}개 추가 ({fraction:.0%})")
    return noisy
