"""AMI-EV 변환기: 프레임 / 이벤트 / 프레임+이벤트 입력 → 프리즘 회전 이벤트 스트림

이벤트 생성은 log 밝기 임계값 모델을 따른다. 픽셀마다 마지막 이벤트의 log 밝기 L_ref 를 유지하고,
|L − L_ref| 가 C 의 배수를 넘을 때마다 프레임 사이 선형 보간 시각에 이벤트를 하나씩 낸다.
"""
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from src.events.model import EventStream, deduplicate_refractory
from src.optics.camera import Intrinsics
from src.optics.displacement import CompensationParams, full_model_displacement, initial_radius_px
from src.optics.prism import PrismConfig
from src.optics.vectors import TWO_PI
from src.translate.encoder import prism_angle
from src.translate.frames import FrameSequence
from src.utils.config import SYNTH_CONFIG, kv_float, kv_int, kv_str
from src.utils.errors import ConfigError, MotionTooFast, PrismTooFast, TimeRangeMismatch
from src.utils.logger import get_logger
from src.utils.state import state

logger = get_logger(__name__)

TILE_PIXELS = 1 << 14
OPTICAL_MODELS = ("circle", "full")


@dataclass(frozen=True)
class SynthConfig:
    """이벤트 합성 설정

    optical_model: circle (보정 모델과 같은 원형 변위) / full (정확 투과 모델, intrinsics 필요)
    """
    prism: PrismConfig
    params: CompensationParams
    contrast_threshold: float = SYNTH_CONFIG["contrast_threshold"]
    refractory_us: int = SYNTH_CONFIG["refractory_us"]
    log_eps: float = SYNTH_CONFIG["log_eps"]
    optical_model: str = "circle"
    intrinsics: Intrinsics | None = None

    def __post_init__(self):
        if self.contrast_threshold <= 0:
            raise ConfigError(f"contrast threshold 는 양수여야 합니다: {self.contrast_threshold}")
        if self.refractory_us < 0:
            raise ConfigError(f"refractory 는 0 이상이어야 합니다: {self.refractory_us}")
        if self.log_eps <= 0:
            raise ConfigError(f"log_eps 는 양수여야 합니다: {self.log_eps}")
        if self.optical_model not in OPTICAL_MODELS:
            raise ConfigError(f"optical_model 은 {OPTICAL_MODELS} 중 하나: {self.optical_model}")
        if self.optical_model == "full" and self.intrinsics is None:
            raise ConfigError("full 광학 모델에는 카메라 intrinsics 가 필요합니다")

    @classmethod
    def from_kv(cls, values: dict, prism: PrismConfig, params: CompensationParams,
                intrinsics: Intrinsics | None = None) -> "SynthConfig":
        return cls(
            prism=prism,
            params=params,
            contrast_threshold=kv_float(values, "contrast_threshold", SYNTH_CONFIG["contrast_threshold"]),
            refractory_us=kv_int(values, "refractory_us", SYNTH_CONFIG["refractory_us"]),
            log_eps=kv_float(values, "log_eps", SYNTH_CONFIG["log_eps"]),
            optical_model=kv_str(values, "optical_model", "circle", choices=OPTICAL_MODELS),
            intrinsics=intrinsics,
        )

    def effective_params(self) -> CompensationParams:
        """이 설정으로 합성한 스트림을 원형 모델로 보정했을 때 나와야 할 참값

        full 모델의 반지름은 프리즘이 정하는 r₀ (주점 기준) 이다.
        """
        if self.optical_model == "full":
            return self.params.with_values(r=initial_radius_px(self.prism, self.intrinsics))
        return self.params

    def max_radius(self, width: int, height: int) -> float:
        """센서 모서리와 중심 중 가장 큰 변위 반지름"""
        xx, yy = np.meshgrid(np.array([0.0, (width - 1) / 2.0, width - 1.0]),
                             np.array([0.0, (height - 1) / 2.0, height - 1.0]))
        x, y = xx.ravel(), yy.ravel()
        if self.optical_model == "full":
            radii = [np.hypot(*self.displacement(x, y, th)) for th in np.linspace(0.0, TWO_PI, 8, endpoint=False)]
            return float(np.max(radii))
        return float(np.max(self.params.radius_at(x, y)))

    def displacement(self, x: np.ndarray, y: np.ndarray, theta_tilde: float):
        """엔코더 각 θ̃ 에서의 상면 변위 (dx, dy)"""
        if self.optical_model == "full":
            d = full_model_displacement(
                np.stack([x, y], axis=1), theta_tilde + self.params.theta_b, self.prism, self.intrinsics
            )
            return d[:, 0], d[:, 1]
        return self.params.displacement(x, y, theta_tilde)


def _check_speeds(seq: FrameSequence, cfg: SynthConfig, prism_on: bool):
    if seq.max_motion_px is not None and seq.max_motion_px >= 1.0:
        raise MotionTooFast(f"프레임당 장면 이동 {seq.max_motion_px:.3f}px ≥ 1px")
    if not prism_on or len(seq) < 2:
        return
    dtheta = cfg.prism.omega * float(np.max(np.diff(seq.times))) / 1e6
    r_max = cfg.max_radius(seq.width, seq.height)
    chord = 2.0 * r_max * math.sin(min(dtheta, math.pi) / 2.0)
    if chord >= 1.0:
        raise PrismTooFast(
            f"프레임당 프리즘 변위 {chord:.3f}px ≥ 1px (r={r_max:.2f}px, Δθ={math.degrees(dtheta):.2f}°). "
            f"framerate 를 높이세요"
        )


def _synth_tile(seq: FrameSequence, cfg: SynthConfig, prism_on: bool, px: np.ndarray, py: np.ndarray):
    """픽셀 타일 하나에 대한 이벤트 생성. (t, x, y, p) 배열 튜플 반환"""
    C = cfg.contrast_threshold
    times = seq.times

    def log_at(i: int) -> np.ndarray:
        if prism_on:
            dx, dy = cfg.displacement(px, py, float(prism_angle(times[i], cfg.prism.rotation_speed)))
            sample = seq.sample(i, px - dx, py - dy)
        else:
            sample = seq.sample(i, px, py)
        return np.log(sample + cfg.log_eps)

    L_ref = log_at(0)
    L_prev = L_ref.copy()
    last_t = np.full(len(px), -np.inf)
    out_t, out_i, out_p = [], [], []

    for k in range(1, len(times)):
        L_now = log_at(k)
        diff = L_now - L_ref
        n = np.floor(np.abs(diff) / C + 1e-9).astype(np.int64)
        active = np.flatnonzero(n > 0)
        if len(active):
            sign = np.sign(diff[active])
            span = L_now[active] - L_prev[active]
            t_prev, dt = float(times[k - 1]), float(times[k] - times[k - 1])
            for j in range(1, int(n[active].max()) + 1):
                has = n[active] >= j
                idx = active[has]
                level = L_ref[idx] + j * C * sign[has]
                with np.errstate(divide="ignore", invalid="ignore"):
                    frac = np.where(span[has] != 0, (level - L_prev[idx]) / span[has], 1.0)
                t_j = np.round(t_prev + np.clip(frac, 0.0, 1.0) * dt)
                ok = t_j - last_t[idx] >= cfg.refractory_us
                last_t[idx[ok]] = t_j[ok]
                out_t.append(t_j[ok].astype(np.int64))
                out_i.append(idx[ok])
                out_p.append(sign[has][ok].astype(np.int8))
            # 불응기로 억제된 이벤트도 기준 레벨은 이동
            L_ref[active] = L_ref[active] + n[active] * C * sign
        L_prev = L_now

    if not out_t:
        empty = np.zeros(0)
        return empty.astype(np.int64), empty, empty, empty.astype(np.int8)
    idx = np.concatenate(out_i)
    return np.concatenate(out_t), px[idx], py[idx], np.concatenate(out_p)


def synth_events_from_frames(seq: FrameSequence, cfg: SynthConfig, prism_on: bool = True,
                             threads: int | None = None) -> EventStream:
    """프레임 시퀀스 → 이벤트 (prism_on 이면 프리즘 회전 변위를 적용하고 θ 부여)"""
    _check_speeds(seq, cfg, prism_on)
    threads = threads or state.get_threads()
    if len(seq) < 2:
        return EventStream.empty(seq.width, seq.height, with_theta=prism_on)

    yy, xx = np.mgrid[0:seq.height, 0:seq.width]
    px_all = xx.ravel().astype(np.float64)
    py_all = yy.ravel().astype(np.float64)
    tiles = [(lo, min(lo + TILE_PIXELS, len(px_all))) for lo in range(0, len(px_all), TILE_PIXELS)]

    def work(tile):
        lo, hi = tile
        return _synth_tile(seq, cfg, prism_on, px_all[lo:hi], py_all[lo:hi])

    if threads > 1 and len(tiles) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(work, tiles))
    else:
        parts = [work(tile) for tile in tiles]

    t = np.concatenate([part[0] for part in parts])
    x = np.concatenate([part[1] for part in parts])
    y = np.concatenate([part[2] for part in parts])
    p = np.concatenate([part[3] for part in parts])
    theta = prism_angle(t, cfg.prism.rotation_speed) if prism_on else None
    stream, _ = EventStream.from_arrays(seq.width, seq.height, t, x, y, p, theta)
    logger.info(
        f"⚡ 프레임 {len(seq)}장 → 이벤트 {len(stream)}개 "
        f"({'AMI' if prism_on else 'S-EV'}, C={cfg.contrast_threshold})"
    )
    return stream


def displace_events(stream: EventStream, cfg: SynthConfig) -> tuple[EventStream, int]:
    """이벤트를 +변위만큼 옮긴 뒤 최근접 픽셀로 반올림. (스트림, 센서 밖 제거 수) 반환"""
    theta = prism_angle(stream.t, cfg.prism.rotation_speed)
    dx, dy = cfg.displacement(stream.x, stream.y, theta)
    xi = np.floor(stream.x + dx + 0.5)
    yi = np.floor(stream.y + dy + 0.5)
    inside = (xi >= 0) & (xi < stream.width) & (yi >= 0) & (yi < stream.height)
    dropped = int(len(stream) - np.count_nonzero(inside))
    moved, _ = EventStream.from_arrays(
        stream.width, stream.height, stream.t[inside], xi[inside], yi[inside], stream.p[inside], theta[inside]
    )
    return moved, dropped


def synth_ami_from_events(stream: EventStream, cfg: SynthConfig) -> EventStream:
    """기존 이벤트를 프리즘 변위만큼 재배치 (원래 카메라가 못 본 edge 의 이벤트는 만들 수 없음)"""
    moved, dropped = displace_events(stream, cfg)
    if dropped:
        logger.warning(f"⚠️ 센서 밖으로 밀려난 이벤트 {dropped}개 제거")
    logger.info(f"⚡ 이벤트 {len(stream)}개 → AMI 이벤트 {len(moved)}개")
    return moved


def synth_ami_from_frames_plus_events(seq: FrameSequence | None, stream: EventStream | None,
                                      cfg: SynthConfig, threads: int | None = None) -> EventStream:
    """프레임 경로와 이벤트 경로의 합집합 (픽셀별 불응기 중복 제거)"""
    has_frames = seq is not None and len(seq) >= 2
    has_events = stream is not None and len(stream) > 0
    if not has_frames and not has_events:
        raise ConfigError("프레임과 이벤트 입력이 모두 비었습니다")
    if not has_events:
        return synth_events_from_frames(seq, cfg, prism_on=True, threads=threads)
    if not has_frames:
        return synth_ami_from_events(stream, cfg)

    (f0, f1), (e0, e1) = seq.t_range, stream.t_range
    if e1 < f0 or e0 > f1:
        raise TimeRangeMismatch(f"시간 구간이 겹치지 않습니다: 프레임 [{f0}, {f1}]µs, 이벤트 [{e0}, {e1}]µs")
    if (seq.width, seq.height) != (stream.width, stream.height):
        raise ConfigError(
            f"해상도가 다릅니다: 프레임 {seq.width}x{seq.height}, 이벤트 {stream.width}x{stream.height}"
        )
    from_frames = synth_events_from_frames(seq, cfg, prism_on=True, threads=threads)
    from_events = synth_ami_from_events(stream, cfg)
    merged = EventStream.merge([from_frames, from_events])
    deduped, removed = deduplicate_refractory(merged, cfg.refractory_us)
    logger.info(f"🔀 합성 스트림 병합: {len(merged)}개 → {len(deduped)}개 (중복 {removed}개 제거)")
    return deduped
