"""AMI 보정 warp: (x, y, θ) → (x′, y′, θ₀)

x′ = x − r(p)·[cos(θ+θ_b) − cos(θ₀+θ_b)],  y′ = y − r(p)·[sin(θ+θ_b) − sin(θ₀+θ_b)]
기준 위상 θ₀ = 0.
"""
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from src.events.model import Event, EventStream
from src.optics.displacement import CompensationParams
from src.utils.errors import MissingTheta
from src.utils.logger import get_logger
from src.utils.state import state

logger = get_logger(__name__)

THETA0 = 0.0
CHUNK_EVENTS = 1 << 20


def warp_positions(x, y, theta, params: CompensationParams, theta0: float = THETA0):
    """배열 warp. (x′, y′) 반환"""
    dx, dy = params.displacement(x, y, theta)
    ox, oy = params.displacement(x, y, theta0)
    return np.asarray(x) - (dx - ox), np.asarray(y) - (dy - oy)


def unwarp_positions(x, y, theta, params: CompensationParams, theta0: float = THETA0):
    """warp 의 역변환 (전방 변위 재적용)

    k1 ≠ 0 이면 r(p) 가 위치에 따라 달라지므로 고정점 반복으로 푼다.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    ux, uy = x, y
    for _ in range(1 if params.k1 == 0.0 else 20):
        dx, dy = params.displacement(ux, uy, theta)
        ox, oy = params.displacement(ux, uy, theta0)
        ux, uy = x + (dx - ox), y + (dy - oy)
    return ux, uy


def warp_event(e: Event, params: CompensationParams) -> Event:
    if e.theta is None:
        raise MissingTheta(f"t={e.t}µs 이벤트에 θ 가 없습니다")
    x, y = warp_positions(e.x, e.y, e.theta, params)
    return Event(e.t, float(x), float(y), e.polarity, THETA0)


def compensate_stream(stream: EventStream, params: CompensationParams,
                      threads: int | None = None) -> EventStream:
    """스트림 전체를 θ₀ 로 warp. 순서 유지, 결과는 실수 좌표 (theta 제거)"""
    theta = stream.require_theta()
    threads = threads or state.get_threads()
    n = len(stream)
    x_out = np.empty(n)
    y_out = np.empty(n)

    def work(lo: int):
        hi = min(lo + CHUNK_EVENTS, n)
        x_out[lo:hi], y_out[lo:hi] = warp_positions(stream.x[lo:hi], stream.y[lo:hi], theta[lo:hi], params)

    starts = range(0, n, CHUNK_EVENTS)
    if threads > 1 and n > CHUNK_EVENTS:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(work, starts))
    else:
        for lo in starts:
            work(lo)

    logger.debug(f"🎯 보정: 이벤트 {n}개 (r={params.r:.3f}px, θ_b={np.degrees(params.theta_b):.2f}°)")
    return stream.with_positions(x_out, y_out)
