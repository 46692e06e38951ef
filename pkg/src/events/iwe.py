"""IWE (Image of Warped Events) 누적

극성은 구분하지 않고 합친다. 센서 밖 이벤트는 잘라내지 않고 버린다.
bilinear 는 네 이웃 중 센서 안 픽셀 몫만 더하고, 네 이웃이 모두 밖일 때만 버린 것으로 센다.
큰 스트림은 고정 크기 청크로 나눠 스레드 풀에서 누적하고, 청크 순서대로 더한다.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from src.events.model import EventStream
from src.utils.state import state

CHUNK_EVENTS = 1 << 20
BINNINGS = ("nearest", "bilinear")


@dataclass
class IWE:
    width: int
    height: int
    counts: np.ndarray = field(repr=False)  # (height, width)

    def at(self, x: int, y: int) -> float:
        return float(self.counts[y, x])

    @property
    def total(self) -> float:
        return float(self.counts.sum())

    @property
    def active_fraction(self) -> float:
        return float(np.count_nonzero(self.counts > 0)) / self.counts.size


def _bin_chunk(x: np.ndarray, y: np.ndarray, width: int, height: int, binning: str) -> tuple[np.ndarray, int]:
    size = width * height
    if binning == "nearest":
        xi = np.floor(x + 0.5).astype(np.int64)
        yi = np.floor(y + 0.5).astype(np.int64)
        keep = (xi >= 0) & (xi < width) & (yi >= 0) & (yi < height)
        flat = yi[keep] * width + xi[keep]
        return np.bincount(flat, minlength=size).astype(np.float64), int(len(x) - np.count_nonzero(keep))

    keep = (x > -1) & (x < width) & (y > -1) & (y < height)
    xs, ys = x[keep], y[keep]
    x0 = np.floor(xs).astype(np.int64)
    y0 = np.floor(ys).astype(np.int64)
    fx = xs - x0
    fy = ys - y0
    acc = np.zeros(size, dtype=np.float64)
    corners = (
        (x0, y0, (1 - fx) * (1 - fy)),
        (x0 + 1, y0, fx * (1 - fy)),
        (x0, y0 + 1, (1 - fx) * fy),
        (x0 + 1, y0 + 1, fx * fy),
    )
    for cx, cy, w in corners:
        inside = (cx >= 0) & (cx < width) & (cy >= 0) & (cy < height)
        acc += np.bincount(cy[inside] * width + cx[inside], weights=w[inside], minlength=size)
    return acc, int(len(x) - len(xs))


def accumulate_positions(x: np.ndarray, y: np.ndarray, width: int, height: int,
                         binning: str = "bilinear", threads: int | None = None) -> tuple[np.ndarray, int]:
    """좌표 배열을 (height, width) 격자로 누적. (counts, 버린 수) 반환"""
    if binning not in BINNINGS:
        raise ValueError(f"binning 은 {BINNINGS} 중 하나여야 합니다: {binning}")
    threads = threads or state.get_threads()
    n = len(x)
    bounds = [(i, min(i + CHUNK_EVENTS, n)) for i in range(0, n, CHUNK_EVENTS)]

    def work(bound):
        lo, hi = bound
        return _bin_chunk(x[lo:hi], y[lo:hi], width, height, binning)

    if threads > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(work, bounds))
    else:
        parts = [work(b) for b in bounds]

    counts = np.zeros(width * height, dtype=np.float64)
    dropped = 0
    for acc, d in parts:
        counts += acc
        dropped += d
    return counts.reshape(height, width), dropped


def accumulate_iwe(stream: EventStream, binning: str = "bilinear",
                   threads: int | None = None) -> tuple[IWE, int]:
    """이벤트 스트림 → IWE. (IWE, 버린 이벤트 수) 반환"""
    counts, dropped = accumulate_positions(stream.x, stream.y, stream.width, stream.height, binning, threads)
    return IWE(stream.width, stream.height, counts), dropped
