"""이벤트 분포 균일도: KDE 밀도 분산, 이진화 누적 이미지 엔트로피

(x, y, t) 를 축별 min-max 로 단위 정육면체에 정규화한 뒤 Gaussian 곱 커널로 밀도를 잰다.
각 이벤트 자신도 합에 포함한다 (leave-self-in).
"""
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import gaussian_filter, map_coordinates

from src.events.iwe import IWE
from src.events.model import EventStream
from src.utils.config import METRIC_CONFIG
from src.utils.errors import EmptyStream
from src.utils.logger import get_logger
from src.utils.state import state

logger = get_logger(__name__)

HIST_BINS = 32
EXACT_WORK_PER_CHUNK = 1 << 22
REFERENCE_SAMPLE = 10_000


@dataclass
class DensityReport:
    densities: np.ndarray = field(repr=False)
    histogram: tuple[np.ndarray, np.ndarray] = field(repr=False)
    variance: float
    mean: float
    low_density_cutoff: float
    low_density_fraction: float
    bandwidth: tuple[float, float, float]
    method: str


def normalize_unit_cube(stream: EventStream) -> np.ndarray:
    """(N,3) x, y, t 를 축별 [0, 1] 로. 폭이 0 인 축은 0"""
    pts = np.stack([stream.x, stream.y, stream.t.astype(np.float64)], axis=1)
    lo = pts.min(axis=0)
    span = pts.max(axis=0) - lo
    return (pts - lo) / np.where(span > 0, span, 1.0)


def scott_bandwidth(pts: np.ndarray) -> np.ndarray:
    """축별 Scott 규칙 σ·N^(−1/(d+4)). 퇴화 축은 1"""
    n, d = pts.shape
    sigma = pts.std(axis=0)
    h = sigma * n ** (-1.0 / (d + 4))
    return np.where(h > 0, h, 1.0)


def _exact_densities(pts: np.ndarray, h: np.ndarray, threads: int) -> np.ndarray:
    scaled = pts / h
    sq = np.sum(scaled * scaled, axis=1)
    n = len(scaled)
    norm = 1.0 / (n * (2 * math.pi) ** 1.5 * float(np.prod(h)))
    chunk = max(1, EXACT_WORK_PER_CHUNK // n)
    bounds = [(lo, min(lo + chunk, n)) for lo in range(0, n, chunk)]

    def work(bound):
        lo, hi = bound
        d2 = sq[lo:hi, None] + sq[None, :] - 2.0 * scaled[lo:hi] @ scaled.T
        return np.exp(-0.5 * np.maximum(d2, 0.0)).sum(axis=1)

    if threads > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(work, bounds))
    else:
        parts = [work(b) for b in bounds]
    return np.concatenate(parts) * norm


def _grid_densities(pts: np.ndarray, h: np.ndarray, max_bins: int) -> np.ndarray:
    """격자 근사: 히스토그램 → Gaussian 평활 → 이벤트 위치에서 선형 보간"""
    bins = np.minimum(max_bins, np.maximum(4, np.ceil(4.0 / h))).astype(np.int64)
    idx = np.minimum(np.floor(pts * bins).astype(np.int64), bins - 1)
    flat = np.ravel_multi_index(idx.T, tuple(bins))
    hist = np.bincount(flat, minlength=int(np.prod(bins))).astype(np.float64).reshape(tuple(bins))
    smoothed = gaussian_filter(hist, sigma=h * bins, mode="constant", truncate=4.0)
    coords = (pts * bins - 0.5).T
    values = map_coordinates(smoothed, coords, order=1, mode="nearest")
    cell_volume = float(np.prod(1.0 / bins))
    return np.maximum(values, 0.0) / (len(pts) * cell_volume)


def event_densities(stream: EventStream, bandwidth=None, exact_limit: int | None = None,
                    threads: int | None = None) -> tuple[np.ndarray, np.ndarray, str]:
    """(밀도, 대역폭, 방법) 반환"""
    if not len(stream):
        raise EmptyStream("밀도를 계산할 이벤트가 없습니다")
    exact_limit = METRIC_CONFIG["kde_exact_limit"] if exact_limit is None else exact_limit
    pts = normalize_unit_cube(stream)
    h = scott_bandwidth(pts) if bandwidth is None else np.broadcast_to(
        np.asarray(bandwidth, dtype=np.float64), (3,)
    ).copy()
    if len(pts) <= exact_limit:
        return _exact_densities(pts, h, threads or state.get_threads()), h, "exact"
    return _grid_densities(pts, h, METRIC_CONFIG["kde_grid_max_bins"]), h, "grid"


def low_density_cutoff(reference: EventStream, percentile: float | None = None,
                       bandwidth=None) -> float:
    """참조 스트림의 정확 밀도 하위 백분위 (기본 10%)"""
    percentile = METRIC_CONFIG["low_density_percentile"] if percentile is None else percentile
    if len(reference) > REFERENCE_SAMPLE:
        reference = reference.select(np.s_[::math.ceil(len(reference) / REFERENCE_SAMPLE)])
    dens, _, _ = event_densities(reference, bandwidth, exact_limit=REFERENCE_SAMPLE)
    return float(np.percentile(dens, percentile))


def kde_density_variance(stream: EventStream, bandwidth=None, low_cutoff: float | None = None,
                         exact_limit: int | None = None, threads: int | None = None) -> DensityReport:
    """이벤트별 KDE 밀도와 그 분산 (분산이 작을수록 고르게 분포)"""
    dens, h, method = event_densities(stream, bandwidth, exact_limit, threads)
    cutoff = low_density_cutoff(stream, bandwidth=bandwidth) if low_cutoff is None else low_cutoff
    report = DensityReport(
        densities=dens,
        histogram=np.histogram(dens, bins=HIST_BINS),
        variance=float(np.var(dens)),
        mean=float(np.mean(dens)),
        low_density_cutoff=cutoff,
        low_density_fraction=float(np.mean(dens < cutoff)),
        bandwidth=(float(h[0]), float(h[1]), float(h[2])),
        method=method,
    )
    logger.debug(f"📈 KDE ({method}): 이벤트 {len(stream)}개, 분산={report.variance:.4f}")
    return report


def binarized_entropy(iwe: IWE | np.ndarray) -> float:
    """count > 0 이진화 맵의 Shannon 엔트로피 (bit)"""
    counts = iwe.counts if isinstance(iwe, IWE) else np.asarray(iwe)
    if counts.size == 0:
        return 0.0
    p = float(np.count_nonzero(counts > 0)) / counts.size
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return float(-p * math.log2(p) - (1 - p) * math.log2(1 - p))
