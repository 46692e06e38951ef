"""edge 검출 품질: ODS-F

예측/정답 edge 픽셀을 match_radius 이내에서 거리 오름차순으로 탐욕적 1:1 매칭한다.
동률은 예측 픽셀의 scan 순서, 그다음 정답 픽셀의 scan 순서.
"""
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from src.events.iwe import IWE
from src.translate.scene import EdgeGeometry
from src.utils.config import METRIC_CONFIG
from src.utils.errors import DimensionMismatch


@dataclass
class EdgeMap:
    width: int
    height: int
    mask: np.ndarray = field(repr=False)  # (height, width) bool

    def __post_init__(self):
        self.mask = np.asarray(self.mask, dtype=bool)
        if self.mask.shape != (self.height, self.width):
            raise DimensionMismatch(f"mask 크기 {self.mask.shape} ≠ ({self.height}, {self.width})")

    @property
    def count(self) -> int:
        return int(np.count_nonzero(self.mask))

    def points(self) -> np.ndarray:
        """(K,2) edge 픽셀 (x, y), 행 우선 scan 순서"""
        ys, xs = np.nonzero(self.mask)
        return np.stack([xs, ys], axis=1).astype(np.float64)

    @classmethod
    def from_iwe(cls, iwe: IWE, threshold: float = 0.0) -> "EdgeMap":
        """count > threshold 인 픽셀을 edge 로"""
        return cls(iwe.width, iwe.height, iwe.counts > threshold)


@dataclass
class EdgeScore:
    f1: float
    precision: float
    recall: float
    threshold: float | None = None


def edge_map_from_geometry(geometry: EdgeGeometry, width: int, height: int,
                           half_width: float = 0.5, chunk: int = 1 << 14) -> EdgeMap:
    """선분과의 거리가 half_width 이하인 픽셀 중심을 edge 로 래스터화"""
    yy, xx = np.mgrid[0:height, 0:width]
    xs = xx.ravel().astype(np.float64)
    ys = yy.ravel().astype(np.float64)
    mask = np.zeros(len(xs), dtype=bool)
    if len(geometry):
        for lo in range(0, len(xs), chunk):
            dist = geometry.distance_to_each(xs[lo:lo + chunk], ys[lo:lo + chunk])
            mask[lo:lo + chunk] = dist.min(axis=1) <= half_width + 1e-9
    return EdgeMap(width, height, mask.reshape(height, width))


def match_edges(pred: EdgeMap, gt: EdgeMap, match_radius: float) -> EdgeScore:
    if (pred.width, pred.height) != (gt.width, gt.height):
        raise DimensionMismatch(
            f"edge 맵 크기가 다릅니다: {pred.width}x{pred.height} vs {gt.width}x{gt.height}"
        )
    n_pred, n_gt = pred.count, gt.count
    if n_pred == 0 and n_gt == 0:
        return EdgeScore(1.0, 1.0, 1.0)
    if n_pred == 0 or n_gt == 0:
        return EdgeScore(0.0, 0.0 if n_pred else 1.0, 0.0 if n_gt else 1.0)

    pairs = cKDTree(pred.points()).sparse_distance_matrix(
        cKDTree(gt.points()), match_radius, output_type="ndarray"
    )
    order = np.lexsort((pairs["j"], pairs["i"], pairs["v"]))
    used_pred = np.zeros(n_pred, dtype=bool)
    used_gt = np.zeros(n_gt, dtype=bool)
    matched = 0
    for i, j in zip(pairs["i"][order], pairs["j"][order]):
        if not used_pred[i] and not used_gt[j]:
            used_pred[i] = used_gt[j] = True
            matched += 1

    precision = matched / n_pred
    recall = matched / n_gt
    f1 = 0.0 if matched == 0 else 2 * precision * recall / (precision + recall)
    return EdgeScore(f1, precision, recall)


def count_thresholds(iwe: IWE, levels: int | None = None) -> np.ndarray:
    """IWE 양수 count 의 분위수로 만든 이진화 임계값 (count > thr)"""
    levels = levels or METRIC_CONFIG["ods_levels"]
    positive = iwe.counts[iwe.counts > 0]
    if not len(positive):
        return np.array([0.0])
    qs = np.quantile(positive, np.linspace(0.0, 1.0, levels, endpoint=False))
    return np.unique(np.concatenate([[0.0], qs]))


def ods_f(pred: EdgeMap | IWE, gt: EdgeMap, match_radius: float | None = None,
          thresholds=None) -> EdgeScore:
    """ODS-F. IWE 를 주면 임계값 전체에서 최대 F1 을 고른다 (동률이면 낮은 임계값)"""
    match_radius = METRIC_CONFIG["match_radius"] if match_radius is None else match_radius
    if isinstance(pred, EdgeMap):
        if thresholds is None:
            return match_edges(pred, gt, match_radius)
        raise ValueError("thresholds 는 IWE 입력에만 쓸 수 있습니다")
    if (pred.width, pred.height) != (gt.width, gt.height):
        raise DimensionMismatch(
            f"IWE 와 edge 맵 크기가 다릅니다: {pred.width}x{pred.height} vs {gt.width}x{gt.height}"
        )
    thresholds = count_thresholds(pred) if thresholds is None else np.asarray(thresholds, dtype=np.float64)
    best = None
    for thr in thresholds:
        score = match_edges(EdgeMap.from_iwe(pred, float(thr)), gt, match_radius)
        if best is None or score.f1 > best.f1:
            best = EdgeScore(score.f1, score.precision, score.recall, float(thr))
    return best
