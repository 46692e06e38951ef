"""IWE 선명도 비용 J

J = Σ_{h(i,j) > 0} 1 / (1 + exp(h(i,j)/η)). 이벤트가 적게 쌓인 픽셀일수록 비용이 크다.
"""
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from scipy.special import expit

from src.events.iwe import IWE, accumulate_positions
from src.events.model import EventStream


@dataclass
class CostReport:
    """탐색 결과: 최적 비용과 샘플링한 비용 곡면 (r_px, theta_b_rad, cost, stage)"""
    J: float
    eta: float
    surface: pd.DataFrame = field(repr=False)
    iterations: int = 0
    uncompensated_J: float | None = None

    def coarse_grid(self) -> pd.DataFrame:
        """coarse 단계 결과를 r × θ_b 격자로 피벗"""
        coarse = self.surface[self.surface["stage"] == "coarse"]
        return coarse.pivot(index="r_px", columns="theta_b_rad", values="cost")


def sharpness_cost(iwe: IWE | np.ndarray, eta: float) -> float:
    if eta <= 0:
        raise ValueError(f"eta 는 양수여야 합니다: {eta}")
    h = iwe.counts if isinstance(iwe, IWE) else np.asarray(iwe)
    positive = h[h > 0]
    return float(expit(-positive / eta).sum())


def default_eta(stream: EventStream) -> float:
    """보정 전 최근접 IWE 의 양수 픽셀 count 중앙값"""
    counts, _ = accumulate_positions(stream.x, stream.y, stream.width, stream.height, "nearest")
    positive = counts[counts > 0]
    if not len(positive):
        return 1.0
    return float(np.median(positive))
