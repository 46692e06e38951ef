"""(r, θ_b) coarse-to-fine 보정 탐색

1. coarse: r × θ_b 격자 전수 평가 (r 바깥 루프, θ_b 안쪽 루프, 동률은 먼저 나온 값)
2. fine: 좌표별 golden-section 을 번갈아 적용, 변화량 < (r_tol, θ_tol) 이면 종료
"""
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import pandas as pd
from scipy.special import expit

from src.calib.cost import CostReport, default_eta
from src.events.iwe import accumulate_positions
from src.events.model import EventStream
from src.optics.displacement import CompensationParams
from src.optics.vectors import TWO_PI, wrap_angle
from src.utils.config import OPTICS_CONFIG, SEARCH_CONFIG, kv_bool, kv_float, kv_int, kv_str
from src.utils.errors import ConfigError, InsufficientData, NonConvergence
from src.utils.logger import get_logger
from src.utils.state import state

logger = get_logger(__name__)

INV_PHI = (math.sqrt(5) - 1) / 2
INV_PHI_SQUARE = (3 - math.sqrt(5)) / 2


@dataclass(frozen=True)
class SearchConfig:
    """보정 탐색 설정

    r_lo / r_hi 가 None 이면 초기값 r₀ 의 [r_lo_scale, r_hi_scale] 배로 잡는다.
    eta 가 None 이면 보정 전 IWE 로부터 자동 결정.
    """
    r_lo: float | None = None
    r_hi: float | None = None
    r_lo_scale: float = SEARCH_CONFIG["r_lo_scale"]
    r_hi_scale: float = SEARCH_CONFIG["r_hi_scale"]
    r_step: float = SEARCH_CONFIG["r_step_px"]
    theta_step: float = math.radians(SEARCH_CONFIG["theta_step_deg"])
    r_tol: float = SEARCH_CONFIG["r_tol_px"]
    theta_tol: float = math.radians(SEARCH_CONFIG["theta_tol_deg"])
    max_iter: int = SEARCH_CONFIG["max_iter"]
    window_s: float = SEARCH_CONFIG["window_s"]
    eta: float | None = None
    rotation_speed: float = OPTICS_CONFIG["rotation_rpm"] / 60.0
    min_periods: float = SEARCH_CONFIG["min_periods"]
    min_events: int = SEARCH_CONFIG["min_events"]
    max_coarse_events: int = SEARCH_CONFIG["max_coarse_events"]
    binning: str = SEARCH_CONFIG["binning"]
    fine: bool = True

    def __post_init__(self):
        if self.window_s <= 0:
            raise ConfigError(f"보정 윈도우 길이는 양수여야 합니다: {self.window_s}")
        if self.r_step <= 0 or not 0 < self.theta_step <= TWO_PI:
            raise ConfigError(f"격자 간격이 잘못되었습니다: r_step={self.r_step}, theta_step={self.theta_step}")
        if self.r_lo is not None and self.r_hi is not None and self.r_hi < self.r_lo:
            raise ConfigError(f"r 범위가 비었습니다: [{self.r_lo}, {self.r_hi}]")
        if self.eta is not None and self.eta <= 0:
            raise ConfigError(f"eta 는 양수여야 합니다: {self.eta}")
        if self.r_tol <= 0 or self.theta_tol <= 0 or self.max_iter < 1:
            raise ConfigError("수렴 조건이 잘못되었습니다")
        if self.binning not in ("nearest", "bilinear"):
            raise ConfigError(f"binning 은 nearest/bilinear 중 하나: {self.binning}")

    def r_grid(self, r0: float) -> np.ndarray:
        lo = self.r_lo if self.r_lo is not None else max(0.0, self.r_lo_scale * r0)
        hi = self.r_hi if self.r_hi is not None else self.r_hi_scale * r0
        return np.arange(lo, hi + self.r_step * 0.5, self.r_step)

    def theta_grid(self) -> np.ndarray:
        return np.arange(0.0, TWO_PI - 1e-12, self.theta_step)

    @classmethod
    def from_kv(cls, values: dict, rotation_speed: float | None = None) -> "SearchConfig":
        r_lo = kv_float(values, "r_lo_px") if "r_lo_px" in values else None
        r_hi = kv_float(values, "r_hi_px") if "r_hi_px" in values else None
        eta = kv_float(values, "eta") if "eta" in values else None
        return cls(
            r_lo=r_lo,
            r_hi=r_hi,
            r_lo_scale=kv_float(values, "r_lo_scale", SEARCH_CONFIG["r_lo_scale"]),
            r_hi_scale=kv_float(values, "r_hi_scale", SEARCH_CONFIG["r_hi_scale"]),
            r_step=kv_float(values, "r_step_px", SEARCH_CONFIG["r_step_px"]),
            theta_step=math.radians(kv_float(values, "theta_step_deg", SEARCH_CONFIG["theta_step_deg"])),
            r_tol=kv_float(values, "r_tol_px", SEARCH_CONFIG["r_tol_px"]),
            theta_tol=math.radians(kv_float(values, "theta_tol_deg", SEARCH_CONFIG["theta_tol_deg"])),
            max_iter=kv_int(values, "max_iter", SEARCH_CONFIG["max_iter"]),
            window_s=kv_float(values, "window_s", SEARCH_CONFIG["window_s"]),
            eta=eta,
            rotation_speed=rotation_speed if rotation_speed is not None else OPTICS_CONFIG["rotation_rpm"] / 60.0,
            min_periods=kv_float(values, "min_periods", SEARCH_CONFIG["min_periods"]),
            min_events=kv_int(values, "min_events", SEARCH_CONFIG["min_events"]),
            max_coarse_events=kv_int(values, "max_coarse_events", SEARCH_CONFIG["max_coarse_events"]),
            binning=kv_str(values, "binning", SEARCH_CONFIG["binning"], choices=("nearest", "bilinear")),
            fine=kv_bool(values, "fine", True),
        )


def golden_section(f, a: float, b: float, tol: float) -> float:
    """단봉 함수 f 의 [a, b] 최소점 (폭 tol 이하 구간의 중점)"""
    a, b = min(a, b), max(a, b)
    h = b - a
    if h <= tol:
        return (a + b) / 2
    n = int(math.ceil(math.log(tol / h) / math.log(INV_PHI)))
    c = a + INV_PHI_SQUARE * h
    d = a + INV_PHI * h
    yc = f(c)
    yd = f(d)
    for _ in range(n - 1):
        if yc < yd:
            b, d, yd = d, c, yc
            h *= INV_PHI
            c = a + INV_PHI_SQUARE * h
            yc = f(c)
        else:
            a, c, yc = c, d, yd
            h *= INV_PHI
            d = a + INV_PHI * h
            yd = f(d)
    return (a + d) / 2 if yc < yd else (c + b) / 2


class CostEvaluator:
    """고정된 이벤트 집합에 대해 J(r, θ_b) 평가 (cos θ, sin θ 미리 계산)"""

    def __init__(self, stream: EventStream, eta: float, binning: str, center, k1: float):
        theta = stream.require_theta()
        self.x = stream.x
        self.y = stream.y
        self.cos_t = np.cos(theta)
        self.sin_t = np.sin(theta)
        self.width = stream.width
        self.height = stream.height
        self.eta = eta
        self.binning = binning
        self.template = CompensationParams(r=0.0, theta_b=0.0, center=center, k1=k1)
        self.radius_scale = self.template.with_values(r=1.0).radius_at(self.x, self.y) if k1 else 1.0
        self.n_evals = 0

    def __call__(self, r: float, theta_b: float) -> float:
        cb, sb = math.cos(theta_b), math.sin(theta_b)
        rad = r * self.radius_scale
        # cos(θ+θ_b) − cos θ_b,  sin(θ+θ_b) − sin θ_b
        dx = rad * (self.cos_t * cb - self.sin_t * sb - cb)
        dy = rad * (self.sin_t * cb + self.cos_t * sb - sb)
        counts, _ = accumulate_positions(self.x - dx, self.y - dy, self.width, self.height, self.binning, threads=1)
        self.n_evals += 1
        positive = counts[counts > 0]
        return float(expit(-positive / self.eta).sum())


def _check_window(window: EventStream, cfg: SearchConfig):
    duration_s = window.duration_us / 1e6
    periods = duration_s * cfg.rotation_speed
    if periods < cfg.min_periods:
        raise InsufficientData(
            f"보정 구간이 짧습니다: {duration_s:.3f}s = {periods:.2f}주기 (최소 {cfg.min_periods}주기)"
        )
    if len(window) < cfg.min_events:
        raise InsufficientData(f"이벤트가 부족합니다: {len(window)}개 (최소 {cfg.min_events}개)")


def calibrate(stream: EventStream, init: CompensationParams, cfg: SearchConfig | None = None,
              threads: int | None = None) -> tuple[CompensationParams, CostReport]:
    """contrast maximization 으로 (r, θ_b) 추정"""
    cfg = cfg or SearchConfig()
    threads = threads or state.get_threads()
    stream.require_theta()

    t0 = stream.t_range[0]
    window = stream.slice(t0, t0 + int(round(cfg.window_s * 1e6)))
    _check_window(window, cfg)

    eta = cfg.eta if cfg.eta is not None else default_eta(window)
    full_eval = CostEvaluator(window, eta, cfg.binning, init.center, init.k1)
    uncompensated = full_eval(0.0, 0.0)
    logger.info(
        f"🔧 보정 시작: 이벤트 {len(window)}개, {window.duration_us / 1e6:.2f}s, η={eta:.3f}, "
        f"J(보정 전)={uncompensated:.1f}"
    )

    # ---------- coarse ----------
    stride = max(1, math.ceil(len(window) / cfg.max_coarse_events))
    coarse_eval = full_eval if stride == 1 else CostEvaluator(
        window.select(np.s_[::stride]), eta, cfg.binning, init.center, init.k1
    )
    r_grid = cfg.r_grid(init.r)
    theta_grid = cfg.theta_grid()
    if not len(r_grid):
        raise ConfigError(f"r 탐색 범위가 비었습니다 (r₀={init.r})")
    pairs = [(float(r), float(th)) for r in r_grid for th in theta_grid]

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            costs = list(pool.map(lambda rt: coarse_eval(*rt), pairs))
    else:
        costs = [coarse_eval(r, th) for r, th in pairs]

    best_idx = int(np.argmin(costs))
    best_r, best_theta = pairs[best_idx]
    records = [(r, th, c, "coarse") for (r, th), c in zip(pairs, costs)]
    logger.info(
        f"  coarse: {len(pairs)}점 (이벤트 1/{stride}), 최적 r={best_r:.2f}px, "
        f"θ_b={math.degrees(best_theta):.1f}°"
    )

    # ---------- fine ----------
    best_cost = full_eval(best_r, best_theta)
    records.append((best_r, best_theta, best_cost, "fine"))
    iterations = 0
    if cfg.fine:
        r_half, th_half = cfg.r_step, cfg.theta_step
        converged = False
        while iterations < cfg.max_iter:
            iterations += 1
            prev_r, prev_theta = best_r, best_theta

            r_new = golden_section(
                lambda r: full_eval(r, best_theta), max(0.0, best_r - r_half), best_r + r_half, cfg.r_tol / 2
            )
            c = full_eval(r_new, best_theta)
            if c < best_cost:
                best_r, best_cost = r_new, c
                records.append((best_r, best_theta, c, "fine"))

            th_new = golden_section(
                lambda th: full_eval(best_r, th), best_theta - th_half, best_theta + th_half, cfg.theta_tol / 2
            )
            c = full_eval(best_r, th_new)
            if c < best_cost:
                best_theta, best_cost = th_new, c
                records.append((best_r, best_theta, c, "fine"))

            logger.debug(
                f"  fine #{iterations}: r={best_r:.3f}px, θ_b={math.degrees(best_theta):.3f}°, J={best_cost:.2f}"
            )
            if abs(best_r - prev_r) < cfg.r_tol and abs(best_theta - prev_theta) < cfg.theta_tol:
                converged = True
                break
            r_half = max(r_half / 2, 4 * cfg.r_tol)
            th_half = max(th_half / 2, 4 * cfg.theta_tol)
        if not converged:
            raise NonConvergence(f"fine 탐색이 {cfg.max_iter}회 안에 수렴하지 않았습니다")

    params = init.with_values(r=best_r, theta_b=wrap_angle(best_theta))
    surface = pd.DataFrame(records, columns=["r_px", "theta_b_rad", "cost", "stage"])
    report = CostReport(
        J=best_cost, eta=eta, surface=surface, iterations=iterations, uncompensated_J=uncompensated
    )
    logger.info(
        f"✅ 보정 완료: r={params.r:.3f}px, θ_b={math.degrees(params.theta_b):.2f}°, "
        f"J={best_cost:.1f} (평가 {full_eval.n_evals + coarse_eval.n_evals * (coarse_eval is not full_eval)}회)"
    )
    return params, report
