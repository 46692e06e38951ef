import math

import numpy as np
import pytest

from src.events.model import EventStream
from src.metrics.edges import edge_map_from_geometry
from src.optics.camera import Intrinsics
from src.optics.displacement import CompensationParams
from src.optics.prism import PrismConfig
from src.translate.scene import Scene, SceneSpec
from src.translate.synth import SynthConfig
from src.utils.state import state


@pytest.fixture(autouse=True)
def reset_state():
    """모든 테스트 전에 GlobalState 를 기본값으로"""
    state.set_seed(42)
    state.set_threads(1)
    yield
    state.set_seed(42)
    state.set_threads(1)


@pytest.fixture
def small_camera():
    """64x64, 수평 화각 90° (fx = 32)"""
    return Intrinsics.from_fov(64, 64, 90.0)


@pytest.fixture
def prism():
    """α = 1°, n = 1.55, 720 rpm"""
    return PrismConfig(alpha=math.radians(1.0), n=1.55, rotation_speed=12.0)


@pytest.fixture
def make_stream():
    """리스트로 EventStream 생성 (정렬은 from_arrays 가 맡음)"""
    def _make(t, x, y, p, width=16, height=16, theta=None):
        stream, _ = EventStream.from_arrays(width, height, t, x, y, p, theta)
        return stream
    return _make


@pytest.fixture
def tiny_edges_spec():
    """정적 4방향 막대 장면 64x64"""
    return SceneSpec(width=64, height=64, pattern="edges", duration_s=0.1, seed=7)


@pytest.fixture
def synth_cfg(prism):
    """r = 3px, θ_b = 0 원형 모델, 불응기 없음"""
    return SynthConfig(
        prism=prism,
        params=CompensationParams(r=3.0, theta_b=0.0, center=(32.0, 32.0)),
        refractory_us=0,
    )


@pytest.fixture
def edge_pixel_events():
    """장면 edge 픽셀 위에 시간 균일 분포로 뿌린 S-EV 스트림 (보정 테스트용)"""
    def _make(spec: SceneSpec, n_events: int, duration_s: float, seed: int = 0) -> EventStream:
        edges = Scene(spec).edges(0.0)
        points = edge_map_from_geometry(edges, spec.width, spec.height).points()
        rng = np.random.default_rng(seed)
        pick = rng.integers(0, len(points), n_events)
        t = rng.integers(0, int(duration_s * 1e6) + 1, n_events)
        p = rng.choice(np.array([-1, 1], dtype=np.int8), n_events)
        stream, _ = EventStream.from_arrays(
            spec.width, spec.height, t, points[pick, 0], points[pick, 1], p
        )
        return stream
    return _make
