import math

import numpy as np
import pytest

from src.optics.camera import Intrinsics, backproject, backproject_batch, project, project_batch
from src.optics.displacement import (
    CompensationParams, full_model_displacement, initial_radius_px, pixel_displacement,
)
from src.optics.prism import (
    PrismConfig, axial_deflection, deflection_angle, fit_pixel_deflection, fov_pixel_grid, prism_transmit_full,
    prism_transmit_simplified, simplification_error, snell_refract, wedge_axis, wedge_axis_batch,
)
from src.optics.vectors import X_C, Y_C, Z_C, UnitVec3, rotate_about_axis, wrap_angle
from src.utils.errors import (
    BehindCamera, ConfigError, DegenerateAxis, DegenerateGeometry, TotalInternalReflection,
)


def _angle_between(a: UnitVec3, b: UnitVec3) -> float:
    return math.acos(max(-1.0, min(1.0, a.dot(b))))


# ==================== 벡터 / 회전 ====================

def test_unit_vector_normalizes_and_rejects_zero():
    v = UnitVec3(3.0, 0.0, 4.0)
    assert v.x == pytest.approx(0.6)
    assert v.z == pytest.approx(0.8)
    with pytest.raises(DegenerateGeometry):
        UnitVec3(0.0, 0.0, 0.0)


def test_rotation_identities():
    """z 축 90° 회전: x → y, 2π 회전은 항등, 회전축 자신은 불변"""
    y = rotate_about_axis(X_C, Z_C, math.pi / 2)
    assert y.as_array() == pytest.approx(Y_C.as_array(), abs=1e-12)

    v = UnitVec3(0.3, -0.5, 0.8)
    full_turn = rotate_about_axis(v, UnitVec3(1.0, 1.0, 1.0), 2 * math.pi)
    assert full_turn.as_array() == pytest.approx(v.as_array(), abs=1e-12)

    axis = UnitVec3(0.2, 0.4, -0.9)
    assert rotate_about_axis(axis, axis, 1.234).as_array() == pytest.approx(axis.as_array(), abs=1e-12)


def test_rotation_inverse_round_trip():
    v = UnitVec3(0.1, 0.7, -0.7)
    axis = UnitVec3(-0.3, 0.2, 0.5)
    back = rotate_about_axis(rotate_about_axis(v, axis, 0.77), axis, -0.77)
    assert back.as_array() == pytest.approx(v.as_array(), abs=1e-12)


def test_rotation_rejects_non_unit_axis():
    with pytest.raises(DegenerateAxis):
        rotate_about_axis(X_C, np.array([0.0, 0.0, 2.0]), 0.1)


def test_wrap_angle_range():
    assert wrap_angle(-0.1) == pytest.approx(2 * math.pi - 0.1)
    assert wrap_angle(2 * math.pi) == 0.0
    arr = wrap_angle(np.array([-math.pi, 0.0, 7.0]))
    assert np.all((arr >= 0) & (arr < 2 * math.pi))
    assert arr[0] == pytest.approx(math.pi)


# ==================== Snell ====================

@pytest.mark.parametrize("incidence_deg", [0.0, 5.0, 20.0, 40.0])
def test_snell_round_trip(incidence_deg):
    """공기 → 유리 → 공기 왕복 시 입사각 복원"""
    i = math.radians(incidence_deg)
    inside = snell_refract(i, 1.0, 1.55)
    assert snell_refract(inside, 1.55, 1.0) == pytest.approx(i, abs=1e-12)
    assert inside <= i


def test_snell_known_value():
    """공기 → 유리 (n=1.55) 30° 입사의 굴절각은 약 18.82°"""
    inside = snell_refract(math.radians(30.0), 1.0, 1.55)
    assert inside == pytest.approx(math.asin(0.5 / 1.55), abs=1e-12)
    assert math.degrees(inside) == pytest.approx(18.819, abs=2e-3)
    assert snell_refract(inside, 1.55, 1.0) == pytest.approx(math.radians(30.0), abs=1e-12)


def test_snell_total_internal_reflection():
    with pytest.raises(TotalInternalReflection):
        snell_refract(math.radians(60.0), 1.55, 1.0)


# ==================== 카메라 ====================

def test_project_backproject_round_trip(small_camera):
    for p in [(0.0, 0.0), (10.0, 20.0), (63.0, 31.5), (32.0, 32.0)]:
        u, v = project(backproject(p, small_camera), small_camera)
        assert (u, v) == pytest.approx(p, abs=1e-9)


def test_backproject_principal_point_is_optical_axis(small_camera):
    ray = backproject((small_camera.cx, small_camera.cy), small_camera)
    assert ray.as_array() == pytest.approx([0.0, 0.0, -1.0])


def test_project_batch_matches_scalar(small_camera):
    pix = np.array([[1.0, 2.0], [40.0, 50.0]])
    rays = backproject_batch(pix, small_camera)
    assert project_batch(rays, small_camera) == pytest.approx(pix, abs=1e-9)


def test_project_known_pixel():
    """X/Z = 0.1 인 광선은 fx=500 에서 주점 오른쪽 50px 에 맺힌다"""
    K = Intrinsics(fx=500.0, fy=500.0, cx=320.0, cy=240.0, width=640, height=480)
    u, v = project(UnitVec3(-0.1, 0.0, -1.0), K)
    assert (u, v) == pytest.approx((370.0, 240.0), abs=1e-9)
    ray = backproject((370.0, 240.0), K)
    assert ray.x / ray.z == pytest.approx(0.1, abs=1e-12)


def test_project_behind_camera(small_camera):
    with pytest.raises(BehindCamera):
        project(UnitVec3(0.0, 0.0, 1.0), small_camera)


def test_intrinsics_validation():
    with pytest.raises(ConfigError):
        Intrinsics(fx=-1.0, fy=1.0, cx=1.0, cy=1.0, width=4, height=4)
    with pytest.raises(ConfigError):
        Intrinsics(fx=1.0, fy=1.0, cx=10.0, cy=1.0, width=4, height=4)


def test_intrinsics_from_fov():
    K = Intrinsics.from_fov(64, 48, 90.0)
    assert K.fx == pytest.approx(32.0)
    assert (K.cx, K.cy) == (32.0, 24.0)
    assert K.K[0, 2] == 32.0


# ==================== 프리즘 ====================

def test_prism_config_validation():
    with pytest.raises(ConfigError):
        PrismConfig(alpha=math.radians(1.0), n=1.0, rotation_speed=12.0)
    with pytest.raises(ConfigError):
        PrismConfig(alpha=math.radians(12.0), n=1.5, rotation_speed=12.0)
    with pytest.raises(ConfigError):
        PrismConfig(alpha=math.radians(1.0), n=1.5, rotation_speed=-1.0)


def test_prism_config_from_kv_rpm():
    p = PrismConfig.from_kv({"alpha_deg": "0.5", "n": "1.6", "rotation_rpm": "720"})
    assert p.rotation_speed == pytest.approx(12.0)
    assert p.period_s == pytest.approx(1 / 12)
    assert math.degrees(p.alpha) == pytest.approx(0.5)


def test_wedge_axis_tilt_and_batch(prism):
    for theta in [0.0, 1.0, 4.0]:
        z_w = wedge_axis(theta, prism.alpha)
        assert _angle_between(z_w, Z_C) == pytest.approx(prism.alpha, abs=1e-12)
        assert wedge_axis_batch(np.array(theta), prism.alpha) == pytest.approx(z_w.as_array(), abs=1e-12)


def test_wedge_axis_periodic(prism):
    for theta in [0.0, 0.7, 3.0, 5.5]:
        a = wedge_axis(theta, prism.alpha).as_array()
        b = wedge_axis(theta + 2 * math.pi, prism.alpha).as_array()
        assert b == pytest.approx(a, abs=1e-12)


@pytest.mark.parametrize("alpha_deg", [0.5, 1.0, 2.0])
def test_thin_prism_deviation(alpha_deg):
    """광축 광선의 편향각 ≈ (n−1)α (1% 이내)"""
    alpha = math.radians(alpha_deg)
    n = 1.55
    v_in = UnitVec3(0.0, 0.0, -1.0)
    v_out = prism_transmit_full(v_in, wedge_axis(0.3, alpha), n)
    deviation = _angle_between(v_in, v_out)
    assert deviation == pytest.approx((n - 1) * alpha, rel=0.01)
    prism = PrismConfig(alpha=alpha, n=n, rotation_speed=12.0)
    assert deviation == pytest.approx(axial_deflection(prism), abs=1e-12)


def test_deviation_independent_of_rotation_on_axis(prism):
    v_in = UnitVec3(0.0, 0.0, -1.0)
    deviations = [
        _angle_between(v_in, prism_transmit_full(v_in, wedge_axis(th, prism.alpha), prism.n))
        for th in np.linspace(0, 2 * math.pi, 7)
    ]
    assert max(deviations) - min(deviations) < 1e-12


def test_simplified_model_exact_for_coplanar_ray(prism):
    """광축 광선은 z_w, z_c 와 한 평면: 단일 회전 δ 가 정확 모델과 일치"""
    v_in = UnitVec3(0.0, 0.0, -1.0)
    z_w = wedge_axis(1.1, prism.alpha)
    delta = deflection_angle(v_in, z_w, prism.n)
    assert abs(delta) == pytest.approx(axial_deflection(prism), abs=1e-12)
    full = prism_transmit_full(v_in, z_w, prism.n)
    simple = prism_transmit_simplified(v_in, z_w, delta)
    assert simple.as_array() == pytest.approx(full.as_array(), abs=1e-12)


@pytest.mark.parametrize("field_deg", [10.0, -15.0])
def test_simplified_model_exact_for_off_axis_coplanar_ray(prism, field_deg):
    """θ=0 에서 z_w 는 y-z 평면: 같은 평면의 비스듬한 광선도 단일 회전으로 정확히 표현된다"""
    phi = math.radians(field_deg)
    v_in = UnitVec3(0.0, math.sin(phi), -math.cos(phi))
    z_w = wedge_axis(0.0, prism.alpha)
    assert z_w.x == pytest.approx(0.0, abs=1e-15)
    delta = deflection_angle(v_in, z_w, prism.n)
    full = prism_transmit_full(v_in, z_w, prism.n)
    simple = prism_transmit_simplified(v_in, z_w, delta)
    assert simple.as_array() == pytest.approx(full.as_array(), abs=1e-9)
    assert abs(delta) > 0.0


def test_simplified_rejects_untilted_wedge():
    with pytest.raises(DegenerateGeometry):
        prism_transmit_simplified(UnitVec3(0.0, 0.0, -1.0), Z_C, 0.01)


def test_fit_pixel_deflection_on_axis(prism):
    """광학 중심 픽셀의 고정 δ 는 광축 편향각과 같다"""
    K = Intrinsics.from_fov(64, 64, 90.0)
    pixels = np.array([[K.cx, K.cy], [K.cx + 20.0, K.cy - 10.0]])
    deltas = fit_pixel_deflection(K, prism, pixels)
    assert deltas.shape == (2,)
    assert abs(deltas[0]) == pytest.approx(axial_deflection(prism), abs=1e-9)
    assert np.all(np.isfinite(deltas))


@pytest.mark.parametrize("alpha_deg", [0.5, 1.0])
def test_simplification_error_within_two_pixels(alpha_deg):
    """90° 화각 전체에서 정확/단순화 모델 재투영 차이 ≤ 2px"""
    K = Intrinsics.from_fov(128, 128, 90.0)
    prism = PrismConfig(alpha=math.radians(alpha_deg), n=1.55, rotation_speed=12.0)
    report = simplification_error(K, prism, fov_pixel_grid(K, 90.0, stride_px=8.0))
    assert report.n_rays > 100
    assert report.n_thetas == 24
    assert report.max_px <= 2.0
    assert report.mean_px <= report.max_px


# ==================== 상면 변위 ====================

def test_compensation_params_wraps_bias():
    params = CompensationParams(r=2.0, theta_b=-math.pi / 2)
    assert params.theta_b == pytest.approx(1.5 * math.pi)
    with pytest.raises(ConfigError):
        CompensationParams(r=-1.0, theta_b=0.0)


def test_pixel_displacement_circle():
    params = CompensationParams(r=2.0, theta_b=math.pi / 2)
    dx, dy = pixel_displacement((5.0, 5.0), 0.0, params)
    assert (dx, dy) == pytest.approx((0.0, 2.0), abs=1e-12)
    dx, dy = pixel_displacement((5.0, 5.0), math.pi / 2, params)
    assert (dx, dy) == pytest.approx((-2.0, 0.0), abs=1e-12)


def test_pixel_displacement_averages_to_zero_over_revolution():
    params = CompensationParams(r=3.5, theta_b=0.4)
    thetas = np.linspace(0.0, 2 * math.pi, 360, endpoint=False)
    d = np.array([pixel_displacement((12.0, 7.0), th, params) for th in thetas])
    assert d.mean(axis=0) == pytest.approx([0.0, 0.0], abs=1e-9)


def test_radial_refinement_grows_with_distance():
    params = CompensationParams(r=2.0, theta_b=0.0, center=(30.0, 40.0), k1=0.5)
    assert params.radius_at(30.0, 40.0) == pytest.approx(2.0)
    # 원점은 중심에서 |c| 만큼 떨어져 있어 ρ = 1
    assert params.radius_at(0.0, 0.0) == pytest.approx(3.0)


def test_full_model_on_axis_matches_initial_radius(small_camera, prism):
    center = np.array([[small_camera.cx, small_camera.cy]])
    r0 = initial_radius_px(prism, small_camera)
    for theta in [0.0, 2.0, 5.0]:
        d = full_model_displacement(center, theta, prism, small_camera)[0]
        assert math.hypot(*d) == pytest.approx(r0, rel=1e-9)
    assert r0 == pytest.approx(small_camera.fx * math.tan(axial_deflection(prism)))
