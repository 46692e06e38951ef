"""Optics 패키지 - 회전 웨지 프리즘 + 핀홀 카메라"""
from .vectors import UnitVec3, rotate_about_axis, wrap_angle
from .camera import Intrinsics, project, backproject
from .prism import (
    PrismConfig, snell_refract, wedge_axis, prism_transmit_full, prism_transmit_simplified,
    deflection_angle, axial_deflection, simplification_error,
)
from .displacement import CompensationParams, pixel_displacement, initial_radius_px, full_model_displacement
