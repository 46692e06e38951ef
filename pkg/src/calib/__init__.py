"""Calib 패키지 - AMI warp 보정, 선명도 비용, coarse-to-fine 보정"""
from src.optics.displacement import CompensationParams
from .compensation import warp_event, warp_positions, unwarp_positions, compensate_stream
from .cost import CostReport, sharpness_cost, default_eta
from .search import SearchConfig, calibrate, golden_section
from .residual import compensation_error
from .result_file import write_calibration, read_calibration, write_cost_surface
