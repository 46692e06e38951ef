"""Metrics 패키지 - 텍스처 품질 지표와 리포트"""
from .density import DensityReport, kde_density_variance, binarized_entropy, low_density_cutoff
from .edges import EdgeMap, EdgeScore, edge_map_from_geometry, match_edges, ods_f
from .report import report, write_pgm
