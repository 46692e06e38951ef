"""CLI 패키지 - 파이프라인 설정과 서브커맨드"""
from .config import PipelineConfig
from .commands import cmd_synth, cmd_translate, cmd_calibrate, cmd_compensate, cmd_eval, cmd_info
