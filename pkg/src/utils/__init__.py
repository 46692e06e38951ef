"""Utils 패키지 - 설정, 로깅, 예외, 실행 상태"""
from .config import *
from .errors import AmiError
from .logger import get_logger
from .state import state
