"""AMI-EV 툴킷 - 예외 정의

CLI 는 `error: <CODE>: <message>` 한 줄로 출력하므로 모든 예외는 code 를 가진다.
"""


class AmiError(Exception):
    """툴킷 공통 예외"""
    code = "AMI_ERROR"

    def __init__(self, message: str = ""):
        super().__init__(message or self.__class__.__name__)

    def one_line(self) -> str:
        """기계 파싱용 한 줄 메시지"""
        msg = " ".join(str(self).split())
        return f"error: {self.code}: {msg}"


# ==================== optics ====================

class TotalInternalReflection(AmiError):
    code = "TOTAL_INTERNAL_REFLECTION"


class DegenerateAxis(AmiError):
    code = "DEGENERATE_AXIS"


class DegenerateGeometry(AmiError):
    code = "DEGENERATE_GEOMETRY"


class BehindCamera(AmiError):
    code = "BEHIND_CAMERA"


# ==================== events ====================

class ParseError(AmiError):
    code = "PARSE_ERROR"

    def __init__(self, message: str, line: int | None = None, offset: int | None = None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if offset is not None:
            where.append(f"offset {offset}")
        suffix = f" ({', '.join(where)})" if where else ""
        super().__init__(f"{message}{suffix}")
        self.line = line
        self.offset = offset


class ResolutionMismatch(AmiError):
    code = "RESOLUTION_MISMATCH"


class EmptyStream(AmiError):
    code = "EMPTY_STREAM"


class OutOfRange(AmiError):
    code = "OUT_OF_RANGE"


# ==================== calib ====================

class MissingTheta(AmiError):
    code = "MISSING_THETA"


class InsufficientData(AmiError):
    code = "INSUFFICIENT_DATA"


class NonConvergence(AmiError):
    code = "NON_CONVERGENCE"


class NoEdges(AmiError):
    code = "NO_EDGES"


# ==================== translate ====================

class MotionTooFast(AmiError):
    code = "MOTION_TOO_FAST"


class PrismTooFast(AmiError):
    code = "PRISM_TOO_FAST"


class TimeRangeMismatch(AmiError):
    code = "TIME_RANGE_MISMATCH"


# ==================== metrics / config ====================

class DimensionMismatch(AmiError):
    code = "DIMENSION_MISMATCH"


class ConfigError(AmiError):
    code = "CONFIG_ERROR"
