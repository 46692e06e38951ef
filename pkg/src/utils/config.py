"""AMI-EV 툴킷 - 설정 관리"""
import math
import os
from pathlib import Path
from dotenv import load_dotenv

from src.utils.errors import ConfigError

# .env 파일 로드
load_dotenv()

# 프로젝트 루트 경로
PROJECT_ROOT = Path(__file__).parent.parent.parent

# 실행 설정 (CLI 플래그가 우선)
RUNTIME_CONFIG = {
    "seed": int(os.getenv("AMI_SEED", "42")),
    "threads": int(os.getenv("AMI_THREADS", "1")),
    "format": os.getenv("AMI_FORMAT", "amev"),
}

# 광학 모델 기본값
OPTICS_CONFIG = {
    "alpha_deg": 1.0,               # 웨지 경사각
    "n": 1.55,                      # 프리즘 굴절률
    "n_air": 1.0,                   # 공기 굴절률 (고정)
    "rotation_rpm": 720.0,          # 12 Hz
    "unit_tol": 1e-9,               # 단위벡터 허용 오차
    "axis_tol": 1e-6,               # 회전축 단위길이 허용 오차
}

# 합성(translator) 기본값
SYNTH_CONFIG = {
    "contrast_threshold": 0.2,      # log 강도 단위
    "refractory_us": 100,           # 픽셀별 불응기
    "log_eps": 1e-3,                # log(0) 방지용 강도 하한
    "encoder_rate_hz": 2000.0,      # 합성 엔코더 샘플링 주기
    "encoder_jitter_us": 0.0,       # 엔코더 타임스탬프 지터 (강건성 테스트용)
}

# 보정(coarse-to-fine search) 기본값
SEARCH_CONFIG = {
    "r_lo_scale": 0.5,              # r ∈ [0.5·r0, 1.5·r0]
    "r_hi_scale": 1.5,
    "r_step_px": 1.0,
    "theta_step_deg": 5.0,          # θ_b ∈ [0, 360) 5° 간격
    "r_tol_px": 0.05,               # 미세 탐색 수렴 조건
    "theta_tol_deg": 0.1,
    "max_iter": 100,
    "window_s": 2.0,                # 보정 윈도우 (약 15주기 이상)
    "min_periods": 2.0,
    "min_events": 1000,
    "max_coarse_events": 200_000,
    "binning": "bilinear",
}

# 지표 기본값
METRIC_CONFIG = {
    "kde_exact_limit": 100_000,     # 이 이하는 정확 계산, 초과는 격자 근사
    "kde_grid_max_bins": 256,
    "low_density_percentile": 10.0,
    "match_radius": 1.0,
    "ods_levels": 16,
}


# ==================== key = value 파일 ====================

def parse_kv_text(text: str, source: str = "<text>") -> dict[str, str]:
    """`key = value` 형식 텍스트 파싱 (# 주석, 빈 줄 무시)"""
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: '=' 가 없는 줄: {raw.strip()!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        if not key:
            raise ConfigError(f"{source}:{lineno}: 빈 키")
        values[key] = value.strip()
    return values


def read_kv_file(path) -> dict[str, str]:
    """key-value 설정 파일 읽기"""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"설정 파일이 없습니다: {path}")
    return parse_kv_text(path.read_text(encoding="utf-8"), source=str(path))


def format_kv_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, tuple)):
        return ",".join(format_kv_value(v) for v in value)
    return str(value)


def write_kv_file(path, values: dict, header: str | None = None):
    """key-value 파일 쓰기 (키 순서 유지, 실수는 repr 로 완전 정밀도)"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = []
    if header:
        lines.extend(f"# {h}" for h in header.splitlines())
    for key, value in values.items():
        lines.append(f"{key} = {format_kv_value(value)}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def section(values: dict[str, str], prefix: str) -> dict[str, str]:
    """`prefix.key` 항목만 골라 prefix 를 뗀 dict 반환"""
    head = prefix + "."
    return {k[len(head):]: v for k, v in values.items() if k.startswith(head)}


def kv_float(values: dict, key: str, default: float | None = None) -> float:
    if key not in values:
        if default is None:
            raise ConfigError(f"필수 설정 누락: {key}")
        return float(default)
    try:
        result = float(values[key])
    except ValueError:
        raise ConfigError(f"{key}: 실수가 아닙니다: {values[key]!r}") from None
    if not math.isfinite(result):
        raise ConfigError(f"{key}: 유한한 값이어야 합니다: {values[key]!r}")
    return result


def kv_int(values: dict, key: str, default: int | None = None) -> int:
    if key not in values:
        if default is None:
            raise ConfigError(f"필수 설정 누락: {key}")
        return int(default)
    try:
        return int(values[key])
    except ValueError:
        raise ConfigError(f"{key}: 정수가 아닙니다: {values[key]!r}") from None


def kv_str(values: dict, key: str, default: str | None = None, choices=None) -> str:
    if key not in values:
        if default is None:
            raise ConfigError(f"필수 설정 누락: {key}")
        result = default
    else:
        result = values[key]
    if choices is not None and result not in choices:
        raise ConfigError(f"{key}: {result!r} 는 {sorted(choices)} 중 하나여야 합니다")
    return result


def kv_bool(values: dict, key: str, default: bool = False) -> bool:
    if key not in values:
        return default
    raw = values[key].lower()
    if raw in ("1", "true", "yes", "on"):
        return True
    if raw in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{key}: 불리언이 아닙니다: {values[key]!r}")


def kv_float_list(values: dict, key: str, default=None) -> list[float]:
    if key not in values:
        if default is None:
            raise ConfigError(f"필수 설정 누락: {key}")
        return [float(v) for v in default]
    try:
        return [float(v) for v in values[key].split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"{key}: 실수 목록이 아닙니다: {values[key]!r}") from None
