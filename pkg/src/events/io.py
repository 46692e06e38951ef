"""이벤트 / 엔코더 파일 입출력

- CSV: `t_us,x,y,polarity` (polarity ∈ {1,-1}), `#` 헤더 줄 허용. `# width=W height=H` 로 해상도 기록.
- AMEV: little-endian, 헤더 `AMEV` + u32 version(1) + u16 width + u16 height + u64 count,
  이어서 13바이트 레코드 (u64 t_us, u16 x, u16 y, u8 polarity 0/1).
- 엔코더 CSV: `t_us,theta_rad`.
"""
import re
import struct
from pathlib import Path

import numpy as np
import pandas as pd

from src.events.model import EventStream
from src.events.sync import EncoderTrack
from src.utils.errors import ConfigError, EmptyStream, ParseError, ResolutionMismatch
from src.utils.logger import get_logger

logger = get_logger(__name__)

AMEV_MAGIC = b"AMEV"
AMEV_VERSION = 1
AMEV_HEADER = struct.Struct("<4sIHHQ")
AMEV_RECORD = np.dtype([("t", "<u8"), ("x", "<u2"), ("y", "<u2"), ("p", "u1")])

FORMATS = ("csv", "amev")
_RES_PATTERN = re.compile(r"width\s*=\s*(\d+).*?height\s*=\s*(\d+)")


def detect_format(path) -> str:
    suffix = Path(path).suffix.lower()
    if suffix == ".csv":
        return "csv"
    if suffix in (".amev", ".bin"):
        return "amev"
    with open(path, "rb") as f:
        return "amev" if f.read(4) == AMEV_MAGIC else "csv"


def _check_resolution(found: tuple[int, int] | None, width: int | None, height: int | None,
                      path, fallback_size: tuple[int, int] | None = None) -> tuple[int, int]:
    if found is None:
        if (width is None or height is None) and fallback_size is not None:
            return fallback_size
        if width is None or height is None:
            raise ParseError(f"{path}: 해상도 헤더가 없어 width/height 지정이 필요합니다", line=1)
        return width, height
    if width is not None and height is not None and (width, height) != found:
        raise ResolutionMismatch(
            f"{path}: 파일 해상도 {found[0]}x{found[1]} ≠ 요청 해상도 {width}x{height}"
        )
    return found


# ==================== CSV ====================

def _locate_bad_csv_line(path) -> tuple[int, str]:
    with open(path, encoding="utf-8") as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split(",")
            if len(parts) != 4:
                return lineno, f"필드 수가 4 가 아닙니다: {line!r}"
            try:
                t, x, y, p = (float(v) for v in parts)
            except ValueError:
                return lineno, f"숫자가 아닌 값: {line!r}"
            if t < 0 or t != int(t):
                return lineno, f"잘못된 타임스탬프: {parts[0]!r}"
            if p not in (1.0, -1.0):
                return lineno, f"polarity 는 1 또는 -1 이어야 합니다: {parts[3]!r}"
    return 0, "알 수 없는 형식 오류"


def _read_csv(path, width, height, fallback_size=None) -> tuple[EventStream, int]:
    found = None
    with open(path, encoding="utf-8") as f:
        for raw in f:
            if not raw.startswith("#"):
                break
            m = _RES_PATTERN.search(raw)
            if m:
                found = (int(m.group(1)), int(m.group(2)))
    width, height = _check_resolution(found, width, height, path, fallback_size)

    try:
        df = pd.read_csv(
            path, comment="#", header=None, names=["t_us", "x", "y", "polarity"],
            skip_blank_lines=True, dtype=str, skipinitialspace=True,
        )
    except pd.errors.EmptyDataError:
        df = pd.DataFrame(columns=["t_us", "x", "y", "polarity"])
    except pd.errors.ParserError:
        line, reason = _locate_bad_csv_line(path)
        raise ParseError(f"{path}: {reason}", line=line) from None

    numeric = df.apply(pd.to_numeric, errors="coerce")
    t = numeric["t_us"].to_numpy(dtype=np.float64)
    p = numeric["polarity"].to_numpy(dtype=np.float64)
    bad = numeric.isna().any(axis=1).to_numpy() | (t < 0) | (t != np.floor(t)) | ~np.isin(p, (1.0, -1.0))
    if bad.any():
        line, reason = _locate_bad_csv_line(path)
        raise ParseError(f"{path}: {reason}", line=line)

    t_int = numeric["t_us"].astype(np.int64).to_numpy()
    x = numeric["x"].to_numpy(dtype=np.float64)
    y = numeric["y"].to_numpy(dtype=np.float64)
    subpixel = bool(np.any(x != np.floor(x)) or np.any(y != np.floor(y)))
    if not subpixel and len(x) and (x.min() < 0 or y.min() < 0 or x.max() >= width or y.max() >= height):
        raise ResolutionMismatch(f"{path}: 좌표가 해상도 {width}x{height} 를 벗어납니다")
    return EventStream.from_arrays(width, height, t_int, x, y, p.astype(np.int8), subpixel=subpixel)


def _write_csv(stream: EventStream, path: Path):
    df = pd.DataFrame({
        "t_us": stream.t,
        "x": stream.x if stream.subpixel else stream.x.astype(np.int64),
        "y": stream.y if stream.subpixel else stream.y.astype(np.int64),
        "polarity": stream.p.astype(np.int64),
    })
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(f"# width={stream.width} height={stream.height}\n")
        f.write("# t_us,x,y,polarity\n")
        df.to_csv(f, index=False, header=False, lineterminator="\n")


# ==================== AMEV ====================

def _read_amev(path, width, height, fallback_size=None) -> tuple[EventStream, int]:
    data = Path(path).read_bytes()
    if len(data) < AMEV_HEADER.size:
        raise ParseError(f"{path}: AMEV 헤더가 잘렸습니다 ({len(data)} bytes)", offset=len(data))
    magic, version, w, h, count = AMEV_HEADER.unpack_from(data, 0)
    if magic != AMEV_MAGIC:
        raise ParseError(f"{path}: AMEV 매직 바이트가 아닙니다: {magic!r}", offset=0)
    if version != AMEV_VERSION:
        raise ParseError(f"{path}: 지원하지 않는 AMEV 버전 {version}", offset=4)
    width, height = _check_resolution((w, h), width, height, path)
    expected = AMEV_HEADER.size + count * AMEV_RECORD.itemsize
    if len(data) != expected:
        raise ParseError(
            f"{path}: 파일 크기 {len(data)} ≠ 헤더 기준 {expected} (이벤트 {count}개)",
            offset=min(len(data), expected),
        )
    rec = np.frombuffer(data, dtype=AMEV_RECORD, count=count, offset=AMEV_HEADER.size)
    bad_p = np.flatnonzero(rec["p"] > 1)
    if len(bad_p):
        i = int(bad_p[0])
        raise ParseError(
            f"{path}: polarity 바이트가 0/1 이 아닙니다: {rec['p'][i]}",
            offset=AMEV_HEADER.size + i * AMEV_RECORD.itemsize + 12,
        )
    if count and rec["t"].max() >= 2**63:
        raise ParseError(f"{path}: 타임스탬프가 int64 범위를 넘습니다", offset=AMEV_HEADER.size)
    x = rec["x"].astype(np.float64)
    y = rec["y"].astype(np.float64)
    if count and (x.max() >= width or y.max() >= height):
        raise ResolutionMismatch(f"{path}: 좌표가 해상도 {width}x{height} 를 벗어납니다")
    p = np.where(rec["p"] == 1, 1, -1).astype(np.int8)
    return EventStream.from_arrays(width, height, rec["t"].astype(np.int64), x, y, p)


def _write_amev(stream: EventStream, path: Path):
    if stream.subpixel:
        raise ConfigError("AMEV 형식은 정수 좌표만 저장합니다. quantized() 로 먼저 반올림하세요")
    rec = np.empty(len(stream), dtype=AMEV_RECORD)
    rec["t"] = stream.t.astype(np.uint64)
    rec["x"] = stream.x.astype(np.uint16)
    rec["y"] = stream.y.astype(np.uint16)
    rec["p"] = (stream.p > 0).astype(np.uint8)
    with open(path, "wb") as f:
        f.write(AMEV_HEADER.pack(AMEV_MAGIC, AMEV_VERSION, stream.width, stream.height, len(stream)))
        f.write(rec.tobytes())


# ==================== 공개 API ====================

def read_events(path, fmt: str | None = None, width: int | None = None, height: int | None = None,
                fallback_size: tuple[int, int] | None = None) -> tuple[EventStream, int]:
    """이벤트 파일 읽기. (정렬된 스트림, 재정렬된 이벤트 수) 반환

    width/height 는 파일 해상도와 달라선 안 되고, fallback_size 는 해상도 헤더가 없는 CSV 에만 쓰인다.
    """
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"이벤트 파일이 없습니다: {path}")
    if path.stat().st_size == 0:
        raise EmptyStream(f"{path}: 빈 파일")
    fmt = fmt or detect_format(path)
    if fmt not in FORMATS:
        raise ConfigError(f"지원하지 않는 형식: {fmt} ({'/'.join(FORMATS)})")

    stream, reordered = (_read_csv if fmt == "csv" else _read_amev)(path, width, height, fallback_size)
    if reordered:
        logger.warning(f"⚠️ {path.name}: 순서가 어긋난 이벤트 {reordered}개를 재정렬했습니다")
    logger.debug(f"📥 {path.name}: 이벤트 {len(stream)}개 ({fmt}, {stream.width}x{stream.height})")
    return stream, reordered


def write_events(stream: EventStream, path, fmt: str | None = None):
    """이벤트 파일 쓰기 (theta 는 저장하지 않음)"""
    path = Path(path)
    fmt = fmt or ("csv" if path.suffix.lower() == ".csv" else "amev")
    if fmt not in FORMATS:
        raise ConfigError(f"지원하지 않는 형식: {fmt} ({'/'.join(FORMATS)})")
    path.parent.mkdir(parents=True, exist_ok=True)
    (_write_csv if fmt == "csv" else _write_amev)(stream, path)
    logger.debug(f"💾 {path.name}: 이벤트 {len(stream)}개 저장 ({fmt})")


def _locate_bad_encoder_line(path) -> int:
    with open(path, encoding="utf-8") as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split(",")
            if len(parts) != 2:
                return lineno
            try:
                float(parts[0])
                float(parts[1])
            except ValueError:
                return lineno
    return 0


def read_encoder_csv(path) -> EncoderTrack:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"엔코더 파일이 없습니다: {path}")
    try:
        df = pd.read_csv(path, comment="#", header=None, names=["t_us", "theta_rad"], dtype=str)
    except pd.errors.EmptyDataError:
        raise EmptyStream(f"{path}: 엔코더 샘플이 없습니다") from None
    except pd.errors.ParserError:
        raise ParseError(f"{path}: 엔코더 필드 수가 2 가 아닙니다", line=_locate_bad_encoder_line(path)) from None
    numeric = df.apply(pd.to_numeric, errors="coerce")
    if numeric.isna().any(axis=None):
        raise ParseError(f"{path}: 숫자가 아닌 엔코더 샘플", line=_locate_bad_encoder_line(path))
    return EncoderTrack(
        t=numeric["t_us"].to_numpy(dtype=np.float64).round().astype(np.int64),
        theta=numeric["theta_rad"].to_numpy(dtype=np.float64),
    )


def write_encoder_csv(track: EncoderTrack, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("# t_us,theta_rad\n")
        pd.DataFrame({"t_us": track.t, "theta_rad": track.theta}).to_csv(
            f, index=False, header=False, lineterminator="\n"
        )
