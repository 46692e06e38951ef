"""지표 리포트: 텍스트 표 + CSV + PGM 히트맵"""
import re
from pathlib import Path

import cv2
import numpy as np
import pandas as pd

from src.events.iwe import IWE
from src.utils.logger import get_logger

logger = get_logger(__name__)

FLOAT_FORMAT = "%.6f"


def _safe_name(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", name).strip("_") or "image"


def write_pgm(counts: np.ndarray, path, normalize: bool = True):
    """2차원 배열 → 8bit binary PGM (최댓값을 255 로)"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    arr = np.asarray(counts, dtype=np.float64)
    peak = float(arr.max()) if arr.size else 0.0
    if normalize and peak > 0:
        arr = arr / peak * 255.0
    img = np.clip(np.round(arr), 0, 255).astype(np.uint8)
    if not cv2.imwrite(str(path), img):
        raise OSError(f"PGM 저장 실패: {path}")


def results_table(results: dict[str, dict]) -> pd.DataFrame:
    """{행 이름: {지표: 값}} → DataFrame (행/열 순서는 입력 순서)"""
    table = pd.DataFrame.from_dict(results, orient="index")
    table.index.name = "stream"
    return table


def report(results: dict[str, dict], path, images: dict[str, IWE] | None = None,
           title: str = "AMI-EV evaluation") -> dict[str, Path]:
    """report.txt, report.csv, heatmap_<name>.pgm 작성. 생성된 경로 dict 반환"""
    out_dir = Path(path)
    out_dir.mkdir(parents=True, exist_ok=True)
    table = results_table(results)

    txt_path = out_dir / "report.txt"
    body = table.to_string(float_format=lambda v: FLOAT_FORMAT % v)
    txt_path.write_text(f"# {title}\n{body}\n", encoding="utf-8")

    csv_path = out_dir / "report.csv"
    table.to_csv(csv_path, float_format=FLOAT_FORMAT, lineterminator="\n")

    written = {"txt": txt_path, "csv": csv_path}
    for name, iwe in (images or {}).items():
        pgm_path = out_dir / f"heatmap_{_safe_name(name)}.pgm"
        write_pgm(iwe.counts, pgm_path)
        written[f"heatmap_{name}"] = pgm_path

    logger.info(f"📝 리포트 저장: {out_dir} ({len(table)}행, 히트맵 {len(images or {})}장)")
    return written
