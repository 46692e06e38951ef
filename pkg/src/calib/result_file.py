"""보정 결과 파일 (key = value) 과 비용 곡면 덤프"""
import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from src.calib.cost import CostReport  # noqa: E402
from src.optics.displacement import CompensationParams  # noqa: E402
from src.utils.config import kv_float, read_kv_file, write_kv_file  # noqa: E402
from src.utils.logger import get_logger  # noqa: E402

logger = get_logger(__name__)

RESULT_KEYS = ("r_px", "theta_b_rad", "center_x", "center_y", "k1", "cost", "window_s")


def write_calibration(path, params: CompensationParams, cost: float, window_s: float):
    write_kv_file(
        path,
        {
            "r_px": float(params.r),
            "theta_b_rad": float(params.theta_b),
            "center_x": float(params.center[0]),
            "center_y": float(params.center[1]),
            "k1": float(params.k1),
            "cost": float(cost),
            "window_s": float(window_s),
        },
        header=f"AMI calibration (theta_b = {math.degrees(params.theta_b):.4f} deg)",
    )


def read_calibration(path) -> tuple[CompensationParams, dict]:
    """(파라미터, 부가 정보{cost, window_s}) 반환"""
    values = read_kv_file(path)
    params = CompensationParams(
        r=kv_float(values, "r_px"),
        theta_b=kv_float(values, "theta_b_rad"),
        center=(kv_float(values, "center_x"), kv_float(values, "center_y")),
        k1=kv_float(values, "k1", 0.0),
    )
    extra = {
        "cost": kv_float(values, "cost", math.nan),
        "window_s": kv_float(values, "window_s", 0.0),
    }
    return params, extra


def write_cost_surface(report: CostReport, out_dir, truth: CompensationParams | None = None) -> tuple[Path, Path]:
    """비용 곡면 CSV 와 coarse 격자 히트맵 PNG"""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / "cost_surface.csv"
    report.surface.to_csv(csv_path, index=False, float_format="%.9g", lineterminator="\n")

    png_path = out_dir / "cost_surface.png"
    grid = report.coarse_grid()
    fig, ax = plt.subplots(figsize=(8, 5))
    extent = [
        math.degrees(grid.columns.min()), math.degrees(grid.columns.max()),
        grid.index.min(), grid.index.max(),
    ]
    im = ax.imshow(grid.to_numpy(), origin="lower", aspect="auto", extent=extent, cmap="viridis")
    fine = report.surface[report.surface["stage"] == "fine"]
    if len(fine):
        best = fine.loc[fine["cost"].idxmin()]
        ax.plot(math.degrees(best["theta_b_rad"]), best["r_px"], "r+", markersize=12, label="best")
    if truth is not None:
        ax.plot(math.degrees(truth.theta_b), truth.r, "wx", markersize=10, label="truth")
    ax.set_xlabel("theta_b [deg]")
    ax.set_ylabel("r [px]")
    ax.set_title(f"sharpness cost J (eta={report.eta:.3g})")
    fig.colorbar(im, ax=ax)
    ax.legend(loc="upper right")
    fig.savefig(png_path, dpi=100, metadata={"Software": None})
    plt.close(fig)
    logger.info(f"📊 비용 곡면 저장: {csv_path.name}, {png_path.name}")
    return csv_path, png_path
