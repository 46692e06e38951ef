"""CLI 서브커맨드 구현 (synth, translate, calibrate, compensate, eval, info)

모든 명령은 출력 디렉터리에 결정적인 파일을 쓰고, 결과 요약 dict 를 반환한다.
"""
import math
from pathlib import Path

import cv2
import numpy as np

from src.calib.compensation import compensate_stream
from src.calib.cost import default_eta, sharpness_cost
from src.calib.residual import compensation_error
from src.calib.result_file import read_calibration, write_calibration, write_cost_surface
from src.calib.search import calibrate
from src.cli.config import PipelineConfig
from src.events.io import read_encoder_csv, read_events, write_encoder_csv, write_events
from src.events.iwe import IWE, accumulate_iwe
from src.events.model import EventStream, stream_info
from src.events.sync import sync_theta
from src.metrics.density import binarized_entropy, kde_density_variance, low_density_cutoff
from src.metrics.edges import edge_map_from_geometry, ods_f
from src.metrics.report import report, write_pgm
from src.translate.encoder import inject_noise_events, make_encoder_track
from src.translate.frames import read_frame_directory
from src.translate.scene import EdgeGeometry, generate_scene
from src.translate.synth import (
    synth_ami_from_events, synth_ami_from_frames_plus_events, synth_events_from_frames,
)
from src.utils.config import write_kv_file
from src.utils.errors import ConfigError, OutOfRange
from src.utils.logger import get_logger

logger = get_logger(__name__)


def _ext(fmt: str) -> str:
    return "csv" if fmt == "csv" else "amev"


def _require(path: Path | None, what: str) -> Path:
    if path is None:
        raise ConfigError(f"{what} 경로가 필요합니다")
    if not Path(path).exists():
        raise ConfigError(f"{what} 파일이 없습니다: {path}")
    return Path(path)


def _encoder_for(stream: EventStream, cfg: PipelineConfig):
    """엔코더 로그: 스트림 시간 전체를 덮도록 생성"""
    _, t1 = stream.t_range
    return make_encoder_track(
        duration_s=max(t1, 1) / 1e6, rotation_speed=cfg.prism.rotation_speed,
        sample_rate_hz=cfg.encoder_rate_hz, jitter_us=cfg.encoder_jitter_us,
    )


def _save_stream(stream: EventStream, path: Path, fmt: str) -> int:
    """AMEV 는 정수 좌표만 담으므로 실수 좌표 스트림은 반올림 후 저장. 제거된 이벤트 수 반환"""
    dropped = 0
    if stream.subpixel and fmt == "amev":
        stream, dropped = stream.quantized()
    write_events(stream, path, fmt)
    return dropped


# ==================== synth ====================

def cmd_synth(cfg: PipelineConfig, out_dir, fmt: str = "amev") -> dict:
    """합성 장면 → AMI / S-EV 이벤트, 엔코더 로그, ground-truth"""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    seq = generate_scene(cfg.scene, cfg.framerate)

    ami = synth_events_from_frames(seq, cfg.synth, prism_on=True)
    sev = synth_events_from_frames(seq, cfg.synth, prism_on=False)
    if cfg.noise_fraction > 0:
        ami = inject_noise_events(ami, cfg.noise_fraction, rotation_speed=cfg.prism.rotation_speed)

    ext = _ext(fmt)
    ami_path = out_dir / f"ami_events.{ext}"
    sev_path = out_dir / f"sev_events.{ext}"
    write_events(ami, ami_path, fmt)
    write_events(sev, sev_path, fmt)

    encoder = make_encoder_track(
        cfg.scene.duration_s, cfg.prism.rotation_speed, cfg.encoder_rate_hz, cfg.encoder_jitter_us
    )
    encoder_path = out_dir / "encoder.csv"
    write_encoder_csv(encoder, encoder_path)

    edges_path = out_dir / "gt_edges.csv"
    seq.edges(0).write_csv(edges_path)

    params = cfg.synth.effective_params()
    truth = {
        "r_px": params.r,
        "theta_b_rad": params.theta_b,
        "center_x": params.center[0],
        "center_y": params.center[1],
        "k1": params.k1,
        "optical_model": cfg.synth.optical_model,
        "rotation_hz": cfg.prism.rotation_speed,
        "alpha_deg": math.degrees(cfg.prism.alpha),
        "n": cfg.prism.n,
        "framerate": cfg.framerate,
        "ami_events": len(ami),
        "sev_events": len(sev),
    }
    write_kv_file(out_dir / "ground_truth.txt", truth, header="synthetic scene ground truth")
    logger.info(f"✅ synth 완료: AMI {len(ami)}개, S-EV {len(sev)}개 → {out_dir}")
    return {"ami": ami_path, "sev": sev_path, "encoder": encoder_path, "edges": edges_path, **truth}


# ==================== translate ====================

def cmd_translate(cfg: PipelineConfig, out_dir, fmt: str = "amev",
                  frames_dir=None, events_path=None) -> dict:
    """프레임 / 이벤트 / 둘 다 → AMI 이벤트"""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    frames_dir = cfg.path("frames", frames_dir)
    events_path = cfg.path("events", events_path)
    if frames_dir is None and events_path is None:
        raise ConfigError("translate 에는 --frames 또는 --events 중 하나 이상이 필요합니다")

    seq = read_frame_directory(_require(frames_dir, "프레임 디렉터리")) if frames_dir else None
    source = None
    if events_path:
        source, _ = read_events(
            _require(events_path, "이벤트"), width=cfg.camera.width, height=cfg.camera.height
        )

    if seq is not None and source is not None:
        ami = synth_ami_from_frames_plus_events(seq, source, cfg.synth)
        mode = "frames+events"
    elif seq is not None:
        ami = synth_events_from_frames(seq, cfg.synth, prism_on=True)
        mode = "frames"
    else:
        ami = synth_ami_from_events(source, cfg.synth)
        mode = "events"

    ami_path = out_dir / f"ami_events.{_ext(fmt)}"
    write_events(ami, ami_path, fmt)
    encoder_path = out_dir / "encoder.csv"
    write_encoder_csv(_encoder_for(ami, cfg), encoder_path)
    logger.info(f"✅ translate ({mode}) 완료: 이벤트 {len(ami)}개 → {ami_path}")
    return {"ami": ami_path, "encoder": encoder_path, "mode": mode, "count": len(ami)}


# ==================== calibrate ====================

def _load_synced(cfg: PipelineConfig, events_path, encoder_path) -> EventStream:
    stream, _ = read_events(
        _require(cfg.path("events", events_path), "이벤트"), width=cfg.camera.width, height=cfg.camera.height
    )
    encoder = read_encoder_csv(_require(cfg.path("encoder", encoder_path), "엔코더"))
    return sync_theta(stream, encoder)


def cmd_calibrate(cfg: PipelineConfig, out_dir, events_path=None, encoder_path=None) -> dict:
    """이벤트 + 엔코더 → calibration.txt, cost_surface.csv/png"""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stream = _load_synced(cfg, events_path, encoder_path)
    params, cost = calibrate(stream, cfg.initial_params(), cfg.search)

    calib_path = out_dir / "calibration.txt"
    write_calibration(calib_path, params, cost.J, cfg.search.window_s)
    csv_path, png_path = write_cost_surface(cost, out_dir)
    return {
        "calibration": calib_path,
        "surface_csv": csv_path,
        "surface_png": png_path,
        "r_px": params.r,
        "theta_b_deg": math.degrees(params.theta_b),
        "cost": cost.J,
        "uncompensated_cost": cost.uncompensated_J,
    }


# ==================== compensate ====================

def cmd_compensate(cfg: PipelineConfig, out_dir, fmt: str = "amev", events_path=None,
                   encoder_path=None, calibration_path=None) -> dict:
    """보정 결과로 warp → 보정 이벤트 + 전/후 IWE 이미지"""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    params, extra = read_calibration(_require(cfg.path("calibration", calibration_path), "보정 결과"))
    stream = _load_synced(cfg, events_path, encoder_path)
    compensated = compensate_stream(stream, params)

    before, _ = accumulate_iwe(stream, "nearest")
    after, _ = accumulate_iwe(compensated, "nearest")
    write_pgm(before.counts, out_dir / "iwe_before.pgm")
    write_pgm(after.counts, out_dir / "iwe_after.pgm")

    out_path = out_dir / f"compensated.{_ext(fmt)}"
    dropped = _save_stream(compensated, out_path, fmt)
    if dropped:
        logger.warning(f"⚠️ 보정 후 센서 밖 이벤트 {dropped}개는 저장에서 제외했습니다")

    eta = default_eta(stream)
    j_before = sharpness_cost(before, eta)
    j_after = sharpness_cost(after, eta)
    logger.info(f"✅ compensate 완료: J {j_before:.1f} → {j_after:.1f} (η={eta:.3f})")
    return {
        "compensated": out_path,
        "count": len(compensated),
        "dropped": dropped,
        "cost_before": j_before,
        "cost_after": j_after,
        "window_s": extra["window_s"],
    }


# ==================== eval ====================

def _read_iwe_pgm(path: Path) -> IWE:
    img = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
    if img is None:
        raise ConfigError(f"PGM 을 읽을 수 없습니다: {path}")
    return IWE(img.shape[1], img.shape[0], img.astype(np.float64))


def _stream_metrics(stream: EventStream, cfg: PipelineConfig, gt_map, cutoff: float | None) -> tuple[dict, IWE]:
    iwe, _ = accumulate_iwe(stream, "nearest")
    density = kde_density_variance(stream, low_cutoff=cutoff, exact_limit=cfg.metrics["kde_exact_limit"])
    row = {
        "events": len(stream),
        "kde_variance": density.variance,
        "low_density_fraction": density.low_density_fraction,
        "entropy_bits": binarized_entropy(iwe),
    }
    if gt_map is not None:
        score = ods_f(iwe, gt_map, cfg.metrics["match_radius"])
        row.update({"ods_f": score.f1, "precision": score.precision, "recall": score.recall})
    return row, iwe


def cmd_eval(cfg: PipelineConfig, out_dir, events_paths=(), iwe_paths=(), gt_path=None,
             calibration_path=None, encoder_path=None) -> dict:
    """이벤트 / IWE → 지표 리포트. 보정 결과가 있으면 보정 스트림의 edge 잔차도 계산"""
    out_dir = Path(out_dir)
    events_paths = [Path(p) for p in events_paths] or ([cfg.paths["events"]] if "events" in cfg.paths else [])
    if not events_paths and not iwe_paths:
        raise ConfigError("eval 에는 --events 또는 --iwe 입력이 필요합니다")

    gt_path = cfg.path("gt_edges", gt_path)
    edges = EdgeGeometry.read_csv(_require(gt_path, "ground-truth edge")) if gt_path else None
    gt_map = edge_map_from_geometry(edges, cfg.camera.width, cfg.camera.height) if edges is not None else None

    streams = {}
    for p in events_paths:
        stream, _ = read_events(_require(p, "이벤트"), width=cfg.camera.width, height=cfg.camera.height)
        streams[p.stem] = stream
    # 모든 스트림에 같은 저밀도 기준을 적용 (첫 스트림 기준)
    cutoff = low_density_cutoff(next(iter(streams.values()))) if streams else None

    results, images = {}, {}
    for name, stream in streams.items():
        results[name], images[name] = _stream_metrics(stream, cfg, gt_map, cutoff)

    calibration_path = cfg.path("calibration", calibration_path)
    if calibration_path is not None and streams:
        params, _ = read_calibration(_require(calibration_path, "보정 결과"))
        encoder = read_encoder_csv(_require(cfg.path("encoder", encoder_path), "엔코더"))
        for name in list(streams):
            try:
                synced = sync_theta(streams[name], encoder)
            except OutOfRange as e:
                logger.warning(f"⚠️ {name}: θ 동기화 실패로 보정 지표 생략 ({e})")
                continue
            compensated = compensate_stream(synced, params)
            key = f"{name}_compensated"
            results[key], images[key] = _stream_metrics(compensated.quantized()[0], cfg, None, cutoff)
            if edges is not None:
                # 보정 스트림은 θ₀ 시점 변위만큼 밀린 장면
                dx, dy = params.reference_offset()
                shifted = edges.shifted(dx, dy)
                results[key]["edge_spread_px"] = compensation_error(
                    compensated, shifted, max_distance=max(3.0, 2 * params.r)
                )
                score = ods_f(images[key], edge_map_from_geometry(shifted, cfg.camera.width, cfg.camera.height),
                              cfg.metrics["match_radius"])
                results[key].update({"ods_f": score.f1, "precision": score.precision, "recall": score.recall})

    for p in iwe_paths:
        p = _require(Path(p), "IWE")
        iwe = _read_iwe_pgm(p)
        row = {"entropy_bits": binarized_entropy(iwe)}
        if gt_map is not None:
            score = ods_f(iwe, gt_map, cfg.metrics["match_radius"])
            row.update({"ods_f": score.f1, "precision": score.precision, "recall": score.recall})
        results[p.stem] = row
        images[p.stem] = iwe

    written = report(results, out_dir, images)
    return {"results": results, **written}


# ==================== info ====================

def cmd_info(events_path, out_dir=None, fmt: str | None = None,
             size: tuple[int, int] | None = None) -> dict:
    """이벤트 파일 통계. size 는 해상도 헤더가 없는 CSV 에만 적용"""
    stream, reordered = read_events(_require(Path(events_path), "이벤트"), fmt, fallback_size=size)
    info = stream_info(stream)
    info["reordered"] = reordered
    if out_dir is not None:
        write_kv_file(Path(out_dir) / "info.txt", info, header=f"stream info: {Path(events_path).name}")
    return info
