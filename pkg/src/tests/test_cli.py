import math

import pandas as pd
import pytest

from main import main
from src.cli.commands import _load_synced, cmd_compensate
from src.cli.config import PipelineConfig
from src.events.io import read_events, write_encoder_csv
from src.translate.encoder import make_encoder_track
from src.utils.config import read_kv_file
from src.utils.errors import ConfigError, ResolutionMismatch

TINY_SCENE = """\
# 테스트용 작은 정적 장면
scene.width = 64
scene.height = 64
scene.pattern = edges
scene.duration_s = 0.05
scene.seed = 7
synth.r_px = 3
synth.theta_b_deg = 40
synth.framerate = 1000
synth.refractory_us = 0
"""

PIPELINE_SCENE = """\
scene.width = 64
scene.height = 64
scene.pattern = edges
scene.duration_s = 1.0
scene.seed = 3
synth.r_px = 3
synth.theta_b_deg = 40
synth.framerate = 1000
search.r_lo_px = 1.5
search.r_hi_px = 4.5
search.r_step_px = 0.5
search.theta_step_deg = 10
search.window_s = 1.0
"""

CALIB_SCENE = """\
scene.width = 64
scene.height = 64
scene.pattern = edges
scene.duration_s = 0.5
scene.seed = 3
synth.r_px = 3
synth.theta_b_deg = 40
synth.framerate = 1000
search.r_lo_px = 2
search.r_hi_px = 4
search.r_step_px = 1
search.theta_step_deg = 30
search.window_s = 0.5
"""


@pytest.fixture
def tiny_config(tmp_path):
    path = tmp_path / "tiny.txt"
    path.write_text(TINY_SCENE, encoding="utf-8")
    return path


def _files(directory):
    return {p.name: p.read_bytes() for p in sorted(directory.iterdir()) if p.is_file()}


# ==================== 설정 ====================

def test_pipeline_config_defaults():
    cfg = PipelineConfig.load(None)
    assert (cfg.camera.width, cfg.camera.height) == (cfg.scene.width, cfg.scene.height)
    assert cfg.camera.fx == pytest.approx(cfg.scene.width / 2)
    assert cfg.prism.rotation_speed == pytest.approx(12.0)
    assert cfg.init_r == pytest.approx(cfg.synth.params.r)
    assert cfg.initial_params().center == (cfg.camera.cx, cfg.camera.cy)


def test_pipeline_config_sections(tiny_config):
    cfg = PipelineConfig.load(tiny_config)
    assert cfg.source == tiny_config
    assert cfg.synth.params.r == 3.0
    assert math.degrees(cfg.synth.params.theta_b) == pytest.approx(40.0)
    assert cfg.synth.refractory_us == 0
    assert cfg.scene.duration_s == 0.05


def test_pipeline_config_unknown_key_is_not_fatal():
    cfg = PipelineConfig.from_values({"bogus.key": "1", "metrics.match_radius": "2"})
    assert cfg.metrics["match_radius"] == 2.0


def test_pipeline_config_rejects_bad_values(tmp_path):
    with pytest.raises(ConfigError):
        PipelineConfig.from_values({"scene.width": "64", "camera.width": "32"})
    with pytest.raises(ConfigError):
        PipelineConfig.from_values({"synth.noise_fraction": "1.5"})
    with pytest.raises(ConfigError):
        PipelineConfig.from_values({"paths.events": "missing.amev"}, base_dir=tmp_path)
    with pytest.raises(ConfigError):
        PipelineConfig.load(tmp_path / "nope.txt")


def test_paths_resolve_relative_to_config(tmp_path):
    (tmp_path / "events.csv").write_text("# width=4 height=4\n", encoding="utf-8")
    cfg = PipelineConfig.from_values({"paths.events": "events.csv"}, base_dir=tmp_path)
    assert cfg.path("events") == tmp_path / "events.csv"
    assert cfg.path("events", "other.csv").name == "other.csv"
    assert cfg.path("encoder") is None


# ==================== 종료 코드 ====================

def test_main_rejects_bad_runtime_flags(tmp_path, capsys):
    assert main(["synth", "--threads", "0", "--out", str(tmp_path)]) == 2
    assert main(["synth", "--seed", "-1", "--out", str(tmp_path)]) == 2
    err = capsys.readouterr().err
    assert "error: CONFIG_ERROR: --threads must be >= 1" in err
    assert "error: CONFIG_ERROR: --seed must be an unsigned 64-bit integer" in err


def test_main_prints_one_line_error(tmp_path, capsys):
    code = main(["info", str(tmp_path / "missing.amev"), "--out", str(tmp_path)])
    assert code == 2
    lines = [line for line in capsys.readouterr().err.splitlines() if line.startswith("error: ")]
    assert len(lines) == 1
    assert lines[0].startswith("error: CONFIG_ERROR: ")


def test_calibrate_without_inputs_fails_cleanly(tmp_path, capsys):
    assert main(["calibrate", "--out", str(tmp_path)]) == 2
    assert "error: CONFIG_ERROR:" in capsys.readouterr().err


# ==================== synth / info ====================

@pytest.fixture
def headerless_csv(tmp_path):
    """해상도 헤더 없는 이벤트 CSV"""
    path = tmp_path / "plain.csv"
    path.write_text("100,1,2,1\n200,3,4,-1\n300,60,63,1\n", encoding="utf-8")
    return path


def test_info_accepts_headerless_csv(headerless_csv, tmp_path, capsys):
    """헤더가 없으면 카메라 해상도 (기본 64x64) 또는 --width/--height 를 쓴다"""
    assert main(["info", str(headerless_csv), "--out", str(tmp_path)]) == 0
    printed = capsys.readouterr().out
    assert "count = 3" in printed
    assert "width = 64" in printed

    assert main(["info", str(headerless_csv), "--out", str(tmp_path), "--width", "100", "--height", "80"]) == 0
    assert "width = 100" in capsys.readouterr().out
    # 좌표가 해상도를 벗어나면 실패
    assert main(["info", str(headerless_csv), "--out", str(tmp_path), "--width", "10", "--height", "10"]) == 2


def test_calibration_inputs_accept_headerless_csv(headerless_csv, tmp_path):
    encoder = tmp_path / "encoder.csv"
    write_encoder_csv(make_encoder_track(0.001, 12.0, sample_rate_hz=10_000.0, jitter_us=0.0), encoder)
    cfg = PipelineConfig.from_values({"scene.width": "64", "scene.height": "64"})
    stream = _load_synced(cfg, headerless_csv, encoder)
    assert (stream.width, stream.height) == (64, 64)
    assert len(stream) == 3
    assert stream.has_theta

    narrow = PipelineConfig.from_values({"scene.width": "32", "scene.height": "32"})
    with pytest.raises(ResolutionMismatch):
        _load_synced(narrow, headerless_csv, encoder)



def test_synth_writes_outputs(tiny_config, tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["synth", "--config", str(tiny_config), "--out", str(out), "--format", "csv"]) == 0
    for name in ("ami_events.csv", "sev_events.csv", "encoder.csv", "gt_edges.csv", "ground_truth.txt"):
        assert (out / name).exists(), name

    truth = read_kv_file(out / "ground_truth.txt")
    assert float(truth["r_px"]) == 3.0
    assert float(truth["theta_b_rad"]) == pytest.approx(math.radians(40.0))
    ami, _ = read_events(out / "ami_events.csv")
    sev, _ = read_events(out / "sev_events.csv")
    assert int(truth["ami_events"]) == len(ami) > 0
    # 정적 장면: 프리즘이 없으면 이벤트도 없다
    assert int(truth["sev_events"]) == len(sev) == 0

    assert main(["info", str(out / "ami_events.csv"), "--out", str(out)]) == 0
    printed = capsys.readouterr().out
    assert f"count = {len(ami)}" in printed
    assert "reordered = 0" in printed
    assert (out / "info.txt").exists()


def test_outputs_identical_across_thread_counts(tiny_config, tmp_path):
    """같은 seed 면 스레드 수와 무관하게 바이트 단위로 같은 결과"""
    one, many = tmp_path / "t1", tmp_path / "t4"
    assert main(["synth", "--config", str(tiny_config), "--out", str(one), "--threads", "1"]) == 0
    assert main(["synth", "--config", str(tiny_config), "--out", str(many), "--threads", "4"]) == 0
    assert _files(one) == _files(many)

    for out in (one, many):
        assert main([
            "eval", "--config", str(tiny_config), "--out", str(out / "eval"),
            "--events", str(out / "ami_events.amev"), "--gt", str(out / "gt_edges.csv"),
            "--threads", "1" if out is one else "4",
        ]) == 0
    assert _files(one / "eval") == _files(many / "eval")


def test_calibrate_identical_across_thread_counts(tmp_path):
    config = tmp_path / "calib.txt"
    config.write_text(CALIB_SCENE, encoding="utf-8")
    src_dir = tmp_path / "synth"
    assert main(["synth", "--config", str(config), "--out", str(src_dir)]) == 0
    events, encoder = src_dir / "ami_events.amev", src_dir / "encoder.csv"

    one, many = tmp_path / "c1", tmp_path / "c4"
    for out, threads in ((one, "1"), (many, "4")):
        assert main([
            "calibrate", "--config", str(config), "--out", str(out), "--threads", threads,
            "--events", str(events), "--encoder", str(encoder),
        ]) == 0
    for name in ("calibration.txt", "cost_surface.csv"):
        assert (one / name).read_bytes() == (many / name).read_bytes()


def test_translate_from_events(tiny_config, tmp_path):
    out = tmp_path / "out"
    assert main(["synth", "--config", str(tiny_config), "--out", str(out)]) == 0
    assert main([
        "translate", "--config", str(tiny_config), "--out", str(tmp_path / "tr"),
        "--events", str(out / "ami_events.amev"),
    ]) == 0
    translated, _ = read_events(tmp_path / "tr" / "ami_events.amev")
    assert len(translated) > 0
    assert (tmp_path / "tr" / "encoder.csv").exists()


# ==================== 전체 파이프라인 ====================

@pytest.mark.slow
def test_full_pipeline_sharpens_events(tmp_path):
    config = tmp_path / "pipeline.txt"
    config.write_text(PIPELINE_SCENE, encoding="utf-8")
    out = tmp_path / "out"
    common = ["--config", str(config), "--out", str(out), "--threads", "4"]

    assert main(["synth", *common]) == 0
    events, encoder = out / "ami_events.amev", out / "encoder.csv"
    assert main(["calibrate", *common, "--events", str(events), "--encoder", str(encoder)]) == 0
    calibration = out / "calibration.txt"
    assert (out / "cost_surface.csv").exists()
    assert (out / "cost_surface.png").exists()
    calib = read_kv_file(calibration)
    assert float(calib["r_px"]) == pytest.approx(3.0, abs=0.5)
    diff = (float(calib["theta_b_rad"]) - math.radians(40.0) + math.pi) % (2 * math.pi) - math.pi
    assert abs(math.degrees(diff)) <= 5.0

    result = cmd_compensate(PipelineConfig.load(config), out, "amev", events, encoder, calibration)
    assert result["cost_after"] < result["cost_before"]
    assert (out / "iwe_before.pgm").exists()
    assert (out / "iwe_after.pgm").exists()

    assert main(["eval", *common, "--events", str(events), "--gt", str(out / "gt_edges.csv"),
                 "--calibration", str(calibration), "--encoder", str(encoder)]) == 0
    table = pd.read_csv(out / "report.csv", index_col="stream")
    assert table.loc["ami_events_compensated", "edge_spread_px"] <= 2.0
