"""파이프라인 설정 (key = value 파일 하나로 모든 단계 구성)

섹션 접두사: camera. prism. scene. synth. search. metrics. paths.
"""
import math
from dataclasses import dataclass, field
from pathlib import Path

from src.calib.search import SearchConfig
from src.optics.camera import Intrinsics
from src.optics.displacement import CompensationParams, initial_radius_px
from src.optics.prism import PrismConfig
from src.translate.scene import SceneSpec
from src.translate.synth import SynthConfig
from src.utils.config import (
    METRIC_CONFIG, SYNTH_CONFIG, kv_float, kv_int, read_kv_file, section,
)
from src.utils.errors import ConfigError
from src.utils.logger import get_logger

logger = get_logger(__name__)

SECTIONS = ("camera", "prism", "scene", "synth", "search", "metrics", "paths")
DEFAULT_HFOV_DEG = 90.0


@dataclass
class PipelineConfig:
    camera: Intrinsics
    prism: PrismConfig
    scene: SceneSpec
    synth: SynthConfig
    search: SearchConfig
    framerate: float = 1000.0
    encoder_rate_hz: float = SYNTH_CONFIG["encoder_rate_hz"]
    encoder_jitter_us: float = SYNTH_CONFIG["encoder_jitter_us"]
    noise_fraction: float = 0.0
    init_r: float = 0.0
    init_theta_b: float = 0.0
    metrics: dict = field(default_factory=lambda: dict(METRIC_CONFIG))
    paths: dict[str, Path] = field(default_factory=dict)
    source: Path | None = None

    @classmethod
    def load(cls, path=None) -> "PipelineConfig":
        """설정 파일 로드 (None 이면 전부 기본값)"""
        if path is None:
            return cls.from_values({})
        path = Path(path)
        cfg = cls.from_values(read_kv_file(path), base_dir=path.parent)
        cfg.source = path
        logger.info(f"⚙️ 설정 로드: {path}")
        return cfg

    @classmethod
    def from_values(cls, values: dict[str, str], base_dir: Path | None = None) -> "PipelineConfig":
        for key in values:
            if key.split(".", 1)[0] not in SECTIONS:
                logger.warning(f"⚠️ 알 수 없는 설정 키: {key}")

        scene = SceneSpec.from_kv(section(values, "scene"))
        cam_kv = section(values, "camera")
        cam_kv.setdefault("width", str(scene.width))
        cam_kv.setdefault("height", str(scene.height))
        if "fx" not in cam_kv:
            cam_kv.setdefault("hfov_deg", str(DEFAULT_HFOV_DEG))
        camera = Intrinsics.from_kv(cam_kv)
        if (camera.width, camera.height) != (scene.width, scene.height):
            raise ConfigError(
                f"카메라 해상도 {camera.width}x{camera.height} ≠ 장면 해상도 {scene.width}x{scene.height}"
            )
        prism = PrismConfig.from_kv(section(values, "prism"))

        synth_kv = section(values, "synth")
        r_true = kv_float(synth_kv, "r_px", initial_radius_px(prism, camera))
        params = CompensationParams(
            r=r_true,
            theta_b=math.radians(kv_float(synth_kv, "theta_b_deg", 0.0)),
            center=(camera.cx, camera.cy),
            k1=kv_float(synth_kv, "k1", 0.0),
        )
        synth = SynthConfig.from_kv(synth_kv, prism, params, camera)

        search_kv = section(values, "search")
        search = SearchConfig.from_kv(search_kv, rotation_speed=prism.rotation_speed)

        metrics = dict(METRIC_CONFIG)
        metrics_kv = section(values, "metrics")
        for key, default in METRIC_CONFIG.items():
            if key in metrics_kv:
                metrics[key] = kv_int(metrics_kv, key) if isinstance(default, int) else kv_float(metrics_kv, key)

        base_dir = base_dir or Path.cwd()
        paths = {}
        for key, raw in section(values, "paths").items():
            p = Path(raw)
            paths[key] = p if p.is_absolute() else base_dir / p

        cfg = cls(
            camera=camera,
            prism=prism,
            scene=scene,
            synth=synth,
            search=search,
            framerate=kv_float(synth_kv, "framerate", 1000.0),
            encoder_rate_hz=kv_float(synth_kv, "encoder_rate_hz", SYNTH_CONFIG["encoder_rate_hz"]),
            encoder_jitter_us=kv_float(synth_kv, "encoder_jitter_us", SYNTH_CONFIG["encoder_jitter_us"]),
            noise_fraction=kv_float(synth_kv, "noise_fraction", 0.0),
            init_r=kv_float(search_kv, "r0_px", initial_radius_px(prism, camera)),
            init_theta_b=math.radians(kv_float(search_kv, "theta_b0_deg", 0.0)),
            metrics=metrics,
            paths=paths,
        )
        cfg.validate()
        return cfg

    def validate(self):
        if self.framerate <= 0:
            raise ConfigError(f"framerate 는 양수여야 합니다: {self.framerate}")
        if not 0.0 <= self.noise_fraction <= 1.0:
            raise ConfigError(f"noise_fraction 은 [0, 1] 범위: {self.noise_fraction}")
        if self.encoder_rate_hz <= 0 or self.encoder_jitter_us < 0:
            raise ConfigError("엔코더 설정이 잘못되었습니다")
        for key, p in self.paths.items():
            if not p.exists():
                raise ConfigError(f"paths.{key} 가 가리키는 파일이 없습니다: {p}")

    def initial_params(self) -> CompensationParams:
        """보정 탐색 초기값 (r₀ = 광축 편향각, θ_b⁰ = 엔코더 영점)"""
        return CompensationParams(
            r=self.init_r, theta_b=self.init_theta_b, center=(self.camera.cx, self.camera.cy),
            k1=self.synth.params.k1,
        )

    def path(self, key: str, override=None) -> Path | None:
        """CLI 인자 우선, 없으면 paths.<key>"""
        if override is not None:
            return Path(override)
        return self.paths.get(key)
