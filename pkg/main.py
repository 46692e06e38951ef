#!/usr/bin/env python3
"""
AMI-EV 툴킷 (회전 웨지 프리즘 이벤트 카메라)
===========================================

서브커맨드: synth, translate, calibrate, compensate, eval, info
"""
import argparse
import sys

from src.utils.config import RUNTIME_CONFIG
from src.utils.errors import AmiError
from src.utils.logger import get_logger
from src.utils.state import state

logger = get_logger("main")

EXIT_AMI_ERROR = 2
EXIT_UNEXPECTED = 1


def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=str, default=None, help="key = value 설정 파일")
    common.add_argument("--out", type=str, default="out", help="출력 디렉터리 (기본: out)")
    common.add_argument("--seed", type=int, default=RUNTIME_CONFIG["seed"], help="난수 seed (기본: 42)")
    common.add_argument("--threads", type=int, default=RUNTIME_CONFIG["threads"], help="작업 스레드 수")
    common.add_argument("--format", choices=["csv", "amev"], default=RUNTIME_CONFIG["format"],
                        help="이벤트 파일 형식 (기본: amev)")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common_parser()
    parser = argparse.ArgumentParser(description="AMI-EV 툴킷")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("synth", parents=[common], help="합성 장면 → AMI / S-EV 이벤트")

    p = sub.add_parser("translate", parents=[common], help="프레임/이벤트 → AMI 이벤트")
    p.add_argument("--frames", type=str, default=None, help="PGM 프레임 디렉터리")
    p.add_argument("--events", type=str, default=None, help="S-EV 이벤트 파일")

    p = sub.add_parser("calibrate", parents=[common], help="(r, θ_b) 보정")
    p.add_argument("--events", type=str, default=None)
    p.add_argument("--encoder", type=str, default=None)

    p = sub.add_parser("compensate", parents=[common], help="보정 결과로 이벤트 warp")
    p.add_argument("--events", type=str, default=None)
    p.add_argument("--encoder", type=str, default=None)
    p.add_argument("--calibration", type=str, default=None)

    p = sub.add_parser("eval", parents=[common], help="지표 리포트")
    p.add_argument("--events", type=str, nargs="*", default=[])
    p.add_argument("--iwe", type=str, nargs="*", default=[], help="IWE PGM 이미지")
    p.add_argument("--gt", type=str, default=None, help="ground-truth edge CSV")
    p.add_argument("--calibration", type=str, default=None)
    p.add_argument("--encoder", type=str, default=None)

    p = sub.add_parser("info", parents=[common], help="이벤트 파일 통계")
    p.add_argument("events", type=str)
    p.add_argument("--width", type=int, default=None, help="헤더 없는 CSV 의 해상도 (기본: 설정의 카메라)")
    p.add_argument("--height", type=int, default=None)
    return parser


def run(args: argparse.Namespace) -> dict:
    # 무거운 모듈은 인자 파싱 후에 로드
    from src.cli.commands import (
        cmd_calibrate, cmd_compensate, cmd_eval, cmd_info, cmd_synth, cmd_translate,
    )
    from src.cli.config import PipelineConfig

    state.set_seed(args.seed)
    state.set_threads(args.threads)

    cfg = PipelineConfig.load(args.config)
    if args.command == "info":
        size = (cfg.camera.width, cfg.camera.height)
        if args.width is not None and args.height is not None:
            size = (args.width, args.height)
        info = cmd_info(args.events, args.out, size=size)
        for key, value in info.items():
            print(f"{key} = {value}")
        return info

    if args.command == "synth":
        return cmd_synth(cfg, args.out, args.format)
    if args.command == "translate":
        return cmd_translate(cfg, args.out, args.format, args.frames, args.events)
    if args.command == "calibrate":
        result = cmd_calibrate(cfg, args.out, args.events, args.encoder)
        print(f"r_px = {result['r_px']:.6f}")
        print(f"theta_b_deg = {result['theta_b_deg']:.6f}")
        return result
    if args.command == "compensate":
        return cmd_compensate(cfg, args.out, args.format, args.events, args.encoder, args.calibration)
    if args.command == "eval":
        return cmd_eval(cfg, args.out, args.events, args.iwe, args.gt, args.calibration, args.encoder)
    raise ValueError(f"알 수 없는 명령: {args.command}")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.seed < 0 or args.seed >= 2**64:
        print("error: CONFIG_ERROR: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return EXIT_AMI_ERROR
    if args.threads < 1:
        print("error: CONFIG_ERROR: --threads must be >= 1", file=sys.stderr)
        return EXIT_AMI_ERROR

    try:
        run(args)
    except AmiError as e:
        logger.error(f"❌ {args.command} 실패: {e}")
        print(e.one_line(), file=sys.stderr)
        return EXIT_AMI_ERROR
    except Exception as e:
        logger.exception(f"❌ {args.command} 예기치 않은 오류: {e}")
        print(f"error: INTERNAL: {' '.join(str(e).split())}", file=sys.stderr)
        return EXIT_UNEXPECTED
    return 0


if __name__ == "__main__":
    sys.exit(main())
