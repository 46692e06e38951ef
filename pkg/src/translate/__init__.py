"""Translate 패키지 - 합성 장면, AMI-EV 변환기, 합성 엔코더"""
from .scene import SceneSpec, Scene, EdgeGeometry, generate_scene
from .frames import FrameSequence, read_frame_directory, write_frame_directory
from .encoder import prism_angle, make_encoder_track, inject_noise_events
from .synth import (
    SynthConfig, synth_events_from_frames, synth_ami_from_events, synth_ami_from_frames_plus_events,
    displace_events,
)
