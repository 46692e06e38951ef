"""Events 패키지 - 이벤트 스트림 모델, 입출력, 엔코더 동기화, IWE"""
from .model import Event, EventStream, quarter_period_windows, deduplicate_refractory, stream_info
from .sync import EncoderTrack, sync_theta, interpolate_theta
from .io import read_events, write_events, read_encoder_csv, write_encoder_csv
from .iwe import IWE, accumulate_iwe, accumulate_positions
