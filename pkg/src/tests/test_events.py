import math

import numpy as np
import pytest

from src.events.io import (
    AMEV_HEADER, read_encoder_csv, read_events, write_encoder_csv, write_events,
)
from src.events.iwe import accumulate_iwe, accumulate_positions
from src.events.model import (
    EventStream, deduplicate_refractory, quarter_period_windows, stream_info,
)
from src.events.sync import EncoderTrack, interpolate_theta, sync_theta
from src.translate.encoder import make_encoder_track
from src.utils.errors import (
    ConfigError, EmptyStream, MissingTheta, OutOfRange, ParseError, ResolutionMismatch,
)


# ==================== 스트림 모델 ====================

def test_from_arrays_sorts_by_time_then_row(make_stream):
    stream, moved = EventStream.from_arrays(
        16, 16, t=[5, 1, 1, 1], x=[0, 3, 1, 2], y=[0, 2, 2, 1], p=[1, -1, 1, 1]
    )
    assert moved > 0
    assert stream.t.tolist() == [1, 1, 1, 5]
    # 같은 시각이면 y, x 순
    assert list(zip(stream.y.tolist(), stream.x.tolist()))[:3] == [(1.0, 2.0), (2.0, 1.0), (2.0, 3.0)]


def test_stream_rejects_unsorted_and_out_of_range():
    with pytest.raises(ValueError):
        EventStream(16, 16, [2, 1], [0, 0], [0, 0], [1, 1])
    with pytest.raises(ResolutionMismatch):
        EventStream(16, 16, [1], [16], [0], [1])
    with pytest.raises(ValueError):
        EventStream(16, 16, [1], [0], [0], [0])


def test_stream_is_immutable(make_stream):
    stream = make_stream([0, 1], [0, 1], [0, 1], [1, -1])
    with pytest.raises(ValueError):
        stream.t[0] = 9


def test_slice_is_half_open(make_stream):
    stream = make_stream([0, 10, 20, 30], [0, 1, 2, 3], [0, 0, 0, 0], [1, 1, 1, 1])
    part = stream.slice(10, 30)
    assert part.t.tolist() == [10, 20]


def test_slice_by_theta_wraps(make_stream):
    theta = [0.1, 1.0, 3.0, 6.2]
    stream = make_stream([0, 1, 2, 3], [0, 0, 0, 0], [0, 1, 2, 3], [1, 1, 1, 1], theta=theta)
    part = stream.slice_by_theta(6.0, 6.0 + 0.5)
    assert part.t.tolist() == [0, 3]
    with pytest.raises(MissingTheta):
        stream.without_theta().slice_by_theta(0, 1)


def test_quarter_period_windows(make_stream):
    t = np.arange(0, 100_001, 1000)
    stream = make_stream(t, np.zeros(len(t)), np.zeros(len(t)), np.ones(len(t)))
    windows = quarter_period_windows(stream, 12.0)
    # 1/4 주기 = 20833.3µs → 100ms 에 완전한 창 4개
    assert len(windows) == 4
    assert windows[0][:2] == (0, 20833)
    assert windows[1][:2] == (20833, 41667)
    assert sum(len(w[2]) for w in windows) == len(stream.slice(0, windows[-1][1]))


def test_deduplicate_refractory_keeps_last_kept_spacing(make_stream):
    stream = make_stream([0, 50, 120, 160, 10], [1, 1, 1, 1, 2], [1, 1, 1, 1, 2], [1, 1, -1, 1, 1])
    deduped, removed = deduplicate_refractory(stream, 100)
    assert removed == 2
    assert deduped.t.tolist() == [0, 10, 120]


def test_deduplicate_refractory_long_single_pixel_run(make_stream):
    """한 픽셀에 3µs 간격 이벤트 3000개, 불응기 10µs: 12µs 마다 하나씩 남는다"""
    t = np.arange(3000) * 3
    stream = make_stream(t, np.full(len(t), 4), np.full(len(t), 5), np.ones(len(t)))
    deduped, removed = deduplicate_refractory(stream, 10)
    assert len(deduped) == 750
    assert removed == 2250
    np.testing.assert_array_equal(deduped.t, np.arange(750) * 12)


def test_deduplicate_refractory_pixels_are_independent(make_stream):
    t = np.arange(40) * 3
    x = np.tile([1, 2], 20)
    stream = make_stream(t, x, np.zeros(len(t)), np.ones(len(t)))
    deduped, _ = deduplicate_refractory(stream, 10)
    # 픽셀마다 6µs 간격 → 12µs 마다 하나씩
    assert deduped.t[deduped.x == 1].tolist() == list(range(0, 120, 12))
    assert deduped.t[deduped.x == 2].tolist() == list(range(3, 120, 12))


def test_stream_info(make_stream):
    stream = make_stream([0, 500_000, 1_000_000], [0, 1, 2], [0, 0, 0], [1, -1, 1])
    info = stream_info(stream)
    assert info["count"] == 3
    assert info["duration_s"] == pytest.approx(1.0)
    assert info["rate_eps"] == pytest.approx(3.0)
    assert (info["positive"], info["negative"]) == (2, 1)
    assert info["has_theta"] is False


def test_quantized_drops_outside(make_stream):
    stream = make_stream([0, 1, 2], [0, 1, 2], [0, 0, 0], [1, 1, 1])
    moved = stream.with_positions(np.array([-0.6, 1.4, 15.6]), np.array([0.2, 0.4, 0.0]))
    assert moved.subpixel
    q, dropped = moved.quantized()
    assert dropped == 2
    assert (q.x.tolist(), q.y.tolist()) == ([1.0], [0.0])


# ==================== 파일 입출력 ====================

@pytest.fixture
def sample_stream(make_stream):
    rng = np.random.default_rng(3)
    n = 500
    return make_stream(
        np.sort(rng.integers(0, 10**7, n)), rng.integers(0, 16, n), rng.integers(0, 16, n),
        rng.choice([-1, 1], n),
    )


@pytest.mark.parametrize("fmt", ["csv", "amev"])
def test_event_file_round_trip_is_lossless(tmp_path, sample_stream, fmt):
    path = tmp_path / f"events.{fmt}"
    write_events(sample_stream, path, fmt)
    loaded, reordered = read_events(path)
    assert reordered == 0
    assert (loaded.width, loaded.height) == (16, 16)
    np.testing.assert_array_equal(loaded.t, sample_stream.t)
    np.testing.assert_array_equal(loaded.x, sample_stream.x)
    np.testing.assert_array_equal(loaded.p, sample_stream.p)

    again = tmp_path / f"again.{fmt}"
    write_events(loaded, again, fmt)
    assert again.read_bytes() == path.read_bytes()


def test_amev_layout(tmp_path, make_stream):
    stream = make_stream([7], [3], [4], [-1], width=32, height=8)
    path = tmp_path / "one.amev"
    write_events(stream, path)
    data = path.read_bytes()
    assert len(data) == AMEV_HEADER.size + 13
    assert AMEV_HEADER.unpack_from(data, 0) == (b"AMEV", 1, 32, 8, 1)
    assert data[-1] == 0  # polarity -1 → 0


def test_amev_rejects_subpixel(tmp_path, make_stream):
    stream = make_stream([0], [1], [1], [1]).with_positions(np.array([1.25]), np.array([1.0]))
    with pytest.raises(ConfigError):
        write_events(stream, tmp_path / "x.amev", "amev")


def test_amev_bad_magic_and_polarity(tmp_path, make_stream):
    path = tmp_path / "bad.amev"
    path.write_bytes(b"NOPE" + b"\x00" * 16)
    with pytest.raises(ParseError) as exc:
        read_events(path, "amev")
    assert exc.value.offset == 0

    write_events(make_stream([0, 1], [0, 1], [0, 1], [1, 1]), path, "amev")
    data = bytearray(path.read_bytes())
    data[AMEV_HEADER.size + 13 + 12] = 2
    path.write_bytes(bytes(data))
    with pytest.raises(ParseError) as exc:
        read_events(path, "amev")
    assert exc.value.offset == AMEV_HEADER.size + 13 + 12


def test_amev_truncated(tmp_path, sample_stream):
    path = tmp_path / "cut.amev"
    write_events(sample_stream, path, "amev")
    path.write_bytes(path.read_bytes()[:-5])
    with pytest.raises(ParseError):
        read_events(path)


def test_csv_bad_line_reports_line_number(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("# width=8 height=8\n# t_us,x,y,polarity\n0,1,1,1\n5,2,2,0\n", encoding="utf-8")
    with pytest.raises(ParseError) as exc:
        read_events(path)
    assert exc.value.line == 4
    assert "error: PARSE_ERROR:" in exc.value.one_line()


def test_csv_without_resolution_needs_size(tmp_path):
    path = tmp_path / "plain.csv"
    path.write_text("0,1,1,1\n", encoding="utf-8")
    with pytest.raises(ParseError):
        read_events(path)
    stream, _ = read_events(path, width=4, height=4)
    assert len(stream) == 1
    with pytest.raises(ResolutionMismatch):
        read_events(path, width=1, height=1)


def test_csv_reorders_and_reports(tmp_path):
    path = tmp_path / "shuffled.csv"
    path.write_text("# width=8 height=8\n9,1,1,1\n3,2,2,-1\n", encoding="utf-8")
    stream, reordered = read_events(path)
    assert reordered == 2
    assert stream.t.tolist() == [3, 9]


def test_empty_inputs(tmp_path):
    empty = tmp_path / "empty.csv"
    empty.write_bytes(b"")
    with pytest.raises(EmptyStream):
        read_events(empty)

    header_only = tmp_path / "header.csv"
    header_only.write_text("# width=8 height=8\n", encoding="utf-8")
    stream, _ = read_events(header_only)
    assert len(stream) == 0

    with pytest.raises(ConfigError):
        read_events(tmp_path / "missing.amev")


def test_encoder_csv_round_trip_and_errors(tmp_path):
    track = make_encoder_track(0.05, 12.0, sample_rate_hz=1000.0)
    path = tmp_path / "encoder.csv"
    write_encoder_csv(track, path)
    loaded = read_encoder_csv(path)
    np.testing.assert_array_equal(loaded.t, track.t)
    np.testing.assert_allclose(loaded.theta, track.theta, rtol=0, atol=1e-12)

    path.write_text("# t_us,theta_rad\n0,0.0\n10,abc\n", encoding="utf-8")
    with pytest.raises(ParseError) as exc:
        read_encoder_csv(path)
    assert exc.value.line == 3


# ==================== 엔코더 동기화 ====================

def test_sync_quarter_turn_at_12hz():
    """12 Hz 에서 θ̃=0 이후 1/48 s 인 이벤트는 90°"""
    track = make_encoder_track(0.1, 12.0, sample_rate_hz=1000.0)
    theta = interpolate_theta(track, np.array([0, 20833, 41667]))
    assert theta[0] == 0.0
    assert theta[1] == pytest.approx(math.pi / 2, abs=1e-4)
    assert theta[2] == pytest.approx(math.pi, abs=1e-4)


def test_sync_exact_at_samples_and_wraps():
    track = EncoderTrack(t=np.array([0, 100, 200]), theta=np.array([6.0, 0.2, 0.7]))
    theta = interpolate_theta(track, np.array([0, 50, 90, 100, 200]))
    assert theta[0] == 6.0
    assert theta[3] == 0.2
    assert theta[4] == 0.7
    step = 0.2 + 2 * math.pi - 6.0
    assert theta[1] == pytest.approx(6.0 + 0.5 * step)
    assert theta[2] == pytest.approx(6.0 + 0.9 * step - 2 * math.pi)
    assert np.all((theta >= 0) & (theta < 2 * math.pi))


def test_sync_out_of_range(make_stream):
    track = EncoderTrack(t=np.array([10, 20]), theta=np.array([0.0, 0.1]))
    stream = make_stream([5, 15], [0, 0], [0, 0], [1, 1])
    with pytest.raises(OutOfRange):
        sync_theta(stream, track)
    synced = sync_theta(stream.slice(10, 21), track)
    assert synced.has_theta
    assert synced.theta[0] == pytest.approx(0.05)


def test_encoder_track_validation():
    with pytest.raises(EmptyStream):
        EncoderTrack(t=np.array([0]), theta=np.array([0.0]))
    with pytest.raises(ValueError):
        EncoderTrack(t=np.array([0, 0]), theta=np.array([0.0, 0.1]))
    track = make_encoder_track(1.0, 12.0)
    assert track.estimated_speed() == pytest.approx(12.0, rel=1e-6)


# ==================== IWE ====================

def test_iwe_nearest_and_bilinear(make_stream):
    stream = make_stream([0, 1], [1, 2], [2, 2], [1, -1], width=4, height=4)
    moved = stream.with_positions(np.array([1.5, 2.6]), np.array([2.0, 2.0]))

    nearest, dropped = accumulate_iwe(moved, "nearest")
    assert dropped == 0
    assert nearest.at(2, 2) == 1.0
    assert nearest.at(3, 2) == 1.0
    assert nearest.total == 2.0

    bilinear, _ = accumulate_iwe(moved, "bilinear")
    assert bilinear.at(1, 2) == pytest.approx(0.5)
    assert bilinear.at(2, 2) == pytest.approx(0.5 + 0.4)
    assert bilinear.at(3, 2) == pytest.approx(0.6)
    assert bilinear.total == pytest.approx(2.0)


def test_bilinear_keeps_in_sensor_share_at_border(make_stream):
    """센서 경계에 걸친 이벤트는 안쪽 이웃 몫만 더한다"""
    stream = make_stream([0, 1, 2], [0, 3, 1], [2, 1, 0], [1, 1, 1], width=4, height=4)
    moved = stream.with_positions(np.array([-0.5, 3.25, 1.0]), np.array([2.0, 1.0, -0.75]))
    iwe, dropped = accumulate_iwe(moved, "bilinear")
    assert dropped == 0
    assert iwe.at(0, 2) == pytest.approx(0.5)
    assert iwe.at(3, 1) == pytest.approx(0.75)
    assert iwe.at(1, 0) == pytest.approx(0.25)
    assert iwe.total == pytest.approx(1.5)


def test_iwe_drops_outside_events(make_stream):
    stream = make_stream([0, 1], [0, 1], [0, 0], [1, 1], width=4, height=4)
    moved = stream.with_positions(np.array([-1.0, 3.0]), np.array([0.0, 9.0]))
    iwe, dropped = accumulate_iwe(moved, "bilinear")
    assert dropped == 2
    assert iwe.total == 0.0


def test_accumulate_independent_of_thread_count():
    rng = np.random.default_rng(5)
    n = (1 << 20) * 2 + 123
    x = rng.uniform(-1, 33, n)
    y = rng.uniform(-1, 33, n)
    one, d1 = accumulate_positions(x, y, 32, 32, "bilinear", threads=1)
    four, d4 = accumulate_positions(x, y, 32, 32, "bilinear", threads=4)
    assert d1 == d4
    assert one.tobytes() == four.tobytes()
