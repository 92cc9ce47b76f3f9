import numpy as np
import pytest

from avextract.media import (
    MediaError,
    load_clips,
    load_wav_mono,
    resolve_audio_path,
    video_duration_seconds,
)


class TestVideo:
    def test_duration(self, sample_media):
        assert video_duration_seconds(sample_media["video"]) == pytest.approx(10.0)

    def test_missing_video(self, tmp_path):
        with pytest.raises(MediaError, match="cannot open"):
            video_duration_seconds(tmp_path / "absent.avi")


class TestAudio:
    def test_wav_round_trip(self, sample_media):
        samples, rate = load_wav_mono(sample_media["audio"])
        assert rate == 16000
        assert len(samples) == 160000
        assert np.abs(samples).max() <= 1.0

    def test_sidecar_resolution(self, sample_media):
        assert resolve_audio_path(sample_media["video"], None) == sample_media["audio"]

    def test_missing_audio_is_reported(self, tmp_path, sample_media):
        lonely = tmp_path / "lonely.avi"
        lonely.write_bytes(sample_media["video"].read_bytes())
        with pytest.raises(MediaError, match="no audio track source"):
            load_clips(lonely, 1.0)

    def test_garbage_wav(self, tmp_path, sample_media):
        bad = tmp_path / "bad.wav"
        bad.write_bytes(b"not a wav at all")
        with pytest.raises(MediaError, match="cannot decode WAV"):
            load_clips(sample_media["video"], 1.0, audio_path=bad)

    def test_stereo_downmix(self, tmp_path):
        import wave

        t = np.arange(8000) / 8000.0
        left = (0.5 * np.sin(2 * np.pi * 440 * t) * 32767).astype("<i2")
        right = (-0.5 * np.sin(2 * np.pi * 440 * t) * 32767).astype("<i2")
        interleaved = np.empty(2 * len(t), dtype="<i2")
        interleaved[0::2] = left
        interleaved[1::2] = right
        path = tmp_path / "stereo.wav"
        with wave.open(str(path), "wb") as handle:
            handle.setnchannels(2)
            handle.setsampwidth(2)
            handle.setframerate(8000)
            handle.writeframes(interleaved.tobytes())
        samples, rate = load_wav_mono(path)
        assert rate == 8000
        assert len(samples) == 8000
        # opposite-phase channels cancel in the mono mix
        assert np.abs(samples).max() < 1e-3


class TestClips:
    def test_segments_frames_and_windows(self, sample_media):
        clips = load_clips(sample_media["video"], 1.0)
        assert clips.num_segments == 10
        assert len(clips.frames) == 10
        assert len(clips.audio_windows) == 10
        assert all(w.shape == (16000,) for w in clips.audio_windows)
        assert all(f.shape == (72, 96, 3) for f in clips.frames)

    def test_two_second_segments(self, sample_media):
        clips = load_clips(sample_media["video"], 2.0)
        assert clips.num_segments == 5
        assert clips.audio_windows[0].shape == (32000,)

    def test_nonpositive_segment_rejected(self, sample_media):
        with pytest.raises(MediaError, match="positive"):
            load_clips(sample_media["video"], 0.0)

    def test_frames_differ_across_segments(self, sample_media):
        clips = load_clips(sample_media["video"], 1.0)
        assert not np.array_equal(clips.frames[0], clips.frames[5])
