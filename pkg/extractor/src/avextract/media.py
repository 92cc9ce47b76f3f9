"""Media access: frame sampling via OpenCV, audio windows from WAV files.

There is no ffmpeg in the deployment environment, so audio comes from a WAV
file: either an explicit path or a sidecar named like the video with a .wav
extension.  Videos produced together with their WAV track keep everything
self-contained.
"""

from __future__ import annotations

import wave
from dataclasses import dataclass
from pathlib import Path

import cv2
import numpy as np


class MediaError(ValueError):
    """Video or audio cannot be opened or decoded."""


@dataclass(frozen=True)
class MediaClips:
    """Per-segment media: one frame and one audio window per segment."""

    num_segments: int
    frames: list[np.ndarray]  # BGR uint8, one per segment
    audio_windows: list[np.ndarray]  # float32 mono in [-1, 1], one per segment
    sample_rate: int
    fps: float


def video_duration_seconds(path: str | Path) -> float:
    capture = cv2.VideoCapture(str(path))
    try:
        if not capture.isOpened():
            raise MediaError(f"{path}: cannot open video")
        fps = capture.get(cv2.CAP_PROP_FPS)
        frames = capture.get(cv2.CAP_PROP_FRAME_COUNT)
        if fps <= 0 or frames <= 0:
            raise MediaError(f"{path}: cannot determine duration (fps={fps}, frames={frames})")
        return frames / fps
    finally:
        capture.release()


def sample_segment_frames(path: str | Path, segment_seconds: float,
                          num_segments: int) -> tuple[list[np.ndarray], float]:
    """Middle frame of every segment, reading the stream once."""
    capture = cv2.VideoCapture(str(path))
    if not capture.isOpened():
        raise MediaError(f"{path}: cannot open video")
    try:
        fps = capture.get(cv2.CAP_PROP_FPS)
        total = int(capture.get(cv2.CAP_PROP_FRAME_COUNT))
        if fps <= 0 or total <= 0:
            raise MediaError(f"{path}: cannot determine frame layout")
        wanted = {}
        for seg in range(num_segments):
            midpoint = (seg + 0.5) * segment_seconds
            index = min(int(round(midpoint * fps)), total - 1)
            wanted.setdefault(index, []).append(seg)
        frames: list[np.ndarray | None] = [None] * num_segments
        index = 0
        while index <= max(wanted):
            ok, frame = capture.read()
            if not ok:
                break
            if index in wanted:
                for seg in wanted[index]:
                    frames[seg] = frame.copy()
            index += 1
        missing = [seg for seg, f in enumerate(frames) if f is None]
        if missing:
            raise MediaError(f"{path}: could not decode frames for segments {missing}")
        return frames, fps  # type: ignore[return-value]
    finally:
        capture.release()


def load_wav_mono(path: str | Path) -> tuple[np.ndarray, int]:
    """Whole WAV file as float32 mono in [-1, 1] plus its sample rate."""
    try:
        with wave.open(str(path), "rb") as handle:
            channels = handle.getnchannels()
            width = handle.getsampwidth()
            rate = handle.getframerate()
            raw = handle.readframes(handle.getnframes())
    except (wave.Error, FileNotFoundError, EOFError) as exc:
        raise MediaError(f"{path}: cannot decode WAV audio ({exc})") from exc
    if width == 2:
        samples = np.frombuffer(raw, dtype="<i2").astype(np.float32) / 32768.0
    elif width == 1:
        samples = (np.frombuffer(raw, dtype=np.uint8).astype(np.float32) - 128.0) / 128.0
    elif width == 4:
        samples = np.frombuffer(raw, dtype="<i4").astype(np.float32) / 2147483648.0
    else:
        raise MediaError(f"{path}: unsupported WAV sample width {width}")
    if channels > 1:
        samples = samples.reshape(-1, channels).mean(axis=1)
    return samples, rate


def resolve_audio_path(video_path: str | Path, audio_path: str | Path | None) -> Path:
    if audio_path is not None:
        return Path(audio_path)
    sidecar = Path(video_path).with_suffix(".wav")
    if not sidecar.exists():
        raise MediaError(
            f"{video_path}: no audio track source; provide --audio or a sidecar {sidecar.name}"
        )
    return sidecar


def load_clips(video_path: str | Path, segment_seconds: float,
               audio_path: str | Path | None = None) -> MediaClips:
    """Split a video (plus its WAV audio) into per-segment frames and windows."""
    if segment_seconds <= 0:
        raise MediaError(f"segment length must be positive, got {segment_seconds}")
    duration = video_duration_seconds(video_path)
    num_segments = max(1, int(round(duration / segment_seconds)))
    frames, fps = sample_segment_frames(video_path, segment_seconds, num_segments)

    samples, rate = load_wav_mono(resolve_audio_path(video_path, audio_path))
    window = int(round(segment_seconds * rate))
    if window <= 0:
        raise MediaError(f"audio window of {segment_seconds}s at {rate}Hz is empty")
    windows = []
    for seg in range(num_segments):
        chunk = samples[seg * window:(seg + 1) * window]
        if len(chunk) < window:
            chunk = np.pad(chunk, (0, window - len(chunk)))
        windows.append(chunk.astype(np.float32))
    return MediaClips(
        num_segments=num_segments,
        frames=frames,
        audio_windows=windows,
        sample_rate=rate,
        fps=fps,
    )
