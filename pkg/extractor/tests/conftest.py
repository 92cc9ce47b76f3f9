from __future__ import annotations

import json
import math
import wave
from pathlib import Path

import cv2
import numpy as np
import pytest

FPS = 4
SECONDS = 10
WIDTH, HEIGHT = 96, 72
SAMPLE_RATE = 16000


def render_frame(index: int) -> np.ndarray:
    """Deterministic synthetic frame: moving block over a per-second backdrop."""
    second = index // FPS
    frame = np.zeros((HEIGHT, WIDTH, 3), dtype=np.uint8)
    frame[:, :, 0] = (second * 23) % 256
    frame[:, :, 1] = (second * 57) % 256
    frame[:, :, 2] = (second * 91) % 256
    x = (index * 7) % (WIDTH - 16)
    y = (index * 5) % (HEIGHT - 16)
    frame[y:y + 16, x:x + 16] = (255 - frame[0, 0]).astype(np.uint8)
    return frame


def write_sample_video(path: Path) -> None:
    writer = cv2.VideoWriter(str(path), cv2.VideoWriter_fourcc(*"MJPG"),
                             FPS, (WIDTH, HEIGHT))
    assert writer.isOpened()
    for i in range(FPS * SECONDS):
        writer.write(render_frame(i))
    writer.release()


def write_sample_audio(path: Path) -> None:
    t = np.arange(SAMPLE_RATE * SECONDS) / SAMPLE_RATE
    signal = np.zeros_like(t)
    for second in range(SECONDS):
        mask = (t >= second) & (t < second + 1)
        freq = 220.0 * (second + 1)
        signal[mask] = 0.6 * np.sin(2 * math.pi * freq * t[mask])
    pcm = (signal * 32767).astype("<i2")
    with wave.open(str(path), "wb") as handle:
        handle.setnchannels(1)
        handle.setsampwidth(2)
        handle.setframerate(SAMPLE_RATE)
        handle.writeframes(pcm.tobytes())


@pytest.fixture(scope="session")
def sample_media(tmp_path_factory) -> dict[str, Path]:
    root = tmp_path_factory.mktemp("media")
    video = root / "sample.avi"
    audio = root / "sample.wav"
    vocab = root / "vocab.json"
    write_sample_video(video)
    write_sample_audio(audio)
    vocab.write_text(json.dumps([
        {"id": f"thing_{i}", "audio_prompt": f"the sound of thing {i}",
         "visual_prompt": f"an image of thing {i}"}
        for i in range(5)
    ]))
    return {"video": video, "audio": audio, "vocab": vocab, "root": root}
