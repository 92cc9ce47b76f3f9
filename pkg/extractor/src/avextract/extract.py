"""Turn one video (plus audio) into a score-bundle file the engine can load.

The bundle carries raw pre-sigmoid similarities; whole-clip logits are stored
as the video-level fields whenever the backend supports them, and per-segment
frame embeddings are stored as visual_features.  The backend's scaling factor
is recorded under "extractor" metadata for reproducibility.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from .backends import Backend, create_backend
from .media import MediaClips, load_clips

FORMAT_VERSION = 1


@dataclass(frozen=True)
class VocabularyEntry:
    id: str
    audio_prompt: str
    visual_prompt: str


@dataclass(frozen=True)
class ExtractorJob:
    video_path: str
    vocabulary: tuple[VocabularyEntry, ...]
    output_path: str
    backend: str = "spectral"
    segment_seconds: float = 1.0
    audio_path: str | None = None

    def __post_init__(self) -> None:
        if self.segment_seconds <= 0:
            raise ValueError(f"segment_seconds must be > 0, got {self.segment_seconds}")
        if not self.vocabulary:
            raise ValueError("vocabulary must not be empty")
        ids = [v.id for v in self.vocabulary]
        if len(set(ids)) != len(ids):
            raise ValueError("vocabulary ids must be unique")


def load_vocabulary(path: str | Path) -> tuple[VocabularyEntry, ...]:
    """Vocabulary file: JSON array of {id, audio_prompt, visual_prompt}."""
    try:
        data = json.loads(Path(path).read_text())
    except FileNotFoundError as exc:
        raise ValueError(f"{path}: vocabulary file not found") from exc
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(data, list) or not data:
        raise ValueError(f"{path}: expected a non-empty JSON array")
    entries = []
    for i, item in enumerate(data):
        if not isinstance(item, Mapping) or "id" not in item:
            raise ValueError(f"{path}: entry {i} needs an 'id'")
        entries.append(VocabularyEntry(
            id=str(item["id"]),
            audio_prompt=str(item.get("audio_prompt", f"the sound of {item['id']}")),
            visual_prompt=str(item.get("visual_prompt", f"an image of {item['id']}")),
        ))
    return tuple(entries)


def _similarities(embeddings: np.ndarray, text: np.ndarray, scale: float) -> np.ndarray:
    return (embeddings @ text.T) * scale


def build_bundle(job: ExtractorJob, clips: MediaClips, backend: Backend) -> dict[str, Any]:
    prompts_audio = [v.audio_prompt for v in job.vocabulary]
    prompts_visual = [v.visual_prompt for v in job.vocabulary]
    text_audio = backend.text_audio_embeddings(prompts_audio)
    text_visual = backend.text_visual_embeddings(prompts_visual)
    frames = backend.frame_embeddings(clips.frames)
    audio = backend.audio_embeddings(clips.audio_windows, clips.sample_rate)
    scale = backend.scale()

    doc: dict[str, Any] = {
        "format_version": FORMAT_VERSION,
        "video_id": Path(job.video_path).stem,
        "num_segments": clips.num_segments,
        "vocabulary": [
            {"id": v.id, "audio_prompt": v.audio_prompt, "visual_prompt": v.visual_prompt}
            for v in job.vocabulary
        ],
        "audio_logits": _similarities(audio, text_audio, scale).tolist(),
        "visual_logits": _similarities(frames, text_visual, scale).tolist(),
        "visual_features": frames.tolist(),
        "extractor": {
            "backend": backend.name,
            "logit_scale": scale,
            "segment_seconds": job.segment_seconds,
            "sample_rate": clips.sample_rate,
            "fps": clips.fps,
        },
    }
    if backend.supports_video_level:
        whole_audio = backend.audio_embeddings(
            [np.concatenate(clips.audio_windows)], clips.sample_rate
        )
        whole_visual = frames.mean(axis=0, keepdims=True)
        norm = np.linalg.norm(whole_visual)
        if norm > 0:
            whole_visual = whole_visual / norm
        doc["video_audio_logits"] = _similarities(whole_audio, text_audio, scale)[0].tolist()
        doc["video_visual_logits"] = _similarities(whole_visual, text_visual, scale)[0].tolist()
    return doc


def extract(job: ExtractorJob) -> Path:
    """Run one extraction job and write the bundle file; returns its path."""
    backend = create_backend(job.backend)
    clips = load_clips(job.video_path, job.segment_seconds, job.audio_path)
    doc = build_bundle(job, clips, backend)
    out = Path(job.output_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(doc, indent=1) + "\n")
    return out
