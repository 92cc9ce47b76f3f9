"""Deterministic synthetic benchmark corpora.

Ground-truth events drive the logits: in-event cells get a high logit mean,
everything else a low one, with additive Gaussian noise and an optional
temporal drift that lowers in-event logits over each event's duration.
Visual features are unit vectors whose adjacent-segment cosine is high while
the active event set is unchanged and low across changes.  Whole-clip logits
are always emitted (high wherever a category has any event in that modality);
the segment-mean fallback would dilute short events below the selection
threshold, which is exactly what a real whole-clip scoring pass avoids.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .bundles import (
    Category,
    CategoryVocabulary,
    GroundTruth,
    ScoreBundle,
    write_bundle,
    write_ground_truth,
)

HIGH_LOGIT = 2.2  # sigmoid ~ 0.90
LOW_LOGIT = -2.2  # sigmoid ~ 0.10
STEP_DROP = 1.0  # logit drop after an event's midpoint, for the "step" profile

DRIFT_PROFILES = ("none", "linear", "step")


@dataclass(frozen=True)
class SynthSpec:
    """Everything that determines a corpus; the seed pins the output bytes."""

    num_videos: int = 10
    num_segments: int = 10
    num_categories: int = 10
    events_min: int = 1
    events_max: int = 3
    drift: str = "none"  # "none" | "linear:<rate>" | "step"
    noise_std: float = 0.0
    feature_dim: int = 8
    feature_continuity: float = 0.9
    seed: int = 0

    def __post_init__(self) -> None:
        if self.num_videos < 1 or self.num_segments < 1 or self.num_categories < 1:
            raise ValueError("num_videos, num_segments, num_categories must be >= 1")
        if not 0 <= self.events_min <= self.events_max:
            raise ValueError("need 0 <= events_min <= events_max")
        if self.drift_profile() not in DRIFT_PROFILES:
            raise ValueError(f"unknown drift profile {self.drift!r}")
        if self.noise_std < 0:
            raise ValueError("noise_std must be >= 0")
        if self.feature_dim < 1:
            raise ValueError("feature_dim must be >= 1")
        if not 0.0 <= self.feature_continuity <= 1.0:
            raise ValueError("feature_continuity must be in [0, 1]")

    def drift_profile(self) -> str:
        return self.drift.split(":", 1)[0]

    def drift_rate(self) -> float:
        parts = self.drift.split(":", 1)
        return float(parts[1]) if len(parts) == 2 else 0.35


@dataclass(frozen=True)
class SynthEvent:
    category: int
    start: int  # 1-based inclusive
    end: int
    audio: bool
    visual: bool


def _drift_offset(spec: SynthSpec, position: int, length: int) -> float:
    """Logit reduction at `position` (0-based) within an event of `length` segments."""
    profile = spec.drift_profile()
    if profile == "linear":
        return spec.drift_rate() * position
    if profile == "step":
        return STEP_DROP if position >= (length + 1) // 2 else 0.0
    return 0.0


def _sample_events(spec: SynthSpec, rng: np.random.Generator) -> list[SynthEvent]:
    """Events with >= 1 empty segment between same-category same-modality runs,
    so ground-truth runs stay maximal."""
    t = spec.num_segments
    count = int(rng.integers(spec.events_min, spec.events_max + 1))
    # occupied[modality][category] marks segments unavailable to that pair,
    # including a one-segment adjacency buffer.
    occupied = {
        "audio": np.zeros((spec.num_categories, t), dtype=bool),
        "visual": np.zeros((spec.num_categories, t), dtype=bool),
    }
    events: list[SynthEvent] = []
    for _ in range(count):
        for _attempt in range(20):
            category = int(rng.integers(spec.num_categories))
            kind = ("audio", "visual", "both")[int(rng.integers(3))]
            length = int(rng.integers(2, max(3, t // 2 + 1))) if t >= 2 else 1
            length = min(length, t)
            start = int(rng.integers(1, t - length + 2))
            span = slice(start - 1, start - 1 + length)
            wants = ("audio", "visual") if kind == "both" else (kind,)
            if any(occupied[m][category, span].any() for m in wants):
                continue
            for m in wants:
                lo = max(0, start - 2)
                hi = min(t, start - 1 + length + 1)
                occupied[m][category, lo:hi] = True
            events.append(SynthEvent(
                category=category, start=start, end=start + length - 1,
                audio=kind in ("audio", "both"), visual=kind in ("visual", "both"),
            ))
            break
    return events


def _logit_matrix(spec: SynthSpec, events: list[SynthEvent], modality: str,
                  rng: np.random.Generator) -> np.ndarray:
    t, c = spec.num_segments, spec.num_categories
    logits = np.full((t, c), LOW_LOGIT, dtype=np.float64)
    for e in events:
        if not getattr(e, "audio" if modality == "audio" else "visual"):
            continue
        length = e.end - e.start + 1
        for pos in range(length):
            logits[e.start - 1 + pos, e.category] = HIGH_LOGIT - _drift_offset(spec, pos, length)
    if spec.noise_std > 0:
        logits = logits + rng.normal(0.0, spec.noise_std, size=(t, c))
    return logits


def _video_logits(spec: SynthSpec, events: list[SynthEvent], modality: str,
                  rng: np.random.Generator) -> np.ndarray:
    present = np.full(spec.num_categories, LOW_LOGIT, dtype=np.float64)
    for e in events:
        if getattr(e, "audio" if modality == "audio" else "visual"):
            present[e.category] = HIGH_LOGIT
    if spec.noise_std > 0:
        present = present + rng.normal(0.0, spec.noise_std * 0.5, size=spec.num_categories)
    return present


def _features(spec: SynthSpec, events: list[SynthEvent], rng: np.random.Generator) -> np.ndarray:
    t, d = spec.num_segments, spec.feature_dim
    active_sets = []
    for seg in range(1, t + 1):
        active_sets.append(frozenset(
            e.category for e in events if e.start <= seg <= e.end
        ))
    out = np.zeros((t, d), dtype=np.float64)
    wobble = 1.0 - spec.feature_continuity
    current = None
    for i in range(t):
        if i == 0 or active_sets[i] != active_sets[i - 1] or current is None:
            current = rng.normal(0.0, 1.0, size=d)
        elif wobble > 0:
            current = current + wobble * rng.normal(0.0, 1.0, size=d)
        norm = np.linalg.norm(current)
        if norm == 0.0:
            current = np.ones(d)
            norm = np.linalg.norm(current)
        current = current / norm
        out[i] = current
    return out


def make_vocabulary(num_categories: int) -> CategoryVocabulary:
    return CategoryVocabulary(tuple(
        Category(
            id=f"cat_{i:02d}",
            audio_prompt=f"the sound of pattern {i:02d}",
            visual_prompt=f"an image of pattern {i:02d}",
        )
        for i in range(num_categories)
    ))


def generate_video(spec: SynthSpec, index: int, rng: np.random.Generator,
                   vocabulary: CategoryVocabulary) -> tuple[ScoreBundle, GroundTruth]:
    events = _sample_events(spec, rng)
    t, c = spec.num_segments, spec.num_categories
    audio_mask = np.zeros((t, c), dtype=np.uint8)
    visual_mask = np.zeros((t, c), dtype=np.uint8)
    for e in events:
        if e.audio:
            audio_mask[e.start - 1:e.end, e.category] = 1
        if e.visual:
            visual_mask[e.start - 1:e.end, e.category] = 1

    video_id = f"synth_{spec.seed}_{index:04d}"
    bundle = ScoreBundle(
        video_id=video_id,
        num_segments=t,
        vocabulary=vocabulary,
        audio_logits=_logit_matrix(spec, events, "audio", rng),
        visual_logits=_logit_matrix(spec, events, "visual", rng),
        video_audio_logits=_video_logits(spec, events, "audio", rng),
        video_visual_logits=_video_logits(spec, events, "visual", rng),
        visual_features=_features(spec, events, rng),
    )
    gt = GroundTruth(
        video_id=video_id,
        num_segments=t,
        categories=vocabulary.ids,
        audio_labels=audio_mask,
        visual_labels=visual_mask,
    )
    return bundle, gt


def generate_corpus(spec: SynthSpec) -> list[tuple[ScoreBundle, GroundTruth]]:
    rng = np.random.default_rng(spec.seed)
    vocabulary = make_vocabulary(spec.num_categories)
    return [generate_video(spec, i, rng, vocabulary) for i in range(spec.num_videos)]


def write_corpus(spec: SynthSpec, out_dir: str | Path) -> list[str]:
    """Generate and write bundle/ground-truth file pairs; returns video ids."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ids = []
    for bundle, gt in generate_corpus(spec):
        write_bundle(bundle, out / f"{bundle.video_id}.bundle.json")
        write_ground_truth(gt, out / f"{gt.video_id}.gt.json")
        ids.append(bundle.video_id)
    return ids
