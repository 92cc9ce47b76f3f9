"""Score-level fusion of audio/visual probability vectors and category selection."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bundles import CategoryVocabulary


@dataclass(frozen=True)
class FusedScores:
    """Fused probabilities for one pipeline: whole-video vector plus per-segment matrix."""

    video_level: np.ndarray  # (|C|,) in [0, 1]
    segment_level: np.ndarray  # (T, |C|) in [0, 1]
    alpha_used: float


@dataclass(frozen=True)
class SelectedCategories:
    """Vocabulary positions that survived video-level selection, in vocabulary order."""

    indices: tuple[int, ...]
    ids: tuple[str, ...]

    def __post_init__(self) -> None:
        if len(self.indices) != len(self.ids):
            raise ValueError("indices and ids must have equal length")
        if any(b <= a for a, b in zip(self.indices, self.indices[1:])):
            raise ValueError(f"indices must be strictly increasing, got {self.indices}")

    def __len__(self) -> int:
        return len(self.indices)

    @classmethod
    def all_of(cls, vocabulary: CategoryVocabulary) -> "SelectedCategories":
        return cls(tuple(range(len(vocabulary))), vocabulary.ids)


def fuse(audio_scores: np.ndarray, visual_scores: np.ndarray, alpha: float) -> np.ndarray:
    """Weighted sum alpha * audio + (1 - alpha) * visual, elementwise.

    alpha = 1 returns the audio scores exactly and alpha = 0 the visual ones.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must be in [0, 1], got {alpha}")
    a = np.asarray(audio_scores, dtype=np.float64)
    v = np.asarray(visual_scores, dtype=np.float64)
    if a.shape != v.shape:
        raise ValueError(f"shape mismatch: audio {a.shape} vs visual {v.shape}")
    out = alpha * a + (1.0 - alpha) * v
    # The weighted sum can overshoot [min, max] by one ulp; pin it back so the
    # convexity invariant holds exactly.
    return np.minimum(np.maximum(out, np.minimum(a, v)), np.maximum(a, v))


def select_categories(
    video_scores: np.ndarray, tau_f: float, vocabulary: CategoryVocabulary
) -> SelectedCategories:
    """Categories whose video-level score strictly exceeds tau_f, in vocabulary order."""
    scores = np.asarray(video_scores, dtype=np.float64)
    if scores.ndim != 1 or scores.shape[0] != len(vocabulary):
        raise ValueError(
            f"video_scores must have {len(vocabulary)} entries, got shape {scores.shape}"
        )
    indices = tuple(int(i) for i in np.flatnonzero(scores > tau_f))
    ids = tuple(vocabulary.ids[i] for i in indices)
    return SelectedCategories(indices, ids)
