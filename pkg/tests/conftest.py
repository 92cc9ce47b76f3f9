from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from avparse import Category, CategoryVocabulary, GroundTruth, ScoreBundle

DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return DATA_DIR


def small_vocabulary(n: int = 3) -> CategoryVocabulary:
    return CategoryVocabulary(tuple(
        Category(f"cat_{i}", f"the sound of thing {i}", f"an image of thing {i}")
        for i in range(n)
    ))


def random_bundle(
    rng: np.random.Generator,
    num_segments: int = 10,
    num_categories: int = 3,
    with_features: bool = True,
    with_video_logits: bool = False,
    video_id: str = "vid",
) -> ScoreBundle:
    """Unstructured random logits; useful for property tests, useless for metrics."""
    kwargs = {}
    if with_video_logits:
        kwargs["video_audio_logits"] = rng.normal(0, 2, num_categories)
        kwargs["video_visual_logits"] = rng.normal(0, 2, num_categories)
    if with_features:
        feats = rng.normal(0, 1, (num_segments, 4))
        feats /= np.linalg.norm(feats, axis=1, keepdims=True)
        kwargs["visual_features"] = feats
    return ScoreBundle(
        video_id=video_id,
        num_segments=num_segments,
        vocabulary=small_vocabulary(num_categories),
        audio_logits=rng.normal(0, 2, (num_segments, num_categories)),
        visual_logits=rng.normal(0, 2, (num_segments, num_categories)),
        **kwargs,
    )


def random_ground_truth(
    rng: np.random.Generator,
    num_segments: int = 10,
    num_categories: int = 3,
    video_id: str = "vid",
) -> GroundTruth:
    return GroundTruth(
        video_id=video_id,
        num_segments=num_segments,
        categories=small_vocabulary(num_categories).ids,
        audio_labels=(rng.random((num_segments, num_categories)) < 0.3).astype(np.uint8),
        visual_labels=(rng.random((num_segments, num_categories)) < 0.3).astype(np.uint8),
    )
