#!/usr/bin/env python3
"""Regenerate the committed test fixtures under tests/data/.

The drift fixture is a two-category bundle whose first category's fused score
decays linearly from 0.90 to 0.60 across ten segments while the event is
actually present the whole time; the second category stays flat at 0.10.
Expected decision matrices are computed with the naive oracle and frozen.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from avparse import (
    Category,
    CategoryVocabulary,
    DEFAULT_CONFIG,
    GroundTruth,
    ScoreBundle,
    write_bundle,
    write_ground_truth,
)
from avparse import oracle
from avparse.bundles import bundle_to_dict

DATA_DIR = Path(__file__).resolve().parent.parent / "tests" / "data"

T = 10
SCORE_START = 0.90
SCORE_END = 0.60
FLAT_SCORE = 0.10


def logit(p: float) -> float:
    return math.log(p / (1.0 - p))


def build_drift_bundle() -> tuple[ScoreBundle, GroundTruth]:
    vocabulary = CategoryVocabulary((
        Category("drifting_event", "the sound of a drifting event", "an image of a drifting event"),
        Category("flat_background", "the sound of background", "an image of background"),
    ))
    scores = [SCORE_START + (SCORE_END - SCORE_START) * t / (T - 1) for t in range(T)]
    logits = np.array([[logit(s), logit(FLAT_SCORE)] for s in scores])
    features = np.tile(np.array([1.0, 0.0, 0.0, 0.0]), (T, 1))
    bundle = ScoreBundle(
        video_id="drift_fixture",
        num_segments=T,
        vocabulary=vocabulary,
        audio_logits=logits,
        visual_logits=logits.copy(),
        visual_features=features,
    )
    labels = np.zeros((T, 2), dtype=np.uint8)
    labels[:, 0] = 1
    gt = GroundTruth(
        video_id="drift_fixture",
        num_segments=T,
        categories=vocabulary.ids,
        audio_labels=labels,
        visual_labels=labels.copy(),
    )
    return bundle, gt


def main() -> None:
    DATA_DIR.mkdir(parents=True, exist_ok=True)
    bundle, gt = build_drift_bundle()
    write_bundle(bundle, DATA_DIR / "drift_fixture.bundle.json")
    write_ground_truth(gt, DATA_DIR / "drift_fixture.gt.json")

    config_doc = DEFAULT_CONFIG.to_dict()
    static_doc = dict(config_doc, use_dynamic_thresholds=False)
    bundle_doc = bundle_to_dict(bundle)

    dynamic = oracle.parse_video(bundle_doc, config_doc)
    static = oracle.parse_video(bundle_doc, static_doc)

    expected = {
        "format_version": 1,
        "video_id": bundle.video_id,
        "dynamic": {
            "decisions": dynamic["decisions"],
            "events": dynamic["events"],
            "tau_audio_visual": [step["tau_after"] for step in dynamic["traces"]["audio_visual"]],
        },
        "static": {
            "decisions": static["decisions"],
            "events": static["events"],
        },
    }
    (DATA_DIR / "drift_fixture.expected.json").write_text(
        json.dumps(expected, indent=1) + "\n"
    )
    dyn_col = [row[0] for row in dynamic["decisions"]["audio_visual"]]
    sta_col = [row[0] for row in static["decisions"]["audio_visual"]]
    print("dynamic av decisions (drifting_event):", dyn_col)
    print("static  av decisions (drifting_event):", sta_col)
    print("wrote fixtures to", DATA_DIR)


if __name__ == "__main__":
    main()
