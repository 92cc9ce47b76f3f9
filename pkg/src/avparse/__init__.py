"""Training-free audio-visual event localization over similarity-score bundles."""

from .bundles import (
    BundleError,
    Category,
    CategoryVocabulary,
    GroundTruth,
    ScoreBundle,
    load_bundle,
    load_ground_truth,
    pool_span,
    pool_video_level,
    sigmoid_scores,
    write_bundle,
    write_ground_truth,
)
from .config import CLIP_CLAP_PRESET, DEFAULT_CONFIG, PRESETS, ConfigError, EngineConfig
from .fusion import FusedScores, SelectedCategories, fuse, select_categories
from .metrics import (
    MetricsReport,
    VideoMetrics,
    aggregate_report,
    ave_accuracy,
    evaluate_corpus,
    evaluate_video,
    event_f1,
    segment_f1,
)
from .parsing import (
    EventCandidate,
    ParsedVideo,
    extract_candidates,
    parse_video,
    refine_candidates,
    run_pipeline,
)
from .shift import (
    StepTrace,
    ThresholdState,
    build_confusion,
    cosine_scale,
    estimate_ratio,
    init_state,
    invert_confusion,
    predict_segment,
    step,
    update_thresholds,
)
from .synth import SynthSpec, generate_corpus, write_corpus
from .verify import VerifyResult, verify_corpus

__version__ = "0.1.0"

__all__ = [
    "BundleError",
    "Category",
    "CategoryVocabulary",
    "CLIP_CLAP_PRESET",
    "ConfigError",
    "DEFAULT_CONFIG",
    "EngineConfig",
    "EventCandidate",
    "FusedScores",
    "GroundTruth",
    "MetricsReport",
    "ParsedVideo",
    "PRESETS",
    "ScoreBundle",
    "SelectedCategories",
    "StepTrace",
    "SynthSpec",
    "ThresholdState",
    "VerifyResult",
    "VideoMetrics",
    "aggregate_report",
    "ave_accuracy",
    "build_confusion",
    "cosine_scale",
    "estimate_ratio",
    "evaluate_corpus",
    "evaluate_video",
    "event_f1",
    "extract_candidates",
    "fuse",
    "generate_corpus",
    "init_state",
    "invert_confusion",
    "load_bundle",
    "load_ground_truth",
    "parse_video",
    "pool_span",
    "pool_video_level",
    "predict_segment",
    "refine_candidates",
    "run_pipeline",
    "segment_f1",
    "select_categories",
    "sigmoid_scores",
    "step",
    "update_thresholds",
    "verify_corpus",
    "write_bundle",
    "write_corpus",
    "write_ground_truth",
]
