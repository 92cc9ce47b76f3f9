"""Per-video orchestration: fuse scores, select categories, decode segments,
extract maximal-run candidates, and refine them by span confidence."""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from .bundles import (
    FORMAT_VERSION,
    BundleError,
    ScoreBundle,
    pool_span,
    pool_video_level,
    sigmoid_scores,
)
from .config import MODALITIES, EngineConfig
from .fusion import FusedScores, SelectedCategories, fuse, select_categories
from .shift import StepTrace, init_state, step

MODALITY_ALPHA = {"audio": 1.0, "visual": 0.0}


@dataclass(frozen=True)
class EventCandidate:
    """One localized event; start/end are 1-based inclusive segment indices."""

    category_id: str
    start: int
    end: int
    modality: str
    span_score: float = 0.0

    def __post_init__(self) -> None:
        if not 1 <= self.start <= self.end:
            raise ValueError(f"invalid span [{self.start}, {self.end}]")

    @property
    def length(self) -> int:
        return self.end - self.start + 1


@dataclass(frozen=True)
class PipelineResult:
    """Output of one modality pipeline over one bundle."""

    modality: str
    decisions: np.ndarray  # (T, |C|) over the full vocabulary
    candidates: tuple[EventCandidate, ...]
    trace: tuple[StepTrace, ...]
    selected: SelectedCategories


@dataclass(frozen=True)
class ParsedVideo:
    video_id: str
    events: tuple[EventCandidate, ...]
    decisions: Mapping[str, np.ndarray]  # modality -> (T, |C|)
    traces: Mapping[str, tuple[StepTrace, ...]]
    selected: Mapping[str, SelectedCategories]


def alpha_for(modality: str, config: EngineConfig) -> float:
    if modality in MODALITY_ALPHA:
        return MODALITY_ALPHA[modality]
    if modality == "audio_visual":
        return config.alpha
    raise ValueError(f"unknown modality {modality!r}")


def binary_runs(column: np.ndarray) -> list[tuple[int, int]]:
    """Maximal runs of 1s in a binary column, as 1-based inclusive (start, end)."""
    runs: list[tuple[int, int]] = []
    start = None
    for i, value in enumerate(column):
        if value and start is None:
            start = i + 1
        elif not value and start is not None:
            runs.append((start, i))
            start = None
    if start is not None:
        runs.append((start, len(column)))
    return runs


def extract_candidates(
    decisions: np.ndarray,
    selected: SelectedCategories,
    modality: str = "audio_visual",
) -> list[EventCandidate]:
    """Maximal runs of consecutive positive decisions, per selected category,
    ordered by (category position, start)."""
    decisions = np.asarray(decisions)
    if decisions.ndim != 2 or decisions.shape[1] != len(selected):
        raise ValueError(
            f"decisions must be T x {len(selected)}, got shape {decisions.shape}"
        )
    out: list[EventCandidate] = []
    for col, category_id in enumerate(selected.ids):
        for start, end in binary_runs(decisions[:, col]):
            out.append(EventCandidate(category_id, start, end, modality))
    return out


def span_fused_score(
    bundle: ScoreBundle, start: int, end: int, category_index: int, alpha: float
) -> float:
    """Fused confidence of one category over a span: sigmoid of the span-mean
    logits per modality, then the weighted sum."""
    a = sigmoid_scores(pool_span(bundle.audio_logits, start, end))
    v = sigmoid_scores(pool_span(bundle.visual_logits, start, end))
    return float(fuse(a, v, alpha)[category_index])


def refine_candidates(
    candidates: Iterable[EventCandidate],
    bundle: ScoreBundle,
    selected: SelectedCategories,
    modality: str,
    config: EngineConfig,
) -> list[EventCandidate]:
    """Keep candidates whose span confidence strictly exceeds tau_r, recording
    the confidence as span_score.  Order is preserved."""
    alpha = alpha_for(modality, config)
    tau_r = config.tau_r_for(modality)
    index_by_id = {cid: idx for idx, cid in zip(selected.indices, selected.ids)}
    kept: list[EventCandidate] = []
    for cand in candidates:
        score = span_fused_score(bundle, cand.start, cand.end, index_by_id[cand.category_id], alpha)
        if score > tau_r:
            kept.append(replace(cand, span_score=score))
    return kept


def fuse_bundle(bundle: ScoreBundle, modality: str, config: EngineConfig) -> FusedScores:
    """Sigmoid then weighted sum, at video level and segment level."""
    alpha = alpha_for(modality, config)
    video_audio = sigmoid_scores(pool_video_level(bundle, "audio"))
    video_visual = sigmoid_scores(pool_video_level(bundle, "visual"))
    segment_fused = fuse(
        sigmoid_scores(bundle.audio_logits), sigmoid_scores(bundle.visual_logits), alpha
    )
    return FusedScores(
        video_level=fuse(video_audio, video_visual, alpha),
        segment_level=segment_fused,
        alpha_used=alpha,
    )


def run_pipeline(bundle: ScoreBundle, modality: str, config: EngineConfig) -> PipelineResult:
    """Run one modality pipeline end to end over a bundle."""
    t, c = bundle.num_segments, len(bundle.vocabulary)
    fused = fuse_bundle(bundle, modality, config)

    if config.use_class_selection:
        selected = select_categories(
            fused.video_level, config.tau_f_for(modality), bundle.vocabulary
        )
    else:
        selected = SelectedCategories.all_of(bundle.vocabulary)

    cols = list(selected.indices)
    restricted = fused.segment_level[:, cols]

    state = init_state(selected, config)
    traces: list[StepTrace] = []
    for i in range(t):
        feature = None if bundle.visual_features is None else bundle.visual_features[i]
        state, trace = step(state, restricted[i], feature, config)
        traces.append(trace)

    decisions = np.zeros((t, c), dtype=np.uint8)
    if cols:
        decisions[:, cols] = np.stack([tr.decisions for tr in traces])

    candidates = extract_candidates(decisions[:, cols], selected, modality)
    if config.use_refinement:
        candidates = refine_candidates(candidates, bundle, selected, modality, config)
    else:
        # Candidates become final predictions unfiltered; still record their
        # span confidence so downstream output stays informative.
        index_by_id = {cid: idx for idx, cid in zip(selected.indices, selected.ids)}
        candidates = [
            replace(cand, span_score=span_fused_score(
                bundle, cand.start, cand.end, index_by_id[cand.category_id],
                fused.alpha_used))
            for cand in candidates
        ]
    return PipelineResult(modality, decisions, tuple(candidates), tuple(traces), selected)


def parse_video(bundle: ScoreBundle, config: EngineConfig) -> ParsedVideo:
    """Run the audio, visual, and audio-visual pipelines independently and
    assemble the result; events ordered by (modality, category id, start)."""
    results = {m: run_pipeline(bundle, m, config) for m in MODALITIES}
    events = sorted(
        (cand for r in results.values() for cand in r.candidates),
        key=lambda e: (e.modality, e.category_id, e.start),
    )
    return ParsedVideo(
        video_id=bundle.video_id,
        events=tuple(events),
        decisions={m: results[m].decisions for m in MODALITIES},
        traces={m: results[m].trace for m in MODALITIES},
        selected={m: results[m].selected for m in MODALITIES},
    )


# --- Prediction files --------------------------------------------------------


def predictions_to_dict(parsed: ParsedVideo) -> dict[str, Any]:
    return {
        "format_version": FORMAT_VERSION,
        "video_id": parsed.video_id,
        "events": [
            {
                "category_id": e.category_id,
                "modality": e.modality,
                "start": e.start,
                "end": e.end,
                "span_score": e.span_score,
            }
            for e in parsed.events
        ],
    }


def write_predictions(parsed: ParsedVideo, path: str | Path) -> None:
    Path(path).write_text(json.dumps(predictions_to_dict(parsed), indent=1) + "\n")


def events_from_dict(doc: Mapping[str, Any]) -> tuple[str, list[EventCandidate]]:
    """Decode one prediction document into (video_id, events)."""
    if not isinstance(doc, Mapping):
        raise BundleError("prediction document must be a JSON object")
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise BundleError(f"format_version: expected {FORMAT_VERSION}, got {version!r}")
    if "video_id" not in doc or "events" not in doc:
        raise BundleError("prediction document needs 'video_id' and 'events'")
    events = []
    for i, item in enumerate(doc["events"]):
        try:
            modality = item["modality"]
            if modality not in MODALITIES:
                raise BundleError(f"events[{i}].modality: unknown modality {modality!r}")
            events.append(EventCandidate(
                category_id=str(item["category_id"]),
                start=int(item["start"]),
                end=int(item["end"]),
                modality=modality,
                span_score=float(item.get("span_score", 0.0)),
            ))
        except (KeyError, TypeError, ValueError) as exc:
            raise BundleError(f"events[{i}]: {exc}") from exc
    return str(doc["video_id"]), events


def load_predictions(path: str | Path) -> dict[str, list[EventCandidate]]:
    """Load a prediction file: one document or a combined array of documents."""
    try:
        data = json.loads(Path(path).read_text())
    except FileNotFoundError as exc:
        raise BundleError(f"{path}: file not found") from exc
    except json.JSONDecodeError as exc:
        raise BundleError(f"{path}: not valid JSON ({exc})") from exc
    docs = data if isinstance(data, list) else [data]
    out: dict[str, list[EventCandidate]] = {}
    for doc in docs:
        video_id, events = events_from_dict(doc)
        if video_id in out:
            raise BundleError(f"duplicate predictions for video {video_id!r}")
        out[video_id] = events
    return out


def events_to_matrix(
    events: Sequence[EventCandidate],
    modality: str,
    num_segments: int,
    category_ids: Sequence[str],
) -> np.ndarray:
    """Paint events of one modality onto a binary T x |C| matrix."""
    index = {cid: i for i, cid in enumerate(category_ids)}
    out = np.zeros((num_segments, len(category_ids)), dtype=np.uint8)
    for e in events:
        if e.modality != modality:
            continue
        if e.category_id not in index:
            raise BundleError(f"event category {e.category_id!r} not in ground-truth vocabulary")
        if e.end > num_segments:
            raise BundleError(
                f"event span [{e.start}, {e.end}] exceeds {num_segments} segments"
            )
        out[e.start - 1:e.end, index[e.category_id]] = 1
    return out
