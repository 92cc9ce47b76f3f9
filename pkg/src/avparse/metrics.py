"""Evaluation suite: segment/event F1 per modality, Type@AV, Event@AV, and
per-segment single-label accuracy for synchronized-event benchmarks.

Definitions fixed here: per-video micro-F1 averaged over videos, empty-vs-empty
scored 1.0, greedy in-order IoU matching at 0.5 for event lists, and the
union-of-modalities reading of Event@AV.  Audio-visual ground truth is the AND
of the audio and visual label matrices; audio-visual predictions come from the
dedicated fused pipeline's events.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from .bundles import FORMAT_VERSION, GroundTruth
from .parsing import EventCandidate, binary_runs, events_to_matrix

METRIC_KEYS = (
    "audio_segment",
    "audio_event",
    "visual_segment",
    "visual_event",
    "audio_visual_segment",
    "audio_visual_event",
    "type_at_av_segment",
    "type_at_av_event",
    "event_at_av_segment",
    "event_at_av_event",
)
OBJECTIVE_KEYS = METRIC_KEYS + ("ave_accuracy",)


@dataclass(frozen=True)
class VideoMetrics:
    """All metric values for one video, already scaled to [0, 100]."""

    video_id: str
    audio_segment: float
    audio_event: float
    visual_segment: float
    visual_event: float
    audio_visual_segment: float
    audio_visual_event: float
    type_at_av_segment: float
    type_at_av_event: float
    event_at_av_segment: float
    event_at_av_event: float
    ave_accuracy: float


@dataclass(frozen=True)
class MetricsReport:
    """Corpus-level means over videos, in [0, 100]."""

    audio_segment: float
    audio_event: float
    visual_segment: float
    visual_event: float
    audio_visual_segment: float
    audio_visual_event: float
    type_at_av_segment: float
    type_at_av_event: float
    event_at_av_segment: float
    event_at_av_event: float
    ave_accuracy: float | None
    num_videos: int
    per_video: tuple[VideoMetrics, ...] = ()

    def value(self, key: str) -> float:
        if key not in OBJECTIVE_KEYS:
            raise KeyError(f"unknown metric {key!r}; expected one of {OBJECTIVE_KEYS}")
        out = getattr(self, key)
        if out is None:
            raise KeyError(f"metric {key!r} was not computed for this corpus")
        return out


def segment_f1(pred: np.ndarray, gt: np.ndarray) -> float:
    """Micro-F1 over all segment/category cells of one video; 1.0 when both
    sides are entirely empty."""
    p = np.asarray(pred).astype(bool)
    g = np.asarray(gt).astype(bool)
    if p.shape != g.shape:
        raise ValueError(f"shape mismatch: pred {p.shape} vs gt {g.shape}")
    tp = int((p & g).sum())
    fp = int((p & ~g).sum())
    fn = int((~p & g).sum())
    if tp == 0 and fp == 0 and fn == 0:
        return 1.0
    return 2.0 * tp / (2.0 * tp + fp + fn)


def span_iou(a: tuple[int, int], b: tuple[int, int]) -> float:
    """IoU of two 1-based inclusive segment spans."""
    inter = min(a[1], b[1]) - max(a[0], b[0]) + 1
    if inter <= 0:
        return 0.0
    union = (a[1] - a[0] + 1) + (b[1] - b[0] + 1) - inter
    return inter / union


def event_f1(
    pred_events: Sequence[EventCandidate],
    gt_events: Sequence[EventCandidate],
    miou_threshold: float = 0.5,
) -> float:
    """Greedy per-category matching in start order: a prediction claims the
    first unmatched ground-truth event of its category with span IoU >= the
    threshold.  F1 = 2 * matches / (|pred| + |gt|); 1.0 when both lists are empty.
    """
    if not pred_events and not gt_events:
        return 1.0
    gt_by_cat: dict[str, list[EventCandidate]] = {}
    for e in sorted(gt_events, key=lambda e: (e.start, e.end, e.category_id)):
        gt_by_cat.setdefault(e.category_id, []).append(e)
    matched_flags = {cat: [False] * len(lst) for cat, lst in gt_by_cat.items()}
    matches = 0
    for e in sorted(pred_events, key=lambda e: (e.start, e.end, e.category_id)):
        pool = gt_by_cat.get(e.category_id, [])
        flags = matched_flags.get(e.category_id, [])
        for i, g in enumerate(pool):
            if flags[i]:
                continue
            if span_iou((e.start, e.end), (g.start, g.end)) >= miou_threshold:
                flags[i] = True
                matches += 1
                break
    return 2.0 * matches / (len(pred_events) + len(gt_events))


def ave_accuracy(
    pred_scores: np.ndarray,
    decisions: np.ndarray,
    gt_labels: Sequence[int | None],
) -> float:
    """Single-label per-segment accuracy, in [0, 100].

    The predicted label of a segment is the highest-scoring category among
    those with a positive decision (ties break to the lowest vocabulary index),
    or background (None) when no decision fired.
    """
    scores = np.asarray(pred_scores, dtype=np.float64)
    active = np.asarray(decisions).astype(bool)
    if scores.shape != active.shape:
        raise ValueError(f"shape mismatch: scores {scores.shape} vs decisions {active.shape}")
    t = scores.shape[0]
    if len(gt_labels) != t:
        raise ValueError(f"expected {t} ground-truth labels, got {len(gt_labels)}")
    correct = 0
    for i in range(t):
        row = np.where(active[i], scores[i], -np.inf)
        predicted: int | None = int(np.argmax(row)) if active[i].any() else None
        if predicted == gt_labels[i]:
            correct += 1
    return 100.0 * correct / t


def ground_truth_events(matrix: np.ndarray, category_ids: Sequence[str], modality: str) -> list[EventCandidate]:
    """Maximal runs of a binary label matrix as events."""
    out = []
    for col, cid in enumerate(category_ids):
        for start, end in binary_runs(np.asarray(matrix)[:, col]):
            out.append(EventCandidate(cid, start, end, modality))
    return out


def single_labels(av_matrix: np.ndarray) -> list[int | None]:
    """Collapse a binary matrix to one label per segment: the lowest active
    column index, or None when the row is empty."""
    labels: list[int | None] = []
    for row in np.asarray(av_matrix):
        hits = np.flatnonzero(row)
        labels.append(int(hits[0]) if hits.size else None)
    return labels


def _paint_scores(events: Sequence[EventCandidate], num_segments: int,
                  category_ids: Sequence[str]) -> np.ndarray:
    index = {cid: i for i, cid in enumerate(category_ids)}
    out = np.zeros((num_segments, len(category_ids)), dtype=np.float64)
    for e in events:
        if e.modality == "audio_visual" and e.category_id in index:
            out[e.start - 1:e.end, index[e.category_id]] = e.span_score
    return out


def evaluate_video(events: Sequence[EventCandidate], gt: GroundTruth) -> VideoMetrics:
    """Score one video's predicted events against its ground truth."""
    t, cats = gt.num_segments, gt.categories
    pred = {m: events_to_matrix(events, m, t, cats) for m in ("audio", "visual", "audio_visual")}
    gt_m = {
        "audio": gt.audio_labels,
        "visual": gt.visual_labels,
        "audio_visual": gt.audio_visual_labels(),
    }
    seg = {m: segment_f1(pred[m], gt_m[m]) for m in pred}

    pred_events = {m: [e for e in events if e.modality == m] for m in pred}
    gt_events = {m: ground_truth_events(gt_m[m], cats, m) for m in gt_m}
    evt = {m: event_f1(pred_events[m], gt_events[m]) for m in pred}

    union_seg = segment_f1(pred["audio"] | pred["visual"], gt_m["audio"] | gt_m["visual"])

    def tag(items: Sequence[EventCandidate], prefix: str) -> list[EventCandidate]:
        return [EventCandidate(f"{prefix}:{e.category_id}", e.start, e.end, e.modality,
                               e.span_score) for e in items]

    union_evt = event_f1(
        tag(pred_events["audio"], "a") + tag(pred_events["visual"], "v"),
        tag(gt_events["audio"], "a") + tag(gt_events["visual"], "v"),
    )

    ave = ave_accuracy(
        _paint_scores(events, t, cats),
        pred["audio_visual"],
        single_labels(gt_m["audio_visual"]),
    )

    modes = ("audio", "visual", "audio_visual")
    return VideoMetrics(
        video_id=gt.video_id,
        audio_segment=100.0 * seg["audio"],
        audio_event=100.0 * evt["audio"],
        visual_segment=100.0 * seg["visual"],
        visual_event=100.0 * evt["visual"],
        audio_visual_segment=100.0 * seg["audio_visual"],
        audio_visual_event=100.0 * evt["audio_visual"],
        type_at_av_segment=100.0 * sum(seg[m] for m in modes) / 3.0,
        type_at_av_event=100.0 * sum(evt[m] for m in modes) / 3.0,
        event_at_av_segment=100.0 * union_seg,
        event_at_av_event=100.0 * union_evt,
        ave_accuracy=ave,
    )


def aggregate_report(per_video: Sequence[VideoMetrics]) -> MetricsReport:
    """Unweighted means over videos; raises on an empty corpus."""
    if not per_video:
        raise ValueError("cannot aggregate an empty corpus")
    n = len(per_video)

    def mean(key: str) -> float:
        return sum(getattr(v, key) for v in per_video) / n

    return MetricsReport(
        **{key: mean(key) for key in METRIC_KEYS},
        ave_accuracy=mean("ave_accuracy"),
        num_videos=n,
        per_video=tuple(per_video),
    )


def evaluate_corpus(
    predictions: Mapping[str, Sequence[EventCandidate]],
    ground_truths: Mapping[str, GroundTruth],
) -> MetricsReport:
    """Evaluate aligned prediction and ground-truth collections, keyed by video id."""
    missing_gt = sorted(set(predictions) - set(ground_truths))
    missing_pred = sorted(set(ground_truths) - set(predictions))
    if missing_gt or missing_pred:
        raise ValueError(
            "video ids do not align: "
            f"missing ground truth for {missing_gt}, missing predictions for {missing_pred}"
        )
    per_video = [
        evaluate_video(predictions[vid], ground_truths[vid])
        for vid in sorted(ground_truths)
    ]
    return aggregate_report(per_video)


# --- Report output -----------------------------------------------------------


def report_to_dict(report: MetricsReport) -> dict[str, Any]:
    doc: dict[str, Any] = {"format_version": FORMAT_VERSION}
    for key in METRIC_KEYS:
        doc[key] = getattr(report, key)
    doc["ave_accuracy"] = report.ave_accuracy
    doc["num_videos"] = report.num_videos
    doc["per_video"] = [
        {f.name: getattr(v, f.name) for f in fields(VideoMetrics)}
        for v in report.per_video
    ]
    return doc


def write_report(report: MetricsReport, path: str | Path) -> None:
    Path(path).write_text(json.dumps(report_to_dict(report), indent=1) + "\n")


def write_report_csv(report: MetricsReport, path: str | Path) -> None:
    """Per-video breakdown plus a mean row, as delimited text for plotting."""
    columns = [f.name for f in fields(VideoMetrics)]
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(columns)
        for v in report.per_video:
            writer.writerow([getattr(v, c) for c in columns])
        writer.writerow(
            ["mean"] + [getattr(report, c) for c in columns[1:-1]] + [report.ave_accuracy]
        )


def format_report(report: MetricsReport) -> str:
    """Human-readable ten-metric table."""
    lines = [
        f"{'metric':<16}{'segment':>10}{'event':>10}",
        "-" * 36,
    ]
    rows = (
        ("audio", "audio_segment", "audio_event"),
        ("visual", "visual_segment", "visual_event"),
        ("audio_visual", "audio_visual_segment", "audio_visual_event"),
        ("type_at_av", "type_at_av_segment", "type_at_av_event"),
        ("event_at_av", "event_at_av_segment", "event_at_av_event"),
    )
    for label, skey, ekey in rows:
        lines.append(f"{label:<16}{getattr(report, skey):>10.2f}{getattr(report, ekey):>10.2f}")
    if report.ave_accuracy is not None:
        lines.append(f"{'ave_accuracy':<16}{report.ave_accuracy:>10.2f}")
    lines.append(f"videos: {report.num_videos}")
    return "\n".join(lines)
