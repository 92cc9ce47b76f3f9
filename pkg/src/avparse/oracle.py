"""Naive reference implementation used to cross-check the engine.

Everything here is reimplemented with plain Python lists, loops, math.exp,
and a hand-rolled Gaussian elimination -- no code shared with the engine
modules -- so the two implementations can only agree by computing the same
thing.  Inputs are the plain-dict wire formats (bundle, ground-truth, config
documents), not engine objects.

This module trades speed for transparency on purpose; do not optimize it.
"""

from __future__ import annotations

import math
from typing import Any, Mapping, Sequence

SINGULAR_PIVOT = 1e-12

Matrix = list[list[float]]
Vector = list[float]


# --- scalar pieces -----------------------------------------------------------


def sigmoid(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def fuse_value(a: float, v: float, alpha: float) -> float:
    out = alpha * a + (1.0 - alpha) * v
    lo = a if a < v else v
    hi = a if a > v else v
    if out < lo:
        return lo
    if out > hi:
        return hi
    return out


def mean(values: Sequence[float]) -> float:
    total = 0.0
    for v in values:
        total += v
    return total / len(values)


def cosine(a: Sequence[float], b: Sequence[float]) -> float:
    dot = 0.0
    na = 0.0
    nb = 0.0
    for x, y in zip(a, b):
        dot += x * y
        na += x * x
        nb += y * y
    na = math.sqrt(na)
    nb = math.sqrt(nb)
    if na == 0.0 or nb == 0.0:
        return 0.0
    return dot / (na * nb)


# --- tiny dense linear algebra ------------------------------------------------


def mat_mul(a: Matrix, b: Matrix) -> Matrix:
    rows, inner, cols = len(a), len(b), len(b[0])
    out = [[0.0] * cols for _ in range(rows)]
    for i in range(rows):
        for k in range(inner):
            aik = a[i][k]
            for j in range(cols):
                out[i][j] += aik * b[k][j]
    return out


def gaussian_inverse(matrix: Matrix) -> Matrix | None:
    """Inverse by Gauss-Jordan elimination with partial pivoting; None when a
    pivot falls below SINGULAR_PIVOT."""
    k = len(matrix)
    aug = [list(row) + [1.0 if i == j else 0.0 for j in range(k)]
           for i, row in enumerate(matrix)]
    for col in range(k):
        pivot_row = col
        best = abs(aug[col][col])
        for r in range(col + 1, k):
            if abs(aug[r][col]) > best:
                best = abs(aug[r][col])
                pivot_row = r
        if best < SINGULAR_PIVOT:
            return None
        if pivot_row != col:
            aug[col], aug[pivot_row] = aug[pivot_row], aug[col]
        pivot = aug[col][col]
        for j in range(2 * k):
            aug[col][j] /= pivot
        for r in range(k):
            if r == col:
                continue
            factor = aug[r][col]
            if factor == 0.0:
                continue
            for j in range(2 * k):
                aug[r][j] -= factor * aug[col][j]
    return [row[k:] for row in aug]


def pseudo_inverse(matrix: Matrix) -> Matrix:
    """Moore-Penrose pseudo-inverse by Newton-Schulz iteration."""
    k = len(matrix)
    if all(v == 0.0 for row in matrix for v in row):
        return [[0.0] * k for _ in range(k)]
    norm_1 = max(sum(abs(matrix[i][j]) for i in range(k)) for j in range(k))
    norm_inf = max(sum(abs(v) for v in row) for row in matrix)
    scale = 1.0 / (norm_1 * norm_inf)
    x = [[matrix[j][i] * scale for j in range(k)] for i in range(k)]
    for _ in range(200):
        mx = mat_mul(matrix, x)
        nxt = [[2.0 * x[i][j] - sum(x[i][r] * mx[r][j] for r in range(k))
                for j in range(k)] for i in range(k)]
        delta = max(abs(nxt[i][j] - x[i][j]) for i in range(k) for j in range(k))
        x = nxt
        if delta < 1e-15:
            break
    return x


# --- pipeline -----------------------------------------------------------------


def _alpha_for(modality: str, config: Mapping[str, Any]) -> float:
    if modality == "audio":
        return 1.0
    if modality == "visual":
        return 0.0
    return float(config["alpha"])


def _override(config: Mapping[str, Any], base_key: str, modality: str) -> float:
    table = config.get(f"{base_key}_by_modality") or {}
    return float(table.get(modality, config[base_key]))


def _column_mean(matrix: Matrix, first_row: int, last_row: int) -> Vector:
    """Mean of rows first_row..last_row (0-based inclusive), per column."""
    cols = len(matrix[0])
    out = []
    for j in range(cols):
        total = 0.0
        for i in range(first_row, last_row + 1):
            total += matrix[i][j]
        out.append(total / (last_row - first_row + 1))
    return out


def run_pipeline(bundle: Mapping[str, Any], modality: str,
                 config: Mapping[str, Any]) -> dict[str, Any]:
    t = int(bundle["num_segments"])
    categories = [entry["id"] for entry in bundle["vocabulary"]]
    c = len(categories)
    alpha = _alpha_for(modality, config)
    audio = [list(map(float, row)) for row in bundle["audio_logits"]]
    visual = [list(map(float, row)) for row in bundle["visual_logits"]]
    features = bundle.get("visual_features")

    # Category selection from the video-level fused score.
    if config.get("use_class_selection", True):
        video_audio = (list(map(float, bundle["video_audio_logits"]))
                       if "video_audio_logits" in bundle else _column_mean(audio, 0, t - 1))
        video_visual = (list(map(float, bundle["video_visual_logits"]))
                        if "video_visual_logits" in bundle else _column_mean(visual, 0, t - 1))
        tau_f = _override(config, "tau_f", modality)
        selected = [j for j in range(c)
                    if fuse_value(sigmoid(video_audio[j]), sigmoid(video_visual[j]), alpha) > tau_f]
    else:
        selected = list(range(c))
    k = len(selected)

    fused = [[fuse_value(sigmoid(audio[i][j]), sigmoid(visual[i][j]), alpha)
              for j in selected] for i in range(t)]

    clamp_lo, clamp_hi = config.get("threshold_clamp", (0.0, 1.0))
    tau0 = float(config["tau0"])
    lam = float(config["lambda"])
    eps = float(config.get("epsilon_reg", 1e-6))
    use_dynamic = config.get("use_dynamic_thresholds", True)
    use_cosine = config.get("use_cosine_scale", True)

    tau = [tau0] * k
    tau1 = [tau0] * k
    z = [0] * k
    hist_scores: list[Vector] = []
    hist_decisions: list[list[int]] = []
    prev_feature: Vector | None = None
    traces = []
    decision_rows: list[list[int]] = []

    for idx in range(t):
        scores = fused[idx]
        feature = list(map(float, features[idx])) if features is not None else None
        can_update = use_dynamic and idx >= 1 and k > 0 and sum(z) > 0
        used_pinv = False
        if can_update:
            n = len(hist_scores)
            confusion = [[sum(hist_scores[i][r] * hist_decisions[i][col] for i in range(n)) / n
                          for col in range(k)] for r in range(k)]
            regularized = [[confusion[i][j] + (eps if i == j else 0.0) for j in range(k)]
                           for i in range(k)]
            inverse = gaussian_inverse(regularized)
            if inverse is None:
                inverse = pseudo_inverse(confusion)
                used_pinv = True
            if use_cosine and feature is not None and prev_feature is not None:
                scale = cosine(feature, prev_feature)
            else:
                scale = 1.0
            w = [sum(inverse[r][col] * scores[col] for col in range(k)) * scale
                 for r in range(k)]
            tau = [min(max(tau[i] - tau1[i] * math.exp(-lam * z[i]) * w[i], clamp_lo), clamp_hi)
                   for i in range(k)]
        else:
            confusion = [[0.0] * k for _ in range(k)]
            w = [0.0] * k
            scale = 1.0

        decisions = [1 if scores[i] > tau[i] else 0 for i in range(k)]
        traces.append({
            "confusion": confusion,
            "w_hat": w,
            "cosine": scale,
            "tau_after": list(tau),
            "decisions": decisions,
            "used_pinv": used_pinv,
            "updated": can_update,
        })
        decision_rows.append(decisions)
        z = [z[i] + decisions[i] for i in range(k)]
        hist_scores.append(list(scores))
        hist_decisions.append(decisions)
        prev_feature = feature

    full_decisions = [[0] * c for _ in range(t)]
    for i in range(t):
        for pos, j in enumerate(selected):
            full_decisions[i][j] = decision_rows[i][pos]

    # Maximal runs per selected category, then span confidence and refinement.
    tau_r = _override(config, "tau_r", modality)
    use_refinement = config.get("use_refinement", True)
    events = []
    for pos, j in enumerate(selected):
        start = None
        for i in range(t + 1):
            active = i < t and decision_rows[i][pos] == 1
            if active and start is None:
                start = i + 1
            elif not active and start is not None:
                end = i
                a_mean = _column_mean(audio, start - 1, end - 1)[j]
                v_mean = _column_mean(visual, start - 1, end - 1)[j]
                span_score = fuse_value(sigmoid(a_mean), sigmoid(v_mean), alpha)
                if not use_refinement or span_score > tau_r:
                    events.append({
                        "category_id": categories[j],
                        "modality": modality,
                        "start": start,
                        "end": end,
                        "span_score": span_score,
                    })
                start = None

    return {
        "selected": selected,
        "traces": traces,
        "decisions": full_decisions,
        "events": events,
    }


def parse_video(bundle: Mapping[str, Any], config: Mapping[str, Any]) -> dict[str, Any]:
    modalities = ("audio", "visual", "audio_visual")
    results = {m: run_pipeline(bundle, m, config) for m in modalities}
    events = sorted(
        (e for m in modalities for e in results[m]["events"]),
        key=lambda e: (e["modality"], e["category_id"], e["start"]),
    )
    return {
        "video_id": bundle["video_id"],
        "selected": {m: results[m]["selected"] for m in modalities},
        "traces": {m: results[m]["traces"] for m in modalities},
        "decisions": {m: results[m]["decisions"] for m in modalities},
        "events": events,
    }


# --- metrics ------------------------------------------------------------------


def _events_to_matrix(events: Sequence[Mapping[str, Any]], modality: str,
                      t: int, categories: Sequence[str]) -> list[list[int]]:
    index = {cid: i for i, cid in enumerate(categories)}
    out = [[0] * len(categories) for _ in range(t)]
    for e in events:
        if e["modality"] != modality:
            continue
        j = index[e["category_id"]]
        for i in range(e["start"] - 1, e["end"]):
            out[i][j] = 1
    return out


def _matrix_runs(matrix: Sequence[Sequence[int]], categories: Sequence[str]) -> list[tuple[str, int, int]]:
    t = len(matrix)
    out = []
    for j, cid in enumerate(categories):
        start = None
        for i in range(t + 1):
            active = i < t and matrix[i][j] == 1
            if active and start is None:
                start = i + 1
            elif not active and start is not None:
                out.append((cid, start, i))
                start = None
    return out


def naive_segment_f1(pred: Sequence[Sequence[int]], gt: Sequence[Sequence[int]]) -> float:
    tp = fp = fn = 0
    for prow, grow in zip(pred, gt):
        for p, g in zip(prow, grow):
            if p and g:
                tp += 1
            elif p:
                fp += 1
            elif g:
                fn += 1
    if tp == 0 and fp == 0 and fn == 0:
        return 1.0
    return 2.0 * tp / (2.0 * tp + fp + fn)


def naive_event_f1(pred: Sequence[tuple[str, int, int]],
                   gt: Sequence[tuple[str, int, int]],
                   miou_threshold: float = 0.5) -> float:
    if not pred and not gt:
        return 1.0
    gt_sorted = sorted(gt, key=lambda e: (e[1], e[2], e[0]))
    taken = [False] * len(gt_sorted)
    matches = 0
    for cat, start, end in sorted(pred, key=lambda e: (e[1], e[2], e[0])):
        for i, (gcat, gstart, gend) in enumerate(gt_sorted):
            if taken[i] or gcat != cat:
                continue
            inter = min(end, gend) - max(start, gstart) + 1
            if inter <= 0:
                continue
            union = (end - start + 1) + (gend - gstart + 1) - inter
            if inter / union >= miou_threshold:
                taken[i] = True
                matches += 1
                break
    return 2.0 * matches / (len(pred) + len(gt))


def naive_evaluate_video(events: Sequence[Mapping[str, Any]],
                         gt_doc: Mapping[str, Any]) -> dict[str, float]:
    t = int(gt_doc["num_segments"])
    categories = list(gt_doc["categories"])
    gt_audio = [list(map(int, row)) for row in gt_doc["audio_labels"]]
    gt_visual = [list(map(int, row)) for row in gt_doc["visual_labels"]]
    gt_av = [[gt_audio[i][j] & gt_visual[i][j] for j in range(len(categories))]
             for i in range(t)]
    gt_m = {"audio": gt_audio, "visual": gt_visual, "audio_visual": gt_av}

    pred_m = {m: _events_to_matrix(events, m, t, categories)
              for m in ("audio", "visual", "audio_visual")}
    seg = {m: naive_segment_f1(pred_m[m], gt_m[m]) for m in pred_m}

    pred_events = {m: [(e["category_id"], e["start"], e["end"])
                       for e in events if e["modality"] == m] for m in pred_m}
    gt_events = {m: _matrix_runs(gt_m[m], categories) for m in gt_m}
    evt = {m: naive_event_f1(pred_events[m], gt_events[m]) for m in pred_m}

    union_pred = [[1 if (pred_m["audio"][i][j] or pred_m["visual"][i][j]) else 0
                   for j in range(len(categories))] for i in range(t)]
    union_gt = [[1 if (gt_audio[i][j] or gt_visual[i][j]) else 0
                 for j in range(len(categories))] for i in range(t)]
    union_seg = naive_segment_f1(union_pred, union_gt)
    union_evt = naive_event_f1(
        [("a:" + c, s, e) for c, s, e in pred_events["audio"]]
        + [("v:" + c, s, e) for c, s, e in pred_events["visual"]],
        [("a:" + c, s, e) for c, s, e in gt_events["audio"]]
        + [("v:" + c, s, e) for c, s, e in gt_events["visual"]],
    )

    # Single-label accuracy from the audio-visual stream.
    score_map = [[0.0] * len(categories) for _ in range(t)]
    index = {cid: i for i, cid in enumerate(categories)}
    for e in events:
        if e["modality"] == "audio_visual":
            j = index[e["category_id"]]
            for i in range(e["start"] - 1, e["end"]):
                score_map[i][j] = float(e["span_score"])
    correct = 0
    for i in range(t):
        predicted = None
        best = None
        for j in range(len(categories)):
            if pred_m["audio_visual"][i][j] and (best is None or score_map[i][j] > best):
                best = score_map[i][j]
                predicted = j
        actual = None
        for j in range(len(categories)):
            if gt_av[i][j]:
                actual = j
                break
        if predicted == actual:
            correct += 1
    ave = 100.0 * correct / t

    modes = ("audio", "visual", "audio_visual")
    return {
        "audio_segment": 100.0 * seg["audio"],
        "audio_event": 100.0 * evt["audio"],
        "visual_segment": 100.0 * seg["visual"],
        "visual_event": 100.0 * evt["visual"],
        "audio_visual_segment": 100.0 * seg["audio_visual"],
        "audio_visual_event": 100.0 * evt["audio_visual"],
        "type_at_av_segment": 100.0 * sum(seg[m] for m in modes) / 3.0,
        "type_at_av_event": 100.0 * sum(evt[m] for m in modes) / 3.0,
        "event_at_av_segment": 100.0 * union_seg,
        "event_at_av_event": 100.0 * union_evt,
        "ave_accuracy": ave,
    }


def naive_report(predictions: Mapping[str, Sequence[Mapping[str, Any]]],
                 gt_docs: Mapping[str, Mapping[str, Any]]) -> dict[str, float]:
    ids = sorted(gt_docs)
    per_video = [naive_evaluate_video(predictions[vid], gt_docs[vid]) for vid in ids]
    keys = per_video[0].keys()
    out = {}
    for key in keys:
        total = 0.0
        for row in per_video:
            total += row[key]
        out[key] = total / len(per_video)
    out["num_videos"] = len(per_video)
    return out
