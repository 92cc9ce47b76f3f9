"""Score-bundle data model: per-video similarity logits, vocabulary, ground truth.

Bundles carry raw (pre-sigmoid) logits.  The sigmoid is applied inside the
engine, and all pooling (video-level fallback, span refinement) happens in
logit space before the sigmoid, so there is exactly one place where scores
become probabilities.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Mapping

import numpy as np

FORMAT_VERSION = 1


class BundleError(ValueError):
    """A bundle or ground-truth document violates the schema or an invariant.

    Messages always name the offending field, and the row/column when the
    problem is a specific matrix entry.
    """


@dataclass(frozen=True)
class Category:
    id: str
    audio_prompt: str = ""
    visual_prompt: str = ""


@dataclass(frozen=True)
class CategoryVocabulary:
    """Ordered category list; the order is the column order of every score matrix."""

    entries: tuple[Category, ...]

    def __post_init__(self) -> None:
        if not self.entries:
            raise BundleError("vocabulary: must not be empty")
        ids = [c.id for c in self.entries]
        if len(set(ids)) != len(ids):
            dupes = sorted({i for i in ids if ids.count(i) > 1})
            raise BundleError(f"vocabulary: duplicate category ids {dupes}")

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(c.id for c in self.entries)

    def index_of(self, category_id: str) -> int:
        for i, c in enumerate(self.entries):
            if c.id == category_id:
                return i
        raise KeyError(category_id)

    @classmethod
    def from_ids(cls, ids: Iterable[str]) -> "CategoryVocabulary":
        return cls(tuple(Category(id=i) for i in ids))


def _freeze(arr: np.ndarray) -> np.ndarray:
    out = np.asarray(arr, dtype=np.float64)
    out.setflags(write=False)
    return out


def _check_finite(arr: np.ndarray, name: str) -> None:
    bad = ~np.isfinite(arr)
    if bad.any():
        idx = tuple(int(i) for i in np.argwhere(bad)[0])
        coord = "".join(f"[{i}]" for i in idx)
        raise BundleError(f"{name}{coord}: non-finite value {arr[idx]!r}")


def _check_matrix(arr: np.ndarray, name: str, rows: int, cols: int) -> None:
    if arr.ndim != 2 or arr.shape != (rows, cols):
        raise BundleError(
            f"{name}: expected shape {rows}x{cols}, got {'x'.join(map(str, arr.shape))}"
        )
    _check_finite(arr, name)


@dataclass(frozen=True)
class ScoreBundle:
    """Everything the engine needs about one video, in vocabulary column order."""

    video_id: str
    num_segments: int
    vocabulary: CategoryVocabulary
    audio_logits: np.ndarray  # T x |C|
    visual_logits: np.ndarray  # T x |C|
    video_audio_logits: np.ndarray | None = None  # |C|
    video_visual_logits: np.ndarray | None = None  # |C|
    visual_features: np.ndarray | None = None  # T x D

    def __post_init__(self) -> None:
        if self.num_segments < 1:
            raise BundleError(f"num_segments: must be >= 1, got {self.num_segments}")
        t, c = self.num_segments, len(self.vocabulary)
        object.__setattr__(self, "audio_logits", _freeze(self.audio_logits))
        object.__setattr__(self, "visual_logits", _freeze(self.visual_logits))
        _check_matrix(self.audio_logits, "audio_logits", t, c)
        _check_matrix(self.visual_logits, "visual_logits", t, c)
        for name in ("video_audio_logits", "video_visual_logits"):
            vec = getattr(self, name)
            if vec is None:
                continue
            vec = _freeze(vec)
            object.__setattr__(self, name, vec)
            if vec.ndim != 1 or vec.shape[0] != c:
                raise BundleError(f"{name}: expected {c} entries, got shape {vec.shape}")
            _check_finite(vec, name)
        if self.visual_features is not None:
            feats = _freeze(self.visual_features)
            object.__setattr__(self, "visual_features", feats)
            if feats.ndim != 2 or feats.shape[0] != t or feats.shape[1] < 1:
                raise BundleError(
                    f"visual_features: expected {t} rows of constant dimension >= 1, "
                    f"got shape {'x'.join(map(str, feats.shape))}"
                )
            _check_finite(feats, "visual_features")

    @property
    def feature_dim(self) -> int | None:
        return None if self.visual_features is None else int(self.visual_features.shape[1])


@dataclass(frozen=True)
class GroundTruth:
    """Per-segment binary labels; the audio-visual label is the AND of the two."""

    video_id: str
    num_segments: int
    categories: tuple[str, ...]
    audio_labels: np.ndarray  # T x |C| in {0,1}
    visual_labels: np.ndarray

    def __post_init__(self) -> None:
        if self.num_segments < 1:
            raise BundleError(f"num_segments: must be >= 1, got {self.num_segments}")
        if not self.categories:
            raise BundleError("categories: must not be empty")
        t, c = self.num_segments, len(self.categories)
        for name in ("audio_labels", "visual_labels"):
            arr = np.asarray(getattr(self, name))
            if arr.ndim != 2 or arr.shape != (t, c):
                raise BundleError(
                    f"{name}: expected shape {t}x{c}, got {'x'.join(map(str, arr.shape))}"
                )
            if not np.isin(arr, (0, 1)).all():
                idx = tuple(int(i) for i in np.argwhere(~np.isin(arr, (0, 1)))[0])
                raise BundleError(
                    f"{name}[{idx[0]}][{idx[1]}]: entries must be 0 or 1"
                )
            frozen = arr.astype(np.uint8)
            frozen.setflags(write=False)
            object.__setattr__(self, name, frozen)

    def audio_visual_labels(self) -> np.ndarray:
        return self.audio_labels & self.visual_labels


def sigmoid_scores(logits: np.ndarray) -> np.ndarray:
    """Elementwise 1 / (1 + exp(-x)), stable for large |x|."""
    x = np.asarray(logits, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def pool_video_level(bundle: ScoreBundle, modality: str) -> np.ndarray:
    """Video-level logits: the stored vector if present, else the segment mean."""
    if modality == "audio":
        stored, segments = bundle.video_audio_logits, bundle.audio_logits
    elif modality == "visual":
        stored, segments = bundle.video_visual_logits, bundle.visual_logits
    else:
        raise ValueError(f"modality must be 'audio' or 'visual', got {modality!r}")
    if stored is not None:
        return stored
    return segments.mean(axis=0)


def pool_span(logits: np.ndarray, start: int, end: int) -> np.ndarray:
    """Mean of rows start..end (1-based, inclusive) in logit space."""
    t = logits.shape[0]
    if not 1 <= start <= end <= t:
        raise ValueError(f"span [{start}, {end}] out of range for {t} segments")
    return logits[start - 1:end].mean(axis=0)


# --- File formats -----------------------------------------------------------
#
# Bundle document: {"format_version": 1, "video_id", "num_segments",
#   "vocabulary": [{"id", "audio_prompt", "visual_prompt"}, ...],
#   "audio_logits": [[...]], "visual_logits": [[...]],
#   optional "video_audio_logits", "video_visual_logits", "visual_features"}
# Optional fields are omitted, never null.


def _require(doc: Mapping[str, Any], key: str, path: str) -> Any:
    if key not in doc:
        raise BundleError(f"{path}{key}: missing required field")
    return doc[key]


def _as_matrix(value: Any, name: str) -> np.ndarray:
    if not isinstance(value, list) or not all(isinstance(r, list) for r in value):
        raise BundleError(f"{name}: must be a nested array of numbers")
    widths = {len(r) for r in value}
    if len(widths) > 1:
        raise BundleError(f"{name}: rows have inconsistent lengths {sorted(widths)}")
    for i, row in enumerate(value):
        for j, cell in enumerate(row):
            if not isinstance(cell, (int, float)) or isinstance(cell, bool):
                raise BundleError(f"{name}[{i}][{j}]: expected a number, got {cell!r}")
    return np.asarray(value, dtype=np.float64)


def _as_vector(value: Any, name: str) -> np.ndarray:
    if not isinstance(value, list):
        raise BundleError(f"{name}: must be an array of numbers")
    for i, cell in enumerate(value):
        if not isinstance(cell, (int, float)) or isinstance(cell, bool):
            raise BundleError(f"{name}[{i}]: expected a number, got {cell!r}")
    return np.asarray(value, dtype=np.float64)


def _check_version(doc: Mapping[str, Any], path: str) -> None:
    version = _require(doc, "format_version", path)
    if version != FORMAT_VERSION:
        raise BundleError(
            f"{path}format_version: expected {FORMAT_VERSION}, got {version!r}"
        )


def _load_json(path: str | Path) -> Any:
    p = Path(path)
    if not p.exists():
        raise BundleError(f"{p}: file not found")
    try:
        return json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise BundleError(f"{p}: not valid JSON ({exc})") from exc


def bundle_from_dict(doc: Mapping[str, Any]) -> ScoreBundle:
    if not isinstance(doc, Mapping):
        raise BundleError("bundle document must be a JSON object")
    _check_version(doc, "")
    vocab_raw = _require(doc, "vocabulary", "")
    if not isinstance(vocab_raw, list):
        raise BundleError("vocabulary: must be an array of category objects")
    entries = []
    for i, item in enumerate(vocab_raw):
        if not isinstance(item, Mapping) or "id" not in item:
            raise BundleError(f"vocabulary[{i}]: expected an object with an 'id'")
        entries.append(Category(
            id=str(item["id"]),
            audio_prompt=str(item.get("audio_prompt", "")),
            visual_prompt=str(item.get("visual_prompt", "")),
        ))
    vocabulary = CategoryVocabulary(tuple(entries))

    kwargs: dict[str, Any] = {}
    for name in ("video_audio_logits", "video_visual_logits"):
        if name in doc:
            kwargs[name] = _as_vector(doc[name], name)
    if "visual_features" in doc:
        kwargs["visual_features"] = _as_matrix(doc["visual_features"], "visual_features")

    return ScoreBundle(
        video_id=str(_require(doc, "video_id", "")),
        num_segments=int(_require(doc, "num_segments", "")),
        vocabulary=vocabulary,
        audio_logits=_as_matrix(_require(doc, "audio_logits", ""), "audio_logits"),
        visual_logits=_as_matrix(_require(doc, "visual_logits", ""), "visual_logits"),
        **kwargs,
    )


def bundle_to_dict(bundle: ScoreBundle) -> dict[str, Any]:
    doc: dict[str, Any] = {
        "format_version": FORMAT_VERSION,
        "video_id": bundle.video_id,
        "num_segments": bundle.num_segments,
        "vocabulary": [
            {"id": c.id, "audio_prompt": c.audio_prompt, "visual_prompt": c.visual_prompt}
            for c in bundle.vocabulary.entries
        ],
        "audio_logits": bundle.audio_logits.tolist(),
        "visual_logits": bundle.visual_logits.tolist(),
    }
    if bundle.video_audio_logits is not None:
        doc["video_audio_logits"] = bundle.video_audio_logits.tolist()
    if bundle.video_visual_logits is not None:
        doc["video_visual_logits"] = bundle.video_visual_logits.tolist()
    if bundle.visual_features is not None:
        doc["visual_features"] = bundle.visual_features.tolist()
    return doc


def load_bundle(path: str | Path) -> ScoreBundle:
    """Load and fully validate one score-bundle file."""
    return bundle_from_dict(_load_json(path))


def write_bundle(bundle: ScoreBundle, path: str | Path) -> None:
    Path(path).write_text(json.dumps(bundle_to_dict(bundle), indent=1) + "\n")


def ground_truth_from_dict(doc: Mapping[str, Any]) -> GroundTruth:
    if not isinstance(doc, Mapping):
        raise BundleError("ground-truth document must be a JSON object")
    _check_version(doc, "")
    categories = _require(doc, "categories", "")
    if not isinstance(categories, list) or not all(isinstance(c, str) for c in categories):
        raise BundleError("categories: must be an array of id strings")
    return GroundTruth(
        video_id=str(_require(doc, "video_id", "")),
        num_segments=int(_require(doc, "num_segments", "")),
        categories=tuple(categories),
        audio_labels=_as_matrix(_require(doc, "audio_labels", ""), "audio_labels"),
        visual_labels=_as_matrix(_require(doc, "visual_labels", ""), "visual_labels"),
    )


def ground_truth_to_dict(gt: GroundTruth) -> dict[str, Any]:
    return {
        "format_version": FORMAT_VERSION,
        "video_id": gt.video_id,
        "num_segments": gt.num_segments,
        "categories": list(gt.categories),
        "audio_labels": gt.audio_labels.tolist(),
        "visual_labels": gt.visual_labels.tolist(),
    }


def load_ground_truth(path: str | Path) -> GroundTruth:
    return ground_truth_from_dict(_load_json(path))


def write_ground_truth(gt: GroundTruth, path: str | Path) -> None:
    Path(path).write_text(json.dumps(ground_truth_to_dict(gt), indent=1) + "\n")
