"""Engine configuration: fusion weight, thresholds, decay rate, ablation toggles."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Mapping

MODALITIES = ("audio", "visual", "audio_visual")


class ConfigError(ValueError):
    """A configuration value is outside its legal range."""


@dataclass(frozen=True)
class EngineConfig:
    """Every scalar the engine tunes plus the four ablation toggles.

    Defaults are the single-backbone tuning; the two-backbone variant is
    shipped as ``CLIP_CLAP_PRESET``.  ``lambda_`` is spelled with a trailing
    underscore only because of the Python keyword; config files use "lambda".
    """

    alpha: float = 0.5
    tau0: float = 0.75
    tau_f: float = 0.55
    tau_r: float = 0.75
    lambda_: float = 2.5
    epsilon_reg: float = 1e-6
    threshold_clamp: tuple[float, float] = (0.0, 1.0)
    use_cosine_scale: bool = True
    use_dynamic_thresholds: bool = True
    use_refinement: bool = True
    use_class_selection: bool = True
    # Optional per-pipeline overrides; the shared tau_f / tau_r apply otherwise.
    tau_f_by_modality: Mapping[str, float] = field(default_factory=dict)
    tau_r_by_modality: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigError(f"alpha must be in [0, 1], got {self.alpha}")
        if not 0.0 < self.tau0 <= 1.0:
            raise ConfigError(f"tau0 must be in (0, 1], got {self.tau0}")
        if not 0.0 <= self.tau_f < 1.0:
            raise ConfigError(f"tau_f must be in [0, 1), got {self.tau_f}")
        if not 0.0 <= self.tau_r < 1.0:
            raise ConfigError(f"tau_r must be in [0, 1), got {self.tau_r}")
        if self.lambda_ < 0.0:
            raise ConfigError(f"lambda must be >= 0, got {self.lambda_}")
        if self.epsilon_reg <= 0.0:
            raise ConfigError(f"epsilon_reg must be > 0, got {self.epsilon_reg}")
        lo, hi = self.threshold_clamp
        if not (0.0 <= lo < hi <= 1.0):
            raise ConfigError(
                f"threshold_clamp must satisfy 0 <= lo < hi <= 1, got [{lo}, {hi}]"
            )
        for name, table in (("tau_f", self.tau_f_by_modality),
                            ("tau_r", self.tau_r_by_modality)):
            for modality, value in table.items():
                if modality not in MODALITIES:
                    raise ConfigError(f"unknown modality {modality!r} in {name} override")
                if not 0.0 <= value < 1.0:
                    raise ConfigError(f"{name} override for {modality} out of range: {value}")

    def tau_f_for(self, modality: str) -> float:
        return self.tau_f_by_modality.get(modality, self.tau_f)

    def tau_r_for(self, modality: str) -> float:
        return self.tau_r_by_modality.get(modality, self.tau_r)

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {}
        for f in fields(self):
            key = "lambda" if f.name == "lambda_" else f.name
            value = getattr(self, f.name)
            if isinstance(value, tuple):
                value = list(value)
            elif isinstance(value, Mapping):
                value = dict(value)
            out[key] = value
        return out

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "EngineConfig":
        known = {("lambda" if f.name == "lambda_" else f.name): f.name for f in fields(cls)}
        kwargs: dict[str, Any] = {}
        for key, value in data.items():
            if key not in known:
                raise ConfigError(f"unknown config field {key!r}")
            name = known[key]
            if name == "threshold_clamp":
                value = tuple(value)
            kwargs[name] = value
        return cls(**kwargs)

    @classmethod
    def from_file(cls, path: str | Path) -> "EngineConfig":
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: not valid JSON ({exc})") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: config document must be a JSON object")
        return cls.from_dict(data)

    def with_toggles_off(self, *names: str) -> "EngineConfig":
        """Return a copy with the given use_* toggles disabled."""
        updates = {}
        for name in names:
            if not name.startswith("use_") or not hasattr(self, name):
                raise ConfigError(f"unknown toggle {name!r}")
            updates[name] = False
        return replace(self, **updates)


DEFAULT_CONFIG = EngineConfig()

# Two-backbone tuning (separate image and audio encoders).
CLIP_CLAP_PRESET = EngineConfig(alpha=0.45, tau_f=0.5, lambda_=1.0)

PRESETS: dict[str, EngineConfig] = {
    "default": DEFAULT_CONFIG,
    "clip_clap": CLIP_CLAP_PRESET,
}
