"""TOML configuration for the command-line tools.

Sections mirror the code: [augmentation] feeds AugmentationParams,
[evaluation] feeds EvalConfig, [camera] the intrinsics model, and
[build] holds orchestration defaults. Unknown sections or keys are
rejected rather than ignored, so typos cannot silently fall back to
defaults. Command-line flags override file values, which override the
built-in defaults.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, fields

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .errors import ConfigError
from .metrics import EvalConfig
from .sampling import AugmentationParams


@dataclass
class CameraConfig:
    hfov_deg: float = 60.0
    near_plane: float = 0.5

    def validate(self) -> None:
        if not 0 < self.hfov_deg < 180:
            raise ConfigError("camera hfov_deg must be in (0, 180)")
        if self.near_plane <= 0:
            raise ConfigError("camera near_plane must be positive")


@dataclass
class BuildConfig:
    seed: int = 0
    ratio: float = 0.1
    source_fraction: float = 1.0
    jobs: int = 1
    target_count: int = 2048
    balanced: bool = False
    detail_tier: str = "standard"

    def validate(self) -> None:
        if self.jobs < 1:
            raise ConfigError("build jobs must be at least 1")
        if self.detail_tier not in ("low", "standard"):
            raise ConfigError("detail_tier must be 'low' or 'standard'")


@dataclass
class ToolConfig:
    augmentation: AugmentationParams = field(default_factory=AugmentationParams)
    evaluation: EvalConfig = field(default_factory=EvalConfig)
    camera: CameraConfig = field(default_factory=CameraConfig)
    build: BuildConfig = field(default_factory=BuildConfig)

    def validate(self) -> None:
        self.augmentation.validate()
        self.evaluation.validate()
        self.camera.validate()
        self.build.validate()

    def to_dict(self) -> dict:
        return {
            "augmentation": self.augmentation.to_dict(),
            "evaluation": {
                f.name: getattr(self.evaluation, f.name)
                for f in fields(EvalConfig)
            },
            "camera": {f.name: getattr(self.camera, f.name) for f in fields(CameraConfig)},
            "build": {f.name: getattr(self.build, f.name) for f in fields(BuildConfig)},
        }


def _build_section(cls, data: dict, section: str, tuple_keys=()):
    known = {f.name for f in fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(
            f"unknown key(s) in [{section}]: {', '.join(sorted(unknown))}"
        )
    kwargs = {
        k: tuple(v) if k in tuple_keys and isinstance(v, list) else v
        for k, v in data.items()
    }
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ConfigError(f"bad [{section}] section: {exc}") from None


def load_config(path: str | os.PathLike) -> ToolConfig:
    """Parse and validate a TOML config file."""
    with open(os.fspath(path), "rb") as fh:
        try:
            raw = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"invalid TOML in {os.fspath(path)!r}: {exc}") from None

    known_sections = {"augmentation", "evaluation", "camera", "build"}
    unknown = set(raw) - known_sections
    if unknown:
        raise ConfigError(f"unknown config section(s): {', '.join(sorted(unknown))}")

    cfg = ToolConfig(
        augmentation=_build_section(
            AugmentationParams, raw.get("augmentation", {}), "augmentation",
            tuple_keys=("light_count_range", "scale_jitter", "coverage_bounds",
                        "texture_rgb_shift_range"),
        ),
        evaluation=_build_section(EvalConfig, raw.get("evaluation", {}), "evaluation"),
        camera=_build_section(CameraConfig, raw.get("camera", {}), "camera"),
        build=_build_section(BuildConfig, raw.get("build", {}), "build"),
    )
    cfg.validate()
    return cfg
