"""Run configuration: model profiles per agent role, sandbox and harness knobs.

Loaded from a TOML file with [models.<role>], [sandbox], [harness] and
[pipeline] sections; anything omitted falls back to the defaults here.
"""
from __future__ import annotations

import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .gateway import ModelProfile

DEFAULT_EDIT_KEYWORDS = [
    "change", "modify", "replace", "remove", "add", "recolor", "dashed", "rename",
]

ABLATIONS = ("full", "no_judge", "no_compiler", "neither")


@dataclass
class SandboxConfig:
    timeout_s: float = 60.0
    dpi: int = 150
    max_workers: int = 4
    toolchain: str = "auto"  # auto | system | bundled


@dataclass
class HarnessConfig:
    max_rounds: int = 3
    parallelism: int = 1
    ablation: str = "full"
    truncation_tokens: int = 8192
    seed_label: str = "default"
    pass_stage: str = "final"  # final (post-check) | first (raw first attempt)

    def __post_init__(self):
        if self.ablation not in ABLATIONS:
            raise ValueError(f"unknown ablation {self.ablation!r}")
        if self.pass_stage not in ("final", "first"):
            raise ValueError(f"unknown pass_stage {self.pass_stage!r}")

    @property
    def judge_enabled(self) -> bool:
        return self.ablation in ("full", "no_compiler")

    @property
    def compiler_loop_enabled(self) -> bool:
        return self.ablation in ("full", "no_judge")

    @property
    def effective_max_rounds(self) -> int:
        return self.max_rounds if self.compiler_loop_enabled else 1


@dataclass
class PipelineConfig:
    edit_keywords: list[str] = field(default_factory=lambda: list(DEFAULT_EDIT_KEYWORDS))
    complete_min_tokens: int = 120
    strict_routing: bool = False


@dataclass
class AppConfig:
    models: dict[str, ModelProfile] = field(default_factory=dict)
    sandbox: SandboxConfig = field(default_factory=SandboxConfig)
    harness: HarnessConfig = field(default_factory=HarnessConfig)
    pipeline: PipelineConfig = field(default_factory=PipelineConfig)

    def profile(self, role: str) -> Optional[ModelProfile]:
        return self.models.get(role)

    def require_profile(self, role: str) -> ModelProfile:
        profile = self.models.get(role)
        if profile is None:
            raise KeyError(f"no [models.{role}] profile configured")
        return profile


def _profile_from_table(role: str, table: dict) -> ModelProfile:
    return ModelProfile(
        name=table.get("name", role),
        endpoint_url=table["endpoint_url"],
        model_id=table.get("model_id", ""),
        temperature=float(table.get("temperature", 0.0)),
        max_output_tokens=int(table.get("max_output_tokens", 4096)),
        timeout_s=float(table.get("timeout_s", 60.0)),
        retries=int(table.get("retries", 2)),
        supports_images=bool(table.get("supports_images", role == "vision")),
    )


def load_config(path: Path | str) -> AppConfig:
    with open(path, "rb") as fh:
        data = tomllib.load(fh)
    cfg = AppConfig()
    for role, table in data.get("models", {}).items():
        cfg.models[role] = _profile_from_table(role, table)
    sb = data.get("sandbox", {})
    cfg.sandbox = SandboxConfig(
        timeout_s=float(sb.get("timeout_s", 60.0)),
        dpi=int(sb.get("dpi", 150)),
        max_workers=int(sb.get("max_workers", 4)),
        toolchain=sb.get("toolchain", "auto"),
    )
    hr = data.get("harness", {})
    cfg.harness = HarnessConfig(
        max_rounds=int(hr.get("max_rounds", 3)),
        parallelism=int(hr.get("parallelism", 1)),
        ablation=hr.get("ablation", "full"),
        truncation_tokens=int(hr.get("truncation_tokens", 8192)),
        seed_label=hr.get("seed_label", "default"),
        pass_stage=hr.get("pass_stage", "final"),
    )
    pl = data.get("pipeline", {})
    cfg.pipeline = PipelineConfig(
        edit_keywords=list(pl.get("edit_keywords", DEFAULT_EDIT_KEYWORDS)),
        complete_min_tokens=int(pl.get("complete_min_tokens", 120)),
        strict_routing=bool(pl.get("strict_routing", False)),
    )
    return cfg
