"""TOML config loading and ablation semantics."""
import pytest

from diagramforge.config import AppConfig, HarnessConfig, load_config

TOML = """
[models.code]
endpoint_url = "scripted:/tmp/code.jsonl"
model_id = "local-7b"
temperature = 0.2

[models.vision]
endpoint_url = "https://api.example"
model_id = "vision-7b"

[sandbox]
timeout_s = 30
dpi = 96
toolchain = "bundled"

[harness]
max_rounds = 4
ablation = "no_judge"
parallelism = 2

[pipeline]
edit_keywords = ["tweak"]
strict_routing = true
"""


class TestLoadConfig:
    def test_full_roundtrip(self, tmp_path):
        path = tmp_path / "cfg.toml"
        path.write_text(TOML)
        cfg = load_config(path)
        assert cfg.models["code"].model_id == "local-7b"
        assert cfg.models["code"].temperature == 0.2
        assert cfg.models["vision"].supports_images  # vision role default
        assert not cfg.models["code"].supports_images
        assert cfg.sandbox.timeout_s == 30.0
        assert cfg.sandbox.toolchain == "bundled"
        assert cfg.harness.max_rounds == 4
        assert cfg.harness.ablation == "no_judge"
        assert cfg.pipeline.edit_keywords == ["tweak"]
        assert cfg.pipeline.strict_routing

    def test_empty_file_gives_defaults(self, tmp_path):
        path = tmp_path / "cfg.toml"
        path.write_text("")
        cfg = load_config(path)
        assert cfg.harness.ablation == "full"
        assert cfg.sandbox.dpi == 150
        assert cfg.models == {}

    def test_unknown_ablation_rejected(self, tmp_path):
        path = tmp_path / "cfg.toml"
        path.write_text('[harness]\nablation = "bogus"\n')
        with pytest.raises(ValueError):
            load_config(path)


class TestAblationSemantics:
    @pytest.mark.parametrize("ablation,judge,loop,rounds", [
        ("full", True, True, 3),
        ("no_judge", False, True, 3),
        ("no_compiler", True, False, 1),
        ("neither", False, False, 1),
    ])
    def test_arms(self, ablation, judge, loop, rounds):
        hc = HarnessConfig(ablation=ablation)
        assert hc.judge_enabled is judge
        assert hc.compiler_loop_enabled is loop
        assert hc.effective_max_rounds == rounds

    def test_bad_pass_stage(self):
        with pytest.raises(ValueError):
            HarnessConfig(pass_stage="middle")


class TestProfiles:
    def test_require_profile_missing(self):
        with pytest.raises(KeyError):
            AppConfig().require_profile("code")
