import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from diagramforge.config import AppConfig
from diagramforge.gateway import ModelProfile
from diagramforge.sandbox import RasterImage
from diagramforge.types import DiagramCode, Language

FIXTURES = Path(__file__).parent / "fixtures"


def scripted(name: str, transcript: str, supports_images: bool = False) -> ModelProfile:
    return ModelProfile(
        name=name,
        endpoint_url=f"scripted:{FIXTURES / transcript}",
        model_id="scripted",
        supports_images=supports_images,
    )


@pytest.fixture
def app_config(tmp_path) -> AppConfig:
    cfg = AppConfig()
    cfg.models["code"] = scripted("code", "gen_code.jsonl")
    cfg.models["judge"] = scripted("judge", "judge_complete.jsonl")
    cfg.models["vision"] = scripted("vision", "vision_dot.jsonl", supports_images=True)
    return cfg


@pytest.fixture
def pipeline(app_config, tmp_path):
    from diagramforge.pipeline import Pipeline

    return Pipeline(app_config, tmp_path / "data")


# --- shared metric corpora -------------------------------------------------

_DOT_SNIPPETS = [
    "digraph g { a -> b; }",
    "digraph g { a -> b; b -> c; }",
    'digraph g { a [label="start"]; b [label="end"]; a -> b; }',
    'digraph g { a [label="start"]; b [label="stop"]; a -> b; }',
    "graph g { x -- y; y -- z; }",
    "graph g { x -- y; }",
    'digraph flow { rankdir=LR; n1 [shape=box]; n2 [shape=box]; n1 -> n2; }',
    'digraph flow { rankdir=TB; n1 [shape=box]; n2; n1 -> n2; }',
    "digraph d { a -> b [style=dashed]; }",
    "digraph d { a -> b [color=red]; }",
]

_LATEX_SNIPPETS = [
    "\\begin{tikzpicture}\\node (a) {A};\\end{tikzpicture}",
    "\\begin{tikzpicture}\\node (a) {A};\\node (b) {B};\\end{tikzpicture}",
    "\\begin{tikzpicture}\\node (a) {A};\\draw (a) -- (a);\\end{tikzpicture}",
    "\\begin{tikzpicture}\\node (x) {X};\\draw[->] (x) -- (x);\\end{tikzpicture}",
    "\\documentclass{standalone}\\begin{document}hello\\end{document}",
    "\\documentclass{standalone}\\begin{document}world\\end{document}",
]


def code_pairs() -> list[tuple[DiagramCode, DiagramCode]]:
    """24 hand-built code pairs across both languages."""
    pairs = []
    snippets = [(s, Language.DOT) for s in _DOT_SNIPPETS]
    snippets += [(s, Language.LATEX) for s in _LATEX_SNIPPETS]
    for i in range(0, len(snippets) - 1, 2):
        src_a, lang_a = snippets[i]
        src_b, _ = snippets[i + 1]
        pairs.append((DiagramCode(src_a, lang_a), DiagramCode(src_b, lang_a)))
    for src, lang in snippets:  # identity pairs
        pairs.append((DiagramCode(src, lang), DiagramCode(src, lang)))
    return pairs


def gray_image(arr: np.ndarray) -> RasterImage:
    arr = np.asarray(arr, dtype=np.uint8)
    return RasterImage(arr.shape[1], arr.shape[0], "gray", arr.tobytes())


def image_pairs() -> list[tuple[np.ndarray, np.ndarray]]:
    """12 small (<= 64 px) grayscale pairs for oracle equivalence."""
    rng = np.random.default_rng(7)
    pairs = []
    base = rng.integers(0, 256, size=(24, 24), dtype=np.uint8)
    pairs.append((base, base.copy()))
    flipped = base.copy()
    flipped[3, 3] = 255 - flipped[3, 3]
    pairs.append((base, flipped))
    pairs.append((np.zeros((16, 16), np.uint8), np.full((16, 16), 255, np.uint8)))
    pairs.append((np.full((20, 20), 128, np.uint8),
                  rng.integers(0, 256, size=(20, 20), dtype=np.uint8)))
    ramp = np.tile(np.arange(32, dtype=np.uint8) * 8, (32, 1))
    pairs.append((ramp, ramp.T.copy()))
    pairs.append((ramp, 255 - ramp))
    for _ in range(6):
        a = rng.integers(0, 256, size=(18, 26), dtype=np.uint8)
        noise = rng.integers(-20, 21, size=a.shape)
        b = np.clip(a.astype(int) + noise, 0, 255).astype(np.uint8)
        pairs.append((a, b))
    return pairs
